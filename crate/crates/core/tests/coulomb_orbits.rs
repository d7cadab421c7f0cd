use relcentral::coulomb::{
    apsidal_precession, fit_closed_form, perihelion_state, rl_components_and_invariant, runge_lenz_vector, ClosedFormOrbit,
    EMPoint,
};
use relcentral::dynamics::{integrate, IntegratorConfig, Trajectory};
use relcentral::physics::{lorentz_gamma, PhaseState, PhysicalParams, Potential, Vec2};
use relcentral::Error;

fn unit() -> PhysicalParams {
    PhysicalParams::default()
}

fn coulomb() -> Potential {
    Potential::coulomb(1.0).unwrap()
}

// Start at rest in the radial direction at radius 2 with angular momentum ell,
// stopping well before any collision.
fn orbit_from(ell: f64, t_end: f64) -> Trajectory {
    let s = PhaseState::new(Vec2::new(2.0, 0.0), Vec2::new(0.0, ell / 2.0)).unwrap();
    let full = integrate(&s, (0.0, t_end), &coulomb(), &unit(), &IntegratorConfig::default()).unwrap();
    if !full.collided() {
        return full;
    }
    let t_c = full.t_end();
    integrate(&s, (0.0, 0.8 * t_c), &coulomb(), &unit(), &IntegratorConfig::default()).unwrap()
}

#[test]
fn invariant_in_every_regime() {
    // sigma^2 > 0, = 0 and < 0
    for ell in [2.0, 1.0, 0.5] {
        let traj = orbit_from(ell, 50.0);
        let rep = rl_components_and_invariant(&traj, 1.0, 0.002).unwrap();
        let scale = rep.invariant0.abs().max(1.0);
        assert!(rep.invariant_drift < 1e-8 * scale, "ell = {ell}: drift {}", rep.invariant_drift);
        assert!(rep.crg_residual < 1e-9, "ell = {ell}: {}", rep.crg_residual);
    }
}

#[test]
fn negative_orientation_rejected() {
    let traj = orbit_from(2.0, 10.0);
    let s = traj.states[0].reflected();
    let mirrored = integrate(&s, (0.0, 10.0), &coulomb(), &unit(), &IntegratorConfig::default()).unwrap();
    assert!(matches!(rl_components_and_invariant(&mirrored, 1.0, 0.01), Err(Error::Orientation { .. })));
}

#[test]
fn runge_lenz_rate_along_trajectory() {
    // dR/dt = -m k (d gamma/dt) q/|q|
    let p = unit();
    let traj = orbit_from(1.7, 30.0);
    let dt = 1e-3;
    let mut worst: f64 = 0.0;
    for i in 1..20 {
        let t = 1.4 * i as f64;
        let (a, b) = (traj.eval(t - dt).unwrap(), traj.eval(t + dt).unwrap());
        let s = traj.eval(t).unwrap();
        let dr = (runge_lenz_vector(&b, 1.0, &p).unwrap() - runge_lenz_vector(&a, 1.0, &p).unwrap()) / (2.0 * dt);
        let dg = (lorentz_gamma(&b.p, &p) - lorentz_gamma(&a.p, &p)) / (2.0 * dt);
        let pred = s.q * (-p.m * dg / s.radius());
        worst = worst.max((dr - pred).norm());
    }
    assert!(worst < 1e-5, "{worst}");
}

#[test]
fn fitted_closed_form_tracks_integration() {
    let p = unit();
    let s = perihelion_state(EMPoint::new(2.0, -0.05), 1.0, &p).unwrap();
    let traj = integrate(&s, (0.0, 1100.0), &coulomb(), &p, &IntegratorConfig::default()).unwrap();
    let fit = fit_closed_form(&traj, 1.0).unwrap();
    assert!(fit.max_mismatch < 1e-7, "{}", fit.max_mismatch);
    let (a, th0) = fit.orbit.amplitude_phase().unwrap();
    assert!(a > 0.0 && th0.abs() < 1e-8, "{a} {th0}");
    // energy identity m c^2 gamma - m c^2 - h = k/r
    for (st, r) in traj.states.iter().zip(&traj.r) {
        let lhs = p.rest_energy() * (lorentz_gamma(&st.p, &p) - 1.0) + 0.05;
        assert!((lhs - 1.0 / r).abs() < 1e-9);
    }
}

#[test]
fn hyperbolic_closed_form_for_subcritical_orbits() {
    let p = unit();
    let traj = orbit_from(0.5, 50.0);
    let cf = ClosedFormOrbit::from_state(&traj.states[0], traj.theta[0], 1.0, &p).unwrap();
    assert!(cf.sigma2 < 0.0);
    for (th, r) in traj.theta.iter().zip(&traj.r) {
        assert!((1.0 / r - cf.inverse_radius(*th)).abs() < 1e-8 * (1.0 / r), "theta = {th}");
    }
}

#[test]
fn newtonian_limit_has_no_precession() {
    let p = PhysicalParams::new(1.0, 1e4).unwrap();
    let s = perihelion_state(EMPoint::new(2.0, -0.05), 1.0, &p).unwrap();
    let traj = integrate(&s, (0.0, 700.0), &coulomb(), &p, &IntegratorConfig::default()).unwrap();
    let prec = apsidal_precession(&traj, 1.0).unwrap();
    assert!(prec.precession_per_period.abs() < 1e-7, "{prec:?}");
}

#[test]
fn circular_orbit_has_no_perihelia() {
    let p = unit();
    let o = relcentral::circular::circular_orbit(3.0, &coulomb(), &p).unwrap();
    let traj = integrate(&o.state(&p), (0.0, 5.0 * o.period()), &coulomb(), &p, &IntegratorConfig::default()).unwrap();
    assert!(matches!(apsidal_precession(&traj, 1.0), Err(Error::InsufficientData(_))));
    let rep = rl_components_and_invariant(&traj, 1.0, 0.05).unwrap();
    for f in &rep.frames {
        assert!(f.r_alpha.abs() < 1e-10 && f.r_beta.abs() < 1e-10);
    }
}
