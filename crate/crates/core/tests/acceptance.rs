//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and exits non-zero if any fails.

use std::f64::consts::{PI, TAU};
use std::process::ExitCode;

use relcentral::bertrand::{build_family, cubic_certificate, obstruction_certificate, period_constant_formula, q_poly, FamilyOptions};
use relcentral::circular::{circular_orbit, momentum_profile_is_constant};
use relcentral::clairaut::{
    default_amplitudes, equilibrium_solve, integrate_clairaut, period_function, period_polar, ClairautState, Equilibria,
    PeriodOptions,
};
use relcentral::collision::{integrate_to_collision, CollisionConfig};
use relcentral::coulomb::{
    apsidal_precession, classify, existence_witness, perihelion_state, rl_components_and_invariant, runge_lenz_vector,
    sigma_and_min_energy, ClosedFormOrbit, EMKind, EMPoint, CLASSIFY_TOL,
};
use relcentral::dynamics::{apsis_times, conservation_report, integrate, EventKind, IntegratorConfig};
use relcentral::physics::{angular_momentum, hamiltonian};
use relcentral::roots::log_space;
use relcentral::{PhaseState, PhysicalParams, Potential, PotentialKind, Vec2};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn unit() -> PhysicalParams {
    PhysicalParams::default()
}

fn coulomb() -> Potential {
    Potential::coulomb(1.0).unwrap()
}

fn bounded_start() -> PhaseState {
    perihelion_state(EMPoint::new(2.0, -0.05), 1.0, &unit()).unwrap()
}

fn conservation() -> Outcome {
    let p = unit();
    let traj = integrate(&bounded_start(), (0.0, 1e3), &coulomb(), &p, &IntegratorConfig::with_tolerance(1e-12))
        .map_err(|e| e.to_string())?;
    let rep = conservation_report(&traj, &coulomb(), &p).map_err(|e| e.to_string())?;
    let h_rel = rep.h_drift_abs / rep.h0.abs();
    let l_rel = rep.l_drift_abs / rep.l0.abs();
    check(h_rel < 1e-9 && l_rel < 1e-9, format!("H drift {h_rel:.2e}, L drift {l_rel:.2e} (relative)"))
}

fn circular() -> Outcome {
    let p = unit();
    let pot = coulomb();
    let o = circular_orbit(2.0, &pot, &p).map_err(|e| e.to_string())?;
    let ident = p.c * o.ell / (o.r0 * (o.ell.powi(2) + p.mc().powi(2) * o.r0 * o.r0).sqrt());
    let freq_err = (ident - o.omega).abs();
    let traj = integrate(&o.state(&p), (0.0, 100.0 * o.period()), &pot, &p, &IntegratorConfig::default())
        .map_err(|e| e.to_string())?;
    let r_dev = traj.r.iter().map(|r| (r - o.r0).abs()).fold(0.0, f64::max);
    let revs = (traj.theta.last().unwrap() - traj.theta[0]) / TAU;
    check(
        freq_err < 1e-12 && r_dev < 1e-8 && revs > 99.99,
        format!("Omega = {:.10}, identity error {freq_err:.1e}; max |r - r0| = {r_dev:.1e} over {revs:.2} revolutions", o.omega),
    )
}

fn constant_momentum() -> Outcome {
    let p = unit();
    let k = 1.0;
    let grid = log_space(0.1, 100.0, 20);
    let cm = Potential::new(PotentialKind::ConstantMomentum, k, p).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for &r in &grid {
        let o = circular_orbit(r, &cm, &p).map_err(|e| e.to_string())?;
        worst = worst.max((o.ell - k.sqrt()).abs() / k.sqrt());
    }
    let prof = momentum_profile_is_constant(&coulomb(), &p, &grid).map_err(|e| e.to_string())?;
    let cm_prof = momentum_profile_is_constant(&cm, &p, &grid).map_err(|e| e.to_string())?;
    let margin = prof.max_deviation / 1e-8;
    check(
        worst < 1e-8 && cm_prof.constant && !prof.constant && margin >= 1e6,
        format!("constant-momentum max |L - sqrt k|/sqrt k = {worst:.1e}; Coulomb deviation {:.3} ({margin:.1e} x threshold)", prof.max_deviation),
    )
}

fn coulomb_isochrone() -> Outcome {
    let p = unit();
    let pot = coulomb();
    let ell = 2.0;
    let rho0 = match equilibrium_solve(ell, &pot, &p).map_err(|e| e.to_string())? {
        Equilibria::Isolated(v) if v.len() == 1 => v[0],
        other => return Err(format!("unexpected equilibria {other:?}")),
    };
    let target = 4.0 * PI / 3f64.sqrt();
    let mut worst: f64 = 0.0;
    for xi in [1e-3, 1e-2, 5e-2] {
        let period = period_polar(rho0, ell, xi, &pot, &p, &PeriodOptions::default()).map_err(|e| e.to_string())?;
        worst = worst.max((period - target).abs());
    }
    let traj = integrate(&bounded_start(), (0.0, 2000.0), &pot, &p, &IntegratorConfig::default()).map_err(|e| e.to_string())?;
    let prec = apsidal_precession(&traj, 1.0).map_err(|e| e.to_string())?;
    let aps_err = (prec.delta_theta - prec.predicted).abs() + prec.spread;
    check(
        worst < 1e-6 && aps_err < 1e-6,
        format!("max |P(xi) - 4 pi/sqrt 3| = {worst:.1e}; perihelion gap error {aps_err:.1e} over {} perihelia", prec.perihelia),
    )
}

fn bertrand_obstruction() -> Outcome {
    let p = unit();
    let opts = PeriodOptions::default();
    let mut worst: f64 = 0.0;
    let mut nonzero = true;
    for a in [0.25, 0.5, 1.0] {
        let fam = build_family(a, 1.0, 2.0, (0.5, 2.0), &p, &FamilyOptions::default()).map_err(|e| e.to_string())?;
        let pot = fam.potential();
        for rho0 in [0.8, 1.0, 1.25] {
            let i = fam.nearest(rho0);
            let (r, ell) = (fam.rho[i], fam.ell[i]);
            let fit = period_function(r, ell, pot, &p, &default_amplitudes(r), &opts).map_err(|e| e.to_string())?;
            let formula = period_constant_formula(r, ell, a, &p);
            worst = worst.max((fit.c2 - formula).abs() / formula.abs());
            let x = (r * ell / p.mc()).powi(2);
            if q_poly(x, a) != 0.0 {
                nonzero &= fit.c2.abs() > 10.0 * fit.residual;
            }
        }
        let rep = obstruction_certificate(a).map_err(|e| e.to_string())?;
        if !rep.no_isochronous_family {
            return Err(format!("obstruction certificate failed at a = {a}"));
        }
    }
    let cubic = cubic_certificate();
    check(
        worst < 1e-2 && nonzero && cubic.root_free,
        format!(
            "max relative c2 mismatch {worst:.2e}; c2 nonzero: {nonzero}; cubic p(0) = {}, p(1) = {}, p' discriminant = {}",
            cubic.value_at_0, cubic.value_at_1, cubic.derivative_discriminant
        ),
    )
}

fn runge_lenz() -> Outcome {
    let p = unit();
    let pot = coulomb();
    let traj = integrate(&bounded_start(), (0.0, 400.0), &pot, &p, &IntegratorConfig::default()).map_err(|e| e.to_string())?;
    let coarse = rl_components_and_invariant(&traj, 1.0, 0.02).map_err(|e| e.to_string())?;
    let fine = rl_components_and_invariant(&traj, 1.0, 0.01).map_err(|e| e.to_string())?;
    let ratio = coarse.ode_residual / fine.ode_residual;
    let drift = coarse.invariant_drift.max(fine.invariant_drift);
    let mut circ: f64 = 0.0;
    for r0 in [0.5, 2.0, 10.0] {
        let o = circular_orbit(r0, &pot, &p).map_err(|e| e.to_string())?;
        circ = circ.max(runge_lenz_vector(&o.state(&p), 1.0, &p).map_err(|e| e.to_string())?.norm());
    }
    // Newtonian limit: the inertial vector is fixed over one revolution
    let pn = PhysicalParams::new(1.0, 1e4).unwrap();
    let s0 = perihelion_state(EMPoint::new(2.0, -0.05), 1.0, &pn).map_err(|e| e.to_string())?;
    let tn = integrate(&s0, (0.0, 400.0), &pot, &pn, &IntegratorConfig::default()).map_err(|e| e.to_string())?;
    let t_rev = apsis_times(&tn, &pot)
        .into_iter()
        .find(|e| e.kind == EventKind::Perihelion)
        .ok_or("no perihelion in the Newtonian run")?
        .t;
    let r_init = runge_lenz_vector(&s0, 1.0, &pn).map_err(|e| e.to_string())?;
    let mut newton: f64 = 0.0;
    for (t, s) in tn.times.iter().zip(&tn.states) {
        if *t <= t_rev {
            newton = newton.max((runge_lenz_vector(s, 1.0, &pn).map_err(|e| e.to_string())? - r_init).norm());
        }
    }
    check(
        (3.5..4.5).contains(&ratio) && drift < 1e-8 && circ < 1e-10 && newton < 1e-6,
        format!(
            "ODE residual {:.2e} -> {:.2e} (ratio {ratio:.2}); invariant drift {drift:.1e}; |R| on circles {circ:.1e}; Newtonian |dR| {newton:.1e}",
            coarse.ode_residual, fine.ode_residual
        ),
    )
}

fn energy_momentum() -> Outcome {
    let p = unit();
    let k = 1.0;
    let pot = coulomb();
    let (mut checked, mut mismatches) = (0usize, Vec::new());
    for i in 0..100 {
        for j in 0..100 {
            let ell = -3.0 + 6.0 * (i as f64 + 0.5) / 100.0;
            let h = -1.5 + 2.0 * (j as f64 + 0.5) / 100.0;
            let info = sigma_and_min_energy(ell, k, &p);
            let near = |a: f64, b: f64| (a - b).abs() < 1e-6;
            let boundary = near(ell.abs() * p.c, k)
                || near(h, 0.0)
                || near(h, -p.rest_energy())
                || info.h_min.is_some_and(|hm| near(h, hm));
            if boundary {
                continue;
            }
            checked += 1;
            let pt = EMPoint::new(ell, h);
            let class = classify(pt, k, &p, CLASSIFY_TOL).kind;
            let witness = existence_witness(pt, k, &p).map_err(|e| e.to_string())?;
            let implied = match &witness {
                None => EMKind::Empty,
                Some(w) => {
                    let hw = hamiltonian(&w.state, &pot, &p).map_err(|e| e.to_string())?;
                    let lw = angular_momentum(&w.state);
                    if (hw - h).abs() > 1e-10 * h.abs().max(1.0) || (lw - ell).abs() > 1e-10 * ell.abs().max(1.0) {
                        mismatches.push(format!("witness misses ({ell}, {h})"));
                        continue;
                    }
                    w.implied_kind()
                }
            };
            if implied != class {
                mismatches.push(format!("({ell}, {h}): {class} vs witness {implied}"));
            }
        }
    }
    check(
        mismatches.is_empty() && checked > 9000,
        format!("{checked} interior points checked, {} mismatches {:?}", mismatches.len(), mismatches.iter().take(3).collect::<Vec<_>>()),
    )
}

fn collision() -> Outcome {
    let p = unit();
    let s = PhaseState::new(Vec2::new(1.0, 0.0), Vec2::new(-(2.75f64).sqrt(), 0.5)).map_err(|e| e.to_string())?;
    let h = hamiltonian(&s, &coulomb(), &p).map_err(|e| e.to_string())?;
    let run = integrate_to_collision(&s, 1.0, &p, &CollisionConfig::default()).map_err(|e| e.to_string())?;
    let r = run.fit.residuals;
    check(
        h.abs() < 1e-15 && r.slope_rel < 5e-3 && r.lambda_rel < 1e-2 && r.w_norm_error < 1e-6 && r.manifold_max < 1e-9,
        format!(
            "slope {:.6} vs {:.6}; lambda {:.6} vs {:.6}; ||w| - k/c| = {:.1e}; manifold residual {:.1e}",
            run.fit.slope, run.fit.slope_pred, run.fit.lambda, run.fit.lambda_pred, r.w_norm_error, r.manifold_max
        ),
    )
}

fn cross_reduction() -> Outcome {
    let p = unit();
    let pot = coulomb();
    let s0 = bounded_start();
    let ell = angular_momentum(&s0);
    let sigma = sigma_and_min_energy(ell, 1.0, &p).sigma.unwrap();
    let theta_end = 5.0 * TAU / sigma;
    let traj = integrate(&s0, (0.0, 1500.0), &pot, &p, &IntegratorConfig::default()).map_err(|e| e.to_string())?;
    if traj.theta.last().unwrap() < &theta_end {
        return Err("Cartesian run too short".into());
    }
    let cs = ClairautState::new(1.0 / s0.radius(), 0.0, ell).map_err(|e| e.to_string())?;
    let orbit = integrate_clairaut(&cs, theta_end, &pot, &p, &PeriodOptions::default()).map_err(|e| e.to_string())?;
    let closed = ClosedFormOrbit::from_state(&s0, 0.0, 1.0, &p).map_err(|e| e.to_string())?;
    let (mut cart_cl, mut cart_cf, mut cl_cf) = (0.0f64, 0.0f64, 0.0f64);
    let mut n = 0;
    for (th, r) in traj.theta.iter().zip(&traj.r) {
        if *th > theta_end {
            break;
        }
        let rho_cl = orbit.eval(*th).ok_or("Clairaut orbit does not cover the angle")?.0;
        let rho_cf = closed.inverse_radius(*th);
        cart_cl = cart_cl.max((1.0 / r - rho_cl).abs());
        cart_cf = cart_cf.max((1.0 / r - rho_cf).abs());
        cl_cf = cl_cf.max((rho_cl - rho_cf).abs());
        n += 1;
    }
    check(
        cart_cl.max(cart_cf).max(cl_cf) < 1e-7 && n > 100,
        format!("max 1/r gaps over {n} samples: Cartesian-Clairaut {cart_cl:.1e}, Cartesian-closed {cart_cf:.1e}, Clairaut-closed {cl_cf:.1e}"),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("conservation", conservation),
        ("circular orbit solver", circular),
        ("constant angular momentum", constant_momentum),
        ("Coulomb isochrone", coulomb_isochrone),
        ("Bertrand obstruction", bertrand_obstruction),
        ("Runge-Lenz", runge_lenz),
        ("energy-momentum classification", energy_momentum),
        ("collision asymptotics", collision),
        ("cross-reduction equivalence", cross_reduction),
    ];
    let results: Vec<Outcome> = std::thread::scope(|s| {
        let handles: Vec<_> = criteria.iter().map(|(_, f)| s.spawn(f)).collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err("panicked".into())))
            .collect()
    });
    let mut failed = 0;
    for (i, ((name, _), res)) in criteria.iter().zip(&results).enumerate() {
        match res {
            Ok(d) => println!("PASS {} {name}: {d}", i + 1),
            Err(d) => {
                failed += 1;
                println!("FAIL {} {name}: {d}", i + 1)
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
