//! Cartesian equations of motion, adaptive integration with dense output,
//! apsis detection and conservation auditing.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{self, Control, DenseSolution, Outcome, StepConfig};
use crate::physics::{
    angular_momentum, cross, hamiltonian, lorentz_gamma, PhaseState, PhysicalParams, Potential, Vec2,
};

/// `(dq/dt, dp/dt)` at `state`.
pub fn cartesian_rhs(state: &PhaseState, pot: &Potential, params: &PhysicalParams) -> Result<(Vec2, Vec2)> {
    let r = state.radius();
    if !(r > 0.0) {
        return Err(Error::Singularity("equations of motion evaluated at q = 0".into()));
    }
    Ok(rhs_unchecked(state, pot, params))
}

#[inline]
fn rhs_unchecked(state: &PhaseState, pot: &Potential, params: &PhysicalParams) -> (Vec2, Vec2) {
    let r = state.radius();
    let qdot = state.p / (params.m * lorentz_gamma(&state.p, params));
    let pdot = state.q * (-pot.dv(r) / r);
    (qdot, pdot)
}

fn rhs_array(y: &[f64; 4], pot: &Potential, params: &PhysicalParams) -> [f64; 4] {
    let (dq, dp) = rhs_unchecked(&PhaseState::from_array(*y), pot, params);
    [dq.x, dq.y, dp.x, dp.y]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
    pub max_steps: usize,
    /// Time tolerance for event refinement.
    pub event_tol: f64,
    /// Integration stops once |q| drops below this radius.
    pub collision_radius: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rtol: 1e-12,
            atol: 1e-14,
            max_step: f64::INFINITY,
            max_steps: 2_000_000,
            event_tol: 1e-12,
            collision_radius: 1e-8,
        }
    }
}

impl IntegratorConfig {
    pub fn with_tolerance(tol: f64) -> Self {
        Self {
            rtol: tol,
            atol: tol * 1e-2,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0 && self.atol > 0.0 && self.event_tol > 0.0) {
            return Err(Error::InvalidParameter("tolerances must be positive".into()));
        }
        if !(self.max_step > 0.0) || self.max_steps == 0 || !(self.collision_radius >= 0.0) {
            return Err(Error::InvalidParameter("invalid step limits or collision radius".into()));
        }
        Ok(())
    }

    pub(crate) fn step_config(&self) -> StepConfig {
        StepConfig {
            rtol: self.rtol,
            atol: self.atol,
            h_max: self.max_step,
            h_init: None,
            max_steps: self.max_steps,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    Perihelion,
    Aphelion,
    Collision,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub kind: EventKind,
    pub t: f64,
    pub r: f64,
}

/// Integrated orbit: samples at accepted steps plus the dense interpolant.
#[derive(Debug, Clone)]
pub struct Trajectory {
    dense: DenseSolution<4>,
    params: PhysicalParams,
    pub times: Vec<f64>,
    pub states: Vec<PhaseState>,
    pub r: Vec<f64>,
    /// Unwrapped polar angle.
    pub theta: Vec<f64>,
    pub energy: Vec<f64>,
    pub ell: Vec<f64>,
    pub events: Vec<Event>,
}

/// Angle swept from `a` to `b` (both nonzero), in (-pi, pi].
#[inline]
pub(crate) fn angle_between(a: &Vec2, b: &Vec2) -> f64 {
    cross(a, b).atan2(a.dot(b))
}

impl Trajectory {
    fn from_dense(dense: DenseSolution<4>, pot: &Potential, params: PhysicalParams) -> Self {
        let times = dense.times();
        let states: Vec<PhaseState> = dense.states().into_iter().map(PhaseState::from_array).collect();
        let r: Vec<f64> = states.iter().map(|s| s.radius()).collect();
        let mut theta = Vec::with_capacity(states.len());
        theta.push(states[0].q.y.atan2(states[0].q.x));
        for (i, seg) in dense.segments().iter().enumerate() {
            let (a, b) = (states[i].q, states[i + 1].q);
            let mut d = angle_between(&a, &b);
            if d.abs() > 1.0 {
                // resolve large sweeps on the interpolant
                let n = (d.abs() / 0.25).ceil() as usize * 4;
                d = 0.0;
                let mut prev = a;
                for j in 1..=n {
                    let t = seg.t0 + (seg.t1 - seg.t0) * j as f64 / n as f64;
                    let y = seg.eval(t);
                    let cur = Vec2::new(y[0], y[1]);
                    d += angle_between(&prev, &cur);
                    prev = cur;
                }
            }
            theta.push(theta[i] + d);
        }
        let energy = states
            .iter()
            .map(|s| hamiltonian(s, pot, &params).unwrap_or(f64::NAN))
            .collect();
        let ell = states.iter().map(angular_momentum).collect();
        Self {
            dense,
            params,
            times,
            states,
            r,
            theta,
            energy,
            ell,
            events: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn params(&self) -> PhysicalParams {
        self.params
    }

    pub fn t_start(&self) -> f64 {
        self.dense.t_start()
    }

    pub fn t_end(&self) -> f64 {
        self.dense.t_end()
    }

    pub fn last(&self) -> PhaseState {
        *self.states.last().unwrap()
    }

    pub fn collided(&self) -> bool {
        self.events.iter().any(|e| e.kind == EventKind::Collision)
    }

    /// Dense state at `t`; exact at sample times.
    pub fn eval(&self, t: f64) -> Option<PhaseState> {
        self.dense.eval(t).map(PhaseState::from_array)
    }

    /// Unwrapped polar angle at `t`, continuous with the samples.
    pub fn theta_at(&self, t: f64) -> Option<f64> {
        let i = self.dense.segment_index(t)?;
        let s = self.eval(t)?;
        Some(self.theta[i] + angle_between(&self.states[i].q, &s.q))
    }

    pub fn segments(&self) -> &[ode::Segment<4>] {
        self.dense.segments()
    }

    /// CSV with header `t,q1,q2,p1,p2,r,theta,H,L`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,q1,q2,p1,p2,r,theta,H,L")?;
        for i in 0..self.len() {
            let s = &self.states[i];
            let row = [
                self.times[i],
                s.q.x,
                s.q.y,
                s.p.x,
                s.p.y,
                self.r[i],
                self.theta[i],
                self.energy[i],
                self.ell[i],
            ];
            let line: Vec<String> = row.iter().map(|v| format_g17(*v)).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }
}

/// Scientific notation with 17 significant digits.
pub fn format_g17(v: f64) -> String {
    format!("{:.16e}", v)
}

/// Integrate from `state0` over `[t0, t1]` (either direction).
///
/// Stops early with a [`EventKind::Collision`] event when |q| falls below
/// the collision radius or the step size underflows. Exceeding the step
/// budget returns [`Error::Truncated`] carrying the partial trajectory.
pub fn integrate(
    state0: &PhaseState,
    t_span: (f64, f64),
    pot: &Potential,
    params: &PhysicalParams,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    params.validate()?;
    cfg.validate()?;
    let (t0, t1) = t_span;
    if !(t0.is_finite() && t1.is_finite()) || t0 == t1 {
        return Err(Error::InvalidParameter(format!("degenerate time span ({t0}, {t1})")));
    }
    let r0 = state0.radius();
    if !(r0 > 0.0) {
        return Err(Error::Singularity("initial position at the origin".into()));
    }
    if r0 <= cfg.collision_radius {
        return Err(Error::InvalidParameter("initial radius inside the collision radius".into()));
    }
    let rc = cfg.collision_radius;
    let tol = cfg.event_tol;
    let mut collision_at: Option<(f64, f64)> = None;
    let solved = ode::integrate(
        |_, y: &[f64; 4]| rhs_array(y, pot, params),
        t0,
        state0.to_array(),
        t1,
        &cfg.step_config(),
        |seg| {
            let radius = |t: f64| {
                let y = seg.eval(t);
                y[0].hypot(y[1])
            };
            if radius(seg.t1) >= rc {
                return Control::Continue;
            }
            let (mut a, mut b) = (seg.t0, seg.t1);
            while (b - a).abs() > tol {
                let m = 0.5 * (a + b);
                if m == a || m == b {
                    break;
                }
                if radius(m) >= rc {
                    a = m;
                } else {
                    b = m;
                }
            }
            collision_at = Some((b, radius(b)));
            Control::Stop(b)
        },
    )?;
    let mut traj = Trajectory::from_dense(solved.solution, pot, *params);
    match solved.outcome {
        Outcome::Completed => {}
        Outcome::Stopped => {
            let (t, r) = collision_at.expect("stop requested only at collisions");
            traj.events.push(Event { kind: EventKind::Collision, t, r });
        }
        Outcome::StepUnderflow => {
            let t = traj.t_end();
            let r = traj.last().radius();
            traj.events.push(Event { kind: EventKind::Collision, t, r });
        }
        Outcome::MaxSteps => {
            return Err(Error::Truncated {
                steps: solved.stats.accepted,
                t: traj.t_end(),
                partial: Box::new(traj),
            });
        }
    }
    Ok(traj)
}

/// Apsides of `traj`: sign changes of dr/dt, refined on the dense output.
///
/// The sign of dr/dt is that of `<q, p>`. Values below a relative noise
/// floor are ignored, so an orbit that is circular up to integration error
/// yields no apsides.
pub fn apsis_times(traj: &Trajectory, pot: &Potential) -> Vec<Event> {
    const NOISE: f64 = 1e-9;
    let params = traj.params;
    let g = |s: &PhaseState| s.q.dot(&s.p);
    let scale = |s: &PhaseState| s.q.norm() * s.p.norm().max(params.mc() * 1e-3);
    let significant: Vec<(usize, f64)> = traj
        .states
        .iter()
        .enumerate()
        .filter_map(|(i, s)| {
            let v = g(s);
            (v.abs() > NOISE * scale(s)).then_some((i, v))
        })
        .collect();
    let forward = traj.t_end() >= traj.t_start();
    let mut out = Vec::new();
    for pair in significant.windows(2) {
        let ((i, gi), (j, gj)) = (pair[0], pair[1]);
        if gi.signum() == gj.signum() {
            continue;
        }
        let gt = |t: f64| traj.eval(t).map_or(f64::NAN, |s| g(&s));
        let (ta, tb) = (traj.times[i], traj.times[j]);
        let Some(mut t) = crate::roots::brent(gt, ta, tb, 0.5 * 1e-12, 0.0, 200) else {
            continue;
        };
        // one Newton polish with d<q,p>/dt = |p|^2/(m gamma) - V'(r) r
        if let Some(s) = traj.eval(t) {
            let dg = s.p.norm_squared() / (params.m * lorentz_gamma(&s.p, &params)) - pot.dv(s.radius()) * s.radius();
            if dg != 0.0 {
                let tn = t - g(&s) / dg;
                let (lo, hi) = if ta < tb { (ta, tb) } else { (tb, ta) };
                if tn >= lo && tn <= hi && gt(tn).abs() <= g(&s).abs() {
                    t = tn;
                }
            }
        }
        let r = traj.eval(t).map_or(f64::NAN, |s| s.radius());
        // in forward time dr/dt going from - to + is a minimum
        let rising = (gi < 0.0) == forward;
        let kind = if rising { EventKind::Perihelion } else { EventKind::Aphelion };
        out.push(Event { kind, t, r });
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConservationReport {
    pub h0: f64,
    pub l0: f64,
    pub h_drift_abs: f64,
    pub h_drift_rel: f64,
    pub l_drift_abs: f64,
    pub l_drift_rel: f64,
}

/// Maximum deviation of `H` and `L` from their initial values. Relative
/// drifts are scaled by `max(|X0|, 1)` so they stay finite at `X0 = 0`.
pub fn conservation_report(traj: &Trajectory, pot: &Potential, params: &PhysicalParams) -> Result<ConservationReport> {
    let h: Vec<f64> = traj
        .states
        .iter()
        .map(|s| hamiltonian(s, pot, params))
        .collect::<Result<_>>()?;
    let l = &traj.ell;
    let (h0, l0) = (h[0], l[0]);
    let h_drift_abs = h.iter().map(|v| (v - h0).abs()).fold(0.0, f64::max);
    let l_drift_abs = l.iter().map(|v| (v - l0).abs()).fold(0.0, f64::max);
    Ok(ConservationReport {
        h0,
        l0,
        h_drift_abs,
        h_drift_rel: h_drift_abs / h0.abs().max(1.0),
        l_drift_abs,
        l_drift_rel: l_drift_abs / l0.abs().max(1.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::PotentialKind;
    use approx::assert_relative_eq;

    fn coulomb() -> Potential {
        Potential::coulomb(1.0).unwrap()
    }

    #[test]
    fn rhs_hand_values() {
        let s = PhaseState::new(Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)).unwrap();
        let (dq, dp) = cartesian_rhs(&s, &coulomb(), &PhysicalParams::default()).unwrap();
        assert_relative_eq!(dq.y, 1.0 / 2f64.sqrt(), max_relative = 1e-15);
        assert_eq!(dq.x, 0.0);
        assert_eq!(dp, Vec2::new(-1.0, 0.0));
    }

    #[test]
    fn rhs_rest_and_bounds() {
        let params = PhysicalParams::default();
        let s = PhaseState::new(Vec2::new(0.0, 3.0), Vec2::zeros()).unwrap();
        let (dq, dp) = cartesian_rhs(&s, &coulomb(), &params).unwrap();
        assert_eq!(dq, Vec2::zeros());
        assert_relative_eq!(dp.y, -1.0 / 9.0, max_relative = 1e-15);
        let s = PhaseState::from_array([1.0, 1.0, 7e5, -7e5]);
        let (dq, _) = cartesian_rhs(&s, &coulomb(), &params).unwrap();
        assert!(dq.norm() < params.c);
        let s = PhaseState::from_array([0.0, 0.0, 1.0, 0.0]);
        assert!(matches!(cartesian_rhs(&s, &coulomb(), &params), Err(Error::Singularity(_))));
    }

    #[test]
    fn dense_output_reproduces_samples() {
        let params = PhysicalParams::default();
        let s = PhaseState::new(Vec2::new(1.0, 0.0), Vec2::new(0.1, 1.1)).unwrap();
        let traj = integrate(&s, (0.0, 20.0), &coulomb(), &params, &IntegratorConfig::default()).unwrap();
        for (t, st) in traj.times.iter().zip(&traj.states) {
            assert_eq!(traj.eval(*t).unwrap(), *st);
        }
        for w in traj.times.windows(2) {
            assert!(w[1] > w[0]);
        }
        for w in traj.theta.windows(2) {
            assert!((w[1] - w[0]).abs() < std::f64::consts::PI);
        }
    }

    #[test]
    fn time_reversal() {
        let params = PhysicalParams::default();
        let pot = coulomb();
        let s0 = PhaseState::new(Vec2::new(1.0, 0.0), Vec2::new(0.2, 1.3)).unwrap();
        let cfg = IntegratorConfig::default();
        let fwd = integrate(&s0, (0.0, 30.0), &pot, &params, &cfg).unwrap();
        let back = integrate(&fwd.last(), (30.0, 0.0), &pot, &params, &cfg).unwrap();
        let s = back.last();
        assert!((s.q - s0.q).norm() < 1e-8 && (s.p - s0.p).norm() < 1e-8);
    }

    #[test]
    fn radial_infall_hits_collision_radius() {
        let params = PhysicalParams::default();
        let s0 = PhaseState::new(Vec2::new(1.0, 0.0), Vec2::zeros()).unwrap();
        let traj = integrate(&s0, (0.0, 10.0), &coulomb(), &params, &IntegratorConfig::default()).unwrap();
        assert!(traj.collided());
        let ev = traj.events.last().unwrap();
        assert!(ev.r <= 1e-8);
        assert!(ev.t < 10.0);
    }

    #[test]
    fn max_steps_truncates_with_partial() {
        let params = PhysicalParams::default();
        let s0 = PhaseState::new(Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)).unwrap();
        let cfg = IntegratorConfig {
            max_steps: 10,
            ..IntegratorConfig::default()
        };
        match integrate(&s0, (0.0, 1000.0), &coulomb(), &params, &cfg) {
            Err(Error::Truncated { steps, partial, .. }) => {
                assert_eq!(steps, 10);
                assert_eq!(partial.len(), 11);
            }
            other => panic!("expected truncation, got {other:?}"),
        }
    }

    #[test]
    fn degenerate_span_rejected() {
        let params = PhysicalParams::default();
        let s0 = PhaseState::new(Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)).unwrap();
        assert!(integrate(&s0, (1.0, 1.0), &coulomb(), &params, &IntegratorConfig::default()).is_err());
    }

    #[test]
    fn drift_grows_with_tolerance() {
        let params = PhysicalParams::default();
        let pot = coulomb();
        let s0 = PhaseState::new(Vec2::new(3.0, 0.0), Vec2::new(0.0, 0.5)).unwrap();
        let loose = integrate(&s0, (0.0, 200.0), &pot, &params, &IntegratorConfig::with_tolerance(1e-6)).unwrap();
        let tight = integrate(&s0, (0.0, 200.0), &pot, &params, &IntegratorConfig::with_tolerance(1e-12)).unwrap();
        let dl = conservation_report(&loose, &pot, &params).unwrap();
        let dt = conservation_report(&tight, &pot, &params).unwrap();
        assert!(dl.h_drift_rel > dt.h_drift_rel);
        assert!(dt.h_drift_rel < 1e-9 && dt.l_drift_rel < 1e-9);
    }

    #[test]
    fn constant_momentum_conserves() {
        let params = PhysicalParams::default();
        let pot = Potential::new(PotentialKind::ConstantMomentum, 1.0, params).unwrap();
        let s0 = PhaseState::new(Vec2::new(1.0, 0.0), Vec2::new(0.1, 1.2)).unwrap();
        let traj = integrate(&s0, (0.0, 50.0), &pot, &params, &IntegratorConfig::default()).unwrap();
        let rep = conservation_report(&traj, &pot, &params).unwrap();
        assert!(rep.h_drift_rel < 1e-9 && rep.l_drift_rel < 1e-9, "{rep:?}");
    }

    #[test]
    fn csv_layout() {
        let params = PhysicalParams::default();
        let s0 = PhaseState::new(Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)).unwrap();
        let traj = integrate(&s0, (0.0, 1.0), &coulomb(), &params, &IntegratorConfig::default()).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "t,q1,q2,p1,p2,r,theta,H,L");
        let first: Vec<f64> = lines.next().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(first.len(), 9);
        assert_eq!(first[1], 1.0);
        assert!(!text.contains('\r'));
        assert_eq!(text.lines().count(), traj.len() + 1);
    }

    #[test]
    fn g17_round_trips() {
        for v in [0.1, -1.0 / 3.0, 1e-300, 6.02214076e23, std::f64::consts::PI] {
            assert_eq!(format_g17(v).parse::<f64>().unwrap(), v);
        }
    }
}
