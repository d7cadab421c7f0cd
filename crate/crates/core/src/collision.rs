//! Partial regularization of collisions in the variables
//! `w1 = <q, p>`, `w2 = q x p`, and extraction of the collision asymptotics.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dynamics::{format_g17, Event, EventKind};
use crate::error::{Error, Result};
use crate::ode::{self, Control, DenseSolution, Outcome, StepConfig};
use crate::physics::{angular_momentum, hamiltonian, perp, PhaseState, PhysicalParams, Potential, Vec2};
use crate::roots::brent;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollisionVars {
    pub r: f64,
    pub theta: f64,
    pub w1: f64,
    pub w2: f64,
    pub h: f64,
}

impl CollisionVars {
    pub fn w_norm(&self) -> f64 {
        self.w1.hypot(self.w2)
    }
}

/// `S = sqrt(m^2 r^2 + |w|^2 / c^2)`, which equals `m gamma r`.
#[inline]
fn s_factor(r: f64, w1: f64, w2: f64, params: &PhysicalParams) -> f64 {
    (params.m * r).hypot(w1.hypot(w2) / params.c)
}

pub fn w_transform(state: &PhaseState, k: f64, params: &PhysicalParams) -> Result<CollisionVars> {
    let r = state.radius();
    if !(r > 0.0) {
        return Err(Error::Domain("w variables undefined at q = 0".into()));
    }
    let pot = Potential::coulomb(k)?;
    Ok(CollisionVars {
        r,
        theta: state.q.y.atan2(state.q.x),
        w1: state.q.dot(&state.p),
        w2: angular_momentum(state),
        h: hamiltonian(state, &pot, params)?,
    })
}

/// `p = (w1 q + w2 J q) / |q|^2`.
pub fn w_inverse(q: &Vec2, w: &Vec2) -> Result<PhaseState> {
    let r2 = q.norm_squared();
    if !(r2 > 0.0) {
        return Err(Error::Domain("w inverse undefined at q = 0".into()));
    }
    Ok(PhaseState {
        q: *q,
        p: (q * w.x + perp(q) * w.y) / r2,
    })
}

/// `(h + m c^2)^2 r^2 - (c^2 S - k)^2`; zero on the energy surface.
pub fn manifold_residual(v: &CollisionVars, k: f64, params: &PhysicalParams) -> f64 {
    let c2 = params.c * params.c;
    let s = s_factor(v.r, v.w1, v.w2, params);
    ((v.h + params.rest_energy()) * v.r).powi(2) - (c2 * s - k).powi(2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularizedRates {
    pub dr: f64,
    /// `None` at `r = 0` with `w2 != 0`, where the angle rate is singular.
    pub dtheta: Option<f64>,
    pub dw1: f64,
}

pub fn regularized_rhs(v: &CollisionVars, params: &PhysicalParams) -> Result<RegularizedRates> {
    if !(v.r >= 0.0) {
        return Err(Error::Domain(format!("negative radius {}", v.r)));
    }
    let s = s_factor(v.r, v.w1, v.w2, params);
    if !(s > 0.0) {
        return Err(Error::Singularity("r = 0 and w = 0".into()));
    }
    let dtheta = if v.w2 == 0.0 {
        Some(0.0)
    } else if v.r > 0.0 {
        Some(v.w2 / (v.r * s))
    } else {
        None
    };
    Ok(RegularizedRates {
        dr: v.w1 / s,
        dtheta,
        dw1: v.h + params.rest_energy() - params.m * params.m * params.c * params.c * v.r / s,
    })
}

fn rhs3(y: &[f64; 3], w2: f64, h: f64, params: &PhysicalParams) -> [f64; 3] {
    let (r, w1) = (y[0], y[2]);
    let s = s_factor(r, w1, w2, params);
    let dtheta = if w2 == 0.0 { 0.0 } else { w2 / (r * s) };
    let mc = params.mc();
    [w1 / s, dtheta, h + params.rest_energy() - mc * mc * r / s]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollisionConfig {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Radius at which the time integration hands over to extrapolation.
    pub r_stop: f64,
    /// Number of halvings in the geometric fit window.
    pub window_levels: u32,
    /// Window length as a fraction of the time from the last aphelion.
    pub window_fraction: f64,
    /// Give up if no collision occurs within this time.
    pub t_max: f64,
}

impl Default for CollisionConfig {
    fn default() -> Self {
        Self {
            rtol: 1e-12,
            atol: 1e-14,
            max_steps: 1_000_000,
            r_stop: 1e-10,
            window_levels: 20,
            window_fraction: 0.1,
            t_max: 1e6,
        }
    }
}

impl CollisionConfig {
    fn step_config(&self) -> StepConfig {
        StepConfig {
            max_steps: self.max_steps,
            ..StepConfig::with_tolerance(self.rtol, self.atol)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0 && self.atol > 0.0 && self.r_stop > 0.0 && self.t_max > 0.0) {
            return Err(Error::InvalidParameter("tolerances, r_stop and t_max must be positive".into()));
        }
        if !(self.window_fraction > 0.0 && self.window_fraction <= 1.0) || self.window_levels < 3 {
            return Err(Error::InvalidParameter("window needs a fraction in (0, 1] and >= 3 levels".into()));
        }
        Ok(())
    }
}

/// Solution of the regularized system in time. `w2` and `h` are constant.
#[derive(Debug, Clone)]
pub struct RegularizedTrajectory {
    dense: DenseSolution<3>,
    pub w2: f64,
    pub h: f64,
    /// The run ended by crossing `r_stop`.
    pub reached_stop: bool,
}

impl RegularizedTrajectory {
    pub fn times(&self) -> Vec<f64> {
        self.dense.times()
    }

    pub fn samples(&self) -> Vec<CollisionVars> {
        self.dense.states().into_iter().map(|y| self.vars(y)).collect()
    }

    pub fn t_start(&self) -> f64 {
        self.dense.t_start()
    }

    pub fn t_end(&self) -> f64 {
        self.dense.t_end()
    }

    pub fn eval(&self, t: f64) -> Option<CollisionVars> {
        self.dense.eval(t).map(|y| self.vars(y))
    }

    fn vars(&self, y: [f64; 3]) -> CollisionVars {
        CollisionVars {
            r: y[0],
            theta: y[1],
            w1: y[2],
            w2: self.w2,
            h: self.h,
        }
    }

    /// CSV with header `t,r,theta,w1,w2`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,r,theta,w1,w2")?;
        for (t, v) in self.times().into_iter().zip(self.samples()) {
            writeln!(
                out,
                "{},{},{},{},{}",
                format_g17(t),
                format_g17(v.r),
                format_g17(v.theta),
                format_g17(v.w1),
                format_g17(v.w2)
            )?;
        }
        Ok(())
    }
}

/// Integrate the `(r, theta, w1)` system from `v0` over `t_span`, stopping
/// early if `r` drops below `r_stop`.
pub fn integrate_regularized(
    v0: &CollisionVars,
    t_span: (f64, f64),
    params: &PhysicalParams,
    cfg: &CollisionConfig,
) -> Result<RegularizedTrajectory> {
    params.validate()?;
    cfg.validate()?;
    if !(v0.r > cfg.r_stop) {
        return Err(Error::InvalidParameter(format!("initial radius {} not above r_stop", v0.r)));
    }
    let (w2, h) = (v0.w2, v0.h);
    let r_stop = cfg.r_stop;
    let mut reached_stop = false;
    let solved = ode::integrate(
        |_, y: &[f64; 3]| rhs3(y, w2, h, params),
        t_span.0,
        [v0.r, v0.theta, v0.w1],
        t_span.1,
        &cfg.step_config(),
        |seg| {
            if seg.y1[0] >= r_stop {
                return Control::Continue;
            }
            reached_stop = true;
            let t = brent(|t| seg.eval(t)[0] - r_stop, seg.t0, seg.t1, 0.0, 4.0 * f64::EPSILON, 200).unwrap_or(seg.t1);
            Control::Stop(t)
        },
    )?;
    if solved.outcome == Outcome::MaxSteps {
        return Err(Error::InsufficientData(format!(
            "regularized integration exceeded {} steps",
            cfg.max_steps
        )));
    }
    Ok(RegularizedTrajectory {
        dense: solved.solution,
        w2,
        h,
        reached_stop,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    /// Collision in the future of the initial state.
    Incoming,
    /// Collision in the past, reached by integrating backwards in time.
    Outgoing,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResiduals {
    /// `|slope - slope_pred| / |slope_pred|`.
    pub slope_rel: f64,
    /// `|lambda - lambda_pred|`, relative when `lambda_pred != 0`.
    pub lambda_rel: f64,
    /// `| |w(t_c)| - k/c |`.
    pub w_norm_error: f64,
    /// Max energy-surface residual over every sample.
    pub manifold_max: f64,
    pub r_fit_rms: f64,
    pub theta_fit_rms: f64,
    /// Log-log slope of `|r - s (t - t_c)|` against `|t - t_c|`.
    pub remainder_exponent: f64,
    /// Log-log slope of `|theta - theta0 - lambda ln|t - t_c||` against `|t - t_c|`.
    pub theta_remainder_exponent: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitWindow {
    pub t_w: f64,
    pub levels: u32,
    pub tau_min: f64,
    pub tau_max: f64,
}

/// Asymptotics `r = s (t - t_c) + o(t - t_c)` and
/// `theta = theta0 + lambda ln|t - t_c| + o(1)` near a collision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollisionFit {
    pub branch: Branch,
    pub t_c: f64,
    pub w10: f64,
    pub w2: f64,
    pub theta0: f64,
    pub slope: f64,
    /// `c^2 w10 / k`.
    pub slope_pred: f64,
    pub lambda: f64,
    /// `w2 / w10`.
    pub lambda_pred: f64,
    /// `l / w10` with `l` the angular momentum of the input state.
    pub lambda_ell: f64,
    pub residuals: FitResiduals,
    pub window: FitWindow,
}

/// Window samples `(tau, vars)` with `tau = |t - t_c|`.
#[derive(Debug, Clone)]
pub struct CollisionRun {
    pub approach: RegularizedTrajectory,
    pub window: Vec<(f64, CollisionVars)>,
    pub fit: CollisionFit,
}

fn lstsq(rows: &[Vec<f64>], rhs: &[f64]) -> Result<(Vec<f64>, f64)> {
    let n = rows.len();
    let m = rows[0].len();
    let a = nalgebra::DMatrix::from_fn(n, m, |i, j| rows[i][j]);
    let b = nalgebra::DVector::from_column_slice(rhs);
    let sol = a
        .clone()
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|e| Error::Consistency(format!("least squares failed: {e}")))?;
    let res = &a * &sol - b;
    Ok((sol.iter().copied().collect(), (res.norm_squared() / n as f64).sqrt()))
}

fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(_, v)| **v > 0.0)
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    let n = pts.len() as f64;
    if n < 2.0 {
        return f64::NAN;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Integrate the regularized flow from `state0` into its collision and fit
/// the asymptotic laws on a geometric window before it.
pub fn integrate_to_collision(
    state0: &PhaseState,
    k: f64,
    params: &PhysicalParams,
    cfg: &CollisionConfig,
) -> Result<CollisionRun> {
    params.validate()?;
    cfg.validate()?;
    let v0 = w_transform(state0, k, params)?;
    let disc = (v0.w2 * params.c).powi(2) - k * k;
    if v0.w2 != 0.0 && disc >= -1e-9 * k * k {
        return Err(Error::WrongRegime(format!(
            "collisions need |l| < k/c; got l = {}, k/c = {}",
            v0.w2,
            k / params.c
        )));
    }
    let dir = if v0.w1 < 0.0 { 1.0 } else { -1.0 };
    let branch = if dir > 0.0 { Branch::Incoming } else { Branch::Outgoing };
    let t0 = 0.0;
    let approach = integrate_regularized(&v0, (t0, t0 + dir * cfg.t_max), params, cfg)?;
    if !approach.reached_stop {
        return Err(Error::Consistency(format!("no collision within t_max = {}", cfg.t_max)));
    }
    let t_stop = approach.t_end();
    let vs = approach.eval(t_stop).expect("end point is inside the solution");
    let rates = regularized_rhs(&vs, params)?;
    // r is linear in t to O(r_stop^2) this close to the origin
    let t_c = t_stop - vs.r / rates.dr;
    let w10 = vs.w1 + rates.dw1 * (t_c - t_stop);
    if w10.abs() < 1e-6 * k / params.c {
        return Err(Error::Consistency(format!("w1 tends to {w10}, expected |w1| -> sqrt(k^2/c^2 - l^2)")));
    }
    let w_norm_error = (w10.hypot(v0.w2) - k / params.c).abs();

    // last turning point of r before the collision, else the start
    let times = approach.times();
    let samples = approach.samples();
    let mut t_ref = t0;
    for i in 1..times.len() {
        if samples[i - 1].w1 * samples[i].w1 < 0.0 {
            t_ref = brent(
                |t| approach.eval(t).map_or(f64::NAN, |v| v.w1),
                times[i - 1],
                times[i],
                0.0,
                4.0 * f64::EPSILON,
                200,
            )
            .unwrap_or(times[i]);
        }
    }
    let t_w = cfg.window_fraction * (t_c - t_ref).abs();
    let start = approach
        .eval(t_c - dir * t_w)
        .ok_or_else(|| Error::Consistency("window start outside the approach".into()))?;

    // near the collision in u = ln tau, t = t_c - dir tau: d/du = -dir tau d/dt
    let (w2, h) = (v0.w2, v0.h);
    let levels = cfg.window_levels;
    let u0 = t_w.ln();
    let u1 = u0 - levels as f64 * std::f64::consts::LN_2;
    let solved = ode::solve(
        |u, y: &[f64; 3]| {
            let tau = u.exp();
            let d = rhs3(y, w2, h, params);
            [-dir * tau * d[0], -dir * tau * d[1], -dir * tau * d[2]]
        },
        u0,
        [start.r, start.theta, start.w1],
        u1,
        &cfg.step_config(),
    )?;
    if solved.outcome != Outcome::Completed {
        return Err(Error::Consistency(format!("window integration ended with {:?}", solved.outcome)));
    }
    let window: Vec<(f64, CollisionVars)> = (0..=levels)
        .map(|n| {
            let u = u0 - n as f64 * std::f64::consts::LN_2;
            let y = solved.solution.eval(u).expect("u inside the window");
            (
                u.exp(),
                CollisionVars {
                    r: y[0],
                    theta: y[1],
                    w1: y[2],
                    w2,
                    h,
                },
            )
        })
        .collect();

    // r / tau = |s| + b tau + ..., tau scaled by t_w
    let taus: Vec<f64> = window.iter().map(|(t, _)| *t).collect();
    let rows: Vec<Vec<f64>> = taus.iter().map(|t| (0..4).map(|j| (t / t_w).powi(j)).collect()).collect();
    let ratios: Vec<f64> = window.iter().map(|(t, v)| v.r / t).collect();
    let (coef, r_fit_rms) = lstsq(&rows, &ratios)?;
    let abs_slope = coef[0];
    let slope = -dir * abs_slope;
    let rows: Vec<Vec<f64>> = taus
        .iter()
        .map(|t| {
            let x = t / t_w;
            vec![1.0, x.ln(), x, x * x]
        })
        .collect();
    let thetas: Vec<f64> = window.iter().map(|(_, v)| v.theta).collect();
    let (tc, theta_fit_rms) = lstsq(&rows, &thetas)?;
    let lambda = tc[1];
    let theta0 = tc[0] - lambda * t_w.ln();

    let slope_pred = params.c * params.c * w10 / k;
    let lambda_pred = w2 / w10;
    let r_rem: Vec<f64> = window.iter().map(|(t, v)| (v.r - abs_slope * t).abs()).collect();
    let th_rem: Vec<f64> = window
        .iter()
        .map(|(t, v)| (v.theta - theta0 - lambda * t.ln()).abs())
        .collect();
    let manifold_max = samples
        .iter()
        .chain(window.iter().map(|(_, v)| v))
        .map(|v| manifold_residual(v, k, params).abs())
        .fold(0.0, f64::max);
    let lambda_rel = if lambda_pred == 0.0 {
        lambda.abs()
    } else {
        (lambda - lambda_pred).abs() / lambda_pred.abs()
    };
    let fit = CollisionFit {
        branch,
        t_c,
        w10,
        w2,
        theta0,
        slope,
        slope_pred,
        lambda,
        lambda_pred,
        lambda_ell: angular_momentum(state0) / w10,
        residuals: FitResiduals {
            slope_rel: (slope - slope_pred).abs() / slope_pred.abs(),
            lambda_rel,
            w_norm_error,
            manifold_max,
            r_fit_rms,
            theta_fit_rms,
            remainder_exponent: loglog_slope(&taus, &r_rem),
            theta_remainder_exponent: loglog_slope(&taus, &th_rem),
        },
        window: FitWindow {
            t_w,
            levels,
            tau_min: *taus.last().unwrap(),
            tau_max: taus[0],
        },
    };
    Ok(CollisionRun { approach, window, fit })
}

impl CollisionFit {
    /// Report with keys `w10, theta0, slope, slope_pred, lambda,
    /// lambda_pred, residuals, window` plus bookkeeping fields.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("plain data serializes")
    }
}

/// Radial motion (`l = 0`): collisions are continued by reversing `w1`.
/// Returns the aphelion and collision events in time order, stopping after
/// `collisions` collisions.
pub fn radial_bounces(
    state0: &PhaseState,
    k: f64,
    params: &PhysicalParams,
    collisions: usize,
    cfg: &CollisionConfig,
) -> Result<Vec<Event>> {
    let v0 = w_transform(state0, k, params)?;
    if v0.w2.abs() > 1e-12 * state0.radius() * state0.p.norm().max(params.mc()) {
        return Err(Error::WrongRegime(format!("radial motion needs l = 0, got {}", v0.w2)));
    }
    let h = v0.h;
    let cfg_steps = cfg.step_config();
    let (mut t, mut y) = (0.0, [v0.r, v0.w1]);
    let mut events = Vec::new();
    let mut hits = 0;
    while hits < collisions {
        let mut hit: Option<f64> = None;
        let mut aphelia = Vec::new();
        let solved = ode::integrate(
            |_, y: &[f64; 2]| {
                let d = rhs3(&[y[0], 0.0, y[1]], 0.0, h, params);
                [d[0], d[2]]
            },
            t,
            y,
            t + cfg.t_max,
            &cfg_steps,
            |seg| {
                if seg.y0[1] > 0.0 && seg.y1[1] <= 0.0 {
                    let ta = brent(|s| seg.eval(s)[1], seg.t0, seg.t1, 0.0, 4.0 * f64::EPSILON, 200).unwrap_or(seg.t1);
                    aphelia.push(Event {
                        kind: EventKind::Aphelion,
                        t: ta,
                        r: seg.eval(ta)[0],
                    });
                }
                if seg.y1[0] <= 0.0 && seg.t1 != seg.t0 {
                    let tc = brent(|s| seg.eval(s)[0], seg.t0, seg.t1, 0.0, 4.0 * f64::EPSILON, 200).unwrap_or(seg.t1);
                    hit = Some(tc);
                    return Control::Stop(tc);
                }
                Control::Continue
            },
        )?;
        events.extend(aphelia.into_iter().filter(|e| hit.is_none_or(|tc| e.t <= tc)));
        let Some(tc) = hit else {
            if solved.outcome == Outcome::MaxSteps {
                return Err(Error::InsufficientData("radial integration exceeded the step budget".into()));
            }
            break;
        };
        let w1 = solved.solution.eval(tc).expect("collision inside the solution")[1];
        events.push(Event {
            kind: EventKind::Collision,
            t: tc,
            r: 0.0,
        });
        hits += 1;
        t = tc;
        y = [0.0, -w1];
    }
    Ok(events)
}
