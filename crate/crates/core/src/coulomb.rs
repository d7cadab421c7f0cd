//! The relativistic Coulomb problem `V = -k/r`: energy-momentum diagram,
//! Runge-Lenz vector, closed-form precessing orbits and apsidal angles.

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dynamics::{apsis_times, format_g17, EventKind, Trajectory};
use crate::error::{Error, Result};
use crate::physics::{lorentz_gamma, perp, PhaseState, PhysicalParams, Potential, Vec2};
use crate::roots::brent;

/// Default relative tolerance for boundary comparisons in [`classify`].
pub const CLASSIFY_TOL: f64 = 1e-9;

fn check_k(k: f64) -> Result<()> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::InvalidParameter(format!("coupling k must be positive, got {k}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaInfo {
    /// `1 - k^2 / (l^2 c^2)`; `None` at `l = 0`.
    pub sigma2: Option<f64>,
    /// Square root of `sigma2` when it is non-negative.
    pub sigma: Option<f64>,
    /// `-m c^2 (1 - sigma)` for `|l| >= k/c`. At `|l| = k/c` this is an
    /// infimum that is not attained.
    pub h_min: Option<f64>,
}

pub fn sigma_and_min_energy(ell: f64, k: f64, params: &PhysicalParams) -> SigmaInfo {
    if ell == 0.0 {
        return SigmaInfo { sigma2: None, sigma: None, h_min: None };
    }
    let ratio2 = (k / (ell * params.c)).powi(2);
    let sigma2 = 1.0 - ratio2;
    let sigma = (sigma2 >= 0.0).then(|| sigma2.sqrt());
    SigmaInfo {
        sigma2: Some(sigma2),
        sigma,
        // 1 - sigma = (1 - sigma^2) / (1 + sigma), without cancellation
        h_min: sigma.map(|s| -params.rest_energy() * ratio2 / (1.0 + s)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EMPoint {
    pub ell: f64,
    pub h: f64,
}

impl EMPoint {
    pub fn new(ell: f64, h: f64) -> Self {
        Self { ell, h }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EMKind {
    Empty,
    Circular,
    BoundedNonCollision,
    UnboundedSupercritical,
    Subcritical,
    CriticalMomentum,
    ExcludedPoint,
}

impl EMKind {
    /// Integer code used in diagram CSV files.
    pub fn code(self) -> u8 {
        match self {
            EMKind::Empty => 0,
            EMKind::Circular => 1,
            EMKind::BoundedNonCollision => 2,
            EMKind::UnboundedSupercritical => 3,
            EMKind::Subcritical => 4,
            EMKind::CriticalMomentum => 5,
            EMKind::ExcludedPoint => 6,
        }
    }

    /// Whether the level set contains at least one phase point.
    pub fn is_nonempty(self) -> bool {
        !matches!(self, EMKind::Empty | EMKind::ExcludedPoint)
    }
}

impl fmt::Display for EMKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EMClass {
    pub kind: EMKind,
    pub sigma2: Option<f64>,
    pub h_min: Option<f64>,
    /// False on the critical line, where `h_min = -m c^2` is only an infimum.
    pub h_min_attained: bool,
}

/// Partition of the `(l, h)` plane by the motions it admits.
///
/// Boundary comparisons use `tol` relative to `k^2` for `l^2 c^2 - k^2`,
/// to `m c^2` near `h = -m c^2`, and to `max(|h|, |h_min|)` at the circular
/// boundary.
pub fn classify(pt: EMPoint, k: f64, params: &PhysicalParams, tol: f64) -> EMClass {
    let mc2 = params.rest_energy();
    let info = sigma_and_min_energy(pt.ell, k, params);
    let disc = (pt.ell * params.c).powi(2) - k * k;
    let etol = tol * mc2;
    let make = |kind, h_min, attained| EMClass {
        kind,
        sigma2: info.sigma2,
        h_min,
        h_min_attained: attained,
    };
    if disc.abs() <= tol * k * k {
        let kind = if (pt.h + mc2).abs() <= etol {
            EMKind::ExcludedPoint
        } else if pt.h < -mc2 {
            EMKind::Empty
        } else {
            EMKind::CriticalMomentum
        };
        return make(kind, Some(-mc2), false);
    }
    if disc < 0.0 {
        return make(EMKind::Subcritical, None, false);
    }
    let h_min = info.h_min.expect("supercritical momentum has a real sigma");
    let kind = if (pt.h - h_min).abs() <= tol * pt.h.abs().max(h_min.abs()) {
        EMKind::Circular
    } else if pt.h < h_min {
        EMKind::Empty
    } else if pt.h < 0.0 {
        EMKind::BoundedNonCollision
    } else {
        EMKind::UnboundedSupercritical
    };
    make(kind, Some(h_min), true)
}

/// Classify every point of the grid `ells x hs`, row-major in `ells`.
pub fn classify_grid(ells: &[f64], hs: &[f64], k: f64, params: &PhysicalParams, tol: f64) -> Vec<(EMPoint, EMClass)> {
    ells.iter()
        .flat_map(|&ell| hs.iter().map(move |&h| EMPoint::new(ell, h)))
        .map(|pt| (pt, classify(pt, k, params, tol)))
        .collect()
}

/// CSV with header `ell,h,class_code`.
pub fn write_diagram_csv<W: Write>(rows: &[(EMPoint, EMClass)], mut out: W) -> std::io::Result<()> {
    writeln!(out, "ell,h,class_code")?;
    for (pt, class) in rows {
        writeln!(out, "{},{},{}", format_g17(pt.ell), format_g17(pt.h), class.kind.code())?;
    }
    Ok(())
}

/// `psi_l(s) = c sqrt(m^2 c^2 + l^2 s^2) - m c^2 - k s`: the least energy of
/// a state at radius `1/s` with angular momentum `l`.
pub fn effective_energy(s: f64, ell: f64, k: f64, params: &PhysicalParams) -> f64 {
    let (mc, pt) = (params.mc(), ell * s);
    if pt.abs() <= mc {
        let gamma = (1.0 + (pt / mc).powi(2)).sqrt();
        pt * pt / (params.m * (gamma + 1.0)) - k * s
    } else {
        // split to avoid overflow of pt^2 at extreme radii
        params.c * mc.hypot(pt) - k * s - params.rest_energy()
    }
}

/// An explicit phase point on the level set of `(l, h)`, with the reach of
/// the radial range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Witness {
    pub state: PhaseState,
    /// The level set contains states arbitrarily close to the origin.
    pub reaches_origin: bool,
    /// The level set contains states arbitrarily far away.
    pub reaches_infinity: bool,
}

impl Witness {
    /// Class implied by the witness data, away from boundary curves.
    pub fn implied_kind(&self) -> EMKind {
        if self.reaches_origin {
            EMKind::Subcritical
        } else if self.reaches_infinity {
            EMKind::UnboundedSupercritical
        } else {
            EMKind::BoundedNonCollision
        }
    }
}

/// Build `q = x e1`, `p = p_r e1 + (l/x) e2` with `H = h`, scanning the
/// radius `x` for `psi_l(1/x) <= h`. `None` when no radius qualifies.
pub fn existence_witness(pt: EMPoint, k: f64, params: &PhysicalParams) -> Result<Option<Witness>> {
    params.validate()?;
    check_k(k)?;
    let unit = params.rest_energy() / k;
    let psi = |s_hat: f64| effective_energy(s_hat * unit, pt.ell, k, params);
    let feasible = |s_hat: f64| psi(s_hat) <= pt.h;
    let reaches_origin = feasible(1e300);
    let reaches_infinity = feasible(1e-300);
    // prefer radii near the natural scale k / (m c^2) to limit cancellation
    let mut best: Option<f64> = None;
    let mut lowest = (f64::INFINITY, 0.0);
    for i in -3000..=3000 {
        let s_hat = 10f64.powf(i as f64 / 10.0);
        let v = psi(s_hat);
        if v < lowest.0 {
            lowest = (v, s_hat);
        }
        if v <= pt.h && best.is_none_or(|b: f64| s_hat.ln().abs() < b.ln().abs()) {
            best = Some(s_hat);
        }
    }
    if best.is_none() {
        // the feasible band may be narrower than the grid spacing
        let (lo, hi) = (lowest.1 / 10f64.powf(0.1), lowest.1 * 10f64.powf(0.1));
        let dpsi = |s_hat: f64| {
            let pt_mom = pt.ell * s_hat * unit;
            let gamma = (1.0 + (pt_mom / params.mc()).powi(2)).sqrt();
            pt.ell * pt_mom / (params.m * gamma) - k
        };
        if let Some(s_min) = brent(dpsi, lo, hi, 0.0, 1e-15, 300) {
            if feasible(s_min) {
                best = Some(s_min);
            }
        }
    }
    let Some(s_hat) = best else {
        return Ok(None);
    };
    let s = s_hat * unit;
    let x = 1.0 / s;
    let pt_mom = pt.ell * s;
    let total = (pt.h + params.rest_energy() + k * s) / params.c;
    let pr2 = (total - params.mc()) * (total + params.mc()) - pt_mom * pt_mom;
    let state = PhaseState {
        q: Vec2::new(x, 0.0),
        p: Vec2::new(pr2.max(0.0).sqrt(), pt_mom),
    };
    Ok(Some(Witness {
        state,
        reaches_origin,
        reaches_infinity,
    }))
}

/// Perihelion and aphelion radii of a bounded non-collision level set.
pub fn apsides(pt: EMPoint, k: f64, params: &PhysicalParams) -> Result<(f64, f64)> {
    params.validate()?;
    check_k(k)?;
    let class = classify(pt, k, params, CLASSIFY_TOL);
    if !matches!(class.kind, EMKind::BoundedNonCollision | EMKind::Circular) {
        return Err(Error::WrongRegime(format!("({}, {}) is {}", pt.ell, pt.h, class.kind)));
    }
    let psi = |s: f64| effective_energy(s, pt.ell, k, params) - pt.h;
    let dpsi = |s: f64| {
        let pt_mom = pt.ell * s;
        let gamma = (1.0 + (pt_mom / params.mc()).powi(2)).sqrt();
        pt.ell * pt.ell * s / (params.m * gamma) - k
    };
    let mut hi = params.rest_energy() / k;
    while dpsi(hi) <= 0.0 {
        hi *= 2.0;
    }
    let s_star = brent(dpsi, 0.0, hi, 0.0, 1e-15, 300).ok_or_else(|| Error::Consistency("no minimum of psi".into()))?;
    if class.kind == EMKind::Circular || psi(s_star) >= 0.0 {
        return Ok((1.0 / s_star, 1.0 / s_star));
    }
    let mut top = 2.0 * s_star;
    while psi(top) <= 0.0 {
        top *= 2.0;
    }
    let near = brent(psi, s_star, top, 0.0, 1e-15, 300);
    let far = brent(psi, 0.0, s_star, 0.0, 1e-15, 300);
    match (near, far) {
        (Some(a), Some(b)) => Ok((1.0 / a, 1.0 / b)),
        _ => Err(Error::Consistency("turning points not bracketed".into())),
    }
}

/// State at perihelion on the positive horizontal axis, moving with the
/// orientation of `l`.
pub fn perihelion_state(pt: EMPoint, k: f64, params: &PhysicalParams) -> Result<PhaseState> {
    let (r_min, _) = apsides(pt, k, params)?;
    PhaseState::new(Vec2::new(r_min, 0.0), Vec2::new(0.0, pt.ell / r_min))
}

/// `R = -m k gamma q/|q| + q |p|^2 - p <q, p>`.
pub fn runge_lenz_vector(state: &PhaseState, k: f64, params: &PhysicalParams) -> Result<Vec2> {
    let r = state.radius();
    if !(r > 0.0) {
        return Err(Error::Singularity("Runge-Lenz vector at q = 0".into()));
    }
    let (q, p) = (state.q, state.p);
    let gamma = lorentz_gamma(&p, params);
    Ok(q * (-params.m * k * gamma / r) + q * p.norm_squared() - p * q.dot(&p))
}

/// `|q| + <R, q>/(m k gamma) - |q x p|^2/(m k gamma)`, identically zero.
pub fn conic_residual(state: &PhaseState, k: f64, params: &PhysicalParams) -> Result<f64> {
    let rl = runge_lenz_vector(state, k, params)?;
    let mkg = params.m * k * lorentz_gamma(&state.p, params);
    let ell = crate::physics::angular_momentum(state);
    Ok(state.radius() + rl.dot(&state.q) / mkg - ell * ell / mkg)
}

/// Runge-Lenz components in the frame `alpha = q/|q|`, `beta = J alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RLFrame {
    pub theta: f64,
    pub r_alpha: f64,
    pub r_beta: f64,
}

impl RLFrame {
    pub fn from_state(state: &PhaseState, theta: f64, k: f64, params: &PhysicalParams) -> Result<Self> {
        let rl = runge_lenz_vector(state, k, params)?;
        let alpha = state.q / state.radius();
        Ok(Self {
            theta,
            r_alpha: rl.dot(&alpha),
            r_beta: rl.dot(&perp(&alpha)),
        })
    }

    /// `R_alpha^2 + sigma^2 R_beta^2`.
    pub fn invariant(&self, sigma2: f64) -> f64 {
        self.r_alpha.powi(2) + sigma2 * self.r_beta.powi(2)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RLReport {
    pub ell: f64,
    pub h: f64,
    pub sigma2: f64,
    pub dtheta: f64,
    pub frames: Vec<RLFrame>,
    /// Max central-difference residual of `R_alpha' = sigma^2 R_beta` and
    /// `R_beta' = -R_alpha`.
    pub ode_residual: f64,
    pub invariant0: f64,
    pub invariant_drift: f64,
    /// Max residual of `R_alpha = -(l^2/k)(h + m c^2) + (m/k)(l^2 c^2 - k^2) gamma`.
    pub crg_residual: f64,
}

/// Sample the Runge-Lenz frame components of `traj` on a uniform angle
/// grid of spacing `dtheta` and audit the linear system they satisfy.
pub fn rl_components_and_invariant(traj: &Trajectory, k: f64, dtheta: f64) -> Result<RLReport> {
    check_k(k)?;
    let params = traj.params();
    if traj.len() < 2 {
        return Err(Error::InsufficientData("trajectory has fewer than two samples".into()));
    }
    if !(dtheta > 0.0) {
        return Err(Error::InvalidParameter(format!("angle step must be positive, got {dtheta}")));
    }
    let ell = traj.ell[0];
    if !(ell > 0.0) {
        return Err(Error::Orientation { ell });
    }
    let pot = Potential::coulomb(k)?;
    let h = crate::physics::hamiltonian(&traj.states[0], &pot, &params)?;
    let sigma2 = 1.0 - (k / (ell * params.c)).powi(2);
    let (th0, th1) = (traj.theta[0], *traj.theta.last().unwrap());
    let forward = th1 > th0;
    let n = ((th1 - th0).abs() / dtheta).floor() as usize;
    if n < 3 {
        return Err(Error::InsufficientData("trajectory sweeps fewer than three angle steps".into()));
    }
    let step = if forward { dtheta } else { -dtheta };
    let mut frames = Vec::with_capacity(n + 1);
    let mut idx = 0usize;
    for j in 0..=n {
        let target = th0 + j as f64 * step;
        // the angle is monotone for l != 0
        while idx + 1 < traj.len() - 1 && (traj.theta[idx + 1] - target) * step <= 0.0 {
            idx += 1;
        }
        let (ta, tb) = (traj.times[idx], traj.times[idx + 1]);
        let f = |t: f64| traj.theta_at(t).map_or(f64::NAN, |th| th - target);
        let t = if j == 0 {
            ta
        } else {
            brent(f, ta, tb, 0.0, 4.0 * f64::EPSILON, 200)
                .ok_or_else(|| Error::Consistency(format!("angle {target} not bracketed")))?
        };
        let state = traj.eval(t).ok_or_else(|| Error::Consistency("dense output out of range".into()))?;
        frames.push(RLFrame::from_state(&state, target, k, &params)?);
    }
    let mut ode_residual: f64 = 0.0;
    for w in frames.windows(3) {
        let da = (w[2].r_alpha - w[0].r_alpha) / (2.0 * step);
        let db = (w[2].r_beta - w[0].r_beta) / (2.0 * step);
        ode_residual = ode_residual
            .max((da - sigma2 * w[1].r_beta).abs())
            .max((db + w[1].r_alpha).abs());
    }
    let invariant0 = frames[0].invariant(sigma2);
    let invariant_drift = frames
        .iter()
        .map(|f| (f.invariant(sigma2) - invariant0).abs())
        .fold(0.0, f64::max);
    let mc2 = params.rest_energy();
    let disc = (ell * params.c).powi(2) - k * k;
    let mut crg_residual: f64 = 0.0;
    for s in &traj.states {
        let f = RLFrame::from_state(s, 0.0, k, &params)?;
        let gamma = lorentz_gamma(&s.p, &params);
        let pred = -(ell * ell / k) * (h + mc2) + (params.m / k) * disc * gamma;
        crg_residual = crg_residual.max((f.r_alpha - pred).abs());
    }
    Ok(RLReport {
        ell,
        h,
        sigma2,
        dtheta,
        frames,
        ode_residual,
        invariant0,
        invariant_drift,
        crg_residual,
    })
}

/// `1/r(theta) = [c^2 R_alpha(theta) + k (h + m c^2)] / (l^2 c^2 - k^2)` with
/// `R_alpha = C cs(|sigma| (theta - theta_ref)) + S sn(|sigma| (theta - theta_ref))`,
/// where `(cs, sn)` is `(cos, sin)` for `sigma^2 > 0` and `(cosh, sinh)` for
/// `sigma^2 < 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormOrbit {
    pub ell: f64,
    pub h: f64,
    pub k: f64,
    pub params: PhysicalParams,
    pub sigma2: f64,
    pub theta_ref: f64,
    pub c_coef: f64,
    pub s_coef: f64,
}

impl ClosedFormOrbit {
    fn new(ell: f64, h: f64, k: f64, params: &PhysicalParams) -> Result<Self> {
        params.validate()?;
        check_k(k)?;
        let disc = (ell * params.c).powi(2) - k * k;
        if disc.abs() <= 1e-14 * k * k {
            return Err(Error::InvalidParameter("closed form undefined at |l| = k/c".into()));
        }
        Ok(Self {
            ell,
            h,
            k,
            params: *params,
            sigma2: disc / (ell * params.c).powi(2),
            theta_ref: 0.0,
            c_coef: 0.0,
            s_coef: 0.0,
        })
    }

    /// Orbit with `R_alpha = A cos(sigma (theta - theta0))`, or
    /// `A cosh(|sigma| (theta - theta0))` when `sigma^2 < 0`.
    pub fn from_amplitude(a_amp: f64, theta0: f64, ell: f64, h: f64, k: f64, params: &PhysicalParams) -> Result<Self> {
        Ok(Self {
            theta_ref: theta0,
            c_coef: a_amp,
            ..Self::new(ell, h, k, params)?
        })
    }

    /// Orbit through `state`, whose polar angle is taken to be `theta`.
    pub fn from_state(state: &PhaseState, theta: f64, k: f64, params: &PhysicalParams) -> Result<Self> {
        let pot = Potential::coulomb(k)?;
        let h = crate::physics::hamiltonian(state, &pot, params)?;
        let ell = crate::physics::angular_momentum(state);
        let base = Self::new(ell, h, k, params)?;
        let f = RLFrame::from_state(state, theta, k, params)?;
        let s = base.sigma2.abs().sqrt();
        // R_alpha'(theta) = sigma^2 R_beta
        Ok(Self {
            theta_ref: theta,
            c_coef: f.r_alpha,
            s_coef: base.sigma2 * f.r_beta / s,
            ..base
        })
    }

    pub fn r_alpha(&self, theta: f64) -> f64 {
        let x = self.sigma2.abs().sqrt() * (theta - self.theta_ref);
        if self.sigma2 > 0.0 {
            self.c_coef * x.cos() + self.s_coef * x.sin()
        } else {
            self.c_coef * x.cosh() + self.s_coef * x.sinh()
        }
    }

    pub fn inverse_radius(&self, theta: f64) -> f64 {
        let c2 = self.params.c * self.params.c;
        let disc = (self.ell * self.params.c).powi(2) - self.k * self.k;
        (c2 * self.r_alpha(theta) + self.k * (self.h + self.params.rest_energy())) / disc
    }

    pub fn radius(&self, theta: f64) -> Result<f64> {
        let inv = self.inverse_radius(theta);
        if !(inv > 0.0 && inv.is_finite()) {
            return Err(Error::OutOfBranch(format!("1/r = {inv} at theta = {theta}")));
        }
        Ok(1.0 / inv)
    }

    /// `(A, theta0)` of the single-term form, when it exists.
    pub fn amplitude_phase(&self) -> Option<(f64, f64)> {
        let s = self.sigma2.abs().sqrt();
        let (c, d) = (self.c_coef, self.s_coef);
        if self.sigma2 > 0.0 {
            let a = c.hypot(d);
            let shift = if a == 0.0 { 0.0 } else { d.atan2(c) / s };
            Some((a, self.theta_ref + shift))
        } else if d.abs() < c.abs() {
            let a = c.signum() * (c * c - d * d).sqrt();
            Some((a, self.theta_ref - (d / c).atanh() / s))
        } else {
            None
        }
    }
}

/// `r(theta)` on the orbit with amplitude `a_amp` and phase `theta0`.
pub fn orbit_closed_form(
    theta: f64,
    a_amp: f64,
    theta0: f64,
    ell: f64,
    h: f64,
    k: f64,
    params: &PhysicalParams,
) -> Result<f64> {
    ClosedFormOrbit::from_amplitude(a_amp, theta0, ell, h, k, params)?.radius(theta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormFit {
    pub orbit: ClosedFormOrbit,
    /// Max `|1/r_traj - 1/r_fit|` over the samples.
    pub max_mismatch: f64,
}

/// Least-squares fit of the closed form to the samples of `traj`, with
/// `l` and `h` taken from the initial state.
pub fn fit_closed_form(traj: &Trajectory, k: f64) -> Result<ClosedFormFit> {
    let params = traj.params();
    if traj.len() < 3 {
        return Err(Error::InsufficientData("need at least three samples".into()));
    }
    let pot = Potential::coulomb(k)?;
    let h = crate::physics::hamiltonian(&traj.states[0], &pot, &params)?;
    let base = ClosedFormOrbit::new(traj.ell[0], h, k, &params)?;
    let theta_ref = traj.theta[0];
    let c2 = params.c * params.c;
    let disc = (base.ell * params.c).powi(2) - k * k;
    let offset = k * (h + params.rest_energy()) / disc;
    let s = base.sigma2.abs().sqrt();
    let basis = |th: f64| {
        let x = s * (th - theta_ref);
        if base.sigma2 > 0.0 {
            (x.cos(), x.sin())
        } else {
            (x.cosh(), x.sinh())
        }
    };
    let n = traj.len();
    let a = nalgebra::DMatrix::from_fn(n, 2, |i, j| {
        let (cs, sn) = basis(traj.theta[i]);
        c2 / disc * if j == 0 { cs } else { sn }
    });
    let b = nalgebra::DVector::from_fn(n, |i, _| 1.0 / traj.r[i] - offset);
    let sol = a
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|e| Error::Consistency(format!("closed-form fit failed: {e}")))?;
    let orbit = ClosedFormOrbit {
        theta_ref,
        c_coef: sol[0],
        s_coef: sol[1],
        ..base
    };
    let max_mismatch = traj
        .theta
        .iter()
        .zip(&traj.r)
        .map(|(&th, &r)| (1.0 / r - orbit.inverse_radius(th)).abs())
        .fold(0.0, f64::max);
    Ok(ClosedFormFit { orbit, max_mismatch })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Precession {
    /// Mean angle between consecutive perihelia.
    pub delta_theta: f64,
    /// Largest deviation of a single perihelion gap from the mean.
    pub spread: f64,
    /// `2 pi / sigma`.
    pub predicted: f64,
    /// `delta_theta - 2 pi`.
    pub precession_per_period: f64,
    /// `2 pi (1/sigma - 1)`.
    pub predicted_precession: f64,
    pub perihelia: usize,
}

/// Angle swept between successive perihelia of a Coulomb orbit.
pub fn apsidal_precession(traj: &Trajectory, k: f64) -> Result<Precession> {
    let params = traj.params();
    let pot = Potential::coulomb(k)?;
    let ell = traj.ell[0];
    let info = sigma_and_min_energy(ell, k, &params);
    let sigma = info
        .sigma
        .filter(|s| *s > 0.0)
        .ok_or_else(|| Error::WrongRegime(format!("no real sigma for l = {ell}")))?;
    let thetas: Vec<f64> = apsis_times(traj, &pot)
        .into_iter()
        .filter(|e| e.kind == EventKind::Perihelion)
        .map(|e| traj.theta_at(e.t).ok_or_else(|| Error::Consistency("perihelion outside trajectory".into())))
        .collect::<Result<_>>()?;
    if thetas.len() < 2 {
        return Err(Error::InsufficientData(format!("{} perihelia found, need 2", thetas.len())));
    }
    let gaps: Vec<f64> = thetas.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let delta_theta = gaps.iter().sum::<f64>() / gaps.len() as f64;
    let spread = gaps.iter().map(|g| (g - delta_theta).abs()).fold(0.0, f64::max);
    let tau = std::f64::consts::TAU;
    Ok(Precession {
        delta_theta,
        spread,
        predicted: tau / sigma,
        precession_per_period: delta_theta - tau,
        predicted_precession: tau * (1.0 / sigma - 1.0),
        perihelia: thetas.len(),
    })
}
