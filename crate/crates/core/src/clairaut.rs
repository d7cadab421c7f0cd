//! Clairaut reduction `rho = 1/r` with the polar angle as independent
//! variable.
//!
//! At fixed angular momentum `ell` the radial motion becomes the planar
//! system
//!
//! ```text
//! rho' = eta
//! eta' = -rho - (m / ell^2) gamma(rho, eta; ell) W'(rho)
//! ```
//!
//! with `gamma = sqrt(1 + ell^2 (rho^2 + eta^2) / (c^2 m^2))`. Circular
//! orbits are its equilibria and nearby orbits are periodic in the angle;
//! this module measures that period as a function of the amplitude.

use std::f64::consts::{PI, TAU};
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dynamics::format_g17;
use crate::error::{Error, Result};
use crate::ode::{self, Control, DenseSolution, Outcome, StepConfig};
use crate::physics::{PhysicalParams, Potential};
use crate::roots::{brent, brent_newton, log_space};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClairautState {
    pub rho: f64,
    pub eta: f64,
    pub ell: f64,
}

impl ClairautState {
    pub fn new(rho: f64, eta: f64, ell: f64) -> Result<Self> {
        if !(rho > 0.0) {
            return Err(Error::Domain(format!("rho must be positive, got {rho}")));
        }
        if ell == 0.0 || !ell.is_finite() {
            return Err(Error::InvalidParameter("angular momentum must be nonzero".into()));
        }
        Ok(Self { rho, eta, ell })
    }

    pub fn gamma(&self, params: &PhysicalParams) -> f64 {
        clairaut_gamma(self.rho, self.eta, self.ell, params)
    }
}

/// `sqrt(1 + ell^2 (rho^2 + eta^2) / (c^2 m^2))`.
#[inline]
pub fn clairaut_gamma(rho: f64, eta: f64, ell: f64, params: &PhysicalParams) -> f64 {
    let s = ell / params.mc();
    (1.0 + s * s * (rho * rho + eta * eta)).sqrt()
}

#[inline]
fn eta_rate(rho: f64, eta: f64, ell: f64, pot: &Potential, params: &PhysicalParams) -> f64 {
    -rho - params.m / (ell * ell) * clairaut_gamma(rho, eta, ell, params) * pot.dw(rho)
}

/// `(d rho / d theta, d eta / d theta)`.
pub fn clairaut_rhs(s: &ClairautState, pot: &Potential, params: &PhysicalParams) -> Result<(f64, f64)> {
    if !(s.rho > 0.0) {
        return Err(Error::Domain(format!("rho must be positive, got {}", s.rho)));
    }
    if s.ell == 0.0 {
        return Err(Error::InvalidParameter("angular momentum must be nonzero".into()));
    }
    Ok((s.eta, eta_rate(s.rho, s.eta, s.ell, pot, params)))
}

/// `rho + (m / ell^2) gamma(rho, 0; ell) W'(rho)`; zero exactly at equilibria.
pub fn equilibrium_residual(rho: f64, ell: f64, pot: &Potential, params: &PhysicalParams) -> f64 {
    rho + params.m / (ell * ell) * clairaut_gamma(rho, 0.0, ell, params) * pot.dw(rho)
}

fn equilibrium_residual_derivative(rho: f64, ell: f64, pot: &Potential, params: &PhysicalParams) -> f64 {
    let g = clairaut_gamma(rho, 0.0, ell, params);
    1.0 + rho * pot.dw(rho) / (params.c * params.c * params.m * g) + params.m / (ell * ell) * g * pot.d2w(rho)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Equilibria {
    Isolated(Vec<f64>),
    /// Every `rho` on the scanned range is an equilibrium.
    Continuum,
}

/// All equilibria `(rho0, 0)` at angular momentum `ell`.
///
/// The search covers the potential's `rho` domain, clipped to
/// `[1e-8, 1e8]` for analytic potentials.
pub fn equilibrium_solve(ell: f64, pot: &Potential, params: &PhysicalParams) -> Result<Equilibria> {
    let (lo, hi) = pot.rho_domain();
    equilibrium_solve_in(ell, pot, params, (lo.max(1e-8), hi.min(1e8)))
}

pub fn equilibrium_solve_in(
    ell: f64,
    pot: &Potential,
    params: &PhysicalParams,
    range: (f64, f64),
) -> Result<Equilibria> {
    params.validate()?;
    if ell == 0.0 || !ell.is_finite() {
        return Err(Error::InvalidParameter("angular momentum must be nonzero".into()));
    }
    let (lo, hi) = range;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::InvalidParameter(format!("invalid search range ({lo}, {hi})")));
    }
    let n = ((hi / lo).log10() * 400.0).ceil().max(200.0) as usize;
    let grid = log_space(lo, hi, n);
    let f = |x: f64| equilibrium_residual(x, ell, pot, params);
    if grid.iter().all(|&x| (f(x) / x).abs() < 1e-12) {
        return Ok(Equilibria::Continuum);
    }
    let vals: Vec<f64> = grid.iter().map(|&x| f(x)).collect();
    let mut roots: Vec<f64> = Vec::new();
    for i in 0..grid.len() - 1 {
        let (fa, fb) = (vals[i], vals[i + 1]);
        if !(fa.is_finite() && fb.is_finite()) {
            continue;
        }
        let root = if fa == 0.0 {
            Some(grid[i])
        } else if fa.signum() != fb.signum() && fb != 0.0 {
            brent_newton(f, |x| equilibrium_residual_derivative(x, ell, pot, params), grid[i], grid[i + 1], 0.0)
        } else {
            None
        };
        if let Some(r) = root {
            if roots.last().map_or(true, |&p| (r - p).abs() > 1e-14 * r) {
                roots.push(r);
            }
        }
    }
    if let (Some(&x), Some(&v)) = (grid.last(), vals.last()) {
        if v == 0.0 {
            roots.push(x);
        }
    }
    Ok(Equilibria::Isolated(roots))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Linearization {
    /// `-d(eta')/d(rho)` at the equilibrium.
    pub a: f64,
    /// `d(eta')/d(eta)` at the equilibrium; always zero.
    pub b: f64,
    /// `2 pi / sqrt(A)` for a centre.
    pub theta0: Option<f64>,
    pub saddle: bool,
}

/// Jacobian of the Clairaut field at the equilibrium `(rho0, 0)`.
pub fn linearized_frequency(rho0: f64, ell: f64, pot: &Potential, params: &PhysicalParams) -> Result<Linearization> {
    if !(rho0 > 0.0) {
        return Err(Error::Domain(format!("rho must be positive, got {rho0}")));
    }
    if ell == 0.0 {
        return Err(Error::InvalidParameter("angular momentum must be nonzero".into()));
    }
    let res = equilibrium_residual(rho0, ell, pot, params);
    if !(res.abs() <= 1e-8 * rho0.max(1.0)) {
        return Err(Error::Consistency(format!(
            "(rho0 = {rho0}, 0) is not an equilibrium at ell = {ell} (residual {res:e})"
        )));
    }
    let g = clairaut_gamma(rho0, 0.0, ell, params);
    let a = equilibrium_residual_derivative(rho0, ell, pot, params);
    // d(eta')/d(eta) = -(m / ell^2) W' d(gamma)/d(eta), and d(gamma)/d(eta) = ell^2 eta / (c^2 m^2 gamma)
    let eta = 0.0;
    let b = -params.m * pot.dw(rho0) * eta / (params.mc().powi(2) * g);
    Ok(Linearization {
        a,
        b,
        theta0: (a > 0.0).then(|| TAU / a.sqrt()),
        saddle: a < 0.0,
    })
}

/// Integration tolerances used by the period measurements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for PeriodOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-13,
            atol: 1e-18,
            max_steps: 200_000,
        }
    }
}

impl PeriodOptions {
    fn step_config(&self) -> StepConfig {
        StepConfig {
            rtol: self.rtol,
            atol: self.atol,
            h_max: 0.05,
            h_init: None,
            max_steps: self.max_steps,
        }
    }
}

/// Period of the orbit through `(rho0 + xi, 0)`, computed in polar
/// coordinates around the centre.
///
/// With `rho = rho0 + R cos(phi)`, `eta = -R sin(phi)` the angle `phi`
/// grows monotonically along orbits near a centre and
///
/// ```text
/// dR/dphi = sin(phi) F / (1 + cos(phi) F / R)
/// dT/dphi = 1 / (1 + cos(phi) F / R)
/// ```
///
/// where `F = rho0 + (m / ell^2) gamma W'(rho)`. The period is `T(2 pi)`.
pub fn period_polar(
    rho0: f64,
    ell: f64,
    xi: f64,
    pot: &Potential,
    params: &PhysicalParams,
    opts: &PeriodOptions,
) -> Result<f64> {
    let sol = polar_solution(rho0, ell, xi, pot, params, opts)?;
    let [r_end, t_end] = sol.y_end();
    if (r_end - xi).abs() > 1e-6 * xi {
        return Err(Error::BasinExceeded {
            xi,
            reason: format!("orbit does not close (R(2 pi) = {r_end}, R(0) = {xi})"),
        });
    }
    Ok(t_end)
}

/// `R(phi)` on the orbit through `(rho0 + xi, 0)`, for `phi` in `[0, 2 pi]`.
pub fn polar_radius(
    rho0: f64,
    ell: f64,
    xi: f64,
    phi: f64,
    pot: &Potential,
    params: &PhysicalParams,
    opts: &PeriodOptions,
) -> Result<f64> {
    if !(0.0..=TAU).contains(&phi) {
        return Err(Error::InvalidParameter(format!("phi = {phi} outside [0, 2 pi]")));
    }
    let sol = polar_solution(rho0, ell, xi, pot, params, opts)?;
    Ok(sol.eval(phi).map_or(f64::NAN, |y| y[0]))
}

fn polar_solution(
    rho0: f64,
    ell: f64,
    xi: f64,
    pot: &Potential,
    params: &PhysicalParams,
    opts: &PeriodOptions,
) -> Result<DenseSolution<2>> {
    if !(xi > 0.0) {
        return Err(Error::InvalidParameter(format!("amplitude must be positive, got {xi}")));
    }
    let k = params.m / (ell * ell);
    let force = |r: f64, phi: f64| {
        let (c, s) = (phi.cos(), phi.sin());
        let rho = rho0 + r * c;
        let g = clairaut_gamma(rho, r * s, ell, params);
        (rho, rho0 + k * g * pot.dw(rho))
    };
    let mut failure: Option<String> = None;
    let solved = ode::integrate(
        |phi, y: &[f64; 2]| {
            let r = y[0];
            let (rho, f) = force(r, phi);
            let den = 1.0 + phi.cos() * f / r;
            if !(rho > 0.0) || !f.is_finite() || !(den > 0.0) || !(r > 0.0) {
                return [f64::NAN, f64::NAN];
            }
            [phi.sin() * f / den, 1.0 / den]
        },
        0.0,
        [xi, 0.0],
        TAU,
        &opts.step_config(),
        |seg| {
            let r = seg.y1[0];
            let (rho, f) = force(r, seg.t1);
            if !(rho > 0.0) || !f.is_finite() || 1.0 + seg.t1.cos() * f / r <= 0.0 {
                failure = Some(format!("angle parametrization breaks down at phi = {}", seg.t1));
                return Control::Stop(seg.t1);
            }
            Control::Continue
        },
    )?;
    if let Some(reason) = failure {
        return Err(Error::BasinExceeded { xi, reason });
    }
    match solved.outcome {
        Outcome::Completed => Ok(solved.solution),
        other => Err(Error::BasinExceeded {
            xi,
            reason: format!("polar integration ended with {other:?}"),
        }),
    }
}

/// Dense solution of the Clairaut system in the angle.
#[derive(Debug, Clone)]
pub struct ClairautOrbit {
    pub ell: f64,
    solution: DenseSolution<2>,
    /// Set when `rho` left the potential's domain before the end.
    pub escaped: bool,
}

impl ClairautOrbit {
    pub fn theta_end(&self) -> f64 {
        self.solution.t_end()
    }

    /// `(rho, eta)` at angle `theta`.
    pub fn eval(&self, theta: f64) -> Option<(f64, f64)> {
        self.solution.eval(theta).map(|y| (y[0], y[1]))
    }

    pub fn thetas(&self) -> Vec<f64> {
        self.solution.times()
    }

    pub fn samples(&self) -> Vec<(f64, f64)> {
        self.solution.states().into_iter().map(|y| (y[0], y[1])).collect()
    }
}

/// Integrate the Clairaut system from `s0` over `[0, theta_end]`.
pub fn integrate_clairaut(
    s0: &ClairautState,
    theta_end: f64,
    pot: &Potential,
    params: &PhysicalParams,
    opts: &PeriodOptions,
) -> Result<ClairautOrbit> {
    clairaut_rhs(s0, pot, params)?;
    let ell = s0.ell;
    let (lo, hi) = pot.rho_domain();
    let mut escaped = false;
    let cfg = StepConfig {
        h_max: f64::INFINITY,
        ..opts.step_config()
    };
    let solved = ode::integrate(
        |_, y: &[f64; 2]| [y[1], eta_rate(y[0], y[1], ell, pot, params)],
        0.0,
        [s0.rho, s0.eta],
        theta_end,
        &cfg,
        |seg| {
            let rho = seg.y1[0];
            if !(rho > lo.max(0.0) && rho < hi) {
                escaped = true;
                let (mut a, mut b) = (seg.t0, seg.t1);
                for _ in 0..200 {
                    let m = 0.5 * (a + b);
                    let r = seg.eval(m)[0];
                    if r > lo.max(0.0) && r < hi {
                        a = m;
                    } else {
                        b = m;
                    }
                }
                return Control::Stop(a);
            }
            Control::Continue
        },
    )?;
    let escaped = escaped || solved.outcome == Outcome::StepUnderflow;
    if solved.outcome == Outcome::MaxSteps {
        return Err(Error::InsufficientData(format!(
            "Clairaut integration exceeded {} steps",
            opts.max_steps
        )));
    }
    Ok(ClairautOrbit {
        ell,
        solution: solved.solution,
        escaped,
    })
}

/// Period of the orbit through `(rho0 + xi, 0)` from the first return of
/// `eta` to zero from above, integrating `(rho, eta)` directly.
pub fn period_return_map(
    rho0: f64,
    ell: f64,
    xi: f64,
    pot: &Potential,
    params: &PhysicalParams,
    opts: &PeriodOptions,
) -> Result<f64> {
    if !(xi > 0.0) {
        return Err(Error::InvalidParameter(format!("amplitude must be positive, got {xi}")));
    }
    let theta_max = match linearized_frequency(rho0, ell, pot, params)?.theta0 {
        Some(t) => 4.0 * t,
        None => return Err(Error::BasinExceeded { xi, reason: "equilibrium is not a centre".into() }),
    };
    let mut crossing: Option<f64> = None;
    let mut went_negative = false;
    let cfg = StepConfig {
        h_max: f64::INFINITY,
        ..opts.step_config()
    };
    let solved = ode::integrate(
        |_, y: &[f64; 2]| {
            if !(y[0] > 0.0) {
                return [f64::NAN; 2];
            }
            [y[1], eta_rate(y[0], y[1], ell, pot, params)]
        },
        0.0,
        [rho0 + xi, 0.0],
        theta_max,
        &cfg,
        |seg| {
            let (e0, e1) = (seg.y0[1], seg.y1[1]);
            if e1 < 0.0 && !went_negative {
                went_negative = true;
                return Control::Continue;
            }
            if went_negative && e0 > 0.0 && e1 <= 0.0 {
                let t = brent(|t| seg.eval(t)[1], seg.t0, seg.t1, 1e-15, 4.0 * f64::EPSILON, 200).unwrap_or(seg.t1);
                crossing = Some(t);
                return Control::Stop(t);
            }
            Control::Continue
        },
    )?;
    match crossing {
        Some(t) if solved.outcome == Outcome::Stopped => Ok(t),
        _ => Err(Error::BasinExceeded {
            xi,
            reason: "no return to the transversal".into(),
        }),
    }
}

/// Measured period function with its small-amplitude expansion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodFit {
    pub rho0: f64,
    pub ell: f64,
    /// `(xi, P(xi))`, in input order.
    pub samples: Vec<(f64, f64)>,
    /// Linearized period `2 pi / sqrt(A)`.
    pub theta0: f64,
    /// Coefficient of `xi^2` in `P(xi) - Theta0`.
    pub c2: f64,
    /// Coefficient of `xi`, fitted as a free parameter; zero for a centre.
    pub c1: f64,
    /// Spread of the `c2` estimate (lower-order fit vs full fit) plus the
    /// round-off floor of the measured periods.
    pub residual: f64,
}

impl PeriodFit {
    /// CSV rows `xi,P`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "xi,P")?;
        for (xi, p) in &self.samples {
            writeln!(out, "{},{}", format_g17(*xi), format_g17(*p))?;
        }
        Ok(())
    }

    pub fn sidecar(&self) -> serde_json::Value {
        serde_json::json!({
            "rho0": self.rho0,
            "ell": self.ell,
            "Theta0": self.theta0,
            "c2": self.c2,
            "residual": self.residual,
        })
    }
}

/// Default amplitudes `{x0, x0/2, x0/4, x0/8}` with `x0 = 0.05 rho0`.
pub fn default_amplitudes(rho0: f64) -> Vec<f64> {
    let x0 = 0.05 * rho0;
    vec![x0, x0 / 2.0, x0 / 4.0, x0 / 8.0]
}

/// Least-squares polynomial fit `y ~ sum_j coef_j x^(j + shift)`.
fn poly_fit(x: &[f64], y: &[f64], degree: usize, shift: i32) -> Option<Vec<f64>> {
    let n = x.len();
    let cols = degree + 1;
    if n < cols {
        return None;
    }
    // scale the abscissa to keep the Vandermonde matrix well conditioned
    let s = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let a = DMatrix::from_fn(n, cols, |i, j| (x[i] / s).powi(j as i32 + shift));
    let b = DVector::from_column_slice(y);
    let sol = a.svd(true, true).solve(&b, 1e-14).ok()?;
    Some((0..cols).map(|j| sol[j] / s.powi(j as i32 + shift)).collect())
}

/// Measure `P(xi)` for each amplitude and fit `P = Theta0 + c2 xi^2 + ...`.
///
/// `c2` comes from a Richardson-style polynomial extrapolation of
/// `(P - Theta0) / xi^2` to `xi = 0` using all samples (degree `n - 1`,
/// at most 3).
pub fn period_function(
    rho0: f64,
    ell: f64,
    pot: &Potential,
    params: &PhysicalParams,
    xis: &[f64],
    opts: &PeriodOptions,
) -> Result<PeriodFit> {
    if xis.is_empty() {
        return Err(Error::InvalidParameter("no amplitudes given".into()));
    }
    let lin = linearized_frequency(rho0, ell, pot, params)?;
    let theta0 = lin.theta0.ok_or_else(|| Error::Precondition(format!("equilibrium at rho0 = {rho0} is a saddle")))?;
    let samples = xis
        .iter()
        .map(|&xi| period_polar(rho0, ell, xi, pot, params, opts).map(|p| (xi, p)))
        .collect::<Result<Vec<_>>>()?;
    Ok(fit_period_samples(rho0, ell, theta0, samples, opts.rtol))
}

/// Fit `P = Theta0 + c2 xi^2 + ...` to already measured `(xi, P)` samples.
pub fn fit_period_samples(rho0: f64, ell: f64, theta0: f64, samples: Vec<(f64, f64)>, rtol: f64) -> PeriodFit {
    let xs: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let d: Vec<f64> = samples.iter().map(|(x, p)| (p - theta0) / (x * x)).collect();
    let n = xs.len();
    let deg = (n - 1).min(3);
    let c2 = poly_fit(&xs, &d, deg, 0).map_or(d[0], |c| c[0]);
    let spread = if deg >= 1 {
        // same extrapolation without the largest amplitude
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
        idx.pop();
        let xr: Vec<f64> = idx.iter().map(|&i| xs[i]).collect();
        let dr: Vec<f64> = idx.iter().map(|&i| d[i]).collect();
        poly_fit(&xr, &dr, (deg - 1).min(xr.len() - 1), 0).map_or(0.0, |c| (c[0] - c2).abs())
    } else {
        0.0
    };
    let xmin = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    let floor = 10.0 * rtol * theta0 / (xmin * xmin);
    let c1 = {
        let y: Vec<f64> = samples.iter().map(|(_, p)| p - theta0).collect();
        poly_fit(&xs, &y, n.min(4).saturating_sub(1), 1).map_or(0.0, |c| c[0])
    };
    PeriodFit {
        rho0,
        ell,
        samples,
        theta0,
        c2,
        c1,
        residual: spread + floor,
    }
}

/// Best rational approximation `p/q` (q <= q_max) from the continued
/// fraction of `x`, if one lies within `tol`.
pub fn rational_approximation(x: f64, q_max: u64, tol: f64) -> Option<(i64, u64)> {
    if !x.is_finite() {
        return None;
    }
    let (mut h0, mut h1) = (0i64, 1i64);
    let (mut k0, mut k1) = (1u64, 0u64);
    let mut frac = x;
    for _ in 0..64 {
        let a = frac.floor();
        if a.abs() > 1e15 {
            break;
        }
        let ai = a as i64;
        let h2 = ai.checked_mul(h1)?.checked_add(h0)?;
        let k2 = (ai as u64).checked_mul(k1).and_then(|v| v.checked_add(k0));
        let k2 = match k2 {
            Some(v) if ai >= 0 => v,
            _ if k1 == 0 => 1,
            _ => break,
        };
        if k2 > q_max {
            break;
        }
        if (h2 as f64 / k2 as f64 - x).abs() <= tol {
            return Some((h2, k2));
        }
        h0 = h1;
        h1 = h2;
        k0 = k1;
        k1 = k2;
        let rem = frac - a;
        if rem == 0.0 {
            break;
        }
        frac = 1.0 / rem;
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum Closure {
    /// `Theta / pi = p / q`; the orbit closes after `revolutions` radial
    /// periods, i.e. after time `period`.
    Closed { p: i64, q: u64, revolutions: u64, period: f64 },
    DenseTorus,
}

/// Bound on the denominator used by the closure test.
pub const CLOSURE_Q_MAX: u64 = 64;
/// Tolerance used by the closure test.
pub const CLOSURE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeReconstruction {
    /// Angular period of `rho`.
    pub theta_period: f64,
    /// Mean of `dt/dtheta` over one period.
    pub sigma_drift: f64,
    /// `(theta, psi(theta))` with `t(theta) = t0 + sigma_drift theta + psi(theta)`.
    pub psi: Vec<(f64, f64)>,
    /// `max |t(theta + Theta) - t(theta) - sigma_drift Theta|` over the samples.
    pub periodicity_defect: f64,
    pub closure: Closure,
}

/// Reconstruct `t(theta) = int m gamma / (ell rho^2) dtheta` along a
/// `theta_period`-periodic Clairaut solution `orbit(theta) = (rho, eta)`.
pub fn time_reconstruction<F>(orbit: F, theta_period: f64, ell: f64, params: &PhysicalParams) -> Result<TimeReconstruction>
where
    F: Fn(f64) -> Option<(f64, f64)>,
{
    if !(theta_period > 0.0) || ell == 0.0 {
        return Err(Error::InvalidParameter("period and angular momentum must be nonzero".into()));
    }
    let (r0, e0) = orbit(0.0).ok_or_else(|| Error::Precondition("orbit undefined at 0".into()))?;
    let (r1, e1) = orbit(theta_period).ok_or_else(|| Error::Precondition("orbit undefined at Theta".into()))?;
    if (r1 - r0).abs() > 1e-9 * r0.max(1.0) || (e1 - e0).abs() > 1e-9 * r0.max(1.0) {
        return Err(Error::Precondition(format!(
            "orbit is not periodic with period {theta_period} (rho: {r0} -> {r1})"
        )));
    }
    let rate = |theta: f64| -> f64 {
        let th = theta.rem_euclid(theta_period);
        match orbit(th) {
            Some((rho, eta)) if rho > 0.0 => params.m * clairaut_gamma(rho, eta, ell, params) / (ell * rho * rho),
            _ => f64::NAN,
        }
    };
    // mean by the periodic trapezoid rule
    let n = 512;
    let h = theta_period / n as f64;
    let sigma_drift = (0..n).map(|j| rate(j as f64 * h)).sum::<f64>() / n as f64;
    if !sigma_drift.is_finite() {
        return Err(Error::Precondition("orbit leaves rho > 0".into()));
    }
    let cfg = StepConfig {
        h_max: h,
        ..StepConfig::with_tolerance(1e-12, 1e-14)
    };
    let sol = ode::solve(|th, _: &[f64; 1]| [rate(th)], 0.0, [0.0], 2.0 * theta_period, &cfg)?;
    let t_at = |th: f64| sol.solution.eval(th).map_or(f64::NAN, |y| y[0]);
    let m = 256;
    let mut psi = Vec::with_capacity(m + 1);
    let mut defect: f64 = 0.0;
    for j in 0..=m {
        let th = theta_period * j as f64 / m as f64;
        let t = t_at(th);
        psi.push((th, t - sigma_drift * th));
        defect = defect.max((t_at(th + theta_period) - t - sigma_drift * theta_period).abs());
    }
    let closure = match rational_approximation(theta_period / PI, CLOSURE_Q_MAX, CLOSURE_TOL) {
        Some((p, q)) => {
            // Theta / (2 pi) = p / (2 q) in lowest terms fixes the number of
            // radial periods after which the orbit closes
            let g = gcd(p.unsigned_abs(), 2 * q);
            let revolutions = 2 * q / g;
            Closure::Closed {
                p,
                q,
                revolutions,
                period: revolutions as f64 * sigma_drift * theta_period,
            }
        }
        None => Closure::DenseTorus,
    };
    Ok(TimeReconstruction {
        theta_period,
        sigma_drift,
        psi,
        periodicity_defect: defect,
        closure,
    })
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}
