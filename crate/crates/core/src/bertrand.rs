//! Candidate isochronous families and the period-constant obstruction.
//!
//! Suppose every circular orbit `rho0 = 1/r0` of some potential were an
//! isochronous centre of the Clairaut system with the same angular period
//! `Theta`, and write `a = (2 pi / Theta)^2 - 1`. Then `W'` and the
//! circular angular momentum `L(rho0)` obey
//!
//! ```text
//! W''  = -(a / rho0) W' - W'^3 / (c^2 L^2 rho0)
//! L'   = -(1 + a) L (c^2 m^2 + rho0^2 L^2) / (2 c^2 m^2 rho0 + rho0^3 L^2)
//! ```
//!
//! This module integrates that system into a tabulated potential, evaluates
//! the closed-form `xi^2` coefficient of the period function (which carries
//! the polynomial `Q(x)`, `x = rho0^2 L^2 / (c^2 m^2)`), and certifies that
//! `Q` cannot vanish along a family.
//!
//! The variable called `x` here is often written `sigma(rho0)`; it is
//! unrelated to the Coulomb `sigma` of [`crate::coulomb`].

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::clairaut::clairaut_gamma;
use crate::dynamics::format_g17;
use crate::error::{Error, Result};
use crate::ode::{self, Control, Outcome, StepConfig};
use crate::physics::{PhysicalParams, Potential, TabulatedPotential};

fn check_point(rho0: f64, ell: f64) -> Result<()> {
    if !(rho0 > 0.0) {
        return Err(Error::Domain(format!("rho0 must be positive, got {rho0}")));
    }
    if !(ell > 0.0) {
        return Err(Error::Domain(format!("L must be positive, got {ell}")));
    }
    Ok(())
}

/// `W''(rho0)` forced on a family with parameter `a`.
pub fn family_w2(rho0: f64, wp: f64, ell: f64, a: f64, params: &PhysicalParams) -> f64 {
    -a / rho0 * wp - wp.powi(3) / (params.c * params.c * ell * ell * rho0)
}

/// `(dW'/drho0, dL/drho0)` along a family.
pub fn family_rhs(rho0: f64, wp: f64, ell: f64, a: f64, params: &PhysicalParams) -> Result<(f64, f64)> {
    check_point(rho0, ell)?;
    Ok((family_w2(rho0, wp, ell, a, params), family_dl(rho0, ell, a, params)))
}

fn family_dl(rho0: f64, ell: f64, a: f64, params: &PhysicalParams) -> f64 {
    let mc2 = params.mc().powi(2);
    let x = rho0 * rho0 * ell * ell;
    -(1.0 + a) * ell * (mc2 + x) / (2.0 * mc2 * rho0 + rho0 * x)
}

/// `W'''(rho0)` along a family.
pub fn family_w3(rho0: f64, wp: f64, ell: f64, a: f64, params: &PhysicalParams) -> f64 {
    let c2 = params.c * params.c;
    let m2 = params.mc().powi(2);
    let l2 = ell * ell;
    let x = rho0 * rho0 * l2;
    let mu0 = a * (1.0 + a) * c2 * c2 * l2 * l2 * (2.0 * m2 + x);
    let mu1 = c2 * l2 * (6.0 * a * m2 + (2.0 * a - 1.0) * x);
    let mu2 = 6.0 * m2 + 3.0 * x;
    let w2 = wp * wp;
    wp * (mu0 + mu1 * w2 + mu2 * w2 * w2) / (c2 * c2 * rho0 * rho0 * l2 * l2 * (2.0 * m2 + x))
}

/// `W''''(rho0)` along a family.
pub fn family_w4(rho0: f64, wp: f64, ell: f64, a: f64, params: &PhysicalParams) -> f64 {
    let c2 = params.c * params.c;
    let m2 = params.mc().powi(2);
    let l2 = ell * ell;
    let x = rho0 * rho0 * l2;
    let s = 2.0 * m2 + x;
    let eta0 = a * (1.0 + a) * (2.0 + a) * c2.powi(3) * l2.powi(3) * s.powi(3);
    let eta1 = c2 * c2
        * l2
        * l2
        * (8.0 * a * (4.0 + 7.0 * a) * m2.powi(3)
            + 12.0 * a * (2.0 + 5.0 * a) * m2 * m2 * x
            + 2.0 * (10.0 * a * a - 1.0) * m2 * x * x
            + 3.0 * a * a * x.powi(3));
    let eta2 = 9.0 * c2 * l2 * (4.0 * a * m2 + (a - 1.0) * x) * s * s;
    let eta3 = 15.0 * s.powi(3);
    let w2 = wp * wp;
    -wp * (eta0 + eta1 * w2 + eta2 * w2 * w2 + eta3 * w2.powi(3))
        / (c2.powi(3) * rho0.powi(3) * l2.powi(3) * s.powi(3))
}

/// `W'(rho*)` making `(rho*, 0)` an equilibrium at angular momentum `ell*`.
pub fn equilibrium_wprime(rho_star: f64, ell_star: f64, params: &PhysicalParams) -> f64 {
    -rho_star * ell_star * ell_star / (params.m * clairaut_gamma(rho_star, 0.0, ell_star, params))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilyOptions {
    /// Node spacing of the tabulation; `rho*` is always a node.
    pub spacing: f64,
    pub rtol: f64,
    pub atol: f64,
}

impl Default for FamilyOptions {
    fn default() -> Self {
        Self {
            spacing: 1e-3,
            rtol: 1e-13,
            atol: 1e-15,
        }
    }
}

/// Tabulated candidate family.
#[derive(Debug, Clone)]
pub struct BertrandFamily {
    pub a: f64,
    pub rho_star: f64,
    pub ell_star: f64,
    pub params: PhysicalParams,
    pub rho: Vec<f64>,
    pub wprime: Vec<f64>,
    pub ell: Vec<f64>,
    /// `W` by exact quadrature of the Hermite interpolant, zero at `rho*`.
    pub w: Vec<f64>,
    /// Set when `L` degenerated before the end of the requested range.
    pub truncated: Option<String>,
    potential: Potential,
}

impl BertrandFamily {
    /// The tabulated potential `W` of the family.
    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    /// Node index closest to `rho0`.
    pub fn nearest(&self, rho0: f64) -> usize {
        let i = self.rho.partition_point(|&r| r < rho0);
        if i == 0 {
            0
        } else if i >= self.rho.len() {
            self.rho.len() - 1
        } else if (self.rho[i] - rho0).abs() < (rho0 - self.rho[i - 1]).abs() {
            i
        } else {
            i - 1
        }
    }

    /// `x = rho0^2 L^2 / (c^2 m^2)` at every node.
    pub fn x_values(&self) -> Vec<f64> {
        let mc2 = self.params.mc().powi(2);
        self.rho.iter().zip(&self.ell).map(|(r, l)| r * r * l * l / mc2).collect()
    }

    /// Largest equilibrium residual over the nodes.
    pub fn max_equilibrium_residual(&self) -> f64 {
        self.rho
            .iter()
            .zip(&self.wprime)
            .zip(&self.ell)
            .map(|((&r, &wp), &l)| {
                (r + self.params.m / (l * l) * clairaut_gamma(r, 0.0, l, &self.params) * wp).abs()
            })
            .fold(0.0, f64::max)
    }

    /// CSV rows `rho0,Wprime,L,W`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "rho0,Wprime,L,W")?;
        for i in 0..self.rho.len() {
            writeln!(
                out,
                "{},{},{},{}",
                format_g17(self.rho[i]),
                format_g17(self.wprime[i]),
                format_g17(self.ell[i]),
                format_g17(self.w[i])
            )?;
        }
        Ok(())
    }

    pub fn metadata(&self) -> serde_json::Value {
        serde_json::json!({
            "a": self.a,
            "rho_star": self.rho_star,
            "ell_star": self.ell_star,
        })
    }
}

/// Integrate the family equations from `(rho*, L = ell*)` across `range`
/// and tabulate `W'`, `W''`, `W'''` and `L` on a uniform grid through `rho*`.
pub fn build_family(
    a: f64,
    rho_star: f64,
    ell_star: f64,
    range: (f64, f64),
    params: &PhysicalParams,
    opts: &FamilyOptions,
) -> Result<BertrandFamily> {
    params.validate()?;
    if !(a > -1.0) || !a.is_finite() {
        return Err(Error::InvalidParameter(format!("a must exceed -1, got {a}")));
    }
    if !(ell_star > 0.0) || !(rho_star > 0.0) {
        return Err(Error::InvalidParameter("rho* and ell* must be positive".into()));
    }
    let (lo, hi) = range;
    if !(lo > 0.0 && lo <= rho_star && rho_star <= hi) {
        return Err(Error::InvalidParameter(format!("rho* = {rho_star} outside ({lo}, {hi})")));
    }
    if !(opts.spacing > 0.0) {
        return Err(Error::InvalidParameter("spacing must be positive".into()));
    }
    let h = opts.spacing;
    let n_lo = ((rho_star - lo) / h + 1e-9).floor() as i64;
    let n_hi = ((hi - rho_star) / h + 1e-9).floor() as i64;
    let wp_star = equilibrium_wprime(rho_star, ell_star, params);
    let cfg = StepConfig {
        h_max: h,
        ..StepConfig::with_tolerance(opts.rtol, opts.atol)
    };
    let ell_floor = 1e-8 * ell_star;
    let mut notes = Vec::new();

    let mut branch = |target: f64| -> Result<ode::DenseSolution<2>> {
        let solved = ode::integrate(
            |r, y: &[f64; 2]| {
                if !(y[1] > 0.0) {
                    return [f64::NAN; 2];
                }
                [family_w2(r, y[0], y[1], a, params), family_dl(r, y[1], a, params)]
            },
            rho_star,
            [wp_star, ell_star],
            target,
            &cfg,
            |seg| {
                if seg.y1[1] < ell_floor || !seg.y1[0].is_finite() {
                    Control::Stop(seg.t0)
                } else {
                    Control::Continue
                }
            },
        )?;
        if solved.outcome != Outcome::Completed {
            notes.push(format!(
                "L degenerates near rho0 = {}; family truncated",
                solved.solution.t_end()
            ));
        }
        Ok(solved.solution)
    };
    let up = branch(rho_star + n_hi as f64 * h)?;
    let down = branch(rho_star - n_lo as f64 * h)?;

    let mut rho = Vec::new();
    let mut wprime = Vec::new();
    let mut ell = Vec::new();
    for j in -n_lo..=n_hi {
        let r = rho_star + j as f64 * h;
        let y = if j >= 0 { up.eval(r) } else { down.eval(r) };
        if let Some([wp, l]) = y {
            rho.push(r);
            wprime.push(wp);
            ell.push(l);
        }
    }
    if rho.len() < 2 {
        return Err(Error::InsufficientData("family has fewer than two nodes".into()));
    }
    let d2: Vec<f64> = (0..rho.len()).map(|i| family_w2(rho[i], wprime[i], ell[i], a, params)).collect();
    let d3: Vec<f64> = (0..rho.len()).map(|i| family_w3(rho[i], wprime[i], ell[i], a, params)).collect();
    let tab = TabulatedPotential::new(rho.clone(), wprime.clone(), d2.clone(), d3.clone(), 0.0)?;
    let shift = tab.w(rho_star);
    let tab = TabulatedPotential::new(rho.clone(), wprime.clone(), d2, d3, -shift)?;
    let w = tab.node_w().to_vec();
    Ok(BertrandFamily {
        a,
        rho_star,
        ell_star,
        params: *params,
        rho,
        wprime,
        ell,
        w,
        truncated: (!notes.is_empty()).then(|| notes.join("; ")),
        potential: Potential::Tabulated(Arc::new(tab)),
    })
}

/// The obstruction polynomial `Q(x)` for parameter `a`.
pub fn q_poly(x: f64, a: f64) -> f64 {
    let coef = q_coefficients(a);
    coef.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// Coefficients of `Q` in increasing degree.
pub fn q_coefficients(a: f64) -> [f64; 6] {
    [
        8.0 * (3.0 - a) * a,
        28.0 * (3.0 - a) * a,
        2.0 * (3.0 - a) * (8.0 + 19.0 * a),
        63.0 + 46.0 * a - 25.0 * a * a,
        22.0 + 10.0 * a - 8.0 * a * a,
        2.0 + 2.0 * a - a * a,
    ]
}

/// Closed-form coefficient of `xi^2` in the period function of the centre
/// `(rho0, 0)` at `ell = L(rho0)` on a family with parameter `a`.
pub fn period_constant_formula(rho0: f64, ell: f64, a: f64, params: &PhysicalParams) -> f64 {
    let mc2 = params.mc().powi(2);
    let x = rho0 * rho0 * ell * ell / mc2;
    let y = rho0 * rho0 * ell * ell;
    -PI * mc2.powi(5) * q_poly(x, a)
        / (12.0 * (1.0 + a).sqrt() * rho0 * rho0 * (2.0 * mc2 + y).powi(3) * (mc2 + y).powi(2))
}

/// First-order amplitude profile of `R(phi)` around the centre.
pub fn r1(phi: f64, a: f64) -> f64 {
    (1.0 + a).sqrt() / (1.0 + a * phi.cos().powi(2)).sqrt()
}

/// Second-order amplitude profile of `R(phi)` around the centre.
pub fn r2(phi: f64, rho0: f64, ell: f64, a: f64, params: &PhysicalParams) -> f64 {
    let m2 = params.mc().powi(2);
    let x = rho0 * rho0 * ell * ell;
    let l1 = -(2.0 * a * m2 * m2 + 3.0 * (2.0 + a) * m2 * x + (2.0 + a) * x * x);
    let l2 = 3.0 * x * (2.0 * m2 + x);
    let l3 = 2.0 * a * (1.0 + a) * m2 * m2 + 3.0 * a * (3.0 + a) * m2 * x + (a * a + 3.0 * a - 1.0) * x * x;
    let c = phi.cos();
    let first = r1(phi, a);
    first * (l1 + first / (1.0 + a * c * c) * (l2 * c + l3 * c.powi(3)))
        / (6.0 * rho0 * (2.0 * m2 * m2 + 3.0 * m2 * x + x * x))
}

/// `Gamma(1/rho0)` from `W'(rho0)` alone: the positive root of
/// `g^2 + rho0 W' g / (m c^2) - 1 = 0`.
pub fn gamma_tilde(rho0: f64, wp: f64, params: &PhysicalParams) -> f64 {
    let b = rho0 * wp / params.rest_energy();
    0.5 * (-b + (b * b + 4.0).sqrt())
}

/// The cubic `6a^3 - 9a^2 + 6a + 1`.
pub fn obstruction_cubic(a: f64) -> f64 {
    ((6.0 * a - 9.0) * a + 6.0) * a + 1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CubicCertificate {
    pub value_at_0: f64,
    pub value_at_1: f64,
    /// Discriminant of the derivative `18a^2 - 18a + 6`.
    pub derivative_discriminant: f64,
    /// Positive at both ends and strictly increasing, hence root-free on [0, 1].
    pub root_free: bool,
}

pub fn cubic_certificate() -> CubicCertificate {
    let (d2, d1, d0) = (18.0, -18.0, 6.0);
    let disc = d1 * d1 - 4.0 * d2 * d0;
    let value_at_0 = obstruction_cubic(0.0);
    let value_at_1 = obstruction_cubic(1.0);
    CubicCertificate {
        value_at_0,
        value_at_1,
        derivative_discriminant: disc,
        root_free: value_at_0 > 0.0 && value_at_1 > 0.0 && disc < 0.0 && d2 > 0.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObstructionReport {
    pub a: f64,
    /// `(1 - a) / a`; `None` at `a = 0`.
    pub k: Option<f64>,
    pub q_direct: Option<f64>,
    /// `2 (1 + a)(1 + 6a - 9a^2 + 6a^3) / a^5`.
    pub q_identity: Option<f64>,
    pub cubic: CubicCertificate,
    /// `K(a)` is a positive root of `Q`.
    pub k_is_positive_root: bool,
    pub no_isochronous_family: bool,
}

/// Evaluate the obstruction at parameter `a`.
pub fn obstruction_certificate(a: f64) -> Result<ObstructionReport> {
    if !(a > -1.0) || !a.is_finite() {
        return Err(Error::InvalidParameter(format!("a must exceed -1, got {a}")));
    }
    let cubic = cubic_certificate();
    let k = (a != 0.0).then(|| (1.0 - a) / a);
    let q_direct = k.map(|k| q_poly(k, a));
    let q_identity = (a != 0.0).then(|| 2.0 * (1.0 + a) * obstruction_cubic(a) / a.powi(5));
    let k_is_positive_root = match (k, q_direct) {
        (Some(k), Some(q)) => k > 0.0 && q.abs() <= 1e-12 * q_coefficients(a).iter().map(|c| c.abs()).sum::<f64>(),
        _ => false,
    };
    // K(a) > 0 requires 0 < a < 1, where the cubic has no roots
    let no_isochronous_family = cubic.root_free && !k_is_positive_root;
    Ok(ObstructionReport {
        a,
        k,
        q_direct,
        q_identity,
        cubic,
        k_is_positive_root,
        no_isochronous_family,
    })
}
