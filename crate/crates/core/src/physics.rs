//! Physical parameters, central potentials and the kinematic maps shared by
//! every other module.
//!
//! Potentials are exposed both as `V(r)` and in Clairaut form
//! `W(rho) = V(1/rho)`, each with derivatives up to third order.

use std::sync::Arc;

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec2 = Vector2<f64>;

/// Rotation by +90 degrees: the unit vector of increasing polar angle.
#[inline]
pub fn perp(v: &Vec2) -> Vec2 {
    Vec2::new(-v.y, v.x)
}

/// Planar cross product `u1 v2 - u2 v1`.
#[inline]
pub fn cross(u: &Vec2, v: &Vec2) -> f64 {
    u.x * v.y - u.y * v.x
}

/// Mass and speed of light. Defaults to `m = c = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub m: f64,
    pub c: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self { m: 1.0, c: 1.0 }
    }
}

impl PhysicalParams {
    pub fn new(m: f64, c: f64) -> Result<Self> {
        let p = Self { m, c };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.m > 0.0 && self.m.is_finite()) {
            return Err(Error::InvalidParameter(format!("mass must be positive, got {}", self.m)));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "speed of light must be positive, got {}",
                self.c
            )));
        }
        Ok(())
    }

    /// `m c`
    #[inline]
    pub fn mc(&self) -> f64 {
        self.m * self.c
    }

    /// Rest energy `m c^2`.
    #[inline]
    pub fn rest_energy(&self) -> f64 {
        self.m * self.c * self.c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PotentialKind {
    /// `V(r) = -k / r`
    Coulomb,
    /// `V(r) = -c sqrt(k / r^2 + c^2 m^2)`, the potential whose circular
    /// orbits all share the angular momentum `sqrt(k)`.
    ConstantMomentum,
    /// Tabulated Clairaut form, built from a candidate isochronous family.
    Tabulated,
}

impl std::fmt::Display for PotentialKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PotentialKind::Coulomb => "coulomb",
            PotentialKind::ConstantMomentum => "constant-momentum",
            PotentialKind::Tabulated => "tabulated",
        })
    }
}

impl std::str::FromStr for PotentialKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "coulomb" => Ok(PotentialKind::Coulomb),
            "constant-momentum" => Ok(PotentialKind::ConstantMomentum),
            "tabulated" => Ok(PotentialKind::Tabulated),
            other => Err(format!("unknown potential `{other}` (coulomb, constant-momentum, tabulated)")),
        }
    }
}

/// A central potential with analytic derivatives up to order three.
#[derive(Debug, Clone)]
pub enum Potential {
    Coulomb { k: f64 },
    ConstantMomentum { k: f64, params: PhysicalParams },
    Tabulated(Arc<TabulatedPotential>),
}

impl Potential {
    pub fn new(kind: PotentialKind, k: f64, params: PhysicalParams) -> Result<Self> {
        params.validate()?;
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::InvalidParameter(format!("coupling k must be positive, got {k}")));
        }
        match kind {
            PotentialKind::Coulomb => Ok(Potential::Coulomb { k }),
            PotentialKind::ConstantMomentum => Ok(Potential::ConstantMomentum { k, params }),
            PotentialKind::Tabulated => Err(Error::InvalidParameter(
                "tabulated potentials are built from a Bertrand family".into(),
            )),
        }
    }

    pub fn coulomb(k: f64) -> Result<Self> {
        Self::new(PotentialKind::Coulomb, k, PhysicalParams::default())
    }

    pub fn kind(&self) -> PotentialKind {
        match self {
            Potential::Coulomb { .. } => PotentialKind::Coulomb,
            Potential::ConstantMomentum { .. } => PotentialKind::ConstantMomentum,
            Potential::Tabulated(_) => PotentialKind::Tabulated,
        }
    }

    pub fn coupling(&self) -> Option<f64> {
        match self {
            Potential::Coulomb { k } | Potential::ConstantMomentum { k, .. } => Some(*k),
            Potential::Tabulated(_) => None,
        }
    }

    /// Range of `rho = 1/r` on which the potential is represented.
    pub fn rho_domain(&self) -> (f64, f64) {
        match self {
            Potential::Tabulated(t) => t.domain(),
            _ => (0.0, f64::INFINITY),
        }
    }

    /// `V'(r) > 0` on the represented domain.
    pub fn is_attractive(&self) -> bool {
        match self {
            Potential::Tabulated(t) => t.dw.iter().all(|&d| d < 0.0),
            _ => true,
        }
    }

    pub fn v(&self, r: f64) -> f64 {
        match self {
            Potential::Coulomb { k } => -k / r,
            _ => self.w(1.0 / r),
        }
    }

    pub fn dv(&self, r: f64) -> f64 {
        match self {
            Potential::Coulomb { k } => k / (r * r),
            Potential::ConstantMomentum { k, params } => {
                let c = params.c;
                c * k / (r * r * (k + params.mc().powi(2) * r * r).sqrt())
            }
            Potential::Tabulated(_) => {
                let rho = 1.0 / r;
                -self.dw(rho) * rho * rho
            }
        }
    }

    pub fn d2v(&self, r: f64) -> f64 {
        match self {
            Potential::Coulomb { k } => -2.0 * k / (r * r * r),
            _ => {
                let rho = 1.0 / r;
                let rho3 = rho * rho * rho;
                2.0 * rho3 * self.dw(rho) + rho3 * rho * self.d2w(rho)
            }
        }
    }

    pub fn d3v(&self, r: f64) -> f64 {
        match self {
            Potential::Coulomb { k } => 6.0 * k / r.powi(4),
            _ => {
                let rho = 1.0 / r;
                let rho4 = rho.powi(4);
                -6.0 * rho4 * self.dw(rho) - 6.0 * rho4 * rho * self.d2w(rho) - rho4 * rho * rho * self.d3w(rho)
            }
        }
    }

    pub fn w(&self, rho: f64) -> f64 {
        match self {
            Potential::Coulomb { k } => -k * rho,
            Potential::ConstantMomentum { k, params } => -params.c * (k * rho * rho + params.mc().powi(2)).sqrt(),
            Potential::Tabulated(t) => t.w(rho),
        }
    }

    pub fn dw(&self, rho: f64) -> f64 {
        match self {
            Potential::Coulomb { k } => -k,
            Potential::ConstantMomentum { k, params } => {
                let s = (k * rho * rho + params.mc().powi(2)).sqrt();
                -params.c * k * rho / s
            }
            Potential::Tabulated(t) => t.dw(rho),
        }
    }

    pub fn d2w(&self, rho: f64) -> f64 {
        match self {
            Potential::Coulomb { .. } => 0.0,
            Potential::ConstantMomentum { k, params } => {
                let mc2 = params.mc().powi(2);
                let s = (k * rho * rho + mc2).sqrt();
                -params.c * k * mc2 / (s * s * s)
            }
            Potential::Tabulated(t) => t.d2w(rho),
        }
    }

    pub fn d3w(&self, rho: f64) -> f64 {
        match self {
            Potential::Coulomb { .. } => 0.0,
            Potential::ConstantMomentum { k, params } => {
                let mc2 = params.mc().powi(2);
                let s = (k * rho * rho + mc2).sqrt();
                3.0 * params.c * k * k * mc2 * rho / s.powi(5)
            }
            Potential::Tabulated(t) => t.d3w(rho),
        }
    }
}

/// Clairaut form `W(rho)` tabulated on a strictly increasing grid.
///
/// `W'` is a cubic Hermite interpolant of the nodal `(W', W'')` data and
/// `W''` one of `(W'', W''')`; `W` is the exact integral of the `W'`
/// interpolant, anchored at `W(grid[0]) = w0`. Outside the grid every
/// evaluator returns NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedPotential {
    rho: Vec<f64>,
    w: Vec<f64>,
    dw: Vec<f64>,
    d2w: Vec<f64>,
    d3w: Vec<f64>,
}

impl TabulatedPotential {
    pub fn new(rho: Vec<f64>, dw: Vec<f64>, d2w: Vec<f64>, d3w: Vec<f64>, w0: f64) -> Result<Self> {
        let n = rho.len();
        if n < 2 {
            return Err(Error::InvalidParameter("tabulated potential needs at least two nodes".into()));
        }
        if dw.len() != n || d2w.len() != n || d3w.len() != n {
            return Err(Error::InvalidParameter("tabulated columns differ in length".into()));
        }
        if rho.windows(2).any(|p| !(p[1] > p[0])) || !(rho[0] > 0.0) {
            return Err(Error::InvalidParameter("rho grid must be positive and strictly increasing".into()));
        }
        let mut w = Vec::with_capacity(n);
        w.push(w0);
        for i in 0..n - 1 {
            let h = rho[i + 1] - rho[i];
            let inc = h * (0.5 * (dw[i] + dw[i + 1]) + h * (d2w[i] - d2w[i + 1]) / 12.0);
            w.push(w[i] + inc);
        }
        Ok(Self { rho, w, dw, d2w, d3w })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.rho[0], *self.rho.last().unwrap())
    }

    pub fn nodes(&self) -> &[f64] {
        &self.rho
    }

    pub fn node_w(&self) -> &[f64] {
        &self.w
    }

    fn locate(&self, x: f64) -> Option<(usize, f64, f64)> {
        let (lo, hi) = self.domain();
        if !(x >= lo && x <= hi) {
            return None;
        }
        let i = self.rho.partition_point(|&r| r <= x).clamp(1, self.rho.len() - 1) - 1;
        let h = self.rho[i + 1] - self.rho[i];
        Some((i, h, (x - self.rho[i]) / h))
    }

    fn hermite(f0: f64, f1: f64, d0: f64, d1: f64, h: f64, s: f64) -> f64 {
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * f0
            + (s3 - 2.0 * s2 + s) * h * d0
            + (-2.0 * s3 + 3.0 * s2) * f1
            + (s3 - s2) * h * d1
    }

    fn hermite_derivative(f0: f64, f1: f64, d0: f64, d1: f64, h: f64, s: f64) -> f64 {
        let s2 = s * s;
        ((6.0 * s2 - 6.0 * s) * f0 + (6.0 * s - 6.0 * s2) * f1) / h
            + (3.0 * s2 - 4.0 * s + 1.0) * d0
            + (3.0 * s2 - 2.0 * s) * d1
    }

    pub fn w(&self, x: f64) -> f64 {
        let Some((i, h, s)) = self.locate(x) else {
            return f64::NAN;
        };
        let (f0, f1, d0, d1) = (self.dw[i], self.dw[i + 1], self.d2w[i], self.d2w[i + 1]);
        let s2 = s * s;
        let s3 = s2 * s;
        let s4 = s3 * s;
        self.w[i]
            + h * ((0.5 * s4 - s3 + s) * f0
                + (0.25 * s4 - 2.0 * s3 / 3.0 + 0.5 * s2) * h * d0
                + (-0.5 * s4 + s3) * f1
                + (0.25 * s4 - s3 / 3.0) * h * d1)
    }

    pub fn dw(&self, x: f64) -> f64 {
        match self.locate(x) {
            Some((i, h, s)) => Self::hermite(self.dw[i], self.dw[i + 1], self.d2w[i], self.d2w[i + 1], h, s),
            None => f64::NAN,
        }
    }

    pub fn d2w(&self, x: f64) -> f64 {
        match self.locate(x) {
            Some((i, h, s)) => Self::hermite(self.d2w[i], self.d2w[i + 1], self.d3w[i], self.d3w[i + 1], h, s),
            None => f64::NAN,
        }
    }

    pub fn d3w(&self, x: f64) -> f64 {
        match self.locate(x) {
            Some((i, h, s)) => {
                Self::hermite_derivative(self.d2w[i], self.d2w[i + 1], self.d3w[i], self.d3w[i + 1], h, s)
            }
            None => f64::NAN,
        }
    }
}

/// Cartesian phase point `(q, p)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseState {
    pub q: Vec2,
    pub p: Vec2,
}

impl PhaseState {
    pub fn new(q: Vec2, p: Vec2) -> Result<Self> {
        if !(q.norm() > 0.0) {
            return Err(Error::Singularity("position at the origin".into()));
        }
        Ok(Self { q, p })
    }

    pub fn from_array(y: [f64; 4]) -> Self {
        Self {
            q: Vec2::new(y[0], y[1]),
            p: Vec2::new(y[2], y[3]),
        }
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.q.x, self.q.y, self.p.x, self.p.y]
    }

    pub fn radius(&self) -> f64 {
        self.q.norm()
    }

    /// Mirror in the horizontal axis; flips the sign of the angular momentum.
    pub fn reflected(&self) -> Self {
        Self {
            q: Vec2::new(self.q.x, -self.q.y),
            p: Vec2::new(self.p.x, -self.p.y),
        }
    }
}

/// Lorentz factor `sqrt(c^2 m^2 + |p|^2) / (c m)`.
pub fn lorentz_gamma(p: &Vec2, params: &PhysicalParams) -> f64 {
    let mc = params.mc();
    (1.0 + p.norm_squared() / (mc * mc)).sqrt()
}

/// Kinetic energy `m c^2 (gamma - 1)`, evaluated without cancellation.
pub fn kinetic_energy(p: &Vec2, params: &PhysicalParams) -> f64 {
    let p2 = p.norm_squared();
    p2 / (params.m * (lorentz_gamma(p, params) + 1.0))
}

/// `H = c^2 sqrt(m^2 + |p|^2/c^2) + V(|q|) - m c^2`.
pub fn hamiltonian(state: &PhaseState, pot: &Potential, params: &PhysicalParams) -> Result<f64> {
    let r = state.radius();
    if !(r > 0.0) {
        return Err(Error::Singularity("hamiltonian evaluated at q = 0".into()));
    }
    Ok(kinetic_energy(&state.p, params) + pot.v(r))
}

/// `L = q1 p2 - q2 p1`.
pub fn angular_momentum(state: &PhaseState) -> f64 {
    cross(&state.q, &state.p)
}

/// `p = m v / sqrt(1 - |v|^2/c^2)`.
pub fn velocity_to_momentum(v: &Vec2, params: &PhysicalParams) -> Result<Vec2> {
    let speed = v.norm();
    if !(speed < params.c) {
        return Err(Error::Superluminal { speed, c: params.c });
    }
    let beta2 = (speed / params.c).powi(2);
    Ok(v * (params.m / (1.0 - beta2).sqrt()))
}

/// `v = p / (m gamma(p))`; always subluminal.
pub fn momentum_to_velocity(p: &Vec2, params: &PhysicalParams) -> Vec2 {
    p / (params.m * lorentz_gamma(p, params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn unit() -> PhysicalParams {
        PhysicalParams::default()
    }

    #[test]
    fn coulomb_values() {
        let pot = Potential::new(PotentialKind::Coulomb, 1.0, unit()).unwrap();
        assert_eq!(pot.v(2.0), -0.5);
        assert_eq!(pot.dv(2.0), 0.25);
    }

    #[test]
    fn constant_momentum_derivative() {
        let pot = Potential::new(PotentialKind::ConstantMomentum, 1.0, unit()).unwrap();
        assert_relative_eq!(pot.dv(1.0), 1.0 / 2f64.sqrt(), max_relative = 1e-15);
        // general closed form c k / (r^2 sqrt(k + c^2 m^2 r^2))
        let params = PhysicalParams::new(1.5, 2.0).unwrap();
        let pot = Potential::new(PotentialKind::ConstantMomentum, 0.7, params).unwrap();
        let r: f64 = 1.3;
        let expected = 2.0 * 0.7 / (r * r * (0.7 + 9.0 * r * r).sqrt());
        assert_relative_eq!(pot.dv(r), expected, max_relative = 1e-14);
    }

    #[test]
    fn invalid_parameters() {
        assert!(matches!(
            Potential::new(PotentialKind::Coulomb, 0.0, unit()),
            Err(Error::InvalidParameter(_))
        ));
        assert!(Potential::new(PotentialKind::Coulomb, 1.0, PhysicalParams { m: 0.0, c: 1.0 }).is_err());
        assert!(Potential::new(PotentialKind::Coulomb, 1.0, PhysicalParams { m: 1.0, c: -1.0 }).is_err());
        assert!(Potential::new(PotentialKind::Tabulated, 1.0, unit()).is_err());
    }

    #[test]
    fn gamma_values() {
        assert_eq!(lorentz_gamma(&Vec2::zeros(), &unit()), 1.0);
        assert_relative_eq!(lorentz_gamma(&Vec2::new(0.0, 1.0), &unit()), 2f64.sqrt(), max_relative = 1e-15);
    }

    #[test]
    fn hamiltonian_values() {
        let pot = Potential::coulomb(1.0).unwrap();
        let s = PhaseState::new(Vec2::new(2.0, 0.0), Vec2::zeros()).unwrap();
        assert_eq!(hamiltonian(&s, &pot, &unit()).unwrap(), -0.5);
        let s = PhaseState::new(Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)).unwrap();
        assert_relative_eq!(hamiltonian(&s, &pot, &unit()).unwrap(), 2f64.sqrt() - 2.0, max_relative = 1e-14);
        let s = PhaseState { q: Vec2::zeros(), p: Vec2::zeros() };
        assert!(matches!(hamiltonian(&s, &pot, &unit()), Err(Error::Singularity(_))));
        assert!(PhaseState::new(Vec2::zeros(), Vec2::zeros()).is_err());
    }

    #[test]
    fn angular_momentum_values() {
        let s = PhaseState::from_array([1.0, 0.0, 0.0, 1.0]);
        assert_eq!(angular_momentum(&s), 1.0);
        let s = PhaseState::from_array([0.0, 2.0, 1.0, 0.0]);
        assert_eq!(angular_momentum(&s), -2.0);
        let s = PhaseState::from_array([0.3, -1.2, 0.3 * 4.5, -1.2 * 4.5]);
        assert_eq!(angular_momentum(&s), 0.0);
    }

    #[test]
    fn velocity_maps() {
        let params = unit();
        assert_eq!(velocity_to_momentum(&Vec2::zeros(), &params).unwrap(), Vec2::zeros());
        let p = velocity_to_momentum(&Vec2::new(0.6, 0.0), &params).unwrap();
        assert_relative_eq!(p.x, 0.75, max_relative = 1e-15);
        let v = momentum_to_velocity(&Vec2::new(1e6, 0.0), &params);
        assert!(v.norm() < 1.0);
        assert!(matches!(
            velocity_to_momentum(&Vec2::new(1.0, 0.0), &params),
            Err(Error::Superluminal { .. })
        ));
    }

    fn central_difference(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
        (f(x + h) - f(x - h)) / (2.0 * h)
    }

    #[test]
    fn finite_difference_derivatives_converge_quadratically() {
        let params = PhysicalParams::new(1.0, 1.0).unwrap();
        for pot in [
            Potential::new(PotentialKind::Coulomb, 1.0, params).unwrap(),
            Potential::new(PotentialKind::ConstantMomentum, 1.0, params).unwrap(),
        ] {
            for &r in &[0.5, 1.0, 3.0] {
                let checks: [(&dyn Fn(f64) -> f64, f64); 3] = [
                    (&|x| pot.v(x), pot.dv(r)),
                    (&|x| pot.dv(x), pot.d2v(r)),
                    (&|x| pot.d2v(x), pot.d3v(r)),
                ];
                for (f, exact) in checks {
                    let e1 = (central_difference(f, r, 1e-2) - exact).abs();
                    let e2 = (central_difference(f, r, 5e-3) - exact).abs();
                    assert!(e1 < 1e-2 * exact.abs().max(1.0), "{:?} r={r}", pot.kind());
                    let ratio = e1 / e2;
                    assert!(ratio > 3.5 && ratio < 4.5, "{:?} r={r} ratio={ratio}", pot.kind());
                }
            }
        }
    }

    #[test]
    fn clairaut_form_consistency_on_log_grid() {
        let params = unit();
        for pot in [
            Potential::new(PotentialKind::Coulomb, 1.0, params).unwrap(),
            Potential::new(PotentialKind::ConstantMomentum, 1.0, params).unwrap(),
        ] {
            for rho in crate::roots::log_space(1e-3, 1e3, 61) {
                let lhs = pot.dw(rho);
                let rhs = -pot.dv(1.0 / rho) / (rho * rho);
                assert_relative_eq!(lhs, rhs, max_relative = 1e-12);
                assert_relative_eq!(pot.w(rho), pot.v(1.0 / rho), max_relative = 1e-14);
            }
        }
    }

    #[test]
    fn tabulated_matches_analytic_source() {
        let params = unit();
        let src = Potential::new(PotentialKind::ConstantMomentum, 1.0, params).unwrap();
        let rho: Vec<f64> = (0..=400).map(|i| 0.5 + i as f64 * 0.005).collect();
        let tab = TabulatedPotential::new(
            rho.clone(),
            rho.iter().map(|&x| src.dw(x)).collect(),
            rho.iter().map(|&x| src.d2w(x)).collect(),
            rho.iter().map(|&x| src.d3w(x)).collect(),
            src.w(0.5),
        )
        .unwrap();
        let pot = Potential::Tabulated(Arc::new(tab));
        for i in 0..97 {
            let x = 0.5013 + i as f64 * 0.0153;
            assert_relative_eq!(pot.w(x), src.w(x), max_relative = 1e-12);
            assert_relative_eq!(pot.dw(x), src.dw(x), max_relative = 1e-9);
            assert_relative_eq!(pot.d2w(x), src.d2w(x), max_relative = 1e-9);
            assert_relative_eq!(pot.d3w(x), src.d3w(x), max_relative = 1e-4);
        }
        assert!(pot.dw(0.4).is_nan());
        assert!(pot.is_attractive());
    }

    #[test]
    fn tabulated_rejects_bad_grid() {
        let r = TabulatedPotential::new(vec![1.0, 1.0], vec![0.0; 2], vec![0.0; 2], vec![0.0; 2], 0.0);
        assert!(r.is_err());
    }

    proptest! {
        #[test]
        fn gamma_at_least_one(px in -1e3f64..1e3, py in -1e3f64..1e3) {
            let g = lorentz_gamma(&Vec2::new(px, py), &unit());
            prop_assert!(g >= 1.0);
            if px != 0.0 || py != 0.0 {
                prop_assert!(g > 1.0 || px.hypot(py) < 1e-7);
            }
        }

        #[test]
        fn gamma_monotone(a in 0.0f64..100.0, b in 0.0f64..100.0) {
            prop_assume!((a - b).abs() > 1e-9);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let params = unit();
            prop_assert!(lorentz_gamma(&Vec2::new(lo, 0.0), &params) < lorentz_gamma(&Vec2::new(0.0, hi), &params));
        }

        #[test]
        fn velocity_roundtrip(speed in 0.0f64..0.99, angle in 0.0f64..std::f64::consts::TAU, m in 0.1f64..10.0, c in 0.5f64..5.0) {
            let params = PhysicalParams::new(m, c).unwrap();
            let v = Vec2::new(angle.cos(), angle.sin()) * (speed * c);
            let p = velocity_to_momentum(&v, &params).unwrap();
            let back = momentum_to_velocity(&p, &params);
            prop_assert!((back - v).norm() <= 1e-12 * v.norm().max(1e-300) + 1e-300);
        }

        #[test]
        fn inverse_map_subluminal(px in -1e6f64..1e6, py in -1e6f64..1e6) {
            let params = unit();
            let p = Vec2::new(px, py);
            let v = momentum_to_velocity(&p, &params);
            let expected = params.c * p.norm() / (params.mc().powi(2) + p.norm_squared()).sqrt();
            prop_assert!(v.norm() < params.c);
            prop_assert!((v.norm() - expected).abs() <= 1e-14 * expected.max(1e-300));
        }
    }
}
