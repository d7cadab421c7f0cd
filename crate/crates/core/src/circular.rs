//! Circular motions: frequency, angular momentum and Lorentz factor as
//! functions of the radius.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::physics::{PhaseState, PhysicalParams, Potential, Vec2};
use crate::roots::brent;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircularOrbit {
    pub r0: f64,
    pub omega: f64,
    /// Angular momentum `m Gamma r0^2 Omega`.
    pub ell: f64,
    /// Lorentz factor `1/sqrt(1 - r0^2 Omega^2 / c^2)`.
    pub gamma: f64,
}

impl CircularOrbit {
    /// Phase point on the orbit at angle zero, moving counter-clockwise.
    pub fn state(&self, params: &PhysicalParams) -> PhaseState {
        PhaseState {
            q: Vec2::new(self.r0, 0.0),
            p: Vec2::new(0.0, params.m * self.gamma * self.r0 * self.omega),
        }
    }

    /// `|V'(r0) - m Gamma r0 Omega^2|`.
    pub fn residual(&self, pot: &Potential, params: &PhysicalParams) -> f64 {
        (pot.dv(self.r0) - params.m * self.gamma * self.r0 * self.omega.powi(2)).abs()
    }

    /// Time for one revolution.
    pub fn period(&self) -> f64 {
        std::f64::consts::TAU / self.omega
    }
}

/// The unique circular motion of radius `r0`.
///
/// Solves `V'(r0) = m r0 w^2 / sqrt(1 - r0^2 w^2 / c^2)` for `w` in
/// `(0, c/r0)`; internally in the variable `u = r0 w / c`.
pub fn circular_orbit(r0: f64, pot: &Potential, params: &PhysicalParams) -> Result<CircularOrbit> {
    params.validate()?;
    if !(r0 > 0.0 && r0.is_finite()) {
        return Err(Error::InvalidParameter(format!("radius must be positive, got {r0}")));
    }
    let dv = pot.dv(r0);
    if !(dv > 0.0 && dv.is_finite()) {
        return Err(Error::NoCircularOrbit {
            r0,
            reason: format!("V'(r0) = {dv} is not positive"),
        });
    }
    let scale = params.rest_energy() / r0;
    let g = |u: f64| dv - scale * u * u / (1.0 - u * u).sqrt();
    let u = brent(g, 0.0, 1.0 - 1e-15, 1e-300, 1e-14, 500).ok_or_else(|| Error::NoCircularOrbit {
        r0,
        reason: "root not bracketed".into(),
    })?;
    let omega = u * params.c / r0;
    let gamma = 1.0 / (1.0 - u * u).sqrt();
    Ok(CircularOrbit {
        r0,
        omega,
        ell: params.m * gamma * r0 * r0 * omega,
        gamma,
    })
}

/// Result of the constant angular momentum test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentumProfile {
    pub constant: bool,
    /// `max |L(r_i) - L(r_1)| / L(r_1)`.
    pub max_deviation: f64,
    pub ell_first: f64,
}

pub const CONSTANCY_THRESHOLD: f64 = 1e-8;

/// Whether `L(r; V)` is constant on `grid` (at least 10 radii spanning at
/// least two decades).
pub fn momentum_profile_is_constant(pot: &Potential, params: &PhysicalParams, grid: &[f64]) -> Result<MomentumProfile> {
    if grid.len() < 10 {
        return Err(Error::Precondition(format!("need at least 10 radii, got {}", grid.len())));
    }
    let lo = grid.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = grid.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(lo > 0.0) || hi / lo < 100.0 * (1.0 - 1e-12) {
        return Err(Error::Precondition("radius grid must be positive and span two decades".into()));
    }
    let ells = grid
        .iter()
        .map(|&r| circular_orbit(r, pot, params).map(|o| o.ell))
        .collect::<Result<Vec<_>>>()?;
    let l1 = ells[0];
    let max_deviation = ells.iter().map(|l| (l - l1).abs() / l1).fold(0.0, f64::max);
    Ok(MomentumProfile {
        constant: max_deviation < CONSTANCY_THRESHOLD,
        max_deviation,
        ell_first: l1,
    })
}
