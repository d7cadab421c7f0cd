use relcentral::bertrand::{build_family, period_constant_formula, q_coefficients, q_poly, r1, r2, BertrandFamily, FamilyOptions};
use relcentral::clairaut::{
    default_amplitudes, linearized_frequency, period_function, polar_radius, PeriodOptions,
};
use relcentral::PhysicalParams;

fn family(a: f64) -> BertrandFamily {
    build_family(a, 1.0, 2.0, (0.5, 2.0), &PhysicalParams::default(), &FamilyOptions::default()).unwrap()
}

#[test]
fn measured_period_constant_matches_closed_form() {
    let params = PhysicalParams::default();
    let opts = PeriodOptions::default();
    for a in [0.25, 0.5, 1.0] {
        let fam = family(a);
        let pot = fam.potential();
        for rho0 in [0.8, 1.0, 1.25] {
            let i = fam.nearest(rho0);
            let (r, ell) = (fam.rho[i], fam.ell[i]);
            let lin = linearized_frequency(r, ell, pot, &params).unwrap();
            let theta = 2.0 * std::f64::consts::PI / (1.0 + a).sqrt();
            assert!((lin.theta0.unwrap() - theta).abs() < 1e-9, "linearized period {}", lin.theta0.unwrap());
            let fit = period_function(r, ell, pot, &params, &default_amplitudes(r), &opts).unwrap();
            let formula = period_constant_formula(r, ell, a, &params);
            let rel = (fit.c2 - formula).abs() / formula.abs();
            assert!(rel < 1e-2, "a = {a}, rho0 = {r}: measured {} vs {formula}", fit.c2);
            assert!(fit.c2 != 0.0 && fit.c2.abs() > 10.0 * fit.residual);
            assert!(fit.c1.abs() < 10.0 * fit.residual, "{fit:?}");
        }
    }
}

#[test]
fn q_coefficients_recovered_by_fit() {
    // Q(x) reconstructed from measured c2 at many centres, then fitted
    let params = PhysicalParams::default();
    let opts = PeriodOptions::default();
    let a = 0.5;
    let fam = build_family(a, 1.0, 2.0, (0.1, 10.0), &params, &FamilyOptions::default()).unwrap();
    let pot = fam.potential();
    let mut xs = Vec::new();
    let mut qs = Vec::new();
    for k in 0..16 {
        let rho0 = 0.15 * 1.3f64.powi(k);
        let i = fam.nearest(rho0);
        let (r, ell) = (fam.rho[i], fam.ell[i]);
        let fit = period_function(r, ell, pot, &params, &default_amplitudes(r), &opts).unwrap();
        // invert c2 = -pi Q(x) / (12 sqrt(1+a) r^2 (2 + y)^3 (1 + y)^2) with m = c = 1
        let y = r * r * ell * ell;
        let q = -fit.c2 * 12.0 * (1.0 + a).sqrt() * r * r * (2.0 + y).powi(3) * (1.0 + y).powi(2) / std::f64::consts::PI;
        xs.push(y);
        qs.push(q);
    }
    for (x, q) in xs.iter().zip(&qs) {
        assert!((q - q_poly(*x, a)).abs() < 1e-3 * q_poly(*x, a).abs(), "x = {x}: {q} vs {}", q_poly(*x, a));
    }
    // least-squares quintic through the measured values, relative weights
    let n = xs.len();
    let scale = xs.iter().cloned().fold(0.0, f64::max);
    let mat = nalgebra::DMatrix::from_fn(n, 6, |i, j| (xs[i] / scale).powi(j as i32) / qs[i]);
    let rhs = nalgebra::DVector::from_element(n, 1.0);
    let sol = mat.svd(true, true).solve(&rhs, 1e-15).unwrap();
    let coef: Vec<f64> = (0..6).map(|j| sol[j] / scale.powi(j as i32)).collect();
    let expected = q_coefficients(a);
    // the top coefficients dominate on this x range and are well determined
    for j in 3..6 {
        assert!((coef[j] - expected[j]).abs() < 0.05 * expected[j].abs(), "coefficient {j}: {} vs {}", coef[j], expected[j]);
    }
}

#[test]
fn amplitude_expansion_profiles() {
    // R(phi; xi) = R1 xi + R2 xi^2 + O(xi^3)
    let params = PhysicalParams::default();
    let a = 0.5;
    let fam = family(a);
    let i = fam.nearest(1.0);
    let (r, ell) = (fam.rho[i], fam.ell[i]);
    let xis = [1e-3, 5e-4, 2.5e-4];
    for phi in [0.5, 1.2, 2.0, 3.5, 5.0] {
        let vals: Vec<f64> = xis
            .iter()
            .map(|&xi| polar_radius(r, ell, xi, phi, fam.potential(), &params, &PeriodOptions::default()).unwrap() / xi)
            .collect();
        // quadratic extrapolation in xi
        let m = nalgebra::Matrix3::from_fn(|row, col| xis[row].powi(col as i32));
        let c = m.lu().solve(&nalgebra::Vector3::new(vals[0], vals[1], vals[2])).unwrap();
        assert!((c[0] - r1(phi, a)).abs() < 1e-6, "R1 at {phi}: {} vs {}", c[0], r1(phi, a));
        let pred = r2(phi, r, ell, a, &params);
        assert!((c[1] - pred).abs() < 1e-3 * pred.abs().max(1.0), "R2 at {phi}: {} vs {pred}", c[1]);
    }
}
