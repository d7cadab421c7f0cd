//! Bracketed scalar root finding.

/// Brent's method on a bracket `[a, b]` with `f(a)` and `f(b)` of opposite
/// sign. Stops when the bracket is narrower than `xtol + rtol * |x|`.
///
/// Returns `None` if the bracket is invalid.
pub fn brent<F>(mut f: F, a: f64, b: f64, xtol: f64, rtol: f64, max_iter: usize) -> Option<f64>
where
    F: FnMut(f64) -> f64,
{
    let (mut xpre, mut xcur) = (a, b);
    let (mut fpre, mut fcur) = (f(xpre), f(xcur));
    if fpre == 0.0 {
        return Some(xpre);
    }
    if fcur == 0.0 {
        return Some(xcur);
    }
    if fpre.signum() == fcur.signum() || !fpre.is_finite() || !fcur.is_finite() {
        return None;
    }
    let (mut xblk, mut fblk) = (0.0, 0.0);
    let (mut spre, mut scur) = (0.0, 0.0);

    for _ in 0..max_iter {
        if fpre != 0.0 && fcur != 0.0 && fpre.signum() != fcur.signum() {
            xblk = xpre;
            fblk = fpre;
            spre = xcur - xpre;
            scur = spre;
        }
        if fblk.abs() < fcur.abs() {
            xpre = xcur;
            xcur = xblk;
            xblk = xpre;
            fpre = fcur;
            fcur = fblk;
            fblk = fpre;
        }

        let delta = 0.5 * (xtol + rtol * xcur.abs());
        let sbis = 0.5 * (xblk - xcur);
        if fcur == 0.0 || sbis.abs() < delta {
            return Some(xcur);
        }

        if spre.abs() > delta && fcur.abs() < fpre.abs() {
            let stry = if xpre == xblk {
                // secant
                -fcur * (xcur - xpre) / (fcur - fpre)
            } else {
                // inverse quadratic
                let dpre = (fpre - fcur) / (xpre - xcur);
                let dblk = (fblk - fcur) / (xblk - xcur);
                -fcur * (fblk * dblk - fpre * dpre) / (dblk * dpre * (fblk - fpre))
            };
            if 2.0 * stry.abs() < spre.abs().min(3.0 * sbis.abs() - delta) {
                spre = scur;
                scur = stry;
            } else {
                spre = sbis;
                scur = sbis;
            }
        } else {
            spre = sbis;
            scur = sbis;
        }

        xpre = xcur;
        fpre = fcur;
        xcur += if scur.abs() > delta {
            scur
        } else if sbis > 0.0 {
            delta
        } else {
            -delta
        };
        fcur = f(xcur);
    }
    Some(xcur)
}

/// Root of `f` on a bracket followed by a single Newton correction, kept
/// only if it stays inside the bracket and does not increase |f|.
pub fn brent_newton<F, D>(mut f: F, df: D, a: f64, b: f64, xtol: f64) -> Option<f64>
where
    F: FnMut(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let x = brent(&mut f, a, b, xtol, 4.0 * f64::EPSILON, 200)?;
    let fx = f(x);
    let d = df(x);
    if d != 0.0 && d.is_finite() {
        let xn = x - fx / d;
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        if xn >= lo && xn <= hi && f(xn).abs() <= fx.abs() {
            return Some(xn);
        }
    }
    Some(x)
}

/// Locate sign changes of `f` on a sorted grid and polish each with Brent.
pub fn all_roots<F>(mut f: F, grid: &[f64], xtol: f64, rtol: f64) -> Vec<f64>
where
    F: FnMut(f64) -> f64,
{
    let values: Vec<f64> = grid.iter().map(|&x| f(x)).collect();
    let mut roots = Vec::new();
    for i in 0..grid.len().saturating_sub(1) {
        let (fa, fb) = (values[i], values[i + 1]);
        if !fa.is_finite() || !fb.is_finite() {
            continue;
        }
        if fa == 0.0 {
            roots.push(grid[i]);
        } else if fa.signum() != fb.signum() && fb != 0.0 {
            if let Some(r) = brent(&mut f, grid[i], grid[i + 1], xtol, rtol, 200) {
                roots.push(r);
            }
        }
    }
    if let (Some(&x), Some(&v)) = (grid.last(), values.last()) {
        if v == 0.0 {
            roots.push(x);
        }
    }
    roots
}

/// `n` logarithmically spaced points from `lo` to `hi` inclusive.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2);
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}
