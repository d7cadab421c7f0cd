//! Embedded Dormand–Prince 5(4) integrator with continuous (dense) output.
//!
//! The stepper is generic over a fixed state dimension `N` and hands every
//! accepted step to an observer, which is how callers implement event
//! detection: the observer sees the whole [`Segment`] including its
//! interpolant and may stop the integration at any time inside it.
//!
//! Step-size control follows the PI controller of Hairer, Nørsett & Wanner
//! (`DOPRI5`), and the continuous extension is the usual fourth-order one.

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum OdeError {
    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(String),
}

/// Tolerances and limits for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepConfig {
    pub rtol: f64,
    pub atol: f64,
    /// Largest allowed |h|; `f64::INFINITY` for no limit.
    pub h_max: f64,
    /// Initial step; chosen automatically when `None`.
    pub h_init: Option<f64>,
    pub max_steps: usize,
}

impl Default for StepConfig {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            h_max: f64::INFINITY,
            h_init: None,
            max_steps: 1_000_000,
        }
    }
}

impl StepConfig {
    pub fn with_tolerance(rtol: f64, atol: f64) -> Self {
        Self {
            rtol,
            atol,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<(), OdeError> {
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return Err(OdeError::InvalidConfig(format!(
                "tolerances must be positive (rtol = {}, atol = {})",
                self.rtol, self.atol
            )));
        }
        if !(self.h_max > 0.0) {
            return Err(OdeError::InvalidConfig(format!(
                "h_max must be positive, got {}",
                self.h_max
            )));
        }
        if self.max_steps == 0 {
            return Err(OdeError::InvalidConfig("max_steps must be >= 1".into()));
        }
        Ok(())
    }
}

/// One accepted step together with its continuous extension.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment<const N: usize> {
    pub t0: f64,
    pub t1: f64,
    pub y0: [f64; N],
    pub y1: [f64; N],
    // rcont1..rcont5 of the DOPRI5 dense formula
    cont: [[f64; N]; 5],
}

impl<const N: usize> Segment<N> {
    #[inline]
    fn h(&self) -> f64 {
        self.t1 - self.t0
    }

    /// True when `t` lies in the closed step interval (either direction).
    pub fn contains(&self, t: f64) -> bool {
        let (lo, hi) = if self.t0 <= self.t1 {
            (self.t0, self.t1)
        } else {
            (self.t1, self.t0)
        };
        t >= lo && t <= hi
    }

    /// Dense evaluation; exact at both end points.
    pub fn eval(&self, t: f64) -> [f64; N] {
        if t == self.t0 {
            return self.y0;
        }
        if t == self.t1 {
            return self.y1;
        }
        let s = (t - self.t0) / self.h();
        let s1 = 1.0 - s;
        let [c1, c2, c3, c4, c5] = &self.cont;
        std::array::from_fn(|i| c1[i] + s * (c2[i] + s1 * (c3[i] + s * (c4[i] + s1 * c5[i]))))
    }

    /// Time derivative of the interpolant.
    pub fn eval_derivative(&self, t: f64) -> [f64; N] {
        let h = self.h();
        let s = (t - self.t0) / h;
        let s1 = 1.0 - s;
        let [_, c2, c3, c4, c5] = &self.cont;
        std::array::from_fn(|i| {
            let a = c4[i] + s1 * c5[i];
            let da = -c5[i];
            let b = c3[i] + s * a;
            let db = a + s * da;
            let c = c2[i] + s1 * b;
            let dc = -b + s1 * db;
            (c + s * dc) / h
        })
    }

    /// Restrict the segment to `[t0, t]`, keeping the same interpolant.
    fn truncated(&self, t: f64) -> Segment<N> {
        // The interpolant restricted to [t0, t] is again a quartic, so
        // resampling it at five nodes and refitting is exact.
        let mut seg = self.clone();
        let y_end = self.eval(t);
        let frac = (t - self.t0) / self.h();
        let nodes = [0.0, 0.25, 0.5, 0.75, 1.0];
        let vals: [[f64; N]; 5] = std::array::from_fn(|k| self.eval(self.t0 + frac * nodes[k] * self.h()));
        seg.cont = fit_quartic(&vals);
        seg.t1 = t;
        seg.y1 = y_end;
        seg
    }
}

/// Coefficients (rcont layout) of the quartic through values at s = 0, 1/4, 1/2, 3/4, 1.
fn fit_quartic<const N: usize>(vals: &[[f64; N]; 5]) -> [[f64; N]; 5] {
    // The interpolant is y(s) = c1 + s (c2 + (1-s)(c3 + s (c4 + (1-s) c5))).
    // Expanding gives monomial coefficients
    //   a0 = c1, a1 = c2 + c3, a2 = -c3 + c4 + c5, a3 = -c4 - 2 c5, a4 = c5.
    // Fit the monomials by Lagrange on the equispaced nodes, then invert.
    let mut out = [[0.0; N]; 5];
    for i in 0..N {
        let f: [f64; 5] = std::array::from_fn(|k| vals[k][i]);
        // Newton forward differences with step 1/4
        let d1 = [f[1] - f[0], f[2] - f[1], f[3] - f[2], f[4] - f[3]];
        let d2 = [d1[1] - d1[0], d1[2] - d1[1], d1[3] - d1[2]];
        let d3 = [d2[1] - d2[0], d2[2] - d2[1]];
        let d4 = d3[1] - d3[0];
        // In u = 4 s: y = f0 + d1 u + d2 u(u-1)/2 + d3 u(u-1)(u-2)/6 + d4 u(u-1)(u-2)(u-3)/24
        let b = [
            f[0],
            d1[0] - d2[0] / 2.0 + d3[0] / 3.0 - d4 / 4.0,
            d2[0] / 2.0 - d3[0] / 2.0 + 11.0 * d4 / 24.0,
            d3[0] / 6.0 - d4 / 4.0,
            d4 / 24.0,
        ];
        // monomials in s: a_j = b_j * 4^j
        let a = [b[0], 4.0 * b[1], 16.0 * b[2], 64.0 * b[3], 256.0 * b[4]];
        let c5 = a[4];
        let c4 = -a[3] - 2.0 * c5;
        let c3 = -a[2] + c4 + c5;
        let c2 = a[1] - c3;
        out[0][i] = a[0];
        out[1][i] = c2;
        out[2][i] = c3;
        out[3][i] = c4;
        out[4][i] = c5;
    }
    out
}

/// Piecewise dense solution assembled from accepted steps.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSolution<const N: usize> {
    t_start: f64,
    y_start: [f64; N],
    segments: Vec<Segment<N>>,
}

impl<const N: usize> DenseSolution<N> {
    fn new(t_start: f64, y_start: [f64; N]) -> Self {
        Self {
            t_start,
            y_start,
            segments: Vec::new(),
        }
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.segments.last().map_or(self.t_start, |s| s.t1)
    }

    pub fn y_end(&self) -> [f64; N] {
        self.segments.last().map_or(self.y_start, |s| s.y1)
    }

    pub fn segments(&self) -> &[Segment<N>] {
        &self.segments
    }

    /// Step end points, starting with the initial time.
    pub fn times(&self) -> Vec<f64> {
        std::iter::once(self.t_start)
            .chain(self.segments.iter().map(|s| s.t1))
            .collect()
    }

    pub fn states(&self) -> Vec<[f64; N]> {
        std::iter::once(self.y_start)
            .chain(self.segments.iter().map(|s| s.y1))
            .collect()
    }

    pub fn forward(&self) -> bool {
        self.t_end() >= self.t_start
    }

    /// Index of the segment containing `t`, if any.
    pub fn segment_index(&self, t: f64) -> Option<usize> {
        if self.segments.is_empty() {
            return None;
        }
        let fwd = self.forward();
        // first segment whose far end reaches t
        let idx = self.segments.partition_point(|s| if fwd { s.t1 < t } else { s.t1 > t });
        let idx = idx.min(self.segments.len() - 1);
        self.segments[idx].contains(t).then_some(idx)
    }

    pub fn eval(&self, t: f64) -> Option<[f64; N]> {
        if self.segments.is_empty() {
            return (t == self.t_start).then_some(self.y_start);
        }
        self.segment_index(t).map(|i| self.segments[i].eval(t))
    }

    pub fn eval_derivative(&self, t: f64) -> Option<[f64; N]> {
        self.segment_index(t)
            .map(|i| self.segments[i].eval_derivative(t))
    }
}

/// What the observer wants after seeing a step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Control {
    Continue,
    /// Stop at the given time, which must lie inside the current segment.
    Stop(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Completed,
    Stopped,
    MaxSteps,
    StepUnderflow,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

#[derive(Debug, Clone)]
pub struct Solved<const N: usize> {
    pub solution: DenseSolution<N>,
    pub outcome: Outcome,
    pub stats: Stats,
}

// Dormand–Prince 5(4) tableau
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const BETA: f64 = 0.04;

#[inline]
fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    std::array::from_fn(|i| y[i] + h * terms.iter().map(|(c, k)| c * k[i]).sum::<f64>())
}

fn all_finite<const N: usize>(y: &[f64; N]) -> bool {
    y.iter().all(|v| v.is_finite())
}

fn initial_step<const N: usize, F>(rhs: &mut F, t0: f64, y0: &[f64; N], f0: &[f64; N], dir: f64, cfg: &StepConfig) -> f64
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let n = N as f64;
    let sk: [f64; N] = std::array::from_fn(|i| cfg.atol + cfg.rtol * y0[i].abs());
    let d0 = (y0.iter().zip(&sk).map(|(y, s)| (y / s).powi(2)).sum::<f64>() / n).sqrt();
    let d1 = (f0.iter().zip(&sk).map(|(f, s)| (f / s).powi(2)).sum::<f64>() / n).sqrt();
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h0 = h0.min(cfg.h_max);
    let y1 = axpy(y0, dir * h0, &[(1.0, f0)]);
    let f1 = rhs(t0 + dir * h0, &y1);
    let d2 = (f1
        .iter()
        .zip(f0)
        .zip(&sk)
        .map(|((a, b), s)| ((a - b) / s).powi(2))
        .sum::<f64>()
        / n)
        .sqrt()
        / h0;
    let dmax = d1.max(d2);
    let h1 = if dmax <= 1e-15 || !dmax.is_finite() {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / dmax).powf(0.2)
    };
    (100.0 * h0).min(h1).min(cfg.h_max)
}

/// Integrate `dy/dt = rhs(t, y)` from `t0` to `t_end` (either direction).
///
/// Non-finite right-hand sides are treated as rejected steps; if the step
/// then shrinks below round-off the run ends with [`Outcome::StepUnderflow`].
pub fn integrate<const N: usize, F, O>(
    mut rhs: F,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    cfg: &StepConfig,
    mut observer: O,
) -> Result<Solved<N>, OdeError>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
    O: FnMut(&Segment<N>) -> Control,
{
    cfg.validate()?;
    if !t0.is_finite() || !t_end.is_finite() {
        return Err(OdeError::InvalidConfig("non-finite time span".into()));
    }
    if !all_finite(&y0) {
        return Err(OdeError::InvalidConfig("non-finite initial state".into()));
    }
    let mut solution = DenseSolution::new(t0, y0);
    let mut stats = Stats::default();
    if t_end == t0 {
        return Ok(Solved {
            solution,
            outcome: Outcome::Completed,
            stats,
        });
    }
    let dir = (t_end - t0).signum();

    let mut t = t0;
    let mut y = y0;
    let mut k1 = rhs(t, &y);
    stats.evaluations += 1;
    if !all_finite(&k1) {
        return Ok(Solved {
            solution,
            outcome: Outcome::StepUnderflow,
            stats,
        });
    }
    let mut h = match cfg.h_init {
        Some(h) => h.abs().min(cfg.h_max),
        None => {
            stats.evaluations += 1;
            initial_step(&mut rhs, t, &y, &k1, dir, cfg)
        }
    };
    let mut fac_old: f64 = 1e-4;
    let mut last_rejected = false;

    loop {
        if stats.accepted >= cfg.max_steps {
            return Ok(Solved {
                solution,
                outcome: Outcome::MaxSteps,
                stats,
            });
        }
        let remaining = (t_end - t).abs();
        let h_min = 16.0 * f64::EPSILON * t.abs().max(1e-300);
        if h < h_min {
            return Ok(Solved {
                solution,
                outcome: Outcome::StepUnderflow,
                stats,
            });
        }
        let last = h >= remaining * (1.0 - 1e-12);
        if last {
            h = remaining;
        }
        let hs = dir * h;

        let y2 = axpy(&y, hs, &[(A21, &k1)]);
        let k2 = rhs(t + C2 * hs, &y2);
        let y3 = axpy(&y, hs, &[(A31, &k1), (A32, &k2)]);
        let k3 = rhs(t + C3 * hs, &y3);
        let y4 = axpy(&y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]);
        let k4 = rhs(t + C4 * hs, &y4);
        let y5 = axpy(&y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]);
        let k5 = rhs(t + C5 * hs, &y5);
        let y6 = axpy(&y, hs, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]);
        let t_new = if last { t_end } else { t + hs };
        let k6 = rhs(t_new, &y6);
        let y_new = axpy(&y, hs, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let k7 = rhs(t_new, &y_new);
        stats.evaluations += 6;

        let finite = all_finite(&y_new) && all_finite(&k7);
        let err = if finite {
            let mut acc = 0.0;
            for i in 0..N {
                let e = hs * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let sk = cfg.atol + cfg.rtol * y[i].abs().max(y_new[i].abs());
                acc += (e / sk).powi(2);
            }
            (acc / N as f64).sqrt()
        } else {
            f64::INFINITY
        };

        if err <= 1.0 {
            let ydiff: [f64; N] = std::array::from_fn(|i| y_new[i] - y[i]);
            let bspl: [f64; N] = std::array::from_fn(|i| hs * k1[i] - ydiff[i]);
            let c4: [f64; N] = std::array::from_fn(|i| ydiff[i] - hs * k7[i] - bspl[i]);
            let c5: [f64; N] = std::array::from_fn(|i| {
                hs * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i])
            });
            let seg = Segment {
                t0: t,
                t1: t_new,
                y0: y,
                y1: y_new,
                cont: [y, ydiff, bspl, c4, c5],
            };
            stats.accepted += 1;
            match observer(&seg) {
                Control::Continue => solution.segments.push(seg),
                Control::Stop(ts) => {
                    let ts = if seg.contains(ts) { ts } else { t_new };
                    if ts == t_new {
                        solution.segments.push(seg);
                    } else if ts != t {
                        solution.segments.push(seg.truncated(ts));
                    }
                    return Ok(Solved {
                        solution,
                        outcome: Outcome::Stopped,
                        stats,
                    });
                }
            }
            if last {
                return Ok(Solved {
                    solution,
                    outcome: Outcome::Completed,
                    stats,
                });
            }
            let fac11 = err.max(1e-300).powf(0.2 - BETA * 0.75);
            let mut fac = fac11 / fac_old.powf(BETA);
            fac = (1.0 / FAC_MAX).max((1.0 / FAC_MIN).min(fac / SAFETY));
            let mut h_new = h / fac;
            if last_rejected {
                h_new = h_new.min(h);
            }
            fac_old = err.max(1e-4);
            last_rejected = false;
            t = t_new;
            y = y_new;
            k1 = k7;
            h = h_new.min(cfg.h_max);
        } else {
            stats.rejected += 1;
            last_rejected = true;
            h = if finite {
                let fac11 = err.powf(0.2 - BETA * 0.75);
                h / (1.0 / FAC_MIN).min(fac11 / SAFETY)
            } else {
                h * 0.25
            };
        }
    }
}

/// Integrate without an observer.
pub fn solve<const N: usize, F>(rhs: F, t0: f64, y0: [f64; N], t_end: f64, cfg: &StepConfig) -> Result<Solved<N>, OdeError>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    integrate(rhs, t0, y0, t_end, cfg, |_| Control::Continue)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn harmonic_oscillator_period() {
        let cfg = StepConfig::with_tolerance(1e-12, 1e-14);
        let sol = solve(|_, y: &[f64; 2]| [y[1], -y[0]], 0.0, [1.0, 0.0], 2.0 * PI, &cfg).unwrap();
        assert_eq!(sol.outcome, Outcome::Completed);
        let y = sol.solution.y_end();
        assert!((y[0] - 1.0).abs() < 1e-10, "{y:?}");
        assert!(y[1].abs() < 1e-10);
    }

    #[test]
    fn dense_output_is_accurate_and_exact_at_nodes() {
        let cfg = StepConfig::with_tolerance(1e-11, 1e-13);
        let sol = solve(|_, y: &[f64; 2]| [y[1], -y[0]], 0.0, [1.0, 0.0], 10.0, &cfg).unwrap();
        let dense = &sol.solution;
        for (t, y) in dense.times().iter().zip(dense.states()) {
            assert_eq!(dense.eval(*t).unwrap(), y);
        }
        for i in 0..1000 {
            let t = 10.0 * i as f64 / 999.0;
            let y = dense.eval(t).unwrap();
            assert!((y[0] - t.cos()).abs() < 1e-9, "t = {t}");
            let dy = dense.eval_derivative(t).unwrap();
            assert!((dy[0] + t.sin()).abs() < 1e-7, "t = {t}");
        }
        assert!(dense.eval(10.5).is_none());
    }

    #[test]
    fn backward_integration() {
        let cfg = StepConfig::with_tolerance(1e-12, 1e-14);
        let sol = solve(|_, y: &[f64; 1]| [y[0]], 1.0, [1.0], -2.0, &cfg).unwrap();
        assert!(!sol.solution.forward());
        let y = sol.solution.eval(0.0).unwrap()[0];
        assert!((y - (-1.0f64).exp()).abs() < 1e-10);
        assert!((sol.solution.y_end()[0] - (-3.0f64).exp()).abs() < 1e-11);
    }

    #[test]
    fn observer_stop_truncates_segment() {
        let cfg = StepConfig::with_tolerance(1e-12, 1e-14);
        let mut stop_at = None;
        let sol = integrate(
            |_, y: &[f64; 2]| [y[1], -y[0]],
            0.0,
            [1.0, 0.0],
            10.0,
            &cfg,
            |seg| {
                // cos t crosses zero at pi/2
                if seg.y0[0] > 0.0 && seg.y1[0] <= 0.0 {
                    let (mut a, mut b) = (seg.t0, seg.t1);
                    for _ in 0..80 {
                        let m = 0.5 * (a + b);
                        if seg.eval(m)[0] > 0.0 {
                            a = m
                        } else {
                            b = m
                        }
                    }
                    stop_at = Some(a);
                    Control::Stop(a)
                } else {
                    Control::Continue
                }
            },
        )
        .unwrap();
        assert_eq!(sol.outcome, Outcome::Stopped);
        let t_stop = stop_at.unwrap();
        assert!((t_stop - PI / 2.0).abs() < 1e-10);
        assert_eq!(sol.solution.t_end(), t_stop);
        let y = sol.solution.y_end();
        assert!(y[0].abs() < 1e-10);
        // interpolant of the truncated step still matches the solution
        let mid = 0.5 * (sol.solution.segments().last().unwrap().t0 + t_stop);
        assert!((sol.solution.eval(mid).unwrap()[0] - mid.cos()).abs() < 1e-10);
    }

    #[test]
    fn max_steps_reported() {
        let cfg = StepConfig {
            max_steps: 5,
            ..StepConfig::with_tolerance(1e-12, 1e-14)
        };
        let sol = solve(|_, y: &[f64; 2]| [y[1], -y[0]], 0.0, [1.0, 0.0], 100.0, &cfg).unwrap();
        assert_eq!(sol.outcome, Outcome::MaxSteps);
        assert_eq!(sol.solution.segments().len(), 5);
    }

    #[test]
    fn blow_up_ends_in_step_underflow() {
        // y' = y^2, y(0) = 1 blows up at t = 1
        let cfg = StepConfig::with_tolerance(1e-10, 1e-12);
        let sol = solve(|_, y: &[f64; 1]| [y[0] * y[0]], 0.0, [1.0], 2.0, &cfg).unwrap();
        assert_eq!(sol.outcome, Outcome::StepUnderflow);
        assert!((sol.solution.t_end() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn invalid_tolerance_rejected() {
        let cfg = StepConfig::with_tolerance(0.0, 1e-12);
        assert!(solve(|_, y: &[f64; 1]| *y, 0.0, [1.0], 1.0, &cfg).is_err());
    }

    #[test]
    fn convergence_order_is_five() {
        // fixed steps through h_max and loose tolerances
        let run = |h: f64| {
            let cfg = StepConfig {
                rtol: 1.0,
                atol: 1.0,
                h_max: h,
                h_init: Some(h),
                max_steps: 1_000_000,
            };
            let sol = solve(|_, y: &[f64; 2]| [y[1], -y[0]], 0.0, [1.0, 0.0], 4.0, &cfg).unwrap();
            (sol.solution.y_end()[0] - 4.0f64.cos()).abs()
        };
        let ratio = run(0.1) / run(0.05);
        assert!(ratio > 25.0 && ratio < 45.0, "ratio {ratio}");
    }
}
