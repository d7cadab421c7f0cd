//! One runner per subcommand.
//!
//! Each command has a clap struct whose fields are all optional (only the
//! flags actually given serialize) and a resolved parameter struct with
//! defaults. `resolve_params` merges them with the config file.

use std::fs::File;
use std::io::{BufWriter, Write};

use clap::Args;
use rayon::prelude::*;
use relcentral::bertrand::{build_family, obstruction_certificate, period_constant_formula, q_poly, FamilyOptions};
use relcentral::circular::circular_orbit;
use relcentral::clairaut::{
    default_amplitudes, equilibrium_solve, fit_period_samples, linearized_frequency, period_polar, Equilibria,
    PeriodOptions,
};
use relcentral::collision::{integrate_to_collision, CollisionConfig};
use relcentral::coulomb::{
    apsidal_precession, classify as classify_point, existence_witness, perihelion_state, rl_components_and_invariant,
    write_diagram_csv, EMKind, EMPoint, CLASSIFY_TOL,
};
use relcentral::dynamics::{conservation_report, integrate, IntegratorConfig};
use relcentral::physics::{angular_momentum, hamiltonian};
use relcentral::{Error, PhaseState, PhysicalParams, Potential, PotentialKind, Vec2};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::resolve_params;
use crate::{CliError, Context, Report};

fn is_false(b: &bool) -> bool {
    !*b
}

fn write_file<F>(ctx: &Context, name: &str, f: F) -> Result<Option<String>, CliError>
where
    F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
{
    let Some(path) = ctx.output(name)? else {
        return Ok(None);
    };
    let file = File::create(&path).map_err(|e| anyhow::anyhow!("cannot create {}: {e}", path.display()))?;
    let mut w = BufWriter::new(file);
    f(&mut w).and_then(|_| w.flush())?;
    Ok(Some(path.display().to_string()))
}

fn write_json(ctx: &Context, name: &str, v: &serde_json::Value) -> Result<Option<String>, CliError> {
    write_file(ctx, name, |w| {
        serde_json::to_writer_pretty(&mut *w, v)?;
        writeln!(w)
    })
}

fn require_coulomb(ctx: &Context, cmd: &str) -> Result<(), CliError> {
    if ctx.setup.potential != PotentialKind::Coulomb {
        return Err(CliError::Usage(format!("{cmd} applies to the coulomb potential only")));
    }
    Ok(())
}

fn potential(ctx: &Context, params: &PhysicalParams) -> Result<Potential, CliError> {
    Ok(Potential::new(ctx.setup.potential, ctx.setup.k, *params)?)
}

fn required(v: Option<f64>, name: &str) -> Result<f64, CliError> {
    v.ok_or_else(|| CliError::Usage(format!("missing parameter --{name}")))
}

// ---------------------------------------------------------------- simulate

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    /// Initial position, x component.
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    q1: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    q2: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    p1: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    p2: Option<f64>,
    /// Start at the perihelion of the Coulomb orbit with this angular
    /// momentum (needs --h; overrides q, p).
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    ell: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    h: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    t_end: Option<f64>,
    /// Relative tolerance (absolute is 1e-2 of it).
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    tol: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimulateParams {
    q1: f64,
    q2: f64,
    p1: f64,
    p2: f64,
    ell: Option<f64>,
    h: Option<f64>,
    t_end: f64,
    tol: f64,
}

impl Default for SimulateParams {
    fn default() -> Self {
        Self {
            q1: 2.0,
            q2: 0.0,
            p1: 0.0,
            p2: 1.0,
            ell: None,
            h: None,
            t_end: 100.0,
            tol: 1e-12,
        }
    }
}

pub fn simulate(args: &SimulateArgs, ctx: &Context) -> Result<Report, CliError> {
    let sp: SimulateParams = resolve_params(args, &ctx.file)?;
    let params = ctx.setup.params()?;
    let pot = potential(ctx, &params)?;
    let state = match (sp.ell, sp.h) {
        (Some(ell), Some(h)) => {
            require_coulomb(ctx, "simulate --ell/--h")?;
            perihelion_state(EMPoint::new(ell, h), ctx.setup.k, &params)?
        }
        (None, None) => PhaseState::new(Vec2::new(sp.q1, sp.q2), Vec2::new(sp.p1, sp.p2))?,
        _ => return Err(CliError::Usage("--ell and --h go together".into())),
    };
    let traj = integrate(&state, (0.0, sp.t_end), &pot, &params, &IntegratorConfig::with_tolerance(sp.tol))?;
    let cons = conservation_report(&traj, &pot, &params)?;
    let csv = write_file(ctx, "trajectory.csv", |w| traj.write_csv(w))?;
    let summary = format!(
        "simulate: {} samples to t = {}, H = {}, L = {}, drift H {:.3e} L {:.3e}{}",
        traj.len(),
        traj.t_end(),
        cons.h0,
        cons.l0,
        cons.h_drift_rel,
        cons.l_drift_rel,
        if traj.collided() { ", collision" } else { "" }
    );
    let result = json!({
        "samples": traj.len(),
        "t_end": traj.t_end(),
        "collided": traj.collided(),
        "conservation": cons,
        "events": traj.events,
        "files": csv.into_iter().collect::<Vec<_>>(),
    });
    Ok(Report::new(&sp, result, summary))
}

// ---------------------------------------------------------------- classify

#[derive(Debug, Args, Serialize)]
pub struct ClassifyArgs {
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    ell: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    h: Option<f64>,
    /// Classify a whole grid and write diagram.csv.
    #[arg(long)]
    #[serde(skip_serializing_if = "is_false")]
    grid: bool,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    ell_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    ell_max: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    h_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    h_max: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    n_ell: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    n_h: Option<usize>,
    /// Boundary tolerance.
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    tol: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClassifyParams {
    ell: Option<f64>,
    h: Option<f64>,
    grid: bool,
    ell_min: f64,
    ell_max: f64,
    h_min: f64,
    h_max: f64,
    n_ell: usize,
    n_h: usize,
    tol: f64,
}

impl Default for ClassifyParams {
    fn default() -> Self {
        Self {
            ell: None,
            h: None,
            grid: false,
            ell_min: -3.0,
            ell_max: 3.0,
            h_min: -1.5,
            h_max: 0.5,
            n_ell: 200,
            n_h: 200,
            tol: CLASSIFY_TOL,
        }
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

pub fn classify(args: &ClassifyArgs, ctx: &Context) -> Result<Report, CliError> {
    let cp: ClassifyParams = resolve_params(args, &ctx.file)?;
    require_coulomb(ctx, "classify")?;
    let params = ctx.setup.params()?;
    let k = ctx.setup.k;
    if !(k > 0.0) {
        return Err(Error::InvalidParameter(format!("coupling k must be positive, got {k}")).into());
    }
    if !cp.grid {
        let pt = EMPoint::new(required(cp.ell, "ell")?, required(cp.h, "h")?);
        let class = classify_point(pt, k, &params, cp.tol);
        let witness = existence_witness(pt, k, &params)?;
        let summary = format!(
            "{} (ell = {}, h = {}, sigma2 = {}, h_min = {})",
            class.kind,
            pt.ell,
            pt.h,
            opt(class.sigma2),
            opt(class.h_min)
        );
        let result = json!({
            "class": class.kind,
            "class_code": class.kind.code(),
            "sigma2": class.sigma2,
            "h_min": class.h_min,
            "h_min_attained": class.h_min_attained,
            "witness": witness.map(|w| json!({
                "q": [w.state.q.x, w.state.q.y],
                "p": [w.state.p.x, w.state.p.y],
                "reaches_origin": w.reaches_origin,
                "reaches_infinity": w.reaches_infinity,
            })),
        });
        return Ok(Report::new(&cp, result, summary));
    }
    if cp.n_ell == 0 || cp.n_h == 0 {
        return Err(CliError::Usage("grid sizes must be positive".into()));
    }
    let ells = linspace(cp.ell_min, cp.ell_max, cp.n_ell);
    let hs = linspace(cp.h_min, cp.h_max, cp.n_h);
    let pool = ctx.pool()?;
    // one row per ell, collected in order
    let rows: Vec<(EMPoint, relcentral::coulomb::EMClass)> = pool.install(|| {
        ells.par_iter()
            .map(|&ell| {
                hs.iter()
                    .map(|&h| {
                        let pt = EMPoint::new(ell, h);
                        (pt, classify_point(pt, k, &params, cp.tol))
                    })
                    .collect::<Vec<_>>()
            })
            .collect::<Vec<_>>()
            .concat()
    });
    let csv = write_file(ctx, "diagram.csv", |w| write_diagram_csv(&rows, w))?;
    let kinds = [
        EMKind::Empty,
        EMKind::Circular,
        EMKind::BoundedNonCollision,
        EMKind::UnboundedSupercritical,
        EMKind::Subcritical,
        EMKind::CriticalMomentum,
        EMKind::ExcludedPoint,
    ];
    let counts: Vec<(EMKind, usize)> = kinds
        .iter()
        .map(|&kd| (kd, rows.iter().filter(|(_, c)| c.kind == kd).count()))
        .collect();
    let summary = format!(
        "classify grid {}x{}: {}",
        cp.n_ell,
        cp.n_h,
        counts
            .iter()
            .filter(|(_, n)| *n > 0)
            .map(|(kd, n)| format!("{kd} {n}"))
            .collect::<Vec<_>>()
            .join(", ")
    );
    let mut count_map = serde_json::Map::new();
    for (kd, n) in counts {
        count_map.insert(kd.to_string(), json!(n));
    }
    let result = json!({
        "points": rows.len(),
        "counts": count_map,
        "files": csv.into_iter().collect::<Vec<_>>(),
    });
    Ok(Report::new(&cp, result, summary))
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "none".to_string(), |x| x.to_string())
}

// ---------------------------------------------------------------- circular

#[derive(Debug, Args, Serialize)]
pub struct CircularArgs {
    /// Orbit radius.
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    r0: Option<f64>,
    /// Integrate this many revolutions and report the radial deviation.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    revolutions: Option<u32>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    tol: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CircularParams {
    r0: f64,
    revolutions: u32,
    tol: f64,
}

impl Default for CircularParams {
    fn default() -> Self {
        Self {
            r0: 2.0,
            revolutions: 0,
            tol: 1e-12,
        }
    }
}

pub fn circular(args: &CircularArgs, ctx: &Context) -> Result<Report, CliError> {
    let cp: CircularParams = resolve_params(args, &ctx.file)?;
    let params = ctx.setup.params()?;
    let pot = potential(ctx, &params)?;
    let orbit = circular_orbit(cp.r0, &pot, &params)?;
    let mut deviation = None;
    let mut files = Vec::new();
    if cp.revolutions > 0 {
        let t_end = cp.revolutions as f64 * orbit.period();
        let traj = integrate(
            &orbit.state(&params),
            (0.0, t_end),
            &pot,
            &params,
            &IntegratorConfig::with_tolerance(cp.tol),
        )?;
        deviation = Some(traj.r.iter().map(|r| (r - cp.r0).abs()).fold(0.0, f64::max));
        files.extend(write_file(ctx, "trajectory.csv", |w| traj.write_csv(w))?);
    }
    let summary = format!(
        "circular r0 = {}: Omega = {}, L = {}, gamma = {}, period = {}{}",
        orbit.r0,
        orbit.omega,
        orbit.ell,
        orbit.gamma,
        orbit.period(),
        deviation.map_or(String::new(), |d| format!(", max |r - r0| = {d:.3e}"))
    );
    let result = json!({
        "orbit": orbit,
        "period": orbit.period(),
        "residual": orbit.residual(&pot, &params),
        "max_radial_deviation": deviation,
        "files": files,
    });
    Ok(Report::new(&cp, result, summary))
}

// ---------------------------------------------------------------- period

#[derive(Debug, Args, Serialize)]
pub struct PeriodArgs {
    /// Angular momentum; the centre is found from it unless --rho0 is given.
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    ell: Option<f64>,
    /// Centre rho0 = 1/r0; ell defaults to that of the circular orbit.
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    rho0: Option<f64>,
    /// Amplitudes (comma separated); default 0.05 rho0 halved three times.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    xi: Option<Vec<f64>>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    rtol: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    atol: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PeriodParams {
    ell: Option<f64>,
    rho0: Option<f64>,
    xi: Vec<f64>,
    rtol: f64,
    atol: f64,
}

impl Default for PeriodParams {
    fn default() -> Self {
        let o = PeriodOptions::default();
        Self {
            ell: None,
            rho0: None,
            xi: vec![],
            rtol: o.rtol,
            atol: o.atol,
        }
    }
}

pub fn period(args: &PeriodArgs, ctx: &Context) -> Result<Report, CliError> {
    let pp: PeriodParams = resolve_params(args, &ctx.file)?;
    let params = ctx.setup.params()?;
    let pot = potential(ctx, &params)?;
    let (rho0, ell) = match (pp.rho0, pp.ell) {
        (Some(rho0), Some(ell)) => (rho0, ell),
        (Some(rho0), None) => {
            if !(rho0 > 0.0) {
                return Err(Error::Domain(format!("rho0 must be positive, got {rho0}")).into());
            }
            (rho0, circular_orbit(1.0 / rho0, &pot, &params)?.ell)
        }
        (None, Some(ell)) => match equilibrium_solve(ell, &pot, &params)? {
            Equilibria::Isolated(roots) if !roots.is_empty() => (roots[0], ell),
            Equilibria::Isolated(_) => return Err(Error::Domain(format!("no equilibrium at ell = {ell}")).into()),
            Equilibria::Continuum => {
                return Err(CliError::Usage(format!("every rho is an equilibrium at ell = {ell}; pass --rho0")))
            }
        },
        (None, None) => return Err(CliError::Usage("period needs --ell or --rho0".into())),
    };
    let lin = linearized_frequency(rho0, ell, &pot, &params)?;
    let theta0 = lin
        .theta0
        .ok_or_else(|| Error::Precondition(format!("equilibrium at rho0 = {rho0} is not a centre")))?;
    let xis = if pp.xi.is_empty() { default_amplitudes(rho0) } else { pp.xi.clone() };
    let opts = PeriodOptions {
        rtol: pp.rtol,
        atol: pp.atol,
        ..PeriodOptions::default()
    };
    let pool = ctx.pool()?;
    let samples = pool.install(|| {
        xis.par_iter()
            .map(|&xi| period_polar(rho0, ell, xi, &pot, &params, &opts).map(|p| (xi, p)))
            .collect::<Result<Vec<_>, Error>>()
    })?;
    let fit = fit_period_samples(rho0, ell, theta0, samples, opts.rtol);
    let mut files = Vec::new();
    files.extend(write_file(ctx, "period.csv", |w| fit.write_csv(w))?);
    files.extend(write_json(ctx, "period.json", &fit.sidecar())?);
    let summary = format!(
        "period rho0 = {}, ell = {}: Theta0 = {}, c2 = {:.6e} (residual {:.1e}), max |P - Theta0| = {:.3e}",
        rho0,
        ell,
        theta0,
        fit.c2,
        fit.residual,
        fit.samples.iter().map(|(_, p)| (p - theta0).abs()).fold(0.0, f64::max)
    );
    let mut result = fit.sidecar();
    result["samples"] = json!(fit.samples);
    result["c1"] = json!(fit.c1);
    result["files"] = json!(files);
    Ok(Report::new(&pp, result, summary))
}

// ---------------------------------------------------------------- bertrand

#[derive(Debug, Args, Serialize)]
pub struct BertrandArgs {
    /// Family parameter, a > -1.
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    a: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    rho_star: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    ell_star: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    rho_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    rho_max: Option<f64>,
    /// Centres at which the period function is measured (comma separated).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    rho0: Option<Vec<f64>>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    spacing: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BertrandParams {
    a: f64,
    rho_star: f64,
    ell_star: f64,
    rho_min: f64,
    rho_max: f64,
    rho0: Vec<f64>,
    spacing: f64,
}

impl Default for BertrandParams {
    fn default() -> Self {
        Self {
            a: 0.5,
            rho_star: 1.0,
            ell_star: 2.0,
            rho_min: 0.5,
            rho_max: 2.0,
            rho0: vec![0.8, 1.0, 1.25],
            spacing: FamilyOptions::default().spacing,
        }
    }
}

#[derive(Debug, Serialize)]
struct CentreReport {
    rho0: f64,
    ell: f64,
    x: f64,
    q: f64,
    theta0: f64,
    c2: f64,
    c2_formula: f64,
    relative_mismatch: f64,
    residual: f64,
}

pub fn bertrand(args: &BertrandArgs, ctx: &Context) -> Result<Report, CliError> {
    let bp: BertrandParams = resolve_params(args, &ctx.file)?;
    let params = ctx.setup.params()?;
    let opts = FamilyOptions {
        spacing: bp.spacing,
        ..FamilyOptions::default()
    };
    let fam = build_family(bp.a, bp.rho_star, bp.ell_star, (bp.rho_min, bp.rho_max), &params, &opts)?;
    let pot = fam.potential();
    let popts = PeriodOptions::default();
    let pool = ctx.pool()?;
    let centres = pool.install(|| {
        bp.rho0
            .par_iter()
            .map(|&want| -> Result<CentreReport, Error> {
                let i = fam.nearest(want);
                let (rho0, ell) = (fam.rho[i], fam.ell[i]);
                let lin = linearized_frequency(rho0, ell, pot, &params)?;
                let theta0 = lin
                    .theta0
                    .ok_or_else(|| Error::Precondition(format!("family equilibrium at rho0 = {rho0} is not a centre")))?;
                let samples = default_amplitudes(rho0)
                    .into_iter()
                    .map(|xi| period_polar(rho0, ell, xi, pot, &params, &popts).map(|p| (xi, p)))
                    .collect::<Result<Vec<_>, Error>>()?;
                let fit = fit_period_samples(rho0, ell, theta0, samples, popts.rtol);
                let formula = period_constant_formula(rho0, ell, bp.a, &params);
                let x = (rho0 * ell / params.mc()).powi(2);
                Ok(CentreReport {
                    rho0,
                    ell,
                    x,
                    q: q_poly(x, bp.a),
                    theta0,
                    c2: fit.c2,
                    c2_formula: formula,
                    relative_mismatch: (fit.c2 - formula).abs() / formula.abs(),
                    residual: fit.residual,
                })
            })
            .collect::<Result<Vec<_>, Error>>()
    })?;
    let cert = obstruction_certificate(bp.a)?;
    let worst = centres.iter().map(|c| c.relative_mismatch).fold(0.0, f64::max);
    let mut files = Vec::new();
    files.extend(write_file(ctx, "family.csv", |w| fam.write_csv(w))?);
    files.extend(write_json(ctx, "family.json", &fam.metadata())?);
    let result = json!({
        "centres": centres,
        "max_relative_mismatch": worst,
        "truncated": fam.truncated,
        "obstruction": cert,
        "files": files,
    });
    files.extend(write_json(ctx, "bertrand.json", &result)?);
    let summary = format!(
        "bertrand a = {}: {} centres, max relative c2 mismatch {:.3e}, no isochronous family: {}",
        bp.a,
        centres.len(),
        worst,
        cert.no_isochronous_family
    );
    Ok(Report::new(&bp, result, summary))
}

// ---------------------------------------------------------------- rungelenz

#[derive(Debug, Args, Serialize)]
pub struct RungeLenzArgs {
    /// Angular momentum; a negative value is mirrored to positive orientation.
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    ell: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    h: Option<f64>,
    /// Angle step of the frame samples.
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    dtheta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    t_end: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RungeLenzParams {
    ell: f64,
    h: f64,
    dtheta: f64,
    t_end: f64,
}

impl Default for RungeLenzParams {
    fn default() -> Self {
        Self {
            ell: 2.0,
            h: -0.05,
            dtheta: 0.01,
            t_end: 1200.0,
        }
    }
}

pub fn rungelenz(args: &RungeLenzArgs, ctx: &Context) -> Result<Report, CliError> {
    let rp: RungeLenzParams = resolve_params(args, &ctx.file)?;
    require_coulomb(ctx, "rungelenz")?;
    let params = ctx.setup.params()?;
    let k = ctx.setup.k;
    let pot = potential(ctx, &params)?;
    let mirrored = rp.ell < 0.0;
    let pt = EMPoint::new(rp.ell.abs(), rp.h);
    let kind = classify_point(pt, k, &params, CLASSIFY_TOL).kind;
    let state = match kind {
        EMKind::BoundedNonCollision | EMKind::Circular => perihelion_state(pt, k, &params)?,
        _ => {
            existence_witness(pt, k, &params)?
                .ok_or_else(|| Error::Domain(format!("no motion with ell = {}, h = {} ({kind})", rp.ell, rp.h)))?
                .state
        }
    };
    let traj = integrate(&state, (0.0, rp.t_end), &pot, &params, &IntegratorConfig::default())?;
    let rep = rl_components_and_invariant(&traj, k, rp.dtheta)?;
    let precession = apsidal_precession(&traj, k).ok();
    let csv = write_file(ctx, "rungelenz.csv", |w| {
        writeln!(w, "theta,R_alpha,R_beta")?;
        for f in &rep.frames {
            writeln!(
                w,
                "{},{},{}",
                relcentral::dynamics::format_g17(f.theta),
                relcentral::dynamics::format_g17(f.r_alpha),
                relcentral::dynamics::format_g17(f.r_beta)
            )?;
        }
        Ok(())
    })?;
    let summary = format!(
        "rungelenz {kind} sigma2 = {}: invariant {} (drift {:.3e}), ode residual {:.3e}, frame count {}{}",
        rep.sigma2,
        rep.invariant0,
        rep.invariant_drift,
        rep.ode_residual,
        rep.frames.len(),
        precession
            .as_ref()
            .map_or(String::new(), |p| format!(", perihelion advance {:.6e}", p.precession_per_period))
    );
    let result = json!({
        "class": kind,
        "mirrored": mirrored,
        "sigma2": rep.sigma2,
        "invariant0": rep.invariant0,
        "invariant_drift": rep.invariant_drift,
        "ode_residual": rep.ode_residual,
        "crg_residual": rep.crg_residual,
        "frames": rep.frames.len(),
        "precession": precession,
        "files": csv.into_iter().collect::<Vec<_>>(),
    });
    Ok(Report::new(&rp, result, summary))
}

// ---------------------------------------------------------------- collision

#[derive(Debug, Args, Serialize)]
pub struct CollisionArgs {
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    ell: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    h: Option<f64>,
    /// Initial radius.
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    r: Option<f64>,
    /// Start moving away from the centre and fit the collision in the past.
    #[arg(long)]
    #[serde(skip_serializing_if = "is_false")]
    outgoing: bool,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    r_stop: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    window_levels: Option<u32>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CollisionParams {
    ell: f64,
    h: f64,
    r: f64,
    outgoing: bool,
    r_stop: f64,
    window_levels: u32,
}

impl Default for CollisionParams {
    fn default() -> Self {
        let cfg = CollisionConfig::default();
        Self {
            ell: 0.5,
            h: 0.0,
            r: 1.0,
            outgoing: false,
            r_stop: cfg.r_stop,
            window_levels: cfg.window_levels,
        }
    }
}

/// State at radius `r` on the x axis with `L = ell` and `H = h`.
fn state_at_radius(r: f64, ell: f64, h: f64, outgoing: bool, k: f64, params: &PhysicalParams) -> Result<PhaseState, Error> {
    if !(r > 0.0) {
        return Err(Error::Domain(format!("radius must be positive, got {r}")));
    }
    // h + k/r = m c^2 (gamma - 1)
    let gamma = 1.0 + (h + k / r) / params.rest_energy();
    let p2 = params.mc().powi(2) * (gamma * gamma - 1.0);
    let pt = ell / r;
    let pr2 = p2 - pt * pt;
    if !(gamma >= 1.0 && pr2 >= 0.0) {
        return Err(Error::Domain(format!("no state with ell = {ell}, h = {h} at r = {r}")));
    }
    let pr = if outgoing { pr2.sqrt() } else { -pr2.sqrt() };
    PhaseState::new(Vec2::new(r, 0.0), Vec2::new(pr, pt))
}

pub fn collision(args: &CollisionArgs, ctx: &Context) -> Result<Report, CliError> {
    let cp: CollisionParams = resolve_params(args, &ctx.file)?;
    require_coulomb(ctx, "collision")?;
    let params = ctx.setup.params()?;
    let k = ctx.setup.k;
    let pot = potential(ctx, &params)?;
    let state = state_at_radius(cp.r, cp.ell, cp.h, cp.outgoing, k, &params)?;
    let cfg = CollisionConfig {
        r_stop: cp.r_stop,
        window_levels: cp.window_levels,
        ..CollisionConfig::default()
    };
    let run = integrate_to_collision(&state, k, &params, &cfg)?;
    let fit = run.fit;
    let mut files = Vec::new();
    files.extend(write_file(ctx, "collision.csv", |w| run.approach.write_csv(w))?);
    files.extend(write_json(ctx, "collision.json", &fit.to_json())?);
    let summary = format!(
        "collision t_c = {}: slope {} (predicted {}), lambda {} (predicted {}), ||w| - k/c| = {:.3e}",
        fit.t_c,
        fit.slope,
        fit.slope_pred,
        fit.lambda,
        fit.lambda_pred,
        fit.residuals.w_norm_error
    );
    let mut result = fit.to_json();
    result["H"] = json!(hamiltonian(&state, &pot, &params)?);
    result["L"] = json!(angular_momentum(&state));
    result["files"] = json!(files);
    Ok(Report::new(&cp, result, summary))
}
