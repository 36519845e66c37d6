//! The four subcommands, each producing a JSON report and a short summary.

use brp_core::character::{CharacterJson, TreeValue};
use brp_core::effect::{full_integral, integral_path, local_error_report, y_tilde, ErrorRow};
use brp_core::rough_path::{dp_metric, stride_indices, PathJson};
use brp_core::verify::{algebra_suite, analysis_suite, pi_suite, Scenario, SuiteReport};
use brp_core::BranchedRoughPath;
use serde::Serialize;

use crate::config::{Loaded, SCHEMA_VERSION};
use crate::error::CliError;

/// Command-line overrides shared by all subcommands.
#[derive(Clone, Copy, Debug, Default)]
pub struct Overrides {
    pub refine: Option<usize>,
    pub seed: Option<u64>,
}

/// A finished command: report, one-line summary, exit code.
#[derive(Debug)]
pub struct Outcome {
    pub json: String,
    pub summary: String,
    pub exit_code: i32,
}

fn render<T: Serialize>(report: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(report).map_err(|e| CliError::Input(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

#[derive(Serialize)]
struct LiftReport {
    schema_version: u32,
    command: &'static str,
    /// Level-one increments between consecutive samples.
    increments: Vec<Vec<f64>>,
    path: PathJson,
}

pub fn cmd_lift(cfg: &Loaded, o: Overrides) -> Result<Outcome, CliError> {
    let x = cfg.path(o.seed)?;
    let increments = (1..x.len())
        .map(|k| x.position(k).iter().zip(x.position(k - 1)).map(|(a, b)| a - b).collect())
        .collect();
    let report = LiftReport { schema_version: SCHEMA_VERSION, command: "lift", increments, path: x.to_json() };
    Ok(Outcome {
        json: render(&report)?,
        summary: format!("lifted {} samples, d = {}, [p] = {}", x.len(), x.d(), x.p_floor()),
        exit_code: 0,
    })
}

fn window(cfg: &Loaded, x: &BranchedRoughPath) -> Result<(usize, usize), CliError> {
    match cfg.config.interval {
        None => Ok((0, x.len() - 1)),
        Some([s, t]) => {
            let (i, j) = (x.index_of_time(s)?, x.index_of_time(t)?);
            if i >= j {
                return Err(CliError::Input(format!("interval [{s}, {t}] is empty")));
            }
            Ok((i, j))
        }
    }
}

#[derive(Serialize)]
struct IntegrateReport {
    schema_version: u32,
    command: &'static str,
    interval: [f64; 2],
    integral: CharacterJson,
    finest_sums: CharacterJson,
    refinement_gap: f64,
    y_tilde: Vec<TreeValue>,
    error_table: Vec<ErrorRow>,
    x_p_variation: f64,
    y_p_variation: f64,
}

fn subsampled_pvar(x: &BranchedRoughPath, lo: usize, hi: usize, points: usize) -> Result<f64, CliError> {
    let stride = (hi - lo).div_ceil(points.max(2) - 1).max(1);
    let idx: Vec<usize> = stride_indices(hi - lo + 1, stride).into_iter().map(|k| lo + k).collect();
    Ok(x.restrict(&idx)?.total_p_variation())
}

pub fn cmd_integrate(cfg: &Loaded, o: Overrides) -> Result<Outcome, CliError> {
    let x = cfg.path(o.seed)?;
    let f = cfg.one_form()?;
    let opts = cfg.options(o.refine);
    let (s, t) = window(cfg, &x)?;
    let full = full_integral(&f, &x, s, t, &opts)?;
    let (e_basis, tilde) = y_tilde(&f, &x, s, t)?;
    let y_tilde = (1..e_basis.len())
        .filter(|&i| e_basis.tree_pos(i).is_some())
        .map(|i| TreeValue { forest: e_basis.forest(i).encoding(), value: tilde[i] })
        .collect();
    let io = &cfg.config.integrate;
    let window_x = x.restrict(&(s..=t).collect::<Vec<_>>())?;
    let scales = match &io.error_scales {
        Some(v) => v.clone(),
        None => (0..6).map(|k| (t - s) >> k).filter(|&w| w > 0).collect(),
    };
    let error_table = local_error_report(&f, &window_x, &scales, io.max_intervals, &opts)?;
    let y_path = integral_path(&f, &window_x)?;
    let report = IntegrateReport {
        schema_version: SCHEMA_VERSION,
        command: "integrate",
        interval: [x.times()[s], x.times()[t]],
        integral: full.y.to_json(),
        finest_sums: full.raw.to_json(),
        refinement_gap: full.gap,
        y_tilde,
        error_table,
        x_p_variation: subsampled_pvar(&x, s, t, io.pvar_points)?,
        y_p_variation: subsampled_pvar(&y_path, 0, y_path.len() - 1, io.pvar_points)?,
    };
    let level_one: Vec<String> = full.y.level_one().iter().map(|v| format!("{v:.6e}")).collect();
    Ok(Outcome {
        json: render(&report)?,
        summary: format!("integral over [{}, {}]: level one [{}], gap {:.2e}", report.interval[0], report.interval[1], level_one.join(", "), full.gap),
        exit_code: 0,
    })
}

#[derive(Serialize)]
struct VerifyReport {
    schema_version: u32,
    command: &'static str,
    passed: bool,
    report: SuiteReport,
}

pub const SUITES: [&str; 3] = ["algebra", "analysis", "pi"];

pub fn cmd_verify(cfg: Option<&Loaded>, suite: &str, o: Overrides) -> Result<Outcome, CliError> {
    let need = || cfg.ok_or_else(|| CliError::Input(format!("suite {suite} needs --config")));
    let report = match suite {
        "algebra" => {
            let v = cfg.map(|c| c.config.verify.clone()).unwrap_or_default();
            let seed = o.seed.or(cfg.and_then(|c| c.config.seed)).unwrap_or(0);
            algebra_suite(v.d, v.degree, v.instances, seed)?
        }
        "analysis" | "pi" => {
            let c = need()?;
            let sc = Scenario { path: c.path(o.seed)?, form: c.one_form()?, opts: c.options(o.refine) };
            if suite == "analysis" {
                analysis_suite(&sc)?
            } else {
                pi_suite(&sc, c.config.verify.max_gap)?
            }
        }
        other => {
            return Err(CliError::Input(format!("unknown suite {other:?}; expected one of {}", SUITES.join(", "))))
        }
    };
    let failed: Vec<&str> = report.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    let summary = if failed.is_empty() {
        format!("suite {suite}: all {} checks passed", report.checks.len())
    } else {
        format!("suite {suite}: failed {}", failed.join(", "))
    };
    let passed = report.passed;
    let out = VerifyReport { schema_version: SCHEMA_VERSION, command: "verify", passed, report };
    Ok(Outcome { json: render(&out)?, summary, exit_code: if passed { 0 } else { 1 } })
}

#[derive(Serialize)]
struct MetricsReport {
    schema_version: u32,
    command: &'static str,
    pvar1: f64,
    pvar2: f64,
    dp: f64,
}

pub fn cmd_metrics(a: &Loaded, b: &Loaded, o: Overrides) -> Result<Outcome, CliError> {
    let x1 = a.path(o.seed)?;
    let x2 = b.path(o.seed)?;
    if x1.times() != x2.times() {
        return Err(CliError::Input("the two paths are sampled on different grids".into()));
    }
    let dp = dp_metric(&x1, &x2)?;
    let report = MetricsReport {
        schema_version: SCHEMA_VERSION,
        command: "metrics",
        pvar1: x1.total_p_variation(),
        pvar2: x2.total_p_variation(),
        dp,
    };
    Ok(Outcome {
        json: render(&report)?,
        summary: format!("pvar {:.6e} / {:.6e}, d_p {:.6e}", report.pvar1, report.pvar2, dp),
        exit_code: 0,
    })
}
