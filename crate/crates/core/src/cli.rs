//! Command-line front end. `run` returns the process exit code: 0 when the
//! check holds or the theorem is confirmed, 1 when it fails, is refuted or
//! does not apply, 2 on configuration and evaluation errors.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauge::{verify_contraction, GaugeKind, SelfMap, SelfMapSpec};
use crate::phi::{classify_phi, log_spaced, ComparisonFunction, PhiPlan};
use crate::picard::{
    default_starts, iterate_with_window, run_theorem_harness, ConclusionStatus, HarnessOptions,
    HypothesisStatus, PicardTrace, TheoremVerdict, DEFAULT_MAX_ITERS, DEFAULT_TOL, DEFAULT_WINDOW,
};
use crate::seqlab::{
    auto_epsilon, lemma1_witness, lemma2_check, parse_table, parse_values, semi_cauchy_profile,
    SemiCauchyProfile, SequencePrefix, WitnessReport,
};
use crate::space::{DistanceStructure, Point, DEFAULT_GRID};

pub const EXIT_HOLDS: i32 = 0;
pub const EXIT_FAILS: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

/// Default number of witness rows.
pub const DEFAULT_J_MAX: usize = 100;

#[derive(Debug, Parser)]
#[command(name = "fixlab", version, about = "Sampled fixed-point verification for symmetric distance structures")]
pub struct Cli {
    #[command(subcommand)]
    pub task: Task,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    /// Check the axioms of the distance and name its structure
    ClassifySpace,
    /// Check normality, asymptotic normality and near right admissibility
    ClassifyPhi,
    /// Check d(Tx,Ty) <= phi(G(x,y)) over the sample plan
    CheckContraction,
    /// Run Picard orbits and report 0d-convergence
    Iterate,
    /// Match the hypotheses to a fixed-point theorem and test its conclusion
    Harness,
    /// Build the (m(j), n(j)) witness for a semi-Cauchy sequence
    Witness,
    /// Compare phi along a descent with the right upper envelope
    Lemma2,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::ClassifySpace => "classify-space",
            Task::ClassifyPhi => "classify-phi",
            Task::CheckContraction => "check-contraction",
            Task::Iterate => "iterate",
            Task::Harness => "harness",
            Task::Witness => "witness",
            Task::Lemma2 => "lemma2",
        }
    }
}

#[derive(Debug, Clone, Default, clap::Args)]
pub struct Flags {
    /// Configuration document (JSON)
    #[arg(global = true)]
    pub config_path: Option<PathBuf>,
    #[arg(long = "config", global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Also write the report as JSON to this file
    #[arg(long, global = true, value_name = "OUT")]
    pub json: Option<PathBuf>,
    #[arg(long, global = true, value_name = "F")]
    pub tol: Option<f64>,
    /// Grid size for analytic spaces
    #[arg(long, global = true, value_name = "N")]
    pub grid: Option<usize>,
    #[arg(long, global = true, value_name = "N", env = "FIXLAB_SEED")]
    pub seed: Option<u64>,
    /// Epsilon for the witness task
    #[arg(long, global = true, value_name = "F")]
    pub eps: Option<f64>,
    #[arg(long, global = true, value_name = "M1|M2|M3")]
    pub gauge: Option<GaugeKind>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub task: Option<Task>,
    pub space: Option<SpaceConfig>,
    pub map: Option<MapConfig>,
    pub phi: Option<PhiConfig>,
    pub gauge: Option<GaugeKind>,
    pub starts: Option<Vec<f64>>,
    #[serde(default)]
    pub assume_d_asymptotic: bool,
    pub sequence: Option<SequenceConfig>,
    #[serde(default)]
    pub options: Options,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpaceConfig {
    Analytic {
        expression: String,
        domain: [f64; 2],
        grid: Option<usize>,
    },
    Tabulated {
        matrix: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapConfig {
    pub expression: Option<String>,
    pub indices: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhiConfig {
    pub expression: String,
    #[serde(default)]
    pub exceptional: Vec<f64>,
    pub monotone: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SequenceFormat {
    #[default]
    Points,
    Table,
}

/// Terms inline (`values` or `table`) or in a text file resolved against
/// the configuration's directory.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceConfig {
    pub values: Option<Vec<f64>>,
    pub table: Option<Vec<Vec<f64>>>,
    pub file: Option<PathBuf>,
    #[serde(default)]
    pub format: SequenceFormat,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Options {
    pub tol: Option<f64>,
    pub max_iters: Option<usize>,
    pub window: Option<usize>,
    pub grid: Option<usize>,
    pub seed: Option<u64>,
    pub scan: Option<ScanConfig>,
    /// Witness epsilon; omitted means automatic.
    pub eps: Option<f64>,
    pub j_max: Option<usize>,
    /// Base point of the descent in the lemma2 task.
    pub s: Option<f64>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }
}

/// A configuration with command-line overrides applied and every numeric
/// option resolved.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub config: RunConfig,
    pub base_dir: PathBuf,
    pub tol: f64,
    pub max_iters: usize,
    pub window: usize,
    pub grid: Option<usize>,
    pub seed: u64,
    pub eps: Option<f64>,
    pub gauge: Option<GaugeKind>,
}

impl Resolved {
    pub fn new(config: RunConfig, base_dir: PathBuf, flags: &Flags) -> Result<Self> {
        let o = &config.options;
        let tol = flags.tol.or(o.tol).unwrap_or(DEFAULT_TOL);
        let max_iters = o.max_iters.unwrap_or(DEFAULT_MAX_ITERS);
        let window = o.window.unwrap_or(DEFAULT_WINDOW);
        let grid = flags.grid.or(o.grid);
        let eps = flags.eps.or(o.eps);
        positive("tol", tol)?;
        if max_iters == 0 || window == 0 || grid == Some(0) {
            return Err(Error::Config("max_iters, window and grid must be positive".into()));
        }
        if let Some(e) = eps {
            positive("eps", e)?;
        }
        Ok(Self {
            tol,
            max_iters,
            window,
            grid,
            seed: flags.seed.or(o.seed).unwrap_or(PhiPlan::default().rng_seed),
            eps,
            gauge: flags.gauge.or(config.gauge),
            base_dir,
            config,
        })
    }

    pub fn space(&self) -> Result<DistanceStructure> {
        match self.config.space.as_ref().ok_or_else(|| missing("space"))? {
            SpaceConfig::Analytic {
                expression,
                domain,
                grid,
            } => DistanceStructure::parse_analytic(
                expression,
                domain[0],
                domain[1],
                self.grid.or(*grid).unwrap_or(DEFAULT_GRID),
            ),
            SpaceConfig::Tabulated { matrix } => DistanceStructure::tabulated(matrix.clone()),
        }
    }

    pub fn map(&self, space: &DistanceStructure) -> Result<SelfMap> {
        let m = self.config.map.as_ref().ok_or_else(|| missing("map"))?;
        let spec = match (&m.expression, &m.indices) {
            (Some(e), None) => SelfMapSpec::parse_analytic(e)?,
            (None, Some(ix)) => SelfMapSpec::Tabulated(ix.clone()),
            _ => {
                return Err(Error::Config(
                    "map needs exactly one of `expression` and `indices`".into(),
                ))
            }
        };
        SelfMap::new(spec, space)
    }

    pub fn phi(&self) -> Result<ComparisonFunction> {
        let p = self.config.phi.as_ref().ok_or_else(|| missing("phi"))?;
        ComparisonFunction::parse(&p.expression, p.exceptional.clone(), p.monotone)
    }

    pub fn gauge(&self) -> Result<GaugeKind> {
        self.gauge.ok_or_else(|| missing("gauge"))
    }

    pub fn phi_plan(&self) -> Result<PhiPlan> {
        let mut plan = PhiPlan {
            rng_seed: self.seed,
            ..PhiPlan::default()
        };
        if let Some(scan) = &self.config.options.scan {
            if !(scan.lo > 0.0 && scan.hi > scan.lo) || scan.points < 2 {
                return Err(Error::Config("scan needs 0 < lo < hi and at least 2 points".into()));
            }
            plan.scan = log_spaced(scan.lo, scan.hi, scan.points);
            plan.normal_samples = plan.scan.clone();
        }
        Ok(plan)
    }

    pub fn harness_options(&self) -> Result<HarnessOptions> {
        Ok(HarnessOptions {
            tol: self.tol,
            max_iters: self.max_iters,
            window: self.window,
            phi_plan: self.phi_plan()?,
        })
    }

    pub fn starts(&self, space: &DistanceStructure) -> Result<Vec<Point>> {
        match &self.config.starts {
            Some(v) if !v.is_empty() => v.iter().map(|&x| space.point_from(x)).collect(),
            Some(_) => Err(Error::Config("starts is empty".into())),
            None => Ok(default_starts(space)),
        }
    }

    pub fn sequence(&self) -> Result<SequencePrefix> {
        let seq = self.config.sequence.as_ref().ok_or_else(|| missing("sequence"))?;
        match (&seq.values, &seq.table, &seq.file) {
            (Some(v), None, None) => SequencePrefix::real_line(v),
            (None, Some(t), None) => SequencePrefix::table(t.clone()),
            (None, None, Some(f)) => {
                let path = self.base_dir.join(f);
                let text = std::fs::read_to_string(&path).map_err(|source| Error::Io {
                    path: path.display().to_string(),
                    source,
                })?;
                match seq.format {
                    SequenceFormat::Points => SequencePrefix::real_line(&parse_values(&text)?),
                    SequenceFormat::Table => SequencePrefix::table(parse_table(&text)?),
                }
            }
            _ => Err(Error::Config(
                "sequence needs exactly one of `values`, `table` and `file`".into(),
            )),
        }
    }

    /// The descent for the lemma2 task: plain values only.
    pub fn descent(&self) -> Result<Vec<f64>> {
        let seq = self.config.sequence.as_ref().ok_or_else(|| missing("sequence"))?;
        match (&seq.values, &seq.file) {
            (Some(v), None) => Ok(v.clone()),
            (None, Some(f)) => {
                let path = self.base_dir.join(f);
                let text = std::fs::read_to_string(&path).map_err(|source| Error::Io {
                    path: path.display().to_string(),
                    source,
                })?;
                parse_values(&text)
            }
            _ => Err(Error::Config("lemma2 needs the descent as `values` or a `file`".into())),
        }
    }
}

fn missing(field: &str) -> Error {
    Error::Config(format!("the task needs `{field}` in the configuration"))
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be positive, got {v}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterateReport {
    pub traces: Vec<PicardTrace>,
    pub all_converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessTaskReport {
    pub profile: SemiCauchyProfile,
    pub witness: WitnessReport,
    /// Every late row satisfies the far-pair, first-exit and sandwich checks.
    pub late_rows_hold: bool,
}

/// Result of one task: a structured report plus its text rendering.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub holds: bool,
    pub json: serde_json::Value,
    pub text: String,
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    task: &'a str,
    holds: bool,
    tol: f64,
    seed: u64,
    report: T,
}

fn outcome<T: Serialize>(task: Task, r: &Resolved, holds: bool, report: &T, text: String) -> Result<Outcome> {
    let json = serde_json::to_value(Envelope {
        task: task.name(),
        holds,
        tol: r.tol,
        seed: r.seed,
        report,
    })
    .map_err(|e| Error::Config(format!("cannot serialize the report: {e}")))?;
    Ok(Outcome { holds, json, text })
}

/// Run one task on a resolved configuration.
pub fn execute(task: Task, r: &Resolved) -> Result<Outcome> {
    if let Some(t) = r.config.task {
        if t != task {
            return Err(Error::Config(format!(
                "configuration is for `{}`, not `{}`",
                t.name(),
                task.name()
            )));
        }
    }
    let q = |v: f64| quantize(v, r.tol);
    match task {
        Task::ClassifySpace => {
            let space = r.space()?;
            let class = space.classify()?;
            let mut text = format!("structure: {}\n", class.label);
            for rep in &class.reports {
                let _ = write!(text, "  {:<22} {}", rep.axiom.name(), if rep.holds { "holds" } else { "fails" });
                if let Some(w) = &rep.witness {
                    let pts: Vec<String> = w.points.iter().map(|p| p.to_string()).collect();
                    let _ = write!(text, " at ({})", pts.join(", "));
                }
                text.push('\n');
            }
            outcome(task, r, true, &class, text)
        }
        Task::ClassifyPhi => {
            let phi = r.phi()?;
            let report = classify_phi(&phi, &r.phi_plan()?)?;
            let mut text = format!("phi(t) = {}\n", report.phi);
            let rows = [
                ("normal", Some(&report.normal)),
                ("asymptotic normal", report.asymptotic_normal.as_ref()),
                ("nearly right admissible", report.nearly_right_admissible.as_ref()),
            ];
            for (name, v) in rows {
                let status = match v {
                    Some(v) if v.holds => "holds".to_string(),
                    Some(v) => match &v.witness {
                        Some(w) => format!("fails at t={}", w.at.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")),
                        None => "fails".to_string(),
                    },
                    None => "skipped".to_string(),
                };
                let _ = writeln!(text, "  {name:<24} {status}");
            }
            outcome(task, r, report.all_hold(), &report, text)
        }
        Task::CheckContraction => {
            let space = r.space()?;
            let map = r.map(&space)?;
            let phi = r.phi()?;
            let report = verify_contraction(&space, &map, &phi, r.gauge()?)?;
            let mut text = format!(
                "contraction under {} {} on {} pairs\n",
                report.gauge,
                if report.holds { "holds" } else { "fails" },
                report.checked_count
            );
            if let Some(w) = &report.witness {
                let _ = writeln!(
                    text,
                    "  witness ({}, {}): d(Tx,Ty)={} > phi(G)={} (G={})",
                    w.x, w.y, w.d_tx_ty, w.phi_value, w.gauge_value
                );
            }
            outcome(task, r, report.holds, &report, text)
        }
        Task::Iterate => {
            let space = r.space()?;
            let map = r.map(&space)?;
            let traces = r
                .starts(&space)?
                .into_iter()
                .map(|x0| iterate_with_window(&space, &map, x0, r.max_iters, r.tol, r.window))
                .collect::<Result<Vec<_>>>()?;
            let mut text = String::new();
            for t in &traces {
                let _ = write!(text, "start {}: {} iterations, ", t.start, t.iterations());
                match t.limit_candidate {
                    Some(z) if t.converged_0d => {
                        let _ = writeln!(text, "0d-converges to z={}", q(z.coord()));
                    }
                    _ => {
                        let _ = write!(text, "not 0d-convergent");
                        if let Some(&last) = t.orbit.last() {
                            let _ = write!(text, " (d(x_N,x_N)={})", q(space.distance(last, last)?));
                        }
                        text.push('\n');
                    }
                }
            }
            let all = traces.iter().all(|t| t.converged_0d);
            let report = IterateReport {
                traces,
                all_converged: all,
            };
            outcome(task, r, all, &report, text)
        }
        Task::Harness => {
            let space = r.space()?;
            let map = r.map(&space)?;
            let phi = r.phi()?;
            let starts = r.starts(&space)?;
            let verdict = run_theorem_harness(
                &space,
                &map,
                &phi,
                r.gauge()?,
                &starts,
                r.config.assume_d_asymptotic,
                &r.harness_options()?,
            )?;
            let text = harness_text(&verdict, r.tol);
            outcome(task, r, verdict.confirmed(), &verdict, text)
        }
        Task::Witness => {
            let prefix = r.sequence()?;
            let eps = match r.eps {
                Some(e) => e,
                None => auto_epsilon(&prefix)?,
            };
            let j_max = r.config.options.j_max.unwrap_or(DEFAULT_J_MAX);
            let profile = semi_cauchy_profile(&prefix, r.tol)?;
            let witness = lemma1_witness(&prefix, eps, j_max)?;
            let late_ok = witness
                .late_rows()
                .all(|w| w.far_pair_holds(eps) && w.first_exit_holds(eps) && w.sandwich_holds(eps));
            let mut text = format!(
                "epsilon={eps}, j_eps={}, rows 0..={}{}\n",
                witness.j_eps.map_or("none".into(), |j| j.to_string()),
                witness.rows.len() - 1,
                if witness.complete { "" } else { " (partial)" }
            );
            for w in witness.rows.iter().take(12) {
                let _ = writeln!(text, "  j={} m={} n={} d(x_m,x_n)={} d(x_m,x_n-1)={}", w.j, w.m, w.n, w.d_m_n, w.d_m_prev);
            }
            let holds = witness.complete && late_ok;
            let report = WitnessTaskReport {
                profile,
                witness,
                late_rows_hold: late_ok,
            };
            outcome(task, r, holds, &report, text)
        }
        Task::Lemma2 => {
            let phi = r.phi()?;
            let s = r.config.options.s.ok_or_else(|| missing("options.s"))?;
            let verdict = lemma2_check(&phi, s, &r.descent()?)?;
            let text = format!(
                "limsup phi(t_n) <= L+phi(s) {} at s={s}\n  {}\n",
                if verdict.holds { "holds" } else { "fails" },
                verdict.notes.join("\n  ")
            );
            outcome(task, r, verdict.holds, &verdict, text)
        }
    }
}

fn harness_text(v: &TheoremVerdict, tol: f64) -> String {
    let q = |x: f64| quantize(x, tol);
    let mut text = String::new();
    let headline = match (v.theorem_id, v.conclusion_status) {
        (Some(t), ConclusionStatus::Confirmed) => {
            let mut h = format!("{t} confirmed");
            if let Some(s) = v.fixed_point_report.traces.first() {
                if let Some(z) = s.limit {
                    let _ = write!(h, ", z={}", q(z.coord()));
                }
                if let Some(d) = s.limit_self_distance {
                    let _ = write!(h, ", d(z,z)={}", q(d));
                }
            }
            h
        }
        (Some(t), ConclusionStatus::Refuted) => format!("{t} refuted"),
        (Some(t), ConclusionStatus::NotApplicable) => format!("not applicable (closest: {t})"),
        (None, _) => "not applicable (no theorem matches the space and gauge)".to_string(),
    };
    let _ = writeln!(text, "{headline}");
    let _ = writeln!(text, "  space: {}", v.space_labels.first().map_or("-", |l| l.name()));
    let _ = writeln!(text, "  gauge: {}", v.gauge);
    for h in &v.hypotheses {
        let status = match h.status {
            HypothesisStatus::VerifiedOnSamples => "verified on samples",
            HypothesisStatus::Derived => "derived",
            HypothesisStatus::Assumed => "assumed",
            HypothesisStatus::Failed => "FAILED",
        };
        let _ = writeln!(text, "  [{status}] {}: {}", h.name, h.statement);
    }
    if let Some(w) = &v.contraction.witness {
        if !v.contraction.holds {
            let _ = writeln!(text, "  contraction witness ({}, {})", w.x, w.y);
        }
    }
    for c in &v.fixed_point_report.checks {
        let _ = writeln!(text, "  {} {}: {}", if c.passed { "ok" } else { "FAILED" }, c.name, c.detail);
    }
    text
}

/// Round to the decimal precision of `tol` and print without trailing
/// zeros, keeping one decimal.
pub fn quantize(v: f64, tol: f64) -> String {
    let digits = (-tol.log10()).ceil().clamp(0.0, 17.0) as usize;
    let mut s = format!("{v:.digits$}");
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.push('0');
        }
    } else {
        s.push_str(".0");
    }
    if s.trim_start_matches('-').chars().all(|c| c == '0' || c == '.') {
        s = "0.0".into();
    }
    s
}

/// Parse `argv`, run the task and write the text report to `out`.
pub fn run<I, T>(argv: I, out: &mut impl Write, err: &mut impl Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_HOLDS };
            let _ = if e.use_stderr() {
                write!(err, "{}", e.render())
            } else {
                write!(out, "{}", e.render())
            };
            return code;
        }
    };
    match run_cli(&cli, out) {
        Ok(true) => EXIT_HOLDS,
        Ok(false) => EXIT_FAILS,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_ERROR
        }
    }
}

fn run_cli(cli: &Cli, out: &mut impl Write) -> Result<bool> {
    let path = match (&cli.flags.config_path, &cli.flags.config) {
        (Some(_), Some(_)) => {
            return Err(Error::Config("give the configuration either positionally or with --config".into()))
        }
        (Some(p), None) | (None, Some(p)) => p,
        (None, None) => return Err(Error::Config("no configuration given".into())),
    };
    let config = RunConfig::load(path)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let resolved = Resolved::new(config, base, &cli.flags)?;
    let outcome = execute(cli.task, &resolved)?;
    write!(out, "{}", outcome.text).map_err(|source| Error::Io {
        path: "<stdout>".into(),
        source,
    })?;
    if let Some(json_path) = &cli.flags.json {
        let mut body = serde_json::to_string_pretty(&outcome.json)
            .map_err(|e| Error::Config(format!("cannot serialize the report: {e}")))?;
        body.push('\n');
        std::fs::write(json_path, body).map_err(|source| Error::Io {
            path: json_path.display().to_string(),
            source,
        })?;
    }
    Ok(outcome.holds)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resolved(json: &str) -> Resolved {
        Resolved::new(RunConfig::from_json(json).unwrap(), PathBuf::new(), &Flags::default()).unwrap()
    }

    #[test]
    fn quantized_printing() {
        assert_eq!(quantize(0.0, 1e-9), "0.0");
        assert_eq!(quantize(-1e-12, 1e-9), "0.0");
        assert_eq!(quantize(0.25, 1e-9), "0.25");
        assert_eq!(quantize(1.0, 1e-9), "1.0");
        assert_eq!(quantize(0.123456, 1e-3), "0.123");
        assert_eq!(quantize(3.0, 1.0), "3.0");
    }

    #[test]
    fn strict_configs() {
        assert!(RunConfig::from_json(r#"{"spaec": {}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"options": {"tool": 1}}"#).is_err());
        assert!(RunConfig::from_json(
            r#"{"space": {"kind": "analytic", "expression": "x", "domain": [0,1], "extra": 1}}"#
        )
        .is_err());
        let c = RunConfig::from_json(r#"{"task": "classify-phi", "phi": {"expression": "t/2"}}"#).unwrap();
        assert_eq!(c.task, Some(Task::ClassifyPhi));
    }

    #[test]
    fn task_mismatch_is_an_error() {
        let r = resolved(r#"{"task": "harness", "phi": {"expression": "t/2"}}"#);
        assert!(matches!(execute(Task::ClassifyPhi, &r), Err(Error::Config(_))));
    }

    #[test]
    fn missing_fields_name_the_field() {
        let r = resolved(r#"{}"#);
        let e = execute(Task::ClassifySpace, &r).unwrap_err().to_string();
        assert!(e.contains("`space`"), "{e}");
    }

    #[test]
    fn map_needs_one_form() {
        let r = resolved(
            r#"{"space": {"kind": "tabulated", "matrix": [[0,1],[1,0]]},
                "map": {"expression": "x", "indices": [0, 1]}}"#,
        );
        let s = r.space().unwrap();
        assert!(r.map(&s).is_err());
    }

    #[test]
    fn flags_override_options() {
        let c = RunConfig::from_json(r#"{"options": {"tol": 1e-3, "seed": 4, "grid": 9}}"#).unwrap();
        let flags = Flags {
            tol: Some(1e-6),
            grid: Some(17),
            ..Flags::default()
        };
        let r = Resolved::new(c, PathBuf::new(), &flags).unwrap();
        assert_eq!((r.tol, r.seed, r.grid), (1e-6, 4, Some(17)));
        let bad = RunConfig::from_json(r#"{"options": {"tol": -1}}"#).unwrap();
        assert!(Resolved::new(bad, PathBuf::new(), &Flags::default()).is_err());
    }

    #[test]
    fn constant_orbit_on_sum_distance_is_reported_divergent() {
        let r = resolved(
            r#"{"space": {"kind": "analytic", "expression": "x+y", "domain": [0,1]},
                "map": {"expression": "x"}, "starts": [0.5]}"#,
        );
        let o = execute(Task::Iterate, &r).unwrap();
        assert!(!o.holds);
        assert!(o.text.contains("not 0d-convergent (d(x_N,x_N)=1.0)"), "{}", o.text);
    }
}
