use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use seqlab_core::bayes::{
    avg_risk_under_prior, bayes_oracle_1d, in_localized_set, info_radius, lecam_two_point, sample_pushforward_prior,
    small_ball_lower_bound, Atoms, PriorSpec,
};
use seqlab_core::cstar::{certificate, HardCaseConstants};
use seqlab_core::noise::sub_seed;
use seqlab_core::risk::{check_smoothness, check_tail_bound, simulate_risk, EstimatorSpec, RiskOptions};
use seqlab_core::width::{
    check_profile_shape, check_ttheta_inequalities, find_t_theta, width_profile, WidthOptions,
};
use seqlab_core::{solve_penalized_lse, ConstraintSet, NoiseBatch};

use crate::config::{load_config, ConfigError, Experiment, ExperimentConfig, Format};

/// Lower certificate the `cstar` experiment checks against.
pub const CSTAR_TARGET: f64 = 6.05e-6;
/// Slack for comparing lower bounds against the quadrature Bayes risk.
pub const ORACLE_TOL: f64 = 1e-3;
/// Tolerance for prior samples lying in the localized set.
pub const MEMBERSHIP_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{label}: {source}")]
    Core {
        label: String,
        #[source]
        source: seqlab_core::Error,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl RunError {
    /// 2 for anything the user can fix in the config, 1 for runs that failed.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Io { .. } => 2,
            RunError::Core { source, .. } => match source {
                seqlab_core::Error::Invalid { .. } | seqlab_core::Error::DimensionMismatch { .. } => 2,
                _ => 1,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(headers: &[&str]) -> Self {
        Table {
            headers: headers.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }
}

fn num(x: f64) -> String {
    format!("{x}")
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub name: String,
    pub experiment: Experiment,
    pub config: ExperimentConfig,
    pub results: Value,
    pub checks: Vec<Check>,
    pub solver_failures: usize,
    pub pass: bool,
    /// Kept out of the serialized report so identical configs give identical bytes.
    #[serde(skip)]
    pub wall_time: Duration,
    #[serde(skip)]
    pub table: Option<Table>,
}

impl RunReport {
    pub fn failed_checks(&self) -> Vec<String> {
        self.checks.iter().filter(|c| !c.pass).map(|c| c.name.clone()).collect()
    }

    pub fn render(&self, format: Format) -> Vec<u8> {
        match format {
            Format::Json => {
                let mut out = serde_json::to_vec_pretty(self).expect("report serializes");
                out.push(b'\n');
                out
            }
            Format::Csv => {
                let fallback;
                let table = match &self.table {
                    Some(t) => t,
                    None => {
                        let mut t = Table::new(&["check", "pass"]);
                        for c in &self.checks {
                            t.push(vec![c.name.clone(), c.pass.to_string()]);
                        }
                        fallback = t;
                        &fallback
                    }
                };
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(&table.headers).expect("in-memory write");
                for r in &table.rows {
                    w.write_record(r).expect("in-memory write");
                }
                w.into_inner().expect("in-memory write")
            }
        }
    }
}

/// Writes through a temporary sibling and a rename, so readers never see a
/// partial report.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), RunError> {
    let io = |source| RunError::Io {
        path: path.to_path_buf(),
        source,
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let file = path.file_name().ok_or_else(|| {
        io(std::io::Error::new(std::io::ErrorKind::InvalidInput, "output path has no file name"))
    })?;
    std::fs::create_dir_all(&dir).map_err(io)?;
    let tmp = dir.join(format!(".{}.tmp{}", file.to_string_lossy(), std::process::id()));
    let mut f = std::fs::File::create(&tmp).map_err(io)?;
    f.write_all(bytes).map_err(io)?;
    f.sync_all().map_err(io)?;
    std::fs::rename(&tmp, path).map_err(io)
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    label: String,
    seed: u64,
    opts: RiskOptions,
    results: serde_json::Map<String, Value>,
    checks: Vec<Check>,
    failures: usize,
    table: Option<Table>,
}

impl Ctx<'_> {
    fn core<T>(&self, r: seqlab_core::Result<T>) -> Result<T, RunError> {
        r.map_err(|source| RunError::Core {
            label: self.label.clone(),
            source,
        })
    }

    fn put(&mut self, key: &str, v: impl Serialize) {
        self.results
            .insert(key.to_string(), serde_json::to_value(v).expect("results serialize"));
    }

    fn check(&mut self, name: impl Into<String>, pass: bool) {
        self.checks.push(Check {
            name: name.into(),
            pass,
        });
    }

    fn set(&self) -> &ConstraintSet {
        self.cfg.set.as_ref().expect("validated")
    }

    fn theta(&self) -> &[f64] {
        self.cfg.theta.as_deref().expect("validated")
    }
}

fn evenly(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Runs one validated config. Does not write anything.
pub fn run_config(cfg: &ExperimentConfig) -> Result<RunReport, RunError> {
    let exp = cfg.validate()?;
    let start = Instant::now();
    let label = cfg.label();
    let mut opts = RiskOptions::default();
    if let Some(s) = cfg.solve {
        opts.width.solve = s;
    }
    if let Some(b) = cfg.bracket_rel_tol {
        opts.width.bracket_rel_tol = b;
    }
    let mut ctx = Ctx {
        cfg,
        seed: sub_seed(cfg.seed.unwrap_or(0), &label),
        label,
        opts,
        results: serde_json::Map::new(),
        checks: Vec::new(),
        failures: 0,
        table: None,
    };
    match exp {
        Experiment::Solve => run_solve(&mut ctx)?,
        Experiment::Width => run_width(&mut ctx)?,
        Experiment::Ttheta => run_ttheta(&mut ctx, "")?,
        Experiment::Risk => run_risk(&mut ctx, "")?,
        Experiment::Tail => run_tail(&mut ctx, "")?,
        Experiment::Smoothness => run_smoothness(&mut ctx)?,
        Experiment::Bayes => run_bayes(&mut ctx)?,
        Experiment::Cstar => run_cstar(&mut ctx, "")?,
        Experiment::CheckAll => {
            run_cstar(&mut ctx, "cstar.")?;
            if cfg.set.is_some() && cfg.seed.is_some() {
                run_ttheta(&mut ctx, "ttheta.")?;
                run_risk(&mut ctx, "risk.")?;
                run_tail(&mut ctx, "tail.")?;
            }
            ctx.table = None;
        }
    }
    let pass = ctx.checks.iter().all(|c| c.pass);
    Ok(RunReport {
        name: ctx.label,
        experiment: exp,
        config: cfg.clone(),
        results: Value::Object(ctx.results),
        checks: ctx.checks,
        solver_failures: ctx.failures,
        pass,
        wall_time: start.elapsed(),
        table: ctx.table,
    })
}

fn run_solve(ctx: &mut Ctx) -> Result<(), RunError> {
    let x = ctx.cfg.x.as_deref().expect("validated");
    let sol = ctx.core(solve_penalized_lse(ctx.set(), &ctx.cfg.penalty_or_zero(), x, &ctx.opts.width.solve))?;
    let mut t = Table::new(&["index", "value"]);
    for (i, v) in sol.point.iter().enumerate() {
        t.push(vec![i.to_string(), num(*v)]);
    }
    ctx.put("solution", &sol);
    ctx.table = Some(t);
    Ok(())
}

fn run_width(ctx: &mut Ctx) -> Result<(), RunError> {
    let theta = ctx.theta();
    let batch = NoiseBatch::new(sub_seed(ctx.seed, "width"), ctx.cfg.batch.unwrap_or(10_000), theta.len());
    let tgrid = ctx.cfg.tgrid.as_deref().expect("validated");
    let profile = ctx.core(width_profile(
        theta,
        tgrid,
        ctx.set(),
        &ctx.cfg.penalty_or_zero(),
        &batch,
        &ctx.opts.width,
    ))?;
    let shape = check_profile_shape(&profile, ctx.opts.width.inner_tol());
    let mut t = Table::new(&["t", "m_hat", "stderr"]);
    for i in 0..profile.tgrid.len() {
        t.push(vec![num(profile.tgrid[i]), num(profile.m_hat[i]), num(profile.stderr[i])]);
    }
    ctx.failures += profile.failures;
    ctx.check("profile nondecreasing and concave", shape.pass);
    ctx.put("profile", &profile);
    ctx.put("shape", shape);
    ctx.table = Some(t);
    Ok(())
}

fn run_ttheta(ctx: &mut Ctx, prefix: &str) -> Result<(), RunError> {
    let theta = ctx.theta().to_vec();
    let f = ctx.cfg.penalty_or_zero();
    let wopts: WidthOptions = ctx.opts.width;
    let batch = NoiseBatch::new(sub_seed(ctx.seed, "ttheta"), ctx.cfg.batch.unwrap_or(2000), theta.len());
    let tt = ctx.core(find_t_theta(&theta, ctx.set(), &f, &batch, &wopts))?;
    let grid = match &ctx.cfg.tgrid {
        Some(g) => g.clone(),
        None => evenly(0.0, 2.0 * tt.t_theta.max(0.5), 10),
    };
    let profile = ctx.core(width_profile(&theta, &grid, ctx.set(), &f, &batch, &wopts))?;
    let shape = check_profile_shape(&profile, wopts.inner_tol());
    let (tangent, curvature) = check_ttheta_inequalities(&profile, &tt, wopts.inner_tol());
    let mut t = Table::new(&["t", "m_hat", "tangent_rhs", "curvature_lhs", "curvature_rhs", "slack"]);
    for (a, b) in tangent.iter().zip(&curvature) {
        t.push(vec![num(a.t), num(a.lhs), num(a.rhs), num(b.lhs), num(b.rhs), num(a.slack)]);
    }
    ctx.failures += tt.failures + profile.failures;
    ctx.check(format!("{prefix}profile nondecreasing and concave"), shape.pass);
    ctx.check(format!("{prefix}tangent inequality"), tangent.iter().all(|r| r.pass));
    ctx.check(format!("{prefix}strong concavity of G"), curvature.iter().all(|r| r.pass));
    ctx.put(&format!("{prefix}t_theta"), &tt);
    ctx.put(&format!("{prefix}shape"), shape);
    ctx.put(&format!("{prefix}tangent"), &tangent);
    ctx.put(&format!("{prefix}curvature"), &curvature);
    ctx.table = Some(t);
    Ok(())
}

fn run_risk(ctx: &mut Ctx, prefix: &str) -> Result<(), RunError> {
    let est = match &ctx.cfg.estimator {
        Some(e) => e.clone(),
        None => EstimatorSpec::PenalizedLse {
            set: ctx.set().clone(),
            penalty: ctx.cfg.penalty_or_zero(),
        },
    };
    let reps = ctx.cfg.reps.unwrap_or(10_000);
    let r = ctx.core(simulate_risk(&est, ctx.theta(), reps, sub_seed(ctx.seed, "risk"), &ctx.opts))?;
    let mut t = Table::new(&["mean_sq_loss", "stderr", "risk_bound", "combined_stderr", "reps", "failures"]);
    let opt = |x: Option<f64>| x.map_or(String::new(), num);
    t.push(vec![
        num(r.mean_sq_loss),
        num(r.stderr),
        opt(r.risk_bound),
        opt(r.combined_stderr),
        r.reps.to_string(),
        r.failures.to_string(),
    ]);
    ctx.failures += r.failures;
    if let Some(p) = r.pass {
        ctx.check(format!("{prefix}risk bound"), p);
    }
    ctx.put(&format!("{prefix}risk"), &r);
    ctx.table = Some(t);
    Ok(())
}

fn run_tail(ctx: &mut Ctx, prefix: &str) -> Result<(), RunError> {
    let deltas = match &ctx.cfg.deltas {
        Some(d) => d.clone(),
        None => (0..=40).map(|i| 0.5 * i as f64).collect(),
    };
    let reps = ctx.cfg.reps.unwrap_or(10_000);
    let r = ctx.core(check_tail_bound(
        ctx.set(),
        &ctx.cfg.penalty_or_zero(),
        ctx.theta(),
        &deltas,
        reps,
        sub_seed(ctx.seed, "tail"),
        &ctx.opts,
    ))?;
    let mut t = Table::new(&["delta", "empirical", "bound", "corrected_bound", "binomial_stderr", "tested"]);
    for i in 0..r.deltas.len() {
        t.push(vec![
            num(r.deltas[i]),
            num(r.empirical[i]),
            num(r.bounds[i]),
            num(r.corrected_bounds[i]),
            num(r.binomial_stderr[i]),
            r.tested[i].to_string(),
        ]);
    }
    ctx.failures += r.failures;
    ctx.check(format!("{prefix}tail bound"), r.pass);
    ctx.put(&format!("{prefix}tail"), &r);
    ctx.table = Some(t);
    Ok(())
}

fn run_smoothness(ctx: &mut Ctx) -> Result<(), RunError> {
    let theta2 = ctx.cfg.theta2.as_deref().expect("validated");
    let reps = ctx.cfg.reps.unwrap_or(2000);
    let r = ctx.core(check_smoothness(
        ctx.set(),
        &ctx.cfg.penalty_or_zero(),
        ctx.theta(),
        theta2,
        reps,
        sub_seed(ctx.seed, "smoothness"),
        &ctx.opts,
    ))?;
    ctx.failures += r.failures;
    ctx.check("risk comparison", r.comparison_pass);
    ctx.check("t_theta stability", r.ttheta_pass);
    ctx.put("smoothness", &r);
    Ok(())
}

fn run_bayes(ctx: &mut Ctx) -> Result<(), RunError> {
    let prior = ctx.cfg.prior.clone().expect("validated");
    let (atoms, center, candidates) = match &prior {
        PriorSpec::Pushforward { theta_star, set, .. } => {
            let s = ctx.core(sample_pushforward_prior(&prior, &ctx.opts))?;
            let mut inside = true;
            for p in &s.samples {
                inside &= ctx.core(in_localized_set(set, theta_star, s.radius, p, MEMBERSHIP_TOL))?;
            }
            ctx.failures += s.failures;
            ctx.check("pushforward samples in localized set", inside);
            ctx.put("pushforward_radius", s.radius);
            ctx.put("pushforward_t_theta", &s.t_theta_star);
            let k = s.samples.len();
            let mut cands = s.samples.clone();
            cands.push(theta_star.clone());
            let atoms = Atoms {
                points: s.samples,
                weights: vec![1.0 / k as f64; k],
            };
            (atoms, theta_star.clone(), cands)
        }
        _ => {
            let atoms = ctx.core(prior.atoms(&ctx.opts))?;
            let n = atoms.points[0].len();
            let mut mean = vec![0.0; n];
            for (p, w) in atoms.points.iter().zip(&atoms.weights) {
                for (m, x) in mean.iter_mut().zip(p) {
                    *m += w * x;
                }
            }
            let cands = atoms.points.clone();
            (atoms, mean, cands)
        }
    };
    let info = match ctx.cfg.info {
        Some(i) => i,
        None => {
            let c = ctx.core(info_radius(&atoms, &center))?;
            ctx.put("info_saturated", c.saturated);
            c.value
        }
    };
    let grid = PriorSpec::Grid {
        points: atoms.points.clone(),
        weights: atoms.weights.clone(),
    };
    let small = ctx.core(small_ball_lower_bound(&grid, info, Some(&candidates), &ctx.opts))?;
    ctx.put("small_ball", &small);

    let lecam = match &prior {
        PriorSpec::TwoPoint { p1, p2, .. } => Some(ctx.core(lecam_two_point(p1, p2))?),
        _ => None,
    };
    let oracle = if atoms.points[0].len() == 1 && !matches!(prior, PriorSpec::Pushforward { .. }) {
        Some(ctx.core(bayes_oracle_1d(&prior, ctx.cfg.quad_points.unwrap_or(4001)))?)
    } else {
        None
    };
    if let Some(o) = oracle {
        ctx.put("bayes_risk", o);
        ctx.check("small-ball bound below Bayes risk", small.value <= o + ORACLE_TOL);
        if let Some(l) = &lecam {
            ctx.check("two-point bound below Bayes risk", l.value <= o + ORACLE_TOL);
        }
    }
    if let Some(l) = lecam {
        ctx.put("lecam", l);
    }
    if let Some(est) = ctx.cfg.estimator.clone() {
        let reps = ctx.cfg.reps.unwrap_or(10_000);
        let (m, s) = ctx.core(avg_risk_under_prior(&est, &grid, reps, sub_seed(ctx.seed, "bayes"), &ctx.opts))?;
        ctx.put("avg_risk", json!({ "mean": m, "stderr": s }));
        ctx.check("small-ball bound below average risk", small.value <= m + 3.0 * s);
        if m > 0.0 {
            ctx.put("bayes_ratio", small.value / m);
        }
    }
    Ok(())
}

fn run_cstar(ctx: &mut Ctx, prefix: &str) -> Result<(), RunError> {
    let c = ctx.cfg.constants.unwrap_or(HardCaseConstants::STANDARD);
    let levels = ctx.cfg.clip_levels.clone().unwrap_or_else(|| vec![0.01, 0.05, 0.1]);
    let cert = ctx.core(certificate(&c, &levels))?;
    ctx.check(format!("{prefix}sufficiency condition"), cert.holds);
    ctx.check(
        format!("{prefix}lower constant at least {CSTAR_TARGET:e}"),
        cert.cstar_lower >= CSTAR_TARGET,
    );
    let mut t = Table::new(&["a", "sup_ratio", "argsup", "bound"]);
    for (a, r) in cert.clip_levels.iter().zip(&cert.ratios) {
        ctx.check(format!("{prefix}ratio below bound at a={a}"), r.sup_ratio <= r.bound);
        t.push(vec![num(*a), num(r.sup_ratio), num(r.argsup), num(r.bound)]);
    }
    ctx.put(&format!("{prefix}certificate"), &cert);
    ctx.table = Some(t);
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteEntry {
    pub file: String,
    pub name: String,
    pub experiment: Experiment,
    pub pass: bool,
    pub failed_checks: Vec<String>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub runs: Vec<SuiteEntry>,
    pub failed: Vec<String>,
    pub pass: bool,
}

/// Resolves a config-relative output path.
pub fn resolve_output(config_path: &Path, out: &Path) -> PathBuf {
    if out.is_absolute() {
        out.to_path_buf()
    } else {
        config_path.parent().unwrap_or(Path::new(".")).join(out)
    }
}

/// Loads and validates every `*.json` config in `dir` (in filename order),
/// then runs them and writes each one's report to its configured output.
pub fn run_suite(dir: &Path) -> Result<SuiteReport, RunError> {
    let io = |source| RunError::Io {
        path: dir.to_path_buf(),
        source,
    };
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(io)?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()
        .map_err(io)?;
    files.retain(|p| p.extension().is_some_and(|e| e == "json") && p.is_file());
    files.sort();
    if files.is_empty() {
        return Err(ConfigError::Suite(format!("{}: no *.json configs", dir.display())).into());
    }
    let mut configs = Vec::with_capacity(files.len());
    for f in &files {
        let cfg = load_config(f)?;
        cfg.validate().map_err(|e| ConfigError::Suite(format!("{}: {e}", f.display())))?;
        configs.push(cfg);
    }

    let mut runs = Vec::with_capacity(files.len());
    for (f, cfg) in files.iter().zip(&configs) {
        let file = f.file_name().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
        let exp = cfg.experiment.expect("validated");
        match run_config(cfg) {
            Ok(report) => {
                if let Some(out) = &cfg.output {
                    let bytes = report.render(cfg.format.unwrap_or_default());
                    write_atomic(&resolve_output(f, out), &bytes)?;
                }
                runs.push(SuiteEntry {
                    file,
                    name: report.name.clone(),
                    experiment: exp,
                    pass: report.pass,
                    failed_checks: report.failed_checks(),
                    error: None,
                });
            }
            Err(e @ RunError::Io { .. }) => return Err(e),
            Err(e) => runs.push(SuiteEntry {
                file,
                name: cfg.label(),
                experiment: exp,
                pass: false,
                failed_checks: Vec::new(),
                error: Some(e.to_string()),
            }),
        }
    }
    let failed: Vec<String> = runs
        .iter()
        .flat_map(|r| {
            let mut v: Vec<String> = r.failed_checks.iter().map(|c| format!("{}: {c}", r.file)).collect();
            if let Some(e) = &r.error {
                v.push(format!("{}: {e}", r.file));
            }
            v
        })
        .collect();
    Ok(SuiteReport {
        pass: runs.iter().all(|r| r.pass),
        runs,
        failed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    fn cfg(text: &str) -> ExperimentConfig {
        parse_config(text, Path::new("t.json")).unwrap()
    }

    #[test]
    fn solve_echoes_solution() {
        let r = run_config(&cfg(r#"{"experiment":"solve","set":{"kind":"box","lo":[-1],"hi":[1]},"x":[5]}"#)).unwrap();
        assert!(r.pass);
        assert_eq!(r.results["solution"]["point"], json!([1.0]));
        let csv = String::from_utf8(r.render(Format::Csv)).unwrap();
        assert_eq!(csv, "index,value\n0,1\n");
    }

    #[test]
    fn cstar_certificate_passes() {
        let r = run_config(&cfg(r#"{"experiment":"cstar"}"#)).unwrap();
        assert!(r.pass, "{:?}", r.checks);
        assert!(r.results["certificate"]["cstar_lower"].as_f64().unwrap() >= CSTAR_TARGET);
    }

    #[test]
    fn identical_configs_render_identically() {
        let text = r#"{"experiment":"risk","set":{"kind":"box","lo":[-1,-1],"hi":[1,1]},"theta":[0.5,0],"seed":11,"reps":300}"#;
        let a = run_config(&cfg(text)).unwrap().render(Format::Json);
        let b = run_config(&cfg(text)).unwrap().render(Format::Json);
        assert_eq!(a, b);
    }

    #[test]
    fn seed_is_hashed_with_name() {
        let a = r#"{"experiment":"risk","estimator":{"kind":"identity"},"theta":[0],"seed":1,"reps":50,"name":"a"}"#;
        let b = r#"{"experiment":"risk","estimator":{"kind":"identity"},"theta":[0],"seed":1,"reps":50,"name":"b"}"#;
        let ra = run_config(&cfg(a)).unwrap();
        let rb = run_config(&cfg(b)).unwrap();
        assert_ne!(ra.results["risk"]["mean_sq_loss"], rb.results["risk"]["mean_sq_loss"]);
    }

    #[test]
    fn invalid_inputs_exit_two() {
        let e = run_config(&cfg(r#"{"experiment":"width","set":{"kind":"full_space","dim":1},"theta":[0],"seed":1}"#))
            .unwrap_err();
        assert_eq!(e.exit_code(), 2);
        let e = run_config(&cfg(
            r#"{"experiment":"width","set":{"kind":"box","lo":[0],"hi":[1]},"theta":[3],"tgrid":[0,1],"seed":1}"#,
        ))
        .unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }
}
