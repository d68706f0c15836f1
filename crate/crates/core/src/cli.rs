//! The `sos` command line: argument parsing, config files and dispatch.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::coupling::couple;
use crate::dynamics::gillespie::simulate;
use crate::dynamics::rng::RngSpec;
use crate::error::{Result, SosError};
use crate::experiments::coupling::coupling_fidelity;
use crate::experiments::exit::{exit_time_scaling, exit_times, ExitScalingConfig};
use crate::experiments::gap::{gap_scaling, GapScalingConfig};
use crate::experiments::output::{report_path, write_csv, write_json};
use crate::experiments::rn::radon_nikodym_bound;
use crate::experiments::stats::censored_median;
use crate::model::catalog::PotentialCatalog;
use crate::model::config::Configuration;
use crate::model::enumerate::partition_function;
use crate::model::params::{MeasureKind, ModelParams};
use crate::spectral::eigen::spectral_gap;
use crate::spectral::generator::build_generator;
use crate::spectral::gradient::{derivative_identity, ratio_bounds, variance_decomposition, GradientTables};
use crate::spectral::killed::KilledOperator;

/// Pass band for the fitted exponent of the median exit time in `L`.
pub const EXIT_SLOPE_BAND: (f64, f64) = (2.3, 3.7);

#[derive(Parser, Debug)]
#[command(name = "sos", version, about = "SOS interface dynamics with long-range potentials")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Catalog validation and invariant checks on tiny instances.
    Check(Flags),
    /// One trajectory of the constrained (or auxiliary) dynamics.
    Simulate(Flags),
    /// Exit times from A for starts drawn from the measure conditioned on B.
    ExitTime(Flags),
    /// One run of the basic coupling from the flat profile.
    Couple(Flags),
    /// Spectral gap of the generator.
    Gap(Flags),
    /// Dirichlet spectrum and mean exit time of the generator killed outside A.
    Killed(Flags),
    /// Variance and derivative identities plus conditional ratio bounds.
    Identities(Flags),
    /// Median exit time against L.
    ScalingExit(Flags),
    /// Normalized gap of the auxiliary generator over an (L, M) grid.
    ScalingGap(Flags),
    /// Decoupling probability per unit length and time against L.
    CouplingFidelity(Flags),
    /// Density of the conditioned box measure against the auxiliary measure.
    RnBound(Flags),
}

impl Command {
    fn split(self) -> (&'static str, Flags) {
        match self {
            Command::Check(f) => ("check", f),
            Command::Simulate(f) => ("simulate", f),
            Command::ExitTime(f) => ("exit-time", f),
            Command::Couple(f) => ("couple", f),
            Command::Gap(f) => ("gap", f),
            Command::Killed(f) => ("killed", f),
            Command::Identities(f) => ("identities", f),
            Command::ScalingExit(f) => ("scaling-exit", f),
            Command::ScalingGap(f) => ("scaling-gap", f),
            Command::CouplingFidelity(f) => ("coupling-fidelity", f),
            Command::RnBound(f) => ("rn-bound", f),
        }
    }
}

/// Flags shared by every subcommand. Each may also come from `--config`.
#[derive(Args, Debug, Default, Clone, Deserialize)]
#[command(allow_negative_numbers = true)]
#[serde(default)]
struct Flags {
    /// Number of columns.
    #[arg(long = "L")]
    #[serde(rename = "L")]
    len: Option<usize>,
    /// Height bound of the box.
    #[arg(long = "M")]
    #[serde(rename = "M")]
    m: Option<u32>,
    #[arg(long)]
    beta: Option<f64>,
    /// Region A has height floor((1 - eps) L / 2).
    #[arg(long)]
    eps: Option<f64>,
    /// Region B has height floor(alpha L).
    #[arg(long)]
    alpha: Option<f64>,
    /// Truncation of the first gradient coordinate for the auxiliary measure.
    #[arg(long = "R")]
    #[serde(rename = "R")]
    r: Option<u32>,
    /// Zero long-range potential.
    #[arg(long)]
    #[serde(default)]
    phi0: bool,
    /// Potential catalog (JSON).
    #[arg(long)]
    catalog: Option<PathBuf>,
    /// Use the auxiliary measure instead of the constrained one.
    #[arg(long)]
    #[serde(default)]
    aux: bool,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    replicas: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Time window of the coupling-fidelity estimate.
    #[arg(long)]
    t: Option<f64>,
    /// Lengths for the scaling harnesses, comma separated.
    #[arg(long = "Ls", value_delimiter = ',')]
    #[serde(rename = "Ls")]
    lens: Option<Vec<usize>>,
    /// Box sizes for the gap grid, comma separated.
    #[arg(long = "Ms", value_delimiter = ',')]
    #[serde(rename = "Ms")]
    ms: Option<Vec<u32>>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON config file; flags on the command line take precedence.
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
}

impl Flags {
    fn or(self, file: Flags) -> Flags {
        Flags {
            len: self.len.or(file.len),
            m: self.m.or(file.m),
            beta: self.beta.or(file.beta),
            eps: self.eps.or(file.eps),
            alpha: self.alpha.or(file.alpha),
            r: self.r.or(file.r),
            phi0: self.phi0 || file.phi0,
            catalog: self.catalog.or(file.catalog),
            aux: self.aux || file.aux,
            horizon: self.horizon.or(file.horizon),
            replicas: self.replicas.or(file.replicas),
            seed: self.seed.or(file.seed),
            t: self.t.or(file.t),
            lens: self.lens.or(file.lens),
            ms: self.ms.or(file.ms),
            out: self.out.or(file.out),
            config: self.config,
        }
    }
}

/// A fully resolved run. Its JSON form is echoed at the top of every output
/// file and is accepted back by `--config`; the output directory is left
/// out so that a run writes the same bytes wherever it is pointed.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub command: String,
    #[serde(rename = "L")]
    pub len: usize,
    #[serde(rename = "M")]
    pub m: u32,
    pub beta: f64,
    pub eps: f64,
    pub alpha: f64,
    #[serde(rename = "R")]
    pub r: u32,
    pub phi0: bool,
    pub catalog: Option<PathBuf>,
    pub aux: bool,
    pub horizon: f64,
    pub replicas: usize,
    pub seed: u64,
    pub t: f64,
    #[serde(rename = "Ls")]
    pub lens: Vec<usize>,
    #[serde(rename = "Ms")]
    pub ms: Vec<u32>,
    #[serde(skip)]
    pub out: PathBuf,
    #[serde(skip)]
    catalog_data: Arc<PotentialCatalog>,
}

fn invalid(field: &'static str, reason: impl Into<String>) -> SosError {
    SosError::InvalidParam { field, reason: reason.into() }
}

impl RunConfig {
    fn resolve(command: &str, f: Flags) -> Result<Self> {
        let (beta, lens, replicas, horizon) = match command {
            "scaling-exit" => (3.0, vec![8, 12, 16, 24], 200, 0.0),
            "scaling-gap" => (2.0, (2..=6).collect(), 0, 0.0),
            "coupling-fidelity" => (1.0, vec![8, 12, 16], 2000, 0.0),
            "exit-time" => (2.0, vec![], 1000, 1e7),
            _ => (1.0, vec![], 1000, 100.0),
        };
        if f.phi0 && f.catalog.is_some() {
            return Err(invalid("catalog", "--phi0 and --catalog are exclusive"));
        }
        let catalog_data = match &f.catalog {
            Some(path) => Arc::new(PotentialCatalog::load(path)?),
            None => Arc::new(PotentialCatalog::empty()),
        };
        let cfg = RunConfig {
            command: command.to_string(),
            len: f.len.unwrap_or(4),
            m: f.m.unwrap_or(2),
            beta: f.beta.unwrap_or(beta),
            eps: f.eps.unwrap_or(0.1),
            alpha: f.alpha.unwrap_or(0.2),
            r: f.r.unwrap_or(4),
            phi0: f.phi0,
            catalog: f.catalog,
            aux: f.aux,
            horizon: f.horizon.unwrap_or(horizon),
            replicas: f.replicas.unwrap_or(replicas),
            seed: f.seed.unwrap_or(1),
            t: f.t.unwrap_or(20.0),
            lens: f.lens.unwrap_or(lens),
            ms: f.ms.unwrap_or_else(|| vec![1, 2, 3]),
            out: f.out.unwrap_or_else(|| PathBuf::from("sos-out")),
            catalog_data,
        };
        if !(cfg.horizon >= 0.0) || !cfg.horizon.is_finite() {
            return Err(invalid("horizon", format!("must be finite and >= 0, got {}", cfg.horizon)));
        }
        if !(cfg.t > 0.0) {
            return Err(invalid("t", format!("must be > 0, got {}", cfg.t)));
        }
        if cfg.replicas == 0 && cfg.command != "scaling-gap" {
            return Err(invalid("replicas", "must be positive"));
        }
        if cfg.lens.contains(&0) {
            return Err(invalid("Ls", "lengths must be positive"));
        }
        cfg.params()?;
        Ok(cfg)
    }

    /// Parameters at the configured `L` and `M`.
    pub fn params(&self) -> Result<ModelParams> {
        let kind = if self.aux { MeasureKind::Auxiliary } else { MeasureKind::Constrained };
        self.params_at(self.len, self.m, kind)
    }

    fn params_at(&self, len: usize, m: u32, kind: MeasureKind) -> Result<ModelParams> {
        let p = match kind {
            MeasureKind::Constrained => ModelParams::constrained(len, m, self.beta)?,
            MeasureKind::Auxiliary => ModelParams::auxiliary(len, m, self.beta)?,
        };
        p.with_shared_catalog(self.catalog_data.clone()).with_region(self.eps, self.alpha)
    }

    pub fn echo(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("run config serializes");
        let doc = if self.catalog_data.is_empty() {
            serde_json::Value::Null
        } else {
            serde_json::from_str(&self.catalog_data.to_json_string()).expect("catalog JSON reparses")
        };
        v["catalog_doc"] = doc;
        v
    }
}

/// Reads flags from a JSON file. Report files are accepted too: their
/// `config` object, or the config on their first line, is used.
fn read_config(path: &Path) -> Result<Flags> {
    let text = fs::read_to_string(path)?;
    let value: serde_json::Value = match serde_json::from_str(&text) {
        Ok(v) => v,
        Err(e) => {
            let first = text.lines().next().unwrap_or("");
            let first = first.strip_prefix("# config: ").unwrap_or(first);
            serde_json::from_str(first).map_err(|_| SosError::Json(e))?
        }
    };
    let value = match value.get("config") {
        Some(c) => c.clone(),
        None => value,
    };
    Ok(serde_json::from_value(value)?)
}

struct Verdict {
    passed: bool,
    summary: String,
    failures: Vec<String>,
}

impl Verdict {
    fn new(passed: bool, summary: String) -> Self {
        Verdict { passed, summary, failures: Vec::new() }
    }
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit status: 0 pass, 1 verdict failure, 2 usage or config error.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let (name, flags) = cli.command.split();
    let cfg = match flags.config.clone().map(|p| read_config(&p)).transpose() {
        Ok(file) => RunConfig::resolve(name, flags.or(file.unwrap_or_default())),
        Err(e) => Err(e),
    };
    let cfg = match cfg {
        Ok(c) => c,
        Err(e) => {
            eprintln!("sos {name}: {e}");
            return 2;
        }
    };
    match dispatch(&cfg) {
        Ok(v) => {
            println!("{name}: {} {}", if v.passed { "PASS" } else { "FAIL" }, v.summary);
            for f in &v.failures {
                eprintln!("  failed: {f}");
            }
            if v.passed {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("sos {name}: {e}");
            match e {
                SosError::NotReversible { .. } => 1,
                _ => 2,
            }
        }
    }
}

fn dispatch(cfg: &RunConfig) -> Result<Verdict> {
    match cfg.command.as_str() {
        "check" => check(cfg),
        "simulate" => run_simulate(cfg),
        "exit-time" => exit_time(cfg),
        "couple" => run_couple(cfg),
        "gap" => gap(cfg),
        "killed" => killed(cfg),
        "identities" => identities(cfg),
        "scaling-exit" => scaling_exit(cfg),
        "scaling-gap" => scaling_gap(cfg),
        "coupling-fidelity" => fidelity(cfg),
        "rn-bound" => rn_bound(cfg),
        other => unreachable!("unknown command {other}"),
    }
}

#[derive(Serialize)]
struct CheckRow {
    #[serde(rename = "L")]
    len: usize,
    #[serde(rename = "M")]
    m: u32,
    kind: MeasureKind,
    states: usize,
    balance_defect: f64,
    variance_residual: Option<f64>,
    passed: bool,
}

fn check(cfg: &RunConfig) -> Result<Verdict> {
    let decay = cfg.catalog_data.validate();
    let mut failures = Vec::new();
    if !decay.passed() {
        failures.push(format!("catalog decay condition fails at k = {}", decay.first_failure.unwrap_or(0)));
    }
    let mut rng = RngSpec::new(cfg.seed, 0).rng();
    let mut rows = Vec::new();
    for len in 1..=3 {
        for m in 1..=2 {
            for kind in [MeasureKind::Constrained, MeasureKind::Auxiliary] {
                let p = cfg.params_at(len, m, kind)?;
                let gen = build_generator(&p, 2)?;
                let (defect, _, _) = gen.reversibility_defect();
                let variance_residual = if kind == MeasureKind::Auxiliary {
                    let tables = GradientTables::new(&p, 2)?;
                    let worst = (0..10)
                        .map(|_| {
                            let f: Vec<f64> = (0..tables.space.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                            variance_decomposition(&tables, &f).residual
                        })
                        .fold(0.0, f64::max);
                    Some(worst)
                } else {
                    None
                };
                let passed = defect < 1e-12 && variance_residual.is_none_or(|r| r < 1e-10);
                if !passed {
                    failures.push(format!("L={len} M={m} {kind:?}: balance {defect:.2e}, variance {variance_residual:?}"));
                }
                rows.push(CheckRow { len, m, kind, states: gen.n(), balance_defect: defect, variance_residual, passed });
            }
        }
    }
    let echo = cfg.echo();
    write_json(&cfg.out, "check", &echo, &serde_json::json!({"decay": decay, "instances": rows}))?;
    let mut v = Verdict::new(failures.is_empty(), format!("{} instances, catalog decay {}", rows.len(), if decay.passed() { "ok" } else { "violated" }));
    v.failures = failures;
    Ok(v)
}

fn flat(cfg: &RunConfig) -> Configuration {
    Configuration::flat(cfg.len, 0)
}

fn run_simulate(cfg: &RunConfig) -> Result<Verdict> {
    let p = cfg.params()?;
    let tr = simulate(&flat(cfg), cfg.horizon, &p, RngSpec::new(cfg.seed, 0))?;
    let echo = cfg.echo();
    fs::create_dir_all(&cfg.out)?;
    let path = report_path(&cfg.out, "trajectory", &echo, "jsonl");
    let mut out = std::io::BufWriter::new(fs::File::create(&path)?);
    writeln!(out, "{}", serde_json::json!({ "config": echo }))?;
    tr.write_jsonl(&p, &mut out)?;
    out.flush()?;
    Ok(Verdict::new(true, format!("{} jumps to t = {}, end {} -> {}", tr.events.len(), cfg.horizon, tr.end, path.display())))
}

fn exit_time(cfg: &RunConfig) -> Result<Verdict> {
    let p = cfg.params()?;
    let (samples, diag) = exit_times(&p, cfg.replicas, cfg.seed, cfg.horizon)?;
    let times: Vec<f64> = samples.iter().map(|s| s.time).collect();
    let censored: Vec<bool> = samples.iter().map(|s| s.censored).collect();
    let med = censored_median(&times, &censored);
    let echo = cfg.echo();
    write_csv(&cfg.out, "exit-times", &echo, &samples)?;
    let n_cens = censored.iter().filter(|c| **c).count();
    write_json(&cfg.out, "exit-time", &echo, &serde_json::json!({"median": med, "censored": n_cens, "sampler": diag}))?;
    Ok(match med {
        Some(m) => Verdict::new(true, format!("median {:.4e} [{:.4e}, {:.4e}], {n_cens} censored", m.median, m.lower, m.upper)),
        None => Verdict::new(false, format!("median censored at horizon {} ({n_cens}/{})", cfg.horizon, cfg.replicas)),
    })
}

fn run_couple(cfg: &RunConfig) -> Result<Verdict> {
    let p = cfg.params()?;
    let tr = couple(&flat(cfg), cfg.horizon, &p, RngSpec::new(cfg.seed, 0))?;
    let echo = cfg.echo();
    fs::create_dir_all(&cfg.out)?;
    let path = report_path(&cfg.out, "coupling", &echo, "jsonl");
    let mut out = std::io::BufWriter::new(fs::File::create(&path)?);
    writeln!(out, "{}", serde_json::json!({ "config": echo }))?;
    tr.write_jsonl(&p, &mut out)?;
    out.flush()?;
    Ok(Verdict::new(true, format!("sigma {:?}, tau {:?}, tau_bar {:?}, {} marks", tr.sigma, tr.tau, tr.tau_bar, tr.marks)))
}

fn gap(cfg: &RunConfig) -> Result<Verdict> {
    let p = cfg.params()?;
    let gen = build_generator(&p, cfg.r)?;
    let (defect, _, _) = gen.reversibility_defect();
    let rep = spectral_gap(&gen)?;
    write_json(&cfg.out, "gap", &cfg.echo(), &serde_json::json!({"gap": rep, "balance_defect": defect}))?;
    Ok(Verdict::new(defect < 1e-12, format!("lambda_1 = {:.12} ({:?}, n = {})", rep.gap, rep.method, rep.n)))
}

fn killed(cfg: &RunConfig) -> Result<Verdict> {
    let p = cfg.params()?;
    let k = KilledOperator::on_region_a(&p)?;
    let bottom = k.bottom_eigenvalue()?;
    let gap = k.variational_gap()?;
    let start = k.index_of(&flat(cfg)).expect("flat profile lies in A");
    let mean = k.mean_exit_times()?[start];
    write_json(
        &cfg.out,
        "killed",
        &cfg.echo(),
        &serde_json::json!({"states": k.n(), "bottom_eigenvalue": bottom, "variational_gap": gap, "mean_exit_from_flat": mean}),
    )?;
    Ok(Verdict::new(bottom > 0.0, format!("lambda_A = {bottom:.6e}, variational gap {gap:.6e}, E[tau | flat] = {mean:.6e}")))
}

fn identities(cfg: &RunConfig) -> Result<Verdict> {
    let p = cfg.params_at(cfg.len, cfg.m, MeasureKind::Auxiliary)?;
    let tables = GradientTables::new(&p, cfg.r)?;
    let mut rng = RngSpec::new(cfg.seed, 0).rng();
    let (mut variance, mut derivative) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let f: Vec<f64> = (0..tables.space.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        variance = variance.max(variance_decomposition(&tables, &f).residual);
        for i in 2..=cfg.len {
            derivative = derivative.max(derivative_identity(&tables, &f, i)?);
        }
    }
    let ratios = ratio_bounds(&tables, cfg.beta, cfg.catalog_data.decay_mass());
    write_json(
        &cfg.out,
        "identities",
        &cfg.echo(),
        &serde_json::json!({"variance_residual": variance, "derivative_residual": derivative, "ratios": ratios}),
    )?;
    let mut v = Verdict::new(
        variance < 1e-10 && derivative < 1e-10 && ratios.passed(),
        format!(
            "variance {variance:.2e}, derivative {derivative:.2e}, ratios {}/{} inside (min slack {:.3e})",
            ratios.checked - ratios.violations.len(),
            ratios.checked,
            ratios.min_slack
        ),
    );
    v.failures = ratios.violations.iter().map(|c| format!("{c:?}")).collect();
    Ok(v)
}

fn scaling_exit(cfg: &RunConfig) -> Result<Verdict> {
    let sc = ExitScalingConfig {
        lens: cfg.lens.clone(),
        beta: cfg.beta,
        eps: cfg.eps,
        alpha: cfg.alpha,
        replicas: cfg.replicas,
        seed: cfg.seed,
        catalog: cfg.catalog_data.clone(),
        ..ExitScalingConfig::default()
    };
    let rep = exit_time_scaling(&sc)?;
    let echo = cfg.echo();
    write_csv(&cfg.out, "scaling-exit", &echo, &rep.points)?;
    write_json(&cfg.out, "scaling-exit", &echo, &rep)?;
    let (lo, hi) = EXIT_SLOPE_BAND;
    let summary = match &rep.fit {
        Some(f) => format!("slope {:.3} [{:.3}, {:.3}] over {} lengths, band [{lo}, {hi}]", f.slope, f.slope_ci.0, f.slope_ci.1, f.n),
        None => "no fit: too few uncensored medians".into(),
    };
    let mut v = Verdict::new(rep.slope_within(lo, hi), summary);
    v.failures = rep.excluded.iter().map(|l| format!("L = {l}: median censored")).collect();
    Ok(v)
}

fn scaling_gap(cfg: &RunConfig) -> Result<Verdict> {
    let sc = GapScalingConfig {
        grid: cfg.lens.iter().flat_map(|&l| cfg.ms.iter().map(move |&m| (l, m))).collect(),
        beta: cfg.beta,
        r: cfg.r,
        catalog: cfg.catalog_data.clone(),
        ..GapScalingConfig::default()
    };
    let rep = gap_scaling(&sc)?;
    let echo = cfg.echo();
    write_csv(&cfg.out, "scaling-gap", &echo, &rep.points)?;
    write_json(&cfg.out, "scaling-gap", &echo, &rep)?;
    let mut v = Verdict::new(
        rep.within_decade,
        format!("gap L max(L, M^2) in [{:.4}, {:.4}] over {} points", rep.min_normalized, rep.max_normalized, rep.points.len()),
    );
    v.failures = rep
        .points
        .iter()
        .filter(|p| p.truncation_flagged)
        .map(|p| format!("L = {} M = {}: truncation tail {:.2e}", p.len, p.m, p.tail_increment))
        .collect();
    Ok(v)
}

fn fidelity(cfg: &RunConfig) -> Result<Verdict> {
    let mut reps = Vec::new();
    for &len in &cfg.lens {
        let p = cfg.params_at(len, ModelParams::half_box(len), MeasureKind::Constrained)?;
        reps.push(coupling_fidelity(&p, cfg.t, cfg.replicas, cfg.seed, false)?);
    }
    let echo = cfg.echo();
    write_json(&cfg.out, "coupling-fidelity", &echo, &reps)?;
    write_csv(
        &cfg.out,
        "coupling-fidelity",
        &echo,
        &reps
            .iter()
            .map(|r| (r.len, r.t, r.decoupling.successes, r.decoupling.trials, r.normalized, r.normalized_upper))
            .collect::<Vec<_>>(),
    )?;
    let decreasing = reps.windows(2).all(|w| w[1].normalized < w[0].normalized);
    let table: Vec<String> = reps.iter().map(|r| format!("L={}:{:.3e}", r.len, r.normalized)).collect();
    Ok(Verdict::new(decreasing, format!("decoupling/(L t) {}", table.join(" "))))
}

fn rn_bound(cfg: &RunConfig) -> Result<Verdict> {
    let p = cfg.params_at(cfg.len, cfg.m, MeasureKind::Constrained)?;
    let rep = radon_nikodym_bound(&p, cfg.r)?;
    let aux = p.with_kind(MeasureKind::Auxiliary)?;
    let tail = partition_function(&aux, cfg.r)?.tail_increment;
    write_json(&cfg.out, "rn-bound", &cfg.echo(), &rep)?;
    Ok(Verdict::new(
        rep.passed,
        format!("sup ratio {:.4} <= bound {:.4} (w_hat {:.3e}, tail {:?})", rep.sup_ratio, rep.bound, rep.w_hat, tail),
    ))
}
