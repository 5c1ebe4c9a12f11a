//! Command-line front end: configure a measure, run simulations or
//! verification scenarios, and emit CSV/JSON artifacts with a metadata
//! sidecar. Everything is deterministic under a fixed seed; the only
//! environment variable consulted is `COALSCOPE_THREADS` (default
//! worker cap, overridden by `--threads`).

use std::fs;
use std::io::Write as IoWrite;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::chain::{sample_jump_chain_table, tree_statistics};
use crate::error::{CoalError, Result};
use crate::limits::{self, centering_scaling, ScalingScenario};
use crate::measures::{self, CoalescentMeasure, Family};
use crate::rng::replicate_rng;
use crate::verify::{self, LengthMode, Tolerances, VerificationReport};
use rayon::prelude::*;

/// Default master seed. Fixed (not time-based) so every artifact is
/// reproducible unless the caller explicitly passes `--seed`.
pub const DEFAULT_SEED: u64 = 0xC0A15C0DE;

/// Λ-coalescent simulation and verification toolkit.
#[derive(Debug, Parser)]
#[command(name = "coalscope", version, about)]
pub struct Cli {
    /// JSON config file; explicit command-line flags take precedence
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// worker thread cap (default: COALSCOPE_THREADS, else all cores)
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample jump-chain replicates and write one CSV row per (replicate, t)
    Simulate(SimulateArgs),
    /// Run a verification scenario; exit 0 iff every check passes
    Verify(VerifyArgs),
    /// Emit deterministic plot-ready tables
    Tables {
        #[command(subcommand)]
        table: TableCommand,
    },
}

/// Measure selection shared by all subcommands.
#[derive(Debug, Clone, Args, Default)]
pub struct MeasureArgs {
    /// measure family
    #[arg(long, value_enum)]
    pub family: Option<FamilyArg>,
    /// stability exponent alpha in (1, 2) (beta and general families)
    #[arg(long)]
    pub alpha: Option<f64>,
    /// tail constant c0 (general family; beta fixes c0 = 1/(alpha Gamma(2-alpha) Gamma(alpha)))
    #[arg(long)]
    pub c0: Option<f64>,
    /// tail remainder exponent zeta; informational echo only, the
    /// built-in families fix their own zeta
    #[arg(long)]
    pub zeta: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyArg {
    Kingman,
    Beta,
    /// Bolthausen-Sznitman (uniform Lambda)
    Bs,
    /// power-law tail rho(t) = c0 (t^-alpha - 1)
    General,
    /// Lambda(dx) = 2x dx (finite total coalescence rate)
    Linear,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub measure: MeasureArgs,
    /// sample size (initial number of blocks)
    #[arg(long)]
    pub n: Option<u64>,
    /// number of replicates
    #[arg(long)]
    pub reps: Option<u64>,
    /// time grid, strictly increasing in (0, gamma]
    #[arg(long = "t", value_delimiter = ',')]
    pub t_grid: Option<Vec<f64>>,
    /// mutation rate theta >= 0
    #[arg(long)]
    pub theta: Option<f64>,
    /// master seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// output data file
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// data file format
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    /// scenario to verify
    #[arg(value_enum)]
    pub scenario: Scenario,
    #[command(flatten)]
    pub measure: MeasureArgs,
    /// sample sizes
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<u64>>,
    /// replicates per side
    #[arg(long)]
    pub reps: Option<u64>,
    /// grid time in (0, gamma) for length/mutation scenarios
    #[arg(long)]
    pub t: Option<f64>,
    /// mutation rate
    #[arg(long)]
    pub theta: Option<f64>,
    /// master seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// which length statistic the length scenario targets
    #[arg(long, value_enum, default_value = "l")]
    pub statistic: StatisticArg,
    /// report file (JSON); written regardless of pass/fail
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    Tau,
    Length,
    Mutations,
    Kingman,
    Bs,
    Mohle,
    Approx,
    Rates,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StatisticArg {
    L,
    Lhat,
}

#[derive(Debug, Clone, Subcommand)]
pub enum TableCommand {
    /// total rates g_n and their ratio to C0 Gamma(2-alpha) n^alpha
    Gn {
        #[command(flatten)]
        measure: MeasureArgs,
        #[arg(long, value_delimiter = ',')]
        n: Option<Vec<u64>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// first-jump pmf P(X_n = l) for one n
    Pmf {
        #[command(flatten)]
        measure: MeasureArgs,
        #[arg(long)]
        n: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// limit jump law: pmf and tail of X up to kmax
    Limit {
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, default_value_t = 30)]
        kmax: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// deterministic profiles (t, v(t), a(t), kappa(t)) on a grid
    Vat {
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, default_value_t = 100)]
        points: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Optional JSON config file; any field a flag did not set is taken
/// from here before defaults apply.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub family: Option<FamilyArg>,
    pub alpha: Option<f64>,
    pub c0: Option<f64>,
    pub zeta: Option<f64>,
    pub theta: Option<f64>,
    pub n: Option<Vec<u64>>,
    pub reps: Option<u64>,
    pub t: Option<Vec<f64>>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<FormatArg>,
    pub threads: Option<usize>,
}

/// The fully merged configuration echoed into every metadata sidecar.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub family: FamilyArg,
    pub alpha: Option<f64>,
    pub c0: Option<f64>,
    pub zeta: Option<f64>,
    pub theta: f64,
    pub n: Vec<u64>,
    pub reps: u64,
    pub t_grid: Vec<f64>,
    pub seed: u64,
    pub out_path: PathBuf,
    pub format: FormatArg,
    pub threads: Option<usize>,
}

impl RunConfig {
    fn measure(&self) -> Result<CoalescentMeasure> {
        build_measure(self.family, self.alpha, self.c0)
    }
}

fn build_measure(family: FamilyArg, alpha: Option<f64>, c0: Option<f64>) -> Result<CoalescentMeasure> {
    match family {
        FamilyArg::Kingman => Ok(CoalescentMeasure::kingman()),
        FamilyArg::Bs => Ok(CoalescentMeasure::bolthausen_sznitman()),
        FamilyArg::Linear => CoalescentMeasure::beta_distribution(2.0, 1.0),
        FamilyArg::Beta => {
            let alpha = alpha
                .ok_or_else(|| CoalError::argument("--alpha is required for --family beta"))?;
            CoalescentMeasure::beta(alpha)
        }
        FamilyArg::General => {
            let alpha = alpha
                .ok_or_else(|| CoalError::argument("--alpha is required for --family general"))?;
            let c0 = c0
                .ok_or_else(|| CoalError::argument("--c0 is required for --family general"))?;
            CoalescentMeasure::power_law(alpha, c0)
        }
    }
}

fn load_file_config(path: Option<&Path>) -> Result<FileConfig> {
    match path {
        None => Ok(FileConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p)?;
            Ok(serde_json::from_str(&text)?)
        }
    }
}

fn init_threads(cli_threads: Option<usize>, file_threads: Option<usize>) -> Option<usize> {
    let env_threads = std::env::var("COALSCOPE_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok());
    let threads = cli_threads.or(file_threads).or(env_threads);
    if let Some(k) = threads {
        // ignore the error if a global pool already exists (tests)
        let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
    }
    threads
}

/// Metadata written next to every data file (`<out>.meta.json`).
#[derive(Debug, Serialize)]
struct Sidecar<'a> {
    config: &'a RunConfig,
    version: &'a str,
    wall_time_seconds: f64,
}

fn write_sidecar(config: &RunConfig, started: Instant) -> Result<()> {
    let sidecar = Sidecar {
        config,
        version: env!("CARGO_PKG_VERSION"),
        wall_time_seconds: started.elapsed().as_secs_f64(),
    };
    let mut path = config.out_path.clone().into_os_string();
    path.push(".meta.json");
    fs::write(path, serde_json::to_string_pretty(&sidecar)?)?;
    Ok(())
}

/// 17-significant-digit decimal rendering used in all CSV output.
fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

const RUN_RECORD_HEADER: [&str; 12] = [
    "replicate_index",
    "n",
    "alpha",
    "t",
    "tau_n",
    "L_t",
    "L_tilde_t",
    "L_hat_t",
    "K_t",
    "L_total",
    "T_mrca",
    "scaled_statistic",
];

/// One output row of `simulate`.
#[derive(Debug, Serialize)]
struct RunRecord {
    replicate_index: u64,
    n: u64,
    alpha: f64,
    t: f64,
    tau_n: u64,
    #[serde(rename = "L_t")]
    l_t: f64,
    #[serde(rename = "L_tilde_t")]
    l_tilde_t: f64,
    #[serde(rename = "L_hat_t")]
    l_hat_t: f64,
    #[serde(rename = "K_t")]
    k_t: f64,
    #[serde(rename = "L_total")]
    l_total: f64,
    #[serde(rename = "T_mrca")]
    t_mrca: f64,
    scaled_statistic: f64,
}

impl RunRecord {
    fn csv_fields(&self) -> Vec<String> {
        vec![
            self.replicate_index.to_string(),
            self.n.to_string(),
            fmt_f64(self.alpha),
            fmt_f64(self.t),
            self.tau_n.to_string(),
            fmt_f64(self.l_t),
            fmt_f64(self.l_tilde_t),
            fmt_f64(self.l_hat_t),
            fmt_f64(self.k_t),
            fmt_f64(self.l_total),
            fmt_f64(self.t_mrca),
            fmt_f64(self.scaled_statistic),
        ]
    }
}

fn merge_simulate(args: &SimulateArgs, file: &FileConfig, threads: Option<usize>) -> Result<RunConfig> {
    let family = args
        .measure
        .family
        .or(file.family)
        .unwrap_or(FamilyArg::Beta);
    Ok(RunConfig {
        command: "simulate".to_string(),
        family,
        alpha: args.measure.alpha.or(file.alpha),
        c0: args.measure.c0.or(file.c0),
        zeta: args.measure.zeta.or(file.zeta),
        theta: args.theta.or(file.theta).unwrap_or(0.0),
        n: vec![args.n.or_else(|| file.n.as_ref().and_then(|v| v.first().copied())).unwrap_or(1000)],
        reps: args.reps.or(file.reps).unwrap_or(100),
        t_grid: args
            .t_grid
            .clone()
            .or_else(|| file.t.clone())
            .unwrap_or_default(),
        seed: args.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
        out_path: args
            .out
            .clone()
            .or_else(|| file.out.clone())
            .unwrap_or_else(|| PathBuf::from("simulate.csv")),
        format: args.format.or(file.format).unwrap_or(FormatArg::Csv),
        threads,
    })
}

/// The scenario-dependent scaled statistic attached to each row:
/// Kingman `(L - 2 log n)/2`, Bolthausen-Sznitman `(L - a_n)/b_n`,
/// power-tail families `(L_t - a(t) n^(2-alpha))/n^(1-alpha+1/alpha)`
/// when `t` is given and `(n - tau_n/gamma)/n^(1/alpha)` otherwise.
/// NaN where no scaling is defined (e.g. the linear family).
fn scaled_statistic(
    m: &CoalescentMeasure,
    n: u64,
    t: Option<f64>,
    l_t: f64,
    l_total: f64,
    tau: u64,
) -> Result<f64> {
    match m.family() {
        Family::Kingman => {
            let (c, s) = centering_scaling(ScalingScenario::Kingman, m, n, 0.0, 0.0)?;
            Ok((l_total - c) / s)
        }
        Family::BolthausenSznitman => {
            let (c, s) = centering_scaling(ScalingScenario::Bs, m, n, 0.0, 0.0)?;
            Ok((l_total - c) / s)
        }
        _ => {
            if m.asymptotic_tail("scaled_statistic").is_err() {
                return Ok(f64::NAN);
            }
            match t {
                Some(t) if t < m.gamma() => {
                    let (c, s) = centering_scaling(ScalingScenario::L, m, n, t, 0.0)?;
                    Ok((l_t - c) / s)
                }
                _ => {
                    let (_, s) = centering_scaling(ScalingScenario::Tau, m, n, 0.0, 0.0)?;
                    Ok((n as f64 - tau as f64 / m.gamma()) / s)
                }
            }
        }
    }
}

fn cmd_simulate(config: &RunConfig) -> Result<()> {
    let started = Instant::now();
    let m = config.measure()?;
    let n = config.n[0];
    let table = m.rate_table(n)?;
    let grid = &config.t_grid;
    let theta = config.theta;
    let alpha = m.alpha();
    let rows: Vec<Vec<RunRecord>> = (0..config.reps)
        .into_par_iter()
        .map(|i| -> Result<Vec<RunRecord>> {
            let mut rng = replicate_rng(config.seed, "simulate", i);
            let path = sample_jump_chain_table(&table, n, &mut rng)?;
            let stats = tree_statistics(&table, &path, grid, theta, &mut rng)?;
            let tau = path.tau();
            if grid.is_empty() {
                let scaled = scaled_statistic(&m, n, None, f64::NAN, stats.l_total, tau)?;
                return Ok(vec![RunRecord {
                    replicate_index: i,
                    n,
                    alpha,
                    t: f64::NAN,
                    tau_n: tau,
                    l_t: f64::NAN,
                    l_tilde_t: f64::NAN,
                    l_hat_t: f64::NAN,
                    k_t: f64::NAN,
                    l_total: stats.l_total,
                    t_mrca: stats.t_mrca,
                    scaled_statistic: scaled,
                }]);
            }
            grid.iter()
                .enumerate()
                .map(|(j, &t)| {
                    let scaled =
                        scaled_statistic(&m, n, Some(t), stats.l_t[j], stats.l_total, tau)?;
                    Ok(RunRecord {
                        replicate_index: i,
                        n,
                        alpha,
                        t,
                        tau_n: tau,
                        l_t: stats.l_t[j],
                        l_tilde_t: stats.l_tilde_t[j],
                        l_hat_t: stats.l_hat_t[j],
                        k_t: stats.k_t[j] as f64,
                        l_total: stats.l_total,
                        t_mrca: stats.t_mrca,
                        scaled_statistic: scaled,
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let rows: Vec<RunRecord> = rows.into_iter().flatten().collect();
    match config.format {
        FormatArg::Csv => {
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_path(&config.out_path)?;
            w.write_record(RUN_RECORD_HEADER)?;
            for r in &rows {
                w.write_record(r.csv_fields())?;
            }
            w.flush()?;
        }
        FormatArg::Json => {
            fs::write(&config.out_path, serde_json::to_string_pretty(&rows)?)?;
        }
    }
    write_sidecar(config, started)?;
    println!(
        "simulate: {} rows -> {}",
        rows.len(),
        config.out_path.display()
    );
    Ok(())
}

fn cmd_verify(args: &VerifyArgs, file: &FileConfig, threads: Option<usize>) -> Result<bool> {
    let started = Instant::now();
    let default_family = match args.scenario {
        Scenario::Kingman => FamilyArg::Kingman,
        Scenario::Bs => FamilyArg::Bs,
        Scenario::Mohle => FamilyArg::Linear,
        _ => FamilyArg::Beta,
    };
    let family = args.measure.family.or(file.family).unwrap_or(default_family);
    let alpha = args.measure.alpha.or(file.alpha);
    let c0 = args.measure.c0.or(file.c0);
    let n_list = args
        .n
        .clone()
        .or_else(|| file.n.clone())
        .unwrap_or_else(|| vec![500, 5000]);
    if n_list.is_empty() {
        return Err(CoalError::argument("--n must list at least one sample size"));
    }
    let reps = args.reps.or(file.reps).unwrap_or(4000);
    let t = args
        .t
        .or_else(|| file.t.as_ref().and_then(|v| v.first().copied()))
        .unwrap_or(0.25);
    let theta = args.theta.or(file.theta).unwrap_or(1.0);
    let seed = args.seed.or(file.seed).unwrap_or(DEFAULT_SEED);
    let out_path = args.out.clone().or_else(|| file.out.clone()).unwrap_or_else(|| {
        PathBuf::from(format!(
            "verify-{}.json",
            format!("{:?}", args.scenario).to_lowercase()
        ))
    });
    let m = build_measure(family, alpha, c0)?;
    let tol = Tolerances::default();
    let report: VerificationReport = match args.scenario {
        Scenario::Tau => verify::verify_tau(&m, &n_list, reps, seed, &tol)?,
        Scenario::Length => {
            let mode = match args.statistic {
                StatisticArg::L => LengthMode::L,
                StatisticArg::Lhat => LengthMode::Lhat,
            };
            verify::verify_length(&m, &n_list, reps, t, seed, mode, &tol)?
        }
        Scenario::Mutations => verify::verify_mutations(&m, &n_list, reps, t, theta, seed, &tol)?,
        Scenario::Kingman => verify::verify_kingman(&n_list, reps, seed, &tol)?,
        Scenario::Bs => verify::verify_bs(&n_list, reps, seed, &tol)?,
        Scenario::Mohle => verify::verify_mohle(&m, n_list[0], reps, theta, seed, &tol)?,
        Scenario::Approx => verify::verify_approximations(&m, &n_list, reps, t, seed, &tol)?,
        Scenario::Rates => verify::verify_rates(&m, &tol)?,
    };
    fs::write(&out_path, serde_json::to_string_pretty(&report)?)?;
    let config = RunConfig {
        command: format!("verify {:?}", args.scenario).to_lowercase(),
        family,
        alpha,
        c0,
        zeta: args.measure.zeta.or(file.zeta),
        theta,
        n: n_list,
        reps,
        t_grid: vec![t],
        seed,
        out_path: out_path.clone(),
        format: FormatArg::Json,
        threads,
    };
    write_sidecar(&config, started)?;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for (name, check) in report
        .per_n
        .iter()
        .flat_map(|r| r.checks.iter().map(move |c| (&c.name, c)))
        .chain(report.global_checks.iter().map(|c| (&c.name, c)))
    {
        writeln!(
            out,
            "{} {}: value {:.6e}, target {:.6e}, tolerance {:.3e}",
            if check.pass { "PASS" } else { "FAIL" },
            name,
            check.value,
            check.target,
            check.tolerance
        )?;
    }
    writeln!(
        out,
        "{}: report -> {}",
        if report.pass { "ALL PASS" } else { "FAILED" },
        out_path.display()
    )?;
    Ok(report.pass)
}

fn write_csv_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_tables(cmd: &TableCommand, file: &FileConfig, threads: Option<usize>) -> Result<()> {
    let started = Instant::now();
    let (config, header, rows): (RunConfig, Vec<&str>, Vec<Vec<String>>) = match cmd {
        TableCommand::Gn { measure, n, out } => {
            let family = measure.family.or(file.family).unwrap_or(FamilyArg::Beta);
            let m = build_measure(family, measure.alpha.or(file.alpha), measure.c0.or(file.c0))?;
            let n_list = n.clone().or_else(|| file.n.clone()).unwrap_or_default();
            if n_list.is_empty() {
                return Err(CoalError::argument("--n must list at least one sample size"));
            }
            let ratios = m.asymptotic_tail("gn table ratio").ok().map(|_| {
                m.gn_asymptote_check(&n_list)
            });
            let ratios = match ratios {
                Some(r) => Some(r?),
                None => None,
            };
            let mut rows = Vec::new();
            for (i, &n) in n_list.iter().enumerate() {
                let g = m.total_rate(n)?;
                let ratio = ratios
                    .as_ref()
                    .map(|r| r[i].ratio)
                    .unwrap_or(f64::NAN);
                rows.push(vec![n.to_string(), fmt_f64(g), fmt_f64(ratio)]);
            }
            let out = out
                .clone()
                .or_else(|| file.out.clone())
                .unwrap_or_else(|| PathBuf::from("table-gn.csv"));
            (
                table_config("tables gn", family, measure, file, &n_list, &out, threads),
                vec!["n", "g_n", "ratio_to_c0_gamma2a_n_alpha"],
                rows,
            )
        }
        TableCommand::Pmf { measure, n, out } => {
            let family = measure.family.or(file.family).unwrap_or(FamilyArg::Beta);
            let m = build_measure(family, measure.alpha.or(file.alpha), measure.c0.or(file.c0))?;
            let n = n
                .or_else(|| file.n.as_ref().and_then(|v| v.first().copied()))
                .ok_or_else(|| CoalError::argument("--n is required for tables pmf"))?;
            let t = m.transition_table(n)?;
            let rows = t
                .pmf
                .iter()
                .enumerate()
                .map(|(i, &p)| vec![(i + 1).to_string(), fmt_f64(p)])
                .collect();
            let out = out
                .clone()
                .or_else(|| file.out.clone())
                .unwrap_or_else(|| PathBuf::from("table-pmf.csv"));
            (
                table_config("tables pmf", family, measure, file, &[n], &out, threads),
                vec!["l", "probability"],
                rows,
            )
        }
        TableCommand::Limit { alpha, kmax, out } => {
            let alpha = alpha
                .or(file.alpha)
                .ok_or_else(|| CoalError::argument("--alpha is required for tables limit"))?;
            if *kmax < 1 {
                return Err(CoalError::argument("--kmax must be at least 1"));
            }
            let mut rows = Vec::new();
            for k in 1..=*kmax {
                rows.push(vec![
                    k.to_string(),
                    fmt_f64(measures::limit_jump_pmf(alpha, k)?),
                    fmt_f64(measures::limit_jump_tail(alpha, k)?),
                ]);
            }
            let out = out
                .clone()
                .or_else(|| file.out.clone())
                .unwrap_or_else(|| PathBuf::from("table-limit.csv"));
            let measure = MeasureArgs {
                family: Some(FamilyArg::Beta),
                alpha: Some(alpha),
                ..Default::default()
            };
            (
                table_config("tables limit", FamilyArg::Beta, &measure, file, &[*kmax], &out, threads),
                vec!["k", "pmf", "tail"],
                rows,
            )
        }
        TableCommand::Vat { alpha, points, out } => {
            let alpha = alpha
                .or(file.alpha)
                .ok_or_else(|| CoalError::argument("--alpha is required for tables vat"))?;
            if *points < 1 {
                return Err(CoalError::argument("--points must be at least 1"));
            }
            let m = CoalescentMeasure::beta(alpha)?;
            let gamma = alpha - 1.0;
            let mut rows = Vec::new();
            for i in 1..=*points {
                let t = gamma * i as f64 / (*points + 1) as f64;
                rows.push(vec![
                    fmt_f64(t),
                    fmt_f64(limits::v_of_t(alpha, t)?),
                    fmt_f64(limits::a_of_t(&m, t)?),
                    fmt_f64(limits::kappa_of_t(alpha, t)?),
                ]);
            }
            let out = out
                .clone()
                .or_else(|| file.out.clone())
                .unwrap_or_else(|| PathBuf::from("table-vat.csv"));
            let measure = MeasureArgs {
                family: Some(FamilyArg::Beta),
                alpha: Some(alpha),
                ..Default::default()
            };
            (
                table_config("tables vat", FamilyArg::Beta, &measure, file, &[*points], &out, threads),
                vec!["t", "v", "a", "kappa"],
                rows,
            )
        }
    };
    write_csv_table(&config.out_path, &header, &rows)?;
    write_sidecar(&config, started)?;
    println!(
        "tables: {} rows -> {}",
        rows.len(),
        config.out_path.display()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn table_config(
    command: &str,
    family: FamilyArg,
    measure: &MeasureArgs,
    file: &FileConfig,
    n: &[u64],
    out: &Path,
    threads: Option<usize>,
) -> RunConfig {
    RunConfig {
        command: command.to_string(),
        family,
        alpha: measure.alpha.or(file.alpha),
        c0: measure.c0.or(file.c0),
        zeta: measure.zeta.or(file.zeta),
        theta: 0.0,
        n: n.to_vec(),
        reps: 0,
        t_grid: Vec::new(),
        seed: DEFAULT_SEED,
        out_path: out.to_path_buf(),
        format: FormatArg::Csv,
        threads,
    }
}

fn exit_code_for(e: &CoalError) -> u8 {
    match e {
        CoalError::Argument(_) | CoalError::UnsupportedFamily { .. } => 2,
        _ => 3,
    }
}

/// Parse and run; returns the process exit code
/// (0 success/all-pass, 1 verification failure, 2 usage, 3 runtime).
pub fn main_entry() -> u8 {
    let cli = Cli::parse();
    run(cli)
}

/// Run a parsed command line (separated from `main_entry` for tests).
pub fn run(cli: Cli) -> u8 {
    let file = match load_file_config(cli.config.as_deref()) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code_for(&e);
        }
    };
    let threads = init_threads(cli.threads, file.threads);
    let outcome = match &cli.command {
        Command::Simulate(args) => {
            merge_simulate(args, &file, threads).and_then(|c| cmd_simulate(&c).map(|()| true))
        }
        Command::Verify(args) => cmd_verify(args, &file, threads),
        Command::Tables { table } => cmd_tables(table, &file, threads).map(|()| true),
    };
    match outcome {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_parses_examples() {
        Cli::try_parse_from([
            "coalscope", "simulate", "--family", "beta", "--alpha", "1.5", "--n", "5000",
            "--reps", "100", "--t", "0.25", "--theta", "1", "--seed", "42",
        ])
        .unwrap();
        Cli::try_parse_from([
            "coalscope", "verify", "tau", "--alpha", "1.5", "--n", "500,5000", "--reps",
            "4000", "--seed", "7",
        ])
        .unwrap();
        Cli::try_parse_from(["coalscope", "tables", "gn", "--family", "beta", "--alpha",
            "1.5", "--n", "10,100,1000"])
        .unwrap();
        // unknown scenario is a usage error
        assert!(Cli::try_parse_from(["coalscope", "verify", "nonsense"]).is_err());
    }

    #[test]
    fn measure_construction_errors_are_usage_errors() {
        let e = build_measure(FamilyArg::Beta, Some(2.5), None).unwrap_err();
        assert_eq!(exit_code_for(&e), 2);
        let e = build_measure(FamilyArg::Beta, None, None).unwrap_err();
        assert_eq!(exit_code_for(&e), 2);
        assert!(build_measure(FamilyArg::Kingman, None, None).is_ok());
    }

    #[test]
    fn config_file_merge_respects_flag_precedence() {
        let dir = std::env::temp_dir().join("coalscope-cli-test");
        std::fs::create_dir_all(&dir).unwrap();
        let cfg = dir.join("config.json");
        std::fs::write(&cfg, r#"{"alpha": 1.2, "reps": 7, "seed": 99}"#).unwrap();
        let file = load_file_config(Some(&cfg)).unwrap();
        let args = SimulateArgs {
            measure: MeasureArgs {
                family: Some(FamilyArg::Beta),
                alpha: Some(1.5),
                c0: None,
                zeta: None,
            },
            n: Some(50),
            reps: None,
            t_grid: None,
            theta: None,
            seed: None,
            out: None,
            format: None,
        };
        let merged = merge_simulate(&args, &file, None).unwrap();
        assert_eq!(merged.alpha, Some(1.5)); // flag wins
        assert_eq!(merged.reps, 7); // file fills the gap
        assert_eq!(merged.seed, 99);
        assert_eq!(merged.theta, 0.0); // default
    }

    #[test]
    fn fmt_f64_has_17_significant_digits() {
        let s = fmt_f64(std::f64::consts::PI);
        assert_eq!(s, "3.1415926535897931e0");
    }

    #[test]
    fn run_record_header_matches_field_order() {
        let r = RunRecord {
            replicate_index: 0,
            n: 5,
            alpha: 1.5,
            t: 0.25,
            tau_n: 4,
            l_t: 1.0,
            l_tilde_t: 1.0,
            l_hat_t: 1.0,
            k_t: 0.0,
            l_total: 2.0,
            t_mrca: 1.0,
            scaled_statistic: 0.0,
        };
        assert_eq!(r.csv_fields().len(), RUN_RECORD_HEADER.len());
    }
}
