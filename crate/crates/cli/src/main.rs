//! `tailsens`: VaR sensitivity reports for compound Poisson loss scenarios.

mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tailsens_core::engine::{cf_severity, cf_severity_quadrature};
use tailsens_core::experiments::{self, Scenario, Table1Variant};
use tailsens_core::{
    analyze, sweep_alpha, var, CompoundCell, EngineConfig, EngineKind, GpdSeverity, RiskPair, SensitivityError,
    SensitivityReport,
};

use config::ConfigError;
use output::{failure_flag, num, opt, report_flag, Table, NA};

const EXIT_CONFIG: u8 = 2;
const EXIT_ENGINE: u8 = 3;

#[derive(Parser)]
#[command(name = "tailsens", version, about = "VaR sensitivity of heavy-tailed compound Poisson losses")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Output CSV path (written atomically); stdout when omitted.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Engine override.
    #[arg(long, value_parser = parse_engine)]
    engine: Option<EngineKind>,
    /// Monte Carlo seed override.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Confidence level; repeat for a grid.
    #[arg(long = "alpha", value_name = "X")]
    alphas: Vec<f64>,
}

fn parse_engine(s: &str) -> Result<EngineKind, String> {
    s.parse()
}

#[derive(Clone, Copy, ValueEnum)]
enum Variant {
    /// Add-on intensity 100.
    AsPublished,
    /// Add-on intensity 10, as in the scenario description.
    AsStated,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze the scenario in a config file, one row per confidence level.
    Analyze {
        #[arg(long, value_name = "PATH")]
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Finite-mean add-on losses.
    Table1 {
        #[arg(long, value_enum, default_value = "as-published")]
        variant: Variant,
        #[command(flatten)]
        common: Common,
    },
    /// Infinite-mean add-on losses lighter than the prior.
    Table2 {
        #[command(flatten)]
        common: Common,
    },
    /// Equally heavy tails, varying add-on scale.
    Table3 {
        #[command(flatten)]
        common: Common,
    },
    /// Add-on losses heavier than the prior.
    Table4 {
        #[command(flatten)]
        common: Common,
    },
    /// Approximation error along the confidence level.
    Figure1 {
        #[command(flatten)]
        common: Common,
    },
    /// Quick numerical self-checks.
    Selftest,
}

enum Failure {
    Config(String),
    Engine(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

fn engine_config(base: EngineConfig, common: &Common) -> EngineConfig {
    let mut cfg = base;
    if let Some(k) = common.engine {
        cfg.kind = k;
    }
    if let Some(s) = common.seed {
        cfg.mc_seed = s;
    }
    cfg
}

fn alphas_or(common: &Common, default: &[f64]) -> Result<Vec<f64>, Failure> {
    let given = if common.alphas.is_empty() {
        default.to_vec()
    } else {
        common.alphas.clone()
    };
    Ok(config::normalize_alphas(given)?)
}

fn log_failure(context: &str, e: &SensitivityError) {
    eprintln!("tailsens: {context}: {e}");
}

const ANALYZE_HEADER: [&str; 12] = [
    "alpha",
    "var_L",
    "var_S",
    "var_LS",
    "delta_var",
    "approx",
    "error",
    "regime",
    "k",
    "engine",
    "achieved_tol",
    "flag",
];

fn report_fields(r: &SensitivityReport) -> Vec<String> {
    vec![
        num(r.var_l),
        opt(r.var_s),
        num(r.var_ls),
        num(r.delta_var),
        num(r.approx),
        num(r.error),
        r.regime.kind.as_str().into(),
        num(r.k.value),
    ]
}

fn failed_fields(pair: &RiskPair) -> Vec<String> {
    let mut v = vec![NA.to_string(); 6];
    match tailsens_core::regime_of(&pair.cell_l, &pair.cell_s, tailsens_core::DEFAULT_EQ_TOL) {
        Ok(r) => v.push(r.kind.as_str().into()),
        Err(_) => v.push(NA.into()),
    }
    v.push(num(tailsens_core::k_constant(&pair.cell_l, &pair.cell_s).value));
    v
}

/// Appends one row per level and reports whether any level failed.
fn analyze_rows(
    table: &mut Table,
    prefix: &[String],
    pair: &RiskPair,
    alphas: &[f64],
    cfg: &EngineConfig,
    with_engine: bool,
) -> Result<bool, Failure> {
    let results = sweep_alpha(pair, alphas, cfg).map_err(|e| Failure::Config(e.to_string()))?;
    let mut failed = false;
    for (&alpha, res) in alphas.iter().zip(results) {
        let mut fields = prefix.to_vec();
        fields.push(num(alpha));
        let (body, engine, tol, flag) = match &res {
            Ok(r) => (report_fields(r), r.engine.as_str(), num(r.achieved_tol), report_flag(r)),
            Err(e) => {
                log_failure(&format!("alpha = {alpha}"), e);
                failed = true;
                let engine = if pair.is_independent() { cfg.kind } else { EngineKind::MonteCarlo };
                (failed_fields(pair), engine.as_str(), NA.to_string(), failure_flag(e))
            }
        };
        fields.extend(body);
        if with_engine {
            fields.push(engine.into());
            fields.push(tol);
        }
        fields.push(flag.into());
        table.row(fields);
    }
    Ok(failed)
}

fn finish(table: Table, out: Option<&std::path::Path>, failed: bool) -> Result<(), Failure> {
    output::emit(&table.into_bytes(), out).map_err(|e| Failure::Config(format!("cannot write output: {e}")))?;
    if failed {
        Err(Failure::Engine("one or more rows failed; see the flag column".into()))
    } else {
        Ok(())
    }
}

fn cmd_analyze(path: &std::path::Path, common: &Common) -> Result<(), Failure> {
    let scenario = config::load(path)?;
    let cfg = engine_config(scenario.engine.clone(), common);
    let alphas = alphas_or(common, &scenario.alphas)?;
    let mut table = Table::new(&ANALYZE_HEADER);
    let failed = analyze_rows(&mut table, &[], &scenario.pair, &alphas, &cfg, true)?;
    let out = common.out.clone().or(scenario.output);
    finish(table, out.as_deref(), failed)
}

const TABLE_HEADER: [&str; 13] = [
    "lambda_S",
    "xi_S",
    "sigma_S",
    "alpha",
    "var_L",
    "var_S",
    "var_LS",
    "delta_var",
    "approx",
    "error",
    "regime",
    "k",
    "flag",
];

fn cmd_table(rows: &[Scenario], common: &Common) -> Result<(), Failure> {
    let cfg = engine_config(EngineConfig::default(), common);
    let alphas = alphas_or(common, &[experiments::ALPHA])?;
    let mut table = Table::new(&TABLE_HEADER);
    let mut failed = false;
    for s in rows {
        let pair = s.pair().map_err(|e| Failure::Config(e.to_string()))?;
        let prefix = [num(s.lambda_s), num(s.xi_s), num(s.sigma_s)];
        failed |= analyze_rows(&mut table, &prefix, &pair, &alphas, &cfg, false)?;
    }
    finish(table, common.out.as_deref(), failed)
}

fn cmd_figure1(common: &Common) -> Result<(), Failure> {
    let cfg = engine_config(EngineConfig::default(), common);
    let alphas = alphas_or(common, &experiments::FIGURE1_ALPHAS)?;
    let scenarios = experiments::figure1();
    let mut header = vec!["alpha".to_string()];
    header.extend(scenarios.iter().map(|s| format!("error_xiS{}", s.xi_s)));
    header.push("flag".into());
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut columns = Vec::new();
    for s in &scenarios {
        let pair = s.pair().map_err(|e| Failure::Config(e.to_string()))?;
        columns.push(sweep_alpha(&pair, &alphas, &cfg).map_err(|e| Failure::Config(e.to_string()))?);
    }
    let mut table = Table::new(&header);
    let mut failed = false;
    for (i, &alpha) in alphas.iter().enumerate() {
        let mut fields = vec![num(alpha)];
        let mut flags = Vec::new();
        for (s, col) in scenarios.iter().zip(&columns) {
            match &col[i] {
                Ok(r) => {
                    fields.push(num(r.error));
                    let f = report_flag(r);
                    if !f.is_empty() {
                        flags.push(format!("xiS{}:{f}", s.xi_s));
                    }
                }
                Err(e) => {
                    log_failure(&format!("xi_S = {}, alpha = {alpha}", s.xi_s), e);
                    failed = true;
                    fields.push(NA.into());
                    flags.push(format!("xiS{}:{}", s.xi_s, failure_flag(e)));
                }
            }
        }
        fields.push(flags.join(";"));
        table.row(fields);
    }
    finish(table, common.out.as_deref(), failed)
}

fn cmd_selftest() -> Result<(), Failure> {
    let cfg = EngineConfig::default();
    let mut checks: Vec<(&str, Result<String, String>)> = Vec::new();

    let prior = experiments::prior_cell().map_err(|e| Failure::Config(e.to_string()))?;
    checks.push((
        "prior VaR near 5.01e11",
        var(experiments::ALPHA, &[prior], &cfg)
            .map_err(|e| e.to_string())
            .and_then(|v| {
                let r = (v.value / 5.01e11 - 1.0).abs();
                let msg = format!("{:.6e} (rel {r:.1e})", v.value);
                if r <= 5e-3 {
                    Ok(msg)
                } else {
                    Err(msg)
                }
            }),
    ));

    let d = GpdSeverity::new(1.5, 2.0).map_err(|e| Failure::Config(e.to_string()))?;
    let mut worst = 0.0f64;
    let mut cf_err = None;
    for t in [1e-3, 0.1, 1.0, 10.0] {
        match (cf_severity(t, &d, &cfg), cf_severity_quadrature(t, &d, &cfg)) {
            (Ok(a), Ok(b)) => worst = worst.max((a - b).norm()),
            (Err(e), _) | (_, Err(e)) => cf_err = Some(e.to_string()),
        }
    }
    checks.push((
        "severity cf: special function vs quadrature",
        match cf_err {
            Some(e) => Err(e),
            None if worst <= 1e-9 => Ok(format!("max diff {worst:.1e}")),
            None => Err(format!("max diff {worst:.1e}")),
        },
    ));

    let small = CompoundCell::from_params(2.0, 0.5, 1.0).map_err(|e| Failure::Config(e.to_string()))?;
    checks.push((
        "Panjer agrees with inversion",
        var(0.9, &[small], &cfg)
            .and_then(|a| Ok((a.value, var(0.9, &[small], &EngineConfig::with_kind(EngineKind::Panjer))?.value)))
            .map_err(|e| e.to_string())
            .and_then(|(a, b)| {
                let r = (a / b - 1.0).abs();
                if r <= 2e-3 {
                    Ok(format!("rel {r:.1e}"))
                } else {
                    Err(format!("rel {r:.1e}"))
                }
            }),
    ));

    let equal = experiments::table3()[2];
    checks.push((
        "equal-tails row error below 1e-4",
        equal
            .pair()
            .map_err(|e| e.to_string())
            .and_then(|p| analyze(&p, experiments::ALPHA, &cfg).map_err(|e| e.to_string()))
            .and_then(|r| {
                let msg = format!("error {:.2e}", r.error);
                if r.error.abs() <= 1e-4 {
                    Ok(msg)
                } else {
                    Err(msg)
                }
            }),
    ));

    let mut failed = false;
    for (name, res) in checks {
        match res {
            Ok(d) => println!("PASS  {name}: {d}"),
            Err(d) => {
                failed = true;
                println!("FAIL  {name}: {d}");
            }
        }
    }
    if failed {
        Err(Failure::Engine("self-test failed".into()))
    } else {
        Ok(())
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Analyze { config, common } => cmd_analyze(&config, &common),
        Command::Table1 { variant, common } => {
            let v = match variant {
                Variant::AsPublished => Table1Variant::AsPublished,
                Variant::AsStated => Table1Variant::AsStated,
            };
            cmd_table(&experiments::table1(v), &common)
        }
        Command::Table2 { common } => cmd_table(&experiments::table2(), &common),
        Command::Table3 { common } => cmd_table(&experiments::table3(), &common),
        Command::Table4 { common } => cmd_table(&experiments::table4(), &common),
        Command::Figure1 { common } => cmd_figure1(&common),
        Command::Selftest => cmd_selftest(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("tailsens: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Engine(msg)) => {
            eprintln!("tailsens: {msg}");
            ExitCode::from(EXIT_ENGINE)
        }
    }
}
