use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use closedrange_core::carleson::delta_sweep;
use closedrange_core::report::{
    builtin_scenario, emit_heatmap, ring_table, run_scenario, scenario_suite, verify_suite, write_report,
    DeltaSection, HeatmapField, Overrides, ScenarioConfig,
};
use closedrange_core::Error;

const EXIT_CONFIG: u8 = 1;
const EXIT_INTERNAL: u8 = 3;

/// Closed-range diagnostics for composition operators on the Dirichlet space.
#[derive(Parser, Debug)]
#[command(name = "closedrange", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the full pipeline and write a JSON report per scenario.
    Analyze {
        /// Scenario file or built-in scenario name.
        #[arg(required_unless_present = "suite")]
        scenario: Option<String>,
        /// Run every built-in scenario.
        #[arg(long, conflicts_with = "scenario")]
        suite: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Write a PGM heatmap with a text sidecar.
    Heatmap {
        scenario: String,
        /// n_phi, tau, coverage or gc_indicator.
        #[arg(long, default_value = "n_phi")]
        field: String,
        /// Image side in pixels (at most 2048); defaults to the scenario setting.
        #[arg(long)]
        resolution: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Run module invariant checks and print a JSON summary.
    Verify {
        /// Tags to run; `all` selects every tag.
        #[arg(default_values_t = vec!["all".to_string()])]
        tags: Vec<String>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Also write `verify.json` here.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Print per-ring density minima.
    Rings {
        scenario: String,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Debug)]
struct Common {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    radial_order: Option<usize>,
    #[arg(long)]
    angular_order: Option<usize>,
    /// Preimages are counted in `|z| <= 1 - eps`.
    #[arg(long)]
    eps_truncation: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Bergman radius of the density disks.
    #[arg(long)]
    r: Option<f64>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            radial_order: self.radial_order,
            angular_order: self.angular_order,
            eps_truncation: self.eps_truncation,
            alpha: self.alpha,
            bergman_radius: self.r,
        }
    }
}

enum Failure {
    Config(String),
    Internal(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config { .. } | Error::Validation { .. } => Failure::Config(e.to_string()),
            other => Failure::Internal(other.to_string()),
        }
    }
}

fn load(scenario: &str, common: &Common) -> Result<ScenarioConfig, Failure> {
    let path = Path::new(scenario);
    let mut cfg = if path.exists() {
        ScenarioConfig::load(path).map_err(|e| match e {
            Error::Io(io) => Failure::Config(format!("{}: {io}", path.display())),
            other => Failure::from(other),
        })?
    } else if let Some(cfg) = builtin_scenario(scenario) {
        cfg
    } else {
        let names: Vec<String> = scenario_suite().into_iter().map(|s| s.name).collect();
        return Err(Failure::Config(format!(
            "`{scenario}` is neither a file nor a built-in scenario ({})",
            names.join(", ")
        )));
    };
    cfg.apply(&common.overrides())?;
    Ok(cfg)
}

fn analyze(configs: Vec<ScenarioConfig>, out_dir: &Path) -> Result<u8, Failure> {
    let mut code = 0;
    for cfg in configs {
        let report = run_scenario(&cfg)?;
        let mut line = format!(
            "{}: {} (decided by {})",
            cfg.name,
            report.verdict.label.as_str(),
            report.verdict.decided_by
        );
        if cfg.outputs.report {
            let path = write_report(&report, out_dir)?;
            line.push_str(&format!(" -> {}", path.display()));
        }
        println!("{line}");
        for e in &report.errors {
            eprintln!("  estimator error: {e}");
        }
        if cfg.outputs.rings {
            print!("{}", report.ring_table());
        }
        for &field in &cfg.outputs.heatmaps {
            let s = emit_heatmap(field, cfg.outputs.heatmap_resolution, &cfg, out_dir)?;
            println!("  heatmap {} -> {}", field.name(), s.image.display());
        }
        code = code.max(report.exit_code() as u8);
    }
    Ok(code)
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Analyze { scenario, suite, common } => {
            let configs = if suite {
                let mut all = Vec::new();
                for mut cfg in scenario_suite() {
                    cfg.apply(&common.overrides())?;
                    all.push(cfg);
                }
                all
            } else {
                vec![load(scenario.as_deref().unwrap_or_default(), &common)?]
            };
            analyze(configs, &common.out_dir)
        }
        Command::Heatmap {
            scenario,
            field,
            resolution,
            common,
        } => {
            let cfg = load(&scenario, &common)?;
            let field = HeatmapField::parse(&field).ok_or_else(|| {
                Failure::Config(format!("unknown field `{field}`, expected n_phi, tau, coverage or gc_indicator"))
            })?;
            let s = emit_heatmap(field, resolution.unwrap_or(cfg.outputs.heatmap_resolution), &cfg, &common.out_dir)?;
            println!(
                "{} -> {} (min {}, max {}, failures {})",
                field.name(),
                s.image.display(),
                s.min,
                s.max,
                s.failures
            );
            Ok(0)
        }
        Command::Verify { tags, seed, out_dir } => {
            let summary = verify_suite(&tags, seed)?;
            let json = serde_json::to_string_pretty(&summary).map_err(|e| Failure::Internal(e.to_string()))?;
            if let Some(dir) = out_dir {
                std::fs::create_dir_all(&dir).map_err(|e| Failure::Internal(e.to_string()))?;
                std::fs::write(dir.join("verify.json"), format!("{json}\n"))
                    .map_err(|e| Failure::Internal(e.to_string()))?;
            }
            println!("{json}");
            for c in summary.checks.iter().filter(|c| !c.pass) {
                eprintln!("FAILED {}/{}: {} > {}", c.tag, c.name, c.value, c.tolerance);
            }
            Ok(if summary.pass { 0 } else { EXIT_INTERNAL })
        }
        Command::Rings { scenario, common } => {
            let cfg = load(&scenario, &common)?;
            let phi = cfg.symbol_map()?;
            let mut alphas = vec![cfg.query.alpha];
            alphas.extend(cfg.analysis.alphas.iter().copied().filter(|a| *a != cfg.query.alpha));
            let sweep = delta_sweep(&phi, &cfg.query, &alphas)?;
            println!("{} (r = {}, seed = {})", cfg.name, cfg.query.bergman_radius, cfg.query.seed);
            print!(
                "{}",
                ring_table(&DeltaSection {
                    coverage: sweep.coverage,
                    power: sweep.power,
                })
            );
            println!("max sampled n = {}", sweep.max_count);
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(EXIT_INTERNAL)
        }
    }
}
