//! `nvsde` — experiment runner for the Ninomiya-Victoir SDE toolkit.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use nvsde_cli::commands;
use nvsde_cli::config::{ExperimentConfig, KeyValues};
use nvsde_cli::EXIT_CONFIG;

#[derive(Parser)]
#[command(
    name = "nvsde",
    version,
    about = "Strong-convergence and error-distribution experiments for SDE splitting schemes"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Strong-error ladder and convergence-order fit (writes rates.csv)
    Converge(CommonArgs),
    /// Normalized-error samples against their limit law (writes empirical.csv,
    /// limit.csv, comparison.csv)
    Errordist(CommonArgs),
    /// Commutativity report for the model's fields (writes commute.csv)
    CheckCommute(CommonArgs),
    /// Closed-form predictable-bracket table (writes bracket.csv)
    BracketCheck(CommonArgs),
    /// Single-path trajectory dump (writes trajectory.csv)
    Simulate(CommonArgs),
}

/// Flags mirror the config-file keys one to one; flags override the file.
#[derive(Args)]
struct CommonArgs {
    /// Flat key=value config file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in model name (bs, linear-1d, additive-sin, noncommuting-2d, constant)
    #[arg(long)]
    model: Option<String>,
    /// Integrator (euler, milstein, nv, nv-eta)
    #[arg(long)]
    scheme: Option<String>,
    /// Comma-separated step counts, powers of two
    #[arg(long = "N")]
    n: Option<String>,
    /// Monte Carlo path count
    #[arg(long = "M")]
    m: Option<String>,
    /// Time horizon (model default if omitted)
    #[arg(long = "T")]
    horizon: Option<String>,
    /// Comma-separated initial state (model default if omitted)
    #[arg(long)]
    x0: Option<String>,
    /// Master seed (required; no wall-clock default)
    #[arg(long)]
    seed: Option<String>,
    /// Reference-grid refinement factor
    #[arg(long = "ref-refine")]
    ref_refine: Option<String>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// KS significance level
    #[arg(long)]
    alpha: Option<String>,
    /// Normalized error to study (U_N or V_N)
    #[arg(long)]
    kind: Option<String>,
    /// Comma-separated evaluation times for bracket-check
    #[arg(long = "t-list")]
    t_list: Option<String>,
    /// Worker threads (0 = automatic)
    #[arg(long)]
    threads: Option<String>,
    /// Substep override for the model's numeric flows
    #[arg(long = "flow-substeps")]
    flow_substeps: Option<String>,
    /// Model parameter override, repeatable (e.g. --param alpha=1.5)
    #[arg(long = "param", value_name = "NAME=VALUE")]
    params: Vec<String>,
}

impl CommonArgs {
    fn resolve(&self) -> Result<ExperimentConfig, String> {
        let mut kv = match &self.config {
            Some(path) => KeyValues::from_file(path).map_err(|e| e.to_string())?,
            None => KeyValues::default(),
        };
        let overrides: [(&str, Option<&String>); 13] = [
            ("model", self.model.as_ref()),
            ("scheme", self.scheme.as_ref()),
            ("N", self.n.as_ref()),
            ("M", self.m.as_ref()),
            ("T", self.horizon.as_ref()),
            ("x0", self.x0.as_ref()),
            ("seed", self.seed.as_ref()),
            ("ref_refine", self.ref_refine.as_ref()),
            ("alpha", self.alpha.as_ref()),
            ("kind", self.kind.as_ref()),
            ("t_list", self.t_list.as_ref()),
            ("threads", self.threads.as_ref()),
            ("flow_substeps", self.flow_substeps.as_ref()),
        ];
        for (key, value) in overrides {
            if let Some(v) = value {
                kv.set(key, v);
            }
        }
        if let Some(out) = &self.out {
            kv.set("out", &out.display().to_string());
        }
        for p in &self.params {
            let (name, value) = p
                .split_once('=')
                .ok_or_else(|| format!("config error: --param expects NAME=VALUE, got '{p}'"))?;
            kv.set(&format!("param.{name}"), value);
        }
        ExperimentConfig::resolve(&kv).map_err(|e| e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let args = match &cli.cmd {
        Cmd::Converge(a)
        | Cmd::Errordist(a)
        | Cmd::CheckCommute(a)
        | Cmd::BracketCheck(a)
        | Cmd::Simulate(a) => a,
    };
    let cfg = match args.resolve() {
        Ok(cfg) => cfg,
        Err(msg) => {
            eprintln!("{msg}");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    let code = match &cli.cmd {
        Cmd::Converge(_) => commands::cmd_converge(&cfg),
        Cmd::Errordist(_) => commands::cmd_errordist(&cfg),
        Cmd::CheckCommute(_) => commands::cmd_check_commute(&cfg),
        Cmd::BracketCheck(_) => commands::cmd_bracket_check(&cfg),
        Cmd::Simulate(_) => commands::cmd_simulate(&cfg),
    };
    ExitCode::from(code as u8)
}
