use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use steering_core::reservoir::KrausMode;
use steering_core::scenario::{
    detect_backflow, export_csv, export_mesh_json, group_by_n, read_csv, run_scenario, MscMode,
    ScenarioConfig,
};
use steering_core::verify::run_verification;
use steering_core::{Error, Exec};

#[derive(Parser)]
#[command(
    name = "qse",
    version,
    about = "Steering-ellipsoid dynamics in an engineered Lorentzian reservoir"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario described by a TOML config.
    Run {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Regenerate the figure data sets (theta = pi/3 and pi/8) with defaults.
    Figures {
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run the oracle suite.
    Verify,
    /// Report intervals of growing p(t) in an exported CSV.
    Backflow { csv: PathBuf },
}

#[derive(Args, Default)]
struct Overrides {
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// paper | strict | bruteforce
    #[arg(long)]
    msc_mode: Option<String>,
    /// paper | exact
    #[arg(long)]
    channel_mode: Option<String>,
    /// Number of search directions for bruteforce MSC.
    #[arg(long)]
    grid: Option<usize>,
}

impl Overrides {
    fn apply(&self, cfg: &mut ScenarioConfig) -> Result<(), Error> {
        if let Some(out) = &self.out {
            cfg.output.dir = out.clone();
        }
        if let Some(m) = &self.msc_mode {
            cfg.msc.mode = m.parse::<MscMode>()?;
        }
        if let Some(m) = &self.channel_mode {
            cfg.channel.mode = m.parse::<KrausMode>()?;
        }
        if let Some(g) = self.grid {
            cfg.msc.grid = g;
        }
        cfg.validate()
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::InvalidParameter { .. } => 2,
        Error::NonPhysical(_)
        | Error::NonHermitian { .. }
        | Error::SingularMarginal { .. }
        | Error::AmplitudeOutOfRange(_)
        | Error::NegativeSemiaxis(_) => 3,
        _ => 1,
    }
}

fn write_outputs(cfg: &ScenarioConfig, stem: &str) -> Result<(), Error> {
    let out = run_scenario(cfg)?;
    let dir = &cfg.output.dir;
    fs::create_dir_all(dir)?;
    let csv = dir.join(format!("{stem}.csv"));
    let mesh = dir.join(format!("{stem}_mesh.json"));
    export_csv(&out.rows, &csv)?;
    export_mesh_json(&out.meshes, &mesh)?;
    let flagged = out.rows.iter().filter(|r| r.degenerate).count();
    println!(
        "wrote {} ({} rows) and {} ({} frames)",
        csv.display(),
        out.rows.len(),
        mesh.display(),
        out.meshes.len()
    );
    if flagged > 0 {
        println!("{flagged} rows had a degenerate marginal; MSC is the basis infimum there");
    }
    Ok(())
}

fn print_backflow(path: &Path) -> Result<(), Error> {
    let rows = read_csv(path)?;
    for (n, group) in group_by_n(&rows) {
        let intervals = detect_backflow(&group)?;
        if intervals.is_empty() {
            println!("N={n}: no backflow");
            continue;
        }
        let listed: Vec<String> = intervals
            .iter()
            .map(|(a, b)| format!("[{a:.4}, {b:.4}]"))
            .collect();
        println!("N={n}: {}", listed.join(" "));
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool, Error> {
    match cli.command {
        Command::Run { config, overrides } => {
            let mut cfg = ScenarioConfig::load(&config)?;
            overrides.apply(&mut cfg)?;
            write_outputs(&cfg, "timeseries")?;
        }
        Command::Figures { overrides } => {
            for (theta, stem) in [(PI / 3.0, "theta_pi_3"), (PI / 8.0, "theta_pi_8")] {
                let mut cfg = ScenarioConfig::default();
                cfg.initial.theta = theta;
                overrides.apply(&mut cfg)?;
                write_outputs(&cfg, stem)?;
            }
        }
        Command::Verify => {
            let outcomes = run_verification(Exec::default())?;
            for o in &outcomes {
                println!("{o}");
            }
            return Ok(outcomes.iter().all(|o| o.passed));
        }
        Command::Backflow { csv } => print_backflow(&csv)?,
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
