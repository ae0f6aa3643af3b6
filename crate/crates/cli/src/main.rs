use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mbv_cli::{parse_noise_list, run_experiment, summarize, ExperimentConfig, ExperimentKind, NoiseOption, StateSpec};
use mbv_core::{ScenarioId, SpsaConfig};

#[derive(Parser)]
#[command(
    name = "mbv",
    version,
    about = "Search for maximal Bell violations by stochastic gradient ascent"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Independent runs of one configuration.
    Single(RunArgs),
    /// Noiseless convergence for the preset states of each scenario.
    Fig1(RunArgs),
    /// Final CHSH value versus photon pairs per setting.
    Fig2(RunArgs),
    /// Search versus tomography at equal photon budget under angle errors.
    Fig3(RunArgs),
    /// Search with hidden setting offsets.
    Fig4(RunArgs),
    /// Aggregate final values of existing trace files.
    Summarize {
        #[arg(required = true)]
        traces: Vec<PathBuf>,
        /// Write the summary JSON here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// chsh, mermin3 or cglmp3.
    #[arg(long)]
    scenario: Option<ScenarioId>,
    /// Preset (singlet, werner:P, partial:G, product, ghz3, ghz-mix:P,
    /// qutrit-max, qutrit-iso:P) or a state file.
    #[arg(long)]
    state: Option<String>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma list of ideal, shot:N, angle:SIGMA, untrusted.
    #[arg(long)]
    noise: Option<String>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    #[arg(long)]
    s: Option<f64>,
    #[arg(long)]
    t: Option<f64>,
    /// Start from the tuned gain preset instead of the default gains.
    #[arg(long)]
    calibrated: bool,
    #[arg(long)]
    out: PathBuf,
    /// Photon pairs per setting swept by fig2.
    #[arg(long, value_delimiter = ',')]
    shot_levels: Option<Vec<u64>>,
    /// Angle-error levels (radians) of fig3.
    #[arg(long, value_delimiter = ',')]
    angle_levels: Option<Vec<f64>>,
    /// Photon pairs per setting for the search in fig3.
    #[arg(long)]
    shots: Option<u64>,
    /// Tomography repetitions per fig3 trial.
    #[arg(long)]
    cvt_reps: Option<usize>,
}

fn build_config(kind: ExperimentKind, args: RunArgs) -> anyhow::Result<ExperimentConfig> {
    let mut c = ExperimentConfig::new(kind, args.out);
    if let Some(sc) = args.scenario {
        c.scenarios = vec![sc];
    }
    if args.calibrated {
        let gains = SpsaConfig::calibrated(c.scenarios[0]);
        c = c.with_gains(&gains);
    }
    if let Some(s) = args.state {
        c.state = Some(StateSpec::parse(&s)?);
    }
    if let Some(n) = args.iterations {
        c.iterations = Some(n);
    }
    if let Some(r) = args.reps {
        c.repetitions = r;
    }
    c.seed = args.seed;
    if let Some(n) = args.noise {
        c.noise = parse_noise_list(&n)?;
        if kind == ExperimentKind::Untrusted && !c.noise.contains(&NoiseOption::Untrusted) {
            c.noise.insert(0, NoiseOption::Untrusted);
        }
    }
    c.a = args.a.unwrap_or(c.a);
    c.b = args.b.unwrap_or(c.b);
    c.s = args.s.unwrap_or(c.s);
    c.t = args.t.unwrap_or(c.t);
    if let Some(l) = args.shot_levels {
        c.shot_levels = l;
    }
    if let Some(l) = args.angle_levels {
        c.angle_levels = l;
    }
    c.shots = args.shots.unwrap_or(c.shots);
    c.cvt_reps = args.cvt_reps.unwrap_or(c.cvt_reps);
    Ok(c)
}

fn execute(cli: Cli) -> anyhow::Result<()> {
    let (kind, args) = match cli.command {
        Command::Single(a) => (ExperimentKind::Single, a),
        Command::Fig1(a) => (ExperimentKind::Convergence, a),
        Command::Fig2(a) => (ExperimentKind::ShotNoiseSweep, a),
        Command::Fig3(a) => (ExperimentKind::SgaVsCvt, a),
        Command::Fig4(a) => (ExperimentKind::Untrusted, a),
        Command::Summarize { traces, out } => {
            let s = summarize(&traces)?;
            match out {
                Some(path) => mbv_cli::summary::write_json_atomic(&s, &path)?,
                None => println!("{}", serde_json::to_string_pretty(&s)?),
            }
            return Ok(());
        }
    };
    let config = build_config(kind, args)?;
    let report = run_experiment(&config)?;
    // a closed stdout must not turn a finished run into a failure
    let mut out = std::io::stdout().lock();
    for g in &report.groups {
        let s = &g.summary;
        let mut line = format!(
            "{:<24} mean {:.4} std {:.4} min {:.4} max {:.4}",
            g.name, s.mean, s.std, s.min, s.max
        );
        if let Some(r) = g.reference_value {
            line += &format!(" ref {r:.4}");
        }
        if let Some(c) = &g.cvt {
            line += &format!(" cvt {:.4}", c.trial_means.mean);
        }
        let _ = writeln!(out, "{line}");
    }
    let _ = writeln!(
        out,
        "wrote {} ({:.2} s)",
        mbv_cli::summary_path(&config.out).display(),
        report.wall_time_seconds
    );
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
