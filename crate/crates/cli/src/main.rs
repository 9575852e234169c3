use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tpslayout::pipeline::{self, Evaluation};
use tpslayout::{Error, Mode, Resolution, RunConfig, Settings};

#[derive(Parser)]
#[command(name = "tpslayout", version, about = "Room layouts from panoramas by thin-plate-spline warping")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Subcommand)]
enum Command {
    /// Write the canonical reference maps and layout at the --output prefix.
    GenReference,
    /// Generate a seeded synthetic corpus directory.
    Synth,
    /// Warp the reference by the control grid JSON given as --input.
    Warp,
    /// Fit the reference to target maps (prefix or corpus directory).
    Fit,
    /// Split fused corner blobs (non-cuboid mode; cuboid mode copies).
    Postprocess,
    /// Score predicted maps against --gt and write a JSON report.
    Evaluate,
    /// Export a room (maps prefix or layout JSON) as an OBJ mesh.
    Reconstruct,
    /// Draw a bird's-eye floor plan PNG.
    Floorplan,
    /// Compare the five alpha/beta weightings on a corpus.
    Sweep,
}

#[derive(Args)]
struct Opts {
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// TOML file whose keys mirror these flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Ground truth (maps prefix, layout JSON or corpus directory).
    #[arg(long, global = true)]
    gt: Option<PathBuf>,
    /// Reference maps prefix to warp instead of the canonical room.
    #[arg(long, global = true)]
    reference: Option<PathBuf>,
    #[arg(long, global = true, value_parser = parse_mode)]
    mode: Option<Mode>,
    #[arg(long, global = true)]
    grid_side: Option<usize>,
    #[arg(long, global = true)]
    alpha: Option<f64>,
    #[arg(long, global = true)]
    beta: Option<f64>,
    #[arg(long, global = true)]
    delta: Option<f64>,
    #[arg(long, global = true)]
    steps: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    unit_width: Option<f64>,
    #[arg(long, global = true)]
    separator: Option<usize>,
    /// Image size as WxH.
    #[arg(long, global = true, value_parser = parse_resolution)]
    resolution: Option<Resolution>,
    /// Number of rooms for synth.
    #[arg(long, global = true)]
    count: Option<usize>,
    #[arg(long, global = true)]
    min_corners: Option<usize>,
    #[arg(long, global = true)]
    max_corners: Option<usize>,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_resolution(s: &str) -> Result<Resolution, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

impl Opts {
    fn settings(self) -> (Option<PathBuf>, Settings) {
        let s = Settings {
            input: self.input,
            output: self.output,
            gt: self.gt,
            reference: self.reference,
            mode: self.mode,
            grid_side: self.grid_side,
            alpha: self.alpha,
            beta: self.beta,
            delta: self.delta,
            steps: self.steps,
            seed: self.seed,
            unit_width: self.unit_width,
            separator: self.separator,
            resolution: self.resolution,
            count: self.count,
            min_corners: self.min_corners,
            max_corners: self.max_corners,
            ..Settings::default()
        };
        (self.config, s)
    }
}

fn run(command: Command, cfg: &RunConfig) -> tpslayout::Result<()> {
    match command {
        Command::GenReference => pipeline::cmd_gen_reference(cfg),
        Command::Synth => {
            let m = pipeline::cmd_synth(cfg)?;
            println!("wrote {} rooms", m.entries.len());
            Ok(())
        }
        Command::Warp => pipeline::cmd_warp(cfg),
        Command::Fit => {
            for o in pipeline::cmd_fit(cfg)? {
                println!(
                    "{}: loss {:.6} -> {:.6} in {} steps",
                    o.id, o.initial_loss, o.final_loss, o.iterations
                );
            }
            Ok(())
        }
        Command::Postprocess => {
            let splits: usize = pipeline::cmd_postprocess(cfg)?.iter().sum();
            println!("split {splits} corner blobs");
            Ok(())
        }
        Command::Evaluate => {
            match pipeline::cmd_evaluate(cfg)? {
                Evaluation::Single(r) => println!(
                    "3DIoU {:.4}  2DIoU {:.4}  CE {}  PE {:.3}%",
                    r.iou3d,
                    r.iou2d,
                    r.ce_pct.map_or("n/a".to_string(), |c| format!("{c:.3}%")),
                    r.pe_pct
                ),
                Evaluation::Corpus(s) => println!(
                    "{} rooms, {} failed: mean 3DIoU {:.4}, median {:.4}, mean 2DIoU {:.4}",
                    s.count, s.failures, s.mean_iou3d, s.median_iou3d, s.mean_iou2d
                ),
            }
            Ok(())
        }
        Command::Reconstruct => pipeline::cmd_reconstruct(cfg).map(|_| ()),
        Command::Floorplan => pipeline::cmd_floorplan(cfg),
        Command::Sweep => {
            for r in pipeline::cmd_sweep(cfg)? {
                println!(
                    "alpha {:.2} beta {:.2}: rank {} mean 3DIoU {:.4} mean loss {:.6}",
                    r.alpha, r.beta, r.rank, r.mean_iou3d, r.mean_final_loss
                );
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (config, flags) = cli.opts.settings();
    let result = RunConfig::resolve(config.as_deref(), flags).and_then(|cfg| run(cli.command, &cfg));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let category = e.category();
            eprintln!("error ({category:?}): {e}");
            ExitCode::from(category.exit_code() as u8)
        }
    }
}
