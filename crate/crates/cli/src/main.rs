use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dctcrop::classifier::{load_model, model_to_json, SvmModel};
use dctcrop::detector::detect_crop;
use dctcrop::features::extract_beta_vector;
use dctcrop::harness::{
    emit_beta_trend, read_split, run_dataset_build, run_sweep_stage, run_training_stage, ExperimentConfig,
};
use dctcrop::imagery::{load_image, to_luminance, LuminancePlane};
use dctcrop::transform::block_decompose;
use dctcrop::{Error, Result};

#[derive(Parser)]
#[command(name = "dctcrop", version, about = "Source-resolution classification and crop detection from DCT statistics")]
struct Cli {
    /// Overrides the seed from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// TOML file with experiment settings.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build features.csv from the corpus.
    Prep {
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Grid search, fit and score on the held-out split.
    Train {
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write a JSON rendering of the model.
        #[arg(long)]
        export_json: Option<PathBuf>,
    },
    /// Predict the source resolution of an image.
    Classify {
        image: PathBuf,
        #[command(flatten)]
        opts: ImageOpts,
    },
    /// Print one JSON verdict per image.
    DetectCrop {
        #[arg(required = true)]
        images: Vec<PathBuf>,
        #[command(flatten)]
        opts: ImageOpts,
    },
    /// Crop sweeps over the held-out images.
    Sweep {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// β per AC position across the resolution ladder, as CSV.
    BetaTrend {
        image: PathBuf,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

#[derive(clap::Args)]
struct ImageOpts {
    /// Model file (default: model.csvm in the output directory).
    #[arg(long)]
    model: Option<PathBuf>,
    /// Write the luminance plane as PGM.
    #[arg(long)]
    dump_pgm: Option<PathBuf>,
    /// Print the coefficients of block ROW,COL.
    #[arg(long, value_parser = parse_block, value_name = "ROW,COL")]
    dump_block: Option<(usize, usize)>,
}

fn parse_block(s: &str) -> std::result::Result<(usize, usize), String> {
    let (r, c) = s.split_once(',').ok_or("expected ROW,COL")?;
    Ok((r.trim().parse().map_err(|e| format!("{e}"))?, c.trim().parse().map_err(|e| format!("{e}"))?))
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut config = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn image_id(path: &Path) -> String {
    path.file_name().map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned())
}

fn model_for(config: &ExperimentConfig, opts: &ImageOpts) -> Result<SvmModel> {
    load_model(opts.model.as_deref().unwrap_or(&config.model_path()))
}

fn prepare_plane(path: &Path, opts: &ImageOpts) -> Result<LuminancePlane> {
    let plane = to_luminance(&load_image(path)?);
    if let Some(pgm) = &opts.dump_pgm {
        plane.write_pgm(pgm)?;
    }
    if let Some((row, col)) = opts.dump_block {
        let block = block_decompose(&plane)?
            .into_iter()
            .find(|b| b.block_row == row && b.block_col == col)
            .ok_or_else(|| Error::Precondition(format!("no block at {row},{col}")))?;
        print!("{}", block.to_text());
    }
    Ok(plane)
}

fn run(cli: Cli) -> Result<()> {
    let mut config = load_config(&cli)?;
    match cli.command {
        Command::Prep { corpus, out } => {
            config.corpus_dir = corpus.unwrap_or(config.corpus_dir);
            config.output_dir = out.unwrap_or(config.output_dir);
            let table = run_dataset_build(&config)?;
            println!("{} records written to {}", table.len(), config.features_path().display());
        }
        Command::Train { out, export_json } => {
            config.output_dir = out.unwrap_or(config.output_dir);
            let outcome = run_training_stage(&config)?;
            if let Some(path) = export_json {
                std::fs::write(&path, model_to_json(&outcome.model)).map_err(|e| Error::Io { path, source: e })?;
            }
            print!("{}", outcome.confusion.render_text());
        }
        Command::Classify { image, opts } => {
            let model = model_for(&config, &opts)?;
            let plane = prepare_plane(&image, &opts)?;
            let p = model.predict(&extract_beta_vector(&plane)?);
            let votes: Vec<String> = p.votes.iter().map(|(c, v)| format!("{c}:{v}")).collect();
            println!("{}\t{}\tvotes {}", image_id(&image), p.class, votes.join(" "));
        }
        Command::DetectCrop { images, opts } => {
            let model = model_for(&config, &opts)?;
            for image in &images {
                let plane = prepare_plane(image, &opts)?;
                println!("{}", detect_crop(&model, &plane, &image_id(image))?.to_json_line());
            }
        }
        Command::Sweep { out } => {
            config.output_dir = out.unwrap_or(config.output_dir);
            let model = load_model(&config.model_path())?;
            let split = read_split(&config.split_path())?;
            for report in run_sweep_stage(&config, &model, &split)? {
                print!("{}", report.render_text());
            }
        }
        Command::BetaTrend { image, output } => {
            let img = load_image(&image)?;
            let path = output.unwrap_or_else(|| config.output_dir.join(format!("trend_{}.csv", image_id(&image))));
            let points = emit_beta_trend(&img, &config.ladder_sides, &path)?;
            println!("{} points written to {}", points.len(), path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_precondition() { 2 } else { 1 })
        }
    }
}
