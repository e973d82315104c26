use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use clm::dataset::{ingest, load_image, DatasetManifest, ImageEntry, Split};
use clm::error::{CoreContext, PipelineError, Result};
use clm::formats::{read_model_header, write_descriptors, write_features, FeatureLayout, TrainedModel};
use clm::pipeline::{image_descriptors, predict_image, resolve_split, run_eval, run_train, spm_from_descriptors};
use clm::RunConfig;
use clm_core::pbr::apply_pbr;
use clm_core::symlin::Mat;
use log::info;
use rayon::prelude::*;
use serde::Serialize;

#[derive(Parser)]
#[command(name = "clm", version, about = "Codebookless Gaussian image models")]
struct Cli {
    /// JSON run configuration; defaults are used for missing keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Log progress (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct PbrArgs {
    /// Crop each image to its salient region first.
    #[arg(long)]
    pbr: bool,
    /// Write the crop windows to <dir>/pbr_boxes.csv (implies --pbr).
    #[arg(long, value_name = "DIR")]
    pbr_dump: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Dump dense descriptors of every image.
    Extract {
        dataset_root: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        pbr: PbrArgs,
    },
    /// Dump pyramid features of every image.
    Embed {
        dataset_root: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        pbr: PbrArgs,
    },
    /// Train a model on a dataset.
    Train {
        dataset_root: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// Write the training report JSON here.
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        pbr: PbrArgs,
    },
    /// Classify images, one JSON line per image.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(required = true)]
        images: Vec<PathBuf>,
    },
    /// Evaluate a model on a dataset.
    Eval {
        #[arg(long)]
        model: PathBuf,
        dataset_root: PathBuf,
        /// Write the report JSON here.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Print only the JSON report, without the table.
        #[arg(long)]
        json: bool,
    },
    /// Model file utilities.
    Model {
        #[command(subcommand)]
        command: ModelCommand,
    },
}

#[derive(Subcommand)]
enum ModelCommand {
    /// Print the JSON header of a model file.
    Inspect { file: PathBuf },
}

fn load_config(cli: &Cli, pbr: Option<&PbrArgs>) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(p) = pbr {
        cfg.pbr |= p.pbr || p.pbr_dump.is_some();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| PipelineError::io(path, e))
}

fn relative(manifest: &DatasetManifest, e: &ImageEntry) -> String {
    e.path
        .strip_prefix(&manifest.root)
        .unwrap_or(&e.path)
        .display()
        .to_string()
}

/// Runs background removal on `entries` and writes `filename,x0,y0,x1,y1`.
/// Images left unchanged get the full frame.
fn dump_pbr(dir: &Path, manifest: &DatasetManifest, entries: &[&ImageEntry], cfg: &RunConfig) -> Result<()> {
    let params = cfg.pbr_params().unwrap_or_default();
    let rows = entries
        .par_iter()
        .map(|e| {
            let img = load_image(&e.path)?;
            let out = apply_pbr(&img, &params).context(|| format!("{}: background removal", e.path.display()))?;
            let w = out.window;
            Ok(format!("{},{},{},{},{}", relative(manifest, e), w.x0, w.y0, w.x1, w.y1))
        })
        .collect::<Result<Vec<_>>>()?;
    create_dir(dir)?;
    let mut csv = String::from("filename,x0,y0,x1,y1\n");
    for r in rows {
        csv.push_str(&r);
        csv.push('\n');
    }
    write_text(&dir.join("pbr_boxes.csv"), &csv)
}

#[derive(Serialize)]
struct DumpIndexEntry {
    image: String,
    class: String,
    dump: String,
    rows: usize,
    cols: usize,
}

#[derive(Serialize)]
struct DumpIndex {
    #[serde(skip_serializing_if = "Option::is_none")]
    layout: Option<FeatureLayout>,
    entries: Vec<DumpIndexEntry>,
}

fn dump_dataset(root: &Path, out: &Path, pbr: &PbrArgs, cfg: &RunConfig, features: bool) -> Result<()> {
    let manifest = ingest(root)?;
    let entries: Vec<&ImageEntry> = manifest.entries.iter().collect();
    if let Some(dir) = &pbr.pbr_dump {
        dump_pbr(dir, &manifest, &entries, cfg)?;
    }
    for class in &manifest.classes {
        create_dir(&out.join(class))?;
    }
    let suffix = if features { "feat.clmf" } else { "desc.clmf" };
    let dumped = entries
        .par_iter()
        .map(|e| {
            let img = load_image(&e.path)?;
            let (ds, dims, _) = image_descriptors(&img, cfg)?;
            let class = manifest.classes[e.class].clone();
            let stem = e.path.file_stem().and_then(|s| s.to_str()).unwrap_or("image");
            let dump = Path::new(&class).join(format!("{stem}.{suffix}"));
            let (layout, rows, cols) = if features {
                let f = spm_from_descriptors(&ds, dims, cfg)?;
                let row = Mat::from_vec(1, f.concatenated().len(), f.concatenated().to_vec()).expect("row shape");
                write_features(&out.join(&dump), &row)?;
                (Some(FeatureLayout::new(&f, cfg)), 1, row.cols())
            } else {
                write_descriptors(&out.join(&dump), &ds)?;
                (None, ds.len(), ds.dim())
            };
            let entry = DumpIndexEntry {
                image: relative(&manifest, e),
                class,
                dump: dump.display().to_string(),
                rows,
                cols,
            };
            Ok((layout, entry))
        })
        .collect::<Result<Vec<_>>>()?;
    let layout = dumped.first().and_then(|(l, _)| l.clone());
    let index = DumpIndex {
        layout,
        entries: dumped.into_iter().map(|(_, e)| e).collect(),
    };
    write_text(&out.join("index.json"), &serde_json::to_string_pretty(&index)?)?;
    info!("wrote {} dumps to {}", index.entries.len(), out.display());
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Extract { dataset_root, out, pbr } => {
            let cfg = load_config(cli, Some(pbr))?;
            dump_dataset(dataset_root, out, pbr, &cfg, false)
        }
        Command::Embed { dataset_root, out, pbr } => {
            let cfg = load_config(cli, Some(pbr))?;
            dump_dataset(dataset_root, out, pbr, &cfg, true)
        }
        Command::Train {
            dataset_root,
            model,
            report,
            pbr,
        } => {
            let cfg = load_config(cli, Some(pbr))?;
            let manifest = ingest(dataset_root)?;
            if let Some(dir) = &pbr.pbr_dump {
                let split = resolve_split(&manifest, &cfg)?;
                dump_pbr(dir, &split, &split.entries_in(Split::Train), &cfg)?;
            }
            let (trained, rep) = run_train(&manifest, &cfg)?;
            trained.save(model)?;
            if let Some(p) = report {
                write_text(p, &rep.to_json())?;
            }
            print!("{rep}");
            Ok(())
        }
        Command::Predict { model, images } => {
            let trained = TrainedModel::load(model)?;
            let lines = images
                .par_iter()
                .map(|p| {
                    let img = load_image(p)?;
                    let pred = predict_image(&trained, &img, &p.display().to_string())?;
                    Ok(serde_json::to_string(&pred)?)
                })
                .collect::<Result<Vec<_>>>()?;
            let mut out = String::new();
            for l in lines {
                writeln!(out, "{l}").unwrap();
            }
            print!("{out}");
            Ok(())
        }
        Command::Eval {
            model,
            dataset_root,
            report,
            json,
        } => {
            let mut trained = TrainedModel::load(model)?;
            if let Some(s) = cli.seed {
                trained.config.seed = s;
            }
            let manifest = ingest(dataset_root)?;
            let rep = run_eval(&trained, &manifest)?;
            if let Some(p) = report {
                write_text(p, &rep.to_json())?;
            }
            if !*json {
                print!("{rep}");
            }
            println!("{}", rep.to_json());
            Ok(())
        }
        Command::Model {
            command: ModelCommand::Inspect { file },
        } => {
            let header = read_model_header(file)?;
            println!("{}", serde_json::to_string_pretty(&header)?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
