use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use msfuse::config::PipelineConfig;
use msfuse::error::{Error, Result};
use msfuse::io::{encode, load_image, ImageFormat};
use msfuse::metrics::{
    accuracy, auc_with_threshold, confusion_with_threshold, sensitivity, DEFAULT_MASK_THRESHOLD,
};
use msfuse::pipeline::{reconstruct, thread_pool_from_env, OutputSet};
use msfuse::synth::gen_synthetic;
use msfuse::wls::decompose;

#[derive(Parser)]
#[command(
    name = "msfuse",
    version,
    about = "Multi-scale stereo matching and 3D reconstruction"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Split an image into four WLS base layers and three detail layers.
    Decompose {
        input: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Outputs are `<prefix>_base_<s>.pfm` and `<prefix>_detail_<s>.pfm`.
        #[arg(long)]
        out_prefix: String,
    },
    /// Estimate disparity for a rectified pair and triangulate it.
    Reconstruct {
        left: PathBuf,
        right: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out_disparity: PathBuf,
        #[arg(long)]
        out_cloud: PathBuf,
        /// Also write base layers, aggregated-cost minima and the validity mask.
        #[arg(long)]
        dump_dir: Option<PathBuf>,
    },
    /// Accuracy, sensitivity and (with --scores) AUC of a predicted mask.
    EvalMask {
        pred: PathBuf,
        truth: PathBuf,
        #[arg(long)]
        scores: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_MASK_THRESHOLD)]
        threshold: f64,
    },
    /// Write a random-dot stereo pair with ground-truth disparity.
    GenSynthetic {
        width: usize,
        height: usize,
        disparity: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Outputs are `<prefix>_left.pgm`, `<prefix>_right.pgm`, `<prefix>_gt.pfm`.
        #[arg(long, default_value = "synthetic")]
        out_prefix: String,
    },
}

fn load_config(path: Option<&Path>) -> Result<PipelineConfig> {
    match path {
        Some(p) => PipelineConfig::load(p),
        None => Ok(PipelineConfig::default()),
    }
}

fn prefixed(prefix: &str, suffix: &str) -> PathBuf {
    PathBuf::from(format!("{prefix}_{suffix}"))
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Decompose {
            input,
            config,
            out_prefix,
        } => {
            let cfg = load_config(config.as_deref())?;
            let img = load_image(&input)?;
            let pyramid = decompose(&img, &cfg.wls)?;
            let mut out = OutputSet::new();
            for (s, layer) in pyramid.layers().iter().enumerate() {
                out.add_image(
                    prefixed(&out_prefix, &format!("base_{s}.pfm")),
                    layer,
                    ImageFormat::Pfm,
                )?;
            }
            for (s, detail) in pyramid.details().iter().enumerate() {
                out.add_image(
                    prefixed(&out_prefix, &format!("detail_{s}.pfm")),
                    detail,
                    ImageFormat::Pfm,
                )?;
            }
            out.commit()
        }
        Command::Reconstruct {
            left,
            right,
            config,
            out_disparity,
            out_cloud,
            dump_dir,
        } => {
            let cfg = load_config(config.as_deref())?;
            let left = load_image(&left)?;
            let right = load_image(&right)?;
            let result = reconstruct(&left, &right, &cfg)?;

            let mut out = OutputSet::new();
            out.add(
                out_disparity,
                encode(&result.disparity.to_image(), ImageFormat::Pfm)?,
            );
            out.add(out_cloud, result.cloud.to_ply().into_bytes());
            if let Some(dir) = dump_dir {
                for (s, layer) in result.left_pyramid.layers().iter().enumerate() {
                    out.add_image(dir.join(format!("left_base_{s}.pfm")), layer, ImageFormat::Pfm)?;
                }
                for (s, layer) in result.right_pyramid.layers().iter().enumerate() {
                    out.add_image(dir.join(format!("right_base_{s}.pfm")), layer, ImageFormat::Pfm)?;
                }
                for (s, vol) in result.left_view.aggregated.iter().enumerate() {
                    out.add_image(
                        dir.join(format!("agg_min_{s}.pfm")),
                        &vol.min_map(),
                        ImageFormat::Pfm,
                    )?;
                }
                out.add_image(
                    dir.join("valid_mask.pgm"),
                    &result.checked.validity_mask(),
                    ImageFormat::Pgm8,
                )?;
                std::fs::create_dir_all(&dir).map_err(|e| Error::Io {
                    path: dir.clone(),
                    source: e,
                })?;
            }
            out.commit()
        }
        Command::EvalMask {
            pred,
            truth,
            scores,
            threshold,
        } => {
            let pred = load_image(&pred)?;
            let truth = load_image(&truth)?;
            let counts = confusion_with_threshold(&pred, &truth, threshold)?;
            let acc = accuracy(&counts)?;
            let sen = sensitivity(&counts)?;
            let auc = match scores {
                Some(path) => Some(auc_with_threshold(&load_image(&path)?, &truth, threshold)?),
                None => None,
            };
            println!("acc={acc:.4}");
            println!("sen={sen:.4}");
            if let Some(auc) = auc {
                println!("auc={auc:.4}");
            }
            Ok(())
        }
        Command::GenSynthetic {
            width,
            height,
            disparity,
            seed,
            out_prefix,
        } => {
            let pair = gen_synthetic(width, height, disparity, seed)?;
            let mut out = OutputSet::new();
            out.add_image(prefixed(&out_prefix, "left.pgm"), &pair.left, ImageFormat::Pgm8)?;
            out.add_image(prefixed(&out_prefix, "right.pgm"), &pair.right, ImageFormat::Pgm8)?;
            out.add_image(
                prefixed(&out_prefix, "gt.pfm"),
                &pair.ground_truth.to_image(),
                ImageFormat::Pfm,
            )?;
            out.commit()
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let pool = match thread_pool_from_env() {
        Ok(pool) => pool,
        Err(e) => {
            eprintln!("msfuse: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match pool.install(|| run(cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("msfuse: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
