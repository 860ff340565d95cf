//! Command-line surface.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on data errors. All
//! numeric output is printed in locale-independent fixed notation at six
//! significant digits.

use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::calibration::{calibrate, HoughConfig};
use crate::diffusion::{analytic_gaussian_denoiser, ddim_sample, linear_schedule, LatentTensor};
use crate::error::Error;
use crate::geometry::PointCloud;
use crate::io;
use crate::metrics::{
    bev_histogram, chamfer, frechet_distance, gaussian_stats, jsd, mmd, range_mae, BevBounds,
    BevHistogram, ValidPolicy,
};
use crate::projection::{denormalize, normalize, project, unproject, NormScheme, Normalizer};
use crate::tasks::{mask_sector, subsample_beams};

#[derive(Parser)]
#[command(name = "rangeview", version, about = "Range-view LiDAR toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum NormalizerArg {
    /// Store raw meters.
    None,
    /// Logarithmic range compression into [-1, 1].
    Log,
    /// Linear range mapping into [-1, 1].
    Linear,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PolicyArg {
    All,
    BothValid,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate per-beam height and pitch from point clouds by Hough voting.
    Calibrate {
        /// Input point-cloud .bin files (at least one).
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Output beam-model text file.
        #[arg(long)]
        output: PathBuf,
        /// Number of beams to extract.
        #[arg(long, default_value_t = 64)]
        beams: usize,
        /// Floats per input record (4 for KITTI, 5 for nuScenes).
        #[arg(long, default_value_t = 4)]
        stride: usize,
        #[arg(long, default_value_t = -0.5)]
        h_min: f64,
        #[arg(long, default_value_t = 0.5)]
        h_max: f64,
        #[arg(long, default_value_t = 401)]
        h_bins: usize,
        /// Pitch grid lower bound, degrees.
        #[arg(long, default_value_t = -30.0)]
        phi_min_deg: f64,
        /// Pitch grid upper bound, degrees.
        #[arg(long, default_value_t = 10.0)]
        phi_max_deg: f64,
        #[arg(long, default_value_t = 2000)]
        phi_bins: usize,
        #[arg(long, default_value_t = 3)]
        suppression_radius: usize,
        /// Ignore returns closer than this planar distance, meters.
        #[arg(long, default_value_t = 2.0)]
        min_planar_range: f64,
    },
    /// Rasterize a point cloud into a range image.
    Project {
        /// Beam-model text file.
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 1024)]
        width: usize,
        /// Range normalization of the stored image.
        #[arg(long, value_enum, default_value_t = NormalizerArg::None)]
        normalizer: NormalizerArg,
        /// Clamp for the normalizer, meters.
        #[arg(long, default_value_t = 80.0)]
        max_range: f64,
        /// Floats per input record.
        #[arg(long, default_value_t = 4)]
        stride: usize,
        input: PathBuf,
        output: PathBuf,
    },
    /// Recover a point cloud from a range image.
    Unproject {
        #[arg(long)]
        model: PathBuf,
        /// Normalization the image was stored with.
        #[arg(long, value_enum, default_value_t = NormalizerArg::None)]
        normalizer: NormalizerArg,
        #[arg(long, default_value_t = 80.0)]
        max_range: f64,
        input: PathBuf,
        output: PathBuf,
    },
    /// Keep every factor-th beam row of a range image.
    Subsample {
        #[arg(long)]
        factor: usize,
        /// Beam model to subsample alongside the image.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Where to write the subsampled beam model.
        #[arg(long, requires = "model")]
        model_out: Option<PathBuf>,
        input: PathBuf,
        output: PathBuf,
    },
    /// Zero a circular azimuth sector and emit the mask.
    Mask {
        #[arg(long, default_value_t = 0.0)]
        center_deg: f64,
        #[arg(long, default_value_t = 22.5)]
        width_deg: f64,
        /// Where to write the mask container.
        #[arg(long)]
        mask_out: Option<PathBuf>,
        input: PathBuf,
        output: PathBuf,
    },
    /// JSD and MMD between two directories of point clouds, over BEV
    /// occupancy histograms.
    BevMetrics {
        #[arg(long)]
        set_a: PathBuf,
        #[arg(long)]
        set_b: PathBuf,
        /// x_min x_max y_min y_max, meters.
        #[arg(long, num_args = 4, default_values_t = [-50.0, 50.0, -50.0, 50.0])]
        bounds: Vec<f64>,
        #[arg(long, default_value_t = 100)]
        bins: usize,
        /// Gaussian kernel bandwidth; median heuristic when omitted.
        #[arg(long)]
        bandwidth: Option<f64>,
        #[arg(long, default_value_t = 4)]
        stride: usize,
    },
    /// Symmetric Chamfer distance between two point clouds.
    Chamfer {
        #[arg(long, default_value_t = 4)]
        stride: usize,
        a: PathBuf,
        b: PathBuf,
    },
    /// Mean absolute range error between two range images.
    Mae {
        #[arg(long, value_enum, default_value_t = PolicyArg::All)]
        policy: PolicyArg,
        a: PathBuf,
        b: PathBuf,
    },
    /// Frechet distance between Gaussian fits of two feature files.
    Frechet {
        #[arg(long)]
        real: PathBuf,
        #[arg(long)]
        generated: PathBuf,
    },
    /// Sample a Gaussian target through the DDIM sampler and report moments.
    DdimDemo {
        #[arg(long, default_value_t = 1000)]
        t: usize,
        #[arg(long, default_value_t = 50)]
        steps: usize,
        #[arg(long, default_value_t = 4)]
        dim: usize,
        /// Comma-separated per-dimension means (or one value for all).
        #[arg(long, default_value = "0")]
        target_mean: String,
        /// Comma-separated per-dimension variances (or one value for all).
        #[arg(long, default_value = "1")]
        target_var: String,
        #[arg(long, default_value_t = 10000)]
        n_samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-4)]
        beta_start: f64,
        #[arg(long, default_value_t = 2e-2)]
        beta_end: f64,
    },
}

enum CliError {
    Usage(String),
    Data(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Data(e)
    }
}

/// Fixed-notation formatting at `sig` significant digits.
fn format_sig(v: f64, sig: i32) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{:.*}", (sig - 1).max(0) as usize, v);
    }
    let exponent = v.abs().log10().floor() as i32;
    let decimals = (sig - 1 - exponent).max(0) as usize;
    format!("{v:.decimals$}")
}

/// Entry point; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            1
        }
        Err(CliError::Data(e)) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn normalizer_of(arg: NormalizerArg, max_range: f64) -> Result<Option<Normalizer>, CliError> {
    let scheme = match arg {
        NormalizerArg::None => return Ok(None),
        NormalizerArg::Log => NormScheme::Log,
        NormalizerArg::Linear => NormScheme::Linear,
    };
    Ok(Some(Normalizer::new(scheme, max_range).map_err(|_| {
        CliError::Usage(format!("--max-range must be positive, got {max_range}"))
    })?))
}

fn parse_values(text: &str, dim: usize, flag: &str) -> Result<Vec<f64>, CliError> {
    let values: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Usage(format!("--{flag} expects comma-separated numbers")))?;
    match values.len() {
        1 => Ok(vec![values[0]; dim]),
        n if n == dim => Ok(values),
        n => Err(CliError::Usage(format!(
            "--{flag} has {n} values but --dim is {dim}"
        ))),
    }
}

fn load_directory_histograms(
    dir: &Path,
    bounds: BevBounds,
    bins: usize,
    stride: usize,
) -> Result<Vec<BevHistogram>, CliError> {
    let entries = std::fs::read_dir(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "bin"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::Data(Error::EmptyHistogramSet));
    }
    let mut histograms = Vec::with_capacity(paths.len());
    for path in &paths {
        let cloud = io::read_point_cloud_stride(path, stride)?;
        histograms.push(bev_histogram(&cloud, bounds, bins)?);
    }
    Ok(histograms)
}

fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Calibrate {
            inputs,
            output,
            beams,
            stride,
            h_min,
            h_max,
            h_bins,
            phi_min_deg,
            phi_max_deg,
            phi_bins,
            suppression_radius,
            min_planar_range,
        } => {
            let config = HoughConfig {
                h_min,
                h_max,
                h_bins,
                phi_min: phi_min_deg.to_radians(),
                phi_max: phi_max_deg.to_radians(),
                phi_bins,
                num_beams: beams,
                suppression_radius,
                min_planar_range,
            };
            let clouds: Vec<PointCloud> = inputs
                .iter()
                .map(|p| io::read_point_cloud_stride(p, stride))
                .collect::<Result<_, _>>()?;
            let model = calibrate(&clouds, &config)?;
            io::write_beam_model(&output, &model)?;
            Ok(())
        }
        Command::Project {
            model,
            width,
            normalizer,
            max_range,
            stride,
            input,
            output,
        } => {
            if width == 0 {
                return Err(CliError::Usage("--width must be >= 1".into()));
            }
            let model = io::read_beam_model(&model)?;
            let cloud = io::read_point_cloud_stride(&input, stride)?;
            let img = project(&cloud, &model, width);
            match normalizer_of(normalizer, max_range)? {
                Some(nz) => io::write_feature_map(&output, &normalize(&img, &nz))?,
                None => io::write_range_image(&output, &img)?,
            }
            Ok(())
        }
        Command::Unproject {
            model,
            normalizer,
            max_range,
            input,
            output,
        } => {
            let model = io::read_beam_model(&model)?;
            let img = match normalizer_of(normalizer, max_range)? {
                Some(nz) => denormalize(&io::read_feature_map(&input)?, &nz)?,
                None => io::read_range_image(&input)?,
            };
            let cloud = unproject(&img, &model)?;
            io::write_point_cloud(&output, &cloud)?;
            Ok(())
        }
        Command::Subsample {
            factor,
            model,
            model_out,
            input,
            output,
        } => {
            let img = io::read_range_image(&input)?;
            io::write_range_image(&output, &subsample_beams(&img, factor)?)?;
            if let (Some(model_path), Some(out_path)) = (model, model_out) {
                let model = io::read_beam_model(&model_path)?;
                io::write_beam_model(&out_path, &model.subsampled(factor)?)?;
            }
            Ok(())
        }
        Command::Mask {
            center_deg,
            width_deg,
            mask_out,
            input,
            output,
        } => {
            let img = io::read_range_image(&input)?;
            let (masked, mask) = mask_sector(&img, center_deg, width_deg)?;
            io::write_range_image(&output, &masked)?;
            if let Some(path) = mask_out {
                io::write_mask(&path, &mask.grid)?;
            }
            Ok(())
        }
        Command::BevMetrics {
            set_a,
            set_b,
            bounds,
            bins,
            bandwidth,
            stride,
        } => {
            let bounds = BevBounds {
                x_min: bounds[0],
                x_max: bounds[1],
                y_min: bounds[2],
                y_max: bounds[3],
            };
            let a = load_directory_histograms(&set_a, bounds, bins, stride)?;
            let b = load_directory_histograms(&set_b, bounds, bins, stride)?;
            let jsd_value = jsd(&a, &b)?;
            let mmd_value = mmd(&a, &b, bandwidth)?;
            println!(
                "jsd={} mmd={}",
                format_sig(jsd_value, 6),
                format_sig(mmd_value, 6)
            );
            Ok(())
        }
        Command::Chamfer { stride, a, b } => {
            let ca = io::read_point_cloud_stride(&a, stride)?;
            let cb = io::read_point_cloud_stride(&b, stride)?;
            println!("chamfer={}", format_sig(chamfer(&ca, &cb)?, 6));
            Ok(())
        }
        Command::Mae { policy, a, b } => {
            let ia = io::read_range_image(&a)?;
            let ib = io::read_range_image(&b)?;
            let policy = match policy {
                PolicyArg::All => ValidPolicy::All,
                PolicyArg::BothValid => ValidPolicy::BothValid,
            };
            println!("mae={}", format_sig(range_mae(&ia, &ib, policy)?, 6));
            Ok(())
        }
        Command::Frechet { real, generated } => {
            let fa = io::read_features(&real)?;
            let fb = io::read_features(&generated)?;
            let result = frechet_distance(&gaussian_stats(&fa)?, &gaussian_stats(&fb)?)?;
            println!("frd={}", format_sig(result.value, 6));
            if result.jitter_applied {
                eprintln!("note: covariance jitter applied for numerical stability");
            }
            Ok(())
        }
        Command::DdimDemo {
            t,
            steps,
            dim,
            target_mean,
            target_var,
            n_samples,
            seed,
            beta_start,
            beta_end,
        } => {
            if dim == 0 || n_samples == 0 {
                return Err(CliError::Usage(
                    "--dim and --n-samples must be >= 1".into(),
                ));
            }
            let mean = parse_values(&target_mean, dim, "target-mean")?;
            let variance = parse_values(&target_var, dim, "target-var")?;
            let sched = linear_schedule(t, beta_start, beta_end)?;
            let denoiser = analytic_gaussian_denoiser(
                LatentTensor::new(vec![dim], mean),
                LatentTensor::new(vec![dim], variance),
                sched.clone(),
            )?;
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let mut sums = vec![0.0; dim];
            let mut sq_sums = vec![0.0; dim];
            for _ in 0..n_samples {
                let sample = ddim_sample(&denoiser, &sched, steps, &[dim], &mut rng, None)?;
                for d in 0..dim {
                    sums[d] += sample.data[d];
                    sq_sums[d] += sample.data[d] * sample.data[d];
                }
            }
            let n = n_samples as f64;
            let means: Vec<String> = sums.iter().map(|s| format_sig(s / n, 6)).collect();
            let vars: Vec<String> = sums
                .iter()
                .zip(&sq_sums)
                .map(|(s, q)| {
                    let m = s / n;
                    format_sig(q / n - m * m, 6)
                })
                .collect();
            println!("mean={}", means.join(","));
            println!("var={}", vars.join(","));
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn format_sig_fixed_notation() {
        assert_eq!(format_sig(0.0, 6), "0.00000");
        assert_eq!(format_sig(std::f64::consts::LN_2, 6), "0.693147");
        assert_eq!(format_sig(123456.7, 6), "123457");
        assert_eq!(format_sig(0.0001234567, 6), "0.000123457");
        assert_eq!(format_sig(-2.5, 6), "-2.50000");
        assert!(!format_sig(1.0e-7, 6).contains('e'));
    }

    #[test]
    fn no_args_is_usage_error() {
        assert_eq!(run(["rangeview"]), 1);
    }

    #[test]
    fn unknown_subcommand_is_usage_error() {
        assert_eq!(run(["rangeview", "frobnicate"]), 1);
    }

    #[test]
    fn help_exits_zero() {
        assert_eq!(run(["rangeview", "--help"]), 0);
    }

    #[test]
    fn missing_file_is_data_error() {
        assert_eq!(
            run([
                "rangeview",
                "chamfer",
                "/nonexistent/a.bin",
                "/nonexistent/b.bin"
            ]),
            2
        );
    }
}
