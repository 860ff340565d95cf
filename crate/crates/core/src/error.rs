//! Crate-wide error type.

use std::path::PathBuf;

/// Errors produced by any rangeview operation.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("point cloud is empty")]
    EmptyPointCloud,

    #[error("beam index {index} out of range for model with {count} beams")]
    BeamIndexOutOfRange { index: usize, count: usize },

    #[error("degenerate configuration: {0}")]
    DegenerateConfig(String),

    #[error("requested {requested} beams but only {found} peaks found in accumulator")]
    InsufficientPeaks { requested: usize, found: usize },

    #[error("duplicate beam pitch {pitch} rad after peak extraction")]
    DuplicatePitch { pitch: f64 },

    #[error("elevation undefined for point on the sensor axis (x = y = 0)")]
    UndefinedElevation,

    #[error("range image has {image_rows} rows but beam model has {model_beams} beams")]
    BeamCountMismatch { image_rows: usize, model_beams: usize },

    #[error("shape mismatch: expected {expected:?}, got {actual:?}")]
    ShapeMismatch {
        expected: Vec<usize>,
        actual: Vec<usize>,
    },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("diffusion step {t} out of range 1..={t_max}")]
    StepOutOfRange { t: usize, t_max: usize },

    #[error("invalid noise schedule bounds: start={start}, end={end}, steps={steps}")]
    InvalidScheduleBounds { start: f64, end: f64, steps: usize },

    #[error("invalid sampler step count {n_steps} for schedule of {t_max} steps")]
    InvalidSampleSteps { n_steps: usize, t_max: usize },

    #[error("negative variance {0}")]
    NegativeVariance(f64),

    #[error("noise must be zero at the final reverse step (t = 1)")]
    NonzeroNoiseAtFinalStep,

    #[error("kernel dimensions must be odd, got {height}x{width}")]
    EvenKernel { height: usize, width: usize },

    #[error("kernel spans {kernel} rows but image has only {rows}")]
    KernelTallerThanImage { kernel: usize, rows: usize },

    #[error("feature map has {actual} channels, expected {expected}")]
    ChannelMismatch { expected: usize, actual: usize },

    #[error("empty score list")]
    EmptyScores,

    #[error("empty training batch")]
    EmptyBatch,

    #[error("empty histogram set")]
    EmptyHistogramSet,

    #[error("histogram grids do not match ({left_bins}x{left_bins} vs {right_bins}x{right_bins} or different bounds)")]
    GridMismatch { left_bins: usize, right_bins: usize },

    #[error("histogram has zero total mass")]
    ZeroMassHistogram,

    #[error("degenerate bounds: min must be strictly below max")]
    DegenerateBounds,

    #[error("need at least 2 samples for covariance, got {0}")]
    InsufficientSamples(usize),

    #[error("non-finite statistics")]
    NonFiniteStats,

    #[error("no valid pixels under the selected policy")]
    NoValidPixels,

    #[error("eigendecomposition failed to converge after {sweeps} sweeps")]
    EigenNonConvergence { sweeps: usize },

    #[error("{value} is not divisible by factor {factor}")]
    NonDivisorFactor { value: usize, factor: usize },

    #[error("{path}: file size {size} is not a multiple of {record} bytes")]
    BadFileSize {
        path: PathBuf,
        size: u64,
        record: u64,
    },

    #[error("{path}: non-finite value in record {index}")]
    NonFiniteRecord { path: PathBuf, index: usize },

    #[error("{path}: bad magic, expected {expected:?}, got {actual:?}")]
    BadMagic {
        path: PathBuf,
        expected: [u8; 4],
        actual: [u8; 4],
    },

    #[error("{path}: expected {expected} payload bytes, got {actual}")]
    PayloadLength {
        path: PathBuf,
        expected: u64,
        actual: u64,
    },

    #[error("{path}: mask byte at index {index} is {value}, expected 0 or 1")]
    InvalidMaskValue {
        path: PathBuf,
        index: usize,
        value: u8,
    },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
