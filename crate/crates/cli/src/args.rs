use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "hazekit", version, about = "Single-image dehazing toolkit")]
pub struct Cli {
    /// `key = value` file; explicit flags override it.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Print the effective configuration and exit.
    #[arg(long, global = true)]
    pub print_config: bool,

    /// Worker threads for commands that process several images.
    #[arg(long, global = true, default_value_t = 1, value_name = "N")]
    pub jobs: usize,

    #[command(flatten)]
    pub tunables: Tunables,

    #[command(subcommand)]
    pub command: Command,
}

/// Pipeline parameters. Each one overrides the same key of `--config`.
#[derive(Args, Debug, Default, Clone)]
#[command(next_help_heading = "Pipeline parameters")]
pub struct Tunables {
    /// Filter radius of the layer decomposition.
    #[arg(long, global = true)]
    pub radius: Option<usize>,
    /// Regularization of the layer decomposition.
    #[arg(long, global = true)]
    pub lambda: Option<f64>,
    /// Variance offset of the edge weight.
    #[arg(long, global = true)]
    pub eps: Option<f64>,
    /// Fraction of haze removed by the prior estimator.
    #[arg(long, global = true)]
    pub omega: Option<f64>,
    #[arg(long, global = true)]
    pub patch_radius: Option<usize>,
    /// Smallest quad-tree block side for the airlight search.
    #[arg(long, global = true)]
    pub min_block: Option<usize>,
    /// Gate midpoint sits at t = 1/eta.
    #[arg(long, global = true)]
    pub eta: Option<f64>,
    /// Transmission floor in the recovery denominator.
    #[arg(long, global = true)]
    pub t0: Option<f64>,
    /// Gate steepness.
    #[arg(long, global = true)]
    pub slope: Option<f64>,
    /// Lower clamp of estimated transmission.
    #[arg(long, global = true)]
    pub t_floor: Option<f64>,
    /// Colour-loss weight.
    #[arg(long, global = true)]
    pub wc: Option<f64>,
    #[arg(long, global = true)]
    pub lr: Option<f64>,
    #[arg(long, global = true)]
    pub steps: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub batch: Option<usize>,
    /// Stride-2 convolutions in the transmission network.
    #[arg(long, global = true)]
    pub stages: Option<usize>,
    #[arg(long, global = true)]
    pub grid_x: Option<usize>,
    #[arg(long, global = true)]
    pub grid_y: Option<usize>,
    #[arg(long, global = true)]
    pub grid_depth: Option<usize>,
}

impl Tunables {
    /// `(config key, flag value)` for every flag that was given.
    pub fn overrides(&self) -> Vec<(&'static str, String)> {
        fn s<T: ToString>(v: &Option<T>) -> Option<String> {
            v.as_ref().map(ToString::to_string)
        }
        [
            ("radius", s(&self.radius)),
            ("lambda", s(&self.lambda)),
            ("eps", s(&self.eps)),
            ("omega", s(&self.omega)),
            ("patch_radius", s(&self.patch_radius)),
            ("min_block", s(&self.min_block)),
            ("eta", s(&self.eta)),
            ("t0", s(&self.t0)),
            ("slope", s(&self.slope)),
            ("t_floor", s(&self.t_floor)),
            ("wc", s(&self.wc)),
            ("lr", s(&self.lr)),
            ("steps", s(&self.steps)),
            ("seed", s(&self.seed)),
            ("batch", s(&self.batch)),
            ("stages", s(&self.stages)),
            ("grid_x", s(&self.grid_x)),
            ("grid_y", s(&self.grid_y)),
            ("grid_depth", s(&self.grid_depth)),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.map(|v| (k, v)))
        .collect()
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum EstimatorKind {
    Prior,
    Learned,
}

#[derive(Args, Debug, Clone)]
pub struct EstimatorArgs {
    #[arg(long, value_enum, default_value_t = EstimatorKind::Prior)]
    pub estimator: EstimatorKind,
    /// Trained model file, required by the learned estimator.
    #[arg(long, value_name = "FILE")]
    pub model: Option<PathBuf>,
    /// Invert the whole image instead of the gated layer blend.
    #[arg(long)]
    pub classic: bool,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Remove haze from one or more images.
    Dehaze {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Output file (single input only).
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Directory for `<stem>.png` outputs.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[command(flatten)]
        estimator: EstimatorArgs,
        /// Write the transmission map (single input only).
        #[arg(long, value_name = "FILE")]
        dump_t: Option<PathBuf>,
        /// Write the noise gain map 1/max(t, t0), scaled by t0 (single input only).
        #[arg(long, value_name = "FILE")]
        dump_gain: Option<PathBuf>,
    },
    /// Split images into `<stem>_base.png` and `<stem>_detail.png`.
    Decompose {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Estimate the airlight of an image from its base layer.
    Airlight {
        input: PathBuf,
        /// Write the image with the search path outlined.
        #[arg(long, value_name = "FILE")]
        debug: Option<PathBuf>,
    },
    /// Build a hazy/clean dataset from clean images and depth maps, or from
    /// procedural scenes.
    Synthesize {
        /// Clean images; matched to `--depth` by file stem.
        #[arg(long, requires = "depth")]
        clean: Option<PathBuf>,
        /// Depth maps (16-bit PNG or PFM), normalized per image.
        #[arg(long)]
        depth: Option<PathBuf>,
        /// Generate this many procedural scenes instead of reading `--clean`.
        #[arg(long, conflicts_with = "clean")]
        generate: Option<usize>,
        /// Side of generated scenes.
        #[arg(long, default_value_t = 128)]
        size: usize,
        /// Scattering coefficient; drawn per image from [0.5, 2.5] if absent.
        #[arg(long)]
        beta: Option<f64>,
        /// `v` or `r,g,b`; drawn per image from [0.7, 1.0]^3 if absent.
        #[arg(long)]
        airlight: Option<String>,
        #[arg(long, default_value_t = 0.0)]
        noise_sigma: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the learned transmission estimator.
    Train {
        /// Dataset root with `hazy/` and `clean/`.
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Start from this model instead of a fresh one.
        #[arg(long, value_name = "FILE")]
        init: Option<PathBuf>,
        /// Per-step loss CSV.
        #[arg(long, value_name = "FILE")]
        trace: Option<PathBuf>,
        /// Print the loss every N steps (0 = never).
        #[arg(long, default_value_t = 0)]
        log_every: usize,
    },
    /// Score dehazed results, or print the training loss of one pair.
    Evaluate {
        /// Dataset root with `hazy/` and `clean/`; prints `name,ssim,psnr`.
        #[arg(long, required_unless_present = "loss", conflicts_with = "loss")]
        pairs: Option<PathBuf>,
        /// Score the `hazy/` images as given instead of dehazing them.
        #[arg(long)]
        as_is: bool,
        /// Print L_r, L_c and L for PRED against TRUTH.
        #[arg(long, num_args = 2, value_names = ["PRED", "TRUTH"])]
        loss: Option<Vec<PathBuf>>,
        /// Write the CSV here instead of stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        estimator: EstimatorArgs,
    },
    /// Compare output noise of classic and gated recovery on a flat scene.
    NoiseAnalyze {
        #[arg(long, default_value_t = 96)]
        size: usize,
        #[arg(long, default_value_t = 0.02)]
        sigma: f64,
        #[arg(long, default_value_t = 20)]
        trials: u64,
        /// Transmission values to test.
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.15,0.2,0.3,0.5,0.8")]
        t: Vec<f64>,
    },
    /// Center-crop and downsample a paired dataset.
    Prepare {
        #[arg(long)]
        src: PathBuf,
        #[arg(long)]
        dst: PathBuf,
        #[arg(long, default_value_t = 480)]
        crop: usize,
        #[arg(long, default_value_t = 256)]
        down: usize,
        /// Add a mirrored copy of every pair.
        #[arg(long)]
        mirror: bool,
    },
}
