use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "loewner-lab", version, about = "Loewner-based identification, control design and stability analysis")]
pub struct Cli {
    /// Directory for output artifacts (created if missing).
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample the built-in plant on a log grid; writes plant.csv.
    Sample {
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        plant: PlantArgs,
    },
    /// Fit a Loewner model to frequency data; writes realization.json and approximation.json.
    Approximate {
        /// Frequency data CSV (omega_rad_s,re,im).
        data: PathBuf,
        #[arg(long, default_value_t = loewner_lab::loewner::DEFAULT_SVD_TOL)]
        svd_tol: f64,
        /// Fixed order instead of the detected rank.
        #[arg(long)]
        order: Option<usize>,
    },
    /// Data-driven controller from a reference model; writes controller.json and sweep.csv.
    Lddc {
        /// Plant frequency data CSV.
        data: PathBuf,
        /// `m1`, `m2`, or a realization JSON of the reference model.
        #[arg(long, default_value = "m2")]
        reference: String,
        /// Tolerance of the plant fit used by `m2`.
        #[arg(long, default_value_t = loewner_lab::case_study::APPROXIMANT_TOL)]
        svd_tol: f64,
        /// Plant model order used by `m2`; 0 selects the detected rank.
        #[arg(long, default_value_t = loewner_lab::case_study::APPROXIMANT_ORDER)]
        model_order: usize,
        /// Controller order to export (smallest safe order, else 1).
        #[arg(long)]
        order: Option<usize>,
        /// Largest order of the reduction sweep.
        #[arg(long, default_value_t = 20)]
        max_order: usize,
        /// PI gains closing the loop of `m2`.
        #[arg(long, default_value_t = loewner_lab::case_study::DESIGN_PI.0)]
        kp: f64,
        #[arg(long, default_value_t = loewner_lab::case_study::DESIGN_PI.1)]
        ki: f64,
    },
    /// Weighted PI synthesis on a realization; writes pi.json and sensitivity CSVs.
    Synth {
        /// Plant realization JSON.
        realization: PathBuf,
        /// Starting gains.
        #[arg(long, default_value_t = loewner_lab::case_study::DESIGN_PI.0)]
        kp: f64,
        #[arg(long, default_value_t = loewner_lab::case_study::DESIGN_PI.1)]
        ki: f64,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        plant: PlantArgs,
    },
    /// Stability tag of a plant or of a delayed feedback loop; writes stability.json.
    Mfsa {
        #[command(flatten)]
        lp: LoopArgs,
        /// Loop delay in seconds.
        #[arg(long, default_value_t = 0.0)]
        tau: f64,
    },
    /// Stability tag over a range of loop delays; writes sweep.csv and nyquist.csv.
    DelaySweep {
        #[command(flatten)]
        lp: LoopArgs,
        #[arg(long, default_value_t = 4.6)]
        tau_min: f64,
        #[arg(long, default_value_t = 5.5)]
        tau_max: f64,
        #[arg(long, default_value_t = 20)]
        tau_n: usize,
        /// Bisection steps refining the first unstable delay.
        #[arg(long, default_value_t = 0)]
        refine: usize,
    },
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// Number of positive frequencies.
    #[arg(long, visible_alias = "n", default_value_t = loewner_lab::case_study::GRID_POINTS)]
    pub grid_n: usize,
    /// Lowest frequency in rad/s [default: 2 pi 1e-2].
    #[arg(long)]
    pub wmin: Option<f64>,
    /// Highest frequency in rad/s [default: 2 pi].
    #[arg(long)]
    pub wmax: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PlantArgs {
    /// Domain length.
    #[arg(long)]
    pub length: Option<f64>,
    /// Actuator natural frequency in rad/s.
    #[arg(long)]
    pub omega0: Option<f64>,
    /// Actuator damping.
    #[arg(long)]
    pub damping: Option<f64>,
    /// Measurement abscissa.
    #[arg(long)]
    pub x_m: Option<f64>,
}

#[derive(Debug, Args)]
pub struct LoopArgs {
    /// `builtin` or a realization JSON.
    #[arg(long, default_value = "builtin")]
    pub plant: String,
    /// `pi:KP,KI` or a realization JSON; omit to analyse the plant alone.
    #[arg(long)]
    pub controller: Option<String>,
    #[arg(long, default_value_t = loewner_lab::mfsa::DEFAULT_EPSILON)]
    pub epsilon: f64,
    #[arg(long, default_value_t = loewner_lab::mfsa::DEFAULT_SVD_TOL)]
    pub svd_tol: f64,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub params: PlantArgs,
}
