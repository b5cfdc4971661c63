use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "ksparse", version, about = "Clustering with sparse feature selection")]
pub struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Print wall-clock time per phase to stderr.
    #[arg(long, global = true)]
    pub time: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cluster one matrix at one l1 budget and write a result document.
    Cluster(ClusterArgs),
    /// Cluster at several budgets and write one table row per budget.
    Sweep(SweepArgs),
    /// Generate a synthetic dataset (matrix.csv, labels.txt, informative.txt).
    Synth(SynthArgs),
    /// Score predicted labels against reference labels.
    Eval(EvalArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Delimiter {
    Comma,
    Tab,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Normalize {
    Cpm,
    Spectral,
    None,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Samples-by-features matrix (comma or tab separated).
    #[arg(long)]
    pub input: PathBuf,

    /// The input has no header line of feature names.
    #[arg(long)]
    pub no_header: bool,

    /// The input has no leading column of sample ids.
    #[arg(long)]
    pub no_rownames: bool,

    /// Field separator (default: detected from the first line).
    #[arg(long, value_enum)]
    pub delimiter: Option<Delimiter>,

    /// Reference labels, one integer per line; enables accuracy/ARI/NMI.
    #[arg(long)]
    pub labels: Option<PathBuf>,

    /// Preprocessing steps, applied as filter, then cpm, then spectral.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "spectral")]
    pub normalize: Vec<Normalize>,

    /// Keep features reaching this count in at least --filter-min-cells samples.
    #[arg(long, requires = "filter_min_cells")]
    pub filter_min_count: Option<f64>,

    /// Minimum number of samples for --filter-min-count.
    #[arg(long, requires = "filter_min_count")]
    pub filter_min_cells: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    /// Number of clusters.
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
    pub k: u64,

    /// Projected dimension (default: k + 4).
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub dbar: Option<u64>,

    /// Outer alternating loops.
    #[arg(long, default_value_t = 10)]
    pub loops: usize,

    /// Inner projected-gradient iterations per loop.
    #[arg(long, default_value_t = 300)]
    pub inner_iters: usize,

    /// k-means++ replicates per clustering step.
    #[arg(long, default_value_t = 40, value_parser = clap::value_parser!(u64).range(1..))]
    pub replicates: u64,

    /// Gradient step in units of 1 / sigma_max(X)^2.
    #[arg(long, default_value_t = 1.0, value_parser = positive)]
    pub gamma: f64,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Use plain projected gradient instead of the accelerated solver.
    #[arg(long)]
    pub no_accel: bool,

    /// Stop once the selected features are unchanged for two loops.
    #[arg(long)]
    pub stop_on_stable: bool,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    #[command(flatten)]
    pub input: InputArgs,

    #[command(flatten)]
    pub solver: SolverArgs,

    /// l1 budget on the weight matrix.
    #[arg(long, value_parser = positive)]
    pub eta: f64,

    /// Result document (TOML).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub input: InputArgs,

    #[command(flatten)]
    pub solver: SolverArgs,

    /// Budgets to try, comma separated.
    #[arg(long, value_delimiter = ',', value_parser = positive,
          required_unless_present = "eta_range", conflicts_with = "eta_range")]
    pub eta: Vec<f64>,

    /// Inclusive range start:stop:step.
    #[arg(long, value_parser = parse_range)]
    pub eta_range: Option<EtaRange>,

    /// Output table (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 600)]
    pub m: usize,

    #[arg(long, default_value_t = 5000)]
    pub d: usize,

    #[arg(long, default_value_t = 4)]
    pub k: usize,

    #[arg(long, default_value_t = 100)]
    pub n_informative: usize,

    /// Mean step between consecutive clusters on informative features.
    #[arg(long, default_value_t = 2.0)]
    pub shift: f64,

    #[arg(long, default_value_t = 1.0)]
    pub noise_sd: f64,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Output directory (created if missing).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Predicted labels, one integer per line, or a `.toml` result document.
    pub pred: PathBuf,

    /// Reference labels, one integer per line.
    pub truth: PathBuf,
}

fn positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(format!("must be positive, got {s}"))
    }
}

/// Budgets expanded from `start:stop:step`.
#[derive(Debug, Clone, PartialEq)]
pub struct EtaRange(pub Vec<f64>);

/// `start:stop:step`, inclusive of `stop` up to rounding.
pub fn parse_range(s: &str) -> Result<EtaRange, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [start, stop, step] = parts[..] else {
        return Err("expected start:stop:step".into());
    };
    let (start, stop, step) = (positive(start)?, positive(stop)?, positive(step)?);
    if stop < start {
        return Err("stop is below start".into());
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok(EtaRange((0..=n).map(|i| start + i as f64 * step).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn range_expansion() {
        let r = parse_range("100:1000:100").unwrap().0;
        assert_eq!(r.len(), 10);
        assert_eq!(r[0], 100.0);
        assert_eq!(r[9], 1000.0);
        assert_eq!(parse_range("0.1:0.3:0.1").unwrap().0.len(), 3);
        assert_eq!(parse_range("5:5:1").unwrap().0, vec![5.0]);
        assert!(parse_range("5:1:1").is_err());
        assert!(parse_range("0:1:1").is_err());
        assert!(parse_range("1:2").is_err());
    }

    #[test]
    fn eta_must_be_positive() {
        assert!(positive("0").is_err());
        assert!(positive("-1").is_err());
        assert!(positive("nan").is_err());
        assert_eq!(positive("2.5").unwrap(), 2.5);
    }
}
