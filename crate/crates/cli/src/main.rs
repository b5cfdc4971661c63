mod args;

use std::fmt::Write as _;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use ksparse::dataio::{self, CsvOptions, Dataset, SyntheticSpec};
use ksparse::{k_sparse, sweep_eta, Error, LabelAssignment, Scores, SolverConfig};

use args::{Cli, ClusterArgs, Command, Delimiter, EvalArgs, InputArgs, Normalize, SolverArgs, SweepArgs, SynthArgs};

type Outcome = Result<(), Failure>;

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter { .. } => Failure::Usage(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

struct Timer {
    enabled: bool,
    start: Instant,
}

impl Timer {
    fn new(enabled: bool) -> Self {
        Self { enabled, start: Instant::now() }
    }

    fn lap(&mut self, phase: &str) {
        if self.enabled {
            eprintln!("time\t{phase}\t{:.3}s", self.start.elapsed().as_secs_f64());
        }
        self.start = Instant::now();
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let mut timer = Timer::new(cli.time);
    let outcome = match &cli.command {
        Command::Cluster(a) => cluster(a, &mut timer),
        Command::Sweep(a) => sweep(a, &mut timer),
        Command::Synth(a) => synth(a, &mut timer),
        Command::Eval(a) => eval(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

/// Loads and preprocesses the input. Returns the dataset, the reference
/// labels if any, and whether spectral scaling is still to be done by the
/// solver.
fn prepare(input: &InputArgs, timer: &mut Timer) -> Result<(Dataset, Option<LabelAssignment>, bool), Failure> {
    let steps = &input.normalize;
    if steps.contains(&Normalize::None) && steps.len() > 1 {
        return Err(Failure::Usage("--normalize none cannot be combined with other steps".into()));
    }
    let opts = CsvOptions {
        has_header: !input.no_header,
        has_rownames: !input.no_rownames,
        delimiter: input.delimiter.map(|d| match d {
            Delimiter::Comma => b',',
            Delimiter::Tab => b'\t',
        }),
    };
    let mut data = dataio::load_matrix_csv_with(&input.input, &opts)?;
    let truth = match &input.labels {
        Some(p) => {
            let t = dataio::load_labels(p)?;
            if t.len() != data.matrix.rows() {
                return Err(Failure::Runtime(format!(
                    "{}: {} labels for {} samples",
                    p.display(),
                    t.len(),
                    data.matrix.rows()
                )));
            }
            Some(t)
        }
        None => None,
    };
    timer.lap("load");
    if let (Some(count), Some(cells)) = (input.filter_min_count, input.filter_min_cells) {
        data = data.filter_low_expressed(count, cells)?;
    }
    if steps.contains(&Normalize::Cpm) {
        data = data.cpm_normalize()?;
    }
    timer.lap("preprocess");
    Ok((data, truth, steps.contains(&Normalize::Spectral)))
}

fn config(s: &SolverArgs, data: &Dataset, spectral: bool) -> Result<SolverConfig, Failure> {
    let mut cfg = SolverConfig {
        inner_iters: s.inner_iters,
        outer_loops: s.loops,
        dbar: s.dbar.map(|d| d as usize),
        replicates: s.replicates as usize,
        seed: s.seed,
        accelerated: !s.no_accel,
        stop_on_stable_selection: s.stop_on_stable,
        normalize: spectral,
        gamma: s.gamma,
        ..SolverConfig::default()
    };
    if s.k as usize > data.matrix.rows() {
        return Err(Failure::Usage(format!(
            "--k {} exceeds the number of samples {}",
            s.k,
            data.matrix.rows()
        )));
    }
    if !spectral {
        let sigma = ksparse::spectral_norm(&data.matrix, cfg.power_iters, cfg.power_tol)?;
        cfg.gamma = s.gamma / (sigma * sigma);
    }
    Ok(cfg)
}

fn cluster(a: &ClusterArgs, timer: &mut Timer) -> Outcome {
    let (data, truth, spectral) = prepare(&a.input, timer)?;
    let cfg = config(&a.solver, &data, spectral)?;
    let mut result = k_sparse(&data.matrix, a.solver.k as usize, a.eta, &cfg)?;
    timer.lap("solve");
    if let Some(t) = &truth {
        result.metrics = Some(Scores::compute(t, &result.labels)?);
    }
    dataio::write_result(&result, &data, &a.out)?;
    timer.lap("write");

    let mut line = format!(
        "eta={}\tselected={}\tfrobenius={:.6e}\tloops={}",
        a.eta,
        result.selected_features.len(),
        result.objective_trace.last().copied().unwrap_or(f64::NAN),
        result.objective_trace.len() - 1,
    );
    if let Some(s) = &result.metrics {
        let _ = write!(line, "\taccuracy={:.6}\tari={:.6}\tnmi={:.6}", s.accuracy, s.ari, s.nmi);
    }
    println!("{line}");
    Ok(())
}

fn sweep(a: &SweepArgs, timer: &mut Timer) -> Outcome {
    let mut etas = a.eta_range.clone().map_or_else(|| a.eta.clone(), |r| r.0);
    etas.sort_by(f64::total_cmp);
    let (data, truth, spectral) = prepare(&a.input, timer)?;
    let cfg = config(&a.solver, &data, spectral)?;
    let records = sweep_eta(&data.matrix, a.solver.k as usize, &etas, truth.as_ref(), &cfg)?;
    timer.lap("solve");
    match &a.out {
        Some(p) => dataio::write_sweep_table(p, &records)?,
        None => print!("{}", dataio::render_sweep_table(&records)),
    }
    timer.lap("write");
    Ok(())
}

fn synth(a: &SynthArgs, timer: &mut Timer) -> Outcome {
    let spec = SyntheticSpec {
        m: a.m,
        d: a.d,
        k: a.k,
        n_informative: a.n_informative,
        shift: a.shift,
        noise_sd: a.noise_sd,
        seed: a.seed,
    };
    spec.validate()?;
    let data = dataio::generate_synthetic(&spec)?;
    timer.lap("generate");
    std::fs::create_dir_all(&a.out).map_err(|e| Failure::Runtime(format!("{}: {e}", a.out.display())))?;
    let dir: &Path = &a.out;
    dataio::write_matrix_csv(dir.join("matrix.csv"), &data.dataset)?;
    let labels = data.dataset.labels_true.as_ref().expect("generated labels");
    dataio::write_labels(dir.join("labels.txt"), labels.labels())?;
    dataio::write_labels(dir.join("informative.txt"), &data.informative)?;
    timer.lap("write");
    Ok(())
}

fn eval(a: &EvalArgs) -> Outcome {
    let pred = if a.pred.extension().is_some_and(|e| e == "toml") {
        let doc = dataio::read_result(&a.pred)?;
        let k = doc.labels.iter().max().map_or(1, |m| m + 1);
        LabelAssignment::new(doc.labels, k)?
    } else {
        dataio::load_labels(&a.pred)?
    };
    let truth = dataio::load_labels(&a.truth)?;
    if pred.len() != truth.len() {
        return Err(Failure::Runtime(format!(
            "{} has {} labels but {} has {}",
            a.pred.display(),
            pred.len(),
            a.truth.display(),
            truth.len()
        )));
    }
    let s = Scores::compute(&truth, &pred)?;
    println!("{:.6} {:.6} {:.6}", s.accuracy, s.ari, s.nmi);
    Ok(())
}
