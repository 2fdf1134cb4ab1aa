use std::path::{Path, PathBuf};

use mfcpd::evaluation::{EvalSummary, pr_metrics, sweep, ConfusionCounts, EvalConfig, SequenceCandidates, SweepConfig};
use mfcpd::experiments::{run_experiment, Dataset, ExperimentConfig};
use mfcpd::simulation::{mixture_response, pi_grid, DistributionSpec};
use mfcpd::{build_filter, confusion_with, run_pipeline, ChangePointSet, DetectionConfig, TestKind};
use serde::Serialize;

use crate::args::{
    require, Command, DetectArgs, EvaluateArgs, Experiment, FilterShapeArgs, Generator, SimulateArgs,
};
use crate::error::{CliError, CliResult};
use crate::io::{read_labels, read_predictions, read_series, with_writer, write_json, write_labels, write_series};

pub fn run(command: &Command) -> CliResult<()> {
    if let Some(path) = command.save_path() {
        write_json(Some(path), command)?;
    }
    match command {
        Command::Detect(a) => detect(a),
        Command::Simulate(a) => simulate(a),
        Command::FilterShape(a) => filter_shape(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Replay { record } => {
            let text = std::fs::read_to_string(record).map_err(|e| CliError::io(record, e))?;
            let saved: Command = serde_json::from_str(&text).map_err(|e| CliError::Parse {
                path: record.clone(),
                line: e.line(),
                msg: e.to_string(),
            })?;
            run(&saved)
        }
    }
}

#[derive(Serialize)]
struct DetectOutput<'a> {
    test: &'static str,
    n: usize,
    filtered: bool,
    bias: Option<f64>,
    alpha: Option<f64>,
    change_points: &'a ChangePointSet,
    series_offset: usize,
    threshold: Option<f64>,
    dedupe_distance: Option<usize>,
    series_length: usize,
    dim: usize,
    test_config: TestKind,
}

pub fn detect(a: &DetectArgs) -> CliResult<()> {
    let x = read_series(&a.input)?;
    let test = a.test.kind(a.seed)?;
    let threshold = a.threshold.unwrap_or(f64::NEG_INFINITY);
    let mut cfg = if a.unfiltered {
        DetectionConfig::unfiltered(a.window, threshold, a.delta.unwrap_or(a.window))
    } else {
        DetectionConfig::filtered(a.window, threshold)
    };
    cfg.bias_override = a.bias;
    let result = run_pipeline(&x, &cfg, &test)?;
    let out = DetectOutput {
        test: test.name(),
        n: a.window,
        filtered: cfg.use_filter,
        bias: result.filter.as_ref().map(|f| f.bias()),
        alpha: result.filter.as_ref().map(|f| f.alpha()),
        change_points: &result.change_points,
        series_offset: result.raw.offset(),
        threshold: a.threshold,
        dedupe_distance: (!cfg.use_filter).then_some(cfg.dedupe_distance),
        series_length: x.len(),
        dim: x.dim(),
        test_config: test,
    };
    write_json(a.output.as_deref(), &out)?;
    if let Some(path) = &a.series_output {
        with_writer(Some(path), |w| {
            writeln!(w, "t,raw,processed")?;
            for (i, (r, p)) in result.raw.values().iter().zip(result.processed.values()).enumerate() {
                writeln!(w, "{},{r},{p}", i + result.raw.offset())?;
            }
            Ok(())
        })?;
    }
    Ok(())
}

pub fn simulate(a: &SimulateArgs) -> CliResult<()> {
    let dataset = match a.generator {
        Generator::SingleCp1d => Dataset::SingleCp1d,
        Generator::SingleCp2d => Dataset::SingleCp2d,
        Generator::ScaleDoubling => Dataset::ScaleDoubling { cubic: a.cubic },
        Generator::Alternating => Dataset::Alternating {
            segment_len: a.segment_len,
            num_segments: a.segments,
        },
    };
    let x = dataset.generate(a.seed)?;
    write_series(&a.output, &x)?;
    let labels = a.labels.clone().unwrap_or_else(|| a.output.with_extension("labels"));
    write_labels(&labels, x.labels())
}

pub fn filter_shape(a: &FilterShapeArgs) -> CliResult<()> {
    let test = a.test.kind(a.seed)?;
    let filter = build_filter(test, a.window)?;
    with_writer(a.output.as_deref(), |w| filter.write_taps_csv(w))?;
    if a.empirical {
        let path = a
            .curve_output
            .as_deref()
            .ok_or_else(|| CliError::Usage("--empirical needs --curve-output".into()))?;
        require(a.step > 0.0 && a.step <= 1.0, "--step must lie in (0, 1]")?;
        let p = DistributionSpec::gaussian(0.0, 1.0)?;
        let q = DistributionSpec::gaussian(a.shift, 1.0)?;
        let curve = mixture_response(&test, &p, &q, a.window, a.reps, &pi_grid(a.step), a.seed)?;
        with_writer(Some(path), |w| {
            writeln!(w, "pi,mean,std_error,asymptote,ratio,expected")?;
            for ((&pi, m), se) in curve.pi_grid.iter().zip(&curve.mean_stat).zip(&curve.std_error) {
                writeln!(
                    w,
                    "{pi},{m},{se},{},{},{}",
                    curve.asymptote,
                    m / curve.asymptote,
                    curve.shape(pi)
                )?;
            }
            Ok(())
        })?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SequenceCounts {
    predictions: PathBuf,
    labels: PathBuf,
    counts: ConfusionCounts,
}

#[derive(Serialize)]
struct PredictionReport {
    epsilon: usize,
    matching: mfcpd::Matching,
    aggregation: mfcpd::Aggregation,
    sequences: Vec<SequenceCounts>,
    counts: ConfusionCounts,
    precision: f64,
    recall: f64,
    f1: f64,
    au_prc: f64,
    best_f1: f64,
    curve: EvalSummary,
}

#[derive(Serialize)]
struct Cell {
    test: &'static str,
    n: usize,
    filtered: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    cubic: Option<bool>,
    sequences: usize,
    epsilon: usize,
    au_prc: f64,
    best_f1: f64,
}

#[derive(Serialize)]
struct ExperimentReport {
    experiment: Experiment,
    seed: u64,
    aggregation: mfcpd::Aggregation,
    matching: mfcpd::Matching,
    cells: Vec<Cell>,
}

pub fn evaluate(a: &EvaluateArgs) -> CliResult<()> {
    match a.experiment {
        Some(e) => evaluate_experiment(a, e),
        None => evaluate_predictions(a),
    }
}

fn evaluate_predictions(a: &EvaluateArgs) -> CliResult<()> {
    require(!a.labels.is_empty(), "--labels is required without --experiment")?;
    require(
        a.predictions.len() == a.labels.len(),
        "give one --predictions file per --labels file",
    )?;
    let epsilon = a
        .epsilon
        .ok_or_else(|| CliError::Usage("--epsilon is required when scoring predictions".into()))?;
    let eval = EvalConfig {
        epsilon,
        matching: a.matching(),
    };
    let mut pairs: Vec<(&Path, &Path)> = a
        .predictions
        .iter()
        .map(PathBuf::as_path)
        .zip(a.labels.iter().map(PathBuf::as_path))
        .collect();
    pairs.sort();
    let mut seqs = Vec::new();
    let mut sequences = Vec::new();
    let mut total = ConfusionCounts::default();
    for (pred_path, label_path) in pairs {
        let truth = read_labels(label_path)?;
        let pred = read_predictions(pred_path)?;
        let counts = confusion_with(&pred, &truth, &eval);
        total = total + counts;
        sequences.push(SequenceCounts {
            predictions: pred_path.to_path_buf(),
            labels: label_path.to_path_buf(),
            counts,
        });
        seqs.push(SequenceCandidates {
            candidates: pred,
            truth,
        });
    }
    let cfg = SweepConfig {
        eval,
        dedupe: None,
        aggregation: a.aggregation.into(),
    };
    let report = sweep(&seqs, &cfg)?;
    if let Some(path) = &a.curve {
        with_writer(Some(path), |w| report.curve.write_csv(w))?;
    }
    let (precision, recall, f1) = pr_metrics(&total);
    write_json(
        a.output.as_deref(),
        &PredictionReport {
            epsilon,
            matching: eval.matching,
            aggregation: cfg.aggregation,
            sequences,
            counts: total,
            precision,
            recall,
            f1,
            au_prc: report.au_prc,
            best_f1: report.best_f1,
            curve: report.curve.summary(),
        },
    )
}

struct Plan {
    datasets: Vec<(Dataset, Option<bool>)>,
    tests: Vec<TestKind>,
    windows: Vec<usize>,
    sequences: usize,
    modes: Vec<bool>,
}

fn evaluate_experiment(a: &EvaluateArgs, e: Experiment) -> CliResult<()> {
    let swqt = TestKind::swqt(a.projections, a.seed)?;
    let mmd = TestKind::mmd2(a.bandwidth)?;
    let plan = match e {
        Experiment::Table2 => Plan {
            datasets: vec![(Dataset::SingleCp1d, None)],
            tests: vec![TestKind::Wqt, mmd, TestKind::W1dt, TestKind::Ks],
            windows: vec![50, 100, 150],
            sequences: 40,
            modes: vec![false, true],
        },
        Experiment::Table3 => Plan {
            datasets: vec![(Dataset::SingleCp2d, None)],
            tests: vec![swqt, mmd],
            windows: vec![50, 100, 150],
            sequences: 40,
            modes: vec![false, true],
        },
        Experiment::ScaleDoubling => Plan {
            datasets: vec![
                (Dataset::ScaleDoubling { cubic: false }, Some(false)),
                (Dataset::ScaleDoubling { cubic: true }, Some(true)),
            ],
            tests: vec![TestKind::Wqt, TestKind::W1dt],
            windows: vec![100],
            sequences: 10,
            modes: vec![true],
        },
    };
    let Plan { datasets, tests, windows, sequences, modes } = plan;
    let windows = if a.window.is_empty() { windows } else { a.window.clone() };
    let sequences = a.sequences.unwrap_or(sequences);
    let mut cells = Vec::new();
    for &(dataset, cubic) in &datasets {
        for test in &tests {
            for &n in &windows {
                for &filtered in &modes {
                    let mut cfg = ExperimentConfig::new(dataset, *test, n, filtered, sequences, a.seed);
                    cfg.epsilon = a.epsilon.unwrap_or(n);
                    cfg.aggregation = a.aggregation.into();
                    cfg.matching = a.matching();
                    let r = run_experiment(&cfg)?;
                    cells.push(Cell {
                        test: test.name(),
                        n,
                        filtered,
                        cubic,
                        sequences,
                        epsilon: cfg.epsilon,
                        au_prc: r.au_prc,
                        best_f1: r.best_f1,
                    });
                }
            }
        }
    }
    write_json(
        a.output.as_deref(),
        &ExperimentReport {
            experiment: e,
            seed: a.seed,
            aggregation: a.aggregation.into(),
            matching: a.matching(),
            cells,
        },
    )
}
