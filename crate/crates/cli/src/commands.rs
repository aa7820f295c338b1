use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use classifim::baselines::{
    fim_best, fim_const, fim_naive, kernel_pca, modw_peaks, modw_train_slice, spca_kernel, spca_peaks, HeadMode,
    ModwConfig, SpcaPeaksConfig,
};
use classifim::classifier::{epoch_seed, loss, test_cross_entropy, train_with_history};
use classifim::dataset::{pair_permutation, sample_dataset, split};
use classifim::estimator::estimate_fim;
use classifim::manifold::{exact_fim, format_f64, make_manifold};
use classifim::metrics::{compare, evaluate};
use classifim::peaks::{evaluate_peaks, truth_budget, PeaksReport, Slice};
use classifim::{
    BcModel, Dataset, Error, FimField, GridSpec, MetricReport, PairBudget, Result, StatisticalManifold, TrainConfig,
};

use crate::manifest::RunManifest;
use crate::{
    BaselineArgs, Command, EstimateArgs, EvaluateArgs, GenerateArgs, Heads, Method, PeaksArgs, SplitArgs, TrainArgs,
};

pub fn run(command: Command, threads: usize) -> Result<()> {
    let start = Instant::now();
    let mut manifest = match command {
        Command::Generate(a) => generate(a, threads)?,
        Command::Train(a) => train(a, threads)?,
        Command::Estimate(a) => estimate(a, threads)?,
        Command::Evaluate(a) => evaluate_cmd(a, threads)?,
        Command::Baseline(a) => baseline(a, threads)?,
        Command::Peaks(a) => peaks(a, threads)?,
    };
    manifest.write(start.elapsed())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::InvalidArgument(format!("cannot open {}: {e}", path.display())))
}

fn read_dataset(path: &Path) -> Result<Dataset> {
    Dataset::read_jsonl(open(path)?)
}

fn read_field(path: &Path) -> Result<FimField> {
    FimField::read_csv(open(path)?)
}

fn write_field(field: &FimField, path: &Path) -> Result<()> {
    let mut out = create(path)?;
    field.write_csv(&mut out)?;
    out.flush()?;
    Ok(())
}

fn write_json<T: serde::Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn manifold_of(ds: &Dataset) -> Result<StatisticalManifold> {
    make_manifold(ds.sm_name(), ds.n_bits(), ds.shape_params())
}

/// The training part of `ds` when a test fraction is given, else all of it.
fn train_part(ds: Dataset, split_args: &SplitArgs) -> Result<(Dataset, Option<Dataset>)> {
    match split_args.test_fraction {
        Some(f) => {
            let (train, test) = split(&ds, f, split_args.split_seed)?;
            Ok((train, Some(test)))
        }
        None => Ok((ds, None)),
    }
}

fn record_split(m: &mut RunManifest, s: &SplitArgs) {
    if let Some(f) = s.test_fraction {
        m.flag("test_fraction", f).flag("split_seed", s.split_seed).seed(s.split_seed);
    }
}

fn border_margin(spec: &str, grid: &GridSpec, axis: usize) -> Result<f64> {
    if spec == "auto" {
        if axis >= grid.param_dim() {
            return Err(Error::InvalidArgument(format!("axis {axis} out of range")));
        }
        return Ok(grid.spacing(axis));
    }
    match spec.parse::<f64>() {
        Ok(v) if v >= 0.0 => Ok(v),
        _ => Err(Error::InvalidArgument(format!(
            "border margin must be `auto` or a non-negative number, got `{spec}`"
        ))),
    }
}

fn generate(a: GenerateArgs, threads: usize) -> Result<RunManifest> {
    let mut shape = BTreeMap::new();
    if let Some(k) = a.k {
        shape.insert("k".to_string(), k);
    }
    let sm = make_manifold(&a.sm, a.n_bits, &shape)?;
    let grid = GridSpec::new(a.grid.clone())?;
    let ds = sample_dataset(&sm, &grid, a.samples_per_point, a.seed)?;
    let mut out = create(&a.out)?;
    ds.write_jsonl(&mut out)?;
    out.flush()?;

    let mut m = RunManifest::new("generate", threads);
    m.flag("sm", &a.sm)
        .flag("n_bits", a.n_bits)
        .flag("grid", a.grid.iter().map(usize::to_string).collect::<Vec<_>>().join(","))
        .flag("samples_per_point", a.samples_per_point)
        .flag("seed", a.seed)
        .seed(a.seed)
        .output(&a.out);
    if let Some(k) = a.k {
        m.flag("k", k);
    }
    if let Some(truth) = &a.truth {
        write_field(&exact_fim(&sm, &grid)?, truth)?;
        m.output(truth);
    }
    Ok(m)
}

fn train(a: TrainArgs, threads: usize) -> Result<RunManifest> {
    let (train_ds, test_ds) = train_part(read_dataset(&a.dataset)?, &a.split)?;
    let cfg = TrainConfig {
        epochs: a.epochs,
        batch_size: a.batch_size,
        l2: a.l2,
        max_lr: a.max_lr,
        seed: a.seed,
        ..TrainConfig::default()
    };
    cfg.validate()?;

    let init = BcModel::new(train_ds.n_bits(), train_ds.param_dim(), &a.arch, a.seed);
    let first = pair_permutation(&train_ds, epoch_seed(a.seed, 0));
    if !first.is_empty() {
        println!("epoch 0 train_ce {}", format_f64(loss(&init, &train_ds, &first, 0.0)?));
    }
    let report = train_with_history(&train_ds, &cfg, &a.arch, |epoch, ce| {
        println!("epoch {} train_ce {}", epoch + 1, format_f64(ce));
    })?;
    if let Some(test) = &test_ds {
        println!("test_ce {}", format_f64(test_cross_entropy(&report.model, test, a.seed)?));
    }
    let mut out = create(&a.out)?;
    report.model.write_json(&mut out)?;
    out.flush()?;

    let mut m = RunManifest::new("train", threads);
    m.flag("epochs", a.epochs)
        .flag("batch_size", a.batch_size)
        .flag("l2", a.l2)
        .flag("max_lr", a.max_lr)
        .flag("seed", a.seed)
        .flag("arch", a.arch.iter().map(usize::to_string).collect::<Vec<_>>().join(","))
        .seed(a.seed)
        .input(&a.dataset)
        .output(&a.out);
    record_split(&mut m, &a.split);
    Ok(m)
}

fn estimate(a: EstimateArgs, threads: usize) -> Result<RunManifest> {
    let model = BcModel::read_json(open(&a.model)?)?;
    let (ds, _) = train_part(read_dataset(&a.dataset)?, &a.split)?;
    if model.n_bits() != ds.n_bits() {
        return Err(Error::Mismatch(format!(
            "model expects {} bits, dataset has {}",
            model.n_bits(),
            ds.n_bits()
        )));
    }
    write_field(&estimate_fim(&model, &ds)?, &a.out)?;

    let mut m = RunManifest::new("estimate", threads);
    m.input(&a.model).input(&a.dataset).output(&a.out);
    record_split(&mut m, &a.split);
    Ok(m)
}

fn read_reports(path: &Path) -> Result<Vec<MetricReport>> {
    let value: serde_json::Value = serde_json::from_reader(open(path)?)?;
    if value.is_array() {
        Ok(serde_json::from_value(value)?)
    } else {
        Ok(vec![serde_json::from_value(value)?])
    }
}

fn evaluate_cmd(a: EvaluateArgs, threads: usize) -> Result<RunManifest> {
    let mut m = RunManifest::new("evaluate", threads);
    if let Some(files) = &a.compare {
        let (ra, rb) = (read_reports(&files[0])?, read_reports(&files[1])?);
        let rows = compare(&ra, &rb, a.decimals)?;
        for r in &rows {
            println!(
                "{:<12} {:>14} {:>14} t={} p={} n={}",
                r.metric,
                r.formatted_a,
                r.formatted_b,
                format_f64(r.t),
                format_f64(r.p),
                r.n
            );
        }
        write_json(&rows, &a.out)?;
        m.input(&files[0]).input(&files[1]).output(&a.out);
        if let Some(d) = a.decimals {
            m.flag("decimals", d);
        }
        return Ok(m);
    }
    let (pred_path, truth_path) = match (&a.pred, &a.truth) {
        (Some(p), Some(t)) => (p, t),
        _ => return Err(Error::InvalidArgument("--pred and --truth are required".into())),
    };
    let pred = read_field(pred_path)?;
    let truth = read_field(truth_path)?;
    let budget = a.pairs.unwrap_or_else(|| PairBudget::default_for(truth.grid().len()));
    let report = evaluate(&pred, &truth, budget, a.seed)?;
    write_json(&report, &a.out)?;
    m.flag("pairs", budget)
        .flag("seed", a.seed)
        .seed(a.seed)
        .input(pred_path)
        .input(truth_path)
        .output(&a.out);
    Ok(m)
}

/// Naive midpoint estimates moved onto the grid: each point takes the mean
/// of its neighboring midpoints.
fn naive_field(ds: &Dataset) -> Result<FimField> {
    let est = fim_naive(ds, 0)?;
    let v = &est.values;
    let len = ds.grid().len();
    Ok(FimField::from_fn(ds.grid().clone(), |i, _| {
        let value = match i {
            0 => v[0],
            _ if i == len - 1 => v[len - 2],
            _ => 0.5 * (v[i - 1] + v[i]),
        };
        vec![value]
    }))
}

fn line_slice(grid: &GridSpec, axis: usize, fixed: usize, values: &[f64]) -> Result<Slice> {
    let idx = grid.line_indices(axis, fixed);
    let coords = (0..idx.len()).map(|k| grid.axis_coordinate(axis, k)).collect();
    Slice::new(axis, fixed, coords, idx.iter().map(|&i| values[i]).collect(), (0.0, 1.0))
}

fn write_embedding(path: &Path, grid: &GridSpec, components: &[Vec<f64>]) -> Result<()> {
    let mut out = create(path)?;
    let mut header: Vec<String> = (0..grid.param_dim()).map(|d| format!("lambda_{d}")).collect();
    header.extend((0..components.len()).map(|c| format!("pc_{c}")));
    writeln!(out, "{}", header.join(","))?;
    for i in 0..grid.len() {
        let mut row: Vec<String> = grid.point(i).into_iter().map(format_f64).collect();
        row.extend(components.iter().map(|c| format_f64(c[i])));
        writeln!(out, "{}", row.join(","))?;
    }
    out.flush()?;
    Ok(())
}

fn baseline(a: BaselineArgs, threads: usize) -> Result<RunManifest> {
    let ds = read_dataset(&a.dataset)?;
    let grid = ds.grid().clone();
    let mut m = RunManifest::new("baseline", threads);
    m.flag("method", format!("{:?}", a.method).to_lowercase())
        .input(&a.dataset)
        .output(&a.out);
    match a.method {
        Method::Const => {
            write_field(&fim_const(&grid, a.alpha)?, &a.out)?;
            m.flag("alpha", a.alpha);
        }
        Method::Best => write_field(&fim_best(&manifold_of(&ds)?, &grid)?, &a.out)?,
        Method::Naive => write_field(&naive_field(&ds)?, &a.out)?,
        Method::Spca | Method::Modw => {
            let truth_path = a
                .truth
                .as_ref()
                .ok_or_else(|| Error::InvalidArgument("--truth is required for peak methods".into()))?;
            let truth = read_field(truth_path)?;
            if truth.grid() != &grid {
                return Err(Error::Mismatch("truth and dataset grids differ".into()));
            }
            let margin = border_margin(&a.border_margin, &grid, a.axis)?;
            let budget = truth_budget(&truth, a.axis, a.prominence_frac, margin)?;
            let guesses = if a.method == Method::Spca {
                spca_guesses(&a, &ds, &budget, &mut m)?
            } else {
                modw_guesses(&a, &ds, &budget, &mut m)?
            };
            write_json(&PeaksReport::new(&budget, guesses, a.prominence_frac, margin)?, &a.out)?;
            m.input(truth_path)
                .flag("axis", a.axis)
                .flag("prominence_frac", a.prominence_frac)
                .flag("border_margin", margin)
                .flag("seed", a.seed)
                .seed(a.seed);
        }
    }
    Ok(m)
}

fn spca_guesses(
    a: &BaselineArgs,
    ds: &Dataset,
    budget: &classifim::PeakBudget,
    m: &mut RunManifest,
) -> Result<Vec<Vec<f64>>> {
    let grid = ds.grid();
    let kernel = spca_kernel(ds, a.tau, a.gamma)?;
    let embedding = kernel_pca(&kernel, 2.min(grid.len()))?;
    let components: Vec<Vec<f64>> = (0..embedding.eigenvalues.len()).map(|c| embedding.component(c)).collect();
    if let Some(path) = &a.embedding {
        write_embedding(path, grid, &components)?;
        m.output(path);
    }
    let cfg = SpcaPeaksConfig { sigma: a.sigma, seed: a.seed, ..SpcaPeaksConfig::default() };
    m.flag("tau", a.tau).flag("gamma", a.gamma).flag("sigma", a.sigma);
    budget
        .slices
        .iter()
        .map(|b| {
            let slices = components
                .iter()
                .map(|c| line_slice(grid, a.axis, b.index, c))
                .collect::<Result<Vec<_>>>()?;
            spca_peaks(&slices, b.n_s, &cfg)
        })
        .collect()
}

fn modw_guesses(
    a: &BaselineArgs,
    ds: &Dataset,
    budget: &classifim::PeakBudget,
    m: &mut RunManifest,
) -> Result<Vec<Vec<f64>>> {
    let cfg = ModwConfig {
        train: TrainConfig { epochs: a.epochs, batch_size: 64, seed: a.seed, ..TrainConfig::default() },
        hidden: a.arch.clone(),
        heads: match a.heads {
            Heads::Shared => HeadMode::SharedTrunk,
            Heads::Independent => HeadMode::Independent,
        },
    };
    m.flag("epochs", a.epochs)
        .flag("arch", a.arch.iter().map(usize::to_string).collect::<Vec<_>>().join(","))
        .flag("heads", format!("{:?}", a.heads).to_lowercase());
    let spacing = ds.grid().spacing(a.axis);
    budget
        .slices
        .iter()
        .map(|b| {
            let acc = modw_train_slice(ds, a.axis, b.index, &cfg)?;
            modw_peaks(&acc, b.n_s, spacing)
        })
        .collect()
}

fn peaks(a: PeaksArgs, threads: usize) -> Result<RunManifest> {
    let pred = read_field(&a.pred)?;
    let truth = read_field(&a.truth)?;
    let margin = border_margin(&a.border_margin, truth.grid(), a.axis)?;
    let report = evaluate_peaks(&pred, &truth, a.axis, a.sigma, a.prominence_frac, margin)?;
    match report.peak_rmse {
        Some(v) => println!("peak_rmse {}", format_f64(v)),
        None => println!("peak_rmse null"),
    }
    write_json(&report, &a.out)?;
    let mut m = RunManifest::new("peaks", threads);
    m.flag("axis", a.axis)
        .flag("sigma", a.sigma)
        .flag("prominence_frac", a.prominence_frac)
        .flag("border_margin", margin)
        .input(&a.pred)
        .input(&a.truth)
        .output(&a.out);
    Ok(m)
}
