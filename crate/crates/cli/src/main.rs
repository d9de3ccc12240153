use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use snn_core::classifier::majority_share;
use snn_core::config::ExperimentConfig;
use snn_core::datasets::{load_mnist, load_split, LabeledImageSet, PnmDecoder};
use snn_core::experiment::{
    evaluate, networks, prepare, run_row, run_seeds, summary_row, sweep, sweep_csv, train_models,
    Dataset, SweepAxis, RUN_HEADER, SUMMARY_HEADER,
};
use snn_core::model_io::ModelFile;
use snn_core::readout::{export_filters, extract_features, write_labels};
use snn_core::LayerKind;

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Core(#[from] snn_core::Error),
    #[error("{0}")]
    Usage(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        source: std::io::Error,
    },
}

type Result<T> = std::result::Result<T, CliError>;

fn io_err(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> CliError {
    let context = context.into();
    move |source| CliError::Io { context, source }
}

#[derive(Parser, Debug)]
#[command(name = "snn", version, about = "Train and evaluate spiking convolutional networks")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct DataArgs {
    /// Directory holding the four MNIST IDX files.
    #[arg(long, value_name = "DIR")]
    mnist: Option<PathBuf>,
    /// Root of an image tree addressed by the split lists.
    #[arg(long, value_name = "DIR", requires_all = ["train_list", "test_list"])]
    images: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    train_list: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    test_list: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Experiment configuration file; defaults apply when omitted.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the configured number of runs.
    #[arg(long)]
    runs: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a network and write the model file and training log.
    Train {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        data: DataArgs,
        /// Model path; with several runs or ensemble members an index is appended.
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit the linear readout and report recognition rate and sparsity.
    ///
    /// With --model the given files are evaluated (all together as one
    /// ensemble with --ensemble, otherwise one run each); without, every run
    /// is trained first.
    Eval {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        model: Vec<PathBuf>,
        #[arg(long)]
        ensemble: bool,
        /// Config identifier written in the first CSV column.
        #[arg(long, default_value = "default")]
        id: String,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train and evaluate across values of one parameter.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        data: DataArgs,
        /// t_target, delta_t, beta, tau or policy.
        #[arg(long)]
        axis: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        values: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render the filters of one layer as PGM/PPM images.
    ExportFilters {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        layer: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Dump the feature matrix of a dataset split.
    Features {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, required = true)]
        model: Vec<PathBuf>,
        /// Use the test split instead of the training split.
        #[arg(long)]
        test: bool,
        #[arg(long)]
        out: PathBuf,
        /// Label file, one label per line.
        #[arg(long)]
        labels: Option<PathBuf>,
    },
    /// Print a model summary.
    Inspect {
        #[arg(long)]
        model: PathBuf,
    },
}

fn load_config(common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.train.seed = s;
    }
    if let Some(r) = common.runs {
        if r == 0 {
            return Err(CliError::Usage("--runs must be positive".into()));
        }
        cfg.runs = r;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn load_sets(data: &DataArgs, cfg: &ExperimentConfig) -> Result<(LabeledImageSet, LabeledImageSet)> {
    let (train, test) = match (&data.mnist, &data.images) {
        (Some(dir), None) => (load_mnist(dir, true)?, load_mnist(dir, false)?),
        (None, Some(root)) => {
            let size = cfg.image_size;
            let tr = load_split(root, data.train_list.as_ref().unwrap(), size, &PnmDecoder)?;
            let te = load_split(root, data.test_list.as_ref().unwrap(), size, &PnmDecoder)?;
            for (p, why) in tr.skipped.iter().chain(&te.skipped) {
                eprintln!("warning: skipped {}: {why}", p.display());
            }
            (tr, te)
        }
        _ => {
            return Err(CliError::Usage(
                "give exactly one of --mnist DIR or --images DIR --train-list F --test-list F".into(),
            ))
        }
    };
    Ok((train, test))
}

fn prepare_both(data: &DataArgs, cfg: &ExperimentConfig) -> Result<(Dataset, Dataset)> {
    let (train, test) = load_sets(data, cfg)?;
    let t = Instant::now();
    let tr = prepare(&train, cfg.train_limit, cfg)?;
    let te = prepare(&test, cfg.test_limit, cfg)?;
    eprintln!(
        "encoded {} training and {} test samples in {:.1}s",
        tr.len(),
        te.len(),
        t.elapsed().as_secs_f64()
    );
    Ok((tr, te))
}

fn indexed(path: &Path, index: usize, count: usize) -> PathBuf {
    if count == 1 {
        return path.to_path_buf();
    }
    let stem = path.file_stem().unwrap_or_default().to_string_lossy();
    let name = match path.extension() {
        Some(ext) => format!("{stem}.{index}.{}", ext.to_string_lossy()),
        None => format!("{stem}.{index}"),
    };
    path.with_file_name(name)
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(io_err(format!("writing {}", p.display()))),
        None => {
            print!("{text}");
            std::io::stdout().flush().ok();
            Ok(())
        }
    }
}

fn model_files(paths: &[PathBuf]) -> Result<Vec<ModelFile>> {
    paths
        .iter()
        .map(|p| {
            if !p.exists() {
                return Err(CliError::Usage(format!("model {} does not exist", p.display())));
            }
            Ok(ModelFile::load(p)?)
        })
        .collect()
}

fn cmd_train(common: &Common, data: &DataArgs, out: &Path) -> Result<()> {
    let cfg = load_config(common)?;
    let (train, _) = prepare_both(data, &cfg)?;
    let seeds = run_seeds(&cfg);
    for (r, &seed) in seeds.iter().enumerate() {
        let t = Instant::now();
        let trained = train_models(&cfg, &train, seed)?;
        let base = indexed(out, r, seeds.len());
        let count = trained.len();
        for (m, tr) in trained.into_iter().enumerate() {
            let path = indexed(&base, m, count);
            ModelFile {
                network: tr.network,
                window: cfg.train.window,
                dog: cfg.dog,
            }
            .save(&path)?;
            let log = path.with_extension("log.csv");
            fs::write(&log, tr.log.to_csv()).map_err(io_err(format!("writing {}", log.display())))?;
            eprintln!("wrote {} and {}", path.display(), log.display());
        }
        eprintln!("run {r} (seed {seed}) trained in {:.1}s", t.elapsed().as_secs_f64());
    }
    Ok(())
}

fn cmd_eval(
    common: &Common,
    data: &DataArgs,
    models: &[PathBuf],
    ensemble: bool,
    id: &str,
    out: Option<&Path>,
) -> Result<()> {
    let cfg = load_config(common)?;
    let loaded = model_files(models)?;
    let (train, test) = prepare_both(data, &cfg)?;
    let mut csv = format!("{RUN_HEADER}\n");
    let mut results = Vec::new();
    let mut run = |nets: Vec<snn_core::Network>, seed: u64| -> Result<()> {
        let (r, _) = evaluate(&nets, &train, &test, cfg.inference, &cfg.train.window, &cfg.svm)?;
        csv.push_str(&run_row(id, &r, seed));
        csv.push('\n');
        eprintln!(
            "seed {seed}: rec_rate {:.4}, sparsity {:.4}, test output spikes {}",
            r.accuracy, r.sparsity, r.test_output_spikes
        );
        results.push(r);
        Ok(())
    };
    if loaded.is_empty() {
        for seed in run_seeds(&cfg) {
            run(networks(train_models(&cfg, &train, seed)?), seed)?;
        }
    } else if ensemble {
        run(loaded.into_iter().map(|m| m.network).collect(), cfg.train.seed)?;
    } else {
        for m in loaded {
            run(vec![m.network], cfg.train.seed)?;
        }
    }
    if results.len() > 1 {
        csv.push_str(SUMMARY_HEADER);
        csv.push('\n');
        csv.push_str(&summary_row(id, &results));
        csv.push('\n');
    }
    emit(out, &csv)
}

fn cmd_sweep(common: &Common, data: &DataArgs, axis: &str, values: &[String], out: Option<&Path>) -> Result<()> {
    let axis: SweepAxis = axis.parse()?;
    if values.is_empty() {
        return Err(CliError::Usage("--values needs at least one value".into()));
    }
    let cfg = load_config(common)?;
    for v in values {
        axis.apply(&cfg, v)?;
    }
    let (train, test) = prepare_both(data, &cfg)?;
    let rows = sweep(&cfg, axis, values, &train, &test)?;
    emit(out, &sweep_csv(axis, &rows))
}

fn cmd_export(model: &Path, layer: usize, out: &Path) -> Result<()> {
    let m = model_files(&[model.to_path_buf()])?.remove(0);
    let paths = export_filters(&m.network, layer, out)?;
    eprintln!("wrote {} images to {}", paths.len(), out.display());
    Ok(())
}

fn cmd_features(
    common: &Common,
    data: &DataArgs,
    models: &[PathBuf],
    test: bool,
    out: &Path,
    labels: Option<&Path>,
) -> Result<()> {
    let cfg = load_config(common)?;
    let loaded = model_files(models)?;
    let (train_set, test_set) = load_sets(data, &cfg)?;
    let (set, limit) = if test {
        (&test_set, cfg.test_limit)
    } else {
        (&train_set, cfg.train_limit)
    };
    let first = loaded[0].clone();
    let mut run_cfg = cfg.clone();
    run_cfg.dog = first.dog;
    run_cfg.train.window = first.window;
    run_cfg.image_size = (first.network.spec.input.width, first.network.spec.input.height);
    let encoded = prepare(set, limit, &run_cfg)?;
    let nets: Vec<_> = loaded.into_iter().map(|m| m.network).collect();
    let report = extract_features(&nets, &encoded.trains, cfg.inference, first.window.end)?;
    let file = fs::File::create(out).map_err(io_err(format!("creating {}", out.display())))?;
    report
        .features
        .write_to(std::io::BufWriter::new(file), labels.is_some())
        .map_err(io_err(format!("writing {}", out.display())))?;
    if let Some(l) = labels {
        let file = fs::File::create(l).map_err(io_err(format!("creating {}", l.display())))?;
        write_labels(std::io::BufWriter::new(file), &encoded.labels)
            .map_err(io_err(format!("writing {}", l.display())))?;
    }
    eprintln!(
        "{} x {} features, mean sparsity {:.4}, majority share {:.4}",
        report.features.rows,
        report.features.cols,
        report.sparsity,
        majority_share(&encoded.labels)?
    );
    Ok(())
}

fn cmd_inspect(model: &Path) -> Result<()> {
    let m = model_files(&[model.to_path_buf()])?.remove(0);
    let net = &m.network;
    let shapes = net.shapes();
    println!("input {}", shapes[0]);
    println!(
        "coding window [{}, {}], DoG size {} center {} surround {}",
        m.window.start, m.window.end, m.dog.size, m.dog.center, m.dog.surround
    );
    println!("layer,kind,filter,maps,stride,padding,output,t_target,weights,threshold_mean");
    for (i, l) in net.spec.layers.iter().enumerate() {
        let (weights, th) = match &net.params[i] {
            Some(p) => (
                p.weights.len().to_string(),
                format!("{:.4}", p.thresholds.iter().sum::<f64>() / p.thresholds.len() as f64),
            ),
            None => (String::new(), String::new()),
        };
        let target = if l.kind == LayerKind::Pooling {
            String::new()
        } else {
            net.targets[i].to_string()
        };
        println!(
            "{},{},{}x{},{},{},{},{},{},{},{}",
            i + 1,
            l.kind.name(),
            l.filter_w,
            l.filter_h,
            l.maps,
            l.stride,
            l.padding,
            shapes[i + 1],
            target,
            weights,
            th
        );
    }
    println!("checksum {:016x}", net.checksum(net.depth()));
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(CliError::Usage("--jobs must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    }
    match &cli.command {
        Command::Train { common, data, out } => cmd_train(common, data, out),
        Command::Eval {
            common,
            data,
            model,
            ensemble,
            id,
            out,
        } => cmd_eval(common, data, model, *ensemble, id, out.as_deref()),
        Command::Sweep {
            common,
            data,
            axis,
            values,
            out,
        } => cmd_sweep(common, data, axis, values, out.as_deref()),
        Command::ExportFilters { model, layer, out } => cmd_export(model, *layer, out),
        Command::Features {
            common,
            data,
            model,
            test,
            out,
            labels,
        } => cmd_features(common, data, model, *test, out, labels.as_deref()),
        Command::Inspect { model } => cmd_inspect(model),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

