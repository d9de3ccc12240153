//! End-to-end runs: encode, train, extract features, fit the SVM, score.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::classifier::{fit, majority_share, LinearModel, SvmParams};
use crate::config::ExperimentConfig;
use crate::datasets::LabeledImageSet;
use crate::encoder::{encode_image, CodingWindow, DogParams};
use crate::network::Network;
use crate::plasticity::{BiologicalVariant, StdpRule};
use crate::readout::{extract_features, FeatureReport};
use crate::simulator::{InhibitionPolicy, SpikeTrain};
use crate::trainer::{train_ensemble, train_network, Trained};
use crate::types::{Image, Shape3};
use crate::{Error, Result};

/// Encoded samples with their labels.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub trains: Vec<SpikeTrain>,
    pub labels: Vec<usize>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.trains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trains.is_empty()
    }
}

pub fn encode_images(images: &[Image], dog: &DogParams, window: &CodingWindow) -> Result<Vec<SpikeTrain>> {
    let encode = |img: &Image| -> Result<SpikeTrain> {
        let shape = Shape3::new(2, img.height, img.width)?;
        SpikeTrain::from_events(&encode_image(img, dog, window)?, shape)
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        images.par_iter().map(encode).collect()
    }
    #[cfg(not(feature = "parallel"))]
    images.iter().map(encode).collect()
}

/// Encodes the first `limit` images of a set (all when `None`).
pub fn prepare(set: &LabeledImageSet, limit: Option<usize>, cfg: &ExperimentConfig) -> Result<Dataset> {
    let n = limit.unwrap_or(set.len()).min(set.len());
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    if let Some((w, h)) = set.dimensions() {
        if (w, h) != cfg.image_size {
            return Err(Error::param(
                "input",
                format!("images are {w}x{h}, configuration expects {}x{}", cfg.image_size.0, cfg.image_size.1),
            ));
        }
    }
    Ok(Dataset {
        trains: encode_images(&set.images[..n], &cfg.dog, &cfg.train.window)?,
        labels: set.labels[..n].to_vec(),
    })
}

/// Seeds of the configured runs: `seed, seed + 1, ...`.
pub fn run_seeds(cfg: &ExperimentConfig) -> Vec<u64> {
    (0..cfg.runs as u64).map(|r| cfg.train.seed.wrapping_add(r)).collect()
}

/// Trains the configured network, or every ensemble member, with `seed`.
pub fn train_models(cfg: &ExperimentConfig, data: &Dataset, seed: u64) -> Result<Vec<Trained>> {
    let spec = cfg.spec()?;
    let mut tc = cfg.train.clone();
    tc.seed = seed;
    match &cfg.ensemble {
        Some(e) => train_ensemble(&spec, &data.trains, e, &tc),
        None => Ok(vec![train_network(&spec, &data.trains, &tc)?]),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    pub accuracy: f64,
    /// Mean sparsity of the test features.
    pub sparsity: f64,
    pub feature_dim: usize,
    pub test_output_spikes: usize,
    pub majority_share: f64,
}

/// Extracts features for both sets, fits the SVM on the training features
/// and scores it on the test features.
pub fn evaluate(
    networks: &[Network],
    train: &Dataset,
    test: &Dataset,
    policy: InhibitionPolicy,
    window: &CodingWindow,
    svm: &SvmParams,
) -> Result<(EvalResult, LinearModel)> {
    let tr = extract_features(networks, &train.trains, policy, window.end)?;
    let te = extract_features(networks, &test.trains, policy, window.end)?;
    score(&tr, &train.labels, &te, &test.labels, svm)
}

pub fn score(
    train: &FeatureReport,
    train_labels: &[usize],
    test: &FeatureReport,
    test_labels: &[usize],
    svm: &SvmParams,
) -> Result<(EvalResult, LinearModel)> {
    let model = fit(&train.features, train_labels, svm)?;
    let accuracy = model.accuracy(&test.features, test_labels)?;
    Ok((
        EvalResult {
            accuracy,
            sparsity: test.sparsity,
            feature_dim: test.features.cols,
            test_output_spikes: test.output_spikes,
            majority_share: majority_share(test_labels)?,
        },
        model,
    ))
}

/// Mean and sample standard deviation (0 for a single value).
pub fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() == 1 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub const RUN_HEADER: &str = "config,rec_rate,sparsity,seed";
pub const SUMMARY_HEADER: &str = "config,rec_rate_mean,rec_rate_std,sparsity_mean,sparsity_std,runs";

pub fn run_row(config: &str, r: &EvalResult, seed: u64) -> String {
    format!("{config},{:.6},{:.6},{seed}", r.accuracy, r.sparsity)
}

pub fn summary_row(config: &str, results: &[EvalResult]) -> String {
    let acc: Vec<f64> = results.iter().map(|r| r.accuracy).collect();
    let sp: Vec<f64> = results.iter().map(|r| r.sparsity).collect();
    let (am, asd) = mean_std(&acc);
    let (sm, ssd) = mean_std(&sp);
    format!("{config},{am:.6},{asd:.6},{sm:.6},{ssd:.6},{}", results.len())
}

/// Parameter varied by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    TTarget,
    DeltaT,
    Beta,
    Tau,
    Policy,
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "t_target" | "t-target" => SweepAxis::TTarget,
            "delta_t" | "delta-t" | "dt" => SweepAxis::DeltaT,
            "beta" => SweepAxis::Beta,
            "tau" => SweepAxis::Tau,
            "policy" => SweepAxis::Policy,
            other => {
                return Err(Error::param(
                    "axis",
                    format!("unknown sweep axis `{other}` (t_target, delta_t, beta, tau, policy)"),
                ))
            }
        })
    }
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::TTarget => "t_target",
            SweepAxis::DeltaT => "delta_t",
            SweepAxis::Beta => "beta",
            SweepAxis::Tau => "tau",
            SweepAxis::Policy => "policy",
        }
    }

    /// Returns `cfg` with this axis set to `value`. Sweeping `beta` or
    /// `tau` switches to the rule that uses it.
    pub fn apply(self, cfg: &ExperimentConfig, value: &str) -> Result<ExperimentConfig> {
        let mut c = cfg.clone();
        let number = || -> Result<f64> {
            value
                .parse()
                .map_err(|_| Error::param("value", format!("`{value}` is not a number")))
        };
        match self {
            SweepAxis::TTarget => c.train.t_target = number()?,
            SweepAxis::DeltaT => c.train.delta_t = number()?,
            SweepAxis::Beta => c.train.rule = StdpRule::multiplicative(c.train.rule.eta(), number()?),
            SweepAxis::Tau => {
                let variant = match c.train.rule {
                    StdpRule::Biological { variant, .. } => variant,
                    _ => BiologicalVariant::AsPrinted,
                };
                c.train.rule = StdpRule::Biological {
                    eta: c.train.rule.eta(),
                    tau: number()?,
                    variant,
                };
            }
            SweepAxis::Policy => {
                c.inference = match value {
                    "soft" => InhibitionPolicy::soft(1.0),
                    v => v.parse().map_err(|e: String| Error::param("value", e))?,
                }
                .with_scope(cfg.inference.scope);
            }
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: String,
    /// One result per seed.
    pub results: Vec<EvalResult>,
}

pub const SWEEP_HEADER: &str = "axis,value,rec_rate_mean,rec_rate_std,sparsity_mean,sparsity_std,runs";

pub fn sweep_csv(axis: SweepAxis, rows: &[SweepRow]) -> String {
    let mut s = String::from(SWEEP_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(s, "{},{}", axis.name(), summary_row(&r.value, &r.results));
    }
    s
}

/// Runs train and evaluation for every value and seed. The policy axis
/// only changes inference, so each seed is trained once and evaluated
/// under every policy.
pub fn sweep(
    cfg: &ExperimentConfig,
    axis: SweepAxis,
    values: &[String],
    train: &Dataset,
    test: &Dataset,
) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(Error::param("values", "sweep needs at least one value"));
    }
    let configs: Vec<ExperimentConfig> = values
        .iter()
        .map(|v| axis.apply(cfg, v))
        .collect::<Result<_>>()?;
    let seeds = run_seeds(cfg);
    let eval = |c: &ExperimentConfig, nets: &[Network]| {
        evaluate(nets, train, test, c.inference, &c.train.window, &c.svm).map(|r| r.0)
    };
    let per_seed: Vec<Vec<EvalResult>> = if axis == SweepAxis::Policy {
        par_map(&seeds, |&seed| {
            let nets = networks(train_models(cfg, train, seed)?);
            configs.iter().map(|c| eval(c, &nets)).collect()
        })?
    } else {
        let cells: Vec<(usize, u64)> = (0..configs.len())
            .flat_map(|i| seeds.iter().map(move |&s| (i, s)))
            .collect();
        let flat = par_map(&cells, |&(i, seed)| {
            let nets = networks(train_models(&configs[i], train, seed)?);
            eval(&configs[i], &nets)
        })?;
        // regroup as [seed][value]
        (0..seeds.len())
            .map(|s| (0..configs.len()).map(|i| flat[i * seeds.len() + s].clone()).collect())
            .collect()
    };
    Ok(values
        .iter()
        .enumerate()
        .map(|(i, v)| SweepRow {
            value: v.clone(),
            results: per_seed.iter().map(|r| r[i].clone()).collect(),
        })
        .collect())
}

pub fn networks(trained: Vec<Trained>) -> Vec<Network> {
    trained.into_iter().map(|t| t.network).collect()
}

fn par_map<T, U, F>(items: &[T], f: F) -> Result<Vec<U>>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> Result<U> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    items.iter().map(f).collect()
}
