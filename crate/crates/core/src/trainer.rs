//! Layer-wise unsupervised training.
//!
//! Each trainable layer is trained on its own, from the input side to the
//! output side. For every sample one random patch of the layer's input is
//! shown to a single column under winner-take-all competition; the winner's
//! synapses follow the STDP rule and the thresholds follow the target and
//! homeostasis rules. Filters are stored once per layer, so the trained
//! column is automatically the filter of every column.

use std::fmt::Write as _;

use rand::seq::SliceRandom;

use crate::encoder::CodingWindow;
use crate::network::{uniform_index, InitParams, LayerParams, Network, NetworkSpec};
use crate::plasticity::{
    adapt_threshold_target, adapt_threshold_wta, apply_stdp, LoserDivisor, NoWinnerDecrement, StdpContext, StdpRule,
    ThresholdParams,
};
use crate::readout::map_samples;
use crate::rng::{self, derive_seed, Purpose, StreamRng};
use crate::simulator::{InhibitionPolicy, Simulator, SpikeTrain};
use crate::types::Shape3;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Passes over the training set, per layer.
    pub epochs: usize,
    /// Learning rates are multiplied by this after every epoch.
    pub lambda: f64,
    /// Rule with its initial learning rate.
    pub rule: StdpRule,
    pub eta_th: f64,
    /// Target time of the first trainable layer.
    pub t_target: f64,
    /// Added to the target of each further trainable layer.
    pub delta_t: f64,
    pub init: InitParams,
    pub window: CodingWindow,
    pub divisor: LoserDivisor,
    pub no_winner: NoWinnerDecrement,
    /// Inhibition used while running already trained layers to produce the
    /// input of the layer being trained.
    pub prefix_policy: InhibitionPolicy,
    pub seed: u64,
    /// Shuffle sample order every epoch instead of dataset order.
    pub shuffle: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 100,
            lambda: 0.95,
            rule: StdpRule::biological(0.1, 0.1),
            eta_th: 1.0,
            t_target: 0.7,
            delta_t: 0.0,
            init: InitParams::default(),
            window: CodingWindow::default(),
            divisor: LoserDivisor::default(),
            no_winner: NoWinnerDecrement::default(),
            prefix_policy: InhibitionPolicy::wta(),
            seed: 0,
            shuffle: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::param("epochs", "must be positive"));
        }
        if !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return Err(Error::param("lambda", format!("must lie in (0, 1], got {}", self.lambda)));
        }
        self.rule.validate()?;
        self.window.validate()?;
        self.prefix_policy.validate()?;
        ThresholdParams {
            t_target: self.t_target,
            eta: self.eta_th,
            th_min: self.init.th_min,
        }
        .validate()?;
        if !self.delta_t.is_finite() {
            return Err(Error::param("delta_t", "must be finite"));
        }
        if !(self.init.w_min < self.init.w_max) {
            return Err(Error::param("w_bounds", "need w_min < w_max"));
        }
        Ok(())
    }

    /// Learning rates used during epoch `e` (counting from 0).
    pub fn rates(&self, epoch: usize) -> (f64, f64) {
        let f = self.lambda.powi(epoch as i32);
        (self.rule.eta() * f, self.eta_th * f)
    }

    /// Per-layer targets: the k-th trainable layer (from 0) gets
    /// `t_target + k·Δt`; pooling layers inherit the previous value.
    pub fn targets(&self, spec: &NetworkSpec) -> Vec<f64> {
        let mut k = 0;
        let mut current = self.t_target;
        spec.layers
            .iter()
            .map(|l| {
                if l.kind.is_trainable() {
                    current = self.t_target + k as f64 * self.delta_t;
                    k += 1;
                }
                current
            })
            .collect()
    }

    fn stdp_context(&self) -> StdpContext {
        StdpContext {
            w_min: self.init.w_min,
            w_max: self.init.w_max,
            t_end: self.window.end,
        }
    }
}

/// Members of a multi-target ensemble: `(t_target, output maps)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleConfig {
    pub members: Vec<(f64, usize)>,
}

impl EnsembleConfig {
    pub fn single(t_target: f64, size: usize) -> Self {
        EnsembleConfig {
            members: vec![(t_target, size)],
        }
    }

    /// Concatenated feature width.
    pub fn total(&self) -> usize {
        self.members.iter().map(|m| m.1).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.members.is_empty() {
            return Err(Error::param("ensemble", "needs at least one member"));
        }
        for &(t, n) in &self.members {
            if n == 0 || !t.is_finite() {
                return Err(Error::param(
                    "ensemble",
                    format!("invalid member (t_target={t}, size={n})"),
                ));
            }
        }
        Ok(())
    }

    /// Seed of one member. Depends only on the member itself so reordering
    /// members does not change what each of them learns.
    pub fn member_seed(seed: u64, t_target: f64, size: usize) -> u64 {
        derive_seed(seed, t_target.to_bits() ^ (size as u64).rotate_left(40))
    }
}

/// One epoch of one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub layer: usize,
    pub epoch: usize,
    pub eta_w: f64,
    pub eta_th: f64,
    pub samples: usize,
    /// Patches with input spikes where no neuron reached its threshold.
    pub no_winner: usize,
    /// Patches without any input spike; skipped entirely.
    pub silent: usize,
    /// `None` when no sample produced a winner.
    pub mean_winner_time: Option<f64>,
    /// Fraction of winning samples won by each map.
    pub win_share: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainLog {
    pub records: Vec<EpochRecord>,
}

impl TrainLog {
    pub const CSV_HEADER: &'static str =
        "layer,epoch,eta_w,eta_th,samples,no_winner,silent,mean_winner_time,win_share";

    /// Header plus one row per epoch. Win shares are `;`-separated.
    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for r in &self.records {
            let shares: Vec<String> = r.win_share.iter().map(|v| format!("{v:.6}")).collect();
            let mean = r.mean_winner_time.map(|v| format!("{v:.6}")).unwrap_or_default();
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{}",
                r.layer,
                r.epoch,
                r.eta_w,
                r.eta_th,
                r.samples,
                r.no_winner,
                r.silent,
                mean,
                shares.join(";")
            );
        }
        s
    }

    pub fn last_for(&self, layer: usize) -> Option<&EpochRecord> {
        self.records.iter().rev().find(|r| r.layer == layer)
    }
}

/// Spikes inside one receptive-field window, indexed by flat synapse
/// `(c·F_h + fy)·F_w + fx` and sorted by time then synapse.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Patch {
    pub spikes: Vec<(f64, u32)>,
}

impl Patch {
    /// Dense pre-synaptic times, `None` for silent synapses.
    pub fn pre_times(&self, fan_in: usize) -> Vec<Option<f64>> {
        let mut t = vec![None; fan_in];
        for &(time, s) in &self.spikes {
            t[s as usize] = Some(time);
        }
        t
    }
}

/// Extracts the spikes of an `F_h × F_w` window at a uniformly drawn
/// position of the zero-padded input.
pub fn sample_patch(
    rng: &mut StreamRng,
    field: &SpikeTrain,
    shape: Shape3,
    filter_h: usize,
    filter_w: usize,
    padding: usize,
) -> Result<Patch> {
    let span_h = (shape.height + 2 * padding).checked_sub(filter_h);
    let span_w = (shape.width + 2 * padding).checked_sub(filter_w);
    let (Some(span_h), Some(span_w)) = (span_h, span_w) else {
        return Err(Error::InvalidArchitecture(format!(
            "{filter_h}x{filter_w} patch does not fit {shape} with padding {padding}"
        )));
    };
    let y0 = uniform_index(rng, span_h + 1) as isize - padding as isize;
    let x0 = uniform_index(rng, span_w + 1) as isize - padding as isize;
    Ok(extract_patch(field, shape, y0, x0, filter_h, filter_w))
}

fn extract_patch(
    field: &SpikeTrain,
    shape: Shape3,
    y0: isize,
    x0: isize,
    fh: usize,
    fw: usize,
) -> Patch {
    let cols = shape.columns();
    let mut spikes = Vec::new();
    for &(t, site) in &field.spikes {
        let site = site as usize;
        let (c, r) = (site / cols, site % cols);
        let dy = (r / shape.width) as isize - y0;
        let dx = (r % shape.width) as isize - x0;
        if dy < 0 || dx < 0 || dy >= fh as isize || dx >= fw as isize {
            continue;
        }
        spikes.push((t, ((c * fh + dy as usize) * fw + dx as usize) as u32));
    }
    Patch { spikes }
}

/// Runs one column under winner-take-all: inputs are integrated in time
/// order and the first map to reach its threshold wins (lowest index among
/// maps crossing on the same batch). Returns `(map, time)`.
pub fn column_winner(params: &LayerParams, patch: &Patch) -> Option<(usize, f64)> {
    let maps = params.thresholds.len();
    let mut pot = vec![0.0; maps];
    let spikes = &patch.spikes;
    let mut i = 0;
    while i < spikes.len() {
        let t = spikes[i].0;
        while i < spikes.len() && spikes[i].0 == t {
            let row = params.weights.fan_out_row(spikes[i].1 as usize);
            for (p, w) in pot.iter_mut().zip(row) {
                *p += w;
            }
            i += 1;
        }
        if let Some(m) = (0..maps).find(|&m| pot[m] >= params.thresholds[m]) {
            return Some((m, t));
        }
    }
    None
}

/// Trains layer `layer` of `net` in place from the spike trains that
/// reach its input (layer `layer − 1`). No other layer is touched.
pub fn train_layer(
    net: &mut Network,
    layer: usize,
    inputs: &[SpikeTrain],
    cfg: &TrainConfig,
    log: &mut TrainLog,
) -> Result<()> {
    cfg.validate()?;
    if inputs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let spec = *net.spec.layer(layer)?;
    if !spec.kind.is_trainable() {
        return Err(Error::NotTrainable(layer));
    }
    let in_shape = net.shapes()[layer - 1];
    let th = ThresholdParams {
        t_target: net.targets[layer - 1],
        eta: cfg.eta_th,
        th_min: cfg.init.th_min,
    };
    let ctx = cfg.stdp_context();
    let mut patch_rng = rng::stream(cfg.seed, Purpose::PatchSampling, layer);
    let mut shuffle_rng = rng::stream(cfg.seed, Purpose::Shuffle, layer);
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    let params = net.layer_params_mut(layer)?;
    let maps = spec.maps;
    let fan_in = params.weights.fan_in();
    let mut fire_times = vec![None; maps];

    for epoch in 0..cfg.epochs {
        let (eta_w, eta_th) = cfg.rates(epoch);
        let rule = cfg.rule.with_eta(eta_w);
        let th = ThresholdParams { eta: eta_th, ..th };
        if cfg.shuffle {
            order.shuffle(&mut shuffle_rng);
        }
        let mut wins = vec![0usize; maps];
        let mut time_sum = 0.0;
        let mut no_winner = 0;
        let mut silent = 0;
        for &i in &order {
            let patch = sample_patch(
                &mut patch_rng,
                &inputs[i],
                in_shape,
                spec.filter_h,
                spec.filter_w,
                spec.padding,
            )?;
            // no drive at all: nothing to learn and no threshold to lower
            if patch.spikes.is_empty() {
                silent += 1;
                continue;
            }
            match column_winner(params, &patch) {
                Some((m, t)) => {
                    apply_stdp(&mut params.weights, m, &patch.pre_times(fan_in), t, &rule, &ctx)?;
                    params.thresholds[m] = adapt_threshold_target(params.thresholds[m], t, &th);
                    fire_times.iter_mut().for_each(|f| *f = None);
                    fire_times[m] = Some(t);
                    adapt_threshold_wta(&mut params.thresholds, &fire_times, eta_th, th.th_min, cfg.divisor);
                    wins[m] += 1;
                    time_sum += t;
                }
                None => {
                    no_winner += 1;
                    let drop = match cfg.no_winner {
                        NoWinnerDecrement::Shared => eta_th / maps as f64,
                        NoWinnerDecrement::Full => eta_th,
                    };
                    for v in params.thresholds.iter_mut() {
                        *v = (*v - drop).max(th.th_min);
                    }
                }
            }
        }
        let won = inputs.len() - no_winner - silent;
        log.records.push(EpochRecord {
            layer,
            epoch,
            eta_w,
            eta_th,
            samples: inputs.len(),
            no_winner,
            silent,
            mean_winner_time: (won > 0).then(|| time_sum / won as f64),
            win_share: wins
                .iter()
                .map(|&w| if won > 0 { w as f64 / won as f64 } else { 0.0 })
                .collect(),
        });
    }
    Ok(())
}

/// Copies a trained column onto layer `layer`. Filters are shared by all
/// columns, so this is a single assignment; pooling layers are rejected.
pub fn broadcast_column(net: &mut Network, layer: usize, column: LayerParams) -> Result<()> {
    let p = net.layer_params_mut(layer)?;
    if p.weights.dims() != column.weights.dims() || p.thresholds.len() != column.thresholds.len() {
        return Err(Error::DimensionMismatch {
            expected: p.weights.len(),
            actual: column.weights.len(),
        });
    }
    *p = column;
    Ok(())
}

/// Runs every train from layer `from` through layers `from+1..=to` and
/// keeps the spikes of layer `to`.
pub fn propagate(
    net: &Network,
    inputs: &[SpikeTrain],
    from: usize,
    to: usize,
    policy: InhibitionPolicy,
) -> Result<Vec<SpikeTrain>> {
    if from == to {
        return Ok(inputs.to_vec());
    }
    let sim = Simulator::new(&net.spec)?;
    map_samples(inputs, sim, |sim, s| {
        Ok(sim.run_train(net, from, s, to, policy)?.pop().unwrap_or_default())
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trained {
    pub network: Network,
    pub log: TrainLog,
}

/// Initializes a network from `cfg.seed` and trains every trainable layer
/// in order on encoded input trains.
pub fn train_network(spec: &NetworkSpec, inputs: &[SpikeTrain], cfg: &TrainConfig) -> Result<Trained> {
    cfg.validate()?;
    if inputs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut net = Network::initialize(spec.clone(), &cfg.init, cfg.targets(spec), cfg.seed)?;
    let mut log = TrainLog::default();
    let mut cached: Option<(usize, Vec<SpikeTrain>)> = None;
    for layer in spec.trainable_layers() {
        let needed = layer - 1;
        let current = match cached.take() {
            Some((at, trains)) if at == needed => trains,
            Some((at, trains)) => propagate(&net, &trains, at, needed, cfg.prefix_policy)?,
            None => propagate(&net, inputs, 0, needed, cfg.prefix_policy)?,
        };
        train_layer(&mut net, layer, &current, cfg, &mut log)?;
        cached = Some((needed, current));
    }
    Ok(Trained { network: net, log })
}

/// Trains one network per member: the output layer gets the member's size,
/// every layer gets the member's target, and the seed is derived from the
/// member.
pub fn train_ensemble(
    spec: &NetworkSpec,
    inputs: &[SpikeTrain],
    ens: &EnsembleConfig,
    cfg: &TrainConfig,
) -> Result<Vec<Trained>> {
    ens.validate()?;
    let jobs: Vec<(NetworkSpec, TrainConfig)> = ens
        .members
        .iter()
        .map(|&(t, size)| {
            let mut layers = spec.layers.clone();
            if let Some(last) = layers.last_mut() {
                last.maps = size;
            }
            let member_spec = NetworkSpec::new(spec.input, layers)?;
            let member_cfg = TrainConfig {
                t_target: t,
                delta_t: 0.0,
                seed: EnsembleConfig::member_seed(cfg.seed, t, size),
                ..cfg.clone()
            };
            Ok((member_spec, member_cfg))
        })
        .collect::<Result<_>>()?;
    jobs.iter()
        .map(|(s, c)| train_network(s, inputs, c))
        .collect()
}
