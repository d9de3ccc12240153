//! The computations behind the page, callable from native code and tests.

use rand::Rng;
use snn_core::encoder::{dog_filter, encode_image, split_channels, CodingWindow, DogParams};
use snn_core::network::{LayerSpec, Network, NetworkSpec};
use snn_core::plasticity::{stdp_delta, BiologicalVariant, LoserDivisor, StdpContext, StdpRule};
use snn_core::rng::{self, Purpose};
use snn_core::simulator::SpikeTrain;
use snn_core::trainer::{train_layer, TrainConfig, TrainLog};
use snn_core::{Error, Image, Result, Shape3, SpikeEvent};

/// On/off contrast maps and per-pixel spike latencies of one image.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoding {
    pub width: usize,
    pub height: usize,
    /// Normalized on channel, row-major.
    pub on: Vec<f64>,
    pub off: Vec<f64>,
    /// On latencies then off latencies; NaN where no spike is emitted.
    pub latencies: Vec<f64>,
    pub spikes: usize,
}

pub fn encode(pixels: &[f64], width: usize, height: usize) -> Result<Encoding> {
    let image = Image::new(width, height, pixels.to_vec())?;
    let dog = DogParams::default();
    let window = CodingWindow::default();
    let (on, off) = split_channels(&dog_filter(&image, &dog)?);
    let scale = on.pixels.iter().chain(&off.pixels).fold(0.0f64, |m, v| m.max(*v));
    let norm = |c: &Image| -> Vec<f64> {
        c.pixels
            .iter()
            .map(|v| if scale > 0.0 { v / scale } else { 0.0 })
            .collect()
    };
    let events = encode_image(&image, &dog, &window)?;
    let mut latencies = vec![f64::NAN; 2 * width * height];
    for e in &events {
        latencies[e.map * width * height + e.y * width + e.x] = e.time;
    }
    Ok(Encoding {
        width,
        height,
        on: norm(&on),
        off: norm(&off),
        latencies,
        spikes: events.len(),
    })
}

pub fn rule(name: &str, eta: f64, param: f64) -> Result<StdpRule> {
    let r = match name {
        "additive" => StdpRule::additive(eta),
        "multiplicative" => StdpRule::multiplicative(eta, param),
        "biological" => StdpRule::biological(eta, param),
        "biological-decaying" => StdpRule::Biological {
            eta,
            tau: param,
            variant: BiologicalVariant::Decaying,
        },
        other => return Err(Error::InvalidParameter {
                name: "rule",
                reason: format!("unknown rule `{other}`"),
            }),
    };
    r.validate()?;
    Ok(r)
}

/// Weight change against the pre-synaptic time for `points` evenly spaced
/// values over the coding window, followed by the change for a missing
/// pre-synaptic spike.
pub fn stdp_window(r: &StdpRule, t_post: f64, w: f64, points: usize) -> Vec<f64> {
    let ctx = StdpContext::default();
    let step = 1.0 / (points.max(2) - 1) as f64;
    let mut out: Vec<f64> = (0..points)
        .map(|i| stdp_delta(r, &ctx, Some(i as f64 * step), t_post, w))
        .collect();
    out.push(stdp_delta(r, &ctx, None, t_post, w));
    out
}

/// Per-epoch mean winner time of a four-neuron column, plus the win shares
/// of the last epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub means: Vec<f64>,
    pub shares: Vec<f64>,
}

pub fn threshold_trace(t_target: f64, losers: bool, epochs: usize, seed: u64) -> Result<Trace> {
    const SIDE: usize = 8;
    let input = Shape3::new(1, SIDE, SIDE)?;
    let spec = NetworkSpec::new(input, vec![LayerSpec::fc(SIDE, 4)])?;
    let mut r = rng::stream(seed, Purpose::Synthetic, 0);
    let samples = (0..100)
        .map(|_| {
            let mut events: Vec<SpikeEvent> = (0..SIDE * SIDE)
                .map(|i| SpikeEvent::new(r.random::<f64>(), 0, 0, i / SIDE, i % SIDE))
                .collect();
            events.sort_by(|a, b| a.total_order(b));
            SpikeTrain::from_events(&events, input)
        })
        .collect::<Result<Vec<_>>>()?;
    let cfg = TrainConfig {
        epochs,
        t_target,
        divisor: if losers {
            LoserDivisor::Losers
        } else {
            LoserDivisor::Competitors
        },
        seed,
        ..TrainConfig::default()
    };
    let mut net = Network::initialize(spec.clone(), &cfg.init, cfg.targets(&spec), seed)?;
    let mut log = TrainLog::default();
    train_layer(&mut net, 1, &samples, &cfg, &mut log)?;
    Ok(Trace {
        means: log.records.iter().map(|e| e.mean_winner_time.unwrap_or(f64::NAN)).collect(),
        shares: log.records.last().map(|e| e.win_share.clone()).unwrap_or_default(),
    })
}
