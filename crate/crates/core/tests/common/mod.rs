//! Helpers shared by integration tests.
#![allow(dead_code)]

pub mod dense;

use rand::Rng;
use snn_core::network::{InitParams, LayerSpec, Network, NetworkSpec};
use snn_core::rng::{self, Purpose};
use snn_core::simulator::{CompetitionScope, InhibitionPolicy};
use snn_core::{Shape3, SpikeEvent};

/// Random small network (at most three layers and 64 neurons), a random
/// policy and a random input on a 1 ms grid.
pub fn random_case(seed: u64) -> (Network, InhibitionPolicy, Vec<SpikeEvent>) {
    let mut r = rng::stream(seed, Purpose::Synthetic, 0);
    let (spec, neurons) = loop {
        let input = Shape3::new(r.random_range(1..=2), r.random_range(3..=7), r.random_range(3..=7)).unwrap();
        let depth = r.random_range(1..=3);
        let mut layers = Vec::new();
        let mut shape = input;
        let mut ok = true;
        for i in 0..depth {
            let kind = r.random_range(0..3);
            let f = r.random_range(1..=3usize).min(shape.height.min(shape.width));
            let l = match kind {
                0 => LayerSpec::conv(f, r.random_range(1..=4))
                    .with_stride(r.random_range(1..=2))
                    .with_padding(r.random_range(0..=1)),
                1 => LayerSpec::pool(f.max(1), shape.depth, r.random_range(1..=2)).with_padding(r.random_range(0..=1)),
                _ if i == depth - 1 => LayerSpec::fc(0, r.random_range(1..=4)),
                _ => LayerSpec::conv(f, r.random_range(1..=3)),
            };
            let l = if l.filter_w == 0 {
                LayerSpec {
                    filter_w: shape.width,
                    filter_h: shape.height,
                    ..l
                }
            } else {
                l
            };
            match l.output_shape(shape) {
                Ok(s) => {
                    layers.push(l);
                    shape = s;
                }
                Err(_) => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            continue;
        }
        let Ok(spec) = NetworkSpec::new(input, layers) else {
            continue;
        };
        let neurons: usize = spec.shapes().unwrap()[1..].iter().map(|s| s.len()).sum();
        if neurons <= 64 {
            break (spec, neurons);
        }
    };
    let _ = neurons;
    let n = spec.layers.len();
    let mut net = Network::initialize(spec, &InitParams::default(), vec![0.7; n], seed).unwrap();
    for p in net.params.iter_mut().flatten() {
        for t in p.thresholds.iter_mut() {
            *t = r.random_range(0.3..3.0);
        }
    }
    let scope = if r.random_bool(0.5) {
        CompetitionScope::Column
    } else {
        CompetitionScope::Layer
    };
    let policy = match r.random_range(0..3) {
        0 => InhibitionPolicy::none(),
        1 => InhibitionPolicy::wta(),
        _ => InhibitionPolicy::soft(r.random_range(0.1..1.5)),
    }
    .with_scope(scope);
    let input = net.spec.input;
    // a short grid makes simultaneous spikes common
    let slots = r.random_range(5..=1000);
    let mut events = Vec::new();
    for m in 0..input.depth {
        for y in 0..input.height {
            for x in 0..input.width {
                if r.random_bool(0.6) {
                    let k = r.random_range(0..=slots);
                    events.push(SpikeEvent::new(k as f64 * 1e-3, 0, m, y, x));
                }
            }
        }
    }
    events.sort_by(|a, b| a.total_order(b));
    (net, policy, events)
}

/// MNIST location: `SNN_MNIST_DIR` or `<workspace>/data/mnist`.
pub fn mnist_dir() -> std::path::PathBuf {
    std::env::var("SNN_MNIST_DIR")
        .map(std::path::PathBuf::from)
        .unwrap_or_else(|_| std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist"))
}
