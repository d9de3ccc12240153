//! Event-driven forward simulation of stacked integrate-and-fire layers.
//!
//! All spikes of a sample go through one global queue ordered by
//! `(time, layer, map, y, x)`. Events sharing `(time, layer)` are delivered
//! to the next layer as one batch: every receiving neuron integrates the
//! whole batch, then the neurons that crossed threshold fire in
//! `(map, y, x)` order, with inhibition applied between firings. Synapses
//! carry no delay, so a spike emitted at time `t` reaches the next layer at
//! `t`, after every other spike of its own layer at `t`.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use crate::network::{LayerKind, Network, NetworkSpec};
use crate::types::{Shape3, SpikeEvent};
use crate::{Error, Result};

/// Which neurons compete with each other.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CompetitionScope {
    /// The `L_d` neurons sharing one spatial position.
    #[default]
    Column,
    /// Every neuron of the layer.
    Layer,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Inhibition {
    #[default]
    None,
    /// Each spike lowers the potential of the other neurons in its scope by
    /// `v_inh`, floored at zero.
    Soft { v_inh: f64 },
    /// The first spike in a scope silences the rest of the scope until the
    /// end of the sample.
    WinnerTakeAll,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct InhibitionPolicy {
    pub inhibition: Inhibition,
    pub scope: CompetitionScope,
}

impl InhibitionPolicy {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn wta() -> Self {
        InhibitionPolicy {
            inhibition: Inhibition::WinnerTakeAll,
            scope: CompetitionScope::Column,
        }
    }

    pub fn soft(v_inh: f64) -> Self {
        InhibitionPolicy {
            inhibition: Inhibition::Soft { v_inh },
            scope: CompetitionScope::Column,
        }
    }

    pub fn with_scope(mut self, scope: CompetitionScope) -> Self {
        self.scope = scope;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if let Inhibition::Soft { v_inh } = self.inhibition {
            if !(v_inh >= 0.0 && v_inh.is_finite()) {
                return Err(Error::param("v_inh", format!("must be >= 0, got {v_inh}")));
            }
        }
        Ok(())
    }
}

impl std::str::FromStr for InhibitionPolicy {
    type Err = String;

    /// `none`, `wta`, `soft` (V_inh = 1.0) or `soft:<v_inh>`.
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "none" | "no" => Ok(Self::none()),
            "wta" | "winner-take-all" => Ok(Self::wta()),
            "soft" => Ok(Self::soft(1.0)),
            _ => {
                if let Some(v) = s.strip_prefix("soft:") {
                    let v: f64 = v.parse().map_err(|_| format!("bad V_inh `{v}`"))?;
                    Ok(Self::soft(v))
                } else {
                    Err(format!("unknown inhibition policy `{s}`"))
                }
            }
        }
    }
}

impl std::fmt::Display for InhibitionPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.inhibition {
            Inhibition::None => write!(f, "none"),
            Inhibition::WinnerTakeAll => write!(f, "wta"),
            Inhibition::Soft { v_inh } => write!(f, "soft:{v_inh}"),
        }
    }
}

/// State of a single integrate-and-fire neuron.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeuronState {
    pub potential: f64,
    pub threshold: f64,
    pub fired: bool,
}

impl NeuronState {
    pub fn new(threshold: f64) -> Self {
        NeuronState {
            potential: 0.0,
            threshold,
            fired: false,
        }
    }

    /// Adds `voltage`; on crossing the threshold the neuron fires at `time`,
    /// resets to zero and ignores input until [`reset`](Self::reset).
    pub fn integrate(&mut self, voltage: f64, time: f64) -> Option<f64> {
        if self.fired {
            return None;
        }
        self.potential += voltage;
        if self.potential >= self.threshold {
            self.potential = 0.0;
            self.fired = true;
            Some(time)
        } else {
            None
        }
    }

    pub fn reset(&mut self) {
        self.potential = 0.0;
        self.fired = false;
    }
}

/// Compact per-layer spike list: `(time, site)` pairs sorted by time then
/// site, where `site` is the `(map, y, x)` flat index. Voltages are 1.0.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SpikeTrain {
    pub spikes: Vec<(f64, u32)>,
}

impl SpikeTrain {
    pub fn from_events(events: &[SpikeEvent], shape: Shape3) -> Result<Self> {
        let mut spikes = Vec::with_capacity(events.len());
        for e in events {
            if !shape.contains(e.map, e.y, e.x) || !e.time.is_finite() {
                return Err(Error::MalformedEvent(format!(
                    "{e:?} outside {shape} or non-finite"
                )));
            }
            spikes.push((e.time, shape.index(e.map, e.y, e.x) as u32));
        }
        let mut t = SpikeTrain { spikes };
        t.sort();
        Ok(t)
    }

    pub fn to_events(&self, layer: usize, shape: Shape3) -> Vec<SpikeEvent> {
        self.spikes
            .iter()
            .map(|&(t, s)| {
                let s = s as usize;
                let cols = shape.columns();
                let (m, r) = (s / cols, s % cols);
                SpikeEvent::new(t, layer, m, r / shape.width, r % shape.width)
            })
            .collect()
    }

    pub fn sort(&mut self) {
        self.spikes
            .sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    }

    pub fn len(&self) -> usize {
        self.spikes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spikes.is_empty()
    }
}

/// Receptive-field wiring of one layer: for every input position, the
/// output columns it feeds and the filter offset it lands on.
#[derive(Debug, Clone)]
pub(crate) struct Fanout {
    starts: Vec<u32>,
    entries: Vec<(u32, u32)>,
}

impl Fanout {
    pub(crate) fn build(
        input: Shape3,
        output: Shape3,
        filter_h: usize,
        filter_w: usize,
        stride: usize,
        padding: usize,
    ) -> Self {
        let positions = input.height * input.width;
        let mut lists: Vec<Vec<(u32, u32)>> = vec![Vec::new(); positions];
        for oy in 0..output.height {
            for ox in 0..output.width {
                for fy in 0..filter_h {
                    let iy = (oy * stride + fy) as isize - padding as isize;
                    if iy < 0 || iy >= input.height as isize {
                        continue;
                    }
                    for fx in 0..filter_w {
                        let ix = (ox * stride + fx) as isize - padding as isize;
                        if ix < 0 || ix >= input.width as isize {
                            continue;
                        }
                        let p = iy as usize * input.width + ix as usize;
                        lists[p].push(((oy * output.width + ox) as u32, (fy * filter_w + fx) as u32));
                    }
                }
            }
        }
        let mut starts = Vec::with_capacity(positions + 1);
        let mut entries = Vec::new();
        starts.push(0);
        for l in lists {
            entries.extend(l);
            starts.push(entries.len() as u32);
        }
        Fanout { starts, entries }
    }

    #[inline]
    pub(crate) fn targets(&self, position: usize) -> &[(u32, u32)] {
        &self.entries[self.starts[position] as usize..self.starts[position + 1] as usize]
    }
}

#[derive(Debug, Clone)]
struct LayerState {
    potential: Vec<f64>,
    fired: Vec<bool>,
    inhibited: Vec<bool>,
    candidate: Vec<bool>,
    candidates: Vec<u32>,
}

impl LayerState {
    fn new(shape: Shape3) -> Self {
        let n = shape.len();
        LayerState {
            potential: vec![0.0; n],
            fired: vec![false; n],
            inhibited: vec![false; shape.columns()],
            candidate: vec![false; n],
            candidates: Vec::new(),
        }
    }

    fn reset(&mut self) {
        self.potential.fill(0.0);
        self.fired.fill(false);
        self.inhibited.fill(false);
        self.candidate.fill(false);
        self.candidates.clear();
    }
}

#[derive(Debug, Clone, Copy)]
struct Queued {
    time: f64,
    layer: u32,
    site: u32,
    voltage: f64,
}

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Queued {}
impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Queued {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.layer.cmp(&other.layer))
            .then(self.site.cmp(&other.site))
    }
}

/// Reusable simulation engine for one architecture.
///
/// Holds the precomputed wiring and the per-sample neuron state; the
/// parameters come from the [`Network`] passed to each run, so one engine
/// can serve any network with the same [`NetworkSpec`].
#[derive(Debug, Clone)]
pub struct Simulator {
    spec: NetworkSpec,
    shapes: Vec<Shape3>,
    fanouts: Vec<Fanout>,
    states: Vec<LayerState>,
}

impl Simulator {
    pub fn new(spec: &NetworkSpec) -> Result<Self> {
        let shapes = spec.shapes()?;
        let mut fanouts = Vec::with_capacity(spec.layers.len());
        let mut states = Vec::with_capacity(spec.layers.len());
        for (i, l) in spec.layers.iter().enumerate() {
            fanouts.push(Fanout::build(
                shapes[i],
                shapes[i + 1],
                l.filter_h,
                l.filter_w,
                l.stride,
                l.padding,
            ));
            states.push(LayerState::new(shapes[i + 1]));
        }
        Ok(Simulator {
            spec: spec.clone(),
            shapes,
            fanouts,
            states,
        })
    }

    pub fn shapes(&self) -> &[Shape3] {
        &self.shapes
    }

    /// Clears potentials, fired flags and inhibition. Parameters live in the
    /// network and are not touched.
    pub fn reset_sample(&mut self) {
        self.states.iter_mut().for_each(LayerState::reset);
    }

    /// Membrane potentials of layer `k >= 1` in `(map, y, x)` order.
    pub fn potentials(&self, layer: usize) -> Vec<f64> {
        let shape = self.shapes[layer];
        let st = &self.states[layer - 1];
        let maps = shape.depth;
        let cols = shape.columns();
        let mut v = vec![0.0; shape.len()];
        for c in 0..cols {
            for m in 0..maps {
                v[m * cols + c] = st.potential[c * maps + m];
            }
        }
        v
    }

    /// Fired flags of layer `k >= 1` in `(map, y, x)` order.
    pub fn fired(&self, layer: usize) -> Vec<bool> {
        let shape = self.shapes[layer];
        let st = &self.states[layer - 1];
        let maps = shape.depth;
        let cols = shape.columns();
        let mut v = vec![false; shape.len()];
        for c in 0..cols {
            for m in 0..maps {
                v[m * cols + c] = st.fired[c * maps + m];
            }
        }
        v
    }

    /// Simulates one sample through the whole network.
    ///
    /// `input` must be sorted under [`SpikeEvent::total_order`] and lie in
    /// layer 0. Returns the spikes emitted by each layer `1..=n` (index
    /// `k - 1` for layer `k`).
    pub fn run_sample(
        &mut self,
        net: &Network,
        input: &[SpikeEvent],
        policy: InhibitionPolicy,
    ) -> Result<Vec<Vec<SpikeEvent>>> {
        for (i, e) in input.iter().enumerate() {
            if e.layer != 0 {
                return Err(Error::MalformedEvent(format!(
                    "input event {i} targets layer {}",
                    e.layer
                )));
            }
            if !e.voltage.is_finite() {
                return Err(Error::MalformedEvent(format!("input event {i} has non-finite voltage")));
            }
            if i > 0 && input[i - 1].total_order(e) == Ordering::Greater {
                return Err(Error::MalformedEvent(format!("input event {i} out of order")));
            }
        }
        let input_shape = self.shapes[0];
        let mut queue = Vec::with_capacity(input.len());
        for e in input {
            if !input_shape.contains(e.map, e.y, e.x) || !e.time.is_finite() {
                return Err(Error::MalformedEvent(format!(
                    "{e:?} outside input {input_shape}"
                )));
            }
            queue.push(Queued {
                time: e.time,
                layer: 0,
                site: input_shape.index(e.map, e.y, e.x) as u32,
                voltage: e.voltage,
            });
        }
        let depth = self.spec.layers.len();
        let trains = self.propagate(net, 0, queue, depth, policy)?;
        Ok(trains
            .iter()
            .enumerate()
            .map(|(i, t)| t.to_events(i + 1, self.shapes[i + 1]))
            .collect())
    }

    /// Propagates a sorted spike train living at layer `from` through
    /// layers `from + 1 ..= to`. Returns one train per simulated layer.
    pub fn run_train(
        &mut self,
        net: &Network,
        from: usize,
        input: &SpikeTrain,
        to: usize,
        policy: InhibitionPolicy,
    ) -> Result<Vec<SpikeTrain>> {
        let n = self.shapes[from].len() as u32;
        let mut queue = Vec::with_capacity(input.len());
        for &(time, site) in &input.spikes {
            if site >= n || !time.is_finite() {
                return Err(Error::MalformedEvent(format!(
                    "site {site} at t={time} outside layer {from} ({})",
                    self.shapes[from]
                )));
            }
            queue.push(Queued {
                time,
                layer: from as u32,
                site,
                voltage: 1.0,
            });
        }
        self.propagate(net, from, queue, to, policy)
    }

    fn propagate(
        &mut self,
        net: &Network,
        from: usize,
        initial: Vec<Queued>,
        to: usize,
        policy: InhibitionPolicy,
    ) -> Result<Vec<SpikeTrain>> {
        if net.spec != self.spec {
            return Err(Error::InvalidArchitecture(
                "network does not match the simulator's architecture".into(),
            ));
        }
        if to > self.spec.layers.len() || from > to {
            return Err(Error::LayerOutOfRange {
                index: to,
                count: self.spec.layers.len(),
            });
        }
        policy.validate()?;
        self.reset_sample();
        let mut outputs = vec![SpikeTrain::default(); to - from];
        if from == to {
            return Ok(outputs);
        }
        let mut heap: BinaryHeap<Reverse<Queued>> = initial.into_iter().map(Reverse).collect();
        let mut batch: Vec<Queued> = Vec::new();
        while let Some(Reverse(head)) = heap.pop() {
            batch.clear();
            batch.push(head);
            while let Some(Reverse(next)) = heap.peek() {
                if next.time.total_cmp(&head.time) == Ordering::Equal && next.layer == head.layer {
                    batch.push(heap.pop().unwrap().0);
                } else {
                    break;
                }
            }
            let src = head.layer as usize;
            if src >= to {
                continue;
            }
            let target = src + 1;
            let fired = self.deliver(net, target, &batch, policy);
            let out = &mut outputs[target - from - 1];
            for site in fired {
                out.spikes.push((head.time, site));
                if target < to {
                    heap.push(Reverse(Queued {
                        time: head.time,
                        layer: target as u32,
                        site,
                        voltage: 1.0,
                    }));
                }
            }
        }
        Ok(outputs)
    }

    /// Integrates one `(time, layer)` batch into layer `target` and returns
    /// the sites that fire, in site order.
    fn deliver(
        &mut self,
        net: &Network,
        target: usize,
        batch: &[Queued],
        policy: InhibitionPolicy,
    ) -> Vec<u32> {
        let spec = self.spec.layers[target - 1];
        let in_shape = self.shapes[target - 1];
        let out_shape = self.shapes[target];
        let fanout = &self.fanouts[target - 1];
        let st = &mut self.states[target - 1];
        let maps = out_shape.depth;
        let cols = out_shape.columns();
        let in_cols = in_shape.columns();
        let scope_of = |col: usize| match policy.scope {
            CompetitionScope::Column => col,
            CompetitionScope::Layer => 0,
        };

        match spec.kind {
            LayerKind::Pooling => {
                for ev in batch {
                    let (c, pos) = (ev.site as usize / in_cols, ev.site as usize % in_cols);
                    for &(col, _) in fanout.targets(pos) {
                        let n = col as usize * maps + c;
                        if !st.fired[n] && !st.candidate[n] {
                            st.candidate[n] = true;
                            st.candidates.push((c * cols + col as usize) as u32);
                        }
                    }
                }
                let mut fired = std::mem::take(&mut st.candidates);
                fired.sort_unstable();
                for &site in &fired {
                    let s = site as usize;
                    let n = (s % cols) * maps + s / cols;
                    st.candidate[n] = false;
                    st.fired[n] = true;
                }
                fired
            }
            LayerKind::Convolution | LayerKind::FullyConnected => {
                let params = net.params[target - 1]
                    .as_ref()
                    .expect("trainable layer has parameters");
                let w = &params.weights;
                let th = &params.thresholds;
                let taps = spec.filter_h * spec.filter_w;
                for ev in batch {
                    let (c, pos) = (ev.site as usize / in_cols, ev.site as usize % in_cols);
                    for &(col, off) in fanout.targets(pos) {
                        let col = col as usize;
                        if st.inhibited[scope_of(col)] {
                            continue;
                        }
                        let row = w.fan_out_row(c * taps + off as usize);
                        let base = col * maps;
                        let pot = &mut st.potential[base..base + maps];
                        let fired = &st.fired[base..base + maps];
                        for m in 0..maps {
                            if fired[m] {
                                continue;
                            }
                            pot[m] += row[m] * ev.voltage;
                            if pot[m] >= th[m] && !st.candidate[base + m] {
                                st.candidate[base + m] = true;
                                st.candidates.push((m * cols + col) as u32);
                            }
                        }
                    }
                }
                let mut cands = std::mem::take(&mut st.candidates);
                cands.sort_unstable();
                let mut out = Vec::new();
                for &site in &cands {
                    let s = site as usize;
                    let (m, col) = (s / cols, s % cols);
                    let n = col * maps + m;
                    st.candidate[n] = false;
                    if st.fired[n] || st.inhibited[scope_of(col)] || st.potential[n] < th[m] {
                        continue;
                    }
                    st.potential[n] = 0.0;
                    st.fired[n] = true;
                    out.push(site);
                    match policy.inhibition {
                        Inhibition::None => {}
                        Inhibition::WinnerTakeAll => st.inhibited[scope_of(col)] = true,
                        Inhibition::Soft { v_inh } => {
                            let range = match policy.scope {
                                CompetitionScope::Column => col * maps..(col + 1) * maps,
                                CompetitionScope::Layer => 0..cols * maps,
                            };
                            for k in range {
                                if k != n && !st.fired[k] {
                                    st.potential[k] = (st.potential[k] - v_inh).max(0.0);
                                }
                            }
                        }
                    }
                }
                cands.clear();
                st.candidates = cands;
                out
            }
        }
    }
}

/// One-shot convenience wrapper around [`Simulator::run_sample`].
pub fn run_sample(
    net: &Network,
    input: &[SpikeEvent],
    policy: InhibitionPolicy,
) -> Result<Vec<Vec<SpikeEvent>>> {
    Simulator::new(&net.spec)?.run_sample(net, input, policy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{InitParams, LayerParams, LayerSpec, SynapseTensor};

    #[test]
    fn integrate_fires_on_third_spike() {
        let mut n = NeuronState::new(3.0);
        assert_eq!(n.integrate(1.0, 0.1), None);
        assert_eq!(n.integrate(1.0, 0.2), None);
        assert_eq!(n.integrate(1.0, 0.3), Some(0.3));
        assert_eq!(n.potential, 0.0);
        assert!(n.fired);
        // a unit spike already reaches a unit threshold
        let mut n = NeuronState::new(1.0);
        assert_eq!(n.integrate(1.0, 0.1), Some(0.1));
    }

    #[test]
    fn integrate_below_threshold() {
        let mut n = NeuronState::new(5.0);
        for t in [0.1, 0.2, 0.3, 0.4] {
            assert_eq!(n.integrate(1.0, t), None);
        }
        assert_eq!(n.potential, 4.0);
    }

    #[test]
    fn fired_neuron_ignores_input() {
        let mut n = NeuronState::new(1.0);
        n.integrate(2.0, 0.1);
        let before = n;
        assert_eq!(n.integrate(5.0, 0.2), None);
        assert_eq!(n, before);
    }

    fn pool_net() -> Network {
        let spec = NetworkSpec::new(
            Shape3::new(1, 4, 4).unwrap(),
            vec![LayerSpec::pool(2, 1, 2)],
        )
        .unwrap();
        Network::initialize(spec, &InitParams::default(), vec![0.7], 0).unwrap()
    }

    #[test]
    fn pooling_passes_first_spike_only() {
        let net = pool_net();
        let input = vec![
            SpikeEvent::new(0.4, 0, 0, 0, 0),
            SpikeEvent::new(0.6, 0, 0, 1, 1),
        ];
        let out = run_sample(&net, &input, InhibitionPolicy::none()).unwrap();
        assert_eq!(out[0], vec![SpikeEvent::new(0.4, 1, 0, 0, 0)]);
    }

    #[test]
    fn pooling_fields_are_independent() {
        let net = pool_net();
        let input = vec![
            SpikeEvent::new(0.4, 0, 0, 0, 0),
            SpikeEvent::new(0.6, 0, 0, 3, 3),
        ];
        let out = run_sample(&net, &input, InhibitionPolicy::none()).unwrap();
        assert_eq!(
            out[0],
            vec![
                SpikeEvent::new(0.4, 1, 0, 0, 0),
                SpikeEvent::new(0.6, 1, 0, 1, 1)
            ]
        );
    }

    fn single_conv(maps: usize, weight: f64, threshold: f64) -> Network {
        let spec = NetworkSpec::new(
            Shape3::new(1, 1, 3).unwrap(),
            vec![LayerSpec {
                kind: LayerKind::Convolution,
                filter_w: 3,
                filter_h: 1,
                maps,
                stride: 1,
                padding: 0,
            }],
        )
        .unwrap();
        let weights = SynapseTensor::filled(maps, 1, 1, 3, weight, (0.0, 1.0)).unwrap();
        Network {
            spec,
            params: vec![Some(LayerParams {
                weights,
                thresholds: vec![threshold; maps],
            })],
            targets: vec![0.7],
        }
    }

    #[test]
    fn empty_input_empty_output() {
        let net = Network::initialize(
            NetworkSpec::mnist_scaled(4, 4, 4),
            &InitParams::default(),
            vec![0.7; 5],
            1,
        )
        .unwrap();
        let out = run_sample(&net, &[], InhibitionPolicy::wta()).unwrap();
        assert_eq!(out.len(), 5);
        assert!(out.iter().all(|l| l.is_empty()));
    }

    #[test]
    fn wta_admits_one_winner_on_tie() {
        let net = single_conv(2, 1.0, 3.0);
        let input: Vec<_> = (0..3).map(|x| SpikeEvent::new(0.3, 0, 0, 0, x)).collect();
        let out = run_sample(&net, &input, InhibitionPolicy::wta()).unwrap();
        assert_eq!(out[0], vec![SpikeEvent::new(0.3, 1, 0, 0, 0)]);
        let out = run_sample(&net, &input, InhibitionPolicy::none()).unwrap();
        assert_eq!(out[0].len(), 2);
    }

    #[test]
    fn soft_inhibition_delays_competitor() {
        let mut net = single_conv(2, 1.0, 2.0);
        // map 1 needs all three inputs once map 0 has fired and inhibited it
        net.params[0].as_mut().unwrap().thresholds = vec![2.0, 2.0];
        let input = vec![
            SpikeEvent::new(0.1, 0, 0, 0, 0),
            SpikeEvent::new(0.2, 0, 0, 0, 1),
            SpikeEvent::new(0.3, 0, 0, 0, 2),
        ];
        let out = run_sample(&net, &input, InhibitionPolicy::soft(1.0)).unwrap();
        // at t=0.2 both reach 2.0; map 0 fires, map 1 drops to 1.0, then
        // reaches 2.0 at t=0.3
        assert_eq!(
            out[0],
            vec![
                SpikeEvent::new(0.2, 1, 0, 0, 0),
                SpikeEvent::new(0.3, 1, 1, 0, 0)
            ]
        );
    }

    #[test]
    fn soft_inhibition_floors_at_zero() {
        let net = single_conv(2, 0.1, 0.5);
        let mut sim = Simulator::new(&net.spec).unwrap();
        let input = vec![SpikeEvent::new(0.1, 0, 0, 0, 0)];
        let mut n2 = net.clone();
        n2.params[0].as_mut().unwrap().thresholds = vec![0.1, 0.5];
        sim.run_sample(&n2, &input, InhibitionPolicy::soft(5.0)).unwrap();
        assert_eq!(sim.potentials(1), vec![0.0, 0.0]);
    }

    #[test]
    fn reset_clears_state_but_not_parameters() {
        let net = single_conv(2, 0.5, 5.0);
        let mut sim = Simulator::new(&net.spec).unwrap();
        let input: Vec<_> = (0..3).map(|x| SpikeEvent::new(0.1, 0, 0, 0, x)).collect();
        sim.run_sample(&net, &input, InhibitionPolicy::none()).unwrap();
        assert_eq!(sim.potentials(1), vec![1.5, 1.5]);
        let before = net.clone();
        sim.reset_sample();
        assert!(sim.potentials(1).iter().all(|&v| v == 0.0));
        assert!(sim.fired(1).iter().all(|&f| !f));
        assert_eq!(net, before);
    }

    #[test]
    fn malformed_events_are_rejected() {
        let net = single_conv(1, 0.5, 5.0);
        let bad = vec![SpikeEvent::new(0.1, 0, 0, 0, 7)];
        assert!(matches!(
            run_sample(&net, &bad, InhibitionPolicy::none()),
            Err(Error::MalformedEvent(_))
        ));
        let unsorted = vec![
            SpikeEvent::new(0.5, 0, 0, 0, 0),
            SpikeEvent::new(0.1, 0, 0, 0, 1),
        ];
        assert!(run_sample(&net, &unsorted, InhibitionPolicy::none()).is_err());
    }

    #[test]
    fn padding_is_silent() {
        let spec = NetworkSpec::new(
            Shape3::new(1, 2, 2).unwrap(),
            vec![LayerSpec::conv(3, 1).with_padding(1)],
        )
        .unwrap();
        let net = Network {
            params: vec![Some(LayerParams {
                weights: SynapseTensor::filled(1, 1, 3, 3, 1.0, (0.0, 1.0)).unwrap(),
                thresholds: vec![4.0],
            })],
            spec,
            targets: vec![0.7],
        };
        let input: Vec<_> = [(0, 0), (0, 1), (1, 0), (1, 1)]
            .iter()
            .map(|&(y, x)| SpikeEvent::new(0.5, 0, 0, y, x))
            .collect();
        let out = run_sample(&net, &input, InhibitionPolicy::none()).unwrap();
        // every output sees all four real inputs, none from padding
        assert_eq!(out[0].len(), 4);
    }

    #[test]
    fn policy_parsing() {
        assert_eq!("wta".parse::<InhibitionPolicy>().unwrap(), InhibitionPolicy::wta());
        assert_eq!("none".parse::<InhibitionPolicy>().unwrap(), InhibitionPolicy::none());
        assert_eq!(
            "soft:0.5".parse::<InhibitionPolicy>().unwrap(),
            InhibitionPolicy::soft(0.5)
        );
        assert!("hard".parse::<InhibitionPolicy>().is_err());
    }
}
