//! Clock-driven reference simulator.
//!
//! Time advances in fixed steps. At every step each layer, in order, sums
//! the weighted spikes its inputs emitted during the step into every
//! neuron, then every neuron is checked in site order. Nothing here shares
//! code with the event-driven engine.

use snn_core::network::Network;
use snn_core::simulator::{CompetitionScope, Inhibition, InhibitionPolicy};
use snn_core::{LayerKind, SpikeEvent};

/// Returns, per layer `1..=n`, the fired `(map, y, x, time)` tuples.
pub fn simulate(
    net: &Network,
    input: &[SpikeEvent],
    policy: InhibitionPolicy,
    dt: f64,
    t_end: f64,
) -> Vec<Vec<(usize, usize, usize, f64)>> {
    let shapes = net.shapes();
    let n = net.spec.layers.len();
    let steps = (t_end / dt).round() as usize;
    let mut potential: Vec<Vec<f64>> = shapes[1..].iter().map(|s| vec![0.0; s.len()]).collect();
    let mut fired: Vec<Vec<bool>> = shapes[1..].iter().map(|s| vec![false; s.len()]).collect();
    let mut inhibited: Vec<Vec<bool>> = shapes[1..].iter().map(|s| vec![false; s.columns()]).collect();
    let mut out = vec![Vec::new(); n];

    for k in 0..=steps {
        let t = k as f64 * dt;
        // spikes of the previous layer during this step, dense
        let mut active = vec![false; shapes[0].len()];
        for e in input {
            if (e.time / dt).round() as usize == k {
                active[shapes[0].index(e.map, e.y, e.x)] = true;
            }
        }
        for l in 0..n {
            let spec = net.spec.layers[l];
            let (ins, outs) = (shapes[l], shapes[l + 1]);
            let mut next = vec![false; outs.len()];
            let scope = |oy: usize, ox: usize| match policy.scope {
                CompetitionScope::Column => oy * outs.width + ox,
                CompetitionScope::Layer => 0,
            };
            for m in 0..outs.depth {
                for oy in 0..outs.height {
                    for ox in 0..outs.width {
                        let site = outs.index(m, oy, ox);
                        if fired[l][site] {
                            continue;
                        }
                        let mut drive = 0.0;
                        let mut any = false;
                        for c in 0..ins.depth {
                            if spec.kind == LayerKind::Pooling && c != m {
                                continue;
                            }
                            for fy in 0..spec.filter_h {
                                for fx in 0..spec.filter_w {
                                    let iy = (oy * spec.stride + fy) as isize - spec.padding as isize;
                                    let ix = (ox * spec.stride + fx) as isize - spec.padding as isize;
                                    if iy < 0 || ix < 0 || iy >= ins.height as isize || ix >= ins.width as isize {
                                        continue;
                                    }
                                    if !active[ins.index(c, iy as usize, ix as usize)] {
                                        continue;
                                    }
                                    any = true;
                                    if spec.kind != LayerKind::Pooling {
                                        drive += net.params[l].as_ref().unwrap().weights.get(m, c, fy, fx);
                                    }
                                }
                            }
                        }
                        if spec.kind == LayerKind::Pooling {
                            if any {
                                next[site] = true;
                            }
                        } else if !inhibited[l][scope(oy, ox)] {
                            potential[l][site] += drive;
                        }
                    }
                }
            }
            if spec.kind == LayerKind::Pooling {
                for (s, &f) in next.iter().enumerate() {
                    if f {
                        fired[l][s] = true;
                    }
                }
            } else {
                let th = &net.params[l].as_ref().unwrap().thresholds;
                for m in 0..outs.depth {
                    for oy in 0..outs.height {
                        for ox in 0..outs.width {
                            let site = outs.index(m, oy, ox);
                            if fired[l][site] || inhibited[l][scope(oy, ox)] || potential[l][site] < th[m] {
                                continue;
                            }
                            fired[l][site] = true;
                            potential[l][site] = 0.0;
                            next[site] = true;
                            match policy.inhibition {
                                Inhibition::None => {}
                                Inhibition::WinnerTakeAll => inhibited[l][scope(oy, ox)] = true,
                                Inhibition::Soft { v_inh } => {
                                    for m2 in 0..outs.depth {
                                        for y2 in 0..outs.height {
                                            for x2 in 0..outs.width {
                                                let s2 = outs.index(m2, y2, x2);
                                                if s2 == site || fired[l][s2] || scope(y2, x2) != scope(oy, ox) {
                                                    continue;
                                                }
                                                potential[l][s2] = (potential[l][s2] - v_inh).max(0.0);
                                            }
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
            for m in 0..outs.depth {
                for y in 0..outs.height {
                    for x in 0..outs.width {
                        if next[outs.index(m, y, x)] {
                            out[l].push((m, y, x, t));
                        }
                    }
                }
            }
            active = next;
        }
    }
    out
}
