//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! `cargo test -p snn-core --test acceptance -- 4 6` runs a subset. The
//! MNIST criteria (1, 2, 3, 8, 9) read IDX files from `SNN_MNIST_DIR` or
//! `data/mnist` under the workspace root.

mod common;

use std::time::{Duration, Instant};

use rand::Rng;
use snn_core::classifier::majority_share;
use snn_core::config::ExperimentConfig;
use snn_core::datasets::load_mnist;
use snn_core::experiment::{evaluate, prepare, run_row, train_models, Dataset, EvalResult, SweepAxis};
use snn_core::model_io::ModelFile;
use snn_core::network::{LayerSpec, Network, NetworkSpec};
use snn_core::plasticity::{
    adapt_threshold_target, adapt_threshold_wta, apply_stdp, BiologicalVariant, LoserDivisor, StdpContext, StdpRule,
    ThresholdParams,
};
use snn_core::readout::{decode, sparsity};
use snn_core::rng::{self, Purpose};
use snn_core::simulator::{run_sample, InhibitionPolicy, SpikeTrain};
use snn_core::trainer::{train_layer, EnsembleConfig, TrainConfig, TrainLog};
use snn_core::{Shape3, SpikeEvent};

// Pinned tolerances.
const C1_MIN_ACCURACY: f64 = 0.90;
const C1_MAX_RUNTIME: Duration = Duration::from_secs(2 * 3600);
const C3_MAJORITY_SLACK: f64 = 0.005;
const C4_TIME_TOLERANCE: f64 = 0.05;
const C4_MAX_SHARE: f64 = 0.9;
const C5_TIME_TOLERANCE: f64 = 1e-6;
const C5_MAX_RUNTIME: Duration = Duration::from_secs(60);
const C7_SCALE_TOLERANCE: f64 = 1e-12;
const C9_SLACK: f64 = 0.003;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

/// Scaled MNIST setup shared by the data-driven criteria.
struct Mnist {
    cfg: ExperimentConfig,
    train: Dataset,
    test: Dataset,
}

fn scaled_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.layers = NetworkSpec::mnist_scaled(16, 32, 512).layers;
    cfg.train.epochs = 20;
    cfg.train.rule = StdpRule::biological(0.1, 0.1);
    cfg.train.t_target = 0.75;
    cfg.inference = InhibitionPolicy::none();
    cfg.train_limit = Some(10_000);
    cfg.test_limit = Some(10_000);
    cfg
}

fn load() -> Result<Mnist, String> {
    let dir = common::mnist_dir();
    let cfg = scaled_config();
    let read = |train: bool| load_mnist(&dir, train).map_err(|e| format!("MNIST not readable at {}: {e}", dir.display()));
    let (tr, te) = (read(true)?, read(false)?);
    let train = prepare(&tr, cfg.train_limit, &cfg).map_err(|e| e.to_string())?;
    let test = prepare(&te, cfg.test_limit, &cfg).map_err(|e| e.to_string())?;
    Ok(Mnist { cfg, train, test })
}

struct Run {
    nets: Vec<Network>,
    result: EvalResult,
    model: Vec<u8>,
    row: String,
}

fn train_eval(m: &Mnist, cfg: &ExperimentConfig, seed: u64) -> Result<Run, String> {
    let trained = train_models(cfg, &m.train, seed).map_err(|e| e.to_string())?;
    let nets: Vec<Network> = trained.into_iter().map(|t| t.network).collect();
    let (result, _) =
        evaluate(&nets, &m.train, &m.test, cfg.inference, &cfg.train.window, &cfg.svm).map_err(|e| e.to_string())?;
    let model = ModelFile {
        network: nets[0].clone(),
        window: cfg.train.window,
        dog: cfg.dog,
    }
    .to_bytes();
    let row = run_row("acceptance", &result, seed);
    Ok(Run {
        nets,
        result,
        model,
        row,
    })
}

#[derive(Default)]
struct Context {
    mnist: Option<Result<Mnist, String>>,
    seed0: Option<Result<Run, String>>,
}

impl Context {
    fn mnist(&mut self) -> Result<&Mnist, String> {
        self.mnist.get_or_insert_with(load).as_ref().map_err(Clone::clone)
    }

    /// Seed-0 baseline run, trained once and reused.
    fn seed0(&mut self) -> Result<&Run, String> {
        if self.seed0.is_none() {
            let run = self.mnist().and_then(|m| {
                let cfg = m.cfg.clone();
                train_eval(m, &cfg, 0)
            });
            self.seed0 = Some(run);
        }
        self.seed0.as_ref().unwrap().as_ref().map_err(Clone::clone)
    }
}

fn c1(ctx: &mut Context) -> Result<Outcome, String> {
    let start = Instant::now();
    let mut acc = vec![ctx.seed0()?.result.accuracy];
    let m = ctx.mnist()?;
    for seed in 1..3 {
        acc.push(train_eval(m, &m.cfg, seed)?.result.accuracy);
    }
    // the seed-0 run may have been cached; charge its time only once
    let elapsed = start.elapsed();
    let mean = acc.iter().sum::<f64>() / acc.len() as f64;
    Ok(outcome(
        mean >= C1_MIN_ACCURACY && elapsed <= C1_MAX_RUNTIME,
        format!(
            "mean recognition {:.2}% over seeds 0..3 ({}) >= {:.0}%, runtime {:.0}s",
            100.0 * mean,
            acc.iter().map(|a| format!("{:.2}", 100.0 * a)).collect::<Vec<_>>().join(", "),
            100.0 * C1_MIN_ACCURACY,
            elapsed.as_secs_f64()
        ),
    ))
}

fn c2(ctx: &mut Context) -> Result<Outcome, String> {
    let none = ctx.seed0()?.result.accuracy;
    let nets = ctx.seed0()?.nets.clone();
    let m = ctx.mnist()?;
    let policy = |name: &str| -> Result<EvalResult, String> {
        let c = SweepAxis::Policy.apply(&m.cfg, name).map_err(|e| e.to_string())?;
        evaluate(&nets, &m.train, &m.test, c.inference, &c.train.window, &c.svm)
            .map(|r| r.0)
            .map_err(|e| e.to_string())
    };
    let soft = policy("soft")?;
    let wta = policy("wta")?;
    Ok(outcome(
        none > soft.accuracy && soft.accuracy > wta.accuracy && wta.sparsity == 1.0,
        format!(
            "none {:.2}% > soft {:.2}% > wta {:.2}%, wta sparsity {:.4}",
            100.0 * none,
            100.0 * soft.accuracy,
            100.0 * wta.accuracy,
            wta.sparsity
        ),
    ))
}

fn c3(ctx: &mut Context) -> Result<Outcome, String> {
    let m = ctx.mnist()?;
    let mut cfg = m.cfg.clone();
    cfg.train.delta_t = -0.20;
    let r = train_eval(m, &cfg, 0)?.result;
    let majority = majority_share(&m.test.labels).map_err(|e| e.to_string())?;
    Ok(outcome(
        r.test_output_spikes == 0 && r.sparsity == 0.0 && (r.accuracy - majority).abs() <= C3_MAJORITY_SLACK,
        format!(
            "{} test output spikes, sparsity {:.4}, recognition {:.2}% vs majority share {:.2}%",
            r.test_output_spikes,
            r.sparsity,
            100.0 * r.accuracy,
            100.0 * majority
        ),
    ))
}

/// Final-epoch mean winner time and largest win share for one column of
/// four neurons trained on a stationary synthetic ensemble.
fn synthetic_column(t_target: f64, divisor: LoserDivisor) -> (f64, f64) {
    const INPUTS: usize = 8;
    let input = Shape3::new(1, INPUTS, INPUTS).unwrap();
    let spec = NetworkSpec::new(input, vec![LayerSpec::fc(INPUTS, 4)]).unwrap();
    let mut r = rng::stream(7, Purpose::Synthetic, 0);
    // every input fires once, uniformly over the coding window
    let samples: Vec<SpikeTrain> = (0..200)
        .map(|_| {
            let mut events: Vec<SpikeEvent> = (0..INPUTS * INPUTS)
                .map(|i| SpikeEvent::new(r.random::<f64>(), 0, 0, i / INPUTS, i % INPUTS))
                .collect();
            events.sort_by(|a, b| a.total_order(b));
            SpikeTrain::from_events(&events, input).unwrap()
        })
        .collect();
    let cfg = TrainConfig {
        epochs: 100,
        t_target,
        divisor,
        seed: 11,
        ..TrainConfig::default()
    };
    let mut net = Network::initialize(spec.clone(), &cfg.init, cfg.targets(&spec), cfg.seed).unwrap();
    let mut log = TrainLog::default();
    train_layer(&mut net, 1, &samples, &cfg, &mut log).unwrap();
    let last = log.last_for(1).unwrap();
    let share = last.win_share.iter().cloned().fold(0.0, f64::max);
    (last.mean_winner_time.unwrap_or(f64::NAN), share)
}

fn c4(_: &mut Context) -> Result<Outcome, String> {
    let mut pass = true;
    let mut parts = Vec::new();
    for t in [0.3, 0.5, 0.7, 0.9] {
        let (mean, share) = synthetic_column(t, LoserDivisor::Competitors);
        pass &= (mean - t).abs() <= C4_TIME_TOLERANCE && share <= C4_MAX_SHARE;
        parts.push(format!("{t}: mean {mean:.3} share {share:.2}"));
    }
    Ok(outcome(pass, parts.join("; ")))
}

/// Same run with the losers' decrease spread over N−1; informational.
fn c4_losers() -> String {
    [0.3, 0.5, 0.7, 0.9]
        .iter()
        .map(|&t| {
            let (mean, share) = synthetic_column(t, LoserDivisor::Losers);
            format!("{t}: mean {mean:.3} share {share:.2}")
        })
        .collect::<Vec<_>>()
        .join("; ")
}

fn c5(_: &mut Context) -> Result<Outcome, String> {
    let start = Instant::now();
    let mut mismatches = 0;
    let mut spikes = 0;
    for seed in 0..200 {
        let (net, policy, input) = common::random_case(seed);
        let fast = run_sample(&net, &input, policy).map_err(|e| e.to_string())?;
        let slow = common::dense::simulate(&net, &input, policy, 1e-3, 1.0);
        let same = fast.iter().zip(&slow).all(|(f, s)| {
            let mut f: Vec<_> = f.iter().map(|e| (e.map, e.y, e.x, e.time)).collect();
            let mut s = s.clone();
            let key = |a: &(usize, usize, usize, f64)| (a.0, a.1, a.2);
            f.sort_by_key(key);
            s.sort_by_key(key);
            f.len() == s.len()
                && f.iter().zip(&s).all(|(a, b)| key(a) == key(b) && (a.3 - b.3).abs() <= C5_TIME_TOLERANCE)
        });
        spikes += fast.iter().map(Vec::len).sum::<usize>();
        mismatches += usize::from(!same);
    }
    let elapsed = start.elapsed();
    Ok(outcome(
        mismatches == 0 && elapsed < C5_MAX_RUNTIME,
        format!(
            "{mismatches}/200 networks differ, {spikes} spikes compared, {:.2}s",
            elapsed.as_secs_f64()
        ),
    ))
}

fn c6(_: &mut Context) -> Result<Outcome, String> {
    let mut r = rng::stream(3, Purpose::Synthetic, 6);
    let ctx = StdpContext::default();
    let mut weight_violations = 0;
    for _ in 0..100_000 {
        let eta = r.random_range(1e-4..2.0);
        let rule = match r.random_range(0..4) {
            0 => StdpRule::additive(eta),
            1 => StdpRule::multiplicative(eta, r.random_range(0.1..10.0)),
            2 => StdpRule::biological(eta, r.random_range(0.01..1.0)),
            _ => StdpRule::Biological {
                eta,
                tau: r.random_range(0.01..1.0),
                variant: BiologicalVariant::Decaying,
            },
        };
        let mut weights = snn_core::network::SynapseTensor::filled(1, 1, 1, 1, r.random::<f64>(), (ctx.w_min, ctx.w_max))
            .map_err(|e| e.to_string())?;
        let pre = r.random_bool(0.8).then(|| r.random::<f64>());
        apply_stdp(&mut weights, 0, &[pre], r.random::<f64>(), &rule, &ctx).map_err(|e| e.to_string())?;
        let w = weights.get(0, 0, 0, 0);
        weight_violations += usize::from(!(ctx.w_min..=ctx.w_max).contains(&w));
    }
    let mut threshold_violations = 0;
    for _ in 0..10_000 {
        let n = r.random_range(1..=8);
        let th_min = r.random_range(0.1..2.0);
        let mut th: Vec<f64> = (0..n).map(|_| r.random_range(th_min..th_min + 5.0)).collect();
        for _ in 0..r.random_range(1..=50) {
            let eta = r.random_range(0.0..3.0);
            let times: Vec<Option<f64>> = (0..n).map(|_| r.random_bool(0.5).then(|| r.random::<f64>())).collect();
            match r.random_range(0..3) {
                0 => {
                    let i = r.random_range(0..n);
                    let p = ThresholdParams {
                        t_target: r.random::<f64>(),
                        eta,
                        th_min,
                    };
                    th[i] = adapt_threshold_target(th[i], r.random::<f64>(), &p);
                }
                1 => {
                    let divisor = if r.random_bool(0.5) {
                        LoserDivisor::Competitors
                    } else {
                        LoserDivisor::Losers
                    };
                    adapt_threshold_wta(&mut th, &times, eta, th_min, divisor);
                }
                _ => th.iter_mut().for_each(|v| *v = (*v - eta).max(th_min)),
            }
            threshold_violations += th.iter().filter(|&&v| v < th_min).count();
        }
    }
    // the trainer's own update path, including patches without a winner
    let mut trainer_violations = 0;
    for seed in 0..50 {
        let (net, _, _) = common::random_case(seed);
        let Some(layer) = net.spec.trainable_layers().into_iter().find(|&l| l == 1) else {
            continue;
        };
        let mut net = net;
        let input = net.spec.input;
        let samples: Vec<SpikeTrain> = (0..20)
            .map(|_| {
                let mut ev = Vec::new();
                for i in 0..input.len() {
                    if r.random_bool(0.3) {
                        let (m, rest) = (i / input.columns(), i % input.columns());
                        ev.push(SpikeEvent::new(r.random::<f64>(), 0, m, rest / input.width, rest % input.width));
                    }
                }
                ev.sort_by(|a, b| a.total_order(b));
                SpikeTrain::from_events(&ev, input).unwrap()
            })
            .collect();
        let cfg = TrainConfig {
            epochs: 5,
            eta_th: 2.0,
            ..TrainConfig::default()
        };
        let mut log = TrainLog::default();
        train_layer(&mut net, layer, &samples, &cfg, &mut log).map_err(|e| e.to_string())?;
        let p = net.layer_params(layer).map_err(|e| e.to_string())?;
        trainer_violations += p.thresholds.iter().filter(|&&v| v < cfg.init.th_min).count();
        trainer_violations += p.weights.iter().filter(|w| !(cfg.init.w_min..=cfg.init.w_max).contains(w)).count();
    }
    Ok(outcome(
        weight_violations + threshold_violations + trainer_violations == 0,
        format!(
            "{weight_violations} weights outside bounds in 1e5 updates, {threshold_violations} thresholds below floor in 1e4 sequences, {trainer_violations} in trainer runs"
        ),
    ))
}

fn c7(_: &mut Context) -> Result<Outcome, String> {
    let sp = |y: &[f64]| sparsity(y).unwrap();
    let mut fails = Vec::new();
    for n in [2, 3, 10, 512] {
        let mut one_hot = vec![0.0; n];
        one_hot[n / 2] = 0.37;
        if sp(&one_hot) != 1.0 {
            fails.push(format!("one-hot n={n}"));
        }
        if sp(&vec![2.5; n]) != 0.0 {
            fails.push(format!("constant n={n}"));
        }
        if sp(&vec![0.0; n]) != 0.0 {
            fails.push(format!("zero n={n}"));
        }
    }
    let mut r = rng::stream(5, Purpose::Synthetic, 7);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let n = r.random_range(2..64);
        let y: Vec<f64> = (0..n).map(|_| r.random::<f64>()).collect();
        let c = r.random_range(1e-3..1e3);
        let scaled: Vec<f64> = y.iter().map(|v| v * c).collect();
        worst = worst.max((sp(&y) - sp(&scaled)).abs());
    }
    if worst > C7_SCALE_TOLERANCE {
        fails.push(format!("scale invariance off by {worst:e}"));
    }
    let cases = [
        (Some(0.7), 1.0),
        (Some(1.0), 0.0),
        (None, 0.0),
        (Some(0.2), 1.0),
        (Some(1.5), 0.0),
    ];
    for (t, want) in cases {
        if decode(t, 0.7, 1.0) != want {
            fails.push(format!("decode({t:?})"));
        }
    }
    Ok(outcome(
        fails.is_empty(),
        if fails.is_empty() {
            format!("identities exact, scale invariance within {worst:.1e}")
        } else {
            fails.join(", ")
        },
    ))
}

fn c8(ctx: &mut Context) -> Result<Outcome, String> {
    let (model, row) = {
        let s = ctx.seed0()?;
        (s.model.clone(), s.row.clone())
    };
    let m = ctx.mnist()?;
    let again = train_eval(m, &m.cfg, 0)?;
    Ok(outcome(
        again.model == model && again.row == row,
        format!(
            "model {} bytes, identical: {}; CSV row identical: {} ({})",
            model.len(),
            again.model == model,
            again.row == row,
            row
        ),
    ))
}

fn c9(ctx: &mut Context) -> Result<Outcome, String> {
    let single = ctx.seed0()?.result.accuracy;
    let m = ctx.mnist()?;
    let mut cfg = m.cfg.clone();
    cfg.ensemble = Some(EnsembleConfig {
        members: [0.65, 0.70, 0.75, 0.80].iter().map(|&t| (t, 128)).collect(),
    });
    let run = train_eval(m, &cfg, 0)?;
    let widths: usize = run.nets.iter().map(|n| n.spec.layers.last().unwrap().maps).sum();
    let r = run.result;
    Ok(outcome(
        r.accuracy >= single - C9_SLACK && r.feature_dim == widths && widths == 512,
        format!(
            "ensemble {:.2}% vs single 512 {:.2}% (slack {:.1} points), feature width {} = {}",
            100.0 * r.accuracy,
            100.0 * single,
            100.0 * C9_SLACK,
            r.feature_dim,
            widths
        ),
    ))
}

type Criterion = fn(&mut Context) -> Result<Outcome, String>;

fn main() {
    let wanted: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let criteria: [(usize, &str, Criterion); 9] = [
        (1, "scaled MNIST end-to-end", c1),
        (2, "inference policy ordering", c2),
        (3, "negative offset degeneracy", c3),
        (4, "threshold rule convergence", c4),
        (5, "event engine vs clock-driven reference", c5),
        (6, "plasticity bounds", c6),
        (7, "metric identities", c7),
        (8, "determinism", c8),
        (9, "multi-target ensemble", c9),
    ];
    let mut ctx = Context::default();
    let mut failed = 0;
    for (id, name, run) in criteria {
        if !wanted.is_empty() && !wanted.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let o = run(&mut ctx).unwrap_or_else(|e| outcome(false, format!("error: {e}")));
        failed += usize::from(!o.pass);
        println!(
            "{} {id} {name}: {} [{:.1}s]",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            start.elapsed().as_secs_f64()
        );
        if id == 4 {
            println!("INFO 4 with N-1 loser divisor: {}", c4_losers());
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
