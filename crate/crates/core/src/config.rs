//! Experiment configuration files.
//!
//! Plain text, `[section]` headers and `key = value` lines, `#` comments.
//! Every key is optional and defaults to the values below; unknown keys and
//! malformed values are reported with their line number.
//!
//! ```text
//! [learning]
//! epochs = 100
//! lambda = 0.95
//!
//! [stdp]
//! rule = biological        # additive | multiplicative | biological | biological-decaying
//! eta_w = 0.1
//! beta = 1.0
//! tau = 0.1
//! w_min = 0.0
//! w_max = 1.0
//! w_init = 0.0 1.0         # uniform bounds
//!
//! [coding]
//! t_start = 0.0
//! t_end = 1.0
//! dog_size = 7
//! dog_center = 1.0         # variance
//! dog_surround = 4.0       # variance
//!
//! [threshold]
//! t_target = 0.7
//! delta_t = 0.0
//! eta_th = 1.0
//! th_min = 1.0
//! th_init = 5.0 1.0        # normal mean, std
//! loser_divisor = competitors
//! no_winner = shared       # shared (eta_th/N) | full (eta_th)
//!
//! [inhibition]
//! inference = none         # none | soft | wta
//! prefix = wta           # policy of the frozen layers during training
//! v_inh = 1.0
//! scope = column           # column | layer
//!
//! [network]
//! input = 28x28
//! layer = conv 5x5 32
//! layer = pool 2x2 stride=2
//! layer = conv 5x5 128
//! layer = pool 2x2 stride=2
//! layer = fc 4x4 4096
//!
//! [ensemble]
//! member = 0.65 1024       # t_target, output size; repeatable
//!
//! [experiment]
//! seed = 0
//! runs = 1
//! shuffle = false
//! train_limit = 60000
//! test_limit = 10000
//! svm_c = 1.0
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::classifier::SvmParams;
use crate::encoder::DogParams;
use crate::network::{LayerKind, LayerSpec, NetworkSpec};
use crate::plasticity::{BiologicalVariant, LoserDivisor, NoWinnerDecrement, StdpRule};
use crate::simulator::{CompetitionScope, Inhibition, InhibitionPolicy};
use crate::trainer::{EnsembleConfig, TrainConfig};
use crate::types::Shape3;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub train: TrainConfig,
    pub dog: DogParams,
    /// Image width and height fed to the encoder.
    pub image_size: (usize, usize),
    pub layers: Vec<LayerSpec>,
    pub inference: InhibitionPolicy,
    pub ensemble: Option<EnsembleConfig>,
    pub runs: usize,
    pub svm: SvmParams,
    pub train_limit: Option<usize>,
    pub test_limit: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            train: TrainConfig::default(),
            dog: DogParams::default(),
            image_size: (28, 28),
            layers: NetworkSpec::mnist().layers,
            inference: InhibitionPolicy::none(),
            ensemble: None,
            runs: 1,
            svm: SvmParams::default(),
            train_limit: None,
            test_limit: None,
        }
    }
}

impl ExperimentConfig {
    /// Architecture over on/off input of the configured image size.
    pub fn spec(&self) -> Result<NetworkSpec> {
        let input = Shape3::new(2, self.image_size.1, self.image_size.0)?;
        NetworkSpec::new(input, self.layers.clone())
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        self.dog.validate()?;
        self.inference.validate()?;
        self.spec()?;
        if let Some(e) = &self.ensemble {
            e.validate()?;
        }
        if self.runs == 0 {
            return Err(Error::param("runs", "must be positive"));
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        text.parse()
    }

    /// Writes every setting back in the file format.
    pub fn to_text(&self) -> String {
        let t = &self.train;
        let mut s = String::new();
        let (rule, eta, beta, tau) = match t.rule {
            StdpRule::Additive { eta } => ("additive", eta, 1.0, 0.1),
            StdpRule::Multiplicative { eta, beta } => ("multiplicative", eta, beta, 0.1),
            StdpRule::Biological { eta, tau, variant } => (
                match variant {
                    BiologicalVariant::AsPrinted => "biological",
                    BiologicalVariant::Decaying => "biological-decaying",
                },
                eta,
                1.0,
                tau,
            ),
        };
        let _ = write!(
            s,
            "[learning]\nepochs = {}\nlambda = {}\n\n\
             [stdp]\nrule = {rule}\neta_w = {eta}\nbeta = {beta}\ntau = {tau}\n\
             w_min = {}\nw_max = {}\nw_init = {} {}\n\n\
             [coding]\nt_start = {}\nt_end = {}\ndog_size = {}\ndog_center = {}\ndog_surround = {}\n\n\
             [threshold]\nt_target = {}\ndelta_t = {}\neta_th = {}\nth_min = {}\nth_init = {} {}\nloser_divisor = {}\nno_winner = {}\n\n",
            t.epochs,
            t.lambda,
            t.init.w_min,
            t.init.w_max,
            t.init.weight_low,
            t.init.weight_high,
            t.window.start,
            t.window.end,
            self.dog.size,
            self.dog.center,
            self.dog.surround,
            t.t_target,
            t.delta_t,
            t.eta_th,
            t.init.th_min,
            t.init.threshold_mean,
            t.init.threshold_std,
            match t.divisor {
                LoserDivisor::Competitors => "competitors",
                LoserDivisor::Losers => "losers",
            },
            match t.no_winner {
                NoWinnerDecrement::Shared => "shared",
                NoWinnerDecrement::Full => "full",
            },
        );
        let v_inh = match (self.inference.inhibition, t.prefix_policy.inhibition) {
            (Inhibition::Soft { v_inh }, _) | (_, Inhibition::Soft { v_inh }) => v_inh,
            _ => 1.0,
        };
        let name = |p: &InhibitionPolicy| match p.inhibition {
            Inhibition::None => "none",
            Inhibition::Soft { .. } => "soft",
            Inhibition::WinnerTakeAll => "wta",
        };
        let _ = write!(
            s,
            "[inhibition]\ninference = {}\nprefix = {}\nv_inh = {v_inh}\nscope = {}\n\n[network]\ninput = {}x{}\n",
            name(&self.inference),
            name(&t.prefix_policy),
            match self.inference.scope {
                CompetitionScope::Column => "column",
                CompetitionScope::Layer => "layer",
            },
            self.image_size.0,
            self.image_size.1,
        );
        for l in &self.layers {
            let _ = writeln!(
                s,
                "layer = {} {}x{} {} stride={} pad={}",
                l.kind.name(),
                l.filter_w,
                l.filter_h,
                l.maps,
                l.stride,
                l.padding
            );
        }
        if let Some(e) = &self.ensemble {
            s.push_str("\n[ensemble]\n");
            for (t, n) in &e.members {
                let _ = writeln!(s, "member = {t} {n}");
            }
        }
        let _ = write!(
            s,
            "\n[experiment]\nseed = {}\nruns = {}\nshuffle = {}\nsvm_c = {}\n",
            t.seed, self.runs, t.shuffle, self.svm.c
        );
        if let Some(n) = self.train_limit {
            let _ = writeln!(s, "train_limit = {n}");
        }
        if let Some(n) = self.test_limit {
            let _ = writeln!(s, "test_limit = {n}");
        }
        s
    }
}

struct Entry {
    line: usize,
    value: String,
}

fn err(line: usize, message: impl Into<String>) -> Error {
    Error::Config {
        line,
        message: message.into(),
    }
}

fn num<T: FromStr>(e: &Entry, key: &str) -> Result<T> {
    e.value
        .parse()
        .map_err(|_| err(e.line, format!("`{key}`: cannot parse `{}`", e.value)))
}

fn pair(e: &Entry, key: &str) -> Result<(f64, f64)> {
    let parts: Vec<&str> = e.value.split_whitespace().collect();
    if parts.len() != 2 {
        return Err(err(e.line, format!("`{key}` expects two numbers")));
    }
    let a = parts[0]
        .parse()
        .map_err(|_| err(e.line, format!("`{key}`: bad number `{}`", parts[0])))?;
    let b = parts[1]
        .parse()
        .map_err(|_| err(e.line, format!("`{key}`: bad number `{}`", parts[1])))?;
    Ok((a, b))
}

fn dims(s: &str, line: usize) -> Result<(usize, usize)> {
    let (w, h) = s.split_once('x').unwrap_or((s, s));
    let w = w.parse().map_err(|_| err(line, format!("bad size `{s}`")))?;
    let h = h.parse().map_err(|_| err(line, format!("bad size `{s}`")))?;
    Ok((w, h))
}

/// Parses `kind WxH [maps] [stride=S] [pad=P]`. Pooling may omit `maps`
/// (taken from `prev_maps`) and defaults its stride to the filter width.
pub fn parse_layer(text: &str, prev_maps: usize, line: usize) -> Result<LayerSpec> {
    let mut tokens = text.split_whitespace();
    let kind: LayerKind = tokens
        .next()
        .ok_or_else(|| err(line, "empty layer row"))?
        .parse()
        .map_err(|e: String| err(line, e))?;
    let (fw, fh) = dims(tokens.next().ok_or_else(|| err(line, "missing filter size"))?, line)?;
    let mut maps = None;
    let mut stride = None;
    let mut padding = 0;
    for t in tokens {
        if let Some(v) = t.strip_prefix("stride=") {
            stride = Some(v.parse().map_err(|_| err(line, format!("bad stride `{v}`")))?);
        } else if let Some(v) = t.strip_prefix("pad=") {
            padding = v.parse().map_err(|_| err(line, format!("bad padding `{v}`")))?;
        } else if maps.is_none() {
            maps = Some(t.parse().map_err(|_| err(line, format!("bad map count `{t}`")))?);
        } else {
            return Err(err(line, format!("unexpected token `{t}`")));
        }
    }
    let maps = match (kind, maps) {
        (LayerKind::Pooling, m) => m.unwrap_or(prev_maps),
        (_, Some(m)) => m,
        (_, None) => return Err(err(line, "missing map count")),
    };
    let stride = stride.unwrap_or(if kind == LayerKind::Pooling { fw } else { 1 });
    if stride == 0 {
        return Err(err(line, "stride must be positive"));
    }
    Ok(LayerSpec {
        kind,
        filter_w: fw,
        filter_h: fh,
        maps,
        stride,
        padding,
    })
}

const KNOWN: &[(&str, &[&str])] = &[
    ("learning", &["epochs", "lambda"]),
    ("stdp", &["rule", "eta_w", "beta", "tau", "w_min", "w_max", "w_init"]),
    ("coding", &["t_start", "t_end", "dog_size", "dog_center", "dog_surround"]),
    (
        "threshold",
        &["t_target", "delta_t", "eta_th", "th_min", "th_init", "loser_divisor", "no_winner"],
    ),
    ("inhibition", &["inference", "prefix", "v_inh", "scope"]),
    ("network", &["input", "layer"]),
    ("ensemble", &["member"]),
    (
        "experiment",
        &["seed", "runs", "shuffle", "train_limit", "test_limit", "svm_c"],
    ),
];

impl FromStr for ExperimentConfig {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut single: BTreeMap<String, Entry> = BTreeMap::new();
        let mut layers_raw = Vec::new();
        let mut members_raw = Vec::new();
        let mut section = String::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap().trim();
            if body.is_empty() {
                continue;
            }
            if let Some(name) = body.strip_prefix('[').and_then(|b| b.strip_suffix(']')) {
                let name = name.trim();
                if !KNOWN.iter().any(|(s, _)| *s == name) {
                    return Err(err(line, format!("unknown section [{name}]")));
                }
                section = name.to_owned();
                continue;
            }
            let (key, value) = body
                .split_once('=')
                .ok_or_else(|| err(line, format!("expected `key = value`, got `{body}`")))?;
            let (key, value) = (key.trim(), value.trim().to_owned());
            let keys = KNOWN
                .iter()
                .find(|(s, _)| *s == section)
                .map(|(_, k)| *k)
                .ok_or_else(|| err(line, "key outside of any section"))?;
            if !keys.contains(&key) {
                return Err(err(line, format!("unknown key `{key}` in [{section}]")));
            }
            let entry = Entry { line, value };
            match key {
                "layer" => layers_raw.push(entry),
                "member" => members_raw.push(entry),
                _ => {
                    if let Some(prev) = single.insert(key.to_owned(), entry) {
                        return Err(err(line, format!("`{key}` already set on line {}", prev.line)));
                    }
                }
            }
        }
        build(&single, &layers_raw, &members_raw)
    }
}

fn build(m: &BTreeMap<String, Entry>, layers_raw: &[Entry], members_raw: &[Entry]) -> Result<ExperimentConfig> {
    let mut c = ExperimentConfig::default();
    let t = &mut c.train;
    let line_of = |k: &str| m.get(k).map_or(0, |e| e.line);
    macro_rules! set {
        ($key:literal, $target:expr) => {
            if let Some(e) = m.get($key) {
                $target = num(e, $key)?;
            }
        };
    }
    set!("epochs", t.epochs);
    set!("lambda", t.lambda);
    set!("w_min", t.init.w_min);
    set!("w_max", t.init.w_max);
    set!("t_start", t.window.start);
    set!("t_end", t.window.end);
    set!("dog_size", c.dog.size);
    set!("dog_center", c.dog.center);
    set!("dog_surround", c.dog.surround);
    set!("t_target", t.t_target);
    set!("delta_t", t.delta_t);
    set!("eta_th", t.eta_th);
    set!("th_min", t.init.th_min);
    set!("seed", t.seed);
    set!("runs", c.runs);
    set!("shuffle", t.shuffle);
    set!("svm_c", c.svm.c);
    if let Some(e) = m.get("train_limit") {
        c.train_limit = Some(num(e, "train_limit")?);
    }
    if let Some(e) = m.get("test_limit") {
        c.test_limit = Some(num(e, "test_limit")?);
    }
    if let Some(e) = m.get("w_init") {
        (t.init.weight_low, t.init.weight_high) = pair(e, "w_init")?;
    }
    if let Some(e) = m.get("th_init") {
        (t.init.threshold_mean, t.init.threshold_std) = pair(e, "th_init")?;
    }
    let mut eta_w = 0.1;
    let mut beta = 1.0;
    let mut tau = 0.1;
    set!("eta_w", eta_w);
    set!("beta", beta);
    set!("tau", tau);
    let rule = m.get("rule").map_or("biological", |e| e.value.as_str());
    t.rule = match rule {
        "additive" => StdpRule::additive(eta_w),
        "multiplicative" => StdpRule::multiplicative(eta_w, beta),
        "biological" => StdpRule::biological(eta_w, tau),
        "biological-decaying" => StdpRule::Biological {
            eta: eta_w,
            tau,
            variant: BiologicalVariant::Decaying,
        },
        other => return Err(err(line_of("rule"), format!("unknown STDP rule `{other}`"))),
    };
    if let Some(e) = m.get("loser_divisor") {
        t.divisor = match e.value.as_str() {
            "competitors" => LoserDivisor::Competitors,
            "losers" => LoserDivisor::Losers,
            other => return Err(err(e.line, format!("unknown loser divisor `{other}`"))),
        };
    }
    if let Some(e) = m.get("no_winner") {
        t.no_winner = match e.value.as_str() {
            "shared" => NoWinnerDecrement::Shared,
            "full" => NoWinnerDecrement::Full,
            other => return Err(err(e.line, format!("unknown no-winner decrement `{other}`"))),
        };
    }
    let mut v_inh = 1.0;
    set!("v_inh", v_inh);
    let scope = match m.get("scope").map(|e| (e.line, e.value.as_str())) {
        None | Some((_, "column")) => CompetitionScope::Column,
        Some((_, "layer")) => CompetitionScope::Layer,
        Some((line, other)) => return Err(err(line, format!("unknown scope `{other}`"))),
    };
    let policy = |key: &str, default: InhibitionPolicy| -> Result<InhibitionPolicy> {
        let Some(e) = m.get(key) else {
            return Ok(default.with_scope(scope));
        };
        let p = match e.value.as_str() {
            "soft" => InhibitionPolicy::soft(v_inh),
            other => other
                .parse::<InhibitionPolicy>()
                .map_err(|x| err(e.line, x.to_string()))?,
        };
        let p = p.with_scope(scope);
        p.validate().map_err(|x| err(e.line, x.to_string()))?;
        Ok(p)
    };
    c.inference = policy("inference", InhibitionPolicy::none())?;
    c.train.prefix_policy = policy("prefix", InhibitionPolicy::wta())?;
    if let Some(e) = m.get("input") {
        c.image_size = dims(&e.value, e.line)?;
    }
    if !layers_raw.is_empty() {
        let mut prev = 2;
        c.layers.clear();
        for e in layers_raw {
            let l = parse_layer(&e.value, prev, e.line)?;
            prev = l.maps;
            c.layers.push(l);
        }
        c.spec().map_err(|x| err(layers_raw[0].line, x.to_string()))?;
    }
    if !members_raw.is_empty() {
        let mut members = Vec::new();
        for e in members_raw {
            let (t, n) = pair(e, "member")?;
            if n < 1.0 || n.fract() != 0.0 {
                return Err(err(e.line, "member size must be a positive integer"));
            }
            members.push((t, n as usize));
        }
        c.ensemble = Some(EnsembleConfig { members });
    }
    c.validate().map_err(|x| {
        let line = match &x {
            Error::InvalidParameter { name, .. } => line_of(name),
            _ => 0,
        };
        err(line, x.to_string())
    })?;
    Ok(c)
}
