//! Synaptic and threshold plasticity.
//!
//! Weight updates follow one of three STDP rules and are applied only to the
//! winning neuron of a competition. Thresholds follow two rules applied in
//! sequence on every sample with a winner: the target-timestamp rule pulls
//! the winner's firing time toward `t_target`, and the winner-take-all rule
//! raises the winner's threshold while lowering the others'.

use crate::network::SynapseTensor;
use crate::{Error, Result};

/// Which exponent convention the biological rule uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BiologicalVariant {
    /// `+η·exp(-(t_pre - t_post)/τ)` when `t_pre <= t_post`, otherwise
    /// `-η·exp(-(t_post - t_pre)/τ)`. Both magnitudes grow with the delay.
    #[default]
    AsPrinted,
    /// Exponents with the opposite sign, so both magnitudes decay with the
    /// delay (the classical pair-based window).
    Decaying,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StdpRule {
    Additive {
        eta: f64,
    },
    Multiplicative {
        eta: f64,
        beta: f64,
    },
    Biological {
        eta: f64,
        tau: f64,
        variant: BiologicalVariant,
    },
}

impl StdpRule {
    pub fn additive(eta: f64) -> Self {
        StdpRule::Additive { eta }
    }

    pub fn multiplicative(eta: f64, beta: f64) -> Self {
        StdpRule::Multiplicative { eta, beta }
    }

    pub fn biological(eta: f64, tau: f64) -> Self {
        StdpRule::Biological {
            eta,
            tau,
            variant: BiologicalVariant::AsPrinted,
        }
    }

    pub fn eta(&self) -> f64 {
        match *self {
            StdpRule::Additive { eta }
            | StdpRule::Multiplicative { eta, .. }
            | StdpRule::Biological { eta, .. } => eta,
        }
    }

    pub fn with_eta(mut self, new: f64) -> Self {
        match &mut self {
            StdpRule::Additive { eta }
            | StdpRule::Multiplicative { eta, .. }
            | StdpRule::Biological { eta, .. } => *eta = new,
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta() > 0.0 && self.eta().is_finite()) {
            return Err(Error::param("eta_w", format!("must be > 0, got {}", self.eta())));
        }
        match *self {
            StdpRule::Multiplicative { beta, .. } if !(beta > 0.0) => {
                Err(Error::param("beta", format!("must be > 0, got {beta}")))
            }
            StdpRule::Biological { tau, .. } if !(tau > 0.0) => {
                Err(Error::param("tau", format!("must be > 0, got {tau}")))
            }
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> String {
        match *self {
            StdpRule::Additive { .. } => "additive".into(),
            StdpRule::Multiplicative { beta, .. } => format!("multiplicative(beta={beta})"),
            StdpRule::Biological { tau, variant, .. } => match variant {
                BiologicalVariant::AsPrinted => format!("biological(tau={tau})"),
                BiologicalVariant::Decaying => format!("biological-decaying(tau={tau})"),
            },
        }
    }
}

/// Context shared by every weight update of a layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StdpContext {
    pub w_min: f64,
    pub w_max: f64,
    /// End of the coding window; stands in for a missing pre-synaptic
    /// spike inside the biological exponent.
    pub t_end: f64,
}

impl Default for StdpContext {
    fn default() -> Self {
        StdpContext {
            w_min: 0.0,
            w_max: 1.0,
            t_end: 1.0,
        }
    }
}

/// Raw (unclipped) weight change for one synapse.
///
/// `t_pre = None` means the input never fired this sample. It always selects
/// the depression branch; the biological rule then evaluates its exponent
/// with `t_pre = t_end`.
pub fn stdp_delta(rule: &StdpRule, ctx: &StdpContext, t_pre: Option<f64>, t_post: f64, w: f64) -> f64 {
    let potentiate = matches!(t_pre, Some(t) if t <= t_post);
    match *rule {
        StdpRule::Additive { eta } => {
            if potentiate {
                eta
            } else {
                -eta
            }
        }
        StdpRule::Multiplicative { eta, beta } => {
            let range = ctx.w_max - ctx.w_min;
            if potentiate {
                eta * (-beta * (w - ctx.w_min) / range).exp()
            } else {
                -eta * (-beta * (ctx.w_max - w) / range).exp()
            }
        }
        StdpRule::Biological { eta, tau, variant } => {
            let pre = t_pre.unwrap_or(ctx.t_end);
            let sign = match variant {
                BiologicalVariant::AsPrinted => 1.0,
                BiologicalVariant::Decaying => -1.0,
            };
            if potentiate {
                eta * (-sign * (pre - t_post) / tau).exp()
            } else {
                -eta * (-sign * (t_post - pre) / tau).exp()
            }
        }
    }
}

/// Updates every synapse of `winner` from the pre-synaptic spike times of
/// its receptive field (flat synapse order, see
/// [`SynapseTensor::fan_out_row`]). Other maps are untouched.
pub fn apply_stdp(
    weights: &mut SynapseTensor,
    winner: usize,
    pre_times: &[Option<f64>],
    t_post: f64,
    rule: &StdpRule,
    ctx: &StdpContext,
) -> Result<()> {
    if pre_times.len() != weights.fan_in() {
        return Err(Error::DimensionMismatch {
            expected: weights.fan_in(),
            actual: pre_times.len(),
        });
    }
    for (s, &t_pre) in pre_times.iter().enumerate() {
        let w = weights.at_synapse(winner, s);
        let dw = stdp_delta(rule, ctx, t_pre, t_post, w);
        weights.set_at_synapse(winner, s, w + dw);
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdParams {
    pub t_target: f64,
    pub eta: f64,
    pub th_min: f64,
}

impl ThresholdParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.th_min > 0.0) {
            return Err(Error::param("th_min", format!("must be > 0, got {}", self.th_min)));
        }
        if !(self.eta > 0.0) {
            return Err(Error::param("eta_th", format!("must be > 0, got {}", self.eta)));
        }
        if !self.t_target.is_finite() {
            return Err(Error::param("t_target", "must be finite"));
        }
        Ok(())
    }
}

/// `max(th_min, v_th − η·(t_fire − t_target))`: late neurons get easier to
/// fire, early ones harder.
pub fn adapt_threshold_target(v_th: f64, t_fire: f64, p: &ThresholdParams) -> f64 {
    (v_th - p.eta * (t_fire - p.t_target)).max(p.th_min)
}

/// How the winner-take-all rule spreads the decrease over the losers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LoserDivisor {
    /// Each loser loses `η/N`, with `N` the number of competing neurons
    /// including the winner.
    #[default]
    Competitors,
    /// Each loser loses `η/(N−1)`, so the column's threshold sum is
    /// unchanged by this rule.
    Losers,
}

/// How much every threshold drops when a patch with input produces no
/// winner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoWinnerDecrement {
    /// `η/N`, the loser share of the homeostasis rule applied to everyone.
    #[default]
    Shared,
    /// The full `η`.
    Full,
}

/// Index of the earliest firing neuron, lowest index on ties.
pub fn winner(fire_times: &[Option<f64>]) -> Option<usize> {
    fire_times
        .iter()
        .enumerate()
        .filter_map(|(i, t)| t.map(|t| (i, t)))
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
        .map(|(i, _)| i)
}

/// Winner-take-all homeostasis: the winner gains `η`, every other neuron
/// loses `η/N`; all results floored at `th_min`. Returns the winner, or
/// `None` (thresholds untouched) when nobody fired.
pub fn adapt_threshold_wta(
    thresholds: &mut [f64],
    fire_times: &[Option<f64>],
    eta: f64,
    th_min: f64,
    divisor: LoserDivisor,
) -> Option<usize> {
    assert_eq!(thresholds.len(), fire_times.len());
    let w = winner(fire_times)?;
    let n = thresholds.len();
    let loss = match divisor {
        LoserDivisor::Competitors => eta / n as f64,
        LoserDivisor::Losers if n > 1 => eta / (n - 1) as f64,
        LoserDivisor::Losers => 0.0,
    };
    for (i, th) in thresholds.iter_mut().enumerate() {
        let delta = if i == w { eta } else { -loss };
        *th = (*th + delta).max(th_min);
    }
    Some(w)
}
