//! Level-k recursion between speakers and listeners.
//!
//! Level 0 is the literal listener. Each speaker level responds to the
//! previous listener (hard argmax or SoftMax over utilities) and each
//! listener level is the Bayes response to the speaker below it:
//! `L(x = k | m) ∝ sum_i P(o_i) P_{o_i}(k) S(m | o_i)`.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::{Hash, Hasher};

use serde::Serialize;

use crate::dist::{normalize, serialize_extended};
use crate::error::{Error, Result};
use crate::listener::ListenerStrategy;
use crate::scenario::Scenario;
use crate::speaker::{
    argmax_with_tie_break, pure_row, softmax_speaker, support_of, utility_table, SpeakerStrategy,
};

/// How a speaker level responds to the listener below it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "rule")]
pub enum ResponseRule {
    HardMax,
    SoftMax { lambda: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Level {
    pub level: usize,
    /// Absent at level 0.
    pub speaker: Option<SpeakerStrategy>,
    pub listener: ListenerStrategy,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecursionTrace {
    pub rule: ResponseRule,
    pub levels: Vec<Level>,
    pub converged: bool,
    pub fixed_point_level: Option<usize>,
    /// Max-norm change between consecutive `(S, L)` pairs, from level 2 on.
    pub residuals: Vec<f64>,
    /// Period of a detected cycle, when the recursion oscillates.
    pub cycle_period: Option<usize>,
}

impl RecursionTrace {
    pub fn last(&self) -> &Level {
        self.levels.last().expect("level 0 always present")
    }

    /// The speaker/listener pair at the fixed point, if converged.
    pub fn fixed_point(&self) -> Option<(&SpeakerStrategy, &ListenerStrategy)> {
        let lvl = &self.levels[self.fixed_point_level?];
        Some((lvl.speaker.as_ref()?, &lvl.listener))
    }
}

/// Speaker response to a listener under `rule`.
pub fn speaker_response(
    scenario: &Scenario,
    listener: &ListenerStrategy,
    rule: ResponseRule,
) -> Result<SpeakerStrategy> {
    let n = scenario.menu.len();
    let mut ids = Vec::with_capacity(scenario.observations.len());
    let mut rows = Vec::with_capacity(scenario.observations.len());
    for wo in &scenario.observations {
        let o = &wo.observation;
        let row = match rule {
            ResponseRule::HardMax => {
                let table = utility_table(o, listener)?;
                let m = argmax_with_tie_break(&scenario.menu, &table)
                    .ok_or_else(|| Error::NoTruthfulMessage(o.id.clone()))?;
                pure_row(n, m)
            }
            ResponseRule::SoftMax { lambda } => softmax_speaker(o, &scenario.menu, listener, lambda)?,
        };
        ids.push(o.id.clone());
        rows.push(row);
    }
    Ok(SpeakerStrategy { ids, rows })
}

/// Bayes listener against speaker `s`. Messages no observation sends get the
/// literal row when `fallback` is set, otherwise `DeadMessageNoFallback`.
pub fn listener_response(
    s: &SpeakerStrategy,
    scenario: &Scenario,
    literal: &ListenerStrategy,
    fallback: bool,
) -> Result<ListenerStrategy> {
    let grid = scenario.prior.grid();
    let n_obs = scenario.observations.len();
    if s.rows.len() != n_obs {
        return Err(Error::DimensionMismatch(format!(
            "speaker has {} rows for {n_obs} observations",
            s.rows.len()
        )));
    }
    let mut rows = Vec::with_capacity(scenario.menu.len());
    for (m, message) in scenario.menu.iter().enumerate() {
        let mut weights = vec![0.0; grid.len()];
        for (i, wo) in scenario.observations.iter().enumerate() {
            let send = s.prob(i, m) * wo.weight;
            if send == 0.0 {
                continue;
            }
            for (w, p) in weights.iter_mut().zip(wo.observation.dist.probs()) {
                *w += send * p;
            }
        }
        if weights.iter().sum::<f64>() > 0.0 {
            rows.push(normalize(&weights, grid)?);
        } else if fallback {
            rows.push(literal.row(m).clone());
        } else {
            return Err(Error::DeadMessageNoFallback(message.label.clone()));
        }
    }
    Ok(ListenerStrategy { rows })
}

/// `sum_o P(o) sum_m S(m|o) U(o, m, L)`.
pub fn expected_utility(s: &SpeakerStrategy, l: &ListenerStrategy, scenario: &Scenario) -> Result<f64> {
    let mut total = 0.0;
    for (i, wo) in scenario.observations.iter().enumerate() {
        let table = utility_table(&wo.observation, l)?;
        for m in support_of(&s.rows[i]) {
            total += wo.weight * s.prob(i, m) * table[m];
        }
    }
    Ok(total)
}

fn quantized_hash(s: &SpeakerStrategy, l: &ListenerStrategy) -> u64 {
    let mut h = DefaultHasher::new();
    for d in s.rows.iter().chain(&l.rows) {
        for p in d.probs() {
            ((p / 1e-12).round() as i64).hash(&mut h);
        }
    }
    h.finish()
}

/// Runs the recursion from the literal listener for up to `max_levels`
/// speaker levels, stopping when consecutive pairs differ by less than `tol`
/// or when a cycle is detected.
pub fn iterate(
    scenario: &Scenario,
    rule: ResponseRule,
    max_levels: usize,
    tol: f64,
    fallback: bool,
) -> Result<RecursionTrace> {
    if max_levels == 0 {
        return Err(Error::InvalidArgument("max_levels must be at least 1".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("tol must be positive".into()));
    }
    let literal = scenario.literal_listener()?;
    let mut levels = vec![Level {
        level: 0,
        speaker: None,
        listener: literal.clone(),
    }];
    let mut residuals = Vec::new();
    let mut seen: HashMap<u64, usize> = HashMap::new();
    let mut converged = false;
    let mut fixed_point_level = None;
    let mut cycle_period = None;

    for k in 1..=max_levels {
        let prev_listener = &levels[k - 1].listener;
        let s = speaker_response(scenario, prev_listener, rule)?;
        let l = listener_response(&s, scenario, &literal, fallback)?;

        if let Some(prev_s) = &levels[k - 1].speaker {
            let diff = s
                .max_abs_diff(prev_s)?
                .max(l.max_abs_diff(&levels[k - 1].listener)?);
            residuals.push(diff);
            if diff < tol {
                converged = true;
                fixed_point_level = Some(k - 1);
            }
        }
        let key = quantized_hash(&s, &l);
        let repeat = seen.get(&key).copied();
        seen.insert(key, k);
        levels.push(Level {
            level: k,
            speaker: Some(s),
            listener: l,
        });
        if converged {
            break;
        }
        if let Some(j) = repeat {
            cycle_period = Some(k - j);
            break;
        }
    }

    Ok(RecursionTrace {
        rule,
        levels,
        converged,
        fixed_point_level,
        residuals,
        cycle_period,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixedPointReport {
    /// Speaker optimality against `L` (argmin-KL for hard max, SoftMax
    /// agreement otherwise).
    pub speaker_equation: bool,
    #[serde(serialize_with = "serialize_extended")]
    pub speaker_residual: f64,
    /// `L` equals the Bayes response to `S`.
    pub listener_equation: bool,
    #[serde(serialize_with = "serialize_extended")]
    pub listener_residual: f64,
}

impl FixedPointReport {
    pub fn holds(&self) -> bool {
        self.speaker_equation && self.listener_equation
    }
}

/// Checks whether `(s, l)` satisfies both equilibrium equations within `tol`.
pub fn check_fixed_point(
    s: &SpeakerStrategy,
    l: &ListenerStrategy,
    scenario: &Scenario,
    rule: ResponseRule,
    tol: f64,
    fallback: bool,
) -> Result<FixedPointReport> {
    let mut speaker_residual: f64 = 0.0;
    for (i, wo) in scenario.observations.iter().enumerate() {
        let table = utility_table(&wo.observation, l)?;
        match rule {
            ResponseRule::HardMax => {
                let best = table.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                for m in support_of(&s.rows[i]) {
                    let gap = if best == f64::NEG_INFINITY {
                        f64::INFINITY
                    } else {
                        best - table[m]
                    };
                    speaker_residual = speaker_residual.max(gap);
                }
            }
            ResponseRule::SoftMax { lambda } => {
                match softmax_speaker(&wo.observation, &scenario.menu, l, lambda) {
                    Ok(d) => speaker_residual = speaker_residual.max(d.max_abs_diff(&s.rows[i])?),
                    Err(Error::NoTruthfulMessage(_)) => speaker_residual = f64::INFINITY,
                    Err(e) => return Err(e),
                }
            }
        }
    }

    let literal = scenario.literal_listener()?;
    let mut listener_residual: f64 = 0.0;
    let grid = scenario.prior.grid();
    for (m, row) in l.rows.iter().enumerate() {
        let mut weights = vec![0.0; grid.len()];
        for (i, wo) in scenario.observations.iter().enumerate() {
            let send = s.prob(i, m) * wo.weight;
            for (w, p) in weights.iter_mut().zip(wo.observation.dist.probs()) {
                *w += send * p;
            }
        }
        let expected = if weights.iter().sum::<f64>() > 0.0 {
            normalize(&weights, grid)?
        } else if fallback {
            literal.row(m).clone()
        } else {
            continue;
        };
        listener_residual = listener_residual.max(row.max_abs_diff(&expected)?);
    }

    Ok(FixedPointReport {
        speaker_equation: speaker_residual <= tol,
        speaker_residual,
        listener_equation: listener_residual <= tol,
        listener_residual,
    })
}
