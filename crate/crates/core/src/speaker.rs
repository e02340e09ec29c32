//! Speaker choice against a listener interpretation.
//!
//! The utility of a message is the negated KL divergence from the speaker's
//! private observation to the posterior the listener forms on hearing it.

use serde::Serialize;

use crate::dist::{kl_divergence, softmax, Dist, PROB_TOL};
use crate::error::{Error, Result};
use crate::lexicon::Message;
use crate::listener::ListenerStrategy;

/// Utilities closer than this are ties.
pub const TIE_TOL: f64 = 1e-12;

/// A speaker's private posterior over the world grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Observation {
    pub id: String,
    pub dist: Dist,
}

impl Observation {
    pub fn new(id: impl Into<String>, dist: Dist) -> Self {
        Observation { id: id.into(), dist }
    }
}

/// One distribution over menu indices per observation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpeakerStrategy {
    pub ids: Vec<String>,
    pub rows: Vec<Dist>,
}

impl SpeakerStrategy {
    pub fn is_pure(&self) -> bool {
        self.rows.iter().all(Dist::is_point_mass)
    }

    /// `S(m | o)` by observation position.
    pub fn prob(&self, obs: usize, message: usize) -> f64 {
        self.rows[obs].probs()[message]
    }

    /// For pure strategies, the message each observation sends.
    pub fn pure_choices(&self) -> Option<Vec<usize>> {
        self.is_pure()
            .then(|| self.rows.iter().map(Dist::mode_index).collect())
    }

    pub fn max_abs_diff(&self, other: &SpeakerStrategy) -> Result<f64> {
        if self.rows.len() != other.rows.len() {
            return Err(Error::DimensionMismatch("speaker row counts differ".into()));
        }
        self.rows
            .iter()
            .zip(&other.rows)
            .try_fold(0.0f64, |acc, (a, b)| Ok(acc.max(a.max_abs_diff(b)?)))
    }
}

/// `-D(P_o || P_m)`; `-inf` when the listener rules out a value the speaker
/// deems possible.
pub fn utility(o: &Observation, interpretation: &Dist) -> Result<f64> {
    Ok(kl_divergence(&o.dist, interpretation)?.neg())
}

/// Utilities of every message in the listener's menu, `-inf` entries kept.
pub fn utility_table(o: &Observation, listener: &ListenerStrategy) -> Result<Vec<f64>> {
    listener.rows.iter().map(|row| utility(o, row)).collect()
}

fn check_menu(menu: &[Message], listener: &ListenerStrategy) -> Result<()> {
    if menu.is_empty() {
        return Err(Error::InvalidArgument("empty menu".into()));
    }
    if menu.len() != listener.rows.len() {
        return Err(Error::DimensionMismatch(format!(
            "menu has {} messages, listener has {} rows",
            menu.len(),
            listener.rows.len()
        )));
    }
    Ok(())
}

/// Picks the best message from a precomputed utility table: highest utility,
/// then vague before precise, then lowest index.
pub fn argmax_with_tie_break(menu: &[Message], utilities: &[f64]) -> Option<usize> {
    let best = utilities
        .iter()
        .copied()
        .filter(|u| u.is_finite())
        .fold(f64::NEG_INFINITY, f64::max);
    if best == f64::NEG_INFINITY {
        return None;
    }
    let tied = || {
        utilities
            .iter()
            .enumerate()
            .filter(move |(_, u)| u.is_finite() && best - **u <= TIE_TOL)
            .map(|(i, _)| i)
    };
    tied()
        .find(|i| menu[*i].is_vague())
        .or_else(|| tied().next())
}

/// Utility-maximizing message index, ties going to vague messages first and
/// then to the lowest menu index.
pub fn best_message(o: &Observation, menu: &[Message], listener: &ListenerStrategy) -> Result<usize> {
    check_menu(menu, listener)?;
    let table = utility_table(o, listener)?;
    argmax_with_tie_break(menu, &table).ok_or_else(|| Error::NoTruthfulMessage(o.id.clone()))
}

/// SoftMax choice over the menu, `P(m) ∝ exp(lambda * U(m))`.
pub fn softmax_speaker(
    o: &Observation,
    menu: &[Message],
    listener: &ListenerStrategy,
    lambda: f64,
) -> Result<Dist> {
    check_menu(menu, listener)?;
    let table = utility_table(o, listener)?;
    let probs = softmax(&table, lambda).map_err(|e| match e {
        Error::AllUtilitiesNegativeInfinite => Error::NoTruthfulMessage(o.id.clone()),
        other => other,
    })?;
    Dist::over_indices(probs)
}

/// Point mass on message `m` out of `n`.
pub fn pure_row(n: usize, m: usize) -> Dist {
    let mut p = vec![0.0; n];
    p[m] = 1.0;
    Dist::over_indices(p).expect("point mass")
}

/// Indices carrying positive probability.
pub(crate) fn support_of(row: &Dist) -> impl Iterator<Item = usize> + '_ {
    row.probs()
        .iter()
        .enumerate()
        .filter(|(_, p)| **p > PROB_TOL)
        .map(|(i, _)| i)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::grid;
    use crate::lexicon::{precise_alternatives, vague_alternatives, ParamPrior, VagueKind};
    use crate::listener::{literal_listener, JointPrior};

    fn attendance() -> (Observation, JointPrior) {
        let g = grid(0.0, 80.0, 10.0).unwrap();
        let o = Observation::new(
            "o1",
            Dist::new(g.clone(), vec![0.0, 0.01, 0.01, 0.16, 0.64, 0.16, 0.01, 0.01, 0.0]).unwrap(),
        );
        let around = ParamPrior::uniform(grid(0.0, 40.0, 10.0).unwrap()).unwrap();
        (o, JointPrior::independent(Dist::uniform(g).unwrap(), Some(around), None))
    }

    fn full_menu(prior: &JointPrior) -> Vec<Message> {
        let mut menu = precise_alternatives(prior.grid());
        menu.extend(vague_alternatives(prior.grid(), VagueKind::Around));
        menu
    }

    #[test]
    fn utility_examples() {
        let (o, prior) = attendance();
        let menu = vec![
            Message::around(40.0),
            Message::between(10.0, 70.0).unwrap(),
            Message::between(30.0, 50.0).unwrap(),
        ];
        let l = literal_listener(&prior, &menu, false).unwrap();
        let u = utility_table(&o, &l).unwrap();
        assert!((u[0] + 0.65).abs() < 0.005, "{}", u[0]);
        assert!((u[1] + 0.89).abs() < 0.005, "{}", u[1]);
        assert_eq!(u[2], f64::NEG_INFINITY);
    }

    #[test]
    fn best_message_examples() {
        let (o, prior) = attendance();
        let menu = full_menu(&prior);
        let l = literal_listener(&prior, &menu, false).unwrap();
        let best = best_message(&o, &menu, &l).unwrap();
        assert_eq!(menu[best], Message::around(40.0));

        let pm = Observation::new("pm", Dist::point_mass(prior.grid().to_vec(), 40.0).unwrap());
        let best = best_message(&pm, &menu, &l).unwrap();
        assert_eq!(menu[best], Message::exact(40.0));
        assert_eq!(utility(&pm, l.row(best)).unwrap(), 0.0);

        let uniform = Observation::new("u", prior.x_prior.clone());
        let only = vec![Message::between(0.0, 80.0).unwrap()];
        let l1 = literal_listener(&prior, &only, false).unwrap();
        assert_eq!(best_message(&uniform, &only, &l1).unwrap(), 0);
        assert!(utility(&uniform, l1.row(0)).unwrap().abs() < 1e-12);
    }

    #[test]
    fn no_truthful_message() {
        let (o, prior) = attendance();
        let menu = vec![Message::exact(40.0), Message::between(30.0, 50.0).unwrap()];
        let l = literal_listener(&prior, &menu, false).unwrap();
        assert_eq!(best_message(&o, &menu, &l), Err(Error::NoTruthfulMessage("o1".into())));
        assert_eq!(
            softmax_speaker(&o, &menu, &l, 1.0),
            Err(Error::NoTruthfulMessage("o1".into()))
        );
    }

    #[test]
    fn tie_break_prefers_vague_then_index() {
        let menu = vec![
            Message::exact(1.0),
            Message::between(0.0, 2.0).unwrap(),
            Message::around(1.0),
            Message::around(2.0),
        ];
        assert_eq!(argmax_with_tie_break(&menu, &[-1.0, -0.5, -0.5, -0.5]), Some(2));
        assert_eq!(argmax_with_tie_break(&menu, &[-1.0, -0.5, -0.6, -0.5]), Some(3));
        assert_eq!(argmax_with_tie_break(&menu[..2], &[-0.5, -0.5]), Some(0));
        assert_eq!(argmax_with_tie_break(&menu[..1], &[f64::NEG_INFINITY]), None);
    }

    #[test]
    fn softmax_speaker_examples() {
        let (o, prior) = attendance();
        let menu = vec![Message::around(40.0), Message::between(10.0, 70.0).unwrap()];
        let l = literal_listener(&prior, &menu, false).unwrap();
        let d = softmax_speaker(&o, &menu, &l, 1.0).unwrap();
        assert!((d.probs()[0] - 0.560).abs() < 0.005, "{:?}", d.probs());
        assert!((d.probs()[1] - 0.440).abs() < 0.005);
        let d = softmax_speaker(&o, &menu, &l, 100.0).unwrap();
        assert!(d.probs()[0] > 1.0 - 1e-9);

        let mixed = vec![Message::around(40.0), Message::exact(40.0)];
        let l = literal_listener(&prior, &mixed, false).unwrap();
        let d = softmax_speaker(&o, &mixed, &l, 4.0).unwrap();
        assert_eq!(d.probs(), &[1.0, 0.0]);
    }

    #[test]
    fn best_is_in_softmax_support_and_sharpens() {
        let (o, prior) = attendance();
        let menu = full_menu(&prior);
        let l = literal_listener(&prior, &menu, false).unwrap();
        let best = best_message(&o, &menu, &l).unwrap();
        let mut last = 0.0;
        for lambda in [1.0, 10.0, 100.0] {
            let d = softmax_speaker(&o, &menu, &l, lambda).unwrap();
            assert!(d.probs()[best] > 0.0);
            assert!(d.probs()[best] >= last);
            last = d.probs()[best];
        }
        assert!(last > 0.99);
    }

    #[test]
    fn around_40_beats_every_alternative() {
        let (o, prior) = attendance();
        let menu = full_menu(&prior);
        let l = literal_listener(&prior, &menu, false).unwrap();
        let u = utility_table(&o, &l).unwrap();
        let winner = menu.iter().position(|m| *m == Message::around(40.0)).unwrap();
        for (i, ui) in u.iter().enumerate() {
            if i != winner {
                assert!(u[winner] > *ui, "{} vs {}", menu[winner], menu[i]);
            }
        }
    }
}
