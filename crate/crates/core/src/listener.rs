//! Level-0 (literal) interpretation.
//!
//! The listener holds a joint prior over the world value `x` and, for each
//! vague message family, its open parameter `t`. Hearing a message conditions
//! that joint on the message being true and marginalizes `t` out.

use serde::Serialize;

use crate::dist::{normalize, Dist, PROB_TOL};
use crate::error::{Error, Result};
use crate::lexicon::{denotation, Message, MessageKind, ParamPrior, Polarity, VagueKind};

/// Explicit joint table over `(x, t)`; rows are world values, columns are
/// parameter values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExplicitJoint {
    pub t_support: Vec<f64>,
    pub cells: Vec<Vec<f64>>,
}

/// How the world value and one family's parameter are jointly distributed.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum ParamLayer {
    Independent { t_prior: ParamPrior },
    ExplicitJoint { joint: ExplicitJoint },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointPrior {
    pub x_prior: Dist,
    pub around: Option<ParamLayer>,
    pub threshold: Option<ParamLayer>,
}

impl JointPrior {
    /// Prior for precise messages only.
    pub fn precise_only(x_prior: Dist) -> Self {
        JointPrior {
            x_prior,
            around: None,
            threshold: None,
        }
    }

    pub fn independent(
        x_prior: Dist,
        around: Option<ParamPrior>,
        threshold: Option<ParamPrior>,
    ) -> Self {
        JointPrior {
            x_prior,
            around: around.map(|t_prior| ParamLayer::Independent { t_prior }),
            threshold: threshold.map(|t_prior| ParamLayer::Independent { t_prior }),
        }
    }

    /// Installs an explicit joint for one family. Its `x`-marginal must
    /// agree with `x_prior`.
    pub fn with_explicit(mut self, kind: VagueKind, joint: ExplicitJoint) -> Result<Self> {
        let n = self.x_prior.len();
        if joint.cells.len() != n || joint.cells.iter().any(|r| r.len() != joint.t_support.len()) {
            return Err(Error::DimensionMismatch(format!(
                "joint table must be {n} x {}",
                joint.t_support.len()
            )));
        }
        if joint.t_support.iter().any(|t| *t < 0.0 || !t.is_finite()) {
            return Err(Error::InvalidDist("parameter support must be nonnegative".into()));
        }
        if joint.cells.iter().flatten().any(|c| !(*c >= 0.0)) {
            return Err(Error::InvalidDist("negative joint entry".into()));
        }
        let total: f64 = joint.cells.iter().flatten().sum();
        if (total - 1.0).abs() > PROB_TOL {
            return Err(Error::InvalidDist(format!("joint sums to {total}")));
        }
        for (row, px) in joint.cells.iter().zip(self.x_prior.probs()) {
            if (row.iter().sum::<f64>() - px).abs() > PROB_TOL {
                return Err(Error::InvalidDist("joint x-marginal differs from x prior".into()));
            }
        }
        let layer = Some(ParamLayer::ExplicitJoint { joint });
        match kind {
            VagueKind::Around => self.around = layer,
            VagueKind::Threshold => self.threshold = layer,
        }
        Ok(self)
    }

    pub fn grid(&self) -> &[f64] {
        self.x_prior.support()
    }

    pub fn layer(&self, kind: VagueKind) -> Option<&ParamLayer> {
        match kind {
            VagueKind::Around => self.around.as_ref(),
            VagueKind::Threshold => self.threshold.as_ref(),
        }
    }

    /// `P(x = k, t = i)` for every cell of one family's layer.
    pub fn joint_cells(&self, kind: VagueKind) -> Option<(Vec<f64>, Vec<Vec<f64>>)> {
        Some(match self.layer(kind)? {
            ParamLayer::Independent { t_prior } => {
                let ts = t_prior.dist.support().to_vec();
                let cells = self
                    .x_prior
                    .probs()
                    .iter()
                    .map(|px| t_prior.dist.probs().iter().map(|pt| px * pt).collect())
                    .collect();
                (ts, cells)
            }
            ParamLayer::ExplicitJoint { joint } => (joint.t_support.clone(), joint.cells.clone()),
        })
    }
}

/// Posterior over `x` after conditioning the joint prior on `m` being true.
pub fn literal_update(prior: &JointPrior, m: &Message) -> Result<Dist> {
    let grid = prior.grid();
    let weights: Vec<f64> = match m.vague_kind() {
        None => grid
            .iter()
            .zip(prior.x_prior.probs())
            .map(|(x, px)| Ok(if denotation(m, *x, None)? { *px } else { 0.0 }))
            .collect::<Result<_>>()?,
        Some(kind) => {
            let (ts, cells) = prior
                .joint_cells(kind)
                .ok_or_else(|| Error::MissingParameter(m.label.clone()))?;
            let mut w = Vec::with_capacity(grid.len());
            for (x, row) in grid.iter().zip(&cells) {
                let mut acc = 0.0;
                for (t, p) in ts.iter().zip(row) {
                    if denotation(m, *x, Some(*t))? {
                        acc += p;
                    }
                }
                w.push(acc);
            }
            w
        }
    };
    normalize(&weights, grid).map_err(|e| match e {
        Error::AllZeroWeights => Error::ZeroPosterior(m.label.clone()),
        other => other,
    })
}

/// `P(x = k | around n) = (n - |n - k| + 1) / (n + 1)^2` for uniform `x` on
/// `0..=2n` and uniform `t` on `0..=n`, indexed by grid position.
pub fn around_closed_form(n: usize) -> Dist {
    let denom = ((n + 1) * (n + 1)) as f64;
    let probs = (0..=2 * n)
        .map(|k| (n + 1 - k.abs_diff(n)) as f64 / denom)
        .collect();
    Dist::over_indices(probs).expect("tent sums to one")
}

/// `P(x = k | x >= t) = 2(k + 1) / ((n + 1)(n + 2))` for uniform `x` and `t`
/// on `0..=n`.
pub fn tall_closed_form(n: usize) -> Dist {
    let denom = ((n + 1) * (n + 2)) as f64;
    let probs = (0..=n).map(|k| 2.0 * (k + 1) as f64 / denom).collect();
    Dist::over_indices(probs).expect("ramp sums to one")
}

fn is_uniform(d: &Dist) -> bool {
    let u = 1.0 / d.len() as f64;
    d.probs().iter().all(|p| (p - u).abs() <= PROB_TOL)
}

fn steps_from(values: &[f64], origin: f64, step: f64) -> bool {
    values
        .iter()
        .enumerate()
        .all(|(i, v)| (v - (origin + step * i as f64)).abs() <= PROB_TOL * step.max(1.0))
}

/// Closed-form posterior on the prior's real grid, when the uniform
/// preconditions hold for `m`. Otherwise `NonUniformPreconditionViolated`.
pub fn closed_form_posterior(prior: &JointPrior, m: &Message) -> Result<Dist> {
    let fail = |why: &str| Err(Error::NonUniformPreconditionViolated(format!("{}: {why}", m.label)));
    let grid = prior.grid();
    if !is_uniform(&prior.x_prior) {
        return fail("world prior is not uniform");
    }
    let step = if grid.len() > 1 { grid[1] - grid[0] } else { 1.0 };
    if !steps_from(grid, grid[0], step) {
        return fail("world grid is not evenly spaced");
    }
    let t_prior = match m.vague_kind().and_then(|k| prior.layer(k)) {
        Some(ParamLayer::Independent { t_prior }) => &t_prior.dist,
        _ => return fail("needs an independent parameter prior"),
    };
    if !is_uniform(t_prior) {
        return fail("parameter prior is not uniform");
    }
    let ts = t_prior.support();
    let probs = match m.kind {
        MessageKind::Around(center) => {
            if grid.len() % 2 == 0 {
                return fail("grid must have odd length");
            }
            let n = grid.len() / 2;
            if (grid[n] - center).abs() > PROB_TOL {
                return fail("target is not the grid midpoint");
            }
            if ts.len() != n + 1 || !steps_from(ts, 0.0, step) {
                return fail("half-width support must be 0..=n grid steps");
            }
            around_closed_form(n).probs().to_vec()
        }
        MessageKind::Threshold(Polarity::AtLeast) => {
            if ts.len() != grid.len() || !steps_from(ts, grid[0], step) {
                return fail("threshold support must equal the world grid");
            }
            tall_closed_form(grid.len() - 1).probs().to_vec()
        }
        _ => return fail("no closed form for this message"),
    };
    Dist::new(grid.to_vec(), probs)
}

/// Listener interpretation: one posterior row per menu message.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ListenerStrategy {
    pub rows: Vec<Dist>,
}

impl ListenerStrategy {
    pub fn row(&self, message: usize) -> &Dist {
        &self.rows[message]
    }

    pub fn max_abs_diff(&self, other: &ListenerStrategy) -> Result<f64> {
        if self.rows.len() != other.rows.len() {
            return Err(Error::DimensionMismatch("listener row counts differ".into()));
        }
        self.rows
            .iter()
            .zip(&other.rows)
            .try_fold(0.0f64, |acc, (a, b)| Ok(acc.max(a.max_abs_diff(b)?)))
    }
}

/// Literal listener over a whole menu. With `closed_form`, messages meeting
/// the uniform preconditions use the closed-form path.
pub fn literal_listener(prior: &JointPrior, menu: &[Message], closed_form: bool) -> Result<ListenerStrategy> {
    let rows = menu
        .iter()
        .map(|m| {
            if closed_form {
                if let Ok(d) = closed_form_posterior(prior, m) {
                    return Ok(d);
                }
            }
            literal_update(prior, m)
        })
        .collect::<Result<_>>()?;
    Ok(ListenerStrategy { rows })
}
