//! Canonical scenarios and the vague-vs-precise optimality search.
//!
//! Three fixed scenarios:
//!
//! * `around-table1`: attendance counts 0..80 by 10, uniform priors, the
//!   speaker's peaked observation, and the full "between"/"around" menu.
//! * `tall-uniform`: heights 150..200 cm by 5 with uniform priors on height
//!   and threshold, against an observation peaked at 185 cm.
//! * `tall-gaussian`: same grid with a discretized Gaussian height prior
//!   (mean 175, sd 10).
//!
//! The observation used by `tall-uniform` and the Gaussian prior parameters
//! are harness constants chosen here; nothing downstream of them is a
//! published figure.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dist::{grid, kl_divergence, normalize, serialize_extended, Dist, ExtReal, PROB_TOL};
use crate::error::{Error, Result};
use crate::lexicon::{
    denotation, precise_alternatives, vague_alternatives, Message, ParamPrior, VagueKind,
};
use crate::listener::{literal_listener, literal_update, tall_closed_form, JointPrior, ListenerStrategy};
use crate::speaker::{argmax_with_tie_break, utility_table, Observation, TIE_TOL};

/// Speaker observation of the attendance scenario.
pub const ATTENDANCE_OBSERVATION: [f64; 9] = [0.0, 0.01, 0.01, 0.16, 0.64, 0.16, 0.01, 0.01, 0.0];

/// Observation peaked at 185 cm on the 150..200 grid, zero at both ends.
pub const TALL_OBSERVATION: [f64; 11] = [0.0, 0.01, 0.01, 0.01, 0.01, 0.01, 0.16, 0.64, 0.12, 0.03, 0.0];

pub const GAUSSIAN_MEAN: f64 = 175.0;
pub const GAUSSIAN_SD: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightedObservation {
    pub observation: Observation,
    pub weight: f64,
}

/// A complete communication setup: common prior, speaker observations with
/// their probabilities, the message menu and listener options.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub name: String,
    pub unit: String,
    pub prior: JointPrior,
    pub observations: Vec<WeightedObservation>,
    pub menu: Vec<Message>,
    pub lambda: f64,
    pub closed_form: bool,
}

impl Scenario {
    pub fn new(
        name: impl Into<String>,
        unit: impl Into<String>,
        prior: JointPrior,
        observations: Vec<WeightedObservation>,
        menu: Vec<Message>,
        lambda: f64,
        closed_form: bool,
    ) -> Result<Self> {
        if observations.is_empty() {
            return Err(Error::InvalidArgument("scenario needs at least one observation".into()));
        }
        if menu.is_empty() {
            return Err(Error::InvalidArgument("scenario menu is empty".into()));
        }
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidArgument(format!("lambda must be positive, got {lambda}")));
        }
        for wo in &observations {
            if !wo.observation.dist.same_support(&prior.x_prior) {
                return Err(Error::InvalidDist(format!(
                    "observation `{}` is not on the scenario grid",
                    wo.observation.id
                )));
            }
            if !(wo.weight >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "observation `{}` has negative weight",
                    wo.observation.id
                )));
            }
        }
        let total: f64 = observations.iter().map(|o| o.weight).sum();
        if (total - 1.0).abs() > PROB_TOL {
            return Err(Error::InvalidArgument(format!(
                "observation weights sum to {total}"
            )));
        }
        for m in &menu {
            m.check_on_grid(prior.grid())?;
        }
        Ok(Scenario {
            name: name.into(),
            unit: unit.into(),
            prior,
            observations,
            menu,
            lambda,
            closed_form,
        })
    }

    pub fn grid(&self) -> &[f64] {
        self.prior.grid()
    }

    pub fn literal_listener(&self) -> Result<ListenerStrategy> {
        literal_listener(&self.prior, &self.menu, self.closed_form)
    }

    pub fn observation(&self, id: &str) -> Option<&Observation> {
        self.observations
            .iter()
            .map(|wo| &wo.observation)
            .find(|o| o.id == id)
    }

    pub fn message_index(&self, m: &Message) -> Option<usize> {
        self.menu.iter().position(|x| x.kind == m.kind)
    }
}

fn attendance_prior() -> JointPrior {
    let g = grid(0.0, 80.0, 10.0).expect("static grid");
    let around = ParamPrior::uniform(grid(0.0, 40.0, 10.0).expect("static grid")).expect("uniform");
    JointPrior::independent(Dist::uniform(g).expect("uniform"), Some(around), None)
}

fn heights() -> Vec<f64> {
    grid(150.0, 200.0, 5.0).expect("static grid")
}

/// All precise alternatives followed by one "around n" per grid point.
pub fn attendance_scenario() -> Scenario {
    let prior = attendance_prior();
    let g = prior.grid().to_vec();
    let mut menu = precise_alternatives(&g);
    menu.extend(vague_alternatives(&g, VagueKind::Around));
    let o = Observation::new("o1", Dist::new(g, ATTENDANCE_OBSERVATION.to_vec()).expect("valid"));
    Scenario::new(
        "attendance",
        "persons",
        prior,
        vec![WeightedObservation { observation: o, weight: 1.0 }],
        menu,
        4.0,
        false,
    )
    .expect("valid scenario")
}

fn tall_scenario(name: &str, x_prior: Dist) -> Scenario {
    let h = heights();
    let t = ParamPrior::uniform(h.clone()).expect("uniform");
    let prior = JointPrior::independent(x_prior, None, Some(t));
    let mut menu = precise_alternatives(&h);
    menu.extend(vague_alternatives(&h, VagueKind::Threshold));
    let o = Observation::new("peak185", Dist::new(h, TALL_OBSERVATION.to_vec()).expect("valid"));
    Scenario::new(
        name,
        "cm",
        prior,
        vec![WeightedObservation { observation: o, weight: 1.0 }],
        menu,
        4.0,
        false,
    )
    .expect("valid scenario")
}

pub fn tall_uniform_scenario() -> Scenario {
    tall_scenario("tall-uniform", Dist::uniform(heights()).expect("uniform"))
}

/// Gaussian density evaluated on the grid and renormalized.
pub fn discretized_gaussian(support: &[f64], mean: f64, sd: f64) -> Result<Dist> {
    let w: Vec<f64> = support
        .iter()
        .map(|x| (-(x - mean).powi(2) / (2.0 * sd * sd)).exp())
        .collect();
    normalize(&w, support)
}

pub fn tall_gaussian_scenario() -> Scenario {
    let h = heights();
    tall_scenario(
        "tall-gaussian",
        discretized_gaussian(&h, GAUSSIAN_MEAN, GAUSSIAN_SD).expect("positive weights"),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UtilityEntry {
    pub message: Message,
    pub vague: bool,
    pub kl: ExtReal,
    #[serde(serialize_with = "serialize_extended")]
    pub utility: f64,
}

/// Utilities of every menu message for one observation, plus the winner.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UtilityReport {
    pub observation: String,
    pub entries: Vec<UtilityEntry>,
    pub winner: Message,
    pub winner_index: usize,
    /// Winner's utility minus the best other utility; `inf` if every other
    /// message violates Quality.
    #[serde(serialize_with = "serialize_extended")]
    pub margin: f64,
    pub strict: bool,
}

pub fn utility_report(
    scenario: &Scenario,
    listener: &ListenerStrategy,
    obs: &Observation,
) -> Result<UtilityReport> {
    let table = utility_table(obs, listener)?;
    let winner_index = argmax_with_tie_break(&scenario.menu, &table)
        .ok_or_else(|| Error::NoTruthfulMessage(obs.id.clone()))?;
    let runner_up = table
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != winner_index)
        .map(|(_, u)| *u)
        .fold(f64::NEG_INFINITY, f64::max);
    let margin = table[winner_index] - runner_up;
    let entries = scenario
        .menu
        .iter()
        .zip(&table)
        .map(|(m, u)| UtilityEntry {
            message: m.clone(),
            vague: m.is_vague(),
            kl: if u.is_finite() { ExtReal::Finite(-u) } else { ExtReal::Infinity },
            utility: *u,
        })
        .collect();
    Ok(UtilityReport {
        observation: obs.id.clone(),
        entries,
        winner: scenario.menu[winner_index].clone(),
        winner_index,
        margin,
        strict: margin > TIE_TOL,
    })
}

/// Column data for re-plotting a scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlotData {
    pub support: Vec<f64>,
    pub prior: Vec<f64>,
    pub p_o: Vec<f64>,
    pub posteriors: Vec<(String, Vec<f64>)>,
    pub kls: Vec<(String, ExtReal)>,
}

fn plot_data(scenario: &Scenario, obs: &Observation, shown: &[Message]) -> Result<PlotData> {
    let mut posteriors = Vec::new();
    let mut kls = Vec::new();
    for m in shown {
        let row = literal_update(&scenario.prior, m)?;
        kls.push((m.label.clone(), kl_divergence(&obs.dist, &row)?));
        posteriors.push((m.label.clone(), row.probs().to_vec()));
    }
    Ok(PlotData {
        support: scenario.grid().to_vec(),
        prior: scenario.prior.x_prior.probs().to_vec(),
        p_o: obs.dist.probs().to_vec(),
        posteriors,
        kls,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttendanceReport {
    pub support: Vec<f64>,
    pub prior: Vec<f64>,
    pub p_o: Vec<f64>,
    pub p_between: Vec<f64>,
    pub p_around: Vec<f64>,
    pub kl_between: f64,
    pub kl_around: f64,
    pub precise_count: usize,
    pub around_count: usize,
    pub utilities: UtilityReport,
    #[serde(skip)]
    pub plot: PlotData,
}

pub fn scenario_attendance() -> Result<AttendanceReport> {
    let sc = attendance_scenario();
    let listener = sc.literal_listener()?;
    let obs = &sc.observations[0].observation;
    let between = Message::between(10.0, 70.0)?;
    let around = Message::around(40.0);
    let p_between = literal_update(&sc.prior, &between)?;
    let p_around = literal_update(&sc.prior, &around)?;
    let kl = |d: &Dist| -> Result<f64> {
        kl_divergence(&obs.dist, d)?
            .finite()
            .ok_or_else(|| Error::InvalidDist("unexpected infinite divergence".into()))
    };
    Ok(AttendanceReport {
        support: sc.grid().to_vec(),
        prior: sc.prior.x_prior.probs().to_vec(),
        p_o: obs.dist.probs().to_vec(),
        kl_between: kl(&p_between)?,
        kl_around: kl(&p_around)?,
        p_between: p_between.probs().to_vec(),
        p_around: p_around.probs().to_vec(),
        precise_count: sc.menu.iter().filter(|m| !m.is_vague()).count(),
        around_count: sc.menu.iter().filter(|m| m.is_vague()).count(),
        utilities: utility_report(&sc, &listener, obs)?,
        plot: plot_data(&sc, obs, &[between, around])?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TallUniformReport {
    pub support: Vec<f64>,
    pub p_o: Vec<f64>,
    pub posterior_tall: Vec<f64>,
    /// Max deviation from `2(k+1)/((n+1)(n+2))`.
    pub closed_form_error: f64,
    /// Max absolute second difference of the posterior.
    pub linearity_error: f64,
    /// The named interval alternatives and "tall", in that order.
    pub named: Vec<UtilityEntry>,
    pub utilities: UtilityReport,
    pub tall_wins: bool,
    #[serde(skip)]
    pub plot: PlotData,
}

pub fn scenario_tall_uniform() -> Result<TallUniformReport> {
    let sc = tall_uniform_scenario();
    let listener = sc.literal_listener()?;
    let obs = &sc.observations[0].observation;
    let tall = literal_update(&sc.prior, &Message::tall())?;
    let closed = tall_closed_form(sc.grid().len() - 1);
    let closed_form_error = tall
        .probs()
        .iter()
        .zip(closed.probs())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let linearity_error = tall
        .probs()
        .windows(3)
        .map(|w| (w[2] - 2.0 * w[1] + w[0]).abs())
        .fold(0.0, f64::max);

    let named_messages = vec![
        Message::with_label(crate::lexicon::MessageKind::AtLeast(170.0), "taller than 170cm")?,
        Message::with_label(crate::lexicon::MessageKind::Between(155.0, 195.0), "between 155 and 195cm")?,
        Message::with_label(crate::lexicon::MessageKind::AtLeast(155.0), "more than 155cm")?,
        Message::with_label(crate::lexicon::MessageKind::AtMost(195.0), "less than 195cm")?,
        Message::tall(),
    ];
    let mut named = Vec::new();
    for m in &named_messages {
        let post = literal_update(&sc.prior, m)?;
        let kl = kl_divergence(&obs.dist, &post)?;
        named.push(UtilityEntry {
            message: m.clone(),
            vague: m.is_vague(),
            kl,
            utility: kl.neg(),
        });
    }
    let shown: Vec<Message> = named_messages.iter().rev().cloned().collect();
    let utilities = utility_report(&sc, &listener, obs)?;
    let tall_wins = utilities.winner == Message::tall() && utilities.strict;
    Ok(TallUniformReport {
        support: sc.grid().to_vec(),
        p_o: obs.dist.probs().to_vec(),
        posterior_tall: tall.probs().to_vec(),
        closed_form_error,
        linearity_error,
        named,
        utilities,
        tall_wins,
        plot: plot_data(&sc, obs, &shown)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TallGaussianReport {
    pub support: Vec<f64>,
    pub prior: Vec<f64>,
    pub posterior_tall: Vec<f64>,
    /// Max deviation between the joint-enumeration posterior and the
    /// `prior(k) * P(t <= k)` route.
    pub route_agreement: f64,
    pub ratio_pairs_checked: usize,
    pub ratio_violations: Vec<(f64, f64)>,
    pub prior_mode: f64,
    pub posterior_mode: f64,
    pub mode_shift_ok: bool,
    #[serde(skip)]
    pub plot: PlotData,
}

pub fn scenario_tall_gaussian() -> Result<TallGaussianReport> {
    let sc = tall_gaussian_scenario();
    let obs = &sc.observations[0].observation;
    let g = sc.grid().to_vec();
    let post = literal_update(&sc.prior, &Message::tall())?;

    let t_prior = match sc.prior.layer(VagueKind::Threshold) {
        Some(crate::listener::ParamLayer::Independent { t_prior }) => t_prior.dist.clone(),
        _ => unreachable!("independent threshold prior"),
    };
    let cdf_weights: Vec<f64> = g
        .iter()
        .zip(sc.prior.x_prior.probs())
        .map(|(x, px)| {
            let below: f64 = t_prior
                .support()
                .iter()
                .zip(t_prior.probs())
                .filter(|(t, _)| **t <= *x + PROB_TOL)
                .map(|(_, p)| p)
                .sum();
            px * below
        })
        .collect();
    let via_cdf = normalize(&cdf_weights, &g)?;
    let route_agreement = post.max_abs_diff(&via_cdf)?;

    let prior = sc.prior.x_prior.probs();
    let p = post.probs();
    let mut checked = 0;
    let mut ratio_violations = Vec::new();
    for k1 in 0..g.len() {
        for k2 in k1 + 1..g.len() {
            checked += 1;
            // cross-multiplied form of post(k2)/post(k1) > prior(k2)/prior(k1)
            if !(p[k2] * prior[k1] > p[k1] * prior[k2]) {
                ratio_violations.push((g[k1], g[k2]));
            }
        }
    }
    let prior_mode = g[sc.prior.x_prior.mode_index()];
    let posterior_mode = g[post.mode_index()];
    Ok(TallGaussianReport {
        support: g,
        prior: prior.to_vec(),
        posterior_tall: p.to_vec(),
        route_agreement,
        ratio_pairs_checked: checked,
        ratio_violations,
        prior_mode,
        posterior_mode,
        mode_shift_ok: posterior_mode >= prior_mode,
        plot: plot_data(&sc, obs, &[Message::tall()])?,
    })
}

/// A family of speaker observations to search over.
#[derive(Debug, Clone, PartialEq)]
pub enum ObservationFamily {
    Explicit(Vec<Observation>),
    /// Symmetric decaying tents around every interior grid point, plus
    /// `random` seeded asymmetric tents.
    Tents { random: usize, seed: u64 },
    /// Single-peaked shapes with zero mass at both grid ends.
    Peaked { random: usize, seed: u64 },
    PointMasses,
}

/// Base setup for a search: common prior and the vague family to test.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchSpec {
    pub name: String,
    pub prior: JointPrior,
    pub kind: VagueKind,
    pub family: ObservationFamily,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub observation: Observation,
    pub vague_message: Message,
    pub vague_kl: f64,
    pub best_precise: Message,
    pub best_precise_kl: ExtReal,
    /// Precise KL minus vague KL; `inf` when every precise message is
    /// Quality-violating.
    #[serde(serialize_with = "serialize_extended")]
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchReport {
    pub name: String,
    pub kind: VagueKind,
    pub examined: usize,
    pub witnesses: Vec<Witness>,
    /// Candidate witnesses the independent re-evaluation did not confirm.
    pub unconfirmed: usize,
}

fn peaked_from(shape: impl Fn(usize) -> f64, n: usize) -> Option<Vec<f64>> {
    let w: Vec<f64> = (0..n).map(shape).collect();
    let total: f64 = w.iter().sum();
    (total > 0.0).then(|| w.iter().map(|x| x / total).collect())
}

fn family_members(family: &ObservationFamily, g: &[f64]) -> Result<Vec<Observation>> {
    let n = g.len();
    let mut out = Vec::new();
    let mut push = |id: String, probs: Vec<f64>| -> Result<()> {
        out.push(Observation::new(id, Dist::new(g.to_vec(), probs)?));
        Ok(())
    };
    match family {
        ObservationFamily::Explicit(list) => return Ok(list.clone()),
        ObservationFamily::PointMasses => {
            for (i, v) in g.iter().enumerate() {
                let mut p = vec![0.0; n];
                p[i] = 1.0;
                push(format!("point-{v}"), p)?;
            }
        }
        ObservationFamily::Tents { random, seed } => {
            if n == 9 {
                push("attendance".into(), ATTENDANCE_OBSERVATION.to_vec())?;
            }
            for c in 1..n.saturating_sub(1) {
                for ratio in [0.25f64, 0.5] {
                    let shape = |k: usize| {
                        if k == 0 || k == n - 1 {
                            0.0
                        } else {
                            ratio.powi(k.abs_diff(c) as i32)
                        }
                    };
                    if let Some(p) = peaked_from(shape, n) {
                        push(format!("tent-{}-r{ratio}", g[c]), p)?;
                    }
                }
            }
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            for i in 0..*random {
                let c = rng.random_range(1..n.max(3) - 1).min(n - 1);
                let left: f64 = rng.random_range(0.05..0.8);
                let right: f64 = rng.random_range(0.05..0.8);
                let shape = |k: usize| {
                    if k == 0 || k == n - 1 {
                        0.0
                    } else if k < c {
                        left.powi((c - k) as i32)
                    } else {
                        right.powi((k - c) as i32)
                    }
                };
                if let Some(p) = peaked_from(shape, n) {
                    push(format!("random-tent-{i}"), p)?;
                }
            }
        }
        ObservationFamily::Peaked { random, seed } => {
            if n == 11 {
                push("peak185".into(), TALL_OBSERVATION.to_vec())?;
            }
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            for i in 0..*random {
                let c = rng.random_range(n / 2..n.max(3) - 1).min(n - 1);
                let sharp: f64 = rng.random_range(0.05..0.6);
                let floor: f64 = rng.random_range(0.0..0.02);
                let shape = |k: usize| {
                    if k == 0 || k == n - 1 {
                        0.0
                    } else {
                        sharp.powi(k.abs_diff(c) as i32) + floor
                    }
                };
                if let Some(p) = peaked_from(shape, n) {
                    push(format!("random-peak-{i}"), p)?;
                }
            }
        }
    }
    Ok(out)
}

/// KL of `p_o` against the literal posterior for `m`, computed by direct
/// cell enumeration without the listener module.
fn independent_kl(prior: &JointPrior, m: &Message, p_o: &Dist) -> Result<ExtReal> {
    let g = prior.grid();
    let mut w = vec![0.0; g.len()];
    match m.vague_kind() {
        None => {
            for (k, x) in g.iter().enumerate() {
                if denotation(m, *x, None)? {
                    w[k] = prior.x_prior.probs()[k];
                }
            }
        }
        Some(kind) => {
            let (ts, cells) = prior
                .joint_cells(kind)
                .ok_or_else(|| Error::MissingParameter(m.label.clone()))?;
            for (k, x) in g.iter().enumerate() {
                for (i, t) in ts.iter().enumerate() {
                    if denotation(m, *x, Some(*t))? {
                        w[k] += cells[k][i];
                    }
                }
            }
        }
    }
    let z: f64 = w.iter().sum();
    if z == 0.0 {
        return Ok(ExtReal::Infinity);
    }
    let mut total = 0.0;
    for (po, wk) in p_o.probs().iter().zip(&w) {
        if *po > 0.0 {
            if *wk == 0.0 {
                return Ok(ExtReal::Infinity);
            }
            total += po * (po * z / wk).ln();
        }
    }
    Ok(ExtReal::Finite(total))
}

/// Searches the family for observations where some vague message of `kind`
/// strictly beats every precise alternative. Each witness is re-verified by
/// exhaustive independent evaluation before being reported.
pub fn optimality_search(spec: &SearchSpec) -> Result<SearchReport> {
    let g = spec.prior.grid().to_vec();
    let precise = precise_alternatives(&g);
    let vague = vague_alternatives(&g, spec.kind);
    let mut menu = precise.clone();
    menu.extend(vague.iter().cloned());
    let listener = literal_listener(&spec.prior, &menu, false)?;
    let members = family_members(&spec.family, &g)?;

    let mut witnesses = Vec::new();
    let mut unconfirmed = 0;
    for obs in &members {
        let table = utility_table(obs, &listener)?;
        let (pi, pu) = best_of(&table[..precise.len()]);
        let (vi, vu) = best_of(&table[precise.len()..]);
        let (Some(vi), true) = (vi, vu - pu > TIE_TOL) else {
            continue;
        };
        let vague_kl = independent_kl(&spec.prior, &vague[vi], &obs.dist)?;
        let mut best_precise_kl = ExtReal::Infinity;
        let mut best_precise = precise[pi.unwrap_or(0)].clone();
        for m in &precise {
            let kl = independent_kl(&spec.prior, m, &obs.dist)?;
            if kl < best_precise_kl {
                best_precise_kl = kl;
                best_precise = m.clone();
            }
        }
        let confirmed = match (vague_kl, best_precise_kl) {
            (ExtReal::Finite(v), ExtReal::Finite(p)) => p - v > TIE_TOL,
            (ExtReal::Finite(_), ExtReal::Infinity) => true,
            _ => false,
        };
        if !confirmed {
            unconfirmed += 1;
            continue;
        }
        let vague_kl = vague_kl.to_f64();
        witnesses.push(Witness {
            observation: obs.clone(),
            vague_message: vague[vi].clone(),
            vague_kl,
            best_precise,
            best_precise_kl,
            margin: best_precise_kl.to_f64() - vague_kl,
        });
    }
    Ok(SearchReport {
        name: spec.name.clone(),
        kind: spec.kind,
        examined: members.len(),
        witnesses,
        unconfirmed,
    })
}

fn best_of(table: &[f64]) -> (Option<usize>, f64) {
    let mut best = None;
    let mut best_u = f64::NEG_INFINITY;
    for (i, u) in table.iter().enumerate() {
        if *u > best_u {
            best = Some(i);
            best_u = *u;
        }
    }
    (best, best_u)
}

/// The default search battery: tents for "around" on the attendance grid,
/// peaked shapes for "tall" on the height grid, and point masses.
pub fn default_searches(seed: u64) -> Vec<SearchSpec> {
    let tall = tall_uniform_scenario();
    vec![
        SearchSpec {
            name: "around/tents".into(),
            prior: attendance_prior(),
            kind: VagueKind::Around,
            family: ObservationFamily::Tents { random: 200, seed },
        },
        SearchSpec {
            name: "threshold/peaked".into(),
            prior: tall.prior.clone(),
            kind: VagueKind::Threshold,
            family: ObservationFamily::Peaked { random: 200, seed },
        },
        SearchSpec {
            name: "around/point-masses".into(),
            prior: attendance_prior(),
            kind: VagueKind::Around,
            family: ObservationFamily::PointMasses,
        },
    ]
}

/// Random positive distribution on `support`, for property checks.
pub fn random_positive_dist(rng: &mut impl Rng, support: &[f64]) -> Dist {
    let w: Vec<f64> = support.iter().map(|_| rng.random_range(0.01..1.0)).collect();
    normalize(&w, support).expect("positive weights")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn attendance_report() {
        let r = scenario_attendance().unwrap();
        let s = 1.0 / 7.0;
        let expected = [0.0, s, s, s, s, s, s, s, 0.0];
        for (a, b) in r.p_between.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        for (a, b) in r.p_around.iter().zip([0.04, 0.08, 0.12, 0.16, 0.20, 0.16, 0.12, 0.08, 0.04]) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!((r.kl_between * 100.0).round() / 100.0, 0.89);
        assert_eq!((r.kl_around * 100.0).round() / 100.0, 0.65);
        assert_eq!(r.precise_count, 45);
        assert_eq!(r.around_count, 9);
        assert_eq!(r.utilities.winner, Message::around(40.0));
        assert!(r.utilities.strict);
    }

    #[test]
    fn tall_uniform_report() {
        let r = scenario_tall_uniform().unwrap();
        assert!(r.closed_form_error < 1e-12);
        assert!(r.linearity_error < 1e-12);
        for (k, p) in r.posterior_tall.iter().enumerate() {
            assert!((p - (k + 1) as f64 / 66.0).abs() < 1e-15);
        }
        assert_eq!(r.named[0].kl, ExtReal::Infinity, "taller than 170cm");
        let tall_kl = r.named[4].kl.finite().unwrap();
        for e in &r.named[1..4] {
            assert!(e.kl.finite().unwrap() > tall_kl, "{}", e.message);
        }
        assert!(r.tall_wins);
    }

    #[test]
    fn tall_gaussian_report() {
        let r = scenario_tall_gaussian().unwrap();
        assert!(r.route_agreement < 1e-12);
        assert_eq!(r.ratio_pairs_checked, 55);
        assert!(r.ratio_violations.is_empty());
        assert!(r.mode_shift_ok);
        assert!((r.posterior_tall.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn searches() {
        let specs = default_searches(7);
        let tents = optimality_search(&specs[0]).unwrap();
        assert!(tents.witnesses.iter().any(|w| w.observation.id == "attendance"
            && w.vague_message == Message::around(40.0)));
        assert_eq!(tents.unconfirmed, 0);

        let peaked = optimality_search(&specs[1]).unwrap();
        assert!(peaked
            .witnesses
            .iter()
            .any(|w| w.observation.id == "peak185" && w.vague_message == Message::tall()));

        let points = optimality_search(&specs[2]).unwrap();
        assert_eq!(points.examined, 9);
        assert!(points.witnesses.is_empty());
    }

    #[test]
    fn scenario_validation() {
        let sc = attendance_scenario();
        let mut obs = sc.observations.clone();
        obs[0].weight = 0.5;
        assert!(Scenario::new("x", "", sc.prior.clone(), obs, sc.menu.clone(), 4.0, false).is_err());
        let bad_menu = vec![Message::around(45.0)];
        assert!(Scenario::new(
            "x",
            "",
            sc.prior.clone(),
            sc.observations.clone(),
            bad_menu,
            4.0,
            false
        )
        .is_err());
    }
}
