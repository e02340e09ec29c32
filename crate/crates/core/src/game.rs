//! Finite common-interest sender-receiver games.
//!
//! Sender and receiver share one payoff table `payoff[state][action]`. A
//! sender strategy maps states to distributions over messages, a receiver
//! strategy maps messages to distributions over actions.

use std::collections::HashSet;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::PROB_TOL;
use crate::error::{Error, Result};

pub const DEFAULT_ENUMERATION_BUDGET: u128 = 10_000_000;
pub const NASH_TOL: f64 = 1e-9;
pub const DOMINANCE_TOL: f64 = 1e-7;

/// Entries this close to zero are treated as exact zeros in solved profiles.
const CLEAN_TOL: f64 = 1e-12;
const PIVOT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Game {
    pub states: Vec<String>,
    pub prior: Vec<f64>,
    pub messages: Vec<String>,
    pub actions: Vec<String>,
    pub payoff: Vec<Vec<f64>>,
    pub question: Option<Vec<Vec<usize>>>,
}

impl Game {
    pub fn new(
        states: Vec<String>,
        prior: Vec<f64>,
        messages: Vec<String>,
        actions: Vec<String>,
        payoff: Vec<Vec<f64>>,
        question: Option<Vec<Vec<usize>>>,
    ) -> Result<Self> {
        let g = Game { states, prior, messages, actions, payoff, question };
        g.validate()?;
        Ok(g)
    }

    fn validate(&self) -> Result<()> {
        let ns = self.states.len();
        if ns == 0 || self.messages.is_empty() || self.actions.is_empty() {
            return Err(Error::InvalidGame("states, messages and actions must be nonempty".into()));
        }
        if self.prior.len() != ns {
            return Err(Error::InvalidGame(format!(
                "prior has {} entries for {ns} states",
                self.prior.len()
            )));
        }
        if self.prior.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidGame("prior entries must be finite and nonnegative".into()));
        }
        let total: f64 = self.prior.iter().sum();
        if (total - 1.0).abs() > PROB_TOL {
            return Err(Error::InvalidGame(format!("prior sums to {total}")));
        }
        if self.payoff.len() != ns || self.payoff.iter().any(|r| r.len() != self.actions.len()) {
            return Err(Error::InvalidGame(format!(
                "payoff table must be {ns} x {}",
                self.actions.len()
            )));
        }
        if self.payoff.iter().flatten().any(|u| !u.is_finite()) {
            return Err(Error::InvalidGame("payoffs must be finite".into()));
        }
        if let Some(q) = &self.question {
            let mut seen = vec![false; ns];
            for cell in q {
                if cell.is_empty() {
                    return Err(Error::InvalidGame("question has an empty cell".into()));
                }
                for &s in cell {
                    if s >= ns {
                        return Err(Error::InvalidGame(format!("question names unknown state {s}")));
                    }
                    if seen[s] {
                        return Err(Error::InvalidGame(format!("state {s} is in two question cells")));
                    }
                    seen[s] = true;
                }
            }
            if seen.iter().any(|x| !x) {
                return Err(Error::InvalidGame("question cells do not cover every state".into()));
            }
        }
        Ok(())
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn n_messages(&self) -> usize {
        self.messages.len()
    }

    pub fn n_actions(&self) -> usize {
        self.actions.len()
    }

    /// Payoff to the sender in state `s` when the receiver plays row `rho`.
    fn sender_value(&self, s: usize, rho: &[f64]) -> f64 {
        rho.iter().zip(&self.payoff[s]).map(|(r, u)| r * u).sum()
    }

    /// Unnormalized expected payoff of each action after message `m`.
    fn receiver_weights(&self, p: &MixedProfile, m: usize) -> Vec<f64> {
        (0..self.n_actions())
            .map(|a| {
                (0..self.n_states())
                    .map(|s| self.prior[s] * p.sender[s][m] * self.payoff[s][a])
                    .sum()
            })
            .collect()
    }

    fn message_prob(&self, p: &MixedProfile, m: usize) -> f64 {
        (0..self.n_states()).map(|s| self.prior[s] * p.sender[s][m]).sum()
    }

    /// Lowest-index action maximizing prior-expected payoff.
    fn default_action(&self) -> usize {
        let w: Vec<f64> = (0..self.n_actions())
            .map(|a| (0..self.n_states()).map(|s| self.prior[s] * self.payoff[s][a]).sum())
            .collect();
        argmax_low(&w)
    }
}

fn argmax_low(v: &[f64]) -> usize {
    let best = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    v.iter().position(|x| best - x <= PROB_TOL).unwrap_or(0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixedProfile {
    pub sender: Vec<Vec<f64>>,
    pub receiver: Vec<Vec<f64>>,
}

impl MixedProfile {
    pub fn from_pure(sender: &[usize], receiver: &[usize], n_messages: usize, n_actions: usize) -> Self {
        let row = |i: usize, n: usize| {
            let mut r = vec![0.0; n];
            r[i] = 1.0;
            r
        };
        MixedProfile {
            sender: sender.iter().map(|&m| row(m, n_messages)).collect(),
            receiver: receiver.iter().map(|&a| row(a, n_actions)).collect(),
        }
    }

    pub fn check(&self, g: &Game) -> Result<()> {
        let shape_err = |what: &str| Error::DimensionMismatch(format!("profile {what} does not match the game"));
        if self.sender.len() != g.n_states() || self.sender.iter().any(|r| r.len() != g.n_messages()) {
            return Err(shape_err("sender"));
        }
        if self.receiver.len() != g.n_messages() || self.receiver.iter().any(|r| r.len() != g.n_actions()) {
            return Err(shape_err("receiver"));
        }
        for row in self.sender.iter().chain(&self.receiver) {
            if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(Error::InvalidDist("profile row has a negative or non-finite entry".into()));
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > PROB_TOL {
                return Err(Error::InvalidDist(format!("profile row sums to {total}")));
            }
        }
        Ok(())
    }

    pub fn is_pure(&self) -> bool {
        let pure = |r: &Vec<f64>| r.iter().filter(|p| **p > PROB_TOL).count() == 1;
        self.sender.iter().all(pure) && self.receiver.iter().all(pure)
    }

    pub fn sender_is_pure(&self) -> bool {
        self.sender
            .iter()
            .all(|r| r.iter().filter(|p| **p > PROB_TOL).count() == 1)
    }

    /// Profile with near-zero entries dropped and rows renormalized.
    fn cleaned(mut self) -> Self {
        for row in self.sender.iter_mut().chain(self.receiver.iter_mut()) {
            for p in row.iter_mut() {
                if *p < CLEAN_TOL {
                    *p = 0.0;
                }
            }
            let total: f64 = row.iter().sum();
            row.iter_mut().for_each(|p| *p /= total);
        }
        self
    }

    fn key(&self) -> Vec<i64> {
        self.sender
            .iter()
            .chain(&self.receiver)
            .flatten()
            .map(|p| (p * 1e9).round() as i64)
            .collect()
    }
}

pub fn expected_payoff(g: &Game, p: &MixedProfile) -> Result<f64> {
    p.check(g)?;
    let mut total = 0.0;
    for s in 0..g.n_states() {
        for m in 0..g.n_messages() {
            total += g.prior[s] * p.sender[s][m] * g.sender_value(s, &p.receiver[m]);
        }
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "side", rename_all = "lowercase")]
pub enum Deviation {
    Sender { state: usize, message: usize, gain: f64 },
    Receiver { message: usize, action: usize, gain: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NashCheck {
    pub is_nash: bool,
    pub deviation: Option<Deviation>,
}

/// Checks every receiver row at messages sent with positive probability and
/// every sender row at positive-prior states for a deviation gaining more
/// than `tol`. The first one found is returned as a witness.
pub fn is_nash(g: &Game, p: &MixedProfile, tol: f64) -> Result<NashCheck> {
    p.check(g)?;
    for m in 0..g.n_messages() {
        let pm = g.message_prob(p, m);
        if pm <= 0.0 {
            continue;
        }
        let values: Vec<f64> = g.receiver_weights(p, m).iter().map(|w| w / pm).collect();
        let current: f64 = values.iter().zip(&p.receiver[m]).map(|(v, q)| v * q).sum();
        let best = argmax_low(&values);
        let gain = values[best] - current;
        if gain > tol {
            return Ok(NashCheck {
                is_nash: false,
                deviation: Some(Deviation::Receiver { message: m, action: best, gain }),
            });
        }
    }
    for s in 0..g.n_states() {
        if g.prior[s] <= 0.0 {
            continue;
        }
        let values: Vec<f64> = (0..g.n_messages()).map(|m| g.sender_value(s, &p.receiver[m])).collect();
        let current: f64 = values.iter().zip(&p.sender[s]).map(|(v, q)| v * q).sum();
        let best = argmax_low(&values);
        let gain = values[best] - current;
        if gain > tol {
            return Ok(NashCheck {
                is_nash: false,
                deviation: Some(Deviation::Sender { state: s, message: best, gain }),
            });
        }
    }
    Ok(NashCheck { is_nash: true, deviation: None })
}

/// Receiver best response to a sender strategy, ties to the lowest action.
/// Unsent messages get the action that is best under the prior alone.
pub fn best_response_receiver(g: &Game, sender: &[Vec<f64>]) -> Vec<usize> {
    let probe = MixedProfile {
        sender: sender.to_vec(),
        receiver: vec![vec![0.0; g.n_actions()]; g.n_messages()],
    };
    (0..g.n_messages())
        .map(|m| {
            if g.message_prob(&probe, m) <= 0.0 {
                g.default_action()
            } else {
                argmax_low(&g.receiver_weights(&probe, m))
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PureEquilibrium {
    pub sender: Vec<usize>,
    pub receiver: Vec<usize>,
    pub payoff: f64,
}

impl PureEquilibrium {
    pub fn profile(&self, g: &Game) -> MixedProfile {
        MixedProfile::from_pure(&self.sender, &self.receiver, g.n_messages(), g.n_actions())
    }
}

fn profile_count(g: &Game) -> Option<u128> {
    let nm = g.n_messages() as u128;
    let na = g.n_actions() as u128;
    nm.checked_pow(g.n_states() as u32)?
        .checked_mul(na.checked_pow(g.n_messages() as u32)?)
}

/// Odometer step over `digits` in base `base`; false once it wraps.
fn advance(digits: &mut [usize], base: usize) -> bool {
    for d in digits.iter_mut() {
        *d += 1;
        if *d < base {
            return true;
        }
        *d = 0;
    }
    false
}

fn pure_is_nash(g: &Game, sender: &[usize], receiver: &[usize], tol: f64) -> bool {
    for s in 0..g.n_states() {
        if g.prior[s] <= 0.0 {
            continue;
        }
        let current = g.payoff[s][receiver[sender[s]]];
        if receiver.iter().any(|&a| g.payoff[s][a] - current > tol) {
            return false;
        }
    }
    for m in 0..g.n_messages() {
        let senders: Vec<usize> = (0..g.n_states())
            .filter(|&s| sender[s] == m && g.prior[s] > 0.0)
            .collect();
        if senders.is_empty() {
            continue;
        }
        let pm: f64 = senders.iter().map(|&s| g.prior[s]).sum();
        let value = |a: usize| senders.iter().map(|&s| g.prior[s] * g.payoff[s][a]).sum::<f64>() / pm;
        let current = value(receiver[m]);
        if (0..g.n_actions()).any(|a| value(a) - current > tol) {
            return false;
        }
    }
    true
}

/// Every pure equilibrium, sorted by payoff (descending, stable in
/// enumeration order).
pub fn enumerate_pure_equilibria(g: &Game, budget: u128) -> Result<Vec<PureEquilibrium>> {
    let required = profile_count(g).unwrap_or(u128::MAX);
    if required > budget {
        return Err(Error::BudgetExceeded { required, budget });
    }
    let mut out = Vec::new();
    let mut sender = vec![0usize; g.n_states()];
    loop {
        let mut receiver = vec![0usize; g.n_messages()];
        loop {
            if pure_is_nash(g, &sender, &receiver, NASH_TOL) {
                let payoff = (0..g.n_states())
                    .map(|s| g.prior[s] * g.payoff[s][receiver[sender[s]]])
                    .sum();
                out.push(PureEquilibrium { sender: sender.clone(), receiver: receiver.clone(), payoff });
            }
            if !advance(&mut receiver, g.n_actions()) {
                break;
            }
        }
        if !advance(&mut sender, g.n_messages()) {
            break;
        }
    }
    out.sort_by(|a, b| b.payoff.total_cmp(&a.payoff));
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING-KEBAB-CASE")]
pub enum Verdict {
    Pass,
    Fail,
    NotEquilibrium,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateResult {
    pub index: usize,
    pub payoff: f64,
    pub pure: bool,
    pub verdict: Verdict,
    /// Largest payoff gap between a supported message and the state's best
    /// message, over all positive-prior states.
    pub indifference_gap: f64,
    pub deviation: Option<Deviation>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominanceReport {
    pub best_pure_payoff: f64,
    pub pure_equilibria: usize,
    pub candidates: Vec<CandidateResult>,
    pub passed: usize,
    pub failed: usize,
    pub not_equilibrium: usize,
}

impl DominanceReport {
    pub fn all_pass(&self) -> bool {
        self.failed == 0
    }

    pub fn verified(&self) -> impl Iterator<Item = &CandidateResult> {
        self.candidates.iter().filter(|c| c.verdict != Verdict::NotEquilibrium)
    }
}

fn indifference_gap(g: &Game, p: &MixedProfile) -> f64 {
    let mut gap: f64 = 0.0;
    for s in 0..g.n_states() {
        if g.prior[s] <= 0.0 {
            continue;
        }
        let values: Vec<f64> = (0..g.n_messages()).map(|m| g.sender_value(s, &p.receiver[m])).collect();
        let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for m in 0..g.n_messages() {
            if p.sender[s][m] > CLEAN_TOL {
                gap = gap.max(best - values[m]);
            }
        }
    }
    gap
}

/// Compares each candidate that is an equilibrium against the best pure
/// equilibrium. A candidate fails if it does strictly better (beyond
/// `DOMINANCE_TOL`) or if some supported message is not a best response.
pub fn mixed_dominance_check(g: &Game, candidates: &[MixedProfile]) -> Result<DominanceReport> {
    if candidates.is_empty() {
        return Err(Error::InvalidArgument("no candidate profiles".into()));
    }
    let pure = enumerate_pure_equilibria(g, DEFAULT_ENUMERATION_BUDGET)?;
    let best_pure_payoff = pure.first().map(|e| e.payoff).unwrap_or(f64::NEG_INFINITY);
    let mut results = Vec::new();
    for (index, c) in candidates.iter().enumerate() {
        let payoff = expected_payoff(g, c)?;
        let nash = is_nash(g, c, NASH_TOL)?;
        let gap = indifference_gap(g, c);
        let verdict = if !nash.is_nash {
            Verdict::NotEquilibrium
        } else if payoff > best_pure_payoff + DOMINANCE_TOL || gap > DOMINANCE_TOL {
            Verdict::Fail
        } else {
            Verdict::Pass
        };
        results.push(CandidateResult {
            index,
            payoff,
            pure: c.is_pure(),
            verdict,
            indifference_gap: gap,
            deviation: nash.deviation,
        });
    }
    let count = |v: Verdict| results.iter().filter(|r| r.verdict == v).count();
    Ok(DominanceReport {
        best_pure_payoff,
        pure_equilibria: pure.len(),
        passed: count(Verdict::Pass),
        failed: count(Verdict::Fail),
        not_equilibrium: count(Verdict::NotEquilibrium),
        candidates: results,
    })
}

/// Solves `a x = b` by Gauss-Jordan elimination with partial pivoting. Free
/// variables are set to zero. `None` if the system is inconsistent.
fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>, n: usize) -> Option<Vec<f64>> {
    let rows = a.len();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..n {
        if r == rows {
            break;
        }
        let (best, mag) = (r..rows)
            .map(|i| (i, a[i][c].abs()))
            .fold((r, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if mag < PIVOT_TOL {
            continue;
        }
        a.swap(r, best);
        b.swap(r, best);
        let inv = 1.0 / a[r][c];
        a[r].iter_mut().for_each(|x| *x *= inv);
        b[r] *= inv;
        for i in 0..rows {
            if i != r && a[i][c] != 0.0 {
                let f = a[i][c];
                for j in 0..n {
                    a[i][j] -= f * a[r][j];
                }
                b[i] -= f * b[r];
            }
        }
        pivots.push(c);
        r += 1;
    }
    if b[r..].iter().any(|x| x.abs() > 1e-9) {
        return None;
    }
    let mut x = vec![0.0; n];
    for (i, &c) in pivots.iter().enumerate() {
        x[c] = b[i];
    }
    Some(x)
}

/// Minimum-norm solution of `a x = b`, via `x = a^T y` with
/// `(a a^T) y = b`.
fn solve_min_norm(a: &[Vec<f64>], b: &[f64], n: usize) -> Option<Vec<f64>> {
    let rows = a.len();
    let gram: Vec<Vec<f64>> = (0..rows)
        .map(|i| (0..rows).map(|j| (0..n).map(|k| a[i][k] * a[j][k]).sum()).collect())
        .collect();
    let y = solve_linear(gram, b.to_vec(), rows)?;
    let x: Vec<f64> = (0..n).map(|k| (0..rows).map(|i| a[i][k] * y[i]).sum()).collect();
    let consistent = a
        .iter()
        .zip(b)
        .all(|(row, bi)| (row.iter().zip(&x).map(|(r, v)| r * v).sum::<f64>() - bi).abs() < 1e-9);
    consistent.then_some(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SolveMode {
    Vertex,
    MinNorm,
}

fn solve_system(a: Vec<Vec<f64>>, b: Vec<f64>, n: usize, mode: SolveMode) -> Option<Vec<f64>> {
    match mode {
        SolveMode::Vertex => solve_linear(a, b, n),
        SolveMode::MinNorm => solve_min_norm(&a, &b, n),
    }
}

/// Support pattern: `sender[s]` and `receiver[m]` list the indices allowed
/// positive probability.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Supports {
    pub sender: Vec<Vec<usize>>,
    pub receiver: Vec<Vec<usize>>,
}

/// Receiver rows making every state indifferent across its sender support.
fn solve_receiver(g: &Game, sup: &Supports, mode: SolveMode) -> Option<Vec<Vec<f64>>> {
    let mut offsets = Vec::new();
    let mut n = 0;
    for r in &sup.receiver {
        offsets.push(n);
        n += r.len();
    }
    let mut a = Vec::new();
    let mut b = Vec::new();
    for (m, r) in sup.receiver.iter().enumerate() {
        let mut row = vec![0.0; n];
        for k in 0..r.len() {
            row[offsets[m] + k] = 1.0;
        }
        a.push(row);
        b.push(1.0);
    }
    for s in 0..g.n_states() {
        if g.prior[s] <= 0.0 {
            continue;
        }
        let ms = &sup.sender[s];
        for &m in &ms[1..] {
            let m0 = ms[0];
            let mut row = vec![0.0; n];
            for (k, &act) in sup.receiver[m0].iter().enumerate() {
                row[offsets[m0] + k] += g.payoff[s][act];
            }
            for (k, &act) in sup.receiver[m].iter().enumerate() {
                row[offsets[m] + k] -= g.payoff[s][act];
            }
            a.push(row);
            b.push(0.0);
        }
    }
    let x = solve_system(a, b, n, mode)?;
    if x.iter().any(|v| *v < -CLEAN_TOL) {
        return None;
    }
    Some(
        sup.receiver
            .iter()
            .enumerate()
            .map(|(m, r)| {
                let mut row = vec![0.0; g.n_actions()];
                for (k, &act) in r.iter().enumerate() {
                    row[act] = x[offsets[m] + k].max(0.0);
                }
                row
            })
            .collect(),
    )
}

/// Sender rows making the receiver indifferent across its support at every
/// message some state may send.
fn solve_sender(g: &Game, sup: &Supports, mode: SolveMode) -> Option<Vec<Vec<f64>>> {
    let mut offsets = Vec::new();
    let mut n = 0;
    for r in &sup.sender {
        offsets.push(n);
        n += r.len();
    }
    let mut a = Vec::new();
    let mut b = Vec::new();
    for (s, r) in sup.sender.iter().enumerate() {
        let mut row = vec![0.0; n];
        for k in 0..r.len() {
            row[offsets[s] + k] = 1.0;
        }
        a.push(row);
        b.push(1.0);
    }
    for (m, acts) in sup.receiver.iter().enumerate() {
        let used = sup.sender.iter().any(|r| r.contains(&m));
        if !used {
            continue;
        }
        for &act in &acts[1..] {
            let a0 = acts[0];
            let mut row = vec![0.0; n];
            for (s, r) in sup.sender.iter().enumerate() {
                if let Some(k) = r.iter().position(|&x| x == m) {
                    row[offsets[s] + k] = g.prior[s] * (g.payoff[s][a0] - g.payoff[s][act]);
                }
            }
            a.push(row);
            b.push(0.0);
        }
    }
    let x = solve_system(a, b, n, mode)?;
    if x.iter().any(|v| *v < -CLEAN_TOL) {
        return None;
    }
    Some(
        sup.sender
            .iter()
            .enumerate()
            .map(|(s, r)| {
                let mut row = vec![0.0; g.n_messages()];
                for (k, &m) in r.iter().enumerate() {
                    row[m] = x[offsets[s] + k].max(0.0);
                }
                row
            })
            .collect(),
    )
}

/// Profiles satisfying the indifference conditions of a support pattern:
/// the minimum-norm solution and the vertex solution with free variables at
/// zero, each kept only if nonnegative.
pub fn solve_supports(g: &Game, sup: &Supports) -> Vec<MixedProfile> {
    let mut out: Vec<MixedProfile> = Vec::new();
    for mode in [SolveMode::MinNorm, SolveMode::Vertex] {
        let (Some(receiver), Some(sender)) = (solve_receiver(g, sup, mode), solve_sender(g, sup, mode)) else {
            continue;
        };
        let p = MixedProfile { sender, receiver };
        if p.sender.iter().chain(&p.receiver).any(|r| r.iter().sum::<f64>() <= 0.5) {
            continue;
        }
        let p = p.cleaned();
        if !out.contains(&p) {
            out.push(p);
        }
    }
    out
}

fn nonempty_subsets(n: usize) -> Vec<Vec<usize>> {
    (1u32..(1 << n))
        .map(|mask| (0..n).filter(|i| mask & (1 << i) != 0).collect())
        .collect()
}

/// Candidate generator settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CandidateBudget {
    /// Support patterns tried per game; all are tried if there are fewer.
    pub support_profiles: usize,
    pub dynamics_starts: usize,
    pub dynamics_steps: usize,
}

impl Default for CandidateBudget {
    fn default() -> Self {
        CandidateBudget { support_profiles: 2000, dynamics_starts: 8, dynamics_steps: 400 }
    }
}

fn support_patterns(g: &Game, budget: usize, rng: &mut ChaCha8Rng) -> Vec<Supports> {
    let ms = nonempty_subsets(g.n_messages());
    let acts = nonempty_subsets(g.n_actions());
    let total = (ms.len() as u128)
        .checked_pow(g.n_states() as u32)
        .and_then(|x| x.checked_mul((acts.len() as u128).checked_pow(g.n_messages() as u32)?))
        .unwrap_or(u128::MAX);
    let mut out = Vec::new();
    if total <= budget as u128 {
        let mut si = vec![0usize; g.n_states()];
        loop {
            let mut ri = vec![0usize; g.n_messages()];
            loop {
                out.push(Supports {
                    sender: si.iter().map(|&i| ms[i].clone()).collect(),
                    receiver: ri.iter().map(|&i| acts[i].clone()).collect(),
                });
                if !advance(&mut ri, acts.len()) {
                    break;
                }
            }
            if !advance(&mut si, ms.len()) {
                break;
            }
        }
    } else {
        let mut seen = HashSet::new();
        while out.len() < budget {
            let sup = Supports {
                sender: (0..g.n_states()).map(|_| ms.choose(rng).expect("nonempty").clone()).collect(),
                receiver: (0..g.n_messages()).map(|_| acts.choose(rng).expect("nonempty").clone()).collect(),
            };
            if seen.insert(sup.clone()) {
                out.push(sup);
            }
        }
    }
    out
}

fn random_row(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let t: f64 = w.iter().sum();
    w.iter().map(|x| x / t).collect()
}

/// Multiplicative-weights dynamics from a random interior start; returns
/// the support pattern the run settles on.
fn dynamics_support(g: &Game, steps: usize, rng: &mut ChaCha8Rng) -> Supports {
    let eta = 2.0;
    let mut p = MixedProfile {
        sender: (0..g.n_states()).map(|_| random_row(rng, g.n_messages())).collect(),
        receiver: (0..g.n_messages()).map(|_| random_row(rng, g.n_actions())).collect(),
    };
    for _ in 0..steps {
        for s in 0..g.n_states() {
            let values: Vec<f64> = (0..g.n_messages()).map(|m| g.sender_value(s, &p.receiver[m])).collect();
            reweight(&mut p.sender[s], &values, eta);
        }
        for m in 0..g.n_messages() {
            let pm = g.message_prob(&p, m).max(1e-300);
            let values: Vec<f64> = g.receiver_weights(&p, m).iter().map(|w| w / pm).collect();
            reweight(&mut p.receiver[m], &values, eta);
        }
    }
    let support = |row: &Vec<f64>| {
        let s: Vec<usize> = (0..row.len()).filter(|&i| row[i] > 1e-3).collect();
        if s.is_empty() {
            vec![argmax_low(row)]
        } else {
            s
        }
    };
    Supports {
        sender: p.sender.iter().map(support).collect(),
        receiver: p.receiver.iter().map(support).collect(),
    }
}

fn reweight(row: &mut [f64], values: &[f64], eta: f64) {
    let top = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for (p, v) in row.iter_mut().zip(values) {
        *p *= (eta * (v - top)).exp();
    }
    let t: f64 = row.iter().sum();
    row.iter_mut().for_each(|p| *p /= t);
}

/// Candidate mixed profiles from support enumeration with indifference
/// solving plus snapped dynamics. Only profiles that solve their support's
/// indifference system are returned; equilibrium status is left to
/// [`mixed_dominance_check`]. Output is deduplicated and deterministic in
/// `seed`.
pub fn mixed_candidates(g: &Game, budget: CandidateBudget, seed: u64) -> Vec<MixedProfile> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut patterns = support_patterns(g, budget.support_profiles, &mut rng);
    for _ in 0..budget.dynamics_starts {
        patterns.push(dynamics_support(g, budget.dynamics_steps, &mut rng));
    }
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for sup in &patterns {
        for p in solve_supports(g, sup) {
            if p.check(g).is_ok() && seen.insert(p.key()) {
                out.push(p);
            }
        }
    }
    out
}

/// Random common-interest game: 2..=4 states, 2..=3 messages, 2..=4
/// actions, positive prior, payoffs uniform on [0, 1). The stream is fixed
/// by `(seed, id)` alone.
pub fn random_game(id: u64, seed: u64) -> Game {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    let ns = rng.random_range(2..=4);
    let nm = rng.random_range(2..=3);
    let na = rng.random_range(2..=4);
    let prior = random_row(&mut rng, ns);
    let payoff = (0..ns)
        .map(|_| (0..na).map(|_| rng.random_range(0.0..1.0)).collect())
        .collect();
    Game::new(
        (0..ns).map(|i| format!("s{i}")).collect(),
        prior,
        (0..nm).map(|i| format!("m{i}")).collect(),
        (0..na).map(|i| format!("a{i}")).collect(),
        payoff,
        None,
    )
    .expect("well-formed random game")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchGame {
    pub id: u64,
    pub states: usize,
    pub messages: usize,
    pub actions: usize,
    pub best_pure_payoff: f64,
    pub candidates: usize,
    pub verified: usize,
    pub verified_mixed: usize,
    pub failed: usize,
    pub max_mixed_payoff: Option<f64>,
    pub max_indifference_gap: f64,
    pub failures: Vec<CandidateResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchReport {
    pub seed: u64,
    pub games: Vec<BatchGame>,
    pub verified: usize,
    pub verified_mixed: usize,
    pub failed: usize,
}

impl BatchReport {
    pub fn all_pass(&self) -> bool {
        self.failed == 0
    }
}

/// Runs the dominance check on `n` random games in parallel. Results are in
/// game-id order and independent of thread scheduling.
pub fn random_dominance_batch(n: u64, seed: u64, budget: CandidateBudget) -> Result<BatchReport> {
    let games: Vec<BatchGame> = (0..n)
        .into_par_iter()
        .map(|id| -> Result<BatchGame> {
            let g = random_game(id, seed);
            let cands = mixed_candidates(&g, budget, seed ^ id.wrapping_mul(0x9e37_79b9_7f4a_7c15));
            let report = mixed_dominance_check(&g, &cands)?;
            let verified: Vec<&CandidateResult> = report.verified().collect();
            let mixed: Vec<&&CandidateResult> = verified.iter().filter(|c| !c.pure).collect();
            Ok(BatchGame {
                id,
                states: g.n_states(),
                messages: g.n_messages(),
                actions: g.n_actions(),
                best_pure_payoff: report.best_pure_payoff,
                candidates: cands.len(),
                verified: verified.len(),
                verified_mixed: mixed.len(),
                failed: report.failed,
                max_mixed_payoff: mixed.iter().map(|c| c.payoff).reduce(f64::max),
                max_indifference_gap: verified.iter().map(|c| c.indifference_gap).fold(0.0, f64::max),
                failures: report
                    .candidates
                    .iter()
                    .filter(|c| c.verdict == Verdict::Fail)
                    .cloned()
                    .collect(),
            })
        })
        .collect::<Result<_>>()?;
    Ok(BatchReport {
        seed,
        verified: games.iter().map(|g| g.verified).sum(),
        verified_mixed: games.iter().map(|g| g.verified_mixed).sum(),
        failed: games.iter().map(|g| g.failed).sum(),
        games,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MeaningKind {
    Partition,
    Cover,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeaningCell {
    pub message: usize,
    pub states: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpeakerMeaning {
    pub kind: MeaningKind,
    pub cells: Vec<MeaningCell>,
}

/// For each message, the states sending it with positive probability.
/// Messages nobody sends are left out.
pub fn speaker_meaning(p: &MixedProfile) -> SpeakerMeaning {
    let n_messages = p.sender.first().map_or(0, Vec::len);
    let cells: Vec<MeaningCell> = (0..n_messages)
        .map(|m| MeaningCell {
            message: m,
            states: (0..p.sender.len()).filter(|&s| p.sender[s][m] > PROB_TOL).collect(),
        })
        .filter(|c| !c.states.is_empty())
        .collect();
    let kind = if p.sender_is_pure() { MeaningKind::Partition } else { MeaningKind::Cover };
    SpeakerMeaning { kind, cells }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Precision {
    Precise,
    VagueWrtQuestion,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellPosterior {
    pub message: usize,
    pub message_prob: f64,
    /// Posterior of each question cell, in question order.
    pub cells: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrecisionReport {
    pub verdict: Precision,
    pub sender_pure: bool,
    /// Question cells whose states do not all send the same single message.
    pub split_cells: Vec<usize>,
    pub prior_cells: Vec<f64>,
    pub posteriors: Vec<CellPosterior>,
}

pub fn question_precision(g: &Game, p: &MixedProfile) -> Result<PrecisionReport> {
    let q = g.question.as_ref().ok_or(Error::MissingQuestion)?;
    p.check(g)?;
    let sender_pure = p.sender_is_pure();
    let choice = |s: usize| argmax_low(&p.sender[s]);
    let split_cells: Vec<usize> = q
        .iter()
        .enumerate()
        .filter(|(_, cell)| !sender_pure || cell.iter().any(|&s| choice(s) != choice(cell[0])))
        .map(|(i, _)| i)
        .collect();
    let verdict = if sender_pure && split_cells.is_empty() {
        Precision::Precise
    } else {
        Precision::VagueWrtQuestion
    };
    let prior_cells = q.iter().map(|cell| cell.iter().map(|&s| g.prior[s]).sum()).collect();
    let posteriors = (0..g.n_messages())
        .filter_map(|m| {
            let pm = g.message_prob(p, m);
            (pm > 0.0).then(|| CellPosterior {
                message: m,
                message_prob: pm,
                cells: q
                    .iter()
                    .map(|cell| cell.iter().map(|&s| g.prior[s] * p.sender[s][m]).sum::<f64>() / pm)
                    .collect(),
            })
        })
        .collect();
    Ok(PrecisionReport { verdict, sender_pure, split_cells, prior_cells, posteriors })
}

/// Ordinal ranking of actions for one state: action indices grouped into
/// tie classes, best first.
fn ranking(row: &[f64]) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..row.len()).collect();
    idx.sort_by(|a, b| row[*b].total_cmp(&row[*a]).then(a.cmp(b)));
    let mut out: Vec<Vec<usize>> = Vec::new();
    for i in idx {
        match out.last_mut() {
            Some(last) if (row[last[0]] - row[i]).abs() <= PROB_TOL => last.push(i),
            _ => out.push(vec![i]),
        }
    }
    out
}

/// Pure profile sending cell `j` of the question to message `j`, with the
/// receiver best-responding. Requires states in a cell to rank actions
/// identically.
pub fn precisify(g: &Game) -> Result<MixedProfile> {
    let q = g.question.as_ref().ok_or(Error::MissingQuestion)?;
    if g.n_messages() < q.len() {
        return Err(Error::NotEnoughMessages { cells: q.len(), messages: g.n_messages() });
    }
    for (j, cell) in q.iter().enumerate() {
        let r0 = ranking(&g.payoff[cell[0]]);
        if cell.iter().any(|&s| ranking(&g.payoff[s]) != r0) {
            return Err(Error::PreferenceHeterogeneity { cell: j, states: cell.clone() });
        }
    }
    let mut sender_choice = vec![0usize; g.n_states()];
    for (j, cell) in q.iter().enumerate() {
        for &s in cell {
            sender_choice[s] = j;
        }
    }
    let sender = MixedProfile::from_pure(&sender_choice, &[], g.n_messages(), g.n_actions()).sender;
    let receiver = best_response_receiver(g, &sender);
    Ok(MixedProfile::from_pure(&sender_choice, &receiver, g.n_messages(), g.n_actions()))
}

/// Random game with a random question partition and payoffs constant on
/// each cell (`cells` cells, `cells` messages).
pub fn random_cell_constant_game(id: u64, seed: u64, cells: usize) -> Game {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    let ns = rng.random_range(cells..=cells + 3);
    let na = rng.random_range(2..=4);
    let mut assignment: Vec<usize> = (0..ns).map(|s| if s < cells { s } else { rng.random_range(0..cells) }).collect();
    assignment.shuffle(&mut rng);
    let cell_payoffs: Vec<Vec<f64>> = (0..cells)
        .map(|_| (0..na).map(|_| rng.random_range(0.0..1.0)).collect())
        .collect();
    let question = (0..cells)
        .map(|j| (0..ns).filter(|&s| assignment[s] == j).collect())
        .collect();
    Game::new(
        (0..ns).map(|i| format!("s{i}")).collect(),
        random_row(&mut rng, ns),
        (0..cells).map(|i| format!("m{i}")).collect(),
        (0..na).map(|i| format!("a{i}")).collect(),
        assignment.iter().map(|&j| cell_payoffs[j].clone()).collect(),
        Some(question),
    )
    .expect("well-formed random game")
}

/// Labels in game files may be numbers or strings.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Label {
    Num(f64),
    Str(String),
}

impl Label {
    fn into_string(self) -> String {
        match self {
            Label::Num(x) => format!("{x}"),
            Label::Str(s) => s,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GameFileRaw {
    states: Vec<Label>,
    prior: Vec<f64>,
    messages: Vec<Label>,
    actions: Vec<Label>,
    payoff: Vec<Vec<f64>>,
    #[serde(default)]
    question: Option<Vec<Vec<usize>>>,
    #[serde(default)]
    profiles: Vec<NamedProfile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedProfile {
    pub name: String,
    pub sender: Vec<Vec<f64>>,
    pub receiver: Vec<Vec<f64>>,
}

impl NamedProfile {
    pub fn profile(&self) -> MixedProfile {
        MixedProfile { sender: self.sender.clone(), receiver: self.receiver.clone() }
    }
}

/// A game plus any named profiles stored alongside it, in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct GameFile {
    pub game: Game,
    pub profiles: Vec<NamedProfile>,
}

impl GameFile {
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: GameFileRaw = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        let labels = |v: Vec<Label>| v.into_iter().map(Label::into_string).collect();
        let game = Game::new(
            labels(raw.states),
            raw.prior,
            labels(raw.messages),
            labels(raw.actions),
            raw.payoff,
            raw.question,
        )?;
        for p in &raw.profiles {
            p.profile()
                .check(&game)
                .map_err(|e| Error::InvalidGame(format!("profile `{}`: {e}", p.name)))?;
        }
        Ok(GameFile { game, profiles: raw.profiles })
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn profile(&self, name: &str) -> Option<MixedProfile> {
        self.profiles.iter().find(|p| p.name == name).map(NamedProfile::profile)
    }
}

fn labels(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

/// Heights 180/185/190, messages short/tall, the receiver guesses a height
/// and both score 1 on a correct guess.
pub fn heights3_game() -> Game {
    let third = 1.0 / 3.0;
    Game::new(
        labels(&["180", "185", "190"]),
        vec![third, third, third],
        labels(&["short", "tall"]),
        labels(&["180", "185", "190"]),
        identity(3),
        None,
    )
    .expect("static game")
}

/// Pure strategy {180, 185} -> short, {190} -> tall with best response.
pub fn heights3_pure() -> MixedProfile {
    MixedProfile::from_pure(&[0, 0, 1], &[0, 2], 2, 3)
}

/// 185 splits its message evenly; receiver best-responds.
pub fn heights3_mixed() -> MixedProfile {
    MixedProfile {
        sender: vec![vec![1.0, 0.0], vec![0.5, 0.5], vec![0.0, 1.0]],
        receiver: vec![vec![1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0]],
    }
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
}

/// Two states, two messages, two actions, payoff 1 on a match.
pub fn identity_game(prior: [f64; 2]) -> Game {
    Game::new(
        labels(&["s0", "s1"]),
        prior.to_vec(),
        labels(&["m0", "m1"]),
        labels(&["a0", "a1"]),
        identity(2),
        None,
    )
    .expect("static game")
}

/// Three uniform worlds h1, h2, h3 with question {{h3}, {h1, h2}}. Actions
/// answer the question; payoffs are constant on each cell.
pub fn question_game() -> Game {
    let third = 1.0 / 3.0;
    Game::new(
        labels(&["h1", "h2", "h3"]),
        vec![third, third, third],
        labels(&["m", "m'"]),
        labels(&["h3", "h1-or-h2"]),
        vec![vec![0.0, 1.0], vec![0.0, 1.0], vec![1.0, 0.0]],
        Some(vec![vec![2], vec![0, 1]]),
    )
    .expect("static game")
}

/// m for {h1, h3}, m' for {h2}.
pub fn question_vague_profile() -> MixedProfile {
    let sender = MixedProfile::from_pure(&[0, 1, 0], &[], 2, 2).sender;
    let receiver = best_response_receiver(&question_game(), &sender);
    MixedProfile::from_pure(&[0, 1, 0], &receiver, 2, 2)
}

/// m for {h1, h2}, m' for {h3}.
pub fn question_precise_profile() -> MixedProfile {
    let sender = MixedProfile::from_pure(&[0, 0, 1], &[], 2, 2).sender;
    let receiver = best_response_receiver(&question_game(), &sender);
    MixedProfile::from_pure(&[0, 0, 1], &receiver, 2, 2)
}
