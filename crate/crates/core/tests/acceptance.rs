//! Acceptance suite. Prints one line per criterion and exits nonzero if any
//! criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vagueness::dist::{grid, kl_divergence, Dist};
use vagueness::game::{
    is_nash, precisify, question_game, question_precision, question_vague_profile, random_dominance_batch,
    CandidateBudget, Precision, DOMINANCE_TOL, NASH_TOL,
};
use vagueness::ibr::{check_fixed_point, iterate, ResponseRule};
use vagueness::lexicon::{Message, ParamPrior};
use vagueness::listener::{around_closed_form, literal_update, tall_closed_form, JointPrior};
use vagueness::scenario::{scenario_tall_gaussian, scenario_tall_uniform, attendance_scenario, ATTENDANCE_OBSERVATION};
use vagueness::speaker::utility_table;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn attendance_prior() -> JointPrior {
    let g = grid(0.0, 80.0, 10.0).unwrap();
    let around = ParamPrior::uniform(grid(0.0, 40.0, 10.0).unwrap()).unwrap();
    JointPrior::independent(Dist::uniform(g).unwrap(), Some(around), None)
}

fn attendance_observation() -> Dist {
    Dist::new(grid(0.0, 80.0, 10.0).unwrap(), ATTENDANCE_OBSERVATION.to_vec()).unwrap()
}

fn c1_attendance() -> Outcome {
    let prior = attendance_prior();
    let between = literal_update(&prior, &Message::between(10.0, 70.0).unwrap()).map_err(|e| e.to_string())?;
    let around = literal_update(&prior, &Message::around(40.0)).map_err(|e| e.to_string())?;
    let mut err: f64 = 0.0;
    for (k, p) in between.probs().iter().enumerate() {
        let want = if (1..=7).contains(&k) { 1.0 / 7.0 } else { 0.0 };
        err = err.max((p - want).abs());
    }
    ensure(err <= 1e-12, || format!("P_between error {err:e}"))?;
    // (n - |n - k| + 1) / 25 with n = 4, as exact decimals
    let want = [0.04, 0.08, 0.12, 0.16, 0.20, 0.16, 0.12, 0.08, 0.04];
    let exact = around.probs().iter().zip(want).all(|(a, b)| *a == b);
    ensure(exact, || format!("P_around {:?}", around.probs()))?;
    Ok(format!("P_between err {err:.1e}, P_around exact"))
}

fn c2_kl() -> Outcome {
    let prior = attendance_prior();
    let p_o = attendance_observation();
    let kl = |m: Message| -> Result<f64, String> {
        let post = literal_update(&prior, &m).map_err(|e| e.to_string())?;
        kl_divergence(&p_o, &post)
            .map_err(|e| e.to_string())?
            .finite()
            .ok_or_else(|| "infinite KL".to_string())
    };
    let kb = kl(Message::between(10.0, 70.0).unwrap())?;
    let ka = kl(Message::around(40.0))?;
    ensure((kb - 0.89).abs() <= 0.005 && format!("{kb:.2}") == "0.89", || format!("between KL {kb}"))?;
    ensure((ka - 0.65).abs() <= 0.005 && format!("{ka:.2}") == "0.65", || format!("around KL {ka}"))?;
    Ok(format!("KL(between) = {kb:.6}, KL(around) = {ka:.6}"))
}

fn c3_strict_optimality() -> Outcome {
    let sc = attendance_scenario();
    let obs = &sc.observations[0].observation;
    let l = sc.literal_listener().map_err(|e| e.to_string())?;
    let u = utility_table(obs, &l).map_err(|e| e.to_string())?;
    let precise = sc.menu.iter().filter(|m| !m.is_vague()).count();
    let around = sc.menu.iter().filter(|m| m.is_vague()).count();
    ensure(precise == 45 && around == 9, || format!("menu {precise} precise, {around} around"))?;
    let w = sc
        .menu
        .iter()
        .position(|m| *m == Message::around(40.0))
        .ok_or("around 40 missing from menu")?;
    let mut margin = f64::INFINITY;
    for (i, ui) in u.iter().enumerate() {
        if i != w {
            ensure(u[w] > *ui, || format!("`{}` ties or beats around 40", sc.menu[i]))?;
            margin = margin.min(u[w] - ui);
        }
    }
    Ok(format!("around 40 wins over 53 alternatives, margin {margin:.4}"))
}

/// Brute-force posterior over the (x, t) joint with counts, no library code.
fn brute_around(n: usize) -> Vec<f64> {
    let mut w = vec![0.0; 2 * n + 1];
    for (k, wk) in w.iter_mut().enumerate() {
        for t in 0..=n {
            if k.abs_diff(n) <= t {
                *wk += 1.0;
            }
        }
    }
    let z: f64 = w.iter().sum();
    w.iter().map(|x| x / z).collect()
}

fn brute_tall(n: usize) -> Vec<f64> {
    let mut w = vec![0.0; n + 1];
    for (k, wk) in w.iter_mut().enumerate() {
        for t in 0..=n {
            if k >= t {
                *wk += 1.0;
            }
        }
    }
    let z: f64 = w.iter().sum();
    w.iter().map(|x| x / z).collect()
}

fn max_err(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn c4_closed_forms() -> Outcome {
    let mut worst: f64 = 0.0;
    for n in 0..=12 {
        let xs: Vec<f64> = (0..=2 * n).map(|k| k as f64).collect();
        let ts: Vec<f64> = (0..=n).map(|t| t as f64).collect();
        let prior = JointPrior::independent(
            Dist::uniform(xs).unwrap(),
            Some(ParamPrior::uniform(ts).unwrap()),
            None,
        );
        let via_update = literal_update(&prior, &Message::around(n as f64)).map_err(|e| e.to_string())?;
        let closed = around_closed_form(n);
        let oracle = brute_around(n);
        worst = worst.max(max_err(closed.probs(), &oracle)).max(max_err(via_update.probs(), &oracle));

        let xs: Vec<f64> = (0..=n).map(|k| k as f64).collect();
        let prior = JointPrior::independent(
            Dist::uniform(xs.clone()).unwrap(),
            None,
            Some(ParamPrior::uniform(xs).unwrap()),
        );
        let via_update = literal_update(&prior, &Message::tall()).map_err(|e| e.to_string())?;
        let closed = tall_closed_form(n);
        let oracle = brute_tall(n);
        worst = worst.max(max_err(closed.probs(), &oracle)).max(max_err(via_update.probs(), &oracle));
    }
    ensure(worst <= 1e-12, || format!("max error {worst:e}"))?;
    Ok(format!("n = 0..=12, max error {worst:.1e}"))
}

fn positive(rng: &mut ChaCha8Rng, n: usize, support: Vec<f64>) -> Dist {
    let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.001..1.0)).collect();
    let z: f64 = w.iter().sum();
    Dist::new(support, w.iter().map(|x| x / z).collect()).unwrap()
}

fn c5_ratio_inequality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut pairs = 0usize;
    for case in 0..1000 {
        let n = rng.random_range(2..=12);
        let xs: Vec<f64> = (0..n).map(|k| k as f64).collect();
        let x_prior = positive(&mut rng, n, xs.clone());
        let t_prior = positive(&mut rng, n, xs.clone());
        let prior = JointPrior::independent(x_prior.clone(), None, Some(ParamPrior::new(t_prior).unwrap()));
        let post = literal_update(&prior, &Message::tall()).map_err(|e| e.to_string())?;
        let (p, q) = (post.probs(), x_prior.probs());
        for k1 in 0..n {
            for k2 in k1 + 1..n {
                pairs += 1;
                ensure(p[k2] * q[k1] > p[k1] * q[k2], || format!("tall case {case}: k1={k1} k2={k2}"))?;
            }
        }
    }
    let mut around_pairs = 0usize;
    let mut undefined = 0usize;
    for case in 0..1000 {
        let n = rng.random_range(1..=6);
        let len = 2 * n + 1;
        let xs: Vec<f64> = (0..len).map(|k| k as f64).collect();
        let ts: Vec<f64> = (0..=n).map(|t| t as f64).collect();
        let x_prior = positive(&mut rng, len, xs);
        let t_prior = positive(&mut rng, n + 1, ts);
        let center = rng.random_range(0..len);
        let prior = JointPrior::independent(x_prior.clone(), Some(ParamPrior::new(t_prior).unwrap()), None);
        let post = literal_update(&prior, &Message::around(center as f64)).map_err(|e| e.to_string())?;
        let (p, q) = (post.probs(), x_prior.probs());
        for k1 in 0..len {
            for k2 in 0..len {
                let same_side = (k1 >= center) == (k2 >= center) || (k1 <= center) == (k2 <= center);
                if !same_side || k2.abs_diff(center) >= k1.abs_diff(center) {
                    continue;
                }
                if p[k1] == 0.0 && p[k2] == 0.0 {
                    // both beyond the widest halo: 0/0, no ratio to compare
                    undefined += 1;
                    continue;
                }
                around_pairs += 1;
                // cross-multiplied so a zero posterior at k1 is handled
                ensure(p[k2] * q[k1] > p[k1] * q[k2] || (p[k1] == 0.0 && p[k2] > 0.0), || {
                    format!("around case {case}: center={center} k1={k1} k2={k2}")
                })?;
            }
        }
    }
    Ok(format!(
        "{pairs} threshold pairs, {around_pairs} around pairs over 2x1000 random priors ({undefined} around pairs 0/0, skipped)"
    ))
}

fn c6_pure_dominance() -> Outcome {
    let report = random_dominance_batch(500, 7, CandidateBudget::default()).map_err(|e| e.to_string())?;
    ensure(report.games.len() == 500, || "batch size".into())?;
    let over = report
        .games
        .iter()
        .filter(|g| g.max_mixed_payoff.is_some_and(|m| m > g.best_pure_payoff + DOMINANCE_TOL))
        .count();
    let gap = report.games.iter().map(|g| g.max_indifference_gap).fold(0.0, f64::max);
    ensure(report.failed == 0 && over == 0, || {
        format!("{} failing candidates in {over} games", report.failed)
    })?;
    ensure(gap <= DOMINANCE_TOL, || format!("indifference gap {gap:e}"))?;
    ensure(report.verified_mixed > 0, || "no mixed equilibrium was verified".into())?;
    Ok(format!(
        "500 games, {} verified equilibria ({} mixed), max indifference gap {gap:.1e}",
        report.verified, report.verified_mixed
    ))
}

/// Minimal exact rational for the question-game oracle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Q(i64, i64);

impl Q {
    fn new(n: i64, d: i64) -> Q {
        fn gcd(a: i64, b: i64) -> i64 {
            if b == 0 {
                a.abs()
            } else {
                gcd(b, a % b)
            }
        }
        let g = gcd(n, d).max(1);
        Q(n / g, d / g)
    }
    fn add(self, o: Q) -> Q {
        Q::new(self.0 * o.1 + o.0 * self.1, self.1 * o.1)
    }
    fn div(self, o: Q) -> Q {
        Q::new(self.0 * o.1, self.1 * o.0)
    }
    fn to_f64(self) -> f64 {
        self.0 as f64 / self.1 as f64
    }
}

fn c7_question() -> Outcome {
    let g = question_game();
    let p = question_vague_profile();
    let r = question_precision(&g, &p).map_err(|e| e.to_string())?;
    ensure(r.verdict == Precision::VagueWrtQuestion, || format!("{:?}", r.verdict))?;

    // exact: states h1, h3 send m, each with prior 1/3; cell {h1, h2} is index 1
    let third = Q::new(1, 3);
    let prior_cell = third.add(third);
    let post_cell = third.div(third.add(third));
    ensure(prior_cell == Q(2, 3) && post_cell == Q(1, 2), || "rational oracle".into())?;
    let after_m = r.posteriors.iter().find(|c| c.message == 0).ok_or("m unused")?;
    ensure(after_m.cells[1] == post_cell.to_f64(), || format!("posterior {}", after_m.cells[1]))?;
    ensure(r.prior_cells[1] == prior_cell.to_f64(), || format!("prior {}", r.prior_cells[1]))?;

    let fixed = precisify(&g).map_err(|e| e.to_string())?;
    ensure(fixed.is_pure(), || "precisified profile not pure".into())?;
    let nash = is_nash(&g, &fixed, NASH_TOL).map_err(|e| e.to_string())?;
    ensure(nash.is_nash, || format!("precisified profile not an equilibrium: {:?}", nash.deviation))?;
    let verdict = question_precision(&g, &fixed).map_err(|e| e.to_string())?.verdict;
    ensure(verdict == Precision::Precise, || format!("{verdict:?}"))?;
    Ok("posterior 1/2 from prior 2/3, VagueWrtQuestion; precisify gives a Precise pure equilibrium".into())
}

fn c8_ibr() -> Outcome {
    let sc = attendance_scenario();
    let trace = iterate(&sc, ResponseRule::HardMax, 20, 1e-12, true).map_err(|e| e.to_string())?;
    ensure(trace.converged, || format!("not converged, cycle {:?}", trace.cycle_period))?;
    let (s, l) = trace.fixed_point().ok_or("no fixed point")?;
    let check = check_fixed_point(s, l, &sc, ResponseRule::HardMax, 1e-9, true).map_err(|e| e.to_string())?;
    ensure(check.holds() && check.speaker_residual < 1e-9 && check.listener_residual < 1e-9, || {
        format!("{check:?}")
    })?;
    ensure(s.is_pure(), || "fixed-point speaker is mixed".into())?;
    let sent = &sc.menu[s.pure_choices().unwrap()[0]];
    ensure(sent.is_vague() && *sent == Message::around(40.0), || format!("sends `{sent}`"))?;
    Ok(format!(
        "converged at level {}, residuals ({:.1e}, {:.1e}), pure speaker sends `{sent}`",
        trace.fixed_point_level.unwrap(),
        check.speaker_residual,
        check.listener_residual
    ))
}

fn normalized(p: &[f64]) -> bool {
    (p.iter().sum::<f64>() - 1.0).abs() <= 1e-9 && p.iter().all(|x| *x >= 0.0)
}

fn c9_figures() -> Outcome {
    let u = scenario_tall_uniform().map_err(|e| e.to_string())?;
    let gauss = scenario_tall_gaussian().map_err(|e| e.to_string())?;
    let curves = u
        .plot
        .posteriors
        .iter()
        .chain(&gauss.plot.posteriors)
        .map(|(_, p)| p)
        .chain([&u.posterior_tall, &gauss.posterior_tall, &gauss.prior]);
    for c in curves {
        ensure(normalized(c), || format!("curve not normalized: {c:?}"))?;
    }
    let n = u.posterior_tall.len() - 1;
    let slope = 2.0 / ((n + 1) * (n + 2)) as f64;
    let linear = u
        .posterior_tall
        .iter()
        .enumerate()
        .all(|(k, p)| (p - slope * (k + 1) as f64).abs() <= 1e-12);
    ensure(linear && u.linearity_error <= 1e-12, || format!("tall posterior {:?}", u.posterior_tall))?;
    ensure(gauss.ratio_violations.is_empty(), || format!("ratio violations {:?}", gauss.ratio_violations))?;
    ensure(gauss.ratio_pairs_checked == 55, || "pair count".into())?;
    Ok(format!(
        "curves normalized, tall posterior = (k+1)/{}, ratio inequality on all 55 Gaussian pairs",
        (n + 1) * (n + 2) / 2
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome, Duration); 9] = [
        ("1 attendance-posteriors", c1_attendance, Duration::from_secs(1)),
        ("2 kl-figures", c2_kl, Duration::from_secs(1)),
        ("3 strict-optimality-witness", c3_strict_optimality, Duration::from_secs(1)),
        ("4 closed-form-oracle", c4_closed_forms, Duration::from_secs(5)),
        ("5 ratio-inequality", c5_ratio_inequality, Duration::from_secs(30)),
        ("6 pure-dominance-random-games", c6_pure_dominance, Duration::from_secs(300)),
        ("7 question-precision", c7_question, Duration::from_secs(1)),
        ("8 ibr-fixed-point", c8_ibr, Duration::from_secs(20)),
        ("9 figure-properties", c9_figures, Duration::from_secs(5)),
    ];
    let mut failed = 0;
    for (name, f, limit) in criteria {
        let start = Instant::now();
        let outcome = f();
        let took = start.elapsed();
        let (ok, detail) = match outcome {
            Ok(d) if took <= limit => (true, d),
            Ok(d) => (false, format!("{d}; too slow, limit {limit:?}")),
            Err(e) => (false, e),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "{} criterion {name} ({:.3}s): {detail}",
            if ok { "PASS" } else { "FAIL" },
            took.as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", 9 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
