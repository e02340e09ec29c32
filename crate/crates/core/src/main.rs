use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use vagueness::dist::ExtReal;
use vagueness::error::{Error, Result};
use vagueness::game::{
    enumerate_pure_equilibria, expected_payoff, is_nash, mixed_candidates, mixed_dominance_check, precisify,
    question_precision, random_dominance_batch, speaker_meaning, CandidateBudget, Game, GameFile, MixedProfile,
    DEFAULT_ENUMERATION_BUDGET, NASH_TOL,
};
use vagueness::ibr::{check_fixed_point, iterate, ResponseRule};
use vagueness::lexicon::Message;
use vagueness::listener::literal_update;
use vagueness::report::{two_decimals, plot_csv, posterior_csv, to_json, write_columns};
use vagueness::scenario::{
    default_searches, optimality_search, scenario_attendance, scenario_tall_gaussian, scenario_tall_uniform,
    Scenario,
};
use vagueness::schema::load_scenario;
use vagueness::speaker::{argmax_with_tie_break, softmax_speaker, utility_table};

#[derive(Parser)]
#[command(name = "vagueness", version, about = "Vague communication: listeners, speakers, IBR and cheap-talk games")]
struct Cli {
    /// Worker threads for parallel batches (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Hardmax,
    Softmax,
}

#[derive(Clone, Copy, ValueEnum)]
enum GameOp {
    Enumerate,
    Check,
    Dominance,
    Meaning,
    Precision,
    Precisify,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScenarioName {
    AroundTable1,
    TallUniform,
    TallGaussian,
    OptimalitySearch,
}

#[derive(Subcommand)]
enum Command {
    /// Literal-listener posterior for one or more messages.
    Posterior {
        scenario: PathBuf,
        /// Messages such as "around 40" or "between 10 70".
        #[arg(required = true)]
        messages: Vec<String>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Best message and utility table for one observation.
    Speak {
        scenario: PathBuf,
        observation: String,
        /// SoftMax rationality; defaults to the scenario's value.
        #[arg(long)]
        lambda: Option<f64>,
        /// Also report the SoftMax message distribution.
        #[arg(long)]
        soft: bool,
        /// Human-readable table with KL rounded to 2 decimals.
        #[arg(long = "paper-format")]
        rounded: bool,
    },
    /// Iterated best response from the literal listener.
    Ibr {
        scenario: PathBuf,
        #[arg(long, default_value_t = 20)]
        levels: usize,
        #[arg(long, value_enum, default_value = "hardmax")]
        mode: Mode,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        /// Error instead of falling back to the literal row for unsent messages.
        #[arg(long)]
        no_fallback: bool,
    },
    /// Cheap-talk game analysis.
    Game {
        #[arg(value_enum)]
        op: GameOp,
        /// Game file (JSON); not needed with --random.
        game: Option<PathBuf>,
        /// Profile name from the game file, or a path to a profile JSON.
        #[arg(long)]
        profile: Option<String>,
        /// Shorthand for --profile mixed.
        #[arg(long)]
        mixed: bool,
        /// Run dominance on a batch of seeded random games.
        #[arg(long)]
        random: bool,
        #[arg(long, default_value_t = 500)]
        n: u64,
        #[arg(long, env = "VS_SEED", default_value_t = 7)]
        seed: u64,
        /// Support patterns tried per game by the candidate generator.
        #[arg(long, default_value_t = 2000)]
        supports: usize,
    },
    /// Canonical scenario reports.
    Scenario {
        #[arg(value_enum)]
        name: ScenarioName,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[arg(long, env = "VS_SEED", default_value_t = 7)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli.command) {
        Ok(out) => {
            // a closed pipe downstream is not an error of ours
            let _ = std::io::stdout().lock().write_all(out.as_bytes());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cmd: Command) -> Result<String> {
    match cmd {
        Command::Posterior { scenario, messages, format } => cmd_posterior(&scenario, &messages, format),
        Command::Speak { scenario, observation, lambda, soft, rounded } => {
            cmd_speak(&scenario, &observation, lambda, soft, rounded)
        }
        Command::Ibr { scenario, levels, mode, lambda, tol, no_fallback } => {
            cmd_ibr(&scenario, levels, mode, lambda, tol, !no_fallback)
        }
        Command::Game { op, game, profile, mixed, random, n, seed, supports } => {
            let profile = if mixed { Some("mixed".to_string()) } else { profile };
            cmd_game(op, game.as_deref(), profile.as_deref(), random, n, seed, supports)
        }
        Command::Scenario { name, format, seed } => cmd_scenario(name, format, seed),
    }
}

fn cmd_posterior(path: &Path, messages: &[String], format: Format) -> Result<String> {
    let sc = load_scenario(path)?;
    let mut rows = Vec::new();
    for text in messages {
        let m: Message = text.parse()?;
        let post = literal_update(&sc.prior, &m)?;
        rows.push((m.label.clone(), post.probs().to_vec()));
    }
    match format {
        Format::Csv => posterior_csv(sc.grid(), sc.prior.x_prior.probs(), &rows),
        Format::Json => to_json(&json!({
            "support": sc.grid(),
            "prior": sc.prior.x_prior.probs(),
            "posteriors": rows
                .iter()
                .map(|(label, p)| json!({"message": label, "posterior": p}))
                .collect::<Vec<_>>(),
        })),
    }
}

#[derive(Serialize)]
struct UtilityRow<'a> {
    message: &'a Message,
    kl: ExtReal,
    #[serde(serialize_with = "vagueness::dist::serialize_extended")]
    utility: f64,
}

fn cmd_speak(path: &Path, obs_id: &str, lambda: Option<f64>, soft: bool, short: bool) -> Result<String> {
    let sc = load_scenario(path)?;
    let obs = sc
        .observation(obs_id)
        .ok_or_else(|| Error::InvalidArgument(format!("no observation `{obs_id}` in the scenario")))?;
    let listener = sc.literal_listener()?;
    let table = utility_table(obs, &listener)?;
    let best = argmax_with_tie_break(&sc.menu, &table).ok_or_else(|| Error::NoTruthfulMessage(obs.id.clone()))?;
    let lambda = lambda.unwrap_or(sc.lambda);
    let soft_dist = if soft {
        Some(softmax_speaker(obs, &sc.menu, &listener, lambda)?)
    } else {
        None
    };

    if short {
        let mut out = format!("best: {} (KL {})\n", sc.menu[best], two_decimals(-table[best]));
        let mut order: Vec<usize> = (0..table.len()).filter(|i| table[*i].is_finite()).collect();
        order.sort_by(|a, b| table[*b].total_cmp(&table[*a]).then(a.cmp(b)));
        for i in order {
            out.push_str(&format!("{}\tKL {}", sc.menu[i], two_decimals(-table[i])));
            if let Some(d) = &soft_dist {
                out.push_str(&format!("\tP {:.3}", d.probs()[i]));
            }
            out.push('\n');
        }
        return Ok(out);
    }

    let utilities: Vec<UtilityRow> = sc
        .menu
        .iter()
        .zip(&table)
        .map(|(m, u)| UtilityRow {
            message: m,
            kl: if u.is_finite() { ExtReal::Finite(-u) } else { ExtReal::Infinity },
            utility: *u,
        })
        .collect();
    let mut out = json!({
        "observation": obs.id,
        "best": {"index": best, "message": sc.menu[best], "utility": table[best]},
        "utilities": serde_json::to_value(&utilities).map_err(|e| Error::Schema(e.to_string()))?,
    });
    if let Some(d) = soft_dist {
        out["softmax"] = json!({
            "lambda": lambda,
            "distribution": sc.menu.iter().zip(d.probs())
                .map(|(m, p)| json!({"message": m.label, "prob": p}))
                .collect::<Vec<_>>(),
        });
    }
    to_json(&out)
}

fn cmd_ibr(path: &Path, levels: usize, mode: Mode, lambda: Option<f64>, tol: f64, fallback: bool) -> Result<String> {
    let sc: Scenario = load_scenario(path)?;
    let rule = match mode {
        Mode::Hardmax => ResponseRule::HardMax,
        Mode::Softmax => ResponseRule::SoftMax { lambda: lambda.unwrap_or(sc.lambda) },
    };
    let trace = iterate(&sc, rule, levels, tol, fallback)?;
    let check = match trace.fixed_point() {
        Some((s, l)) => Some(check_fixed_point(s, l, &sc, rule, 1e-9, fallback)?),
        None => None,
    };
    let sends = trace.fixed_point().and_then(|(s, _)| s.pure_choices()).map(|choices| {
        s_labels(&sc, &choices)
            .into_iter()
            .zip(&sc.observations)
            .map(|(m, wo)| json!({"observation": wo.observation.id, "message": m}))
            .collect::<Vec<_>>()
    });
    to_json(&json!({
        "scenario": sc.name,
        "converged": trace.converged,
        "fixed_point_level": trace.fixed_point_level,
        "cycle_period": trace.cycle_period,
        "fixed_point_check": check.as_ref().map(|c| json!({
            "holds": c.holds(),
            "report": c,
        })),
        "pure_fixed_point_sends": sends,
        "menu": sc.menu,
        "trace": trace,
    }))
}

fn s_labels(sc: &Scenario, choices: &[usize]) -> Vec<String> {
    choices.iter().map(|&m| sc.menu[m].label.clone()).collect()
}

fn load_profile(file: &GameFile, spec: Option<&str>) -> Result<(String, MixedProfile)> {
    match spec {
        None => file
            .profiles
            .first()
            .map(|p| (p.name.clone(), p.profile()))
            .ok_or_else(|| Error::InvalidArgument("game file has no profiles; pass --profile".into())),
        Some(name) => {
            if let Some(p) = file.profile(name) {
                return Ok((name.to_string(), p));
            }
            let path = Path::new(name);
            if !path.exists() {
                return Err(Error::InvalidArgument(format!("no profile `{name}` in the game file")));
            }
            let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("cannot read {name}: {e}")))?;
            let p: MixedProfile =
                serde_json::from_str(&text).map_err(|e| Error::Schema(format!("profile schema error: {e}")))?;
            p.check(&file.game)?;
            Ok((name.to_string(), p))
        }
    }
}

fn state_sets(g: &Game, cells: &[Vec<usize>]) -> Vec<Vec<String>> {
    cells
        .iter()
        .map(|c| c.iter().map(|&s| g.states[s].clone()).collect())
        .collect()
}

fn profile_json(g: &Game, p: &MixedProfile) -> serde_json::Value {
    json!({
        "sender": g.states.iter().zip(&p.sender).map(|(s, row)| json!({
            "state": s,
            "messages": g.messages.iter().zip(row).filter(|(_, q)| **q > 0.0)
                .map(|(m, q)| json!({"message": m, "prob": q})).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
        "receiver": g.messages.iter().zip(&p.receiver).map(|(m, row)| json!({
            "message": m,
            "actions": g.actions.iter().zip(row).filter(|(_, q)| **q > 0.0)
                .map(|(a, q)| json!({"action": a, "prob": q})).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
    })
}

fn cmd_game(
    op: GameOp,
    path: Option<&Path>,
    profile: Option<&str>,
    random: bool,
    n: u64,
    seed: u64,
    supports: usize,
) -> Result<String> {
    let budget = CandidateBudget { support_profiles: supports, ..Default::default() };
    if random {
        if !matches!(op, GameOp::Dominance) {
            return Err(Error::InvalidArgument("--random is only supported with `dominance`".into()));
        }
        let report = random_dominance_batch(n, seed, budget)?;
        return to_json(&json!({
            "games": report.games.len(),
            "seed": report.seed,
            "verified": report.verified,
            "verified_mixed": report.verified_mixed,
            "failed": report.failed,
            "verdict": if report.all_pass() { "PASS" } else { "FAIL" },
            "per_game": report.games,
        }));
    }
    let path = path.ok_or_else(|| Error::InvalidArgument("a game file is required".into()))?;
    let file = GameFile::load(path)?;
    let g = &file.game;
    match op {
        GameOp::Enumerate => {
            let eqs = enumerate_pure_equilibria(g, DEFAULT_ENUMERATION_BUDGET)?;
            to_json(&json!({
                "count": eqs.len(),
                "best_payoff": eqs.first().map(|e| e.payoff),
                "equilibria": eqs.iter().map(|e| json!({
                    "payoff": e.payoff,
                    "sender": e.sender.iter().map(|&m| &g.messages[m]).collect::<Vec<_>>(),
                    "receiver": e.receiver.iter().map(|&a| &g.actions[a]).collect::<Vec<_>>(),
                })).collect::<Vec<_>>(),
            }))
        }
        GameOp::Check => {
            let (name, p) = load_profile(&file, profile)?;
            let check = is_nash(g, &p, NASH_TOL)?;
            to_json(&json!({
                "profile": name,
                "payoff": expected_payoff(g, &p)?,
                "is_nash": check.is_nash,
                "deviation": check.deviation,
            }))
        }
        GameOp::Dominance => {
            let (source, candidates) = match profile {
                Some(_) => {
                    let (name, p) = load_profile(&file, profile)?;
                    (name, vec![p])
                }
                None if !file.profiles.is_empty() => (
                    "file profiles".to_string(),
                    file.profiles.iter().map(|p| p.profile()).collect(),
                ),
                None => ("generated".to_string(), mixed_candidates(g, budget, seed)),
            };
            if candidates.is_empty() {
                return Err(Error::InvalidArgument("no candidate profiles".into()));
            }
            let report = mixed_dominance_check(g, &candidates)?;
            to_json(&json!({
                "candidates_from": source,
                "verdict": if report.all_pass() { "PASS" } else { "FAIL" },
                "report": report,
            }))
        }
        GameOp::Meaning => {
            let (name, p) = load_profile(&file, profile)?;
            p.check(g)?;
            let m = speaker_meaning(&p);
            let cells: Vec<Vec<usize>> = m.cells.iter().map(|c| c.states.clone()).collect();
            to_json(&json!({
                "profile": name,
                "kind": m.kind,
                "meaning": state_sets(g, &cells),
                "by_message": m.cells.iter().map(|c| json!({
                    "message": g.messages[c.message],
                    "states": c.states.iter().map(|&s| &g.states[s]).collect::<Vec<_>>(),
                })).collect::<Vec<_>>(),
            }))
        }
        GameOp::Precision => {
            let (name, p) = load_profile(&file, profile)?;
            let r = question_precision(g, &p)?;
            let q = g.question.as_ref().ok_or(Error::MissingQuestion)?;
            to_json(&json!({
                "profile": name,
                "verdict": r.verdict,
                "question": state_sets(g, q),
                "prior_cells": r.prior_cells,
                "posteriors": r.posteriors.iter().map(|c| json!({
                    "message": g.messages[c.message],
                    "message_prob": c.message_prob,
                    "cells": c.cells,
                })).collect::<Vec<_>>(),
                "split_cells": r.split_cells,
            }))
        }
        GameOp::Precisify => {
            let p = precisify(g)?;
            let nash = is_nash(g, &p, NASH_TOL)?;
            let precision = question_precision(g, &p)?;
            to_json(&json!({
                "profile": profile_json(g, &p),
                "raw": p,
                "payoff": expected_payoff(g, &p)?,
                "is_nash": nash.is_nash,
                "verdict": precision.verdict,
            }))
        }
    }
}

fn cmd_scenario(name: ScenarioName, format: Format, seed: u64) -> Result<String> {
    match (name, format) {
        (ScenarioName::AroundTable1, Format::Json) => {
            let r = scenario_attendance()?;
            let mut v = vagueness::report::to_value(&r)?;
            v["kl_two_decimals"] = json!([two_decimals(r.kl_between), two_decimals(r.kl_around)]);
            to_json(&v)
        }
        (ScenarioName::AroundTable1, Format::Csv) => plot_csv(&scenario_attendance()?.plot),
        (ScenarioName::TallUniform, Format::Json) => {
            let r = scenario_tall_uniform()?;
            let mut v = vagueness::report::to_value(&r)?;
            v["verdict"] = json!(if r.tall_wins && r.linearity_error < 1e-12 { "PASS" } else { "FAIL" });
            to_json(&v)
        }
        (ScenarioName::TallUniform, Format::Csv) => plot_csv(&scenario_tall_uniform()?.plot),
        (ScenarioName::TallGaussian, Format::Json) => {
            let r = scenario_tall_gaussian()?;
            let mut v = vagueness::report::to_value(&r)?;
            let pass = r.ratio_violations.is_empty() && r.mode_shift_ok;
            v["ratio_inequality"] = json!(if pass { "PASS" } else { "FAIL" });
            to_json(&v)
        }
        (ScenarioName::TallGaussian, Format::Csv) => plot_csv(&scenario_tall_gaussian()?.plot),
        (ScenarioName::OptimalitySearch, format) => {
            let reports = default_searches(seed)
                .iter()
                .map(optimality_search)
                .collect::<Result<Vec<_>>>()?;
            match format {
                Format::Json => to_json(&json!({"seed": seed, "searches": reports})),
                Format::Csv => {
                    let mut cols: Vec<(String, Vec<String>)> = [
                        "search",
                        "observation",
                        "vague_message",
                        "vague_kl",
                        "best_precise",
                        "best_precise_kl",
                        "margin",
                    ]
                    .iter()
                    .map(|c| (c.to_string(), Vec::new()))
                    .collect();
                    for r in &reports {
                        for w in &r.witnesses {
                            let vals = [
                                r.name.clone(),
                                w.observation.id.clone(),
                                w.vague_message.label.clone(),
                                fmt_f(w.vague_kl),
                                w.best_precise.label.clone(),
                                fmt_ext(w.best_precise_kl),
                                fmt_f(w.margin),
                            ];
                            for (c, v) in cols.iter_mut().zip(vals) {
                                c.1.push(v);
                            }
                        }
                    }
                    write_columns(&cols)
                }
            }
        }
    }
}

fn fmt_f(x: f64) -> String {
    if x.is_finite() {
        format!("{}", vagueness::report::round_sig(x))
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn fmt_ext(x: ExtReal) -> String {
    fmt_f(x.to_f64())
}
