//! Truth-conditional message semantics.
//!
//! Precise messages have fixed truth conditions on the world grid. Vague
//! messages carry an open parameter `t`: a half-width for "around n"
//! (`|x - n| <= t`) or a threshold for "tall" (`x >= t`) and "short" (`x < t`).

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::dist::{index_of, Dist, PROB_TOL};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Polarity {
    /// `x >= t` ("tall")
    AtLeast,
    /// `x < t` ("short")
    Below,
}

/// The two families of open-parameter messages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VagueKind {
    Around,
    Threshold,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MessageKind {
    Exact(f64),
    Between(f64, f64),
    AtLeast(f64),
    AtMost(f64),
    Around(f64),
    Threshold(Polarity),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    pub kind: MessageKind,
    pub label: String,
}

impl Message {
    pub fn new(kind: MessageKind) -> Result<Self> {
        let label = default_label(&kind);
        Self::with_label(kind, label)
    }

    pub fn with_label(kind: MessageKind, label: impl Into<String>) -> Result<Self> {
        let bounds_ok = match kind {
            MessageKind::Exact(v) | MessageKind::AtLeast(v) | MessageKind::AtMost(v) => {
                v.is_finite()
            }
            MessageKind::Around(n) => n.is_finite(),
            MessageKind::Between(lo, hi) => lo.is_finite() && hi.is_finite() && lo <= hi,
            MessageKind::Threshold(_) => true,
        };
        if !bounds_ok {
            return Err(Error::InvalidMessage(format!("{kind:?}")));
        }
        Ok(Message {
            kind,
            label: label.into(),
        })
    }

    pub fn exact(v: f64) -> Self {
        Self::new(MessageKind::Exact(v)).expect("finite value")
    }

    pub fn between(lo: f64, hi: f64) -> Result<Self> {
        Self::new(MessageKind::Between(lo, hi))
    }

    pub fn at_least(v: f64) -> Self {
        Self::new(MessageKind::AtLeast(v)).expect("finite value")
    }

    pub fn at_most(v: f64) -> Self {
        Self::new(MessageKind::AtMost(v)).expect("finite value")
    }

    pub fn around(n: f64) -> Self {
        Self::new(MessageKind::Around(n)).expect("finite value")
    }

    pub fn tall() -> Self {
        Self::new(MessageKind::Threshold(Polarity::AtLeast)).expect("no bounds")
    }

    pub fn short() -> Self {
        Self::new(MessageKind::Threshold(Polarity::Below)).expect("no bounds")
    }

    pub fn vague_kind(&self) -> Option<VagueKind> {
        match self.kind {
            MessageKind::Around(_) => Some(VagueKind::Around),
            MessageKind::Threshold(_) => Some(VagueKind::Threshold),
            _ => None,
        }
    }

    pub fn is_vague(&self) -> bool {
        self.vague_kind().is_some()
    }

    /// Every bound must be a grid value.
    pub fn check_on_grid(&self, grid: &[f64]) -> Result<()> {
        let bounds: Vec<f64> = match self.kind {
            MessageKind::Exact(v) | MessageKind::AtLeast(v) | MessageKind::AtMost(v) => vec![v],
            MessageKind::Between(lo, hi) => vec![lo, hi],
            MessageKind::Around(n) => vec![n],
            MessageKind::Threshold(_) => vec![],
        };
        match bounds.iter().find(|b| index_of(grid, **b).is_none()) {
            Some(b) => Err(Error::InvalidMessage(format!(
                "`{}` has bound {b} off the grid",
                self.label
            ))),
            None => Ok(()),
        }
    }

    /// Truth-value of the message at `x`; grid-level truth set for precise
    /// messages (vague ones need a parameter and return an error).
    pub fn extension(&self, grid: &[f64]) -> Result<Vec<bool>> {
        grid.iter().map(|x| denotation(self, *x, None)).collect()
    }

    fn kind_name(&self) -> &'static str {
        match self.kind {
            MessageKind::Exact(_) => "exact",
            MessageKind::Between(..) => "between",
            MessageKind::AtLeast(_) => "at-least",
            MessageKind::AtMost(_) => "at-most",
            MessageKind::Around(_) => "around",
            MessageKind::Threshold(Polarity::AtLeast) => "tall",
            MessageKind::Threshold(Polarity::Below) => "short",
        }
    }

    fn args(&self) -> Vec<f64> {
        match self.kind {
            MessageKind::Exact(v) | MessageKind::AtLeast(v) | MessageKind::AtMost(v) => vec![v],
            MessageKind::Between(lo, hi) => vec![lo, hi],
            MessageKind::Around(n) => vec![n],
            MessageKind::Threshold(_) => vec![],
        }
    }

    fn from_parts(kind: &str, args: &[f64]) -> Result<MessageKind> {
        let arity = |n: usize| -> Result<()> {
            if args.len() == n {
                Ok(())
            } else {
                Err(Error::InvalidMessage(format!(
                    "`{kind}` takes {n} argument(s), got {}",
                    args.len()
                )))
            }
        };
        let k = match kind {
            "exact" | "exactly" => {
                arity(1)?;
                MessageKind::Exact(args[0])
            }
            "between" => {
                arity(2)?;
                MessageKind::Between(args[0], args[1])
            }
            "at-least" | "atleast" | "more-than" | "taller-than" => {
                arity(1)?;
                MessageKind::AtLeast(args[0])
            }
            "at-most" | "atmost" | "less-than" | "shorter-than" => {
                arity(1)?;
                MessageKind::AtMost(args[0])
            }
            "around" => {
                arity(1)?;
                MessageKind::Around(args[0])
            }
            "tall" => {
                arity(0)?;
                MessageKind::Threshold(Polarity::AtLeast)
            }
            "short" => {
                arity(0)?;
                MessageKind::Threshold(Polarity::Below)
            }
            other => return Err(Error::InvalidMessage(format!("unknown kind `{other}`"))),
        };
        Ok(k)
    }
}

impl fmt::Display for Message {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

fn num(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

fn default_label(kind: &MessageKind) -> String {
    match *kind {
        MessageKind::Exact(v) => format!("exactly {}", num(v)),
        MessageKind::Between(lo, hi) => format!("between {} and {}", num(lo), num(hi)),
        MessageKind::AtLeast(v) => format!("at least {}", num(v)),
        MessageKind::AtMost(v) => format!("at most {}", num(v)),
        MessageKind::Around(n) => format!("around {}", num(n)),
        MessageKind::Threshold(Polarity::AtLeast) => "tall".into(),
        MessageKind::Threshold(Polarity::Below) => "short".into(),
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MessageRepr {
    kind: String,
    #[serde(default)]
    args: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
}

impl Serialize for Message {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MessageRepr {
            kind: self.kind_name().to_string(),
            args: self.args(),
            label: Some(self.label.clone()),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Message {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = MessageRepr::deserialize(d)?;
        let kind = Message::from_parts(&repr.kind, &repr.args).map_err(serde::de::Error::custom)?;
        match repr.label {
            Some(l) => Message::with_label(kind, l),
            None => Message::new(kind),
        }
        .map_err(serde::de::Error::custom)
    }
}

impl std::str::FromStr for Message {
    type Err = Error;

    /// Parses `"around 40"`, `"between 10 70"`, `"between 10 and 70"`,
    /// `"exactly 40"`, `"at least 30"`, `"taller than 170"`, `"tall"`, ...
    fn from_str(s: &str) -> Result<Self> {
        let words: Vec<&str> = s
            .split_whitespace()
            .filter(|w| !w.eq_ignore_ascii_case("and"))
            .collect();
        let mut name = Vec::new();
        let mut args = Vec::new();
        for w in &words {
            let trimmed = w.trim_end_matches(|c: char| c.is_ascii_alphabetic());
            match trimmed.parse::<f64>() {
                Ok(v) if !trimmed.is_empty() => args.push(v),
                _ if args.is_empty() => name.push(w.to_ascii_lowercase()),
                _ => return Err(Error::InvalidMessage(format!("cannot parse `{s}`"))),
            }
        }
        if name.is_empty() {
            return Err(Error::InvalidMessage(format!("cannot parse `{s}`")));
        }
        let kind = Message::from_parts(&name.join("-"), &args)?;
        Message::new(kind)
    }
}

/// Prior over a vague message's open parameter.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamPrior {
    pub dist: Dist,
}

impl ParamPrior {
    pub fn new(dist: Dist) -> Result<Self> {
        if dist.support().iter().any(|t| *t < 0.0) {
            return Err(Error::InvalidDist("parameter support must be nonnegative".into()));
        }
        Ok(ParamPrior { dist })
    }

    pub fn uniform(values: Vec<f64>) -> Result<Self> {
        Self::new(Dist::uniform(values)?)
    }
}

/// Whether `m` is true of world value `x` under parameter `t`.
pub fn denotation(m: &Message, x: f64, t: Option<f64>) -> Result<bool> {
    let eps = PROB_TOL;
    let need_t = || t.ok_or_else(|| Error::MissingParameter(m.label.clone()));
    Ok(match m.kind {
        MessageKind::Exact(v) => (x - v).abs() <= eps,
        MessageKind::Between(lo, hi) => x >= lo - eps && x <= hi + eps,
        MessageKind::AtLeast(lo) => x >= lo - eps,
        MessageKind::AtMost(hi) => x <= hi + eps,
        MessageKind::Around(n) => (x - n).abs() <= need_t()? + eps,
        MessageKind::Threshold(Polarity::AtLeast) => x >= need_t()? - eps,
        MessageKind::Threshold(Polarity::Below) => x < need_t()? - eps,
    })
}

/// All precise interval messages on `grid`, one per distinct extension:
/// every `Between(lo, hi)` (as `Exact` when `lo == hi`), then `AtLeast` and
/// `AtMost`, keeping the first message for each extension.
pub fn precise_alternatives(grid: &[f64]) -> Vec<Message> {
    let mut candidates = Vec::new();
    for (i, lo) in grid.iter().enumerate() {
        for hi in &grid[i..] {
            if lo == hi {
                candidates.push(Message::exact(*lo));
            } else {
                candidates.push(Message::between(*lo, *hi).expect("lo < hi"));
            }
        }
    }
    candidates.extend(grid.iter().map(|v| Message::at_least(*v)));
    candidates.extend(grid.iter().map(|v| Message::at_most(*v)));

    let mut seen: Vec<Vec<bool>> = Vec::new();
    let mut out = Vec::new();
    for m in candidates {
        let ext = m.extension(grid).expect("precise");
        if !seen.contains(&ext) {
            seen.push(ext);
            out.push(m);
        }
    }
    out
}

/// One `Around(n)` per grid point, or the two threshold polarities.
pub fn vague_alternatives(grid: &[f64], kind: VagueKind) -> Vec<Message> {
    match kind {
        VagueKind::Around => grid.iter().map(|n| Message::around(*n)).collect(),
        VagueKind::Threshold => vec![Message::tall(), Message::short()],
    }
}
