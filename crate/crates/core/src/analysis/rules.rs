//! Cluster labeling rules.
//!
//! A rules file is a list of sections. Each section names a rule and holds
//! `key = value` settings (`label`, `priority`) and one comparison per line:
//!
//! ```text
//! # the label defaults to the section name
//! [hodler]
//! priority = 60
//! out_degree.mean == 0
//!
//! [institutional]
//! priority = 50
//! size <= 10
//! in_degree.mean > global.in_degree.p99.9
//! ```
//!
//! Operands are numbers, `size`, a cluster statistic `<feature>.<stat>`
//! (`mean sd min q1 median q3 max outliers`), or a statistic over all
//! wallets `global.<feature>.<stat>` (`mean sd min max median pNN`). Any
//! operand may be scaled as `<number> * <operand>`. A rule matches when all
//! of its comparisons hold; the highest-priority match wins, earlier rules
//! winning ties.

use serde::Serialize;

use super::profile::{ClusterProfile, PopulationStats, GENERAL_LABEL};
use crate::error::{Error, Result};
use crate::features::FEATURE_NAMES;

pub const WASH_LABEL: &str = "wash_candidate";

pub const DEFAULT_RULES: &str = "\
[hodler]
priority = 60
out_degree.mean == 0

[institutional]
priority = 50
size <= 10
in_degree.mean > global.in_degree.p99.9
out_degree.mean > global.out_degree.p99.9

[ring_trader]
label = wash_candidate
priority = 40
in_degree.mean > global.in_degree.p90
out_degree.mean > global.out_degree.p90
transfer_ratio.mean > global.transfer_ratio.p90
max_trans_per_day.mean > global.max_trans_per_day.p90
buy_atr.mean < global.buy_atr.mean

[collector]
priority = 30
total_in_usd.mean > global.total_in_usd.p90
total_out_usd.mean > global.total_out_usd.p90
relative_sell.mean > global.relative_sell.mean

[mature_buyer]
label = wash_candidate
priority = 20
total_in_usd.mean > global.total_in_usd.p90
in_interval_days.mean > global.in_interval_days.p90
avg_minted_days.mean > global.avg_minted_days.p90

[inactive]
priority = 10
in_interval_days.mean > global.in_interval_days.p90
diff_interval_days.mean > global.diff_interval_days.p90
";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ClusterStat {
    Mean,
    Sd,
    Min,
    Q1,
    Median,
    Q3,
    Max,
    Outliers,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum GlobalStat {
    Mean,
    Sd,
    Min,
    Max,
    Median,
    Percentile(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Term {
    Number(f64),
    Size,
    Cluster { feature: String, stat: ClusterStat },
    Global { feature: String, stat: GlobalStat },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Operand {
    pub scale: f64,
    pub term: Term,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Comparison {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl Comparison {
    const TOKENS: [(&'static str, Comparison); 6] = [
        ("==", Comparison::Eq),
        ("!=", Comparison::Ne),
        ("<=", Comparison::Le),
        (">=", Comparison::Ge),
        ("<", Comparison::Lt),
        (">", Comparison::Gt),
    ];

    fn holds(self, a: f64, b: f64) -> bool {
        match self {
            Comparison::Eq => a == b,
            Comparison::Ne => a != b,
            Comparison::Lt => a < b,
            Comparison::Le => a <= b,
            Comparison::Gt => a > b,
            Comparison::Ge => a >= b,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Condition {
    pub lhs: Operand,
    pub op: Comparison,
    pub rhs: Operand,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabelRule {
    pub name: String,
    pub label: String,
    pub priority: i64,
    pub conditions: Vec<Condition>,
}

impl LabelRule {
    pub fn matches(&self, profile: &ClusterProfile, population: &PopulationStats) -> bool {
        self.conditions.iter().all(|c| {
            match (
                eval(&c.lhs, profile, population),
                eval(&c.rhs, profile, population),
            ) {
                (Some(a), Some(b)) => c.op.holds(a, b),
                _ => false,
            }
        })
    }
}

fn eval(op: &Operand, profile: &ClusterProfile, population: &PopulationStats) -> Option<f64> {
    let v = match &op.term {
        Term::Number(x) => *x,
        Term::Size => profile.size as f64,
        Term::Cluster { feature, stat } => {
            let f = profile.feature(feature)?;
            match stat {
                ClusterStat::Mean => f.mean,
                ClusterStat::Sd => f.sd,
                ClusterStat::Min => f.min,
                ClusterStat::Q1 => f.q1,
                ClusterStat::Median => f.median,
                ClusterStat::Q3 => f.q3,
                ClusterStat::Max => f.max,
                ClusterStat::Outliers => f.outliers as f64,
            }
        }
        Term::Global { feature, stat } => match stat {
            GlobalStat::Mean => population.mean(feature)?,
            GlobalStat::Sd => population.sd(feature)?,
            GlobalStat::Min => population.percentile(feature, 0.0)?,
            GlobalStat::Max => population.percentile(feature, 100.0)?,
            GlobalStat::Median => population.percentile(feature, 50.0)?,
            GlobalStat::Percentile(p) => population.percentile(feature, *p)?,
        },
    };
    Some(op.scale * v)
}

fn rules_error(line: usize, message: impl Into<String>) -> Error {
    Error::Rules {
        line,
        message: message.into(),
    }
}

fn known_feature(name: &str, line: usize) -> Result<String> {
    if FEATURE_NAMES.contains(&name) {
        Ok(name.to_string())
    } else {
        Err(rules_error(line, format!("unknown feature {name}")))
    }
}

fn parse_term(s: &str, line: usize) -> Result<Term> {
    if let Ok(x) = s.parse::<f64>() {
        return Ok(Term::Number(x));
    }
    if s == "size" {
        return Ok(Term::Size);
    }
    if let Some(rest) = s.strip_prefix("global.") {
        let (feature, stat) = rest.split_once('.').ok_or_else(|| {
            rules_error(line, format!("expected global.<feature>.<stat>, got {s}"))
        })?;
        let stat = match stat {
            "mean" => GlobalStat::Mean,
            "sd" => GlobalStat::Sd,
            "min" => GlobalStat::Min,
            "max" => GlobalStat::Max,
            "median" => GlobalStat::Median,
            p => {
                let pct = p
                    .strip_prefix('p')
                    .and_then(|v| v.parse::<f64>().ok())
                    .filter(|v| (0.0..=100.0).contains(v))
                    .ok_or_else(|| {
                        rules_error(line, format!("unknown population statistic {p}"))
                    })?;
                GlobalStat::Percentile(pct)
            }
        };
        return Ok(Term::Global {
            feature: known_feature(feature, line)?,
            stat,
        });
    }
    let (feature, stat) = s
        .split_once('.')
        .ok_or_else(|| rules_error(line, format!("cannot read operand {s}")))?;
    let stat = match stat {
        "mean" => ClusterStat::Mean,
        "sd" => ClusterStat::Sd,
        "min" => ClusterStat::Min,
        "q1" => ClusterStat::Q1,
        "median" => ClusterStat::Median,
        "q3" => ClusterStat::Q3,
        "max" => ClusterStat::Max,
        "outliers" => ClusterStat::Outliers,
        other => {
            return Err(rules_error(
                line,
                format!("unknown cluster statistic {other}"),
            ))
        }
    };
    Ok(Term::Cluster {
        feature: known_feature(feature, line)?,
        stat,
    })
}

fn parse_operand(s: &str, line: usize) -> Result<Operand> {
    let s = s.trim();
    if s.is_empty() {
        return Err(rules_error(line, "missing operand"));
    }
    if let Some((scale, rest)) = s.split_once('*') {
        let scale: f64 = scale.trim().parse().map_err(|_| {
            rules_error(
                line,
                format!("scale must be a number, got {}", scale.trim()),
            )
        })?;
        return Ok(Operand {
            scale,
            term: parse_term(rest.trim(), line)?,
        });
    }
    Ok(Operand {
        scale: 1.0,
        term: parse_term(s, line)?,
    })
}

fn parse_condition(s: &str, line: usize) -> Result<Condition> {
    for (tok, op) in Comparison::TOKENS {
        if let Some(at) = s.find(tok) {
            return Ok(Condition {
                lhs: parse_operand(&s[..at], line)?,
                op,
                rhs: parse_operand(&s[at + tok.len()..], line)?,
                text: s.to_string(),
            });
        }
    }
    Err(rules_error(
        line,
        format!("no comparison operator in {s:?}"),
    ))
}

pub fn parse_rules(text: &str) -> Result<Vec<LabelRule>> {
    let mut rules: Vec<LabelRule> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let s = raw.split('#').next().unwrap_or("").trim();
        if s.is_empty() {
            continue;
        }
        if let Some(name) = s.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .map(str::trim)
                .filter(|n| !n.is_empty())
                .ok_or_else(|| rules_error(line, format!("bad section header {s}")))?;
            if rules.iter().any(|r| r.name == name) {
                return Err(rules_error(line, format!("duplicate rule {name}")));
            }
            rules.push(LabelRule {
                name: name.to_string(),
                label: name.to_string(),
                priority: 0,
                conditions: Vec::new(),
            });
            continue;
        }
        let rule = rules
            .last_mut()
            .ok_or_else(|| rules_error(line, "condition outside a [rule] section"))?;
        let is_comparison = Comparison::TOKENS.iter().any(|(t, _)| s.contains(t));
        match s.split_once('=') {
            Some((key, value)) if !is_comparison => {
                let value = value.trim();
                match key.trim() {
                    "label" if !value.is_empty() => rule.label = value.to_string(),
                    "priority" => {
                        rule.priority = value.parse().map_err(|_| {
                            rules_error(line, format!("priority must be an integer, got {value}"))
                        })?
                    }
                    other => return Err(rules_error(line, format!("unknown setting {other}"))),
                }
            }
            _ => rule.conditions.push(parse_condition(s, line)?),
        }
    }
    if let Some(r) = rules.iter().find(|r| r.conditions.is_empty()) {
        return Err(rules_error(0, format!("rule {} has no conditions", r.name)));
    }
    Ok(rules)
}

pub fn default_rules() -> Vec<LabelRule> {
    parse_rules(DEFAULT_RULES).expect("built-in rules parse")
}

/// Labels each profile with its highest-priority matching rule, or
/// `general` when none match.
pub fn label_clusters(
    profiles: &mut [ClusterProfile],
    rules: &[LabelRule],
    population: &PopulationStats,
) {
    for p in profiles.iter_mut() {
        let mut best: Option<&LabelRule> = None;
        for r in rules {
            if best.is_some_and(|b| b.priority >= r.priority) {
                continue;
            }
            if r.matches(p, population) {
                best = Some(r);
            }
        }
        p.label = best.map_or(GENERAL_LABEL, |r| r.label.as_str()).to_string();
    }
}
