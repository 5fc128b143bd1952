//! Roundness selection for a target distance.
//!
//! A coefficient is feasible when its notification rate meets the request
//! and, if a time limit is given, its mean time to notice is within it.
//! Among feasible coefficients the objective picks the winner. Comfort and
//! noticeability only rank when every feasible coefficient has a value;
//! otherwise the tie-break order decides alone: smaller `b` first (quieter),
//! then shorter mean time. Values are read from grid cells, interpolated in
//! distance only.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{distance_bracket, interpolate_in_distance, OutcomeCell, StudyGrids, ROUNDNESS};
use crate::error::{require_positive, Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    #[default]
    Comfort,
    Noticeability,
    MinTime,
}

impl FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "comfort" => Ok(Self::Comfort),
            "noticeability" => Ok(Self::Noticeability),
            "min_time" => Ok(Self::MinTime),
            other => Err(Error::invalid(format!("unknown objective {other:?}"))),
        }
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Comfort => "comfort",
            Self::Noticeability => "noticeability",
            Self::MinTime => "min_time",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanRequest {
    pub distance_mm: f64,
    pub min_notification_rate: f64,
    #[serde(default)]
    pub max_mean_time_s: Option<f64>,
    #[serde(default)]
    pub objective: Objective,
}

impl PlanRequest {
    pub fn new(distance_mm: f64, min_notification_rate: f64) -> Self {
        Self {
            distance_mm,
            min_notification_rate,
            max_mean_time_s: None,
            objective: Objective::Comfort,
        }
    }

    pub fn validate(&self) -> Result<()> {
        distance_bracket(self.distance_mm)?;
        let r = self.min_notification_rate;
        if !(0.0..=1.0).contains(&r) {
            return Err(Error::OutOfRange(format!(
                "notification rate {r} outside [0, 1]"
            )));
        }
        if let Some(t) = self.max_mean_time_s {
            require_positive("max mean time", t)?;
        }
        Ok(())
    }
}

/// Outcome fields at one (distance, b); `None` marks missing data.
pub type ExpectedOutcome = OutcomeCell;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub b: f64,
    pub expected: ExpectedOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanResult {
    pub distance_mm: f64,
    pub objective: Objective,
    pub feasible: bool,
    pub chosen_b: Option<f64>,
    pub expected: Option<ExpectedOutcome>,
    /// Feasible coefficients in increasing `b`.
    pub feasible_set: Vec<Candidate>,
    /// Best-rate coefficient when nothing is feasible.
    pub fallback_b: Option<f64>,
    /// Whether the objective values took part in the choice.
    pub objective_ranked: bool,
}

pub fn expected_outcome(grids: &StudyGrids, distance_mm: f64, b: f64) -> Result<ExpectedOutcome> {
    let g = &grids.outcome;
    Ok(OutcomeCell {
        notification_rate: interpolate_in_distance(g, distance_mm, b, |c| c.notification_rate)?,
        mean_time_s: interpolate_in_distance(g, distance_mm, b, |c| c.mean_time_s)?,
        noticeability: interpolate_in_distance(g, distance_mm, b, |c| c.noticeability)?,
        comfort: interpolate_in_distance(g, distance_mm, b, |c| c.comfort)?,
    })
}

fn score(objective: Objective, e: &ExpectedOutcome) -> Option<f64> {
    match objective {
        Objective::Comfort => e.comfort,
        Objective::Noticeability => e.noticeability,
        Objective::MinTime => e.mean_time_s.map(|t| -t),
    }
}

fn tie_break(a: &Candidate, c: &Candidate) -> Ordering {
    let time = |x: &Candidate| x.expected.mean_time_s.unwrap_or(f64::INFINITY);
    a.b.total_cmp(&c.b).then(time(a).total_cmp(&time(c)))
}

pub fn plan(grids: &StudyGrids, req: &PlanRequest) -> Result<PlanResult> {
    req.validate()?;
    if grids.outcome.is_empty() {
        return Err(Error::MissingData("outcome grid is empty".into()));
    }
    let candidates = ROUNDNESS
        .iter()
        .map(|&b| {
            Ok(Candidate {
                b,
                expected: expected_outcome(grids, req.distance_mm, b)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let meets = |c: &Candidate| {
        let rate_ok = c
            .expected
            .notification_rate
            .is_some_and(|r| r >= req.min_notification_rate);
        let time_ok = match (req.max_mean_time_s, c.expected.mean_time_s) {
            (None, _) => true,
            (Some(max), Some(t)) => t <= max,
            (Some(_), None) => false,
        };
        let scored = req.objective != Objective::MinTime || c.expected.mean_time_s.is_some();
        rate_ok && time_ok && scored
    };
    let feasible_set: Vec<Candidate> = candidates.iter().copied().filter(meets).collect();

    let ranked = !feasible_set.is_empty()
        && feasible_set
            .iter()
            .all(|c| score(req.objective, &c.expected).is_some());
    let best = feasible_set.iter().min_by(|a, c| {
        let by_score = if ranked {
            let (sa, sc) = (
                score(req.objective, &a.expected),
                score(req.objective, &c.expected),
            );
            sc.unwrap().total_cmp(&sa.unwrap())
        } else {
            Ordering::Equal
        };
        by_score.then_with(|| tie_break(a, c))
    });

    let fallback_b = if best.is_none() {
        candidates
            .iter()
            .filter_map(|c| c.expected.notification_rate.map(|r| (c.b, r)))
            .min_by(|a, c| c.1.total_cmp(&a.1).then(a.0.total_cmp(&c.0)))
            .map(|(b, _)| b)
    } else {
        None
    };

    Ok(PlanResult {
        distance_mm: req.distance_mm,
        objective: req.objective,
        feasible: best.is_some(),
        chosen_b: best.map(|c| c.b),
        expected: best.map(|c| c.expected),
        feasible_set,
        fallback_b,
        objective_ranked: ranked,
    })
}
