//! Ranking candidate referents of a spoken command by where the user looked
//! before, during and after the utterance.
//!
//! Each fixation whose centroid lies in a zone contributes its overlap with
//! three windows around the utterance `[s, e]`:
//!
//! ```text
//!   pre     [s − pre_window, s)
//!   during  [s, e]
//!   post    (e, e + post_window]
//! ```
//!
//! The zone score is `w_pre·pre + w_during·during + w_post·post` in weighted
//! milliseconds. Looking at the object once speaking is done is treated as the
//! strongest evidence, so the defaults weight post > during > pre.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fixation::Fixation;
use crate::geometry::ZoneId;
use crate::trace::InterestZone;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ResolveError {
    #[error("resolver weights must be non-negative with a positive sum")]
    ZeroWeight,
    #[error("utterance ends ({end} ms) before it starts ({start} ms)")]
    Utterance { start: i64, end: i64 },
    #[error("no zones given")]
    NoZones,
    #[error("duplicate zone id {0}")]
    DuplicateZone(ZoneId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UtteranceInterval {
    pub start_ms: i64,
    pub end_ms: i64,
    /// Number of underspecified references ("that", "there") in the command.
    #[serde(default = "one")]
    pub deictic_count: u32,
}

fn one() -> u32 {
    1
}

impl UtteranceInterval {
    pub fn new(start_ms: i64, end_ms: i64) -> Self {
        Self {
            start_ms,
            end_ms,
            deictic_count: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolverWeights {
    pub w_pre: f64,
    pub w_during: f64,
    pub w_post: f64,
    pub pre_window_ms: i64,
    pub post_window_ms: i64,
}

impl Default for ResolverWeights {
    fn default() -> Self {
        Self {
            w_pre: 0.5,
            w_during: 1.0,
            w_post: 2.0,
            pre_window_ms: 1500,
            post_window_ms: 1500,
        }
    }
}

impl ResolverWeights {
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            w_pre: self.w_pre * c,
            w_during: self.w_during * c,
            w_post: self.w_post * c,
            ..*self
        }
    }

    fn validate(&self) -> Result<(), ResolveError> {
        let ws = [self.w_pre, self.w_during, self.w_post];
        if ws.iter().any(|w| !(*w >= 0.0)) || !(ws.iter().sum::<f64>() > 0.0) {
            return Err(ResolveError::ZeroWeight);
        }
        Ok(())
    }
}

/// Milliseconds of fixation time per window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Breakdown {
    pub pre_ms: i64,
    pub during_ms: i64,
    pub post_ms: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferentScore {
    pub zone: ZoneId,
    pub score: f64,
    pub breakdown: Breakdown,
    /// End of the latest contributing fixation, used to break ties.
    pub last_fixation_ms: Option<i64>,
}

fn overlap(a0: i64, a1: i64, b0: i64, b1: i64) -> i64 {
    (a1.min(b1) - a0.max(b0)).max(0)
}

pub fn rank_referents(
    utterance: &UtteranceInterval,
    fixations: &[Fixation],
    zones: &[InterestZone],
    weights: &ResolverWeights,
) -> Result<Vec<ReferentScore>, ResolveError> {
    weights.validate()?;
    if utterance.end_ms < utterance.start_ms {
        return Err(ResolveError::Utterance {
            start: utterance.start_ms,
            end: utterance.end_ms,
        });
    }
    if zones.is_empty() {
        return Err(ResolveError::NoZones);
    }
    for (i, z) in zones.iter().enumerate() {
        if zones[..i].iter().any(|o| o.id == z.id) {
            return Err(ResolveError::DuplicateZone(z.id.clone()));
        }
    }

    let (s, e) = (utterance.start_ms, utterance.end_ms);
    let windows = [(s - weights.pre_window_ms, s), (s, e), (e, e + weights.post_window_ms)];
    let mut scores: Vec<ReferentScore> = zones
        .iter()
        .map(|zone| {
            let mut b = Breakdown::default();
            let mut last = None;
            for f in fixations.iter().filter(|f| zone.rect.contains(f.centroid())) {
                let parts = windows.map(|(w0, w1)| overlap(f.start_ms, f.end_ms, w0, w1));
                if parts.iter().any(|&p| p > 0) {
                    b.pre_ms += parts[0];
                    b.during_ms += parts[1];
                    b.post_ms += parts[2];
                    last = last.max(Some(f.end_ms));
                }
            }
            ReferentScore {
                zone: zone.id.clone(),
                score: weights.w_pre * b.pre_ms as f64
                    + weights.w_during * b.during_ms as f64
                    + weights.w_post * b.post_ms as f64,
                breakdown: b,
                last_fixation_ms: last,
            }
        })
        .collect();

    scores.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap_or(Ordering::Equal)
            .then_with(|| b.last_fixation_ms.cmp(&a.last_fixation_ms))
            .then_with(|| a.zone.cmp(&b.zone))
    });
    Ok(scores)
}

/// Assigns the k-th deictic of the utterance to the k-th distinct zone in
/// chronological order of the contributing fixations ("that … there").
pub fn assign_deictics(
    utterance: &UtteranceInterval,
    fixations: &[Fixation],
    zones: &[InterestZone],
    weights: &ResolverWeights,
) -> Result<Vec<ZoneId>, ResolveError> {
    let ranked = rank_referents(utterance, fixations, zones, weights)?;
    let lo = utterance.start_ms - weights.pre_window_ms;
    let hi = utterance.end_ms + weights.post_window_ms;
    let mut order: Vec<ZoneId> = Vec::new();
    for f in fixations {
        if overlap(f.start_ms, f.end_ms, lo, hi) == 0 {
            continue;
        }
        if let Some(z) = zones
            .iter()
            .find(|z| z.rect.contains(f.centroid()) && ranked.iter().any(|r| r.zone == z.id && r.score > 0.0))
        {
            if !order.contains(&z.id) {
                order.push(z.id.clone());
            }
        }
    }
    order.truncate(utterance.deictic_count as usize);
    Ok(order)
}
