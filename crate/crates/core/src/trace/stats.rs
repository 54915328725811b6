use serde::{Deserialize, Serialize};

use super::{InterestZone, Trace, TraceError};
use crate::fixation::{detect_batch, DetectorParams, Fixation};
use crate::geometry::{StreamConfig, ZoneId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneStats {
    pub zone: ZoneId,
    pub fixation_count: u32,
    pub total_fixation_ms: f64,
    /// Sample-weighted over fixations that carry a pupil mean.
    pub mean_pupil_mm: Option<f64>,
}

/// Per-zone totals of the fixations whose centroid lies in the (closed)
/// zone rectangle. Overlapping zones each count a shared fixation.
pub fn zone_stats(fixations: &[Fixation], zones: &[InterestZone]) -> Result<Vec<ZoneStats>, TraceError> {
    if zones.is_empty() {
        return Err(TraceError::NoZones);
    }
    Ok(zones
        .iter()
        .map(|z| {
            let mut count = 0;
            let mut total = 0.0;
            let (mut pupil_sum, mut pupil_n) = (0.0, 0u64);
            for f in fixations.iter().filter(|f| z.rect.contains(f.centroid())) {
                count += 1;
                total += f.duration_ms;
                if let Some(p) = f.mean_pupil_mm {
                    pupil_sum += p * f.n_samples as f64;
                    pupil_n += f.n_samples as u64;
                }
            }
            ZoneStats {
                zone: z.id.clone(),
                fixation_count: count,
                total_fixation_ms: total,
                mean_pupil_mm: (pupil_n > 0).then(|| pupil_sum / pupil_n as f64),
            }
        })
        .collect())
}

/// Uses the trace's FIX records, or derives fixations from its GAZE records
/// when it has none and `derive` is given.
pub fn zone_stats_of_trace(
    trace: &Trace,
    zones: &[InterestZone],
    derive: Option<(DetectorParams, StreamConfig)>,
) -> Result<Vec<ZoneStats>, TraceError> {
    let mut fixations = trace.fixations();
    if fixations.is_empty() {
        match derive {
            Some((params, config)) => fixations = detect_batch(&trace.gaze_samples(), params, config)?,
            None if trace.gaze_samples().is_empty() => {}
            None => return Err(TraceError::NoFixations),
        }
    }
    zone_stats(&fixations, zones)
}
