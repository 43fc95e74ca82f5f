//! Voice-operated transmit gating over a sampled amplitude envelope.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// VOX gate settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoxConfig {
    /// Amplitude threshold in (0, 1); energy at or above it opens the gate.
    pub threshold: f64,
    /// How long the gate stays open after energy last met the threshold, ms.
    pub hangover_ms: u32,
}

impl Default for VoxConfig {
    fn default() -> Self {
        VoxConfig {
            threshold: 0.1,
            hangover_ms: 200,
        }
    }
}

impl VoxConfig {
    /// Checks the documented ranges: 0 < threshold < 1, hangover >= 0.
    pub fn validate(&self) -> Result<()> {
        if !self.threshold.is_finite() || self.threshold <= 0.0 || self.threshold >= 1.0 {
            return Err(Error::InvalidParameter {
                field: "vox.threshold",
                reason: format!("must lie strictly inside (0, 1), got {}", self.threshold),
            });
        }
        Ok(())
    }
}

/// Applies the VOX gate to a uniformly sampled energy envelope.
///
/// Sample `i` is gated open when some sample `j <= i` had energy at or above
/// the threshold and no more than `hangover_ms` elapsed between them
/// (`(i - j) * sample_interval_ms <= hangover_ms`). Threshold comparison is
/// inclusive, so constant energy exactly at the threshold holds the gate
/// open from the first sample.
pub fn vox_gate(energy: &[f64], sample_interval_ms: f64, cfg: &VoxConfig) -> Vec<bool> {
    debug_assert!(sample_interval_ms > 0.0);
    let mut out = vec![false; energy.len()];
    let mut last_active: Option<usize> = None;
    for (i, &e) in energy.iter().enumerate() {
        if e >= cfg.threshold {
            last_active = Some(i);
        }
        out[i] = match last_active {
            Some(j) => (i - j) as f64 * sample_interval_ms <= cfg.hangover_ms as f64,
            None => false,
        };
    }
    out
}

// ==== Tests ====

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(threshold: f64, hangover_ms: u32) -> VoxConfig {
        VoxConfig {
            threshold,
            hangover_ms,
        }
    }

    #[test]
    fn silence_never_triggers() {
        let gate = vox_gate(&[0.0; 50], 10.0, &cfg(0.1, 200));
        assert!(gate.iter().all(|&g| !g), "all-zero energy must stay gated off");
    }

    #[test]
    fn threshold_is_inclusive_from_first_sample() {
        let gate = vox_gate(&[0.1; 20], 10.0, &cfg(0.1, 200));
        assert!(gate.iter().all(|&g| g), "energy == threshold must hold the gate open");
    }

    #[test]
    fn burst_plus_hangover_hand_trace() {
        // 10 ms sampling; a 100 ms burst (samples 0..=9) with 200 ms
        // hangover keeps the gate open through sample 29 (t = 290 ms), i.e.
        // exactly burst + hangover = 300 ms of open gate.
        let mut energy = vec![0.0; 60];
        for e in energy.iter_mut().take(10) {
            *e = 0.8;
        }
        let gate = vox_gate(&energy, 10.0, &cfg(0.1, 200));
        let open: Vec<usize> = gate
            .iter()
            .enumerate()
            .filter_map(|(i, &g)| g.then_some(i))
            .collect();
        assert_eq!(open.first(), Some(&0));
        assert_eq!(open.last(), Some(&29), "gate must close after 290 ms");
        assert_eq!(open.len(), 30, "open duration must be exactly 300 ms");
        assert!(!gate[30]);
    }

    #[test]
    fn gate_reopens_on_second_burst() {
        let mut energy = vec![0.0; 100];
        energy[5] = 0.9;
        energy[70] = 0.9;
        let gate = vox_gate(&energy, 10.0, &cfg(0.1, 20));
        assert!(gate[5] && gate[6] && gate[7]);
        assert!(!gate[8], "20 ms hangover at 10 ms sampling spans 2 samples");
        assert!(!gate[69]);
        assert!(gate[70] && gate[72]);
        assert!(!gate[73]);
    }

    #[test]
    fn zero_hangover_tracks_threshold_crossings_exactly() {
        let energy = [0.0, 0.5, 0.0, 0.5, 0.5, 0.0];
        let gate = vox_gate(&energy, 10.0, &cfg(0.1, 0));
        assert_eq!(gate, vec![false, true, false, true, true, false]);
    }

    #[test]
    fn validate_rejects_degenerate_thresholds() {
        assert!(cfg(0.0, 100).validate().is_err());
        assert!(cfg(1.0, 100).validate().is_err());
        assert!(cfg(-0.2, 100).validate().is_err());
        assert!(cfg(0.5, 0).validate().is_ok());
    }
}
