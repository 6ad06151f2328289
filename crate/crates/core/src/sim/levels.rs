//! Counting the distinct voltage levels of a switched waveform.

use super::SimWaveforms;

/// Number of distinct plateaus in the phase-a voltage. Samples are sorted and
/// grouped whenever neighbouring values lie within `tolerance` volts of each
/// other, so device drops and small bus differences do not split a level.
pub fn count_voltage_levels(w: &SimWaveforms, tolerance: f64) -> usize {
    count_levels(&w.phase_voltage[0], tolerance)
}

pub(crate) fn count_levels(samples: &[f64], tolerance: f64) -> usize {
    let mut sorted: Vec<f64> = samples.iter().copied().filter(|v| v.is_finite()).collect();
    if sorted.is_empty() {
        return 0;
    }
    sorted.sort_by(f64::total_cmp);
    1 + sorted.windows(2).filter(|p| p[1] - p[0] > tolerance).count()
}
