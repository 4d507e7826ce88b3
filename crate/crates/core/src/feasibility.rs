//! Minimum achievable interference and the secondary access decision.
//!
//! Over all Stiefel `V`, `tr(Σ Vᴴ Mₓ V)` is minimized by pairing the largest
//! SNR target with the smallest eigenvalue of `Mₓ`, the second largest with
//! the second smallest, and so on. The access test compares that minimum
//! against the interference cap.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::model::{build_derived, sample_channels, DerivedModel, ScenarioConfig, SnrMatrix};

/// Outcome of the access-feasibility test.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityReport {
    /// Minimum achievable interference `ξ₀`.
    pub xi_min: f64,
    /// Eigenvalues of `Mₓ` on `range(M)`, descending, near-zero values clamped.
    pub mx_eigenvalues: Vec<f64>,
    /// Whether `ξ ≥ ξ₀`.
    pub feasible: bool,
    /// `ξ − ξ₀`.
    pub slack: f64,
}

/// `Σ_i w_i λ_{k−i+1}` for `weights` descending and `eigenvalues_desc` of
/// length `k ≥ weights.len()`: the largest weight meets the smallest eigenvalue.
pub(crate) fn ascending_pairing(weights: &[f64], eigenvalues_desc: &[f64]) -> f64 {
    debug_assert!(eigenvalues_desc.len() >= weights.len());
    weights
        .iter()
        .zip(eigenvalues_desc.iter().rev())
        .map(|(w, l)| w * l)
        .sum()
}

/// Computes `ξ₀` and the access verdict for interference cap `xi`.
pub fn xi_min(derived: &DerivedModel, snr: &SnrMatrix, xi: f64) -> Result<FeasibilityReport> {
    derived.require_streams(snr.len())?;
    let eigenvalues = derived.mx_range_eigenvalues().to_vec();
    let xi_min = ascending_pairing(snr.values(), &eigenvalues);
    let slack = xi - xi_min;
    Ok(FeasibilityReport {
        xi_min,
        mx_eigenvalues: eigenvalues,
        feasible: slack >= 0.0,
        slack,
    })
}

/// Fraction of channel draws `0..trials` for which `ξ₀ ≤ config.xi()`.
///
/// Trial `k` uses channel stream `k`, so the estimate is reproducible and
/// independent of thread scheduling. Draws whose derived model cannot be
/// built are counted as denied access.
pub fn access_probability(config: &ScenarioConfig, trials: usize) -> f64 {
    if trials == 0 {
        return 0.0;
    }
    let snr = config.snr();
    let granted: usize = (0..trials as u64)
        .into_par_iter()
        .map(|k| {
            let verdict = sample_channels(config, k)
                .and_then(|ch| build_derived(&ch, config))
                .and_then(|dm| xi_min(&dm, &snr, config.xi()));
            match verdict {
                Ok(report) => usize::from(report.feasible),
                Err(err) => {
                    log::warn!("access trial {k} failed: {err}");
                    0
                }
            }
        })
        .sum();
    granted as f64 / trials as f64
}
