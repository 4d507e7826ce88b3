use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::{hermitian_evd, real_diag, stiefel_residual, weighted_quadratic_trace, CMatrix};
use crate::model::{DerivedModel, SnrMatrix};

/// Which problem produced a [`BeamformingSolution`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    /// Zero-forcing: no interference reaches the primary receiver.
    #[serde(rename = "ZFB")]
    Zfb,
    /// Nonzero-forcing: interference up to the cap is allowed.
    #[serde(rename = "NFB")]
    Nfb,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Zfb => "ZFB",
            Mode::Nfb => "NFB",
        }
    }
}

/// A transmit beamformer together with the quantities it achieves.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformingSolution {
    /// Transmit matrix `T` (`m × d`).
    pub t: CMatrix,
    /// Stiefel factor `V` with `T = M^{-1/2} V Σ^{1/2}`.
    pub v: CMatrix,
    /// Dual multiplier of the interference constraint; `None` for ZFB.
    pub y: Option<f64>,
    /// `tr(Tᴴ T)`.
    pub power: f64,
    /// `tr(Tᴴ Hₓᴴ Hₓ T)`.
    pub interference: f64,
    /// Eigenvalues of `Tᴴ M T`, descending.
    pub per_stream_snr: Vec<f64>,
    /// Targets the beamformer was built for, descending.
    pub snr_targets: Vec<f64>,
    pub mode: Mode,
    /// Set when the dual search stopped on interval width at a point whose
    /// interference misses the cap by more than the solver tolerance.
    pub tolerance_warning: bool,
}

impl BeamformingSolution {
    /// Builds `T = M^{-1/2} V Σ^{1/2}` and evaluates everything it achieves.
    pub fn from_stiefel(
        derived: &DerivedModel,
        snr: &SnrMatrix,
        v: CMatrix,
        y: Option<f64>,
        mode: Mode,
    ) -> Result<Self> {
        let t = beamformer(derived, &v, snr);
        let power = transmit_power(&t);
        let interference = interference_power(derived, &t);
        let per_stream_snr = stream_snrs(derived, &t)?;
        Ok(Self {
            t,
            v,
            y,
            power,
            interference,
            per_stream_snr,
            snr_targets: snr.values().to_vec(),
            mode,
            tolerance_warning: false,
        })
    }

    pub fn streams(&self) -> usize {
        self.t.ncols()
    }

    pub fn stiefel_residual(&self) -> f64 {
        stiefel_residual(&self.v)
    }

    /// `tr(Σ Vᴴ M⁻¹ V)`, which must agree with [`Self::power`].
    pub fn stiefel_power(&self, derived: &DerivedModel) -> f64 {
        weighted_quadratic_trace(&self.v, derived.m_pinv(), &self.snr_targets)
    }

    /// `tr(Σ Vᴴ Mₓ V)`, which must agree with [`Self::interference`].
    pub fn stiefel_interference(&self, derived: &DerivedModel) -> f64 {
        weighted_quadratic_trace(&self.v, derived.mx(), &self.snr_targets)
    }

    /// Largest relative deviation of the achieved SNRs from the targets.
    pub fn snr_relative_error(&self) -> f64 {
        self.per_stream_snr
            .iter()
            .zip(&self.snr_targets)
            .map(|(got, want)| (got - want).abs() / want)
            .fold(0.0, f64::max)
    }
}

/// `M^{-1/2} V Σ^{1/2}`.
pub fn beamformer(derived: &DerivedModel, v: &CMatrix, snr: &SnrMatrix) -> CMatrix {
    derived.m_inv_sqrt() * v * real_diag(&snr.sqrt_values())
}

/// `tr(Tᴴ T)`.
pub fn transmit_power(t: &CMatrix) -> f64 {
    t.norm_squared()
}

/// `tr(Tᴴ Hₓᴴ Hₓ T) = ‖Hₓ T‖²_F`.
pub fn interference_power(derived: &DerivedModel, t: &CMatrix) -> f64 {
    (&derived.channels().hx * t).norm_squared()
}

/// Eigenvalues of `Tᴴ M T`, descending.
pub fn stream_snrs(derived: &DerivedModel, t: &CMatrix) -> Result<Vec<f64>> {
    let gram = t.adjoint() * derived.m() * t;
    Ok(hermitian_evd(&gram)?.values)
}
