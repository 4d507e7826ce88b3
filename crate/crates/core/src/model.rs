//! Scenario and channel data, plus the derived matrices every solver consumes.
//!
//! With `W = P_p·Gₓ·Gₓᴴ + Iₙ` the interference-plus-noise covariance at the
//! secondary receiver, the effective channel is `M = Hᴴ W⁻¹ H` and the
//! whitened cross channel is `Mₓ = M^{-1/2} Hₓᴴ Hₓ M^{-1/2}`. Any beamformer
//! meeting the per-stream SNR targets `Σ` exactly can be written as
//! `T = M^{-1/2} V Σ^{1/2}` with `V` on the Stiefel manifold restricted to
//! `range(M)`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    complex_gaussian, hermitian_evd, matrix_rank, symmetrize, CMatrix, HermitianEigen, PsdExponent,
};

/// Antenna counts, stream count, power levels, SNR targets and RNG seed of
/// one scenario. All quantities are linear scale.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    m: usize,
    n: usize,
    p: usize,
    q: usize,
    d: usize,
    primary_power: f64,
    xi: f64,
    snr_targets: Vec<f64>,
    seed: u64,
    #[serde(skip)]
    permutation: Vec<usize>,
}

impl ScenarioConfig {
    /// Validates the scenario and sorts `snr_targets` into non-increasing
    /// order. The original index of each sorted target is kept in
    /// [`ScenarioConfig::permutation`].
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        m: usize,
        n: usize,
        p: usize,
        q: usize,
        d: usize,
        primary_power: f64,
        xi: f64,
        snr_targets: Vec<f64>,
        seed: u64,
    ) -> Result<Self> {
        if m == 0 || n == 0 || p == 0 || q == 0 || d == 0 {
            return Err(Error::Config(format!(
                "antenna and stream counts must be >= 1 (m={m}, n={n}, p={p}, q={q}, d={d})"
            )));
        }
        if d > m.min(n) {
            return Err(Error::Config(format!(
                "d={d} streams exceed min(m, n)={}",
                m.min(n)
            )));
        }
        if !(primary_power >= 0.0 && primary_power.is_finite()) {
            return Err(Error::Config(format!(
                "primary power must be finite and >= 0, got {primary_power}"
            )));
        }
        if xi.is_nan() || xi < 0.0 {
            return Err(Error::Config(format!("interference cap must be >= 0, got {xi}")));
        }
        if snr_targets.len() != d {
            return Err(Error::Config(format!(
                "expected {d} SNR targets, got {}",
                snr_targets.len()
            )));
        }
        if let Some(bad) = snr_targets.iter().find(|&&r| !(r > 0.0 && r.is_finite())) {
            return Err(Error::Config(format!("SNR targets must be finite and > 0, got {bad}")));
        }
        let mut permutation: Vec<usize> = (0..d).collect();
        permutation.sort_by(|&i, &j| snr_targets[j].total_cmp(&snr_targets[i]));
        let sorted = permutation.iter().map(|&i| snr_targets[i]).collect();
        Ok(Self {
            m,
            n,
            p,
            q,
            d,
            primary_power,
            xi,
            snr_targets: sorted,
            seed,
            permutation,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn p(&self) -> usize {
        self.p
    }
    pub fn q(&self) -> usize {
        self.q
    }
    pub fn d(&self) -> usize {
        self.d
    }
    pub fn primary_power(&self) -> f64 {
        self.primary_power
    }
    pub fn xi(&self) -> f64 {
        self.xi
    }
    /// SNR targets, largest first.
    pub fn snr_targets(&self) -> &[f64] {
        &self.snr_targets
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }
    /// `permutation()[k]` is the caller's index of the `k`-th sorted target.
    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    pub fn with_xi(&self, xi: f64) -> Result<Self> {
        self.rebuild(self.d, xi, self.snr_targets.clone(), self.seed)
    }

    pub fn with_snr_targets(&self, snr_targets: Vec<f64>) -> Result<Self> {
        self.rebuild(snr_targets.len(), self.xi, snr_targets, self.seed)
    }

    pub fn with_seed(&self, seed: u64) -> Result<Self> {
        self.rebuild(self.d, self.xi, self.snr_targets.clone(), seed)
    }

    fn rebuild(&self, d: usize, xi: f64, snr: Vec<f64>, seed: u64) -> Result<Self> {
        Self::new(self.m, self.n, self.p, self.q, d, self.primary_power, xi, snr, seed)
    }

    pub fn snr(&self) -> SnrMatrix {
        SnrMatrix(self.snr_targets.clone())
    }
}

/// Diagonal of the per-stream SNR matrix `Σ`, strictly positive and descending.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SnrMatrix(Vec<f64>);

impl SnrMatrix {
    /// Sorts `values` descending after checking that each is finite and positive.
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Config("at least one SNR target is required".into()));
        }
        if let Some(bad) = values.iter().find(|&&r| !(r > 0.0 && r.is_finite())) {
            return Err(Error::Config(format!("SNR targets must be finite and > 0, got {bad}")));
        }
        values.sort_by(|a, b| b.total_cmp(a));
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sqrt_values(&self) -> Vec<f64> {
        self.0.iter().map(|r| r.sqrt()).collect()
    }
}

/// The three channel matrices of one link realization.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    /// ST → SR, `n × m`.
    pub h: CMatrix,
    /// ST → PR, `q × m`.
    pub hx: CMatrix,
    /// PT → SR, `n × p`.
    pub gx: CMatrix,
}

impl ChannelSet {
    /// Wraps the matrices after checking that their shapes agree.
    pub fn new(h: CMatrix, hx: CMatrix, gx: CMatrix) -> Result<Self> {
        let (n, m) = h.shape();
        if hx.ncols() != m {
            return Err(Error::Config(format!(
                "Hx has {} columns but H has {m}",
                hx.ncols()
            )));
        }
        if gx.nrows() != n {
            return Err(Error::Config(format!("Gx has {} rows but H has {n}", gx.nrows())));
        }
        Ok(Self { h, hx, gx })
    }

    pub fn m(&self) -> usize {
        self.h.ncols()
    }
    pub fn n(&self) -> usize {
        self.h.nrows()
    }
    pub fn p(&self) -> usize {
        self.gx.ncols()
    }
    pub fn q(&self) -> usize {
        self.hx.nrows()
    }

    /// Checks the shapes against a scenario.
    pub fn check_dimensions(&self, config: &ScenarioConfig) -> Result<()> {
        let got = (self.m(), self.n(), self.p(), self.q());
        let want = (config.m(), config.n(), config.p(), config.q());
        if got != want {
            return Err(Error::Config(format!(
                "channel dimensions (m, n, p, q) = {got:?} do not match scenario {want:?}"
            )));
        }
        Ok(())
    }

    /// True when every matrix has full rank under the numerical rank rule.
    pub fn is_full_rank(&self) -> Result<bool> {
        for a in [&self.h, &self.hx, &self.gx] {
            if matrix_rank(a)? < a.nrows().min(a.ncols()) {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Draws `H`, `Hₓ` and `Gₓ` with i.i.d. `CN(0, 1)` entries.
///
/// The draw depends only on `(config.seed(), stream_index)`: the generator is
/// ChaCha20 seeded from the scenario seed with `stream_index` selecting the
/// stream, so parallel Monte-Carlo trials reproduce regardless of scheduling.
pub fn sample_channels(config: &ScenarioConfig, stream_index: u64) -> Result<ChannelSet> {
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed());
    rng.set_stream(stream_index);
    for _attempt in 0..2 {
        let h = complex_gaussian(&mut rng, config.n(), config.m());
        let hx = complex_gaussian(&mut rng, config.q(), config.m());
        let gx = complex_gaussian(&mut rng, config.n(), config.p());
        let set = ChannelSet { h, hx, gx };
        if set.is_full_rank()? {
            return Ok(set);
        }
        log::warn!("rank-deficient channel draw for stream {stream_index}, redrawing");
    }
    Err(Error::NumericalFailure(format!(
        "channel draw for stream {stream_index} rank-deficient twice"
    )))
}

/// `W`, `M`, `Mₓ` and their cached spectral data.
#[derive(Debug, Clone)]
pub struct DerivedModel {
    channels: ChannelSet,
    primary_power: f64,
    w: CMatrix,
    m_eff: CMatrix,
    mx: CMatrix,
    m_evd: HermitianEigen,
    mx_evd: HermitianEigen,
    m_inv_sqrt: CMatrix,
    m_pinv: CMatrix,
    rank_m: usize,
    range_basis: CMatrix,
    mx_range_values: Vec<f64>,
}

/// Builds the derived matrices for one channel realization.
pub fn build_derived(channels: &ChannelSet, config: &ScenarioConfig) -> Result<DerivedModel> {
    channels.check_dimensions(config)?;
    DerivedModel::new(channels.clone(), config.primary_power())
}

impl DerivedModel {
    /// Builds the model directly from channels and the primary transmit power.
    pub fn new(channels: ChannelSet, primary_power: f64) -> Result<Self> {
        let n = channels.n();
        let m = channels.m();
        let pp = Complex64::new(primary_power, 0.0);
        let w = symmetrize(&(&channels.gx * channels.gx.adjoint() * pp + CMatrix::identity(n, n)));

        let w_inv_h = w
            .clone()
            .cholesky()
            .ok_or_else(|| Error::NumericalFailure("W is not positive definite".into()))?
            .solve(&channels.h);
        let m_eff = symmetrize(&(channels.h.adjoint() * w_inv_h));

        let m_evd = hermitian_evd(&m_eff)?;
        let rank_m = m_evd.rank();
        let m_inv_sqrt = m_evd.power(PsdExponent::InvSqrt);
        let m_pinv = m_evd.power(PsdExponent::Inverse);
        let range_basis = if rank_m == m {
            CMatrix::identity(m, m)
        } else {
            m_evd.range_basis()
        };

        let cross_root = &m_inv_sqrt * channels.hx.adjoint();
        let mx = symmetrize(&(&cross_root * cross_root.adjoint()));
        let mx_evd = hermitian_evd(&mx)?;
        let mx_range_values = if rank_m == m {
            mx_evd.clamped_values()
        } else {
            let reduced = range_basis.adjoint() * &mx * &range_basis;
            hermitian_evd(&reduced)?.clamped_values()
        };

        Ok(Self {
            channels,
            primary_power,
            w,
            m_eff,
            mx,
            m_evd,
            mx_evd,
            m_inv_sqrt,
            m_pinv,
            rank_m,
            range_basis,
            mx_range_values,
        })
    }

    pub fn channels(&self) -> &ChannelSet {
        &self.channels
    }
    pub fn primary_power(&self) -> f64 {
        self.primary_power
    }
    /// Interference-plus-noise covariance `W` (`n × n`).
    pub fn w(&self) -> &CMatrix {
        &self.w
    }
    /// Effective channel `M = Hᴴ W⁻¹ H` (`m × m`).
    pub fn m(&self) -> &CMatrix {
        &self.m_eff
    }
    /// Whitened cross channel `Mₓ` (`m × m`).
    pub fn mx(&self) -> &CMatrix {
        &self.mx
    }
    pub fn m_evd(&self) -> &HermitianEigen {
        &self.m_evd
    }
    pub fn mx_evd(&self) -> &HermitianEigen {
        &self.mx_evd
    }
    /// Pseudo-inverse square root `M^{-1/2}`.
    pub fn m_inv_sqrt(&self) -> &CMatrix {
        &self.m_inv_sqrt
    }
    /// Pseudo-inverse `M⁻¹`.
    pub fn m_pinv(&self) -> &CMatrix {
        &self.m_pinv
    }
    pub fn rank_m(&self) -> usize {
        self.rank_m
    }
    /// Orthonormal basis of `range(M)` as columns (`m × rank(M)`); the
    /// identity when `M` has full rank.
    pub fn range_basis(&self) -> &CMatrix {
        &self.range_basis
    }
    /// Eigenvalues of `Mₓ` restricted to `range(M)`, descending, with values
    /// under the rank tolerance clamped to zero. Equal to the full spectrum
    /// of `Mₓ` whenever `M` has full rank.
    pub fn mx_range_eigenvalues(&self) -> &[f64] {
        &self.mx_range_values
    }
    pub fn m_dim(&self) -> usize {
        self.channels.m()
    }

    /// Errors unless `d` streams fit into `range(M)`.
    pub fn require_streams(&self, d: usize) -> Result<()> {
        if d > self.rank_m {
            return Err(Error::Rank {
                streams: d,
                available: self.rank_m,
            });
        }
        Ok(())
    }

    /// Orthogonal projector onto `range(M)`.
    pub fn range_projector(&self) -> CMatrix {
        &self.range_basis * self.range_basis.adjoint()
    }

    /// `Hₓᴴ Hₓ`.
    pub fn cross_gram(&self) -> CMatrix {
        symmetrize(&(self.channels.hx.adjoint() * &self.channels.hx))
    }
}

/// Convenience: a real matrix lifted to complex entries.
pub fn complex_from_real(rows: usize, cols: usize, data: &[f64]) -> CMatrix {
    DMatrix::from_row_iterator(rows, cols, data.iter().map(|&x| Complex64::new(x, 0.0)))
}
