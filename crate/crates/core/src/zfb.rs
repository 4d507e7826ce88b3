//! Closed-form zero-forcing beamformer.
//!
//! Writing `Hₓ = U₁ A₁ V₁` and `V₁ M^{-1/2} = U₂ A₂ V₂`, a Stiefel factor
//! produces zero interference exactly when `V₂ V = 0`. On that subspace the
//! power is `tr(Σ Vᴴ R V)` with `R = Π M⁻¹ Π`, `Π` the projector onto
//! `range(M) ∩ V₂^⊥`, and the optimum takes the `d` eigenvectors of `R`
//! with the smallest nonzero eigenvalues, the largest target on the cheapest
//! direction.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_evd, svd_right, symmetrize, CMatrix};
use crate::model::{DerivedModel, SnrMatrix};
use crate::solution::{BeamformingSolution, Mode};

/// Subspace data of the zero-forcing construction.
#[derive(Debug, Clone)]
pub struct ZfbDecomposition {
    /// Right singular vectors of `Hₓ` as rows (`q × m`).
    pub v1: CMatrix,
    /// Right singular vectors of `V₁ M^{-1/2}` as rows (`q × m`).
    pub v2: CMatrix,
    /// `R = Π M⁻¹ Π` (`m × m`).
    pub r: CMatrix,
    /// Eigenvectors of `R` for its nonzero eigenvalues, ascending (`m × (rank(M) − q)`).
    pub v_r: CMatrix,
    /// Nonzero eigenvalues of `R`, ascending.
    pub lambda_r: Vec<f64>,
    /// Numerical rank of `R`.
    pub rank_r: usize,
}

impl ZfbDecomposition {
    /// Number of interference-free spatial dimensions.
    pub fn free_dims(&self) -> usize {
        self.lambda_r.len()
    }

    /// Beamformer `M^{-1/2} V_R Q Σ^{1/2}` for a Stiefel `Q` of size
    /// `free_dims × d`. `Q = [I_d; 0]` gives the optimum.
    pub fn beamformer_with(
        &self,
        derived: &DerivedModel,
        snr: &SnrMatrix,
        q: &CMatrix,
    ) -> Result<BeamformingSolution> {
        if q.nrows() != self.free_dims() || q.ncols() != snr.len() {
            return Err(Error::Config(format!(
                "Q must be {}x{}, got {}x{}",
                self.free_dims(),
                snr.len(),
                q.nrows(),
                q.ncols()
            )));
        }
        BeamformingSolution::from_stiefel(derived, snr, &self.v_r * q, None, Mode::Zfb)
    }
}

/// Computes the zero-forcing subspace decomposition.
pub fn decompose(derived: &DerivedModel) -> Result<ZfbDecomposition> {
    let hx = &derived.channels().hx;
    let q = hx.nrows();
    let rank_m = derived.rank_m();
    if q >= rank_m {
        return Err(Error::InsufficientNullSpace {
            free_dims: 0,
            streams: 1,
        });
    }

    let (s1, v1) = svd_right(hx)?;
    let tol1 = crate::linalg::rank_tolerance(s1[0], hx.nrows().max(hx.ncols()));
    let rank_hx = s1.iter().filter(|&&s| s > tol1).count();
    if rank_hx < q {
        return Err(Error::Rank {
            streams: q,
            available: rank_hx,
        });
    }

    let projected = &v1 * derived.m_inv_sqrt();
    let (s2, v2) = svd_right(&projected)?;
    let tol2 = crate::linalg::rank_tolerance(s2[0], projected.ncols());
    let rank_projected = s2.iter().filter(|&&s| s > tol2).count();
    if rank_projected < q {
        // The projected channel lost rank: the split into V₂ and its
        // complement is not well defined.
        return Err(Error::Rank {
            streams: q,
            available: rank_projected,
        });
    }

    // Π = P_range(M) − V₂ᴴ V₂; its eigenvalues are exactly 0 or 1.
    let pi = symmetrize(&(derived.range_projector() - v2.adjoint() * &v2));
    let pi_evd = hermitian_evd(&pi)?;
    let free = pi_evd.values.iter().filter(|&&v| v > 0.5).count();
    let basis = pi_evd.vectors.columns(0, free).into_owned();

    let r = symmetrize(&(&pi * derived.m_pinv() * &pi));
    let rank_r = hermitian_evd(&r)?.rank();

    // Diagonalize M⁻¹ on the free subspace directly so that V_R stays
    // orthogonal to V₂ to machine precision.
    let reduced = symmetrize(&(basis.adjoint() * derived.m_pinv() * &basis));
    let reduced_evd = hermitian_evd(&reduced)?;
    let mut v_r = CMatrix::zeros(derived.m_dim(), free);
    let mut lambda_r = Vec::with_capacity(free);
    for (dst, src) in (0..free).rev().enumerate() {
        v_r.set_column(dst, &(&basis * reduced_evd.vectors.column(src)));
        lambda_r.push(reduced_evd.values[src]);
    }
    if let Some(&smallest) = lambda_r.first() {
        if smallest <= 0.0 {
            return Err(Error::NumericalFailure(format!(
                "non-positive eigenvalue {smallest:e} on the zero-forcing subspace"
            )));
        }
    }

    Ok(ZfbDecomposition {
        v1,
        v2,
        r,
        v_r,
        lambda_r,
        rank_r,
    })
}

/// Minimum-power zero-forcing beamformer.
pub fn solve_zfb(derived: &DerivedModel, snr: &SnrMatrix) -> Result<BeamformingSolution> {
    let d = snr.len();
    derived.require_streams(d)?;
    let q = derived.channels().q();
    let free_dims = derived.rank_m().saturating_sub(q);
    if free_dims < d {
        return Err(Error::InsufficientNullSpace {
            free_dims,
            streams: d,
        });
    }
    let decomposition = decompose(derived)?;
    if decomposition.free_dims() < d {
        return Err(Error::InsufficientNullSpace {
            free_dims: decomposition.free_dims(),
            streams: d,
        });
    }
    let v = decomposition.v_r.columns(0, d).into_owned();
    BeamformingSolution::from_stiefel(derived, snr, v, None, Mode::Zfb)
}

/// `Σᵢ ρᵢ λ_R,i`: the zero-forcing power read off the decomposition.
pub fn zfb_power(decomposition: &ZfbDecomposition, snr: &SnrMatrix) -> f64 {
    snr.values()
        .iter()
        .zip(&decomposition.lambda_r)
        .map(|(rho, lambda)| rho * lambda)
        .sum()
}

/// Block structure of the optimal `Q` family: one unitary block per run of
/// equal SNR targets.
#[derive(Debug, Clone, PartialEq)]
pub struct QFamily {
    /// Sizes `n₁, …, n_K` of the blocks, summing to `d`.
    pub block_sizes: Vec<usize>,
    /// Distinct SNR level of each block, descending.
    pub levels: Vec<f64>,
}

impl QFamily {
    pub fn streams(&self) -> usize {
        self.block_sizes.iter().sum()
    }

    /// Stacks `blockdiag(Q₁, …, Q_K)` on top of zero rows to form a
    /// `rows × d` member of the family. Each block must be unitary with the
    /// matching size.
    pub fn assemble(&self, blocks: &[CMatrix], rows: usize) -> Result<CMatrix> {
        let d = self.streams();
        if blocks.len() != self.block_sizes.len() {
            return Err(Error::Config(format!(
                "expected {} blocks, got {}",
                self.block_sizes.len(),
                blocks.len()
            )));
        }
        if rows < d {
            return Err(Error::Config(format!("{rows} rows cannot hold {d} streams")));
        }
        let mut q = CMatrix::zeros(rows, d);
        let mut offset = 0;
        for (block, &size) in blocks.iter().zip(&self.block_sizes) {
            if block.shape() != (size, size) {
                return Err(Error::Config(format!(
                    "block of size {size} expected, got {:?}",
                    block.shape()
                )));
            }
            if crate::linalg::stiefel_residual(block) > 1e-10 {
                return Err(Error::Config("block is not unitary".into()));
            }
            q.view_mut((offset, offset), (size, size)).copy_from(block);
            offset += size;
        }
        Ok(q)
    }

    /// Diagonal member with the given phases, one per stream.
    pub fn diagonal_member(&self, phases: &[f64], rows: usize) -> Result<CMatrix> {
        let d = self.streams();
        if phases.len() != d || rows < d {
            return Err(Error::Config("phase vector does not match the stream count".into()));
        }
        let mut q = CMatrix::zeros(rows, d);
        for (i, &theta) in phases.iter().enumerate() {
            q[(i, i)] = Complex64::from_polar(1.0, theta);
        }
        Ok(q)
    }
}

/// Partitions the descending targets into runs of equal value.
pub fn zfb_q_family(snr: &SnrMatrix) -> QFamily {
    let mut block_sizes = Vec::new();
    let mut levels: Vec<f64> = Vec::new();
    for &rho in snr.values() {
        match levels.last() {
            Some(&level) if (level - rho).abs() <= 1e-12 * level.max(rho) => {
                *block_sizes.last_mut().unwrap() += 1;
            }
            _ => {
                levels.push(rho);
                block_sizes.push(1);
            }
        }
    }
    QFamily {
        block_sizes,
        levels,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{random_stiefel, stiefel_residual};
    use crate::model::{build_derived, complex_from_real, sample_channels, ChannelSet, ScenarioConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_effective_channel_example() {
        // H = I₃, P_p = 0  =>  M = I₃; Hₓ = [1 0 0]
        let ch = ChannelSet::new(
            CMatrix::identity(3, 3),
            complex_from_real(1, 3, &[1.0, 0.0, 0.0]),
            CMatrix::zeros(3, 1),
        )
        .unwrap();
        let dm = DerivedModel::new(ch, 0.0).unwrap();
        let snr = SnrMatrix::new(vec![2.0, 1.0]).unwrap();
        let dec = decompose(&dm).unwrap();
        let want_r = complex_from_real(3, 3, &[0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        assert!((&dec.r - want_r).norm() < 1e-14);
        assert_eq!(dec.rank_r, 2);

        let sol = solve_zfb(&dm, &snr).unwrap();
        assert!((sol.power - 3.0).abs() < 1e-12);
        assert!(sol.interference < 1e-28);
        // First column has norm √2, second norm 1, neither touches e₁.
        let c0 = sol.t.column(0).norm();
        let c1 = sol.t.column(1).norm();
        assert!((c0 - 2f64.sqrt()).abs() < 1e-12);
        assert!((c1 - 1.0).abs() < 1e-12);
        assert!(sol.t.row(0).norm() < 1e-14);
        // The two columns point along different unit axes.
        let axis = |k: usize| {
            (1..3)
                .find(|&i| sol.t[(i, k)].norm() > 0.5)
                .expect("column aligned with an axis")
        };
        assert_ne!(axis(0), axis(1));
    }

    #[test]
    fn zero_forcing_on_random_channels() {
        let c = ScenarioConfig::new(5, 5, 2, 2, 3, 1.0, 0.0, vec![4.0, 2.0, 1.0], 17).unwrap();
        for k in 0..100 {
            let dm = build_derived(&sample_channels(&c, k).unwrap(), &c).unwrap();
            let dec = decompose(&dm).unwrap();
            assert!((&dec.v2 * &dec.v_r).norm() < 1e-10);
            assert_eq!(dec.rank_r, 3);
            assert!(dec.lambda_r.windows(2).all(|w| w[0] <= w[1]));
            let sol = solve_zfb(&dm, &c.snr()).unwrap();
            let hx = &dm.channels().hx;
            assert!((hx * &sol.t).norm() <= 1e-10 * hx.norm() * sol.t.norm());
            assert!(sol.snr_relative_error() < 1e-8);
            assert!(stiefel_residual(&sol.v) < 1e-10);
            assert!((sol.power - zfb_power(&dec, &c.snr())).abs() < 1e-9 * sol.power);
            assert!((sol.power - sol.stiefel_power(&dm)).abs() < 1e-8 * sol.power);
        }
    }

    #[test]
    fn rejects_too_few_free_dimensions() {
        let c = ScenarioConfig::new(5, 5, 2, 2, 4, 1.0, 0.0, vec![1.0; 4], 1).unwrap();
        let dm = build_derived(&sample_channels(&c, 0).unwrap(), &c).unwrap();
        assert!(matches!(
            solve_zfb(&dm, &c.snr()),
            Err(Error::InsufficientNullSpace { free_dims: 3, streams: 4 })
        ));
    }

    #[test]
    fn rank_deficient_effective_channel() {
        // m = 5 > n = 3: rank(M) = 3, q = 1 leaves two free directions.
        let c = ScenarioConfig::new(5, 3, 2, 1, 2, 1.0, 0.0, vec![2.0, 1.0], 4).unwrap();
        for k in 0..20 {
            let dm = build_derived(&sample_channels(&c, k).unwrap(), &c).unwrap();
            let sol = solve_zfb(&dm, &c.snr()).unwrap();
            let hx = &dm.channels().hx;
            assert!((hx * &sol.t).norm() <= 1e-10 * hx.norm() * sol.t.norm());
            assert!(sol.snr_relative_error() < 1e-8);
        }
        let c3 = ScenarioConfig::new(5, 3, 2, 1, 3, 1.0, 0.0, vec![1.0; 3], 4).unwrap();
        let dm = build_derived(&sample_channels(&c3, 0).unwrap(), &c3).unwrap();
        assert!(matches!(
            solve_zfb(&dm, &c3.snr()),
            Err(Error::InsufficientNullSpace { .. })
        ));
    }

    #[test]
    fn q_family_partitions() {
        let fam = zfb_q_family(&SnrMatrix::new(vec![3.0, 3.0, 1.0, 1.0]).unwrap());
        assert_eq!(fam.block_sizes, vec![2, 2]);
        let fam = zfb_q_family(&SnrMatrix::new(vec![4.0, 3.0, 2.0]).unwrap());
        assert_eq!(fam.block_sizes, vec![1, 1, 1]);
        let fam = zfb_q_family(&SnrMatrix::new(vec![5.0; 3]).unwrap());
        assert_eq!(fam.block_sizes, vec![3]);
    }

    #[test]
    fn q_family_members_preserve_power_and_interference() {
        let c = ScenarioConfig::new(5, 5, 2, 2, 3, 1.0, 0.0, vec![4.0, 4.0, 1.0], 21).unwrap();
        let snr = c.snr();
        let fam = zfb_q_family(&snr);
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let dm = build_derived(&sample_channels(&c, 0).unwrap(), &c).unwrap();
        let dec = decompose(&dm).unwrap();
        let best = solve_zfb(&dm, &snr).unwrap();
        for _ in 0..100 {
            let blocks: Vec<CMatrix> = fam
                .block_sizes
                .iter()
                .map(|&s| random_stiefel(&mut rng, s, s))
                .collect();
            let q = fam.assemble(&blocks, dec.free_dims()).unwrap();
            let sol = dec.beamformer_with(&dm, &snr, &q).unwrap();
            assert!((sol.power - best.power).abs() < 1e-10 * best.power);
            assert!(sol.interference < 1e-20);
        }
        let diag = fam.diagonal_member(&[0.3, -1.2, 2.0], dec.free_dims()).unwrap();
        let sol = dec.beamformer_with(&dm, &snr, &diag).unwrap();
        assert!((sol.power - best.power).abs() < 1e-10 * best.power);
    }

    #[test]
    fn q_outside_family_costs_more() {
        let c = ScenarioConfig::new(5, 5, 2, 2, 2, 1.0, 0.0, vec![4.0, 1.0], 23).unwrap();
        let snr = c.snr();
        let dm = build_derived(&sample_channels(&c, 0).unwrap(), &c).unwrap();
        let dec = decompose(&dm).unwrap();
        let best = solve_zfb(&dm, &snr).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let q = random_stiefel(&mut rng, dec.free_dims(), 2);
            let sol = dec.beamformer_with(&dm, &snr, &q).unwrap();
            assert!(sol.power >= best.power * (1.0 - 1e-12));
            assert!(sol.interference < 1e-20);
        }
    }
}
