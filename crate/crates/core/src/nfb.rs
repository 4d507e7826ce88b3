//! Nonzero-forcing beamformer via the one-dimensional Lagrange dual.
//!
//! For a multiplier `y ≥ 0` the Lagrangian
//! `tr(Σ Vᴴ (M⁻¹ + y Mₓ) V) − y ξ` is minimized by the eigenvectors of
//! `M⁻¹ + y Mₓ` with the `d` smallest eigenvalues, the largest target taking
//! the smallest eigenvalue. Along that family the transmit power grows and
//! the interference shrinks monotonically in `y`, so the optimal multiplier
//! is the smallest `y` whose interference meets the cap, found here by
//! bracketing and bisection.
//!
//! When `M` is singular every spectrum is taken on `range(M)`.

use crate::error::{Error, Result};
use crate::feasibility::xi_min;
use crate::linalg::{hermitian_evd, symmetrize, weighted_quadratic_trace, CMatrix};
use crate::model::{DerivedModel, SnrMatrix};
use crate::solution::{BeamformingSolution, Mode};
use num_complex::Complex64;

const BRACKET_START: f64 = 1.0;
const BRACKET_LIMIT: f64 = 1e12;
const WIDTH_RTOL: f64 = 1e-14;
/// Relative distance below the cap at which bisection stops.
const TARGET_RTOL: f64 = 1e-10;
const MAX_BISECTIONS: usize = 400;

/// `M⁻¹` and `Mₓ` restricted to `range(M)`, ready to be combined for any `y`.
#[derive(Debug, Clone)]
pub struct DualPencil<'a> {
    derived: &'a DerivedModel,
    weights: Vec<f64>,
    inv: CMatrix,
    cross: CMatrix,
}

/// Minimizer of the Lagrangian at one multiplier.
#[derive(Debug, Clone)]
pub struct DualPoint {
    pub y: f64,
    /// `V_y` (`m × d`).
    pub v: CMatrix,
    /// Eigenvalues of `M⁻¹ + y Mₓ` on `range(M)`, ascending.
    pub eigenvalues: Vec<f64>,
    /// `tr(Σ V_yᴴ M⁻¹ V_y)`.
    pub power: f64,
    /// `tr(Σ V_yᴴ Mₓ V_y)`.
    pub interference: f64,
}

impl DualPoint {
    /// Lagrange dual function `g(y) = Σ ρᵢ λᵢ − y ξ`.
    pub fn dual_value(&self, weights: &[f64], xi: f64) -> f64 {
        weights
            .iter()
            .zip(&self.eigenvalues)
            .map(|(w, l)| w * l)
            .sum::<f64>()
            - self.y * xi
    }
}

impl<'a> DualPencil<'a> {
    pub fn new(derived: &'a DerivedModel, snr: &SnrMatrix) -> Result<Self> {
        derived.require_streams(snr.len())?;
        let basis = derived.range_basis();
        let inv = symmetrize(&(basis.adjoint() * derived.m_pinv() * basis));
        let cross = symmetrize(&(basis.adjoint() * derived.mx() * basis));
        Ok(Self {
            derived,
            weights: snr.values().to_vec(),
            inv,
            cross,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Evaluates `V_y` and the traces it produces.
    pub fn at(&self, y: f64) -> Result<DualPoint> {
        if !y.is_finite() || y < 0.0 {
            return Err(Error::Config(format!("dual multiplier must be finite and >= 0, got {y}")));
        }
        // (M⁻¹ + y Mₓ)/(1 + y) has the same eigenvectors and stays O(1) for large y.
        let alpha = 1.0 / (1.0 + y);
        let pencil = &self.inv * Complex64::new(alpha, 0.0) + &self.cross * Complex64::new(y * alpha, 0.0);
        let evd = hermitian_evd(&pencil)?;
        let r = evd.dim();
        let d = self.weights.len();

        let mut reduced_v = CMatrix::zeros(r, d);
        for i in 0..d {
            reduced_v.set_column(i, &evd.vectors.column(r - 1 - i));
        }
        let eigenvalues: Vec<f64> = evd.values.iter().rev().map(|l| l * (1.0 + y)).collect();
        let power = weighted_quadratic_trace(&reduced_v, &self.inv, &self.weights);
        let interference = weighted_quadratic_trace(&reduced_v, &self.cross, &self.weights);
        let v = self.derived.range_basis() * reduced_v;
        Ok(DualPoint {
            y,
            v,
            eigenvalues,
            power,
            interference,
        })
    }
}

/// `V_y` and the ascending eigenvalues of `M⁻¹ + y Mₓ` on `range(M)`.
pub fn v_of_y(derived: &DerivedModel, snr: &SnrMatrix, y: f64) -> Result<(CMatrix, Vec<f64>)> {
    let point = DualPencil::new(derived, snr)?.at(y)?;
    Ok((point.v, point.eigenvalues))
}

/// Transmit power and interference produced by `V_y`.
pub fn power_and_interference_at(derived: &DerivedModel, snr: &SnrMatrix, y: f64) -> Result<(f64, f64)> {
    let point = DualPencil::new(derived, snr)?.at(y)?;
    Ok((point.power, point.interference))
}

/// Dual function `g(y)`.
pub fn lagrangian_dual(derived: &DerivedModel, snr: &SnrMatrix, xi: f64, y: f64) -> Result<f64> {
    let pencil = DualPencil::new(derived, snr)?;
    Ok(pencil.at(y)?.dual_value(pencil.weights(), xi))
}

/// Minimum power without the interference constraint: `Σ ρᵢ / μᵢ` with
/// `μ₁ ≥ μ₂ ≥ …` the largest eigenvalues of `M`.
pub fn lower_bound_power(derived: &DerivedModel, snr: &SnrMatrix) -> Result<f64> {
    derived.require_streams(snr.len())?;
    Ok(snr
        .values()
        .iter()
        .zip(&derived.m_evd().values)
        .map(|(rho, mu)| rho / mu)
        .sum())
}

/// Interference tolerance the returned solution is held to.
pub fn interference_tolerance(xi: f64) -> f64 {
    1e-8f64.max(1e-6 * xi)
}

/// Minimum-power beamformer with interference at most `xi`.
pub fn solve_nfb(derived: &DerivedModel, snr: &SnrMatrix, xi: f64) -> Result<BeamformingSolution> {
    if xi.is_nan() || xi < 0.0 {
        return Err(Error::Config(format!("interference cap must be >= 0, got {xi}")));
    }
    let report = xi_min(derived, snr, xi)?;
    if report.slack < -1e-12 * report.xi_min {
        return Err(Error::Infeasible {
            xi,
            xi_min: report.xi_min,
        });
    }

    let pencil = DualPencil::new(derived, snr)?;
    let at_zero = pencil.at(0.0)?;
    if at_zero.interference <= xi {
        return finish(derived, snr, at_zero, false);
    }

    let spec_tol = interference_tolerance(xi);
    let mut lo = 0.0;
    let mut hi = BRACKET_START;
    let mut upper = pencil.at(hi)?;
    while upper.interference > xi {
        if hi >= BRACKET_LIMIT {
            if upper.interference - xi <= spec_tol {
                return finish(derived, snr, upper, true);
            }
            return Err(Error::Tolerance(format!(
                "interference {:.6e} still above cap {xi:.6e} at y = {hi:e}",
                upper.interference
            )));
        }
        lo = hi;
        hi *= 2.0;
        upper = pencil.at(hi)?;
    }

    let goal = TARGET_RTOL * xi;
    let mut stalled = false;
    for _ in 0..MAX_BISECTIONS {
        if xi - upper.interference <= goal {
            break;
        }
        if hi - lo <= WIDTH_RTOL * hi {
            stalled = true;
            break;
        }
        let mid = if lo > 0.0 && hi / lo > 4.0 {
            (lo * hi).sqrt()
        } else {
            0.5 * (lo + hi)
        };
        let point = pencil.at(mid)?;
        if point.interference <= xi {
            hi = mid;
            upper = point;
        } else {
            lo = mid;
        }
    }
    let warn = stalled && xi - upper.interference > spec_tol;
    if warn {
        log::warn!(
            "dual bisection stalled at y = {hi:e}; interference {:.6e} vs cap {xi:.6e}",
            upper.interference
        );
    }
    finish(derived, snr, upper, warn)
}

fn finish(
    derived: &DerivedModel,
    snr: &SnrMatrix,
    point: DualPoint,
    tolerance_warning: bool,
) -> Result<BeamformingSolution> {
    let mut sol = BeamformingSolution::from_stiefel(derived, snr, point.v, Some(point.y), Mode::Nfb)?;
    sol.tolerance_warning = tolerance_warning;
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{real_diag, stiefel_residual};
    use crate::model::{build_derived, sample_channels, ChannelSet, ScenarioConfig};

    /// Model with `M = diag(m_diag)` and `Mₓ = diag(mx_diag)` exactly.
    fn diagonal_model(m_diag: &[f64], mx_diag: &[f64]) -> DerivedModel {
        let h = real_diag(&m_diag.iter().map(|v| v.sqrt()).collect::<Vec<_>>());
        // Mₓ = M^{-1/2} HₓᴴHₓ M^{-1/2}  =>  Hₓ = diag(sqrt(mx · m))
        let hx = real_diag(
            &mx_diag
                .iter()
                .zip(m_diag)
                .map(|(x, m)| (x * m).sqrt())
                .collect::<Vec<_>>(),
        );
        let gx = CMatrix::zeros(m_diag.len(), 1);
        DerivedModel::new(ChannelSet::new(h, hx, gx).unwrap(), 0.0).unwrap()
    }

    #[test]
    fn v_at_zero_takes_strongest_eigenmode() {
        let dm = diagonal_model(&[4.0, 1.0], &[0.1, 3.0]);
        let snr = SnrMatrix::new(vec![2.0]).unwrap();
        let (v, eig) = v_of_y(&dm, &snr, 0.0).unwrap();
        assert!((v[(0, 0)].norm() - 1.0).abs() < 1e-12);
        assert!((eig[0] - 0.25).abs() < 1e-12);
        let (power, interference) = power_and_interference_at(&dm, &snr, 0.0).unwrap();
        assert!((power - 0.5).abs() < 1e-12);
        assert!((interference - 0.2).abs() < 1e-12);
    }

    #[test]
    fn isotropic_lagrangian() {
        let dm = diagonal_model(&[1.0; 3], &[1.0; 3]);
        let snr = SnrMatrix::new(vec![2.0, 1.0]).unwrap();
        for y in [0.0, 0.5, 3.0] {
            let (v, _) = v_of_y(&dm, &snr, y).unwrap();
            assert!(stiefel_residual(&v) < 1e-12);
            let g = lagrangian_dual(&dm, &snr, 0.7, y).unwrap();
            assert!((g - ((1.0 + y) * 3.0 - y * 0.7)).abs() < 1e-12);
        }
    }

    #[test]
    fn large_multiplier_drives_interference_to_xi_min() {
        let c = ScenarioConfig::new(5, 5, 2, 2, 2, 1.0, 0.0, vec![3.0, 1.0], 12).unwrap();
        let dm = build_derived(&sample_channels(&c, 0).unwrap(), &c).unwrap();
        let (_, interference) = power_and_interference_at(&dm, &c.snr(), 1e9).unwrap();
        assert!(interference < 1e-6);
    }

    #[test]
    fn inactive_constraint_gives_zero_multiplier() {
        let dm = diagonal_model(&[1.0; 3], &[1.0; 3]);
        let snr = SnrMatrix::new(vec![2.0]).unwrap();
        let sol = solve_nfb(&dm, &snr, 5.0).unwrap();
        assert_eq!(sol.y, Some(0.0));
        assert!((sol.power - 2.0).abs() < 1e-12);
        assert!((sol.interference - 2.0).abs() < 1e-12);
    }

    #[test]
    fn cap_below_xi_min_is_infeasible() {
        let dm = diagonal_model(&[1.0; 3], &[1.0; 3]);
        let snr = SnrMatrix::new(vec![2.0]).unwrap();
        match solve_nfb(&dm, &snr, 1.0) {
            Err(Error::Infeasible { xi_min, .. }) => assert!((xi_min - 2.0).abs() < 1e-12),
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn lower_bound_diagonal_example() {
        let dm = diagonal_model(&[4.0, 1.0], &[1.0, 1.0]);
        let snr = SnrMatrix::new(vec![2.0, 1.0]).unwrap();
        assert!((lower_bound_power(&dm, &snr).unwrap() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn binding_solution_meets_cap_with_slackness() {
        let c = ScenarioConfig::new(5, 5, 2, 2, 2, 1.0, 0.0, vec![3.0, 1.0], 31).unwrap();
        let snr = c.snr();
        for k in 0..50 {
            let dm = build_derived(&sample_channels(&c, k).unwrap(), &c).unwrap();
            let (_, i0) = power_and_interference_at(&dm, &snr, 0.0).unwrap();
            let xi = 0.3 * i0;
            let sol = solve_nfb(&dm, &snr, xi).unwrap();
            let y = sol.y.unwrap();
            assert!(y > 0.0);
            assert!(!sol.tolerance_warning);
            assert!(sol.interference <= xi * (1.0 + 1e-8));
            assert!((sol.interference - xi).abs() <= 1e-6 * xi);
            assert!(sol.snr_relative_error() < 1e-8);
            assert!(sol.stiefel_residual() < 1e-10);
            assert!((sol.power - sol.stiefel_power(&dm)).abs() < 1e-8 * sol.power);
            let g = lagrangian_dual(&dm, &snr, xi, y).unwrap();
            assert!((g - sol.power).abs() < 1e-8 * sol.power);
            assert!(sol.power >= lower_bound_power(&dm, &snr).unwrap());
        }
    }

    #[test]
    fn zero_cap_with_spare_dimensions_approaches_zfb() {
        let c = ScenarioConfig::new(5, 5, 2, 2, 2, 1.0, 0.0, vec![3.0, 1.0], 8).unwrap();
        let dm = build_derived(&sample_channels(&c, 1).unwrap(), &c).unwrap();
        let zfb = crate::zfb::solve_zfb(&dm, &c.snr()).unwrap();
        let nfb = solve_nfb(&dm, &c.snr(), 1e-9).unwrap();
        assert!(nfb.power <= zfb.power * (1.0 + 1e-9));
        assert!((nfb.power - zfb.power).abs() < 1e-4 * zfb.power);
    }

    #[test]
    fn rank_deficient_effective_channel_uses_range() {
        let c = ScenarioConfig::new(4, 2, 1, 1, 2, 1.0, 0.0, vec![2.0, 1.0], 5).unwrap();
        let dm = build_derived(&sample_channels(&c, 0).unwrap(), &c).unwrap();
        let (_, i0) = power_and_interference_at(&dm, &c.snr(), 0.0).unwrap();
        let report = crate::feasibility::xi_min(&dm, &c.snr(), 0.0).unwrap();
        let xi = 0.5 * (i0 + report.xi_min);
        let sol = solve_nfb(&dm, &c.snr(), xi).unwrap();
        assert!(sol.snr_relative_error() < 1e-8);
        assert!(sol.interference <= xi * (1.0 + 1e-8));
        let snr3 = SnrMatrix::new(vec![1.0; 3]).unwrap();
        assert!(matches!(solve_nfb(&dm, &snr3, 1.0), Err(Error::Rank { .. })));
    }
}
