//! Independent checks on solver output.
//!
//! * [`receive_snr`] recomputes per-stream SNR at the receiver with an
//!   explicit max-SINR receive filter for each stream.
//! * [`sdp_dual_single_stream`] maximizes the dual of the relaxed
//!   single-stream semidefinite program by a line search and evaluates the
//!   complementary conditions at the primal-dual pair.
//! * [`oracle_min_power`] is a derivative-free search over the Stiefel
//!   manifold that never looks at the dual structure; its result is an upper
//!   bound on the true optimum.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    complex_gaussian, hermitian_evd, orthonormalize, psd_power, random_stiefel, real_diag, symmetrize,
    CMatrix, CVector, PsdExponent,
};
use crate::model::{DerivedModel, SnrMatrix};
use crate::nfb::solve_nfb;
use crate::zfb::decompose;

/// Per-stream receive-side SNR with the filters that achieve it.
#[derive(Debug, Clone)]
pub struct ReceiveSnr {
    /// SNR of stream `i` (column `i` of `T`).
    pub per_stream: Vec<f64>,
    /// The same values sorted descending.
    pub sorted: Vec<f64>,
    /// Receive row vector `rᵢ` for each stream, stored as a column.
    pub receivers: Vec<CVector>,
}

/// SNR of every stream of `t` after max-SINR receive beamforming.
///
/// For stream `i` the signal covariance is `M₁ = H tᵢ tᵢᴴ Hᴴ` and the
/// interference-plus-noise covariance is `M₂ = Σ_{k≠i} H t_k t_kᴴ Hᴴ + W`.
/// The best receive vector is the dominant eigenvector of
/// `M₂^{-1/2} M₁ M₂^{-1/2}` mapped back through `M₂^{-1/2}`.
pub fn receive_snr(t: &CMatrix, h: &CMatrix, w: &CMatrix) -> Result<ReceiveSnr> {
    let d = t.ncols();
    let ht = h * t;
    let mut per_stream = Vec::with_capacity(d);
    let mut receivers = Vec::with_capacity(d);
    for i in 0..d {
        let mut m2 = w.clone();
        for k in (0..d).filter(|&k| k != i) {
            let col = ht.column(k);
            m2 += col * col.adjoint();
        }
        let m2 = symmetrize(&m2);
        let signal = ht.column(i).into_owned();
        let m1 = &signal * signal.adjoint();

        let whiten = psd_power(&m2, PsdExponent::InvSqrt)?;
        let whitened = symmetrize(&(&whiten * &m1 * &whiten));
        let evd = hermitian_evd(&whitened)?;
        let dominant = evd.vectors.column(0).into_owned();
        // Row vector r = uᴴ M₂^{-1/2}, kept as the column rᴴ.
        let r_col = &whiten * &dominant;
        let num = r_col.dotc(&(&m1 * &r_col)).re;
        let den = r_col.dotc(&(&m2 * &r_col)).re;
        if den.is_nan() || den <= 0.0 {
            return Err(Error::NumericalFailure(
                "receive filter has zero interference-plus-noise energy".into(),
            ));
        }
        per_stream.push(num / den);
        receivers.push(r_col.map(|z| z.conj()));
    }
    let mut sorted = per_stream.clone();
    sorted.sort_by(|a, b| b.total_cmp(a));
    Ok(ReceiveSnr {
        per_stream,
        sorted,
        receivers,
    })
}

/// Dual certificate for the single-stream problem.
///
/// Multipliers follow the sign convention in which the dual feasibility
/// matrix reads `I + μ₁ Hₓᴴ Hₓ + μ₂ M ⪰ 0`, so `μ₂ ≤ 0` at the optimum.
#[derive(Debug, Clone, Serialize)]
pub struct KktReport {
    pub mu1: f64,
    pub mu2: f64,
    /// `−μ₂ ρ₁ − μ₁ ξ`.
    pub dual_value: f64,
    /// Transmit power of the nonzero-forcing primal solution.
    pub primal_value: f64,
    /// `ξ − tᴴ Hₓᴴ Hₓ t`.
    pub slack_interference: f64,
    /// `tᴴ M t − ρ₁`.
    pub slack_snr: f64,
    /// Smallest eigenvalue of `I + μ₁ Hₓᴴ Hₓ + μ₂ M`.
    pub psd_min_eigenvalue: f64,
    /// `[tr(X Z), μ₁ (tr(X Hₓᴴ Hₓ) − ξ), μ₂ (tr(X M) − ρ₁)]` at `X = t tᴴ`,
    /// `Z` the dual feasibility matrix.
    pub complementary_residuals: [f64; 3],
}

impl KktReport {
    pub fn scale(&self) -> f64 {
        self.primal_value.max(1.0)
    }

    pub fn relative_gap(&self) -> f64 {
        (self.dual_value - self.primal_value).abs() / self.scale()
    }

    pub fn max_residual(&self) -> f64 {
        self.complementary_residuals
            .iter()
            .fold(0.0, |acc: f64, r| acc.max(r.abs()))
    }
}

const DUAL_GAP_RTOL: f64 = 1e-4;
const MU_LIMIT: f64 = 1e12;

/// Largest admissible `−μ₂` for a given `μ₁`: `1 / λ_max(B^{-1/2} M B^{-1/2})`
/// with `B = I + μ₁ Hₓᴴ Hₓ`.
fn snr_multiplier(m: &CMatrix, gram: &CMatrix, mu1: f64) -> Result<f64> {
    let dim = m.nrows();
    let b = symmetrize(&(CMatrix::identity(dim, dim) + gram * Complex64::new(mu1, 0.0)));
    let b_inv_half = psd_power(&b, PsdExponent::InvSqrt)?;
    let pencil = symmetrize(&(&b_inv_half * m * &b_inv_half));
    let top = hermitian_evd(&pencil)?.values[0];
    if top.is_nan() || top <= 0.0 {
        return Err(Error::NumericalFailure("effective channel has no positive eigenvalue".into()));
    }
    Ok(1.0 / top)
}

/// Maximizes the single-stream dual and checks it against the primal.
pub fn sdp_dual_single_stream(derived: &DerivedModel, rho1: f64, xi: f64) -> Result<KktReport> {
    let snr = SnrMatrix::new(vec![rho1])?;
    let primal = solve_nfb(derived, &snr, xi)?;
    let m = derived.m();
    let gram = derived.cross_gram();

    let dual_at = |mu1: f64| -> Result<f64> { Ok(rho1 * snr_multiplier(m, &gram, mu1)? - mu1 * xi) };

    // Bracket the maximizer of the concave dual function in [0, upper].
    let mut upper = 1.0;
    let mut h_half = dual_at(0.5)?;
    let mut h_upper = dual_at(upper)?;
    while h_upper >= h_half && upper < MU_LIMIT {
        upper *= 2.0;
        h_half = h_upper;
        h_upper = dual_at(upper)?;
    }

    // Golden-section search.
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.0, upper);
    let mut x1 = b - ratio * (b - a);
    let mut x2 = a + ratio * (b - a);
    let mut f1 = dual_at(x1)?;
    let mut f2 = dual_at(x2)?;
    for _ in 0..400 {
        if b - a <= 1e-13 * (1.0 + b) {
            break;
        }
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + ratio * (b - a);
            f2 = dual_at(x2)?;
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - ratio * (b - a);
            f1 = dual_at(x1)?;
        }
    }
    let mut mu1 = 0.5 * (a + b);
    let mut dual_value = dual_at(mu1)?;
    let at_zero = dual_at(0.0)?;
    if at_zero >= dual_value {
        mu1 = 0.0;
        dual_value = at_zero;
    }
    let mu2 = -snr_multiplier(m, &gram, mu1)?;

    let t = primal.t.column(0).into_owned();
    let t_gram = t.dotc(&(&gram * &t)).re;
    let t_m = t.dotc(&(m * &t)).re;
    let t_norm = t.norm_squared();
    let dim = m.nrows();
    let z = symmetrize(
        &(CMatrix::identity(dim, dim) + &gram * Complex64::new(mu1, 0.0) + m * Complex64::new(mu2, 0.0)),
    );
    let psd_min_eigenvalue = *hermitian_evd(&z)?.values.last().unwrap();

    let report = KktReport {
        mu1,
        mu2,
        dual_value,
        primal_value: primal.power,
        slack_interference: xi - t_gram,
        slack_snr: t_m - rho1,
        psd_min_eigenvalue,
        complementary_residuals: [
            t_norm + mu1 * t_gram + mu2 * t_m,
            mu1 * (t_gram - xi),
            mu2 * (t_m - rho1),
        ],
    };
    if report.relative_gap() > DUAL_GAP_RTOL {
        return Err(Error::Tolerance(format!(
            "dual value {:.9e} does not certify primal {:.9e}",
            report.dual_value, report.primal_value
        )));
    }
    Ok(report)
}

/// Tuning of the derivative-free Stiefel search.
#[derive(Debug, Clone)]
pub struct SearchSettings {
    /// Random starting points drawn before refinement.
    pub restarts: usize,
    /// How many of the best feasible starts are refined.
    pub refine: usize,
    /// Consecutive failed perturbations before the step is halved.
    pub trials_per_scale: usize,
    pub initial_scale: f64,
    pub final_scale: f64,
    /// Evaluations allowed per refined start, polish included.
    pub max_evaluations: usize,
    /// Bisection steps when pulling an infeasible step back to the boundary.
    pub repair_steps: usize,
    /// Finite-difference conjugate-gradient iterations run after the
    /// random refinement; zero disables the polish.
    pub polish_iterations: usize,
    pub seed: u64,
}

impl Default for SearchSettings {
    fn default() -> Self {
        Self {
            restarts: 64,
            refine: 4,
            trials_per_scale: 50,
            initial_scale: 0.5,
            final_scale: 1e-5,
            max_evaluations: 400_000,
            repair_steps: 30,
            polish_iterations: 1000,
            seed: 0x5eed_0bac1e,
        }
    }
}

/// Best point found by [`minimize_on_stiefel`].
#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub value: f64,
    /// Minimizer on `St(m, d)` (columns in the span of the basis).
    pub v: CMatrix,
    pub evaluations: usize,
}

/// Minimizes `objective(V)` over `V = basis · Q`, `Q ∈ St(r, d)`, subject to
/// `constraint(V) ≤ limit`.
///
/// Random starts are drawn by orthonormalizing Gaussian matrices; the best
/// feasible ones are refined by perturb-and-orthonormalize steps that are
/// accepted on improvement. A step that leaves the feasible set is pulled
/// back to the boundary, towards `anchor` if given and otherwise along its
/// own path. Each failure shrinks the step so that `trials_per_scale`
/// failures in a row halve it, each success grows it (capped at
/// `initial_scale`), and the search stops below `final_scale`. A
/// finite-difference conjugate-gradient polish, projected onto the
/// constraint boundary when it is active, then finishes each start.
///
/// `anchor`, when given, is a known feasible point in basis coordinates.
/// It joins the starts, and every infeasible random start is pulled towards
/// it to the last feasible point on the connecting path, so tight caps still
/// produce a spread of starting points.
pub fn minimize_on_stiefel<F, G>(
    basis: &CMatrix,
    d: usize,
    anchor: Option<&CMatrix>,
    objective: F,
    constraint: G,
    limit: f64,
    settings: &SearchSettings,
) -> Option<SearchOutcome>
where
    F: Fn(&CMatrix) -> f64,
    G: Fn(&CMatrix) -> f64,
{
    let r = basis.ncols();
    if d == 0 || d > r {
        return None;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let mut evaluations = 0usize;
    let mut starts: Vec<(f64, CMatrix)> = Vec::new();
    for _ in 0..settings.restarts {
        let q = random_stiefel(&mut rng, r, d);
        let v = basis * &q;
        evaluations += 1;
        if constraint(&v) <= limit {
            starts.push((objective(&v), q));
        } else if let Some(a) = anchor {
            let a = align_phases(a, &q);
            let path = |t: f64| orthonormalize(&(&a * Complex64::new(1.0 - t, 0.0) + &q * Complex64::new(t, 0.0)));
            let (mut lo, mut hi) = (0.0, 1.0);
            for _ in 0..settings.repair_steps {
                let mid = 0.5 * (lo + hi);
                evaluations += 1;
                if constraint(&(basis * path(mid))) <= limit {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let q = path(lo);
            let v = basis * &q;
            if constraint(&v) <= limit {
                starts.push((objective(&v), q));
            }
        }
    }
    if let Some(a) = anchor {
        let v = basis * a;
        if constraint(&v) <= limit {
            starts.push((objective(&v), a.clone()));
        }
    }
    starts.sort_by(|a, b| a.0.total_cmp(&b.0));
    starts.truncate(settings.refine.max(1));

    let mut best: Option<SearchOutcome> = None;
    for (value, q) in starts {
        let (value, q, used) = refine(basis, anchor, q, value, &objective, &constraint, limit, settings, &mut rng);
        evaluations += used;
        let budget = settings.max_evaluations.saturating_sub(used);
        let (value, q, used) = polish(basis, q, value, &objective, &constraint, limit, settings.polish_iterations, budget);
        evaluations += used;
        if best.as_ref().is_none_or(|b| value < b.value) {
            best = Some(SearchOutcome {
                value,
                v: basis * &q,
                evaluations: 0,
            });
        }
    }
    best.map(|mut b| {
        b.evaluations = evaluations;
        b
    })
}

/// Rotates each column of `anchor` by the phase that best aligns it with the
/// matching column of `target`. Column phases do not change any weighted
/// trace of an eigenvector frame, so the anchor stays equally feasible while
/// the straight path towards it becomes as short as possible.
fn align_phases(anchor: &CMatrix, target: &CMatrix) -> CMatrix {
    let mut out = anchor.clone();
    for j in 0..anchor.ncols() {
        let overlap = anchor.column(j).dotc(&target.column(j));
        if overlap.norm() > 0.0 {
            let phase = overlap / overlap.norm();
            for z in out.column_mut(j).iter_mut() {
                *z *= phase;
            }
        }
    }
    out
}

/// Bisection on `t ∈ [0, 1]` for the feasible end of `path`, assuming
/// `path(1)` is feasible and `path(0)` is not. Returns the feasible point
/// closest to `t = 0` and the number of constraint evaluations spent.
fn retract<G>(path: impl Fn(f64) -> CMatrix, basis: &CMatrix, constraint: &G, limit: f64, steps: usize) -> (CMatrix, usize)
where
    G: Fn(&CMatrix) -> f64,
{
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut best = path(1.0);
    for _ in 0..steps {
        let mid = 0.5 * (lo + hi);
        let trial = path(mid);
        if constraint(&(basis * &trial)) <= limit {
            hi = mid;
            best = trial;
        } else {
            lo = mid;
        }
    }
    (best, steps)
}

#[allow(clippy::too_many_arguments)]
fn refine<F, G>(
    basis: &CMatrix,
    anchor: Option<&CMatrix>,
    mut q: CMatrix,
    mut value: f64,
    objective: &F,
    constraint: &G,
    limit: f64,
    settings: &SearchSettings,
    rng: &mut ChaCha8Rng,
) -> (f64, CMatrix, usize)
where
    F: Fn(&CMatrix) -> f64,
    G: Fn(&CMatrix) -> f64,
{
    let (r, d) = q.shape();
    // One-fifth success rule: every failure shrinks the step so that
    // `trials_per_scale` consecutive failures halve it, and a success grows
    // it by the inverse of four failures.
    let shrink = 0.5f64.powf(1.0 / settings.trials_per_scale.max(1) as f64);
    let grow = shrink.powi(-4);
    let mut scale = settings.initial_scale;
    let mut used = 0usize;
    while scale >= settings.final_scale && used < settings.max_evaluations {
        let step = complex_gaussian(rng, r, d) * Complex64::new(scale, 0.0);
        let mut candidate = orthonormalize(&(&q + &step));
        used += 1;
        if constraint(&(basis * &candidate)) > limit {
            // Pull the step back onto the boundary: towards the anchor when
            // one is known, otherwise towards the current point.
            let (repaired, spent) = match anchor {
                Some(a) => {
                    let a = align_phases(a, &candidate);
                    retract(
                        |t| orthonormalize(&(&candidate * Complex64::new(1.0 - t, 0.0) + &a * Complex64::new(t, 0.0))),
                        basis,
                        constraint,
                        limit,
                        settings.repair_steps,
                    )
                }
                None => retract(
                    |t| orthonormalize(&(&q + &step * Complex64::new(1.0 - t, 0.0))),
                    basis,
                    constraint,
                    limit,
                    settings.repair_steps,
                ),
            };
            used += spent;
            candidate = repaired;
        }
        let v = basis * &candidate;
        let f = objective(&v);
        if f < value && constraint(&v) <= limit {
            value = f;
            q = candidate;
            scale = (scale * grow).min(settings.initial_scale);
        } else {
            scale *= shrink;
        }
    }
    (value, q, used)
}

/// Gradient projection with finite-difference gradients.
///
/// Works in the `2·r·d` real coordinates of `Q + X`, retracted by
/// orthonormalization. On the constraint boundary the objective gradient is
/// projected onto the tangent plane of the constraint, and a step that
/// leaves the feasible set is pushed back along the constraint gradient.
/// Random perturbation alone stalls in the thin wedge of feasible descent
/// directions that remains near a constrained optimum; this phase does not.
#[allow(clippy::too_many_arguments)]
fn polish<F, G>(
    basis: &CMatrix,
    mut q: CMatrix,
    mut value: f64,
    objective: &F,
    constraint: &G,
    limit: f64,
    iterations: usize,
    budget: usize,
) -> (f64, CMatrix, usize)
where
    F: Fn(&CMatrix) -> f64,
    G: Fn(&CMatrix) -> f64,
{
    const FD_STEP: f64 = 1e-6;
    const ACTIVE_RTOL: f64 = 1e-6;
    let (r, d) = q.shape();
    let dims = 2 * r * d;
    let unit = |k: usize| {
        let mut e = CMatrix::zeros(r, d);
        let entry = k / 2;
        e[(entry % r, entry / r)] = if k.is_multiple_of(2) {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 1.0)
        };
        e
    };
    let directions: Vec<CMatrix> = (0..dims).map(unit).collect();
    let combine = |coef: &[f64]| {
        let mut x = CMatrix::zeros(r, d);
        for (c, e) in coef.iter().zip(&directions) {
            x += e * Complex64::new(*c, 0.0);
        }
        x
    };
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();

    let mut used = 0usize;
    let mut alpha = 1e-2;
    // Previous projected gradient and search direction for conjugate steps.
    let mut memory: Option<(Vec<f64>, Vec<f64>)> = None;
    for _ in 0..iterations {
        if used + 4 * dims > budget {
            break;
        }
        let at = |x: &CMatrix| basis * orthonormalize(&(&q + x));
        let mut gp = vec![0.0; dims];
        let mut gc = vec![0.0; dims];
        for (k, e) in directions.iter().enumerate() {
            let plus = at(&(e * Complex64::new(FD_STEP, 0.0)));
            let minus = at(&(e * Complex64::new(-FD_STEP, 0.0)));
            gp[k] = (objective(&plus) - objective(&minus)) / (2.0 * FD_STEP);
            gc[k] = (constraint(&plus) - constraint(&minus)) / (2.0 * FD_STEP);
        }
        used += 4 * dims;
        let level = constraint(&(basis * &q));
        let active = level >= limit * (1.0 - ACTIVE_RTOL);
        let gc2 = dot(&gc, &gc);
        let project = |v: &mut Vec<f64>| {
            if active && gc2 > 0.0 && dot(v, &gc) > 0.0 {
                let k = dot(v, &gc) / gc2;
                for (v_i, c_i) in v.iter_mut().zip(&gc) {
                    *v_i -= k * c_i;
                }
            }
        };
        let mut steepest: Vec<f64> = gp.iter().map(|g| -g).collect();
        project(&mut steepest);
        let mut dir = steepest.clone();
        if let Some((prev_g, prev_dir)) = &memory {
            let denom = dot(prev_g, prev_g);
            let beta = if denom > 0.0 {
                (dot(&steepest, &steepest) - dot(&steepest, prev_g)) / denom
            } else {
                0.0
            };
            if beta > 0.0 {
                for (d_i, p_i) in dir.iter_mut().zip(prev_dir) {
                    *d_i += beta * p_i;
                }
                project(&mut dir);
                if dot(&dir, &steepest) <= 0.0 {
                    dir = steepest.clone();
                }
            }
        }
        let dir_norm = dot(&dir, &dir).sqrt();
        if dir_norm <= 1e-14 * value.abs().max(1.0) {
            break;
        }
        let step_dir = combine(&dir);
        let push = combine(&gc.iter().map(|g| -g).collect::<Vec<_>>());

        let mut improved = false;
        alpha *= 4.0;
        while alpha * dir_norm > 1e-13 {
            let x = &step_dir * Complex64::new(alpha, 0.0);
            let mut cand = orthonormalize(&(&q + &x));
            used += 1;
            if constraint(&(basis * &cand)) > limit {
                if gc2 == 0.0 {
                    alpha *= 0.5;
                    continue;
                }
                // Restore feasibility along the constraint gradient.
                let base = &q + &x;
                let along = |beta: f64| orthonormalize(&(&base + &push * Complex64::new(beta, 0.0)));
                let mut hi = alpha * dir_norm / gc2.sqrt();
                let mut ok = false;
                for _ in 0..40 {
                    used += 1;
                    if constraint(&(basis * along(hi))) <= limit {
                        ok = true;
                        break;
                    }
                    hi *= 2.0;
                }
                if !ok {
                    alpha *= 0.5;
                    continue;
                }
                let mut lo = 0.0;
                for _ in 0..50 {
                    let mid = 0.5 * (lo + hi);
                    used += 1;
                    if constraint(&(basis * along(mid))) <= limit {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                cand = along(hi);
            }
            let f = objective(&(basis * &cand));
            used += 1;
            if f < value {
                value = f;
                q = cand;
                improved = true;
                break;
            }
            alpha *= 0.5;
        }
        if !improved {
            if memory.take().is_some() {
                // Retry once from steepest descent before giving up.
                alpha = 1e-2;
                continue;
            }
            break;
        }
        memory = Some((steepest, dir));
    }
    (value, q, used)
}

/// Power and interference of `T = M^{-1/2} V Σ^{1/2}`, evaluated directly
/// from the channel matrices.
#[derive(Debug, Clone)]
pub struct DirectEvaluator {
    shaping: CMatrix,
    leakage: CMatrix,
    sqrt_snr: CMatrix,
}

impl DirectEvaluator {
    pub fn new(derived: &DerivedModel, snr: &SnrMatrix) -> Self {
        Self {
            shaping: derived.m_inv_sqrt().clone(),
            leakage: &derived.channels().hx * derived.m_inv_sqrt(),
            sqrt_snr: real_diag(&snr.sqrt_values()),
        }
    }

    pub fn power(&self, v: &CMatrix) -> f64 {
        (&self.shaping * v * &self.sqrt_snr).norm_squared()
    }

    pub fn interference(&self, v: &CMatrix) -> f64 {
        (&self.leakage * v * &self.sqrt_snr).norm_squared()
    }
}

/// Eigenvectors of `Mₓ` restricted to `range(M)` for its `d` smallest
/// eigenvalues, smallest first, in range-basis coordinates. Pairing them with
/// descending targets attains the least possible interference.
fn least_interference_frame(derived: &DerivedModel, d: usize) -> Result<CMatrix> {
    let basis = derived.range_basis();
    let reduced = symmetrize(&(basis.adjoint() * derived.mx() * basis));
    let evd = hermitian_evd(&reduced)?;
    let r = evd.dim();
    let mut frame = CMatrix::zeros(r, d);
    for j in 0..d {
        frame.set_column(j, &evd.vectors.column(r - 1 - j));
    }
    Ok(frame)
}

/// Relative slack on the interference cap accepted by the oracles.
const CAP_SLACK: f64 = 1e-9;

/// Best feasible power found by the derivative-free Stiefel search with
/// `budget` random starts. An upper bound on the true minimum.
pub fn oracle_min_power(
    derived: &DerivedModel,
    snr: &SnrMatrix,
    xi: f64,
    budget: usize,
) -> Result<(f64, CMatrix)> {
    let settings = SearchSettings {
        restarts: budget,
        ..SearchSettings::default()
    };
    oracle_min_power_with(derived, snr, xi, &settings)
}

/// [`oracle_min_power`] with explicit search settings.
pub fn oracle_min_power_with(
    derived: &DerivedModel,
    snr: &SnrMatrix,
    xi: f64,
    settings: &SearchSettings,
) -> Result<(f64, CMatrix)> {
    derived.require_streams(snr.len())?;
    let eval = DirectEvaluator::new(derived, snr);
    let limit = xi * (1.0 + CAP_SLACK);
    let basis = derived.range_basis();
    let anchor = least_interference_frame(derived, snr.len())?;
    minimize_on_stiefel(
        basis,
        snr.len(),
        Some(&anchor),
        |v| eval.power(v),
        |v| eval.interference(v),
        limit,
        settings,
    )
    .map(|o| (o.value, o.v))
    .ok_or(Error::OracleNoFeasiblePoint {
        budget: settings.restarts,
    })
}

/// Mean power and mean interference of `samples` random feasible
/// beamformers.
///
/// Stiefel factors on `range(M)` are drawn uniformly and kept when they meet
/// the cap. When the cap is so tight that rejection stalls (fewer than
/// `samples` hits in `samples × 100` draws), the remaining points are drawn
/// on random paths from the least-interference frame towards a uniform
/// Stiefel point, at a uniform position within the feasible part of the
/// path. A zero cap samples the zero-forcing subspace directly. Returns
/// `None` when the cap is below the minimum achievable interference.
pub fn feasible_baseline_power(
    derived: &DerivedModel,
    snr: &SnrMatrix,
    xi: f64,
    samples: usize,
    seed: u64,
) -> Result<Option<(f64, f64)>> {
    const REJECTION_FACTOR: usize = 100;
    const PATH_BISECTIONS: usize = 40;
    derived.require_streams(snr.len())?;
    let d = snr.len();
    let eval = DirectEvaluator::new(derived, snr);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut power = Vec::with_capacity(samples);
    let mut interference = Vec::with_capacity(samples);
    if xi <= 0.0 {
        let dec = decompose(derived)?;
        if dec.free_dims() < d {
            return Ok(None);
        }
        for _ in 0..samples {
            let v = &dec.v_r * random_stiefel(&mut rng, dec.free_dims(), d);
            power.push(eval.power(&v));
            interference.push(eval.interference(&v));
        }
    } else {
        let basis = derived.range_basis();
        let r = basis.ncols();
        let mut draws = 0usize;
        while power.len() < samples && draws < samples * REJECTION_FACTOR {
            draws += 1;
            let v = basis * random_stiefel(&mut rng, r, d);
            let leak = eval.interference(&v);
            if leak <= xi {
                power.push(eval.power(&v));
                interference.push(leak);
            }
        }
        if power.len() < samples {
            let anchor = least_interference_frame(derived, d)?;
            if eval.interference(&(basis * &anchor)) > xi {
                return Ok(None);
            }
            while power.len() < samples {
                let target = random_stiefel(&mut rng, r, d);
                let path = |t: f64| {
                    basis
                        * orthonormalize(
                            &(&anchor * Complex64::new(1.0 - t, 0.0) + &target * Complex64::new(t, 0.0)),
                        )
                };
                let (mut lo, mut hi) = (0.0, 1.0);
                for _ in 0..PATH_BISECTIONS {
                    let mid = 0.5 * (lo + hi);
                    if eval.interference(&path(mid)) <= xi {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let v = path(lo * rng.random::<f64>());
                let leak = eval.interference(&v);
                if leak <= xi {
                    power.push(eval.power(&v));
                    interference.push(leak);
                }
            }
        }
    }
    if power.is_empty() {
        return Ok(None);
    }
    let n = power.len() as f64;
    Ok(Some((power.iter().sum::<f64>() / n, interference.iter().sum::<f64>() / n)))
}
