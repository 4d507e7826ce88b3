//! Quick property checks runnable from the command line.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::certificates::{oracle_min_power, receive_snr, sdp_dual_single_stream};
use crate::error::Result;
use crate::feasibility::{ascending_pairing, xi_min};
use crate::linalg::{complex_gaussian, hermitian_evd, random_stiefel, weighted_quadratic_trace, CMatrix};
use crate::model::{build_derived, sample_channels, DerivedModel, ScenarioConfig, SnrMatrix};
use crate::nfb::{interference_tolerance, power_and_interference_at, solve_nfb};
use crate::zfb::solve_zfb;

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub instances: usize,
    /// Worst observed value of the checked quantity, or a failure note.
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SelftestReport {
    pub checks: Vec<CheckResult>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

struct Worst {
    value: f64,
    failure: Option<String>,
}

impl Worst {
    fn new() -> Self {
        Self {
            value: 0.0,
            failure: None,
        }
    }

    fn observe(&mut self, v: f64) {
        if v.is_nan() || v > self.value {
            self.value = v;
        }
    }

    fn fail(&mut self, note: String) {
        self.failure.get_or_insert(note);
    }

    fn finish(self, name: &'static str, instances: usize, limit: f64) -> CheckResult {
        let passed = self.failure.is_none() && self.value <= limit;
        let detail = match self.failure {
            Some(note) => note,
            None => format!("worst {:.3e} (limit {:.1e})", self.value, limit),
        };
        CheckResult {
            name,
            passed,
            instances,
            detail,
        }
    }
}

fn random_targets(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.random_range(0.2..10.0)).collect()
}

fn instance(rng: &mut ChaCha8Rng, m: usize, q: usize, d: usize, seed: u64, k: u64) -> Result<(ScenarioConfig, DerivedModel)> {
    let c = ScenarioConfig::new(m, m, 2, q, d, 1.0, 0.0, random_targets(rng, d), seed)?;
    let dm = build_derived(&sample_channels(&c, k)?, &c)?;
    Ok((c, dm))
}

/// Cap that binds at the unconstrained solution but stays feasible.
fn binding_cap(dm: &DerivedModel, snr: &SnrMatrix, fraction: f64) -> Result<f64> {
    let (_, unconstrained) = power_and_interference_at(dm, snr, 0.0)?;
    let floor = xi_min(dm, snr, 0.0)?.xi_min;
    Ok(floor + fraction * (unconstrained - floor))
}

/// Runs every check on `instances` random cases derived from `seed`.
pub fn run_selftest(instances: usize, seed: u64) -> SelftestReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();

    // Zero-forcing exactness.
    let mut worst = Worst::new();
    for k in 0..instances as u64 {
        let d = 1 + (k % 3) as usize;
        match instance(&mut rng, 5, 2, d, seed, k).and_then(|(c, dm)| Ok((solve_zfb(&dm, &c.snr())?, dm))) {
            Ok((sol, dm)) => {
                let leak = (&dm.channels().hx * &sol.t).norm();
                worst.observe(leak / (dm.channels().hx.norm() * sol.t.norm()));
            }
            Err(e) => worst.fail(format!("instance {k}: {e}")),
        }
    }
    checks.push(worst.finish("zero-forcing exactness", instances, 1e-10));

    // SNR contract for both solvers, via TᴴMT and via receive filters.
    let mut worst = Worst::new();
    for k in 0..instances as u64 {
        let d = 1 + (k % 3) as usize;
        let mut run = || -> Result<f64> {
            let (c, dm) = instance(&mut rng, 5, 2, d, seed, k)?;
            let snr = c.snr();
            let xi = binding_cap(&dm, &snr, 0.5)?;
            let mut err: f64 = 0.0;
            for sol in [solve_zfb(&dm, &snr)?, solve_nfb(&dm, &snr, xi)?] {
                err = err.max(sol.snr_relative_error());
                let rx = receive_snr(&sol.t, &dm.channels().h, dm.w())?;
                for (got, want) in rx.sorted.iter().zip(snr.values()) {
                    err = err.max((got - want).abs() / want);
                }
            }
            Ok(err)
        };
        match run() {
            Ok(e) => worst.observe(e),
            Err(e) => worst.fail(format!("instance {k}: {e}")),
        }
    }
    checks.push(worst.finish("per-stream SNR contract", instances, 1e-8));

    // Minimum interference is zero with spare dimensions.
    let mut worst = Worst::new();
    for k in 0..instances as u64 {
        let d = 1 + (k % 3) as usize;
        match instance(&mut rng, 5, 2, d, seed, k).and_then(|(c, dm)| xi_min(&dm, &c.snr(), 0.0)) {
            Ok(r) => worst.observe(r.xi_min.abs()),
            Err(e) => worst.fail(format!("instance {k}: {e}")),
        }
    }
    checks.push(worst.finish("zero interference floor with spare dimensions", instances, 1e-10));

    // Trace inequality and its equality case.
    let mut worst = Worst::new();
    for _ in 0..instances {
        let v = rng.random_range(2..=6usize);
        let d = rng.random_range(1..=v);
        let mut delta = random_targets(&mut rng, d);
        delta.sort_by(|a, b| b.total_cmp(a));
        let g = complex_gaussian(&mut rng, v, v);
        let omega = &g * g.adjoint();
        let evd = match hermitian_evd(&omega) {
            Ok(e) => e,
            Err(e) => {
                worst.fail(e.to_string());
                continue;
            }
        };
        let bound = ascending_pairing(&delta, &evd.values);
        let theta = random_stiefel(&mut rng, v, d);
        let value = weighted_quadratic_trace(&theta, &omega, &delta);
        worst.observe(bound - value - 1e-9 * bound.abs().max(1.0));
        let mut trailing = CMatrix::zeros(v, d);
        for j in 0..d {
            trailing.set_column(j, &evd.vectors.column(v - 1 - j));
        }
        let attained = weighted_quadratic_trace(&trailing, &omega, &delta);
        worst.observe((attained - bound).abs() / bound.abs().max(1.0) - 1e-9);
    }
    checks.push(worst.finish("trace inequality", instances, 0.0));

    // Monotonicity of power and interference in the dual variable.
    let mut worst = Worst::new();
    for k in 0..instances as u64 {
        let d = 1 + (k % 2) as usize;
        let mut run = || -> Result<f64> {
            let (c, dm) = instance(&mut rng, 4, 2, d, seed, k)?;
            let snr = c.snr();
            let mut prev = power_and_interference_at(&dm, &snr, 0.0)?;
            let mut violation: f64 = 0.0;
            for i in 1..50 {
                let y = 10f64.powf(-3.0 + 7.0 * i as f64 / 49.0);
                let cur = power_and_interference_at(&dm, &snr, y)?;
                violation = violation
                    .max(prev.0 - cur.0 - 1e-9 * prev.0.max(1.0))
                    .max(cur.1 - prev.1 - 1e-9 * prev.1.max(1.0));
                prev = cur;
            }
            Ok(violation)
        };
        match run() {
            Ok(v) => worst.observe(v),
            Err(e) => worst.fail(format!("instance {k}: {e}")),
        }
    }
    checks.push(worst.finish("monotonicity in the dual variable", instances, 0.0));

    // Complementary slackness.
    let mut worst = Worst::new();
    for k in 0..instances as u64 {
        let d = 1 + (k % 3) as usize;
        let mut run = || -> Result<f64> {
            let (c, dm) = instance(&mut rng, 5, 2, d, seed, k)?;
            let snr = c.snr();
            let xi = binding_cap(&dm, &snr, 0.3)?;
            let sol = solve_nfb(&dm, &snr, xi)?;
            let y = sol.y.unwrap_or(0.0);
            let mut v = y * (sol.interference - xi) / xi.max(1.0);
            if y > 0.0 {
                v = v.max((sol.interference - xi).abs() / xi - interference_tolerance(xi) / xi);
            }
            Ok(v)
        };
        match run() {
            Ok(v) => worst.observe(v),
            Err(e) => worst.fail(format!("instance {k}: {e}")),
        }
    }
    checks.push(worst.finish("complementary slackness", instances, 1e-6));

    // Oracle dominance and dual certificate on small cases.
    let small = instances.clamp(1, 10);
    let mut worst = Worst::new();
    for k in 0..small as u64 {
        let mut run = || -> Result<f64> {
            let (c, dm) = instance(&mut rng, 3, 1, 1, seed, k)?;
            let snr = c.snr();
            let xi = binding_cap(&dm, &snr, 0.4)?;
            let nfb = solve_nfb(&dm, &snr, xi)?;
            let (oracle, _) = oracle_min_power(&dm, &snr, xi, 32)?;
            let cert = sdp_dual_single_stream(&dm, snr.values()[0], xi)?;
            Ok(((nfb.power - oracle) / oracle.max(1.0))
                .max(cert.relative_gap() - 1e-4)
                .max(cert.max_residual() / cert.scale() - 1e-6))
        };
        match run() {
            Ok(v) => worst.observe(v),
            Err(e) => worst.fail(format!("instance {k}: {e}")),
        }
    }
    checks.push(worst.finish("optimality certificates", small, 1e-6));

    SelftestReport { checks }
}
