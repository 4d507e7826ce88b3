use cogbeam::linalg::{
    complex_gaussian, hermitian_evd, random_stiefel, real_diag, trace_re, weighted_quadratic_trace, CMatrix,
};
use cogbeam::nfb::interference_tolerance;
use cogbeam::{
    build_derived, lower_bound_power, oracle_min_power, power_and_interference_at, sample_channels, solve_nfb,
    solve_zfb, xi_min, DerivedModel, ScenarioConfig, SnrMatrix,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn instance(m: usize, n: usize, q: usize, targets: Vec<f64>, seed: u64) -> (DerivedModel, SnrMatrix) {
    let c = ScenarioConfig::new(m, n, 2, q, targets.len(), 1.0, 0.0, targets, seed).unwrap();
    let dm = build_derived(&sample_channels(&c, 0).unwrap(), &c).unwrap();
    (dm, c.snr())
}

/// Cap between the floor and the unconstrained interference, so it binds.
fn binding_cap(dm: &DerivedModel, snr: &SnrMatrix, fraction: f64) -> f64 {
    let (_, free) = power_and_interference_at(dm, snr, 0.0).unwrap();
    let floor = xi_min(dm, snr, 0.0).unwrap().xi_min;
    floor + fraction * (free - floor)
}

fn targets(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.1f64..20.0, d)
}

/// `(m, q, targets)` with room for zero forcing when `spare` is set.
fn dims(spare: bool) -> impl Strategy<Value = (usize, usize, Vec<f64>)> {
    (3usize..=6, 1usize..=2).prop_flat_map(move |(m, q)| {
        let max_d = if spare { m - q } else { m };
        (Just(m), Just(q), (1..=max_d).prop_flat_map(targets))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn weighted_trace_bounded_by_sorted_pairing(
        mut delta in prop::collection::vec(0.0f64..5.0, 1..=6),
        extra in 0usize..=2,
        seed: u64,
    ) {
        let (v, d) = (delta.len() + extra, delta.len());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = complex_gaussian(&mut rng, v, v);
        let omega: CMatrix = &g * g.adjoint();
        delta.sort_by(|a, b| b.total_cmp(a));
        // Largest weight against the smallest eigenvalue.
        let evd = hermitian_evd(&omega).unwrap();
        let mut ascending = evd.values.clone();
        ascending.sort_by(|a, b| a.total_cmp(b));
        let bound: f64 = delta.iter().zip(&ascending).map(|(w, l)| w * l).sum();
        let scale = bound.abs().max(1.0);
        for _ in 0..8 {
            let theta = random_stiefel(&mut rng, v, d);
            prop_assert!(weighted_quadratic_trace(&theta, &omega, &delta) >= bound - 1e-9 * scale);
        }
        let mut trailing = CMatrix::zeros(v, d);
        for j in 0..d {
            trailing.set_column(j, &evd.vectors.column(v - 1 - j));
        }
        prop_assert!((weighted_quadratic_trace(&trailing, &omega, &delta) - bound).abs() <= 1e-9 * scale);
    }

    #[test]
    fn zero_forcing_is_exact_and_above_the_bound((m, q, t) in dims(true), seed: u64) {
        let (dm, snr) = instance(m, m, q, t, seed);
        let sol = solve_zfb(&dm, &snr).unwrap();
        let hx = &dm.channels().hx;
        prop_assert!((hx * &sol.t).norm() <= 1e-10 * hx.norm() * sol.t.norm());
        let gram = sol.t.adjoint() * dm.m() * &sol.t;
        let want = real_diag(snr.values());
        prop_assert!((&gram - &want).norm() <= 1e-8 * want.norm());
        prop_assert!((trace_re(&(sol.t.adjoint() * &sol.t)) - sol.power).abs() <= 1e-10 * sol.power);
        prop_assert!(sol.power >= lower_bound_power(&dm, &snr).unwrap() * (1.0 - 1e-10));
    }

    #[test]
    fn nfb_respects_cap_and_sits_between_bounds((m, q, t) in dims(true), frac in 0.05f64..0.95, seed: u64) {
        let (dm, snr) = instance(m, m, q, t, seed);
        let xi = binding_cap(&dm, &snr, frac);
        let sol = solve_nfb(&dm, &snr, xi).unwrap();
        prop_assert!(sol.interference <= xi + interference_tolerance(xi));
        let lower = lower_bound_power(&dm, &snr).unwrap();
        let zfb = solve_zfb(&dm, &snr).unwrap().power;
        prop_assert!(sol.power >= lower * (1.0 - 1e-9));
        prop_assert!(sol.power <= zfb * (1.0 + 1e-9));
        prop_assert!(sol.snr_relative_error() <= 1e-8);
    }

    #[test]
    fn power_scales_linearly_with_targets_and_cap((m, q, t) in dims(false), c in 0.2f64..5.0, seed: u64) {
        let (dm, snr) = instance(m, m, q, t.clone(), seed);
        let xi = binding_cap(&dm, &snr, 0.5);
        let scaled = SnrMatrix::new(t.iter().map(|v| v * c).collect()).unwrap();
        let base = solve_nfb(&dm, &snr, xi).unwrap().power;
        let grown = solve_nfb(&dm, &scaled, c * xi).unwrap().power;
        prop_assert!((grown - c * base).abs() <= 1e-6 * c * base);
        let floor = xi_min(&dm, &snr, 0.0).unwrap().xi_min;
        let floor_scaled = xi_min(&dm, &scaled, 0.0).unwrap().xi_min;
        prop_assert!((floor_scaled - c * floor).abs() <= 1e-9 * (c * floor).max(1e-12));
    }

    #[test]
    fn interference_floor_below_every_stiefel_point((m, q, t) in dims(false), seed: u64) {
        let (dm, snr) = instance(m, m, q, t, seed);
        let floor = xi_min(&dm, &snr, 0.0).unwrap().xi_min;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
        for _ in 0..16 {
            let v = dm.range_basis() * random_stiefel(&mut rng, dm.rank_m(), snr.len());
            let value = weighted_quadratic_trace(&v, dm.mx(), snr.values());
            prop_assert!(value >= floor - 1e-9 * floor.max(1.0));
        }
    }

    #[test]
    fn power_rises_and_interference_falls_along_y((m, q, t) in dims(false), seed: u64) {
        let (dm, snr) = instance(m, m, q, t, seed);
        let mut prev = power_and_interference_at(&dm, &snr, 0.0).unwrap();
        for i in 1..40 {
            let y = 10f64.powf(-4.0 + 9.0 * i as f64 / 39.0);
            let cur = power_and_interference_at(&dm, &snr, y).unwrap();
            prop_assert!(cur.0 >= prev.0 * (1.0 - 1e-9), "power decreased at y = {y}");
            prop_assert!(cur.1 <= prev.1 * (1.0 + 1e-9) + 1e-14, "interference increased at y = {y}");
            prev = cur;
        }
    }

    #[test]
    fn multiplier_vanishes_unless_cap_binds((m, q, t) in dims(true), frac in -0.5f64..1.5, seed: u64) {
        let (dm, snr) = instance(m, m, q, t, seed);
        let xi = binding_cap(&dm, &snr, frac).max(1e-6);
        let sol = solve_nfb(&dm, &snr, xi).unwrap();
        let y = sol.y.unwrap_or(0.0);
        if y > 0.0 {
            prop_assert!((sol.interference - xi).abs() <= interference_tolerance(xi) + 1e-9 * xi);
        } else {
            prop_assert!(sol.interference <= xi + interference_tolerance(xi));
        }
    }

    #[test]
    fn receive_snr_equals_target_for_shaped_beamformers(
        (m, q, t) in dims(false),
        n_less in 0usize..=1,
        seed: u64,
    ) {
        let n = (m - n_less).max(t.len());
        let (dm, snr) = instance(m, n, q, t, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
        let v = dm.range_basis() * random_stiefel(&mut rng, dm.rank_m(), snr.len());
        let tx = dm.m_inv_sqrt() * &v * real_diag(&snr.sqrt_values());
        let h = &dm.channels().h;
        for i in 0..snr.len() {
            // Max-SINR value tᵢᴴHᴴ R⁻¹ H tᵢ with R the interference-plus-noise covariance.
            let mut r = dm.w().clone();
            for k in (0..snr.len()).filter(|&k| k != i) {
                let hk = h * tx.column(k);
                r += &hk * hk.adjoint();
            }
            let hi = h * tx.column(i);
            let sinr = (hi.adjoint() * r.try_inverse().unwrap() * &hi)[(0, 0)].re;
            let want = snr.values()[i];
            prop_assert!((sinr - want).abs() <= 1e-8 * want, "stream {i}: {sinr} vs {want}");
        }
    }
}

#[test]
fn nfb_never_beaten_by_search() {
    for k in 0..6u64 {
        let d = 1 + (k % 2) as usize;
        let t: Vec<f64> = (0..d).map(|i| 1.0 + 2.0 * i as f64 + k as f64).collect();
        let (dm, snr) = instance(3, 3, 1, t, 500 + k);
        let xi = binding_cap(&dm, &snr, 0.4);
        let nfb = solve_nfb(&dm, &snr, xi).unwrap();
        let (oracle, v) = oracle_min_power(&dm, &snr, xi, 16).unwrap();
        assert!(nfb.power <= oracle * (1.0 + 1e-6), "instance {k}: {} > {oracle}", nfb.power);
        assert!(weighted_quadratic_trace(&v, dm.mx(), snr.values()) <= xi * (1.0 + 1e-6));
    }
}
