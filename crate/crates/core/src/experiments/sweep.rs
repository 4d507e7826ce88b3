use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::certificates::feasible_baseline_power;
use crate::error::{Error, Result};
use crate::feasibility::xi_min;
use crate::model::{build_derived, sample_channels, DerivedModel, ScenarioConfig};
use crate::nfb::{lower_bound_power, power_and_interference_at, solve_nfb};
use crate::zfb::solve_zfb;

/// Quantity varied along a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    /// Per-stream SNR target.
    Snr,
    /// Interference cap.
    Xi,
}

impl SweepAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::Snr => "snr",
            SweepAxis::Xi => "xi",
        }
    }
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "snr" | "rho" => Ok(SweepAxis::Snr),
            "xi" => Ok(SweepAxis::Xi),
            other => Err(Error::Config(format!("unknown sweep axis `{other}`"))),
        }
    }
}

/// Scale in which axis values are given and printed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AxisUnit {
    #[serde(rename = "linear")]
    Linear,
    #[serde(rename = "dB")]
    Db,
}

impl AxisUnit {
    pub fn as_str(self) -> &'static str {
        match self {
            AxisUnit::Linear => "linear",
            AxisUnit::Db => "dB",
        }
    }

    /// Converts an axis value to linear scale (`10^(dB/10)` for dB).
    pub fn to_linear(self, value: f64) -> f64 {
        match self {
            AxisUnit::Linear => value,
            AxisUnit::Db => 10f64.powf(value / 10.0),
        }
    }
}

impl std::str::FromStr for AxisUnit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "linear" | "lin" => Ok(AxisUnit::Linear),
            "db" => Ok(AxisUnit::Db),
            other => Err(Error::Config(format!("unknown axis unit `{other}`"))),
        }
    }
}

/// Solvers a sweep can evaluate on each trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Zfb,
    Nfb,
    /// Power without the interference constraint.
    LowerBound,
    /// Mean over random feasible beamformers.
    Feasible,
}

impl SolverKind {
    pub const ALL: [SolverKind; 4] = [
        SolverKind::Zfb,
        SolverKind::Nfb,
        SolverKind::LowerBound,
        SolverKind::Feasible,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SolverKind::Zfb => "zfb",
            SolverKind::Nfb => "nfb",
            SolverKind::LowerBound => "lower_bound",
            SolverKind::Feasible => "feasible",
        }
    }
}

impl std::str::FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SolverKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s.to_ascii_lowercase().replace('-', "_"))
            .ok_or_else(|| Error::Config(format!("unknown solver `{s}`")))
    }
}

/// How a scalar per-stream SNR `ρ` expands into `d` targets.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SnrPattern {
    /// Every stream gets `ρ`.
    Identical,
    /// Stream `i` gets `(1 + ρ)^{d·wᵢ} − 1` for rate shares `wᵢ > 0`
    /// summing to one, so the sum rate `Σ log(1 + ρᵢ)` equals that of the
    /// identical pattern.
    Distinct(Vec<f64>),
}

impl SnrPattern {
    pub fn targets(&self, rho: f64, d: usize) -> Vec<f64> {
        match self {
            SnrPattern::Identical => vec![rho; d],
            SnrPattern::Distinct(shares) => shares
                .iter()
                .map(|w| (1.0 + rho).powf(d as f64 * w) - 1.0)
                .collect(),
        }
    }

    fn validate(&self, d: usize) -> Result<()> {
        if let SnrPattern::Distinct(shares) = self {
            if shares.len() != d {
                return Err(Error::Config(format!(
                    "distinct pattern has {} shares for {d} streams",
                    shares.len()
                )));
            }
            if shares.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
                return Err(Error::Config("rate shares must be finite and > 0".into()));
            }
            let total: f64 = shares.iter().sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::Config(format!("rate shares must sum to 1, got {total}")));
            }
        }
        Ok(())
    }
}

/// Parses `identical` or `distinct:w1,w2,...`.
impl std::str::FromStr for SnrPattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("identical") {
            return Ok(SnrPattern::Identical);
        }
        let shares = s
            .strip_prefix("distinct:")
            .ok_or_else(|| Error::Config(format!("unknown SNR pattern `{s}`")))?;
        shares
            .split(',')
            .map(|w| {
                w.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Config(format!("bad rate share `{w}`")))
            })
            .collect::<Result<Vec<_>>>()
            .map(SnrPattern::Distinct)
    }
}

/// A seeded Monte-Carlo sweep over one axis.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    /// Dimensions, primary power, seed, and the fixed value of whichever of
    /// `ξ` / SNR is not swept. On the `Xi` axis the targets come from the
    /// template, or from its largest target through `snr_pattern`.
    pub scenario: ScenarioConfig,
    pub axis: SweepAxis,
    /// Strictly increasing, in `axis_unit`.
    pub axis_values: Vec<f64>,
    pub axis_unit: AxisUnit,
    pub trials: usize,
    pub solvers: Vec<SolverKind>,
    pub snr_pattern: SnrPattern,
    /// Random feasible points averaged per trial by the `feasible` solver.
    pub feasible_samples: usize,
    pub output_path: Option<PathBuf>,
}

impl SweepSpec {
    pub fn new(scenario: ScenarioConfig, axis: SweepAxis, axis_values: Vec<f64>, trials: usize) -> Self {
        Self {
            scenario,
            axis,
            axis_values,
            axis_unit: AxisUnit::Linear,
            trials,
            solvers: vec![SolverKind::Zfb, SolverKind::Nfb, SolverKind::LowerBound],
            snr_pattern: SnrPattern::Identical,
            feasible_samples: 100,
            output_path: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be >= 1".into()));
        }
        if self.axis_values.is_empty() {
            return Err(Error::Config("axis needs at least one value".into()));
        }
        if self.axis_values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("axis values must be finite".into()));
        }
        if !self.axis_values.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Config("axis values must be strictly increasing".into()));
        }
        if self.solvers.is_empty() {
            return Err(Error::Config("no solver selected".into()));
        }
        self.snr_pattern.validate(self.scenario.d())?;
        let s = &self.scenario;
        if self.solvers.contains(&SolverKind::Zfb) && s.m() < s.q() + s.d() {
            return Err(Error::Config(format!(
                "zero-forcing needs m - q >= d (m={}, q={}, d={})",
                s.m(),
                s.q(),
                s.d()
            )));
        }
        for k in 0..self.axis_values.len() {
            self.point(k)?;
        }
        Ok(())
    }

    /// Scenario at the `k`-th axis value, all quantities linear.
    pub fn point(&self, k: usize) -> Result<ScenarioConfig> {
        let value = self.axis_unit.to_linear(self.axis_values[k]);
        let base = &self.scenario;
        match self.axis {
            SweepAxis::Snr => base.with_snr_targets(self.snr_pattern.targets(value, base.d())),
            SweepAxis::Xi => {
                let with_xi = base.with_xi(value)?;
                match self.snr_pattern {
                    SnrPattern::Identical => Ok(with_xi),
                    SnrPattern::Distinct(_) => with_xi
                        .with_snr_targets(self.snr_pattern.targets(base.snr_targets()[0], base.d())),
                }
            }
        }
    }

    fn solvers_sorted(&self) -> Vec<SolverKind> {
        let mut s = self.solvers.clone();
        s.sort();
        s.dedup();
        s
    }
}

/// Aggregate of one solver at one axis value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub axis_value: f64,
    pub solver: SolverKind,
    /// Mean over feasible trials; `NaN` when none was feasible.
    pub mean_power: f64,
    pub power_stddev: f64,
    pub mean_interference: f64,
    pub infeasible_count: usize,
    pub trials: usize,
}

impl SweepRow {
    pub fn feasible_trials(&self) -> usize {
        self.trials - self.infeasible_count
    }
}

/// Result of [`run_sweep`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub axis: SweepAxis,
    pub axis_unit: AxisUnit,
    /// Grouped by axis value, then by solver.
    pub rows: Vec<SweepRow>,
    /// Trials where `power(ZFB) ≥ power(NFB) ≥ lower bound` failed.
    pub ordering_violations: usize,
}

pub const CSV_HEADER: &str = "axis,axis_unit,solver,mean_power,stddev,mean_interference,infeasible,trials";

/// Twelve significant digits, scientific notation.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else {
        format!("{x:.11e}")
    }
}

impl SweepTable {
    pub fn row(&self, axis_value: f64, solver: SolverKind) -> Option<&SweepRow> {
        self.rows
            .iter()
            .find(|r| r.axis_value == axis_value && r.solver == solver)
    }

    /// Rows of one solver in axis order.
    pub fn series(&self, solver: SolverKind) -> Vec<&SweepRow> {
        self.rows.iter().filter(|r| r.solver == solver).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.rows.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                format_float(r.axis_value),
                self.axis_unit.as_str(),
                r.solver.as_str(),
                format_float(r.mean_power),
                format_float(r.power_stddev),
                format_float(r.mean_interference),
                r.infeasible_count,
                r.trials
            );
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// Sum with pairwise (cascade) reduction in slice order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 8;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let (a, b) = values.split_at(values.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

/// Mean, sample standard deviation and mean of the second component over the
/// `Some` entries, in order.
fn aggregate(outcomes: &[Option<(f64, f64)>]) -> (f64, f64, f64, usize) {
    let power: Vec<f64> = outcomes.iter().flatten().map(|o| o.0).collect();
    let leak: Vec<f64> = outcomes.iter().flatten().map(|o| o.1).collect();
    let n = power.len();
    if n == 0 {
        return (f64::NAN, f64::NAN, f64::NAN, outcomes.len());
    }
    let mean = pairwise_sum(&power) / n as f64;
    let stddev = if n > 1 {
        let sq: Vec<f64> = power.iter().map(|p| (p - mean) * (p - mean)).collect();
        (pairwise_sum(&sq) / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    (mean, stddev, pairwise_sum(&leak) / n as f64, outcomes.len() - n)
}

fn seed_for(seed: u64, trial: u64, point: u64) -> u64 {
    // splitmix-style mixing keeps per-trial sampler seeds decorrelated.
    let mut z = seed ^ trial.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ point.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn evaluate(
    solver: SolverKind,
    derived: &DerivedModel,
    point: &ScenarioConfig,
    feasible_samples: usize,
    sampler_seed: u64,
) -> Result<Option<(f64, f64)>> {
    let snr = point.snr();
    let xi = point.xi();
    match solver {
        SolverKind::Zfb => solve_zfb(derived, &snr).map(|s| Some((s.power, s.interference))),
        SolverKind::Nfb => solve_nfb(derived, &snr, xi).map(|s| Some((s.power, s.interference))),
        SolverKind::LowerBound => {
            let power = lower_bound_power(derived, &snr)?;
            let (_, leak) = power_and_interference_at(derived, &snr, 0.0)?;
            Ok(Some((power, leak)))
        }
        SolverKind::Feasible => {
            if !xi_min(derived, &snr, xi)?.feasible {
                return Ok(None);
            }
            feasible_baseline_power(derived, &snr, xi, feasible_samples, sampler_seed)
        }
    }
}

/// Per-trial outcomes: `[point][solver]`.
type TrialOutcome = Vec<Vec<Option<(f64, f64)>>>;

fn run_trial(
    spec: &SweepSpec,
    points: &[ScenarioConfig],
    solvers: &[SolverKind],
    trial: u64,
) -> TrialOutcome {
    let derived = sample_channels(&spec.scenario, trial).and_then(|ch| build_derived(&ch, &spec.scenario));
    let derived = match derived {
        Ok(d) => d,
        Err(err) => {
            log::warn!("trial {trial}: {err}");
            return vec![vec![None; solvers.len()]; points.len()];
        }
    };
    points
        .iter()
        .enumerate()
        .map(|(k, point)| {
            solvers
                .iter()
                .map(|&solver| {
                    let seed = seed_for(spec.scenario.seed(), trial, k as u64);
                    match evaluate(solver, &derived, point, spec.feasible_samples, seed) {
                        Ok(v) => v,
                        Err(err) => {
                            log::debug!("trial {trial}, point {k}, {}: {err}", solver.as_str());
                            None
                        }
                    }
                })
                .collect()
        })
        .collect()
}

fn ordering_holds(zfb: Option<(f64, f64)>, nfb: Option<(f64, f64)>, lb: Option<(f64, f64)>) -> bool {
    let ge = |a: f64, b: f64| a >= b - 1e-9 * b.abs().max(1.0);
    let z_n = match (zfb, nfb) {
        (Some(z), Some(n)) => ge(z.0, n.0),
        _ => true,
    };
    let n_l = match (nfb, lb) {
        (Some(n), Some(l)) => ge(n.0, l.0),
        _ => true,
    };
    z_n && n_l
}

/// Runs every solver on every trial and axis value.
///
/// Trial `k` draws its channels from stream `k` of the scenario seed, the
/// same draw at every axis value. Trials run in parallel; their results are
/// reduced in trial order, so the table is identical for any thread count.
/// Solver errors on a trial count as infeasible and never abort the sweep.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepTable> {
    spec.validate()?;
    let solvers = spec.solvers_sorted();
    let points: Vec<ScenarioConfig> = (0..spec.axis_values.len())
        .map(|k| spec.point(k))
        .collect::<Result<_>>()?;

    let outcomes: Vec<TrialOutcome> = (0..spec.trials as u64)
        .into_par_iter()
        .map(|trial| run_trial(spec, &points, &solvers, trial))
        .collect();

    let index = |kind| solvers.iter().position(|&s| s == kind);
    let (zi, ni, li) = (
        index(SolverKind::Zfb),
        index(SolverKind::Nfb),
        index(SolverKind::LowerBound),
    );
    let mut ordering_violations = 0usize;
    for (trial, per_point) in outcomes.iter().enumerate() {
        for (k, row) in per_point.iter().enumerate() {
            let pick = |i: Option<usize>| i.and_then(|i| row[i]);
            if !ordering_holds(pick(zi), pick(ni), pick(li)) {
                ordering_violations += 1;
                log::warn!("trial {trial}, point {k}: solver power ordering violated");
            }
        }
    }

    let mut rows = Vec::with_capacity(points.len() * solvers.len());
    for (k, &axis_value) in spec.axis_values.iter().enumerate() {
        for (j, &solver) in solvers.iter().enumerate() {
            let column: Vec<Option<(f64, f64)>> = outcomes.iter().map(|o| o[k][j]).collect();
            let (mean_power, power_stddev, mean_interference, infeasible_count) = aggregate(&column);
            rows.push(SweepRow {
                axis_value,
                solver,
                mean_power,
                power_stddev,
                mean_interference,
                infeasible_count,
                trials: spec.trials,
            });
        }
    }
    let table = SweepTable {
        axis: spec.axis,
        axis_unit: spec.axis_unit,
        rows,
        ordering_violations,
    };
    if let Some(path) = &spec.output_path {
        table.write_csv(path)?;
    }
    Ok(table)
}

/// Access-probability sweep over `ξ` for several stream counts.
#[derive(Debug, Clone)]
pub struct AccessSpec {
    /// Dimensions, primary power, seed and per-stream SNR (its largest target).
    pub scenario: ScenarioConfig,
    /// Strictly increasing, in `axis_unit`.
    pub xi_values: Vec<f64>,
    pub axis_unit: AxisUnit,
    pub streams: Vec<usize>,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccessRow {
    pub xi: f64,
    pub streams: usize,
    pub probability: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccessTable {
    pub axis_unit: AxisUnit,
    pub rows: Vec<AccessRow>,
}

pub const ACCESS_CSV_HEADER: &str = "axis,axis_unit,streams,access_probability,trials";

impl AccessTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(ACCESS_CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                format_float(r.xi),
                self.axis_unit.as_str(),
                r.streams,
                format_float(r.probability),
                r.trials
            );
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// Fraction of channel draws granting access, for each stream count and cap.
pub fn run_access_prob(spec: &AccessSpec) -> Result<AccessTable> {
    if spec.trials == 0 {
        return Err(Error::Config("trials must be >= 1".into()));
    }
    if spec.streams.is_empty() || spec.xi_values.is_empty() {
        return Err(Error::Config("need at least one stream count and one cap".into()));
    }
    if !spec.xi_values.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::Config("interference caps must be strictly increasing".into()));
    }
    let rho = spec.scenario.snr_targets()[0];
    let mut rows = Vec::new();
    for &d in &spec.streams {
        let base = spec.scenario.with_snr_targets(vec![rho; d])?;
        for &xi in &spec.xi_values {
            let config = base.with_xi(spec.axis_unit.to_linear(xi))?;
            rows.push(AccessRow {
                xi,
                streams: d,
                probability: crate::feasibility::access_probability(&config, spec.trials),
                trials: spec.trials,
            });
        }
    }
    Ok(AccessTable {
        axis_unit: spec.axis_unit,
        rows,
    })
}
