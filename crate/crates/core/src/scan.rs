//! One-parameter scans over the measurement angle `θ`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inflation::max_visibility_simulable;
use crate::quantum::ejm_correlations;
use crate::witness::ejm_witness_1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScanKind {
    /// Largest visibility the one-nonlocal-source model reproduces.
    SimVisibility,
    /// Visibility at which the first joint-measurement witness reaches its bound.
    WitnessThreshold,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanSpec {
    pub what: ScanKind,
    pub theta_min: f64,
    pub theta_max: f64,
    /// Number of intervals; the grid has `steps + 1` points.
    pub steps: usize,
    pub tol: f64,
}

impl ScanSpec {
    pub fn grid(&self) -> Vec<f64> {
        (0..=self.steps)
            .map(|k| {
                if k == self.steps {
                    self.theta_max
                } else {
                    self.theta_min + (self.theta_max - self.theta_min) * k as f64 / self.steps as f64
                }
            })
            .collect()
    }

    fn validate(&self) -> Result<()> {
        let ok = |t: f64| (0.0..=std::f64::consts::FRAC_PI_2).contains(&t);
        if !ok(self.theta_min) || !ok(self.theta_max) || self.theta_min > self.theta_max {
            return Err(Error::OutOfRange(format!("theta range [{}, {}] not inside [0, pi/2]", self.theta_min, self.theta_max)));
        }
        if self.steps == 0 {
            return Err(Error::OutOfRange("scan needs at least one step".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::OutOfRange(format!("tolerance {} must be positive", self.tol)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub version: String,
    pub spec: ScanSpec,
    /// `(theta, value)`, in grid order.
    pub rows: Vec<(f64, f64)>,
}

/// Root in `v ∈ [0, 1]` of `witness(θ, v) = 1`, to below `tol`.
pub fn witness_threshold(theta: f64, tol: f64) -> Result<f64> {
    let w = ejm_witness_1();
    let f = |v: f64| -> Result<f64> { w.eval(&ejm_correlations(theta, v)?) };
    let (mut lo, mut hi) = (0.0, 1.0);
    if f(hi)? < w.bound {
        return Err(Error::OutOfRange(format!("witness stays below its bound at theta={theta}")));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if f(mid)? > w.bound {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn point(spec: &ScanSpec, theta: f64) -> Result<f64> {
    match spec.what {
        ScanKind::SimVisibility => max_visibility_simulable(theta, spec.tol),
        ScanKind::WitnessThreshold => witness_threshold(theta, spec.tol),
    }
}

/// Evaluates every grid point on `jobs` worker threads. Results do not
/// depend on `jobs`.
pub fn run_scan(spec: &ScanSpec, jobs: usize) -> Result<ScanResult> {
    spec.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::OutOfRange(format!("worker pool: {e}")))?;
    let grid = spec.grid();
    let values: Vec<Result<f64>> = pool.install(|| grid.par_iter().map(|&t| point(spec, t)).collect());
    let rows = grid.iter().zip(values).map(|(&t, v)| v.map(|v| (t, v))).collect::<Result<Vec<_>>>()?;
    Ok(ScanResult { version: env!("CARGO_PKG_VERSION").into(), spec: spec.clone(), rows })
}

/// `x` with 12 significant digits, in plain notation where reasonable.
pub fn sig12(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    if (-5..=12).contains(&mag) {
        let decimals = (11 - mag).max(0) as usize;
        let s = format!("{x:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{x:.11e}")
    }
}

impl ScanResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("theta,value\n");
        for (t, v) in &self.rows {
            out.push_str(&format!("{},{}\n", sig12(*t), sig12(*v)));
        }
        out
    }

    /// Version and parameter echo accompanying the CSV.
    pub fn metadata_json(&self) -> String {
        let meta = serde_json::json!({
            "version": self.version,
            "what": self.spec.what,
            "theta_min": self.spec.theta_min,
            "theta_max": self.spec.theta_max,
            "steps": self.spec.steps,
            "tol": self.spec.tol,
            "points": self.rows.len(),
        });
        serde_json::to_string_pretty(&meta).expect("metadata serializes") + "\n"
    }

    pub fn min_row(&self) -> Option<(f64, f64)> {
        self.rows.iter().copied().min_by(|a, b| a.1.total_cmp(&b.1))
    }
}
