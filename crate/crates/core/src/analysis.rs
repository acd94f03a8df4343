//! Least-squares growth fits of completion time against `log2 N`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::sim::{sweep, Scenario, SweepGrid, SweepRow};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegressionFit {
    pub intercept: f64,
    pub slope: f64,
    /// Clamped to `[0, 1]`.
    pub r_squared: f64,
    pub n_points: usize,
    pub residual_se: f64,
}

/// Ordinary least squares of `y` on `x`.
pub fn fit_linear(points: &[(f64, f64)]) -> Result<RegressionFit> {
    let n = points.len();
    if n < 2 {
        return Err(Error::DegenerateDesign("need at least two points".into()));
    }
    let nf = n as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = points.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx <= f64::EPSILON * nf * (1.0 + mx * mx) {
        return Err(Error::DegenerateDesign("all x values are equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = points.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let r_squared = if syy == 0.0 { 1.0 } else { (1.0 - sse / syy).clamp(0.0, 1.0) };
    let residual_se = if n > 2 { (sse / (nf - 2.0)).sqrt() } else { 0.0 };
    Ok(RegressionFit { intercept, slope, r_squared, n_points: n, residual_se })
}

/// Fit of `y` on `log2 N` over `(N, y)` points.
pub fn fit_loglinear(points: &[(u64, f64)]) -> Result<RegressionFit> {
    if points.iter().any(|&(n, _)| n == 0) {
        return Err(Error::InvalidArgument("N must be positive".into()));
    }
    let xy: Vec<(f64, f64)> = points.iter().map(|&(n, y)| ((n as f64).log2(), y)).collect();
    fit_linear(&xy)
}

/// Every replication of every row as `(N, rounds / scale)`.
pub fn sample_points(rows: &[SweepRow], scale: f64) -> Vec<(u64, f64)> {
    rows.iter()
        .flat_map(|r| r.stats.samples.iter().map(move |&s| (r.n_peers as u64, s as f64 / scale)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrowthSpec {
    pub scenario: Scenario,
    pub m_values: Vec<usize>,
    pub n_values: Vec<usize>,
    pub replications: usize,
    pub master_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthRow {
    pub n_parts: usize,
    /// Completion time in time units (`rounds / M`).
    pub fit: RegressionFit,
    /// Same data in rounds; slope and intercept are `M` times larger.
    pub rounds_fit: RegressionFit,
    /// Slope of the optimal centralized makespan, `1 / M`.
    pub centralized_slope: f64,
}

/// One fit per `M` of the makespan in time units (`rounds / M`, a round
/// lasting `1/M`) against `log2 N`, next to the centralized slope `1/M`.
pub fn growth_report(spec: &GrowthSpec, exec: Execution) -> Result<(Vec<GrowthRow>, Vec<SweepRow>)> {
    if spec.replications < 2 {
        return Err(Error::InvalidArgument("need at least two replications".into()));
    }
    let grid = SweepGrid {
        scenarios: vec![spec.scenario],
        n_values: spec.n_values.clone(),
        m_values: spec.m_values.clone(),
        replications: spec.replications,
        master_seed: spec.master_seed,
    };
    let rows = sweep(&grid, exec)?;
    let mut out = Vec::with_capacity(spec.m_values.len());
    for &m in &spec.m_values {
        let subset: Vec<SweepRow> = rows.iter().filter(|r| r.n_parts == m).cloned().collect();
        let fit = fit_loglinear(&sample_points(&subset, m as f64))?;
        let rounds_fit = fit_loglinear(&sample_points(&subset, 1.0))?;
        out.push(GrowthRow { n_parts: m, fit, rounds_fit, centralized_slope: 1.0 / m as f64 });
    }
    Ok((out, rows))
}

/// `m,intercept,slope,r_squared,centralized_slope,rounds_intercept,rounds_slope`;
/// the first fit is in time units.
pub fn growth_csv(rows: &[GrowthRow]) -> String {
    let mut out = String::from("m,intercept,slope,r_squared,centralized_slope,rounds_intercept,rounds_slope\n");
    for r in rows {
        out.push_str(&format!(
            "{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
            r.n_parts,
            r.fit.intercept,
            r.fit.slope,
            r.fit.r_squared,
            r.centralized_slope,
            r.rounds_fit.intercept,
            r.rounds_fit.slope
        ));
    }
    out
}

/// `scenario,n,m,replication,rounds`, one line per replication.
pub fn samples_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("scenario,n,m,replication,rounds\n");
    for r in rows {
        for (i, s) in r.stats.samples.iter().enumerate() {
            out.push_str(&format!("{},{},{},{},{}\n", r.scenario, r.n_peers, r.n_parts, i, s));
        }
    }
    out
}
