//! Threshold extraction by the critical-exponent method, jackknife error
//! bars over code distances, and exponential decay fits below threshold.
//!
//! The scaling ansatz rescales the error rate as x = (p - p_c) d^(1/nu);
//! near the critical point the failure rate is fit to the quadratic model
//! f = A + B x + C x^2 by weighted least squares over (p_c, nu, A, B, C).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::FailureRateEstimate;

#[derive(Debug, Error, PartialEq)]
pub enum FitError {
    #[error("need at least {0} points, got {1}")]
    TooFewPoints(usize, usize),
    #[error("need at least {0} distinct distances, got {1}")]
    TooFewDistances(usize, usize),
    #[error("point {0} has non-positive stderr")]
    NonPositiveStderr(usize),
    #[error("degenerate design: all points share one error rate")]
    DegenerateDesign,
    #[error("no points fall within the fit window around p = {0}")]
    EmptyWindow(f64),
    #[error("fit did not converge after {iterations} iterations (cost {cost:.3e})")]
    NoConvergence { iterations: usize, cost: f64 },
    #[error("normal matrix is singular; data does not constrain the model")]
    SingularNormalMatrix,
    #[error("leave-one-out fit failed for d in {0:?}")]
    LeaveOneOutFailed(Vec<usize>),
    #[error("failure rate is zero at d = {0}; increase trials or raise p")]
    ZeroFailureRate(usize),
}

/// One Monte Carlo point entering a fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitPoint {
    pub d: usize,
    pub p: f64,
    pub f: f64,
    pub stderr: f64,
}

impl FitPoint {
    /// Converts an estimate, flooring the binomial stderr at 1/(2 trials)
    /// so that points with f = 0 or f = 1 keep a finite weight.
    pub fn from_estimate(e: &FailureRateEstimate) -> FitPoint {
        FitPoint {
            d: e.d,
            p: e.p,
            f: e.f,
            stderr: e.stderr.max(0.5 / e.trials as f64),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    /// Half-width of the window around the crossing-scan estimate of p_c;
    /// points outside are dropped before fitting. `None` keeps everything.
    pub window: Option<f64>,
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            window: Some(0.05),
            max_iterations: 500,
            tolerance: 1e-8,
        }
    }
}

/// Fitted critical parameters with uncertainties.
#[derive(Debug, Clone, Serialize)]
pub struct FitResult {
    pub p_c: f64,
    pub nu: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// Covariance of (p_c, nu, A, B, C) from the Gauss-Newton normal
    /// matrix at the optimum.
    pub covariance: [[f64; 5]; 5],
    pub chi2_per_dof: f64,
    pub iterations: usize,
    pub points_used: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jackknife_stderr: Option<f64>,
}

impl FitResult {
    pub fn params(&self) -> [f64; 5] {
        [self.p_c, self.nu, self.a, self.b, self.c]
    }

    /// Rescaled coordinate of a point under the fitted parameters.
    pub fn x(&self, d: usize, p: f64) -> f64 {
        (p - self.p_c) * (d as f64).powf(1.0 / self.nu)
    }

    /// Model failure rate at a point.
    pub fn model(&self, d: usize, p: f64) -> f64 {
        let x = self.x(d, p);
        self.a + self.b * x + self.c * x * x
    }
}

/// One row of the plot-ready data-collapse output.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CollapsePoint {
    pub d: usize,
    pub p: f64,
    pub x: f64,
    pub f: f64,
    pub f_fit: f64,
}

pub fn collapse_curve(result: &FitResult, points: &[FitPoint]) -> Vec<CollapsePoint> {
    let mut out: Vec<CollapsePoint> = points
        .iter()
        .map(|pt| CollapsePoint {
            d: pt.d,
            p: pt.p,
            x: result.x(pt.d, pt.p),
            f: pt.f,
            f_fit: result.model(pt.d, pt.p),
        })
        .collect();
    out.sort_by(|a, b| a.x.partial_cmp(&b.x).unwrap());
    out
}

fn model_at(theta: &[f64; 5], d: usize, p: f64) -> f64 {
    let [p_c, nu, a, b, c] = *theta;
    let x = (p - p_c) * (d as f64).powf(1.0 / nu);
    a + b * x + c * x * x
}

fn validate(points: &[FitPoint]) -> Result<(), FitError> {
    if points.len() < 5 {
        return Err(FitError::TooFewPoints(5, points.len()));
    }
    let mut ds: Vec<usize> = points.iter().map(|p| p.d).collect();
    ds.sort_unstable();
    ds.dedup();
    if ds.len() < 2 {
        return Err(FitError::TooFewDistances(2, ds.len()));
    }
    for (i, pt) in points.iter().enumerate() {
        if !(pt.stderr > 0.0) {
            return Err(FitError::NonPositiveStderr(i));
        }
    }
    let mut ps: Vec<f64> = points.iter().map(|p| p.p).collect();
    ps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ps.dedup();
    if ps.len() < 2 {
        return Err(FitError::DegenerateDesign);
    }
    Ok(())
}

/// Coarse crossing scan: the error rate where the failure rates of the
/// different distances are closest together.
fn crossing_guess(points: &[FitPoint]) -> f64 {
    let mut ps: Vec<f64> = points.iter().map(|p| p.p).collect();
    ps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ps.dedup();
    let mut best: Option<(f64, f64)> = None;
    for &p in &ps {
        let fs: Vec<f64> = points
            .iter()
            .filter(|pt| pt.p == p)
            .map(|pt| pt.f)
            .collect();
        if fs.len() < 2 {
            continue;
        }
        let spread = fs.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - fs.iter().cloned().fold(f64::INFINITY, f64::min);
        if best.map_or(true, |(s, _)| spread < s) {
            best = Some((spread, p));
        }
    }
    best.map(|(_, p)| p).unwrap_or_else(|| ps[ps.len() / 2])
}

/// Weighted linear least squares for (A, B, C) at fixed (p_c, nu).
fn quadratic_warm_start(points: &[FitPoint], p_c: f64, nu: f64) -> Result<[f64; 3], FitError> {
    let mut m = [[0.0f64; 3]; 3];
    let mut rhs = [0.0f64; 3];
    for pt in points {
        let x = (pt.p - p_c) * (pt.d as f64).powf(1.0 / nu);
        let w = 1.0 / (pt.stderr * pt.stderr);
        let basis = [1.0, x, x * x];
        for i in 0..3 {
            rhs[i] += w * basis[i] * pt.f;
            for j in 0..3 {
                m[i][j] += w * basis[i] * basis[j];
            }
        }
    }
    solve3(m, rhs).ok_or(FitError::SingularNormalMatrix)
}

fn solve3(mut m: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap())?;
        if m[piv][col] == 0.0 {
            return None;
        }
        m.swap(col, piv);
        b.swap(col, piv);
        for row in 0..3 {
            if row == col {
                continue;
            }
            let k = m[row][col] / m[col][col];
            for c in 0..3 {
                m[row][c] -= k * m[col][c];
            }
            b[row] -= k * b[col];
        }
    }
    Some([b[0] / m[0][0], b[1] / m[1][1], b[2] / m[2][2]])
}

fn solve5(mut m: [[f64; 5]; 5], mut b: [f64; 5]) -> Option<[f64; 5]> {
    for col in 0..5 {
        let piv = (col..5).max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap())?;
        if m[piv][col] == 0.0 {
            return None;
        }
        m.swap(col, piv);
        b.swap(col, piv);
        for row in 0..5 {
            if row == col {
                continue;
            }
            let k = m[row][col] / m[col][col];
            for c in 0..5 {
                m[row][c] -= k * m[col][c];
            }
            b[row] -= k * b[col];
        }
    }
    let mut x = [0.0; 5];
    for i in 0..5 {
        x[i] = b[i] / m[i][i];
    }
    Some(x)
}

fn invert5(m: [[f64; 5]; 5]) -> Option<[[f64; 5]; 5]> {
    let mut inv = [[0.0f64; 5]; 5];
    for col in 0..5 {
        let mut e = [0.0; 5];
        e[col] = 1.0;
        let x = solve5(m, e)?;
        for row in 0..5 {
            inv[row][col] = x[row];
        }
    }
    // Symmetrize: the normal matrix is symmetric, so rounding is the only
    // source of asymmetry.
    for i in 0..5 {
        for j in (i + 1)..5 {
            let s = 0.5 * (inv[i][j] + inv[j][i]);
            inv[i][j] = s;
            inv[j][i] = s;
        }
    }
    Some(inv)
}

fn cost_of(points: &[FitPoint], theta: &[f64; 5]) -> f64 {
    points
        .iter()
        .map(|pt| {
            let r = (pt.f - model_at(theta, pt.d, pt.p)) / pt.stderr;
            r * r
        })
        .sum()
}

/// Weighted nonlinear least squares of the quadratic scaling model by
/// Gauss-Newton iteration with multiplicative (Levenberg-style) damping:
/// the damping grows when a step increases the cost and shrinks when it
/// decreases.
pub fn fit_threshold(points: &[FitPoint], opts: &FitOptions) -> Result<FitResult, FitError> {
    validate(points)?;
    let guess = crossing_guess(points);
    let windowed: Vec<FitPoint> = match opts.window {
        Some(w) => points
            .iter()
            .filter(|pt| (pt.p - guess).abs() <= w)
            .cloned()
            .collect(),
        None => points.to_vec(),
    };
    if windowed.len() < 5 {
        return Err(FitError::EmptyWindow(guess));
    }
    validate(&windowed)?;
    let points = &windowed[..];

    let nu0 = 1.0;
    let [a0, b0, c0] = quadratic_warm_start(points, guess, nu0)?;
    let mut theta = [guess, nu0, a0, b0, c0];
    let mut cost = cost_of(points, &theta);
    let mut lambda = 1e-3;
    let mut iterations = 0;

    for iter in 0..opts.max_iterations {
        iterations = iter + 1;
        // Gauss-Newton normal equations with analytic Jacobian.
        let mut h = [[0.0f64; 5]; 5];
        let mut g = [0.0f64; 5];
        for pt in points {
            let [p_c, nu, _a, b, c] = theta;
            let dln = (pt.d as f64).ln();
            let dpow = (pt.d as f64).powf(1.0 / nu);
            let x = (pt.p - p_c) * dpow;
            let dm_dx = b + 2.0 * c * x;
            let jac = [
                -dm_dx * dpow,
                -dm_dx * x * dln / (nu * nu),
                1.0,
                x,
                x * x,
            ];
            let w = 1.0 / (pt.stderr * pt.stderr);
            let resid = pt.f - model_at(&theta, pt.d, pt.p);
            for i in 0..5 {
                g[i] += w * jac[i] * resid;
                for j in 0..5 {
                    h[i][j] += w * jac[i] * jac[j];
                }
            }
        }

        let mut accepted = false;
        for _ in 0..30 {
            let mut damped = h;
            for i in 0..5 {
                damped[i][i] += lambda * h[i][i].max(1e-30);
            }
            let Some(step) = solve5(damped, g) else {
                return Err(FitError::SingularNormalMatrix);
            };
            let mut trial = theta;
            for i in 0..5 {
                trial[i] += step[i];
            }
            let feasible = trial[1] > 1e-3 && trial[0] > 0.0 && trial[0] < 1.0;
            let trial_cost = if feasible {
                cost_of(points, &trial)
            } else {
                f64::INFINITY
            };
            if trial_cost <= cost {
                let rel_change = (0..5)
                    .map(|i| (step[i] / theta[i].abs().max(1e-12)).abs())
                    .fold(0.0f64, f64::max);
                theta = trial;
                cost = trial_cost;
                lambda = (lambda / 3.0).max(1e-14);
                accepted = true;
                if rel_change <= opts.tolerance {
                    let h_inv = invert5(h).ok_or(FitError::SingularNormalMatrix)?;
                    let dof = (points.len() as i64 - 5).max(1) as f64;
                    return Ok(FitResult {
                        p_c: theta[0],
                        nu: theta[1],
                        a: theta[2],
                        b: theta[3],
                        c: theta[4],
                        covariance: h_inv,
                        chi2_per_dof: cost / dof,
                        iterations,
                        points_used: points.len(),
                        jackknife_stderr: None,
                    });
                }
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            // Damping saturated without progress: accept the current
            // optimum if the gradient is already negligible.
            let gnorm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            if gnorm <= 1e-10 * cost.max(1.0) {
                let h_inv = invert5(h).ok_or(FitError::SingularNormalMatrix)?;
                let dof = (points.len() as i64 - 5).max(1) as f64;
                return Ok(FitResult {
                    p_c: theta[0],
                    nu: theta[1],
                    a: theta[2],
                    b: theta[3],
                    c: theta[4],
                    covariance: h_inv,
                    chi2_per_dof: cost / dof,
                    iterations,
                    points_used: points.len(),
                    jackknife_stderr: None,
                });
            }
            return Err(FitError::NoConvergence { iterations, cost });
        }
    }
    Err(FitError::NoConvergence {
        iterations,
        cost,
    })
}

/// Jackknife standard error over the leave-one-out estimates.
pub fn jackknife_stderr_from_estimates(estimates: &[f64]) -> f64 {
    let k = estimates.len() as f64;
    let mean = estimates.iter().sum::<f64>() / k;
    let ss: f64 = estimates.iter().map(|e| (e - mean) * (e - mean)).sum();
    ((k - 1.0) / k * ss).sqrt()
}

/// Jackknife error bar for p_c: refits with each code distance removed and
/// returns the spread of the leave-one-out estimates.
pub fn jackknife_pc(points: &[FitPoint], opts: &FitOptions) -> Result<f64, FitError> {
    let mut ds: Vec<usize> = points.iter().map(|p| p.d).collect();
    ds.sort_unstable();
    ds.dedup();
    if ds.len() < 3 {
        return Err(FitError::TooFewDistances(3, ds.len()));
    }
    let mut estimates = Vec::with_capacity(ds.len());
    let mut failed = Vec::new();
    for &leave in &ds {
        let subset: Vec<FitPoint> = points.iter().filter(|p| p.d != leave).cloned().collect();
        match fit_threshold(&subset, opts) {
            Ok(r) => estimates.push(r.p_c),
            Err(_) => failed.push(leave),
        }
    }
    if !failed.is_empty() {
        return Err(FitError::LeaveOneOutFailed(failed));
    }
    Ok(jackknife_stderr_from_estimates(&estimates))
}

/// Exponential decay fit below threshold.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DecayFit {
    /// Decay rate of f ~ exp(-alpha d).
    pub alpha: f64,
    pub alpha_stderr: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points_used: usize,
}

/// Weighted linear regression of ln f on d over (d, f, stderr) points at
/// fixed error rate; f = 1 points are excluded, f = 0 is an error.
pub fn fit_decay(points: &[(usize, f64, f64)]) -> Result<DecayFit, FitError> {
    for &(d, f, _) in points {
        if f == 0.0 {
            return Err(FitError::ZeroFailureRate(d));
        }
    }
    let usable: Vec<(usize, f64, f64)> = points
        .iter()
        .filter(|&&(_, f, _)| f < 1.0)
        .cloned()
        .collect();
    if usable.len() < 3 {
        return Err(FitError::TooFewPoints(3, usable.len()));
    }
    for (i, &(_, _, stderr)) in usable.iter().enumerate() {
        if !(stderr > 0.0) {
            return Err(FitError::NonPositiveStderr(i));
        }
    }
    let (mut sw, mut swx, mut swy, mut swxx, mut swxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(d, f, stderr) in &usable {
        let x = d as f64;
        let y = f.ln();
        // Var(ln f) = (stderr / f)^2 by error propagation.
        let w = (f / stderr) * (f / stderr);
        sw += w;
        swx += w * x;
        swy += w * y;
        swxx += w * x * x;
        swxy += w * x * y;
    }
    let delta = sw * swxx - swx * swx;
    if delta <= 0.0 {
        return Err(FitError::SingularNormalMatrix);
    }
    let slope = (sw * swxy - swx * swy) / delta;
    let intercept = (swxx * swy - swx * swxy) / delta;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    let ybar = swy / sw;
    for &(d, f, stderr) in &usable {
        let y = f.ln();
        let w = (f / stderr) * (f / stderr);
        let yhat = intercept + slope * d as f64;
        ss_res += w * (y - yhat) * (y - yhat);
        ss_tot += w * (y - ybar) * (y - ybar);
    }
    Ok(DecayFit {
        alpha: -slope,
        alpha_stderr: (sw / delta).sqrt(),
        intercept,
        r_squared: if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 },
        points_used: usable.len(),
    })
}
