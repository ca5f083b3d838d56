//! Binary logistic regression fitted by damped Newton-Raphson.
//!
//! Maximizes `sum_i [y_i eta_i - log(1 + exp(eta_i))] - (l2 / 2) * |beta|^2`
//! where `eta_i = beta0 + x_i . beta` and the intercept is not penalized.
//! Features are binary and sparse, so the Hessian is accumulated from the
//! nonzero pairs of each row and solved densely with a Cholesky factorization.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::design::BinaryDesign;
use crate::error::{Error, Result};

/// Unpenalized fits whose largest |coefficient| passes this bound are
/// reported as separated rather than converged.
pub const SEPARATION_BOUND: f64 = 25.0;

/// Newton steps at or below this ∞-norm count as stationary.
const STEP_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticOptions {
    /// L2 strength on the non-intercept coefficients.
    pub l2: f64,
    /// Convergence threshold on the ∞-norm of the per-observation gradient.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for LogisticOptions {
    fn default() -> Self {
        LogisticOptions {
            l2: 0.0,
            tol: 1e-8,
            max_iter: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub converged: bool,
    pub separation_flag: bool,
    pub n_iter: usize,
    /// Wald standard errors of `coefficients`, from the inverse information.
    pub standard_errors: Option<Vec<f64>>,
    pub intercept_se: Option<f64>,
}

impl LogisticModel {
    pub fn linear_predictor(&self, row: &[u32]) -> f64 {
        self.intercept
            + row
                .iter()
                .map(|&j| self.coefficients[j as usize])
                .sum::<f64>()
    }
}

fn sigmoid(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

/// log(1 + exp(eta)) without overflow.
fn softplus(eta: f64) -> f64 {
    if eta > 0.0 {
        eta + (-eta).exp().ln_1p()
    } else {
        eta.exp().ln_1p()
    }
}

fn eta(theta: &[f64], row: &[u32]) -> f64 {
    theta[0] + row.iter().map(|&j| theta[j as usize + 1]).sum::<f64>()
}

fn check_inputs(design: &BinaryDesign, y: &[bool]) -> Result<()> {
    if design.n_rows() != y.len() {
        return Err(Error::data(format!(
            "{} design rows but {} labels",
            design.n_rows(),
            y.len()
        )));
    }
    if y.is_empty() {
        return Err(Error::Fit("no observations".into()));
    }
    Ok(())
}

/// Penalized log-likelihood at `theta = [intercept, coefficients...]`.
pub fn penalized_log_likelihood(design: &BinaryDesign, y: &[bool], l2: f64, theta: &[f64]) -> f64 {
    let ll: f64 = design
        .rows()
        .iter()
        .zip(y)
        .map(|(row, &yi)| {
            let e = eta(theta, row);
            if yi {
                e - softplus(e)
            } else {
                -softplus(e)
            }
        })
        .sum();
    ll - 0.5 * l2 * theta[1..].iter().map(|b| b * b).sum::<f64>()
}

/// Gradient of [`penalized_log_likelihood`] with respect to `theta`.
pub fn gradient(design: &BinaryDesign, y: &[bool], l2: f64, theta: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; theta.len()];
    for (row, &yi) in design.rows().iter().zip(y) {
        let r = yi as u8 as f64 - sigmoid(eta(theta, row));
        g[0] += r;
        for &j in row {
            g[j as usize + 1] += r;
        }
    }
    for (gj, bj) in g[1..].iter_mut().zip(&theta[1..]) {
        *gj -= l2 * bj;
    }
    g
}

/// Negative Hessian (observed information) of the penalized log-likelihood.
fn information(design: &BinaryDesign, l2: f64, theta: &[f64]) -> DMatrix<f64> {
    let d = theta.len();
    let mut h = DMatrix::<f64>::zeros(d, d);
    for row in design.rows() {
        let mu = sigmoid(eta(theta, row));
        let w = mu * (1.0 - mu);
        h[(0, 0)] += w;
        for (a, &ja) in row.iter().enumerate() {
            let ia = ja as usize + 1;
            h[(0, ia)] += w;
            for &jb in &row[a..] {
                h[(ia, jb as usize + 1)] += w;
            }
        }
    }
    for i in 0..d {
        for j in 0..i {
            h[(i, j)] = h[(j, i)];
        }
    }
    for i in 1..d {
        h[(i, i)] += l2;
    }
    h
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Fits an L2-penalized logistic regression with an unpenalized intercept.
///
/// A design with zero features gives an intercept-only fit; any other fit
/// requires both classes in `y`. With `l2 == 0`, a fit whose coefficients
/// run past [`SEPARATION_BOUND`] is returned with `separation_flag` set and
/// `converged == false`.
pub fn fit_logistic(design: &BinaryDesign, y: &[bool], opts: &LogisticOptions) -> Result<LogisticModel> {
    check_inputs(design, y)?;
    if opts.l2 < 0.0 || !opts.l2.is_finite() {
        return Err(Error::config(format!("l2 must be a finite value >= 0, got {}", opts.l2)));
    }
    let n_pos = y.iter().filter(|&&v| v).count();
    if design.n_features() > 0 && (n_pos == 0 || n_pos == y.len()) {
        return Err(Error::Fit(
            "outcome has a single class; coefficients are not identifiable".into(),
        ));
    }

    let n = y.len() as f64;
    let d = design.n_features() + 1;
    let mut theta = vec![0.0; d];
    // start the intercept at the marginal log-odds when it is finite
    if n_pos > 0 && n_pos < y.len() {
        let p = n_pos as f64 / n;
        theta[0] = (p / (1.0 - p)).ln();
    }

    let mut converged = false;
    let mut separated = false;
    let mut n_iter = 0;
    let mut ll = penalized_log_likelihood(design, y, opts.l2, &theta);

    while n_iter < opts.max_iter {
        let g = gradient(design, y, opts.l2, &theta);
        let info = information(design, opts.l2, &theta);
        let step = match info.clone().cholesky() {
            Some(chol) => chol.solve(&DVector::from_vec(g.clone())),
            None => {
                // singular information: only reachable without a penalty
                separated = opts.l2 == 0.0 && inf_norm(&theta) > 10.0;
                break;
            }
        };
        let small_gradient = inf_norm(&g) / n <= opts.tol;
        if small_gradient && inf_norm(step.as_slice()) <= STEP_TOL {
            converged = true;
            break;
        }

        n_iter += 1;
        let mut t = 1.0;
        let mut candidate: Vec<f64>;
        let mut cand_ll;
        loop {
            candidate = theta.iter().zip(step.iter()).map(|(a, s)| a + t * s).collect();
            cand_ll = penalized_log_likelihood(design, y, opts.l2, &candidate);
            if cand_ll >= ll - 1e-12 * ll.abs() || t < 1e-10 {
                break;
            }
            t *= 0.5;
        }
        theta = candidate;
        ll = cand_ll;

        if opts.l2 == 0.0 && inf_norm(&theta) > SEPARATION_BOUND {
            separated = true;
            break;
        }
    }

    let (standard_errors, intercept_se) = if converged {
        match information(design, opts.l2, &theta).try_inverse() {
            Some(inv) if (0..d).all(|i| inv[(i, i)] > 0.0) => (
                Some((1..d).map(|i| inv[(i, i)].sqrt()).collect()),
                Some(inv[(0, 0)].sqrt()),
            ),
            _ => (None, None),
        }
    } else {
        (None, None)
    };

    Ok(LogisticModel {
        intercept: theta[0],
        coefficients: theta[1..].to_vec(),
        converged,
        separation_flag: separated,
        n_iter,
        standard_errors,
        intercept_se,
    })
}

/// Inverse-logit of the linear predictor for every row.
pub fn predict_proba(model: &LogisticModel, design: &BinaryDesign) -> Result<Vec<f64>> {
    if design.n_features() != model.coefficients.len() {
        return Err(Error::data(format!(
            "model has {} coefficients but design has {} features",
            model.coefficients.len(),
            design.n_features()
        )));
    }
    Ok(design
        .rows()
        .iter()
        .map(|row| sigmoid(model.linear_predictor(row)))
        .collect())
}
