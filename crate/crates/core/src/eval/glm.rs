//! Binomial logistic regression of per-report success counts on annotator.

use super::normal::two_sided_p;
use super::ReportOutcome;
use indexmap::IndexMap;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub const MAX_ITERATIONS: usize = 100;
pub const DEVIANCE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GlmError {
    #[error("need at least two annotators, got {0}")]
    TooFewAnnotators(usize),
    #[error("reference annotator {0} has no outcomes")]
    MissingReference(String),
    #[error("invalid outcome for {annotator}/{report_id}: k = {k}, n = {n}")]
    InvalidOutcome {
        annotator: String,
        report_id: String,
        k: u64,
        n: u64,
    },
    #[error("separation detected: annotator {annotator} succeeded on {successes} of {trials}")]
    SeparationDetected {
        annotator: String,
        successes: u64,
        trials: u64,
    },
    #[error("no convergence after {iterations} iterations (last deviance {deviance})")]
    NonConvergence { iterations: usize, deviance: f64 },
    #[error("singular information matrix")]
    Singular,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub beta: f64,
    pub se: f64,
    pub z: f64,
    pub p: f64,
}

impl Coefficient {
    fn new(beta: f64, se: f64) -> Self {
        let z = beta / se;
        Self {
            beta,
            se,
            z,
            p: two_sided_p(z),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlmFit {
    pub reference_id: String,
    pub intercept: Coefficient,
    /// One entry per non-reference annotator, in order of first appearance.
    pub coefficients: IndexMap<String, Coefficient>,
    /// Every annotator including the reference.
    pub fitted_probabilities: IndexMap<String, f64>,
    pub deviance: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn logistic(eta: f64) -> f64 {
    1.0 / (1.0 + (-eta).exp())
}

/// `2 * [k ln(k / (n mu)) + (n - k) ln((n - k) / (n (1 - mu)))]` with the
/// `0 ln 0 = 0` convention.
fn unit_deviance(k: f64, n: f64, mu: f64) -> f64 {
    let a = if k > 0.0 { k * (k / (n * mu)).ln() } else { 0.0 };
    let b = if n - k > 0.0 {
        (n - k) * ((n - k) / (n * (1.0 - mu))).ln()
    } else {
        0.0
    };
    2.0 * (a + b)
}

/// Fits `logit(p) = b0 + sum_j b_j * [annotator = j]` with the reference
/// annotator as baseline, by iteratively reweighted least squares over the
/// per-report binomial observations.
///
/// Iteration stops when `|dev - dev_prev| / (|dev| + 0.1)` drops below
/// [`DEVIANCE_TOLERANCE`]. Standard errors come from the inverse Fisher
/// information at the final estimate.
pub fn fit_binomial_glm(outcomes: &[ReportOutcome], reference_id: &str) -> Result<GlmFit, GlmError> {
    let mut annotators: IndexMap<&str, (u64, u64)> = IndexMap::new();
    for o in outcomes {
        if o.n == 0 || o.k > o.n {
            return Err(GlmError::InvalidOutcome {
                annotator: o.annotator_id.clone(),
                report_id: o.report_id.clone(),
                k: o.k,
                n: o.n,
            });
        }
        let e = annotators.entry(o.annotator_id.as_str()).or_default();
        e.0 += o.k;
        e.1 += o.n;
    }
    if !annotators.contains_key(reference_id) {
        return Err(GlmError::MissingReference(reference_id.to_string()));
    }
    if annotators.len() < 2 {
        return Err(GlmError::TooFewAnnotators(annotators.len()));
    }
    for (id, &(k, n)) in &annotators {
        if k == 0 || k == n {
            return Err(GlmError::SeparationDetected {
                annotator: id.to_string(),
                successes: k,
                trials: n,
            });
        }
    }

    // Column 0 is the intercept, then one indicator per non-reference annotator.
    let columns: Vec<&str> = annotators.keys().copied().filter(|a| *a != reference_id).collect();
    let column_of: IndexMap<&str, usize> = columns.iter().enumerate().map(|(i, a)| (*a, i + 1)).collect();
    let p = columns.len() + 1;
    let obs: Vec<(Option<usize>, f64, f64)> = outcomes
        .iter()
        .map(|o| (column_of.get(o.annotator_id.as_str()).copied(), o.k as f64, o.n as f64))
        .collect();
    let eta_of = |beta: &DVector<f64>, col: Option<usize>| beta[0] + col.map_or(0.0, |c| beta[c]);

    // Information matrix X'WX and score-side vector X'Wz for the current mu.
    let normal_equations = |mus: &[f64], etas: &[f64]| {
        let mut xtwx = DMatrix::<f64>::zeros(p, p);
        let mut xtwz = DVector::<f64>::zeros(p);
        for (((col, k, n), &mu), &eta) in obs.iter().zip(mus).zip(etas) {
            let w = n * mu * (1.0 - mu);
            let z = eta + (k - n * mu) / w;
            let idx: &[usize] = match col {
                Some(c) => &[0, *c],
                None => &[0],
            };
            for &r in idx {
                xtwz[r] += w * z;
                for &c in idx {
                    xtwx[(r, c)] += w;
                }
            }
        }
        (xtwx, xtwz)
    };

    let mut etas: Vec<f64> = obs.iter().map(|(_, k, n)| ((k + 0.5) / (n - k + 0.5)).ln()).collect();
    let mut mus: Vec<f64> = etas.iter().map(|&e| logistic(e)).collect();
    let mut deviance: f64 = obs
        .iter()
        .zip(&mus)
        .map(|((_, k, n), &mu)| unit_deviance(*k, *n, mu))
        .sum();
    let mut beta = DVector::<f64>::zeros(p);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let (xtwx, xtwz) = normal_equations(&mus, &etas);
        beta = xtwx.cholesky().ok_or(GlmError::Singular)?.solve(&xtwz);
        etas = obs.iter().map(|(col, _, _)| eta_of(&beta, *col)).collect();
        mus = etas.iter().map(|&e| logistic(e)).collect();
        let previous = deviance;
        deviance = obs
            .iter()
            .zip(&mus)
            .map(|((_, k, n), &mu)| unit_deviance(*k, *n, mu))
            .sum();
        if (deviance - previous).abs() / (deviance.abs() + 0.1) < DEVIANCE_TOLERANCE {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(GlmError::NonConvergence { iterations, deviance });
    }

    let (information, _) = normal_equations(&mus, &etas);
    let covariance = information.try_inverse().ok_or(GlmError::Singular)?;
    let se = |i: usize| covariance[(i, i)].sqrt();

    let intercept = Coefficient::new(beta[0], se(0));
    let coefficients = columns
        .iter()
        .enumerate()
        .map(|(i, a)| (a.to_string(), Coefficient::new(beta[i + 1], se(i + 1))))
        .collect();
    let fitted_probabilities = annotators
        .keys()
        .map(|a| (a.to_string(), logistic(eta_of(&beta, column_of.get(a).copied()))))
        .collect();
    Ok(GlmFit {
        reference_id: reference_id.to_string(),
        intercept,
        coefficients,
        fitted_probabilities,
        deviance,
        iterations,
        converged,
    })
}
