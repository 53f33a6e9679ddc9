//! Closed-form maximum-likelihood answers for a binomial GLM whose only
//! covariate is the annotator, and random grouped datasets to compare on.

use mrie_core::eval::ReportOutcome;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Pooled {
    pub successes: u64,
    pub trials: u64,
}

impl Pooled {
    pub fn p(&self) -> f64 {
        self.successes as f64 / self.trials as f64
    }

    pub fn logit(&self) -> f64 {
        (self.successes as f64 / (self.trials - self.successes) as f64).ln()
    }

    /// Variance of the estimated log-odds: `1/k + 1/(n - k)`.
    pub fn logit_variance(&self) -> f64 {
        1.0 / self.successes as f64 + 1.0 / (self.trials - self.successes) as f64
    }
}

pub fn pooled(outcomes: &[ReportOutcome], annotator: &str) -> Pooled {
    let (k, n) = outcomes
        .iter()
        .filter(|o| o.annotator_id == annotator)
        .fold((0, 0), |(k, n), o| (k + o.k, n + o.n));
    Pooled {
        successes: k,
        trials: n,
    }
}

/// `(beta, se)` of `annotator` against `reference`.
pub fn closed_form(outcomes: &[ReportOutcome], reference: &str, annotator: &str) -> (f64, f64) {
    let r = pooled(outcomes, reference);
    let a = pooled(outcomes, annotator);
    (a.logit() - r.logit(), (r.logit_variance() + a.logit_variance()).sqrt())
}

pub struct Dataset {
    pub annotators: Vec<String>,
    pub outcomes: Vec<ReportOutcome>,
}

/// A grouped dataset with 2-6 annotators, 5-100 reports and 1-60 trials per
/// report, redrawn until no annotator sits at 0% or 100%.
pub fn random_dataset(rng: &mut ChaCha8Rng) -> Dataset {
    loop {
        let m = rng.random_range(2..=6);
        let reports = rng.random_range(5..=100);
        let annotators: Vec<String> = (0..m).map(|j| format!("annotator-{j}")).collect();
        let mut outcomes = Vec::new();
        for a in &annotators {
            let p: f64 = rng.random_range(0.05..0.98);
            for r in 0..reports {
                let n = rng.random_range(1..=60u64);
                let k = (0..n).filter(|_| rng.random_bool(p)).count() as u64;
                outcomes.push(ReportOutcome::new(a.clone(), format!("r{r}"), k, n));
            }
        }
        let separated = annotators.iter().any(|a| {
            let p = pooled(&outcomes, a);
            p.successes == 0 || p.successes == p.trials
        });
        if !separated {
            return Dataset { annotators, outcomes };
        }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Pooled counts spread over `reports` reports as evenly as possible,
/// preserving the totals exactly.
pub fn spread(annotator: &str, k: u64, n: u64, reports: u64) -> Vec<ReportOutcome> {
    let ns: Vec<u64> = (0..reports).map(|i| n / reports + u64::from(i < n % reports)).collect();
    let mut ks: Vec<u64> = ns.iter().map(|&ni| k * ni / n).collect();
    let mut left = k - ks.iter().sum::<u64>();
    for (ki, ni) in ks.iter_mut().zip(&ns) {
        if left == 0 {
            break;
        }
        if *ki < *ni {
            *ki += 1;
            left -= 1;
        }
    }
    assert_eq!(left, 0);
    ns.iter()
        .zip(ks)
        .enumerate()
        .map(|(i, (&ni, ki))| ReportOutcome::new(annotator, format!("r{i:03}"), ki, ni))
        .collect()
}
