//! Derivative-free simplex minimization with seeded restarts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FracError, Result};

/// Budget and restart policy of [`nelder_mead`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchBudget {
    /// Simplex iterations per restart.
    pub iterations: usize,
    /// Restarts beyond the initial point (each from a seeded random start).
    pub restarts: usize,
    /// Hard cap on objective evaluations per restart.
    pub max_evaluations: usize,
    pub seed: u64,
    /// Edge length of the initial simplex.
    pub step: f64,
    /// Half-width of the box around the initial point that restarts sample from.
    pub spread: f64,
}

impl Default for SearchBudget {
    fn default() -> Self {
        Self {
            iterations: 200,
            restarts: 5,
            max_evaluations: 1000,
            seed: 0,
            step: 0.3,
            spread: 1.0,
        }
    }
}

/// Best point of a search together with bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub value: f64,
    pub argmin: Vec<f64>,
    pub evaluations: usize,
    /// Evaluations whose objective was flagged (returned `None`).
    pub flagged: usize,
    /// Best value of each restart, in restart order (the first starts at `x0`).
    pub restart_values: Vec<f64>,
}

struct Tracker<'a, F> {
    f: &'a F,
    best: Option<(f64, Vec<f64>)>,
    evaluations: usize,
    flagged: usize,
    cap: usize,
}

impl<F: Fn(&[f64]) -> Option<f64>> Tracker<'_, F> {
    /// Flagged points count as +∞ for the simplex.
    fn eval(&mut self, x: &[f64]) -> f64 {
        self.evaluations += 1;
        match (self.f)(x) {
            Some(v) if v.is_finite() => {
                if self.best.as_ref().is_none_or(|(b, _)| v < *b) {
                    self.best = Some((v, x.to_vec()));
                }
                v
            }
            _ => {
                self.flagged += 1;
                f64::INFINITY
            }
        }
    }

    fn exhausted(&self) -> bool {
        self.evaluations >= self.cap
    }
}

fn combine(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
}

fn single_run<F>(f: &F, x0: &[f64], budget: &SearchBudget) -> (Option<(f64, Vec<f64>)>, usize, usize)
where
    F: Fn(&[f64]) -> Option<f64>,
{
    let n = x0.len();
    let mut tr = Tracker {
        f,
        best: None,
        evaluations: 0,
        flagged: 0,
        cap: budget.max_evaluations.max(1),
    };
    let f0 = tr.eval(x0);
    if budget.iterations == 0 || tr.exhausted() || n == 0 {
        return (tr.best, tr.evaluations, tr.flagged);
    }
    let mut simplex: Vec<(Vec<f64>, f64)> = vec![(x0.to_vec(), f0)];
    for k in 0..n {
        if tr.exhausted() {
            return (tr.best, tr.evaluations, tr.flagged);
        }
        let mut x = x0.to_vec();
        x[k] += budget.step;
        let v = tr.eval(&x);
        simplex.push((x, v));
    }
    for _ in 0..budget.iterations {
        if tr.exhausted() {
            break;
        }
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let worst = simplex[n].clone();
        let centroid: Vec<f64> = (0..n)
            .map(|k| simplex[..n].iter().map(|p| p.0[k]).sum::<f64>() / n as f64)
            .collect();
        let xr = combine(&centroid, &worst.0, -1.0);
        let fr = tr.eval(&xr);
        if fr < simplex[0].1 {
            let xe = combine(&centroid, &worst.0, -2.0);
            let fe = if tr.exhausted() { f64::INFINITY } else { tr.eval(&xe) };
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < worst.1 {
                let xc = combine(&centroid, &worst.0, -0.5);
                let fc = tr.eval(&xc);
                (xc, fc)
            } else {
                let xc = combine(&centroid, &worst.0, 0.5);
                let fc = tr.eval(&xc);
                (xc, fc)
            };
            if fc < worst.1.min(fr) {
                simplex[n] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for p in simplex.iter_mut().skip(1) {
                    if tr.exhausted() {
                        break;
                    }
                    p.0 = combine(&best, &p.0, 0.5);
                    p.1 = tr.eval(&p.0);
                }
            }
        }
    }
    (tr.best, tr.evaluations, tr.flagged)
}

/// Minimizes `f` from `x0`, then from `restarts` points drawn uniformly in
/// x0 ± spread with a ChaCha8 stream seeded by (seed, restart index). The
/// result is the best value over every evaluated point, so it never exceeds
/// the value at `x0` when that value is finite.
pub fn nelder_mead<F>(f: F, x0: &[f64], budget: &SearchBudget) -> Result<SearchResult>
where
    F: Fn(&[f64]) -> Option<f64> + Sync,
{
    let starts: Vec<Vec<f64>> = (0..=budget.restarts)
        .map(|r| {
            if r == 0 {
                return x0.to_vec();
            }
            let mut rng = ChaCha8Rng::seed_from_u64(budget.seed.wrapping_add(r as u64));
            x0.iter().map(|c| c + budget.spread * rng.random_range(-1.0..=1.0)).collect()
        })
        .collect();
    let runs: Vec<_> = starts.par_iter().map(|x| single_run(&f, x, budget)).collect();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut evaluations = 0;
    let mut flagged = 0;
    let mut restart_values = Vec::with_capacity(runs.len());
    for (b, e, fl) in runs {
        evaluations += e;
        flagged += fl;
        restart_values.push(b.as_ref().map_or(f64::INFINITY, |(v, _)| *v));
        if let Some((v, x)) = b {
            if best.as_ref().is_none_or(|(bv, _)| v < *bv) {
                best = Some((v, x));
            }
        }
    }
    let (value, argmin) = best.ok_or_else(|| FracError::Search(format!("all {evaluations} evaluations were flagged")))?;
    Ok(SearchResult {
        value,
        argmin,
        evaluations,
        flagged,
        restart_values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_rosenbrock_minimum() {
        let f = |x: &[f64]| Some((1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2));
        let budget = SearchBudget {
            iterations: 2000,
            max_evaluations: 5000,
            restarts: 2,
            ..SearchBudget::default()
        };
        let r = nelder_mead(f, &[-1.2, 1.0], &budget).unwrap();
        assert!(r.value < 1e-8, "{r:?}");
        assert!((r.argmin[0] - 1.0).abs() < 1e-3);
    }

    #[test]
    fn single_evaluation_returns_start() {
        let budget = SearchBudget {
            iterations: 0,
            restarts: 0,
            ..SearchBudget::default()
        };
        let r = nelder_mead(|x: &[f64]| Some(x[0] * x[0] + 3.0), &[2.0], &budget).unwrap();
        assert_eq!(r.value, 7.0);
        assert_eq!(r.evaluations, 1);
    }

    #[test]
    fn flagged_everywhere_is_a_search_error() {
        let r = nelder_mead(|_: &[f64]| None, &[0.0, 0.0], &SearchBudget::default());
        assert!(matches!(r, Err(FracError::Search(_))));
    }

    #[test]
    fn deterministic_for_a_seed() {
        let f = |x: &[f64]| Some((x[0] - 0.3).powi(2) + (x[1] + 0.1).abs());
        let b = SearchBudget {
            seed: 42,
            ..SearchBudget::default()
        };
        assert_eq!(nelder_mead(f, &[1.0, 1.0], &b).unwrap(), nelder_mead(f, &[1.0, 1.0], &b).unwrap());
    }
}
