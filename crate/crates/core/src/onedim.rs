//! One-dimensional machinery: the remainder potential W_{p,s}, the interval
//! Hardy inequality with remainder, the Garsia–Rodemich–Rumsey bound and the
//! scale-invariant key L^∞ inequality.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, FracError, Result};
use crate::geometry::Domain;
use crate::integrate::{adaptive, adaptive_to_infinity, pairwise_sum, AdaptiveOpts};
use crate::optim::{nelder_mead, SearchBudget, SearchResult};
use crate::quadrature::{
    extrapolate_levels, gagliardo_seminorm, hardy_term_estimate, lq_norm_estimate, weighted_seminorm, Estimate,
    FieldFn, GridFunction, HardyWeight, Mesh, QuadratureSpec, TrialFunction,
};
use crate::special::{grr_constant, hardy_constant, FracParams};

const TAIL_OPTS: AdaptiveOpts = AdaptiveOpts {
    rel_tol: 1e-12,
    abs_tol: 0.0,
    max_segments: 4000,
};

/// Knots of the random piecewise-linear trials.
pub const PL_KNOTS: usize = 16;

fn check_onedim_params(p: f64, s: f64) -> Result<()> {
    FracParams::new(1, p, s)?;
    if p < 2.0 {
        return domain(format!("requires p >= 2, got p = {p}"));
    }
    if p * s <= 1.0 {
        return domain(format!("requires ps > 1, got ps = {}", p * s));
    }
    Ok(())
}

/// W_{p,s}(x) = 2ω(x)^{1−p} ∫_1^∞ (ω(y) − ω(x))^{p−1} (y − x)^{−1−ps} dy with
/// ω(x) = x^{(ps−1)/p}.
///
/// The integral runs over u = y − 1 ∈ (0, ∞) with panels clustered at the
/// scale 1 − x, where the integrand concentrates as x → 1.
pub fn remainder_potential_w(x: f64, p: f64, s: f64) -> Result<f64> {
    check_onedim_params(p, s)?;
    if !(x > 0.0 && x < 1.0) {
        return domain(format!("W requires 0 < x < 1, got {x}"));
    }
    let ps = p * s;
    let a = (ps - 1.0) / p;
    let eps = 1.0 - x;
    // ω(1+u) − ω(x) = x^a·expm1(a·ln(1 + (ε+u)/x)) without cancellation
    let f = |u: f64| {
        let gap = eps + u;
        let diff = x.powf(a) * (a * (gap / x).ln_1p()).exp_m1();
        diff.powf(p - 1.0) * gap.powf(-1.0 - ps)
    };
    let breaks: Vec<f64> = [0.01, 0.1, 1.0, 10.0, 100.0].iter().map(|k| k * eps).chain([1.0, 10.0]).collect();
    let r = adaptive_to_infinity(f, 0.0, &breaks, TAIL_OPTS);
    if !r.value.is_finite() || r.error > 1e-8 * r.value.abs() {
        return Err(FracError::Convergence {
            what: "W tail integral".into(),
            estimate: r.error,
            budget: 1e-8 * r.value.abs(),
        });
    }
    Ok(2.0 * x.powf(a * (1.0 - p)) * r.value)
}

/// c_{p,s} = ∫_1^∞ ω(y)^{p−1} y^{−1−ps} dy = 1/(ps − (p−1)(ps−1)/p).
pub fn tail_constant_at_zero(p: f64, s: f64) -> Result<f64> {
    check_onedim_params(p, s)?;
    let ps = p * s;
    Ok(1.0 / (ps - (p - 1.0) * (ps - 1.0) / p))
}

/// c_{p,s} by quadrature of its defining integral.
pub fn tail_constant_at_zero_numeric(p: f64, s: f64) -> Result<f64> {
    check_onedim_params(p, s)?;
    let ps = p * s;
    let a = (ps - 1.0) / p;
    Ok(adaptive_to_infinity(|y: f64| y.powf(a * (p - 1.0) - 1.0 - ps), 1.0, &[2.0, 10.0], TAIL_OPTS).value)
}

/// c̃_{p,s} = ∫_1^∞ (ω(y) − 1)^{p−1} (y − 1)^{−1−ps} dy, finite only when p − 1 − ps > 0.
pub fn tail_constant_at_one(p: f64, s: f64) -> Result<f64> {
    check_onedim_params(p, s)?;
    let ps = p * s;
    if p - 1.0 - ps <= 0.0 {
        return domain(format!("c~ diverges for p - 1 - ps = {} <= 0", p - 1.0 - ps));
    }
    let a = (ps - 1.0) / p;
    let f = |u: f64| (a * u.ln_1p()).exp_m1().powf(p - 1.0) * u.powf(-1.0 - ps);
    Ok(adaptive_to_infinity(f, 0.0, &[0.01, 0.1, 1.0, 10.0], TAIL_OPTS).value)
}

/// Least-squares slope of log f against log t over geometric samples of [t0, t1].
pub fn loglog_slope<F: Fn(f64) -> Result<f64>>(f: F, t0: f64, t1: f64, samples: usize) -> Result<f64> {
    if !(t0 > 0.0 && t1 > t0) || samples < 2 {
        return domain("log-log slope needs 0 < t0 < t1 and at least two samples");
    }
    let mut pts = Vec::with_capacity(samples);
    for k in 0..samples {
        let t = t0 * (t1 / t0).powf(k as f64 / (samples - 1) as f64);
        pts.push((t.ln(), f(t)?.ln()));
    }
    let n = samples as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Ok(sxy / sxx)
}

/// A closed-form function on the interval (a, b).
#[derive(Clone)]
pub struct IntervalTrial {
    f: FieldFn,
    a: f64,
    b: f64,
}

impl std::fmt::Debug for IntervalTrial {
    fn fmt(&self, fm: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        fm.debug_struct("IntervalTrial").field("a", &self.a).field("b", &self.b).finish_non_exhaustive()
    }
}

impl IntervalTrial {
    pub fn new(f: FieldFn, a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && b > a) {
            return domain(format!("interval requires a < b, got ({a}, {b})"));
        }
        Ok(Self { f, a, b })
    }

    pub fn from_trial(t: &TrialFunction, a: f64, b: f64) -> Result<Self> {
        let dom = Domain::interval(a, b);
        Self::new(t.raw_evaluator(&dom)?, a, b)
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.f)(&[x])
    }

    /// (f(a), f(b)).
    pub fn boundary_values(&self) -> (f64, f64) {
        (self.eval(self.a), self.eval(self.b))
    }

    /// y ↦ f(λy) on (a/λ, b/λ).
    pub fn dilated(&self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return domain("dilation factor must be positive");
        }
        let f = self.f.clone();
        Self::new(Arc::new(move |y: &[f64]| f(&[lambda * y[0]])), self.a / lambda, self.b / lambda)
    }

    /// y ↦ f(y − t) on (a + t, b + t).
    pub fn translated(&self, t: f64) -> Result<Self> {
        let f = self.f.clone();
        Self::new(Arc::new(move |y: &[f64]| f(&[y[0] - t])), self.a + t, self.b + t)
    }

    /// y ↦ α f(y).
    pub fn scaled(&self, alpha: f64) -> Self {
        let f = self.f.clone();
        Self {
            f: Arc::new(move |y: &[f64]| alpha * f(y)),
            a: self.a,
            b: self.b,
        }
    }

    /// x ↦ f(σ x + c) on (0, 1), i.e. a reparametrization onto the unit interval.
    fn onto_unit(&self, sigma: f64, c: f64) -> Result<Self> {
        let f = self.f.clone();
        Self::new(Arc::new(move |x: &[f64]| f(&[sigma * x[0] + c])), 0.0, 1.0)
    }

    pub fn sample(&self, resolution: usize) -> Result<GridFunction> {
        if resolution < 8 {
            return domain("sampling resolution must be at least 8");
        }
        let mesh = Arc::new(Mesh::new(&Domain::interval(self.a, self.b), resolution)?);
        GridFunction::from_fn(mesh, self.f.clone())
    }
}

/// Terms of the interval Hardy inequality with remainder on (0, 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntervalRemainderReport {
    pub lhs: f64,
    /// D_{1,p,s}∫|f|^p x^{−ps}
    pub hardy: f64,
    pub remainder: f64,
    /// ∬|v(x)−v(y)|^p ω(x)^{p/2}ω(y)^{p/2}|x−y|^{−1−ps}
    pub gsr_term: f64,
    /// ∫ W_{p,s}|v|^p ω^p
    pub zero_order: f64,
    pub c_p: f64,
    /// remainder − c_p·gsr_term − zero_order
    pub margin: f64,
    pub tolerance: f64,
    pub holds: bool,
}

fn node_weighted_sum(u: &GridFunction, p: f64, g: &(dyn Fn(f64) -> Result<f64> + Sync)) -> Result<f64> {
    let mesh = u.mesh();
    let terms: Vec<Result<f64>> = (0..mesh.len())
        .into_par_iter()
        .map(|i| {
            let ui = u.values()[i];
            if ui == 0.0 {
                return Ok(0.0);
            }
            Ok(g(mesh.point(i)[0])? * ui.abs().powf(p))
        })
        .collect();
    let terms: Vec<f64> = terms.into_iter().collect::<Result<_>>()?;
    Ok(pairwise_sum(&terms) * mesh.cell_volume())
}

fn node_weighted_estimate(
    u: &GridFunction,
    p: f64,
    quad: &QuadratureSpec,
    g: &(dyn Fn(f64) -> Result<f64> + Sync),
) -> Result<Estimate> {
    let levels: Vec<f64> = quad
        .level_resolutions(u.resolution())
        .into_iter()
        .map(|r| node_weighted_sum(&u.at_resolution(r)?, p, g))
        .collect::<Result<_>>()?;
    Ok(extrapolate_levels(&levels, 2.0, quad.error_budget))
}

/// Interval Hardy inequality with remainder for f on (0, 1) with f(0) = 0:
/// seminorm − D∫|f|^p x^{−ps} ≥ c_p·(weighted seminorm of v) + ∫W|v|^pω^p,
/// f = ωv, ω = x^{(ps−1)/p}. For p = 2 the relation is an identity with c_2 = 1;
/// for p > 2 the default c_p is 0.
pub fn interval_remainder_check(
    f: &IntervalTrial,
    params: &FracParams,
    quad: &QuadratureSpec,
    c_p: Option<f64>,
) -> Result<IntervalRemainderReport> {
    check_onedim_params(params.p, params.s)?;
    if params.dim != 1 {
        return domain("interval check requires N = 1");
    }
    if f.interval() != (0.0, 1.0) {
        return Err(FracError::Precondition("interval check runs on (0, 1)".into()));
    }
    let f0 = f.eval(0.0);
    if f0.abs() > 1e-12 {
        return Err(FracError::Precondition(format!("requires f(0) = 0, got {f0:e}")));
    }
    quad.validate()?;
    let c_p = c_p.unwrap_or(if params.p == 2.0 { 1.0 } else { 0.0 });
    let u = f.sample(quad.resolution)?;
    if u.is_zero() {
        return Ok(IntervalRemainderReport {
            lhs: 0.0,
            hardy: 0.0,
            remainder: 0.0,
            gsr_term: 0.0,
            zero_order: 0.0,
            c_p,
            margin: 0.0,
            tolerance: 0.0,
            holds: true,
        });
    }
    let (p, s) = (params.p, params.s);
    let a = (params.ps() - 1.0) / p;
    let semi = gagliardo_seminorm(&u, params, quad)?;
    let d = hardy_constant(params)?;
    let hardy = hardy_term_estimate(&u, params, HardyWeight::Coordinate, quad)?;
    let omega: FieldFn = Arc::new(move |x: &[f64]| x[0].max(0.0).powf(a));
    let w = GridFunction::from_fn(u.mesh().clone(), omega)?;
    let v = u.map(move |x, val| if val == 0.0 { 0.0 } else { val / x[0].powf(a) })?;
    let gsr = weighted_seminorm(&v, &w, params, quad)?;
    // W|v|^pω^p = W|f|^p
    let zero = node_weighted_estimate(&u, p, quad, &|x| remainder_potential_w(x, p, s))?;
    let remainder = semi.value - d * hardy.value;
    let tolerance = semi.error + d * hardy.error + c_p * gsr.error + zero.error;
    let margin = remainder - c_p * gsr.value - zero.value;
    Ok(IntervalRemainderReport {
        lhs: semi.value,
        hardy: d * hardy.value,
        remainder,
        gsr_term: gsr.value,
        zero_order: zero.value,
        c_p,
        margin,
        tolerance,
        holds: margin >= -3.0 * tolerance,
    })
}

/// Two-sided version on (−1, 1) for f(±1) = 0, assembled from the one-sided
/// checks of f(x − 1) and f(1 − x) on (0, 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymmetricRemainderReport {
    /// seminorm on (−1,1)² minus D∫|f|^p(1−|x|)^{−ps}
    pub full_remainder: f64,
    pub left: IntervalRemainderReport,
    pub right: IntervalRemainderReport,
    /// Σ over sides of c_p·gsr_term + zero_order
    pub rhs_sum: f64,
    pub tolerance: f64,
    pub holds: bool,
}

pub fn symmetric_remainder_check(
    f: &IntervalTrial,
    params: &FracParams,
    quad: &QuadratureSpec,
    c_p: Option<f64>,
) -> Result<SymmetricRemainderReport> {
    check_onedim_params(params.p, params.s)?;
    if f.interval() != (-1.0, 1.0) {
        return Err(FracError::Precondition("symmetric check runs on (-1, 1)".into()));
    }
    let (fa, fb) = f.boundary_values();
    if fa.abs() > 1e-12 || fb.abs() > 1e-12 {
        return Err(FracError::Precondition(format!("requires f(-1) = f(1) = 0, got {fa:e}, {fb:e}")));
    }
    // same spacing on both halves as on the full interval
    let half_quad = QuadratureSpec {
        resolution: quad.resolution / 2,
        ..quad.clone()
    };
    let left = interval_remainder_check(&f.onto_unit(1.0, -1.0)?, params, &half_quad, c_p)?;
    let right = interval_remainder_check(&f.onto_unit(-1.0, 1.0)?, params, &half_quad, c_p)?;
    let u = f.sample(quad.resolution)?;
    let semi = gagliardo_seminorm(&u, params, quad)?;
    let hardy = hardy_term_estimate(&u, params, HardyWeight::BoundaryDistance, quad)?;
    let d = hardy_constant(params)?;
    let full_remainder = semi.value - d * hardy.value;
    let rhs_sum = left.c_p * left.gsr_term + left.zero_order + right.c_p * right.gsr_term + right.zero_order;
    let tolerance = semi.error + d * hardy.error + left.tolerance + right.tolerance;
    Ok(SymmetricRemainderReport {
        full_remainder,
        left,
        right,
        rhs_sum,
        tolerance,
        holds: full_remainder >= rhs_sum - 3.0 * tolerance,
    })
}

/// Both sides of the Garsia–Rodemich–Rumsey bound on [a, b].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrrCheck {
    pub double_integral: f64,
    pub error: f64,
    /// grr_constant·|f(b)−f(a)|^p (b−a)^{1−ps}
    pub grr_rhs: f64,
    /// (double_integral + error)/grr_rhs, +∞ when the right side vanishes
    pub ratio: f64,
    pub holds: bool,
}

pub fn grr_lower_bound(f: &IntervalTrial, params: &FracParams, quad: &QuadratureSpec) -> Result<GrrCheck> {
    let (p, s) = (params.p, params.s);
    let c = grr_constant(p, s)?;
    let (a, b) = f.interval();
    let (fa, fb) = f.boundary_values();
    let grr_rhs = c * (fb - fa).abs().powf(p) * (b - a).powf(1.0 - p * s);
    let u = f.sample(quad.resolution)?;
    let est = gagliardo_seminorm(&u, &params.with_dim(1), quad)?;
    let ratio = if grr_rhs > 0.0 { (est.value + est.error) / grr_rhs } else { f64::INFINITY };
    Ok(GrrCheck {
        double_integral: est.value,
        error: est.error,
        grr_rhs,
        ratio,
        holds: est.value >= grr_rhs - est.error,
    })
}

/// Per-trial generator for the randomized suites: ChaCha8 with the trial id
/// as stream number.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Piecewise-linear trial with `PL_KNOTS` uniform knots on [a, b] and i.i.d.
/// uniform values in [−1, 1]; `pin_ends` forces zero endpoint values.
pub fn random_piecewise_linear<R: Rng>(rng: &mut R, a: f64, b: f64, pin_ends: bool) -> TrialFunction {
    let knots: Vec<f64> = (0..PL_KNOTS).map(|k| a + (b - a) * k as f64 / (PL_KNOTS - 1) as f64).collect();
    let mut values: Vec<f64> = (0..PL_KNOTS).map(|_| rng.random_range(-1.0..=1.0)).collect();
    if pin_ends {
        values[0] = 0.0;
        values[PL_KNOTS - 1] = 0.0;
    }
    TrialFunction::PiecewiseLinear { knots, values }
}

/// Outcome of the randomized GRR suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrrSuite {
    pub checks: Vec<GrrCheck>,
    pub violations: usize,
    pub min_ratio: f64,
}

pub fn grr_random_suite(params: &FracParams, quad: &QuadratureSpec, trials: usize, seed: u64) -> Result<GrrSuite> {
    let checks: Vec<Result<GrrCheck>> = (0..trials)
        .into_par_iter()
        .map(|id| {
            let mut rng = trial_rng(seed, id as u64);
            let t = random_piecewise_linear(&mut rng, 0.0, 1.0, false);
            grr_lower_bound(&IntervalTrial::from_trial(&t, 0.0, 1.0)?, params, quad)
        })
        .collect();
    let checks: Vec<GrrCheck> = checks.into_iter().collect::<Result<_>>()?;
    let violations = checks.iter().filter(|c| !c.holds).count();
    let min_ratio = checks.iter().map(|c| c.ratio).fold(f64::INFINITY, f64::min);
    Ok(GrrSuite {
        checks,
        violations,
        min_ratio,
    })
}

/// Terms of the key inequality ‖f‖_∞^{p+q(ps−1)} ≤ c·R·(∫|f|^q)^{ps−1}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KeyRatio {
    /// smallest admissible c for this f
    pub ratio: f64,
    /// propagated relative quadrature error times the ratio
    pub error: f64,
    pub sup_norm: f64,
    /// ∫|f|^q
    pub lq_integral: f64,
    /// seminorm − D∫|f|^p d^{−ps}
    pub remainder: f64,
    pub remainder_error: f64,
}

pub fn key_inequality_ratio(f: &IntervalTrial, params: &FracParams, q: f64, quad: &QuadratureSpec) -> Result<KeyRatio> {
    check_onedim_params(params.p, params.s)?;
    if !(q >= 1.0 && q.is_finite()) {
        return domain(format!("requires q >= 1, got {q}"));
    }
    let params = params.with_dim(1);
    let u = f.sample(quad.resolution)?;
    let sup_norm = u.values().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if sup_norm == 0.0 {
        return Err(FracError::ZeroFunction("key inequality ratio is undefined for f = 0".into()));
    }
    let semi = gagliardo_seminorm(&u, &params, quad)?;
    let d = hardy_constant(&params)?;
    let hardy = hardy_term_estimate(&u, &params, HardyWeight::BoundaryDistance, quad)?;
    let remainder = semi.value - d * hardy.value;
    let remainder_error = semi.error + d * hardy.error;
    if !(remainder > 0.0) {
        return Err(FracError::NonPositiveRemainder {
            remainder,
            tolerance: remainder_error,
        });
    }
    let lq = lq_norm_estimate(&u, q, quad)?;
    let lq_integral = lq.value.powf(q);
    let ps = params.ps();
    let ratio = sup_norm.powf(params.p + q * (ps - 1.0)) / (remainder * lq_integral.powf(ps - 1.0));
    let rel = remainder_error / remainder + q * (ps - 1.0) * lq.error / lq.value;
    Ok(KeyRatio {
        ratio,
        error: rel * ratio,
        sup_norm,
        lq_integral,
        remainder,
        remainder_error,
    })
}

/// The 3-parameter bump family on (−1, 1): center 0.9·tanh θ₀, radius
/// (1 − |c|)(0.05 + 0.95·σ(θ₁)), power 1 + min(e^{θ₂}, 20).
pub fn key_bump(theta: &[f64]) -> TrialFunction {
    let c = 0.9 * theta[0].tanh();
    let sig = 1.0 / (1.0 + (-theta[1]).exp());
    let radius = (1.0 - c.abs()) * (0.05 + 0.95 * sig);
    TrialFunction::CompactBump {
        center: vec![c],
        radius,
        power: 1.0 + theta[2].exp().min(20.0),
    }
}

/// Empirical lower bound on the key-inequality constant: the largest ratio
/// found by simplex search over [`key_bump`]. Trials whose remainder is not
/// resolved (below three error estimates) are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmpiricalConstant {
    pub constant: f64,
    pub theta: Vec<f64>,
    pub trial: TrialFunction,
    pub search: SearchResult,
}

pub fn empirical_key_constant(
    params: &FracParams,
    q: f64,
    quad: &QuadratureSpec,
    budget: &SearchBudget,
) -> Result<EmpiricalConstant> {
    check_onedim_params(params.p, params.s)?;
    let objective = |theta: &[f64]| -> Option<f64> {
        let f = IntervalTrial::from_trial(&key_bump(theta), -1.0, 1.0).ok()?;
        // a remainder inside its own error bar makes the ratio quadrature noise
        key_inequality_ratio(&f, params, q, quad)
            .ok()
            .filter(|r| r.remainder > 3.0 * r.remainder_error)
            .map(|r| -r.ratio)
    };
    let search = nelder_mead(objective, &[0.0, 0.0, 0.0], budget)?;
    Ok(EmpiricalConstant {
        constant: -search.value,
        theta: search.argmin.clone(),
        trial: key_bump(&search.argmin),
        search,
    })
}

/// ∫_a^b |f|^p w with w given pointwise, by adaptive quadrature; used by tests
/// and reports as a grid-free cross-check.
pub fn weighted_integral(f: &IntervalTrial, p: f64, w: impl Fn(f64) -> f64) -> f64 {
    let (a, b) = f.interval();
    adaptive(|x| f.eval(x).abs().powf(p) * w(x), a, b, &[], AdaptiveOpts::rel(1e-10)).value
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn params(p: f64, s: f64) -> FracParams {
        FracParams::new(1, p, s).unwrap()
    }

    #[test]
    fn w_small_x_asymptotics() {
        let (p, s) = (2.0, 0.75);
        let c = tail_constant_at_zero(p, s).unwrap();
        assert!((c - 0.8).abs() < 1e-15);
        assert!((tail_constant_at_zero_numeric(p, s).unwrap() - 0.8).abs() < 1e-9);
        let slope = loglog_slope(|x| remainder_potential_w(x, p, s), 1e-8, 1e-6, 9).unwrap();
        let expected = -(p - 1.0) * (p * s - 1.0) / p;
        assert!((slope - expected).abs() < 0.05 * expected.abs(), "{slope}");
        let x = 1e-12;
        let w = remainder_potential_w(x, p, s).unwrap();
        assert!((w * x.powf(-expected) / (2.0 * c) - 1.0).abs() < 2e-3);
    }

    #[test]
    fn w_near_one_slope() {
        let (p, s) = (2.0, 0.75);
        let slope = loglog_slope(|e| remainder_potential_w(1.0 - e, p, s), 1e-4, 1e-2, 9).unwrap();
        assert!((slope + 0.5).abs() < 0.025, "{slope}");
    }

    #[test]
    fn w_bounded_below_and_tilde_constant() {
        for &(p, s) in &[(2.0, 0.6), (2.0, 0.75), (3.0, 0.5)] {
            let m = (0..=80)
                .map(|k| remainder_potential_w(0.1 + 0.01 * k as f64, p, s).unwrap())
                .fold(f64::INFINITY, f64::min);
            assert!(m > 0.1, "p={p} s={s}: {m}");
        }
        // p − 1 − ps > 0: W(1−) = 2c~
        let (p, s) = (3.0, 0.5);
        let ct = tail_constant_at_one(p, s).unwrap();
        let w = remainder_potential_w(1.0 - 1e-9, p, s).unwrap();
        assert!((w - 2.0 * ct).abs() < 1e-3 * w, "{w} vs {}", 2.0 * ct);
        assert!(tail_constant_at_one(2.0, 0.75).is_err());
        assert!(remainder_potential_w(1.0, 2.0, 0.75).is_err());
    }

    #[test]
    fn grr_linear_closed_form() {
        let f = IntervalTrial::new(Arc::new(|x: &[f64]| x[0]), 0.0, 1.0).unwrap();
        let r = grr_lower_bound(&f, &params(2.0, 0.75), &QuadratureSpec::with_resolution(256)).unwrap();
        assert!((r.double_integral - 8.0 / 3.0).abs() < 1e-3, "{r:?}");
        assert!((r.grr_rhs - 1.5625e-4).abs() < 1e-12);
        assert!(r.holds);
    }

    #[test]
    fn grr_constant_is_zero_for_constant_f() {
        let f = IntervalTrial::new(Arc::new(|_: &[f64]| 2.0), 0.0, 1.0).unwrap();
        let r = grr_lower_bound(&f, &params(2.0, 0.75), &QuadratureSpec::with_resolution(64)).unwrap();
        assert_eq!(r.double_integral, 0.0);
        assert_eq!(r.grr_rhs, 0.0);
        assert!(r.holds);
    }

    #[test]
    fn grr_random_small_suite() {
        let s = grr_random_suite(&params(2.0, 0.75), &QuadratureSpec::with_resolution(64), 50, 7).unwrap();
        assert_eq!(s.violations, 0);
        assert!(s.min_ratio >= 1.0);
    }

    fn unit_trial(s: f64) -> IntervalTrial {
        let a = (2.0 * s - 1.0) / 2.0;
        IntervalTrial::new(Arc::new(move |x: &[f64]| x[0].max(0.0).powf(a) * (PI * x[0]).sin()), 0.0, 1.0).unwrap()
    }

    #[test]
    fn interval_remainder_p2_identity() {
        let s = 0.75;
        let r = interval_remainder_check(&unit_trial(s), &params(2.0, s), &QuadratureSpec::with_resolution(256), None)
            .unwrap();
        assert!(r.holds, "{r:?}");
        assert!(r.zero_order > 0.0 && r.gsr_term > 0.0);
        assert!(r.margin.abs() < 0.02 * r.remainder, "{r:?}");
    }

    #[test]
    fn interval_remainder_p3() {
        let p = 3.0;
        let s = 0.6;
        let a = (p * s - 1.0) / p;
        let f = IntervalTrial::new(Arc::new(move |x: &[f64]| x[0].max(0.0).powf(a) * (PI * x[0]).sin()), 0.0, 1.0)
            .unwrap();
        let r = interval_remainder_check(&f, &params(p, s), &QuadratureSpec::with_resolution(256), None).unwrap();
        assert!(r.holds && r.margin > 0.0, "{r:?}");
    }

    #[test]
    fn interval_requires_vanishing_at_zero() {
        let f = IntervalTrial::new(Arc::new(|_: &[f64]| 1.0), 0.0, 1.0).unwrap();
        let r = interval_remainder_check(&f, &params(2.0, 0.75), &QuadratureSpec::with_resolution(64), None);
        assert!(matches!(r, Err(FracError::Precondition(_))));
    }

    #[test]
    fn symmetric_sum() {
        let f = IntervalTrial::new(Arc::new(|x: &[f64]| (1.0 - x[0] * x[0]).max(0.0).powi(2)), -1.0, 1.0).unwrap();
        let r = symmetric_remainder_check(&f, &params(2.0, 0.75), &QuadratureSpec::with_resolution(256), None).unwrap();
        assert!(r.holds, "{r:?}");
        assert!(r.full_remainder >= r.left.remainder + r.right.remainder);
    }

    fn bump() -> IntervalTrial {
        IntervalTrial::from_trial(
            &TrialFunction::CompactBump {
                center: vec![0.1],
                radius: 0.7,
                power: 2.0,
            },
            -1.0,
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn key_ratio_scale_invariance() {
        let pr = params(2.0, 0.75);
        let quad = QuadratureSpec::with_resolution(128);
        let base = key_inequality_ratio(&bump(), &pr, 8.0, &quad).unwrap();
        assert!(base.ratio > 0.0 && base.ratio.is_finite());
        for lambda in [0.5, 2.0, 10.0] {
            let r = key_inequality_ratio(&bump().dilated(lambda).unwrap(), &pr, 8.0, &quad).unwrap();
            assert!((r.ratio - base.ratio).abs() <= 2.0 * base.error.max(1e-12 * base.ratio), "{lambda}");
        }
        let t = key_inequality_ratio(&bump().translated(3.0).unwrap(), &pr, 8.0, &quad).unwrap();
        assert!((t.ratio - base.ratio).abs() <= 1e-9 * base.ratio);
        let sc = key_inequality_ratio(&bump().scaled(-3.0), &pr, 8.0, &quad).unwrap();
        assert!((sc.ratio - base.ratio).abs() <= 1e-10 * base.ratio);
    }

    #[test]
    fn key_ratio_zero_function() {
        let f = IntervalTrial::new(Arc::new(|_: &[f64]| 0.0), -1.0, 1.0).unwrap();
        let r = key_inequality_ratio(&f, &params(2.0, 0.75), 8.0, &QuadratureSpec::with_resolution(64));
        assert!(matches!(r, Err(FracError::ZeroFunction(_))));
    }

    #[test]
    fn empirical_constant_improves_on_start() {
        let pr = params(2.0, 0.75);
        let quad = QuadratureSpec::with_resolution(64);
        let start = key_inequality_ratio(
            &IntervalTrial::from_trial(&key_bump(&[0.0, 0.0, 0.0]), -1.0, 1.0).unwrap(),
            &pr,
            8.0,
            &quad,
        )
        .unwrap();
        let budget = SearchBudget {
            iterations: 20,
            restarts: 1,
            seed: 3,
            ..SearchBudget::default()
        };
        let e = empirical_key_constant(&pr, 8.0, &quad, &budget).unwrap();
        assert!(e.constant >= start.ratio);
    }
}
