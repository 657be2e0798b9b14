//! Grid-based trial functions and the singular-kernel integrals built on them:
//! Gagliardo seminorms, weighted seminorms, Hardy terms, L^q norms and
//! principal-value regional Laplacians.

mod grid;
pub(crate) mod kernel;
mod pv;
mod trial;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use grid::{FieldFn, GridFunction, Mesh};
pub use trial::{sample, sample_in_box, TrialFunction};

use crate::error::{domain, FracError, Result};
use crate::geometry::{ball_proxy, default_angular_nodes, Domain};
use crate::integrate::{pairwise_sum, richardson};
use crate::special::FracParams;
use kernel::{double_integral, self_cell_term, PairProblem, Pairing};

/// Treatment of the integrable diagonal singularity of the double integrals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagonalStrategy {
    /// Drop the x-cell = y-cell terms and extrapolate across resolutions
    /// n, n/2, n/4 with the kernel order p(1−s).
    #[default]
    ExcludeAndExtrapolate,
    /// Add the analytic self-cell integral of the local linearization (N ≤ 2).
    LocalRefine,
}

fn default_resolution() -> usize {
    64
}
fn default_cutoffs() -> Vec<f64> {
    vec![1.0, 0.5, 0.25]
}
fn default_budget() -> f64 {
    0.05
}
fn default_pv_angular() -> usize {
    64
}
fn default_levels() -> usize {
    3
}

/// Discretization parameters shared by every quadrature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSpec {
    /// Cells along the longest axis of the grid box.
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    #[serde(default)]
    pub diagonal_strategy: DiagonalStrategy,
    /// Principal-value cutoffs as multiples of the grid spacing, strictly decreasing.
    #[serde(default = "default_cutoffs")]
    pub pv_cutoffs: Vec<f64>,
    /// Relative error budget.
    #[serde(default = "default_budget")]
    pub error_budget: f64,
    /// Angular nodes for pseudodistances; `None` selects the per-dimension default.
    #[serde(default)]
    pub angular_nodes: Option<usize>,
    /// Angular nodes on [0, π) for principal values.
    #[serde(default = "default_pv_angular")]
    pub pv_angular_nodes: usize,
    /// Number of resolutions (finest first, halving) used for extrapolation.
    #[serde(default = "default_levels")]
    pub levels: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            resolution: default_resolution(),
            diagonal_strategy: DiagonalStrategy::default(),
            pv_cutoffs: default_cutoffs(),
            error_budget: default_budget(),
            angular_nodes: None,
            pv_angular_nodes: default_pv_angular(),
            levels: default_levels(),
        }
    }
}

impl QuadratureSpec {
    pub fn with_resolution(resolution: usize) -> Self {
        Self {
            resolution,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.resolution < 8 {
            return domain(format!("invariant resolution>=8 violated: resolution = {}", self.resolution));
        }
        if self.pv_cutoffs.is_empty()
            || self.pv_cutoffs.iter().any(|c| !(*c > 0.0 && c.is_finite()))
            || self.pv_cutoffs.windows(2).any(|w| !(w[1] < w[0]))
        {
            return domain("pv_cutoffs must be positive and strictly decreasing");
        }
        if !(self.error_budget > 0.0 && self.error_budget.is_finite()) {
            return domain("error_budget must be positive");
        }
        if self.angular_nodes.is_some_and(|n| n < 8) || self.pv_angular_nodes < 8 {
            return domain("angular node counts must be at least 8");
        }
        if self.levels == 0 {
            return domain("levels must be at least 1");
        }
        Ok(())
    }

    pub fn angular_for(&self, dim: usize) -> usize {
        self.angular_nodes.unwrap_or_else(|| default_angular_nodes(dim))
    }

    /// Resolutions used for extrapolation, finest first.
    pub fn level_resolutions(&self, finest: usize) -> Vec<usize> {
        let mut out = vec![finest];
        let mut r = finest;
        while out.len() < self.levels && r % 2 == 0 && r / 2 >= 4 {
            r /= 2;
            out.push(r);
        }
        out
    }
}

/// A value with an error estimate and the budget verdict.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub within_budget: bool,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            error: 0.0,
            within_budget: true,
        }
    }

    fn judged(value: f64, error: f64, budget: f64) -> Self {
        Self {
            value,
            error,
            within_budget: error <= budget * value.abs() || error <= 1e-13,
        }
    }

    /// Converts a flagged estimate into a convergence error.
    pub fn checked(self, what: &str) -> Result<Self> {
        if self.within_budget {
            Ok(self)
        } else {
            Err(FracError::Convergence {
                what: what.into(),
                estimate: self.error,
                budget: self.value.abs(),
            })
        }
    }
}

/// Extrapolates finest-first level values assuming an error ∝ h^order.
pub fn extrapolate_levels(values: &[f64], order: f64, budget: f64) -> Estimate {
    match values.len() {
        0 => Estimate::exact(0.0),
        1 => Estimate::judged(values[0], f64::INFINITY, budget),
        2 => {
            let r = richardson(values[0], values[1], 2.0, order);
            Estimate::judged(r, (r - values[0]).abs(), budget)
        }
        _ => {
            let r1 = richardson(values[0], values[1], 2.0, order);
            let r2 = richardson(values[1], values[2], 2.0, order);
            Estimate::judged(r1, (r1 - r2).abs(), budget)
        }
    }
}

/// Three-level extrapolation with the order read off the level differences,
/// clamped to [0.5, 2.5]; falls back to `default_order` when the differences
/// are not geometrically shrinking.
fn extrapolate_observed(values: &[f64], default_order: f64, budget: f64) -> Estimate {
    if values.len() >= 3 {
        let d1 = values[0] - values[1];
        let d2 = values[1] - values[2];
        if d1 != 0.0 && d2 != 0.0 && d1.signum() == d2.signum() && d2.abs() > d1.abs() {
            let order = (d2 / d1).log2().clamp(0.5, 2.5);
            return extrapolate_levels(values, order, budget);
        }
    }
    extrapolate_levels(values, default_order, budget)
}

fn level_values<F>(u: &GridFunction, quad: &QuadratureSpec, f: F) -> Result<Vec<f64>>
where
    F: Fn(&GridFunction) -> Result<f64>,
{
    quad.level_resolutions(u.resolution())
        .into_iter()
        .map(|r| f(&u.at_resolution(r)?))
        .collect()
}

fn check_params(params: &FracParams) -> Result<()> {
    params.validate()
}

fn seminorm_level(u: &GridFunction, params: &FracParams, quad: &QuadratureSpec, rho: Option<&GridFunction>) -> Result<f64> {
    if u.is_zero() {
        return Ok(0.0);
    }
    let rho_pair = match rho {
        Some(r) => {
            let f = r
                .source()
                .ok_or_else(|| FracError::Precondition("weight needs a closed form for exterior tails".into()))?;
            Some((r.values(), f))
        }
        None => None,
    };
    let prob = PairProblem {
        mesh: u.mesh(),
        values: u.values(),
        p: params.p,
        ps: params.ps(),
        rho: rho_pair,
        pairing: Pairing::Direct,
        angular: quad.angular_for(u.mesh().dim()),
    };
    let mut value = double_integral(&prob)?;
    if quad.diagonal_strategy == DiagonalStrategy::LocalRefine {
        if rho.is_some() {
            return Err(FracError::Unsupported("local refinement for weighted seminorms".into()));
        }
        value += self_cell_term(u.mesh(), u.values(), params.p, params.ps())?;
    }
    Ok(value)
}

fn finish_double(levels: &[f64], params: &FracParams, quad: &QuadratureSpec) -> Estimate {
    match quad.diagonal_strategy {
        DiagonalStrategy::ExcludeAndExtrapolate => {
            extrapolate_levels(levels, params.p * (1.0 - params.s), quad.error_budget)
        }
        DiagonalStrategy::LocalRefine => {
            let err = if levels.len() >= 2 { (levels[0] - levels[1]).abs() } else { f64::INFINITY };
            Estimate::judged(levels[0], err, quad.error_budget)
        }
    }
}

/// ∬_{Ω×Ω} |u(x)−u(y)|^p/|x−y|^{N+ps} dx dy with its extrapolation error.
///
/// The grid of `u` is the finest level; a flagged estimate (error above the
/// budget) is returned as a value with `within_budget == false`.
pub fn gagliardo_seminorm(u: &GridFunction, params: &FracParams, quad: &QuadratureSpec) -> Result<Estimate> {
    check_params(params)?;
    quad.validate()?;
    if u.is_zero() {
        return Ok(Estimate::exact(0.0));
    }
    let levels = level_values(u, quad, |g| seminorm_level(g, params, quad, None))?;
    Ok(finish_double(&levels, params, quad))
}

/// ∬ |v(x)−v(y)|^p (w(x)w(y))^{p/2}/|x−y|^{N+ps} dx dy for a nonnegative
/// weight field `w` conformable with `v`.
pub fn weighted_seminorm(
    v: &GridFunction,
    w: &GridFunction,
    params: &FracParams,
    quad: &QuadratureSpec,
) -> Result<Estimate> {
    check_params(params)?;
    quad.validate()?;
    if !v.conformable(w) {
        return domain("weight and function must share the node set");
    }
    if w.values().iter().any(|x| *x < 0.0) {
        return domain("weight must be nonnegative");
    }
    if v.is_zero() {
        return Ok(Estimate::exact(0.0));
    }
    let half_p = params.p / 2.0;
    let res = quad.level_resolutions(v.resolution());
    let mut levels = Vec::with_capacity(res.len());
    for r in res {
        let vl = v.at_resolution(r)?;
        let rho = w.at_resolution(r)?.map(move |_, x| x.max(0.0).powf(half_p))?;
        levels.push(seminorm_level(&vl, params, quad, Some(&rho))?);
    }
    let exclude = QuadratureSpec {
        diagonal_strategy: DiagonalStrategy::ExcludeAndExtrapolate,
        ..quad.clone()
    };
    Ok(finish_double(&levels, params, &exclude))
}

/// ∬_{H×H} |u(x)−u(y)|^p (|x′−y′|² + (x_N+y_N)²)^{−(N+ps)/2} on a half-space
/// box whose lower face lies on the boundary hyperplane.
pub fn reflected_cross_term(u: &GridFunction, params: &FracParams, quad: &QuadratureSpec) -> Result<Estimate> {
    check_params(params)?;
    quad.validate()?;
    let axis = reflection_axis(u.mesh())?;
    if u.is_zero() {
        return Ok(Estimate::exact(0.0));
    }
    let levels = level_values(u, quad, |g| {
        double_integral(&PairProblem {
            mesh: g.mesh(),
            values: g.values(),
            p: params.p,
            ps: params.ps(),
            rho: None,
            pairing: Pairing::Reflected { axis },
            angular: quad.angular_for(g.mesh().dim()),
        })
    })?;
    // the reflected kernel is bounded on the support: midpoint error is O(h²)
    Ok(extrapolate_observed(&levels, 2.0, quad.error_budget))
}

fn reflection_axis(mesh: &Mesh) -> Result<usize> {
    let Domain::HalfSpace { normal, offset } = mesh.domain() else {
        return Err(FracError::Precondition("reflection requires a half-space domain".into()));
    };
    let axis = normal
        .iter()
        .position(|v| (*v - 1.0).abs() < 1e-15)
        .filter(|_| normal.iter().filter(|v| **v != 0.0).count() == 1)
        .ok_or_else(|| FracError::Precondition("reflection requires the normal +e_k".into()))?;
    if (mesh.box_lo()[axis] - offset).abs() > 1e-12 * (1.0 + offset.abs()) {
        return Err(FracError::Precondition("support box must start on the boundary hyperplane".into()));
    }
    Ok(axis)
}

/// Weight appearing in a Hardy term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HardyWeight {
    /// m_{ps}(x), the weight of the HSM inequality
    #[default]
    Pseudodistance,
    /// d(x) = dist(x, Ω^c)
    BoundaryDistance,
    /// height above the half-space boundary (x_N for {x_N > 0})
    Coordinate,
    /// (r² − |x − c|²)/(2r) on a ball
    BallProxy,
}

/// The Hardy weight at x.
pub fn hardy_weight(domain: &Domain, x: &[f64], mode: HardyWeight, params: &FracParams, angular: usize) -> Result<f64> {
    match mode {
        HardyWeight::Pseudodistance => domain.pseudodistance(x, params.ps(), angular),
        HardyWeight::BoundaryDistance => Ok(domain.dist_to_complement(x)),
        HardyWeight::Coordinate => Ok(match domain {
            Domain::HalfSpace { normal, offset } => normal.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() - offset,
            _ => x[x.len() - 1],
        }),
        HardyWeight::BallProxy => match domain {
            Domain::Ball { center, radius } => {
                let rel: Vec<f64> = x.iter().zip(center).map(|(a, c)| a - c).collect();
                ball_proxy(*radius, &rel)
            }
            _ => crate::error::domain("ball proxy weight requires a ball domain"),
        },
    }
}

/// Node-wise Hardy weights of a mesh.
pub fn hardy_weights(mesh: &Mesh, mode: HardyWeight, params: &FracParams, angular: usize) -> Result<Vec<f64>> {
    (0..mesh.len())
        .into_par_iter()
        .map(|i| hardy_weight(mesh.domain(), mesh.point(i), mode, params, angular))
        .collect()
}

fn hardy_level(u: &GridFunction, params: &FracParams, mode: HardyWeight, angular: usize) -> Result<f64> {
    if u.is_zero() {
        return Ok(0.0);
    }
    let mesh = u.mesh();
    let tiny = f64::EPSILON * mesh.h();
    let ps = params.ps();
    let terms: Vec<Result<f64>> = (0..mesh.len())
        .into_par_iter()
        .map(|i| {
            let ui = u.values()[i];
            if ui == 0.0 {
                return Ok(0.0);
            }
            let w = hardy_weight(mesh.domain(), mesh.point(i), mode, params, angular)?;
            if !(w > tiny) {
                return domain(format!("Hardy weight vanishes at node {i} where u = {ui:e}"));
            }
            Ok(ui.abs().powf(params.p) * w.powf(-ps))
        })
        .collect();
    let terms: Vec<f64> = terms.into_iter().collect::<Result<_>>()?;
    Ok(pairwise_sum(&terms) * mesh.cell_volume())
}

/// ∫_Ω |u|^p / weight^{ps} dx by the cell-center rule at the grid of `u`.
pub fn hardy_term(u: &GridFunction, params: &FracParams, mode: HardyWeight, quad: &QuadratureSpec) -> Result<f64> {
    check_params(params)?;
    hardy_level(u, params, mode, quad.angular_for(u.mesh().dim()))
}

/// Hardy term extrapolated across the quadrature levels.
pub fn hardy_term_estimate(
    u: &GridFunction,
    params: &FracParams,
    mode: HardyWeight,
    quad: &QuadratureSpec,
) -> Result<Estimate> {
    check_params(params)?;
    quad.validate()?;
    let angular = quad.angular_for(u.mesh().dim());
    let levels = level_values(u, quad, |g| hardy_level(g, params, mode, angular))?;
    Ok(extrapolate_observed(&levels, 2.0, quad.error_budget))
}

fn lq_level(u: &GridFunction, q: f64) -> f64 {
    let terms: Vec<f64> = u.values().iter().map(|v| v.abs().powf(q)).collect();
    (pairwise_sum(&terms) * u.mesh().cell_volume()).powf(1.0 / q)
}

/// (Σ |u_i|^q h^N)^{1/q}.
pub fn lq_norm(u: &GridFunction, q: f64) -> Result<f64> {
    if !(q >= 1.0 && q.is_finite()) {
        return domain(format!("L^q norm requires q >= 1, got {q}"));
    }
    Ok(lq_level(u, q))
}

/// L^q norm extrapolated across the quadrature levels.
pub fn lq_norm_estimate(u: &GridFunction, q: f64, quad: &QuadratureSpec) -> Result<Estimate> {
    lq_norm(u, q)?;
    let levels = level_values(u, quad, |g| Ok(lq_level(g, q)))?;
    Ok(extrapolate_observed(&levels, 2.0, quad.error_budget))
}

/// Grid spacing that the principal-value cutoffs refer to.
pub fn pv_spacing(domain: &Domain, resolution: usize) -> f64 {
    let extent = domain
        .bounding_box()
        .map(|(lo, hi)| lo.iter().zip(&hi).map(|(a, b)| b - a).fold(0.0, f64::max))
        .unwrap_or(1.0);
    extent / resolution as f64
}

/// −free sign convention: returns L_Ω w(x) (negative at an interior maximum),
/// extrapolated from the truncations ε ∈ pv_cutoffs·h.
pub fn pv_regional_laplacian<F>(w: &F, domain: &Domain, x: &[f64], s: f64, quad: &QuadratureSpec) -> Result<Estimate>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    quad.validate()?;
    pv::check_inputs(domain, x, s)?;
    let h = pv_spacing(domain, quad.resolution);
    let eps: Vec<f64> = quad.pv_cutoffs.iter().map(|c| c * h).collect();
    let values: Vec<f64> = eps
        .iter()
        .map(|&e| pv::truncated(w, domain, x, s, e, quad.pv_angular_nodes))
        .collect::<Result<_>>()?;
    let (value, error) = pv::extrapolate(&eps, &values, s);
    let est = Estimate::judged(value, error, quad.error_budget);
    if !value.is_finite() || !est.within_budget {
        return Err(FracError::Convergence {
            what: "principal-value extrapolation".into(),
            estimate: error,
            budget: quad.error_budget * value.abs(),
        });
    }
    Ok(est)
}

/// L_Ω w(x) integrated directly down to ε = 0 (the paired integrand is
/// integrable); an independent check of the extrapolated value.
pub fn pv_regional_laplacian_direct<F>(w: &F, domain: &Domain, x: &[f64], s: f64, angular: usize) -> Result<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    pv::check_inputs(domain, x, s)?;
    pv::truncated(w, domain, x, s, 0.0, angular)
}

#[cfg(test)]
mod tests;
