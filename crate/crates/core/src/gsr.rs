//! Ground-state representations on the half-space and the unit ball, and the
//! regional-Laplacian bounds for the ball weight w_N = (1−|x|²)^{(2s−1)/2}.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, FracError, Result};
use crate::geometry::Domain;
use crate::integrate::{gauss_legendre_on, pairwise_sum};
use crate::quadrature::{
    gagliardo_seminorm, hardy_term_estimate, lq_norm_estimate, pv_regional_laplacian, weighted_seminorm, Estimate,
    FieldFn, GridFunction, HardyWeight, Mesh, QuadratureSpec,
};
use crate::special::{beta_fn, c1_c2, hardy_constant, sphere_moment, sphere_surface, FracParams};

/// Relative slack of the p = 2 half-space identity check on top of the
/// reported quadrature errors.
pub const HALFSPACE_IDENTITY_RTOL: f64 = 0.02;

/// Boundary-power weight behind a decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    /// x_N^{(ps−1)/p}
    HalfSpacePower,
    /// (1−|x|²)^{(2s−1)/2}
    BallPower,
}

/// Seminorm, Hardy term and the weighted functional of one ground-state
/// representation, with their quadrature errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GsrDecomposition {
    pub seminorm: f64,
    /// D times the Hardy integral.
    pub hardy: f64,
    pub remainder: f64,
    pub gsr_functional: f64,
    pub zero_order: f64,
    pub weight_kind: WeightKind,
    pub seminorm_error: f64,
    pub hardy_error: f64,
    pub gsr_error: f64,
    pub zero_order_error: f64,
    /// Sum of the term errors.
    pub tolerance: f64,
    /// Coefficient of the weighted functional in the asserted inequality.
    pub c_p: f64,
    /// remainder − c_p·gsr_functional − zero_order
    pub margin: f64,
    /// Whether the asserted relation holds within tolerance.
    pub holds: bool,
}

impl GsrDecomposition {
    fn zero(kind: WeightKind, c_p: f64) -> Self {
        Self {
            seminorm: 0.0,
            hardy: 0.0,
            remainder: 0.0,
            gsr_functional: 0.0,
            zero_order: 0.0,
            weight_kind: kind,
            seminorm_error: 0.0,
            hardy_error: 0.0,
            gsr_error: 0.0,
            zero_order_error: 0.0,
            tolerance: 0.0,
            c_p,
            margin: 0.0,
            holds: true,
        }
    }

    /// Relative gap |remainder − J|/J of the p = 2 identity.
    pub fn identity_gap(&self) -> f64 {
        (self.remainder - self.gsr_functional).abs() / self.gsr_functional.abs().max(f64::MIN_POSITIVE)
    }
}

fn halfspace_height(domain: &Domain) -> Result<(usize, f64)> {
    let Domain::HalfSpace { normal, offset } = domain else {
        return Err(FracError::Precondition("expected a half-space domain".into()));
    };
    let axis = normal
        .iter()
        .position(|v| *v == 1.0)
        .filter(|_| normal.iter().filter(|v| **v != 0.0).count() == 1)
        .ok_or_else(|| FracError::Precondition("half-space normal must be a coordinate vector +e_k".into()))?;
    Ok((axis, *offset))
}

/// Nodes where u ≠ 0 must keep the weight away from zero.
fn guard_boundary(u: &GridFunction, height: impl Fn(&[f64]) -> f64, what: &str) -> Result<()> {
    let h = u.mesh().h();
    for (x, v) in u.mesh().points().zip(u.values()) {
        if *v != 0.0 && height(x) < h {
            return domain(format!("{what}: u = {v:e} at a node within one grid spacing of the boundary"));
        }
    }
    Ok(())
}

fn need_source(u: &GridFunction) -> Result<FieldFn> {
    u.source()
        .cloned()
        .ok_or_else(|| FracError::Precondition("trial needs a closed form for resampling".into()))
}

fn weight_grid(mesh: &Arc<Mesh>, w: FieldFn) -> Result<GridFunction> {
    GridFunction::from_fn(mesh.clone(), w)
}

/// Half-space ground-state representation for u supported in a box in
/// {x_N > offset}. For p = 2 the remainder equals J[v]; for p > 2 the relation
/// remainder ≥ c_p·J[v] is checked with the supplied c_p (no explicit value
/// is available, default 0).
pub fn gsr_halfspace(u: &GridFunction, params: &FracParams, quad: &QuadratureSpec, c_p: Option<f64>) -> Result<GsrDecomposition> {
    params.require_hardy()?;
    if params.p < 2.0 {
        return domain("half-space representation requires p >= 2");
    }
    let (axis, offset) = halfspace_height(u.domain())?;
    let identity = params.p == 2.0;
    let c_p = c_p.unwrap_or(if identity { 1.0 } else { 0.0 });
    if !(c_p >= 0.0) {
        return domain("c_p must be nonnegative");
    }
    if u.is_zero() {
        return Ok(GsrDecomposition::zero(WeightKind::HalfSpacePower, c_p));
    }
    let height = move |x: &[f64]| x[axis] - offset;
    guard_boundary(u, height, "half-space representation")?;
    let a = (params.ps() - 1.0) / params.p;
    let omega: FieldFn = Arc::new(move |x: &[f64]| height(x).max(0.0).powf(a));

    let semi = gagliardo_seminorm(u, params, quad)?;
    let d = hardy_constant(params)?;
    let hardy = hardy_term_estimate(u, params, HardyWeight::Coordinate, quad)?;
    let w = weight_grid(u.mesh(), omega.clone())?;
    let v = u.map(move |x, val| if val == 0.0 { 0.0 } else { val / height(x).powf(a) })?;
    let j = weighted_seminorm(&v, &w, params, quad)?;
    Ok(assemble(
        WeightKind::HalfSpacePower,
        semi,
        Estimate {
            value: d * hardy.value,
            error: d * hardy.error,
            within_budget: hardy.within_budget,
        },
        j,
        Estimate::exact(0.0),
        c_p,
        identity,
    ))
}

fn assemble(
    kind: WeightKind,
    semi: Estimate,
    hardy: Estimate,
    gsr: Estimate,
    zero: Estimate,
    c_p: f64,
    identity: bool,
) -> GsrDecomposition {
    let remainder = semi.value - hardy.value;
    let tolerance = semi.error + hardy.error + c_p * gsr.error + zero.error;
    let margin = remainder - c_p * gsr.value - zero.value;
    let holds = if identity {
        margin.abs() <= 3.0 * tolerance + HALFSPACE_IDENTITY_RTOL * gsr.value.abs()
    } else {
        margin >= -3.0 * tolerance
    };
    GsrDecomposition {
        seminorm: semi.value,
        hardy: hardy.value,
        remainder,
        gsr_functional: gsr.value,
        zero_order: zero.value,
        weight_kind: kind,
        seminorm_error: semi.error,
        hardy_error: hardy.error,
        gsr_error: gsr.error,
        zero_order_error: zero.error,
        tolerance,
        c_p,
        margin,
        holds,
    }
}

/// Sliced lower bound for J[v] on a half-space:
/// (x_N y_N)^a ≥ min(x_N, y_N)^{2a} = 2a ∫_0^∞ 1{x_N>t} 1{y_N>t} t^{2a−1} dt with
/// 2a = ps − 1, and the slice seminorms S_t of v on {x_N > t} are
/// nonincreasing in t, so Σ_k S_{t_{k+1}}(t_{k+1}^{ps−1} − t_k^{ps−1}) ≤ J[v].
pub fn layer_cake_sobolev_chain(v: &GridFunction, params: &FracParams, quad: &QuadratureSpec, slices: usize) -> Result<f64> {
    params.require_hardy()?;
    if slices == 0 {
        return domain("at least one slice is required");
    }
    let (axis, offset) = halfspace_height(v.domain())?;
    if v.is_zero() {
        return Ok(0.0);
    }
    let src = need_source(v)?;
    let mesh = v.mesh();
    let dim = mesh.dim();
    let top = mesh.box_hi()[axis] - offset;
    let h = mesh.h();
    let ps = params.ps();
    let terms: Vec<Result<f64>> = (1..=slices)
        .into_par_iter()
        .map(|k| {
            let t = top * k as f64 / slices as f64;
            let t_prev = top * (k - 1) as f64 / slices as f64;
            if top - t < 2.0 * h {
                return Ok(0.0);
            }
            let mut normal = vec![0.0; dim];
            normal[axis] = 1.0;
            let sub = Domain::HalfSpace {
                normal,
                offset: offset + t,
            };
            let mut lo = mesh.box_lo().to_vec();
            lo[axis] = offset + t;
            let hi = mesh.box_hi().to_vec();
            let side = (0..dim).map(|i| hi[i] - lo[i]).fold(0.0, f64::max);
            let res = (((side / h).ceil() as usize).div_ceil(4) * 4).max(8);
            let sub_mesh = Arc::new(Mesh::in_box(&sub, &lo, &hi, res)?);
            let f = src.clone();
            let sub_v = GridFunction::from_fn(sub_mesh, Arc::new(move |x: &[f64]| f(x)))?;
            let sub_quad = QuadratureSpec {
                resolution: res,
                ..quad.clone()
            };
            let st = gagliardo_seminorm(&sub_v, params, &sub_quad)?.value;
            Ok(st * (t.powf(ps - 1.0) - t_prev.powf(ps - 1.0)))
        })
        .collect();
    let terms: Vec<f64> = terms.into_iter().collect::<Result<_>>()?;
    Ok(pairwise_sum(&terms))
}

fn check_ball_s(s: f64) -> Result<()> {
    if !(s > 0.5 && s < 1.0) {
        return domain(format!("ball weight requires 1/2 < s < 1, got s = {s}"));
    }
    Ok(())
}

/// w_N(x) = (1−|x|²)^{(2s−1)/2}.
pub fn ball_weight(x: &[f64], s: f64) -> Result<f64> {
    check_ball_s(s)?;
    let r2: f64 = x.iter().map(|v| v * v).sum();
    if !(r2 < 1.0) {
        return domain("ball weight requires |x| < 1");
    }
    Ok((1.0 - r2).powf(s - 0.5))
}

fn check_open_interval(x: f64) -> Result<()> {
    if !(x.abs() < 1.0) {
        return domain(format!("point must lie in (-1, 1), got {x}"));
    }
    Ok(())
}

/// −L_{(−1,1)}w_1(x) = (1−x²)^{−(2s+1)/2}(B(s+½, 1−s) − (1−x)^{2s} − (1+x)^{2s})/(2s).
///
/// Both boundary terms enter with a minus sign; the value is even in x and
/// agrees with the principal-value quadrature.
pub fn regional_laplacian_w1_explicit(x: f64, s: f64) -> Result<f64> {
    check_ball_s(s)?;
    check_open_interval(x)?;
    let b = beta_fn(s + 0.5, 1.0 - s)?;
    let t = 2.0 * s;
    Ok((1.0 - x * x).powf(-(t + 1.0) / 2.0) * (b - (1.0 - x).powf(t) - (1.0 + x).powf(t)) / t)
}

/// The same expression with the mixed signs B − (1−x)^{2s} + (1+x)^{2s}; kept
/// for comparison only since it is not even in x.
pub fn regional_laplacian_w1_mixed_sign(x: f64, s: f64) -> Result<f64> {
    check_ball_s(s)?;
    check_open_interval(x)?;
    let b = beta_fn(s + 0.5, 1.0 - s)?;
    let t = 2.0 * s;
    Ok((1.0 - x * x).powf(-(t + 1.0) / 2.0) * (b - (1.0 - x).powf(t) + (1.0 + x).powf(t)) / t)
}

/// c1(1−x²)^{−(2s+1)/2} + c2(1−x²)^{−(2s−1)/2}.
pub fn w1_lower_bound(x: f64, s: f64) -> Result<f64> {
    check_open_interval(x)?;
    let (c1, c2) = c1_c2(s)?;
    let m = 1.0 - x * x;
    Ok(c1 * m.powf(-(2.0 * s + 1.0) / 2.0) + c2 * m.powf(-(2.0 * s - 1.0) / 2.0))
}

/// −L_{B_1}w_N(x) by principal-value quadrature on the unit ball of R^N.
pub fn ball_laplacian_pv(x: &[f64], s: f64, quad: &QuadratureSpec) -> Result<Estimate> {
    check_ball_s(s)?;
    let dom = Domain::unit_ball(x.len());
    let w = move |y: &[f64]| {
        let r2: f64 = y.iter().map(|v| v * v).sum();
        (1.0 - r2).max(0.0).powf(s - 0.5)
    };
    let est = pv_regional_laplacian(&w, &dom, x, s, quad)?;
    Ok(Estimate {
        value: -est.value,
        ..est
    })
}

/// −L_{B_1}w_N(x) through chords: on the chord through x in direction ω with
/// half-length a and midpoint offset b = x·ω, w_N is a^{2s−1}w_1 of the chord
/// coordinate, so −L_{B_1}w_N(x) = ½ ∫_{S^{N−1}} a_ω^{−1} (−L_{(−1,1)}w_1)(b/a) dω.
pub fn ball_laplacian_angular_reduction(x: &[f64], s: f64, angular: usize) -> Result<f64> {
    check_ball_s(s)?;
    let r2: f64 = x.iter().map(|v| v * v).sum();
    if !(r2 < 1.0) {
        return domain("point must lie in the open unit ball");
    }
    let chord = |omega: &[f64]| -> Result<f64> {
        let b: f64 = x.iter().zip(omega).map(|(a, w)| a * w).sum();
        let a = (b * b + 1.0 - r2).sqrt();
        Ok(regional_laplacian_w1_explicit(b / a, s)? / a)
    };
    match x.len() {
        2 => {
            let panels = (angular / 8).max(4);
            let mut total = 0.0;
            for k in 0..panels {
                let lo = 2.0 * PI * k as f64 / panels as f64;
                let hi = 2.0 * PI * (k + 1) as f64 / panels as f64;
                for (t, w) in gauss_legendre_on(8, lo, hi) {
                    total += w * chord(&[t.cos(), t.sin()])?;
                }
            }
            Ok(0.5 * total)
        }
        3 => {
            let r = r2.sqrt();
            let axis = if r > 0.0 { [x[0] / r, x[1] / r, x[2] / r] } else { [0.0, 0.0, 1.0] };
            // the integrand depends on ω only through ω·axis
            let mut total = 0.0;
            for (z, w) in gauss_legendre_on(angular.max(16), -1.0, 1.0) {
                let rho = (1.0 - z * z).sqrt();
                let helper = if axis[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
                let proj: f64 = (0..3).map(|i| helper[i] * axis[i]).sum();
                let mut e = [0.0; 3];
                for i in 0..3 {
                    e[i] = helper[i] - proj * axis[i];
                }
                let ne = (e[0] * e[0] + e[1] * e[1] + e[2] * e[2]).sqrt();
                let omega: Vec<f64> = (0..3).map(|i| z * axis[i] + rho * e[i] / ne).collect();
                total += w * 2.0 * PI * chord(&omega)?;
            }
            Ok(0.5 * total)
        }
        n => Err(FracError::Unsupported(format!("angular reduction in dimension {n}"))),
    }
}

/// Outcome of the ball regional-Laplacian lower bound at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BallLaplacianBound {
    pub pv_value: f64,
    pub pv_error: f64,
    pub bound_value: f64,
    pub holds: bool,
}

/// (c1/2)·M_{N,2s}(1−|x|²)^{−(2s+1)/2} + (c2/2)|S^{N−1}|(1−|x|²)^{−(2s−1)/2}.
pub fn ball_bound_value(x: &[f64], s: f64) -> Result<f64> {
    let n = x.len();
    let (c1, c2) = c1_c2(s)?;
    let m = 1.0 - x.iter().map(|v| v * v).sum::<f64>();
    if !(m > 0.0) {
        return domain("point must lie in the open unit ball");
    }
    Ok(0.5 * c1 * sphere_moment(n, 2.0 * s)? * m.powf(-(2.0 * s + 1.0) / 2.0)
        + 0.5 * c2 * sphere_surface(n)? * m.powf(-(2.0 * s - 1.0) / 2.0))
}

/// PV value of −L_{B_1}w_N(x) against the explicit lower bound.
pub fn ball_laplacian_lower_bound(x: &[f64], s: f64, quad: &QuadratureSpec) -> Result<BallLaplacianBound> {
    if x.len() < 2 {
        return domain("ball Laplacian bound requires N >= 2");
    }
    let bound_value = ball_bound_value(x, s)?;
    let pv = ball_laplacian_pv(x, s, quad)?;
    Ok(BallLaplacianBound {
        pv_value: pv.value,
        pv_error: pv.error,
        bound_value,
        holds: pv.value >= bound_value - 3.0 * pv.error,
    })
}

/// Source of the potential −2L_{B_1}w_N/w_N in the ball identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BallPotential {
    /// chord reduction through the explicit one-dimensional formula
    #[default]
    AngularReduction,
    /// principal-value quadrature at every node
    PrincipalValue,
}

/// The zero-order constant: the smaller of c2|S^{N−1}| and
/// s^{−1}(2^{2s−1}−1)|S^{N−1}| (algebraically equal).
pub fn ball_zero_order_constant(dim: usize, s: f64) -> Result<f64> {
    let (_, c2) = c1_c2(s)?;
    let area = sphere_surface(dim)?;
    let stated = (2f64.powf(2.0 * s - 1.0) - 1.0) / s * area;
    Ok((c2 * area).min(stated))
}

fn check_unit_ball(u: &GridFunction, s: f64) -> Result<usize> {
    check_ball_s(s)?;
    let dim = u.mesh().dim();
    match u.domain() {
        Domain::Ball { center, radius } if *radius == 1.0 && center.iter().all(|c| *c == 0.0) && (2..=3).contains(&dim) => {
            Ok(dim)
        }
        _ => Err(FracError::Precondition("expected the unit ball in dimension 2 or 3".into())),
    }
}

/// Ball ground-state representation (p = 2): checks
/// seminorm − D·proxyHardy ≥ J̃[v] + c∫|v|² with v = u/w_N.
pub fn gsr_ball(u: &GridFunction, s: f64, quad: &QuadratureSpec) -> Result<GsrDecomposition> {
    let dim = check_unit_ball(u, s)?;
    let params = FracParams::new(dim, 2.0, s)?;
    if u.is_zero() {
        return Ok(GsrDecomposition::zero(WeightKind::BallPower, 1.0));
    }
    let dist = |x: &[f64]| 1.0 - x.iter().map(|v| v * v).sum::<f64>().sqrt();
    guard_boundary(u, dist, "ball representation")?;
    let semi = gagliardo_seminorm(u, &params, quad)?;
    let d = hardy_constant(&params)?;
    let hardy = hardy_term_estimate(u, &params, HardyWeight::BallProxy, quad)?;
    let wfn: FieldFn = Arc::new(move |x: &[f64]| {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        (1.0 - r2).max(0.0).powf(s - 0.5)
    });
    let w = weight_grid(u.mesh(), wfn.clone())?;
    let v = u.map(move |x, val| {
        if val == 0.0 {
            0.0
        } else {
            val / wfn(x)
        }
    })?;
    let j = weighted_seminorm(&v, &w, &params, quad)?;
    let c = ball_zero_order_constant(dim, s)?;
    let l2 = lq_norm_estimate(&v, 2.0, quad)?;
    let zero = Estimate {
        value: c * l2.value * l2.value,
        error: 2.0 * c * l2.value * l2.error,
        within_budget: l2.within_budget,
    };
    Ok(assemble(
        WeightKind::BallPower,
        semi,
        Estimate {
            value: d * hardy.value,
            error: d * hardy.error,
            within_budget: hardy.within_budget,
        },
        j,
        zero,
        1.0,
        false,
    ))
}

/// Both sides of seminorm + 2∫(L w_N/w_N)|u|² = J̃[v] on the unit ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BallIdentity {
    pub seminorm: f64,
    /// ∫ (−2 L w_N / w_N) |u|²
    pub potential_term: f64,
    pub gsr_functional: f64,
    /// |seminorm − potential_term − J̃| / J̃
    pub relative_gap: f64,
}

/// Evaluates both sides of the ball identity independently.
pub fn gsr_ball_identity(u: &GridFunction, s: f64, quad: &QuadratureSpec, potential: BallPotential) -> Result<BallIdentity> {
    let dim = check_unit_ball(u, s)?;
    let params = FracParams::new(dim, 2.0, s)?;
    let semi = gagliardo_seminorm(u, &params, quad)?.value;
    let mesh = u.mesh();
    let angular = quad.pv_angular_nodes.max(64);
    let terms: Vec<Result<f64>> = (0..mesh.len())
        .into_par_iter()
        .map(|i| {
            let ui = u.values()[i];
            if ui == 0.0 {
                return Ok(0.0);
            }
            let x = mesh.point(i);
            let lw = match potential {
                BallPotential::AngularReduction => ball_laplacian_angular_reduction(x, s, angular)?,
                BallPotential::PrincipalValue => ball_laplacian_pv(x, s, quad)?.value,
            };
            Ok(2.0 * lw / ball_weight(x, s)? * ui * ui)
        })
        .collect();
    let terms: Vec<f64> = terms.into_iter().collect::<Result<_>>()?;
    let potential_term = pairwise_sum(&terms) * mesh.cell_volume();
    let wfn: FieldFn = Arc::new(move |x: &[f64]| {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        (1.0 - r2).max(0.0).powf(s - 0.5)
    });
    let w = weight_grid(mesh, wfn.clone())?;
    let v = u.map(move |x, val| if val == 0.0 { 0.0 } else { val / wfn(x) })?;
    let j = weighted_seminorm(&v, &w, &params, quad)?.value;
    Ok(BallIdentity {
        seminorm: semi,
        potential_term,
        gsr_functional: j,
        relative_gap: (semi - potential_term - j).abs() / j.abs().max(f64::MIN_POSITIVE),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{pv_regional_laplacian_direct, sample, sample_in_box, TrialFunction};

    #[test]
    fn ball_weight_values() {
        assert_eq!(ball_weight(&[0.0, 0.0], 0.75).unwrap(), 1.0);
        assert!((ball_weight(&[0.6, 0.0], 0.75).unwrap() - 0.64f64.powf(0.25)).abs() < 1e-15);
        assert!((ball_weight(&[0.6, 0.0], 0.75).unwrap() - 0.894_427).abs() < 1e-6);
        assert!(ball_weight(&[1.0, 0.0], 0.75).is_err());
        assert!(ball_weight(&[0.999_999_999], 0.75).unwrap() < 0.01);
    }

    #[test]
    fn explicit_formula_matches_pv_quadrature() {
        let dom = Domain::interval(-1.0, 1.0);
        for &s in &[0.6, 0.75, 0.9] {
            let w = move |y: &[f64]| (1.0 - y[0] * y[0]).max(0.0).powf(s - 0.5);
            for &x in &[-0.5, 0.0, 0.3, 0.5] {
                let pv = -pv_regional_laplacian_direct(&w, &dom, &[x], s, 64).unwrap();
                let ex = regional_laplacian_w1_explicit(x, s).unwrap();
                assert!((pv - ex).abs() < 1e-7 * ex.abs(), "s={s} x={x}: {pv} vs {ex}");
            }
        }
    }

    #[test]
    fn explicit_formula_is_even_and_bounded_below() {
        for &s in &[0.6, 0.75, 0.9] {
            for k in 0..50 {
                let x = -0.95 + 1.9 * (k as f64 + 0.5) / 50.0;
                let v = regional_laplacian_w1_explicit(x, s).unwrap();
                assert!((v - regional_laplacian_w1_explicit(-x, s).unwrap()).abs() < 1e-12 * v.abs());
                assert!(v >= w1_lower_bound(x, s).unwrap() - 1e-9);
            }
        }
        // at the center the bound is attained
        let (c1, c2) = c1_c2(0.75).unwrap();
        assert!((regional_laplacian_w1_explicit(0.0, 0.75).unwrap() - (c1 + c2)).abs() < 1e-12);
    }

    #[test]
    fn chord_reduction_matches_pv() {
        let quad = QuadratureSpec::with_resolution(96);
        for x in [[0.0, 0.0], [0.3, -0.2]] {
            let pv = ball_laplacian_pv(&x, 0.75, &quad).unwrap();
            let red = ball_laplacian_angular_reduction(&x, 0.75, 128).unwrap();
            assert!((pv.value - red).abs() < 1e-2 * red, "{x:?}: {} vs {red}", pv.value);
        }
        let centre = ball_laplacian_angular_reduction(&[0.0, 0.0], 0.75, 64).unwrap();
        assert!((centre - PI * regional_laplacian_w1_explicit(0.0, 0.75).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn w1_bound_at_centre() {
        let b = ball_bound_value(&[0.0, 0.0], 0.75).unwrap();
        let (c1, c2) = c1_c2(0.75).unwrap();
        let expected = 0.5 * c1 * 3.496_076_739_06 + c2 * PI;
        assert!((b - expected).abs() < 1e-9);
        let r = ball_laplacian_lower_bound(&[0.0, 0.0], 0.75, &QuadratureSpec::with_resolution(96)).unwrap();
        assert!(r.holds && r.pv_value > r.bound_value);
    }

    #[test]
    fn zero_order_constants_agree() {
        for &s in &[0.6, 0.75, 0.9] {
            let (_, c2) = c1_c2(s).unwrap();
            let area = sphere_surface(2).unwrap();
            let stated = (2f64.powf(2.0 * s - 1.0) - 1.0) / s * area;
            assert!((c2 * area - stated).abs() < 1e-13);
            assert!(ball_zero_order_constant(2, s).unwrap() <= stated);
        }
    }

    fn halfline_trial(c: f64, r: f64, s: f64) -> TrialFunction {
        TrialFunction::BoundaryPower {
            exponent: s - 0.5,
            base: Box::new(TrialFunction::CompactBump {
                center: vec![c],
                radius: r,
                power: 2.0,
            }),
        }
    }

    #[test]
    fn halfline_identity_p2() {
        let s = 0.75;
        let dom = Domain::upper_half_space(1);
        let u = sample_in_box(&halfline_trial(0.5, 0.3, s), &dom, &[0.0], &[1.0], 256).unwrap();
        let params = FracParams::new(1, 2.0, s).unwrap();
        let g = gsr_halfspace(&u, &params, &QuadratureSpec::with_resolution(256), None).unwrap();
        assert!(g.identity_gap() < 0.02, "{g:?}");
        assert!(g.holds);
    }

    #[test]
    fn halfline_zero_and_guard() {
        let dom = Domain::upper_half_space(1);
        let params = FracParams::new(1, 2.0, 0.75).unwrap();
        let quad = QuadratureSpec::with_resolution(64);
        let z = sample_in_box(&TrialFunction::Constant { value: 0.0 }, &dom, &[0.0], &[1.0], 64).unwrap();
        let g = gsr_halfspace(&z, &params, &quad, None).unwrap();
        assert_eq!(g.seminorm, 0.0);
        assert_eq!(g.gsr_functional, 0.0);
        let one = sample_in_box(&TrialFunction::Constant { value: 1.0 }, &dom, &[0.0], &[1.0], 64).unwrap();
        assert!(matches!(gsr_halfspace(&one, &params, &quad, None), Err(FracError::Domain(_))));
    }

    #[test]
    fn layer_cake_is_a_lower_bound() {
        let s = 0.75;
        let dom = Domain::upper_half_space(1);
        let params = FracParams::new(1, 2.0, s).unwrap();
        let quad = QuadratureSpec::with_resolution(128);
        let f = TrialFunction::CompactBump {
            center: vec![0.5],
            radius: 0.3,
            power: 2.0,
        };
        let v = sample_in_box(&f, &dom, &[0.0], &[1.0], 128).unwrap();
        let a = (params.ps() - 1.0) / 2.0;
        let w = v.map(move |x, _| x[0].powf(a)).unwrap();
        let j = weighted_seminorm(&v, &w, &params, &quad).unwrap();
        let chain = layer_cake_sobolev_chain(&v, &params, &quad, 32).unwrap();
        assert!(chain <= j.value + j.error, "{chain} vs {}", j.value);
        assert!(chain >= 0.6 * j.value, "{chain} vs {}", j.value);
    }

    #[test]
    fn ball_inequality_gaussian() {
        let u = sample(
            &TrialFunction::Gaussian {
                center: vec![0.0, 0.0],
                width: 0.3,
                support_radius: Some(0.9),
            },
            &Domain::unit_ball(2),
            32,
        )
        .unwrap();
        let g = gsr_ball(&u, 0.75, &QuadratureSpec::with_resolution(32)).unwrap();
        assert!(g.holds && g.margin > 0.0, "{g:?}");
    }

    #[test]
    fn ball_identity_gaussian() {
        let u = sample(
            &TrialFunction::Gaussian {
                center: vec![0.0, 0.0],
                width: 0.3,
                support_radius: Some(0.9),
            },
            &Domain::unit_ball(2),
            32,
        )
        .unwrap();
        let id = gsr_ball_identity(&u, 0.75, &QuadratureSpec::with_resolution(32), BallPotential::AngularReduction).unwrap();
        assert!(id.relative_gap < 0.03, "{id:?}");
    }

    #[test]
    fn proxy_dominates_distance_weight() {
        let ball = Domain::Ball {
            center: vec![0.0, 0.0],
            radius: 1.5,
        };
        let params = FracParams::new(2, 2.0, 0.75).unwrap();
        let quad = QuadratureSpec::with_resolution(24);
        let u = sample(&TrialFunction::Constant { value: 1.0 }, &ball, 24).unwrap();
        let proxy = crate::quadrature::hardy_term(&u, &params, HardyWeight::BallProxy, &quad).unwrap();
        let dist = crate::quadrature::hardy_term(&u, &params, HardyWeight::BoundaryDistance, &quad).unwrap();
        assert!(proxy >= dist - 1e-12 * dist);
    }
}
