//! End-to-end inequality checks: Hardy and HSM reports, the empirical σ
//! search, the even-reflection Sobolev bound, the Loss–Sloane line average and
//! the constant chain that turns the 1D key constant into a σ bound.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, FracError, Result};
use crate::geometry::Domain;
use crate::integrate::pairwise_sum;
use crate::onedim::trial_rng;
use crate::optim::{nelder_mead, SearchBudget, SearchResult};
use crate::quadrature::{
    gagliardo_seminorm, hardy_term_estimate, lq_norm_estimate, reflected_cross_term, FieldFn, GridFunction,
    HardyWeight, Mesh, QuadratureSpec, TrialFunction,
};
use crate::special::{gamma_fn, hardy_constant, sphere_moment, sphere_surface, FracParams};

/// Seminorm, Hardy term and their difference for one function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HardyCheck {
    pub seminorm: f64,
    pub seminorm_error: f64,
    /// ∫|u|^p / weight^{ps}, without the constant
    pub hardy: f64,
    pub hardy_error: f64,
    pub hardy_constant: f64,
    /// seminorm − D·hardy
    pub remainder: f64,
    pub tolerance: f64,
    /// remainder ≥ −3·tolerance
    pub holds: bool,
}

pub fn hardy_check(u: &GridFunction, params: &FracParams, weight: HardyWeight, quad: &QuadratureSpec) -> Result<HardyCheck> {
    params.require_hardy()?;
    if params.dim != u.mesh().dim() {
        return domain("params.N does not match the grid dimension");
    }
    let semi = gagliardo_seminorm(u, params, quad)?;
    let hardy = hardy_term_estimate(u, params, weight, quad)?;
    let d = hardy_constant(params)?;
    let remainder = semi.value - d * hardy.value;
    let tolerance = semi.error + d * hardy.error;
    Ok(HardyCheck {
        seminorm: semi.value,
        seminorm_error: semi.error,
        hardy: hardy.value,
        hardy_error: hardy.error,
        hardy_constant: d,
        remainder,
        tolerance,
        holds: remainder >= -3.0 * tolerance,
    })
}

/// All terms of the HSM inequality for one function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InequalityReport {
    pub seminorm: f64,
    pub hardy: f64,
    pub remainder: f64,
    /// ‖u‖_q^p
    pub lq: f64,
    /// remainder / lq
    pub sigma_emp: f64,
    pub seminorm_error: f64,
    pub hardy_error: f64,
    pub lq_error: f64,
    pub sigma_error: f64,
    pub hardy_constant: f64,
    pub q: f64,
    pub params: FracParams,
    pub domain: Domain,
    pub weight_mode: HardyWeight,
    /// remainder ≥ −3·(seminorm_error + D·hardy_error)
    pub hardy_holds: bool,
}

pub fn hsm_report(u: &GridFunction, params: &FracParams, weight: HardyWeight, quad: &QuadratureSpec) -> Result<InequalityReport> {
    params.require_hsm()?;
    let q = params.q().expect("ps < N checked");
    if u.is_zero() {
        return Err(FracError::ZeroFunction("HSM ratio is undefined for u = 0".into()));
    }
    let h = hardy_check(u, params, weight, quad)?;
    let norm = lq_norm_estimate(u, q, quad)?;
    let p = params.p;
    let lq = norm.value.powf(p);
    if !(lq > 0.0) {
        return Err(FracError::ZeroFunction("L^q norm vanishes on the grid".into()));
    }
    let lq_error = p * norm.value.powf(p - 1.0) * norm.error;
    let sigma_emp = h.remainder / lq;
    Ok(InequalityReport {
        seminorm: h.seminorm,
        hardy: h.hardy,
        remainder: h.remainder,
        lq,
        sigma_emp,
        seminorm_error: h.seminorm_error,
        hardy_error: h.hardy_error,
        lq_error,
        sigma_error: h.tolerance / lq + h.remainder.abs() * lq_error / (lq * lq),
        hardy_constant: h.hardy_constant,
        q,
        params: *params,
        domain: u.domain().clone(),
        weight_mode: weight,
        hardy_holds: h.holds,
    })
}

/// Three-parameter trial families on a bounded domain. The center moves
/// along the first axis from the bounding-box midpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BumpFamily {
    /// d(x)^β exp(−γ|x − x₀|²): x₀ offset 0.9·tanh θ₀, γ = e^{θ₁}, β = 1 + min(e^{θ₂}, 20)
    #[default]
    Boundary,
    /// (1 − |x − x₀|²/r²)^β₊ with r a sigmoid fraction of d(x₀)
    Compact,
}

fn sigmoid(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

impl BumpFamily {
    pub fn trial(self, dom: &Domain, theta: &[f64]) -> Result<TrialFunction> {
        if theta.len() != 3 {
            return domain("bump families take three parameters");
        }
        let (lo, hi) = dom
            .bounding_box()
            .ok_or_else(|| FracError::Unsupported("bump families need a bounded domain".into()))?;
        let mut center: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();
        let reach = 0.5 * (hi[0] - lo[0]);
        let power = 1.0 + theta[2].exp().min(20.0);
        match self {
            BumpFamily::Boundary => {
                center[0] += 0.9 * reach * theta[0].tanh();
                Ok(TrialFunction::BoundaryBump {
                    center,
                    gamma: theta[1].exp().min(1e4) / (reach * reach),
                    beta: power,
                })
            }
            BumpFamily::Compact => {
                center[0] += 0.7 * reach * theta[0].tanh();
                let d = dom.dist_to_complement(&center);
                if !(d > 0.0) {
                    return domain("bump center left the domain");
                }
                Ok(TrialFunction::CompactBump {
                    center,
                    radius: d * (0.3 + 0.7 * sigmoid(theta[1])),
                    power,
                })
            }
        }
    }

    /// Random parameters for the trial suites.
    pub fn random_theta<R: Rng>(self, rng: &mut R) -> [f64; 3] {
        [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(-2.0..1.5)]
    }
}

fn sample_family(family: BumpFamily, dom: &Domain, theta: &[f64], resolution: usize) -> Result<GridFunction> {
    let t = family.trial(dom, theta)?;
    let mesh = Arc::new(Mesh::new(dom, resolution)?);
    GridFunction::from_fn(mesh, t.evaluator(dom)?)
}

/// σ_emp for a family member; `None` marks a flagged evaluation.
fn family_sigma(
    family: BumpFamily,
    dom: &Domain,
    params: &FracParams,
    weight: HardyWeight,
    quad: &QuadratureSpec,
    theta: &[f64],
) -> Option<f64> {
    let u = sample_family(family, dom, theta, quad.resolution).ok()?;
    let r = hsm_report(&u, params, weight, quad).ok()?;
    (r.remainder > 0.0 && r.sigma_emp.is_finite()).then_some(r.sigma_emp)
}

/// Smallest σ_emp found by simplex search over a family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SigmaSearch {
    pub sigma: f64,
    pub theta: Vec<f64>,
    pub trial: TrialFunction,
    pub search: SearchResult,
}

pub fn minimize_sigma(
    family: BumpFamily,
    dom: &Domain,
    params: &FracParams,
    weight: HardyWeight,
    quad: &QuadratureSpec,
    budget: &SearchBudget,
) -> Result<SigmaSearch> {
    params.require_hsm()?;
    let search = nelder_mead(|th: &[f64]| family_sigma(family, dom, params, weight, quad, th), &[0.0; 3], budget)?;
    Ok(SigmaSearch {
        sigma: search.value,
        theta: search.argmin.clone(),
        trial: family.trial(dom, &search.argmin)?,
        search,
    })
}

/// One trial of a randomized HSM suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HsmTrial {
    pub id: u64,
    pub theta: Vec<f64>,
    pub report: Option<InequalityReport>,
    /// Why the trial was not accepted at the requested resolution.
    pub flag: Option<String>,
    /// σ_emp at doubled resolution for flagged nonpositive remainders.
    pub refined_sigma: Option<f64>,
}

impl HsmTrial {
    pub fn accepted(&self) -> bool {
        self.flag.is_none() && self.report.as_ref().is_some_and(|r| r.sigma_emp > 0.0)
    }
}

/// Random members of `family`, one ChaCha8 stream per trial id.
pub fn hsm_suite(
    family: BumpFamily,
    dom: &Domain,
    params: &FracParams,
    weight: HardyWeight,
    quad: &QuadratureSpec,
    trials: usize,
    seed: u64,
) -> Result<Vec<HsmTrial>> {
    params.require_hsm()?;
    (0..trials as u64)
        .into_par_iter()
        .map(|id| {
            let theta = family.random_theta(&mut trial_rng(seed, id)).to_vec();
            let u = sample_family(family, dom, &theta, quad.resolution)?;
            let report = hsm_report(&u, params, weight, quad)?;
            let (flag, refined_sigma) = if report.remainder > 0.0 {
                (None, None)
            } else {
                let fine = QuadratureSpec {
                    resolution: 2 * quad.resolution,
                    ..quad.clone()
                };
                let u2 = sample_family(family, dom, &theta, fine.resolution)?;
                let r2 = hsm_report(&u2, params, weight, &fine)?;
                (Some(format!("nonpositive remainder {:.6e}", report.remainder)), Some(r2.sigma_emp))
            };
            Ok(HsmTrial {
                id,
                theta,
                report: Some(report),
                flag,
                refined_sigma,
            })
        })
        .collect()
}

/// Support box used for random trials: the bounding box of a bounded domain,
/// or the unit cube on the boundary hyperplane of a coordinate half-space.
pub fn trial_box(dom: &Domain) -> Result<(Vec<f64>, Vec<f64>)> {
    if let Some(b) = dom.bounding_box() {
        return Ok(b);
    }
    let (axis, offset) = halfspace_axis(dom)?;
    let n = dom.dim();
    let mut lo = vec![0.0; n];
    lo[axis] = offset;
    let hi = lo.iter().map(|v| v + 1.0).collect();
    Ok((lo, hi))
}

fn halfspace_axis(dom: &Domain) -> Result<(usize, f64)> {
    let Domain::HalfSpace { normal, offset } = dom else {
        return Err(FracError::Precondition("expected a half-space".into()));
    };
    let axis = normal
        .iter()
        .position(|v| *v == 1.0)
        .filter(|_| normal.iter().filter(|v| **v != 0.0).count() == 1)
        .ok_or_else(|| FracError::Unsupported("half-space normal must be a coordinate vector".into()))?;
    Ok((axis, *offset))
}

/// Random compactly supported bump inside `dom` and inside the trial box.
pub fn random_interior_bump<R: Rng>(rng: &mut R, dom: &Domain) -> Result<TrialFunction> {
    let (lo, hi) = trial_box(dom)?;
    for _ in 0..1000 {
        let c: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| rng.random_range(*a..*b)).collect();
        if !dom.contains(&c) {
            continue;
        }
        let to_box = c
            .iter()
            .zip(lo.iter().zip(&hi))
            .map(|(x, (a, b))| (x - a).min(b - x))
            .fold(f64::INFINITY, f64::min);
        let room = dom.dist_to_complement(&c).min(to_box);
        let ext = hi[0] - lo[0];
        if room < 0.08 * ext {
            continue;
        }
        return Ok(TrialFunction::CompactBump {
            center: c,
            radius: room * rng.random_range(0.5..0.98),
            power: rng.random_range(1.0..3.0),
        });
    }
    Err(FracError::Search("could not place a bump inside the domain".into()))
}

pub fn sample_on(dom: &Domain, t: &TrialFunction, resolution: usize) -> Result<GridFunction> {
    let (lo, hi) = trial_box(dom)?;
    let mesh = Arc::new(Mesh::in_box(dom, &lo, &hi, resolution)?);
    GridFunction::from_fn(mesh, t.evaluator(dom)?)
}

/// One trial of the randomized Hardy suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HardyTrial {
    pub id: u64,
    pub trial: TrialFunction,
    pub check: HardyCheck,
}

pub fn hardy_suite(
    dom: &Domain,
    params: &FracParams,
    weight: HardyWeight,
    quad: &QuadratureSpec,
    trials: usize,
    seed: u64,
) -> Result<Vec<HardyTrial>> {
    params.require_hardy()?;
    (0..trials as u64)
        .into_par_iter()
        .map(|id| {
            let trial = random_interior_bump(&mut trial_rng(seed, id), dom)?;
            let u = sample_on(dom, &trial, quad.resolution)?;
            Ok(HardyTrial {
                id,
                check: hardy_check(&u, params, weight, quad)?,
                trial,
            })
        })
        .collect()
}

/// Terms of the even-reflection bound for a function on a half-space box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReflectionReport {
    /// half-space seminorm of u
    pub direct: f64,
    /// ∬_{H×H}|u(x)−u(y)|^p |x − ȳ|^{−N−ps}
    pub cross: f64,
    /// 2·direct + 2·cross
    pub extension: f64,
    /// extension / direct, in [2, 4]
    pub ratio: f64,
    pub ratio_error: f64,
    /// R^N seminorm of the even extension evaluated on the mirrored grid
    pub whole_space: f64,
    /// |extension − whole_space| / whole_space
    pub identity_gap: f64,
}

/// Sobolev-by-reflection bookkeeping: the seminorm of the even extension ũ
/// equals 2·direct + 2·cross, and the cross term is at most the direct one.
pub fn sobolev_reflection_ratio(u: &GridFunction, params: &FracParams, quad: &QuadratureSpec) -> Result<ReflectionReport> {
    params.validate()?;
    if params.ps() >= params.dim as f64 {
        return domain(format!("reflection bound requires ps < N, got ps = {}", params.ps()));
    }
    let (axis, offset) = halfspace_axis(u.domain())?;
    let src = u
        .source()
        .ok_or_else(|| FracError::Precondition("reflection needs the closed form of u".into()))?
        .clone();
    let direct = gagliardo_seminorm(u, params, quad)?;
    let cross = reflected_cross_term(u, params, quad)?;
    let extension = 2.0 * direct.value + 2.0 * cross.value;
    if !(direct.value > 0.0) {
        return Err(FracError::ZeroFunction("reflection ratio is undefined for u = 0".into()));
    }
    let ratio = extension / direct.value;
    let ratio_error = 2.0 * (cross.error + cross.value * direct.error / direct.value) / direct.value;

    // ũ on the mirrored box, seen as a function on a lower half-space {x_k > offset − height}
    let mesh = u.mesh();
    let n = mesh.dim();
    let mut lo = mesh.box_lo().to_vec();
    let hi = mesh.box_hi().to_vec();
    let height = hi[axis] - offset;
    lo[axis] = offset - height;
    let longest = |lo: &[f64], hi: &[f64]| (0..n).map(|k| hi[k] - lo[k]).fold(0.0, f64::max);
    let scale = longest(&lo, &hi) / longest(mesh.box_lo(), &hi);
    let res = (mesh.resolution() as f64 * scale).round() as usize;
    if ((res as f64) - mesh.resolution() as f64 * scale).abs() > 1e-9 {
        return Err(FracError::Precondition("mirrored box does not keep the grid spacing".into()));
    }
    let mut normal = vec![0.0; n];
    normal[axis] = 1.0;
    let lower = Domain::HalfSpace {
        normal,
        offset: offset - height,
    };
    let even: FieldFn = Arc::new(move |x: &[f64]| {
        let mut y = x.to_vec();
        y[axis] = offset + (x[axis] - offset).abs();
        src(&y)
    });
    let mirrored = GridFunction::from_fn(Arc::new(Mesh::in_box(&lower, &lo, &hi, res)?), even)?;
    let mirrored_quad = QuadratureSpec {
        resolution: res,
        ..quad.clone()
    };
    let inside = gagliardo_seminorm(&mirrored, params, &mirrored_quad)?;
    // pairs with one point below the lower plane: ∫_{y_k<c}|x−y|^{−N−ps}dy = (σ/2)(x_k−c)^{−ps}/ps
    let ps = params.ps();
    let kappa = sphere_moment(n, ps)? / ps;
    let m = mirrored.mesh();
    let terms: Vec<f64> = (0..m.len())
        .map(|i| mirrored.values()[i].abs().powf(params.p) * (m.point(i)[axis] - (offset - height)).powf(-ps))
        .collect();
    let whole_space = inside.value + kappa * pairwise_sum(&terms) * m.cell_volume();
    Ok(ReflectionReport {
        direct: direct.value,
        cross: cross.value,
        extension,
        ratio,
        ratio_error,
        whole_space,
        identity_gap: (extension - whole_space).abs() / whole_space,
    })
}

/// Direct seminorm against its Loss–Sloane line average.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecompositionCheck {
    pub direct: f64,
    pub direct_error: f64,
    pub averaged: f64,
    pub averaged_error: f64,
    pub relative_gap: f64,
    pub lines: usize,
    pub angles: usize,
}

/// Parameter interval of the line {x + tω} inside a ball or convex polygon.
fn chord(dom: &Domain, x: &[f64], w: &[f64]) -> Result<Option<(f64, f64)>> {
    match dom {
        Domain::Ball { center, radius } => {
            let rel: Vec<f64> = x.iter().zip(center).map(|(a, c)| a - c).collect();
            let b: f64 = rel.iter().zip(w).map(|(r, d)| r * d).sum();
            let c: f64 = rel.iter().map(|r| r * r).sum::<f64>() - radius * radius;
            let disc = b * b - c;
            Ok((disc > 0.0).then(|| (-b - disc.sqrt(), -b + disc.sqrt())))
        }
        Domain::ConvexPolygon { vertices } => {
            // clip against each edge's inner half-plane
            let (mut t0, mut t1) = (f64::NEG_INFINITY, f64::INFINITY);
            let k = vertices.len();
            for i in 0..k {
                let a = vertices[i];
                let b = vertices[(i + 1) % k];
                let nrm = [-(b[1] - a[1]), b[0] - a[0]];
                let num = nrm[0] * (x[0] - a[0]) + nrm[1] * (x[1] - a[1]);
                let den = nrm[0] * w[0] + nrm[1] * w[1];
                if den == 0.0 {
                    if num <= 0.0 {
                        return Ok(None);
                    }
                } else if den > 0.0 {
                    t0 = t0.max(-num / den);
                } else {
                    t1 = t1.min(-num / den);
                }
            }
            Ok((t1 > t0).then_some((t0, t1)))
        }
        _ => Err(FracError::Unsupported("line decomposition needs a ball or convex polygon in 2D".into())),
    }
}

/// ∬ over Ω×Ω as ½∫_{S¹}dω ∫_{ω⊥}dL ∬|u(L+tω)−u(L+τω)|^p|t−τ|^{−1−ps} dt dτ,
/// with midpoint nodes in angle and offset and a 1D seminorm per chord.
pub fn directional_decomposition_check(
    u: &GridFunction,
    params: &FracParams,
    angular_nodes: usize,
    quad: &QuadratureSpec,
) -> Result<DecompositionCheck> {
    if params.dim != 2 || u.mesh().dim() != 2 {
        return domain("line decomposition is implemented for N = 2");
    }
    if angular_nodes < 8 || angular_nodes % 2 != 0 {
        return domain("angular nodes must be even and at least 8");
    }
    let dom = u.domain().clone();
    let direct = gagliardo_seminorm(u, params, quad)?;
    let src = u
        .source()
        .ok_or_else(|| FracError::Precondition("line decomposition needs the closed form of u".into()))?
        .clone();
    let (lo, hi) = dom
        .bounding_box()
        .ok_or_else(|| FracError::Unsupported("line decomposition needs a bounded domain".into()))?;
    let c = [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])];
    let reach = 0.5 * ((hi[0] - lo[0]).powi(2) + (hi[1] - lo[1]).powi(2)).sqrt();
    let lines = quad.resolution;
    let dl = 2.0 * reach / lines as f64;
    // ω and −ω carry the same line set: half the circle with the ½ absorbed
    let angles = angular_nodes / 2;
    let dth = PI / angles as f64;
    let line_res = (quad.resolution / 2).max(32);
    let line_quad = QuadratureSpec {
        resolution: line_res,
        ..quad.clone()
    };
    let p1 = params.with_dim(1);
    let jobs: Vec<(usize, usize)> = (0..angles).flat_map(|a| (0..lines).map(move |l| (a, l))).collect();
    let vals: Vec<Result<(f64, f64)>> = jobs
        .par_iter()
        .map(|&(a, l)| {
            let th = (a as f64 + 0.5) * dth;
            let w = [th.cos(), th.sin()];
            let off = -reach + (l as f64 + 0.5) * dl;
            let base = [c[0] - off * w[1], c[1] + off * w[0]];
            let Some((t0, t1)) = chord(&dom, &base, &w)? else {
                return Ok((0.0, 0.0));
            };
            let s = src.clone();
            let f: FieldFn = Arc::new(move |t: &[f64]| s(&[base[0] + t[0] * w[0], base[1] + t[0] * w[1]]));
            let g = GridFunction::from_fn(Arc::new(Mesh::new(&Domain::interval(t0, t1), line_res)?), f)?;
            if g.is_zero() {
                return Ok((0.0, 0.0));
            }
            let e = gagliardo_seminorm(&g, &p1, &line_quad)?;
            Ok((e.value, e.error))
        })
        .collect();
    let vals: Vec<(f64, f64)> = vals.into_iter().collect::<Result<_>>()?;
    let averaged = pairwise_sum(&vals.iter().map(|v| v.0).collect::<Vec<_>>()) * dth * dl;
    let averaged_error = pairwise_sum(&vals.iter().map(|v| v.1).collect::<Vec<_>>()) * dth * dl;
    let relative_gap = if direct.value == 0.0 && averaged == 0.0 {
        0.0
    } else {
        (direct.value - averaged).abs() / direct.value.abs().max(averaged.abs())
    };
    Ok(DecompositionCheck {
        direct: direct.value,
        direct_error: direct.error,
        averaged,
        averaged_error,
        relative_gap,
        lines,
        angles: angular_nodes,
    })
}

/// The constant chain from a 1D key constant to a σ lower bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SigmaBound {
    pub c_1d: f64,
    /// c_1d^{1/(p+q(ps−1))}
    pub big_c: f64,
    pub q: f64,
    /// p + q(ps−1)
    pub sup_exponent: f64,
    /// p²s(N−1)/(N−ps)
    pub chain_exponent: f64,
    /// |S^{N−1}| / (2·C^{chain_exponent})
    pub sigma_bound: f64,
    /// D_{1,p,s}·π^{(N−1)/2}Γ((1+ps)/2)/Γ((N+ps)/2)
    pub prefactor_lines: f64,
    /// D_{N,p,s}
    pub prefactor_direct: f64,
}

/// Relative mismatch allowed between the two prefactor evaluations.
pub const PREFACTOR_RTOL: f64 = 1e-8;

pub fn assemble_sigma_bound(c_1d: f64, params: &FracParams) -> Result<SigmaBound> {
    params.require_hsm()?;
    if !(c_1d > 0.0 && c_1d.is_finite()) {
        return domain(format!("c_1d must be positive, got {c_1d}"));
    }
    let (n, p, s, ps) = (params.dim as f64, params.p, params.s, params.ps());
    let q = params.q().expect("ps < N checked");
    let sup_exponent = p + q * (ps - 1.0);
    let chain_exponent = p * p * s * (n - 1.0) / (n - ps);
    let big_c = c_1d.powf(1.0 / sup_exponent);
    let sigma_bound = sphere_surface(params.dim)? / (2.0 * big_c.powf(chain_exponent));
    let prefactor_lines = hardy_constant(&params.with_dim(1))? * PI.powf((n - 1.0) / 2.0) * gamma_fn((1.0 + ps) / 2.0)?
        / gamma_fn((n + ps) / 2.0)?;
    let prefactor_direct = hardy_constant(params)?;
    let mismatch = (prefactor_lines - prefactor_direct).abs() / prefactor_direct;
    if mismatch > PREFACTOR_RTOL {
        return Err(FracError::Precondition(format!(
            "Hardy prefactor identity fails: {prefactor_lines} vs {prefactor_direct} (rel {mismatch:e})"
        )));
    }
    Ok(SigmaBound {
        c_1d,
        big_c,
        q,
        sup_exponent,
        chain_exponent,
        sigma_bound,
        prefactor_lines,
        prefactor_direct,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p2(dim: usize, s: f64) -> FracParams {
        FracParams::new(dim, 2.0, s).unwrap()
    }

    #[test]
    fn sigma_bound_bookkeeping() {
        let pr = p2(2, 0.75);
        let b = assemble_sigma_bound(3.0, &pr).unwrap();
        assert_eq!(b.q, 8.0);
        assert!((b.sup_exponent - 6.0).abs() < 1e-14 && (b.chain_exponent - 6.0).abs() < 1e-14);
        assert!((b.sigma_bound - PI / 3.0).abs() < 1e-12);
        assert!(assemble_sigma_bound(4.0, &pr).unwrap().sigma_bound < b.sigma_bound);
        assert!(assemble_sigma_bound(0.0, &pr).is_err());
        for s in [0.6, 0.8, 0.95] {
            for dim in [2, 3] {
                assert!(assemble_sigma_bound(1.0, &p2(dim, s)).is_ok());
            }
        }
    }

    #[test]
    fn zero_function_is_rejected() {
        let u = crate::quadrature::sample(&TrialFunction::Constant { value: 0.0 }, &Domain::unit_ball(2), 16).unwrap();
        let r = hsm_report(&u, &p2(2, 0.75), HardyWeight::BallProxy, &QuadratureSpec::with_resolution(16));
        assert!(matches!(r, Err(FracError::ZeroFunction(_))));
    }

    fn gaussian() -> TrialFunction {
        TrialFunction::Gaussian {
            center: vec![0.0, 0.0],
            width: 0.3,
            support_radius: Some(0.9),
        }
    }

    #[test]
    fn hsm_gaussian_positive_and_dilation() {
        let pr = p2(2, 0.75);
        let quad = QuadratureSpec::with_resolution(32);
        let u = crate::quadrature::sample(&gaussian(), &Domain::unit_ball(2), 32).unwrap();
        let r = hsm_report(&u, &pr, HardyWeight::BallProxy, &quad).unwrap();
        assert!(r.sigma_emp > 0.0 && r.hardy_holds, "{r:?}");
        let big = Domain::Ball {
            center: vec![0.0, 0.0],
            radius: 2.0,
        };
        let scaled = TrialFunction::Gaussian {
            center: vec![0.0, 0.0],
            width: 0.6,
            support_radius: Some(1.8),
        };
        let v = crate::quadrature::sample(&scaled, &big, 32).unwrap();
        let r2 = hsm_report(&v, &pr, HardyWeight::BallProxy, &quad).unwrap();
        assert!((r2.sigma_emp - r.sigma_emp).abs() <= 2.0 * r.sigma_error.max(1e-9 * r.sigma_emp), "{r2:?}");
    }

    #[test]
    fn minimize_single_evaluation_and_monotone() {
        let pr = p2(2, 0.75);
        let quad = QuadratureSpec::with_resolution(16);
        let dom = Domain::unit_ball(2);
        let one = SearchBudget {
            iterations: 0,
            restarts: 0,
            ..SearchBudget::default()
        };
        let s0 = minimize_sigma(BumpFamily::Boundary, &dom, &pr, HardyWeight::BallProxy, &quad, &one).unwrap();
        let direct = family_sigma(BumpFamily::Boundary, &dom, &pr, HardyWeight::BallProxy, &quad, &[0.0; 3]).unwrap();
        assert_eq!(s0.sigma, direct);
        let few = SearchBudget {
            iterations: 10,
            restarts: 1,
            ..SearchBudget::default()
        };
        let s1 = minimize_sigma(BumpFamily::Boundary, &dom, &pr, HardyWeight::BallProxy, &quad, &few).unwrap();
        assert!(s1.sigma <= s0.sigma && s1.sigma > 0.0);
    }

    #[test]
    fn reflection_ratio_bounds_1d() {
        let pr = FracParams::new(1, 2.0, 0.4).unwrap();
        let dom = Domain::upper_half_space(1);
        let quad = QuadratureSpec::with_resolution(128);
        for c in [0.2, 0.5] {
            let t = TrialFunction::CompactBump {
                center: vec![c],
                radius: 0.15,
                power: 2.0,
            };
            let u = sample_on(&dom, &t, 128).unwrap();
            let r = sobolev_reflection_ratio(&u, &pr, &quad).unwrap();
            assert!(r.ratio >= 2.0 - 1e-9 && r.ratio <= 4.0 + 1e-3, "{r:?}");
            assert!(r.identity_gap < 0.01, "{r:?}");
        }
    }

    #[test]
    fn reflection_identity_2d() {
        let pr = p2(2, 0.6);
        let dom = Domain::upper_half_space(2);
        let t = TrialFunction::CompactBump {
            center: vec![0.5, 0.3],
            radius: 0.25,
            power: 2.0,
        };
        let u = sample_on(&dom, &t, 32).unwrap();
        let r = sobolev_reflection_ratio(&u, &pr, &QuadratureSpec::with_resolution(32)).unwrap();
        assert!(r.ratio > 2.0 && r.ratio < 4.0, "{r:?}");
        assert!(r.identity_gap < 0.01, "{r:?}");
    }

    #[test]
    fn decomposition_radial_and_rotated() {
        let pr = p2(2, 0.75);
        let dom = Domain::unit_ball(2);
        let quad = QuadratureSpec::with_resolution(64);
        let t = TrialFunction::CompactBump {
            center: vec![0.2, -0.1],
            radius: 0.5,
            power: 2.0,
        };
        let u = crate::quadrature::sample(&t, &dom, 64).unwrap();
        let r = directional_decomposition_check(&u, &pr, 128, &quad).unwrap();
        assert!(r.relative_gap < 0.02, "{r:?}");
        let rot = TrialFunction::CompactBump {
            center: vec![0.1, 0.2],
            radius: 0.5,
            power: 2.0,
        };
        let v = crate::quadrature::sample(&rot, &dom, 64).unwrap();
        let r2 = directional_decomposition_check(&v, &pr, 128, &quad).unwrap();
        assert!((r2.averaged - r.averaged).abs() < 0.01 * r.averaged, "{r2:?} vs {r:?}");
        let zero = crate::quadrature::sample(&TrialFunction::Constant { value: 0.0 }, &dom, 16).unwrap();
        let z = directional_decomposition_check(&zero, &pr, 16, &QuadratureSpec::with_resolution(16)).unwrap();
        assert_eq!((z.direct, z.averaged), (0.0, 0.0));
    }

    #[test]
    fn hardy_suite_small() {
        let pr = FracParams::new(1, 2.0, 0.75).unwrap();
        let dom = Domain::IntervalUnion {
            intervals: vec![[-1.0, 0.0], [0.5, 2.0]],
        };
        let quad = QuadratureSpec::with_resolution(64);
        let a = hardy_suite(&dom, &pr, HardyWeight::Pseudodistance, &quad, 8, 5).unwrap();
        assert!(a.iter().all(|t| t.check.holds && t.check.remainder > 0.0));
        assert_eq!(a, hardy_suite(&dom, &pr, HardyWeight::Pseudodistance, &quad, 8, 5).unwrap());
    }
}
