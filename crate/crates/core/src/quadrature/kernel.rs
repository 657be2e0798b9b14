//! Discrete singular double sums at a single resolution.
//!
//! The discrete value of ∬_{Ω×Ω} |u(x)−u(y)|^p ρ(x)ρ(y) |x−y|^{−N−ps} has two
//! parts: the pair sum over distinct grid cells (diagonal cell excluded), and
//! the exterior tail 2∫_G |u(x)|^p ρ(x) ∫_{Ω∖G} ρ(y)K(x,y) dy dx, where G is
//! the union of grid cells. The inner tail integral is evaluated as
//! κ(x) − Σ_j ∫_{C_j} ρK with κ(x) the integral over Ω minus the own cell.

use std::f64::consts::PI;

use rayon::prelude::*;

use super::grid::{FieldFn, Mesh};
use crate::error::{FracError, Result};
use crate::geometry::{graded_panels, Domain};
use crate::integrate::{adaptive, adaptive_to_infinity, gauss_legendre, gauss_legendre_on, pairwise_sum, AdaptiveOpts};
use crate::special::sphere_moment;

/// How the second argument of the kernel is placed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Pairing {
    /// K(x, y) = |x − y|^{−N−ps}
    Direct,
    /// K(x, ȳ) with ȳ the mirror image of y in the face `lo` of `axis`.
    Reflected { axis: usize },
}

/// |Δ|^{−e} and ∫_{Δ+[−½,½]^N} |z|^{−e} dz on a table of nonnegative integer offsets.
pub(crate) struct KernelTables {
    stride: [usize; 3],
    kern: Vec<f64>,
    cell: Vec<f64>,
}

impl KernelTables {
    pub(crate) fn new(dim: usize, ext: [usize; 3], exponent: f64) -> Self {
        let stride = [ext[1] * ext[2], ext[2], 1];
        let total = ext[0] * ext[1] * ext[2];
        let rules: Vec<(Vec<f64>, Vec<f64>)> = [12usize, 6, 4].iter().map(|&n| gauss_legendre(n)).collect();
        let entries: Vec<(f64, f64)> = (0..total)
            .into_par_iter()
            .map(|flat| {
                let d = [flat / stride[0], (flat / stride[1]) % ext[1], flat % ext[2]];
                let r2: f64 = (0..dim).map(|k| (d[k] * d[k]) as f64).sum();
                if r2 == 0.0 {
                    return (0.0, 0.0);
                }
                let kern = r2.powf(-0.5 * exponent);
                let far = d.iter().take(dim).copied().max().unwrap_or(0);
                let centre = [d[0] as f64, d[1] as f64, d[2] as f64];
                let acc = if far <= 1 {
                    subdivided_cell(dim, centre, 0.5, exponent, &rules[if dim == 3 { 1 } else { 0 }], 0)
                } else {
                    let rule = match far {
                        2..=3 => &rules[0],
                        4..=8 => &rules[1],
                        _ => &rules[2],
                    };
                    tensor_cell(dim, centre, 0.5, exponent, rule)
                };
                (kern, acc)
            })
            .collect();
        let (kern, cell) = entries.into_iter().unzip();
        Self { stride, kern, cell }
    }

    #[inline]
    fn index(&self, d: [usize; 3]) -> usize {
        d[0] * self.stride[0] + d[1] * self.stride[1] + d[2]
    }
}

/// Tensor Gauss rule for ∫ |z|^{−e} over the cube centre ± half.
fn tensor_cell(dim: usize, centre: [f64; 3], half: f64, exponent: f64, rule: &(Vec<f64>, Vec<f64>)) -> f64 {
    let (nodes, weights) = rule;
    let m = nodes.len();
    let mut acc = 0.0;
    let mut idx = [0usize; 3];
    for q in 0..m.pow(dim as u32) {
        let mut rem = q;
        for slot in idx.iter_mut().take(dim) {
            *slot = rem % m;
            rem /= m;
        }
        let mut z2 = 0.0;
        let mut w = 1.0;
        for k in 0..dim {
            let z = centre[k] + half * nodes[idx[k]];
            z2 += z * z;
            w *= half * weights[idx[k]];
        }
        acc += w * z2.powf(-0.5 * exponent);
    }
    acc
}

/// Same integral with bisection until the cube is small relative to its distance from 0.
fn subdivided_cell(dim: usize, centre: [f64; 3], half: f64, exponent: f64, rule: &(Vec<f64>, Vec<f64>), depth: u32) -> f64 {
    let gap2: f64 = (0..dim).map(|k| (centre[k].abs() - half).max(0.0).powi(2)).sum();
    if depth >= 5 || gap2 >= (4.0 * half).powi(2) {
        return tensor_cell(dim, centre, half, exponent, rule);
    }
    let q = 0.5 * half;
    (0..1usize << dim)
        .map(|mask| {
            let mut c = centre;
            for (k, ck) in c.iter_mut().enumerate().take(dim) {
                *ck += if mask >> k & 1 == 1 { q } else { -q };
            }
            subdivided_cell(dim, c, q, exponent, rule, depth + 1)
        })
        .sum()
}

#[inline]
fn pow_p(d: f64, p: f64) -> f64 {
    if p == 2.0 {
        d * d
    } else {
        d.powf(p)
    }
}

#[inline]
fn offset(a: [u32; 3], b: [u32; 3], pairing: Pairing) -> [usize; 3] {
    let mut d = [0usize; 3];
    for k in 0..3 {
        d[k] = (a[k] as i64 - b[k] as i64).unsigned_abs() as usize;
    }
    if let Pairing::Reflected { axis } = pairing {
        d[axis] = a[axis] as usize + b[axis] as usize + 1;
    }
    d
}

/// ∫_{S^{N−1}} ‖ω‖_∞^α dω, i.e. the cube-exit moment of a unit-width cell
/// scaled by 2^{−α}.
fn cube_moment(dim: usize, alpha: f64) -> f64 {
    let (x, w) = gauss_legendre(24);
    match dim {
        1 => 2.0,
        // ω = (1, a)/√(1+a²) on one face, dθ = da/(1+a²)
        2 => 4.0 * x.iter().zip(&w).map(|(a, wa)| wa * (1.0 + a * a).powf(-0.5 * (alpha + 2.0))).sum::<f64>(),
        _ => {
            let mut acc = 0.0;
            for (a, wa) in x.iter().zip(&w) {
                for (b, wb) in x.iter().zip(&w) {
                    acc += wa * wb * (1.0 + a * a + b * b).powf(-0.5 * (alpha + 3.0));
                }
            }
            6.0 * acc
        }
    }
}

/// Pieces of a one-dimensional domain as (a, b) with possibly infinite ends.
fn line_pieces(domain: &Domain) -> Vec<(f64, f64)> {
    match domain {
        Domain::IntervalUnion { intervals } => intervals.iter().map(|iv| (iv[0], iv[1])).collect(),
        Domain::HalfSpace { normal, offset } => {
            if normal[0] > 0.0 {
                vec![(offset / normal[0], f64::INFINITY)]
            } else {
                vec![(f64::NEG_INFINITY, offset / normal[0])]
            }
        }
        Domain::Ball { center, radius } => vec![(center[0] - radius, center[0] + radius)],
        Domain::ConvexPolygon { .. } => Vec::new(),
    }
}

/// Segments of Ω∖(x − h/2, x + h/2) in one dimension.
fn line_segments_outside_cell(domain: &Domain, x: f64, h: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for (a, b) in line_pieces(domain) {
        let left = (a, b.min(x - 0.5 * h));
        let right = (a.max(x + 0.5 * h), b);
        for (lo, hi) in [left, right] {
            if hi > lo {
                out.push((lo, hi));
            }
        }
    }
    out
}

/// ∫_{Ω∖C(x)} |x − y|^{−N−ps} dy.
pub(crate) fn kappa(domain: &Domain, x: &[f64], h: f64, ps: f64, angular: usize) -> Result<f64> {
    let dim = domain.dim();
    if dim == 1 {
        let total = line_segments_outside_cell(domain, x[0], h)
            .into_iter()
            .map(|(lo, hi)| {
                let d1 = (x[0] - lo).abs().min((x[0] - hi).abs());
                let d2 = (x[0] - lo).abs().max((x[0] - hi).abs());
                (d1.powf(-ps) - d2.powf(-ps)) / ps
            })
            .sum();
        return Ok(total);
    }
    let half = 0.5 * h;
    let cell_inside = (0..1usize << dim).all(|mask| {
        let corner: Vec<f64> = (0..dim).map(|k| x[k] + if mask >> k & 1 == 1 { half } else { -half }).collect();
        domain.contains_closed(&corner)
    });
    if cell_inside {
        let inner = cube_moment(dim, ps) * half.powf(-ps);
        let outer = domain.one_sided_exit_moment(x, ps, angular)?;
        return Ok((inner - outer) / ps);
    }
    // the own cell sticks out of the domain: integrate the clipped radial range
    match dim {
        2 => {
            let corners: Vec<f64> = (0..4).map(|k| PI / 4.0 + k as f64 * PI / 2.0).collect();
            let mut kinks = corners;
            kinks.extend(domain.one_sided_kinks(x));
            let total = graded_panels(0.0, 2.0 * PI, 256, &kinks)
                .windows(2)
                .flat_map(|w| gauss_legendre_on(8, w[0], w[1]))
                .map(|(t, wt)| {
                    let (s, c) = t.sin_cos();
                    let rc = half / c.abs().max(s.abs());
                    let ro = domain.ray_exit(x, &[c, s]);
                    if ro > rc {
                        wt * (rc.powf(-ps) - ro.powf(-ps)) / ps
                    } else {
                        0.0
                    }
                })
                .sum();
            Ok(total)
        }
        _ => {
            let (zs, wz) = gauss_legendre(96);
            let n_phi = 192;
            let mut total = 0.0;
            for (z, w) in zs.iter().zip(&wz) {
                let r = (1.0 - z * z).max(0.0).sqrt();
                for k in 0..n_phi {
                    let phi = 2.0 * PI * k as f64 / n_phi as f64;
                    let omega = [r * phi.cos(), r * phi.sin(), *z];
                    let inf = omega.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
                    let rc = half / inf;
                    let ro = domain.ray_exit(x, &omega);
                    if ro > rc {
                        total += w * (2.0 * PI / n_phi as f64) * (rc.powf(-ps) - ro.powf(-ps)) / ps;
                    }
                }
            }
            Ok(total)
        }
    }
}

/// ∫_{Ω∖C(x)} ρ(y) |x − y|^{−N−ps} dy for a closed-form factor ρ.
pub(crate) fn kappa_weighted(domain: &Domain, x: &[f64], h: f64, ps: f64, rho: &FieldFn) -> Result<f64> {
    let opts = AdaptiveOpts {
        rel_tol: 1e-10,
        abs_tol: 0.0,
        max_segments: 400,
    };
    match domain.dim() {
        1 => {
            let mut total = 0.0;
            for (lo, hi) in line_segments_outside_cell(domain, x[0], h) {
                let f = |y: f64| rho(&[y]) * (y - x[0]).abs().powf(-1.0 - ps);
                total += if hi.is_infinite() {
                    adaptive_to_infinity(f, lo, &[], opts).value
                } else if lo.is_infinite() {
                    adaptive_to_infinity(|t: f64| f(-t), -hi, &[], opts).value
                } else {
                    adaptive(f, lo, hi, &[], opts).value
                };
            }
            Ok(total)
        }
        2 => {
            let half = 0.5 * h;
            let mut kinks: Vec<f64> = (0..4).map(|k| PI / 4.0 + k as f64 * PI / 2.0).collect();
            kinks.extend(domain.one_sided_kinks(x));
            let total = graded_panels(0.0, 2.0 * PI, 32, &kinks)
                .windows(2)
                .flat_map(|w| gauss_legendre_on(8, w[0], w[1]))
                .map(|(t, wt)| {
                    let (s, c) = t.sin_cos();
                    let rc = half / c.abs().max(s.abs());
                    let ro = domain.ray_exit(x, &[c, s]);
                    if ro <= rc {
                        return 0.0;
                    }
                    let f = |r: f64| rho(&[x[0] + r * c, x[1] + r * s]) * r.powf(-1.0 - ps);
                    let radial = if ro.is_infinite() {
                        adaptive_to_infinity(f, rc, &[], opts).value
                    } else {
                        adaptive(f, rc, ro, &[], opts).value
                    };
                    wt * radial
                })
                .sum();
            Ok(total)
        }
        n => Err(FracError::Unsupported(format!("weighted exterior tails in dimension {n}"))),
    }
}

/// Inputs of one discrete double integral.
pub(crate) struct PairProblem<'a> {
    pub mesh: &'a Mesh,
    pub values: &'a [f64],
    pub p: f64,
    pub ps: f64,
    /// Node values of the factor ρ and its closed form (needed for tails).
    pub rho: Option<(&'a [f64], &'a FieldFn)>,
    pub pairing: Pairing,
    pub angular: usize,
}

/// Value of the discrete double integral with the diagonal cells excluded.
///
/// A grid covering a bounded Ω replaces Ω by its kept cells. A support box
/// inside a larger Ω assumes u = 0 outside the box and adds the exterior tail
/// 2 Σ_i |u_i|^p ρ_i ∫_{Ω∖box} ρ K(x_i, ·).
pub(crate) fn double_integral(prob: &PairProblem<'_>) -> Result<f64> {
    let mesh = prob.mesh;
    let dim = mesh.dim();
    let n = mesh.len();
    let h = mesh.h();
    let exponent = dim as f64 + prob.ps;
    let counts = mesh.counts();
    let mut ext = counts;
    if let Pairing::Reflected { axis } = prob.pairing {
        ext[axis] = 2 * counts[axis] + 1;
    }
    let tables = KernelTables::new(dim, ext, exponent);
    let cells = mesh.cells();
    let u = prob.values;
    let rho_vals = prob.rho.map(|(v, _)| v);
    let pairing = prob.pairing;

    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let ci = cells[i];
            let ui = u[i];
            let mut acc = 0.0;
            for j in i + 1..n {
                let diff = (ui - u[j]).abs();
                if diff == 0.0 {
                    continue;
                }
                let k = tables.kern[tables.index(offset(ci, cells[j], pairing))];
                let w = match rho_vals {
                    Some(r) => r[i] * r[j],
                    None => 1.0,
                };
                acc += pow_p(diff, prob.p) * k * w;
            }
            acc
        })
        .collect();
    let pairs = 2.0 * pairwise_sum(&rows) * h.powf(2.0 * dim as f64 - exponent);

    let reflected_kappa = |x: &[f64]| -> Result<f64> {
        let Domain::HalfSpace { normal, offset } = mesh.domain() else {
            return Err(FracError::Precondition("reflection needs a half-space".into()));
        };
        let height: f64 = normal.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() - offset;
        Ok(height.powf(-prob.ps) * sphere_moment(dim, prob.ps)? / (2.0 * prob.ps))
    };

    if pairing == Pairing::Direct && mesh.covers_domain() {
        return Ok(pairs);
    }
    let tails: Vec<Result<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            if u[i] == 0.0 {
                return Ok(0.0);
            }
            let x = mesh.point(i);
            let ci = cells[i];
            let kap = match (pairing, prob.rho) {
                (Pairing::Direct, None) => kappa(mesh.domain(), x, h, prob.ps, prob.angular)?,
                (Pairing::Direct, Some((_, f))) => kappa_weighted(mesh.domain(), x, h, prob.ps, f)?,
                (Pairing::Reflected { .. }, None) => reflected_kappa(x)?,
                (Pairing::Reflected { .. }, Some(_)) => {
                    return Err(FracError::Unsupported("weighted reflected kernel".into()));
                }
            };
            let mut covered = 0.0;
            for j in 0..n {
                if j == i && pairing == Pairing::Direct {
                    continue;
                }
                let c = tables.cell[tables.index(offset(ci, cells[j], pairing))];
                covered += match rho_vals {
                    Some(r) => c * r[j],
                    None => c,
                };
            }
            let tail = kap - covered * h.powf(-prob.ps);
            let ri = rho_vals.map_or(1.0, |r| r[i]);
            Ok(pow_p(u[i].abs(), prob.p) * ri * tail)
        })
        .collect();
    let tails: Vec<f64> = tails.into_iter().collect::<Result<_>>()?;
    let tail = 2.0 * pairwise_sum(&tails) * mesh.cell_volume();
    Ok(pairs + tail)
}

/// ∫_{[−1,1]^N} |ĝ·ζ|^p |ζ|^{−N−ps} Π(1 − |ζ_k|) dζ for a unit vector ĝ (N ≤ 2).
fn self_cell_factor(dim: usize, p: f64, ps: f64, ghat: [f64; 2]) -> f64 {
    let sigma = p - ps;
    if dim == 1 {
        return 2.0 / (sigma * (sigma + 1.0));
    }
    let phi = ghat[1].atan2(ghat[0]);
    let mut kinks: Vec<f64> = (1..8).map(|k| k as f64 * PI / 4.0).collect();
    for shift in [0.5 * PI, 1.5 * PI] {
        kinks.push((phi + shift).rem_euclid(2.0 * PI));
    }
    graded_panels(0.0, 2.0 * PI, 16, &kinks)
        .windows(2)
        .flat_map(|w| gauss_legendre_on(8, w[0], w[1]))
        .map(|(t, wt)| {
            let (s, c) = t.sin_cos();
            let (ac, as_) = (c.abs(), s.abs());
            let l = 1.0 / ac.max(as_);
            let radial = l.powf(sigma) / sigma - (ac + as_) * l.powf(sigma + 1.0) / (sigma + 1.0)
                + ac * as_ * l.powf(sigma + 2.0) / (sigma + 2.0);
            wt * (t - phi).cos().abs().powf(p) * radial
        })
        .sum()
}

/// Analytic diagonal-cell contribution Σ_i |∇u_i|^p h^{N+p−ps} A(∇u_i/|∇u_i|)
/// with gradients from central differences (zero outside the grid).
pub(crate) fn self_cell_term(mesh: &Mesh, values: &[f64], p: f64, ps: f64) -> Result<f64> {
    let dim = mesh.dim();
    if dim > 2 {
        return Err(FracError::Unsupported("local refinement beyond two dimensions".into()));
    }
    let h = mesh.h();
    let terms: Vec<f64> = (0..mesh.len())
        .into_par_iter()
        .map(|i| {
            let c = mesh.cell(i);
            let mut g = [0.0; 2];
            for k in 0..dim {
                let mut up = [c[0] as i64, c[1] as i64, c[2] as i64];
                let mut dn = up;
                up[k] += 1;
                dn[k] -= 1;
                let vu = mesh.node_at(up).map_or(0.0, |j| values[j]);
                let vd = mesh.node_at(dn).map_or(0.0, |j| values[j]);
                g[k] = (vu - vd) / (2.0 * h);
            }
            let norm = (g[0] * g[0] + g[1] * g[1]).sqrt();
            if norm == 0.0 {
                return 0.0;
            }
            let ghat = [g[0] / norm, g[1] / norm];
            norm.powf(p) * self_cell_factor(dim, p, ps, ghat)
        })
        .collect();
    Ok(pairwise_sum(&terms) * h.powf(dim as f64 + p - ps))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_moment_values() {
        // α = 0 gives the surface measure
        assert!((cube_moment(2, 0.0) - 2.0 * PI).abs() < 1e-12);
        assert!((cube_moment(3, 0.0) - 4.0 * PI).abs() < 1e-9);
        // direct θ quadrature of max(|cos|,|sin|)^1.5
        let r = adaptive(
            |t: f64| t.cos().abs().max(t.sin().abs()).powf(1.5),
            0.0,
            2.0 * PI,
            &[PI / 4.0, 3.0 * PI / 4.0, 5.0 * PI / 4.0, 7.0 * PI / 4.0],
            AdaptiveOpts::rel(1e-13),
        );
        assert!((cube_moment(2, 1.5) - r.value).abs() < 1e-11);
    }

    #[test]
    fn cell_table_matches_direct_integral() {
        let t = KernelTables::new(2, [5, 5, 1], 3.5);
        let exact = adaptive(
            |a: f64| adaptive(|b: f64| (a * a + b * b).powf(-1.75), -0.5, 0.5, &[], AdaptiveOpts::rel(1e-12)).value,
            0.5,
            1.5,
            &[],
            AdaptiveOpts::rel(1e-12),
        );
        assert!((t.cell[t.index([1, 0, 0])] - exact.value).abs() < 1e-9);
        assert!((t.kern[t.index([3, 4, 0])] - 5f64.powf(-3.5)).abs() < 1e-15);
    }

    #[test]
    fn kappa_halfline_closed_form() {
        let d = Domain::upper_half_space(1);
        let (x, h, ps) = (0.3, 0.1, 1.5);
        let k = kappa(&d, &[x], h, ps, 64).unwrap();
        let exact = (2.0 * (0.05f64).powf(-ps) - x.powf(-ps)) / ps;
        assert!((k - exact).abs() < 1e-12 * exact);
    }

    #[test]
    fn kappa_weighted_reduces_to_unweighted() {
        let one: FieldFn = std::sync::Arc::new(|_: &[f64]| 1.0);
        for d in [Domain::unit_ball(2), Domain::upper_half_space(2)] {
            let x = [0.1, 0.4];
            let a = kappa(&d, &x, 0.05, 1.5, 256).unwrap();
            let b = kappa_weighted(&d, &x, 0.05, 1.5, &one).unwrap();
            assert!(((a - b) / a).abs() < 1e-8, "{a} {b}");
        }
    }

    #[test]
    fn self_cell_factor_isotropic_average() {
        // 1D closed form and 2D positivity and symmetry
        assert!((self_cell_factor(1, 2.0, 1.5, [1.0, 0.0]) - 2.0 / (0.5 * 1.5)).abs() < 1e-14);
        let a = self_cell_factor(2, 2.0, 1.5, [1.0, 0.0]);
        let b = self_cell_factor(2, 2.0, 1.5, [0.0, 1.0]);
        assert!(a > 0.0 && (a - b).abs() < 1e-10);
    }
}
