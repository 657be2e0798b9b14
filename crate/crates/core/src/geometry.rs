//! Domains with exact ray-exit queries, directional exit distances and the
//! angular pseudodistance m_α.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, FracError, Result};
use crate::integrate::gauss_legendre_on;
use crate::special::sphere_moment;

/// Default number of angular nodes on S^1.
pub const DEFAULT_ANGULAR_NODES_2D: usize = 256;
/// Default angular resolution on S^2 (64 latitude × 128 longitude nodes).
pub const DEFAULT_ANGULAR_NODES_3D: usize = 128;

const GRADING_LEVELS: i32 = 10;
const GRADING_RATIO: f64 = 0.25;

/// An open, nonempty, proper subset of R^N.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Domain {
    /// {x : n·x > offset} with |n| = 1.
    HalfSpace { normal: Vec<f64>, offset: f64 },
    Ball { center: Vec<f64>, radius: f64 },
    /// Sorted, pairwise disjoint open intervals (N = 1).
    IntervalUnion { intervals: Vec<[f64; 2]> },
    /// Counterclockwise, strictly convex vertex list (N = 2).
    ConvexPolygon { vertices: Vec<[f64; 2]> },
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

impl Domain {
    /// The upper half-space {x_N > 0} in R^N.
    pub fn upper_half_space(dim: usize) -> Self {
        let mut normal = vec![0.0; dim];
        normal[dim - 1] = 1.0;
        Domain::HalfSpace { normal, offset: 0.0 }
    }

    pub fn unit_ball(dim: usize) -> Self {
        Domain::Ball {
            center: vec![0.0; dim],
            radius: 1.0,
        }
    }

    pub fn interval(a: f64, b: f64) -> Self {
        Domain::IntervalUnion { intervals: vec![[a, b]] }
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::HalfSpace { normal, .. } => normal.len(),
            Domain::Ball { center, .. } => center.len(),
            Domain::IntervalUnion { .. } => 1,
            Domain::ConvexPolygon { .. } => 2,
        }
    }

    pub fn is_bounded(&self) -> bool {
        !matches!(self, Domain::HalfSpace { .. })
    }

    /// Checks the structural invariants of the variant.
    pub fn validate(&self) -> Result<()> {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match self {
            Domain::HalfSpace { normal, offset } => {
                if normal.is_empty() || !finite(normal) || !offset.is_finite() {
                    return domain("half-space needs a finite, nonempty normal");
                }
                if (norm(normal) - 1.0).abs() > 1e-12 {
                    return domain("half-space normal must be a unit vector");
                }
            }
            Domain::Ball { center, radius } => {
                if center.is_empty() || !finite(center) {
                    return domain("ball center must be finite and nonempty");
                }
                if !(radius.is_finite() && *radius > 0.0) {
                    return domain("ball radius must be positive");
                }
            }
            Domain::IntervalUnion { intervals } => {
                if intervals.is_empty() {
                    return domain("interval union must contain at least one interval");
                }
                for (k, iv) in intervals.iter().enumerate() {
                    if !finite(iv) || iv[1] <= iv[0] {
                        return domain("intervals must be finite with positive length");
                    }
                    if k > 0 && intervals[k - 1][1] > iv[0] {
                        return domain("intervals must be sorted and pairwise disjoint");
                    }
                }
            }
            Domain::ConvexPolygon { vertices } => {
                let n = vertices.len();
                if n < 3 {
                    return domain("polygon needs at least three vertices");
                }
                if !vertices.iter().all(|v| finite(v)) {
                    return domain("polygon vertices must be finite");
                }
                let mut turn = 0.0;
                for k in 0..n {
                    let c = cross(vertices[k], vertices[(k + 1) % n], vertices[(k + 2) % n]);
                    if c <= 0.0 {
                        return domain("polygon must be counterclockwise and strictly convex");
                    }
                    let e0 = [vertices[(k + 1) % n][0] - vertices[k][0], vertices[(k + 1) % n][1] - vertices[k][1]];
                    let e1 = [
                        vertices[(k + 2) % n][0] - vertices[(k + 1) % n][0],
                        vertices[(k + 2) % n][1] - vertices[(k + 1) % n][1],
                    ];
                    turn += (e0[0] * e1[1] - e0[1] * e1[0]).atan2(e0[0] * e1[0] + e0[1] * e1[1]);
                }
                // a single counterclockwise winding
                if (turn - 2.0 * PI).abs() > 1e-9 {
                    return domain("polygon must wind exactly once");
                }
            }
        }
        Ok(())
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return domain(format!("point has dimension {}, domain has {}", x.len(), self.dim()));
        }
        if !x.iter().all(|v| v.is_finite()) {
            return domain("point must be finite");
        }
        Ok(())
    }

    /// Outward unit normals and offsets h_e = n_e·v_e of the polygon edges.
    fn polygon_edges(vertices: &[[f64; 2]]) -> Vec<([f64; 2], f64)> {
        let n = vertices.len();
        (0..n)
            .map(|k| {
                let a = vertices[k];
                let b = vertices[(k + 1) % n];
                let (ex, ey) = (b[0] - a[0], b[1] - a[1]);
                let len = ex.hypot(ey);
                let nrm = [ey / len, -ex / len];
                (nrm, nrm[0] * a[0] + nrm[1] * a[1])
            })
            .collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        if x.len() != self.dim() {
            return false;
        }
        match self {
            Domain::HalfSpace { normal, offset } => dot(normal, x) > *offset,
            Domain::Ball { center, radius } => {
                let d2: f64 = x.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum();
                d2 < radius * radius
            }
            Domain::IntervalUnion { intervals } => intervals.iter().any(|iv| x[0] > iv[0] && x[0] < iv[1]),
            Domain::ConvexPolygon { vertices } => Self::polygon_edges(vertices)
                .iter()
                .all(|(n, h)| n[0] * x[0] + n[1] * x[1] < *h),
        }
    }

    /// Smallest t > 0 with x + tω ∉ Ω (one-sided), +∞ if the ray stays inside.
    pub fn ray_exit(&self, x: &[f64], omega: &[f64]) -> f64 {
        match self {
            Domain::HalfSpace { normal, offset } => {
                let height = dot(normal, x) - offset;
                let slope = dot(normal, omega);
                if slope < 0.0 {
                    height / -slope
                } else {
                    f64::INFINITY
                }
            }
            Domain::Ball { center, radius } => {
                let rel: Vec<f64> = x.iter().zip(center).map(|(a, c)| a - c).collect();
                let b = dot(&rel, omega);
                let c = dot(&rel, &rel) - radius * radius;
                let disc = (b * b - c).max(0.0).sqrt();
                // stable root of t² + 2bt + c = 0 with t > 0
                if b > 0.0 {
                    -c / (b + disc)
                } else {
                    disc - b
                }
            }
            Domain::IntervalUnion { intervals } => {
                let Some(iv) = intervals.iter().find(|iv| x[0] > iv[0] && x[0] < iv[1]) else {
                    return 0.0;
                };
                if omega[0] > 0.0 {
                    (iv[1] - x[0]) / omega[0]
                } else if omega[0] < 0.0 {
                    (x[0] - iv[0]) / -omega[0]
                } else {
                    f64::INFINITY
                }
            }
            Domain::ConvexPolygon { vertices } => {
                let mut best = f64::INFINITY;
                for (n, h) in Self::polygon_edges(vertices) {
                    let slope = n[0] * omega[0] + n[1] * omega[1];
                    if slope > 0.0 {
                        let gap = h - (n[0] * x[0] + n[1] * x[1]);
                        best = best.min(gap / slope);
                    }
                }
                best
            }
        }
    }

    /// d_ω(x) = inf{|t| : x + tω ∉ Ω}, both signs of t.
    pub fn directional_exit(&self, x: &[f64], omega: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        if omega.len() != x.len() || (norm(omega) - 1.0).abs() > 1e-12 {
            return domain("direction must be a unit vector of matching dimension");
        }
        if !self.contains(x) {
            return domain("directional_exit requires x in the domain");
        }
        Ok(self.exit_unchecked(x, omega))
    }

    fn exit_unchecked(&self, x: &[f64], omega: &[f64]) -> f64 {
        let back: Vec<f64> = omega.iter().map(|v| -v).collect();
        self.ray_exit(x, omega).min(self.ray_exit(x, &back))
    }

    /// Euclidean distance to the complement; 0 outside the domain.
    pub fn dist_to_complement(&self, x: &[f64]) -> f64 {
        if !self.contains(x) {
            return 0.0;
        }
        match self {
            Domain::HalfSpace { normal, offset } => dot(normal, x) - offset,
            Domain::Ball { center, radius } => {
                let d2: f64 = x.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum();
                radius - d2.sqrt()
            }
            Domain::IntervalUnion { intervals } => intervals
                .iter()
                .find(|iv| x[0] > iv[0] && x[0] < iv[1])
                .map_or(0.0, |iv| (x[0] - iv[0]).min(iv[1] - x[0])),
            Domain::ConvexPolygon { vertices } => Self::polygon_edges(vertices)
                .iter()
                .map(|(n, h)| h - (n[0] * x[0] + n[1] * x[1]))
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// Axis-aligned bounding box, `None` for unbounded domains.
    pub fn bounding_box(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        match self {
            Domain::HalfSpace { .. } => None,
            Domain::Ball { center, radius } => Some((
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            )),
            Domain::IntervalUnion { intervals } => Some((vec![intervals[0][0]], vec![intervals[intervals.len() - 1][1]])),
            Domain::ConvexPolygon { vertices } => {
                let mut lo = vec![f64::INFINITY; 2];
                let mut hi = vec![f64::NEG_INFINITY; 2];
                for v in vertices {
                    for k in 0..2 {
                        lo[k] = lo[k].min(v[k]);
                        hi[k] = hi[k].max(v[k]);
                    }
                }
                Some((lo, hi))
            }
        }
    }

    /// Image of the domain under x ↦ λx + shift, λ > 0.
    pub fn transformed(&self, scale: f64, shift: &[f64]) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return domain("scale must be positive");
        }
        if shift.len() != self.dim() {
            return domain("shift dimension mismatch");
        }
        let map = |p: &[f64]| -> Vec<f64> { p.iter().zip(shift).map(|(a, b)| scale * a + b).collect() };
        let map2 = |p: &[f64; 2]| -> [f64; 2] {
            let v = map(p);
            [v[0], v[1]]
        };
        Ok(match self {
            Domain::HalfSpace { normal, offset } => Domain::HalfSpace {
                normal: normal.clone(),
                offset: scale * offset + dot(normal, shift),
            },
            Domain::Ball { center, radius } => Domain::Ball {
                center: map(center),
                radius: scale * radius,
            },
            Domain::IntervalUnion { intervals } => Domain::IntervalUnion {
                intervals: intervals.iter().map(|iv| [scale * iv[0] + shift[0], scale * iv[1] + shift[0]]).collect(),
            },
            Domain::ConvexPolygon { vertices } => Domain::ConvexPolygon {
                vertices: vertices.iter().map(map2).collect(),
            },
        })
    }

    /// Angles in [0, π) at which θ ↦ d_{(cos θ, sin θ)}(x) is not smooth.
    fn angular_breakpoints(&self, x: &[f64]) -> Vec<f64> {
        let fold = |v: [f64; 2]| -> f64 {
            // direction perpendicular to v, reduced mod π
            let a = v[1].atan2(v[0]) + 0.5 * PI;
            a.rem_euclid(PI)
        };
        let along = |v: [f64; 2]| -> f64 { v[1].atan2(v[0]).rem_euclid(PI) };
        let mut out = Vec::new();
        match self {
            Domain::HalfSpace { normal, .. } => out.push(fold([normal[0], normal[1]])),
            Domain::Ball { center, .. } => {
                let rel = [x[0] - center[0], x[1] - center[1]];
                if rel[0] != 0.0 || rel[1] != 0.0 {
                    out.push(fold(rel));
                }
            }
            Domain::ConvexPolygon { vertices } => {
                for v in vertices {
                    out.push(along([v[0] - x[0], v[1] - x[1]]));
                }
                let edges = Self::polygon_edges(vertices);
                let gaps: Vec<f64> = edges.iter().map(|(n, h)| h - (n[0] * x[0] + n[1] * x[1])).collect();
                // switch between a forward exit through edge i and a backward one through edge j
                for i in 0..edges.len() {
                    for j in i + 1..edges.len() {
                        let (ni, nj) = (edges[i].0, edges[j].0);
                        let m = [gaps[j] * ni[0] + gaps[i] * nj[0], gaps[j] * ni[1] + gaps[i] * nj[1]];
                        if m[0].hypot(m[1]) > 1e-300 {
                            out.push(fold(m));
                        }
                    }
                }
            }
            Domain::IntervalUnion { .. } => {}
        }
        out
    }

    /// ∫_{S^{N-1}} d_ω(x)^{-α} dω at a given angular resolution.
    fn inverse_exit_moment(&self, x: &[f64], alpha: f64, nodes: usize) -> Result<f64> {
        match self.dim() {
            1 => {
                let d = self.exit_unchecked(x, &[1.0]);
                Ok(2.0 * d.powf(-alpha))
            }
            2 => {
                let mut cuts = vec![0.0, PI];
                let panels = (nodes / 8).max(1);
                cuts.extend((1..panels).map(|k| PI * k as f64 / panels as f64));
                let kinks = self.angular_breakpoints(x);
                cuts.extend(&kinks);
                cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
                cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
                let near_kink = |t: f64| {
                    kinks
                        .iter()
                        .any(|k| (t - k).abs() < 1e-14 || (t - k - PI).abs() < 1e-14 || (t - k + PI).abs() < 1e-14)
                };
                // geometric grading toward kinks, where the integrand may behave like |θ-θ*|^α
                let mut graded = Vec::with_capacity(cuts.len() * 2);
                for w in cuts.windows(2) {
                    let (a, b) = (w[0], w[1]);
                    graded.push(a);
                    let mut inner = Vec::new();
                    if near_kink(a) {
                        inner.extend((1..=GRADING_LEVELS).map(|k| a + (b - a) * GRADING_RATIO.powi(k)));
                    }
                    if near_kink(b) {
                        inner.extend((1..=GRADING_LEVELS).map(|k| b - (b - a) * GRADING_RATIO.powi(k)));
                    }
                    inner.sort_by(|p, q| p.partial_cmp(q).unwrap());
                    graded.extend(inner);
                }
                graded.push(PI);
                let mut acc = 0.0;
                for w in graded.windows(2) {
                    for (t, wt) in gauss_legendre_on(8, w[0], w[1]) {
                        let d = self.exit_unchecked(x, &[t.cos(), t.sin()]);
                        if d.is_finite() {
                            acc += wt * d.powf(-alpha);
                        }
                    }
                }
                // θ ∈ [0, π) covers S^1 once up to the symmetry d_ω = d_{-ω}
                Ok(2.0 * acc)
            }
            3 => {
                let axis: [f64; 3] = match self {
                    Domain::HalfSpace { normal, .. } => [normal[0], normal[1], normal[2]],
                    Domain::Ball { center, .. } => {
                        let rel = [x[0] - center[0], x[1] - center[1], x[2] - center[2]];
                        let r = norm(&rel);
                        if r > 0.0 {
                            [rel[0] / r, rel[1] / r, rel[2] / r]
                        } else {
                            [0.0, 0.0, 1.0]
                        }
                    }
                    _ => return Err(FracError::Unsupported("three-dimensional domain variant".into())),
                };
                // orthonormal frame around the polar axis
                let helper = if axis[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
                let proj = dot(&helper, &axis);
                let mut e1 = [helper[0] - proj * axis[0], helper[1] - proj * axis[1], helper[2] - proj * axis[2]];
                let n1 = norm(&e1);
                e1.iter_mut().for_each(|v| *v /= n1);
                let e2 = [
                    axis[1] * e1[2] - axis[2] * e1[1],
                    axis[2] * e1[0] - axis[0] * e1[2],
                    axis[0] * e1[1] - axis[1] * e1[0],
                ];
                let n_phi = nodes.max(8);
                let n_z = (nodes / 2).max(4);
                let mut acc = 0.0;
                for (z, wz) in gauss_legendre_on(n_z, 0.0, 1.0) {
                    let rho = (1.0 - z * z).max(0.0).sqrt();
                    let mut ring = 0.0;
                    for k in 0..n_phi {
                        let phi = 2.0 * PI * k as f64 / n_phi as f64;
                        let (sp, cp) = phi.sin_cos();
                        let omega: Vec<f64> =
                            (0..3).map(|i| z * axis[i] + rho * (cp * e1[i] + sp * e2[i])).collect();
                        let d = self.exit_unchecked(x, &omega);
                        if d.is_finite() {
                            ring += d.powf(-alpha);
                        }
                    }
                    acc += wz * ring * 2.0 * PI / n_phi as f64;
                }
                // upper hemisphere, doubled by d_ω = d_{-ω}
                Ok(2.0 * acc)
            }
            n => Err(FracError::Unsupported(format!("angular quadrature in dimension {n}"))),
        }
    }

    /// m_α(x) = (∫|ω_N|^α)^{1/α} (∫ d_ω(x)^{-α} dω)^{-1/α}.
    ///
    /// The spherical integral is evaluated at `angular_nodes` and at twice that
    /// resolution; a relative gap above 1e-6 is a convergence error.
    pub fn pseudodistance(&self, x: &[f64], alpha: f64, angular_nodes: usize) -> Result<f64> {
        self.check_point(x)?;
        if !(alpha.is_finite() && alpha > 0.0) {
            return domain(format!("pseudodistance requires alpha > 0, got {alpha}"));
        }
        if angular_nodes < 8 {
            return domain("pseudodistance requires at least 8 angular nodes");
        }
        if !self.contains(x) {
            return domain("pseudodistance requires x in the domain");
        }
        let prefactor = sphere_moment(self.dim(), alpha)?;
        let coarse = self.inverse_exit_moment(x, alpha, angular_nodes)?;
        if self.dim() == 1 {
            return Ok((prefactor / coarse).powf(1.0 / alpha));
        }
        let fine = self.inverse_exit_moment(x, alpha, 2 * angular_nodes)?;
        let m_coarse = (prefactor / coarse).powf(1.0 / alpha);
        let m_fine = (prefactor / fine).powf(1.0 / alpha);
        let gap = ((m_fine - m_coarse) / m_fine).abs();
        if !m_fine.is_finite() || gap > 1e-6 {
            return Err(FracError::Convergence {
                what: "pseudodistance angular quadrature".into(),
                estimate: gap,
                budget: 1e-6,
            });
        }
        Ok(m_fine)
    }
}

impl Domain {
    /// Membership in the closure, with a small relative tolerance.
    pub fn contains_closed(&self, x: &[f64]) -> bool {
        const TOL: f64 = 1e-12;
        match self {
            Domain::HalfSpace { normal, offset } => dot(normal, x) >= offset - TOL * (1.0 + offset.abs()),
            Domain::Ball { center, radius } => {
                let d2: f64 = x.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum();
                d2.sqrt() <= radius * (1.0 + TOL)
            }
            Domain::IntervalUnion { intervals } => intervals
                .iter()
                .any(|iv| x[0] >= iv[0] - TOL * (1.0 + iv[0].abs()) && x[0] <= iv[1] + TOL * (1.0 + iv[1].abs())),
            Domain::ConvexPolygon { vertices } => Self::polygon_edges(vertices)
                .iter()
                .all(|(n, h)| n[0] * x[0] + n[1] * x[1] <= h + TOL * (1.0 + h.abs())),
        }
    }

    /// Directions in [0, 2π) where the one-sided exit θ ↦ ρ(θ) is not smooth.
    pub(crate) fn one_sided_kinks(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Domain::HalfSpace { normal, .. } => {
                let t = normal[1].atan2(normal[0]) + 0.5 * PI;
                vec![t.rem_euclid(2.0 * PI), (t + PI).rem_euclid(2.0 * PI)]
            }
            Domain::ConvexPolygon { vertices } => vertices
                .iter()
                .map(|v| (v[1] - x[1]).atan2(v[0] - x[0]).rem_euclid(2.0 * PI))
                .collect(),
            _ => Vec::new(),
        }
    }

    /// ∫_{S^{N-1}} ρ(ω)^{-α} dω where ρ is the one-sided ray exit from x.
    pub fn one_sided_exit_moment(&self, x: &[f64], alpha: f64, nodes: usize) -> Result<f64> {
        self.check_point(x)?;
        if !self.contains(x) {
            return domain("exit moment requires x in the domain");
        }
        match self {
            Domain::HalfSpace { normal, offset } => {
                let height = dot(normal, x) - offset;
                Ok(height.powf(-alpha) * sphere_moment(self.dim(), alpha)? / 2.0)
            }
            Domain::IntervalUnion { .. } => {
                Ok(self.ray_exit(x, &[1.0]).powf(-alpha) + self.ray_exit(x, &[-1.0]).powf(-alpha))
            }
            _ if self.dim() == 2 => {
                let kinks = self.one_sided_kinks(x);
                let total: f64 = graded_panels(0.0, 2.0 * PI, (nodes / 8).max(4), &kinks)
                    .windows(2)
                    .flat_map(|w| gauss_legendre_on(8, w[0], w[1]))
                    .map(|(t, wt)| wt * self.ray_exit(x, &[t.cos(), t.sin()]).powf(-alpha))
                    .sum();
                Ok(total)
            }
            Domain::Ball { center, .. } if self.dim() == 3 => {
                // ρ depends only on the cosine with the axis through the center
                let rel = [x[0] - center[0], x[1] - center[1], x[2] - center[2]];
                let r = norm(&rel);
                let axis = if r > 0.0 { [rel[0] / r, rel[1] / r, rel[2] / r] } else { [0.0, 0.0, 1.0] };
                let helper = if axis[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
                let proj = dot(&helper, &axis);
                let mut e1 = [helper[0] - proj * axis[0], helper[1] - proj * axis[1], helper[2] - proj * axis[2]];
                let n1 = norm(&e1);
                e1.iter_mut().for_each(|v| *v /= n1);
                let total: f64 = [(-1.0, 0.0), (0.0, 1.0)]
                    .iter()
                    .flat_map(|&(a, b)| gauss_legendre_on(nodes.max(16), a, b))
                    .map(|(z, wz)| {
                        let rho = (1.0 - z * z).max(0.0).sqrt();
                        let omega: Vec<f64> = (0..3).map(|i| z * axis[i] + rho * e1[i]).collect();
                        wz * 2.0 * PI * self.ray_exit(x, &omega).powf(-alpha)
                    })
                    .sum();
                Ok(total)
            }
            _ => Err(FracError::Unsupported("exit moment for this domain and dimension".into())),
        }
    }
}

/// Uniform panel edges on [a, b] merged with `kinks`, geometrically graded
/// toward each kink.
pub(crate) fn graded_panels(a: f64, b: f64, panels: usize, kinks: &[f64]) -> Vec<f64> {
    let mut cuts: Vec<f64> = (0..=panels).map(|k| a + (b - a) * k as f64 / panels as f64).collect();
    cuts.extend(kinks.iter().copied().filter(|&k| k > a && k < b));
    cuts.sort_by(|p, q| p.partial_cmp(q).unwrap());
    cuts.dedup_by(|p, q| (*p - *q).abs() < 1e-14 * (b - a));
    let is_kink = |t: f64| kinks.iter().any(|k| (t - k).abs() < 1e-14 * (b - a));
    let mut out = Vec::with_capacity(cuts.len() * 4);
    for w in cuts.windows(2) {
        let (l, r) = (w[0], w[1]);
        out.push(l);
        let mut inner = Vec::new();
        if is_kink(l) {
            inner.extend((1..=GRADING_LEVELS).map(|k| l + (r - l) * GRADING_RATIO.powi(k)));
        }
        if is_kink(r) {
            inner.extend((1..=GRADING_LEVELS).map(|k| r - (r - l) * GRADING_RATIO.powi(k)));
        }
        inner.sort_by(|p, q| p.partial_cmp(q).unwrap());
        out.extend(inner);
    }
    out.push(b);
    out
}

/// Default angular resolution for a dimension.
pub fn default_angular_nodes(dim: usize) -> usize {
    if dim >= 3 {
        DEFAULT_ANGULAR_NODES_3D
    } else {
        DEFAULT_ANGULAR_NODES_2D
    }
}

/// (r² − |x|²)/(2r), the boundary-distance proxy on B_r(0).
pub fn ball_proxy(r: f64, x: &[f64]) -> Result<f64> {
    let n2: f64 = x.iter().map(|v| v * v).sum();
    if !(r > 0.0) || n2 >= r * r {
        return domain("ball_proxy requires |x| < r");
    }
    Ok((r * r - n2) / (2.0 * r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn hexagon() -> Domain {
        let vertices = (0..6)
            .map(|k| {
                let a = PI / 3.0 * k as f64 + 0.2;
                [1.3 * a.cos() + 0.1, a.sin() - 0.2]
            })
            .collect();
        Domain::ConvexPolygon { vertices }
    }

    fn random_interior(d: &Domain, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let (lo, hi) = d.bounding_box().unwrap_or((vec![-2.0; d.dim()], vec![2.0; d.dim()]));
        loop {
            let x: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| rng.random_range(*a..*b)).collect();
            if d.contains(&x) && d.dist_to_complement(&x) > 1e-3 {
                return x;
            }
        }
    }

    #[test]
    fn halfspace_exit_both_signs() {
        let d = Domain::upper_half_space(2);
        let w = [0.6, -0.8];
        assert!((d.directional_exit(&[0.3, 0.5], &w).unwrap() - 0.5 / 0.8).abs() < 1e-15);
        assert!((d.directional_exit(&[0.3, 0.5], &[-0.6, 0.8]).unwrap() - 0.5 / 0.8).abs() < 1e-15);
        assert!(d.directional_exit(&[0.0, 1.0], &[1.0, 0.0]).unwrap().is_infinite());
        assert!(d.directional_exit(&[0.0, -1.0], &w).is_err());
    }

    #[test]
    fn ball_exit_matches_quadratic_root() {
        let d = Domain::Ball {
            center: vec![0.0, 0.0],
            radius: 2.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let x = random_interior(&d, &mut rng);
            let t: f64 = rng.random_range(0.0..2.0 * PI);
            let w = [t.cos(), t.sin()];
            let b = x[0] * w[0] + x[1] * w[1];
            let oracle = (b * b + 4.0 - x[0] * x[0] - x[1] * x[1]).sqrt() - b.abs();
            let got = d.directional_exit(&x, &w).unwrap();
            assert!((got - oracle).abs() < 1e-12);
            let back = d.directional_exit(&x, &[-w[0], -w[1]]).unwrap();
            assert_eq!(got, back);
        }
    }

    #[test]
    fn interval_exit_and_pseudodistance() {
        let d = Domain::interval(-1.0, 1.0);
        for x in [-0.9, -0.3, 0.0, 0.25, 0.7] {
            assert_eq!(d.directional_exit(&[x], &[1.0]).unwrap(), 1.0 - f64::abs(x));
            let m = d.pseudodistance(&[x], 1.3, 8).unwrap();
            assert!((m - (1.0 - f64::abs(x))).abs() < 1e-12);
        }
    }

    #[test]
    fn halfspace_pseudodistance_is_height() {
        for dim in [2, 3] {
            let d = Domain::upper_half_space(dim);
            for h in [0.01, 0.3, 2.0] {
                let mut x = vec![0.4; dim];
                x[dim - 1] = h;
                let m = d.pseudodistance(&x, 1.5, default_angular_nodes(dim)).unwrap();
                assert!((m - h).abs() < 1e-6 * h.max(1.0), "dim={dim} h={h} m={m}");
            }
        }
    }

    #[test]
    fn ball_center_value() {
        let d = Domain::unit_ball(2);
        let m = d.pseudodistance(&[0.0, 0.0], 1.5, 256).unwrap();
        let oracle = (sphere_moment(2, 1.5).unwrap() / (2.0 * PI)).powf(1.0 / 1.5);
        assert!((m - oracle).abs() < 1e-12);
        assert!((m - 0.676_499_363_5).abs() < 1e-9);
        assert!(m > ball_proxy(1.0, &[0.0, 0.0]).unwrap());
    }

    #[test]
    fn convexity_bound_and_dilation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let domains = [Domain::unit_ball(2), Domain::upper_half_space(2), hexagon(), Domain::unit_ball(3)];
        for d in &domains {
            for alpha in [1.1, 1.5, 1.9] {
                for _ in 0..20 {
                    let x = random_interior(d, &mut rng);
                    let m = d.pseudodistance(&x, alpha, default_angular_nodes(d.dim())).unwrap();
                    assert!(m <= d.dist_to_complement(&x) + 1e-9, "{d:?} {x:?} {m} {}", d.dist_to_complement(&x));
                }
            }
        }
        let b1 = Domain::unit_ball(2);
        let b3 = b1.transformed(3.0, &[0.0, 0.0]).unwrap();
        let x = [0.3, -0.5];
        let m1 = b1.pseudodistance(&x, 1.5, 256).unwrap();
        let m3 = b3.pseudodistance(&[0.9, -1.5], 1.5, 256).unwrap();
        assert!((m3 - 3.0 * m1).abs() < 1e-9);
    }

    #[test]
    fn polygon_distance_matches_dense_boundary() {
        let d = hexagon();
        let Domain::ConvexPolygon { vertices } = &d else { unreachable!() };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let x = random_interior(&d, &mut rng);
            let mut best = f64::INFINITY;
            for k in 0..vertices.len() {
                let a = vertices[k];
                let b = vertices[(k + 1) % vertices.len()];
                for j in 0..=20_000 {
                    let t = j as f64 / 20_000.0;
                    let p = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
                    best = best.min((p[0] - x[0]).hypot(p[1] - x[1]));
                }
            }
            assert!((d.dist_to_complement(&x) - best).abs() < 1e-4);
        }
    }

    #[test]
    fn validation_rejects_bad_shapes() {
        assert!(Domain::ConvexPolygon {
            vertices: vec![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]]
        }
        .validate()
        .is_err());
        assert!(Domain::ConvexPolygon {
            vertices: vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [0.0, 1.0]]
        }
        .validate()
        .is_err());
        assert!(Domain::IntervalUnion {
            intervals: vec![[0.0, 1.0], [0.5, 2.0]]
        }
        .validate()
        .is_err());
        assert!(Domain::HalfSpace {
            normal: vec![0.0, 2.0],
            offset: 0.0
        }
        .validate()
        .is_err());
        assert!(hexagon().validate().is_ok());
        assert!(ball_proxy(1.0, &[1.0, 0.0]).is_err());
    }

    #[test]
    fn serde_kind_tag() {
        let d: Domain = serde_json::from_str(r#"{"kind":"ball","center":[0,0],"radius":1}"#).unwrap();
        assert_eq!(d, Domain::unit_ball(2));
        assert!(serde_json::from_str::<Domain>(r#"{"kind":"ball","center":[0,0],"radius":1,"x":2}"#).is_err());
        let round: Domain = serde_json::from_str(&serde_json::to_string(&hexagon()).unwrap()).unwrap();
        assert_eq!(round, hexagon());
    }
}
