//! Principal values of the regional fractional Laplacian
//! L_Ω u(x) = lim_{ε→0} ∫_{Ω∩{|y−x|>ε}} (u(y) − u(x)) |x − y|^{−N−2s} dy.

use std::f64::consts::PI;

use crate::error::{domain, FracError, Result};
use crate::geometry::{graded_panels, Domain};
use crate::integrate::{adaptive, adaptive_to_infinity, extrapolate_to_zero, gauss_legendre_on, AdaptiveOpts};

const RADIAL: AdaptiveOpts = AdaptiveOpts {
    rel_tol: 1e-11,
    abs_tol: 1e-15,
    max_segments: 2000,
};

const NEAR_CUT: f64 = 1e-3;

/// Truncated integral over the line through x in direction ±ω, radii r > eps.
///
/// For r below the nearer exit the two sides are paired into the second
/// difference u(x+rω) + u(x−rω) − 2u(x), which is O(r²) and removes the
/// principal-value singularity.
fn line_contribution<F: Fn(&[f64]) -> f64>(w: &F, dom: &Domain, x: &[f64], omega: &[f64], s: f64, eps: f64) -> f64 {
    let u0 = w(x);
    let plus = dom.ray_exit(x, omega);
    let back: Vec<f64> = omega.iter().map(|v| -v).collect();
    let minus = dom.ray_exit(x, &back);
    let (near, far, far_dir) = if plus <= minus { (plus, minus, &back) } else { (minus, plus, &omega.to_vec()) };
    let point = |r: f64, dir: &[f64]| -> Vec<f64> { x.iter().zip(dir).map(|(a, d)| a + r * d).collect() };
    let expo = -1.0 - 2.0 * s;
    let mut total = 0.0;
    if eps < near {
        let second = |r: f64| w(&point(r, omega)) + w(&point(r, &back)) - 2.0 * u0;
        // below r0 the second difference is dominated by round-off; use its
        // quadratic model D(r0)(r/r0)² there
        let r0 = NEAR_CUT * near;
        let start = eps.max(r0);
        total += adaptive(|r: f64| second(r) * r.powf(expo), start, near, &[], RADIAL).value;
        if eps < r0 {
            let k = 2.0 - 2.0 * s;
            total += second(r0) * r0.powi(-2) * (r0.powf(k) - eps.powf(k)) / k;
        }
    }
    let start = near.max(eps);
    if far > start {
        let one_side = |r: f64| (w(&point(r, far_dir)) - u0) * r.powf(expo);
        total += if far.is_infinite() {
            adaptive_to_infinity(one_side, start, &[], RADIAL).value
        } else {
            adaptive(one_side, start, far, &[], RADIAL).value
        };
    }
    total
}

/// The ε-truncated regional Laplacian at x.
pub(crate) fn truncated<F: Fn(&[f64]) -> f64>(
    w: &F,
    dom: &Domain,
    x: &[f64],
    s: f64,
    eps: f64,
    angular: usize,
) -> Result<f64> {
    match dom.dim() {
        1 => {
            let mut total = line_contribution(w, dom, x, &[1.0], s, eps);
            if let Domain::IntervalUnion { intervals } = dom {
                // other components of Ω are away from x
                let u0 = w(x);
                for iv in intervals {
                    if x[0] > iv[0] && x[0] < iv[1] {
                        continue;
                    }
                    let f = |y: f64| (w(&[y]) - u0) * (y - x[0]).abs().powf(-1.0 - 2.0 * s);
                    total += adaptive(f, iv[0], iv[1], &[], RADIAL).value;
                }
            }
            Ok(total)
        }
        2 => {
            // θ ∈ [0, π) with panels anchored at the first kink so the rule
            // rotates with the geometry
            let mut kinks: Vec<f64> = Vec::new();
            match dom {
                Domain::Ball { center, .. } => {
                    let rel = [x[0] - center[0], x[1] - center[1]];
                    if rel[0] != 0.0 || rel[1] != 0.0 {
                        kinks.push((rel[1].atan2(rel[0]) + 0.5 * PI).rem_euclid(PI));
                    }
                }
                Domain::HalfSpace { normal, .. } => kinks.push((normal[1].atan2(normal[0]) + 0.5 * PI).rem_euclid(PI)),
                Domain::ConvexPolygon { vertices } => {
                    for v in vertices {
                        kinks.push((v[1] - x[1]).atan2(v[0] - x[0]).rem_euclid(PI));
                    }
                }
                Domain::IntervalUnion { .. } => {}
            }
            let anchor = kinks.first().copied().unwrap_or(0.0);
            let shifted: Vec<f64> = kinks.iter().map(|k| (k - anchor).rem_euclid(PI)).collect();
            let panels = (angular / 8).max(4);
            let total = graded_panels(0.0, PI, panels, &shifted)
                .windows(2)
                .flat_map(|win| gauss_legendre_on(8, win[0], win[1]))
                .map(|(t, wt)| {
                    let th = t + anchor;
                    wt * line_contribution(w, dom, x, &[th.cos(), th.sin()], s, eps)
                })
                .sum();
            Ok(total)
        }
        3 => {
            let axis = match dom {
                Domain::Ball { center, .. } => {
                    let rel = [x[0] - center[0], x[1] - center[1], x[2] - center[2]];
                    let r = (rel[0] * rel[0] + rel[1] * rel[1] + rel[2] * rel[2]).sqrt();
                    if r > 0.0 {
                        [rel[0] / r, rel[1] / r, rel[2] / r]
                    } else {
                        [0.0, 0.0, 1.0]
                    }
                }
                Domain::HalfSpace { normal, .. } => [normal[0], normal[1], normal[2]],
                _ => return Err(FracError::Unsupported("regional Laplacian for this 3D domain".into())),
            };
            let helper = if axis[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
            let proj: f64 = (0..3).map(|i| helper[i] * axis[i]).sum();
            let mut e1 = [0.0; 3];
            for i in 0..3 {
                e1[i] = helper[i] - proj * axis[i];
            }
            let n1 = (e1[0] * e1[0] + e1[1] * e1[1] + e1[2] * e1[2]).sqrt();
            e1.iter_mut().for_each(|v| *v /= n1);
            let e2 = [
                axis[1] * e1[2] - axis[2] * e1[1],
                axis[2] * e1[0] - axis[0] * e1[2],
                axis[0] * e1[1] - axis[1] * e1[0],
            ];
            let n_phi = angular.max(8);
            let mut total = 0.0;
            // upper hemisphere covers every ±ω pair once
            for (z, wz) in gauss_legendre_on((angular / 2).max(8), 0.0, 1.0) {
                let rho = (1.0 - z * z).max(0.0).sqrt();
                for k in 0..n_phi {
                    let phi = 2.0 * PI * k as f64 / n_phi as f64;
                    let (sp, cp) = phi.sin_cos();
                    let omega: Vec<f64> = (0..3).map(|i| z * axis[i] + rho * (cp * e1[i] + sp * e2[i])).collect();
                    total += wz * (2.0 * PI / n_phi as f64) * line_contribution(w, dom, x, &omega, s, eps);
                }
            }
            Ok(total)
        }
        n => Err(FracError::Unsupported(format!("regional Laplacian in dimension {n}"))),
    }
}

pub(crate) fn check_inputs(dom: &Domain, x: &[f64], s: f64) -> Result<()> {
    if !(s > 0.0 && s < 1.0) {
        return domain(format!("invariant 0<s<1 violated: s = {s}"));
    }
    if x.len() != dom.dim() || !dom.contains(x) {
        return domain("regional Laplacian requires x in the domain");
    }
    Ok(())
}

/// Extrapolation of truncated values at `eps` (decreasing) to ε → 0 with the
/// even-expansion orders 2−2s and 4−2s. Returns (value, error estimate).
pub(crate) fn extrapolate(eps: &[f64], values: &[f64], s: f64) -> (f64, f64) {
    let orders = [2.0 - 2.0 * s, 4.0 - 2.0 * s];
    let full = extrapolate_to_zero(eps, values, &orders);
    let n = eps.len();
    let reduced = if n >= 2 {
        extrapolate_to_zero(&eps[n - 2..], &values[n - 2..], &orders[..1])
    } else {
        values[n - 1]
    };
    (full, (full - reduced).abs())
}
