//! Closed-form trial functions and their sampling on masked grids.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::grid::{FieldFn, GridFunction, Mesh};
use crate::error::{domain, Result};
use crate::geometry::Domain;

/// A parametrized family member with a closed-form evaluator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum TrialFunction {
    Constant {
        value: f64,
    },
    /// max(0, 1 − |x − c|/r)
    Hat {
        center: Vec<f64>,
        radius: f64,
    },
    /// exp(−|x − c|²/width²), optionally cut off smoothly by (1 − |x−c|²/R²)³₊
    Gaussian {
        center: Vec<f64>,
        width: f64,
        #[serde(default)]
        support_radius: Option<f64>,
    },
    /// (1 − |x − c|²/r²)^power₊
    CompactBump {
        center: Vec<f64>,
        radius: f64,
        power: f64,
    },
    /// d(x)^β exp(−γ|x − x₀|²) with d the distance to the complement
    BoundaryBump {
        center: Vec<f64>,
        gamma: f64,
        beta: f64,
    },
    /// d(x)^exponent · base(x)
    BoundaryPower {
        exponent: f64,
        base: Box<TrialFunction>,
    },
    /// sin(frequency · x₁ + phase)
    Sine {
        frequency: f64,
        #[serde(default)]
        phase: f64,
    },
    /// Piecewise-linear interpolant in x₁, zero outside the knot range.
    PiecewiseLinear {
        knots: Vec<f64>,
        values: Vec<f64>,
    },
    /// slope·x + intercept
    Affine {
        slope: Vec<f64>,
        intercept: f64,
    },
}

fn dist2(x: &[f64], c: &[f64]) -> f64 {
    x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum()
}

impl TrialFunction {
    fn check(&self, dim: usize) -> Result<()> {
        let need_center = |c: &Vec<f64>| -> Result<()> {
            if c.len() != dim || !c.iter().all(|v| v.is_finite()) {
                return domain(format!("trial center must be a finite point in R^{dim}"));
            }
            Ok(())
        };
        match self {
            TrialFunction::Constant { value } if !value.is_finite() => domain("constant must be finite"),
            TrialFunction::Hat { center, radius } => {
                need_center(center)?;
                if !(*radius > 0.0) {
                    return domain("hat radius must be positive");
                }
                Ok(())
            }
            TrialFunction::Gaussian {
                center,
                width,
                support_radius,
            } => {
                need_center(center)?;
                if !(*width > 0.0) || support_radius.is_some_and(|r| !(r > 0.0)) {
                    return domain("gaussian width and support radius must be positive");
                }
                Ok(())
            }
            TrialFunction::CompactBump { center, radius, power } => {
                need_center(center)?;
                if !(*radius > 0.0 && *power >= 0.0) {
                    return domain("bump needs radius > 0 and power >= 0");
                }
                Ok(())
            }
            TrialFunction::BoundaryBump { center, gamma, beta } => {
                need_center(center)?;
                if !(*gamma >= 0.0 && *beta >= 0.0) {
                    return domain("boundary bump needs gamma >= 0 and beta >= 0");
                }
                Ok(())
            }
            TrialFunction::BoundaryPower { exponent, base } => {
                if !(*exponent >= 0.0) {
                    return domain("boundary power exponent must be nonnegative");
                }
                base.check(dim)
            }
            TrialFunction::PiecewiseLinear { knots, values } => {
                if knots.len() < 2 || knots.len() != values.len() || knots.windows(2).any(|w| !(w[1] > w[0])) {
                    return domain("piecewise-linear trial needs >= 2 increasing knots with matching values");
                }
                Ok(())
            }
            TrialFunction::Affine { slope, .. } if slope.len() != dim => domain("affine slope has wrong dimension"),
            _ => Ok(()),
        }
    }

    /// Evaluator on `domain`; points outside the domain map to 0.
    pub fn evaluator(&self, domain: &Domain) -> Result<FieldFn> {
        self.check(domain.dim())?;
        let inner = self.raw(domain);
        let dom = domain.clone();
        Ok(Arc::new(move |x: &[f64]| if dom.contains(x) { inner(x) } else { 0.0 }))
    }

    /// Evaluator without the domain mask, for boundary values and transformed copies.
    pub fn raw_evaluator(&self, domain: &Domain) -> Result<FieldFn> {
        self.check(domain.dim())?;
        Ok(self.raw(domain))
    }

    fn raw(&self, domain: &Domain) -> FieldFn {
        match self.clone() {
            TrialFunction::Constant { value } => Arc::new(move |_| value),
            TrialFunction::Hat { center, radius } => {
                Arc::new(move |x| (1.0 - dist2(x, &center).sqrt() / radius).max(0.0))
            }
            TrialFunction::Gaussian {
                center,
                width,
                support_radius,
            } => Arc::new(move |x| {
                let r2 = dist2(x, &center);
                let cut = support_radius.map_or(1.0, |rs| (1.0 - r2 / (rs * rs)).max(0.0).powi(3));
                (-r2 / (width * width)).exp() * cut
            }),
            TrialFunction::CompactBump { center, radius, power } => Arc::new(move |x| {
                let t = 1.0 - dist2(x, &center) / (radius * radius);
                if t > 0.0 {
                    t.powf(power)
                } else {
                    0.0
                }
            }),
            TrialFunction::BoundaryBump { center, gamma, beta } => {
                let dom = domain.clone();
                Arc::new(move |x| dom.dist_to_complement(x).powf(beta) * (-gamma * dist2(x, &center)).exp())
            }
            TrialFunction::BoundaryPower { exponent, base } => {
                let dom = domain.clone();
                let b = base.raw(domain);
                Arc::new(move |x| dom.dist_to_complement(x).powf(exponent) * b(x))
            }
            TrialFunction::Sine { frequency, phase } => Arc::new(move |x| (frequency * x[0] + phase).sin()),
            TrialFunction::PiecewiseLinear { knots, values } => Arc::new(move |x| {
                let t = x[0];
                if t < knots[0] || t > knots[knots.len() - 1] {
                    return 0.0;
                }
                let k = knots.partition_point(|&kn| kn <= t).clamp(1, knots.len() - 1);
                let (a, b) = (knots[k - 1], knots[k]);
                let w = (t - a) / (b - a);
                values[k - 1] * (1.0 - w) + values[k] * w
            }),
            TrialFunction::Affine { slope, intercept } => {
                Arc::new(move |x| x.iter().zip(&slope).map(|(a, b)| a * b).sum::<f64>() + intercept)
            }
        }
    }
}

/// Samples `f` at the cell centers of the grid over a bounded domain.
pub fn sample(f: &TrialFunction, domain: &Domain, resolution: usize) -> Result<GridFunction> {
    if resolution < 8 {
        return crate::error::domain("sampling resolution must be at least 8");
    }
    let mesh = Arc::new(Mesh::new(domain, resolution)?);
    GridFunction::from_fn(mesh, f.evaluator(domain)?)
}

/// Samples `f` on a support box inside the domain (required for half-spaces).
pub fn sample_in_box(
    f: &TrialFunction,
    domain: &Domain,
    lo: &[f64],
    hi: &[f64],
    resolution: usize,
) -> Result<GridFunction> {
    if resolution < 8 {
        return crate::error::domain("sampling resolution must be at least 8");
    }
    let mesh = Arc::new(Mesh::in_box(domain, lo, hi, resolution)?);
    GridFunction::from_fn(mesh, f.evaluator(domain)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_on_interval() {
        let u = sample(&TrialFunction::Constant { value: 1.0 }, &Domain::interval(-1.0, 1.0), 16).unwrap();
        assert_eq!(u.values().len(), 16);
        assert!(u.values().iter().all(|v| *v == 1.0));
    }

    #[test]
    fn hat_is_piecewise_linear() {
        let f = TrialFunction::Hat {
            center: vec![0.5],
            radius: 0.5,
        };
        let u = sample(&f, &Domain::interval(0.0, 1.0), 16).unwrap();
        for (x, v) in u.mesh().points().zip(u.values()) {
            assert!((v - (1.0 - (x[0] - 0.5).abs() / 0.5)).abs() < 1e-15);
        }
    }

    #[test]
    fn boundary_bump_vanishes_at_boundary() {
        let f = TrialFunction::BoundaryBump {
            center: vec![0.0, 0.0],
            gamma: 1.0,
            beta: 0.7,
        };
        let d = Domain::unit_ball(2);
        let u = sample(&f, &d, 64).unwrap();
        assert!(u.values().iter().all(|v| v.is_finite() && *v >= 0.0));
        let e = f.evaluator(&d).unwrap();
        assert!(e(&[0.999_999, 0.0]) < 1e-4);
        assert!((e(&[0.5, 0.0]) - 0.5f64.powf(0.7) * (-0.25f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn piecewise_linear_and_serde() {
        let f = TrialFunction::PiecewiseLinear {
            knots: vec![0.0, 0.5, 1.0],
            values: vec![0.0, 1.0, -1.0],
        };
        let e = f.evaluator(&Domain::interval(0.0, 1.0)).unwrap();
        assert!((e(&[0.25]) - 0.5).abs() < 1e-15);
        assert!((e(&[0.75]) - 0.0).abs() < 1e-15);
        let json = serde_json::to_string(&f).unwrap();
        assert!(json.contains("\"family\":\"piecewise_linear\""));
        let back: TrialFunction = serde_json::from_str(&json).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn resolution_floor() {
        assert!(sample(&TrialFunction::Constant { value: 1.0 }, &Domain::interval(0.0, 1.0), 4).is_err());
    }
}
