//! Special functions and the explicit constants of the fractional Hardy and
//! Hardy–Sobolev–Maz'ya inequalities.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, FracError, Result};
use crate::integrate::{adaptive, AdaptiveOpts};

// Lanczos approximation, g = 7, n = 9 (Godfrey coefficients).
const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

fn lanczos_sum(x: f64) -> f64 {
    // x is the shifted argument (Γ(x+1) form)
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    acc
}

fn check_positive(x: f64, what: &str) -> Result<()> {
    if !(x.is_finite() && x > 0.0) {
        return domain(format!("{what} requires a finite positive argument, got {x}"));
    }
    Ok(())
}

/// Natural logarithm of Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> Result<f64> {
    check_positive(x, "ln_gamma")?;
    Ok(ln_gamma_unchecked(x))
}

fn ln_gamma_unchecked(x: f64) -> f64 {
    if x < 0.5 {
        // reflection keeps full accuracy near the pole at 0
        return (PI / (PI * x).sin()).ln() - ln_gamma_unchecked(1.0 - x);
    }
    let z = x - 1.0;
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + lanczos_sum(z).ln()
}

/// Γ(x) for x > 0.
pub fn gamma_fn(x: f64) -> Result<f64> {
    check_positive(x, "gamma_fn")?;
    if x < 0.5 {
        return Ok(PI / ((PI * x).sin() * gamma_unchecked(1.0 - x)));
    }
    Ok(gamma_unchecked(x))
}

fn gamma_unchecked(x: f64) -> f64 {
    if x > 140.0 {
        return ln_gamma_unchecked(x).exp();
    }
    let z = x - 1.0;
    let t = z + LANCZOS_G + 0.5;
    (2.0 * PI).sqrt() * t.powf(z + 0.5) * (-t).exp() * lanczos_sum(z)
}

/// Euler Beta function B(a, b) = Γ(a)Γ(b)/Γ(a+b).
pub fn beta_fn(a: f64, b: f64) -> Result<f64> {
    check_positive(a, "beta_fn")?;
    check_positive(b, "beta_fn")?;
    if a + b < 100.0 {
        Ok(gamma_fn(a)? * gamma_fn(b)? / gamma_fn(a + b)?)
    } else {
        Ok((ln_gamma_unchecked(a) + ln_gamma_unchecked(b) - ln_gamma_unchecked(a + b)).exp())
    }
}

/// Surface measure |S^{N-1}| = 2π^{N/2}/Γ(N/2). For N = 1 the "sphere" is the
/// two-point set {±1} with counting measure, giving 2.
pub fn sphere_surface(dim: usize) -> Result<f64> {
    if dim < 1 {
        return domain("sphere_surface requires N >= 1");
    }
    let half = dim as f64 / 2.0;
    Ok(2.0 * PI.powf(half) / gamma_fn(half)?)
}

/// Angular moment ∫_{S^{N-1}} |ω_N|^α dω = 2π^{(N-1)/2} Γ((1+α)/2)/Γ((N+α)/2).
pub fn sphere_moment(dim: usize, alpha: f64) -> Result<f64> {
    if dim < 1 {
        return domain("sphere_moment requires N >= 1");
    }
    if !(alpha.is_finite() && alpha >= 0.0) {
        return domain(format!("sphere_moment requires alpha >= 0, got {alpha}"));
    }
    let n = dim as f64;
    Ok(2.0 * PI.powf((n - 1.0) / 2.0) * gamma_fn((1.0 + alpha) / 2.0)? / gamma_fn((n + alpha) / 2.0)?)
}

/// The parameter triple (N, p, s) shared by every functional.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FracParams {
    #[serde(rename = "N")]
    pub dim: usize,
    pub p: f64,
    pub s: f64,
}

impl FracParams {
    pub fn new(dim: usize, p: f64, s: f64) -> Result<Self> {
        let params = Self { dim, p, s };
        params.validate()?;
        Ok(params)
    }

    /// Checks the base invariants 0 < s < 1, p >= 1, N >= 1.
    pub fn validate(&self) -> Result<()> {
        if self.dim < 1 {
            return domain("N must be a positive integer");
        }
        if !(self.s.is_finite() && self.s > 0.0 && self.s < 1.0) {
            return domain(format!("invariant 0<s<1 violated: s = {}", self.s));
        }
        if !(self.p.is_finite() && self.p >= 1.0) {
            return domain(format!("invariant p>=1 violated: p = {}", self.p));
        }
        Ok(())
    }

    pub fn ps(&self) -> f64 {
        self.p * self.s
    }

    /// Sobolev exponent Np/(N-ps), defined only when ps < N.
    pub fn q(&self) -> Option<f64> {
        let n = self.dim as f64;
        (self.ps() < n).then(|| n * self.p / (n - self.ps()))
    }

    /// Hardy mode requires ps > 1.
    pub fn require_hardy(&self) -> Result<()> {
        self.validate()?;
        if self.ps() <= 1.0 {
            return domain(format!("Hardy mode requires ps > 1, got ps = {}", self.ps()));
        }
        Ok(())
    }

    /// HSM mode requires 1 < ps < N and p >= 2.
    pub fn require_hsm(&self) -> Result<()> {
        self.require_hardy()?;
        if self.ps() >= self.dim as f64 {
            return domain(format!("HSM mode requires ps < N, got ps = {} with N = {}", self.ps(), self.dim));
        }
        if self.p < 2.0 {
            return domain(format!("HSM mode requires p >= 2, got p = {}", self.p));
        }
        Ok(())
    }

    pub fn with_dim(&self, dim: usize) -> Self {
        Self { dim, ..*self }
    }
}

/// ∫_0^1 (1 - r^{(ps-1)/p})^p (1-r)^{-1-ps} dr evaluated after the substitution
/// r = 1 - t^{1/(p-ps)}, which turns the (1-r)^{p-1-ps} endpoint behaviour
/// into a bounded integrand.
pub fn hardy_radial_integral(p: f64, s: f64) -> Result<f64> {
    let ps = p * s;
    if ps <= 1.0 {
        return domain(format!("hardy constant requires ps > 1, got {ps}"));
    }
    let a = (ps - 1.0) / p;
    let k = 1.0 / (p - ps);
    let integrand = |t: f64| {
        let one_minus_r = t.powf(k);
        // 1 - r^a computed without cancellation
        let one_minus_ra = -(a * (-one_minus_r).ln_1p()).exp_m1();
        k * one_minus_ra.powf(p) * t.powf(-k * ps - 1.0)
    };
    let res = adaptive(
        integrand,
        0.0,
        1.0,
        &[0.5, 0.9, 0.99],
        AdaptiveOpts {
            rel_tol: 1e-13,
            abs_tol: 0.0,
            max_segments: 4000,
        },
    );
    let budget = 1e-10 * res.value.abs();
    if !res.value.is_finite() || res.error > budget {
        return Err(FracError::Convergence {
            what: "hardy constant radial integral".into(),
            estimate: res.error,
            budget,
        });
    }
    Ok(res.value)
}

/// Sharp fractional Hardy constant D_{N,p,s}.
pub fn hardy_constant(params: &FracParams) -> Result<f64> {
    params.require_hardy()?;
    Ok(sphere_moment(params.dim, params.ps())? * hardy_radial_integral(params.p, params.s)?)
}

/// Closed form of D_{N,2,s} through the Beta function, valid for 1/2 < s < 1.
pub fn hardy_constant_closed_p2(dim: usize, s: f64) -> Result<f64> {
    if !(s > 0.5 && s < 1.0) {
        return domain(format!("closed p=2 Hardy constant requires 1/2 < s < 1, got {s}"));
    }
    let b = beta_fn((1.0 + 2.0 * s) / 2.0, 1.0 - s)?;
    let two_2s = 2f64.powf(2.0 * s);
    Ok(sphere_moment(dim, 2.0 * s)? * (b - two_2s) / (2f64.powf(2.0 * s + 1.0) * s))
}

/// Constant of the Garsia–Rodemich–Rumsey lower bound, (ps-1)^p (8(ps+1))^{-p}/4.
pub fn grr_constant(p: f64, s: f64) -> Result<f64> {
    let ps = p * s;
    if !(ps > 1.0) {
        return domain(format!("GRR constant requires ps > 1, got {ps}"));
    }
    Ok((ps - 1.0).powf(p) * (8.0 * (ps + 1.0)).powf(-p) / 4.0)
}

/// The pair (c1, c2) of the one-dimensional regional-Laplacian lower bound:
/// c1 = (B(s+1/2, 1-s) - 2^{2s})/(2s), c2 = (2^{2s} - 2)/(2s).
pub fn c1_c2(s: f64) -> Result<(f64, f64)> {
    if !(s > 0.5 && s < 1.0) {
        return domain(format!("c1/c2 require 1/2 < s < 1, got {s}"));
    }
    let b = beta_fn(s + 0.5, 1.0 - s)?;
    let two_2s = 2f64.powf(2.0 * s);
    Ok(((b - two_2s) / (2.0 * s), (two_2s - 2.0) / (2.0 * s)))
}

/// Every explicit constant attached to one parameter triple. Entries that are
/// undefined for the triple (e.g. c1 when s <= 1/2) are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantBundle {
    pub params: FracParams,
    pub hardy_const: Option<f64>,
    pub grr_const: Option<f64>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub sphere_surface: f64,
    /// ∫_{S^{N-1}} |ω_N|^{ps} dω
    pub sphere_moment: f64,
    pub q: Option<f64>,
}

impl ConstantBundle {
    pub fn new(params: &FracParams) -> Result<Self> {
        params.validate()?;
        let hardy = params.ps() > 1.0;
        let (c1, c2) = match c1_c2(params.s) {
            Ok((a, b)) => (Some(a), Some(b)),
            Err(_) => (None, None),
        };
        Ok(Self {
            params: *params,
            hardy_const: if hardy { Some(hardy_constant(params)?) } else { None },
            grr_const: if hardy { Some(grr_constant(params.p, params.s)?) } else { None },
            c1,
            c2,
            sphere_surface: sphere_surface(params.dim)?,
            sphere_moment: sphere_moment(params.dim, params.ps())?,
            q: params.q(),
        })
    }

    pub fn hardy(&self) -> Result<f64> {
        self.hardy_const
            .ok_or_else(|| FracError::Domain("Hardy constant requires ps > 1".into()))
    }
}
