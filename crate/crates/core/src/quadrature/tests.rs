use super::*;
use crate::integrate::{adaptive, gauss_legendre_on, AdaptiveOpts};

fn params(dim: usize, p: f64, s: f64) -> FracParams {
    FracParams::new(dim, p, s).unwrap()
}

/// Nested adaptive evaluation of the 1D seminorm on (a, b).
fn dense_seminorm_1d(f: &FieldFn, a: f64, b: f64, p: f64, s: f64, kinks: &[f64]) -> f64 {
    let opts = AdaptiveOpts::rel(1e-9);
    let outer = |x: f64| {
        let mut br: Vec<f64> = kinks.iter().copied().filter(|k| *k > a && *k < b).collect();
        br.push(x);
        adaptive(
            |y: f64| {
                if y == x {
                    0.0
                } else {
                    (f(&[x]) - f(&[y])).abs().powf(p) * (x - y).abs().powf(-1.0 - p * s)
                }
            },
            a,
            b,
            &br,
            opts,
        )
        .value
    };
    adaptive(outer, a, b, kinks, opts).value
}

#[test]
fn constant_has_zero_seminorm() {
    let u = sample(&TrialFunction::Constant { value: 3.0 }, &Domain::interval(0.0, 1.0), 32).unwrap();
    let est = gagliardo_seminorm(&u, &params(1, 2.0, 0.6), &QuadratureSpec::with_resolution(32)).unwrap();
    assert!(est.value.abs() < 1e-12, "{est:?}");
}

#[test]
fn hat_matches_dense_oracle() {
    let dom = Domain::interval(0.0, 1.0);
    let f = TrialFunction::Hat {
        center: vec![0.5],
        radius: 0.4,
    };
    let ev = f.evaluator(&dom).unwrap();
    for &(p, s) in &[(2.0, 0.5), (2.0, 0.75), (3.0, 0.6)] {
        let oracle = dense_seminorm_1d(&ev, 0.0, 1.0, p, s, &[0.1, 0.5, 0.9]);
        let u = sample(&f, &dom, 256).unwrap();
        let est = gagliardo_seminorm(&u, &params(1, p, s), &QuadratureSpec::with_resolution(256)).unwrap();
        let rel = (est.value - oracle).abs() / oracle;
        assert!(rel < 0.01, "p={p} s={s}: {} vs {oracle} (rel {rel:e})", est.value);
    }
}

#[test]
fn local_refine_agrees_in_1d() {
    let dom = Domain::interval(0.0, 1.0);
    let f = TrialFunction::Hat {
        center: vec![0.5],
        radius: 0.4,
    };
    let ev = f.evaluator(&dom).unwrap();
    let oracle = dense_seminorm_1d(&ev, 0.0, 1.0, 2.0, 0.5, &[0.1, 0.5, 0.9]);
    let u = sample(&f, &dom, 256).unwrap();
    let quad = QuadratureSpec {
        diagonal_strategy: DiagonalStrategy::LocalRefine,
        ..QuadratureSpec::with_resolution(256)
    };
    let est = gagliardo_seminorm(&u, &params(1, 2.0, 0.5), &quad).unwrap();
    assert!((est.value - oracle).abs() / oracle < 0.01, "{} vs {oracle}", est.value);
}

#[test]
fn translation_invariance() {
    let f = |c: f64| TrialFunction::CompactBump {
        center: vec![c],
        radius: 0.3,
        power: 2.0,
    };
    let pr = params(1, 2.0, 0.7);
    let quad = QuadratureSpec::with_resolution(64);
    let a = gagliardo_seminorm(&sample(&f(0.5), &Domain::interval(0.0, 1.0), 64).unwrap(), &pr, &quad).unwrap();
    let b = gagliardo_seminorm(&sample(&f(2.5), &Domain::interval(2.0, 3.0), 64).unwrap(), &pr, &quad).unwrap();
    assert!((a.value - b.value).abs() <= 1e-12 * a.value.abs(), "{} vs {}", a.value, b.value);
}

#[test]
fn dilation_scaling_2d() {
    let pr = params(2, 2.0, 0.5);
    let quad = QuadratureSpec::with_resolution(32);
    let bump = |r: f64| TrialFunction::CompactBump {
        center: vec![0.0, 0.0],
        radius: 0.6 * r,
        power: 2.0,
    };
    let ball = |r: f64| Domain::Ball {
        center: vec![0.0, 0.0],
        radius: r,
    };
    let a = gagliardo_seminorm(&sample(&bump(1.0), &ball(1.0), 32).unwrap(), &pr, &quad).unwrap();
    let b = gagliardo_seminorm(&sample(&bump(2.0), &ball(2.0), 32).unwrap(), &pr, &quad).unwrap();
    let expected = 2f64.powf(2.0 - pr.ps());
    let ratio = b.value / a.value;
    assert!((ratio - expected).abs() / expected < 1e-6, "ratio {ratio} vs {expected}");
}

#[test]
fn green_identity_in_1d() {
    let dom = Domain::interval(-1.0, 1.0);
    let f = TrialFunction::CompactBump {
        center: vec![0.0],
        radius: 0.5,
        power: 3.0,
    };
    let ev = f.evaluator(&dom).unwrap();
    let s = 0.5;
    let w = |x: &[f64]| ev(x);
    let mut inner = 0.0;
    for (x, wt) in gauss_legendre_on(48, -0.5, 0.5) {
        inner += wt * ev(&[x]) * pv_regional_laplacian_direct(&w, &dom, &[x], s, 64).unwrap();
    }
    let u = sample(&f, &dom, 256).unwrap();
    let semi = gagliardo_seminorm(&u, &params(1, 2.0, s), &QuadratureSpec::with_resolution(256)).unwrap();
    assert!((inner + 0.5 * semi.value).abs() / semi.value < 0.01, "{inner} vs {}", semi.value);
}

#[test]
fn pv_extrapolation_matches_direct() {
    let dom = Domain::unit_ball(2);
    let w = |x: &[f64]| 1.0 - x[0] * x[0] - x[1] * x[1];
    let quad = QuadratureSpec::with_resolution(64);
    let x = [0.2, -0.1];
    let ext = pv_regional_laplacian(&w, &dom, &x, 0.4, &quad).unwrap();
    let direct = pv_regional_laplacian_direct(&w, &dom, &x, 0.4, 64).unwrap();
    assert!((ext.value - direct).abs() < 1e-6 * direct.abs(), "{} vs {direct}", ext.value);
    assert!(direct < 0.0);
}

#[test]
fn hardy_term_rejects_boundary_mass() {
    let dom = Domain::interval(0.0, 1.0);
    let u = sample(&TrialFunction::Constant { value: 1.0 }, &dom, 16).unwrap();
    let pr = params(1, 2.0, 0.75);
    let h = hardy_term(&u, &pr, HardyWeight::BoundaryDistance, &QuadratureSpec::default()).unwrap();
    assert!(h.is_finite() && h > 0.0);
    let bad = QuadratureSpec {
        pv_cutoffs: vec![0.5, 1.0],
        ..QuadratureSpec::default()
    };
    assert!(bad.validate().is_err());
}

#[test]
fn lq_norm_of_constant() {
    let u = sample(&TrialFunction::Constant { value: 2.0 }, &Domain::interval(0.0, 3.0), 30).unwrap();
    assert!((lq_norm(&u, 2.0).unwrap() - (12.0f64).sqrt()).abs() < 1e-12);
    assert!(lq_norm(&u, 0.5).is_err());
}

#[test]
fn spec_serde_defaults() {
    let q: QuadratureSpec = serde_json::from_str("{\"resolution\": 32}").unwrap();
    assert_eq!(q.levels, 3);
    assert_eq!(q.pv_cutoffs, vec![1.0, 0.5, 0.25]);
    assert!(serde_json::from_str::<QuadratureSpec>("{\"bogus\": 1}").is_err());
}

#[test]
fn halfline_box_adds_exterior_tail() {
    let dom = Domain::upper_half_space(1);
    let f = TrialFunction::CompactBump {
        center: vec![0.5],
        radius: 0.3,
        power: 2.0,
    };
    let ev = f.evaluator(&dom).unwrap();
    let (p, s) = (2.0, 0.7);
    let ps = p * s;
    let inner = dense_seminorm_1d(&ev, 0.0, 1.0, p, s, &[0.2, 0.5, 0.8]);
    let tail = adaptive(
        |x: f64| 2.0 * ev(&[x]).powf(p) * (1.0 - x).powf(-ps) / ps,
        0.2,
        0.8,
        &[],
        AdaptiveOpts::rel(1e-11),
    )
    .value;
    let oracle = inner + tail;
    let u = sample_in_box(&f, &dom, &[0.0], &[1.0], 256).unwrap();
    let est = gagliardo_seminorm(&u, &params(1, p, s), &QuadratureSpec::with_resolution(256)).unwrap();
    assert!((est.value - oracle).abs() / oracle < 0.01, "{} vs {oracle}", est.value);
}

#[test]
fn unit_weight_reproduces_seminorm() {
    let dom = Domain::upper_half_space(2);
    let f = TrialFunction::CompactBump {
        center: vec![0.5, 0.5],
        radius: 0.3,
        power: 2.0,
    };
    let u = sample_in_box(&f, &dom, &[0.0, 0.0], &[1.0, 1.0], 32).unwrap();
    let one = sample_in_box(&TrialFunction::Constant { value: 1.0 }, &dom, &[0.0, 0.0], &[1.0, 1.0], 32).unwrap();
    let pr = params(2, 2.0, 0.6);
    let quad = QuadratureSpec::with_resolution(32);
    let a = gagliardo_seminorm(&u, &pr, &quad).unwrap();
    let b = weighted_seminorm(&u, &one, &pr, &quad).unwrap();
    assert!((a.value - b.value).abs() < 1e-6 * a.value, "{} vs {}", a.value, b.value);
}
