//! One function per command: compute, check contracts, tabulate.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use fraclab::gsr::{gsr_ball, gsr_ball_identity, gsr_halfspace, BallIdentity, BallPotential, GsrDecomposition};
use fraclab::onedim::{
    empirical_key_constant, grr_random_suite, interval_remainder_check, key_inequality_ratio, loglog_slope,
    remainder_potential_w, symmetric_remainder_check, EmpiricalConstant, GrrSuite, IntervalRemainderReport,
    IntervalTrial, KeyRatio, SymmetricRemainderReport,
};
use fraclab::quadrature::{
    gagliardo_seminorm, hardy_term_estimate, lq_norm_estimate, Estimate, TrialFunction,
};
use fraclab::special::hardy_constant;
use fraclab::verify::{
    assemble_sigma_bound, directional_decomposition_check, hardy_suite, hsm_report, hsm_suite, minimize_sigma,
    random_interior_bump, sample_on, sobolev_reflection_ratio, trial_box, DecompositionCheck, HardyTrial, HsmTrial,
    ReflectionReport, SigmaBound,
};
use fraclab::{ConstantBundle, Domain, FracParams};

use crate::config::{Command, OnedimTask, RunConfig};
use crate::{Cell, CliError, Rendered, Table};

type Run = Result<Rendered, CliError>;

pub fn execute(cfg: &RunConfig) -> Run {
    match cfg.command.ok_or_else(|| CliError::config("no command given"))? {
        Command::Constants => constants(cfg),
        Command::Mdist => mdist(cfg),
        Command::Seminorm => seminorm(cfg),
        Command::GsrCheck => gsr_check(cfg),
        Command::Onedim => onedim(cfg),
        Command::VerifyHardy => verify_hardy(cfg),
        Command::VerifyHsm => verify_hsm(cfg),
        Command::EstimateSigma => estimate_sigma(cfg),
        Command::DecompositionCheck => decomposition_check(cfg),
    }
}

fn nonempty(cfg: &RunConfig) -> Result<usize, CliError> {
    match cfg.trials.count {
        0 => Err(CliError::config("trial count must be positive")),
        n => Ok(n),
    }
}

fn constants(cfg: &RunConfig) -> Run {
    let grid = cfg.sweep.clone().unwrap_or_else(|| vec![cfg.params.s]);
    let mut table = Table::new(&["N", "p", "s", "hardy_const", "grr_const", "c1", "c2", "sphere_surface", "sphere_moment", "q"]);
    let mut bundles = Vec::new();
    for s in grid {
        let b = ConstantBundle::new(&FracParams { s, ..cfg.params })?;
        table.push(vec![
            Cell::Int(b.params.dim as u64),
            b.params.p.into(),
            b.params.s.into(),
            b.hardy_const.into(),
            b.grr_const.into(),
            b.c1.into(),
            b.c2.into(),
            b.sphere_surface.into(),
            b.sphere_moment.into(),
            b.q.into(),
        ]);
        bundles.push(b);
    }
    Ok(Rendered::new(cfg, Vec::new(), &bundles, table))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MdistRow {
    pub point: Vec<f64>,
    pub m_alpha: f64,
    pub distance: f64,
}

fn default_points(dom: &Domain) -> Vec<Vec<f64>> {
    match dom.bounding_box() {
        Some((lo, hi)) => {
            let c: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();
            let half = 0.5 * (hi[0] - lo[0]);
            (0..9)
                .map(|k| {
                    let mut x = c.clone();
                    x[0] += half * (-0.8 + 0.2 * k as f64);
                    x
                })
                .filter(|x| dom.contains(x))
                .collect()
        }
        None => {
            let (lo, _) = trial_box(dom).unwrap_or((vec![0.0; dom.dim()], Vec::new()));
            let n = dom.dim();
            (1..=8)
                .map(|k| {
                    let mut x = lo.clone();
                    x[n - 1] += 0.25 * k as f64;
                    x
                })
                .collect()
        }
    }
}

fn is_convex(dom: &Domain) -> bool {
    match dom {
        Domain::IntervalUnion { intervals } => intervals.len() == 1,
        _ => true,
    }
}

fn mdist(cfg: &RunConfig) -> Run {
    let dom = cfg.domain_or_default();
    let alpha = cfg.alpha.unwrap_or(cfg.params.ps());
    let points = cfg.points.clone().unwrap_or_else(|| default_points(&dom));
    if points.is_empty() {
        return Err(CliError::config("no evaluation points"));
    }
    let nodes = cfg.quad.angular_for(dom.dim());
    let mut header: Vec<String> = (1..=dom.dim()).map(|k| format!("x{k}")).collect();
    header.extend(["m_alpha".to_string(), "distance".to_string()]);
    let mut table = Table {
        header,
        rows: Vec::new(),
    };
    let mut rows = Vec::new();
    let mut violations = Vec::new();
    for x in points {
        if x.len() != dom.dim() || !dom.contains(&x) {
            return Err(CliError::config(format!("point {x:?} is not inside the domain")));
        }
        let m = dom.pseudodistance(&x, alpha, nodes)?;
        let d = dom.dist_to_complement(&x);
        if is_convex(&dom) && m > d * (1.0 + 1e-9) {
            violations.push(format!("m_alpha {m} exceeds distance {d} at {x:?} in a convex domain"));
        }
        let mut row: Vec<Cell> = x.iter().map(|v| Cell::Num(*v)).collect();
        row.extend([m.into(), d.into()]);
        table.push(row);
        rows.push(MdistRow {
            point: x,
            m_alpha: m,
            distance: d,
        });
    }
    Ok(Rendered::new(cfg, violations, &rows, table))
}

fn default_trial(dom: &Domain) -> Result<TrialFunction, CliError> {
    let (lo, hi) = trial_box(dom)?;
    let c: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();
    let room = c
        .iter()
        .zip(lo.iter().zip(&hi))
        .map(|(x, (a, b))| (x - a).min(b - x))
        .fold(dom.dist_to_complement(&c), f64::min);
    Ok(TrialFunction::CompactBump {
        center: c,
        radius: 0.6 * room,
        power: 2.0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeminormResult {
    pub trial: TrialFunction,
    pub seminorm: Estimate,
    /// ∫|u|^p/weight^{ps} (when ps > 1)
    pub hardy: Option<Estimate>,
    pub hardy_constant: Option<f64>,
    /// ‖u‖_q with the Sobolev exponent (when ps < N)
    pub lq_norm: Option<Estimate>,
}

fn seminorm(cfg: &RunConfig) -> Run {
    let dom = cfg.domain_or_default();
    let trial = match &cfg.trial {
        Some(t) => t.clone(),
        None => default_trial(&dom)?,
    };
    let u = sample_on(&dom, &trial, cfg.quad.resolution)?;
    let semi = gagliardo_seminorm(&u, &cfg.params, &cfg.quad)?;
    let (hardy, d) = if cfg.params.ps() > 1.0 {
        (
            Some(hardy_term_estimate(&u, &cfg.params, cfg.weight(), &cfg.quad)?),
            Some(hardy_constant(&cfg.params)?),
        )
    } else {
        (None, None)
    };
    let lq = match cfg.params.q() {
        Some(q) => Some(lq_norm_estimate(&u, q, &cfg.quad)?),
        None => None,
    };
    let mut violations = Vec::new();
    if !semi.within_budget {
        violations.push(format!("seminorm error {:.3e} exceeds the budget", semi.error));
    }
    let mut table = Table::new(&["seminorm", "seminorm_error", "hardy", "hardy_error", "hardy_constant", "lq_norm"]);
    table.push(vec![
        semi.value.into(),
        semi.error.into(),
        hardy.map(|h| h.value).into(),
        hardy.map(|h| h.error).into(),
        d.into(),
        lq.map(|l| l.value).into(),
    ]);
    let result = SeminormResult {
        trial,
        seminorm: semi,
        hardy,
        hardy_constant: d,
        lq_norm: lq,
    };
    Ok(Rendered::new(cfg, violations, &result, table))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GsrResult {
    pub trial: TrialFunction,
    pub decomposition: GsrDecomposition,
    pub identity: Option<BallIdentity>,
}

fn gsr_check(cfg: &RunConfig) -> Run {
    let p = &cfg.params;
    let dom = cfg.domain.clone().unwrap_or_else(|| Domain::upper_half_space(p.dim));
    let mut violations = Vec::new();
    let (trial, decomposition, identity) = match &dom {
        Domain::HalfSpace { .. } => {
            let (lo, hi) = trial_box(&dom)?;
            let trial = cfg.trial.clone().unwrap_or_else(|| {
                let mut center: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();
                center[p.dim - 1] = lo[p.dim - 1] + 0.5;
                TrialFunction::BoundaryPower {
                    exponent: (p.ps() - 1.0) / p.p,
                    base: Box::new(TrialFunction::CompactBump {
                        center,
                        radius: 0.3,
                        power: 2.0,
                    }),
                }
            });
            let u = sample_on(&dom, &trial, cfg.quad.resolution)?;
            let g = gsr_halfspace(&u, p, &cfg.quad, cfg.c_p)?;
            if p.p == 2.0 && g.identity_gap() >= fraclab::gsr::HALFSPACE_IDENTITY_RTOL {
                violations.push(format!("identity gap {:.3e} exceeds 2%", g.identity_gap()));
            }
            (trial, g, None)
        }
        Domain::Ball { center, radius } if center.iter().all(|c| *c == 0.0) && *radius == 1.0 => {
            if p.p != 2.0 {
                return Err(CliError::config("the ball representation is implemented for p = 2"));
            }
            let trial = cfg.trial.clone().unwrap_or(TrialFunction::Gaussian {
                center: vec![0.0; p.dim],
                width: 0.3,
                support_radius: Some(0.9),
            });
            let u = sample_on(&dom, &trial, cfg.quad.resolution)?;
            let g = gsr_ball(&u, p.s, &cfg.quad)?;
            let id = gsr_ball_identity(&u, p.s, &cfg.quad, BallPotential::AngularReduction)?;
            if id.relative_gap >= 0.03 {
                violations.push(format!("ball representation gap {:.3e} exceeds 3%", id.relative_gap));
            }
            (trial, g, Some(id))
        }
        _ => return Err(CliError::config("gsr-check needs a coordinate half-space or the unit ball")),
    };
    if !decomposition.holds {
        violations.push(format!("remainder inequality fails with margin {:.6e}", decomposition.margin));
    }
    let mut table = Table::new(&["seminorm", "hardy", "remainder", "gsr_functional", "zero_order", "margin", "tolerance", "holds"]);
    table.push(vec![
        decomposition.seminorm.into(),
        decomposition.hardy.into(),
        decomposition.remainder.into(),
        decomposition.gsr_functional.into(),
        decomposition.zero_order.into(),
        decomposition.margin.into(),
        decomposition.tolerance.into(),
        decomposition.holds.into(),
    ]);
    let result = GsrResult {
        trial,
        decomposition,
        identity,
    };
    Ok(Rendered::new(cfg, violations, &result, table))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WSweep {
    pub p: f64,
    pub s: f64,
    pub x: Vec<f64>,
    pub w: Vec<f64>,
    /// log–log slope on x ∈ [1e−8, 1e−6]
    pub slope_near_zero: f64,
    /// log–log slope in 1 − x on [1e−4, 1e−2]
    pub slope_near_one: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntervalResult {
    pub one_sided: IntervalRemainderReport,
    pub symmetric: SymmetricRemainderReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KeyResult {
    pub q: f64,
    pub best: EmpiricalConstant,
    pub ratio: KeyRatio,
}

fn onedim(cfg: &RunConfig) -> Run {
    let params = cfg.params.with_dim(1);
    params.require_hardy()?;
    let (p, s) = (params.p, params.s);
    match cfg.task.unwrap_or_default() {
        OnedimTask::WPotential => {
            let mut xs: Vec<f64> = (0..=30).map(|k| 10f64.powf(-8.0 + 7.7 * k as f64 / 30.0)).collect();
            xs.extend((1..=30).rev().map(|k| 1.0 - 10f64.powf(-6.0 + 5.7 * k as f64 / 30.0)));
            let w: Vec<f64> = xs.iter().map(|x| remainder_potential_w(*x, p, s)).collect::<Result<_, _>>()?;
            let mut table = Table::new(&["x", "W"]);
            for (x, v) in xs.iter().zip(&w) {
                table.push(vec![(*x).into(), (*v).into()]);
            }
            let violations = w
                .iter()
                .zip(&xs)
                .filter(|(v, _)| !(**v > 0.0))
                .map(|(v, x)| format!("W({x}) = {v} is not positive"))
                .collect();
            let sweep = WSweep {
                p,
                s,
                slope_near_zero: loglog_slope(|x| remainder_potential_w(x, p, s), 1e-8, 1e-6, 9)?,
                slope_near_one: loglog_slope(|e| remainder_potential_w(1.0 - e, p, s), 1e-4, 1e-2, 9)?,
                x: xs,
                w,
            };
            Ok(Rendered::new(cfg, violations, &sweep, table))
        }
        OnedimTask::Grr => {
            let suite: GrrSuite = grr_random_suite(&params, &cfg.quad, nonempty(cfg)?, cfg.trials.seed)?;
            let mut table = Table::new(&["trial", "lhs", "rhs", "ratio"]);
            for (id, c) in suite.checks.iter().enumerate() {
                table.push(vec![Cell::Int(id as u64), c.double_integral.into(), c.grr_rhs.into(), c.ratio.into()]);
            }
            let violations = suite
                .checks
                .iter()
                .enumerate()
                .filter(|(_, c)| !c.holds)
                .map(|(id, c)| format!("trial {id}: {} < {}", c.double_integral, c.grr_rhs))
                .collect();
            Ok(Rendered::new(cfg, violations, &suite, table))
        }
        OnedimTask::Interval => {
            let a = (params.ps() - 1.0) / p;
            let f = IntervalTrial::new(
                Arc::new(move |x: &[f64]| x[0].max(0.0).powf(a) * (std::f64::consts::PI * x[0]).sin()),
                0.0,
                1.0,
            )?;
            let g = IntervalTrial::new(Arc::new(|x: &[f64]| (1.0 - x[0] * x[0]).max(0.0).powi(2)), -1.0, 1.0)?;
            let one_sided = interval_remainder_check(&f, &params, &cfg.quad, cfg.c_p)?;
            let symmetric = symmetric_remainder_check(&g, &params, &cfg.quad, cfg.c_p)?;
            let mut violations = Vec::new();
            if !one_sided.holds {
                violations.push(format!("one-sided margin {:.6e}", one_sided.margin));
            }
            if !symmetric.holds {
                violations.push(format!(
                    "symmetric: {:.6e} < {:.6e}",
                    symmetric.full_remainder, symmetric.rhs_sum
                ));
            }
            let mut table = Table::new(&["case", "lhs", "rhs", "ratio"]);
            let rhs1 = one_sided.c_p * one_sided.gsr_term + one_sided.zero_order;
            table.push(vec![
                Cell::Text("one_sided".into()),
                one_sided.remainder.into(),
                rhs1.into(),
                (one_sided.remainder / rhs1).into(),
            ]);
            table.push(vec![
                Cell::Text("symmetric".into()),
                symmetric.full_remainder.into(),
                symmetric.rhs_sum.into(),
                (symmetric.full_remainder / symmetric.rhs_sum).into(),
            ]);
            Ok(Rendered::new(cfg, violations, &IntervalResult { one_sided, symmetric }, table))
        }
        OnedimTask::Key => {
            let q = cfg.q.unwrap_or(8.0);
            let best = empirical_key_constant(&params, q, &cfg.quad, &cfg.budget())?;
            let ratio = key_inequality_ratio(&IntervalTrial::from_trial(&best.trial, -1.0, 1.0)?, &params, q, &cfg.quad)?;
            let mut table = Table::new(&["restart", "best_ratio"]);
            for (r, v) in best.search.restart_values.iter().enumerate() {
                table.push(vec![Cell::Int(r as u64), (-v).into()]);
            }
            Ok(Rendered::new(cfg, Vec::new(), &KeyResult { q, best, ratio }, table))
        }
    }
}

fn verify_hardy(cfg: &RunConfig) -> Run {
    let dom = cfg.domain_or_default();
    let trials: Vec<HardyTrial> = hardy_suite(&dom, &cfg.params, cfg.weight(), &cfg.quad, nonempty(cfg)?, cfg.trials.seed)?;
    let mut table = Table::new(&["trial", "seminorm", "hardy", "remainder", "tolerance", "holds"]);
    let mut violations = Vec::new();
    for t in &trials {
        let c = &t.check;
        table.push(vec![
            t.id.into(),
            c.seminorm.into(),
            (c.hardy_constant * c.hardy).into(),
            c.remainder.into(),
            c.tolerance.into(),
            c.holds.into(),
        ]);
        if !c.holds {
            violations.push(format!("trial {}: remainder {:.6e} below -3 x tolerance {:.3e}", t.id, c.remainder, c.tolerance));
        }
    }
    Ok(Rendered::new(cfg, violations, &trials, table))
}

fn verify_hsm(cfg: &RunConfig) -> Run {
    let dom = cfg.domain_or_default();
    let trials: Vec<HsmTrial> = hsm_suite(
        cfg.trials.family,
        &dom,
        &cfg.params,
        cfg.weight(),
        &cfg.quad,
        nonempty(cfg)?,
        cfg.trials.seed,
    )?;
    let mut table = Table::new(&["trial", "sigma_emp", "error", "remainder", "lq", "flag"]);
    let mut violations = Vec::new();
    for t in &trials {
        let r = t.report.as_ref();
        table.push(vec![
            t.id.into(),
            r.map(|r| r.sigma_emp).into(),
            r.map(|r| r.sigma_error).into(),
            r.map(|r| r.remainder).into(),
            r.map(|r| r.lq).into(),
            Cell::Text(t.flag.clone().unwrap_or_default()),
        ]);
        if !t.accepted() && !t.refined_sigma.is_some_and(|v| v > 0.0) {
            violations.push(format!("trial {}: sigma_emp not positive ({:?})", t.id, t.flag));
        }
    }
    Ok(Rendered::new(cfg, violations, &trials, table))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SigmaEstimate {
    pub s: f64,
    pub sigma_emp: f64,
    pub sigma_error: f64,
    pub theta: Vec<f64>,
    pub trial: TrialFunction,
    pub evaluations: usize,
    /// Largest key-inequality ratio found in 1D, when ps > 1 there.
    pub key_constant: Option<f64>,
    pub bound: Option<SigmaBound>,
    /// Logged comparison σ_bound ≤ σ_emp + error; not asserted.
    pub bound_below_empirical: Option<bool>,
}

fn estimate_sigma(cfg: &RunConfig) -> Run {
    let dom = cfg.domain_or_default();
    let grid = cfg.sweep.clone().unwrap_or_else(|| vec![cfg.params.s]);
    let budget = cfg.budget();
    let mut out = Vec::new();
    let mut violations = Vec::new();
    let mut table = Table::new(&["s", "sigma_emp", "error", "sigma_bound"]);
    for s in grid {
        let params = FracParams { s, ..cfg.params };
        params.require_hsm()?;
        let found = minimize_sigma(cfg.trials.family, &dom, &params, cfg.weight(), &cfg.quad, &budget)?;
        let u = sample_on(&dom, &found.trial, cfg.quad.resolution)?;
        let report = hsm_report(&u, &params, cfg.weight(), &cfg.quad)?;
        let q = params.q().expect("HSM params have a Sobolev exponent");
        let key = empirical_key_constant(&params.with_dim(1), q, &cfg.quad, &budget)?;
        let bound = assemble_sigma_bound(key.constant, &params)?;
        if !(found.sigma > 0.0) {
            violations.push(format!("s = {s}: minimum sigma_emp {} is not positive", found.sigma));
        }
        table.push(vec![s.into(), found.sigma.into(), report.sigma_error.into(), bound.sigma_bound.into()]);
        out.push(SigmaEstimate {
            s,
            sigma_emp: found.sigma,
            sigma_error: report.sigma_error,
            theta: found.theta.clone(),
            trial: found.trial.clone(),
            evaluations: found.search.evaluations,
            key_constant: Some(key.constant),
            bound_below_empirical: Some(bound.sigma_bound <= found.sigma + report.sigma_error),
            bound: Some(bound),
        });
    }
    Ok(Rendered::new(cfg, violations, &out, table))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DecompositionRow {
    LineAverage { id: u64, trial: TrialFunction, check: DecompositionCheck },
    Reflection { id: u64, trial: TrialFunction, report: ReflectionReport },
}

fn decomposition_check(cfg: &RunConfig) -> Run {
    let dom = cfg.domain_or_default();
    let n = nonempty(cfg)?;
    let reflect = matches!(dom, Domain::HalfSpace { .. });
    let rows: Vec<DecompositionRow> = (0..n as u64)
        .map(|id| {
            let trial = random_interior_bump(&mut fraclab::onedim::trial_rng(cfg.trials.seed, id), &dom)?;
            let u = sample_on(&dom, &trial, cfg.quad.resolution)?;
            Ok(if reflect {
                DecompositionRow::Reflection {
                    id,
                    report: sobolev_reflection_ratio(&u, &cfg.params, &cfg.quad)?,
                    trial,
                }
            } else {
                DecompositionRow::LineAverage {
                    id,
                    check: directional_decomposition_check(&u, &cfg.params, cfg.quad.angular_for(2), &cfg.quad)?,
                    trial,
                }
            })
        })
        .collect::<Result<_, CliError>>()?;
    let mut violations = Vec::new();
    let mut table = Table::new(&["trial", "lhs", "rhs", "ratio", "relative_gap"]);
    for row in &rows {
        match row {
            DecompositionRow::LineAverage { id, check, .. } => {
                if check.relative_gap > 0.02 {
                    violations.push(format!("trial {id}: line average off by {:.3e}", check.relative_gap));
                }
                table.push(vec![
                    (*id).into(),
                    check.direct.into(),
                    check.averaged.into(),
                    (check.averaged / check.direct).into(),
                    check.relative_gap.into(),
                ]);
            }
            DecompositionRow::Reflection { id, report, .. } => {
                if !(report.ratio >= 2.0 - 1e-9 && report.ratio <= 4.0 + 1e-3) || report.identity_gap > 0.01 {
                    violations.push(format!(
                        "trial {id}: ratio {:.6} gap {:.3e}",
                        report.ratio, report.identity_gap
                    ));
                }
                table.push(vec![
                    (*id).into(),
                    report.whole_space.into(),
                    report.direct.into(),
                    report.ratio.into(),
                    report.identity_gap.into(),
                ]);
            }
        }
    }
    Ok(Rendered::new(cfg, violations, &rows, table))
}

