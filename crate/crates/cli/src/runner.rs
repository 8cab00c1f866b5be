//! Scenario execution: certificate suites, λ/p sweeps, and oracle
//! cross-validation runs.
//!
//! Work cells are evaluated (optionally in parallel) and emitted in
//! scenario order regardless of completion order, so reports are
//! reproducible byte for byte.

use crate::report::{OracleLine, Report};
use crate::scenario::{Scenario, ScenarioError};
use fitzcert::{
    fitz_exact, graph_sample, pairing, resolvent, residual_of, BoxRegion, CertKind,
    CertificateRecord, Certifier, DualVector, FunctionSpec, OperatorSpec, SpaceSpec, Vector,
};
use rayon::prelude::*;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunError {
    /// Scenario rejected before execution (exit code 2).
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    /// Setup failure after validation (exit code 1).
    #[error("run setup failed: {0}")]
    Setup(#[from] fitzcert::Error),
}

#[derive(Debug, Clone, Copy)]
struct WorkItem {
    kind: CertKind,
    lambda: f64,
    point: usize,
}

/// Executes every requested certificate over the scenario's point and λ
/// grids.
pub fn run_verify(
    scenario: &Scenario,
    jobs: usize,
    tol_override: Option<f64>,
) -> Result<Report, RunError> {
    scenario.validate()?;
    let started = Instant::now();
    let mut report = run_cells(scenario, jobs, tol_override)?;
    report.summary = Report::build_summary(&report.records);
    report.wall_ms = started.elapsed().as_millis();
    Ok(report)
}

/// Cross-product sweep over λ (and optionally p) values; each cell re-runs
/// the scenario's kinds with the overridden parameters. Empty value lists
/// produce a report with zero cells.
pub fn run_sweep(
    scenario: &Scenario,
    lambdas: &[f64],
    ps: Option<&[f64]>,
    jobs: usize,
    tol_override: Option<f64>,
) -> Result<Report, RunError> {
    scenario.validate()?;
    let started = Instant::now();
    let default_p = [scenario.space.p];
    let p_values: &[f64] = ps.unwrap_or(&default_p);
    let mut report = Report::default();
    for &p in p_values {
        for &lambda in lambdas {
            let mut cell = scenario.clone();
            cell.space.p = p;
            cell.lambda_grid = vec![lambda];
            cell.validate()?;
            let cell_report = run_cells(&cell, jobs, tol_override)?;
            report.solver_failures += cell_report.solver_failures;
            report.records.extend(cell_report.records);
        }
    }
    report.summary = Report::build_summary(&report.records);
    report.wall_ms = started.elapsed().as_millis();
    Ok(report)
}

fn run_cells(
    scenario: &Scenario,
    jobs: usize,
    tol_override: Option<f64>,
) -> Result<Report, RunError> {
    let space = scenario.build_space()?;
    let t = scenario.build_operator(&scenario.t, &space)?;
    let b = match &scenario.b {
        Some(cfg) => Some(scenario.build_operator(cfg, &space)?),
        None => None,
    };
    let points = scenario.sample_points(&space);
    let cert_tol = tol_override.unwrap_or(scenario.tolerances.certificate);

    let base_sample = match &scenario.graph_sample {
        Some(cfg) => Some(graph_sample(
            &space,
            &t,
            &BoxRegion::cube(space.dim(), cfg.range[0], cfg.range[1]),
            cfg.grid_per_dim,
            cfg.cap,
            &[],
        )?),
        None => None,
    };

    let mut items: Vec<WorkItem> = Vec::new();
    let mut prop_kinds: Vec<CertKind> = Vec::new();
    for &kind in &scenario.kinds {
        match kind {
            CertKind::SfiDistance => {
                for point in 0..points.len() {
                    items.push(WorkItem { kind, lambda: 1.0, point });
                }
            }
            CertKind::PropStrmono => prop_kinds.push(kind),
            _ => {
                for &lambda in &scenario.lambda_grid {
                    for point in 0..points.len() {
                        items.push(WorkItem { kind, lambda, point });
                    }
                }
            }
        }
    }

    let eval = |item: &WorkItem| -> CertificateRecord {
        let certifier = {
            let c = Certifier::new(&space).with_resolvent_tol(scenario.tolerances.resolvent);
            match &base_sample {
                Some(s) => c.with_sample(s),
                None => c,
            }
        };
        let (x, v) = &points[item.point];
        let result = match item.kind {
            CertKind::CarlierHilbert => certifier.carlier_hilbert(&t, x, v, item.lambda, cert_tol),
            CertKind::Gci => certifier.gci(
                b.as_ref().expect("validated: gci has B"),
                &t,
                x,
                v,
                item.lambda,
                cert_tol,
            ),
            CertKind::TwoUc => certifier.two_uc(&t, x, v, item.lambda, cert_tol),
            CertKind::SfiChain => certifier.sfi_chain(&t, x, v, item.lambda, cert_tol),
            CertKind::SfiDistance => certifier.sfi_distance(&t, x, v, cert_tol),
            CertKind::PropStrmono => unreachable!("prop_strmono handled separately"),
        };
        match result {
            Ok(record) => record,
            Err(err) => failure_record(item, &space, &t, &b, x, v, cert_tol, &err),
        }
    };

    let records: Vec<CertificateRecord> = if jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .expect("thread pool");
        pool.install(|| items.par_iter().map(eval).collect())
    } else {
        items.iter().map(eval).collect()
    };

    let mut report = Report {
        solver_failures: records.iter().filter(|r| r.rhs.is_nan()).count(),
        records,
        ..Report::default()
    };

    for _ in prop_kinds {
        let f = match &t {
            OperatorSpec::Subdifferential { f } => f.clone(),
            _ => unreachable!("validated: prop_strmono has a subdifferential T"),
        };
        let m = f.strong_convexity_constant(&space);
        let pairs: Vec<(Vector, Vector)> =
            points.iter().map(|(x, v)| (x.clone(), v.to_primal())).collect();
        let certifier = Certifier::new(&space);
        match certifier.prop_strmono(&f, m, &pairs, cert_tol) {
            Ok(record) => report.records.push(record),
            Err(err) => {
                let item = WorkItem { kind: CertKind::PropStrmono, lambda: 1.0, point: 0 };
                let (x, v) = &points[0];
                report.records.push(failure_record(&item, &space, &t, &b, x, v, cert_tol, &err));
                report.solver_failures += 1;
            }
        }
    }
    Ok(report)
}

/// A record standing in for a failed evaluation: marked failed, bound and
/// gap fields non-finite (serialized as nulls).
#[allow(clippy::too_many_arguments)]
fn failure_record(
    item: &WorkItem,
    space: &SpaceSpec,
    t: &OperatorSpec,
    b: &Option<OperatorSpec>,
    x: &Vector,
    v: &DualVector,
    tol: f64,
    err: &fitzcert::Error,
) -> CertificateRecord {
    eprintln!("evaluation failed ({}): {err}", item.kind.as_str());
    CertificateRecord {
        kind: item.kind,
        t_id: t.id(),
        b_id: b.as_ref().map(|op| op.id()),
        dim: space.dim(),
        p: space.p(),
        x: x.as_slice().to_vec(),
        v: v.as_slice().to_vec(),
        lambda: item.lambda,
        rhs: f64::NAN,
        gap_est: f64::NAN,
        gap_exact: None,
        slack: f64::NEG_INFINITY,
        pass: false,
        tol,
        resolvent_residual: None,
        comparison_rhs: None,
    }
}

// ---------------------------------------------------------------------------
// oracle mode

/// Cross-validates the closed forms relevant to the scenario against
/// brute-force references: grid suprema for Fitzpatrick values, 1-D scans
/// for proximal maps, central differences for smooth subgradients, and
/// per-coordinate scans for graph distances.
pub fn run_oracle(scenario: &Scenario) -> Result<Report, RunError> {
    scenario.validate()?;
    let started = Instant::now();
    let space = scenario.build_space()?;
    let t = scenario.build_operator(&scenario.t, &space)?;
    let points = scenario.sample_points(&space);

    let mut lines: Vec<OracleLine> = Vec::new();

    if space.is_hilbert() && space.dim() <= 2 {
        if let Some(line) = oracle_fitz_grid(&space, &t, &points) {
            lines.push(line);
        }
    }
    if let Some(line) = oracle_prox_scan(&space, &t, &points, &scenario.lambda_grid) {
        lines.push(line);
    }
    if let Some(line) = oracle_subgradient_fd(&space, &t, &points) {
        lines.push(line);
    }
    if let Some(line) = oracle_conjugate(&space, &t, &points) {
        lines.push(line);
    }
    if lines.is_empty() {
        lines.push(OracleLine {
            check: "oracle_noop".into(),
            cases: 0,
            worst_err: 0.0,
            tol: 0.0,
            pass: true,
            detail: format!("no oracle applicable to {} on p={}", t.id(), space.p()),
        });
    }

    Ok(Report {
        records: vec![],
        summary: vec![],
        oracle_lines: lines,
        solver_failures: 0,
        wall_ms: started.elapsed().as_millis(),
    })
}

/// Grid-sup reference for closed-form Fitzpatrick values (dim ≤ 2). The
/// grid sup lower-bounds the true sup; the undershoot is controlled by
/// h·L·√2 with L a gradient bound over the region.
fn oracle_fitz_grid(
    space: &SpaceSpec,
    t: &OperatorSpec,
    points: &[(Vector, DualVector)],
) -> Option<OracleLine> {
    let n = space.dim();
    let (r, steps) = (6.0f64, 201usize);
    let h = 2.0 * r / (steps - 1) as f64;
    let sample = graph_sample(space, t, &BoxRegion::cube(n, -r, r), steps, 4, &[]).ok()?;
    let mut worst = 0.0f64;
    let mut cases = 0;
    let mut detail = String::new();
    for (x, v) in points.iter().take(100) {
        let exact = fitz_exact(space, t, x, v)?;
        if !exact.is_finite() {
            continue;
        }
        let (lower, _) = fitzcert::fitz_lower(x, v, &sample).ok()?;
        let grad_bound = 40.0; // conservative for coordinates in [-5,5], region [-6,6]
        let slack = h * grad_bound * 2f64.sqrt();
        let under = exact - lower;
        if lower > exact + 1e-9 {
            return Some(OracleLine {
                check: "fitz_grid_sup".into(),
                cases,
                worst_err: lower - exact,
                tol: 1e-9,
                pass: false,
                detail: format!("grid sup exceeded closed form at x={:?}", x.as_slice()),
            });
        }
        if under > slack + 1e-6 && detail.is_empty() {
            detail = format!("undershoot {under:.3e} above grid-slack bound {slack:.3e}");
        }
        worst = worst.max((under - slack).max(0.0));
        cases += 1;
    }
    if cases == 0 {
        return None;
    }
    Some(OracleLine {
        check: "fitz_grid_sup".into(),
        cases,
        worst_err: worst,
        tol: 1e-6,
        pass: detail.is_empty(),
        detail,
    })
}

/// Per-coordinate 1-D ternary-scan reference for separable proximal maps.
fn oracle_prox_scan(
    space: &SpaceSpec,
    t: &OperatorSpec,
    points: &[(Vector, DualVector)],
    lambdas: &[f64],
) -> Option<OracleLine> {
    if !space.is_hilbert() {
        return None;
    }
    enum Kind1D {
        L1(f64),
        Box(Vec<f64>, Vec<f64>),
    }
    let kind = match t {
        OperatorSpec::Subdifferential { f: FunctionSpec::ScaledL1 { alpha } } => Kind1D::L1(*alpha),
        OperatorSpec::NormalConeBox { lo, hi }
        | OperatorSpec::Subdifferential { f: FunctionSpec::BoxIndicator { lo, hi } } => {
            Kind1D::Box(lo.as_slice().to_vec(), hi.as_slice().to_vec())
        }
        _ => return None,
    };
    let minimize = |f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64| {
        for _ in 0..200 {
            let m1 = lo + (hi - lo) / 3.0;
            let m2 = hi - (hi - lo) / 3.0;
            if f(m1) < f(m2) {
                hi = m2;
            } else {
                lo = m1;
            }
        }
        0.5 * (lo + hi)
    };
    let mut worst = 0.0f64;
    let mut cases = 0;
    for (_, v) in points.iter().take(50) {
        for &lam in lambdas {
            let res =
                resolvent(space, &OperatorSpec::Identity, t, lam, v, 1e-10).ok()?;
            for i in 0..space.dim() {
                let yi = v[i];
                let want = match &kind {
                    Kind1D::L1(alpha) => {
                        let la = lam * alpha;
                        minimize(&|w| 0.5 * (w - yi) * (w - yi) + la * w.abs(), -12.0, 12.0)
                    }
                    Kind1D::Box(lo, hi) => {
                        minimize(&|w| 0.5 * (w - yi) * (w - yi), lo[i], hi[i])
                    }
                };
                worst = worst.max((res.w[i] - want).abs());
                cases += 1;
            }
        }
    }
    Some(OracleLine {
        check: "prox_1d_scan".into(),
        cases,
        worst_err: worst,
        tol: 1e-6,
        pass: worst <= 1e-6,
        detail: String::new(),
    })
}

/// Central-difference reference for single-valued subdifferentials.
fn oracle_subgradient_fd(
    space: &SpaceSpec,
    t: &OperatorSpec,
    points: &[(Vector, DualVector)],
) -> Option<OracleLine> {
    let f = match t {
        OperatorSpec::Subdifferential { f } => match f {
            FunctionSpec::Quadratic { .. } | FunctionSpec::HalfPNormSq => f.clone(),
            _ => return None,
        },
        OperatorSpec::DualityMap => FunctionSpec::HalfPNormSq,
        _ => return None,
    };
    let op = OperatorSpec::Subdifferential { f: f.clone() };
    let eps = 1e-6;
    let mut worst = 0.0f64;
    let mut cases = 0;
    for (x, _) in points.iter().take(50) {
        // the p-norm square loses coordinate-wise smoothness on the axes
        if x.as_slice().iter().any(|c| c.abs() < 0.25) && !space.is_hilbert() {
            continue;
        }
        let g = op.representatives(space, x, 1).ok()?;
        for i in 0..space.dim() {
            let mut hi = x.as_slice().to_vec();
            let mut lo = x.as_slice().to_vec();
            hi[i] += eps;
            lo[i] -= eps;
            let fd = (f.value(space, &Vector::new(hi).ok()?)
                - f.value(space, &Vector::new(lo).ok()?))
                / (2.0 * eps);
            let rel = (fd - g[0][i]).abs() / (1.0 + g[0][i].abs());
            worst = worst.max(rel);
            cases += 1;
        }
    }
    if cases == 0 {
        return None;
    }
    Some(OracleLine {
        check: "subgradient_fd".into(),
        cases,
        worst_err: worst,
        tol: 1e-6,
        pass: worst <= 1e-6,
        detail: String::new(),
    })
}

/// Fenchel–Young spot check of closed-form conjugates on sampled pairs.
fn oracle_conjugate(
    space: &SpaceSpec,
    t: &OperatorSpec,
    points: &[(Vector, DualVector)],
) -> Option<OracleLine> {
    let f = match t {
        OperatorSpec::Subdifferential { f } => f.clone(),
        OperatorSpec::DualityMap => FunctionSpec::HalfPNormSq,
        _ => return None,
    };
    let mut worst = 0.0f64;
    let mut cases = 0;
    for (x, v) in points.iter().take(100) {
        let conj = f.conjugate(space, v)?;
        let fx = f.value(space, x);
        if !conj.is_finite() || !fx.is_finite() {
            continue;
        }
        let young = pairing(x, v).unwrap() - fx;
        worst = worst.max((young - conj).max(0.0) / (1.0 + conj.abs()));
        cases += 1;
    }
    Some(OracleLine {
        check: "conjugate_fenchel_young".into(),
        cases,
        worst_err: worst,
        tol: 1e-9,
        pass: worst <= 1e-9,
        detail: String::new(),
    })
}

/// Smoke-level use of residual_of so oracle runs also cover the plain
/// residual surface on user-visible paths.
pub fn residual_probe(
    space: &SpaceSpec,
    b: &OperatorSpec,
    t: &OperatorSpec,
    lambda: f64,
    y: &DualVector,
) -> Option<f64> {
    let r = resolvent(space, b, t, lambda, y, 1e-10).ok()?;
    Some(residual_of(space, b, t, lambda, y, &r.w))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario(json: &str) -> Scenario {
        Scenario::from_json(json).unwrap()
    }

    const IDENTITY_EQ: &str = r#"{
        "schema_version": 1,
        "space": {"dim": 2, "p": 2.0},
        "t": {"type": "identity"},
        "points": {"seed": 1, "count": 50, "range": [-5.0, 5.0]},
        "lambda_grid": [1.0],
        "kinds": ["carlier_hilbert"]
    }"#;

    #[test]
    fn verify_identity_equality_case() {
        let report = run_verify(&scenario(IDENTITY_EQ), 1, None).unwrap();
        assert!(report.all_pass());
        assert_eq!(report.records.len(), 50);
        for r in &report.records {
            assert!(r.slack.abs() <= 1e-10, "slack {}", r.slack);
        }
        assert_eq!(report.summary.len(), 1);
        let min_rows = report.summary[0].min_slack;
        let min_recs = report.records.iter().map(|r| r.slack).fold(f64::INFINITY, f64::min);
        assert_eq!(min_rows, min_recs);
    }

    #[test]
    fn verify_parallel_matches_serial() {
        let a = run_verify(&scenario(IDENTITY_EQ), 1, None).unwrap();
        let b = run_verify(&scenario(IDENTITY_EQ), 4, None).unwrap();
        let mut ja = Vec::new();
        let mut jb = Vec::new();
        a.write_jsonl(&mut ja).unwrap();
        b.write_jsonl(&mut jb).unwrap();
        assert_eq!(ja, jb);
    }

    #[test]
    fn sweep_prefactor_minimal_at_lambda_one() {
        let sc = scenario(&IDENTITY_EQ.replace("carlier_hilbert", "sfi_chain"));
        let report =
            run_sweep(&sc, &[0.25, 0.5, 1.0, 2.0, 4.0], None, 1, None).unwrap();
        assert!(report.all_pass());
        let row_at = |lam: f64| {
            report
                .summary
                .iter()
                .find(|r| r.lambda == lam)
                .unwrap_or_else(|| panic!("row for lambda {lam}"))
                .min_slack
        };
        let at_one = row_at(1.0);
        assert!(at_one.abs() <= 1e-10);
        for lam in [0.25, 0.5, 2.0, 4.0] {
            assert!(row_at(lam) > at_one, "slack at {lam} not larger");
        }
    }

    #[test]
    fn empty_sweep_is_empty_report() {
        let report = run_sweep(&scenario(IDENTITY_EQ), &[], None, 1, None).unwrap();
        assert!(report.records.is_empty());
        assert!(report.all_pass());
    }

    #[test]
    fn oracle_identity_run_passes() {
        let report = run_oracle(&scenario(IDENTITY_EQ)).unwrap();
        assert!(report.all_pass());
        assert!(!report.oracle_lines.is_empty());
    }
}
