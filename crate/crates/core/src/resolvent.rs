//! Generalized resolvents w = (B + λT)⁻¹(y) for the operator catalog.
//!
//! Closed forms and direct linear solves cover the Hilbert-space catalog;
//! the ℓᵖ paths (B the duality mapping, p < 2) run Douglas–Rachford
//! splitting with an active-set Newton polish. Every solve path certifies
//! its result through the same exact set-distance residual, so downstream
//! certificates never depend on trusting a solver.

use crate::error::Error;
use crate::operators::{matvec, FunctionSpec, OperatorSpec};
use crate::space::{
    add, axpy, duality_map_raw, lp_norm, pow_abs, scale, sub, DualVector, SpaceSpec, Vector,
};
use crate::tol::{MAX_SOLVER_ITERS, RESOLVENT_TOL_ITER};
use crate::Result;
use nalgebra::{DMatrix, DVector};

/// How a resolvent was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    ClosedForm,
    LinearSolve,
    ConvexMin,
    ScalarNewton,
}

/// Solution of y ∈ Bw + λTw with a certified residual.
#[derive(Debug, Clone)]
pub struct ResolventResult {
    pub w: Vector,
    /// The element of B(w) used (B is single-valued on the certified catalog).
    pub w_prime: DualVector,
    /// The induced element (y − w')/λ of T(w); exact membership for
    /// closed-form paths, membership within `residual` for iterative paths.
    pub t_element: DualVector,
    /// Certified upper bound on the ℓ^q distance from y to Bw + λT(w):
    /// the exact set distance of the floats plus an evaluation-roundoff
    /// allowance. Never reported as an exact zero claim.
    pub residual: f64,
    pub iterations: usize,
    pub method: SolveMethod,
    /// Certified optimality gap of the underlying convex program, from the
    /// residual and the strong-monotonicity constant of B (iterative paths).
    pub opt_gap: Option<f64>,
}

/// Computes w = (B + λT)⁻¹(y).
///
/// B must be catalog-certified strongly monotone on the given space; λ > 0.
/// `tol` is the raw residual target for iterative paths (closed-form and
/// linear paths are exact up to roundoff and ignore it).
pub fn resolvent(
    space: &SpaceSpec,
    b: &OperatorSpec,
    t: &OperatorSpec,
    lambda: f64,
    y: &DualVector,
    tol: f64,
) -> Result<ResolventResult> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidLambda(lambda));
    }
    if y.len() != space.dim() {
        return Err(Error::DimensionMismatch { expected: space.dim(), got: y.len() });
    }
    let c = b
        .strong_mono_constant(space)
        .ok_or_else(|| Error::NotStronglyMonotone(b.id()))?;
    t.validate(space)?;

    let (w, method, iterations) = match b {
        OperatorSpec::Identity => euclid_prox(space, t, lambda, y.as_slice())?,
        OperatorSpec::DualityMap => {
            if space.is_hilbert() {
                euclid_prox(space, t, lambda, y.as_slice())?
            } else {
                lp_resolvent(space, t, lambda, y.as_slice(), tol)?
            }
        }
        OperatorSpec::LinearPSD { a } => linear_psd_resolvent(space, a, t, lambda, y, tol)?,
        _ => return Err(Error::NotStronglyMonotone(b.id())),
    };

    let w = Vector::from_raw(w);
    let w_prime = b
        .eval_single(space, &w)
        .expect("certified B operators are single-valued");
    let t_element = DualVector::from_raw(scale(
        &sub(y.as_slice(), w_prime.as_slice()),
        1.0 / lambda,
    ));
    let raw = raw_residual(space, b, t, lambda, y, &w);
    let residual = certify_residual(space, raw, y, &w_prime, &t_element, lambda);
    let opt_gap = match method {
        SolveMethod::ConvexMin | SolveMethod::ScalarNewton => Some(raw * raw / c),
        _ => None,
    };
    Ok(ResolventResult { w, w_prime, t_element, residual, iterations, method, opt_gap })
}

/// Plain (uncertified) residual: the exact ℓ^q distance from y to the set
/// Bw + λT(w) of the stored floats, +∞ when w is outside the domain of T.
pub fn residual_of(
    space: &SpaceSpec,
    b: &OperatorSpec,
    t: &OperatorSpec,
    lambda: f64,
    y: &DualVector,
    w: &Vector,
) -> f64 {
    raw_residual(space, b, t, lambda, y, w)
}

fn raw_residual(
    space: &SpaceSpec,
    b: &OperatorSpec,
    t: &OperatorSpec,
    lambda: f64,
    y: &DualVector,
    w: &Vector,
) -> f64 {
    let bw = match b.eval_single(space, w) {
        Some(bw) => bw,
        None => return f64::INFINITY,
    };
    let u = sub(y.as_slice(), bw.as_slice());
    t.set_distance_scaled(space, w, &u, lambda)
}

/// Residual certification: the measured distance plus a forward-error
/// allowance for evaluating it in f64. Claiming an exactly zero residual
/// would overstate what floating-point evaluation can certify.
fn certify_residual(
    space: &SpaceSpec,
    raw: f64,
    y: &DualVector,
    w_prime: &DualVector,
    t_element: &DualVector,
    lambda: f64,
) -> f64 {
    let q = space.q();
    let scale = lp_norm(y.as_slice(), q)
        + lp_norm(w_prime.as_slice(), q)
        + (1.0 + lambda) * lp_norm(t_element.as_slice(), q);
    raw + (space.dim() as f64 + 8.0) * f64::EPSILON * scale
}

// ---------------------------------------------------------------------------
// Euclidean proximal path (B = I on a Hilbert space; also the inner prox
// machinery reused by the splitting solver)

/// Resolvent of λT with respect to the Euclidean pairing, i.e. the proximal
/// map when T is a subdifferential.
fn euclid_prox(
    space: &SpaceSpec,
    t: &OperatorSpec,
    lambda: f64,
    y: &[f64],
) -> Result<(Vec<f64>, SolveMethod, usize)> {
    match t {
        OperatorSpec::Identity => {
            Ok((scale(y, 1.0 / (1.0 + lambda)), SolveMethod::ClosedForm, 0))
        }
        OperatorSpec::Zero => Ok((y.to_vec(), SolveMethod::ClosedForm, 0)),
        OperatorSpec::LinearPSD { a } => {
            let m = DMatrix::identity(y.len(), y.len()) + a * lambda;
            Ok((lu_solve(&m, y)?, SolveMethod::LinearSolve, 0))
        }
        OperatorSpec::DualityMap => {
            if space.is_hilbert() {
                Ok((scale(y, 1.0 / (1.0 + lambda)), SolveMethod::ClosedForm, 0))
            } else {
                let (w, it) = prox_half_pnorm_sq(y, lambda, space.p());
                Ok((w, SolveMethod::ScalarNewton, it))
            }
        }
        OperatorSpec::NormalConeBox { lo, hi } => {
            Ok((clamp_box(y, lo.as_slice(), hi.as_slice()), SolveMethod::ClosedForm, 0))
        }
        OperatorSpec::Subdifferential { f } => match f {
            FunctionSpec::Quadratic { q, b } => {
                let m = DMatrix::identity(y.len(), y.len()) + q * lambda;
                let rhs = axpy(y, -lambda, b.as_slice());
                Ok((lu_solve(&m, &rhs)?, SolveMethod::LinearSolve, 0))
            }
            FunctionSpec::ScaledL1 { alpha } => {
                Ok((soft_threshold(y, lambda * alpha), SolveMethod::ClosedForm, 0))
            }
            FunctionSpec::BoxIndicator { lo, hi } => {
                Ok((clamp_box(y, lo.as_slice(), hi.as_slice()), SolveMethod::ClosedForm, 0))
            }
            FunctionSpec::HalfPNormSq => {
                if space.is_hilbert() {
                    Ok((scale(y, 1.0 / (1.0 + lambda)), SolveMethod::ClosedForm, 0))
                } else {
                    let (w, it) = prox_half_pnorm_sq(y, lambda, space.p());
                    Ok((w, SolveMethod::ScalarNewton, it))
                }
            }
            FunctionSpec::StronglyConvexShift { base, m } => {
                if !space.is_hilbert() {
                    return Err(Error::Unsupported(
                        "strongly convex shifts have a proximal scaling only in the Hilbert case"
                            .into(),
                    ));
                }
                // prox_{λ(base + m/2||.||²)}(y) = prox_{λ' base}(y/(1+λm))
                let denom = 1.0 + lambda * m;
                let inner = OperatorSpec::Subdifferential { f: (**base).clone() };
                euclid_prox(space, &inner, lambda / denom, &scale(y, 1.0 / denom))
            }
        },
    }
}

fn soft_threshold(y: &[f64], t: f64) -> Vec<f64> {
    y.iter()
        .map(|&c| {
            let m = c.abs() - t;
            if m > 0.0 {
                c.signum() * m
            } else {
                0.0
            }
        })
        .collect()
}

fn clamp_box(y: &[f64], lo: &[f64], hi: &[f64]) -> Vec<f64> {
    y.iter()
        .zip(lo.iter().zip(hi))
        .map(|(&c, (&l, &h))| c.clamp(l, h))
        .collect()
}

fn lu_solve(m: &DMatrix<f64>, rhs: &[f64]) -> Result<Vec<f64>> {
    m.clone()
        .lu()
        .solve(&DVector::from_column_slice(rhs))
        .map(|v| v.as_slice().to_vec())
        .ok_or_else(|| Error::SolverFailure {
            residual: f64::INFINITY,
            iterations: 0,
            best: vec![],
        })
}

// ---------------------------------------------------------------------------
// Scalar-reduced proximal map of ½‖·‖ₚ²

/// Solves w + ηJ_p(w) = u.
///
/// With s = ‖w‖ₚ fixed, the system decouples into monotone scalar
/// equations mᵢ + κ mᵢ^{p−1} = |uᵢ| with κ = η s^{2−p}; the outer equation
/// ‖w(s)‖ₚ = s has a unique root in [0, ‖u‖ₚ], found by bisection with the
/// inner solves done by safeguarded Newton.
pub(crate) fn prox_half_pnorm_sq(u: &[f64], eta: f64, p: f64) -> (Vec<f64>, usize) {
    if p == 2.0 {
        return (scale(u, 1.0 / (1.0 + eta)), 0);
    }
    if u.iter().all(|&c| c == 0.0) {
        return (vec![0.0; u.len()], 0);
    }
    let au: Vec<f64> = u.iter().map(|c| c.abs()).collect();
    let n_u = lp_norm(&au, p);
    let mut iters = 0usize;
    let magnitudes = |s: f64| -> Vec<f64> {
        let kappa = eta * pow_abs(s, 2.0 - p);
        au.iter().map(|&a| scalar_resolvent(a, kappa, p)).collect()
    };
    let (mut lo, mut hi) = (0.0f64, n_u);
    for _ in 0..90 {
        iters += 1;
        let s = 0.5 * (lo + hi);
        let w = magnitudes(s);
        if lp_norm(&w, p) > s {
            lo = s;
        } else {
            hi = s;
        }
        if hi - lo <= f64::EPSILON * n_u {
            break;
        }
    }
    let w = magnitudes(0.5 * (lo + hi));
    let out = u
        .iter()
        .zip(&w)
        .map(|(&c, &m)| if c < 0.0 { -m } else { m })
        .collect();
    (out, iters)
}

/// Solves m + κ m^{p−1} = a for m >= 0 (a >= 0, κ >= 0, 1 < p < 2).
fn scalar_resolvent(a: f64, kappa: f64, p: f64) -> f64 {
    if a == 0.0 || kappa == 0.0 {
        return a;
    }
    if p == 1.5 {
        // μ = √m turns the equation into μ² + κμ = a
        let mu = 0.5 * (-kappa + (kappa * kappa + 4.0 * a).sqrt());
        return mu * mu;
    }
    let (mut lo, mut hi) = (0.0f64, a);
    let mut m = a;
    for _ in 0..80 {
        let f = m + kappa * pow_abs(m, p - 1.0) - a;
        if f > 0.0 {
            hi = m;
        } else {
            lo = m;
        }
        if hi - lo <= f64::EPSILON * a {
            break;
        }
        let next = if m > 0.0 {
            let d = 1.0 + kappa * (p - 1.0) * pow_abs(m, p - 2.0);
            m - f / d
        } else {
            0.5 * (lo + hi)
        };
        m = if next > lo && next < hi { next } else { 0.5 * (lo + hi) };
    }
    m
}

// ---------------------------------------------------------------------------
// Douglas–Rachford splitting with active-set Newton polish

/// Closure applying B to a point.
type ApplyFn<'a> = Box<dyn Fn(&[f64]) -> Vec<f64> + 'a>;

/// Resolvent in ℓᵖ geometry: y ∈ J_p(w) + λT(w), p < 2.
fn lp_resolvent(
    space: &SpaceSpec,
    t: &OperatorSpec,
    lambda: f64,
    y: &[f64],
    tol: f64,
) -> Result<(Vec<f64>, SolveMethod, usize)> {
    let p = space.p();
    match t {
        // (1+λ) J_p(w) = y and J_p(w) = y are invertible through the dual map
        OperatorSpec::Zero => {
            Ok((duality_map_raw(y, space.q()), SolveMethod::ClosedForm, 0))
        }
        OperatorSpec::DualityMap
        | OperatorSpec::Subdifferential { f: FunctionSpec::HalfPNormSq } => {
            let scaled = scale(y, 1.0 / (1.0 + lambda));
            Ok((duality_map_raw(&scaled, space.q()), SolveMethod::ClosedForm, 0))
        }
        // J_p(w) + λw = y  ⇔  w + (1/λ)J_p(w) = y/λ: one scalar-reduced prox
        OperatorSpec::Identity => {
            let (w, it) = prox_half_pnorm_sq(&scale(y, 1.0 / lambda), 1.0 / lambda, p);
            Ok((w, SolveMethod::ScalarNewton, it))
        }
        OperatorSpec::Subdifferential { f: FunctionSpec::StronglyConvexShift { .. } } => {
            Err(Error::Unsupported(
                "strongly convex shifts as T are only supported on Hilbert spaces".into(),
            ))
        }
        _ => {
            let apply_b: ApplyFn = Box::new(move |w: &[f64]| duality_map_raw(w, p));
            let prox_b: ApplyFn = Box::new(move |u: &[f64]| prox_half_pnorm_sq(u, 1.0, p).0);
            splitting_solve(space, t, lambda, y, tol, apply_b, prox_b, None)
        }
    }
}

/// Resolvent with B = LinearPSD(A) on a Hilbert space.
fn linear_psd_resolvent(
    space: &SpaceSpec,
    a: &DMatrix<f64>,
    t: &OperatorSpec,
    lambda: f64,
    y: &DualVector,
    tol: f64,
) -> Result<(Vec<f64>, SolveMethod, usize)> {
    let n = space.dim();
    let id = DMatrix::identity(n, n);
    match t {
        OperatorSpec::Identity => {
            Ok((lu_solve(&(a + &id * lambda), y.as_slice())?, SolveMethod::LinearSolve, 0))
        }
        OperatorSpec::DualityMap
        | OperatorSpec::Subdifferential { f: FunctionSpec::HalfPNormSq } => {
            // J = I in the Hilbert case
            Ok((lu_solve(&(a + &id * lambda), y.as_slice())?, SolveMethod::LinearSolve, 0))
        }
        OperatorSpec::Zero => Ok((lu_solve(a, y.as_slice())?, SolveMethod::LinearSolve, 0)),
        OperatorSpec::LinearPSD { a: c } => {
            Ok((lu_solve(&(a + c * lambda), y.as_slice())?, SolveMethod::LinearSolve, 0))
        }
        OperatorSpec::Subdifferential { f: FunctionSpec::Quadratic { q, b } } => {
            let rhs = axpy(y.as_slice(), -lambda, b.as_slice());
            Ok((lu_solve(&(a + q * lambda), &rhs)?, SolveMethod::LinearSolve, 0))
        }
        _ => {
            // prox of the monotone linear part: (I + ηA)x = u, factored once
            let factored = (&id + a).clone().lu();
            let apply_b: ApplyFn = Box::new(move |w: &[f64]| matvec(a, w));
            let prox_b: ApplyFn = Box::new(move |u: &[f64]| {
                factored
                    .solve(&DVector::from_column_slice(u))
                    .expect("I + A is invertible for monotone A")
                    .as_slice()
                    .to_vec()
            });
            splitting_solve(space, t, lambda, y.as_slice(), tol, apply_b, prox_b, Some(a))
        }
    }
}

/// Douglas–Rachford on A₁ = B(·) − y, A₂ = λT with unit step, reporting the
/// iterate produced by the T-side prox (it carries the exact active
/// pattern, where the set-distance residual is meaningful).
#[allow(clippy::too_many_arguments)]
fn splitting_solve(
    space: &SpaceSpec,
    t: &OperatorSpec,
    lambda: f64,
    y: &[f64],
    tol: f64,
    apply_b: ApplyFn,
    prox_b_unit: ApplyFn,
    linear_b: Option<&DMatrix<f64>>,
) -> Result<(Vec<f64>, SolveMethod, usize)> {
    let tol = if tol > 0.0 { tol } else { RESOLVENT_TOL_ITER };
    let t_prox = make_t_prox(space, t, lambda)?;
    let residual_at = |w: &[f64]| -> f64 {
        let u = sub(y, &apply_b(w));
        t.set_distance_scaled(space, &Vector::from_raw(w.to_vec()), &u, lambda)
    };

    let mut z = y.to_vec();
    let mut best = (f64::INFINITY, z.clone());
    for k in 1..=MAX_SOLVER_ITERS {
        // prox of η(B - y) at unit step: shift by ηy then resolve B
        let w = prox_b_unit(&add(&z, y));
        let x2 = t_prox(&sub(&scale(&w, 2.0), &z));
        z = add(&z, &sub(&x2, &w));

        let r = residual_at(&x2);
        if r < best.0 {
            best = (r, x2.clone());
        }
        if r <= tol {
            return Ok((x2, SolveMethod::ConvexMin, k));
        }
        if k % 50 == 0 {
            if let Some(polished) = newton_polish(space, t, lambda, y, &x2, linear_b) {
                let rp = residual_at(&polished);
                if rp <= tol {
                    return Ok((polished, SolveMethod::ConvexMin, k));
                }
                if rp < best.0 {
                    best = (rp, polished);
                }
            }
        }
    }
    Err(Error::SolverFailure {
        residual: best.0,
        iterations: MAX_SOLVER_ITERS,
        best: best.1,
    })
}

/// Euclidean prox of λT at unit step, with factorizations hoisted out of
/// the iteration loop. The closure owns everything it needs.
fn make_t_prox(
    space: &SpaceSpec,
    t: &OperatorSpec,
    lambda: f64,
) -> Result<Box<dyn Fn(&[f64]) -> Vec<f64>>> {
    let n = space.dim();
    let p = space.p();
    Ok(match t {
        OperatorSpec::Identity => Box::new(move |u| scale(u, 1.0 / (1.0 + lambda))),
        OperatorSpec::Zero => Box::new(|u| u.to_vec()),
        OperatorSpec::LinearPSD { a } => {
            let factored = (DMatrix::identity(n, n) + a * lambda).lu();
            Box::new(move |u| {
                factored
                    .solve(&DVector::from_column_slice(u))
                    .expect("I + λC invertible for monotone C")
                    .as_slice()
                    .to_vec()
            })
        }
        OperatorSpec::DualityMap => Box::new(move |u| prox_half_pnorm_sq(u, lambda, p).0),
        OperatorSpec::NormalConeBox { lo, hi } => {
            let (lo, hi) = (lo.as_slice().to_vec(), hi.as_slice().to_vec());
            Box::new(move |u| clamp_box(u, &lo, &hi))
        }
        OperatorSpec::Subdifferential { f } => match f {
            FunctionSpec::Quadratic { q, b } => {
                let factored = (DMatrix::identity(n, n) + q * lambda).lu();
                let b = b.as_slice().to_vec();
                Box::new(move |u| {
                    let rhs = axpy(u, -lambda, &b);
                    factored
                        .solve(&DVector::from_column_slice(&rhs))
                        .expect("I + λQ invertible for PSD Q")
                        .as_slice()
                        .to_vec()
                })
            }
            FunctionSpec::ScaledL1 { alpha } => {
                let step = lambda * alpha;
                Box::new(move |u| soft_threshold(u, step))
            }
            FunctionSpec::BoxIndicator { lo, hi } => {
                let (lo, hi) = (lo.as_slice().to_vec(), hi.as_slice().to_vec());
                Box::new(move |u| clamp_box(u, &lo, &hi))
            }
            FunctionSpec::HalfPNormSq => Box::new(move |u| prox_half_pnorm_sq(u, lambda, p).0),
            FunctionSpec::StronglyConvexShift { base, m } => {
                if !space.is_hilbert() {
                    return Err(Error::Unsupported(
                        "strongly convex shifts as T are only supported on Hilbert spaces".into(),
                    ));
                }
                let denom = 1.0 + lambda * m;
                let inner = OperatorSpec::Subdifferential { f: (**base).clone() };
                let inner_prox = make_t_prox(space, &inner, lambda / denom)?;
                Box::new(move |u| inner_prox(&scale(u, 1.0 / denom)))
            }
        },
    })
}

/// One damped-Newton polish on the smooth reduced system implied by the
/// active pattern of the current iterate. Returns a candidate only; the
/// caller re-checks the exact residual before accepting it.
fn newton_polish(
    space: &SpaceSpec,
    t: &OperatorSpec,
    lambda: f64,
    y: &[f64],
    x: &[f64],
    linear_b: Option<&DMatrix<f64>>,
) -> Option<Vec<f64>> {
    let n = x.len();
    // active pattern: coordinates pinned to a value vs. free
    let mut pinned = vec![None::<f64>; n];
    let mut l1_sign = vec![0.0f64; n];
    match t {
        OperatorSpec::Subdifferential { f: FunctionSpec::ScaledL1 { .. } } => {
            for i in 0..n {
                if x[i] == 0.0 {
                    pinned[i] = Some(0.0);
                } else {
                    l1_sign[i] = x[i].signum();
                }
            }
        }
        OperatorSpec::NormalConeBox { lo, hi }
        | OperatorSpec::Subdifferential { f: FunctionSpec::BoxIndicator { lo, hi } } => {
            for i in 0..n {
                if x[i] == lo[i] || x[i] == hi[i] {
                    pinned[i] = Some(x[i]);
                }
            }
        }
        OperatorSpec::Identity
        | OperatorSpec::LinearPSD { .. }
        | OperatorSpec::Subdifferential { f: FunctionSpec::Quadratic { .. } } => {}
        _ => return None,
    }
    let free: Vec<usize> = (0..n).filter(|&i| pinned[i].is_none()).collect();
    if free.is_empty() {
        return None;
    }
    // the J_p Jacobian needs |w_i|^{p-2}; skip if a free coordinate sits on
    // the axis where that blows up
    if linear_b.is_none() && free.iter().any(|&i| x[i].abs() < 1e-12) {
        return None;
    }

    let alpha = match t {
        OperatorSpec::Subdifferential { f: FunctionSpec::ScaledL1 { alpha } } => *alpha,
        _ => 0.0,
    };
    let residual_vec = |w: &[f64]| -> Vec<f64> {
        let bw = match linear_b {
            Some(a) => matvec(a, w),
            None => duality_map_raw(w, space.p()),
        };
        let tw: Vec<f64> = match t {
            OperatorSpec::Identity => w.to_vec(),
            OperatorSpec::LinearPSD { a } => matvec(a, w),
            OperatorSpec::Subdifferential { f: FunctionSpec::Quadratic { q, b } } => {
                add(&matvec(q, w), b.as_slice())
            }
            OperatorSpec::Subdifferential { f: FunctionSpec::ScaledL1 { .. } } => {
                l1_sign.iter().map(|s| alpha * s).collect()
            }
            _ => vec![0.0; n], // box: zero on interior coordinates
        };
        free.iter().map(|&i| bw[i] + lambda * tw[i] - y[i]).collect()
    };

    let mut w = x.to_vec();
    let mut f = residual_vec(&w);
    let mut fnorm = lp_norm(&f, 2.0);
    for _ in 0..25 {
        if fnorm <= 1e-14 * (1.0 + lp_norm(y, 2.0)) {
            break;
        }
        let jac = reduced_jacobian(space, t, lambda, &w, &free, linear_b)?;
        let step = jac.lu().solve(&DVector::from_column_slice(&f))?;
        let mut damping = 1.0;
        let mut improved = false;
        for _ in 0..30 {
            let mut cand = w.clone();
            for (k, &i) in free.iter().enumerate() {
                cand[i] = w[i] - damping * step[k];
            }
            let fc = residual_vec(&cand);
            let fcn = lp_norm(&fc, 2.0);
            if fcn < fnorm {
                w = cand;
                f = fc;
                fnorm = fcn;
                improved = true;
                break;
            }
            damping *= 0.5;
        }
        if !improved {
            break;
        }
    }
    Some(w)
}

fn reduced_jacobian(
    space: &SpaceSpec,
    t: &OperatorSpec,
    lambda: f64,
    w: &[f64],
    free: &[usize],
    linear_b: Option<&DMatrix<f64>>,
) -> Option<DMatrix<f64>> {
    let n = w.len();
    let b_jac: DMatrix<f64> = match linear_b {
        Some(a) => a.clone(),
        None => {
            // dJ_p = (2−p)‖w‖^{2(1−p)} g gᵀ + (p−1)‖w‖^{2−p} diag(|wᵢ|^{p−2})
            let p = space.p();
            let nrm = lp_norm(w, p);
            if nrm == 0.0 {
                return None;
            }
            let g: Vec<f64> = w.iter().map(|&c| c.signum() * pow_abs(c, p - 1.0)).collect();
            let s1 = (2.0 - p) * pow_abs(nrm, 2.0 * (1.0 - p));
            let s2 = (p - 1.0) * pow_abs(nrm, 2.0 - p);
            DMatrix::from_fn(n, n, |i, j| {
                let outer = s1 * g[i] * g[j];
                if i == j {
                    outer + s2 * pow_abs(w[i], p - 2.0)
                } else {
                    outer
                }
            })
        }
    };
    let t_jac: Option<DMatrix<f64>> = match t {
        OperatorSpec::Identity => Some(DMatrix::identity(n, n)),
        OperatorSpec::LinearPSD { a } => Some(a.clone()),
        OperatorSpec::Subdifferential { f: FunctionSpec::Quadratic { q, .. } } => Some(q.clone()),
        _ => None, // L1 / box contribute nothing smooth on the free set
    };
    let mut m = DMatrix::zeros(free.len(), free.len());
    for (r, &i) in free.iter().enumerate() {
        for (c, &j) in free.iter().enumerate() {
            let mut val = b_jac[(i, j)];
            if let Some(tj) = &t_jac {
                val += lambda * tj[(i, j)];
            }
            m[(r, c)] = val;
        }
    }
    Some(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::BoxRegion;
    use crate::space::dot;

    fn hilbert2() -> SpaceSpec {
        SpaceSpec::hilbert(2)
    }

    fn dual2(a: f64, b: f64) -> DualVector {
        DualVector::new(vec![a, b]).unwrap()
    }

    fn vec2(a: f64, b: f64) -> Vector {
        Vector::new(vec![a, b]).unwrap()
    }

    #[test]
    fn identity_pair_closed_form() {
        let s = hilbert2();
        for lam in [0.1, 1.0, 7.5] {
            let y = dual2(3.0, -2.0);
            let r = resolvent(&s, &OperatorSpec::Identity, &OperatorSpec::Identity, lam, &y, 0.0)
                .unwrap();
            for i in 0..2 {
                assert!((r.w[i] - y[i] / (1.0 + lam)).abs() < 1e-15);
            }
            assert_eq!(r.method, SolveMethod::ClosedForm);
            assert!(r.residual < 1e-12);
        }
    }

    #[test]
    fn zero_operator_returns_argument() {
        let s = hilbert2();
        let y = dual2(0.4, 13.0);
        let r =
            resolvent(&s, &OperatorSpec::Identity, &OperatorSpec::Zero, 2.0, &y, 0.0).unwrap();
        assert_eq!(r.w.as_slice(), y.as_slice());
        assert_eq!(residual_of(&s, &OperatorSpec::Identity, &OperatorSpec::Zero, 2.0, &y, &r.w), 0.0);
    }

    #[test]
    fn soft_threshold_frozen_oracle() {
        // 1-D brute-force minimization of ½(w−y)² + |w| gives (1, 0)
        let s = hilbert2();
        let t = OperatorSpec::subdifferential(FunctionSpec::ScaledL1 { alpha: 1.0 });
        let r = resolvent(&s, &OperatorSpec::Identity, &t, 1.0, &dual2(2.0, -0.5), 0.0).unwrap();
        assert_eq!(r.w.as_slice(), &[1.0, 0.0]);
        assert_eq!(r.method, SolveMethod::ClosedForm);
    }

    #[test]
    fn box_projection_residual_exact_zero() {
        let s = hilbert2();
        let t = OperatorSpec::NormalConeBox { lo: vec2(0.0, 0.0), hi: vec2(1.0, 1.0) };
        let y = dual2(2.0, 0.25);
        let r = resolvent(&s, &OperatorSpec::Identity, &t, 0.7, &y, 0.0).unwrap();
        assert_eq!(r.w.as_slice(), &[1.0, 0.25]);
        assert_eq!(residual_of(&s, &OperatorSpec::Identity, &t, 0.7, &y, &r.w), 0.0);
    }

    #[test]
    fn residual_scales_with_perturbation() {
        let s = hilbert2();
        let lam = 0.5;
        let y = dual2(1.0, -2.0);
        let r = resolvent(&s, &OperatorSpec::Identity, &OperatorSpec::Identity, lam, &y, 0.0)
            .unwrap();
        let delta = 1e-3;
        let w_bad = Vector::new(vec![r.w[0] + delta, r.w[1]]).unwrap();
        let got = residual_of(&s, &OperatorSpec::Identity, &OperatorSpec::Identity, lam, &y, &w_bad);
        // y − (1+λ)w perturbs by (1+λ)δ in one coordinate
        assert!((got - (1.0 + lam) * delta).abs() < 1e-9, "{got}");
    }

    #[test]
    fn resolvent_identity_at_graph_points() {
        let s = hilbert2();
        let t = OperatorSpec::subdifferential(FunctionSpec::Quadratic {
            q: DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]),
            b: dual2(0.3, -0.1),
        });
        let x = vec2(0.7, -1.2);
        let v = t.eval_single(&s, &x).unwrap();
        for lam in [0.25, 1.0, 4.0] {
            let y = DualVector::from_raw(axpy(x.as_slice(), lam, v.as_slice()));
            let r = resolvent(&s, &OperatorSpec::Identity, &t, lam, &y, 0.0).unwrap();
            for i in 0..2 {
                assert!((r.w[i] - x[i]).abs() < 1e-10, "lam={lam}");
            }
        }
    }

    #[test]
    fn firm_nonexpansiveness_sampled() {
        let s = hilbert2();
        let t = OperatorSpec::subdifferential(FunctionSpec::ScaledL1 { alpha: 0.8 });
        let pts = [
            (dual2(2.0, 1.0), dual2(-1.0, 0.3)),
            (dual2(0.1, -0.2), dual2(3.0, 3.0)),
            (dual2(-4.0, 2.0), dual2(1.0, -1.0)),
        ];
        for (y1, y2) in pts {
            let w1 = resolvent(&s, &OperatorSpec::Identity, &t, 1.3, &y1, 0.0).unwrap().w;
            let w2 = resolvent(&s, &OperatorSpec::Identity, &t, 1.3, &y2, 0.0).unwrap().w;
            let dw = sub(w1.as_slice(), w2.as_slice());
            let dy = sub(y1.as_slice(), y2.as_slice());
            assert!(dot(&dw, &dw) <= dot(&dw, &dy) + 1e-10);
        }
    }

    #[test]
    fn lambda_continuity_smoke() {
        let s = hilbert2();
        let t = OperatorSpec::subdifferential(FunctionSpec::Quadratic {
            q: DMatrix::identity(2, 2) * 1.5,
            b: DualVector::zeros(2),
        });
        let y = dual2(3.0, -1.0);
        let grid: Vec<f64> = (0..20).map(|k| 0.5 + 0.1 * k as f64).collect();
        let ws: Vec<Vec<f64>> = grid
            .iter()
            .map(|&lam| {
                resolvent(&s, &OperatorSpec::Identity, &t, lam, &y, 0.0).unwrap().w.into_inner()
            })
            .collect();
        let jumps: Vec<f64> = ws.windows(2).map(|w| lp_norm(&sub(&w[1], &w[0]), 2.0)).collect();
        let mut sorted = jumps.clone();
        sorted.sort_by(f64::total_cmp);
        let median = sorted[sorted.len() / 2];
        for j in &jumps {
            assert!(*j <= 10.0 * median + 1e-9, "jump {j} vs median {median}");
        }
    }

    #[test]
    fn rejects_non_strongly_monotone_b() {
        let s = hilbert2();
        let err = resolvent(
            &s,
            &OperatorSpec::Zero,
            &OperatorSpec::Identity,
            1.0,
            &dual2(1.0, 1.0),
            0.0,
        );
        assert!(matches!(err, Err(Error::NotStronglyMonotone(_))));
        let p15 = SpaceSpec::new(2, 1.5).unwrap();
        let err = resolvent(
            &p15,
            &OperatorSpec::Identity,
            &OperatorSpec::Identity,
            1.0,
            &dual2(1.0, 1.0),
            0.0,
        );
        assert!(matches!(err, Err(Error::NotStronglyMonotone(_))));
    }

    #[test]
    fn rejects_bad_lambda() {
        let s = hilbert2();
        assert!(matches!(
            resolvent(&s, &OperatorSpec::Identity, &OperatorSpec::Identity, 0.0, &dual2(1.0, 1.0), 0.0),
            Err(Error::InvalidLambda(_))
        ));
    }

    #[test]
    fn scalar_prox_solves_membership_equation() {
        for &p in &[1.25, 1.5, 1.75] {
            for (u, eta) in [
                (vec![3.0, -1.0, 0.2], 1.0),
                (vec![0.0, 5.0, -2.0], 0.3),
                (vec![-8.0, 0.001, 4.0], 6.0),
            ] {
                let (w, _) = prox_half_pnorm_sq(&u, eta, p);
                let j = duality_map_raw(&w, p);
                for i in 0..3 {
                    let res = w[i] + eta * j[i] - u[i];
                    assert!(res.abs() < 1e-10, "p={p} res={res}");
                }
            }
        }
    }

    #[test]
    fn lp_resolvent_duality_map_pairs() {
        // (1+λ)J(w) = y has the closed-form solution through the dual map
        let s = SpaceSpec::new(3, 1.5).unwrap();
        let y = DualVector::new(vec![2.0, -1.0, 0.5]).unwrap();
        let r = resolvent(&s, &OperatorSpec::DualityMap, &OperatorSpec::DualityMap, 0.8, &y, 0.0)
            .unwrap();
        assert!(r.residual < 1e-12, "residual {}", r.residual);
        assert_eq!(r.method, SolveMethod::ClosedForm);

        let r = resolvent(&s, &OperatorSpec::DualityMap, &OperatorSpec::Zero, 3.0, &y, 0.0)
            .unwrap();
        assert!(r.residual < 1e-12);
    }

    #[test]
    fn lp_resolvent_identity_scalar_newton() {
        let s = SpaceSpec::new(3, 1.25).unwrap();
        let y = DualVector::new(vec![2.0, -3.0, 0.1]).unwrap();
        let r = resolvent(&s, &OperatorSpec::DualityMap, &OperatorSpec::Identity, 2.0, &y, 1e-10)
            .unwrap();
        assert_eq!(r.method, SolveMethod::ScalarNewton);
        assert!(r.residual < 1e-9, "residual {}", r.residual);
    }

    #[test]
    fn lp_resolvent_l1_via_splitting() {
        let s = SpaceSpec::new(3, 1.5).unwrap();
        let t = OperatorSpec::subdifferential(FunctionSpec::ScaledL1 { alpha: 1.0 });
        for (y, lam) in [
            (vec![3.0, -1.0, 0.2], 2.0),
            (vec![6.0, 5.0, -4.0], 0.5),
            (vec![0.3, -0.2, 0.1], 1.0),
        ] {
            let y = DualVector::new(y).unwrap();
            let r = resolvent(&s, &OperatorSpec::DualityMap, &t, lam, &y, 1e-10).unwrap();
            assert!(r.residual < 1e-8, "residual {} lam {lam}", r.residual);
            assert_eq!(r.method, SolveMethod::ConvexMin);
            assert!(r.opt_gap.unwrap() < 1e-8);
        }
    }

    #[test]
    fn lp_resolvent_box_and_quadratic() {
        let s = SpaceSpec::new(2, 1.75).unwrap();
        let boxt = OperatorSpec::NormalConeBox { lo: vec2(-1.0, -1.0), hi: vec2(1.0, 1.0) };
        let y = dual2(4.0, 0.3);
        let r = resolvent(&s, &OperatorSpec::DualityMap, &boxt, 1.0, &y, 1e-10).unwrap();
        assert!(r.residual < 1e-8, "box residual {}", r.residual);

        let quad = OperatorSpec::subdifferential(FunctionSpec::Quadratic {
            q: DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]),
            b: dual2(0.1, -0.4),
        });
        let r = resolvent(&s, &OperatorSpec::DualityMap, &quad, 0.7, &y, 1e-10).unwrap();
        assert!(r.residual < 1e-8, "quad residual {}", r.residual);
    }

    #[test]
    fn linear_psd_b_with_l1() {
        let s = hilbert2();
        let b = OperatorSpec::LinearPSD { a: DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 3.0]) };
        let t = OperatorSpec::subdifferential(FunctionSpec::ScaledL1 { alpha: 1.0 });
        let y = dual2(5.0, -0.5);
        let r = resolvent(&s, &b, &t, 1.0, &y, 1e-10).unwrap();
        assert!(r.residual < 1e-9, "residual {}", r.residual);
        // 1-D decoupled oracle: 2w + sign(w) = 5 -> w = 2; 3w - ... at -0.5: |y|<1 -> 0
        assert!((r.w[0] - 2.0).abs() < 1e-9);
        assert_eq!(r.w[1], 0.0);
    }

    #[test]
    fn graph_region_solver_consistency() {
        // resolvent of the sampled graph region problem matches direct clamp
        let s = hilbert2();
        let t = OperatorSpec::NormalConeBox { lo: vec2(0.0, 0.0), hi: vec2(1.0, 1.0) };
        let sample = crate::operators::graph_sample(
            &s,
            &t,
            &BoxRegion::cube(2, 0.0, 1.0),
            3,
            8,
            &[],
        )
        .unwrap();
        assert!(!sample.is_empty());
    }
}
