//! Three-sided estimation of the Fitzpatrick function F_T(x, v):
//! exact closed forms where the catalog has them, conjugate-sum upper
//! bounds, and graph-sampled lower bounds with witnesses.

use crate::error::Error;
use crate::operators::{
    matvec, min_symmetric_eigenvalue, FunctionSpec, GraphPair, GraphSample, OperatorSpec,
};
use crate::space::{dot, lp_norm, sq_norm, sub, DualVector, SpaceSpec, Vector};
use crate::tol::MATRIX_SYM_TOL;
use crate::Result;
use nalgebra::DVector;

/// Lower / exact / upper estimates of F_T at one point.
#[derive(Debug, Clone)]
pub struct FitzpatrickBounds {
    /// ⟨x,v⟩ + max over the sample of ⟨x−z, w−v⟩.
    pub lower: f64,
    /// Closed-form value, when the catalog has one.
    pub exact: Option<f64>,
    /// Conjugate-sum representation value (may be +∞).
    pub upper: Option<f64>,
    /// The sampled sup term itself, i.e. lower − ⟨x,v⟩ evaluated directly.
    pub gap_lower: f64,
    /// Sample pair attaining the lower bound.
    pub witness: Option<GraphPair>,
}

/// Closed-form F_T(x, v) for the families that have one.
///
/// Identity (Hilbert): ¼‖x+v‖². Zero: ⟨x,v⟩ if v = 0, +∞ otherwise.
/// Symmetric positive-definite LinearPSD (Hilbert): ¼(v+Ax)ᵀA⁻¹(v+Ax),
/// the stationary value of the concave inner sup. Absence is a value, not
/// an error.
pub fn fitz_exact(space: &SpaceSpec, t: &OperatorSpec, x: &Vector, v: &DualVector) -> Option<f64> {
    match t {
        OperatorSpec::Identity => {
            if !space.is_hilbert() {
                return None;
            }
            let s: f64 = x
                .as_slice()
                .iter()
                .zip(v.as_slice())
                .map(|(a, b)| (a + b) * (a + b))
                .sum();
            Some(0.25 * s)
        }
        OperatorSpec::Zero => {
            if v.is_zero() {
                Some(dot(x.as_slice(), v.as_slice()))
            } else {
                Some(f64::INFINITY)
            }
        }
        OperatorSpec::LinearPSD { a } => {
            if !space.is_hilbert() {
                return None;
            }
            let scale = a.amax().max(1.0);
            for i in 0..a.nrows() {
                for j in 0..i {
                    if (a[(i, j)] - a[(j, i)]).abs() > MATRIX_SYM_TOL * scale {
                        return None;
                    }
                }
            }
            if min_symmetric_eigenvalue(a) <= MATRIX_SYM_TOL * scale {
                return None;
            }
            let u: Vec<f64> = v
                .as_slice()
                .iter()
                .zip(matvec(a, x.as_slice()))
                .map(|(vi, axi)| vi + axi)
                .collect();
            let sol = a.clone().lu().solve(&DVector::from_column_slice(&u))?;
            Some(0.25 * dot(&u, sol.as_slice()))
        }
        _ => None,
    }
}

/// Conjugate-sum upper bound h(x,v) = f(x) + f*(v) for subdifferential-type
/// operators; F_T is the smallest convex representation, so any h dominates
/// it. Returns `None` when the catalog has no closed-form conjugate.
pub fn fitz_upper(space: &SpaceSpec, t: &OperatorSpec, x: &Vector, v: &DualVector) -> Option<f64> {
    match t {
        // I = ∂(½‖·‖₂²); the conjugacy is pairing-based, so this holds on
        // every exponent
        OperatorSpec::Identity => {
            Some(0.5 * sq_norm(x.as_slice()) + 0.5 * sq_norm(v.as_slice()))
        }
        OperatorSpec::Zero => Some(if v.is_zero() { 0.0 } else { f64::INFINITY }),
        OperatorSpec::LinearPSD { a } => {
            let scale = a.amax().max(1.0);
            for i in 0..a.nrows() {
                for j in 0..i {
                    if (a[(i, j)] - a[(j, i)]).abs() > MATRIX_SYM_TOL * scale {
                        return None;
                    }
                }
            }
            let ax = matvec(a, x.as_slice());
            let fx = 0.5 * dot(x.as_slice(), &ax);
            let q = FunctionSpec::Quadratic {
                q: a.clone(),
                b: DualVector::zeros(a.nrows()),
            };
            Some(fx + q.conjugate(space, v)?)
        }
        OperatorSpec::DualityMap => {
            let nx = lp_norm(x.as_slice(), space.p());
            let nv = lp_norm(v.as_slice(), space.q());
            Some(0.5 * (nx * nx + nv * nv))
        }
        OperatorSpec::NormalConeBox { lo, hi } => {
            let f = FunctionSpec::BoxIndicator { lo: lo.clone(), hi: hi.clone() };
            Some(f.value(space, x) + f.conjugate(space, v)?)
        }
        OperatorSpec::Subdifferential { f } => Some(f.value(space, x) + f.conjugate(space, v)?),
    }
}

/// Graph-sampled lower bound: ⟨x,v⟩ + max over the sample of ⟨x−z, w−v⟩,
/// with the attaining pair. Monotone in sample inclusion.
pub fn fitz_lower(
    x: &Vector,
    v: &DualVector,
    sample: &GraphSample,
) -> Result<(f64, GraphPair)> {
    let (gap, witness) = lower_gap(x, v, sample)?;
    Ok((dot(x.as_slice(), v.as_slice()) + gap, witness))
}

/// The sup term of `fitz_lower` evaluated directly (used for gap fields,
/// avoiding the subtract-back roundtrip).
pub(crate) fn lower_gap(
    x: &Vector,
    v: &DualVector,
    sample: &GraphSample,
) -> Result<(f64, GraphPair)> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut best = f64::NEG_INFINITY;
    let mut arg = 0usize;
    for (i, pair) in sample.pairs().iter().enumerate() {
        let d = sub(x.as_slice(), pair.z.as_slice());
        let e = sub(pair.w.as_slice(), v.as_slice());
        let g = dot(&d, &e);
        if g > best {
            best = g;
            arg = i;
        }
    }
    Ok((best, sample.pairs()[arg].clone()))
}

/// Assembles all three sides.
///
/// The sampled sup is floored at zero: the Fitzpatrick inequality
/// guarantees a nonnegative gap for every maximally monotone T, so zero is
/// itself a valid lower bound even when the sample is too sparse to show
/// it. The witness is present only when a sample pair attains the reported
/// bound.
pub fn fitz_bounds(
    space: &SpaceSpec,
    t: &OperatorSpec,
    x: &Vector,
    v: &DualVector,
    sample: &GraphSample,
) -> Result<FitzpatrickBounds> {
    let (sampled, witness) = lower_gap(x, v, sample)?;
    let gap_lower = sampled.max(0.0);
    let lower = dot(x.as_slice(), v.as_slice()) + gap_lower;
    Ok(FitzpatrickBounds {
        lower,
        exact: fitz_exact(space, t, x, v),
        upper: fitz_upper(space, t, x, v),
        gap_lower,
        witness: (sampled >= 0.0).then_some(witness),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{graph_sample, BoxRegion};

    fn hilbert2() -> SpaceSpec {
        SpaceSpec::hilbert(2)
    }

    fn vec2(a: f64, b: f64) -> Vector {
        Vector::new(vec![a, b]).unwrap()
    }

    fn dual2(a: f64, b: f64) -> DualVector {
        DualVector::new(vec![a, b]).unwrap()
    }

    #[test]
    fn identity_closed_form() {
        let s = hilbert2();
        // F_I(x, v) = ¼‖x+v‖²
        let got = fitz_exact(&s, &OperatorSpec::Identity, &vec2(1.0, 0.0), &dual2(0.0, 1.0));
        assert_eq!(got, Some(0.5));
        // on the graph: x = v gives ‖x‖² and zero gap
        let x = vec2(0.7, -0.3);
        let f = fitz_exact(&s, &OperatorSpec::Identity, &x, &x.to_dual()).unwrap();
        assert!((f - sq_norm(x.as_slice())).abs() < 1e-15);
    }

    #[test]
    fn zero_operator_exact() {
        let s = hilbert2();
        let x = vec2(2.0, 3.0);
        assert_eq!(fitz_exact(&s, &OperatorSpec::Zero, &x, &DualVector::zeros(2)), Some(0.0));
        assert_eq!(
            fitz_exact(&s, &OperatorSpec::Zero, &x, &dual2(0.0, 1.0)),
            Some(f64::INFINITY)
        );
    }

    #[test]
    fn upper_equals_exact_on_identity_diagonal() {
        let s = hilbert2();
        let x = vec2(1.3, -0.2);
        let up = fitz_upper(&s, &OperatorSpec::Identity, &x, &x.to_dual()).unwrap();
        let ex = fitz_exact(&s, &OperatorSpec::Identity, &x, &x.to_dual()).unwrap();
        assert!((up - ex).abs() < 1e-12);
    }

    #[test]
    fn upper_infinite_outside_conjugate_domain() {
        let s = hilbert2();
        let t = OperatorSpec::subdifferential(FunctionSpec::ScaledL1 { alpha: 1.0 });
        let up = fitz_upper(&s, &t, &vec2(1.0, 1.0), &dual2(2.0, 0.0)).unwrap();
        assert_eq!(up, f64::INFINITY);
    }

    #[test]
    fn lower_hits_exact_with_analytic_maximizer() {
        // the inner sup of ⟨x−z, z−v⟩ is attained at z = (x+v)/2
        let s = hilbert2();
        let x = vec2(2.0, -1.0);
        let v = dual2(0.5, 3.0);
        let zstar = Vector::new(vec![(x[0] + v[0]) / 2.0, (x[1] + v[1]) / 2.0]).unwrap();
        let mut sample = GraphSample::empty();
        sample
            .push_checked(&s, &OperatorSpec::Identity, zstar.clone(), zstar.to_dual())
            .unwrap();
        let (lower, wit) = fitz_lower(&x, &v, &sample).unwrap();
        let exact = fitz_exact(&s, &OperatorSpec::Identity, &x, &v).unwrap();
        assert!((lower - exact).abs() < 1e-12, "{lower} vs {exact}");
        assert_eq!(wit.z.as_slice(), zstar.as_slice());
    }

    #[test]
    fn lower_monotone_in_sample_inclusion() {
        let s = hilbert2();
        let x = vec2(1.0, 2.0);
        let v = dual2(-0.5, 0.5);
        let small = graph_sample(
            &s,
            &OperatorSpec::Identity,
            &BoxRegion::cube(2, -1.0, 1.0),
            3,
            8,
            &[],
        )
        .unwrap();
        let big = graph_sample(
            &s,
            &OperatorSpec::Identity,
            &BoxRegion::cube(2, -2.0, 2.0),
            9,
            8,
            &[],
        )
        .unwrap();
        let (l1, _) = fitz_lower(&x, &v, &small).unwrap();
        let (l2, _) = fitz_lower(&x, &v, &big).unwrap();
        assert!(l2 >= l1 - 1e-15);
    }

    #[test]
    fn gap_zero_at_sampled_graph_point() {
        let s = hilbert2();
        let x = vec2(0.25, -0.75);
        let v = x.to_dual();
        let mut sample = graph_sample(
            &s,
            &OperatorSpec::Identity,
            &BoxRegion::cube(2, -1.0, 1.0),
            3,
            8,
            &[],
        )
        .unwrap();
        sample.push_checked(&s, &OperatorSpec::Identity, x.clone(), v.clone()).unwrap();
        let b = fitz_bounds(&s, &OperatorSpec::Identity, &x, &v, &sample).unwrap();
        // (x, v) on the graph: lower reaches the pairing, gap 0 at the point
        assert!(b.gap_lower.abs() < 1e-12);
        assert!(b.gap_lower >= -1e-10);
    }

    #[test]
    fn empty_sample_is_an_error() {
        let x = vec2(1.0, 0.0);
        assert!(matches!(
            fitz_lower(&x, &x.to_dual(), &GraphSample::empty()),
            Err(Error::EmptySample)
        ));
    }

    #[test]
    fn sandwich_on_sampled_points() {
        let s = hilbert2();
        let t = OperatorSpec::Identity;
        let sample =
            graph_sample(&s, &t, &BoxRegion::cube(2, -3.0, 3.0), 13, 8, &[]).unwrap();
        for (x, v) in [
            (vec2(0.3, 1.0), dual2(0.2, -0.4)),
            (vec2(-2.0, 0.5), dual2(1.0, 1.0)),
        ] {
            let b = fitz_bounds(&s, &t, &x, &v, &sample).unwrap();
            let (lo, ex, up) = (b.lower, b.exact.unwrap(), b.upper.unwrap());
            assert!(lo <= ex + 1e-9 + 1e-9 * ex.abs());
            assert!(ex <= up + 1e-9 + 1e-9 * up.abs());
        }
    }

    #[test]
    fn identity_exact_midpoint_convexity() {
        let s = hilbert2();
        let pts = [
            (vec2(0.0, 0.0), dual2(1.0, 1.0)),
            (vec2(2.0, -1.0), dual2(0.0, 3.0)),
        ];
        let f = |x: &Vector, v: &DualVector| {
            fitz_exact(&s, &OperatorSpec::Identity, x, v).unwrap()
        };
        let (x0, v0) = &pts[0];
        let (x1, v1) = &pts[1];
        let mid_x = Vector::new(vec![(x0[0] + x1[0]) / 2.0, (x0[1] + x1[1]) / 2.0]).unwrap();
        let mid_v = DualVector::new(vec![(v0[0] + v1[0]) / 2.0, (v0[1] + v1[1]) / 2.0]).unwrap();
        assert!(f(&mid_x, &mid_v) <= 0.5 * f(x0, v0) + 0.5 * f(x1, v1) + 1e-12);
    }
}
