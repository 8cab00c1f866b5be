//! Catalog of convex functions and maximally monotone operators with exact
//! graph-membership tests, representative enumeration for set-valued points,
//! graph sampling, and strong-monotonicity probing.
//!
//! Certificates are only as sound as graph membership is exact, so every
//! operator here admits a membership test expressed in sign/interval
//! conditions or in a deterministic re-evaluation of a single-valued
//! formula; nothing is checked "approximately".

use crate::error::Error;
use crate::space::{
    add, axpy, dot, duality_map_raw, lp_norm, scale, sq_norm, sub, DualVector, SpaceSpec, Vector,
};
use crate::tol::MATRIX_SYM_TOL;
use crate::Result;
use nalgebra::{DMatrix, DVector};

/// Ray ladder used to sample the unbounded normal-cone directions at a box
/// face. Any exact member yields a valid lower bound, so the particular
/// ladder only affects tightness, not soundness.
pub const NORMAL_CONE_LADDER: [f64; 5] = [0.0, 0.5, 1.0, 2.0, 4.0];

/// Convex, lower-semicontinuous functions with closed-form conjugates (or a
/// closed-form description of the conjugate domain).
#[derive(Debug, Clone, PartialEq)]
pub enum FunctionSpec {
    /// f(x) = ½ xᵀQx + ⟨b, x⟩ with Q symmetric PSD.
    Quadratic { q: DMatrix<f64>, b: DualVector },
    /// f(x) = α‖x‖₁ with α > 0.
    ScaledL1 { alpha: f64 },
    /// Indicator of the box [lo, hi].
    BoxIndicator { lo: Vector, hi: Vector },
    /// f(x) = ½‖x‖ₚ² in the ambient space norm; its subdifferential is the
    /// normalized duality mapping.
    HalfPNormSq,
    /// base + (m/2)‖·‖² in the ambient space norm; strongly convex with
    /// constant m by construction.
    StronglyConvexShift { base: Box<FunctionSpec>, m: f64 },
}

impl FunctionSpec {
    /// Validates structural invariants (symmetry, PSD-ness, lo <= hi, ...).
    pub fn validate(&self, space: &SpaceSpec) -> Result<()> {
        match self {
            FunctionSpec::Quadratic { q, b } => {
                if q.nrows() != space.dim() || q.ncols() != space.dim() {
                    return Err(Error::InvalidSpec(format!(
                        "quadratic matrix is {}x{}, space dim {}",
                        q.nrows(),
                        q.ncols(),
                        space.dim()
                    )));
                }
                if b.len() != space.dim() {
                    return Err(Error::DimensionMismatch { expected: space.dim(), got: b.len() });
                }
                let scale = q.amax().max(1.0);
                for i in 0..q.nrows() {
                    for j in 0..i {
                        if (q[(i, j)] - q[(j, i)]).abs() > MATRIX_SYM_TOL * scale {
                            return Err(Error::InvalidSpec("quadratic matrix not symmetric".into()));
                        }
                    }
                }
                if min_symmetric_eigenvalue(q) < -MATRIX_SYM_TOL * scale {
                    return Err(Error::InvalidSpec("quadratic matrix not PSD".into()));
                }
                Ok(())
            }
            FunctionSpec::ScaledL1 { alpha } => {
                if !(*alpha > 0.0) {
                    return Err(Error::InvalidSpec(format!("scaled_l1 alpha {alpha} must be > 0")));
                }
                Ok(())
            }
            FunctionSpec::BoxIndicator { lo, hi } => validate_box(space, lo, hi),
            FunctionSpec::HalfPNormSq => Ok(()),
            FunctionSpec::StronglyConvexShift { base, m } => {
                if !(*m > 0.0) {
                    return Err(Error::InvalidSpec(format!("shift constant m {m} must be > 0")));
                }
                base.validate(space)
            }
        }
    }

    /// f(x) as an extended real; +∞ only for indicator-type variants.
    pub fn value(&self, space: &SpaceSpec, x: &Vector) -> f64 {
        match self {
            FunctionSpec::Quadratic { q, b } => {
                let qx = matvec(q, x.as_slice());
                0.5 * dot(x.as_slice(), &qx) + dot(x.as_slice(), b.as_slice())
            }
            FunctionSpec::ScaledL1 { alpha } => {
                alpha * x.as_slice().iter().map(|c| c.abs()).sum::<f64>()
            }
            FunctionSpec::BoxIndicator { lo, hi } => {
                let inside = x
                    .as_slice()
                    .iter()
                    .zip(lo.as_slice().iter().zip(hi.as_slice()))
                    .all(|(&c, (&l, &h))| l <= c && c <= h);
                if inside {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            FunctionSpec::HalfPNormSq => {
                let n = lp_norm(x.as_slice(), space.p());
                0.5 * n * n
            }
            FunctionSpec::StronglyConvexShift { base, m } => {
                let n = lp_norm(x.as_slice(), space.p());
                base.value(space, x) + 0.5 * m * n * n
            }
        }
    }

    /// Fenchel conjugate f*(v) in closed form; `None` when the catalog has
    /// no closed form (strongly convex shifts outside the Hilbert case).
    pub fn conjugate(&self, space: &SpaceSpec, v: &DualVector) -> Option<f64> {
        match self {
            FunctionSpec::Quadratic { q, b } => {
                Some(quadratic_conjugate(q, b.as_slice(), v.as_slice()))
            }
            FunctionSpec::ScaledL1 { alpha } => {
                let linf = v.as_slice().iter().fold(0.0f64, |a, c| a.max(c.abs()));
                Some(if linf <= *alpha { 0.0 } else { f64::INFINITY })
            }
            FunctionSpec::BoxIndicator { lo, hi } => Some(
                v.as_slice()
                    .iter()
                    .zip(lo.as_slice().iter().zip(hi.as_slice()))
                    .map(|(&c, (&l, &h))| (l * c).max(h * c))
                    .sum(),
            ),
            FunctionSpec::HalfPNormSq => {
                let n = lp_norm(v.as_slice(), space.q());
                Some(0.5 * n * n)
            }
            FunctionSpec::StronglyConvexShift { base, m } => {
                if !space.is_hilbert() {
                    return None;
                }
                match base.as_ref() {
                    // (base + m/2 ||.||^2)* via per-variant Moreau-type forms
                    FunctionSpec::ScaledL1 { alpha } => Some(
                        v.as_slice()
                            .iter()
                            .map(|c| {
                                let t = (c.abs() - alpha).max(0.0);
                                t * t / (2.0 * m)
                            })
                            .sum(),
                    ),
                    FunctionSpec::Quadratic { q, b } => {
                        let shifted = q + DMatrix::identity(q.nrows(), q.ncols()) * *m;
                        Some(quadratic_conjugate(&shifted, b.as_slice(), v.as_slice()))
                    }
                    FunctionSpec::BoxIndicator { lo, hi } => Some(
                        v.as_slice()
                            .iter()
                            .zip(lo.as_slice().iter().zip(hi.as_slice()))
                            .map(|(&c, (&l, &h))| {
                                let x = (c / m).clamp(l, h);
                                c * x - 0.5 * m * x * x
                            })
                            .sum(),
                    ),
                    FunctionSpec::HalfPNormSq => {
                        let n = sq_norm(v.as_slice());
                        Some(0.5 * n / (1.0 + m))
                    }
                    FunctionSpec::StronglyConvexShift { base: inner, m: m2 } => {
                        let merged = FunctionSpec::StronglyConvexShift {
                            base: inner.clone(),
                            m: m + m2,
                        };
                        merged.conjugate(space, v)
                    }
                }
            }
        }
    }

    /// Catalog-certified strong-convexity constant with respect to the
    /// space norm (0 when no constant is certified). For quadratics on
    /// p < 2 the Euclidean eigenvalue bound is rescaled by the norm
    /// equivalence factor n^{1-2/p}.
    pub fn strong_convexity_constant(&self, space: &SpaceSpec) -> f64 {
        match self {
            FunctionSpec::Quadratic { q, .. } => {
                let lam = min_symmetric_eigenvalue(q).max(0.0);
                if space.is_hilbert() {
                    lam
                } else {
                    lam * (space.dim() as f64).powf(1.0 - 2.0 / space.p())
                }
            }
            FunctionSpec::ScaledL1 { .. } | FunctionSpec::BoxIndicator { .. } => 0.0,
            FunctionSpec::HalfPNormSq => 1.0,
            FunctionSpec::StronglyConvexShift { base, m } => {
                base.strong_convexity_constant(space) + m
            }
        }
    }

    /// Subgradient representatives of ∂f at x; vertex enumeration for the
    /// set-valued variants, truncated to `cap`.
    fn subgradient_representatives(
        &self,
        space: &SpaceSpec,
        x: &Vector,
        cap: usize,
    ) -> Result<Vec<Vec<f64>>> {
        match self {
            FunctionSpec::Quadratic { q, b } => {
                Ok(vec![add(&matvec(q, x.as_slice()), b.as_slice())])
            }
            FunctionSpec::ScaledL1 { alpha } => {
                // vertex set of the subdifferential box, lexicographic over
                // sign patterns (minus before plus) at the kink coordinates
                let choices: Vec<Vec<f64>> = x
                    .as_slice()
                    .iter()
                    .map(|&c| {
                        if c == 0.0 {
                            vec![-alpha, *alpha]
                        } else {
                            vec![alpha * c.signum()]
                        }
                    })
                    .collect();
                Ok(cartesian(&choices, cap))
            }
            FunctionSpec::BoxIndicator { lo, hi } => {
                normal_cone_representatives(x, lo, hi, cap)
            }
            FunctionSpec::HalfPNormSq => Ok(vec![duality_map_raw(x.as_slice(), space.p())]),
            FunctionSpec::StronglyConvexShift { base, m } => {
                let j = duality_map_raw(x.as_slice(), space.p());
                let reps = base.subgradient_representatives(space, x, cap)?;
                Ok(reps.into_iter().map(|r| axpy(&r, *m, &j)).collect())
            }
        }
    }

    fn in_domain(&self, x: &Vector) -> bool {
        match self {
            FunctionSpec::BoxIndicator { lo, hi } => in_box(x.as_slice(), lo, hi),
            FunctionSpec::StronglyConvexShift { base, .. } => base.in_domain(x),
            _ => true,
        }
    }

    pub fn id(&self) -> String {
        match self {
            FunctionSpec::Quadratic { q, .. } => format!("quadratic({}x{})", q.nrows(), q.ncols()),
            FunctionSpec::ScaledL1 { alpha } => format!("scaled_l1({alpha})"),
            FunctionSpec::BoxIndicator { .. } => "box_indicator".into(),
            FunctionSpec::HalfPNormSq => "half_pnorm_sq".into(),
            FunctionSpec::StronglyConvexShift { base, m } => {
                format!("shift({}; m={m})", base.id())
            }
        }
    }
}

/// Maximally monotone operators T, B: X ⇉ X*.
#[derive(Debug, Clone, PartialEq)]
pub enum OperatorSpec {
    Identity,
    Zero,
    /// w = Ax with A + Aᵀ PSD (A itself may be non-symmetric).
    LinearPSD { a: DMatrix<f64> },
    Subdifferential { f: FunctionSpec },
    NormalConeBox { lo: Vector, hi: Vector },
    /// The normalized duality mapping of the ambient space.
    DualityMap,
}

impl OperatorSpec {
    pub fn subdifferential(f: FunctionSpec) -> Self {
        OperatorSpec::Subdifferential { f }
    }

    pub fn validate(&self, space: &SpaceSpec) -> Result<()> {
        match self {
            OperatorSpec::Identity | OperatorSpec::Zero | OperatorSpec::DualityMap => Ok(()),
            OperatorSpec::LinearPSD { a } => {
                if a.nrows() != space.dim() || a.ncols() != space.dim() {
                    return Err(Error::InvalidSpec(format!(
                        "operator matrix is {}x{}, space dim {}",
                        a.nrows(),
                        a.ncols(),
                        space.dim()
                    )));
                }
                let sym = symmetric_part(a);
                let scale = a.amax().max(1.0);
                if min_symmetric_eigenvalue(&sym) < -MATRIX_SYM_TOL * scale {
                    return Err(Error::InvalidSpec("A + A^T is not PSD".into()));
                }
                Ok(())
            }
            OperatorSpec::Subdifferential { f } => f.validate(space),
            OperatorSpec::NormalConeBox { lo, hi } => validate_box(space, lo, hi),
        }
    }

    /// True if x lies in the domain of T.
    pub fn in_domain(&self, x: &Vector) -> bool {
        match self {
            OperatorSpec::NormalConeBox { lo, hi } => in_box(x.as_slice(), lo, hi),
            OperatorSpec::Subdifferential { f } => f.in_domain(x),
            _ => true,
        }
    }

    /// The unique value T(x) for single-valued variants, `None` otherwise.
    pub fn eval_single(&self, space: &SpaceSpec, x: &Vector) -> Option<DualVector> {
        match self {
            OperatorSpec::Identity => Some(x.to_dual()),
            OperatorSpec::Zero => Some(DualVector::zeros(x.len())),
            OperatorSpec::LinearPSD { a } => {
                Some(DualVector::from_raw(matvec(a, x.as_slice())))
            }
            OperatorSpec::DualityMap => Some(space.duality_map(x)),
            OperatorSpec::Subdifferential { f } => match f {
                FunctionSpec::Quadratic { q, b } => Some(DualVector::from_raw(add(
                    &matvec(q, x.as_slice()),
                    b.as_slice(),
                ))),
                FunctionSpec::HalfPNormSq => Some(space.duality_map(x)),
                FunctionSpec::StronglyConvexShift { base, m } => {
                    let base_op = OperatorSpec::Subdifferential { f: (**base).clone() };
                    let g = base_op.eval_single(space, x)?;
                    let j = space.duality_map(x);
                    Some(DualVector::from_raw(axpy(g.as_slice(), *m, j.as_slice())))
                }
                _ => None,
            },
            OperatorSpec::NormalConeBox { .. } => None,
        }
    }

    /// A finite list of exact members of T(x), truncated to `cap` with a
    /// deterministic ordering. Errors if x is outside the domain.
    pub fn representatives(
        &self,
        space: &SpaceSpec,
        x: &Vector,
        cap: usize,
    ) -> Result<Vec<DualVector>> {
        if !self.in_domain(x) {
            return Err(Error::Domain(format!("{} is undefined at the given point", self.id())));
        }
        let raw = match self {
            OperatorSpec::Identity => vec![x.as_slice().to_vec()],
            OperatorSpec::Zero => vec![vec![0.0; x.len()]],
            OperatorSpec::LinearPSD { a } => vec![matvec(a, x.as_slice())],
            OperatorSpec::DualityMap => vec![duality_map_raw(x.as_slice(), space.p())],
            OperatorSpec::Subdifferential { f } => {
                f.subgradient_representatives(space, x, cap)?
            }
            OperatorSpec::NormalConeBox { lo, hi } => {
                normal_cone_representatives(x, lo, hi, cap)?
            }
        };
        Ok(raw.into_iter().take(cap.max(1)).map(DualVector::from_raw).collect())
    }

    /// Exact membership test w ∈ T(z).
    ///
    /// For condition-based variants (ℓ₁ subdifferentials, box normal cones)
    /// the stored coordinates are checked against the defining sign and
    /// interval conditions, which the floats satisfy in real arithmetic.
    /// For single-valued formulas the test is bitwise equality with a
    /// deterministic re-evaluation.
    pub fn contains(&self, space: &SpaceSpec, z: &Vector, w: &DualVector) -> bool {
        if z.len() != w.len() {
            return false;
        }
        match self {
            OperatorSpec::Identity => z.as_slice() == w.as_slice(),
            OperatorSpec::Zero => w.is_zero(),
            OperatorSpec::LinearPSD { a } => matvec(a, z.as_slice()) == w.as_slice(),
            OperatorSpec::DualityMap => {
                duality_map_raw(z.as_slice(), space.p()) == w.as_slice()
            }
            OperatorSpec::NormalConeBox { lo, hi } => {
                normal_cone_contains(z, w.as_slice(), lo, hi)
            }
            OperatorSpec::Subdifferential { f } => match f {
                FunctionSpec::Quadratic { q, b } => {
                    add(&matvec(q, z.as_slice()), b.as_slice()) == w.as_slice()
                }
                FunctionSpec::ScaledL1 { alpha } => {
                    z.as_slice().iter().zip(w.as_slice()).all(|(&zi, &wi)| {
                        if zi > 0.0 {
                            wi == *alpha
                        } else if zi < 0.0 {
                            wi == -*alpha
                        } else {
                            -*alpha <= wi && wi <= *alpha
                        }
                    })
                }
                FunctionSpec::BoxIndicator { lo, hi } => {
                    normal_cone_contains(z, w.as_slice(), lo, hi)
                }
                FunctionSpec::HalfPNormSq => {
                    duality_map_raw(z.as_slice(), space.p()) == w.as_slice()
                }
                FunctionSpec::StronglyConvexShift { base, m } => {
                    // w is the float image of an exact base member plus m*J(z)
                    let j = scale(&duality_map_raw(z.as_slice(), space.p()), *m);
                    let u = sub(w.as_slice(), &j);
                    let base_op = OperatorSpec::Subdifferential { f: (**base).clone() };
                    let snapped = match base_op.nearest_member(space, z, &u) {
                        Some(s) => s,
                        None => return false,
                    };
                    add(&snapped, &j) == w.as_slice()
                }
            },
        }
    }

    /// The member of T(z) nearest (coordinatewise) to the hint, when the
    /// set structure allows an exact closed-form projection. Single-valued
    /// variants ignore the hint.
    pub fn nearest_member(
        &self,
        space: &SpaceSpec,
        z: &Vector,
        hint: &[f64],
    ) -> Option<Vec<f64>> {
        if !self.in_domain(z) {
            return None;
        }
        match self {
            OperatorSpec::Identity => Some(z.as_slice().to_vec()),
            OperatorSpec::Zero => Some(vec![0.0; z.len()]),
            OperatorSpec::LinearPSD { a } => Some(matvec(a, z.as_slice())),
            OperatorSpec::DualityMap => Some(duality_map_raw(z.as_slice(), space.p())),
            OperatorSpec::NormalConeBox { lo, hi } => {
                Some(clamp_to_normal_cone(z, hint, lo, hi))
            }
            OperatorSpec::Subdifferential { f } => match f {
                FunctionSpec::Quadratic { q, b } => {
                    Some(add(&matvec(q, z.as_slice()), b.as_slice()))
                }
                FunctionSpec::ScaledL1 { alpha } => Some(
                    z.as_slice()
                        .iter()
                        .zip(hint)
                        .map(|(&zi, &hi_)| {
                            if zi > 0.0 {
                                *alpha
                            } else if zi < 0.0 {
                                -*alpha
                            } else {
                                hi_.clamp(-*alpha, *alpha)
                            }
                        })
                        .collect(),
                ),
                FunctionSpec::BoxIndicator { lo, hi } => {
                    Some(clamp_to_normal_cone(z, hint, lo, hi))
                }
                FunctionSpec::HalfPNormSq => Some(duality_map_raw(z.as_slice(), space.p())),
                FunctionSpec::StronglyConvexShift { base, m } => {
                    let j = scale(&duality_map_raw(z.as_slice(), space.p()), *m);
                    let u = sub(hint, &j);
                    let base_op = OperatorSpec::Subdifferential { f: (**base).clone() };
                    let snapped = base_op.nearest_member(space, z, &u)?;
                    Some(add(&snapped, &j))
                }
            },
        }
    }

    /// Exact ℓ^q distance from a dual point u to the scaled set t·T(z),
    /// +∞ when z is outside the domain. This is what certifies resolvent
    /// residuals.
    pub fn set_distance_scaled(
        &self,
        space: &SpaceSpec,
        z: &Vector,
        u: &[f64],
        t: f64,
    ) -> f64 {
        if !self.in_domain(z) {
            return f64::INFINITY;
        }
        let q = space.q();
        match self {
            OperatorSpec::NormalConeBox { lo, hi }
            | OperatorSpec::Subdifferential { f: FunctionSpec::BoxIndicator { lo, hi } } => {
                let per: Vec<f64> = z
                    .as_slice()
                    .iter()
                    .zip(u.iter().zip(lo.as_slice().iter().zip(hi.as_slice())))
                    .map(|(&zi, (&ui, (&l, &h)))| {
                        if l == h {
                            0.0
                        } else if zi == l {
                            ui.max(0.0)
                        } else if zi == h {
                            (-ui).max(0.0)
                        } else {
                            ui.abs()
                        }
                    })
                    .collect();
                lp_norm(&per, q)
            }
            OperatorSpec::Subdifferential { f: FunctionSpec::ScaledL1 { alpha } } => {
                let ta = t * alpha;
                let per: Vec<f64> = z
                    .as_slice()
                    .iter()
                    .zip(u)
                    .map(|(&zi, &ui)| {
                        if zi == 0.0 {
                            (ui.abs() - ta).max(0.0)
                        } else {
                            (ui - ta * zi.signum()).abs()
                        }
                    })
                    .collect();
                lp_norm(&per, q)
            }
            _ => match self.eval_single(space, z) {
                Some(w) => lp_norm(&sub(u, &scale(w.as_slice(), t)), q),
                None => {
                    // set-valued variants are all handled above
                    f64::INFINITY
                }
            },
        }
    }

    /// Catalog-certified strong-monotonicity constant with respect to the
    /// space norm: identity (Hilbert only) c = 1, linear operators the
    /// smallest eigenvalue of the symmetric part (Hilbert only), and the
    /// duality mapping c = μ/2 via the strong-convexity route.
    pub fn strong_mono_constant(&self, space: &SpaceSpec) -> Option<f64> {
        match self {
            OperatorSpec::Identity => space.is_hilbert().then_some(1.0),
            OperatorSpec::LinearPSD { a } => {
                if !space.is_hilbert() {
                    return None;
                }
                let lam = min_symmetric_eigenvalue(&symmetric_part(a));
                (lam > 0.0).then_some(lam)
            }
            OperatorSpec::DualityMap
            | OperatorSpec::Subdifferential { f: FunctionSpec::HalfPNormSq } => {
                Some(space.convexity_constant() / 2.0)
            }
            _ => None,
        }
    }

    pub fn id(&self) -> String {
        match self {
            OperatorSpec::Identity => "identity".into(),
            OperatorSpec::Zero => "zero".into(),
            OperatorSpec::LinearPSD { a } => format!("linear_psd({}x{})", a.nrows(), a.ncols()),
            OperatorSpec::Subdifferential { f } => format!("subdiff({})", f.id()),
            OperatorSpec::NormalConeBox { .. } => "normal_cone_box".into(),
            OperatorSpec::DualityMap => "duality_map".into(),
        }
    }
}

/// Where a graph pair came from; user pairs are membership-checked,
/// witness pairs are resolvent-induced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Grid,
    Witness,
    User,
}

#[derive(Debug, Clone)]
pub struct GraphPair {
    pub z: Vector,
    pub w: DualVector,
    pub provenance: Provenance,
}

/// A finite sample of the graph G(T).
#[derive(Debug, Clone, Default)]
pub struct GraphSample {
    pairs: Vec<GraphPair>,
}

impl GraphSample {
    pub fn empty() -> Self {
        GraphSample { pairs: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[GraphPair] {
        &self.pairs
    }

    /// Appends a user pair after an exact membership check.
    pub fn push_checked(
        &mut self,
        space: &SpaceSpec,
        op: &OperatorSpec,
        z: Vector,
        w: DualVector,
    ) -> Result<()> {
        if !op.contains(space, &z, &w) {
            return Err(Error::NotGraphMember {
                operator: op.id(),
                detail: format!("z={:?}, w={:?}", z.as_slice(), w.as_slice()),
            });
        }
        self.pairs.push(GraphPair { z, w, provenance: Provenance::User });
        Ok(())
    }

    /// Appends a resolvent-induced witness pair. The caller warrants that
    /// the pair is a graph member up to the reported solver residual
    /// (exactly, for closed-form solves).
    pub fn push_witness(&mut self, z: Vector, w: DualVector) {
        self.pairs.push(GraphPair { z, w, provenance: Provenance::Witness });
    }

    fn push_grid(&mut self, z: Vector, w: DualVector) {
        self.pairs.push(GraphPair { z, w, provenance: Provenance::Grid });
    }
}

/// An axis-aligned box region used for grid sampling.
#[derive(Debug, Clone)]
pub struct BoxRegion {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxRegion {
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Self {
        BoxRegion { lo: vec![lo; dim], hi: vec![hi; dim] }
    }
}

/// Samples G(T) on a uniform grid over `region`, pairing every grid point
/// in the domain of T with each of its representatives (capped), then
/// appends `extra` pairs after exact membership checks.
pub fn graph_sample(
    space: &SpaceSpec,
    op: &OperatorSpec,
    region: &BoxRegion,
    grid_per_dim: usize,
    cap: usize,
    extra: &[(Vector, DualVector)],
) -> Result<GraphSample> {
    if grid_per_dim < 2 {
        return Err(Error::InvalidSpec(format!(
            "grid_per_dim {grid_per_dim} must be >= 2"
        )));
    }
    let dim = space.dim();
    if region.lo.len() != dim || region.hi.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: region.lo.len() });
    }
    let total = (grid_per_dim as u128).pow(dim as u32);
    if total > 1_000_000 {
        return Err(Error::InvalidSpec(format!(
            "grid of {total} points is too large; reduce grid_per_dim or dim"
        )));
    }

    let mut sample = GraphSample::empty();
    let mut idx = vec![0usize; dim];
    loop {
        let z: Vec<f64> = (0..dim)
            .map(|d| {
                let t = idx[d] as f64 / (grid_per_dim - 1) as f64;
                region.lo[d] + t * (region.hi[d] - region.lo[d])
            })
            .collect();
        let z = Vector::from_raw(z);
        if op.in_domain(&z) {
            for w in op.representatives(space, &z, cap)? {
                sample.push_grid(z.clone(), w);
            }
        }
        // odometer increment
        let mut d = 0;
        loop {
            if d == dim {
                break;
            }
            idx[d] += 1;
            if idx[d] < grid_per_dim {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
        if d == dim {
            break;
        }
    }

    for (z, w) in extra {
        sample.push_checked(space, op, z.clone(), w.clone())?;
    }
    Ok(sample)
}

/// Minimum over sampled pairs (and representative selections) of
/// ⟨x−y, u−v⟩ / ‖x−y‖², an upper estimate of the strong-monotonicity
/// constant of B. Coincident points are skipped.
pub fn strong_mono_probe(
    space: &SpaceSpec,
    op: &OperatorSpec,
    pairs: &[(Vector, Vector)],
    cap: usize,
) -> Result<f64> {
    let mut best = f64::INFINITY;
    let mut used = false;
    for (x, y) in pairs {
        if x.as_slice() == y.as_slice() {
            continue;
        }
        let d = sub(x.as_slice(), y.as_slice());
        let denom = {
            let n = lp_norm(&d, space.p());
            n * n
        };
        let ux = op.representatives(space, x, cap)?;
        let uy = op.representatives(space, y, cap)?;
        for u in &ux {
            for v in &uy {
                let num = dot(&d, &sub(u.as_slice(), v.as_slice()));
                best = best.min(num / denom);
                used = true;
            }
        }
    }
    if !used {
        return Err(Error::CoincidentPairs);
    }
    Ok(best)
}

// ---------------------------------------------------------------------------
// helpers

fn validate_box(space: &SpaceSpec, lo: &Vector, hi: &Vector) -> Result<()> {
    if lo.len() != space.dim() {
        return Err(Error::DimensionMismatch { expected: space.dim(), got: lo.len() });
    }
    if hi.len() != space.dim() {
        return Err(Error::DimensionMismatch { expected: space.dim(), got: hi.len() });
    }
    for (l, h) in lo.as_slice().iter().zip(hi.as_slice()) {
        if l > h {
            return Err(Error::InvalidSpec(format!("box bound lo {l} > hi {h}")));
        }
    }
    Ok(())
}

fn in_box(x: &[f64], lo: &Vector, hi: &Vector) -> bool {
    x.iter()
        .zip(lo.as_slice().iter().zip(hi.as_slice()))
        .all(|(&c, (&l, &h))| l <= c && c <= h)
}

/// Per-coordinate normal cone membership for a box: 0 in the interior,
/// one-sided rays at the faces, all of ℝ on degenerate coordinates.
fn normal_cone_contains(z: &Vector, w: &[f64], lo: &Vector, hi: &Vector) -> bool {
    if !in_box(z.as_slice(), lo, hi) {
        return false;
    }
    z.as_slice()
        .iter()
        .zip(w.iter().zip(lo.as_slice().iter().zip(hi.as_slice())))
        .all(|(&zi, (&wi, (&l, &h)))| {
            if l == h {
                true
            } else if zi == l {
                wi <= 0.0
            } else if zi == h {
                wi >= 0.0
            } else {
                wi == 0.0
            }
        })
}

fn clamp_to_normal_cone(z: &Vector, hint: &[f64], lo: &Vector, hi: &Vector) -> Vec<f64> {
    z.as_slice()
        .iter()
        .zip(hint.iter().zip(lo.as_slice().iter().zip(hi.as_slice())))
        .map(|(&zi, (&ui, (&l, &h)))| {
            if l == h {
                ui
            } else if zi == l {
                ui.min(0.0)
            } else if zi == h {
                ui.max(0.0)
            } else {
                0.0
            }
        })
        .collect()
}

/// Representatives of the box normal cone at x: the outward-signed ray
/// ladder on each active face coordinate, zero elsewhere, enumerated in
/// ladder order and truncated to `cap`.
fn normal_cone_representatives(
    x: &Vector,
    lo: &Vector,
    hi: &Vector,
    cap: usize,
) -> Result<Vec<Vec<f64>>> {
    if !in_box(x.as_slice(), lo, hi) {
        return Err(Error::Domain("point outside the box".into()));
    }
    let choices: Vec<Vec<f64>> = x
        .as_slice()
        .iter()
        .zip(lo.as_slice().iter().zip(hi.as_slice()))
        .map(|(&c, (&l, &h))| {
            if l == h {
                let mut vals = vec![0.0];
                for &t in &NORMAL_CONE_LADDER[1..] {
                    vals.push(-t);
                    vals.push(t);
                }
                vals
            } else if c == l {
                NORMAL_CONE_LADDER.iter().map(|&t| -t).collect()
            } else if c == h {
                NORMAL_CONE_LADDER.to_vec()
            } else {
                vec![0.0]
            }
        })
        .collect();
    Ok(cartesian(&choices, cap))
}

/// Cartesian product of per-coordinate choice lists in mixed-radix counting
/// order (first coordinate slowest), truncated to `cap`.
fn cartesian(choices: &[Vec<f64>], cap: usize) -> Vec<Vec<f64>> {
    let cap = cap.max(1);
    let mut out = Vec::new();
    let dim = choices.len();
    let mut idx = vec![0usize; dim];
    loop {
        out.push((0..dim).map(|d| choices[d][idx[d]]).collect());
        if out.len() >= cap {
            break;
        }
        let mut d = dim;
        loop {
            if d == 0 {
                return out;
            }
            d -= 1;
            idx[d] += 1;
            if idx[d] < choices[d].len() {
                break;
            }
            idx[d] = 0;
            if d == 0 {
                return out;
            }
        }
    }
    out
}

pub(crate) fn matvec(a: &DMatrix<f64>, x: &[f64]) -> Vec<f64> {
    let v = a * DVector::from_column_slice(x);
    v.as_slice().to_vec()
}

pub(crate) fn symmetric_part(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

pub(crate) fn min_symmetric_eigenvalue(a: &DMatrix<f64>) -> f64 {
    a.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |m, &e| m.min(e))
}

/// ½(v−b)ᵀQ⁻¹(v−b) through the eigendecomposition; +∞ when v−b leaves the
/// range of a singular Q.
fn quadratic_conjugate(q: &DMatrix<f64>, b: &[f64], v: &[f64]) -> f64 {
    let eig = q.clone().symmetric_eigen();
    let d = DVector::from_column_slice(&sub(v, b));
    let coeffs = eig.eigenvectors.transpose() * d;
    let scale = eig.eigenvalues.amax().max(1.0);
    let mut total = 0.0;
    for (c, &lam) in coeffs.iter().zip(eig.eigenvalues.iter()) {
        if lam > MATRIX_SYM_TOL * scale {
            total += 0.5 * c * c / lam;
        } else if c.abs() > 1e-9 * scale {
            return f64::INFINITY;
        }
    }
    total
}
