//! Finite-dimensional ℓᵖ geometry: norms, duality pairing, the normalized
//! duality mapping, and the 2-uniform-convexity constant.
//!
//! The ambient space is ℝⁿ with the ℓᵖ norm for an exponent p ∈ (1, 2];
//! its dual carries the ℓ^q norm with q = p/(p−1). For p = 2 the space is
//! Hilbert and the duality mapping is the identity.

use crate::error::Error;
use crate::Result;
use serde::{Deserialize, Serialize};

/// A finite-dimensional normed space: dimension and exponent p ∈ (1, 2].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceSpec {
    dim: usize,
    p: f64,
    q: f64,
}

impl SpaceSpec {
    /// Builds a space spec, rejecting p outside (1, 2] and dim = 0.
    pub fn new(dim: usize, p: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension(dim));
        }
        if !(p > 1.0 && p <= 2.0) || !p.is_finite() {
            return Err(Error::InvalidExponent(p));
        }
        Ok(SpaceSpec { dim, p, q: p / (p - 1.0) })
    }

    /// Hilbert space of the given dimension (p = 2).
    pub fn hilbert(dim: usize) -> Self {
        SpaceSpec::new(dim, 2.0).expect("dim >= 1")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Dual exponent q = p/(p−1) >= 2.
    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn is_hilbert(&self) -> bool {
        self.p == 2.0
    }

    /// 2-uniform-convexity constant μ = (p−1)/8 of the space.
    ///
    /// For p = 2 this is the Hilbert value 1/8.
    pub fn convexity_constant(&self) -> f64 {
        (self.p - 1.0) / 8.0
    }

    /// Primal norm (Σ|xᵢ|^p)^{1/p}.
    pub fn norm_primal(&self, x: &Vector) -> Result<f64> {
        self.check_dim(x.len())?;
        Ok(lp_norm(x.as_slice(), self.p))
    }

    /// Dual norm, the ℓ^q norm with q = p/(p−1).
    pub fn norm_dual(&self, v: &DualVector) -> Result<f64> {
        self.check_dim(v.len())?;
        Ok(lp_norm(v.as_slice(), self.q))
    }

    /// Normalized duality mapping J(x), the gradient of ½‖·‖ₚ².
    ///
    /// `J(x)ᵢ = ‖x‖^{2−p} · sign(xᵢ) · |xᵢ|^{p−1}`, and `J(0) = 0`. On ℝⁿ
    /// with p ∈ (1, 2] the mapping is single-valued; the two defining
    /// identities `⟨x, Jx⟩ = ‖x‖²` and `‖Jx‖* = ‖x‖` are checked in debug
    /// builds rather than trusted.
    pub fn duality_map(&self, x: &Vector) -> DualVector {
        assert_eq!(x.len(), self.dim, "duality_map: dimension mismatch");
        let v = duality_map_raw(x.as_slice(), self.p);
        let v = DualVector(v);
        debug_assert!(self.duality_identities_hold(x, &v));
        v
    }

    /// Inverse duality mapping J_{X*}: maps a dual vector back to the primal
    /// point whose duality image it is (the duality map of the dual space).
    pub fn duality_map_inverse(&self, v: &DualVector) -> Vector {
        assert_eq!(v.len(), self.dim, "duality_map_inverse: dimension mismatch");
        Vector(duality_map_raw(v.as_slice(), self.q))
    }

    fn duality_identities_hold(&self, x: &Vector, v: &DualVector) -> bool {
        let nx = lp_norm(x.as_slice(), self.p);
        let nv = lp_norm(v.as_slice(), self.q);
        let pv = dot(x.as_slice(), v.as_slice());
        let scale = (nx * nx).max(1e-300);
        (pv - nx * nx).abs() <= 1e-9 * scale.max(1.0) && (nv - nx).abs() <= 1e-9 * nx.max(1.0)
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got });
        }
        Ok(())
    }
}

/// A point of the primal space X. Entries are finite by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vector(Vec<f64>);

/// A point of the dual space X*. Entries are finite by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualVector(Vec<f64>);

macro_rules! vector_impl {
    ($name:ident) => {
        impl $name {
            /// Validates that every entry is finite.
            pub fn new(coords: Vec<f64>) -> Result<Self> {
                for (index, &value) in coords.iter().enumerate() {
                    if !value.is_finite() {
                        return Err(Error::NonFinite { index, value });
                    }
                }
                Ok($name(coords))
            }

            pub fn zeros(dim: usize) -> Self {
                $name(vec![0.0; dim])
            }

            pub fn len(&self) -> usize {
                self.0.len()
            }

            pub fn is_empty(&self) -> bool {
                self.0.is_empty()
            }

            pub fn as_slice(&self) -> &[f64] {
                &self.0
            }

            pub fn into_inner(self) -> Vec<f64> {
                self.0
            }

            pub fn is_zero(&self) -> bool {
                self.0.iter().all(|&c| c == 0.0)
            }

            /// Construction without the finiteness check, for coordinates
            /// produced by internal arithmetic on already-validated inputs.
            pub(crate) fn from_raw(coords: Vec<f64>) -> Self {
                $name(coords)
            }
        }

        impl std::ops::Index<usize> for $name {
            type Output = f64;
            fn index(&self, i: usize) -> &f64 {
                &self.0[i]
            }
        }
    };
}

vector_impl!(Vector);
vector_impl!(DualVector);

impl Vector {
    /// Canonical coordinate identification ℝⁿ ≅ (ℝⁿ)*, used where an
    /// operator maps X into X* coordinatewise (e.g. the identity in the
    /// Hilbert case).
    pub fn to_dual(&self) -> DualVector {
        DualVector(self.0.clone())
    }
}

impl DualVector {
    /// Inverse of [`Vector::to_dual`].
    pub fn to_primal(&self) -> Vector {
        Vector(self.0.clone())
    }
}

/// Duality product ⟨x, v⟩ = Σ xᵢ vᵢ.
pub fn pairing(x: &Vector, v: &DualVector) -> Result<f64> {
    if x.len() != v.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), got: v.len() });
    }
    Ok(dot(x.as_slice(), v.as_slice()))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub(crate) fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub(crate) fn scale(a: &[f64], t: f64) -> Vec<f64> {
    a.iter().map(|x| x * t).collect()
}

/// y + t*z, coordinatewise.
pub(crate) fn axpy(y: &[f64], t: f64, z: &[f64]) -> Vec<f64> {
    y.iter().zip(z).map(|(a, b)| a + t * b).collect()
}

pub(crate) fn sq_norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum()
}

/// |x|^e with fast paths for the quarter-integer exponents that dominate
/// the test grid (4e ∈ ℤ covers p and q−1 for p ∈ {1.25, 1.5, 1.75, 2}).
pub(crate) fn pow_abs(x: f64, e: f64) -> f64 {
    let ax = x.abs();
    if ax == 0.0 {
        return 0.0;
    }
    let e4 = 4.0 * e;
    if e4.fract() == 0.0 && (0.0..=12.0).contains(&e4) {
        let k = e4 as u32;
        let r = ax.sqrt().sqrt(); // ax^{1/4}
        let mut acc = 1.0;
        for _ in 0..(k % 4) {
            acc *= r;
        }
        let mut base = 1.0;
        for _ in 0..(k / 4) {
            base *= ax;
        }
        return base * acc;
    }
    ax.powf(e)
}

pub(crate) fn lp_norm(a: &[f64], p: f64) -> f64 {
    if p == 2.0 {
        return sq_norm(a).sqrt();
    }
    let s: f64 = a.iter().map(|&x| pow_abs(x, p)).sum();
    if s == 0.0 {
        0.0
    } else {
        s.powf(1.0 / p)
    }
}

pub(crate) fn duality_map_raw(x: &[f64], p: f64) -> Vec<f64> {
    if p == 2.0 {
        return x.to_vec();
    }
    let n = lp_norm(x, p);
    if n == 0.0 {
        return vec![0.0; x.len()];
    }
    let scale = n.powf(2.0 - p);
    x.iter().map(|&xi| scale * xi.signum() * pow_abs(xi, p - 1.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn vec2(a: f64, b: f64) -> Vector {
        Vector::new(vec![a, b]).unwrap()
    }

    fn dual2(a: f64, b: f64) -> DualVector {
        DualVector::new(vec![a, b]).unwrap()
    }

    #[test]
    fn exponent_validation() {
        assert!(SpaceSpec::new(2, 1.0).is_err());
        assert!(SpaceSpec::new(2, 2.5).is_err());
        assert!(SpaceSpec::new(0, 2.0).is_err());
        let s = SpaceSpec::new(3, 1.5).unwrap();
        assert_relative_eq!(s.q(), 3.0, max_relative = 1e-15);
    }

    #[test]
    fn norm_euclidean_345() {
        let s = SpaceSpec::hilbert(2);
        assert_eq!(s.norm_primal(&vec2(3.0, 4.0)).unwrap(), 5.0);
        assert_eq!(s.norm_dual(&dual2(3.0, 4.0)).unwrap(), 5.0);
        assert_eq!(s.norm_primal(&vec2(0.0, 0.0)).unwrap(), 0.0);
    }

    #[test]
    fn norm_p15_frozen() {
        // direct evaluation: (1+1)^{1/1.5} = 2^{2/3}, dual (1+1)^{1/3}
        let s = SpaceSpec::new(2, 1.5).unwrap();
        assert_relative_eq!(
            s.norm_primal(&vec2(1.0, 1.0)).unwrap(),
            1.5874010519681994,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            s.norm_dual(&dual2(1.0, 1.0)).unwrap(),
            1.2599210498948732,
            max_relative = 1e-14
        );
        assert_eq!(s.norm_dual(&dual2(0.0, 0.0)).unwrap(), 0.0);
    }

    #[test]
    fn norm_dimension_mismatch() {
        let s = SpaceSpec::hilbert(3);
        assert!(s.norm_primal(&vec2(1.0, 2.0)).is_err());
        assert!(s.norm_dual(&dual2(1.0, 2.0)).is_err());
    }

    #[test]
    fn pairing_dot_product() {
        assert_eq!(pairing(&vec2(1.0, 2.0), &dual2(3.0, 4.0)).unwrap(), 11.0);
        assert_eq!(pairing(&vec2(7.0, -2.0), &dual2(0.0, 0.0)).unwrap(), 0.0);
        let x3 = Vector::new(vec![1.0, 2.0, 3.0]).unwrap();
        assert!(pairing(&x3, &dual2(1.0, 1.0)).is_err());
    }

    #[test]
    fn pairing_hoelder_equality_case() {
        // p=1.5: <(1,1),(1,1)> = 2 = 2^{2/3} * 2^{1/3}
        let s = SpaceSpec::new(2, 1.5).unwrap();
        let x = vec2(1.0, 1.0);
        let v = dual2(1.0, 1.0);
        let lhs = pairing(&x, &v).unwrap();
        let rhs = s.norm_primal(&x).unwrap() * s.norm_dual(&v).unwrap();
        assert_relative_eq!(lhs, rhs, max_relative = 1e-14);
        assert_eq!(lhs, 2.0);
    }

    #[test]
    fn duality_map_identity_in_hilbert() {
        let s = SpaceSpec::hilbert(2);
        let x = vec2(0.3, -1.7);
        let v = s.duality_map(&x);
        assert_eq!(v.as_slice(), x.as_slice());
    }

    #[test]
    fn duality_map_zero_and_unit_vector() {
        let s = SpaceSpec::new(2, 1.5).unwrap();
        assert!(s.duality_map(&vec2(0.0, 0.0)).is_zero());
        let v = s.duality_map(&vec2(1.0, 0.0));
        assert_eq!(v.as_slice(), &[1.0, 0.0]);
    }

    #[test]
    fn duality_map_defining_identities() {
        let s = SpaceSpec::new(3, 1.25).unwrap();
        let x = Vector::new(vec![1.3, -0.4, 2.9]).unwrap();
        let v = s.duality_map(&x);
        let nx = s.norm_primal(&x).unwrap();
        let nv = s.norm_dual(&v).unwrap();
        let pv = pairing(&x, &v).unwrap();
        assert_relative_eq!(pv, nx * nx, max_relative = 1e-12);
        assert_relative_eq!(nv, nx, max_relative = 1e-12);
    }

    #[test]
    fn duality_map_inverse_roundtrip() {
        let s = SpaceSpec::new(3, 1.5).unwrap();
        let x = Vector::new(vec![0.7, -2.0, 0.1]).unwrap();
        let v = s.duality_map(&x);
        let back = s.duality_map_inverse(&v);
        for i in 0..3 {
            assert_relative_eq!(back[i], x[i], max_relative = 1e-12);
        }
    }

    #[test]
    fn convexity_constant_values() {
        assert_eq!(SpaceSpec::hilbert(4).convexity_constant(), 0.125);
        assert_eq!(SpaceSpec::new(2, 1.5).unwrap().convexity_constant(), 0.0625);
        // monotone in p on (1,2]
        let a = SpaceSpec::new(2, 1.1).unwrap().convexity_constant();
        let b = SpaceSpec::new(2, 1.9).unwrap().convexity_constant();
        assert!(a < b && a > 0.0);
    }

    #[test]
    fn vectors_reject_non_finite() {
        assert!(Vector::new(vec![1.0, f64::NAN]).is_err());
        assert!(DualVector::new(vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn pow_abs_matches_powf() {
        for &e in &[0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0, 0.3, 1.37] {
            for &x in &[0.0, 1e-8, 0.37, 1.0, 2.5, 19.0, -3.2] {
                let got = pow_abs(x, e);
                let want = x.abs().powf(e);
                assert!(
                    (got - want).abs() <= 1e-13 * want.max(1.0),
                    "x={x} e={e}: {got} vs {want}"
                );
            }
        }
    }
}
