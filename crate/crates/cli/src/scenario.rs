//! Scenario file schema (versioned JSON) with a validating loader.
//!
//! A scenario pins everything a run needs: the space, the operators, a
//! seeded point source, the λ grid, the certificate kinds, tolerances, and
//! graph-sample settings. The same file plus the same seed reproduces the
//! same report bytes.

use fitzcert::{CertKind, DualVector, FunctionSpec, OperatorSpec, SpaceSpec, Vector};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("scenario parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("scenario field `{field}`: {message}")]
    Invalid { field: String, message: String },
    #[error("io error reading scenario: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    pub space: SpaceConfig,
    pub t: OperatorConfig,
    #[serde(default)]
    pub b: Option<OperatorConfig>,
    pub points: PointSource,
    pub lambda_grid: Vec<f64>,
    pub kinds: Vec<CertKind>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub graph_sample: Option<GraphSampleConfig>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceConfig {
    pub dim: usize,
    pub p: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointSource {
    pub seed: u64,
    pub count: usize,
    /// Coordinate interval [lo, hi] for both x and v samples.
    pub range: [f64; 2],
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Base certificate tolerance (absolute; the relative part is derived).
    pub certificate: f64,
    /// Residual target for iterative resolvent paths.
    pub resolvent: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            certificate: fitzcert::tol::CERT_TOL,
            resolvent: fitzcert::tol::RESOLVENT_TOL_ITER,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSampleConfig {
    /// Cube region [lo, hi] per coordinate.
    pub range: [f64; 2],
    pub grid_per_dim: usize,
    /// Representative cap per graph point.
    pub cap: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorConfig {
    Identity,
    Zero,
    LinearPsd { matrix: Vec<Vec<f64>> },
    Subdifferential { f: FunctionConfig },
    NormalConeBox { lo: Vec<f64>, hi: Vec<f64> },
    DualityMap,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionConfig {
    Quadratic {
        matrix: Vec<Vec<f64>>,
        #[serde(default)]
        b: Option<Vec<f64>>,
    },
    ScaledL1 { alpha: f64 },
    BoxIndicator { lo: Vec<f64>, hi: Vec<f64> },
    HalfPnormSq,
    StronglyConvexShift { base: Box<FunctionConfig>, m: f64 },
}

impl Scenario {
    pub fn from_path(path: &std::path::Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let scenario: Scenario = serde_json::from_str(text).map_err(|e| ScenarioError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let field = |f: &str, m: String| ScenarioError::Invalid { field: f.into(), message: m };
        if self.schema_version != SCHEMA_VERSION {
            return Err(field(
                "schema_version",
                format!("unknown version {} (loader supports {SCHEMA_VERSION})", self.schema_version),
            ));
        }
        let space = self.build_space().map_err(|e| field("space", e.to_string()))?;
        let t = self
            .build_operator(&self.t, &space)
            .map_err(|e| field("t", e.to_string()))?;
        t.validate(&space).map_err(|e| field("t", e.to_string()))?;
        if let Some(bcfg) = &self.b {
            let b = self
                .build_operator(bcfg, &space)
                .map_err(|e| field("b", e.to_string()))?;
            b.validate(&space).map_err(|e| field("b", e.to_string()))?;
        }
        if self.points.count == 0 {
            return Err(field("points.count", "must be >= 1".into()));
        }
        if !(self.points.range[0] < self.points.range[1]) {
            return Err(field("points.range", "requires lo < hi".into()));
        }
        if self.lambda_grid.is_empty() {
            return Err(field("lambda_grid", "must be nonempty".into()));
        }
        for &l in &self.lambda_grid {
            if !(l > 0.0) || !l.is_finite() {
                return Err(field("lambda_grid", format!("lambda {l} must be > 0")));
            }
        }
        if self.kinds.is_empty() {
            return Err(field("kinds", "must request at least one certificate kind".into()));
        }
        if !(self.tolerances.certificate > 0.0 && self.tolerances.resolvent > 0.0) {
            return Err(field("tolerances", "must be positive".into()));
        }
        if let Some(g) = &self.graph_sample {
            if g.grid_per_dim < 2 {
                return Err(field("graph_sample.grid_per_dim", "must be >= 2".into()));
            }
            if !(g.range[0] < g.range[1]) {
                return Err(field("graph_sample.range", "requires lo < hi".into()));
            }
            if g.cap == 0 {
                return Err(field("graph_sample.cap", "must be >= 1".into()));
            }
        }
        for kind in &self.kinds {
            match kind {
                CertKind::CarlierHilbert | CertKind::SfiChain | CertKind::SfiDistance => {
                    if self.space.p != 2.0 {
                        return Err(field(
                            "kinds",
                            format!("{} requires p = 2", kind.as_str()),
                        ));
                    }
                }
                CertKind::Gci => {
                    if self.b.is_none() {
                        return Err(field("b", "gci requires an operator B".into()));
                    }
                }
                CertKind::PropStrmono => {
                    if !matches!(self.t, OperatorConfig::Subdifferential { .. }) {
                        return Err(field(
                            "t",
                            "prop_strmono requires T to be a subdifferential".into(),
                        ));
                    }
                }
                CertKind::TwoUc => {}
            }
        }
        Ok(())
    }

    pub fn build_space(&self) -> fitzcert::Result<SpaceSpec> {
        SpaceSpec::new(self.space.dim, self.space.p)
    }

    pub fn build_operator(
        &self,
        cfg: &OperatorConfig,
        space: &SpaceSpec,
    ) -> fitzcert::Result<OperatorSpec> {
        build_operator(cfg, space)
    }

    /// Seeded point stream: point k of a scenario is fully determined by
    /// (seed, k) through a counter-based generator.
    pub fn sample_points(&self, space: &SpaceSpec) -> Vec<(Vector, DualVector)> {
        sample_points(self.points.seed, self.points.count, space.dim(), self.points.range)
    }
}

pub fn sample_points(
    seed: u64,
    count: usize,
    dim: usize,
    range: [f64; 2],
) -> Vec<(Vector, DualVector)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let x: Vec<f64> = (0..dim).map(|_| rng.gen_range(range[0]..range[1])).collect();
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(range[0]..range[1])).collect();
        out.push((
            Vector::new(x).expect("finite sample"),
            DualVector::new(v).expect("finite sample"),
        ));
    }
    out
}

pub fn build_operator(cfg: &OperatorConfig, space: &SpaceSpec) -> fitzcert::Result<OperatorSpec> {
    Ok(match cfg {
        OperatorConfig::Identity => OperatorSpec::Identity,
        OperatorConfig::Zero => OperatorSpec::Zero,
        OperatorConfig::LinearPsd { matrix } => {
            OperatorSpec::LinearPSD { a: build_matrix(matrix, space)? }
        }
        OperatorConfig::Subdifferential { f } => {
            OperatorSpec::Subdifferential { f: build_function(f, space)? }
        }
        OperatorConfig::NormalConeBox { lo, hi } => OperatorSpec::NormalConeBox {
            lo: Vector::new(lo.clone())?,
            hi: Vector::new(hi.clone())?,
        },
        OperatorConfig::DualityMap => OperatorSpec::DualityMap,
    })
}

pub fn build_function(cfg: &FunctionConfig, space: &SpaceSpec) -> fitzcert::Result<FunctionSpec> {
    Ok(match cfg {
        FunctionConfig::Quadratic { matrix, b } => FunctionSpec::Quadratic {
            q: build_matrix(matrix, space)?,
            b: match b {
                Some(b) => DualVector::new(b.clone())?,
                None => DualVector::zeros(space.dim()),
            },
        },
        FunctionConfig::ScaledL1 { alpha } => FunctionSpec::ScaledL1 { alpha: *alpha },
        FunctionConfig::BoxIndicator { lo, hi } => FunctionSpec::BoxIndicator {
            lo: Vector::new(lo.clone())?,
            hi: Vector::new(hi.clone())?,
        },
        FunctionConfig::HalfPnormSq => FunctionSpec::HalfPNormSq,
        FunctionConfig::StronglyConvexShift { base, m } => FunctionSpec::StronglyConvexShift {
            base: Box::new(build_function(base, space)?),
            m: *m,
        },
    })
}

fn build_matrix(rows: &[Vec<f64>], space: &SpaceSpec) -> fitzcert::Result<DMatrix<f64>> {
    let n = space.dim();
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(fitzcert::Error::DimensionMismatch {
            expected: n,
            got: rows.first().map(|r| r.len()).unwrap_or(rows.len()),
        });
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    for (index, &value) in flat.iter().enumerate() {
        if !value.is_finite() {
            return Err(fitzcert::Error::NonFinite { index, value });
        }
    }
    Ok(DMatrix::from_row_slice(n, n, &flat))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal(json_patch: &str) -> String {
        format!(
            r#"{{
                "schema_version": 1,
                "space": {{"dim": 2, "p": 2.0}},
                "t": {{"type": "identity"}},
                "points": {{"seed": 7, "count": 10, "range": [-5.0, 5.0]}},
                "lambda_grid": [1.0],
                "kinds": ["carlier_hilbert"]{json_patch}
            }}"#
        )
    }

    #[test]
    fn parses_minimal_scenario() {
        let s = Scenario::from_json(&minimal("")).unwrap();
        assert_eq!(s.points.count, 10);
        assert_eq!(s.kinds, vec![CertKind::CarlierHilbert]);
    }

    #[test]
    fn rejects_unknown_schema_version() {
        let bad = minimal("").replace("\"schema_version\": 1", "\"schema_version\": 99");
        assert!(matches!(
            Scenario::from_json(&bad),
            Err(ScenarioError::Invalid { .. })
        ));
    }

    #[test]
    fn rejects_nonpositive_lambda() {
        let bad = minimal("").replace("[1.0]", "[0.0]");
        let err = Scenario::from_json(&bad).unwrap_err();
        assert!(err.to_string().contains("lambda"));
    }

    #[test]
    fn rejects_unknown_fields_with_position() {
        let bad = minimal("").replace("\"seed\": 7", "\"seed\": 7, \"bogus\": 1");
        match Scenario::from_json(&bad) {
            Err(ScenarioError::Parse { line, .. }) => assert!(line > 0),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_hilbert_only_kind_off_p2() {
        let bad = minimal("").replace("\"p\": 2.0", "\"p\": 1.5");
        let err = Scenario::from_json(&bad).unwrap_err();
        assert!(err.to_string().contains("requires p = 2"));
    }

    #[test]
    fn gci_requires_b() {
        let bad = minimal("").replace("[\"carlier_hilbert\"]", "[\"gci\"]");
        let err = Scenario::from_json(&bad).unwrap_err();
        assert!(err.to_string().contains("requires an operator B"));
    }

    #[test]
    fn point_stream_is_deterministic() {
        let a = sample_points(42, 5, 3, [-5.0, 5.0]);
        let b = sample_points(42, 5, 3, [-5.0, 5.0]);
        for (pa, pb) in a.iter().zip(&b) {
            assert_eq!(pa.0.as_slice(), pb.0.as_slice());
            assert_eq!(pa.1.as_slice(), pb.1.as_slice());
        }
        let c = sample_points(43, 5, 3, [-5.0, 5.0]);
        assert_ne!(a[0].0.as_slice(), c[0].0.as_slice());
    }

    #[test]
    fn builds_operators_from_configs() {
        let s = SpaceSpec::hilbert(2);
        let cfg = OperatorConfig::LinearPsd { matrix: vec![vec![2.0, 0.0], vec![0.0, 3.0]] };
        let op = build_operator(&cfg, &s).unwrap();
        assert_eq!(op.strong_mono_constant(&s), Some(2.0));
        let bad = OperatorConfig::LinearPsd { matrix: vec![vec![1.0]] };
        assert!(build_operator(&bad, &s).is_err());
    }
}
