//! One instance of the coupled system: graph, exponents, potentials,
//! perturbations, parameters and nonlinearity, plus optional hypothesis data
//! used by the audits and the closed-form constants.

pub mod audit;
pub mod config;
pub mod constants;
pub mod presets;

use crate::calculus::VertexFunction;
use crate::graph::{ValidationReport, WeightedGraph};
use crate::nonlinearity::Nonlinearity;

pub use audit::{audit_conditions, AuditEntry, AuditGrid, AuditReport, Verdict, Witness};
pub use constants::{
    alpha_at, lambda0_params, lambda_bound, rho_alpha, spike_constants, spike_energy, spike_formula,
    LambdaBound, RhoAlpha, SpikeConstants, RHO_MARGIN,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProblemError {
    #[error("invalid graph: {0}")]
    Graph(ValidationReport),
    #[error("exponent {which} = {value} must be at least 2")]
    ExponentBelowTwo { which: &'static str, value: f64 },
    #[error("{which} has {found} values, graph has {expected} vertices")]
    LengthMismatch { which: &'static str, expected: usize, found: usize },
    #[error("{which} is not finite at vertex {vertex}")]
    NonFinite { which: &'static str, vertex: String },
    #[error("(H1) violated: {which}({vertex}) = {value} is below h0 = {h0}")]
    PotentialBelowFloor { which: &'static str, vertex: String, value: f64, h0: f64 },
    #[error("(H1) violated: h0 = {0} must be positive")]
    NonpositiveFloor(f64),
    #[error("perturbations identically zero")]
    ZeroPerturbation,
    #[error("parameter {which} = {value} must be positive")]
    NonpositiveParameter { which: &'static str, value: f64 },
    #[error("F(x,0,0) = {value} at vertex {vertex}, expected 0")]
    NonzeroAtOrigin { vertex: String, value: f64 },
    #[error("vertex {0} does not exist")]
    UnknownVertex(String),
    #[error("hypothesis parameters: {0}")]
    Hypothesis(String),
    #[error("perturbation vanishes at vertex {0}")]
    PerturbationZeroAt(String),
    #[error("both perturbation norms are zero")]
    ZeroPerturbationNorm,
    #[error("lambda = {lambda} is not in (0, lambda0 = {lambda0})")]
    LambdaOutOfRange { lambda: f64, lambda0: f64 },
    #[error("alpha = {alpha} is not positive at rho = {rho}, lambda = {lambda}")]
    NonpositiveAlpha { alpha: f64, rho: f64, lambda: f64 },
    #[error("l0 = {0} must be positive")]
    NonpositiveRadius(f64),
}

/// Which pairing of growth functions bounds the partials.
///
/// `Standard`: `|F_s| ≤ f1 (|s|^{p-1} + |t|^{(pq-q)/p}) + g1` and
/// `|F_t| ≤ f2 (|s|^p + |t|^{q-1}) + g2`.
/// `Swapped`: `|F_s| ≤ f2 (|t|^q + |s|^{p-1}) + g1` and
/// `|F_t| ≤ f1 (|t|^{q-1} + |s|^{(qp-p)/q}) + g2`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum GrowthForm {
    #[default]
    Standard,
    Swapped,
}

/// Optional constants attached to a problem. Absent entries make the
/// corresponding audit or bound not applicable.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct HypothesisParams {
    pub growth: GrowthForm,
    pub f1: Option<VertexFunction>,
    pub f2: Option<VertexFunction>,
    pub g1: Option<VertexFunction>,
    pub g2: Option<VertexFunction>,
    pub beta1: Option<f64>,
    pub beta2: Option<f64>,
    pub k1: Option<VertexFunction>,
    pub k2: Option<VertexFunction>,
    pub x1: Option<usize>,
    pub x2: Option<usize>,
    pub l0: Option<f64>,
    pub l1: Option<f64>,
    pub l2: Option<f64>,
    pub m: Option<f64>,
    pub x3: Option<usize>,
    pub x4: Option<usize>,
    pub nu: Option<f64>,
    pub a: Option<f64>,
    pub beta3: Option<f64>,
    pub k3: Option<VertexFunction>,
    /// Vertex factor `b` of the growth majorant `a(|(s,t)|) b(x)`.
    pub majorant_weight: Option<VertexFunction>,
    /// Samples `(r, a(r))` of the radial majorant, linearly interpolated.
    pub majorant_table: Option<Vec<(f64, f64)>>,
    /// Levels `B` at which the sublevel measures `Σ_{h_i ≤ B} μ` are reported.
    pub sublevels: Vec<f64>,
}

/// Unvalidated problem data.
#[derive(Debug, Clone)]
pub struct ProblemData {
    pub name: String,
    pub graph: WeightedGraph,
    pub p: f64,
    pub q: f64,
    pub h1: VertexFunction,
    pub h2: VertexFunction,
    pub e1: VertexFunction,
    pub e2: VertexFunction,
    pub lambda1: f64,
    pub lambda2: f64,
    pub nonlinearity: Nonlinearity,
    /// Declared potential floor; `None` means `min(h1, h2)`.
    pub h0: Option<f64>,
    pub hypothesis: HypothesisParams,
}

/// A validated problem. Immutable; the `with_*` methods return new specs.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    data: ProblemData,
    h0: f64,
    mu0: f64,
}

impl ProblemSpec {
    pub fn new(data: ProblemData) -> Result<Self, ProblemError> {
        let g = &data.graph;
        let report = g.validate();
        if !report.is_valid() {
            return Err(ProblemError::Graph(report));
        }
        for (which, value) in [("p", data.p), ("q", data.q)] {
            if !(value >= 2.0 && value.is_finite()) {
                return Err(ProblemError::ExponentBelowTwo { which, value });
            }
        }
        for (which, f) in [("h1", &data.h1), ("h2", &data.h2), ("e1", &data.e1), ("e2", &data.e2)] {
            if f.len() != g.len() {
                return Err(ProblemError::LengthMismatch { which, expected: g.len(), found: f.len() });
            }
            if let Some(x) = f.values().iter().position(|v| !v.is_finite()) {
                return Err(ProblemError::NonFinite { which, vertex: g.id(x).to_owned() });
            }
        }
        let h0 = data.h0.unwrap_or_else(|| data.h1.min().min(data.h2.min()));
        if !(h0 > 0.0) {
            return Err(ProblemError::NonpositiveFloor(h0));
        }
        for (which, h) in [("h1", &data.h1), ("h2", &data.h2)] {
            if let Some(x) = h.values().iter().position(|&v| v < h0) {
                return Err(ProblemError::PotentialBelowFloor {
                    which,
                    vertex: g.id(x).to_owned(),
                    value: h[x],
                    h0,
                });
            }
        }
        if data.e1.is_zero() && data.e2.is_zero() {
            return Err(ProblemError::ZeroPerturbation);
        }
        for (which, value) in [("lambda1", data.lambda1), ("lambda2", data.lambda2)] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(ProblemError::NonpositiveParameter { which, value });
            }
        }
        if let Some((x, value)) = data.nonlinearity.first_nonzero_at_origin(g.len()) {
            return Err(ProblemError::NonzeroAtOrigin { vertex: g.id(x).to_owned(), value });
        }
        validate_hypothesis(&data, h0)?;
        let mu0 = g.mu0();
        Ok(Self { data, h0, mu0 })
    }

    pub fn data(&self) -> &ProblemData {
        &self.data
    }

    pub fn into_data(self) -> ProblemData {
        self.data
    }

    pub fn name(&self) -> &str {
        &self.data.name
    }

    pub fn graph(&self) -> &WeightedGraph {
        &self.data.graph
    }

    pub fn n(&self) -> usize {
        self.data.graph.len()
    }

    pub fn p(&self) -> f64 {
        self.data.p
    }

    pub fn q(&self) -> f64 {
        self.data.q
    }

    pub fn h1(&self) -> &VertexFunction {
        &self.data.h1
    }

    pub fn h2(&self) -> &VertexFunction {
        &self.data.h2
    }

    pub fn e1(&self) -> &VertexFunction {
        &self.data.e1
    }

    pub fn e2(&self) -> &VertexFunction {
        &self.data.e2
    }

    pub fn lambda1(&self) -> f64 {
        self.data.lambda1
    }

    pub fn lambda2(&self) -> f64 {
        self.data.lambda2
    }

    pub fn nonlinearity(&self) -> &Nonlinearity {
        &self.data.nonlinearity
    }

    pub fn hypothesis(&self) -> &HypothesisParams {
        &self.data.hypothesis
    }

    /// Potential floor: every `h_i(x) ≥ h0 > 0`.
    pub fn h0(&self) -> f64 {
        self.h0
    }

    pub fn mu0(&self) -> f64 {
        self.mu0
    }

    pub fn max_exponent(&self) -> f64 {
        self.data.p.max(self.data.q)
    }

    /// Common value of `λ1 = λ2`, if they agree.
    pub fn common_lambda(&self) -> Option<f64> {
        (self.data.lambda1 == self.data.lambda2).then_some(self.data.lambda1)
    }

    pub fn with_lambda(&self, lambda1: f64, lambda2: f64) -> Result<Self, ProblemError> {
        let mut data = self.data.clone();
        data.lambda1 = lambda1;
        data.lambda2 = lambda2;
        Self::new(data)
    }

    pub fn with_nonlinearity(&self, nonlinearity: Nonlinearity) -> Result<Self, ProblemError> {
        let mut data = self.data.clone();
        data.nonlinearity = nonlinearity;
        Self::new(data)
    }

    pub fn with_hypothesis(&self, hypothesis: HypothesisParams) -> Result<Self, ProblemError> {
        let mut data = self.data.clone();
        data.hypothesis = hypothesis;
        Self::new(data)
    }

    /// Vertex used for probe directions in the u-channel: the configured
    /// `x1`, else the first vertex where `e1 > 0`, else where `e2 > 0`.
    pub fn probe_vertex(&self) -> usize {
        self.data
            .hypothesis
            .x1
            .or_else(|| self.data.e1.values().iter().position(|&v| v > 0.0))
            .or_else(|| self.data.e2.values().iter().position(|&v| v > 0.0))
            .unwrap_or(0)
    }

    /// Spike vertex for the endpoint: configured `x3`, else the vertex with
    /// the largest `e1 + e2`.
    pub fn spike_vertex(&self) -> usize {
        self.data.hypothesis.x3.unwrap_or_else(|| self.largest_perturbation_vertex())
    }

    /// Spike vertex for the small-ball start: configured `x4`, else the
    /// spike vertex.
    pub fn ball_vertex(&self) -> usize {
        self.data.hypothesis.x4.unwrap_or_else(|| self.spike_vertex())
    }

    fn largest_perturbation_vertex(&self) -> usize {
        let total: Vec<f64> =
            self.data.e1.values().iter().zip(self.data.e2.values()).map(|(a, b)| a + b).collect();
        let mut best = 0;
        for (x, &v) in total.iter().enumerate() {
            if v > total[best] {
                best = x;
            }
        }
        best
    }
}

fn validate_hypothesis(data: &ProblemData, h0: f64) -> Result<(), ProblemError> {
    let hp = &data.hypothesis;
    let n = data.graph.len();
    for (name, f) in [
        ("f1", &hp.f1),
        ("f2", &hp.f2),
        ("g1", &hp.g1),
        ("g2", &hp.g2),
        ("K1", &hp.k1),
        ("K2", &hp.k2),
        ("K3", &hp.k3),
        ("b", &hp.majorant_weight),
    ] {
        if let Some(f) = f {
            if f.len() != n {
                return Err(ProblemError::Hypothesis(format!("{name} has {} values, expected {n}", f.len())));
            }
        }
    }
    for (name, x) in [("x1", hp.x1), ("x2", hp.x2), ("x3", hp.x3), ("x4", hp.x4)] {
        if let Some(x) = x {
            if x >= n {
                return Err(ProblemError::Hypothesis(format!("{name} index {x} out of range")));
            }
        }
    }
    let max_pq = data.p.max(data.q);
    if let Some(nu) = hp.nu {
        if !(nu > max_pq) {
            return Err(ProblemError::Hypothesis(format!("nu = {nu} must exceed max(p, q) = {max_pq}")));
        }
        if let Some(a) = hp.a {
            let cap = (nu / data.p - 1.0).min(nu / data.q - 1.0) * h0;
            if !(a >= 0.0 && a < cap) {
                return Err(ProblemError::Hypothesis(format!("A = {a} must lie in [0, {cap})")));
            }
        }
    }
    for (name, v) in [("l0", hp.l0), ("l1", hp.l1), ("l2", hp.l2), ("M", hp.m)] {
        if let Some(v) = v {
            if !(v > 0.0) {
                return Err(ProblemError::Hypothesis(format!("{name} = {v} must be positive")));
            }
        }
    }
    for (name, v) in [("beta1", hp.beta1), ("beta2", hp.beta2), ("beta3", hp.beta3)] {
        if let Some(v) = v {
            if !(v > 1.0) {
                return Err(ProblemError::Hypothesis(format!("{name} = {v} must exceed 1")));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::families;

    fn base() -> ProblemData {
        let g = families::path(3);
        ProblemData {
            name: "test".into(),
            p: 2.0,
            q: 3.0,
            h1: VertexFunction::constant(3, 2.0),
            h2: VertexFunction::constant(3, 2.0),
            e1: VertexFunction::spike(3, 0),
            e2: VertexFunction::zeros(3),
            lambda1: 1.0,
            lambda2: 1.0,
            nonlinearity: Nonlinearity::Zero,
            h0: None,
            hypothesis: HypothesisParams::default(),
            graph: g,
        }
    }

    #[test]
    fn valid_spec_caches_floors() {
        let spec = ProblemSpec::new(base()).unwrap();
        assert_eq!(spec.h0(), 2.0);
        assert_eq!(spec.mu0(), 1.0);
    }

    #[test]
    fn zero_potential_is_rejected() {
        let mut data = base();
        data.h1 = VertexFunction::zeros(3);
        let err = ProblemSpec::new(data).unwrap_err();
        assert!(err.to_string().contains("(H1) violated"));
    }

    #[test]
    fn zero_perturbations_are_rejected() {
        let mut data = base();
        data.e1 = VertexFunction::zeros(3);
        let err = ProblemSpec::new(data).unwrap_err();
        assert_eq!(err.to_string(), "perturbations identically zero");
    }

    #[test]
    fn declared_floor_above_minimum_is_rejected() {
        let mut data = base();
        data.h0 = Some(2.5);
        assert!(matches!(ProblemSpec::new(data), Err(ProblemError::PotentialBelowFloor { .. })));
    }

    #[test]
    fn exponent_and_origin_checks() {
        let mut data = base();
        data.q = 1.5;
        assert!(matches!(ProblemSpec::new(data), Err(ProblemError::ExponentBelowTwo { which: "q", .. })));
        let mut data = base();
        data.nonlinearity = Nonlinearity::Zero.plus_constant(0.5);
        assert!(matches!(ProblemSpec::new(data), Err(ProblemError::NonzeroAtOrigin { .. })));
    }

    #[test]
    fn hypothesis_nu_and_a_ranges() {
        let mut data = base();
        data.hypothesis.nu = Some(3.0);
        assert!(ProblemSpec::new(data).is_err());
        let mut data = base();
        data.hypothesis.nu = Some(4.0);
        data.hypothesis.a = Some(0.7);
        assert!(ProblemSpec::new(data).is_err());
        let mut data = base();
        data.hypothesis.nu = Some(4.0);
        data.hypothesis.a = Some(0.25);
        assert!(ProblemSpec::new(data).is_ok());
    }
}
