//! Gradient form, gradient length, (p-)Laplacian, μ-integration and norms.
//!
//! Every operation comes in a per-vertex form that validates its vertex
//! argument and a whole-graph `_all` form used by the inner loops of the
//! functional and the solvers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::WeightedGraph;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CalculusError {
    #[error("exponent {0} is below 2")]
    ExponentBelowTwo(f64),
    #[error("norm exponent {0} must exceed 1")]
    ExponentNotAboveOne(f64),
    #[error("target exponent {r} is below source exponent {s}")]
    TargetBelowSource { s: f64, r: f64 },
    #[error("potential is nonpositive ({value}) at vertex {vertex}")]
    NonpositivePotential { vertex: usize, value: f64 },
    #[error("function has {found} values, graph has {expected} vertices")]
    LengthMismatch { expected: usize, found: usize },
    #[error("vertex index {0} out of range")]
    VertexOutOfRange(usize),
    #[error("non-finite value at vertex {0}")]
    NonFinite(usize),
    #[error("constant must be positive, got {0}")]
    NonpositiveConstant(f64),
}

/// A real function on the vertices, indexed densely.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexFunction(pub Vec<f64>);

impl VertexFunction {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn constant(n: usize, value: f64) -> Self {
        Self(vec![value; n])
    }

    /// Indicator of a single vertex.
    pub fn spike(n: usize, x: usize) -> Self {
        let mut values = vec![0.0; n];
        values[x] = 1.0;
        Self(values)
    }

    pub fn indicator(n: usize, set: &[usize]) -> Self {
        let mut values = vec![0.0; n];
        for &x in set {
            values[x] = 1.0;
        }
        Self(values)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self(self.0.iter().map(|v| v * factor).collect())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self(self.0.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(&a, &b)| f(a, b)).collect())
    }

    pub fn sup_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&v| v == 0.0)
    }

    /// Checks length against `g` and finiteness of every value.
    pub fn check_on(&self, g: &WeightedGraph) -> Result<(), CalculusError> {
        if self.len() != g.len() {
            return Err(CalculusError::LengthMismatch { expected: g.len(), found: self.len() });
        }
        match self.0.iter().position(|v| !v.is_finite()) {
            Some(x) => Err(CalculusError::NonFinite(x)),
            None => Ok(()),
        }
    }
}

impl std::ops::Index<usize> for VertexFunction {
    type Output = f64;
    fn index(&self, x: usize) -> &f64 {
        &self.0[x]
    }
}

impl std::ops::IndexMut<usize> for VertexFunction {
    fn index_mut(&mut self, x: usize) -> &mut f64 {
        &mut self.0[x]
    }
}

impl From<Vec<f64>> for VertexFunction {
    fn from(values: Vec<f64>) -> Self {
        Self(values)
    }
}

/// Norm exponent; `Infinity` is the sup norm and never a limit of finite ones.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

impl Exponent {
    /// Hölder conjugate `s/(s-1)`.
    pub fn conjugate(s: f64) -> Exponent {
        Exponent::Finite(s / (s - 1.0))
    }
}

impl std::fmt::Display for Exponent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Exponent::Finite(r) => write!(f, "{r}"),
            Exponent::Infinity => write!(f, "inf"),
        }
    }
}

/// Sum with pairwise (cascade) reduction; the reduction tree depends only on
/// the slice length.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

fn check_vertex(g: &WeightedGraph, x: usize) -> Result<(), CalculusError> {
    if x < g.len() {
        Ok(())
    } else {
        Err(CalculusError::VertexOutOfRange(x))
    }
}

fn check_len(g: &WeightedGraph, f: &VertexFunction) -> Result<(), CalculusError> {
    if f.len() == g.len() {
        Ok(())
    } else {
        Err(CalculusError::LengthMismatch { expected: g.len(), found: f.len() })
    }
}

fn check_p(p: f64) -> Result<(), CalculusError> {
    if p >= 2.0 && p.is_finite() {
        Ok(())
    } else {
        Err(CalculusError::ExponentBelowTwo(p))
    }
}

fn gamma_unchecked(g: &WeightedGraph, u: &[f64], v: &[f64], x: usize) -> f64 {
    let sum: f64 = g
        .neighbors(x)
        .iter()
        .map(|&(y, w)| w * (u[y] - u[x]) * (v[y] - v[x]))
        .sum();
    sum / (2.0 * g.mu(x))
}

/// `Γ(u,v)(x) = 1/(2μ(x)) Σ_{y~x} ω_xy (u(y)-u(x)) (v(y)-v(x))`.
pub fn gamma(
    g: &WeightedGraph,
    u: &VertexFunction,
    v: &VertexFunction,
    x: usize,
) -> Result<f64, CalculusError> {
    check_len(g, u)?;
    check_len(g, v)?;
    check_vertex(g, x)?;
    Ok(gamma_unchecked(g, &u.0, &v.0, x))
}

pub fn gamma_all(g: &WeightedGraph, u: &[f64], v: &[f64]) -> Vec<f64> {
    (0..g.len()).map(|x| gamma_unchecked(g, u, v, x)).collect()
}

/// `|∇u|(x) = sqrt(Γ(u,u)(x))`.
pub fn grad_len(g: &WeightedGraph, u: &VertexFunction, x: usize) -> Result<f64, CalculusError> {
    Ok(gamma(g, u, u, x)?.sqrt())
}

pub fn grad_len_all(g: &WeightedGraph, u: &[f64]) -> Vec<f64> {
    (0..g.len()).map(|x| gamma_unchecked(g, u, u, x).max(0.0).sqrt()).collect()
}

/// Standard Laplacian `Δu(x) = 1/μ(x) Σ_{y~x} ω_xy (u(y)-u(x))`.
pub fn laplacian(g: &WeightedGraph, u: &VertexFunction, x: usize) -> Result<f64, CalculusError> {
    check_len(g, u)?;
    check_vertex(g, x)?;
    let sum: f64 = g.neighbors(x).iter().map(|&(y, w)| w * (u[y] - u[x])).sum();
    Ok(sum / g.mu(x))
}

/// `|∇u|^{p-2}` at every vertex, with the value 1 for `p = 2` even where the
/// gradient vanishes, and 0 for `p > 2` there.
pub fn gradient_weight(g: &WeightedGraph, u: &[f64], p: f64) -> Vec<f64> {
    if p == 2.0 {
        return vec![1.0; g.len()];
    }
    gamma_all(g, u, u).into_iter().map(|q| q.max(0.0).powf(p / 2.0 - 1.0)).collect()
}

fn p_laplacian_with_weight(g: &WeightedGraph, u: &[f64], weight: &[f64], x: usize) -> f64 {
    let sum: f64 = g
        .neighbors(x)
        .iter()
        .map(|&(y, w)| (weight[y] + weight[x]) * w * (u[y] - u[x]))
        .sum();
    sum / (2.0 * g.mu(x))
}

/// `Δ_p u(x) = 1/(2μ(x)) Σ_{y~x} (|∇u|^{p-2}(y) + |∇u|^{p-2}(x)) ω_xy (u(y)-u(x))`.
pub fn p_laplacian(
    g: &WeightedGraph,
    u: &VertexFunction,
    p: f64,
    x: usize,
) -> Result<f64, CalculusError> {
    check_p(p)?;
    check_len(g, u)?;
    check_vertex(g, x)?;
    let weight = gradient_weight(g, &u.0, p);
    Ok(p_laplacian_with_weight(g, &u.0, &weight, x))
}

pub fn p_laplacian_all(g: &WeightedGraph, u: &[f64], p: f64) -> Result<Vec<f64>, CalculusError> {
    check_p(p)?;
    let weight = gradient_weight(g, u, p);
    Ok((0..g.len()).map(|x| p_laplacian_with_weight(g, u, &weight, x)).collect())
}

/// `∫_V f dμ = Σ_x f(x) μ(x)`.
pub fn integrate(g: &WeightedGraph, f: &VertexFunction) -> Result<f64, CalculusError> {
    check_len(g, f)?;
    Ok(integrate_slice(g, &f.0))
}

pub fn integrate_slice(g: &WeightedGraph, f: &[f64]) -> f64 {
    let terms: Vec<f64> = f.iter().zip(g.measure()).map(|(v, m)| v * m).collect();
    pairwise_sum(&terms)
}

/// `L^r` norm; `r = ∞` is the maximum of `|u|`.
pub fn lp_norm(g: &WeightedGraph, u: &VertexFunction, r: Exponent) -> Result<f64, CalculusError> {
    check_len(g, u)?;
    match r {
        Exponent::Infinity => Ok(u.sup_abs()),
        Exponent::Finite(r) => {
            if !(r > 1.0) {
                return Err(CalculusError::ExponentNotAboveOne(r));
            }
            let powered: Vec<f64> = u.0.iter().map(|v| v.abs().powf(r)).collect();
            Ok(integrate_slice(g, &powered).powf(1.0 / r))
        }
    }
}

/// `(∫ |∇u|^s + h |u|^s dμ)^{1/s}`.
pub fn sobolev_norm(
    g: &WeightedGraph,
    u: &VertexFunction,
    s: f64,
    h: &VertexFunction,
) -> Result<f64, CalculusError> {
    check_len(g, u)?;
    check_len(g, h)?;
    if !(s > 1.0) {
        return Err(CalculusError::ExponentNotAboveOne(s));
    }
    if let Some(x) = h.0.iter().position(|&v| !(v > 0.0)) {
        return Err(CalculusError::NonpositivePotential { vertex: x, value: h[x] });
    }
    Ok(sobolev_norm_pow(g, &u.0, s, &h.0).powf(1.0 / s))
}

/// `∫ |∇u|^s + h |u|^s dμ`, no argument checks.
pub fn sobolev_norm_pow(g: &WeightedGraph, u: &[f64], s: f64, h: &[f64]) -> f64 {
    let sq = gamma_all(g, u, u);
    let terms: Vec<f64> = (0..g.len())
        .map(|x| (sq[x].max(0.0).powf(s / 2.0) + h[x] * u[x].abs().powf(s)) * g.mu(x))
        .collect();
    pairwise_sum(&terms)
}

/// Constant `C` with `‖u‖_{L^r} ≤ C ‖u‖_{W^{1,s}_h}` given `h ≥ h0`, `μ ≥ mu0`.
///
/// For `r = ∞` this is `(h0 mu0)^{-1/s}`; for finite `r ≥ s` it is
/// `mu0^{(s-r)/(sr)} h0^{-1/s}`.
pub fn embedding_constant(s: f64, r: Exponent, h0: f64, mu0: f64) -> Result<f64, CalculusError> {
    if !(s > 1.0) {
        return Err(CalculusError::ExponentNotAboveOne(s));
    }
    for c in [h0, mu0] {
        if !(c > 0.0) {
            return Err(CalculusError::NonpositiveConstant(c));
        }
    }
    match r {
        Exponent::Infinity => Ok((h0 * mu0).powf(-1.0 / s)),
        Exponent::Finite(r) => {
            if r < s {
                return Err(CalculusError::TargetBelowSource { s, r });
            }
            Ok(mu0.powf((s - r) / (s * r)) * h0.powf(-1.0 / s))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmbeddingCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Compares `‖u‖_{L^r}` against the embedding constant times `‖u‖_{W^{1,s}_h}`,
/// with `h0 = min h` and `mu0` from the graph. Absolute slack 1e-12.
pub fn check_embedding(
    g: &WeightedGraph,
    u: &VertexFunction,
    s: f64,
    r: Exponent,
    h: &VertexFunction,
) -> Result<EmbeddingCheck, CalculusError> {
    let lhs = lp_norm(g, u, r)?;
    let constant = embedding_constant(s, r, h.min(), g.mu0())?;
    let rhs = constant * sobolev_norm(g, u, s, h)?;
    Ok(EmbeddingCheck { lhs, rhs, holds: lhs <= rhs + 1e-12 })
}

/// Outcome of one identity in [`identity_suite`].
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityResult {
    pub name: String,
    pub max_error: f64,
    pub tolerance: f64,
    pub holds: bool,
}

fn random_values(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Largest violation of the calculus identities over `trials` random
/// functions on `g`: bilinearity of Γ, Cauchy–Schwarz, the reverse triangle
/// inequality for `|∇·|`, summation by parts for Δ_p, and `Δ_2 = Δ`.
pub fn identity_suite(g: &WeightedGraph, trials: usize, seed: u64) -> Vec<IdentityResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = g.len();
    let mut bilinear = 0.0f64;
    let mut cauchy = 0.0f64;
    let mut triangle = 0.0f64;
    let mut by_parts = 0.0f64;
    let mut laplace = 0.0f64;
    for _ in 0..trials {
        let u1 = random_values(&mut rng, n);
        let u2 = random_values(&mut rng, n);
        let v = random_values(&mut rng, n);
        let theta: f64 = rng.random_range(-3.0..3.0);
        let sum: Vec<f64> = u1.iter().zip(&u2).map(|(a, b)| a + b).collect();
        let scaled: Vec<f64> = u1.iter().map(|a| theta * a).collect();
        let diff: Vec<f64> = u2.iter().zip(&u1).map(|(a, b)| a - b).collect();
        let len_u1 = grad_len_all(g, &u1);
        let len_u2 = grad_len_all(g, &u2);
        let len_v = grad_len_all(g, &v);
        let len_diff = grad_len_all(g, &diff);
        for x in 0..n {
            let g1 = gamma_unchecked(g, &u1, &v, x);
            let g2 = gamma_unchecked(g, &u2, &v, x);
            let add = gamma_unchecked(g, &sum, &v, x) - g1 - g2;
            let mul = gamma_unchecked(g, &scaled, &v, x) - theta * g1;
            bilinear = bilinear.max(add.abs()).max(mul.abs());
            cauchy = cauchy.max(g1 - len_u1[x] * len_v[x]);
            triangle = triangle.max((len_u2[x] - len_u1[x]).abs() - len_diff[x]);
            let lap = laplacian(g, &VertexFunction(u1.clone()), x).unwrap_or(f64::NAN);
            let weight = vec![1.0; n];
            laplace = laplace.max((p_laplacian_with_weight(g, &u1, &weight, x) - lap).abs());
        }
        for p in [2.0, 2.5, 3.0, 4.0] {
            by_parts = by_parts.max(by_parts_relative_error(g, &u1, &v, p));
        }
    }
    let entry = |name: &str, max_error: f64, tolerance: f64| IdentityResult {
        name: name.to_owned(),
        max_error,
        tolerance,
        holds: max_error <= tolerance,
    };
    vec![
        entry("gamma bilinearity", bilinear, 1e-12),
        entry("cauchy-schwarz", cauchy.max(0.0), 1e-12),
        entry("reverse triangle", triangle.max(0.0), 1e-12),
        entry("summation by parts", by_parts, 1e-10),
        entry("p=2 laplacian", laplace, 1e-12),
    ]
}

/// `|∫ Δ_p u φ dμ + ∫ |∇u|^{p-2} Γ(u,φ) dμ|` relative to the magnitude of the
/// summed terms, so cancellation in either side does not inflate the ratio.
pub fn by_parts_relative_error(g: &WeightedGraph, u: &[f64], phi: &[f64], p: f64) -> f64 {
    let Ok(lap) = p_laplacian_all(g, u, p) else {
        return f64::NAN;
    };
    let weight = gradient_weight(g, u, p);
    let gam = gamma_all(g, u, phi);
    let lhs_terms: Vec<f64> = (0..g.len()).map(|x| lap[x] * phi[x]).collect();
    let rhs_terms: Vec<f64> = (0..g.len()).map(|x| -weight[x] * gam[x]).collect();
    let lhs = integrate_slice(g, &lhs_terms);
    let rhs = integrate_slice(g, &rhs_terms);
    let scale: f64 = lhs_terms.iter().chain(&rhs_terms).map(|t| t.abs() * 0.5).sum();
    if scale == 0.0 {
        return (lhs - rhs).abs();
    }
    (lhs - rhs).abs() / scale
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::families;
    use approx::assert_abs_diff_eq;

    fn f(values: &[f64]) -> VertexFunction {
        VertexFunction(values.to_vec())
    }

    #[test]
    fn gamma_on_two_vertices() {
        let g = families::path(2);
        assert_abs_diff_eq!(gamma(&g, &f(&[0.0, 1.0]), &f(&[0.0, 1.0]), 0).unwrap(), 0.5);
        assert_abs_diff_eq!(gamma(&g, &f(&[0.0, 1.0]), &f(&[1.0, 0.0]), 0).unwrap(), -0.5);
        assert_eq!(gamma(&g, &f(&[2.0, 2.0]), &f(&[0.0, 1.0]), 1).unwrap(), 0.0);
        assert!(gamma(&g, &f(&[0.0, 1.0]), &f(&[0.0, 1.0]), 2).is_err());
    }

    #[test]
    fn gradient_length() {
        let g = families::path(2);
        let u = f(&[0.0, 1.0]);
        assert_abs_diff_eq!(grad_len(&g, &u, 0).unwrap(), 0.5f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(
            grad_len(&g, &u.scaled(2.0), 0).unwrap(),
            2.0 * grad_len(&g, &u, 0).unwrap(),
            epsilon = 1e-15
        );
        assert_eq!(grad_len(&g, &f(&[3.0, 3.0]), 0).unwrap(), 0.0);
    }

    #[test]
    fn p_laplacian_values() {
        let g = families::path(2);
        let u = f(&[0.0, 1.0]);
        assert_abs_diff_eq!(p_laplacian(&g, &u, 2.0, 0).unwrap(), 1.0);
        assert_abs_diff_eq!(p_laplacian(&g, &u, 3.0, 0).unwrap(), 0.5f64.sqrt(), epsilon = 1e-15);
        assert_eq!(p_laplacian(&g, &f(&[1.0, 1.0]), 4.0, 1).unwrap(), 0.0);
        assert_eq!(p_laplacian(&g, &u, 1.5, 0), Err(CalculusError::ExponentBelowTwo(1.5)));
    }

    #[test]
    fn integration_and_norms() {
        let g = families::path(2);
        let u = f(&[0.0, 1.0]);
        assert_eq!(integrate(&g, &u).unwrap(), 1.0);
        assert_eq!(integrate(&g, &u.scaled(2.0)).unwrap(), 2.0);
        assert_eq!(lp_norm(&g, &u, Exponent::Finite(2.0)).unwrap(), 1.0);
        assert_eq!(lp_norm(&g, &u, Exponent::Infinity).unwrap(), 1.0);
        assert_eq!(lp_norm(&g, &VertexFunction::zeros(2), Exponent::Finite(3.0)).unwrap(), 0.0);
        assert!(lp_norm(&g, &u, Exponent::Finite(1.0)).is_err());
        let h = VertexFunction::constant(2, 3.0);
        assert_abs_diff_eq!(sobolev_norm(&g, &u, 2.0, &h).unwrap(), 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            sobolev_norm(&g, &u.scaled(-3.0), 2.0, &h).unwrap(),
            6.0,
            epsilon = 1e-14
        );
        assert!(sobolev_norm(&g, &u, 2.0, &VertexFunction::zeros(2)).is_err());
    }

    #[test]
    fn embedding_constants() {
        let sup = embedding_constant(2.0, Exponent::Infinity, 3.0, 1.0).unwrap();
        assert_abs_diff_eq!(sup, 0.577_350_269_189_625_8, epsilon = 1e-15);
        let same = embedding_constant(2.5, Exponent::Finite(2.5), 3.0, 0.3).unwrap();
        assert_abs_diff_eq!(same, 3.0f64.powf(-0.4), epsilon = 1e-15);
        let lr = embedding_constant(2.0, Exponent::Finite(3.0), 3.0, 1.0).unwrap();
        assert_abs_diff_eq!(lr, 3.0f64.powf(-0.5), epsilon = 1e-15);
        assert!(embedding_constant(3.0, Exponent::Finite(2.0), 1.0, 1.0).is_err());
    }

    #[test]
    fn embedding_check_on_two_vertices() {
        let g = families::path(2);
        let h = VertexFunction::constant(2, 3.0);
        let c = check_embedding(&g, &f(&[0.0, 1.0]), 2.0, Exponent::Infinity, &h).unwrap();
        assert_eq!(c.lhs, 1.0);
        assert_abs_diff_eq!(c.rhs, 1.154_700_538_379_251_5, epsilon = 1e-12);
        assert!(c.holds);
        let zero = check_embedding(&g, &VertexFunction::zeros(2), 2.0, Exponent::Infinity, &h).unwrap();
        assert!(zero.holds && zero.lhs == 0.0 && zero.rhs == 0.0);
    }

    #[test]
    fn pairwise_sum_matches_naive_on_short_input() {
        let v: Vec<f64> = (0..100).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 4950.0);
    }

    #[test]
    fn identity_suite_passes_on_grid() {
        let g = families::grid(3, 4);
        for r in identity_suite(&g, 20, 7) {
            assert!(r.holds, "{} error {}", r.name, r.max_error);
        }
    }
}
