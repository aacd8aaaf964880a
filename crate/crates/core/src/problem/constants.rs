//! Closed-form constants of the superlinear case: the admissible parameter
//! range `λ0`, the ball radius `ρ` with its boundary level `α`, and the spike
//! constants `D` used to build a negative-energy endpoint.

use crate::calculus::{self, Exponent, VertexFunction};
use crate::graph::WeightedGraph;

use super::{ProblemError, ProblemSpec};

/// Relative margin `δ` in `ρ = (1 - δ) Λ0`.
pub const RHO_MARGIN: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaBound {
    /// `Λ0 = min{(l0/2) min{(h0 μ0)^{1/p}, (h0 μ0)^{1/q}}, 1}`.
    pub big_lambda0: f64,
    pub lambda0: f64,
    /// `min{1, q-1} / (2^{max(p,q)-1} (pq + p))`.
    pub coefficient: f64,
    /// `max{h0^{-1/p} ‖e1‖_{p'}, h0^{-1/q} ‖e2‖_{q'}}`.
    pub perturbation_size: f64,
    pub max_exponent: f64,
}

/// `λ0` from already computed perturbation norms `‖e1‖_{p/(p-1)}`, `‖e2‖_{q/(q-1)}`.
pub fn lambda_bound(
    p: f64,
    q: f64,
    h0: f64,
    mu0: f64,
    e1_norm: f64,
    e2_norm: f64,
    l0: f64,
) -> Result<LambdaBound, ProblemError> {
    if !(l0 > 0.0) {
        return Err(ProblemError::NonpositiveRadius(l0));
    }
    let max_exponent = p.max(q);
    let hm = h0 * mu0;
    let big_lambda0 = ((l0 / 2.0) * hm.powf(1.0 / p).min(hm.powf(1.0 / q))).min(1.0);
    let coefficient = 1f64.min(q - 1.0) / (2f64.powf(max_exponent - 1.0) * (p * q + p));
    let perturbation_size = (h0.powf(-1.0 / p) * e1_norm).max(h0.powf(-1.0 / q) * e2_norm);
    if !(perturbation_size > 0.0) {
        return Err(ProblemError::ZeroPerturbationNorm);
    }
    let lambda0 = coefficient / perturbation_size * big_lambda0.powf(max_exponent - 1.0);
    Ok(LambdaBound { big_lambda0, lambda0, coefficient, perturbation_size, max_exponent })
}

/// `‖e1‖_{p/(p-1)}` and `‖e2‖_{q/(q-1)}`.
pub fn perturbation_norms(spec: &ProblemSpec) -> (f64, f64) {
    let g = spec.graph();
    let e1 = calculus::lp_norm(g, spec.e1(), Exponent::conjugate(spec.p())).unwrap_or(f64::NAN);
    let e2 = calculus::lp_norm(g, spec.e2(), Exponent::conjugate(spec.q())).unwrap_or(f64::NAN);
    (e1, e2)
}

pub fn lambda0_params(spec: &ProblemSpec, l0: f64) -> Result<LambdaBound, ProblemError> {
    let (e1, e2) = perturbation_norms(spec);
    lambda_bound(spec.p(), spec.q(), spec.h0(), spec.mu0(), e1, e2, l0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhoAlpha {
    pub rho: f64,
    pub alpha: f64,
}

/// `α = coefficient · ρ^{max(p,q)} - λ · perturbation_size · ρ`.
pub fn alpha_at(bound: &LambdaBound, rho: f64, lambda: f64) -> f64 {
    bound.coefficient * rho.powf(bound.max_exponent) - lambda * bound.perturbation_size * rho
}

/// Ball radius `ρ = (1 - δ) Λ0` and the lower bound `α > 0` of the energy on
/// its boundary.
pub fn rho_alpha(spec: &ProblemSpec, l0: f64, lambda: f64) -> Result<RhoAlpha, ProblemError> {
    let bound = lambda0_params(spec, l0)?;
    rho_alpha_from(&bound, lambda)
}

pub fn rho_alpha_from(bound: &LambdaBound, lambda: f64) -> Result<RhoAlpha, ProblemError> {
    if !(lambda > 0.0 && lambda < bound.lambda0) {
        return Err(ProblemError::LambdaOutOfRange { lambda, lambda0: bound.lambda0 });
    }
    let rho = (1.0 - RHO_MARGIN) * bound.big_lambda0;
    let alpha = alpha_at(bound, rho, lambda);
    if !(alpha > 0.0) {
        return Err(ProblemError::NonpositiveAlpha { alpha, rho, lambda });
    }
    Ok(RhoAlpha { rho, alpha })
}

/// Closed-form spike constant at `x` with exponent `p`:
/// `(deg(x)/2)^{p/2} (Σ_{y~x} μ(y)^{1-p/2} + μ(x)^{1-p/2})`.
///
/// Equals `∫ |∇1_x|^p dμ` when `x` has a single neighbour and bounds it from
/// above otherwise, because every neighbour term carries `deg(x)` in place of
/// its own edge weight.
pub fn spike_formula(g: &WeightedGraph, x: usize, p: f64) -> f64 {
    let deg: f64 = g.neighbors(x).iter().map(|&(_, w)| w).sum();
    let exponent = 1.0 - p / 2.0;
    let around: f64 = g.neighbors(x).iter().map(|&(y, _)| g.mu(y).powf(exponent)).sum();
    (deg / 2.0).powf(p / 2.0) * (around + g.mu(x).powf(exponent))
}

/// `∫ |∇1_x|^p dμ` evaluated through the gradient form.
pub fn spike_energy(g: &WeightedGraph, x: usize, p: f64) -> f64 {
    let spike = VertexFunction::spike(g.len(), x);
    let squares = calculus::gamma_all(g, spike.values(), spike.values());
    calculus::integrate_slice(g, &squares.iter().map(|q| q.powf(p / 2.0)).collect::<Vec<_>>())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpikeConstants {
    pub vertex: usize,
    /// Closed form for the u-channel exponent.
    pub d1: f64,
    /// Closed form for the v-channel exponent.
    pub d2: f64,
    /// `max{(D1 + μ h1)/(p μ), (D2 + μ h2)/(q μ)}` at the vertex.
    pub m_threshold: f64,
    /// `∫ |∇1_x|^p dμ`.
    pub exact1: f64,
    /// `∫ |∇1_x|^q dμ`.
    pub exact2: f64,
}

pub fn spike_constants(spec: &ProblemSpec, x: usize) -> Result<SpikeConstants, ProblemError> {
    let g = spec.graph();
    if x >= g.len() {
        return Err(ProblemError::UnknownVertex(x.to_string()));
    }
    if !(spec.e1()[x] + spec.e2()[x] > 0.0) {
        return Err(ProblemError::PerturbationZeroAt(g.id(x).to_owned()));
    }
    let (p, q) = (spec.p(), spec.q());
    let d1 = spike_formula(g, x, p);
    let d2 = spike_formula(g, x, q);
    let mu = g.mu(x);
    let m_threshold = ((d1 + mu * spec.h1()[x]) / (p * mu)).max((d2 + mu * spec.h2()[x]) / (q * mu));
    Ok(SpikeConstants {
        vertex: x,
        d1,
        d2,
        m_threshold,
        exact1: spike_energy(g, x, p),
        exact2: spike_energy(g, x, q),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::families;
    use approx::assert_abs_diff_eq;

    fn normalized() -> LambdaBound {
        lambda_bound(2.0, 3.0, 1.0, 1.0, 1.0, 1.0, 2.0).unwrap()
    }

    #[test]
    fn normalized_lambda0() {
        let b = normalized();
        assert_eq!(b.big_lambda0, 1.0);
        assert_eq!(b.lambda0, 0.03125);
    }

    #[test]
    fn doubling_norms_halves_lambda0() {
        let b = lambda_bound(2.0, 3.0, 1.0, 1.0, 2.0, 2.0, 2.0).unwrap();
        assert_eq!(b.lambda0, normalized().lambda0 / 2.0);
    }

    #[test]
    fn alpha_values() {
        let b = normalized();
        let alpha = alpha_at(&b, 0.999, 1.0 / 64.0);
        assert_abs_diff_eq!(alpha, 0.999f64.powi(3) / 32.0 - 0.999 / 64.0, epsilon = 1e-15);
        assert_abs_diff_eq!(alpha, 0.015_546_968_718_75, epsilon = 1e-12);
        assert_eq!(alpha_at(&b, 0.999, 0.0), 0.999f64.powi(3) / 32.0);
        assert!(matches!(rho_alpha_from(&b, b.lambda0), Err(ProblemError::LambdaOutOfRange { .. })));
        let ok = rho_alpha_from(&b, 1.0 / 64.0).unwrap();
        assert_abs_diff_eq!(ok.rho, 0.999, epsilon = 1e-15);
    }

    #[test]
    fn zero_norms_rejected() {
        assert_eq!(
            lambda_bound(2.0, 3.0, 1.0, 1.0, 0.0, 0.0, 2.0),
            Err(ProblemError::ZeroPerturbationNorm)
        );
    }

    #[test]
    fn spike_closed_form_values() {
        let p2 = families::path(2);
        assert_eq!(spike_formula(&p2, 0, 2.0), 1.0);
        assert_eq!(spike_energy(&p2, 0, 2.0), 1.0);
        let s3 = families::star(3);
        assert_eq!(spike_formula(&s3, 0, 2.0), 6.0);
        assert_abs_diff_eq!(spike_formula(&s3, 0, 3.0), 1.5f64.powf(1.5) * 4.0, epsilon = 1e-14);
        // The closed form overcounts at vertices with several neighbours.
        assert_eq!(spike_energy(&s3, 0, 2.0), 3.0);
        assert_eq!(spike_formula(&s3, 1, 2.0), spike_energy(&s3, 1, 2.0));
    }
}
