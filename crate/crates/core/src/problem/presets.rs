//! Built-in problem families.
//!
//! * [`fractional`]: `p = 2`, `q = 3`, a fractional-power coupling supported
//!   on two anchor vertices, potentials `3 + dist`. Sublinear, so the energy
//!   is coercive.
//! * [`log_quartic`]: `p = 2`, `q = 3`, `F = M ln(1 + s^4 + t^4)(s^4 + t^4)`
//!   with `M` tied to the spike constants. Superlinear; admits a
//!   mountain-pass solution and a small negative-energy one.
//! * [`single_equation`]: a scalar equation embedded with `q = p` and a
//!   silent v-channel.

use crate::calculus::VertexFunction;
use crate::graph::WeightedGraph;
use crate::nonlinearity::Nonlinearity;

use super::constants::{lambda0_params, spike_formula};
use super::{HypothesisParams, ProblemData, ProblemError, ProblemSpec};

/// How the common parameter `λ1 = λ2 = λ` is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaChoice {
    Value(f64),
    /// `λ = fraction · λ0`, with `λ0` computed from the problem's `l0`.
    FractionOfLambda0(f64),
}

fn hop_distances(graph: &WeightedGraph, anchor: usize) -> Result<Vec<f64>, ProblemError> {
    let dist = graph
        .distances_from(anchor)
        .map_err(|_| ProblemError::Graph(graph.validate()))?;
    Ok(dist.into_iter().map(|d| d as f64).collect())
}

fn check_vertex(graph: &WeightedGraph, x: usize) -> Result<(), ProblemError> {
    if x < graph.len() {
        Ok(())
    } else {
        Err(ProblemError::UnknownVertex(x.to_string()))
    }
}

/// Potential `3 + dist(x, anchor)`.
pub fn three_plus_dist(graph: &WeightedGraph, anchor: usize) -> Result<VertexFunction, ProblemError> {
    check_vertex(graph, anchor)?;
    Ok(VertexFunction(hop_distances(graph, anchor)?.into_iter().map(|d| 3.0 + d).collect()))
}

/// Potential `c1 dist(x, x1) - 1/(dist(x, x2) + 1) + 2`.
pub fn log_quartic_potential(
    graph: &WeightedGraph,
    x1: usize,
    x2: usize,
    c1: f64,
) -> Result<VertexFunction, ProblemError> {
    check_vertex(graph, x1)?;
    check_vertex(graph, x2)?;
    let d1 = hop_distances(graph, x1)?;
    let d2 = hop_distances(graph, x2)?;
    Ok(VertexFunction(d1.iter().zip(&d2).map(|(a, b)| c1 * a - 1.0 / (b + 1.0) + 2.0).collect()))
}

/// Fractional-power system on two anchors `x1 != x2`:
/// `F = (3/5)(s^{5/3} + t^{5/3})` (odd roots) at the anchors and 0 elsewhere,
/// `e1 = e2 = 1_{x1, x2}`, `h_i = 3 + dist(x, x_i)`.
///
/// Hypothesis data: `f1 = f2 ≡ 1`, `g1 = g2 = 1_{x1, x2}`, `β1 = 5/3`,
/// `K1 ≡ 3/5`.
pub fn fractional(
    graph: WeightedGraph,
    x1: usize,
    x2: usize,
    lambda1: f64,
    lambda2: f64,
) -> Result<ProblemSpec, ProblemError> {
    check_vertex(&graph, x1)?;
    check_vertex(&graph, x2)?;
    if x1 == x2 {
        return Err(ProblemError::Hypothesis("anchors x1 and x2 must differ".into()));
    }
    let n = graph.len();
    let support = VertexFunction::indicator(n, &[x1, x2]);
    let mask: Vec<bool> = support.values().iter().map(|&v| v > 0.0).collect();
    let hypothesis = HypothesisParams {
        f1: Some(VertexFunction::constant(n, 1.0)),
        f2: Some(VertexFunction::constant(n, 1.0)),
        g1: Some(support.clone()),
        g2: Some(support.clone()),
        beta1: Some(5.0 / 3.0),
        k1: Some(VertexFunction::constant(n, 0.6)),
        x1: Some(x1),
        x2: Some(x2),
        ..HypothesisParams::default()
    };
    ProblemSpec::new(ProblemData {
        name: "fractional".into(),
        p: 2.0,
        q: 3.0,
        h1: three_plus_dist(&graph, x1)?,
        h2: three_plus_dist(&graph, x2)?,
        e1: support.clone(),
        e2: support,
        lambda1,
        lambda2,
        nonlinearity: Nonlinearity::FractionalPower { support: mask },
        h0: None,
        hypothesis,
        graph,
    })
}

/// `M = max{(D1 + μ h)/(2μ), (D2 + μ h)/(3μ)} + 1` at `x1`, with `D1`, `D2` the
/// closed-form spike constants for exponents 2 and 3.
pub fn log_quartic_m(graph: &WeightedGraph, x1: usize, h_at_x1: f64) -> f64 {
    let mu = graph.mu(x1);
    let d1 = spike_formula(graph, x1, 2.0);
    let d2 = spike_formula(graph, x1, 3.0);
    ((d1 + mu * h_at_x1) / (2.0 * mu)).max((d2 + mu * h_at_x1) / (3.0 * mu)) + 1.0
}

/// Logarithmic quartic system with `λ1 = λ2 = λ`: `F = M ln(1+Q) Q`,
/// `Q = s^4 + t^4`, `h1 = h2 = c1 dist(x, x1) - 1/(dist(x, x2) + 1) + 2`
/// with declared floor `h0 = 1`, `e1 = e2 = 1_{x1}`.
///
/// Hypothesis data: `l0 = 1/(64M)`, `l1 = 1`, `x3 = x4 = x1`, `ν = 4`,
/// `A = 1/4`, `β3 = 2`, `K3 ≡ 1`, `l2 = 1`.
pub fn log_quartic(
    graph: WeightedGraph,
    x1: usize,
    x2: usize,
    c1: f64,
    lambda: LambdaChoice,
) -> Result<ProblemSpec, ProblemError> {
    if !(c1 > 0.0) {
        return Err(ProblemError::NonpositiveParameter { which: "c1", value: c1 });
    }
    let n = graph.len();
    let h = log_quartic_potential(&graph, x1, x2, c1)?;
    let m = log_quartic_m(&graph, x1, h[x1]);
    let l0 = 1.0 / (64.0 * m);
    let hypothesis = HypothesisParams {
        l0: Some(l0),
        l1: Some(1.0),
        l2: Some(1.0),
        m: Some(m),
        x1: Some(x1),
        x2: Some(x2),
        x3: Some(x1),
        x4: Some(x1),
        nu: Some(4.0),
        a: Some(0.25),
        beta3: Some(2.0),
        k3: Some(VertexFunction::constant(n, 1.0)),
        sublevels: vec![2.0, 3.0, 5.0],
        ..HypothesisParams::default()
    };
    let e = VertexFunction::spike(n, x1);
    let initial = match lambda {
        LambdaChoice::Value(v) => v,
        LambdaChoice::FractionOfLambda0(_) => 1.0,
    };
    let spec = ProblemSpec::new(ProblemData {
        name: "log-quartic".into(),
        p: 2.0,
        q: 3.0,
        h1: h.clone(),
        h2: h,
        e1: e.clone(),
        e2: e,
        lambda1: initial,
        lambda2: initial,
        nonlinearity: Nonlinearity::LogQuartic { m },
        h0: Some(1.0),
        hypothesis,
        graph,
    })?;
    match lambda {
        LambdaChoice::Value(_) => Ok(spec),
        LambdaChoice::FractionOfLambda0(fraction) => {
            let lambda0 = lambda0_params(&spec, l0)?.lambda0;
            spec.with_lambda(fraction * lambda0, fraction * lambda0)
        }
    }
}

/// Scalar equation `-Δ_p u + h |u|^{p-2} u = F_s(x, u) + ε e` as the system
/// with `q = p`, `h2 = h`, `e2 ≡ 0`, `λ2 = 1` and a nonlinearity that ignores
/// `t`. The v-channel residual vanishes identically at `v ≡ 0`.
pub fn single_equation(
    graph: WeightedGraph,
    p: f64,
    h: VertexFunction,
    e: VertexFunction,
    epsilon: f64,
    nonlinearity: Nonlinearity,
) -> Result<ProblemSpec, ProblemError> {
    if e.is_zero() {
        return Err(ProblemError::ZeroPerturbation);
    }
    let n = graph.len();
    ProblemSpec::new(ProblemData {
        name: "single-equation".into(),
        p,
        q: p,
        h1: h.clone(),
        h2: h,
        e1: e,
        e2: VertexFunction::zeros(n),
        lambda1: epsilon,
        lambda2: 1.0,
        nonlinearity,
        h0: None,
        hypothesis: HypothesisParams::default(),
        graph,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::families;
    use approx::assert_abs_diff_eq;

    #[test]
    fn fractional_on_nine_vertex_path() {
        let spec = fractional(families::path(9), 2, 6, 1.0, 1.0).unwrap();
        assert_eq!(spec.p(), 2.0);
        assert_eq!(spec.q(), 3.0);
        assert_eq!(spec.h0(), 3.0);
        assert_eq!(spec.h1()[0], 5.0);
        assert_eq!(spec.h2()[8], 5.0);
        let nl = spec.nonlinearity();
        assert_abs_diff_eq!(nl.eval(2, 8.0, 0.0).fs, 4.0, epsilon = 1e-12);
        assert_eq!(nl.eval(0, 5.0, 5.0).f, 0.0);
        assert!(fractional(families::path(9), 2, 2, 1.0, 1.0).is_err());
        assert!(fractional(families::path(9), 2, 12, 1.0, 1.0).is_err());
    }

    #[test]
    fn log_quartic_constant_on_star() {
        // center c (index 0) as x1, leaf l1 as x2
        let spec = log_quartic(families::star(3), 0, 1, 1.0, LambdaChoice::Value(1e-9)).unwrap();
        assert_abs_diff_eq!(spec.h1()[0], 1.5, epsilon = 1e-15);
        assert_abs_diff_eq!(spec.hypothesis().m.unwrap(), 4.75, epsilon = 1e-14);
        assert_eq!(spec.h0(), 1.0);
        let d2 = spike_formula(spec.graph(), 0, 3.0);
        assert_abs_diff_eq!(d2, 7.348_469_228_349_534, epsilon = 1e-12);
    }

    #[test]
    fn log_quartic_fraction_of_lambda0() {
        let spec = log_quartic(families::star(3), 0, 1, 1.0, LambdaChoice::FractionOfLambda0(0.5)).unwrap();
        let m: f64 = 4.75;
        // lambda0 = (1/(128 M))^2 / 32 for h0 = mu0 = 1 and unit perturbation norms
        let lambda0 = (1.0 / (128.0 * m)).powi(2) / 32.0;
        assert_abs_diff_eq!(spec.lambda1(), lambda0 / 2.0, epsilon = 1e-20);
        assert_eq!(spec.lambda1(), spec.lambda2());
    }

    #[test]
    fn single_equation_embedding() {
        let g = families::path(4);
        let spec = single_equation(
            g.clone(),
            2.0,
            VertexFunction::constant(4, 2.0),
            VertexFunction::spike(4, 1),
            0.5,
            Nonlinearity::LogCubic { m: 1.0 },
        )
        .unwrap();
        assert_eq!(spec.q(), 2.0);
        assert!(spec.e2().is_zero());
        let err = single_equation(
            g,
            2.0,
            VertexFunction::constant(4, 2.0),
            VertexFunction::zeros(4),
            0.5,
            Nonlinearity::LogCubic { m: 1.0 },
        );
        assert!(matches!(err, Err(ProblemError::ZeroPerturbation)));
    }
}
