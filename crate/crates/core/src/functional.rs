//! The energy
//!
//! ```text
//! φ(u,v) = 1/p ∫ |∇u|^p + h1 |u|^p + 1/q ∫ |∇v|^q + h2 |v|^q
//!          - ∫ F(x,u,v) - λ1 ∫ e1 u - λ2 ∫ e2 v
//! ```
//!
//! and its derivative. [`d_energy`] goes through the gradient form `Γ`;
//! [`gradient`] goes through `Δ_p`. They agree by summation by parts, and
//! [`duality_error`] measures that agreement.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::calculus::{self, pairwise_sum, Exponent, VertexFunction};
use crate::nonlinearity::Values;
use crate::problem::ProblemSpec;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FunctionalError {
    #[error("state has {found} values per channel, graph has {expected} vertices")]
    LengthMismatch { expected: usize, found: usize },
    #[error("state is not finite at vertex {vertex}")]
    NonFiniteState { vertex: String },
    #[error("F is not finite at vertex {vertex} for (s, t) = ({s}, {t})")]
    NonFiniteNonlinearity { vertex: String, s: f64, t: f64 },
}

/// A pair `(u, v)`; also used for directions.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub u: VertexFunction,
    pub v: VertexFunction,
}

impl State {
    pub fn new(u: VertexFunction, v: VertexFunction) -> Self {
        Self { u, v }
    }

    pub fn zeros(n: usize) -> Self {
        Self { u: VertexFunction::zeros(n), v: VertexFunction::zeros(n) }
    }

    /// `θ (1_x, 1_x)`.
    pub fn spike(n: usize, x: usize, theta: f64) -> Self {
        let s = VertexFunction::spike(n, x).scaled(theta);
        Self { u: s.clone(), v: s }
    }

    /// Vertex count of one channel.
    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { u: self.u.scaled(factor), v: self.v.scaled(factor) }
    }

    /// `self + a · d`.
    pub fn axpy(&self, a: f64, d: &State) -> Self {
        Self {
            u: self.u.zip_with(&d.u, |x, y| x + a * y),
            v: self.v.zip_with(&d.v, |x, y| x + a * y),
        }
    }

    /// Euclidean pairing over both channels.
    pub fn dot(&self, other: &State) -> f64 {
        let terms: Vec<f64> = self
            .u
            .values()
            .iter()
            .zip(other.u.values())
            .chain(self.v.values().iter().zip(other.v.values()))
            .map(|(a, b)| a * b)
            .collect();
        pairwise_sum(&terms)
    }

    pub fn sup_abs(&self) -> f64 {
        self.u.sup_abs().max(self.v.sup_abs())
    }

    pub fn is_finite(&self) -> bool {
        self.u.values().iter().chain(self.v.values()).all(|v| v.is_finite())
    }

    /// Uniform entries in `[-1, 1]`.
    pub fn random(n: usize, rng: &mut impl Rng) -> Self {
        let mut draw = || VertexFunction((0..n).map(|_| rng.random_range(-1.0..=1.0)).collect());
        let u = draw();
        let v = draw();
        Self { u, v }
    }

    /// Random direction with unit Euclidean length over both channels.
    pub fn random_unit(n: usize, rng: &mut impl Rng) -> Self {
        loop {
            let d = Self::random(n, rng);
            let len = d.dot(&d).sqrt();
            if len > 1e-3 {
                return d.scaled(1.0 / len);
            }
        }
    }
}

/// `|x|^{p-2} x`, with the value 0 at `x = 0` for every `p ≥ 2`.
pub fn signed_power(x: f64, p: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else if p == 2.0 {
        x
    } else {
        x.abs().powf(p - 1.0).copysign(x)
    }
}

fn check_state(spec: &ProblemSpec, state: &State) -> Result<(), FunctionalError> {
    let n = spec.n();
    for f in [&state.u, &state.v] {
        if f.len() != n {
            return Err(FunctionalError::LengthMismatch { expected: n, found: f.len() });
        }
    }
    if let Some(x) = (0..n).find(|&x| !(state.u[x].is_finite() && state.v[x].is_finite())) {
        return Err(FunctionalError::NonFiniteState { vertex: spec.graph().id(x).to_owned() });
    }
    Ok(())
}

fn coupling(spec: &ProblemSpec, state: &State) -> Result<Vec<Values>, FunctionalError> {
    (0..spec.n())
        .map(|x| {
            let (s, t) = (state.u[x], state.v[x]);
            let values = spec.nonlinearity().eval(x, s, t);
            if values.is_finite() {
                Ok(values)
            } else {
                Err(FunctionalError::NonFiniteNonlinearity { vertex: spec.graph().id(x).to_owned(), s, t })
            }
        })
        .collect()
}

/// The four integrals of the energy, kept apart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyParts {
    /// `1/p ∫ |∇u|^p + h1 |u|^p`.
    pub u_part: f64,
    /// `1/q ∫ |∇v|^q + h2 |v|^q`.
    pub v_part: f64,
    /// `∫ F(x,u,v)`.
    pub coupling: f64,
    /// `λ1 ∫ e1 u + λ2 ∫ e2 v`.
    pub linear: f64,
}

impl EnergyParts {
    pub fn total(&self) -> f64 {
        self.u_part + self.v_part - self.coupling - self.linear
    }
}

pub fn energy_parts(spec: &ProblemSpec, state: &State) -> Result<EnergyParts, FunctionalError> {
    check_state(spec, state)?;
    let g = spec.graph();
    let (p, q) = (spec.p(), spec.q());
    let f = coupling(spec, state)?;
    let u_part = calculus::sobolev_norm_pow(g, state.u.values(), p, spec.h1().values()) / p;
    let v_part = calculus::sobolev_norm_pow(g, state.v.values(), q, spec.h2().values()) / q;
    let coupling = calculus::integrate_slice(g, &f.iter().map(|v| v.f).collect::<Vec<_>>());
    let linear_terms: Vec<f64> = (0..spec.n())
        .map(|x| spec.lambda1() * spec.e1()[x] * state.u[x] + spec.lambda2() * spec.e2()[x] * state.v[x])
        .collect();
    let linear = calculus::integrate_slice(g, &linear_terms);
    Ok(EnergyParts { u_part, v_part, coupling, linear })
}

pub fn energy(spec: &ProblemSpec, state: &State) -> Result<f64, FunctionalError> {
    Ok(energy_parts(spec, state)?.total())
}

/// `⟨φ'(u,v), (φ1,φ2)⟩` through the gradient form:
/// `∫ |∇u|^{p-2} Γ(u,φ1) + h1 |u|^{p-2} u φ1 - F_s φ1 - λ1 e1 φ1` plus the
/// v-channel analogue.
pub fn d_energy(spec: &ProblemSpec, state: &State, direction: &State) -> Result<f64, FunctionalError> {
    check_state(spec, state)?;
    check_state(spec, direction)?;
    let g = spec.graph();
    let (p, q) = (spec.p(), spec.q());
    let f = coupling(spec, state)?;
    let (u, v) = (state.u.values(), state.v.values());
    let (du, dv) = (direction.u.values(), direction.v.values());
    let cu = calculus::gradient_weight(g, u, p);
    let cv = calculus::gradient_weight(g, v, q);
    let gu = calculus::gamma_all(g, u, du);
    let gv = calculus::gamma_all(g, v, dv);
    let terms: Vec<f64> = (0..spec.n())
        .map(|x| {
            let u_term = cu[x] * gu[x] + (spec.h1()[x] * signed_power(u[x], p) - f[x].fs - spec.lambda1() * spec.e1()[x]) * du[x];
            let v_term = cv[x] * gv[x] + (spec.h2()[x] * signed_power(v[x], q) - f[x].ft - spec.lambda2() * spec.e2()[x]) * dv[x];
            u_term + v_term
        })
        .collect();
    Ok(calculus::integrate_slice(g, &terms))
}

/// Vertex-wise representation `g` of the derivative in the Euclidean
/// pairing: `g_u(x) = μ(x)[-Δ_p u + h1 |u|^{p-2} u - F_s - λ1 e1](x)`.
pub fn gradient(spec: &ProblemSpec, state: &State) -> Result<State, FunctionalError> {
    let r = residual(spec, state)?;
    let mu = spec.graph().measure();
    Ok(State {
        u: VertexFunction(r.r_u.values().iter().zip(mu).map(|(r, m)| r * m).collect()),
        v: VertexFunction(r.r_v.values().iter().zip(mu).map(|(r, m)| r * m).collect()),
    })
}

/// Pointwise defect of the system at a state.
#[derive(Debug, Clone, PartialEq)]
pub struct Residual {
    pub r_u: VertexFunction,
    pub r_v: VertexFunction,
    /// Largest `|r|` over both channels and all vertices.
    pub sup: f64,
}

pub fn residual(spec: &ProblemSpec, state: &State) -> Result<Residual, FunctionalError> {
    check_state(spec, state)?;
    let g = spec.graph();
    let (p, q) = (spec.p(), spec.q());
    let f = coupling(spec, state)?;
    let (u, v) = (state.u.values(), state.v.values());
    // exponents were validated with the spec
    let lap_u = calculus::p_laplacian_all(g, u, p).unwrap_or_default();
    let lap_v = calculus::p_laplacian_all(g, v, q).unwrap_or_default();
    let r_u: Vec<f64> = (0..spec.n())
        .map(|x| -lap_u[x] + spec.h1()[x] * signed_power(u[x], p) - f[x].fs - spec.lambda1() * spec.e1()[x])
        .collect();
    let r_v: Vec<f64> = (0..spec.n())
        .map(|x| -lap_v[x] + spec.h2()[x] * signed_power(v[x], q) - f[x].ft - spec.lambda2() * spec.e2()[x])
        .collect();
    let sup = r_u.iter().chain(&r_v).fold(0.0f64, |m, r| m.max(r.abs()));
    Ok(Residual { r_u: VertexFunction(r_u), r_v: VertexFunction(r_v), sup })
}

/// Default central-difference step.
pub const FD_STEP: f64 = 1e-6;
/// Step used when `|energy| > FD_LARGE_ENERGY`.
pub const FD_STEP_LARGE: f64 = 1e-4;
pub const FD_LARGE_ENERGY: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdCheck {
    /// `max |d - fd| / (1 + |d|)` over the sampled directions.
    pub max_rel_err: f64,
    pub step: f64,
    pub directions: usize,
}

/// Compares [`d_energy`] with central differences of [`energy`] along
/// `n_directions` random unit directions. `step = None` picks
/// [`FD_STEP`], or [`FD_STEP_LARGE`] for large energies.
pub fn fd_check(
    spec: &ProblemSpec,
    state: &State,
    n_directions: usize,
    step: Option<f64>,
    seed: u64,
) -> Result<FdCheck, FunctionalError> {
    let step = match step {
        Some(s) => s,
        None if energy(spec, state)?.abs() > FD_LARGE_ENERGY => FD_STEP_LARGE,
        None => FD_STEP,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_rel_err = 0.0f64;
    for _ in 0..n_directions {
        let d = State::random_unit(spec.n(), &mut rng);
        let exact = d_energy(spec, state, &d)?;
        let forward = energy(spec, &state.axpy(step, &d))?;
        let backward = energy(spec, &state.axpy(-step, &d))?;
        let fd = (forward - backward) / (2.0 * step);
        max_rel_err = max_rel_err.max((exact - fd).abs() / (1.0 + exact.abs()));
    }
    Ok(FdCheck { max_rel_err, step, directions: n_directions })
}

/// Largest relative gap between [`d_energy`] and `Σ g·d` over random unit
/// directions, relative to `Σ |g_i d_i|`.
pub fn duality_error(
    spec: &ProblemSpec,
    state: &State,
    n_directions: usize,
    seed: u64,
) -> Result<f64, FunctionalError> {
    let g = gradient(spec, state)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..n_directions {
        let d = State::random_unit(spec.n(), &mut rng);
        let via_gamma = d_energy(spec, state, &d)?;
        let via_laplacian = g.dot(&d);
        let scale: f64 = g
            .u
            .values()
            .iter()
            .zip(d.u.values())
            .chain(g.v.values().iter().zip(d.v.values()))
            .map(|(a, b)| (a * b).abs())
            .sum();
        let gap = (via_gamma - via_laplacian).abs();
        if gap > 0.0 {
            worst = worst.max(gap / scale.max(f64::MIN_POSITIVE));
        }
    }
    Ok(worst)
}

/// `(‖u‖_{W^{1,p}_{h1}}, ‖v‖_{W^{1,q}_{h2}})`.
pub fn channel_norms(spec: &ProblemSpec, state: &State) -> (f64, f64) {
    let g = spec.graph();
    let (p, q) = (spec.p(), spec.q());
    let nu = calculus::sobolev_norm_pow(g, state.u.values(), p, spec.h1().values()).powf(1.0 / p);
    let nv = calculus::sobolev_norm_pow(g, state.v.values(), q, spec.h2().values()).powf(1.0 / q);
    (nu, nv)
}

/// `‖(u,v)‖_W = ‖u‖_{W^{1,p}_{h1}} + ‖v‖_{W^{1,q}_{h2}}`.
pub fn w_norm(spec: &ProblemSpec, state: &State) -> f64 {
    let (a, b) = channel_norms(spec, state);
    a + b
}

/// Energy at a state against the coercivity lower bound
/// `(1/p - 2‖f1‖/(p h0)) ‖u‖^p + (1/q - (p-1)‖f1‖/(p h0) - ‖f2‖/(q h0)) ‖v‖^q
///  - h0^{-1/p}(λ1 ‖e1‖_{p'} + ‖g1‖_{p'}) ‖u‖ - h0^{-1/q}(λ2 ‖e2‖_{q'} + ‖g2‖_{q'}) ‖v‖`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoercivityBound {
    pub energy: f64,
    pub bound: f64,
}

impl CoercivityBound {
    pub fn holds(&self, slack: f64) -> bool {
        self.energy >= self.bound - slack * (1.0 + self.bound.abs())
    }
}

/// `None` unless `f1` and `f2` are configured with the standard growth
/// pairing. Missing `g1`, `g2` count as zero.
pub fn coercivity_bound(spec: &ProblemSpec, state: &State) -> Result<Option<CoercivityBound>, FunctionalError> {
    use crate::problem::GrowthForm;
    let hp = spec.hypothesis();
    let (Some(f1), Some(f2)) = (&hp.f1, &hp.f2) else {
        return Ok(None);
    };
    if hp.growth != GrowthForm::Standard {
        return Ok(None);
    }
    let g = spec.graph();
    let (p, q, h0) = (spec.p(), spec.q(), spec.h0());
    let dual = |f: Option<&VertexFunction>, s: f64| {
        f.map_or(0.0, |f| calculus::lp_norm(g, f, Exponent::conjugate(s)).unwrap_or(f64::NAN))
    };
    let (f1s, f2s) = (f1.sup_abs(), f2.sup_abs());
    let (nu, nv) = channel_norms(spec, state);
    let lin_u = h0.powf(-1.0 / p) * (spec.lambda1() * dual(Some(spec.e1()), p) + dual(hp.g1.as_ref(), p));
    let lin_v = h0.powf(-1.0 / q) * (spec.lambda2() * dual(Some(spec.e2()), q) + dual(hp.g2.as_ref(), q));
    let bound = (1.0 / p - 2.0 * f1s / (p * h0)) * nu.powf(p)
        + (1.0 / q - (p - 1.0) * f1s / (p * h0) - f2s / (q * h0)) * nv.powf(q)
        - lin_u * nu
        - lin_v * nv;
    Ok(Some(CoercivityBound { energy: energy(spec, state)?, bound }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{families, WeightedGraph};
    use crate::nonlinearity::Nonlinearity;
    use crate::problem::{HypothesisParams, ProblemData};
    use approx::assert_abs_diff_eq;

    fn p2_spec(h: f64, e1: VertexFunction, lambda1: f64, e2: VertexFunction, nl: Nonlinearity) -> ProblemSpec {
        let g = WeightedGraph::new(&[("a", 1.0), ("b", 1.0)], &[("a", "b", 1.0)]).unwrap();
        ProblemSpec::new(ProblemData {
            name: "p2".into(),
            graph: g,
            p: 2.0,
            q: 2.0,
            h1: VertexFunction::constant(2, h),
            h2: VertexFunction::constant(2, h),
            e1,
            e2,
            lambda1,
            lambda2: 1.0,
            nonlinearity: nl,
            h0: None,
            hypothesis: HypothesisParams::default(),
        })
        .unwrap()
    }

    fn quadratic() -> ProblemSpec {
        p2_spec(3.0, VertexFunction::spike(2, 0), 1.0, VertexFunction::zeros(2), Nonlinearity::Zero)
    }

    #[test]
    fn energy_hand_value() {
        let spec = quadratic();
        let state = State::new(VertexFunction(vec![1.0, 0.0]), VertexFunction::zeros(2));
        assert_abs_diff_eq!(energy(&spec, &state).unwrap(), 1.0, epsilon = 1e-15);
        assert_eq!(energy(&spec, &State::zeros(2)).unwrap(), 0.0);
    }

    #[test]
    fn gradient_hand_value() {
        // e only matters through λ e; use a spec whose e vanishes at both
        // vertices of the u-channel by putting it in the v-channel.
        let spec = p2_spec(3.0, VertexFunction::zeros(2), 1.0, VertexFunction::spike(2, 0), Nonlinearity::Zero);
        let state = State::new(VertexFunction(vec![0.0, 1.0]), VertexFunction::zeros(2));
        let g = gradient(&spec, &state).unwrap();
        assert_abs_diff_eq!(g.u[0], -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g.u[1], 4.0, epsilon = 1e-15);
    }

    #[test]
    fn zero_state_derivative_is_linear_part() {
        let spec = quadratic();
        let d = State::new(VertexFunction(vec![0.3, -2.0]), VertexFunction(vec![1.0, 1.0]));
        assert_abs_diff_eq!(d_energy(&spec, &State::zeros(2), &d).unwrap(), -0.3, epsilon = 1e-15);
        let r = residual(&spec, &State::zeros(2)).unwrap();
        assert_eq!(r.r_u.values(), &[-1.0, 0.0]);
        assert_eq!(d_energy(&spec, &d, &State::zeros(2)).unwrap(), 0.0);
    }

    #[test]
    fn homogeneity_without_coupling_or_perturbation() {
        let g = families::path(4);
        let spec = ProblemSpec::new(ProblemData {
            name: "h".into(),
            p: 2.0,
            q: 3.0,
            h1: VertexFunction::constant(4, 1.5),
            h2: VertexFunction::constant(4, 2.0),
            e1: VertexFunction::spike(4, 0),
            e2: VertexFunction::zeros(4),
            lambda1: 1e-300,
            lambda2: 1.0,
            nonlinearity: Nonlinearity::Zero,
            h0: None,
            hypothesis: HypothesisParams::default(),
            graph: g,
        })
        .unwrap();
        let state = State::new(VertexFunction(vec![0.5, -1.0, 0.2, 0.0]), VertexFunction(vec![1.0, 0.3, -0.4, 0.9]));
        let parts = energy_parts(&spec, &state).unwrap();
        let t = 1.7;
        let scaled = energy_parts(&spec, &state.scaled(t)).unwrap();
        assert_abs_diff_eq!(scaled.u_part, t.powi(2) * parts.u_part, epsilon = 1e-12);
        assert_abs_diff_eq!(scaled.v_part, t.powi(3) * parts.v_part, epsilon = 1e-12);
    }

    #[test]
    fn quadratic_fd_is_exact() {
        let spec = quadratic();
        let state = State::new(VertexFunction(vec![0.4, -0.7]), VertexFunction(vec![0.1, 0.2]));
        assert!(fd_check(&spec, &state, 20, None, 1).unwrap().max_rel_err <= 1e-9);
    }

    #[test]
    fn wrong_derivative_is_detected() {
        let wrong = Nonlinearity::custom("wrong", |_, s, t| Values { f: s.powi(4), fs: 3.0 * s.powi(3), ft: t * 0.0 });
        let spec = p2_spec(3.0, VertexFunction::spike(2, 0), 1.0, VertexFunction::zeros(2), wrong);
        let state = State::new(VertexFunction(vec![1.0, -0.9]), VertexFunction(vec![0.0, 0.0]));
        assert!(fd_check(&spec, &state, 20, None, 2).unwrap().max_rel_err > 1e-3);
    }

    #[test]
    fn exact_solution_on_two_vertices() {
        // -Δu + 3u = e1 with e1 = 1_a: (4u_a - u_b, 4u_b - u_a) = (1, 0)
        let spec = quadratic();
        let state = State::new(VertexFunction(vec![4.0 / 15.0, 1.0 / 15.0]), VertexFunction::zeros(2));
        assert!(residual(&spec, &state).unwrap().sup <= 1e-15);
    }

    #[test]
    fn mismatched_state_is_rejected() {
        let spec = quadratic();
        let state = State::zeros(3);
        assert!(matches!(energy(&spec, &state), Err(FunctionalError::LengthMismatch { .. })));
    }

    #[test]
    fn non_finite_coupling_names_vertex() {
        let nl = Nonlinearity::custom("blowup", |x, s, _| {
            if x == 1 && s != 0.0 {
                Values { f: f64::INFINITY, fs: 0.0, ft: 0.0 }
            } else {
                Values::ZERO
            }
        });
        let spec = p2_spec(3.0, VertexFunction::spike(2, 0), 1.0, VertexFunction::zeros(2), nl);
        let state = State::new(VertexFunction(vec![1.0, 1.0]), VertexFunction::zeros(2));
        let err = energy(&spec, &state).unwrap_err();
        assert!(err.to_string().contains("vertex b"));
    }
}
