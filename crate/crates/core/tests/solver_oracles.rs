use approx::assert_abs_diff_eq;

use graphpq::graph::{families, WeightedGraph};
use graphpq::nonlinearity::Values;
use graphpq::problem::presets::{self, LambdaChoice};
use graphpq::problem::ProblemData;
use graphpq::solver::{self, Classification, SolveError, SolveOptions};
use graphpq::{functional, HypothesisParams, Nonlinearity, ProblemSpec, State, VertexFunction};

/// One vertex with `μ = 1`, `p = q = 2`, `h = 1`, `e1 = 1`, `e2 = 0`.
fn one_vertex(h: f64, lambda: f64, nonlinearity: Nonlinearity) -> ProblemSpec {
    let graph = WeightedGraph::new(&[("a", 1.0)], &[] as &[(&str, &str, f64)]).unwrap();
    ProblemSpec::new(ProblemData {
        name: "one-vertex".into(),
        graph,
        p: 2.0,
        q: 2.0,
        h1: VertexFunction::constant(1, h),
        h2: VertexFunction::constant(1, h),
        e1: VertexFunction::constant(1, 1.0),
        e2: VertexFunction::zeros(1),
        lambda1: lambda,
        lambda2: lambda,
        nonlinearity,
        h0: None,
        hypothesis: HypothesisParams::default(),
    })
    .unwrap()
}

fn quartic() -> Nonlinearity {
    Nonlinearity::custom("s^4", |_, s, _| Values { f: s.powi(4), fs: 4.0 * s.powi(3), ft: 0.0 })
}

fn log_quartic() -> ProblemSpec {
    presets::log_quartic(families::star(3), 0, 1, 1.0, LambdaChoice::FractionOfLambda0(0.5)).unwrap()
}

#[test]
fn one_vertex_quartic_saddle() {
    // energy u²/2 - u⁴ - u/100 + v²/2; the saddle sits at the middle root of
    // u - 4u³ - 1/100, computed to 30 digits offline
    let spec = one_vertex(1.0, 0.01, quartic());
    let endpoint = State::new(VertexFunction(vec![1.0]), VertexFunction(vec![0.0]));
    let report = solver::mountain_pass(&spec, &endpoint, None, &SolveOptions::default()).unwrap();
    assert_abs_diff_eq!(report.state.u[0], 0.494_922_931_877_146_5, epsilon = 1e-8);
    assert_abs_diff_eq!(report.state.v[0], 0.0, epsilon = 1e-9);
    assert_abs_diff_eq!(report.energy, 0.057_525_255_135_389_05, epsilon = 1e-12);
    assert!(report.residual_sup <= 1e-9);
}

#[test]
fn one_vertex_quadratic_minimum() {
    let spec = one_vertex(3.0, 1.0, Nonlinearity::Zero);
    let report = solver::minimize_global(&spec, &SolveOptions::default()).unwrap();
    assert_abs_diff_eq!(report.state.u[0], 1.0 / 3.0, epsilon = 1e-9);
    assert_abs_diff_eq!(report.energy, -1.0 / 6.0, epsilon = 1e-15);
    assert_eq!(report.classification, Classification::SemiTrivialU);
}

#[test]
fn negligible_forcing_is_trivial() {
    let spec = one_vertex(1.0, 1e-300, Nonlinearity::Zero);
    let report = solver::minimize_global(&spec, &SolveOptions::default()).unwrap();
    assert_eq!(report.classification, Classification::Trivial);
    assert!(report.energy <= 0.0);
}

#[test]
fn fractional_minimizer_is_nontrivial_with_negative_energy() {
    let spec = presets::fractional(families::path(9), 2, 6, 1.0, 1.0).unwrap();
    let report = solver::minimize_global(&spec, &SolveOptions::default()).unwrap();
    assert_eq!(report.classification, Classification::Nontrivial);
    assert_abs_diff_eq!(report.energy, -1.207_586_492_142_970_4, epsilon = 1e-9);
    assert_eq!(report.bound("coercivity").and_then(|b| b.holds), Some(true));
    assert_eq!(report.residual_sup, functional::residual(&spec, &report.state).unwrap().sup);
}

#[test]
fn endpoint_probes_respect_upper_bound() {
    let spec = log_quartic();
    let (_, levels) = solver::superlinear_levels(&spec, None).unwrap();
    let endpoint = solver::find_endpoint(&spec, spec.spike_vertex(), levels.rho).unwrap();
    assert!(functional::energy(&spec, &endpoint.state).unwrap() < 0.0);
    assert!(functional::w_norm(&spec, &endpoint.state) > levels.rho);
    for probe in &endpoint.probes {
        assert_eq!(probe.bound_holds(), Some(true), "{probe:?}");
    }
}

#[test]
fn zero_nonlinearity_has_no_endpoint() {
    let spec = log_quartic().with_nonlinearity(Nonlinearity::Zero).unwrap();
    let err = solver::find_endpoint(&spec, spec.spike_vertex(), 0.1).unwrap_err();
    assert!(matches!(err, SolveError::EndpointNotFound { .. }), "{err}");
}

#[test]
fn nonnegative_endpoint_is_rejected() {
    let spec = log_quartic();
    let err = solver::mountain_pass(&spec, &State::zeros(spec.n()), None, &SolveOptions::default()).unwrap_err();
    assert!(matches!(err, SolveError::Precondition(_)), "{err}");
}

#[test]
fn mountain_pass_clears_alpha() {
    let spec = log_quartic();
    let (_, levels) = solver::superlinear_levels(&spec, None).unwrap();
    let endpoint = solver::find_endpoint(&spec, spec.spike_vertex(), levels.rho).unwrap();
    let report = solver::mountain_pass(&spec, &endpoint.state, Some(levels), &SolveOptions::default()).unwrap();
    assert_abs_diff_eq!(report.energy, 0.111_340_498_027_141_9, epsilon = 1e-9);
    assert_eq!(report.bound("alpha_lambda").and_then(|b| b.holds), Some(true));
    assert_eq!(report.bound("positive_energy").and_then(|b| b.holds), Some(true));
    assert_eq!(report.classification, Classification::Nontrivial);
}

#[test]
fn ball_minimizer_is_interior_and_negative() {
    let spec = log_quartic();
    let (_, levels) = solver::superlinear_levels(&spec, None).unwrap();
    let report = solver::minimize_in_ball(&spec, levels.rho, &SolveOptions::default()).unwrap();
    assert!(report.energy < 0.0);
    assert!(functional::w_norm(&spec, &report.state) < levels.rho);
    assert_eq!(report.bound("interior").and_then(|b| b.holds), Some(true));
    assert_eq!(report.bound("negative_energy").and_then(|b| b.holds), Some(true));
}

#[test]
fn invalid_options_are_rejected() {
    let spec = log_quartic();
    let opts = SolveOptions { armijo_shrink: 1.5, ..SolveOptions::default() };
    assert!(matches!(solver::minimize_global(&spec, &opts), Err(SolveError::InvalidOptions(_))));
}
