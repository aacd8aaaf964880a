//! Browser demo bindings. Each operation takes a JSON request and returns a
//! JSON response; failures come back as `{"error": "..."}` so the page never
//! sees an exception. The plain functions are usable natively; the
//! `#[wasm_bindgen]` wrappers only forward strings.

use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

use graphpq::graph::families;
use graphpq::problem::presets::{self, LambdaChoice};
use graphpq::solver::{self, SolveOptions};
use graphpq::{functional, ProblemSpec, State};

#[derive(Debug, thiserror::Error)]
pub enum DemoError {
    #[error("request: {0}")]
    Request(#[from] serde_json::Error),
    #[error("{field} = {value} is outside {range}")]
    OutOfRange { field: &'static str, value: f64, range: &'static str },
    #[error(transparent)]
    Problem(#[from] graphpq::problem::ProblemError),
    #[error(transparent)]
    Functional(#[from] functional::FunctionalError),
    #[error(transparent)]
    Solve(#[from] solver::SolveError),
}

fn in_range(field: &'static str, value: f64, lo: f64, hi: f64, range: &'static str) -> Result<(), DemoError> {
    if (lo..=hi).contains(&value) {
        Ok(())
    } else {
        Err(DemoError::OutOfRange { field, value, range })
    }
}

/// Log-quartic system on a star with `leaves` leaves, centre as `x1`.
/// Unknown keys are ignored because this struct is flattened into others.
#[derive(Debug, Clone, Deserialize)]
pub struct StarRequest {
    #[serde(default = "default_leaves")]
    pub leaves: usize,
    /// `λ / λ0`.
    #[serde(default = "default_fraction")]
    pub lambda_fraction: f64,
    #[serde(default = "default_c1")]
    pub c1: f64,
}

fn default_leaves() -> usize {
    3
}

fn default_fraction() -> f64 {
    0.5
}

fn default_c1() -> f64 {
    1.0
}

impl StarRequest {
    fn spec(&self) -> Result<ProblemSpec, DemoError> {
        in_range("leaves", self.leaves as f64, 1.0, 12.0, "[1, 12]")?;
        in_range("lambda_fraction", self.lambda_fraction, 1e-6, 0.99, "[1e-6, 0.99]")?;
        in_range("c1", self.c1, 0.1, 10.0, "[0.1, 10]")?;
        let lambda = LambdaChoice::FractionOfLambda0(self.lambda_fraction);
        Ok(presets::log_quartic(families::star(self.leaves), 0, 1, self.c1, lambda)?)
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct RayRequest {
    #[serde(flatten)]
    pub star: StarRequest,
    #[serde(default = "default_s_max")]
    pub s_max: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_s_max() -> f64 {
    1.2
}

fn default_samples() -> usize {
    121
}

#[derive(Debug, Serialize)]
pub struct RayResponse {
    pub vertex: String,
    pub s: Vec<f64>,
    pub energy: Vec<f64>,
    pub upper_bound: Vec<Option<f64>>,
    /// `l1` of (C2); the bound is guaranteed only for `s ≥ l1`.
    pub bound_valid_from: Option<f64>,
    pub rho: f64,
    pub alpha: f64,
    /// Amplitude where the energy first turns negative outside the ball.
    pub endpoint_s: f64,
}

/// Energy of `s (1_x3, 1_x3)` against the endpoint upper bound along the
/// spike ray.
pub fn spike_ray(request: &RayRequest) -> Result<RayResponse, DemoError> {
    let spec = request.star.spec()?;
    in_range("s_max", request.s_max, 0.01, 100.0, "[0.01, 100]")?;
    in_range("samples", request.samples as f64, 2.0, 2000.0, "[2, 2000]")?;
    let (_, levels) = solver::superlinear_levels(&spec, None)?;
    let x3 = spec.spike_vertex();
    let endpoint = solver::find_endpoint(&spec, x3, levels.rho)?;
    let last = (request.samples - 1) as f64;
    let s: Vec<f64> = (0..request.samples).map(|i| request.s_max * i as f64 / last).collect();
    let energy = s
        .iter()
        .map(|&t| functional::energy(&spec, &State::spike(spec.n(), x3, t)))
        .collect::<Result<Vec<_>, _>>()?;
    let upper_bound = s.iter().map(|&t| solver::endpoint_upper_bound(&spec, x3, t)).collect();
    Ok(RayResponse {
        vertex: spec.graph().id(x3).to_owned(),
        s,
        energy,
        upper_bound,
        bound_valid_from: spec.hypothesis().l1,
        rho: levels.rho,
        alpha: levels.alpha,
        endpoint_s: endpoint.s,
    })
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FractionalRequest {
    #[serde(default = "default_path_len")]
    pub n: usize,
    #[serde(default = "default_x1")]
    pub x1: usize,
    #[serde(default = "default_x2")]
    pub x2: usize,
    #[serde(default = "default_lambda")]
    pub lambda1: f64,
    #[serde(default = "default_lambda")]
    pub lambda2: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_path_len() -> usize {
    9
}

fn default_x1() -> usize {
    2
}

fn default_x2() -> usize {
    6
}

fn default_lambda() -> f64 {
    1.0
}

#[derive(Debug, Serialize)]
pub struct Bound {
    pub name: String,
    pub lhs: Option<f64>,
    pub rhs: Option<f64>,
    pub holds: Option<bool>,
}

#[derive(Debug, Serialize)]
pub struct SolutionResponse {
    pub ids: Vec<String>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub energy: f64,
    pub residual_sup: f64,
    pub iterations: usize,
    pub classification: String,
    pub bound_checks: Vec<Bound>,
}

fn solution(spec: &ProblemSpec, report: &solver::SolveReport) -> SolutionResponse {
    SolutionResponse {
        ids: spec.graph().ids().to_vec(),
        u: report.state.u.values().to_vec(),
        v: report.state.v.values().to_vec(),
        energy: report.energy,
        residual_sup: report.residual_sup,
        iterations: report.iterations,
        classification: report.classification.as_str().to_owned(),
        bound_checks: report
            .bound_checks
            .iter()
            .map(|b| Bound { name: b.name.clone(), lhs: b.lhs, rhs: b.rhs, holds: b.holds })
            .collect(),
    }
}

/// Global minimizer of the fractional-power system on a path.
pub fn solve_fractional(request: &FractionalRequest) -> Result<SolutionResponse, DemoError> {
    in_range("n", request.n as f64, 3.0, 60.0, "[3, 60]")?;
    let last = (request.n - 1) as f64;
    in_range("x1", request.x1 as f64, 0.0, last, "the path")?;
    in_range("x2", request.x2 as f64, 0.0, last, "the path")?;
    in_range("lambda1", request.lambda1, 0.0, 100.0, "[0, 100]")?;
    in_range("lambda2", request.lambda2, 0.0, 100.0, "[0, 100]")?;
    let spec = presets::fractional(families::path(request.n), request.x1, request.x2, request.lambda1, request.lambda2)?;
    let opts = SolveOptions { seed: request.seed, ..SolveOptions::default() };
    let report = solver::minimize_global(&spec, &opts)?;
    Ok(solution(&spec, &report))
}

#[derive(Debug, Clone, Deserialize)]
pub struct ProfileRequest {
    #[serde(flatten)]
    pub star: StarRequest,
    #[serde(default = "default_nodes")]
    pub nodes: usize,
}

fn default_nodes() -> usize {
    41
}

#[derive(Debug, Serialize)]
pub struct ProfileResponse {
    pub arclength: Vec<f64>,
    pub energy: Vec<f64>,
    pub alpha: f64,
    pub rho: f64,
    pub path_sweeps: usize,
    pub refine_steps: usize,
    pub saddle: SolutionResponse,
}

/// Energy along the relaxed mountain-pass path and the refined saddle.
pub fn mountain_pass_profile(request: &ProfileRequest) -> Result<ProfileResponse, DemoError> {
    let spec = request.star.spec()?;
    in_range("nodes", request.nodes as f64, 5.0, 201.0, "[5, 201]")?;
    let (_, levels) = solver::superlinear_levels(&spec, None)?;
    let endpoint = solver::find_endpoint(&spec, spec.spike_vertex(), levels.rho)?;
    let opts = SolveOptions { path_nodes: request.nodes, ..SolveOptions::default() };
    let outcome = solver::mountain_pass_detailed(&spec, &endpoint.state, Some(levels), &opts)?;
    Ok(ProfileResponse {
        arclength: outcome.path_arclength,
        energy: outcome.path_energies,
        alpha: levels.alpha,
        rho: levels.rho,
        path_sweeps: outcome.path_sweeps,
        refine_steps: outcome.refine_steps,
        saddle: solution(&spec, &outcome.report),
    })
}

fn respond<Q, R>(request: &str, op: impl Fn(&Q) -> Result<R, DemoError>) -> String
where
    Q: for<'de> Deserialize<'de>,
    R: Serialize,
{
    let result = serde_json::from_str::<Q>(request).map_err(DemoError::from).and_then(|q| op(&q));
    match result.map(|r| serde_json::to_string(&r)) {
        Ok(Ok(text)) => text,
        Ok(Err(e)) => serde_json::json!({ "error": e.to_string() }).to_string(),
        Err(e) => serde_json::json!({ "error": e.to_string() }).to_string(),
    }
}

#[wasm_bindgen(js_name = spikeRay)]
pub fn spike_ray_json(request: &str) -> String {
    respond(request, spike_ray)
}

#[wasm_bindgen(js_name = solveFractional)]
pub fn solve_fractional_json(request: &str) -> String {
    respond(request, solve_fractional)
}

#[wasm_bindgen(js_name = mountainPassProfile)]
pub fn mountain_pass_profile_json(request: &str) -> String {
    respond(request, mountain_pass_profile)
}
