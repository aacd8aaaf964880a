//! Critical-point searches.
//!
//! * [`minimize_global`]: Armijo descent from several starts, for coercive
//!   energies.
//! * [`mountain_pass`]: a discretized path from the origin to a
//!   negative-energy endpoint, lowered at its highest node, then refined to
//!   a saddle with a fixed climbing direction.
//! * [`minimize_in_ball`]: projected descent in the ball `‖(u,v)‖_W ≤ ρ`.
//!
//! Every report is rebuilt from its final state by [`finish`], so
//! `residual_sup` and the classification never carry loop values.

mod ball;
mod classify;
mod descent;
mod global;
mod mountain;

pub use ball::{ball_starts, minimize_in_ball, project_to_ball};
pub use classify::{classify, sup_bound, Classification, ClassifyOutcome};
pub use descent::{descend, DescentRun};
pub use global::{global_starts, minimize_global};
pub use mountain::{
    endpoint_upper_bound, find_endpoint, mountain_pass, mountain_pass_detailed, superlinear_levels, Endpoint, EndpointProbe,
    MountainPassOutcome,
};

use crate::functional::{self, FunctionalError, State};
use crate::problem::{ProblemError, ProblemSpec};

/// Tuning of the searches. Iteration limits are engineering choices.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub max_iters: usize,
    /// Target for the sup-norm of the residual.
    pub grad_tol: f64,
    /// Sufficient-decrease constant of the Armijo test, in `(0, 1)`.
    pub armijo_c: f64,
    /// Backtracking factor, in `(0, 1)`.
    pub armijo_shrink: f64,
    pub init_step: f64,
    /// Nodes of the mountain-pass path, endpoints included.
    pub path_nodes: usize,
    pub restarts: usize,
    pub seed: u64,
    /// A channel whose W-norm is at most this counts as zero.
    pub triv_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            max_iters: 100_000,
            grad_tol: 1e-9,
            armijo_c: 1e-4,
            armijo_shrink: 0.5,
            init_step: 1.0,
            path_nodes: 41,
            restarts: 8,
            seed: 0,
            triv_tol: 1e-8,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<(), SolveError> {
        let bad = |what: &str| Err(SolveError::InvalidOptions(what.to_owned()));
        if self.max_iters == 0 {
            return bad("max_iters must be positive");
        }
        if !(self.grad_tol > 0.0) {
            return bad("grad_tol must be positive");
        }
        if !(self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            return bad("armijo_c must lie in (0, 1)");
        }
        if !(self.armijo_shrink > 0.0 && self.armijo_shrink < 1.0) {
            return bad("armijo_shrink must lie in (0, 1)");
        }
        if !(self.init_step > 0.0) {
            return bad("init_step must be positive");
        }
        if self.path_nodes < 3 {
            return bad("path_nodes must be at least 3");
        }
        if !(self.triv_tol >= 0.0) {
            return bad("triv_tol must be nonnegative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Minimize,
    Ball,
    MountainPass,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Minimize => "minimize",
            Mode::Ball => "ball",
            Mode::MountainPass => "mountain-pass",
        }
    }

    pub fn parse(s: &str) -> Option<Mode> {
        match s {
            "minimize" => Some(Mode::Minimize),
            "ball" => Some(Mode::Ball),
            "mountain-pass" => Some(Mode::MountainPass),
            _ => None,
        }
    }
}

/// A named inequality `lhs ≤ rhs` (or `≥`, per the name). Entries that could
/// not be evaluated carry `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundCheck {
    pub name: String,
    pub lhs: Option<f64>,
    pub rhs: Option<f64>,
    pub holds: Option<bool>,
}

impl BoundCheck {
    pub fn at_most(name: &str, lhs: f64, rhs: f64) -> Self {
        Self { name: name.into(), lhs: Some(lhs), rhs: Some(rhs), holds: Some(lhs <= rhs) }
    }

    pub fn at_least(name: &str, lhs: f64, rhs: f64) -> Self {
        Self { name: name.into(), lhs: Some(lhs), rhs: Some(rhs), holds: Some(lhs >= rhs) }
    }

    pub fn not_applicable(name: &str) -> Self {
        Self { name: name.into(), lhs: None, rhs: None, holds: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub state: State,
    pub energy: f64,
    pub residual_sup: f64,
    pub iterations: usize,
    pub classification: Classification,
    pub bound_checks: Vec<BoundCheck>,
    pub mode: Mode,
}

impl SolveReport {
    pub fn bound(&self, name: &str) -> Option<&BoundCheck> {
        self.bound_checks.iter().find(|b| b.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolveError {
    #[error(transparent)]
    Functional(#[from] FunctionalError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error("invalid solver options: {0}")]
    InvalidOptions(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("no start converged within the iteration limit (best residual {})", report.residual_sup)]
    NotConverged { report: Box<SolveReport> },
    #[error("mountain-pass path collapsed onto an endpoint (energy {})", report.energy)]
    PathCollapse { report: Box<SolveReport> },
    #[error("no negative-energy endpoint along the spike at vertex {vertex} up to s = {last_s}")]
    EndpointNotFound { vertex: String, last_s: f64 },
}

impl SolveError {
    /// The best available report of a failed search.
    pub fn report(&self) -> Option<&SolveReport> {
        match self {
            SolveError::NotConverged { report } | SolveError::PathCollapse { report } => Some(report),
            _ => None,
        }
    }
}

/// Builds the report for a final state: energy, residual and classification
/// are all recomputed here.
pub fn finish(
    spec: &ProblemSpec,
    state: State,
    iterations: usize,
    mode: Mode,
    opts: &SolveOptions,
    mut extra_checks: Vec<BoundCheck>,
) -> Result<SolveReport, SolveError> {
    let energy = functional::energy(spec, &state)?;
    let residual_sup = functional::residual(spec, &state)?.sup;
    let outcome = classify(spec, &state, opts.triv_tol);
    let mut bound_checks = outcome.bound_checks;
    bound_checks.append(&mut extra_checks);
    Ok(SolveReport {
        state,
        energy,
        residual_sup,
        iterations,
        classification: outcome.classification,
        bound_checks,
        mode,
    })
}

/// Seeded generator for start number `index`.
pub(crate) fn start_rng(seed: u64, index: usize) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Runs `job` over `items`, concurrently under the `parallel` feature, with
/// results in input order.
pub(crate) fn map_ordered<T, R, F>(items: Vec<T>, job: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(usize, T) -> R + Send + Sync,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.into_par_iter().enumerate().map(|(i, t)| job(i, t)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.into_iter().enumerate().map(|(i, t)| job(i, t)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_options_are_valid() {
        assert!(SolveOptions::default().validate().is_ok());
        let bad = SolveOptions { armijo_c: 1.0, ..SolveOptions::default() };
        assert!(bad.validate().is_err());
        let bad = SolveOptions { path_nodes: 2, ..SolveOptions::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn mode_names_round_trip() {
        for mode in [Mode::Minimize, Mode::Ball, Mode::MountainPass] {
            assert_eq!(Mode::parse(mode.as_str()), Some(mode));
        }
    }
}
