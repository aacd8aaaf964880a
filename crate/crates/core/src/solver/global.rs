use crate::calculus::VertexFunction;
use crate::functional::{self, State};
use crate::problem::ProblemSpec;

use super::descent::{descend, DescentRun};
use super::{finish, map_ordered, start_rng, BoundCheck, Mode, SolveError, SolveOptions, SolveReport};

/// Amplitudes of the probe starts `θ (1_x1, 0)`.
pub const PROBE_AMPLITUDES: [f64; 4] = [0.1, -0.1, 1.0, -1.0];

/// `restarts + 1` starts: zero, the probes `θ (1_x1, 0)`, then random states
/// with entries in `[-1, 1]`.
pub fn global_starts(spec: &ProblemSpec, opts: &SolveOptions) -> Vec<State> {
    let n = spec.n();
    let x1 = spec.probe_vertex();
    let mut starts = vec![State::zeros(n)];
    for theta in PROBE_AMPLITUDES {
        starts.push(State::new(VertexFunction::spike(n, x1).scaled(theta), VertexFunction::zeros(n)));
    }
    let count = opts.restarts + 1;
    for i in starts.len()..count {
        let mut rng = start_rng(opts.seed, i);
        starts.push(State::random(n, &mut rng));
    }
    starts.truncate(count);
    starts
}

/// Lowest energy among converged runs, ties to the earlier start; without a
/// converged run, the lowest energy overall.
fn select(runs: Vec<DescentRun>) -> (DescentRun, bool) {
    let any_converged = runs.iter().any(|r| r.converged);
    let best = runs
        .into_iter()
        .filter(|r| r.converged || !any_converged)
        .reduce(|best, r| if r.energy.total_cmp(&best.energy).is_lt() { r } else { best })
        .expect("at least one start");
    (best, any_converged)
}

/// Armijo descent from every start of [`global_starts`]. Adds a `coercivity`
/// bound check when the growth data are configured.
pub fn minimize_global(spec: &ProblemSpec, opts: &SolveOptions) -> Result<SolveReport, SolveError> {
    opts.validate()?;
    let starts = global_starts(spec, opts);
    let runs = map_ordered(starts, |_, start| descend(spec, start, opts, None))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    let (run, converged) = select(runs);
    let mut checks = Vec::new();
    if let Some(c) = functional::coercivity_bound(spec, &run.state)? {
        checks.push(BoundCheck::at_least("coercivity", c.energy, c.bound));
    }
    let report = finish(spec, run.state, run.iterations, Mode::Minimize, opts, checks)?;
    if converged && report.residual_sup <= opts.grad_tol {
        Ok(report)
    } else {
        Err(SolveError::NotConverged { report: Box::new(report) })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::families;
    use crate::problem::presets;

    #[test]
    fn start_layout() {
        let spec = presets::fractional(families::path(9), 2, 6, 1.0, 1.0).unwrap();
        let starts = global_starts(&spec, &SolveOptions::default());
        assert_eq!(starts.len(), 9);
        assert!(starts[0].u.is_zero() && starts[0].v.is_zero());
        assert_eq!(starts[3].u[2], 1.0);
        assert!(starts[3].v.is_zero());
        let few = global_starts(&spec, &SolveOptions { restarts: 2, ..SolveOptions::default() });
        assert_eq!(few.len(), 3);
    }
}
