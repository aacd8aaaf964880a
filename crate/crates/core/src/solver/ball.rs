use crate::functional::{self, State};
use crate::problem::ProblemSpec;

use super::descent::descend;
use super::{finish, map_ordered, start_rng, BoundCheck, Mode, SolveError, SolveOptions, SolveReport};

/// A minimizer closer than this fraction of `ρ` to the sphere counts as
/// pinned to it.
pub const INTERIOR_MARGIN: f64 = 1e-6;
/// Random ball starts are scaled to this fraction of `ρ`.
pub const START_FRACTION: f64 = 0.5;
const MAX_HALVINGS: usize = 200;

/// Radial projection onto `‖·‖_W ≤ ρ`: states outside are scaled by
/// `ρ / ‖x‖_W`, which lands on the sphere because both channel norms are
/// homogeneous of degree one.
pub fn project_to_ball(spec: &ProblemSpec, x: &State, rho: f64) -> State {
    let norm = functional::w_norm(spec, x);
    if norm > rho {
        x.scaled(rho / norm)
    } else {
        x.clone()
    }
}

/// Starts for the ball search, `restarts + 1` in total: `t (1_x4, 1_x4)` with
/// `t` halved from `ρ / (2 ‖(1_x4, 1_x4)‖_W)` until the energy is negative,
/// the zero state, then random states scaled to `‖·‖_W = ρ/2`.
pub fn ball_starts(spec: &ProblemSpec, rho: f64, opts: &SolveOptions) -> Result<Vec<State>, SolveError> {
    let n = spec.n();
    let base = State::spike(n, spec.ball_vertex(), 1.0);
    let mut spike = base.scaled(START_FRACTION * rho / functional::w_norm(spec, &base));
    for _ in 0..MAX_HALVINGS {
        if functional::energy(spec, &spike)? < 0.0 {
            break;
        }
        spike = spike.scaled(0.5);
    }
    let mut starts = vec![spike, State::zeros(n)];
    for i in 2..=opts.restarts {
        let mut rng = start_rng(opts.seed, i);
        let x = State::random(n, &mut rng);
        let norm = functional::w_norm(spec, &x);
        starts.push(if norm > 0.0 { x.scaled(START_FRACTION * rho / norm) } else { x });
    }
    starts.truncate(opts.restarts + 1);
    Ok(starts)
}

/// Projected Armijo descent in the closed ball of radius `rho`; the lowest
/// energy over all starts wins, ties going to the earlier start.
///
/// Bound checks: `negative_energy` (energy < 0) and `interior`
/// (`‖x‖_W ≤ (1 - 1e-6) ρ`). A pinned minimizer is returned as a report with
/// `interior` failing; an interior one must meet `grad_tol`.
pub fn minimize_in_ball(spec: &ProblemSpec, rho: f64, opts: &SolveOptions) -> Result<SolveReport, SolveError> {
    opts.validate()?;
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(SolveError::Precondition(format!("ball radius {rho} must be positive")));
    }
    let starts = ball_starts(spec, rho, opts)?;
    let runs = map_ordered(starts, |_, start| descend(spec, start, opts, Some(rho)));
    let mut best: Option<(usize, crate::solver::DescentRun)> = None;
    for (i, run) in runs.into_iter().enumerate() {
        let run = run?;
        let better = match &best {
            None => true,
            Some((_, b)) => run.energy.total_cmp(&b.energy).is_lt(),
        };
        if better {
            best = Some((i, run));
        }
    }
    let (_, run) = best.expect("at least one start");
    let norm = functional::w_norm(spec, &run.state);
    let checks = vec![
        BoundCheck {
            name: "negative_energy".into(),
            lhs: Some(run.energy),
            rhs: Some(0.0),
            holds: Some(run.energy < 0.0),
        },
        BoundCheck::at_most("interior", norm, (1.0 - INTERIOR_MARGIN) * rho),
    ];
    let interior = norm <= (1.0 - INTERIOR_MARGIN) * rho;
    let report = finish(spec, run.state, run.iterations, Mode::Ball, opts, checks)?;
    if interior && report.residual_sup > opts.grad_tol {
        return Err(SolveError::NotConverged { report: Box::new(report) });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::VertexFunction;
    use crate::graph::families;
    use crate::problem::presets;

    #[test]
    fn projection_lands_on_sphere() {
        let spec = presets::fractional(families::path(5), 1, 3, 1.0, 1.0).unwrap();
        let x = State::new(VertexFunction(vec![1.0, -2.0, 0.5, 0.0, 3.0]), VertexFunction(vec![0.2, 0.2, -1.0, 4.0, 0.0]));
        let rho = 0.25;
        let px = project_to_ball(&spec, &x, rho);
        assert!((functional::w_norm(&spec, &px) - rho).abs() <= 1e-12 * rho);
        let inside = x.scaled(1e-3);
        assert_eq!(project_to_ball(&spec, &inside, rho), inside);
    }

    #[test]
    fn starts_respect_count_and_radius() {
        let spec = presets::fractional(families::path(5), 1, 3, 1.0, 1.0).unwrap();
        let opts = SolveOptions { restarts: 4, ..SolveOptions::default() };
        let starts = ball_starts(&spec, 0.1, &opts).unwrap();
        assert_eq!(starts.len(), 5);
        assert!(functional::energy(&spec, &starts[0]).unwrap() < 0.0);
        for s in &starts[2..] {
            assert!((functional::w_norm(&spec, s) - 0.05).abs() < 1e-12);
        }
    }
}
