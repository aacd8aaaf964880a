use crate::calculus::VertexFunction;
use crate::functional::{self, FunctionalError, State};
use crate::problem::ProblemSpec;

use super::ball::project_to_ball;
use super::SolveOptions;

/// Backtracking halvings tried before a line search gives up.
pub(crate) const MAX_BACKTRACK: usize = 80;
/// Energy changes below `ROUNDOFF · Σ|energy parts|` are treated as flat.
pub(crate) const ROUNDOFF: f64 = 64.0 * f64::EPSILON;

#[derive(Debug, Clone, PartialEq)]
pub struct DescentRun {
    pub state: State,
    pub energy: f64,
    pub residual_sup: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Energy after each accepted step, starting with the initial state.
    pub energy_trace: Vec<f64>,
}

/// Energy of a line-search trial point; points where `F` is not finite
/// count as `+∞` so the search backs off from them.
pub(crate) fn trial_energy(spec: &ProblemSpec, x: &State) -> Result<f64, FunctionalError> {
    match functional::energy(spec, x) {
        Err(FunctionalError::NonFiniteNonlinearity { .. }) => Ok(f64::INFINITY),
        other => other,
    }
}

/// Gradient `g = μ r` and `sup |r|`.
pub(crate) fn gradient_and_residual(spec: &ProblemSpec, x: &State) -> Result<(State, f64), FunctionalError> {
    let r = functional::residual(spec, x)?;
    let mu = spec.graph().measure();
    let scale = |f: &VertexFunction| VertexFunction(f.values().iter().zip(mu).map(|(r, m)| r * m).collect());
    Ok((State::new(scale(&r.r_u), scale(&r.r_v)), r.sup))
}

/// Magnitude below which energy differences are roundoff.
pub(crate) fn energy_roundoff(spec: &ProblemSpec, x: &State) -> Result<f64, FunctionalError> {
    let parts = functional::energy_parts(spec, x)?;
    Ok(ROUNDOFF * (parts.u_part.abs() + parts.v_part.abs() + parts.coupling.abs() + parts.linear.abs()))
}

/// Barzilai-Borwein trial step from the last displacement `s` and gradient
/// change `y`, alternating the long and short formulas. `None` when the
/// curvature along `s` is not positive.
pub(crate) fn bb_step(s: &State, y: &State, iteration: usize) -> Option<f64> {
    let sy = s.dot(y);
    if !(sy > 0.0) {
        return None;
    }
    let step = if iteration % 2 == 0 { s.dot(s) / sy } else { sy / y.dot(y) };
    step.is_finite().then_some(step.clamp(1e-20, 1e20))
}

fn difference(a: &State, b: &State) -> State {
    a.axpy(-1.0, b)
}

/// Armijo descent along `-g` from `start`, optionally projected onto the ball
/// `‖·‖_W ≤ ρ`. Stops when `sup |r| ≤ grad_tol`, at `max_iters`, when the line
/// search fails, or when the projected step is stationary at the
/// `grad_tol` level.
///
/// A trial point is accepted when it passes the Armijo test, or when its
/// energy change is within roundoff and its gradient is shorter. Accepted
/// energies are therefore non-increasing up to roundoff.
pub fn descend(
    spec: &ProblemSpec,
    start: State,
    opts: &SolveOptions,
    radius: Option<f64>,
) -> Result<DescentRun, FunctionalError> {
    let project = |x: State| match radius {
        Some(rho) => project_to_ball(spec, &x, rho),
        None => x,
    };
    let mu = spec.graph().measure();
    let mut x = project(start);
    let mut energy = functional::energy(spec, &x)?;
    let (mut g, mut res) = gradient_and_residual(spec, &x)?;
    let mut trace = vec![energy];
    let mut previous: Option<(State, State)> = None;
    let mut last_step = opts.init_step;
    let mut iterations = 0;
    while res > opts.grad_tol && iterations < opts.max_iters {
        let trial = previous
            .as_ref()
            .and_then(|(xp, gp)| bb_step(&difference(&x, xp), &difference(&g, gp), iterations))
            .unwrap_or(last_step);
        let g_len2 = g.dot(&g);
        let flat = energy_roundoff(spec, &x)?;
        let mut alpha = trial;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACK {
            let candidate = project(x.axpy(-alpha, &g));
            let e_new = trial_energy(spec, &candidate)?;
            let predicted = g.dot(&difference(&candidate, &x));
            if e_new <= energy + opts.armijo_c * predicted {
                accepted = Some((candidate, e_new, None));
                break;
            }
            if e_new <= energy + flat {
                let (g_new, res_new) = gradient_and_residual(spec, &candidate)?;
                if g_new.dot(&g_new) < g_len2 {
                    accepted = Some((candidate, e_new, Some((g_new, res_new))));
                    break;
                }
            }
            alpha *= opts.armijo_shrink;
        }
        let Some((candidate, e_new, evaluated)) = accepted else {
            break;
        };
        let step_sup = (0..spec.n())
            .map(|i| {
                let du = (candidate.u[i] - x.u[i]).abs();
                let dv = (candidate.v[i] - x.v[i]).abs();
                du.max(dv) / (alpha * mu[i])
            })
            .fold(0.0f64, f64::max);
        let (g_new, res_new) = match evaluated {
            Some(pair) => pair,
            None => gradient_and_residual(spec, &candidate)?,
        };
        previous = Some((std::mem::replace(&mut x, candidate), std::mem::replace(&mut g, g_new)));
        energy = e_new;
        res = res_new;
        last_step = alpha;
        iterations += 1;
        trace.push(energy);
        if radius.is_some() && step_sup <= opts.grad_tol && res > opts.grad_tol {
            break;
        }
    }
    Ok(DescentRun {
        state: x,
        energy,
        residual_sup: res,
        iterations,
        converged: res <= opts.grad_tol,
        energy_trace: trace,
    })
}
