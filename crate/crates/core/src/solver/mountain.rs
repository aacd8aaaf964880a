use crate::functional::{self, FunctionalError, State};
use crate::problem::{constants, LambdaBound, ProblemSpec, RhoAlpha};

use super::descent::{bb_step, energy_roundoff, gradient_and_residual, trial_energy, MAX_BACKTRACK};
use super::{finish, BoundCheck, Mode, SolveError, SolveOptions, SolveReport};

/// Largest spike amplitude tried by [`find_endpoint`].
pub const MAX_ENDPOINT_SCALE: f64 = 1_152_921_504_606_846_976.0; // 2^60
/// Path phase hands over to the refinement once the highest node's residual
/// is below this.
pub const REFINE_SWITCH: f64 = 1e-3;
/// Sweeps without a relative drop of the path maximum larger than
/// [`STALL_DROP`] before the path phase hands over anyway.
pub const STALL_SWEEPS: usize = 500;
pub const STALL_DROP: f64 = 1e-10;

/// `ρ` and `α` for the larger of `λ1`, `λ2`, with `l0` taken from the
/// argument or else from the hypothesis data.
pub fn superlinear_levels(spec: &ProblemSpec, l0: Option<f64>) -> Result<(LambdaBound, RhoAlpha), SolveError> {
    let l0 = l0
        .or(spec.hypothesis().l0)
        .ok_or_else(|| SolveError::Precondition("l0 is required for rho and alpha".into()))?;
    let bound = constants::lambda0_params(spec, l0)?;
    let levels = constants::rho_alpha_from(&bound, spec.lambda1().max(spec.lambda2()))?;
    Ok((bound, levels))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EndpointProbe {
    pub s: f64,
    pub energy: f64,
    pub w_norm: f64,
    /// `(s^p/p)(D1 + μ h1) + (s^q/q)(D2 + μ h2) - M μ (s^p + s^q) - s μ (λ1 e1 + λ2 e2)`
    /// at the spike vertex; needs `M`.
    pub upper_bound: Option<f64>,
}

impl EndpointProbe {
    pub fn bound_holds(&self) -> Option<bool> {
        self.upper_bound.map(|b| self.energy <= b + 1e-12 * (1.0 + b.abs()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Endpoint {
    pub state: State,
    pub s: f64,
    /// Every tested amplitude, in order.
    pub probes: Vec<EndpointProbe>,
}

/// `(s^p/p)(D1 + μ h1) + (s^q/q)(D2 + μ h2) - M μ (s^p + s^q) - s μ (λ1 e1 + λ2 e2)`
/// at `x3`, an upper bound for the energy of `s (1_x3, 1_x3)` once
/// `F(x3, s, s) ≥ M (s^p + s^q)`. `None` without `M`.
pub fn endpoint_upper_bound(spec: &ProblemSpec, x3: usize, s: f64) -> Option<f64> {
    let m = spec.hypothesis().m?;
    let g = spec.graph();
    let (p, q, mu) = (spec.p(), spec.q(), g.mu(x3));
    let d1 = constants::spike_formula(g, x3, p);
    let d2 = constants::spike_formula(g, x3, q);
    let linear = mu * (spec.lambda1() * spec.e1()[x3] + spec.lambda2() * spec.e2()[x3]);
    Some(
        s.powf(p) / p * (d1 + mu * spec.h1()[x3]) + s.powf(q) / q * (d2 + mu * spec.h2()[x3])
            - m * mu * (s.powf(p) + s.powf(q))
            - s * linear,
    )
}

/// Doubles `s` from 1 until `s (1_x3, 1_x3)` has negative energy and W-norm
/// above `rho`; the first amplitude meeting both is returned.
pub fn find_endpoint(spec: &ProblemSpec, x3: usize, rho: f64) -> Result<Endpoint, SolveError> {
    let n = spec.n();
    if x3 >= n {
        return Err(SolveError::Precondition(format!("spike vertex index {x3} out of range")));
    }
    let vertex = spec.graph().id(x3).to_owned();
    if !(spec.e1()[x3] + spec.e2()[x3] > 0.0) {
        return Err(SolveError::Precondition(format!("e1 + e2 vanishes at spike vertex {vertex}")));
    }
    let mut probes = Vec::new();
    let mut s = 1.0;
    while s <= MAX_ENDPOINT_SCALE {
        let state = State::spike(n, x3, s);
        let energy = functional::energy(spec, &state)?;
        let w_norm = functional::w_norm(spec, &state);
        probes.push(EndpointProbe { s, energy, w_norm, upper_bound: endpoint_upper_bound(spec, x3, s) });
        if energy < 0.0 && w_norm > rho {
            return Ok(Endpoint { state, s, probes });
        }
        s *= 2.0;
    }
    Err(SolveError::EndpointNotFound { vertex, last_s: s / 2.0 })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MountainPassOutcome {
    pub report: SolveReport,
    /// Node energies of the path when the path phase ended.
    pub path_energies: Vec<f64>,
    /// Cumulative W-arclength of those nodes.
    pub path_arclength: Vec<f64>,
    pub path_sweeps: usize,
    pub refine_steps: usize,
    pub converged: bool,
}

fn w_distance(spec: &ProblemSpec, a: &State, b: &State) -> f64 {
    functional::w_norm(spec, &a.axpy(-1.0, b))
}

fn arclength(spec: &ProblemSpec, nodes: &[State]) -> Vec<f64> {
    let mut cumulative = vec![0.0];
    for pair in nodes.windows(2) {
        let last = *cumulative.last().unwrap_or(&0.0);
        cumulative.push(last + w_distance(spec, &pair[0], &pair[1]));
    }
    cumulative
}

/// Moves interior nodes to equal W-arclength spacing along the polygon.
fn respace(spec: &ProblemSpec, nodes: &mut [State]) {
    let cumulative = arclength(spec, nodes);
    let total = *cumulative.last().unwrap_or(&0.0);
    let count = nodes.len();
    if !(total > 0.0) {
        return;
    }
    let old = nodes.to_vec();
    let mut segment = 0;
    for (j, node) in nodes.iter_mut().enumerate().take(count - 1).skip(1) {
        let target = total * j as f64 / (count - 1) as f64;
        while segment + 2 < count && cumulative[segment + 1] < target {
            segment += 1;
        }
        let width = cumulative[segment + 1] - cumulative[segment];
        let frac = if width > 0.0 { ((target - cumulative[segment]) / width).clamp(0.0, 1.0) } else { 0.0 };
        let delta = old[segment + 1].axpy(-1.0, &old[segment]);
        *node = old[segment].axpy(frac, &delta);
    }
}

fn highest_interior(energies: &[f64]) -> usize {
    let mut best = 1;
    for k in 2..energies.len() - 1 {
        if energies[k] > energies[best] {
            best = k;
        }
    }
    best
}

/// A point of the line `y + s τ` where the energy has a local maximum.
struct LineMax {
    state: State,
    energy: f64,
    gradient: State,
    residual: f64,
}

fn slope(spec: &ProblemSpec, y: &State, tau: &State, s: f64) -> Result<(f64, State, State, f64), FunctionalError> {
    let x = y.axpy(s, tau);
    let (g, res) = gradient_and_residual(spec, &x)?;
    Ok((g.dot(tau), x, g, res))
}

/// Local maximum of `s ↦ E(y + s τ)` near `s = 0`: bracket a sign change of
/// the slope from `+` to `-` by doubling, then Illinois regula falsi.
fn line_max(spec: &ProblemSpec, y: &State, tau: &State) -> Result<Option<LineMax>, FunctionalError> {
    match line_max_inner(spec, y, tau) {
        Err(FunctionalError::NonFiniteNonlinearity { .. }) => Ok(None),
        other => other,
    }
}

fn line_max_inner(spec: &ProblemSpec, y: &State, tau: &State) -> Result<Option<LineMax>, FunctionalError> {
    let (h0, x0, g0, r0) = slope(spec, y, tau, 0.0)?;
    let finish_at = |x: State, g: State, residual: f64| -> Result<Option<LineMax>, FunctionalError> {
        let energy = functional::energy(spec, &x)?;
        Ok(Some(LineMax { state: x, energy, gradient: g, residual }))
    };
    if h0 == 0.0 {
        return finish_at(x0, g0, r0);
    }
    let direction = h0.signum();
    let mut step = h0.abs().clamp(1e-12, 1e-2);
    let (mut a, mut ha) = (0.0, h0);
    let mut bracket = None;
    for _ in 0..200 {
        let b = direction * step;
        let (hb, xb, gb, rb) = slope(spec, y, tau, b)?;
        if hb == 0.0 {
            return finish_at(xb, gb, rb);
        }
        if hb.signum() != direction {
            bracket = Some((b, hb));
            break;
        }
        a = b;
        ha = hb;
        step *= 2.0;
    }
    let Some((mut b, mut hb)) = bracket else {
        return Ok(None);
    };
    // Illinois: the retained end's slope is halved after two hits in a row.
    let mut best = if ha.abs() <= hb.abs() { a } else { b };
    let mut side = 0i8;
    for _ in 0..200 {
        if (b - a).abs() <= 4.0 * f64::EPSILON * (a.abs().max(b.abs())) {
            break;
        }
        let c = (a * hb - b * ha) / (hb - ha);
        let c = if c.is_finite() && c != a && c != b { c } else { 0.5 * (a + b) };
        let (hc, ..) = slope(spec, y, tau, c)?;
        if hc == 0.0 {
            best = c;
            break;
        }
        if hc.signum() == ha.signum() {
            a = c;
            ha = hc;
            if side == -1 {
                hb *= 0.5;
            }
            side = -1;
        } else {
            b = c;
            hb = hc;
            if side == 1 {
                ha *= 0.5;
            }
            side = 1;
        }
        best = c;
    }
    let (_, x, g, res) = slope(spec, y, tau, best)?;
    finish_at(x, g, res)
}

/// Component of `g` orthogonal to the unit vector `tau`.
fn orthogonal(g: &State, tau: &State) -> State {
    g.axpy(-g.dot(tau), tau)
}

/// Mountain-pass search between the zero state and `endpoint`.
///
/// Path phase: `path_nodes` states on the segment; each sweep takes one
/// Armijo step along `-g`, no longer than one node spacing, at the highest
/// interior node and respaces the nodes by W-arclength. Refinement: with
/// `τ` the unit chord through the neighbours of the highest node, maximize
/// the energy along `τ` and take
/// Armijo steps on `ψ(y) = max_s E(y + s τ)` in the complement of `τ`.
/// Stops when the residual at the maximizer is at most `grad_tol`.
pub fn mountain_pass_detailed(
    spec: &ProblemSpec,
    endpoint: &State,
    levels: Option<RhoAlpha>,
    opts: &SolveOptions,
) -> Result<MountainPassOutcome, SolveError> {
    opts.validate()?;
    let end_energy = functional::energy(spec, endpoint)?;
    if !(end_energy < 0.0) {
        return Err(SolveError::Precondition(format!("endpoint energy {end_energy} is not negative")));
    }
    let count = opts.path_nodes;
    let mut nodes: Vec<State> =
        (0..count).map(|i| endpoint.scaled(i as f64 / (count - 1) as f64)).collect();
    let mut energies = nodes.iter().map(|x| functional::energy(spec, x)).collect::<Result<Vec<_>, _>>()?;
    let mut step = opts.init_step;
    let mut sweeps = 0;
    let mut stall_reference = f64::INFINITY;
    let mut stall_count = 0;
    let mut converged_in_path = None;
    let path_budget = opts.max_iters / 2;
    while sweeps < path_budget {
        let k = highest_interior(&energies);
        let (g, res) = gradient_and_residual(spec, &nodes[k])?;
        if res <= opts.grad_tol {
            converged_in_path = Some(k);
            break;
        }
        if res <= REFINE_SWITCH {
            break;
        }
        let top = energies[k];
        if top < stall_reference - STALL_DROP * (1.0 + top.abs()) {
            stall_reference = top;
            stall_count = 0;
        } else {
            stall_count += 1;
            if stall_count >= STALL_SWEEPS {
                break;
            }
        }
        let g_len2 = g.dot(&g);
        // one node spacing at most, so the node cannot leave the path's scale
        let spacing = arclength(spec, &nodes).last().copied().unwrap_or(0.0) / (count - 1) as f64;
        let mut alpha = step.min(spacing / functional::w_norm(spec, &g));
        let mut moved = false;
        for _ in 0..MAX_BACKTRACK {
            let candidate = nodes[k].axpy(-alpha, &g);
            let e = trial_energy(spec, &candidate)?;
            if e <= top - opts.armijo_c * alpha * g_len2 {
                nodes[k] = candidate;
                moved = true;
                break;
            }
            alpha *= opts.armijo_shrink;
        }
        sweeps += 1;
        if !moved {
            break;
        }
        step = (alpha / opts.armijo_shrink).min(1e6);
        respace(spec, &mut nodes);
        for (e, x) in energies.iter_mut().zip(&nodes) {
            *e = functional::energy(spec, x)?;
        }
    }
    let path_energies = energies.clone();
    let path_arclength = arclength(spec, &nodes);
    let k = highest_interior(&energies);

    let mut refine_steps = 0;
    let (state, converged) = match converged_in_path {
        Some(k) => (nodes[k].clone(), true),
        None => {
            let chord = nodes[k + 1].axpy(-1.0, &nodes[k - 1]);
            let chord_len = chord.dot(&chord).sqrt();
            if !(chord_len > 0.0) {
                return collapse(spec, nodes[k].clone(), sweeps, levels, opts);
            }
            let tau = chord.scaled(1.0 / chord_len);
            refine(spec, &nodes[k], &tau, opts, path_budget.max(1), &mut refine_steps)?
        }
    };
    let near_end = functional::w_norm(spec, &state) <= opts.grad_tol
        || w_distance(spec, &state, endpoint) <= opts.grad_tol;
    if near_end {
        return collapse(spec, state, sweeps + refine_steps, levels, opts);
    }
    let report = finish(spec, state, sweeps + refine_steps, Mode::MountainPass, opts, Vec::new())?;
    let report = with_level_checks(report, levels, opts);
    if converged && report.residual_sup <= opts.grad_tol {
        Ok(MountainPassOutcome { report, path_energies, path_arclength, path_sweeps: sweeps, refine_steps, converged })
    } else {
        Err(SolveError::NotConverged { report: Box::new(report) })
    }
}

/// Appends `positive_energy` and, with levels, `alpha_lambda`
/// (`energy ≥ α - grad_tol · ρ`).
fn with_level_checks(mut report: SolveReport, levels: Option<RhoAlpha>, opts: &SolveOptions) -> SolveReport {
    report.bound_checks.push(BoundCheck {
        name: "positive_energy".into(),
        lhs: Some(report.energy),
        rhs: Some(0.0),
        holds: Some(report.energy > 0.0),
    });
    report.bound_checks.push(match levels {
        Some(l) => BoundCheck::at_least("alpha_lambda", report.energy, l.alpha - opts.grad_tol * l.rho),
        None => BoundCheck::not_applicable("alpha_lambda"),
    });
    report
}

fn collapse(
    spec: &ProblemSpec,
    state: State,
    iterations: usize,
    levels: Option<RhoAlpha>,
    opts: &SolveOptions,
) -> Result<MountainPassOutcome, SolveError> {
    let report = finish(spec, state, iterations, Mode::MountainPass, opts, Vec::new())?;
    Err(SolveError::PathCollapse { report: Box::new(with_level_checks(report, levels, opts)) })
}

/// Descent on `ψ(y) = max_s E(y + s τ)` in the complement of `τ`. Returns the
/// last line maximizer and whether it met `grad_tol`.
fn refine(
    spec: &ProblemSpec,
    start: &State,
    tau: &State,
    opts: &SolveOptions,
    budget: usize,
    steps: &mut usize,
) -> Result<(State, bool), SolveError> {
    let Some(mut current) = line_max(spec, start, tau)? else {
        return Ok((start.clone(), false));
    };
    let mut previous: Option<(State, State)> = None;
    let mut last_step = opts.init_step;
    while *steps < budget {
        if current.residual <= opts.grad_tol {
            return Ok((current.state, true));
        }
        let d = orthogonal(&current.gradient, tau);
        let d_len2 = d.dot(&d);
        let trial = previous
            .as_ref()
            .and_then(|(yp, dp)| bb_step(&current.state.axpy(-1.0, yp), &d.axpy(-1.0, dp), *steps))
            .unwrap_or(last_step);
        let flat = energy_roundoff(spec, &current.state)?;
        let mut alpha = trial;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACK {
            let y = current.state.axpy(-alpha, &d);
            if let Some(next) = line_max(spec, &y, tau)? {
                if next.energy <= current.energy - opts.armijo_c * alpha * d_len2 {
                    accepted = Some(next);
                    break;
                }
                if next.energy <= current.energy + flat {
                    let dn = orthogonal(&next.gradient, tau);
                    if dn.dot(&dn) < d_len2 {
                        accepted = Some(next);
                        break;
                    }
                }
            }
            alpha *= opts.armijo_shrink;
        }
        let Some(next) = accepted else {
            return Ok((current.state, false));
        };
        previous = Some((current.state.clone(), d));
        current = next;
        last_step = alpha;
        *steps += 1;
    }
    let done = current.residual <= opts.grad_tol;
    Ok((current.state, done))
}

/// [`mountain_pass_detailed`] without the path data.
pub fn mountain_pass(
    spec: &ProblemSpec,
    endpoint: &State,
    levels: Option<RhoAlpha>,
    opts: &SolveOptions,
) -> Result<SolveReport, SolveError> {
    mountain_pass_detailed(spec, endpoint, levels, opts).map(|o| o.report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::families;
    use crate::problem::presets;

    #[test]
    fn respacing_equalizes_segments() {
        let spec = presets::fractional(families::path(3), 0, 2, 1.0, 1.0).unwrap();
        let end = State::spike(3, 1, 2.0);
        let mut nodes: Vec<State> = [0.0, 0.1, 0.2, 0.9, 1.0].iter().map(|&t| end.scaled(t)).collect();
        respace(&spec, &mut nodes);
        let lengths = arclength(&spec, &nodes);
        let segments: Vec<f64> = lengths.windows(2).map(|w| w[1] - w[0]).collect();
        for s in &segments {
            assert!((s - segments[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn endpoint_needs_perturbation_at_vertex() {
        let spec = presets::fractional(families::path(5), 1, 3, 1.0, 1.0).unwrap();
        assert!(matches!(find_endpoint(&spec, 0, 0.1), Err(SolveError::Precondition(_))));
    }

    #[test]
    fn endpoint_not_found_without_superlinear_coupling() {
        // sublinear coupling: the spike energy grows without bound
        let spec = presets::fractional(families::path(5), 1, 3, 1.0, 1.0).unwrap();
        assert!(matches!(find_endpoint(&spec, 1, 0.1), Err(SolveError::EndpointNotFound { .. })));
    }
}
