use crate::calculus::{self, Exponent};
use crate::functional::{channel_norms, State};
use crate::problem::{GrowthForm, ProblemSpec};

use super::BoundCheck;

/// Which channels of a state are nonzero. `SemiTrivialU` is `(u, 0)`,
/// `SemiTrivialV` is `(0, v)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    Trivial,
    SemiTrivialU,
    SemiTrivialV,
    Nontrivial,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::Trivial => "trivial",
            Classification::SemiTrivialU => "semi-trivial-u",
            Classification::SemiTrivialV => "semi-trivial-v",
            Classification::Nontrivial => "nontrivial",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "trivial" => Some(Classification::Trivial),
            "semi-trivial-u" => Some(Classification::SemiTrivialU),
            "semi-trivial-v" => Some(Classification::SemiTrivialV),
            "nontrivial" => Some(Classification::Nontrivial),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifyOutcome {
    pub classification: Classification,
    pub bound_checks: Vec<BoundCheck>,
}

/// Sup-norm bound for a semi-trivial solution in `channel` (0 for `u`, 1 for
/// `v`):
/// `μ0^{-1/s} ((λ ‖e‖_{s'} + ‖g‖_{s'}) / (h0 - ‖f‖_∞))^{1/(s-1)}`.
///
/// `f` is `f1` for the u-channel and `f2` for the v-channel under the
/// standard growth pairing, and the other way round under the swapped one.
/// `None` if `f` is not configured or `h0 ≤ ‖f‖_∞`. A missing `g` counts as
/// zero.
pub fn sup_bound(spec: &ProblemSpec, channel: usize) -> Option<f64> {
    let hp = spec.hypothesis();
    let g = spec.graph();
    let (s, lambda, e, g_fn) = if channel == 0 {
        (spec.p(), spec.lambda1(), spec.e1(), hp.g1.as_ref())
    } else {
        (spec.q(), spec.lambda2(), spec.e2(), hp.g2.as_ref())
    };
    let use_f1 = (channel == 0) == (hp.growth == GrowthForm::Standard);
    let f = if use_f1 { hp.f1.as_ref()? } else { hp.f2.as_ref()? };
    let denominator = spec.h0() - f.sup_abs();
    if !(denominator > 0.0) {
        return None;
    }
    let dual = Exponent::conjugate(s);
    let e_norm = calculus::lp_norm(g, e, dual).ok()?;
    let g_norm = match g_fn {
        Some(gf) => calculus::lp_norm(g, gf, dual).ok()?,
        None => 0.0,
    };
    Some(spec.mu0().powf(-1.0 / s) * ((lambda * e_norm + g_norm) / denominator).powf(1.0 / (s - 1.0)))
}

/// Calls a channel zero when its W-norm is at most `triv_tol`, and checks the
/// sup-norm bound of the surviving channel of a semi-trivial state.
pub fn classify(spec: &ProblemSpec, state: &State, triv_tol: f64) -> ClassifyOutcome {
    let (nu, nv) = channel_norms(spec, state);
    let classification = match (nu <= triv_tol, nv <= triv_tol) {
        (true, true) => Classification::Trivial,
        (false, true) => Classification::SemiTrivialU,
        (true, false) => Classification::SemiTrivialV,
        (false, false) => Classification::Nontrivial,
    };
    let mut bound_checks = Vec::new();
    let mut check = |name: &str, channel: usize, sup: f64| {
        bound_checks.push(match sup_bound(spec, channel) {
            Some(rhs) => BoundCheck::at_most(name, sup, rhs),
            None => BoundCheck::not_applicable(name),
        });
    };
    match classification {
        Classification::SemiTrivialU => check("sup_bound_u", 0, state.u.sup_abs()),
        Classification::SemiTrivialV => check("sup_bound_v", 1, state.v.sup_abs()),
        Classification::Trivial | Classification::Nontrivial => {}
    }
    ClassifyOutcome { classification, bound_checks }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::VertexFunction;
    use crate::graph::families;
    use crate::problem::presets;
    use approx::assert_abs_diff_eq;

    #[test]
    fn fractional_bounds() {
        let (l1, l2) = (1.0, 2.0);
        let spec = presets::fractional(families::path(9), 2, 6, l1, l2).unwrap();
        let u = sup_bound(&spec, 0).unwrap();
        assert_abs_diff_eq!(u, 2f64.sqrt() / 2.0 * (l1 + 1.0), epsilon = 1e-12);
        let v = sup_bound(&spec, 1).unwrap();
        assert_abs_diff_eq!(v, 2f64.powf(1.0 / 3.0) * ((l2 + 1.0) / 2.0).sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn classification_by_channel_norm() {
        let spec = presets::fractional(families::path(9), 2, 6, 1.0, 1.0).unwrap();
        let zero = State::zeros(9);
        assert_eq!(classify(&spec, &zero, 1e-8).classification, Classification::Trivial);
        let semi = State::new(VertexFunction::spike(9, 2).scaled(0.5), VertexFunction::zeros(9));
        let out = classify(&spec, &semi, 1e-8);
        assert_eq!(out.classification, Classification::SemiTrivialU);
        assert_eq!(out.bound_checks[0].name, "sup_bound_u");
        assert_eq!(out.bound_checks[0].holds, Some(true));
        let both = State::spike(9, 2, 1.0);
        let out = classify(&spec, &both, 1e-8);
        assert_eq!(out.classification, Classification::Nontrivial);
        assert!(out.bound_checks.is_empty());
    }

    #[test]
    fn missing_growth_data_is_not_applicable() {
        let spec = presets::log_quartic(families::star(3), 0, 1, 1.0, presets::LambdaChoice::Value(1e-9)).unwrap();
        let semi = State::new(VertexFunction::zeros(4), VertexFunction::spike(4, 0));
        let out = classify(&spec, &semi, 1e-8);
        assert_eq!(out.classification, Classification::SemiTrivialV);
        assert_eq!(out.bound_checks[0].holds, None);
    }
}
