//! Sampling audits of the structural hypotheses on `h`, `e` and `F`.
//!
//! A violation comes with a concrete witness and is definite. A pass only
//! means no sample broke the inequality. Conditions whose constants are absent
//! from [`HypothesisParams`] are reported as not applicable.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::calculus::{self, Exponent, VertexFunction};

use super::constants::spike_constants;
use super::{GrowthForm, ProblemSpec};

/// Sample set shared by all conditions. Two-variable conditions use the
/// product `values × values` plus `random_pairs` uniform pairs in
/// `[-max_abs, max_abs]^2`; restricted ranges rescale `values`.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditGrid {
    pub values: Vec<f64>,
    pub random_pairs: usize,
    pub seed: u64,
}

impl Default for AuditGrid {
    fn default() -> Self {
        let magnitudes = [
            1e-4, 1e-3, 1e-2, 0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 0.9, 1.0, 1.1, 1.5, 2.0, 3.0, 5.0, 7.5, 10.0,
        ];
        let mut values = vec![0.0];
        for m in magnitudes {
            values.push(m);
            values.push(-m);
        }
        Self { values, random_pairs: 400, seed: 0 }
    }
}

impl AuditGrid {
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    fn pairs(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(self.values.len().pow(2) + self.random_pairs);
        for &s in &self.values {
            for &t in &self.values {
                out.push((s, t));
            }
        }
        let bound = self.max_abs().max(f64::MIN_POSITIVE);
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        for _ in 0..self.random_pairs {
            out.push((rng.random_range(-bound..bound), rng.random_range(-bound..bound)));
        }
        out
    }

    /// Strictly positive grid magnitudes mapped into `(0, 1)`.
    fn unit_fractions(&self) -> Vec<f64> {
        let max = self.max_abs();
        let mut out: Vec<f64> = self
            .values
            .iter()
            .filter(|&&v| v > 0.0)
            .map(|v| v / max * (1.0 - 1e-9))
            .collect();
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub vertex: String,
    pub s: f64,
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub note: String,
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} at x={}, s={}, t={}: {} vs {}",
            self.note, self.vertex, self.s, self.t, self.lhs, self.rhs
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Holds { samples: usize },
    Violated { witness: Witness },
    NotApplicable { reason: String },
    /// The literal statement fails while the form the argument actually uses
    /// holds.
    Discrepancy { literal: Box<Verdict>, corrected: Box<Verdict>, note: String },
    /// Bookkeeping values with nothing to falsify on a finite graph.
    Reported,
}

impl Verdict {
    pub fn is_violation(&self) -> bool {
        matches!(self, Verdict::Violated { .. })
    }

    pub fn holds(&self) -> bool {
        matches!(self, Verdict::Holds { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Holds { .. } => "holds",
            Verdict::Violated { .. } => "violated",
            Verdict::NotApplicable { .. } => "not-applicable",
            Verdict::Discrepancy { .. } => "discrepancy",
            Verdict::Reported => "reported",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Holds { samples } => write!(f, "holds on {samples} samples"),
            Verdict::Violated { witness } => write!(f, "violated: {witness}"),
            Verdict::NotApplicable { reason } => write!(f, "not applicable: {reason}"),
            Verdict::Discrepancy { literal, corrected, note } => {
                write!(f, "discrepancy: {note}; literal {literal}; corrected {corrected}")
            }
            Verdict::Reported => write!(f, "reported"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditEntry {
    pub condition: String,
    pub verdict: Verdict,
    pub quantities: Vec<(String, f64)>,
}

impl AuditEntry {
    pub fn quantity(&self, name: &str) -> Option<f64> {
        self.quantities.iter().find(|(k, _)| k == name).map(|&(_, v)| v)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AuditReport {
    pub entries: Vec<AuditEntry>,
}

impl AuditReport {
    pub fn entry(&self, condition: &str) -> Option<&AuditEntry> {
        self.entries.iter().find(|e| e.condition == condition)
    }

    pub fn violations(&self) -> Vec<&AuditEntry> {
        self.entries.iter().filter(|e| e.verdict.is_violation()).collect()
    }
}

fn within(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs + 1e-12 * (1.0 + rhs.abs().max(lhs.abs()))
}

/// Evaluates `check` on every point and keeps the witness with the largest
/// excess; ties resolve to the earliest point.
fn scan<P: Sync>(points: &[P], check: impl Fn(&P) -> Option<Witness> + Sync) -> Verdict {
    #[cfg(feature = "parallel")]
    let results: Vec<Option<Witness>> = points.par_iter().map(&check).collect();
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Option<Witness>> = points.iter().map(&check).collect();
    let mut worst: Option<Witness> = None;
    for w in results.into_iter().flatten() {
        let excess = |w: &Witness| if (w.lhs - w.rhs).is_nan() { f64::INFINITY } else { w.lhs - w.rhs };
        if worst.as_ref().is_none_or(|cur| excess(&w) > excess(cur)) {
            worst = Some(w);
        }
    }
    match worst {
        Some(witness) => Verdict::Violated { witness },
        None => Verdict::Holds { samples: points.len() },
    }
}

fn scalar_violation(note: &str, lhs: f64, rhs: f64) -> Verdict {
    Verdict::Violated {
        witness: Witness { vertex: "-".into(), s: f64::NAN, t: f64::NAN, lhs, rhs, note: note.into() },
    }
}

/// First failing verdict, else the first one.
fn combine(verdicts: Vec<Verdict>) -> Verdict {
    let total: usize = verdicts
        .iter()
        .map(|v| if let Verdict::Holds { samples } = v { *samples } else { 0 })
        .sum();
    match verdicts.iter().find(|v| !v.holds()) {
        Some(v) => v.clone(),
        None => Verdict::Holds { samples: total },
    }
}

struct Ctx<'a> {
    spec: &'a ProblemSpec,
    grid: &'a AuditGrid,
    points: Vec<(usize, f64, f64)>,
}

impl Ctx<'_> {
    fn witness(&self, x: usize, s: f64, t: f64, lhs: f64, rhs: f64, note: &str) -> Witness {
        Witness { vertex: self.spec.graph().id(x).to_owned(), s, t, lhs, rhs, note: note.to_owned() }
    }

    fn sup(f: &VertexFunction) -> f64 {
        f.sup_abs()
    }

    fn origin(&self) -> Verdict {
        let pts: Vec<usize> = (0..self.spec.n()).collect();
        scan(&pts, |&x| {
            let f = self.spec.nonlinearity().eval(x, 0.0, 0.0).f;
            (f != 0.0).then(|| self.witness(x, 0.0, 0.0, f.abs(), 0.0, "F(x,0,0) != 0"))
        })
    }
}

fn not_applicable(condition: &str, reason: &str) -> AuditEntry {
    AuditEntry {
        condition: condition.into(),
        verdict: Verdict::NotApplicable { reason: reason.into() },
        quantities: vec![],
    }
}

/// Runs every audit; see the module docs for the meaning of verdicts.
pub fn audit_conditions(spec: &ProblemSpec, grid: &AuditGrid) -> AuditReport {
    let pairs = grid.pairs();
    let mut points = Vec::with_capacity(pairs.len() * spec.n());
    for x in 0..spec.n() {
        for &(s, t) in &pairs {
            points.push((x, s, t));
        }
    }
    let ctx = Ctx { spec, grid, points };
    let entries = vec![
        audit_h1(&ctx),
        audit_h2_prime(&ctx),
        audit_f0(&ctx),
        audit_growth(&ctx, GrowthForm::Standard),
        audit_growth(&ctx, GrowthForm::Swapped),
        audit_f2_branch(&ctx, 1),
        audit_f2_branch(&ctx, 2),
        audit_f2(&ctx),
        audit_c1(&ctx),
        audit_c2(&ctx),
        audit_c3(&ctx),
        audit_c4(&ctx),
    ];
    AuditReport { entries }
}

fn audit_h1(ctx: &Ctx) -> AuditEntry {
    let spec = ctx.spec;
    let h0 = spec.h0();
    let pts: Vec<(usize, u8)> = (0..spec.n()).flat_map(|x| [(x, 1u8), (x, 2u8)]).collect();
    let verdict = if h0 > 0.0 {
        scan(&pts, |&(x, which)| {
            let h = if which == 1 { spec.h1()[x] } else { spec.h2()[x] };
            (!(h >= h0)).then(|| ctx.witness(x, f64::NAN, f64::NAN, h0, h, "h_i(x) >= h0"))
        })
    } else {
        scalar_violation("h0 > 0", h0, 0.0)
    };
    AuditEntry {
        condition: "H1".into(),
        verdict,
        quantities: vec![
            ("h0".into(), h0),
            ("min_h1".into(), spec.h1().min()),
            ("min_h2".into(), spec.h2().min()),
        ],
    }
}

fn audit_h2_prime(ctx: &Ctx) -> AuditEntry {
    let spec = ctx.spec;
    let g = spec.graph();
    let mut quantities = Vec::new();
    for &b in &spec.hypothesis().sublevels {
        for (name, h) in [("h1", spec.h1()), ("h2", spec.h2())] {
            let mass: f64 = (0..g.len()).filter(|&x| h[x] <= b).map(|x| g.mu(x)).sum();
            quantities.push((format!("measure({name}<={b})"), mass));
        }
    }
    AuditEntry { condition: "H2'".into(), verdict: Verdict::Reported, quantities }
}

fn interpolate(table: &[(f64, f64)], r: f64) -> f64 {
    match table.iter().position(|&(x, _)| x >= r) {
        None => f64::NAN,
        Some(0) => table[0].1,
        Some(i) => {
            let (x0, y0) = table[i - 1];
            let (x1, y1) = table[i];
            y0 + (y1 - y0) * (r - x0) / (x1 - x0)
        }
    }
}

fn audit_f0(ctx: &Ctx) -> AuditEntry {
    let spec = ctx.spec;
    let hp = spec.hypothesis();
    let finite = scan(&ctx.points, |&(x, s, t)| {
        let v = spec.nonlinearity().eval(x, s, t);
        (!v.is_finite()).then(|| ctx.witness(x, s, t, f64::NAN, 0.0, "F, F_s, F_t finite"))
    });
    let (Some(b), Some(table)) = (&hp.majorant_weight, &hp.majorant_table) else {
        if finite.is_violation() {
            return AuditEntry { condition: "F0".into(), verdict: finite, quantities: vec![] };
        }
        return not_applicable("F0", "majorant a(r) b(x) not supplied");
    };
    let mut sorted = table.clone();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let bounded = scan(&ctx.points, |&(x, s, t)| {
        let v = spec.nonlinearity().eval(x, s, t);
        let rhs = interpolate(&sorted, s.hypot(t)) * b[x];
        let lhs = v.f.abs().max(v.fs.abs()).max(v.ft.abs());
        (!within(lhs, rhs)).then(|| ctx.witness(x, s, t, lhs, rhs, "max(|F|,|F_s|,|F_t|) <= a(|(s,t)|) b(x)"))
    });
    let b_mass = calculus::integrate(spec.graph(), &b.map(f64::abs)).unwrap_or(f64::NAN);
    AuditEntry {
        condition: "F0".into(),
        verdict: combine(vec![finite, bounded]),
        quantities: vec![("b_l1_norm".into(), b_mass)],
    }
}

fn audit_growth(ctx: &Ctx, form: GrowthForm) -> AuditEntry {
    let spec = ctx.spec;
    let hp = spec.hypothesis();
    let condition = match form {
        GrowthForm::Standard => "F1",
        GrowthForm::Swapped => "F1'",
    };
    let (Some(f1), Some(f2), Some(g1), Some(g2)) = (&hp.f1, &hp.f2, &hp.g1, &hp.g2) else {
        return not_applicable(condition, "f1, f2, g1, g2 not supplied");
    };
    let (p, q, h0) = (spec.p(), spec.q(), spec.h0());
    let g = spec.graph();
    let (f1_sup, f2_sup) = (Ctx::sup(f1), Ctx::sup(f2));
    let g1_norm = calculus::lp_norm(g, g1, Exponent::conjugate(p)).unwrap_or(f64::NAN);
    let g2_norm = calculus::lp_norm(g, g2, Exponent::conjugate(q)).unwrap_or(f64::NAN);
    let mut quantities = vec![
        ("f1_sup".into(), f1_sup),
        ("f2_sup".into(), f2_sup),
        ("g1_norm".into(), g1_norm),
        ("g2_norm".into(), g2_norm),
    ];
    let mut verdicts = vec![ctx.origin()];
    match form {
        GrowthForm::Standard => {
            let f1_cap = (h0 / 2.0).min(p * h0 / (q * (p - 1.0)));
            let f2_cap = h0 - q * (p - 1.0) / p * f1_sup;
            quantities.push(("f1_cap".into(), f1_cap));
            quantities.push(("f2_cap".into(), f2_cap));
            if !(f1_sup < f1_cap) {
                verdicts.push(scalar_violation("sup f1 < min{h0/2, p h0/(q(p-1))}", f1_sup, f1_cap));
            }
            if !(f2_sup < f2_cap) {
                verdicts.push(scalar_violation("sup f2 < h0 - q(p-1)/p sup f1", f2_sup, f2_cap));
            }
            verdicts.push(scan(&ctx.points, |&(x, s, t)| {
                let v = spec.nonlinearity().eval(x, s, t);
                let rs = f1[x] * (s.abs().powf(p - 1.0) + t.abs().powf((p * q - q) / p)) + g1[x];
                if !within(v.fs.abs(), rs) {
                    return Some(ctx.witness(x, s, t, v.fs.abs(), rs, "|F_s| <= f1(|s|^{p-1}+|t|^{(pq-q)/p})+g1"));
                }
                let rt = f2[x] * (s.abs().powf(p) + t.abs().powf(q - 1.0)) + g2[x];
                (!within(v.ft.abs(), rt))
                    .then(|| ctx.witness(x, s, t, v.ft.abs(), rt, "|F_t| <= f2(|s|^p+|t|^{q-1})+g2"))
            }));
        }
        GrowthForm::Swapped => {
            let f1_cap = (h0 / 2.0).min(q * h0 / (p * (q - 1.0)));
            // Read literally, the second cap bounds sup f2 by an expression in
            // sup f2 itself; it is checked as stated.
            let f2_cap = h0 - p * (q - 1.0) / q * f2_sup;
            quantities.push(("f1_cap".into(), f1_cap));
            quantities.push(("f2_cap_literal".into(), f2_cap));
            if !(f1_sup < f1_cap) {
                verdicts.push(scalar_violation("sup f1 < min{h0/2, q h0/(p(q-1))}", f1_sup, f1_cap));
            }
            if !(f2_sup < f2_cap) {
                verdicts.push(scalar_violation("sup f2 < h0 - p(q-1)/q sup f2", f2_sup, f2_cap));
            }
            verdicts.push(scan(&ctx.points, |&(x, s, t)| {
                let v = spec.nonlinearity().eval(x, s, t);
                let rs = f2[x] * (t.abs().powf(q) + s.abs().powf(p - 1.0)) + g1[x];
                if !within(v.fs.abs(), rs) {
                    return Some(ctx.witness(x, s, t, v.fs.abs(), rs, "|F_s| <= f2(|t|^q+|s|^{p-1})+g1"));
                }
                let rt = f1[x] * (t.abs().powf(q - 1.0) + s.abs().powf((q * p - p) / q)) + g2[x];
                (!within(v.ft.abs(), rt))
                    .then(|| ctx.witness(x, s, t, v.ft.abs(), rt, "|F_t| <= f1(|t|^{q-1}+|s|^{(qp-p)/q})+g2"))
            }));
        }
    }
    AuditEntry { condition: condition.into(), verdict: combine(verdicts), quantities }
}

fn audit_f2_branch(ctx: &Ctx, branch: u8) -> AuditEntry {
    let spec = ctx.spec;
    let hp = spec.hypothesis();
    let (condition, beta, k, anchor, e) = if branch == 1 {
        ("F2(i)", hp.beta1, &hp.k1, hp.x1, spec.e1())
    } else {
        ("F2(ii)", hp.beta2, &hp.k2, hp.x2, spec.e2())
    };
    let (Some(beta), Some(k), Some(anchor)) = (beta, k, anchor) else {
        return not_applicable(condition, "beta, K or anchor vertex not supplied");
    };
    let mut verdicts = Vec::new();
    if !(k[anchor] > 0.0) {
        verdicts.push(scalar_violation("K(anchor) > 0", 0.0, k[anchor]));
    }
    if !(e[anchor] > 0.0) {
        verdicts.push(scalar_violation("e(anchor) > 0", 0.0, e[anchor]));
    }
    let pts: Vec<(usize, f64)> =
        (0..spec.n()).flat_map(|x| ctx.grid.values.iter().map(move |&s| (x, s))).collect();
    verdicts.push(scan(&pts, |&(x, s)| {
        let (a, b) = if branch == 1 { (s, 0.0) } else { (0.0, s) };
        let f = spec.nonlinearity().eval(x, a, b).f;
        let floor = -k[x] * s.abs().powf(beta);
        (!within(floor, f)).then(|| ctx.witness(x, a, b, floor, f, "F >= -K|.|^beta"))
    }));
    AuditEntry {
        condition: condition.into(),
        verdict: combine(verdicts),
        quantities: vec![("beta".into(), beta), ("K_at_anchor".into(), k[anchor])],
    }
}

fn audit_f2(ctx: &Ctx) -> AuditEntry {
    let first = audit_f2_branch(ctx, 1).verdict;
    let second = audit_f2_branch(ctx, 2).verdict;
    let verdict = match (&first, &second) {
        (Verdict::Holds { .. }, _) => first.clone(),
        (_, Verdict::Holds { .. }) => second.clone(),
        (Verdict::NotApplicable { .. }, Verdict::NotApplicable { .. }) => {
            Verdict::NotApplicable { reason: "neither branch supplied".into() }
        }
        (Verdict::Violated { .. }, _) => first.clone(),
        _ => second.clone(),
    };
    AuditEntry { condition: "F2".into(), verdict, quantities: vec![] }
}

fn audit_c1(ctx: &Ctx) -> AuditEntry {
    let spec = ctx.spec;
    let Some(l0) = spec.hypothesis().l0 else {
        return not_applicable("C1", "l0 not supplied");
    };
    let (p, q) = (spec.p(), spec.q());
    let c = spec.h0() / (q + 1.0);
    let scale = l0 / ctx.grid.max_abs() * (1.0 - 1e-9);
    let pts: Vec<(usize, f64, f64)> = ctx
        .points
        .iter()
        .map(|&(x, s, t)| (x, s * scale, t * scale))
        .filter(|&(_, s, t)| s.hypot(t) < l0)
        .collect();
    let bound = scan(&pts, |&(x, s, t)| {
        let v = spec.nonlinearity().eval(x, s, t);
        let rs = c * (s.abs().powf(p - 1.0) + t.abs().powf((p * q - q) / p));
        if !within(v.fs.abs(), rs) {
            return Some(ctx.witness(x, s, t, v.fs.abs(), rs, "|F_s| <= h0/(q+1)(|s|^{p-1}+|t|^{(pq-q)/p})"));
        }
        let rt = c * (s.abs().powf(p) + t.abs().powf(q - 1.0));
        (!within(v.ft.abs(), rt)).then(|| ctx.witness(x, s, t, v.ft.abs(), rt, "|F_t| <= h0/(q+1)(|s|^p+|t|^{q-1})"))
    });
    AuditEntry {
        condition: "C1".into(),
        verdict: combine(vec![ctx.origin(), bound]),
        quantities: vec![("l0".into(), l0), ("coefficient".into(), c)],
    }
}

fn audit_c2(ctx: &Ctx) -> AuditEntry {
    let spec = ctx.spec;
    let hp = spec.hypothesis();
    let (Some(m), Some(x3), Some(l1)) = (hp.m, hp.x3, hp.l1) else {
        return not_applicable("C2", "M, x3 or l1 not supplied");
    };
    let (p, q) = (spec.p(), spec.q());
    let mut verdicts = Vec::new();
    let mut quantities = vec![("M".into(), m), ("l1".into(), l1)];
    match spike_constants(spec, x3) {
        Ok(k) => {
            quantities.push(("D1".into(), k.d1));
            quantities.push(("D2".into(), k.d2));
            quantities.push(("M_threshold".into(), k.m_threshold));
            if !(m > k.m_threshold) {
                verdicts.push(scalar_violation("M > M_threshold", k.m_threshold, m));
            }
        }
        Err(_) => verdicts.push(scalar_violation("e1(x3) + e2(x3) > 0", 0.0, spec.e1()[x3] + spec.e2()[x3])),
    }
    let samples: Vec<f64> = ctx.grid.values.iter().filter(|&&v| v > 0.0).map(|v| l1 + v).collect();
    verdicts.push(scan(&samples, |&s| {
        let f = spec.nonlinearity().eval(x3, s, s).f;
        let rhs = m * (s.powf(p) + s.powf(q));
        (!within(rhs, f)).then(|| ctx.witness(x3, s, s, rhs, f, "F(x3,s,s) >= M(s^p+s^q)"))
    }));
    AuditEntry { condition: "C2".into(), verdict: combine(verdicts), quantities }
}

fn audit_c3(ctx: &Ctx) -> AuditEntry {
    let spec = ctx.spec;
    let hp = spec.hypothesis();
    let (Some(nu), Some(a)) = (hp.nu, hp.a) else {
        return not_applicable("C3", "nu or A not supplied");
    };
    let (p, q) = (spec.p(), spec.q());
    let a_cap = (nu / p - 1.0).min(nu / q - 1.0) * spec.h0();
    let mut verdicts = Vec::new();
    if !(nu > p.max(q)) {
        verdicts.push(scalar_violation("nu > max(p,q)", p.max(q), nu));
    }
    if !(a >= 0.0 && a < a_cap) {
        verdicts.push(scalar_violation("0 <= A < min(nu/p-1, nu/q-1) h0", a, a_cap));
    }
    verdicts.push(scan(&ctx.points, |&(x, s, t)| {
        let v = spec.nonlinearity().eval(x, s, t);
        let lhs = nu * v.f - v.fs * s - v.ft * t;
        let rhs = a * (s.abs().powf(p) + t.abs().powf(q));
        (!within(lhs, rhs)).then(|| ctx.witness(x, s, t, lhs, rhs, "nu F - F_s s - F_t t <= A(|s|^p+|t|^q)"))
    }));
    AuditEntry {
        condition: "C3".into(),
        verdict: combine(verdicts),
        quantities: vec![("nu".into(), nu), ("A".into(), a), ("A_cap".into(), a_cap)],
    }
}

fn audit_c4(ctx: &Ctx) -> AuditEntry {
    let spec = ctx.spec;
    let hp = spec.hypothesis();
    let (Some(beta), Some(k), Some(x4), Some(l2)) = (hp.beta3, &hp.k3, hp.x4, hp.l2) else {
        return not_applicable("C4", "beta3, K3, x4 or l2 not supplied");
    };
    let mut preconditions = Vec::new();
    if !(k[x4] > 0.0) {
        preconditions.push(scalar_violation("K3(x4) > 0", 0.0, k[x4]));
    }
    if !(spec.e1()[x4] + spec.e2()[x4] > 0.0) {
        preconditions.push(scalar_violation("e1(x4) + e2(x4) > 0", 0.0, spec.e1()[x4] + spec.e2()[x4]));
    }
    let samples: Vec<f64> = ctx.grid.unit_fractions().into_iter().map(|f| f * l2).collect();
    let bound = |sign: f64, note: &'static str| {
        scan(&samples, move |&s| {
            let f = spec.nonlinearity().eval(x4, s, s).f;
            let rhs = sign * k[x4] * s.abs().powf(beta);
            (!within(rhs, f)).then(|| ctx.witness(x4, s, s, rhs, f, note))
        })
    };
    let literal = bound(1.0, "F(x4,s,s) >= K3 |s|^beta3");
    let corrected = bound(-1.0, "F(x4,s,s) >= -K3 |s|^beta3");
    let pre = combine(preconditions);
    let verdict = if !pre.holds() {
        pre
    } else if literal.holds() {
        literal
    } else if corrected.holds() {
        Verdict::Discrepancy {
            literal: Box::new(literal),
            corrected: Box::new(corrected),
            note: "the small-ball construction only needs the lower bound with a minus sign".into(),
        }
    } else {
        literal
    };
    AuditEntry {
        condition: "C4".into(),
        verdict,
        quantities: vec![("beta3".into(), beta), ("K3_at_x4".into(), k[x4]), ("l2".into(), l2)],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::families;
    use crate::nonlinearity::Nonlinearity;
    use crate::problem::presets::{fractional, log_quartic, LambdaChoice};

    #[test]
    fn fractional_passes_its_audits() {
        let spec = fractional(families::path(9), 2, 6, 1.0, 1.0).unwrap();
        let report = audit_conditions(&spec, &AuditGrid::default());
        assert!(report.violations().is_empty(), "{:?}", report.violations());
        let f1 = report.entry("F1").unwrap();
        assert!(f1.verdict.holds());
        assert_eq!(f1.quantity("f1_sup"), Some(1.0));
        assert_eq!(f1.quantity("f1_cap"), Some(1.5));
        assert!(report.entry("F2").unwrap().verdict.holds());
    }

    #[test]
    fn linear_shift_is_caught() {
        let spec = fractional(families::path(9), 2, 6, 1.0, 1.0).unwrap();
        let shifted = spec.with_nonlinearity(spec.nonlinearity().clone().plus_linear(1.0, 0.0)).unwrap();
        let report = audit_conditions(&shifted, &AuditGrid::default());
        assert!(report.entry("F1").unwrap().verdict.is_violation());
        assert!(report.entry("F2(i)").unwrap().verdict.is_violation());
    }

    #[test]
    fn log_quartic_audits_with_discrepancy() {
        let spec = log_quartic(families::star(3), 0, 1, 1.0, LambdaChoice::FractionOfLambda0(0.5)).unwrap();
        let report = audit_conditions(&spec, &AuditGrid::default());
        assert!(report.violations().is_empty(), "{:?}", report.violations());
        for c in ["C1", "C2", "C3"] {
            assert!(report.entry(c).unwrap().verdict.holds(), "{c}");
        }
        assert!(matches!(report.entry("C4").unwrap().verdict, Verdict::Discrepancy { .. }));
    }

    #[test]
    fn zero_coupling_fails_superlinear_growth() {
        let spec = log_quartic(families::star(3), 0, 1, 1.0, LambdaChoice::Value(1e-9)).unwrap();
        let zero = spec.with_nonlinearity(Nonlinearity::Zero).unwrap();
        let report = audit_conditions(&zero, &AuditGrid::default());
        let Verdict::Violated { witness } = &report.entry("C2").unwrap().verdict else {
            panic!("expected violation");
        };
        assert!(witness.s > 1.0);
    }

    #[test]
    fn audits_are_deterministic() {
        let spec = fractional(families::path(5), 1, 3, 1.0, 1.0).unwrap();
        let grid = AuditGrid { seed: 11, ..AuditGrid::default() };
        assert_eq!(audit_conditions(&spec, &grid), audit_conditions(&spec, &grid));
    }
}
