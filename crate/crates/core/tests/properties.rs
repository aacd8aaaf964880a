use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use graphpq::calculus::{self, Exponent, VertexFunction};
use graphpq::functional::{self, State};
use graphpq::graph::{families, WeightedGraph};
use graphpq::problem::constants;
use graphpq::problem::presets::{self, LambdaChoice};
use graphpq::solver::{self, SolveOptions};
use graphpq::{report, vertex_io, ProblemSpec};

fn graph_strategy(max_n: usize) -> impl Strategy<Value = WeightedGraph> {
    (2..=max_n, 0.0..0.5f64, any::<u64>()).prop_map(|(n, extra, seed)| families::random_connected(n, extra, seed))
}

fn values(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> VertexFunction {
    VertexFunction((0..n).map(|_| rng.random_range(-scale..scale)).collect())
}

fn fractional_on(n: usize) -> ProblemSpec {
    presets::fractional(families::path(n), 1, n - 2, 1.0, 1.0).unwrap()
}

fn log_quartic() -> ProblemSpec {
    presets::log_quartic(families::star(3), 0, 1, 1.0, LambdaChoice::FractionOfLambda0(0.5)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn degree_is_sum_of_weights(g in graph_strategy(20)) {
        for x in 0..g.len() {
            let sum: f64 = g.neighbors(x).iter().map(|&(_, w)| w).sum();
            prop_assert_eq!(g.degree(x).unwrap(), sum);
        }
    }

    #[test]
    fn hop_distance_is_a_metric(g in graph_strategy(12)) {
        let n = g.len();
        let d: Vec<Vec<usize>> = (0..n).map(|x| g.distances_from(x).unwrap()).collect();
        for x in 0..n {
            for y in 0..n {
                prop_assert_eq!(d[x][y], d[y][x]);
                prop_assert_eq!(d[x][y] == 0, x == y);
                for z in 0..n {
                    prop_assert!(d[x][z] <= d[x][y] + d[y][z]);
                }
            }
        }
    }

    #[test]
    fn full_radius_truncation_is_identity(g in graph_strategy(15), center in any::<prop::sample::Index>()) {
        let x0 = center.index(g.len());
        let diameter = g.diameter().unwrap();
        let t = g.ball_truncate(x0, diameter).unwrap();
        prop_assert_eq!(t.ids(), g.ids());
        prop_assert_eq!(t.measure(), g.measure());
        prop_assert_eq!(t.edges(), g.edges());
    }

    #[test]
    fn graph_file_round_trip(g in graph_strategy(15)) {
        let back = WeightedGraph::from_file_data(&g.to_file_data()).unwrap();
        prop_assert_eq!(back, g);
    }

    #[test]
    fn calculus_identities_hold(g in graph_strategy(25), seed in any::<u64>()) {
        for r in calculus::identity_suite(&g, 2, seed) {
            prop_assert!(r.holds, "{} error {:e}", r.name, r.max_error);
        }
    }

    #[test]
    fn embedding_holds(g in graph_strategy(20), seed in any::<u64>(), s in prop::sample::select(vec![2.0, 2.5, 3.0])) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = values(&mut rng, g.len(), 5.0);
        let h = VertexFunction((0..g.len()).map(|_| rng.random_range(0.1..4.0)).collect());
        for r in [Exponent::Finite(s), Exponent::Finite(2.0 * s), Exponent::Infinity] {
            let check = calculus::check_embedding(&g, &u, s, r, &h).unwrap();
            prop_assert!(check.holds, "r = {r}: {} > {}", check.lhs, check.rhs);
        }
    }

    #[test]
    fn vertex_function_round_trips(g in graph_strategy(15), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = VertexFunction((0..g.len()).map(|_| rng.random_range(-1e6..1e6) * rng.random::<f64>().powi(20)).collect());
        let json = vertex_io::to_json_map(&g, &f).to_string();
        prop_assert_eq!(&vertex_io::from_json_str(&g, &json).unwrap(), &f);
        let mut csv = Vec::new();
        vertex_io::write_csv(&g, &f, &mut csv).unwrap();
        prop_assert_eq!(vertex_io::read_csv(&g, csv.as_slice()).unwrap(), f);
    }

    #[test]
    fn lambda0_decreases_with_perturbation(e1 in 0.1..5.0f64, e2 in 0.1..5.0f64, grow in 1.01..3.0f64) {
        let base = constants::lambda_bound(2.0, 3.0, 1.0, 1.0, e1, e2, 2.0).unwrap();
        let larger = if e1 >= e2 { (e1 * grow, e2) } else { (e1, e2 * grow) };
        let grown = constants::lambda_bound(2.0, 3.0, 1.0, 1.0, larger.0, larger.1, 2.0).unwrap();
        prop_assert!(grown.lambda0 < base.lambda0);
    }

    #[test]
    fn alpha_decreases_in_lambda(a in 0.0..1.0f64, b in 0.0..1.0f64) {
        let bound = constants::lambda_bound(2.0, 3.0, 1.0, 1.0, 1.0, 1.0, 2.0).unwrap();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assume!(hi - lo > 1e-9);
        let (l1, l2) = (lo * bound.lambda0, hi * bound.lambda0);
        prop_assert!(constants::alpha_at(&bound, 0.999, l2) < constants::alpha_at(&bound, 0.999, l1));
    }

    #[test]
    fn alpha_positive_below_lambda0(t in 1e-6..1.0f64) {
        let bound = constants::lambda_bound(2.0, 3.0, 1.0, 1.0, 1.0, 1.0, 2.0).unwrap();
        let lambda = t * bound.lambda0 * (1.0 - constants::RHO_MARGIN).powf(bound.max_exponent - 1.0);
        let levels = constants::rho_alpha_from(&bound, lambda).unwrap();
        prop_assert!(levels.alpha > 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn gradient_matches_directional_derivative(seed in any::<u64>(), scale in 0.01..3.0f64, which in 0..2usize) {
        let spec = if which == 0 { fractional_on(9) } else { log_quartic() };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let state = State::random(spec.n(), &mut rng).scaled(scale);
        prop_assert!(functional::duality_error(&spec, &state, 10, seed).unwrap() <= 1e-10);
    }

    #[test]
    fn energy_respects_coercivity_bound(seed in any::<u64>(), scale in 0.01..100.0f64) {
        let spec = fractional_on(9);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let state = State::random(spec.n(), &mut rng).scaled(scale);
        let check = functional::coercivity_bound(&spec, &state).unwrap().unwrap();
        prop_assert!(check.holds(1e-12), "{} < {}", check.energy, check.bound);
    }

    #[test]
    fn energy_is_bitwise_deterministic(seed in any::<u64>()) {
        let spec = log_quartic();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let state = State::random(spec.n(), &mut rng);
        let copy = state.clone();
        prop_assert_eq!(functional::energy(&spec, &state).unwrap().to_bits(), functional::energy(&spec, &copy).unwrap().to_bits());
        prop_assert_eq!(functional::gradient(&spec, &state).unwrap(), functional::gradient(&spec, &copy).unwrap());
    }

    #[test]
    fn projection_lands_on_min_of_norm_and_radius(seed in any::<u64>(), scale in 1e-3..1e3f64, rho in 1e-3..10.0f64) {
        let spec = fractional_on(7);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = State::random(spec.n(), &mut rng).scaled(scale);
        let before = functional::w_norm(&spec, &x);
        let after = functional::w_norm(&spec, &solver::project_to_ball(&spec, &x, rho));
        prop_assert!((after - before.min(rho)).abs() <= 1e-12 * rho.max(before.min(rho)));
    }

    #[test]
    fn descent_energy_never_rises(seed in any::<u64>(), radius in prop::option::of(0.05..2.0f64)) {
        let spec = fractional_on(7);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let start = State::random(spec.n(), &mut rng);
        let opts = SolveOptions { max_iters: 300, ..SolveOptions::default() };
        let run = solver::descend(&spec, start, &opts, radius).unwrap();
        for w in run.energy_trace.windows(2) {
            // flat steps may move the energy by roundoff
            prop_assert!(w[1] <= w[0] + 1e-13 * (1.0 + w[0].abs()), "{} -> {}", w[0], w[1]);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn fixed_seed_gives_identical_reports(seed in any::<u64>()) {
        let spec = fractional_on(7);
        let opts = SolveOptions { seed, restarts: 3, ..SolveOptions::default() };
        let a = solver::minimize_global(&spec, &opts).unwrap();
        let b = solver::minimize_global(&spec, &opts).unwrap();
        prop_assert_eq!(report::to_json_string(spec.graph(), &a), report::to_json_string(spec.graph(), &b));
        let residual = functional::residual(&spec, &a.state).unwrap().sup;
        prop_assert_eq!(residual, a.residual_sup);
        let back = report::from_json_str(spec.graph(), &report::to_json_string(spec.graph(), &a)).unwrap();
        prop_assert_eq!(back, a);
    }
}
