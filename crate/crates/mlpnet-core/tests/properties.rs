use std::sync::OnceLock;

use mlpnet_core::calculus::{compose, extend, identity_net, parallel_same, scale, sum_diff, sum_same};
use mlpnet_core::compiler::compile_fixed_time;
use mlpnet_core::gadgets::{
    envelope, hat_exact_leaky, hat_net, product_net, pwl_softplus_approx, square_net, GadgetBudget, HatSpec,
    InterpSpec,
};
use mlpnet_core::math;
use mlpnet_core::mlp::{mlp_estimate, MlpParams, MultiIndex, RandomField};
use mlpnet_core::problem::{Nonlinearity, ProblemSpec, TerminalData};
use mlpnet_core::schedule::{choose_level, compute_schedule, CdMethod, MRule};
use mlpnet_core::{Activation, Layer, Network};
use proptest::prelude::*;

fn arb_net(input: usize, output: usize, depth: usize) -> impl Strategy<Value = Network> {
    proptest::collection::vec(1usize..=5, depth - 1).prop_flat_map(move |hidden| {
        let mut widths = vec![input];
        widths.extend(hidden);
        widths.push(output);
        let layers: Vec<_> = widths
            .windows(2)
            .map(|w| {
                let (r, c) = (w[1], w[0]);
                (proptest::collection::vec(-1.0f64..1.0, r * c), proptest::collection::vec(-1.0f64..1.0, r))
                    .prop_map(move |(m, b)| Layer::from_dense(r, c, &m, &b).unwrap())
            })
            .collect();
        layers.prop_map(|l| Network::new(l).unwrap())
    })
}

fn arb_act() -> impl Strategy<Value = Activation> {
    prop_oneof![
        Just(Activation::Relu),
        (0.05f64..0.95).prop_map(|alpha| Activation::LeakyRelu { alpha }),
        Just(Activation::Softplus),
    ]
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

const EPS: f64 = 0.25;
const Q: f64 = 3.0;

fn gadgets(act: Activation) -> &'static (Network, Network) {
    static LEAKY: OnceLock<(Network, Network)> = OnceLock::new();
    static SOFT: OnceLock<(Network, Network)> = OnceLock::new();
    let cell = if act == Activation::Softplus { &SOFT } else { &LEAKY };
    cell.get_or_init(|| {
        let b = GadgetBudget::new(EPS, Q).unwrap();
        (product_net(&b, act).unwrap(), square_net(&b, act).unwrap())
    })
}

fn gadget_act() -> impl Strategy<Value = Activation> {
    prop_oneof![Just(Activation::LeakyRelu { alpha: 0.5 }), Just(Activation::Softplus)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn composition_realizes_function_composition(
        outer in (1usize..=3).prop_flat_map(|d| arb_net(2, 1, d)),
        inner in (1usize..=3).prop_flat_map(|d| arb_net(3, 2, d)),
        act in arb_act(),
        x in proptest::collection::vec(-3.0f64..3.0, 3),
    ) {
        let c = compose(&outer, &inner).unwrap();
        prop_assert_eq!(c.depth(), outer.depth() + inner.depth() - 1);
        let mid = inner.realize(act, &x).unwrap();
        let want = outer.realize_scalar(act, &mid).unwrap();
        prop_assert!(close(c.realize_scalar(act, &x).unwrap(), want, 1e-12));
    }

    #[test]
    fn parallel_and_sum_act_componentwise(
        (a, b) in (1usize..=4).prop_flat_map(|d| (arb_net(2, 1, d), arb_net(2, 1, d))),
        act in arb_act(),
        x in proptest::collection::vec(-3.0f64..3.0, 4),
        lambda in -4.0f64..4.0,
    ) {
        let ya = a.realize_scalar(act, &x[..2]).unwrap();
        let yb = b.realize_scalar(act, &x[2..]).unwrap();
        let p = parallel_same(&[a.clone(), b.clone()]).unwrap();
        let members = a.param_count() + b.param_count();
        prop_assert!(members <= p.param_count() && p.param_count() <= 4 * members);
        prop_assert_eq!(p.nonzero_count(), a.nonzero_count() + b.nonzero_count());
        let out = p.realize(act, &x).unwrap();
        prop_assert_eq!(out, vec![ya, yb]);

        let s = sum_same(&[a.clone(), b.clone()]).unwrap();
        let want = ya + b.realize_scalar(act, &x[..2]).unwrap();
        prop_assert!(close(s.realize_scalar(act, &x[..2]).unwrap(), want, 1e-12));

        let sc = scale(lambda, &a).unwrap();
        prop_assert_eq!(sc.param_count(), a.param_count());
        prop_assert!(close(sc.realize_scalar(act, &x[..2]).unwrap(), lambda * ya, 1e-12));
    }

    #[test]
    fn padding_preserves_realization(
        a in (1usize..=2).prop_flat_map(|d| arb_net(1, 1, d)),
        b in (3usize..=4).prop_flat_map(|d| arb_net(1, 1, d)),
        act in arb_act(),
        x in -3.0f64..3.0,
    ) {
        let j = identity_net(act).unwrap();
        let tol = if act == Activation::Softplus { 1e-7 } else { 1e-12 };
        let e = extend(&a, b.depth() + 1, &j).unwrap();
        prop_assert_eq!(e.depth(), b.depth() + 1);
        prop_assert!(close(e.realize_scalar(act, &[x]).unwrap(), a.realize_scalar(act, &[x]).unwrap(), tol));
        let s = sum_diff(&[a.clone(), b.clone()], &j).unwrap();
        prop_assert_eq!(s.depth(), b.depth());
        let want = a.realize_scalar(act, &[x]).unwrap() + b.realize_scalar(act, &[x]).unwrap();
        prop_assert!(close(s.realize_scalar(act, &[x]).unwrap(), want, tol));
    }

    #[test]
    fn softplus_is_finite_and_above_relu(x in -700.0f64..700.0) {
        let y = math::softplus(x);
        prop_assert!(y.is_finite());
        prop_assert!(y >= x.max(0.0));
        prop_assert!(y - x.max(0.0) <= core::f64::consts::LN_2 + 1e-15);
        prop_assert_eq!(Activation::Softplus.apply(x), y);
    }

    #[test]
    fn hats_are_exact(
        t0 in -5.0f64..5.0, w1 in 0.01f64..3.0, w2 in 0.01f64..3.0,
        alpha in 0.05f64..0.95, ts in proptest::collection::vec(-10.0f64..10.0, 20),
    ) {
        let spec = HatSpec::new(t0, t0 + w1, t0 + w1 + w2).unwrap();
        let leaky = hat_exact_leaky(&spec, alpha).unwrap();
        prop_assert_eq!(leaky.widths(), vec![1, 6, 1]);
        let relu = hat_net(&spec, Activation::Relu, 0.5, 2.0).unwrap();
        let lip = spec.lipschitz();
        for t in ts {
            let want = spec.eval(t);
            let a = leaky.realize_scalar(Activation::LeakyRelu { alpha }, &[t]).unwrap();
            let r = relu.realize_scalar(Activation::Relu, &[t]).unwrap();
            prop_assert!((a - want).abs() <= 1e-12 * lip.max(1.0) * (1.0 + t.abs()));
            prop_assert!((r - want).abs() <= 1e-12 * lip.max(1.0) * (1.0 + t.abs()));
        }
    }

    #[test]
    fn softplus_interpolant_stays_in_envelope(
        values in proptest::collection::vec(-2.0f64..2.0, 5),
        eps in 0.05f64..1.0,
        t in -10.0f64..10.0,
    ) {
        let knots = vec![-2.0, -1.0, 0.0, 1.5, 3.0];
        let spec = InterpSpec::new(knots, values).unwrap();
        let net = pwl_softplus_approx(&spec, eps, 2.0).unwrap();
        let err = (net.realize_scalar(Activation::Softplus, &[t]).unwrap() - spec.eval(t)).abs();
        prop_assert!(err <= eps * envelope(t, 2.0));
    }

    #[test]
    fn product_gadget_envelope(act in gadget_act(), v in -20.0f64..20.0, w in -20.0f64..20.0) {
        let (gamma, phi) = gadgets(act);
        let env = envelope(v, Q).max(envelope(w, Q));
        let vw = gamma.realize_scalar(act, &[v, w]).unwrap();
        let wv = gamma.realize_scalar(act, &[w, v]).unwrap();
        prop_assert!((vw - v * w).abs() <= EPS * env);
        prop_assert!((vw - wv).abs() <= 1e-9 * env);
        let diag = gamma.realize_scalar(act, &[v, v]).unwrap();
        let sq = phi.realize_scalar(act, &[v]).unwrap();
        prop_assert!((sq - v * v).abs() <= EPS * envelope(v, Q));
        prop_assert!((diag - sq).abs() <= 2.0 * EPS * envelope(v, Q));
    }

    #[test]
    fn schedule_tolerances_stay_below_target(eps in 0.01f64..=1.0, d in 1usize..=16, lip in 0.0f64..2.0) {
        let mut spec = ProblemSpec::new(d, 1.0, Nonlinearity::Zero, TerminalData::GaussianBump { a: 1.0 });
        spec.lipschitz = lip;
        let s = compute_schedule(&spec, eps, MRule::Linear, CdMethod::Bound).unwrap();
        prop_assert!(s.delta > 0.0 && s.delta <= eps);
        prop_assert!(s.gamma > 0.0 && s.gamma <= eps / (2.0 * spec.kappa));
    }

    #[test]
    fn level_is_monotone_in_tolerance(
        e1 in 0.001f64..=1.0, e2 in 0.001f64..=1.0,
        l in 0.0f64..2.0, t in 0.1f64..2.0, pexp in 0.5f64..3.0,
    ) {
        let (small, large) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        let rule = MRule::Power { e: 1.0 };
        match (choose_level(small, l, t, pexp, rule), choose_level(large, l, t, pexp, rule)) {
            (Ok(a), Ok(b)) => prop_assert!(a >= b),
            (Ok(_), Err(e)) => prop_assert!(false, "looser tolerance failed: {e}"),
            _ => {}
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn estimates_and_compiled_networks_are_deterministic(seed in any::<u64>(), n in 1u32..=2, x in -1.0f64..1.0) {
        let act = Activation::LeakyRelu { alpha: 0.5 };
        let j = identity_net(act).unwrap();
        let g = TerminalData::GaussianBump { a: 1.0 }.network(1, act, 1e-3, 4.0, 41).unwrap();
        let f = Nonlinearity::Linear { c: 1.0 }.network(act, 1e-3, 4.0, 3).unwrap();
        let params = MlpParams { n, m: 2, horizon: 1.0, t: 0.0, d: 1 };
        let field = RandomField::new(seed, 1, 1.0);
        let theta = MultiIndex::root();
        let a = compile_fixed_time(&params, &theta, &g, &f, &j, act, &field).unwrap();
        let b = compile_fixed_time(&params, &theta, &g, &f, &j, act, &RandomField::new(seed, 1, 1.0)).unwrap();
        prop_assert_eq!(&a, &b);

        let gf = |y: &[f64]| g.realize_scalar(act, y).unwrap();
        let ff = |u: f64| f.realize_scalar(act, &[u]).unwrap();
        let direct = mlp_estimate(&params, &[x], &gf, &ff, &field, &theta).unwrap();
        prop_assert_eq!(direct.to_bits(), mlp_estimate(&params, &[x], &gf, &ff, &field, &theta).unwrap().to_bits());
        prop_assert!(close(a.net.realize_scalar(act, &[x]).unwrap(), direct, 1e-9));
    }
}
