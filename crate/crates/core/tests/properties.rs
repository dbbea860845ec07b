use proptest::prelude::*;

use ppsync::config::{parse_config, parse_with_overrides, serialize_config};
use ppsync::controller::{filter_coefficients, FilterContext};
use ppsync::dynamics::{sync_error, sync_error_global};
use ppsync::graph::{DirectedGraph, QRule};
use ppsync::ppf::{inverse_transform, r_factor, transform_error, PpfParams, SignBranch};
use ppsync::sim::{run_scenario, write_trace_csv};

fn branch() -> impl Strategy<Value = SignBranch> {
    prop_oneof![Just(SignBranch::Positive), Just(SignBranch::Negative)]
}

/// `(params, branch, ratio)` with the ratio strictly inside the interval.
fn funnel_point() -> impl Strategy<Value = (PpfParams, SignBranch, f64)> {
    (0.1f64..10.0, 0.1f64..10.0, branch(), 1e-6f64..1.0 - 1e-6).prop_map(|(du, dl, b, frac)| {
        let p = PpfParams::new(5.0, 0.03, 0.6, du, dl).unwrap();
        let (lower, upper) = p.interval(b);
        (p, b, -lower + frac * (lower + upper))
    })
}

fn graph(max_n: usize) -> impl Strategy<Value = DirectedGraph> {
    (1..=max_n).prop_flat_map(|n| {
        (
            prop::collection::vec(prop::collection::vec(prop_oneof![Just(0.0), 0.1f64..3.0], n), n),
            prop::collection::vec(prop_oneof![Just(0.0), 0.1f64..2.0], n),
        )
            .prop_map(|(mut a, b)| {
                for (i, row) in a.iter_mut().enumerate() {
                    row[i] = 0.0;
                }
                DirectedGraph::new(&a, &b).unwrap()
            })
    })
}

proptest! {
    #[test]
    fn transform_round_trip((p, b, u) in funnel_point(), rho in 0.03f64..7.0) {
        let eps = transform_error(u * rho, rho, &p, b).unwrap();
        prop_assert!((inverse_transform(eps, &p, b) - u).abs() <= 1e-12 * (1.0 + u.abs()));
    }

    #[test]
    fn transform_increasing((p, b, u) in funnel_point(), (_, _, w) in funnel_point(), rho in 0.03f64..7.0) {
        let (lower, upper) = p.interval(b);
        prop_assume!(w > -lower && w < upper && (u - w).abs() > 1e-9);
        let (lo, hi) = if u < w { (u, w) } else { (w, u) };
        prop_assert!(transform_error(lo * rho, rho, &p, b).unwrap() < transform_error(hi * rho, rho, &p, b).unwrap());
    }

    #[test]
    fn r_is_scaled_derivative((p, b, u) in funnel_point(), rho in 0.03f64..7.0) {
        let (lower, upper) = p.interval(b);
        prop_assume!(u > -lower + 1e-3 && u < upper - 1e-3);
        let r = r_factor(u * rho, rho, &p, b).unwrap();
        prop_assert!(r > 0.0);
        let h = 1e-6;
        let fd = (transform_error((u + h) * rho, rho, &p, b).unwrap()
            - transform_error((u - h) * rho, rho, &p, b).unwrap()) / (2.0 * h);
        prop_assert!((r * rho - fd).abs() <= 1e-6 * fd.abs().max(1.0));
    }

    #[test]
    fn outside_funnel_rejected((p, b, _) in funnel_point(), excess in 1e-9f64..5.0, rho in 0.03f64..7.0) {
        let (lower, upper) = p.interval(b);
        prop_assert!(transform_error((upper + excess) * rho, rho, &p, b).is_err());
        prop_assert!(transform_error((-lower - excess) * rho, rho, &p, b).is_err());
    }

    #[test]
    fn funnel_decreases_to_floor(rho0 in 0.1f64..20.0, frac in 0.01f64..0.99, ell in 0.01f64..5.0, t in 0.0f64..50.0) {
        let p = PpfParams::new(rho0, rho0 * frac, ell, 1.0, 1.0).unwrap();
        prop_assert!(p.value(t) >= p.rho_inf && p.value(t) <= p.rho0);
        prop_assert!(p.derivative(t) <= 0.0);
        prop_assert!(p.value(t + 0.1) <= p.value(t));
    }

    #[test]
    fn laplacian_rows_sum_to_zero(g in graph(7)) {
        let l = g.laplacian();
        for i in 0..g.len() {
            prop_assert!(l.row(i).sum().abs() <= 1e-12);
        }
    }

    #[test]
    fn local_sync_error_is_kronecker_form(
        g in graph(6),
        order in 1usize..4,
        channels in 1usize..4,
        seed in prop::collection::vec(-5.0f64..5.0, 64),
    ) {
        let n = g.len();
        let len = order * channels;
        let mut it = seed.iter().cycle().enumerate().map(|(k, v)| v + 0.01 * k as f64);
        let states: Vec<Vec<f64>> = (0..n).map(|_| it.by_ref().take(len).collect()).collect();
        let leader: Vec<f64> = it.take(len).collect();
        let local = sync_error(&states, &leader, &g, order, channels).unwrap();
        let global = sync_error_global(&states, &leader, &g);
        for (a, b) in local.e.concat().iter().zip(&global) {
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn accepted_graph_quantities(g in graph(6)) {
        if let Ok(gq) = g.quantities(QRule::Inverse) {
            prop_assert!(gq.q.iter().all(|&q| q > 0.0));
            prop_assert!(gq.m_weights.iter().all(|&m| m > 0.0));
            let q = &gq.script_q;
            prop_assert!((q - q.transpose()).amax() <= 1e-12);
        }
    }

    #[test]
    fn binomial_filter_is_stable(lambda in 0.05f64..10.0, order in 1usize..6, beta in 0.1f64..5.0) {
        let f = FilterContext::binomial(lambda, order, beta).unwrap();
        prop_assert_eq!(f.lambda_bar.len(), order - 1);
        prop_assert_eq!(&f.lambda_bar, &filter_coefficients(lambda, order));
        prop_assert!(f.lyapunov.clone().cholesky().is_some());
    }

    #[test]
    fn nonpositive_filter_root_rejected(lambda in -10.0f64..=0.0, order in 2usize..6) {
        prop_assert!(FilterContext::binomial(lambda, order, 1.0).is_err());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn config_round_trip(
        name in prop_oneof![Just("example1"), Just("example2")],
        rho0 in 6.0f64..10.0,
        c in 1.0f64..100.0,
        horizon in 0.5f64..30.0,
        seed in 0u64..1000,
        q_rule in prop_oneof![Just("inverse"), Just("transpose")],
    ) {
        let doc = format!(
            "models = \"{name}\"\n[graph]\nadjacency = [[0,0,0,0,1],[1,0,0,0,0],[0,1,0,0,0],[0,0,1,0,0],[0,0,0,1,0]]\n\
             pinning = [1,0,0,0,1]\nq_rule = \"{q_rule}\"\n[ppf]\nrho0 = {rho0}\n[controller]\nc = {c}\n[sim]\nT = {horizon}\nseed = {seed}\n"
        );
        let cfg = parse_config(&doc).unwrap();
        let again = parse_config(&serialize_config(&cfg)).unwrap();
        prop_assert_eq!(&again, &cfg);
        let twice = parse_config(&serialize_config(&again)).unwrap();
        prop_assert_eq!(twice, cfg);
    }

    #[test]
    fn later_override_wins(a in 0.1f64..10.0, b in 0.1f64..10.0) {
        let cfg = parse_with_overrides(
            "models = \"example1\"\n",
            &[format!("controller.c={a}"), format!("controller.c={b}")],
        ).unwrap();
        prop_assert_eq!(cfg.controller.c, b);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    /// Every recorded sample of a short accepted run sits strictly inside its funnel.
    #[test]
    fn funnel_invariance(seed in 0u64..10_000, name in prop_oneof![Just("example1"), Just("example2")]) {
        let cfg = parse_with_overrides(
            &format!("models = \"{name}\"\n"),
            &[format!("sim.seed={seed}"), "sim.T=2".into(), "sim.h=5e-4".into()],
        ).unwrap();
        let out = run_scenario(&cfg.to_scenario().unwrap()).unwrap();
        prop_assert!(out.aborted.is_none());
        let trace = &out.trace;
        let first = &trace.samples[0];
        for s in &trace.samples {
            for i in 0..trace.agents {
                for ch in 0..trace.channels {
                    let p = &trace.ppf[i][ch];
                    let b = SignBranch::from_initial_error(first.e[i][ch]);
                    let (lower, upper) = p.interval(b);
                    let (e, rho) = (s.e[i][ch], s.rho[i][ch]);
                    prop_assert!(-lower * rho < e && e < upper * rho);
                    prop_assert!(s.theta[i][ch].is_finite() && s.omega[i][ch].is_finite() && s.u[i][ch].is_finite());
                }
            }
        }
        prop_assert!(out.summary.disagreement_satisfaction == 1.0);
    }
}

#[test]
fn identical_config_gives_identical_trace() {
    let cfg = parse_with_overrides("models = \"example2\"\n", &["sim.T=1".into()]).unwrap();
    let render = || {
        let out = run_scenario(&cfg.to_scenario().unwrap()).unwrap();
        let mut buf = Vec::new();
        write_trace_csv(&out.trace, &mut buf).unwrap();
        buf
    };
    assert_eq!(render(), render());
}
