use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use tandem_bounds::bounds::{kernel_sotat, kernel_wtb, kernel_wtb_sigma_rho};
use tandem_bounds::numeric::{ln_binomial, log_sum_exp};
use tandem_bounds::sim::{run_trial, trial_rng, wilson_interval};
use tandem_bounds::{
    bound, estimate_violation, ArrivalProcess, BoundFamily, ChannelModel, Envelope, Forwarding, Scenario, SimConfig,
};

// Cumulative output of each node for a constant-rate tandem, from
// out_n(i) = min(out_n(i-1) + c, x_n + in_n(i)).
fn reference_departures(rate: f64, backlog: &[f64], increments: &[f64], slots: usize, cut_through: bool) -> Vec<f64> {
    let hops = backlog.len();
    let a = |i: usize| increments.iter().take(i).sum::<f64>();
    let mut out = vec![vec![0.0; slots]; hops];
    for i in 0..slots {
        for n in 0..hops {
            let input = if n == 0 {
                a(i + 1)
            } else if cut_through {
                out[n - 1][i]
            } else if i == 0 {
                0.0
            } else {
                out[n - 1][i - 1]
            };
            let prev = if i == 0 { 0.0 } else { out[n][i - 1] };
            out[n][i] = (prev + rate).min(backlog[n] + input);
        }
    }
    let mut d = vec![0.0];
    d.extend(out[hops - 1].iter().copied());
    d
}

#[test]
fn constant_channel_matches_reference_schedule() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for case in 0..400 {
        let hops = rng.random_range(1..=5);
        let slots = rng.random_range(1..=10);
        let rate = rng.random_range(1..=12) as f64;
        let increments: Vec<f64> = (0..slots).map(|_| rng.random_range(0..=15) as f64).collect();
        let backlog: Vec<f64> = (0..hops).map(|_| rng.random_range(0..=20) as f64).collect();
        let forwarding = if case % 2 == 0 {
            Forwarding::StoreAndForward
        } else {
            Forwarding::CutThrough
        };
        let sc = Scenario::new(
            hops,
            ChannelModel::constant(rate).unwrap(),
            ArrivalProcess::new(increments.clone()).unwrap(),
        )
        .unwrap()
        .with_backlog(backlog.clone())
        .unwrap();
        let horizon = 120;
        let cfg = SimConfig::new(1, 0).with_horizon(horizon).with_forwarding(forwarding);
        let rec = run_trial(&sc, &cfg, &mut trial_rng(0, 0)).unwrap();
        let expect = reference_departures(
            rate,
            &backlog,
            &increments,
            horizon,
            forwarding == Forwarding::CutThrough,
        );
        assert_eq!(rec.departures, expect, "case {case}");

        let total: f64 = backlog.iter().sum();
        for t in 0..=slots {
            let target = increments[..t].iter().sum::<f64>() + total;
            let w = expect.iter().skip(t).position(|&d| d >= target);
            assert_eq!(rec.virtual_delay(t), w, "case {case}, t = {t}");
        }
    }
}

#[test]
fn constant_channel_estimate_is_a_step() {
    // 3 hops at 10 bits/slot, 25 bits of train, 5 bits queued per hop
    let sc = Scenario::new(
        3,
        ChannelModel::constant(10.0).unwrap(),
        ArrivalProcess::train(5.0, 5).unwrap(),
    )
    .unwrap()
    .with_uniform_backlog(5.0)
    .unwrap();
    let rec = run_trial(&sc, &SimConfig::new(1, 0).with_horizon(50), &mut trial_rng(0, 0)).unwrap();
    let w_true = rec.virtual_delay(5).unwrap();
    let est = estimate_violation(&sc, &SimConfig::new(50, 3), &(0..10).collect::<Vec<_>>()).unwrap();
    for p in est.points {
        let expect = if (p.at as usize) < w_true { 1.0 } else { 0.0 };
        assert_eq!(p.p_hat, expect, "w = {}", p.at);
    }
}

#[test]
fn ln_v_matches_monte_carlo() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let n = 400_000;
    for (db, s) in [(5.0, 0.05), (5.0, 0.3), (10.0, 0.02), (0.0, 0.2), (20.0, 0.01)] {
        let ch = ChannelModel::rayleigh_db(db, 20.0).unwrap();
        let samples: Vec<f64> = (0..n).map(|_| (-s * ch.sample_capacity(&mut rng)).exp()).collect();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (var / n as f64).sqrt();
        let v = ch.ln_v(s).unwrap().exp();
        assert!(
            (v - mean).abs() < 5.0 * se,
            "{db} dB, s = {s}: V = {v}, MC {mean} +- {se}"
        );
    }
}

#[test]
fn sampled_capacity_uses_unit_exponential_gain() {
    // capacity = m log2(1 + g Y) with Y ~ Exp(1)
    let ch = ChannelModel::rayleigh_db(5.0, 20.0).unwrap();
    let g = 10f64.powf(0.5);
    let (mut a, mut b) = (ChaCha8Rng::seed_from_u64(1), ChaCha8Rng::seed_from_u64(1));
    for _ in 0..100 {
        let y: f64 = Exp1.sample(&mut b);
        let c = ch.sample_capacity(&mut a);
        assert!((c - 20.0 * (1.0 + g * y).log2()).abs() < 1e-9);
    }
}

fn arb_scenario() -> impl Strategy<Value = Scenario> {
    (
        1usize..=4,
        prop::collection::vec(0.0f64..30.0, 1..=6),
        prop::collection::vec(0.0f64..60.0, 4),
        0.0f64..15.0,
        0usize..15,
    )
        .prop_map(|(hops, inc, backlog, db, w)| {
            let peak = inc.iter().cloned().fold(0.0, f64::max);
            let arr = ArrivalProcess::new(inc)
                .unwrap()
                .with_envelope(Envelope::new(peak, peak).unwrap())
                .unwrap();
            Scenario::new(hops, ChannelModel::rayleigh_db(db, 20.0).unwrap(), arr)
                .unwrap()
                .with_backlog(backlog[..hops].to_vec())
                .unwrap()
                .with_target_delay(w)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn envelope_form_dominates_exact_arrivals(sc in arb_scenario(), s in 0.001f64..2.0) {
        let exact = kernel_wtb(&sc, s).unwrap();
        let env = kernel_wtb_sigma_rho(&sc, s).unwrap();
        prop_assert!(exact <= env + 1e-12 * env.abs().max(1.0));
    }

    #[test]
    fn bounds_are_probabilities_and_fall_with_w(sc in arb_scenario()) {
        for f in [BoundFamily::Sotat, BoundFamily::Wtb, BoundFamily::WtbDelayed] {
            let here = bound(&sc, f).unwrap().probability;
            let later = bound(&sc.clone().with_target_delay(sc.target_delay() + 3), f).unwrap().probability;
            prop_assert!((0.0..=1.0).contains(&here));
            prop_assert!(later <= here * (1.0 + 1e-12));
        }
    }

    #[test]
    fn kernels_rise_with_backlog(sc in arb_scenario(), s in 0.001f64..0.99, hop in 0usize..4, extra in 0.0f64..50.0) {
        let hop = hop % sc.hops();
        let mut x = sc.backlog().to_vec();
        x[hop] += extra;
        let more = sc.clone().with_backlog(x).unwrap();
        prop_assert!(kernel_wtb(&more, s).unwrap() >= kernel_wtb(&sc, s).unwrap());
        prop_assert!(kernel_sotat(&more, s).unwrap() >= kernel_sotat(&sc, s).unwrap());
    }

    #[test]
    fn ln_v_falls_with_snr_and_s(db in -5.0f64..40.0, s in 0.001f64..3.0) {
        let lo = ChannelModel::rayleigh_db(db, 20.0).unwrap();
        let hi = ChannelModel::rayleigh_db(db + 1.0, 20.0).unwrap();
        let v = lo.ln_v(s).unwrap();
        prop_assert!(v < 0.0);
        prop_assert!(hi.ln_v(s).unwrap() < v);
        prop_assert!(lo.ln_v(s * 1.1).unwrap() < v);
    }

    #[test]
    fn log_sum_exp_matches_direct_sum(xs in prop::collection::vec(-30.0f64..30.0, 1..20)) {
        let direct = xs.iter().map(|x| x.exp()).sum::<f64>().ln();
        prop_assert!((log_sum_exp(xs.iter().copied()) - direct).abs() < 1e-12 * direct.abs().max(1.0));
    }

    #[test]
    fn ln_binomial_pascal(n in 1u64..400, k in 1u64..400) {
        let k = k % n.max(1);
        prop_assume!(k >= 1);
        let lhs = ln_binomial(n, k);
        let rhs = log_sum_exp([ln_binomial(n - 1, k - 1), ln_binomial(n - 1, k)]);
        prop_assert!((lhs - rhs).abs() < 1e-10 * lhs.abs().max(1.0));
    }

    #[test]
    fn wilson_interval_brackets_estimate(k in 0u64..1000, extra in 0u64..1000) {
        let n = k + extra + 1;
        let (lo, hi) = wilson_interval(k, n);
        let p = k as f64 / n as f64;
        prop_assert!(0.0 <= lo && lo <= p && p <= hi && hi <= 1.0);
    }
}
