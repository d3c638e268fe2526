use arqsched::eval::{episode_rng, simulate_episode, EpisodeTrace};
use arqsched::policy::{Greedy, Stateless};
use arqsched::{ChannelParams, DelayPmf, Freshness, Instance};
use proptest::prelude::*;

fn pmf() -> impl Strategy<Value = DelayPmf> {
    prop::collection::vec(0.0..1.0f64, 1..6)
        .prop_filter("some mass", |w| w.iter().sum::<f64>() > 1e-3)
        .prop_map(|w| DelayPmf::normalized(&w).unwrap())
}

proptest! {
    #[test]
    fn mass_and_support(d in pmf()) {
        for elapsed in 0..=100 {
            let f = d.freshness(elapsed);
            prop_assert!((f.total() - 1.0).abs() < 1e-12);
            if elapsed > d.max_delay() {
                prop_assert_eq!(f.absent(), 0.0);
                prop_assert!(f.by_age().iter().skip(d.max_delay() + 1).all(|w| *w == 0.0));
            }
        }
    }
}

/// Empirical law of the newest arrived feedback against the closed form,
/// within three binomial standard deviations per cell.
#[test]
fn simulated_freshness_matches_law() {
    let delay = DelayPmf::new(vec![0.2, 0.5, 0.3]).unwrap();
    let m = 8u32;
    let inst = Instance::steady(ChannelParams::new(0.8, 0.3).unwrap(), 2, m, delay.clone()).unwrap();
    let episodes = 40_000u64;
    let cells = delay.max_delay() + 2;
    let mut counts = vec![vec![0u64; cells]; m as usize];
    let mut trace = EpisodeTrace::default();
    for e in 0..episodes {
        let mut rng = episode_rng(11, e);
        let mut policy = Stateless(Box::new(Greedy) as Box<dyn arqsched::Policy>);
        simulate_episode(&inst, false, &mut policy, &mut rng, &mut trace).unwrap();
        for (i, f) in trace.freshness.iter().enumerate() {
            let c = match f {
                Freshness::Age(l) => *l,
                Freshness::Absent => cells - 1,
            };
            counts[i][c] += 1;
        }
    }
    for (i, row) in counts.iter().enumerate() {
        let law = delay.freshness(i);
        for (c, &k) in row.iter().enumerate() {
            let q = if c == cells - 1 { law.absent() } else { law.by_age().get(c).copied().unwrap_or(0.0) };
            let n = episodes as f64;
            let sd = (q * (1.0 - q) / n).sqrt();
            let got = k as f64 / n;
            assert!((got - q).abs() <= 3.0 * sd + 1e-12, "elapsed {i}, cell {c}: {got} vs {q}");
        }
    }
}
