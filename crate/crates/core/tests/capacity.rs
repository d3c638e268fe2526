use arqsched::capacity::{
    alpha_throughputs, edge_points, genie_region_n2, genie_sum_capacity, region_bounds, sum_capacity_bounds,
    sum_capacity_two_user,
};
use arqsched::hull::{hull_contains, hull_contains_lp};
use arqsched::{ChannelParams, DelayPmf};
use proptest::prelude::*;

fn channel() -> impl Strategy<Value = ChannelParams> {
    (0.0..=1.0f64, 0.0..=1.0f64)
        .prop_filter("identity chain", |(p, r)| !(*p == 1.0 && *r == 0.0))
        .prop_map(|(p, r)| ChannelParams::new(p, r).unwrap())
}

fn positive_channel() -> impl Strategy<Value = ChannelParams> {
    (0.0..0.99f64, 0.001..0.999f64).prop_map(|(r, f)| ChannelParams::new(r + (1.0 - r) * f, r).unwrap())
}

fn delay(max: usize) -> impl Strategy<Value = DelayPmf> {
    prop::collection::vec(0.0..1.0f64, 1..=max + 1)
        .prop_filter("some mass", |w| w.iter().sum::<f64>() > 1e-3)
        .prop_map(|w| DelayPmf::normalized(&w).unwrap())
}

fn alpha() -> impl Strategy<Value = [f64; 4]> {
    prop::array::uniform4(0.0..=1.0f64)
}

fn vertices(v: &[arqsched::capacity::RegionVertex]) -> Vec<Vec<f64>> {
    v.iter().map(|x| x.coords.clone()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn series_shape(ch in channel(), d in delay(6), n in 1usize..=8) {
        let two = sum_capacity_two_user(&ch, &d);
        let genie = genie_sum_capacity(&ch, &d, n).unwrap();
        for c in [&two, &genie] {
            prop_assert_eq!(c.terms.len(), d.max_delay() + 1);
            prop_assert!((c.terms.iter().sum::<f64>() - c.value).abs() <= 1e-12);
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(&c.value));
        }
    }

    #[test]
    fn two_user_genie_equivalence(ch in positive_channel(), d in delay(6)) {
        let a = sum_capacity_two_user(&ch, &d).value;
        let b = genie_sum_capacity(&ch, &d, 2).unwrap().value;
        prop_assert!((a - b).abs() <= 1e-12);
    }

    #[test]
    fn sandwich(ch in positive_channel(), d in delay(4), n in 3usize..=12) {
        let b = sum_capacity_bounds(&ch, &d, n).unwrap();
        prop_assert!(b.lower <= b.upper + 1e-12);
    }

    #[test]
    fn single_user_genie_is_steady_state(ch in channel(), d in delay(5)) {
        let c = genie_sum_capacity(&ch, &d, 1).unwrap().value;
        prop_assert!((c - ch.steady_state()).abs() <= 1e-12);
    }

    #[test]
    fn point_mass_reduction(ch in positive_channel(), d in 0usize..=10) {
        let c = sum_capacity_two_user(&ch, &DelayPmf::deterministic(d)).value;
        let ps = ch.steady_state();
        let expected = ps * ch.after_ack(d as u32) + (1.0 - ps) * ps;
        prop_assert!((c - expected).abs() <= 1e-15);
    }

    #[test]
    fn alpha_schedulers_inside_genie_region(ch in positive_channel(), d in 0u32..=6, a in alpha()) {
        let region = vertices(&genie_region_n2(&ch, &DelayPmf::deterministic(d as usize)).unwrap());
        let mu = alpha_throughputs(&ch, d, a).unwrap();
        prop_assert!(hull_contains(&region, &[mu.mu1, mu.mu2]).unwrap());
        prop_assert!((mu.mu1 + mu.mu2 - mu.sum).abs() <= 1e-15);
    }

    /// Edge points carry the alpha scheduler's sum throughput, lie in the
    /// genie region, and bracket the scheduler's first coordinate.
    #[test]
    fn edge_points_on_boundary(ch in positive_channel(), d in 0u32..=6, a in alpha()) {
        let region = vertices(&genie_region_n2(&ch, &DelayPmf::deterministic(d as usize)).unwrap());
        if let Some((e1, e2)) = edge_points(&ch, d, a).unwrap() {
            let mu = alpha_throughputs(&ch, d, a).unwrap();
            prop_assert!((e1[0] + e1[1] - mu.sum).abs() <= 1e-12);
            prop_assert!(e2[0] <= mu.mu1 + 1e-12 && mu.mu1 <= e1[0] + 1e-12);
            prop_assert!(hull_contains(&region, &e1).unwrap());
            prop_assert!(hull_contains(&region, &e2).unwrap());
        }
    }

    #[test]
    fn hull_routes_agree(ch in positive_channel(), d in 0usize..=4, x in 0.0..0.8f64, y in 0.0..0.8f64, z in 0.0..0.8f64) {
        let two = vertices(&region_bounds(&ch, &DelayPmf::deterministic(d), 2).unwrap().inner);
        prop_assert_eq!(hull_contains(&two, &[x, y]).unwrap(), hull_contains_lp(&two, &[x, y]).unwrap());
        let three = vertices(&region_bounds(&ch, &DelayPmf::deterministic(d), 3).unwrap().inner);
        let pt = [x, y, z];
        prop_assert_eq!(hull_contains(&three, &pt).unwrap(), hull_contains_lp(&three, &pt).unwrap());
    }
}

#[test]
fn region_nesting() {
    for (p, r) in [(0.8, 0.2), (0.9, 0.1), (0.6, 0.4), (0.95, 0.5), (0.3, 0.1)] {
        let ch = ChannelParams::new(p, r).unwrap();
        for pmf in [vec![1.0], vec![0.5, 0.5], vec![0.1, 0.2, 0.7]] {
            let d = DelayPmf::new(pmf).unwrap();
            for n in 2..=5 {
                let b = region_bounds(&ch, &d, n).unwrap();
                assert_eq!(b.outer.constraints.len(), (1 << n) - 1);
                assert_eq!(b.inner.len(), 1 + n + n * (n - 1) / 2);
                for v in &b.inner {
                    assert!(b.outer.contains(&v.coords, 1e-9).unwrap(), "{} outside for n={n}", v.label);
                }
            }
        }
        for dd in 0..=5 {
            let d = DelayPmf::deterministic(dd);
            let b = region_bounds(&ch, &d, 2).unwrap();
            let genie = genie_region_n2(&ch, &d).unwrap();
            let gv = vertices(&genie);
            for v in &b.inner {
                assert!(hull_contains(&gv, &v.coords).unwrap(), "inner {} outside genie region", v.label);
            }
            for v in &genie {
                assert!(b.outer.contains(&v.coords, 1e-9).unwrap(), "genie {} outside outer bound", v.label);
            }
        }
    }
}

#[test]
fn sum_capacity_falls_with_delay() {
    for (p, r) in [(0.8, 0.2), (0.55, 0.45), (0.99, 0.01), (0.7, 0.0)] {
        let ch = ChannelParams::new(p, r).unwrap();
        let c: Vec<f64> = (0..=10).map(|d| sum_capacity_two_user(&ch, &DelayPmf::deterministic(d)).value).collect();
        assert!(c.windows(2).all(|w| w[1] <= w[0] + 1e-15), "{c:?}");
    }
}

#[test]
fn hand_values() {
    let ch = ChannelParams::new(0.8, 0.2).unwrap();
    let c0 = sum_capacity_two_user(&ch, &DelayPmf::instantaneous()).value;
    assert!((c0 - 0.65).abs() < 1e-12);
    let half = sum_capacity_two_user(&ch, &DelayPmf::new(vec![0.5, 0.5]).unwrap()).value;
    assert!((half - 0.62).abs() < 1e-12);
    let b = sum_capacity_bounds(&ch, &DelayPmf::instantaneous(), 3).unwrap();
    assert!((b.lower - 0.65).abs() < 1e-12 && (b.upper - 0.725).abs() < 1e-12);
    let g50 = genie_sum_capacity(&ch, &DelayPmf::instantaneous(), 50).unwrap().value;
    let q = 0.5f64.powi(50);
    assert!((g50 - (0.8 * (1.0 - q) + 0.2 * q)).abs() < 1e-3);

    let z = genie_region_n2(&ch, &DelayPmf::instantaneous()).unwrap();
    assert!((z[2].coords[0] - 0.45).abs() < 1e-12 && (z[2].coords[1] - 0.2).abs() < 1e-12);
    let ps = ch.steady_state();
    assert!(hull_contains(&vertices(&region_bounds(&ch, &DelayPmf::instantaneous(), 2).unwrap().inner), &[0.5, 0.0])
        .unwrap());
    assert!(!hull_contains(
        &vertices(&region_bounds(&ch, &DelayPmf::instantaneous(), 2).unwrap().inner),
        &[ps + 0.01, ps + 0.01]
    )
    .unwrap());
}
