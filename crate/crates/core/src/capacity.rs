//! Long-run throughput limits: sum capacities, their bounds, and capacity
//! region vertices and constraints.
//!
//! All series run over the freshness `l` of the newest feedback, weighted by
//! its steady-state law `P(D <= l) prod_{d<l} P(D > d)`, which vanishes past
//! the largest delay.

use crate::channel::ChannelParams;
use crate::delay::DelayPmf;
use crate::error::{Error, Result};

/// A throughput and its per-freshness contributions.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacityResult {
    pub value: f64,
    /// `terms[l]` is the contribution of freshness `l`.
    pub terms: Vec<f64>,
}

impl CapacityResult {
    fn from_terms(terms: Vec<f64>) -> Self {
        Self { value: terms.iter().sum(), terms }
    }
}

fn steady_freshness(delay: &DelayPmf) -> Vec<f64> {
    delay.freshness(delay.max_delay() + 1).by_age().to_vec()
}

/// Expected largest belief among `n` users at freshness `l` when the revealed
/// states are drawn from the steady state.
fn genie_term(params: &ChannelParams, n: usize, l: u32) -> f64 {
    let ps = params.steady_state();
    let (on, off) = (params.after_ack(l), params.after_nack(l));
    if on >= off {
        let all_off = (1.0 - ps).powi(n as i32);
        (1.0 - all_off) * on + all_off * off
    } else {
        let all_on = ps.powi(n as i32);
        (1.0 - all_on) * off + all_on * on
    }
}

/// Sum capacity with two users.
///
/// For `p >= r` each term is `p_s T^l(p) + (1 - p_s) p_s`. When `T^l(r)`
/// exceeds `T^l(p)` (possible only for `p < r`) the term is the expected
/// larger belief instead.
pub fn sum_capacity_two_user(params: &ChannelParams, delay: &DelayPmf) -> CapacityResult {
    let ps = params.steady_state();
    let terms = steady_freshness(delay)
        .iter()
        .enumerate()
        .map(|(l, w)| {
            let l = l as u32;
            let (on, off) = (params.after_ack(l), params.after_nack(l));
            let reward = if on >= off { ps * on + (1.0 - ps) * ps } else { (1.0 - ps * ps) * off + ps * ps * on };
            reward * w
        })
        .collect();
    CapacityResult::from_terms(terms)
}

/// Sum capacity of the genie-aided system with `n` users.
pub fn genie_sum_capacity(params: &ChannelParams, delay: &DelayPmf, n: usize) -> Result<CapacityResult> {
    if n == 0 {
        return Err(Error::Config("at least one user is required".into()));
    }
    let terms = steady_freshness(delay).iter().enumerate().map(|(l, w)| genie_term(params, n, l as u32) * w).collect();
    Ok(CapacityResult::from_terms(terms))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SumCapacityBounds {
    pub lower: f64,
    pub upper: f64,
}

/// Bounds on the sum capacity with more than two users: the two-user
/// capacity below, the genie capacity above.
pub fn sum_capacity_bounds(params: &ChannelParams, delay: &DelayPmf, n: usize) -> Result<SumCapacityBounds> {
    if n <= 2 {
        return Err(Error::Precondition(format!(
            "bounds apply to more than two users; N={n} has an exact sum capacity"
        )));
    }
    Ok(SumCapacityBounds {
        lower: sum_capacity_two_user(params, delay).value,
        upper: genie_sum_capacity(params, delay, n)?.value,
    })
}

/// A labelled throughput vector.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionVertex {
    pub label: String,
    pub coords: Vec<f64>,
}

impl RegionVertex {
    fn new(label: impl Into<String>, coords: Vec<f64>) -> Self {
        Self { label: label.into(), coords }
    }
}

/// `sum_{i in S} x_i <= bound` for one nonempty subset `S`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub users: Vec<usize>,
    pub bound: f64,
}

/// Throughput vectors with `x >= 0` and every subset sum within the genie
/// sum capacity of that many users.
#[derive(Debug, Clone, PartialEq)]
pub struct OuterPolytope {
    pub dim: usize,
    pub constraints: Vec<Constraint>,
}

impl OuterPolytope {
    pub fn contains(&self, x: &[f64], tol: f64) -> Result<bool> {
        if x.len() != self.dim {
            return Err(Error::Dimension { expected: self.dim, got: x.len() });
        }
        if x.iter().any(|v| *v < -tol) {
            return Ok(false);
        }
        Ok(self.constraints.iter().all(|c| c.users.iter().map(|&i| x[i]).sum::<f64>() <= c.bound + tol))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionBounds {
    pub outer: OuterPolytope,
    /// Vertices whose convex hull is achievable.
    pub inner: Vec<RegionVertex>,
}

/// Largest user count for which the `2^N - 1` outer constraints are built.
pub const MAX_REGION_USERS: usize = 20;

/// Outer polytope and inner hull vertices `O`, `X_i` and `Y_{j,k}` (users
/// counted from 1 in labels).
pub fn region_bounds(params: &ChannelParams, delay: &DelayPmf, n: usize) -> Result<RegionBounds> {
    if n < 2 {
        return Err(Error::Precondition("a capacity region needs at least two users".into()));
    }
    if n > MAX_REGION_USERS {
        return Err(Error::Infeasible(format!("{n} users means 2^{n} - 1 constraints")));
    }
    let caps = (1..=n).map(|k| genie_sum_capacity(params, delay, k).map(|c| c.value)).collect::<Result<Vec<_>>>()?;
    let constraints = (1u32..(1 << n))
        .map(|mask| {
            let users: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
            let bound = caps[users.len() - 1];
            Constraint { users, bound }
        })
        .collect();

    let ps = params.steady_state();
    let half = sum_capacity_two_user(params, delay).value / 2.0;
    let mut inner = vec![RegionVertex::new("O", vec![0.0; n])];
    for i in 0..n {
        let mut x = vec![0.0; n];
        x[i] = ps;
        inner.push(RegionVertex::new(format!("X{}", i + 1), x));
    }
    for j in 0..n {
        for k in j + 1..n {
            let mut y = vec![0.0; n];
            y[j] = half;
            y[k] = half;
            inner.push(RegionVertex::new(format!("Y{},{}", j + 1, k + 1), y));
        }
    }
    Ok(RegionBounds { outer: OuterPolytope { dim: n, constraints }, inner })
}

/// `Z_1` of the two-user genie region with fixed delay `d`.
fn z1(params: &ChannelParams, d: u32) -> (f64, f64) {
    let ps = params.steady_state();
    let (tp, tr) = (params.after_ack(d), params.after_nack(d));
    (ps * tp + (1.0 - ps).powi(2) * tr, (1.0 - ps) * ps * tp)
}

/// Vertices `O, X1, Z1, Z2, X2` of the exact two-user genie capacity region
/// under a fixed delay, in boundary order.
pub fn genie_region_n2(params: &ChannelParams, delay: &DelayPmf) -> Result<Vec<RegionVertex>> {
    let d = delay
        .point_mass()
        .ok_or_else(|| Error::Precondition("the two-user genie region needs a fixed delay".into()))?;
    let ps = params.steady_state();
    let (a, b) = z1(params, d as u32);
    Ok(vec![
        RegionVertex::new("O", vec![0.0, 0.0]),
        RegionVertex::new("X1", vec![ps, 0.0]),
        RegionVertex::new("Z1", vec![a, b]),
        RegionVertex::new("Z2", vec![b, a]),
        RegionVertex::new("X2", vec![0.0, ps]),
    ])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaThroughput {
    pub mu1: f64,
    pub mu2: f64,
    pub sum: f64,
}

fn check_alpha(alpha: &[f64; 4]) -> Result<()> {
    if alpha.iter().any(|a| !(0.0..=1.0).contains(a)) {
        return Err(Error::AlphaPolicy("every alpha in [0, 1]"));
    }
    Ok(())
}

/// Long-run per-user throughputs of the two-user alpha scheduler under a
/// fixed delay `d`.
pub fn alpha_throughputs(params: &ChannelParams, d: u32, alpha: [f64; 4]) -> Result<AlphaThroughput> {
    check_alpha(&alpha)?;
    let ps = params.steady_state();
    let qs = 1.0 - ps;
    let (tp, tr) = (params.after_ack(d), params.after_nack(d));
    let [a1, a2, a3, a4] = alpha;
    let mu1 = qs * qs * a1 * tr + qs * ps * a2 * tr + ps * qs * a3 * tp + ps * ps * a4 * tp;
    let mu2 =
        qs * qs * (1.0 - a1) * tr + qs * ps * (1.0 - a2) * tp + ps * qs * (1.0 - a3) * tr + ps * ps * (1.0 - a4) * tp;
    Ok(AlphaThroughput { mu1, mu2, sum: mu1 + mu2 })
}

/// Points on edges `X1 Z1` and `X2 Z2` with the same sum throughput as the
/// alpha scheduler. Defined only when `alpha[2] > alpha[1]`.
#[doc(hidden)]
pub fn edge_points(params: &ChannelParams, d: u32, alpha: [f64; 4]) -> Result<Option<([f64; 2], [f64; 2])>> {
    check_alpha(&alpha)?;
    let w = alpha[2] - alpha[1];
    if w <= 0.0 {
        return Ok(None);
    }
    let ps = params.steady_state();
    let (a, b) = z1(params, d);
    let e1 = [ps * (1.0 - w) + a * w, b * w];
    Ok(Some((e1, [e1[1], e1[0]])))
}
