//! Optimal downlink power split at a fixed FlyBS position.
//!
//! The program `max sum_i B_i log2(1 + a_i p_i)` subject to `p_i >= floor_i`
//! and `sum p_i <= p_max` is separable and concave, so its optimum is the
//! floored water-filling `p_i = max(floor_i, B_i / (lambda ln 2) - 1 / a_i)`.
//! The multiplier is found by bisection and then snapped to the closed-form
//! value of the final active set.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::channel::NodeState;
use crate::{Error, Point3, Result};

/// Relative slack on the budget when comparing it against the summed floors.
pub const BUDGET_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationProblem {
    /// SNR per watt `a_i = Q_i d_i^-alpha_i / (N_i + I)`.
    pub link_gain: Vec<f64>,
    /// Minimum power `p_i^min` meeting each node's capacity requirement.
    pub floor: Vec<f64>,
    pub p_max: f64,
    pub bandwidth: Vec<f64>,
}

impl AllocationProblem {
    pub fn new(
        link_gain: Vec<f64>,
        floor: Vec<f64>,
        p_max: f64,
        bandwidth: Vec<f64>,
    ) -> Result<Self> {
        let n = link_gain.len();
        if floor.len() != n || bandwidth.len() != n {
            return Err(Error::Contract(format!(
                "allocation vectors differ in length ({n}, {}, {})",
                floor.len(),
                bandwidth.len()
            )));
        }
        let gains_ok = link_gain.iter().all(|a| *a > 0.0 && a.is_finite());
        let floors_ok = floor.iter().all(|f| *f >= 0.0 && f.is_finite());
        let bw_ok = bandwidth.iter().all(|b| *b > 0.0 && b.is_finite());
        if !(gains_ok && floors_ok && bw_ok && p_max > 0.0 && p_max.is_finite()) {
            return Err(Error::Domain(
                "allocation problem needs positive finite inputs".into(),
            ));
        }
        Ok(AllocationProblem {
            link_gain,
            floor,
            p_max,
            bandwidth,
        })
    }

    /// Problem seen from FlyBS position `q`.
    pub fn at(q: &Point3, nodes: &[NodeState], p_max: f64) -> Result<Self> {
        let mut a = Vec::with_capacity(nodes.len());
        let mut f = Vec::with_capacity(nodes.len());
        for n in nodes {
            let d = n.distance(q);
            if !(d > 0.0) {
                return Err(Error::Domain(format!("FlyBS coincides with node {}", n.id)));
            }
            let gain = n.channel.link_gain(d);
            a.push(gain);
            f.push(n.channel.snr_for_capacity(n.qos_min) / gain);
        }
        let b = nodes.iter().map(|n| n.channel.bandwidth).collect();
        AllocationProblem::new(a, f, p_max, b)
    }

    pub fn len(&self) -> usize {
        self.link_gain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.link_gain.is_empty()
    }

    pub fn floor_sum(&self) -> f64 {
        self.floor.iter().sum()
    }

    /// `Err` with the deficit when the floors cannot fit in the budget.
    pub fn check_floors(&self) -> Result<()> {
        let required = self.floor_sum();
        if required > self.p_max * (1.0 + BUDGET_TOL) {
            return Err(Error::PowerInfeasible {
                required,
                budget: self.p_max,
                deficit: required - self.p_max,
            });
        }
        Ok(())
    }

    /// Marginal utility `B_i a_i / ((1 + a_i p_i) ln 2)` at `p`.
    pub fn marginals(&self, p: &[f64]) -> Vec<f64> {
        (0..self.len())
            .map(|i| {
                self.bandwidth[i] * self.link_gain[i] / ((1.0 + self.link_gain[i] * p[i]) * LN_2)
            })
            .collect()
    }

    fn level(&self, i: usize, nu: f64) -> f64 {
        (self.bandwidth[i] / (nu * LN_2) - 1.0 / self.link_gain[i]).max(self.floor[i])
    }

    fn levels(&self, nu: f64) -> Vec<f64> {
        (0..self.len()).map(|i| self.level(i, nu)).collect()
    }

    fn level_sum(&self, nu: f64) -> f64 {
        (0..self.len()).map(|i| self.level(i, nu)).sum()
    }
}

/// Minimum transmit power for `node` to reach its required capacity at distance `d`.
pub fn qos_floor(node: &NodeState, d: f64) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::Domain(format!(
            "floor power undefined at distance {d}"
        )));
    }
    Ok(node.channel.snr_for_capacity(node.qos_min) / node.channel.link_gain(d))
}

/// Sum capacity `sum_i B_i log2(1 + a_i p_i)`.
pub fn objective(prob: &AllocationProblem, p: &[f64]) -> f64 {
    (0..prob.len())
        .map(|i| prob.bandwidth[i] * (prob.link_gain[i] * p[i]).ln_1p() / LN_2)
        .sum()
}

/// Capacity-maximizing power vector.
pub fn allocate(prob: &AllocationProblem) -> Result<Vec<f64>> {
    solve_priced(prob, 0.0)
}

/// Maximizes `objective(p) - eta * sum(p)` over the same feasible set.
///
/// With `eta > 0` the budget need not bind.
pub fn solve_priced(prob: &AllocationProblem, eta: f64) -> Result<Vec<f64>> {
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(Error::Domain(format!(
            "power price must be finite and >= 0, got {eta}"
        )));
    }
    prob.check_floors()?;
    if prob.is_empty() {
        return Ok(Vec::new());
    }
    if prob.floor_sum() >= prob.p_max {
        return Ok(prob.floor.clone());
    }
    if eta > 0.0 && prob.level_sum(eta) <= prob.p_max {
        return Ok(prob.levels(eta));
    }

    // the level sum decreases in nu; at nu_hi every node sits on its floor
    let nu_hi_init = prob.marginals(&prob.floor).into_iter().fold(0.0, f64::max);
    let mut hi = nu_hi_init;
    let mut lo = if eta > 0.0 { eta } else { hi / 2.0 };
    while prob.level_sum(lo) < prob.p_max {
        lo /= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let s = prob.level_sum(mid);
        if (s - prob.p_max).abs() <= 1e-12 * prob.p_max {
            lo = mid;
            hi = mid;
            break;
        }
        if s > prob.p_max {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let nu = 0.5 * (lo + hi);
    Ok(polish(prob, nu).unwrap_or_else(|| prob.levels(nu)))
}

/// Exact multiplier of the active set at `nu`, if that set is self-consistent.
fn polish(prob: &AllocationProblem, nu: f64) -> Option<Vec<f64>> {
    let active: Vec<bool> = (0..prob.len())
        .map(|i| prob.bandwidth[i] / (nu * LN_2) - 1.0 / prob.link_gain[i] > prob.floor[i])
        .collect();
    let mut rest = prob.p_max;
    let mut b_sum = 0.0;
    for i in 0..prob.len() {
        if active[i] {
            rest += 1.0 / prob.link_gain[i];
            b_sum += prob.bandwidth[i];
        } else {
            rest -= prob.floor[i];
        }
    }
    if b_sum == 0.0 || rest <= 0.0 {
        return None;
    }
    let nu_exact = b_sum / (rest * LN_2);
    let p: Vec<f64> = (0..prob.len())
        .map(|i| {
            let w = prob.bandwidth[i] / (nu_exact * LN_2) - 1.0 / prob.link_gain[i];
            if active[i] {
                w
            } else {
                prob.floor[i]
            }
        })
        .collect();
    let consistent = (0..prob.len()).all(|i| {
        let w = prob.bandwidth[i] / (nu_exact * LN_2) - 1.0 / prob.link_gain[i];
        if active[i] {
            w >= prob.floor[i]
        } else {
            w <= prob.floor[i] * (1.0 + 1e-12) + 1e-300
        }
    });
    consistent.then_some(p)
}

/// Assigns floors in order of decreasing floor until the budget runs out.
///
/// Used when the floors cannot all be met: the nodes with the largest deficit
/// are served first, later ones get whatever is left.
pub fn priority_floors(floor: &[f64], p_max: f64) -> Vec<f64> {
    let mut order: Vec<usize> = (0..floor.len()).collect();
    order.sort_by(|&a, &b| floor[b].total_cmp(&floor[a]).then(a.cmp(&b)));
    let mut left = p_max;
    let mut p = vec![0.0; floor.len()];
    for i in order {
        let give = floor[i].min(left);
        p[i] = give;
        left -= give;
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{capacity, received_power, ChannelParams};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn prob(a: &[f64], f: &[f64], p_max: f64, b: &[f64]) -> AllocationProblem {
        AllocationProblem::new(a.to_vec(), f.to_vec(), p_max, b.to_vec()).unwrap()
    }

    #[test]
    fn symmetric_pair_splits_evenly() {
        let pr = prob(&[1e3, 1e3], &[0.0, 0.0], 1.0, &[1e6, 1e6]);
        let p = allocate(&pr).unwrap();
        assert_relative_eq!(p[0], 0.5, max_relative = 1e-12);
        assert_relative_eq!(p[1], 0.5, max_relative = 1e-12);
    }

    #[test]
    fn single_node_takes_the_budget() {
        let pr = prob(&[42.0], &[0.1], 0.7, &[1e6]);
        assert_relative_eq!(allocate(&pr).unwrap()[0], 0.7, max_relative = 1e-12);
    }

    #[test]
    fn floors_above_budget_report_deficit() {
        let pr = prob(&[1.0, 1.0], &[0.6, 0.6], 1.0, &[1.0, 1.0]);
        match allocate(&pr) {
            Err(Error::PowerInfeasible { deficit, .. }) => {
                assert_relative_eq!(deficit, 0.2, max_relative = 1e-12)
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn floors_exactly_at_budget() {
        let pr = prob(&[1.0, 5.0], &[0.25, 0.75], 1.0, &[1.0, 1.0]);
        assert_eq!(allocate(&pr).unwrap(), vec![0.25, 0.75]);
    }

    #[test]
    fn weak_node_stays_on_floor() {
        // node 1 is so weak that water never reaches its floor of zero
        let pr = prob(&[1e4, 1e-3], &[0.0, 0.0], 1.0, &[1e6, 1e6]);
        let p = allocate(&pr).unwrap();
        assert_eq!(p[1], 0.0);
        assert_relative_eq!(p[0], 1.0, max_relative = 1e-12);
    }

    fn node(cmin: f64) -> NodeState {
        NodeState {
            id: 0,
            position: Point3::zeros(),
            qos_min: cmin,
            channel: ChannelParams::from_noise_density(1.0, 2.4, 1e6, -174.0, -100.0).unwrap(),
        }
    }

    #[test]
    fn floor_examples() {
        assert_eq!(qos_floor(&node(0.0), 150.0).unwrap(), 0.0);
        let n = node(2.5e6);
        let f = qos_floor(&n, 150.0).unwrap();
        let c = capacity(received_power(f, 150.0, &n.channel).unwrap(), &n.channel);
        assert_relative_eq!(c, 2.5e6, max_relative = 1e-12);
        let f2 = qos_floor(&n, 300.0).unwrap();
        assert_relative_eq!(f2 / f, 2f64.powf(2.4), max_relative = 1e-12);
        assert!(qos_floor(&n, 0.0).is_err());
    }

    #[test]
    fn priced_solution_can_leave_budget_unused() {
        let pr = prob(&[10.0], &[0.0], 1.0, &[1.0]);
        // marginal 10/((1 + 10 p) ln2) equals eta at p = (10/(eta ln2) - 1)/10
        let eta = 5.0;
        let p = solve_priced(&pr, eta).unwrap();
        assert_relative_eq!(
            p[0],
            (10.0 / (eta * LN_2) - 1.0) / 10.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn priority_floors_serve_largest_first() {
        assert_eq!(
            priority_floors(&[0.2, 0.7, 0.4], 1.0),
            vec![0.0, 0.7, 0.30000000000000004]
        );
    }

    fn instance() -> impl Strategy<Value = AllocationProblem> {
        (1usize..8).prop_flat_map(|n| {
            (
                prop::collection::vec(1e-2f64..1e4, n),
                prop::collection::vec(0.0f64..1.0, n),
                prop::collection::vec(1e5f64..1e7, n),
                0.1f64..5.0,
            )
                .prop_map(|(a, f, b, p_max)| {
                    // scale floors to use at most 90% of the budget
                    let total: f64 = f.iter().sum::<f64>().max(1e-12);
                    let f = f
                        .iter()
                        .map(|x| x / total * 0.9 * p_max * x.min(1.0))
                        .collect();
                    AllocationProblem::new(a, f, p_max, b).unwrap()
                })
        })
    }

    proptest! {
        #[test]
        fn kkt_conditions_hold(pr in instance()) {
            let p = allocate(&pr).unwrap();
            let sum: f64 = p.iter().sum();
            prop_assert!((sum - pr.p_max).abs() <= 1e-9 * pr.p_max);
            for i in 0..pr.len() {
                prop_assert!(p[i] >= pr.floor[i]);
            }
            let m = pr.marginals(&p);
            let free: Vec<usize> = (0..pr.len()).filter(|&i| p[i] > pr.floor[i] * (1.0 + 1e-12)).collect();
            if let Some(&j) = free.first() {
                let lambda = m[j];
                for &i in &free {
                    prop_assert!((m[i] - lambda).abs() <= 1e-6 * lambda);
                }
                for i in 0..pr.len() {
                    if !free.contains(&i) {
                        prop_assert!(m[i] <= lambda * (1.0 + 1e-6));
                    }
                }
            }
        }
    }
}
