//! Comparison schemes sharing the constraint machinery of the main optimizer.
//!
//! * MMC maximizes the minimum node capacity: it flies toward the point that
//!   minimizes the power needed for a common capacity target and then raises
//!   that target as far as the budget allows.
//! * EEM keeps the FlyBS at a fixed position and maximizes energy efficiency
//!   (sum capacity per watt of transmit power).
//! * EEEM flies toward the node centroid and then allocates like EEM.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::channel::{sum_capacity, NodeState};
use crate::feasibility::Limits;
use crate::geometry::{project_onto_ball_slab, Sphere};
use crate::optimizer::{build_report, unconstrained_limits, StepReport};
use crate::power_alloc::{objective, priority_floors, solve_priced, AllocationProblem};
use crate::{Error, Point3, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineKind {
    Mmc,
    Eem,
    Eeem,
}

/// Result of the energy-efficiency allocation.
#[derive(Debug, Clone, PartialEq)]
pub struct EeAllocation {
    pub power: Vec<f64>,
    /// Achieved sum capacity per watt, bit/s/W.
    pub efficiency: f64,
    pub iterations: u32,
}

/// Maximizes `objective(p) / sum(p)` by Dinkelbach iterations.
pub fn ee_allocate(prob: &AllocationProblem) -> Result<EeAllocation> {
    prob.check_floors()?;
    let n = prob.len();
    if n == 0 {
        return Ok(EeAllocation {
            power: Vec::new(),
            efficiency: 0.0,
            iterations: 0,
        });
    }
    // start from a strictly positive vector so the ratio is defined
    let mut p: Vec<f64> = if prob.floor_sum() > 0.0 {
        prob.floor.clone()
    } else {
        vec![prob.p_max / n as f64; n]
    };
    let mut eta = objective(prob, &p) / p.iter().sum::<f64>();
    let mut iterations = 0;
    for _ in 0..100 {
        iterations += 1;
        let next = solve_priced(prob, eta)?;
        let c = objective(prob, &next);
        let s: f64 = next.iter().sum();
        let gap = c - eta * s;
        p = next;
        if s <= 0.0 {
            break;
        }
        let new_eta = c / s;
        if gap.abs() <= 1e-12 * c.abs().max(1.0) || new_eta <= eta {
            break;
        }
        eta = new_eta;
    }
    let s: f64 = p.iter().sum();
    Ok(EeAllocation {
        efficiency: if s > 0.0 {
            objective(prob, &p) / s
        } else {
            0.0
        },
        power: p,
        iterations,
    })
}

/// Per-node floors needed for a common capacity target `c` at position `q`.
fn common_floors(prob: &AllocationProblem, c: f64) -> Vec<f64> {
    (0..prob.len())
        .map(|i| (c / prob.bandwidth[i] * LN_2).exp_m1() / prob.link_gain[i])
        .collect()
}

/// Largest common capacity every node can get at `q`, with the powers achieving it.
pub fn max_min_capacity(q: &Point3, nodes: &[NodeState], p_max: f64) -> Result<(f64, Vec<f64>)> {
    let prob = AllocationProblem::at(q, nodes, p_max)?;
    let fits = |c: f64| common_floors(&prob, c).iter().sum::<f64>() <= p_max;
    let mut lo = 0.0;
    let mut hi = prob.bandwidth.iter().copied().fold(1.0, f64::max);
    while fits(hi) {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 1e-12 * hi || mid <= lo || mid >= hi {
            break;
        }
        if fits(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo, common_floors(&prob, lo)))
}

/// `sum_i ((N_i + I) / Q_i) |q - v_i|^alpha_i`, the total power per unit SNR.
fn spread_cost(q: &Point3, nodes: &[NodeState]) -> f64 {
    nodes
        .iter()
        .map(|n| {
            let ch = &n.channel;
            ch.noise_plus_interference() / ch.gain * (q - n.position).norm().powf(ch.pathloss_exp)
        })
        .sum()
}

fn spread_cost_gradient(q: &Point3, nodes: &[NodeState]) -> Point3 {
    nodes.iter().fold(Point3::zeros(), |acc, n| {
        let ch = &n.channel;
        let d = q - n.position;
        let r = d.norm();
        if r == 0.0 {
            return acc;
        }
        acc + d
            * (ch.noise_plus_interference() / ch.gain
                * ch.pathloss_exp
                * r.powf(ch.pathloss_exp - 2.0))
    })
}

/// Minimizes [`spread_cost`] over `ball ∩ slab` by projected gradient descent.
fn min_spread_position(
    start: &Point3,
    ball: &Sphere,
    limits: &Limits,
    nodes: &[NodeState],
) -> Point3 {
    let project = |x: &Point3| project_onto_ball_slab(ball, limits.h_min, limits.h_max, x);
    let Some(mut q) = project(start) else {
        return *start;
    };
    let mut f = spread_cost(&q, nodes);
    let mut t = 1.0;
    for _ in 0..500 {
        let g = spread_cost_gradient(&q, nodes);
        let gn = g.norm();
        if gn == 0.0 {
            break;
        }
        // step measured in meters along the normalized gradient
        let mut accepted = false;
        while t > 1e-9 {
            let Some(cand) = project(&(q - g / gn * t)) else {
                break;
            };
            let fc = spread_cost(&cand, nodes);
            if fc < f {
                let moved = (cand - q).norm();
                q = cand;
                f = fc;
                accepted = true;
                t *= 2.0;
                if moved < 1e-9 {
                    return q;
                }
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    q
}

fn reachable_ball(q_prev: &Point3, limits: &Limits) -> Result<Sphere> {
    let (_, outer) = limits.speed_radii()?;
    Ok(Sphere::new(*q_prev, outer))
}

/// One MMC timestep; `speed_constraint = false` lets it jump anywhere in the slab.
pub fn mmc_step(
    q_prev: &Point3,
    nodes: &[NodeState],
    limits: &Limits,
    speed_constraint: bool,
) -> Result<StepReport> {
    let motion = if speed_constraint {
        *limits
    } else {
        unconstrained_limits(limits)
    };
    let ball = reachable_ball(q_prev, &motion)?;
    // equal-weight centroid as starting point, then descend on the exact cost
    let centroid =
        nodes.iter().fold(Point3::zeros(), |a, n| a + n.position) / nodes.len().max(1) as f64;
    let q = min_spread_position(&centroid, &ball, &motion, nodes);
    let (c, p) = max_min_capacity(&q, nodes, limits.p_max)?;
    let short = nodes.iter().any(|n| c < n.qos_min * (1.0 - 1e-9));
    let reason = short.then(|| format!("max-min capacity {c:.0} bit/s below a node requirement"));
    let total = sum_capacity(&q, nodes, &p)?;
    build_report(q_prev, q, p, nodes, &motion, 1, vec![total], reason)
}

fn ee_report(
    q_prev: &Point3,
    q: Point3,
    nodes: &[NodeState],
    limits: &Limits,
) -> Result<StepReport> {
    let prob = AllocationProblem::at(&q, nodes, limits.p_max)?;
    match ee_allocate(&prob) {
        Ok(a) => {
            let total = sum_capacity(&q, nodes, &a.power)?;
            build_report(
                q_prev,
                q,
                a.power,
                nodes,
                limits,
                a.iterations,
                vec![total],
                None,
            )
        }
        Err(e @ Error::PowerInfeasible { .. }) => {
            let p = priority_floors(&prob.floor, limits.p_max);
            build_report(
                q_prev,
                q,
                p,
                nodes,
                limits,
                0,
                Vec::new(),
                Some(e.to_string()),
            )
        }
        Err(e) => Err(e),
    }
}

/// Fixed position of EEM: arena center at mid altitude.
pub fn eem_position(arena_center: &Point3, limits: &Limits) -> Point3 {
    Point3::new(
        arena_center.x,
        arena_center.y,
        0.5 * (limits.h_min + limits.h_max),
    )
}

/// One EEM timestep: stay at `position` and maximize energy efficiency.
pub fn eem_step(
    q_prev: &Point3,
    nodes: &[NodeState],
    limits: &Limits,
    position: &Point3,
) -> Result<StepReport> {
    ee_report(q_prev, *position, nodes, limits)
}

/// One EEEM timestep: fly toward the node centroid at `h_min`, then allocate like EEM.
pub fn eeem_step(q_prev: &Point3, nodes: &[NodeState], limits: &Limits) -> Result<StepReport> {
    let c = nodes.iter().fold(Point3::zeros(), |a, n| a + n.position) / nodes.len().max(1) as f64;
    let target = Point3::new(c.x, c.y, limits.h_min);
    let ball = reachable_ball(q_prev, limits)?;
    let q = project_onto_ball_slab(&ball, limits.h_min, limits.h_max, &target).unwrap_or(*q_prev);
    ee_report(q_prev, q, nodes, limits)
}
