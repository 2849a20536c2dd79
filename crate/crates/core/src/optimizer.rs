//! One timestep of the alternating power/position optimization.

use serde::{Deserialize, Serialize};

use crate::channel::{node_capacities, NodeState};
use crate::feasibility::{build_region, is_feasible, Limits, Verdict, DEFAULT_SIGMA};
use crate::positioning::{build_radial_approx, position_update, DEFAULT_XI};
use crate::power_alloc::{allocate, priority_floors, AllocationProblem};
use crate::propulsion::propulsion_power;
use crate::{Error, Point3, Result};

/// Relative tolerance of the direct constraint recheck.
pub const CHECK_TOL: f64 = 1e-6;

/// Relative drop in sum capacity the monotonicity guard tolerates.
const GUARD_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    /// Displacement below which the alternation stops, m.
    pub epsilon: f64,
    pub max_iters: u32,
    pub sigma: f64,
    pub xi: f64,
    pub monotonicity_guard: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            epsilon: 0.1,
            max_iters: 10,
            sigma: DEFAULT_SIGMA,
            xi: DEFAULT_XI,
            monotonicity_guard: true,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.max_iters >= 1 && self.sigma > 0.0 && self.xi > 0.0) {
            return Err(Error::Config(format!(
                "invalid optimizer settings {self:?}"
            )));
        }
        Ok(())
    }
}

/// Margins of every constraint at a reported state; negative means violated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSlacks {
    /// Smallest `(C_i - C_i^min) / C_i^min` over nodes with a requirement.
    pub qos: f64,
    /// `v_hi - v`, m/s.
    pub speed_upper: f64,
    /// `v - v_lo`, m/s.
    pub speed_lower: f64,
    /// Distance to the nearer altitude bound, m.
    pub altitude: f64,
    /// Unused transmission power, W.
    pub power: f64,
    /// Propulsion cap minus propulsion power, W.
    pub propulsion: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub k: u64,
    pub position: Point3,
    pub power: Vec<f64>,
    pub capacities: Vec<f64>,
    pub sum_capacity: f64,
    pub iterations: u32,
    pub feasible: bool,
    pub infeasible_reason: Option<String>,
    /// Speed flown from the previous position, m/s.
    pub speed: f64,
    pub propulsion_power: f64,
    pub slacks: ConstraintSlacks,
    /// Sum capacity after each accepted inner iteration (the first entry is
    /// after iteration 1).
    pub trace: Vec<f64>,
}

impl StepReport {
    pub fn min_capacity(&self) -> f64 {
        self.capacities
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn power_sum(&self) -> f64 {
        self.power.iter().sum()
    }
}

/// Evaluates every constraint directly at `(q, p)` reached from `q_prev`.
pub fn constraint_slacks(
    q_prev: &Point3,
    q: &Point3,
    p: &[f64],
    capacities: &[f64],
    nodes: &[NodeState],
    limits: &Limits,
) -> ConstraintSlacks {
    let qos = nodes
        .iter()
        .zip(capacities)
        .filter(|(n, _)| n.qos_min > 0.0)
        .map(|(n, c)| (c - n.qos_min) / n.qos_min)
        .fold(f64::INFINITY, f64::min);
    let v = (q - q_prev).norm() / limits.dt;
    let (v_lo, v_hi) = match limits.speed_interval() {
        Ok(si) => (si.v_lo, si.v_hi),
        Err(_) => (f64::INFINITY, f64::NEG_INFINITY),
    };
    ConstraintSlacks {
        qos,
        speed_upper: v_hi - v,
        speed_lower: v - v_lo,
        altitude: (q.z - limits.h_min).min(limits.h_max - q.z),
        power: limits.p_max - p.iter().sum::<f64>(),
        propulsion: limits.p_prop_cap - propulsion_power(v, &limits.propulsion),
    }
}

impl ConstraintSlacks {
    /// All constraints hold within [`CHECK_TOL`] relative.
    pub fn satisfied(&self, limits: &Limits) -> bool {
        let scale = |x: f64| CHECK_TOL * x.abs().max(1.0);
        self.qos >= -CHECK_TOL
            && self.speed_upper >= -scale(limits.v_max)
            && self.speed_lower >= -scale(limits.v_max)
            && self.altitude >= -scale(limits.h_max)
            && self.power >= -scale(limits.p_max)
            && (self.propulsion >= -scale(limits.p_prop_cap) || limits.p_prop_cap.is_infinite())
    }
}

/// Assembles a report, marking it feasible only if every constraint rechecks.
#[allow(clippy::too_many_arguments)]
pub fn build_report(
    q_prev: &Point3,
    q: Point3,
    p: Vec<f64>,
    nodes: &[NodeState],
    limits: &Limits,
    iterations: u32,
    trace: Vec<f64>,
    reason: Option<String>,
) -> Result<StepReport> {
    let capacities = node_capacities(&q, nodes, &p)?;
    let slacks = constraint_slacks(q_prev, &q, &p, &capacities, nodes, limits);
    let speed = (q - q_prev).norm() / limits.dt;
    let ok = slacks.satisfied(limits);
    let reason = match (ok, reason) {
        (true, r) => r,
        (false, Some(r)) => Some(r),
        (false, None) => Some("constraint recheck failed".to_string()),
    };
    Ok(StepReport {
        k: 0,
        position: q,
        sum_capacity: capacities.iter().sum(),
        capacities,
        power: p,
        iterations,
        feasible: ok && reason.is_none(),
        infeasible_reason: reason,
        speed,
        propulsion_power: propulsion_power(speed, &limits.propulsion),
        slacks,
        trace,
    })
}

fn clamp_z(q: &Point3, limits: &Limits) -> Point3 {
    Point3::new(q.x, q.y, q.z.clamp(limits.h_min, limits.h_max))
}

fn allocate_at(q: &Point3, nodes: &[NodeState], p_max: f64) -> Option<(Vec<f64>, f64)> {
    let prob = AllocationProblem::at(q, nodes, p_max).ok()?;
    let p = allocate(&prob).ok()?;
    let c = crate::channel::sum_capacity(q, nodes, &p).ok()?;
    Some((p, c))
}

/// Runs the alternation for one timestep starting from `(q_prev, p_prev)`.
pub fn step(
    q_prev: &Point3,
    p_prev: &[f64],
    nodes: &[NodeState],
    cfg: &OptimizerConfig,
    limits: &Limits,
) -> Result<StepReport> {
    if p_prev.len() != nodes.len() {
        return Err(Error::Contract(format!(
            "power vector has {} entries for {} nodes",
            p_prev.len(),
            nodes.len()
        )));
    }
    let (inner, _) = match limits.speed_radii() {
        Ok(r) => r,
        Err(e @ Error::NoAdmissibleSpeed { .. }) => {
            let p = vec![limits.p_max / nodes.len().max(1) as f64; nodes.len()];
            return build_report(
                q_prev,
                *q_prev,
                p,
                nodes,
                limits,
                0,
                Vec::new(),
                Some(e.to_string()),
            );
        }
        Err(e) => return Err(e),
    };

    let stay_q = clamp_z(q_prev, limits);
    let stay = if inner <= 0.0 && (stay_q - q_prev).norm() <= 0.0 {
        allocate_at(&stay_q, nodes, limits.p_max)
    } else {
        None
    };

    // pick the first power vector whose region is nonempty
    let mut seeds: Vec<Vec<f64>> = vec![p_prev.to_vec()];
    if let Some((p, _)) = &stay {
        seeds.push(p.clone());
    } else if let Some((p, _)) = allocate_at(&stay_q, nodes, limits.p_max) {
        seeds.push(p);
    }
    let mut start = None;
    let mut last_reason = None;
    for p in seeds {
        let region = build_region(q_prev, nodes, &p, limits, cfg.sigma)?;
        match is_feasible(&region) {
            Verdict::Feasible(_) => {
                start = Some(p);
                break;
            }
            Verdict::Infeasible(r) => last_reason = Some(r),
        }
    }

    let Some(mut p) = start else {
        if let Some((p, _)) = stay {
            return build_report(q_prev, stay_q, p, nodes, limits, 0, Vec::new(), None);
        }
        let reason = last_reason.map(|r| r.to_string());
        return hold(q_prev, nodes, cfg, limits, reason);
    };

    let mut q = *q_prev;
    let mut best: Option<(Point3, Vec<f64>, f64)> = stay.map(|(p, c)| (stay_q, p, c));
    let mut trace = Vec::new();
    let mut iterations = 0;
    for _ in 0..cfg.max_iters {
        iterations += 1;
        let region = build_region(q_prev, nodes, &p, limits, cfg.sigma)?;
        if !is_feasible(&region).is_feasible() {
            break;
        }
        let approx = build_radial_approx(&q, nodes, &p, limits.h_min, cfg.sigma, cfg.xi)?;
        let q_new = position_update(&approx, &region)?;
        let Some((p_new, c_new)) = allocate_at(&q_new, nodes, limits.p_max) else {
            break;
        };
        if cfg.monotonicity_guard {
            if let Some((_, _, c_best)) = &best {
                if c_new < c_best * (1.0 - GUARD_TOL) {
                    break;
                }
            }
        }
        let moved = (q_new - q).norm();
        q = q_new;
        p = p_new.clone();
        best = Some((q_new, p_new, c_new));
        trace.push(c_new);
        if moved < cfg.epsilon {
            break;
        }
    }
    match best {
        Some((q, p, _)) => build_report(q_prev, q, p, nodes, limits, iterations, trace, None),
        None => hold(
            q_prev,
            nodes,
            cfg,
            limits,
            Some("no admissible position found".into()),
        ),
    }
}

/// Fallback for an empty region: drift toward the power-bound centroid within
/// the speed shell and serve the largest floors first.
fn hold(
    q_prev: &Point3,
    nodes: &[NodeState],
    cfg: &OptimizerConfig,
    limits: &Limits,
    reason: Option<String>,
) -> Result<StepReport> {
    let (inner, outer) = limits.speed_radii()?;
    let lq =
        crate::feasibility::lemma1_quantities(q_prev, nodes, limits.h_min, cfg.sigma, limits.p_max);
    let target = clamp_z(&lq.theta0, limits);
    let delta = target - q_prev;
    let dist = delta.norm();
    let dir = if dist > 0.0 {
        delta / dist
    } else {
        Point3::x()
    };
    let q = q_prev + dir * dist.clamp(inner, outer);
    let p = match AllocationProblem::at(&q, nodes, limits.p_max) {
        Ok(prob) => match allocate(&prob) {
            Ok(p) => p,
            Err(_) => priority_floors(&prob.floor, limits.p_max),
        },
        Err(_) => vec![limits.p_max / nodes.len().max(1) as f64; nodes.len()],
    };
    let report = build_report(q_prev, q, p, nodes, limits, 0, Vec::new(), reason.clone())?;
    if report.slacks.satisfied(limits) {
        // the held point happens to meet every constraint
        return Ok(StepReport {
            feasible: true,
            infeasible_reason: None,
            ..report
        });
    }
    Ok(report)
}

/// Limits with the speed and propulsion caps lifted, for the pre-mission placement.
pub fn unconstrained_limits(limits: &Limits) -> Limits {
    Limits {
        dt: 1e4,
        p_prop_cap: f64::INFINITY,
        ..*limits
    }
}

/// Initial placement: node centroid at `h_min` with an equal power split,
/// followed by one optimization pass without speed limits.
pub fn initial_state(
    nodes: &[NodeState],
    cfg: &OptimizerConfig,
    limits: &Limits,
) -> Result<StepReport> {
    if nodes.is_empty() {
        return Err(Error::Contract("at least one node is required".into()));
    }
    let c = nodes.iter().fold(Point3::zeros(), |a, n| a + n.position) / nodes.len() as f64;
    let q0 = Point3::new(c.x, c.y, limits.h_min);
    let p0 = vec![limits.p_max / nodes.len() as f64; nodes.len()];
    step(&q0, &p0, nodes, cfg, &unconstrained_limits(limits))
}
