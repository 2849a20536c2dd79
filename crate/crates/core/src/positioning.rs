//! Radial surrogate of the sum capacity and the repositioning rule built on it.
//!
//! Around an anchor position the sum capacity is approximated by
//! `W - zeta * |q - S0|^2`, so the best admissible move is the point of the
//! feasibility region closest to `S0`.

use std::cmp::Ordering;
use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::channel::NodeState;
use crate::feasibility::{is_feasible, taylor_anchor, ConstraintRegion, Verdict};
use crate::geometry::{
    circle_circle_points, closest_point_on_circle, closest_point_on_sphere,
    sphere_plane_intersection, sphere_sphere_relation, triple_sphere_points, Sphere,
    SphereRelation,
};
use crate::{Error, Point3, Result};

/// Default linearization spacing of the received SNR.
pub const DEFAULT_XI: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialApprox {
    pub s0: Point3,
    pub zeta: f64,
    pub w: f64,
    pub phi: Vec<f64>,
    pub s_approx: Vec<u64>,
    pub xi: f64,
    pub kappa: Vec<u64>,
    pub mu: Vec<f64>,
    /// No node has power, so the surrogate is flat and `s0` is the anchor.
    pub degenerate: bool,
}

impl RadialApprox {
    pub fn value(&self, q: &Point3) -> f64 {
        self.w - self.zeta * (q - self.s0).norm_squared()
    }
}

/// Builds the surrogate at `q_anchor` for power vector `p`.
///
/// Each capacity is linearized in the SNR at the grid point `s_i * xi` below
/// the anchor SNR, and the resulting `d^-alpha` term is replaced by its
/// tangent in `d^2` at the grid anchor `mu_i`.
pub fn build_radial_approx(
    q_anchor: &Point3,
    nodes: &[NodeState],
    p: &[f64],
    h_min: f64,
    sigma: f64,
    xi: f64,
) -> Result<RadialApprox> {
    if p.len() != nodes.len() {
        return Err(Error::Contract(format!(
            "power vector has {} entries for {} nodes",
            p.len(),
            nodes.len()
        )));
    }
    if !(sigma > 0.0 && xi > 0.0) {
        return Err(Error::Domain(format!(
            "sigma and xi must be positive, got {sigma}, {xi}"
        )));
    }
    let n = nodes.len();
    let (mut phi, mut s_approx, mut kappa, mut mu) = (
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
    );
    let mut constant = 0.0;
    for (node, &pi) in nodes.iter().zip(p) {
        if pi < 0.0 {
            return Err(Error::Domain(format!(
                "negative power for node {}",
                node.id
            )));
        }
        let d2 = (q_anchor - node.position).norm_squared();
        if !(d2 > 0.0) {
            return Err(Error::Domain(format!(
                "FlyBS coincides with node {}",
                node.id
            )));
        }
        let ch = &node.channel;
        let alpha = ch.pathloss_exp;
        let snr = pi * ch.link_gain(d2.sqrt());
        let s = (snr / sigma).floor();
        let x0 = s * xi;
        let k_i = ch.bandwidth * pi * ch.gain / ((1.0 + x0) * ch.noise_plus_interference() * LN_2);
        let (kap, m) = taylor_anchor(d2, h_min, sigma);
        let ph = k_i * alpha / 2.0 * m.powf(-alpha / 2.0 - 1.0);
        constant += ch.bandwidth / LN_2 * (x0.ln_1p() - x0 / (1.0 + x0))
            + k_i * m.powf(-alpha / 2.0)
            + ph * m;
        phi.push(ph);
        s_approx.push(s as u64);
        kappa.push(kap);
        mu.push(m);
    }
    let zeta: f64 = phi.iter().sum();
    let degenerate = !(zeta > 0.0);
    let s0 = if degenerate {
        *q_anchor
    } else {
        nodes
            .iter()
            .zip(&phi)
            .fold(Point3::zeros(), |acc, (n, &w)| acc + n.position * w)
            / zeta
    };
    let spread: f64 = nodes
        .iter()
        .zip(&phi)
        .map(|(n, &w)| w * (n.position - s0).norm_squared())
        .sum();
    Ok(RadialApprox {
        s0,
        zeta,
        w: constant - spread,
        phi,
        s_approx,
        xi,
        kappa,
        mu,
        degenerate,
    })
}

fn by_distance_then_position(target: &Point3) -> impl Fn(&Point3, &Point3) -> Ordering + '_ {
    move |a, b| {
        (a - target)
            .norm()
            .total_cmp(&(b - target).norm())
            .then(a.z.total_cmp(&b.z))
            .then(a.x.total_cmp(&b.x))
            .then(a.y.total_cmp(&b.y))
    }
}

/// Closest point of the region to `target` among the boundary candidates.
///
/// Candidates are `target` itself, its projections onto every ball, onto the
/// slab faces, onto the circles where balls meet each other or a slab face, the
/// points where a slab face meets two balls, triple-ball points and the
/// projection onto the inner speed shell. Ties resolve to the lowest, then
/// smallest `(x, y)` point. `None` when no candidate is admissible.
pub fn closest_feasible_point(target: &Point3, region: &ConstraintRegion) -> Option<Point3> {
    if region.contains(target) {
        return Some(*target);
    }
    let spheres: Vec<Sphere> = region
        .reduced_spheres()
        .ok()?
        .iter()
        .map(|t| t.sphere)
        .collect();
    let planes = [region.h_min, region.h_max];
    let mut best: Option<Point3> = None;
    let order = by_distance_then_position(target);
    let mut offer = |p: Point3| {
        if p.iter().all(|v| v.is_finite())
            && best.is_none_or(|b| order(&p, &b) == Ordering::Less)
            && region.contains(&p)
        {
            best = Some(p);
        }
    };

    offer(Point3::new(
        target.x,
        target.y,
        target.z.clamp(region.h_min, region.h_max),
    ));
    let away = target - region.q_prev;
    if region.speed_inner_radius > 0.0 {
        let dir = if away.norm() > 0.0 {
            away.normalize()
        } else {
            Point3::x()
        };
        offer(region.q_prev + dir * region.speed_inner_radius);
    }
    for s in &spheres {
        offer(closest_point_on_sphere(s, target));
    }
    for &z0 in &planes {
        let circles: Vec<_> = spheres
            .iter()
            .filter_map(|s| sphere_plane_intersection(s, z0))
            .collect();
        for c in &circles {
            offer(closest_point_on_circle(c, target));
        }
        for i in 0..circles.len() {
            for j in i + 1..circles.len() {
                if let Ok(pts) = circle_circle_points(&circles[i], &circles[j]) {
                    pts.into_iter().for_each(&mut offer);
                }
            }
        }
    }
    for i in 0..spheres.len() {
        for j in i + 1..spheres.len() {
            if let SphereRelation::Intersect(c) = sphere_sphere_relation(&spheres[i], &spheres[j]) {
                offer(closest_point_on_circle(&c, target));
            }
            for k in j + 1..spheres.len() {
                triple_sphere_points(&spheres[i], &spheres[j], &spheres[k])
                    .into_iter()
                    .for_each(&mut offer);
            }
        }
    }
    best
}

/// Moves toward the surrogate maximizer `S0`, staying inside the region.
///
/// Falls back to the feasibility witness (with a warning) if no candidate is
/// admissible; fails only when the region is empty.
pub fn position_update(approx: &RadialApprox, region: &ConstraintRegion) -> Result<Point3> {
    if let Some(q) = closest_feasible_point(&approx.s0, region) {
        return Ok(q);
    }
    match is_feasible(region) {
        Verdict::Feasible(w) => {
            log::warn!(
                "no admissible candidate near S0 {:?}, using feasibility witness",
                approx.s0
            );
            Ok(w)
        }
        Verdict::Infeasible(reason) => Err(Error::Contract(format!(
            "position update on an infeasible region: {reason}"
        ))),
    }
}
