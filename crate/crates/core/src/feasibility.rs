//! The feasibility region of one timestep and its emptiness test.
//!
//! A FlyBS position is admissible when it lies inside every node's QoS ball,
//! inside the ball reachable under the speed and propulsion caps, outside the
//! inner ball implied by a minimum propulsion-efficient speed, inside the
//! altitude slab, and inside the ball that bounds where the total power budget
//! can still cover every QoS floor.
//!
//! Emptiness is decided by sweeping horizontal planes (the slab faces and the
//! top/bottom tangent planes of every ball) and testing the pairwise circle
//! intersection points on each plane, extended with the extreme points of each
//! disc, the lowest points of pairwise sphere circles and triple-sphere points.
//! Together these contain the lowest point of any nonempty intersection, so the
//! sweep never misses a nonempty convex part.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::channel::{qos_radius, NodeState};
use crate::geometry::{
    circle_circle_points, dedup_spheres, lowest_point_on_circle, sphere_plane_intersection,
    sphere_sphere_relation, triple_sphere_points, Circle3D, Sphere, SphereRelation, TOUCH_TOL,
};
use crate::propulsion::{speed_interval, PropulsionParams, SpeedInterval};
use crate::{Error, Point3, Result};

/// Default Taylor-anchor spacing for the power-budget bound.
pub const DEFAULT_SIGMA: f64 = 0.05;

/// Flight and power limits of one timestep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Limits {
    pub h_min: f64,
    pub h_max: f64,
    /// Maximum supported speed, m/s.
    pub v_max: f64,
    /// Propulsion power cap, W.
    pub p_prop_cap: f64,
    /// Total transmission power budget, W.
    pub p_max: f64,
    /// Timestep duration, s.
    pub dt: f64,
    #[serde(default)]
    pub propulsion: PropulsionParams,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            h_min: 100.0,
            h_max: 300.0,
            v_max: 25.0,
            p_prop_cap: 250.0,
            p_max: 1.0,
            dt: 1.0,
            propulsion: PropulsionParams::default(),
        }
    }
}

impl Limits {
    pub fn validate(&self) -> Result<()> {
        let ok = self.h_min > 0.0
            && self.h_max >= self.h_min
            && self.v_max > 0.0
            && self.p_prop_cap > 0.0
            && self.p_max > 0.0
            && self.dt > 0.0
            && self.h_max.is_finite()
            && self.p_max.is_finite()
            && self.dt.is_finite();
        if !ok {
            return Err(Error::Config(format!("invalid limits {self:?}")));
        }
        self.propulsion.validate()
    }

    pub fn speed_interval(&self) -> Result<SpeedInterval> {
        speed_interval(self.p_prop_cap, self.v_max, &self.propulsion)
    }

    /// Inner and outer radii of the reachable shell around the previous position.
    pub fn speed_radii(&self) -> Result<(f64, f64)> {
        let si = self.speed_interval()?;
        Ok((si.v_lo * self.dt, si.v_hi * self.dt))
    }

    pub fn in_slab(&self, q: &Point3) -> bool {
        q.z >= self.h_min - TOUCH_TOL && q.z <= self.h_max + TOUCH_TOL
    }
}

/// Quantities of the quadratic lower bound on the total floor power.
///
/// Each node's floor `c_i d_i^alpha` is bounded below by its tangent in `d_i^2`
/// at `mu_i`, a grid point spaced `sigma * h_min^2` apart. Summing the tangents
/// and completing the square gives `sum(iota) * |q - theta0|^2 + chi`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Quantities {
    pub iota: Vec<f64>,
    pub chi: f64,
    pub theta0: Point3,
    /// Radius of the budget ball; `None` when the budget is below `chi`.
    pub upsilon: Option<f64>,
    pub sigma: f64,
    pub kappa: Vec<u64>,
    pub mu: Vec<f64>,
}

impl Lemma1Quantities {
    pub fn iota_sum(&self) -> f64 {
        self.iota.iter().sum()
    }
}

/// Grid index and anchor `(kappa, mu)` of a squared distance `d2`.
pub(crate) fn taylor_anchor(d2: f64, h_min: f64, sigma: f64) -> (u64, f64) {
    let h2 = h_min * h_min;
    let k = ((d2 - h2) / (h2 * sigma)).floor().max(0.0);
    (k as u64, h2 * (1.0 + k * sigma))
}

/// Per-node power coefficient `c_i = (N_i + I)(2^(C_i/B_i) - 1) / Q_i`.
fn floor_coeff(n: &NodeState) -> f64 {
    n.channel.noise_plus_interference() * n.channel.snr_for_capacity(n.qos_min) / n.channel.gain
}

pub fn lemma1_quantities(
    anchor: &Point3,
    nodes: &[NodeState],
    h_min: f64,
    sigma: f64,
    p_max: f64,
) -> Lemma1Quantities {
    let mut iota = Vec::with_capacity(nodes.len());
    let mut kappa = Vec::with_capacity(nodes.len());
    let mut mu = Vec::with_capacity(nodes.len());
    let mut constant = 0.0;
    for n in nodes {
        let c = floor_coeff(n);
        let alpha = n.channel.pathloss_exp;
        let (k, m) = taylor_anchor((anchor - n.position).norm_squared(), h_min, sigma);
        let io = 0.5 * c * alpha * m.powf(alpha / 2.0 - 1.0);
        constant += c * m.powf(alpha / 2.0) - io * m;
        iota.push(io);
        kappa.push(k);
        mu.push(m);
    }
    let total: f64 = iota.iter().sum();
    let (theta0, chi, upsilon) = if total > 0.0 {
        let theta0 = nodes
            .iter()
            .zip(&iota)
            .fold(Point3::zeros(), |acc, (n, &w)| acc + n.position * w)
            / total;
        let spread: f64 = nodes
            .iter()
            .zip(&iota)
            .map(|(n, &w)| w * (n.position - theta0).norm_squared())
            .sum();
        let chi = constant + spread;
        let upsilon = (p_max >= chi).then(|| ((p_max - chi) / total).sqrt());
        (theta0, chi, upsilon)
    } else {
        (*anchor, constant, Some(f64::INFINITY))
    };
    Lemma1Quantities {
        iota,
        chi,
        theta0,
        upsilon,
        sigma,
        kappa,
        mu,
    }
}

/// Quadratic lower bound on the total floor power needed at `q`.
pub fn lemma1_power_lower_bound(q: &Point3, lq: &Lemma1Quantities) -> f64 {
    lq.iota_sum() * (q - lq.theta0).norm_squared() + lq.chi
}

/// Which constraint a ball encodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConstraintKind {
    Qos(usize),
    Speed,
    PowerBudget,
}

impl fmt::Display for ConstraintKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstraintKind::Qos(id) => write!(f, "QoS ball of node {id}"),
            ConstraintKind::Speed => write!(f, "speed ball"),
            ConstraintKind::PowerBudget => write!(f, "power-budget ball"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaggedSphere {
    pub sphere: Sphere,
    pub kind: ConstraintKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintRegion {
    pub q_prev: Point3,
    /// One ball per node; infinite radius when the node has no requirement.
    pub qos_spheres: Vec<Sphere>,
    pub node_ids: Vec<usize>,
    pub speed_outer: Sphere,
    pub speed_inner_radius: f64,
    pub lemma1: Lemma1Quantities,
    pub h_min: f64,
    pub h_max: f64,
    pub p_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum InfeasibleReason {
    /// The power budget is below the lower bound on the summed floors everywhere.
    PowerBudget {
        chi: f64,
        p_max: f64,
    },
    Disjoint(ConstraintKind, ConstraintKind),
    OutsideSlab(ConstraintKind),
    EmptySlab,
    NoAdmissibleSpeed,
    /// No candidate point satisfies every constraint (including the minimum-speed shell).
    NoCandidate,
}

impl fmt::Display for InfeasibleReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InfeasibleReason::PowerBudget { chi, p_max } => write!(
                f,
                "power budget {p_max} W below the floor-power lower bound {chi} W"
            ),
            InfeasibleReason::Disjoint(a, b) => write!(f, "{a} and {b} do not intersect"),
            InfeasibleReason::OutsideSlab(k) => write!(f, "{k} lies outside the altitude slab"),
            InfeasibleReason::EmptySlab => write!(f, "empty altitude range"),
            InfeasibleReason::NoAdmissibleSpeed => {
                write!(f, "propulsion cap admits no speed")
            }
            InfeasibleReason::NoCandidate => write!(f, "no point satisfies all constraints"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Feasible(Point3),
    Infeasible(InfeasibleReason),
}

impl Verdict {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Verdict::Feasible(_))
    }

    pub fn witness(&self) -> Option<Point3> {
        match self {
            Verdict::Feasible(p) => Some(*p),
            Verdict::Infeasible(_) => None,
        }
    }
}

pub fn build_region(
    q_prev: &Point3,
    nodes: &[NodeState],
    p: &[f64],
    limits: &Limits,
    sigma: f64,
) -> Result<ConstraintRegion> {
    if p.len() != nodes.len() {
        return Err(Error::Contract(format!(
            "power vector has {} entries for {} nodes",
            p.len(),
            nodes.len()
        )));
    }
    let (inner, outer) = limits.speed_radii()?;
    Ok(ConstraintRegion {
        q_prev: *q_prev,
        qos_spheres: nodes
            .iter()
            .zip(p)
            .map(|(n, &pi)| Sphere::new(n.position, qos_radius(n, pi)))
            .collect(),
        node_ids: nodes.iter().map(|n| n.id).collect(),
        speed_outer: Sphere::new(*q_prev, outer),
        speed_inner_radius: inner,
        lemma1: lemma1_quantities(q_prev, nodes, limits.h_min, sigma, limits.p_max),
        h_min: limits.h_min,
        h_max: limits.h_max,
        p_max: limits.p_max,
    })
}

impl ConstraintRegion {
    /// The power-budget ball, `None` when it is unbounded or empty.
    pub fn lemma1_sphere(&self) -> Option<Sphere> {
        match self.lemma1.upsilon {
            Some(r) if r.is_finite() => Some(Sphere::new(self.lemma1.theta0, r)),
            _ => None,
        }
    }

    /// Every bounded ball of the region, tagged.
    pub fn spheres(&self) -> Vec<TaggedSphere> {
        let mut out: Vec<TaggedSphere> = self
            .qos_spheres
            .iter()
            .zip(&self.node_ids)
            .filter(|(s, _)| s.is_bounded())
            .map(|(s, &id)| TaggedSphere {
                sphere: *s,
                kind: ConstraintKind::Qos(id),
            })
            .collect();
        if self.speed_outer.is_bounded() {
            out.push(TaggedSphere {
                sphere: self.speed_outer,
                kind: ConstraintKind::Speed,
            });
        }
        if let Some(s) = self.lemma1_sphere() {
            out.push(TaggedSphere {
                sphere: s,
                kind: ConstraintKind::PowerBudget,
            });
        }
        out
    }

    pub fn in_slab(&self, q: &Point3) -> bool {
        q.z >= self.h_min - TOUCH_TOL && q.z <= self.h_max + TOUCH_TOL
    }

    pub fn meets_inner_speed(&self, q: &Point3) -> bool {
        (q - self.q_prev).norm() >= self.speed_inner_radius - TOUCH_TOL
    }

    /// Exact membership test against every constraint.
    pub fn contains(&self, q: &Point3) -> bool {
        self.lemma1.upsilon.is_some()
            && self.in_slab(q)
            && self.meets_inner_speed(q)
            && self
                .qos_spheres
                .iter()
                .chain(std::iter::once(&self.speed_outer))
                .all(|s| !s.is_bounded() || s.contains(q))
            && self.lemma1_sphere().is_none_or(|s| s.contains(q))
    }

    /// Deduplicated balls with every ball that contains another one dropped.
    ///
    /// Fails early when two balls are disjoint or a ball misses the slab.
    pub fn reduced_spheres(&self) -> std::result::Result<Vec<TaggedSphere>, InfeasibleReason> {
        if self.lemma1.upsilon.is_none() {
            return Err(InfeasibleReason::PowerBudget {
                chi: self.lemma1.chi,
                p_max: self.p_max,
            });
        }
        if self.h_min > self.h_max + TOUCH_TOL {
            return Err(InfeasibleReason::EmptySlab);
        }
        let all = self.spheres();
        let unique = dedup_spheres(&all.iter().map(|t| t.sphere).collect::<Vec<_>>());
        let tagged: Vec<TaggedSphere> = unique
            .iter()
            .map(|s| {
                *all.iter()
                    .find(|t| t.sphere == *s)
                    .expect("dedup keeps originals")
            })
            .collect();
        for t in &tagged {
            let s = &t.sphere;
            if s.center.z - s.radius > self.h_max + TOUCH_TOL
                || s.center.z + s.radius < self.h_min - TOUCH_TOL
            {
                return Err(InfeasibleReason::OutsideSlab(t.kind));
            }
        }
        let mut redundant = vec![false; tagged.len()];
        for i in 0..tagged.len() {
            for j in i + 1..tagged.len() {
                let (a, b) = (&tagged[i].sphere, &tagged[j].sphere);
                match sphere_sphere_relation(a, b) {
                    SphereRelation::Disjoint => {
                        return Err(InfeasibleReason::Disjoint(tagged[i].kind, tagged[j].kind));
                    }
                    SphereRelation::AInsideB => redundant[j] = true,
                    SphereRelation::BInsideA => redundant[i] = true,
                    SphereRelation::Intersect(_) => {
                        // an internally tangent pair is nested as well
                        if b.contains_ball(a) {
                            redundant[j] = true;
                        } else if a.contains_ball(b) {
                            redundant[i] = true;
                        }
                    }
                }
            }
        }
        Ok(tagged
            .into_iter()
            .zip(redundant)
            .filter(|(_, r)| !r)
            .map(|(t, _)| t)
            .collect())
    }
}

/// Membership in the reduced description (equivalent to [`ConstraintRegion::contains`]).
struct Reduced<'a> {
    region: &'a ConstraintRegion,
    spheres: Vec<Sphere>,
}

impl Reduced<'_> {
    fn contains(&self, q: &Point3) -> bool {
        self.region.in_slab(q)
            && self.region.meets_inner_speed(q)
            && self.spheres.iter().all(|s| s.contains(q))
    }
}

/// Decides whether the region is empty, returning a witness point when it is not.
pub fn is_feasible(region: &ConstraintRegion) -> Verdict {
    let spheres = match region.reduced_spheres() {
        Ok(s) => s,
        Err(reason) => return Verdict::Infeasible(reason),
    };
    let reduced = Reduced {
        region,
        spheres: spheres.iter().map(|t| t.sphere).collect(),
    };
    match find_witness(&reduced) {
        Some(p) => Verdict::Feasible(p),
        None => Verdict::Infeasible(InfeasibleReason::NoCandidate),
    }
}

fn clamp_z(p: &Point3, lo: f64, hi: f64) -> Point3 {
    Point3::new(p.x, p.y, p.z.clamp(lo, hi))
}

fn find_witness(reduced: &Reduced<'_>) -> Option<Point3> {
    let region = reduced.region;
    let spheres = &reduced.spheres;
    let (lo, hi) = (region.h_min, region.h_max);

    // cheap guesses first
    let q0 = clamp_z(&region.q_prev, lo, hi);
    if reduced.contains(&q0) {
        return Some(q0);
    }
    if spheres.is_empty() {
        // only the slab and the inner shell remain
        let r = region.speed_inner_radius;
        let p = q0 + Point3::x() * r;
        return reduced.contains(&p).then_some(p);
    }
    for s in spheres {
        let c = clamp_z(&s.center, lo, hi);
        if reduced.contains(&c) {
            return Some(c);
        }
    }

    // plane sweep: slab faces, then every tangent plane inside the slab
    let mut planes = vec![lo, hi];
    for s in spheres {
        for z in [s.center.z - s.radius, s.center.z + s.radius] {
            if z > lo && z < hi {
                planes.push(z);
            }
        }
    }
    let mut seen: Vec<f64> = Vec::with_capacity(planes.len());
    for z0 in planes {
        if seen.iter().any(|z| (z - z0).abs() <= TOUCH_TOL) {
            continue;
        }
        seen.push(z0);
        if let Some(p) = search_plane(reduced, z0) {
            return Some(p);
        }
    }

    // lowest points of pairwise circles and triple points
    for i in 0..spheres.len() {
        for j in i + 1..spheres.len() {
            if let SphereRelation::Intersect(c) = sphere_sphere_relation(&spheres[i], &spheres[j]) {
                let p = lowest_point_on_circle(&c);
                if reduced.contains(&p) {
                    return Some(p);
                }
            }
        }
    }
    for i in 0..spheres.len() {
        for j in i + 1..spheres.len() {
            for k in j + 1..spheres.len() {
                for p in triple_sphere_points(&spheres[i], &spheres[j], &spheres[k]) {
                    if reduced.contains(&p) {
                        return Some(p);
                    }
                }
            }
        }
    }
    None
}

/// Searches one horizontal plane for a point inside every disc.
fn search_plane(reduced: &Reduced<'_>, z0: f64) -> Option<Point3> {
    let region = reduced.region;
    let mut circles: Vec<Circle3D> = Vec::with_capacity(reduced.spheres.len());
    for s in &reduced.spheres {
        circles.push(sphere_plane_intersection(s, z0)?);
    }
    let on_plane_ok = |p: &Point3| {
        circles.iter().all(|c| c.disc_contains_xy(p))
            && region.meets_inner_speed(p)
            && reduced.contains(p)
    };
    let prev = Point3::new(region.q_prev.x, region.q_prev.y, z0);
    for c in &circles {
        // the min-x point of some disc or a pairwise crossing is the min-x
        // point of any nonempty disc intersection
        let mut extremes = [c.center, c.center - Point3::x() * c.radius, c.center];
        let away = c.center - prev;
        if away.norm() > 0.0 {
            extremes[2] = c.center + away.normalize() * c.radius;
        }
        if let Some(p) = extremes.iter().find(|p| on_plane_ok(p)) {
            return Some(*p);
        }
    }
    for i in 0..circles.len() {
        for j in i + 1..circles.len() {
            let pts = circle_circle_points(&circles[i], &circles[j]).ok()?;
            if let Some(p) = pts.iter().find(|p| on_plane_ok(p)) {
                return Some(*p);
            }
        }
    }
    None
}
