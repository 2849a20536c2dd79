//! Ground-node motion: random walkers and clustered crowds whose centers follow
//! random-waypoint paths, inside a rectangular arena with reflecting edges.

use rand::{Rng, RngExt};
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::channel::NodeState;
use crate::{Error, Point3, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Arena {
    pub width: f64,
    pub height: f64,
}

impl Default for Arena {
    fn default() -> Self {
        Arena {
            width: 600.0,
            height: 600.0,
        }
    }
}

impl Arena {
    pub fn contains(&self, p: &Point3) -> bool {
        (0.0..=self.width).contains(&p.x) && (0.0..=self.height).contains(&p.y)
    }

    pub fn center(&self) -> Point3 {
        Point3::new(self.width / 2.0, self.height / 2.0, 0.0)
    }

    fn uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Point3 {
        Point3::new(
            rng.random_range(0.0..=self.width),
            rng.random_range(0.0..=self.height),
            0.0,
        )
    }

    fn clamp(&self, p: Point3) -> Point3 {
        Point3::new(p.x.clamp(0.0, self.width), p.y.clamp(0.0, self.height), p.z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MobilityModel {
    /// Fresh uniform heading every step at a fixed speed, m/s.
    RandomWalk { speed: f64 },
    /// Member of a crowd; speed drawn uniformly from `speed_range` each step.
    Cluster {
        cluster: usize,
        speed_range: (f64, f64),
    },
}

/// A crowd center moving between uniformly drawn waypoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterCenter {
    pub position: Point3,
    pub waypoint: Point3,
    pub speed: f64,
}

/// Scenario layout: how many crowds and how fast they and their members move.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MobilitySpec {
    /// Share of nodes doing a random walk; the rest join crowds.
    pub random_walk_fraction: f64,
    pub random_walk_speed: f64,
    /// One entry per crowd: center speed and member speed range.
    pub clusters: Vec<ClusterSpec>,
    /// Standard deviation of the initial member offset from its center, m.
    pub cluster_spread: f64,
    pub node_altitude: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterSpec {
    pub center_speed: f64,
    pub member_speed: (f64, f64),
}

impl Default for MobilitySpec {
    fn default() -> Self {
        let slow = ClusterSpec {
            center_speed: 1.0,
            member_speed: (0.6, 1.4),
        };
        let fast = ClusterSpec {
            center_speed: 1.6,
            member_speed: (1.2, 2.0),
        };
        MobilitySpec {
            random_walk_fraction: 0.5,
            random_walk_speed: 1.0,
            clusters: vec![slow, slow, slow, fast, fast, fast],
            cluster_spread: 20.0,
            node_altitude: 0.0,
        }
    }
}

impl MobilitySpec {
    pub fn validate(&self) -> Result<()> {
        let speeds_ok = self.random_walk_speed >= 0.0
            && self.clusters.iter().all(|c| {
                c.center_speed >= 0.0
                    && c.member_speed.0 >= 0.0
                    && c.member_speed.1 >= c.member_speed.0
            });
        if !(speeds_ok
            && (0.0..=1.0).contains(&self.random_walk_fraction)
            && self.cluster_spread >= 0.0
            && self.node_altitude.is_finite())
        {
            return Err(Error::Config(format!("invalid mobility spec {self:?}")));
        }
        if self.random_walk_fraction < 1.0 && self.clusters.is_empty() {
            return Err(Error::Config(
                "crowd members need at least one cluster".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mobility {
    pub arena: Arena,
    pub models: Vec<MobilityModel>,
    pub centers: Vec<ClusterCenter>,
    /// Speed each node moved at during the last advance.
    pub last_speeds: Vec<f64>,
}

impl Mobility {
    /// Places `n` nodes and assigns their motion models.
    ///
    /// The first `round(n * random_walk_fraction)` nodes walk; the others are
    /// dealt round-robin to the crowds.
    pub fn scenario<R: Rng + ?Sized>(
        n: usize,
        spec: &MobilitySpec,
        arena: Arena,
        rng: &mut R,
    ) -> Result<(Mobility, Vec<Point3>)> {
        spec.validate()?;
        let walkers = (n as f64 * spec.random_walk_fraction).round() as usize;
        let centers: Vec<ClusterCenter> = spec
            .clusters
            .iter()
            .map(|c| ClusterCenter {
                position: arena.uniform(rng),
                waypoint: arena.uniform(rng),
                speed: c.center_speed,
            })
            .collect();
        let spread =
            Normal::new(0.0, spec.cluster_spread).map_err(|e| Error::Config(e.to_string()))?;
        let mut models = Vec::with_capacity(n);
        let mut positions = Vec::with_capacity(n);
        for i in 0..n {
            let p = if i < walkers {
                models.push(MobilityModel::RandomWalk {
                    speed: spec.random_walk_speed,
                });
                arena.uniform(rng)
            } else {
                let c = (i - walkers) % centers.len();
                models.push(MobilityModel::Cluster {
                    cluster: c,
                    speed_range: spec.clusters[c].member_speed,
                });
                let off = Point3::new(spread.sample(rng), spread.sample(rng), 0.0);
                arena.clamp(centers[c].position + off)
            };
            positions.push(Point3::new(p.x, p.y, spec.node_altitude));
        }
        Ok((
            Mobility {
                arena,
                models,
                centers,
                last_speeds: vec![0.0; n],
            },
            positions,
        ))
    }

    /// Moves every node (and every crowd center) by one timestep of `dt` seconds.
    pub fn advance<R: Rng + ?Sized>(
        &mut self,
        nodes: &mut [NodeState],
        dt: f64,
        rng: &mut R,
    ) -> Result<()> {
        if !(dt > 0.0) {
            return Err(Error::Domain(format!(
                "timestep must be positive, got {dt}"
            )));
        }
        if nodes.len() != self.models.len() {
            return Err(Error::Contract(format!(
                "{} nodes for {} mobility models",
                nodes.len(),
                self.models.len()
            )));
        }
        let arena = self.arena;
        let center_velocity: Vec<Point3> = self
            .centers
            .iter_mut()
            .map(|c| move_center(c, &arena, dt, rng))
            .collect();
        for (i, node) in nodes.iter_mut().enumerate() {
            let (velocity, speed) = match self.models[i] {
                MobilityModel::RandomWalk { speed } => (heading(rng) * speed, speed),
                MobilityModel::Cluster {
                    cluster,
                    speed_range,
                } => {
                    let s = if speed_range.1 > speed_range.0 {
                        rng.random_range(speed_range.0..=speed_range.1)
                    } else {
                        speed_range.0
                    };
                    (member_velocity(&center_velocity[cluster], s, rng), s)
                }
            };
            node.position = reflect_move(&node.position, velocity, dt, &arena);
            self.last_speeds[i] = speed;
        }
        Ok(())
    }
}

fn heading<R: Rng + ?Sized>(rng: &mut R) -> Point3 {
    let a = rng.random_range(0.0..std::f64::consts::TAU);
    Point3::new(a.cos(), a.sin(), 0.0)
}

/// Velocity `c + m u` of speed `s` with a random heading `u`.
fn member_velocity<R: Rng + ?Sized>(c: &Point3, s: f64, rng: &mut R) -> Point3 {
    let c2 = c.norm_squared();
    for _ in 0..1000 {
        let u = heading(rng);
        let cu = c.dot(&u);
        let disc = cu * cu - c2 + s * s;
        if disc >= 0.0 {
            let m = -cu + disc.sqrt();
            return c + u * m;
        }
    }
    // straight against the center velocity always works
    let u = -c.normalize();
    c + u * (c2.sqrt() + s)
}

/// Moves `p` by `v dt`, flipping any velocity component that would leave the arena.
fn reflect_move(p: &Point3, mut v: Point3, dt: f64, arena: &Arena) -> Point3 {
    let next = p + v * dt;
    if !(0.0..=arena.width).contains(&next.x) {
        v.x = -v.x;
    }
    if !(0.0..=arena.height).contains(&next.y) {
        v.y = -v.y;
    }
    arena.clamp(p + v * dt)
}

fn move_center<R: Rng + ?Sized>(
    c: &mut ClusterCenter,
    arena: &Arena,
    dt: f64,
    rng: &mut R,
) -> Point3 {
    let step = c.speed * dt;
    if step <= 0.0 {
        return Point3::zeros();
    }
    let mut tries = 0;
    while (c.waypoint - c.position).norm() <= step && tries < 1000 {
        c.waypoint = arena.uniform(rng);
        tries += 1;
    }
    let dir = c.waypoint - c.position;
    let v = if dir.norm() > 0.0 {
        dir.normalize() * c.speed
    } else {
        Point3::zeros()
    };
    c.position = reflect_move(&c.position, v, dt, arena);
    v
}
