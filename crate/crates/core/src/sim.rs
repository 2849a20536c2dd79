//! Mission simulator: scenario configuration, seeded drops, aggregation and export.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{eeem_step, eem_position, mmc_step};
use crate::channel::{sample_fading_gain, ChannelParams, NodeState};
use crate::feasibility::{build_region, is_feasible, Limits, Verdict, DEFAULT_SIGMA};
use crate::mobility::{Arena, Mobility, MobilitySpec};
use crate::optimizer::{initial_state, step, OptimizerConfig, StepReport, CHECK_TOL};
use crate::positioning::DEFAULT_XI;
use crate::propulsion::PropulsionParams;
use crate::{Error, Point3, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Column names of the per-step CSV export.
pub const STEP_COLUMNS: [&str; 10] = [
    "k",
    "x",
    "y",
    "z",
    "c_tot",
    "min_c",
    "iterations",
    "feasible",
    "p_pr",
    "sum_p",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Proposed,
    Mmc,
    Eem,
    Eeem,
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "proposed" => Ok(Scheme::Proposed),
            "mmc" => Ok(Scheme::Mmc),
            "eem" => Ok(Scheme::Eem),
            "eeem" => Ok(Scheme::Eeem),
            other => Err(Error::Config(format!("unknown scheme {other:?}"))),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Proposed => "proposed",
            Scheme::Mmc => "mmc",
            Scheme::Eem => "eem",
            Scheme::Eeem => "eeem",
        })
    }
}

/// Full description of a simulation campaign. Every field has a default, so a
/// config file only needs the values it changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub arena: Arena,
    pub n_nodes: usize,
    pub mobility: MobilitySpec,
    /// Total bandwidth, split equally between nodes, Hz.
    pub total_bandwidth: f64,
    pub noise_density_dbm_hz: f64,
    pub interference_dbm: f64,
    pub pathloss_exp: f64,
    pub channel_gain: f64,
    /// Rician K-factor of the optional faded-capacity evaluation.
    pub rician_factor: f64,
    pub h_min: f64,
    pub h_max: f64,
    /// Total transmission power budget, W.
    pub p_max: f64,
    /// Maximum supported speed, m/s.
    pub v_max: f64,
    /// Propulsion power cap, W.
    pub p_prop_cap: f64,
    pub propulsion: PropulsionParams,
    /// Minimum capacity required by every node, bit/s.
    pub cmin: f64,
    /// Mission duration, s.
    pub duration: f64,
    /// Timestep, s.
    pub dt: f64,
    pub n_drops: usize,
    pub seed: u64,
    pub scheme: Scheme,
    pub sigma: f64,
    pub xi: f64,
    pub epsilon: f64,
    pub max_iters: u32,
    pub monotonicity_guard: bool,
    pub mmc_speed_constraint: bool,
    /// Also report sum capacity under sampled Rician fading.
    pub fading_eval: bool,
    /// Keep node positions of every step for the trajectory export.
    pub record_trajectory: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            arena: Arena::default(),
            n_nodes: 100,
            mobility: MobilitySpec::default(),
            total_bandwidth: 100e6,
            noise_density_dbm_hz: -174.0,
            interference_dbm: -100.0,
            pathloss_exp: 2.4,
            channel_gain: 1.0,
            rician_factor: 10.0,
            h_min: 100.0,
            h_max: 300.0,
            p_max: 1.0,
            v_max: 25.0,
            p_prop_cap: 250.0,
            propulsion: PropulsionParams::default(),
            cmin: 1e6,
            duration: 1200.0,
            dt: 1.0,
            n_drops: 1,
            seed: 0,
            scheme: Scheme::Proposed,
            sigma: DEFAULT_SIGMA,
            xi: DEFAULT_XI,
            epsilon: 0.1,
            max_iters: 10,
            monotonicity_guard: true,
            mmc_speed_constraint: true,
            fading_eval: false,
            record_trajectory: false,
        }
    }
}

impl ScenarioConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: ScenarioConfig =
            serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        ScenarioConfig::from_json_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("arena.width", self.arena.width),
            ("arena.height", self.arena.height),
            ("total_bandwidth", self.total_bandwidth),
            ("pathloss_exp", self.pathloss_exp),
            ("channel_gain", self.channel_gain),
            ("dt", self.dt),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if self.n_nodes == 0 {
            return Err(Error::Config("n_nodes must be at least 1".into()));
        }
        if self.n_drops == 0 {
            return Err(Error::Config("n_drops must be at least 1".into()));
        }
        if !(self.duration >= 0.0 && self.duration.is_finite()) {
            return Err(Error::Config(format!(
                "duration must be >= 0, got {}",
                self.duration
            )));
        }
        if !(self.cmin >= 0.0 && self.cmin.is_finite()) {
            return Err(Error::Config(format!(
                "cmin must be >= 0, got {}",
                self.cmin
            )));
        }
        if !(self.rician_factor >= 0.0 && self.rician_factor.is_finite()) {
            return Err(Error::Config("rician_factor must be >= 0".into()));
        }
        if !(self.noise_density_dbm_hz.is_finite() && self.interference_dbm.is_finite()) {
            return Err(Error::Config(
                "noise and interference levels must be finite".into(),
            ));
        }
        if !self.p_prop_cap.is_finite() || !self.v_max.is_finite() {
            return Err(Error::Config(
                "speed and propulsion caps must be finite".into(),
            ));
        }
        self.limits().validate()?;
        self.optimizer().validate()?;
        self.mobility.validate()?;
        self.channel().map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    pub fn limits(&self) -> Limits {
        Limits {
            h_min: self.h_min,
            h_max: self.h_max,
            v_max: self.v_max,
            p_prop_cap: self.p_prop_cap,
            p_max: self.p_max,
            dt: self.dt,
            propulsion: self.propulsion,
        }
    }

    pub fn optimizer(&self) -> OptimizerConfig {
        OptimizerConfig {
            epsilon: self.epsilon,
            max_iters: self.max_iters,
            sigma: self.sigma,
            xi: self.xi,
            monotonicity_guard: self.monotonicity_guard,
        }
    }

    /// Channel of every node; the bandwidth is the equal share of the total.
    pub fn channel(&self) -> Result<ChannelParams> {
        let mut ch = ChannelParams::from_noise_density(
            self.channel_gain,
            self.pathloss_exp,
            self.total_bandwidth / self.n_nodes.max(1) as f64,
            self.noise_density_dbm_hz,
            self.interference_dbm,
        )?;
        ch.rician_factor = self.rician_factor;
        Ok(ch)
    }

    pub fn n_steps(&self) -> u64 {
        (self.duration / self.dt).round() as u64
    }
}

/// One row of the per-step export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub k: u64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub c_tot: f64,
    pub min_c: f64,
    pub iterations: u32,
    pub feasible: bool,
    pub p_pr: f64,
    pub sum_p: f64,
}

impl From<&StepReport> for StepRecord {
    fn from(r: &StepReport) -> Self {
        StepRecord {
            k: r.k,
            x: r.position.x,
            y: r.position.y,
            z: r.position.z,
            c_tot: r.sum_capacity,
            min_c: r.min_capacity(),
            iterations: r.iterations,
            feasible: r.feasible,
            p_pr: r.propulsion_power,
            sum_p: r.power_sum(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub k: u64,
    pub node_id: usize,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

/// Spread of the per-node mission-average capacities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeCapacityStats {
    pub min: f64,
    pub mean: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DropSummary {
    pub drop_index: u64,
    pub steps: Vec<StepRecord>,
    pub mean_sum_capacity: f64,
    pub final_sum_capacity: f64,
    pub per_node_capacity: NodeCapacityStats,
    /// Steps marked feasible in which some node still misses its requirement.
    pub qos_violations: u64,
    pub infeasible_steps: u64,
    pub mean_iterations: f64,
    pub mean_propulsion_power: f64,
    /// Largest relative sum-capacity gain after the third inner iteration.
    pub max_late_gain: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub faded_mean_sum_capacity: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trajectory: Vec<TrajectoryRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub schema_version: u32,
    pub config: ScenarioConfig,
    pub drops: Vec<DropSummary>,
    /// Means over drops of the per-drop values.
    pub mean_sum_capacity: f64,
    pub final_sum_capacity: f64,
    pub qos_violations: u64,
    pub infeasible_steps: u64,
    pub mean_iterations: f64,
    pub mean_propulsion_power: f64,
}

impl RunSummary {
    pub fn total_steps(&self) -> usize {
        self.drops.iter().map(|d| d.steps.len()).sum()
    }
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

/// Random stream of drop `index`: the master seed with the drop index as stream id.
pub fn drop_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn centroid_at(nodes: &[NodeState], z: f64) -> Point3 {
    let c = nodes.iter().fold(Point3::zeros(), |a, n| a + n.position) / nodes.len() as f64;
    Point3::new(c.x, c.y, z)
}

/// Runs one drop of the campaign.
pub fn run_drop(cfg: &ScenarioConfig, drop_index: u64) -> Result<DropSummary> {
    cfg.validate()?;
    let mut rng = drop_rng(cfg.seed, drop_index);
    let mut fade_rng = drop_rng(cfg.seed ^ 0x9e37_79b9_7f4a_7c15, drop_index);
    let limits = cfg.limits();
    let opt = cfg.optimizer();
    let channel = cfg.channel()?;
    let (mut mobility, positions) =
        Mobility::scenario(cfg.n_nodes, &cfg.mobility, cfg.arena, &mut rng)?;
    let mut nodes: Vec<NodeState> = positions
        .into_iter()
        .enumerate()
        .map(|(id, position)| NodeState {
            id,
            position,
            qos_min: cfg.cmin,
            channel,
        })
        .collect();

    let fixed = eem_position(&cfg.arena.center(), &limits);
    let (mut q, mut p) = match cfg.scheme {
        Scheme::Proposed => {
            let r = initial_state(&nodes, &opt, &limits)?;
            (r.position, r.power)
        }
        Scheme::Mmc => {
            let r = mmc_step(&centroid_at(&nodes, limits.h_min), &nodes, &limits, false)?;
            (r.position, r.power)
        }
        Scheme::Eem => (fixed, vec![limits.p_max / cfg.n_nodes as f64; cfg.n_nodes]),
        Scheme::Eeem => (
            centroid_at(&nodes, limits.h_min),
            vec![limits.p_max / cfg.n_nodes as f64; cfg.n_nodes],
        ),
    };

    let n_steps = cfg.n_steps();
    let mut steps = Vec::with_capacity(n_steps as usize);
    let mut trajectory = Vec::new();
    let mut node_sums = vec![0.0; cfg.n_nodes];
    let mut faded = Vec::new();
    let mut qos_violations = 0;
    let mut max_late_gain: f64 = 0.0;
    for k in 1..=n_steps {
        mobility.advance(&mut nodes, cfg.dt, &mut rng)?;
        let mut r = match cfg.scheme {
            Scheme::Proposed => step(&q, &p, &nodes, &opt, &limits)?,
            Scheme::Mmc => mmc_step(&q, &nodes, &limits, cfg.mmc_speed_constraint)?,
            Scheme::Eem => crate::baselines::eem_step(&q, &nodes, &limits, &fixed)?,
            Scheme::Eeem => eeem_step(&q, &nodes, &limits)?,
        };
        r.k = k;
        if r.feasible
            && nodes
                .iter()
                .zip(&r.capacities)
                .any(|(n, c)| *c < n.qos_min * (1.0 - CHECK_TOL))
        {
            qos_violations += 1;
        }
        if r.trace.len() >= 3 {
            let base = r.trace[2];
            let last = *r.trace.last().expect("nonempty trace");
            max_late_gain = max_late_gain.max((last - base) / base);
        }
        for (s, c) in node_sums.iter_mut().zip(&r.capacities) {
            *s += c;
        }
        if cfg.fading_eval {
            let total: f64 = nodes
                .iter()
                .zip(&r.power)
                .map(|(n, &pi)| {
                    let g = sample_fading_gain(n.channel.rician_factor, &mut fade_rng);
                    let snr = g * pi * n.channel.link_gain(n.distance(&r.position));
                    n.channel.bandwidth * snr.ln_1p() / std::f64::consts::LN_2
                })
                .sum();
            faded.push(total);
        }
        if cfg.record_trajectory {
            trajectory.extend(nodes.iter().map(|n| TrajectoryRow {
                k,
                node_id: n.id,
                x: n.position.x,
                y: n.position.y,
                z: n.position.z,
            }));
        }
        q = r.position;
        p = r.power.clone();
        steps.push(StepRecord::from(&r));
    }

    let per_node: Vec<f64> = node_sums
        .iter()
        .map(|s| s / n_steps.max(1) as f64)
        .collect();
    Ok(DropSummary {
        drop_index,
        mean_sum_capacity: mean(steps.iter().map(|s| s.c_tot)),
        final_sum_capacity: steps.last().map_or(0.0, |s| s.c_tot),
        per_node_capacity: NodeCapacityStats {
            min: if n_steps == 0 {
                0.0
            } else {
                per_node.iter().copied().fold(f64::INFINITY, f64::min)
            },
            mean: if n_steps == 0 {
                0.0
            } else {
                mean(per_node.iter().copied())
            },
            max: per_node.iter().copied().fold(0.0, f64::max),
        },
        qos_violations,
        infeasible_steps: steps.iter().filter(|s| !s.feasible).count() as u64,
        mean_iterations: mean(steps.iter().map(|s| s.iterations as f64)),
        mean_propulsion_power: mean(steps.iter().map(|s| s.p_pr)),
        max_late_gain,
        faded_mean_sum_capacity: cfg.fading_eval.then(|| mean(faded.iter().copied())),
        steps,
        trajectory,
    })
}

/// Runs every drop (in parallel) and aggregates them in drop order.
pub fn run(cfg: &ScenarioConfig) -> Result<RunSummary> {
    cfg.validate()?;
    let drops = (0..cfg.n_drops as u64)
        .into_par_iter()
        .map(|i| run_drop(cfg, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(RunSummary {
        schema_version: SCHEMA_VERSION,
        config: cfg.clone(),
        mean_sum_capacity: mean(drops.iter().map(|d| d.mean_sum_capacity)),
        final_sum_capacity: mean(drops.iter().map(|d| d.final_sum_capacity)),
        qos_violations: drops.iter().map(|d| d.qos_violations).sum(),
        infeasible_steps: drops.iter().map(|d| d.infeasible_steps).sum(),
        mean_iterations: mean(drops.iter().map(|d| d.mean_iterations)),
        mean_propulsion_power: mean(drops.iter().map(|d| d.mean_propulsion_power)),
        drops,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    NNodes,
    Cmin,
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "n_nodes" | "n-nodes" => Ok(SweepParam::NNodes),
            "cmin" => Ok(SweepParam::Cmin),
            other => Err(Error::Config(format!("unknown sweep parameter {other:?}"))),
        }
    }
}

impl SweepParam {
    pub fn apply(&self, cfg: &ScenarioConfig, value: f64) -> Result<ScenarioConfig> {
        let mut c = cfg.clone();
        match self {
            SweepParam::NNodes => {
                if !(value >= 1.0 && value.fract() == 0.0) {
                    return Err(Error::Config(format!(
                        "n_nodes must be a positive integer, got {value}"
                    )));
                }
                c.n_nodes = value as usize;
            }
            SweepParam::Cmin => c.cmin = value,
        }
        c.validate()?;
        Ok(c)
    }
}

/// Runs the campaign once per value of `param`.
pub fn sweep(
    cfg: &ScenarioConfig,
    param: SweepParam,
    values: &[f64],
) -> Result<Vec<(f64, RunSummary)>> {
    values
        .iter()
        .map(|&v| Ok((v, run(&param.apply(cfg, v)?)?)))
        .collect()
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).map_err(|e| Error::io(path, e))?,
    ))
}

/// Per-step rows of every drop, drop after drop; `k` restarts at 1 in each drop.
pub fn write_steps_csv<W: Write>(summary: &RunSummary, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(STEP_COLUMNS)?;
    for d in &summary.drops {
        for s in &d.steps {
            w.serialize(s)?;
        }
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn write_trajectory_csv<W: Write>(summary: &RunSummary, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(["drop", "k", "node_id", "x", "y", "z"])?;
    for d in &summary.drops {
        for r in &d.trajectory {
            w.serialize((d.drop_index, r.k, r.node_id, r.x, r.y, r.z))?;
        }
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Csv,
    Json,
}

pub fn export(summary: &RunSummary, path: &Path, format: ExportFormat) -> Result<()> {
    let mut f = create(path)?;
    match format {
        ExportFormat::Csv => write_steps_csv(summary, &mut f)?,
        ExportFormat::Json => serde_json::to_writer_pretty(&mut f, summary)?,
    }
    f.flush().map_err(|e| Error::io(path, e))
}

pub fn export_trajectory(summary: &RunSummary, path: &Path) -> Result<()> {
    let mut f = create(path)?;
    write_trajectory_csv(summary, &mut f)?;
    f.flush().map_err(|e| Error::io(path, e))
}

pub fn read_summary(path: &Path) -> Result<RunSummary> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// A frozen timestep for offline feasibility checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Snapshot {
    pub q_prev: Point3,
    pub nodes: Vec<NodeState>,
    pub power: Vec<f64>,
    #[serde(default)]
    pub limits: Limits,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
}

fn default_sigma() -> f64 {
    DEFAULT_SIGMA
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityOutput {
    pub feasible: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl Snapshot {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let s: Snapshot = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        self.limits.validate()?;
        for n in &self.nodes {
            n.validate().map_err(|e| Error::Config(e.to_string()))?;
        }
        if self.power.len() != self.nodes.len() {
            return Err(Error::Config(format!(
                "snapshot has {} powers for {} nodes",
                self.power.len(),
                self.nodes.len()
            )));
        }
        if !(self.sigma > 0.0) {
            return Err(Error::Config("sigma must be positive".into()));
        }
        Ok(())
    }

    pub fn check(&self) -> Result<FeasibilityOutput> {
        let region = build_region(
            &self.q_prev,
            &self.nodes,
            &self.power,
            &self.limits,
            self.sigma,
        )?;
        Ok(match is_feasible(&region) {
            Verdict::Feasible(w) => FeasibilityOutput {
                feasible: true,
                witness: Some([w.x, w.y, w.z]),
                reason: None,
            },
            Verdict::Infeasible(r) => FeasibilityOutput {
                feasible: false,
                witness: None,
                reason: Some(r.to_string()),
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ScenarioConfig {
        ScenarioConfig {
            n_nodes: 10,
            duration: 20.0,
            seed: 3,
            ..ScenarioConfig::default()
        }
    }

    #[test]
    fn zero_duration_is_empty() {
        let s = run(&ScenarioConfig {
            duration: 0.0,
            ..small()
        })
        .unwrap();
        assert_eq!(s.total_steps(), 0);
        let mut buf = Vec::new();
        write_steps_csv(&s, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "k,x,y,z,c_tot,min_c,iterations,feasible,p_pr,sum_p\n"
        );
    }

    #[test]
    fn config_defaults_and_errors() {
        let cfg = ScenarioConfig::from_json_str(r#"{"n_nodes": 7, "scheme": "mmc"}"#).unwrap();
        assert_eq!(cfg.n_nodes, 7);
        assert_eq!(cfg.scheme, Scheme::Mmc);
        assert_eq!(cfg.p_max, 1.0);
        assert!(matches!(
            ScenarioConfig::from_json_str(r#"{"n_nodes": 0}"#),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            ScenarioConfig::from_json_str(r#"{"bogus": 1}"#),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            ScenarioConfig::from_json_str(r#"{"h_min": 400}"#),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn every_scheme_runs_and_keeps_qos() {
        for scheme in [Scheme::Proposed, Scheme::Mmc, Scheme::Eem, Scheme::Eeem] {
            let s = run(&ScenarioConfig { scheme, ..small() }).unwrap();
            assert_eq!(s.total_steps(), 20);
            assert_eq!(s.qos_violations, 0, "{scheme}");
        }
    }

    #[test]
    fn json_round_trip() {
        let s = run(&ScenarioConfig {
            fading_eval: true,
            record_trajectory: true,
            ..small()
        })
        .unwrap();
        let text = serde_json::to_string(&s).unwrap();
        let back: RunSummary = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
        assert!(s.drops[0].faded_mean_sum_capacity.unwrap() > 0.0);
        assert_eq!(s.drops[0].trajectory.len(), 20 * 10);
    }

    #[test]
    fn multi_drop_mean_is_mean_of_drops() {
        let cfg = ScenarioConfig {
            n_drops: 3,
            ..small()
        };
        let s = run(&cfg).unwrap();
        let singles: Vec<f64> = (0..3)
            .map(|i| run_drop(&cfg, i).unwrap().mean_sum_capacity)
            .collect();
        assert_eq!(
            s.mean_sum_capacity,
            (singles[0] + singles[1] + singles[2]) / 3.0
        );
        assert_ne!(singles[0], singles[1]);
    }

    #[test]
    fn snapshot_check() {
        let ch = ScenarioConfig::default().channel().unwrap();
        let snap = Snapshot {
            q_prev: Point3::new(0.0, 0.0, 100.0),
            nodes: vec![NodeState {
                id: 0,
                position: Point3::zeros(),
                qos_min: 1e6,
                channel: ch,
            }],
            power: vec![1.0],
            limits: Limits::default(),
            sigma: DEFAULT_SIGMA,
        };
        let text = serde_json::to_string(&snap).unwrap();
        let back: Snapshot = serde_json::from_str(&text).unwrap();
        let out = back.check().unwrap();
        assert!(out.feasible);
        assert_eq!(out.witness, Some([0.0, 0.0, 100.0]));
    }
}
