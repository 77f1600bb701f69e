//! The round loop: sensing, open-loop compensation, mobility, partitioning
//! epochs, power assignment, traffic accounting, and metric capture. Runs are
//! fully deterministic for a given seed.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::east::{
    aggregate_p_save, check_constraints, classical_assign, east_assign, ClassicalMode,
    ConstraintReport, ControlTraffic, PowerAssignment, TrafficAccountant,
};
use crate::link_model::{
    rssi_loss_to_power_level, temp_to_rssi_loss, PowerLevel, RadioConstants, RssiLoss, Temperature,
    POWER_LEVEL_FLOOR_DBM, REFERENCE_TEMP_C, RSSI_LOSS_SLOPE_DBM_PER_C,
};
use crate::regioning::{form_regions, prr, refresh_presence, RegionPartition};
use crate::topology::{
    deploy, reference_position, step_nodes, MobilitySchedule, NodeState, Position,
};
use crate::SimError;

/// Power assignment scheme driving a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    East,
    ClassicalPerNode,
    ClassicalRegionMax,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [
        Scheme::East,
        Scheme::ClassicalPerNode,
        Scheme::ClassicalRegionMax,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::East => "east",
            Scheme::ClassicalPerNode => "classical-per-node",
            Scheme::ClassicalRegionMax => "classical-region-max",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Scheme, SimError> {
        match s {
            "east" => Ok(Scheme::East),
            "classical-per-node" => Ok(Scheme::ClassicalPerNode),
            "classical-region-max" => Ok(Scheme::ClassicalRegionMax),
            other => Err(SimError::InvalidConfig(format!(
                "unknown scheme `{other}` (expected east, classical-per-node, or classical-region-max)"
            ))),
        }
    }
}

/// How node temperatures evolve after the initial draw.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TemperatureProcess {
    /// Temperatures stay frozen at their deployment draw.
    StaticField,
    /// Each round perturbs every node around its deployment draw with
    /// Gaussian noise of the given standard deviation (degrees Celsius),
    /// clipped to the configured range. Anchoring to the deployment draw
    /// keeps the formation-time regions meaningful over long runs.
    PerRoundJitter { sigma: f64 },
}

/// All parameters of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub nodes: usize,
    pub rounds: u32,
    /// Side of the deployment square, meters.
    pub side: f64,
    /// Temperature range, degrees Celsius.
    pub temp_min: f64,
    pub temp_max: f64,
    pub radio: RadioConstants,
    pub scheme: Scheme,
    pub node_mobility: MobilitySchedule,
    pub reference_mobility: MobilitySchedule,
    pub temp_process: TemperatureProcess,
    /// Re-form regions every this many rounds; 0 keeps the initial partition.
    pub repartition_every: u32,
    /// Half-width of the middle region's band around the census midrange, dBm.
    pub band_halfwidth: f64,
    /// Desired region population sits this far below the formation count.
    pub desired_offset: u32,
    /// Carried through to the manifest for record keeping; the link budget
    /// consumes eb_n0_db instead.
    pub snr_db: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            nodes: 100,
            rounds: 1200,
            side: 100.0,
            temp_min: -10.0,
            temp_max: 53.0,
            radio: RadioConstants::default(),
            scheme: Scheme::East,
            node_mobility: MobilitySchedule::RandomDisplacement { step: 2.0 },
            reference_mobility: MobilitySchedule::Static {
                pos: Position { x: 0.0, y: 0.0 },
            },
            temp_process: TemperatureProcess::StaticField,
            repartition_every: 0,
            band_halfwidth: 2.0,
            desired_offset: 5,
            snr_db: 0.20,
            seed: 43,
        }
    }
}

impl SimConfig {
    /// Rejects configurations the engine cannot run. Called by `run` before
    /// any round executes.
    pub fn validate(&self) -> Result<(), SimError> {
        if self.nodes == 0 {
            return Err(SimError::InvalidConfig("nodes must be at least 1".into()));
        }
        if self.rounds == 0 {
            return Err(SimError::InvalidConfig("rounds must be at least 1".into()));
        }
        if !(self.side.is_finite() && self.side > 0.0) {
            return Err(SimError::InvalidConfig(format!(
                "side must be finite and positive, got {}",
                self.side
            )));
        }
        if !self.temp_min.is_finite() || !self.temp_max.is_finite() || self.temp_min > self.temp_max
        {
            return Err(SimError::InvalidConfig(format!(
                "temperature range [{}, {}] must be finite and ordered",
                self.temp_min, self.temp_max
            )));
        }
        // Keep every reachable temperature above the power-level floor.
        let coldest_allowed = REFERENCE_TEMP_C + POWER_LEVEL_FLOOR_DBM / RSSI_LOSS_SLOPE_DBM_PER_C;
        if self.temp_min <= coldest_allowed {
            return Err(SimError::InvalidConfig(format!(
                "temp_min {} maps to an RSSI loss at or below the -40 dBm power-level floor \
                 (minimum supported is just above {coldest_allowed:.2})",
                self.temp_min
            )));
        }
        self.radio.validate()?;
        if !(self.band_halfwidth.is_finite() && self.band_halfwidth > 0.0) {
            return Err(SimError::InvalidConfig(format!(
                "band_halfwidth must be finite and positive, got {}",
                self.band_halfwidth
            )));
        }
        match self.node_mobility {
            MobilitySchedule::Static { .. } => {}
            MobilitySchedule::RandomDisplacement { step } => {
                if !(step.is_finite() && step >= 0.0) {
                    return Err(SimError::InvalidConfig(format!(
                        "node mobility step must be finite and non-negative, got {step}"
                    )));
                }
            }
            _ => {
                return Err(SimError::InvalidConfig(
                    "node mobility must be static or random-displacement".into(),
                ))
            }
        }
        match self.reference_mobility {
            MobilitySchedule::Static { pos } => {
                let inside = pos.x.is_finite()
                    && pos.y.is_finite()
                    && (0.0..=self.side).contains(&pos.x)
                    && (0.0..=self.side).contains(&pos.y);
                if !inside {
                    return Err(SimError::InvalidConfig(format!(
                        "static reference position ({}, {}) must lie inside the square",
                        pos.x, pos.y
                    )));
                }
            }
            MobilitySchedule::CenterHold | MobilitySchedule::PerimeterCircuit => {}
            MobilitySchedule::RandomDisplacement { .. } => {
                return Err(SimError::InvalidConfig(
                    "reference mobility must be static, center-hold, or perimeter-circuit".into(),
                ))
            }
        }
        if let TemperatureProcess::PerRoundJitter { sigma } = self.temp_process {
            if !(sigma.is_finite() && sigma >= 0.0) {
                return Err(SimError::InvalidConfig(format!(
                    "temperature jitter sigma must be finite and non-negative, got {sigma}"
                )));
            }
        }
        if !self.snr_db.is_finite() {
            return Err(SimError::InvalidConfig(format!(
                "snr_db must be finite, got {}",
                self.snr_db
            )));
        }
        Ok(())
    }
}

/// Per-region slice of one round's record.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegionRoundMetrics {
    pub count: usize,
    pub n_c: usize,
    pub n_d: usize,
    pub threshold_dbm: Option<f64>,
    /// Sum of member level savings this round.
    pub p_save_levels: f64,
    /// Sum of member dB savings this round.
    pub p_save_db: f64,
    /// Largest single-member level saving this round.
    pub max_node_p_save: f64,
    /// Sum of assigned member levels this round.
    pub level_sum: f64,
    pub prr: f64,
}

/// One row of a run's output.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundMetrics {
    pub round: u32,
    pub ref_pos: Position,
    pub regions: [RegionRoundMetrics; 3],
    pub total_p_save_levels: f64,
    pub total_p_save_db: f64,
    /// Sum of all assigned levels this round.
    pub level_sum: f64,
    /// This round's traffic delta, not a running total.
    pub traffic: ControlTraffic,
    pub constraints: ConstraintReport,
}

/// Read-only view of one finished round handed to a run observer.
pub struct RoundView<'a> {
    pub round: u32,
    pub nodes: &'a [NodeState],
    pub partition: &'a RegionPartition,
    pub assignments: &'a [PowerAssignment],
    pub metrics: &'a RoundMetrics,
}

/// Min/max/mean of a per-round series.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MinMaxMean {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

impl MinMaxMean {
    fn over(values: impl Iterator<Item = f64>) -> MinMaxMean {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        let mut sum = 0.0;
        let mut n = 0usize;
        for v in values {
            min = min.min(v);
            max = max.max(v);
            sum += v;
            n += 1;
        }
        MinMaxMean {
            min,
            max,
            mean: sum / n as f64,
        }
    }
}

/// Fraction of rounds on which each per-region constraint held.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConstraintPassRate {
    pub rssi_sum: f64,
    pub population: f64,
    pub balance: f64,
}

/// Per-region slice of the run summary.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegionSummary {
    pub region: char,
    /// Formation-time census.
    pub count: usize,
    pub n_d: usize,
    /// Formation-time threshold and the power level that compensates it.
    pub threshold_dbm: Option<f64>,
    pub threshold_level: Option<f64>,
    pub p_save_levels: MinMaxMean,
    pub p_save_db: MinMaxMean,
    /// Largest single-node level saving seen in any round.
    pub max_node_p_save_levels: f64,
    pub prr: MinMaxMean,
    /// PRR band over the run as integer percents, e.g. "(80-98)".
    pub prr_band_percent: String,
    pub constraint_pass_rate: ConstraintPassRate,
}

/// Whole-run aggregate in the shape of the per-region census tables.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunSummary {
    pub rounds: u32,
    pub regions: [RegionSummary; 3],
    pub total_p_save_levels: MinMaxMean,
    pub total_p_save_db: MinMaxMean,
    pub traffic_totals: ControlTraffic,
}

/// Draws every node's anchor temperature uniformly from the configured range
/// and recomputes its RSSI loss.
pub fn sense_initial_temperatures<R: Rng>(
    nodes: &mut [NodeState],
    temp_min: f64,
    temp_max: f64,
    rng: &mut R,
) -> Result<(), SimError> {
    for node in nodes.iter_mut() {
        let t = rng.random_range(temp_min..=temp_max);
        node.base_temp = Temperature(t);
        node.temp = Temperature(t);
        node.rssi_loss = temp_to_rssi_loss(node.temp)?;
    }
    Ok(())
}

/// Advances node temperatures one round and recomputes RSSI losses (the
/// open-loop compensation input). The static field draws nothing.
pub fn sense_temperatures<R: Rng>(
    nodes: &mut [NodeState],
    process: &TemperatureProcess,
    temp_min: f64,
    temp_max: f64,
    rng: &mut R,
) -> Result<(), SimError> {
    match process {
        TemperatureProcess::StaticField => {}
        TemperatureProcess::PerRoundJitter { sigma } => {
            for node in nodes.iter_mut() {
                let eps: f64 = rng.sample(StandardNormal);
                let t = (node.base_temp.0 + sigma * eps).clamp(temp_min, temp_max);
                node.temp = Temperature(t);
                node.rssi_loss = temp_to_rssi_loss(node.temp)?;
            }
        }
    }
    Ok(())
}

/// Runs a full simulation, returning every round's record plus the summary.
pub fn run(config: &SimConfig) -> Result<(Vec<RoundMetrics>, RunSummary), SimError> {
    run_with_observer(config, |_| {})
}

/// Like `run`, but hands each finished round to `observer` before recording
/// it. The observer sees node state, the partition, and the assignments,
/// which is enough to audit any per-node quantity without re-simulating.
pub fn run_with_observer<F>(
    config: &SimConfig,
    mut observer: F,
) -> Result<(Vec<RoundMetrics>, RunSummary), SimError>
where
    F: FnMut(RoundView<'_>),
{
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    // Initial phase: deploy, sense, and form the regions.
    let mut nodes = deploy(config.nodes, config.side, &mut rng)?;
    sense_initial_temperatures(&mut nodes, config.temp_min, config.temp_max, &mut rng)?;
    let mut partition = form_regions(&mut nodes, config.band_halfwidth, config.desired_offset)?;

    let mut accountant = TrafficAccountant::new(config.nodes);
    let mut metrics: Vec<RoundMetrics> = Vec::with_capacity(config.rounds as usize);

    for round in 0..config.rounds {
        if round > 0 {
            sense_temperatures(
                &mut nodes,
                &config.temp_process,
                config.temp_min,
                config.temp_max,
                &mut rng,
            )?;
            step_nodes(&mut nodes, &config.node_mobility, config.side, &mut rng);
            if config.repartition_every > 0 && round % config.repartition_every == 0 {
                partition = form_regions(&mut nodes, config.band_halfwidth, config.desired_offset)?;
            } else {
                refresh_presence(&mut partition, &mut nodes);
            }
        }
        let ref_pos =
            reference_position(&config.reference_mobility, round, config.rounds, config.side)?;

        let assignment_round = match config.scheme {
            Scheme::East => east_assign(&partition, &nodes),
            Scheme::ClassicalPerNode => classical_assign(&nodes, ClassicalMode::PerNode),
            Scheme::ClassicalRegionMax => classical_assign(&nodes, ClassicalMode::RegionMax),
        };
        debug_assert!(
            assignment_round.excluded.is_empty(),
            "validated temperature range keeps every RSSI loss above the floor"
        );
        for a in &assignment_round.assignments {
            nodes[a.node_id].level = PowerLevel(a.new_level);
        }

        let traffic = match config.scheme {
            Scheme::East => accountant.account_east(&partition),
            Scheme::ClassicalPerNode | Scheme::ClassicalRegionMax => {
                accountant.account_classical(&assignment_round.assignments)
            }
        };

        let agg = aggregate_p_save(&assignment_round.assignments);
        let prr_report = prr(&partition);
        let constraints = check_constraints(&partition, &assignment_round.assignments);
        let regions = core::array::from_fn(|i| RegionRoundMetrics {
            count: partition.count[i],
            n_c: partition.n_c[i],
            n_d: partition.n_d[i],
            threshold_dbm: partition.threshold[i],
            p_save_levels: agg.levels_by_region[i],
            p_save_db: agg.db_by_region[i],
            max_node_p_save: agg.max_node_levels[i],
            level_sum: agg.level_sum_by_region[i],
            prr: prr_report.by_region[i],
        });
        let record = RoundMetrics {
            round,
            ref_pos,
            regions,
            total_p_save_levels: agg.total_levels,
            total_p_save_db: agg.total_db,
            level_sum: agg.total_level_sum,
            traffic,
            constraints,
        };
        observer(RoundView {
            round,
            nodes: &nodes,
            partition: &partition,
            assignments: &assignment_round.assignments,
            metrics: &record,
        });
        metrics.push(record);
    }

    let summary = summarize(&metrics);
    Ok((metrics, summary))
}

/// Collapses a run's records into the per-region census shape: formation
/// counts and thresholds, per-round save and PRR statistics, traffic totals,
/// and constraint pass rates. Needs at least one round.
pub fn summarize(metrics: &[RoundMetrics]) -> RunSummary {
    assert!(!metrics.is_empty(), "summarize needs at least one round");
    let formation = &metrics[0];
    let letters = ['A', 'B', 'C'];
    let regions = core::array::from_fn(|i| {
        let threshold_dbm = formation.regions[i].threshold_dbm;
        let threshold_level = threshold_dbm
            .map(|t| rssi_loss_to_power_level(RssiLoss(t)).map(|p| p.0))
            .transpose()
            .unwrap_or(None);
        let prr_stats = MinMaxMean::over(metrics.iter().map(|m| m.regions[i].prr));
        let rounds = metrics.len() as f64;
        let pass = |f: fn(&crate::east::RegionConstraints) -> bool| {
            metrics
                .iter()
                .filter(|m| f(&m.constraints.regions[i]))
                .count() as f64
                / rounds
        };
        RegionSummary {
            region: letters[i],
            count: formation.regions[i].count,
            n_d: formation.regions[i].n_d,
            threshold_dbm,
            threshold_level,
            p_save_levels: MinMaxMean::over(metrics.iter().map(|m| m.regions[i].p_save_levels)),
            p_save_db: MinMaxMean::over(metrics.iter().map(|m| m.regions[i].p_save_db)),
            max_node_p_save_levels: metrics
                .iter()
                .map(|m| m.regions[i].max_node_p_save)
                .fold(0.0, f64::max),
            prr: prr_stats,
            prr_band_percent: format!(
                "({:.0}-{:.0})",
                prr_stats.min * 100.0,
                prr_stats.max * 100.0
            ),
            constraint_pass_rate: ConstraintPassRate {
                rssi_sum: pass(|r| r.rssi_sum_ok),
                population: pass(|r| r.population_ok),
                balance: pass(|r| r.balance_ok),
            },
        }
    });
    let traffic_totals = metrics.iter().fold(ControlTraffic::default(), |acc, m| {
        ControlTraffic {
            beacons: acc.beacons + m.traffic.beacons,
            acks: acc.acks + m.traffic.acks,
            power_adjust_msgs: acc.power_adjust_msgs + m.traffic.power_adjust_msgs,
        }
    });
    RunSummary {
        rounds: metrics.len() as u32,
        regions,
        total_p_save_levels: MinMaxMean::over(metrics.iter().map(|m| m.total_p_save_levels)),
        total_p_save_db: MinMaxMean::over(metrics.iter().map(|m| m.total_p_save_db)),
        traffic_totals,
    }
}

// ---------------------------------------------------------------------------
