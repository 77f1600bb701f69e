//! Node deployment, distance geometry, and mobility schedules for sensor
//! nodes and the reference node.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::link_model::{temp_to_rssi_loss, PowerLevel, RssiLoss, Temperature};
use crate::regioning::Region;
use crate::SimError;

/// Distance floor applied before the link budget, meters.
pub const MIN_LINK_DISTANCE_M: f64 = 1.0;

/// Planar position inside the deployment square, meters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub fn new(x: f64, y: f64) -> Position {
        Position { x, y }
    }
}

/// One sensor node's per-round state.
///
/// `base_temp` is the deployment-time draw; temperature processes perturb
/// around it so long runs stay statistically anchored to the formation state.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeState {
    pub id: usize,
    pub pos: Position,
    pub base_temp: Temperature,
    pub temp: Temperature,
    pub rssi_loss: RssiLoss,
    pub level: PowerLevel,
    pub region: Option<Region>,
    /// Still inside its region's formation band this round.
    pub present: bool,
}

/// Movement pattern for the reference node or the sensor population.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MobilitySchedule {
    /// Pinned at a fixed point.
    Static { pos: Position },
    /// Pinned at the center of the square.
    CenterHold,
    /// Closed circuit center -> (0,0) -> (0,side) -> (side,side) -> (side,0)
    /// -> (0,0), advanced piecewise-linearly with the legs spread evenly over
    /// the run.
    PerimeterCircuit,
    /// Per-round uniform displacement in [-step, +step] on each axis with
    /// reflection at the walls.
    RandomDisplacement { step: f64 },
}

/// Scatters `n` nodes uniformly over the square, deterministically for a
/// seeded generator. Temperatures start at the 25 degree reference (zero RSSI
/// loss) until a sensing pass runs.
pub fn deploy<R: Rng>(n: usize, side: f64, rng: &mut R) -> Result<Vec<NodeState>, SimError> {
    if n == 0 {
        return Err(SimError::InvalidConfig("node count must be at least 1".into()));
    }
    if !(side.is_finite() && side > 0.0) {
        return Err(SimError::InvalidConfig(format!(
            "square side must be finite and positive, got {side}"
        )));
    }
    let mut nodes = Vec::with_capacity(n);
    for id in 0..n {
        let x = rng.random_range(0.0..=side);
        let y = rng.random_range(0.0..=side);
        let temp = Temperature(25.0);
        let rssi_loss = temp_to_rssi_loss(temp).expect("reference temperature is finite");
        nodes.push(NodeState {
            id,
            pos: Position::new(x, y),
            base_temp: temp,
            temp,
            rssi_loss,
            level: PowerLevel(0.0),
            region: None,
            present: true,
        });
    }
    Ok(nodes)
}

/// Euclidean distance, meters.
pub fn distance(a: Position, b: Position) -> f64 {
    ((a.x - b.x).powi(2) + (a.y - b.y).powi(2)).sqrt()
}

/// Euclidean distance floored at 1 m, the form the link budget consumes.
pub fn link_distance(a: Position, b: Position) -> f64 {
    distance(a, b).max(MIN_LINK_DISTANCE_M)
}

/// Reference-node position for a round.
///
/// The perimeter circuit spreads its five legs evenly over the whole run, so
/// round 0 sits at the center and the final round closes the loop at (0,0).
pub fn reference_position(
    schedule: &MobilitySchedule,
    round: u32,
    rounds: u32,
    side: f64,
) -> Result<Position, SimError> {
    match schedule {
        MobilitySchedule::Static { pos } => Ok(*pos),
        MobilitySchedule::CenterHold => Ok(Position::new(side / 2.0, side / 2.0)),
        MobilitySchedule::PerimeterCircuit => {
            let waypoints = [
                Position::new(side / 2.0, side / 2.0),
                Position::new(0.0, 0.0),
                Position::new(0.0, side),
                Position::new(side, side),
                Position::new(side, 0.0),
                Position::new(0.0, 0.0),
            ];
            let legs = (waypoints.len() - 1) as f64;
            let frac = if rounds > 1 {
                (round.min(rounds - 1) as f64) / ((rounds - 1) as f64)
            } else {
                0.0
            };
            let along = frac * legs;
            let leg = (along.floor() as usize).min(waypoints.len() - 2);
            let u = along - leg as f64;
            let a = waypoints[leg];
            let b = waypoints[leg + 1];
            Ok(Position::new(a.x + (b.x - a.x) * u, a.y + (b.y - a.y) * u))
        }
        MobilitySchedule::RandomDisplacement { .. } => Err(SimError::InvalidConfig(
            "random-displacement is a sensor-population schedule, not a reference schedule".into(),
        )),
    }
}

/// Applies one round of population movement. Only random displacement moves
/// nodes; a non-positive step draws nothing and leaves positions untouched.
pub fn step_nodes<R: Rng>(
    nodes: &mut [NodeState],
    schedule: &MobilitySchedule,
    side: f64,
    rng: &mut R,
) {
    let step = match schedule {
        MobilitySchedule::RandomDisplacement { step } => *step,
        _ => return,
    };
    if step.is_nan() || step <= 0.0 {
        return;
    }
    for node in nodes.iter_mut() {
        let dx = rng.random_range(-step..=step);
        let dy = rng.random_range(-step..=step);
        node.pos.x = reflect(node.pos.x + dx, side);
        node.pos.y = reflect(node.pos.y + dy, side);
    }
}

/// Folds a coordinate back into [0, side] by mirroring at the walls.
fn reflect(v: f64, side: f64) -> f64 {
    let mut v = v;
    loop {
        if v < 0.0 {
            v = -v;
        } else if v > side {
            v = 2.0 * side - v;
        } else {
            return v;
        }
    }
}

// ---------------------------------------------------------------------------
