//! RSSI census, the three-region partition, per-region thresholds, and packet
//! reception ratio.
//!
//! Regions are formed once from a census and then tracked: membership is
//! frozen at formation, while presence (who is still inside the band) is
//! refreshed every round.

use serde::{Deserialize, Serialize};

use crate::topology::NodeState;
use crate::SimError;

/// Region label ordered by RSSI loss: A hottest, C coolest.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    A,
    B,
    C,
}

pub const REGIONS: [Region; 3] = [Region::A, Region::B, Region::C];

impl Region {
    pub fn index(self) -> usize {
        match self {
            Region::A => 0,
            Region::B => 1,
            Region::C => 2,
        }
    }

    pub fn letter(self) -> char {
        match self {
            Region::A => 'A',
            Region::B => 'B',
            Region::C => 'C',
        }
    }
}

/// Network-wide RSSI-loss extremes. `avg` is the midrange (min+max)/2, not
/// the arithmetic mean.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RssiCensus {
    pub min: f64,
    pub max: f64,
    pub avg: f64,
}

/// Band edges in dBm. Adjacent regions share an edge (`a_min` = `b_max`,
/// `b_min` = `c_max`); both shared edges are clamped into [min, max] so a
/// degenerate census still yields a total partition.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegionBounds {
    pub a_max: f64,
    pub a_min: f64,
    pub b_max: f64,
    pub b_min: f64,
    pub c_max: f64,
    pub c_min: f64,
}

impl RegionBounds {
    pub fn from_census(census: &RssiCensus, halfwidth: f64) -> RegionBounds {
        let upper = (census.avg + halfwidth).clamp(census.min, census.max);
        let lower = (census.avg - halfwidth).clamp(census.min, census.max);
        RegionBounds {
            a_max: census.max,
            a_min: upper,
            b_max: upper,
            b_min: lower,
            c_max: lower,
            c_min: census.min,
        }
    }

    /// Region whose band holds the given RSSI loss. Bands are A = (a_min, a_max],
    /// B = (b_min, b_max], C = [c_min, c_max]; values at a shared edge fall to
    /// the lower region.
    pub fn classify(&self, rssi: f64) -> Region {
        if rssi > self.a_min {
            Region::A
        } else if rssi > self.b_min {
            Region::B
        } else {
            Region::C
        }
    }

    /// Whether a (possibly drifted) RSSI loss is still inside a region's band.
    pub fn band_contains(&self, region: Region, rssi: f64) -> bool {
        match region {
            Region::A => rssi > self.a_min && rssi <= self.a_max,
            Region::B => rssi > self.b_min && rssi <= self.b_max,
            Region::C => rssi >= self.c_min && rssi <= self.c_max,
        }
    }
}

/// Per-region PRR: the fraction of formation-time members still inside the
/// band. Indexed by `Region::index()`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PrrReport {
    pub by_region: [f64; 3],
}

/// The frozen formation-time partition plus per-round presence tallies.
///
/// `count` and `n_d` never change after formation; `n_c`, `above`, and
/// `below` track the current round. All per-region arrays are indexed by
/// `Region::index()`.
#[derive(Clone, Debug, PartialEq)]
pub struct RegionPartition {
    pub bounds: RegionBounds,
    pub members: [Vec<usize>; 3],
    pub count: [usize; 3],
    /// Desired population: formation count less the configured offset,
    /// floored at 1.
    pub n_d: [usize; 3],
    /// Members currently inside the band.
    pub n_c: [usize; 3],
    /// Mean member RSSI loss at formation; absent for an empty region.
    pub threshold: [Option<f64>; 3],
    /// Present members at or above the threshold.
    pub above: [usize; 3],
    /// Present members below the threshold.
    pub below: [usize; 3],
}

impl RegionPartition {
    pub fn total_members(&self) -> usize {
        self.count.iter().sum()
    }
}

/// Min, max, and midrange of the population's RSSI losses.
pub fn rssi_census(nodes: &[NodeState]) -> Result<RssiCensus, SimError> {
    if nodes.is_empty() {
        return Err(SimError::EmptyNetwork);
    }
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for node in nodes {
        min = min.min(node.rssi_loss.0);
        max = max.max(node.rssi_loss.0);
    }
    Ok(RssiCensus {
        min,
        max,
        avg: (min + max) / 2.0,
    })
}

/// Splits the population into regions A/B/C around the census midrange and
/// labels every node. Membership, counts, and desired counts are frozen here;
/// thresholds still need `region_thresholds`.
pub fn partition(
    nodes: &mut [NodeState],
    census: &RssiCensus,
    band_halfwidth: f64,
    desired_offset: u32,
) -> RegionPartition {
    let bounds = RegionBounds::from_census(census, band_halfwidth);
    let mut members: [Vec<usize>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for node in nodes.iter_mut() {
        let region = bounds.classify(node.rssi_loss.0);
        node.region = Some(region);
        node.present = true;
        members[region.index()].push(node.id);
    }
    let count = [members[0].len(), members[1].len(), members[2].len()];
    let n_d = count.map(|c| c.saturating_sub(desired_offset as usize).max(1));
    RegionPartition {
        bounds,
        members,
        count,
        n_d,
        n_c: count,
        threshold: [None; 3],
        above: [0; 3],
        below: [0; 3],
    }
}

/// Threshold of each region: the arithmetic mean of member RSSI losses,
/// absent for an empty region.
pub fn region_thresholds(p: &mut RegionPartition, nodes: &[NodeState]) {
    for i in 0..3 {
        if p.members[i].is_empty() {
            p.threshold[i] = None;
        } else {
            let sum: f64 = p.members[i].iter().map(|&id| nodes[id].rssi_loss.0).sum();
            p.threshold[i] = Some(sum / p.members[i].len() as f64);
        }
    }
}

/// Re-evaluates which members are still inside their formation band and
/// tallies the present members above/below the threshold.
pub fn refresh_presence(p: &mut RegionPartition, nodes: &mut [NodeState]) {
    for (i, region) in REGIONS.iter().enumerate() {
        let mut n_c = 0;
        let mut above = 0;
        for &id in &p.members[i] {
            let rssi = nodes[id].rssi_loss.0;
            let present = p.bounds.band_contains(*region, rssi);
            nodes[id].present = present;
            if present {
                n_c += 1;
                if let Some(threshold) = p.threshold[i] {
                    if rssi >= threshold {
                        above += 1;
                    }
                }
            }
        }
        p.n_c[i] = n_c;
        p.above[i] = above;
        p.below[i] = if p.threshold[i].is_some() { n_c - above } else { 0 };
    }
}

/// Packet reception ratio per region: present over formation count. An empty
/// region reports 1.0 by convention.
pub fn prr(p: &RegionPartition) -> PrrReport {
    let by_region = core::array::from_fn(|i| {
        if p.count[i] > 0 {
            p.n_c[i] as f64 / p.count[i] as f64
        } else {
            1.0
        }
    });
    PrrReport { by_region }
}

/// Census, partition, thresholds, and the initial presence refresh in one
/// pass: the whole formation phase.
pub fn form_regions(
    nodes: &mut [NodeState],
    band_halfwidth: f64,
    desired_offset: u32,
) -> Result<RegionPartition, SimError> {
    let census = rssi_census(nodes)?;
    let mut p = partition(nodes, &census, band_halfwidth, desired_offset);
    region_thresholds(&mut p, nodes);
    refresh_presence(&mut p, nodes);
    Ok(p)
}

// ---------------------------------------------------------------------------
