//! Result files: rounds.csv, summary.json, manifest.json, and the
//! comparison/sweep aggregates. All writes go through a temp-file rename so
//! readers never see a half-written file.

use std::fs;
use std::path::{Path, PathBuf};

use east_sim::{summarize, RoundMetrics, RunSummary, SimConfig};
use serde::{Deserialize, Serialize};

use crate::commands::CliError;

/// Everything needed to reproduce a run plus where its outputs went.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: SimConfig,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schemes: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seeds: Option<Vec<u64>>,
    pub started_at: String,
    pub finished_at: String,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, config: &SimConfig) -> RunManifest {
        RunManifest {
            tool: "east-sim".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config: config.clone(),
            seed: config.seed,
            schemes: None,
            seeds: None,
            started_at: now_rfc3339(),
            finished_at: String::new(),
            outputs: Vec::new(),
        }
    }
}

pub fn now_rfc3339() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

// --- number formatting ------------------------------------------------------

/// Formats with 6 significant digits: fixed notation in the everyday range,
/// scientific outside it, trailing zeros trimmed. Absent values print "nan".
pub fn fmt_sig(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.5e}");
    let (_, exp) = sci.split_once('e').expect("scientific form");
    let exp: i32 = exp.parse().expect("scientific exponent");
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        let (mantissa, _) = sci.split_once('e').expect("scientific form");
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    let s = s.trim_end_matches('0');
    s.trim_end_matches('.').to_string()
}

fn parse_sig(x: f64) -> f64 {
    fmt_sig(x).parse::<f64>().expect("fmt_sig output parses")
}

/// Copies the records with every CSV-exposed float replaced by the value a
/// reader of rounds.csv actually sees, and totals re-summed from those. The
/// summary is computed from this copy so its statistics can be recovered from
/// the CSV alone.
pub fn rounded_metrics(metrics: &[RoundMetrics]) -> Vec<RoundMetrics> {
    metrics
        .iter()
        .map(|m| {
            let mut m = m.clone();
            m.ref_pos.x = parse_sig(m.ref_pos.x);
            m.ref_pos.y = parse_sig(m.ref_pos.y);
            for r in &mut m.regions {
                r.threshold_dbm = r.threshold_dbm.map(parse_sig);
                r.p_save_levels = parse_sig(r.p_save_levels);
                r.p_save_db = parse_sig(r.p_save_db);
                r.prr = parse_sig(r.prr);
            }
            m.total_p_save_levels = m.regions.iter().map(|r| r.p_save_levels).sum();
            m.total_p_save_db = m.regions.iter().map(|r| r.p_save_db).sum();
            m
        })
        .collect()
}

// --- file plumbing ----------------------------------------------------------

pub fn io_err(context: &str, path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{context} {}: {e}", path.display()))
}

/// Writes through a sibling temp file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let mut tmp_name = path.as_os_str().to_owned();
    tmp_name.push(".tmp");
    let tmp = PathBuf::from(tmp_name);
    fs::write(&tmp, bytes).map_err(|e| io_err("cannot write", &tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| io_err("cannot finalize", path, e))
}

pub fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|e| io_err("cannot create", path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut bytes = serde_json::to_vec_pretty(value)
        .map_err(|e| io_err("cannot serialize", path, e))?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

/// Stamps the finish time and output list, then writes the manifest.
pub fn write_manifest(
    path: &Path,
    mut manifest: RunManifest,
    outputs: Vec<String>,
) -> Result<(), CliError> {
    manifest.finished_at = now_rfc3339();
    manifest.outputs = outputs;
    write_json(path, &manifest)
}

// --- rounds.csv -------------------------------------------------------------

pub const ROUNDS_HEADER: [&str; 27] = [
    "round",
    "ref_x",
    "ref_y",
    "a_count",
    "a_n_c",
    "a_n_d",
    "a_threshold_dbm",
    "a_p_save_levels",
    "a_p_save_db",
    "a_prr",
    "b_count",
    "b_n_c",
    "b_n_d",
    "b_threshold_dbm",
    "b_p_save_levels",
    "b_p_save_db",
    "b_prr",
    "c_count",
    "c_n_c",
    "c_n_d",
    "c_threshold_dbm",
    "c_p_save_levels",
    "c_p_save_db",
    "c_prr",
    "beacons",
    "acks",
    "adjust_msgs",
];

pub fn rounds_csv_bytes(metrics: &[RoundMetrics]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| CliError::Io(format!("cannot encode rounds.csv: {e}"));
    w.write_record(ROUNDS_HEADER).map_err(fail)?;
    for m in metrics {
        let mut row: Vec<String> = Vec::with_capacity(ROUNDS_HEADER.len());
        row.push(m.round.to_string());
        row.push(fmt_sig(m.ref_pos.x));
        row.push(fmt_sig(m.ref_pos.y));
        for r in &m.regions {
            row.push(r.count.to_string());
            row.push(r.n_c.to_string());
            row.push(r.n_d.to_string());
            row.push(r.threshold_dbm.map_or_else(|| "nan".into(), fmt_sig));
            row.push(fmt_sig(r.p_save_levels));
            row.push(fmt_sig(r.p_save_db));
            row.push(fmt_sig(r.prr));
        }
        row.push(m.traffic.beacons.to_string());
        row.push(m.traffic.acks.to_string());
        row.push(m.traffic.power_adjust_msgs.to_string());
        w.write_record(&row).map_err(fail)?;
    }
    w.into_inner()
        .map_err(|e| CliError::Io(format!("cannot encode rounds.csv: {e}")))
}

/// Writes rounds.csv, summary.json, and manifest.json for one finished run.
/// Returns the summary that was written (computed from the rounded records).
pub fn write_run_outputs(
    out_dir: &Path,
    config: &SimConfig,
    metrics: &[RoundMetrics],
    mut manifest: RunManifest,
) -> Result<RunSummary, CliError> {
    create_dir(out_dir)?;
    write_atomic(&out_dir.join("rounds.csv"), &rounds_csv_bytes(metrics)?)?;
    let summary = summarize(&rounded_metrics(metrics));
    write_json(&out_dir.join("summary.json"), &summary)?;
    manifest.config = config.clone();
    manifest.seed = config.seed;
    let outputs = ["rounds.csv", "summary.json", "manifest.json"]
        .map(String::from)
        .to_vec();
    write_manifest(&out_dir.join("manifest.json"), manifest, outputs)?;
    Ok(summary)
}

// --- comparison outputs -----------------------------------------------------

#[derive(Clone, Copy, Debug, Serialize)]
pub struct RegionDeltas {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub total: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SchemeDelta {
    pub scheme: String,
    /// Mean over rounds of (scheme level sum − baseline level sum).
    pub mean_level_delta: RegionDeltas,
}

#[derive(Clone, Debug, Serialize)]
pub struct CompareSummary {
    pub baseline: String,
    pub rounds: u32,
    pub deltas: Vec<SchemeDelta>,
}

fn snake(name: &str) -> String {
    name.replace('-', "_")
}

/// Emits comparison.csv (per-round per-region level-sum differences against
/// the baseline) and returns the mean deltas, both read back from the same
/// 6-significant-digit values the CSV carries.
pub fn write_comparison(
    out_dir: &Path,
    baseline: &str,
    runs: &[(String, Vec<RoundMetrics>)],
) -> Result<CompareSummary, CliError> {
    let base = &runs
        .iter()
        .find(|(name, _)| name == baseline)
        .expect("baseline is one of the runs")
        .1;
    let others: Vec<&(String, Vec<RoundMetrics>)> =
        runs.iter().filter(|(name, _)| name != baseline).collect();

    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| CliError::Io(format!("cannot encode comparison.csv: {e}"));
    let mut header = vec!["round".to_string()];
    for (name, _) in &others {
        for col in ["a", "b", "c", "total"] {
            header.push(format!("{}_minus_{}_{col}", snake(name), snake(baseline)));
        }
    }
    w.write_record(&header).map_err(fail)?;

    let rounds = base.len();
    let mut sums: Vec<[f64; 4]> = vec![[0.0; 4]; others.len()];
    for round in 0..rounds {
        let mut row = vec![base[round].round.to_string()];
        for (i, (_, metrics)) in others.iter().enumerate() {
            let m = &metrics[round];
            let b = &base[round];
            let deltas = [
                m.regions[0].level_sum - b.regions[0].level_sum,
                m.regions[1].level_sum - b.regions[1].level_sum,
                m.regions[2].level_sum - b.regions[2].level_sum,
                m.level_sum - b.level_sum,
            ];
            for (k, d) in deltas.iter().enumerate() {
                row.push(fmt_sig(*d));
                sums[i][k] += parse_sig(*d);
            }
        }
        w.write_record(&row).map_err(fail)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::Io(format!("cannot encode comparison.csv: {e}")))?;
    write_atomic(&out_dir.join("comparison.csv"), &bytes)?;

    let summary = CompareSummary {
        baseline: baseline.to_string(),
        rounds: rounds as u32,
        deltas: others
            .iter()
            .enumerate()
            .map(|(i, (name, _))| SchemeDelta {
                scheme: name.clone(),
                mean_level_delta: RegionDeltas {
                    a: sums[i][0] / rounds as f64,
                    b: sums[i][1] / rounds as f64,
                    c: sums[i][2] / rounds as f64,
                    total: sums[i][3] / rounds as f64,
                },
            })
            .collect(),
    };
    write_json(&out_dir.join("comparison_summary.json"), &summary)?;
    Ok(summary)
}

// --- sweep outputs ----------------------------------------------------------

pub const AGGREGATE_HEADER: [&str; 10] = [
    "seed",
    "a_mean_p_save_levels",
    "a_mean_prr",
    "b_mean_p_save_levels",
    "b_mean_prr",
    "c_mean_p_save_levels",
    "c_mean_prr",
    "beacons",
    "acks",
    "adjust_msgs",
];

/// One aggregate row per seed, from each run's (already rounded) summary.
pub fn write_aggregate(out_dir: &Path, rows: &[(u64, RunSummary)]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| CliError::Io(format!("cannot encode aggregate.csv: {e}"));
    w.write_record(AGGREGATE_HEADER).map_err(fail)?;
    for (seed, summary) in rows {
        let mut row = vec![seed.to_string()];
        for region in &summary.regions {
            row.push(fmt_sig(region.p_save_levels.mean));
            row.push(fmt_sig(region.prr.mean));
        }
        row.push(summary.traffic_totals.beacons.to_string());
        row.push(summary.traffic_totals.acks.to_string());
        row.push(summary.traffic_totals.power_adjust_msgs.to_string());
        w.write_record(&row).map_err(fail)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::Io(format!("cannot encode aggregate.csv: {e}")))?;
    write_atomic(&out_dir.join("aggregate.csv"), &bytes)
}

// ---------------------------------------------------------------------------
