//! Monte Carlo RMSE sweeps and the DOF comparison table.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coarray::{max_contiguous_segment, sdca};
use crate::error::{Error, Result};
use crate::estimation::Pipeline;
use crate::geometry::{
    best_coprime_pair, build_nested, build_secna, esna_dof_formula, rsna1_dof_formula, secna_dof_formula,
    ArraySpec,
};
use crate::signal::{gen_snapshots, Scenario};

/// Trials whose failure share exceeds this are flagged in reports.
pub const FAILURE_FLAG_FRACTION: f64 = 0.10;

/// `q` angles evenly spaced over `[lo, hi]`, endpoints included.
pub fn uniform_angles(q: usize, lo: f64, hi: f64) -> Vec<f64> {
    match q {
        0 => vec![],
        1 => vec![(lo + hi) / 2.0],
        _ => {
            let step = (hi - lo) / (q - 1) as f64;
            (0..q).map(|i| lo + step * i as f64).collect()
        }
    }
}

/// Root mean square error over `K` trials and `Q` sources.
///
/// Estimates and truth are paired in ascending order.
pub fn rmse(estimates: &[Vec<f64>], truth: &[f64]) -> Result<f64> {
    if estimates.is_empty() {
        return Err(Error::UndefinedRmse);
    }
    let mut sorted_truth = truth.to_vec();
    sorted_truth.sort_by(f64::total_cmp);
    let mut sum = 0.0;
    for est in estimates {
        if est.len() != truth.len() {
            return Err(Error::param(format!(
                "trial has {} estimates for {} sources",
                est.len(),
                truth.len()
            )));
        }
        let mut est = est.clone();
        est.sort_by(f64::total_cmp);
        sum += est.iter().zip(&sorted_truth).map(|(e, t)| (e - t).powi(2)).sum::<f64>();
    }
    Ok((sum / (estimates.len() * truth.len()) as f64).sqrt())
}

/// Spearman rank correlation; ties receive their average rank.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut out = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0 + 1.0;
            for &k in &idx[i..=j] {
                out[k] = avg;
            }
            i = j + 1;
        }
        out
    }
    assert_eq!(x.len(), y.len(), "spearman needs equal-length samples");
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent stream seed for a `(master, indices...)` tuple.
pub fn derive_seed(master: u64, indices: &[u64]) -> u64 {
    indices
        .iter()
        .fold(splitmix64(master), |acc, &i| splitmix64(acc ^ splitmix64(i)))
}

/// How non-circularity phases are chosen for each trial.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseMode {
    #[default]
    Zero,
    /// Uniform on `[0, 2π)`, fixed within a trial.
    UniformRandom,
}

/// Swept variable and the value held fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variable", rename_all = "snake_case")]
pub enum Sweep {
    Snr { snr_db: Vec<f64>, snapshots: usize },
    Snapshots { snapshots: Vec<usize>, snr_db: f64 },
}

impl Sweep {
    fn name(&self) -> &'static str {
        match self {
            Sweep::Snr { .. } => "snr_db",
            Sweep::Snapshots { .. } => "snapshots",
        }
    }

    fn len(&self) -> usize {
        match self {
            Sweep::Snr { snr_db, .. } => snr_db.len(),
            Sweep::Snapshots { snapshots, .. } => snapshots.len(),
        }
    }

    /// `(sweep value, snr_db, snapshots)` at point `i`.
    fn point(&self, i: usize) -> (f64, f64, usize) {
        match self {
            Sweep::Snr { snr_db, snapshots } => (snr_db[i], snr_db[i], *snapshots),
            Sweep::Snapshots { snapshots, snr_db } => (snapshots[i] as f64, *snr_db, snapshots[i]),
        }
    }
}

fn default_grid_step() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub arrays: Vec<ArraySpec>,
    /// Number of sources, spread uniformly over `angle_span`.
    pub q: usize,
    pub angle_span: [f64; 2],
    pub sweep: Sweep,
    pub trials: usize,
    pub master_seed: u64,
    #[serde(default = "default_grid_step")]
    pub grid_step: f64,
    #[serde(default)]
    pub phases: PhaseMode,
}

impl ExperimentConfig {
    /// 13-sensor SECNA(3,4) vs nested(6,7), 31 sources over ±60°, T = 2000,
    /// SNR from -5 to 20 dB.
    pub fn snr_benchmark(trials: usize, master_seed: u64) -> Self {
        ExperimentConfig {
            arrays: vec![ArraySpec::Secna { m: 3, n: 4 }, ArraySpec::Nested { n1: 6, n2: 7 }],
            q: 31,
            angle_span: [-60.0, 60.0],
            sweep: Sweep::Snr {
                snr_db: vec![-5.0, 0.0, 5.0, 10.0, 15.0, 20.0],
                snapshots: 2000,
            },
            trials,
            master_seed,
            grid_step: default_grid_step(),
            phases: PhaseMode::Zero,
        }
    }

    /// Same arrays and sources at 20 dB, snapshots from 300 to 2600.
    pub fn snapshot_benchmark(trials: usize, master_seed: u64) -> Self {
        ExperimentConfig {
            sweep: Sweep::Snapshots {
                snapshots: vec![300, 1000, 2000, 2600],
                snr_db: 20.0,
            },
            ..Self::snr_benchmark(trials, master_seed)
        }
    }

    pub fn truth(&self) -> Vec<f64> {
        uniform_angles(self.q, self.angle_span[0], self.angle_span[1])
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::param("trial count must be at least 1"));
        }
        if self.sweep.len() == 0 {
            return Err(Error::param("sweep list is empty"));
        }
        if let Sweep::Snapshots { snapshots, .. } = &self.sweep {
            if snapshots.contains(&0) {
                return Err(Error::param("snapshot counts must be at least 1"));
            }
        }
        if let Sweep::Snr { snapshots: 0, .. } = self.sweep {
            return Err(Error::param("snapshot count must be at least 1"));
        }
        if self.arrays.is_empty() {
            return Err(Error::param("no arrays to compare"));
        }
        if self.q == 0 {
            return Err(Error::param("source count must be at least 1"));
        }
        let [lo, hi] = self.angle_span;
        if !(lo > -90.0 && hi < 90.0 && lo <= hi) {
            return Err(Error::param(format!("angle span [{lo}, {hi}] must lie inside (-90, 90)")));
        }
        for spec in &self.arrays {
            spec.build()?;
        }
        Ok(())
    }
}

/// Aggregate over the trials of one (array, sweep value) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmsePoint {
    pub sweep_value: f64,
    pub array: String,
    /// Degrees; `None` when every trial failed.
    pub rmse: Option<f64>,
    pub trials: usize,
    /// Trials excluded because fewer peaks than sources were found.
    pub failures: usize,
    /// Failures exceeded [`FAILURE_FLAG_FRACTION`] of the trials.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmseReport {
    pub variable: String,
    pub points: Vec<RmsePoint>,
    pub config: ExperimentConfig,
    pub master_seed: u64,
    pub wall_time_secs: f64,
}

impl RmseReport {
    /// `(sweep value, rmse)` for one array label, in sweep order.
    pub fn series(&self, array: &str) -> Vec<(f64, Option<f64>)> {
        self.points
            .iter()
            .filter(|p| p.array == array)
            .map(|p| (p.sweep_value, p.rmse))
            .collect()
    }

    /// CSV `sweep_value,array,rmse,failures`; no timing, so reruns are byte-identical.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["sweep_value", "array", "rmse", "failures"])?;
        for p in &self.points {
            w.write_record([
                p.sweep_value.to_string(),
                p.array.clone(),
                p.rmse.map(|r| r.to_string()).unwrap_or_default(),
                p.failures.to_string(),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Result of one Monte Carlo trial: sorted estimates, or `None` on shortfall.
fn run_trial(
    pipeline: &Pipeline,
    cfg: &ExperimentConfig,
    truth: &[f64],
    seed: u64,
    snr_db: f64,
    snapshots: usize,
) -> Result<Option<Vec<f64>>> {
    let mut scenario = Scenario::with_snr(truth.to_vec(), snr_db, snapshots, seed);
    if cfg.phases == PhaseMode::UniformRandom {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[u64::MAX]));
        scenario.nc_phases = (0..truth.len())
            .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
            .collect();
    }
    let x = gen_snapshots(pipeline.array(), &scenario)?;
    let spectrum = pipeline.estimate(&x, cfg.q)?;
    if spectrum.shortfall || spectrum.peaks.len() < cfg.q {
        Ok(None)
    } else {
        Ok(Some(spectrum.peaks))
    }
}

/// Runs every (array, sweep point, trial) cell of `cfg`.
///
/// Trial seeds come from `(master_seed, array_index, sweep_index, trial_index)`,
/// and results are reduced in index order, so the output does not depend on
/// thread scheduling.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<RmseReport> {
    cfg.validate()?;
    let started = Instant::now();
    let truth = cfg.truth();
    let pipelines = cfg
        .arrays
        .iter()
        .map(|spec| {
            let p = Pipeline::music(spec.build()?, cfg.grid_step);
            if cfg.q > p.capacity() {
                return Err(Error::Capacity { requested: cfg.q, capacity: p.capacity() });
            }
            Ok(p)
        })
        .collect::<Result<Vec<_>>>()?;

    let n_points = cfg.sweep.len();
    let tasks: Vec<(usize, usize, usize)> = (0..pipelines.len())
        .flat_map(|a| (0..n_points).flat_map(move |s| (0..cfg.trials).map(move |k| (a, s, k))))
        .collect();
    let outcomes = tasks
        .par_iter()
        .map(|&(a, s, k)| {
            let (_, snr_db, snapshots) = cfg.sweep.point(s);
            let seed = derive_seed(cfg.master_seed, &[a as u64, s as u64, k as u64]);
            run_trial(&pipelines[a], cfg, &truth, seed, snr_db, snapshots)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut points = Vec::with_capacity(pipelines.len() * n_points);
    for (cell, chunk) in outcomes.chunks(cfg.trials).enumerate() {
        let (a, s) = (cell / n_points, cell % n_points);
        let successes: Vec<Vec<f64>> = chunk.iter().flatten().cloned().collect();
        let failures = chunk.len() - successes.len();
        let rmse = match rmse(&successes, &truth) {
            Ok(r) => Some(r),
            Err(Error::UndefinedRmse) => None,
            Err(e) => return Err(e),
        };
        points.push(RmsePoint {
            sweep_value: cfg.sweep.point(s).0,
            array: cfg.arrays[a].to_string(),
            rmse,
            trials: cfg.trials,
            failures,
            flagged: failures as f64 > FAILURE_FLAG_FRACTION * cfg.trials as f64,
        });
    }

    Ok(RmseReport {
        variable: cfg.sweep.name().to_string(),
        points,
        config: cfg.clone(),
        master_seed: cfg.master_seed,
        wall_time_secs: started.elapsed().as_secs_f64(),
    })
}

pub fn sweep_snr(cfg: &ExperimentConfig) -> Result<RmseReport> {
    match cfg.sweep {
        Sweep::Snr { .. } => run_sweep(cfg),
        _ => Err(Error::param("configuration does not describe an SNR sweep")),
    }
}

pub fn sweep_snapshots(cfg: &ExperimentConfig) -> Result<RmseReport> {
    match cfg.sweep {
        Sweep::Snapshots { .. } => run_sweep(cfg),
        _ => Err(Error::param("configuration does not describe a snapshot sweep")),
    }
}

/// Published comparison values `(budget, [NA, ESNA, RSNA, SECNA])`.
pub const REFERENCE_DOF: [(u32, [u64; 4]); 5] = [
    (9, [61, 57, 99, 111]),
    (13, [113, 121, 195, 219]),
    (19, [221, 427, 399, 441]),
    (23, [313, 609, 575, 645]),
    (27, [421, 823, 783, 873]),
];

fn reference_dof(budget: u32, column: usize) -> Option<u64> {
    REFERENCE_DOF.iter().find(|(b, _)| *b == budget).map(|(_, v)| v[column])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    BruteForce,
    ClosedForm,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DofEntry {
    pub value: u64,
    pub provenance: Provenance,
    /// Parameters used, e.g. `nested(6,7)`.
    pub params: String,
    pub reference: Option<u64>,
    /// `Some(false)` marks a disagreement with the published table.
    pub matches_reference: Option<bool>,
}

impl DofEntry {
    fn new(value: u64, provenance: Provenance, params: String, reference: Option<u64>) -> Self {
        DofEntry {
            value,
            provenance,
            params,
            reference,
            matches_reference: reference.map(|r| r == value),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DofRow {
    pub sensors: u32,
    pub na: DofEntry,
    pub esna: DofEntry,
    pub rsna: DofEntry,
    pub secna: DofEntry,
}

impl DofRow {
    /// SECNA reaches at least the DOF of every other column.
    pub fn secna_dominates(&self) -> bool {
        [&self.na, &self.esna, &self.rsna].iter().all(|e| self.secna.value >= e.value)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DofTable {
    pub rows: Vec<DofRow>,
}

impl DofTable {
    pub fn mismatches(&self) -> Vec<(u32, &'static str)> {
        let mut out = Vec::new();
        for r in &self.rows {
            for (name, e) in [("na", &r.na), ("esna", &r.esna), ("rsna", &r.rsna), ("secna", &r.secna)] {
                if e.matches_reference == Some(false) {
                    out.push((r.sensors, name));
                }
            }
        }
        out
    }
}

/// DOF comparison for odd sensor budgets `P >= 9`.
///
/// NA and SECNA are enumerated; ESNA and RSNA-I use their closed forms. All
/// two-parameter families use the balanced split `((P-1)/2, (P+1)/2)`.
pub fn dof_table(budgets: &[u32]) -> Result<DofTable> {
    let rows = budgets
        .iter()
        .map(|&p| {
            if p < 9 || p % 2 == 0 {
                return Err(Error::param(format!("budget {p} must be odd and >= 9")));
            }
            let (lo, hi) = ((p - 1) / 2, p.div_ceil(2));

            let nested = build_nested(lo, hi)?;
            let na = max_contiguous_segment(&sdca(&nested))?.dof;

            let pair = best_coprime_pair(p)?;
            let secna = max_contiguous_segment(&sdca(&build_secna(pair)?.array()))?.dof;
            let formula = secna_dof_formula(pair);
            if secna != formula {
                return Err(Error::Invariant(format!(
                    "SECNA({},{}) enumerates DOF {secna} but the closed form gives {formula}",
                    pair.m(),
                    pair.n()
                )));
            }

            Ok(DofRow {
                sensors: p,
                na: DofEntry::new(na, Provenance::BruteForce, format!("nested({lo},{hi})"), reference_dof(p, 0)),
                esna: DofEntry::new(esna_dof_formula(lo, hi)?, Provenance::ClosedForm, format!("esna({lo},{hi})"), reference_dof(p, 1)),
                rsna: DofEntry::new(rsna1_dof_formula(lo, hi)?, Provenance::ClosedForm, format!("rsna1({lo},{hi})"), reference_dof(p, 2)),
                secna: DofEntry::new(
                    secna,
                    Provenance::BruteForce,
                    format!("secna({},{})", pair.m(), pair.n()),
                    reference_dof(p, 3),
                ),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DofTable { rows })
}
