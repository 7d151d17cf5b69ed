//! Acceptance criteria. Each test prints one `[PASS]`/`[FAIL]` line.
//!
//! Run with `cargo test -p secna --test acceptance -- --nocapture`.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use secna::coarray::{build_virtual_ula, max_contiguous_segment, sdca};
use secna::estimation::{spatial_smoothing, virtualize, ExtendedCovariance, Pipeline};
use secna::geometry::{build_nested, build_secna, secna_dof_formula, CoprimePair, Design, SensorArray};
use secna::harness::{derive_seed, dof_table, run_sweep, spearman, uniform_angles, ExperimentConfig, RmseReport, Sweep};
use secna::signal::{gen_snapshots, Scenario};
use secna::C64;

const MASTER_SEED: u64 = 1;

fn verdict(id: u32, name: &str, ok: bool, detail: &str) {
    println!("[{}] criterion {id}: {name} ({detail})", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {id} failed: {detail}");
}

/// Noise-free `R_NC` entry by entry from sensor positions, φ = 0.
fn analytic_rnc(positions: &[f64], angles: &[f64], powers: &[f64]) -> DMatrix<C64> {
    let m = positions.len();
    let signed: Vec<f64> = positions.iter().copied().chain(positions.iter().map(|p| -p)).collect();
    DMatrix::from_fn(2 * m, 2 * m, |a, b| {
        angles
            .iter()
            .zip(powers)
            .map(|(th, p)| C64::from_polar(*p, PI * (signed[a] - signed[b]) * th.to_radians().sin()))
            .sum()
    })
}

#[test]
fn c1_secna_construction() {
    let start = Instant::now();
    let d = build_secna(CoprimePair::new(5, 3).unwrap()).unwrap();
    let elapsed = start.elapsed();
    let ok = d.subarray(1) == [32.0, 35.0, 38.0, 41.0, 44.0]
        && d.subarray(2) == [32.0, 37.0, 42.0, 47.0]
        && d.subarray(3) == [55.0, 63.0, 71.0, 79.0, 87.0, 95.0, 103.0]
        && d.array().len() == 15
        && elapsed < Duration::from_millis(1);
    verdict(1, "SECNA(5,3) layout", ok, &format!("15 sensors, {elapsed:?}"));
}

#[test]
fn c2_dof_formula_matches_enumeration() {
    let start = Instant::now();
    let mut checked = Vec::new();
    let mut bad = Vec::new();
    for sum in 4..=16u32 {
        for m in (1..sum).step_by(2) {
            let n = sum - m;
            let Ok(pair) = CoprimePair::new(m, n) else { continue };
            if n % 2 == 0 {
                continue;
            }
            let dof = max_contiguous_segment(&sdca(&build_secna(pair).unwrap().array())).unwrap().dof;
            if dof != secna_dof_formula(pair) {
                bad.push((m, n, dof, secna_dof_formula(pair)));
            }
            checked.push((m, n));
        }
    }
    let elapsed = start.elapsed();
    let five_three = max_contiguous_segment(&sdca(&build_secna(CoprimePair::new(5, 3).unwrap()).unwrap().array()))
        .unwrap()
        .dof;
    let ok = bad.is_empty() && five_three == 285 && !checked.is_empty() && elapsed < Duration::from_secs(5);
    verdict(
        2,
        "closed-form DOF equals enumerated SDCA segment",
        ok,
        &format!("{} odd pairs, mismatches {bad:?}, (5,3) -> {five_three}, {elapsed:?}", checked.len()),
    );
}

#[test]
fn c3_dof_table() {
    let start = Instant::now();
    let t = dof_table(&[9, 13, 19, 23, 27]).unwrap();
    let elapsed = start.elapsed();
    let col = |f: fn(&secna::harness::DofRow) -> u64| t.rows.iter().map(f).collect::<Vec<_>>();
    let secna = col(|r| r.secna.value);
    let na = col(|r| r.na.value);
    let rsna = col(|r| r.rsna.value);
    let esna = col(|r| r.esna.value);
    let esna_flags: Vec<Option<bool>> = t.rows.iter().map(|r| r.esna.matches_reference).collect();
    let ok = secna == [111, 219, 441, 645, 873]
        && na == [61, 113, 221, 313, 421]
        && rsna == [99, 195, 399, 575, 783]
        && esna[2..] == [427, 609, 823]
        && esna_flags == [Some(false), Some(false), Some(true), Some(true), Some(true)]
        && elapsed < Duration::from_secs(10);
    verdict(
        3,
        "DOF comparison table",
        ok,
        &format!("SECNA {secna:?} NA {na:?} RSNA {rsna:?} ESNA {esna:?} (rows 9/13 flagged), {elapsed:?}"),
    );
}

#[test]
fn c4_selection_map_oracle() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(MASTER_SEED, &[4]));
    let mut worst: f64 = 0.0;
    for trial in 0..20 {
        let m = rng.random_range(2..=8usize);
        let half = trial % 2 == 1;
        let mut picks: Vec<i64> = Vec::new();
        while picks.len() < m {
            let p = rng.random_range(0..30i64);
            if !picks.contains(&p) {
                picks.push(p);
            }
        }
        picks.sort_unstable();
        let half_units: Vec<i64> = picks.iter().map(|p| 2 * p + half as i64).collect();
        let arr = SensorArray::from_half_units(half_units, Design::Custom).unwrap();

        let angles: Vec<f64> = (0..3).map(|_| rng.random_range(-80.0..80.0)).collect();
        let powers: Vec<f64> = (0..3).map(|_| rng.random_range(0.5..2.0)).collect();
        let r = ExtendedCovariance::from_matrix(analytic_rnc(&arr.positions(), &angles, &powers), 1).unwrap();
        let v = build_virtual_ula(&arr);
        let z = virtualize(&r, &v).unwrap();
        let l = v.half_length() as i64;
        for lag in -l..=l {
            let expected: C64 = angles
                .iter()
                .zip(&powers)
                .map(|(th, p)| C64::from_polar(*p, PI * lag as f64 * th.to_radians().sin()))
                .sum();
            worst = worst.max((z.value(lag) - expected).norm());
        }
    }
    let elapsed = start.elapsed();
    verdict(
        4,
        "selection map reproduces virtual ULA measurement",
        worst < 1e-10 && elapsed < Duration::from_secs(10),
        &format!("20 arrays, max abs error {worst:.2e}, {elapsed:?}"),
    );
}

#[test]
fn c5_smoothing_rank() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(MASTER_SEED, &[5]));
    let arrays = [
        build_secna(CoprimePair::new(3, 4).unwrap()).unwrap().array(),
        build_secna(CoprimePair::new(2, 3).unwrap()).unwrap().array(),
        build_nested(6, 7).unwrap(),
    ];
    let mut worst_leak: f64 = 0.0;
    let mut weakest_signal: f64 = 1.0;
    for arr in &arrays {
        let v = build_virtual_ula(arr);
        for q in 1..=5usize {
            // One source per 24° sector of [-60°, 60°], jittered.
            let angles: Vec<f64> = (0..q)
                .map(|i| -60.0 + 120.0 * (i as f64 + rng.random_range(0.2..0.8)) / q as f64)
                .collect();
            let powers: Vec<f64> = (0..q).map(|_| rng.random_range(0.5..2.0)).collect();
            let r = ExtendedCovariance::from_matrix(analytic_rnc(&arr.positions(), &angles, &powers), 1).unwrap();
            let eig = spatial_smoothing(&virtualize(&r, &v).unwrap()).eigenvalues_desc();
            worst_leak = worst_leak.max(eig[q].abs() / eig[0]);
            weakest_signal = weakest_signal.min(eig[q - 1] / eig[0]);
        }
    }
    let elapsed = start.elapsed();
    verdict(
        5,
        "noise-free smoothed covariance has rank Q",
        worst_leak < 1e-8 && weakest_signal > 1e-6 && elapsed < Duration::from_secs(5),
        &format!("max σ_(Q+1)/σ_1 {worst_leak:.2e}, min σ_Q/σ_1 {weakest_signal:.2e}, {elapsed:?}"),
    );
}

#[test]
fn c6_underdetermined_recovery() {
    let arr = build_secna(CoprimePair::new(3, 4).unwrap()).unwrap().array();
    assert_eq!(arr.len(), 13);
    let pipeline = Pipeline::music(arr.clone(), 0.1);
    let truth = uniform_angles(31, -60.0, 60.0);
    let trials = 50;
    let successes = (0..trials)
        .filter(|&k| {
            let seed = derive_seed(MASTER_SEED, &[6, k as u64]);
            let x = gen_snapshots(&arr, &Scenario::with_snr(truth.clone(), 20.0, 2000, seed)).unwrap();
            let s = pipeline.estimate(&x, 31).unwrap();
            s.peaks.len() == 31 && s.peaks.iter().zip(&truth).all(|(e, t)| (e - t).abs() <= 0.5)
        })
        .count();
    let rate = successes as f64 / trials as f64;
    verdict(
        6,
        "31 sources on 13 sensors recovered within 0.5°",
        rate >= 0.9,
        &format!("{successes}/{trials} trials fully resolved"),
    );
}

fn series(report: &RmseReport, label: &str) -> Vec<(f64, f64)> {
    report
        .series(label)
        .into_iter()
        .map(|(x, r)| (x, r.unwrap_or(f64::INFINITY)))
        .collect()
}

fn check_trend(report: &RmseReport) -> (bool, String) {
    let secna = series(report, "secna:3,4");
    let na = series(report, "nested:6,7");
    let below = secna.iter().zip(&na).all(|(s, n)| s.1 <= n.1);
    let rho = |s: &[(f64, f64)]| {
        let (x, y): (Vec<f64>, Vec<f64>) = s.iter().copied().unzip();
        spearman(&x, &y)
    };
    let (rs, rn) = (rho(&secna), rho(&na));
    let ok = below && rs < 0.0 && rn < 0.0;
    let fmt = |s: &[(f64, f64)]| s.iter().map(|(x, r)| format!("{x}:{r:.4}")).collect::<Vec<_>>().join(" ");
    (
        ok,
        format!(
            "{}: SECNA [{}] ρ={rs:.2}; NA [{}] ρ={rn:.2}",
            report.variable,
            fmt(&secna),
            fmt(&na)
        ),
    )
}

#[test]
fn c7_comparative_trend() {
    let snr = run_sweep(&ExperimentConfig::snr_benchmark(50, MASTER_SEED)).unwrap();
    let snaps = run_sweep(&ExperimentConfig::snapshot_benchmark(50, MASTER_SEED)).unwrap();
    let (ok_snr, d_snr) = check_trend(&snr);
    let (ok_snap, d_snap) = check_trend(&snaps);
    let failures: usize = snr.points.iter().chain(&snaps.points).map(|p| p.failures).sum();
    verdict(
        7,
        "SECNA below NA with falling RMSE",
        ok_snr && ok_snap,
        &format!("{d_snr}; {d_snap}; excluded trials {failures}"),
    );
}

#[test]
fn c8_determinism() {
    let mut cfg = ExperimentConfig::snr_benchmark(4, MASTER_SEED);
    cfg.sweep = Sweep::Snr { snr_db: vec![-5.0, 20.0], snapshots: 500 };
    let a = run_sweep(&cfg).unwrap().to_csv().unwrap();
    let b = run_sweep(&cfg).unwrap().to_csv().unwrap();
    verdict(8, "sweep CSV is byte-identical on rerun", a == b, &format!("{} bytes", a.len()));
}
