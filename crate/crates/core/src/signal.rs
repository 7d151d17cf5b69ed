//! Synthetic non-circular narrowband snapshots, `x(t) = A Ψ s_R(t) + e(t)`.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::SensorArray;
use crate::C64;

/// One simulation draw: sources, noise, snapshot count and seed.
///
/// SNR is `10 log10(δ_q² / δ_n²)`; with unit source powers the noise power is
/// `10^(-SNR/10)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub angles_deg: Vec<f64>,
    pub powers: Vec<f64>,
    /// Non-circularity phases `φ_q` (radians). Empty means all zero.
    #[serde(default)]
    pub nc_phases: Vec<f64>,
    pub noise_power: f64,
    pub snapshots: usize,
    pub seed: u64,
}

impl Scenario {
    /// Unit-power sources at `angles_deg`, zero phases, noise set from `snr_db`.
    pub fn with_snr(angles_deg: Vec<f64>, snr_db: f64, snapshots: usize, seed: u64) -> Self {
        let q = angles_deg.len();
        Scenario {
            angles_deg,
            powers: vec![1.0; q],
            nc_phases: vec![0.0; q],
            noise_power: 10f64.powf(-snr_db / 10.0),
            snapshots,
            seed,
        }
    }

    pub fn source_count(&self) -> usize {
        self.angles_deg.len()
    }

    pub fn phases(&self) -> Vec<f64> {
        if self.nc_phases.is_empty() {
            vec![0.0; self.angles_deg.len()]
        } else {
            self.nc_phases.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let q = self.angles_deg.len();
        if q == 0 {
            return Err(Error::param("scenario needs at least one source"));
        }
        if self.powers.len() != q || !(self.nc_phases.is_empty() || self.nc_phases.len() == q) {
            return Err(Error::param("angles, powers and nc_phases must have equal lengths"));
        }
        if let Some(a) = self.angles_deg.iter().find(|a| a.is_nan() || a.abs() >= 90.0) {
            return Err(Error::param(format!("source angle {a} outside (-90, 90)")));
        }
        if self.powers.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::param("source powers must be finite and non-negative"));
        }
        if !self.noise_power.is_finite() || self.noise_power < 0.0 {
            return Err(Error::param("noise power must be finite and non-negative"));
        }
        if self.snapshots == 0 {
            return Err(Error::param("snapshot count must be at least 1"));
        }
        Ok(())
    }
}

/// `a(θ)_i = exp(jπ w_i sin θ)`, positions in units of `d = λ/2`.
pub fn steering_vector(arr: &SensorArray, theta_deg: f64) -> Result<DVector<C64>> {
    if theta_deg.is_nan() || theta_deg.abs() >= 90.0 {
        return Err(Error::param(format!("angle {theta_deg} outside (-90, 90)")));
    }
    let u = theta_deg.to_radians().sin();
    Ok(DVector::from_iterator(
        arr.len(),
        arr.positions().into_iter().map(|w| C64::from_polar(1.0, PI * w * u)),
    ))
}

/// Columns are steering vectors for `angles_deg`.
pub fn steering_matrix(arr: &SensorArray, angles_deg: &[f64]) -> Result<DMatrix<C64>> {
    let cols = angles_deg
        .iter()
        .map(|&a| steering_vector(arr, a))
        .collect::<Result<Vec<_>>>()?;
    Ok(DMatrix::from_columns(&cols))
}

/// Real source amplitudes `s_R` (Q×T) and the diagonal of `Ψ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceDraw {
    pub waveforms: DMatrix<f64>,
    pub psi: Vec<C64>,
}

fn draw_sources(scn: &Scenario, rng: &mut ChaCha8Rng) -> SourceDraw {
    let (q, t) = (scn.source_count(), scn.snapshots);
    let mut waveforms = DMatrix::zeros(q, t);
    for (row, &power) in scn.powers.iter().enumerate() {
        let dist = Normal::new(0.0, power.sqrt()).expect("validated power");
        for col in 0..t {
            waveforms[(row, col)] = dist.sample(rng);
        }
    }
    let psi = scn.phases().iter().map(|&phi| C64::from_polar(1.0, -phi)).collect();
    SourceDraw { waveforms, psi }
}

/// Zero-mean real Gaussian rows with variance `δ_q²`; deterministic in `seed`.
pub fn gen_sources(scn: &Scenario) -> Result<SourceDraw> {
    scn.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(scn.seed);
    Ok(draw_sources(scn, &mut rng))
}

/// Complex snapshots with rows `M` (plain) or `2M` (conjugate-extended).
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotMatrix {
    data: DMatrix<C64>,
    array: SensorArray,
}

impl SnapshotMatrix {
    pub fn new(array: SensorArray, data: DMatrix<C64>) -> Result<Self> {
        let m = array.len();
        if data.nrows() != m && data.nrows() != 2 * m {
            return Err(Error::param(format!(
                "snapshot matrix has {} rows, expected {m} or {}",
                data.nrows(),
                2 * m
            )));
        }
        Ok(Self { data, array })
    }

    pub fn data(&self) -> &DMatrix<C64> {
        &self.data
    }

    pub fn array(&self) -> &SensorArray {
        &self.array
    }

    pub fn snapshots(&self) -> usize {
        self.data.ncols()
    }

    pub fn is_extended(&self) -> bool {
        self.data.nrows() == 2 * self.array.len()
    }

    /// CSV with one row per snapshot: `t, x0_re, x0_im, x1_re, ...`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string()];
        for i in 0..self.data.nrows() {
            header.push(format!("x{i}_re"));
            header.push(format!("x{i}_im"));
        }
        w.write_record(&header)?;
        for t in 0..self.data.ncols() {
            let mut rec = vec![t.to_string()];
            for v in self.data.column(t).iter() {
                rec.push(v.re.to_string());
                rec.push(v.im.to_string());
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `X = A Ψ S_R + E`, `E` circular Gaussian with per-element variance `δ_n²`.
pub fn gen_snapshots(arr: &SensorArray, scn: &Scenario) -> Result<SnapshotMatrix> {
    scn.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(scn.seed);
    let sources = draw_sources(scn, &mut rng);

    let mut a_psi = steering_matrix(arr, &scn.angles_deg)?;
    for (mut col, &p) in a_psi.column_iter_mut().zip(&sources.psi) {
        col *= p;
    }
    let s = sources.waveforms.map(|v| C64::new(v, 0.0));
    let mut x = a_psi * s;

    let noise = Normal::new(0.0, (scn.noise_power / 2.0).sqrt()).expect("validated noise power");
    for t in 0..x.ncols() {
        for i in 0..x.nrows() {
            let re = noise.sample(&mut rng);
            let im = noise.sample(&mut rng);
            x[(i, t)] += C64::new(re, im);
        }
    }
    SnapshotMatrix::new(arr.clone(), x)
}

/// Stacks `X` over `X*`.
pub fn extend_snapshots(x: &SnapshotMatrix) -> Result<SnapshotMatrix> {
    if x.is_extended() {
        return Err(Error::param("snapshots are already conjugate-extended"));
    }
    let (m, t) = x.data.shape();
    let mut out = DMatrix::zeros(2 * m, t);
    out.rows_mut(0, m).copy_from(&x.data);
    out.rows_mut(m, m).copy_from(&x.data.map(|v| v.conj()));
    SnapshotMatrix::new(x.array.clone(), out)
}
