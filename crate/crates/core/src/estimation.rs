//! Covariance-domain DOA pipeline.
//!
//! `x → [x; x*] → R_NC → z_U (lag averaging) → spatially smoothed R_ss → MUSIC`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::coarray::{build_virtual_ula, VirtualUla};
use crate::error::{Error, Result};
use crate::geometry::SensorArray;
use crate::signal::{extend_snapshots, SnapshotMatrix};
use crate::C64;

/// Relative tolerance used when deciding whether a spectrum sample is a peak.
const PEAK_REL_TOL: f64 = 1e-9;

/// Hermitian `2M x 2M` sample covariance of the extended snapshots.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedCovariance {
    matrix: DMatrix<C64>,
    snapshots_used: usize,
}

impl ExtendedCovariance {
    /// Wraps an externally built covariance; it is re-symmetrised.
    pub fn from_matrix(matrix: DMatrix<C64>, snapshots_used: usize) -> Result<Self> {
        if !matrix.is_square() || !matrix.nrows().is_multiple_of(2) {
            return Err(Error::param("extended covariance must be square with even size"));
        }
        Ok(Self {
            matrix: hermitian_part(matrix),
            snapshots_used,
        })
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn snapshots_used(&self) -> usize {
        self.snapshots_used
    }
}

fn hermitian_part(m: DMatrix<C64>) -> DMatrix<C64> {
    let adj = m.adjoint();
    (m + adj) * C64::new(0.5, 0.0)
}

/// `(1/T) X_NC X_NC^H`, symmetrised.
pub fn sample_covariance(x_nc: &SnapshotMatrix) -> Result<ExtendedCovariance> {
    if !x_nc.is_extended() {
        return Err(Error::param("sample covariance expects conjugate-extended snapshots"));
    }
    let t = x_nc.snapshots();
    if t == 0 {
        return Err(Error::param("sample covariance needs at least one snapshot"));
    }
    let data = x_nc.data();
    let r = data * data.adjoint() * C64::new(1.0 / t as f64, 0.0);
    Ok(ExtendedCovariance {
        matrix: hermitian_part(r),
        snapshots_used: t,
    })
}

/// Lag-domain measurement `z_U(l)`, `l = -L..=L`.
#[derive(Debug, Clone, PartialEq)]
pub struct VirtualSnapshot {
    values: DVector<C64>,
    half_length: usize,
}

impl VirtualSnapshot {
    pub fn from_values(values: DVector<C64>) -> Result<Self> {
        if values.len().is_multiple_of(2) {
            return Err(Error::param("virtual snapshot length must be odd"));
        }
        let half_length = values.len() / 2;
        Ok(Self { values, half_length })
    }

    pub fn half_length(&self) -> usize {
        self.half_length
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Value at lag `l`; panics outside `-L..=L`.
    pub fn value(&self, lag: i64) -> C64 {
        self.values[(lag + self.half_length as i64) as usize]
    }

    /// Values ordered from lag `-L` to `L`.
    pub fn values(&self) -> &DVector<C64> {
        &self.values
    }
}

/// Averages every covariance entry sharing a lag (`z_U = P vec(R_NC)`).
pub fn virtualize(r: &ExtendedCovariance, v: &VirtualUla) -> Result<VirtualSnapshot> {
    let dim = r.matrix.nrows();
    if dim != 2 * v.sensor_count() {
        return Err(Error::param(format!(
            "covariance is {dim}x{dim} but the virtual array expects {} sensors",
            v.sensor_count()
        )));
    }
    let flat = r.matrix.as_slice();
    let half = v.half_length() as i64;
    let mut values = DVector::zeros(v.len());
    for lag in -half..=half {
        let sel = v.selection(lag);
        if sel.is_empty() {
            return Err(Error::Invariant(format!("lag {lag} has no covariance entries")));
        }
        let mut acc = C64::new(0.0, 0.0);
        for &i in sel {
            acc += *flat
                .get(i)
                .ok_or_else(|| Error::Invariant(format!("selection index {i} out of range")))?;
        }
        values[(lag + half) as usize] = acc / sel.len() as f64;
    }
    Ok(VirtualSnapshot {
        values,
        half_length: v.half_length(),
    })
}

/// `(L+1) x (L+1)` forward spatially smoothed covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedCovariance {
    matrix: DMatrix<C64>,
}

impl SmoothedCovariance {
    pub fn from_matrix(matrix: DMatrix<C64>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::param("smoothed covariance must be square and non-empty"));
        }
        Ok(Self {
            matrix: hermitian_part(matrix),
        })
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Eigen-pairs sorted by ascending eigenvalue; ties keep index order.
    fn sorted_eigen(&self) -> (Vec<f64>, DMatrix<C64>) {
        let eig = self.matrix.clone().symmetric_eigen();
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = DMatrix::from_columns(
            &order.iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect::<Vec<_>>(),
        );
        (values, vectors)
    }

    /// Eigenvalues, largest first.
    pub fn eigenvalues_desc(&self) -> Vec<f64> {
        let mut v = self.sorted_eigen().0;
        v.reverse();
        v
    }
}

/// `R_ss = 1/(L+1) Σ_i v_i v_i^H` with `v_i[k] = z(i - k)`, `i, k = 0..=L`.
///
/// Each `v_i` is a snapshot of a virtual ULA whose steering vector is
/// `a_v(θ)[k] = exp(-jπ k sin θ)`.
pub fn spatial_smoothing(z: &VirtualSnapshot) -> SmoothedCovariance {
    let n = z.half_length + 1;
    let mut acc = DMatrix::<C64>::zeros(n, n);
    for i in 0..n {
        let v = DVector::from_fn(n, |k, _| z.value(i as i64 - k as i64));
        acc += &v * v.adjoint();
    }
    SmoothedCovariance {
        matrix: hermitian_part(acc * C64::new(1.0 / n as f64, 0.0)),
    }
}

/// Pseudo-spectrum over the angle grid and its strongest peaks.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumResult {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    /// Estimated angles, ascending; at most the requested count.
    pub peaks: Vec<f64>,
    /// Fewer local maxima were found than sources requested.
    pub shortfall: bool,
}

/// Grid `k·step` strictly inside (-90°, 90°).
pub fn angle_grid(step_deg: f64) -> Result<Vec<f64>> {
    if !step_deg.is_finite() || step_deg <= 0.0 {
        return Err(Error::param(format!("grid step must be positive, got {step_deg}")));
    }
    let k_max = (90.0 / step_deg - 1e-9).floor() as i64;
    Ok((-k_max..=k_max)
        .map(|k| ((k as f64 * step_deg) * 1e9).round() / 1e9)
        .collect())
}

/// Virtual ULA steering `exp(-jπ k sin θ)`, `k = 0..n`, one column per angle.
fn virtual_steering(n: usize, grid: &[f64]) -> DMatrix<C64> {
    DMatrix::from_fn(n, grid.len(), |k, g| {
        C64::from_polar(1.0, -PI * k as f64 * grid[g].to_radians().sin())
    })
}

fn pick_peaks(grid: &[f64], values: &[f64], q: usize) -> (Vec<f64>, bool) {
    let mut candidates: Vec<usize> = (1..values.len().saturating_sub(1))
        .filter(|&i| {
            let tol = PEAK_REL_TOL * values[i].abs();
            values[i] > values[i - 1] + tol && values[i] + tol >= values[i + 1]
        })
        .collect();
    candidates.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let shortfall = candidates.len() < q;
    candidates.truncate(q);
    candidates.sort_unstable();
    (candidates.into_iter().map(|i| grid[i]).collect(), shortfall)
}

/// MUSIC on the smoothed covariance.
///
/// The noise subspace is spanned by the eigenvectors of the `L + 1 - q`
/// smallest eigenvalues; `P(θ) = 1 / ‖E_n^H a_v(θ)‖²`.
pub fn music_spectrum(rss: &SmoothedCovariance, q: usize, grid_step_deg: f64) -> Result<SpectrumResult> {
    let n = rss.dim();
    if q == 0 {
        return Err(Error::param("source count must be at least 1"));
    }
    if q > n - 1 {
        return Err(Error::Capacity { requested: q, capacity: n - 1 });
    }
    let grid = angle_grid(grid_step_deg)?;
    let (_, vectors) = rss.sorted_eigen();
    let noise = vectors.columns(0, n - q);
    let projected = noise.adjoint() * virtual_steering(n, &grid);
    let values: Vec<f64> = projected
        .column_iter()
        .map(|c| 1.0 / c.norm_squared().max(f64::MIN_POSITIVE))
        .collect();
    let (peaks, shortfall) = pick_peaks(&grid, &values, q);
    Ok(SpectrumResult { grid, values, peaks, shortfall })
}

/// Estimator acting on a smoothed virtual covariance.
pub trait DoaEstimator {
    fn estimate(&self, rss: &SmoothedCovariance, q: usize) -> Result<SpectrumResult>;
}

/// Grid-search MUSIC.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Music {
    pub grid_step_deg: f64,
}

impl Default for Music {
    fn default() -> Self {
        Music { grid_step_deg: 0.1 }
    }
}

impl DoaEstimator for Music {
    fn estimate(&self, rss: &SmoothedCovariance, q: usize) -> Result<SpectrumResult> {
        music_spectrum(rss, q, self.grid_step_deg)
    }
}

/// The full pipeline with the virtual array built once for `arr`.
#[derive(Debug, Clone)]
pub struct Pipeline<E = Music> {
    array: SensorArray,
    virtual_ula: VirtualUla,
    estimator: E,
}

impl Pipeline<Music> {
    pub fn music(array: SensorArray, grid_step_deg: f64) -> Self {
        Self::new(array, Music { grid_step_deg })
    }
}

impl<E: DoaEstimator> Pipeline<E> {
    pub fn new(array: SensorArray, estimator: E) -> Self {
        let virtual_ula = build_virtual_ula(&array);
        Self { array, virtual_ula, estimator }
    }

    pub fn array(&self) -> &SensorArray {
        &self.array
    }

    pub fn virtual_ula(&self) -> &VirtualUla {
        &self.virtual_ula
    }

    /// Largest source count the virtual array supports.
    pub fn capacity(&self) -> usize {
        self.virtual_ula.half_length()
    }

    pub fn estimate(&self, x: &SnapshotMatrix, q: usize) -> Result<SpectrumResult> {
        if q == 0 {
            return Err(Error::param("source count must be at least 1"));
        }
        if x.array().half_units() != self.array.half_units() {
            return Err(Error::param("snapshots were generated for a different array"));
        }
        let x_nc = extend_snapshots(x)?;
        let r = sample_covariance(&x_nc)?;
        let z = virtualize(&r, &self.virtual_ula)?;
        let rss = spatial_smoothing(&z);
        self.estimator.estimate(&rss, q)
    }
}

/// One-shot `extend → covariance → virtualize → smooth → MUSIC`.
pub fn estimate_doa(arr: &SensorArray, x: &SnapshotMatrix, q: usize, grid_step_deg: f64) -> Result<SpectrumResult> {
    Pipeline::music(arr.clone(), grid_step_deg).estimate(x, q)
}
