//! Physical array layouts and closed-form DOF expressions.
//!
//! Positions are kept in half-element units (`d/2`, with `d = λ/2`). The SECNA
//! slide `S = (M + N)^2 / 2` is a half-integer whenever `M + N` is odd; storing
//! twice the position keeps every layout exact. All sensors of one array share
//! the same parity in these units, so both `w_i - w_j` and `w_i + w_j` are
//! whole multiples of `d`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// A pair of coprime positive integers `(M, N)` parameterising a SECNA.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CoprimePair {
    m: u32,
    n: u32,
}

impl CoprimePair {
    pub fn new(m: u32, n: u32) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::param(format!("coprime pair needs m, n >= 1, got ({m}, {n})")));
        }
        if gcd(m as u64, n as u64) != 1 {
            return Err(Error::param(format!("({m}, {n}) are not coprime")));
        }
        Ok(Self { m, n })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// Number of physical sensors of the SECNA built from this pair.
    pub fn sensor_count(&self) -> usize {
        2 * (self.m + self.n) as usize - 1
    }
}

/// Provenance of a [`SensorArray`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Design {
    Secna { m: u32, n: u32 },
    Nested { n1: u32, n2: u32 },
    Ula { count: u32 },
    Custom,
}

impl Design {
    fn name(&self) -> &'static str {
        match self {
            Design::Secna { .. } => "secna",
            Design::Nested { .. } => "nested",
            Design::Ula { .. } => "ula",
            Design::Custom => "custom",
        }
    }

    fn params(&self) -> BTreeMap<String, u64> {
        let kv: Vec<(&str, u32)> = match *self {
            Design::Secna { m, n } => vec![("m", m), ("n", n)],
            Design::Nested { n1, n2 } => vec![("n1", n1), ("n2", n2)],
            Design::Ula { count } => vec![("count", count)],
            Design::Custom => vec![],
        };
        kv.into_iter().map(|(k, v)| (k.to_string(), v as u64)).collect()
    }
}

impl fmt::Display for Design {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Design::Secna { m, n } => write!(f, "secna({m},{n})"),
            Design::Nested { n1, n2 } => write!(f, "nested({n1},{n2})"),
            Design::Ula { count } => write!(f, "ula({count})"),
            Design::Custom => write!(f, "custom"),
        }
    }
}

/// Sorted, duplicate-free sensor positions in units of `d = λ/2`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "ArrayDocument", try_from = "ArrayDocument")]
pub struct SensorArray {
    half_units: Vec<i64>,
    design: Design,
}

impl SensorArray {
    /// Builds an array from positions expressed in half-element units.
    pub fn from_half_units(half_units: Vec<i64>, design: Design) -> Result<Self> {
        let Some(&first) = half_units.first() else {
            return Err(Error::param("sensor array must not be empty"));
        };
        if first < 0 {
            return Err(Error::param("sensor positions must be non-negative"));
        }
        if half_units.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::param("sensor positions must be strictly increasing"));
        }
        let parity = first.rem_euclid(2);
        if half_units.iter().any(|h| h.rem_euclid(2) != parity) {
            return Err(Error::param(
                "sensor positions must all be integers or all be half-integers",
            ));
        }
        Ok(Self { half_units, design })
    }

    /// Builds an array from integer positions (units of `d`).
    pub fn from_integers(positions: &[i64], design: Design) -> Result<Self> {
        Self::from_half_units(positions.iter().map(|p| 2 * p).collect(), design)
    }

    /// Builds an array from real positions; each must be a multiple of `d/2`.
    pub fn from_positions(positions: &[f64], design: Design) -> Result<Self> {
        let half_units = positions
            .iter()
            .map(|&p| {
                let h = 2.0 * p;
                if !h.is_finite() || (h - h.round()).abs() > 1e-9 {
                    Err(Error::param(format!("position {p} is not a multiple of d/2")))
                } else {
                    Ok(h.round() as i64)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_half_units(half_units, design)
    }

    pub fn len(&self) -> usize {
        self.half_units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.half_units.is_empty()
    }

    /// Positions in units of `d/2`.
    pub fn half_units(&self) -> &[i64] {
        &self.half_units
    }

    pub fn positions(&self) -> Vec<f64> {
        self.half_units.iter().map(|&h| h as f64 / 2.0).collect()
    }

    /// Integer positions, if the array sits on the integer lattice.
    pub fn integer_positions(&self) -> Option<Vec<i64>> {
        if self.half_units[0].rem_euclid(2) == 0 {
            Some(self.half_units.iter().map(|h| h / 2).collect())
        } else {
            None
        }
    }

    pub fn design(&self) -> &Design {
        &self.design
    }

    pub fn label(&self) -> String {
        self.design.to_string()
    }

    /// The same layout moved by `shift` whole elements.
    pub fn translated(&self, shift: i64) -> Result<Self> {
        Self::from_half_units(
            self.half_units.iter().map(|h| h + 2 * shift).collect(),
            Design::Custom,
        )
    }
}

/// JSON document `{design, params, positions[]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArrayDocument {
    pub design: String,
    #[serde(default)]
    pub params: BTreeMap<String, u64>,
    pub positions: Vec<f64>,
}

impl From<SensorArray> for ArrayDocument {
    fn from(arr: SensorArray) -> Self {
        ArrayDocument {
            design: arr.design.name().to_string(),
            params: arr.design.params(),
            positions: arr.positions(),
        }
    }
}

impl TryFrom<ArrayDocument> for SensorArray {
    type Error = Error;

    fn try_from(doc: ArrayDocument) -> Result<Self> {
        let get = |k: &str| -> Result<u32> {
            doc.params
                .get(k)
                .and_then(|&v| u32::try_from(v).ok())
                .ok_or_else(|| Error::param(format!("design '{}' needs parameter '{k}'", doc.design)))
        };
        let design = match doc.design.as_str() {
            "secna" => Design::Secna { m: get("m")?, n: get("n")? },
            "nested" => Design::Nested { n1: get("n1")?, n2: get("n2")? },
            "ula" => Design::Ula { count: get("count")? },
            "custom" => Design::Custom,
            other => return Err(Error::param(format!("unknown design '{other}'"))),
        };
        SensorArray::from_positions(&doc.positions, design)
    }
}

/// The three SECNA subarrays together with their generating pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SecnaDesign {
    pair: CoprimePair,
    slide_half_units: i64,
    subarrays: [Vec<i64>; 3],
}

impl SecnaDesign {
    pub fn pair(&self) -> CoprimePair {
        self.pair
    }

    /// Horizontal slide `S = (M + N)^2 / 2` in units of `d`.
    pub fn slide(&self) -> f64 {
        self.slide_half_units as f64 / 2.0
    }

    /// Subarray `p` (1-based, 1..=3) in units of `d`.
    pub fn subarray(&self, p: usize) -> Vec<f64> {
        assert!((1..=3).contains(&p), "SECNA has subarrays 1..=3");
        self.subarrays[p - 1].iter().map(|&h| h as f64 / 2.0).collect()
    }

    pub fn subarray_half_units(&self, p: usize) -> &[i64] {
        &self.subarrays[p - 1]
    }

    /// Union of the three subarrays.
    pub fn array(&self) -> SensorArray {
        let mut all: Vec<i64> = self.subarrays.iter().flatten().copied().collect();
        all.sort_unstable();
        all.dedup();
        SensorArray::from_half_units(
            all,
            Design::Secna { m: self.pair.m, n: self.pair.n },
        )
        .expect("SECNA subarrays are non-negative and share parity")
    }
}

/// Builds the sliding extended coprime nested array for `pair`.
///
/// `Array(1) = N<0:M-1> + S`, `Array(2) = M<0:N> + S`,
/// `Array(3) = (M+N)<1:M+N-1> + MN + S`, with `S = (M+N)^2 / 2`.
pub fn build_secna(pair: CoprimePair) -> Result<SecnaDesign> {
    let (m, n) = (pair.m as i64, pair.n as i64);
    let slide = (m + n) * (m + n);
    let first = (0..m).map(|k| slide + 2 * n * k).collect();
    let second = (0..=n).map(|k| slide + 2 * m * k).collect();
    let third = (1..m + n).map(|k| slide + 2 * m * n + 2 * (m + n) * k).collect();
    let design = SecnaDesign {
        pair,
        slide_half_units: slide,
        subarrays: [first, second, third],
    };
    let count = design.array().len();
    if count != pair.sensor_count() {
        return Err(Error::Invariant(format!(
            "SECNA{pair:?} has {count} sensors, expected {}",
            pair.sensor_count()
        )));
    }
    Ok(design)
}

/// `4(M + N)^2 + 2MN - 1`.
pub fn secna_dof_formula(pair: CoprimePair) -> u64 {
    let (m, n) = (pair.m as u64, pair.n as u64);
    4 * (m + n) * (m + n) + 2 * m * n - 1
}

/// Two-level nested array `{1..n1} ∪ {(n1+1)k : k = 1..n2}`.
pub fn build_nested(n1: u32, n2: u32) -> Result<SensorArray> {
    if n1 == 0 || n2 == 0 {
        return Err(Error::param(format!("nested array needs n1, n2 >= 1, got ({n1}, {n2})")));
    }
    let (a, b) = (n1 as i64, n2 as i64);
    let positions: Vec<i64> = (1..=a).chain((1..=b).map(|k| (a + 1) * k)).collect();
    SensorArray::from_integers(&positions, Design::Nested { n1, n2 })
}

pub fn build_ula(count: u32) -> Result<SensorArray> {
    if count == 0 {
        return Err(Error::param("ULA needs at least one sensor"));
    }
    let positions: Vec<i64> = (0..count as i64).collect();
    SensorArray::from_integers(&positions, Design::Ula { count })
}

/// ESNA closed form `2N1N2 + 2(N1+N2) - 2J + 1 + 4⌊(N1N2 + N2 + 2J)/2⌋`,
/// `J = ⌈N1/2⌉ - 1`.
pub fn esna_dof_formula(n1: u32, n2: u32) -> Result<u64> {
    if n1 == 0 || n2 == 0 {
        return Err(Error::param("ESNA needs n1, n2 >= 1"));
    }
    let (a, b) = (n1 as i64, n2 as i64);
    let j = (a + 1) / 2 - 1;
    let dof = 2 * a * b + 2 * (a + b) - 2 * j + 1 + 4 * ((a * b + b + 2 * j) / 2);
    Ok(dof as u64)
}

/// RSNA-I closed form `4M1M2 + 2(M1 + M2) + 1`.
pub fn rsna1_dof_formula(m1: u32, m2: u32) -> Result<u64> {
    if m1 == 0 || m2 == 0 {
        return Err(Error::param("RSNA-I needs m1, m2 >= 1"));
    }
    let (a, b) = (m1 as u64, m2 as u64);
    Ok(4 * a * b + 2 * (a + b) + 1)
}

/// RSNA-II closed form `4M1M2 + 2M1(2 - mod(M1,2)) + 2M2 + 1 - mod(M1,2)`.
pub fn rsna2_dof_formula(m1: u32, m2: u32) -> Result<u64> {
    if m1 == 0 || m2 == 0 {
        return Err(Error::param("RSNA-II needs m1, m2 >= 1"));
    }
    let (a, b) = (m1 as u64, m2 as u64);
    let odd = a % 2;
    Ok(4 * a * b + 2 * a * (2 - odd) + 2 * b + 1 - odd)
}

/// The coprime pair with `2(m+n) - 1 = budget` maximising the SECNA DOF.
///
/// For a fixed sum the DOF grows with `m·n`; ties go to the smaller `m`.
pub fn best_coprime_pair(sensor_budget: u32) -> Result<CoprimePair> {
    if sensor_budget < 5 || sensor_budget.is_multiple_of(2) {
        return Err(Error::param(format!(
            "sensor budget must be odd and >= 5, got {sensor_budget}"
        )));
    }
    let sum = sensor_budget.div_ceil(2);
    (1..sum)
        .filter_map(|m| CoprimePair::new(m, sum - m).ok())
        .max_by(|a, b| {
            (a.m as u64 * a.n as u64)
                .cmp(&(b.m as u64 * b.n as u64))
                .then(b.m.cmp(&a.m))
        })
        .ok_or_else(|| Error::param(format!("no coprime pair sums to {sum}")))
}

/// A requested array layout, as it appears in configs and on the command line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "design", rename_all = "lowercase")]
pub enum ArraySpec {
    Secna { m: u32, n: u32 },
    Nested { n1: u32, n2: u32 },
    Ula { count: u32 },
    Custom { positions: Vec<f64> },
}

impl ArraySpec {
    pub fn build(&self) -> Result<SensorArray> {
        match self {
            ArraySpec::Secna { m, n } => Ok(build_secna(CoprimePair::new(*m, *n)?)?.array()),
            ArraySpec::Nested { n1, n2 } => build_nested(*n1, *n2),
            ArraySpec::Ula { count } => build_ula(*count),
            ArraySpec::Custom { positions } => SensorArray::from_positions(positions, Design::Custom),
        }
    }
}

impl fmt::Display for ArraySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ArraySpec::Secna { m, n } => write!(f, "secna:{m},{n}"),
            ArraySpec::Nested { n1, n2 } => write!(f, "nested:{n1},{n2}"),
            ArraySpec::Ula { count } => write!(f, "ula:{count}"),
            ArraySpec::Custom { positions } => {
                let p: Vec<String> = positions.iter().map(|p| p.to_string()).collect();
                write!(f, "custom:{}", p.join(","))
            }
        }
    }
}

impl FromStr for ArraySpec {
    type Err = Error;

    /// Parses `secna:M,N`, `nested:N1,N2`, `ula:COUNT` or `custom:P1,P2,...`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, args) = s
            .split_once(':')
            .ok_or_else(|| Error::param(format!("array spec '{s}' should look like kind:args")))?;
        let ints = || -> Result<Vec<u32>> {
            args.split(',')
                .map(|a| a.trim().parse::<u32>().map_err(|_| Error::param(format!("bad integer '{a}' in '{s}'"))))
                .collect()
        };
        let want = |v: Vec<u32>, n: usize| -> Result<Vec<u32>> {
            if v.len() == n {
                Ok(v)
            } else {
                Err(Error::param(format!("'{kind}' takes {n} parameter(s), got {}", v.len())))
            }
        };
        match kind {
            "secna" => {
                let v = want(ints()?, 2)?;
                Ok(ArraySpec::Secna { m: v[0], n: v[1] })
            }
            "nested" => {
                let v = want(ints()?, 2)?;
                Ok(ArraySpec::Nested { n1: v[0], n2: v[1] })
            }
            "ula" => {
                let v = want(ints()?, 1)?;
                Ok(ArraySpec::Ula { count: v[0] })
            }
            "custom" => {
                let positions = args
                    .split(',')
                    .map(|a| a.trim().parse::<f64>().map_err(|_| Error::param(format!("bad position '{a}'"))))
                    .collect::<Result<Vec<_>>>()?;
                Ok(ArraySpec::Custom { positions })
            }
            other => Err(Error::param(format!("unknown array kind '{other}'"))),
        }
    }
}
