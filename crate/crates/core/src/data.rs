//! Experiment records: CSV ingestion, reference grids and synthetic datasets.
//!
//! CSV schema (UTF-8, header required, `.` decimal separator):
//!
//! ```text
//! n_active,d_tokens,sparsity,loss[,compute][,source]
//! ```
//!
//! Counts accept scientific notation and the suffixes `K`, `M`, `B`, `T`.

use std::fmt;
use std::io::{Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{DomainError, Error, Result};
use crate::laws::{check_params, CoefficientSet, ComputeBudget, ModelScale, MAX_EXACT_COUNT};

/// Relative tolerance between a record's stated compute and `6 N D`.
pub const COMPUTE_TOLERANCE: f64 = 0.01;

const REQUIRED_COLUMNS: [&str; 4] = ["n_active", "d_tokens", "sparsity", "loss"];
const OPTIONAL_COLUMNS: [&str; 2] = ["compute", "source"];

/// One observed training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub scale: ModelScale,
    pub loss: f64,
    pub compute: Option<ComputeBudget>,
    pub source: String,
}

impl ExperimentRecord {
    pub fn new(
        scale: ModelScale,
        loss: f64,
        compute: Option<ComputeBudget>,
        source: impl Into<String>,
    ) -> Result<Self, DomainError> {
        if !(loss.is_finite() && loss > 0.0) {
            return Err(DomainError::Other(format!("loss must be finite and > 0, got {loss}")));
        }
        if let Some(c) = compute {
            let expected = scale.compute().flops();
            if ((c.flops() - expected) / c.flops()).abs() > COMPUTE_TOLERANCE {
                return Err(DomainError::Other(format!(
                    "compute {} disagrees with 6*n_active*d_tokens = {expected} by more than 1%",
                    c.flops()
                )));
            }
        }
        Ok(ExperimentRecord { scale, loss, compute, source: source.into() })
    }
}

/// Parses a count or real number: `1e9`, `20e9`, `400M`, `1.3B`, `10T`.
pub fn parse_count(text: &str) -> Result<f64, String> {
    let t = text.trim();
    let (mantissa, exponent) = match t.chars().last() {
        Some('K' | 'k') => (&t[..t.len() - 1], "e3"),
        Some('M') => (&t[..t.len() - 1], "e6"),
        Some('B') => (&t[..t.len() - 1], "e9"),
        Some('T') => (&t[..t.len() - 1], "e12"),
        _ => (t, ""),
    };
    if mantissa.is_empty() || (!exponent.is_empty() && mantissa.contains(['e', 'E'])) {
        return Err(format!("malformed number '{t}'"));
    }
    let value: f64 =
        format!("{mantissa}{exponent}").parse().map_err(|_| format!("malformed number '{t}'"))?;
    if !value.is_finite() {
        return Err(format!("non-finite number '{t}'"));
    }
    Ok(value)
}

struct Header {
    index: Vec<Option<usize>>, // position of each known column
}

impl Header {
    const KNOWN: [&'static str; 6] = [
        REQUIRED_COLUMNS[0],
        REQUIRED_COLUMNS[1],
        REQUIRED_COLUMNS[2],
        REQUIRED_COLUMNS[3],
        OPTIONAL_COLUMNS[0],
        OPTIONAL_COLUMNS[1],
    ];

    fn read(headers: &csv::StringRecord, required: &[&str]) -> Result<Self> {
        let mut index = vec![None; Self::KNOWN.len()];
        for (pos, name) in headers.iter().enumerate() {
            let name = name.trim();
            match Self::KNOWN.iter().position(|k| *k == name) {
                Some(k) if index[k].is_some() => {
                    return Err(Error::parse(1, name, "duplicate column"));
                }
                Some(k) => index[k] = Some(pos),
                None => return Err(Error::parse(1, name, "unknown column")),
            }
        }
        for name in required {
            let k = Self::KNOWN.iter().position(|k| k == name).unwrap();
            if index[k].is_none() {
                return Err(Error::parse(1, *name, "missing column"));
            }
        }
        Ok(Header { index })
    }

    fn field<'r>(&self, row: &'r csv::StringRecord, column: &str) -> Option<&'r str> {
        let k = Self::KNOWN.iter().position(|k| *k == column).unwrap();
        self.index[k].and_then(|pos| row.get(pos)).map(str::trim)
    }
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().has_headers(true).flexible(true).trim(csv::Trim::All).from_reader(input)
}

fn number(row: usize, column: &str, text: Option<&str>) -> Result<f64> {
    match text {
        None | Some("") => Err(Error::parse(row, column, "missing value")),
        Some(t) => parse_count(t).map_err(|m| Error::parse(row, column, m)),
    }
}

fn count(row: usize, column: &str, text: Option<&str>) -> Result<f64> {
    let v = number(row, column, text)?;
    if v > MAX_EXACT_COUNT {
        return Err(Error::parse(row, column, DomainError::CountTooLarge(v).to_string()));
    }
    if v < 1.0 {
        return Err(Error::parse(row, column, format!("count must be >= 1, got {v}")));
    }
    Ok(v)
}

fn scale_from_row(header: &Header, record: &csv::StringRecord, row: usize) -> Result<ModelScale> {
    let n = count(row, "n_active", header.field(record, "n_active"))?;
    let d = count(row, "d_tokens", header.field(record, "d_tokens"))?;
    let s = number(row, "sparsity", header.field(record, "sparsity"))?;
    ModelScale::new(n, d, s).map_err(|e| Error::parse(row, "sparsity", e.to_string()))
}

/// Reads experiment records. Errors name the 1-based row (header is row 1)
/// and the offending column.
pub fn parse_records<R: Read>(input: R) -> Result<Vec<ExperimentRecord>> {
    let mut rdr = reader(input);
    let header = Header::read(rdr.headers()?, &REQUIRED_COLUMNS)?;
    let mut out = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 2;
        let record = record?;
        let scale = scale_from_row(&header, &record, row)?;
        let loss = number(row, "loss", header.field(&record, "loss"))?;
        let compute = match header.field(&record, "compute") {
            None | Some("") => None,
            Some(t) => {
                let c = parse_count(t).map_err(|m| Error::parse(row, "compute", m))?;
                Some(ComputeBudget::new(c).map_err(|e| Error::parse(row, "compute", e.to_string()))?)
            }
        };
        let source = header.field(&record, "source").unwrap_or("").to_string();
        let rec = ExperimentRecord::new(scale, loss, compute, source).map_err(|e| {
            let column = if matches!(e, DomainError::Other(ref m) if m.starts_with("compute")) {
                "compute"
            } else {
                "loss"
            };
            Error::parse(row, column, e.to_string())
        })?;
        out.push(rec);
    }
    Ok(out)
}

/// Reads model scales only; a `loss` column may be present and is ignored.
pub fn parse_scales<R: Read>(input: R) -> Result<Vec<ModelScale>> {
    let mut rdr = reader(input);
    let header = Header::read(rdr.headers()?, &REQUIRED_COLUMNS[..3])?;
    let mut out = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        out.push(scale_from_row(&header, &record?, i + 2)?);
    }
    Ok(out)
}

pub fn write_records<W: Write>(out: W, records: &[ExperimentRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n_active", "d_tokens", "sparsity", "loss", "compute", "source"])?;
    for r in records {
        let compute = r.compute.map(|c| format!("{:e}", c.flops())).unwrap_or_default();
        w.write_record([
            format!("{:e}", r.scale.n_active()),
            format!("{:e}", r.scale.d_tokens()),
            r.scale.sparsity().to_string(),
            r.loss.to_string(),
            compute,
            r.source.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes scales in the record schema with an empty `loss` column.
pub fn write_scales<W: Write>(out: W, scales: &[ModelScale]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n_active", "d_tokens", "sparsity", "loss"])?;
    for s in scales {
        w.write_record([
            format!("{:e}", s.n_active()),
            format!("{:e}", s.d_tokens()),
            s.sparsity().to_string(),
            String::new(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `k` log-uniform points from `lo` to `hi`, endpoints exact.
pub(crate) fn log_spaced(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    assert!(k >= 2 && lo > 0.0 && hi > lo);
    let (a, b) = (lo.ln(), hi.ln());
    (0..k)
        .map(|i| match i {
            0 => lo,
            i if i == k - 1 => hi,
            i => (a + (b - a) * i as f64 / (k - 1) as f64).exp().clamp(lo, hi),
        })
        .collect()
}

/// Test-model grids reconstructed from the published parameter, token and
/// sparsity ranges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridSource {
    Hoffmann9,
    Frantar48,
    Abnar35,
}

impl GridSource {
    pub const ALL: [GridSource; 3] = [GridSource::Hoffmann9, GridSource::Frantar48, GridSource::Abnar35];

    pub fn as_str(self) -> &'static str {
        match self {
            GridSource::Hoffmann9 => "hoffmann9",
            GridSource::Frantar48 => "frantar48",
            GridSource::Abnar35 => "abnar35",
        }
    }

    /// (params, tokens) ranges.
    pub fn ranges(self) -> ((f64, f64), (f64, f64)) {
        match self {
            GridSource::Hoffmann9 => ((400e6, 10e12), (8e9, 216.2e9)),
            GridSource::Frantar48 => ((1.3e6, 85e6), (16e9, 65e9)),
            GridSource::Abnar35 => ((329e6, 21.2e9), (15e9, 128e9)),
        }
    }

    pub fn sparsities(self) -> &'static [f64] {
        match self {
            GridSource::Hoffmann9 => &[0.0],
            GridSource::Frantar48 => &[0.0, 0.5, 0.75, 0.875],
            GridSource::Abnar35 => &[0.0, 0.25, 0.5, 0.75, 0.90, 0.95, 0.98],
        }
    }
}

impl fmt::Display for GridSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for GridSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        GridSource::ALL.into_iter().find(|g| g.as_str() == s).ok_or_else(|| {
            Error::InvalidArgument(format!("unknown grid '{s}' (expected hoffmann9, frantar48 or abnar35)"))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceGrid {
    pub source: GridSource,
    pub records: Vec<ModelScale>,
}

/// Builds one of the reference grids.
///
/// * `hoffmann9`: 9 dense (N, D) pairs, both log-spaced across their ranges.
/// * `frantar48`: 4 nonzero-parameter counts x 3 token counts x 4 sparsities.
/// * `abnar35`: 5 budgets x 7 sparsities. Budget `k` uses the `k`-th of 5
///   log-spaced active-parameter and token counts, so `C = 6 N D` holds by
///   construction and the budgets themselves are log-spaced.
pub fn reference_grid(source: GridSource) -> ReferenceGrid {
    let ((n_lo, n_hi), (d_lo, d_hi)) = source.ranges();
    let scale = |n, d, s| ModelScale::new(n, d, s).expect("grid ranges are valid");
    let records = match source {
        GridSource::Hoffmann9 => log_spaced(n_lo, n_hi, 9)
            .into_iter()
            .zip(log_spaced(d_lo, d_hi, 9))
            .map(|(n, d)| scale(n, d, 0.0))
            .collect(),
        GridSource::Frantar48 => {
            let mut v = Vec::with_capacity(48);
            for n in log_spaced(n_lo, n_hi, 4) {
                for d in log_spaced(d_lo, d_hi, 3) {
                    for &s in source.sparsities() {
                        v.push(scale(n, d, s));
                    }
                }
            }
            v
        }
        GridSource::Abnar35 => {
            let mut v = Vec::with_capacity(35);
            for (n, d) in log_spaced(n_lo, n_hi, 5).into_iter().zip(log_spaced(d_lo, d_hi, 5)) {
                for &s in source.sparsities() {
                    v.push(scale(n, d, s));
                }
            }
            v
        }
    };
    ReferenceGrid { source, records }
}

/// Largest accepted relative noise: the +-3 sigma truncation keeps losses positive.
pub const MAX_NOISE_REL: f64 = 1.0 / 3.0;

/// Evaluates `coeffs` on `grid` and applies multiplicative noise
/// `loss * (1 + eps)`, `eps ~ N(0, noise_rel)` truncated to `+-3 noise_rel`.
pub fn synthesize_dataset(
    coeffs: &CoefficientSet,
    grid: &[ModelScale],
    noise_rel: f64,
    seed: u64,
) -> Result<Vec<ExperimentRecord>> {
    if !(0.0..MAX_NOISE_REL).contains(&noise_rel) {
        return Err(Error::InvalidArgument(format!("noise_rel must lie in [0, 1/3), got {noise_rel}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, noise_rel).expect("noise_rel validated above");
    let source = format!("synthetic:{}:seed={seed}", coeffs.law());
    grid.iter()
        .enumerate()
        .map(|(index, scale)| {
            let clean = coeffs.eval(scale).map_err(|source| Error::Record { index, source })?;
            let eps = if noise_rel == 0.0 {
                0.0
            } else {
                loop {
                    let e: f64 = normal.sample(&mut rng);
                    if e.abs() <= 3.0 * noise_rel {
                        break e;
                    }
                }
            };
            ExperimentRecord::new(*scale, clean * (1.0 + eps), Some(scale.compute()), source.clone())
                .map_err(|source| Error::Record { index, source })
        })
        .collect()
}

/// Tokens affordable with budget `c` at `n` parameters: `c / (6 n)`.
pub fn derive_tokens_from_compute(c: ComputeBudget, n: f64) -> Result<f64, DomainError> {
    check_params(n)?;
    Ok(c.flops() / (6.0 * n))
}
