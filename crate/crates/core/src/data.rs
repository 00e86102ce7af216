//! Synthetic domain-shift datasets and CSV dataset IO.
//!
//! Generators are pure functions of their seed (ChaCha8 + Box-Muller, see
//! [`crate::rng`]), so any dataset can be regenerated bit-for-bit. The CSV
//! format is `label,f0,f1,...` with floats written at 17 significant
//! digits, which round-trips `f64` values exactly; label −1 marks an
//! unlabeled row.

use crate::error::{Error, Result};
use crate::rng;
use rand::seq::SliceRandom;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

/// A feature matrix with (possibly absent) class labels and provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    features: Vec<Vec<f64>>,
    labels: Vec<Option<usize>>,
    dim: usize,
    pub domain_tag: String,
    pub seed: u64,
}

impl LabeledDataset {
    pub fn new(
        features: Vec<Vec<f64>>,
        labels: Vec<Option<usize>>,
        dim: usize,
        domain_tag: impl Into<String>,
        seed: u64,
    ) -> Result<Self> {
        if features.len() != labels.len() {
            return Err(Error::Input(format!(
                "{} feature rows but {} labels",
                features.len(),
                labels.len()
            )));
        }
        if dim == 0 {
            return Err(Error::Input("zero-dimensional dataset".into()));
        }
        for (i, row) in features.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::Input(format!(
                    "row {i} has {} features, expected {dim}",
                    row.len()
                )));
            }
        }
        Ok(Self {
            features,
            labels,
            dim,
            domain_tag: domain_tag.into(),
            seed,
        })
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }

    pub fn labels(&self) -> &[Option<usize>] {
        &self.labels
    }

    /// Largest label + 1, or 0 when fully unlabeled.
    pub fn class_count(&self) -> usize {
        self.labels
            .iter()
            .flatten()
            .map(|&l| l + 1)
            .max()
            .unwrap_or(0)
    }

    pub fn is_fully_labeled(&self) -> bool {
        self.labels.iter().all(|l| l.is_some())
    }

    pub fn has_labels(&self) -> bool {
        self.labels.iter().any(|l| l.is_some())
    }

    /// The labeled rows as (features, label) pairs.
    pub fn labeled_rows(&self) -> Vec<(&[f64], usize)> {
        self.features
            .iter()
            .zip(&self.labels)
            .filter_map(|(f, l)| l.map(|lab| (f.as_slice(), lab)))
            .collect()
    }
}

/// Two interleaved half-circles with Gaussian noise, then a rigid rotation
/// about the origin. Class 0 is the upper arc through (±1, 0); class 1 the
/// lower arc shifted to interleave. Points are evenly spaced on the arcs
/// before noise, `n/2` per class.
pub fn gen_moons(n: usize, noise_sigma: f64, rotation_deg: f64, seed: u64) -> Result<LabeledDataset> {
    if n < 2 || n % 2 != 0 {
        return Err(Error::Input(format!("sample count {n} must be even and ≥ 2")));
    }
    if !(noise_sigma.is_finite() && noise_sigma >= 0.0) {
        return Err(Error::Param(format!("noise sigma {noise_sigma} must be non-negative")));
    }
    if !rotation_deg.is_finite() {
        return Err(Error::Param("rotation must be finite".into()));
    }

    let per_class = n / 2;
    let mut rng = rng::seeded(seed);
    let theta = rotation_deg.to_radians();
    let (sin_t, cos_t) = theta.sin_cos();

    let mut features = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    let arc = |i: usize| {
        if per_class == 1 {
            0.0
        } else {
            std::f64::consts::PI * i as f64 / (per_class - 1) as f64
        }
    };
    for class in 0..2usize {
        for i in 0..per_class {
            let t = arc(i);
            let (mut x, mut y) = if class == 0 {
                (t.cos(), t.sin())
            } else {
                (1.0 - t.cos(), 0.5 - t.sin())
            };
            x += noise_sigma * rng::standard_normal(&mut rng);
            y += noise_sigma * rng::standard_normal(&mut rng);
            features.push(vec![x * cos_t - y * sin_t, x * sin_t + y * cos_t]);
            labels.push(Some(class));
        }
    }
    LabeledDataset::new(features, labels, 2, "moons", seed)
}

/// Gaussian blobs, one per class mean, and a shifted twin: the target
/// repeats the construction with every class mean translated by
/// `shift` and an independently derived noise stream.
pub fn gen_gaussians(
    n: usize,
    means: &[Vec<f64>],
    shared_sigma: f64,
    shift: &[f64],
    seed: u64,
) -> Result<(LabeledDataset, LabeledDataset)> {
    if means.len() < 2 {
        return Err(Error::Input(format!(
            "need at least 2 class means, got {}",
            means.len()
        )));
    }
    let dim = means[0].len();
    if dim == 0 {
        return Err(Error::Input("zero-dimensional class means".into()));
    }
    for m in means {
        if m.len() != dim {
            return Err(Error::Input(format!(
                "class mean dimension {} != {dim}",
                m.len()
            )));
        }
    }
    if shift.len() != dim {
        return Err(Error::Input(format!(
            "shift dimension {} != {dim}",
            shift.len()
        )));
    }
    if !(shared_sigma.is_finite() && shared_sigma >= 0.0) {
        return Err(Error::Param(format!("sigma {shared_sigma} must be non-negative")));
    }
    if n < means.len() {
        return Err(Error::Input(format!(
            "sample count {n} below class count {}",
            means.len()
        )));
    }

    let zero_shift = vec![0.0; dim];
    let source = gaussian_blobs(n, means, shared_sigma, &zero_shift, rng::derive_seed(seed, 0, 0), "source")?;
    let target = gaussian_blobs(n, means, shared_sigma, shift, rng::derive_seed(seed, 1, 0), "target")?;
    Ok((source, target))
}

fn gaussian_blobs(
    n: usize,
    means: &[Vec<f64>],
    sigma: f64,
    shift: &[f64],
    stream_seed: u64,
    tag: &str,
) -> Result<LabeledDataset> {
    let classes = means.len();
    let dim = means[0].len();
    let base = n / classes;
    let remainder = n % classes;
    let mut rng = rng::seeded(stream_seed);

    let mut features = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for (c, mean) in means.iter().enumerate() {
        // Remainder rows go to the lowest class indices.
        let count = base + usize::from(c < remainder);
        for _ in 0..count {
            let row: Vec<f64> = (0..dim)
                .map(|j| mean[j] + shift[j] + sigma * rng::standard_normal(&mut rng))
                .collect();
            features.push(row);
            labels.push(Some(c));
        }
    }
    LabeledDataset::new(features, labels, dim, tag, stream_seed)
}

/// Takes `count` rows uniformly without replacement, seeded.
pub fn subsample_rows(rows: &[Vec<f64>], count: usize, seed: u64) -> Vec<Vec<f64>> {
    if rows.len() <= count {
        return rows.to_vec();
    }
    let mut idx: Vec<usize> = (0..rows.len()).collect();
    idx.shuffle(&mut rng::seeded(seed));
    idx.truncate(count);
    idx.into_iter().map(|i| rows[i].clone()).collect()
}

/// Serializes `label,f0,f1,...` rows; 17 significant digits per float so a
/// read-back is bit-exact. Unlabeled rows carry label −1. LF newlines and
/// `.` decimals regardless of locale.
pub fn write_csv(dataset: &LabeledDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    out.push_str("label");
    for j in 0..dataset.dim() {
        let _ = write!(out, ",f{j}");
    }
    out.push('\n');
    for (row, label) in dataset.features().iter().zip(dataset.labels()) {
        match label {
            Some(l) => {
                let _ = write!(out, "{l}");
            }
            None => out.push_str("-1"),
        }
        for v in row {
            let _ = write!(out, ",{}", format_float(*v));
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// 17 significant digits: enough for an exact `f64` round trip.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Reads the CSV format written by [`write_csv`]. Rejects malformed
/// headers, ragged rows, and unparsable cells with the offending line
/// number (1-based, header is line 1).
pub fn read_csv(path: impl AsRef<Path>) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };

    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty file".into()))?;
    let cols: Vec<&str> = header.trim_end_matches('\r').split(',').collect();
    if cols.first() != Some(&"label") {
        return Err(parse_err(1, format!("header must start with 'label', got '{header}'")));
    }
    let dim = cols.len() - 1;
    if dim == 0 {
        return Err(parse_err(1, "no feature columns".into()));
    }
    for (j, col) in cols[1..].iter().enumerate() {
        if *col != format!("f{j}") {
            return Err(parse_err(1, format!("feature column {} should be 'f{j}', got '{col}'", j + 1)));
        }
    }

    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (idx, raw) in lines {
        let line_no = idx + 1;
        let row = raw.trim_end_matches('\r');
        if row.is_empty() {
            continue;
        }
        let cells: Vec<&str> = row.split(',').collect();
        if cells.len() != dim + 1 {
            return Err(parse_err(
                line_no,
                format!("expected {} columns, found {}", dim + 1, cells.len()),
            ));
        }
        let label: i64 = cells[0]
            .parse()
            .map_err(|_| parse_err(line_no, format!("bad label '{}'", cells[0])))?;
        let label = match label {
            -1 => None,
            l if l >= 0 => Some(l as usize),
            l => {
                return Err(parse_err(line_no, format!("label {l} out of range")));
            }
        };
        let mut feat = Vec::with_capacity(dim);
        for cell in &cells[1..] {
            let v: f64 = cell
                .parse()
                .map_err(|_| parse_err(line_no, format!("bad float '{cell}'")))?;
            feat.push(v);
        }
        features.push(feat);
        labels.push(label);
    }

    let tag = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    LabeledDataset::new(features, labels, dim, tag, 0)
}
