//! Datasets: MNIST in IDX format, the correlated Gaussians benchmark, and
//! deterministic mini-batching.

use std::io::Read;
use std::path::Path;

use flate2::read::GzDecoder;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::DataMatrix;

const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
const IDX_LABELS_MAGIC: u32 = 0x0000_0801;
const GZIP_MAGIC: [u8; 2] = [0x1f, 0x8b];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
}

/// Features scaled to `[0, 1]`, one sample per row.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub split: Split,
    pub features: DataMatrix,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The first `n` samples.
    pub fn head(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.len() {
            return Err(Error::InvalidParameter(format!(
                "cannot take {n} samples from {}",
                self.len()
            )));
        }
        let indices: Vec<usize> = (0..n).collect();
        Ok(Self {
            split: self.split,
            features: self.features.select_rows(&indices),
        })
    }
}

/// Mixes a base seed with a stream index (splitmix64 finalizer), so that
/// every consumer of randomness in a run gets its own reproducible stream.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base
        .wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Reads a file, inflating it first when it starts with the gzip magic.
pub fn read_maybe_gzip(path: &Path) -> Result<Vec<u8>> {
    let raw = std::fs::read(path)?;
    if raw.starts_with(&GZIP_MAGIC) {
        let mut out = Vec::new();
        GzDecoder::new(raw.as_slice()).read_to_end(&mut out)?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

fn be_u32(bytes: &[u8], offset: usize) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::Idx("truncated header".into()))
}

/// Image count, rows, cols and pixel bytes of an IDX3 image file.
pub fn parse_idx_images(bytes: &[u8]) -> Result<(usize, usize, usize, &[u8])> {
    let magic = be_u32(bytes, 0)?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(Error::Idx(format!(
            "bad magic {magic:#010x}, expected {IDX_IMAGES_MAGIC:#010x}"
        )));
    }
    let count = be_u32(bytes, 4)? as usize;
    let rows = be_u32(bytes, 8)? as usize;
    let cols = be_u32(bytes, 12)? as usize;
    let expected = count * rows * cols;
    let pixels = &bytes[16..];
    if pixels.len() < expected {
        return Err(Error::Idx(format!(
            "truncated file: header announces {count} images of {rows}x{cols} ({expected} bytes), found {}",
            pixels.len()
        )));
    }
    if pixels.len() > expected {
        return Err(Error::Idx(format!(
            "{} trailing bytes after {count} images of {rows}x{cols}",
            pixels.len() - expected
        )));
    }
    Ok((count, rows, cols, pixels))
}

/// Decodes IDX3 image bytes into a dataset scaled by `1/255`, requiring
/// 28×28 images.
pub fn mnist_from_idx_bytes(bytes: &[u8], split: Split) -> Result<Dataset> {
    let (count, rows, cols, pixels) = parse_idx_images(bytes)?;
    if (rows, cols) != (28, 28) {
        return Err(Error::Idx(format!(
            "expected 28x28 images, found {rows}x{cols}"
        )));
    }
    if count == 0 {
        return Err(Error::Idx("file holds no images".into()));
    }
    let values = pixels.iter().map(|&p| f64::from(p) / 255.0).collect();
    Ok(Dataset {
        split,
        features: DataMatrix::new(count, rows * cols, values)?,
    })
}

/// Loads an MNIST image file, plain or gzip-compressed.
pub fn load_mnist_idx(path: &Path, split: Split) -> Result<Dataset> {
    let bytes = read_maybe_gzip(path)?;
    mnist_from_idx_bytes(&bytes, split).map_err(|e| Error::Idx(format!("{}: {e}", path.display())))
}

/// Loads an IDX1 label file. Only used to check that a labels file is
/// present and consistent with its images.
pub fn load_idx_labels(path: &Path) -> Result<Vec<u8>> {
    let bytes = read_maybe_gzip(path)?;
    let magic = be_u32(&bytes, 0)?;
    if magic != IDX_LABELS_MAGIC {
        return Err(Error::Idx(format!(
            "{}: bad label magic {magic:#010x}",
            path.display()
        )));
    }
    let count = be_u32(&bytes, 4)? as usize;
    let labels = &bytes[8..];
    if labels.len() != count {
        return Err(Error::Idx(format!(
            "{}: header announces {count} labels, found {}",
            path.display(),
            labels.len()
        )));
    }
    Ok(labels.to_vec())
}

/// Whether `bytes` start like an unsigned-byte IDX file.
pub fn is_idx_ubyte(bytes: &[u8]) -> bool {
    bytes.len() >= 4 && bytes[0] == 0 && bytes[1] == 0 && bytes[2] == 0x08 && bytes[3] > 0
}

/// Any unsigned-byte IDX file as a matrix scaled by `1/255`: the first
/// dimension indexes samples, the remaining ones are flattened into features.
pub fn idx_ubyte_matrix(bytes: &[u8]) -> Result<DataMatrix> {
    if !is_idx_ubyte(bytes) {
        return Err(Error::Idx("not an unsigned-byte IDX file".into()));
    }
    let ndims = bytes[3] as usize;
    let dims = (0..ndims)
        .map(|i| be_u32(bytes, 4 + 4 * i).map(|v| v as usize))
        .collect::<Result<Vec<_>>>()?;
    let rows = dims[0];
    let cols: usize = dims[1..].iter().product();
    let payload = &bytes[4 + 4 * ndims..];
    if payload.len() != rows * cols {
        return Err(Error::Idx(format!(
            "header announces {rows}x{cols} values, found {}",
            payload.len()
        )));
    }
    if rows == 0 || cols == 0 {
        return Err(Error::Idx("file holds no values".into()));
    }
    DataMatrix::new(
        rows,
        cols,
        payload.iter().map(|&p| f64::from(p) / 255.0).collect(),
    )
}

/// Serialises features in `[0, 1]` back to IDX3 bytes (pixels rounded to the
/// nearest byte).
pub fn encode_idx_images(features: &DataMatrix, rows: usize, cols: usize) -> Result<Vec<u8>> {
    if features.cols() != rows * cols {
        return Err(Error::DimensionMismatch(format!(
            "{} features do not form {rows}x{cols} images",
            features.cols()
        )));
    }
    let mut out = Vec::with_capacity(16 + features.as_slice().len());
    for v in [
        IDX_IMAGES_MAGIC,
        features.rows() as u32,
        rows as u32,
        cols as u32,
    ] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    out.extend(
        features
            .as_slice()
            .iter()
            .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8),
    );
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianPairSpec {
    pub dims: usize,
    pub rho: f64,
    pub samples: usize,
    pub seed: u64,
}

impl GaussianPairSpec {
    pub fn validate(&self) -> Result<()> {
        if self.dims == 0 || self.samples == 0 {
            return Err(Error::InvalidParameter(
                "dims and samples must be positive".into(),
            ));
        }
        if !(self.rho.abs() < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "correlation must lie in (-1, 1), got {}",
                self.rho
            )));
        }
        Ok(())
    }
}

/// `X_i ~ N(0, 1)`, `Y_i = ρ·X_i + √(1 − ρ²)·Z_i`, independent across
/// dimensions.
pub fn sample_correlated_gaussians(spec: &GaussianPairSpec) -> Result<(DataMatrix, DataMatrix)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let len = spec.samples * spec.dims;
    let mix = (1.0 - spec.rho * spec.rho).sqrt();
    let mut xs = Vec::with_capacity(len);
    let mut ys = Vec::with_capacity(len);
    for _ in 0..len {
        let x: f64 = StandardNormal.sample(&mut rng);
        let z: f64 = StandardNormal.sample(&mut rng);
        xs.push(x);
        ys.push(spec.rho * x + mix * z);
    }
    Ok((
        DataMatrix::new(spec.samples, spec.dims, xs)?,
        DataMatrix::new(spec.samples, spec.dims, ys)?,
    ))
}

/// `−(d/2)·log2(1 − ρ²)` bits.
pub fn analytic_gaussian_mi(dims: usize, rho: f64) -> Result<f64> {
    if !(rho.abs() < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "correlation must lie in (-1, 1), got {rho}"
        )));
    }
    // Adding 0 turns the -0 at rho = 0 into +0.
    Ok(-(dims as f64) / 2.0 * (1.0 - rho * rho).log2() + 0.0)
}

/// One epoch of shuffled, fixed-size batches; a final partial batch is
/// dropped.
#[derive(Debug)]
pub struct Batches<'a> {
    data: &'a DataMatrix,
    order: Vec<usize>,
    batch_size: usize,
    next: usize,
}

pub fn batch_iterator(
    data: &DataMatrix,
    batch_size: usize,
    epoch_seed: u64,
) -> Result<Batches<'_>> {
    if batch_size == 0 || batch_size > data.rows() {
        return Err(Error::InvalidParameter(format!(
            "batch size {batch_size} must be in 1..={}",
            data.rows()
        )));
    }
    let mut order: Vec<usize> = (0..data.rows()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(epoch_seed));
    Ok(Batches {
        data,
        order,
        batch_size,
        next: 0,
    })
}

impl Iterator for Batches<'_> {
    type Item = DataMatrix;

    fn next(&mut self) -> Option<DataMatrix> {
        let end = self.next + self.batch_size;
        if end > self.order.len() {
            return None;
        }
        let batch = self.data.select_rows(&self.order[self.next..end]);
        self.next = end;
        Some(batch)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.order.len() - self.next) / self.batch_size;
        (left, Some(left))
    }
}

impl ExactSizeIterator for Batches<'_> {}

/// `count` random subsets of `size` distinct rows each (subsets may overlap).
pub fn sample_probe_batches(
    data: &DataMatrix,
    count: usize,
    size: usize,
    seed: u64,
) -> Result<Vec<DataMatrix>> {
    if size == 0 || size > data.rows() {
        return Err(Error::InvalidParameter(format!(
            "probe size {size} must be in 1..={}",
            data.rows()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices: Vec<usize> = (0..data.rows()).collect();
    Ok((0..count)
        .map(|_| {
            let (chosen, _) = indices.partial_shuffle(&mut rng, size);
            data.select_rows(chosen)
        })
        .collect())
}
