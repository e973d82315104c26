//! Dense local descriptors.
//!
//! Three families are extracted on a regular grid:
//!
//! * multi-scale gradient-orientation histograms (4×4 cells × 8 bins, the
//!   usual dense-SIFT layout),
//! * LogCov: the matrix logarithm of the covariance of 17 per-pixel raw
//!   features over a patch, half-vectorized,
//! * the "enriched" variants of either, which append location, scale,
//!   intensity, gradient and entropy cues.
//!
//! Every descriptor records its patch center and its patch side length; the
//! latter is stored as the descriptor's scale.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::symlin::{half_vectorize, spd_log, Mat, SpdMatrix, SymMatrix};

/// Images smaller than this on either side cannot be modeled.
pub const MIN_MODEL_SIDE: usize = 64;
/// Per-pixel raw feature channels.
pub const RAW_CHANNELS: usize = 17;
/// Length of a gradient-orientation descriptor.
pub const GRAD_DIM: usize = 4 * 4 * 8;
/// Length of a LogCov descriptor: 17·18/2.
pub const LOGCOV_DIM: usize = RAW_CHANNELS * (RAW_CHANNELS + 1) / 2;
/// Number of cues appended by [`enrich`].
pub const ENRICH_DIM: usize = 6;
/// Diagonal regularizer for patch covariances.
pub const LOGCOV_EPSILON: f64 = 1e-3;

const GRID_CELLS: usize = 4;
const ORIENTATION_BINS: usize = 8;
const CLIP: f64 = 0.2;
const ENERGY_GUARD: f64 = 1e-12;
const ENTROPY_BINS: usize = 32;

/// Grayscale image with intensities in `[0, 1]`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageGray {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl ImageGray {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidParameter("image dimensions must be positive".into()));
        }
        if pixels.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: width * height,
                got: pixels.len(),
            });
        }
        if let Some(v) = pixels.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidParameter(format!("pixel value {v} outside [0, 1]")));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// Builds an image from `f(x, y)`; values are clamped to `[0, 1]`.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(width > 0 && height > 0);
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y).clamp(0.0, 1.0));
            }
        }
        Self {
            width,
            height,
            pixels,
        }
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Self {
        Self::from_fn(width, height, |_, _| value)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }

    /// Pixel lookup with replicated borders.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> f64 {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.get(x, y)
    }

    /// Sub-image `[x0, x1) × [y0, y1)`.
    pub fn crop(&self, x0: usize, y0: usize, x1: usize, y1: usize) -> Result<Self> {
        if !(x0 < x1 && x1 <= self.width && y0 < y1 && y1 <= self.height) {
            return Err(Error::InvalidParameter(format!(
                "crop ({x0},{y0})-({x1},{y1}) outside {}x{}",
                self.width, self.height
            )));
        }
        Ok(Self::from_fn(x1 - x0, y1 - y0, |x, y| self.get(x0 + x, y0 + y)))
    }

    pub fn mean(&self) -> f64 {
        self.pixels.iter().sum::<f64>() / self.pixels.len() as f64
    }

    pub fn check_model_size(&self) -> Result<()> {
        if self.width.min(self.height) < MIN_MODEL_SIDE {
            return Err(Error::ImageTooSmall {
                width: self.width,
                height: self.height,
                reason: format!("both sides must be at least {MIN_MODEL_SIDE}"),
            });
        }
        Ok(())
    }

    /// Central differences `(∂x, ∂y)` with replicated borders.
    #[inline]
    fn gradient(&self, x: usize, y: usize) -> (f64, f64) {
        let (xi, yi) = (x as isize, y as isize);
        let gx = 0.5 * (self.get_clamped(xi + 1, yi) - self.get_clamped(xi - 1, yi));
        let gy = 0.5 * (self.get_clamped(xi, yi + 1) - self.get_clamped(xi, yi - 1));
        (gx, gy)
    }
}

/// Channel order of [`RawFeatureMap`].
pub const RAW_CHANNEL_NAMES: [&str; RAW_CHANNELS] = [
    "I", "Ix", "Iy", "Ixx", "Iyy", "|Ix|", "|Iy|", "|Ixx|", "|Iyy|", "grad_mag", "cos_theta",
    "sin_theta", "laplacian", "x_norm", "y_norm", "mean3", "std3",
];

/// Seventeen per-pixel features, stored pixel-interleaved.
#[derive(Clone, Debug)]
pub struct RawFeatureMap {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl RawFeatureMap {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        RAW_CHANNELS
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> &[f64] {
        let off = (y * self.width + x) * RAW_CHANNELS;
        &self.data[off..off + RAW_CHANNELS]
    }

    pub fn channel(&self, c: usize) -> Vec<f64> {
        self.data.iter().skip(c).step_by(RAW_CHANNELS).copied().collect()
    }
}

/// Per-pixel raw features in the order of [`RAW_CHANNEL_NAMES`].
///
/// Derivatives are central differences with replicated borders; orientation is
/// `(Ix, Iy) / |∇I|`, or `(0, 0)` where the gradient vanishes.
pub fn raw_feature_map(img: &ImageGray) -> Result<RawFeatureMap> {
    img.check_model_size()?;
    let (w, h) = (img.width, img.height);
    let mut data = Vec::with_capacity(w * h * RAW_CHANNELS);
    for y in 0..h {
        for x in 0..w {
            let (xi, yi) = (x as isize, y as isize);
            let c = img.get(x, y);
            let l = img.get_clamped(xi - 1, yi);
            let r = img.get_clamped(xi + 1, yi);
            let u = img.get_clamped(xi, yi - 1);
            let d = img.get_clamped(xi, yi + 1);
            let ix = 0.5 * (r - l);
            let iy = 0.5 * (d - u);
            let ixx = r - 2.0 * c + l;
            let iyy = d - 2.0 * c + u;
            let mag = (ix * ix + iy * iy).sqrt();
            let (cos_t, sin_t) = if mag > 0.0 { (ix / mag, iy / mag) } else { (0.0, 0.0) };

            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let v = img.get_clamped(xi + dx, yi + dy);
                    sum += v;
                    sum_sq += v * v;
                }
            }
            let mean3 = sum / 9.0;
            let std3 = (sum_sq / 9.0 - mean3 * mean3).max(0.0).sqrt();

            data.extend_from_slice(&[
                c,
                ix,
                iy,
                ixx,
                iyy,
                ix.abs(),
                iy.abs(),
                ixx.abs(),
                iyy.abs(),
                mag,
                cos_t,
                sin_t,
                ixx + iyy,
                x as f64 / w as f64,
                y as f64 / h as f64,
                mean3,
                std3,
            ]);
        }
    }
    Ok(RawFeatureMap {
        width: w,
        height: h,
        data,
    })
}

/// `N` local descriptors of dimension `k` with their patch centers and patch
/// side lengths.
#[derive(Clone, Debug, PartialEq)]
pub struct DescriptorSet<T> {
    descriptors: Mat<T>,
    positions: Vec<[T; 2]>,
    scales: Vec<T>,
}

impl<T: Real> DescriptorSet<T> {
    pub fn new(descriptors: Mat<T>, positions: Vec<[T; 2]>, scales: Vec<T>) -> Result<Self> {
        let n = descriptors.rows();
        if n < 2 {
            return Err(Error::TooFewSamples(n));
        }
        if descriptors.cols() == 0 {
            return Err(Error::InvalidParameter("descriptor dimension must be positive".into()));
        }
        for len in [positions.len(), scales.len()] {
            if len != n {
                return Err(Error::DimensionMismatch { expected: n, got: len });
            }
        }
        if !descriptors.is_finite()
            || !positions.iter().flatten().all(|v| v.is_finite())
            || !scales.iter().all(|v| v.is_finite())
        {
            return Err(Error::NonFinite("descriptor set"));
        }
        Ok(Self {
            descriptors,
            positions,
            scales,
        })
    }

    /// Number of descriptors.
    pub fn len(&self) -> usize {
        self.descriptors.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Descriptor dimension.
    pub fn dim(&self) -> usize {
        self.descriptors.cols()
    }

    pub fn descriptors(&self) -> &Mat<T> {
        &self.descriptors
    }

    pub fn descriptor(&self, i: usize) -> &[T] {
        self.descriptors.row(i)
    }

    pub fn positions(&self) -> &[[T; 2]] {
        &self.positions
    }

    pub fn scales(&self) -> &[T] {
        &self.scales
    }

    pub fn cast<U: Real>(&self) -> DescriptorSet<U> {
        DescriptorSet {
            descriptors: self.descriptors.cast(),
            positions: self
                .positions
                .iter()
                .map(|p| [U::lit(p[0].as_f64()), U::lit(p[1].as_f64())])
                .collect(),
            scales: self.scales.iter().map(|&s| U::lit(s.as_f64())).collect(),
        }
    }
}

/// Number of grid positions of a `patch`-wide window sliding by `step` over
/// `extent` pixels.
#[inline]
pub fn grid_count(extent: usize, patch: usize, step: usize) -> usize {
    if patch > extent {
        0
    } else {
        (extent - patch) / step + 1
    }
}

/// Separable triangular filter `k(t) = max(0, 1 − |t − δ|/cell)` where
/// `δ = (cell − 1)/2 − ⌊(cell − 1)/2⌋`. Sampling the output at integer `q`
/// gives the bilinear cell response centered at `q + δ`. Pixels outside the
/// image contribute zero.
struct TriangleKernel {
    taps: Vec<(isize, f64)>,
}

impl TriangleKernel {
    fn new(cell: usize) -> Self {
        let delta = if cell.is_multiple_of(2) { 0.5 } else { 0.0 };
        let c = cell as isize;
        let taps = (-c..=c)
            .filter_map(|t| {
                let w = 1.0 - (t as f64 - delta).abs() / cell as f64;
                (w > 0.0).then_some((t, w))
            })
            .collect();
        Self { taps }
    }

    fn apply(&self, src: &[f64], w: usize, h: usize) -> Vec<f64> {
        let mut tmp = vec![0.0; w * h];
        for y in 0..h {
            let row = &src[y * w..(y + 1) * w];
            let out = &mut tmp[y * w..(y + 1) * w];
            for (x, o) in out.iter_mut().enumerate() {
                let mut acc = 0.0;
                for &(t, k) in &self.taps {
                    let xx = x as isize + t;
                    if xx >= 0 && (xx as usize) < w {
                        acc += k * row[xx as usize];
                    }
                }
                *o = acc;
            }
        }
        let mut out = vec![0.0; w * h];
        for &(t, k) in &self.taps {
            for y in 0..h {
                let yy = y as isize + t;
                if yy < 0 || yy as usize >= h {
                    continue;
                }
                let src_row = &tmp[yy as usize * w..(yy as usize + 1) * w];
                let dst_row = &mut out[y * w..(y + 1) * w];
                for (d, &s) in dst_row.iter_mut().zip(src_row) {
                    *d += k * s;
                }
            }
        }
        out
    }
}

/// Gradient magnitude split over 8 orientation planes with linear
/// interpolation between neighbouring bins.
fn orientation_planes(img: &ImageGray) -> Vec<Vec<f64>> {
    let (w, h) = (img.width, img.height);
    let mut planes = vec![vec![0.0; w * h]; ORIENTATION_BINS];
    let bins = ORIENTATION_BINS as f64;
    for y in 0..h {
        for x in 0..w {
            let (gx, gy) = img.gradient(x, y);
            let mag = (gx * gx + gy * gy).sqrt();
            if mag == 0.0 {
                continue;
            }
            let mut angle = gy.atan2(gx);
            if angle < 0.0 {
                angle += 2.0 * PI;
            }
            let t = angle * bins / (2.0 * PI);
            let lo = t.floor();
            let frac = t - lo;
            let b0 = (lo as usize) % ORIENTATION_BINS;
            let b1 = (b0 + 1) % ORIENTATION_BINS;
            planes[b0][y * w + x] += mag * (1.0 - frac);
            planes[b1][y * w + x] += mag * frac;
        }
    }
    planes
}

fn normalize_descriptor(v: &mut [f64]) {
    let energy: f64 = v.iter().map(|x| x * x).sum();
    if energy < ENERGY_GUARD {
        v.fill(0.0);
        return;
    }
    let norm = energy.sqrt();
    for x in v.iter_mut() {
        *x = (*x / norm).min(CLIP);
    }
    let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in v.iter_mut() {
        *x /= norm;
    }
}

/// Dense 128-d gradient-orientation descriptors at every `cell` in
/// `cell_sizes` (patch side `4·cell`), sampled every `step` pixels.
pub fn dense_grad_descriptors(
    img: &ImageGray,
    cell_sizes: &[usize],
    step: usize,
) -> Result<DescriptorSet<f64>> {
    img.check_model_size()?;
    if step == 0 {
        return Err(Error::InvalidParameter("step must be at least 1".into()));
    }
    if cell_sizes.is_empty() || cell_sizes.iter().any(|&c| c < 2) {
        return Err(Error::InvalidParameter("cell sizes must be at least 2".into()));
    }
    let (w, h) = (img.width, img.height);
    let planes = orientation_planes(img);

    let mut rows = Vec::new();
    let mut positions = Vec::new();
    let mut scales = Vec::new();
    for &cell in cell_sizes {
        let patch = GRID_CELLS * cell;
        let (nx, ny) = (grid_count(w, patch, step), grid_count(h, patch, step));
        if nx == 0 || ny == 0 {
            continue;
        }
        let kernel = TriangleKernel::new(cell);
        let filtered: Vec<Vec<f64>> = planes.iter().map(|p| kernel.apply(p, w, h)).collect();
        let offset = (cell - 1) / 2;
        for gy in 0..ny {
            let y0 = gy * step;
            for gx in 0..nx {
                let x0 = gx * step;
                let mut desc = vec![0.0; GRAD_DIM];
                for i in 0..GRID_CELLS {
                    let qy = y0 + i * cell + offset;
                    for j in 0..GRID_CELLS {
                        let qx = x0 + j * cell + offset;
                        let base = (i * GRID_CELLS + j) * ORIENTATION_BINS;
                        for (o, plane) in filtered.iter().enumerate() {
                            desc[base + o] = plane[qy * w + qx];
                        }
                    }
                }
                normalize_descriptor(&mut desc);
                rows.extend_from_slice(&desc);
                let half = patch as f64 / 2.0;
                positions.push([x0 as f64 + half, y0 as f64 + half]);
                scales.push(patch as f64);
            }
        }
    }
    if rows.is_empty() {
        return Err(Error::ImageTooSmall {
            width: w,
            height: h,
            reason: "no descriptor patch fits".into(),
        });
    }
    let n = positions.len();
    DescriptorSet::new(Mat::from_vec(n, GRAD_DIM, rows)?, positions, scales)
}

/// Unbiased covariance of the raw features over a patch plus `LOGCOV_EPSILON·I`.
pub fn patch_covariance(map: &RawFeatureMap, x0: usize, y0: usize, patch: usize) -> SymMatrix<f64> {
    let count = (patch * patch) as f64;
    let mut mean = [0.0; RAW_CHANNELS];
    for y in y0..y0 + patch {
        for x in x0..x0 + patch {
            for (m, &v) in mean.iter_mut().zip(map.pixel(x, y)) {
                *m += v;
            }
        }
    }
    for m in mean.iter_mut() {
        *m /= count;
    }
    let mut acc = [0.0; LOGCOV_DIM];
    let mut centered = [0.0; RAW_CHANNELS];
    for y in y0..y0 + patch {
        for x in x0..x0 + patch {
            for ((c, &v), &m) in centered.iter_mut().zip(map.pixel(x, y)).zip(&mean) {
                *c = v - m;
            }
            let mut idx = 0;
            for i in 0..RAW_CHANNELS {
                let ci = centered[i];
                for &cj in &centered[i..] {
                    acc[idx] += ci * cj;
                    idx += 1;
                }
            }
        }
    }
    let norm = 1.0 / (count - 1.0);
    let mut packed = acc.iter();
    let mut m = Mat::zeros(RAW_CHANNELS, RAW_CHANNELS);
    for i in 0..RAW_CHANNELS {
        for j in i..RAW_CHANNELS {
            let v = packed.next().expect("packed upper triangle") * norm;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    SymMatrix::from_upper_of(&m).add_diagonal(LOGCOV_EPSILON)
}

/// LogCov descriptors: `half_vectorize(log(Cov + εI))` of the raw features
/// over `patch × patch` windows sampled every `step` pixels.
pub fn logcov_descriptors(img: &ImageGray, patch: usize, step: usize) -> Result<DescriptorSet<f64>> {
    if patch < 8 {
        return Err(Error::InvalidParameter(format!("LogCov patch {patch} must be at least 8")));
    }
    if step == 0 {
        return Err(Error::InvalidParameter("step must be at least 1".into()));
    }
    let map = raw_feature_map(img)?;
    let (w, h) = (img.width, img.height);
    let (nx, ny) = (grid_count(w, patch, step), grid_count(h, patch, step));
    if nx * ny < 2 {
        return Err(Error::ImageTooSmall {
            width: w,
            height: h,
            reason: format!("fewer than two {patch}-pixel patches fit"),
        });
    }
    let mut rows = Vec::with_capacity(nx * ny * LOGCOV_DIM);
    let mut positions = Vec::with_capacity(nx * ny);
    for gy in 0..ny {
        let y0 = gy * step;
        for gx in 0..nx {
            let x0 = gx * step;
            let cov = SpdMatrix::new(patch_covariance(&map, x0, y0, patch))?;
            rows.extend(half_vectorize(&spd_log(&cov)?));
            let half = patch as f64 / 2.0;
            positions.push([x0 as f64 + half, y0 as f64 + half]);
        }
    }
    let n = positions.len();
    DescriptorSet::new(
        Mat::from_vec(n, LOGCOV_DIM, rows)?,
        positions,
        vec![patch as f64; n],
    )
}

/// Summed-area table with one row/column of zero padding.
struct Integral {
    w: usize,
    table: Vec<f64>,
}

impl Integral {
    fn new(values: &[f64], w: usize, h: usize) -> Self {
        let stride = w + 1;
        let mut table = vec![0.0; stride * (h + 1)];
        for y in 0..h {
            let mut row_sum = 0.0;
            for x in 0..w {
                row_sum += values[y * w + x];
                table[(y + 1) * stride + x + 1] = table[y * stride + x + 1] + row_sum;
            }
        }
        Self { w, table }
    }

    fn sum(&self, x0: usize, y0: usize, x1: usize, y1: usize) -> f64 {
        let s = self.w + 1;
        self.table[y1 * s + x1] - self.table[y0 * s + x1] - self.table[y1 * s + x0]
            + self.table[y0 * s + x0]
    }
}

/// Patch window `[x0, x1) × [y0, y1)` of side `scale` centered at `pos`,
/// clipped to the image.
fn patch_window(img: &ImageGray, pos: [f64; 2], scale: f64) -> (usize, usize, usize, usize) {
    let half = scale / 2.0;
    let clip = |lo: f64, extent: usize| -> (usize, usize) {
        let a = lo.floor().max(0.0) as usize;
        let b = ((lo + scale).floor().max(0.0) as usize).min(extent);
        let a = a.min(extent.saturating_sub(1));
        (a, b.max(a + 1))
    };
    let (x0, x1) = clip(pos[0] - half, img.width);
    let (y0, y1) = clip(pos[1] - half, img.height);
    (x0, y0, x1, y1)
}

fn entropy_bits(img: &ImageGray, x0: usize, y0: usize, x1: usize, y1: usize) -> f64 {
    let mut hist = [0u32; ENTROPY_BINS];
    for y in y0..y1 {
        for &v in &img.pixels[y * img.width + x0..y * img.width + x1] {
            let b = ((v * ENTROPY_BINS as f64) as usize).min(ENTROPY_BINS - 1);
            hist[b] += 1;
        }
    }
    let total = ((x1 - x0) * (y1 - y0)) as f64;
    hist.iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total;
            -p * p.log2()
        })
        .sum::<f64>()
        .max(0.0)
}

/// Appends six cues to every descriptor: `x/W`, `y/H`, `log2(scale)`, mean
/// patch intensity, mean patch gradient magnitude, and the 32-bin intensity
/// entropy of the patch in bits.
pub fn enrich(ds: &DescriptorSet<f64>, img: &ImageGray) -> Result<DescriptorSet<f64>> {
    let (w, h) = (img.width, img.height);
    let grad_mag: Vec<f64> = (0..h)
        .flat_map(|y| (0..w).map(move |x| (x, y)))
        .map(|(x, y)| {
            let (gx, gy) = img.gradient(x, y);
            (gx * gx + gy * gy).sqrt()
        })
        .collect();
    let intensity = Integral::new(&img.pixels, w, h);
    let gradient = Integral::new(&grad_mag, w, h);

    let k = ds.dim();
    let n = ds.len();
    let mut rows = Vec::with_capacity(n * (k + ENRICH_DIM));
    for i in 0..n {
        let pos = ds.positions[i];
        let scale = ds.scales[i];
        let (x0, y0, x1, y1) = patch_window(img, pos, scale);
        let area = ((x1 - x0) * (y1 - y0)) as f64;
        rows.extend_from_slice(ds.descriptor(i));
        rows.extend_from_slice(&[
            pos[0] / w as f64,
            pos[1] / h as f64,
            scale.log2(),
            intensity.sum(x0, y0, x1, y1) / area,
            gradient.sum(x0, y0, x1, y1) / area,
            entropy_bits(img, x0, y0, x1, y1),
        ]);
    }
    DescriptorSet::new(
        Mat::from_vec(n, k + ENRICH_DIM, rows)?,
        ds.positions.clone(),
        ds.scales.clone(),
    )
}

/// Which descriptor family to extract.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DescriptorKind {
    Grad,
    EnrichedGrad,
    LogCov,
    EnrichedLogCov,
}

impl DescriptorKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Grad => "grad",
            Self::EnrichedGrad => "egrad",
            Self::LogCov => "logcov",
            Self::EnrichedLogCov => "elogcov",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        [Self::Grad, Self::EnrichedGrad, Self::LogCov, Self::EnrichedLogCov]
            .into_iter()
            .find(|k| k.name() == name)
    }

    /// Descriptor dimension `k` produced by this family.
    pub fn dim(self) -> usize {
        match self {
            Self::Grad => GRAD_DIM,
            Self::EnrichedGrad => GRAD_DIM + ENRICH_DIM,
            Self::LogCov => LOGCOV_DIM,
            Self::EnrichedLogCov => LOGCOV_DIM + ENRICH_DIM,
        }
    }
}

/// Extraction settings shared by all families.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtractParams {
    pub kind: DescriptorKind,
    pub cell_sizes: Vec<usize>,
    pub step: usize,
    pub logcov_patch: usize,
}

impl Default for ExtractParams {
    fn default() -> Self {
        Self {
            kind: DescriptorKind::EnrichedGrad,
            cell_sizes: vec![4, 8, 16],
            step: 2,
            logcov_patch: 16,
        }
    }
}

pub fn extract(img: &ImageGray, params: &ExtractParams) -> Result<DescriptorSet<f64>> {
    match params.kind {
        DescriptorKind::Grad => dense_grad_descriptors(img, &params.cell_sizes, params.step),
        DescriptorKind::EnrichedGrad => {
            enrich(&dense_grad_descriptors(img, &params.cell_sizes, params.step)?, img)
        }
        DescriptorKind::LogCov => logcov_descriptors(img, params.logcov_patch, params.step),
        DescriptorKind::EnrichedLogCov => {
            enrich(&logcov_descriptors(img, params.logcov_patch, params.step)?, img)
        }
    }
}
