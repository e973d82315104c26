//! Partial background removal.
//!
//! A spectral-residual saliency map locates the most salient blob; its
//! bounding box is grown by a margin that is larger for small boxes with
//! busy content, and everything outside the grown box is cropped away.

use std::collections::VecDeque;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::descriptors::{ImageGray, MIN_MODEL_SIDE};
use crate::error::{Error, Result};
use crate::spm::Rect;

/// Smallest side accepted by [`saliency_map`].
pub const MIN_SALIENCY_SIDE: usize = 16;

const FLAT_RANGE: f64 = 1e-12;
const LOG_FLOOR: f64 = 1e-12;

/// Saliency in `[0, 1]`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SaliencyMap {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl SaliencyMap {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

/// Settings for [`apply_pbr`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PbrParams {
    /// Foreground threshold as a fraction of the peak saliency.
    pub threshold: f64,
    /// Blur applied to the saliency map.
    pub sigma: f64,
    pub margin_base: f64,
    pub margin_gain: f64,
    pub margin_max: f64,
    /// Crops with a smaller side are declined.
    pub min_side: usize,
}

impl Default for PbrParams {
    fn default() -> Self {
        Self {
            threshold: 0.5,
            sigma: 2.5,
            margin_base: 0.05,
            margin_gain: 0.25,
            margin_max: 0.35,
            min_side: MIN_MODEL_SIDE,
        }
    }
}

/// What [`apply_pbr`] did to an image.
#[derive(Clone, Debug, PartialEq)]
pub struct PbrOutcome {
    pub image: ImageGray,
    /// Crop window in source coordinates; the full frame when not applied.
    pub window: Rect,
    /// Coarse foreground box before expansion, if one was found.
    pub foreground: Option<Rect>,
    pub applied: bool,
}

fn fft_2d(data: &mut [Complex<f64>], width: usize, height: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let (row, col) = if inverse {
        (planner.plan_fft_inverse(width), planner.plan_fft_inverse(height))
    } else {
        (planner.plan_fft_forward(width), planner.plan_fft_forward(height))
    };
    for r in data.chunks_exact_mut(width) {
        row.process(r);
    }
    let mut column = vec![Complex::default(); height];
    for x in 0..width {
        for y in 0..height {
            column[y] = data[y * width + x];
        }
        col.process(&mut column);
        for y in 0..height {
            data[y * width + x] = column[y];
        }
    }
}

/// Separable Gaussian blur with clamped borders.
fn gaussian_blur(values: &[f64], width: usize, height: usize, sigma: f64) -> Vec<f64> {
    if sigma <= 0.0 {
        return values.to_vec();
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let kernel: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = kernel.iter().sum();
    let kernel: Vec<f64> = kernel.iter().map(|k| k / total).collect();
    let clamp = |v: isize, n: usize| v.clamp(0, n as isize - 1) as usize;
    let mut tmp = vec![0.0; values.len()];
    for y in 0..height {
        for x in 0..width {
            tmp[y * width + x] = kernel
                .iter()
                .enumerate()
                .map(|(k, w)| w * values[y * width + clamp(x as isize + k as isize - radius, width)])
                .sum();
        }
    }
    let mut out = vec![0.0; values.len()];
    for y in 0..height {
        for x in 0..width {
            out[y * width + x] = kernel
                .iter()
                .enumerate()
                .map(|(k, w)| w * tmp[clamp(y as isize + k as isize - radius, height) * width + x])
                .sum();
        }
    }
    out
}

/// Spectral-residual saliency: the log amplitude spectrum minus its 3×3
/// local mean, recombined with the original phase, inverted, squared,
/// blurred and min-max normalized. Flat images give an all-zero map.
pub fn saliency_map(img: &ImageGray, sigma: f64) -> Result<SaliencyMap> {
    let (w, h) = (img.width(), img.height());
    if w.min(h) < MIN_SALIENCY_SIDE {
        return Err(Error::ImageTooSmall {
            width: w,
            height: h,
            reason: format!("saliency needs at least {MIN_SALIENCY_SIDE} pixels per side"),
        });
    }
    let (lo, hi) = img
        .pixels()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, u), &p| (l.min(p), u.max(p)));
    if hi - lo < FLAT_RANGE {
        return Ok(SaliencyMap {
            width: w,
            height: h,
            values: vec![0.0; w * h],
        });
    }

    let mut spec: Vec<Complex<f64>> = img.pixels().iter().map(|&p| Complex::new(p, 0.0)).collect();
    fft_2d(&mut spec, w, h, false);
    let log_amp: Vec<f64> = spec.iter().map(|c| c.norm().max(LOG_FLOOR).ln()).collect();
    for y in 0..h {
        for x in 0..w {
            let mut local = 0.0;
            for dy in [h - 1, 0, 1] {
                for dx in [w - 1, 0, 1] {
                    local += log_amp[((y + dy) % h) * w + (x + dx) % w];
                }
            }
            let residual = log_amp[y * w + x] - local / 9.0;
            let c = &mut spec[y * w + x];
            let phase = c.arg();
            *c = Complex::from_polar(residual.exp(), phase);
        }
    }
    fft_2d(&mut spec, w, h, true);
    let energy: Vec<f64> = spec.iter().map(|c| c.norm_sqr()).collect();
    let mut values = gaussian_blur(&energy, w, h, sigma);
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, u), &v| (l.min(v), u.max(v)));
    if hi - lo < FLAT_RANGE * hi.abs().max(1.0) {
        values.iter_mut().for_each(|v| *v = 0.0);
    } else {
        values.iter_mut().for_each(|v| *v = (*v - lo) / (hi - lo));
    }
    Ok(SaliencyMap {
        width: w,
        height: h,
        values,
    })
}

/// Bounding box of the largest 4-connected component at or above
/// `threshold · max`. `None` for an all-zero map.
pub fn foreground_bbox(map: &SaliencyMap, threshold: f64) -> Option<Rect> {
    let peak = map.max();
    if !(peak > 0.0) {
        return None;
    }
    let (w, h) = (map.width, map.height);
    let cut = threshold * peak;
    let mut label = vec![false; w * h];
    let mut best: Option<(usize, Rect)> = None;
    let mut queue = VecDeque::new();
    for start in 0..w * h {
        if label[start] || map.values[start] < cut {
            continue;
        }
        label[start] = true;
        queue.push_back(start);
        let mut size = 0;
        let mut rect = Rect {
            x0: usize::MAX,
            y0: usize::MAX,
            x1: 0,
            y1: 0,
        };
        while let Some(i) = queue.pop_front() {
            let (x, y) = (i % w, i / w);
            size += 1;
            rect.x0 = rect.x0.min(x);
            rect.y0 = rect.y0.min(y);
            rect.x1 = rect.x1.max(x + 1);
            rect.y1 = rect.y1.max(y + 1);
            let mut visit = |j: usize| {
                if !label[j] && map.values[j] >= cut {
                    label[j] = true;
                    queue.push_back(j);
                }
            };
            if x > 0 {
                visit(i - 1);
            }
            if x + 1 < w {
                visit(i + 1);
            }
            if y > 0 {
                visit(i - w);
            }
            if y + 1 < h {
                visit(i + w);
            }
        }
        if best.is_none_or(|(s, _)| size > s) {
            best = Some((size, rect));
        }
    }
    best.map(|(_, r)| r)
}

fn variance(img: &ImageGray, r: &Rect) -> f64 {
    let n = (r.width() * r.height()) as f64;
    let (mut s, mut s2) = (0.0, 0.0);
    for y in r.y0..r.y1 {
        for x in r.x0..r.x1 {
            let v = img.get(x, y);
            s += v;
            s2 += v * v;
        }
    }
    let m = s / n;
    (s2 / n - m * m).max(0.0)
}

/// Relative margin `clamp(base + gain·(1 − area ratio)·variance ratio,
/// base, max)`, where the variance ratio compares the box content to the
/// whole image and is capped at 1.
pub fn expansion_margin(img: &ImageGray, bbox: &Rect, params: &PbrParams) -> f64 {
    let full = Rect {
        x0: 0,
        y0: 0,
        x1: img.width(),
        y1: img.height(),
    };
    let area_ratio = (bbox.width() * bbox.height()) as f64 / (img.width() * img.height()) as f64;
    let total_var = variance(img, &full);
    let var_ratio = if total_var > 0.0 {
        (variance(img, bbox) / total_var).min(1.0)
    } else {
        0.0
    };
    (params.margin_base + params.margin_gain * (1.0 - area_ratio) * var_ratio).clamp(params.margin_base, params.margin_max)
}

/// Grows each side of `bbox` by `round(margin · side)` and clips to the
/// image.
pub fn expand_bbox(img: &ImageGray, bbox: &Rect, params: &PbrParams) -> Rect {
    let m = expansion_margin(img, bbox, params);
    let dx = (m * bbox.width() as f64).round() as usize;
    let dy = (m * bbox.height() as f64).round() as usize;
    Rect {
        x0: bbox.x0.saturating_sub(dx),
        y0: bbox.y0.saturating_sub(dy),
        x1: (bbox.x1 + dx).min(img.width()),
        y1: (bbox.y1 + dy).min(img.height()),
    }
}

/// Crops `img` to the expanded salient box. The image is returned unchanged
/// when no box is found or the crop would fall below `min_side`.
pub fn apply_pbr(img: &ImageGray, params: &PbrParams) -> Result<PbrOutcome> {
    let full = Rect {
        x0: 0,
        y0: 0,
        x1: img.width(),
        y1: img.height(),
    };
    let unchanged = |foreground| PbrOutcome {
        image: img.clone(),
        window: full,
        foreground,
        applied: false,
    };
    let map = saliency_map(img, params.sigma)?;
    let Some(fg) = foreground_bbox(&map, params.threshold) else {
        return Ok(unchanged(None));
    };
    let window = expand_bbox(img, &fg, params);
    if window.width().min(window.height()) < params.min_side || window == full {
        return Ok(unchanged(Some(fg)));
    }
    Ok(PbrOutcome {
        image: img.crop(window.x0, window.y0, window.x1, window.y1)?,
        window,
        foreground: Some(fg),
        applied: true,
    })
}

#[cfg(test)]
mod tests {
    use rand::Rng;

    use super::*;
    use crate::testutil::rng;

    /// Textured square on a smooth background.
    pub(crate) fn object_fixture(size: usize, obj: Rect, seed: u64) -> ImageGray {
        let mut r = rng(seed);
        let noise: Vec<f64> = (0..size * size).map(|_| r.random_range(0.0..1.0)).collect();
        ImageGray::from_fn(size, size, |x, y| {
            if x >= obj.x0 && x < obj.x1 && y >= obj.y0 && y < obj.y1 {
                0.2 + 0.6 * noise[y * size + x]
            } else {
                0.5 + 0.05 * ((x + y) as f64 / (2 * size) as f64)
            }
        })
    }

    fn object() -> Rect {
        Rect {
            x0: 40,
            y0: 48,
            x1: 112,
            y1: 120,
        }
    }

    fn contains(outer: &Rect, inner: &Rect) -> bool {
        outer.x0 <= inner.x0 && outer.y0 <= inner.y0 && outer.x1 >= inner.x1 && outer.y1 >= inner.y1
    }

    #[test]
    fn constant_image_passes_through() {
        let img = ImageGray::constant(128, 96, 0.3);
        let map = saliency_map(&img, 2.5).unwrap();
        assert!(map.values().iter().all(|&v| v == 0.0));
        let out = apply_pbr(&img, &PbrParams::default()).unwrap();
        assert!(!out.applied);
        assert_eq!(out.image, img);
        assert_eq!(out.foreground, None);
    }

    #[test]
    fn tiny_image_rejected() {
        let img = ImageGray::constant(8, 40, 0.3);
        assert!(matches!(saliency_map(&img, 2.5), Err(Error::ImageTooSmall { .. })));
    }

    #[test]
    fn saliency_is_normalized() {
        let img = object_fixture(160, object(), 1);
        let map = saliency_map(&img, 2.5).unwrap();
        let (lo, hi) = map.values().iter().fold((1.0f64, 0.0f64), |(l, u), &v| (l.min(v), u.max(v)));
        assert!(lo.abs() < 1e-12 && (hi - 1.0).abs() < 1e-12);
    }

    #[test]
    fn crop_keeps_object_and_removes_background() {
        for seed in 0..4 {
            let img = object_fixture(160, object(), seed);
            let out = apply_pbr(&img, &PbrParams::default()).unwrap();
            assert!(out.applied, "seed {seed}");
            assert!(contains(&out.window, &object()), "seed {seed}: {:?}", out.window);
            let kept = (out.window.width() * out.window.height()) as f64 / (160.0 * 160.0);
            assert!(kept <= 0.8, "seed {seed}: kept {kept}");
            assert_eq!(out.image.width(), out.window.width());
        }
    }

    #[test]
    fn second_pass_keeps_object() {
        let img = object_fixture(160, object(), 7);
        let first = apply_pbr(&img, &PbrParams::default()).unwrap();
        let second = apply_pbr(&first.image, &PbrParams::default()).unwrap();
        let w = first.window;
        let shifted = Rect {
            x0: object().x0 - w.x0,
            y0: object().y0 - w.y0,
            x1: object().x1 - w.x0,
            y1: object().y1 - w.y0,
        };
        assert!(contains(&second.window, &shifted), "{:?}", second.window);
    }

    #[test]
    fn bbox_of_largest_component() {
        let mut values = vec![0.0; 20 * 20];
        for y in 2..4 {
            for x in 2..4 {
                values[y * 20 + x] = 1.0;
            }
        }
        for y in 10..16 {
            for x in 5..12 {
                values[y * 20 + x] = 0.8;
            }
        }
        let map = SaliencyMap {
            width: 20,
            height: 20,
            values,
        };
        assert_eq!(
            foreground_bbox(&map, 0.5),
            Some(Rect {
                x0: 5,
                y0: 10,
                x1: 12,
                y1: 16
            })
        );
    }

    #[test]
    fn margin_bounds() {
        let img = object_fixture(160, object(), 3);
        let p = PbrParams::default();
        let full = Rect {
            x0: 0,
            y0: 0,
            x1: 160,
            y1: 160,
        };
        assert!((expansion_margin(&img, &full, &p) - p.margin_base).abs() < 1e-12);
        let m = expansion_margin(&img, &object(), &p);
        assert!(m > p.margin_base && m <= p.margin_max);
        let flat = ImageGray::constant(100, 100, 0.5);
        assert_eq!(expansion_margin(&flat, &object(), &p), p.margin_base);
    }

    #[test]
    fn expansion_is_clipped() {
        let img = object_fixture(160, object(), 3);
        let corner = Rect {
            x0: 0,
            y0: 150,
            x1: 20,
            y1: 160,
        };
        let e = expand_bbox(&img, &corner, &PbrParams::default());
        assert_eq!((e.x0, e.y1), (0, 160));
        assert!(e.x1 > 20 && e.y0 < 150);
    }
}
