//! Spatial-pyramid aggregation: one embedded Gaussian per pyramid region,
//! weighted per level and concatenated.

use std::fmt;

use crate::descriptors::DescriptorSet;
use crate::embedding::{embed, EmbeddingParams};
use crate::error::{Error, Result};
use crate::gaussian::fit_gaussian_rows;
use crate::scalar::Real;
use crate::symlin::half_len;

/// Smallest region side, in pixels.
pub const MIN_REGION_SIDE: usize = 8;

/// Pyramid levels as `(rows, cols)` grids.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PyramidSpec {
    levels: Vec<(usize, usize)>,
}

impl PyramidSpec {
    pub fn new(levels: Vec<(usize, usize)>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InvalidParameter("pyramid needs at least one level".into()));
        }
        if levels.iter().any(|&(r, c)| r == 0 || c == 0) {
            return Err(Error::InvalidParameter("pyramid grid dimensions must be positive".into()));
        }
        Ok(Self { levels })
    }

    pub fn levels(&self) -> &[(usize, usize)] {
        &self.levels
    }

    /// Total number of regions `B`.
    pub fn block_count(&self) -> usize {
        self.levels.iter().map(|&(r, c)| r * c).sum()
    }

    /// Level index of every region, in region order.
    pub fn block_levels(&self) -> Vec<usize> {
        self.levels
            .iter()
            .enumerate()
            .flat_map(|(l, &(r, c))| std::iter::repeat_n(l, r * c))
            .collect()
    }

    /// Parses `"1x1,2x2,1x3,4x4"`.
    pub fn parse(s: &str) -> Result<Self> {
        let levels = s
            .split(',')
            .map(|part| {
                let (r, c) = part
                    .trim()
                    .split_once(['x', 'X'])
                    .ok_or_else(|| Error::InvalidParameter(format!("bad pyramid level '{part}'")))?;
                let parse = |v: &str| {
                    v.trim()
                        .parse::<usize>()
                        .map_err(|_| Error::InvalidParameter(format!("bad pyramid level '{part}'")))
                };
                Ok((parse(r)?, parse(c)?))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(levels)
    }
}

impl Default for PyramidSpec {
    fn default() -> Self {
        Self {
            levels: vec![(1, 1), (2, 2), (1, 3), (4, 4)],
        }
    }
}

impl fmt::Display for PyramidSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.levels.iter().map(|(r, c)| format!("{r}x{c}")).collect();
        f.write_str(&parts.join(","))
    }
}

/// Half-open pixel rectangle `[x0, x1) × [y0, y1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Rect {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl Rect {
    pub fn width(&self) -> usize {
        self.x1 - self.x0
    }

    pub fn height(&self) -> usize {
        self.y1 - self.y0
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x0 as f64 && x < self.x1 as f64 && y >= self.y0 as f64 && y < self.y1 as f64
    }
}

/// Tiles a `width × height` image per level with boundaries at
/// `⌊i·W/cols⌋`; regions are ordered level-major, then row-major.
pub fn partition(width: usize, height: usize, spec: &PyramidSpec) -> Result<Vec<Rect>> {
    let mut rects = Vec::with_capacity(spec.block_count());
    for &(rows, cols) in spec.levels() {
        for r in 0..rows {
            for c in 0..cols {
                let rect = Rect {
                    x0: c * width / cols,
                    x1: (c + 1) * width / cols,
                    y0: r * height / rows,
                    y1: (r + 1) * height / rows,
                };
                if rect.width() < MIN_REGION_SIDE || rect.height() < MIN_REGION_SIDE {
                    return Err(Error::RegionTooSmall {
                        region: rects.len(),
                        width: rect.width(),
                        height: rect.height(),
                    });
                }
                rects.push(rect);
            }
        }
    }
    Ok(rects)
}

/// Region weights `(1/N_l) / Σ_l' (1/N_l')`, one per region.
pub fn spm_weights<T: Real>(spec: &PyramidSpec) -> Vec<T> {
    let inv_sum: f64 = spec.levels().iter().map(|&(r, c)| 1.0 / (r * c) as f64).sum();
    spec.levels()
        .iter()
        .flat_map(|&(r, c)| {
            let n = r * c;
            std::iter::repeat_n(T::lit((1.0 / n as f64) / inv_sum), n)
        })
        .collect()
}

/// Per-region vector length `d = (k+1)(k+2)/2` for descriptor dimension `k`.
pub const fn block_dim(k: usize) -> usize {
    half_len(k + 1)
}

/// Weighted region vectors of one image and their concatenation.
#[derive(Clone, Debug, PartialEq)]
pub struct SpmFeature<T> {
    blocks: Vec<Vec<T>>,
    block_weights: Vec<T>,
    concatenated: Vec<T>,
}

impl<T: Real> SpmFeature<T> {
    /// Assembles a feature from already weighted blocks of equal length.
    pub fn from_blocks(blocks: Vec<Vec<T>>, block_weights: Vec<T>) -> Result<Self> {
        if blocks.is_empty() || blocks.len() != block_weights.len() {
            return Err(Error::DimensionMismatch {
                expected: blocks.len().max(1),
                got: block_weights.len(),
            });
        }
        let d = blocks[0].len();
        if let Some(b) = blocks.iter().find(|b| b.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: b.len(),
            });
        }
        let concatenated = blocks.iter().flatten().copied().collect();
        Ok(Self {
            blocks,
            block_weights,
            concatenated,
        })
    }

    pub fn blocks(&self) -> &[Vec<T>] {
        &self.blocks
    }

    pub fn block_weights(&self) -> &[T] {
        &self.block_weights
    }

    pub fn concatenated(&self) -> &[T] {
        &self.concatenated
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_dim(&self) -> usize {
        self.blocks[0].len()
    }

    pub fn into_concatenated(self) -> Vec<T> {
        self.concatenated
    }
}

/// Indices of the descriptors whose centers fall in each region.
pub fn assign_regions<T: Real>(ds: &DescriptorSet<T>, regions: &[Rect]) -> Vec<Vec<usize>> {
    let mut members = vec![Vec::new(); regions.len()];
    for (i, p) in ds.positions().iter().enumerate() {
        let (x, y) = (p[0].as_f64(), p[1].as_f64());
        for (m, rect) in members.iter_mut().zip(regions) {
            if rect.contains(x, y) {
                m.push(i);
            }
        }
    }
    members
}

/// Fits, embeds and weights one Gaussian per pyramid region of a
/// `width × height` image.
pub fn spm_feature<T: Real>(
    ds: &DescriptorSet<T>,
    (width, height): (usize, usize),
    spec: &PyramidSpec,
    params: &EmbeddingParams<T>,
    epsilon: T,
) -> Result<SpmFeature<T>> {
    let regions = partition(width, height, spec)?;
    let members = assign_regions(ds, &regions);
    let weights: Vec<T> = spm_weights(spec);
    let mut blocks = Vec::with_capacity(regions.len());
    for (region, (idx, &w)) in members.iter().zip(&weights).enumerate() {
        if idx.len() < 2 {
            return Err(Error::EmptyRegion {
                region,
                count: idx.len(),
            });
        }
        let gm = fit_gaussian_rows(ds.descriptors(), idx, epsilon)?;
        let e = embed(&gm, params)?;
        blocks.push(e.f.into_iter().map(|v| v * w).collect());
    }
    SpmFeature::from_blocks(blocks, weights)
}

#[cfg(test)]
mod tests {
    use rand::Rng;

    use super::*;
    use crate::embedding::gauss_distance;
    use crate::gaussian::fit_gaussian;
    use crate::symlin::Mat;
    use crate::testutil::rng;

    fn random_descriptors(seed: u64, n: usize, k: usize, w: usize, h: usize) -> DescriptorSet<f64> {
        let mut r = rng(seed);
        let data = Mat::from_fn(n, k, |_, _| r.random_range(-1.0..1.0));
        let pos = (0..n)
            .map(|_| [r.random_range(0.0..w as f64), r.random_range(0.0..h as f64)])
            .collect();
        DescriptorSet::new(data, pos, vec![16.0; n]).unwrap()
    }

    fn rect(x0: usize, y0: usize, x1: usize, y1: usize) -> Rect {
        Rect { x0, y0, x1, y1 }
    }

    #[test]
    fn partition_examples() {
        let one = PyramidSpec::new(vec![(1, 1)]).unwrap();
        assert_eq!(partition(64, 64, &one).unwrap(), vec![rect(0, 0, 64, 64)]);

        let two = PyramidSpec::new(vec![(2, 2)]).unwrap();
        assert_eq!(
            partition(64, 64, &two).unwrap(),
            vec![rect(0, 0, 32, 32), rect(32, 0, 64, 32), rect(0, 32, 32, 64), rect(32, 32, 64, 64)]
        );

        let three = PyramidSpec::new(vec![(1, 3)]).unwrap();
        let p = partition(100, 100, &three).unwrap();
        assert_eq!(p.iter().map(|r| (r.x0, r.x1)).collect::<Vec<_>>(), vec![(0, 33), (33, 66), (66, 100)]);
    }

    #[test]
    fn partition_rejects_tiny_regions() {
        let spec = PyramidSpec::new(vec![(1, 1), (8, 8)]).unwrap();
        assert!(matches!(partition(60, 60, &spec), Err(Error::RegionTooSmall { region: 1, .. })));
    }

    #[test]
    fn spec_validation_and_parsing() {
        assert!(PyramidSpec::new(vec![]).is_err());
        assert!(PyramidSpec::new(vec![(0, 2)]).is_err());
        let spec = PyramidSpec::parse("1x1, 2x2,1x3,4x4").unwrap();
        assert_eq!(spec, PyramidSpec::default());
        assert_eq!(spec.to_string(), "1x1,2x2,1x3,4x4");
        assert_eq!(spec.block_count(), 24);
        assert!(PyramidSpec::parse("2by2").is_err());
    }

    #[test]
    fn weight_examples() {
        let w: Vec<f64> = spm_weights(&PyramidSpec::new(vec![(1, 1)]).unwrap());
        assert_eq!(w, vec![1.0]);

        // Σ 1/N_l = 1 + 1/4 = 1.25
        let w: Vec<f64> = spm_weights(&PyramidSpec::new(vec![(1, 1), (2, 2)]).unwrap());
        assert!((w[0] - 0.8).abs() < 1e-15);
        assert!(w[1..].iter().all(|&x| (x - 0.2).abs() < 1e-15));

        let spec = PyramidSpec::default();
        let w: Vec<f64> = spm_weights(&spec);
        let levels = spec.block_levels();
        let mut per_level = vec![0.0; 4];
        for (l, x) in levels.iter().zip(&w) {
            per_level[*l] += x;
        }
        for t in &per_level {
            assert!((t - per_level[0]).abs() < 1e-15);
        }
    }

    #[test]
    fn dimension_arithmetic() {
        assert_eq!(block_dim(134), 9180);
        assert_eq!(PyramidSpec::default().block_count() * block_dim(134), 220_320);
    }

    #[test]
    fn single_region_is_weighted_global_gaussian() {
        let ds = random_descriptors(1, 200, 3, 64, 64);
        let p = EmbeddingParams::new(0.4, 0.5).unwrap();
        let spec = PyramidSpec::new(vec![(1, 1)]).unwrap();
        let feat = spm_feature(&ds, (64, 64), &spec, &p, 1e-3).unwrap();
        let global = embed(&fit_gaussian(&ds, 1e-3).unwrap(), &p).unwrap();
        assert_eq!(feat.block_weights(), &[1.0]);
        assert_eq!(feat.concatenated(), global.f.as_slice());
        assert_eq!(feat.block_dim(), block_dim(3));
    }

    #[test]
    fn locality() {
        let spec = PyramidSpec::new(vec![(2, 2)]).unwrap();
        let p = EmbeddingParams::new(0.4, 0.5).unwrap();
        let a = random_descriptors(2, 400, 3, 64, 64);
        // Change every descriptor outside the top-left tile.
        let mut data = a.descriptors().clone();
        for i in 0..a.len() {
            let [x, y] = a.positions()[i];
            if !(x < 32.0 && y < 32.0) {
                for v in data.row_mut(i) {
                    *v = *v * 1.7 + 0.3;
                }
            }
        }
        let b = DescriptorSet::new(data, a.positions().to_vec(), a.scales().to_vec()).unwrap();
        let fa = spm_feature(&a, (64, 64), &spec, &p, 1e-3).unwrap();
        let fb = spm_feature(&b, (64, 64), &spec, &p, 1e-3).unwrap();
        assert_eq!(fa.blocks()[0], fb.blocks()[0]);
        assert_ne!(fa.blocks()[1], fb.blocks()[1]);
    }

    #[test]
    fn squared_distance_decomposes_over_blocks() {
        let spec = PyramidSpec::default();
        let p = EmbeddingParams::new(0.4, 0.5).unwrap();
        let a = random_descriptors(3, 1500, 3, 96, 96);
        let b = random_descriptors(4, 1500, 3, 96, 96);
        let fa = spm_feature(&a, (96, 96), &spec, &p, 1e-3).unwrap();
        let fb = spm_feature(&b, (96, 96), &spec, &p, 1e-3).unwrap();
        let total: f64 = fa.concatenated().iter().zip(fb.concatenated()).map(|(x, y)| (x - y).powi(2)).sum();

        let regions = partition(96, 96, &spec).unwrap();
        let (ma, mb) = (assign_regions(&a, &regions), assign_regions(&b, &regions));
        let w: Vec<f64> = spm_weights(&spec);
        let mut sum = 0.0;
        for r in 0..regions.len() {
            let ea = embed(&fit_gaussian_rows(a.descriptors(), &ma[r], 1e-3).unwrap(), &p).unwrap();
            let eb = embed(&fit_gaussian_rows(b.descriptors(), &mb[r], 1e-3).unwrap(), &p).unwrap();
            sum += w[r] * w[r] * gauss_distance(&ea, &eb).unwrap().powi(2);
        }
        assert!((total - sum).abs() < 1e-10 * total.max(1.0));
    }

    #[test]
    fn each_descriptor_in_exactly_one_region_per_level() {
        let spec = PyramidSpec::default();
        let mut ds = random_descriptors(5, 500, 2, 100, 90);
        // Put some centers exactly on region boundaries.
        let mut pos = ds.positions().to_vec();
        pos[0] = [33.0, 45.0];
        pos[1] = [50.0, 0.0];
        pos[2] = [0.0, 67.0];
        ds = DescriptorSet::new(ds.descriptors().clone(), pos, ds.scales().to_vec()).unwrap();
        let regions = partition(100, 90, &spec).unwrap();
        let members = assign_regions(&ds, &regions);
        let levels = spec.block_levels();
        for l in 0..spec.levels().len() {
            let count: usize = members.iter().zip(&levels).filter(|(_, &lv)| lv == l).map(|(m, _)| m.len()).sum();
            assert_eq!(count, ds.len());
        }
        // Half-open: x = 33 belongs to the second 1x3 column.
        assert!(members[1 + 4 + 1].contains(&0));
    }

    #[test]
    fn empty_region_reported() {
        let data = Mat::from_fn(4, 2, |i, j| (i * 2 + j) as f64);
        let ds = DescriptorSet::new(data, vec![[5.0, 5.0], [6.0, 6.0], [7.0, 5.0], [40.0, 40.0]], vec![1.0; 4]).unwrap();
        let spec = PyramidSpec::new(vec![(1, 1), (2, 2)]).unwrap();
        let p = EmbeddingParams::new(0.4, 0.5).unwrap();
        assert!(matches!(
            spm_feature(&ds, (64, 64), &spec, &p, 1e-3),
            Err(Error::EmptyRegion { region: 2, count: 0 })
        ));
    }

    #[test]
    fn deterministic() {
        let ds = random_descriptors(6, 800, 4, 80, 80);
        let p = EmbeddingParams::default();
        let spec = PyramidSpec::default();
        let a = spm_feature(&ds, (80, 80), &spec, &p, 1e-3).unwrap();
        let b = spm_feature(&ds, (80, 80), &spec, &p, 1e-3).unwrap();
        assert_eq!(a, b);
    }
}
