use std::path::{Path, PathBuf};

use clm_core::descriptors::{ImageGray, MIN_MODEL_SIDE};
use log::warn;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{PipelineError, Result};

/// File extensions picked up by [`ingest`].
pub const IMAGE_EXTENSIONS: [&str; 5] = ["png", "pgm", "ppm", "pnm", "pbm"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ImageEntry {
    pub path: PathBuf,
    pub class: usize,
    pub split: Option<Split>,
}

/// Images of a `root/<class>/<file>` tree.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetManifest {
    pub root: PathBuf,
    pub classes: Vec<String>,
    /// Sorted by class, then file name.
    pub entries: Vec<ImageEntry>,
    /// Seed of the split, if one was made.
    pub seed: Option<u64>,
    /// Files left out at ingestion, with the reason.
    pub skipped: Vec<(PathBuf, String)>,
}

impl DatasetManifest {
    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    pub fn class_index(&self, name: &str) -> Option<usize> {
        self.classes.iter().position(|c| c == name)
    }

    pub fn is_split(&self) -> bool {
        self.entries.iter().any(|e| e.split.is_some())
    }

    /// Entries of one split; every entry when no split was made.
    pub fn entries_in(&self, split: Split) -> Vec<&ImageEntry> {
        if !self.is_split() {
            return self.entries.iter().collect();
        }
        self.entries.iter().filter(|e| e.split == Some(split)).collect()
    }

    pub fn class_sizes(&self) -> Vec<usize> {
        let mut n = vec![0; self.classes.len()];
        for e in &self.entries {
            n[e.class] += 1;
        }
        n
    }
}

fn is_image(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
}

fn sorted_children(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| PipelineError::io(dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|err| PipelineError::io(dir, err)))
        .collect::<Result<_>>()?;
    out.sort();
    Ok(out)
}

/// Scans `root` for one subdirectory per class. Classes are ordered
/// lexicographically. Unreadable images and images smaller than 64 pixels
/// on a side are skipped with a warning.
pub fn ingest(root: &Path) -> Result<DatasetManifest> {
    let mut classes = Vec::new();
    let mut entries = Vec::new();
    let mut skipped = Vec::new();
    for dir in sorted_children(root)?.into_iter().filter(|p| p.is_dir()) {
        let name = dir.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string();
        let mut files = Vec::new();
        for path in sorted_children(&dir)?.into_iter().filter(|p| p.is_file() && is_image(p)) {
            match image::image_dimensions(&path) {
                Ok((w, h)) if (w.min(h) as usize) < MIN_MODEL_SIDE => {
                    let reason = format!("{w}x{h} is below the {MIN_MODEL_SIDE}-pixel minimum");
                    warn!("skipping {}: {reason}", path.display());
                    skipped.push((path, reason));
                }
                Ok(_) => files.push(path),
                Err(e) => {
                    warn!("skipping {}: {e}", path.display());
                    skipped.push((path, e.to_string()));
                }
            }
        }
        if files.is_empty() {
            warn!("class directory {} has no usable images", dir.display());
            continue;
        }
        let class = classes.len();
        classes.push(name);
        entries.extend(files.into_iter().map(|path| ImageEntry {
            path,
            class,
            split: None,
        }));
    }
    if entries.is_empty() {
        return Err(PipelineError::EmptyDataset(root.to_path_buf()));
    }
    Ok(DatasetManifest {
        root: root.to_path_buf(),
        classes,
        entries,
        seed: None,
        skipped,
    })
}

/// Draws `n_train` training images per class uniformly without
/// replacement; the rest become test images.
pub fn split(manifest: &DatasetManifest, n_train: usize, seed: u64) -> Result<DatasetManifest> {
    let sizes = manifest.class_sizes();
    for (c, &have) in sizes.iter().enumerate() {
        if have <= n_train {
            return Err(PipelineError::InsufficientSamples {
                class: manifest.classes[c].clone(),
                have,
                need: n_train,
            });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = manifest.clone();
    let mut start = 0;
    for &have in &sizes {
        let chosen = sample(&mut rng, have, n_train);
        for e in &mut out.entries[start..start + have] {
            e.split = Some(Split::Test);
        }
        for i in chosen.iter() {
            out.entries[start + i].split = Some(Split::Train);
        }
        start += have;
    }
    out.seed = Some(seed);
    Ok(out)
}

/// Luminance `0.299 R + 0.587 G + 0.114 B` in `[0, 1]`.
pub fn to_gray(img: &image::DynamicImage) -> ImageGray {
    let rgb = img.to_rgb32f();
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    ImageGray::from_fn(w, h, |x, y| {
        let p = rgb.get_pixel(x as u32, y as u32).0;
        0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64
    })
}

pub fn load_image(path: &Path) -> Result<ImageGray> {
    let img = image::open(path).map_err(|e| PipelineError::UnreadableImage {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    Ok(to_gray(&img))
}

/// Writes `img` as an 8-bit grayscale PNG.
pub fn save_png(img: &ImageGray, path: &Path) -> Result<()> {
    let buf = image::GrayImage::from_fn(img.width() as u32, img.height() as u32, |x, y| {
        image::Luma([(img.get(x as usize, y as usize) * 255.0).round() as u8])
    });
    buf.save(path).map_err(|e| PipelineError::UnreadableImage {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}
