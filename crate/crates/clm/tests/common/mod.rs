#![allow(dead_code)]

use std::path::Path;

use clm::dataset::save_png;
use clm_core::descriptors::ImageGray;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Noisy stripes; `vertical` picks the stripe direction.
pub fn stripes(size: usize, vertical: bool, seed: u64) -> ImageGray {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let phase = r.random_range(0.0..std::f64::consts::TAU);
    ImageGray::from_fn(size, size, |x, y| {
        let t = if vertical { x } else { y } as f64;
        0.5 + 0.3 * (t * 0.7 + phase).sin() + r.random_range(-0.1..0.1)
    })
}

/// Writes `per_class` images for each class into `root/<class>/NN.png`.
/// Class `i` has stripes in direction `i % 2`.
pub fn write_dataset(root: &Path, classes: &[&str], per_class: usize, size: usize) {
    for (i, class) in classes.iter().enumerate() {
        let dir = root.join(class);
        std::fs::create_dir_all(&dir).unwrap();
        for n in 0..per_class {
            let img = stripes(size, i % 2 == 1, (i * 1000 + n) as u64);
            save_png(&img, &dir.join(format!("{n:02}.png"))).unwrap();
        }
    }
}

/// Small configuration that keeps test runs fast.
pub const FAST_CONFIG: &str = r#"{
    "pyramid": [[1, 1], [2, 2]],
    "cell_sizes": [8],
    "step": 8,
    "train_per_class": 4,
    "seed": 7
}"#;
