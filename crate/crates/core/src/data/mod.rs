//! Dataset ingestion and preprocessing.
//!
//! Images travel as binary PGM files listed in a CSV index (see
//! [`index`]). The preprocessing chain is decode → bilinear resize to the
//! network input → optional blur → normalise to `[−1, 1]`.

pub mod folds;
pub mod image;
pub mod index;
pub mod pgm;
pub mod synth;

use std::path::{Path, PathBuf};

pub use folds::{reduce_training_folds, subject_folds, FoldPlan, TrialRoles};
pub use image::{box_blur, denormalize, mean_filter, normalize, resize_bilinear, GrayImage};
pub use index::{load_index, DatasetIndex, SampleRecord};
pub use pgm::{decode_pgm, encode_pgm};
pub use synth::{generate_synthetic, render_synthetic, SynthConfig};

use crate::error::{Error, Result};
use crate::trainer::Sample;

/// An index together with its images, decoded and resized to a fixed size.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub index: DatasetIndex,
    pub images: Vec<GrayImage>,
}

impl Dataset {
    /// Loads every image listed in the index at `index_path`. Relative image
    /// paths are resolved against the index file's directory.
    pub fn load(index_path: impl AsRef<Path>, height: usize, width: usize) -> Result<Self> {
        let index_path = index_path.as_ref();
        let index = load_index(index_path)?;
        let base = index_path.parent().unwrap_or(Path::new("."));
        Self::load_images(index, base, height, width)
    }

    pub fn load_images(index: DatasetIndex, base_dir: &Path, height: usize, width: usize) -> Result<Self> {
        let images = index
            .records
            .iter()
            .map(|record| {
                let path = resolve_path(base_dir, &record.image_path);
                let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
                let img = decode_pgm(&bytes)?;
                Ok(resize_bilinear(&img, height, width))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Dataset { index, images })
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    /// Record positions whose subject belongs to one of `folds`.
    pub fn records_in_folds(&self, plan: &FoldPlan, folds: &[usize]) -> Vec<usize> {
        self.index
            .records
            .iter()
            .enumerate()
            .filter(|(_, r)| plan.fold_of(&r.subject_id).is_some_and(|f| folds.contains(&f)))
            .map(|(i, _)| i)
            .collect()
    }

    /// Normalised samples for the given record positions, optionally blurred
    /// with a `blur × blur` box filter first.
    pub fn samples(&self, positions: &[usize], blur: Option<usize>) -> Result<Vec<Sample>> {
        positions
            .iter()
            .map(|&i| {
                let img = match blur {
                    Some(size) if size > 1 => box_blur(&self.images[i], size)?,
                    _ => self.images[i].clone(),
                };
                Ok(Sample { input: normalize(&img), label: self.index.records[i].label })
            })
            .collect()
    }

    pub fn all_samples(&self, blur: Option<usize>) -> Result<Vec<Sample>> {
        let all: Vec<usize> = (0..self.len()).collect();
        self.samples(&all, blur)
    }
}

pub fn resolve_path(base_dir: &Path, image_path: &str) -> PathBuf {
    let p = Path::new(image_path);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base_dir.join(p)
    }
}
