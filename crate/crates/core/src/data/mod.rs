//! Procedural synthetic multiview, multi-domain dataset: six shape classes
//! with jittered proportions, 8 views at 45-degree increments per instance,
//! a clean source domain and one corrupted target domain, plus the versioned
//! on-disk format and a mixed-batch loader.

mod format;
mod render;
mod shapes;

pub use format::DATASET_FORMAT;
pub use render::{apply_domain_shift, project, render_view, rotate_grid, Background, DomainProfile};
pub use shapes::{generate_shape, CLASS_NAMES};

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const AZIMUTHS: [u16; 8] = [0, 45, 90, 135, 180, 225, 270, 315];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Source,
    Target,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
}

/// One record: a single view of one instance in one domain.
#[derive(Debug, Clone)]
pub struct Sample {
    /// C*H*W pixels in [0,1], channel-major.
    pub image: Vec<f32>,
    /// V^3 binary occupancy, aligned with the rendered view.
    pub gt_voxel: Vec<f32>,
    pub class_label: usize,
    pub domain: Domain,
    pub instance_id: u32,
    pub azimuth_deg: u16,
    pub split: Split,
}

/// Generation parameters; `views` is fixed at the 45-degree grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub classes: usize,
    pub instances: usize,
    pub views: usize,
    pub voxel_size: usize,
    pub image_size: usize,
    pub seed: u64,
    pub target_profile: DomainProfile,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            classes: 6,
            instances: 10,
            views: 8,
            voxel_size: 16,
            image_size: 32,
            seed: 0,
            target_profile: DomainProfile::wild(),
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        if self.classes == 0 || self.classes > 6 {
            return Err(Error::invalid(
                "gen_config",
                format!("classes must be in 1..=6, got {}", self.classes),
            ));
        }
        if self.views != AZIMUTHS.len() {
            return Err(Error::invalid(
                "gen_config",
                format!("views is fixed at {} (45-degree grid)", AZIMUTHS.len()),
            ));
        }
        if self.instances < 2 {
            return Err(Error::invalid(
                "gen_config",
                "need at least 2 instances per class for a train/test split",
            ));
        }
        if self.voxel_size < 8 || self.image_size < self.voxel_size {
            return Err(Error::invalid(
                "gen_config",
                format!(
                    "need voxel_size >= 8 and image_size >= voxel_size, got {} / {}",
                    self.voxel_size, self.image_size
                ),
            ));
        }
        self.target_profile.validate()
    }

    /// Instances per class that land in the train split (80/20 by instance).
    pub fn train_instances(&self) -> usize {
        (self.instances * 4 / 5).clamp(1, self.instances - 1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordMeta {
    pub blob: String,
    pub class_label: usize,
    pub instance_id: u32,
    pub azimuth_deg: u16,
    pub domain: Domain,
    pub split: Split,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format: String,
    pub seed: u64,
    pub num_classes: usize,
    pub class_names: Vec<String>,
    pub instances_per_class: usize,
    pub views: Vec<u16>,
    pub voxel_size: usize,
    pub image_size: usize,
    pub image_channels: usize,
    pub source_profile: DomainProfile,
    pub target_profile: DomainProfile,
    pub records: Vec<RecordMeta>,
}

/// Fully loaded dataset.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub manifest: DatasetManifest,
    pub samples: Vec<Sample>,
}

fn mix(seed: u64, salt: &[u64]) -> u64 {
    let mut h = seed ^ 0x51_7C_C1_B7_27_22_0A_95;
    for &v in salt {
        h ^= v;
        h = h.wrapping_mul(0x9E37_79B9_7F4A_7C15);
        h ^= h >> 31;
    }
    h
}

struct RecordPlan {
    class: usize,
    instance: usize,
    view: usize,
    domain: Domain,
}

fn enumerate_records(cfg: &GenConfig) -> Vec<RecordPlan> {
    let mut plans = Vec::with_capacity(cfg.classes * cfg.instances * cfg.views * 2);
    for class in 0..cfg.classes {
        for instance in 0..cfg.instances {
            for view in 0..cfg.views {
                for domain in [Domain::Source, Domain::Target] {
                    plans.push(RecordPlan {
                        class,
                        instance,
                        view,
                        domain,
                    });
                }
            }
        }
    }
    plans
}

fn make_sample(cfg: &GenConfig, plan: &RecordPlan) -> Result<Sample> {
    let instance_seed = mix(cfg.seed, &[plan.class as u64, plan.instance as u64, 1]);
    let shape = shapes::generate_shape(plan.class, instance_seed, cfg.voxel_size);
    let mut tint_rng = ChaCha8Rng::seed_from_u64(mix(cfg.seed, &[
        plan.class as u64,
        plan.instance as u64,
        2,
    ]));
    let tint = [
        tint_rng.random_range(0.75..1.0),
        tint_rng.random_range(0.75..1.0),
        tint_rng.random_range(0.75..1.0),
    ];
    let azimuth = AZIMUTHS[plan.view];
    let (clean, rotated) = render::render_view(&shape, cfg.voxel_size, azimuth, cfg.image_size, tint)?;
    if !rotated.iter().any(|&v| v > 0.5) {
        return Err(Error::invalid(
            "build_dataset",
            format!(
                "empty grid after rotation (class {}, instance {}, azimuth {azimuth})",
                plan.class, plan.instance
            ),
        ));
    }
    let image = match plan.domain {
        Domain::Source => clean,
        Domain::Target => {
            let mut rng = ChaCha8Rng::seed_from_u64(mix(cfg.seed, &[
                plan.class as u64,
                plan.instance as u64,
                plan.view as u64,
                3,
            ]));
            render::apply_domain_shift(&clean, cfg.image_size, &cfg.target_profile, &mut rng)
        }
    };
    let split = if plan.instance < cfg.train_instances() {
        Split::Train
    } else {
        Split::Test
    };
    Ok(Sample {
        image,
        gt_voxel: rotated,
        class_label: plan.class,
        domain: plan.domain,
        instance_id: (plan.class * cfg.instances + plan.instance) as u32,
        azimuth_deg: azimuth,
        split,
    })
}

/// Generate and write the dataset: `manifest.json` plus one blob per record.
/// A pure function of the config; regeneration is byte-identical.
pub fn build_dataset(cfg: &GenConfig, out: &Path) -> Result<DatasetManifest> {
    cfg.validate()?;
    let blob_dir = out.join("blobs");
    fs::create_dir_all(&blob_dir).map_err(|e| Error::io(&blob_dir, e))?;

    let plans = enumerate_records(cfg);
    let samples: Vec<Sample> = plans
        .par_iter()
        .map(|plan| make_sample(cfg, plan))
        .collect::<Result<Vec<_>>>()?;

    let mut records = Vec::with_capacity(samples.len());
    for (idx, sample) in samples.iter().enumerate() {
        let rel = format!("blobs/{idx:04}.bin");
        let c = 3;
        let s = cfg.image_size;
        let v = cfg.voxel_size;
        format::write_blob(
            &out.join(&rel),
            &[(&[c, s, s], &sample.image), (&[v, v, v], &sample.gt_voxel)],
        )?;
        records.push(RecordMeta {
            blob: rel,
            class_label: sample.class_label,
            instance_id: sample.instance_id,
            azimuth_deg: sample.azimuth_deg,
            domain: sample.domain,
            split: sample.split,
        });
    }
    let manifest = DatasetManifest {
        format: DATASET_FORMAT.to_string(),
        seed: cfg.seed,
        num_classes: cfg.classes,
        class_names: CLASS_NAMES[..cfg.classes]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        instances_per_class: cfg.instances,
        views: AZIMUTHS.to_vec(),
        voxel_size: cfg.voxel_size,
        image_size: cfg.image_size,
        image_channels: 3,
        source_profile: DomainProfile::source(),
        target_profile: cfg.target_profile.clone(),
        records,
    };
    let manifest_path = out.join("manifest.json");
    let json = serde_json::to_string_pretty(&manifest)?;
    fs::write(&manifest_path, json.as_bytes()).map_err(|e| Error::io(&manifest_path, e))?;
    Ok(manifest)
}

fn manifest_path(dir: &Path) -> PathBuf {
    dir.join("manifest.json")
}

pub fn read_manifest(dir: &Path) -> Result<DatasetManifest> {
    let path = manifest_path(dir);
    let raw = fs::read(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: DatasetManifest = serde_json::from_slice(&raw)?;
    if manifest.format != DATASET_FORMAT {
        return Err(Error::Version {
            found: manifest.format,
            expected: DATASET_FORMAT.to_string(),
        });
    }
    let expected = manifest.num_classes * manifest.instances_per_class * manifest.views.len() * 2;
    if manifest.records.len() != expected {
        return Err(Error::Malformed {
            path,
            msg: format!(
                "manifest lists {} records, enumeration wants {expected}",
                manifest.records.len()
            ),
        });
    }
    Ok(manifest)
}

/// Load every record of a dataset directory into memory, verifying blob
/// checksums and tensor shapes against the manifest.
pub fn read_dataset(dir: &Path) -> Result<Dataset> {
    let manifest = read_manifest(dir)?;
    let s = manifest.image_size;
    let v = manifest.voxel_size;
    let samples: Vec<Sample> = manifest
        .records
        .par_iter()
        .map(|rec| -> Result<Sample> {
            let path = dir.join(&rec.blob);
            let tensors = format::read_blob(&path)?;
            if tensors.len() != 2
                || tensors[0].0 != [manifest.image_channels, s, s]
                || tensors[1].0 != [v, v, v]
            {
                return Err(Error::Malformed {
                    path,
                    msg: "blob tensor shapes do not match the manifest".into(),
                });
            }
            let mut it = tensors.into_iter();
            let image = it.next().unwrap().1;
            let gt_voxel = it.next().unwrap().1;
            Ok(Sample {
                image,
                gt_voxel,
                class_label: rec.class_label,
                domain: rec.domain,
                instance_id: rec.instance_id,
                azimuth_deg: rec.azimuth_deg,
                split: rec.split,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset { manifest, samples })
}

impl Dataset {
    /// Record indices of one (split, domain) cell, in manifest order.
    pub fn indices(&self, split: Split, domain: Domain) -> Vec<usize> {
        self.samples
            .iter()
            .enumerate()
            .filter(|(_, s)| s.split == split && s.domain == domain)
            .map(|(i, _)| i)
            .collect()
    }

    /// Shuffled mixed batches with a fixed 1:1 source:target ratio. Each
    /// element is (source indices, target indices), `batch / 2` of each;
    /// the remainder that cannot fill a batch is dropped.
    pub fn mixed_batches(
        &self,
        split: Split,
        batch: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
        if batch < 4 || batch % 2 != 0 {
            return Err(Error::invalid(
                "mixed_batches",
                format!("batch size must be even and >= 4, got {batch}"),
            ));
        }
        let half = batch / 2;
        let mut source = self.indices(split, Domain::Source);
        let mut target = self.indices(split, Domain::Target);
        shuffle(&mut source, rng);
        shuffle(&mut target, rng);
        let steps = (source.len() / half).min(target.len() / half);
        Ok((0..steps)
            .map(|i| {
                (
                    source[i * half..(i + 1) * half].to_vec(),
                    target[i * half..(i + 1) * half].to_vec(),
                )
            })
            .collect())
    }
}

/// Fisher-Yates with the caller's generator; stable across platforms.
pub fn shuffle<T>(items: &mut [T], rng: &mut ChaCha8Rng) {
    for i in (1..items.len()).rev() {
        let j = rng.random_range(0..=i);
        items.swap(i, j);
    }
}
