//! End-to-end optimization: Adam over the parameter store, a constant or
//! ramped gradient-reversal schedule, the mixed-batch training loop with
//! per-epoch evaluation and checkpointing, and checkpoint evaluation.
//!
//! The loop never reads target-domain ground-truth voxels: the source half of
//! each batch carries the reconstruction loss, the target half contributes
//! only domain tags, class labels and the distribution-alignment losses.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::data::{read_dataset, Dataset, Domain, Sample, Split};
use crate::error::{Error, Result};
use crate::losses::{self, KernelSpec, LossParts, LossReport, LossWeights};
use crate::metrics::{self, DomainSelector, EvalConfig, IoUReport};
use crate::model::{
    forward_full_tracked, init_params, load_checkpoint, save_checkpoint, ModelParams,
    NetworkConfig,
};
use crate::tensor::{Graph, Mode, Scalar};

/// Adam moment buffers, one pair per trainable parameter.
#[derive(Debug, Clone, Default)]
pub struct AdamState<T> {
    m: BTreeMap<String, Vec<T>>,
    v: BTreeMap<String, Vec<T>>,
    step: u64,
}

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// One Adam update with bias correction. Parameters without a gradient entry
/// are left untouched; a NaN gradient aborts, naming the parameter.
pub fn adam_step<T: Scalar>(
    params: &mut ModelParams<T>,
    grads: &BTreeMap<String, Vec<T>>,
    state: &mut AdamState<T>,
    lr: f64,
) -> Result<()> {
    for (name, grad) in grads {
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NanGradient { name: name.clone() });
        }
    }
    state.step += 1;
    let b1 = T::from_f64(ADAM_BETA1);
    let b2 = T::from_f64(ADAM_BETA2);
    let eps = T::from_f64(ADAM_EPS);
    let corr1 = T::from_f64(1.0 - ADAM_BETA1.powi(state.step as i32));
    let corr2 = T::from_f64(1.0 - ADAM_BETA2.powi(state.step as i32));
    let lr = T::from_f64(lr);
    for (name, grad) in grads {
        let param = params.get_mut(name)?;
        debug_assert!(param.trainable, "gradient for non-trainable {name}");
        let m = state
            .m
            .entry(name.clone())
            .or_insert_with(|| vec![T::zero(); grad.len()]);
        let v = state
            .v
            .entry(name.clone())
            .or_insert_with(|| vec![T::zero(); grad.len()]);
        for ((p, &g), (mi, vi)) in param
            .data
            .iter_mut()
            .zip(grad)
            .zip(m.iter_mut().zip(v.iter_mut()))
        {
            *mi = b1 * *mi + (T::one() - b1) * g;
            *vi = b2 * *vi + (T::one() - b2) * g * g;
            let m_hat = *mi / corr1;
            let v_hat = *vi / corr2;
            *p = *p - lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrlSchedule {
    Constant,
    Ramp,
}

/// Gradient-reversal strength for an epoch: either the configured constant,
/// or the sigmoid ramp lambda_max * (2 / (1 + exp(-10 p)) - 1), p = epoch/total.
pub fn grl_schedule(epoch: usize, total_epochs: usize, mode: GrlSchedule, lambda_max: f64) -> f64 {
    match mode {
        GrlSchedule::Constant => lambda_max,
        GrlSchedule::Ramp => {
            let p = epoch as f64 / total_epochs.max(1) as f64;
            lambda_max * (2.0 / (1.0 + (-10.0 * p).exp()) - 1.0)
        }
    }
}

/// The compared training recipes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    None,
    Dann,
    Coral,
    Mmd,
    DannClass,
}

impl Method {
    pub fn parse(s: &str) -> Result<Method> {
        match s {
            "none" => Ok(Method::None),
            "dann" => Ok(Method::Dann),
            "coral" => Ok(Method::Coral),
            "mmd" => Ok(Method::Mmd),
            "dann+class" => Ok(Method::DannClass),
            other => Err(Error::invalid(
                "method",
                format!("unknown method `{other}` (none|dann|coral|mmd|dann+class)"),
            )),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Method::None => "none",
            Method::Dann => "dann",
            Method::Coral => "coral",
            Method::Mmd => "mmd",
            Method::DannClass => "dann+class",
        }
    }

    pub fn weights(self) -> LossWeights {
        let mut w = LossWeights {
            w_recon: 1.0,
            w_domain: 0.0,
            w_class: 0.0,
            w_coral: 0.0,
            w_mmd: 0.0,
            grl_lambda: 0.0,
        };
        match self {
            Method::None => {}
            Method::Dann => {
                w.w_domain = 0.1;
                w.grl_lambda = 1.0;
            }
            Method::Coral => w.w_coral = 1.0,
            Method::Mmd => w.w_mmd = 1.0,
            Method::DannClass => {
                w.w_domain = 0.1;
                w.w_class = 0.1;
                w.grl_lambda = 1.0;
            }
        }
        w
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub data_dir: PathBuf,
    pub out_dir: PathBuf,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub weights: LossWeights,
    pub kernel: KernelSpec,
    pub grl_schedule: GrlSchedule,
    pub seed: u64,
    /// Checkpoints are written every this many epochs (and at the end).
    pub eval_cadence: usize,
    pub threshold: f64,
    pub network: NetworkConfig,
    pub method_label: String,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            data_dir: PathBuf::new(),
            out_dir: PathBuf::new(),
            epochs: 30,
            batch_size: 32,
            lr: 1e-3,
            weights: LossWeights::default(),
            kernel: KernelSpec::default(),
            grl_schedule: GrlSchedule::Ramp,
            seed: 0,
            eval_cadence: 10,
            threshold: 0.4,
            network: NetworkConfig::default(),
            method_label: "dann+class".into(),
        }
    }
}

impl TrainConfig {
    pub fn for_method(method: Method) -> Self {
        TrainConfig {
            weights: method.weights(),
            method_label: method.label().to_string(),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::invalid("train_config", "epochs must be >= 1"));
        }
        if self.batch_size < 4 || self.batch_size % 2 != 0 {
            return Err(Error::invalid(
                "train_config",
                format!("batch_size must be even and >= 4, got {}", self.batch_size),
            ));
        }
        if !(self.lr > 0.0) {
            return Err(Error::invalid("train_config", "lr must be positive"));
        }
        if self.eval_cadence == 0 {
            return Err(Error::invalid("train_config", "eval_cadence must be >= 1"));
        }
        self.weights.validate()?;
        self.network.validate()
    }
}

/// One per-epoch log record.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainRow {
    pub epoch: usize,
    pub loss: LossReport,
    pub iou_source: f64,
    pub iou_target: f64,
    pub domain_acc: f64,
}

#[derive(Debug, Clone, Default)]
pub struct TrainLog {
    pub rows: Vec<TrainRow>,
}

pub const TRAIN_LOG_HEADER: &str =
    "epoch,loss_recon,loss_domain,loss_class,loss_coral,loss_mmd,iou_source,iou_target,domain_acc";

impl TrainRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
            self.epoch,
            self.loss.recon,
            self.loss.domain,
            self.loss.class,
            self.loss.coral,
            self.loss.mmd,
            self.iou_source,
            self.iou_target,
            self.domain_acc
        )
    }
}

#[derive(Debug)]
pub struct TrainOutcome {
    pub checkpoint_path: PathBuf,
    pub log_path: PathBuf,
    pub log: TrainLog,
    pub params: ModelParams<f32>,
}

fn check_dataset_compat(net: &NetworkConfig, dataset: &Dataset) -> Result<()> {
    let m = &dataset.manifest;
    if m.voxel_size != net.voxel_size
        || m.image_size != net.image_size
        || m.image_channels != net.image_channels
        || m.num_classes != net.num_classes
    {
        return Err(Error::Incompatible(format!(
            "dataset (V={}, img={}, C={}, K={}) vs network (V={}, img={}, C={}, K={})",
            m.voxel_size,
            m.image_size,
            m.image_channels,
            m.num_classes,
            net.voxel_size,
            net.image_size,
            net.image_channels,
            net.num_classes
        )));
    }
    Ok(())
}

fn mix(seed: u64, salt: u64) -> u64 {
    let mut h = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    h ^= h >> 33;
    h = h.wrapping_mul(0xFF51_AFD7_ED55_8CCD);
    h ^= h >> 33;
    h
}

/// Train from a dataset directory per the config.
pub fn train(cfg: &TrainConfig) -> Result<TrainOutcome> {
    let dataset = read_dataset(&cfg.data_dir)?;
    train_with_dataset(cfg, &dataset)
}

/// Train on an in-memory dataset (the path-based [`train`] delegates here).
pub fn train_with_dataset(cfg: &TrainConfig, dataset: &Dataset) -> Result<TrainOutcome> {
    cfg.validate()?;
    check_dataset_compat(&cfg.network, dataset)?;
    fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::io(&cfg.out_dir, e))?;
    let checkpoint_path = cfg.out_dir.join("checkpoint.vxda");
    let log_path = cfg.out_dir.join("train_log.csv");
    let mut log_file = fs::File::create(&log_path).map_err(|e| Error::io(&log_path, e))?;
    writeln!(log_file, "{TRAIN_LOG_HEADER}").map_err(|e| Error::io(&log_path, e))?;

    let mut params: ModelParams<f32> = init_params(&cfg.network, cfg.seed)?;
    let mut adam = AdamState::default();
    let uses_target = cfg.weights.w_domain > 0.0
        || cfg.weights.w_class > 0.0
        || cfg.weights.w_coral > 0.0
        || cfg.weights.w_mmd > 0.0;
    let v3 = cfg.network.voxel_size.pow(3);
    let img_len = cfg.network.image_channels * cfg.network.image_size * cfg.network.image_size;
    let mut log = TrainLog::default();

    for epoch in 0..cfg.epochs {
        let lambda = if cfg.weights.w_domain > 0.0 {
            grl_schedule(epoch, cfg.epochs, cfg.grl_schedule, cfg.weights.grl_lambda)
        } else {
            0.0
        };
        let mut rng = ChaCha8Rng::seed_from_u64(mix(cfg.seed, epoch as u64 + 1));
        let batches = dataset.mixed_batches(Split::Train, cfg.batch_size, &mut rng)?;
        if batches.is_empty() {
            return Err(Error::invalid(
                "train",
                "train split too small for one batch",
            ));
        }
        let mut sums = LossReport::default();
        for (src_idx, tgt_idx) in &batches {
            let half = src_idx.len();
            let rows: Vec<&Sample> = if uses_target {
                src_idx
                    .iter()
                    .chain(tgt_idx.iter())
                    .map(|&i| &dataset.samples[i])
                    .collect()
            } else {
                src_idx.iter().map(|&i| &dataset.samples[i]).collect()
            };
            let n = rows.len();
            let mut images = Vec::with_capacity(n * img_len);
            for s in &rows {
                images.extend_from_slice(&s.image);
            }
            let mut gt = Vec::with_capacity(half * v3);
            for s in &rows[..half] {
                gt.extend_from_slice(&s.gt_voxel);
            }

            let mut g: Graph<f32> = Graph::new();
            let imgs = g.constant(
                images,
                &[n, cfg.network.image_channels, cfg.network.image_size, cfg.network.image_size],
            )?;
            let (out, ids) = forward_full_tracked(
                &mut g,
                &mut params,
                &cfg.network,
                imgs,
                lambda as f32,
                Mode::Train,
            )?;

            let src_vox = if uses_target {
                g.slice_rows(out.voxel_refined, 0, half)?
            } else {
                out.voxel_refined
            };
            let mut parts = LossParts {
                recon: Some(losses::recon_loss(&mut g, src_vox, &gt)?),
                ..Default::default()
            };
            if cfg.weights.w_domain > 0.0 {
                let tags: Vec<bool> = rows.iter().map(|s| s.domain == Domain::Target).collect();
                parts.domain = Some(losses::domain_loss(&mut g, out.domain_logits, &tags)?);
            }
            if cfg.weights.w_class > 0.0 {
                let labels: Vec<usize> = rows.iter().map(|s| s.class_label).collect();
                parts.class = Some(losses::class_loss(&mut g, out.class_logits, &labels)?);
            }
            if cfg.weights.w_coral > 0.0 || cfg.weights.w_mmd > 0.0 {
                let src_lat = g.slice_rows(out.latent, 0, half)?;
                let tgt_lat = g.slice_rows(out.latent, half, n - half)?;
                if cfg.weights.w_coral > 0.0 {
                    parts.coral = Some(losses::coral_loss(&mut g, src_lat, tgt_lat)?);
                }
                if cfg.weights.w_mmd > 0.0 {
                    parts.mmd = Some(losses::mmd_loss(&mut g, src_lat, tgt_lat, &cfg.kernel)?);
                }
            }
            let (total, report) = losses::composite_loss(&mut g, &parts, &cfg.weights)?;
            g.backward(total)?;

            let mut grads: BTreeMap<String, Vec<f32>> = BTreeMap::new();
            for (name, &id) in &ids {
                if let Some(grad) = g.grad(id) {
                    grads.insert(name.clone(), grad.to_vec());
                }
            }
            adam_step(&mut params, &grads, &mut adam, cfg.lr)?;

            sums.recon += report.recon;
            sums.domain += report.domain;
            sums.class += report.class;
            sums.coral += report.coral;
            sums.mmd += report.mmd;
            sums.total += report.total;
        }
        let steps = batches.len() as f64;
        let loss = LossReport {
            recon: sums.recon / steps,
            domain: sums.domain / steps,
            class: sums.class / steps,
            coral: sums.coral / steps,
            mmd: sums.mmd / steps,
            total: sums.total / steps,
        };

        let row = TrainRow {
            epoch: epoch + 1,
            loss,
            iou_source: eval_iou(&params, cfg, dataset, DomainSelector::Source)?,
            iou_target: eval_iou(&params, cfg, dataset, DomainSelector::Target)?,
            domain_acc: metrics::domain_confusion_accuracy(
                &params,
                &cfg.network,
                dataset,
                Split::Test,
            )?,
        };
        for v in [row.iou_source, row.iou_target, row.domain_acc, row.loss.total] {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    part: format!("epoch {} log", row.epoch),
                });
            }
        }
        writeln!(log_file, "{}", row.to_csv()).map_err(|e| Error::io(&log_path, e))?;
        log.rows.push(row);

        if (epoch + 1) % cfg.eval_cadence == 0 {
            save_checkpoint(&checkpoint_path, &params, &cfg.network)?;
        }
    }
    log_file.flush().map_err(|e| Error::io(&log_path, e))?;
    save_checkpoint(&checkpoint_path, &params, &cfg.network)?;
    Ok(TrainOutcome {
        checkpoint_path,
        log_path,
        log,
        params,
    })
}

fn eval_iou(
    params: &ModelParams<f32>,
    cfg: &TrainConfig,
    dataset: &Dataset,
    domain: DomainSelector,
) -> Result<f64> {
    let eval = EvalConfig {
        threshold: cfg.threshold,
        split: Split::Test,
        domain,
    };
    Ok(metrics::iou_report(params, &cfg.network, dataset, &eval)?.overall)
}

#[derive(Debug)]
pub struct EvalOutcome {
    pub report: IoUReport,
    pub confusion_accuracy: f64,
}

/// Evaluate a checkpoint against a dataset; eval mode throughout.
pub fn evaluate(checkpoint: &Path, dataset: &Dataset, eval: &EvalConfig) -> Result<EvalOutcome> {
    let (params, net) = load_checkpoint(checkpoint)?;
    check_dataset_compat(&net, dataset)?;
    let report = metrics::iou_report(&params, &net, dataset, eval)?;
    let confusion_accuracy =
        metrics::domain_confusion_accuracy(&params, &net, dataset, eval.split)?;
    Ok(EvalOutcome {
        report,
        confusion_accuracy,
    })
}
