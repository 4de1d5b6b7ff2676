//! Evaluation: thresholded voxel IoU (per class and overall), domain
//! confusion accuracy, and 2-D PCA embedding export for figures.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Domain, Sample, Split};
use crate::error::{Error, Result};
use crate::model::{forward_full, ModelParams, NetworkConfig};
use crate::tensor::{Graph, Mode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainSelector {
    Source,
    Target,
    Both,
}

impl DomainSelector {
    pub fn matches(self, d: Domain) -> bool {
        match self {
            DomainSelector::Source => d == Domain::Source,
            DomainSelector::Target => d == Domain::Target,
            DomainSelector::Both => true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub threshold: f64,
    pub split: Split,
    pub domain: DomainSelector,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            threshold: 0.4,
            split: Split::Test,
            domain: DomainSelector::Both,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::invalid(
                "eval_config",
                format!("threshold must be in (0,1), got {}", self.threshold),
            ));
        }
        Ok(())
    }
}

/// Thresholded intersection-over-union of predicted occupancy probabilities
/// against a binary grid. The predicted set is {p > t}, strictly; an empty
/// prediction against an empty ground truth counts as 1.
pub fn iou(pred: &[f32], gt: &[f32], threshold: f64) -> Result<f64> {
    if pred.len() != gt.len() {
        return Err(Error::ShapeMismatch {
            op: "iou",
            left: vec![pred.len()],
            right: vec![gt.len()],
        });
    }
    let t = threshold as f32;
    let mut inter = 0usize;
    let mut union = 0usize;
    for (&p, &g) in pred.iter().zip(gt) {
        let p_in = p > t;
        let g_in = g > 0.5;
        if p_in && g_in {
            inter += 1;
        }
        if p_in || g_in {
            union += 1;
        }
    }
    if union == 0 {
        return Ok(1.0);
    }
    Ok(inter as f64 / union as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassIoU {
    pub class_label: usize,
    pub class_name: String,
    pub mean_iou: f64,
    pub count: usize,
}

/// Per-class and overall mean IoU; overall is the sample-weighted mean.
#[derive(Debug, Clone, PartialEq)]
pub struct IoUReport {
    pub threshold: f64,
    pub per_class: Vec<ClassIoU>,
    pub overall: f64,
    pub total_count: usize,
}

/// Aggregate per-sample (class, IoU) pairs into the report layout.
pub fn aggregate_iou(
    pairs: &[(usize, f64)],
    class_names: &[String],
    threshold: f64,
) -> Result<IoUReport> {
    if pairs.is_empty() {
        return Err(Error::invalid("iou_report", "empty evaluation split"));
    }
    let k = class_names.len();
    let mut sums = vec![0.0f64; k];
    let mut counts = vec![0usize; k];
    for &(class, value) in pairs {
        if class >= k {
            return Err(Error::invalid(
                "iou_report",
                format!("class label {class} out of range for {k} classes"),
            ));
        }
        sums[class] += value;
        counts[class] += 1;
    }
    let per_class = (0..k)
        .map(|c| ClassIoU {
            class_label: c,
            class_name: class_names[c].clone(),
            mean_iou: if counts[c] > 0 { sums[c] / counts[c] as f64 } else { 0.0 },
            count: counts[c],
        })
        .collect();
    let overall = pairs.iter().map(|&(_, v)| v).sum::<f64>() / pairs.len() as f64;
    Ok(IoUReport {
        threshold,
        per_class,
        overall,
        total_count: pairs.len(),
    })
}

/// Batched eval-mode forward over a fixed sample list; outputs concatenated
/// in input order.
#[derive(Debug)]
pub struct EvalForward {
    pub n: usize,
    pub latent: Vec<f32>,
    pub voxel: Vec<f32>,
    pub domain_logits: Vec<f32>,
    pub class_logits: Vec<f32>,
}

pub fn eval_forward(
    params: &ModelParams<f32>,
    net: &NetworkConfig,
    samples: &[&Sample],
    batch: usize,
) -> Result<EvalForward> {
    let mut out = EvalForward {
        n: samples.len(),
        latent: Vec::new(),
        voxel: Vec::new(),
        domain_logits: Vec::new(),
        class_logits: Vec::new(),
    };
    let c = net.image_channels;
    let s = net.image_size;
    for chunk in samples.chunks(batch.max(1)) {
        let mut images = Vec::with_capacity(chunk.len() * c * s * s);
        for sample in chunk {
            if sample.image.len() != c * s * s {
                return Err(Error::Incompatible(format!(
                    "sample image has {} values, network wants {}",
                    sample.image.len(),
                    c * s * s
                )));
            }
            images.extend_from_slice(&sample.image);
        }
        let mut g: Graph<f32> = Graph::new();
        let imgs = g.constant(images, &[chunk.len(), c, s, s])?;
        let mut p = params.clone();
        let o = forward_full(&mut g, &mut p, net, imgs, 0.0, Mode::Eval)?;
        out.latent.extend_from_slice(g.data(o.latent));
        out.voxel.extend_from_slice(g.data(o.voxel_refined));
        out.domain_logits.extend_from_slice(g.data(o.domain_logits));
        out.class_logits.extend_from_slice(g.data(o.class_logits));
    }
    Ok(out)
}

/// IoU of the refined prediction for every sample in the selected
/// (split, domain) cell, aggregated per class.
pub fn iou_report(
    params: &ModelParams<f32>,
    net: &NetworkConfig,
    dataset: &Dataset,
    eval: &EvalConfig,
) -> Result<IoUReport> {
    eval.validate()?;
    let selected: Vec<&Sample> = dataset
        .samples
        .iter()
        .filter(|s| s.split == eval.split && eval.domain.matches(s.domain))
        .collect();
    if selected.is_empty() {
        return Err(Error::invalid("iou_report", "empty evaluation split"));
    }
    let fwd = eval_forward(params, net, &selected, 32)?;
    let v3 = net.voxel_size.pow(3);
    let pairs: Vec<(usize, f64)> = selected
        .iter()
        .enumerate()
        .map(|(i, s)| -> Result<(usize, f64)> {
            let pred = &fwd.voxel[i * v3..(i + 1) * v3];
            Ok((s.class_label, iou(pred, &s.gt_voxel, eval.threshold)?))
        })
        .collect::<Result<_>>()?;
    aggregate_iou(&pairs, &dataset.manifest.class_names, eval.threshold)
}

/// Fraction of correct domain predictions at logit threshold zero.
pub fn confusion_from_logits(logits: &[f32], domains: &[Domain]) -> Result<f64> {
    if logits.len() != domains.len() || logits.is_empty() {
        return Err(Error::invalid(
            "domain_confusion",
            format!("{} logits vs {} samples", logits.len(), domains.len()),
        ));
    }
    if domains.iter().all(|&d| d == domains[0]) {
        return Err(Error::invalid(
            "domain_confusion",
            "split contains a single domain",
        ));
    }
    let correct = logits
        .iter()
        .zip(domains)
        .filter(|(&z, &d)| (z > 0.0) == (d == Domain::Target))
        .count();
    Ok(correct as f64 / logits.len() as f64)
}

/// Domain-classifier accuracy over a mixed split.
pub fn domain_confusion_accuracy(
    params: &ModelParams<f32>,
    net: &NetworkConfig,
    dataset: &Dataset,
    split: Split,
) -> Result<f64> {
    let selected: Vec<&Sample> = dataset.samples.iter().filter(|s| s.split == split).collect();
    if selected.is_empty() {
        return Err(Error::invalid("domain_confusion", "empty split"));
    }
    let fwd = eval_forward(params, net, &selected, 32)?;
    let domains: Vec<Domain> = selected.iter().map(|s| s.domain).collect();
    confusion_from_logits(&fwd.domain_logits, &domains)
}

/// Top-`dims` PCA of an [n,d] feature matrix.
#[derive(Debug, Clone)]
pub struct PcaEmbedding {
    /// n x dims coordinates, row-major.
    pub coords: Vec<f64>,
    /// Explained variance (eigenvalues) per component, descending.
    pub explained: Vec<f64>,
    /// d x dims loading matrix, column per component.
    pub components: Vec<f64>,
    pub dims: usize,
}

/// Project onto the top principal components of the mean-centered features.
/// Per-axis sign is fixed by making each component's largest-magnitude
/// loading positive, so the embedding is fully deterministic.
pub fn pca_embed(features: &[f64], n: usize, d: usize, dims: usize) -> Result<PcaEmbedding> {
    if n < 3 {
        return Err(Error::invalid(
            "pca_embed",
            format!("need at least 3 rows, got {n}"),
        ));
    }
    if features.len() != n * d || dims == 0 || dims > d {
        return Err(Error::invalid(
            "pca_embed",
            format!("bad dimensions: {} values for {n}x{d}, dims {dims}", features.len()),
        ));
    }
    let mut mean = vec![0.0f64; d];
    for row in features.chunks_exact(d) {
        for (m, &v) in mean.iter_mut().zip(row) {
            *m += v / n as f64;
        }
    }
    let centered: Vec<f64> = features
        .chunks_exact(d)
        .flat_map(|row| row.iter().zip(&mean).map(|(&v, &m)| v - m).collect::<Vec<_>>())
        .collect();
    let mut cov = DMatrix::<f64>::zeros(d, d);
    for row in centered.chunks_exact(d) {
        for a in 0..d {
            for b in 0..d {
                cov[(a, b)] += row[a] * row[b] / (n - 1) as f64;
            }
        }
    }
    let eig = cov.symmetric_eigen();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());

    let mut components = vec![0.0f64; d * dims];
    let mut explained = Vec::with_capacity(dims);
    for (k, &idx) in order.iter().take(dims).enumerate() {
        explained.push(eig.eigenvalues[idx].max(0.0));
        let col = eig.eigenvectors.column(idx);
        // fix the sign: largest-magnitude loading becomes positive
        let mut dominant = 0usize;
        for i in 0..d {
            if col[i].abs() > col[dominant].abs() {
                dominant = i;
            }
        }
        let flip = if col[dominant] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..d {
            components[i * dims + k] = flip * col[i];
        }
    }
    let mut coords = vec![0.0f64; n * dims];
    for (i, row) in centered.chunks_exact(d).enumerate() {
        for k in 0..dims {
            coords[i * dims + k] = row
                .iter()
                .enumerate()
                .map(|(j, &v)| v * components[j * dims + k])
                .sum();
        }
    }
    Ok(PcaEmbedding {
        coords,
        explained,
        components,
        dims,
    })
}

// ---------------------------------------------------------------- CSV ----

/// `class,method,iou,count,threshold` rows, one per class plus `overall`.
pub fn iou_report_csv(report: &IoUReport, method: &str) -> String {
    let mut out = String::from("class,method,iou,count,threshold\n");
    for row in &report.per_class {
        out.push_str(&format!(
            "{},{},{:.6},{},{}\n",
            row.class_name, method, row.mean_iou, row.count, report.threshold
        ));
    }
    out.push_str(&format!(
        "overall,{},{:.6},{},{}\n",
        method, report.overall, report.total_count, report.threshold
    ));
    out
}

/// `x,y,domain,class` rows for an embedding scatter.
pub fn embedding_csv(
    embedding: &PcaEmbedding,
    domains: &[Domain],
    classes: &[usize],
) -> Result<String> {
    let n = domains.len();
    if embedding.dims != 2 || embedding.coords.len() != 2 * n || classes.len() != n {
        return Err(Error::invalid(
            "embedding_csv",
            "expected a 2-D embedding with one domain and class per row",
        ));
    }
    let mut out = String::from("x,y,domain,class\n");
    for i in 0..n {
        let d = match domains[i] {
            Domain::Source => "source",
            Domain::Target => "target",
        };
        out.push_str(&format!(
            "{:.6},{:.6},{},{}\n",
            embedding.coords[i * 2],
            embedding.coords[i * 2 + 1],
            d,
            classes[i]
        ));
    }
    Ok(out)
}
