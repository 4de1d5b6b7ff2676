//! Training objectives: covariance alignment (CORAL), kernel two-sample
//! discrepancy (MMD), adversarial domain loss behind the gradient reversal
//! layer, voxel reconstruction loss, voxel classification loss, and their
//! weighted composite.
//!
//! Every loss is assembled from graph operations (or a dedicated graph node),
//! so gradients flow to the feature batches that produced them. Feature
//! batches are rank-2 tensors with one row per sample.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{Graph, Scalar, TensorId};

/// Kernel for the MMD estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum KernelSpec {
    Linear,
    Rbf { bandwidth: Bandwidth },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Bandwidth {
    Fixed(f64),
    MedianHeuristic,
}

impl Default for KernelSpec {
    fn default() -> Self {
        KernelSpec::Rbf {
            bandwidth: Bandwidth::MedianHeuristic,
        }
    }
}

/// Weights of the composite objective plus the gradient-reversal strength.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub w_recon: f64,
    pub w_domain: f64,
    pub w_class: f64,
    pub w_coral: f64,
    pub w_mmd: f64,
    pub grl_lambda: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            w_recon: 1.0,
            w_domain: 0.1,
            w_class: 0.1,
            w_coral: 0.0,
            w_mmd: 0.0,
            grl_lambda: 1.0,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        let all = [
            ("w_recon", self.w_recon),
            ("w_domain", self.w_domain),
            ("w_class", self.w_class),
            ("w_coral", self.w_coral),
            ("w_mmd", self.w_mmd),
            ("grl_lambda", self.grl_lambda),
        ];
        for (name, v) in all {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::invalid(
                    "loss_weights",
                    format!("{name} must be finite and >= 0, got {v}"),
                ));
            }
        }
        if self.w_recon == 0.0 {
            return Err(Error::invalid("loss_weights", "w_recon must be positive"));
        }
        Ok(())
    }
}

/// Per-step loss breakdown; parts whose weight is zero stay at 0.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossReport {
    pub recon: f64,
    pub domain: f64,
    pub class: f64,
    pub coral: f64,
    pub mmd: f64,
    pub total: f64,
}

/// Loss part tensors available at one training step.
#[derive(Debug, Clone, Copy, Default)]
pub struct LossParts {
    pub recon: Option<TensorId>,
    pub domain: Option<TensorId>,
    pub class: Option<TensorId>,
    pub coral: Option<TensorId>,
    pub mmd: Option<TensorId>,
}

fn feature_dims<T: Scalar>(g: &Graph<T>, id: TensorId, op: &'static str) -> Result<(usize, usize)> {
    let shape = g.shape(id);
    if shape.len() != 2 {
        return Err(Error::invalid(
            op,
            format!("feature batch must be rank 2, got {shape:?}"),
        ));
    }
    Ok((shape[0], shape[1]))
}

/// Sample covariance of an [n,d] feature batch:
/// C = (D'D - (1'D)'(1'D)/n) / (n-1), differentiable in D.
pub fn covariance<T: Scalar>(g: &mut Graph<T>, d: TensorId) -> Result<TensorId> {
    let (n, _) = feature_dims(g, d, "covariance")?;
    if n < 2 {
        return Err(Error::invalid(
            "covariance",
            format!("need at least 2 rows, got {n}"),
        ));
    }
    let ones = g.constant(vec![T::one(); n], &[1, n])?;
    let colsum = g.matmul(ones, d)?;
    let dt = g.transpose2(d)?;
    let dtd = g.matmul(dt, d)?;
    let cst = g.transpose2(colsum)?;
    let outer = g.matmul(cst, colsum)?;
    let centered = {
        let scaled = g.scale(outer, T::from_f64(1.0 / n as f64));
        g.sub(dtd, scaled)?
    };
    Ok(g.scale(centered, T::from_f64(1.0 / (n - 1) as f64)))
}

/// CORAL loss: squared Frobenius distance of the two feature covariances,
/// scaled by 1/(4 d^2).
pub fn coral_loss<T: Scalar>(g: &mut Graph<T>, ds: TensorId, dt: TensorId) -> Result<TensorId> {
    let (_, d_s) = feature_dims(g, ds, "coral_loss")?;
    let (_, d_t) = feature_dims(g, dt, "coral_loss")?;
    if d_s != d_t {
        return Err(Error::ShapeMismatch {
            op: "coral_loss",
            left: g.shape(ds).to_vec(),
            right: g.shape(dt).to_vec(),
        });
    }
    let cs = covariance(g, ds)?;
    let ct = covariance(g, dt)?;
    let diff = g.sub(cs, ct)?;
    let sq = g.mul(diff, diff)?;
    let fro = g.sum(sq);
    Ok(g.scale(fro, T::from_f64(1.0 / (4.0 * (d_s * d_s) as f64))))
}

/// Median of pairwise Euclidean distances over the pooled rows of both
/// batches (distinct pairs); falls back to 1.0 when the median is zero.
pub fn median_heuristic<T: Scalar>(g: &Graph<T>, xs: TensorId, xt: TensorId) -> Result<f64> {
    let (ns, d) = feature_dims(g, xs, "median_heuristic")?;
    let (nt, d2) = feature_dims(g, xt, "median_heuristic")?;
    if d != d2 {
        return Err(Error::ShapeMismatch {
            op: "median_heuristic",
            left: g.shape(xs).to_vec(),
            right: g.shape(xt).to_vec(),
        });
    }
    let total = ns + nt;
    if total < 2 {
        return Err(Error::invalid(
            "median_heuristic",
            "need at least 2 pooled points",
        ));
    }
    let row = |i: usize| -> &[T] {
        if i < ns {
            &g.data(xs)[i * d..(i + 1) * d]
        } else {
            &g.data(xt)[(i - ns) * d..(i - ns + 1) * d]
        }
    };
    let mut dists = Vec::with_capacity(total * (total - 1) / 2);
    for i in 0..total {
        for j in (i + 1)..total {
            let (a, b) = (row(i), row(j));
            let sq: f64 = a
                .iter()
                .zip(b)
                .map(|(&x, &y)| {
                    let dv = (x - y).to_f64();
                    dv * dv
                })
                .sum();
            dists.push(sq.sqrt());
        }
    }
    dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = dists.len();
    let median = if m % 2 == 1 {
        dists[m / 2]
    } else {
        0.5 * (dists[m / 2 - 1] + dists[m / 2])
    };
    Ok(if median == 0.0 { 1.0 } else { median })
}

/// Pairwise kernel matrix between two [.,d] batches as a graph tensor.
fn kernel_matrix<T: Scalar>(
    g: &mut Graph<T>,
    x: TensorId,
    y: TensorId,
    kernel: &KernelSpec,
    sigma: f64,
) -> Result<TensorId> {
    match kernel {
        KernelSpec::Linear => {
            let yt = g.transpose2(y)?;
            g.matmul(x, yt)
        }
        KernelSpec::Rbf { .. } => {
            let (n, d) = feature_dims(g, x, "mmd_loss")?;
            let (m, _) = feature_dims(g, y, "mmd_loss")?;
            let ones_d = g.constant(vec![T::one(); d], &[d, 1])?;
            let xx = g.mul(x, x)?;
            let sqx = g.matmul(xx, ones_d)?; // [n,1]
            let yy = g.mul(y, y)?;
            let sqy = g.matmul(yy, ones_d)?; // [m,1]
            let ones_m = g.constant(vec![T::one(); m], &[1, m])?;
            let a = g.matmul(sqx, ones_m)?; // [n,m]
            let ones_n = g.constant(vec![T::one(); n], &[n, 1])?;
            let sqy_row = g.transpose2(sqy)?;
            let b = g.matmul(ones_n, sqy_row)?; // [n,m]
            let yt = g.transpose2(y)?;
            let xy = g.matmul(x, yt)?;
            let d2 = {
                let s = g.add(a, b)?;
                let xy2 = g.scale(xy, T::from_f64(2.0));
                g.sub(s, xy2)?
            };
            let scaled = g.scale(d2, T::from_f64(-1.0 / (2.0 * sigma * sigma)));
            Ok(g.exp(scaled))
        }
    }
}

/// Squared empirical MMD (biased V-statistic) via the kernel expansion
/// mean k(s,s') + mean k(t,t') - 2 mean k(s,t), clamped at zero.
pub fn mmd_loss<T: Scalar>(
    g: &mut Graph<T>,
    xs: TensorId,
    xt: TensorId,
    kernel: &KernelSpec,
) -> Result<TensorId> {
    let (_, d_s) = feature_dims(g, xs, "mmd_loss")?;
    let (_, d_t) = feature_dims(g, xt, "mmd_loss")?;
    if d_s != d_t {
        return Err(Error::ShapeMismatch {
            op: "mmd_loss",
            left: g.shape(xs).to_vec(),
            right: g.shape(xt).to_vec(),
        });
    }
    let sigma = match kernel {
        KernelSpec::Rbf {
            bandwidth: Bandwidth::Fixed(s),
        } => {
            if !(*s > 0.0) {
                return Err(Error::invalid(
                    "mmd_loss",
                    format!("bandwidth must be positive, got {s}"),
                ));
            }
            *s
        }
        KernelSpec::Rbf {
            bandwidth: Bandwidth::MedianHeuristic,
        } => median_heuristic(g, xs, xt)?,
        KernelSpec::Linear => 1.0,
    };
    let kss = kernel_matrix(g, xs, xs, kernel, sigma)?;
    let ktt = kernel_matrix(g, xt, xt, kernel, sigma)?;
    let kst = kernel_matrix(g, xs, xt, kernel, sigma)?;
    let mss = g.mean(kss);
    let mtt = g.mean(ktt);
    let mst = g.mean(kst);
    let raw = {
        let s = g.add(mss, mtt)?;
        let cross = g.scale(mst, T::from_f64(2.0));
        g.sub(s, cross)?
    };
    let v = g.value(raw).to_f64();
    if v < -1e-6 {
        return Err(Error::invalid(
            "mmd_loss",
            format!("estimate {v} is negative beyond rounding"),
        ));
    }
    // Rounding-level negatives clamp to zero with zero gradient.
    Ok(g.relu(raw))
}

/// Mean binary cross-entropy of domain logits against domain tags
/// (`false` = source = 0, `true` = target = 1).
pub fn domain_loss<T: Scalar>(
    g: &mut Graph<T>,
    logits: TensorId,
    is_target: &[bool],
) -> Result<TensorId> {
    let numel: usize = g.shape(logits).iter().product();
    if numel != is_target.len() {
        return Err(Error::invalid(
            "domain_loss",
            format!("{numel} logits vs {} domain tags", is_target.len()),
        ));
    }
    let targets: Vec<T> = is_target
        .iter()
        .map(|&t| if t { T::one() } else { T::zero() })
        .collect();
    g.bce_with_logits(logits, &targets)
}

/// Mean voxel-wise binary cross-entropy of predicted occupancy
/// probabilities against a binary ground-truth grid.
pub fn recon_loss<T: Scalar>(g: &mut Graph<T>, pred: TensorId, gt: &[T]) -> Result<TensorId> {
    g.bce_probs(pred, gt)
}

/// Mean cross-entropy of class logits [n,K] against integer labels.
pub fn class_loss<T: Scalar>(g: &mut Graph<T>, logits: TensorId, labels: &[usize]) -> Result<TensorId> {
    g.cross_entropy(logits, labels)
}

/// Weighted sum of the enabled loss parts. A part participates only when its
/// weight is positive; a positive weight with a missing part is an error, and
/// a non-finite part value reports which part broke.
pub fn composite_loss<T: Scalar>(
    g: &mut Graph<T>,
    parts: &LossParts,
    weights: &LossWeights,
) -> Result<(TensorId, LossReport)> {
    weights.validate()?;
    let mut report = LossReport::default();
    let mut total: Option<TensorId> = None;
    let named: [(&str, Option<TensorId>, f64, &mut f64); 5] = [
        ("recon", parts.recon, weights.w_recon, &mut report.recon),
        ("domain", parts.domain, weights.w_domain, &mut report.domain),
        ("class", parts.class, weights.w_class, &mut report.class),
        ("coral", parts.coral, weights.w_coral, &mut report.coral),
        ("mmd", parts.mmd, weights.w_mmd, &mut report.mmd),
    ];
    for (name, part, w, slot) in named {
        if w == 0.0 {
            continue;
        }
        let id = part.ok_or_else(|| {
            Error::invalid(
                "composite_loss",
                format!("part `{name}` is enabled (weight {w}) but was not computed"),
            )
        })?;
        let value = g.value(id).to_f64();
        if !value.is_finite() {
            return Err(Error::NonFinite { part: name.into() });
        }
        *slot = value;
        let scaled = g.scale(id, T::from_f64(w));
        total = Some(match total {
            None => scaled,
            Some(t) => g.add(t, scaled)?,
        });
    }
    let total = total.expect("w_recon > 0 guarantees at least one part");
    report.total = g.value(total).to_f64();
    if !report.total.is_finite() {
        return Err(Error::NonFinite {
            part: "total".into(),
        });
    }
    Ok((total, report))
}
