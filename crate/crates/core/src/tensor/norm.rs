//! Batch normalization over the channel axis of [N,C,...] tensors.

use super::Scalar;

pub const BN_EPS: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.1;

/// Per-channel statistics saved by the forward pass for backward.
pub(crate) struct BnSaved<T> {
    pub mean: Vec<T>,
    pub inv_std: Vec<T>,
}

/// Train-mode forward: normalize with batch statistics, update running stats
/// in place (running variance uses the unbiased estimate).
pub(crate) fn bn_forward_train<T: Scalar>(
    x: &[T],
    gamma: &[T],
    beta: &[T],
    n: usize,
    c: usize,
    sp: usize,
    running_mean: &mut [T],
    running_var: &mut [T],
) -> (Vec<T>, BnSaved<T>) {
    let eps = T::from_f64(BN_EPS);
    let mom = T::from_f64(BN_MOMENTUM);
    let m = n * sp;
    let m_t = T::from_f64(m as f64);
    let mut y = vec![T::zero(); x.len()];
    let mut mean = vec![T::zero(); c];
    let mut inv_std = vec![T::zero(); c];
    for ch in 0..c {
        let mut sum = T::zero();
        for i in 0..n {
            let base = (i * c + ch) * sp;
            for &v in &x[base..base + sp] {
                sum += v;
            }
        }
        let mu = sum / m_t;
        let mut sq = T::zero();
        for i in 0..n {
            let base = (i * c + ch) * sp;
            for &v in &x[base..base + sp] {
                let d = v - mu;
                sq += d * d;
            }
        }
        let var = sq / m_t;
        let istd = (var + eps).sqrt().recip();
        mean[ch] = mu;
        inv_std[ch] = istd;
        let g = gamma[ch];
        let b = beta[ch];
        for i in 0..n {
            let base = (i * c + ch) * sp;
            for (yv, &v) in y[base..base + sp].iter_mut().zip(&x[base..base + sp]) {
                *yv = g * (v - mu) * istd + b;
            }
        }
        let unbiased = sq / T::from_f64((m - 1) as f64);
        running_mean[ch] = (T::one() - mom) * running_mean[ch] + mom * mu;
        running_var[ch] = (T::one() - mom) * running_var[ch] + mom * unbiased;
    }
    (y, BnSaved { mean, inv_std })
}

/// Eval-mode forward: normalize every sample with the running statistics.
pub(crate) fn bn_forward_eval<T: Scalar>(
    x: &[T],
    gamma: &[T],
    beta: &[T],
    n: usize,
    c: usize,
    sp: usize,
    running_mean: &[T],
    running_var: &[T],
) -> (Vec<T>, BnSaved<T>) {
    let eps = T::from_f64(BN_EPS);
    let mut y = vec![T::zero(); x.len()];
    let mut inv_std = vec![T::zero(); c];
    for ch in 0..c {
        let istd = (running_var[ch] + eps).sqrt().recip();
        inv_std[ch] = istd;
        let mu = running_mean[ch];
        let g = gamma[ch];
        let b = beta[ch];
        for i in 0..n {
            let base = (i * c + ch) * sp;
            for (yv, &v) in y[base..base + sp].iter_mut().zip(&x[base..base + sp]) {
                *yv = g * (v - mu) * istd + b;
            }
        }
    }
    (
        y,
        BnSaved {
            mean: running_mean.to_vec(),
            inv_std,
        },
    )
}

/// Backward for both modes. In train mode gradients flow through the batch
/// statistics; in eval mode the statistics are constants.
#[allow(clippy::too_many_arguments)]
pub(crate) fn bn_backward<T: Scalar>(
    x: &[T],
    gamma: &[T],
    saved: &BnSaved<T>,
    dy: &[T],
    n: usize,
    c: usize,
    sp: usize,
    train: bool,
) -> (Vec<T>, Vec<T>, Vec<T>) {
    let m_t = T::from_f64((n * sp) as f64);
    let mut dx = vec![T::zero(); x.len()];
    let mut dgamma = vec![T::zero(); c];
    let mut dbeta = vec![T::zero(); c];
    for ch in 0..c {
        let mu = saved.mean[ch];
        let istd = saved.inv_std[ch];
        let mut sum_g = T::zero();
        let mut sum_gx = T::zero();
        for i in 0..n {
            let base = (i * c + ch) * sp;
            for (&g, &v) in dy[base..base + sp].iter().zip(&x[base..base + sp]) {
                sum_g += g;
                sum_gx += g * (v - mu) * istd;
            }
        }
        dgamma[ch] = sum_gx;
        dbeta[ch] = sum_g;
        let gain = gamma[ch] * istd;
        if train {
            let mean_g = sum_g / m_t;
            let mean_gx = sum_gx / m_t;
            for i in 0..n {
                let base = (i * c + ch) * sp;
                for ((dv, &g), &v) in dx[base..base + sp]
                    .iter_mut()
                    .zip(&dy[base..base + sp])
                    .zip(&x[base..base + sp])
                {
                    let xhat = (v - mu) * istd;
                    *dv = gain * (g - mean_g - xhat * mean_gx);
                }
            }
        } else {
            for i in 0..n {
                let base = (i * c + ch) * sp;
                for (dv, &g) in dx[base..base + sp].iter_mut().zip(&dy[base..base + sp]) {
                    *dv = gain * g;
                }
            }
        }
    }
    (dx, dgamma, dbeta)
}
