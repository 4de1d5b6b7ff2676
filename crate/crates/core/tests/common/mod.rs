//! Shared test support: independent brute-force oracles and a central
//! finite-difference gradient checker. Everything here must stay independent
//! of the implementation paths it is used to verify.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use voxda::tensor::{Graph, TensorId};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rand_vec(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

/// Relative error with a floor so that near-zero pairs compare absolutely.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-3)
}

pub fn max_rel_err(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(&x, &y)| rel_err(x, y))
        .fold(0.0, f64::max)
}

/// One differentiable-input specification for the gradient checker.
pub type FdInput = (Vec<f64>, Vec<usize>);

/// Central finite-difference gradient check (64-bit, h = 1e-4).
///
/// `build` reconstructs the scalar loss from scratch given graph leaves, so
/// the numeric derivative goes through the complete forward path. Returns the
/// worst relative error over every coordinate of every input.
pub fn fd_check<F>(name: &str, inputs: &[FdInput], build: F) -> f64
where
    F: Fn(&mut Graph<f64>, &[TensorId]) -> TensorId,
{
    let h = 1e-4;
    let forward = |values: &[Vec<f64>]| -> f64 {
        let mut g = Graph::new();
        let ids: Vec<TensorId> = values
            .iter()
            .zip(inputs)
            .map(|(v, (_, shape))| g.leaf(v.clone(), shape, true).unwrap())
            .collect();
        let loss = build(&mut g, &ids);
        g.value(loss)
    };

    // Analytic gradients.
    let mut g = Graph::new();
    let ids: Vec<TensorId> = inputs
        .iter()
        .map(|(v, shape)| g.leaf(v.clone(), shape, true).unwrap())
        .collect();
    let loss = build(&mut g, &ids);
    assert_eq!(g.data(loss).len(), 1, "{name}: loss must be scalar");
    g.backward(loss).unwrap();
    let analytic: Vec<Vec<f64>> = ids
        .iter()
        .map(|&id| g.grad(id).map(|s| s.to_vec()).unwrap_or_default())
        .collect();

    let mut values: Vec<Vec<f64>> = inputs.iter().map(|(v, _)| v.clone()).collect();
    let mut worst = 0.0_f64;
    for t in 0..values.len() {
        assert!(
            !analytic[t].is_empty(),
            "{name}: input {t} received no gradient"
        );
        for i in 0..values[t].len() {
            let orig = values[t][i];
            values[t][i] = orig + h;
            let fp = forward(&values);
            values[t][i] = orig - h;
            let fm = forward(&values);
            values[t][i] = orig;
            let numeric = (fp - fm) / (2.0 * h);
            let err = rel_err(analytic[t][i], numeric);
            assert!(
                err < 1e-4,
                "{name}: input {t} coord {i}: analytic {} vs numeric {} (rel {err:.3e})",
                analytic[t][i],
                numeric
            );
            worst = worst.max(err);
        }
    }
    worst
}

// ------------------------------------------------------------ oracles ----

/// Triple-loop matrix product.
pub fn naive_matmul(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut c = vec![0.0; m * n];
    for i in 0..m {
        for j in 0..n {
            let mut s = 0.0;
            for p in 0..k {
                s += a[i * k + p] * b[p * n + j];
            }
            c[i * n + j] = s;
        }
    }
    c
}

/// Six-loop 2-D cross-correlation: x [N,C,H,W], k [F,C,kh,kw].
#[allow(clippy::too_many_arguments)]
pub fn naive_conv2d(
    x: &[f64],
    kern: &[f64],
    n: usize,
    c: usize,
    h: usize,
    w: usize,
    f: usize,
    kh: usize,
    kw: usize,
    stride: usize,
    pad: usize,
) -> (Vec<f64>, usize, usize) {
    let oh = (h + 2 * pad - kh) / stride + 1;
    let ow = (w + 2 * pad - kw) / stride + 1;
    let mut y = vec![0.0; n * f * oh * ow];
    for b in 0..n {
        for fo in 0..f {
            for yo in 0..oh {
                for xo in 0..ow {
                    let mut acc = 0.0;
                    for ci in 0..c {
                        for r in 0..kh {
                            for q in 0..kw {
                                let iy = (yo * stride + r) as isize - pad as isize;
                                let ix = (xo * stride + q) as isize - pad as isize;
                                if iy < 0 || iy >= h as isize || ix < 0 || ix >= w as isize {
                                    continue;
                                }
                                let xi = ((b * c + ci) * h + iy as usize) * w + ix as usize;
                                let ki = ((fo * c + ci) * kh + r) * kw + q;
                                acc += x[xi] * kern[ki];
                            }
                        }
                    }
                    y[((b * f + fo) * oh + yo) * ow + xo] = acc;
                }
            }
        }
    }
    (y, oh, ow)
}

/// Naive 3-D cross-correlation: x [N,C,D,H,W], k [F,C,kd,kh,kw].
#[allow(clippy::too_many_arguments)]
pub fn naive_conv3d(
    x: &[f64],
    kern: &[f64],
    n: usize,
    c: usize,
    d: usize,
    h: usize,
    w: usize,
    f: usize,
    kd: usize,
    kh: usize,
    kw: usize,
    stride: usize,
    pad: usize,
) -> (Vec<f64>, usize, usize, usize) {
    let od = (d + 2 * pad - kd) / stride + 1;
    let oh = (h + 2 * pad - kh) / stride + 1;
    let ow = (w + 2 * pad - kw) / stride + 1;
    let mut y = vec![0.0; n * f * od * oh * ow];
    for b in 0..n {
        for fo in 0..f {
            for zo in 0..od {
                for yo in 0..oh {
                    for xo in 0..ow {
                        let mut acc = 0.0;
                        for ci in 0..c {
                            for u in 0..kd {
                                for r in 0..kh {
                                    for q in 0..kw {
                                        let iz = (zo * stride + u) as isize - pad as isize;
                                        let iy = (yo * stride + r) as isize - pad as isize;
                                        let ix = (xo * stride + q) as isize - pad as isize;
                                        if iz < 0
                                            || iz >= d as isize
                                            || iy < 0
                                            || iy >= h as isize
                                            || ix < 0
                                            || ix >= w as isize
                                        {
                                            continue;
                                        }
                                        let xi = (((b * c + ci) * d + iz as usize) * h
                                            + iy as usize)
                                            * w
                                            + ix as usize;
                                        let ki = (((fo * c + ci) * kd + u) * kh + r) * kw + q;
                                        acc += x[xi] * kern[ki];
                                    }
                                }
                            }
                        }
                        y[(((b * f + fo) * od + zo) * oh + yo) * ow + xo] = acc;
                    }
                }
            }
        }
    }
    (y, od, oh, ow)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

// -------------------------------------------------- gradient suite ----

/// Scalar loss that weights every output coordinate differently, so linear
/// ops get a non-degenerate check.
pub fn weighted_sum(g: &mut Graph<f64>, y: TensorId, seed: u64) -> TensorId {
    let shape = g.shape(y).to_vec();
    let n: usize = shape.iter().product();
    let mut r = rng(seed ^ 0x5eed);
    let w = g
        .constant(rand_vec(&mut r, n, -1.0, 1.0), &shape)
        .unwrap();
    let p = g.mul(y, w).unwrap();
    g.sum(p)
}

fn sample_away_from_zero(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let v: f64 = rng.random_range(0.1..2.0);
            if rng.random_bool(0.5) {
                v
            } else {
                -v
            }
        })
        .collect()
}

/// Finite-difference checks for every differentiable graph operation,
/// `reps` random instances each. Returns (name, worst relative error) pairs;
/// panics on any violation of the 1e-4 bound.
pub fn ops_gradient_suite(reps: u64) -> Vec<(String, f64)> {
    let mut results: Vec<(String, f64)> = Vec::new();
    let mut run = |name: &str, f: &dyn Fn(u64) -> f64| {
        let worst = (0..reps).map(f).fold(0.0, f64::max);
        results.push((name.to_string(), worst));
    };

    run("neg", &|s| {
        let mut r = rng(s);
        let x = (rand_vec(&mut r, 7, -2.0, 2.0), vec![7]);
        fd_check("neg", &[x], |g, ids| {
            let y = g.neg(ids[0]);
            weighted_sum(g, y, s)
        })
    });
    run("relu", &|s| {
        let mut r = rng(s + 100);
        let x = (sample_away_from_zero(&mut r, 9), vec![9]);
        fd_check("relu", &[x], |g, ids| {
            let y = g.relu(ids[0]);
            weighted_sum(g, y, s)
        })
    });
    run("elu", &|s| {
        let mut r = rng(s + 200);
        let x = (sample_away_from_zero(&mut r, 9), vec![9]);
        fd_check("elu", &[x], |g, ids| {
            let y = g.elu(ids[0]);
            weighted_sum(g, y, s)
        })
    });
    run("sigmoid", &|s| {
        let mut r = rng(s + 300);
        let x = (rand_vec(&mut r, 8, -3.0, 3.0), vec![8]);
        fd_check("sigmoid", &[x], |g, ids| {
            let y = g.sigmoid(ids[0]);
            weighted_sum(g, y, s)
        })
    });
    run("log", &|s| {
        let mut r = rng(s + 400);
        let x = (rand_vec(&mut r, 8, 0.2, 3.0), vec![8]);
        fd_check("log", &[x], |g, ids| {
            let y = g.log(ids[0]);
            weighted_sum(g, y, s)
        })
    });
    run("exp", &|s| {
        let mut r = rng(s + 500);
        let x = (rand_vec(&mut r, 8, -2.0, 2.0), vec![8]);
        fd_check("exp", &[x], |g, ids| {
            let y = g.exp(ids[0]);
            weighted_sum(g, y, s)
        })
    });
    run("add", &|s| {
        let mut r = rng(s + 600);
        let a = (rand_vec(&mut r, 6, -2.0, 2.0), vec![2, 3]);
        let b = (rand_vec(&mut r, 6, -2.0, 2.0), vec![2, 3]);
        fd_check("add", &[a, b], |g, ids| {
            let y = g.add(ids[0], ids[1]).unwrap();
            weighted_sum(g, y, s)
        })
    });
    run("sub", &|s| {
        let mut r = rng(s + 700);
        let a = (rand_vec(&mut r, 6, -2.0, 2.0), vec![2, 3]);
        let b = (rand_vec(&mut r, 6, -2.0, 2.0), vec![2, 3]);
        fd_check("sub", &[a, b], |g, ids| {
            let y = g.sub(ids[0], ids[1]).unwrap();
            weighted_sum(g, y, s)
        })
    });
    run("mul", &|s| {
        let mut r = rng(s + 800);
        let a = (rand_vec(&mut r, 6, -2.0, 2.0), vec![2, 3]);
        let b = (rand_vec(&mut r, 6, -2.0, 2.0), vec![2, 3]);
        fd_check("mul", &[a, b], |g, ids| {
            let y = g.mul(ids[0], ids[1]).unwrap();
            weighted_sum(g, y, s)
        })
    });
    run("mul_scalar_operand", &|s| {
        let mut r = rng(s + 900);
        let a = (rand_vec(&mut r, 5, -2.0, 2.0), vec![5]);
        let b = (rand_vec(&mut r, 1, 0.5, 2.0), vec![1]);
        fd_check("mul_scalar_operand", &[a, b], |g, ids| {
            let y = g.mul(ids[0], ids[1]).unwrap();
            weighted_sum(g, y, s)
        })
    });
    run("scale", &|s| {
        let mut r = rng(s + 1000);
        let a = (rand_vec(&mut r, 6, -2.0, 2.0), vec![6]);
        fd_check("scale", &[a], |g, ids| {
            let y = g.scale(ids[0], -1.7);
            weighted_sum(g, y, s)
        })
    });
    run("matmul", &|s| {
        let mut r = rng(s + 1100);
        let a = (rand_vec(&mut r, 12, -1.0, 1.0), vec![3, 4]);
        let b = (rand_vec(&mut r, 8, -1.0, 1.0), vec![4, 2]);
        fd_check("matmul", &[a, b], |g, ids| {
            let y = g.matmul(ids[0], ids[1]).unwrap();
            weighted_sum(g, y, s)
        })
    });
    run("transpose2", &|s| {
        let mut r = rng(s + 1200);
        let a = (rand_vec(&mut r, 12, -1.0, 1.0), vec![3, 4]);
        fd_check("transpose2", &[a], |g, ids| {
            let y = g.transpose2(ids[0]).unwrap();
            weighted_sum(g, y, s)
        })
    });
    run("reshape", &|s| {
        let mut r = rng(s + 1300);
        let a = (rand_vec(&mut r, 12, -1.0, 1.0), vec![2, 6]);
        fd_check("reshape", &[a], |g, ids| {
            let y = g.reshape(ids[0], &[3, 4]).unwrap();
            weighted_sum(g, y, s)
        })
    });
    run("slice_rows", &|s| {
        let mut r = rng(s + 1400);
        let a = (rand_vec(&mut r, 15, -1.0, 1.0), vec![5, 3]);
        fd_check("slice_rows", &[a], |g, ids| {
            let y = g.slice_rows(ids[0], 1, 3).unwrap();
            weighted_sum(g, y, s)
        })
    });
    run("concat_channels", &|s| {
        let mut r = rng(s + 1500);
        let a = (rand_vec(&mut r, 16, -1.0, 1.0), vec![2, 2, 2, 2]);
        let b = (rand_vec(&mut r, 24, -1.0, 1.0), vec![2, 3, 2, 2]);
        fd_check("concat_channels", &[a, b], |g, ids| {
            let y = g.concat_channels(ids[0], ids[1]).unwrap();
            weighted_sum(g, y, s)
        })
    });
    run("add_row_bias", &|s| {
        let mut r = rng(s + 1600);
        let a = (rand_vec(&mut r, 12, -1.0, 1.0), vec![4, 3]);
        let b = (rand_vec(&mut r, 3, -1.0, 1.0), vec![3]);
        fd_check("add_row_bias", &[a, b], |g, ids| {
            let y = g.add_row_bias(ids[0], ids[1]).unwrap();
            weighted_sum(g, y, s)
        })
    });
    run("add_channel_bias", &|s| {
        let mut r = rng(s + 1700);
        let a = (rand_vec(&mut r, 24, -1.0, 1.0), vec![2, 3, 4]);
        let b = (rand_vec(&mut r, 3, -1.0, 1.0), vec![3]);
        fd_check("add_channel_bias", &[a, b], |g, ids| {
            let y = g.add_channel_bias(ids[0], ids[1]).unwrap();
            weighted_sum(g, y, s)
        })
    });
    run("sum", &|s| {
        let mut r = rng(s + 1800);
        let a = (rand_vec(&mut r, 9, -1.0, 1.0), vec![9]);
        fd_check("sum", &[a], |g, ids| g.sum(ids[0]))
    });
    run("mean", &|s| {
        let mut r = rng(s + 1900);
        let a = (rand_vec(&mut r, 9, -1.0, 1.0), vec![9]);
        fd_check("mean", &[a], |g, ids| g.mean(ids[0]))
    });
    run("conv2d", &|s| {
        let mut r = rng(s + 2000);
        let x = (rand_vec(&mut r, 2 * 3 * 6 * 6, -1.0, 1.0), vec![2, 3, 6, 6]);
        let k = (rand_vec(&mut r, 2 * 3 * 3 * 3, -1.0, 1.0), vec![2, 3, 3, 3]);
        fd_check("conv2d", &[x, k], |g, ids| {
            let y = g.conv2d(ids[0], ids[1], 2, 1).unwrap();
            weighted_sum(g, y, s)
        })
    });
    run("conv3d", &|s| {
        let mut r = rng(s + 2100);
        let x = (
            rand_vec(&mut r, 2 * 2 * 4 * 4 * 4, -1.0, 1.0),
            vec![2, 2, 4, 4, 4],
        );
        let k = (
            rand_vec(&mut r, 2 * 2 * 3 * 3 * 3, -1.0, 1.0),
            vec![2, 2, 3, 3, 3],
        );
        fd_check("conv3d", &[x, k], |g, ids| {
            let y = g.conv3d(ids[0], ids[1], 1, 1).unwrap();
            weighted_sum(g, y, s)
        })
    });
    run("conv_transpose3d", &|s| {
        let mut r = rng(s + 2200);
        let x = (
            rand_vec(&mut r, 2 * 2 * 3 * 3 * 3, -1.0, 1.0),
            vec![2, 2, 3, 3, 3],
        );
        let k = (
            rand_vec(&mut r, 2 * 3 * 2 * 2 * 2, -1.0, 1.0),
            vec![2, 3, 2, 2, 2],
        );
        fd_check("conv_transpose3d", &[x, k], |g, ids| {
            let y = g.conv_transpose3d(ids[0], ids[1], 2, 1).unwrap();
            weighted_sum(g, y, s)
        })
    });
    run("batchnorm_train", &|s| {
        let mut r = rng(s + 2300);
        let x = (rand_vec(&mut r, 4 * 3 * 4, -2.0, 2.0), vec![4, 3, 2, 2]);
        let gamma = (rand_vec(&mut r, 3, 0.5, 1.5), vec![3]);
        let beta = (rand_vec(&mut r, 3, -0.5, 0.5), vec![3]);
        fd_check("batchnorm_train", &[x, gamma, beta], |g, ids| {
            let mut rm = vec![0.0; 3];
            let mut rv = vec![1.0; 3];
            let y = g
                .batchnorm(
                    ids[0],
                    ids[1],
                    ids[2],
                    voxda::tensor::Mode::Train,
                    &mut rm,
                    &mut rv,
                )
                .unwrap();
            weighted_sum(g, y, s)
        })
    });
    run("batchnorm_eval", &|s| {
        let mut r = rng(s + 2400);
        let x = (rand_vec(&mut r, 4 * 3 * 4, -2.0, 2.0), vec![4, 3, 2, 2]);
        let gamma = (rand_vec(&mut r, 3, 0.5, 1.5), vec![3]);
        let beta = (rand_vec(&mut r, 3, -0.5, 0.5), vec![3]);
        let rm0 = rand_vec(&mut r, 3, -0.5, 0.5);
        let rv0 = rand_vec(&mut r, 3, 0.5, 2.0);
        fd_check("batchnorm_eval", &[x, gamma, beta], move |g, ids| {
            let mut rm = rm0.clone();
            let mut rv = rv0.clone();
            let y = g
                .batchnorm(
                    ids[0],
                    ids[1],
                    ids[2],
                    voxda::tensor::Mode::Eval,
                    &mut rm,
                    &mut rv,
                )
                .unwrap();
            weighted_sum(g, y, s)
        })
    });
    run("bce_with_logits", &|s| {
        let mut r = rng(s + 2500);
        let z = (rand_vec(&mut r, 6, -2.0, 2.0), vec![6, 1]);
        let targets: Vec<f64> = (0..6).map(|_| f64::from(r.random_bool(0.5))).collect();
        fd_check("bce_with_logits", &[z], move |g, ids| {
            g.bce_with_logits(ids[0], &targets).unwrap()
        })
    });
    run("bce_probs", &|s| {
        let mut r = rng(s + 2600);
        let p = (rand_vec(&mut r, 8, 0.05, 0.95), vec![8]);
        let targets: Vec<f64> = (0..8).map(|_| f64::from(r.random_bool(0.5))).collect();
        fd_check("bce_probs", &[p], move |g, ids| {
            g.bce_probs(ids[0], &targets).unwrap()
        })
    });
    run("cross_entropy", &|s| {
        let mut r = rng(s + 2700);
        let z = (rand_vec(&mut r, 4 * 5, -2.0, 2.0), vec![4, 5]);
        let labels: Vec<usize> = (0..4).map(|_| r.random_range(0..5usize)).collect();
        fd_check("cross_entropy", &[z], move |g, ids| {
            g.cross_entropy(ids[0], &labels).unwrap()
        })
    });

    results
}

/// Finite-difference checks for every loss in the losses module.
pub fn losses_gradient_suite(reps: u64) -> Vec<(String, f64)> {
    use voxda::losses::{self, Bandwidth, KernelSpec, LossParts, LossWeights};
    let mut results: Vec<(String, f64)> = Vec::new();
    let mut run = |name: &str, f: &dyn Fn(u64) -> f64| {
        let worst = (0..reps).map(f).fold(0.0, f64::max);
        results.push((name.to_string(), worst));
    };

    run("covariance", &|s| {
        let mut r = rng(s + 3000);
        let d = (rand_vec(&mut r, 4 * 3, -2.0, 2.0), vec![4, 3]);
        fd_check("covariance", &[d], |g, ids| {
            let c = losses::covariance(g, ids[0]).unwrap();
            weighted_sum(g, c, s)
        })
    });
    run("coral_loss", &|s| {
        let mut r = rng(s + 3100);
        let ds = (rand_vec(&mut r, 4 * 3, -2.0, 2.0), vec![4, 3]);
        let dt = (rand_vec(&mut r, 5 * 3, -2.0, 2.0), vec![5, 3]);
        fd_check("coral_loss", &[ds, dt], |g, ids| {
            losses::coral_loss(g, ids[0], ids[1]).unwrap()
        })
    });
    run("mmd_linear", &|s| {
        let mut r = rng(s + 3200);
        let xs = (rand_vec(&mut r, 3 * 2, -2.0, 2.0), vec![3, 2]);
        let xt = (rand_vec(&mut r, 4 * 2, 0.5, 3.0), vec![4, 2]);
        fd_check("mmd_linear", &[xs, xt], |g, ids| {
            losses::mmd_loss(g, ids[0], ids[1], &KernelSpec::Linear).unwrap()
        })
    });
    run("mmd_rbf", &|s| {
        let mut r = rng(s + 3300);
        let xs = (rand_vec(&mut r, 3 * 2, -2.0, 2.0), vec![3, 2]);
        let xt = (rand_vec(&mut r, 4 * 2, 0.5, 3.0), vec![4, 2]);
        let spec = KernelSpec::Rbf {
            bandwidth: Bandwidth::Fixed(1.3),
        };
        fd_check("mmd_rbf", &[xs, xt], move |g, ids| {
            losses::mmd_loss(g, ids[0], ids[1], &spec).unwrap()
        })
    });
    run("domain_loss", &|s| {
        let mut r = rng(s + 3400);
        let z = (rand_vec(&mut r, 5, -2.0, 2.0), vec![5, 1]);
        let tags: Vec<bool> = (0..5).map(|_| r.random_bool(0.5)).collect();
        fd_check("domain_loss", &[z], move |g, ids| {
            losses::domain_loss(g, ids[0], &tags).unwrap()
        })
    });
    run("recon_loss", &|s| {
        let mut r = rng(s + 3500);
        let p = (rand_vec(&mut r, 16, 0.1, 0.9), vec![2, 1, 2, 2, 2]);
        let gt: Vec<f64> = (0..16).map(|_| f64::from(r.random_bool(0.5))).collect();
        fd_check("recon_loss", &[p], move |g, ids| {
            losses::recon_loss(g, ids[0], &gt).unwrap()
        })
    });
    run("class_loss", &|s| {
        let mut r = rng(s + 3600);
        let z = (rand_vec(&mut r, 4 * 6, -2.0, 2.0), vec![4, 6]);
        let labels: Vec<usize> = (0..4).map(|_| r.random_range(0..6usize)).collect();
        fd_check("class_loss", &[z], move |g, ids| {
            losses::class_loss(g, ids[0], &labels).unwrap()
        })
    });
    run("composite_loss", &|s| {
        let mut r = rng(s + 3700);
        let feat_s = (rand_vec(&mut r, 4 * 3, -1.0, 1.0), vec![4, 3]);
        let feat_t = (rand_vec(&mut r, 4 * 3, 0.0, 2.0), vec![4, 3]);
        let probs = (rand_vec(&mut r, 8, 0.1, 0.9), vec![8]);
        let logits = (rand_vec(&mut r, 4 * 3, -2.0, 2.0), vec![4, 3]);
        let dlogits = (rand_vec(&mut r, 8, -2.0, 2.0), vec![8, 1]);
        let gt: Vec<f64> = (0..8).map(|_| f64::from(r.random_bool(0.5))).collect();
        let labels: Vec<usize> = (0..4).map(|_| r.random_range(0..3usize)).collect();
        let tags: Vec<bool> = (0..8).map(|i| i % 2 == 0).collect();
        let weights = LossWeights {
            w_recon: 1.0,
            w_domain: 0.3,
            w_class: 0.2,
            w_coral: 0.5,
            w_mmd: 0.4,
            grl_lambda: 1.0,
        };
        fd_check(
            "composite_loss",
            &[feat_s, feat_t, probs, logits, dlogits],
            move |g, ids| {
                let parts = LossParts {
                    recon: Some(losses::recon_loss(g, ids[2], &gt).unwrap()),
                    domain: Some(losses::domain_loss(g, ids[4], &tags).unwrap()),
                    class: Some(losses::class_loss(g, ids[3], &labels).unwrap()),
                    coral: Some(losses::coral_loss(g, ids[0], ids[1]).unwrap()),
                    mmd: Some(
                        losses::mmd_loss(
                            g,
                            ids[0],
                            ids[1],
                            &KernelSpec::Rbf {
                                bandwidth: Bandwidth::Fixed(1.1),
                            },
                        )
                        .unwrap(),
                    ),
                };
                let (total, _) = losses::composite_loss(g, &parts, &weights).unwrap();
                total
            },
        )
    });

    results
}
