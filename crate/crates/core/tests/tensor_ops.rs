//! Tensor engine checks against independent brute-force oracles, adjoint
//! identities, and the finite-difference gradient suite.

mod common;

use common::*;
use voxda::tensor::{Graph, TensorId};

#[test]
fn matmul_matches_triple_loop() {
    for seed in 0..5 {
        let mut r = rng(seed);
        let a = rand_vec(&mut r, 12, -2.0, 2.0);
        let b = rand_vec(&mut r, 8, -2.0, 2.0);
        let expect = naive_matmul(&a, &b, 3, 4, 2);
        let mut g: Graph<f64> = Graph::new();
        let at = g.leaf(a, &[3, 4], false).unwrap();
        let bt = g.leaf(b, &[4, 2], false).unwrap();
        let c = g.matmul(at, bt).unwrap();
        assert!(max_rel_err(g.data(c), &expect) < 1e-12);
    }
}

#[test]
fn conv2d_matches_six_loop_oracle() {
    for (seed, stride, pad) in [(1u64, 1usize, 0usize), (2, 2, 1), (3, 1, 1)] {
        let (n, c, h, w, f, kh, kw) = (2, 3, 8, 8, 4, 3, 3);
        let mut r = rng(seed);
        let x = rand_vec(&mut r, n * c * h * w, -1.0, 1.0);
        let k = rand_vec(&mut r, f * c * kh * kw, -1.0, 1.0);
        let (expect, oh, ow) = naive_conv2d(&x, &k, n, c, h, w, f, kh, kw, stride, pad);
        let mut g: Graph<f64> = Graph::new();
        let xt = g.leaf(x, &[n, c, h, w], false).unwrap();
        let kt = g.leaf(k, &[f, c, kh, kw], false).unwrap();
        let y = g.conv2d(xt, kt, stride, pad).unwrap();
        assert_eq!(g.shape(y), &[n, f, oh, ow]);
        assert!(max_rel_err(g.data(y), &expect) < 1e-10);
    }
}

#[test]
fn conv3d_matches_naive_oracle() {
    for (seed, stride, pad) in [(4u64, 1usize, 0usize), (5, 2, 1)] {
        let (n, c, d, h, w, f, k) = (2, 2, 6, 6, 6, 3, 3);
        let mut r = rng(seed);
        let x = rand_vec(&mut r, n * c * d * h * w, -1.0, 1.0);
        let kern = rand_vec(&mut r, f * c * k * k * k, -1.0, 1.0);
        let (expect, od, oh, ow) = naive_conv3d(&x, &kern, n, c, d, h, w, f, k, k, k, stride, pad);
        let mut g: Graph<f64> = Graph::new();
        let xt = g.leaf(x, &[n, c, d, h, w], false).unwrap();
        let kt = g.leaf(kern, &[f, c, k, k, k], false).unwrap();
        let y = g.conv3d(xt, kt, stride, pad).unwrap();
        assert_eq!(g.shape(y), &[n, f, od, oh, ow]);
        assert!(max_rel_err(g.data(y), &expect) < 1e-10);
    }
}

/// <conv3d(x), y> computed with an independent naive convolution must equal
/// <x, conv_transpose3d(y)> over the same kernel tensor.
#[test]
fn conv_transpose3d_is_adjoint_of_naive_conv3d() {
    // Geometries where (d + 2*pad - k) divides stride exactly, so the
    // transpose restores the full input extent.
    for (seed, stride, pad, k, d) in [
        (7u64, 1usize, 0usize, 2usize, 5usize),
        (8, 2, 1, 3, 5),
        (9, 2, 0, 2, 6),
    ] {
        let (n, c, f) = (2, 3, 2);
        let od = (d + 2 * pad - k) / stride + 1;
        let mut r = rng(seed);
        let x = rand_vec(&mut r, n * c * d * d * d, -1.0, 1.0);
        let kern = rand_vec(&mut r, f * c * k * k * k, -1.0, 1.0);
        let y = rand_vec(&mut r, n * f * od * od * od, -1.0, 1.0);

        let (cx, ..) = naive_conv3d(&x, &kern, n, c, d, d, d, f, k, k, k, stride, pad);
        let lhs = dot(&cx, &y);

        // Same kernel memory, interpreted as [C_in=F, F_out=C, k, k, k].
        let mut g: Graph<f64> = Graph::new();
        let yt = g.leaf(y, &[n, f, od, od, od], false).unwrap();
        let kt = g.leaf(kern, &[f, c, k, k, k], false).unwrap();
        let xt = g.conv_transpose3d(yt, kt, stride, pad).unwrap();
        assert_eq!(g.shape(xt), &[n, c, d, d, d]);
        let rhs = dot(g.data(xt), &x);

        assert!(
            rel_err(lhs, rhs) < 1e-5,
            "adjoint identity broke: {lhs} vs {rhs}"
        );
    }
}

/// For linear maps the backward pass *is* the adjoint: with loss = <L(x), y>,
/// grad(x) must satisfy <L(x), y> = <x, grad(x)>.
#[test]
fn linear_ops_satisfy_adjoint_identity() {
    let cases: Vec<(&str, Box<dyn Fn(&mut Graph<f64>, TensorId) -> TensorId>, Vec<usize>)> = vec![
        (
            "matmul",
            Box::new(|g, x| {
                let mut r = rng(11);
                let b = g
                    .constant(rand_vec(&mut r, 12, -1.0, 1.0), &[4, 3])
                    .unwrap();
                g.matmul(x, b).unwrap()
            }),
            vec![5, 4],
        ),
        (
            "transpose2",
            Box::new(|g, x| g.transpose2(x).unwrap()),
            vec![5, 4],
        ),
        (
            "slice_rows",
            Box::new(|g, x| g.slice_rows(x, 1, 2).unwrap()),
            vec![5, 4],
        ),
        (
            "conv2d",
            Box::new(|g, x| {
                let mut r = rng(12);
                let k = g
                    .constant(rand_vec(&mut r, 2 * 2 * 9, -1.0, 1.0), &[2, 2, 3, 3])
                    .unwrap();
                g.conv2d(x, k, 2, 1).unwrap()
            }),
            vec![2, 2, 6, 6],
        ),
        (
            "conv_transpose3d",
            Box::new(|g, x| {
                let mut r = rng(13);
                let k = g
                    .constant(rand_vec(&mut r, 2 * 2 * 8, -1.0, 1.0), &[2, 2, 2, 2, 2])
                    .unwrap();
                g.conv_transpose3d(x, k, 2, 0).unwrap()
            }),
            vec![2, 2, 3, 3, 3],
        ),
        ("sum", Box::new(|g, x| g.sum(x)), vec![7]),
    ];

    for (name, build, shape) in cases {
        for seed in 0..3 {
            let n: usize = shape.iter().product();
            let mut r = rng(100 + seed);
            let xv = rand_vec(&mut r, n, -1.0, 1.0);
            let mut g: Graph<f64> = Graph::new();
            let x = g.leaf(xv.clone(), &shape, true).unwrap();
            let lx = build(&mut g, x);
            let m: usize = g.shape(lx).iter().product();
            let yv = rand_vec(&mut r, m, -1.0, 1.0);
            let y = g.constant(yv.clone(), &g.shape(lx).to_vec()).unwrap();
            let prod = g.mul(lx, y).unwrap();
            let loss = g.sum(prod);
            g.backward(loss).unwrap();
            let lhs = dot(g.data(lx), &yv);
            let rhs = dot(&xv, g.grad(x).unwrap());
            assert!(
                rel_err(lhs, rhs) < 1e-5,
                "{name}: adjoint identity broke: {lhs} vs {rhs}"
            );
        }
    }
}

#[test]
fn gradient_suite_passes_at_1e4() {
    for (name, err) in ops_gradient_suite(5) {
        assert!(err < 1e-4, "{name}: worst relative error {err}");
    }
}

#[test]
fn identical_inputs_produce_bitwise_identical_outputs() {
    let run = || -> Vec<u32> {
        let mut r = rng(42);
        let xv: Vec<f32> = rand_vec(&mut r, 2 * 3 * 8 * 8, -1.0, 1.0)
            .into_iter()
            .map(|v| v as f32)
            .collect();
        let kv: Vec<f32> = rand_vec(&mut r, 4 * 3 * 9, -1.0, 1.0)
            .into_iter()
            .map(|v| v as f32)
            .collect();
        let mut g: Graph<f32> = Graph::new();
        let x = g.leaf(xv, &[2, 3, 8, 8], true).unwrap();
        let k = g.leaf(kv, &[4, 3, 3, 3], true).unwrap();
        let c = g.conv2d(x, k, 2, 1).unwrap();
        let a = g.elu(c);
        let s = g.mean(a);
        g.backward(s).unwrap();
        let mut bits: Vec<u32> = g.data(s).iter().map(|v| v.to_bits()).collect();
        bits.extend(g.grad(x).unwrap().iter().map(|v| v.to_bits()));
        bits.extend(g.grad(k).unwrap().iter().map(|v| v.to_bits()));
        bits
    };
    assert_eq!(run(), run());
}

#[test]
fn tensor_reused_twice_gets_summed_gradient() {
    let mut g: Graph<f64> = Graph::new();
    let x = g.leaf(vec![3.0, -1.0], &[2], true).unwrap();
    let y = g.add(x, x).unwrap();
    let s = g.sum(y);
    g.backward(s).unwrap();
    assert_eq!(g.grad(x).unwrap(), &[2.0, 2.0]);
}
