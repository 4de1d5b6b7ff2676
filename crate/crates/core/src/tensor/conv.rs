//! Convolution kernels: 2-D and 3-D cross-correlation plus the 3-D transpose
//! convolution, all expressed through im2col/vol2col gathers and one shared
//! set of gemm kernels.
//!
//! Geometry conventions:
//! - cross-correlation (no kernel flip), single stride and pad per op;
//! - conv output extent:  o = (i + 2*pad - k) / stride + 1  (floor);
//! - transpose output extent:  o = (i - 1) * stride - 2*pad + k.
//!
//! `vol2col`/`col2vol` are exact adjoints of each other, which is what makes
//! `conv_transpose3d` the adjoint of `conv3d` with the same kernel tensor.

use super::gemm::{gemm_abt, gemm_atb, gemm_nn};
use super::Scalar;
use crate::error::{Error, Result};

pub(crate) fn conv_out_extent(input: usize, k: usize, stride: usize, pad: usize) -> Result<usize> {
    if k == 0 || stride == 0 {
        return Err(Error::invalid("conv", "kernel and stride must be positive"));
    }
    let padded = input + 2 * pad;
    if padded < k {
        return Err(Error::invalid(
            "conv",
            format!("kernel extent {k} exceeds padded input {padded}"),
        ));
    }
    Ok((padded - k) / stride + 1)
}

pub(crate) fn conv_transpose_out_extent(
    input: usize,
    k: usize,
    stride: usize,
    pad: usize,
) -> Result<usize> {
    if k == 0 || stride == 0 {
        return Err(Error::invalid(
            "conv_transpose",
            "kernel and stride must be positive",
        ));
    }
    let grown = (input - 1) * stride + k;
    if grown <= 2 * pad {
        return Err(Error::invalid(
            "conv_transpose",
            format!("non-positive output extent for input {input}, k {k}, pad {pad}"),
        ));
    }
    Ok(grown - 2 * pad)
}

// ---------------------------------------------------------------- 2-D ----

/// Gather `img [C,H,W]` into `col [C*kh*kw, oh*ow]` where the source pixel of
/// column (y,x) and kernel offset (r,q) is (y*stride - pad + r, x*stride - pad + q).
#[allow(clippy::too_many_arguments)]
fn im2col<T: Scalar>(
    img: &[T],
    col: &mut [T],
    c: usize,
    h: usize,
    w: usize,
    kh: usize,
    kw: usize,
    stride: usize,
    pad: usize,
    oh: usize,
    ow: usize,
) {
    let plane = h * w;
    let cols = oh * ow;
    for ch in 0..c {
        for r in 0..kh {
            for q in 0..kw {
                let row = (ch * kh + r) * kw + q;
                let out = &mut col[row * cols..(row + 1) * cols];
                for y in 0..oh {
                    let iy = (y * stride + r) as isize - pad as isize;
                    let dst = &mut out[y * ow..(y + 1) * ow];
                    if iy < 0 || iy >= h as isize {
                        for v in dst.iter_mut() {
                            *v = T::zero();
                        }
                        continue;
                    }
                    let src_row = ch * plane + iy as usize * w;
                    for (x, v) in dst.iter_mut().enumerate() {
                        let ix = (x * stride + q) as isize - pad as isize;
                        *v = if ix < 0 || ix >= w as isize {
                            T::zero()
                        } else {
                            img[src_row + ix as usize]
                        };
                    }
                }
            }
        }
    }
}

/// Adjoint of [`im2col`]: scatter-add columns back into the image.
#[allow(clippy::too_many_arguments)]
fn col2im<T: Scalar>(
    col: &[T],
    img: &mut [T],
    c: usize,
    h: usize,
    w: usize,
    kh: usize,
    kw: usize,
    stride: usize,
    pad: usize,
    oh: usize,
    ow: usize,
) {
    let plane = h * w;
    let cols = oh * ow;
    for ch in 0..c {
        for r in 0..kh {
            for q in 0..kw {
                let row = (ch * kh + r) * kw + q;
                let src = &col[row * cols..(row + 1) * cols];
                for y in 0..oh {
                    let iy = (y * stride + r) as isize - pad as isize;
                    if iy < 0 || iy >= h as isize {
                        continue;
                    }
                    let dst_row = ch * plane + iy as usize * w;
                    for x in 0..ow {
                        let ix = (x * stride + q) as isize - pad as isize;
                        if ix >= 0 && ix < w as isize {
                            img[dst_row + ix as usize] += src[y * ow + x];
                        }
                    }
                }
            }
        }
    }
}

/// Forward 2-D cross-correlation: x [N,C,H,W] * k [F,C,kh,kw] -> [N,F,OH,OW].
#[allow(clippy::too_many_arguments)]
pub(crate) fn conv2d_forward<T: Scalar>(
    x: &[T],
    kern: &[T],
    n: usize,
    c: usize,
    h: usize,
    w: usize,
    f: usize,
    kh: usize,
    kw: usize,
    stride: usize,
    pad: usize,
    oh: usize,
    ow: usize,
) -> Vec<T> {
    let cols = oh * ow;
    let krows = c * kh * kw;
    let mut col = vec![T::zero(); krows * cols];
    let mut out = vec![T::zero(); n * f * cols];
    for i in 0..n {
        im2col(
            &x[i * c * h * w..(i + 1) * c * h * w],
            &mut col,
            c,
            h,
            w,
            kh,
            kw,
            stride,
            pad,
            oh,
            ow,
        );
        gemm_nn(
            kern,
            &col,
            &mut out[i * f * cols..(i + 1) * f * cols],
            f,
            krows,
            cols,
        );
    }
    out
}

/// Gradients of 2-D convolution w.r.t. input and kernel; either side optional.
#[allow(clippy::too_many_arguments)]
pub(crate) fn conv2d_backward<T: Scalar>(
    x: &[T],
    kern: &[T],
    dy: &[T],
    n: usize,
    c: usize,
    h: usize,
    w: usize,
    f: usize,
    kh: usize,
    kw: usize,
    stride: usize,
    pad: usize,
    oh: usize,
    ow: usize,
    need_dx: bool,
    need_dk: bool,
) -> (Option<Vec<T>>, Option<Vec<T>>) {
    let cols = oh * ow;
    let krows = c * kh * kw;
    let mut dx = need_dx.then(|| vec![T::zero(); n * c * h * w]);
    let mut dk = need_dk.then(|| vec![T::zero(); f * krows]);
    let mut col = vec![T::zero(); krows * cols];
    for i in 0..n {
        let dy_i = &dy[i * f * cols..(i + 1) * f * cols];
        if let Some(dk) = dk.as_deref_mut() {
            im2col(
                &x[i * c * h * w..(i + 1) * c * h * w],
                &mut col,
                c,
                h,
                w,
                kh,
                kw,
                stride,
                pad,
                oh,
                ow,
            );
            gemm_abt(dy_i, &col, dk, f, cols, krows);
        }
        if let Some(dx) = dx.as_deref_mut() {
            let mut dcol = vec![T::zero(); krows * cols];
            gemm_atb(kern, dy_i, &mut dcol, f, krows, cols);
            col2im(
                &dcol,
                &mut dx[i * c * h * w..(i + 1) * c * h * w],
                c,
                h,
                w,
                kh,
                kw,
                stride,
                pad,
                oh,
                ow,
            );
        }
    }
    (dx, dk)
}

// ---------------------------------------------------------------- 3-D ----

#[derive(Clone, Copy)]
pub(crate) struct Vol {
    pub d: usize,
    pub h: usize,
    pub w: usize,
}

impl Vol {
    pub fn numel(&self) -> usize {
        self.d * self.h * self.w
    }
}

/// Gather `vol [C,vd,vh,vw]` into `col [C*kd*kh*kw, pos.numel()]`; the source
/// voxel for position (z,y,x) and offset (u,r,q) is (z*s-p+u, y*s-p+r, x*s-p+q).
#[allow(clippy::too_many_arguments)]
fn vol2col<T: Scalar>(
    vol: &[T],
    col: &mut [T],
    c: usize,
    vdim: Vol,
    k: (usize, usize, usize),
    stride: usize,
    pad: usize,
    pos: Vol,
) {
    let (kd, kh, kw) = k;
    let cols = pos.numel();
    let vplane = vdim.h * vdim.w;
    let vsize = vdim.d * vplane;
    for ch in 0..c {
        for u in 0..kd {
            for r in 0..kh {
                for q in 0..kw {
                    let row = ((ch * kd + u) * kh + r) * kw + q;
                    let out = &mut col[row * cols..(row + 1) * cols];
                    for z in 0..pos.d {
                        let iz = (z * stride + u) as isize - pad as isize;
                        let zslab = &mut out[z * pos.h * pos.w..(z + 1) * pos.h * pos.w];
                        if iz < 0 || iz >= vdim.d as isize {
                            for v in zslab.iter_mut() {
                                *v = T::zero();
                            }
                            continue;
                        }
                        for y in 0..pos.h {
                            let iy = (y * stride + r) as isize - pad as isize;
                            let dst = &mut zslab[y * pos.w..(y + 1) * pos.w];
                            if iy < 0 || iy >= vdim.h as isize {
                                for v in dst.iter_mut() {
                                    *v = T::zero();
                                }
                                continue;
                            }
                            let src_row =
                                ch * vsize + iz as usize * vplane + iy as usize * vdim.w;
                            for (x, v) in dst.iter_mut().enumerate() {
                                let ix = (x * stride + q) as isize - pad as isize;
                                *v = if ix < 0 || ix >= vdim.w as isize {
                                    T::zero()
                                } else {
                                    vol[src_row + ix as usize]
                                };
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Adjoint of [`vol2col`]: scatter-add columns back into the volume.
#[allow(clippy::too_many_arguments)]
fn col2vol<T: Scalar>(
    col: &[T],
    vol: &mut [T],
    c: usize,
    vdim: Vol,
    k: (usize, usize, usize),
    stride: usize,
    pad: usize,
    pos: Vol,
) {
    let (kd, kh, kw) = k;
    let cols = pos.numel();
    let vplane = vdim.h * vdim.w;
    let vsize = vdim.d * vplane;
    for ch in 0..c {
        for u in 0..kd {
            for r in 0..kh {
                for q in 0..kw {
                    let row = ((ch * kd + u) * kh + r) * kw + q;
                    let src = &col[row * cols..(row + 1) * cols];
                    for z in 0..pos.d {
                        let iz = (z * stride + u) as isize - pad as isize;
                        if iz < 0 || iz >= vdim.d as isize {
                            continue;
                        }
                        for y in 0..pos.h {
                            let iy = (y * stride + r) as isize - pad as isize;
                            if iy < 0 || iy >= vdim.h as isize {
                                continue;
                            }
                            let dst_row =
                                ch * vsize + iz as usize * vplane + iy as usize * vdim.w;
                            let srow = &src[(z * pos.h + y) * pos.w..(z * pos.h + y + 1) * pos.w];
                            for (x, &v) in srow.iter().enumerate() {
                                let ix = (x * stride + q) as isize - pad as isize;
                                if ix >= 0 && ix < vdim.w as isize {
                                    vol[dst_row + ix as usize] += v;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Forward 3-D cross-correlation: x [N,C,D,H,W] * k [F,C,kd,kh,kw] -> [N,F,out].
#[allow(clippy::too_many_arguments)]
pub(crate) fn conv3d_forward<T: Scalar>(
    x: &[T],
    kern: &[T],
    n: usize,
    c: usize,
    vin: Vol,
    f: usize,
    k: (usize, usize, usize),
    stride: usize,
    pad: usize,
    vout: Vol,
) -> Vec<T> {
    let cols = vout.numel();
    let krows = c * k.0 * k.1 * k.2;
    let mut col = vec![T::zero(); krows * cols];
    let mut out = vec![T::zero(); n * f * cols];
    let xs = c * vin.numel();
    for i in 0..n {
        vol2col(&x[i * xs..(i + 1) * xs], &mut col, c, vin, k, stride, pad, vout);
        gemm_nn(
            kern,
            &col,
            &mut out[i * f * cols..(i + 1) * f * cols],
            f,
            krows,
            cols,
        );
    }
    out
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn conv3d_backward<T: Scalar>(
    x: &[T],
    kern: &[T],
    dy: &[T],
    n: usize,
    c: usize,
    vin: Vol,
    f: usize,
    k: (usize, usize, usize),
    stride: usize,
    pad: usize,
    vout: Vol,
    need_dx: bool,
    need_dk: bool,
) -> (Option<Vec<T>>, Option<Vec<T>>) {
    let cols = vout.numel();
    let krows = c * k.0 * k.1 * k.2;
    let xs = c * vin.numel();
    let mut dx = need_dx.then(|| vec![T::zero(); n * xs]);
    let mut dk = need_dk.then(|| vec![T::zero(); f * krows]);
    let mut col = vec![T::zero(); krows * cols];
    for i in 0..n {
        let dy_i = &dy[i * f * cols..(i + 1) * f * cols];
        if let Some(dk) = dk.as_deref_mut() {
            vol2col(&x[i * xs..(i + 1) * xs], &mut col, c, vin, k, stride, pad, vout);
            gemm_abt(dy_i, &col, dk, f, cols, krows);
        }
        if let Some(dx) = dx.as_deref_mut() {
            let mut dcol = vec![T::zero(); krows * cols];
            gemm_atb(kern, dy_i, &mut dcol, f, krows, cols);
            col2vol(
                &dcol,
                &mut dx[i * xs..(i + 1) * xs],
                c,
                vin,
                k,
                stride,
                pad,
                vout,
            );
        }
    }
    (dx, dk)
}

/// Forward 3-D transpose convolution: x [N,C,D,H,W] * k [C,F,kd,kh,kw] -> [N,F,out].
///
/// Exactly the adjoint of [`conv3d_forward`] over the same kernel memory, so
/// <conv3d(a), b> == <a, conv_transpose3d(b)> for matching geometries.
#[allow(clippy::too_many_arguments)]
pub(crate) fn conv_transpose3d_forward<T: Scalar>(
    x: &[T],
    kern: &[T],
    n: usize,
    c: usize,
    vin: Vol,
    f: usize,
    k: (usize, usize, usize),
    stride: usize,
    pad: usize,
    vout: Vol,
) -> Vec<T> {
    let cols = vin.numel();
    let krows = f * k.0 * k.1 * k.2;
    let xs = c * cols;
    let ys = f * vout.numel();
    let mut dcol = vec![T::zero(); krows * cols];
    let mut out = vec![T::zero(); n * ys];
    for i in 0..n {
        for v in dcol.iter_mut() {
            *v = T::zero();
        }
        gemm_atb(kern, &x[i * xs..(i + 1) * xs], &mut dcol, c, krows, cols);
        col2vol(
            &dcol,
            &mut out[i * ys..(i + 1) * ys],
            f,
            vout,
            k,
            stride,
            pad,
            vin,
        );
    }
    out
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn conv_transpose3d_backward<T: Scalar>(
    x: &[T],
    kern: &[T],
    dy: &[T],
    n: usize,
    c: usize,
    vin: Vol,
    f: usize,
    k: (usize, usize, usize),
    stride: usize,
    pad: usize,
    vout: Vol,
    need_dx: bool,
    need_dk: bool,
) -> (Option<Vec<T>>, Option<Vec<T>>) {
    let cols = vin.numel();
    let krows = f * k.0 * k.1 * k.2;
    let xs = c * cols;
    let ys = f * vout.numel();
    let mut dx = need_dx.then(|| vec![T::zero(); n * xs]);
    let mut dk = need_dk.then(|| vec![T::zero(); c * krows]);
    let mut col = vec![T::zero(); krows * cols];
    for i in 0..n {
        // Gather the upstream gradient with conv geometry; reuse for both sides.
        vol2col(
            &dy[i * ys..(i + 1) * ys],
            &mut col,
            f,
            vout,
            k,
            stride,
            pad,
            vin,
        );
        if let Some(dx) = dx.as_deref_mut() {
            gemm_nn(
                kern,
                &col,
                &mut dx[i * xs..(i + 1) * xs],
                c,
                krows,
                cols,
            );
        }
        if let Some(dk) = dk.as_deref_mut() {
            gemm_abt(&x[i * xs..(i + 1) * xs], &col, dk, c, cols, krows);
        }
    }
    (dx, dk)
}
