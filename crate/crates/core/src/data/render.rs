//! View rendering and domain corruption.
//!
//! Rendering rotates the occupancy grid about the vertical axis (nearest
//! neighbor), then projects it orthographically onto the image plane with
//! depth shading: nearer voxels draw brighter, background is pure white.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Background {
    None,
    TexturedClutter,
}

/// Corruption recipe of one domain: background paste, Gaussian blur,
/// resolution drop, pixel noise. The source profile is the identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainProfile {
    pub name: String,
    pub background: Background,
    pub blur_sigma: f64,
    pub noise_sigma: f64,
    pub resolution_scale: f64,
}

impl DomainProfile {
    pub fn source() -> Self {
        DomainProfile {
            name: "source".into(),
            background: Background::None,
            blur_sigma: 0.0,
            noise_sigma: 0.0,
            resolution_scale: 1.0,
        }
    }

    /// Blurred low-resolution captures, no background clutter.
    pub fn lab() -> Self {
        DomainProfile {
            name: "lab".into(),
            background: Background::None,
            blur_sigma: 1.5,
            noise_sigma: 0.02,
            resolution_scale: 0.5,
        }
    }

    /// Cluttered textured backgrounds at full resolution.
    pub fn wild() -> Self {
        DomainProfile {
            name: "wild".into(),
            background: Background::TexturedClutter,
            blur_sigma: 1.0,
            noise_sigma: 0.02,
            resolution_scale: 1.0,
        }
    }

    /// Clean segmented captures: source plus mild noise. The sigma keeps the
    /// paired per-pixel divergence above 0.01 even though clipping at pure
    /// white absorbs half of the noise on background pixels.
    pub fn segmented() -> Self {
        DomainProfile {
            name: "segmented".into(),
            background: Background::None,
            blur_sigma: 0.0,
            noise_sigma: 0.03,
            resolution_scale: 1.0,
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "source" => Ok(Self::source()),
            "lab" => Ok(Self::lab()),
            "wild" => Ok(Self::wild()),
            "segmented" => Ok(Self::segmented()),
            other => Err(Error::invalid(
                "domain_profile",
                format!("unknown profile `{other}` (expected lab|wild|segmented)"),
            )),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.background == Background::None
            && self.blur_sigma == 0.0
            && self.noise_sigma == 0.0
            && self.resolution_scale >= 1.0
    }

    pub fn validate(&self) -> Result<()> {
        if self.blur_sigma < 0.0
            || self.noise_sigma < 0.0
            || !(self.resolution_scale > 0.0 && self.resolution_scale <= 1.0)
        {
            return Err(Error::invalid(
                "domain_profile",
                format!("invalid parameters in profile `{}`", self.name),
            ));
        }
        Ok(())
    }
}

/// Rotate a [v,v,v] grid (index order y,x,z) about the vertical axis by a
/// multiple of 45 degrees, nearest-neighbor resampling.
pub fn rotate_grid(grid: &[f32], v: usize, azimuth_deg: u16) -> Result<Vec<f32>> {
    let az = azimuth_deg % 360;
    if az % 45 != 0 {
        return Err(Error::invalid(
            "render_view",
            format!("azimuth {azimuth_deg} is not a multiple of 45"),
        ));
    }
    if az == 0 {
        return Ok(grid.to_vec());
    }
    let theta = (az as f64).to_radians();
    let (sin, cos) = theta.sin_cos();
    let c = (v as f64 - 1.0) / 2.0;
    let mut out = vec![0.0f32; grid.len()];
    for yi in 0..v {
        for xi in 0..v {
            for zi in 0..v {
                // pull: rotate the output coordinate back by -theta
                let dx = xi as f64 - c;
                let dz = zi as f64 - c;
                let sx = (cos * dx + sin * dz + c).round();
                let sz = (-sin * dx + cos * dz + c).round();
                if sx < 0.0 || sz < 0.0 || sx >= v as f64 || sz >= v as f64 {
                    continue;
                }
                out[(yi * v + xi) * v + zi] = grid[(yi * v + sx as usize) * v + sz as usize];
            }
        }
    }
    Ok(out)
}

/// Orthographic front projection of an already-rotated grid into a C-channel
/// image; `tint` scales the per-channel shade of object pixels.
pub fn project(grid: &[f32], v: usize, image_size: usize, tint: [f32; 3]) -> Vec<f32> {
    let mut img = vec![1.0f32; 3 * image_size * image_size];
    let plane = image_size * image_size;
    for r in 0..image_size {
        let yi = v - 1 - (r * v) / image_size;
        for cpx in 0..image_size {
            let xi = (cpx * v) / image_size;
            let mut shade = None;
            for zi in 0..v {
                if grid[(yi * v + xi) * v + zi] > 0.5 {
                    shade = Some(0.3 + 0.6 * (1.0 - zi as f32 / (v as f32 - 1.0)));
                    break;
                }
            }
            if let Some(s) = shade {
                for ch in 0..3 {
                    img[ch * plane + r * image_size + cpx] = s * tint[ch];
                }
            }
        }
    }
    img
}

/// Render one view: rotate about the vertical axis, then project.
pub fn render_view(
    gt_voxel: &[f32],
    v: usize,
    azimuth_deg: u16,
    image_size: usize,
    tint: [f32; 3],
) -> Result<(Vec<f32>, Vec<f32>)> {
    let rotated = rotate_grid(gt_voxel, v, azimuth_deg)?;
    let img = project(&rotated, v, image_size, tint);
    Ok((img, rotated))
}

fn gaussian_blur(img: &mut [f32], size: usize, sigma: f64) {
    let radius = (3.0 * sigma).ceil() as isize;
    let mut kernel = Vec::with_capacity((2 * radius + 1) as usize);
    let mut norm = 0.0f64;
    for i in -radius..=radius {
        let w = (-(i * i) as f64 / (2.0 * sigma * sigma)).exp();
        kernel.push(w);
        norm += w;
    }
    for w in &mut kernel {
        *w /= norm;
    }
    let plane = size * size;
    for ch in 0..3 {
        let src: Vec<f32> = img[ch * plane..(ch + 1) * plane].to_vec();
        let mut tmp = vec![0.0f32; plane];
        // horizontal
        for r in 0..size {
            for c in 0..size {
                let mut acc = 0.0f64;
                for (ki, &w) in kernel.iter().enumerate() {
                    let cc = (c as isize + ki as isize - radius).clamp(0, size as isize - 1);
                    acc += w * src[r * size + cc as usize] as f64;
                }
                tmp[r * size + c] = acc as f32;
            }
        }
        // vertical
        let dst = &mut img[ch * plane..(ch + 1) * plane];
        for r in 0..size {
            for c in 0..size {
                let mut acc = 0.0f64;
                for (ki, &w) in kernel.iter().enumerate() {
                    let rr = (r as isize + ki as isize - radius).clamp(0, size as isize - 1);
                    acc += w * tmp[rr as usize * size + c] as f64;
                }
                dst[r * size + c] = acc as f32;
            }
        }
    }
}

fn bilinear_resize(src: &[f32], src_size: usize, dst_size: usize) -> Vec<f32> {
    let plane_s = src_size * src_size;
    let plane_d = dst_size * dst_size;
    let mut out = vec![0.0f32; 3 * plane_d];
    let scale = src_size as f32 / dst_size as f32;
    for ch in 0..3 {
        for r in 0..dst_size {
            let sy = ((r as f32 + 0.5) * scale - 0.5).clamp(0.0, src_size as f32 - 1.0);
            let y0 = sy.floor() as usize;
            let y1 = (y0 + 1).min(src_size - 1);
            let fy = sy - y0 as f32;
            for c in 0..dst_size {
                let sx = ((c as f32 + 0.5) * scale - 0.5).clamp(0.0, src_size as f32 - 1.0);
                let x0 = sx.floor() as usize;
                let x1 = (x0 + 1).min(src_size - 1);
                let fx = sx - x0 as f32;
                let base = ch * plane_s;
                let v00 = src[base + y0 * src_size + x0];
                let v01 = src[base + y0 * src_size + x1];
                let v10 = src[base + y1 * src_size + x0];
                let v11 = src[base + y1 * src_size + x1];
                let top = v00 + (v01 - v00) * fx;
                let bot = v10 + (v11 - v10) * fx;
                out[ch * plane_d + r * dst_size + c] = top + (bot - top) * fy;
            }
        }
    }
    out
}

/// Pixels where any channel dips below pure white belong to the object.
fn object_mask(img: &[f32], size: usize) -> Vec<bool> {
    let plane = size * size;
    (0..plane)
        .map(|i| (0..3).any(|ch| img[ch * plane + i] < 0.999))
        .collect()
}

fn paste_background(img: &mut [f32], size: usize, rng: &mut ChaCha8Rng) {
    let mask = object_mask(img, size);
    let plane = size * size;
    // plaid parameters per channel plus a handful of soft blobs
    let mut freqs = [[0.0f64; 2]; 3];
    let mut phases = [[0.0f64; 2]; 3];
    let mut bases = [0.0f64; 3];
    let mut amps = [0.0f64; 3];
    for ch in 0..3 {
        freqs[ch] = [rng.random_range(2.0..6.0), rng.random_range(2.0..6.0)];
        phases[ch] = [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)];
        bases[ch] = rng.random_range(0.3..0.7);
        amps[ch] = rng.random_range(0.15..0.3);
    }
    let blobs: Vec<(f64, f64, f64, [f64; 3])> = (0..4)
        .map(|_| {
            (
                rng.random_range(0.0..1.0),
                rng.random_range(0.0..1.0),
                rng.random_range(0.08..0.25),
                [
                    rng.random_range(-0.3..0.3),
                    rng.random_range(-0.3..0.3),
                    rng.random_range(-0.3..0.3),
                ],
            )
        })
        .collect();
    for r in 0..size {
        let vpos = r as f64 / size as f64;
        for c in 0..size {
            let i = r * size + c;
            if mask[i] {
                continue;
            }
            let u = c as f64 / size as f64;
            for ch in 0..3 {
                let plaid = (std::f64::consts::TAU * (freqs[ch][0] * u + phases[ch][0])).sin()
                    * (std::f64::consts::TAU * (freqs[ch][1] * vpos + phases[ch][1])).sin();
                let mut val = bases[ch] + amps[ch] * plaid;
                for (bx, by, brad, color) in &blobs {
                    let d2 = (u - bx).powi(2) + (vpos - by).powi(2);
                    val += color[ch] * (-d2 / (2.0 * brad * brad)).exp();
                }
                img[ch * plane + i] = val.clamp(0.0, 1.0) as f32;
            }
        }
    }
}

/// Corrupt a clean render: background paste, blur, resolution drop and
/// clipped Gaussian noise, in that order. Identity profiles return the
/// input bit for bit.
pub fn apply_domain_shift(
    image: &[f32],
    image_size: usize,
    profile: &DomainProfile,
    rng: &mut ChaCha8Rng,
) -> Vec<f32> {
    let mut img = image.to_vec();
    if profile.is_identity() {
        return img;
    }
    if profile.background == Background::TexturedClutter {
        paste_background(&mut img, image_size, rng);
    }
    if profile.blur_sigma > 0.0 {
        gaussian_blur(&mut img, image_size, profile.blur_sigma);
    }
    if profile.resolution_scale < 1.0 {
        let low = ((image_size as f64 * profile.resolution_scale).round() as usize).max(1);
        let down = bilinear_resize(&img, image_size, low);
        img = bilinear_resize(&down, low, image_size);
    }
    if profile.noise_sigma > 0.0 {
        let norm = Normal::new(0.0f64, profile.noise_sigma).expect("validated sigma");
        for v in img.iter_mut() {
            *v = (*v as f64 + norm.sample(rng)).clamp(0.0, 1.0) as f32;
        }
    }
    img
}
