//! Six parametric shape grammars, one per class, with per-instance jittered
//! proportions. Occupancy is evaluated at voxel centers in the normalized
//! cube [-1,1]^3; y is the vertical axis, z the viewing depth.
//!
//! Thin dimensions carry resolution-dependent floors so every part still
//! catches voxel centers at coarse grids (V = 8 has a cell pitch of 0.25),
//! keeping grids nonempty and 6-connected at any supported resolution.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const CLASS_NAMES: [&str; 6] = [
    "cross_wing",
    "box_on_wheels",
    "slab_on_stand",
    "pole_with_bulb",
    "rounded_bar",
    "hull_with_keel",
];

struct Jitter(ChaCha8Rng);

impl Jitter {
    fn pick(&mut self, lo: f64, hi: f64) -> f64 {
        self.0.random_range(lo..hi)
    }
}

/// Minimum feature sizes that guarantee voxel-center coverage at pitch 2/v.
#[derive(Clone, Copy)]
struct Floors {
    /// Half-width of a slab centered on a coordinate plane (centers at 1/v).
    slab: f64,
    /// Radius of a cylinder on a grid axis (nearest center at sqrt(2)/v).
    axis_r: f64,
    /// Radius of a disk at an arbitrary position (worst case sqrt(2)/v away).
    free_r: f64,
    /// Full width of an interval at an arbitrary position (pitch 2/v).
    span: f64,
}

impl Floors {
    fn new(v: usize) -> Self {
        let v = v as f64;
        Floors {
            slab: 1.25 / v,
            axis_r: 1.7 / v,
            free_r: 2.0 / v,
            span: 2.2 / v,
        }
    }
}

/// Deterministic binary occupancy grid for (class_id, instance_seed, v).
pub fn generate_shape(class_id: usize, instance_seed: u64, v: usize) -> Vec<f32> {
    assert!(class_id < 6, "class_id {class_id} out of range");
    let mut j = Jitter(ChaCha8Rng::seed_from_u64(
        instance_seed ^ (class_id as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
    ));
    let floors = Floors::new(v);
    let occupancy: Box<dyn Fn(f64, f64, f64) -> bool> = match class_id {
        0 => cross_wing(&mut j, floors),
        1 => box_on_wheels(&mut j, floors),
        2 => slab_on_stand(&mut j, floors),
        3 => pole_with_bulb(&mut j, floors),
        4 => rounded_bar(&mut j, floors),
        _ => hull_with_keel(&mut j, floors),
    };
    let mut grid = vec![0.0f32; v * v * v];
    let center = |i: usize| -> f64 { ((i as f64 + 0.5) / v as f64) * 2.0 - 1.0 };
    for yi in 0..v {
        let y = center(yi);
        for xi in 0..v {
            let x = center(xi);
            for zi in 0..v {
                let z = center(zi);
                if occupancy(x, y, z) {
                    grid[(yi * v + xi) * v + zi] = 1.0;
                }
            }
        }
    }
    grid
}

fn cross_wing(j: &mut Jitter, f: Floors) -> Box<dyn Fn(f64, f64, f64) -> bool> {
    let fus_r = j.pick(0.14, 0.19).max(f.axis_r);
    let fus_len = j.pick(0.75, 0.95);
    let span = j.pick(0.68, 0.92);
    let chord = j.pick(0.13, 0.2).max(f.span / 2.0);
    let thick = j.pick(0.07, 0.11).max(f.slab);
    let wing_x = j.pick(-0.12, 0.1);
    let tail_h = j.pick(0.25, 0.4);
    let fin_len = 0.16f64.max(f.span);
    let fin_w = 0.07f64.max(f.slab);
    Box::new(move |x, y, z| {
        let fuselage = y * y + z * z <= fus_r * fus_r && x.abs() <= fus_len;
        let wings = (x - wing_x).abs() <= chord && z.abs() <= span && y.abs() <= thick;
        let fin =
            x >= -fus_len && x <= -fus_len + fin_len && z.abs() <= fin_w && (0.0..=tail_h).contains(&y);
        let hstab =
            x >= -fus_len && x <= -fus_len + fin_len && z.abs() <= 0.4 * span && y.abs() <= fin_w;
        fuselage || wings || fin || hstab
    })
}

fn box_on_wheels(j: &mut Jitter, f: Floors) -> Box<dyn Fn(f64, f64, f64) -> bool> {
    let half_len = j.pick(0.6, 0.8);
    let y_bot = j.pick(-0.3, -0.22);
    let y_top = j.pick(0.05, 0.15);
    let half_w = j.pick(0.28, 0.38);
    let cab_x = j.pick(-0.1, 0.12);
    let cab_len = j.pick(0.25, 0.4);
    let cab_h = j.pick(0.2, 0.3).max(f.span);
    let wheel_r = j.pick(0.11, 0.15).max(f.free_r);
    let wheel_hw = 0.1f64.max(f.span / 2.0);
    Box::new(move |x, y, z| {
        let body = x.abs() <= half_len && y >= y_bot && y <= y_top && z.abs() <= half_w;
        let cabin = (x - cab_x).abs() <= cab_len
            && y >= y_top
            && y <= y_top + cab_h
            && z.abs() <= half_w * 0.85;
        let wx = half_len * 0.62;
        let wz = half_w * 0.9;
        let wy = y_bot - 0.03;
        let wheel = (x.abs() - wx).powi(2) + (y - wy).powi(2) <= wheel_r * wheel_r
            && (z.abs() - wz).abs() <= wheel_hw;
        body || cabin || wheel
    })
}

fn slab_on_stand(j: &mut Jitter, f: Floors) -> Box<dyn Fn(f64, f64, f64) -> bool> {
    let half_w = j.pick(0.5, 0.68);
    let y0 = j.pick(-0.25, -0.12);
    let height = j.pick(0.72, 0.95);
    let thick = j.pick(0.07, 0.11).max(f.slab);
    let base_y = j.pick(-0.62, -0.5);
    let neck_hw = 0.09f64.max(f.axis_r);
    let base_h = 0.12f64.max(f.span);
    Box::new(move |x, y, z| {
        let slab = x.abs() <= half_w && y >= y0 && y <= y0 + height && z.abs() <= thick;
        let neck = x.abs() <= neck_hw && y >= base_y && y <= y0 + 0.06 && z.abs() <= neck_hw;
        let base = x.abs() <= 0.32 && y >= base_y - base_h && y <= base_y && z.abs() <= 0.26;
        slab || neck || base
    })
}

fn pole_with_bulb(j: &mut Jitter, f: Floors) -> Box<dyn Fn(f64, f64, f64) -> bool> {
    let base_r = j.pick(0.26, 0.34);
    let pole_r = j.pick(0.1, 0.13).max(f.axis_r);
    let pole_top = j.pick(0.12, 0.28);
    let bulb_w = j.pick(0.26, 0.35);
    let bulb_h = j.pick(0.26, 0.36);
    let base_h = 0.18f64.max(f.span);
    Box::new(move |x, y, z| {
        let r2 = x * x + z * z;
        let base = r2 <= base_r * base_r && y >= -0.6 - base_h && y <= -0.6;
        let pole = r2 <= pole_r * pole_r && y >= -0.68 && y <= pole_top;
        let bc = pole_top + bulb_h * 0.7;
        let bulb =
            (x / bulb_w).powi(2) + ((y - bc) / bulb_h).powi(2) + (z / bulb_w).powi(2) <= 1.0;
        base || pole || bulb
    })
}

fn rounded_bar(j: &mut Jitter, f: Floors) -> Box<dyn Fn(f64, f64, f64) -> bool> {
    let ax = j.pick(0.5, 0.66);
    let ay = j.pick(0.17, 0.25);
    let az = j.pick(0.27, 0.37);
    let yc = -0.08;
    let ridge_hw = (az * 0.5).max(f.slab);
    let ridge_overlap = 0.07f64.max(1.4 / (1.0 / f.slab * 1.25)); // 1.4 / v
    Box::new(move |x, y, z| {
        let bar = (x.abs() / ax).powi(4) + (((y - yc).abs()) / ay).powi(4) + (z.abs() / az).powi(4)
            <= 1.0;
        let ridge = x.abs() <= ax * 0.55
            && y >= yc + ay - ridge_overlap
            && y <= yc + ay + 0.1
            && z.abs() <= ridge_hw;
        bar || ridge
    })
}

fn hull_with_keel(j: &mut Jitter, f: Floors) -> Box<dyn Fn(f64, f64, f64) -> bool> {
    let half_len = j.pick(0.6, 0.78);
    let half_w = j.pick(0.26, 0.36);
    let y_top = j.pick(0.1, 0.18);
    let keel_hw = 0.07f64.max(f.slab);
    let cab_h = 0.24f64.max(f.span);
    Box::new(move |x, y, z| {
        let q = x / half_len;
        let hull = x.abs() <= half_len
            && z.abs() <= half_w * (1.0 - 0.55 * q * q)
            && y >= -0.28 + 0.12 * q * q
            && y <= y_top;
        let keel = x.abs() <= half_len * 0.6 && z.abs() <= keel_hw && (-0.44..=-0.1).contains(&y);
        let cabin = (x + 0.15).abs() <= 0.22
            && z.abs() <= half_w * 0.45
            && y >= y_top
            && y <= y_top + cab_h;
        hull || keel || cabin
    })
}
