//! Seeded synthetic luma images: smooth shading, multi-scale value-noise
//! texture, straight edges at random angles, oriented stripes and mild
//! noise. Stand-in content for desk-scale
//! runs when no natural-image corpus is at hand.

use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use itnn_core::LumaPlane;

use crate::error::{Error, Result};
use crate::pnm;

fn image_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(index);
    r
}

pub fn synth_image(seed: u64, index: u64, width: usize, height: usize) -> LumaPlane {
    let mut rng = image_rng(seed, index);
    let (wf, hf) = (width as f64, height as f64);

    // Smooth background: a tilted plane plus one broad bump.
    let base = rng.random_range(40.0..200.0);
    let (gx, gy) = (rng.random_range(-0.6..0.6), rng.random_range(-0.6..0.6));
    let (bx, by) = (rng.random_range(0.0..wf), rng.random_range(0.0..hf));
    let (bump, bump_r) = (rng.random_range(-50.0..50.0), rng.random_range(20.0..80.0));

    struct Edge {
        nx: f64,
        ny: f64,
        c: f64,
        step: f64,
        soft: f64,
    }
    let edges: Vec<Edge> = (0..rng.random_range(1..5))
        .map(|_| {
            let a = rng.random_range(0.0..PI);
            let (px, py) = (rng.random_range(0.0..wf), rng.random_range(0.0..hf));
            Edge {
                nx: a.cos(),
                ny: a.sin(),
                c: a.cos() * px + a.sin() * py,
                step: rng.random_range(-70.0..70.0),
                soft: rng.random_range(0.3..2.5),
            }
        })
        .collect();

    struct Stripes {
        kx: f64,
        ky: f64,
        phase: f64,
        amp: f64,
        cx: f64,
        cy: f64,
        r: f64,
    }
    let stripes: Vec<Stripes> = (0..rng.random_range(0..3))
        .map(|_| {
            let a = rng.random_range(0.0..PI);
            let period = rng.random_range(4.0..24.0);
            Stripes {
                kx: 2.0 * PI * a.cos() / period,
                ky: 2.0 * PI * a.sin() / period,
                phase: rng.random_range(0.0..2.0 * PI),
                amp: rng.random_range(8.0..40.0),
                cx: rng.random_range(0.0..wf),
                cy: rng.random_range(0.0..hf),
                r: rng.random_range(24.0..96.0),
            }
        })
        .collect();

    let texture = ValueNoise::new(&mut rng, width, height);
    let noise = rng.random_range(0.0..2.0);
    let mut samples = Vec::with_capacity(width * height);
    for y in 0..height {
        for x in 0..width {
            let (xf, yf) = (x as f64, y as f64);
            let d2 = (xf - bx).powi(2) + (yf - by).powi(2);
            let mut v = texture.at(x, y) + base + gx * (xf - wf / 2.0) + gy * (yf - hf / 2.0) + bump * (-d2 / (bump_r * bump_r)).exp();
            for e in &edges {
                let t = (e.nx * xf + e.ny * yf - e.c) / e.soft;
                v += e.step / (1.0 + (-t).exp());
            }
            for s in &stripes {
                let r2 = (xf - s.cx).powi(2) + (yf - s.cy).powi(2);
                let window = (-r2 / (s.r * s.r)).exp();
                v += s.amp * window * (s.kx * xf + s.ky * yf + s.phase).sin();
            }
            // Triangular noise from two uniforms.
            v += noise * (rng.random::<f64>() - rng.random::<f64>()) * 2.0;
            samples.push(v.round().clamp(0.0, 255.0) as u8);
        }
    }
    LumaPlane::new(width, height, samples).expect("sample count")
}

/// Octaves of bilinearly interpolated lattice noise with a random spectral
/// slope, a cheap stand-in for natural-image texture.
struct ValueNoise {
    octaves: Vec<(usize, usize, f64, Vec<f64>)>,
}

impl ValueNoise {
    fn new(rng: &mut ChaCha8Rng, width: usize, height: usize) -> Self {
        let strength = rng.random_range(2.0..28.0);
        let slope = rng.random_range(0.5..1.5);
        let octaves = [32usize, 16, 8, 4, 2]
            .iter()
            .map(|&cell| {
                let (gw, gh) = (width / cell + 2, height / cell + 2);
                let amp = strength * (cell as f64 / 32.0).powf(slope);
                let grid = (0..gw * gh).map(|_| rng.random_range(-1.0..1.0)).collect();
                (cell, gw, amp, grid)
            })
            .collect();
        ValueNoise { octaves }
    }

    fn at(&self, x: usize, y: usize) -> f64 {
        self.octaves
            .iter()
            .map(|(cell, gw, amp, grid)| {
                let (cx, cy) = (x / cell, y / cell);
                let (fx, fy) = ((x % cell) as f64 / *cell as f64, (y % cell) as f64 / *cell as f64);
                let g = |i: usize, j: usize| grid[j * gw + i];
                let top = g(cx, cy) * (1.0 - fx) + g(cx + 1, cy) * fx;
                let bottom = g(cx, cy + 1) * (1.0 - fx) + g(cx + 1, cy + 1) * fx;
                amp * (top * (1.0 - fy) + bottom * fy)
            })
            .sum()
    }
}

/// Writes `count` images named `img_00000.pgm`, ... into `dir`.
pub fn write_corpus(dir: &Path, count: usize, width: usize, height: usize, seed: u64, first: usize) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(Error::io(dir))?;
    for i in first..first + count {
        let plane = synth_image(seed, i as u64, width, height);
        pnm::save_pgm(&dir.join(format!("img_{i:05}.pgm")), &plane)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_and_varied() {
        let a = synth_image(1, 0, 48, 32);
        assert_eq!(a, synth_image(1, 0, 48, 32));
        assert_ne!(a, synth_image(1, 1, 48, 32));
        assert_ne!(a, synth_image(2, 0, 48, 32));
        let distinct: std::collections::BTreeSet<u8> = a.samples().iter().copied().collect();
        assert!(distinct.len() > 10);
    }
}
