//! Orthonormal 2-D DCT-II, uniform scalar quantization and the zigzag scan.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Quantization step `2^((QP - 4) / 6)`.
pub fn qstep(qp: i32) -> f64 {
    libm::pow(2.0, f64::from(qp - 4) / 6.0)
}

/// Orthonormal DCT-II basis, `n x n` row-major: row `k` is frequency `k`.
pub fn dct_matrix(n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for k in 0..n {
        let scale = if k == 0 {
            libm::sqrt(1.0 / n as f64)
        } else {
            libm::sqrt(2.0 / n as f64)
        };
        for i in 0..n {
            let angle = core::f64::consts::PI * (2 * i + 1) as f64 * k as f64 / (2 * n) as f64;
            m[k * n + i] = scale * libm::cos(angle);
        }
    }
    m
}

/// Zigzag order over an `n x n` block: anti-diagonals, alternating
/// direction, starting with the DC coefficient.
pub fn zigzag(n: usize) -> Vec<usize> {
    let mut order = Vec::with_capacity(n * n);
    for d in 0..2 * n - 1 {
        let lo = d.saturating_sub(n - 1);
        let hi = d.min(n - 1);
        if d % 2 == 0 {
            // Up and to the right.
            for row in (lo..=hi).rev() {
                order.push(row * n + (d - row));
            }
        } else {
            for row in lo..=hi {
                order.push(row * n + (d - row));
            }
        }
    }
    order
}

struct Basis {
    n: usize,
    dct: Vec<f64>,
    scan: Vec<usize>,
}

/// Transform tables for the square leaf sizes 4 to 32.
pub struct Transform {
    bases: Vec<Basis>,
}

impl Default for Transform {
    fn default() -> Self {
        Self::new()
    }
}

impl Transform {
    pub fn new() -> Self {
        let bases = [4usize, 8, 16, 32]
            .iter()
            .map(|&n| Basis {
                n,
                dct: dct_matrix(n),
                scan: zigzag(n),
            })
            .collect();
        Transform { bases }
    }

    fn basis(&self, n: usize) -> Result<&Basis> {
        self.bases
            .iter()
            .find(|b| b.n == n)
            .ok_or(Error::UnsupportedShape { w: n, h: n })
    }

    pub fn scan(&self, n: usize) -> Result<&[usize]> {
        Ok(&self.basis(n)?.scan)
    }

    /// `C X C^T` for a row-major `n x n` residual.
    pub fn forward(&self, residual: &[i32], n: usize) -> Result<Vec<f64>> {
        let c = &self.basis(n)?.dct;
        check_len(residual.len(), n)?;
        // tmp = X C^T, then C tmp.
        let mut tmp = vec![0.0; n * n];
        for r in 0..n {
            for k in 0..n {
                let mut s = 0.0;
                for i in 0..n {
                    s += f64::from(residual[r * n + i]) * c[k * n + i];
                }
                tmp[r * n + k] = s;
            }
        }
        let mut out = vec![0.0; n * n];
        for k in 0..n {
            for col in 0..n {
                let mut s = 0.0;
                for r in 0..n {
                    s += c[k * n + r] * tmp[r * n + col];
                }
                out[k * n + col] = s;
            }
        }
        Ok(out)
    }

    /// `C^T Y C`.
    pub fn inverse(&self, coeffs: &[f64], n: usize) -> Result<Vec<f64>> {
        let c = &self.basis(n)?.dct;
        check_len(coeffs.len(), n)?;
        let mut tmp = vec![0.0; n * n];
        for r in 0..n {
            for i in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += coeffs[r * n + k] * c[k * n + i];
                }
                tmp[r * n + i] = s;
            }
        }
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for col in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += c[k * n + i] * tmp[k * n + col];
                }
                out[i * n + col] = s;
            }
        }
        Ok(out)
    }

    /// Residual to quantized levels.
    pub fn quantize(&self, residual: &[i32], n: usize, qp: i32) -> Result<Vec<i32>> {
        let step = qstep(qp);
        Ok(self
            .forward(residual, n)?
            .iter()
            .map(|&c| libm::round(c / step) as i32)
            .collect())
    }

    /// Dequantizes, inverse-transforms and adds the rounded residual to the
    /// prediction, clipped to 8 bits.
    pub fn reconstruct(&self, levels: &[i32], pred: &[u8], n: usize, qp: i32) -> Result<Vec<u8>> {
        if levels.iter().all(|&l| l == 0) {
            return Ok(pred.to_vec());
        }
        let step = qstep(qp);
        let coeffs: Vec<f64> = levels.iter().map(|&l| f64::from(l) * step).collect();
        let residual = self.inverse(&coeffs, n)?;
        Ok(residual
            .iter()
            .zip(pred)
            .map(|(&r, &p)| (f64::from(p) + libm::round(r)).clamp(0.0, 255.0) as u8)
            .collect())
    }
}

fn check_len(len: usize, n: usize) -> Result<()> {
    if len != n * n {
        return Err(Error::LengthMismatch {
            expected: n * n,
            actual: len,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Direct O(n^4) evaluation of the orthonormal DCT-II.
    fn dct_oracle(x: &[i32], n: usize) -> Vec<f64> {
        let pi = core::f64::consts::PI;
        let a = |k: usize| if k == 0 { (1.0 / n as f64).sqrt() } else { (2.0 / n as f64).sqrt() };
        let mut out = vec![0.0; n * n];
        for u in 0..n {
            for v in 0..n {
                let mut s = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        s += f64::from(x[i * n + j])
                            * ((2 * i + 1) as f64 * u as f64 * pi / (2 * n) as f64).cos()
                            * ((2 * j + 1) as f64 * v as f64 * pi / (2 * n) as f64).cos();
                    }
                }
                out[u * n + v] = a(u) * a(v) * s;
            }
        }
        out
    }

    #[test]
    fn qstep_values() {
        assert_eq!(qstep(4), 1.0);
        assert!((qstep(10) - 2.0).abs() < 1e-15);
        assert!((qstep(22) - 8.0).abs() < 1e-12);
    }

    #[test]
    fn zero_residual() {
        let t = Transform::new();
        let levels = t.quantize(&[0; 16], 4, 32).unwrap();
        assert!(levels.iter().all(|&l| l == 0));
        assert_eq!(t.reconstruct(&levels, &[7; 16], 4, 32).unwrap(), vec![7; 16]);
    }

    #[test]
    fn constant_residual_has_only_dc() {
        let t = Transform::new();
        let levels = t.quantize(&[16; 16], 4, 4).unwrap();
        // Orthonormal DC gain is n: 16 * 4 = 64.
        assert_eq!(levels[0], 64);
        assert_eq!(dct_oracle(&[16; 16], 4)[0].round(), 64.0);
        assert!(levels[1..].iter().all(|&l| l == 0));
        assert_eq!(t.reconstruct(&levels, &[100; 16], 4, 4).unwrap(), vec![116; 16]);
    }

    #[test]
    fn zigzag_4x4() {
        assert_eq!(zigzag(4), vec![0, 1, 4, 8, 5, 2, 3, 6, 9, 12, 13, 10, 7, 11, 14, 15]);
        for n in [4, 8, 16, 32] {
            let mut z = zigzag(n);
            z.sort_unstable();
            assert_eq!(z, (0..n * n).collect::<Vec<_>>());
        }
    }

    proptest! {
        #[test]
        fn forward_matches_oracle(x in proptest::collection::vec(-255i32..=255, 64)) {
            let t = Transform::new();
            let got = t.forward(&x, 8).unwrap();
            for (a, b) in got.iter().zip(dct_oracle(&x, 8)) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }

        #[test]
        fn qp4_round_trip_is_near_lossless(x in proptest::collection::vec(0u8..=255, 16), p in proptest::collection::vec(0u8..=255, 16)) {
            let t = Transform::new();
            let residual: Vec<i32> = x.iter().zip(&p).map(|(&a, &b)| i32::from(a) - i32::from(b)).collect();
            let levels = t.quantize(&residual, 4, 4).unwrap();
            let recon = t.reconstruct(&levels, &p, 4, 4).unwrap();
            // Unit step rounding error is at most 0.5 per coefficient.
            for (a, b) in recon.iter().zip(&x) {
                prop_assert!((i32::from(*a) - i32::from(*b)).abs() <= 2);
            }
        }
    }
}
