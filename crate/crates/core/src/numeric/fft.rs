//! Radix-2 complex FFT used for discrete time convolutions.

use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64 as C64;

/// In-place FFT; `inverse` applies the unnormalized inverse transform.
pub fn fft_in_place(a: &mut [C64], inverse: bool) {
    let n = a.len();
    assert!(n.is_power_of_two(), "FFT length must be a power of two");
    let mut j = 0;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            a.swap(i, j);
        }
    }
    let sign = if inverse { 1.0 } else { -1.0 };
    let mut len = 2;
    while len <= n {
        let ang = sign * 2.0 * PI / len as f64;
        let half = len / 2;
        let roots: Vec<C64> = (0..half).map(|k| C64::from_polar(1.0, ang * k as f64)).collect();
        for start in (0..n).step_by(len) {
            for k in 0..half {
                let u = a[start + k];
                let v = a[start + k + half] * roots[k];
                a[start + k] = u + v;
                a[start + k + half] = u - v;
            }
        }
        len <<= 1;
    }
}

/// Linear convolution of real sequences truncated to `out_len` samples.
pub fn convolve_real(a: &[f64], b: &[f64], out_len: usize) -> Vec<f64> {
    let need = a.len() + b.len();
    let n = need.next_power_of_two();
    let mut fa: Vec<C64> = (0..n).map(|i| C64::new(*a.get(i).unwrap_or(&0.0), 0.0)).collect();
    let mut fb: Vec<C64> = (0..n).map(|i| C64::new(*b.get(i).unwrap_or(&0.0), 0.0)).collect();
    fft_in_place(&mut fa, false);
    fft_in_place(&mut fb, false);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y;
    }
    fft_in_place(&mut fa, true);
    (0..out_len).map(|i| if i < n { fa[i].re / n as f64 } else { 0.0 }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn convolution_matches_direct() {
        let a: Vec<f64> = (0..37).map(|i| libm::sin(i as f64)).collect();
        let b: Vec<f64> = (0..21).map(|i| 1.0 / (1.0 + i as f64)).collect();
        let c = convolve_real(&a, &b, 50);
        for m in 0..50 {
            let mut s = 0.0;
            for k in 0..=m {
                if k < a.len() && m - k < b.len() {
                    s += a[k] * b[m - k];
                }
            }
            assert!((s - c[m]).abs() < 1e-12);
        }
    }
}
