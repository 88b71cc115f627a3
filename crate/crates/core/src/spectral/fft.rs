//! Radix-2 complex FFT.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;
// float math for no_std builds; unused when std is linked elsewhere in the graph
#[allow(unused_imports)]
use num_traits::Float;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Direction {
    /// `X_k = sum_j x_j e^{-2 pi i jk/N}`
    Forward,
    /// `x_j = sum_k X_k e^{+2 pi i jk/N}`, unnormalized.
    Inverse,
}

pub(crate) fn next_pow2(n: usize) -> usize {
    n.max(1).next_power_of_two()
}

fn twiddles(n: usize, dir: Direction) -> Vec<Complex64> {
    let sign = match dir {
        Direction::Forward => -1.0,
        Direction::Inverse => 1.0,
    };
    (0..n / 2)
        .map(|k| {
            let t = 2.0 * PI * k as f64 / n as f64;
            Complex64::new(t.cos(), sign * t.sin())
        })
        .collect()
}

fn bit_reverse(buf: &mut [Complex64]) {
    let n = buf.len();
    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            buf.swap(i, j);
        }
    }
}

fn fft_with(buf: &mut [Complex64], tw: &[Complex64]) {
    let n = buf.len();
    bit_reverse(buf);
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let stride = n / len;
        for start in (0..n).step_by(len) {
            for k in 0..half {
                let w = tw[k * stride];
                let a = buf[start + k];
                let b = buf[start + k + half] * w;
                buf[start + k] = a + b;
                buf[start + k + half] = a - b;
            }
        }
        len <<= 1;
    }
}

/// In-place transform; `buf.len()` must be a power of two.
pub(crate) fn fft(buf: &mut [Complex64], dir: Direction) {
    let n = buf.len();
    assert!(n.is_power_of_two(), "fft length {n} is not a power of two");
    if n == 1 {
        return;
    }
    let tw = twiddles(n, dir);
    fft_with(buf, &tw);
}

/// In-place 2-D transform of an `n x n` row-major array.
pub(crate) fn fft2(buf: &mut [Complex64], n: usize, dir: Direction) {
    assert_eq!(buf.len(), n * n);
    assert!(n.is_power_of_two());
    if n == 1 {
        return;
    }
    let tw = twiddles(n, dir);
    for row in buf.chunks_exact_mut(n) {
        fft_with(row, &tw);
    }
    let mut col = vec![Complex64::new(0.0, 0.0); n];
    for c in 0..n {
        for r in 0..n {
            col[r] = buf[r * n + c];
        }
        fft_with(&mut col, &tw);
        for r in 0..n {
            buf[r * n + c] = col[r];
        }
    }
}

/// Linear `n`-fold self-convolution of a sequence (no step scaling).
/// Output length is `n * (len - 1) + 1`.
pub(crate) fn convolve_power(values: &[f64], n: u32) -> Vec<f64> {
    let len = values.len();
    if n == 1 || len == 0 {
        return values.to_vec();
    }
    let out_len = n as usize * (len - 1) + 1;
    let size = next_pow2(out_len);
    let mut buf = vec![Complex64::new(0.0, 0.0); size];
    for (b, &v) in buf.iter_mut().zip(values) {
        b.re = v;
    }
    fft(&mut buf, Direction::Forward);
    for b in buf.iter_mut() {
        *b = b.powi(n as i32);
    }
    fft(&mut buf, Direction::Inverse);
    let scale = 1.0 / size as f64;
    buf[..out_len].iter().map(|c| c.re * scale).collect()
}

/// Linear convolution of two real sequences (no step scaling).
pub(crate) fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let out_len = a.len() + b.len() - 1;
    let size = next_pow2(out_len);
    let mut buf = vec![Complex64::new(0.0, 0.0); size];
    // pack both real inputs into one complex transform
    for (i, v) in buf.iter_mut().enumerate() {
        *v = Complex64::new(*a.get(i).unwrap_or(&0.0), *b.get(i).unwrap_or(&0.0));
    }
    fft(&mut buf, Direction::Forward);
    let mut prod = vec![Complex64::new(0.0, 0.0); size];
    for k in 0..size {
        let c = buf[k];
        let d = buf[(size - k) % size].conj();
        let fa = (c + d) * 0.5;
        let fb = (c - d) * Complex64::new(0.0, -0.5);
        prod[k] = fa * fb;
    }
    fft(&mut prod, Direction::Inverse);
    let scale = 1.0 / size as f64;
    prod[..out_len].iter().map(|c| c.re * scale).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dft(x: &[Complex64], sign: f64) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                x.iter()
                    .enumerate()
                    .fold(Complex64::new(0.0, 0.0), |acc, (j, v)| {
                        let t = sign * 2.0 * PI * (j * k) as f64 / n as f64;
                        acc + v * Complex64::new(t.cos(), t.sin())
                    })
            })
            .collect()
    }

    #[test]
    fn matches_naive_dft() {
        let x: Vec<Complex64> = (0..64)
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let mut fwd = x.clone();
        fft(&mut fwd, Direction::Forward);
        let expect = naive_dft(&x, -1.0);
        for (a, b) in fwd.iter().zip(&expect) {
            assert!((a - b).norm() < 1e-11);
        }
        let mut inv = x.clone();
        fft(&mut inv, Direction::Inverse);
        let expect = naive_dft(&x, 1.0);
        for (a, b) in inv.iter().zip(&expect) {
            assert!((a - b).norm() < 1e-11);
        }
    }

    #[test]
    fn fft2_round_trip() {
        let n = 16;
        let x: Vec<Complex64> = (0..n * n)
            .map(|i| Complex64::new((i as f64).sqrt(), 0.0))
            .collect();
        let mut y = x.clone();
        fft2(&mut y, n, Direction::Forward);
        fft2(&mut y, n, Direction::Inverse);
        for (a, b) in y.iter().zip(&x) {
            assert!((a / (n * n) as f64 - b).norm() < 1e-12);
        }
    }

    #[test]
    fn convolve_matches_direct() {
        let a = [1.0, -2.0, 0.5];
        let b = [3.0, 1.0];
        let c = convolve(&a, &b);
        let expect = [3.0, -5.0, -0.5, 0.5];
        assert_eq!(c.len(), 4);
        for (x, y) in c.iter().zip(expect) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn convolve_power_matches_direct() {
        let v = [1.0, 2.0, 3.0];
        // (1 + 2z + 3z^2)^2 = 1 + 4z + 10z^2 + 12z^3 + 9z^4
        let c = convolve_power(&v, 2);
        let expect = [1.0, 4.0, 10.0, 12.0, 9.0];
        assert_eq!(c.len(), 5);
        for (a, b) in c.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
