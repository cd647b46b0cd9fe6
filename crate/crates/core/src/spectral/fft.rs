//! Discrete Fourier transforms of real signals.
//!
//! [`dft_real`] is the direct `O(T²)` sum. [`fft_real`] is a recursive
//! mixed-radix decimation-in-time transform: each level splits the length by
//! its smallest prime factor `p` and recombines `p` sub-transforms. Once the
//! smallest remaining prime factor exceeds [`MAX_RADIX`] the remaining length
//! is transformed directly.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

/// Largest prime handled by a butterfly stage before falling back to the
/// direct sum.
pub const MAX_RADIX: usize = 31;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Complex {
    pub re: f64,
    pub im: f64,
}

impl Complex {
    pub const ZERO: Complex = Complex { re: 0.0, im: 0.0 };

    pub fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }

    /// `e^{-2πi·num/den}`, with the angle reduced before evaluation.
    pub fn twiddle(num: usize, den: usize) -> Self {
        let angle = -2.0 * PI * ((num % den) as f64) / den as f64;
        Self::new(angle.cos(), angle.sin())
    }

    pub fn norm(self) -> f64 {
        self.re.hypot(self.im)
    }

    pub fn arg(self) -> f64 {
        self.im.atan2(self.re)
    }

    pub fn conj(self) -> Self {
        Self::new(self.re, -self.im)
    }

    fn mul(self, o: Self) -> Self {
        Self::new(
            self.re * o.re - self.im * o.im,
            self.re * o.im + self.im * o.re,
        )
    }

    fn add(self, o: Self) -> Self {
        Self::new(self.re + o.re, self.im + o.im)
    }

    fn scale(self, s: f64) -> Self {
        Self::new(self.re * s, self.im * s)
    }
}

/// Direct evaluation of `X(k) = Σ_t x(t)·e^{-2πikt/T}` for `k = 0..T`.
pub fn dft_real(signal: &[f64]) -> Vec<Complex> {
    let n = signal.len();
    (0..n)
        .map(|k| {
            signal
                .iter()
                .enumerate()
                .fold(Complex::ZERO, |acc, (t, &x)| {
                    acc.add(Complex::twiddle(k * t, n).scale(x))
                })
        })
        .collect()
}

/// Inverse of [`dft_real`] for a full (untruncated) spectrum; returns the
/// real part of `(1/T)·Σ_k X(k)·e^{2πikt/T}`.
pub fn inverse_dft(spectrum: &[Complex]) -> Vec<f64> {
    let n = spectrum.len();
    (0..n)
        .map(|t| {
            let sum = spectrum
                .iter()
                .enumerate()
                .fold(Complex::ZERO, |acc, (k, &x)| {
                    acc.add(x.mul(Complex::twiddle(k * t, n).conj()))
                });
            sum.re / n as f64
        })
        .collect()
}

fn smallest_prime_factor(n: usize) -> usize {
    if n.is_multiple_of(2) {
        return 2;
    }
    let mut f = 3;
    while f * f <= n {
        if n.is_multiple_of(f) {
            return f;
        }
        f += 2;
    }
    n
}

fn direct(input: &[Complex]) -> Vec<Complex> {
    let n = input.len();
    (0..n)
        .map(|k| {
            input
                .iter()
                .enumerate()
                .fold(Complex::ZERO, |acc, (t, &x)| {
                    acc.add(x.mul(Complex::twiddle(k * t, n)))
                })
        })
        .collect()
}

fn fft_complex(input: &[Complex]) -> Vec<Complex> {
    let n = input.len();
    if n <= 1 {
        return input.to_vec();
    }
    let p = smallest_prime_factor(n);
    if p == n || p > MAX_RADIX {
        return direct(input);
    }
    let m = n / p;
    let subs: Vec<Vec<Complex>> = (0..p)
        .map(|r| {
            let strided: Vec<Complex> = input.iter().skip(r).step_by(p).copied().collect();
            fft_complex(&strided)
        })
        .collect();
    (0..n)
        .map(|k| {
            subs.iter().enumerate().fold(Complex::ZERO, |acc, (r, sub)| {
                acc.add(sub[k % m].mul(Complex::twiddle(r * k, n)))
            })
        })
        .collect()
}

/// Fast transform with the same output as [`dft_real`].
pub fn fft_real(signal: &[f64]) -> Vec<Complex> {
    let input: Vec<Complex> = signal.iter().map(|&x| Complex::new(x, 0.0)).collect();
    fft_complex(&input)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn max_err(a: &[Complex], b: &[Complex]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x.re - y.re).abs().max((x.im - y.im).abs()))
            .fold(0.0, f64::max)
    }

    #[test]
    fn constant_signal_is_dc_only() {
        let x = vec![2.5; 12];
        let s = dft_real(&x);
        assert!((s[0].re - 30.0).abs() < 1e-9 && s[0].im.abs() < 1e-9);
        assert!(s[1..].iter().all(|c| c.norm() < 1e-9));
    }

    #[test]
    fn single_tone_lands_in_its_bin() {
        let n = 120;
        let x: Vec<f64> = (0..n)
            .map(|t| (2.0 * PI * 7.0 * t as f64 / n as f64).cos())
            .collect();
        let s = dft_real(&x);
        assert!((s[7].norm() - 60.0).abs() < 1e-9);
        assert!((s[113].norm() - 60.0).abs() < 1e-9);
        for (k, c) in s.iter().enumerate() {
            if k != 7 && k != 113 {
                assert!(c.norm() < 1e-9, "bin {k}");
            }
        }
    }

    #[test]
    fn impulse_has_flat_spectrum() {
        for n in [2, 7, 120, 128] {
            let mut x = vec![0.0; n];
            x[0] = 1.0;
            for c in fft_real(&x) {
                assert!((c.re - 1.0).abs() < 1e-12 && c.im.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn fft_matches_direct_for_awkward_lengths() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for n in [2, 3, 5, 30, 37, 62, 97, 119, 120, 127, 128, 210, 1369] {
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
            assert!(max_err(&fft_real(&x), &dft_real(&x)) < 1e-9, "n = {n}");
        }
    }

    #[test]
    fn fft_is_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 120;
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (a, b) = (1.7, -0.4);
        let z: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
        let (fx, fy, fz) = (fft_real(&x), fft_real(&y), fft_real(&z));
        for k in 0..n {
            let re = a * fx[k].re + b * fy[k].re;
            let im = a * fx[k].im + b * fy[k].im;
            assert!((fz[k].re - re).abs() < 1e-9 && (fz[k].im - im).abs() < 1e-9);
        }
    }

    #[test]
    fn inverse_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x: Vec<f64> = (0..119).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let back = inverse_dft(&fft_real(&x));
        for (a, b) in x.iter().zip(&back) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn real_input_is_conjugate_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x: Vec<f64> = (0..64).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let s = fft_real(&x);
        for k in 1..64 {
            let c = s[64 - k].conj();
            assert!((s[k].re - c.re).abs() < 1e-9 && (s[k].im - c.im).abs() < 1e-9);
        }
    }
}
