//! Mixed-radix FFT against the direct DFT on the window lengths in use.

use std::time::Instant;

use freqhar::spectral::{dft_real, fft_real};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for t in [119usize, 120, 128, 360] {
        let x: Vec<f64> = (0..t).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let start = Instant::now();
        let fast = fft_real(&x);
        let fast_time = start.elapsed();
        let start = Instant::now();
        let slow = dft_real(&x);
        let slow_time = start.elapsed();
        let err = fast
            .iter()
            .zip(&slow)
            .map(|(a, b)| (a.re - b.re).abs().max((a.im - b.im).abs()))
            .fold(0.0, f64::max);
        println!("T={t:>4}  max error {err:.1e}  fft {fast_time:?}  dft {slow_time:?}");
    }
}
