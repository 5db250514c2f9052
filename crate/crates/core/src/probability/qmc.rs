//! Randomized Halton points with independent random digit permutations per
//! coordinate and digit position.

use rand::seq::SliceRandom;
use rand::Rng;

const PRIMES: [u32; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Largest supported dimension.
pub const MAX_DIM: usize = PRIMES.len();

struct Coordinate {
    base: u64,
    /// `perms[k][d]`: image of digit `d` at position `k`.
    perms: Vec<Vec<u32>>,
}

pub struct ScrambledHalton {
    coords: Vec<Coordinate>,
}

impl ScrambledHalton {
    pub fn new<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        assert!(dim <= MAX_DIM, "dimension {dim} exceeds {MAX_DIM}");
        let coords = PRIMES[..dim]
            .iter()
            .map(|&b| {
                // enough digits to resolve double precision
                let digits = (53.0 / (b as f64).log2()).ceil() as usize;
                let perms = (0..digits)
                    .map(|_| {
                        let mut p: Vec<u32> = (0..b).collect();
                        p.shuffle(rng);
                        p
                    })
                    .collect();
                Coordinate { base: b as u64, perms }
            })
            .collect();
        ScrambledHalton { coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Writes point `index` into `out`; every coordinate lies in `(0, 1)`.
    pub fn point(&self, index: u64, out: &mut [f64]) {
        for (c, o) in self.coords.iter().zip(out.iter_mut()) {
            let inv = 1.0 / c.base as f64;
            let mut scale = inv;
            let mut rest = index;
            let mut x = 0.0;
            for perm in &c.perms {
                let d = (rest % c.base) as usize;
                rest /= c.base;
                x += perm[d] as f64 * scale;
                scale *= inv;
            }
            *o = x.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::par::stream_rng;

    #[test]
    fn coordinates_are_stratified() {
        let h = ScrambledHalton::new(3, &mut stream_rng(2, &[]));
        let mut p = [0.0; 3];
        // the first 2^k points fall one per dyadic interval in coordinate 0
        let mut seen = [false; 16];
        for i in 0..16 {
            h.point(i, &mut p);
            assert!(p.iter().all(|&x| x > 0.0 && x < 1.0));
            seen[(p[0] * 16.0) as usize] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn integrates_smooth_function() {
        let f = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
        let h = ScrambledHalton::new(4, &mut stream_rng(5, &[]));
        let mut p = [0.0; 4];
        let n = 4096;
        let mean = (0..n).map(|i| {
            h.point(i, &mut p);
            f(&p)
        }).sum::<f64>() / n as f64;
        assert!((mean - 4.0 / 3.0).abs() < 2e-3);
    }
}
