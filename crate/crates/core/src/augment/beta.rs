//! Symmetric Beta draws from two Gamma variates (Marsaglia–Tsang).
//!
//! Gamma draws are kept in log space so that very small shape parameters,
//! whose variates underflow to zero, still produce a well-defined ratio.

use rand::Rng;
use rand_distr::StandardNormal;

/// `ln X` for `X ~ Gamma(shape, 1)`, `shape > 0`.
pub fn ln_gamma_variate<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    debug_assert!(shape > 0.0);
    if shape < 1.0 {
        // Gamma(k) = Gamma(k+1) · U^(1/k)
        let u: f64 = 1.0 - rng.random::<f64>();
        return ln_gamma_variate(shape + 1.0, rng) + u.ln() / shape;
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x: f64 = rng.sample(StandardNormal);
        let v = 1.0 + c * x;
        if v <= 0.0 {
            continue;
        }
        let v = v * v * v;
        let u: f64 = 1.0 - rng.random::<f64>();
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 || u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return (d * v).ln();
        }
    }
}

/// `X / (X + Y)` with `X ~ Gamma(a)`, `Y ~ Gamma(b)`, i.e. a `Beta(a, b)` draw in `[0, 1]`.
pub fn beta_variate<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    let lx = ln_gamma_variate(a, rng);
    let ly = ln_gamma_variate(b, rng);
    // 1 / (1 + e^(ly − lx)), evaluated on the side that cannot overflow
    let t = ly - lx;
    if t <= 0.0 {
        1.0 / (1.0 + t.exp())
    } else {
        let e = (-t).exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn gamma_mean_matches_shape() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for shape in [0.3, 1.0, 2.5, 9.0] {
            let n = 50_000;
            let mean = (0..n)
                .map(|_| ln_gamma_variate(shape, &mut rng).exp())
                .sum::<f64>()
                / n as f64;
            // sd of the mean is sqrt(shape / n)
            assert!(
                (mean - shape).abs() < 5.0 * (shape / n as f64).sqrt(),
                "shape {shape}: mean {mean}"
            );
        }
    }

    #[test]
    fn tiny_shapes_stay_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10_000 {
            let l = beta_variate(1e-3, 1e-3, &mut rng);
            assert!((0.0..=1.0).contains(&l), "{l}");
        }
    }
}
