//! `E[|U| |V|]` for the conditioned gradients `U, V` in R^2.
//!
//! With the covariance `Delta` in the order `(U1, U2, V1, V2)`, the pairs
//! `(U1, V1)` and `(U2, V2)` are independent: the first has variances
//! `s2 = 1 + 2a` and covariance `2b`, the second unit variances and
//! covariance `2c`.
//!
//! The deterministic route writes each norm through
//! `|u| = (4 pi)^{-1/2} int_0^inf (1 - exp(-s |u|^2)) s^{-3/2} ds`, which
//! turns the expectation into Gaussian moment generating functions:
//!
//! ```text
//! E|U||V| = E|U| E|V| + (4 pi)^{-1} int int M(s) M(t) (R(s,t) - 1) (s t)^{-3/2} ds dt
//! ```
//!
//! with `M` the Laplace transform of `|U|^2` and `R` the correlation factor.
//! After `s = e^x, t = e^y` the integrand is analytic in a strip of half-width
//! `pi`, so the trapezoid rule converges geometrically.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::kernel::Approx;
use crate::sum::pairwise_sum;
use crate::{Error, Result};

/// Largest `|a|, |b|, |c|` where the truncated series is used.
pub const SERIES_RADIUS: f64 = 0.5;

/// Value with a standard error (Monte Carlo) or error estimate (quadrature).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

/// Six-term expansion
/// `pi/2 + (pi/2) a + (pi/4) b^2 - (pi/16) a^2 - (3 pi/8) a b^2 + (3 pi/64) b^4`.
pub fn norm_product_series(a: f64, b: f64, c: f64) -> Approx {
    use std::f64::consts::PI;
    let b2 = b * b;
    let value = PI / 2.0 + PI / 2.0 * a + PI / 4.0 * b2 - PI / 16.0 * a * a
        - 3.0 * PI / 8.0 * a * b2
        + 3.0 * PI / 64.0 * b2 * b2;
    let in_regime = a.abs() <= SERIES_RADIUS && b.abs() <= SERIES_RADIUS && c.abs() <= SERIES_RADIUS;
    Approx { value, in_regime }
}

/// Second moments of the two independent pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairMoments {
    /// Variance of `U1` and `V1`.
    pub s2: f64,
    /// Covariance of `U1` and `V1`.
    pub rho: f64,
    /// Covariance of `U2` and `V2` (unit variances).
    pub kappa: f64,
}

impl PairMoments {
    /// Moments from the scaled Kac-Rice entries.
    pub fn from_abc(a: f64, b: f64, c: f64) -> Self {
        Self { s2: 1.0 + 2.0 * a, rho: 2.0 * b, kappa: 2.0 * c }
    }

    /// Smallest eigenvalue of the 4x4 covariance.
    pub fn min_eigenvalue(&self) -> f64 {
        (self.s2 - self.rho.abs()).min(1.0 - self.kappa.abs())
    }

    /// Project onto the PSD cone by clamping, for inputs that violate it
    /// only through roundoff.
    pub fn clamped(&self) -> Self {
        let s2 = self.s2.max(0.0);
        Self {
            s2,
            rho: self.rho.clamp(-s2, s2),
            kappa: self.kappa.clamp(-1.0, 1.0),
        }
    }
}

/// Complete elliptic integral of the second kind `E(m)`, `0 <= m <= 1`, by
/// the arithmetic-geometric mean.
pub fn ellip_e(m: f64) -> f64 {
    use std::f64::consts::FRAC_PI_2;
    if m >= 1.0 {
        return 1.0;
    }
    let mut a = 1.0_f64;
    let mut b = (1.0 - m).sqrt();
    let mut sum = 0.5 * m;
    let mut pow = 0.5;
    for _ in 0..40 {
        let c = 0.5 * (a - b);
        pow *= 2.0;
        sum += pow * c * c;
        let an = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = an;
        if c.abs() < 1e-17 * a {
            break;
        }
    }
    FRAC_PI_2 / a * (1.0 - sum)
}

/// `E|U|` for `U = (U1, U2)` independent with variances `s2` and 1.
pub fn mean_norm(s2: f64) -> f64 {
    use std::f64::consts::PI;
    let (hi, lo) = if s2 >= 1.0 { (s2, 1.0) } else { (1.0, s2.max(0.0)) };
    (2.0 / PI).sqrt() * hi.sqrt() * ellip_e(1.0 - lo / hi)
}

/// Per-node quantities for one pair along the `x = log s` grid.
struct PairNodes {
    /// `2 s / (1 + 2 s v)`
    f: Vec<f64>,
    /// `1 / (1 + 2 s v)`
    e: Vec<f64>,
}

impl PairNodes {
    fn new(s: &[f64], var: f64) -> Self {
        let e: Vec<f64> = s.iter().map(|&s| 1.0 / (1.0 + 2.0 * s * var)).collect();
        let f = s.iter().zip(&e).map(|(&s, &e)| 2.0 * s * e).collect();
        Self { f, e }
    }
}

/// `sum_{i,j} G(x_i, x_j)` over the nodes with index step `stride`.
fn trapezoid_sum(m: &PairMoments, s: &[f64], w: &[f64], stride: usize) -> f64 {
    let p1 = PairNodes::new(s, m.s2);
    let p2 = PairNodes::new(s, 1.0);
    let rho2 = m.rho * m.rho;
    let kap2 = m.kappa * m.kappa;
    // 1 - q expanded so that no cancellation occurs:
    // (1 + 2 s v)(1 + 2 t v) - 4 s t r^2 = 1 + 2 v (s + t) + 4 s t (v - |r|)(v + |r|)
    let det1 = (m.s2 - m.rho.abs()) * (m.s2 + m.rho.abs());
    let det2 = (1.0 - m.kappa.abs()) * (1.0 + m.kappa.abs());
    let idx: Vec<usize> = (0..s.len()).step_by(stride).collect();
    let rows: Vec<f64> = idx
        .iter()
        .enumerate()
        .map(|(ii, &i)| {
            let mut row = 0.0;
            for &j in &idx[ii..] {
                let q1 = rho2 * p1.f[i] * p1.f[j];
                let q2 = kap2 * p2.f[i] * p2.f[j];
                let st = s[i] * s[j];
                let sum_st = s[i] + s[j];
                let om1 = p1.e[i] * p1.e[j] * (1.0 + 2.0 * m.s2 * sum_st + 4.0 * st * det1);
                let om2 = p2.e[i] * p2.e[j] * (1.0 + 2.0 * sum_st + 4.0 * st * det2);
                let p = om1 * om2;
                let one_minus_p = if p > 0.5 { q1 + q2 - q1 * q2 } else { 1.0 - p };
                let sp = p.sqrt();
                let r_minus_1 = one_minus_p / (sp * (1.0 + sp));
                let g = w[i] * w[j] * r_minus_1;
                row += if i == j { g } else { 2.0 * g };
            }
            row
        })
        .collect();
    pairwise_sum(&rows)
}

/// Relative rounding floor on quadrature error estimates.
const ROUNDING: f64 = 1e-15;

/// Deterministic `E|U||V|` by trapezoid quadrature in log coordinates.
///
/// The returned `stderr` is the difference to the half-resolution rule, a
/// conservative bound since the error decays like `exp(-2 pi^2 / step)`.
pub fn norm_product_quadrature(m: &PairMoments) -> Result<Estimate> {
    if m.min_eigenvalue() < -1e-10 {
        return Err(Error::NotPsd { min_eig: m.min_eigenvalue() });
    }
    let m = m.clamped();
    let a1 = mean_norm(m.s2);
    let base = a1 * a1;
    if m.rho == 0.0 && m.kappa == 0.0 {
        // Closed form; only rounding in the elliptic integral remains.
        return Ok(Estimate { value: base, stderr: ROUNDING * base });
    }
    // Beyond s ~ 1/min-eigenvalue the integrand decays like s^{-3/2}.
    let stretch = |v: f64| if v < 1.0 { -v.max(1e-18).ln() } else { 0.0 };
    let x_hi = 30.0 + stretch(m.s2) + stretch(m.s2 - m.rho.abs()) + stretch(1.0 - m.kappa.abs());
    let x_lo = -72.0;
    let mut step = 0.5;
    let mut prev: Option<f64> = None;
    loop {
        let count = ((x_hi - x_lo) / step).ceil() as usize + 1;
        let xs: Vec<f64> = (0..count).map(|k| x_lo + k as f64 * step).collect();
        let s: Vec<f64> = xs.iter().map(|x| x.exp()).collect();
        // M(s) s^{-1/2} for the U pair, shared by both arguments.
        let w: Vec<f64> = s
            .iter()
            .map(|&s| ((1.0 + 2.0 * s * m.s2) * (1.0 + 2.0 * s)).sqrt().recip() / s.sqrt())
            .collect();
        let fine = trapezoid_sum(&m, &s, &w, 1) * step * step;
        let coarse = match prev {
            Some(c) => c,
            None => trapezoid_sum(&m, &s, &w, 2) * 4.0 * step * step,
        };
        let scale = 1.0 / (4.0 * std::f64::consts::PI);
        let diff = (fine - coarse).abs() * scale;
        let value = base + fine * scale;
        if diff <= 1e-9 * value.abs().max(1.0) || step < 0.05 {
            return Ok(Estimate { value, stderr: diff.max(ROUNDING * value.abs()) });
        }
        prev = Some(fine);
        step *= 0.5;
    }
}

/// Monte Carlo `E|U||V|` with `samples` draws.
///
/// Samples are split into fixed-size chunks, each drawing from its own
/// ChaCha stream, and the chunk sums are reduced pairwise in chunk order, so
/// the result depends only on `(m, samples, seed)`.
pub fn norm_product_mc(m: &PairMoments, samples: u64, seed: u64) -> Result<Estimate> {
    const CHUNK: u64 = 1 << 16;
    if m.min_eigenvalue() < -1e-10 {
        return Err(Error::NotPsd { min_eig: m.min_eigenvalue() });
    }
    if samples < 2 {
        return Err(Error::Invalid("need at least 2 samples".into()));
    }
    let m = m.clamped();
    // Each pair as (p z1 + q z2, p z1 - q z2) with p^2 + q^2 = var, p^2 - q^2 = cov.
    let (u_s, u_d) = (((m.s2 + m.rho) * 0.5).sqrt(), ((m.s2 - m.rho) * 0.5).sqrt());
    let (v_s, v_d) = (((1.0 + m.kappa) * 0.5).sqrt(), ((1.0 - m.kappa) * 0.5).sqrt());
    let chunks = samples.div_ceil(CHUNK);
    let parts: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k);
            let len = CHUNK.min(samples - k * CHUNK);
            let (mut s1, mut s2) = (0.0, 0.0);
            for _ in 0..len {
                let z: [f64; 4] = [
                    StandardNormal.sample(&mut rng),
                    StandardNormal.sample(&mut rng),
                    StandardNormal.sample(&mut rng),
                    StandardNormal.sample(&mut rng),
                ];
                let (u1, v1) = (u_s * z[0] + u_d * z[1], u_s * z[0] - u_d * z[1]);
                let (u2, v2) = (v_s * z[2] + v_d * z[3], v_s * z[2] - v_d * z[3]);
                let x = ((u1 * u1 + u2 * u2) * (v1 * v1 + v2 * v2)).sqrt();
                s1 += x;
                s2 += x * x;
            }
            (s1, s2)
        })
        .collect();
    let n = samples as f64;
    let sum1 = pairwise_sum(&parts.iter().map(|p| p.0).collect::<Vec<_>>());
    let sum2 = pairwise_sum(&parts.iter().map(|p| p.1).collect::<Vec<_>>());
    let mean = sum1 / n;
    let var = ((sum2 - n * mean * mean) / (n - 1.0)).max(0.0);
    Ok(Estimate { value: mean, stderr: (var / n).sqrt() })
}
