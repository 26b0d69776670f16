//! Wiener-Ito chaos diagnostics: the exact variance of the second chaotic
//! component of the nodal length, and Hermite sample functionals.
//!
//! With `W = sum (2l+1)`, `S1 = sum l(l+1)(2l+1)` and `S2 = sum l^2(l+1)^2(2l+1)`
//! over the window,
//!
//! ```text
//! Var L[2] = C^4 / (32 D) * (S2 - C^2 S1^2 / (4 pi)) = pi^2 (W S2 - S1^2) / (W^2 S1)
//! ```
//!
//! The bracket cancels through leading order, so it is formed in exact
//! integers before the single conversion to floating point.

use std::f64::consts::PI;

use num_bigint::BigUint;
use rayon::prelude::*;
use serde::Serialize;

use crate::field::{sample_field, FieldSample, Mesh, Synth};
use crate::kacrice::Estimate;
use crate::kernel::{gamma_exact, BandWindow};
use crate::quad::integrate_panels;
use crate::specfun::hermite_h;
use crate::sum::pairwise_sum;
use crate::{Error, Result};

/// Window power sums `(W, S1, S2)`, accumulated term by term.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PowerSums {
    pub w: u128,
    pub s1: u128,
    pub s2: u128,
}

/// Direct summation over `l in [lo, hi]`. Exact up to `hi` around `4e5`.
pub fn power_sums(lo: u32, hi: u32) -> PowerSums {
    let (mut w, mut s1, mut s2) = (0u128, 0u128, 0u128);
    for l in u128::from(lo)..=u128::from(hi) {
        let lam = l * (l + 1);
        w += 2 * l + 1;
        s1 += lam * (2 * l + 1);
        s2 += lam * lam * (2 * l + 1);
    }
    PowerSums { w, s1, s2 }
}

/// `sum_{l=1}^{n} l(l+1)(2l+1) = n(n+1)^2(n+2)/2`
pub fn s1_closed(n: u64) -> BigUint {
    let n = BigUint::from(n);
    let one = BigUint::from(1u32);
    let two = BigUint::from(2u32);
    let a = &n + &one;
    &n * &a * &a * (&n + &two) / two
}

/// `sum_{l=1}^{n} l^2(l+1)^2(2l+1) = n^2(n+1)^2(n+2)^2/3`
pub fn s2_closed(n: u64) -> BigUint {
    let n = BigUint::from(n);
    let p = &n * (&n + 1u32) * (&n + 2u32);
    &p * &p / BigUint::from(3u32)
}

/// Exact finite-`n` variance of the second chaotic component.
pub fn chaos2_variance_exact(win: &BandWindow) -> f64 {
    let ps = power_sums(win.l0(), win.n());
    let (w, s1, s2) = (BigUint::from(ps.w), BigUint::from(ps.s1), BigUint::from(ps.s2));
    let num = &w * &s2 - &s1 * &s1;
    let den = &w * &w * &s1;
    PI * PI * ratio(&num, &den)
}

/// `a / b` for big integers, correct to double precision.
fn ratio(a: &BigUint, b: &BigUint) -> f64 {
    // Shift both to at most 64 significant bits so the conversion is exact-ish.
    let shift = |x: &BigUint| x.bits().saturating_sub(64);
    let (sa, sb) = (shift(a), shift(b));
    let fa = u64::try_from(a >> sa).expect("fits") as f64;
    let fb = u64::try_from(b >> sb).expect("fits") as f64;
    fa / fb * 2f64.powi(sa as i32 - sb as i32)
}

/// `(2 pi^2 / 3) g (1 + 2g - 2/(n g))`; zero for `g = 0`.
pub fn chaos2_variance_asym(win: &BandWindow) -> f64 {
    let g = win.g();
    if g == 0.0 {
        return 0.0;
    }
    let n = f64::from(win.n());
    2.0 * PI * PI / 3.0 * g * (1.0 + 2.0 * g - 2.0 / (n * g))
}

/// `int H_q(T(x)) dx` by vertex quadrature with the given cell areas.
fn hermite_integral(values: &[f64], areas: &[f64], q: u32) -> f64 {
    let terms: Vec<f64> = values.iter().zip(areas).map(|(&t, &a)| a * hermite_h(q, t)).collect();
    pairwise_sum(&terms)
}

/// `int H_2(T(x)) dx` on `mesh` with Voronoi cell weights.
pub fn sample_h2(sample: &FieldSample, mesh: &Mesh) -> Result<f64> {
    sample_hq(sample, mesh, 2)
}

/// Sample trispectrum `int H_4(T(x)) dx` on `mesh`.
pub fn sample_h4(sample: &FieldSample, mesh: &Mesh) -> Result<f64> {
    sample_hq(sample, mesh, 4)
}

fn sample_hq(sample: &FieldSample, mesh: &Mesh, q: u32) -> Result<f64> {
    let vals = crate::field::evaluate_field(sample, mesh.vertices())?;
    Ok(hermite_integral(&vals, &mesh.vertex_areas(), q))
}

/// Monte Carlo mean and variance of `int H_q(T)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HermiteMc {
    pub q: u32,
    pub samples: usize,
    pub mean: Estimate,
    /// `E X^2`, which is the variance since `E X = 0` exactly.
    pub variance: Estimate,
}

/// Draw `samples` fields (seeds `seed + i`) and integrate `H_q` of each.
pub fn mc_hermite(win: &BandWindow, mesh: &Mesh, q: u32, samples: usize, seed: u64) -> Result<HermiteMc> {
    if samples < 2 {
        return Err(Error::Invalid(format!("need at least 2 samples, got {samples}")));
    }
    let synth = Synth::new(win, mesh.vertices());
    let areas = mesh.vertex_areas();
    let xs: Vec<f64> = (0..samples as u64)
        .into_par_iter()
        .map(|i| Ok(hermite_integral(&synth.values(&sample_field(win, seed.wrapping_add(i)))?, &areas, q)))
        .collect::<Result<_>>()?;
    let est = |v: &[f64]| {
        let (m, var) = crate::field::mean_var(v);
        Estimate { value: m, stderr: (var / v.len() as f64).sqrt() }
    };
    let sq: Vec<f64> = xs.iter().map(|x| x * x).collect();
    Ok(HermiteMc { q, samples, mean: est(&xs), variance: est(&sq) })
}

/// `Var int H_q(T) = q! int int Gamma^q = q! 8 pi^2 int_0^pi Gamma(t)^q sin t dt`,
/// by adaptive quadrature of the exact kernel.
pub fn hermite_variance_quadrature(win: &BandWindow, q: u32, tol: f64) -> Result<Estimate> {
    let fact: f64 = (1..=q).map(f64::from).product();
    let pre = fact * 8.0 * PI * PI;
    let f = |t: f64| -> Result<f64> { Ok(gamma_exact(win, t)?.gamma.powi(q as i32) * t.sin()) };
    // Panels a few oscillations wide.
    let width = (4.0 / f64::from(win.n())).min(PI / 4.0);
    let r = integrate_panels(&f, 0.0, PI, width, tol / pre)?;
    Ok(Estimate { value: pre * r.value, stderr: pre * r.error })
}

/// Second-chaos summary for a window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChaosReport {
    pub n: u32,
    pub g: f64,
    pub var2_exact: f64,
    pub var2_asym: f64,
    /// `var2_exact / var2_asym`
    pub ratio: f64,
    pub h2_mc: Option<HermiteMc>,
    pub h4_mc: Option<HermiteMc>,
}

impl ChaosReport {
    pub fn new(win: &BandWindow) -> Self {
        let var2_exact = chaos2_variance_exact(win);
        let var2_asym = chaos2_variance_asym(win);
        Self {
            n: win.n(),
            g: win.g(),
            var2_exact,
            var2_asym,
            ratio: var2_exact / var2_asym,
            h2_mc: None,
            h4_mc: None,
        }
    }

    /// Add Monte Carlo estimates of `Var int H_2` and `Var int H_4`.
    pub fn with_mc(mut self, win: &BandWindow, mesh: &Mesh, samples: usize, seed: u64) -> Result<Self> {
        self.h2_mc = Some(mc_hermite(win, mesh, 2, samples, seed)?);
        self.h4_mc = Some(mc_hermite(win, mesh, 4, samples, seed)?);
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms_small() {
        let ps = power_sums(1, 10);
        assert_eq!(ps.s1, 7260);
        assert_eq!(ps.s2, 580800);
        assert_eq!(s1_closed(10), BigUint::from(7260u32));
        assert_eq!(s2_closed(10), BigUint::from(580800u32));
    }

    #[test]
    fn single_degree_vanishes() {
        let win = BandWindow::single(37).unwrap();
        assert_eq!(chaos2_variance_exact(&win), 0.0);
        assert_eq!(chaos2_variance_asym(&win), 0.0);
    }

    #[test]
    fn matches_unsimplified_bracket() {
        // C^4/(32 D) * (S2 - C^2 S1^2 / (4 pi)) in floating point, for small n
        // where the cancellation is mild.
        let win = BandWindow::new(12, 0.4).unwrap();
        let ps = power_sums(win.l0(), win.n());
        let c2 = win.csq();
        let lit = c2 * c2 / (32.0 * win.d()) * (ps.s2 as f64 - c2 * (ps.s1 as f64).powi(2) / (4.0 * PI));
        let exact = chaos2_variance_exact(&win);
        assert!((lit - exact).abs() < 1e-9 * exact, "{lit} vs {exact}");
    }

    #[test]
    fn variance_of_quadratic_form() {
        // L[2] = sqrt(D)/4 sum_l (l(l+1)/(2D) - 1) (|a_l|^2 - E|a_l|^2), with
        // |a_l|^2 = C^2 chi^2_{2l+1}, so Var = D/16 sum (..)^2 2(2l+1) C^4.
        let win = BandWindow::new(30, 0.3).unwrap();
        let (c4, d) = (win.csq() * win.csq(), win.d());
        let direct: f64 = (win.l0()..=win.n())
            .map(|l| {
                let lf = f64::from(l);
                let k = lf * (lf + 1.0) / (2.0 * d) - 1.0;
                d / 16.0 * k * k * 2.0 * (2.0 * lf + 1.0) * c4
            })
            .sum();
        let exact = chaos2_variance_exact(&win);
        assert!((direct - exact).abs() < 1e-12 * exact.max(1e-300), "{direct} vs {exact}");
    }

    #[test]
    fn ratio_is_exact() {
        let a = BigUint::from(10u32).pow(40) + 7u32;
        let b = BigUint::from(3u32) * BigUint::from(10u32).pow(38);
        assert!((ratio(&a, &b) - 100.0 / 3.0).abs() < 1e-13);
    }

    #[test]
    fn h2_variance_closed_form() {
        // Var int H2 = 2 int int Gamma^2 = 32 pi^2 / W
        let win = BandWindow::new(15, 0.3).unwrap();
        let est = hermite_variance_quadrature(&win, 2, 1e-10).unwrap();
        let exact = 32.0 * PI * PI / win.dimension() as f64;
        assert!((est.value - exact).abs() < 1e-8, "{} vs {exact}", est.value);
    }
}
