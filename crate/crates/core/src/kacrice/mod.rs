//! Kac-Rice two-point correlation of the nodal length.
//!
//! Conditioning the gradients at two points `x, y` at angle `theta` on
//! `T(x) = T(y) = 0` leaves a Gaussian 4-vector `(U, V)` whose covariance,
//! after dividing by `2D`, is
//!
//! ```text
//!         | 1+2a   0    2b    0 |
//! Delta = |  0     1     0   2c |
//!         | 2b     0   1+2a   0 |
//!         |  0    2c     0    1 |
//! ```
//!
//! with `a = -G'^2 / (2D (1-G^2))`, `b = (-G'' - G G'^2/(1-G^2)) / (2D)` and
//! `c = (dG/dx) / (2D)`. The two-point function is
//! `K(psi) = E[|U||V|] / (2 pi sqrt(1 - G^2))`, and `D K` is the raw
//! Kac-Rice density of pairs of nodal points.

mod normprod;
mod variance;

use std::f64::consts::{FRAC_PI_4, PI};

use nalgebra::{Matrix4, SymmetricEigen};
use serde::Serialize;

use crate::kernel::{gamma_exact, Approx, BandWindow, KernelValues, Phases};
use crate::{Error, Result};

pub use normprod::{
    ellip_e, mean_norm, norm_product_mc, norm_product_quadrature, norm_product_series, Estimate,
    PairMoments, SERIES_RADIUS,
};
pub use variance::{
    mean_length, second_moment, variance_integral, Domain, VarianceOptions, VarianceReport,
};

/// Conditioning below this value of `1 - Gamma^2` is refused.
pub const MIN_ONE_MINUS_GAMMA_SQ: f64 = 1e-14;

/// Scaled conditional covariance of the gradients at two points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditionalCovariance {
    pub theta: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub delta: [[f64; 4]; 4],
    /// All eigenvalues of `delta` are `>= -1e-10`.
    pub valid: bool,
    /// Kernel at `theta`.
    pub gamma: f64,
    /// `1 - Gamma^2`, compensated near the origin.
    pub one_minus_gamma_sq: f64,
}

impl ConditionalCovariance {
    /// Assemble from scaled entries; `gamma` and `1 - gamma^2` are carried
    /// along for the two-point function.
    pub fn from_abc(theta: f64, a: f64, b: f64, c: f64, gamma: f64, one_minus_gamma_sq: f64) -> Self {
        let d = 1.0 + 2.0 * a;
        let delta = [
            [d, 0.0, 2.0 * b, 0.0],
            [0.0, 1.0, 0.0, 2.0 * c],
            [2.0 * b, 0.0, d, 0.0],
            [0.0, 2.0 * c, 0.0, 1.0],
        ];
        let valid = min_eigenvalue(&delta) >= -1e-10;
        Self { theta, a, b, c, delta, valid, gamma, one_minus_gamma_sq }
    }

    /// Moments of the two independent gradient pairs.
    pub fn moments(&self) -> PairMoments {
        PairMoments::from_abc(self.a, self.b, self.c)
    }
}

/// Smallest eigenvalue of a symmetric 4x4 matrix.
pub fn min_eigenvalue(m: &[[f64; 4]; 4]) -> f64 {
    let mat = Matrix4::from_fn(|i, j| m[i][j]);
    SymmetricEigen::new(mat).eigenvalues.min()
}

/// Conditional covariance at angle `theta` from precomputed kernel values.
pub fn conditional_covariance_from(win: &BandWindow, kv: &KernelValues) -> Result<ConditionalCovariance> {
    let omg2 = kv.one_minus_gamma_sq();
    if !(omg2 > MIN_ONE_MINUS_GAMMA_SQ) {
        return Err(Error::Degenerate { theta: kv.theta, one_minus_sq: omg2 });
    }
    let g1sq = kv.dgamma * kv.dgamma;
    let a_t = -g1sq / omg2;
    let b_t = -kv.ddgamma - kv.gamma * g1sq / omg2;
    let c_t = kv.dgamma_dx;
    let two_d = 2.0 * win.d();
    Ok(ConditionalCovariance::from_abc(kv.theta, a_t / two_d, b_t / two_d, c_t / two_d, kv.gamma, omg2))
}

/// Conditional covariance at angle `theta in (0, pi]`.
pub fn conditional_covariance(win: &BandWindow, theta: f64) -> Result<ConditionalCovariance> {
    if !(theta > 0.0 && theta <= PI) {
        return Err(Error::Domain { what: "conditional_covariance", value: theta, domain: "(0, pi]" });
    }
    conditional_covariance_from(win, &gamma_exact(win, theta)?)
}

/// `b~` from the explicit Legendre sums
/// `C^2 sum w_l [P_l'(x) cos t - P_l''(x) sin^2 t] - G (C^2 sum w_l P_l'(x) sin t)^2 / (1 - G^2)`,
/// kept as an independent assembly of the same quantity.
pub fn b_tilde_sum_form(win: &BandWindow, theta: f64) -> Result<f64> {
    let x = theta.cos();
    let (s, c) = theta.sin_cos();
    let (mut g0, mut g1, mut g2) = (0.0, 0.0, 0.0);
    for l in win.l0()..=win.n() {
        let w = win.weight(l);
        g0 += w * crate::specfun::legendre_p(l, x)?;
        g1 += w * crate::specfun::legendre_d(l, x, 1)?;
        g2 += w * crate::specfun::legendre_d(l, x, 2)?;
    }
    let grad = g1 * s;
    Ok(g1 * c - g2 * s * s - g0 * grad * grad / (1.0 - g0 * g0))
}

/// Evaluation route for the two-point function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KMethod {
    /// Truncated expansion in `a, b, Gamma`.
    Series,
    /// Exact denominator and deterministic quadrature for `E|U||V|`.
    Oracle,
}

fn check_psi(win: &BandWindow, psi: f64) -> Result<f64> {
    let theta = win.theta_of(psi);
    if !(psi > 0.0 && theta <= PI) {
        return Err(Error::Domain { what: "k_twopoint", value: psi, domain: "(0, pi m alpha]" });
    }
    Ok(theta)
}

/// Truncated expansion of `K`:
/// `(1/4){1 + a + b^2/2 + G^2/2 - a^2/8 - 3ab^2/4 + 3b^4/32 + G^2 a/2 + G^2 b^2/4 + 3 G^4/8}`.
pub fn k_series_from(cov: &ConditionalCovariance) -> f64 {
    let (a, b, g2) = (cov.a, cov.b, cov.gamma * cov.gamma);
    let b2 = b * b;
    0.25 * (1.0 + a + 0.5 * b2 + 0.5 * g2 - a * a / 8.0 - 0.75 * a * b2 + 3.0 / 32.0 * b2 * b2
        + 0.5 * g2 * a
        + 0.25 * g2 * b2
        + 0.375 * g2 * g2)
}

/// Exact `K` with the deterministic norm-product quadrature; returns the
/// value and the propagated error estimate.
pub fn k_oracle_from(cov: &ConditionalCovariance) -> Result<Estimate> {
    let e = norm_product_quadrature(&cov.moments())?;
    let denom = 2.0 * PI * cov.one_minus_gamma_sq.sqrt();
    Ok(Estimate { value: e.value / denom, stderr: e.stderr / denom })
}

/// Two-point function `K(psi)` at `theta = psi / (alpha m)`.
pub fn k_twopoint(win: &BandWindow, psi: f64, method: KMethod) -> Result<f64> {
    let theta = check_psi(win, psi)?;
    let cov = conditional_covariance(win, theta)?;
    match method {
        KMethod::Series => Ok(k_series_from(&cov)),
        KMethod::Oracle => Ok(k_oracle_from(&cov)?.value),
    }
}

/// Raw Kac-Rice density `K~(theta) = D K(psi(theta))`.
pub fn k_raw(win: &BandWindow, theta: f64, method: KMethod) -> Result<f64> {
    Ok(win.d() * k_twopoint(win, win.psi_of(theta), method)?)
}

/// Monte Carlo `K(psi)`, for cross-checking the quadrature oracle.
pub fn k_oracle_mc(win: &BandWindow, psi: f64, samples: u64, seed: u64) -> Result<Estimate> {
    let theta = check_psi(win, psi)?;
    let cov = conditional_covariance(win, theta)?;
    let e = norm_product_mc(&cov.moments(), samples, seed)?;
    let denom = 2.0 * PI * cov.one_minus_gamma_sq.sqrt();
    Ok(Estimate { value: e.value / denom, stderr: e.stderr / denom })
}

/// Oracle for `E|U||V|` at a given covariance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleMethod {
    Quadrature,
    MonteCarlo { samples: u64, seed: u64 },
}

/// `E|U||V|` for a valid conditional covariance.
pub fn norm_product_oracle(cov: &ConditionalCovariance, method: OracleMethod) -> Result<Estimate> {
    if !cov.valid {
        return Err(Error::NotPsd { min_eig: min_eigenvalue(&cov.delta) });
    }
    match method {
        OracleMethod::Quadrature => norm_product_quadrature(&cov.moments()),
        OracleMethod::MonteCarlo { samples, seed } => norm_product_mc(&cov.moments(), samples, seed),
    }
}

/// Lower end of the regime for [`k_asymptotic`].
pub const K_ASYM_PSI_MIN: f64 = 1.0;

/// Large-`psi` expansion of `K`:
///
/// ```text
/// 1/4 + 1/(256 pi^2 psi^2) + sin(S)/(2 pi psi) - 75 cos(2S)/(256 pi^2 psi^2)
///     + 27 sin(S)/(64 pi^2 psi^2) - cos(S)/(4 pi psi^2)
///     + sin(S/2) cos(L)/(4 pi psi^2) - 3 sin(S/2 - pi/4) cos(L - 5pi/4)/(2 pi psi^2)
/// ```
///
/// where `S = (n + 1 + L0) theta` and `L = L0 theta`.
pub fn k_asymptotic(win: &BandWindow, psi: f64) -> Approx {
    let ph = Phases::new(win, psi);
    let (s, l) = (ph.sum, ph.lo);
    let p2 = psi * psi;
    let pi2 = PI * PI;
    let value = 0.25 + 1.0 / (256.0 * pi2 * p2) + s.sin() / (2.0 * PI * psi)
        - 75.0 / (256.0 * pi2 * p2) * (2.0 * s).cos()
        + 27.0 / (64.0 * pi2 * p2) * s.sin()
        - s.cos() / (4.0 * PI * p2)
        + (0.5 * s).sin() * l.cos() / (4.0 * PI * p2)
        - 3.0 / (2.0 * PI * p2) * (0.5 * s - FRAC_PI_4).sin() * (l - 5.0 * FRAC_PI_4).cos();
    Approx { value, in_regime: psi > K_ASYM_PSI_MIN && psi < win.psi_hemisphere() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::gamma_cd;

    fn window() -> BandWindow {
        BandWindow::new(100, 0.1).unwrap()
    }

    #[test]
    fn identity_delta_is_valid() {
        let c = ConditionalCovariance::from_abc(1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(c.delta[i][j], if i == j { 1.0 } else { 0.0 });
            }
        }
        assert!(c.valid);
    }

    #[test]
    fn degenerate_angle_refused() {
        let w = window();
        assert!(matches!(conditional_covariance(&w, 1e-12), Err(Error::Degenerate { .. })));
        assert!(conditional_covariance(&w, 0.0).is_err());
    }

    #[test]
    fn b_tilde_forms_agree() {
        let w = BandWindow::new(40, 0.3).unwrap();
        for k in 1..=20 {
            let theta = 1.5 * k as f64 / 20.0;
            let cov = conditional_covariance(&w, theta).unwrap();
            let direct = b_tilde_sum_form(&w, theta).unwrap();
            let b_t = 2.0 * w.d() * cov.b;
            assert!((b_t - direct).abs() <= 1e-9 * (1.0 + direct.abs()), "theta={theta}");
        }
    }

    #[test]
    fn a_is_negative_at_small_angles() {
        let w = window();
        for theta in [1e-4, 1e-3, 1e-2] {
            assert!(conditional_covariance(&w, theta).unwrap().a < 0.0);
        }
    }

    #[test]
    fn c_at_equator_even_window() {
        // Single degree 4: P_4'(0) = 0; degree 3: P_3'(0) = -3/2.
        let w = BandWindow::single(3).unwrap();
        let cov = conditional_covariance(&w, PI / 2.0).unwrap();
        assert!((cov.c - (-1.5) / (2.0 * w.d())).abs() < 1e-14);
        let w4 = BandWindow::single(4).unwrap();
        assert!(conditional_covariance(&w4, PI / 2.0).unwrap().c.abs() < 1e-14);
    }

    /// Recompute `Delta` from the full 6x6 Gaussian covariance of
    /// `(T(x), T(y), grad T(x), grad T(y))` with either sign of the
    /// cross block, and compare with the assembled entries.
    #[test]
    fn omega_independent_of_frame_sign() {
        use nalgebra::{Matrix2, Matrix2x4, Matrix4};
        let w = BandWindow::new(30, 0.4).unwrap();
        for theta in [0.05, 0.3, 1.0, 2.0, 2.9] {
            let kv = gamma_cd(&w, theta).unwrap();
            let cov = conditional_covariance(&w, theta).unwrap();
            let d = w.d();
            let s = kv.dgamma_dx * theta.sin();
            let a_mat = Matrix2::new(1.0, kv.gamma, kv.gamma, 1.0);
            let c_mat = Matrix4::new(
                d, 0.0, -kv.ddgamma, 0.0,
                0.0, d, 0.0, kv.dgamma_dx,
                -kv.ddgamma, 0.0, d, 0.0,
                0.0, kv.dgamma_dx, 0.0, d,
            );
            for sign in [1.0, -1.0] {
                let b_mat = Matrix2x4::new(
                    0.0, 0.0, sign * s, 0.0,
                    -sign * s, 0.0, 0.0, 0.0,
                );
                let omega = c_mat - b_mat.transpose() * a_mat.try_inverse().unwrap() * b_mat;
                for i in 0..4 {
                    for j in 0..4 {
                        let got = omega[(i, j)] / (2.0 * d);
                        let want = cov.delta[i][j] / 2.0;
                        assert!((got - want).abs() < 1e-9, "theta={theta} ({i},{j}) {got} vs {want}");
                    }
                }
            }
        }
    }

    #[test]
    fn k_oracle_positive_and_series_close_at_moderate_psi() {
        let w = window();
        for psi in [0.5, 2.0, 10.0, 40.0] {
            let k = k_twopoint(&w, psi, KMethod::Oracle).unwrap();
            assert!(k > 0.0);
        }
        let ko = k_twopoint(&w, 30.0, KMethod::Oracle).unwrap();
        let ks = k_twopoint(&w, 30.0, KMethod::Series).unwrap();
        assert!((ko - ks).abs() < 1e-3);
    }

    #[test]
    fn k_asymptotic_tends_to_quarter() {
        let w = BandWindow::new(100_000, 0.01).unwrap();
        let k = k_asymptotic(&w, 5000.0);
        assert!((k.value - 0.25).abs() < 1e-4);
        assert!(k.in_regime);
        assert!(!k_asymptotic(&w, 0.5).in_regime);
    }
}
