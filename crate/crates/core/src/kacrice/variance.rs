//! Second moment and variance of the nodal length by quadrature of the
//! Kac-Rice two-point function.
//!
//! With `theta = psi / (alpha m)`,
//!
//! ```text
//! Var L = 8 pi^2 D / (m alpha) int_0^{m alpha pi} (K(psi) - 1/4) sin(psi / (m alpha)) dpsi
//! ```
//!
//! split at `psi = C` into a near-diagonal part `I1` and a bulk part `I2`.
//! A single-degree window is symmetric under `theta -> pi - theta`, and the
//! integral folds onto the hemisphere with twice the prefactor. Windows mixing
//! even and odd degrees are not symmetric, so they are integrated over the
//! whole range.

use std::f64::consts::{FRAC_PI_4, PI};
use std::time::Instant;

use serde::Serialize;

use super::{conditional_covariance, k_oracle_from, k_series_from, Estimate, KMethod};
use crate::kernel::BandWindow;
use crate::quad::{integrate_panels, QuadResult};
use crate::Result;

/// Angular range of the integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    /// `[0, pi/2]` with the folded prefactor `16 pi^2 D / (m alpha)`.
    Hemisphere,
    /// `[0, pi]` with prefactor `8 pi^2 D / (m alpha)`.
    FullSphere,
    /// Hemisphere for single-degree windows, full sphere otherwise.
    Auto,
}

/// Settings for [`variance_integral`] and [`second_moment`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VarianceOptions {
    /// Split point between `I1` and `I2`, in `psi`.
    pub split_c: f64,
    /// Absolute tolerance on the returned variance.
    pub tol: f64,
    /// Lower cutoff; `[0, eps]` enters only the error bound.
    pub eps: f64,
    pub domain: Domain,
    pub method: KMethod,
    /// Largest panel width in `psi`.
    pub panel_width: f64,
}

impl Default for VarianceOptions {
    fn default() -> Self {
        Self {
            split_c: 1.0,
            tol: 1e-6,
            eps: 1e-6,
            domain: Domain::Auto,
            method: KMethod::Oracle,
            panel_width: FRAC_PI_4,
        }
    }
}

/// Result of [`variance_integral`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VarianceReport {
    pub n: u32,
    pub g: f64,
    pub l0: u32,
    pub domain: Domain,
    pub split_c: f64,
    pub tol: f64,
    /// Contribution of `[eps, C]`.
    pub i1: f64,
    /// `i1` divided by the prefactor `8 pi^2 D / (m alpha)` (or twice it on
    /// the hemisphere).
    pub i1_normalized: f64,
    /// Contribution of `[C, end]`.
    pub i2: f64,
    pub total: f64,
    /// `log(n) / 32`
    pub leading: f64,
    pub quad_error: f64,
    pub evals: usize,
    pub wall_time: f64,
}

struct Setup {
    upper: f64,
    prefactor: f64,
    domain: Domain,
}

fn setup(win: &BandWindow, domain: Domain) -> Setup {
    let resolved = match domain {
        Domain::Auto if win.is_single() => Domain::Hemisphere,
        Domain::Auto => Domain::FullSphere,
        d => d,
    };
    let ma = win.m() * win.alpha();
    let base = 8.0 * PI * PI * win.d() / ma;
    match resolved {
        Domain::Hemisphere => Setup { upper: 0.5 * PI * ma, prefactor: 2.0 * base, domain: resolved },
        _ => Setup { upper: PI * ma, prefactor: base, domain: resolved },
    }
}

fn k_value(win: &BandWindow, psi: f64, method: KMethod) -> Result<f64> {
    let cov = conditional_covariance(win, win.theta_of(psi))?;
    Ok(match method {
        KMethod::Series => k_series_from(&cov),
        KMethod::Oracle => k_oracle_from(&cov)?.value,
    })
}

/// Variance of the nodal length, split into `I1 + I2`.
pub fn variance_integral(win: &BandWindow, opts: &VarianceOptions) -> Result<VarianceReport> {
    let start = Instant::now();
    let st = setup(win, opts.domain);
    let ma = win.m() * win.alpha();
    let f = |psi: f64| -> Result<f64> { Ok((k_value(win, psi, opts.method)? - 0.25) * (psi / ma).sin()) };
    let split = opts.split_c.clamp(opts.eps, st.upper);
    let raw_tol = opts.tol / st.prefactor;
    let near = integrate_panels(&f, opts.eps, split, opts.panel_width, 0.5 * raw_tol)?;
    let bulk = integrate_panels(&f, split, st.upper, opts.panel_width, 0.5 * raw_tol)?;
    // The integrand is bounded near 0, so [0, eps] is at most eps * |f(eps)|.
    let head = opts.eps * f(opts.eps)?.abs();
    let i1 = st.prefactor * near.value;
    let i2 = st.prefactor * bulk.value;
    Ok(VarianceReport {
        n: win.n(),
        g: win.g(),
        l0: win.l0(),
        domain: st.domain,
        split_c: split,
        tol: opts.tol,
        i1,
        i1_normalized: near.value,
        i2,
        total: i1 + i2,
        leading: f64::from(win.n()).ln() / 32.0,
        quad_error: st.prefactor * (near.error + bulk.error + head),
        evals: near.evals + bulk.evals + 1,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

/// `E[L^2] = 8 pi^2 int K~(theta) sin(theta) dtheta`, integrating the raw
/// two-point density directly (no subtraction of the squared mean).
pub fn second_moment(win: &BandWindow, opts: &VarianceOptions) -> Result<Estimate> {
    let st = setup(win, opts.domain);
    let ma = win.m() * win.alpha();
    let f = |psi: f64| -> Result<f64> { Ok(k_value(win, psi, opts.method)? * (psi / ma).sin()) };
    let raw_tol = opts.tol / st.prefactor;
    let r: QuadResult = integrate_panels(&f, opts.eps, st.upper, opts.panel_width, raw_tol)?;
    let head = opts.eps * f(opts.eps)?.abs();
    Ok(Estimate { value: st.prefactor * r.value, stderr: st.prefactor * (r.error + head) })
}

/// Mean nodal length `E[L] = 2 pi sqrt(D)`.
pub fn mean_length(win: &BandWindow) -> f64 {
    2.0 * PI * win.d().sqrt()
}
