//! Covariance kernel `Gamma(theta) = C^2 sum_{l=L0}^{n} (2l+1)/(4 pi) P_l(cos theta)`
//! of the band-limited field, its angular derivatives, and the window constants.
//!
//! Three evaluation routes are provided: the direct sum over `l`
//! ([`gamma_exact`]), the two-term Christoffel-Darboux form in Jacobi
//! polynomials ([`gamma_cd`]), and large-angle asymptotics in the rescaled
//! angle `psi = (1-g) m theta` ([`gamma_asym`] and friends).
//!
//! Derivatives are taken with respect to `theta` unless the name says `dx`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use serde::Serialize;

use crate::specfun::{jacobi_pair, LegendreSeq, OneMinusLegendreSeq};
use crate::{Error, Result};

/// Frequency window `[L0, n]` and the constants derived from it.
///
/// `csq` and `d` come from the realized integer sums, so the unit-variance
/// normalization holds exactly even when `(1-g) n` is not an integer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BandWindow {
    n: u32,
    g: f64,
    l0: u32,
    /// `sum_{l=L0}^{n} (2l+1)`
    count: u64,
    csq: f64,
    d: f64,
    h: f64,
}

impl BandWindow {
    /// Window `[ceil((1-g) n), n]`; needs `n >= 4` and at least two
    /// frequencies.
    pub fn new(n: u32, g: f64) -> Result<Self> {
        let fail = |reason: &str| Error::Window { n, g, reason: reason.to_string() };
        if n < 4 {
            return Err(fail("n must be at least 4"));
        }
        if !(g > 0.0 && g < 1.0) {
            return Err(fail("g must lie in (0, 1)"));
        }
        // Guard against (1-g)n landing a hair above an integer through roundoff.
        let raw = (1.0 - g) * f64::from(n);
        let l0 = ((raw - 1e-9 * f64::from(n)).ceil() as u32).max(1);
        if l0 >= n {
            return Err(fail("window holds fewer than 2 frequencies"));
        }
        Ok(Self::build(n, g, l0))
    }

    /// Degenerate window holding the single degree `l` (the classical
    /// random spherical harmonic). Here `g = 0` and `alpha = 1`.
    pub fn single(l: u32) -> Result<Self> {
        if l == 0 {
            return Err(Error::Window { n: 0, g: 0.0, reason: "degree must be >= 1".into() });
        }
        Ok(Self::build(l, 0.0, l))
    }

    fn build(n: u32, g: f64, l0: u32) -> Self {
        let (mut count, mut s1) = (0u128, 0u128);
        for l in u128::from(l0)..=u128::from(n) {
            count += 2 * l + 1;
            s1 += l * (l + 1) * (2 * l + 1);
        }
        let nf = f64::from(n);
        let h = if g > 0.0 { g / (1.0 - g) * (1.0 + 0.5 / nf) + 1.0 / nf } else { 1.0 / nf };
        Self {
            n,
            g,
            l0,
            count: count as u64,
            csq: 4.0 * PI / count as f64,
            d: s1 as f64 / (2.0 * count as f64),
            h,
        }
    }

    /// Top frequency `n`.
    pub fn n(&self) -> u32 {
        self.n
    }

    /// Window width `g`.
    pub fn g(&self) -> f64 {
        self.g
    }

    /// Lowest frequency `L0`.
    pub fn l0(&self) -> u32 {
        self.l0
    }

    /// `alpha = 1 - g`.
    pub fn alpha(&self) -> f64 {
        1.0 - self.g
    }

    /// `m = n + 1/2`.
    pub fn m(&self) -> f64 {
        f64::from(self.n) + 0.5
    }

    /// Normalization `C^2` with `C^2 sum (2l+1)/(4 pi) = 1`.
    pub fn csq(&self) -> f64 {
        self.csq
    }

    /// Per-component gradient variance `D = C^2 sum (2l+1)/(4 pi) l(l+1)/2`.
    pub fn d(&self) -> f64 {
        self.d
    }

    /// Phase constant `h = (g/(1-g))(1 + 1/(2n)) + 1/n`.
    pub fn h(&self) -> f64 {
        self.h
    }

    /// Number of real coefficients, `sum_{l=L0}^{n} (2l+1)`.
    pub fn dimension(&self) -> usize {
        self.count as usize
    }

    /// True for the one-degree window of [`BandWindow::single`].
    pub fn is_single(&self) -> bool {
        self.l0 == self.n
    }

    /// Weight `(2l+1)/sum(2l+1)` of degree `l` in the kernel.
    pub fn weight(&self, l: u32) -> f64 {
        if l < self.l0 || l > self.n {
            0.0
        } else {
            f64::from(2 * l + 1) / self.count as f64
        }
    }

    /// Angle for a rescaled angle: `theta = psi / (alpha m)`.
    pub fn theta_of(&self, psi: f64) -> f64 {
        psi / (self.alpha() * self.m())
    }

    /// Rescaled angle for a geodesic angle.
    pub fn psi_of(&self, theta: f64) -> f64 {
        theta * self.alpha() * self.m()
    }

    /// Upper end `(pi/2) m alpha` of the hemisphere in `psi`.
    pub fn psi_hemisphere(&self) -> f64 {
        FRAC_PI_2 * self.m() * self.alpha()
    }
}

/// Which evaluation route produced a [`KernelValues`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelMethod {
    ExactSum,
    CdForm,
    Asymptotic,
}

/// Kernel value and derivatives at one angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelValues {
    pub theta: f64,
    pub gamma: f64,
    /// `d Gamma / d theta`
    pub dgamma: f64,
    /// `d^2 Gamma / d theta^2`
    pub ddgamma: f64,
    /// `d Gamma / dx` at `x = cos theta`, i.e. `C^2 sum (2l+1)/(4 pi) P_l'(x)`.
    pub dgamma_dx: f64,
    /// `1 - Gamma`, accurate near `theta = 0`.
    pub one_minus_gamma: f64,
    pub method: KernelMethod,
}

impl KernelValues {
    /// `1 - Gamma^2` without cancellation near `theta = 0`.
    pub fn one_minus_gamma_sq(&self) -> f64 {
        self.one_minus_gamma * (1.0 + self.gamma)
    }

    fn from_dx(theta: f64, gamma: f64, f1: f64, f2: f64, omg: f64, method: KernelMethod) -> Self {
        let (s, c) = theta.sin_cos();
        Self {
            theta,
            gamma,
            dgamma: -s * f1,
            ddgamma: s * s * f2 - c * f1,
            dgamma_dx: f1,
            one_minus_gamma: omg,
            method,
        }
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if !(0.0..=PI).contains(&theta) {
        return Err(Error::Domain { what: "kernel", value: theta, domain: "[0, pi]" });
    }
    Ok(())
}

/// `1 - Gamma(theta)` by the compensated recurrence for `1 - P_l`.
fn one_minus_gamma(win: &BandWindow, theta: f64) -> f64 {
    let t = 2.0 * (0.5 * theta).sin().powi(2);
    let mut acc = 0.0;
    for (l, u) in OneMinusLegendreSeq::new(t).enumerate().take(win.n as usize + 1) {
        if l as u32 >= win.l0 {
            acc += f64::from(2 * l as u32 + 1) * u;
        }
    }
    acc / win.count as f64
}

/// Kernel by direct summation over the window.
pub fn gamma_exact(win: &BandWindow, theta: f64) -> Result<KernelValues> {
    check_theta(theta)?;
    let (mut g0, mut g1, mut g2) = (0.0, 0.0, 0.0);
    for term in LegendreSeq::new(theta.cos()).skip(win.l0 as usize).take((win.n - win.l0 + 1) as usize) {
        let w = f64::from(2 * term.l + 1);
        g0 += w * term.p;
        g1 += w * term.dp;
        g2 += w * term.ddp;
    }
    let k = win.count as f64;
    Ok(KernelValues::from_dx(
        theta,
        g0 / k,
        g1 / k,
        g2 / k,
        one_minus_gamma(win, theta),
        KernelMethod::ExactSum,
    ))
}

/// Kernel through the Christoffel-Darboux form
/// `Gamma = C^2 [ (n+1) P_n^{(1,0)} - L0 P_{L0-1}^{(1,0)} ] / (4 pi)`,
/// with derivatives from `d/dx P_k^{(a,b)} = (k+a+b+1)/2 P_{k-1}^{(a+1,b+1)}`.
pub fn gamma_cd(win: &BandWindow, theta: f64) -> Result<KernelValues> {
    check_theta(theta)?;
    let x = theta.cos();
    let n = i64::from(win.n);
    let l0 = i64::from(win.l0);
    let (nf, lf) = (f64::from(win.n), f64::from(win.l0));
    let (p_lo, p_hi) = jacobi_pair(1.0, 0.0, x, l0 - 1, n);
    let (q_lo, q_hi) = jacobi_pair(2.0, 1.0, x, l0 - 2, n - 1);
    let (r_lo, r_hi) = jacobi_pair(3.0, 2.0, x, l0 - 3, n - 2);
    let k = win.count as f64;
    let f0 = ((nf + 1.0) * p_hi - lf * p_lo) / k;
    let f1 = ((nf + 1.0) * (nf + 2.0) * q_hi - lf * (lf + 1.0) * q_lo) / (2.0 * k);
    let f2 = ((nf + 1.0) * (nf + 2.0) * (nf + 3.0) * r_hi - lf * (lf + 1.0) * (lf + 2.0) * r_lo)
        / (4.0 * k);
    Ok(KernelValues::from_dx(theta, f0, f1, f2, one_minus_gamma(win, theta), KernelMethod::CdForm))
}

/// Value of an asymptotic expansion together with a flag telling whether the
/// argument was inside the regime where the expansion is meant to be used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Approx {
    pub value: f64,
    pub in_regime: bool,
}

/// Lower end of the large-`psi` regime for the kernel expansions.
pub const ASYM_PSI_MIN: f64 = 1.0;

/// Exact phases at `theta = psi/(alpha m)`.
///
/// The expansions are usually written with phases such as
/// `h psi/2 + psi - psi/(2n) + O(psi/n^2)`. These are the Taylor expansions of
/// `(n+1+L0) theta / 2`, `L0 theta` and so on, which we evaluate directly.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Phases {
    /// `(n + 1 + L0) theta`, expanding to `h psi + 2 psi + ...`
    pub sum: f64,
    /// `L0 theta`, expanding to `psi - psi/(2n) + ...`
    pub lo: f64,
}

impl Phases {
    pub(crate) fn new(win: &BandWindow, psi: f64) -> Self {
        let theta = win.theta_of(psi);
        Self {
            sum: f64::from(win.n + 1 + win.l0) * theta,
            lo: f64::from(win.l0) * theta,
        }
    }
}

fn regime(win: &BandWindow, psi: f64) -> bool {
    psi > ASYM_PSI_MIN && psi < win.psi_hemisphere()
}

/// Large-`psi` main terms of `Gamma`:
/// `sqrt(2/(pi psi)) { sin(S/2 + pi/4) + cos(L - 3pi/4)/(2 psi) }`.
pub fn gamma_asym(win: &BandWindow, psi: f64) -> Approx {
    let ph = Phases::new(win, psi);
    let value = (2.0 / (PI * psi)).sqrt()
        * ((0.5 * ph.sum + FRAC_PI_4).sin() + (ph.lo - 3.0 * FRAC_PI_4).cos() / (2.0 * psi));
    Approx { value, in_regime: regime(win, psi) }
}

/// Large-`psi` main terms of `Gamma^2`.
pub fn gamma_sq_asym(win: &BandWindow, psi: f64) -> Approx {
    let ph = Phases::new(win, psi);
    let (g, h) = (win.g, win.h);
    let cross = g / (psi * h) * (0.5 * ph.sum + FRAC_PI_4).sin() * (ph.lo - 3.0 * FRAC_PI_4).cos();
    let value = 2.0 / (PI * psi) * (0.5 + 0.5 * ph.sum.sin() + cross);
    Approx { value, in_regime: regime(win, psi) }
}

/// Large-`psi` main terms of `(d Gamma/d theta)^2`.
pub fn gamma_d1sq_asym(win: &BandWindow, psi: f64) -> Approx {
    let ph = Phases::new(win, psi);
    let (g, h) = (win.g, win.h);
    let nf = f64::from(win.n);
    let carrier = (0.5 * ph.sum - FRAC_PI_4).sin() * (ph.lo - 5.0 * FRAC_PI_4).cos();
    let value = 2.0 * nf * nf / (PI * psi)
        * (0.5 - 0.5 * ph.sum.sin() + 3.0 * g / (psi * h) * carrier
            - 3.0 * g * g / (4.0 * psi * h) * carrier);
    Approx { value, in_regime: regime(win, psi) }
}

/// Large-`psi` main terms of `d^2 Gamma / d theta^2`.
pub fn gamma_d2_asym(win: &BandWindow, psi: f64) -> Approx {
    let ph = Phases::new(win, psi);
    let (g, h) = (win.g, win.h);
    let nf = f64::from(win.n);
    let half = 0.5 * ph.sum;
    let value = (2.0 / (PI * psi)).sqrt() * nf * nf * (h / g)
        * (-(half + FRAC_PI_4).sin() + 5.0 * g / (2.0 * h * psi) * (ph.lo - 7.0 * FRAC_PI_4).cos()
            - (half - FRAC_PI_4).sin() / psi);
    Approx { value, in_regime: regime(win, psi) && g > 0.0 }
}
