//! Special functions: Legendre and Jacobi polynomials, Bessel `J0`/`J1`,
//! probabilists' Hermite polynomials, and the Hilb and Szego large-degree
//! approximations.
//!
//! Everything is evaluated by forward three-term recurrence. Closed-form sums
//! appear only in tests.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::{Error, Result};

/// Slack on `|x| <= 1` absorbing roundoff from `cos(theta)`.
pub const ENDPOINT_TOL: f64 = 1e-12;

/// Switch point between the Bessel power series and the Hankel expansion.
const BESSEL_SWITCH: f64 = 12.0;

fn check_unit(what: &'static str, x: f64) -> Result<f64> {
    if !x.is_finite() || x.abs() > 1.0 + ENDPOINT_TOL {
        return Err(Error::Domain { what, value: x, domain: "[-1, 1]" });
    }
    Ok(x.clamp(-1.0, 1.0))
}

/// Legendre polynomial `P_l(x)`.
pub fn legendre_p(l: u32, x: f64) -> Result<f64> {
    let x = check_unit("legendre_p", x)?;
    Ok(LegendreSeq::new(x).nth(l as usize).map(|v| v.p).unwrap_or(1.0))
}

/// First (`order = 1`) or second (`order = 2`) derivative of `P_l` with
/// respect to `x`.
pub fn legendre_d(l: u32, x: f64, order: u32) -> Result<f64> {
    let x = check_unit("legendre_d", x)?;
    let v = LegendreSeq::new(x).nth(l as usize).expect("unbounded sequence");
    match order {
        1 => Ok(v.dp),
        2 => Ok(v.ddp),
        _ => Err(Error::Invalid(format!("legendre_d: order {order} not in {{1, 2}}"))),
    }
}

/// One step of the Legendre sequence: `P_l`, `P_l'`, `P_l''` at a fixed `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct LegendreTerm {
    pub l: u32,
    pub p: f64,
    pub dp: f64,
    pub ddp: f64,
}

/// Iterator over `(P_l, P_l', P_l'')` for `l = 0, 1, 2, ...`.
///
/// Derivatives use `P'_{l+1} = P'_{l-1} + (2l+1) P_l` (and the same rule one
/// order up), which is well conditioned at the endpoints where the usual
/// `(1-x^2)` form divides by zero.
#[derive(Debug, Clone)]
pub(crate) struct LegendreSeq {
    x: f64,
    l: u32,
    cur: [f64; 3],
    prev: [f64; 3],
}

impl LegendreSeq {
    pub(crate) fn new(x: f64) -> Self {
        Self { x, l: 0, cur: [1.0, 0.0, 0.0], prev: [0.0; 3] }
    }
}

impl Iterator for LegendreSeq {
    type Item = LegendreTerm;

    fn next(&mut self) -> Option<LegendreTerm> {
        let [p, dp, ddp] = self.cur;
        let out = LegendreTerm { l: self.l, p, dp, ddp };
        let l = f64::from(self.l);
        let w = 2.0 * l + 1.0;
        let next_p = (w * self.x * p - l * self.prev[0]) / (l + 1.0);
        let next_dp = self.prev[1] + w * p;
        let next_ddp = self.prev[2] + w * dp;
        self.prev = self.cur;
        self.cur = [next_p, next_dp, next_ddp];
        self.l += 1;
        Some(out)
    }
}

/// Iterator over `u_l = 1 - P_l(x)` without the cancellation of forming
/// `1 - P_l` directly, given `t = 1 - x` supplied accurately (for example as
/// `2 sin^2(theta/2)`).
///
/// Uses `(l+1) u_{l+1} = (2l+1) t + (2l+1) x u_l - l u_{l-1}`.
#[derive(Debug, Clone)]
pub(crate) struct OneMinusLegendreSeq {
    t: f64,
    x: f64,
    l: u32,
    cur: f64,
    prev: f64,
}

impl OneMinusLegendreSeq {
    pub(crate) fn new(t: f64) -> Self {
        Self { t, x: 1.0 - t, l: 0, cur: 0.0, prev: 0.0 }
    }
}

impl Iterator for OneMinusLegendreSeq {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        let out = self.cur;
        let l = f64::from(self.l);
        let w = 2.0 * l + 1.0;
        let next = (w * self.t + w * self.x * self.cur - l * self.prev) / (l + 1.0);
        self.prev = self.cur;
        self.cur = next;
        self.l += 1;
        Some(out)
    }
}

/// Jacobi polynomial `P_n^{(a,b)}(x)`.
pub fn jacobi_p(n: u32, a: f64, b: f64, x: f64) -> Result<f64> {
    let x = check_unit("jacobi_p", x)?;
    if a < 0.0 || b < 0.0 {
        return Err(Error::Invalid(format!("jacobi_p: parameters ({a}, {b}) must be >= 0")));
    }
    Ok(jacobi_pair(a, b, x, i64::from(n), i64::from(n)).1)
}

/// Values of `P_k^{(a,b)}(x)` at two degrees `lo <= hi` from one recurrence
/// pass. Negative degrees evaluate to zero.
pub(crate) fn jacobi_pair(a: f64, b: f64, x: f64, lo: i64, hi: i64) -> (f64, f64) {
    debug_assert!(lo <= hi);
    if hi < 0 {
        return (0.0, 0.0);
    }
    let pick = |k: i64, v: f64, slot: &mut f64| {
        if k == lo {
            *slot = v;
        }
    };
    let mut at_lo = 0.0;
    let mut p0 = 1.0;
    pick(0, p0, &mut at_lo);
    if hi == 0 {
        return (at_lo, p0);
    }
    let ab = a + b;
    let mut p1 = (a + 1.0) + 0.5 * (ab + 2.0) * (x - 1.0);
    pick(1, p1, &mut at_lo);
    for k in 2..=hi {
        let kf = k as f64;
        let s = 2.0 * kf + ab;
        let c0 = 2.0 * kf * (kf + ab) * (s - 2.0);
        let c1 = (s - 1.0) * (s * (s - 2.0) * x + a * a - b * b);
        let c2 = 2.0 * (kf + a - 1.0) * (kf + b - 1.0) * s;
        let p2 = (c1 * p1 - c2 * p0) / c0;
        p0 = p1;
        p1 = p2;
        pick(k, p1, &mut at_lo);
    }
    (at_lo, p1)
}

/// Main term `n^{-1/2} k(theta) cos(N theta + gamma)` of the Szego asymptotic
/// for `P_n^{(a,b)}(cos theta)`.
pub fn jacobi_asymptotic(n: u32, a: f64, b: f64, theta: f64) -> Result<f64> {
    if !(theta > 0.0 && theta < PI) {
        return Err(Error::Domain { what: "jacobi_asymptotic", value: theta, domain: "(0, pi)" });
    }
    if n == 0 {
        return Err(Error::Invalid("jacobi_asymptotic: n must be >= 1".into()));
    }
    let nf = f64::from(n);
    let half = 0.5 * theta;
    let k = PI.powf(-0.5) * half.sin().powf(-a - 0.5) * half.cos().powf(-b - 0.5);
    let big_n = nf + 0.5 * (a + b + 1.0);
    let gamma = -(a + 0.5) * FRAC_PI_2;
    Ok(k * (big_n * theta + gamma).cos() / nf.sqrt())
}

/// Bessel function of the first kind, `J0` (`order = 0`) or `J1` (`order = 1`).
pub fn bessel_j(order: u32, x: f64) -> Result<f64> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::Domain { what: "bessel_j", value: x, domain: "[0, inf)" });
    }
    if order > 1 {
        return Err(Error::Invalid(format!("bessel_j: order {order} not in {{0, 1}}")));
    }
    Ok(if x < BESSEL_SWITCH { bessel_series(order, x) } else { bessel_hankel(order, x) })
}

fn bessel_series(order: u32, x: f64) -> f64 {
    let q = -0.25 * x * x;
    let nu = f64::from(order);
    let mut term = if order == 0 { 1.0 } else { 0.5 * x };
    let mut sum = term;
    for k in 1..200 {
        let kf = f64::from(k);
        term *= q / (kf * (kf + nu));
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

fn bessel_hankel(order: u32, x: f64) -> f64 {
    let mu = 4.0 * f64::from(order * order);
    let chi = x - (0.5 * f64::from(order) + 0.25) * PI;
    // a_k = prod_{j=1..k} (mu - (2j-1)^2) / (k! 8^k); P takes even k, Q odd k.
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0_f64;
    let mut last = f64::INFINITY;
    for k in 1..60 {
        let kf = f64::from(k);
        let odd = 2.0 * kf - 1.0;
        let next = term * (mu - odd * odd) / (kf * 8.0 * x);
        if next.abs() >= last || next == 0.0 {
            break;
        }
        last = next.abs();
        term = next;
        match k % 4 {
            1 => q += term,
            2 => p -= term,
            3 => q -= term,
            _ => p += term,
        }
        if term.abs() < 1e-17 {
            break;
        }
    }
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

/// Hilb main term `(theta / sin theta)^{1/2} J0((l + 1/2) theta)` for
/// `P_l(cos theta)`.
pub fn hilb_approx(l: u32, theta: f64) -> Result<f64> {
    if !(0.0..=FRAC_PI_2 + 1e-12).contains(&theta) {
        return Err(Error::Domain { what: "hilb_approx", value: theta, domain: "[0, pi/2]" });
    }
    let ratio = if theta < 1e-8 { 1.0 } else { theta / theta.sin() };
    Ok(ratio.sqrt() * bessel_j(0, (f64::from(l) + 0.5) * theta)?)
}

/// Probabilists' Hermite polynomial `He_q(x)`.
pub fn hermite_h(q: u32, x: f64) -> f64 {
    let (mut h0, mut h1) = (1.0, x);
    if q == 0 {
        return h0;
    }
    for k in 1..q {
        let h2 = x * h1 - f64::from(k) * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}
