//! Special functions against independent closed forms and integral
//! representations.

use std::f64::consts::PI;

use bandnodal::specfun::{bessel_j, hermite_h, hilb_approx, jacobi_asymptotic, jacobi_p, legendre_d, legendre_p};
use num_bigint::{BigInt, Sign};
use proptest::prelude::*;

fn binom(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}

fn big_binom(n: u32, k: u32) -> BigInt {
    (0..k).fold(BigInt::from(1), |acc, i| acc * (n - i) / (i + 1))
}

fn big_to_f64(num: &BigInt, den: &BigInt) -> f64 {
    let f = |x: &BigInt| {
        let mag = x.magnitude();
        let shift = mag.bits().saturating_sub(60);
        let m = u64::try_from(mag >> shift).unwrap() as f64 * 2f64.powi(shift as i32);
        if x.sign() == Sign::Minus { -m } else { m }
    };
    f(num) / f(den)
}

/// `P_l(j/1024) = sum_k C(l,k) C(l+k,k) ((x-1)/2)^k`, summed exactly in integers.
fn legendre_hyp_exact(l: u32, j: i32) -> f64 {
    let t_num = BigInt::from(j - 1024);
    let t_den = BigInt::from(2048);
    let mut sum = BigInt::from(0);
    for k in 0..=l {
        sum += big_binom(l, k) * big_binom(l + k, k) * t_num.pow(k) * t_den.pow(l - k);
    }
    big_to_f64(&sum, &t_den.pow(l))
}

/// Explicit finite sum for integer parameters.
fn jacobi_sum(n: u32, a: u32, b: u32, x: f64) -> f64 {
    (0..=n)
        .map(|s| binom(n + a, n - s) * binom(n + b, s) * (0.5 * (x - 1.0)).powi(s as i32) * (0.5 * (x + 1.0)).powi((n - s) as i32))
        .sum()
}

/// `J_n(x) = (1/pi) int_0^pi cos(n t - x sin t) dt`; the trapezoid rule is
/// spectrally accurate on this periodic integrand.
fn bessel_integral(n: u32, x: f64) -> f64 {
    let m = 2000;
    let h = PI / f64::from(m);
    let f = |t: f64| (f64::from(n) * t - x * t.sin()).cos();
    let inner: f64 = (1..m).map(|k| f(f64::from(k) * h)).sum();
    (inner + 0.5 * (f(0.0) + f(PI))) * h / PI
}

fn hermite_explicit(q: u32, x: f64) -> f64 {
    let fact = |k: u32| (1..=k).map(f64::from).product::<f64>();
    (0..=q / 2)
        .map(|m| {
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            sign * fact(q) / (fact(m) * fact(q - 2 * m) * 2f64.powi(m as i32)) * x.powi((q - 2 * m) as i32)
        })
        .sum()
}

proptest! {
    #[test]
    fn legendre_matches_hypergeometric(l in 0u32..80, j in -1024i32..=1024) {
        let x = f64::from(j) / 1024.0;
        let a = legendre_p(l, x).unwrap();
        let b = legendre_hyp_exact(l, j);
        prop_assert!((a - b).abs() < 1e-13, "l={} x={}: {} vs {}", l, x, a, b);
    }

    #[test]
    fn legendre_parity(l in 0u32..200, x in -1.0f64..1.0) {
        let s = if l % 2 == 0 { 1.0 } else { -1.0 };
        let a = legendre_p(l, x).unwrap();
        let b = legendre_p(l, -x).unwrap();
        prop_assert!((a - s * b).abs() < 1e-13);
    }

    #[test]
    fn legendre_bounded(l in 0u32..2000, x in -1.0f64..1.0) {
        prop_assert!(legendre_p(l, x).unwrap().abs() <= 1.0 + 1e-12);
    }

    #[test]
    fn derivative_by_differences(l in 1u32..60, x in -0.9f64..0.9) {
        let h = 1e-5;
        let fd = (legendre_p(l, x + h).unwrap() - legendre_p(l, x - h).unwrap()) / (2.0 * h);
        let d1 = legendre_d(l, x, 1).unwrap();
        prop_assert!((fd - d1).abs() < 1e-6 * (1.0 + d1.abs()), "{} vs {}", fd, d1);
        let fd2 = (legendre_d(l, x + h, 1).unwrap() - legendre_d(l, x - h, 1).unwrap()) / (2.0 * h);
        let d2 = legendre_d(l, x, 2).unwrap();
        prop_assert!((fd2 - d2).abs() < 1e-5 * (1.0 + d2.abs()), "{} vs {}", fd2, d2);
    }

    #[test]
    fn jacobi_matches_finite_sum(n in 0u32..20, a in 0u32..4, b in 0u32..4, x in -1.0f64..1.0) {
        let v = jacobi_p(n, f64::from(a), f64::from(b), x).unwrap();
        let s = jacobi_sum(n, a, b, x);
        prop_assert!((v - s).abs() < 1e-10 * (1.0 + s.abs()), "{} vs {}", v, s);
    }

    #[test]
    fn bessel_matches_integral(order in 0u32..2, x in 0.0f64..60.0) {
        let a = bessel_j(order, x).unwrap();
        let b = bessel_integral(order, x);
        prop_assert!((a - b).abs() < 1e-10, "J{}({}) = {} vs {}", order, x, a, b);
    }

    #[test]
    fn hermite_explicit_form(q in 0u32..12, x in -4.0f64..4.0) {
        let a = hermite_h(q, x);
        let b = hermite_explicit(q, x);
        prop_assert!((a - b).abs() < 1e-9 * (1.0 + b.abs()));
    }
}

#[test]
fn jacobi_reduces_to_legendre() {
    for l in [0, 3, 17, 100] {
        for x in [-0.9, -0.2, 0.4, 0.95] {
            assert!((jacobi_p(l, 0.0, 0.0, x).unwrap() - legendre_p(l, x).unwrap()).abs() < 1e-13);
        }
    }
}

#[test]
fn hilb_tracks_legendre() {
    // Error is O(theta^{1/2} l^{-3/2}) inside, O(theta^2) near the pole.
    for l in [200u32, 1000] {
        for theta in [1e-4, 0.01, 0.1, 0.5, 1.2] {
            let p = legendre_p(l, f64::cos(theta)).unwrap();
            let h = hilb_approx(l, theta).unwrap();
            assert!((p - h).abs() < 2.0 * (theta.sqrt() * f64::from(l).powf(-1.5) + theta * theta / 100.0), "l={l} theta={theta}: {p} vs {h}");
        }
    }
}

#[test]
fn jacobi_asymptotic_interior() {
    let n = 2000;
    for (a, b) in [(1.0, 0.0), (2.0, 1.0), (3.0, 2.0)] {
        for theta in [0.3, 1.0, 2.0] {
            let exact = jacobi_p(n, a, b, f64::cos(theta)).unwrap();
            let approx = jacobi_asymptotic(n, a, b, theta).unwrap();
            let envelope = (PI * f64::from(n)).sqrt().recip() * (theta / 2.0).sin().powf(-a - 0.5) * (theta / 2.0).cos().powf(-b - 0.5);
            assert!((exact - approx).abs() < 0.01 * envelope, "({a},{b}) theta={theta}: {exact} vs {approx}");
        }
    }
}

#[test]
fn domains_enforced() {
    assert!(legendre_p(3, 1.5).is_err());
    assert!(legendre_p(3, 1.0 + 1e-13).is_ok());
    assert!(bessel_j(0, -1.0).is_err());
    assert!(bessel_j(2, 1.0).is_err());
}
