//! Cross-module invariants, small enough to run in seconds.

use std::f64::consts::PI;
use std::time::Instant;

use bandnodal::chaos::{power_sums, s1_closed, s2_closed};
use bandnodal::field::{evaluate_field, nodal_length};
use bandnodal::kacrice::{
    conditional_covariance, k_twopoint, mean_length, min_eigenvalue, norm_product_mc, norm_product_quadrature,
    second_moment, variance_integral, PairMoments, VarianceOptions,
};
use bandnodal::kernel::{gamma_cd, gamma_exact};
use bandnodal::{BandWindow, FieldSample, KMethod, Mesh};
use num_bigint::BigUint;

type Check = fn() -> Result<String, String>;

pub const CHECKS: [(&str, Check); 9] = [
    ("gamma_at_origin", gamma_at_origin),
    ("christoffel_darboux", christoffel_darboux),
    ("conditional_covariance_psd", covariance_psd),
    ("k_series_vs_oracle", series_vs_oracle),
    ("norm_product_quadrature_vs_mc", norm_product),
    ("variance_decomposition", variance_decomposition),
    ("power_sum_closed_forms", power_sum_closed_forms),
    ("field_covariance_is_gamma", field_covariance),
    ("mesh_and_nodal_length", mesh_and_nodal),
];

fn ensure(ok: bool, detail: String) -> Result<String, String> {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn err(e: bandnodal::Error) -> String {
    e.to_string()
}

fn gamma_at_origin() -> Result<String, String> {
    let mut worst: f64 = 0.0;
    for (n, g) in [(10, 0.3), (200, 0.05), (1000, 0.5)] {
        let win = BandWindow::new(n, g).map_err(err)?;
        worst = worst.max((gamma_exact(&win, 0.0).map_err(err)?.gamma - 1.0).abs());
    }
    ensure(worst < 1e-13, format!("max |Gamma(0)-1| = {worst:.2e}"))
}

fn christoffel_darboux() -> Result<String, String> {
    let mut worst: f64 = 0.0;
    for (n, g) in [(20, 0.3), (300, 0.1), (2000, 0.02)] {
        let win = BandWindow::new(n, g).map_err(err)?;
        for k in 1..=40 {
            let theta = PI * f64::from(k) / 41.0;
            let e = gamma_exact(&win, theta).map_err(err)?.gamma;
            worst = worst.max((gamma_cd(&win, theta).map_err(err)?.gamma - e).abs());
        }
    }
    ensure(worst < 1e-11, format!("max |Gamma_cd - Gamma_sum| = {worst:.2e}"))
}

fn covariance_psd() -> Result<String, String> {
    let win = BandWindow::new(120, 0.25).map_err(err)?;
    let mut lowest = f64::INFINITY;
    for k in 1..=60 {
        let cov = conditional_covariance(&win, PI * f64::from(k) / 61.0).map_err(err)?;
        lowest = lowest.min(min_eigenvalue(&cov.delta));
    }
    ensure(lowest > -1e-9, format!("min eigenvalue {lowest:.2e}"))
}

fn series_vs_oracle() -> Result<String, String> {
    let win = BandWindow::new(500, 500f64.powf(-0.5)).map_err(err)?;
    let mut worst: f64 = 0.0;
    for psi in [10.0, 20.0, 40.0] {
        let s = k_twopoint(&win, psi, KMethod::Series).map_err(err)?;
        let o = k_twopoint(&win, psi, KMethod::Oracle).map_err(err)?;
        worst = worst.max((s - o).abs() / (o - 0.25).abs().max(1e-3));
    }
    ensure(worst < 0.01, format!("max relative deviation of K - 1/4: {worst:.2e}"))
}

fn norm_product() -> Result<String, String> {
    let m = PairMoments { s2: 0.8, rho: 0.3, kappa: -0.5 };
    let q = norm_product_quadrature(&m).map_err(err)?;
    let mc = norm_product_mc(&m, 1 << 18, 5).map_err(err)?;
    let z = (q.value - mc.value).abs() / mc.stderr;
    ensure(z < 4.0, format!("quadrature {:.6} vs MC {:.6} ({z:.2} stderr)", q.value, mc.value))
}

fn variance_decomposition() -> Result<String, String> {
    let win = BandWindow::new(16, 0.3).map_err(err)?;
    let opts = VarianceOptions { tol: 1e-7, ..Default::default() };
    let v = variance_integral(&win, &opts).map_err(err)?;
    let m2 = second_moment(&win, &opts).map_err(err)?;
    let mean = mean_length(&win);
    let diff = m2.value - mean * mean - v.total;
    let budget = 1e-9 * m2.value + m2.stderr + v.quad_error;
    ensure(diff.abs() < budget, format!("E[L^2] - E[L]^2 - Var = {diff:.2e} (budget {budget:.2e})"))
}

fn power_sum_closed_forms() -> Result<String, String> {
    for n in [1u32, 7, 100, 12345] {
        let ps = power_sums(1, n);
        if s1_closed(u64::from(n)) != BigUint::from(ps.s1) || s2_closed(u64::from(n)) != BigUint::from(ps.s2) {
            return Err(format!("mismatch at n={n}"));
        }
    }
    Ok("S1, S2 closed forms exact for n in {1, 7, 100, 12345}".into())
}

/// `C^2 sum_k Y_k(x) Y_k(y)` over the real basis equals `Gamma(x . y)`.
fn field_covariance() -> Result<String, String> {
    let win = BandWindow::new(12, 0.4).map_err(err)?;
    let t = 0.7f64;
    let pts = [[0.0, 0.0, 1.0], [t.sin() * 0.6, t.sin() * 0.8, t.cos()]];
    let dim = win.dimension();
    let mut acc = [0.0; 2];
    for k in 0..dim {
        let mut c = vec![0.0; dim];
        c[k] = 1.0;
        let v = evaluate_field(&FieldSample::from_coeffs(win, c).map_err(err)?, &pts).map_err(err)?;
        acc[0] += v[0] * v[0];
        acc[1] += v[0] * v[1];
    }
    let (var, cov) = (win.csq() * acc[0], win.csq() * acc[1]);
    let gamma = gamma_exact(&win, t).map_err(err)?.gamma;
    let worst = (var - 1.0).abs().max((cov - gamma).abs());
    ensure(worst < 1e-12, format!("|var-1|, |cov-Gamma| <= {worst:.2e}"))
}

fn mesh_and_nodal() -> Result<String, String> {
    let mesh = Mesh::icosahedral(5);
    let area: f64 = mesh.vertex_areas().iter().sum();
    if (area - 4.0 * PI).abs() > 1e-10 {
        return Err(format!("vertex areas sum to {area}"));
    }
    // z has the equator as its zero set.
    let z: Vec<f64> = mesh.vertices().iter().map(|p| p[2]).collect();
    let len = nodal_length(&z, &mesh).map_err(err)?;
    ensure((len - 2.0 * PI).abs() < 2e-3, format!("areas sum to 4 pi; equator length {len:.6}"))
}

/// Runs every check, printing one line each. Returns the failure count.
pub fn run() -> usize {
    let mut failed = 0;
    for (name, check) in CHECKS {
        let t = Instant::now();
        let res = check();
        let secs = t.elapsed().as_secs_f64();
        match res {
            Ok(detail) => println!("PASS {name}: {detail} [{secs:.2}s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail} [{secs:.2}s]");
            }
        }
    }
    println!("{} / {} invariants passed", CHECKS.len() - failed, CHECKS.len());
    failed
}
