//! Monte Carlo ground truth: sample the band-limited field by real
//! spherical-harmonic synthesis, extract its zero set on a geodesic mesh and
//! aggregate nodal-length statistics.
//!
//! Coefficients are i.i.d. `N(0, C^2)` in the real orthonormal basis
//!
//! ```text
//! Y_l0 = N_l0 P_l(cos t),  Y_lm = sqrt2 N_lm P_l^m cos(m phi),  Y_l,-m = sqrt2 N_lm P_l^m sin(m phi)
//! ```
//!
//! so that `E T(x)^2 = C^2 sum (2l+1)/(4 pi) = 1` and `E T(x)T(y) = Gamma(theta)`.

pub mod mesh;
pub mod nodal;

use std::f64::consts::PI;
use std::io::{self, Write};

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::kernel::BandWindow;
use crate::sum::pairwise_sum;
use crate::{Error, Result};

pub use mesh::{build_mesh, build_mesh_with, min_level, Mesh, POINTS_PER_WAVELENGTH};
pub use nodal::nodal_length;

/// Tolerance on `|x| - 1` for evaluation points.
pub const UNIT_TOL: f64 = 1e-12;

/// Bootstrap resamples behind [`NodalStats::stderr_var`].
pub const BOOTSTRAP_RESAMPLES: usize = 200;

/// Basis tables larger than this many entries are not cached.
const TABLE_LIMIT: usize = 1 << 24;

/// One realization of the field: real coefficients for `l in [L0, n]`,
/// `m in [-l, l]`, stored degree by degree with `m` ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSample {
    window: BandWindow,
    coeffs: Vec<f64>,
    seed: u64,
}

impl FieldSample {
    /// Sample with explicit coefficients; `seed` is recorded as 0.
    pub fn from_coeffs(window: BandWindow, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != window.dimension() {
            return Err(Error::Length { expected: window.dimension(), got: coeffs.len() });
        }
        Ok(Self { window, coeffs, seed: 0 })
    }

    pub fn window(&self) -> &BandWindow {
        &self.window
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Position of `(l, m)` in [`FieldSample::coeffs`].
    pub fn index(&self, l: u32, m: i32) -> Option<usize> {
        coeff_index(&self.window, l, m)
    }
}

fn coeff_index(win: &BandWindow, l: u32, m: i32) -> Option<usize> {
    if l < win.l0() || l > win.n() || m.unsigned_abs() > l {
        return None;
    }
    let (l, l0) = (l as usize, win.l0() as usize);
    Some(l * l - l0 * l0 + (l as isize + m as isize) as usize)
}

/// Draw a field; deterministic in `seed`.
pub fn sample_field(win: &BandWindow, seed: u64) -> FieldSample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = win.csq().sqrt();
    let coeffs = (0..win.dimension())
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            c * z
        })
        .collect();
    FieldSample { window: *win, coeffs, seed }
}

/// Write every basis function of the window at unit vector `x` into `out`
/// (same layout as the coefficients).
fn basis_into(win: &BandWindow, x: [f64; 3], out: &mut [f64]) {
    out.fill(0.0);
    let (l0, n) = (win.l0(), win.n());
    let z = x[2].clamp(-1.0, 1.0);
    let s = x[0].hypot(x[1]);
    let (cphi, sphi) = if s > 0.0 { (x[0] / s, x[1] / s) } else { (1.0, 0.0) };
    let base = |l: u32| (l * l - l0 * l0 + l) as usize;
    let sqrt2 = 2f64.sqrt();

    let mut pmm = 1.0 / (4.0 * PI).sqrt();
    let (mut cm, mut sm) = (1.0, 0.0);
    for m in 0..=n {
        if m > 0 {
            let mf = f64::from(m);
            pmm *= ((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * s;
            (cm, sm) = (cm * cphi - sm * sphi, sm * cphi + cm * sphi);
            // Higher orders are smaller still (or exactly zero at the poles).
            if pmm.abs() < 1e-280 {
                break;
            }
        }
        let mf = f64::from(m);
        let (mut p0, mut p1) = (0.0, pmm);
        let mut a_prev = f64::INFINITY;
        for l in m..=n {
            if l > m {
                let lf = f64::from(l);
                let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
                let p2 = a * (z * p1 - p0 / a_prev);
                (p0, p1, a_prev) = (p1, p2, a);
            }
            if l >= l0 {
                let b = base(l);
                if m == 0 {
                    out[b] = p1;
                } else {
                    let mi = m as usize;
                    out[b + mi] = sqrt2 * p1 * cm;
                    out[b - mi] = sqrt2 * p1 * sm;
                }
            }
        }
    }
}

fn check_points(points: &[[f64; 3]]) -> Result<()> {
    for (index, p) in points.iter().enumerate() {
        let norm = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
        if !((norm - 1.0).abs() <= UNIT_TOL) {
            return Err(Error::NotUnit { index, norm });
        }
    }
    Ok(())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Field values at unit vectors.
pub fn evaluate_field(sample: &FieldSample, points: &[[f64; 3]]) -> Result<Vec<f64>> {
    check_points(points)?;
    let k = sample.window.dimension();
    Ok(points
        .par_iter()
        .map_init(
            || vec![0.0; k],
            |buf, &x| {
                basis_into(&sample.window, x, buf);
                dot(buf, &sample.coeffs)
            },
        )
        .collect())
}

/// Basis functions tabulated on a fixed point set, reused across samples.
struct BasisTable {
    k: usize,
    rows: Vec<f64>,
}

impl BasisTable {
    fn new(win: &BandWindow, points: &[[f64; 3]]) -> Self {
        let k = win.dimension();
        let mut rows = vec![0.0; k * points.len()];
        rows.par_chunks_mut(k).zip(points.par_iter()).for_each(|(row, &x)| basis_into(win, x, row));
        Self { k, rows }
    }

    fn apply(&self, coeffs: &[f64]) -> Vec<f64> {
        self.rows.chunks(self.k).map(|row| dot(row, coeffs)).collect()
    }
}

/// Field synthesis on a fixed point set, tabulating the basis when it fits.
pub(crate) struct Synth<'a> {
    points: &'a [[f64; 3]],
    table: Option<BasisTable>,
}

impl<'a> Synth<'a> {
    pub(crate) fn new(win: &BandWindow, points: &'a [[f64; 3]]) -> Self {
        let table = (win.dimension() * points.len() <= TABLE_LIMIT).then(|| BasisTable::new(win, points));
        Self { points, table }
    }

    pub(crate) fn values(&self, sample: &FieldSample) -> Result<Vec<f64>> {
        match &self.table {
            Some(t) => Ok(t.apply(&sample.coeffs)),
            None => evaluate_field(sample, self.points),
        }
    }
}

/// Nodal length of one sample on `mesh`.
pub fn sample_nodal_length(sample: &FieldSample, mesh: &Mesh) -> Result<f64> {
    let vals = evaluate_field(sample, mesh.vertices())?;
    nodal_length(&vals, mesh)
}

/// Aggregated Monte Carlo statistics of the nodal length.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodalStats {
    pub n_samples: usize,
    pub mean_length: f64,
    /// Unbiased sample variance.
    pub var_length: f64,
    pub stderr_mean: f64,
    /// Bootstrap standard error of `var_length`.
    pub stderr_var: f64,
    /// Vertex count of the mesh.
    pub mesh_resolution: usize,
    pub discretization_note: String,
}

/// Sample mean and unbiased variance, both pairwise-summed.
pub(crate) fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = pairwise_sum(xs) / n;
    let sq: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    (mean, pairwise_sum(&sq) / (n - 1.0))
}

impl NodalStats {
    /// Statistics of per-sample lengths; `seed` drives the bootstrap.
    pub fn from_lengths(lengths: &[f64], mesh: &Mesh, seed: u64) -> Result<Self> {
        let n = lengths.len();
        if n < 2 {
            return Err(Error::Invalid(format!("need at least 2 samples, got {n}")));
        }
        let (mean, var) = mean_var(lengths);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(u64::MAX);
        let pick = Uniform::new(0, n);
        let mut buf = vec![0.0; n];
        let boots: Vec<f64> = (0..BOOTSTRAP_RESAMPLES)
            .map(|_| {
                for b in buf.iter_mut() {
                    *b = lengths[pick.sample(&mut rng)];
                }
                mean_var(&buf).1
            })
            .collect();
        let (_, boot_var) = mean_var(&boots);
        let edge = mesh.max_edge();
        Ok(Self {
            n_samples: n,
            mean_length: mean,
            var_length: var.max(0.0),
            stderr_mean: (var / n as f64).sqrt(),
            stderr_var: boot_var.sqrt(),
            mesh_resolution: mesh.vertices().len(),
            discretization_note: format!(
                "linear interpolation along edges of icosahedral level {} (max edge {:.3e} rad); length bias O(edge^2)",
                mesh.level(),
                edge
            ),
        })
    }
}

/// Nodal lengths of `n_samples` fields; sample `i` uses seed `seed + i`.
/// Returns `(seed, length)` pairs in sample order.
pub fn mc_nodal_lengths(win: &BandWindow, n_samples: usize, mesh: &Mesh, seed: u64) -> Result<Vec<(u64, f64)>> {
    let synth = Synth::new(win, mesh.vertices());
    (0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let s = seed.wrapping_add(i);
            let vals = synth.values(&sample_field(win, s))?;
            Ok((s, nodal_length(&vals, mesh)?))
        })
        .collect()
}

/// Monte Carlo nodal statistics on the level-`level` mesh.
pub fn mc_nodal_stats(win: &BandWindow, n_samples: usize, level: u32, seed: u64) -> Result<NodalStats> {
    let mesh = build_mesh(win, level)?;
    let lengths = mc_nodal_lengths(win, n_samples, &mesh, seed)?;
    let xs: Vec<f64> = lengths.iter().map(|p| p.1).collect();
    NodalStats::from_lengths(&xs, &mesh, seed)
}

/// Per-sample dump, one `seed,length` line each.
pub fn write_lengths_csv<W: Write>(mut w: W, lengths: &[(u64, f64)]) -> io::Result<()> {
    writeln!(w, "seed,length")?;
    for (s, l) in lengths {
        writeln!(w, "{s},{l:.17e}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::gamma_exact;
    use crate::specfun::legendre_p;

    #[test]
    fn index_layout() {
        let win = BandWindow::new(10, 0.2).unwrap();
        let s = sample_field(&win, 1);
        assert_eq!(s.coeffs().len(), 17 + 19 + 21);
        assert_eq!(s.index(8, -8), Some(0));
        assert_eq!(s.index(8, 8), Some(16));
        assert_eq!(s.index(9, -9), Some(17));
        assert_eq!(s.index(10, 10), Some(56));
        assert_eq!(s.index(7, 0), None);
    }

    #[test]
    fn deterministic() {
        let win = BandWindow::new(10, 0.2).unwrap();
        assert_eq!(sample_field(&win, 42), sample_field(&win, 42));
        assert_ne!(sample_field(&win, 42).coeffs, sample_field(&win, 43).coeffs);
    }

    #[test]
    fn basis_addition_theorem() {
        // sum_m Y_lm(x) Y_lm(y) = (2l+1)/(4 pi) P_l(x.y)
        let win = BandWindow::new(40, 0.1).unwrap();
        let x = mesh::normalize([0.3, -0.2, 0.9]);
        let y = mesh::normalize([-0.7, 0.1, 0.2]);
        let (mut bx, mut by) = (vec![0.0; win.dimension()], vec![0.0; win.dimension()]);
        basis_into(&win, x, &mut bx);
        basis_into(&win, y, &mut by);
        let c = mesh::dot(x, y);
        for l in win.l0()..=win.n() {
            let r = coeff_index(&win, l, -(l as i32)).unwrap()..=coeff_index(&win, l, l as i32).unwrap();
            let s: f64 = r.clone().map(|i| bx[i] * by[i]).sum();
            let expect = f64::from(2 * l + 1) / (4.0 * PI) * legendre_p(l, c).unwrap();
            assert!((s - expect).abs() < 1e-12, "l={l}: {s} vs {expect}");
            let sxx: f64 = r.map(|i| bx[i] * bx[i]).sum();
            assert!((sxx - f64::from(2 * l + 1) / (4.0 * PI)).abs() < 1e-12);
        }
    }

    #[test]
    fn covariance_matches_kernel_exactly() {
        // E T(x)T(y) = C^2 sum_k Y_k(x) Y_k(y) = Gamma(theta)
        let win = BandWindow::new(30, 0.2).unwrap();
        let x = mesh::normalize([1.0, 2.0, 3.0]);
        let y = mesh::normalize([-1.0, 0.5, 1.0]);
        let (mut bx, mut by) = (vec![0.0; win.dimension()], vec![0.0; win.dimension()]);
        basis_into(&win, x, &mut bx);
        basis_into(&win, y, &mut by);
        let cov = win.csq() * dot(&bx, &by);
        let theta = mesh::arc(x, y);
        assert!((cov - gamma_exact(&win, theta).unwrap().gamma).abs() < 1e-12);
    }

    #[test]
    fn pole_value() {
        let win = BandWindow::single(5).unwrap();
        let mut c = vec![0.0; win.dimension()];
        c[coeff_index(&win, 5, 0).unwrap()] = 1.0;
        let s = FieldSample::from_coeffs(win, c).unwrap();
        let v = evaluate_field(&s, &[[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]]).unwrap();
        let expect = (11.0 / (4.0 * PI)).sqrt();
        assert!((v[0] - expect).abs() < 1e-13 && (v[1] + expect).abs() < 1e-13);
    }

    #[test]
    fn rejects_non_unit() {
        let win = BandWindow::new(10, 0.2).unwrap();
        let s = sample_field(&win, 0);
        match evaluate_field(&s, &[[0.0, 0.0, 1.0], [0.0, 0.0, 1.0 + 1e-9]]) {
            Err(Error::NotUnit { index, .. }) => assert_eq!(index, 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn table_matches_direct() {
        let win = BandWindow::new(12, 0.3).unwrap();
        let mesh = Mesh::icosahedral(2);
        let s = sample_field(&win, 9);
        let t = BasisTable::new(&win, mesh.vertices()).apply(s.coeffs());
        let d = evaluate_field(&s, mesh.vertices()).unwrap();
        for (a, b) in t.iter().zip(&d) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn stats_deterministic() {
        let win = BandWindow::new(6, 0.4).unwrap();
        let level = min_level(6, POINTS_PER_WAVELENGTH);
        let a = mc_nodal_stats(&win, 8, level, 3).unwrap();
        let b = mc_nodal_stats(&win, 8, level, 3).unwrap();
        assert_eq!(a, b);
        assert!(a.var_length >= 0.0);
        assert!((a.stderr_mean - (a.var_length / 8.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn csv_dump() {
        let mut out = Vec::new();
        write_lengths_csv(&mut out, &[(7, 1.5), (8, 2.0)]).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "seed,length");
        assert!(lines[1].starts_with("7,1.5"));
        assert_eq!(lines.len(), 3);
    }
}
