//! Zero-level extraction by marching triangles.

use super::mesh::{arc, normalize, Mesh};
use crate::sum::pairwise_sum;
use crate::{Error, Result};

/// Values exactly zero are nudged to this before sign tests.
pub const ZERO_NUDGE: f64 = 1e-14;

fn crossing(p: [f64; 3], q: [f64; 3], fp: f64, fq: f64) -> [f64; 3] {
    let t = fp / (fp - fq);
    normalize([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1]), p[2] + t * (q[2] - p[2])])
}

/// Nodal segment length inside one triangle.
fn triangle_length(v: [[f64; 3]; 3], f: [f64; 3]) -> f64 {
    let mut pts = [[0.0; 3]; 2];
    let mut k = 0;
    for (i, j) in [(0, 1), (1, 2), (2, 0)] {
        if (f[i] > 0.0) != (f[j] > 0.0) {
            pts[k] = crossing(v[i], v[j], f[i], f[j]);
            k += 1;
        }
    }
    // With no zeros, a sign change crosses exactly two edges or none.
    if k == 2 {
        arc(pts[0], pts[1])
    } else {
        0.0
    }
}

/// Total length of the zero set of the piecewise-linear interpolant of
/// `values` on `mesh`, measured along great circles.
pub fn nodal_length(values: &[f64], mesh: &Mesh) -> Result<f64> {
    let verts = mesh.vertices();
    if values.len() != verts.len() {
        return Err(Error::Length { expected: verts.len(), got: values.len() });
    }
    if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::Invalid(format!("non-finite field value {bad}")));
    }
    let fix = |x: f64| if x == 0.0 { ZERO_NUDGE } else { x };
    let parts: Vec<f64> = mesh
        .triangles()
        .iter()
        .map(|&[a, b, c]| {
            let (a, b, c) = (a as usize, b as usize, c as usize);
            triangle_length([verts[a], verts[b], verts[c]], [fix(values[a]), fix(values[b]), fix(values[c])])
        })
        .collect();
    Ok(pairwise_sum(&parts))
}
