//! Geodesic meshes from recursive subdivision of the icosahedron.

use std::collections::HashMap;
use std::f64::consts::PI;

use crate::kernel::BandWindow;
use crate::{Error, Result};

/// Default number of mesh points per wavelength `2 pi / n`.
pub const POINTS_PER_WAVELENGTH: f64 = 8.0;

/// Triangulated unit sphere. Triangles are oriented counter-clockwise seen
/// from outside.
#[derive(Debug, Clone)]
pub struct Mesh {
    level: u32,
    vertices: Vec<[f64; 3]>,
    triangles: Vec<[u32; 3]>,
}

pub(crate) fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub(crate) fn normalize(a: [f64; 3]) -> [f64; 3] {
    let r = dot(a, a).sqrt();
    [a[0] / r, a[1] / r, a[2] / r]
}

/// Great-circle distance between unit vectors.
pub(crate) fn arc(a: [f64; 3], b: [f64; 3]) -> f64 {
    let c = cross(a, b);
    dot(c, c).sqrt().atan2(dot(a, b))
}

/// Signed area of the spherical triangle `abc` (Van Oosterom-Strackee).
pub(crate) fn spherical_area(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> f64 {
    let num = dot(a, cross(b, c));
    let den = 1.0 + dot(a, b) + dot(b, c) + dot(c, a);
    2.0 * num.atan2(den)
}

fn icosahedron() -> (Vec<[f64; 3]>, Vec<[u32; 3]>) {
    let p = 0.5 * (1.0 + 5f64.sqrt());
    let raw = [
        [-1.0, p, 0.0],
        [1.0, p, 0.0],
        [-1.0, -p, 0.0],
        [1.0, -p, 0.0],
        [0.0, -1.0, p],
        [0.0, 1.0, p],
        [0.0, -1.0, -p],
        [0.0, 1.0, -p],
        [p, 0.0, -1.0],
        [p, 0.0, 1.0],
        [-p, 0.0, -1.0],
        [-p, 0.0, 1.0],
    ];
    let faces = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    let vs: Vec<[f64; 3]> = raw.iter().map(|&v| normalize(v)).collect();
    let faces = faces
        .into_iter()
        .map(|[a, b, c]: [u32; 3]| {
            if spherical_area(vs[a as usize], vs[b as usize], vs[c as usize]) < 0.0 {
                [a, c, b]
            } else {
                [a, b, c]
            }
        })
        .collect();
    (vs, faces)
}

impl Mesh {
    /// Icosahedron subdivided `level` times: `10 * 4^level + 2` vertices.
    pub fn icosahedral(level: u32) -> Self {
        let (vertices, triangles) = icosahedron();
        let mut mesh = Self { level: 0, vertices, triangles };
        for _ in 0..level {
            mesh = mesh.subdivide();
        }
        mesh
    }

    /// Split every triangle into four, projecting edge midpoints onto the sphere.
    pub fn subdivide(&self) -> Self {
        let mut vertices = self.vertices.clone();
        let mut cache: HashMap<(u32, u32), u32> = HashMap::with_capacity(self.triangles.len() * 3 / 2);
        let mut mid = |i: u32, j: u32, vs: &mut Vec<[f64; 3]>| -> u32 {
            let key = (i.min(j), i.max(j));
            *cache.entry(key).or_insert_with(|| {
                let (a, b) = (vs[i as usize], vs[j as usize]);
                vs.push(normalize([a[0] + b[0], a[1] + b[1], a[2] + b[2]]));
                (vs.len() - 1) as u32
            })
        };
        let mut triangles = Vec::with_capacity(self.triangles.len() * 4);
        for &[a, b, c] in &self.triangles {
            let ab = mid(a, b, &mut vertices);
            let bc = mid(b, c, &mut vertices);
            let ca = mid(c, a, &mut vertices);
            triangles.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        Self { level: self.level + 1, vertices, triangles }
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn vertices(&self) -> &[[f64; 3]] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.triangles
    }

    /// Longest edge as a great-circle arc.
    pub fn max_edge(&self) -> f64 {
        let v = &self.vertices;
        self.triangles
            .iter()
            .flat_map(|&[a, b, c]| [(a, b), (b, c), (c, a)])
            .map(|(i, j)| arc(v[i as usize], v[j as usize]))
            .fold(0.0, f64::max)
    }

    /// Area of each vertex's spherical Voronoi cell. Each triangle hands
    /// every corner the two sub-triangles cut off by its circumcentre and the
    /// adjacent edge midpoints. The areas sum to `4 pi`.
    pub fn vertex_areas(&self) -> Vec<f64> {
        let v = &self.vertices;
        let mut areas = vec![0.0; v.len()];
        for &[ia, ib, ic] in &self.triangles {
            let (a, b, c) = (v[ia as usize], v[ib as usize], v[ic as usize]);
            let ab = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
            let ac = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
            let cc = normalize(cross(ab, ac));
            let m = |p: [f64; 3], q: [f64; 3]| normalize([p[0] + q[0], p[1] + q[1], p[2] + q[2]]);
            let (mab, mbc, mca) = (m(a, b), m(b, c), m(c, a));
            areas[ia as usize] += spherical_area(a, mab, cc) + spherical_area(a, cc, mca);
            areas[ib as usize] += spherical_area(b, mbc, cc) + spherical_area(b, cc, mab);
            areas[ic as usize] += spherical_area(c, mca, cc) + spherical_area(c, cc, mbc);
        }
        areas
    }
}

/// Largest admissible edge for degree `n`: `2 pi / (q n)`.
pub fn max_admissible_edge(n: u32, q: f64) -> f64 {
    2.0 * PI / (q * f64::from(n))
}

/// Smallest subdivision level whose edges resolve degree `n` with `q` points
/// per wavelength.
pub fn min_level(n: u32, q: f64) -> u32 {
    let target = max_admissible_edge(n, q);
    let mut mesh = Mesh::icosahedral(0);
    // Edges shrink by about half per level; skip the levels that obviously fail.
    while mesh.max_edge() * 0.5f64.powi(2) > target {
        mesh = mesh.subdivide().subdivide();
    }
    while mesh.max_edge() > target {
        mesh = mesh.subdivide();
    }
    mesh.level
}

/// Mesh at `level`, refused if too coarse for the window at
/// [`POINTS_PER_WAVELENGTH`].
pub fn build_mesh(win: &BandWindow, level: u32) -> Result<Mesh> {
    build_mesh_with(win, level, POINTS_PER_WAVELENGTH)
}

/// As [`build_mesh`] with a custom points-per-wavelength requirement.
pub fn build_mesh_with(win: &BandWindow, level: u32, q: f64) -> Result<Mesh> {
    if !(q > 0.0) {
        return Err(Error::Invalid(format!("points per wavelength must be positive, got {q}")));
    }
    let mesh = Mesh::icosahedral(level);
    if mesh.max_edge() > max_admissible_edge(win.n(), q) {
        return Err(Error::MeshResolution { level, n: win.n(), min_level: min_level(win.n(), q) });
    }
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        let m0 = Mesh::icosahedral(0);
        assert_eq!((m0.vertices().len(), m0.triangles().len()), (12, 20));
        let m3 = Mesh::icosahedral(3);
        assert_eq!(m3.vertices().len(), 642);
        assert_eq!(m3.triangles().len(), 20 * 64);
    }

    #[test]
    fn unit_vertices_and_outward_orientation() {
        let m = Mesh::icosahedral(3);
        for &v in m.vertices() {
            assert!((dot(v, v).sqrt() - 1.0).abs() < 1e-14);
        }
        for &[a, b, c] in m.triangles() {
            let (a, b, c) = (m.vertices[a as usize], m.vertices[b as usize], m.vertices[c as usize]);
            assert!(spherical_area(a, b, c) > 0.0);
        }
    }

    #[test]
    fn areas_partition_sphere() {
        for level in [0, 2, 4] {
            let areas = Mesh::icosahedral(level).vertex_areas();
            let total: f64 = areas.iter().sum();
            assert!((total - 4.0 * PI).abs() < 1e-11, "level {level}: {total}");
            assert!(areas.iter().all(|&a| a > 0.0));
        }
        // All twelve icosahedron cells are congruent.
        let a0 = Mesh::icosahedral(0).vertex_areas();
        for a in a0 {
            assert!((a - PI / 3.0).abs() < 1e-13);
        }
    }

    #[test]
    fn resolution_check() {
        let win = BandWindow::new(10, 0.2).unwrap();
        let need = min_level(10, POINTS_PER_WAVELENGTH);
        assert!(Mesh::icosahedral(need).max_edge() <= max_admissible_edge(10, 8.0));
        assert!(Mesh::icosahedral(need - 1).max_edge() > max_admissible_edge(10, 8.0));
        assert!(build_mesh(&win, need).is_ok());
        match build_mesh(&win, need - 1) {
            Err(Error::MeshResolution { min_level, .. }) => assert_eq!(min_level, need),
            other => panic!("{other:?}"),
        }
    }
}
