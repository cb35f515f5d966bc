//! Simplicial meshes of the unit sphere `S^{D−1}` that parametrize fiber
//! spheres, with conforming edge-midpoint refinement.

use std::collections::HashMap;

use crate::error::{LabError, Result};
use crate::geometry::{BasePoint, CoverGeometry};
use crate::phase::{norm, CotangentPoint};
use crate::sol_model::SolLevel;
use crate::starshape::StarshapedSurface;

/// A family of starting points on a fiber sphere, parametrized by unit
/// vectors `u ∈ S^{D−1}`.
pub trait StartFiber<const D: usize>: Send + Sync {
    fn base_point(&self) -> BasePoint<D>;
    fn start(&self, u: &[f64; D]) -> CotangentPoint<D>;
}

/// `Σ_{q0}` of a starshaped surface.
#[derive(Debug, Clone)]
pub struct ProfileFiber<G, const D: usize> {
    pub surface: StarshapedSurface<G, D>,
    pub q0: BasePoint<D>,
}

impl<G: CoverGeometry<D>, const D: usize> StartFiber<D> for ProfileFiber<G, D> {
    fn base_point(&self) -> BasePoint<D> {
        self.q0
    }

    fn start(&self, u: &[f64; D]) -> CotangentPoint<D> {
        self.surface.point_on_sigma(&self.q0, u)
    }
}

/// The momentum sphere of a Sol energy level over `q0`.
#[derive(Debug, Clone)]
pub struct SolLevelFiber {
    pub level: SolLevel,
    pub q0: BasePoint<3>,
}

impl StartFiber<3> for SolLevelFiber {
    fn base_point(&self) -> BasePoint<3> {
        self.q0
    }

    fn start(&self, u: &[f64; 3]) -> CotangentPoint<3> {
        self.level.point(&self.q0, u)
    }
}

/// Vertices carry their parameter `u`; each simplex lists `D` vertex indices.
#[derive(Debug, Clone, PartialEq)]
pub struct FiberMesh<const D: usize> {
    pub params: Vec<[f64; D]>,
    pub simplices: Vec<[usize; D]>,
}

fn normalized<const D: usize>(v: [f64; D]) -> [f64; D] {
    let n = norm(&v);
    v.map(|x| x / n)
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl<const D: usize> FiberMesh<D> {
    /// The coarsest mesh with at least `min_vertices` vertices: a regular
    /// polygon for `D = 2`, a subdivided icosahedron for `D = 3`.
    pub fn sphere(min_vertices: usize) -> Result<Self> {
        match D {
            2 => {
                let m = min_vertices.max(3);
                let params = (0..m)
                    .map(|i| {
                        let t = std::f64::consts::TAU * i as f64 / m as f64;
                        std::array::from_fn(|k| if k == 0 { t.cos() } else { t.sin() })
                    })
                    .collect();
                let simplices = (0..m).map(|i| std::array::from_fn(|k| (i + k) % m)).collect();
                Ok(Self { params, simplices })
            }
            3 => {
                let mut mesh = Self::icosahedron();
                while mesh.params.len() < min_vertices {
                    mesh.split_all();
                }
                Ok(mesh)
            }
            _ => Err(LabError::InvalidInput(format!("no sphere mesh for dimension {D}"))),
        }
    }

    fn icosahedron() -> Self {
        let t = (1.0 + 5.0_f64.sqrt()) / 2.0;
        let raw = [
            [-1.0, t, 0.0],
            [1.0, t, 0.0],
            [-1.0, -t, 0.0],
            [1.0, -t, 0.0],
            [0.0, -1.0, t],
            [0.0, 1.0, t],
            [0.0, -1.0, -t],
            [0.0, 1.0, -t],
            [t, 0.0, -1.0],
            [t, 0.0, 1.0],
            [-t, 0.0, -1.0],
            [-t, 0.0, 1.0],
        ];
        let faces: [[usize; 3]; 20] = [
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
        Self {
            params: raw.iter().map(|v| normalized(std::array::from_fn(|k| v[k]))).collect(),
            simplices: faces.iter().map(|f| std::array::from_fn(|k| f[k])).collect(),
        }
    }

    fn split_all(&mut self) {
        let all = self.edges();
        let marked: std::collections::HashSet<_> = all.into_iter().collect();
        self.refine_marked(&marked);
    }

    /// Unique edges as sorted index pairs, in first-seen order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut seen = std::collections::HashSet::new();
        let mut out = Vec::new();
        for s in &self.simplices {
            for i in 0..D {
                for j in i + 1..D {
                    let k = edge_key(s[i], s[j]);
                    if seen.insert(k) {
                        out.push(k);
                    }
                }
            }
        }
        out
    }

    /// Splits every marked edge at its normalized parameter midpoint, keeping
    /// the mesh conforming. Returns the indices of new vertices.
    pub fn refine_marked(&mut self, marked: &std::collections::HashSet<(usize, usize)>) -> Vec<usize> {
        let first_new = self.params.len();
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut out = Vec::with_capacity(self.simplices.len());
        let simplices = std::mem::take(&mut self.simplices);
        for s in simplices {
            let mut mid = |a: usize, b: usize, params: &mut Vec<[f64; D]>| -> Option<usize> {
                let key = edge_key(a, b);
                if !marked.contains(&key) {
                    return None;
                }
                Some(*midpoints.entry(key).or_insert_with(|| {
                    let (pa, pb) = (params[a], params[b]);
                    params.push(normalized(std::array::from_fn(|k| pa[k] + pb[k])));
                    params.len() - 1
                }))
            };
            if D == 2 {
                match mid(s[0], s[1], &mut self.params) {
                    Some(m) => {
                        out.push(std::array::from_fn(|k| [s[0], m][k]));
                        out.push(std::array::from_fn(|k| [m, s[1]][k]));
                    }
                    None => out.push(s),
                }
                continue;
            }
            let (a, b, c) = (s[0], s[1], s[D - 1]);
            let mab = mid(a, b, &mut self.params);
            let mbc = mid(b, c, &mut self.params);
            let mca = mid(c, a, &mut self.params);
            let tri = |x: usize, y: usize, z: usize| -> [usize; D] { std::array::from_fn(|k| [x, y, z][k]) };
            match (mab, mbc, mca) {
                (None, None, None) => out.push(s),
                (Some(m), None, None) => {
                    out.push(tri(a, m, c));
                    out.push(tri(m, b, c));
                }
                (None, Some(m), None) => {
                    out.push(tri(b, m, a));
                    out.push(tri(m, c, a));
                }
                (None, None, Some(m)) => {
                    out.push(tri(c, m, b));
                    out.push(tri(m, a, b));
                }
                (Some(m1), Some(m2), None) => {
                    out.push(tri(m1, b, m2));
                    out.push(tri(a, m1, m2));
                    out.push(tri(a, m2, c));
                }
                (None, Some(m1), Some(m2)) => {
                    out.push(tri(m1, c, m2));
                    out.push(tri(b, m1, m2));
                    out.push(tri(b, m2, a));
                }
                (Some(m2), None, Some(m1)) => {
                    out.push(tri(m1, a, m2));
                    out.push(tri(c, m1, m2));
                    out.push(tri(c, m2, b));
                }
                (Some(x), Some(y), Some(z)) => {
                    out.push(tri(a, x, z));
                    out.push(tri(x, b, y));
                    out.push(tri(z, y, c));
                    out.push(tri(x, y, z));
                }
            }
        }
        self.simplices = out;
        (first_new..self.params.len()).collect()
    }

    /// All simplex indices are in range and no simplex repeats a vertex.
    pub fn is_valid(&self) -> bool {
        let n = self.params.len();
        self.simplices.iter().all(|s| {
            s.iter().all(|i| *i < n) && (0..D).all(|i| (i + 1..D).all(|j| s[i] != s[j]))
        })
    }
}

/// Components of the difference `b − a` in the orthonormal frame at the
/// midpoint: `δq_i/s_i` for the base and `s_i δp_i` for the fiber.
pub fn sasaki_delta<G: CoverGeometry<D>, const D: usize>(
    geometry: &G,
    a: &CotangentPoint<D>,
    b: &CotangentPoint<D>,
) -> ([f64; D], [f64; D]) {
    let mid: [f64; D] = std::array::from_fn(|i| 0.5 * (a.q[i] + b.q[i]));
    let s = geometry.coframe(&mid);
    (
        std::array::from_fn(|i| (b.q[i] - a.q[i]) / s[i]),
        std::array::from_fn(|i| (b.p[i] - a.p[i]) * s[i]),
    )
}

/// Length of `b − a` in the Sasaki-type product metric.
pub fn sasaki_length<G: CoverGeometry<D>, const D: usize>(
    geometry: &G,
    a: &CotangentPoint<D>,
    b: &CotangentPoint<D>,
) -> f64 {
    let (dq, dp) = sasaki_delta(geometry, a, b);
    (norm(&dq).powi(2) + norm(&dp).powi(2)).sqrt()
}

/// `(D−1)`-volume of a simplex of phase points in the Sasaki-type metric,
/// from the Gram determinant of its edge vectors.
pub fn simplex_volume<G: CoverGeometry<D>, const D: usize>(
    geometry: &G,
    corners: &[CotangentPoint<D>; D],
) -> f64 {
    let edges: Vec<Vec<f64>> = (1..D)
        .map(|j| {
            let (dq, dp) = sasaki_delta(geometry, &corners[0], &corners[j]);
            dq.iter().chain(dp.iter()).copied().collect()
        })
        .collect();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    match D {
        2 => dot(&edges[0], &edges[0]).sqrt(),
        3 => {
            let g00 = dot(&edges[0], &edges[0]);
            let g11 = dot(&edges[1], &edges[1]);
            let g01 = dot(&edges[0], &edges[1]);
            0.5 * (g00 * g11 - g01 * g01).max(0.0).sqrt()
        }
        _ => f64::NAN,
    }
}
