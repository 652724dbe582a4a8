//! Node sets for p (radii × sphere directions), λ (moduli × arguments) and the
//! circle angle φ, plus point location on the direction triangulation.

use std::collections::HashMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, CoreError};
use crate::vec3::{cross, dot, norm, normalize, scale};
use crate::{Vec3, C64};

/// How p-directions are chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DirectionSpec {
    /// Vertices of a subdivided icosahedron (12, 42, 162, … directions), rotated
    /// by a fixed generic rotation so that no vertex is aligned with a coordinate axis.
    Icosphere { icosphere_level: u32 },
    /// Explicit unit vectors; their convex hull must enclose the origin.
    Explicit(Vec<[f64; 3]>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub p_radii: Vec<f64>,
    pub p_directions: DirectionSpec,
    pub lambda_moduli: Vec<f64>,
    /// Number of uniformly spaced arguments in [0, 2π).
    pub lambda_args: usize,
    /// Node budget for the circle rule in the bracket; graded panels receive
    /// `phi_nodes / 8` Gauss nodes each (at least two).
    pub phi_nodes: usize,
    /// Base node count per coordinate of the ξ-rule.
    pub xi_nodes_per_axis: usize,
    /// Radius of the ξ-integration ball.
    #[serde(rename = "Xi_max")]
    pub xi_max: f64,
}

/// Triangulated unit sphere with a bucket index for point location.
#[derive(Debug, Clone)]
pub struct SphereTriangulation {
    pub vertices: Vec<Vec3>,
    pub faces: Vec<[usize; 3]>,
    bins: Vec<Vec<u32>>,
    nz: usize,
    naz: usize,
}

const BIN_NZ: usize = 24;
const BIN_NAZ: usize = 48;

fn bin_of(d: &Vec3, nz: usize, naz: usize) -> usize {
    let z = d[2].clamp(-1.0, 1.0);
    let iz = (((z + 1.0) * 0.5 * nz as f64) as usize).min(nz - 1);
    let mut az = d[1].atan2(d[0]);
    if az < 0.0 {
        az += 2.0 * PI;
    }
    let ia = ((az / (2.0 * PI) * naz as f64) as usize).min(naz - 1);
    iz * naz + ia
}

fn angle(a: &Vec3, b: &Vec3) -> f64 {
    let c = cross(a, b);
    norm(&c).atan2(dot(a, b))
}

fn sph(z: f64, az: f64) -> Vec3 {
    let s = (1.0 - z * z).max(0.0).sqrt();
    [s * az.cos(), s * az.sin(), z]
}

impl SphereTriangulation {
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Self {
        let (nz, naz) = (BIN_NZ, BIN_NAZ);
        let mut bins = vec![Vec::new(); nz * naz];
        let caps: Vec<(Vec3, f64)> = faces
            .iter()
            .map(|f| {
                let c = normalize(&[
                    vertices[f[0]][0] + vertices[f[1]][0] + vertices[f[2]][0],
                    vertices[f[0]][1] + vertices[f[1]][1] + vertices[f[2]][1],
                    vertices[f[0]][2] + vertices[f[1]][2] + vertices[f[2]][2],
                ])
                .unwrap_or([0.0, 0.0, 1.0]);
                let r = f.iter().map(|&v| angle(&c, &vertices[v])).fold(0.0, f64::max);
                (c, r)
            })
            .collect();
        for iz in 0..nz {
            let z0 = -1.0 + 2.0 * iz as f64 / nz as f64;
            let z1 = -1.0 + 2.0 * (iz + 1) as f64 / nz as f64;
            for ia in 0..naz {
                let a0 = 2.0 * PI * ia as f64 / naz as f64;
                let a1 = 2.0 * PI * (ia + 1) as f64 / naz as f64;
                let center = sph(0.5 * (z0 + z1), 0.5 * (a0 + a1));
                let mut rad: f64 = 0.0;
                for &z in &[z0, 0.5 * (z0 + z1), z1] {
                    for &a in &[a0, 0.5 * (a0 + a1), a1] {
                        rad = rad.max(angle(&center, &sph(z, a)));
                    }
                }
                let rad = 1.25 * rad + 1e-9;
                let list = &mut bins[iz * naz + ia];
                for (fi, (c, r)) in caps.iter().enumerate() {
                    if angle(&center, c) <= r + rad {
                        list.push(fi as u32);
                    }
                }
            }
        }
        Self { vertices, faces, bins, nz, naz }
    }

    /// Central-projection barycentric coordinates of `d` in face `f`.
    pub fn barycentric(&self, f: usize, d: &Vec3) -> [f64; 3] {
        let [i, j, k] = self.faces[f];
        let (a, b, c) = (&self.vertices[i], &self.vertices[j], &self.vertices[k]);
        let det = dot(a, &cross(b, c));
        let wa = dot(d, &cross(b, c)) / det;
        let wb = dot(a, &cross(d, c)) / det;
        let wc = dot(a, &cross(b, d)) / det;
        let s = wa + wb + wc;
        [wa / s, wb / s, wc / s]
    }

    /// Face containing direction `d` (unit vector) and its barycentric weights.
    pub fn locate(&self, d: &Vec3) -> (usize, [f64; 3]) {
        let mut best = (usize::MAX, [0.0; 3], f64::NEG_INFINITY);
        let mut consider = |fi: usize| {
            let f = &self.faces[fi];
            let c = [
                self.vertices[f[0]][0] + self.vertices[f[1]][0] + self.vertices[f[2]][0],
                self.vertices[f[0]][1] + self.vertices[f[1]][1] + self.vertices[f[2]][1],
                self.vertices[f[0]][2] + self.vertices[f[1]][2] + self.vertices[f[2]][2],
            ];
            if dot(&c, d) <= 0.0 {
                return false;
            }
            let w = self.barycentric(fi, d);
            let m = w[0].min(w[1]).min(w[2]);
            if m > best.2 {
                best = (fi, w, m);
            }
            m >= -1e-12
        };
        for &fi in &self.bins[bin_of(d, self.nz, self.naz)] {
            if consider(fi as usize) {
                return (best.0, best.1);
            }
        }
        for fi in 0..self.faces.len() {
            if consider(fi) {
                return (best.0, best.1);
            }
        }
        (best.0, best.1)
    }
}

/// Icosphere of the given subdivision level, rotated by a fixed generic rotation.
pub fn icosphere(level: u32) -> SphereTriangulation {
    let g = (1.0 + 5f64.sqrt()) / 2.0;
    let raw = [
        [-1.0, g, 0.0],
        [1.0, g, 0.0],
        [-1.0, -g, 0.0],
        [1.0, -g, 0.0],
        [0.0, -1.0, g],
        [0.0, 1.0, g],
        [0.0, -1.0, -g],
        [0.0, 1.0, -g],
        [g, 0.0, -1.0],
        [g, 0.0, 1.0],
        [-g, 0.0, -1.0],
        [-g, 0.0, 1.0],
    ];
    let mut verts: Vec<Vec3> = raw.iter().map(|v| normalize(v).unwrap()).collect();
    let mut faces: Vec<[usize; 3]> = vec![
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
    for _ in 0..level {
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(faces.len() * 4);
        let mut midpoint = |a: usize, b: usize, verts: &mut Vec<Vec3>| -> usize {
            let key = (a.min(b), a.max(b));
            *mid.entry(key).or_insert_with(|| {
                let m = [
                    verts[a][0] + verts[b][0],
                    verts[a][1] + verts[b][1],
                    verts[a][2] + verts[b][2],
                ];
                verts.push(normalize(&m).unwrap());
                verts.len() - 1
            })
        };
        for f in &faces {
            let ab = midpoint(f[0], f[1], &mut verts);
            let bc = midpoint(f[1], f[2], &mut verts);
            let ca = midpoint(f[2], f[0], &mut verts);
            next.push([f[0], ab, ca]);
            next.push([f[1], bc, ab]);
            next.push([f[2], ca, bc]);
            next.push([ab, bc, ca]);
        }
        faces = next;
    }
    let rot = generic_rotation();
    let verts = verts
        .iter()
        .map(|v| {
            [
                dot(&rot[0], v),
                dot(&rot[1], v),
                dot(&rot[2], v),
            ]
        })
        .collect();
    SphereTriangulation::new(verts, faces)
}

fn generic_rotation() -> [Vec3; 3] {
    let (a, b, c) = (0.3141592653589793_f64, 0.5772156649015329_f64, 0.6931471805599453_f64);
    let rz = |t: f64| [[t.cos(), -t.sin(), 0.0], [t.sin(), t.cos(), 0.0], [0.0, 0.0, 1.0]];
    let rx = |t: f64| [[1.0, 0.0, 0.0], [0.0, t.cos(), -t.sin()], [0.0, t.sin(), t.cos()]];
    let mul = |m: [[f64; 3]; 3], n: [[f64; 3]; 3]| {
        let mut o = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                o[i][j] = (0..3).map(|k| m[i][k] * n[k][j]).sum();
            }
        }
        o
    };
    mul(mul(rz(a), rx(b)), rz(c))
}

/// Convex hull of a small direction set (brute force over triples).
fn hull_triangulation(dirs: &[Vec3]) -> Result<SphereTriangulation, CoreError> {
    let n = dirs.len();
    if n < 4 {
        return invalid("explicit direction lists need at least 4 directions");
    }
    if n > 96 {
        return invalid("explicit direction lists are limited to 96 entries; use icosphere_level");
    }
    let mut faces = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            for k in (j + 1)..n {
                let nrm = cross(
                    &crate::vec3::sub(&dirs[j], &dirs[i]),
                    &crate::vec3::sub(&dirs[k], &dirs[i]),
                );
                if norm(&nrm) < 1e-12 {
                    continue;
                }
                let off = dot(&nrm, &dirs[i]);
                let mut pos = false;
                let mut neg = false;
                for (m, d) in dirs.iter().enumerate() {
                    if m == i || m == j || m == k {
                        continue;
                    }
                    let s = dot(&nrm, d) - off;
                    if s > 1e-12 {
                        pos = true;
                    } else if s < -1e-12 {
                        neg = true;
                    }
                }
                if pos && neg {
                    continue;
                }
                if off.abs() < 1e-12 {
                    return invalid("direction hull does not enclose the origin");
                }
                let face = if (off > 0.0) != pos { [i, j, k] } else { [i, k, j] };
                faces.push(face);
            }
        }
    }
    if faces.is_empty() {
        return invalid("degenerate direction set");
    }
    Ok(SphereTriangulation::new(dirs.to_vec(), faces))
}

/// Discretization of (ℂ∖0) × (ℝ³∖L_ν).
#[derive(Debug, Clone)]
pub struct Grid {
    pub spec: GridSpec,
    pub nu: Vec3,
    pub radii: Vec<f64>,
    pub sphere: SphereTriangulation,
    /// Index `ir * n_dirs + id`.
    pub p_nodes: Vec<Vec3>,
    pub lambda_moduli: Vec<f64>,
    pub n_args: usize,
    /// Index `im * n_args + ia`, argument `2π ia / n_args`.
    pub lambda_nodes: Vec<C64>,
    /// Uniform on [-π, π).
    pub phi_nodes: Vec<f64>,
}

impl GridSpec {
    pub fn validate(&self) -> Result<(), CoreError> {
        let r = &self.p_radii;
        if r.len() < 2 {
            return invalid("p_radii needs at least 2 entries");
        }
        if r.iter().any(|x| !x.is_finite() || *x <= 0.0) {
            return invalid("p_radii must be positive and finite");
        }
        if r.windows(2).any(|w| w[1] <= w[0]) {
            return invalid("p_radii must be strictly increasing");
        }
        let m = &self.lambda_moduli;
        if m.len() < 2 {
            return invalid("lambda_moduli needs at least 2 entries");
        }
        if m.iter().any(|x| !x.is_finite() || *x <= 0.0) {
            return invalid("lambda_moduli must be positive and finite");
        }
        if m.windows(2).any(|w| w[1] <= w[0]) {
            return invalid("lambda_moduli must be strictly increasing");
        }
        if let Some(x) = m.iter().find(|x| (**x - 1.0).abs() <= 1e-9) {
            return invalid(format!("lambda modulus {x} lies on the unit circle"));
        }
        if !(m[0] < 1.0 && *m.last().unwrap() > 1.0) {
            return invalid("lambda_moduli must straddle 1");
        }
        if self.lambda_args < 2 || self.phi_nodes < 2 || self.xi_nodes_per_axis < 2 {
            return invalid("lambda_args, phi_nodes and xi_nodes_per_axis must be at least 2");
        }
        if !(self.xi_max.is_finite() && self.xi_max > 0.0) {
            return invalid("Xi_max must be positive");
        }
        if let DirectionSpec::Icosphere { icosphere_level } = self.p_directions {
            if icosphere_level > 5 {
                return invalid("icosphere_level above 5 is not supported");
            }
        }
        Ok(())
    }

    pub fn p_max(&self) -> f64 {
        *self.p_radii.last().unwrap_or(&0.0)
    }
}

/// Builds node arrays for p, λ and φ; rejects directions on L_ν.
pub fn make_grids(spec: &GridSpec, nu: &Vec3) -> Result<Grid, CoreError> {
    spec.validate()?;
    let nu = normalize(nu).ok_or_else(|| CoreError::Validation("nu must be nonzero".into()))?;
    let sphere = match &spec.p_directions {
        DirectionSpec::Icosphere { icosphere_level } => icosphere(*icosphere_level),
        DirectionSpec::Explicit(list) => {
            let mut dirs = Vec::with_capacity(list.len());
            for (i, d) in list.iter().enumerate() {
                match normalize(d) {
                    Some(u) => dirs.push(u),
                    None => return invalid(format!("direction {i} is zero")),
                }
            }
            for (i, d) in dirs.iter().enumerate() {
                if norm(&cross(d, &nu)) <= 1e-9 {
                    return Err(CoreError::DirectionOnAxis { index: i });
                }
            }
            hull_triangulation(&dirs)?
        }
    };
    for (i, d) in sphere.vertices.iter().enumerate() {
        if norm(&cross(d, &nu)) <= 1e-9 {
            return Err(CoreError::DirectionOnAxis { index: i });
        }
    }
    let mut p_nodes = Vec::with_capacity(spec.p_radii.len() * sphere.vertices.len());
    for &r in &spec.p_radii {
        for d in &sphere.vertices {
            p_nodes.push(scale(r, d));
        }
    }
    let n_args = spec.lambda_args;
    let mut lambda_nodes = Vec::with_capacity(spec.lambda_moduli.len() * n_args);
    for &m in &spec.lambda_moduli {
        for ia in 0..n_args {
            lambda_nodes.push(C64::from_polar(m, 2.0 * PI * ia as f64 / n_args as f64));
        }
    }
    let phi_nodes = (0..spec.phi_nodes)
        .map(|j| -PI + 2.0 * PI * j as f64 / spec.phi_nodes as f64)
        .collect();
    Ok(Grid {
        spec: spec.clone(),
        nu,
        radii: spec.p_radii.clone(),
        sphere,
        p_nodes,
        lambda_moduli: spec.lambda_moduli.clone(),
        n_args,
        lambda_nodes,
        phi_nodes,
    })
}

impl Grid {
    pub fn n_p(&self) -> usize {
        self.p_nodes.len()
    }

    pub fn n_dirs(&self) -> usize {
        self.sphere.vertices.len()
    }

    pub fn n_lambda(&self) -> usize {
        self.lambda_nodes.len()
    }

    pub fn p_max(&self) -> f64 {
        *self.radii.last().unwrap()
    }

    /// Interpolation stencil in p: six (node, weight) pairs, or `None` beyond P_max.
    ///
    /// Inside the innermost shell the stencil is clamped to that shell.
    pub fn p_stencil(&self, p: &Vec3) -> Option<[(usize, f64); 6]> {
        let r = norm(p);
        let rmax = self.p_max();
        if r > rmax {
            return None;
        }
        let d = if r > 0.0 { scale(1.0 / r, p) } else { self.sphere.vertices[0] };
        let (f, w) = self.sphere.locate(&d);
        let face = self.sphere.faces[f];
        let (ir, s) = bracket_index(&self.radii, r);
        let nd = self.n_dirs();
        let mut out = [(0usize, 0.0f64); 6];
        for v in 0..3 {
            out[v] = (ir * nd + face[v], (1.0 - s) * w[v]);
            out[3 + v] = ((ir + 1) * nd + face[v], s * w[v]);
        }
        Some(out)
    }

    /// Interpolation stencil in λ: four (node, weight) pairs.
    ///
    /// Cells are quadrilaterals whose edges are rays and chords of the modulus
    /// circles; inside each the map from cell coordinates is bilinear, so
    /// functions affine in (Re λ, Im λ) are reproduced exactly. Moduli outside the
    /// grid range are clamped to the boundary polygon along the same ray.
    pub fn lambda_stencil(&self, lambda: C64) -> [(usize, f64); 4] {
        let n = self.n_args;
        let dt = 2.0 * PI / n as f64;
        let mut th = lambda.arg();
        if th < 0.0 {
            th += 2.0 * PI;
        }
        let j = ((th / dt) as usize).min(n - 1);
        let j1 = (j + 1) % n;
        let e0 = C64::from_polar(1.0, dt * j as f64);
        let e1 = C64::from_polar(1.0, dt * (j + 1) as f64);
        let a = (lambda.conj() * e0).im;
        let b = (lambda.conj() * e1).im;
        let t = if a == b { 0.0 } else { (a / (a - b)).clamp(0.0, 1.0) };
        let chord = e0 * (1.0 - t) + e1 * t;
        let m_eff = lambda.norm() / chord.norm();
        let (im, s) = bracket_index(&self.lambda_moduli, m_eff);
        let idx = |mi: usize, ja: usize| mi * n + ja;
        [
            (idx(im, j), (1.0 - s) * (1.0 - t)),
            (idx(im + 1, j), s * (1.0 - t)),
            (idx(im, j1), (1.0 - s) * t),
            (idx(im + 1, j1), s * t),
        ]
    }
}

/// Index `i` and fraction `s` with `x ≈ (1-s)·xs[i] + s·xs[i+1]`, clamped to the ends.
pub fn bracket_index(xs: &[f64], x: f64) -> (usize, f64) {
    let n = xs.len();
    if x <= xs[0] {
        return (0, 0.0);
    }
    if x >= xs[n - 1] {
        return (n - 2, 1.0);
    }
    let i = match xs.binary_search_by(|v| v.total_cmp(&x)) {
        Ok(i) => i.min(n - 2),
        Err(i) => i - 1,
    };
    let s = (x - xs[i]) / (xs[i + 1] - xs[i]);
    (i, s)
}
