//! Truncated slit cell domains and P1 energies on them.
//!
//! Nodes are degrees of freedom. Across the slit `{1 <= s < N, t = 0}` every
//! position carries two nodes, one used by elements above and one by
//! elements below; inside the unit hole the node is shared.

mod assemble;
mod axis;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

pub use assemble::{element_gradient, integrate_energy, Energy, MAX_ENTRIES};
pub use axis::graded_axis;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeshMode {
    Axisymmetric,
    Full,
}

/// Truncated cell domain `(B_N × (-T, T)) \ slit` with the unit hole.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellDomainSpec {
    /// Lateral dimension.
    pub d: usize,
    /// Lateral truncation radius `N`.
    pub radius: f64,
    pub half_height: f64,
    pub mode: MeshMode,
    /// Target element size.
    pub resolution: f64,
    pub grading: f64,
    /// Smallest element size near the slit tip as a fraction of `resolution`.
    #[serde(default = "default_min_ratio")]
    pub min_size_ratio: f64,
    /// Extra radii below `radius` that must be node positions. Passing the
    /// smaller truncations of a sweep makes the meshes nest.
    #[serde(default)]
    pub radial_breaks: Vec<f64>,
    /// Same for heights below `half_height`.
    #[serde(default)]
    pub vertical_breaks: Vec<f64>,
}

fn default_min_ratio() -> f64 {
    1.0 / 32.0
}

impl CellDomainSpec {
    pub fn axisymmetric(d: usize, radius: f64, half_height: f64, resolution: f64, grading: f64) -> Self {
        Self {
            d,
            radius,
            half_height,
            mode: MeshMode::Axisymmetric,
            resolution,
            grading,
            min_size_ratio: default_min_ratio(),
            radial_breaks: Vec::new(),
            vertical_breaks: Vec::new(),
        }
    }

    pub fn full(radius: f64, half_height: f64, resolution: f64, grading: f64) -> Self {
        Self { mode: MeshMode::Full, ..Self::axisymmetric(2, radius, half_height, resolution, grading) }
    }

    pub fn with_breaks(mut self, radial: Vec<f64>, vertical: Vec<f64>) -> Self {
        self.radial_breaks = radial;
        self.vertical_breaks = vertical;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.radius > 1.0) {
            return Err(Error::EmptySlit(self.radius));
        }
        if self.d < 2 {
            return Err(Error::UnsupportedDimension(format!("lateral dimension {} must be at least 2", self.d)));
        }
        if self.mode == MeshMode::Full && self.d != 2 {
            return Err(Error::UnsupportedDimension(format!("full mode needs d = 2, got d = {}", self.d)));
        }
        if !(self.resolution > 0.0) || !(self.half_height > 0.0) || !(self.grading >= 1.0) {
            return Err(Error::Domain("resolution and half height must be positive, grading at least 1".into()));
        }
        if !(self.min_size_ratio > 0.0 && self.min_size_ratio <= 1.0) {
            return Err(Error::Domain("min_size_ratio must lie in (0, 1]".into()));
        }
        if self.resolution > (self.radius - 1.0) / 4.0 + 1e-12 {
            return Err(Error::SlitUnresolved { h: self.resolution, radius: self.radius });
        }
        Ok(())
    }

    fn h_min(&self) -> f64 {
        self.resolution * self.min_size_ratio
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryTag {
    LateralUpper,
    LateralLower,
    TopCap,
    BottomCap,
    Axis,
    /// Inner sphere of an annulus.
    Inner,
    /// Outer sphere of an annulus.
    Outer,
}

impl BoundaryTag {
    pub const ALL: [BoundaryTag; 7] = [
        BoundaryTag::LateralUpper,
        BoundaryTag::LateralLower,
        BoundaryTag::TopCap,
        BoundaryTag::BottomCap,
        BoundaryTag::Axis,
        BoundaryTag::Inner,
        BoundaryTag::Outer,
    ];

    pub fn bit(self) -> u8 {
        1 << self as u8
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Geometry {
    /// `(s, t)` half-plane section of a rotationally symmetric domain in `R^{d+1}`.
    Axisymmetric { d: usize },
    /// Voxelized `(-N, N)^2 × (-T, T)`.
    Full,
    /// Two radial membranes on `[0, N]` sharing nodes over the hole.
    Membrane { d: usize },
    /// `[r_in, r_out] × [0, 1]` without slit, for capacity checks.
    Annulus { d: usize },
}

/// `|S^{d-1}|`, the area of the unit sphere in `R^d`.
pub fn sphere_area(d: usize) -> f64 {
    match d {
        0 => 0.0,
        1 => 2.0,
        2 => 2.0 * PI,
        _ => 2.0 * PI / (d - 2) as f64 * sphere_area(d - 2),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SlitMesh {
    pub geometry: Geometry,
    /// Spatial dimension of the discretization.
    pub dim: usize,
    /// Coordinates, `dim` per node.
    pub nodes: Vec<f64>,
    /// Node indices, `dim + 1` per simplex.
    pub elements: Vec<usize>,
    /// `+1` for elements above the mid-plane, `-1` below.
    pub element_side: Vec<i8>,
    /// `+1` above or upper slit copy, `-1` below or lower copy, `0` shared.
    pub node_side: Vec<i8>,
    /// Quadrature weight per element, including the rotational factor.
    pub weights: Vec<f64>,
    #[serde(skip)]
    grads: Vec<f64>,
    /// Bit set of [`BoundaryTag`] per node.
    pub tags: Vec<u8>,
    /// `(upper, lower)` duplicated nodes on the slit.
    pub slit_pairs: Vec<(usize, usize)>,
    pub shared_hole_nodes: Vec<usize>,
    pub radius: f64,
    pub half_height: f64,
}

impl SlitMesh {
    pub fn n_nodes(&self) -> usize {
        self.node_side.len()
    }
    pub fn n_elements(&self) -> usize {
        self.weights.len()
    }
    pub fn node(&self, i: usize) -> &[f64] {
        &self.nodes[i * self.dim..(i + 1) * self.dim]
    }
    pub fn element(&self, e: usize) -> &[usize] {
        let k = self.dim + 1;
        &self.elements[e * k..(e + 1) * k]
    }
    /// Gradients of the barycentric coordinates of element `e`, node-major.
    pub fn shape_gradients(&self, e: usize) -> &[f64] {
        let k = (self.dim + 1) * self.dim;
        &self.grads[e * k..(e + 1) * k]
    }
    pub fn has_tag(&self, node: usize, tag: BoundaryTag) -> bool {
        self.tags[node] & tag.bit() != 0
    }
    pub fn nodes_with(&self, tag: BoundaryTag) -> Vec<usize> {
        (0..self.n_nodes()).filter(|&i| self.has_tag(i, tag)).collect()
    }
    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }
    /// Index of the vertical axis, absent for membranes.
    pub fn vertical_axis(&self) -> Option<usize> {
        match self.geometry {
            Geometry::Membrane { .. } => None,
            _ => Some(self.dim - 1),
        }
    }
    /// Density column receiving spatial derivative `k` for a density with
    /// `cols` columns. The vertical derivative always goes to the last one.
    pub fn column_of(&self, k: usize, cols: usize) -> usize {
        if Some(k) == self.vertical_axis() {
            cols - 1
        } else {
            k
        }
    }
    /// Lateral dimension the mesh represents, used to check density shape.
    pub fn lateral_dim(&self) -> usize {
        match self.geometry {
            Geometry::Axisymmetric { d } | Geometry::Membrane { d } | Geometry::Annulus { d } => d,
            Geometry::Full => 2,
        }
    }
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("mesh serializes")
    }
}

struct Builder {
    dim: usize,
    nodes: Vec<f64>,
    node_side: Vec<i8>,
    tags: Vec<u8>,
    elements: Vec<usize>,
    element_side: Vec<i8>,
}

impl Builder {
    fn new(dim: usize) -> Self {
        Self { dim, nodes: Vec::new(), node_side: Vec::new(), tags: Vec::new(), elements: Vec::new(), element_side: Vec::new() }
    }
    fn add_node(&mut self, x: &[f64], side: i8) -> usize {
        self.nodes.extend_from_slice(x);
        self.node_side.push(side);
        self.tags.push(0);
        self.node_side.len() - 1
    }
    fn tag(&mut self, node: usize, tag: BoundaryTag) {
        self.tags[node] |= tag.bit();
    }
    fn add_element(&mut self, nodes: &[usize], side: i8) {
        self.elements.extend_from_slice(nodes);
        self.element_side.push(side);
    }

    fn finish(self, geometry: Geometry, radius: f64, half_height: f64, slit_pairs: Vec<(usize, usize)>, shared: Vec<usize>) -> SlitMesh {
        let dim = self.dim;
        let k = dim + 1;
        let ne = self.element_side.len();
        let mut weights = Vec::with_capacity(ne);
        let mut grads = Vec::with_capacity(ne * k * dim);
        for e in 0..ne {
            let ids = &self.elements[e * k..(e + 1) * k];
            let x: Vec<&[f64]> = ids.iter().map(|&i| &self.nodes[i * dim..(i + 1) * dim]).collect();
            let (measure, g) = simplex_geometry(&x);
            grads.extend(g);
            let w = match geometry {
                Geometry::Full => measure,
                Geometry::Membrane { d } => {
                    let (a, b) = (x[0][0].min(x[1][0]), x[0][0].max(x[1][0]));
                    sphere_area(d) * (b.powi(d as i32) - a.powi(d as i32)) / d as f64
                }
                Geometry::Axisymmetric { d } | Geometry::Annulus { d } => {
                    let s = [x[0][0], x[1][0], x[2][0]];
                    sphere_area(d) * triangle_power_integral(measure, s, d - 1)
                }
            };
            weights.push(w);
        }
        SlitMesh {
            geometry,
            dim,
            nodes: self.nodes,
            elements: self.elements,
            element_side: self.element_side,
            node_side: self.node_side,
            weights,
            grads,
            tags: self.tags,
            slit_pairs,
            shared_hole_nodes: shared,
            radius,
            half_height,
        }
    }
}

/// Measure and barycentric gradients (node-major) of a simplex.
fn simplex_geometry(x: &[&[f64]]) -> (f64, Vec<f64>) {
    let dim = x.len() - 1;
    let mut jac = nalgebra::DMatrix::<f64>::zeros(dim, dim);
    for c in 0..dim {
        for r in 0..dim {
            jac[(r, c)] = x[c + 1][r] - x[0][r];
        }
    }
    let det = jac.determinant();
    let fact: f64 = (1..=dim).map(|i| i as f64).product();
    let inv = jac.try_inverse().expect("degenerate simplex");
    // grad λ_{c+1} = row c of J^{-1}; grad λ_0 = -Σ
    let mut g = vec![0.0; (dim + 1) * dim];
    for c in 0..dim {
        for r in 0..dim {
            g[(c + 1) * dim + r] = inv[(c, r)];
            g[r] -= inv[(c, r)];
        }
    }
    (det.abs() / fact, g)
}

/// `∫_T s^k` over a triangle of area `area` where `s` is affine with nodal
/// values `s`: `2|T| k!/(k+2)! · h_k(s)` with `h_k` the complete homogeneous
/// symmetric polynomial.
fn triangle_power_integral(area: f64, s: [f64; 3], k: usize) -> f64 {
    let mut h = 0.0;
    for i in 0..=k {
        for j in 0..=(k - i) {
            let l = k - i - j;
            h += s[0].powi(i as i32) * s[1].powi(j as i32) * s[2].powi(l as i32);
        }
    }
    let kf = k as f64;
    2.0 * area * h / ((kf + 1.0) * (kf + 2.0))
}

/// Snapping tolerance of the voxel grid, whose nodes miss the unit circle.
fn snap_tol(h: f64) -> f64 {
    h / 10.0
}

/// Graded axes carry an exact node at `s = 1`.
const EXACT_TOL: f64 = 1e-12;

/// Vertical axis on `[-T, T]` graded toward `t = 0`, symmetric.
fn vertical_axis(spec: &CellDomainSpec) -> Vec<f64> {
    let mut breaks = vec![0.0];
    breaks.extend(spec.vertical_breaks.iter().copied().filter(|&b| b > 0.0 && b < spec.half_height));
    breaks.push(spec.half_height);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let up = graded_axis(&breaks, 0.0, spec.resolution, spec.grading, spec.h_min());
    let mut t: Vec<f64> = up.iter().skip(1).rev().map(|x| -x).collect();
    t.extend(up);
    t
}

fn radial_axis(spec: &CellDomainSpec) -> Vec<f64> {
    let mut breaks = vec![0.0, 1.0];
    breaks.extend(spec.radial_breaks.iter().copied().filter(|&b| b > 1.0 && b < spec.radius));
    breaks.push(spec.radius);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    graded_axis(&breaks, 1.0, spec.resolution, spec.grading, spec.h_min())
}

/// Builds the discrete cell domain described by `spec`.
pub fn build_slit_mesh(spec: &CellDomainSpec) -> Result<SlitMesh> {
    spec.validate()?;
    match spec.mode {
        MeshMode::Axisymmetric => Ok(build_axisymmetric(spec)),
        MeshMode::Full => Ok(build_full(spec)),
    }
}

fn build_axisymmetric(spec: &CellDomainSpec) -> SlitMesh {
    let s = radial_axis(spec);
    let t = vertical_axis(spec);
    let tol = EXACT_TOL;
    let mid = t.iter().position(|&x| x == 0.0).unwrap();
    let (ns, nt) = (s.len(), t.len());
    let mut b = Builder::new(2);
    // ids[k][i] = (upper-or-only, lower-or-only)
    let mut ids = vec![vec![(0usize, 0usize); ns]; nt];
    let mut pairs = Vec::new();
    let mut shared = Vec::new();
    for (k, &tk) in t.iter().enumerate() {
        for (i, &si) in s.iter().enumerate() {
            let side = if tk > 0.0 {
                1
            } else if tk < 0.0 {
                -1
            } else {
                0
            };
            if k == mid && si >= 1.0 - tol {
                let up = b.add_node(&[si, 0.0], 1);
                let lo = b.add_node(&[si, 0.0], -1);
                ids[k][i] = (up, lo);
                pairs.push((up, lo));
            } else {
                let id = b.add_node(&[si, tk], side);
                ids[k][i] = (id, id);
                if k == mid {
                    shared.push(id);
                }
            }
        }
    }
    for k in 0..nt {
        for i in 0..ns {
            let (up, lo) = ids[k][i];
            if i == 0 {
                b.tag(up, BoundaryTag::Axis);
                b.tag(lo, BoundaryTag::Axis);
            }
            if i == ns - 1 {
                if t[k] > 0.0 || (k == mid && up != lo) {
                    b.tag(up, BoundaryTag::LateralUpper);
                }
                if t[k] < 0.0 || (k == mid && up != lo) {
                    b.tag(lo, BoundaryTag::LateralLower);
                }
            }
            if k == nt - 1 {
                b.tag(up, BoundaryTag::TopCap);
            }
            if k == 0 {
                b.tag(lo, BoundaryTag::BottomCap);
            }
        }
    }
    for k in 0..nt - 1 {
        let side: i8 = if k >= mid { 1 } else { -1 };
        let pick = |kk: usize, i: usize| if side > 0 { ids[kk][i].0 } else { ids[kk][i].1 };
        for i in 0..ns - 1 {
            let (a, bb, c, dd) = (pick(k, i), pick(k, i + 1), pick(k + 1, i + 1), pick(k + 1, i));
            b.add_element(&[a, bb, c], side);
            b.add_element(&[a, c, dd], side);
        }
    }
    b.finish(Geometry::Axisymmetric { d: spec.d }, spec.radius, spec.half_height, pairs, shared)
}

fn build_full(spec: &CellDomainSpec) -> SlitMesh {
    let h = spec.resolution;
    let kx = ((2.0 * spec.radius / h) - 1e-9).ceil() as usize;
    let x: Vec<f64> = (0..=kx).map(|i| -spec.radius + 2.0 * spec.radius * i as f64 / kx as f64).collect();
    let t = vertical_axis(spec);
    let tol = snap_tol(h);
    build_voxel_slit(&x, &x, &t, &|a, b| a.hypot(b) < 1.0 - tol, spec.radius, spec.half_height)
}

/// Kuhn-split voxel mesh of `x × y × t` with a slit on `t = 0` everywhere
/// `in_hole(x, y)` is false. `t` must contain `0`.
pub fn build_voxel_slit(x: &[f64], y: &[f64], t: &[f64], in_hole: &dyn Fn(f64, f64) -> bool, radius: f64, half_height: f64) -> SlitMesh {
    let mid = t.iter().position(|&v| v == 0.0).expect("vertical axis contains 0");
    let (nx, ny, nt) = (x.len(), y.len(), t.len());
    let mut b = Builder::new(3);
    let mut ids = vec![(0usize, 0usize); nx * ny * nt];
    let at = |i: usize, j: usize, k: usize| (k * ny + j) * nx + i;
    let mut pairs = Vec::new();
    let mut shared = Vec::new();
    for k in 0..nt {
        for j in 0..ny {
            for i in 0..nx {
                let p = [x[i], y[j], t[k]];
                let side = if t[k] > 0.0 {
                    1
                } else if t[k] < 0.0 {
                    -1
                } else {
                    0
                };
                let entry = if k == mid && !in_hole(x[i], y[j]) {
                    let up = b.add_node(&p, 1);
                    let lo = b.add_node(&p, -1);
                    pairs.push((up, lo));
                    (up, lo)
                } else {
                    let id = b.add_node(&p, side);
                    if k == mid {
                        shared.push(id);
                    }
                    (id, id)
                };
                ids[at(i, j, k)] = entry;
                let lateral = i == 0 || j == 0 || i == nx - 1 || j == ny - 1;
                if lateral {
                    if t[k] > 0.0 || (k == mid && entry.0 != entry.1) {
                        b.tag(entry.0, BoundaryTag::LateralUpper);
                    }
                    if t[k] < 0.0 || (k == mid && entry.0 != entry.1) {
                        b.tag(entry.1, BoundaryTag::LateralLower);
                    }
                }
                if k == nt - 1 {
                    b.tag(entry.0, BoundaryTag::TopCap);
                }
                if k == 0 {
                    b.tag(entry.1, BoundaryTag::BottomCap);
                }
            }
        }
    }
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    for k in 0..nt - 1 {
        let side: i8 = if k >= mid { 1 } else { -1 };
        for j in 0..ny - 1 {
            for i in 0..nx - 1 {
                for perm in PERMS {
                    let mut c = [i, j, k];
                    let mut tet = [0usize; 4];
                    let node = |c: [usize; 3]| {
                        let e = ids[at(c[0], c[1], c[2])];
                        if side > 0 {
                            e.0
                        } else {
                            e.1
                        }
                    };
                    tet[0] = node(c);
                    for (q, &ax) in perm.iter().enumerate() {
                        c[ax] += 1;
                        tet[q + 1] = node(c);
                    }
                    b.add_element(&tet, side);
                }
            }
        }
    }
    b.finish(Geometry::Full, radius, half_height, pairs, shared)
}

/// Two radial membranes on `[0, N]` sharing nodes for `s <= 1`.
pub fn build_membrane_mesh(d: usize, radius: f64, resolution: f64, grading: f64, radial_breaks: &[f64]) -> Result<SlitMesh> {
    let spec = CellDomainSpec::axisymmetric(d, radius, 1.0, resolution, grading).with_breaks(radial_breaks.to_vec(), Vec::new());
    spec.validate()?;
    let s = radial_axis(&spec);
    let tol = EXACT_TOL;
    let mut b = Builder::new(1);
    let mut ids = Vec::with_capacity(s.len());
    let mut pairs = Vec::new();
    let mut shared = Vec::new();
    for &si in &s {
        if si > 1.0 + tol {
            let up = b.add_node(&[si], 1);
            let lo = b.add_node(&[si], -1);
            pairs.push((up, lo));
            ids.push((up, lo));
        } else {
            let id = b.add_node(&[si], 0);
            shared.push(id);
            ids.push((id, id));
        }
    }
    let last = *ids.last().unwrap();
    b.tag(ids[0].0, BoundaryTag::Axis);
    b.tag(last.0, BoundaryTag::LateralUpper);
    b.tag(last.1, BoundaryTag::LateralLower);
    for i in 0..s.len() - 1 {
        let (a, c) = (ids[i], ids[i + 1]);
        // over the hole both membranes contribute, on the same nodes
        b.add_element(&[a.0, c.0], 1);
        b.add_element(&[a.1, c.1], -1);
    }
    Ok(b.finish(Geometry::Membrane { d }, radius, 0.0, pairs, shared))
}

/// `[r_in, r_out] × [0, 1]` graded toward the inner sphere, no slit.
pub fn build_annulus_mesh(d: usize, r_in: f64, r_out: f64, resolution: f64, grading: f64) -> Result<SlitMesh> {
    if d < 2 {
        return Err(Error::UnsupportedDimension(format!("lateral dimension {d} must be at least 2")));
    }
    if !(r_in > 0.0 && r_in < r_out && r_out.is_finite()) {
        return Err(Error::Domain(format!("need 0 < r_in < r_out < ∞, got {r_in}, {r_out}")));
    }
    if !(resolution > 0.0) || !(grading >= 1.0) {
        return Err(Error::Domain("resolution must be positive, grading at least 1".into()));
    }
    let s = graded_axis(&[r_in, r_out], r_in, resolution, grading, resolution * default_min_ratio());
    let t = [0.0, 1.0];
    let mut b = Builder::new(2);
    let mut ids = vec![[0usize; 2]; s.len()];
    for (k, &tk) in t.iter().enumerate() {
        for (i, &si) in s.iter().enumerate() {
            let id = b.add_node(&[si, tk], 1);
            ids[i][k] = id;
            if i == 0 {
                b.tag(id, BoundaryTag::Inner);
            }
            if i == s.len() - 1 {
                b.tag(id, BoundaryTag::Outer);
            }
        }
    }
    for i in 0..s.len() - 1 {
        b.add_element(&[ids[i][0], ids[i + 1][0], ids[i + 1][1]], 1);
        b.add_element(&[ids[i][0], ids[i + 1][1], ids[i][1]], 1);
    }
    Ok(b.finish(Geometry::Annulus { d }, r_out, 0.5, Vec::new(), Vec::new()))
}

/// Nodal values, `m` per node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Field {
    pub m: usize,
    pub values: Vec<f64>,
}

impl Field {
    pub fn zeros(mesh: &SlitMesh, m: usize) -> Self {
        Self { m, values: vec![0.0; m * mesh.n_nodes()] }
    }

    /// `f(node, coordinates, side, out)` fills the `m` values of each node.
    pub fn from_fn<F>(mesh: &SlitMesh, m: usize, f: F) -> Self
    where
        F: Fn(usize, &[f64], i8, &mut [f64]),
    {
        let mut values = vec![0.0; m * mesh.n_nodes()];
        for (i, chunk) in values.chunks_mut(m).enumerate() {
            f(i, mesh.node(i), mesh.node_side[i], chunk);
        }
        Self { m, values }
    }

    pub fn at(&self, node: usize) -> &[f64] {
        &self.values[node * self.m..(node + 1) * self.m]
    }

    pub fn scaled(&self, lambda: f64) -> Self {
        Self { m: self.m, values: self.values.iter().map(|v| v * lambda).collect() }
    }

    pub fn check(&self, mesh: &SlitMesh) -> Result<()> {
        if self.m == 0 || self.values.len() != self.m * mesh.n_nodes() {
            return Err(Error::FieldMismatch(format!("{} values for {} nodes with m = {}", self.values.len(), mesh.n_nodes(), self.m)));
        }
        Ok(())
    }
}
