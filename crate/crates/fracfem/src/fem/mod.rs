//! P1 conforming finite elements on uniform meshes of the interval and the
//! unit square (each grid square split by the same diagonal), with exact
//! element integration, Dirichlet elimination at assembly, L2 and Ritz
//! projections, and the dense generalized eigenproblem of the discrete
//! Laplacian.

mod band;

pub use band::{BandChol, SymBand};

use crate::data::SpaceData;
use crate::spectral::Domain;
use crate::{Error, Result};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// Uniform mesh with Dirichlet boundary nodes eliminated from the dof map.
#[derive(Clone, Debug)]
pub struct Mesh {
    pub domain: Domain,
    /// Cells per direction; `h = 1/n`.
    pub resolution: usize,
}

impl Mesh {
    pub fn new(domain: Domain, resolution: usize) -> Result<Self> {
        if resolution < 2 {
            return Err(Error::InvalidInput(
                "mesh needs at least two cells per direction".into(),
            ));
        }
        Ok(Mesh { domain, resolution })
    }

    pub fn h(&self) -> f64 {
        1.0 / self.resolution as f64
    }

    pub fn ndof(&self) -> usize {
        let n = self.resolution;
        match self.domain {
            Domain::Interval => n - 1,
            Domain::Square => (n - 1) * (n - 1),
        }
    }

    /// Interior dof index of grid node `(i)` or `(i, j)`, if interior.
    pub fn dof_of(&self, i: usize, j: usize) -> Option<usize> {
        let n = self.resolution;
        match self.domain {
            Domain::Interval => (i >= 1 && i <= n - 1).then(|| i - 1),
            Domain::Square => (i >= 1 && i <= n - 1 && j >= 1 && j <= n - 1)
                .then(|| (j - 1) * (n - 1) + (i - 1)),
        }
    }

    pub fn dof_coord(&self, dof: usize) -> Vec<f64> {
        let n = self.resolution;
        let h = self.h();
        match self.domain {
            Domain::Interval => vec![(dof + 1) as f64 * h],
            Domain::Square => {
                let i = dof % (n - 1) + 1;
                let j = dof / (n - 1) + 1;
                vec![i as f64 * h, j as f64 * h]
            }
        }
    }

    /// Triangles as grid-node index triples `(i, j)`; each square is split
    /// along the diagonal from `(i, j)` to `(i+1, j+1)`, so interior nodes
    /// have six incident triangles.
    pub fn triangles(&self) -> Vec<[(usize, usize); 3]> {
        assert_eq!(self.domain, Domain::Square);
        let n = self.resolution;
        let mut cells = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                cells.push([(i, j), (i + 1, j), (i + 1, j + 1)]);
                cells.push([(i, j), (i + 1, j + 1), (i, j + 1)]);
            }
        }
        cells
    }

    /// Whether `x` coincides with a grid line (superconvergence detection
    /// for point data).
    pub fn aligned(&self, x: f64) -> bool {
        let s = x * self.resolution as f64;
        (s - s.round()).abs() < 1e-9
    }
}

/// Assembled interior-node system: mass and stiffness in band storage.
#[derive(Clone, Debug)]
pub struct FemSystem {
    pub mesh: Mesh,
    pub mass: SymBand,
    pub stiffness: SymBand,
}

impl FemSystem {
    pub fn ndof(&self) -> usize {
        self.mesh.ndof()
    }

    /// L2 norm of a finite element function from its coefficients.
    pub fn l2_norm(&self, c: &[f64]) -> f64 {
        self.mass.dot(c, c).max(0.0).sqrt()
    }

    /// Energy (gradient) norm.
    pub fn h1_norm(&self, c: &[f64]) -> f64 {
        self.stiffness.dot(c, c).max(0.0).sqrt()
    }
}

/// Exact P1 assembly with Dirichlet rows and columns eliminated.
pub fn assemble(mesh: &Mesh) -> FemSystem {
    let n = mesh.resolution;
    let h = mesh.h();
    match mesh.domain {
        Domain::Interval => {
            let ndof = n - 1;
            let mut mass = SymBand::zeros(ndof, 1);
            let mut stiff = SymBand::zeros(ndof, 1);
            for cell in 0..n {
                let nodes = [cell, cell + 1];
                let me = [[h / 3.0, h / 6.0], [h / 6.0, h / 3.0]];
                let ke = [[1.0 / h, -1.0 / h], [-1.0 / h, 1.0 / h]];
                for (a, &na) in nodes.iter().enumerate() {
                    for (b, &nb) in nodes.iter().enumerate() {
                        if let (Some(ia), Some(ib)) = (mesh.dof_of(na, 0), mesh.dof_of(nb, 0)) {
                            if ia >= ib {
                                mass.add(ia, ib, me[a][b]);
                                stiff.add(ia, ib, ke[a][b]);
                            }
                        }
                    }
                }
            }
            FemSystem {
                mesh: mesh.clone(),
                mass,
                stiffness: stiff,
            }
        }
        Domain::Square => {
            let ndof = (n - 1) * (n - 1);
            let mut mass = SymBand::zeros(ndof, n);
            let mut stiff = SymBand::zeros(ndof, n);
            for tri in mesh.triangles() {
                let coords: Vec<[f64; 2]> =
                    tri.iter().map(|&(i, j)| [i as f64 * h, j as f64 * h]).collect();
                let (ke, me) = p1_triangle_matrices(&coords);
                for a in 0..3 {
                    for b in 0..3 {
                        let da = mesh.dof_of(tri[a].0, tri[a].1);
                        let db = mesh.dof_of(tri[b].0, tri[b].1);
                        if let (Some(ia), Some(ib)) = (da, db) {
                            if ia >= ib {
                                mass.add(ia, ib, me[a][b]);
                                stiff.add(ia, ib, ke[a][b]);
                            }
                        }
                    }
                }
            }
            FemSystem {
                mesh: mesh.clone(),
                mass,
                stiffness: stiff,
            }
        }
    }
}

/// Element stiffness and mass of a P1 triangle from vertex coordinates.
fn p1_triangle_matrices(p: &[[f64; 2]]) -> ([[f64; 3]; 3], [[f64; 3]; 3]) {
    let bx = [p[1][1] - p[2][1], p[2][1] - p[0][1], p[0][1] - p[1][1]];
    let by = [p[2][0] - p[1][0], p[0][0] - p[2][0], p[1][0] - p[0][0]];
    let area2 = bx[0] * (p[1][0] - p[0][0]) * 0.0 // placeholder, computed below
        + 0.0;
    let _ = area2;
    let area = 0.5
        * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1])
            - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]))
            .abs();
    let mut ke = [[0.0; 3]; 3];
    let mut me = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            ke[a][b] = (bx[a] * bx[b] + by[a] * by[b]) / (4.0 * area);
            me[a][b] = area / 12.0 * if a == b { 2.0 } else { 1.0 };
        }
    }
    (ke, me)
}

/// 7-point Gauss rule on [-1, 1] (degree 13), used per cell in 1D.
pub(crate) const GAUSS7: [(f64, f64); 7] = [
    (-0.949107912342758524526190, 0.129484966168869693270611),
    (-0.741531185599394439863865, 0.279705391489276667901468),
    (-0.405845151377397166906606, 0.381830050505118944950369),
    (0.0, 0.417959183673469387755102),
    (0.405845151377397166906606, 0.381830050505118944950369),
    (0.741531185599394439863865, 0.279705391489276667901468),
    (0.949107912342758524526190, 0.129484966168869693270611),
];

/// 7-point degree-5 triangle rule in barycentric coordinates.
pub(crate) const TRI7: [([f64; 3], f64); 7] = [
    ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 0.225),
    (
        [0.059715871789770, 0.470142064105115, 0.470142064105115],
        0.132394152788506,
    ),
    (
        [0.470142064105115, 0.059715871789770, 0.470142064105115],
        0.132394152788506,
    ),
    (
        [0.470142064105115, 0.470142064105115, 0.059715871789770],
        0.132394152788506,
    ),
    (
        [0.797426985353087, 0.101286507323456, 0.101286507323456],
        0.125939180544827,
    ),
    (
        [0.101286507323456, 0.797426985353087, 0.101286507323456],
        0.125939180544827,
    ),
    (
        [0.101286507323456, 0.101286507323456, 0.797426985353087],
        0.125939180544827,
    ),
];

/// Load vector `(g, hat_i)` over interior nodes; exact piecewise integration
/// for indicator data (cells split at the jump), duality pairing for point
/// and line measures, high-order Gauss quadrature for smooth data.
pub fn load_vector(mesh: &Mesh, data: &SpaceData) -> Result<Vec<f64>> {
    let n = mesh.resolution;
    let h = mesh.h();
    let mut b = vec![0.0; mesh.ndof()];
    match (mesh.domain, data) {
        (Domain::Interval, SpaceData::Dirac1d { x0 }) => {
            let cell = ((x0 / h).floor() as usize).min(n - 1);
            let xi = x0 / h - cell as f64;
            if let Some(d) = mesh.dof_of(cell, 0) {
                b[d] += 1.0 - xi;
            }
            if let Some(d) = mesh.dof_of(cell + 1, 0) {
                b[d] += xi;
            }
        }
        (Domain::Interval, SpaceData::Indicator1d { a, b: ib }) => {
            // hat restricted to a cell is linear: trapezoid on the clipped
            // sub-cell is exact
            for cell in 0..n {
                let xl = cell as f64 * h;
                let xr = xl + h;
                let lo = xl.max(*a);
                let hi = xr.min(*ib);
                if hi <= lo {
                    continue;
                }
                for (node, hat) in [
                    (cell, Box::new(move |x: f64| (xr - x) / h) as Box<dyn Fn(f64) -> f64>),
                    (cell + 1, Box::new(move |x: f64| (x - xl) / h)),
                ] {
                    if let Some(d) = mesh.dof_of(node, 0) {
                        b[d] += (hi - lo) * 0.5 * (hat(lo) + hat(hi));
                    }
                }
            }
        }
        (Domain::Interval, _) => {
            // smooth integrand: 7-point Gauss per cell
            for cell in 0..n {
                let xl = cell as f64 * h;
                let xr = xl + h;
                for &(t, w) in &GAUSS7 {
                    let x = 0.5 * (xl + xr) + 0.5 * h * t;
                    let wx = 0.5 * h * w;
                    let g = data.eval1d(x)?;
                    if let Some(d) = mesh.dof_of(cell, 0) {
                        b[d] += wx * g * (xr - x) / h;
                    }
                    if let Some(d) = mesh.dof_of(cell + 1, 0) {
                        b[d] += wx * g * (x - xl) / h;
                    }
                }
            }
        }
        (Domain::Square, SpaceData::Indicator2d { x0, x1, y0, y1 }) => {
            for tri in mesh.triangles() {
                let poly: Vec<[f64; 2]> = tri
                    .iter()
                    .map(|&(i, j)| [i as f64 * h, j as f64 * h])
                    .collect();
                let clipped = clip_to_rect(&poly, [*x0, *y0], [*x1, *y1]);
                if clipped.len() < 3 {
                    continue;
                }
                // integrate each (linear) hat exactly over the clipped polygon
                for (v, &(gi, gj)) in tri.iter().enumerate() {
                    if let Some(d) = mesh.dof_of(gi, gj) {
                        b[d] += integrate_linear_over_polygon(&clipped, &poly, v);
                    }
                }
            }
        }
        (Domain::Square, SpaceData::BoxBoundaryMeasure { lo, hi }) => {
            let segments = [
                ([*lo, *lo], [*hi, *lo]),
                ([*lo, *hi], [*hi, *hi]),
                ([*lo, *lo], [*lo, *hi]),
                ([*hi, *lo], [*hi, *hi]),
            ];
            for (p, q) in segments {
                line_measure_load(mesh, p, q, &mut b);
            }
        }
        (Domain::Square, _) => {
            return Err(Error::Unsupported(format!(
                "no load rule for {data:?} on the square"
            )))
        }
    }
    Ok(b)
}

/// Clip a polygon to an axis-aligned rectangle (Sutherland–Hodgman).
fn clip_to_rect(poly: &[[f64; 2]], lo: [f64; 2], hi: [f64; 2]) -> Vec<[f64; 2]> {
    let mut out: Vec<[f64; 2]> = poly.to_vec();
    // (axis, bound, keep_below)
    let planes = [
        (0usize, lo[0], false),
        (0usize, hi[0], true),
        (1usize, lo[1], false),
        (1usize, hi[1], true),
    ];
    for (axis, bound, keep_below) in planes {
        let input = std::mem::take(&mut out);
        if input.is_empty() {
            return out;
        }
        let inside = |p: &[f64; 2]| {
            if keep_below {
                p[axis] <= bound
            } else {
                p[axis] >= bound
            }
        };
        for k in 0..input.len() {
            let cur = input[k];
            let prev = input[(k + input.len() - 1) % input.len()];
            let ci = inside(&cur);
            let pi = inside(&prev);
            if ci != pi {
                let t = (bound - prev[axis]) / (cur[axis] - prev[axis]);
                let mut x = [0.0; 2];
                x[axis] = bound;
                x[1 - axis] = prev[1 - axis] + t * (cur[1 - axis] - prev[1 - axis]);
                out.push(x);
            }
            if ci {
                out.push(cur);
            }
        }
    }
    out
}

/// Exact integral of the P1 basis function of vertex `v` (on the triangle
/// `tri_coords`) over a convex polygon contained in that triangle.
fn integrate_linear_over_polygon(poly: &[[f64; 2]], tri: &[[f64; 2]], v: usize) -> f64 {
    // linear function: value 1 at tri[v], 0 at the other two vertices
    let area2 = (tri[1][0] - tri[0][0]) * (tri[2][1] - tri[0][1])
        - (tri[2][0] - tri[0][0]) * (tri[1][1] - tri[0][1]);
    let (a, b, c) = {
        let i = v;
        let j = (v + 1) % 3;
        let k = (v + 2) % 3;
        let _ = i;
        // lambda_v(x, y) = (x_j y_k - x_k y_j + (y_j - y_k) x + (x_k - x_j) y) / area2
        (
            (tri[j][0] * tri[k][1] - tri[k][0] * tri[j][1]) / area2,
            (tri[j][1] - tri[k][1]) / area2,
            (tri[k][0] - tri[j][0]) / area2,
        )
    };
    let lam = |p: &[f64; 2]| a + b * p[0] + c * p[1];
    // fan triangulation; a linear integrand integrates as area x centroid value
    let mut total = 0.0;
    for k in 1..poly.len() - 1 {
        let (p0, p1, p2) = (poly[0], poly[k], poly[k + 1]);
        let area = 0.5
            * ((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1])).abs();
        let centroid = [
            (p0[0] + p1[0] + p2[0]) / 3.0,
            (p0[1] + p1[1] + p2[1]) / 3.0,
        ];
        total += area * lam(&centroid);
    }
    total
}

/// Hat-function line integrals along an axis-aligned segment: the duality
/// pairing of a line measure with the P1 basis. Breakpoints at every cell
/// and diagonal crossing keep each sub-segment inside one triangle, where
/// hats are linear and the trapezoid value is exact.
fn line_measure_load(mesh: &Mesh, p: [f64; 2], q: [f64; 2], b: &mut [f64]) {
    let n = mesh.resolution;
    let h = mesh.h();
    let axis = if (p[1] - q[1]).abs() < 1e-14 { 0 } else { 1 };
    let fixed = p[1 - axis];
    let (lo, hi) = (p[axis].min(q[axis]), p[axis].max(q[axis]));
    // breakpoints: grid lines in the moving coordinate plus diagonal crossings
    let mut cuts = vec![lo, hi];
    let mut k = (lo / h).ceil() as i64;
    while (k as f64) * h < hi {
        if (k as f64) * h > lo {
            cuts.push(k as f64 * h);
        }
        k += 1;
    }
    // diagonals x - y = const h: crossing where moving coord = fixed +/- m h
    let offset = fixed - (fixed / h).floor() * h;
    if offset > 1e-14 && offset < h - 1e-14 {
        let mut x = (lo - offset) / h;
        x = x.ceil();
        loop {
            let cut = x * h + offset;
            if cut >= hi {
                break;
            }
            if cut > lo {
                cuts.push(cut);
            }
            x += 1.0;
        }
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-13);
    for w in cuts.windows(2) {
        let (s0, s1) = (w[0], w[1]);
        if s1 - s0 < 1e-13 {
            continue;
        }
        let mid = 0.5 * (s0 + s1);
        let point = |s: f64| -> [f64; 2] {
            let mut pt = [0.0; 2];
            pt[axis] = s;
            pt[1 - axis] = fixed;
            pt
        };
        let pm = point(mid);
        // triangle containing the midpoint
        let ci = ((pm[0] / h).floor() as usize).min(n - 1);
        let cj = ((pm[1] / h).floor() as usize).min(n - 1);
        let xi = pm[0] / h - ci as f64;
        let eta = pm[1] / h - cj as f64;
        let tri: [((usize, usize), Box<dyn Fn(f64, f64) -> f64>); 3] = if xi >= eta {
            [
                ((ci, cj), Box::new(|x, y| 1.0 - x + 0.0 * y)),
                ((ci + 1, cj), Box::new(|x, y| x - y)),
                ((ci + 1, cj + 1), Box::new(|_x, y| y)),
            ]
        } else {
            [
                ((ci, cj), Box::new(|_x, y| 1.0 - y)),
                ((ci, cj + 1), Box::new(|x, y| y - x)),
                ((ci + 1, cj + 1), Box::new(|x, _y| x)),
            ]
        };
        let local = |s: f64| {
            let pt = point(s);
            (pt[0] / h - ci as f64, pt[1] / h - cj as f64)
        };
        let (x0, y0) = local(s0);
        let (x1, y1) = local(s1);
        for ((gi, gj), hat) in tri {
            if let Some(d) = mesh.dof_of(gi, gj) {
                b[d] += (s1 - s0) * 0.5 * (hat(x0, y0) + hat(x1, y1));
            }
        }
    }
}

/// L2 projection: solve `M c = (g, hat_i)`.
pub fn l2_project(system: &FemSystem, data: &SpaceData) -> Result<Vec<f64>> {
    let b = load_vector(&system.mesh, data)?;
    let chol = system.mass.cholesky()?;
    Ok(chol.solve(&b))
}

/// Ritz (elliptic) projection: solve `K c = (grad g, grad hat_i)`. Defined
/// for data with square-integrable gradients; distributional and indicator
/// data are rejected — project those with [`l2_project`] instead.
pub fn ritz_project(system: &FemSystem, data: &SpaceData) -> Result<Vec<f64>> {
    if system.mesh.domain != Domain::Interval {
        return Err(Error::Unsupported(
            "elliptic projection implemented on the interval only".into(),
        ));
    }
    let pointwise = |x: f64| -> Result<f64> {
        match data {
            SpaceData::Bubble | SpaceData::SinTwoPi | SpaceData::CustomSmooth1d { .. } => {
                data.eval1d(x)
            }
            _ => Err(Error::Unsupported(format!(
                "elliptic projection undefined for {data:?}; use the L2 projection"
            ))),
        }
    };
    let n = system.mesh.resolution;
    let h = system.mesh.h();
    // (g', hat_i') integrates exactly to differences of nodal values
    let mut b = vec![0.0; system.ndof()];
    for i in 1..n {
        let left = pointwise((i - 1) as f64 * h)?;
        let mid = pointwise(i as f64 * h)?;
        let right = pointwise((i + 1) as f64 * h)?;
        b[i - 1] = (2.0 * mid - left - right) / h;
    }
    let chol = system.stiffness.cholesky()?;
    Ok(chol.solve(&b))
}

/// Nodal interpolation of a smooth function (interior nodes).
pub fn interpolate_nodal(mesh: &Mesh, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    (0..mesh.ndof()).map(|d| f(&mesh.dof_coord(d))).collect()
}

/// All eigenpairs of `K v = lambda M v`, ascending, M-orthonormal.
#[derive(Debug)]
pub struct DiscreteEigen {
    pub lambdas: Vec<f64>,
    /// Column-major eigenvectors, column `j` at `j*n .. (j+1)*n`.
    vecs: Vec<f64>,
    n: usize,
}

impl DiscreteEigen {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn vec(&self, j: usize) -> &[f64] {
        &self.vecs[j * self.n..(j + 1) * self.n]
    }

    /// Modal coefficients of a finite element function:
    /// `d_j = v_j^T M c` (the L2 pairing with the discrete eigenfunctions).
    pub fn to_modal(&self, system: &FemSystem, c: &[f64]) -> Vec<f64> {
        let mc = system.mass.matvec(c);
        self.pair_with(&mc)
    }

    /// Modal coefficients straight from a load vector `b_i = (g, hat_i)`:
    /// `d_j = v_j^T b` equals the pairing of `g` with eigenfunctions.
    pub fn pair_with(&self, b: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|j| {
                self.vec(j)
                    .iter()
                    .zip(b)
                    .map(|(v, x)| v * x)
                    .sum::<f64>()
            })
            .collect()
    }

    /// Nodal coefficients from modal ones.
    pub fn from_modal(&self, d: &[f64]) -> Vec<f64> {
        let mut c = vec![0.0; self.n];
        for (j, &dj) in d.iter().enumerate() {
            if dj != 0.0 {
                for (ci, vi) in c.iter_mut().zip(self.vec(j)) {
                    *ci += dj * vi;
                }
            }
        }
        c
    }
}

/// Solve the generalized symmetric eigenproblem by reduction with the mass
/// Cholesky factor and a dense self-adjoint eigendecomposition.
pub fn discrete_eigenpairs(system: &FemSystem) -> Result<DiscreteEigen> {
    let n = system.ndof();
    let chol = system.mass.cholesky()?;
    // C = L^{-1} K, then B = C L^{-T} computed as (L^{-1} C^T)^T
    let mut c = vec![0.0f64; n * n];
    let mut ej = vec![0.0f64; n];
    for j in 0..n {
        for (i, e) in ej.iter_mut().enumerate() {
            *e = system.stiffness.get(i, j);
        }
        let y = chol.forward(&ej);
        c[j * n..(j + 1) * n].copy_from_slice(&y);
    }
    let mut b = vec![0.0f64; n * n];
    let mut row = vec![0.0f64; n];
    for i in 0..n {
        for (j, r) in row.iter_mut().enumerate() {
            *r = c[j * n + i];
        }
        let y = chol.forward(&row);
        b[i * n..(i + 1) * n].copy_from_slice(&y);
    }
    let mat = faer::Mat::from_fn(n, n, |i, j| 0.5 * (b[i * n + j] + b[j * n + i]));
    let evd = mat
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| Error::EigenFailed(format!("{e:?}")))?;
    let s = evd.S();
    let u = evd.U();
    let mut lambdas = Vec::with_capacity(n);
    let mut vecs = vec![0.0f64; n * n];
    for j in 0..n {
        lambdas.push(s[j]);
        let col: Vec<f64> = (0..n).map(|i| u[(i, j)]).collect();
        let v = chol.backward(&col);
        // deterministic sign: first significant entry positive
        let flip = v
            .iter()
            .find(|x| x.abs() > 1e-9 * v.iter().fold(0.0f64, |m, y| m.max(y.abs())))
            .map_or(false, |x| *x < 0.0);
        for (i, &vi) in v.iter().enumerate() {
            vecs[j * n + i] = if flip { -vi } else { vi };
        }
    }
    if lambdas.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::EigenFailed("eigenvalues not sorted".into()));
    }
    Ok(DiscreteEigen { lambdas, vecs, n })
}

/// Fractional-power discrete norm
/// `(sum_j lambda_j^p (psi, v_j)^2)^{1/2}` of a finite element function.
pub fn discrete_hs_norm(system: &FemSystem, eigen: &DiscreteEigen, c: &[f64], p: f64) -> f64 {
    let modal = eigen.to_modal(system, c);
    modal
        .iter()
        .zip(&eigen.lambdas)
        .map(|(d, l)| l.powf(p) * d * d)
        .sum::<f64>()
        .sqrt()
}

type EigenCache = Mutex<HashMap<(Domain, usize), Arc<(FemSystem, DiscreteEigen)>>>;

fn cache() -> &'static EigenCache {
    static CACHE: OnceLock<EigenCache> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Assembled system plus eigendecomposition, cached per (domain, resolution):
/// the decomposition is immutable and reused by every study at that size.
pub fn system_with_eigen(domain: Domain, resolution: usize) -> Result<Arc<(FemSystem, DiscreteEigen)>> {
    if let Some(hit) = cache().lock().unwrap().get(&(domain, resolution)) {
        return Ok(hit.clone());
    }
    let mesh = Mesh::new(domain, resolution)?;
    let system = assemble(&mesh);
    let eigen = discrete_eigenpairs(&system)?;
    let entry = Arc::new((system, eigen));
    cache()
        .lock()
        .unwrap()
        .insert((domain, resolution), entry.clone());
    Ok(entry)
}

/// Which error norm to measure.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorNorm {
    L2,
    H1,
}

/// `|| u_h - u ||` by per-cell Gauss quadrature (degree >= 5), evaluating
/// the reference pointwise.
pub fn error_vs_function(
    system: &FemSystem,
    coeffs: &[f64],
    reference: &dyn Fn(&[f64]) -> f64,
    reference_grad: Option<&dyn Fn(&[f64]) -> Vec<f64>>,
    norm: ErrorNorm,
) -> f64 {
    let mesh = &system.mesh;
    let n = mesh.resolution;
    let h = mesh.h();
    let nodal = |i: usize, j: usize| -> f64 {
        mesh.dof_of(i, j).map_or(0.0, |d| coeffs[d])
    };
    let mut acc = 0.0;
    match mesh.domain {
        Domain::Interval => {
            for cell in 0..n {
                let xl = cell as f64 * h;
                let ul = nodal(cell, 0);
                let ur = nodal(cell + 1, 0);
                let slope = (ur - ul) / h;
                for &(t, w) in &GAUSS7 {
                    let x = xl + 0.5 * h * (1.0 + t);
                    let wx = 0.5 * h * w;
                    match norm {
                        ErrorNorm::L2 => {
                            let uh = ul + slope * (x - xl);
                            let d = uh - reference(&[x]);
                            acc += wx * d * d;
                        }
                        ErrorNorm::H1 => {
                            let g = reference_grad.expect("gradient required")(&[x]);
                            let d = slope - g[0];
                            acc += wx * d * d;
                        }
                    }
                }
            }
        }
        Domain::Square => {
            for tri in mesh.triangles() {
                let coords: Vec<[f64; 2]> =
                    tri.iter().map(|&(i, j)| [i as f64 * h, j as f64 * h]).collect();
                let vals: Vec<f64> = tri.iter().map(|&(i, j)| nodal(i, j)).collect();
                let area = h * h / 2.0;
                // P1 gradient is constant per cell
                let bx = [
                    coords[1][1] - coords[2][1],
                    coords[2][1] - coords[0][1],
                    coords[0][1] - coords[1][1],
                ];
                let by = [
                    coords[2][0] - coords[1][0],
                    coords[0][0] - coords[2][0],
                    coords[1][0] - coords[0][0],
                ];
                let gx: f64 = (0..3).map(|a| vals[a] * bx[a]).sum::<f64>() / (2.0 * area);
                let gy: f64 = (0..3).map(|a| vals[a] * by[a]).sum::<f64>() / (2.0 * area);
                for &(bc, w) in &TRI7 {
                    let x = bc[0] * coords[0][0] + bc[1] * coords[1][0] + bc[2] * coords[2][0];
                    let y = bc[0] * coords[0][1] + bc[1] * coords[1][1] + bc[2] * coords[2][1];
                    let wx = w * area;
                    match norm {
                        ErrorNorm::L2 => {
                            let uh = bc[0] * vals[0] + bc[1] * vals[1] + bc[2] * vals[2];
                            let d = uh - reference(&[x, y]);
                            acc += wx * d * d;
                        }
                        ErrorNorm::H1 => {
                            let g = reference_grad.expect("gradient required")(&[x, y]);
                            let dx = gx - g[0];
                            let dy = gy - g[1];
                            acc += wx * (dx * dx + dy * dy);
                        }
                    }
                }
            }
        }
    }
    acc.max(0.0).sqrt()
}

/// Text dump of a system: node list, cell list, and both matrices as COO
/// triplets (`i j value`, zero-based, lower triangle).
pub fn dump_system(system: &FemSystem, dir: &std::path::Path) -> Result<()> {
    use std::io::Write;
    std::fs::create_dir_all(dir)?;
    let mesh = &system.mesh;
    let mut nodes = String::new();
    for d in 0..mesh.ndof() {
        let c = mesh.dof_coord(d);
        if c.len() == 1 {
            nodes.push_str(&format!("{d} {:.17e}\n", c[0]));
        } else {
            nodes.push_str(&format!("{d} {:.17e} {:.17e}\n", c[0], c[1]));
        }
    }
    std::fs::File::create(dir.join("nodes.txt"))?.write_all(nodes.as_bytes())?;
    let mut cells = String::new();
    match mesh.domain {
        Domain::Interval => {
            for i in 0..mesh.resolution {
                cells.push_str(&format!("{} {}\n", i, i + 1));
            }
        }
        Domain::Square => {
            let n = mesh.resolution + 1;
            for tri in mesh.triangles() {
                let ids: Vec<String> = tri.iter().map(|&(i, j)| (j * n + i).to_string()).collect();
                cells.push_str(&ids.join(" "));
                cells.push('\n');
            }
        }
    }
    std::fs::File::create(dir.join("cells.txt"))?.write_all(cells.as_bytes())?;
    for (name, m) in [("mass.coo", &system.mass), ("stiffness.coo", &system.stiffness)] {
        let mut s = String::new();
        for (i, j, v) in m.lower_triplets() {
            s.push_str(&format!("{i} {j} {v:e}\n"));
        }
        std::fs::File::create(dir.join(name))?.write_all(s.as_bytes())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn interval_two_cells_closed_form() {
        let mesh = Mesh::new(Domain::Interval, 2).unwrap();
        let sys = assemble(&mesh);
        assert_eq!(sys.ndof(), 1);
        assert!((sys.mass.get(0, 0) - 1.0 / 3.0).abs() < 1e-15);
        assert!((sys.stiffness.get(0, 0) - 4.0).abs() < 1e-15);
    }

    #[test]
    fn interval_tridiagonal_entries() {
        let mesh = Mesh::new(Domain::Interval, 8).unwrap();
        let h = mesh.h();
        let sys = assemble(&mesh);
        for i in 0..sys.ndof() {
            assert!((sys.mass.get(i, i) - 2.0 * h / 3.0).abs() < 1e-15);
            assert!((sys.stiffness.get(i, i) - 2.0 / h).abs() < 1e-12);
            if i > 0 {
                assert!((sys.mass.get(i, i - 1) - h / 6.0).abs() < 1e-15);
                assert!((sys.stiffness.get(i, i - 1) + 1.0 / h).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn stiffness_annihilates_constants_before_elimination() {
        // assemble the full (boundary-included) stiffness action on the
        // constant vector by summing element contributions directly
        let mesh = Mesh::new(Domain::Interval, 6).unwrap();
        let h = mesh.h();
        let n = mesh.resolution;
        let mut y = vec![0.0; n + 1];
        for cell in 0..n {
            let ke = [[1.0 / h, -1.0 / h], [-1.0 / h, 1.0 / h]];
            for a in 0..2 {
                for b in 0..2 {
                    y[cell + a] += ke[a][b] * 1.0;
                }
            }
        }
        for (i, v) in y.iter().enumerate() {
            let _ = i;
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn square_single_interior_node() {
        let mesh = Mesh::new(Domain::Square, 2).unwrap();
        let sys = assemble(&mesh);
        assert_eq!(sys.ndof(), 1);
        assert!((sys.stiffness.get(0, 0) - 4.0).abs() < 1e-13);
        // h^2/2 with h = 1/2
        assert!((sys.mass.get(0, 0) - 0.125).abs() < 1e-15);
    }

    #[test]
    fn square_mesh_integrity() {
        let mesh = Mesh::new(Domain::Square, 5).unwrap();
        let h = mesh.h();
        let tris = mesh.triangles();
        assert_eq!(tris.len(), 2 * 25);
        let mut valence = HashMap::new();
        for t in &tris {
            let coords: Vec<[f64; 2]> =
                t.iter().map(|&(i, j)| [i as f64 * h, j as f64 * h]).collect();
            let area = 0.5
                * ((coords[1][0] - coords[0][0]) * (coords[2][1] - coords[0][1])
                    - (coords[2][0] - coords[0][0]) * (coords[1][1] - coords[0][1]))
                    .abs();
            assert!((area - h * h / 2.0).abs() < 1e-15);
            for &v in t {
                *valence.entry(v).or_insert(0usize) += 1;
            }
        }
        for i in 1..5 {
            for j in 1..5 {
                assert_eq!(valence[&(i, j)], 6, "interior node ({i},{j})");
            }
        }
    }

    #[test]
    fn matrices_are_positive_definite() {
        for (domain, n) in [(Domain::Interval, 16), (Domain::Square, 6)] {
            let sys = assemble(&Mesh::new(domain, n).unwrap());
            assert!(sys.mass.cholesky().is_ok());
            assert!(sys.stiffness.cholesky().is_ok());
        }
    }

    #[test]
    fn l2_projection_is_idempotent_on_fem_functions() {
        let mesh = Mesh::new(Domain::Interval, 9).unwrap();
        let sys = assemble(&mesh);
        let c0: Vec<f64> = (0..sys.ndof()).map(|i| ((i * 13 + 5) % 7) as f64 - 3.0).collect();
        // evaluate the P1 function and project it back
        let h = mesh.h();
        let coeffs = c0.clone();
        let f = SpaceData::CustomSmooth1d {
            f: std::sync::Arc::new(move |x: f64| {
                let cell = ((x / h).floor() as usize).min(8);
                let xi = x / h - cell as f64;
                let left = if cell >= 1 { coeffs[cell - 1] } else { 0.0 };
                let right = if cell + 1 <= 8 { coeffs[cell] } else { 0.0 };
                left * (1.0 - xi) + right * xi
            }),
            df: std::sync::Arc::new(|_| 0.0),
        };
        let c1 = l2_project(&sys, &f).unwrap();
        for (a, b) in c0.iter().zip(&c1) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn dirac_load_hits_the_midpoint_node() {
        let mesh = Mesh::new(Domain::Interval, 8).unwrap();
        let b = load_vector(&mesh, &SpaceData::Dirac1d { x0: 0.5 }).unwrap();
        for (i, v) in b.iter().enumerate() {
            if i == 3 {
                assert!((v - 1.0).abs() < 1e-12);
            } else {
                assert!(v.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn l2_projection_second_order() {
        // projection error of sin(2 pi x) decays at rate 2
        let mut prev = f64::NAN;
        for k in [3usize, 4, 5, 6] {
            let n = 1 << k;
            let sys = assemble(&Mesh::new(Domain::Interval, n).unwrap());
            let c = l2_project(&sys, &SpaceData::SinTwoPi).unwrap();
            let err = error_vs_function(
                &sys,
                &c,
                &|p: &[f64]| (2.0 * PI * p[0]).sin(),
                None,
                ErrorNorm::L2,
            );
            if !prev.is_nan() {
                let rate = (prev / err).log2();
                assert!((rate - 2.0).abs() < 0.1, "rate {rate}");
            }
            prev = err;
        }
    }

    #[test]
    fn ritz_projection_identity_and_interpolation() {
        let sys = assemble(&Mesh::new(Domain::Interval, 10).unwrap());
        // the elliptic projection of a smooth 1D function interpolates it
        let c = ritz_project(&sys, &SpaceData::Bubble).unwrap();
        for (d, cv) in c.iter().enumerate() {
            let x = sys.mesh.dof_coord(d)[0];
            assert!((cv - x * (1.0 - x)).abs() < 1e-11);
        }
        // distributional data is rejected
        assert!(ritz_project(&sys, &SpaceData::Dirac1d { x0: 0.5 }).is_err());
        assert!(ritz_project(&sys, &SpaceData::Indicator1d { a: 0.0, b: 0.5 }).is_err());
    }

    #[test]
    fn ritz_projection_rates() {
        let mut prev = (f64::NAN, f64::NAN);
        for k in [3usize, 4, 5, 6] {
            let sys = assemble(&Mesh::new(Domain::Interval, 1 << k).unwrap());
            let c = ritz_project(&sys, &SpaceData::SinTwoPi).unwrap();
            let l2 = error_vs_function(
                &sys,
                &c,
                &|p: &[f64]| (2.0 * PI * p[0]).sin(),
                None,
                ErrorNorm::L2,
            );
            let h1 = error_vs_function(
                &sys,
                &c,
                &|_p: &[f64]| 0.0,
                Some(&|p: &[f64]| vec![2.0 * PI * (2.0 * PI * p[0]).cos()]),
                ErrorNorm::H1,
            );
            if !prev.0.is_nan() {
                let rl2 = (prev.0 / l2).log2();
                let rh1 = (prev.1 / h1).log2();
                assert!((rl2 - 2.0).abs() < 0.1, "L2 rate {rl2}");
                assert!((rh1 - 1.0).abs() < 0.1, "H1 rate {rh1}");
            }
            prev = (l2, h1);
        }
    }

    #[test]
    fn generalized_eigenpairs_interval_closed_form() {
        let sys = assemble(&Mesh::new(Domain::Interval, 2).unwrap());
        let e = discrete_eigenpairs(&sys).unwrap();
        assert!((e.lambdas[0] - 12.0).abs() < 1e-10);

        let sys = assemble(&Mesh::new(Domain::Interval, 16).unwrap());
        let e = discrete_eigenpairs(&sys).unwrap();
        let h = sys.mesh.h();
        for (j, l) in e.lambdas.iter().enumerate() {
            let jp = (j + 1) as f64 * PI * h;
            let closed = 6.0 / (h * h) * (1.0 - jp.cos()) / (2.0 + jp.cos());
            assert!(
                (l - closed).abs() <= 1e-9 * closed,
                "j={j}: {l} vs {closed}"
            );
            // conforming discretization bounds eigenvalues from above
            let continuous = ((j + 1) as f64 * PI).powi(2);
            assert!(*l >= continuous - 1e-9);
        }
    }

    #[test]
    fn eigenvectors_m_orthonormal() {
        let sys = assemble(&Mesh::new(Domain::Interval, 12).unwrap());
        let e = discrete_eigenpairs(&sys).unwrap();
        for i in 0..e.n() {
            for j in i..e.n() {
                let dot = sys.mass.dot(e.vec(i), e.vec(j));
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-10, "({i},{j}): {dot}");
            }
        }
    }

    #[test]
    fn square_eigenvalues_bound_continuous_ones() {
        // min-max bound from below plus second-order convergence under
        // refinement for the first five eigenvalues
        let continuous = [2.0, 5.0, 5.0, 8.0, 10.0].map(|c| c * PI * PI);
        let mut errs = Vec::new();
        for n in [8usize, 16] {
            let sys = assemble(&Mesh::new(Domain::Square, n).unwrap());
            let e = discrete_eigenpairs(&sys).unwrap();
            let mut err = vec![0.0; continuous.len()];
            for (j, want) in continuous.iter().enumerate() {
                assert!(e.lambdas[j] >= want - 1e-9, "min-max violated at j={j}");
                err[j] = e.lambdas[j] - want;
            }
            errs.push(err);
        }
        for j in 0..continuous.len() {
            let ratio = errs[0][j] / errs[1][j];
            assert!(
                (ratio - 4.0).abs() < 1.0,
                "eigenvalue {j} not second order: ratio {ratio}"
            );
        }
    }

    #[test]
    fn discrete_norms_reduce_to_matrix_norms() {
        let sys = assemble(&Mesh::new(Domain::Interval, 10).unwrap());
        let e = discrete_eigenpairs(&sys).unwrap();
        let c: Vec<f64> = (0..sys.ndof()).map(|i| (i as f64 * 0.7).sin()).collect();
        let p0 = discrete_hs_norm(&sys, &e, &c, 0.0);
        assert!((p0 - sys.l2_norm(&c)).abs() < 1e-10);
        let p1 = discrete_hs_norm(&sys, &e, &c, 1.0);
        assert!((p1 - sys.h1_norm(&c)).abs() < 1e-10);
    }

    #[test]
    fn inverse_inequality_constant_stable_under_refinement() {
        // |psi|_{H^1} <= C h^{-1} |psi|_{L2} with C independent of h
        let mut worst = 0.0f64;
        let mut per_n = Vec::new();
        for n in [8usize, 16, 32, 64] {
            let sys = assemble(&Mesh::new(Domain::Interval, n).unwrap());
            let e = discrete_eigenpairs(&sys).unwrap();
            let mut local = 0.0f64;
            for trial in 0..5 {
                let c: Vec<f64> = (0..sys.ndof())
                    .map(|i| ((i * (trial + 2) + 1) as f64 * 0.37).sin())
                    .collect();
                let ratio = discrete_hs_norm(&sys, &e, &c, 1.0)
                    / discrete_hs_norm(&sys, &e, &c, 0.0)
                    * sys.mesh.h();
                local = local.max(ratio);
            }
            per_n.push(local);
            worst = worst.max(local);
        }
        for v in per_n {
            assert!(v <= worst && worst < 4.0, "C_h = {v}");
        }
    }

    #[test]
    fn half_domain_indicator_load_exact_on_square() {
        // with even resolution the jump line x = 1/2 is a mesh line; check
        // the load against per-triangle quadrature of the indicator
        let mesh = Mesh::new(Domain::Square, 4).unwrap();
        let data = SpaceData::Indicator2d {
            x0: 0.0,
            x1: 0.5,
            y0: 0.0,
            y1: 1.0,
        };
        let b = load_vector(&mesh, &data).unwrap();
        let h = mesh.h();
        let mut want = vec![0.0; mesh.ndof()];
        for tri in mesh.triangles() {
            let coords: Vec<[f64; 2]> =
                tri.iter().map(|&(i, j)| [i as f64 * h, j as f64 * h]).collect();
            let area = h * h / 2.0;
            for &(bc, w) in &TRI7 {
                let x = bc[0] * coords[0][0] + bc[1] * coords[1][0] + bc[2] * coords[2][0];
                let y = bc[0] * coords[0][1] + bc[1] * coords[1][1] + bc[2] * coords[2][1];
                let inside = x < 0.5 && y > 0.0 && y < 1.0;
                if !inside {
                    continue;
                }
                for (v, &(gi, gj)) in tri.iter().enumerate() {
                    if let Some(d) = mesh.dof_of(gi, gj) {
                        want[d] += w * area * bc[v];
                    }
                }
            }
        }
        for (a, b) in b.iter().zip(&want) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn box_boundary_load_matches_dense_sampling() {
        let mesh = Mesh::new(Domain::Square, 4).unwrap();
        let b = load_vector(&mesh, &SpaceData::BoxBoundaryMeasure { lo: 0.25, hi: 0.75 }).unwrap();
        // brute-force line sampling of each hat along the boundary
        let hat = |dof: usize, x: f64, y: f64| -> f64 {
            let h = mesh.h();
            let n = mesh.resolution;
            let ci = ((x / h).floor() as usize).min(n - 1);
            let cj = ((y / h).floor() as usize).min(n - 1);
            let xi = x / h - ci as f64;
            let eta = y / h - cj as f64;
            let nodes: [((usize, usize), f64); 3] = if xi >= eta {
                [
                    ((ci, cj), 1.0 - xi),
                    ((ci + 1, cj), xi - eta),
                    ((ci + 1, cj + 1), eta),
                ]
            } else {
                [
                    ((ci, cj), 1.0 - eta),
                    ((ci, cj + 1), eta - xi),
                    ((ci + 1, cj + 1), xi),
                ]
            };
            nodes
                .iter()
                .find(|((i, j), _)| mesh.dof_of(*i, *j) == Some(dof))
                .map_or(0.0, |(_, v)| *v)
        };
        let m = 40_000;
        for d in 0..mesh.ndof() {
            let mut acc = 0.0;
            for seg in 0..4 {
                for k in 0..m {
                    let s = 0.25 + 0.5 * (k as f64 + 0.5) / m as f64;
                    let (x, y) = match seg {
                        0 => (s, 0.25),
                        1 => (s, 0.75),
                        2 => (0.25, s),
                        _ => (0.75, s),
                    };
                    acc += hat(d, x, y) * 0.5 / m as f64;
                }
            }
            assert!((b[d] - acc).abs() < 1e-4, "dof {d}: {} vs {acc}", b[d]);
        }
    }

    #[test]
    fn eigen_cache_returns_shared_instances() {
        let a = system_with_eigen(Domain::Interval, 10).unwrap();
        let b = system_with_eigen(Domain::Interval, 10).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
    }

    #[test]
    fn dump_writes_all_files() {
        let sys = assemble(&Mesh::new(Domain::Interval, 4).unwrap());
        let dir = std::env::temp_dir().join("fracfem_dump_test");
        dump_system(&sys, &dir).unwrap();
        for f in ["nodes.txt", "cells.txt", "mass.coo", "stiffness.coo"] {
            assert!(dir.join(f).exists());
        }
        std::fs::remove_dir_all(&dir).ok();
    }
}
