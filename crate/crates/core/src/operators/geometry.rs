//! Per-element metric terms at GLL nodes and basis traces at arbitrary points.

use crate::basis::{invert_map, map_to_physical, node_index, Basis1D, BasisError};
use crate::geom::{self, det3, inv3, Mat3, Point3};
use crate::mesh::{face_axis, face_cross, Mesh};

#[derive(Debug, Clone)]
pub struct ElementGeometry {
    pub degree: usize,
    /// `jinv[q][j][i] = d xi_j / d x_i` at local node `q`.
    pub jinv: Vec<Mat3>,
    /// GLL weight times Jacobian determinant at each node.
    pub wdet: Vec<f64>,
    pub coords: Vec<Point3>,
    pub min_edge: f64,
}

impl ElementGeometry {
    pub fn new(corners: &[Point3; 8], basis: &Basis1D) -> Self {
        let n = basis.len();
        let mut jinv = Vec::with_capacity(n * n * n);
        let mut wdet = Vec::with_capacity(n * n * n);
        let mut coords = Vec::with_capacity(n * n * n);
        for c in 0..n {
            for b in 0..n {
                for a in 0..n {
                    let r = [basis.nodes[a], basis.nodes[b], basis.nodes[c]];
                    let (x, jac) = map_to_physical(corners, r);
                    let det = det3(&jac);
                    jinv.push(inv3(&jac));
                    wdet.push(basis.weights[a] * basis.weights[b] * basis.weights[c] * det);
                    coords.push(x);
                }
            }
        }
        const EDGES: [(usize, usize); 12] = [
            (0, 1),
            (1, 2),
            (2, 3),
            (3, 0),
            (4, 5),
            (5, 6),
            (6, 7),
            (7, 4),
            (0, 4),
            (1, 5),
            (2, 6),
            (3, 7),
        ];
        let min_edge = EDGES
            .iter()
            .map(|&(i, j)| geom::dist(corners[i], corners[j]))
            .fold(f64::INFINITY, f64::min);
        Self {
            degree: basis.degree,
            jinv,
            wdet,
            coords,
            min_edge,
        }
    }

    pub fn n1d(&self) -> usize {
        self.degree + 1
    }
}

/// Values and physical gradients of all local basis functions of one element
/// at a single physical point.
#[derive(Debug, Clone)]
pub struct Trace {
    pub element: usize,
    pub phi: Vec<f64>,
    pub grad: Vec<Point3>,
}

impl Trace {
    /// Evaluates the trace at `x`, which must lie on local face `local_face`
    /// (the face coordinate is snapped to exactly ±1).
    pub fn on_face(
        mesh: &Mesh,
        basis: &Basis1D,
        element: usize,
        local_face: usize,
        x: Point3,
    ) -> Result<Self, BasisError> {
        let corners = mesh.corners(element);
        let mut r = invert_map(&corners, x)?;
        let (axis, sign) = face_axis(local_face);
        r[axis] = sign;
        for v in r.iter_mut() {
            *v = v.clamp(-1.0, 1.0);
        }
        Ok(Self::at_reference(&corners, basis, element, r))
    }

    pub fn at_reference(corners: &[Point3; 8], basis: &Basis1D, element: usize, r: Point3) -> Self {
        let n = basis.len();
        let (_, jac) = map_to_physical(corners, r);
        let jinv = inv3(&jac);
        let (va, da) = basis.eval(r[0]);
        let (vb, db) = basis.eval(r[1]);
        let (vc, dc) = basis.eval(r[2]);
        let mut phi = vec![0.0; n * n * n];
        let mut grad = vec![[0.0; 3]; n * n * n];
        for c in 0..n {
            for b in 0..n {
                for a in 0..n {
                    let q = node_index(n, a, b, c);
                    phi[q] = va[a] * vb[b] * vc[c];
                    let dref = [da[a] * vb[b] * vc[c], va[a] * db[b] * vc[c], va[a] * vb[b] * dc[c]];
                    let mut g = [0.0; 3];
                    for i in 0..3 {
                        g[i] = jinv[0][i] * dref[0] + jinv[1][i] * dref[1] + jinv[2][i] * dref[2];
                    }
                    grad[q] = g;
                }
            }
        }
        Self { element, phi, grad }
    }

    /// Interpolated vector field value from element-local nodal values.
    pub fn value3(&self, nodes: &[usize], u: &[f64]) -> Point3 {
        let mut v = [0.0; 3];
        for (q, &g) in nodes.iter().enumerate() {
            let p = self.phi[q];
            if p != 0.0 {
                v[0] += p * u[3 * g];
                v[1] += p * u[3 * g + 1];
                v[2] += p * u[3 * g + 2];
            }
        }
        v
    }

    /// `G[c][i] = d u_c / d x_i`.
    pub fn gradient3(&self, nodes: &[usize], u: &[f64]) -> Mat3 {
        let mut gm = [[0.0; 3]; 3];
        for (q, &g) in nodes.iter().enumerate() {
            let d = self.grad[q];
            for c in 0..3 {
                let uc = u[3 * g + c];
                for i in 0..3 {
                    gm[c][i] += uc * d[i];
                }
            }
        }
        gm
    }

    pub fn value1(&self, nodes: &[usize], psi: &[f64]) -> f64 {
        nodes.iter().enumerate().map(|(q, &g)| self.phi[q] * psi[g]).sum()
    }
}

/// GLL nodes of a local face with surface quadrature weight and outward unit normal.
pub fn face_nodes(mesh: &Mesh, basis: &Basis1D, element: usize, local_face: usize) -> Vec<(usize, f64, Point3)> {
    let corners = mesh.corners(element);
    let n = basis.len();
    let (axis, sign) = face_axis(local_face);
    let fixed = if sign < 0.0 { 0 } else { n - 1 };
    let mut out = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            let (idx, w) = match axis {
                0 => ([fixed, i, j], basis.weights[i] * basis.weights[j]),
                1 => ([i, fixed, j], basis.weights[i] * basis.weights[j]),
                _ => ([i, j, fixed], basis.weights[i] * basis.weights[j]),
            };
            let r = [basis.nodes[idx[0]], basis.nodes[idx[1]], basis.nodes[idx[2]]];
            let (_, jac) = map_to_physical(&corners, r);
            let nv = face_cross(&jac, axis, sign);
            let area = geom::norm(nv);
            out.push((
                node_index(n, idx[0], idx[1], idx[2]),
                w * area,
                geom::scale(nv, 1.0 / area),
            ));
        }
    }
    out
}
