//! Gauss-Lobatto-Legendre collocation on the reference cube `[-1, 1]^3`.
//!
//! Nodal values live on the tensor grid of GLL points, so the quadrature used
//! for mass integrals coincides with the interpolation nodes and the mass
//! matrix is diagonal.

use crate::geom::{det3, inv3, Mat3, Point3};
use thiserror::Error;

pub const MAX_DEGREE: usize = 12;

#[derive(Debug, Error, PartialEq)]
pub enum BasisError {
    #[error("polynomial degree {0} outside supported range 1..={MAX_DEGREE}")]
    DegreeOutOfRange(usize),
    #[error("point {point:?} is outside the element (reference coordinates {reference:?})")]
    Outside { point: Point3, reference: Point3 },
    #[error("inverse map did not converge for point {0:?}")]
    NotConverged(Point3),
}

/// Legendre polynomial `P_n(x)` and its derivative.
pub fn legendre(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p0, mut p1) = (1.0, x);
    let (mut d0, mut d1) = (0.0, 1.0);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        let d2 = d0 + (2.0 * kf - 1.0) * p1;
        p0 = p1;
        p1 = p2;
        d0 = d1;
        d1 = d2;
    }
    (p1, d1)
}

/// Gauss-Legendre rule with `n` points on `[-1, 1]`, exact to degree `2n - 1`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = -(std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// One-dimensional GLL nodal basis of degree `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis1D {
    pub degree: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// `deriv[i][j]` is the derivative of the j-th Lagrange polynomial at node i.
    pub deriv: Vec<Vec<f64>>,
}

/// Builds the GLL basis of degree `p`.
///
/// Interior nodes are the roots of `P_{p+1} - P_{p-1}` (proportional to
/// `(1 - x^2) P'_p`), found by Newton iteration from Chebyshev-Lobatto guesses.
pub fn gll(p: usize) -> Result<Basis1D, BasisError> {
    if !(1..=MAX_DEGREE).contains(&p) {
        return Err(BasisError::DegreeOutOfRange(p));
    }
    let n = p + 1;
    let mut nodes = vec![0.0; n];
    nodes[0] = -1.0;
    nodes[p] = 1.0;
    for i in 1..p {
        let mut x = -(std::f64::consts::PI * i as f64 / p as f64).cos();
        for _ in 0..100 {
            let (pp1, dpp1) = legendre(p + 1, x);
            let (pm1, dpm1) = legendre(p - 1, x);
            let dx = (pp1 - pm1) / (dpp1 - dpm1);
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = x;
    }
    // enforce exact symmetry
    for i in 0..n / 2 {
        let s = 0.5 * (nodes[p - i] - nodes[i]);
        nodes[i] = -s;
        nodes[p - i] = s;
    }
    if n % 2 == 1 {
        nodes[p / 2] = 0.0;
    }
    let pf = p as f64;
    let weights: Vec<f64> = nodes
        .iter()
        .map(|&x| {
            let (lp, _) = legendre(p, x);
            2.0 / (pf * (pf + 1.0) * lp * lp)
        })
        .collect();

    let bary: Vec<f64> = (0..n)
        .map(|j| {
            let prod: f64 = (0..n).filter(|&k| k != j).map(|k| nodes[j] - nodes[k]).product();
            1.0 / prod
        })
        .collect();
    let mut deriv = vec![vec![0.0; n]; n];
    for i in 0..n {
        let mut diag = 0.0;
        for j in 0..n {
            if i != j {
                let d = bary[j] / bary[i] / (nodes[i] - nodes[j]);
                deriv[i][j] = d;
                diag -= d;
            }
        }
        deriv[i][i] = diag;
    }
    Ok(Basis1D {
        degree: p,
        nodes,
        weights,
        deriv,
    })
}

impl Basis1D {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Lagrange basis values and derivatives at an arbitrary point.
    pub fn eval(&self, x: f64) -> (Vec<f64>, Vec<f64>) {
        let n = self.len();
        let nodes = &self.nodes;
        let mut values = vec![0.0; n];
        let mut derivs = vec![0.0; n];
        for j in 0..n {
            let denom: f64 = (0..n).filter(|&k| k != j).map(|k| nodes[j] - nodes[k]).product();
            let mut val = 1.0;
            for k in (0..n).filter(|&k| k != j) {
                val *= x - nodes[k];
            }
            let mut der = 0.0;
            for m in (0..n).filter(|&m| m != j) {
                let mut prod = 1.0;
                for k in (0..n).filter(|&k| k != j && k != m) {
                    prod *= x - nodes[k];
                }
                der += prod;
            }
            values[j] = val / denom;
            derivs[j] = der / denom;
        }
        (values, derivs)
    }
}

/// Tensor-product index of local node `(a, b, c)` for `n = p + 1` points per direction.
#[inline]
pub fn node_index(n: usize, a: usize, b: usize, c: usize) -> usize {
    a + n * (b + n * c)
}

/// Reference coordinates of the 8 hexahedron corners in file ordering.
pub const CORNER_SIGNS: [[f64; 3]; 8] = [
    [-1.0, -1.0, -1.0],
    [1.0, -1.0, -1.0],
    [1.0, 1.0, -1.0],
    [-1.0, 1.0, -1.0],
    [-1.0, -1.0, 1.0],
    [1.0, -1.0, 1.0],
    [1.0, 1.0, 1.0],
    [-1.0, 1.0, 1.0],
];

/// Trilinear map of a reference point; returns the physical point and
/// `J[i][j] = d x_i / d xi_j`.
pub fn map_to_physical(corners: &[Point3; 8], r: Point3) -> (Point3, Mat3) {
    let mut x = [0.0; 3];
    let mut jac = [[0.0; 3]; 3];
    for (corner, s) in corners.iter().zip(CORNER_SIGNS.iter()) {
        let f = [1.0 + s[0] * r[0], 1.0 + s[1] * r[1], 1.0 + s[2] * r[2]];
        let n = 0.125 * f[0] * f[1] * f[2];
        let dn = [
            0.125 * s[0] * f[1] * f[2],
            0.125 * f[0] * s[1] * f[2],
            0.125 * f[0] * f[1] * s[2],
        ];
        for i in 0..3 {
            x[i] += n * corner[i];
            for j in 0..3 {
                jac[i][j] += dn[j] * corner[i];
            }
        }
    }
    (x, jac)
}

/// Largest corner-to-corner distance of a hexahedron.
pub fn corner_diameter(corners: &[Point3; 8]) -> f64 {
    let mut d: f64 = 0.0;
    for i in 0..8 {
        for j in i + 1..8 {
            d = d.max(crate::geom::dist(corners[i], corners[j]));
        }
    }
    d
}

/// Newton inversion of the trilinear map.
///
/// Converges when the physical residual drops below `1e-12 h` with `h` the
/// element diameter; points farther than `1e-8` outside the reference cube
/// are reported as [`BasisError::Outside`].
pub fn invert_map(corners: &[Point3; 8], target: Point3) -> Result<Point3, BasisError> {
    let h = corner_diameter(corners);
    let mut r = [0.0; 3];
    for _ in 0..50 {
        let (x, jac) = map_to_physical(corners, r);
        let res = crate::geom::sub(x, target);
        if crate::geom::norm(res) < 1e-12 * h {
            if r.iter().any(|v| v.abs() > 1.0 + 1e-8) {
                return Err(BasisError::Outside {
                    point: target,
                    reference: r,
                });
            }
            return Ok(r);
        }
        if det3(&jac) <= 0.0 {
            break;
        }
        let inv = inv3(&jac);
        let step = crate::geom::mat_vec(&inv, res);
        for k in 0..3 {
            r[k] -= step[k];
        }
        if r.iter().any(|v| !v.is_finite() || v.abs() > 10.0) {
            break;
        }
    }
    Err(BasisError::NotConverged(target))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Bisection root of `P'_p` in an interval containing exactly one sign change.
    fn bisect_dlegendre(p: usize, mut lo: f64, mut hi: f64) -> f64 {
        let f = |x: f64| legendre(p, x).1;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(lo) * f(mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn degree_one_is_trapezoid() {
        let b = gll(1).unwrap();
        assert_eq!(b.nodes, vec![-1.0, 1.0]);
        assert!((b.weights[0] - 1.0).abs() < 1e-15 && (b.weights[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn degree_two_weights_from_moment_equations() {
        // Solve sum w_i x_i^k = int x^k for k = 0..2 on nodes {-1, 0, 1}:
        // w0 + w1 + w2 = 2, -w0 + w2 = 0, w0 + w2 = 2/3.
        let w0 = (2.0 / 3.0) / 2.0;
        let w2 = w0;
        let w1 = 2.0 - w0 - w2;
        let b = gll(2).unwrap();
        assert_eq!(b.nodes[1], 0.0);
        for (got, want) in b.weights.iter().zip([w0, w1, w2]) {
            assert!((got - want).abs() < 1e-14, "{got} vs {want}");
        }
        let q: f64 = b.nodes.iter().zip(&b.weights).map(|(x, w)| w * x * x).sum();
        assert!((q - 2.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn degree_three_nodes_match_bisection_roots() {
        let b = gll(3).unwrap();
        let r_lo = bisect_dlegendre(3, -0.99, -0.01);
        let r_hi = bisect_dlegendre(3, 0.01, 0.99);
        assert!((b.nodes[1] - r_lo).abs() < 1e-14);
        assert!((b.nodes[2] - r_hi).abs() < 1e-14);
        assert!((r_hi - 1.0 / 5f64.sqrt()).abs() < 1e-14);
        // exact to degree 5
        for k in 0..=5 {
            let q: f64 = b.nodes.iter().zip(&b.weights).map(|(x, w)| w * x.powi(k)).sum();
            let exact = if k % 2 == 0 { 2.0 / (k as f64 + 1.0) } else { 0.0 };
            assert!((q - exact).abs() < 1e-14, "k={k}");
        }
    }

    #[test]
    fn degree_range_is_enforced() {
        assert_eq!(gll(0), Err(BasisError::DegreeOutOfRange(0)));
        assert_eq!(gll(13), Err(BasisError::DegreeOutOfRange(13)));
    }

    #[test]
    fn basis_invariants_all_degrees() {
        for p in 1..=MAX_DEGREE {
            let b = gll(p).unwrap();
            let wsum: f64 = b.weights.iter().sum();
            assert!((wsum - 2.0).abs() < 1e-14, "p={p}");
            for i in 0..=p {
                assert!((b.nodes[i] + b.nodes[p - i]).abs() < 1e-15);
                assert!(b.weights[i] > 0.0);
                let rs: f64 = b.deriv[i].iter().sum();
                assert!(rs.abs() < 1e-12, "p={p} row {i}");
            }
            // quadrature exactness to 2p - 1
            for k in 0..2 * p {
                let q: f64 = b.nodes.iter().zip(&b.weights).map(|(x, w)| w * x.powi(k as i32)).sum();
                let exact = if k % 2 == 0 { 2.0 / (k as f64 + 1.0) } else { 0.0 };
                assert!((q - exact).abs() < 1e-12, "p={p} k={k}");
            }
            // derivative exactness on monomials
            for k in 0..=p {
                for i in 0..=p {
                    let d: f64 = (0..=p).map(|j| b.deriv[i][j] * b.nodes[j].powi(k as i32)).sum();
                    let exact = if k == 0 {
                        0.0
                    } else {
                        k as f64 * b.nodes[i].powi(k as i32 - 1)
                    };
                    assert!((d - exact).abs() < 1e-11, "p={p} k={k} i={i}: {d} vs {exact}");
                }
            }
        }
    }

    #[test]
    fn eval_reproduces_polynomials_and_nodal_derivatives() {
        let b = gll(5).unwrap();
        let poly = |x: f64| 0.3 - x + 2.0 * x.powi(3) - 0.5 * x.powi(5);
        let dpoly = |x: f64| -1.0 + 6.0 * x.powi(2) - 2.5 * x.powi(4);
        let samples: Vec<f64> = b.nodes.iter().map(|&x| poly(x)).collect();
        for &x in &[-0.93, -0.2, 0.0, 0.41, 0.999] {
            let (v, d) = b.eval(x);
            let iv: f64 = v.iter().zip(&samples).map(|(a, s)| a * s).sum();
            let id: f64 = d.iter().zip(&samples).map(|(a, s)| a * s).sum();
            assert!((iv - poly(x)).abs() < 1e-12);
            assert!((id - dpoly(x)).abs() < 1e-11);
        }
        let (v, d) = b.eval(b.nodes[2]);
        for j in 0..6 {
            assert!((v[j] - if j == 2 { 1.0 } else { 0.0 }).abs() < 1e-15);
            assert!((d[j] - b.deriv[2][j]).abs() < 1e-11);
        }
    }

    fn unit_cube() -> [Point3; 8] {
        let mut c = [[0.0; 3]; 8];
        for (i, s) in CORNER_SIGNS.iter().enumerate() {
            c[i] = [0.5 * (s[0] + 1.0), 0.5 * (s[1] + 1.0), 0.5 * (s[2] + 1.0)];
        }
        c
    }

    #[test]
    fn affine_map_of_unit_cube() {
        let c = unit_cube();
        let (x, j) = map_to_physical(&c, [0.0, 0.0, 0.0]);
        assert_eq!(x, [0.5, 0.5, 0.5]);
        for a in 0..3 {
            for b in 0..3 {
                assert_eq!(j[a][b], if a == b { 0.5 } else { 0.0 });
            }
        }
        let (x0, _) = map_to_physical(&c, [-1.0, -1.0, -1.0]);
        assert_eq!(x0, c[0]);
    }

    fn sheared() -> [Point3; 8] {
        let mut c = unit_cube();
        for corner in c.iter_mut().skip(4) {
            corner[0] += 0.2;
        }
        c
    }

    #[test]
    fn sheared_hex_blends_linearly_in_height() {
        // x = 0.5 + 0.2 * (1 + zeta) / 2 along the vertical centre line
        let c = sheared();
        let (x, _) = map_to_physical(&c, [0.0, 0.0, 0.0]);
        assert!((x[0] - 0.6).abs() < 1e-15);
        let (x, _) = map_to_physical(&c, [0.0, 0.0, 1.0]);
        assert!((x[0] - 0.7).abs() < 1e-15);
    }

    #[test]
    fn invert_corners_centroid_and_interior() {
        let c = unit_cube();
        for (i, s) in CORNER_SIGNS.iter().enumerate() {
            let r = invert_map(&c, c[i]).unwrap();
            for k in 0..3 {
                assert!((r[k] - s[k]).abs() < 1e-12);
            }
        }
        let r = invert_map(&c, [0.5, 0.5, 0.5]).unwrap();
        assert!(r.iter().all(|v| v.abs() < 1e-14));

        let mut s = sheared();
        s[6][1] += 0.15;
        s[2][2] -= 0.1;
        for &r0 in &[[0.3, -0.7, 0.1], [-0.95, 0.9, 0.5], [0.0, 0.0, -1.0]] {
            let (x, _) = map_to_physical(&s, r0);
            let r = invert_map(&s, x).unwrap();
            let (back, _) = map_to_physical(&s, r);
            assert!(crate::geom::dist(back, x) < 1e-10);
        }
        assert!(matches!(
            invert_map(&c, [2.0, 0.5, 0.5]),
            Err(BasisError::Outside { .. })
        ));
    }

    #[test]
    fn gauss_legendre_is_exact() {
        for n in 1..10 {
            let (x, w) = gauss_legendre(n);
            for k in 0..2 * n {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k as i32)).sum();
                let exact = if k % 2 == 0 { 2.0 / (k as f64 + 1.0) } else { 0.0 };
                assert!((q - exact).abs() < 1e-13, "n={n} k={k}");
            }
        }
    }
}
