//! Sum-factorised element stiffness kernels.

use super::geometry::ElementGeometry;

/// Reference derivative of nodal values along direction `dir`:
/// `out(a,b,c) = sum_k D[i_dir][k] v(.. k ..)`.
#[inline]
fn ref_derivs<const C: usize>(n: usize, d: &[f64], v: &[[f64; C]], out: &mut [[[f64; C]; 3]]) {
    for c in 0..n {
        for b in 0..n {
            for a in 0..n {
                let q = a + n * (b + n * c);
                let mut acc = [[0.0; C]; 3];
                for k in 0..n {
                    let qa = k + n * (b + n * c);
                    let qb = a + n * (k + n * c);
                    let qc = a + n * (b + n * k);
                    let da = d[a * n + k];
                    let db = d[b * n + k];
                    let dc = d[c * n + k];
                    for comp in 0..C {
                        acc[0][comp] += da * v[qa][comp];
                        acc[1][comp] += db * v[qb][comp];
                        acc[2][comp] += dc * v[qc][comp];
                    }
                }
                out[q] = acc;
            }
        }
    }
}

/// Applies the transposed reference derivatives to fluxes `f[q][comp][j]`
/// and adds the result into `out`.
#[inline]
fn ref_derivs_transpose<const C: usize>(n: usize, d: &[f64], f: &[[[f64; 3]; C]], out: &mut [[f64; C]]) {
    for c in 0..n {
        for b in 0..n {
            for a in 0..n {
                let q = a + n * (b + n * c);
                let mut acc = [0.0; C];
                for k in 0..n {
                    let qa = k + n * (b + n * c);
                    let qb = a + n * (k + n * c);
                    let qc = a + n * (b + n * k);
                    let da = d[k * n + a];
                    let db = d[k * n + b];
                    let dc = d[k * n + c];
                    for comp in 0..C {
                        acc[comp] += da * f[qa][comp][0] + db * f[qb][comp][1] + dc * f[qc][comp][2];
                    }
                }
                for comp in 0..C {
                    out[q][comp] += acc[comp];
                }
            }
        }
    }
}

/// Scratch buffers reused across elements of one degree.
#[derive(Debug, Default)]
pub struct Scratch {
    dref3: Vec<[[f64; 3]; 3]>,
    flux3: Vec<[[f64; 3]; 3]>,
    dref1: Vec<[[f64; 1]; 3]>,
    flux1: Vec<[[f64; 3]; 1]>,
}

/// `out += K_e u` for one element. `d` is the row-major derivative matrix.
pub fn elastic_element(
    geo: &ElementGeometry,
    d: &[f64],
    lambda: f64,
    mu: f64,
    u: &[[f64; 3]],
    out: &mut [[f64; 3]],
    s: &mut Scratch,
) {
    let n = geo.n1d();
    let nq = n * n * n;
    s.dref3.resize(nq, [[0.0; 3]; 3]);
    s.flux3.resize(nq, [[0.0; 3]; 3]);
    ref_derivs::<3>(n, d, u, &mut s.dref3);
    for q in 0..nq {
        let ji = &geo.jinv[q];
        let dr = &s.dref3[q];
        // G[c][i] = du_c/dx_i
        let mut g = [[0.0; 3]; 3];
        for c in 0..3 {
            for i in 0..3 {
                g[c][i] = dr[0][c] * ji[0][i] + dr[1][c] * ji[1][i] + dr[2][c] * ji[2][i];
            }
        }
        let tr = g[0][0] + g[1][1] + g[2][2];
        let mut sig = [[0.0; 3]; 3];
        for c in 0..3 {
            for i in 0..3 {
                sig[c][i] = mu * (g[c][i] + g[i][c]);
            }
            sig[c][c] += lambda * tr;
        }
        let w = geo.wdet[q];
        let mut f = [[0.0; 3]; 3];
        for c in 0..3 {
            for j in 0..3 {
                f[c][j] = w * (sig[c][0] * ji[j][0] + sig[c][1] * ji[j][1] + sig[c][2] * ji[j][2]);
            }
        }
        s.flux3[q] = f;
    }
    ref_derivs_transpose::<3>(n, d, &s.flux3, out);
}

/// `out += K_a psi` for one element (integrand `grad psi . grad phi`).
pub fn acoustic_element(geo: &ElementGeometry, d: &[f64], psi: &[[f64; 1]], out: &mut [[f64; 1]], s: &mut Scratch) {
    let n = geo.n1d();
    let nq = n * n * n;
    s.dref1.resize(nq, [[0.0; 1]; 3]);
    s.flux1.resize(nq, [[0.0; 3]; 1]);
    ref_derivs::<1>(n, d, psi, &mut s.dref1);
    for q in 0..nq {
        let ji = &geo.jinv[q];
        let dr = &s.dref1[q];
        let mut g = [0.0; 3];
        for i in 0..3 {
            g[i] = dr[0][0] * ji[0][i] + dr[1][0] * ji[1][i] + dr[2][0] * ji[2][i];
        }
        let w = geo.wdet[q];
        let mut f = [0.0; 3];
        for j in 0..3 {
            f[j] = w * (g[0] * ji[j][0] + g[1] * ji[j][1] + g[2] * ji[j][2]);
        }
        s.flux1[q] = [f];
    }
    ref_derivs_transpose::<1>(n, d, &s.flux1, out);
}
