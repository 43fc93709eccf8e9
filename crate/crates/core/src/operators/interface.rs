//! Interface and boundary terms evaluated on face quadrature points.

use super::geometry::Trace;
use crate::geom::{self, Mat3, Point3};

/// `S(A) = lambda tr(A) I + mu (A + A^T)`.
#[inline]
pub fn hooke(g: &Mat3, lambda: f64, mu: f64) -> Mat3 {
    let tr = g[0][0] + g[1][1] + g[2][2];
    let mut s = [[0.0; 3]; 3];
    for c in 0..3 {
        for i in 0..3 {
            s[c][i] = mu * (g[c][i] + g[i][c]);
        }
        s[c][c] += lambda * tr;
    }
    s
}

#[inline]
fn mat_vec(m: &Mat3, v: Point3) -> Point3 {
    [geom::dot(m[0], v), geom::dot(m[1], v), geom::dot(m[2], v)]
}

/// Harmonic mean `2ab / (a + b)`.
pub fn harmonic_mean(a: f64, b: f64) -> f64 {
    2.0 * a * b / (a + b)
}

/// One quadrature point of a DG face pair with both traces.
#[derive(Debug, Clone)]
pub struct DgPoint {
    pub weight: f64,
    /// From the minus side toward the plus side.
    pub normal: Point3,
    pub chi: f64,
    pub minus: Trace,
    pub plus: Trace,
    pub lame_minus: (f64, f64),
    pub lame_plus: (f64, f64),
}

impl DgPoint {
    /// Adds `-(A u)` restricted to this point into `out`, where `A` is the
    /// symmetric interior-penalty bilinear form with jump `(u- - u+) (x) n`.
    pub fn apply(&self, nodes_m: &[usize], nodes_p: &[usize], u: &[f64], out: &mut [f64]) {
        let w = self.weight;
        let n = self.normal;
        let (lm, mm) = self.lame_minus;
        let (lp, mp) = self.lame_plus;
        let um = self.minus.value3(nodes_m, u);
        let up = self.plus.value3(nodes_p, u);
        let sm = hooke(&self.minus.gradient3(nodes_m, u), lm, mm);
        let sp = hooke(&self.plus.gradient3(nodes_p, u), lp, mp);
        let mut mean = [[0.0; 3]; 3];
        for c in 0..3 {
            for i in 0..3 {
                mean[c][i] = 0.5 * (sm[c][i] + sp[c][i]);
            }
        }
        let t = mat_vec(&mean, n);
        let du = geom::sub(um, up);
        let mut jump = [[0.0; 3]; 3];
        for c in 0..3 {
            for i in 0..3 {
                jump[c][i] = du[c] * n[i];
            }
        }
        let s_jm = hooke(&jump, lm, mm);
        let s_jp = hooke(&jump, lp, mp);
        // value part: phi * (t - chi du), gradient part: 0.5 * S(jump) grad phi
        let val = [
            w * (t[0] - self.chi * du[0]),
            w * (t[1] - self.chi * du[1]),
            w * (t[2] - self.chi * du[2]),
        ];
        for (q, &g) in nodes_m.iter().enumerate() {
            let phi = self.minus.phi[q];
            let gm = mat_vec(&s_jm, self.minus.grad[q]);
            for c in 0..3 {
                out[3 * g + c] += phi * val[c] + 0.5 * w * gm[c];
            }
        }
        for (q, &g) in nodes_p.iter().enumerate() {
            let phi = self.plus.phi[q];
            let gp = mat_vec(&s_jp, self.plus.grad[q]);
            for c in 0..3 {
                out[3 * g + c] += -phi * val[c] + 0.5 * w * gp[c];
            }
        }
    }
}

/// One quadrature point of an elastic/acoustic interface.
#[derive(Debug, Clone)]
pub struct EaPoint {
    pub weight: f64,
    /// Outward from the elastic side (into the fluid).
    pub normal: Point3,
    pub rho_a: f64,
    /// Nonzero elastic basis values `(global node, phi)`.
    pub elastic: Vec<(usize, f64)>,
    /// Nonzero acoustic basis values `(global node, phi)`.
    pub acoustic: Vec<(usize, f64)>,
}

impl EaPoint {
    /// Elastic load `-rho_a psi_tilde_dot n` tested against `w`.
    pub fn elastic_load(&self, psi_tilde_dot: &[f64], out: &mut [f64]) {
        let p: f64 = self.acoustic.iter().map(|&(g, phi)| phi * psi_tilde_dot[g]).sum();
        let s = -self.weight * self.rho_a * p;
        for &(g, phi) in &self.elastic {
            for c in 0..3 {
                out[3 * g + c] += s * phi * self.normal[c];
            }
        }
    }

    /// Acoustic load `u_dot . n` tested against `phi`.
    pub fn acoustic_load(&self, u_dot: &[f64], out: &mut [f64]) {
        let mut v = [0.0; 3];
        for &(g, phi) in &self.elastic {
            for c in 0..3 {
                v[c] += phi * u_dot[3 * g + c];
            }
        }
        let s = self.weight * geom::dot(v, self.normal);
        for &(g, phi) in &self.acoustic {
            out[g] += s * phi;
        }
    }
}

/// Absorbing-boundary entry of one elastic face node.
#[derive(Debug, Clone, Copy)]
pub struct AbcElastic {
    pub node: usize,
    pub weight: f64,
    pub normal: Point3,
    pub rho_vp: f64,
    pub rho_vs: f64,
}

impl AbcElastic {
    /// Adds the viscous traction `-[rho vp (v.n) n + rho vs v_t]` times the weight.
    pub fn apply(&self, v: &[f64], out: &mut [f64]) {
        let g = self.node;
        let vel = [v[3 * g], v[3 * g + 1], v[3 * g + 2]];
        let vn = geom::dot(vel, self.normal);
        for c in 0..3 {
            let normal = vn * self.normal[c];
            let tangential = vel[c] - normal;
            out[3 * g + c] -= self.weight * (self.rho_vp * normal + self.rho_vs * tangential);
        }
    }
}

/// Absorbing-boundary entry of one acoustic face node: `-(w / c) psi_dot`.
#[derive(Debug, Clone, Copy)]
pub struct AbcAcoustic {
    pub node: usize,
    pub weight_over_c: f64,
}
