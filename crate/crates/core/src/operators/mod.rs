//! Matrix-free evaluation of the semi-discrete coupled system.
//!
//! Elastic vectors are laid out node-major (`3 * node + component`), acoustic
//! vectors have one entry per node. Every `apply_*` method *adds* into its
//! output so callers can accumulate a right-hand side in place.

mod dofmap;
mod geometry;
mod interface;
mod kernels;

use std::collections::BTreeMap;
use std::ops::Range;

use thiserror::Error;

use crate::basis::{gll, Basis1D, BasisError};
use crate::materials::{assign_materials, Material, MaterialError, MaterialTable};
use crate::mesh::{FaceTag, Mesh, MeshError, Physics};

pub use dofmap::DofMap;
pub use geometry::{face_nodes, ElementGeometry, Trace};
pub use interface::{harmonic_mean, hooke, AbcAcoustic, AbcElastic, DgPoint, EaPoint};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Material(#[from] MaterialError),
    #[error(transparent)]
    Basis(#[from] BasisError),
    #[error("{physics:?} node {node} has zero mass")]
    OrphanDof { physics: Physics, node: usize },
    #[error("penalty multiplier must be positive (got {0})")]
    BadPenalty(f64),
    #[error("interface face ({element}, {face}): quadrature point off the element: {source}")]
    Trace {
        element: usize,
        face: usize,
        #[source]
        source: BasisError,
    },
}

#[derive(Debug, Clone, Copy)]
pub struct ModelConfig {
    /// Penalty multiplier `beta` in `chi = beta {lambda + 2 mu}_A p_F^2 / h_F`.
    pub beta: f64,
    /// Worker threads for operator application; 0 or 1 runs inline.
    pub workers: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { beta: 1.0, workers: 1 }
    }
}

/// Diagonal mass vectors, one entry per node.
#[derive(Debug, Clone)]
pub struct MassVectors {
    pub e2: Vec<f64>,
    pub e1: Vec<f64>,
    pub e0: Vec<f64>,
    pub a2: Vec<f64>,
}

/// Discretised model: mesh, materials, numbering and all precomputed
/// operator data.
#[derive(Debug)]
pub struct SemModel {
    pub mesh: Mesh,
    pub materials: Vec<Material>,
    pub bases: BTreeMap<usize, Basis1D>,
    deriv: BTreeMap<usize, Vec<f64>>,
    pub dofs: DofMap,
    pub geometry: Vec<ElementGeometry>,
    pub mass: MassVectors,
    pub dg: Vec<DgPoint>,
    pub ea: Vec<EaPoint>,
    pub abc_e: Vec<AbcElastic>,
    pub abc_a: Vec<AbcAcoustic>,
    /// `rho_a` of each acoustic node's block.
    pub acoustic_rho: Vec<f64>,
    /// `b / c^2` of each acoustic node's block.
    pub acoustic_damp: Vec<f64>,
    pub config: ModelConfig,
    elastic_elems: Vec<usize>,
    acoustic_elems: Vec<usize>,
}

/// Splits `0..n` into `workers` contiguous chunks, runs `f` on each with a
/// private zeroed buffer and sums the buffers into `out` in chunk order, so
/// results are bitwise reproducible for a fixed worker count.
pub fn par_accumulate<F>(workers: usize, n: usize, out: &mut [f64], f: F)
where
    F: Fn(Range<usize>, &mut [f64]) + Sync,
{
    if workers <= 1 || n < 2 * workers {
        f(0..n, out);
        return;
    }
    let chunk = n.div_ceil(workers);
    let len = out.len();
    let buffers: Vec<Vec<f64>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let f = &f;
                s.spawn(move || {
                    let mut buf = vec![0.0; len];
                    let lo = (w * chunk).min(n);
                    let hi = ((w + 1) * chunk).min(n);
                    f(lo..hi, &mut buf);
                    buf
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("worker panicked"))
            .collect()
    });
    for buf in &buffers {
        for (o, b) in out.iter_mut().zip(buf) {
            *o += b;
        }
    }
}

impl SemModel {
    /// Assigns materials from the table and builds the model.
    pub fn from_table(mesh: Mesh, table: &MaterialTable, config: ModelConfig) -> Result<Self, ModelError> {
        let materials = assign_materials(&mesh, table)?;
        Self::new(mesh, materials, config)
    }

    /// Builds the model; `materials` holds one entry per element. The mesh
    /// must already be paired (see [`crate::mesh::pair_interfaces`]).
    pub fn new(mesh: Mesh, materials: Vec<Material>, config: ModelConfig) -> Result<Self, ModelError> {
        if !(config.beta > 0.0) {
            return Err(ModelError::BadPenalty(config.beta));
        }
        for (i, m) in materials.iter().enumerate() {
            if m.physics() != mesh.physics_of(i) {
                return Err(MaterialError::PhysicsMismatch {
                    element: i,
                    expected: mesh.physics_of(i),
                    found: m.physics(),
                }
                .into());
            }
        }
        let mut bases = BTreeMap::new();
        for e in &mesh.elements {
            if !bases.contains_key(&e.degree) {
                bases.insert(e.degree, gll(e.degree)?);
            }
        }
        let deriv = bases
            .iter()
            .map(|(&p, b)| (p, b.deriv.iter().flatten().copied().collect::<Vec<f64>>()))
            .collect();
        let dofs = DofMap::build(&mesh, &|p| &bases[&p]);
        let geometry: Vec<ElementGeometry> = (0..mesh.elements.len())
            .map(|e| ElementGeometry::new(&mesh.corners(e), &bases[&mesh.elements[e].degree]))
            .collect();

        let ne = dofs.elastic_nodes.len();
        let na = dofs.acoustic_nodes.len();
        let mut mass = MassVectors {
            e2: vec![0.0; ne],
            e1: vec![0.0; ne],
            e0: vec![0.0; ne],
            a2: vec![0.0; na],
        };
        let mut acoustic_rho = vec![0.0; na];
        let mut acoustic_damp = vec![0.0; na];
        for (e, geo) in geometry.iter().enumerate() {
            let nodes = &dofs.elem_nodes[e];
            match materials[e] {
                Material::Elastic(m) => {
                    for (q, &g) in nodes.iter().enumerate() {
                        let m2 = m.rho * geo.wdet[q];
                        mass.e2[g] += m2;
                        mass.e1[g] += 2.0 * m.zeta * m2;
                        mass.e0[g] += m.zeta * m.zeta * m2;
                    }
                }
                Material::Acoustic(m) => {
                    for (q, &g) in nodes.iter().enumerate() {
                        mass.a2[g] += geo.wdet[q] / (m.c * m.c);
                        acoustic_rho[g] = m.rho;
                        acoustic_damp[g] = m.b / (m.c * m.c);
                    }
                }
            }
        }
        if let Some(node) = mass.e2.iter().position(|&m| !(m > 0.0)) {
            return Err(ModelError::OrphanDof {
                physics: Physics::Elastic,
                node,
            });
        }
        if let Some(node) = mass.a2.iter().position(|&m| !(m > 0.0)) {
            return Err(ModelError::OrphanDof {
                physics: Physics::Acoustic,
                node,
            });
        }

        let lame = |e: usize| match materials[e] {
            Material::Elastic(m) => (m.lambda, m.mu),
            Material::Acoustic(_) => (0.0, 0.0),
        };
        let trace = |e: usize, lf: usize, x| {
            Trace::on_face(&mesh, &bases[&mesh.elements[e].degree], e, lf, x).map_err(|source| ModelError::Trace {
                element: e,
                face: lf,
                source,
            })
        };

        let mut dg = Vec::new();
        for pair in &mesh.dg_pairs {
            let (em, ep) = (pair.minus.element_id, pair.plus.element_id);
            let (lm, mm) = lame(em);
            let (lp, mp) = lame(ep);
            let chi =
                config.beta * harmonic_mean(lm + 2.0 * mm, lp + 2.0 * mp) * (pair.p_f * pair.p_f) as f64 / pair.h_f;
            for &(x, w) in &pair.quadrature {
                dg.push(DgPoint {
                    weight: w,
                    normal: pair.normal,
                    chi,
                    minus: trace(em, pair.minus.local_face, x)?,
                    plus: trace(ep, pair.plus.local_face, x)?,
                    lame_minus: (lm, mm),
                    lame_plus: (lp, mp),
                });
            }
        }

        let mut ea = Vec::new();
        for pair in &mesh.ea_pairs {
            let (ee, ea_el) = (pair.minus.element_id, pair.plus.element_id);
            let rho_a = match materials[ea_el] {
                Material::Acoustic(m) => m.rho,
                Material::Elastic(_) => unreachable!("EA plus side is acoustic"),
            };
            let sparse = |t: Trace, nodes: &[usize]| -> Vec<(usize, f64)> {
                t.phi
                    .iter()
                    .zip(nodes)
                    .filter(|(p, _)| p.abs() > 1e-15)
                    .map(|(&p, &g)| (g, p))
                    .collect()
            };
            for &(x, w) in &pair.quadrature {
                let te = trace(ee, pair.minus.local_face, x)?;
                let ta = trace(ea_el, pair.plus.local_face, x)?;
                ea.push(EaPoint {
                    weight: w,
                    normal: pair.normal,
                    rho_a,
                    elastic: sparse(te, &dofs.elem_nodes[ee]),
                    acoustic: sparse(ta, &dofs.elem_nodes[ea_el]),
                });
            }
        }

        let mut abc_e = Vec::new();
        let mut abc_a = Vec::new();
        for f in &mesh.boundary_faces {
            let e = f.element_id;
            let basis = &bases[&mesh.elements[e].degree];
            match (f.tag, materials[e]) {
                (FaceTag::AbcElastic, Material::Elastic(m)) => {
                    for (q, w, n) in face_nodes(&mesh, basis, e, f.local_face) {
                        abc_e.push(AbcElastic {
                            node: dofs.elem_nodes[e][q],
                            weight: w,
                            normal: n,
                            rho_vp: m.rho * m.vp,
                            rho_vs: m.rho * m.vs,
                        });
                    }
                }
                (FaceTag::AbcAcoustic, Material::Acoustic(m)) => {
                    for (q, w, _) in face_nodes(&mesh, basis, e, f.local_face) {
                        abc_a.push(AbcAcoustic {
                            node: dofs.elem_nodes[e][q],
                            weight_over_c: w / m.c,
                        });
                    }
                }
                _ => {}
            }
        }

        let elastic_elems = (0..mesh.elements.len())
            .filter(|&e| dofs.elem_physics[e] == Physics::Elastic)
            .collect();
        let acoustic_elems = (0..mesh.elements.len())
            .filter(|&e| dofs.elem_physics[e] == Physics::Acoustic)
            .collect();
        log::debug!(
            "model: {} elastic nodes, {} acoustic nodes, {} DG points, {} EA points",
            ne,
            na,
            dg.len(),
            ea.len()
        );
        Ok(Self {
            mesh,
            materials,
            bases,
            deriv,
            dofs,
            geometry,
            mass,
            dg,
            ea,
            abc_e,
            abc_a,
            acoustic_rho,
            acoustic_damp,
            config,
            elastic_elems,
            acoustic_elems,
        })
    }

    pub fn n_elastic(&self) -> usize {
        self.dofs.n_elastic_dofs()
    }

    pub fn n_acoustic(&self) -> usize {
        self.dofs.n_acoustic_dofs()
    }

    pub fn basis_of(&self, element: usize) -> &Basis1D {
        &self.bases[&self.mesh.elements[element].degree]
    }

    pub fn elastic_elements(&self) -> &[usize] {
        &self.elastic_elems
    }

    pub fn acoustic_elements(&self) -> &[usize] {
        &self.acoustic_elems
    }

    /// Largest stable step estimate `min_e h_min,e / (v_max,e p_e^2)`.
    pub fn dt_max(&self) -> f64 {
        self.geometry
            .iter()
            .zip(&self.materials)
            .map(|(g, m)| {
                let p = g.degree as f64;
                g.min_edge / (m.max_speed() * p * p)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Step estimate restricted to elements of one physics; infinite if none.
    pub fn dt_max_of(&self, physics: Physics) -> f64 {
        self.geometry
            .iter()
            .zip(&self.materials)
            .filter(|(_, m)| m.physics() == physics)
            .map(|(g, m)| {
                let p = g.degree as f64;
                g.min_edge / (m.max_speed() * p * p)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// `out += K_e u` (volume term only).
    pub fn apply_elastic_stiffness(&self, u: &[f64], out: &mut [f64]) {
        let elems = &self.elastic_elems;
        par_accumulate(self.config.workers, elems.len(), out, |range, buf| {
            let mut scratch = kernels::Scratch::default();
            let mut local = Vec::new();
            let mut res = Vec::new();
            for &e in &elems[range] {
                let nodes = &self.dofs.elem_nodes[e];
                let (lambda, mu) = match self.materials[e] {
                    Material::Elastic(m) => (m.lambda, m.mu),
                    Material::Acoustic(_) => unreachable!(),
                };
                local.clear();
                local.extend(nodes.iter().map(|&g| [u[3 * g], u[3 * g + 1], u[3 * g + 2]]));
                res.clear();
                res.resize(nodes.len(), [0.0; 3]);
                let geo = &self.geometry[e];
                kernels::elastic_element(
                    geo,
                    &self.deriv[&geo.degree],
                    lambda,
                    mu,
                    &local,
                    &mut res,
                    &mut scratch,
                );
                for (q, &g) in nodes.iter().enumerate() {
                    buf[3 * g] += res[q][0];
                    buf[3 * g + 1] += res[q][1];
                    buf[3 * g + 2] += res[q][2];
                }
            }
        });
    }

    /// `out += K_a psi`.
    pub fn apply_acoustic_stiffness(&self, psi: &[f64], out: &mut [f64]) {
        let elems = &self.acoustic_elems;
        par_accumulate(self.config.workers, elems.len(), out, |range, buf| {
            let mut scratch = kernels::Scratch::default();
            let mut local = Vec::new();
            let mut res = Vec::new();
            for &e in &elems[range] {
                let nodes = &self.dofs.elem_nodes[e];
                local.clear();
                local.extend(nodes.iter().map(|&g| [psi[g]]));
                res.clear();
                res.resize(nodes.len(), [0.0; 1]);
                let geo = &self.geometry[e];
                kernels::acoustic_element(geo, &self.deriv[&geo.degree], &local, &mut res, &mut scratch);
                for (q, &g) in nodes.iter().enumerate() {
                    buf[g] += res[q][0];
                }
            }
        });
    }

    /// Adds the DG interface contribution `(D + D^T - P) u`, i.e. minus the
    /// interior-penalty bilinear form applied to `u`.
    pub fn apply_dg_flux(&self, u: &[f64], out: &mut [f64]) {
        par_accumulate(self.config.workers, self.dg.len(), out, |range, buf| {
            for p in &self.dg[range] {
                p.apply(
                    &self.dofs.elem_nodes[p.minus.element],
                    &self.dofs.elem_nodes[p.plus.element],
                    u,
                    buf,
                );
            }
        });
    }

    /// Elastic load `-(rho_a psi_tilde_dot n, w)` on EA faces.
    pub fn apply_ea_elastic(&self, psi_tilde_dot: &[f64], out: &mut [f64]) {
        for p in &self.ea {
            p.elastic_load(psi_tilde_dot, out);
        }
    }

    /// Acoustic load `(u_dot . n, phi)` on EA faces, `n` pointing into the fluid.
    pub fn apply_ea_acoustic(&self, u_dot: &[f64], out: &mut [f64]) {
        for p in &self.ea {
            p.acoustic_load(u_dot, out);
        }
    }

    /// Elastic absorbing traction for velocity `v`.
    pub fn apply_abc_elastic(&self, v: &[f64], out: &mut [f64]) {
        for a in &self.abc_e {
            a.apply(v, out);
        }
    }

    /// Acoustic absorbing term `-(psi_dot / c, phi)`.
    pub fn apply_abc_acoustic(&self, psi_dot: &[f64], out: &mut [f64]) {
        for a in &self.abc_a {
            out[a.node] -= a.weight_over_c * psi_dot[a.node];
        }
    }

    /// Elastic right-hand side without sources:
    /// `-K u + (D + D^T - P) u - M1 v - M0 u + T*(v) - EA(psi_tilde_dot)`.
    pub fn elastic_rhs(&self, u: &[f64], v: &[f64], psi_tilde_dot: &[f64], out: &mut [f64]) {
        let mut ku = vec![0.0; u.len()];
        self.apply_elastic_stiffness(u, &mut ku);
        for (o, k) in out.iter_mut().zip(&ku) {
            *o -= k;
        }
        self.apply_dg_flux(u, out);
        for (g, (&m1, &m0)) in self.mass.e1.iter().zip(&self.mass.e0).enumerate() {
            if m1 != 0.0 || m0 != 0.0 {
                for c in 0..3 {
                    out[3 * g + c] -= m1 * v[3 * g + c] + m0 * u[3 * g + c];
                }
            }
        }
        self.apply_abc_elastic(v, out);
        if !self.ea.is_empty() {
            self.apply_ea_elastic(psi_tilde_dot, out);
        }
    }

    /// Acoustic right-hand side: `-K_a psi_tilde + (u_dot . n) - psi_dot / c`.
    pub fn acoustic_rhs(&self, psi_tilde: &[f64], psi_dot: &[f64], u_dot: &[f64], out: &mut [f64]) {
        let mut k = vec![0.0; psi_tilde.len()];
        self.apply_acoustic_stiffness(psi_tilde, &mut k);
        for (o, k) in out.iter_mut().zip(&k) {
            *o -= k;
        }
        if !self.ea.is_empty() {
            self.apply_ea_acoustic(u_dot, out);
        }
        self.apply_abc_acoustic(psi_dot, out);
    }

    /// Elastic "stiffness energy" `u^T (K - DG + M0) u` (twice the potential energy).
    pub fn elastic_potential(&self, u: &[f64]) -> f64 {
        self.elastic_bilinear(u, u)
    }

    /// `a^T (K - DG + M0) b`.
    pub fn elastic_bilinear(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut kb = vec![0.0; b.len()];
        self.apply_elastic_stiffness(b, &mut kb);
        let mut dg = vec![0.0; b.len()];
        self.apply_dg_flux(b, &mut dg);
        let mut s = 0.0;
        for i in 0..b.len() {
            s += a[i] * (kb[i] - dg[i]);
        }
        for (g, &m0) in self.mass.e0.iter().enumerate() {
            for c in 0..3 {
                s += m0 * a[3 * g + c] * b[3 * g + c];
            }
        }
        s
    }

    /// `sum_g rho_g a_g (K_a b)_g`, the acoustic stiffness form weighted by fluid density.
    pub fn acoustic_bilinear(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut kb = vec![0.0; b.len()];
        self.apply_acoustic_stiffness(b, &mut kb);
        a.iter()
            .zip(&kb)
            .zip(&self.acoustic_rho)
            .map(|((x, k), r)| r * x * k)
            .sum()
    }
}

#[cfg(test)]
mod tests;
