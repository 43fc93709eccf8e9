//! Receivers, pressures, peak-ground-motion maps and section profiles.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use thiserror::Error;

use crate::basis::invert_map;
use crate::geom::{self, Point3};
use crate::materials::Material;
use crate::mesh::{FaceTag, Physics};
use crate::operators::{face_nodes, hooke, SemModel, Trace};
use crate::timeint::State;

#[derive(Debug, Error)]
pub enum PostError {
    #[error("receiver `{id}` at {location:?} is not inside any {kind:?} element")]
    Unlocated {
        id: String,
        location: Point3,
        kind: Physics,
    },
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
}

/// Formats with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone)]
pub struct Receiver {
    pub id: String,
    pub location: Point3,
    pub kind: Physics,
    pub element: usize,
    pub reference: Point3,
    trace: Trace,
}

impl Receiver {
    /// Finds the lowest-index element of matching physics that contains the point.
    pub fn locate(model: &SemModel, id: &str, location: Point3, kind: Physics) -> Result<Self, PostError> {
        let candidates = match kind {
            Physics::Elastic => model.elastic_elements(),
            Physics::Acoustic => model.acoustic_elements(),
        };
        for &e in candidates {
            let corners = model.mesh.corners(e);
            // cheap bounding-box rejection
            let pad = 1e-8 * model.mesh.element_diameter(e);
            let outside = (0..3).any(|k| {
                let lo = corners.iter().map(|c| c[k]).fold(f64::INFINITY, f64::min);
                let hi = corners.iter().map(|c| c[k]).fold(f64::NEG_INFINITY, f64::max);
                location[k] < lo - pad || location[k] > hi + pad
            });
            if outside {
                continue;
            }
            if let Ok(r) = invert_map(&corners, location) {
                let r = r.map(|v| v.clamp(-1.0, 1.0));
                let trace = Trace::at_reference(&corners, model.basis_of(e), e, r);
                return Ok(Self {
                    id: id.to_string(),
                    location,
                    kind,
                    element: e,
                    reference: r,
                    trace,
                });
            }
        }
        Err(PostError::Unlocated {
            id: id.to_string(),
            location,
            kind,
        })
    }

    pub fn header(&self) -> &'static str {
        match self.kind {
            Physics::Elastic => "t,ux,uy,uz,vx,vy,vz",
            Physics::Acoustic => "t,psi,psidot,pac",
        }
    }

    /// One output row (without time) interpolated from the state.
    pub fn sample(&self, model: &SemModel, state: &State) -> Vec<f64> {
        let nodes = &model.dofs.elem_nodes[self.element];
        match self.kind {
            Physics::Elastic => {
                let u = self.trace.value3(nodes, &state.u);
                let v = self.trace.value3(nodes, &state.v);
                vec![u[0], u[1], u[2], v[0], v[1], v[2]]
            }
            Physics::Acoustic => {
                // bring the staggered acoustic field to `state.t`
                let h = state.acoustic_lag;
                let p0 = self.trace.value1(nodes, &state.psi);
                let p1 = self.trace.value1(nodes, &state.psi_dot);
                let p2 = self.trace.value1(nodes, &state.psi_ddot);
                let psi = p0 + h * p1 + 0.5 * h * h * p2;
                let psi_dot = p1 + h * p2;
                let rho = match model.materials[self.element] {
                    Material::Acoustic(m) => m.rho,
                    Material::Elastic(_) => unreachable!("acoustic receiver in elastic element"),
                };
                vec![psi, psi_dot, rho * psi_dot]
            }
        }
    }
}

/// Time histories of a set of receivers, uniformly sampled.
#[derive(Debug, Clone)]
pub struct TraceSet {
    pub receivers: Vec<Receiver>,
    pub times: Vec<f64>,
    /// `rows[r][k]` is the sample of receiver `r` at `times[k]`.
    pub rows: Vec<Vec<Vec<f64>>>,
}

impl TraceSet {
    pub fn new(receivers: Vec<Receiver>) -> Self {
        let n = receivers.len();
        Self {
            receivers,
            times: Vec::new(),
            rows: vec![Vec::new(); n],
        }
    }

    pub fn record(&mut self, model: &SemModel, state: &State) {
        self.times.push(state.t);
        for (r, rows) in self.receivers.iter().zip(&mut self.rows) {
            rows.push(r.sample(model, state));
        }
    }

    /// Column `c` (0-based, time excluded) of receiver `r`.
    pub fn column(&self, r: usize, c: usize) -> Vec<f64> {
        self.rows[r].iter().map(|row| row[c]).collect()
    }

    pub fn csv(&self, r: usize) -> String {
        let mut s = String::new();
        s.push_str(self.receivers[r].header());
        s.push('\n');
        for (t, row) in self.times.iter().zip(&self.rows[r]) {
            s.push_str(&fmt17(*t));
            for v in row {
                s.push(',');
                s.push_str(&fmt17(*v));
            }
            s.push('\n');
        }
        s
    }

    /// Writes `<dir>/<id>.csv` for every receiver.
    pub fn write_csv(&self, dir: &Path) -> Result<(), PostError> {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        for r in 0..self.receivers.len() {
            let path = dir.join(format!("{}.csv", self.receivers[r].id));
            std::fs::write(&path, self.csv(r)).map_err(|e| io_err(&path, e))?;
        }
        Ok(())
    }
}

fn io_err(path: &Path, source: io::Error) -> PostError {
    PostError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// `p_ac = rho_a psi_dot` per acoustic node, at `state.t`.
pub fn acoustic_pressure(model: &SemModel, state: &State) -> Vec<f64> {
    let (_, psi_dot) = state.acoustic_at_t();
    psi_dot.iter().zip(&model.acoustic_rho).map(|(p, r)| r * p).collect()
}

/// `p = -tr(sigma) / 3`.
pub fn mean_stress_pressure(sigma: &geom::Mat3) -> f64 {
    -(sigma[0][0] + sigma[1][1] + sigma[2][2]) / 3.0
}

/// `p_el = -tr(sigma)/3` per elastic node, with the stress from Hooke's law
/// evaluated at the node in every element containing it and averaged.
pub fn elastic_pressure(model: &SemModel, state: &State) -> Vec<f64> {
    let n = model.dofs.elastic_nodes.len();
    let mut sum = vec![0.0; n];
    let mut count = vec![0u32; n];
    for &e in model.elastic_elements() {
        let (lambda, mu) = match model.materials[e] {
            Material::Elastic(m) => (m.lambda, m.mu),
            Material::Acoustic(_) => unreachable!(),
        };
        let basis = model.basis_of(e);
        let corners = model.mesh.corners(e);
        let nodes = &model.dofs.elem_nodes[e];
        let k = basis.len();
        for (q, &g) in nodes.iter().enumerate() {
            let r = [basis.nodes[q % k], basis.nodes[(q / k) % k], basis.nodes[q / (k * k)]];
            let tr = Trace::at_reference(&corners, basis, e, r);
            let sigma = hooke(&tr.gradient3(nodes, &state.u), lambda, mu);
            sum[g] += mean_stress_pressure(&sigma);
            count[g] += 1;
        }
    }
    sum.iter().zip(&count).map(|(s, &c)| s / c.max(1) as f64).collect()
}

/// `sqrt(max|x| * max|y|)`.
pub fn geometric_mean_peak(x: &[f64], y: &[f64]) -> f64 {
    let px = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let py = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    (px * py).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceSample {
    pub point: Point3,
    pub pgu_gmh: f64,
    pub pgv_gmh: f64,
}

/// Running horizontal peaks at the nodes of upward-facing free elastic faces.
#[derive(Debug, Clone)]
pub struct PeakTracker {
    pub nodes: Vec<usize>,
    /// Per node: max |u_x|, |u_y|, |v_x|, |v_y|.
    peaks: Vec<[f64; 4]>,
}

impl PeakTracker {
    pub fn surface(model: &SemModel) -> Self {
        let mut nodes = Vec::new();
        for f in &model.mesh.boundary_faces {
            if f.tag != FaceTag::FreeElastic {
                continue;
            }
            for (q, _, n) in face_nodes(&model.mesh, model.basis_of(f.element_id), f.element_id, f.local_face) {
                if n[2] > 0.5 {
                    nodes.push(model.dofs.elem_nodes[f.element_id][q]);
                }
            }
        }
        nodes.sort_unstable();
        nodes.dedup();
        let peaks = vec![[0.0; 4]; nodes.len()];
        Self { nodes, peaks }
    }

    pub fn update(&mut self, state: &State) {
        for (p, &g) in self.peaks.iter_mut().zip(&self.nodes) {
            let vals = [state.u[3 * g], state.u[3 * g + 1], state.v[3 * g], state.v[3 * g + 1]];
            for k in 0..4 {
                p[k] = p[k].max(vals[k].abs());
            }
        }
    }

    pub fn samples(&self, model: &SemModel) -> Vec<SurfaceSample> {
        self.nodes
            .iter()
            .zip(&self.peaks)
            .map(|(&g, p)| SurfaceSample {
                point: model.dofs.elastic_nodes[g],
                pgu_gmh: (p[0] * p[1]).sqrt(),
                pgv_gmh: (p[2] * p[3]).sqrt(),
            })
            .collect()
    }
}

pub fn peak_map_csv(samples: &[SurfaceSample]) -> String {
    let mut s = String::from("x,y,z,pgu_gmh,pgv_gmh\n");
    for p in samples {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            fmt17(p.point[0]),
            fmt17(p.point[1]),
            fmt17(p.point[2]),
            fmt17(p.pgu_gmh),
            fmt17(p.pgv_gmh)
        );
    }
    s
}

/// Maximum displacement along a fixed direction at points of a polyline.
#[derive(Debug, Clone)]
pub struct SectionProfile {
    pub name: String,
    pub direction: Point3,
    pub receivers: Vec<Receiver>,
    pub max_abs: Vec<f64>,
}

impl SectionProfile {
    /// Samples `per_segment` points on each polyline segment (end points included once).
    pub fn new(
        model: &SemModel,
        name: &str,
        polyline: &[Point3],
        per_segment: usize,
        direction: Point3,
    ) -> Result<Self, PostError> {
        let len = geom::norm(direction);
        let direction = if (len - 1.0).abs() > 1e-12 {
            log::warn!("section `{name}`: direction {direction:?} is not a unit vector; normalising");
            geom::scale(direction, 1.0 / len)
        } else {
            direction
        };
        let mut points = Vec::new();
        for (i, w) in polyline.windows(2).enumerate() {
            let steps = per_segment.max(1);
            let start = if i == 0 { 0 } else { 1 };
            for k in start..=steps {
                let s = k as f64 / steps as f64;
                points.push(geom::add(w[0], geom::scale(geom::sub(w[1], w[0]), s)));
            }
        }
        if polyline.len() == 1 {
            points.push(polyline[0]);
        }
        let receivers = points
            .iter()
            .enumerate()
            .map(|(k, &p)| Receiver::locate(model, &format!("{name}_{k}"), p, Physics::Elastic))
            .collect::<Result<Vec<_>, _>>()?;
        let max_abs = vec![0.0; receivers.len()];
        Ok(Self {
            name: name.to_string(),
            direction,
            receivers,
            max_abs,
        })
    }

    pub fn update(&mut self, model: &SemModel, state: &State) {
        for (r, m) in self.receivers.iter().zip(&mut self.max_abs) {
            let s = r.sample(model, state);
            let u_perp = geom::dot([s[0], s[1], s[2]], self.direction);
            *m = m.max(u_perp.abs());
        }
    }

    pub fn csv(&self) -> String {
        let mut s = String::from("x,y,z,u_perp_max\n");
        for (r, m) in self.receivers.iter().zip(&self.max_abs) {
            let p = r.location;
            let _ = writeln!(s, "{},{},{},{}", fmt17(p[0]), fmt17(p[1]), fmt17(p[2]), fmt17(*m));
        }
        s
    }
}

/// `max_t |u(t) . e|` for a sampled displacement history.
pub fn section_max_displacement(history: &[Point3], direction: Point3) -> f64 {
    let e = geom::normalize(direction);
    history.iter().fold(0.0, |m, u| m.max(geom::dot(*u, e).abs()))
}
