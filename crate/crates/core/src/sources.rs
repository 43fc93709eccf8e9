//! Elastic load vectors: kinematic moment-tensor faults, plane-wave body
//! forces and analytic fields (body force plus boundary traction).

use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};

use thiserror::Error;

use crate::geom::{self, Mat3, Point3};
use crate::materials::Material;
use crate::mesh::FaceTag;
use crate::operators::{face_nodes, SemModel};

#[derive(Debug, Error)]
pub enum SourceError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("cannot read source file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("source point {0:?} lies outside the elastic mesh")]
    Outside(Point3),
    #[error("invalid source: {0}")]
    Invalid(String),
}

/// Anything that contributes a time-dependent elastic load.
pub trait ElasticLoad: Send + Sync {
    /// Adds the load at time `t` into `out` (elastic dof layout).
    fn add_load(&self, t: f64, out: &mut [f64]);
}

/// Smoothed ramp `m(t) = t - sin(2 pi t) / (2 pi)` clamped to `[0, 1]`.
pub fn moment_function(t_hat: f64) -> f64 {
    if t_hat <= 0.0 {
        0.0
    } else if t_hat >= 1.0 {
        1.0
    } else {
        let tau = 2.0 * std::f64::consts::PI;
        t_hat - (tau * t_hat).sin() / tau
    }
}

/// Normalised moment-release history; `moment_function` by default.
pub type MomentShape = fn(f64) -> f64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentTensorPoint {
    pub location: Point3,
    pub slip: Point3,
    pub normal: Point3,
    pub m0: f64,
    pub t_rupt: f64,
    pub t_rise: f64,
}

impl MomentTensorPoint {
    /// Unit-moment geometry `(s (x) n) + (s (x) n)^T`.
    pub fn pattern(&self) -> Mat3 {
        let mut m = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] = self.slip[i] * self.normal[j] + self.slip[j] * self.normal[i];
            }
        }
        m
    }

    pub fn moment_tensor_at(&self, t: f64, shape: MomentShape) -> Mat3 {
        let s = self.m0 * shape((t - self.t_rupt) / self.t_rise);
        let mut m = self.pattern();
        for row in m.iter_mut() {
            for v in row.iter_mut() {
                *v *= s;
            }
        }
        m
    }

    fn validate(&self) -> Result<(), SourceError> {
        if (geom::norm(self.normal) - 1.0).abs() > 1e-12 {
            return Err(SourceError::Invalid("fault normal must have unit length".into()));
        }
        if !(self.t_rise > 0.0) || !(self.m0 >= 0.0) {
            return Err(SourceError::Invalid(format!(
                "need t_rise > 0 and M0 >= 0 (got {}, {})",
                self.t_rise, self.m0
            )));
        }
        Ok(())
    }
}

/// Sense of a positive dip-slip component in the fault file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RakeConvention {
    UpDip,
    DownDip,
}

#[derive(Debug, Clone)]
pub struct KinematicFault {
    pub points: Vec<MomentTensorPoint>,
    pub normal: Point3,
}

/// Strike, down-dip and normal unit vectors for `x` east, `y` north, `z` up.
/// Angles in degrees; strike measured clockwise from north.
pub fn fault_frame(strike_deg: f64, dip_deg: f64) -> (Point3, Point3, Point3) {
    let (sp, cp) = strike_deg.to_radians().sin_cos();
    let (sd, cd) = dip_deg.to_radians().sin_cos();
    let strike = [sp, cp, 0.0];
    let down_dip = [cd * cp, -cd * sp, -sd];
    let normal = geom::cross(down_dip, strike);
    (strike, down_dip, normal)
}

impl KinematicFault {
    pub fn new(points: Vec<MomentTensorPoint>) -> Result<Self, SourceError> {
        let normal = points
            .first()
            .map(|p| p.normal)
            .ok_or_else(|| SourceError::Invalid("fault without points".into()))?;
        for p in &points {
            p.validate()?;
        }
        // planarity within 1e-6 of the fault extent
        let mut extent: f64 = 0.0;
        for a in &points {
            for b in &points {
                extent = extent.max(geom::dist(a.location, b.location));
            }
        }
        let origin = points[0].location;
        for p in &points {
            if geom::dot(geom::sub(p.location, origin), normal).abs() > 1e-6 * extent.max(f64::MIN_POSITIVE) {
                return Err(SourceError::Invalid(format!(
                    "point {:?} is off the fault plane",
                    p.location
                )));
            }
        }
        Ok(Self { points, normal })
    }

    /// Parses `fault strike dip updip|downdip n` followed by
    /// `x y z slip_strike slip_dip M0 t_rupt t_rise` lines.
    pub fn parse(text: &str) -> Result<Self, SourceError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let (line, header) = lines.next().ok_or(SourceError::Parse {
            line: 1,
            msg: "empty fault file".into(),
        })?;
        let h: Vec<&str> = header.split_whitespace().collect();
        if h.len() != 5 || h[0] != "fault" {
            return Err(SourceError::Parse {
                line,
                msg: "expected `fault strike dip rake_convention n_points`".into(),
            });
        }
        let strike = num(line, h[1])?;
        let dip = num(line, h[2])?;
        let convention = match h[3] {
            "updip" => RakeConvention::UpDip,
            "downdip" => RakeConvention::DownDip,
            other => {
                return Err(SourceError::Parse {
                    line,
                    msg: format!("unknown rake convention `{other}`"),
                })
            }
        };
        let n: usize = h[4].parse().map_err(|_| SourceError::Parse {
            line,
            msg: "bad point count".into(),
        })?;
        let (e_strike, e_down, normal) = fault_frame(strike, dip);
        let e_dip = match convention {
            RakeConvention::UpDip => geom::scale(e_down, -1.0),
            RakeConvention::DownDip => e_down,
        };
        let mut points = Vec::with_capacity(n);
        for _ in 0..n {
            let (line, l) = lines.next().ok_or(SourceError::Parse {
                line: line + 1,
                msg: "fewer points than declared".into(),
            })?;
            let v: Vec<f64> = l.split_whitespace().map(|s| num(line, s)).collect::<Result<_, _>>()?;
            if v.len() != 8 {
                return Err(SourceError::Parse {
                    line,
                    msg: "expected `x y z slip_strike slip_dip M0 t_rupt t_rise`".into(),
                });
            }
            points.push(MomentTensorPoint {
                location: [v[0], v[1], v[2]],
                slip: geom::add(geom::scale(e_strike, v[3]), geom::scale(e_dip, v[4])),
                normal,
                m0: v[5],
                t_rupt: v[6],
                t_rise: v[7],
            });
        }
        if let Some((line, _)) = lines.next() {
            return Err(SourceError::Parse {
                line,
                msg: "more points than declared".into(),
            });
        }
        Self::new(points)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SourceError> {
        Self::parse(&read(path.as_ref())?)
    }
}

fn read(path: &Path) -> Result<String, SourceError> {
    std::fs::read_to_string(path).map_err(|source| SourceError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn num(line: usize, s: &str) -> Result<f64, SourceError> {
    s.parse().map_err(|_| SourceError::Parse {
        line,
        msg: format!("cannot parse number `{s}`"),
    })
}

/// Fault point bound to its nearest elastic GLL node.
#[derive(Debug, Clone)]
pub struct SnappedPoint {
    pub point: MomentTensorPoint,
    pub node: usize,
    pub element: usize,
    pub snap_distance: f64,
    /// `(global node, pattern . grad phi)` for the host element.
    load: Vec<(usize, Point3)>,
}

/// Moment-tensor point sources imposed as `F = M : grad w` at snapped nodes.
#[derive(Debug, Clone)]
pub struct MomentSource {
    pub points: Vec<SnappedPoint>,
    pub shape: MomentShape,
}

impl MomentSource {
    pub fn new(model: &SemModel, fault: &KinematicFault) -> Result<Self, SourceError> {
        Self::with_shape(model, fault, moment_function)
    }

    pub fn with_shape(model: &SemModel, fault: &KinematicFault, shape: MomentShape) -> Result<Self, SourceError> {
        let nodes = &model.dofs.elastic_nodes;
        let mut points = Vec::with_capacity(fault.points.len());
        for p in &fault.points {
            // nearest node, ties to the lowest index
            let mut best = (f64::INFINITY, usize::MAX);
            for (g, x) in nodes.iter().enumerate() {
                let d = geom::dist(*x, p.location);
                if d < best.0 {
                    best = (d, g);
                }
            }
            if best.1 == usize::MAX {
                return Err(SourceError::Outside(p.location));
            }
            let hosts: Vec<usize> = model
                .elastic_elements()
                .iter()
                .copied()
                .filter(|&e| model.dofs.elem_nodes[e].contains(&best.1))
                .collect();
            let element = *hosts.first().ok_or(SourceError::Outside(p.location))?;
            // a point farther from its node than an element diameter is outside the mesh
            if best.0 > model.mesh.element_diameter(element) {
                return Err(SourceError::Outside(p.location));
            }
            // grad w jumps across element faces; a node shared by several
            // elements takes the w det J weighted mean (lumped-mass delta)
            let pat = p.pattern();
            let mut acc: Vec<(usize, Point3)> = Vec::new();
            let mut total_w = 0.0;
            for &e in &hosts {
                let local = model.dofs.elem_nodes[e]
                    .iter()
                    .position(|&g| g == best.1)
                    .expect("host element contains node");
                let basis = model.basis_of(e);
                let n = basis.len();
                let (a, b, c) = (local % n, (local / n) % n, local / (n * n));
                let r = [basis.nodes[a], basis.nodes[b], basis.nodes[c]];
                let trace = crate::operators::Trace::at_reference(&model.mesh.corners(e), basis, e, r);
                let w = model.geometry[e].wdet[local];
                total_w += w;
                for (&g, grad) in model.dofs.elem_nodes[e].iter().zip(&trace.grad) {
                    let f = geom::scale(geom::mat_vec(&pat, *grad), p.m0 * w);
                    match acc.iter_mut().find(|(h, _)| *h == g) {
                        Some((_, sum)) => *sum = geom::add(*sum, f),
                        None => acc.push((g, f)),
                    }
                }
            }
            let load = acc
                .into_iter()
                .map(|(g, f)| (g, geom::scale(f, 1.0 / total_w)))
                .collect();
            log::debug!(
                "fault point {:?} snapped to node {} (distance {:e})",
                p.location,
                best.1,
                best.0
            );
            points.push(SnappedPoint {
                point: *p,
                node: best.1,
                element,
                snap_distance: best.0,
                load,
            });
        }
        Ok(Self { points, shape })
    }

    /// Sum of `x_node (x) F_node` over all nodal loads at time `t`; equals
    /// the total moment tensor for a consistent discretisation.
    pub fn radiated_moment(&self, model: &SemModel, t: f64) -> Mat3 {
        let mut m = [[0.0; 3]; 3];
        for sp in &self.points {
            let s = (self.shape)((t - sp.point.t_rupt) / sp.point.t_rise);
            for &(g, f) in &sp.load {
                let x = model.dofs.elastic_nodes[g];
                for i in 0..3 {
                    for k in 0..3 {
                        m[i][k] += s * f[i] * x[k];
                    }
                }
            }
        }
        m
    }
}

impl ElasticLoad for MomentSource {
    fn add_load(&self, t: f64, out: &mut [f64]) {
        for sp in &self.points {
            let s = (self.shape)((t - sp.point.t_rupt) / sp.point.t_rise);
            if s == 0.0 {
                continue;
            }
            for &(g, f) in &sp.load {
                out[3 * g] += s * f[0];
                out[3 * g + 1] += s * f[1];
                out[3 * g + 2] += s * f[2];
            }
        }
    }
}

/// Plane-wave input: a sampled reference velocity injected at depth `z0`.
#[derive(Debug, Clone)]
pub struct PlaneWaveSpec {
    pub z0: f64,
    pub rho: f64,
    pub vp: f64,
    /// Shear speed for the horizontal components; `vp` is used when absent.
    pub vs: Option<f64>,
    pub dt: f64,
    pub samples: Vec<Point3>,
}

impl PlaneWaveSpec {
    /// Parses `planewave z0 rho vp dt n_samples [vs]` followed by `vx vy vz` lines.
    pub fn parse(text: &str) -> Result<Self, SourceError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let (line, header) = lines.next().ok_or(SourceError::Parse {
            line: 1,
            msg: "empty plane-wave file".into(),
        })?;
        let h: Vec<&str> = header.split_whitespace().collect();
        if !(h.len() == 6 || h.len() == 7) || h[0] != "planewave" {
            return Err(SourceError::Parse {
                line,
                msg: "expected `planewave z0 rho vp dt n_samples [vs]`".into(),
            });
        }
        let n: usize = h[5].parse().map_err(|_| SourceError::Parse {
            line,
            msg: "bad sample count".into(),
        })?;
        let vs = if h.len() == 7 { Some(num(line, h[6])?) } else { None };
        let mut samples = Vec::with_capacity(n);
        for _ in 0..n {
            let (line, l) = lines.next().ok_or(SourceError::Parse {
                line: line + 1,
                msg: "fewer samples than declared".into(),
            })?;
            let v: Vec<f64> = l.split_whitespace().map(|s| num(line, s)).collect::<Result<_, _>>()?;
            if v.len() != 3 || v.iter().any(|x| !x.is_finite()) {
                return Err(SourceError::Parse {
                    line,
                    msg: "expected three finite velocity components".into(),
                });
            }
            samples.push([v[0], v[1], v[2]]);
        }
        let spec = Self {
            z0: num(line, h[1])?,
            rho: num(line, h[2])?,
            vp: num(line, h[3])?,
            vs,
            dt: num(line, h[4])?,
            samples,
        };
        if !(spec.dt > 0.0 && spec.rho > 0.0 && spec.vp > 0.0) {
            return Err(SourceError::Invalid("plane wave needs dt, rho, vp > 0".into()));
        }
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SourceError> {
        Self::parse(&read(path.as_ref())?)
    }

    /// Linear interpolation of the reference velocity; `None` past the last sample.
    pub fn velocity_at(&self, t: f64) -> Option<Point3> {
        if t < 0.0 {
            return Some([0.0; 3]);
        }
        let s = t / self.dt;
        let i = s.floor() as usize;
        if i + 1 >= self.samples.len() {
            if i + 1 == self.samples.len() && s == i as f64 {
                return Some(self.samples[i]);
            }
            return None;
        }
        let f = s - i as f64;
        let (a, b) = (self.samples[i], self.samples[i + 1]);
        Some([
            a[0] + f * (b[0] - a[0]),
            a[1] + f * (b[1] - a[1]),
            a[2] + f * (b[2] - a[2]),
        ])
    }
}

/// Equivalent body force `2 rho v v_ref(t) / L` spread uniformly over the
/// one-element-thick injection layer around `z0`.
#[derive(Debug)]
pub struct PlaneWaveSource {
    pub spec: PlaneWaveSpec,
    /// Lumped `(global node, w det J / L)` over the injection elements.
    weights: Vec<(usize, f64)>,
    pub layer_thickness: f64,
    warned: AtomicBool,
}

impl PlaneWaveSource {
    pub fn new(model: &SemModel, spec: PlaneWaveSpec) -> Result<Self, SourceError> {
        let mut acc = vec![0.0; model.dofs.elastic_nodes.len()];
        let mut thickness = None;
        for &e in model.elastic_elements() {
            let corners = model.mesh.corners(e);
            let zmin = corners.iter().map(|c| c[2]).fold(f64::INFINITY, f64::min);
            let zmax = corners.iter().map(|c| c[2]).fold(f64::NEG_INFINITY, f64::max);
            if !(zmin < spec.z0 && spec.z0 < zmax) {
                continue;
            }
            let l = zmax - zmin;
            match thickness {
                None => thickness = Some(l),
                Some(t) if (t - l).abs() > 1e-9 * t => {
                    return Err(SourceError::Invalid(format!(
                        "injection elements have different thicknesses ({t} vs {l})"
                    )))
                }
                _ => {}
            }
            for (q, &g) in model.dofs.elem_nodes[e].iter().enumerate() {
                acc[g] += model.geometry[e].wdet[q] / l;
            }
        }
        let layer_thickness = thickness.ok_or_else(|| {
            SourceError::Invalid(format!("no elastic element straddles the injection depth {}", spec.z0))
        })?;
        let weights = acc.into_iter().enumerate().filter(|(_, w)| *w != 0.0).collect();
        Ok(Self {
            spec,
            weights,
            layer_thickness,
            warned: AtomicBool::new(false),
        })
    }

    /// Force density amplitude per unit reference velocity for each component.
    pub fn coefficients(&self) -> Point3 {
        let s = &self.spec;
        let horizontal = 2.0 * s.rho * s.vs.unwrap_or(s.vp);
        [horizontal, horizontal, 2.0 * s.rho * s.vp]
    }
}

impl ElasticLoad for PlaneWaveSource {
    fn add_load(&self, t: f64, out: &mut [f64]) {
        let v = match self.spec.velocity_at(t) {
            Some(v) => v,
            None => {
                if !self.warned.swap(true, Ordering::Relaxed) {
                    log::warn!("plane-wave time series ended at t = {t}; load set to zero from here on");
                }
                return;
            }
        };
        let k = self.coefficients();
        let f = [k[0] * v[0], k[1] * v[1], k[2] * v[2]];
        for &(g, w) in &self.weights {
            for c in 0..3 {
                out[3 * g + c] += w * f[c];
            }
        }
    }
}

type BodyFn = dyn Fn(Point3, f64) -> Point3 + Send + Sync;
type TractionFn = dyn Fn(Point3, Point3, f64) -> Point3 + Send + Sync;

/// Analytic body force and boundary traction, e.g. for manufactured solutions.
pub struct FieldLoad {
    body: Box<BodyFn>,
    traction: Option<Box<TractionFn>>,
    /// `(global node, position, lumped volume weight)`.
    volume: Vec<(usize, Point3, f64)>,
    /// `(global node, position, surface weight, outward normal)`.
    surface: Vec<(usize, Point3, f64, Point3)>,
}

impl std::fmt::Debug for FieldLoad {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FieldLoad")
            .field("volume_nodes", &self.volume.len())
            .field("surface_nodes", &self.surface.len())
            .finish()
    }
}

impl FieldLoad {
    /// `traction` is applied on elastic faces tagged `FREE_E`.
    pub fn new(
        model: &SemModel,
        body: impl Fn(Point3, f64) -> Point3 + Send + Sync + 'static,
        traction: Option<Box<TractionFn>>,
    ) -> Self {
        let mut w = vec![0.0; model.dofs.elastic_nodes.len()];
        for &e in model.elastic_elements() {
            for (q, &g) in model.dofs.elem_nodes[e].iter().enumerate() {
                w[g] += model.geometry[e].wdet[q];
            }
        }
        let volume = w
            .iter()
            .enumerate()
            .map(|(g, &w)| (g, model.dofs.elastic_nodes[g], w))
            .collect();
        let mut surface = Vec::new();
        if traction.is_some() {
            for f in &model.mesh.boundary_faces {
                if f.tag != FaceTag::FreeElastic {
                    continue;
                }
                if !matches!(model.materials[f.element_id], Material::Elastic(_)) {
                    continue;
                }
                let basis = model.basis_of(f.element_id);
                for (q, wq, n) in face_nodes(&model.mesh, basis, f.element_id, f.local_face) {
                    let g = model.dofs.elem_nodes[f.element_id][q];
                    surface.push((g, model.dofs.elastic_nodes[g], wq, n));
                }
            }
        }
        Self {
            body: Box::new(body),
            traction,
            volume,
            surface,
        }
    }
}

impl ElasticLoad for FieldLoad {
    fn add_load(&self, t: f64, out: &mut [f64]) {
        for &(g, x, w) in &self.volume {
            let f = (self.body)(x, t);
            for c in 0..3 {
                out[3 * g + c] += w * f[c];
            }
        }
        if let Some(tr) = &self.traction {
            for &(g, x, w, n) in &self.surface {
                let f = tr(x, n, t);
                for c in 0..3 {
                    out[3 * g + c] += w * f[c];
                }
            }
        }
    }
}
