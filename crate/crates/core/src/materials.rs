//! Material records, Lamé/damping derivation and per-element assignment.

use std::collections::BTreeMap;
use std::path::Path;

use thiserror::Error;

use crate::mesh::{Mesh, Physics};

/// Default acoustic damping coefficient (m²/s) for water.
pub const DEFAULT_WATER_B: f64 = 6e-9;

#[derive(Debug, Error)]
pub enum MaterialError {
    #[error("invalid material: {0}")]
    Invalid(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("cannot read materials file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("element {element} (block {block}, centroid z = {z}) has no material")]
    Uncovered { element: usize, block: u32, z: f64 },
    #[error("element {element} in {expected:?} block got a {found:?} material")]
    PhysicsMismatch {
        element: usize,
        expected: Physics,
        found: Physics,
    },
}

/// `μ = ρ v_s²`, `λ = ρ v_p² − 2μ`.
pub fn derive_lame(rho: f64, vp: f64, vs: f64) -> Result<(f64, f64), MaterialError> {
    if !(rho > 0.0 && vp > 0.0 && vs > 0.0) || !(rho * vp * vs).is_finite() {
        return Err(MaterialError::Invalid(format!(
            "rho, vp, vs must be positive and finite (got {rho}, {vp}, {vs})"
        )));
    }
    let mu = rho * vs * vs;
    let lambda = rho * vp * vp - 2.0 * mu;
    if lambda < 0.0 {
        return Err(MaterialError::Invalid(format!(
            "negative lambda {lambda:e} (vp = {vp} must be at least sqrt(2) vs = {})",
            vs * std::f64::consts::SQRT_2
        )));
    }
    Ok((lambda, mu))
}

/// `ζ = π f_0 / Q_s`, zero for an infinite quality factor.
pub fn derive_damping(qs: f64, f0: f64) -> Result<f64, MaterialError> {
    if !(qs > 0.0) {
        return Err(MaterialError::Invalid(format!("Q_s must be positive (got {qs})")));
    }
    if !(f0 > 0.0) || !f0.is_finite() {
        return Err(MaterialError::Invalid(format!("f_0 must be positive (got {f0})")));
    }
    if qs.is_infinite() {
        return Ok(0.0);
    }
    Ok(std::f64::consts::PI * f0 / qs)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElasticMaterial {
    pub rho: f64,
    pub vp: f64,
    pub vs: f64,
    pub qs: f64,
    pub lambda: f64,
    pub mu: f64,
    pub zeta: f64,
}

impl ElasticMaterial {
    pub fn new(rho: f64, vp: f64, vs: f64, qs: f64, f0: f64) -> Result<Self, MaterialError> {
        let (lambda, mu) = derive_lame(rho, vp, vs)?;
        let zeta = derive_damping(qs, f0)?;
        Ok(Self {
            rho,
            vp,
            vs,
            qs,
            lambda,
            mu,
            zeta,
        })
    }

    /// Undamped material.
    pub fn undamped(rho: f64, vp: f64, vs: f64) -> Result<Self, MaterialError> {
        Self::new(rho, vp, vs, f64::INFINITY, 1.0)
    }

    /// Replaces the damping factor directly.
    pub fn with_zeta(mut self, zeta: f64) -> Self {
        self.zeta = zeta;
        self
    }

    pub fn p_modulus(&self) -> f64 {
        self.lambda + 2.0 * self.mu
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcousticMaterial {
    pub rho: f64,
    pub c: f64,
    pub b: f64,
}

impl AcousticMaterial {
    pub fn new(rho: f64, c: f64, b: f64) -> Result<Self, MaterialError> {
        if !(rho > 0.0 && c > 0.0 && b >= 0.0) || !(rho * c * (1.0 + b)).is_finite() {
            return Err(MaterialError::Invalid(format!(
                "acoustic needs rho, c > 0 and b >= 0 (got {rho}, {c}, {b})"
            )));
        }
        Ok(Self { rho, c, b })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Material {
    Elastic(ElasticMaterial),
    Acoustic(AcousticMaterial),
}

impl Material {
    pub fn physics(&self) -> Physics {
        match self {
            Material::Elastic(_) => Physics::Elastic,
            Material::Acoustic(_) => Physics::Acoustic,
        }
    }

    /// Fastest wave speed, used by the time-step estimate.
    pub fn max_speed(&self) -> f64 {
        match self {
            Material::Elastic(m) => m.vp,
            Material::Acoustic(m) => m.c,
        }
    }
}

/// Horizontal layer; depths are negative downward and `z_top > z_bot`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Layer {
    pub z_top: f64,
    pub z_bot: f64,
    pub material: ElasticMaterial,
}

#[derive(Debug, Clone, Default)]
pub struct MaterialTable {
    pub blocks: BTreeMap<u32, Material>,
    /// Sorted from the surface downward.
    pub layers: Vec<Layer>,
}

impl MaterialTable {
    pub fn with_block(mut self, id: u32, m: Material) -> Self {
        self.blocks.insert(id, m);
        self
    }

    /// Adds layers, sorting them top-down and checking that they are contiguous.
    pub fn with_layers(mut self, layers: Vec<Layer>) -> Result<Self, MaterialError> {
        self.layers.extend(layers);
        self.layers
            .sort_by(|a, b| b.z_top.partial_cmp(&a.z_top).unwrap_or(std::cmp::Ordering::Equal));
        for l in &self.layers {
            if !(l.z_top > l.z_bot) {
                return Err(MaterialError::Invalid(format!(
                    "layer [{}, {}] must have z_top > z_bot",
                    l.z_top, l.z_bot
                )));
            }
        }
        for w in self.layers.windows(2) {
            let gap = (w[0].z_bot - w[1].z_top).abs();
            if gap > 1e-9 * (1.0 + w[0].z_bot.abs()) {
                return Err(MaterialError::Invalid(format!(
                    "layers [{}, {}] and [{}, {}] are not contiguous",
                    w[0].z_top, w[0].z_bot, w[1].z_top, w[1].z_bot
                )));
            }
        }
        Ok(self)
    }

    /// Layer material at depth `z`; a point on a layer boundary belongs to the deeper layer.
    pub fn layer_at(&self, z: f64) -> Option<&ElasticMaterial> {
        self.layers
            .iter()
            .rev()
            .find(|l| z >= l.z_bot && z <= l.z_top)
            .map(|l| &l.material)
    }
}

/// Resolves one material per element: block table first, then layers by
/// centroid depth for elastic blocks.
pub fn assign_materials(mesh: &Mesh, table: &MaterialTable) -> Result<Vec<Material>, MaterialError> {
    let mut out = Vec::with_capacity(mesh.elements.len());
    for (i, e) in mesh.elements.iter().enumerate() {
        let expected = mesh.physics_of(i);
        let m = match table.blocks.get(&e.block_id) {
            Some(m) => *m,
            None => {
                let z = mesh.centroid(i)[2];
                match (expected, table.layer_at(z)) {
                    (Physics::Elastic, Some(m)) => Material::Elastic(*m),
                    _ => {
                        return Err(MaterialError::Uncovered {
                            element: i,
                            block: e.block_id,
                            z,
                        })
                    }
                }
            }
        };
        if m.physics() != expected {
            return Err(MaterialError::PhysicsMismatch {
                element: i,
                expected,
                found: m.physics(),
            });
        }
        out.push(m);
    }
    Ok(out)
}

fn parse_f64(line: usize, s: &str) -> Result<f64, MaterialError> {
    match s {
        "inf" | "Inf" | "INF" | "infinity" => Ok(f64::INFINITY),
        _ => s.parse().map_err(|_| MaterialError::Parse {
            line,
            msg: format!("cannot parse number `{s}`"),
        }),
    }
}

/// Parses the materials text format. `f0` is the reference frequency for `Q_s`.
///
/// ```text
/// block 1 elastic 2355 1695 1130 500
/// block 3 acoustic 998.23 1500 6e-9
/// layer 0 -300 2355 1695 1130 113
/// ```
pub fn parse_materials(text: &str, f0: f64) -> Result<MaterialTable, MaterialError> {
    let mut table = MaterialTable::default();
    let mut layers = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let f: Vec<&str> = content.split_whitespace().collect();
        let err = |msg: &str| MaterialError::Parse {
            line,
            msg: msg.to_string(),
        };
        let wrap = |e: MaterialError| MaterialError::Parse {
            line,
            msg: e.to_string(),
        };
        match f[0] {
            "block" => {
                if f.len() < 3 {
                    return Err(err("expected `block <id> elastic|acoustic ...`"));
                }
                let id: u32 = f[1].parse().map_err(|_| err("bad block id"))?;
                let m = match f[2] {
                    "elastic" => {
                        if f.len() != 7 {
                            return Err(err("expected `block <id> elastic rho vp vs Qs`"));
                        }
                        let v: Vec<f64> = f[3..].iter().map(|s| parse_f64(line, s)).collect::<Result<_, _>>()?;
                        Material::Elastic(ElasticMaterial::new(v[0], v[1], v[2], v[3], f0).map_err(wrap)?)
                    }
                    "acoustic" => {
                        if f.len() != 5 && f.len() != 6 {
                            return Err(err("expected `block <id> acoustic rho c [b]`"));
                        }
                        let v: Vec<f64> = f[3..].iter().map(|s| parse_f64(line, s)).collect::<Result<_, _>>()?;
                        let b = v.get(2).copied().unwrap_or(DEFAULT_WATER_B);
                        Material::Acoustic(AcousticMaterial::new(v[0], v[1], b).map_err(wrap)?)
                    }
                    other => return Err(err(&format!("unknown material kind `{other}`"))),
                };
                if table.blocks.insert(id, m).is_some() {
                    return Err(err("duplicate block entry"));
                }
            }
            "layer" => {
                if f.len() != 7 {
                    return Err(err("expected `layer z_top z_bot rho vp vs Qs`"));
                }
                let v: Vec<f64> = f[1..].iter().map(|s| parse_f64(line, s)).collect::<Result<_, _>>()?;
                layers.push(Layer {
                    z_top: v[0],
                    z_bot: v[1],
                    material: ElasticMaterial::new(v[2], v[3], v[4], v[5], f0).map_err(wrap)?,
                });
            }
            other => return Err(err(&format!("unknown record `{other}`"))),
        }
    }
    table.with_layers(layers)
}

pub fn load_materials(path: impl AsRef<Path>, f0: f64) -> Result<MaterialTable, MaterialError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| MaterialError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_materials(&text, f0)
}
