//! Run configuration: flat `key = value` lines grouped under `[section]` headers.
//!
//! ```text
//! [mesh]
//! path = mesh.txt
//! materials = materials.txt
//! f0 = 1.0
//! beta = 250
//!
//! [time]
//! dt = 1e-3
//! n_steps = 2000
//! n_loc = 1
//! cfl_safety = 0.5
//!
//! [source]
//! kind = fault          # fault | planewave | none
//! path = fault.txt
//!
//! [receivers]
//! st01 = 0.5 0.5 1.0 elastic
//!
//! [output]
//! dir = out
//! stride = 10
//! band = 0.1 1.0
//! section = crest 1 0 0 20  0 0 5  100 0 5
//! ```
//!
//! Relative paths are resolved against the directory of the config file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use dgsem::geom::Point3;
use dgsem::mesh::Physics;

use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum SourceSpec {
    None,
    Fault(PathBuf),
    PlaneWave(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReceiverSpec {
    pub id: String,
    pub location: Point3,
    pub kind: Physics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SectionSpec {
    pub name: String,
    pub direction: Point3,
    pub per_segment: usize,
    pub polyline: Vec<Point3>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mesh_path: PathBuf,
    pub materials_path: PathBuf,
    pub source: SourceSpec,
    pub receivers: Vec<ReceiverSpec>,
    pub sections: Vec<SectionSpec>,
    pub dt: f64,
    pub n_steps: usize,
    pub n_loc: usize,
    pub beta: f64,
    pub f0: f64,
    pub cfl_safety: f64,
    pub output_dir: PathBuf,
    pub output_stride: usize,
    pub band: (f64, f64),
}

const SECTIONS: [&str; 5] = ["mesh", "time", "source", "receivers", "output"];

struct Raw<'a> {
    path: &'a Path,
    values: BTreeMap<(String, String), (usize, String)>,
    receivers: Vec<(usize, String, String)>,
    sections: Vec<(usize, String)>,
}

impl Raw<'_> {
    fn err(&self, line: usize, msg: impl Into<String>) -> CliError {
        CliError::Config {
            path: self.path.display().to_string(),
            line,
            msg: msg.into(),
        }
    }

    fn get(&self, section: &str, key: &str) -> Option<&(usize, String)> {
        self.values.get(&(section.to_string(), key.to_string()))
    }

    fn required(&self, section: &str, key: &str) -> Result<&(usize, String), CliError> {
        self.get(section, key)
            .ok_or_else(|| self.err(0, format!("missing `{key}` in [{section}]")))
    }

    fn number<T: std::str::FromStr>(&self, section: &str, key: &str, default: Option<T>) -> Result<T, CliError> {
        match self.get(section, key) {
            Some((line, v)) => v
                .parse()
                .map_err(|_| self.err(*line, format!("cannot parse `{key}` value `{v}`"))),
            None => default.ok_or_else(|| self.err(0, format!("missing `{key}` in [{section}]"))),
        }
    }
}

fn floats(raw: &Raw, line: usize, text: &str) -> Result<Vec<f64>, CliError> {
    text.split_whitespace()
        .map(|t| {
            t.parse()
                .map_err(|_| raw.err(line, format!("cannot parse number `{t}`")))
        })
        .collect()
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text, path)
    }

    /// Parses config text; `path` is used for messages and relative paths.
    pub fn parse(text: &str, path: &Path) -> Result<Self, CliError> {
        let mut raw = Raw {
            path,
            values: BTreeMap::new(),
            receivers: Vec::new(),
            sections: Vec::new(),
        };
        let mut current: Option<String> = None;
        for (i, line) in text.lines().enumerate() {
            let n = i + 1;
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                if !SECTIONS.contains(&name) {
                    return Err(raw.err(n, format!("unknown section [{name}]")));
                }
                current = Some(name.to_string());
                continue;
            }
            let section = current
                .clone()
                .ok_or_else(|| raw.err(n, "entry before any [section]"))?;
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| raw.err(n, "expected `key = value`"))?;
            if section == "receivers" {
                raw.receivers.push((n, key, value));
            } else if section == "output" && key == "section" {
                raw.sections.push((n, value));
            } else if raw.values.insert((section.clone(), key.clone()), (n, value)).is_some() {
                return Err(raw.err(n, format!("duplicate `{key}` in [{section}]")));
            }
        }
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &str| -> PathBuf {
            let p = Path::new(p);
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                base.join(p)
            }
        };

        let mesh_path = resolve(&raw.required("mesh", "path")?.1);
        let materials_path = resolve(&raw.required("mesh", "materials")?.1);
        let source = match raw.get("source", "kind").map(|(l, v)| (*l, v.as_str())) {
            None | Some((_, "none")) => SourceSpec::None,
            Some((_, "fault")) => SourceSpec::Fault(resolve(&raw.required("source", "path")?.1)),
            Some((_, "planewave")) => SourceSpec::PlaneWave(resolve(&raw.required("source", "path")?.1)),
            Some((l, other)) => return Err(raw.err(l, format!("unknown source kind `{other}`"))),
        };

        let mut receivers = Vec::new();
        for (n, id, value) in &raw.receivers {
            let parts: Vec<&str> = value.split_whitespace().collect();
            if parts.len() != 4 {
                return Err(raw.err(*n, "receiver needs `x y z elastic|acoustic`"));
            }
            let xyz = floats(&raw, *n, &parts[..3].join(" "))?;
            let kind = match parts[3] {
                "elastic" => Physics::Elastic,
                "acoustic" => Physics::Acoustic,
                other => return Err(raw.err(*n, format!("unknown receiver kind `{other}`"))),
            };
            if receivers.iter().any(|r: &ReceiverSpec| &r.id == id) {
                return Err(raw.err(*n, format!("duplicate receiver id `{id}`")));
            }
            receivers.push(ReceiverSpec {
                id: id.clone(),
                location: [xyz[0], xyz[1], xyz[2]],
                kind,
            });
        }

        let mut sections = Vec::new();
        for (n, value) in &raw.sections {
            let mut parts = value.split_whitespace();
            let name = parts
                .next()
                .ok_or_else(|| raw.err(*n, "section needs a name"))?
                .to_string();
            let rest: Vec<&str> = parts.collect();
            let nums = floats(&raw, *n, &rest.join(" "))?;
            if nums.len() < 7 || (nums.len() - 4) % 3 != 0 {
                return Err(raw.err(
                    *n,
                    "section needs `name ex ey ez samples_per_segment x y z [x y z ...]`",
                ));
            }
            if nums[3] < 1.0 || nums[3].fract() != 0.0 {
                return Err(raw.err(*n, "samples per segment must be a positive integer"));
            }
            sections.push(SectionSpec {
                name,
                direction: [nums[0], nums[1], nums[2]],
                per_segment: nums[3] as usize,
                polyline: nums[4..].chunks(3).map(|c| [c[0], c[1], c[2]]).collect(),
            });
        }

        let band = match raw.get("output", "band") {
            Some((n, v)) => {
                let b = floats(&raw, *n, v)?;
                if b.len() != 2 || !(0.0 < b[0] && b[0] < b[1]) {
                    return Err(raw.err(*n, "band needs `f_lo f_hi` with 0 < f_lo < f_hi"));
                }
                (b[0], b[1])
            }
            None => (0.1, 1.0),
        };

        let cfg = Self {
            mesh_path,
            materials_path,
            source,
            receivers,
            sections,
            dt: raw.number("time", "dt", None)?,
            n_steps: raw.number("time", "n_steps", None)?,
            n_loc: raw.number("time", "n_loc", Some(1))?,
            beta: raw.number("mesh", "beta", Some(250.0))?,
            f0: raw.number("mesh", "f0", Some(1.0))?,
            cfl_safety: raw.number("time", "cfl_safety", Some(0.5))?,
            output_dir: resolve(raw.get("output", "dir").map(|v| v.1.as_str()).unwrap_or("output")),
            output_stride: raw.number("output", "stride", Some(1))?,
            band,
        };
        let positive = [
            ("dt", cfg.dt),
            ("beta", cfg.beta),
            ("f0", cfg.f0),
            ("cfl_safety", cfg.cfl_safety),
        ];
        for (key, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(raw.err(0, format!("`{key}` must be positive, got {v}")));
            }
        }
        if cfg.n_loc == 0 || cfg.output_stride == 0 {
            return Err(raw.err(0, "`n_loc` and `stride` must be at least 1"));
        }
        Ok(cfg)
    }
}
