use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::{pair_interfaces, BoundaryFace, FaceTag, HexElement, Mesh, MeshError, Node, Physics};

/// Reads, validates and pairs a mesh file.
pub fn load_mesh(path: impl AsRef<Path>) -> Result<Mesh, MeshError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| MeshError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mesh = parse_mesh(&text)?;
    pair_interfaces(mesh)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn next_fields(&mut self) -> Result<(usize, Vec<&'a str>), MeshError> {
        for (i, line) in self.inner.by_ref() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            self.last = i + 1;
            return Ok((i + 1, line.split_whitespace().collect()));
        }
        Err(MeshError::Parse {
            line: self.last + 1,
            msg: "unexpected end of file".into(),
        })
    }

    fn header(&mut self, keyword: &str) -> Result<usize, MeshError> {
        let (line, f) = self.next_fields()?;
        if f.len() != 2 || f[0] != keyword {
            return Err(MeshError::Parse {
                line,
                msg: format!("expected `{keyword} <count>`"),
            });
        }
        parse_num(line, f[1])
    }
}

fn parse_num<T: std::str::FromStr>(line: usize, s: &str) -> Result<T, MeshError> {
    s.parse().map_err(|_| MeshError::Parse {
        line,
        msg: format!("cannot parse `{s}`"),
    })
}

fn expect_len(line: usize, f: &[&str], n: usize) -> Result<(), MeshError> {
    if f.len() != n {
        return Err(MeshError::Parse {
            line,
            msg: format!("expected {n} fields, found {}", f.len()),
        });
    }
    Ok(())
}

/// Parses and validates mesh text without pairing interfaces.
pub fn parse_mesh(text: &str) -> Result<Mesh, MeshError> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        last: 0,
    };
    let n_nodes = lines.header("nodes")?;
    let mut nodes = Vec::with_capacity(n_nodes);
    for _ in 0..n_nodes {
        let (line, f) = lines.next_fields()?;
        expect_len(line, &f, 4)?;
        nodes.push(Node {
            id: parse_num(line, f[0])?,
            x: parse_num(line, f[1])?,
            y: parse_num(line, f[2])?,
            z: parse_num(line, f[3])?,
        });
    }
    let n_elements = lines.header("elements")?;
    let mut elements = Vec::with_capacity(n_elements);
    for _ in 0..n_elements {
        let (line, f) = lines.next_fields()?;
        expect_len(line, &f, 11)?;
        let mut node_ids = [0usize; 8];
        for k in 0..8 {
            node_ids[k] = parse_num(line, f[3 + k])?;
        }
        elements.push(HexElement {
            id: parse_num(line, f[0])?,
            block_id: parse_num(line, f[1])?,
            degree: parse_num(line, f[2])?,
            node_ids,
        });
    }
    let n_blocks = lines.header("blocks")?;
    let mut blocks = BTreeMap::new();
    for _ in 0..n_blocks {
        let (line, f) = lines.next_fields()?;
        expect_len(line, &f, 2)?;
        let physics = match f[1] {
            "ELASTIC" => Physics::Elastic,
            "ACOUSTIC" => Physics::Acoustic,
            other => {
                return Err(MeshError::Parse {
                    line,
                    msg: format!("unknown block kind `{other}`"),
                })
            }
        };
        if blocks.insert(parse_num(line, f[0])?, physics).is_some() {
            return Err(MeshError::Parse {
                line,
                msg: "duplicate block id".into(),
            });
        }
    }
    let n_faces = lines.header("faces")?;
    let mut faces = Vec::with_capacity(n_faces);
    for _ in 0..n_faces {
        let (line, f) = lines.next_fields()?;
        expect_len(line, &f, 3)?;
        let tag = FaceTag::from_token(f[2]).ok_or_else(|| MeshError::Parse {
            line,
            msg: format!("unknown face tag `{}`", f[2]),
        })?;
        faces.push(BoundaryFace {
            element_id: parse_num(line, f[0])?,
            local_face: parse_num(line, f[1])?,
            tag,
        });
    }
    if let Ok((line, _)) = lines.next_fields() {
        return Err(MeshError::Parse {
            line,
            msg: "trailing content after faces section".into(),
        });
    }
    Mesh::new(nodes, elements, blocks, faces)
}

/// Serialises a mesh in the text format read by [`parse_mesh`].
pub fn write_mesh(mesh: &Mesh) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "nodes {}", mesh.nodes.len());
    for n in &mesh.nodes {
        let _ = writeln!(s, "{} {:.17e} {:.17e} {:.17e}", n.id, n.x, n.y, n.z);
    }
    let _ = writeln!(s, "elements {}", mesh.elements.len());
    for e in &mesh.elements {
        let _ = write!(s, "{} {} {}", e.id, e.block_id, e.degree);
        for n in e.node_ids {
            let _ = write!(s, " {n}");
        }
        s.push('\n');
    }
    let _ = writeln!(s, "blocks {}", mesh.blocks.len());
    for (id, phys) in &mesh.blocks {
        let kind = match phys {
            Physics::Elastic => "ELASTIC",
            Physics::Acoustic => "ACOUSTIC",
        };
        let _ = writeln!(s, "{id} {kind}");
    }
    let _ = writeln!(s, "faces {}", mesh.boundary_faces.len());
    for f in &mesh.boundary_faces {
        let _ = writeln!(s, "{} {} {}", f.element_id, f.local_face, f.tag.token());
    }
    s
}
