//! Generators for meshes made of axis-aligned boxes.
//!
//! Each box becomes one block with its own node set, so neighbouring boxes
//! may be refined independently. Faces shared by two boxes are tagged `DG`
//! (elastic–elastic) or `EA` (elastic–acoustic); every other boundary face
//! is tagged by a caller-supplied closure.

use std::collections::BTreeMap;

use super::{pair_interfaces, BoundaryFace, FaceTag, HexElement, Mesh, MeshError, Node, Physics};
use crate::geom::Point3;

#[derive(Debug, Clone)]
pub struct BoxBlock {
    pub block_id: u32,
    pub physics: Physics,
    pub degree: usize,
    pub origin: Point3,
    pub extent: Point3,
    pub divisions: [usize; 3],
}

impl BoxBlock {
    pub fn new(
        block_id: u32,
        physics: Physics,
        degree: usize,
        origin: Point3,
        extent: Point3,
        divisions: [usize; 3],
    ) -> Self {
        Self {
            block_id,
            physics,
            degree,
            origin,
            extent,
            divisions,
        }
    }

    fn contains_face_rect(&self, axis: usize, value: f64, lo: [f64; 2], hi: [f64; 2]) -> bool {
        let tol = 1e-12 * (self.extent[0] + self.extent[1] + self.extent[2]);
        let on_plane =
            (self.origin[axis] - value).abs() < tol || (self.origin[axis] + self.extent[axis] - value).abs() < tol;
        if !on_plane {
            return false;
        }
        let (a, b) = other_axes(axis);
        let overlap = |k: usize, l: f64, h: f64| (h.min(self.origin[k] + self.extent[k]) - l.max(self.origin[k])) > tol;
        overlap(a, lo[0], hi[0]) && overlap(b, lo[1], hi[1])
    }
}

fn other_axes(axis: usize) -> (usize, usize) {
    match axis {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    }
}

type NodeMap = Box<dyn Fn(Point3) -> Point3>;

pub struct BoxMeshBuilder {
    blocks: Vec<BoxBlock>,
    map: Option<NodeMap>,
}

impl BoxMeshBuilder {
    pub fn new(blocks: Vec<BoxBlock>) -> Self {
        Self { blocks, map: None }
    }

    /// Applies a coordinate map to every node after tagging, e.g. to bend
    /// the box into a curved shape. Tags are decided on the unmapped boxes.
    pub fn with_map(mut self, map: impl Fn(Point3) -> Point3 + 'static) -> Self {
        self.map = Some(Box::new(map));
        self
    }

    /// Builds, validates and pairs the mesh. `tag` receives the unmapped face
    /// centroid, its outward axis normal and the block physics.
    pub fn build(&self, mut tag: impl FnMut(Point3, Point3, Physics) -> FaceTag) -> Result<Mesh, MeshError> {
        let mut nodes = Vec::new();
        let mut elements = Vec::new();
        let mut faces = Vec::new();
        let mut blocks = BTreeMap::new();
        for (bi, b) in self.blocks.iter().enumerate() {
            blocks.insert(b.block_id, b.physics);
            let [nx, ny, nz] = b.divisions;
            let base = nodes.len();
            let coord = |k: usize, i: usize, n: usize| {
                if i == n {
                    b.origin[k] + b.extent[k]
                } else {
                    b.origin[k] + b.extent[k] * i as f64 / n as f64
                }
            };
            for k in 0..=nz {
                for j in 0..=ny {
                    for i in 0..=nx {
                        let p = [coord(0, i, nx), coord(1, j, ny), coord(2, k, nz)];
                        let p = match &self.map {
                            Some(f) => f(p),
                            None => p,
                        };
                        nodes.push(Node {
                            id: nodes.len(),
                            x: p[0],
                            y: p[1],
                            z: p[2],
                        });
                    }
                }
            }
            let nid = |i: usize, j: usize, k: usize| base + i + (nx + 1) * (j + (ny + 1) * k);
            for k in 0..nz {
                for j in 0..ny {
                    for i in 0..nx {
                        let id = elements.len();
                        elements.push(HexElement {
                            id,
                            node_ids: [
                                nid(i, j, k),
                                nid(i + 1, j, k),
                                nid(i + 1, j + 1, k),
                                nid(i, j + 1, k),
                                nid(i, j, k + 1),
                                nid(i + 1, j, k + 1),
                                nid(i + 1, j + 1, k + 1),
                                nid(i, j + 1, k + 1),
                            ],
                            block_id: b.block_id,
                            degree: b.degree,
                        });
                        let idx = [i, j, k];
                        for lf in 0..6 {
                            let axis = lf / 2;
                            let upper = lf % 2 == 1;
                            let on_boundary = if upper {
                                idx[axis] + 1 == b.divisions[axis]
                            } else {
                                idx[axis] == 0
                            };
                            if !on_boundary {
                                continue;
                            }
                            let value = coord(axis, idx[axis] + upper as usize, b.divisions[axis]);
                            let (a1, a2) = other_axes(axis);
                            let lo = [coord(a1, idx[a1], b.divisions[a1]), coord(a2, idx[a2], b.divisions[a2])];
                            let hi = [
                                coord(a1, idx[a1] + 1, b.divisions[a1]),
                                coord(a2, idx[a2] + 1, b.divisions[a2]),
                            ];
                            let neighbour = self
                                .blocks
                                .iter()
                                .enumerate()
                                .find(|(oi, o)| *oi != bi && o.contains_face_rect(axis, value, lo, hi))
                                .map(|(_, o)| o.physics);
                            let t = match neighbour {
                                Some(op) if op == b.physics && op == Physics::Elastic => FaceTag::DgInterface,
                                Some(op) if op != b.physics => FaceTag::ElastoAcoustic,
                                Some(_) => {
                                    return Err(MeshError::InvalidFace {
                                        element: id,
                                        face: lf,
                                        msg: "acoustic blocks cannot share an interface".into(),
                                    })
                                }
                                None => {
                                    let mut c = [0.0; 3];
                                    c[axis] = value;
                                    c[a1] = 0.5 * (lo[0] + hi[0]);
                                    c[a2] = 0.5 * (lo[1] + hi[1]);
                                    let mut n = [0.0; 3];
                                    n[axis] = if upper { 1.0 } else { -1.0 };
                                    tag(c, n, b.physics)
                                }
                            };
                            faces.push(BoundaryFace {
                                element_id: id,
                                local_face: lf,
                                tag: t,
                            });
                        }
                    }
                }
            }
        }
        pair_interfaces(Mesh::new(nodes, elements, blocks, faces)?)
    }
}

/// `[0,1]^3` split into `n^3` degree-2 elastic elements with free faces.
pub fn unit_cube_mesh(n: usize) -> Mesh {
    let b = BoxBlock::new(1, Physics::Elastic, 2, [0.0; 3], [1.0; 3], [n, n, n]);
    BoxMeshBuilder::new(vec![b])
        .build(|_, _, _| FaceTag::FreeElastic)
        .expect("unit cube mesh is valid")
}
