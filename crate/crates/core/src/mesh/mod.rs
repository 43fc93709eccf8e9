//! Multi-block hexahedral meshes with tagged boundaries and paired
//! (possibly non-conforming) block interfaces.

mod format;
mod pairing;
pub mod structured;

use std::collections::{BTreeMap, HashSet};

use crate::basis::{self, map_to_physical};
use crate::geom::{self, det3, Point3, PointIndex};
use thiserror::Error;

pub use format::{load_mesh, parse_mesh, write_mesh};
pub use pairing::{clip_convex, pair_face_sets, pair_interfaces};

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("cannot read mesh file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("element {element}: non-positive Jacobian determinant {det:e}")]
    NegativeJacobian { element: usize, det: f64 },
    #[error("element {element}: {msg}")]
    InvalidElement { element: usize, msg: String },
    #[error("node {node}: {msg}")]
    InvalidNode { node: usize, msg: String },
    #[error("face ({element}, {face}): {msg}")]
    InvalidFace { element: usize, face: usize, msg: String },
    #[error(
        "interface face ({element}, {face}) is not covered by the opposite side (relative area deficit {deficit:e})"
    )]
    UncoveredInterface { element: usize, face: usize, deficit: f64 },
    #[error("interface face ({element}, {face}) is not planar")]
    NonPlanar { element: usize, face: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Physics {
    Elastic,
    Acoustic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FaceTag {
    FreeElastic,
    FreeAcoustic,
    AbcElastic,
    AbcAcoustic,
    ElastoAcoustic,
    DgInterface,
}

impl FaceTag {
    pub fn token(self) -> &'static str {
        match self {
            FaceTag::FreeElastic => "FREE_E",
            FaceTag::FreeAcoustic => "FREE_A",
            FaceTag::AbcElastic => "ABC_E",
            FaceTag::AbcAcoustic => "ABC_A",
            FaceTag::ElastoAcoustic => "EA",
            FaceTag::DgInterface => "DG",
        }
    }

    pub fn from_token(s: &str) -> Option<Self> {
        Some(match s {
            "FREE_E" => FaceTag::FreeElastic,
            "FREE_A" => FaceTag::FreeAcoustic,
            "ABC_E" => FaceTag::AbcElastic,
            "ABC_A" => FaceTag::AbcAcoustic,
            "EA" => FaceTag::ElastoAcoustic,
            "DG" => FaceTag::DgInterface,
            _ => return None,
        })
    }

    /// Whether the tag may appear on a block of the given physics.
    pub fn allowed_on(self, physics: Physics) -> bool {
        match self {
            FaceTag::FreeElastic | FaceTag::AbcElastic | FaceTag::DgInterface => physics == Physics::Elastic,
            FaceTag::FreeAcoustic | FaceTag::AbcAcoustic => physics == Physics::Acoustic,
            FaceTag::ElastoAcoustic => true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub id: usize,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Node {
    pub fn pos(&self) -> Point3 {
        [self.x, self.y, self.z]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HexElement {
    pub id: usize,
    /// Bottom quad counter-clockwise seen from +z, then the top quad.
    pub node_ids: [usize; 8],
    pub block_id: u32,
    pub degree: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BoundaryFace {
    pub element_id: usize,
    /// 0:-x, 1:+x, 2:-y, 3:+y, 4:-z, 5:+z of the reference cube.
    pub local_face: usize,
    pub tag: FaceTag,
}

/// Intersection of two opposite element faces on a block interface.
#[derive(Debug, Clone)]
pub struct FacePair {
    pub minus: BoundaryFace,
    pub plus: BoundaryFace,
    pub polygon: Vec<Point3>,
    /// Unit normal pointing from the minus side toward the plus side.
    pub normal: Point3,
    pub h_f: f64,
    pub p_f: usize,
    pub quadrature: Vec<(Point3, f64)>,
}

impl FacePair {
    pub fn area(&self) -> f64 {
        polygon_area(&self.polygon, self.normal)
    }
}

/// Corner indices of each local face, ordered around the face.
pub const FACE_CORNERS: [[usize; 4]; 6] = [
    [0, 3, 7, 4],
    [1, 2, 6, 5],
    [0, 1, 5, 4],
    [3, 2, 6, 7],
    [0, 1, 2, 3],
    [4, 5, 6, 7],
];

/// Reference axis held fixed on a local face, and its value (±1).
pub fn face_axis(local_face: usize) -> (usize, f64) {
    (local_face / 2, if local_face % 2 == 0 { -1.0 } else { 1.0 })
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub nodes: Vec<Node>,
    pub elements: Vec<HexElement>,
    pub boundary_faces: Vec<BoundaryFace>,
    pub dg_pairs: Vec<FacePair>,
    pub ea_pairs: Vec<FacePair>,
    pub blocks: BTreeMap<u32, Physics>,
}

impl Mesh {
    /// Validates raw mesh data. Interfaces are not paired yet; see [`pair_interfaces`].
    pub fn new(
        nodes: Vec<Node>,
        elements: Vec<HexElement>,
        blocks: BTreeMap<u32, Physics>,
        boundary_faces: Vec<BoundaryFace>,
    ) -> Result<Self, MeshError> {
        let mesh = Mesh {
            nodes,
            elements,
            boundary_faces,
            dg_pairs: Vec::new(),
            ea_pairs: Vec::new(),
            blocks,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn corners(&self, element: usize) -> [Point3; 8] {
        let e = &self.elements[element];
        let mut c = [[0.0; 3]; 8];
        for (k, &n) in e.node_ids.iter().enumerate() {
            c[k] = self.nodes[n].pos();
        }
        c
    }

    pub fn physics_of(&self, element: usize) -> Physics {
        self.blocks[&self.elements[element].block_id]
    }

    pub fn element_diameter(&self, element: usize) -> f64 {
        basis::corner_diameter(&self.corners(element))
    }

    pub fn face_corners(&self, element: usize, local_face: usize) -> [Point3; 4] {
        let c = self.corners(element);
        let idx = FACE_CORNERS[local_face];
        [c[idx[0]], c[idx[1]], c[idx[2]], c[idx[3]]]
    }

    pub fn centroid(&self, element: usize) -> Point3 {
        map_to_physical(&self.corners(element), [0.0; 3]).0
    }

    /// Outward unit normal of a local face at its centre.
    pub fn face_normal(&self, element: usize, local_face: usize) -> Point3 {
        let corners = self.corners(element);
        let (axis, sign) = face_axis(local_face);
        let mut r = [0.0; 3];
        r[axis] = sign;
        let (_, jac) = map_to_physical(&corners, r);
        geom::normalize(face_cross(&jac, axis, sign))
    }

    pub fn bounding_extent(&self) -> f64 {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for n in &self.nodes {
            let p = n.pos();
            for k in 0..3 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        geom::dist(lo, hi).max(f64::MIN_POSITIVE)
    }

    fn validate(&self) -> Result<(), MeshError> {
        for (i, n) in self.nodes.iter().enumerate() {
            if n.id != i {
                return Err(MeshError::InvalidNode {
                    node: n.id,
                    msg: format!("ids must be contiguous from 0 (expected {i})"),
                });
            }
            if !(n.x.is_finite() && n.y.is_finite() && n.z.is_finite()) {
                return Err(MeshError::InvalidNode {
                    node: i,
                    msg: "non-finite coordinate".into(),
                });
            }
        }
        let mut block_degree: BTreeMap<u32, usize> = BTreeMap::new();
        for (i, e) in self.elements.iter().enumerate() {
            if e.id != i {
                return Err(MeshError::InvalidElement {
                    element: e.id,
                    msg: format!("ids must be contiguous from 0 (expected {i})"),
                });
            }
            if let Some(&bad) = e.node_ids.iter().find(|&&n| n >= self.nodes.len()) {
                return Err(MeshError::InvalidElement {
                    element: i,
                    msg: format!("unknown node {bad}"),
                });
            }
            if !self.blocks.contains_key(&e.block_id) {
                return Err(MeshError::InvalidElement {
                    element: i,
                    msg: format!("block {} not declared", e.block_id),
                });
            }
            let basis = basis::gll(e.degree).map_err(|err| MeshError::InvalidElement {
                element: i,
                msg: err.to_string(),
            })?;
            match block_degree.get(&e.block_id) {
                Some(&p) if p != e.degree => {
                    return Err(MeshError::InvalidElement {
                        element: i,
                        msg: format!(
                            "degree {} differs from degree {} used elsewhere in block {}",
                            e.degree, p, e.block_id
                        ),
                    })
                }
                _ => {
                    block_degree.insert(e.block_id, e.degree);
                }
            }
            let corners = self.corners(i);
            for &a in &basis.nodes {
                for &b in &basis.nodes {
                    for &c in &basis.nodes {
                        let (_, jac) = map_to_physical(&corners, [a, b, c]);
                        let det = det3(&jac);
                        if !(det > 0.0) {
                            return Err(MeshError::NegativeJacobian { element: i, det });
                        }
                    }
                }
            }
        }

        let mut tagged: HashSet<(usize, usize)> = HashSet::new();
        for f in &self.boundary_faces {
            if f.element_id >= self.elements.len() || f.local_face > 5 {
                return Err(MeshError::InvalidFace {
                    element: f.element_id,
                    face: f.local_face,
                    msg: "unknown element or local face".into(),
                });
            }
            let phys = self.physics_of(f.element_id);
            if !f.tag.allowed_on(phys) {
                return Err(MeshError::InvalidFace {
                    element: f.element_id,
                    face: f.local_face,
                    msg: format!("tag {} not allowed on a {:?} block", f.tag.token(), phys),
                });
            }
            if !tagged.insert((f.element_id, f.local_face)) {
                return Err(MeshError::InvalidFace {
                    element: f.element_id,
                    face: f.local_face,
                    msg: "face tagged more than once".into(),
                });
            }
        }

        // Match faces geometrically: same block => interior, other block => conforming interface.
        let tol = 1e-9 * self.bounding_extent();
        let mut index = PointIndex::new(tol);
        let mut face_list: Vec<(usize, usize)> = Vec::new();
        let mut partner: Vec<Option<usize>> = Vec::new();
        for e in 0..self.elements.len() {
            for lf in 0..6 {
                let fc = self.face_corners(e, lf);
                let centroid = geom::scale(geom::add(geom::add(fc[0], fc[1]), geom::add(fc[2], fc[3])), 0.25);
                let id = face_list.len();
                face_list.push((e, lf));
                partner.push(None);
                if let Some(other) = index.find(centroid) {
                    let (oe, olf) = face_list[other];
                    let ofc = self.face_corners(oe, olf);
                    let same = fc.iter().all(|p| ofc.iter().any(|q| geom::dist(*p, *q) <= 2.0 * tol));
                    if same {
                        if partner[other].is_some() {
                            return Err(MeshError::InvalidFace {
                                element: e,
                                face: lf,
                                msg: "face shared by more than two elements".into(),
                            });
                        }
                        partner[other] = Some(id);
                        partner[id] = Some(other);
                        continue;
                    }
                }
                index.insert(centroid, id);
            }
        }
        for (id, &(e, lf)) in face_list.iter().enumerate() {
            let is_tagged = tagged.contains(&(e, lf));
            match partner[id] {
                Some(other) => {
                    let (oe, _) = face_list[other];
                    let same_block = self.elements[oe].block_id == self.elements[e].block_id;
                    if same_block && is_tagged {
                        return Err(MeshError::InvalidFace {
                            element: e,
                            face: lf,
                            msg: "interior face carries a boundary tag".into(),
                        });
                    }
                    if !same_block && !is_tagged {
                        return Err(MeshError::InvalidFace {
                            element: e,
                            face: lf,
                            msg: "block interface face is not tagged DG or EA".into(),
                        });
                    }
                }
                None if !is_tagged => {
                    return Err(MeshError::InvalidFace {
                        element: e,
                        face: lf,
                        msg: "boundary face has no tag".into(),
                    });
                }
                None => {}
            }
        }
        Ok(())
    }
}

/// Unnormalised outward face normal from the Jacobian at a face point; its
/// length is the surface Jacobian.
pub fn face_cross(jac: &geom::Mat3, axis: usize, sign: f64) -> Point3 {
    let col = |j: usize| [jac[0][j], jac[1][j], jac[2][j]];
    let (a, b) = match axis {
        0 => (1, 2),
        1 => (2, 0),
        _ => (0, 1),
    };
    geom::scale(geom::cross(col(a), col(b)), sign)
}

/// Area of a planar polygon with known unit normal.
pub fn polygon_area(poly: &[Point3], normal: Point3) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let mut acc = [0.0; 3];
    for i in 0..poly.len() {
        let j = (i + 1) % poly.len();
        acc = geom::add(acc, geom::cross(poly[i], poly[j]));
    }
    0.5 * geom::dot(acc, normal).abs()
}
