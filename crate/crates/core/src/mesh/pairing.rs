//! Geometric pairing of interface faces.
//!
//! Both sides of an interface are projected onto the plane of the minus
//! face, and every minus quad is clipped against every opposing plus quad.
//! The clipped convex polygons carry their own quadrature, so the two sides
//! never need matching node layouts.

use super::{polygon_area, BoundaryFace, FacePair, FaceTag, Mesh, MeshError, Physics};
use crate::basis::gauss_legendre;
use crate::geom::{self, Point3};

type P2 = [f64; 2];

#[derive(Debug, Clone)]
struct PlanarFace {
    face: BoundaryFace,
    corners: [Point3; 4],
    centroid: Point3,
    normal: Point3,
    area: f64,
    h: f64,
    degree: usize,
    lo: Point3,
    hi: Point3,
}

fn planar_face(mesh: &Mesh, face: BoundaryFace) -> Result<PlanarFace, MeshError> {
    let corners = mesh.face_corners(face.element_id, face.local_face);
    let centroid = geom::scale(
        geom::add(geom::add(corners[0], corners[1]), geom::add(corners[2], corners[3])),
        0.25,
    );
    // Newell normal, oriented outward using the element Jacobian
    let mut nsum = [0.0; 3];
    for i in 0..4 {
        nsum = geom::add(nsum, geom::cross(corners[i], corners[(i + 1) % 4]));
    }
    let mut normal = geom::normalize(nsum);
    if geom::dot(normal, mesh.face_normal(face.element_id, face.local_face)) < 0.0 {
        normal = geom::scale(normal, -1.0);
    }
    let h = mesh.element_diameter(face.element_id);
    let size = geom::dist(corners[0], corners[2]).max(geom::dist(corners[1], corners[3]));
    if corners
        .iter()
        .any(|c| geom::dot(geom::sub(*c, centroid), normal).abs() > 1e-8 * size)
    {
        return Err(MeshError::NonPlanar {
            element: face.element_id,
            face: face.local_face,
        });
    }
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for c in &corners {
        for k in 0..3 {
            lo[k] = lo[k].min(c[k]);
            hi[k] = hi[k].max(c[k]);
        }
    }
    Ok(PlanarFace {
        face,
        corners,
        centroid,
        normal,
        area: polygon_area(&corners, normal),
        h,
        degree: mesh.elements[face.element_id].degree,
        lo,
        hi,
    })
}

fn signed_area(poly: &[P2]) -> f64 {
    let mut a = 0.0;
    for i in 0..poly.len() {
        let j = (i + 1) % poly.len();
        a += poly[i][0] * poly[j][1] - poly[j][0] * poly[i][1];
    }
    0.5 * a
}

/// Sutherland-Hodgman clipping of a convex polygon against a convex
/// counter-clockwise clip polygon.
pub fn clip_convex(subject: &[[f64; 2]], clip: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut out: Vec<P2> = subject.to_vec();
    for i in 0..clip.len() {
        if out.is_empty() {
            break;
        }
        let a = clip[i];
        let b = clip[(i + 1) % clip.len()];
        let side = |p: P2| (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
        let input = std::mem::take(&mut out);
        for j in 0..input.len() {
            let cur = input[j];
            let prev = input[(j + input.len() - 1) % input.len()];
            let (sc, sp) = (side(cur), side(prev));
            if sc >= 0.0 {
                if sp < 0.0 {
                    let t = sp / (sp - sc);
                    out.push([prev[0] + t * (cur[0] - prev[0]), prev[1] + t * (cur[1] - prev[1])]);
                }
                out.push(cur);
            } else if sp >= 0.0 {
                let t = sp / (sp - sc);
                out.push([prev[0] + t * (cur[0] - prev[0]), prev[1] + t * (cur[1] - prev[1])]);
            }
        }
    }
    out
}

/// Collapsed tensor Gauss rule on a triangle with `n` points per direction.
fn triangle_rule(a: Point3, b: Point3, c: Point3, n: usize, out: &mut Vec<(Point3, f64)>) {
    let area = 0.5 * geom::norm(geom::cross(geom::sub(b, a), geom::sub(c, a)));
    if area == 0.0 {
        return;
    }
    let (x, w) = gauss_legendre(n);
    for i in 0..n {
        let s = 0.5 * (x[i] + 1.0);
        for j in 0..n {
            let t = 0.5 * (x[j] + 1.0);
            let u = s;
            let v = (1.0 - s) * t;
            let p = geom::add(
                a,
                geom::add(geom::scale(geom::sub(b, a), u), geom::scale(geom::sub(c, a), v)),
            );
            // weights on [0,1]^2 are w/2 each; Jacobian (1 - s) * 2 * area
            let wt = 0.25 * w[i] * w[j] * (1.0 - s) * 2.0 * area;
            out.push((p, wt));
        }
    }
}

fn polygon_quadrature(poly: &[Point3], p_f: usize) -> Vec<(Point3, f64)> {
    // order 2 p_F + 1 on each fan triangle; the collapsed rule loses one degree
    let n = p_f + 2;
    let mut q = Vec::with_capacity(poly.len().saturating_sub(2) * n * n);
    for k in 1..poly.len().saturating_sub(1) {
        triangle_rule(poly[0], poly[k], poly[k + 1], n, &mut q);
    }
    q
}

fn clip_pair(minus: &PlanarFace, plus: &PlanarFace, tag: FaceTag) -> Option<FacePair> {
    let n = minus.normal;
    if geom::dot(n, plus.normal) > -1.0 + 1e-8 {
        return None;
    }
    let h_f = minus.h.min(plus.h);
    if geom::dot(geom::sub(plus.centroid, minus.centroid), n).abs() > 1e-8 * h_f {
        return None;
    }
    let pad = 1e-9 * h_f;
    for k in 0..3 {
        if minus.lo[k] > plus.hi[k] + pad || plus.lo[k] > minus.hi[k] + pad {
            return None;
        }
    }
    let e1 = geom::normalize({
        let d = geom::sub(minus.corners[1], minus.corners[0]);
        geom::sub(d, geom::scale(n, geom::dot(d, n)))
    });
    let e2 = geom::cross(n, e1);
    let project = |p: Point3| -> P2 {
        let d = geom::sub(p, minus.centroid);
        [geom::dot(d, e1), geom::dot(d, e2)]
    };
    let ccw = |corners: &[Point3; 4]| -> Vec<P2> {
        let mut poly: Vec<P2> = corners.iter().map(|c| project(*c)).collect();
        if signed_area(&poly) < 0.0 {
            poly.reverse();
        }
        poly
    };
    let clipped = clip_convex(&ccw(&minus.corners), &ccw(&plus.corners));
    if clipped.len() < 3 {
        return None;
    }
    let area = signed_area(&clipped);
    if area < 1e-12 * h_f * h_f {
        return None;
    }
    let polygon: Vec<Point3> = clipped
        .iter()
        .map(|q| geom::add(minus.centroid, geom::add(geom::scale(e1, q[0]), geom::scale(e2, q[1]))))
        .collect();
    let p_f = minus.degree.max(plus.degree);
    let quadrature = polygon_quadrature(&polygon, p_f);
    Some(FacePair {
        minus: BoundaryFace { tag, ..minus.face },
        plus: BoundaryFace { tag, ..plus.face },
        polygon,
        normal: n,
        h_f,
        p_f,
        quadrature,
    })
}

/// Pairs every minus face with every geometrically overlapping plus face.
///
/// The normal of each pair is the outward normal of its minus face, so
/// swapping the two sets yields the same polygons with negated normals.
pub fn pair_face_sets(
    mesh: &Mesh,
    minus: &[BoundaryFace],
    plus: &[BoundaryFace],
    tag: FaceTag,
) -> Result<Vec<FacePair>, MeshError> {
    let minus: Vec<PlanarFace> = minus.iter().map(|f| planar_face(mesh, *f)).collect::<Result<_, _>>()?;
    let plus: Vec<PlanarFace> = plus.iter().map(|f| planar_face(mesh, *f)).collect::<Result<_, _>>()?;
    let mut pairs = Vec::new();
    for m in &minus {
        for p in &plus {
            if mesh.elements[m.face.element_id].block_id == mesh.elements[p.face.element_id].block_id {
                continue;
            }
            if let Some(pair) = clip_pair(m, p, tag) {
                pairs.push(pair);
            }
        }
    }
    Ok(pairs)
}

fn check_coverage(mesh: &Mesh, faces: &[BoundaryFace], pairs: &[FacePair]) -> Result<(), MeshError> {
    for f in faces {
        let pf = planar_face(mesh, *f)?;
        let covered: f64 = pairs
            .iter()
            .filter(|p| {
                (p.minus.element_id, p.minus.local_face) == (f.element_id, f.local_face)
                    || (p.plus.element_id, p.plus.local_face) == (f.element_id, f.local_face)
            })
            .map(|p| p.area())
            .sum();
        let deficit = (pf.area - covered) / pf.area;
        if deficit.abs() > 1e-8 {
            return Err(MeshError::UncoveredInterface {
                element: f.element_id,
                face: f.local_face,
                deficit,
            });
        }
    }
    Ok(())
}

/// Builds DG and elasto-acoustic face pairs from the tagged interface faces.
///
/// DG pairs are oriented from the lower block id to the higher one; EA pairs
/// from the elastic side to the acoustic side.
pub fn pair_interfaces(mut mesh: Mesh) -> Result<Mesh, MeshError> {
    let dg: Vec<BoundaryFace> = mesh
        .boundary_faces
        .iter()
        .filter(|f| f.tag == FaceTag::DgInterface)
        .copied()
        .collect();
    let mut dg_pairs = Vec::new();
    let blocks: Vec<u32> = mesh.blocks.keys().copied().collect();
    for (i, &bm) in blocks.iter().enumerate() {
        let minus: Vec<BoundaryFace> = dg
            .iter()
            .filter(|f| mesh.elements[f.element_id].block_id == bm)
            .copied()
            .collect();
        let plus: Vec<BoundaryFace> = dg
            .iter()
            .filter(|f| blocks[i + 1..].contains(&mesh.elements[f.element_id].block_id))
            .copied()
            .collect();
        if !minus.is_empty() && !plus.is_empty() {
            dg_pairs.extend(pair_face_sets(&mesh, &minus, &plus, FaceTag::DgInterface)?);
        }
    }
    check_coverage(&mesh, &dg, &dg_pairs)?;

    let ea: Vec<BoundaryFace> = mesh
        .boundary_faces
        .iter()
        .filter(|f| f.tag == FaceTag::ElastoAcoustic)
        .copied()
        .collect();
    let (ea_el, ea_ac): (Vec<BoundaryFace>, Vec<BoundaryFace>) = ea
        .iter()
        .partition(|f| mesh.physics_of(f.element_id) == Physics::Elastic);
    let ea_pairs = pair_face_sets(&mesh, &ea_el, &ea_ac, FaceTag::ElastoAcoustic)?;
    check_coverage(&mesh, &ea, &ea_pairs)?;

    mesh.dg_pairs = dg_pairs;
    mesh.ea_pairs = ea_pairs;
    Ok(mesh)
}
