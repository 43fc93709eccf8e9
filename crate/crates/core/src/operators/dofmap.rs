//! Degree-of-freedom numbering.
//!
//! GLL nodes are shared between elements of the same block (continuous
//! within a block) and duplicated across block boundaries, so DG and EA
//! interfaces always see two independent traces.

use crate::basis::{map_to_physical, node_index, Basis1D};
use crate::geom::{Point3, PointIndex};
use crate::mesh::{Mesh, Physics};

#[derive(Debug, Clone)]
pub struct DofMap {
    /// Per element, global node index (within its physics numbering) of each local GLL node.
    pub elem_nodes: Vec<Vec<usize>>,
    pub elem_physics: Vec<Physics>,
    pub elastic_nodes: Vec<Point3>,
    pub acoustic_nodes: Vec<Point3>,
    /// Owning block of each node.
    pub elastic_block: Vec<u32>,
    pub acoustic_block: Vec<u32>,
}

impl DofMap {
    /// Numbers GLL nodes block by block; coincident nodes of one block are
    /// merged with tolerance `1e-10 h`, `h` the smallest element diameter of the block.
    pub fn build<'a>(mesh: &Mesh, bases: &dyn Fn(usize) -> &'a Basis1D) -> Self {
        let mut elem_nodes = vec![Vec::new(); mesh.elements.len()];
        let mut elem_physics = Vec::with_capacity(mesh.elements.len());
        let mut elastic_nodes = Vec::new();
        let mut acoustic_nodes = Vec::new();
        let mut elastic_block = Vec::new();
        let mut acoustic_block = Vec::new();
        for e in 0..mesh.elements.len() {
            elem_physics.push(mesh.physics_of(e));
        }
        for (&block, &physics) in &mesh.blocks {
            let members: Vec<usize> = (0..mesh.elements.len())
                .filter(|&e| mesh.elements[e].block_id == block)
                .collect();
            let h = members
                .iter()
                .map(|&e| mesh.element_diameter(e))
                .fold(f64::INFINITY, f64::min);
            if members.is_empty() {
                continue;
            }
            let mut index = PointIndex::new(1e-10 * h);
            let (coords, owner) = match physics {
                Physics::Elastic => (&mut elastic_nodes, &mut elastic_block),
                Physics::Acoustic => (&mut acoustic_nodes, &mut acoustic_block),
            };
            for &e in &members {
                let basis = bases(mesh.elements[e].degree);
                let n = basis.len();
                let corners = mesh.corners(e);
                let mut local = vec![0usize; n * n * n];
                for c in 0..n {
                    for b in 0..n {
                        for a in 0..n {
                            let r = [basis.nodes[a], basis.nodes[b], basis.nodes[c]];
                            let (x, _) = map_to_physical(&corners, r);
                            let (id, fresh) = index.find_or_insert(x, coords.len());
                            if fresh {
                                coords.push(x);
                                owner.push(block);
                            }
                            local[node_index(n, a, b, c)] = id;
                        }
                    }
                }
                elem_nodes[e] = local;
            }
        }
        Self {
            elem_nodes,
            elem_physics,
            elastic_nodes,
            acoustic_nodes,
            elastic_block,
            acoustic_block,
        }
    }

    pub fn n_elastic_dofs(&self) -> usize {
        3 * self.elastic_nodes.len()
    }

    pub fn n_acoustic_dofs(&self) -> usize {
        self.acoustic_nodes.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::gll;
    use crate::mesh::structured::{unit_cube_mesh, BoxBlock, BoxMeshBuilder};
    use crate::mesh::FaceTag;

    #[test]
    fn shared_nodes_within_a_block() {
        let m = unit_cube_mesh(2);
        let b = gll(2).unwrap();
        let d = DofMap::build(&m, &|_| &b);
        // 2 elements of degree 2 per direction: 5 nodes per direction
        assert_eq!(d.elastic_nodes.len(), 125);
        assert_eq!(d.n_elastic_dofs(), 375);
        assert_eq!(d.n_acoustic_dofs(), 0);
    }

    #[test]
    fn nodes_are_duplicated_across_blocks() {
        let a = BoxBlock::new(1, Physics::Elastic, 1, [0.0; 3], [1.0; 3], [1, 1, 1]);
        let b = BoxBlock::new(2, Physics::Elastic, 1, [1.0, 0.0, 0.0], [1.0; 3], [1, 1, 1]);
        let m = BoxMeshBuilder::new(vec![a, b])
            .build(|_, _, _| FaceTag::FreeElastic)
            .unwrap();
        let basis = gll(1).unwrap();
        let d = DofMap::build(&m, &|_| &basis);
        assert_eq!(d.elastic_nodes.len(), 16);
        let shared: Vec<_> = d.elem_nodes[0].iter().filter(|n| d.elem_nodes[1].contains(n)).collect();
        assert!(shared.is_empty());
    }
}
