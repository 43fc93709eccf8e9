use super::*;
use crate::materials::{AcousticMaterial, ElasticMaterial};
use crate::mesh::structured::{BoxBlock, BoxMeshBuilder};
use proptest::prelude::*;

fn elastic(rho: f64, lambda: f64, mu: f64) -> Material {
    let vs = (mu / rho).sqrt();
    let vp = ((lambda + 2.0 * mu) / rho).sqrt();
    Material::Elastic(ElasticMaterial::undamped(rho, vp, vs).unwrap())
}

fn cube_model(p: usize, n: usize, mat: Material) -> SemModel {
    let phys = mat.physics();
    let b = BoxBlock::new(1, phys, p, [0.0; 3], [1.0; 3], [n, n, n]);
    let tag = match phys {
        Physics::Elastic => FaceTag::FreeElastic,
        Physics::Acoustic => FaceTag::FreeAcoustic,
    };
    let mesh = BoxMeshBuilder::new(vec![b]).build(|_, _, _| tag).unwrap();
    let mats = vec![mat; mesh.elements.len()];
    SemModel::new(mesh, mats, ModelConfig::default()).unwrap()
}

/// Two elastic blocks meeting at x = 1 with a refined, higher-degree plus side.
fn nonconforming_model(beta: f64, workers: usize) -> SemModel {
    let a = BoxBlock::new(1, Physics::Elastic, 2, [0.0; 3], [1.0, 1.0, 1.0], [1, 1, 1]);
    let b = BoxBlock::new(2, Physics::Elastic, 3, [1.0, 0.0, 0.0], [0.7, 1.0, 1.0], [1, 2, 3]);
    // curve the elements while keeping the interface x = 1 planar
    let mesh = BoxMeshBuilder::new(vec![a, b])
        .with_map(|p| {
            [
                p[0] + 0.05 * (p[0] - 1.0) * p[1] * p[2],
                p[1],
                p[2] + 0.03 * p[0] * p[1],
            ]
        })
        .build(|_, _, _| FaceTag::FreeElastic)
        .unwrap();
    let mats: Vec<Material> = mesh
        .elements
        .iter()
        .map(|e| {
            if e.block_id == 1 {
                elastic(2.0, 1.0, 1.5)
            } else {
                elastic(1.0, 3.0, 0.5)
            }
        })
        .collect();
    SemModel::new(mesh, mats, ModelConfig { beta, workers }).unwrap()
}

fn full_elastic(m: &SemModel, u: &[f64]) -> Vec<f64> {
    // K u - DG u, the symmetric operator
    let mut out = vec![0.0; u.len()];
    m.apply_elastic_stiffness(u, &mut out);
    let mut dg = vec![0.0; u.len()];
    m.apply_dg_flux(u, &mut dg);
    out.iter().zip(&dg).map(|(a, b)| a - b).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn lcg_vec(n: usize, seed: u64) -> Vec<f64> {
    let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    (0..n)
        .map(|_| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        })
        .collect()
}

#[test]
fn mass_of_unit_cube() {
    let m = cube_model(1, 1, elastic(1.0, 1.0, 1.0));
    assert_eq!(m.mass.e2.len(), 8);
    for &v in &m.mass.e2 {
        assert!((v - 0.125).abs() < 1e-15);
    }
    let damped = Material::Elastic(ElasticMaterial::undamped(1.0, 3f64.sqrt(), 1.0).unwrap().with_zeta(0.5));
    let m = cube_model(1, 1, damped);
    for g in 0..8 {
        assert!((m.mass.e1[g] - 0.125).abs() < 1e-15);
        // zeta^2 * 1/8
        assert!((m.mass.e0[g] - 0.03125).abs() < 1e-15);
    }
    let m = cube_model(
        1,
        1,
        Material::Acoustic(AcousticMaterial::new(1000.0, 2.0, 0.0).unwrap()),
    );
    for &v in &m.mass.a2 {
        assert!((v - 1.0 / 32.0).abs() < 1e-15);
    }
}

#[test]
fn mass_sums_to_volume_times_density() {
    let m = cube_model(3, 2, elastic(2.5, 1.0, 1.0));
    let total: f64 = m.mass.e2.iter().sum();
    assert!((total - 2.5).abs() < 1e-13);
}

#[test]
fn rigid_motions_are_annihilated() {
    let m = nonconforming_model(250.0, 1);
    let nodes = &m.dofs.elastic_nodes;
    let mut u = vec![0.0; m.n_elastic()];
    let omega = [0.3, -0.2, 0.5];
    for (g, x) in nodes.iter().enumerate() {
        let r = crate::geom::cross(omega, *x);
        for c in 0..3 {
            u[3 * g + c] = [1.0, -2.0, 0.5][c] + r[c];
        }
    }
    let ku = full_elastic(&m, &u);
    let scale = m.config.beta * 9.0 * u.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let worst = ku.iter().map(|v| v.abs()).fold(0.0, f64::max);
    assert!(worst < 1e-11 * scale, "residual {worst}");
}

#[test]
fn uniaxial_strain_energy() {
    let m = cube_model(2, 2, elastic(1.0, 0.0, 1.0));
    let mut u = vec![0.0; m.n_elastic()];
    for (g, x) in m.dofs.elastic_nodes.iter().enumerate() {
        u[3 * g] = x[0];
    }
    let mut ku = vec![0.0; u.len()];
    m.apply_elastic_stiffness(&u, &mut ku);
    assert!((dot(&u, &ku) - 2.0).abs() < 1e-12);
}

#[test]
fn acoustic_gradient_energies() {
    let m = cube_model(2, 2, Material::Acoustic(AcousticMaterial::new(1.0, 1.0, 0.0).unwrap()));
    let run = |f: &dyn Fn(&Point3) -> f64| {
        let psi: Vec<f64> = m.dofs.acoustic_nodes.iter().map(f).collect();
        let mut k = vec![0.0; psi.len()];
        m.apply_acoustic_stiffness(&psi, &mut k);
        (dot(&psi, &k), k)
    };
    let (e, k) = run(&|_| 3.0);
    assert!(e.abs() < 1e-12 && k.iter().all(|v| v.abs() < 1e-12));
    assert!((run(&|x| x[0]).0 - 1.0).abs() < 1e-12);
    assert!((run(&|x| x[0] + x[1]).0 - 2.0).abs() < 1e-12);
}

use crate::geom::Point3;

#[test]
fn continuous_field_has_no_penalty_work() {
    // u continuous and linear: jump vanishes, so u^T (DG u) = -2 <{sigma}, [[u]]> = 0
    let m = nonconforming_model(250.0, 1);
    let mut u = vec![0.0; m.n_elastic()];
    for (g, x) in m.dofs.elastic_nodes.iter().enumerate() {
        u[3 * g] = x[0] + 0.5 * x[1];
        u[3 * g + 2] = -x[2];
    }
    let mut dg = vec![0.0; u.len()];
    m.apply_dg_flux(&u, &mut dg);
    assert!(dot(&u, &dg).abs() < 1e-10);
}

#[test]
fn parallel_application_matches_serial() {
    let serial = nonconforming_model(10.0, 1);
    let parallel = nonconforming_model(10.0, 3);
    let u = lcg_vec(serial.n_elastic(), 7);
    let a = full_elastic(&serial, &u);
    let b = full_elastic(&parallel, &u);
    let c = full_elastic(&parallel, &u);
    let norm = a.iter().map(|v| v.abs()).fold(0.0, f64::max);
    for i in 0..a.len() {
        assert!((a[i] - b[i]).abs() <= 1e-12 * norm);
        assert_eq!(b[i].to_bits(), c[i].to_bits());
    }
}

#[test]
fn dt_max_estimate() {
    let m = cube_model(2, 2, elastic(1.0, 1.0, 1.0));
    // h_min = 0.5, vp = sqrt(3), p = 2
    assert!((m.dt_max() - 0.5 / (3f64.sqrt() * 4.0)).abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn dg_augmented_operator_is_symmetric(sa in 0u64..1000, sb in 0u64..1000) {
        let m = nonconforming_model(5.0, 1);
        let a = lcg_vec(m.n_elastic(), sa);
        let b = lcg_vec(m.n_elastic(), sb + 1000);
        let lhs = dot(&a, &full_elastic(&m, &b));
        let rhs = dot(&b, &full_elastic(&m, &a));
        prop_assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(rhs.abs()).max(1.0));
    }

    #[test]
    fn acoustic_operator_is_symmetric(sa in 0u64..1000, sb in 0u64..1000) {
        let m = cube_model(3, 2, Material::Acoustic(AcousticMaterial::new(1.0, 1.5, 0.0).unwrap()));
        let a = lcg_vec(m.n_acoustic(), sa);
        let b = lcg_vec(m.n_acoustic(), sb + 1000);
        let mut ka = vec![0.0; a.len()];
        let mut kb = vec![0.0; a.len()];
        m.apply_acoustic_stiffness(&a, &mut ka);
        m.apply_acoustic_stiffness(&b, &mut kb);
        let (l, r) = (dot(&b, &ka), dot(&a, &kb));
        prop_assert!((l - r).abs() <= 1e-10 * l.abs().max(1.0));
    }

    #[test]
    fn penalised_operator_is_nonnegative(seed in 0u64..1000) {
        let m = nonconforming_model(1.0, 1);
        let u = lcg_vec(m.n_elastic(), seed);
        prop_assert!(dot(&u, &full_elastic(&m, &u)) > 0.0);
    }
}
