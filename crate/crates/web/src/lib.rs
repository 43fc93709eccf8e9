//! Browser bindings for three small demonstrations:
//!
//! * [`ColumnDemo`]: a plane P pulse in a solid column hitting a fluid layer,
//!   stepped interactively, with the impedance prediction for comparison.
//! * [`bandpass_response`]: magnitude response of the Butterworth band-pass.
//! * [`gof_scores`] / [`packet`]: goodness-of-fit scores between a wave
//!   packet and a delayed, scaled copy of it.
//!
//! Errors cross the boundary as plain strings so the same functions run
//! natively in tests.

use wasm_bindgen::prelude::*;

use dgsem::materials::{AcousticMaterial, ElasticMaterial, Material};
use dgsem::mesh::structured::{BoxBlock, BoxMeshBuilder};
use dgsem::mesh::{FaceTag, Physics};
use dgsem::operators::{ModelConfig, SemModel};
use dgsem::postproc::Receiver;
use dgsem::signal::{anderson_gof, BandPass, ComponentTrace, FilterMode};
use dgsem::timeint::{Integrator, State, TimeConfig};

const DEGREE: usize = 4;
const SOLID_ELEMENTS: usize = 12;
const FLUID_ELEMENTS: usize = 8;
/// Pulse width in seconds.
const PULSE: f64 = 0.25;
const PROBES: usize = 241;

fn positive(name: &str, x: f64) -> Result<f64, String> {
    if x.is_finite() && x > 0.0 {
        Ok(x)
    } else {
        Err(format!("{name} must be a positive number, got {x}"))
    }
}

/// Solid half-space (bottom absorbing) under a fluid layer (top absorbing),
/// one element wide with free side walls. The solid has `lambda = 0` so the
/// column carries an exact 1D P wave.
#[wasm_bindgen]
pub struct ColumnDemo {
    model: SemModel,
    state: State,
    dt: f64,
    probes: Vec<Receiver>,
    depths: Vec<f64>,
    /// Peak of the initial particle velocity, used to normalise profiles.
    v_scale: f64,
    z1: f64,
    z2: f64,
}

#[wasm_bindgen]
impl ColumnDemo {
    #[wasm_bindgen(constructor)]
    pub fn new(rho_solid: f64, vp: f64, rho_fluid: f64, c: f64) -> Result<ColumnDemo, String> {
        let rho_s = positive("solid density", rho_solid)?;
        let vp = positive("solid P velocity", vp)?;
        let rho_f = positive("fluid density", rho_fluid)?;
        let c = positive("sound speed", c)?;

        let (he, hf) = (PULSE * vp, PULSE * c);
        let w = hf.min(he);
        let depth = SOLID_ELEMENTS as f64 * he;
        let top = FLUID_ELEMENTS as f64 * hf;
        let solid = BoxBlock::new(
            1,
            Physics::Elastic,
            DEGREE,
            [0.0, 0.0, -depth],
            [w, w, depth],
            [1, 1, SOLID_ELEMENTS],
        );
        let fluid = BoxBlock::new(
            2,
            Physics::Acoustic,
            DEGREE,
            [0.0; 3],
            [w, w, top],
            [1, 1, FLUID_ELEMENTS],
        );
        let mesh = BoxMeshBuilder::new(vec![solid, fluid])
            .build(|cen, _, physics| match physics {
                Physics::Elastic if cen[2] < -depth + 1e-6 * depth => FaceTag::AbcElastic,
                Physics::Elastic => FaceTag::FreeElastic,
                Physics::Acoustic if cen[2] > top - 1e-6 * top => FaceTag::AbcAcoustic,
                Physics::Acoustic => FaceTag::FreeAcoustic,
            })
            .map_err(|e| e.to_string())?;

        let mu = 0.5 * rho_s * vp * vp;
        let solid_mat = Material::Elastic(ElasticMaterial {
            rho: rho_s,
            vp,
            vs: vp / 2f64.sqrt(),
            qs: f64::INFINITY,
            lambda: 0.0,
            mu,
            zeta: 0.0,
        });
        let fluid_mat = Material::Acoustic(AcousticMaterial::new(rho_f, c, 0.0).map_err(|e| e.to_string())?);
        let mats = mesh
            .elements
            .iter()
            .map(|e| if e.block_id == 1 { solid_mat } else { fluid_mat })
            .collect();
        let model = SemModel::new(
            mesh,
            mats,
            ModelConfig {
                beta: 250.0,
                workers: 1,
            },
        )
        .map_err(|e| e.to_string())?;

        let dt = 0.2 * model.dt_max();
        // upgoing pulse low in the solid: u = -s exp(-s^2/2) travelling up,
        // so the particle velocity is a Ricker wavelet with a single dominant lobe
        let z0 = -0.7 * depth;
        let sz = PULSE * vp;
        let shape = |z: f64| {
            let s = (z - z0) / sz;
            let g = (-0.5 * s * s).exp();
            (-s * g * sz, vp * (1.0 - s * s) * g)
        };
        let u0: Vec<f64> = model
            .dofs
            .elastic_nodes
            .iter()
            .flat_map(|x| [0.0, 0.0, shape(x[2]).0])
            .collect();
        let v0: Vec<f64> = model
            .dofs
            .elastic_nodes
            .iter()
            .flat_map(|x| [0.0, 0.0, shape(x[2]).1])
            .collect();
        let v_scale = v0.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let n_ac = model.n_acoustic();
        let state = {
            let mut it = Integrator::new(&model, TimeConfig::new(dt, 0)).map_err(|e| e.to_string())?;
            it.initialize(u0, v0, vec![0.0; n_ac], vec![0.0; n_ac])
                .map_err(|e| e.to_string())?;
            it.state
        };

        let mut probes = Vec::with_capacity(PROBES);
        let mut depths = Vec::with_capacity(PROBES);
        for k in 0..PROBES {
            let z = -depth + (depth + top) * k as f64 / (PROBES - 1) as f64;
            let kind = if z <= 0.0 { Physics::Elastic } else { Physics::Acoustic };
            probes.push(Receiver::locate(&model, "probe", [0.5 * w, 0.5 * w, z], kind).map_err(|e| e.to_string())?);
            depths.push(z);
        }
        Ok(ColumnDemo {
            model,
            state,
            dt,
            probes,
            depths,
            v_scale,
            z1: rho_s * vp,
            z2: rho_f * c,
        })
    }

    /// Advances by `steps` global time steps.
    pub fn advance(&mut self, steps: usize) -> Result<(), String> {
        let mut it = Integrator::new(&self.model, TimeConfig::new(self.dt, steps)).map_err(|e| e.to_string())?;
        it.state = std::mem::replace(&mut self.state, State::zeros(&self.model));
        let result = it.run(|_| {});
        self.state = it.state;
        result.map_err(|e| e.to_string())
    }

    pub fn time(&self) -> f64 {
        self.state.t
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Probe elevations along the column axis (m); the interface is at 0.
    pub fn depths(&self) -> Vec<f64> {
        self.depths.clone()
    }

    /// Upward particle velocity along the axis relative to the initial peak:
    /// `v_z` in the solid, `p / (rho c)` in the fluid.
    pub fn profile(&self) -> Vec<f64> {
        self.probes
            .iter()
            .map(|r| {
                let s = r.sample(&self.model, &self.state);
                match r.kind {
                    Physics::Elastic => s[5] / self.v_scale,
                    Physics::Acoustic => s[2] / self.z2 / self.v_scale,
                }
            })
            .collect()
    }

    /// Reflected over incident particle velocity, `(Z1 - Z2) / (Z1 + Z2)`.
    pub fn reflection(&self) -> f64 {
        (self.z1 - self.z2) / (self.z1 + self.z2)
    }

    /// Transmitted over incident particle velocity, `2 Z1 / (Z1 + Z2)`.
    pub fn transmission(&self) -> f64 {
        2.0 * self.z1 / (self.z1 + self.z2)
    }

    pub fn energy(&self) -> f64 {
        dgsem::timeint::energy(&self.model, &self.state)
    }
}

/// Gain of the band-pass at each frequency; squared for the zero-phase
/// (forward-backward) application.
#[wasm_bindgen]
pub fn bandpass_response(
    dt: f64,
    f_lo: f64,
    f_hi: f64,
    order: usize,
    zero_phase: bool,
    freqs: &[f64],
) -> Result<Vec<f64>, String> {
    let bp = BandPass::design(dt, f_lo, f_hi, order).map_err(|e| e.to_string())?;
    Ok(freqs
        .iter()
        .map(|&f| {
            let g = bp.gain(f);
            if zero_phase {
                g * g
            } else {
                g
            }
        })
        .collect())
}

/// Sampling of the GoF demo traces.
pub const PACKET_DT: f64 = 0.01;
pub const PACKET_SAMPLES: usize = 4000;

#[wasm_bindgen]
pub fn packet_dt() -> f64 {
    PACKET_DT
}

/// Ground velocity: a Ricker wavelet of peak frequency `f0`,
/// `scale (1 - 2 a^2) exp(-a^2)` with `a = pi f0 (t - 20 - delay)`,
/// sampled at [`PACKET_DT`].
#[wasm_bindgen]
pub fn packet(f0: f64, delay: f64, scale: f64) -> Vec<f64> {
    (0..PACKET_SAMPLES)
        .map(|k| {
            let a = std::f64::consts::PI * f0 * (k as f64 * PACKET_DT - 20.0 - delay);
            scale * (1.0 - 2.0 * a * a) * (-a * a).exp()
        })
        .collect()
}

fn component(vel: Vec<f64>, bp: &BandPass) -> ComponentTrace {
    let vel = bp.apply(&vel, FilterMode::ZeroPhase);
    let mut disp = Vec::with_capacity(vel.len());
    let mut acc = 0.0;
    for (k, v) in vel.iter().enumerate() {
        if k > 0 {
            acc += 0.5 * (vel[k - 1] + v) * PACKET_DT;
        }
        disp.push(acc);
    }
    ComponentTrace {
        dt: PACKET_DT,
        disp,
        vel,
    }
}

/// Scores a delayed, scaled packet against the reference packet after the
/// same zero-phase band-pass: `[ED, PGV, PGU, RS, FAS, mean]`.
#[wasm_bindgen]
pub fn gof_scores(f0: f64, delay: f64, scale: f64, f_lo: f64, f_hi: f64) -> Result<Vec<f64>, String> {
    let bp = BandPass::design(PACKET_DT, f_lo, f_hi, 4).map_err(|e| e.to_string())?;
    let syn = component(packet(f0, delay, scale), &bp);
    let rec = component(packet(f0, 0.0, 1.0), &bp);
    let report = anderson_gof(&[syn], &[rec], (f_lo, f_hi)).map_err(|e| e.to_string())?;
    let c = &report.components[0];
    if c.undefined {
        return Err("a trace carries no energy in the band".into());
    }
    let mut out = c.scores.to_vec();
    out.push(c.mean);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn signed_peak(x: &[f64]) -> f64 {
        x.iter()
            .copied()
            .fold(0.0, |m: f64, v| if v.abs() > m.abs() { v } else { m })
    }

    #[test]
    fn chunked_advance_matches_one_run() {
        let mut a = ColumnDemo::new(2500.0, 3000.0, 1000.0, 1500.0).unwrap();
        let mut b = ColumnDemo::new(2500.0, 3000.0, 1000.0, 1500.0).unwrap();
        a.advance(60).unwrap();
        for _ in 0..6 {
            b.advance(10).unwrap();
        }
        assert_eq!(a.time(), b.time());
        assert_eq!(a.profile(), b.profile());
    }

    #[test]
    fn column_split_follows_impedance_ratio() {
        let mut d = ColumnDemo::new(1800.0, 1200.0, 1000.0, 1500.0).unwrap();
        // pulse starts 0.7 * depth below the interface; after this much time
        // both the reflection and the transmission are well clear of it
        let depth = SOLID_ELEMENTS as f64 * PULSE * 1200.0;
        let t_end = 0.7 * depth / 1200.0 + 1.2;
        d.advance((t_end / d.dt()).ceil() as usize).unwrap();
        let (z, v) = (d.depths(), d.profile());
        let solid: Vec<f64> = z.iter().zip(&v).filter(|(z, _)| **z < 0.0).map(|(_, v)| *v).collect();
        let fluid: Vec<f64> = z.iter().zip(&v).filter(|(z, _)| **z > 0.0).map(|(_, v)| *v).collect();
        let r = signed_peak(&solid);
        let t = signed_peak(&fluid);
        // the profile is sampled on a grid, so allow for the peak falling between probes
        assert!(
            (r - d.reflection()).abs() < 0.02 * d.reflection().abs() + 0.01,
            "{r} vs {}",
            d.reflection()
        );
        assert!(
            (t - d.transmission()).abs() < 0.02 * d.transmission(),
            "{t} vs {}",
            d.transmission()
        );
    }

    #[test]
    fn bad_material_is_reported() {
        let err = ColumnDemo::new(2500.0, -1.0, 1000.0, 1500.0).err().unwrap();
        assert!(err.contains("P velocity"), "{err}");
    }

    #[test]
    fn bandpass_edges_are_half_power() {
        let g = bandpass_response(0.01, 0.5, 5.0, 4, false, &[0.5, 5.0]).unwrap();
        for x in g {
            assert!((x - 0.5f64.sqrt()).abs() < 1e-9, "{x}");
        }
        let g2 = bandpass_response(0.01, 0.5, 5.0, 4, true, &[0.5]).unwrap();
        assert!((g2[0] - 0.5).abs() < 1e-9);
        assert!(bandpass_response(0.01, 5.0, 0.5, 4, false, &[1.0]).is_err());
    }

    #[test]
    fn identical_packets_score_ten() {
        let s = gof_scores(1.0, 0.0, 1.0, 0.2, 3.0).unwrap();
        assert!(s.iter().all(|&x| x == 10.0), "{s:?}");
    }

    #[test]
    fn doubled_packet_scores_ten_over_e_on_amplitudes() {
        let s = gof_scores(1.0, 0.0, 2.0, 0.2, 3.0).unwrap();
        let expected = 10.0 * (-1.0f64).exp();
        // duration is amplitude-free; the other four scale linearly
        assert!((s[0] - 10.0).abs() < 1e-9, "{s:?}");
        for x in &s[1..5] {
            assert!((x - expected).abs() < 1e-9, "{s:?}");
        }
    }

    #[test]
    fn delayed_packet_keeps_shift_invariant_scores() {
        // none of the criteria sees phase: peaks, duration and both spectra
        // survive a shift. The band stops where the wavelet still carries
        // energy; bins far above it hold only the filter's start-up ringing
        // and score at noise level.
        for delay in [-3.0, 0.5, 3.0] {
            let s = gof_scores(1.0, delay, 1.0, 0.2, 3.0).unwrap();
            assert!(s.iter().all(|&x| x > 9.999), "{delay}: {s:?}");
        }
    }
}
