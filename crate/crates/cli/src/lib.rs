//! Driver for end-to-end simulations and seismogram comparisons.

pub mod compare;
pub mod config;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use thiserror::Error;

use dgsem::materials::{load_materials, MaterialError};
use dgsem::mesh::{load_mesh, MeshError};
use dgsem::operators::{ModelConfig, ModelError, SemModel};
use dgsem::postproc::{fmt17, peak_map_csv, PeakTracker, PostError, Receiver, SectionProfile, TraceSet};
use dgsem::signal::SignalError;
use dgsem::sources::{KinematicFault, MomentSource, PlaneWaveSource, PlaneWaveSpec, SourceError};
use dgsem::timeint::{Integrator, State, TimeConfig, TimeError};

pub use compare::{compare, CompareOutcome};
pub use config::{ReceiverSpec, RunConfig, SectionSpec, SourceSpec};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}:{line}: {msg}")]
    Config { path: String, line: usize, msg: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("mesh {path}: {source}")]
    Mesh {
        path: String,
        #[source]
        source: MeshError,
    },
    #[error("materials {path}: {source}")]
    Material {
        path: String,
        #[source]
        source: MaterialError,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("source {path}: {source}")]
    Source {
        path: String,
        #[source]
        source: SourceError,
    },
    #[error(transparent)]
    Time(#[from] TimeError),
    #[error(transparent)]
    Post(#[from] PostError),
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error("{0}")]
    Input(String),
}

impl CliError {
    /// 1 for numeric blow-up, 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Time(TimeError::NonFinite { .. }) => 1,
            _ => 2,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    pub workers: usize,
    pub energy_trace: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            workers: default_workers(),
            energy_trace: false,
        }
    }
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub output_dir: PathBuf,
    pub elastic_dofs: usize,
    pub acoustic_dofs: usize,
    pub dt_max: f64,
    pub final_energy: f64,
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn mkdir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Loads mesh and materials and builds the discrete model.
pub fn build_model(cfg: &RunConfig, workers: usize) -> Result<SemModel, CliError> {
    let mesh = load_mesh(&cfg.mesh_path).map_err(|source| CliError::Mesh {
        path: cfg.mesh_path.display().to_string(),
        source,
    })?;
    let table = load_materials(&cfg.materials_path, cfg.f0).map_err(|source| CliError::Material {
        path: cfg.materials_path.display().to_string(),
        source,
    })?;
    Ok(SemModel::from_table(
        mesh,
        &table,
        ModelConfig {
            beta: cfg.beta,
            workers,
        },
    )?)
}

/// `state.bin`: magic, dof counts, time, step, acoustic lag, then u, v, a,
/// psi, psi_dot, psi_ddot as little-endian doubles.
pub fn encode_state(state: &State) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(b"DGSEMST1");
    out.extend_from_slice(&(state.u.len() as u64).to_le_bytes());
    out.extend_from_slice(&(state.psi.len() as u64).to_le_bytes());
    out.extend_from_slice(&state.t.to_le_bytes());
    out.extend_from_slice(&(state.step as u64).to_le_bytes());
    out.extend_from_slice(&state.acoustic_lag.to_le_bytes());
    for v in [
        &state.u,
        &state.v,
        &state.a,
        &state.psi,
        &state.psi_dot,
        &state.psi_ddot,
    ] {
        for x in v.iter() {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    out
}

/// Runs one simulation and writes all artifacts into the configured directory.
pub fn run(cfg: &RunConfig, opts: RunOptions) -> Result<RunReport, CliError> {
    let started = Instant::now();
    let model = build_model(cfg, opts.workers)?;
    let time = TimeConfig::new(cfg.dt, cfg.n_steps)
        .with_n_loc(cfg.n_loc)
        .with_cfl_safety(cfg.cfl_safety);
    let mut integrator = Integrator::new(&model, time)?;
    integrator.set_energy_trace(opts.energy_trace);
    match &cfg.source {
        SourceSpec::None => {}
        SourceSpec::Fault(path) => {
            let err = |source| CliError::Source {
                path: path.display().to_string(),
                source,
            };
            let fault = KinematicFault::load(path).map_err(err)?;
            integrator.add_load(MomentSource::new(&model, &fault).map_err(err)?);
        }
        SourceSpec::PlaneWave(path) => {
            let err = |source| CliError::Source {
                path: path.display().to_string(),
                source,
            };
            let spec = PlaneWaveSpec::load(path).map_err(err)?;
            integrator.add_load(PlaneWaveSource::new(&model, spec).map_err(err)?);
        }
    }
    integrator.refresh_accelerations();

    let receivers = cfg
        .receivers
        .iter()
        .map(|r| Receiver::locate(&model, &r.id, r.location, r.kind))
        .collect::<Result<Vec<_>, _>>()?;
    let mut traces = TraceSet::new(receivers);
    let mut peaks = PeakTracker::surface(&model);
    let mut sections = cfg
        .sections
        .iter()
        .map(|s| SectionProfile::new(&model, &s.name, &s.polyline, s.per_segment, s.direction))
        .collect::<Result<Vec<_>, _>>()?;

    let mut energy = String::from("step,t,energy,modified_energy\n");
    let observe = |it: &Integrator,
                   traces: &mut TraceSet,
                   peaks: &mut PeakTracker,
                   sections: &mut [SectionProfile],
                   energy: &mut String| {
        let s = &it.state;
        if s.step % cfg.output_stride == 0 {
            traces.record(&model, s);
        }
        peaks.update(s);
        for p in sections.iter_mut() {
            p.update(&model, s);
        }
        if opts.energy_trace {
            let modified = it.last_step_energy().map(|e| e.modified).unwrap_or(f64::NAN);
            let _ = writeln!(
                energy,
                "{},{},{},{}",
                s.step,
                fmt17(s.t),
                fmt17(it.energy()),
                fmt17(modified)
            );
        }
    };
    observe(&integrator, &mut traces, &mut peaks, &mut sections, &mut energy);
    let result = integrator.run(|it| observe(it, &mut traces, &mut peaks, &mut sections, &mut energy));

    mkdir(&cfg.output_dir)?;
    traces.write_csv(&cfg.output_dir.join("receivers"))?;
    write(
        &cfg.output_dir.join("peakmap.csv"),
        peak_map_csv(&peaks.samples(&model)),
    )?;
    if !sections.is_empty() {
        let dir = cfg.output_dir.join("sections");
        mkdir(&dir)?;
        for p in &sections {
            write(&dir.join(format!("{}.csv", p.name)), p.csv())?;
        }
    }
    if opts.energy_trace {
        write(&cfg.output_dir.join("energy.csv"), &energy)?;
    }
    write(&cfg.output_dir.join("state.bin"), encode_state(&integrator.state))?;

    let final_energy = integrator.energy();
    let dt_max = model.dt_max();
    let mut summary = String::new();
    let _ = writeln!(summary, "elements          {}", model.mesh.elements.len());
    let _ = writeln!(summary, "elastic_dofs      {}", model.n_elastic());
    let _ = writeln!(summary, "acoustic_dofs     {}", model.n_acoustic());
    let _ = writeln!(summary, "dg_points         {}", model.dg.len());
    let _ = writeln!(summary, "ea_points         {}", model.ea.len());
    let _ = writeln!(summary, "dt                {}", fmt17(cfg.dt));
    let _ = writeln!(summary, "dt_max_estimate   {}", fmt17(dt_max));
    let _ = writeln!(summary, "cfl_safety        {}", cfg.cfl_safety);
    let _ = writeln!(summary, "n_steps           {}", cfg.n_steps);
    let _ = writeln!(summary, "n_loc             {}", cfg.n_loc);
    let _ = writeln!(summary, "workers           {}", opts.workers);
    let _ = writeln!(summary, "final_time        {}", fmt17(integrator.state.t));
    let _ = writeln!(summary, "final_energy      {}", fmt17(final_energy));
    let _ = writeln!(
        summary,
        "status            {}",
        if result.is_ok() { "ok" } else { "non-finite" }
    );
    if opts.energy_trace {
        let _ = writeln!(summary, "energy_trace      energy.csv");
    }
    let _ = writeln!(summary, "wall_time_s       {:.3}", started.elapsed().as_secs_f64());
    write(&cfg.output_dir.join("run_summary.txt"), summary)?;
    result?;

    Ok(RunReport {
        output_dir: cfg.output_dir.clone(),
        elastic_dofs: model.n_elastic(),
        acoustic_dofs: model.n_acoustic(),
        dt_max,
        final_energy,
    })
}
