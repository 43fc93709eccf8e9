//! Goodness-of-fit comparison of two directories of receiver CSV files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use dgsem::postproc::fmt17;
use dgsem::signal::{anderson_gof, butterworth_bandpass, resample_linear, ComponentTrace, FilterMode, CRITERIA};

use crate::CliError;

/// Elastic seismogram read back from a receiver CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct Seismogram {
    pub dt: f64,
    /// `u[c]`, `v[c]` for components x, y, z.
    pub u: [Vec<f64>; 3],
    pub v: [Vec<f64>; 3],
}

pub fn read_seismogram(path: &Path) -> Result<Option<Seismogram>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut lines = text.lines();
    match lines.next() {
        Some("t,ux,uy,uz,vx,vy,vz") => {}
        // acoustic traces carry no ground motion
        Some("t,psi,psidot,pac") => return Ok(None),
        _ => return Err(CliError::Input(format!("{}: not a receiver CSV", path.display()))),
    }
    let mut t = Vec::new();
    let mut cols: [Vec<f64>; 6] = Default::default();
    for (i, line) in lines.enumerate() {
        let vals: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| CliError::Input(format!("{}:{}: bad number", path.display(), i + 2)))?;
        if vals.len() != 7 {
            return Err(CliError::Input(format!(
                "{}:{}: expected 7 columns",
                path.display(),
                i + 2
            )));
        }
        t.push(vals[0]);
        for c in 0..6 {
            cols[c].push(vals[c + 1]);
        }
    }
    if t.len() < 2 {
        return Err(CliError::Input(format!("{}: fewer than 2 samples", path.display())));
    }
    let dt = (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64;
    let [ux, uy, uz, vx, vy, vz] = cols;
    Ok(Some(Seismogram {
        dt,
        u: [ux, uy, uz],
        v: [vx, vy, vz],
    }))
}

fn list(dir: &Path) -> Result<BTreeMap<String, PathBuf>, CliError> {
    let entries = std::fs::read_dir(dir).map_err(|source| CliError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let mut out = BTreeMap::new();
    for e in entries {
        let path = e
            .map_err(|source| CliError::Io {
                path: dir.display().to_string(),
                source,
            })?
            .path();
        if path.extension().is_some_and(|x| x == "csv") {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                out.insert(stem.to_string(), path);
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareOutcome {
    pub csv: String,
    /// `(side, station id)` of stations present on one side only.
    pub unmatched: Vec<(String, String)>,
    /// Station means in id order.
    pub station_means: Vec<(String, f64)>,
}

/// Filters both sides identically, brings them to the coarser sampling and
/// the shorter duration, and scores every matched station.
pub fn compare(syn_dir: &Path, rec_dir: &Path, band: (f64, f64), mode: FilterMode) -> Result<CompareOutcome, CliError> {
    let syn = list(syn_dir)?;
    let rec = list(rec_dir)?;
    let mut unmatched = Vec::new();
    for id in syn.keys().filter(|k| !rec.contains_key(*k)) {
        unmatched.push(("synthetic".to_string(), id.clone()));
    }
    for id in rec.keys().filter(|k| !syn.contains_key(*k)) {
        unmatched.push(("recorded".to_string(), id.clone()));
    }
    let mut csv = format!("station,component,{},mean\n", CRITERIA.join(","));
    let mut station_means = Vec::new();
    for (id, sp) in &syn {
        let Some(rp) = rec.get(id) else { continue };
        let (Some(s), Some(r)) = (read_seismogram(sp)?, read_seismogram(rp)?) else {
            log::info!("station {id}: acoustic trace skipped");
            continue;
        };
        let dt = s.dt.max(r.dt);
        let duration = ((s.u[0].len() - 1) as f64 * s.dt).min((r.u[0].len() - 1) as f64 * r.dt);
        let n = (duration / dt).floor() as usize + 1;
        let prep = |x: &[f64], dt_in: f64| -> Result<Vec<f64>, CliError> {
            let y = resample_linear(x, dt_in, dt, n);
            Ok(butterworth_bandpass(&y, dt, band.0, band.1, 2, mode)?)
        };
        let mut syn_c = Vec::new();
        let mut rec_c = Vec::new();
        for c in 0..3 {
            syn_c.push(ComponentTrace {
                dt,
                disp: prep(&s.u[c], s.dt)?,
                vel: prep(&s.v[c], s.dt)?,
            });
            rec_c.push(ComponentTrace {
                dt,
                disp: prep(&r.u[c], r.dt)?,
                vel: prep(&r.v[c], r.dt)?,
            });
        }
        let report = anderson_gof(&syn_c, &rec_c, band)?;
        for (comp, c) in ["x", "y", "z"].iter().zip(&report.components) {
            let _ = write!(csv, "{id},{comp}");
            for s in c.scores {
                let _ = write!(csv, ",{}", fmt17(s));
            }
            let _ = writeln!(csv, ",{}", fmt17(c.mean));
            if c.undefined {
                log::warn!("station {id} component {comp}: zero-energy trace, criteria undefined");
            }
        }
        let _ = writeln!(csv, "{id},mean,,,,,,{}", fmt17(report.mean));
        station_means.push((id.clone(), report.mean));
    }
    if !unmatched.is_empty() {
        csv.push_str("\nunmatched\nside,station\n");
        for (side, id) in &unmatched {
            let _ = writeln!(csv, "{side},{id}");
        }
    }
    Ok(CompareOutcome {
        csv,
        unmatched,
        station_means,
    })
}
