//! Exercises the `dgsem` binary end to end.

use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Output};

use dgsem::materials::{ElasticMaterial, Material};
use dgsem::mesh::structured::{BoxBlock, BoxMeshBuilder};
use dgsem::mesh::{write_mesh, FaceTag, Physics};
use dgsem::operators::{ModelConfig, SemModel};
use dgsem::postproc::fmt17;
use dgsem::signal::{butterworth_bandpass, FilterMode};

fn dgsem(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dgsem"))
        .args(args)
        .output()
        .expect("binary runs")
}

/// Two elastic blocks side by side with free faces, plus a run config.
fn write_case(dir: &Path, dt_fraction: f64, n_steps: usize, extra: &str) -> std::path::PathBuf {
    let a = BoxBlock::new(1, Physics::Elastic, 3, [0.0; 3], [1000.0; 3], [1, 1, 1]);
    let b = BoxBlock::new(2, Physics::Elastic, 3, [1000.0, 0.0, 0.0], [1000.0; 3], [1, 1, 1]);
    let mesh = BoxMeshBuilder::new(vec![a, b])
        .build(|_, _, _| FaceTag::FreeElastic)
        .unwrap();
    let n = mesh.elements.len();
    let mat = Material::Elastic(ElasticMaterial::undamped(2000.0, 2000.0, 1000.0).unwrap());
    let dt_max = SemModel::new(mesh.clone(), vec![mat; n], ModelConfig::default())
        .unwrap()
        .dt_max();
    std::fs::write(dir.join("mesh.txt"), write_mesh(&mesh)).unwrap();
    std::fs::write(
        dir.join("materials.txt"),
        "block 1 elastic 2000 2000 1000 inf\nblock 2 elastic 2000 2000 1000 inf\n",
    )
    .unwrap();
    let cfg = format!(
        "[mesh]\npath = mesh.txt\nmaterials = materials.txt\n\
         [time]\ndt = {}\nn_steps = {n_steps}\ncfl_safety = 1.0\n\
         [receivers]\na = 500 500 1000 elastic\nb = 1500 200 300 elastic\n\
         [output]\ndir = out\n{extra}",
        fmt17(dt_fraction * dt_max)
    );
    let path = dir.join("run.cfg");
    std::fs::write(&path, cfg).unwrap();
    path
}

fn numbers(csv: &str) -> Vec<Vec<f64>> {
    csv.lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn missing_mesh_exits_with_status_2_and_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_case(dir.path(), 0.1, 5, "");
    std::fs::remove_file(dir.path().join("mesh.txt")).unwrap();
    let out = dgsem(&["run", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.contains(&dir.path().join("mesh.txt").display().to_string()),
        "{stderr}"
    );
}

#[test]
fn zero_source_and_zero_state_give_zero_seismograms() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_case(dir.path(), 0.05, 20, "");
    let out = dgsem(&["--workers", "2", "run", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for id in ["a", "b"] {
        let text = std::fs::read_to_string(dir.path().join(format!("out/receivers/{id}.csv"))).unwrap();
        assert!(text.starts_with("t,ux,uy,uz,vx,vy,vz\n"));
        let rows = numbers(&text);
        assert_eq!(rows.len(), 21);
        assert!(rows.iter().all(|r| r[1..].iter().all(|&v| v == 0.0)));
    }
    let summary = std::fs::read_to_string(dir.path().join("out/run_summary.txt")).unwrap();
    assert!(summary.contains("dt_max_estimate") && summary.contains("status            ok"));
    assert!(dir.path().join("out/peakmap.csv").exists());
    assert!(dir.path().join("out/state.bin").exists());
}

#[test]
fn blow_up_exits_with_status_1() {
    let dir = tempfile::tempdir().unwrap();
    // the estimate ignores the interface penalty; the full estimated step diverges
    let cfg = write_case(dir.path(), 1.0, 20_000, "");
    let seed = "[source]\nkind = planewave\npath = pw.txt\n";
    let text = std::fs::read_to_string(&cfg)
        .unwrap()
        .replace("[receivers]", &format!("{seed}[receivers]"));
    std::fs::write(&cfg, text).unwrap();
    let samples: String = (0..200).map(|_| "1 0 0\n").collect();
    std::fs::write(
        dir.path().join("pw.txt"),
        format!("planewave 500 2000 2000 0.01 200\n{samples}"),
    )
    .unwrap();
    let out = dgsem(&["run", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = std::fs::read_to_string(dir.path().join("out/run_summary.txt")).unwrap();
    assert!(summary.contains("non-finite"));
}

#[test]
fn step_above_the_safety_limit_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_case(dir.path(), 1.5, 5, "");
    let out = dgsem(&["run", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

// ------------------------------------------------------------ compare

/// Three-component receiver CSV with velocity `v(t)` scaled per component
/// and the trapezoidal displacement.
fn write_trace(path: &Path, dt: f64, v: &[f64]) {
    let mut u = vec![0.0; v.len()];
    for k in 1..v.len() {
        u[k] = u[k - 1] + 0.5 * dt * (v[k] + v[k - 1]);
    }
    let mut text = String::from("t,ux,uy,uz,vx,vy,vz\n");
    for k in 0..v.len() {
        let row = [
            k as f64 * dt,
            u[k],
            0.5 * u[k],
            0.25 * u[k],
            v[k],
            0.5 * v[k],
            0.25 * v[k],
        ];
        text += &row.iter().map(|x| fmt17(*x)).collect::<Vec<_>>().join(",");
        text.push('\n');
    }
    std::fs::write(path, text).unwrap();
}

/// 0.5 Hz sine whose amplitude grows linearly from `start` for `length` s.
fn growing_train(dt: f64, n: usize, start: f64, length: f64) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let s = k as f64 * dt - start;
            if (0.0..length).contains(&s) {
                s * (2.0 * PI * 0.5 * s).sin()
            } else {
                0.0
            }
        })
        .collect()
}

fn gof_rows(csv: &str, station: &str) -> Vec<Vec<f64>> {
    csv.lines()
        .filter(|l| l.starts_with(&format!("{station},")) && !l.contains(",mean,"))
        .map(|l| l.split(',').skip(2).map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn directory_compared_with_itself_scores_10() {
    let dir = tempfile::tempdir().unwrap();
    let dt = 0.01;
    for (id, start) in [("st1", 1.0), ("st2", 3.0)] {
        write_trace(
            &dir.path().join(format!("{id}.csv")),
            dt,
            &growing_train(dt, 2000, start, 12.0),
        );
    }
    let d = dir.path().to_str().unwrap();
    let out_csv = dir.path().join("self.gof");
    let out = dgsem(&["compare", d, d, "--out", out_csv.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(&out_csv).unwrap();
    assert!(csv.starts_with("station,component,ED,PGV,PGU,RS,FAS,mean\n"));
    for id in ["st1", "st2"] {
        let rows = gof_rows(&csv, id);
        assert_eq!(rows.len(), 3);
        assert!(rows.iter().flatten().all(|&s| s == 10.0), "{rows:?}");
    }
    assert!(!csv.contains("unmatched"));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(
        stdout.contains("st1 10.000") && stdout.contains("st2 10.000"),
        "{stdout}"
    );
}

#[test]
fn unmatched_station_is_listed_and_exit_is_0() {
    let syn = tempfile::tempdir().unwrap();
    let rec = tempfile::tempdir().unwrap();
    let dt = 0.01;
    let v = growing_train(dt, 1000, 1.0, 6.0);
    write_trace(&syn.path().join("both.csv"), dt, &v);
    write_trace(&rec.path().join("both.csv"), dt, &v);
    write_trace(&rec.path().join("only_rec.csv"), dt, &v);
    let out = dgsem(&["compare", syn.path().to_str().unwrap(), rec.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(syn.path().join("gof.csv")).unwrap();
    assert!(csv.contains("\nunmatched\nside,station\nrecorded,only_rec\n"), "{csv}");
    assert_eq!(gof_rows(&csv, "both").len(), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("only_rec"));
}

/// 5-75% duration of the cumulative squared velocity, to the nearest sample.
fn energy_duration(v: &[f64], dt: f64) -> f64 {
    let total: f64 = v.iter().map(|x| x * x).sum();
    let mut acc = 0.0;
    let (mut t5, mut t75) = (None, None);
    for (k, x) in v.iter().enumerate() {
        acc += x * x;
        if t5.is_none() && acc >= 0.05 * total {
            t5 = Some(k as f64 * dt);
        }
        if t75.is_none() && acc >= 0.75 * total {
            t75 = Some(k as f64 * dt);
        }
    }
    t75.unwrap() - t5.unwrap()
}

fn score(a: f64, b: f64) -> f64 {
    10.0 * (-((a - b) / a.min(b)).powi(2)).exp()
}

#[test]
fn delayed_synthetic_loses_duration_and_peak_score() {
    // an 18 s growing train in a 20 s record; delayed by 5 s only 15 s fit,
    // which cuts both the peak and the energy duration
    let syn = tempfile::tempdir().unwrap();
    let rec = tempfile::tempdir().unwrap();
    let dt = 0.005;
    let n = (20.0 / dt) as usize + 1;
    let v_rec = growing_train(dt, n, 0.0, 18.0);
    let v_syn = growing_train(dt, n, 5.0, 18.0);
    write_trace(&rec.path().join("st.csv"), dt, &v_rec);
    write_trace(&syn.path().join("st.csv"), dt, &v_syn);
    let out = dgsem(&[
        "--zero-phase",
        "compare",
        syn.path().to_str().unwrap(),
        rec.path().to_str().unwrap(),
        "--band",
        "0.1",
        "1.0",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(syn.path().join("gof.csv")).unwrap();

    // scoring oracle on the band-passed inputs
    let band = |v: &[f64]| butterworth_bandpass(v, dt, 0.1, 1.0, 2, FilterMode::ZeroPhase).unwrap();
    let peak = |v: &[f64]| v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let (f_syn, f_rec) = (band(&v_syn), band(&v_rec));
    let pgv_expected = score(peak(&f_syn), peak(&f_rec));
    let ed_expected = score(energy_duration(&f_syn, dt), energy_duration(&f_rec, dt));
    assert!(ed_expected < 9.8 && pgv_expected < 9.8, "{ed_expected} {pgv_expected}");
    let rows = gof_rows(&csv, "st");
    assert_eq!(rows.len(), 3);
    for row in rows {
        let (ed, pgv) = (row[0], row[1]);
        // component scaling leaves every criterion unchanged
        assert!((pgv - pgv_expected).abs() < 1e-9, "PGV {pgv} vs {pgv_expected}");
        assert!((ed - ed_expected).abs() < 0.01, "ED {ed} vs {ed_expected}");
        assert!(row[5] < 10.0);
    }
}
