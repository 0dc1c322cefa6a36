//! Subcommands and exit codes of the `wxperturb` binary.

mod common;

use std::path::Path;
use std::process::{Command, Output};

use wxperturb::ensemble::{Manifest, TrialStatus};
use wxperturb::state_io::{read_state, read_stats};
use wxperturb::trajectory::timestep;

fn wx(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wxperturb")).args(args).env_remove("WXPERTURB_WORKERS").output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn stats_perturb_randomize() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let ic = &common::write_series(&d.join("truth"), &common::truth(0))[0];
    let stats = d.join("ref.stats.csv");
    let o = wx(&["stats", "--input", s(ic), "--output", s(&stats)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let parsed = read_stats(&stats).unwrap();
    assert_eq!(std::fs::read_to_string(&stats).unwrap().lines().count(), 73);

    let out = d.join("p.wxs");
    let o =
        wx(&["perturb", "--input", s(ic), "--stats", s(&stats), "--beta", "0.05", "--seed", "7", "--output", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let a = read_state(&out).unwrap();
    wx(&["perturb", "--input", s(ic), "--beta", "0.05", "--seed", "7", "--output", s(&d.join("q.wxs"))]);
    assert_eq!(read_state(&d.join("q.wxs")).unwrap(), a, "stats computed from the input must match the file");

    let o = wx(&["perturb", "--input", s(ic), "--beta", "1.5", "--output", s(&out)]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("beta out of range"), "{}", stderr(&o));

    let r = d.join("r.wxs");
    let o = wx(&[
        "randomize",
        "--dist",
        "lognormal",
        "--seed",
        "3",
        "--stats",
        s(&stats),
        "--like",
        s(ic),
        "--output",
        s(&r),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let fs = read_state(&r).unwrap();
    assert_eq!(fs.grid(), a.grid());
    assert!(
        (fs.channel(6).iter().map(|&v| v as f64).sum::<f64>() / fs.grid().points() as f64 - parsed.get(6).mean).abs()
            < 0.1 * parsed.get(6).std
    );

    let o = wx(&["randomize", "--dist", "cauchy", "--stats", s(&stats), "--output", s(&r)]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("unsupported distribution: cauchy"));
}

#[test]
fn data_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let missing = d.join("nope.wxs");
    let o = wx(&["stats", "--input", s(&missing), "--output", s(&d.join("x.csv"))]);
    assert_eq!(code(&o), 2);

    let bad = d.join("bad.wxs");
    std::fs::write(&bad, b"NOTASTATE_______________________________________").unwrap();
    let o = wx(&["stats", "--input", s(&bad), "--output", s(&d.join("x.csv"))]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("bad magic"));

    let ic = &common::write_series(&d.join("t"), &common::truth(0))[0];
    let stats = d.join("short.csv");
    std::fs::write(&stats, "msl,101000,900\n").unwrap();
    let o = wx(&["perturb", "--input", s(ic), "--stats", s(&stats), "--beta", "0.1", "--output", s(&d.join("o.wxs"))]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("tcwv"), "{}", stderr(&o));
}

#[test]
fn constant_channel_warns_but_writes_stats() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let grid = wxperturb::grid::GridSpec::new(1_000_000, 3, 3).unwrap();
    let fs = wxperturb::field::FieldSet::from_fn(grid, wxperturb::synthetic::storm_start(), |c, i, j| {
        if c == 7 {
            20.0
        } else {
            (i * 3 + j) as f32
        }
    })
    .unwrap();
    let p = d.join("c.wxs");
    wxperturb::state_io::write_state(&p, &fs).unwrap();
    let o = wx(&["stats", "--input", s(&p), "--output", s(&d.join("c.csv"))]);
    assert_eq!(code(&o), 0);
    assert!(stderr(&o).contains("degenerate std for tcwv"));
    assert!(std::fs::read_to_string(d.join("c.csv")).unwrap().contains("tcwv,20,0\n"));
}

#[test]
fn forecast_track_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let truth = common::truth(4);
    let paths = common::write_series(&d.join("truth"), &truth);
    let out = d.join("fc");
    let o = wx(&["forecast", "--input", s(&paths[0]), "--steps", "0", "--out-dir", s(&out)]);
    assert_eq!(code(&o), 1);

    let o = wx(&[
        "forecast",
        "--input",
        s(&paths[0]),
        "--steps",
        "4",
        "--advect",
        "0",
        "--relax",
        "0",
        "--out-dir",
        s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let states: Vec<_> = (0..5).map(|k| read_state(&out.join(format!("state_{k:03}.wxs"))).unwrap()).collect();
    for (k, st) in states.iter().enumerate() {
        assert_eq!(st.valid_time(), truth[0].valid_time() + timestep() * k as i32);
        assert_eq!(st.values(), truth[0].values());
    }

    let o =
        wx(&["track", "--forecast-dir", s(&out), "--truth-dir", s(&d.join("truth")), "--out-dir", s(&d.join("trk"))]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let stdout = String::from_utf8(o.stdout).unwrap();
    let mte: f64 = stdout.trim().strip_prefix("mte_km=").unwrap().parse().unwrap();
    // The frozen storm falls behind the moving one by about 1.1 degrees per step.
    assert!(mte > 100.0 && mte < 400.0, "{mte}");
    assert!(d.join("trk/truth_trajectory.csv").exists());

    let eval = d.join("eval");
    let o = wx(&[
        "evaluate",
        "--forecast-dir",
        s(&out),
        "--truth-dir",
        s(&d.join("truth")),
        "--region",
        "global",
        "--range",
        "7.5",
        "--range",
        "15",
        "--out-dir",
        s(&eval),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let narrow = std::fs::read_to_string(eval.join("hist_global_pm7.5_counts.csv")).unwrap();
    let wide = std::fs::read_to_string(eval.join("hist_global_pm15_counts.csv")).unwrap();
    let totals = |text: &str| -> Vec<u64> {
        text.lines().skip(1).map(|l| l.split(',').skip(1).map(|c| c.parse::<u64>().unwrap()).sum()).collect()
    };
    assert_eq!(totals(&narrow), vec![16380; 5]);
    assert_eq!(totals(&narrow), totals(&wide));
    assert_ne!(
        std::fs::read_to_string(eval.join("hist_global_pm7.5_edges.csv")).unwrap(),
        std::fs::read_to_string(eval.join("hist_global_pm15_edges.csv")).unwrap()
    );
    assert!(eval.join("summary.csv").exists());
}

#[test]
fn external_forecast_exit_codes() {
    let Some(py) = common::python() else { return };
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let ic = &common::write_series(&d.join("t"), &common::truth(0))[0];
    let stub = common::stub_backend();
    let cmd = |mode: &str| format!("{py} {} --mode {mode}", stub.display());

    let o = wx(&[
        "forecast",
        "--input",
        s(ic),
        "--backend",
        "external",
        "--command",
        &cmd("identity"),
        "--steps",
        "14",
        "--out-dir",
        s(&d.join("ok")),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let last = read_state(&d.join("ok/state_014.wxs")).unwrap();
    assert_eq!(last.valid_time(), read_state(ic).unwrap().valid_time() + timestep() * 14);

    let o = wx(&[
        "forecast",
        "--input",
        s(ic),
        "--backend",
        "external",
        "--command",
        &cmd("fail"),
        "--steps",
        "3",
        "--out-dir",
        s(&d.join("bad")),
    ]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("step 1"), "{}", stderr(&o));
    assert!(d.join("bad/state_000.wxs").exists());

    let o = wx(&["forecast", "--input", s(ic), "--backend", "external", "--steps", "3", "--out-dir", s(&d.join("x"))]);
    assert_eq!(code(&o), 1);
}

#[test]
fn ensemble_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    common::write_series(&d.join("truth"), &common::truth(4));
    let truth_list: Vec<String> = (0..5).map(|k| format!("\"truth/state_{k:03}.wxs\"")).collect();
    let config = format!(
        "truth = [{}]\noutput_dir = \"runs/a\"\nnoise_levels = [0.0, 0.2]\ntrials = 3\nbase_seed = 11\n\
         [backend]\nkind = \"surrogate\"\nadvect_cells_lon = 0\nrelax_rate = 0.0\n",
        truth_list.join(", ")
    );
    std::fs::write(d.join("exp.toml"), &config).unwrap();
    let o = wx(&["ensemble", "--config", s(&d.join("exp.toml")), "--workers", "2"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let manifest = Manifest::read(&d.join("runs/a/manifest.json")).unwrap();
    assert_eq!(manifest.trials.len(), 6);
    assert_eq!(manifest.run_info.workers, 2);
    assert!(manifest.trials.iter().all(|t| t.status == TrialStatus::Ok));
    // With beta = 0 every trial forecasts the same thing.
    let zero: Vec<f64> = manifest.trials.iter().filter(|t| t.group_index == 0).map(|t| t.mte_km.unwrap()).collect();
    assert!(zero.iter().all(|&m| m == zero[0]));
    assert!(manifest.aggregates[0].std_mte_km.unwrap() < 1e-9);

    let o = wx(&["report", "--manifest", s(&d.join("runs/a/manifest.json")), "--mask", "global"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let table = std::fs::read_to_string(d.join("runs/a/report_timesteps.csv")).unwrap();
    assert_eq!(table.lines().count(), 1 + 2 * 5);
    assert!(d.join("runs/a/report_mte.csv").exists());

    let o = wx(&[
        "ensemble",
        "--config",
        s(&d.join("exp.toml")),
        "--random-ic",
        "--trials",
        "1",
        "--out",
        s(&d.join("runs/r")),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let manifest = Manifest::read(&d.join("runs/r/manifest.json")).unwrap();
    assert_eq!(manifest.trials.len(), 4);
    assert!(manifest.trials.iter().all(|t| t.mte_km.is_none()));

    std::fs::write(d.join("bad.toml"), config.replace("[0.0, 0.2]", "[0.0, 0.3]")).unwrap();
    let o = wx(&["ensemble", "--config", s(&d.join("bad.toml"))]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("canonical"));
}

#[test]
fn help_and_usage() {
    assert_eq!(code(&wx(&["--help"])), 0);
    assert_eq!(code(&wx(&["frobnicate"])), 1);
    assert_eq!(code(&wx(&["perturb"])), 1);
}
