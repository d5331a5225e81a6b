use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn econet(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_econet"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(out: &Path, args: &[&str]) {
    let o = econet(out, args);
    assert!(
        o.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&o.stderr)
    );
}

fn read_json(p: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

fn entries(dir: &Path) -> Vec<String> {
    match fs::read_dir(dir) {
        Ok(rd) => rd.map(|e| e.unwrap().file_name().into_string().unwrap()).collect(),
        Err(_) => Vec::new(),
    }
}

#[test]
fn gkp_report_for_five_node_configuration() {
    let d = TempDir::new().unwrap();
    let trade = d.path().join("fig.csv");
    fs::write(
        &trade,
        "source,target,year,value_usd\nB,A,2010,1\nC,A,2010,1\nA,D,2010,1\nA,E,2010,1\nB,D,2010,1\n",
    )
    .unwrap();
    let out = d.path().join("out");
    ok(&out, &["gkp", "--trade", trade.to_str().unwrap()]);
    let csv = fs::read_to_string(out.join("gkp.csv")).unwrap();
    assert!(csv.lines().any(|l| l == "A,2010,0.666667"), "{csv}");
    let report = read_json(out.join("gkp.json"));
    let g = report["nodes"]["A"][0]["gkp"].as_f64().unwrap();
    assert!((g - 2.0 / 3.0).abs() < 1e-15);
    assert_eq!(report["meta"]["command"], "gkp");
}

#[test]
fn merged_nodes_are_evaluated_as_one() {
    let d = TempDir::new().unwrap();
    let trade = d.path().join("t.csv");
    fs::write(
        &trade,
        "source,target,year,value_usd\nFR,DE,2010,5\nUS,FR,2010,2\nDE,CN,2010,3\n",
    )
    .unwrap();
    let merge = d.path().join("m.csv");
    fs::write(&merge, "member,group\nFR,EU\nDE,EU\n").unwrap();
    let out = d.path().join("out");
    ok(
        &out,
        &[
            "gkp",
            "--trade",
            trade.to_str().unwrap(),
            "--merge",
            merge.to_str().unwrap(),
        ],
    );
    let csv = fs::read_to_string(out.join("gkp.csv")).unwrap();
    assert!(csv.contains("EU,2010,1\n"), "{csv}");
    assert!(!csv.contains("FR,"));
}

#[test]
fn noiseless_panel_support_recovered_through_cli() {
    let d = TempDir::new().unwrap();
    let data = d.path().join("data");
    ok(&data, &["--seed", "17", "synth", "--kind", "panel", "--noise", "0"]);
    let fit = d.path().join("fit");
    ok(&fit, &["fit-bop", "--panel", data.join("panel.csv").to_str().unwrap()]);
    let truth = read_json(data.join("truth.json"));
    let model = read_json(fit.join("model.json"));
    let rows = model["model"]["rows"].as_array().unwrap();
    for rel in truth["truth"]["relations"].as_array().unwrap() {
        let row = rows.iter().find(|r| r["regressand"] == rel["regressand"]).unwrap();
        assert_eq!(row["status"], "accepted");
        let regs = row["regressors"].as_array().unwrap();
        assert_eq!(regs.len(), 1);
        assert_eq!(regs[0]["indicator"], rel["regressor"]);
        let (b, want) = (regs[0]["beta"].as_f64().unwrap(), rel["beta"].as_f64().unwrap());
        assert!((b - want).abs() < 1e-6 * want.abs());
    }
}

#[test]
fn forecast_and_track_use_a_saved_model() {
    let d = TempDir::new().unwrap();
    let data = d.path().join("data");
    ok(&data, &["synth", "--kind", "panel", "--years", "11", "--noise", "0"]);
    let panel = data.join("panel.csv");
    let fit = d.path().join("fit");
    ok(&fit, &["fit-bop", "--panel", panel.to_str().unwrap(), "--holdout-last"]);
    let model = fit.join("model.json");
    let fc = d.path().join("fc");
    ok(
        &fc,
        &[
            "forecast",
            "--model",
            model.to_str().unwrap(),
            "--panel",
            panel.to_str().unwrap(),
            "--from-year",
            "2009",
        ],
    );
    let report = read_json(fc.join("forecast.json"));
    let truth = read_json(data.join("truth.json"));
    for rel in truth["truth"]["relations"].as_array().unwrap() {
        let e = report["forecast"]["entries"]
            .as_array()
            .unwrap()
            .iter()
            .find(|e| e["indicator"] == rel["regressand"])
            .unwrap();
        assert!(e["relative_error"].as_f64().unwrap() < 1e-9);
    }
    let rel = &truth["truth"]["relations"][0];
    let tr = d.path().join("tr");
    ok(
        &tr,
        &[
            "track",
            "--model",
            model.to_str().unwrap(),
            "--source",
            rel["regressor"].as_str().unwrap(),
            "--target",
            rel["regressand"].as_str().unwrap(),
        ],
    );
    let path = read_json(tr.join("path.json"));
    assert_eq!(path["path"]["result"], "found");
    assert_eq!(path["path"]["path"].as_array().unwrap().len(), 2);
}

#[test]
fn pin_pipeline_accepts_self_generated_data() {
    let d = TempDir::new().unwrap();
    let data = d.path().join("data");
    ok(&data, &["--seed", "4", "synth", "--kind", "pin"]);
    let truth = read_json(data.join("truth.json"));
    let pd = d.path().join("pd");
    ok(
        &pd,
        &[
            "pin-density",
            "--holdings",
            data.join("holdings.csv").to_str().unwrap(),
            "--threshold",
            "5e7",
            "--ref-year",
            "2002",
        ],
    );
    let density = read_json(pd.join("density.json"));
    let (lo, hi) = (
        truth["truth"]["periphery_scale"].as_f64().unwrap(),
        truth["truth"]["core_scale"].as_f64().unwrap(),
    );
    for (_, p) in density["percolation_points"].as_object().unwrap() {
        let p = p.as_f64().unwrap();
        assert!(p > lo && p <= hi, "{p}");
    }
    let nf = d.path().join("nf");
    ok(
        &nf,
        &[
            "nlsmm-fit",
            "--density",
            pd.join("density.csv").to_str().unwrap(),
            "--target",
            data.join("derivatives.csv").to_str().unwrap(),
            "--dt-grid",
            "-12,-6,0,6,12",
        ],
    );
    let fit = &read_json(nf.join("nlsmm.json"))["fits"][0];
    assert_eq!(fit["verdict"], "accept");
    assert_eq!(fit["delta_t"], 6);
    assert!(fit["p_r"].as_f64().unwrap() > 0.999);

    let w = d.path().join("w");
    ok(
        &w,
        &[
            "warn",
            "--model-series",
            nf.join("nlsmm_model.csv").to_str().unwrap(),
            "--rv",
            data.join("gdp.csv").to_str().unwrap(),
            "--fmax",
            "0.56",
        ],
    );
    let report = read_json(w.join("warnings.json"));
    let r = &report["series"][0]["report"];
    let first = r["points"].as_array().unwrap().iter().find(|p| p["warning"] == true);
    assert_eq!(first.map(|p| p["time"].clone()), Some(r["first_warning"].clone()));
}

#[test]
fn missing_deflator_is_a_validation_failure_without_output() {
    let d = TempDir::new().unwrap();
    let data = d.path().join("data");
    ok(&data, &["synth", "--kind", "panel"]);
    let out = d.path().join("out");
    let o = econet(
        &out,
        &[
            "fit-bop",
            "--panel",
            data.join("panel.csv").to_str().unwrap(),
            "--deflator",
            d.path().join("absent.csv").to_str().unwrap(),
            "--base-year",
            "2012",
        ],
    );
    assert_eq!(o.status.code(), Some(3));
    assert!(entries(&out).is_empty());

    let o = econet(
        &out,
        &[
            "fit-bop",
            "--panel",
            data.join("panel.csv").to_str().unwrap(),
            "--base-year",
            "2012",
        ],
    );
    assert_eq!(o.status.code(), Some(3));
    assert!(entries(&out).is_empty());
}

#[test]
fn computation_failure_has_its_own_code_and_no_output() {
    let d = TempDir::new().unwrap();
    let h = d.path().join("h.csv");
    fs::write(
        &h,
        "source,target,year,value_usd\nA,B,2002,5\nB,A,2002,5\nA,B,2003,1\nB,A,2003,1\n",
    )
    .unwrap();
    let out = d.path().join("out");
    let o = econet(
        &out,
        &[
            "pin-density",
            "--holdings",
            h.to_str().unwrap(),
            "--threshold",
            "3",
            "--grid-min",
            "1",
            "--grid-max",
            "10",
        ],
    );
    assert_eq!(o.status.code(), Some(4));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("pin:") && err.contains("2003"), "{err}");
    assert!(entries(&out).is_empty());
}

#[test]
fn usage_errors_exit_with_two() {
    let d = TempDir::new().unwrap();
    assert_eq!(econet(d.path(), &["fit-bop"]).status.code(), Some(2));
    assert_eq!(econet(d.path(), &["no-such-command"]).status.code(), Some(2));
}

#[test]
fn validate_lists_offending_lines() {
    let d = TempDir::new().unwrap();
    let p = d.path().join("p.csv");
    fs::write(
        &p,
        "country,account,direction,year,value_usd\nDEU,goods,out,2000,1\nDEU,goods,out,2001,2\nDEU,goods,out,2000,3\n",
    )
    .unwrap();
    let out = d.path().join("out");
    let o = econet(&out, &["validate", "--file", p.to_str().unwrap(), "--format", "panel"]);
    assert_eq!(o.status.code(), Some(3));
    let report = read_json(out.join("validation.json"));
    assert_eq!(report["report"]["findings"][0]["line"], 4);

    let h = d.path().join("h.csv");
    fs::write(&h, "source,target,year,value_usd\nA,B,2002,-1\n").unwrap();
    let o = econet(&out, &["validate", "--file", h.to_str().unwrap(), "--format", "edges"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains(":2: negative"));

    let clean = d.path().join("c.csv");
    fs::write(&clean, "time,kind,label,value_usd\n2004-06,NOA,CDS,1\n").unwrap();
    assert!(econet(
        &out,
        &["validate", "--file", clean.to_str().unwrap(), "--format", "series"]
    )
    .status
    .success());
}

#[test]
fn synth_is_byte_identical_per_seed() {
    let d = TempDir::new().unwrap();
    for kind in ["panel", "pin", "trade"] {
        let (a, b, c) = (
            d.path().join(format!("{kind}a")),
            d.path().join(format!("{kind}b")),
            d.path().join(format!("{kind}c")),
        );
        ok(&a, &["--seed", "9", "synth", "--kind", kind]);
        ok(&b, &["--seed", "9", "synth", "--kind", kind]);
        ok(&c, &["--seed", "10", "synth", "--kind", kind]);
        let mut names = entries(&a);
        names.sort();
        for n in &names {
            assert_eq!(fs::read(a.join(n)).unwrap(), fs::read(b.join(n)).unwrap(), "{kind}/{n}");
        }
        let differs = names
            .iter()
            .any(|n| fs::read(a.join(n)).unwrap() != fs::read(c.join(n)).unwrap());
        assert!(differs, "{kind}: seed has no effect");
    }
}
