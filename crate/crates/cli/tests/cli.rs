use std::collections::BTreeSet;
use std::path::Path;
use std::process::{Command, Output};

use radiosynth_core::features::read_features;
use radiosynth_core::grid::{load_image, load_labels, save_grid};
use radiosynth_core::{GridGeometry, ImageGrid, LabelGrid};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_radiosynth")).args(args).output().unwrap()
}

fn code(args: &[&str]) -> i32 {
    let out = run(args);
    out.status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn phantoms(dir: &Path, count: usize, seed: u64) {
    assert_eq!(code(&["phantom", "--count", &count.to_string(), "--seed", &seed.to_string(), "-o", s(dir)]), 0);
}

#[test]
fn single_phantom_layout() {
    let d = tempfile::tempdir().unwrap();
    phantoms(d.path(), 1, 4);
    let manifest = std::fs::read_to_string(d.path().join("manifest.csv")).unwrap();
    assert_eq!(
        manifest,
        "subject,image_path,labels_path\nphantom_000,phantom_000_image.flatgrid,phantom_000_labels.flatgrid\n"
    );
    let grids: Vec<_> = std::fs::read_dir(d.path())
        .unwrap()
        .filter_map(|e| e.unwrap().file_name().into_string().ok())
        .filter(|n| n.ends_with(".flatgrid"))
        .collect();
    assert_eq!(grids.len(), 2);
}

#[test]
fn usage_and_input_errors_exit_1() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(code(&["frobnicate"]), 1);
    assert_eq!(code(&["phantom", "--count", "0", "-o", s(d.path())]), 1);
    assert_eq!(code(&["extract", "--manifest", s(&d.path().join("missing.csv")), "-o", s(d.path())]), 1);
    std::fs::write(d.path().join("bad.csv"), "who,what\na,b\n").unwrap();
    assert_eq!(code(&["extract", "--manifest", s(&d.path().join("bad.csv")), "-o", s(d.path())]), 1);
    assert_eq!(code(&["--help"]), 0);
}

#[test]
fn empty_results_exit_2() {
    let d = tempfile::tempdir().unwrap();
    let empty = d.path().join("empty.csv");
    std::fs::write(&empty, "subject,image_path,labels_path\n").unwrap();
    assert_eq!(code(&["extract", "--manifest", s(&empty), "-o", s(d.path())]), 2);
    let broken = d.path().join("broken.csv");
    std::fs::write(&broken, "subject,image_path,labels_path\nx,nope.flatgrid,nope.flatgrid\n").unwrap();
    assert_eq!(code(&["extract", "--manifest", s(&broken), "-o", s(d.path())]), 2);
}

#[test]
fn failed_subjects_are_flagged_not_fatal() {
    let d = tempfile::tempdir().unwrap();
    phantoms(d.path(), 2, 1);
    let mut manifest = std::fs::read_to_string(d.path().join("manifest.csv")).unwrap();
    manifest.push_str("ghost,ghost_image.flatgrid,ghost_labels.flatgrid\n");
    std::fs::write(d.path().join("manifest.csv"), manifest).unwrap();
    assert_eq!(code(&["extract", "--manifest", s(&d.path().join("manifest.csv")), "-o", s(d.path())]), 0);
    let status = std::fs::read_to_string(d.path().join("features.status.csv")).unwrap();
    assert!(status.lines().any(|l| l.starts_with("ghost,failed,")));
    let (cohort, _) = read_features(d.path().join("features.csv")).unwrap();
    assert_eq!(cohort.subjects, ["phantom_000", "phantom_001"]);
}

#[test]
fn cohort_extraction_is_complete_distinct_and_repeatable() {
    let d = tempfile::tempdir().unwrap();
    phantoms(d.path(), 30, 77);
    let manifest = d.path().join("manifest.csv");
    let (a, b) = (d.path().join("a"), d.path().join("b"));
    assert_eq!(code(&["extract", "--manifest", s(&manifest), "-o", s(&a)]), 0);
    assert_eq!(code(&["extract", "--manifest", s(&manifest), "-o", s(&b), "--jobs", "4"]), 0);
    let (cohort, _) = read_features(a.join("features.csv")).unwrap();
    assert_eq!(cohort.n_rows(), 30);
    assert_eq!(cohort.columns.len(), 2 * 67);
    let distinct: BTreeSet<Vec<u64>> = cohort
        .values
        .iter()
        .map(|r| r.iter().map(|v| v.to_bits()).collect())
        .collect();
    assert_eq!(distinct.len(), 30);
    for f in ["features.csv", "features.meta.json", "features.status.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn same_seed_same_corpus() {
    let d = tempfile::tempdir().unwrap();
    phantoms(&d.path().join("a"), 3, 12);
    phantoms(&d.path().join("b"), 3, 12);
    phantoms(&d.path().join("c"), 3, 13);
    let read = |x: &str| std::fs::read(d.path().join(x).join("phantom_002_image.flatgrid")).unwrap();
    assert_eq!(read("a"), read("b"));
    assert_ne!(read("a"), read("c"));
}

#[test]
fn remove_constant_image_without_noise() {
    let d = tempfile::tempdir().unwrap();
    let g = GridGeometry::unit(30, 30).unwrap();
    save_grid(&ImageGrid::filled(g, 42.0).unwrap(), d.path().join("img.flatgrid")).unwrap();
    let labels = LabelGrid::new(
        g,
        (0..g.len())
            .map(|i| {
                let (c, r) = g.coords(i);
                if (10..20).contains(&c) && (10..20).contains(&r) {
                    if c < 15 { 1 } else { 4 }
                } else {
                    0
                }
            })
            .collect(),
    )
    .unwrap();
    save_grid(&labels, d.path().join("lab.flatgrid")).unwrap();
    let (img_path, lab_path) = (d.path().join("img.flatgrid"), d.path().join("lab.flatgrid"));
    let args = [
        "remove",
        "--image",
        s(&img_path),
        "--labels",
        s(&lab_path),
        "--noise",
        "off",
        "-o",
        s(d.path()),
    ];
    assert_eq!(code(&args), 0);
    let filled = load_image(d.path().join("filled_image.flatgrid"), None).unwrap();
    assert!(filled.data().iter().all(|&v| v == 42.0));
    let cleaned = load_labels(d.path().join("filled_labels.flatgrid"), None).unwrap();
    assert!(cleaned.data().iter().all(|&l| l == 0));
}

#[test]
fn evaluate_identity_and_pairings() {
    let d = tempfile::tempdir().unwrap();
    phantoms(d.path(), 5, 3);
    assert_eq!(code(&["extract", "--manifest", s(&d.path().join("manifest.csv")), "-o", s(d.path())]), 0);
    let f = d.path().join("features.csv");
    for pairing in ["flattened", "per-feature"] {
        let out = d.path().join(pairing);
        assert_eq!(code(&["evaluate", "--real", s(&f), "--synth", s(&f), "--pairing", pairing, "-o", s(&out)]), 0);
        let csv = std::fs::read_to_string(out.join("report.csv")).unwrap();
        assert!(csv.starts_with("roi,family,metric,value,p,n\n"));
        for line in csv.lines().skip(1) {
            let v: f64 = line.split(',').nth(3).unwrap().parse().unwrap();
            assert!((v - 1.0).abs() < 1e-12, "{pairing}: {line}");
        }
    }
    assert_eq!(code(&["evaluate", "--real", s(&f), "--synth", s(&f), "--pairing", "diagonal"]), 1);
}

#[test]
fn single_cell_grid_equals_synthesize() {
    let d = tempfile::tempdir().unwrap();
    phantoms(d.path(), 1, 7);
    let bg = d.path().join("phantom_000_image.flatgrid");
    let (area, sph) = (400.0f64, 0.85f64);
    let common = ["--budget", "300", "--seed", "9"];
    let mut grid = vec!["grid", "--background", s(&bg), "--surface", "400", "--sphericity", "0.85", "-o"];
    let gdir = d.path().join("grid");
    grid.push(s(&gdir));
    grid.extend(common);
    assert_eq!(code(&grid), 0);

    let diameter = 1.25 * 2.0 * (area / std::f64::consts::PI).sqrt() / (sph * sph);
    let target = serde_json::json!({
        "mask_diameter_mm": diameter,
        "targets": [
            {"roi": "roi2", "feature": "pixel_surface", "value": area},
            {"roi": "roi2", "feature": "sphericity", "value": sph}
        ]
    });
    let tpath = d.path().join("target.json");
    std::fs::write(&tpath, serde_json::to_vec(&target).unwrap()).unwrap();
    let sdir = d.path().join("synth");
    let mut synth = vec!["synthesize", "--background", s(&bg), "--target", s(&tpath), "-o", s(&sdir)];
    synth.extend(common);
    assert_eq!(code(&synth), 0);

    let cells = std::fs::read_to_string(gdir.join("grid_cells.csv")).unwrap();
    let header: Vec<&str> = cells.lines().next().unwrap().split(',').collect();
    let row: Vec<&str> = cells.lines().nth(1).unwrap().split(',').collect();
    let col = |k: &str| row[header.iter().position(|h| *h == k).unwrap()].parse::<f64>().unwrap();
    let trace: serde_json::Value = serde_json::from_slice(&std::fs::read(sdir.join("synth_trace.json")).unwrap()).unwrap();
    assert_eq!(col("objective"), trace["objective"].as_f64().unwrap());
    let achieved = |f: &str| {
        trace["targets"]
            .as_array()
            .unwrap()
            .iter()
            .find(|t| t["feature"] == f)
            .unwrap()["achieved"]
            .as_f64()
            .unwrap()
    };
    assert_eq!(col("achieved_pixel_surface"), achieved("pixel_surface"));
    assert_eq!(col("achieved_sphericity"), achieved("sphericity"));
}

#[test]
fn infeasible_synthesis_exits_1() {
    let d = tempfile::tempdir().unwrap();
    phantoms(d.path(), 1, 2);
    let tpath = d.path().join("t.json");
    std::fs::write(
        &tpath,
        r#"{"mask_diameter_mm": 30, "targets": [{"roi": "roi2", "feature": "sphericity", "value": 0.9}]}"#,
    )
    .unwrap();
    let bg = d.path().join("phantom_000_image.flatgrid");
    let args = ["synthesize", "--background", s(&bg), "--target", s(&tpath), "--center", "-400,10", "-o", s(d.path())];
    assert_eq!(code(&args), 1);
}

#[test]
fn archived_config_reproduces_outputs() {
    let d = tempfile::tempdir().unwrap();
    let (a, b) = (d.path().join("a"), d.path().join("b"));
    assert_eq!(code(&["phantom", "--count", "2", "--seed", "31", "--bin-width", "10", "-o", s(&a)]), 0);
    let archived = a.join("run_config.phantom.json");
    let cfg: serde_json::Value = serde_json::from_slice(&std::fs::read(&archived).unwrap()).unwrap();
    assert_eq!(cfg["config"]["seed"], 31);
    assert!(cfg["config"].get("jobs").is_none());
    assert_eq!(code(&["--config", s(&archived), "phantom", "--count", "2", "-o", s(&b)]), 0);
    for f in ["manifest.csv", "phantoms.json", "phantom_001_image.flatgrid"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}
