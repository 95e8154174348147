//! Acceptance suite. Runs every criterion at its stated tolerance and prints
//! one PASS/FAIL line each; exits non-zero when any criterion fails.
//!
//! `cargo test -p radiosynth-cli --test acceptance [-- <filter>]`

use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use radiosynth_core::evalstat::{average_ranks, correlation_p_value, pearson, spearman, SimilarityReport};
use radiosynth_core::features::{Family, FamilySet, RoiFeatures};
use radiosynth_core::intensity::compute_first_order;
use radiosynth_core::roi::{circular_mask, mask_from_labels};
use radiosynth_core::shape::compute_shape;
use radiosynth_core::synth::{
    background_fill, conditioning_circle, make_phantom, render_blob, synthesize, tumor_roi, FillConfig, SynthConfig,
    TargetProfile, TargetSpec, DEFAULT_MASK_SCALE,
};
use radiosynth_core::{
    extract_features, BinaryMask, DiscretizationConfig, FeatureVector, GridGeometry, ImageGrid, LabelGrid, RoiSpec,
};
use radiosynth_testkit::fixtures::random_roi;
use radiosynth_testkit::stats::{correlation, ks_uniform, ranks, t_two_sided_quadrature};
use radiosynth_testkit::texture::{glcm_features, glszm_features, LevelRaster};
use radiosynth_testkit::{close, first_order, Named};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

const BIN_WIDTH: f64 = 25.0;
const DISC: DiscretizationConfig = DiscretizationConfig::FixedBinWidth { bin_width: BIN_WIDTH };

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_radiosynth")
}

fn cli(args: &[&str]) -> i32 {
    let out = Command::new(bin()).args(args).output().expect("spawn radiosynth");
    if !out.status.success() {
        eprint!("{}", String::from_utf8_lossy(&out.stderr));
    }
    out.status.code().unwrap_or(-1)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

// 1 ------------------------------------------------------------------------

fn worst_named(engine: &[(&'static str, f64)], oracle: &Named, worst: &mut (f64, String), label: &str) -> bool {
    let mut ok = engine.len() == oracle.len();
    for (name, v) in engine {
        let o = oracle[name];
        let err = (v - o).abs() / o.abs().max(1e-300);
        if (v - o).abs() > 1e-12 && err > worst.0 {
            *worst = (err, format!("{label} {name}"));
        }
        ok &= close(*v, o, 1e-9, 1e-12);
    }
    ok
}

fn feature_oracles() -> Verdict {
    let t0 = Instant::now();
    let mut worst = (0.0, String::new());
    let mut failures = 0;
    for seed in 0..100 {
        let f = random_roi(seed, 16);
        let g = GridGeometry::unit(f.width, f.height).unwrap();
        let img = ImageGrid::new(g, f.values.clone()).unwrap();
        let mask = BinaryMask::new(g, f.mask.clone()).unwrap();
        let fam = FamilySet {
            glcm: true,
            glszm: true,
            ..FamilySet::NONE
        };
        let tex = RoiFeatures::compute(&img, &mask, &mask, &DISC, fam).unwrap();
        let fo = compute_first_order(&f.inside(), 1.0, &DISC).unwrap();
        let raster = LevelRaster::from_roi(f.width, f.height, &f.values, &f.mask, BIN_WIDTH);
        let label = format!("roi {seed}");
        let ok = worst_named(&fo.named(), &first_order(&f.inside(), 1.0, BIN_WIDTH), &mut worst, &label)
            & worst_named(&tex.glcm.unwrap().named(), &glcm_features(&raster).unwrap(), &mut worst, &label)
            & worst_named(&tex.glszm.unwrap().named(), &glszm_features(&raster), &mut worst, &label);
        failures += usize::from(!ok);
    }
    let secs = t0.elapsed().as_secs_f64();
    verdict(
        failures == 0 && secs < 10.0,
        format!(
            "100 ROIs x 58 features, {failures} mismatching ROIs, worst rel err {:.1e} ({}), {secs:.2} s",
            worst.0,
            if worst.1.is_empty() { "-" } else { &worst.1 }
        ),
    )
}

// 2 ------------------------------------------------------------------------

fn shape_convergence() -> Verdict {
    let t0 = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    for r in [20.0, 25.0, 30.0] {
        let n = (2.0 * r) as usize + 8;
        let g = GridGeometry::unit(n, n).unwrap();
        let m = circular_mask(&g, (n as f64 / 2.0, n as f64 / 2.0), 2.0 * r).unwrap();
        let sh = compute_shape(&m).unwrap();
        let area_err = (sh.mesh_surface / (PI * r * r) - 1.0).abs();
        let sph_ok = (0.98..=1.01).contains(&sh.sphericity);
        pass &= sph_ok && area_err <= 0.02;
        parts.push(format!(
            "r={r}: sphericity {:.4}{} mesh_surface err {:.2}%",
            sh.sphericity,
            if sph_ok { "" } else { " (outside [0.98, 1.01])" },
            100.0 * area_err
        ));
    }
    let g = GridGeometry::unit(5, 5).unwrap();
    let block = BinaryMask::from_fn(g, |c, r| (1..4).contains(&c) && (1..4).contains(&r)).unwrap();
    let sh = compute_shape(&block).unwrap();
    let block_ok =
        (sh.mesh_surface - 8.5).abs() <= 1e-12 && (sh.perimeter - (8.0 + 2.0 * std::f64::consts::SQRT_2)).abs() <= 1e-12;
    parts.push(format!("3x3 block {}", if block_ok { "exact" } else { "WRONG" }));
    let secs = t0.elapsed().as_secs_f64();
    verdict(pass && block_ok && secs < 1.0, format!("{}; {secs:.3} s", parts.join("; ")))
}

// 3 ------------------------------------------------------------------------

const LOCATION: [&str; 6] = ["maximum", "mean", "median", "minimum", "p10", "p90"];
const MOMENTS: [&str; 5] = [
    "kurtosis",
    "mean_absolute_deviation",
    "robust_mean_absolute_deviation",
    "skewness",
    "variance",
];
const ENERGY: [&str; 3] = ["energy", "root_mean_squared", "total_energy"];

fn rois() -> Vec<RoiSpec> {
    vec![RoiSpec::roi1(), RoiSpec::roi2()]
}

fn fv(img: &ImageGrid, labels: &LabelGrid) -> FeatureVector {
    extract_features(img, labels, &rois(), &DISC).unwrap()
}

fn rel_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

fn geometric_match(a: &FeatureVector, b: &FeatureVector) -> usize {
    a.entries
        .iter()
        .zip(&b.entries)
        .filter(|(x, y)| {
            let ok = if x.family == Family::Shape {
                rel_eq(x.value, y.value)
            } else {
                x.value.to_bits() == y.value.to_bits()
            };
            !ok || x.feature != y.feature
        })
        .count()
}

fn invariance() -> Verdict {
    let (mut bad_t, mut bad_r, mut bad_s) = (0, 0, 0);
    let mut complete = true;
    for seed in 0..50u64 {
        let p = make_phantom(seed, GridGeometry::unit(64, 64).unwrap()).unwrap();
        let base = fv(&p.image, &p.labels);
        complete &= base.len() == 134;

        let g = *p.image.geometry();
        let big = GridGeometry::unit(g.width + 9, g.height + 7).unwrap();
        let (dx, dy) = (1 + seed as usize % 9, 7 - seed as usize % 7);
        let inside = |c: usize, r: usize| c >= dx && r >= dy && c - dx < g.width && r - dy < g.height;
        let ti = ImageGrid::from_fn(big, |c, r| if inside(c, r) { p.image.get(c - dx, r - dy) } else { 123.0 }).unwrap();
        let tl = LabelGrid::new(
            big,
            (0..big.len())
                .map(|i| {
                    let (c, r) = big.coords(i);
                    if inside(c, r) {
                        p.labels.get(c - dx, r - dy)
                    } else {
                        0
                    }
                })
                .collect(),
        )
        .unwrap();
        bad_t += geometric_match(&base, &fv(&ti, &tl));

        let (mut ri, mut rl) = (p.image.clone(), p.labels.clone());
        for _ in 0..3 {
            ri = ri.rotated90();
            rl = rl.rotated90();
            bad_r += geometric_match(&base, &fv(&ri, &rl));
        }

        let c = 37.0 + seed as f64;
        let shifted = fv(&p.image.shifted(c).unwrap(), &p.labels);
        for (x, y) in base.entries.iter().zip(&shifted.entries) {
            let f = x.feature.as_str();
            let first = x.family == Family::FirstOrder;
            let ok = if first && LOCATION.contains(&f) {
                rel_eq(x.value + c, y.value)
            } else if first && MOMENTS.contains(&f) {
                rel_eq(x.value, y.value)
            } else if first && ENERGY.contains(&f) {
                true
            } else {
                x.value.to_bits() == y.value.to_bits()
            };
            bad_s += usize::from(!ok);
        }
    }
    verdict(
        complete && bad_t + bad_r + bad_s == 0,
        format!(
            "50 phantoms, 134 features: translation {bad_t}, rotation {bad_r}, shift {bad_s} violations \
             (shift: location features move by c, moments to 1e-12, energy features not shift-invariant)"
        ),
    )
}

// 4 ------------------------------------------------------------------------

fn boundary_extremes(img: &ImageGrid, mask: &BinaryMask) -> (f64, f64) {
    let g = img.geometry();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for r in 0..g.height as isize {
        for c in 0..g.width as isize {
            if !mask.get_signed(c, r)
                && [(-1, 0), (1, 0), (0, -1), (0, 1)].iter().any(|&(a, b)| mask.get_signed(c + a, r + b))
            {
                let v = img.get(c as usize, r as usize);
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
    }
    (lo, hi)
}

fn harmonic_fill() -> Verdict {
    let t0 = Instant::now();
    let quiet = FillConfig {
        noise: false,
        ..FillConfig::default()
    };
    let g = GridGeometry::new(48, 40, 1.0, 0.7).unwrap();
    let ramp = ImageGrid::from_fn(g, |c, r| 3.0 * c as f64 - 2.0 * r as f64 + 100.0).unwrap();
    let range = 3.0 * 47.0 + 2.0 * 39.0;
    let mask = circular_mask(&g, (22.0, 13.0), 20.0).unwrap();
    let out = background_fill(&ramp, &mask, &quiet).unwrap();
    let ramp_err = mask
        .indices()
        .map(|i| (out.image.data()[i] - ramp.data()[i]).abs())
        .fold(0.0, f64::max)
        / range;

    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let (mut max_violations, mut worst_residual, mut masks) = (0, 0.0f64, 0);
    while masks < 100 {
        let g = GridGeometry::unit(rng.random_range(8..48), rng.random_range(8..48)).unwrap();
        let (fx, fy) = (rng.random_range(0.05..0.5), rng.random_range(0.05..0.5));
        let img = ImageGrid::from_fn(g, |c, r| {
            100.0 * (fx * c as f64).sin() + 50.0 * (fy * r as f64).cos() + rng.random_range(-5.0..5.0)
        })
        .unwrap();
        let mut mask = BinaryMask::empty(g);
        for _ in 0..rng.random_range(1..4) {
            let c = (rng.random_range(0.0..g.width as f64), rng.random_range(0.0..g.height as f64));
            if let Ok(m) = circular_mask(&g, c, rng.random_range(2.0..14.0)) {
                mask = mask.union(&m).unwrap();
            }
        }
        if mask.is_empty() || mask.pixel_count() == g.len() {
            continue;
        }
        masks += 1;
        let out = background_fill(&img, &mask, &quiet).unwrap();
        worst_residual = worst_residual.max(out.residual / out.boundary_range);
        let (lo, hi) = boundary_extremes(&img, &mask);
        let slack = 1e-9 * (hi - lo);
        max_violations += mask
            .indices()
            .filter(|&i| !(out.image.data()[i] >= lo - slack && out.image.data()[i] <= hi + slack))
            .count();
    }
    let secs = t0.elapsed().as_secs_f64();
    verdict(
        ramp_err <= 1e-6 && max_violations == 0 && worst_residual <= 1e-6 && secs < 30.0,
        format!(
            "ramp error {ramp_err:.1e} of range; 100 masks: {max_violations} maximum-principle violations, \
             worst residual {worst_residual:.1e} of range; {secs:.2} s"
        ),
    )
}

// 5 ------------------------------------------------------------------------

fn self_recovery() -> Verdict {
    let g = GridGeometry::unit(128, 128).unwrap();
    let mut good = 0;
    let mut slowest = 0.0f64;
    let mut lines = Vec::new();
    for trial in 0..10u64 {
        let t0 = Instant::now();
        let ph = make_phantom(100 + trial, g).unwrap();
        let bg = background_fill(&ph.image, &mask_from_labels(&ph.labels, &tumor_roi()), &FillConfig::default())
            .unwrap()
            .image;
        let (img, labels) = render_blob(&ph.params, &g, &bg, trial).unwrap();
        let cfg = SynthConfig {
            seed: trial,
            budget: 5000,
            ..SynthConfig::default()
        };
        let truth = extract_features(&img, &labels, &cfg.rois, &cfg.discretization).unwrap();
        let (center, d) = conditioning_circle(&labels, &RoiSpec::roi2().shape_roi(), DEFAULT_MASK_SCALE).unwrap();
        let target = TargetSpec::from_features(&truth, TargetProfile::Core, d);
        let res = synthesize(&bg, center, &target, &cfg).unwrap();
        let get = |v: &FeatureVector, f: &str| v.get("roi2", f).unwrap();
        let ps = get(&res.achieved, "pixel_surface") / get(&truth, "pixel_surface") - 1.0;
        let sp = get(&res.achieved, "sphericity") - get(&truth, "sphericity");
        let ok = res.objective <= 0.05 && ps.abs() <= 0.10 && sp.abs() <= 0.05;
        good += usize::from(ok);
        slowest = slowest.max(t0.elapsed().as_secs_f64());
        lines.push(format!("{:.3}{}", res.objective, if ok { "" } else { "!" }));
    }
    verdict(
        good >= 9 && slowest < 60.0,
        format!(
            "{good}/10 trials recovered (objectives {}), slowest trial {slowest:.1} s",
            lines.join(" ")
        ),
    )
}

// 6 ------------------------------------------------------------------------

fn read_csv(path: &Path) -> Vec<std::collections::HashMap<String, String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let headers = r.headers().unwrap().clone();
    r.records()
        .map(|rec| {
            let rec = rec.unwrap();
            headers.iter().map(String::from).zip(rec.iter().map(String::from)).collect()
        })
        .collect()
}

fn sweep() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let ph = d.join("ph");
    assert_eq!(cli(&["phantom", "--count", "1", "--seed", "7", "-o", s(&ph)]), 0);
    assert_eq!(
        cli(&[
            "remove",
            "--image",
            s(&ph.join("phantom_000_image.flatgrid")),
            "--labels",
            s(&ph.join("phantom_000_labels.flatgrid")),
            "-o",
            s(&ph),
        ]),
        0
    );
    let out = d.join("grid");
    let code = cli(&[
        "grid",
        "--background",
        s(&ph.join("filled_image.flatgrid")),
        "--surface",
        "300,600,900",
        "--sphericity",
        "0.7,0.8,0.9",
        "--budget",
        "3000",
        "--seed",
        "1",
        "-o",
        s(&out),
    ]);
    let rows = read_csv(&out.join("grid_cells.csv"));
    let num = |r: &std::collections::HashMap<String, String>, k: &str| r[k].parse::<f64>().unwrap_or(f64::NAN);
    let within = rows
        .iter()
        .filter(|r| r["status"] == "ok")
        .filter(|r| num(r, "surface_rel_error") <= 0.15 && num(r, "sphericity_abs_error") <= 0.08)
        .count();
    let ok_rows: Vec<_> = rows.iter().filter(|r| r["status"] == "ok").collect();
    let rho = |t: &str, a: &str| {
        let tv: Vec<f64> = ok_rows.iter().map(|r| num(r, t)).collect();
        let av: Vec<f64> = ok_rows.iter().map(|r| num(r, a)).collect();
        spearman(&tv, &av).map(|c| c.r).unwrap_or(f64::NAN)
    };
    let rs = rho("target_pixel_surface", "achieved_pixel_surface");
    let rp = rho("target_sphericity", "achieved_sphericity");
    verdict(
        code == 0 && within >= 8 && rs >= 0.9 && rp >= 0.9,
        format!("{within}/9 cells within tolerance; rho surface {rs:.3}, rho sphericity {rp:.3}"),
    )
}

// 7 ------------------------------------------------------------------------

fn cohort_similarity() -> Verdict {
    let t0 = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let (ph, real, syn, ev) = (d.join("ph"), d.join("real"), d.join("syn"), d.join("ev"));
    let manifest = ph.join("manifest.csv");
    assert_eq!(cli(&["phantom", "--count", "30", "--seed", "2024", "-o", s(&ph)]), 0);
    assert_eq!(cli(&["extract", "--manifest", s(&manifest), "-o", s(&real)]), 0);
    let code = cli(&[
        "synthesize",
        "--manifest",
        s(&manifest),
        "--budget",
        "5000",
        "--jobs",
        "1",
        "-o",
        s(&syn),
    ]);
    if code != 0 {
        return verdict(false, format!("regeneration exited with {code}"));
    }
    assert_eq!(cli(&["extract", "--manifest", s(&syn.join("synth_manifest.csv")), "-o", s(&syn)]), 0);
    let code = cli(&[
        "evaluate",
        "--real",
        s(&real.join("features.csv")),
        "--synth",
        s(&syn.join("features.csv")),
        "--common-subjects",
        "-o",
        s(&ev),
    ]);
    if code != 0 {
        return verdict(false, format!("evaluate exited with {code}"));
    }
    let report: SimilarityReport =
        serde_json::from_slice(&std::fs::read(ev.join("report.json")).unwrap()).unwrap();
    let regenerated = read_csv(&syn.join("synth_summary.csv")).iter().filter(|r| r["status"] == "ok").count();
    let mut pass = regenerated == 30 && report.skipped.is_empty() && report.cells.len() == 8;
    let mut parts = Vec::new();
    for cell in &report.cells {
        let need = match cell.family {
            Family::Shape | Family::FirstOrder => 0.85,
            Family::Glcm | Family::Glszm => 0.6,
        };
        let ok = cell.spearman_rho >= need;
        pass &= ok;
        parts.push(format!(
            "{}/{} {:.3}{}",
            cell.roi,
            cell.family.as_str(),
            cell.spearman_rho,
            if ok { "" } else { "!" }
        ));
    }
    let mins = t0.elapsed().as_secs_f64() / 60.0;
    pass &= mins < 45.0;
    verdict(
        pass,
        format!(
            "{regenerated}/30 regenerated; Spearman {} (reference magnitudes: roi2/shape 0.9900, roi1/glcm 0.9065); \
             {mins:.1} min single-threaded",
            parts.join(", ")
        ),
    )
}

// 8 ------------------------------------------------------------------------

fn statistics() -> Verdict {
    let mut worst_p = 0.0f64;
    for &n in &[3usize, 5, 12, 30, 101, 1000] {
        for &r in &[-0.97, -0.5, -0.1, 0.0, 0.2, 0.5, 0.8, 0.99] {
            let df = (n - 2) as f64;
            let t = r * (df / (1.0 - r * r)).sqrt();
            worst_p = worst_p.max((correlation_p_value(r, n) - t_two_sided_quadrature(t, df)).abs());
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst_rho = 0.0f64;
    let mut compared = 0;
    while compared < 100 {
        let n = rng.random_range(3..60);
        let alphabet = if compared % 2 == 0 { 5 } else { 1_000_000 };
        let u: Vec<f64> = (0..n).map(|_| rng.random_range(0..alphabet) as f64).collect();
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(0..alphabet) as f64).collect();
        if let Ok(c) = spearman(&u, &v) {
            worst_rho = worst_rho.max((c.r - correlation(&ranks(&u), &ranks(&v))).abs());
            compared += 1;
        }
    }
    let ties = average_ranks(&[10.0, 20.0, 20.0, 30.0]) == [1.0, 2.5, 2.5, 4.0]
        && average_ranks(&[2.0, 1.0, 2.0, 1.0, 2.0]) == [4.0, 1.5, 4.0, 1.5, 4.0];
    let (mut pp, mut sp) = (Vec::new(), Vec::new());
    for _ in 0..100 {
        let u: Vec<f64> = (0..1000).map(|_| rng.random::<f64>()).collect();
        let mut v = u.clone();
        v.shuffle(&mut rng);
        pp.push(pearson(&u, &v).unwrap().p);
        sp.push(spearman(&u, &v).unwrap().p);
    }
    let (kp, ks) = (ks_uniform(&pp), ks_uniform(&sp));
    verdict(
        worst_p <= 1e-8 && worst_rho <= 1e-12 && ties && kp < 0.15 && ks < 0.15,
        format!(
            "p vs quadrature {worst_p:.1e}; Spearman vs brute ranks {worst_rho:.1e}; hand ties {}; \
             null KS pearson {kp:.3}, spearman {ks:.3}",
            if ties { "exact" } else { "WRONG" }
        ),
    )
}

// 9 ------------------------------------------------------------------------

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let Ok(entries) = std::fs::read_dir(dir) else {
        return Vec::new();
    };
    let mut v: Vec<(String, Vec<u8>)> = entries
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect();
    v.sort();
    v
}

/// Runs every command twice into the same directory name, once with one
/// worker and once with three, and compares all files byte for byte.
fn determinism() -> Verdict {
    let root = tempfile::tempdir().unwrap();
    let inputs = root.path().join("inputs");
    assert_eq!(cli(&["phantom", "--count", "6", "--seed", "11", "-o", s(&inputs)]), 0);
    assert_eq!(cli(&["extract", "--manifest", s(&inputs.join("manifest.csv")), "-o", s(&inputs)]), 0);
    let target = inputs.join("target.json");
    std::fs::write(
        &target,
        r#"{"mask_diameter_mm": 40, "targets": [
            {"roi": "roi2", "feature": "pixel_surface", "value": 500},
            {"roi": "roi2", "feature": "sphericity", "value": 0.8},
            {"roi": "roi1", "feature": "mean", "value": 250}]}"#,
    )
    .unwrap();
    let manifest = inputs.join("manifest.csv");
    let features = inputs.join("features.csv");
    let image = inputs.join("phantom_000_image.flatgrid");
    let labels = inputs.join("phantom_000_labels.flatgrid");
    let work = root.path().join("work");
    let commands: Vec<(&str, Vec<&str>)> = vec![
        ("phantom", vec!["phantom", "--count", "5"]),
        ("extract", vec!["extract", "--manifest", s(&manifest)]),
        ("synthesize", vec!["synthesize", "--background", s(&image), "--target", s(&target), "--budget", "300"]),
        ("regenerate", vec!["synthesize", "--manifest", s(&manifest), "--budget", "200"]),
        ("remove", vec!["remove", "--image", s(&image), "--labels", s(&labels), "--noise", "on"]),
        ("random-remove", vec!["remove", "--image", s(&image), "--random-mask"]),
        (
            "evaluate",
            vec!["evaluate", "--real", s(&features), "--synth", s(&features), "--permutation", "200"],
        ),
        (
            "grid",
            vec!["grid", "--background", s(&image), "--surface", "200,400", "--sphericity", "0.8,0.9", "--budget", "200"],
        ),
    ];
    let mut differing = Vec::new();
    for (name, args) in &commands {
        let mut runs = Vec::new();
        for jobs in ["1", "3"] {
            let _ = std::fs::remove_dir_all(&work);
            let mut full = args.clone();
            full.extend(["--seed", "5", "--jobs", jobs, "-o", s(&work)]);
            if cli(&full) != 0 {
                differing.push(format!("{name} failed"));
            }
            runs.push(files(&work));
        }
        if runs[0] != runs[1] || runs[0].is_empty() {
            differing.push(name.to_string());
        }
    }
    verdict(
        differing.is_empty(),
        format!(
            "{} commands rerun with --jobs 1 and --jobs 3: {}",
            commands.len(),
            if differing.is_empty() { "all outputs byte-identical".into() } else { format!("differ: {}", differing.join(", ")) }
        ),
    )
}

fn main() {
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    type Criterion = (&'static str, fn() -> Verdict);
    let criteria: [Criterion; 9] = [
        ("feature-oracle equivalence", feature_oracles),
        ("shape convergence", shape_convergence),
        ("invariance suite", invariance),
        ("harmonic fill", harmonic_fill),
        ("inverse-synthesis self-recovery", self_recovery),
        ("surface x sphericity sweep", sweep),
        ("cohort regeneration similarity", cohort_similarity),
        ("statistics correctness", statistics),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    let mut ran = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        if !filters.is_empty() && !filters.iter().any(|x| name.contains(x.as_str()) || *x == (i + 1).to_string()) {
            continue;
        }
        ran += 1;
        let t0 = Instant::now();
        let v = std::panic::catch_unwind(f).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            verdict(false, format!("panicked: {msg}"))
        });
        failed += usize::from(!v.pass);
        println!(
            "criterion {} {:<34} {}  {} [{:.1} s]",
            i + 1,
            name,
            if v.pass { "PASS" } else { "FAIL" },
            v.detail,
            t0.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} of {ran} criteria passed", ran - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
