use radiosynth_core::features::Family;
use radiosynth_core::synth::make_phantom;
use radiosynth_core::{extract_features, DiscretizationConfig, FeatureVector, GridGeometry, ImageGrid, LabelGrid, RoiSpec};

/// First-order features that move by exactly the added constant.
const LOCATION: [&str; 6] = ["maximum", "mean", "median", "minimum", "p10", "p90"];
/// Central-moment features: invariant, but the shifted mean rounds differently.
const MOMENTS: [&str; 5] = [
    "kurtosis",
    "mean_absolute_deviation",
    "robust_mean_absolute_deviation",
    "skewness",
    "variance",
];
/// First-order features that are not functions of centered values.
const ENERGY: [&str; 3] = ["energy", "root_mean_squared", "total_energy"];

fn rois() -> [RoiSpec; 2] {
    [RoiSpec::roi1(), RoiSpec::roi2()]
}

fn features(img: &ImageGrid, labels: &LabelGrid) -> FeatureVector {
    let fv = extract_features(img, labels, &rois(), &DiscretizationConfig::default()).unwrap();
    assert!(fv.metadata.absent.is_empty());
    assert_eq!(fv.len(), 134);
    fv
}

fn phantom(seed: u64) -> (ImageGrid, LabelGrid) {
    let p = make_phantom(seed, GridGeometry::unit(64, 64).unwrap()).unwrap();
    (p.image, p.labels)
}

/// Shape features to 1e-12 relative, everything else bit-exact.
fn assert_invariant(a: &FeatureVector, b: &FeatureVector, what: &str) {
    for (x, y) in a.entries.iter().zip(&b.entries) {
        assert_eq!((&x.roi, &x.feature), (&y.roi, &y.feature));
        if x.family == Family::Shape {
            let tol = 1e-12 * x.value.abs().max(y.value.abs());
            assert!((x.value - y.value).abs() <= tol, "{what} {} {}: {} vs {}", x.roi, x.feature, x.value, y.value);
        } else {
            assert_eq!(x.value.to_bits(), y.value.to_bits(), "{what} {} {}: {} vs {}", x.roi, x.feature, x.value, y.value);
        }
    }
}

/// Places the grids on a larger canvas at offset `(dx, dy)`.
fn translate(img: &ImageGrid, labels: &LabelGrid, dx: usize, dy: usize) -> (ImageGrid, LabelGrid) {
    let g = img.geometry();
    let big = GridGeometry::new(g.width + 9, g.height + 7, g.spacing_x, g.spacing_y).unwrap();
    let inside = |c: usize, r: usize| c >= dx && r >= dy && c - dx < g.width && r - dy < g.height;
    let image = ImageGrid::from_fn(big, |c, r| if inside(c, r) { img.get(c - dx, r - dy) } else { 123.0 }).unwrap();
    let mut data = vec![0u8; big.len()];
    for r in 0..big.height {
        for c in 0..big.width {
            if inside(c, r) {
                data[r * big.width + c] = labels.get(c - dx, r - dy);
            }
        }
    }
    (image, LabelGrid::new(big, data).unwrap())
}

#[test]
fn translation_invariance() {
    for seed in 0..50 {
        let (img, labels) = phantom(seed);
        let base = features(&img, &labels);
        let (ti, tl) = translate(&img, &labels, 1 + seed as usize % 9, 7 - seed as usize % 7);
        assert_invariant(&base, &features(&ti, &tl), &format!("seed {seed} translation"));
    }
}

#[test]
fn rotation_invariance() {
    for seed in 0..50 {
        let (img, labels) = phantom(seed);
        let base = features(&img, &labels);
        let (mut ri, mut rl) = (img.clone(), labels.clone());
        for quarter in 1..4 {
            ri = ri.rotated90();
            rl = rl.rotated90();
            assert_invariant(&base, &features(&ri, &rl), &format!("seed {seed} rotation x{quarter}"));
        }
    }
}

fn rel_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

#[test]
fn intensity_shift_invariance() {
    for seed in 0..50 {
        let (img, labels) = phantom(seed);
        let base = features(&img, &labels);
        let c = 37.0 + seed as f64;
        let shifted = features(&img.shifted(c).unwrap(), &labels);
        for (x, y) in base.entries.iter().zip(&shifted.entries) {
            let f = x.feature.as_str();
            let first = x.family == Family::FirstOrder;
            if first && LOCATION.contains(&f) {
                assert!(rel_eq(x.value + c, y.value), "seed {seed} {} {f}", x.roi);
            } else if first && MOMENTS.contains(&f) {
                assert!(rel_eq(x.value, y.value), "seed {seed} {} {f}: {} vs {}", x.roi, x.value, y.value);
            } else if !(x.family == Family::FirstOrder && ENERGY.contains(&f)) {
                assert_eq!(x.value.to_bits(), y.value.to_bits(), "seed {seed} {} {f}", x.roi);
            }
        }
    }
}

#[test]
fn repeated_extraction_is_identical() {
    let (img, labels) = phantom(99);
    assert_eq!(features(&img, &labels), features(&img, &labels));
}
