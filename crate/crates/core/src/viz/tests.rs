use super::*;
use crate::blackbox::{Builtin, Domain};
use crate::iann::{Activation, IannModel, MlpSpec};

fn tiny_trainedish_ovh(d: usize) -> IannModel {
    let spec = MlpSpec {
        hidden: vec![4, 4],
        activation: Activation::Tanh,
    };
    let mut model = IannModel::ovh(
        Domain::unit(d),
        (0..d).collect(),
        &spec,
        &RngStream::new(3),
    );
    model.axis2_stats = vec![
        LatentStats {
            min: -1.0,
            max: 1.0,
            p01: -1.0,
            p99: 1.0,
        };
        model.levels()
    ];
    model
}

#[test]
fn res_two_gives_corner_grid() {
    let model = tiny_trainedish_ovh(4);
    let s = level_surface(&model, 1, 2).unwrap();
    assert_eq!(s.axis1.len(), 2);
    assert_eq!(s.axis2.len(), 2);
    assert_eq!(s.values.len(), 2);
    assert_eq!(s.values[0].len(), 2);
    let corner = model.level_value(1, 0.0, -1.0);
    assert_eq!(s.values[0][0], corner);
}

#[test]
fn level_bounds_are_checked() {
    let model = tiny_trainedish_ovh(4);
    assert!(matches!(
        level_surface(&model, 0, 8),
        Err(VizError::Level { .. })
    ));
    assert!(matches!(
        level_surface(&model, 4, 8),
        Err(VizError::Level { max: 3, .. })
    ));
    assert!(matches!(
        level_surface(&model, 1, 1),
        Err(VizError::Parameter(_))
    ));
    let untrained = IannModel::ovh(
        Domain::unit(4),
        vec![0, 1, 2, 3],
        &MlpSpec::default(),
        &RngStream::new(1),
    );
    assert!(matches!(
        level_surface(&untrained, 1, 4),
        Err(VizError::Untrained)
    ));
}

#[test]
fn pd_is_the_exact_pointwise_mean() {
    let f = BlackBox::builtin(Builtin::Harmonic);
    let bundle = ice_pd(&f, 2, 25, 31, &RngStream::new(9)).unwrap();
    assert_eq!(bundle.curves.len(), 25);
    for m in 0..bundle.x_grid.len() {
        let mean = bundle.curves.iter().map(|c| c[m]).sum::<f64>() / 25.0;
        assert_eq!(bundle.pd[m], mean, "identical summation order must agree");
    }
}

#[test]
fn harmonic_amplitude_curves_are_straight_lines() {
    let f = BlackBox::builtin(Builtin::Harmonic);
    let bundle = ice_pd(&f, 0, 40, 21, &RngStream::new(2)).unwrap();
    let dx = bundle.x_grid[1] - bundle.x_grid[0];
    for curve in &bundle.curves {
        for w in curve.windows(3) {
            let second = (w[2] - 2.0 * w[1] + w[0]) / (dx * dx);
            assert!(second.abs() <= 1e-9, "second difference {second}");
        }
    }
}

#[test]
fn additive_function_curves_differ_by_shifts() {
    let f = BlackBox::from_expression(
        "x1+sin(x2)",
        Domain::new(vec![(0.0, 1.0), (0.0, 3.0)]).unwrap(),
    )
    .unwrap();
    let bundle = ice_pd(&f, 0, 10, 15, &RngStream::new(4)).unwrap();
    let base = &bundle.curves[0];
    for curve in &bundle.curves[1..] {
        let shift = curve[0] - base[0];
        for (a, b) in curve.iter().zip(base) {
            assert!((a - b - shift).abs() < 1e-12);
        }
    }
}

#[test]
fn single_curve_pd_is_that_curve() {
    let f = BlackBox::builtin(Builtin::Quad5);
    let bundle = ice_pd(&f, 3, 1, 9, &RngStream::new(7)).unwrap();
    assert_eq!(bundle.curves.len(), 1);
    assert_eq!(bundle.pd, bundle.curves[0]);
}

#[test]
fn contour_vertices_sit_on_the_level() {
    // values = x + 2y on an uneven grid; isolines are straight.
    let xs = vec![0.0, 0.35, 0.7, 1.0];
    let ys = vec![0.0, 0.5, 1.0];
    let values: Vec<Vec<f64>> = ys
        .iter()
        .map(|&y| xs.iter().map(|&x| x + 2.0 * y).collect())
        .collect();
    let bilinear = |x: f64, y: f64| -> f64 {
        // The field is affine, so bilinear interpolation is exact: evaluate
        // directly.
        x + 2.0 * y
    };
    for level in contour_levels(0.0, 3.0, 7) {
        let segments = marching_squares(&xs, &ys, &values, level);
        assert!(!segments.is_empty(), "level {level} must appear");
        for s in segments {
            for (x, y) in [s.a, s.b] {
                assert!(
                    (bilinear(x, y) - level).abs() <= 1e-9,
                    "vertex ({x},{y}) off level {level}"
                );
            }
        }
    }
}

#[test]
fn vertical_contours_when_values_follow_axis1() {
    let xs: Vec<f64> = (0..11).map(|i| i as f64 / 10.0).collect();
    let ys = xs.clone();
    let values: Vec<Vec<f64>> = ys.iter().map(|_| xs.clone()).collect();
    for level in [0.25, 0.5, 0.75] {
        let segments = marching_squares(&xs, &ys, &values, level);
        assert!(!segments.is_empty());
        for s in &segments {
            assert!((s.a.0 - level).abs() < 1e-12, "vertex x equals the level");
            assert!((s.a.0 - s.b.0).abs() < 1e-12, "segment is vertical");
        }
    }
}

#[test]
fn constant_surface_renders_without_contours() {
    let mut model = tiny_trainedish_ovh(3);
    if let crate::iann::ModelStructure::Ovh { level_nets, .. } = &mut model.structure {
        for layer in &mut level_nets[0].layers {
            layer.w.iter_mut().for_each(|w| *w = 0.0);
            layer.b.iter_mut().for_each(|b| *b = 0.0);
        }
        level_nets[0].layers.last_mut().unwrap().b[0] = 2.0;
    }
    let s = level_surface(&model, 1, 16).unwrap();
    assert!(s.values.iter().flatten().all(|&v| v == 2.0));
    let svg = render_heatmap_svg(&s, &HeatmapOptions::default());
    assert!(!svg.contains("<path"), "flat surface draws no contour lines");
    let first_fill = svg.split("fill=\"rgb").nth(1).unwrap()[..12].to_string();
    for cell in svg.split("fill=\"rgb").skip(2) {
        if cell.len() >= 12 {
            assert_eq!(cell[..12], first_fill, "single fill color");
        }
    }
}

#[test]
fn export_writes_and_reloads_levels() {
    let dir = std::env::temp_dir().join(format!("iann-viz-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let model = tiny_trainedish_ovh(4);
    let surfaces = export_level_artifacts(&dir, &model, 9, &HeatmapOptions::default()).unwrap();
    assert_eq!(surfaces.len(), 3, "chain over 4 inputs has 3 levels");
    for level in 1..=3 {
        let json = std::fs::read_to_string(dir.join(format!("level_{level}.json"))).unwrap();
        let back: LevelSurface = serde_json::from_str(&json).unwrap();
        assert_eq!(back, surfaces[level - 1], "reload reproduces the surface");
        assert!(dir.join(format!("level_{level}.svg")).exists());
    }
    let f = BlackBox::builtin(Builtin::Harmonic);
    let bundle = export_ice_artifact(&dir, &f, 1, 5, 11, &RngStream::new(1)).unwrap();
    let json = std::fs::read_to_string(dir.join("ice_2.json")).unwrap();
    let back: IceBundle = serde_json::from_str(&json).unwrap();
    assert_eq!(back, bundle);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn dash_caption_lists_coefficients() {
    let spec = MlpSpec {
        hidden: vec![4],
        activation: Activation::Tanh,
    };
    let mut model = IannModel::dash(
        Domain::unit(9),
        vec![vec![0, 1, 2], vec![3, 4, 5], vec![6, 7, 8]],
        vec![
            vec![0.6, 0.4, -0.7],
            vec![0.8, -0.5, 0.3],
            vec![0.52, -0.78, 0.36],
        ],
        vec![2, 0, 1],
        &spec,
        &RngStream::new(6),
    );
    model.axis2_stats = vec![
        LatentStats {
            min: -1.0,
            max: 1.0,
            p01: -0.9,
            p99: 0.9,
        };
        2
    ];
    let s = level_surface(&model, 1, 4).unwrap();
    let caption = s.beta_caption.as_ref().unwrap();
    assert_eq!(caption.len(), 3);
    assert_eq!(caption[0].0, 7, "level 1 shows the leading group x7..x9");
    let text = s.beta_caption_text().unwrap();
    assert!(text.contains("x7") && text.contains("x8") && text.contains("x9"), "{text}");
    let svg = render_heatmap_svg(&s, &HeatmapOptions::default());
    assert!(svg.contains("v1 ="), "caption rendered: {text}");
}
