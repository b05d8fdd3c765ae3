mod common;

use hazekit::airlight::{draw_search_path, estimate_airlight, quad_tree_search, AirlightParams};
use hazekit::image::PlanarImage;
use hazekit::synthesis::generate_sky_scene;
use hazekit::wgif::{decompose, WgifParams};
use proptest::prelude::*;

#[test]
fn uniform_bright_quadrant_is_found() {
    let img = PlanarImage::from_fn(64, 64, 3, |x, y, c| {
        if x < 32 && y < 32 {
            0.95
        } else {
            0.1 + 0.3 * (((x * 7 + y * 13 + c * 5) % 11) as f64 / 10.0)
        }
    });
    let a = estimate_airlight(&img, 16).unwrap();
    assert_eq!(a.rgb, [0.95; 3]);
}

#[test]
fn constant_image_ties_break_top_left() {
    let img = PlanarImage::filled(64, 48, 3, 0.6);
    let s = quad_tree_search(&img, &AirlightParams::default()).unwrap();
    assert_eq!(s.airlight.rgb, [0.6; 3]);
    assert!(s.path.iter().all(|r| r.x == 0 && r.y == 0));
    assert_eq!(s.pixel, (0, 0));
}

#[test]
fn flat_sky_beats_brighter_speckle() {
    // left half: speckle with mean 0.8 and std 0.2; right half: flat 0.7
    let img = PlanarImage::from_fn(64, 64, 3, |x, y, _| {
        if x < 32 {
            if (x + y) % 2 == 0 {
                1.0
            } else {
                0.6
            }
        } else {
            0.7
        }
    });
    // left quadrants score 0.8 - 0.2 = 0.6 < 0.7
    let s = quad_tree_search(&img, &AirlightParams::default()).unwrap();
    assert!(s.path[1].x >= 32);
    assert_eq!(s.airlight.rgb, [0.7; 3]);
}

#[test]
fn image_smaller_than_min_block_scores_whole_image() {
    let img = common::random_image(10, 12, 3, 4);
    let s = quad_tree_search(&img, &AirlightParams::default()).unwrap();
    assert_eq!(s.path.len(), 1);
    let best = (0..12)
        .flat_map(|y| (0..10).map(move |x| (x, y)))
        .min_by(|a, b| {
            let d = |p: &(usize, usize)| img.pixel(p.0, p.1).iter().map(|v| (1.0 - v).powi(2)).sum::<f64>();
            d(a).partial_cmp(&d(b)).unwrap()
        })
        .unwrap();
    assert_eq!(s.pixel, best);
}

#[test]
fn sky_scene_airlight_is_close() {
    for seed in 0..5 {
        let scene = generate_sky_scene(96, 96, seed, None, None).unwrap();
        let base = decompose(&scene.hazy, &WgifParams::default()).unwrap().base;
        let a = estimate_airlight(&base, 16).unwrap();
        assert!(
            a.max_abs_diff(&scene.airlight) <= 0.05,
            "seed {seed}: {a} vs {}",
            scene.airlight
        );
    }
}

#[test]
fn debug_overlay_marks_path_and_pixel() {
    let img = PlanarImage::filled(32, 32, 3, 0.5);
    let s = quad_tree_search(&img, &AirlightParams::default()).unwrap();
    let out = draw_search_path(&img, &s);
    assert_eq!(out.pixel(31, 0), [1.0, 0.0, 0.0]);
    assert_eq!(out.pixel(s.pixel.0, s.pixel.1), [0.0, 1.0, 0.0]);
    assert_eq!(out.pixel(20, 20), [0.5; 3]);
}

#[test]
fn single_channel_is_a_shape_error() {
    let err = quad_tree_search(&PlanarImage::filled(8, 8, 1, 0.5), &AirlightParams::default()).unwrap_err();
    assert!(matches!(err, hazekit::Error::Shape(_)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn chosen_pixel_lies_in_final_block(w in 1usize..80, h in 1usize..80, seed in any::<u64>()) {
        let img = common::random_image(w, h, 3, seed);
        let s = quad_tree_search(&img, &AirlightParams::default()).unwrap();
        prop_assert!(s.final_block().contains(s.pixel.0, s.pixel.1));
        for pair in s.path.windows(2) {
            prop_assert!(pair[0].contains(pair[1].x, pair[1].y));
        }
        let again = quad_tree_search(&img, &AirlightParams::default()).unwrap();
        prop_assert_eq!(again, s);
    }
}
