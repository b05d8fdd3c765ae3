mod common;

use std::f64::consts::FRAC_PI_2;

use hazekit::image::PlanarImage;
use hazekit::losses::*;
use proptest::prelude::*;

fn naive_blur(img: &PlanarImage, k: &GaussianKernel) -> PlanarImage {
    let (w, h) = (img.width() as isize, img.height() as isize);
    let r = k.radius as isize;
    PlanarImage::from_fn(img.width(), img.height(), img.channels(), |x, y, c| {
        let mut s = 0.0;
        for l in -r..=r {
            for kx in -r..=r {
                let xx = (x as isize + kx).clamp(0, w - 1) as usize;
                let yy = (y as isize + l).clamp(0, h - 1) as usize;
                s += k.at(kx, l) * img.get(xx, yy, c);
            }
        }
        s
    })
}

fn angle(u: [f64; 3], v: [f64; 3]) -> f64 {
    let dot: f64 = (0..3).map(|i| u[i] * v[i]).sum();
    let nu = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    (dot / (nu * nv)).clamp(-1.0, 1.0).acos()
}

#[test]
fn default_kernel_sums_close_to_one() {
    let k = GaussianKernel::default();
    let direct: f64 = (-9..=9)
        .flat_map(|l| (-9..=9).map(move |x| (x, l)))
        .map(|(x, l)| k.at(x, l))
        .sum();
    assert!((k.sum() - direct).abs() < 1e-12);
    // 0.053 * 2 pi * 3
    assert!((k.sum() - 0.053 * 6.0 * std::f64::consts::PI).abs() < 1e-6);
    assert!((k.sum() - 1.0).abs() < 2e-3);
}

#[test]
fn kernel_is_separable() {
    let k = GaussianKernel {
        mu_x: 0.5,
        mu_y: -1.0,
        sigma_x: 2.0,
        sigma_y: 5.0,
        ..Default::default()
    };
    let (row, col) = k.factors();
    for l in 0..19 {
        for x in 0..19 {
            let v = k.at(x as isize - 9, l as isize - 9);
            assert!((row[x] * col[l] - v).abs() < 1e-15 * v.max(1e-300).max(1.0));
        }
    }
}

#[test]
fn blur_matches_direct_correlation() {
    let img = common::random_image(23, 17, 3, 4);
    for k in [
        GaussianKernel::default(),
        GaussianKernel {
            mu_x: 1.0,
            sigma_y: 1.0,
            radius: 3,
            ..Default::default()
        },
    ] {
        let fast = gaussian_blur(&img, &k);
        assert!(common::max_abs_diff(fast.data(), naive_blur(&img, &k).data()) < 1e-12);
    }
}

#[test]
fn impulse_response_is_the_kernel() {
    let k = GaussianKernel::default();
    let mut img = PlanarImage::filled(41, 41, 1, 0.0);
    img.set(20, 20, 0, 1.0);
    let out = gaussian_blur(&img, &k);
    for y in 0..41isize {
        for x in 0..41isize {
            let (dx, dy) = (20 - x, 20 - y);
            let expect = if dx.abs() <= 9 && dy.abs() <= 9 { k.at(dx, dy) } else { 0.0 };
            assert!((out.get(x as usize, y as usize, 0) - expect).abs() < 1e-15);
        }
    }
}

#[test]
fn orthogonal_colours_give_right_angles() {
    let red = PlanarImage::from_fn(4, 4, 3, |_, _, c| if c == 0 { 0.7 } else { 0.0 });
    let green = PlanarImage::from_fn(4, 4, 3, |_, _, c| if c == 1 { 0.4 } else { 0.0 });
    let loss = color_loss(&red, &green, &GaussianKernel::default()).unwrap();
    assert!((loss.value - 16.0 * FRAC_PI_2).abs() < 1e-12);
}

#[test]
fn colour_loss_matches_blurred_angle_oracle() {
    let k = GaussianKernel::default();
    let p = common::random_image(14, 12, 3, 1);
    let t = common::random_image(14, 12, 3, 2);
    let (bp, bt) = (naive_blur(&p, &k), naive_blur(&t, &k));
    let expect: f64 = (0..12)
        .flat_map(|y| (0..14).map(move |x| (x, y)))
        .map(|(x, y)| angle(bp.pixel(x, y), bt.pixel(x, y)))
        .sum();
    let got = color_loss(&p, &t, &k).unwrap().value;
    assert!((got - expect).abs() < 1e-9 * expect.max(1.0));
}

#[test]
fn restoration_loss_value_and_gradient() {
    let p = PlanarImage::from_data(2, 1, 1, vec![0.2, 0.9]).unwrap();
    let t = PlanarImage::from_data(2, 1, 1, vec![0.5, 0.4]).unwrap();
    let l = restoration_loss(&p, &t).unwrap();
    assert!((l.value - (0.09 + 0.25)).abs() < 1e-15);
    assert!(common::max_abs_diff(&l.grad, &[-0.6, 1.0]) < 1e-15);
}

#[test]
fn colour_gradient_matches_termwise_difference() {
    let k = GaussianKernel {
        radius: 3,
        ..Default::default()
    };
    let mut p = common::random_image(9, 8, 3, 11).map(|v| 0.1 + 0.8 * v);
    let t = common::random_image(9, 8, 3, 12);
    let analytic = color_loss(&p, &t, &k).unwrap().grad;
    let h = 1e-6;
    for i in (0..p.data().len()).step_by(7) {
        let orig = p.data()[i];
        p.data_mut()[i] = orig + h;
        let plus = color_loss(&p, &t, &k).unwrap().terms;
        p.data_mut()[i] = orig - h;
        let minus = color_loss(&p, &t, &k).unwrap().terms;
        p.data_mut()[i] = orig;
        let num = common::termwise_difference(&plus, &minus) / (2.0 * h);
        assert!(common::rel_err(analytic[i], num, 1e-8) < 1e-6, "sample {i}");
    }
}

#[test]
fn total_loss_combines_terms() {
    let k = GaussianKernel::default();
    let p = common::random_image(10, 10, 3, 5);
    let t = common::random_image(10, 10, 3, 6);
    let r = restoration_loss(&p, &t).unwrap();
    let c = color_loss(&p, &t, &k).unwrap();
    let total = total_loss(&p, &t, 0.25, &k).unwrap();
    assert!((total.value - (r.value + 0.25 * c.value)).abs() < 1e-12);
    let g: Vec<f64> = r.grad.iter().zip(&c.grad).map(|(a, b)| a + 0.25 * b).collect();
    assert!(common::max_abs_diff(&total.grad, &g) < 1e-12);
    assert_eq!(total.terms.len(), 300 + 100);
    assert!(total_loss(&p, &t, -1.0, &k).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn blur_is_linear(s1 in any::<u64>(), s2 in any::<u64>(), a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let k = GaussianKernel::default();
        let x = common::random_image(12, 9, 3, s1);
        let y = common::random_image(12, 9, 3, s2);
        let mix = x.zip_map(&y, |p, q| a * p + b * q).unwrap();
        let lhs = gaussian_blur(&mix, &k);
        let (bx, by) = (gaussian_blur(&x, &k), gaussian_blur(&y, &k));
        let rhs = bx.zip_map(&by, |p, q| a * p + b * q).unwrap();
        prop_assert!(common::max_abs_diff(lhs.data(), rhs.data()) < 1e-12);
    }

    #[test]
    fn colour_loss_ignores_brightness(seed in any::<u64>(), s in 0.2f64..3.0) {
        let k = GaussianKernel::default();
        let p = common::random_image(8, 8, 3, seed).map(|v| v + 0.05);
        let scaled = p.map(|v| v * s);
        let l = color_loss(&scaled, &p, &k).unwrap();
        prop_assert!(l.value.abs() < 1e-6);
        let swapped = color_loss(&p, &scaled, &k).unwrap().value;
        prop_assert!(swapped.abs() < 1e-6);
    }
}

#[test]
fn constant_image_blurs_to_scaled_constant() {
    let k = GaussianKernel::default();
    let out = gaussian_blur(&PlanarImage::filled(30, 20, 3, 0.6), &k);
    assert!(out.data().iter().all(|v| (v - 0.6 * k.sum()).abs() < 1e-12));
}

#[test]
fn zero_colour_weight_is_restoration_only() {
    let k = GaussianKernel::default();
    let p = common::random_image(8, 8, 3, 31);
    let t = common::random_image(8, 8, 3, 32);
    let total = total_loss(&p, &t, 0.0, &k).unwrap();
    let r = restoration_loss(&p, &t).unwrap();
    assert_eq!(total.value, r.value);
    assert_eq!(total.grad, r.grad);
    let same = total_loss(&p, &p, 0.01, &k).unwrap();
    assert!(same.value.abs() < 1e-6);
}

#[test]
fn black_pixels_contribute_nothing() {
    let k = GaussianKernel {
        radius: 1,
        ..Default::default()
    };
    let black = PlanarImage::filled(6, 6, 3, 0.0);
    let t = common::random_image(6, 6, 3, 4);
    let l = color_loss(&black, &t, &k).unwrap();
    assert_eq!(l.value, 0.0);
    assert!(l.grad.iter().all(|&g| g == 0.0));
}

#[test]
fn total_gradient_matches_finite_difference_on_random_pair() {
    let k = GaussianKernel::default();
    let mut p = common::random_image(8, 8, 3, 41).map(|v| 0.05 + 0.9 * v);
    let t = common::random_image(8, 8, 3, 42);
    let analytic = total_loss(&p, &t, 0.01, &k).unwrap().grad;
    let h = 1e-6;
    for i in 0..p.data().len() {
        let orig = p.data()[i];
        p.data_mut()[i] = orig + h;
        let plus = total_loss(&p, &t, 0.01, &k).unwrap().terms;
        p.data_mut()[i] = orig - h;
        let minus = total_loss(&p, &t, 0.01, &k).unwrap().terms;
        p.data_mut()[i] = orig;
        let num = common::termwise_difference(&plus, &minus) / (2.0 * h);
        assert!(
            common::rel_err(analytic[i], num, 1e-8) < 1e-5,
            "sample {i}: {} vs {num}",
            analytic[i]
        );
    }
}
