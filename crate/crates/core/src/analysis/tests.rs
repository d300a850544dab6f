#![allow(clippy::needless_range_loop)]

use proptest::prelude::*;
use rand::Rng;

use super::*;
use crate::rng::{substream, Stream};
use crate::task::Task;

fn grid(run: &str, layers: usize, heads: usize, values: Vec<f64>) -> UtilizationGrid {
    UtilizationGrid {
        run: run.into(),
        tasks: vec![Task::Pos],
        layers,
        heads,
        values,
    }
}

#[test]
fn channel_examples() {
    assert_eq!(channel(1.0), 0);
    assert_eq!(channel(0.0), 255);
    assert_eq!(channel(0.5), 128);
}

#[test]
fn rgb_pixels_follow_runs() {
    // Hand-set grids may hold the closed-interval endpoints.
    let b = RunBundle {
        grids: [
            grid("a", 1, 2, vec![1.0, 0.5]),
            grid("b", 1, 2, vec![1.0, 0.2]),
            grid("c", 1, 2, vec![1.0, 0.8]),
        ],
    };
    let img = rgb_encode(&b);
    assert_eq!((img.width, img.height), (2, 1));
    assert_eq!(img.pixel(0, 0), [0, 0, 0]);
    // 127.5 → 128, 204 exactly, 51 exactly.
    assert_eq!(img.pixel(1, 0), [128, 204, 51]);
    assert!(RunBundle::new(vec![grid("a", 1, 2, vec![0.5, 0.5])]).is_err());
    assert!(RunBundle::new(vec![
        grid("a", 1, 2, vec![0.5, 0.5]),
        grid("b", 2, 1, vec![0.5, 0.5]),
        grid("c", 1, 2, vec![0.5, 0.5])
    ])
    .is_err());
}

#[test]
fn overlay_is_mean() {
    let gs: Vec<UtilizationGrid> = (0..15).map(|i| grid(&i.to_string(), 1, 1, vec![0.2])).collect();
    let h = gray_overlay(&gs, 5, 3).unwrap();
    assert!((h.values[0] - 0.2).abs() < 1e-15);
    assert!(gray_overlay(&gs[..14], 5, 3).is_err());
    assert!(gray_overlay(&gs[..4], 2, 2).is_ok());
    let vals: Vec<f64> = (1..=15).map(|i| i as f64 / 16.0).collect();
    let gs: Vec<UtilizationGrid> = vals.iter().map(|&v| grid("r", 1, 1, vec![v])).collect();
    let h = gray_overlay(&gs, 5, 3).unwrap();
    // (1 + … + 15) / 16 / 15 = 0.5
    assert_eq!(h.values[0], 0.5);
    assert_eq!(h.to_image().pixels, vec![[128, 128, 128]]);
}

#[test]
fn ppm_layout() {
    let img = Image {
        width: 2,
        height: 1,
        pixels: vec![[0, 0, 0], [255, 255, 255]],
    };
    let mut want = b"P6\n2 1\n255\n".to_vec();
    want.extend_from_slice(&[0, 0, 0, 255, 255, 255]);
    assert_eq!(ppm_bytes(&img, 1).unwrap(), want);
    let big = ppm_bytes(&img, 2).unwrap();
    let mut want2 = b"P6\n4 2\n255\n".to_vec();
    for _ in 0..2 {
        want2.extend_from_slice(&[0, 0, 0, 0, 0, 0, 255, 255, 255, 255, 255, 255]);
    }
    assert_eq!(big, want2);
    assert!(ppm_bytes(&img, 0).is_err());
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("x.ppm");
    write_ppm(&img, &p, 3).unwrap();
    let first = std::fs::read(&p).unwrap();
    write_ppm(&img, &p, 3).unwrap();
    assert_eq!(std::fs::read(&p).unwrap(), first);
}

#[test]
fn regression_exact_fits() {
    let x1 = [0.1, 0.5, 0.3, 0.9, 0.7, 0.2];
    let x2 = [0.4, 0.1, 0.8, 0.3, 0.6, 0.5];
    assert!((adjusted_r2(&x1, &x2, &x1).unwrap() - 1.0).abs() < 1e-12);
    let y: Vec<f64> = x1.iter().zip(&x2).map(|(a, b)| 3.0 * a - 2.0 * b + 0.1).collect();
    assert!((adjusted_r2(&x1, &x2, &y).unwrap() - 1.0).abs() < 1e-12);
    assert!(adjusted_r2(&x1, &x1, &y).is_err(), "collinear predictors");
    assert!(adjusted_r2(&x1[..3], &x2[..3], &y[..3]).is_err());
}

/// Solves the 3×3 normal equations by Gaussian elimination.
fn normal_equations_r2(x1: &[f64], x2: &[f64], y: &[f64]) -> f64 {
    let n = y.len();
    let cols = [vec![1.0; n], x1.to_vec(), x2.to_vec()];
    let mut m = [[0.0f64; 4]; 3];
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = (0..n).map(|k| cols[i][k] * cols[j][k]).sum();
        }
        m[i][3] = (0..n).map(|k| cols[i][k] * y[k]).sum();
    }
    for p in 0..3 {
        let piv = (p..3).max_by(|&a, &b| m[a][p].abs().total_cmp(&m[b][p].abs())).unwrap();
        m.swap(p, piv);
        for r in 0..3 {
            if r != p {
                let f = m[r][p] / m[p][p];
                for c in p..4 {
                    m[r][c] -= f * m[p][c];
                }
            }
        }
    }
    let beta: Vec<f64> = (0..3).map(|i| m[i][3] / m[i][i]).collect();
    let ybar = y.iter().sum::<f64>() / n as f64;
    let (mut ss_res, mut ss_tot) = (0.0, 0.0);
    for k in 0..n {
        let fit = beta[0] + beta[1] * x1[k] + beta[2] * x2[k];
        ss_res += (y[k] - fit).powi(2);
        ss_tot += (y[k] - ybar).powi(2);
    }
    let r2 = 1.0 - ss_res / ss_tot;
    1.0 - (1.0 - r2) * (n as f64 - 1.0) / (n as f64 - 3.0)
}

#[test]
fn regression_matches_normal_equations() {
    let mut rng = substream(144, Stream::Data);
    let v = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<f64> { (0..144).map(|_| rng.random::<f64>()).collect() };
    let (a, b, c) = (v(&mut rng), v(&mut rng), v(&mut rng));
    let got = adjusted_r2(&a, &b, &c).unwrap();
    assert!((got - normal_equations_r2(&a, &b, &c)).abs() < 1e-10);
    assert!(got < r_squared(&a, &b, &c).unwrap());
}

#[test]
fn pearson_examples() {
    let x = [1.0, 2.0, 3.0];
    assert!((pearson(&x, &x).unwrap() - 1.0).abs() < 1e-15);
    assert!((pearson(&x, &[-1.0, -2.0, -3.0]).unwrap() + 1.0).abs() < 1e-15);
    let r = pearson(&x, &[1.0, 2.0, 4.0]).unwrap();
    assert!((r - 9.0 / (2.0 * 21f64.sqrt())).abs() < 1e-15);
    assert!((r - 0.98198).abs() < 1e-5);
    assert!(pearson(&x, &[2.0, 2.0, 2.0]).is_err());
    let t = pearson_table(&[
        ("a".into(), x.to_vec()),
        ("b".into(), vec![1.0, 2.0, 4.0]),
        ("c".into(), vec![3.0, 2.0, 1.0]),
    ])
    .unwrap();
    assert_eq!(t.lines().count(), 4);
    assert!(t.starts_with("model_a,model_b,pearson\na,b,0.98"));
}

proptest! {
    #[test]
    fn channel_is_monotone(a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(channel(lo) >= channel(hi));
    }

    #[test]
    fn pearson_affine(xs in proptest::collection::vec(-10.0f64..10.0, 3..20), seed in any::<u64>(), a in -5.0f64..5.0, b in -5.0f64..5.0) {
        prop_assume!(a.abs() > 0.1);
        let mut rng = substream(seed, Stream::Data);
        let ys: Vec<f64> = xs.iter().map(|_| rng.random::<f64>()).collect();
        let t: Vec<f64> = xs.iter().map(|x| a * x + b).collect();
        if let (Ok(r), Ok(s)) = (pearson(&xs, &ys), pearson(&t, &ys)) {
            prop_assert!((s - a.signum() * r).abs() < 1e-9);
        }
    }

    #[test]
    fn adjusted_below_plain(seed in any::<u64>(), n in 5usize..40) {
        let mut rng = substream(seed, Stream::Data);
        let mut v = || -> Vec<f64> { (0..n).map(|_| rng.random::<f64>()).collect() };
        let (a, b, c) = (v(), v(), v());
        if let (Ok(adj), Ok(r2)) = (adjusted_r2(&a, &b, &c), r_squared(&a, &b, &c)) {
            prop_assert!(adj <= 1.0 + 1e-12);
            if r2 < 1.0 {
                prop_assert!(adj <= r2);
            }
        }
    }

    #[test]
    fn overlay_ignores_order(vals in proptest::collection::vec(0.01f64..0.99, 15)) {
        let gs: Vec<UtilizationGrid> = vals.iter().map(|&v| grid("r", 1, 1, vec![v])).collect();
        let mut rev = gs.clone();
        rev.reverse();
        let (a, b) = (gray_overlay(&gs, 5, 3).unwrap(), gray_overlay(&rev, 5, 3).unwrap());
        prop_assert!((a.values[0] - b.values[0]).abs() < 1e-12);
    }
}
