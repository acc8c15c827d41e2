mod common;

use hydra_core::loss::{delta_g, gradient, init_residual, loss_value, m_diag};
use hydra_core::LossKind;
use rand::Rng;

use common::*;

/// Per-example losses summed row by row, straight from `x`.
fn direct_loss(a: &nalgebra::DMatrix<f64>, x: &[f64], y: &[f64], kind: LossKind) -> f64 {
    let xv = nalgebra::DVector::from_column_slice(x);
    let ax = a * xv;
    (0..y.len())
        .map(|j| {
            let (yj, m) = (y[j], ax[j]);
            match kind {
                LossKind::SquareLoss => 0.5 * (yj - m) * (yj - m),
                LossKind::LogisticLoss => (1.0 + (-yj * m).exp()).ln(),
                LossKind::SquareHingeLoss => 0.5 * (1.0 - yj * m).max(0.0).powi(2),
            }
        })
        .sum()
}

#[test]
fn loss_value_matches_direct_evaluation() {
    let mut rng = rng(21);
    for kind in LossKind::ALL {
        for _ in 0..20 {
            let n = rng.random_range(2..=30);
            let d = rng.random_range(1..=30);
            let a = random_sparse(&mut rng, n, d, 0.3);
            let y = random_labels(&mut rng, n, kind);
            let x: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            let g = init_residual(&a, &x, &y, kind).unwrap();
            let got = loss_value(&g);
            let want = direct_loss(&to_dense(&a), &x, &y, kind);
            assert!(
                (got - want).abs() <= 1e-12 * want.abs().max(1.0),
                "{kind}: {got} vs {want}"
            );
        }
    }
}

#[test]
fn generator_residual_is_reproduced() {
    let inst = certified(2, 12, 4, 22);
    let g = init_residual(&inst.a, &inst.x_star, &inst.y, LossKind::SquareLoss).unwrap();
    assert!(max_abs_diff(g.values(), &inst.g_star) <= 1e-12);
}

#[test]
fn quadratic_upper_bound_holds() {
    let mut rng = rng(23);
    for kind in LossKind::ALL {
        for _ in 0..200 {
            let n = rng.random_range(2..=15);
            let d = rng.random_range(1..=10);
            let a = random_sparse(&mut rng, n, d, 0.4);
            let y = random_labels(&mut rng, n, kind);
            let x: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
            let h: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
            let g = init_residual(&a, &x, &y, kind).unwrap();
            let fx = loss_value(&g);
            let grad = gradient(&g, &a, &y);
            let xh: Vec<f64> = x.iter().zip(&h).map(|(a, b)| a + b).collect();
            let fxh = loss_value(&init_residual(&a, &xh, &y, kind).unwrap());

            let dense = to_dense(&a);
            let ah = &dense * nalgebra::DVector::from_column_slice(&h);
            let scale = if kind == LossKind::LogisticLoss {
                0.25
            } else {
                1.0
            };
            let quad = 0.5 * scale * ah.norm_squared();
            let lin: f64 = grad.iter().zip(&h).map(|(g, h)| g * h).sum();
            let slack = fx + lin + quad - fxh;
            assert!(slack >= -1e-10 * (1.0 + fxh.abs()), "{kind}: slack {slack}");
        }
    }
}

#[test]
fn residual_maintained_through_update_sequences() {
    let mut rng = rng(24);
    for kind in LossKind::ALL {
        let (n, d) = (25, 20);
        let a = random_sparse(&mut rng, n, d, 0.25);
        let y = random_labels(&mut rng, n, kind);
        let mut x = vec![0.0; d];
        let mut g = init_residual(&a, &x, &y, kind).unwrap();
        for _ in 0..2000 {
            let k = rng.random_range(1..=4);
            let updates: Vec<(usize, f64)> = (0..k)
                .map(|_| (rng.random_range(0..d), rng.random_range(-1.0..1.0)))
                .collect();
            for &(i, h) in &updates {
                x[i] += h;
            }
            g.apply(&delta_g(&updates, &a, &y, kind));
        }
        let fresh = init_residual(&a, &x, &y, kind).unwrap();
        let gmax = g.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(max_abs_diff(g.values(), fresh.values()) <= 1e-9 * (1.0 + gmax));
    }
}

#[test]
fn logistic_curvature_is_a_quarter_of_square() {
    let mut rng = rng(25);
    let a = random_sparse(&mut rng, 10, 6, 0.5);
    let sl = m_diag(&a, LossKind::SquareLoss).unwrap();
    let ll = m_diag(&a, LossKind::LogisticLoss).unwrap();
    let hl = m_diag(&a, LossKind::SquareHingeLoss).unwrap();
    for i in 0..6 {
        assert_eq!(ll[i], 0.25 * sl[i]);
        assert_eq!(hl[i], sl[i]);
    }
}
