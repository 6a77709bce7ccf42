//! Variable-selection and estimation-error metrics.

use ndarray::{ArrayView1, Zip};
use serde::{Deserialize, Serialize};

pub const DEFAULT_ZERO_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selection {
    pub tp: usize,
    pub fp: usize,
}

/// True and false positives of the selected set `{j : |beta_j| > zero_tol}`.
pub fn tp_fp(beta_hat: ArrayView1<f64>, true_support: &[usize], zero_tol: f64) -> Selection {
    let mut sel = Selection { tp: 0, fp: 0 };
    for (j, &b) in beta_hat.iter().enumerate() {
        if b.abs() > zero_tol {
            if true_support.contains(&j) {
                sel.tp += 1;
            } else {
                sel.fp += 1;
            }
        }
    }
    sel
}

fn err_norms(a: ArrayView1<f64>, b: ArrayView1<f64>) -> (f64, f64) {
    let (l1, l2) = Zip::from(a).and(b).fold((0.0, 0.0), |(l1, l2), &x, &y| {
        let d = x - y;
        (l1 + d.abs(), l2 + d * d)
    });
    (l1, l2.sqrt())
}

/// `||beta_hat - beta*||_p / ||beta_lasso - beta*||_p` for `p = 1, 2`.
///
/// Returns `None` when the reference error is zero in either norm.
pub fn relative_errors(
    beta_hat: ArrayView1<f64>,
    beta_lasso: ArrayView1<f64>,
    beta_star: ArrayView1<f64>,
) -> Option<(f64, f64)> {
    let (h1, h2) = err_norms(beta_hat, beta_star);
    let (r1, r2) = err_norms(beta_lasso, beta_star);
    if r1 > 0.0 && r2 > 0.0 {
        Some((h1 / r1, h2 / r2))
    } else {
        None
    }
}

/// Trapezoidal area under an ROC curve. Points are sorted by FPR (then TPR)
/// and the curve is closed with `(0, 0)` and `(1, 1)`.
pub fn auc(points: &[(f64, f64)]) -> f64 {
    let mut pts: Vec<(f64, f64)> = Vec::with_capacity(points.len() + 2);
    pts.push((0.0, 0.0));
    pts.extend_from_slice(points);
    pts.push((1.0, 1.0));
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0)
        .sum::<f64>()
        .clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::{array, Array1};
    use proptest::prelude::*;

    #[test]
    fn selection_examples() {
        let mut beta = Array1::zeros(10);
        for j in [0, 1, 2, 6] {
            beta[j] = 1.0;
        }
        let s: Vec<usize> = (0..6).collect();
        assert_eq!(tp_fp(beta.view(), &s, 1e-8), Selection { tp: 3, fp: 1 });
        assert_eq!(
            tp_fp(Array1::zeros(10).view(), &s, 1e-8),
            Selection { tp: 0, fp: 0 }
        );
        let star = array![4.0, 3.0, 2.0, -2.0, -2.0, 2.0, 0.0, 0.0];
        assert_eq!(tp_fp(star.view(), &s, 1e-8), Selection { tp: 6, fp: 0 });
        // dust below the tolerance is not selected
        assert_eq!(
            tp_fp(array![1e-12, 1.0].view(), &[1], 1e-8),
            Selection { tp: 1, fp: 0 }
        );
    }

    #[test]
    fn relative_error_examples() {
        let star = array![1.0, 0.0, -1.0];
        let lasso = array![0.5, 0.2, -0.4];
        assert_eq!(
            relative_errors(lasso.view(), lasso.view(), star.view()),
            Some((1.0, 1.0))
        );
        assert_eq!(
            relative_errors(star.view(), lasso.view(), star.view()),
            Some((0.0, 0.0))
        );
        let half = &star + &((&lasso - &star) * 0.5);
        let (re1, re2) = relative_errors(half.view(), lasso.view(), star.view()).unwrap();
        assert_abs_diff_eq!(re1, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(re2, 0.5, epsilon = 1e-15);
        assert_eq!(
            relative_errors(lasso.view(), star.view(), star.view()),
            None
        );
    }

    #[test]
    fn auc_examples() {
        assert_abs_diff_eq!(auc(&[(0.0, 0.0), (1.0, 1.0)]), 0.5);
        assert_abs_diff_eq!(auc(&[(0.0, 1.0), (1.0, 1.0)]), 1.0);
        assert_abs_diff_eq!(
            auc(&[(0.0, 0.0), (0.5, 0.8), (1.0, 1.0)]),
            0.65,
            epsilon = 1e-15
        );
    }

    proptest! {
        #[test]
        fn auc_permutation_invariant(pts in prop::collection::vec((0.0..1.0f64, 0.0..1.0f64), 2..12), rot in 0usize..12) {
            let a = auc(&pts);
            let mut shuffled = pts.clone();
            let k = rot % shuffled.len();
            shuffled.rotate_left(k);
            shuffled.reverse();
            prop_assert!((a - auc(&shuffled)).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&a));
        }

        #[test]
        fn selection_counts_add_up(beta in prop::collection::vec(prop_oneof![Just(0.0), -2.0..2.0f64], 1..20)) {
            let beta = Array1::from(beta);
            let s = [0usize, 3, 5];
            let sel = tp_fp(beta.view(), &s, 1e-8);
            let selected = beta.iter().filter(|b| b.abs() > 1e-8).count();
            prop_assert_eq!(sel.tp + sel.fp, selected);
        }

        #[test]
        fn relative_errors_scale_free(
            e_hat in prop::collection::vec(-1.0..1.0f64, 4),
            e_ref in prop::collection::vec(0.1..1.0f64, 4),
            c in 0.01..100.0f64,
        ) {
            let star = Array1::zeros(4);
            let (h, r) = (Array1::from(e_hat), Array1::from(e_ref));
            let a = relative_errors(h.view(), r.view(), star.view()).unwrap();
            let b = relative_errors((&h * c).view(), (&r * c).view(), star.view()).unwrap();
            prop_assert!((a.0 - b.0).abs() <= 1e-12 * (1.0 + a.0));
            prop_assert!((a.1 - b.1).abs() <= 1e-12 * (1.0 + a.1));
        }
    }
}
