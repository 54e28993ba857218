//! Simplex against brute-force vertex enumeration on small LPs.

use nalgebra::{DMatrix, DVector};
use pmsm_mpc::lp::{simplex_solve, LinearProgramStd, LpStatus, SimplexConfig};
use proptest::prelude::*;

/// Minimizes `c' x` over `A x <= b, x >= 0` by visiting every vertex.
/// Returns `None` when no vertex is feasible.
fn enumerate_vertices(c: &[f64], a: &DMatrix<f64>, b: &[f64]) -> Option<f64> {
    let (m, n) = a.shape();
    // all m + n inequalities as rows of `rows x <= rhs`
    let mut rows = DMatrix::zeros(m + n, n);
    let mut rhs = DVector::zeros(m + n);
    rows.view_mut((0, 0), (m, n)).copy_from(a);
    rhs.rows_mut(0, m).copy_from_slice(b);
    for j in 0..n {
        rows[(m + j, j)] = -1.0;
    }
    let mut best: Option<f64> = None;
    for mask in 0u32..(1 << (m + n)) {
        if mask.count_ones() as usize != n {
            continue;
        }
        let pick: Vec<usize> = (0..m + n).filter(|i| mask & (1 << i) != 0).collect();
        let sub = DMatrix::from_fn(n, n, |r, k| rows[(pick[r], k)]);
        let sub_rhs = DVector::from_iterator(n, pick.iter().map(|&i| rhs[i]));
        let Some(x) = sub.lu().solve(&sub_rhs) else { continue };
        if (&rows * &x - &rhs).iter().all(|v| *v <= 1e-9) {
            let val: f64 = c.iter().zip(x.iter()).map(|(ci, xi)| ci * xi).sum();
            best = Some(best.map_or(val, |b: f64| b.min(val)));
        }
    }
    best
}

fn lp_case() -> impl Strategy<Value = (Vec<f64>, DMatrix<f64>, Vec<f64>)> {
    (1usize..=5, 1usize..=6).prop_flat_map(|(n, m)| {
        (
            prop::collection::vec(-5.0..5.0f64, n),
            prop::collection::vec(-3.0..3.0f64, m * n),
            prop::collection::vec(-2.0..6.0f64, m),
        )
            .prop_map(move |(c, a, b)| {
                // a bounding row keeps every instance bounded
                let mut full = DMatrix::from_row_slice(m, n, &a).insert_row(m, 1.0);
                full.row_mut(m).fill(1.0);
                let mut rhs = b;
                rhs.push(10.0);
                (c, full, rhs)
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn simplex_matches_vertex_enumeration((c, a, b) in lp_case()) {
        let lp = LinearProgramStd::from_inequalities(&c, &a, &b);
        let sol = simplex_solve(&lp, SimplexConfig::default());
        match enumerate_vertices(&c, &a, &b) {
            Some(best) => {
                prop_assert_eq!(sol.status, LpStatus::Optimal);
                prop_assert!((sol.objective - best).abs() <= 1e-7 * (1.0 + best.abs()),
                    "simplex {} vs enumeration {}", sol.objective, best);
                let x = DVector::from_column_slice(&sol.x[..c.len()]);
                prop_assert!((&a * &x).iter().zip(&b).all(|(l, r)| *l <= r + 1e-7));
                prop_assert!(x.iter().all(|v| *v >= -1e-9));
            }
            None => prop_assert_eq!(sol.status, LpStatus::Infeasible),
        }
    }
}

#[test]
fn unbounded_direction_is_detected() {
    let a = DMatrix::from_row_slice(1, 2, &[1.0, -1.0]);
    let lp = LinearProgramStd::from_inequalities(&[-1.0, -1.0], &a, &[1.0]);
    assert_eq!(simplex_solve(&lp, SimplexConfig::default()).status, LpStatus::Unbounded);
}
