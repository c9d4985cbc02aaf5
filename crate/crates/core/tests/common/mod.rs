//! Shared test support: a dense two-phase simplex used as an independent
//! oracle for the production ranking solver. Deliberately generic and slow;
//! never used outside tests.

#![allow(dead_code)]

/// Outcome of the oracle LP.
#[derive(Debug, Clone)]
pub enum LpOutcome {
    Optimal { objective: f64, x: Vec<f64> },
    Infeasible,
}

const PIVOT_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-7;

/// Maximizes `c . x` subject to `a[i] . x (= or <=) b[i]`, `x >= 0`, with
/// `b[i] >= 0`. Two-phase dense tableau simplex with Bland's rule.
pub fn simplex_max(
    a: &[Vec<f64>],
    b: &[f64],
    c: &[f64],
    is_eq: &[bool],
) -> Option<(f64, Vec<f64>)> {
    let rows = a.len();
    let n = c.len();
    assert!(b.iter().all(|&x| x >= 0.0), "rhs must be non-negative");

    let slacks: Vec<usize> = (0..rows).filter(|&i| !is_eq[i]).collect();
    let artificials: Vec<usize> = (0..rows).filter(|&i| is_eq[i]).collect();
    let n_slack = slacks.len();
    let n_art = artificials.len();
    let total = n + n_slack + n_art;

    // Tableau rows: [real vars | slacks | artificials | rhs].
    let mut tab = vec![vec![0.0; total + 1]; rows];
    let mut basis = vec![usize::MAX; rows];
    for i in 0..rows {
        tab[i][..n].copy_from_slice(&a[i]);
        tab[i][total] = b[i];
    }
    for (k, &i) in slacks.iter().enumerate() {
        tab[i][n + k] = 1.0;
        basis[i] = n + k;
    }
    for (k, &i) in artificials.iter().enumerate() {
        tab[i][n + n_slack + k] = 1.0;
        basis[i] = n + n_slack + k;
    }

    let run_phase = |tab: &mut Vec<Vec<f64>>,
                     basis: &mut Vec<usize>,
                     obj: &[f64],
                     allowed: usize|
     -> bool {
        for _ in 0..10_000 {
            // Reduced costs under the current basis.
            let mut entering = None;
            for j in 0..allowed {
                if basis.contains(&j) {
                    continue;
                }
                let mut reduced = obj[j];
                for i in 0..tab.len() {
                    reduced -= obj[basis[i]] * tab[i][j];
                }
                if reduced > PIVOT_TOL {
                    entering = Some(j);
                    break; // Bland: smallest improving index.
                }
            }
            let Some(j) = entering else { return true };

            let mut leaving: Option<usize> = None;
            let mut best_ratio = f64::INFINITY;
            for i in 0..tab.len() {
                if tab[i][j] > PIVOT_TOL {
                    let ratio = tab[i][total] / tab[i][j];
                    let better = ratio < best_ratio - PIVOT_TOL
                        || (ratio < best_ratio + PIVOT_TOL
                            && leaving.is_none_or(|l| basis[i] < basis[l]));
                    if better {
                        best_ratio = ratio.min(best_ratio);
                        leaving = Some(i);
                    }
                }
            }
            let Some(i) = leaving else { return false }; // unbounded

            // Pivot on (i, j).
            let pivot = tab[i][j];
            for v in tab[i].iter_mut() {
                *v /= pivot;
            }
            let pivot_row = tab[i].clone();
            for (k, row) in tab.iter_mut().enumerate() {
                if k != i && row[j].abs() > 0.0 {
                    let factor = row[j];
                    for (cell, &p) in row.iter_mut().zip(&pivot_row) {
                        *cell -= factor * p;
                    }
                }
            }
            basis[i] = j;
        }
        panic!("simplex did not terminate within the pivot budget");
    };

    // Phase 1: drive artificials to zero.
    if n_art > 0 {
        let mut phase1 = vec![0.0; total];
        for k in 0..n_art {
            phase1[n + n_slack + k] = -1.0;
        }
        if !run_phase(&mut tab, &mut basis, &phase1, total) {
            return None;
        }
        let infeasibility: f64 = (0..rows)
            .filter(|&i| basis[i] >= n + n_slack)
            .map(|i| tab[i][total])
            .sum();
        if infeasibility > FEAS_TOL {
            return None;
        }
        // Pivot lingering zero-level artificials out where possible.
        for i in 0..rows {
            if basis[i] >= n + n_slack {
                if let Some(j) = (0..n + n_slack).find(|&j| tab[i][j].abs() > FEAS_TOL) {
                    let pivot = tab[i][j];
                    for v in tab[i].iter_mut() {
                        *v /= pivot;
                    }
                    let pivot_row = tab[i].clone();
                    for (k, row) in tab.iter_mut().enumerate() {
                        if k != i && row[j].abs() > 0.0 {
                            let factor = row[j];
                            for (cell, &p) in row.iter_mut().zip(&pivot_row) {
                                *cell -= factor * p;
                            }
                        }
                    }
                    basis[i] = j;
                }
            }
        }
    }

    // Phase 2: the real objective, artificial columns barred from entering.
    let mut phase2 = vec![0.0; total];
    phase2[..n].copy_from_slice(c);
    if !run_phase(&mut tab, &mut basis, &phase2, n + n_slack) {
        return None;
    }

    let mut x = vec![0.0; n];
    for i in 0..rows {
        if basis[i] < n {
            x[basis[i]] = tab[i][total];
        }
    }
    let objective = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
    Some((objective, x))
}

/// Oracle for the per-query ranking LP: maximize `u' P v` over column sums
/// = 1, row sums <= 1, entries >= 0, optionally with one parity equality
/// `sum of coeffs[d] * v[r] * P(d, r) = 0`.
pub fn solve_ranking_lp(utilities: &[f64], v: &[f64], fairness: Option<&[f64]>) -> LpOutcome {
    let d = utilities.len();
    let m = v.len();
    let nv = d * m;
    let mut a = Vec::new();
    let mut b = Vec::new();
    let mut is_eq = Vec::new();

    // Each slot filled exactly once.
    for r in 0..m {
        let mut row = vec![0.0; nv];
        for dd in 0..d {
            row[r * d + dd] = 1.0;
        }
        a.push(row);
        b.push(1.0);
        is_eq.push(true);
    }
    // Parity equality.
    if let Some(coeffs) = fairness {
        let mut row = vec![0.0; nv];
        for r in 0..m {
            for dd in 0..d {
                row[r * d + dd] = coeffs[dd] * v[r];
            }
        }
        a.push(row);
        b.push(0.0);
        is_eq.push(true);
    }
    // Each candidate in at most one slot.
    for dd in 0..d {
        let mut row = vec![0.0; nv];
        for r in 0..m {
            row[r * d + dd] = 1.0;
        }
        a.push(row);
        b.push(1.0);
        is_eq.push(false);
    }

    let mut c = vec![0.0; nv];
    for r in 0..m {
        for dd in 0..d {
            c[r * d + dd] = utilities[dd] * v[r];
        }
    }

    match simplex_max(&a, &b, &c, &is_eq) {
        Some((objective, x)) => LpOutcome::Optimal { objective, x },
        None => LpOutcome::Infeasible,
    }
}

/// The parity equality has `b = 0` with possibly negative coefficients; the
/// simplex above requires `b >= 0`, which holds. Negative coefficient rows
/// are fine: only the rhs must be non-negative.
#[cfg(test)]
mod self_checks {
    use super::*;

    #[test]
    fn maximizes_a_simple_assignment() {
        // max x0 + 2 x1 s.t. x0 + x1 <= 1, x0, x1 >= 0.
        let (obj, x) = simplex_max(
            &[vec![1.0, 1.0]],
            &[1.0],
            &[1.0, 2.0],
            &[false],
        )
        .unwrap();
        assert!((obj - 2.0).abs() < 1e-9);
        assert!((x[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn detects_infeasibility() {
        // x0 = 2 with x0 <= 1 is infeasible.
        let res = simplex_max(
            &[vec![1.0], vec![1.0]],
            &[2.0, 1.0],
            &[1.0],
            &[true, false],
        );
        assert!(res.is_none());
    }
}
