//! Exact linear minimax fitting.
//!
//! `min_{a, b} max_i |y_i - <a, x_i> - b|` is a linear program.  We solve its
//! dual with a dense revised simplex: the dual has only `d + 2` rows, so the
//! basis stays tiny no matter how many samples there are, and the optimal
//! simplex multipliers are exactly the primal solution `(a, b, e)`.
//! Optimality is certified by dual feasibility (no positive reduced cost
//! beyond a scaled `1e-9` tolerance).

use crate::{Error, Result};

/// Result of an exact minimax fit of scalar data.
#[derive(Clone, Debug)]
pub struct MinimaxSolution {
    /// Linear coefficients of the fitted affine map.
    pub a: Vec<f64>,
    /// Constant term.
    pub b: f64,
    /// Optimal minimax error as reported by the program.
    pub error: f64,
    /// Largest reduced cost at termination; `<= tol` certifies optimality.
    pub dual_feasibility: f64,
}

/// Column of the dual program: for sample `i` the pair of columns
/// `u_i = (-x_i, -1, 1)` (cost `-y_i`) and `v_i = (x_i, 1, 1)` (cost `y_i`).
struct Columns<'a> {
    xs: &'a [Vec<f64>],
    ys: &'a [f64],
    rows: Vec<usize>,
    d: usize,
}

impl Columns<'_> {
    fn n(&self) -> usize {
        2 * self.xs.len()
    }

    fn cost(&self, j: usize) -> f64 {
        let i = j / 2;
        if j % 2 == 0 {
            -self.ys[i]
        } else {
            self.ys[i]
        }
    }

    /// Entry of column `j` in (kept) row position `r`.
    fn entry(&self, j: usize, r: usize) -> f64 {
        let i = j / 2;
        let sign = if j % 2 == 0 { -1.0 } else { 1.0 };
        let row = self.rows[r];
        if row < self.d {
            sign * self.xs[i][row]
        } else if row == self.d {
            sign
        } else {
            1.0
        }
    }
}

/// Solve `min_{a,b} max_i |y_i - <a, x_i> - b|` exactly.
pub fn minimax_affine(xs: &[Vec<f64>], ys: &[f64]) -> Result<MinimaxSolution> {
    if xs.is_empty() || xs.len() != ys.len() {
        return Err(Error::EmptySamples);
    }
    let d = xs[0].len();
    for x in xs {
        if x.len() != d {
            return Err(Error::DimMismatch { expected: d, got: x.len() });
        }
    }
    let scale = ys
        .iter()
        .chain(xs.iter().flatten())
        .fold(1.0f64, |m, &t| m.max(t.abs()));
    let tol = 1e-9 * scale;

    let mut cols = Columns { xs, ys, rows: (0..d + 2).collect(), d };
    let state = solve_dual(&mut cols, tol)?;

    // Simplex multipliers of the dual are the primal (a, b, e); fill the
    // coefficients of rows that were dropped as redundant with zero.
    let mut a = vec![0.0; d];
    let mut b = 0.0;
    let mut e = 0.0;
    for (pos, &row) in cols.rows.iter().enumerate() {
        let v = state.pi[pos];
        if row < d {
            a[row] = v;
        } else if row == d {
            b = v;
        } else {
            e = v;
        }
    }
    // Worst positive reduced cost over every column (certificate).
    let mut worst = f64::NEG_INFINITY;
    for j in 0..cols.n() {
        let mut rc = cols.cost(j);
        for r in 0..cols.rows.len() {
            rc -= state.pi[r] * cols.entry(j, r);
        }
        worst = worst.max(rc);
    }
    if worst > tol {
        return Err(Error::LpFailure(format!(
            "dual feasibility violated: reduced cost {worst} > {tol}"
        )));
    }
    Ok(MinimaxSolution { a, b, error: e, dual_feasibility: worst })
}

struct DualState {
    pi: Vec<f64>,
}

/// Two-phase revised simplex on the dual.  `cols.rows` may shrink if
/// redundant constraints are detected after phase 1.
fn solve_dual(cols: &mut Columns, tol: f64) -> Result<DualState> {
    let n = cols.n();
    let mut m = cols.rows.len();
    // rhs = (0, ..., 0, 1): only the normalization row is nonzero.
    // Basis starts as the artificial identity; ids >= n are artificials
    // (artificial id n + r sits in kept-row position r at start).
    let mut basis: Vec<usize> = (n..n + m).collect();
    let mut binv = identity(m);
    let mut xb = rhs(cols, m);

    // Phase 1: drive artificials to zero.
    run_simplex(cols, &mut basis, &mut binv, &mut xb, tol, true)?;
    let infeas: f64 = basis
        .iter()
        .zip(&xb)
        .filter(|(&id, _)| id >= n)
        .map(|(_, &v)| v)
        .sum();
    if infeas > 1e-8 {
        return Err(Error::LpFailure(format!("phase 1 infeasible residual {infeas}")));
    }
    // Pivot remaining artificials out of the basis, or drop their rows as
    // redundant.
    loop {
        let Some(pos) = basis.iter().position(|&id| id >= n) else { break };
        let mut pivoted = false;
        for j in 0..n {
            if basis.contains(&j) {
                continue;
            }
            let w = mat_vec_col(cols, &binv, j, m);
            if w[pos].abs() > 1e-7 {
                pivot(&mut basis, &mut binv, &mut xb, j, pos, &w, m);
                pivoted = true;
                break;
            }
        }
        if !pivoted {
            // Redundant row: remove it and the artificial occupying it.
            let base_row = find_artificial_row(cols, &basis, &binv, pos, m);
            cols.rows.remove(base_row);
            m -= 1;
            basis.remove(pos);
            xb = recompute_xb(cols, &basis, m, &mut binv)?;
        }
    }
    // Phase 2.
    run_simplex(cols, &mut basis, &mut binv, &mut xb, tol, false)?;
    // pi = c_B B^{-1}.
    let mut pi = vec![0.0; m];
    for (pos, &id) in basis.iter().enumerate() {
        let c = cols.cost(id);
        if c != 0.0 {
            for r in 0..m {
                pi[r] += c * binv[pos][r];
            }
        }
    }
    Ok(DualState { pi })
}

fn rhs(cols: &Columns, m: usize) -> Vec<f64> {
    let mut b = vec![0.0; m];
    for (pos, &row) in cols.rows.iter().enumerate() {
        if row == cols.d + 1 {
            b[pos] = 1.0;
        }
    }
    debug_assert_eq!(m, cols.rows.len());
    b
}

/// Identify which kept-row index the basic artificial at basis position
/// `pos` corresponds to: its column is an identity vector, so it is the row
/// where `B^{-1}`-transformed unit column concentrates.  Since artificial
/// id `n + r` was created for original kept position `r`, map through the
/// current `cols.rows`.
fn find_artificial_row(cols: &Columns, basis: &[usize], _binv: &[Vec<f64>], pos: usize, _m: usize) -> usize {
    let n = cols.n();
    let orig = basis[pos] - n; // original kept-row position at creation time
    // Rows are only ever removed, so the original position maps to the
    // current position of the same row id.
    let row_id = orig; // creation-time kept rows were 0..d+2 identically
    cols.rows.iter().position(|&r| r == row_id).unwrap_or(pos)
}

fn recompute_xb(cols: &Columns, basis: &[usize], m: usize, binv: &mut Vec<Vec<f64>>) -> Result<Vec<f64>> {
    *binv = invert_basis(cols, basis, m)?;
    let b = rhs(cols, m);
    let mut xb = vec![0.0; m];
    for pos in 0..m {
        xb[pos] = (0..m).map(|r| binv[pos][r] * b[r]).sum();
        if xb[pos] < 0.0 {
            xb[pos] = xb[pos].max(-1e-9); // clamp tiny negatives
        }
    }
    Ok(xb)
}

fn identity(m: usize) -> Vec<Vec<f64>> {
    (0..m)
        .map(|i| (0..m).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

/// Column of the basis matrix for basis id `id` (artificials are identity
/// columns in their creation row).
fn basis_column(cols: &Columns, id: usize, m: usize) -> Vec<f64> {
    let n = cols.n();
    let mut col = vec![0.0; m];
    if id < n {
        for r in 0..m {
            col[r] = cols.entry(id, r);
        }
    } else {
        let row_id = id - n;
        if let Some(pos) = cols.rows.iter().position(|&r| r == row_id) {
            col[pos] = 1.0;
        }
    }
    col
}

fn invert_basis(cols: &Columns, basis: &[usize], m: usize) -> Result<Vec<Vec<f64>>> {
    // Gauss-Jordan on [B | I]; binv[pos] is the row of B^{-1} that maps rhs
    // to the basic variable at position pos.
    let mut aug: Vec<Vec<f64>> = (0..m)
        .map(|r| {
            let mut row: Vec<f64> = basis.iter().map(|&id| basis_column(cols, id, m)[r]).collect();
            row.extend((0..m).map(|j| if j == r { 1.0 } else { 0.0 }));
            row
        })
        .collect();
    for c in 0..m {
        let piv = (c..m)
            .max_by(|&i, &j| aug[i][c].abs().partial_cmp(&aug[j][c].abs()).unwrap())
            .unwrap();
        if aug[piv][c].abs() < 1e-12 {
            return Err(Error::LpFailure("singular basis".into()));
        }
        aug.swap(c, piv);
        let p = aug[c][c];
        for v in aug[c].iter_mut() {
            *v /= p;
        }
        for r in 0..m {
            if r != c && aug[r][c] != 0.0 {
                let f = aug[r][c];
                for j in 0..2 * m {
                    aug[r][j] -= f * aug[c][j];
                }
            }
        }
    }
    // aug now holds [I | B^{-1}]; binv[pos][r] = (B^{-1})[pos][r].
    Ok((0..m).map(|pos| aug[pos][m..].to_vec()).collect())
}

/// `w = B^{-1} A_j`.
fn mat_vec_col(cols: &Columns, binv: &[Vec<f64>], j: usize, m: usize) -> Vec<f64> {
    (0..m)
        .map(|pos| (0..m).map(|r| binv[pos][r] * cols.entry(j, r)).sum())
        .collect()
}

fn pivot(
    basis: &mut [usize],
    binv: &mut [Vec<f64>],
    xb: &mut [f64],
    entering: usize,
    leave_pos: usize,
    w: &[f64],
    m: usize,
) {
    let piv = w[leave_pos];
    for r in 0..m {
        binv[leave_pos][r] /= piv;
    }
    let theta = xb[leave_pos] / piv;
    for pos in 0..m {
        if pos != leave_pos && w[pos] != 0.0 {
            let f = w[pos];
            for r in 0..m {
                binv[pos][r] -= f * binv[leave_pos][r];
            }
            xb[pos] -= f * theta;
            if xb[pos] < 0.0 && xb[pos] > -1e-11 {
                xb[pos] = 0.0;
            }
        }
    }
    xb[leave_pos] = theta;
    basis[leave_pos] = entering;
}

fn run_simplex(
    cols: &Columns,
    basis: &mut Vec<usize>,
    binv: &mut Vec<Vec<f64>>,
    xb: &mut Vec<f64>,
    tol: f64,
    phase1: bool,
) -> Result<()> {
    let n = cols.n();
    let m = basis.len();
    let max_iters = 200 * (m + cols.xs.len()) + 1000;
    let mut degenerate_run = 0usize;
    for iter in 0..max_iters {
        // pi = c_B B^{-1} with phase-appropriate costs.
        let mut pi = vec![0.0; m];
        for (pos, &id) in basis.iter().enumerate() {
            let c = if phase1 {
                if id >= n { -1.0 } else { 0.0 }
            } else {
                if id >= n { 0.0 } else { cols.cost(id) }
            };
            if c != 0.0 {
                for r in 0..m {
                    pi[r] += c * binv[pos][r];
                }
            }
        }
        let bland = degenerate_run > 4 * m + 8;
        let mut entering = None;
        let mut best_rc = tol.max(1e-12);
        for j in 0..n {
            if basis.contains(&j) {
                continue;
            }
            let cj = if phase1 { 0.0 } else { cols.cost(j) };
            let mut rc = cj;
            for r in 0..m {
                rc -= pi[r] * cols.entry(j, r);
            }
            if rc > best_rc {
                if bland {
                    entering = Some(j);
                    break;
                }
                best_rc = rc;
                entering = Some(j);
            }
        }
        let Some(j) = entering else { return Ok(()) };
        let w = mat_vec_col(cols, binv, j, m);
        let mut leave = None;
        let mut best_ratio = f64::INFINITY;
        for pos in 0..m {
            if w[pos] > 1e-11 {
                let ratio = xb[pos].max(0.0) / w[pos];
                let better = ratio < best_ratio - 1e-15
                    || (bland
                        && (ratio - best_ratio).abs() <= 1e-15
                        && leave.map_or(true, |l: usize| basis[pos] < basis[l]));
                if better {
                    best_ratio = ratio;
                    leave = Some(pos);
                }
            }
        }
        let Some(leave_pos) = leave else {
            return Err(Error::LpFailure("dual unbounded (primal infeasible?)".into()));
        };
        if best_ratio <= 1e-13 {
            degenerate_run += 1;
        } else {
            degenerate_run = 0;
        }
        pivot(basis, binv, xb, j, leave_pos, &w, m);
        if iter % 64 == 63 {
            *binv = invert_basis(cols, basis, m)?;
        }
    }
    Err(Error::LpFailure("iteration limit reached".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn fit1(ts: &[f64], ys: &[f64]) -> MinimaxSolution {
        let xs: Vec<Vec<f64>> = ts.iter().map(|&t| vec![t]).collect();
        minimax_affine(&xs, ys).unwrap()
    }

    #[test]
    fn absolute_value_symmetric_interval() {
        let ts: Vec<f64> = (0..=200).map(|i| -1.0 + i as f64 / 100.0).collect();
        let ys: Vec<f64> = ts.iter().map(|t| t.abs()).collect();
        let sol = fit1(&ts, &ys);
        assert_abs_diff_eq!(sol.error, 0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(sol.a[0], 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(sol.b, 0.5, epsilon = 1e-9);
    }

    #[test]
    fn exact_affine_data_fits_exactly() {
        let xs: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64 * 0.1, (i * i) as f64 * 0.01]).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x[0] - 3.0 * x[1] + 0.5).collect();
        let sol = minimax_affine(&xs, &ys).unwrap();
        assert_abs_diff_eq!(sol.error, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(sol.a[0], 2.0, epsilon = 1e-7);
        assert_abs_diff_eq!(sol.a[1], -3.0, epsilon = 1e-7);
        assert_abs_diff_eq!(sol.b, 0.5, epsilon = 1e-7);
    }

    #[test]
    fn three_point_equioscillation() {
        // (0,0), (1,1), (2,1): best affine has error 1/4.
        let sol = fit1(&[0.0, 1.0, 2.0], &[0.0, 1.0, 1.0]);
        assert_abs_diff_eq!(sol.error, 0.25, epsilon = 1e-9);
    }

    #[test]
    fn degenerate_direction_is_handled() {
        // Three samples in R^4: most coefficient directions are redundant.
        let xs = vec![
            vec![0.0, 0.0, 0.0, 0.0],
            vec![1.0, 1.0, 0.0, 0.0],
            vec![2.0, 2.0, 0.0, 0.0],
        ];
        let ys = vec![0.0, 1.0, 0.0];
        let sol = minimax_affine(&xs, &ys).unwrap();
        assert_abs_diff_eq!(sol.error, 0.5, epsilon = 1e-9);
    }

    #[test]
    fn single_sample_fits_with_zero_error() {
        let sol = minimax_affine(&[vec![3.0]], &[7.0]).unwrap();
        assert_abs_diff_eq!(sol.error, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn error_matches_recomputation() {
        let ts: Vec<f64> = (0..500).map(|i| i as f64 / 499.0 * 4.0 - 2.0).collect();
        let ys: Vec<f64> = ts.iter().map(|t| (3.0 * t).sin()).collect();
        let sol = fit1(&ts, &ys);
        let recomputed = ts
            .iter()
            .zip(&ys)
            .map(|(&t, &y)| (y - sol.a[0] * t - sol.b).abs())
            .fold(0.0f64, f64::max);
        assert_abs_diff_eq!(sol.error, recomputed, epsilon = 1e-9);
    }
}
