//! Dense phase-1 simplex for `x ≥ 0`, optional `Σx = 1`, `|Ax − b|∞ ≤ η`.

use crate::scalar::Real;

use super::EomError;

/// Pivot elements smaller than this are treated as zero.
pub const PIVOT_TOLERANCE: f64 = 1e-11;
/// Phase-1 objective above this certifies infeasibility.
pub const INFEASIBILITY_THRESHOLD: f64 = 1e-9;

/// Finds `x ≥ 0` with `|Ax − b|∞ ≤ eta` (and `Σx = 1` when `simplex`).
///
/// With `eta = 0` the rows are equalities; otherwise each row becomes two
/// inequalities. Bland's rule picks entering and leaving variables.
pub fn lp_feasibility<T: Real>(a: &[Vec<T>], b: &[T], eta: T, simplex: bool) -> Result<Vec<T>, EomError> {
    if a.len() != b.len() {
        return Err(EomError::LengthMismatch { expected: a.len(), got: b.len() });
    }
    let Some(width) = a.first().map(Vec::len) else {
        return Err(EomError::InvalidInput("at least one constraint row is needed".into()));
    };
    if let Some(row) = a.iter().find(|r| r.len() != width) {
        return Err(EomError::LengthMismatch { expected: width, got: row.len() });
    }
    if a.iter().flatten().chain(b).any(|v| !v.is_finite()) || !eta.is_finite() || eta < T::zero() {
        return Err(EomError::InvalidInput("entries must be finite and eta nonnegative".into()));
    }
    if width == 0 {
        return Err(EomError::InvalidInput("at least one coordinate is needed".into()));
    }

    // rows: (coefficients on x, slack coefficient or none, rhs)
    let mut rows: Vec<(Vec<T>, Option<T>, T)> = Vec::new();
    for (r, &v) in a.iter().zip(b) {
        if eta == T::zero() {
            rows.push((r.clone(), None, v));
        } else {
            rows.push((r.clone(), Some(T::one()), v + eta));
            rows.push((r.iter().map(|&c| -c).collect(), Some(T::one()), -(v - eta)));
        }
    }
    if simplex {
        rows.push((vec![T::one(); width], None, T::one()));
    }
    let m = rows.len();
    let nslack = rows.iter().filter(|r| r.1.is_some()).count();
    // columns: x (width), slacks (nslack), artificials (m), rhs
    let cols = width + nslack + m + 1;
    let rhs_col = cols - 1;
    let mut t = vec![vec![T::zero(); cols]; m + 1];
    let mut slack = width;
    for (i, (coef, s, rhs)) in rows.into_iter().enumerate() {
        let flip = rhs < T::zero();
        let sg = if flip { -T::one() } else { T::one() };
        for (j, c) in coef.into_iter().enumerate() {
            t[i][j] = sg * c;
        }
        if let Some(sv) = s {
            t[i][slack] = sg * sv;
            slack += 1;
        }
        t[i][width + nslack + i] = T::one();
        t[i][rhs_col] = sg * rhs;
    }
    // objective row: minimize Σ artificials, written as reduced costs
    for j in 0..cols {
        if (width + nslack..width + nslack + m).contains(&j) {
            continue;
        }
        let s: T = (0..m).map(|i| t[i][j]).sum();
        t[m][j] = -s;
    }
    let mut basis: Vec<usize> = (0..m).map(|i| width + nslack + i).collect();
    let tol = T::tol(PIVOT_TOLERANCE);

    let max_pivots = 50 * (m + cols);
    for _ in 0..max_pivots {
        let Some(enter) = (0..rhs_col).find(|&j| t[m][j] < -tol) else {
            break;
        };
        let mut leave: Option<(usize, T)> = None;
        for i in 0..m {
            if t[i][enter] > tol {
                let ratio = t[i][rhs_col] / t[i][enter];
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((li, lr)) => {
                        if ratio < lr - tol || ((ratio - lr).abs() <= tol && basis[i] < basis[li]) {
                            Some((i, ratio))
                        } else {
                            Some((li, lr))
                        }
                    }
                };
            }
        }
        // phase 1 is bounded below by 0, so an entering column always has a leaving row
        let Some((row, _)) = leave else {
            break;
        };
        pivot(&mut t, row, enter);
        basis[row] = enter;
    }

    let objective = -t[m][rhs_col];
    if objective > T::lit(INFEASIBILITY_THRESHOLD) {
        return Err(EomError::Infeasible { objective: objective.as_f64() });
    }
    let mut x = vec![T::zero(); width];
    for (i, &v) in basis.iter().enumerate() {
        if v < width {
            x[v] = t[i][rhs_col].max(T::zero());
        }
    }
    Ok(x)
}

fn pivot<T: Real>(t: &mut [Vec<T>], row: usize, col: usize) {
    let p = t[row][col];
    for v in t[row].iter_mut() {
        *v = *v / p;
    }
    let pivot_row = t[row].clone();
    for (i, r) in t.iter_mut().enumerate() {
        if i == row {
            continue;
        }
        let f = r[col];
        if f == T::zero() {
            continue;
        }
        for (v, &pv) in r.iter_mut().zip(&pivot_row) {
            *v = *v - f * pv;
        }
        r[col] = T::zero();
    }
}
