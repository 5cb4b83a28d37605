//! Small dense vector helpers shared by the geometry and engine modules.

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

pub fn axpy(y: &mut [f64], s: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += s * xi;
    }
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Unit vector in the direction of `a`, or `None` for (numerically) zero input.
pub fn normalized(a: &[f64]) -> Option<Vec<f64>> {
    let n = norm(a);
    if n < 1e-300 || !n.is_finite() {
        None
    } else {
        Some(scale(a, 1.0 / n))
    }
}

/// Matrix-vector product for a row-major matrix.
pub fn mat_vec(rows: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    rows.iter().map(|r| dot(r, v)).collect()
}

/// `M^T w` for a row-major matrix with `cols` columns.
pub fn mat_t_vec(rows: &[Vec<f64>], w: &[f64], cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; cols];
    for (r, wi) in rows.iter().zip(w) {
        axpy(&mut out, *wi, r);
    }
    out
}

/// Reduced row echelon form in place. Returns the pivot columns.
pub fn rref(rows: &mut Vec<Vec<f64>>, cols: usize, tol: f64) -> Vec<usize> {
    let pivots = rref_keep(rows, cols, tol);
    rows.truncate(pivots.len());
    pivots
}

/// Reduce the augmented system `rows · [z; -1] = 0` (coefficients in the first
/// `cols` entries, right-hand side last) treating entries below `rel_tol` times the
/// largest entry as zero. `None` when the system is inconsistent at that tolerance.
pub fn reduce_system(rows: &[Vec<f64>], cols: usize, rel_tol: f64) -> Option<Vec<Vec<f64>>> {
    let scale = rows
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1.0);
    let tol = rel_tol * scale;
    let mut m = rows.to_vec();
    let pivots = rref_keep(&mut m, cols, tol);
    if m[pivots.len()..].iter().any(|r| r[cols].abs() > tol) {
        return None;
    }
    m.truncate(pivots.len());
    for r in &mut m {
        for v in r[..cols].iter_mut() {
            if v.abs() <= tol {
                *v = 0.0;
            }
        }
    }
    Some(m)
}

fn rref_keep(rows: &mut [Vec<f64>], cols: usize, tol: f64) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r >= rows.len() {
            break;
        }
        let (best, best_val) = (r..rows.len())
            .map(|i| (i, rows[i][c].abs()))
            .fold((r, -1.0), |acc, it| if it.1 > acc.1 { it } else { acc });
        if best_val <= tol {
            continue;
        }
        rows.swap(r, best);
        let p = rows[r][c];
        for v in rows[r].iter_mut() {
            *v /= p;
        }
        for i in 0..rows.len() {
            if i != r {
                let f = rows[i][c];
                if f != 0.0 {
                    let pivot_row = rows[r].clone();
                    axpy(&mut rows[i], -f, &pivot_row);
                    rows[i][c] = 0.0;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

/// Orthonormal-free basis of the null space of `rows` (each of length `cols`).
pub fn null_space(rows: &[Vec<f64>], cols: usize, tol: f64) -> Vec<Vec<f64>> {
    let mut m: Vec<Vec<f64>> = rows.to_vec();
    let pivots = rref(&mut m, cols, tol);
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![0.0; cols];
            v[f] = 1.0;
            for (row, &pc) in m.iter().zip(&pivots) {
                v[pc] = -row[f];
            }
            v
        })
        .collect()
}

pub fn rank(rows: &[Vec<f64>], cols: usize, tol: f64) -> usize {
    let mut m = rows.to_vec();
    rref(&mut m, cols, tol).len()
}

/// Solve the (small) least-squares problem `min ||A x - b||` via normal equations
/// with partial pivoting. Returns `None` when `A^T A` is singular.
pub fn least_squares(a: &[Vec<f64>], b: &[f64], cols: usize) -> Option<Vec<f64>> {
    let mut ata = vec![vec![0.0; cols + 1]; cols];
    for (row, bi) in a.iter().zip(b) {
        for i in 0..cols {
            for j in 0..cols {
                ata[i][j] += row[i] * row[j];
            }
            ata[i][cols] += row[i] * bi;
        }
    }
    let scale = ata
        .iter()
        .enumerate()
        .map(|(i, r)| r[i].abs())
        .fold(0.0, f64::max)
        .max(1e-300);
    let pivots = rref(&mut ata, cols, 1e-13 * scale);
    if pivots.len() < cols {
        return None;
    }
    Some(ata.iter().map(|r| r[cols]).collect())
}

/// Round to a fixed relative grid so that numerically equal quantities compare equal.
pub fn snap(v: f64, quantum: f64) -> f64 {
    let s = (v / quantum).round() * quantum;
    if s == 0.0 {
        0.0
    } else {
        s
    }
}
