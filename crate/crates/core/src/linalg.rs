//! Dense least squares via Householder QR with column pivoting.
//!
//! The cross-sections here are tall and narrow (thousands of rows, at most
//! a couple dozen columns), so a straightforward rank-revealing
//! factorization is both fast and numerically safe. Rank deficiency is
//! reported as an error rather than silently pseudo-inverted.

use ndarray::{Array1, Array2, ArrayView1};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Lstsq {
    pub coefficients: Array1<f64>,
    pub rank: usize,
}

struct PivotedQr {
    /// Packed factor: upper triangle holds R, the rest is scratch.
    r: Array2<f64>,
    /// qtb[j] = (Q^T b)[j]
    qtb: Array1<f64>,
    /// Column permutation: factored column j came from input column perm[j].
    perm: Vec<usize>,
    rank: usize,
}

fn factorize(a: &Array2<f64>, b: Option<&ArrayView1<f64>>) -> PivotedQr {
    let (n, k) = a.dim();
    let mut r = a.clone();
    let mut qtb = match b {
        Some(b) => b.to_owned(),
        None => Array1::zeros(n),
    };
    let mut perm: Vec<usize> = (0..k).collect();

    let steps = n.min(k);
    for j in 0..steps {
        // Pivot on the column with the largest remaining norm.
        let mut best = j;
        let mut best_norm = 0.0;
        for c in j..k {
            let norm: f64 = (j..n).map(|i| r[(i, c)] * r[(i, c)]).sum();
            if norm > best_norm {
                best_norm = norm;
                best = c;
            }
        }
        if best != j {
            for i in 0..n {
                let tmp = r[(i, j)];
                r[(i, j)] = r[(i, best)];
                r[(i, best)] = tmp;
            }
            perm.swap(j, best);
        }

        let norm_x = best_norm.sqrt();
        if norm_x == 0.0 {
            // Remaining columns are all zero; R diagonal stays zero.
            continue;
        }

        // Householder vector v: reflect column j below the diagonal onto alpha*e1.
        let x0 = r[(j, j)];
        let alpha = if x0 > 0.0 { -norm_x } else { norm_x };
        let v0 = x0 - alpha;
        let vtv: f64 = v0 * v0 + (j + 1..n).map(|i| r[(i, j)] * r[(i, j)]).sum::<f64>();
        let tau = 2.0 / vtv;

        // Apply the reflection to the remaining columns and to b.
        for c in j + 1..k {
            let mut dot = v0 * r[(j, c)];
            for i in j + 1..n {
                dot += r[(i, j)] * r[(i, c)];
            }
            let scale = tau * dot;
            r[(j, c)] -= scale * v0;
            for i in j + 1..n {
                let vi = r[(i, j)];
                r[(i, c)] -= scale * vi;
            }
        }
        if b.is_some() {
            let mut dot = v0 * qtb[j];
            for i in j + 1..n {
                dot += r[(i, j)] * qtb[i];
            }
            let scale = tau * dot;
            qtb[j] -= scale * v0;
            for i in j + 1..n {
                let vi = r[(i, j)];
                qtb[i] -= scale * vi;
            }
        }

        r[(j, j)] = alpha;
        for i in j + 1..n {
            r[(i, j)] = 0.0;
        }
    }

    let tol = f64::EPSILON * (n.max(k) as f64) * r[(0, 0)].abs();
    let rank = (0..steps).take_while(|&j| r[(j, j)].abs() > tol).count();

    PivotedQr { r, qtb, perm, rank }
}

/// Numerical rank of a matrix, from the pivoted-QR diagonal.
pub fn qr_rank(a: &Array2<f64>) -> usize {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0;
    }
    factorize(a, None).rank
}

/// Solves `argmin_x ||a x - b||_2`. Errors if `a` is not full column rank.
pub fn lstsq(a: &Array2<f64>, b: &ArrayView1<f64>) -> Result<Lstsq> {
    let (n, k) = a.dim();
    if b.len() != n {
        return Err(Error::InvalidParam(format!(
            "rhs length {} does not match {} rows",
            b.len(),
            n
        )));
    }
    if k == 0 || n == 0 {
        return Err(Error::InvalidParam("empty system".into()));
    }
    let f = factorize(a, Some(b));
    if f.rank < k {
        return Err(Error::RankDeficient {
            rank: f.rank,
            cols: k,
        });
    }

    // Back substitution on the k x k upper triangle.
    let mut y = vec![0.0; k];
    for j in (0..k).rev() {
        let mut sum = f.qtb[j];
        for (m, ym) in y.iter().enumerate().skip(j + 1) {
            sum -= f.r[(j, m)] * ym;
        }
        y[j] = sum / f.r[(j, j)];
    }
    let mut coefficients = Array1::zeros(k);
    for j in 0..k {
        coefficients[f.perm[j]] = y[j];
    }
    Ok(Lstsq {
        coefficients,
        rank: f.rank,
    })
}
