//! Dense least squares for tall systems with three unknowns.

use crate::scalar::Real;

/// Outcome of a rank-revealing solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LstsqError<T> {
    /// Smallest pivot over largest pivot fell below the tolerance.
    RankDeficient { pivot_ratio: T },
}

/// Solves `min |A x - b|` for an `M x 3` matrix with Householder QR and
/// column pivoting. The rank test compares |R[2][2]| to |R[0][0]|; pivoting
/// keeps the diagonal of R non-increasing in magnitude.
pub fn solve_lstsq3<T: Real, const M: usize>(
    mut a: [[T; 3]; M],
    mut b: [T; M],
    rank_tol: T,
) -> Result<[T; 3], LstsqError<T>> {
    assert!(M >= 3, "system must have at least three rows");
    let mut perm = [0usize, 1, 2];

    for k in 0..3 {
        // pivot on the remaining column with the largest trailing norm
        let mut best = k;
        let mut best_norm = T::neg_infinity();
        for j in k..3 {
            let n: T = (k..M).map(|i| a[i][j] * a[i][j]).sum();
            if n > best_norm {
                best_norm = n;
                best = j;
            }
        }
        if best != k {
            for row in a.iter_mut() {
                row.swap(k, best);
            }
            perm.swap(k, best);
        }

        let norm = best_norm.sqrt();
        if norm == T::zero() {
            continue;
        }
        let alpha = if a[k][k] > T::zero() { -norm } else { norm };
        let mut v = [T::zero(); M];
        for i in k..M {
            v[i] = a[i][k];
        }
        v[k] = v[k] - alpha;
        let vnorm2: T = (k..M).map(|i| v[i] * v[i]).sum();
        if vnorm2 == T::zero() {
            continue;
        }
        let two = T::lit(2.0);
        for j in k..3 {
            let s: T = (k..M).map(|i| v[i] * a[i][j]).sum();
            let f = two * s / vnorm2;
            for i in k..M {
                a[i][j] = a[i][j] - f * v[i];
            }
        }
        let s: T = (k..M).map(|i| v[i] * b[i]).sum();
        let f = two * s / vnorm2;
        for i in k..M {
            b[i] = b[i] - f * v[i];
        }
    }

    let lead = a[0][0].abs();
    let ratio = if lead > T::zero() {
        a[2][2].abs() / lead
    } else {
        T::zero()
    };
    if !(ratio > rank_tol) {
        return Err(LstsqError::RankDeficient { pivot_ratio: ratio });
    }

    let mut y = [T::zero(); 3];
    for i in (0..3).rev() {
        let mut s = b[i];
        for j in i + 1..3 {
            s = s - a[i][j] * y[j];
        }
        y[i] = s / a[i][i];
    }
    let mut x = [T::zero(); 3];
    for i in 0..3 {
        x[perm[i]] = y[i];
    }
    Ok(x)
}
