//! Dense determinants in sign/log form and a direct stationary solve.

use nalgebra::{DMatrix, DVector};

/// Determinant stored as `sign * exp(log_abs)`; `sign == 0` means singular.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogDet {
    pub sign: f64,
    pub log_abs: f64,
}

impl LogDet {
    pub const ONE: LogDet = LogDet { sign: 1.0, log_abs: 0.0 };
    pub const ZERO: LogDet = LogDet { sign: 0.0, log_abs: f64::NEG_INFINITY };

    pub fn value(self) -> f64 {
        if self.sign == 0.0 {
            0.0
        } else {
            self.sign * self.log_abs.exp()
        }
    }
}

/// LU with partial pivoting on a row-major `n x n` buffer, consumed.
pub fn log_determinant(mut a: Vec<f64>, n: usize) -> LogDet {
    debug_assert_eq!(a.len(), n * n);
    let mut sign = 1.0;
    let mut log_abs = 0.0;
    for k in 0..n {
        let (p, pmax) = (k..n)
            .map(|r| (r, a[r * n + k].abs()))
            .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pmax == 0.0 {
            return LogDet::ZERO;
        }
        if p != k {
            for c in 0..n {
                a.swap(k * n + c, p * n + c);
            }
            sign = -sign;
        }
        let pivot = a[k * n + k];
        if pivot < 0.0 {
            sign = -sign;
        }
        log_abs += pivot.abs().ln();
        for r in k + 1..n {
            let f = a[r * n + k] / pivot;
            if f != 0.0 {
                for c in k + 1..n {
                    a[r * n + c] -= f * a[k * n + c];
                }
            }
        }
    }
    LogDet { sign, log_abs }
}

/// Determinant of the principal submatrix of `q` on the rows and columns in
/// `keep`. The empty minor is 1.
pub fn principal_minor_logdet(q: &DMatrix<f64>, keep: &[usize]) -> LogDet {
    let k = keep.len();
    if k == 0 {
        return LogDet::ONE;
    }
    let mut buf = Vec::with_capacity(k * k);
    for &r in keep {
        for &c in keep {
            buf.push(q[(r, c)]);
        }
    }
    log_determinant(buf, k)
}

pub fn principal_minor(q: &DMatrix<f64>, keep: &[usize]) -> f64 {
    principal_minor_logdet(q, keep).value()
}

/// Indices `0..n` not contained in the sorted slice `removed`.
pub fn complement(n: usize, removed: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(n.saturating_sub(removed.len()));
    let mut it = removed.iter().peekable();
    for i in 0..n {
        if it.peek() == Some(&&i) {
            it.next();
        } else {
            out.push(i);
        }
    }
    out
}

/// Solves `pi Q = 0`, `sum pi = 1` by replacing one balance equation with the
/// normalization.
pub fn stationary_direct(q: &DMatrix<f64>) -> Option<Vec<f64>> {
    let n = q.nrows();
    let mut a = q.transpose();
    for c in 0..n {
        a[(n - 1, c)] = 1.0;
    }
    let mut b = DVector::zeros(n);
    b[n - 1] = 1.0;
    a.lu().solve(&b).map(|x| x.iter().copied().collect())
}

/// `log(sum exp(x))` over values of equal sign given as `LogDet`s. Returns
/// the common sign and whether the signs actually agreed.
pub fn log_sum(dets: &[LogDet]) -> (LogDet, bool) {
    let max = dets
        .iter()
        .filter(|d| d.sign != 0.0)
        .map(|d| d.log_abs)
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return (LogDet::ZERO, true);
    }
    let sum: f64 = dets
        .iter()
        .filter(|d| d.sign != 0.0)
        .map(|d| d.sign * (d.log_abs - max).exp())
        .sum();
    let same_sign = {
        let mut signs = dets.iter().filter(|d| d.sign != 0.0).map(|d| d.sign);
        let first = signs.next().unwrap_or(1.0);
        signs.all(|s| s == first)
    };
    if sum == 0.0 {
        return (LogDet::ZERO, same_sign);
    }
    (LogDet { sign: sum.signum(), log_abs: max + sum.abs().ln() }, same_sign)
}
