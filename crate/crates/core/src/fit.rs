//! Small dense least-squares fits used by the decay-rate and scaling checks.

use crate::error::{Error, Result};

/// Solves `min ‖X c − y‖₂` by Householder QR. `rows[i]` is the i-th row of X.
pub fn least_squares(rows: &[Vec<f64>], y: &[f64]) -> Result<Vec<f64>> {
    let m = rows.len();
    if m == 0 || m != y.len() {
        return Err(Error::Parameter("least_squares: empty or mismatched system".into()));
    }
    let n = rows[0].len();
    if m < n {
        return Err(Error::Parameter(format!("least_squares: {m} rows for {n} unknowns")));
    }
    // column-major copy
    let mut a: Vec<Vec<f64>> = (0..n).map(|j| rows.iter().map(|r| r[j]).collect()).collect();
    let mut b = y.to_vec();
    for k in 0..n {
        let norm = a[k][k..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::Parameter("least_squares: rank-deficient design".into()));
        }
        let alpha = if a[k][k] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = a[k][k..].to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 > 0.0 {
            for col in a.iter_mut().skip(k) {
                let dot: f64 = v.iter().zip(&col[k..]).map(|(p, q)| p * q).sum();
                let s = 2.0 * dot / vnorm2;
                for (c, vi) in col[k..].iter_mut().zip(&v) {
                    *c -= s * vi;
                }
            }
            let dot: f64 = v.iter().zip(&b[k..]).map(|(p, q)| p * q).sum();
            let s = 2.0 * dot / vnorm2;
            for (c, vi) in b[k..].iter_mut().zip(&v) {
                *c -= s * vi;
            }
        }
    }
    let mut c = vec![0.0; n];
    for k in (0..n).rev() {
        let mut s = b[k];
        for j in k + 1..n {
            s -= a[j][k] * c[j];
        }
        if a[k][k].abs() < 1e-300 {
            return Err(Error::Parameter("least_squares: singular triangular factor".into()));
        }
        c[k] = s / a[k][k];
    }
    Ok(c)
}

/// Fits `y ≈ slope·x + intercept`; returns `(slope, intercept)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    let rows: Vec<Vec<f64>> = x.iter().map(|&v| vec![v, 1.0]).collect();
    let c = least_squares(&rows, y)?;
    Ok((c[0], c[1]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| -1.5 * v + 0.25).collect();
        let (s, c) = linear_fit(&x, &y).unwrap();
        assert!((s + 1.5).abs() < 1e-14 && (c - 0.25).abs() < 1e-14);
    }

    #[test]
    fn square_system_interpolates() {
        let rows = vec![
            vec![1.0, 1.0_f64.ln(), 1.0],
            vec![2.0, 2.0_f64.ln(), 1.0],
            vec![5.0, 5.0_f64.ln(), 1.0],
        ];
        let truth = [0.3, -0.7, 2.0];
        let y: Vec<f64> = rows.iter().map(|r| r.iter().zip(&truth).map(|(a, b)| a * b).sum()).collect();
        let c = least_squares(&rows, &y).unwrap();
        for (a, b) in c.iter().zip(truth) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_underdetermined() {
        assert!(least_squares(&[vec![1.0, 2.0]], &[1.0]).is_err());
    }
}
