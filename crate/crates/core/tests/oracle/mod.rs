//! Independent reference computations used by the integration and
//! acceptance tests. Nothing here calls into the equalizer code.
#![allow(dead_code)]

pub fn gauss(alpha: f64, a: &[f64], b: &[f64]) -> f64 {
    let mut d = 0.0;
    for k in 0..a.len() {
        let t = a[k] - b[k];
        d += t * t;
    }
    (-alpha * d).exp()
}

/// Replays KLMS training from scratch: returns the a-priori errors.
pub fn klms_replay(inputs: &[Vec<f64>], desired: &[f64], mu: f64, alpha: f64) -> Vec<f64> {
    let mut errors: Vec<f64> = Vec::with_capacity(inputs.len());
    for i in 0..inputs.len() {
        let mut f = 0.0;
        for j in 0..i {
            f += mu * errors[j] * gauss(alpha, &inputs[j], &inputs[i]);
        }
        errors.push(desired[i] - f);
    }
    errors
}

/// The expansion evaluated term by term from logged errors and inputs.
pub fn klms_expand(inputs: &[Vec<f64>], errors: &[f64], mu: f64, alpha: f64, query: &[f64]) -> f64 {
    let mut f = 0.0;
    for (c, e) in inputs.iter().zip(errors) {
        f += mu * e * gauss(alpha, c, query);
    }
    f
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        assert!(a[col][col].abs() > 1e-12, "singular system");
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut s = b[row];
        for k in row + 1..n {
            s -= a[row][k] * x[k];
        }
        x[row] = s / a[row][row];
    }
    x
}

/// Normal-equation solution from empirical correlations over `windows`.
pub fn wiener(windows: &[Vec<f64>], desired: &[f64]) -> Vec<f64> {
    let n = windows[0].len();
    let mut r = vec![vec![0.0; n]; n];
    let mut p = vec![0.0; n];
    for (c, &x) in windows.iter().zip(desired) {
        for i in 0..n {
            p[i] += c[i] * x;
            for j in 0..n {
                r[i][j] += c[i] * c[j];
            }
        }
    }
    let m = windows.len() as f64;
    let r = r.into_iter().map(|row| row.into_iter().map(|v| v / m).collect()).collect();
    let p = p.into_iter().map(|v| v / m).collect();
    solve(r, p)
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
pub fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-24 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i]).collect()
}

/// Zero-padded window `signal[i - offset .. i - offset + n)`.
pub fn window(signal: &[f64], i: usize, n: usize, offset: usize) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let idx = i as i64 - offset as i64 + k as i64;
            if idx >= 0 && (idx as usize) < signal.len() {
                signal[idx as usize]
            } else {
                0.0
            }
        })
        .collect()
}

/// Small deterministic generator so oracle inputs do not depend on the
/// crate's RNG plumbing.
pub struct Lcg(pub u64);

impl Lcg {
    pub fn next_f64(&mut self) -> f64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}
