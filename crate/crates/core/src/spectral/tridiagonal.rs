//! Lowest eigenpairs of a real symmetric tridiagonal matrix: Sturm-sequence
//! bisection for the eigenvalues, inverse iteration for the vectors.

/// Number of eigenvalues strictly below `x`.
pub fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let tiny = f64::MIN_POSITIVE.sqrt();
    let mut count = 0;
    let mut q = diag[0] - x;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..diag.len() {
        if q == 0.0 {
            q = tiny;
        }
        q = (diag[i] - x) - off[i - 1] * off[i - 1] / q;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

fn gershgorin(diag: &[f64], off: &[f64]) -> (f64, f64) {
    let n = diag.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r =
            if i > 0 { off[i - 1].abs() } else { 0.0 } + if i + 1 < n { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    (lo, hi)
}

/// `j`-th smallest eigenvalue (0-based) by bisection to machine precision.
pub fn eigenvalue(diag: &[f64], off: &[f64], j: usize) -> f64 {
    let (mut lo, mut hi) = gershgorin(diag, off);
    let scale = lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
    lo -= 1e-12 * scale;
    hi += 1e-12 * scale;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 2.0 * f64::EPSILON * scale {
            break;
        }
        if sturm_count(diag, off, mid) > j {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// LU factorization with partial pivoting of `T − shift`, LAPACK `gttrf` layout.
struct Lu {
    dl: Vec<f64>,
    d: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    swap: Vec<bool>,
}

impl Lu {
    fn factor(diag: &[f64], off: &[f64], shift: f64) -> Lu {
        let n = diag.len();
        let mut d: Vec<f64> = diag.iter().map(|a| a - shift).collect();
        let mut dl = off.to_vec();
        let mut du = off.to_vec();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swap = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                if d[i] != 0.0 {
                    let fact = dl[i] / d[i];
                    dl[i] = fact;
                    d[i + 1] -= fact * du[i];
                }
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] *= -fact;
                }
                swap[i] = true;
            }
        }
        let norm = d
            .iter()
            .chain(&du)
            .fold(0.0_f64, |m, v| m.max(v.abs()))
            .max(f64::MIN_POSITIVE);
        for v in d.iter_mut() {
            if v.abs() < f64::EPSILON * norm {
                *v = f64::EPSILON * norm;
            }
        }
        Lu {
            dl,
            d,
            du,
            du2,
            swap,
        }
    }

    fn solve(&self, b: &mut [f64]) {
        let n = b.len();
        for i in 0..n.saturating_sub(1) {
            if self.swap[i] {
                let temp = b[i] - self.dl[i] * b[i + 1];
                b[i] = b[i + 1];
                b[i + 1] = temp;
            } else {
                b[i + 1] -= self.dl[i] * b[i];
            }
        }
        b[n - 1] /= self.d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
    }
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

fn tmul(diag: &[f64], off: &[f64], x: &[f64], y: &mut [f64]) {
    let n = diag.len();
    for i in 0..n {
        let mut acc = diag[i] * x[i];
        if i > 0 {
            acc += off[i - 1] * x[i - 1];
        }
        if i + 1 < n {
            acc += off[i] * x[i + 1];
        }
        y[i] = acc;
    }
}

/// Lowest `count` eigenpairs; vectors are Euclidean-orthonormal.
pub fn lowest_eigenpairs(diag: &[f64], off: &[f64], count: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = diag.len();
    let count = count.min(n);
    let (glo, ghi) = gershgorin(diag, off);
    let scale = glo.abs().max(ghi.abs()).max(f64::MIN_POSITIVE);
    let mut values: Vec<f64> = Vec::with_capacity(count);
    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(count);
    let mut scratch = vec![0.0; n];
    for j in 0..count {
        let lam = eigenvalue(diag, off, j);
        let lu = Lu::factor(diag, off, lam);
        // deterministic start with components in every direction
        let mut v: Vec<f64> = (0..n)
            .map(|i| 1.0 + ((i * 7919 + j * 104729) % 1013) as f64 / 1013.0)
            .collect();
        normalize(&mut v);
        for _ in 0..4 {
            lu.solve(&mut v);
            // eigenvalues closer than this are treated as a cluster
            for (mu, u) in values.iter().zip(&vectors) {
                if (lam - mu).abs() <= 1e-3 * scale {
                    let p: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
                    v.iter_mut().zip(u).for_each(|(a, b)| *a -= p * b);
                }
            }
            normalize(&mut v);
        }
        tmul(diag, off, &v, &mut scratch);
        let rq: f64 = v.iter().zip(&scratch).map(|(a, b)| a * b).sum();
        values.push(rq);
        vectors.push(v);
    }
    (values, vectors)
}
