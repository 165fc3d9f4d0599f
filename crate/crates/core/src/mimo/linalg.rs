//! Small dense complex helpers; matrices here are at most a few dozen wide.

use num_complex::Complex64;

/// `<a, b> = sum(conj(a_k) * b_k)`.
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm_sqr(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum()
}

/// Diagonal of the inverse of a Hermitian positive-definite `n x n` matrix,
/// or `None` when it is numerically singular.
pub fn inverse_diagonal(mut g: Vec<Complex64>, n: usize) -> Option<Vec<f64>> {
    let scale = (0..n).map(|i| g[i * n + i].norm()).fold(0.0, f64::max);
    if !(scale > 0.0) {
        return None;
    }
    let mut inv = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        inv[i * n + i] = Complex64::new(1.0, 0.0);
    }
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&a, &b| g[a * n + col].norm().total_cmp(&g[b * n + col].norm()))
            .unwrap_or(col);
        if g[pivot * n + col].norm() < 1e-10 * scale {
            return None;
        }
        if pivot != col {
            for k in 0..n {
                g.swap(pivot * n + k, col * n + k);
                inv.swap(pivot * n + k, col * n + k);
            }
        }
        let p = g[col * n + col];
        for k in 0..n {
            g[col * n + k] /= p;
            inv[col * n + k] /= p;
        }
        for r in 0..n {
            if r != col {
                let f = g[r * n + col];
                if f.norm_sqr() != 0.0 {
                    for k in 0..n {
                        let gv = g[col * n + k];
                        let iv = inv[col * n + k];
                        g[r * n + k] -= f * gv;
                        inv[r * n + k] -= f * iv;
                    }
                }
            }
        }
    }
    Some((0..n).map(|i| inv[i * n + i].re).collect())
}
