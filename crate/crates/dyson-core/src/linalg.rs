//! Small dense complex linear algebra: matrix exponential, linear solves,
//! a Jacobi eigensolver for Hermitian matrices, and Gauss-Hermite rules.
//!
//! Everything here is self-contained f64 code for modest matrix sizes
//! (tens to a few hundred); the high-precision kernels live in [`crate::dd`].

use ndarray::Array2;
use num_complex::Complex64 as C64;

pub type CMat = Array2<C64>;

pub fn identity(n: usize) -> CMat {
    Array2::from_diag_elem(n, C64::new(1.0, 0.0))
}

pub fn fro_norm(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn adjoint(a: &CMat) -> CMat {
    a.t().mapv(|z| z.conj())
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a.dot(b) - b.dot(a)
}

pub fn anticommutator(a: &CMat, b: &CMat) -> CMat {
    a.dot(b) + b.dot(a)
}

pub fn hermiticity_defect(a: &CMat) -> f64 {
    fro_norm(&(a - &adjoint(a)))
}

/// Max column sum of absolute values.
pub fn one_norm(a: &CMat) -> f64 {
    let mut best = 0.0f64;
    for j in 0..a.ncols() {
        let col: f64 = (0..a.nrows()).map(|i| a[[i, j]].norm()).sum();
        best = best.max(col);
    }
    best
}

/// Solve `A X = B` by Gaussian elimination with partial pivoting.
pub fn solve(a: &CMat, b: &CMat) -> CMat {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    assert_eq!(n, b.nrows());
    let m = b.ncols();
    let mut lu = a.clone();
    let mut x = b.clone();
    for col in 0..n {
        let mut max_val = 0.0;
        let mut max_row = col;
        for row in col..n {
            let v = lu[[row, col]].norm();
            if v > max_val {
                max_val = v;
                max_row = row;
            }
        }
        assert!(max_val > 0.0, "singular matrix in solve()");
        if max_row != col {
            for j in 0..n {
                lu.swap([col, j], [max_row, j]);
            }
            for j in 0..m {
                x.swap([col, j], [max_row, j]);
            }
        }
        let pivot = lu[[col, col]];
        for row in (col + 1)..n {
            let factor = lu[[row, col]] / pivot;
            if factor.norm() == 0.0 {
                continue;
            }
            for j in col..n {
                let v = lu[[col, j]];
                lu[[row, j]] -= factor * v;
            }
            for j in 0..m {
                let v = x[[col, j]];
                x[[row, j]] -= factor * v;
            }
        }
    }
    for col in (0..n).rev() {
        let pivot = lu[[col, col]];
        for j in 0..m {
            let mut sum = x[[col, j]];
            for k in (col + 1)..n {
                sum -= lu[[col, k]] * x[[k, j]];
            }
            x[[col, j]] = sum / pivot;
        }
    }
    x
}

/// Matrix exponential via scaling-and-squaring with the Pade(13)
/// approximant (Higham 2005 coefficients).
pub fn expm(a: &CMat) -> CMat {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    const THETA_13: f64 = 5.371_920_351_148_152;
    let norm = one_norm(a);
    let s = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil() as u32
    } else {
        0
    };
    let a1 = a.mapv(|z| z / C64::new((1u64 << s) as f64, 0.0));

    const B: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    let eye = identity(n);
    let a2 = a1.dot(&a1);
    let a4 = a2.dot(&a2);
    let a6 = a2.dot(&a4);
    let c = |x: f64| C64::new(x, 0.0);

    let w1 = a6.mapv(|z| z * c(B[13])) + a4.mapv(|z| z * c(B[11])) + a2.mapv(|z| z * c(B[9]));
    let w2 = w1.dot(&a6)
        + a6.mapv(|z| z * c(B[7]))
        + a4.mapv(|z| z * c(B[5]))
        + a2.mapv(|z| z * c(B[3]))
        + eye.mapv(|z| z * c(B[1]));
    let u = a1.dot(&w2);
    let v1 = a6.mapv(|z| z * c(B[12])) + a4.mapv(|z| z * c(B[10])) + a2.mapv(|z| z * c(B[8]));
    let v = v1.dot(&a6)
        + a6.mapv(|z| z * c(B[6]))
        + a4.mapv(|z| z * c(B[4]))
        + a2.mapv(|z| z * c(B[2]))
        + eye.mapv(|z| z * c(B[0]));

    let num = &v + &u;
    let den = &v - &u;
    let mut r = solve(&den, &num);
    for _ in 0..s {
        r = r.dot(&r);
    }
    r
}

/// Eigendecomposition of a Hermitian matrix by the cyclic complex Jacobi
/// method. Returns eigenvalues ascending and the unitary `V` with
/// `A = V diag(w) V^dagger`.
pub fn eigh(a: &CMat) -> (Vec<f64>, CMat) {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    let mut m = a.clone();
    let mut v = identity(n);

    let off = |m: &CMat| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m[[i, j]].norm_sqr();
                }
            }
        }
        s.sqrt()
    };

    let scale = fro_norm(&m).max(1e-300);
    for _sweep in 0..60 {
        if off(&m) <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[[p, q]];
                if apq.norm() <= 1e-18 * scale {
                    continue;
                }
                let app = m[[p, p]].re;
                let aqq = m[[q, q]].re;
                // Unitary 2x2 rotation zeroing the (p,q) element:
                // diagonalize [[app, apq], [conj(apq), aqq]].
                let phase = apq / C64::new(apq.norm(), 0.0);
                let tau = (aqq - app) / (2.0 * apq.norm());
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let sp = phase * C64::new(s, 0.0);
                for k in 0..n {
                    let mkp = m[[k, p]];
                    let mkq = m[[k, q]];
                    m[[k, p]] = mkp * C64::new(c, 0.0) - mkq * sp.conj();
                    m[[k, q]] = mkq * C64::new(c, 0.0) + mkp * sp;
                }
                for k in 0..n {
                    let mpk = m[[p, k]];
                    let mqk = m[[q, k]];
                    m[[p, k]] = mpk * C64::new(c, 0.0) - mqk * sp;
                    m[[q, k]] = mqk * C64::new(c, 0.0) + mpk * sp.conj();
                }
                for k in 0..n {
                    let vkp = v[[k, p]];
                    let vkq = v[[k, q]];
                    v[[k, p]] = vkp * C64::new(c, 0.0) - vkq * sp.conj();
                    v[[k, q]] = vkq * C64::new(c, 0.0) + vkp * sp;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let w: Vec<f64> = (0..n).map(|i| m[[i, i]].re).collect();
    order.sort_by(|&i, &j| w[i].partial_cmp(&w[j]).unwrap());
    let w_sorted: Vec<f64> = order.iter().map(|&i| w[i]).collect();
    let mut v_sorted = Array2::zeros((n, n));
    for (new, &old) in order.iter().enumerate() {
        for r in 0..n {
            v_sorted[[r, new]] = v[[r, old]];
        }
    }
    (w_sorted, v_sorted)
}

/// Implicit-shift QL iteration for a symmetric tridiagonal matrix,
/// accumulating rotations only into the vector `z` (classic `tqli` with the
/// eigenvector matrix reduced to one row). On return `d` holds eigenvalues
/// (unsorted) and `z[j]` the corresponding component of the initial `z`.
fn symtri_ql(d: &mut [f64], e: &mut [f64], z: &mut [f64]) {
    let n = d.len();
    // e[i] couples d[i] and d[i+1]; e[n-1] is a zero sentinel.
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            assert!(iter < 50, "tridiagonal QL failed to converge");
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut underflow = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                f = z[i + 1];
                z[i + 1] = s * z[i] + c * f;
                z[i] = c * z[i] - s * f;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
}

/// Nodes and weights of the `n`-point Gauss-Hermite rule for the weight
/// `exp(-x^2)` on the real line (physicists' convention), by Golub-Welsch
/// on the Jacobi matrix of the Hermite recurrence.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 2);
    let mut d = vec![0.0f64; n];
    let mut e: Vec<f64> = (1..n).map(|k| (k as f64 / 2.0).sqrt()).collect();
    e.push(0.0);
    let mut z = vec![0.0f64; n];
    z[0] = 1.0;
    symtri_ql(&mut d, &mut e, &mut z);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].partial_cmp(&d[j]).unwrap());
    let mu0 = std::f64::consts::PI.sqrt();
    let nodes: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let weights: Vec<f64> = order.iter().map(|&i| mu0 * z[i] * z[i]).collect();
    (nodes, weights)
}

/// Physicists' Hermite polynomial `H_n(x)`.
pub fn hermite(n: usize, x: f64) -> f64 {
    let mut h0 = 1.0;
    if n == 0 {
        return h0;
    }
    let mut h1 = 2.0 * x;
    for k in 1..n {
        let h2 = 2.0 * x * h1 - 2.0 * k as f64 * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() < tol, "{a} vs {b}");
    }

    #[test]
    fn expm_of_zero_and_pauli() {
        let z = Array2::zeros((3, 3));
        let e = expm(&z);
        assert!(fro_norm(&(&e - &identity(3))) < 1e-14);

        // exp(i theta sigma_x) = cos(theta) I + i sin(theta) sigma_x
        let theta = 0.7;
        let mut sx = Array2::zeros((2, 2));
        sx[[0, 1]] = C64::new(0.0, theta);
        sx[[1, 0]] = C64::new(0.0, theta);
        let e = expm(&sx);
        approx(e[[0, 0]].re, theta.cos(), 1e-14);
        approx(e[[0, 1]].im, theta.sin(), 1e-14);
    }

    #[test]
    fn expm_inverse_product() {
        let mut a: CMat = Array2::zeros((4, 4));
        for i in 0..4 {
            for j in 0..4 {
                a[[i, j]] = C64::new(
                    0.3 * ((i * 7 + j * 3) % 5) as f64 - 0.5,
                    0.2 * ((i + 2 * j) % 3) as f64,
                );
            }
        }
        let e = expm(&a);
        let em = expm(&a.mapv(|z| -z));
        assert!(fro_norm(&(e.dot(&em) - identity(4))) < 1e-12);
    }

    #[test]
    fn eigh_reconstructs() {
        let n = 6;
        let mut a: CMat = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                let re = ((i * 13 + j * 5) % 7) as f64 - 3.0;
                let im = ((i * 3 + j * 11) % 5) as f64 - 2.0;
                a[[i, j]] = C64::new(re, if i == j { 0.0 } else { im });
            }
        }
        let h = (&a + &adjoint(&a)).mapv(|z| 0.5 * z);
        let (w, v) = eigh(&h);
        let mut d: CMat = Array2::zeros((n, n));
        for i in 0..n {
            d[[i, i]] = C64::new(w[i], 0.0);
        }
        let rec = v.dot(&d).dot(&adjoint(&v));
        assert!(fro_norm(&(&rec - &h)) < 1e-12 * fro_norm(&h).max(1.0));
        let unit = v.dot(&adjoint(&v));
        assert!(fro_norm(&(&unit - &identity(n))) < 1e-13);
        for k in 1..n {
            assert!(w[k] >= w[k - 1]);
        }
    }

    #[test]
    fn gauss_hermite_moments() {
        let (x, w) = gauss_hermite(40);
        let m0: f64 = w.iter().sum();
        approx(m0, std::f64::consts::PI.sqrt(), 1e-13);
        let m2: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi * xi).sum();
        approx(m2, 0.5 * std::f64::consts::PI.sqrt(), 1e-13);
        let m4: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(4)).sum();
        approx(m4, 0.75 * std::f64::consts::PI.sqrt(), 1e-12);
    }

    #[test]
    fn gauss_hermite_200_normalizes_hermite_functions() {
        let (x, w) = gauss_hermite(200);
        for n in [0usize, 1, 3] {
            let norm: f64 = x
                .iter()
                .zip(&w)
                .map(|(xi, wi)| {
                    let h = hermite(n, *xi);
                    wi * h * h
                })
                .sum();
            let expect =
                2f64.powi(n as i32) * (1..=n).product::<usize>().max(1) as f64 * std::f64::consts::PI.sqrt();
            approx(norm / expect, 1.0, 1e-12);
        }
    }
}
