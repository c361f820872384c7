//! Double-double arithmetic (~31 significant digits) and small complex
//! matrix kernels built on it.
//!
//! The Dyson-map similarity transformations amplify rounding by the condition
//! number of the map, which grows like `exp(|gamma| * spread(Q))`. Plain f64
//! products lose the residual signal once that factor passes ~1e10, so the
//! matrix verification pipeline runs its products and exponentials in
//! double-double precision. Only `add`/`mul`/`div`/`sqrt` and a matrix
//! exponential by scaling-and-squaring are needed; this is not a general
//! multiprecision library.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`.
#[derive(Copy, Clone, Debug, Default, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let err = b - (s - a);
    (s, err)
}

// Relies on mul_add being a fused multiply-add (single rounding), which the
// standard library guarantees.
#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let err = a.mul_add(b, -p);
    (p, err)
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    #[inline]
    pub fn from_f64(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub fn abs(self) -> Dd {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            -self
        } else {
            self
        }
    }

    pub fn sqrt(self) -> Dd {
        if self.hi == 0.0 && self.lo == 0.0 {
            return Dd::ZERO;
        }
        assert!(self.hi > 0.0, "dd sqrt of negative value");
        // One Newton step on a f64 seed doubles the correct digits.
        let s = self.hi.sqrt();
        let s_dd = Dd::from_f64(s);
        let r = (self - s_dd * s_dd) * Dd::from_f64(0.5 / s);
        s_dd + r
    }

    /// Exact scaling by a power of two.
    #[inline]
    pub fn ldexp(self, k: i32) -> Dd {
        let f = (k as f64).exp2();
        Dd {
            hi: self.hi * f,
            lo: self.lo * f,
        }
    }

    /// `ln 2` to double-double precision.
    pub const LN2: Dd = Dd {
        hi: 0.693_147_180_559_945_3,
        lo: 2.319_046_813_846_299_6e-17,
    };

    /// `2 pi` to double-double precision.
    pub const TWO_PI: Dd = Dd {
        hi: 6.283_185_307_179_586,
        lo: 2.449_293_598_294_706_4e-16,
    };

    /// Exponential by range reduction over `ln 2` and a Taylor tail.
    pub fn exp(self) -> Dd {
        if self.hi == 0.0 && self.lo == 0.0 {
            return Dd::ONE;
        }
        let k = (self.hi / Dd::LN2.hi).round();
        let r = self - Dd::LN2 * Dd::from_f64(k);
        let mut sum = Dd::ONE;
        let mut term = Dd::ONE;
        for j in 1..40 {
            term = term * r * (Dd::ONE / Dd::from_f64(j as f64));
            sum = sum + term;
            if term.abs().to_f64() < 1e-35 {
                break;
            }
        }
        sum.ldexp(k as i32)
    }

    /// `(sin, cos)` by reduction modulo `2 pi` and Taylor tails.
    pub fn sin_cos(self) -> (Dd, Dd) {
        let k = (self.hi / Dd::TWO_PI.hi).round();
        let r = self - Dd::TWO_PI * Dd::from_f64(k);
        let r2 = r * r;
        let mut s = r;
        let mut term = r;
        let mut j = 1.0f64;
        loop {
            term = term * r2 * (Dd::ONE / Dd::from_f64((j + 1.0) * (j + 2.0)));
            term = -term;
            s = s + term;
            j += 2.0;
            if term.abs().to_f64() < 1e-35 || j > 60.0 {
                break;
            }
        }
        let mut c = Dd::ONE;
        let mut term = Dd::ONE;
        let mut j = 0.0f64;
        loop {
            term = term * r2 * (Dd::ONE / Dd::from_f64((j + 1.0) * (j + 2.0)));
            term = -term;
            c = c + term;
            j += 2.0;
            if term.abs().to_f64() < 1e-35 || j > 60.0 {
                break;
            }
        }
        (s, c)
    }
}

impl Add for Dd {
    type Output = Dd;
    #[inline]
    fn add(self, rhs: Dd) -> Dd {
        let (s1, s2) = two_sum(self.hi, rhs.hi);
        let (t1, t2) = two_sum(self.lo, rhs.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        let (hi, lo) = quick_two_sum(s1, s2 + t2);
        Dd { hi, lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    #[inline]
    fn sub(self, rhs: Dd) -> Dd {
        self + (-rhs)
    }
}

impl Neg for Dd {
    type Output = Dd;
    #[inline]
    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Mul for Dd {
    type Output = Dd;
    #[inline]
    fn mul(self, rhs: Dd) -> Dd {
        let (p1, p2) = two_prod(self.hi, rhs.hi);
        let p2 = p2 + self.hi * rhs.lo + self.lo * rhs.hi;
        let (hi, lo) = quick_two_sum(p1, p2);
        Dd { hi, lo }
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, rhs: Dd) -> Dd {
        let q1 = self.hi / rhs.hi;
        let r = self - rhs * Dd::from_f64(q1);
        let q2 = r.hi / rhs.hi;
        let r = r - rhs * Dd::from_f64(q2);
        let q3 = r.hi / rhs.hi;
        let (s, e) = quick_two_sum(q1, q2);
        Dd { hi: s, lo: e } + Dd::from_f64(q3)
    }
}

/// Complex number with double-double components.
#[derive(Copy, Clone, Debug, Default, PartialEq)]
pub struct CDd {
    pub re: Dd,
    pub im: Dd,
}

impl CDd {
    pub const ZERO: CDd = CDd {
        re: Dd::ZERO,
        im: Dd::ZERO,
    };
    pub const ONE: CDd = CDd {
        re: Dd::ONE,
        im: Dd::ZERO,
    };

    #[inline]
    pub fn new(re: Dd, im: Dd) -> CDd {
        CDd { re, im }
    }

    #[inline]
    pub fn from_f64(re: f64, im: f64) -> CDd {
        CDd {
            re: Dd::from_f64(re),
            im: Dd::from_f64(im),
        }
    }

    #[inline]
    pub fn conj(self) -> CDd {
        CDd {
            re: self.re,
            im: -self.im,
        }
    }

    #[inline]
    pub fn norm_sqr(self) -> Dd {
        self.re * self.re + self.im * self.im
    }

    #[inline]
    pub fn abs(self) -> f64 {
        self.norm_sqr().to_f64().sqrt()
    }

    #[inline]
    pub fn scale(self, s: Dd) -> CDd {
        CDd {
            re: self.re * s,
            im: self.im * s,
        }
    }
}

impl Add for CDd {
    type Output = CDd;
    #[inline]
    fn add(self, rhs: CDd) -> CDd {
        CDd {
            re: self.re + rhs.re,
            im: self.im + rhs.im,
        }
    }
}

impl Sub for CDd {
    type Output = CDd;
    #[inline]
    fn sub(self, rhs: CDd) -> CDd {
        CDd {
            re: self.re - rhs.re,
            im: self.im - rhs.im,
        }
    }
}

impl Neg for CDd {
    type Output = CDd;
    #[inline]
    fn neg(self) -> CDd {
        CDd {
            re: -self.re,
            im: -self.im,
        }
    }
}

impl Mul for CDd {
    type Output = CDd;
    #[inline]
    fn mul(self, rhs: CDd) -> CDd {
        CDd {
            re: self.re * rhs.re - self.im * rhs.im,
            im: self.re * rhs.im + self.im * rhs.re,
        }
    }
}

impl Div for CDd {
    type Output = CDd;
    fn div(self, rhs: CDd) -> CDd {
        let d = rhs.norm_sqr();
        let n = self * rhs.conj();
        CDd {
            re: n.re / d,
            im: n.im / d,
        }
    }
}

/// Dense square complex matrix in double-double precision, row-major.
#[derive(Clone, Debug)]
pub struct CdMat {
    pub n: usize,
    pub data: Vec<CDd>,
}

impl CdMat {
    pub fn zeros(n: usize) -> CdMat {
        CdMat {
            n,
            data: vec![CDd::ZERO; n * n],
        }
    }

    pub fn identity(n: usize) -> CdMat {
        let mut m = CdMat::zeros(n);
        for i in 0..n {
            m[(i, i)] = CDd::ONE;
        }
        m
    }

    pub fn from_f64(n: usize, f: impl Fn(usize, usize) -> (f64, f64)) -> CdMat {
        let mut m = CdMat::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let (re, im) = f(i, j);
                m[(i, j)] = CDd::from_f64(re, im);
            }
        }
        m
    }

    pub fn matmul(&self, rhs: &CdMat) -> CdMat {
        assert_eq!(self.n, rhs.n);
        let n = self.n;
        let mut out = CdMat::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a.re.hi == 0.0 && a.re.lo == 0.0 && a.im.hi == 0.0 && a.im.lo == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] = out[(i, j)] + a * rhs[(k, j)];
                }
            }
        }
        out
    }

    pub fn add(&self, rhs: &CdMat) -> CdMat {
        assert_eq!(self.n, rhs.n);
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(rhs.data.iter()) {
            *a = *a + *b;
        }
        out
    }

    pub fn sub(&self, rhs: &CdMat) -> CdMat {
        assert_eq!(self.n, rhs.n);
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(rhs.data.iter()) {
            *a = *a - *b;
        }
        out
    }

    pub fn scale(&self, s: CDd) -> CdMat {
        let mut out = self.clone();
        for a in out.data.iter_mut() {
            *a = *a * s;
        }
        out
    }

    pub fn adjoint(&self) -> CdMat {
        let n = self.n;
        let mut out = CdMat::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] = self[(j, i)].conj();
            }
        }
        out
    }

    /// Frobenius norm, returned in f64 (enough for residual reporting).
    pub fn fro_norm(&self) -> f64 {
        let mut acc = Dd::ZERO;
        for a in &self.data {
            acc = acc + a.norm_sqr();
        }
        acc.to_f64().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|a| a.abs()).fold(0.0, f64::max)
    }

    fn one_norm(&self) -> f64 {
        let n = self.n;
        let mut best = 0.0f64;
        for j in 0..n {
            let mut col = 0.0;
            for i in 0..n {
                col += self[(i, j)].abs();
            }
            best = best.max(col);
        }
        best
    }
}

impl std::ops::Index<(usize, usize)> for CdMat {
    type Output = CDd;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &CDd {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CdMat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut CDd {
        &mut self.data[i * self.n + j]
    }
}

/// Matrix exponential by scaling-and-squaring with a Taylor series evaluated
/// in double-double precision.
///
/// The series is summed until terms fall below 1e-35 relative to unity, which
/// together with `||A/2^s|| <= 0.5` keeps the truncation error below the
/// double-double rounding floor. Intended for the normal-ish exponents that
/// appear in Dyson maps; no Pade machinery is needed at this precision.
pub fn expm_dd(a: &CdMat) -> CdMat {
    let n = a.n;
    let norm = a.one_norm();
    let s = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let a_scaled = a.scale(CDd {
        re: Dd::ONE.ldexp(-s),
        im: Dd::ZERO,
    });

    let mut result = CdMat::identity(n);
    let mut term = CdMat::identity(n);
    let mut k = 1usize;
    loop {
        term = term.matmul(&a_scaled);
        let inv_k = Dd::ONE / Dd::from_f64(k as f64);
        term = term.scale(CDd {
            re: inv_k,
            im: Dd::ZERO,
        });
        result = result.add(&term);
        let t = term.max_abs();
        if t < 1e-35 || k > 60 {
            break;
        }
        k += 1;
    }
    for _ in 0..s {
        result = result.matmul(&result);
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dd_third_round_trips() {
        let third = Dd::ONE / Dd::from_f64(3.0);
        let back = third * Dd::from_f64(3.0);
        assert!((back - Dd::ONE).abs().to_f64() < 1e-31);
    }

    #[test]
    fn dd_sqrt_two() {
        let r = Dd::from_f64(2.0).sqrt();
        let err = (r * r - Dd::from_f64(2.0)).abs().to_f64();
        assert!(err < 1e-31, "err = {err:e}");
    }

    #[test]
    fn dd_sum_catches_f64_rounding() {
        // 0.1 + 0.2 != 0.3 in f64; in dd the defect is resolved far below 1e-16.
        let s = Dd::from_f64(0.1) + Dd::from_f64(0.2);
        let d = (s - Dd::from_f64(0.3)).abs().to_f64();
        assert!(d > 0.0 && d < 1e-16);
    }

    #[test]
    fn dd_scalar_exp_and_trig() {
        for &x in &[0.0f64, 0.3, -1.7, 10.0, -25.0, 100.0] {
            let e = Dd::from_f64(x).exp();
            let rel = (e.to_f64() - x.exp()).abs() / x.exp();
            assert!(rel < 1e-15, "exp({x}): {rel:e}");
            // exp(x) exp(-x) = 1 to dd accuracy
            let prod = e * Dd::from_f64(-x).exp();
            assert!((prod - Dd::ONE).abs().to_f64() < 1e-29, "x = {x}");
        }
        for &x in &[0.0f64, 0.5, -2.0, 40.0, -150.0] {
            let (s, c) = Dd::from_f64(x).sin_cos();
            assert!((s.to_f64() - x.sin()).abs() < 1e-14, "sin({x})");
            assert!((c.to_f64() - x.cos()).abs() < 1e-14, "cos({x})");
            let pyth = s * s + c * c - Dd::ONE;
            assert!(pyth.abs().to_f64() < 1e-29, "x = {x}");
        }
    }

    #[test]
    fn expm_dd_diagonal() {
        let mut a = CdMat::zeros(2);
        a[(0, 0)] = CDd::from_f64(1.0, 0.0);
        a[(1, 1)] = CDd::from_f64(-2.0, 0.5);
        let e = expm_dd(&a);
        let e00 = e[(0, 0)];
        assert!((e00.re.to_f64() - 1.0f64.exp()).abs() < 1e-15);
        let want = num_complex::Complex64::new(-2.0, 0.5).exp();
        assert!((e[(1, 1)].re.to_f64() - want.re).abs() < 1e-15);
        assert!((e[(1, 1)].im.to_f64() - want.im).abs() < 1e-15);
        assert!(e[(0, 1)].abs() < 1e-30);
    }

    #[test]
    fn expm_dd_inverse_pairs() {
        // exp(A) exp(-A) = I for a stiff Hermitian exponent.
        let n = 4;
        let f = |i: usize, j: usize| -> (f64, f64) {
            if i == j {
                (3.0 * i as f64 - 4.0, 0.0)
            } else if i + 1 == j {
                (0.0, 1.5)
            } else if j + 1 == i {
                (0.0, -1.5)
            } else {
                (0.0, 0.0)
            }
        };
        let a = CdMat::from_f64(n, f);
        let e = expm_dd(&a);
        let em = expm_dd(&a.scale(CDd::from_f64(-1.0, 0.0)));
        let prod = e.matmul(&em);
        let diff = prod.sub(&CdMat::identity(n));
        assert!(diff.fro_norm() < 1e-25, "residual {:e}", diff.fro_norm());
    }
}
