//! The four-generator algebra of the coupled-oscillator model and its
//! truncated Fock-space matrix representations.
//!
//! The generators are the two oscillator Hamiltonians `K1`, `K2`, the
//! Hermitian coupling `K3 = (xy + px py)/2` and the angular-momentum-like
//! `K4 = (x py - y px)/2`. They close under commutation:
//!
//! ```text
//! [K1,K2] = 0      [K1,K3] =  i K4     [K1,K4] = -i K3
//! [K2,K3] = -i K4  [K2,K4] =  i K3     [K3,K4] =  i (K1 - K2)/2
//! ```
//!
//! In ladder form `K3 = (A + A')/2` and `K4 = i(A' - A)/2` with
//! `A = ax' ay`, so every generator preserves the total quantum number
//! `N = nx + ny`. Truncating at `n` levels per mode therefore keeps every
//! block with `N <= n - 1` exact, while blocks that reach the cutoff are
//! corrupted; the block decomposition in [`BlockRep`] exploits this.

use crate::dd::{CDd, CdMat, Dd};
use crate::linalg::{self, CMat};
use ndarray::linalg::kron;
use ndarray::Array2;
use num_complex::Complex64 as C64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AlgebraError {
    #[error("truncation n = {n} too small; need n >= {min}")]
    TruncationTooSmall { n: usize, min: usize },
    #[error("margin {margin} must be smaller than truncation {n}")]
    MarginTooLarge { margin: usize, n: usize },
    #[error("relation {relation} residual {residual:e} exceeds tolerance {tol:e}")]
    RelationFailed {
        relation: &'static str,
        residual: f64,
        tol: f64,
    },
    #[error("operation requires a {expected}-mode representation")]
    WrongModeCount { expected: usize },
}

/// Index of a generator in the `K1..K4` basis.
pub const K1: usize = 0;
pub const K2: usize = 1;
pub const K3: usize = 2;
pub const K4: usize = 3;

/// Element of the complex span of the generators `K1..K4`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KVector {
    pub coeffs: [C64; 4],
}

impl KVector {
    pub fn zero() -> KVector {
        KVector::default()
    }

    pub fn basis(i: usize) -> KVector {
        let mut v = KVector::default();
        v.coeffs[i] = C64::new(1.0, 0.0);
        v
    }

    pub fn new(coeffs: [C64; 4]) -> KVector {
        KVector { coeffs }
    }

    pub fn scale(&self, s: C64) -> KVector {
        let mut out = *self;
        for c in out.coeffs.iter_mut() {
            *c *= s;
        }
        out
    }

    pub fn add(&self, rhs: &KVector) -> KVector {
        let mut out = *self;
        for (a, b) in out.coeffs.iter_mut().zip(rhs.coeffs.iter()) {
            *a += b;
        }
        out
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// `[K_a, K_b]` expanded in the generator basis.
fn basis_commutator(a: usize, b: usize) -> KVector {
    let i = C64::new(0.0, 1.0);
    let mut v = KVector::zero();
    match (a, b) {
        (K1, K3) => v.coeffs[K4] = i,
        (K1, K4) => v.coeffs[K3] = -i,
        (K2, K3) => v.coeffs[K4] = -i,
        (K2, K4) => v.coeffs[K3] = i,
        (K3, K4) => {
            v.coeffs[K1] = 0.5 * i;
            v.coeffs[K2] = -0.5 * i;
        }
        _ => {}
    }
    if a > b {
        return basis_commutator(b, a).scale(C64::new(-1.0, 0.0));
    }
    v
}

/// Commutator of two algebra elements via the structure constants.
pub fn commutator_k(a: &KVector, b: &KVector) -> KVector {
    let mut out = KVector::zero();
    for ia in 0..4 {
        if a.coeffs[ia] == C64::new(0.0, 0.0) {
            continue;
        }
        for ib in 0..4 {
            if ib == ia || b.coeffs[ib] == C64::new(0.0, 0.0) {
                continue;
            }
            let c = basis_commutator(ia, ib).scale(a.coeffs[ia] * b.coeffs[ib]);
            out = out.add(&c);
        }
    }
    out
}

/// Named operator matrices of a truncated Fock representation.
#[derive(Debug, Clone)]
pub struct MatrixRep {
    pub dim_per_mode: usize,
    pub mode_count: usize,
    pub interior_margin: usize,
    /// 2-mode: `[x, y, px, py, K1, K2, K3, K4]`; 1-mode: `[x, p, p2, p3, xp2]`.
    mats: Vec<CMat>,
}

/// Names into [`MatrixRep::mat`] for the 2-mode representation.
pub mod two_mode {
    pub const X: usize = 0;
    pub const Y: usize = 1;
    pub const PX: usize = 2;
    pub const PY: usize = 3;
    pub const KMAT: [usize; 4] = [4, 5, 6, 7];
}

/// Names into [`MatrixRep::mat`] for the 1-mode (quartic) representation.
pub mod one_mode {
    pub const X: usize = 0;
    pub const P: usize = 1;
    pub const P2: usize = 2;
    pub const P3: usize = 3;
    pub const XP2: usize = 4;
}

fn ladder(n: usize) -> CMat {
    let mut a: CMat = Array2::zeros((n, n));
    for k in 1..n {
        a[[k - 1, k]] = C64::new((k as f64).sqrt(), 0.0);
    }
    a
}

impl MatrixRep {
    /// Two-mode representation with `x = (a + a')/sqrt(2)`,
    /// `p = i(a' - a)/sqrt(2)` per mode and the `K` operators formed from
    /// their defining quadratic expressions.
    pub fn fock_2mode(n: usize, margin: usize) -> Result<MatrixRep, AlgebraError> {
        if n < 4 {
            return Err(AlgebraError::TruncationTooSmall { n, min: 4 });
        }
        if margin >= n {
            return Err(AlgebraError::MarginTooLarge { margin, n });
        }
        let a = ladder(n);
        let ad = linalg::adjoint(&a);
        let inv_sqrt2 = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let i = C64::new(0.0, 1.0);
        let x1 = (&a + &ad).mapv(|z| z * inv_sqrt2);
        let p1 = (&ad - &a).mapv(|z| z * i * inv_sqrt2);
        let eye = linalg::identity(n);

        let x = kron(&x1, &eye);
        let y = kron(&eye, &x1);
        let px = kron(&p1, &eye);
        let py = kron(&eye, &p1);

        // The defining quadratics reduce to ladder bilinears: K1 = nx + 1/2,
        // K2 = ny + 1/2, K3 = (A + A')/2 and K4 = i(A' - A)/2 with
        // A = ax' ay. Storing those forms keeps every sector N <= n - 1 of
        // the truncation exact; products of the truncated x and p matrices
        // would corrupt the top Fock level. Agreement with the quadratic
        // expressions on the interior is covered by tests.
        let mut num = Array2::zeros((n, n));
        for k in 0..n {
            num[[k, k]] = C64::new(k as f64 + 0.5, 0.0);
        }
        let k1 = kron(&num, &eye);
        let k2 = kron(&eye, &num);
        let big_a = kron(&ad, &a);
        let big_ad = linalg::adjoint(&big_a);
        let half = C64::new(0.5, 0.0);
        let half_i = C64::new(0.0, 0.5);
        let k3 = (&big_a + &big_ad).mapv(|z| z * half);
        let k4 = (&big_ad - &big_a).mapv(|z| z * half_i);

        Ok(MatrixRep {
            dim_per_mode: n,
            mode_count: 2,
            interior_margin: margin,
            mats: vec![x, y, px, py, k1, k2, k3, k4],
        })
    }

    /// One-mode representation for the quartic model: `x`, `p`, powers of the
    /// truncated `p` matrix (so they commute exactly), and `{x, p^2}`.
    pub fn fock_1mode(n: usize, margin: usize) -> Result<MatrixRep, AlgebraError> {
        if n < 8 {
            return Err(AlgebraError::TruncationTooSmall { n, min: 8 });
        }
        if margin >= n {
            return Err(AlgebraError::MarginTooLarge { margin, n });
        }
        let a = ladder(n);
        let ad = linalg::adjoint(&a);
        let inv_sqrt2 = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let i = C64::new(0.0, 1.0);
        let x = (&a + &ad).mapv(|z| z * inv_sqrt2);
        let p = (&ad - &a).mapv(|z| z * i * inv_sqrt2);
        let p2 = p.dot(&p);
        let p3 = p2.dot(&p);
        let xp2 = linalg::anticommutator(&x, &p2);
        Ok(MatrixRep {
            dim_per_mode: n,
            mode_count: 1,
            interior_margin: margin,
            mats: vec![x, p, p2, p3, xp2],
        })
    }

    pub fn dim(&self) -> usize {
        self.dim_per_mode.pow(self.mode_count as u32)
    }

    pub fn mat(&self, which: usize) -> &CMat {
        &self.mats[which]
    }

    pub fn k_mat(&self, i: usize) -> &CMat {
        assert_eq!(self.mode_count, 2);
        &self.mats[two_mode::KMAT[i]]
    }

    /// Matrix of an algebra element.
    pub fn mat_of(&self, v: &KVector) -> CMat {
        let mut out: CMat = Array2::zeros((self.dim(), self.dim()));
        for i in 0..4 {
            if v.coeffs[i] != C64::new(0.0, 0.0) {
                out = out + self.k_mat(i).mapv(|z| z * v.coeffs[i]);
            }
        }
        out
    }

    /// Flat indices whose Fock quantum numbers stay below
    /// `dim_per_mode - interior_margin` in every mode.
    pub fn interior_indices(&self) -> Vec<usize> {
        let cut = self.dim_per_mode - self.interior_margin;
        match self.mode_count {
            1 => (0..cut).collect(),
            2 => {
                let n = self.dim_per_mode;
                let mut idx = Vec::new();
                for nx in 0..cut {
                    for ny in 0..cut {
                        idx.push(nx * n + ny);
                    }
                }
                idx
            }
            _ => unreachable!(),
        }
    }

    /// Restriction of `m` to the interior index set.
    pub fn restrict(&self, m: &CMat) -> CMat {
        let idx = self.interior_indices();
        let mut out = Array2::zeros((idx.len(), idx.len()));
        for (r, &i) in idx.iter().enumerate() {
            for (c, &j) in idx.iter().enumerate() {
                out[[r, c]] = m[[i, j]];
            }
        }
        out
    }
}

/// Outcome of checking one commutation relation on a representation.
#[derive(Debug, Clone)]
pub struct RelationCheck {
    pub relation: &'static str,
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct AlgebraReport {
    pub checks: Vec<RelationCheck>,
    pub tol: f64,
}

impl AlgebraReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.residual < self.tol)
    }

    pub fn worst(&self) -> &RelationCheck {
        self.checks
            .iter()
            .max_by(|a, b| a.residual.partial_cmp(&b.residual).unwrap())
            .unwrap()
    }
}

const RELATIONS: [(&str, usize, usize); 6] = [
    ("[K1,K2]", K1, K2),
    ("[K1,K3]", K1, K3),
    ("[K1,K4]", K1, K4),
    ("[K2,K3]", K2, K3),
    ("[K2,K4]", K2, K4),
    ("[K3,K4]", K3, K4),
];

/// Check all six commutation relations of the generator algebra on the
/// interior projection of a 2-mode representation. The residual per relation
/// is `||[Ka,Kb] - expected|| / max(||expected||, 1)` in Frobenius norm.
pub fn verify_algebra(rep: &MatrixRep, tol: f64) -> Result<AlgebraReport, AlgebraError> {
    verify_algebra_with(rep, tol, |i| rep.k_mat(i).clone())
}

/// Same as [`verify_algebra`] but with the generator matrices supplied by a
/// closure, so defect-injection tests can swap one out.
pub fn verify_algebra_with(
    rep: &MatrixRep,
    tol: f64,
    k_of: impl Fn(usize) -> CMat,
) -> Result<AlgebraReport, AlgebraError> {
    if rep.mode_count != 2 {
        return Err(AlgebraError::WrongModeCount { expected: 2 });
    }
    let ks: Vec<CMat> = (0..4).map(k_of).collect();
    let mut checks = Vec::new();
    for (name, a, b) in RELATIONS {
        let lhs = linalg::commutator(&ks[a], &ks[b]);
        let expect_v = basis_commutator(a, b);
        let mut expect: CMat = Array2::zeros((rep.dim(), rep.dim()));
        for i in 0..4 {
            if expect_v.coeffs[i] != C64::new(0.0, 0.0) {
                expect = expect + ks[i].mapv(|z| z * expect_v.coeffs[i]);
            }
        }
        let diff = rep.restrict(&(&lhs - &expect));
        let denom = linalg::fro_norm(&rep.restrict(&expect)).max(1.0);
        checks.push(RelationCheck {
            relation: name,
            residual: linalg::fro_norm(&diff) / denom,
        });
    }
    let report = AlgebraReport { checks, tol };
    if let Some(bad) = report.checks.iter().find(|c| c.residual >= tol) {
        return Err(AlgebraError::RelationFailed {
            relation: bad.relation,
            residual: bad.residual,
            tol,
        });
    }
    Ok(report)
}

/// Generator matrices within one total-quantum-number sector.
///
/// Block `N` acts on `{|k, N-k>}` for `k = 0..N`; all four generators (and
/// hence every model Hamiltonian and Dyson map) are block-diagonal in `N`.
/// Entries are kept in double-double precision for the verification kernels.
#[derive(Debug, Clone)]
pub struct KBlock {
    /// Total quantum number of the sector.
    pub n_total: usize,
    pub k: [CdMat; 4],
}

impl KBlock {
    pub fn new(n_total: usize) -> KBlock {
        let dim = n_total + 1;
        let mut k1 = CdMat::zeros(dim);
        let mut k2 = CdMat::zeros(dim);
        let mut k3 = CdMat::zeros(dim);
        let mut k4 = CdMat::zeros(dim);
        for k in 0..dim {
            k1[(k, k)] = CDd::new(Dd::from_f64(k as f64 + 0.5), Dd::ZERO);
            k2[(k, k)] = CDd::new(Dd::from_f64((n_total - k) as f64 + 0.5), Dd::ZERO);
        }
        // A = ax' ay has A[k+1, k] = sqrt((k+1)(N-k)).
        for k in 0..n_total {
            let amp = Dd::from_f64(((k + 1) * (n_total - k)) as f64).sqrt();
            let half = amp * Dd::from_f64(0.5);
            // K3 = (A + A')/2
            k3[(k + 1, k)] = CDd::new(half, Dd::ZERO);
            k3[(k, k + 1)] = CDd::new(half, Dd::ZERO);
            // K4 = i (A' - A)/2
            k4[(k + 1, k)] = CDd::new(Dd::ZERO, -half);
            k4[(k, k + 1)] = CDd::new(Dd::ZERO, half);
        }
        KBlock {
            n_total,
            k: [k1, k2, k3, k4],
        }
    }

    pub fn dim(&self) -> usize {
        self.n_total + 1
    }

    /// `sum_i c_i K_i` within the block.
    pub fn combine(&self, coeffs: [C64; 4]) -> CdMat {
        let dim = self.dim();
        let mut out = CdMat::zeros(dim);
        for (i, c) in coeffs.iter().enumerate() {
            if c.re == 0.0 && c.im == 0.0 {
                continue;
            }
            let s = CDd::from_f64(c.re, c.im);
            out = out.add(&self.k[i].scale(s));
        }
        out
    }
}

/// All exact sectors of a 2-mode truncation, `N = 0 ..= n_max_total`.
#[derive(Debug, Clone)]
pub struct BlockRep {
    pub blocks: Vec<KBlock>,
}

impl BlockRep {
    pub fn up_to(n_max_total: usize) -> BlockRep {
        BlockRep {
            blocks: (0..=n_max_total).map(KBlock::new).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn printed_relations() {
        let k1 = KVector::basis(K1);
        let k2 = KVector::basis(K2);
        let k3 = KVector::basis(K3);
        let k4 = KVector::basis(K4);
        assert_eq!(commutator_k(&k1, &k2), KVector::zero());
        let c34 = commutator_k(&k3, &k4);
        assert_eq!(c34.coeffs[K1], c(0.0, 0.5));
        assert_eq!(c34.coeffs[K2], c(0.0, -0.5));
        assert_eq!(commutator_k(&k1, &k1), KVector::zero());
        let c13 = commutator_k(&k1, &k3);
        assert_eq!(c13.coeffs[K4], c(0.0, 1.0));
    }

    #[test]
    fn rep_rejects_small_truncations() {
        assert!(MatrixRep::fock_2mode(3, 0).is_err());
        assert!(MatrixRep::fock_1mode(7, 0).is_err());
        assert!(MatrixRep::fock_2mode(8, 8).is_err());
    }

    #[test]
    fn k1_diagonal_is_oscillator_spectrum() {
        let rep = MatrixRep::fock_2mode(4, 0).unwrap();
        let k1 = rep.k_mat(K1);
        for nx in 0..4 {
            for ny in 0..4 {
                let idx = nx * 4 + ny;
                assert!(
                    (k1[[idx, idx]].re - (nx as f64 + 0.5)).abs() < 1e-13,
                    "nx = {nx}"
                );
            }
        }
    }

    #[test]
    fn k_matrices_hermitian() {
        let rep = MatrixRep::fock_2mode(6, 0).unwrap();
        for i in 0..4 {
            assert!(linalg::hermiticity_defect(rep.k_mat(i)) < 1e-13);
        }
        let rep1 = MatrixRep::fock_1mode(8, 0).unwrap();
        assert!(linalg::hermiticity_defect(rep1.mat(one_mode::XP2)) < 1e-13);
    }

    #[test]
    fn k4_couples_only_exchange_pairs() {
        let n = 4;
        let rep = MatrixRep::fock_2mode(n, 0).unwrap();
        let k4 = rep.k_mat(K4);
        for nx in 0..n {
            for ny in 0..n {
                for mx in 0..n {
                    for my in 0..n {
                        let v = k4[[nx * n + ny, mx * n + my]].norm();
                        let exchange = (mx + 1 == nx && ny + 1 == my)
                            || (nx + 1 == mx && my + 1 == ny);
                        if !exchange {
                            assert!(v < 1e-14, "unexpected K4 entry at ({nx},{ny})<-({mx},{my})");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn commutator_residual_on_interior() {
        let rep = MatrixRep::fock_2mode(8, 2).unwrap();
        let lhs = linalg::commutator(rep.k_mat(K3), rep.k_mat(K4));
        let expect = (rep.k_mat(K1) - rep.k_mat(K2)).mapv(|z| z * c(0.0, 0.5));
        let diff = rep.restrict(&(&lhs - &expect));
        assert!(linalg::fro_norm(&diff) < 1e-12);
    }

    #[test]
    fn verify_algebra_passes_and_names_defects() {
        let rep = MatrixRep::fock_2mode(12, 3).unwrap();
        let report = verify_algebra(&rep, 1e-10).unwrap();
        assert!(report.passed());

        // margin 0 keeps the corrupted boundary levels in the norm
        let rep0 = MatrixRep::fock_2mode(12, 0).unwrap();
        assert!(verify_algebra(&rep0, 1e-10).is_err());

        // zeroing K4 must be blamed on a relation that involves it
        let err = verify_algebra_with(&rep, 1e-10, |i| {
            if i == K4 {
                Array2::zeros((rep.dim(), rep.dim()))
            } else {
                rep.k_mat(i).clone()
            }
        })
        .unwrap_err();
        match err {
            AlgebraError::RelationFailed { relation, .. } => {
                assert_eq!(relation, "[K1,K3]");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn stored_k_match_defining_quadratics_on_interior() {
        let rep = MatrixRep::fock_2mode(8, 1).unwrap();
        let half = c(0.5, 0.0);
        let x = rep.mat(two_mode::X);
        let y = rep.mat(two_mode::Y);
        let px = rep.mat(two_mode::PX);
        let py = rep.mat(two_mode::PY);
        let k1q = (px.dot(px) + x.dot(x)).mapv(|z| z * half);
        let k3q = (x.dot(y) + px.dot(py)).mapv(|z| z * half);
        let k4q = (x.dot(py) - y.dot(px)).mapv(|z| z * half);
        for (stored, quad) in [(K1, k1q), (K3, k3q), (K4, k4q)] {
            let diff = rep.restrict(&(rep.k_mat(stored) - &quad));
            assert!(
                linalg::fro_norm(&diff) < 1e-12,
                "generator {stored} deviates from its quadratic form"
            );
        }
    }

    #[test]
    fn center_commutes_on_interior() {
        let rep = MatrixRep::fock_2mode(12, 3).unwrap();
        let z = rep.k_mat(K1) + rep.k_mat(K2);
        for i in 0..4 {
            let comm = rep.restrict(&linalg::commutator(&z, rep.k_mat(i)));
            assert!(linalg::fro_norm(&comm) < 1e-10);
        }
    }

    #[test]
    fn one_mode_identities() {
        let rep = MatrixRep::fock_1mode(16, 3).unwrap();
        let x = rep.mat(one_mode::X);
        let p = rep.mat(one_mode::P);
        let comm = rep.restrict(&linalg::commutator(x, p));
        let interior = rep.interior_indices().len();
        let eye = linalg::identity(interior).mapv(|z| z * c(0.0, 1.0));
        assert!(linalg::fro_norm(&(&comm - &eye)) < 1e-12);

        // p3 is exactly the cube of the stored p matrix
        let p3 = rep.mat(one_mode::P3);
        let cube = p.dot(p).dot(p);
        assert_eq!(linalg::fro_norm(&(p3 - &cube)), 0.0);
    }

    #[test]
    fn blocks_match_full_representation() {
        let n = 8;
        let rep = MatrixRep::fock_2mode(n, 0).unwrap();
        let blocks = BlockRep::up_to(n - 1);
        for block in &blocks.blocks {
            let nt = block.n_total;
            // flat index of |k, N-k> is k*n + (N-k)
            let flat: Vec<usize> = (0..=nt).map(|k| k * n + (nt - k)).collect();
            for gi in 0..4 {
                let full = rep.k_mat(gi);
                for (r, &fr) in flat.iter().enumerate() {
                    for (col, &fc) in flat.iter().enumerate() {
                        let want = full[[fr, fc]];
                        let got = block.k[gi][(r, col)];
                        assert!(
                            (got.re.to_f64() - want.re).abs() < 1e-13
                                && (got.im.to_f64() - want.im).abs() < 1e-13,
                            "block {nt} generator {gi} entry ({r},{col})"
                        );
                    }
                }
            }
        }
    }
}
