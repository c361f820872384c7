//! Strong-coupling pipeline for the unstable quartic anharmonic oscillator.
//!
//! On the shifted contour the model becomes the non-Hermitian
//!
//! ```text
//! H(t) = p^2 - p/2 + (i/2){x, p^2} + g(t) (x - i)^2,
//! ```
//!
//! and the inverse-power recursion closes exactly on the family
//! `g = sigma^{-3}/2` with `sigma` quadratic in `t` (equivalently
//! `sigma^2 sigma''' = 0`). The resulting map is
//!
//! ```text
//! eta = exp(gamma1 x) exp(gamma2 p^3 + i gamma3 p^2 + i gamma4 p)
//! gamma1 = g'/(6g)          gamma2 = 1/(6g)
//! gamma3 = (12g^3 + g'^2 - g g'')/(4 g' g^2)
//! gamma4 = (g/g')(c1 - ln(g)/2)
//! ```
//!
//! [`recursion_constraints_check`] verifies every order relation of the
//! recursion on a grid; [`quartic_tdde_residual`] verifies at matrix level
//! that the map renders the Hamiltonian Hermitian. Two printed constants are
//! corrected here to the values forced by the rest of the scheme (and
//! confirmed by the matrix check): the inhomogeneity of the `gamma4`
//! equation is `-1/2`, and the closed `g`-equation reads
//! `2 g' g''/g - 14 g'^3/(9 g^2) - g'''/2 = 0`, which is what reduces to
//! `sigma''' = 0` under the parameterization.

use crate::algebra::{one_mode, AlgebraError, MatrixRep};
use crate::coeffs::TimeGrid;
use crate::dd::{CDd, CdMat, Dd};
use crate::linalg;
use num_complex::Complex64 as C64;
use std::io::Write;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum QuarticError {
    #[error("sigma(t) = {sigma} not positive at t = {t}")]
    SigmaNotPositive { sigma: f64, t: f64 },
    #[error("dg/dt vanishes at t = {t}; gamma3 and gamma4 divide by it")]
    StationaryG { t: f64 },
    #[error("exponent norm {norm:.1} (gamma2 |p|^3 = {p3_part:.1}) exceeds ceiling {ceiling:.1}")]
    ExponentOverflow { norm: f64, p3_part: f64, ceiling: f64 },
    #[error("constraint `{name}` residual {residual:e} at t = {t}")]
    ConstraintFailed {
        name: &'static str,
        residual: f64,
        t: f64,
    },
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// The solvable coupling family `g(t) = sigma(t)^{-3} / 2` with
/// `sigma = c1 + c2 t + c3 t^2`.
#[derive(Debug, Clone, Copy)]
pub struct SigmaClass {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl SigmaClass {
    pub fn new(c1: f64, c2: f64, c3: f64) -> SigmaClass {
        SigmaClass { c1, c2, c3 }
    }

    pub fn sigma(&self, t: f64) -> f64 {
        self.c1 + self.c2 * t + self.c3 * t * t
    }

    pub fn sigma_dot(&self, t: f64) -> f64 {
        self.c2 + 2.0 * self.c3 * t
    }

    /// `(g, g', g'', g''')` at `t`; rejects non-positive `sigma`.
    pub fn g_derivs(&self, t: f64) -> Result<[f64; 4], QuarticError> {
        let s = self.sigma(t);
        if s <= 0.0 {
            return Err(QuarticError::SigmaNotPositive { sigma: s, t });
        }
        let s1 = self.sigma_dot(t);
        let s2 = 2.0 * self.c3;
        let inv4 = s.powi(-4);
        let g = 0.5 * s.powi(-3);
        let dg = -1.5 * inv4 * s1;
        let d2g = 6.0 * s.powi(-5) * s1 * s1 - 1.5 * inv4 * s2;
        let d3g = -30.0 * s.powi(-6) * s1.powi(3) + 18.0 * s.powi(-5) * s1 * s2;
        Ok([g, dg, d2g, d3g])
    }

    pub fn g(&self, t: f64) -> Result<f64, QuarticError> {
        Ok(self.g_derivs(t)?[0])
    }
}

/// Residual of the closed coupling equation
/// `2 g' g'' / g - 14 g'^3 / (9 g^2) - g''' / 2` for arbitrary derivative
/// data; vanishes identically on the sigma family.
pub fn g_ode_residual(g: f64, dg: f64, d2g: f64, d3g: f64) -> f64 {
    2.0 * dg * d2g / g - 14.0 * dg.powi(3) / (9.0 * g * g) - 0.5 * d3g
}

/// Sampled exponent coefficients of the quartic map.
#[derive(Debug, Clone)]
pub struct QuarticGammas {
    pub grid: TimeGrid,
    pub c1_const: f64,
    pub g1: Vec<f64>,
    pub g2: Vec<f64>,
    pub g3: Vec<f64>,
    pub g4: Vec<f64>,
}

/// `(gamma1, gamma2, gamma3, gamma4)` at one time.
pub fn gammas_at(sc: &SigmaClass, c1_const: f64, t: f64) -> Result<[f64; 4], QuarticError> {
    let [g, dg, d2g, _] = sc.g_derivs(t)?;
    if dg == 0.0 {
        return Err(QuarticError::StationaryG { t });
    }
    Ok([
        dg / (6.0 * g),
        1.0 / (6.0 * g),
        (12.0 * g.powi(3) + dg * dg - g * d2g) / (4.0 * dg * g * g),
        g / dg * (c1_const - 0.5 * g.ln()),
    ])
}

pub fn quartic_gammas(
    sc: &SigmaClass,
    c1_const: f64,
    grid: &TimeGrid,
) -> Result<QuarticGammas, QuarticError> {
    let mut out = QuarticGammas {
        grid: *grid,
        c1_const,
        g1: Vec::with_capacity(grid.len()),
        g2: Vec::with_capacity(grid.len()),
        g3: Vec::with_capacity(grid.len()),
        g4: Vec::with_capacity(grid.len()),
    };
    for t in grid.times() {
        let [a, b, c, d] = gammas_at(sc, c1_const, t)?;
        out.g1.push(a);
        out.g2.push(b);
        out.g3.push(c);
        out.g4.push(d);
    }
    Ok(out)
}

/// Per-relation outcome of the order-by-order recursion check.
#[derive(Debug, Clone)]
pub struct RecursionReport {
    pub checks: Vec<(&'static str, f64)>,
    pub tol: f64,
}

impl RecursionReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|(_, r)| *r < self.tol)
    }

    pub fn worst(&self) -> (&'static str, f64) {
        self.checks
            .iter()
            .cloned()
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap()
    }
}

/// Verify every printed order relation of the inverse-power recursion on the
/// grid:
///
/// * `gamma1^(1) gamma3^(0) = 1/2` (lowest order),
/// * `gamma1^(2) = -2 (gamma1^(1))^2 gamma3^(1) = 0` given `gamma3^(1) = 0`,
/// * the third-order combination forcing `gamma1^(3) = 0` with
///   `gamma3^(2) = (g'^2 - g g'')/(4 g^2 g')`,
/// * `d(gamma4)/dt + gamma4 (g''/g' - g'/g) = -1/2` (finite differences),
/// * `c g / g'` solving the all-orders homogeneous `gamma4` equation,
/// * the closed `g`-equation residual.
pub fn recursion_constraints_check(
    sc: &SigmaClass,
    c1_const: f64,
    grid: &TimeGrid,
    tol: f64,
) -> Result<RecursionReport, QuarticError> {
    let mut worst: std::collections::BTreeMap<&'static str, f64> = Default::default();
    let mut record = |name: &'static str, value: f64| {
        let e = worst.entry(name).or_insert(0.0);
        if value.abs() > *e {
            *e = value.abs();
        }
    };
    let fd = 1e-4;
    for t in grid.times() {
        let [g, dg, d2g, d3g] = sc.g_derivs(t)?;
        if dg == 0.0 {
            return Err(QuarticError::StationaryG { t });
        }
        let [g1, g2, g3, g4] = gammas_at(sc, c1_const, t)?;

        record("gamma2 = 1/(6g)", g2 - 1.0 / (6.0 * g));
        let g3_zero = 3.0 * g / dg; // zeroth-order part of gamma3
        record("gamma1 gamma3(0) = 1/2", g1 * g3_zero - 0.5);
        // gamma3 = gamma3(0) + gamma3(2), gamma3(1) = 0
        let g3_two = (dg * dg - g * d2g) / (4.0 * g * g * dg);
        record("gamma3 split", g3 - g3_zero - g3_two);
        // gamma1^(2) = -2 (gamma1^(1))^2 gamma3^(1) with gamma3^(1) = 0
        record("gamma1(2) = 0", -2.0 * g1 * g1 * 0.0);
        // third order: the printed combination must vanish
        let gamma1_3 = -g3_two * dg * dg / (18.0 * g * g) + dg.powi(3) / (72.0 * g.powi(4))
            - dg * d2g / (72.0 * g.powi(3));
        record("gamma1(3) = 0", gamma1_3);
        // gamma4 equation by finite differences (fourth order)
        let g4_at = |s: f64| -> Result<f64, QuarticError> { Ok(gammas_at(sc, c1_const, s)?[3]) };
        let dg4 = (-g4_at(t + 2.0 * fd)? + 8.0 * g4_at(t + fd)? - 8.0 * g4_at(t - fd)?
            + g4_at(t - 2.0 * fd)?)
            / (12.0 * fd);
        record(
            "gamma4 drive = -1/2",
            dg4 + g4 * (d2g / dg - dg / g) + 0.5,
        );
        // homogeneous all-orders gamma4 family: u = g/g'
        let u = |s: f64| -> Result<f64, QuarticError> {
            let [gg, dgg, ..] = sc.g_derivs(s)?;
            Ok(gg / dgg)
        };
        let du = (-u(t + 2.0 * fd)? + 8.0 * u(t + fd)? - 8.0 * u(t - fd)? + u(t - 2.0 * fd)?)
            / (12.0 * fd);
        record(
            "gamma4 homogeneous family",
            du + u(t)? * (d2g / dg - dg / g),
        );
        record("g-equation", g_ode_residual(g, dg, d2g, d3g));
    }
    let checks: Vec<(&'static str, f64)> = worst.into_iter().collect();
    let report = RecursionReport { checks, tol };
    if let Some((name, r)) = report.checks.iter().find(|(_, r)| *r >= tol) {
        return Err(QuarticError::ConstraintFailed {
            name,
            residual: *r,
            t: grid.t_start,
        });
    }
    Ok(report)
}

/// One-mode operator set in double-double precision with the exact
/// eigenstructure of the truncated `x` and `p`.
///
/// The truncated `x` and `p` share their spectrum, the roots of the degree-n
/// Hermite polynomial, and their eigenvectors are samples of the orthonormal
/// Hermite functions (with an `i^k` phase for `p`). Exponentials of the
/// commuting `p`-polynomial and of `gamma1 x` therefore reduce to diagonal
/// exponentials in those bases, which keeps the whole verification at
/// double-double accuracy without matrix Taylor series.
pub struct QuarticRep {
    pub n: usize,
    pub margin: usize,
    pub x: CdMat,
    pub p: CdMat,
    pub p2: CdMat,
    pub p3: CdMat,
    pub xp2: CdMat,
    x2: CdMat,
    /// Hermite roots in dd.
    w: Vec<Dd>,
    /// Orthonormal eigenvector matrix of `x` (real entries).
    vx: CdMat,
    /// Eigenvector matrix of `p` (`i^k` phases on `vx`).
    vp: CdMat,
}

impl QuarticRep {
    pub fn new(n: usize, margin: usize) -> Result<QuarticRep, QuarticError> {
        if n < 8 {
            return Err(QuarticError::Algebra(AlgebraError::TruncationTooSmall {
                n,
                min: 8,
            }));
        }
        // ladder and the operator polynomials in dd
        let mut a = CdMat::zeros(n);
        for k in 1..n {
            a[(k - 1, k)] = CDd::new(Dd::from_f64(k as f64).sqrt(), Dd::ZERO);
        }
        let ad = a.adjoint();
        let inv_sqrt2 = Dd::ONE / Dd::from_f64(2.0).sqrt();
        let x = a.add(&ad).scale(CDd::new(inv_sqrt2, Dd::ZERO));
        let p = ad.sub(&a).scale(CDd::new(Dd::ZERO, inv_sqrt2));
        let p2 = p.matmul(&p);
        let p3 = p2.matmul(&p);
        let x2 = x.matmul(&x);
        let xp2 = x.matmul(&p2).add(&p2.matmul(&x));

        // Hermite roots, polished in dd from the f64 Gauss-Hermite nodes;
        // the normalization constant drops out of the Newton update
        let (seeds, _) = linalg::gauss_hermite(n);
        let herm_pair = |wj: Dd| -> (Dd, Dd) {
            // returns (h_n, h_{n-1}) from the orthonormal-style recurrence
            // with h_0 = 1 (overall scale irrelevant)
            let mut hm = Dd::ZERO;
            let mut h = Dd::ONE;
            for k in 0..n {
                let kf = k as f64;
                let c1 = (Dd::from_f64(2.0) / Dd::from_f64(kf + 1.0)).sqrt();
                let c2 = (Dd::from_f64(kf) / Dd::from_f64(kf + 1.0)).sqrt();
                let next = wj * c1 * h - c2 * hm;
                hm = h;
                h = next;
            }
            (h, hm)
        };
        let mut w = Vec::with_capacity(n);
        for seed in seeds {
            let mut wj = Dd::from_f64(seed);
            for _ in 0..3 {
                let (hn, hn1) = herm_pair(wj);
                let dh = hn1 * Dd::from_f64(2.0 * n as f64).sqrt();
                wj = wj - hn / dh;
            }
            w.push(wj);
        }

        // eigenvectors: columns of Hermite-function samples, normalized in dd
        let mut vx = CdMat::zeros(n);
        for (j, wj) in w.iter().enumerate() {
            let mut col = vec![Dd::ZERO; n];
            let mut hm = Dd::ZERO;
            let mut h = Dd::ONE;
            let mut norm2 = Dd::ZERO;
            for (k, slot) in col.iter_mut().enumerate() {
                *slot = h;
                norm2 = norm2 + h * h;
                let kf = k as f64;
                let c1 = (Dd::from_f64(2.0) / Dd::from_f64(kf + 1.0)).sqrt();
                let c2 = (Dd::from_f64(kf) / Dd::from_f64(kf + 1.0)).sqrt();
                let next = *wj * c1 * h - c2 * hm;
                hm = h;
                h = next;
            }
            let inv_norm = Dd::ONE / norm2.sqrt();
            for (k, v) in col.iter().enumerate() {
                vx[(k, j)] = CDd::new(*v * inv_norm, Dd::ZERO);
            }
        }
        let mut vp = CdMat::zeros(n);
        for k in 0..n {
            // i^k phase per row
            let (re, im) = match k % 4 {
                0 => (1.0, 0.0),
                1 => (0.0, 1.0),
                2 => (-1.0, 0.0),
                _ => (0.0, -1.0),
            };
            let phase = CDd::from_f64(re, im);
            for j in 0..n {
                vp[(k, j)] = phase * vx[(k, j)];
            }
        }

        Ok(QuarticRep {
            n,
            margin,
            x,
            p,
            p2,
            p3,
            xp2,
            x2,
            w,
            vx,
            vp,
        })
    }

    pub fn p_max(&self) -> f64 {
        self.w.iter().fold(0.0f64, |m, w| m.max(w.to_f64().abs()))
    }

    fn diag_similarity(&self, v: &CdMat, diag: &[CDd]) -> CdMat {
        // v * diag * v^dagger with the diagonal folded into the left factor
        let n = self.n;
        let mut left = CdMat::zeros(n);
        for i in 0..n {
            for j in 0..n {
                left[(i, j)] = v[(i, j)] * diag[j];
            }
        }
        left.matmul(&v.adjoint())
    }

    /// `exp(g1 x)` through the `x` eigenbasis.
    pub fn exp_x_factor(&self, g1: f64) -> CdMat {
        let diag: Vec<CDd> = self
            .w
            .iter()
            .map(|wj| CDd::new((Dd::from_f64(g1) * *wj).exp(), Dd::ZERO))
            .collect();
        self.diag_similarity(&self.vx, &diag)
    }

    /// `exp(g2 p^3 + i g3 p^2 + i g4 p)` through the `p` eigenbasis.
    pub fn exp_p_polynomial(&self, g2: f64, g3: f64, g4: f64) -> CdMat {
        let diag: Vec<CDd> = self
            .w
            .iter()
            .map(|wj| {
                let w2 = *wj * *wj;
                let re = Dd::from_f64(g2) * w2 * *wj;
                let im = Dd::from_f64(g3) * w2 + Dd::from_f64(g4) * *wj;
                let mag = re.exp();
                let (s, c) = im.sin_cos();
                CDd::new(mag * c, mag * s)
            })
            .collect();
        self.diag_similarity(&self.vp, &diag)
    }

    /// `eta(t)` and its inverse from the four exponent coefficients.
    pub fn eta(&self, gs: [f64; 4]) -> (CdMat, CdMat) {
        let [g1, g2, g3, g4] = gs;
        let left = self.exp_x_factor(g1);
        let left_inv = self.exp_x_factor(-g1);
        let right = self.exp_p_polynomial(g2, g3, g4);
        let right_inv = self.exp_p_polynomial(-g2, -g3, -g4);
        (left.matmul(&right), right_inv.matmul(&left_inv))
    }

    /// `H(t) = p^2 - p/2 + (i/2){x, p^2} + g (x - i)^2` with
    /// `(x - i)^2 = x^2 - 2 i x - 1`.
    pub fn hamiltonian(&self, g: f64) -> CdMat {
        self.p2
            .sub(&self.p.scale(CDd::from_f64(0.5, 0.0)))
            .add(&self.xp2.scale(CDd::from_f64(0.0, 0.5)))
            .add(&self.x2.scale(CDd::from_f64(g, 0.0)))
            .sub(&self.x.scale(CDd::from_f64(0.0, 2.0 * g)))
            .sub(&CdMat::identity(self.n).scale(CDd::from_f64(g, 0.0)))
    }

    /// Interior restriction (`k < n - margin`) of a dd matrix.
    fn restrict(&self, m: &CdMat) -> CdMat {
        let cut = self.n - self.margin;
        let mut out = CdMat::zeros(cut);
        for i in 0..cut {
            for j in 0..cut {
                out[(i, j)] = m[(i, j)];
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuarticResidualRow {
    pub t: f64,
    pub herm: f64,
    pub tdqh: f64,
}

#[derive(Debug, Clone)]
pub struct QuarticReport {
    pub rows: Vec<QuarticResidualRow>,
    pub max_herm: f64,
    pub max_tdqh: f64,
}

impl QuarticReport {
    pub fn write_csv(&self, path: &Path) -> std::io::Result<()> {
        let mut f = std::fs::File::create(path)?;
        writeln!(f, "t,herm_resid,tdqh_resid")?;
        for r in &self.rows {
            writeln!(f, "{:.11e},{:.11e},{:.11e}", r.t, r.herm, r.tdqh)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct QuarticVerifyConfig {
    pub n: usize,
    pub margin: usize,
    pub fd_step: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub samples: usize,
    pub exponent_ceiling: f64,
    /// Additive defect on `gamma4` for sensitivity diagnostics.
    pub g4_offset: f64,
}

impl Default for QuarticVerifyConfig {
    fn default() -> Self {
        QuarticVerifyConfig {
            n: 48,
            margin: 10,
            fd_step: 1e-4,
            t_start: 0.5,
            t_end: 1.5,
            samples: 21,
            exponent_ceiling: 40.0,
            g4_offset: 0.0,
        }
    }
}

/// Matrix-level Hermiticity and quasi-Hermiticity residuals of the quartic
/// map over a window. Residuals are relative Frobenius norms on the interior
/// projection (`k < n - margin`).
pub fn quartic_tdde_residual(
    sc: &SigmaClass,
    c1_const: f64,
    qrep: &QuarticRep,
    cfg: &QuarticVerifyConfig,
) -> Result<QuarticReport, QuarticError> {
    let mut rows = Vec::new();
    let p_max = qrep.p_max();
    for i in 0..cfg.samples {
        let t =
            cfg.t_start + (cfg.t_end - cfg.t_start) * i as f64 / (cfg.samples.max(2) - 1) as f64;
        let gs0 = gammas_at(sc, c1_const, t)?;
        let p3_part = gs0[1].abs() * p_max.powi(3);
        let norm = p3_part + gs0[0].abs() * p_max;
        if norm > cfg.exponent_ceiling {
            return Err(QuarticError::ExponentOverflow {
                norm,
                p3_part,
                ceiling: cfg.exponent_ceiling,
            });
        }
        let tweak = |mut gs: [f64; 4]| {
            gs[3] += cfg.g4_offset;
            gs
        };
        let (eta, eta_inv) = qrep.eta(tweak(gs0));
        let (eta_p, _) = qrep.eta(tweak(gammas_at(sc, c1_const, t + cfg.fd_step)?));
        let (eta_m, _) = qrep.eta(tweak(gammas_at(sc, c1_const, t - cfg.fd_step)?));
        let half_inv = CDd::from_f64(1.0 / (2.0 * cfg.fd_step), 0.0);
        let eta_dot = eta_p.sub(&eta_m).scale(half_inv);
        let h_mat = qrep.hamiltonian(sc.g(t)?);
        let i_c = CDd::from_f64(0.0, 1.0);
        let h = eta
            .matmul(&h_mat)
            .matmul(&eta_inv)
            .add(&eta_dot.matmul(&eta_inv).scale(i_c));

        let herm_num = qrep.restrict(&h.sub(&h.adjoint()));
        let h_int = qrep.restrict(&h);
        let herm = herm_num.fro_norm() / h_int.fro_norm().max(1e-300);

        let rho = eta.adjoint().matmul(&eta);
        let rho_p = eta_p.adjoint().matmul(&eta_p);
        let rho_m = eta_m.adjoint().matmul(&eta_m);
        let rho_dot = rho_p.sub(&rho_m).scale(half_inv);
        let tdqh_mat = h_mat
            .adjoint()
            .matmul(&rho)
            .sub(&rho.matmul(&h_mat))
            .sub(&rho_dot.scale(i_c));
        let tdqh = qrep.restrict(&tdqh_mat).fro_norm()
            / (qrep.restrict(&rho).fro_norm().max(1e-300)
                * qrep.restrict(&h_mat).fro_norm().max(1.0));

        rows.push(QuarticResidualRow { t, herm, tdqh });
    }
    let max_herm = rows.iter().map(|r| r.herm).fold(0.0, f64::max);
    let max_tdqh = rows.iter().map(|r| r.tdqh).fold(0.0, f64::max);
    Ok(QuarticReport {
        rows,
        max_herm,
        max_tdqh,
    })
}

/// Matrix identity behind the lowest order of the recursion:
///
/// ```text
/// 2 i h3 + 2 gamma2 [p^3, h2] + 2 gamma1 [x - 2 gamma3(0) p, h2] = 0
/// ```
///
/// with `h2 = g x^2`, `h3 = {x, p^2}/2 - 2 g x` and the zeroth-order factor
/// of the map entering through the shift `x -> x - 2 gamma3(0) p - gamma4(0)`
/// (the constant shift commutes with `h2` and drops). Returns the relative
/// interior residual.
pub fn first_order_identity_residual(
    sc: &SigmaClass,
    rep: &MatrixRep,
    t: f64,
) -> Result<f64, QuarticError> {
    let [g, dg, ..] = sc.g_derivs(t)?;
    if dg == 0.0 {
        return Err(QuarticError::StationaryG { t });
    }
    let gamma1 = dg / (6.0 * g);
    let gamma2 = 1.0 / (6.0 * g);
    let gamma3_zero = 3.0 * g / dg;
    let x = rep.mat(one_mode::X);
    let p = rep.mat(one_mode::P);
    let p3 = rep.mat(one_mode::P3);
    let xp2 = rep.mat(one_mode::XP2);
    let h2 = x.dot(x).mapv(|z| z * C64::new(g, 0.0));
    let h3 = xp2.mapv(|z| z * C64::new(0.5, 0.0)) - x.mapv(|z| z * C64::new(2.0 * g, 0.0));
    let shifted_x = x - &p.mapv(|z| z * C64::new(2.0 * gamma3_zero, 0.0));
    let r = h3.mapv(|z| z * C64::new(0.0, 2.0))
        + linalg::commutator(p3, &h2).mapv(|z| z * C64::new(2.0 * gamma2, 0.0))
        + linalg::commutator(&shifted_x, &h2).mapv(|z| z * C64::new(2.0 * gamma1, 0.0));
    let scale = linalg::fro_norm(&rep.restrict(&h3)).max(1.0);
    Ok(linalg::fro_norm(&rep.restrict(&r)) / scale)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigma_examples() {
        let flat = SigmaClass::new(1.0, 0.0, 0.0);
        let [g, dg, ..] = flat.g_derivs(1.0).unwrap();
        assert!((g - 0.5).abs() < 1e-15);
        assert_eq!(dg, 0.0);
        assert!(matches!(
            gammas_at(&flat, 0.0, 1.0),
            Err(QuarticError::StationaryG { .. })
        ));

        let lin = SigmaClass::new(1.0, 1.0, 0.0);
        let [g, ..] = lin.g_derivs(1.0).unwrap();
        assert!((g - 1.0 / 16.0).abs() < 1e-15);
        let gs = gammas_at(&lin, 0.0, 1.0).unwrap();
        assert!((gs[1] - 8.0 / 3.0).abs() < 1e-13);
        // gamma1 = -1/(2 (1 + t)) on this family
        for t in [0.3, 1.0, 1.7] {
            let gs = gammas_at(&lin, 0.0, t).unwrap();
            assert!((gs[0] + 0.5 / (1.0 + t)).abs() < 1e-13, "t = {t}");
        }

        let neg = SigmaClass::new(-1.0, 0.0, 0.0);
        assert!(matches!(
            neg.g_derivs(0.0),
            Err(QuarticError::SigmaNotPositive { .. })
        ));
    }

    #[test]
    fn g_equation_on_and_off_family() {
        let sc = SigmaClass::new(1.0, 1.0, 1.0);
        for t in [0.1, 0.7, 1.4, 2.0] {
            let [g, dg, d2g, d3g] = sc.g_derivs(t).unwrap();
            assert!(
                g_ode_residual(g, dg, d2g, d3g).abs() < 1e-10,
                "t = {t}: {}",
                g_ode_residual(g, dg, d2g, d3g)
            );
        }
        // negative control: g = e^t has residual -e^t/18
        for t in [0.1f64, 1.0, 2.0] {
            let e = t.exp();
            let r = g_ode_residual(e, e, e, e);
            assert!(r.abs() > 1e-2, "t = {t}");
            assert!((r + e / 18.0).abs() < 1e-12);
        }
    }

    #[test]
    fn recursion_constraints_hold_for_three_members() {
        let members = [
            SigmaClass::new(1.0, 1.0, 1.0),
            SigmaClass::new(1.0, 0.2, 0.1),
            SigmaClass::new(0.05, 0.05, 0.02),
        ];
        let grid = TimeGrid::new(0.1, 2.0, 100);
        for sc in members {
            let report = recursion_constraints_check(&sc, 0.3, &grid, 1e-8)
                .unwrap_or_else(|e| panic!("{sc:?}: {e}"));
            assert!(report.passed(), "{sc:?}: worst {:?}", report.worst());
        }
    }

    #[test]
    fn first_order_identity_holds() {
        let rep = MatrixRep::fock_1mode(24, 4).unwrap();
        let sc = SigmaClass::new(1.0, 0.2, 0.1);
        for t in [0.5, 1.0, 1.5] {
            let r = first_order_identity_residual(&sc, &rep, t).unwrap();
            assert!(r < 1e-10, "t = {t}: {r:e}");
        }
    }

    #[test]
    fn hamiltonian_assembly_matches_split_form() {
        let qrep = QuarticRep::new(16, 3).unwrap();
        let g = 0.37;
        let h = qrep.hamiltonian(g);
        // h1 + h2 + i h3 with h1 = p^2 - p/2 - g, h2 = g x^2,
        // h3 = {x,p^2}/2 - 2 g x
        let h1 = qrep
            .p2
            .sub(&qrep.p.scale(CDd::from_f64(0.5, 0.0)))
            .sub(&CdMat::identity(qrep.n).scale(CDd::from_f64(g, 0.0)));
        let h2 = qrep.x.matmul(&qrep.x).scale(CDd::from_f64(g, 0.0));
        let h3 = qrep
            .xp2
            .scale(CDd::from_f64(0.5, 0.0))
            .sub(&qrep.x.scale(CDd::from_f64(2.0 * g, 0.0)));
        let sum = h1.add(&h2).add(&h3.scale(CDd::from_f64(0.0, 1.0)));
        let rel = h.sub(&sum).fro_norm() / sum.fro_norm();
        assert!(rel < 1e-30, "{rel:e}");
    }

    #[test]
    fn p_polynomial_exponential_matches_pade() {
        let qrep = QuarticRep::new(16, 3).unwrap();
        let rep = MatrixRep::fock_1mode(16, 3).unwrap();
        let (g2, g3, g4) = (0.01, 0.4, -0.2);
        let via_eigen = qrep.exp_p_polynomial(g2, g3, g4);
        let p = rep.mat(one_mode::P);
        let p2 = rep.mat(one_mode::P2);
        let p3 = rep.mat(one_mode::P3);
        let b = p3.mapv(|z| z * C64::new(g2, 0.0))
            + p2.mapv(|z| z * C64::new(0.0, g3))
            + p.mapv(|z| z * C64::new(0.0, g4));
        let via_pade = linalg::expm(&b);
        let mut dev = 0.0f64;
        let mut nrm = 0.0f64;
        for i in 0..16 {
            for j in 0..16 {
                let z = via_eigen[(i, j)];
                let d = C64::new(z.re.to_f64(), z.im.to_f64()) - via_pade[[i, j]];
                dev += d.norm_sqr();
                nrm += via_pade[[i, j]].norm_sqr();
            }
        }
        let rel = (dev / nrm).sqrt();
        assert!(rel < 1e-11, "{rel:e}");

        // the eigenbasis reproduces x and p themselves to dd accuracy
        let id_x = qrep.exp_x_factor(0.0);
        let defect = id_x.sub(&CdMat::identity(16));
        assert!(defect.fro_norm() < 1e-28);
    }

    #[test]
    fn tdde_residual_smoke_and_sensitivity() {
        let qrep = QuarticRep::new(32, 26).unwrap();
        let sc = SigmaClass::new(0.0, 0.15, 0.0);
        let cfg = QuarticVerifyConfig {
            n: 32,
            margin: 26,
            samples: 5,
            ..QuarticVerifyConfig::default()
        };
        let report = quartic_tdde_residual(&sc, 0.0, &qrep, &cfg).unwrap();
        assert!(report.max_herm < 1e-4, "herm {:e}", report.max_herm);
        assert!(report.max_tdqh < 1e-4, "tdqh {:e}", report.max_tdqh);

        let broken = QuarticVerifyConfig {
            g4_offset: 0.1,
            ..cfg
        };
        let worse = quartic_tdde_residual(&sc, 0.0, &qrep, &broken).unwrap();
        assert!(
            worse.max_herm > 10.0 * report.max_herm.max(1e-12),
            "sensitivity: {:e} vs {:e}",
            worse.max_herm,
            report.max_herm
        );
    }

    #[test]
    fn overflow_guard_rejects_large_exponents() {
        let qrep = QuarticRep::new(48, 10).unwrap();
        let sc = SigmaClass::new(1.0, 0.2, 0.1);
        let cfg = QuarticVerifyConfig::default();
        match quartic_tdde_residual(&sc, 0.0, &qrep, &cfg) {
            Err(QuarticError::ExponentOverflow { p3_part, .. }) => {
                assert!(p3_part > cfg.exponent_ceiling);
            }
            other => panic!("expected overflow, got {other:?}"),
        }
    }
}
