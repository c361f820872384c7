//! The catalogue of exact Dyson maps for the coupled-oscillator model.
//!
//! Each catalogue row is a choice of two exponent slots `(q1, q2)` drawn from
//! `{K3, K4, iK1, iK2}` together with a constraint tying `c = a - b` to the
//! coupling `lambda`. For every admissible row the pair of coefficient
//! functions `(gamma1, gamma2)` satisfies a coupled first-order system
//! ([`DysonCase::table1_rhs`]), is parameterized by a single auxiliary
//! function `chi(t)` ([`DysonCase::gammas_from_chi`]), and produces a
//! Hermitian Hamiltonian `h = f+ K1 + f- K2`
//! ([`DysonCase::hermitian_coeffs`]).
//!
//! The auxiliary functions used here are the one-parameter families that
//! solve the *first-order* systems, not merely the second-order auxiliary
//! equations: those admit a two-parameter family of which only a locked
//! subfamily (a fixed product of the two mode amplitudes) descends from the
//! first-order constraints. The locked closed forms are in
//! [`DysonCase::solve_auxiliary`]; general second-order solutions kept for
//! cross-checks are in [`aux`].
//!
//! `gamma1`/`gamma2` are evaluated through smooth signed identities
//! (`asinh` of an explicit signed hyperbolic sine, `atan2` of an explicit
//! sin/cos pair) rather than the raw `arccosh`/`arccos` parameterizations,
//! which are branch-ambiguous exactly at the turning points of `chi`.

use crate::coeffs::{CoeffFn, TimeGrid};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CatalogueError {
    #[error("degenerate constant: {0}")]
    DegenerateConstant(&'static str),
    #[error("|p| = {0} inadmissible for this case")]
    InadmissibleP(f64),
    #[error("domain violation at t = {t}: {what}")]
    DomainViolation { t: f64, what: &'static str },
    #[error("constraint residual {residual:e} at t = {t} in {component} exceeds {tol:e}")]
    ConstraintFailed {
        residual: f64,
        t: f64,
        component: &'static str,
        tol: f64,
    },
}

/// Exponent slot pairs of the two-slot catalogue rows, in product order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotPair {
    K4K3,
    K3K4,
    K4IK1,
    K4IK2,
    K3IK1,
    K3IK2,
}

/// Constraint tying `c(t) = a(t) - b(t)` to the non-Hermitian coupling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Constraint {
    /// `c = 0`
    CZero,
    /// `c = p lambda`
    CPropLambda(f64),
    /// `c = lambda`
    CEqualLambda,
}

impl Constraint {
    pub fn c_of(&self, lambda: f64) -> f64 {
        match self {
            Constraint::CZero => 0.0,
            Constraint::CPropLambda(p) => p * lambda,
            Constraint::CEqualLambda => lambda,
        }
    }
}

/// Catalogue identifiers for the six two-slot maps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseId {
    Eta1,
    Eta2,
    Eta3,
    Eta4,
    Eta5,
    Eta6,
}

impl CaseId {
    pub fn pair(self) -> SlotPair {
        match self {
            CaseId::Eta1 => SlotPair::K4K3,
            CaseId::Eta2 => SlotPair::K3K4,
            CaseId::Eta3 => SlotPair::K4IK1,
            CaseId::Eta4 => SlotPair::K4IK2,
            CaseId::Eta5 => SlotPair::K3IK1,
            CaseId::Eta6 => SlotPair::K3IK2,
        }
    }

    pub fn parse(s: &str) -> Option<CaseId> {
        Some(match s {
            "eta1" => CaseId::Eta1,
            "eta2" => CaseId::Eta2,
            "eta3" => CaseId::Eta3,
            "eta4" => CaseId::Eta4,
            "eta5" => CaseId::Eta5,
            "eta6" => CaseId::Eta6,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            CaseId::Eta1 => "eta1",
            CaseId::Eta2 => "eta2",
            CaseId::Eta3 => "eta3",
            CaseId::Eta4 => "eta4",
            CaseId::Eta5 => "eta5",
            CaseId::Eta6 => "eta6",
        }
    }
}

/// One catalogue row with its constants and branch choice.
#[derive(Debug, Clone)]
pub struct DysonCase {
    pub id: CaseId,
    pub constraint: Constraint,
    pub k1: f64,
    pub k2: f64,
    pub branch_sign: f64,
}

impl DysonCase {
    pub fn new(
        id: CaseId,
        constraint: Constraint,
        k1: f64,
        k2: f64,
    ) -> Result<DysonCase, CatalogueError> {
        let case = DysonCase {
            id,
            constraint,
            k1,
            k2,
            branch_sign: 1.0,
        };
        case.validate()?;
        Ok(case)
    }

    pub fn with_branch(mut self, sign: f64) -> DysonCase {
        self.branch_sign = if sign < 0.0 { -1.0 } else { 1.0 };
        self
    }

    pub fn pair(&self) -> SlotPair {
        self.id.pair()
    }

    fn validate(&self) -> Result<(), CatalogueError> {
        match (self.id, self.constraint) {
            (CaseId::Eta2, Constraint::CEqualLambda) => {
                if self.k1 <= 0.0 {
                    return Err(CatalogueError::DegenerateConstant(
                        "k1 must be positive (gamma2 = ln(k1/chi))",
                    ));
                }
            }
            (CaseId::Eta2, Constraint::CPropLambda(_)) => {
                return Err(CatalogueError::DegenerateConstant(
                    "the (K3, K4) pair admits c = 0 or c = lambda only",
                ));
            }
            (_, Constraint::CEqualLambda) => {
                return Err(CatalogueError::DegenerateConstant(
                    "c = lambda is specific to the (K3, K4) pair",
                ));
            }
            (CaseId::Eta3 | CaseId::Eta4 | CaseId::Eta5 | CaseId::Eta6, Constraint::CZero) => {
                if self.k1 == 0.0 {
                    return Err(CatalogueError::DegenerateConstant(
                        "k1 = 0 divides the c = 0 parameterization",
                    ));
                }
            }
            _ => {}
        }
        if let Constraint::CPropLambda(p) = self.constraint {
            if p == 0.0 || p.abs() >= 1.0 {
                return Err(CatalogueError::InadmissibleP(p));
            }
        }
        Ok(())
    }

    /// Coupled first-order system of the row: returns
    /// `(dgamma1/dt, dgamma2/dt)` at coefficient values `c`, `lambda`.
    pub fn table1_rhs(&self, g1: f64, g2: f64, c: f64, lambda: f64) -> (f64, f64) {
        match self.pair() {
            SlotPair::K4K3 => (c * g2.sinh(), -c * g2.cosh() * g1.tanh() - lambda),
            SlotPair::K3K4 => (
                -lambda * g2.cosh() - c * g2.sinh(),
                (c * g2.cosh() + lambda * g2.sinh()) * g1.tanh(),
            ),
            SlotPair::K4IK1 => (lambda * g2.sin(), c + lambda * g2.cos() / g1.tanh()),
            SlotPair::K4IK2 => (-lambda * g2.sin(), -c - lambda * g2.cos() / g1.tanh()),
            SlotPair::K3IK1 => (-lambda * g2.cos(), c + lambda * g2.sin() / g1.tanh()),
            SlotPair::K3IK2 => (-lambda * g2.cos(), -c + lambda * g2.sin() / g1.tanh()),
        }
    }
}

/// Auxiliary function samples with both `chi` and its `s`-derivative, where
/// `s(t)` is the antiderivative of `lambda` from `t = 0`.
#[derive(Debug, Clone)]
pub struct ChiSolution {
    pub grid: TimeGrid,
    pub chi: Vec<f64>,
    pub chi_s: Vec<f64>,
    /// `d chi / dt = lambda(t) * chi_s`.
    pub chi_dot: Vec<f64>,
    pub source: ChiSource,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChiSource {
    ClosedForm,
    NumericOde,
}

/// `(chi, chi_s)` of the locked closed-form family at abscissa `s`.
///
/// Returns `None` for the `eta1`/`c = 0` row, which needs no auxiliary
/// function.
pub fn chi_closed_form(case: &DysonCase, s: f64) -> Option<(f64, f64)> {
    let k1 = case.k1;
    let k2 = case.k2;
    let bs = case.branch_sign;
    match (case.id, case.constraint) {
        (CaseId::Eta1, Constraint::CZero) => None,
        (CaseId::Eta1, Constraint::CPropLambda(p)) => {
            // One trajectory per (p, k1, k2): the gamma2 sign ambiguity is the
            // two halves of it on either side of the chi turning point, which
            // the signed gamma evaluation already covers, so branch_sign has
            // nothing to select here.
            let beta2 = 1.0 - p * p;
            let beta = beta2.sqrt();
            let chi_p = -p * k1 / (2.0 * beta2);
            let r = p.abs() * (p * p * k1 * k1 + 4.0 * beta2).sqrt() / (2.0 * beta2);
            let sigma = -p.signum();
            let theta = beta * (s - k2);
            Some((
                chi_p + sigma * r * theta.cosh(),
                sigma * r * beta * theta.sinh(),
            ))
        }
        (CaseId::Eta2, Constraint::CZero) => {
            let u = k2 - s;
            let m2 = 1.0 + k1 * k1;
            let chi = (1.0 + m2 * u.sinh().powi(2)).sqrt();
            let chi_s = -m2 * u.sinh() * u.cosh() / chi;
            Some((chi, chi_s))
        }
        (CaseId::Eta2, Constraint::CEqualLambda) => {
            let w = k2 - k1 * s;
            let chi = (1.0 + w * w).sqrt();
            Some((chi, -k1 * w / chi))
        }
        (CaseId::Eta3 | CaseId::Eta4, Constraint::CZero) => {
            let m = (1.0 + k1 * k1).sqrt() / k1;
            let u = s - k2;
            let sign = if case.id == CaseId::Eta3 { 1.0 } else { -1.0 };
            Some((sign * m * u.sinh(), sign * m * u.cosh()))
        }
        (CaseId::Eta3 | CaseId::Eta4, Constraint::CPropLambda(p)) => {
            let beta = (1.0 - p * p).sqrt();
            let theta = beta * (s - k2);
            Some((theta.cosh() / beta, theta.sinh()))
        }
        (CaseId::Eta5 | CaseId::Eta6, Constraint::CZero) => {
            let m = (1.0 + k1 * k1).sqrt() / k1;
            let u = s - k2;
            Some((-m * u.sinh(), -m * u.cosh()))
        }
        (CaseId::Eta5, Constraint::CPropLambda(p)) => {
            let beta2 = 1.0 - p * p;
            let beta = beta2.sqrt();
            let r = (k1 * k1 + 4.0 * beta2).sqrt();
            let theta = beta * (s - k2);
            Some((
                (-p * k1 + bs * r * theta.cosh()) / (2.0 * beta2),
                bs * r * theta.sinh() / (2.0 * beta),
            ))
        }
        (CaseId::Eta6, Constraint::CPropLambda(p)) => {
            let beta2 = 1.0 - p * p;
            let beta = beta2.sqrt();
            let r = (k1 * k1 + 4.0 * beta2).sqrt();
            let theta = beta * (s - k2);
            Some((
                (p * k1 + bs * r * theta.cosh()) / (2.0 * beta2),
                bs * r * theta.sinh() / (2.0 * beta),
            ))
        }
        _ => unreachable!("validated cases only"),
    }
}

/// Right-hand side `chi_ss = F(chi)` of the row's auxiliary equation in the
/// `s` coordinate.
pub fn aux_rhs(case: &DysonCase, chi: f64) -> f64 {
    let k1 = case.k1;
    match (case.id, case.constraint) {
        (CaseId::Eta1, Constraint::CZero) => 0.0,
        (CaseId::Eta1, Constraint::CPropLambda(p)) => (1.0 - p * p) * chi + 0.5 * p * k1,
        (CaseId::Eta2, Constraint::CZero) => chi + k1 * k1 / chi.powi(3),
        (CaseId::Eta2, Constraint::CEqualLambda) => k1 * k1 / chi.powi(3),
        (CaseId::Eta3 | CaseId::Eta4 | CaseId::Eta5 | CaseId::Eta6, Constraint::CZero) => chi,
        (CaseId::Eta3 | CaseId::Eta4, Constraint::CPropLambda(p)) => (1.0 - p * p) * chi,
        (CaseId::Eta5, Constraint::CPropLambda(p)) => (1.0 - p * p) * chi + 0.5 * p * k1,
        (CaseId::Eta6, Constraint::CPropLambda(p)) => (1.0 - p * p) * chi - 0.5 * p * k1,
        _ => unreachable!(),
    }
}

impl DysonCase {
    /// Evaluate the locked closed-form auxiliary solution on a grid.
    pub fn solve_auxiliary(
        &self,
        lambda: &CoeffFn,
        grid: &TimeGrid,
    ) -> Result<ChiSolution, CatalogueError> {
        let mut chi = Vec::with_capacity(grid.len());
        let mut chi_s = Vec::with_capacity(grid.len());
        let mut chi_dot = Vec::with_capacity(grid.len());
        for t in grid.times() {
            let s = lambda.antideriv(0.0, t);
            let (x, xs) = chi_closed_form(self, s).unwrap_or((0.0, 0.0));
            if !x.is_finite() {
                return Err(CatalogueError::DomainViolation {
                    t,
                    what: "auxiliary function not finite",
                });
            }
            chi.push(x);
            chi_s.push(xs);
            chi_dot.push(lambda.eval(t) * xs);
        }
        Ok(ChiSolution {
            grid: *grid,
            chi,
            chi_s,
            chi_dot,
            source: ChiSource::ClosedForm,
        })
    }

    /// Integrate the auxiliary equation numerically (RK4 on the pair
    /// `(chi, chi_s)`, which stays regular across zeros of `lambda`),
    /// starting from the closed form at the grid origin. Independent oracle
    /// for [`DysonCase::solve_auxiliary`].
    pub fn solve_auxiliary_numeric(
        &self,
        lambda: &CoeffFn,
        grid: &TimeGrid,
    ) -> Result<ChiSolution, CatalogueError> {
        let s0 = lambda.antideriv(0.0, grid.t_start);
        let (mut x, mut v) = chi_closed_form(self, s0).unwrap_or((0.0, 0.0));
        let mut chi = vec![x];
        let mut chi_s = vec![v];
        let mut chi_dot = vec![lambda.eval(grid.t_start) * v];
        let h = grid.dt();
        for i in 0..grid.steps {
            let t = grid.t(i);
            let f = |x: f64, v: f64, t: f64| -> (f64, f64) {
                let l = lambda.eval(t);
                (l * v, l * aux_rhs(self, x))
            };
            let (k1x, k1v) = f(x, v, t);
            let (k2x, k2v) = f(x + 0.5 * h * k1x, v + 0.5 * h * k1v, t + 0.5 * h);
            let (k3x, k3v) = f(x + 0.5 * h * k2x, v + 0.5 * h * k2v, t + 0.5 * h);
            let (k4x, k4v) = f(x + h * k3x, v + h * k3v, t + h);
            x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
            v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
            if !x.is_finite() || !v.is_finite() {
                return Err(CatalogueError::DomainViolation {
                    t: t + h,
                    what: "numeric auxiliary integration diverged",
                });
            }
            chi.push(x);
            chi_s.push(v);
            chi_dot.push(lambda.eval(t + h) * v);
        }
        Ok(ChiSolution {
            grid: *grid,
            chi,
            chi_s,
            chi_dot,
            source: ChiSource::NumericOde,
        })
    }

    /// `(gamma1, gamma2)` at a single `(chi, chi_s)` sample.
    pub fn gamma_pair(&self, chi: f64, chi_s: f64, t: f64) -> Result<(f64, f64), CatalogueError> {
        let k1 = self.k1;
        let bs = self.branch_sign;
        match (self.id, self.constraint) {
            (CaseId::Eta1, Constraint::CZero) => unreachable!("no chi parameterization"),
            (CaseId::Eta1, Constraint::CPropLambda(p)) => {
                let g1 = chi.asinh();
                let den = 2.0 * p * (1.0 + chi * chi).sqrt();
                let cosh2 = -(2.0 * chi + p * k1) / den;
                let sinh2 = chi_s / (p * (1.0 + chi * chi).sqrt());
                if cosh2 < 1.0 - 1e-9 {
                    return Err(CatalogueError::DomainViolation {
                        t,
                        what: "gamma2 hyperbolic cosine fell below 1",
                    });
                }
                Ok((g1, (cosh2.max(1.0) + sinh2).ln()))
            }
            (CaseId::Eta2, Constraint::CZero) => {
                // signed sinh(gamma1) = -chi_s chi / sqrt(chi^2 + k1^2)
                let sh1 = -chi_s * chi / (chi * chi + k1 * k1).sqrt();
                Ok((sh1.asinh(), (k1 / chi).asinh()))
            }
            (CaseId::Eta2, Constraint::CEqualLambda) => {
                // w = k2 - k1 s recovered from chi_s = -k1 w / chi
                let w = -chi * chi_s / k1;
                Ok((w.asinh(), (k1 / chi).ln()))
            }
            (CaseId::Eta3 | CaseId::Eta4, Constraint::CZero) => {
                // branch - is the joint negation (gamma1, gamma2) -> -(...)
                let g1 = bs * (k1 * (1.0 + chi * chi).sqrt()).asinh();
                Ok((g1, bs * chi.atan()))
            }
            (CaseId::Eta5 | CaseId::Eta6, Constraint::CZero) => {
                let g1 = (k1 * (1.0 + chi * chi).sqrt()).asinh();
                let g2 = std::f64::consts::FRAC_PI_2 - chi.atan();
                Ok((g1, bs * g2))
            }
            (CaseId::Eta3 | CaseId::Eta4, Constraint::CPropLambda(p)) => {
                if chi <= 1.0 {
                    return Err(CatalogueError::DomainViolation {
                        t,
                        what: "chi must exceed 1",
                    });
                }
                let root = (chi * chi - 1.0).sqrt();
                let sin2 = if self.id == CaseId::Eta3 {
                    chi_s / root
                } else {
                    -chi_s / root
                };
                let cos2 = -p * chi / root;
                Ok((chi.acosh(), sin2.atan2(cos2)))
            }
            (CaseId::Eta5, Constraint::CPropLambda(p)) => {
                if chi <= 1.0 {
                    return Err(CatalogueError::DomainViolation {
                        t,
                        what: "chi must exceed 1",
                    });
                }
                let root = (chi * chi - 1.0).sqrt();
                let sin2 = (k1 - 2.0 * p * chi) / (2.0 * root);
                let cos2 = -chi_s / root;
                Ok((chi.acosh(), sin2.atan2(cos2)))
            }
            (CaseId::Eta6, Constraint::CPropLambda(p)) => {
                if chi <= 1.0 {
                    return Err(CatalogueError::DomainViolation {
                        t,
                        what: "chi must exceed 1",
                    });
                }
                let root = (chi * chi - 1.0).sqrt();
                let sin2 = (k1 + 2.0 * p * chi) / (2.0 * root);
                let cos2 = -chi_s / root;
                Ok((chi.acosh(), sin2.atan2(cos2)))
            }
            _ => unreachable!(),
        }
    }

    /// Pointwise `(gamma1, gamma2)` at arbitrary `t`, for finite-difference
    /// consumers that need off-grid samples.
    pub fn gammas_at(&self, lambda: &CoeffFn, t: f64) -> Result<(f64, f64), CatalogueError> {
        if matches!((self.id, self.constraint), (CaseId::Eta1, Constraint::CZero)) {
            return Ok((self.k1, self.k2 - lambda.antideriv(0.0, t)));
        }
        let s = lambda.antideriv(0.0, t);
        let (chi, chi_s) = chi_closed_form(self, s).expect("non-trivial row");
        self.gamma_pair(chi, chi_s, t)
    }

    /// Sampled `(gamma1(t), gamma2(t))` from an auxiliary solution (or from
    /// the exact expressions for the `eta1`/`c = 0` row, which has none).
    pub fn gammas_from_chi(
        &self,
        chi: &ChiSolution,
        lambda: &CoeffFn,
    ) -> Result<(Vec<f64>, Vec<f64>), CatalogueError> {
        let grid = &chi.grid;
        let mut g1 = Vec::with_capacity(grid.len());
        let mut g2 = Vec::with_capacity(grid.len());
        for (i, t) in grid.times().enumerate() {
            let pair = if matches!((self.id, self.constraint), (CaseId::Eta1, Constraint::CZero)) {
                (self.k1, self.k2 - lambda.antideriv(0.0, t))
            } else {
                self.gamma_pair(chi.chi[i], chi.chi_s[i], t)?
            };
            g1.push(pair.0);
            g2.push(pair.1);
        }
        Ok((g1, g2))
    }

    /// Hermitian-Hamiltonian coefficients `(f+, f-)` at one sample, from the
    /// general slot-pair expressions (valid for every branch):
    ///
    /// ```text
    /// (K4,K3):  f+- = (a+b)/2 +- (c/2) cosh(g2)/cosh(g1)
    /// (K3,K4):  f+- = (a+b)/2 +- [(c/2) cosh(g2) + (lambda/2) sinh(g2)]/cosh(g1)
    /// (K4,iK):  f+- = (a+b)/2 - dg2/2 -+ (lambda/2) cos(g2)/sinh(g1)
    /// (K3,iK1): f+- = (a+b)/2 - dg2/2 -+ (lambda/2) sin(g2)/sinh(g1)
    /// (K3,iK2): f+- = (a+b)/2 - dg2/2 +- (lambda/2) sin(g2)/sinh(g1)
    /// ```
    ///
    /// with `dg2` taken from the first-order system.
    pub fn hermitian_coeffs(
        &self,
        g1: f64,
        g2: f64,
        lambda: f64,
        b: f64,
    ) -> Result<(f64, f64), CatalogueError> {
        let c = self.constraint.c_of(lambda);
        let mean = b + 0.5 * c;
        let (_, dg2) = self.table1_rhs(g1, g2, c, lambda);
        let (base, split) = match self.pair() {
            SlotPair::K4K3 => (mean, 0.5 * c * g2.cosh() / g1.cosh()),
            SlotPair::K3K4 => (
                mean,
                (0.5 * c * g2.cosh() + 0.5 * lambda * g2.sinh()) / g1.cosh(),
            ),
            SlotPair::K4IK1 | SlotPair::K4IK2 => (
                mean - 0.5 * dg2,
                -0.5 * lambda * g2.cos() / g1.sinh(),
            ),
            SlotPair::K3IK1 => (mean - 0.5 * dg2, -0.5 * lambda * g2.sin() / g1.sinh()),
            SlotPair::K3IK2 => (mean - 0.5 * dg2, 0.5 * lambda * g2.sin() / g1.sinh()),
        };
        Ok((base + split, base - split))
    }

    /// Sampled `(f+, f-)` over a grid.
    pub fn hermitian_coeffs_sampled(
        &self,
        g1: &[f64],
        g2: &[f64],
        grid: &TimeGrid,
        lambda: &CoeffFn,
        b: &CoeffFn,
    ) -> Result<(Vec<f64>, Vec<f64>), CatalogueError> {
        let mut fp = Vec::with_capacity(grid.len());
        let mut fm = Vec::with_capacity(grid.len());
        for (i, t) in grid.times().enumerate() {
            let (p, m) = self.hermitian_coeffs(g1[i], g2[i], lambda.eval(t), b.eval(t))?;
            if !p.is_finite() || !m.is_finite() {
                return Err(CatalogueError::DomainViolation {
                    t,
                    what: "Hermitian coefficient not finite",
                });
            }
            fp.push(p);
            fm.push(m);
        }
        Ok((fp, fm))
    }
}

/// Finite-difference check that sampled `(gamma1, gamma2)` satisfy the row's
/// first-order system.
#[derive(Debug, Clone)]
pub struct ConstraintReport {
    pub max_residual: f64,
    pub worst_t: f64,
    pub worst_component: &'static str,
    pub tol: f64,
}

impl ConstraintReport {
    pub fn passed(&self) -> bool {
        self.max_residual < self.tol
    }
}

pub fn verify_constraint_odes(
    case: &DysonCase,
    g1: &[f64],
    g2: &[f64],
    grid: &TimeGrid,
    lambda: &CoeffFn,
    tol: f64,
) -> Result<ConstraintReport, CatalogueError> {
    let h = grid.dt();
    // Fourth-order central differences; the second-order stencil's truncation
    // error at step 1e-3 is of the same size as the tolerances being checked.
    let d4 = |f: &[f64], i: usize| -> f64 {
        (-f[i + 2] + 8.0 * f[i + 1] - 8.0 * f[i - 1] + f[i - 2]) / (12.0 * h)
    };
    let mut worst = (0.0f64, grid.t_start, "dgamma1");
    for i in 2..grid.len().saturating_sub(2) {
        let t = grid.t(i);
        let lt = lambda.eval(t);
        let ct = case.constraint.c_of(lt);
        let (d1, d2) = case.table1_rhs(g1[i], g2[i], ct, lt);
        let fd1 = d4(g1, i);
        let fd2 = d4(g2, i);
        let r1 = (fd1 - d1).abs();
        let r2 = (fd2 - d2).abs();
        if r1 > worst.0 {
            worst = (r1, t, "dgamma1");
        }
        if r2 > worst.0 {
            worst = (r2, t, "dgamma2");
        }
    }
    let report = ConstraintReport {
        max_residual: worst.0,
        worst_t: worst.1,
        worst_component: worst.2,
        tol,
    };
    if !report.passed() {
        return Err(CatalogueError::ConstraintFailed {
            residual: report.max_residual,
            t: report.worst_t,
            component: report.worst_component,
            tol,
        });
    }
    Ok(report)
}

/// General solutions of the second-order auxiliary equations, kept as
/// cross-check oracles (they solve the auxiliary ODEs for arbitrary
/// constants, but only the locked families above descend from the
/// first-order systems).
pub mod aux {
    /// General solution of `chi_ss - (1 - p^2) chi = p k1 / 2` at abscissa
    /// `s`, in the printed exponential form.
    pub fn solaux1(p: f64, k1: f64, k2: f64, s: f64) -> f64 {
        let beta2 = 1.0 - p * p;
        let beta = beta2.sqrt();
        let e = (2.0 * beta * (k2 - 0.5 * s)).exp();
        let d = k1 * k1 - 4.0 + 4.0 * p * p;
        (e - 2.0 * p * k1 + d / e) / (4.0 * beta2)
    }

    /// `p -> 0` simplification of [`solaux1`] (the linear `c = 0` equation).
    pub fn solaux1_p0(k1: f64, k2: f64, s: f64) -> f64 {
        let e = (2.0 * k2 - s).exp();
        0.25 * (e + (k1 * k1 - 4.0) / e)
    }

    /// `k1 -> 0` simplification of [`solaux1`].
    pub fn solaux1_k10(p: f64, k2: f64, s: f64) -> f64 {
        let beta2 = 1.0 - p * p;
        let beta = beta2.sqrt();
        let e = (2.0 * beta * (k2 - 0.5 * s)).exp();
        e / (4.0 * beta2) - 1.0 / e
    }

    /// Closed solution of `chi_ss - chi = k1^2 / chi^3`.
    pub fn aux4sol(k1: f64, k2: f64, s: f64) -> f64 {
        (1.0 + (1.0 + k1 * k1) * (k2 - s).sinh().powi(2)).sqrt()
    }

    /// Closed solution of `chi_ss = k1^2 / chi^3`.
    pub fn aux5sol(k1: f64, k2: f64, s: f64) -> f64 {
        (1.0 + (k2 - k1 * s).powi(2)).sqrt()
    }
}

// ---------------------------------------------------------------------------
// Case 3: Hermitian coupling mu K4 alongside the non-Hermitian i lambda K3.

/// The two three-slot maps with `gamma2 = -gamma1` and `lambda = p mu`:
/// slots `(K1, K2, K3)` (Hermitian map) or `(K1, K2, iK4)` (non-Hermitian).
#[derive(Debug, Clone)]
pub struct Case3Map {
    pub hermitian: bool,
    pub p: f64,
    pub k1: f64,
    /// Phase constant of the auxiliary family (`m0` in `m(t) - m0`).
    pub m0: f64,
    pub branch_sign: f64,
}

/// Sampled case-3 map data. `gamma2 = -gamma1` holds identically and is not
/// stored separately.
#[derive(Debug, Clone)]
pub struct Case3Solution {
    pub grid: TimeGrid,
    pub g1: Vec<f64>,
    pub g3: Vec<f64>,
    pub chi: Vec<f64>,
    /// Coefficient of `K4` in the transformed Hamiltonian.
    pub h_k4: Vec<f64>,
}

impl Case3Map {
    pub fn new(hermitian: bool, p: f64, k1: f64, m0: f64) -> Result<Case3Map, CatalogueError> {
        if hermitian {
            if p.abs() >= 1.0 {
                return Err(CatalogueError::InadmissibleP(p));
            }
            let beta2 = 1.0 - p * p;
            if k1 * k1 < 4.0 * beta2 {
                return Err(CatalogueError::DegenerateConstant(
                    "need k1^2 >= 4 (1 - p^2) for a real auxiliary amplitude",
                ));
            }
        } else if p.abs() <= 1.0 {
            // cos(gamma3) = coth(gamma1)/p needs |p| > 1
            return Err(CatalogueError::InadmissibleP(p));
        }
        Ok(Case3Map {
            hermitian,
            p,
            k1,
            m0,
            branch_sign: 1.0,
        })
    }

    /// `(chi, chi_m)` at abscissa `m = int mu`.
    pub fn chi_closed_form(&self, m: f64) -> (f64, f64) {
        let p = self.p;
        let u = m - self.m0;
        if self.hermitian {
            let beta2 = 1.0 - p * p;
            let beta = beta2.sqrt();
            let amp = (self.k1 * self.k1 - 4.0 * beta2).sqrt();
            let chi = (-p * self.k1 + self.branch_sign * amp * (beta * u).cos()) / (2.0 * beta2);
            let chi_m = -self.branch_sign * amp * (beta * u).sin() / (2.0 * beta);
            (chi, chi_m)
        } else {
            let b2 = p * p - 1.0;
            let b = b2.sqrt();
            let chi = (1.0 + p * p * (b * u).cosh()) / b2;
            let chi_m = p * p * (b * u).sinh() / b;
            (chi, chi_m)
        }
    }

    /// Auxiliary right-hand side `chi_mm = F(chi)` of the case-3 systems.
    pub fn aux_rhs(&self, chi: f64) -> f64 {
        let p = self.p;
        if self.hermitian {
            -(1.0 - p * p) * chi - 0.5 * p * self.k1
        } else {
            (p * p - 1.0) * chi - 1.0
        }
    }

    /// First-order system `(dgamma1/dt, dgamma3/dt)` at coefficient value
    /// `mu` (with `lambda = p mu`).
    pub fn system_rhs(&self, g1: f64, g3: f64, mu: f64) -> (f64, f64) {
        let lambda = self.p * mu;
        if self.hermitian {
            (
                -0.5 * mu * g3.sinh(),
                mu * g3.cosh() * (2.0 * g1).tanh() - lambda,
            )
        } else {
            (
                -0.5 * lambda * g3.sin(),
                mu - lambda * g3.cos() / (2.0 * g1).tanh(),
            )
        }
    }

    /// Pointwise `(gamma1, gamma3, K4 coefficient of h)` at arbitrary `t`.
    pub fn at(&self, mu: &CoeffFn, t: f64) -> Result<(f64, f64, f64), CatalogueError> {
        let m = mu.antideriv(0.0, t);
        let mu_t = mu.eval(t);
        let (chi, chi_m) = self.chi_closed_form(m);
        if self.hermitian {
            let g1 = 0.5 * chi.asinh();
            let den = (1.0 + chi * chi).sqrt();
            let cosh3 = (2.0 * self.p * chi - self.k1) / (2.0 * den);
            let sinh3 = -chi_m / den;
            if cosh3 < 1.0 - 1e-9 {
                return Err(CatalogueError::DomainViolation {
                    t,
                    what: "gamma3 hyperbolic cosine fell below 1",
                });
            }
            let g3 = (cosh3.max(1.0) + sinh3).ln();
            Ok((
                g1,
                g3,
                mu_t * (2.0 * self.p * chi - self.k1) / (2.0 * (1.0 + chi * chi)),
            ))
        } else {
            if chi <= 1.0 {
                return Err(CatalogueError::DomainViolation {
                    t,
                    what: "chi must exceed 1",
                });
            }
            let g1 = 0.5 * chi.acosh();
            let root = (chi * chi - 1.0).sqrt();
            let sin3 = -chi_m / (self.p * root);
            let cos3 = ((chi + 1.0) / (chi - 1.0)).sqrt() / self.p;
            Ok((g1, sin3.atan2(cos3), mu_t / (chi - 1.0)))
        }
    }

    /// Sample the map over a grid.
    pub fn solve(&self, mu: &CoeffFn, grid: &TimeGrid) -> Result<Case3Solution, CatalogueError> {
        let mut out = Case3Solution {
            grid: *grid,
            g1: Vec::with_capacity(grid.len()),
            g3: Vec::with_capacity(grid.len()),
            chi: Vec::with_capacity(grid.len()),
            h_k4: Vec::with_capacity(grid.len()),
        };
        for t in grid.times() {
            let (chi, _) = self.chi_closed_form(mu.antideriv(0.0, t));
            let (g1, g3, h_k4) = self.at(mu, t)?;
            out.g1.push(g1);
            out.g3.push(g3);
            out.chi.push(chi);
            out.h_k4.push(h_k4);
        }
        Ok(out)
    }
}
