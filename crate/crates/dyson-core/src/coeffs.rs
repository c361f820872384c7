//! Time-dependent scalar coefficient functions and evaluation grids.
//!
//! The model Hamiltonians are specified through a small catalogue of named
//! coefficient functions (`sin2t`, `cost`, `half_t`, `const:<v>`,
//! `sigma3:<c1>,<c2>,<c3>`) plus tabulated data. Each function exposes its
//! value, derivative and an antiderivative anchored at an explicit lower
//! limit; closed forms are used where available and adaptive Simpson
//! quadrature otherwise.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoeffError {
    #[error("unknown coefficient function `{0}`")]
    UnknownName(String),
    #[error("malformed parameter in `{0}`")]
    BadParameter(String),
    #[error("t = {t} outside tabulated domain [{lo}, {hi}]")]
    OutOfDomain { t: f64, lo: f64, hi: f64 },
    #[error("quadrature did not converge: achieved {achieved:e} > requested {requested:e}")]
    QuadratureFailure { achieved: f64, requested: f64 },
}

/// A scalar coefficient function of time.
///
/// Immutable after construction; evaluation is thread-safe.
#[derive(Debug, Clone, PartialEq)]
pub enum CoeffFn {
    /// `amp * sin(omega * t)`
    SinScaled { omega: f64, amp: f64 },
    /// `amp * cos(omega * t)`
    CosScaled { omega: f64, amp: f64 },
    /// `slope * t`
    Linear { slope: f64 },
    /// `sigma(t)^{-3} / 2` with `sigma(t) = c1 + c2 t + c3 t^2`
    PowerSigma { c1: f64, c2: f64, c3: f64 },
    Constant(f64),
    /// Uniform samples on `[t0, t1]`, evaluated by linear interpolation.
    Tabulated { t0: f64, t1: f64, values: Vec<f64> },
}

impl CoeffFn {
    /// Resolve a catalogue name: `sin2t`, `cost`, `half_t`, `const:<v>`,
    /// `sigma3:<c1>,<c2>,<c3>`.
    pub fn from_name(name: &str) -> Result<CoeffFn, CoeffError> {
        match name {
            "sin2t" => Ok(CoeffFn::SinScaled {
                omega: 2.0,
                amp: 1.0,
            }),
            "cost" => Ok(CoeffFn::CosScaled {
                omega: 1.0,
                amp: 1.0,
            }),
            "half_t" => Ok(CoeffFn::Linear { slope: 0.5 }),
            _ => {
                if let Some(v) = name.strip_prefix("const:") {
                    let v: f64 = v
                        .parse()
                        .map_err(|_| CoeffError::BadParameter(name.to_string()))?;
                    Ok(CoeffFn::Constant(v))
                } else if let Some(cs) = name.strip_prefix("sigma3:") {
                    let parts: Vec<&str> = cs.split(',').collect();
                    if parts.len() != 3 {
                        return Err(CoeffError::BadParameter(name.to_string()));
                    }
                    let mut c = [0.0f64; 3];
                    for (slot, raw) in c.iter_mut().zip(&parts) {
                        *slot = raw
                            .trim()
                            .parse()
                            .map_err(|_| CoeffError::BadParameter(name.to_string()))?;
                    }
                    Ok(CoeffFn::PowerSigma {
                        c1: c[0],
                        c2: c[1],
                        c3: c[2],
                    })
                } else {
                    Err(CoeffError::UnknownName(name.to_string()))
                }
            }
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            CoeffFn::SinScaled { omega, amp } => amp * (omega * t).sin(),
            CoeffFn::CosScaled { omega, amp } => amp * (omega * t).cos(),
            CoeffFn::Linear { slope } => slope * t,
            CoeffFn::PowerSigma { c1, c2, c3 } => {
                let sigma = c1 + c2 * t + c3 * t * t;
                0.5 * sigma.powi(-3)
            }
            CoeffFn::Constant(v) => *v,
            CoeffFn::Tabulated { t0, t1, values } => {
                let n = values.len();
                assert!(n >= 2);
                if t < *t0 - 1e-12 || t > *t1 + 1e-12 {
                    panic!("tabulated coefficient evaluated at t = {t} outside [{t0}, {t1}]");
                }
                let x = ((t - t0) / (t1 - t0) * (n - 1) as f64).clamp(0.0, (n - 1) as f64);
                let i = (x.floor() as usize).min(n - 2);
                let frac = x - i as f64;
                values[i] * (1.0 - frac) + values[i + 1] * frac
            }
        }
    }

    /// First derivative. Tabulated data falls back to central differences.
    pub fn deriv(&self, t: f64) -> f64 {
        match self {
            CoeffFn::SinScaled { omega, amp } => amp * omega * (omega * t).cos(),
            CoeffFn::CosScaled { omega, amp } => -amp * omega * (omega * t).sin(),
            CoeffFn::Linear { slope } => *slope,
            CoeffFn::PowerSigma { c1, c2, c3 } => {
                let sigma = c1 + c2 * t + c3 * t * t;
                let ds = c2 + 2.0 * c3 * t;
                -1.5 * sigma.powi(-4) * ds
            }
            CoeffFn::Constant(_) => 0.0,
            CoeffFn::Tabulated { t0, t1, values } => {
                let h = (t1 - t0) / (values.len() - 1) as f64;
                (self.eval((t + h).min(*t1)) - self.eval((t - h).max(*t0)))
                    / ((t + h).min(*t1) - (t - h).max(*t0))
            }
        }
    }

    /// `int_{t0}^{t} f(s) ds`, closed form when available.
    pub fn antideriv(&self, t0: f64, t: f64) -> f64 {
        match self {
            CoeffFn::SinScaled { omega, amp } => -amp / omega * ((omega * t).cos() - (omega * t0).cos()),
            CoeffFn::CosScaled { omega, amp } => amp / omega * ((omega * t).sin() - (omega * t0).sin()),
            CoeffFn::Linear { slope } => 0.5 * slope * (t * t - t0 * t0),
            CoeffFn::Constant(v) => v * (t - t0),
            _ => self
                .antideriv_quadrature(t0, t, 1e-10)
                .expect("adaptive quadrature failed on a smooth integrand"),
        }
    }

    /// Antiderivative by adaptive Simpson quadrature with absolute tolerance
    /// `tol`. Available for every kind; used as the independent path in the
    /// closed-form-vs-quadrature checks.
    pub fn antideriv_quadrature(&self, t0: f64, t: f64, tol: f64) -> Result<f64, CoeffError> {
        if t == t0 {
            return Ok(0.0);
        }
        let (value, err) = adaptive_simpson(&|s| self.eval(s), t0, t, tol, 40);
        if err > tol * 10.0 {
            return Err(CoeffError::QuadratureFailure {
                achieved: err,
                requested: tol,
            });
        }
        Ok(value)
    }
}

fn simpson(a: f64, fa: f64, b: f64, fb: f64, fm: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

fn adaptive_step(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    fa: f64,
    b: f64,
    fb: f64,
    fm: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> (f64, f64) {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, fa, m, fm, flm);
    let right = simpson(m, fm, b, fb, frm);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        (left + right + delta / 15.0, delta.abs() / 15.0)
    } else {
        let (lv, le) = adaptive_step(f, a, fa, m, fm, flm, left, 0.5 * tol, depth - 1);
        let (rv, re) = adaptive_step(f, m, fm, b, fb, frm, right, 0.5 * tol, depth - 1);
        (lv + rv, le + re)
    }
}

/// Adaptive Simpson integration of `f` over `[a, b]`; returns (value, error
/// estimate).
pub fn adaptive_simpson(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    tol: f64,
    max_depth: u32,
) -> (f64, f64) {
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = simpson(a, fa, b, fb, fm);
    adaptive_step(f, a, fa, b, fb, fm, whole, tol, max_depth)
}

/// Uniform time grid with `steps` intervals, hence `steps + 1` samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t_start: f64,
    pub t_end: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn new(t_start: f64, t_end: f64, steps: usize) -> TimeGrid {
        assert!(t_end > t_start, "grid must have t_end > t_start");
        assert!(steps > 0);
        TimeGrid {
            t_start,
            t_end,
            steps,
        }
    }

    #[inline]
    pub fn dt(&self) -> f64 {
        (self.t_end - self.t_start) / self.steps as f64
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.steps + 1
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn t(&self, i: usize) -> f64 {
        self.t_start + self.dt() * i as f64
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |i| self.t(i))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    #[test]
    fn catalogue_values() {
        let sin2t = CoeffFn::from_name("sin2t").unwrap();
        assert!((sin2t.eval(FRAC_PI_4) - 1.0).abs() < 1e-15);
        let half_t = CoeffFn::from_name("half_t").unwrap();
        assert!((half_t.eval(2.0) - 1.0).abs() < 1e-15);
        let c = CoeffFn::from_name("const:0.7").unwrap();
        assert!((c.eval(-3.0) - 0.7).abs() < 1e-15);
        assert!((c.eval(11.0) - 0.7).abs() < 1e-15);
    }

    #[test]
    fn unknown_name_rejected() {
        assert!(CoeffFn::from_name("tan3t").is_err());
        assert!(CoeffFn::from_name("const:abc").is_err());
        assert!(CoeffFn::from_name("sigma3:1,2").is_err());
    }

    #[test]
    fn antideriv_closed_forms() {
        let sin2t = CoeffFn::from_name("sin2t").unwrap();
        // int_0^{pi/2} sin 2s ds = 1, from -cos(2s)/2.
        assert!((sin2t.antideriv(0.0, FRAC_PI_2) - 1.0).abs() < 1e-14);
        let zero = CoeffFn::Constant(0.0);
        assert!(zero.antideriv(0.0, 5.0) == 0.0);
    }

    #[test]
    fn quadrature_matches_closed_form() {
        let sin2t = CoeffFn::from_name("sin2t").unwrap();
        for &t in &[0.3, 1.0, 2.2, 3.0] {
            let q = sin2t.antideriv_quadrature(0.0, t, 1e-10).unwrap();
            assert!(
                (q - sin2t.antideriv(0.0, t)).abs() < 1e-10,
                "mismatch at t = {t}"
            );
        }
    }

    #[test]
    fn deriv_of_antideriv_is_eval() {
        let names = ["sin2t", "cost", "half_t", "const:0.4", "sigma3:1,0.2,0.1"];
        for name in names {
            let f = CoeffFn::from_name(name).unwrap();
            let h = 1e-5;
            for &t in &[0.5, 1.1, 2.7] {
                let d = (f.antideriv(0.0, t + h) - f.antideriv(0.0, t - h)) / (2.0 * h);
                assert!(
                    (d - f.eval(t)).abs() < 1e-7,
                    "{name} at t = {t}: {d} vs {}",
                    f.eval(t)
                );
            }
        }
    }

    #[test]
    fn tabulated_interpolates_and_guards_domain() {
        let f = CoeffFn::Tabulated {
            t0: 0.0,
            t1: 1.0,
            values: vec![0.0, 1.0, 0.0],
        };
        assert!((f.eval(0.25) - 0.5).abs() < 1e-15);
        let r = std::panic::catch_unwind(|| f.eval(2.0));
        assert!(r.is_err());
    }

    #[test]
    fn grid_is_uniform_and_increasing() {
        let g = TimeGrid::new(0.0, 1.0, 4);
        let ts: Vec<f64> = g.times().collect();
        assert_eq!(ts.len(), 5);
        assert!((ts[3] - 0.75).abs() < 1e-15);
    }
}
