//! The Beta basis function.
//!
//! A one-dimensional beta kernel has compact support `(u0, u1)` and two
//! shape exponents `p`, `q`. Depending on which exponents vanish it behaves
//! as a bell (both positive), a rising or falling sigmoid-like ramp (one
//! positive), or a constant (both zero). The multi-dimensional kernel is
//! the product of per-dimension kernels.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Resampling budget for drawing an ordered `(u0, u1)` pair.
pub const MAX_SUPPORT_DRAWS: usize = 10_000;

/// Minimum support width accepted when sampling.
pub const MIN_SUPPORT_WIDTH: f64 = 1e-6;

/// Parameters of a one-dimensional beta kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBetaParams")]
pub struct BetaParams {
    p: f64,
    q: f64,
    u0: f64,
    u1: f64,
    uc: f64,
}

#[derive(Deserialize)]
struct RawBetaParams {
    p: f64,
    q: f64,
    u0: f64,
    u1: f64,
}

impl TryFrom<RawBetaParams> for BetaParams {
    type Error = Error;

    fn try_from(raw: RawBetaParams) -> Result<Self> {
        BetaParams::new(raw.p, raw.q, raw.u0, raw.u1)
    }
}

impl BetaParams {
    pub fn new(p: f64, q: f64, u0: f64, u1: f64) -> Result<Self> {
        if ![p, q, u0, u1].iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("beta parameters must be finite"));
        }
        if p < 0.0 || q < 0.0 {
            return Err(Error::invalid(format!(
                "beta exponents must be non-negative, got p={p}, q={q}"
            )));
        }
        if u0 >= u1 {
            return Err(Error::invalid(format!(
                "beta support needs u0 < u1, got u0={u0}, u1={u1}"
            )));
        }
        let uc = if p + q > 0.0 {
            (p * u1 + q * u0) / (p + q)
        } else {
            0.5 * (u0 + u1)
        };
        Ok(Self { p, q, u0, u1, uc })
    }

    /// The constant kernel (`p = q = 0`), which evaluates to 1 everywhere.
    pub fn constant() -> Self {
        Self::new(0.0, 0.0, 0.0, 1.0).expect("constant kernel is valid")
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn u0(&self) -> f64 {
        self.u0
    }

    pub fn u1(&self) -> f64 {
        self.u1
    }

    /// Kernel center. For the constant kernel this is the support midpoint.
    pub fn uc(&self) -> f64 {
        self.uc
    }

    /// Evaluates the kernel at `u`. Always in `[0, 1]`.
    ///
    /// Boundary points `u0` and `u1` take the value of the outer branch.
    pub fn eval(&self, u: f64) -> f64 {
        let Self { p, q, u0, u1, uc } = *self;
        match (p > 0.0, q > 0.0) {
            (true, true) => {
                if u <= u0 || u >= u1 {
                    return 0.0;
                }
                let left = (u - u0) / (uc - u0);
                let right = (u - u1) / (uc - u1);
                debug_assert!(left > 0.0 && right > 0.0);
                (left.powf(p) * right.powf(q)).min(1.0)
            }
            (true, false) => {
                if u <= u0 {
                    0.0
                } else if u >= u1 {
                    1.0
                } else {
                    ((u - u0) / (uc - u0)).powf(p).min(1.0)
                }
            }
            (false, true) => {
                if u <= u0 {
                    1.0
                } else if u >= u1 {
                    0.0
                } else {
                    ((u - u1) / (uc - u1)).powf(q).min(1.0)
                }
            }
            (false, false) => 1.0,
        }
    }
}

/// Free-function form of [`BetaParams::eval`].
pub fn beta_1d(u: f64, params: &BetaParams) -> f64 {
    params.eval(u)
}

/// Product of one-dimensional kernels over paired coordinates.
pub fn beta_nd(u: &[f64], params: &[BetaParams]) -> Result<f64> {
    if u.len() != params.len() {
        return Err(Error::DimensionMismatch {
            expected: params.len(),
            got: u.len(),
            context: "beta_nd coordinates",
        });
    }
    if u.is_empty() {
        return Err(Error::invalid("beta_nd needs at least one dimension"));
    }
    let mut acc = 1.0;
    for (x, b) in u.iter().zip(params) {
        acc *= b.eval(*x);
        if acc == 0.0 {
            break;
        }
    }
    Ok(acc)
}

/// Closed intervals from which beta parameters are drawn uniformly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaRanges {
    pub p: (f64, f64),
    pub q: (f64, f64),
    pub u0: (f64, f64),
    pub u1: (f64, f64),
}

impl BetaRanges {
    pub fn validate(&self) -> Result<()> {
        for (name, (lo, hi)) in [("p", self.p), ("q", self.q), ("u0", self.u0), ("u1", self.u1)] {
            if !lo.is_finite() || !hi.is_finite() {
                return Err(Error::invalid(format!("{name} range must be finite")));
            }
            if lo > hi {
                return Err(Error::invalid(format!(
                    "{name} range is empty: lower {lo} > upper {hi}"
                )));
            }
        }
        if self.p.0 < 0.0 || self.q.0 < 0.0 {
            return Err(Error::invalid("p and q lower bounds must be non-negative"));
        }
        Ok(())
    }
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// Draws one kernel: `p`, `q`, `u0`, `u1` independently uniform over their
/// ranges, redrawing the support pair until `u1 - u0` exceeds
/// [`MIN_SUPPORT_WIDTH`].
pub fn sample_beta_params<R: Rng + ?Sized>(ranges: &BetaRanges, rng: &mut R) -> Result<BetaParams> {
    ranges.validate()?;
    let p = uniform(rng, ranges.p);
    let q = uniform(rng, ranges.q);
    for _ in 0..MAX_SUPPORT_DRAWS {
        let u0 = uniform(rng, ranges.u0);
        let u1 = uniform(rng, ranges.u1);
        if u1 - u0 > MIN_SUPPORT_WIDTH {
            return BetaParams::new(p, q, u0, u1);
        }
    }
    Err(Error::UnsatisfiableRanges {
        attempts: MAX_SUPPORT_DRAWS,
    })
}
