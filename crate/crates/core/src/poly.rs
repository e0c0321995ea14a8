//! Dense polynomials over the integers or the integers mod `q`, together with
//! the schoolbook multiplier every other method is checked against.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Dense polynomial; `coeffs[i]` is the coefficient of `x^i`.
///
/// Always normalized: no trailing zeros, and the zero polynomial is `[0]`.
/// With a modulus every coefficient lies in `[0, q)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Polynomial {
    coeffs: Vec<i64>,
    modulus: Option<u64>,
}

fn check_modulus(modulus: Option<u64>) -> Result<()> {
    match modulus {
        Some(q) if q < 2 => Err(Error::InvalidInput(format!("modulus must be at least 2, got {q}"))),
        Some(q) if q > i64::MAX as u64 => Err(Error::InvalidInput(format!(
            "modulus {q} does not fit in a signed 64-bit word"
        ))),
        _ => Ok(()),
    }
}

fn trim(coeffs: &mut Vec<i64>) {
    while coeffs.len() > 1 && coeffs[coeffs.len() - 1] == 0 {
        coeffs.pop();
    }
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<i64>, modulus: Option<u64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidInput("coefficient list is empty".into()));
        }
        check_modulus(modulus)?;
        if let Some(q) = modulus {
            let q = q as i64;
            for c in coeffs.iter_mut() {
                *c = c.rem_euclid(q);
            }
        }
        trim(&mut coeffs);
        Ok(Self { coeffs, modulus })
    }

    pub fn zero(modulus: Option<u64>) -> Result<Self> {
        Self::new(vec![0], modulus)
    }

    /// Deterministic random polynomial with exactly `num_coeffs` coefficients.
    ///
    /// Coefficients are uniform in `[0, coeff_bound)`; the leading one is drawn
    /// from the nonzero part of that range (and below `q` in modular mode) so
    /// the degree is always `num_coeffs - 1`.
    pub fn random(num_coeffs: usize, coeff_bound: u64, seed: u64, modulus: Option<u64>) -> Result<Self> {
        if num_coeffs == 0 {
            return Err(Error::InvalidInput("num_coeffs must be at least 1".into()));
        }
        check_modulus(modulus)?;
        let bound = coeff_bound.min(i64::MAX as u64);
        let leading_bound = modulus.map_or(bound, |q| bound.min(q));
        if leading_bound < 2 {
            return Err(Error::InvalidInput(format!(
                "coefficient bound {coeff_bound} leaves no nonzero leading coefficient"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut coeffs: Vec<i64> = (0..num_coeffs - 1).map(|_| rng.gen_range(0..bound) as i64).collect();
        coeffs.push(rng.gen_range(1..leading_bound) as i64);
        Self::new(coeffs, modulus)
    }

    /// Builds a normalized polynomial from wide intermediate coefficients.
    pub(crate) fn from_wide(wide: &[i128], modulus: Option<u64>) -> Result<Self> {
        let mut coeffs = Vec::with_capacity(wide.len().max(1));
        match modulus {
            Some(q) => coeffs.extend(wide.iter().map(|c| c.rem_euclid(q as i128) as i64)),
            None => {
                for (i, &c) in wide.iter().enumerate() {
                    let c = i64::try_from(c).map_err(|_| {
                        Error::CoefficientOverflow(format!("coefficient {i} of the product exceeds 64 bits"))
                    })?;
                    coeffs.push(c);
                }
            }
        }
        if coeffs.is_empty() {
            coeffs.push(0);
        }
        trim(&mut coeffs);
        Ok(Self { coeffs, modulus })
    }

    pub fn coeffs(&self) -> &[i64] {
        &self.coeffs
    }

    pub fn modulus(&self) -> Option<u64> {
        self.modulus
    }

    /// Number of stored coefficients (at least 1).
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs == [0]
    }

    /// Largest coefficient magnitude.
    pub fn max_abs(&self) -> u64 {
        self.coeffs.iter().map(|c| c.unsigned_abs()).max().unwrap_or(0)
    }

    pub(crate) fn widened(&self) -> Vec<i128> {
        self.coeffs.iter().map(|&c| c as i128).collect()
    }

    pub(crate) fn ensure_same_ring(&self, other: &Self) -> Result<()> {
        if self.modulus != other.modulus {
            return Err(Error::RingMismatch {
                left: self.modulus,
                right: other.modulus,
            });
        }
        Ok(())
    }

    fn zip_with(&self, other: &Self, f: impl Fn(i128, i128) -> i128) -> Result<Self> {
        self.ensure_same_ring(other)?;
        let n = self.len().max(other.len());
        let get = |p: &Self, i: usize| p.coeffs.get(i).copied().unwrap_or(0) as i128;
        let wide: Vec<i128> = (0..n).map(|i| f(get(self, i), get(other, i))).collect();
        Self::from_wide(&wide, self.modulus)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |x, y| x + y)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |x, y| x - y)
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.coeffs.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Tally of coefficient-level work done by one multiplication call.
///
/// A fundamental multiplication is one coefficient-by-coefficient product at
/// the recursion base case. Additions are counted empirically across the
/// base case, evaluation, interpolation and recomposition.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct OpCounter {
    pub fundamental_mults: u64,
    pub fundamental_adds: u64,
    /// Deepest recursion level reached; 0 when the call went straight to the base case.
    pub max_depth: u32,
}

impl OpCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn merge(&mut self, other: &OpCounter) {
        self.fundamental_mults += other.fundamental_mults;
        self.fundamental_adds += other.fundamental_adds;
        self.max_depth = self.max_depth.max(other.max_depth);
    }
}

/// Quadratic product of two raw coefficient slices.
/// Callers guarantee the sums fit in `i128` (see [`schoolbook_mul`] and the
/// recursive multipliers' headroom check), so the loop does not re-check.
pub(crate) fn schoolbook_raw(a: &[i128], b: &[i128], counter: &mut OpCounter) -> Vec<i128> {
    debug_assert!(!a.is_empty() && !b.is_empty());
    let mut out = vec![0i128; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (o, &y) in out[i..].iter_mut().zip(b) {
            *o = o.wrapping_add(x.wrapping_mul(y));
        }
    }
    let (m, n) = (a.len() as u64, b.len() as u64);
    counter.fundamental_mults += m * n;
    counter.fundamental_adds += (m - 1) * (n - 1);
    out
}

/// Classical `O(m·n)` product; the correctness oracle for every other method.
pub fn schoolbook_mul(a: &Polynomial, b: &Polynomial, counter: &mut OpCounter) -> Result<Polynomial> {
    a.ensure_same_ring(b)?;
    let bits = |x: u128| 128 - x.leading_zeros();
    let terms = a.len().min(b.len()) as u128;
    if bits(a.max_abs() as u128) + bits(b.max_abs() as u128) + bits(terms) > 127 {
        return Err(Error::CoefficientOverflow(
            "coefficient sums of the product exceed 127 bits".into(),
        ));
    }
    let wide = schoolbook_raw(&a.widened(), &b.widened(), counter);
    Polynomial::from_wide(&wide, a.modulus)
}
