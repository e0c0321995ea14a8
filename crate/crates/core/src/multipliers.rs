//! Karatsuba and Toom-Cook k-way multiplication.
//!
//! Both methods share one evaluate/multiply/interpolate engine: Karatsuba is
//! the `k = 2` instance with points `{0, 1, ∞}`. Operands are lifted to
//! `i128`, split into `k` equal parts (zero-padded), evaluated at `2k - 1`
//! points, multiplied pointwise by recursion, and interpolated back with
//! exact integer division. Modular inputs are reduced only once, on the
//! final product, so moduli without small inverses (powers of two) work.
//!
//! The engine hands the `2k - 1` pointwise subproducts of the upper
//! recursion levels to a [`Fanout`], which is how the parallel executor
//! plugs in without this crate knowing about threads.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::plan::{Method, MethodPlan};
use crate::poly::{schoolbook_raw, OpCounter, Polynomial};
use crate::predict::recursion_depth;

/// An evaluation point of the Toom-Cook scheme.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Point {
    Finite(i64),
    Infinity,
}

const FINITE_POINTS: [i64; 6] = [0, 1, -1, 2, -2, 3];

/// Evaluation points for a `k`-way split: `{0, 1, ∞}` for `k = 2`,
/// `{0, 1, -1, 2, ∞}` for `k = 3` and `{0, 1, -1, 2, -2, 3, ∞}` for `k = 4`.
pub fn evaluation_points(k: usize) -> Vec<Point> {
    let mut pts: Vec<Point> = FINITE_POINTS[..2 * k - 2].iter().map(|&t| Point::Finite(t)).collect();
    pts.push(Point::Infinity);
    pts
}

/// Splits `coeffs` into `k` parts of length `⌈len / k⌉`, zero-padding the tail.
pub fn split<T: Copy + Default>(coeffs: &[T], k: usize) -> Vec<Vec<T>> {
    assert!(k >= 2, "split factor must be at least 2");
    let part_len = coeffs.len().div_ceil(k);
    (0..k)
        .map(|i| {
            let mut part = vec![T::default(); part_len];
            let start = (i * part_len).min(coeffs.len());
            let end = ((i + 1) * part_len).min(coeffs.len());
            part[..end - start].copy_from_slice(&coeffs[start..end]);
            part
        })
        .collect()
}

/// Computes `Σ parts[i] · x^(i · stride)`.
pub fn recompose(parts: &[Vec<i128>], stride: usize) -> Vec<i128> {
    let len = parts
        .iter()
        .enumerate()
        .filter(|(_, p)| !p.is_empty())
        .map(|(i, p)| i * stride + p.len())
        .max()
        .unwrap_or(0);
    let mut out = vec![0i128; len];
    for (i, part) in parts.iter().enumerate() {
        for (o, &c) in out[i * stride..].iter_mut().zip(part) {
            *o += c;
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Frac {
    num: i128,
    den: i128,
}

fn gcd(mut a: i128, mut b: i128) -> i128 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl Frac {
    fn new(num: i128, den: i128) -> Self {
        let g = gcd(num, den).max(1);
        let s = if den < 0 { -1 } else { 1 };
        Frac {
            num: s * num / g,
            den: s * den / g,
        }
    }
    fn int(n: i128) -> Self {
        Frac { num: n, den: 1 }
    }
    fn sub(self, o: Frac) -> Frac {
        Frac::new(self.num * o.den - o.num * self.den, self.den * o.den)
    }
    fn mul(self, o: Frac) -> Frac {
        Frac::new(self.num * o.num, self.den * o.den)
    }
    fn div(self, o: Frac) -> Frac {
        Frac::new(self.num * o.den, self.den * o.num)
    }
}

/// Inverts a small nonsingular integer matrix exactly over the rationals.
fn invert(m: &[Vec<i128>]) -> Vec<Vec<Frac>> {
    let n = m.len();
    let mut a: Vec<Vec<Frac>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r: Vec<Frac> = row.iter().map(|&x| Frac::int(x)).collect();
            r.extend((0..n).map(|j| Frac::int((i == j) as i128)));
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .find(|&r| a[r][col].num != 0)
            .expect("evaluation matrix is singular");
        a.swap(col, pivot);
        let p = a[col][col];
        for x in a[col].iter_mut() {
            *x = x.div(p);
        }
        for r in 0..n {
            if r != col && a[r][col].num != 0 {
                let f = a[r][col];
                let pivot_row = a[col].clone();
                for (x, v) in a[r].iter_mut().zip(pivot_row) {
                    *x = x.sub(v.mul(f));
                }
            }
        }
    }
    a.into_iter().map(|row| row[n..].to_vec()).collect()
}

/// The fixed evaluation/interpolation data for one splitting factor.
#[derive(Clone, Debug)]
pub struct EvalScheme {
    k: usize,
    points: Vec<Point>,
    /// Inverse evaluation matrix scaled by `denom`; row `j` yields block `j`.
    inv_num: Vec<Vec<i128>>,
    denom: i128,
}

impl EvalScheme {
    pub fn new(k: usize) -> Result<Self> {
        if !(2..=4).contains(&k) {
            return Err(Error::InvalidPlan(format!(
                "splitting factor {k} is not supported (2..=4)"
            )));
        }
        let points = evaluation_points(k);
        let size = 2 * k - 1;
        let matrix: Vec<Vec<i128>> = points
            .iter()
            .map(|p| match *p {
                Point::Finite(t) => {
                    let mut row = Vec::with_capacity(size);
                    let mut pow = 1i128;
                    for _ in 0..size {
                        row.push(pow);
                        pow *= t as i128;
                    }
                    row
                }
                Point::Infinity => (0..size).map(|j| (j == size - 1) as i128).collect(),
            })
            .collect();
        let inv = invert(&matrix);
        let denom = inv.iter().flatten().fold(1i128, |acc, f| acc / gcd(acc, f.den) * f.den);
        let inv_num = inv
            .iter()
            .map(|row| row.iter().map(|f| f.num * (denom / f.den)).collect())
            .collect();
        Ok(Self {
            k,
            points,
            inv_num,
            denom,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    /// Common denominator of the interpolation formulas.
    pub fn denominator(&self) -> i128 {
        self.denom
    }

    /// Largest `Σ |t|^j` over the finite points: how much one evaluation can
    /// grow coefficient magnitudes.
    fn growth(&self) -> u128 {
        self.points
            .iter()
            .filter_map(|p| match p {
                Point::Finite(t) => Some((0..self.k as u32).map(|j| (t.unsigned_abs() as u128).pow(j)).sum()),
                Point::Infinity => None,
            })
            .max()
            .unwrap_or(1)
    }

    fn max_row_weight(&self) -> u128 {
        self.inv_num
            .iter()
            .map(|r| r.iter().map(|x| x.unsigned_abs()).sum())
            .max()
            .unwrap_or(1)
    }

    /// Values of `Σ parts[j] · t^j` at every evaluation point.
    pub fn evaluate(&self, parts: &[Vec<i128>], counter: &mut OpCounter) -> Vec<Vec<i128>> {
        assert_eq!(parts.len(), self.k, "expected {} parts", self.k);
        let len = parts[0].len();
        self.points
            .iter()
            .map(|p| match *p {
                Point::Infinity => parts[self.k - 1].clone(),
                Point::Finite(0) => parts[0].clone(),
                Point::Finite(t) => {
                    let t = t as i128;
                    let mut acc = parts[self.k - 1].clone();
                    for part in parts[..self.k - 1].iter().rev() {
                        for (a, &c) in acc.iter_mut().zip(part) {
                            *a = *a * t + c;
                        }
                    }
                    counter.fundamental_adds += ((self.k - 1) * len) as u64;
                    acc
                }
            })
            .collect()
    }

    /// Recovers the `2k - 1` coefficient blocks of a product from its values
    /// at the evaluation points. Every division must be exact.
    pub fn interpolate(&self, values: &[Vec<i128>], counter: &mut OpCounter) -> Result<Vec<Vec<i128>>> {
        let size = 2 * self.k - 1;
        if values.len() != size {
            return Err(Error::InvalidInput(format!(
                "expected {size} pointwise products, got {}",
                values.len()
            )));
        }
        let len = values.iter().map(Vec::len).max().unwrap_or(0);
        let mut blocks = Vec::with_capacity(size);
        for row in &self.inv_num {
            let mut block = vec![0i128; len];
            let mut terms = 0u64;
            for (&w, v) in row.iter().zip(values) {
                match w {
                    0 => continue,
                    1 => block.iter_mut().zip(v).for_each(|(b, &x)| *b += x),
                    -1 => block.iter_mut().zip(v).for_each(|(b, &x)| *b -= x),
                    w => block.iter_mut().zip(v).for_each(|(b, &x)| *b += w * x),
                }
                terms += 1;
            }
            counter.fundamental_adds += terms.saturating_sub(1) * len as u64;
            if self.denom != 1 {
                for b in block.iter_mut() {
                    if *b % self.denom != 0 {
                        return Err(Error::InexactInterpolation {
                            value: *b,
                            divisor: self.denom,
                        });
                    }
                    *b /= self.denom;
                }
            }
            blocks.push(block);
        }
        Ok(blocks)
    }
}

/// Evaluation stage as a standalone operation; see [`EvalScheme::evaluate`].
pub fn evaluate_parts(parts: &[Vec<i128>], k: usize) -> Result<Vec<Vec<i128>>> {
    let scheme = EvalScheme::new(k)?;
    if parts.len() != k {
        return Err(Error::InvalidInput(format!("expected {k} parts, got {}", parts.len())));
    }
    Ok(scheme.evaluate(parts, &mut OpCounter::new()))
}

/// Interpolation stage as a standalone operation; see [`EvalScheme::interpolate`].
pub fn interpolate(pointwise_products: &[Vec<i128>], k: usize) -> Result<Vec<Vec<i128>>> {
    EvalScheme::new(k)?.interpolate(pointwise_products, &mut OpCounter::new())
}

/// One pointwise subproduct handed to a [`Fanout`].
#[derive(Clone, Debug)]
pub struct SubJob {
    pub index: usize,
    pub a: Vec<i128>,
    pub b: Vec<i128>,
}

#[derive(Clone, Debug)]
pub struct SubResult {
    pub product: Vec<i128>,
    pub counter: OpCounter,
}

/// Executes the independent subproducts of one recursion level.
///
/// Implementations may run jobs in any order on any thread but must return
/// the results in job order.
pub trait Fanout: Sync {
    fn fanout(&self, jobs: Vec<SubJob>, work: &(dyn Fn(SubJob) -> Result<SubResult> + Sync)) -> Result<Vec<SubResult>>;
}

/// Runs every job inline, in order.
#[derive(Clone, Copy, Debug, Default)]
pub struct Inline;

impl Fanout for Inline {
    fn fanout(&self, jobs: Vec<SubJob>, work: &(dyn Fn(SubJob) -> Result<SubResult> + Sync)) -> Result<Vec<SubResult>> {
        jobs.into_iter().map(work).collect()
    }
}

struct Engine<'f> {
    scheme: EvalScheme,
    cutoff: usize,
    parallel_depth: u32,
    fanout: &'f dyn Fanout,
}

impl Engine<'_> {
    /// Product of two equal-length operands; the result has `2n - 1` coefficients.
    fn mul(&self, a: &[i128], b: &[i128], level: u32, counter: &mut OpCounter) -> Result<Vec<i128>> {
        debug_assert_eq!(a.len(), b.len());
        let n = a.len();
        if n <= self.cutoff {
            counter.max_depth = counter.max_depth.max(level);
            return Ok(schoolbook_raw(a, b, counter));
        }
        let k = self.scheme.k;
        let part_len = n.div_ceil(k);
        let va = self.scheme.evaluate(&split(a, k), counter);
        let vb = self.scheme.evaluate(&split(b, k), counter);

        let products: Vec<Vec<i128>> = if level < self.parallel_depth {
            let jobs = va
                .into_iter()
                .zip(vb)
                .enumerate()
                .map(|(index, (a, b))| SubJob { index, a, b })
                .collect();
            let work = |job: SubJob| -> Result<SubResult> {
                let mut c = OpCounter::new();
                let product = self.mul(&job.a, &job.b, level + 1, &mut c)?;
                Ok(SubResult { product, counter: c })
            };
            let results = self.fanout.fanout(jobs, &work)?;
            results
                .into_iter()
                .map(|r| {
                    counter.merge(&r.counter);
                    r.product
                })
                .collect()
        } else {
            va.iter()
                .zip(&vb)
                .map(|(x, y)| self.mul(x, y, level + 1, counter))
                .collect::<Result<_>>()?
        };

        let blocks = self.scheme.interpolate(&products, counter)?;
        counter.fundamental_adds += ((blocks.len() - 1) * (part_len - 1)) as u64;
        let mut out = recompose(&blocks, part_len);
        out.truncate(2 * n - 1);
        Ok(out)
    }
}

fn bits(x: u128) -> u32 {
    128 - x.leading_zeros()
}

/// Rejects operands whose worst-case intermediate values could leave `i128`.
fn check_headroom(scheme: &EvalScheme, max_a: u64, max_b: u64, n: usize, depth: u32) -> Result<()> {
    let needed = bits(max_a as u128)
        + bits(max_b as u128)
        + 2 * depth * bits(scheme.growth())
        + bits(n as u128)
        + bits(scheme.max_row_weight())
        + 1;
    if needed > 126 {
        return Err(Error::CoefficientOverflow(format!(
            "operands need about {needed} bits of intermediate precision; at most 126 are available"
        )));
    }
    Ok(())
}

/// Multiplies with any plan, dispatching subproducts of the top
/// `parallel_depth` recursion levels through `fanout`.
///
/// This is the shared entry point of the sequential and parallel paths; the
/// `workers` field of the plan is not interpreted here.
pub fn multiply_with(
    a: &Polynomial,
    b: &Polynomial,
    plan: &MethodPlan,
    parallel_depth: u32,
    fanout: &dyn Fanout,
    counter: &mut OpCounter,
) -> Result<Polynomial> {
    plan.validate()?;
    a.ensure_same_ring(b)?;
    if plan.method == Method::Schoolbook {
        return crate::poly::schoolbook_mul(a, b, counter);
    }
    let scheme = EvalScheme::new(plan.k as usize)?;
    let n = a.len().max(b.len());
    check_headroom(&scheme, a.max_abs(), b.max_abs(), n, recursion_depth(plan, n))?;

    let mut wa = a.widened();
    let mut wb = b.widened();
    wa.resize(n, 0);
    wb.resize(n, 0);
    let engine = Engine {
        scheme,
        cutoff: plan.base_cutoff as usize,
        parallel_depth,
        fanout,
    };
    let mut product = engine.mul(&wa, &wb, 0, counter)?;
    product.truncate(a.len() + b.len() - 1);
    Polynomial::from_wide(&product, a.modulus())
}

/// Sequential product for any plan.
pub fn multiply(a: &Polynomial, b: &Polynomial, plan: &MethodPlan, counter: &mut OpCounter) -> Result<Polynomial> {
    multiply_with(a, b, plan, 0, &Inline, counter)
}

pub fn karatsuba_mul(a: &Polynomial, b: &Polynomial, plan: &MethodPlan, counter: &mut OpCounter) -> Result<Polynomial> {
    if plan.method != Method::Karatsuba {
        return Err(Error::InvalidPlan(format!(
            "karatsuba_mul called with a {} plan",
            plan.method.name()
        )));
    }
    multiply(a, b, plan, counter)
}

pub fn toomcook_mul(a: &Polynomial, b: &Polynomial, plan: &MethodPlan, counter: &mut OpCounter) -> Result<Polynomial> {
    if plan.method != Method::Toom {
        return Err(Error::InvalidPlan(format!(
            "toomcook_mul called with a {} plan",
            plan.method.name()
        )));
    }
    multiply(a, b, plan, counter)
}
