//! Exact rational arithmetic and fast-converging Cauchy reals.
//!
//! Every real-valued answer in this crate is either an exact [`Rational`]
//! or a [`CauchyReal`]: a deterministic, memoized query `n ↦ q_n` with
//! `|q_n − q_{n+1}| < 2^{-n}`, so `q_n` is within `2^{-n+1}` of the limit.
//! Comparisons at finite precision are tri-state ([`Comparison`]); the
//! library never pretends real equality is decidable.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use num::bigint::BigInt;
use num::traits::{One, Signed, Zero};

pub type Rational = num::BigRational;

/// 2^k for any integer k (negative exponents give dyadic fractions).
pub fn pow2(k: i64) -> Rational {
    let one = BigInt::one();
    if k >= 0 {
        Rational::from_integer(one << (k as usize))
    } else {
        Rational::new(one.clone(), one << ((-k) as usize))
    }
}

pub fn rat(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

pub fn rat_int(p: i64) -> Rational {
    Rational::from_integer(BigInt::from(p))
}

/// Canonical "p/q" form with an explicit denominator, e.g. "5/1".
pub fn rational_string(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ParseRationalError {
    #[error("malformed rational literal {0:?}")]
    Malformed(String),
    #[error("zero denominator in {0:?}")]
    ZeroDenominator(String),
}

/// Accepts "p/q" or a bare integer "p".
pub fn parse_rational(s: &str) -> Result<Rational, ParseRationalError> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), Some(d.trim())),
        None => (s, None),
    };
    let p: BigInt = num
        .parse()
        .map_err(|_| ParseRationalError::Malformed(s.to_owned()))?;
    let q: BigInt = match den {
        Some(d) => d
            .parse()
            .map_err(|_| ParseRationalError::Malformed(s.to_owned()))?,
        None => BigInt::one(),
    };
    if q.is_zero() {
        return Err(ParseRationalError::ZeroDenominator(s.to_owned()));
    }
    Ok(Rational::new(p, q))
}

/// Least s ≥ 0 with 2^s ≥ bound. Exact; used to re-index Cauchy moduli.
pub fn log2_ceil(bound: &Rational) -> u32 {
    let mut s = 0u32;
    let mut p = Rational::one();
    while &p < bound {
        p = p * rat_int(2);
        s += 1;
    }
    s
}

/// A rational value with a dyadic error radius: the true value lies in
/// `[value − error, value + error]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Approx {
    pub value: Rational,
    pub error: Rational,
}

impl Approx {
    pub fn new(value: Rational, error: Rational) -> Self {
        debug_assert!(error.is_positive());
        Approx { value, error }
    }

    pub fn lower(&self) -> Rational {
        &self.value - &self.error
    }

    pub fn upper(&self) -> Rational {
        &self.value + &self.error
    }

    pub fn contains(&self, r: &Rational) -> bool {
        &self.lower() <= r && r <= &self.upper()
    }

    pub fn overlaps(&self, other: &Approx) -> bool {
        self.lower() <= other.upper() && other.lower() <= self.upper()
    }

    /// Certified strict upper comparison: true value < r.
    pub fn certifies_below(&self, r: &Rational) -> bool {
        self.upper() < *r
    }

    /// Certified strict lower comparison: true value > r.
    pub fn certifies_above(&self, r: &Rational) -> bool {
        self.lower() > *r
    }
}

impl fmt::Display for Approx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} ± {}",
            rational_string(&self.value),
            rational_string(&self.error)
        )
    }
}

/// Outcome of comparing two reals at precision 2^{-k}.
///
/// `Less`/`Greater` are certified by exact rational arithmetic on the
/// approximants; `Indistinguishable(k)` guarantees `|x − y| < 2^{-k+2}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Comparison {
    Less,
    Greater,
    Indistinguishable(u32),
}

struct Inner {
    approximant: Box<dyn Fn(u32) -> Rational + Send + Sync>,
    cache: Mutex<BTreeMap<u32, Rational>>,
}

/// A point of the real line: deterministic approximant query with
/// `|approximant(n) − approximant(n+1)| < 2^{-n}`.
///
/// Values are immutable; queries are memoized behind a mutex, so the
/// observable behavior is identical to single-threaded evaluation.
#[derive(Clone)]
pub struct CauchyReal {
    inner: Arc<Inner>,
}

impl fmt::Debug for CauchyReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CauchyReal({})", self.approx(10))
    }
}

impl CauchyReal {
    /// The caller promises the fast-Cauchy condition; it is checked by
    /// `validate` in tests and by the point validators downstream.
    pub fn from_fn<F>(f: F) -> Self
    where
        F: Fn(u32) -> Rational + Send + Sync + 'static,
    {
        CauchyReal {
            inner: Arc::new(Inner {
                approximant: Box::new(f),
                cache: Mutex::new(BTreeMap::new()),
            }),
        }
    }

    pub fn constant(r: Rational) -> Self {
        CauchyReal::from_fn(move |_| r.clone())
    }

    pub fn zero() -> Self {
        CauchyReal::constant(Rational::zero())
    }

    pub fn approximant(&self, n: u32) -> Rational {
        if let Some(v) = self.inner.cache.lock().unwrap().get(&n) {
            return v.clone();
        }
        let v = (self.inner.approximant)(n);
        self.inner
            .cache
            .lock()
            .unwrap()
            .insert(n, v.clone());
        v
    }

    /// `(approximant(n), 2^{-n+1})`; the telescoped tail `Σ_{k≥n} 2^{-k}`
    /// bounds the distance to the limit.
    pub fn approx(&self, n: u32) -> Approx {
        Approx::new(self.approximant(n), pow2(1 - n as i64))
    }

    /// Tri-state comparison at precision 2^{-k}. Queries both sides at
    /// k+3 so that `Indistinguishable(k)` certifies `|x−y| ≤ 2^{-k}`,
    /// strictly inside the contract `< 2^{-k+2}`.
    pub fn compare_at(x: &CauchyReal, y: &CauchyReal, k: u32) -> Comparison {
        let m = k + 3;
        let a = x.approximant(m);
        let b = y.approximant(m);
        let threshold = pow2(-(k as i64) - 1);
        let d = &a - &b;
        if d > threshold {
            Comparison::Greater
        } else if -d > threshold {
            Comparison::Less
        } else {
            Comparison::Indistinguishable(k)
        }
    }

    /// Certified strict bound `self < r`, tried at precision k.
    pub fn certify_below(&self, r: &Rational, k: u32) -> bool {
        matches!(
            CauchyReal::compare_at(self, &CauchyReal::constant(r.clone()), k),
            Comparison::Less
        )
    }

    /// Certified strict bound `self > r`, tried at precision k.
    pub fn certify_above(&self, r: &Rational, k: u32) -> bool {
        matches!(
            CauchyReal::compare_at(self, &CauchyReal::constant(r.clone()), k),
            Comparison::Greater
        )
    }

    /// A rational B with |x| ≤ B, obtained from one precision-0 query.
    pub fn magnitude_bound(&self) -> Rational {
        self.approximant(0).abs() + rat_int(2)
    }

    pub fn add(&self, other: &CauchyReal) -> CauchyReal {
        let (x, y) = (self.clone(), other.clone());
        CauchyReal::from_fn(move |n| x.approximant(n + 2) + y.approximant(n + 2))
    }

    pub fn neg(&self) -> CauchyReal {
        let x = self.clone();
        CauchyReal::from_fn(move |n| -x.approximant(n))
    }

    pub fn sub(&self, other: &CauchyReal) -> CauchyReal {
        self.add(&other.neg())
    }

    /// Re-indexes by a certified magnitude bound of both factors so the
    /// fast-Cauchy invariant survives multiplication.
    pub fn mul(&self, other: &CauchyReal) -> CauchyReal {
        let bound = self.magnitude_bound() + other.magnitude_bound() + rat_int(4);
        let shift = log2_ceil(&(bound * rat_int(4)));
        let (x, y) = (self.clone(), other.clone());
        CauchyReal::from_fn(move |n| {
            let m = n + shift;
            x.approximant(m) * y.approximant(m)
        })
    }

    pub fn scale(&self, c: &Rational) -> CauchyReal {
        if c.is_zero() {
            return CauchyReal::zero();
        }
        let shift = log2_ceil(&(c.abs() * rat_int(2)));
        let c = c.clone();
        let x = self.clone();
        CauchyReal::from_fn(move |n| x.approximant(n + shift) * &c)
    }

    pub fn min_of(&self, other: &CauchyReal) -> CauchyReal {
        let (x, y) = (self.clone(), other.clone());
        CauchyReal::from_fn(move |n| x.approximant(n).min(y.approximant(n)))
    }

    pub fn max_of(&self, other: &CauchyReal) -> CauchyReal {
        let (x, y) = (self.clone(), other.clone());
        CauchyReal::from_fn(move |n| x.approximant(n).max(y.approximant(n)))
    }

    pub fn abs(&self) -> CauchyReal {
        let x = self.clone();
        CauchyReal::from_fn(move |n| x.approximant(n).abs())
    }

    /// Reciprocal of a real certified ≥ lb > 0 by the caller. The lower
    /// bound re-indexes the Cauchy modulus of the quotient.
    pub fn recip_with_lower_bound(&self, lb: &Rational) -> CauchyReal {
        assert!(lb.is_positive(), "reciprocal needs a positive lower bound");
        let half_lb = lb / rat_int(2);
        // m0: from here on approximant(m) ≥ lb/2.
        let m0 = log2_ceil(&(rat_int(4) / lb));
        let lipschitz = rat_int(4) / (&half_lb * &half_lb);
        let shift = log2_ceil(&lipschitz);
        let x = self.clone();
        CauchyReal::from_fn(move |n| {
            let m = (n + shift + 2).max(m0);
            let a = x.approximant(m);
            // Clamp defends the invariant against callers whose bound was
            // wrong; certified callers never hit it.
            let a = if a < half_lb { half_lb.clone() } else { a };
            Rational::one() / a
        })
    }

    pub fn div_with_lower_bound(num: &CauchyReal, den: &CauchyReal, lb: &Rational) -> CauchyReal {
        num.mul(&den.recip_with_lower_bound(lb))
    }

    /// √r for rational r ≥ 0, by dyadic bisection.
    pub fn sqrt_rational(r: &Rational) -> CauchyReal {
        assert!(!r.is_negative(), "sqrt of a negative rational");
        let r = r.clone();
        CauchyReal::from_fn(move |n| {
            if r.is_zero() {
                return Rational::zero();
            }
            let mut lo = Rational::zero();
            let mut hi = if r >= Rational::one() {
                r.clone()
            } else {
                Rational::one()
            };
            let target = pow2(-(n as i64) - 1);
            while &hi - &lo > target {
                let mid = (&lo + &hi) / rat_int(2);
                if &mid * &mid <= r {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            (&lo + &hi) / rat_int(2)
        })
    }

    /// Exact check of the fast-Cauchy invariant on the first `depth` steps.
    pub fn validate(&self, depth: u32) -> Result<(), u32> {
        for n in 0..depth {
            let gap = (self.approximant(n) - self.approximant(n + 1)).abs();
            if gap >= pow2(-(n as i64)) {
                return Err(n);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn approx_of_constant_third() {
        let x = CauchyReal::constant(rat(1, 3));
        let a = x.approx(10);
        assert_eq!(a.value, rat(1, 3));
        assert_eq!(a.error, pow2(-9));
    }

    #[test]
    fn approx_reads_the_given_approximant() {
        let x = CauchyReal::from_fn(|n| Rational::one() - pow2(-(n as i64)));
        let a = x.approx(4);
        assert_eq!(a.value, rat(15, 16));
        assert_eq!(a.error, rat(1, 8));
        assert_eq!(x.validate(40), Ok(()));
    }

    #[test]
    fn partial_sums_converge_to_one() {
        // Σ_{k≥1} 2^{-k} via exact partial sums.
        let x = CauchyReal::from_fn(|n| {
            let mut s = Rational::zero();
            for k in 1..=(n as i64 + 1) {
                s += pow2(-k);
            }
            s
        });
        assert_eq!(x.validate(40), Ok(()));
        let a = x.approx(20);
        assert!((a.value - Rational::one()).abs() <= pow2(-19));
    }

    #[test]
    fn compare_certified_and_indistinguishable() {
        let zero = CauchyReal::zero();
        let one = CauchyReal::constant(Rational::one());
        for k in [0, 5, 20] {
            assert_eq!(CauchyReal::compare_at(&zero, &one, k), Comparison::Less);
        }
        let h = CauchyReal::constant(rat(1, 2));
        assert_eq!(
            CauchyReal::compare_at(&h, &h, 30),
            Comparison::Indistinguishable(30)
        );
        let third = CauchyReal::constant(rat(1, 3));
        let approx_third = CauchyReal::constant(rat(333, 1000));
        assert_eq!(
            CauchyReal::compare_at(&third, &approx_third, 20),
            Comparison::Greater
        );
    }

    #[test]
    fn arithmetic_matches_exact_rationals() {
        let h = CauchyReal::constant(rat(1, 2));
        let sum = h.add(&h);
        for k in [5, 20, 40] {
            assert_eq!(
                CauchyReal::compare_at(&sum, &CauchyReal::constant(Rational::one()), k),
                Comparison::Indistinguishable(k)
            );
        }
        let m = CauchyReal::zero().max_of(&CauchyReal::constant(rat_int(-5)));
        assert_eq!(m.approx(20).value, Rational::zero());

        let prod = CauchyReal::constant(rat(1, 3)).mul(&CauchyReal::constant(rat_int(3)));
        for k in [10, 40] {
            let a = prod.approx(k);
            assert!(a.contains(&Rational::one()));
            assert!((a.value - Rational::one()).abs() <= pow2(-(k as i64)));
        }
        assert_eq!(prod.validate(40), Ok(()));
    }

    #[test]
    fn reciprocal_certified_by_lower_bound() {
        let x = CauchyReal::constant(rat(1, 3));
        let r = x.recip_with_lower_bound(&rat(1, 4));
        let a = r.approx(20);
        assert!(a.contains(&rat_int(3)));
        assert_eq!(r.validate(30), Ok(()));
    }

    #[test]
    fn sqrt_brackets_square() {
        let s = CauchyReal::sqrt_rational(&rat_int(2));
        assert_eq!(s.validate(30), Ok(()));
        let sq = s.mul(&s);
        let a = sq.approx(20);
        assert!(a.contains(&rat_int(2)));
        let half = CauchyReal::sqrt_rational(&rat(1, 4));
        assert!(half.approx(20).contains(&rat(1, 2)));
    }

    #[test]
    fn rational_io_roundtrip() {
        let r = parse_rational("-14/21").unwrap();
        assert_eq!(r, rat(-2, 3));
        assert_eq!(rational_string(&r), "-2/3");
        assert_eq!(parse_rational("5").unwrap(), rat_int(5));
        assert_eq!(rational_string(&rat_int(5)), "5/1");
        assert!(parse_rational("0/0").is_err());
        assert!(parse_rational("x").is_err());
    }
}
