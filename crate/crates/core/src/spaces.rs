//! Coded complete separable metric spaces, their points, and the catalog
//! of concrete spaces.
//!
//! A space code is a deterministic enumeration of code points together
//! with a metric on code-point indices. The metric is conceptually a
//! real; every catalog metric except the Hilbert-comb cross-spine
//! distance is rational-valued and takes an exact fast path. Points are
//! fast Cauchy sequences of code-point indices.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use num::traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::enumerate::{self, Index};
use crate::exact::{
    parse_rational, pow2, rat_int, rational_string, Approx, CauchyReal, Comparison, Rational,
};

/// Precision cap (in bits) for the semidecidable membership tests inside
/// the shrink-intervals enumeration. Candidates that cannot be certified
/// inside an interval at this precision are treated as outside.
const SHRINK_DECISION_BITS: u32 = 128;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "space", rename_all = "snake_case")]
pub enum SpaceSpec {
    Reals,
    UnitInterval,
    Halfline,
    Naturals,
    Cantor,
    Baire,
    Comb {
        f: Vec<u32>,
    },
    ShrinkIntervals {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alpha: Option<String>,
    },
    HilbertComb,
}

#[derive(Debug, thiserror::Error)]
pub enum SpaceError {
    #[error("malformed space spec: {0}")]
    MalformedSpec(String),
    #[error("literal {0} does not denote a code point of this space")]
    NotInSpace(String),
    #[error("space has isolated points; no split oracle")]
    NotPerfect,
    #[error("code point has no representable enumeration index")]
    IndexUnrepresentable,
}

/// Description of one code point; the JSON literal forms are
/// space-specific (see `code_point_from_json`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CodePoint {
    Rat(Rational),
    Nat(u64),
    BinWord(Vec<u8>),
    NatWord(Vec<u64>),
    Comb { spine: u64, offset: Rational },
    HilbertOrigin,
    HilbertSpine { scale: u64, axis: u64 },
}

impl fmt::Display for CodePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CodePoint::Rat(r) => write!(f, "{}", rational_string(r)),
            CodePoint::Nat(n) => write!(f, "{n}"),
            CodePoint::BinWord(w) => {
                write!(f, "[")?;
                for (i, b) in w.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{b}")?;
                }
                write!(f, "]")
            }
            CodePoint::NatWord(w) => {
                write!(f, "[")?;
                for (i, a) in w.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, "]")
            }
            CodePoint::Comb { spine, offset } => {
                write!(f, "({spine},{})", rational_string(offset))
            }
            CodePoint::HilbertOrigin => write!(f, "origin"),
            CodePoint::HilbertSpine { scale, axis } => write!(f, "e({scale},{axis})"),
        }
    }
}

struct SpaceInner {
    spec: SpaceSpec,
    comb_table: Vec<u32>,
    alpha: Option<CauchyReal>,
    shrink_cache: Mutex<BTreeMap<Rational, Option<u64>>>,
}

/// A coded complete separable metric space; cheap to clone, identity is
/// the spec.
#[derive(Clone)]
pub struct SpaceCode {
    inner: Arc<SpaceInner>,
}

impl fmt::Debug for SpaceCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SpaceCode({:?})", self.inner.spec)
    }
}

impl PartialEq for SpaceCode {
    fn eq(&self, other: &Self) -> bool {
        self.inner.spec == other.inner.spec
    }
}

pub fn catalog(spec: &SpaceSpec) -> Result<SpaceCode, SpaceError> {
    let mut comb_table = Vec::new();
    let mut alpha = None;
    match spec {
        SpaceSpec::Comb { f } => {
            let mut seen = std::collections::BTreeSet::new();
            for &v in f {
                if !seen.insert(v) {
                    return Err(SpaceError::MalformedSpec(format!(
                        "comb table not injective: value {v} repeats"
                    )));
                }
            }
            comb_table = f.clone();
        }
        SpaceSpec::ShrinkIntervals { alpha: a } => {
            alpha = Some(match a {
                None => CauchyReal::sqrt_rational(&crate::exact::rat(1, 8)), // √2 / 4
                Some(s) => {
                    let r = parse_rational(s)
                        .map_err(|e| SpaceError::MalformedSpec(e.to_string()))?;
                    if !r.is_positive() || r >= crate::exact::rat(1, 2) {
                        return Err(SpaceError::MalformedSpec(
                            "shrink_intervals alpha must lie in (0, 1/2)".into(),
                        ));
                    }
                    CauchyReal::constant(r)
                }
            });
        }
        _ => {}
    }
    Ok(SpaceCode {
        inner: Arc::new(SpaceInner {
            spec: spec.clone(),
            comb_table,
            alpha,
            shrink_cache: Mutex::new(BTreeMap::new()),
        }),
    })
}

impl SpaceCode {
    pub fn spec(&self) -> &SpaceSpec {
        &self.inner.spec
    }

    /// The comb admission map: table entries, then an injective tail
    /// above every table value.
    pub fn comb_f(&self, k: u64) -> u32 {
        let t = &self.inner.comb_table;
        if (k as usize) < t.len() {
            t[k as usize]
        } else {
            let max = t.iter().copied().max().map_or(0, |m| m + 1);
            max + (k as u32 - t.len() as u32)
        }
    }

    pub fn alpha(&self) -> &CauchyReal {
        self.inner.alpha.as_ref().expect("not a shrink-intervals space")
    }

    /// Deterministic enumeration of the dense code set.
    pub fn code_point(&self, i: Index) -> CodePoint {
        match &self.inner.spec {
            SpaceSpec::Reals => CodePoint::Rat(enumerate::rational_all(i)),
            SpaceSpec::UnitInterval => CodePoint::Rat(enumerate::rational_unit(i)),
            SpaceSpec::Halfline => CodePoint::Rat(enumerate::rational_nonneg(i)),
            SpaceSpec::Naturals => CodePoint::Nat(i as u64),
            SpaceSpec::Cantor => CodePoint::BinWord(enumerate::bin_word(i)),
            SpaceSpec::Baire => CodePoint::NatWord(enumerate::nat_word(i)),
            SpaceSpec::Comb { .. } => {
                let (k, j) = enumerate::unpair(i);
                let scale = pow2(-(self.comb_f(k as u64) as i64));
                let offset = if j == 0 {
                    scale
                } else {
                    enumerate::unit_open(j) * scale
                };
                CodePoint::Comb {
                    spine: k as u64,
                    offset,
                }
            }
            SpaceSpec::ShrinkIntervals { .. } => {
                let q = enumerate::rational_all(i);
                match self.shrink_interval_of(&q) {
                    Some(_) => CodePoint::Rat(q),
                    // Candidates not certified inside any interval fall
                    // back to the center of the nearest one.
                    None => CodePoint::Rat(rat_int(nearest_interval(&q) as i64)),
                }
            }
            SpaceSpec::HilbertComb => {
                if i == 0 {
                    CodePoint::HilbertOrigin
                } else {
                    let (m, n) = enumerate::unpair(i - 1);
                    CodePoint::HilbertSpine {
                        scale: m as u64,
                        axis: n as u64,
                    }
                }
            }
        }
    }

    /// Canonical enumeration index of a code point.
    pub fn index_of(&self, p: &CodePoint) -> Option<Index> {
        match (&self.inner.spec, p) {
            (SpaceSpec::Reals, CodePoint::Rat(r)) => enumerate::rational_all_index(r),
            (SpaceSpec::UnitInterval, CodePoint::Rat(r)) => enumerate::rational_unit_index(r),
            (SpaceSpec::Halfline, CodePoint::Rat(r)) => enumerate::rational_nonneg_index(r),
            (SpaceSpec::Naturals, CodePoint::Nat(n)) => Some(*n as Index),
            (SpaceSpec::Cantor, CodePoint::BinWord(w)) => enumerate::bin_word_index(w),
            (SpaceSpec::Baire, CodePoint::NatWord(w)) => enumerate::nat_word_index(w),
            (SpaceSpec::Comb { .. }, CodePoint::Comb { spine, offset }) => {
                let scale = pow2(-(self.comb_f(*spine) as i64));
                if offset > &scale || !offset.is_positive() {
                    return None;
                }
                let j = if *offset == scale {
                    0
                } else {
                    enumerate::unit_open_index(&(offset / &scale))?
                };
                Some(enumerate::pair(*spine as Index, j))
            }
            (SpaceSpec::ShrinkIntervals { .. }, CodePoint::Rat(r)) => {
                self.shrink_interval_of(r)?;
                enumerate::rational_all_index(r)
            }
            (SpaceSpec::HilbertComb, CodePoint::HilbertOrigin) => Some(0),
            (SpaceSpec::HilbertComb, CodePoint::HilbertSpine { scale, axis }) => {
                Some(enumerate::pair(*scale as Index, *axis as Index) + 1)
            }
            _ => None,
        }
    }

    /// Interval number n with q certified inside
    /// [n − α2^{-n}, n + α2^{-n}], decided at the standing precision cap.
    pub fn shrink_interval_of(&self, q: &Rational) -> Option<u64> {
        if let Some(v) = self.inner.shrink_cache.lock().unwrap().get(q) {
            return *v;
        }
        let n = nearest_interval(q);
        let mut result = None;
        if q == &rat_int(n as i64) {
            result = Some(n); // interval centers are always inside
        } else {
            let radius = self.alpha().scale(&pow2(-(n as i64)));
            let lo = CauchyReal::constant(rat_int(n as i64)).sub(&radius);
            let hi = CauchyReal::constant(rat_int(n as i64)).add(&radius);
            let qq = CauchyReal::constant(q.clone());
            for k in [16u32, 64, SHRINK_DECISION_BITS] {
                let above = CauchyReal::compare_at(&qq, &lo, k);
                let below = CauchyReal::compare_at(&qq, &hi, k);
                if above == Comparison::Less || below == Comparison::Greater {
                    break; // certified outside
                }
                if above == Comparison::Greater && below == Comparison::Less {
                    result = Some(n);
                    break;
                }
            }
        }
        self.inner
            .shrink_cache
            .lock()
            .unwrap()
            .insert(q.clone(), result);
        result
    }

    /// Exact metric value where the catalog metric is rational-valued.
    pub fn metric_exact(&self, i: Index, j: Index) -> Option<Rational> {
        let (p, q) = (self.code_point(i), self.code_point(j));
        self.metric_exact_points(&p, &q)
    }

    pub fn metric_exact_points(&self, p: &CodePoint, q: &CodePoint) -> Option<Rational> {
        match (p, q) {
            (CodePoint::Rat(a), CodePoint::Rat(b)) => Some((a - b).abs()),
            (CodePoint::Nat(a), CodePoint::Nat(b)) => {
                Some(rat_int((*a as i64 - *b as i64).abs()))
            }
            (CodePoint::BinWord(a), CodePoint::BinWord(b)) => {
                Some(word_metric(&pad_u64(a), &pad_u64(b)))
            }
            (CodePoint::NatWord(a), CodePoint::NatWord(b)) => Some(word_metric(a, b)),
            (
                CodePoint::Comb { spine: k, offset: a },
                CodePoint::Comb {
                    spine: k2,
                    offset: b,
                },
            ) => {
                let s = pow2(-(self.comb_f(*k) as i64));
                let s2 = pow2(-(self.comb_f(*k2) as i64));
                Some(((s - s2).abs()).max((a - b).abs()))
            }
            (CodePoint::HilbertOrigin, CodePoint::HilbertOrigin) => Some(Rational::zero()),
            (CodePoint::HilbertOrigin, CodePoint::HilbertSpine { scale, .. })
            | (CodePoint::HilbertSpine { scale, .. }, CodePoint::HilbertOrigin) => {
                Some(pow2(-(*scale as i64)))
            }
            (
                CodePoint::HilbertSpine { scale: m, axis: n },
                CodePoint::HilbertSpine { scale: m2, axis: n2 },
            ) => {
                if n == n2 {
                    Some((pow2(-(*m as i64)) - pow2(-(*m2 as i64))).abs())
                } else if m == m2 && n != n2 && pow2(-(*m as i64)).is_zero() {
                    unreachable!()
                } else {
                    None // cross-spine distance is a square root
                }
            }
            _ => None,
        }
    }

    /// The metric as a real number.
    pub fn metric_real(&self, i: Index, j: Index) -> CauchyReal {
        if let Some(d) = self.metric_exact(i, j) {
            return CauchyReal::constant(d);
        }
        // Only the Hilbert-comb cross-spine case lands here.
        let (p, q) = (self.code_point(i), self.code_point(j));
        match (p, q) {
            (
                CodePoint::HilbertSpine { scale: m, .. },
                CodePoint::HilbertSpine { scale: m2, .. },
            ) => {
                let sq = pow2(-2 * m as i64) + pow2(-2 * m2 as i64);
                CauchyReal::sqrt_rational(&sq)
            }
            _ => unreachable!("exact path covers all other code point kinds"),
        }
    }

    /// Metric bracketed at precision 2^{-p}; exact metrics yield the
    /// exact value with a nominal radius.
    pub fn metric_approx(&self, i: Index, j: Index, p: u32) -> Approx {
        match self.metric_exact(i, j) {
            Some(d) => Approx::new(d, pow2(-(p as i64))),
            None => {
                let a = self.metric_real(i, j).approx(p + 1);
                Approx::new(a.value, pow2(-(p as i64)))
            }
        }
    }

    pub fn is_rational_metric(&self) -> bool {
        !matches!(self.inner.spec, SpaceSpec::HilbertComb)
    }

    pub fn is_perfect(&self) -> bool {
        !matches!(
            self.inner.spec,
            SpaceSpec::Naturals | SpaceSpec::HilbertComb
        )
    }

    /// Split oracle for perfect spaces: two distinct code points inside
    /// B(center, radius), with exact rational distance certificates.
    pub fn split_in_ball(&self, center: Index, radius: &Rational) -> Result<Split, SpaceError> {
        if !self.is_perfect() {
            return Err(SpaceError::NotPerfect);
        }
        assert!(radius.is_positive());
        let c = self.code_point(center);
        let second = match (&self.inner.spec, &c) {
            (SpaceSpec::Reals, CodePoint::Rat(r)) => CodePoint::Rat(r + radius / rat_int(4)),
            (SpaceSpec::Halfline, CodePoint::Rat(r)) => CodePoint::Rat(r + radius / rat_int(4)),
            (SpaceSpec::UnitInterval, CodePoint::Rat(r)) => {
                let up = r <= &crate::exact::rat(1, 2);
                let step = if up {
                    (radius / rat_int(4)).min((Rational::one() - r) / rat_int(2))
                } else {
                    -(radius / rat_int(4)).min(r / rat_int(2))
                };
                CodePoint::Rat(r + step)
            }
            (SpaceSpec::Cantor, CodePoint::BinWord(w)) => {
                let mut len = w.len();
                while pow2(-(len as i64)) >= *radius {
                    len += 1;
                }
                let mut w2 = w.clone();
                w2.resize(len, 0);
                w2.push(1);
                CodePoint::BinWord(w2)
            }
            (SpaceSpec::Baire, CodePoint::NatWord(w)) => {
                let mut len = w.len();
                while pow2(-(len as i64)) >= *radius {
                    len += 1;
                }
                let mut w2 = w.clone();
                w2.resize(len, 0);
                w2.push(1);
                CodePoint::NatWord(w2)
            }
            (SpaceSpec::Comb { .. }, CodePoint::Comb { spine, offset }) => {
                let step = (radius / rat_int(2)).min(offset / rat_int(2));
                CodePoint::Comb {
                    spine: *spine,
                    offset: offset - step,
                }
            }
            (SpaceSpec::ShrinkIntervals { .. }, CodePoint::Rat(r)) => {
                let n = self
                    .shrink_interval_of(r)
                    .ok_or_else(|| SpaceError::NotInSpace(c.to_string()))?;
                let toward = rat_int(n as i64) - r; // direction into the interval
                let sign = if toward.is_negative() {
                    -Rational::one()
                } else {
                    Rational::one()
                };
                let mut k = 2i64;
                loop {
                    let step = (radius.clone() * pow2(-k)).min(pow2(-k));
                    let cand = r + &sign * &step;
                    if cand != *r && self.shrink_interval_of(&cand) == Some(n) {
                        break CodePoint::Rat(cand);
                    }
                    k += 1;
                    if k > 200 {
                        return Err(SpaceError::NotInSpace(c.to_string()));
                    }
                }
            }
            _ => unreachable!(),
        };
        let second_idx = self
            .index_of(&second)
            .ok_or(SpaceError::IndexUnrepresentable)?;
        let mutual = self
            .metric_exact_points(&c, &second)
            .expect("split oracles only serve rational-metric spaces");
        debug_assert!(mutual.is_positive() && &mutual < radius);
        Ok(Split {
            first: center,
            second: second_idx,
            mutual_distance: mutual,
        })
    }
}

/// Result of a split-oracle query: distinct code points inside the ball,
/// with their exact mutual distance.
#[derive(Clone, Debug)]
pub struct Split {
    pub first: Index,
    pub second: Index,
    pub mutual_distance: Rational,
}

fn nearest_interval(q: &Rational) -> u64 {
    if q.is_negative() {
        return 0;
    }
    let half = crate::exact::rat(1, 2);
    let shifted = q + half;
    let n = shifted.floor().to_integer();
    use num::ToPrimitive;
    n.to_u64().unwrap_or(u64::MAX)
}

fn pad_u64(w: &[u8]) -> Vec<u64> {
    w.iter().map(|&b| b as u64).collect()
}

/// Product-metric distance between padded words: 2^{-n} at the first
/// disagreement, 0 if the padded sequences coincide.
fn word_metric(a: &[u64], b: &[u64]) -> Rational {
    let len = a.len().max(b.len());
    for n in 0..len {
        let x = a.get(n).copied().unwrap_or(0);
        let y = b.get(n).copied().unwrap_or(0);
        if x != y {
            return pow2(-(n as i64));
        }
    }
    Rational::zero()
}

struct PointInner {
    space: SpaceSpec,
    indices: Box<dyn Fn(u32) -> Index + Send + Sync>,
    cache: Mutex<BTreeMap<u32, Index>>,
    constant: Option<Index>,
}

/// A point of the completion: fast Cauchy sequence of code-point indices
/// with d(a_n, a_{n+1}) < 2^{-n}.
#[derive(Clone)]
pub struct Point {
    inner: Arc<PointInner>,
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.inner.constant {
            Some(i) => write!(f, "Point(const #{i})"),
            None => write!(f, "Point(..)"),
        }
    }
}

impl Point {
    pub fn from_code(space: &SpaceCode, a: Index) -> Point {
        Point {
            inner: Arc::new(PointInner {
                space: space.spec().clone(),
                indices: Box::new(move |_| a),
                cache: Mutex::new(BTreeMap::new()),
                constant: Some(a),
            }),
        }
    }

    pub fn from_fn<F>(space: &SpaceCode, f: F) -> Point
    where
        F: Fn(u32) -> Index + Send + Sync + 'static,
    {
        Point {
            inner: Arc::new(PointInner {
                space: space.spec().clone(),
                indices: Box::new(f),
                cache: Mutex::new(BTreeMap::new()),
                constant: None,
            }),
        }
    }

    pub fn space_spec(&self) -> &SpaceSpec {
        &self.inner.space
    }

    pub fn constant_index(&self) -> Option<Index> {
        self.inner.constant
    }

    pub fn index_at(&self, n: u32) -> Index {
        if let Some(c) = self.inner.constant {
            return c;
        }
        if let Some(i) = self.inner.cache.lock().unwrap().get(&n) {
            return *i;
        }
        let i = (self.inner.indices)(n);
        self.inner.cache.lock().unwrap().insert(n, i);
        i
    }
}

/// Metric extended to points, with total error ≤ 2^{-n}: tail bounds of
/// both sequences plus the code-metric query error.
pub fn metric_on_points(space: &SpaceCode, x: &Point, y: &Point, n: u32) -> Approx {
    assert_eq!(x.space_spec(), space.spec(), "point/space mismatch");
    assert_eq!(y.space_spec(), space.spec(), "point/space mismatch");
    if let (Some(i), Some(j)) = (x.constant_index(), y.constant_index()) {
        // No tails; the code metric alone decides.
        let a = space.metric_approx(i, j, n + 1);
        return Approx::new(a.value, pow2(-(n as i64)));
    }
    let m = n + 3;
    let (i, j) = (x.index_at(m), y.index_at(m));
    let base = space.metric_approx(i, j, n + 2);
    // error ≤ 2^{-n-2} (query) + 2·2^{-m+1} (tails) ≤ 2^{-n}
    Approx::new(base.value, pow2(-(n as i64)))
}

/// Lower/upper rational bounds on d(x, b) for a code point b. Constant
/// points over rational metrics collapse to a zero-width bracket, which
/// keeps downstream certificates exact.
pub fn dist_bounds(space: &SpaceCode, x: &Point, b: Index, p: u32) -> (Rational, Rational) {
    if let Some(i) = x.constant_index() {
        if let Some(d) = space.metric_exact(i, b) {
            return (d.clone(), d);
        }
    }
    let a = metric_on_points(space, x, &Point::from_code(space, b), p);
    (a.lower(), a.upper())
}

/// d(x, b) as a real number; re-indexed so the fast-Cauchy invariant
/// holds regardless of the tails involved.
pub fn dist_real(space: &SpaceCode, x: &Point, b: Index) -> CauchyReal {
    if let Some(i) = x.constant_index() {
        if let Some(d) = space.metric_exact(i, b) {
            return CauchyReal::constant(d);
        }
    }
    let space = space.clone();
    let x = x.clone();
    CauchyReal::from_fn(move |n| metric_on_points(&space, &x, &Point::from_code(&space, b), n + 2).value)
}

/// One certified step of the point condition d(a_n, a_{n+1}) < 2^{-n}.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CauchyStepCert {
    pub step: u32,
    /// Rational upper bound on d(a_n, a_{n+1}), strictly below 2^{-n}.
    pub upper: String,
    pub precision: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PointCheck {
    /// Certification failed to separate d(a_n, a_{n+1}) from 2^{-n}.
    Indeterminate(u32),
    /// d(a_n, a_{n+1}) ≥ 2^{-n} certified: not a point.
    Violation(u32),
}

/// Certifies the Cauchy condition for steps n < depth at precision k.
pub fn validate_point(
    space: &SpaceCode,
    x: &Point,
    depth: u32,
    k: u32,
) -> Result<Vec<CauchyStepCert>, PointCheck> {
    let mut certs = Vec::new();
    for n in 0..depth {
        let (i, j) = (x.index_at(n), x.index_at(n + 1));
        let bound = pow2(-(n as i64));
        if let Some(d) = space.metric_exact(i, j) {
            if d < bound {
                certs.push(CauchyStepCert {
                    step: n,
                    upper: rational_string(&d),
                    precision: 0,
                });
                continue;
            }
            return Err(PointCheck::Violation(n));
        }
        let d = space.metric_real(i, j);
        match CauchyReal::compare_at(&d, &CauchyReal::constant(bound.clone()), k) {
            Comparison::Less => {
                let a = d.approx(k + 2);
                certs.push(CauchyStepCert {
                    step: n,
                    upper: rational_string(&a.upper()),
                    precision: k + 2,
                });
            }
            Comparison::Greater => return Err(PointCheck::Violation(n)),
            Comparison::Indistinguishable(_) => return Err(PointCheck::Indeterminate(n)),
        }
    }
    Ok(certs)
}

/// A certified inhabitant of the punctured ball P(x, q).
#[derive(Clone, Debug)]
pub struct Inhabitant {
    pub index: Index,
    pub point: CodePoint,
    pub dist_lower: Rational,
    pub dist_upper: Rational,
    pub precision: u32,
}

/// Scans the code enumeration for b with certified 0 < d(x,b) < q.
pub fn isolated_search(
    space: &SpaceCode,
    x: &Point,
    q: &Rational,
    budget: Index,
) -> Option<Inhabitant> {
    assert!(q.is_positive());
    let base = crate::exact::log2_ceil(&(rat_int(4) / q)).max(4);
    for b in 0..budget {
        for p in [base, base + 16, base + 48] {
            let d = metric_on_points(space, x, &Point::from_code(space, b), p);
            let (lo, hi) = (d.lower(), d.upper());
            if lo.is_positive() && &hi < q {
                return Some(Inhabitant {
                    index: b,
                    point: space.code_point(b),
                    dist_lower: lo,
                    dist_upper: hi,
                    precision: p,
                });
            }
            // Certified out of range: no deeper precision will help.
            if !d.value.is_positive() && d.value.clone().abs() > d.error {
                break;
            }
            if d.lower() > *q {
                break;
            }
        }
    }
    None
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntervalSide {
    Left,
    Right,
}

/// The endpoint n ± α2^{-n} of a shrink interval, as a point approached
/// from inside the interval. These are the real witnesses whose escape
/// certificates are symbolic (the endpoint is excluded by a half-open
/// member), not numeric.
pub fn shrink_endpoint_point(space: &SpaceCode, interval: u64, side: IntervalSide) -> Point {
    let alpha = space.alpha().clone();
    let sp = space.clone();
    Point::from_fn(space, move |k| {
        let m = k + 5;
        let inset = alpha.approximant(m) - pow2(-(m as i64) + 2);
        let delta = inset * pow2(-(interval as i64));
        let q = match side {
            IntervalSide::Right => rat_int(interval as i64) + delta,
            IntervalSide::Left => rat_int(interval as i64) - delta,
        };
        debug_assert_eq!(sp.shrink_interval_of(&q), Some(interval));
        sp.index_of(&CodePoint::Rat(q))
            .expect("endpoint approximants stay representable")
    })
}

/// Space-specific JSON literal for a code point.
pub fn code_point_to_json(p: &CodePoint) -> serde_json::Value {
    use serde_json::{json, Value};
    match p {
        CodePoint::Rat(r) => Value::String(rational_string(r)),
        CodePoint::Nat(n) => json!(n),
        CodePoint::BinWord(w) => json!(w),
        CodePoint::NatWord(w) => json!(w),
        CodePoint::Comb { spine, offset } => json!([spine, rational_string(offset)]),
        CodePoint::HilbertOrigin => Value::String("origin".into()),
        CodePoint::HilbertSpine { scale, axis } => json!([scale, axis]),
    }
}

pub fn code_point_from_json(
    space: &SpaceCode,
    v: &serde_json::Value,
) -> Result<CodePoint, SpaceError> {
    use serde_json::Value;
    let bad = || SpaceError::NotInSpace(v.to_string());
    let p = match space.spec() {
        SpaceSpec::Reals | SpaceSpec::UnitInterval | SpaceSpec::Halfline
        | SpaceSpec::ShrinkIntervals { .. } => {
            let s = v.as_str().ok_or_else(bad)?;
            CodePoint::Rat(parse_rational(s).map_err(|_| bad())?)
        }
        SpaceSpec::Naturals => CodePoint::Nat(v.as_u64().ok_or_else(bad)?),
        SpaceSpec::Cantor => {
            let arr = v.as_array().ok_or_else(bad)?;
            let mut w = Vec::with_capacity(arr.len());
            for x in arr {
                let b = x.as_u64().ok_or_else(bad)?;
                if b > 1 {
                    return Err(bad());
                }
                w.push(b as u8);
            }
            CodePoint::BinWord(w)
        }
        SpaceSpec::Baire => {
            let arr = v.as_array().ok_or_else(bad)?;
            let mut w = Vec::with_capacity(arr.len());
            for x in arr {
                w.push(x.as_u64().ok_or_else(bad)?);
            }
            CodePoint::NatWord(w)
        }
        SpaceSpec::Comb { .. } => {
            let arr = v.as_array().ok_or_else(bad)?;
            if arr.len() != 2 {
                return Err(bad());
            }
            let spine = arr[0].as_u64().ok_or_else(bad)?;
            let offset = parse_rational(arr[1].as_str().ok_or_else(bad)?).map_err(|_| bad())?;
            CodePoint::Comb { spine, offset }
        }
        SpaceSpec::HilbertComb => match v {
            Value::String(s) if s == "origin" => CodePoint::HilbertOrigin,
            Value::Array(arr) if arr.len() == 2 => CodePoint::HilbertSpine {
                scale: arr[0].as_u64().ok_or_else(bad)?,
                axis: arr[1].as_u64().ok_or_else(bad)?,
            },
            _ => return Err(bad()),
        },
    };
    // Reject literals that are not actually code points.
    space.index_of(&p).ok_or_else(bad)?;
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;

    fn space(spec: SpaceSpec) -> SpaceCode {
        catalog(&spec).unwrap()
    }

    #[test]
    fn unit_interval_endpoints() {
        let s = space(SpaceSpec::UnitInterval);
        let zero = s.index_of(&CodePoint::Rat(Rational::zero())).unwrap();
        let one = s.index_of(&CodePoint::Rat(Rational::one())).unwrap();
        assert_eq!(s.metric_exact(zero, one), Some(Rational::one()));
    }

    #[test]
    fn cantor_metric_first_difference() {
        let s = space(SpaceSpec::Cantor);
        let x = s.index_of(&CodePoint::BinWord(vec![])).unwrap();
        let y = s.index_of(&CodePoint::BinWord(vec![0, 1])).unwrap();
        assert_eq!(s.metric_exact(x, y), Some(rat(1, 2)));
        // Padding: [0] and [] denote the same sequence.
        let z = s.index_of(&CodePoint::BinWord(vec![0])).unwrap();
        assert_eq!(s.metric_exact(x, z), Some(Rational::zero()));
    }

    #[test]
    fn comb_metric_matches_formula() {
        let s = space(SpaceSpec::Comb { f: vec![0, 1, 2, 3] });
        let a = s
            .index_of(&CodePoint::Comb {
                spine: 0,
                offset: rat_int(1),
            })
            .unwrap();
        let b = s
            .index_of(&CodePoint::Comb {
                spine: 1,
                offset: rat(1, 2),
            })
            .unwrap();
        assert_eq!(s.metric_exact(a, b), Some(rat(1, 2)));
        // Admission: (k=2, q=1/4) is a code point since 1/4 ≤ 2^{-2}.
        assert!(s
            .index_of(&CodePoint::Comb {
                spine: 2,
                offset: rat(1, 4),
            })
            .is_some());
        assert!(s
            .index_of(&CodePoint::Comb {
                spine: 2,
                offset: rat(1, 3),
            })
            .is_none());
    }

    #[test]
    fn comb_tail_stays_injective() {
        let s = space(SpaceSpec::Comb { f: vec![5, 0, 9] });
        let mut seen = std::collections::BTreeSet::new();
        for k in 0..50 {
            assert!(seen.insert(s.comb_f(k)), "f({k}) repeats");
        }
    }

    #[test]
    fn hilbert_comb_cross_spine_distance() {
        let s = space(SpaceSpec::HilbertComb);
        let a = s
            .index_of(&CodePoint::HilbertSpine { scale: 1, axis: 0 })
            .unwrap();
        let b = s
            .index_of(&CodePoint::HilbertSpine { scale: 1, axis: 1 })
            .unwrap();
        let d = s.metric_real(a, b);
        // d² = 1/4 + 1/4 = 1/2
        let sq = d.mul(&d);
        assert!(sq.approx(20).contains(&rat(1, 2)));
        let o = s.index_of(&CodePoint::HilbertOrigin).unwrap();
        assert_eq!(s.metric_exact(o, a), Some(rat(1, 2)));
    }

    #[test]
    fn shrink_intervals_enumeration_certifies_membership() {
        let s = space(SpaceSpec::ShrinkIntervals { alpha: None });
        // 1/4 lies inside interval 0 = [−√2/4, √2/4].
        assert_eq!(s.shrink_interval_of(&rat(1, 4)), Some(0));
        // 0.6 lies in the gap between intervals 0 and 1.
        assert_eq!(s.shrink_interval_of(&rat(3, 5)), None);
        // Interval 1 has radius √2/8 ≈ 0.177.
        assert_eq!(s.shrink_interval_of(&rat(11, 10)), Some(1));
        assert_eq!(s.shrink_interval_of(&rat(6, 5)), None);
        // Fallback: candidates outside any interval enumerate a center.
        let idx = enumerate::rational_all_index(&rat(3, 5)).unwrap();
        assert_eq!(s.code_point(idx), CodePoint::Rat(rat_int(1)));
    }

    #[test]
    fn constant_points_have_trivial_certificates() {
        let s = space(SpaceSpec::UnitInterval);
        let x = Point::from_code(&s, 7);
        assert!(validate_point(&s, &x, 20, 20).is_ok());
        let d = metric_on_points(&s, &x, &x, 20);
        assert!(d.contains(&Rational::zero()));
    }

    #[test]
    fn validate_point_flags_violations() {
        let s = space(SpaceSpec::Reals);
        let i0 = s.index_of(&CodePoint::Rat(Rational::zero())).unwrap();
        let i2 = s.index_of(&CodePoint::Rat(rat_int(2))).unwrap();
        let bad = Point::from_fn(&s, move |n| if n == 0 { i0 } else { i2 });
        assert_eq!(
            validate_point(&s, &bad, 5, 20),
            Err(PointCheck::Violation(0))
        );
    }

    #[test]
    fn bisection_point_toward_sqrt2_validates() {
        let s = space(SpaceSpec::Reals);
        let sp = s.clone();
        // Midpoints of the dyadic bisection of √2 on [1,2].
        let x = Point::from_fn(&s, move |n| {
            let mut lo = rat_int(1);
            let mut hi = rat_int(2);
            for _ in 0..(n + 3) {
                let mid = (&lo + &hi) / rat_int(2);
                if &mid * &mid <= rat_int(2) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let mid = (&lo + &hi) / rat_int(2);
            sp.index_of(&CodePoint::Rat(mid)).unwrap()
        });
        assert!(validate_point(&s, &x, 20, 30).is_ok());
    }

    #[test]
    fn metric_on_cantor_points() {
        let s = space(SpaceSpec::Cantor);
        let zeros = Point::from_code(&s, enumerate::bin_word_index(&[]).unwrap());
        let y = Point::from_code(&s, enumerate::bin_word_index(&[0, 1]).unwrap());
        let d = metric_on_points(&s, &zeros, &y, 10);
        assert!(d.contains(&rat(1, 2)));
    }

    #[test]
    fn isolated_search_on_catalog_spaces() {
        let u = space(SpaceSpec::UnitInterval);
        let x = Point::from_code(&u, u.index_of(&CodePoint::Rat(rat(1, 2))).unwrap());
        let found = isolated_search(&u, &x, &rat(1, 4), 64).expect("not isolated");
        assert!(found.dist_lower.is_positive());
        assert!(found.dist_upper < rat(1, 4));

        let n = space(SpaceSpec::Naturals);
        let three = Point::from_code(&n, 3);
        assert!(isolated_search(&n, &three, &rat(1, 2), 256).is_none());

        let c = space(SpaceSpec::Cantor);
        let zeros = Point::from_code(&c, enumerate::bin_word_index(&[]).unwrap());
        let inh = isolated_search(&c, &zeros, &rat(1, 8), 256).expect("cantor is perfect");
        // The inhabitant differs from 0ω first at index ≥ 3.
        if let CodePoint::BinWord(w) = &inh.point {
            let first_one = w.iter().position(|&b| b == 1).unwrap();
            assert!(first_one >= 3);
        } else {
            panic!("wrong code point kind");
        }
    }

    #[test]
    fn split_oracle_certificates() {
        for spec in [
            SpaceSpec::Reals,
            SpaceSpec::UnitInterval,
            SpaceSpec::Halfline,
            SpaceSpec::Cantor,
            SpaceSpec::Baire,
            SpaceSpec::Comb { f: vec![0, 1, 2] },
            SpaceSpec::ShrinkIntervals { alpha: None },
        ] {
            let s = space(spec.clone());
            let radius = rat(1, 3);
            let split = s.split_in_ball(0, &radius).unwrap();
            assert!(split.mutual_distance.is_positive(), "{spec:?}");
            assert!(split.mutual_distance < radius, "{spec:?}");
            let from_center = s.metric_exact(split.first, split.second).unwrap();
            assert!(from_center < radius);
        }
        assert!(space(SpaceSpec::Naturals).split_in_ball(0, &rat(1, 3)).is_err());
        assert!(space(SpaceSpec::HilbertComb)
            .split_in_ball(0, &rat(1, 3))
            .is_err());
    }

    #[test]
    fn shrink_endpoint_point_validates() {
        let s = space(SpaceSpec::ShrinkIntervals { alpha: None });
        let x = shrink_endpoint_point(&s, 2, IntervalSide::Right);
        assert!(validate_point(&s, &x, 16, 40).is_ok());
    }

    #[test]
    fn code_point_json_roundtrip() {
        let cases: Vec<(SpaceSpec, CodePoint)> = vec![
            (SpaceSpec::Reals, CodePoint::Rat(rat(-3, 7))),
            (SpaceSpec::Naturals, CodePoint::Nat(12)),
            (SpaceSpec::Cantor, CodePoint::BinWord(vec![1, 0, 1])),
            (SpaceSpec::Baire, CodePoint::NatWord(vec![4, 0])),
            (
                SpaceSpec::Comb { f: vec![0, 1] },
                CodePoint::Comb {
                    spine: 1,
                    offset: rat(1, 4),
                },
            ),
            (SpaceSpec::HilbertComb, CodePoint::HilbertOrigin),
            (
                SpaceSpec::HilbertComb,
                CodePoint::HilbertSpine { scale: 2, axis: 5 },
            ),
        ];
        for (spec, p) in cases {
            let s = space(spec);
            let v = code_point_to_json(&p);
            assert_eq!(code_point_from_json(&s, &v).unwrap(), p);
        }
    }
}
