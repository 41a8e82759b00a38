//! Quadruple-coded continuous functions: evaluation by search, fragment
//! validation, builders for the concrete functions the covering calculus
//! needs, and Urysohn separation of located sets.
//!
//! A code enumerates quadruples (a, r, b, s): on the domain ball B(a,r)
//! the function's value lies in the codomain ball B(b,s). The monotone
//! closure rules (shrinking the codomain ball outward, the domain ball
//! inward) are applied lazily by the evaluator instead of being
//! materialized in the enumeration, so codes stay finite-information.
//!
//! Built codes are grid-shaped: the quadruple at pair index (j, l) has
//! domain ball (a_j, 2^{-l}). Grid generators may return None at coarse
//! levels (partial domains, compose with large intermediate radii); the
//! evaluator skips holes and reports Unknown with the depth it spent.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use num::traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::enumerate::{self, Index};
use crate::exact::{
    log2_ceil, parse_rational, pow2, rat_int, rational_string, CauchyReal, Rational,
};
use crate::sets::SepClosedCode;
use crate::spaces::{
    code_point_from_json, dist_bounds, dist_real, CodePoint, Point, SpaceCode, SpaceSpec,
};

/// Builders emit codomain code points as dyadics with at most this many
/// fractional bits; it bounds enumeration indices while leaving plenty of
/// room under every tolerance used at desk scale.
const CODOMAIN_DYADIC_BITS: i64 = 52;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Quad {
    pub dom_center: Index,
    pub dom_radius: Rational,
    pub cod_center: Index,
    pub cod_radius: Rational,
}

enum QuadSource {
    Explicit(Vec<Quad>),
    Grid(Arc<dyn Fn(Index, u32) -> Option<Quad> + Send + Sync>),
}

pub struct FunctionCode {
    domain: SpaceCode,
    codomain: SpaceCode,
    source: QuadSource,
}

#[derive(Debug, thiserror::Error)]
pub enum FunctionError {
    #[error("malformed function spec: {0}")]
    MalformedSpec(String),
    #[error("domain/codomain mismatch: {0}")]
    SpaceMismatch(String),
    #[error("separation between the located sets could not be certified")]
    SeparationUncertified,
    #[error("operation requires a grid-built code")]
    NotGridBuilt,
}

impl FunctionCode {
    pub fn explicit(domain: SpaceCode, codomain: SpaceCode, quads: Vec<Quad>) -> Self {
        FunctionCode {
            domain,
            codomain,
            source: QuadSource::Explicit(quads),
        }
    }

    fn grid<F>(domain: SpaceCode, codomain: SpaceCode, gen: F) -> Self
    where
        F: Fn(Index, u32) -> Option<Quad> + Send + Sync + 'static,
    {
        FunctionCode {
            domain,
            codomain,
            source: QuadSource::Grid(Arc::new(gen)),
        }
    }

    pub fn domain(&self) -> &SpaceCode {
        &self.domain
    }

    pub fn codomain(&self) -> &SpaceCode {
        &self.codomain
    }

    /// Quadruple at enumeration index m; None marks a hole.
    pub fn quad_at(&self, m: Index) -> Option<Quad> {
        match &self.source {
            QuadSource::Explicit(v) => v.get(m as usize).cloned(),
            QuadSource::Grid(gen) => {
                let (j, l) = enumerate::unpair(m);
                gen(j, l as u32)
            }
        }
    }

    /// Quadruple of the grid cell (j, l), when this code is grid-built.
    pub fn grid_quad(&self, j: Index, l: u32) -> Option<Quad> {
        match &self.source {
            QuadSource::Grid(gen) => gen(j, l),
            QuadSource::Explicit(_) => None,
        }
    }

    pub fn is_grid(&self) -> bool {
        matches!(self.source, QuadSource::Grid(_))
    }
}

/// A successful evaluation: an enumerated quadruple with certified
/// d(x,a) < r and s < q; the value f(x) lies in B(b, s).
#[derive(Clone, Debug)]
pub struct EvalWitness {
    pub quad_index: Index,
    pub quad: Quad,
    pub dist_upper: Rational,
    pub precision: u32,
}

#[derive(Clone, Debug)]
pub enum Eval {
    Value(EvalWitness),
    Unknown { depth: u64 },
}

impl Eval {
    pub fn witness(&self) -> Option<&EvalWitness> {
        match self {
            Eval::Value(w) => Some(w),
            Eval::Unknown { .. } => None,
        }
    }
}

/// Evaluates f at x to output tolerance q.
///
/// Grid codes are probed directly: level l is admissible once the emitted
/// codomain radius drops below q, and the point's own approximant at
/// depth l+2 names a grid cell containing x with certifiable margin.
/// Explicit codes are scanned in enumeration order. `depth` caps levels
/// probed (grid) or quadruples scanned (explicit).
pub fn eval(f: &FunctionCode, x: &Point, q: &Rational, depth: u64) -> Eval {
    assert!(q.is_positive());
    assert_eq!(x.space_spec(), f.domain.spec(), "point outside domain");
    match &f.source {
        QuadSource::Grid(_) => {
            for l in 0..depth.min(u32::MAX as u64) as u32 {
                let j = x.index_at(l + 2);
                let Some(quad) = f.grid_quad(j, l) else {
                    continue;
                };
                if &quad.cod_radius >= q {
                    continue;
                }
                let p = l + 3;
                let (_, hi) = dist_bounds(&f.domain, x, quad.dom_center, p);
                if hi < quad.dom_radius {
                    return Eval::Value(EvalWitness {
                        quad_index: enumerate::pair(j, l as Index),
                        quad,
                        dist_upper: hi,
                        precision: p,
                    });
                }
            }
            Eval::Unknown { depth }
        }
        QuadSource::Explicit(quads) => {
            for (m, quad) in quads.iter().enumerate().take(depth as usize) {
                if &quad.cod_radius >= q {
                    continue;
                }
                for p in [8u32, 24, 48] {
                    let (lo, hi) = dist_bounds(&f.domain, x, quad.dom_center, p);
                    if hi < quad.dom_radius {
                        return Eval::Value(EvalWitness {
                            quad_index: m as Index,
                            quad: quad.clone(),
                            dist_upper: hi,
                            precision: p,
                        });
                    }
                    if lo >= quad.dom_radius {
                        break;
                    }
                }
            }
            Eval::Unknown { depth }
        }
    }
}

/// Bracket of a real-valued evaluation: [b − s, b + s].
pub fn eval_real_bracket(
    f: &FunctionCode,
    x: &Point,
    q: &Rational,
    depth: u64,
) -> Option<(Rational, Rational)> {
    let w = match eval(f, x, q, depth) {
        Eval::Value(w) => w,
        Eval::Unknown { .. } => return None,
    };
    match f.codomain.code_point(w.quad.cod_center) {
        CodePoint::Rat(b) => Some((&b - &w.quad.cod_radius, &b + &w.quad.cod_radius)),
        _ => None,
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FragmentIssue {
    /// Two quadruples over certifiably overlapping domains whose codomain
    /// balls are certifiably disjoint.
    Violation { first: Index, second: Index },
    /// A comparison the requested precision could not settle.
    Indeterminate { first: Index, second: Index },
    NonPositiveRadius { index: Index },
}

/// Summary of a validated fragment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FragmentCert {
    pub quads_checked: u64,
    pub pairs_checked: u64,
}

/// Checks the coherence axioms on the first N enumerated quadruples.
///
/// Two sound instances are enforced at precision k: identical domain
/// balls must have codomain balls within s + s' of each other, and a
/// domain ball certifiably contained in another (d(a,a') + r ≤ r') must
/// have a codomain ball meeting the larger quad's. Containment always
/// wins a common domain point (the inner center), so the check is sound
/// in every metric space.
pub fn validate_fragment(
    f: &FunctionCode,
    n: u64,
    k: u32,
) -> Result<FragmentCert, FragmentIssue> {
    let mut quads: Vec<(Index, Quad)> = Vec::new();
    let mut m: Index = 0;
    let cap = (n as Index) * 64 + 64;
    while (quads.len() as u64) < n && m < cap {
        if let Some(q) = f.quad_at(m) {
            quads.push((m, q));
        }
        m += 1;
    }
    for (i, q) in &quads {
        if !q.dom_radius.is_positive() || !q.cod_radius.is_positive() {
            return Err(FragmentIssue::NonPositiveRadius { index: *i });
        }
    }
    let mut pairs = 0u64;
    for a in 0..quads.len() {
        for b in (a + 1)..quads.len() {
            let (ia, qa) = &quads[a];
            let (ib, qb) = &quads[b];
            pairs += 1;
            // Containment in either direction, or identical domains.
            let dom_d = f.domain.metric_approx(qa.dom_center, qb.dom_center, k);
            let same_dom =
                qa.dom_center == qb.dom_center && qa.dom_radius == qb.dom_radius;
            let a_in_b = dom_d.upper() + &qa.dom_radius <= qb.dom_radius;
            let b_in_a = dom_d.upper() + &qb.dom_radius <= qa.dom_radius;
            if !(same_dom || a_in_b || b_in_a) {
                continue;
            }
            let cod_d = f.codomain.metric_approx(qa.cod_center, qb.cod_center, k);
            let bound = &qa.cod_radius + &qb.cod_radius;
            if cod_d.upper() < bound {
                continue;
            }
            if cod_d.lower() >= bound {
                return Err(FragmentIssue::Violation {
                    first: *ia,
                    second: *ib,
                });
            }
            return Err(FragmentIssue::Indeterminate {
                first: *ia,
                second: *ib,
            });
        }
    }
    Ok(FragmentCert {
        quads_checked: quads.len() as u64,
        pairs_checked: pairs,
    })
}

fn dyadic_round(v: &Rational, bits: i64) -> Rational {
    let scaled = v * pow2(bits);
    let rounded = (scaled + crate::exact::rat(1, 2)).floor();
    rounded * pow2(-bits)
}

fn reals() -> SpaceCode {
    crate::spaces::catalog(&SpaceSpec::Reals).expect("reals catalog entry")
}

/// Grid code for an L-Lipschitz real-valued function given by its values
/// on code points. Quadruple at (j, l): domain ball (a_j, 2^{-l}),
/// codomain ball centered at a dyadic rounding of value_at(a_j) with
/// radius L·2^{-l} plus twice the rounding slack.
pub fn lipschitz_grid<F>(domain: &SpaceCode, lipschitz: Rational, value_at: F) -> FunctionCode
where
    F: Fn(Index) -> CauchyReal + Send + Sync + 'static,
{
    assert!(!lipschitz.is_negative());
    let cod = reals();
    let cod2 = cod.clone();
    let cache: Mutex<BTreeMap<Index, CauchyReal>> = Mutex::new(BTreeMap::new());
    let shift = log2_ceil(&(&lipschitz + rat_int(1))) + 4;
    FunctionCode::grid(domain.clone(), cod, move |j, l| {
        let v = {
            let mut c = cache.lock().unwrap();
            c.entry(j).or_insert_with(|| value_at(j)).clone()
        };
        let p = l + shift;
        let approx = v.approximant(p);
        let round_bits = (p as i64 + 2).min(CODOMAIN_DYADIC_BITS);
        let b = dyadic_round(&approx, round_bits);
        // |b − v| ≤ 2^{-p+1} + 2^{-round_bits−1} =: e; s = L·2^{-l} + 2e
        let e = pow2(-(p as i64) + 1) + pow2(-round_bits - 1);
        let s = &lipschitz * pow2(-(l as i64)) + e * rat_int(2);
        let cod_center = cod2.index_of(&CodePoint::Rat(b))?;
        Some(Quad {
            dom_center: j,
            dom_radius: pow2(-(l as i64)),
            cod_center,
            cod_radius: s,
        })
    })
}

/// Constant function with codomain value c.
pub fn const_code(domain: &SpaceCode, codomain: &SpaceCode, c: Index) -> FunctionCode {
    FunctionCode::grid(domain.clone(), codomain.clone(), move |j, l| {
        Some(Quad {
            dom_center: j,
            dom_radius: pow2(-(l as i64)),
            cod_center: c,
            cod_radius: pow2(-(l as i64) - 1),
        })
    })
}

/// x ↦ d(a, x).
pub fn dist_to_code(domain: &SpaceCode, a: Index) -> FunctionCode {
    let d = domain.clone();
    lipschitz_grid(domain, Rational::one(), move |j| d.metric_real(a, j))
}

/// The tent x ↦ max(0, r − d(a, x)).
pub fn tent_code(domain: &SpaceCode, a: Index, r: &Rational) -> FunctionCode {
    assert!(r.is_positive());
    let d = domain.clone();
    let r = r.clone();
    lipschitz_grid(domain, Rational::one(), move |j| {
        CauchyReal::constant(r.clone())
            .sub(&d.metric_real(a, j))
            .max_of(&CauchyReal::zero())
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Combine2 {
    Add,
    Max,
    Min,
}

/// Pointwise combination of two grid-built real-valued codes over the
/// same domain. The (j,l) cells line up, so the combined quadruple is
/// read off both constituents directly.
pub fn combine(op: Combine2, f: &FunctionCode, g: &FunctionCode) -> Result<FunctionCode, FunctionError> {
    if f.domain != g.domain {
        return Err(FunctionError::SpaceMismatch("combine over different domains".into()));
    }
    if !f.is_grid() || !g.is_grid() {
        return Err(FunctionError::NotGridBuilt);
    }
    let cod = reals();
    let fg = match &f.source {
        QuadSource::Grid(a) => a.clone(),
        _ => unreachable!(),
    };
    let gg = match &g.source {
        QuadSource::Grid(a) => a.clone(),
        _ => unreachable!(),
    };
    let cod2 = cod.clone();
    Ok(FunctionCode::grid(f.domain.clone(), cod, move |j, l| {
        let qf = fg(j, l)?;
        let qg = gg(j, l)?;
        let bf = match cod2.code_point(qf.cod_center) {
            CodePoint::Rat(r) => r,
            _ => return None,
        };
        let bg = match cod2.code_point(qg.cod_center) {
            CodePoint::Rat(r) => r,
            _ => return None,
        };
        let (b, s) = match op {
            Combine2::Add => (&bf + &bg, &qf.cod_radius + &qg.cod_radius),
            Combine2::Max => (bf.clone().max(bg.clone()), qf.cod_radius.clone().max(qg.cod_radius.clone())),
            Combine2::Min => (bf.clone().min(bg.clone()), qf.cod_radius.clone().max(qg.cod_radius.clone())),
        };
        let cod_center = cod2.index_of(&CodePoint::Rat(b))?;
        Some(Quad {
            dom_center: j,
            dom_radius: pow2(-(l as i64)),
            cod_center,
            cod_radius: s,
        })
    }))
}

/// Scalar multiple c·f of a grid-built real-valued code.
pub fn scale_code(c: &Rational, f: &FunctionCode) -> Result<FunctionCode, FunctionError> {
    if c.is_zero() {
        let zero = reals()
            .index_of(&CodePoint::Rat(Rational::zero()))
            .expect("zero is a code point");
        return Ok(const_code(&f.domain, &reals(), zero));
    }
    if !f.is_grid() {
        return Err(FunctionError::NotGridBuilt);
    }
    let cod = reals();
    let fg = match &f.source {
        QuadSource::Grid(a) => a.clone(),
        _ => unreachable!(),
    };
    let c = c.clone();
    let cod2 = cod.clone();
    Ok(FunctionCode::grid(f.domain.clone(), cod, move |j, l| {
        let qf = fg(j, l)?;
        let bf = match cod2.code_point(qf.cod_center) {
            CodePoint::Rat(r) => r,
            _ => return None,
        };
        let cod_center = cod2.index_of(&CodePoint::Rat(&bf * &c))?;
        Some(Quad {
            dom_center: j,
            dom_radius: pow2(-(l as i64)),
            cod_center,
            cod_radius: &qf.cod_radius * c.abs(),
        })
    }))
}

/// Composition g ∘ f of grid-built codes. The image ball of f's cell is
/// fitted inside a dyadic cell of g around f's codomain center.
pub fn compose(g: &FunctionCode, f: &FunctionCode) -> Result<FunctionCode, FunctionError> {
    if f.codomain != g.domain {
        return Err(FunctionError::SpaceMismatch(
            "inner codomain differs from outer domain".into(),
        ));
    }
    if !f.is_grid() || !g.is_grid() {
        return Err(FunctionError::NotGridBuilt);
    }
    let fg = match &f.source {
        QuadSource::Grid(a) => a.clone(),
        _ => unreachable!(),
    };
    let gg = match &g.source {
        QuadSource::Grid(a) => a.clone(),
        _ => unreachable!(),
    };
    Ok(FunctionCode::grid(
        f.domain.clone(),
        g.codomain.clone(),
        move |j, l| {
            let qf = fg(j, l)?;
            if qf.cod_radius > Rational::one() {
                return None; // no dyadic cell of g is wide enough
            }
            // Largest l' with s_f ≤ 2^{-l'}: B(b_f, s_f) ⊆ B(b_f, 2^{-l'}).
            let mut lp = 0u32;
            while pow2(-(lp as i64) - 1) >= qf.cod_radius && lp < 140 {
                lp += 1;
            }
            let qg = gg(qf.cod_center, lp)?;
            Some(Quad {
                dom_center: j,
                dom_radius: pow2(-(l as i64)),
                cod_center: qg.cod_center,
                cod_radius: qg.cod_radius,
            })
        },
    ))
}

/// A set with a computable distance function. Bare closed-set codes do
/// not determine distances; separation constructions demand this
/// stronger datum.
pub struct LocatedSet {
    members: SepClosedCode,
    distance: Arc<dyn Fn(&Point) -> CauchyReal + Send + Sync>,
    generator_count: u64,
}

impl LocatedSet {
    pub fn new<F>(members: SepClosedCode, distance: F, generator_count: u64) -> Self
    where
        F: Fn(&Point) -> CauchyReal + Send + Sync + 'static,
    {
        LocatedSet {
            members,
            distance: Arc::new(distance),
            generator_count,
        }
    }

    /// Finite set of code points located by the minimum of the code
    /// metric over its elements.
    pub fn from_code_points(space: &SpaceCode, pts: Vec<Index>) -> Self {
        assert!(!pts.is_empty());
        let members = SepClosedCode::from_points(
            space.clone(),
            pts.iter().map(|&i| Point::from_code(space, i)).collect(),
        );
        let space = space.clone();
        let count = pts.len() as u64;
        LocatedSet::new(
            members,
            move |x| {
                let mut acc: Option<CauchyReal> = None;
                for &b in &pts {
                    let d = dist_real(&space, x, b);
                    acc = Some(match acc {
                        None => d,
                        Some(m) => m.min_of(&d),
                    });
                }
                acc.unwrap()
            },
            count,
        )
    }

    pub fn distance_to(&self, x: &Point) -> CauchyReal {
        (self.distance)(x)
    }

    pub fn members(&self) -> &SepClosedCode {
        &self.members
    }

    pub fn generator_count(&self) -> u64 {
        self.generator_count
    }
}

/// Urysohn separation f = g0/(g0+g1) of located sets with certified
/// positive distance: f is 0 on C0, 1 on C1, with range inside [0,1].
/// The certified separation re-indexes the quotient's Cauchy modulus and
/// bounds the Lipschitz constant by 1/separation.
pub fn urysohn(
    c0: &LocatedSet,
    c1: &LocatedSet,
    separation: &Rational,
) -> Result<FunctionCode, FunctionError> {
    if !separation.is_positive() {
        return Err(FunctionError::SeparationUncertified);
    }
    let space = c0.members().space().clone();
    if &space != c1.members().space() {
        return Err(FunctionError::SpaceMismatch(
            "located sets live in different spaces".into(),
        ));
    }
    // Certify dist(C0, C1) ≥ separation on the generator samples.
    let sample0 = c0.generator_count().min(64);
    let sample1 = c1.generator_count().min(64);
    let k = log2_ceil(&(rat_int(4) / separation)) + 4;
    for i in 0..sample0 {
        let g0 = c0.members().generator(i);
        for j in 0..sample1 {
            let g1 = c1.members().generator(j);
            let d = crate::spaces::metric_on_points(&space, &g0, &g1, k);
            if d.lower() < *separation {
                return Err(FunctionError::SeparationUncertified);
            }
        }
    }
    let d0 = c0.distance.clone();
    let d1 = c1.distance.clone();
    let sep = separation.clone();
    let space2 = space.clone();
    let lipschitz = Rational::one() / separation;
    Ok(lipschitz_grid(&space, lipschitz, move |j| {
        let x = Point::from_code(&space2, j);
        let g0 = d0(&x);
        let g1 = d1(&x);
        CauchyReal::div_with_lower_bound(&g0, &g0.add(&g1), &sep)
    }))
}

/// Function bodies as they appear in job files; the recursive shape
/// mirrors the builders.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionBody {
    Const(serde_json::Value),
    DistTo(serde_json::Value),
    Tent {
        a: serde_json::Value,
        r: String,
    },
    Add(Box<FunctionBody>, Box<FunctionBody>),
    Max(Box<FunctionBody>, Box<FunctionBody>),
    Min(Box<FunctionBody>, Box<FunctionBody>),
    Scale(String, Box<FunctionBody>),
    Compose(Box<FunctionBody>, Box<FunctionBody>),
}

/// Builds a real-valued code over `domain` from a spec body.
pub fn build_function(domain: &SpaceCode, body: &FunctionBody) -> Result<FunctionCode, FunctionError> {
    let bad = |e: crate::spaces::SpaceError| FunctionError::MalformedSpec(e.to_string());
    match body {
        FunctionBody::Const(v) => {
            let cod = reals();
            let p = code_point_from_json(&cod, v).map_err(bad)?;
            let c = cod.index_of(&p).expect("validated literal");
            Ok(const_code(domain, &cod, c))
        }
        FunctionBody::DistTo(v) => {
            let p = code_point_from_json(domain, v).map_err(bad)?;
            let a = domain.index_of(&p).expect("validated literal");
            Ok(dist_to_code(domain, a))
        }
        FunctionBody::Tent { a, r } => {
            let p = code_point_from_json(domain, a).map_err(bad)?;
            let a = domain.index_of(&p).expect("validated literal");
            let r = parse_rational(r).map_err(|e| FunctionError::MalformedSpec(e.to_string()))?;
            if !r.is_positive() {
                return Err(FunctionError::MalformedSpec(format!(
                    "tent radius {} must be positive",
                    rational_string(&r)
                )));
            }
            Ok(tent_code(domain, a, &r))
        }
        FunctionBody::Add(f, g) => combine(
            Combine2::Add,
            &build_function(domain, f)?,
            &build_function(domain, g)?,
        ),
        FunctionBody::Max(f, g) => combine(
            Combine2::Max,
            &build_function(domain, f)?,
            &build_function(domain, g)?,
        ),
        FunctionBody::Min(f, g) => combine(
            Combine2::Min,
            &build_function(domain, f)?,
            &build_function(domain, g)?,
        ),
        FunctionBody::Scale(c, f) => {
            let c = parse_rational(c).map_err(|e| FunctionError::MalformedSpec(e.to_string()))?;
            scale_code(&c, &build_function(domain, f)?)
        }
        FunctionBody::Compose(g, f) => {
            let inner = build_function(domain, f)?;
            let outer = build_function(&reals(), g)?;
            compose(&outer, &inner)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;
    use crate::spaces::catalog;

    fn unit() -> SpaceCode {
        catalog(&SpaceSpec::UnitInterval).unwrap()
    }

    fn rat_index(s: &SpaceCode, p: i64, q: i64) -> Index {
        s.index_of(&CodePoint::Rat(rat(p, q))).unwrap()
    }

    fn rat_point(s: &SpaceCode, p: i64, q: i64) -> Point {
        Point::from_code(s, rat_index(s, p, q))
    }

    #[test]
    fn constant_code_evaluates_anywhere() {
        let s = unit();
        let cod = reals();
        let c = rat_index(&cod, 7, 3);
        let f = const_code(&s, &cod, c);
        let (lo, hi) = eval_real_bracket(&f, &rat_point(&s, 1, 2), &pow2(-10), 64).unwrap();
        assert!(lo <= rat(7, 3) && rat(7, 3) <= hi);
        assert!(&hi - &lo < pow2(-9));
    }

    #[test]
    fn dist_to_zero_evaluates_to_the_point() {
        let s = catalog(&SpaceSpec::Reals).unwrap();
        let f = dist_to_code(&s, rat_index(&s, 0, 1));
        let x = rat_point(&s, 1, 3);
        let (lo, hi) = eval_real_bracket(&f, &x, &pow2(-10), 64).unwrap();
        assert!(lo <= rat(1, 3) && rat(1, 3) <= hi);
        assert!(&hi - &lo < pow2(-9));
    }

    #[test]
    fn tent_value_brackets_formula() {
        let s = unit();
        let f = tent_code(&s, rat_index(&s, 0, 1), &rat(3, 5));
        let x = rat_point(&s, 1, 2);
        let (lo, hi) = eval_real_bracket(&f, &x, &pow2(-10), 64).unwrap();
        // max(0, 3/5 − 1/2) = 1/10
        assert!(lo <= rat(1, 10) && rat(1, 10) <= hi);
    }

    #[test]
    fn max_of_tents_evaluates_piecewise() {
        let s = unit();
        let t0 = tent_code(&s, rat_index(&s, 0, 1), &rat(3, 5));
        let t1 = tent_code(&s, rat_index(&s, 1, 1), &rat(3, 5));
        let f = combine(Combine2::Max, &t0, &t1).unwrap();
        let (lo, hi) = eval_real_bracket(&f, &rat_point(&s, 1, 2), &pow2(-10), 64).unwrap();
        assert!(lo <= rat(1, 10) && rat(1, 10) <= hi);
        // Exact piecewise-linear oracle on a few rational inputs.
        for (p, q) in [(0i64, 1i64), (1, 4), (2, 5), (3, 4), (1, 1)] {
            let x = rat(p, q);
            let want = (rat(3, 5) - &x).max(rat(3, 5) - (rat_int(1) - &x)).max(Rational::zero());
            let (lo, hi) = eval_real_bracket(&f, &rat_point(&s, p, q), &pow2(-12), 64).unwrap();
            assert!(lo <= want && want <= hi, "oracle mismatch at {}", x);
        }
    }

    #[test]
    fn scale_by_zero_is_constant_zero() {
        let s = unit();
        let f = scale_code(&rat_int(0), &dist_to_code(&s, 0)).unwrap();
        let (lo, hi) = eval_real_bracket(&f, &rat_point(&s, 1, 2), &pow2(-20), 64).unwrap();
        assert!(lo <= Rational::zero() && Rational::zero() <= hi);
    }

    #[test]
    fn fragment_validation_flags_incoherent_codes() {
        let s = unit();
        let cod = reals();
        let a = rat_index(&s, 1, 2);
        let b0 = rat_index(&cod, 0, 1);
        let b3 = rat_index(&cod, 3, 1);
        let bad = FunctionCode::explicit(
            s.clone(),
            cod.clone(),
            vec![
                Quad {
                    dom_center: a,
                    dom_radius: rat_int(1),
                    cod_center: b0,
                    cod_radius: rat_int(1),
                },
                Quad {
                    dom_center: a,
                    dom_radius: rat_int(1),
                    cod_center: b3,
                    cod_radius: rat_int(1),
                },
            ],
        );
        assert_eq!(
            validate_fragment(&bad, 2, 20),
            Err(FragmentIssue::Violation { first: 0, second: 1 })
        );

        let tent = tent_code(&s, rat_index(&s, 0, 1), &rat(3, 5));
        assert!(validate_fragment(&tent, 100, 30).is_ok());
        let c = const_code(&s, &cod, b0);
        assert!(validate_fragment(&c, 50, 20).is_ok());
    }

    #[test]
    fn urysohn_separates_endpoints() {
        let s = unit();
        let c0 = LocatedSet::from_code_points(&s, vec![rat_index(&s, 0, 1)]);
        let c1 = LocatedSet::from_code_points(&s, vec![rat_index(&s, 1, 1)]);
        let f = urysohn(&c0, &c1, &rat(1, 2)).unwrap();
        let q = pow2(-10);
        let (lo, hi) = eval_real_bracket(&f, &rat_point(&s, 1, 2), &q, 64).unwrap();
        assert!(lo <= rat(1, 2) && rat(1, 2) <= hi);
        let (lo0, hi0) = eval_real_bracket(&f, &rat_point(&s, 0, 1), &q, 64).unwrap();
        assert!(lo0 <= Rational::zero() && Rational::zero() <= hi0);
        let (lo1, hi1) = eval_real_bracket(&f, &rat_point(&s, 1, 1), &q, 64).unwrap();
        assert!(lo1 <= Rational::one() && Rational::one() <= hi1);
        // Range certificates stay around [0,1].
        assert!(hi0 < rat(1, 100));
        assert!(lo1 > rat(99, 100));
    }

    #[test]
    fn urysohn_requires_certified_separation() {
        let s = unit();
        let c0 = LocatedSet::from_code_points(&s, vec![rat_index(&s, 0, 1)]);
        let c1 = LocatedSet::from_code_points(&s, vec![rat_index(&s, 1, 100)]);
        assert!(matches!(
            urysohn(&c0, &c1, &rat(1, 2)),
            Err(FunctionError::SeparationUncertified)
        ));
    }

    #[test]
    fn compose_dist_with_embedding_like_map() {
        // compose(dist_to(0), id-ish): use scale(1, dist_to(0)) ∘ via spec builder.
        let s = catalog(&SpaceSpec::Reals).unwrap();
        let body: FunctionBody = serde_json::from_value(serde_json::json!({
            "compose": [
                {"dist_to": "0/1"},
                {"dist_to": "1/2"}
            ]
        }))
        .unwrap();
        let f = build_function(&s, &body).unwrap();
        // x ↦ d(0, d(1/2, x)) = |x − 1/2| composed into |·|: value |1/3 − 1/2| = 1/6.
        let x = rat_point(&s, 1, 3);
        let (lo, hi) = eval_real_bracket(&f, &x, &pow2(-8), 64).unwrap();
        assert!(lo <= rat(1, 6) && rat(1, 6) <= hi);
    }

    #[test]
    fn evaluator_consistency_on_repeated_queries() {
        let s = unit();
        let f = dist_to_code(&s, rat_index(&s, 0, 1));
        let x = rat_point(&s, 2, 7);
        let w1 = eval(&f, &x, &pow2(-8), 64);
        let w2 = eval(&f, &x, &pow2(-12), 64);
        let (a, b) = (w1.witness().unwrap(), w2.witness().unwrap());
        // Two answers for the same point name codomain balls whose
        // closures intersect.
        let d = f
            .codomain
            .metric_exact(a.quad.cod_center, b.quad.cod_center)
            .unwrap();
        assert!(d <= &a.quad.cod_radius + &b.quad.cod_radius);
    }
}
