//! Compactness witnesses and what they buy: ε-nets, certified global
//! minimization of coded functions, and finite subcover extraction.
//!
//! Effective compactness is a per-space capability, not a decision
//! procedure: catalog spaces that are compact advertise net families
//! with exact density arguments (dyadic grids, cylinder representatives,
//! per-spine grids plus the origin). The rest answer
//! `NotEffectivelyCompact`.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use num::traits::{One, Signed, Zero};

use crate::enumerate::Index;
use crate::exact::{log2_ceil, pow2, rat_int, Approx, Rational};
use crate::functions::{FunctionCode, Quad};
use crate::lebesgue::{Covering, Member};
use crate::spaces::{dist_bounds, CodePoint, Point, SpaceCode, SpaceSpec};

#[derive(Debug, thiserror::Error)]
pub enum CompactnessError {
    #[error("space does not carry an effective compactness witness")]
    NotEffectivelyCompact,
    #[error("requested level {requested} exceeds the built maximum {max}")]
    LevelExceeded { requested: u32, max: u32 },
    #[error("no covering quadruple found for cell {cell} at level {level}")]
    DepthExhausted { cell: usize, level: u32 },
    #[error("covering member {member} is not a ball")]
    NotABallCovering { member: u64 },
    #[error("no enumerated ball certifiably swallows cell {cell} at the final level")]
    SubcoverFailure { cell: usize, level: u32 },
}

/// Finite 2^{-n}-dense point families, one per level up to `max_level`.
/// Levels are built on demand and memoized. Density is strict by
/// construction: grids are 2^{-n-1}-dense, cylinder representatives of
/// length n+1 are 2^{-n-1}-dense, and comb spines not represented are
/// within 2^{-n-2} of the origin.
pub struct NetFamily {
    space: SpaceCode,
    max_level: u32,
    cache: Mutex<BTreeMap<u32, Arc<Vec<Point>>>>,
}

impl NetFamily {
    pub fn space(&self) -> &SpaceCode {
        &self.space
    }

    pub fn max_level(&self) -> u32 {
        self.max_level
    }

    /// Points of the level-n net.
    pub fn level(&self, n: u32) -> Result<Arc<Vec<Point>>, CompactnessError> {
        if n > self.max_level {
            return Err(CompactnessError::LevelExceeded {
                requested: n,
                max: self.max_level,
            });
        }
        let mut cache = self.cache.lock().unwrap();
        if let Some(v) = cache.get(&n) {
            return Ok(v.clone());
        }
        let pts = Arc::new(build_level(&self.space, n));
        cache.insert(n, pts.clone());
        Ok(pts)
    }
}

/// Nets for the effectively compact catalog entries.
pub fn nets_for(space: &SpaceCode, max_level: u32) -> Result<NetFamily, CompactnessError> {
    match space.spec() {
        SpaceSpec::UnitInterval | SpaceSpec::Cantor | SpaceSpec::Comb { .. } => Ok(NetFamily {
            space: space.clone(),
            max_level,
            cache: Mutex::new(BTreeMap::new()),
        }),
        _ => Err(CompactnessError::NotEffectivelyCompact),
    }
}

fn build_level(space: &SpaceCode, n: u32) -> Vec<Point> {
    match space.spec() {
        SpaceSpec::UnitInterval => {
            // Grid k·2^{-n}, k = 0..2^n: any x is within 2^{-n-1}.
            let steps = 1u64 << n;
            (0..=steps)
                .map(|k| {
                    let r = Rational::new((k as i64).into(), 1.into()) * pow2(-(n as i64));
                    let idx = space.index_of(&CodePoint::Rat(r)).expect("grid point");
                    Point::from_code(space, idx)
                })
                .collect()
        }
        SpaceSpec::Cantor => {
            // Words of length n+1: cylinders of diameter 2^{-n-1}.
            let len = n as usize + 1;
            (0..(1u128 << len))
                .map(|bits| {
                    let w: Vec<u8> = (0..len).rev().map(|k| ((bits >> k) & 1) as u8).collect();
                    let idx = space
                        .index_of(&CodePoint::BinWord(w))
                        .expect("cylinder word");
                    Point::from_code(space, idx)
                })
                .collect()
        }
        SpaceSpec::Comb { .. } => {
            let mut pts = vec![comb_origin_point(space)];
            // Spines with 2^{-f(k)} ≥ 2^{-n-1} get grids of step 2^{-n-1};
            // everything else is within 2^{-n-2} of the origin.
            let table_len = match space.spec() {
                SpaceSpec::Comb { f } => f.len() as u64,
                _ => unreachable!(),
            };
            let step = pow2(-(n as i64) - 1);
            for k in 0..(table_len + n as u64 + 2) {
                let fk = space.comb_f(k);
                if fk > n + 1 {
                    continue;
                }
                let top = pow2(-(fk as i64));
                let mut j = 1i64;
                loop {
                    let q = rat_int(j) * &step;
                    if q >= top {
                        break;
                    }
                    let idx = space
                        .index_of(&CodePoint::Comb { spine: k, offset: q })
                        .expect("grid offset admitted");
                    pts.push(Point::from_code(space, idx));
                    j += 1;
                }
                let idx = space
                    .index_of(&CodePoint::Comb {
                        spine: k,
                        offset: top,
                    })
                    .expect("spine top admitted");
                pts.push(Point::from_code(space, idx));
            }
            pts
        }
        _ => unreachable!("guarded by nets_for"),
    }
}

/// The comb origin (0,0) as a point: spine tops marching to zero.
fn comb_origin_point(space: &SpaceCode) -> Point {
    let sp = space.clone();
    Point::from_fn(space, move |m| {
        let mut k = 0u64;
        loop {
            if sp.comb_f(k) >= m + 2 {
                let top = pow2(-(sp.comb_f(k) as i64));
                return sp
                    .index_of(&CodePoint::Comb {
                        spine: k,
                        offset: top,
                    })
                    .expect("spine top admitted");
            }
            k += 1;
        }
    })
}

/// One ε-net entry: a code point within 2^{-n} of its net point.
#[derive(Clone, Debug)]
pub struct EpsNetEntry {
    pub net_index: usize,
    pub code: Index,
    pub point: CodePoint,
    pub dist_upper: Rational,
    pub precision: u32,
}

#[derive(Clone, Debug)]
pub struct EpsNet {
    pub level: u32,
    pub entries: Vec<EpsNetEntry>,
}

/// Extracts a finite ε-net of code points from the net family: entries
/// b_m with certified d(b_m, x_{n,m}) < 2^{-n} ≤ ε, which makes the list
/// an ε-net in the closed sense ∀a ∃b d(a,b) ≤ ε.
pub fn eps_net(nets: &NetFamily, eps: &Rational) -> Result<EpsNet, CompactnessError> {
    assert!(eps.is_positive());
    if pow2(-(nets.max_level as i64) + 1) > *eps {
        return Err(CompactnessError::LevelExceeded {
            requested: nets.max_level + 1,
            max: nets.max_level,
        });
    }
    let mut n = 0u32;
    while pow2(-(n as i64)) > *eps {
        n += 1;
    }
    let pts = nets.level(n)?;
    let mut entries = Vec::with_capacity(pts.len());
    for (m, x) in pts.iter().enumerate() {
        let (code, dist_upper, precision) = match x.constant_index() {
            Some(i) => (i, Rational::zero(), 0),
            None => {
                let p = n + 2;
                let i = x.index_at(p);
                let d = crate::spaces::metric_on_points(nets.space(), x, &Point::from_code(nets.space(), i), n + 4);
                (i, d.upper(), n + 4)
            }
        };
        debug_assert!(dist_upper < pow2(-(n as i64)));
        entries.push(EpsNetEntry {
            net_index: m,
            code,
            point: nets.space().code_point(code),
            dist_upper,
            precision,
        });
    }
    Ok(EpsNet { level: n, entries })
}

/// Per-cell certificate used by the minimizer: a quadruple whose domain
/// ball certifiably contains the cell B(x, 2^{-n}).
#[derive(Clone, Debug)]
pub struct MinCell {
    pub cell: usize,
    pub quad_index: Index,
    pub quad: Quad,
    pub dist_upper: Rational,
    pub precision: u32,
    pub value_low: Rational,
    pub value_high: Rational,
}

#[derive(Clone, Debug)]
pub struct MinResult {
    pub value: Approx,
    pub level: u32,
    pub cells: Vec<MinCell>,
}

/// Certified minimum of a real-valued coded function over a compact
/// space: per net cell a quadruple covering the whole cell bounds the
/// function there; levels double until the global bracket tightens
/// below ε. The returned value is the (b−s)-side minimum, with
/// inf f ∈ [value, value + ε].
pub fn min_on_compact(
    f: &FunctionCode,
    nets: &NetFamily,
    eps: &Rational,
    quad_budget: u64,
) -> Result<MinResult, CompactnessError> {
    assert!(eps.is_positive());
    let mut level = 1u32;
    loop {
        match min_at_level(f, nets, level, quad_budget)? {
            Some((cells, lo, hi)) if &(&hi - &lo) <= eps => {
                return Ok(MinResult {
                    value: Approx::new(lo, eps.clone()),
                    level,
                    cells,
                });
            }
            _ => {}
        }
        if level >= nets.max_level {
            return Err(CompactnessError::DepthExhausted { cell: 0, level });
        }
        level = (level * 2).min(nets.max_level);
    }
}

#[allow(clippy::type_complexity)]
fn min_at_level(
    f: &FunctionCode,
    nets: &NetFamily,
    n: u32,
    quad_budget: u64,
) -> Result<Option<(Vec<MinCell>, Rational, Rational)>, CompactnessError> {
    let pts = nets.level(n)?;
    let cell_radius = pow2(-(n as i64));
    let mut cells = Vec::with_capacity(pts.len());
    let mut lo: Option<Rational> = None;
    let mut hi: Option<Rational> = None;
    for (m, x) in pts.iter().enumerate() {
        let Some((quad_index, quad, dist_upper, precision)) =
            cell_quad(f, x, n, quad_budget)
        else {
            return Err(CompactnessError::DepthExhausted { cell: m, level: n });
        };
        let b = match f.codomain().code_point(quad.cod_center) {
            CodePoint::Rat(r) => r,
            _ => return Err(CompactnessError::DepthExhausted { cell: m, level: n }),
        };
        let (vl, vh) = (&b - &quad.cod_radius, &b + &quad.cod_radius);
        lo = Some(match lo {
            None => vl.clone(),
            Some(c) => c.min(vl.clone()),
        });
        hi = Some(match hi {
            None => vh.clone(),
            Some(c) => c.min(vh.clone()),
        });
        cells.push(MinCell {
            cell: m,
            quad_index,
            quad,
            dist_upper,
            precision,
            value_low: vl,
            value_high: vh,
        });
    }
    match (lo, hi) {
        (Some(l), Some(h)) => Ok(Some((cells, l, h))),
        _ => Ok(None),
    }
}

/// Finds a quadruple whose domain ball contains B(x, 2^{-n}):
/// certified d(x, a) + 2^{-n} ≤ r.
fn cell_quad(
    f: &FunctionCode,
    x: &Point,
    n: u32,
    quad_budget: u64,
) -> Option<(Index, Quad, Rational, u32)> {
    let cell_radius = pow2(-(n as i64));
    // Grid codes: the cell's own approximant names a containing cell one
    // level up.
    if n >= 1 {
        let j = x.index_at(n + 2);
        let l = n - 1;
        if let Some(quad) = f.grid_quad_public(j, l) {
            let p = n + 2;
            let (_, hib) = dist_bounds(f.domain(), x, quad.dom_center, p);
            if &hib + &cell_radius <= quad.dom_radius {
                return Some((crate::enumerate::pair(j, l as Index), quad, hib, p));
            }
        }
    }
    // General scan over the enumeration.
    for m in 0..quad_budget {
        let Some(quad) = f.quad_at(m as Index) else {
            continue;
        };
        for p in [n + 2, n + 10] {
            let (lob, hib) = dist_bounds(f.domain(), x, quad.dom_center, p);
            if &hib + &cell_radius <= quad.dom_radius {
                return Some((m as Index, quad, hib, p));
            }
            if &lob + &cell_radius > quad.dom_radius {
                break;
            }
        }
    }
    None
}

/// Per-cell certificate for a finite subcover: the chosen covering ball
/// swallows the cell with recorded slack.
#[derive(Clone, Debug)]
pub struct SubcoverCell {
    pub cell: usize,
    pub ball: u64,
    pub dist_upper: Rational,
    pub precision: u32,
}

#[derive(Clone, Debug)]
pub struct Subcover {
    pub level: u32,
    pub used: Vec<u64>,
    pub cells: Vec<SubcoverCell>,
}

/// Finds a level n and, per net cell, a covering ball (a_j, q_j) with
/// certified d(x_m, a_j) + 2^{-n} < q_j; returns the used ball indices.
/// Levels double until success; failure names the first cell no
/// enumerated ball certifiably swallows at the final level.
pub fn heine_borel_subcover(
    covering: &Covering,
    nets: &NetFamily,
    budget: u64,
) -> Result<Subcover, CompactnessError> {
    let mut level = 1u32;
    loop {
        match subcover_at_level(covering, nets, level, budget)? {
            Ok(sub) => return Ok(sub),
            Err(first_bad) => {
                if level >= nets.max_level {
                    return Err(CompactnessError::SubcoverFailure {
                        cell: first_bad,
                        level,
                    });
                }
                level = (level * 2).min(nets.max_level);
            }
        }
    }
}

#[allow(clippy::type_complexity)]
fn subcover_at_level(
    covering: &Covering,
    nets: &NetFamily,
    n: u32,
    budget: u64,
) -> Result<Result<Subcover, usize>, CompactnessError> {
    let pts = nets.level(n)?;
    let cell_radius = pow2(-(n as i64));
    let mut used = Vec::new();
    let mut cells = Vec::with_capacity(pts.len());
    for (m, x) in pts.iter().enumerate() {
        let mut found = None;
        'balls: for j in 0..covering.horizon().min(budget) {
            let Some(member) = covering.member(j) else {
                break;
            };
            let Member::Ball(ball) = member else {
                return Err(CompactnessError::NotABallCovering { member: j });
            };
            for p in [n + 2, n + 10, n + 24] {
                let (lob, hib) = dist_bounds(nets.space(), x, ball.center, p);
                if &hib + &cell_radius < ball.radius {
                    found = Some(SubcoverCell {
                        cell: m,
                        ball: j,
                        dist_upper: hib,
                        precision: p,
                    });
                    break 'balls;
                }
                if &lob + &cell_radius >= ball.radius {
                    break;
                }
            }
        }
        match found {
            Some(c) => {
                if !used.contains(&c.ball) {
                    used.push(c.ball);
                }
                cells.push(c);
            }
            None => return Ok(Err(m)),
        }
    }
    used.sort_unstable();
    Ok(Ok(Subcover {
        level: n,
        used,
        cells,
    }))
}
