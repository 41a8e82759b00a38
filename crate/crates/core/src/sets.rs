//! Ball-coded open sets, separably closed sets, punctured balls and
//! one-sided distance computations.
//!
//! Membership in an open set is semidecidable: `Unknown` is a first-class
//! answer carrying the search depth. Closed sets are never materialized
//! as separate values; a closed set is a reading of the open code of its
//! complement, and only two one-sided distance operations exist. The
//! actual distance from a closed-set code is deliberately not offered:
//! it is not computable from the code.

use std::sync::{Arc, Mutex};

use num::traits::{Signed, Zero};

use crate::enumerate::{self, Index};
use crate::exact::{log2_ceil, pow2, rat_int, rational_string, Approx, Rational};
use crate::spaces::{dist_bounds, metric_on_points, Point, SpaceCode};

/// Candidates examined per requested ball when materializing a lazy
/// enumeration; part of the truncation contract.
const SCAN_FACTOR: u64 = 1024;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ball {
    pub center: Index,
    pub radius: Rational,
}

impl Ball {
    pub fn new(center: Index, radius: Rational) -> Self {
        assert!(radius.is_positive(), "ball radius must be positive");
        Ball { center, radius }
    }
}

enum BallSource {
    Finite(Vec<Ball>),
    Lazy {
        gen: Arc<dyn Fn(u64) -> Option<Ball> + Send + Sync>,
        state: Mutex<LazyState>,
    },
}

struct LazyState {
    next_candidate: u64,
    found: Vec<Ball>,
}

/// An open set as an enumerated union of balls, finite or truncated
/// infinite. Lazy enumerations examine a bounded, documented number of
/// candidates per requested index, so every answer is relative to an
/// explicit fragment.
pub struct OpenSetCode {
    space: SpaceCode,
    source: BallSource,
}

impl OpenSetCode {
    pub fn finite(space: SpaceCode, balls: Vec<Ball>) -> Self {
        OpenSetCode {
            space,
            source: BallSource::Finite(balls),
        }
    }

    pub fn lazy<F>(space: SpaceCode, gen: F) -> Self
    where
        F: Fn(u64) -> Option<Ball> + Send + Sync + 'static,
    {
        OpenSetCode {
            space,
            source: BallSource::Lazy {
                gen: Arc::new(gen),
                state: Mutex::new(LazyState {
                    next_candidate: 0,
                    found: Vec::new(),
                }),
            },
        }
    }

    pub fn space(&self) -> &SpaceCode {
        &self.space
    }

    /// n-th enumerated ball, or None when the set is exhausted / the
    /// candidate scan budget for this index is spent.
    pub fn ball(&self, n: u64) -> Option<Ball> {
        match &self.source {
            BallSource::Finite(balls) => balls.get(n as usize).cloned(),
            BallSource::Lazy { gen, state } => {
                let mut st = state.lock().unwrap();
                let cap = (n + 1) * SCAN_FACTOR;
                while (st.found.len() as u64) <= n && st.next_candidate < cap {
                    let c = st.next_candidate;
                    st.next_candidate += 1;
                    if let Some(b) = gen(c) {
                        st.found.push(b);
                    }
                }
                st.found.get(n as usize).cloned()
            }
        }
    }

    pub fn balls_to(&self, depth: u64) -> Vec<Ball> {
        (0..depth).map_while(|n| self.ball(n)).collect()
    }
}

/// Certified membership witness: x lies in ball `ball_index` since the
/// recorded distance upper bound is below the radius.
#[derive(Clone, Debug)]
pub struct MembershipWitness {
    pub ball_index: u64,
    pub ball: Ball,
    pub dist_upper: Rational,
    pub precision: u32,
}

#[derive(Clone, Debug)]
pub enum Membership {
    Yes(MembershipWitness),
    Unknown { depth: u64 },
}

impl Membership {
    pub fn is_yes(&self) -> bool {
        matches!(self, Membership::Yes(_))
    }
}

/// Searches the first `depth` balls for one certifiably containing x.
pub fn open_membership(x: &Point, set: &OpenSetCode, depth: u64, k: u32) -> Membership {
    for n in 0..depth {
        let Some(ball) = set.ball(n) else {
            return Membership::Unknown { depth };
        };
        let (_, hi) = dist_bounds(&set.space, x, ball.center, k);
        if hi < ball.radius {
            return Membership::Yes(MembershipWitness {
                ball_index: n,
                ball,
                dist_upper: hi,
                precision: k,
            });
        }
    }
    Membership::Unknown { depth }
}

/// The punctured ball P(x,q) = B(x,q) \ {x} as an open code.
///
/// Enumerates pairs of a code point b and an escalating precision; a
/// pair contributes the ball B(b, s) with
/// s = min(d_lo, q − d_hi)/2 whenever that is positive, which certifies
/// both 0 < d(x,y) and d(x,y) < q for every y in the ball. The union
/// exhausts P(x,q) along the enumeration.
pub fn punctured_ball(space: &SpaceCode, x: &Point, q: &Rational) -> OpenSetCode {
    assert!(q.is_positive());
    let base = log2_ceil(&(rat_int(4) / q)).max(4);
    let space2 = space.clone();
    let x = x.clone();
    let q = q.clone();
    OpenSetCode::lazy(space.clone(), move |m| {
        let (b, j) = enumerate::unpair(m as Index);
        let p = base + 8 * (j as u32).min(12);
        let (lo, hi) = dist_bounds(&space2, &x, b as Index, p);
        let s = (lo.min(&q - hi)) / rat_int(2);
        if s.is_positive() {
            Some(Ball::new(b as Index, s))
        } else {
            None
        }
    })
}

/// A separably closed set: the closure of an enumerated sequence of
/// points. Finite generator lists repeat cyclically.
pub struct SepClosedCode {
    space: SpaceCode,
    gens: Arc<dyn Fn(u64) -> Point + Send + Sync>,
}

impl SepClosedCode {
    pub fn from_points(space: SpaceCode, points: Vec<Point>) -> Self {
        assert!(!points.is_empty());
        SepClosedCode {
            space,
            gens: Arc::new(move |n| points[n as usize % points.len()].clone()),
        }
    }

    pub fn from_fn<F>(space: SpaceCode, gens: F) -> Self
    where
        F: Fn(u64) -> Point + Send + Sync + 'static,
    {
        SepClosedCode {
            space,
            gens: Arc::new(gens),
        }
    }

    pub fn space(&self) -> &SpaceCode {
        &self.space
    }

    pub fn generator(&self, n: u64) -> Point {
        (self.gens)(n)
    }
}

/// Truncated-enumeration upper bound on dist(x, cl C): the minimum of
/// d(x, generator_n) over n < depth, as a bracket of that minimum.
/// Nonincreasing in depth up to error widths, and always an upper bound
/// of the true infimum.
pub fn dist_upper_sepclosed(x: &Point, c: &SepClosedCode, depth: u64, k: u32) -> Approx {
    assert!(depth >= 1);
    let mut best: Option<Rational> = None;
    for n in 0..depth {
        let g = c.generator(n);
        let d = metric_on_points(&c.space, x, &g, k);
        best = Some(match best {
            None => d.value,
            Some(b) => b.min(d.value),
        });
    }
    Approx::new(best.unwrap(), pow2(-(k as i64)))
}

/// Certified lower bound on the distance from x to the complement of U:
/// max(0, max_{n<depth}(q_n − d(x, a_n))), computed from distance upper
/// bounds so the returned value never exceeds the true distance. The
/// bracket contains the truncated formula's exact value.
pub fn dist_lower_complement(x: &Point, set: &OpenSetCode, depth: u64, k: u32) -> Approx {
    assert!(depth >= 1);
    let mut best = Rational::zero();
    for n in 0..depth {
        let Some(ball) = set.ball(n) else { break };
        let (_, hi) = dist_bounds(&set.space, x, ball.center, k);
        let slack = &ball.radius - &hi;
        if slack > best {
            best = slack;
        }
    }
    Approx::new(best, pow2(-(k as i64) + 1))
}

/// Replay helper: checks a membership witness by exact arithmetic.
pub fn replay_membership(
    set: &OpenSetCode,
    x: &Point,
    w: &MembershipWitness,
) -> Result<(), String> {
    let ball = set
        .ball(w.ball_index)
        .ok_or_else(|| format!("ball {} not enumerable", w.ball_index))?;
    if ball != w.ball {
        return Err(format!("ball {} mismatch", w.ball_index));
    }
    let (_, hi) = dist_bounds(&set.space, x, ball.center, w.precision);
    if hi > w.dist_upper {
        return Err(format!(
            "distance bound {} exceeds recorded {}",
            rational_string(&hi),
            rational_string(&w.dist_upper)
        ));
    }
    if w.dist_upper >= ball.radius {
        return Err("recorded bound does not certify membership".into());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;
    use crate::spaces::{catalog, CodePoint, SpaceSpec};

    fn reals() -> SpaceCode {
        catalog(&SpaceSpec::Reals).unwrap()
    }

    fn rat_point(s: &SpaceCode, p: i64, q: i64) -> Point {
        let idx = s.index_of(&CodePoint::Rat(rat(p, q))).unwrap();
        Point::from_code(s, idx)
    }

    fn ball_at(s: &SpaceCode, p: i64, q: i64, radius: Rational) -> Ball {
        Ball::new(s.index_of(&CodePoint::Rat(rat(p, q))).unwrap(), radius)
    }

    #[test]
    fn membership_finds_first_witness() {
        let s = reals();
        let u = OpenSetCode::finite(s.clone(), vec![ball_at(&s, 0, 1, rat(1, 2))]);
        let x = rat_point(&s, 1, 4);
        match open_membership(&x, &u, 8, 20) {
            Membership::Yes(w) => assert_eq!(w.ball_index, 0),
            _ => panic!("expected membership"),
        }
        // Boundary point: no certificate at any depth or precision.
        let y = rat_point(&s, 1, 2);
        for k in [10, 30, 60] {
            assert!(!open_membership(&y, &u, 16, k).is_yes());
        }

        let u2 = OpenSetCode::finite(
            s.clone(),
            vec![ball_at(&s, 0, 1, rat(1, 4)), ball_at(&s, 1, 4, rat(1, 4))],
        );
        let z = rat_point(&s, 3, 8);
        match open_membership(&z, &u2, 8, 20) {
            Membership::Yes(w) => assert_eq!(w.ball_index, 1),
            _ => panic!("expected membership in second ball"),
        }
    }

    #[test]
    fn punctured_ball_on_unit_interval() {
        let s = catalog(&SpaceSpec::UnitInterval).unwrap();
        let x = rat_point(&s, 0, 1);
        let p = punctured_ball(&s, &x, &rat(1, 2));
        let quarter = s.index_of(&CodePoint::Rat(rat(1, 4))).unwrap();
        let mut found = false;
        for n in 0..64 {
            let Some(b) = p.ball(n) else { break };
            // Replay the defining certificates exactly.
            let d = s.metric_exact(
                s.index_of(&CodePoint::Rat(rat(0, 1))).unwrap(),
                b.center,
            )
            .unwrap();
            assert!((&d - &b.radius).is_positive());
            assert!(&d + &b.radius < rat(1, 2));
            if b.center == quarter && b.radius == rat(1, 8) {
                found = true;
            }
        }
        assert!(found, "ball (1/4, 1/8) should appear");
    }

    #[test]
    fn punctured_ball_of_isolated_point_is_empty() {
        let s = catalog(&SpaceSpec::Naturals).unwrap();
        let x = Point::from_code(&s, 0);
        let p = punctured_ball(&s, &x, &rat(1, 2));
        assert_eq!(p.ball(0), None);
    }

    #[test]
    fn dist_upper_on_two_point_set() {
        let s = catalog(&SpaceSpec::UnitInterval).unwrap();
        let c = SepClosedCode::from_points(
            s.clone(),
            vec![rat_point(&s, 0, 1), rat_point(&s, 1, 1)],
        );
        let x = rat_point(&s, 1, 4);
        let d2 = dist_upper_sepclosed(&x, &c, 2, 20);
        assert!(d2.contains(&rat(1, 4)));
        let d1 = dist_upper_sepclosed(&x, &c, 1, 20);
        assert!(d1.contains(&rat(1, 4)));
    }

    #[test]
    fn dist_lower_from_ball_slacks() {
        let s = reals();
        let u = OpenSetCode::finite(s.clone(), vec![ball_at(&s, 0, 1, rat(1, 2))]);
        let x = rat_point(&s, 0, 1);
        let d = dist_lower_complement(&x, &u, 4, 20);
        assert_eq!(d.value, rat(1, 2));

        let u2 = OpenSetCode::finite(
            s.clone(),
            vec![ball_at(&s, 0, 1, rat(1, 2)), ball_at(&s, 1, 4, rat(1, 2))],
        );
        let y = rat_point(&s, 1, 4);
        let d2 = dist_lower_complement(&y, &u2, 4, 20);
        assert_eq!(d2.value, rat(1, 2));

        let far = rat_point(&s, 10, 1);
        let d3 = dist_lower_complement(&far, &u2, 4, 20);
        assert_eq!(d3.value, Rational::zero());
    }

    #[test]
    fn dist_upper_is_monotone_in_depth() {
        let s = reals();
        // Dyadic enumeration of [1,2] by refinement levels.
        let sp = s.clone();
        let c = SepClosedCode::from_fn(s.clone(), move |m| {
            let r = dyadic_12(m);
            let idx = sp.index_of(&CodePoint::Rat(r)).unwrap();
            Point::from_code(&sp, idx)
        });
        let x = rat_point(&s, 1, 3);
        let mut prev: Option<Rational> = None;
        for depth in [1u64, 4, 16, 64, 256] {
            let d = dist_upper_sepclosed(&x, &c, depth, 30);
            if let Some(p) = prev {
                assert!(d.value <= p + pow2(-29));
            }
            prev = Some(d.value);
        }
    }

    // Dyadics of [1,2]: levels enumerated in blocks, new points only.
    fn dyadic_12(m: u64) -> Rational {
        match m {
            0 => rat_int(1),
            1 => rat_int(2),
            _ => {
                let l = 64 - (m - 1).leading_zeros() as i64;
                let pos = m - 1 - (1 << (l - 1));
                rat_int(1) + rat(2 * pos as i64 + 1, 1) * pow2(-l)
            }
        }
    }
}
