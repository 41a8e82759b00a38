//! Deterministic enumerations backing the space codes.
//!
//! Enumeration order is part of every search contract (budgets, NotFound
//! answers and certificates all name indices), so each enumeration here
//! is fixed and documented, with a computable inverse. Rationals are
//! enumerated through the Cantor pairing of (numerator code, denominator):
//! the index of p/q is polynomial in p and q, so every rational a search
//! can produce also has a representable index. Enumerations may repeat a
//! value (non-reduced fractions, clamping fallbacks); `*_index` always
//! returns the canonical index of the reduced form.

use num::bigint::BigInt;
use num::traits::{One, Signed, ToPrimitive, Zero};

use crate::exact::Rational;

pub type Index = u128;

/// Largest bit length accepted when inverting a word enumeration.
const MAX_BITS: u32 = 120;

/// Largest numerator/denominator magnitude accepted when inverting a
/// rational enumeration.
const MAX_PART: u64 = 1 << 60;

/// Cantor pairing ⟨a,b⟩ = (a+b)(a+b+1)/2 + b.
pub fn pair(a: Index, b: Index) -> Index {
    let s = a + b;
    s * (s + 1) / 2 + b
}

pub fn unpair(i: Index) -> (Index, Index) {
    let w = (isqrt(8 * i + 1) - 1) / 2;
    let t = w * (w + 1) / 2;
    let b = i - t;
    (w - b, b)
}

fn isqrt(n: u128) -> u128 {
    if n < 2 {
        return n;
    }
    let mut x = 1u128 << ((128 - n.leading_zeros()).div_ceil(2));
    loop {
        let y = (x + n / x) / 2;
        if y >= x {
            return x;
        }
        x = y;
    }
}

/// 0, 1, −1, 2, −2, … (integer code used for signed numerators).
fn zigzag(a: Index) -> BigInt {
    if a % 2 == 0 {
        -BigInt::from((a / 2) as u64)
    } else {
        BigInt::from((a / 2 + 1) as u64)
    }
}

fn zigzag_index(z: &BigInt) -> Option<Index> {
    let m = z.abs().to_u64().filter(|&m| m <= MAX_PART)?;
    if z.is_negative() {
        Some(2 * m as Index)
    } else if z.is_zero() {
        Some(0)
    } else {
        Some(2 * m as Index - 1)
    }
}

fn denom_index(d: &BigInt) -> Option<Index> {
    let q = d.to_u64().filter(|&q| q <= MAX_PART)?;
    Some(q as Index - 1)
}

/// All rationals: i ↦ zigzag(a)/(b+1) for (a,b) = unpair(i).
pub fn rational_all(i: Index) -> Rational {
    let (a, b) = unpair(i);
    Rational::new(zigzag(a), BigInt::from((b + 1) as u64))
}

pub fn rational_all_index(r: &Rational) -> Option<Index> {
    Some(pair(zigzag_index(r.numer())?, denom_index(r.denom())?))
}

/// Nonnegative rationals: i ↦ a/(b+1).
pub fn rational_nonneg(i: Index) -> Rational {
    let (a, b) = unpair(i);
    Rational::new(BigInt::from(a as u64), BigInt::from((b + 1) as u64))
}

pub fn rational_nonneg_index(r: &Rational) -> Option<Index> {
    if r.is_negative() {
        return None;
    }
    let p = r.numer().to_u64().filter(|&p| p <= MAX_PART)?;
    Some(pair(p as Index, denom_index(r.denom())?))
}

/// Rationals in [0,1]: i ↦ a/(b+1), clamped to 1 when the fraction
/// exceeds the interval (a harmless repetition).
pub fn rational_unit(i: Index) -> Rational {
    let r = rational_nonneg(i);
    if r > Rational::one() {
        Rational::one()
    } else {
        r
    }
}

pub fn rational_unit_index(r: &Rational) -> Option<Index> {
    if r.is_negative() || r > &Rational::one() {
        return None;
    }
    rational_nonneg_index(r)
}

/// j ≥ 1 ↦ a rational strictly inside (0,1): (a+1)/(a+b+2) for
/// (a,b) = unpair(j−1). Every such rational appears.
pub fn unit_open(j: Index) -> Rational {
    assert!(j >= 1);
    let (a, b) = unpair(j - 1);
    Rational::new(BigInt::from((a + 1) as u64), BigInt::from((a + b + 2) as u64))
}

pub fn unit_open_index(r: &Rational) -> Option<Index> {
    if !r.is_positive() || r >= &Rational::one() {
        return None;
    }
    let p = r.numer().to_u64().filter(|&p| p <= MAX_PART)?;
    let q = r.denom().to_u64().filter(|&q| q <= MAX_PART)?;
    Some(pair(p as Index - 1, (q - p - 1) as Index) + 1)
}

/// Binary words in level order: i ↦ the binary expansion of i+1 with the
/// leading 1 removed. Index 0 is the empty word.
pub fn bin_word(i: Index) -> Vec<u8> {
    let v = i + 1;
    let bits = 128 - v.leading_zeros();
    (0..bits - 1)
        .rev()
        .map(|k| ((v >> k) & 1) as u8)
        .collect()
}

pub fn bin_word_index(w: &[u8]) -> Option<Index> {
    if w.len() as u32 > MAX_BITS {
        return None;
    }
    let mut v: Index = 1;
    for &b in w {
        v = (v << 1) | (b as Index & 1);
    }
    Some(v - 1)
}

/// Words of naturals, coded by runs: each digit a contributes a 1s and a
/// terminating 0 to a bit string, which is read as a binary numeral with
/// a leading sentinel 1. A trailing unterminated run still decodes (to
/// its length), so the decoder is total; `nat_word_index` returns the
/// canonical terminated encoding.
pub fn nat_word(i: Index) -> Vec<u64> {
    let v = i + 1;
    let bits = 128 - v.leading_zeros();
    let mut word = Vec::new();
    let mut run = 0u64;
    let mut open = false;
    for k in (0..bits - 1).rev() {
        if (v >> k) & 1 == 1 {
            run += 1;
            open = true;
        } else {
            word.push(run);
            run = 0;
            open = false;
        }
    }
    if open {
        word.push(run);
    }
    word
}

pub fn nat_word_index(w: &[u64]) -> Option<Index> {
    let total: u64 = w.iter().map(|a| a + 1).sum();
    if total as u32 > MAX_BITS {
        return None;
    }
    let mut v: Index = 1;
    for &a in w {
        for _ in 0..a {
            v = (v << 1) | 1;
        }
        v <<= 1;
    }
    Some(v - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{rat, rat_int};

    #[test]
    fn rational_enumeration_prefix() {
        let got: Vec<Rational> = (0..9).map(rational_all).collect();
        let want = [
            rat_int(0),
            rat_int(1),
            rat_int(0),
            rat_int(-1),
            rat(1, 2),
            rat_int(0),
            rat_int(2),
            rat(-1, 2),
            rat(1, 3),
        ];
        assert_eq!(got, want);
    }

    #[test]
    fn enumerations_roundtrip() {
        for i in 0..800u128 {
            let r = rational_all(i);
            let j = rational_all_index(&r).unwrap();
            assert_eq!(rational_all(j), r);
            assert!(j <= i); // canonical index is the first occurrence
            let r = rational_nonneg(i);
            assert_eq!(rational_nonneg(rational_nonneg_index(&r).unwrap()), r);
            let r = rational_unit(i);
            assert!(!r.is_negative() && r <= Rational::one());
            assert_eq!(rational_unit(rational_unit_index(&r).unwrap()), r);
            let w = bin_word(i);
            assert_eq!(bin_word_index(&w), Some(i));
        }
        // Large-denominator dyadics stay representable.
        let fine = rat(190_537, 1 << 18);
        let idx = rational_all_index(&fine).unwrap();
        assert_eq!(rational_all(idx), fine);
    }

    #[test]
    fn unit_open_covers_interior() {
        for j in 1..400u128 {
            let r = unit_open(j);
            assert!(r.is_positive() && r < Rational::one());
            let back = unit_open_index(&r).unwrap();
            assert_eq!(unit_open(back), r);
        }
        assert_eq!(unit_open_index(&rat(1, 2)), Some(1));
    }

    #[test]
    fn pairing_roundtrip() {
        for a in 0..40u128 {
            for b in 0..40u128 {
                assert_eq!(unpair(pair(a, b)), (a, b));
            }
        }
        for i in 0..2000u128 {
            let (a, b) = unpair(i);
            assert_eq!(pair(a, b), i);
        }
    }

    #[test]
    fn nat_words_decode_and_invert() {
        assert_eq!(nat_word(0), Vec::<u64>::new());
        for w in [
            vec![],
            vec![0],
            vec![1],
            vec![5],
            vec![0, 0],
            vec![2, 0, 1],
            vec![20, 0, 0, 1],
        ] {
            let i = nat_word_index(&w).unwrap();
            assert_eq!(nat_word(i), w);
        }
        for i in 0..500u128 {
            let _ = nat_word(i);
        }
    }
}
