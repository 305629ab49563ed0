//! Finite arenas the patterns are searched in.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use num_traits::ToPrimitive;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{OutOfGround, ParseError};
use crate::rational::Rational;

/// A finite ground set with its arithmetic.
///
/// `PrimeField` arithmetic is mod `p` on the residues `0..p`; the other two
/// variants compute exactly in the rationals and report when a value lands
/// outside the set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GroundSet {
    IntegerInterval {
        lo: i64,
        hi: i64,
    },
    PrimeField {
        p: u64,
    },
    /// `{a/b : |a| <= max_num, 1 <= b <= max_den}` in lowest terms.
    RationalGrid {
        max_num: u64,
        max_den: u64,
    },
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

pub fn mod_pow(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = ((acc as u128 * base as u128) % m as u128) as u64;
        }
        base = ((base as u128 * base as u128) % m as u128) as u64;
        exp >>= 1;
    }
    acc
}

/// Inverse of `a` modulo the prime `p`.
pub fn mod_inverse(a: u64, p: u64) -> Option<u64> {
    if a % p == 0 {
        None
    } else {
        Some(mod_pow(a, p - 2, p))
    }
}

impl GroundSet {
    pub fn interval(lo: i64, hi: i64) -> Result<Self, ParseError> {
        if lo > hi {
            return Err(ParseError::new(format!("empty interval {lo}..{hi}")));
        }
        Ok(GroundSet::IntegerInterval { lo, hi })
    }

    pub fn prime_field(p: u64) -> Result<Self, ParseError> {
        if !is_prime(p) {
            return Err(ParseError::new(format!("{p} is not prime")));
        }
        Ok(GroundSet::PrimeField { p })
    }

    pub fn rational_grid(max_num: u64, max_den: u64) -> Result<Self, ParseError> {
        if max_num == 0 || max_den == 0 {
            return Err(ParseError::new("grid bounds must be positive"));
        }
        Ok(GroundSet::RationalGrid { max_num, max_den })
    }

    pub fn is_closed(&self) -> bool {
        matches!(self, GroundSet::PrimeField { .. })
    }

    pub fn is_prime_field(&self) -> bool {
        self.is_closed()
    }

    pub fn modulus(&self) -> Option<u64> {
        match self {
            GroundSet::PrimeField { p } => Some(*p),
            _ => None,
        }
    }

    /// Elements in the fixed enumeration order: ascending value for the
    /// interval and grid, residues `0..p` for the field.
    pub fn elements(&self) -> Vec<Rational> {
        match *self {
            GroundSet::IntegerInterval { lo, hi } => (lo..=hi).map(Rational::from).collect(),
            GroundSet::PrimeField { p } => (0..p as i64).map(Rational::from).collect(),
            GroundSet::RationalGrid { max_num, max_den } => {
                let mut out = Vec::new();
                let n = max_num as i64;
                for a in -n..=n {
                    for b in 1..=max_den as i64 {
                        if num_integer::gcd(a, b) == 1 || (a == 0 && b == 1) {
                            out.push(Rational::new(a, b).expect("nonzero denominator"));
                        }
                    }
                }
                out.sort();
                out
            }
        }
    }

    pub fn len(&self) -> usize {
        match *self {
            GroundSet::IntegerInterval { lo, hi } => (hi - lo + 1) as usize,
            GroundSet::PrimeField { p } => p as usize,
            GroundSet::RationalGrid { .. } => self.elements().len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, v: &Rational) -> bool {
        match *self {
            GroundSet::IntegerInterval { lo, hi } => v.to_i64().is_some_and(|x| lo <= x && x <= hi),
            GroundSet::PrimeField { p } => v.to_i64().is_some_and(|x| x >= 0 && (x as u64) < p),
            GroundSet::RationalGrid { max_num, max_den } => {
                let num_ok = v.numer().magnitude().to_u64().is_some_and(|a| a <= max_num);
                let den_ok = v.denom().to_u64().is_some_and(|b| b <= max_den);
                num_ok && den_ok
            }
        }
    }

    /// Brings a constant into the ground's number system: residues for the
    /// field, identity otherwise. `None` if the constant has no residue.
    pub fn embed(&self, v: &Rational) -> Option<Rational> {
        match *self {
            GroundSet::PrimeField { p } => v.to_residue(p).map(|r| Rational::from(r as i64)),
            _ => Some(v.clone()),
        }
    }

    pub fn add(&self, a: &Rational, b: &Rational) -> Rational {
        match *self {
            GroundSet::PrimeField { p } => {
                let s = a.to_residue(p).unwrap_or(0) + b.to_residue(p).unwrap_or(0);
                Rational::from((s % p) as i64)
            }
            _ => a + b,
        }
    }

    pub fn mul(&self, a: &Rational, b: &Rational) -> Rational {
        match *self {
            GroundSet::PrimeField { p } => {
                let x = a.to_residue(p).unwrap_or(0) as u128;
                let y = b.to_residue(p).unwrap_or(0) as u128;
                Rational::from(((x * y) % p as u128) as i64)
            }
            _ => a * b,
        }
    }

    /// Sum that must stay inside the ground.
    pub fn add_in(&self, a: &Rational, b: &Rational) -> Result<Rational, OutOfGround> {
        let s = self.add(a, b);
        if self.contains(&s) {
            Ok(s)
        } else {
            Err(OutOfGround)
        }
    }

    /// Product that must stay inside the ground.
    pub fn mul_in(&self, a: &Rational, b: &Rational) -> Result<Rational, OutOfGround> {
        let s = self.mul(a, b);
        if self.contains(&s) {
            Ok(s)
        } else {
            Err(OutOfGround)
        }
    }

    /// Multiplicative inverse; exact for the rational variants.
    pub fn inverse(&self, a: &Rational) -> Option<Rational> {
        match *self {
            GroundSet::PrimeField { p } => {
                let r = a.to_residue(p)?;
                mod_inverse(r, p).map(|v| Rational::from(v as i64))
            }
            _ => a.recip(),
        }
    }

    /// Nonzero in the ground's sense (`!= 0 mod p` for the field).
    pub fn is_nonzero(&self, v: &Rational) -> bool {
        match *self {
            GroundSet::PrimeField { p } => v.to_residue(p).is_some_and(|r| r != 0),
            _ => !v.is_zero(),
        }
    }

    pub fn index(&self) -> GroundIndex {
        GroundIndex::new(*self)
    }
}

impl fmt::Display for GroundSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroundSet::IntegerInterval { lo, hi } => write!(f, "int:{lo}..{hi}"),
            GroundSet::PrimeField { p } => write!(f, "fp:{p}"),
            GroundSet::RationalGrid { max_num, max_den } => write!(f, "qgrid:{max_num}/{max_den}"),
        }
    }
}

impl FromStr for GroundSet {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = |what: &str| ParseError::new(format!("invalid ground spec `{s}`: {what}"));
        let (kind, rest) = s.split_once(':').ok_or_else(|| bad("missing `:`"))?;
        match kind {
            "int" => {
                let (lo, hi) = rest
                    .split_once("..")
                    .ok_or_else(|| bad("expected LO..HI"))?;
                let lo = lo.trim().parse().map_err(|_| bad("bad LO"))?;
                let hi = hi.trim().parse().map_err(|_| bad("bad HI"))?;
                GroundSet::interval(lo, hi)
            }
            "fp" => {
                let p = rest.trim().parse().map_err(|_| bad("bad P"))?;
                GroundSet::prime_field(p)
            }
            "qgrid" => {
                let (n, d) = rest
                    .split_once('/')
                    .ok_or_else(|| bad("expected MAXNUM/MAXDEN"))?;
                let n = n.trim().parse().map_err(|_| bad("bad MAXNUM"))?;
                let d = d.trim().parse().map_err(|_| bad("bad MAXDEN"))?;
                GroundSet::rational_grid(n, d)
            }
            _ => Err(bad("unknown kind")),
        }
    }
}

impl Serialize for GroundSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for GroundSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Enumeration of a ground set with O(1) element-to-position lookup.
#[derive(Debug, Clone)]
pub struct GroundIndex {
    ground: GroundSet,
    elements: Vec<Rational>,
    lookup: Option<HashMap<Rational, usize>>,
}

impl GroundIndex {
    pub fn new(ground: GroundSet) -> Self {
        let elements = ground.elements();
        let lookup = match ground {
            GroundSet::RationalGrid { .. } => Some(
                elements
                    .iter()
                    .enumerate()
                    .map(|(i, e)| (e.clone(), i))
                    .collect(),
            ),
            _ => None,
        };
        GroundIndex {
            ground,
            elements,
            lookup,
        }
    }

    pub fn ground(&self) -> GroundSet {
        self.ground
    }

    pub fn elements(&self) -> &[Rational] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn element(&self, i: usize) -> &Rational {
        &self.elements[i]
    }

    pub fn position(&self, v: &Rational) -> Option<usize> {
        match (&self.lookup, self.ground) {
            (Some(map), _) => map.get(v).copied(),
            (None, GroundSet::IntegerInterval { lo, hi }) => {
                let x = v.to_i64()?;
                (lo..=hi).contains(&x).then(|| (x - lo) as usize)
            }
            (None, GroundSet::PrimeField { p }) => {
                let x = v.to_i64()?;
                (x >= 0 && (x as u64) < p).then_some(x as usize)
            }
            (None, GroundSet::RationalGrid { .. }) => {
                unreachable!("grid index always has a lookup")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_specs() {
        assert_eq!(
            "int:1..252".parse::<GroundSet>().unwrap(),
            GroundSet::IntegerInterval { lo: 1, hi: 252 }
        );
        assert_eq!(
            "fp:11".parse::<GroundSet>().unwrap(),
            GroundSet::PrimeField { p: 11 }
        );
        assert_eq!(
            "qgrid:3/2".parse::<GroundSet>().unwrap(),
            GroundSet::RationalGrid {
                max_num: 3,
                max_den: 2
            }
        );
        assert!("fp:12".parse::<GroundSet>().is_err());
        assert!("int:5..1".parse::<GroundSet>().is_err());
        assert!("foo:1".parse::<GroundSet>().is_err());
        for s in ["int:-3..4", "fp:7", "qgrid:5/3"] {
            assert_eq!(s.parse::<GroundSet>().unwrap().to_string(), s);
        }
    }

    #[test]
    fn grid_elements_are_reduced_and_sorted() {
        let g = GroundSet::rational_grid(2, 2).unwrap();
        let els: Vec<String> = g.elements().iter().map(|e| e.to_string()).collect();
        assert_eq!(els, ["-2", "-1", "-1/2", "0", "1/2", "1", "2"]);
        assert!(g.contains(&Rational::new(1, 2).unwrap()));
        assert!(!g.contains(&Rational::new(1, 3).unwrap()));
        assert!(!g.contains(&Rational::from(3)));
    }

    #[test]
    fn enumeration_is_deterministic() {
        for g in ["int:-4..9", "fp:13", "qgrid:4/3"] {
            let g: GroundSet = g.parse().unwrap();
            assert_eq!(g.elements(), g.elements());
            assert_eq!(g.len(), g.elements().len());
        }
    }

    #[test]
    fn field_arithmetic() {
        let f = GroundSet::prime_field(5).unwrap();
        assert_eq!(f.mul(&3.into(), &4.into()), Rational::from(2));
        assert_eq!(f.add(&3.into(), &4.into()), Rational::from(2));
        assert_eq!(f.inverse(&2.into()), Some(Rational::from(3)));
        assert_eq!(f.inverse(&0.into()), None);
        assert!(!f.is_nonzero(&0.into()));
    }

    #[test]
    fn index_positions() {
        for g in ["int:-4..9", "fp:13", "qgrid:4/3"] {
            let g: GroundSet = g.parse().unwrap();
            let idx = g.index();
            for (i, e) in idx.elements().iter().enumerate() {
                assert_eq!(idx.position(e), Some(i));
            }
            assert_eq!(idx.position(&Rational::from(1000)), None);
        }
    }
}
