use std::sync::Arc;

use fixedbitset::FixedBitSet;

use crate::error::OutOfGround;
use crate::ground::{GroundIndex, GroundSet};
use crate::rational::Rational;

/// A set of ambient elements, indexed by ambient position.
pub type ElementSet = FixedBitSet;

const NONE: u32 = u32::MAX;

/// Largest ambient accepted; the operation tables are quadratic in size.
pub const MAX_AMBIENT: usize = 2048;

/// A finite set of ground elements with its addition and multiplication
/// tabulated. Results that leave the ambient are recorded as undefined.
///
/// Elements are numbered in ground enumeration order, so "least" always
/// means "least ambient index".
#[derive(Debug, Clone)]
pub struct Ambient {
    index: Arc<GroundIndex>,
    positions: Vec<u32>,
    slot: Vec<u32>,
    add: Vec<u32>,
    mul: Vec<u32>,
    one: Option<u32>,
}

impl Ambient {
    /// The multiplicative ambient: every nonzero element of `ground`.
    pub fn nonzero(ground: GroundSet) -> Result<Self, OutOfGround> {
        let index = Arc::new(ground.index());
        let values: Vec<Rational> = index
            .elements()
            .iter()
            .filter(|v| ground.is_nonzero(v))
            .cloned()
            .collect();
        Self::build(index, &values)
    }

    /// An arbitrary subset of the ground (duplicates ignored).
    pub fn from_values(ground: GroundSet, values: &[Rational]) -> Result<Self, OutOfGround> {
        Self::build(Arc::new(ground.index()), values)
    }

    fn build(index: Arc<GroundIndex>, values: &[Rational]) -> Result<Self, OutOfGround> {
        let mut slot = vec![NONE; index.len()];
        for v in values {
            let p = index.position(v).ok_or(OutOfGround)?;
            slot[p] = 0;
        }
        let mut positions = Vec::new();
        for (p, s) in slot.iter_mut().enumerate() {
            if *s == 0 {
                *s = positions.len() as u32;
                positions.push(p as u32);
            }
        }
        let n = positions.len();
        assert!(
            n <= MAX_AMBIENT,
            "ambient of {n} elements exceeds {MAX_AMBIENT}"
        );
        let ground = index.ground();
        let mut add = vec![NONE; n * n];
        let mut mul = vec![NONE; n * n];
        let lookup = |v: Rational| {
            if ground.contains(&v) {
                index.position(&v).map_or(NONE, |p| slot[p])
            } else {
                NONE
            }
        };
        for a in 0..n {
            for b in 0..n {
                let (x, y) = (
                    index.element(positions[a] as usize),
                    index.element(positions[b] as usize),
                );
                match ground {
                    GroundSet::PrimeField { p } => {
                        let (x, y) = (positions[a] as u64, positions[b] as u64);
                        add[a * n + b] = slot[((x + y) % p) as usize];
                        mul[a * n + b] = slot[((x * y) % p) as usize];
                    }
                    _ => {
                        add[a * n + b] = lookup(ground.add(x, y));
                        mul[a * n + b] = lookup(ground.mul(x, y));
                    }
                }
            }
        }
        let one = index
            .position(&Rational::one())
            .map(|p| slot[p])
            .filter(|&s| s != NONE);
        Ok(Ambient {
            index,
            positions,
            slot,
            add,
            mul,
            one,
        })
    }

    pub fn ground(&self) -> GroundSet {
        self.index.ground()
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn value(&self, i: usize) -> &Rational {
        self.index.element(self.positions[i] as usize)
    }

    pub fn values(&self) -> Vec<Rational> {
        (0..self.len()).map(|i| self.value(i).clone()).collect()
    }

    /// Ambient index of `v`, if it is a member.
    pub fn index_of(&self, v: &Rational) -> Option<usize> {
        let p = self.index.position(v)?;
        (self.slot[p] != NONE).then(|| self.slot[p] as usize)
    }

    /// Ambient index of the multiplicative identity, if present.
    pub fn one(&self) -> Option<usize> {
        self.one.map(|i| i as usize)
    }

    pub fn add(&self, a: usize, b: usize) -> Option<usize> {
        let r = self.add[a * self.len() + b];
        (r != NONE).then_some(r as usize)
    }

    pub fn mul(&self, a: usize, b: usize) -> Option<usize> {
        let r = self.mul[a * self.len() + b];
        (r != NONE).then_some(r as usize)
    }

    pub fn empty_set(&self) -> ElementSet {
        FixedBitSet::with_capacity(self.len())
    }

    pub fn full_set(&self) -> ElementSet {
        let mut s = self.empty_set();
        s.insert_range(..);
        s
    }

    /// The members of `values` as an element set; fails on non-members.
    pub fn set_of(&self, values: &[Rational]) -> Result<ElementSet, OutOfGround> {
        let mut s = self.empty_set();
        for v in values {
            s.insert(self.index_of(v).ok_or(OutOfGround)?);
        }
        Ok(s)
    }

    pub fn values_of(&self, set: &ElementSet) -> Vec<Rational> {
        set.ones().map(|i| self.value(i).clone()).collect()
    }

    /// `{a * b : b in set}` restricted to defined products.
    pub fn scale(&self, a: usize, set: &ElementSet) -> ElementSet {
        let mut out = self.empty_set();
        for b in set.ones() {
            if let Some(c) = self.mul(a, b) {
                out.insert(c);
            }
        }
        out
    }

    /// `{t : t * a in set}`.
    pub fn preimage(&self, a: usize, set: &ElementSet) -> ElementSet {
        let mut out = self.empty_set();
        for t in 0..self.len() {
            if self.mul(t, a).is_some_and(|c| set.contains(c)) {
                out.insert(t);
            }
        }
        out
    }

    /// `{a * b : a in x, b in y}`, or `None` if some product is undefined.
    pub fn product_set(&self, x: &ElementSet, y: &ElementSet) -> Option<ElementSet> {
        let mut out = self.empty_set();
        for a in x.ones() {
            for b in y.ones() {
                out.insert(self.mul(a, b)?);
            }
        }
        Some(out)
    }
}

/// Least primitive root of the prime `p`.
pub fn primitive_root(p: u64) -> u64 {
    if p == 2 {
        return 1;
    }
    let mut factors = Vec::new();
    let mut m = p - 1;
    let mut d = 2;
    while d * d <= m {
        if m % d == 0 {
            factors.push(d);
            while m % d == 0 {
                m /= d;
            }
        }
        d += 1;
    }
    if m > 1 {
        factors.push(m);
    }
    (2..p)
        .find(|&g| {
            factors
                .iter()
                .all(|&q| crate::ground::mod_pow(g, (p - 1) / q, p) != 1)
        })
        .expect("a prime has a primitive root")
}
