use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::ground::{GroundIndex, GroundSet};
use crate::rational::Rational;

pub const MAX_COLORS: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ColoringError {
    #[error("number of colors must be in 1..={MAX_COLORS}, got {0}")]
    BadColorCount(usize),
    #[error("expected {expected} colors (one per ground element), got {got}")]
    WrongLength { expected: usize, got: usize },
    #[error("color {color} at position {position} is not below {n}")]
    ColorOutOfRange {
        position: usize,
        color: u8,
        n: usize,
    },
}

/// A total map from ground elements to colors `0..n`, stored in the ground's
/// enumeration order.
#[derive(Clone)]
pub struct Coloring {
    index: Arc<GroundIndex>,
    colors: Vec<u8>,
    n: usize,
}

impl std::fmt::Debug for Coloring {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Coloring")
            .field("ground", &self.ground())
            .field("n", &self.n)
            .field("colors", &self.colors)
            .finish()
    }
}

impl PartialEq for Coloring {
    fn eq(&self, other: &Self) -> bool {
        self.ground() == other.ground() && self.n == other.n && self.colors == other.colors
    }
}

impl Eq for Coloring {}

impl Coloring {
    pub fn new(ground: GroundSet, n: usize, colors: Vec<u8>) -> Result<Self, ColoringError> {
        Self::with_index(Arc::new(ground.index()), n, colors)
    }

    pub fn with_index(
        index: Arc<GroundIndex>,
        n: usize,
        colors: Vec<u8>,
    ) -> Result<Self, ColoringError> {
        if n == 0 || n > MAX_COLORS {
            return Err(ColoringError::BadColorCount(n));
        }
        if colors.len() != index.len() {
            return Err(ColoringError::WrongLength {
                expected: index.len(),
                got: colors.len(),
            });
        }
        if let Some((position, &color)) = colors.iter().enumerate().find(|(_, &c)| c as usize >= n)
        {
            return Err(ColoringError::ColorOutOfRange { position, color, n });
        }
        Ok(Coloring { index, colors, n })
    }

    pub fn from_fn(
        ground: GroundSet,
        n: usize,
        f: impl Fn(&Rational) -> usize,
    ) -> Result<Self, ColoringError> {
        let index = ground.index();
        let colors = index
            .elements()
            .iter()
            .map(|e| f(e).min(255) as u8)
            .collect();
        Self::with_index(Arc::new(index), n, colors)
    }

    pub fn monochrome(ground: GroundSet) -> Self {
        let index = ground.index();
        let colors = vec![0; index.len()];
        Coloring {
            index: Arc::new(index),
            colors,
            n: 1,
        }
    }

    pub fn random(ground: GroundSet, n: usize, rng: &mut impl Rng) -> Result<Self, ColoringError> {
        if n == 0 || n > MAX_COLORS {
            return Err(ColoringError::BadColorCount(n));
        }
        let index = ground.index();
        let colors = (0..index.len())
            .map(|_| rng.gen_range(0..n) as u8)
            .collect();
        Self::with_index(Arc::new(index), n, colors)
    }

    pub fn ground(&self) -> GroundSet {
        self.index.ground()
    }

    pub fn index(&self) -> &GroundIndex {
        &self.index
    }

    pub fn num_colors(&self) -> usize {
        self.n
    }

    pub fn colors(&self) -> &[u8] {
        &self.colors
    }

    pub fn color_at(&self, position: usize) -> usize {
        self.colors[position] as usize
    }

    pub fn color_of(&self, v: &Rational) -> Option<usize> {
        self.index.position(v).map(|i| self.colors[i] as usize)
    }

    /// Elements of each color class, in enumeration order.
    pub fn classes(&self) -> Vec<Vec<Rational>> {
        let mut out = vec![Vec::new(); self.n];
        for (e, &c) in self.index.elements().iter().zip(&self.colors) {
            out[c as usize].push(e.clone());
        }
        out
    }

    /// The same coloring restricted to a sub-ground; `None` if some element
    /// of `sub` is not in this coloring's ground.
    pub fn restrict(&self, sub: GroundSet) -> Option<Coloring> {
        let index = sub.index();
        let colors = index
            .elements()
            .iter()
            .map(|e| self.color_of(e).map(|c| c as u8))
            .collect::<Option<Vec<_>>>()?;
        Coloring::with_index(Arc::new(index), self.n, colors).ok()
    }
}

#[derive(Serialize, Deserialize)]
struct ColoringRepr {
    ground: GroundSet,
    n: usize,
    colors: Vec<u8>,
}

impl Serialize for Coloring {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        ColoringRepr {
            ground: self.ground(),
            n: self.n,
            colors: self.colors.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Coloring {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let r = ColoringRepr::deserialize(deserializer)?;
        Coloring::new(r.ground, r.n, r.colors).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        let g = GroundSet::interval(1, 3).unwrap();
        assert_eq!(
            Coloring::new(g, 0, vec![0; 3]),
            Err(ColoringError::BadColorCount(0))
        );
        assert_eq!(
            Coloring::new(g, 65, vec![0; 3]),
            Err(ColoringError::BadColorCount(65))
        );
        assert!(matches!(
            Coloring::new(g, 2, vec![0; 2]),
            Err(ColoringError::WrongLength { .. })
        ));
        assert!(matches!(
            Coloring::new(g, 2, vec![0, 2, 1]),
            Err(ColoringError::ColorOutOfRange { position: 1, .. })
        ));
    }

    #[test]
    fn lookup_and_classes() {
        let g = GroundSet::interval(1, 4).unwrap();
        let c = Coloring::new(g, 2, vec![0, 1, 1, 0]).unwrap();
        assert_eq!(c.color_of(&Rational::from(2)), Some(1));
        assert_eq!(c.color_of(&Rational::from(5)), None);
        assert_eq!(c.classes()[0], [Rational::from(1), Rational::from(4)]);
        let sub = c.restrict(GroundSet::interval(2, 3).unwrap()).unwrap();
        assert_eq!(sub.colors(), &[1, 1]);
        assert!(c.restrict(GroundSet::interval(0, 3).unwrap()).is_none());
    }

    #[test]
    fn serde_roundtrip() {
        let c = Coloring::new(GroundSet::prime_field(5).unwrap(), 3, vec![0, 1, 2, 0, 1]).unwrap();
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(s, r#"{"ground":"fp:5","n":3,"colors":[0,1,2,0,1]}"#);
        let back: Coloring = serde_json::from_str(&s).unwrap();
        assert_eq!(back, c);
    }
}
