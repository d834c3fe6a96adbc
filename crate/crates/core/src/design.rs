//! Design dimensions, variation sources, model variants and exact degrees of
//! freedom.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One of the four indices of an observation `y[h][i][j][k]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Axis {
    /// Blocks, index `h`.
    Block,
    /// Horizontal strip factor, index `i`.
    A,
    /// Vertical strip factor, index `j`.
    B,
    /// Subplot factor, index `k`.
    C,
}

impl Axis {
    pub const ALL: [Axis; 4] = [Axis::Block, Axis::A, Axis::B, Axis::C];

    pub fn position(self) -> usize {
        self as usize
    }

    pub(crate) fn bit(self) -> u8 {
        1 << self.position()
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::Block => "block",
            Axis::A => "A",
            Axis::B => "B",
            Axis::C => "C",
        })
    }
}

/// A subset of the four axes stored as a bitmask (block = bit 0, ..., C = bit 3).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, serde::Serialize)]
pub struct AxisSet(pub(crate) u8);

impl AxisSet {
    pub const EMPTY: AxisSet = AxisSet(0);
    pub const FULL: AxisSet = AxisSet(0b1111);

    pub fn of(axes: &[Axis]) -> Self {
        AxisSet(axes.iter().fold(0, |m, a| m | a.bit()))
    }

    pub fn contains(self, axis: Axis) -> bool {
        self.0 & axis.bit() != 0
    }

    pub fn is_superset(self, other: AxisSet) -> bool {
        self.0 & other.0 == other.0
    }

    pub fn complement(self) -> AxisSet {
        AxisSet(!self.0 & 0b1111)
    }

    pub fn iter(self) -> impl Iterator<Item = Axis> {
        Axis::ALL.into_iter().filter(move |a| self.contains(*a))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }
}

/// Level counts of the design: `r` blocks and `a`, `b`, `c` levels of the
/// three treatment factors. Every count is at least 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DesignDims {
    r: usize,
    a: usize,
    b: usize,
    c: usize,
}

impl DesignDims {
    pub fn new(r: usize, a: usize, b: usize, c: usize) -> Result<Self> {
        for (axis, count) in Axis::ALL.into_iter().zip([r, a, b, c]) {
            if count < 2 {
                return Err(Error::InvalidDims { axis, count });
            }
        }
        Ok(DesignDims { r, a, b, c })
    }

    pub fn r(&self) -> usize {
        self.r
    }
    pub fn a(&self) -> usize {
        self.a
    }
    pub fn b(&self) -> usize {
        self.b
    }
    pub fn c(&self) -> usize {
        self.c
    }

    pub fn levels(&self, axis: Axis) -> usize {
        self.shape()[axis.position()]
    }

    /// `[r, a, b, c]`, the shape of the response array in `(h, i, j, k)` order.
    pub fn shape(&self) -> [usize; 4] {
        [self.r, self.a, self.b, self.c]
    }

    pub fn n_cells(&self) -> usize {
        self.r * self.a * self.b * self.c
    }

    /// Product of the level counts of the axes in `set` (1 for the empty set).
    pub fn product(&self, set: AxisSet) -> usize {
        set.iter().map(|a| self.levels(a)).product()
    }

    /// Row-major offset of cell `(h, i, j, k)`.
    pub fn offset(&self, idx: [usize; 4]) -> usize {
        ((idx[0] * self.a + idx[1]) * self.b + idx[2]) * self.c + idx[3]
    }

    /// Inverse of [`DesignDims::offset`].
    pub fn unravel(&self, mut offset: usize) -> [usize; 4] {
        let k = offset % self.c;
        offset /= self.c;
        let j = offset % self.b;
        offset /= self.b;
        let i = offset % self.a;
        [offset / self.a, i, j, k]
    }
}

impl fmt::Display for DesignDims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{},{}", self.r, self.a, self.b, self.c)
    }
}

impl FromStr for DesignDims {
    type Err = Error;

    /// Parses `"r,a,b,c"`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<usize> = s
            .split(',')
            .map(|p| p.trim().parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse { line: 0, message: format!("dims {s:?}: {e}") })?;
        match parts[..] {
            [r, a, b, c] => DesignDims::new(r, a, b, c),
            _ => Err(Error::Parse { line: 0, message: format!("dims {s:?}: expected r,a,b,c") }),
        }
    }
}

/// The twelve variation sources, in ANOVA table order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SourceId {
    R,
    A,
    #[serde(rename = "eA")]
    EA,
    B,
    #[serde(rename = "eB")]
    EB,
    AB,
    #[serde(rename = "eAB")]
    EAB,
    C,
    AC,
    BC,
    ABC,
    #[serde(rename = "eT")]
    ET,
}

impl SourceId {
    pub const ALL: [SourceId; 12] = [
        SourceId::R,
        SourceId::A,
        SourceId::EA,
        SourceId::B,
        SourceId::EB,
        SourceId::AB,
        SourceId::EAB,
        SourceId::C,
        SourceId::AC,
        SourceId::BC,
        SourceId::ABC,
        SourceId::ET,
    ];

    /// The seven treatment sources (main effects and interactions of A, B, C).
    pub const TREATMENTS: [SourceId; 7] =
        [SourceId::A, SourceId::B, SourceId::AB, SourceId::C, SourceId::AC, SourceId::BC, SourceId::ABC];

    pub fn label(self) -> &'static str {
        match self {
            SourceId::R => "R",
            SourceId::A => "A",
            SourceId::EA => "eA",
            SourceId::B => "B",
            SourceId::EB => "eB",
            SourceId::AB => "AB",
            SourceId::EAB => "eAB",
            SourceId::C => "C",
            SourceId::AC => "AC",
            SourceId::BC => "BC",
            SourceId::ABC => "ABC",
            SourceId::ET => "eT",
        }
    }

    /// Indices the source's effect varies over: one random draw (or one
    /// fixed value) per combination of these.
    pub fn axes(self) -> AxisSet {
        use Axis::{Block as H, A as I, B as J, C as K};
        AxisSet::of(match self {
            SourceId::R => &[H],
            SourceId::A => &[I],
            SourceId::EA => &[H, I],
            SourceId::B => &[J],
            SourceId::EB => &[H, J],
            SourceId::AB => &[I, J],
            SourceId::EAB => &[H, I, J],
            SourceId::C => &[K],
            SourceId::AC => &[I, K],
            SourceId::BC => &[J, K],
            SourceId::ABC => &[I, J, K],
            SourceId::ET => &[H, I, J, K],
        })
    }

    pub fn is_error(self) -> bool {
        matches!(self, SourceId::EA | SourceId::EB | SourceId::EAB | SourceId::ET)
    }

    pub fn is_treatment(self) -> bool {
        !self.is_error() && self != SourceId::R
    }
}

impl fmt::Display for SourceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for SourceId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().replace('_', "");
        SourceId::ALL
            .into_iter()
            .find(|src| src.label().eq_ignore_ascii_case(&norm))
            .ok_or_else(|| Error::UnknownSource(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EffectKind {
    Fixed,
    Random,
}

impl EffectKind {
    pub fn letter(self) -> char {
        match self {
            EffectKind::Fixed => 'F',
            EffectKind::Random => 'R',
        }
    }
}

/// Fixed/random status of the three treatment factors. Blocks are always
/// random.
///
/// Text form is three letters for A, B, C: `"FFF"` is the fixed model,
/// `"RRR"` the random model, `"RFF"` has only A random.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModelVariant {
    pub a: EffectKind,
    pub b: EffectKind,
    pub c: EffectKind,
}

impl serde::Serialize for ModelVariant {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.code())
    }
}

impl ModelVariant {
    pub const fn new(a: EffectKind, b: EffectKind, c: EffectKind) -> Self {
        ModelVariant { a, b, c }
    }

    /// All eight variants, fixed model first and random model second, then
    /// the one-fixed and one-random variants.
    pub fn all() -> [ModelVariant; 8] {
        ["FFF", "RRR", "FRR", "RFR", "RRF", "RFF", "FRF", "FFR"].map(|s| s.parse().unwrap())
    }

    pub fn kind_of(&self, axis: Axis) -> Option<EffectKind> {
        match axis {
            Axis::Block => None,
            Axis::A => Some(self.a),
            Axis::B => Some(self.b),
            Axis::C => Some(self.c),
        }
    }

    pub fn code(&self) -> String {
        [self.a, self.b, self.c].iter().map(|k| k.letter()).collect()
    }
}

impl fmt::Display for ModelVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.code())
    }
}

impl FromStr for ModelVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let kinds: Vec<EffectKind> = s
            .trim()
            .chars()
            .map(|ch| match ch.to_ascii_uppercase() {
                'F' => Ok(EffectKind::Fixed),
                'R' => Ok(EffectKind::Random),
                _ => Err(Error::InvalidModel(s.to_string())),
            })
            .collect::<Result<_>>()?;
        match kinds[..] {
            [a, b, c] => Ok(ModelVariant { a, b, c }),
            _ => Err(Error::InvalidModel(s.to_string())),
        }
    }
}

/// Exact degrees of freedom of a source.
pub fn degrees_of_freedom(dims: DesignDims, source: SourceId) -> usize {
    let [r, a, b, c] = dims.shape();
    match source {
        SourceId::R => r - 1,
        SourceId::A => a - 1,
        SourceId::EA => (r - 1) * (a - 1),
        SourceId::B => b - 1,
        SourceId::EB => (r - 1) * (b - 1),
        SourceId::AB => (a - 1) * (b - 1),
        SourceId::EAB => (a - 1) * (b - 1) * (r - 1),
        SourceId::C => c - 1,
        SourceId::AC => (a - 1) * (c - 1),
        SourceId::BC => (b - 1) * (c - 1),
        SourceId::ABC => (a - 1) * (b - 1) * (c - 1),
        SourceId::ET => a * b * (c - 1) * (r - 1),
    }
}

/// Whether a source's effects are fixed or random under `model`. Blocks and
/// the error strata are always random; an interaction is random as soon as
/// one of its factors is.
pub fn derived_effect_kind(model: ModelVariant, source: SourceId) -> EffectKind {
    if !source.is_treatment() {
        return EffectKind::Random;
    }
    let any_random = source.axes().iter().filter_map(|axis| model.kind_of(axis)).any(|k| k == EffectKind::Random);
    if any_random {
        EffectKind::Random
    } else {
        EffectKind::Fixed
    }
}
