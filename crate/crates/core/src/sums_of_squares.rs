//! The twelve-line sums-of-squares decomposition.
//!
//! Two independent routes are provided. [`ss_direct`] evaluates the classical
//! marginal-mean formulas (signed sums of marginal means, squared, times the
//! number of cells each mean averages over). [`ss_kronecker`] evaluates the
//! quadratic form `y'My` where `M` is a Kronecker product of one centering,
//! averaging or identity operator per axis, applied axis by axis so `M` is
//! never materialized.

use std::fmt::Write as _;

use serde::Serialize;

use crate::data::{BalancedLayout, Margins};
use crate::design::{degrees_of_freedom, Axis, AxisSet, DesignDims, SourceId};
use crate::linalg::DenseMatrix;

/// Per-axis factor of a Kronecker projector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Slot {
    /// `I − J/n`
    Center,
    /// `J/n`
    Average,
    /// `I`
    Identity,
}

impl Slot {
    fn trace(self, n: usize) -> usize {
        match self {
            Slot::Center => n - 1,
            Slot::Average => 1,
            Slot::Identity => n,
        }
    }

    fn matrix(self, n: usize) -> DenseMatrix {
        let mut m = match self {
            Slot::Identity | Slot::Center => DenseMatrix::identity(n),
            Slot::Average => DenseMatrix::zeros(n),
        };
        match self {
            Slot::Center => m.add_scaled(-1.0 / n as f64, &DenseMatrix::filled(n, 1.0)),
            Slot::Average => m.add_scaled(1.0 / n as f64, &DenseMatrix::filled(n, 1.0)),
            Slot::Identity => {}
        }
        m
    }
}

/// `slots[0] ⊗ slots[1] ⊗ slots[2] ⊗ slots[3]` over the block, A, B, C axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ProjectorSpec {
    pub slots: [Slot; 4],
}

impl ProjectorSpec {
    /// Trace, which is the rank of the projector.
    pub fn trace(&self, dims: DesignDims) -> usize {
        self.slots.iter().zip(dims.shape()).map(|(s, n)| s.trace(n)).product()
    }

    /// `M y` for a row-major `(h, i, j, k)` vector.
    pub fn apply(&self, dims: DesignDims, y: &[f64]) -> Vec<f64> {
        let mut out = y.to_vec();
        let shape = dims.shape();
        for axis in 0..4 {
            let slot = self.slots[axis];
            if slot == Slot::Identity {
                continue;
            }
            let n = shape[axis];
            let stride: usize = shape[axis + 1..].iter().product();
            let outer: usize = shape[..axis].iter().product();
            for o in 0..outer {
                for s in 0..stride {
                    let base = o * n * stride + s;
                    let mean = (0..n).map(|l| out[base + l * stride]).sum::<f64>() / n as f64;
                    for l in 0..n {
                        let v = &mut out[base + l * stride];
                        *v = match slot {
                            Slot::Center => *v - mean,
                            _ => mean,
                        };
                    }
                }
            }
        }
        out
    }

    /// The full `(rabc)²` matrix. Verification helper for small designs.
    pub fn matrix(&self, dims: DesignDims) -> DenseMatrix {
        let shape = dims.shape();
        (1..4).fold(self.slots[0].matrix(shape[0]), |acc, axis| acc.kron(&self.slots[axis].matrix(shape[axis])))
    }
}

/// Kronecker projector whose quadratic form is the source's sum of squares.
///
/// Axes indexed by the source are centered and the rest averaged, except for
/// the residual `eT`, which is `(I−J/r) ⊗ I ⊗ I ⊗ (I−J/c)`: it pools the
/// block×C, block×A×C, block×B×C and block×A×B×C strata and has rank
/// `ab(c−1)(r−1)`.
pub fn projector(source: SourceId) -> ProjectorSpec {
    use Slot::{Average as Av, Center as Ce, Identity as Id};
    let slots = match source {
        SourceId::ET => [Ce, Id, Id, Ce],
        _ => {
            let axes = source.axes();
            Axis::ALL.map(|a| if axes.contains(a) { Ce } else { Av })
        }
    };
    ProjectorSpec { slots }
}

const H: u8 = 1;
const I: u8 = 2;
const J: u8 = 4;
const K: u8 = 8;

/// Signed marginal means whose sum, squared and summed over the source's
/// indices, gives its sum of squares. The first entry carries the summation
/// indices.
fn mean_terms(source: SourceId) -> &'static [(i8, u8)] {
    match source {
        SourceId::R => &[(1, H), (-1, 0)],
        SourceId::A => &[(1, I), (-1, 0)],
        SourceId::EA => &[(1, H | I), (-1, H), (-1, I), (1, 0)],
        SourceId::B => &[(1, J), (-1, 0)],
        SourceId::EB => &[(1, H | J), (-1, H), (-1, J), (1, 0)],
        SourceId::AB => &[(1, I | J), (-1, I), (-1, J), (1, 0)],
        SourceId::EAB => &[(1, H | I | J), (-1, H | I), (-1, H | J), (-1, I | J), (1, H), (1, I), (1, J), (-1, 0)],
        SourceId::C => &[(1, K), (-1, 0)],
        SourceId::AC => &[(1, I | K), (-1, I), (-1, K), (1, 0)],
        SourceId::BC => &[(1, J | K), (-1, J), (-1, K), (1, 0)],
        SourceId::ABC => &[(1, I | J | K), (-1, I | K), (-1, J | K), (1, K), (-1, I | J), (1, I), (1, J), (-1, 0)],
        SourceId::ET => &[(1, H | I | J | K), (-1, I | J | K), (-1, H | I | J), (1, I | J)],
    }
}

fn ss_from_margins(dims: DesignDims, margins: &Margins, source: SourceId) -> f64 {
    let terms = mean_terms(source);
    let summed = AxisSet(terms[0].1);
    let multiplier = dims.product(summed.complement()) as f64;
    let mut total = 0.0;
    for off in 0..dims.n_cells() {
        let idx = dims.unravel(off);
        // visit each combination of the summed indices once
        if Axis::ALL.iter().any(|&a| !summed.contains(a) && idx[a.position()] != 0) {
            continue;
        }
        let dev: f64 = terms.iter().map(|&(sign, kept)| f64::from(sign) * margins.mean(AxisSet(kept), idx)).sum();
        total += dev * dev;
    }
    multiplier * total
}

/// Sum of squares from the marginal-mean formulas.
pub fn ss_direct(layout: &BalancedLayout, source: SourceId) -> f64 {
    ss_from_margins(layout.dims(), &Margins::new(layout), source)
}

/// Sum of squares as the quadratic form of the source's Kronecker projector.
pub fn ss_kronecker(layout: &BalancedLayout, source: SourceId) -> f64 {
    // M is symmetric idempotent, so y'My = |My|².
    projector(source).apply(layout.dims(), layout.values()).iter().map(|v| v * v).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnovaRow {
    pub source: SourceId,
    pub df: usize,
    pub ss: f64,
    pub ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnovaTable {
    #[serde(skip)]
    pub dims: DesignDims,
    pub rows: Vec<AnovaRow>,
}

impl AnovaTable {
    /// Builds a table from externally supplied mean squares (e.g. a published
    /// table); `ss = ms · df`.
    pub fn from_mean_squares(dims: DesignDims, ms: [f64; 12]) -> Self {
        let rows = SourceId::ALL
            .into_iter()
            .zip(ms)
            .map(|(source, ms)| {
                let df = degrees_of_freedom(dims, source);
                AnovaRow { source, df, ss: ms * df as f64, ms }
            })
            .collect();
        AnovaTable { dims, rows }
    }

    pub fn row(&self, source: SourceId) -> &AnovaRow {
        &self.rows[source as usize]
    }

    pub fn ms(&self, source: SourceId) -> f64 {
        self.row(source).ms
    }

    pub fn total_ss(&self) -> f64 {
        self.rows.iter().map(|r| r.ss).sum()
    }

    pub fn total_df(&self) -> usize {
        self.rows.iter().map(|r| r.df).sum()
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{:<8}{:>6}{:>16}{:>14}\n", "Source", "df", "SS", "MS");
        for row in &self.rows {
            let _ = writeln!(s, "{:<8}{:>6}{:>16.4}{:>14.4}", row.source.label(), row.df, row.ss, row.ms);
        }
        let _ = writeln!(s, "{:<8}{:>6}{:>16.4}", "Total", self.total_df(), self.total_ss());
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("source,df,ss,ms\n");
        for row in &self.rows {
            let _ = writeln!(s, "{},{},{},{}", row.source.label(), row.df, row.ss, row.ms);
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.rows).expect("rows are plain numbers and labels")
    }
}

/// Degrees of freedom, sums of squares and mean squares of all twelve sources.
pub fn anova_table(layout: &BalancedLayout) -> AnovaTable {
    let dims = layout.dims();
    let margins = Margins::new(layout);
    let rows = SourceId::ALL
        .into_iter()
        .map(|source| {
            let df = degrees_of_freedom(dims, source);
            let ss = ss_from_margins(dims, &margins, source);
            AnovaRow { source, df, ss, ms: ss / df as f64 }
        })
        .collect();
    AnovaTable { dims, rows }
}
