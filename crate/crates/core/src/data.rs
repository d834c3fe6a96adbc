//! Balanced strip-split plot datasets.
//!
//! A [`BalancedLayout`] holds exactly one response per (block, A, B, C) cell
//! in a dense array indexed `(h, i, j, k)` in row-major order. The CSV form
//! has a header `block,A,B,C,y` (any column order, case-insensitive) and one
//! row per cell. Level labels keep their order of first appearance.

use std::collections::HashMap;
use std::io::{Read, Write};

use crate::design::{Axis, AxisSet, DesignDims};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct BalancedLayout {
    dims: DesignDims,
    labels: [Vec<String>; 4],
    values: Vec<f64>,
}

const COLUMNS: [&str; 5] = ["block", "a", "b", "c", "y"];

impl BalancedLayout {
    /// Builds a layout from a row-major `(h, i, j, k)` value array with
    /// labels `1..=n` on every axis.
    pub fn from_values(dims: DesignDims, values: Vec<f64>) -> Result<Self> {
        if values.len() != dims.n_cells() {
            return Err(Error::ShapeMismatch { expected: dims.n_cells(), found: values.len() });
        }
        if let Some(off) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite response at cell {:?}", dims.unravel(off))));
        }
        let labels = dims.shape().map(|n| (1..=n).map(|l| l.to_string()).collect());
        Ok(BalancedLayout { dims, labels, values })
    }

    pub fn with_labels(mut self, labels: [Vec<String>; 4]) -> Result<Self> {
        for (axis, l) in Axis::ALL.into_iter().zip(&labels) {
            if l.len() != self.dims.levels(axis) {
                return Err(Error::ShapeMismatch { expected: self.dims.levels(axis), found: l.len() });
            }
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        Self::from_csv_reader(text.as_bytes())
    }

    /// Reads the `block,A,B,C,y` CSV format.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);

        let headers = rdr.headers().map_err(|e| csv_error(e, 1))?.clone();
        let mut column = [usize::MAX; 5];
        for (slot, name) in column.iter_mut().zip(COLUMNS) {
            *slot = headers
                .iter()
                .position(|h| h.eq_ignore_ascii_case(name))
                .ok_or_else(|| Error::Parse { line: 1, message: format!("missing column {name:?} in header") })?;
        }

        let mut labels: [Vec<String>; 4] = Default::default();
        let mut lookup: [HashMap<String, usize>; 4] = Default::default();
        let mut rows: Vec<([usize; 4], f64)> = Vec::new();

        for record in rdr.records() {
            let record = record.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line());
                csv_error(e, line)
            })?;
            let line = record.position().map_or(0, |p| p.line());
            let field = |col: usize| {
                record.get(column[col]).ok_or_else(|| Error::Parse { line, message: "too few fields".into() })
            };
            let mut idx = [0usize; 4];
            for axis in 0..4 {
                let label = field(axis)?;
                if label.is_empty() {
                    return Err(Error::Parse { line, message: format!("empty {} label", COLUMNS[axis]) });
                }
                let next = labels[axis].len();
                idx[axis] = *lookup[axis].entry(label.to_string()).or_insert_with(|| {
                    labels[axis].push(label.to_string());
                    next
                });
            }
            let raw = field(4)?;
            let y: f64 =
                raw.parse().map_err(|_| Error::Parse { line, message: format!("response {raw:?} is not a number") })?;
            if !y.is_finite() {
                return Err(Error::Parse { line, message: format!("response {raw:?} is not finite") });
            }
            rows.push((idx, y));
        }

        for (axis, l) in Axis::ALL.into_iter().zip(&labels) {
            if l.len() < 2 {
                return Err(Error::TooFewLevels { axis, found: l.len() });
            }
        }
        let dims = DesignDims::new(labels[0].len(), labels[1].len(), labels[2].len(), labels[3].len())?;

        let mut cells: Vec<Option<f64>> = vec![None; dims.n_cells()];
        for (idx, y) in rows {
            let cell = &mut cells[dims.offset(idx)];
            if cell.is_some() {
                return Err(Error::DuplicateCell(idx));
            }
            *cell = Some(y);
        }
        let values = cells
            .iter()
            .enumerate()
            .map(|(off, v)| v.ok_or_else(|| Error::MissingCell(dims.unravel(off))))
            .collect::<Result<Vec<f64>>>()?;

        Ok(BalancedLayout { dims, labels, values })
    }

    /// Writes the layout in the ingestion format, one row per cell in
    /// `(h, i, j, k)` order. Responses use the shortest representation that
    /// parses back to the same `f64`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "block,A,B,C,y")?;
        for (off, y) in self.values.iter().enumerate() {
            let [h, i, j, k] = self.dims.unravel(off);
            writeln!(
                out,
                "{},{},{},{},{}",
                self.labels[0][h], self.labels[1][i], self.labels[2][j], self.labels[3][k], y
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("labels and numbers are UTF-8")
    }

    pub fn dims(&self) -> DesignDims {
        self.dims
    }

    pub fn labels(&self, axis: Axis) -> &[String] {
        &self.labels[axis.position()]
    }

    /// Responses in row-major `(h, i, j, k)` order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, idx: [usize; 4]) -> f64 {
        self.values[self.dims.offset(idx)]
    }

    /// Mean over every axis whose entry in `at` is `None`; axes given as
    /// `Some(level)` are held at that level. All `None` gives the grand mean.
    pub fn marginal_mean(&self, at: [Option<usize>; 4]) -> Result<f64> {
        for (axis, slot) in Axis::ALL.into_iter().zip(at) {
            if let Some(index) = slot {
                let len = self.dims.levels(axis);
                if index >= len {
                    return Err(Error::IndexOutOfRange { axis, index, len });
                }
            }
        }
        let mut sum = 0.0;
        let mut n = 0usize;
        for (off, y) in self.values.iter().enumerate() {
            let idx = self.dims.unravel(off);
            if at.iter().zip(idx).all(|(slot, i)| slot.is_none_or(|s| s == i)) {
                sum += y;
                n += 1;
            }
        }
        Ok(sum / n as f64)
    }

    pub fn grand_mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Σ (y − ȳ....)², the total corrected sum of squares.
    pub fn total_ss(&self) -> f64 {
        let m = self.grand_mean();
        self.values.iter().map(|y| (y - m) * (y - m)).sum()
    }

    /// A copy with every response mapped through `f`.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values: Vec<f64> = self.values.iter().map(|&y| f(y)).collect();
        Self::from_values(self.dims, values)?.with_labels(self.labels.clone())
    }
}

fn csv_error(e: csv::Error, line: u64) -> Error {
    Error::Parse { line, message: e.to_string() }
}

/// Every marginal-mean array of a layout, one per subset of kept axes.
///
/// `means[mask]` is indexed row-major over the kept axes in `(h, i, j, k)`
/// order.
pub(crate) struct Margins {
    dims: DesignDims,
    means: Vec<Vec<f64>>,
}

impl Margins {
    pub(crate) fn new(layout: &BalancedLayout) -> Self {
        let dims = layout.dims;
        let means = (0u8..16)
            .map(|mask| {
                let kept = AxisSet(mask);
                let mut sums = vec![0.0; dims.product(kept)];
                for (off, y) in layout.values.iter().enumerate() {
                    sums[Self::slot(dims, kept, dims.unravel(off))] += y;
                }
                let per = (dims.n_cells() / sums.len()) as f64;
                sums.iter_mut().for_each(|s| *s /= per);
                sums
            })
            .collect();
        Margins { dims, means }
    }

    fn slot(dims: DesignDims, kept: AxisSet, idx: [usize; 4]) -> usize {
        kept.iter().fold(0, |acc, axis| acc * dims.levels(axis) + idx[axis.position()])
    }

    /// Marginal mean over the axes outside `kept`, at the kept coordinates of `idx`.
    pub(crate) fn mean(&self, kept: AxisSet, idx: [usize; 4]) -> f64 {
        self.means[kept.0 as usize][Self::slot(self.dims, kept, idx)]
    }
}
