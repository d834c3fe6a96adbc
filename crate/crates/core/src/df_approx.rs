//! Approximate degrees of freedom for linear combinations of mean squares.
//!
//! [`satterthwaite`] handles any number of mean squares. The Ames–Webster
//! family [`aw_f`] handles exactly two and takes a tuning constant `r`; the
//! recommended constant is [`aw_rstar`]. Because the two mean squares can be
//! taken in either order there are two Ames–Webster estimates per pair;
//! [`aw_pair`] computes both and picks one.

use serde::Serialize;

use crate::error::{Error, Result};

/// A mean square together with its exact degrees of freedom.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MsPoint {
    pub ms: f64,
    pub df: usize,
}

impl MsPoint {
    pub fn new(ms: f64, df: usize) -> Result<Self> {
        if !(ms.is_finite() && ms > 0.0) {
            return Err(Error::Domain(format!("mean square must be positive and finite, got {ms}")));
        }
        if df == 0 {
            return Err(Error::Domain("degrees of freedom must be at least 1".into()));
        }
        Ok(MsPoint { ms, df })
    }
}

/// Satterthwaite's estimate (Σ MSᵢ)² / Σ (MSᵢ² / nᵢ).
///
/// Zero mean squares are allowed as long as at least one is positive.
pub fn satterthwaite(points: &[MsPoint]) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::EmptyList);
    }
    if let Some(p) = points.iter().find(|p| !(p.ms.is_finite() && p.ms >= 0.0) || p.df == 0) {
        return Err(Error::Domain(format!("invalid mean square point {p:?}")));
    }
    // A single nonzero term carries its own df; the general formula would
    // only recover it up to rounding.
    let mut positive = points.iter().filter(|p| p.ms > 0.0);
    if let (Some(p), None) = (positive.next(), positive.next()) {
        return Ok(p.df as f64);
    }
    let total: f64 = points.iter().map(|p| p.ms).sum();
    let denom: f64 = points.iter().map(|p| p.ms * p.ms / p.df as f64).sum();
    if denom <= 0.0 {
        return Err(Error::Domain("all mean squares are zero".into()));
    }
    Ok(total * total / denom)
}

/// The tuning constant minimizing the mean squared error of 1/φ̂₂, where
/// `n1` is the df of the first mean square and `n2` of the second.
pub fn aw_rstar(n1: usize, n2: usize) -> Result<f64> {
    if n1 == 0 || n2 <= 4 {
        return Err(Error::Domain(format!("r* needs n1 >= 1 and n2 >= 5, got ({n1}, {n2})")));
    }
    let (n1, n2) = (n1 as f64, n2 as f64);
    Ok(n2 / (n2 - 2.0) * (2.0 * (n1 + n2 - 2.0) / (n1 * (n2 - 4.0)) + 1.0))
}

/// Ames–Webster estimate (1 + φ̂)² / (1/n₁ + φ̂²/n₂) with φ̂ = r·MS₂/MS₁.
pub fn aw_f(ms1: MsPoint, ms2: MsPoint, r: f64) -> f64 {
    let phi = r * ms2.ms / ms1.ms;
    (1.0 + phi).powi(2) / (1.0 / ms1.df as f64 + phi * phi / ms2.df as f64)
}

/// Which point of a pair played the role of MS₁.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PairOrdering {
    /// The first point is MS₁.
    Forward,
    /// The second point is MS₁.
    Reverse,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AwEstimate {
    pub r_used: f64,
    pub f_hat: f64,
    pub ordering: PairOrdering,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AwSelection {
    Forward,
    Reverse,
    SatterthwaiteFallback,
}

/// Both Ames–Webster orderings of a pair, Satterthwaite's value and the
/// selected estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AwPair {
    /// `None` when r* is undefined for this ordering.
    pub forward: Option<AwEstimate>,
    pub reverse: Option<AwEstimate>,
    pub satterthwaite: f64,
    pub selection: AwSelection,
}

impl AwPair {
    pub fn selected(&self) -> Option<AwEstimate> {
        match self.selection {
            AwSelection::Forward => self.forward,
            AwSelection::Reverse => self.reverse,
            AwSelection::SatterthwaiteFallback => None,
        }
    }

    /// The df to use: the selected Ames–Webster estimate or Satterthwaite.
    pub fn selected_df(&self) -> f64 {
        self.selected().map_or(self.satterthwaite, |e| e.f_hat)
    }
}

fn estimate(ms1: MsPoint, ms2: MsPoint, ordering: PairOrdering) -> Option<AwEstimate> {
    let r = aw_rstar(ms1.df, ms2.df).ok()?;
    Some(AwEstimate { r_used: r, f_hat: aw_f(ms1, ms2, r), ordering })
}

/// Computes both orderings with their own r* and selects one.
///
/// If either r* is undefined, or either mean square is not positive, the
/// selection falls back to Satterthwaite. If both estimates are below f_s
/// the larger is used (the smaller tends to be biased low); if exactly one
/// is below f_s that one is used; otherwise the larger.
pub fn aw_pair(p: MsPoint, q: MsPoint) -> Result<AwPair> {
    let f_s = satterthwaite(&[p, q])?;
    let positive = p.ms > 0.0 && q.ms > 0.0;
    let forward = positive.then(|| estimate(p, q, PairOrdering::Forward)).flatten();
    let reverse = positive.then(|| estimate(q, p, PairOrdering::Reverse)).flatten();
    let selection = match (forward, reverse) {
        (Some(f), Some(r)) => {
            let larger = if r.f_hat > f.f_hat { AwSelection::Reverse } else { AwSelection::Forward };
            match (f.f_hat < f_s, r.f_hat < f_s) {
                (true, false) => AwSelection::Forward,
                (false, true) => AwSelection::Reverse,
                _ => larger,
            }
        }
        _ => AwSelection::SatterthwaiteFallback,
    };
    Ok(AwPair { forward, reverse, satterthwaite: f_s, selection })
}
