//! Monte Carlo generation of strip-split layouts and audits of the expected
//! mean squares, the covariance structure and test sizes.
//!
//! Every random term draws one normal value per distinct combination of its
//! indices, independently (interactions are not constrained to sum to zero).
//! Fixed terms are user-supplied arrays that must sum to zero along each of
//! their axes. Replicate `i` of a run always uses the stream
//! `replicate_stream(seed, i)`, and results are reduced in replicate order,
//! so output does not depend on the number of worker threads.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::data::BalancedLayout;
use crate::design::{derived_effect_kind, Axis, AxisSet, DesignDims, EffectKind, ModelVariant, SourceId};
use crate::distributions::{replicate_stream, sample_normal};
use crate::ems::{ems, VarianceComponent};
use crate::error::{Error, Result};
use crate::f_tests::{evaluate, f_test_plan};
use crate::linalg::DenseMatrix;
use crate::sums_of_squares::anova_table;

/// Largest design whose covariance matrix is materialized.
pub const COVARIANCE_CELL_LIMIT: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct SimSpec {
    pub dims: DesignDims,
    pub model: ModelVariant,
    /// Variances of the random terms; missing entries are zero.
    pub sigmas: BTreeMap<VarianceComponent, f64>,
    /// Effects of fixed sources, row-major over the source's axes in
    /// A, B, C order; missing sources have zero effects.
    pub fixed_effects: BTreeMap<SourceId, Vec<f64>>,
    pub grand_mean: f64,
    pub n_reps: usize,
    pub seed: u64,
}

/// Components that are random under `model`, in source order. These are
/// exactly the terms of the model's covariance matrix.
pub fn random_components(model: ModelVariant) -> Vec<VarianceComponent> {
    SourceId::ALL
        .into_iter()
        .filter(|&s| derived_effect_kind(model, s) == EffectKind::Random)
        .map(VarianceComponent)
        .collect()
}

/// Sources that are fixed under `model`.
pub fn fixed_sources(model: ModelVariant) -> Vec<SourceId> {
    SourceId::ALL.into_iter().filter(|&s| derived_effect_kind(model, s) == EffectKind::Fixed).collect()
}

/// A centered effect array for `source`: the product over its axes of
/// (level − mean level), times `scale`.
pub fn default_effect_pattern(dims: DesignDims, source: SourceId, scale: f64) -> Vec<f64> {
    let axes: Vec<Axis> = source.axes().iter().collect();
    let len = dims.product(source.axes());
    (0..len)
        .map(|mut off| {
            let mut v = scale;
            for &axis in axes.iter().rev() {
                let n = dims.levels(axis);
                let l = off % n;
                off /= n;
                v *= l as f64 - (n as f64 - 1.0) / 2.0;
            }
            v
        })
        .collect()
}

// Position of a cell's projection onto `axes` in a row-major array over them.
fn sub_offset(dims: DesignDims, axes: AxisSet, idx: [usize; 4]) -> usize {
    axes.iter().fold(0, |off, axis| off * dims.levels(axis) + idx[axis.position()])
}

fn is_centered(dims: DesignDims, axes: AxisSet, values: &[f64]) -> bool {
    let scale = values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let tol = 1e-9 * scale * values.len() as f64;
    // every margin obtained by summing over one axis must vanish
    axes.iter().all(|summed| {
        let rest = AxisSet(axes.0 & !summed.bit());
        let mut sums = vec![0.0; dims.product(rest)];
        for (off, v) in values.iter().enumerate() {
            let idx = unravel_over(dims, axes, off);
            sums[sub_offset(dims, rest, idx)] += v;
        }
        sums.iter().all(|s| s.abs() <= tol)
    })
}

fn unravel_over(dims: DesignDims, axes: AxisSet, mut off: usize) -> [usize; 4] {
    let mut idx = [0; 4];
    let list: Vec<Axis> = axes.iter().collect();
    for &axis in list.iter().rev() {
        let n = dims.levels(axis);
        idx[axis.position()] = off % n;
        off /= n;
    }
    idx
}

impl SimSpec {
    /// A spec with every variance zero, no fixed effects, mean 0, one
    /// replicate and seed 0.
    pub fn new(dims: DesignDims, model: ModelVariant) -> Self {
        SimSpec {
            dims,
            model,
            sigmas: BTreeMap::new(),
            fixed_effects: BTreeMap::new(),
            grand_mean: 0.0,
            n_reps: 1,
            seed: 0,
        }
    }

    /// Sets every variance that applies to `model` to `value`.
    pub fn with_all_sigmas(mut self, value: f64) -> Self {
        self.sigmas = random_components(self.model).into_iter().map(|c| (c, value)).collect();
        self
    }

    /// Gives every fixed source the default centered pattern.
    pub fn with_default_effects(mut self, scale: f64) -> Self {
        self.fixed_effects =
            fixed_sources(self.model).into_iter().map(|s| (s, default_effect_pattern(self.dims, s, scale))).collect();
        self
    }

    pub fn with_reps(mut self, n_reps: usize, seed: u64) -> Self {
        self.n_reps = n_reps;
        self.seed = seed;
        self
    }

    pub fn sigma2(&self, component: VarianceComponent) -> f64 {
        self.sigmas.get(&component).copied().unwrap_or(0.0)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSimSpec(m));
        for (&c, &v) in &self.sigmas {
            if derived_effect_kind(self.model, c.source()) != EffectKind::Random {
                return bad(format!("{c} is not a random term under model {}", self.model));
            }
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{c} must be a nonnegative variance, got {v}"));
            }
        }
        for (&s, values) in &self.fixed_effects {
            if derived_effect_kind(self.model, s) != EffectKind::Fixed {
                return bad(format!("{s} is not fixed under model {}", self.model));
            }
            let expected = self.dims.product(s.axes());
            if values.len() != expected {
                return bad(format!("{s} needs {expected} effects, got {}", values.len()));
            }
            if values.iter().any(|v| !v.is_finite()) {
                return bad(format!("{s} effects must be finite"));
            }
            if !is_centered(self.dims, s.axes(), values) {
                return bad(format!("{s} effects must sum to zero along each of its axes"));
            }
        }
        if !self.grand_mean.is_finite() {
            return bad("grand mean must be finite".into());
        }
        if self.n_reps == 0 {
            return bad("at least one replicate is required".into());
        }
        Ok(())
    }

    /// The noise-free layout: grand mean plus fixed effects.
    pub fn mean_layout(&self) -> Result<BalancedLayout> {
        let mut values = vec![self.grand_mean; self.dims.n_cells()];
        for (&s, effects) in &self.fixed_effects {
            add_term(self.dims, s.axes(), effects, &mut values);
        }
        BalancedLayout::from_values(self.dims, values)
    }

    /// Fixed-effect quadratic term of `source`: its sum of squares in the
    /// noise-free layout over its df.
    pub fn q_values(&self) -> Result<BTreeMap<SourceId, f64>> {
        let table = anova_table(&self.mean_layout()?);
        Ok(fixed_sources(self.model).into_iter().map(|s| (s, table.ms(s))).collect())
    }
}

fn add_term(dims: DesignDims, axes: AxisSet, effects: &[f64], values: &mut [f64]) {
    for (off, y) in values.iter_mut().enumerate() {
        *y += effects[sub_offset(dims, axes, dims.unravel(off))];
    }
}

/// One simulated layout. Random terms are drawn in source order and, within
/// a term, in row-major order of its indices.
pub fn simulate_one<R: Rng + ?Sized>(spec: &SimSpec, stream: &mut R) -> Result<BalancedLayout> {
    spec.validate()?;
    Ok(simulate_unchecked(spec, stream))
}

fn simulate_unchecked<R: Rng + ?Sized>(spec: &SimSpec, stream: &mut R) -> BalancedLayout {
    let dims = spec.dims;
    let mut values = vec![spec.grand_mean; dims.n_cells()];
    for s in SourceId::ALL {
        let axes = s.axes();
        if let Some(effects) = spec.fixed_effects.get(&s) {
            add_term(dims, axes, effects, &mut values);
            continue;
        }
        let var = spec.sigma2(VarianceComponent(s));
        if var > 0.0 {
            let sd = var.sqrt();
            let draws: Vec<f64> = (0..dims.product(axes)).map(|_| sample_normal(0.0, sd, stream)).collect();
            add_term(dims, axes, &draws, &mut values);
        }
    }
    BalancedLayout::from_values(dims, values).expect("simulated values are finite")
}

/// Generates `spec.n_reps` layouts in replicate order.
pub fn simulate_replicates(spec: &SimSpec) -> Result<Vec<BalancedLayout>> {
    spec.validate()?;
    Ok((0..spec.n_reps)
        .into_par_iter()
        .map(|i| simulate_unchecked(spec, &mut replicate_stream(spec.seed, i as u64)))
        .collect())
}

/// Runs `f` on a pool of `workers` threads, or the global pool for `None`.
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidSimSpec(format!("cannot start {n} workers: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// The covariance matrix of the vectorized layout (row-major in block, A,
/// B, C): Σ σ²_c (K₁ ⊗ K₂ ⊗ K₃ ⊗ K₄) over the random components, with
/// K = I on the component's axes and J (all ones) elsewhere.
pub fn covariance_matrix(
    model: ModelVariant,
    dims: DesignDims,
    sigmas: &BTreeMap<VarianceComponent, f64>,
) -> Result<DenseMatrix> {
    let cells = dims.n_cells();
    if cells > COVARIANCE_CELL_LIMIT {
        return Err(Error::SizeGuardExceeded { cells, limit: COVARIANCE_CELL_LIMIT });
    }
    SimSpec { sigmas: sigmas.clone(), ..SimSpec::new(dims, model) }.validate()?;
    let mut v = DenseMatrix::zeros(cells);
    for c in random_components(model) {
        let s2 = sigmas.get(&c).copied().unwrap_or(0.0);
        if s2 == 0.0 {
            continue;
        }
        let term = Axis::ALL
            .iter()
            .map(|&axis| {
                let n = dims.levels(axis);
                if c.source().axes().contains(axis) {
                    DenseMatrix::identity(n)
                } else {
                    DenseMatrix::filled(n, 1.0)
                }
            })
            .reduce(|acc, k| acc.kron(&k))
            .expect("four axes");
        v.add_scaled(s2, &term);
    }
    Ok(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmsCheck {
    pub source: SourceId,
    pub mean_ms: f64,
    pub predicted: f64,
    /// Monte Carlo standard error of `mean_ms`.
    pub std_error: f64,
}

impl EmsCheck {
    /// |mean − predicted| in standard errors (0 when both agree exactly).
    pub fn z(&self) -> f64 {
        let d = (self.mean_ms - self.predicted).abs();
        if d == 0.0 {
            0.0
        } else {
            d / self.std_error
        }
    }
}

fn replicate_mean_squares(spec: &SimSpec) -> Vec<[f64; 12]> {
    (0..spec.n_reps)
        .into_par_iter()
        .map(|i| {
            let layout = simulate_unchecked(spec, &mut replicate_stream(spec.seed, i as u64));
            let table = anova_table(&layout);
            std::array::from_fn(|k| table.rows[k].ms)
        })
        .collect()
}

fn mean_and_se(xs: impl Iterator<Item = f64> + Clone, n: usize) -> (f64, f64) {
    let n_f = n as f64;
    let mean = xs.clone().sum::<f64>() / n_f;
    if n < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.map(|x| (x - mean).powi(2)).sum::<f64>() / (n_f - 1.0);
    (mean, (var / n_f).sqrt())
}

/// Averages each mean square over the replicates and compares it with the
/// expected mean square at the spec's variances and fixed effects.
pub fn verify_ems(spec: &SimSpec) -> Result<Vec<EmsCheck>> {
    spec.validate()?;
    let q = spec.q_values()?;
    let all = replicate_mean_squares(spec);
    Ok(SourceId::ALL
        .into_iter()
        .enumerate()
        .map(|(k, s)| {
            let (mean_ms, std_error) = mean_and_se(all.iter().map(|ms| ms[k]), all.len());
            let predicted = ems(spec.model, s).evaluate(
                spec.dims,
                |c| spec.sigma2(c),
                |owner| q.get(&owner).copied().unwrap_or(0.0),
            );
            EmsCheck { source: s, mean_ms, predicted, std_error }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RejectionRate {
    pub source: SourceId,
    pub rate: f64,
    /// Binomial standard error of `rate`.
    pub std_error: f64,
    /// Whether the spec makes this source's null hypothesis true.
    pub null_holds: bool,
    /// Whether the test is a ratio of two single mean squares.
    pub simple_ratio: bool,
}

/// Fraction of replicates in which each test rejects at `alpha`.
pub fn type1_error(spec: &SimSpec, alpha: f64) -> Result<Vec<RejectionRate>> {
    spec.validate()?;
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::InvalidSimSpec(format!("alpha must lie in [0, 1), got {alpha}")));
    }
    let plan = f_test_plan(spec.model);
    let q = spec.q_values()?;
    let rejections: Vec<Vec<bool>> = (0..spec.n_reps)
        .into_par_iter()
        .map(|i| {
            let layout = simulate_unchecked(spec, &mut replicate_stream(spec.seed, i as u64));
            let results = evaluate(&plan, &anova_table(&layout))?;
            Ok(results.iter().map(|r| r.p_value < alpha).collect())
        })
        .collect::<Result<_>>()?;
    let n = rejections.len() as f64;
    Ok(plan
        .iter()
        .enumerate()
        .map(|(k, test)| {
            let rate = rejections.iter().filter(|r| r[k]).count() as f64 / n;
            let null_holds = match derived_effect_kind(spec.model, test.source) {
                EffectKind::Random => spec.sigma2(VarianceComponent(test.source)) == 0.0,
                EffectKind::Fixed => q.get(&test.source).is_none_or(|&v| v.abs() < 1e-12),
            };
            RejectionRate {
                source: test.source,
                rate,
                std_error: (rate * (1.0 - rate) / n).sqrt(),
                null_holds,
                simple_ratio: test.is_simple(),
            }
        })
        .collect())
}
