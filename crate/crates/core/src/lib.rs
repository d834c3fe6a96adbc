//! Exact ANOVA for the balanced strip-split plot design.
//!
//! Three treatment factors are laid out in strips and subplots inside random
//! blocks: factor `A` on horizontal strips, factor `B` on vertical strips and
//! factor `C` on the subplots of every strip intersection. Each of `A`, `B`
//! and `C` may be fixed or random, giving eight model variants. For each
//! variant the crate provides
//!
//! * the twelve-line sums-of-squares decomposition, computed two ways
//!   ([`ss_direct`] from marginal means, [`ss_kronecker`] from Kronecker
//!   projectors applied axis by axis),
//! * symbolic expected mean squares ([`ems::ems`]),
//! * the F-test plan and its evaluation with Satterthwaite and Ames–Webster
//!   approximate degrees of freedom ([`f_tests`], [`df_approx`]),
//! * a seeded, parallel Monte Carlo simulator that audits the EMS tables,
//!   the covariance structure and the size of every test ([`simulator`]),
//! * re-analyses of the same data as a three-way factorial and as a
//!   split-split plot ([`compare`]).
//!
//! ```
//! use strip_split::{BalancedLayout, anova_table, ModelVariant, f_tests};
//!
//! let csv = "block,A,B,C,y\n".to_string()
//!     + &(0..16)
//!         .map(|n| format!("{},{},{},{},{}\n", n >> 3, (n >> 2) & 1, (n >> 1) & 1, n & 1, n * n % 7))
//!         .collect::<String>();
//! let layout = BalancedLayout::from_csv_str(&csv).unwrap();
//! let table = anova_table(&layout);
//! let plan = f_tests::f_test_plan("FFF".parse::<ModelVariant>().unwrap());
//! let results = f_tests::evaluate(&plan, &table).unwrap();
//! assert_eq!(results.len(), 11);
//! ```

pub mod compare;
pub mod data;
pub mod design;
pub mod df_approx;
pub mod distributions;
pub mod ems;
mod error;
pub mod f_tests;
mod linalg;
pub mod simulator;
pub mod sums_of_squares;

pub use data::BalancedLayout;
pub use design::{degrees_of_freedom, derived_effect_kind, Axis, DesignDims, EffectKind, ModelVariant, SourceId};
pub use error::{Error, Result};
pub use linalg::DenseMatrix;
pub use sums_of_squares::{anova_table, projector, ss_direct, ss_kronecker, AnovaRow, AnovaTable, ProjectorSpec};
