//! Factorial sensitivity experiments over topology, density, `e` and `c`.

mod anova;
mod design;
mod manifest;
mod run;
mod scenarios;

pub use anova::{variance_decomposition, Response, Term, VarianceTable, FACTOR_NAMES, LOGIT_CLAMP};
pub use design::{CFactor, Cell, DensityFactor, Design, EstimatorConfig, InitialState};
pub use manifest::Manifest;
pub use run::{rows_to_csv, run_factorial, ResultRow, RESULT_COLUMNS};
pub use scenarios::{
    comparisons_to_csv, ordering_summary, preset, relation_symbol, scenario_compare, scenario_presets, Comparison,
    Grouping, PRESET_NAMES,
};
