//! Election polarization (EP) and election competitiveness (EC) from
//! disaggregated election results.
//!
//! Each candidate's antagonism splits into a *within* part (how unevenly its
//! vote is spread across units) and a *between* part (how close it runs to the
//! other candidates inside each unit). EP sums the within parts, EC the between
//! parts.

pub mod analysis;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod synth;

pub use analysis::{
    classify_swing, export_regression_table, mass_polarization, pearson, robustness_pairs, robustness_top_n,
    standardize, AnalysisError, RobustnessProtocol, RobustnessResult, SwingClass, SwingLabel,
};
pub use metrics::{
    between_antagonism, comparison_report, dispersion, dispersion_all, effective_number_of_candidates,
    esteban_ray, margin_of_victory, polarization_report, reynal_querol, within_antagonism, AntagonismReport,
    CandidateAntagonism, ComparisonReport, EstebanRayParams, EstebanRayResult, MetricsError,
};
pub use model::{
    build_matrix, build_matrix_with_candidates, validate, AggregationLevel, ElectionMatrix, LocationRecord,
    ModelError, PollingIdFormat, UnitKey, ValidationReport, VoteRecord,
};
pub use pipeline::{curate, reaggregate, read_locations, read_results, write_results, CurationConfig, PipelineError};
pub use synth::{sample_n_candidate, sample_three_candidate, sample_two_candidate, SynthError, SyntheticSpec};
