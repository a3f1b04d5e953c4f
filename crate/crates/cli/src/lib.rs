//! Experiment harness for the Langevin multilevel estimators: experiment
//! files, method tags, suite execution and CSV output.

pub mod method;
pub mod output;
pub mod spec;
pub mod suite;
pub mod timing;

pub use method::{MethodSetup, MethodTag};
pub use spec::{ExperimentSpec, Problem};
pub use suite::{bias_sweep, calibration_table, exact_table, execute, mc_baseline, run_suite, SuiteOutput};
