//! Structural input, coupling configuration and time-history output.

mod bdf;
mod config;
mod history;
mod model;

pub use bdf::{parse_real, parse_structural_model, write_structural_model};
pub use config::{
    parse_config, AeroModelKind, AirfoilSettings, CouplingConfig, MotionSignal, Predictor, PressureSettings,
    SimulationMode, SurfaceSpec, TransferMode, WagnerCoefficients,
};
pub use history::{
    format_history, format_iteration_log, format_sci, history_header, parse_history, read_history, write_history,
    write_iteration_log, FsiIterationRecord, HistoryRecord,
};
pub use model::{DampingSpec, Node, StructuralModel, DOFS_PER_NODE};
