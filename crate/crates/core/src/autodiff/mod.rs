//! Dense tensors, a recording tape with reverse-mode adjoints, and a
//! finite-difference gradient checker.

mod gradcheck;
mod params;
mod segments;
mod tape;
mod tensor;

pub use gradcheck::{grad_check, relative_error, GradCheckConfig, GradCheckReport, Mismatch};
pub use params::{ParamGrads, ParamId, ParameterSet};
pub use segments::Segments;
pub use tape::{GradMap, Tape, Var};
pub(crate) use tape::sigmoid;
pub use tensor::Tensor;
