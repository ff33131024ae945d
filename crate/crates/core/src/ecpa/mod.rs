//! Equal (conditional) predictive ability testing on proxy-evaluated panels.

mod instruments;
mod panel;
mod wald;

pub use instruments::{
    build_instruments, instrument_presets_proxycheck, loss_differences, InstrumentKind,
    InstrumentMatrix, InstrumentSpec, PROXY_A, PROXY_B,
};
pub use panel::EvaluationPanel;
pub use wald::{ecpa_statistic, proxy_unbiasedness_test, EcpaResult};
