//! Signed interaction graphs, switching signals and joint connectivity over time windows.

mod connectivity;
mod digraph;
mod signal;

pub use connectivity::{
    check_uniform_joint_connectivity, union_graph, ConnectivityMode, JointConnectivityReport,
    VerdictScope, WindowVerdict,
};
pub use digraph::{is_quasi_strongly_connected, is_strongly_connected, Arc, Sign, SignedDigraph};
pub use signal::{validate_switching_signal, Piece, Segment, SignalViolation, SwitchingSignal};
