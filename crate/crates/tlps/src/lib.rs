//! Sojourn-time analysis of the Two-Level Processor Sharing (TLPS) queue.
//!
//! TLPS is an M/G/1 scheduling discipline with a service threshold `θ`. Jobs
//! whose attained service is below `θ` share the server equally (processor
//! sharing) at high priority; once a job has received exactly `θ` of service
//! its remainder moves to a low-priority queue, which is itself served PS but
//! only while the high-priority queue is empty. With decreasing-hazard-rate
//! job sizes this favours short jobs and can cut the mean sojourn time well
//! below plain PS.
//!
//! The crate models job sizes as hyper-exponential distributions (mixtures of
//! exponentials), for which everything is computable in closed or near-closed
//! form:
//!
//! * [`hyperexp`] — distributions, workloads and all θ-truncated statistics;
//! * [`expmix`] — exponential-mixture functions and the Φ₁/Φ₂ integral
//!   operators that drive the low-priority-queue analysis;
//! * [`linsolve`] — small dense Gaussian-elimination solver;
//! * [`analytic`] — the mean sojourn time T̄(θ) by four routes (two-phase
//!   closed form, N-phase linear system, operator series, upper bound) and
//!   the conditional sojourn time via a Volterra solve;
//! * [`threshold`] — threshold optimization, the two-phase approximation of
//!   the optimal θ, and gain/bound-gap curves;
//! * [`simulate`] — a discrete-event simulator of the same queue for
//!   end-to-end cross-validation.

pub mod analytic;
pub mod expmix;
pub mod hyperexp;
pub mod linsolve;
pub mod simulate;
pub mod threshold;

pub use analytic::{Method, SojournBreakdown, VolterraSolution};
pub use expmix::ExpMixture;
pub use hyperexp::{HyperExp, TlpsModel, TruncatedStats};
pub use simulate::{SimConfig, SimResult};
pub use threshold::{ThetaRule, ThresholdSearchResult, TwoPhaseFamily};
