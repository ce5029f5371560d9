//! Correlation-induced spin-orbit order in a three-orbital (s, p_x, p_y) chain.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`] – parameters, band dispersions, Fermi occupations.
//! * [`quadrature`] – periodic Brillouin-zone trapezoid with doubling checks.
//! * [`channels`] – electron-hole pairing operators, Clebsch-Gordan projection
//!   and symmetry signatures.
//! * [`bubble`], [`vertex`], [`flow`] – the one-loop renormalization group flow
//!   of the local four-point vertex.
//! * [`susceptibility`] – channel-resolved susceptibilities, the RPA closed
//!   form and temperature sweeps.
//! * [`mean_field`] – Ginzburg-Landau coefficients, order parameter and the
//!   induced spin-orbit strength.
//! * [`coulomb`] – Monte Carlo estimates of U, J, J' from Wannier orbitals.

pub mod bubble;
pub mod channels;
pub mod coulomb;
pub mod flow;
pub mod mean_field;
pub mod model;
mod ode;
pub mod quadrature;
pub mod susceptibility;
pub mod vertex;

pub use bubble::{bubble, bubble_scale_derivative, cutoff_function, BubbleKind, BubbleTable};
pub use channels::{
    ChannelCombination, ChannelLabel, OrbitalTransform, Parity, Spin, Su2Class, SymmetrySignature,
    TrsClass,
};

pub use coulomb::{InteractionEstimate, MCEstimate, MonteCarloConfig, Orbital, WannierParams};
pub use flow::{
    initial_vertex, integrate_flow, CutoffState, FlowMode, FlowSettings, FlowTrajectory,
    Termination,
};

pub use mean_field::{GLCoefficients, OrderParameter, QuasiparticleSpectrum, ZeemanState};
pub use model::{dispersion, fermi_occupation, Band, ModelParams};
pub use quadrature::KGrid;
pub use susceptibility::{ChannelValue, SusceptibilityTensor, SweepResult, SweepRow};

pub use vertex::{VertexClass, VertexTensor};

/// Library version, recorded in run summaries.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Errors raised by the numerical routines.
///
/// Variants split into two families: domain errors (the input lies outside
/// the region where a quantity is defined) and numerical failures (the input
/// is valid but an algorithm did not meet its tolerance).
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{quantity} diverges: {reason}")]
    Divergence {
        quantity: &'static str,
        reason: String,
    },

    #[error(
        "momentum quadrature did not converge: estimate {estimate:e}, error {error:e} \
         (tolerance {tolerance:e}) with {n_points} points"
    )]
    Quadrature {
        estimate: f64,
        error: f64,
        tolerance: f64,
        n_points: usize,
    },

    #[error("vertex left its symmetry subspace: leakage {leakage:e} at l = {l}")]
    SymmetryLeakage { leakage: f64, l: f64 },

    #[error("step size underflow at l = {l}, lambda = {lambda:e}, max|V| = {max_vertex:e}")]
    StepUnderflow { l: f64, lambda: f64, max_vertex: f64 },

    #[error("channel identity violated: {0}")]
    ChannelSymmetry(String),

    #[error("monte carlo estimate not converged: relative error {rel_error:e} > {bound:e}")]
    MonteCarlo { rel_error: f64, bound: f64 },
}

impl Error {
    /// True for errors caused by inputs outside the domain of definition.
    pub fn is_domain(&self) -> bool {
        matches!(self, Error::InvalidParameter(_) | Error::Divergence { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
