//! Structured fermionic baths: densities of states, local Green's
//! functions, logarithmic discretization and Wilson chains.
//!
//! All operations here are pure functions of immutable inputs and safe to
//! call concurrently.

mod chain;
mod discretize;
mod dos;
mod greens;

pub use chain::{flat_band_hopping, wilson_chain, ChainPrecision, WilsonChain};
pub use discretize::{discretize_log, DiscreteBath, Discretization, Pole};
pub use dos::{DosFamily, DosSpec};
pub use greens::{
    default_frequency_grid, greens_from_dos, hybridization, one_minus_ddelta, re_g_direct,
    BathGreens, LocalGreensFunction,
};

/// Evaluate the density of states; see [`DosSpec::eval`].
pub fn dos_eval(spec: &DosSpec, w: f64) -> f64 {
    spec.eval(w)
}

#[derive(Debug, thiserror::Error)]
pub enum BathError {
    #[error("invalid bath specification: {0}")]
    InvalidSpec(String),
    #[error("frequency grid [{lo}, {hi}] must span at least [-{need}, {need}]")]
    GridTooNarrow { lo: f64, hi: f64, need: f64 },
    #[error("Green's function magnitude below 1e-12 at w = {w}; hybridization undefined")]
    SingularInversion { w: f64 },
    #[error("discretization precondition violated: {0}")]
    DiscretizePre(String),
    #[error(
        "Lanczos recursion lost orthogonality at site {site} in {mode} precision; \
         rerun with ChainPrecision::Wide or shorten the chain"
    )]
    ChainPrecisionLoss { site: usize, mode: &'static str },
    #[error("chain of {requested} sites exceeds the {poles}-pole Krylov space")]
    ChainTooLong { requested: usize, poles: usize },
}
