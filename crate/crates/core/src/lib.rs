//! Phase-space quantum mechanics of a spinless charged relativistic particle.
//!
//! The crate builds relativistic Wigner functions of two-component
//! (Feshbach–Villars) wavefunctions and evolves them with Moyal brackets.
//! Coherent states of a particle in a uniform magnetic field get their own
//! module. A dense matrix oracle ([`fv`]) backs every closed form used
//! elsewhere.

pub mod entangled;
pub mod error;
pub mod fv;
pub mod grid;
pub mod moyal;
pub mod rotator;
pub mod spectral;
pub mod states;
pub mod units;
pub mod wigner;

pub use error::{Error, Result};
pub use grid::{FourierPair, KernelSign, MomentumGrid, PhaseSpaceGrid};
pub use spectral::{EnergyModel, FieldKind};
pub use units::UnitSystem;

/// Book chapters, compiled and run as doctests.
#[cfg(doctest)]
mod book {
    macro_rules! chapter {
        ($name:ident, $file:literal) => {
            #[doc = include_str!(concat!("../../../book/src/", $file))]
            mod $name {}
        };
    }
    chapter!(introduction, "introduction.md");
    chapter!(factors, "factors.md");
    chapter!(wigner, "wigner.md");
    chapter!(evolution, "evolution.md");
    chapter!(matrix, "matrix.md");
    chapter!(rotator, "rotator.md");
    chapter!(pairs, "pairs.md");
    chapter!(cli, "cli.md");
}
