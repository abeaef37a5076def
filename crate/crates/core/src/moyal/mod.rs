//! Star products, Moyal brackets, spectral propagators and classical-limit
//! diagnostics.

mod classical;
mod evolve;
mod star;
mod symbol;

pub use classical::{classical_limit_gap, ClassicalLimitReport};
pub use evolve::{evolve_even, evolve_odd, evolve_timestep_reference, even_time_derivative};
pub use star::{FieldMatrix, MoyalAlgebra};
pub use symbol::{Func, MatrixSymbol, Polynomial, Symbol};
