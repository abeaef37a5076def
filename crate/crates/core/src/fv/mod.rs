//! Matrix mechanics of the Feshbach–Villars two-component representation.

mod hamiltonian;
mod operator;
mod parts;

pub use hamiltonian::{
    build_hamiltonian, gaussian_potential_operator, ladder_matrix, ladder_operator, longitudinal_position,
    momentum_operator, newton_wigner_position, position_kernel, position_operator, positive_levels, spectrum,
};
pub use operator::{BasisSpec, ChargeMetric, OperatorMatrix};
pub use parts::{
    charge_expectation, even_part, kernel_relation_check, odd_part, sign_operator, EnergyFrame, KernelReport,
};
