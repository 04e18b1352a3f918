//! Differential forms: spectral bases, pointwise exterior algebra, and the
//! first-order operators `d`, `d*` and `∇`.
//!
//! `d*` is assembled as `-Σ_k e_k ⌟ ∇_{e_k}`, the formal L2 adjoint of `d`;
//! the adjointness tests pin the sign.

pub mod basis;
pub mod field;
pub mod multi_index;
pub mod pointwise;

pub use basis::{build_basis, build_basis_any_degree, minimum_resolution, BasisLabel, Family, FormBasis, Phase};
pub use field::{
    associated_form, codifferential, covariant_derivative, exterior_d, hodge_star, l2_inner, metric_wedge, project,
    wedge, wedge_nodal, FormField, FormFieldRecord, NodalForm, NodalTensor,
};
