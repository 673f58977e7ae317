//! Identification of target and full laws in missing-data DAG models.
//!
//! The crate is organised bottom-up:
//!
//! - [`graph`]: DAGs and ADMGs, d-separation, latent projection, districts.
//! - [`mdag`]: missing-data DAGs, mechanism classes, structural witnesses,
//!   the model file format and a library of example models.
//! - [`expr`] and [`table`]: functionals of the observed law and the dense
//!   tables they evaluate to.
//! - [`kernel`]: kernels with fixing, marginalization and selection.
//! - [`id`]: the identification engine.
//! - [`oracle`]: sampling of discrete laws and numeric verification.

pub mod graph;
pub mod mdag;
pub mod table;
pub mod expr;
pub mod id;
pub mod oracle;
pub mod kernel;
