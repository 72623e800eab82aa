//! Density layouts that extremize the principal eigenvalue of a vibrating
//! plate, `Δ²u = λρu`, with hinged or clamped edges.
//!
//! [`mesh`] builds triangulations, [`fem`] and [`eig`] give `λ(ρ)`,
//! [`rearrange`] solves the linear subproblems over a class of equimeasurable
//! densities and [`optimize`] runs the outer iterations. [`oracle`] holds
//! brute-force and closed-form references.

pub mod eig;
pub mod error;
pub mod fem;
pub mod io;
pub mod mesh;
pub mod optimize;
pub mod oracle;
pub mod rearrange;
pub mod sparse;
