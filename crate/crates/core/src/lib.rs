//! Local discontinuous Galerkin (LDG) solvers for one-dimensional fully nonlinear
//! second order equations `F(u_xx, u_x, u, x) = 0` and `u_t + F(u_xx, u_x, u, x, t) = 0`
//! with Dirichlet boundary data.
//!
//! The discretization approximates one-sided first derivatives `q1, q2` and four
//! one-sided second derivatives `p1..p4`, and replaces `F` by a Lax-Friedrichs-like
//! numerical operator with a numerical moment `alpha (p1 - p2 - p3 + p4)`.

pub mod dgspace;
pub mod elliptic;
pub mod error;
pub mod fd_oracle;
pub mod ldg_ops;
pub mod linalg;
pub mod mesh;
pub mod numop;
pub mod parabolic;
pub mod problems;
pub mod study;

pub use dgspace::{DGFunction, DGSpace, ErrorNorms, Side};
pub use error::{Error, Result};
pub use ldg_ops::{BoundaryData, LDGSystem};
pub use mesh::Mesh;
