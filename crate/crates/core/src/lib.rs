//! Primal-dual proximal bundle methods for `min f(x) + h(x)` and for
//! convex-concave saddle problems, with certificate checks and a sparse
//! matrix-game test family.

pub mod bundle;
pub mod cg;
pub mod error;
pub mod functions;
pub mod game;
pub mod oracle;
pub mod pdcp;
pub mod pdpb;
pub mod saddle;
pub mod vecops;

pub use error::{Error, Result};
