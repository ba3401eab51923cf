//! Abelian sandpiles on Sierpinski gasket graphs.
//!
//! The crate is organised bottom-up:
//!
//! * [`gasket`] builds the level-`n` gasket graphs with normal or corner-sink
//!   boundary, their rotations and sub-copy embeddings.
//! * [`matrix`] and [`snf`] provide exact big-integer linear algebra
//!   (fraction-free determinants, Smith normal form, invariant factors).
//! * [`sandpile`] holds the toppling dynamics: stabilization with odometer,
//!   the group operation, the burning test, the identity and recurrent
//!   representatives of lattice classes.
//! * [`selfsim`] builds the recursive `M_n(x, y, z)` configurations, the
//!   closed-form identity and checks the toppling identities on instances.
//! * [`group`] computes sandpile-group invariants, spanning-tree counts and
//!   checks the sub-copy quotient isomorphism.
//! * [`spectral`] and [`markov`] cover characters, eigenvalues, exact
//!   distances and the sandpile Markov chain.
//! * [`render`] and [`io`] are the image and file formats.

pub mod gasket;
pub mod group;
pub mod io;
pub mod markov;
pub mod matrix;
pub mod render;
pub mod sandpile;
pub mod selfsim;
pub mod snf;
pub mod spectral;

mod error;

pub use error::{Error, Result};
pub use gasket::{BoundaryCondition, Corner, GasketCoord, GasketGraph};
pub use matrix::BigMatrix;
pub use sandpile::{Configuration, IntegerClassVector, Odometer};
pub use snf::{InvariantFactors, SmithDecomposition};
pub use spectral::RotationNumberFunction;
