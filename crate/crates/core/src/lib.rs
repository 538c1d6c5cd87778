//! Step-function models of the mixed-norm lattice `L_p(L_q)` on the unit square.
//!
//! * [`stepfn`]: exact step functions, the mixed norm and the fiber-norm map `N`.
//! * [`blpq`]: finite-dimensional `BL_pL_q` lattices, canonical atoms, extraction
//!   and quantization of embeddings.
//! * [`transport`]: lattice automorphisms built from piecewise-affine maps, and
//!   the pipeline that intertwines two embeddings of the same lattice.
//! * [`equimeasure`]: pushforward laws of `N`-profiles and moment functionals.
//! * [`counterexample`]: exact rational construction of two isometric
//!   sublattices that are not base-equimeasurable when `p / q` is an integer.

pub mod blpq;
pub mod counterexample;
pub mod equimeasure;
pub mod error;
pub mod random;
pub mod stepfn;
pub mod transport;

pub use error::{Error, Result};
pub use stepfn::{mixed_norm, n_map, NormParams, Partition1D, StepFunction1D, StepFunction2D};
