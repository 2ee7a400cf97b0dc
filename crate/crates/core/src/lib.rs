//! Periodically time-variant (PTV) linear systems in discrete time.
//!
//! A [`PeriodicKernel`] holds taps `h[i][j][p][m]`: output channel `i`, input
//! channel `j`, phase `p` in `0..K` and lag `m`. Output sample `n` is
//! `y_i[n] = sum_j sum_m h[i][j][(n + origin) mod K][m] * x_j[n - m]`.

pub mod compose;
pub mod continuous;
pub mod equiv;
mod error;
pub mod gen;
pub mod inverse;
pub mod io;
pub mod kernel;
pub mod signal;
pub mod spectrum;

pub use compose::{lcm_period, parallel, reduce_circuit, series, Block, Circuit, Node, ReduceOptions};
pub use continuous::{discretize, ContinuousSpec, DiscretizeOptions};
pub use equiv::{mimo_to_siso, siso_to_mimo, siso_to_square, square_to_siso};
pub use error::{PtvError, Result};
pub use inverse::{invert, InverseOptions, InverseReport};
pub use kernel::{BlockedMimo, PeriodicKernel};
pub use signal::Signal;
pub use spectrum::{hybrid_transform, HybridSpectrum};
