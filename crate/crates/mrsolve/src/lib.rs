//! Approximation algorithms for the movement repairmen problems.
//!
//! Repairmen and clients both move through a metric space at individual
//! speeds. `summr` minimizes total client latency through an LP over walk
//! classes and a derandomized rounding step, `maxmr` minimizes the largest
//! latency for equal-speed repairmen. The neighborhood prize-collecting
//! Steiner tree solvers in `npcst` double as the pricing oracle of the LP.
//! Brute-force solvers in `oracles` serve as ground truth on small inputs.

pub mod error;
pub mod frt;
pub mod graph;
pub mod lp;
pub mod maxmr;
pub mod model;
pub mod npcst;
pub mod num;
pub mod oracles;
pub mod summr;
pub mod treedp;

pub use error::{Error, Result};
