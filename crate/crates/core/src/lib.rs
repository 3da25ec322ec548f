//! Binary Hopfield networks with Hebbian learning, and the tools to study
//! prototype formation in them: representative vectors of correlated subsets,
//! closed-form stability predictions, synthetic datasets with known
//! representatives, probe census experiments, and brute-force oracles.

pub mod datagen;
pub mod error;
pub mod experiments;
pub mod io;
pub mod learning;
pub mod net;
pub mod oracle;
pub mod prototype;
pub mod rng;
pub mod state;
pub mod theory;

pub use error::{Error, Result};
pub use learning::{hebbian, hebbian_accumulate, TrainingSet};
pub use net::{relax, RelaxationResult};
pub use state::{BinaryState, WeightMatrix};
