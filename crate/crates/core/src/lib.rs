pub mod acceptance;
pub mod error;
pub mod evolution;
pub mod invariants;
pub mod io;
pub mod lindblad;
pub mod model;
pub mod numerics;
pub mod presets;
pub mod sampling;
pub mod spectrum;
pub mod transport;

pub use error::{Error, Result};
