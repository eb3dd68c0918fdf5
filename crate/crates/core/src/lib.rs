pub mod decoupling;
pub mod dynamics;
pub mod error;
pub mod figures;
pub mod fit;
pub mod hilbert;
pub mod models;
pub mod sensing;
pub mod swtransform;
