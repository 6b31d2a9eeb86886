pub mod atlas;
pub mod cli;
pub mod companion;
pub mod coords;
pub mod curve;
pub mod io;
pub mod numeric;
pub mod sample;
pub mod spectral;
pub mod symplectic;
