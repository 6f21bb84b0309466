pub mod config;
pub mod error;
pub mod fock;
pub mod io;
pub mod ion;
pub mod krylov;
pub mod lindblad;
pub mod lvc;
pub mod propagator;
pub mod resources;
pub mod series;
