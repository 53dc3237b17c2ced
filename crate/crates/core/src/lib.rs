pub mod analysis;
pub mod basis;
pub mod channel;
pub mod cli;
pub mod error;
pub mod linalg;
pub mod process;
pub mod scenario;
pub mod state;
pub mod tomography;
