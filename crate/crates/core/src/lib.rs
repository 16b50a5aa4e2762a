pub mod cauchy;
mod dd;
pub mod error;
pub mod io;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod overlap;
pub mod solvers;
