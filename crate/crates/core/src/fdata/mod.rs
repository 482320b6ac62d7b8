//! Functional data on a quadrature grid: containers, centering, FPC
//! decomposition, and projection between curves and score matrices.

mod fpc;
mod gram;
mod grid;
mod sample;

pub use fpc::{fpc, fpc_centering, project, reconstruct, truncate_by_ev, FpcBasis, ScoreMatrix};
pub use gram::{gram_factor, GramFactor};
pub use grid::{inner_product, make_grid, Grid, Quadrature};
pub use sample::{center, FunctionalSample};
