//! Communication topology and combination matrices.

mod combination;
mod topology;

pub use combination::{
    check_combination_general, check_combination_spectrum, matrix_to_csv, metropolis,
    CombinationReport, CombinationSet, WhichMatrix,
};
pub use topology::{Topology, TopologyFile};
