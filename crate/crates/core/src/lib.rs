pub mod bits;
pub mod cli;
pub mod compile;
pub mod dataset;
pub mod forest;
pub mod formula;
pub mod labeler;
pub mod model;
pub mod planner;
