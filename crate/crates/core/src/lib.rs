//! Graph pooling operators expressed as select, reduce and connect stages,
//! together with the graphs, numerics and evaluation used to compare them.

pub mod eval;
pub mod graph;
pub mod linalg;
pub mod ops;
pub mod pooling;
pub mod registry;
pub mod trainable;
