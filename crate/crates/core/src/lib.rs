pub mod cli;
pub mod dynamics;
pub mod error;
pub mod graph;
pub mod integrate;
pub mod precision;
pub mod response;
pub mod rng;
pub mod roots;
pub mod slowfast;
pub mod svg;
pub mod symmetry;
