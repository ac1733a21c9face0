pub mod cli;
pub mod config;
pub mod corpus;
pub mod engine;
pub mod evaluator;
pub mod gate;
pub mod linker;
pub mod model;
pub mod oracle;
pub mod review;
