pub mod assumptions;
pub mod chain;
pub mod cli;
pub mod files;
pub mod ghz;
pub mod models;
pub mod montecarlo;
pub mod prob;
pub mod sorites;
pub mod strategies;
pub mod theorems;
