pub mod cli;
pub mod gkp;
pub mod graph;
pub mod io;
pub mod mlr;
pub mod pin;
pub mod stats;
pub mod synth;
