//! Simulator and protocol engine for multiparty quantum private equality
//! comparison over GHZ₃ triplets.

pub mod bitcore;
pub mod cli;
pub mod qsim;
pub mod rng;
pub mod stats;
pub mod adversary;
pub mod protocol;
pub mod report;
