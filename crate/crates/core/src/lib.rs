pub mod error;
pub mod filterbank;
pub mod signal;
pub mod sparsity;
pub mod dpp;
pub mod scheduler;
pub mod pipeline;
pub mod synth;
