pub mod cli;
pub mod config;
pub mod experiments;
pub mod output;
pub mod selftest;
pub mod sweep;
