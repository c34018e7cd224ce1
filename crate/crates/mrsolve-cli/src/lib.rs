//! File formats, generators and commands behind the `mrsolve` binary.

pub mod commands;
pub mod gen;
pub mod instance_file;
pub mod result_file;
