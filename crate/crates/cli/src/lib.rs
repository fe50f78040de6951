//! File formats, report writers and the command-line front end for `georep-core`.

pub mod canon;
pub mod cli;
pub mod error;
pub mod formats;
pub mod maps;
pub mod meta;
pub mod simulate;
pub mod stats_out;
