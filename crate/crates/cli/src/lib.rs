//! File-level commands, SVG rendering and the live session server behind
//! the `swarmshape` binary.

pub mod commands;
pub mod render;
pub mod serve;
