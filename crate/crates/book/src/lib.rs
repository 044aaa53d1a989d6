//! The guide in `book/src`, compiled so that `cargo test --doc` runs every
//! code block in it. One module per chapter keeps failures attributable.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/tukey.md")]
pub mod tukey {}
#[doc = include_str!("../../../book/src/monte_carlo.md")]
pub mod monte_carlo {}
#[doc = include_str!("../../../book/src/rescaling.md")]
pub mod rescaling {}
#[doc = include_str!("../../../book/src/rankability.md")]
pub mod rankability {}
#[doc = include_str!("../../../book/src/simulation.md")]
pub mod simulation {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
#[doc = include_str!("../../../README.md")]
pub mod readme {}
