//! The guide in `book/` is plain mdbook. Each chapter is attached to a module
//! here so that `cargo test --doc` compiles and runs its snippets.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/objective.md")]
pub mod objective {}
#[doc = include_str!("../../../book/src/data.md")]
pub mod data {}
#[doc = include_str!("../../../book/src/federation.md")]
pub mod federation {}
#[doc = include_str!("../../../book/src/diagnostics.md")]
pub mod diagnostics {}
#[doc = include_str!("../../../book/src/experiments.md")]
pub mod experiments {}
