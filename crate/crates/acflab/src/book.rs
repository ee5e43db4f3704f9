//! The user-guide chapters from `book/`, attached as module docs so that
//! every code snippet in the book compiles and runs as a doc-test
//! (`cargo test --doc`). The rendered guide is built separately with
//! `mdbook build book`.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/grids.md")]
pub mod grids {}

#[doc = include_str!("../../../book/src/solves.md")]
pub mod solves {}

#[doc = include_str!("../../../book/src/energies.md")]
pub mod energies {}

#[doc = include_str!("../../../book/src/gradient.md")]
pub mod gradient {}

#[doc = include_str!("../../../book/src/cones.md")]
pub mod cones {}

#[doc = include_str!("../../../book/src/experiments.md")]
pub mod experiments {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
