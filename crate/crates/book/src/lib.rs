//! Doc-tests for the guide chapters. Each chapter is a module so a failing
//! snippet points at its file.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/mesh.md")]
pub mod mesh {}
#[doc = include_str!("../../../book/src/spaces.md")]
pub mod spaces {}
#[doc = include_str!("../../../book/src/assembly.md")]
pub mod assembly {}
#[doc = include_str!("../../../book/src/reconstruction.md")]
pub mod reconstruction {}
#[doc = include_str!("../../../book/src/system.md")]
pub mod system {}
#[doc = include_str!("../../../book/src/verification.md")]
pub mod verification {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
#[doc = include_str!("../../../README.md")]
pub mod readme {}
