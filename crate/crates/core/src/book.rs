//! Doc-test bindings for the guide in `book/`.
//!
//! Each item includes one chapter, so `cargo test --doc` compiles and runs
//! every Rust snippet the book shows. Only compiled when rustdoc collects
//! doc-tests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub struct Introduction;

#[doc = include_str!("../../../book/src/getting-started.md")]
pub struct GettingStarted;

#[doc = include_str!("../../../book/src/datasets.md")]
pub struct Datasets;

#[doc = include_str!("../../../book/src/conformal.md")]
pub struct Conformal;

#[doc = include_str!("../../../book/src/channel.md")]
pub struct Channel;

#[doc = include_str!("../../../book/src/bounds.md")]
pub struct Bounds;

#[doc = include_str!("../../../book/src/selection.md")]
pub struct Selection;

#[doc = include_str!("../../../book/src/evaluation.md")]
pub struct Evaluation;
