//! Simulation framework for a vision-aided, rail-mounted gNB: E2 service
//! models and bus, a digital twin of the room, camera perception, the
//! controller xApp, and a small DQN trainer.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dqn;
pub mod geom;
pub mod harness;
pub mod perception;
pub mod sm;
pub mod twin;
pub mod units;
pub mod xapp;

/// Guide chapters, compiled as doc-tests.
#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/service-models.md")]
    mod service_models {}
    #[doc = include_str!("../../../book/src/twin.md")]
    mod twin {}
    #[doc = include_str!("../../../book/src/perception.md")]
    mod perception {}
    #[doc = include_str!("../../../book/src/xapp.md")]
    mod xapp {}
    #[doc = include_str!("../../../book/src/dqn.md")]
    mod dqn {}
    #[doc = include_str!("../../../book/src/harness.md")]
    mod harness {}
}
