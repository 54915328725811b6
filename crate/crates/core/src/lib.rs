//! Real-time gaze interaction: streaming fixation detection, dwell
//! activation, a gaze-contingent lens, saccade landing prediction, deictic
//! reference resolution and replayable multimodal traces.
//!
//! The guide in `book/` walks through each piece; its snippets run as
//! doctests.

// `!(x > 0.0)` is how validation rejects NaN along with the bad range
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod cli;
pub mod deictic;
pub mod dwell;
pub mod fixation;
pub mod geometry;
pub mod lens;
pub mod map;
pub mod pipeline;
pub mod saccade;
pub mod synth;
pub mod trace;
pub mod wire;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/geometry.md")]
    mod geometry {}
    #[doc = include_str!("../../../book/src/fixations.md")]
    mod fixations {}
    #[doc = include_str!("../../../book/src/dwell.md")]
    mod dwell {}
    #[doc = include_str!("../../../book/src/map.md")]
    mod map {}
    #[doc = include_str!("../../../book/src/lens.md")]
    mod lens {}
    #[doc = include_str!("../../../book/src/saccades.md")]
    mod saccades {}
    #[doc = include_str!("../../../book/src/deictic.md")]
    mod deictic {}
    #[doc = include_str!("../../../book/src/traces.md")]
    mod traces {}
    #[doc = include_str!("../../../book/src/synthetic.md")]
    mod synthetic {}
    #[doc = include_str!("../../../book/src/wire.md")]
    mod wire {}
}
