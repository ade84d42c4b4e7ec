//! Reference precoder designs and channel estimators.

mod codebook;
mod estimate;
mod wmmse;

pub use codebook::{build_dft_codebook, dft_feedback, ura_bit_split, Codebook};
pub use estimate::ls_estimate;
pub use wmmse::{
    iwmmse, matched_filter_init, solve_precoders, swmmse, ChannelSampler, WmmseOutcome, MAX_BRACKET_DOUBLINGS,
};
