//! Membership-inference risk (distance to the closest synthetic record) and
//! attribute-inference risk (1-NN recovery of hidden codes).

mod air;
mod mir;
mod nn;

pub use air::{
    air, air_with_hidden, select_hidden_codes, AirOptions, AirResult, CodeF1, HiddenGroup,
    ImbalancedRule,
};
pub use mir::{mir, mir_with_bins, Histogram, MirResult, DEFAULT_HIST_BINS};
pub use nn::NearestNeighbour;
