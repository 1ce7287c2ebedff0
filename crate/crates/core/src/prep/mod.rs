//! Frame preprocessing and temporal assembly: landmark alignment,
//! photometric normalization, gap filling, feature timelines and windows.

mod align;
mod gaps;
mod normalize;
mod timeline;

pub use align::{align_face, fit_similarity, to_grayscale, warp_similarity, Point, Similarity, Template};
pub use gaps::{fill_gaps, fill_gaps_rows};
pub use normalize::normalize;
pub use timeline::{make_windows, run_frames, window_count, FeatureTimeline, FramePass, Window};
