//! Bounding boxes, image trees, and the pixel operations built on them.

mod bbox;
mod raster;
mod tree;

pub use bbox::{union_bbox, BBox};
pub use raster::{
    annotate_trace, assemble_answer_visual, crop_view, AnswerVisual, InputMode, ResizePolicy,
    SourceImage, View,
};
pub use tree::{build_tree, ImageTree, NodeId, SplitPolicy, TreeNode};
