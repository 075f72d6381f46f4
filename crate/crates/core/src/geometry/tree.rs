use serde::{Deserialize, Serialize};

use super::BBox;
use crate::error::GeometryError;

/// Index of a node inside its [`ImageTree`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub usize);

impl std::fmt::Display for NodeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "n{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeNode {
    pub id: NodeId,
    pub bbox: BBox,
    pub depth: u32,
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
}

impl TreeNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

/// Multi-resolution decomposition of an image. Node ids are assigned in
/// breadth-first order, so the root is always `NodeId(0)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageTree {
    width: u32,
    height: u32,
    depth: u32,
    nodes: Vec<TreeNode>,
}

/// Splitting rule used by [`build_tree`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitPolicy {
    pub min_node_size: u32,
    pub aspect_threshold: f64,
}

/// Builds the image tree for a `width × height` image.
///
/// A node is split iff its longer side exceeds `min_node_size`. Elongated
/// nodes (`long/short ≥ aspect_threshold`) are halved along the long axis,
/// everything else is cut into a 2×2 grid. Remainder pixels go to the
/// trailing child along each axis. Children are ordered row-major.
pub fn build_tree(
    width: u32,
    height: u32,
    min_node_size: u32,
    aspect_threshold: f64,
) -> Result<ImageTree, GeometryError> {
    if width == 0 || height == 0 {
        return Err(GeometryError::EmptyBox {
            w: width,
            h: height,
        });
    }
    if min_node_size == 0 {
        return Err(GeometryError::InvalidSplit(
            "min_node_size must be at least 1".into(),
        ));
    }
    if !(aspect_threshold >= 1.0) {
        return Err(GeometryError::InvalidSplit(format!(
            "aspect_threshold must be >= 1, got {aspect_threshold}"
        )));
    }
    let policy = SplitPolicy {
        min_node_size,
        aspect_threshold,
    };

    let mut nodes = vec![TreeNode {
        id: NodeId(0),
        bbox: BBox {
            x: 0,
            y: 0,
            w: width,
            h: height,
        },
        depth: 0,
        parent: None,
        children: Vec::new(),
    }];
    let mut depth = 0;
    let mut cursor = 0;
    while cursor < nodes.len() {
        let parent = nodes[cursor].clone();
        for bbox in split(&parent.bbox, &policy) {
            let id = NodeId(nodes.len());
            nodes.push(TreeNode {
                id,
                bbox,
                depth: parent.depth + 1,
                parent: Some(parent.id),
                children: Vec::new(),
            });
            nodes[cursor].children.push(id);
            depth = depth.max(parent.depth + 1);
        }
        cursor += 1;
    }

    Ok(ImageTree {
        width,
        height,
        depth,
        nodes,
    })
}

fn halves(start: u32, len: u32) -> [(u32, u32); 2] {
    let first = len / 2;
    [(start, first), (start + first, len - first)]
}

fn split(b: &BBox, policy: &SplitPolicy) -> Vec<BBox> {
    let long = b.longer_side();
    if long <= policy.min_node_size {
        return Vec::new();
    }
    let short = b.w.min(b.h);
    let ratio = long as f64 / short as f64;
    // a 1-pixel side cannot be halved, so fall back to the axis split
    let axis_split = ratio >= policy.aspect_threshold || short < 2;
    if axis_split {
        if b.w >= b.h {
            halves(b.x, b.w)
                .iter()
                .map(|&(x, w)| BBox { x, y: b.y, w, h: b.h })
                .collect()
        } else {
            halves(b.y, b.h)
                .iter()
                .map(|&(y, h)| BBox { x: b.x, y, w: b.w, h })
                .collect()
        }
    } else {
        let mut out = Vec::with_capacity(4);
        for (y, h) in halves(b.y, b.h) {
            for (x, w) in halves(b.x, b.w) {
                out.push(BBox { x, y, w, h });
            }
        }
        out
    }
}

impl ImageTree {
    pub fn root(&self) -> &TreeNode {
        &self.nodes[0]
    }

    /// Maximum node depth `D`.
    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: NodeId) -> &TreeNode {
        &self.nodes[id.0]
    }

    pub fn get(&self, id: NodeId) -> Option<&TreeNode> {
        self.nodes.get(id.0)
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn children(&self, id: NodeId) -> impl Iterator<Item = &TreeNode> {
        self.nodes[id.0].children.iter().map(|c| &self.nodes[c.0])
    }

    pub fn leaves(&self) -> impl Iterator<Item = &TreeNode> {
        self.nodes.iter().filter(|n| n.is_leaf())
    }
}
