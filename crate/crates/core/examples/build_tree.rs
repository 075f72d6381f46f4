//! Prints the quadtree built over an image of the given size.
//!
//! cargo run --example build_tree -- [width] [height] [min_node_size]

use zoomeye::geometry::build_tree;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<u32>());
    let w = args.next().transpose()?.unwrap_or(2000);
    let h = args.next().transpose()?.unwrap_or(1200);
    let min = args.next().transpose()?.unwrap_or(336);

    let tree = build_tree(w, h, min, 1.5)?;
    println!("{w}x{h}, min node {min}: {} nodes, depth {}", tree.len(), tree.depth());
    for n in tree.nodes() {
        let b = n.bbox;
        println!(
            "{:indent$}#{} d{} {}x{} at ({}, {}){}",
            "",
            n.id.0,
            n.depth,
            b.w,
            b.h,
            b.x,
            b.y,
            if n.is_leaf() { " leaf" } else { "" },
            indent = 2 * n.depth as usize
        );
    }
    Ok(())
}
