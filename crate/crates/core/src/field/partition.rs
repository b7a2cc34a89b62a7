use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ScalarGrid3D;
use crate::scalar::Real;

/// One leaf of the bisection tree: an inclusive sample-index box and its
/// physical bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub id: usize,
    pub index_lo: [usize; 3],
    pub index_hi: [usize; 3],
    pub bounds_min: [f64; 3],
    pub bounds_max: [f64; 3],
}

impl Block {
    /// Samples per axis, shared boundary planes included.
    pub fn extent(&self) -> [usize; 3] {
        [
            self.index_hi[0] - self.index_lo[0] + 1,
            self.index_hi[1] - self.index_lo[1] + 1,
            self.index_hi[2] - self.index_lo[2] + 1,
        ]
    }

    /// Cells per axis; the half-open ownership of the block.
    pub fn cells(&self) -> [usize; 3] {
        [
            self.index_hi[0] - self.index_lo[0],
            self.index_hi[1] - self.index_lo[1],
            self.index_hi[2] - self.index_lo[2],
        ]
    }

    /// Whether the sample belongs to this block's owned (non-shared) region.
    ///
    /// A block owns `lo..hi` on every axis, plus `hi` itself where `hi` is the
    /// last sample of the grid.
    pub fn owns(&self, idx: [usize; 3], grid_dims: [usize; 3]) -> bool {
        (0..3).all(|a| {
            let upper_ok = idx[a] < self.index_hi[a]
                || (idx[a] == self.index_hi[a] && idx[a] + 1 == grid_dims[a]);
            idx[a] >= self.index_lo[a] && upper_ok
        })
    }

    pub fn contains_index(&self, idx: [usize; 3]) -> bool {
        (0..3).all(|a| idx[a] >= self.index_lo[a] && idx[a] <= self.index_hi[a])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SplitNode {
    Leaf(usize),
    Split {
        axis: usize,
        /// Sample index of the plane shared by both children.
        plane_index: usize,
        /// Physical coordinate of that plane.
        plane: f64,
        low: Box<SplitNode>,
        high: Box<SplitNode>,
    },
}

/// Result of `levels` rounds of bisection with split axes cycling x, y, z.
///
/// Block ids encode the path through the tree: the split made at depth `d`
/// contributes bit `levels - 1 - d` (set for the high child). Siblings created
/// by the deepest split therefore differ only in bit 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockDecomposition {
    pub levels: u32,
    pub grid_dims: [usize; 3],
    pub domain_min: [f64; 3],
    pub domain_max: [f64; 3],
    pub blocks: Vec<Block>,
    pub tree: SplitNode,
}

impl BlockDecomposition {
    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn block(&self, id: usize) -> Option<&Block> {
        self.blocks.get(id).filter(|b| b.id == id)
    }

    /// Number of blocks along each axis, e.g. `[16, 8, 8]` for ten levels.
    pub fn arrangement(&self) -> [usize; 3] {
        let mut counts = [1usize; 3];
        for d in 0..self.levels as usize {
            counts[d % 3] *= 2;
        }
        counts
    }

    /// Block ids in front-to-back order as seen from `eye`.
    ///
    /// At every split the child on the eye's side of the plane comes first;
    /// an eye exactly on the plane visits the low child first.
    pub fn front_to_back(&self, eye: [f64; 3]) -> Vec<usize> {
        fn walk(node: &SplitNode, eye: [f64; 3], out: &mut Vec<usize>) {
            match node {
                SplitNode::Leaf(id) => out.push(*id),
                SplitNode::Split {
                    axis,
                    plane,
                    low,
                    high,
                    ..
                } => {
                    if eye[*axis] <= *plane {
                        walk(low, eye, out);
                        walk(high, eye, out);
                    } else {
                        walk(high, eye, out);
                        walk(low, eye, out);
                    }
                }
            }
        }
        let mut out = Vec::with_capacity(self.blocks.len());
        walk(&self.tree, eye, &mut out);
        out
    }
}

/// Splits the grid's sample-index range `levels` times, cycling the split axis
/// x, y, z. Each split halves the cell count (the low child gets the smaller
/// half when it is odd) and duplicates the boundary plane into both children.
pub fn partition<T: Real>(grid: &ScalarGrid3D<T>, levels: u32) -> Result<BlockDecomposition> {
    let dims = grid.dims();
    let dmin = crate::scalar::vec3_f64(grid.domain_min());
    let dmax = crate::scalar::vec3_f64(grid.domain_max());
    partition_dims(dims, dmin, dmax, levels)
}

/// Same as [`partition`] from lattice metadata alone.
pub fn partition_dims(
    dims: [usize; 3],
    domain_min: [f64; 3],
    domain_max: [f64; 3],
    levels: u32,
) -> Result<BlockDecomposition> {
    if levels > 30 {
        return Err(Error::Partition {
            dims,
            levels,
            reason: "too many levels".into(),
        });
    }
    let coord = |axis: usize, i: usize| {
        if i + 1 == dims[axis] {
            domain_max[axis]
        } else {
            domain_min[axis]
                + i as f64 * (domain_max[axis] - domain_min[axis]) / (dims[axis] - 1) as f64
        }
    };

    struct Ctx<'a> {
        levels: u32,
        dims: [usize; 3],
        coord: &'a dyn Fn(usize, usize) -> f64,
        blocks: Vec<Block>,
    }

    fn build(
        ctx: &mut Ctx<'_>,
        lo: [usize; 3],
        hi: [usize; 3],
        depth: u32,
        id: usize,
    ) -> Result<SplitNode> {
        if depth == ctx.levels {
            ctx.blocks.push(Block {
                id,
                index_lo: lo,
                index_hi: hi,
                bounds_min: [
                    (ctx.coord)(0, lo[0]),
                    (ctx.coord)(1, lo[1]),
                    (ctx.coord)(2, lo[2]),
                ],
                bounds_max: [
                    (ctx.coord)(0, hi[0]),
                    (ctx.coord)(1, hi[1]),
                    (ctx.coord)(2, hi[2]),
                ],
            });
            return Ok(SplitNode::Leaf(id));
        }
        let axis = depth as usize % 3;
        let cells = hi[axis] - lo[axis];
        if cells < 2 {
            return Err(Error::Partition {
                dims: ctx.dims,
                levels: ctx.levels,
                reason: format!("axis {axis} has only {cells} cell(s) left at depth {depth}"),
            });
        }
        let mid = lo[axis] + cells / 2;
        let bit = 1usize << (ctx.levels - 1 - depth);
        let mut low_hi = hi;
        low_hi[axis] = mid;
        let mut high_lo = lo;
        high_lo[axis] = mid;
        let low = build(ctx, lo, low_hi, depth + 1, id)?;
        let high = build(ctx, high_lo, hi, depth + 1, id | bit)?;
        Ok(SplitNode::Split {
            axis,
            plane_index: mid,
            plane: (ctx.coord)(axis, mid),
            low: Box::new(low),
            high: Box::new(high),
        })
    }

    let mut ctx = Ctx {
        levels,
        dims,
        coord: &coord,
        blocks: Vec::with_capacity(1 << levels),
    };
    let tree = build(
        &mut ctx,
        [0; 3],
        [dims[0] - 1, dims[1] - 1, dims[2] - 1],
        0,
        0,
    )?;
    let mut blocks = ctx.blocks;
    blocks.sort_by_key(|b| b.id);
    Ok(BlockDecomposition {
        levels,
        grid_dims: dims,
        domain_min,
        domain_max,
        blocks,
        tree,
    })
}
