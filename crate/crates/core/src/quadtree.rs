//! Density-driven quadtree split of an edge-difference bitmap and merging of
//! adjacent terminal blocks into candidate regions.

use serde::{Deserialize, Serialize};

use crate::edgemap::{edge_difference, BinaryEdgeFrame};
use crate::error::{Error, Result};
use crate::frame_io::Frame;

pub const DEFAULT_SPLIT_THRESHOLD: f64 = 0.001;
pub const DEFAULT_MIN_BLOCK: usize = 8;
pub const DEFAULT_DENSITY_TOL: f64 = 0.5;
pub const DEFAULT_DENSITY_FLOOR: f64 = 0.05;

/// Axis-aligned pixel rectangle, `x`/`y` at the top-left corner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl Rect {
    pub const fn new(x: usize, y: usize, w: usize, h: usize) -> Self {
        Rect { x, y, w, h }
    }

    pub fn area(&self) -> usize {
        self.w * self.h
    }

    pub fn right(&self) -> usize {
        self.x + self.w
    }

    pub fn bottom(&self) -> usize {
        self.y + self.h
    }

    pub fn fits_in(&self, width: usize, height: usize) -> bool {
        self.w >= 1 && self.h >= 1 && self.right() <= width && self.bottom() <= height
    }

    pub fn intersection(&self, other: &Rect) -> Option<Rect> {
        let x0 = self.x.max(other.x);
        let y0 = self.y.max(other.y);
        let x1 = self.right().min(other.right());
        let y1 = self.bottom().min(other.bottom());
        (x0 < x1 && y0 < y1).then(|| Rect::new(x0, y0, x1 - x0, y1 - y0))
    }

    /// Smallest rect containing both.
    pub fn union(&self, other: &Rect) -> Rect {
        let x0 = self.x.min(other.x);
        let y0 = self.y.min(other.y);
        let x1 = self.right().max(other.right());
        let y1 = self.bottom().max(other.bottom());
        Rect::new(x0, y0, x1 - x0, y1 - y0)
    }

    pub fn iou(&self, other: &Rect) -> f64 {
        let inter = self.intersection(other).map_or(0, |r| r.area());
        let union = self.area() + other.area() - inter;
        if union == 0 {
            0.0
        } else {
            inter as f64 / union as f64
        }
    }

    pub fn transpose(&self) -> Rect {
        Rect::new(self.y, self.x, self.h, self.w)
    }

    fn check(&self, width: usize, height: usize) -> Result<()> {
        if self.fits_in(width, height) {
            Ok(())
        } else {
            Err(Error::RectOutOfBounds {
                x: self.x,
                y: self.y,
                w: self.w,
                h: self.h,
                frame_w: width,
                frame_h: height,
            })
        }
    }
}

/// Summed-area table over an edge bitmap for O(1) block counts.
pub struct IntegralImage {
    width: usize,
    height: usize,
    sums: Vec<u32>,
}

impl IntegralImage {
    pub fn new(frame: &BinaryEdgeFrame) -> Self {
        let (w, h) = (frame.width, frame.height);
        let stride = w + 1;
        let mut sums = vec![0u32; stride * (h + 1)];
        for y in 0..h {
            let mut row = 0u32;
            for x in 0..w {
                row += u32::from(frame.bits[y * w + x] != 0);
                sums[(y + 1) * stride + x + 1] = sums[y * stride + x + 1] + row;
            }
        }
        IntegralImage {
            width: w,
            height: h,
            sums,
        }
    }

    /// Number of set bits in `rect`; the rect must lie inside the frame.
    pub fn count(&self, rect: &Rect) -> u32 {
        let s = self.width + 1;
        let (x0, y0, x1, y1) = (rect.x, rect.y, rect.right(), rect.bottom());
        self.sums[y1 * s + x1] + self.sums[y0 * s + x0] - self.sums[y0 * s + x1] - self.sums[y1 * s + x0]
    }
}

/// Fraction of set bits inside `rect`.
pub fn edge_density(frame: &BinaryEdgeFrame, rect: &Rect) -> Result<f64> {
    rect.check(frame.width, frame.height)?;
    let mut ones = 0usize;
    for y in rect.y..rect.bottom() {
        let row = &frame.bits[y * frame.width + rect.x..y * frame.width + rect.right()];
        ones += row.iter().filter(|&&b| b != 0).count();
    }
    Ok(ones as f64 / rect.area() as f64)
}

/// Node of the split tree. Terminal blocks have no children; the others have
/// exactly four that partition `rect`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadBlock {
    pub rect: Rect,
    pub ones: u32,
    pub density: f64,
    pub depth: u32,
    pub children: Vec<QuadBlock>,
}

impl QuadBlock {
    pub fn is_terminal(&self) -> bool {
        self.children.is_empty()
    }

    /// Terminal blocks in depth-first TL, TR, BL, BR order.
    pub fn leaves(&self) -> Vec<&QuadBlock> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(b) = stack.pop() {
            if b.is_terminal() {
                out.push(b);
            } else {
                stack.extend(b.children.iter().rev());
            }
        }
        out
    }

    /// Every node, pre-order.
    pub fn nodes(&self) -> Vec<&QuadBlock> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(b) = stack.pop() {
            out.push(b);
            stack.extend(b.children.iter().rev());
        }
        out
    }
}

fn split_block(ii: &IntegralImage, rect: Rect, depth: u32, threshold: f64, min_size: usize) -> QuadBlock {
    let ones = ii.count(&rect);
    let density = f64::from(ones) / rect.area() as f64;
    let mut block = QuadBlock {
        rect,
        ones,
        density,
        depth,
        children: Vec::new(),
    };
    if density > threshold && rect.w >= 2 * min_size && rect.h >= 2 * min_size {
        let (lw, rw) = (rect.w.div_ceil(2), rect.w / 2);
        let (th, bh) = (rect.h.div_ceil(2), rect.h / 2);
        let quads = [
            Rect::new(rect.x, rect.y, lw, th),
            Rect::new(rect.x + lw, rect.y, rw, th),
            Rect::new(rect.x, rect.y + th, lw, bh),
            Rect::new(rect.x + lw, rect.y + th, rw, bh),
        ];
        block.children = quads
            .into_iter()
            .map(|q| split_block(ii, q, depth + 1, threshold, min_size))
            .collect();
    }
    block
}

/// Recursively splits blocks whose edge density exceeds `threshold` while
/// both sides are at least `2 * min_size`. Odd sides split ceil/floor.
pub fn split(frame: &BinaryEdgeFrame, threshold: f64, min_size: usize) -> QuadBlock {
    let ii = IntegralImage::new(frame);
    split_with(&ii, threshold, min_size)
}

pub fn split_with(ii: &IntegralImage, threshold: f64, min_size: usize) -> QuadBlock {
    let root = Rect::new(0, 0, ii.width, ii.height);
    split_block(ii, root, 0, threshold, min_size.max(1))
}

/// Merged group of adjacent terminal blocks.
///
/// `bbox` covers the member blocks; `extent` is the bounding box of the set
/// pixels inside them (equal to `bbox` until [`fit_extents`] runs).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateRegion {
    pub bbox: Rect,
    pub extent: Rect,
    pub member_blocks: Vec<Rect>,
    pub mean_density: f64,
    pub pair_index: usize,
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        DisjointSet {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // keep the smaller index as root so labels are order-stable
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Groups terminal blocks into candidate regions.
///
/// Blocks with density at least `density_floor` are graph nodes; two nodes are
/// joined when the rectangles share a boundary segment and their densities
/// differ by at most `density_tol`. Each connected component becomes one
/// region. Regions come back sorted by bbox position.
pub fn merge(leaves: &[&QuadBlock], density_tol: f64, density_floor: f64, pair_index: usize) -> Vec<CandidateRegion> {
    let nodes: Vec<&QuadBlock> = leaves
        .iter()
        .copied()
        .filter(|b| b.density >= density_floor)
        .collect();
    if nodes.is_empty() {
        return Vec::new();
    }
    let width = nodes.iter().map(|b| b.rect.right()).max().unwrap_or(0);
    let height = nodes.iter().map(|b| b.rect.bottom()).max().unwrap_or(0);

    const NONE: u32 = u32::MAX;
    let mut labels = vec![NONE; width * height];
    for (id, b) in nodes.iter().enumerate() {
        let r = b.rect;
        for y in r.y..r.bottom() {
            labels[y * width + r.x..y * width + r.right()].fill(id as u32);
        }
    }

    let mut sets = DisjointSet::new(nodes.len());
    let join = |a: usize, other: u32, sets: &mut DisjointSet| {
        if other != NONE {
            let b = other as usize;
            if (nodes[a].density - nodes[b].density).abs() <= density_tol {
                sets.union(a, b);
            }
        }
    };
    for (id, b) in nodes.iter().enumerate() {
        let r = b.rect;
        if r.right() < width {
            for y in r.y..r.bottom() {
                join(id, labels[y * width + r.right()], &mut sets);
            }
        }
        if r.bottom() < height {
            let row = r.bottom() * width;
            for x in r.x..r.right() {
                join(id, labels[row + x], &mut sets);
            }
        }
    }

    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; nodes.len()];
    for id in 0..nodes.len() {
        let root = sets.find(id);
        if slot[root] == usize::MAX {
            slot[root] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[root]].push(id);
    }

    let mut regions: Vec<CandidateRegion> = groups
        .into_iter()
        .map(|members| {
            let mut bbox = nodes[members[0]].rect;
            let (mut ones, mut area) = (0u64, 0u64);
            for &m in &members {
                bbox = bbox.union(&nodes[m].rect);
                ones += u64::from(nodes[m].ones);
                area += nodes[m].rect.area() as u64;
            }
            CandidateRegion {
                bbox,
                extent: bbox,
                member_blocks: members.iter().map(|&m| nodes[m].rect).collect(),
                mean_density: ones as f64 / area as f64,
                pair_index,
            }
        })
        .collect();
    regions.sort_by_key(|r| (r.bbox.y, r.bbox.x, r.bbox.h, r.bbox.w));
    regions
}

/// Shrinks each region's `extent` to the set pixels of `frame` inside its
/// member blocks. Regions without any set pixel keep their block bbox.
pub fn fit_extents(regions: &mut [CandidateRegion], frame: &BinaryEdgeFrame) {
    for region in regions {
        let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0, 0);
        for block in &region.member_blocks {
            for y in block.y..block.bottom() {
                let row = &frame.bits[y * frame.width + block.x..y * frame.width + block.right()];
                for (x, &bit) in (block.x..).zip(row) {
                    if bit != 0 {
                        x0 = x0.min(x);
                        x1 = x1.max(x + 1);
                        y0 = y0.min(y);
                        y1 = y1.max(y + 1);
                    }
                }
            }
        }
        if x0 < x1 {
            region.extent = Rect::new(x0, y0, x1 - x0, y1 - y0);
        }
    }
}

/// Candidate region together with the pixels of the frame it was mapped onto.
#[derive(Debug, Clone)]
pub struct MappedRegion {
    pub region: CandidateRegion,
    pub crop: Frame,
}

/// Copies the grayscale content under the region's extent out of `original`.
pub fn map_to_frame(region: &CandidateRegion, original: &Frame) -> Result<MappedRegion> {
    let r = region.extent;
    r.check(original.width(), original.height())?;
    let mut pixels = Vec::with_capacity(r.area());
    for y in r.y..r.bottom() {
        let start = y * original.width() + r.x;
        pixels.extend_from_slice(&original.pixels()[start..start + r.w]);
    }
    Ok(MappedRegion {
        region: region.clone(),
        crop: Frame::new(original.index, r.w, r.h, pixels)?,
    })
}

/// Split and merge parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadParams {
    pub split_threshold: f64,
    pub min_block: usize,
    pub density_tol: f64,
    pub density_floor: f64,
}

impl Default for QuadParams {
    fn default() -> Self {
        QuadParams {
            split_threshold: DEFAULT_SPLIT_THRESHOLD,
            min_block: DEFAULT_MIN_BLOCK,
            density_tol: DEFAULT_DENSITY_TOL,
            density_floor: DEFAULT_DENSITY_FLOOR,
        }
    }
}

/// Result of localizing one frame pair.
#[derive(Debug, Clone)]
pub struct Localization {
    pub difference: BinaryEdgeFrame,
    pub tree: QuadBlock,
    pub regions: Vec<CandidateRegion>,
}

/// Edge difference, split and merge for the pair `(prev, next)`.
pub fn localize(
    prev: &BinaryEdgeFrame,
    next: &BinaryEdgeFrame,
    params: &QuadParams,
    pair_index: usize,
) -> Result<Localization> {
    let difference = edge_difference(prev, next)?;
    let tree = split(&difference, params.split_threshold, params.min_block);
    let mut regions = merge(&tree.leaves(), params.density_tol, params.density_floor, pair_index);
    fit_extents(&mut regions, &difference);
    Ok(Localization {
        difference,
        tree,
        regions,
    })
}

/// Gray rendering of the leaf grid: leaves shaded by density, borders white.
pub fn render_tree(tree: &QuadBlock) -> Vec<u8> {
    let (w, h) = (tree.rect.w, tree.rect.h);
    let mut out = vec![0u8; w * h];
    for leaf in tree.leaves() {
        let r = leaf.rect;
        let shade = (leaf.density * 200.0).round() as u8;
        for y in r.y..r.bottom() {
            for x in r.x..r.right() {
                let border = x == r.x || y == r.y || x + 1 == r.right() || y + 1 == r.bottom();
                out[y * w + x] = if border { 255 } else { shade };
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bits_from_fn(w: usize, h: usize, f: impl Fn(usize, usize) -> bool) -> BinaryEdgeFrame {
        let mut b = BinaryEdgeFrame::zeros(w, h);
        for y in 0..h {
            for x in 0..w {
                b.set(x, y, f(x, y));
            }
        }
        b
    }

    fn leaf(rect: Rect, density: f64) -> QuadBlock {
        QuadBlock {
            rect,
            ones: (density * rect.area() as f64).round() as u32,
            density,
            depth: 0,
            children: Vec::new(),
        }
    }

    #[test]
    fn density_examples() {
        let zeros = BinaryEdgeFrame::zeros(8, 8);
        assert_eq!(edge_density(&zeros, &Rect::new(0, 0, 8, 8)).unwrap(), 0.0);

        let half = bits_from_fn(4, 4, |x, _| x < 2);
        assert_eq!(edge_density(&half, &Rect::new(0, 0, 4, 4)).unwrap(), 0.5);
        assert_eq!(edge_density(&half, &Rect::new(1, 3, 1, 1)).unwrap(), 1.0);

        assert!(matches!(
            edge_density(&half, &Rect::new(2, 2, 3, 1)),
            Err(Error::RectOutOfBounds { .. })
        ));
    }

    #[test]
    fn integral_counts_match_direct_scan() {
        let b = bits_from_fn(13, 9, |x, y| (x * 7 + y * 3) % 5 == 0);
        let ii = IntegralImage::new(&b);
        for r in [Rect::new(0, 0, 13, 9), Rect::new(3, 2, 5, 4), Rect::new(12, 8, 1, 1)] {
            let direct = edge_density(&b, &r).unwrap() * r.area() as f64;
            assert_eq!(f64::from(ii.count(&r)), direct.round());
        }
    }

    #[test]
    fn empty_frame_is_single_leaf() {
        let tree = split(&BinaryEdgeFrame::zeros(64, 48), 0.05, 8);
        assert!(tree.is_terminal());
        assert_eq!(tree.leaves().len(), 1);
    }

    /// Plain recursive reference, written against edge_density directly.
    fn reference_leaves(b: &BinaryEdgeFrame, r: Rect, t: f64, min: usize, out: &mut Vec<Rect>) {
        let d = edge_density(b, &r).unwrap();
        if d > t && r.w >= 2 * min && r.h >= 2 * min {
            let lw = r.w - r.w / 2;
            let th = r.h - r.h / 2;
            reference_leaves(b, Rect::new(r.x, r.y, lw, th), t, min, out);
            reference_leaves(b, Rect::new(r.x + lw, r.y, r.w - lw, th), t, min, out);
            reference_leaves(b, Rect::new(r.x, r.y + th, lw, r.h - th), t, min, out);
            reference_leaves(b, Rect::new(r.x + lw, r.y + th, r.w - lw, r.h - th), t, min, out);
        } else {
            out.push(r);
        }
    }

    #[test]
    fn dense_quadrant_splits_to_floor() {
        let b = bits_from_fn(64, 64, |x, y| x < 32 && y < 32);
        let tree = split(&b, 0.1, 8);
        let leaves: Vec<Rect> = tree.leaves().iter().map(|l| l.rect).collect();
        let mut expected = Vec::new();
        reference_leaves(&b, Rect::new(0, 0, 64, 64), 0.1, 8, &mut expected);
        assert_eq!(leaves, expected);
        // 16 blocks of 8x8 in the dense quadrant plus 3 empty 32x32 quadrants
        assert_eq!(leaves.len(), 19);
        assert!(leaves.contains(&Rect::new(32, 0, 32, 32)));
        assert!(tree.leaves().iter().filter(|l| l.rect.w == 8).all(|l| l.density == 1.0));
    }

    #[test]
    fn size_floor_dominates() {
        let full = bits_from_fn(40, 30, |_, _| true);
        assert!(split(&full, 0.0, 30).is_terminal());
        assert!(split(&full, 0.0, 40).is_terminal());
    }

    #[test]
    fn merge_side_by_side() {
        let a = leaf(Rect::new(0, 0, 8, 8), 0.60);
        let b = leaf(Rect::new(8, 0, 8, 8), 0.62);
        let regions = merge(&[&a, &b], 0.1, 0.3, 0);
        assert_eq!(regions.len(), 1);
        assert_eq!(regions[0].bbox, Rect::new(0, 0, 16, 8));
        assert_eq!(regions[0].member_blocks.len(), 2);
    }

    #[test]
    fn merge_respects_tolerance_and_floor() {
        let a = leaf(Rect::new(0, 0, 8, 8), 0.9);
        let b = leaf(Rect::new(8, 0, 8, 8), 0.4);
        assert_eq!(merge(&[&a, &b], 0.1, 0.3, 0).len(), 2);
        assert_eq!(merge(&[&a, &b], 0.5, 0.3, 0).len(), 1);
        assert!(merge(&[&a, &b], 0.5, 0.95, 0).is_empty());
    }

    #[test]
    fn diagonal_contact_is_not_adjacency() {
        let a = leaf(Rect::new(0, 0, 8, 8), 0.6);
        let b = leaf(Rect::new(8, 8, 8, 8), 0.6);
        let filler1 = leaf(Rect::new(8, 0, 8, 8), 0.0);
        let filler2 = leaf(Rect::new(0, 8, 8, 8), 0.0);
        let regions = merge(&[&a, &filler1, &filler2, &b], 1.0, 0.3, 0);
        assert_eq!(regions.len(), 2);
    }

    #[test]
    fn merge_chains_transitively_and_sets_mean_density() {
        let a = leaf(Rect::new(0, 0, 4, 4), 0.5);
        let b = leaf(Rect::new(4, 0, 4, 4), 0.25);
        let c = leaf(Rect::new(8, 0, 4, 8), 0.5);
        let regions = merge(&[&a, &b, &c], 0.25, 0.1, 3);
        assert_eq!(regions.len(), 1);
        let r = &regions[0];
        assert_eq!(r.bbox, Rect::new(0, 0, 12, 8));
        assert_eq!(r.pair_index, 3);
        // (8 + 4 + 16) / (16 + 16 + 32)
        assert!((r.mean_density - 28.0 / 64.0).abs() < 1e-12);
    }

    #[test]
    fn extents_shrink_to_set_pixels() {
        let bits = bits_from_fn(32, 32, |x, y| (3..9).contains(&x) && (10..13).contains(&y));
        let tree = split(&bits, 0.0, 4);
        let mut regions = merge(&tree.leaves(), 1.0, 0.01, 0);
        assert_eq!(regions.len(), 1);
        assert_eq!(regions[0].extent, regions[0].bbox);
        fit_extents(&mut regions, &bits);
        assert_eq!(regions[0].extent, Rect::new(3, 10, 6, 3));
        assert!(regions[0].extent.intersection(&regions[0].bbox) == Some(regions[0].extent));
    }

    #[test]
    fn map_to_frame_copies_submatrix() {
        let px: Vec<u8> = (0..30 * 20).map(|i| (i % 251) as u8).collect();
        let frame = Frame::new(4, 30, 20, px).unwrap();
        let region = CandidateRegion {
            bbox: Rect::new(5, 5, 10, 10),
            extent: Rect::new(5, 5, 10, 10),
            member_blocks: vec![Rect::new(5, 5, 10, 10)],
            mean_density: 0.5,
            pair_index: 3,
        };
        let mapped = map_to_frame(&region, &frame).unwrap();
        assert_eq!((mapped.crop.width(), mapped.crop.height()), (10, 10));
        for y in 0..10 {
            for x in 0..10 {
                assert_eq!(mapped.crop.get(x, y), frame.get(x + 5, y + 5));
            }
        }

        let whole = CandidateRegion {
            extent: Rect::new(0, 0, 30, 20),
            ..region.clone()
        };
        assert_eq!(map_to_frame(&whole, &frame).unwrap().crop.pixels(), frame.pixels());

        let outside = CandidateRegion {
            extent: Rect::new(25, 5, 10, 10),
            ..region
        };
        assert!(matches!(
            map_to_frame(&outside, &frame),
            Err(Error::RectOutOfBounds { .. })
        ));
    }

    #[test]
    fn rect_iou() {
        let a = Rect::new(0, 0, 10, 10);
        assert_eq!(a.iou(&a), 1.0);
        assert_eq!(a.iou(&Rect::new(10, 0, 10, 10)), 0.0);
        // 50 / 150
        assert!((a.iou(&Rect::new(5, 0, 10, 10)) - 1.0 / 3.0).abs() < 1e-12);
    }

    fn random_bits() -> impl Strategy<Value = BinaryEdgeFrame> {
        (1usize..48, 1usize..48, 0.0f64..1.0, any::<u64>()).prop_map(|(w, h, p, seed)| {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut b = BinaryEdgeFrame::zeros(w, h);
            // clustered blobs so trees get some depth
            let cx = rng.gen_range(0..w);
            let cy = rng.gen_range(0..h);
            for y in 0..h {
                for x in 0..w {
                    let near = x.abs_diff(cx) < w / 3 + 1 && y.abs_diff(cy) < h / 3 + 1;
                    b.set(x, y, near && rng.gen_bool(p));
                }
            }
            b
        })
    }

    proptest! {
        #[test]
        fn leaves_tile_and_stop(b in random_bits(), t in 0.0f64..0.6, min in 1usize..9) {
            let tree = split(&b, t, min);
            let leaves = tree.leaves();
            let area: usize = leaves.iter().map(|l| l.rect.area()).sum();
            prop_assert_eq!(area, b.width * b.height);
            let mut cover = vec![0u8; b.width * b.height];
            for l in &leaves {
                for y in l.rect.y..l.rect.bottom() {
                    for x in l.rect.x..l.rect.right() {
                        cover[y * b.width + x] += 1;
                    }
                }
                prop_assert!(l.density <= t || l.rect.w < 2 * min || l.rect.h < 2 * min);
            }
            prop_assert!(cover.iter().all(|&c| c == 1));
            for n in tree.nodes() {
                if !n.is_terminal() {
                    prop_assert!(n.rect.w >= 2 * min && n.rect.h >= 2 * min);
                    prop_assert_eq!(n.children.len(), 4);
                }
            }
        }

        #[test]
        fn split_commutes_with_transpose(b in random_bits(), t in 0.0f64..0.6, min in 1usize..9) {
            let mut direct: Vec<Rect> = split(&b, t, min).leaves().iter().map(|l| l.rect.transpose()).collect();
            let mut transposed: Vec<Rect> = split(&b.transpose(), t, min).leaves().iter().map(|l| l.rect).collect();
            direct.sort();
            transposed.sort();
            prop_assert_eq!(direct, transposed);
        }

        #[test]
        fn merge_partitions_qualifying_leaves(b in random_bits(), tol in 0.0f64..1.0, floor in 0.0f64..0.8) {
            let tree = split(&b, 0.05, 2);
            let leaves = tree.leaves();
            let regions = merge(&leaves, tol, floor, 0);
            let mut seen = std::collections::HashSet::new();
            for r in &regions {
                let mut bbox = r.member_blocks[0];
                for m in &r.member_blocks {
                    prop_assert!(seen.insert(*m), "block in two regions");
                    let source = leaves.iter().find(|l| l.rect == *m).unwrap();
                    prop_assert!(source.density >= floor);
                    bbox = bbox.union(m);
                }
                prop_assert_eq!(bbox, r.bbox);
            }
        }
    }
}
