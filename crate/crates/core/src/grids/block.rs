//! Sparse voxel storage: a tile map of 8^3 blocks behind a dense block directory.
//!
//! Blocks are allocated on first write. Lookups go through a directory array
//! covering the bounding box of allocated blocks, so they cost a shift and two
//! indexed loads. Iteration follows directory order, which depends only on the
//! set of active voxels and never on insertion order.

pub type Coord = [i32; 3];

pub const BLOCK_LOG2: i32 = 3;
pub const BLOCK_DIM: i32 = 1 << BLOCK_LOG2;
pub const BLOCK_VOLUME: usize = (BLOCK_DIM * BLOCK_DIM * BLOCK_DIM) as usize;

const EMPTY: u32 = u32::MAX;

#[derive(Clone, Debug)]
struct Block<T> {
    coord: Coord,
    values: Box<[T]>,
    active: [u64; BLOCK_VOLUME / 64],
}

#[derive(Clone, Debug)]
pub struct BlockGrid<T> {
    background: T,
    blocks: Vec<Block<T>>,
    dir_lo: Coord,
    dir_dims: [i32; 3],
    dir: Vec<u32>,
    active: usize,
}

#[inline]
pub fn block_of(c: Coord) -> Coord {
    [c[0] >> BLOCK_LOG2, c[1] >> BLOCK_LOG2, c[2] >> BLOCK_LOG2]
}

#[inline]
fn local_offset(c: Coord) -> usize {
    let m = BLOCK_DIM - 1;
    (((c[2] & m) * BLOCK_DIM + (c[1] & m)) * BLOCK_DIM + (c[0] & m)) as usize
}

#[inline]
fn local_coord(block: Coord, offset: usize) -> Coord {
    let o = offset as i32;
    [
        block[0] * BLOCK_DIM + (o & (BLOCK_DIM - 1)),
        block[1] * BLOCK_DIM + ((o >> BLOCK_LOG2) & (BLOCK_DIM - 1)),
        block[2] * BLOCK_DIM + (o >> (2 * BLOCK_LOG2)),
    ]
}

impl<T: Copy> BlockGrid<T> {
    pub fn new(background: T) -> Self {
        Self {
            background,
            blocks: Vec::new(),
            dir_lo: [0; 3],
            dir_dims: [0; 3],
            dir: Vec::new(),
            active: 0,
        }
    }

    pub fn background(&self) -> T {
        self.background
    }

    pub fn active_count(&self) -> usize {
        self.active
    }

    pub fn is_empty(&self) -> bool {
        self.active == 0
    }

    #[inline]
    fn slot(&self, b: Coord) -> Option<usize> {
        let mut idx = 0usize;
        for a in (0..3).rev() {
            let r = b[a] - self.dir_lo[a];
            if r < 0 || r >= self.dir_dims[a] {
                return None;
            }
            idx = idx * self.dir_dims[a] as usize + r as usize;
        }
        Some(idx)
    }

    #[inline]
    fn block_index(&self, b: Coord) -> Option<usize> {
        let s = self.slot(b)?;
        let v = self.dir[s];
        (v != EMPTY).then_some(v as usize)
    }

    fn grow_directory(&mut self, b: Coord) {
        let (lo, hi) = if self.dir.is_empty() {
            (b, [b[0] + 1, b[1] + 1, b[2] + 1])
        } else {
            let mut lo = self.dir_lo;
            let mut hi = [0; 3];
            for a in 0..3 {
                hi[a] = self.dir_lo[a] + self.dir_dims[a];
                if b[a] < lo[a] {
                    // extra slack so repeated growth in one direction stays amortised
                    lo[a] = b[a] - self.dir_dims[a] / 2;
                }
                if b[a] >= hi[a] {
                    hi[a] = b[a] + 1 + self.dir_dims[a] / 2;
                }
            }
            (lo, hi)
        };
        let dims = [hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]];
        let mut dir = vec![EMPTY; (dims[0] * dims[1] * dims[2]) as usize];
        for (i, blk) in self.blocks.iter().enumerate() {
            let r = [
                (blk.coord[0] - lo[0]) as usize,
                (blk.coord[1] - lo[1]) as usize,
                (blk.coord[2] - lo[2]) as usize,
            ];
            dir[(r[2] * dims[1] as usize + r[1]) * dims[0] as usize + r[0]] = i as u32;
        }
        self.dir_lo = lo;
        self.dir_dims = dims;
        self.dir = dir;
    }

    fn ensure_block(&mut self, b: Coord) -> usize {
        if let Some(i) = self.block_index(b) {
            return i;
        }
        if self.slot(b).is_none() {
            self.grow_directory(b);
        }
        let s = self.slot(b).expect("directory covers block after growth");
        let i = self.blocks.len();
        self.blocks.push(Block {
            coord: b,
            values: vec![self.background; BLOCK_VOLUME].into_boxed_slice(),
            active: [0; BLOCK_VOLUME / 64],
        });
        self.dir[s] = i as u32;
        i
    }

    #[inline]
    pub fn get(&self, c: Coord) -> Option<T> {
        let bi = self.block_index(block_of(c))?;
        let blk = &self.blocks[bi];
        let o = local_offset(c);
        (blk.active[o >> 6] >> (o & 63) & 1 == 1).then(|| blk.values[o])
    }

    /// Stored value, or the background for inactive voxels.
    #[inline]
    pub fn value(&self, c: Coord) -> T {
        self.get(c).unwrap_or(self.background)
    }

    #[inline]
    pub fn is_active(&self, c: Coord) -> bool {
        self.get(c).is_some()
    }

    #[inline]
    pub fn set(&mut self, c: Coord, v: T) {
        let bi = self.ensure_block(block_of(c));
        let blk = &mut self.blocks[bi];
        let o = local_offset(c);
        let bit = 1u64 << (o & 63);
        if blk.active[o >> 6] & bit == 0 {
            blk.active[o >> 6] |= bit;
            self.active += 1;
        }
        blk.values[o] = v;
    }

    pub fn deactivate(&mut self, c: Coord) {
        if let Some(bi) = self.block_index(block_of(c)) {
            let blk = &mut self.blocks[bi];
            let o = local_offset(c);
            let bit = 1u64 << (o & 63);
            if blk.active[o >> 6] & bit != 0 {
                blk.active[o >> 6] &= !bit;
                blk.values[o] = self.background;
                self.active -= 1;
            }
        }
    }

    /// Mutable access to an active voxel.
    #[inline]
    pub fn get_mut(&mut self, c: Coord) -> Option<&mut T> {
        let bi = self.block_index(block_of(c))?;
        let blk = &mut self.blocks[bi];
        let o = local_offset(c);
        if blk.active[o >> 6] >> (o & 63) & 1 == 1 {
            Some(&mut blk.values[o])
        } else {
            None
        }
    }

    fn ordered_blocks(&self) -> impl Iterator<Item = &Block<T>> + '_ {
        self.dir
            .iter()
            .filter(|&&v| v != EMPTY)
            .map(move |&v| &self.blocks[v as usize])
    }

    /// Active voxels in directory order.
    pub fn iter(&self) -> impl Iterator<Item = (Coord, T)> + '_ {
        self.ordered_blocks().flat_map(|blk| {
            (0..BLOCK_VOLUME).filter_map(move |o| {
                (blk.active[o >> 6] >> (o & 63) & 1 == 1)
                    .then(|| (local_coord(blk.coord, o), blk.values[o]))
            })
        })
    }

    pub fn coords(&self) -> Vec<Coord> {
        self.iter().map(|(c, _)| c).collect()
    }

    /// Allocated blocks in directory order: block coordinate, full payload
    /// (inactive voxels hold the background) and the activity mask.
    pub fn blocks(&self) -> impl Iterator<Item = (Coord, &[T], &[u64])> + '_ {
        self.ordered_blocks()
            .map(|b| (b.coord, &b.values[..], &b.active[..]))
    }

    /// Writes a whole block; every voxel becomes active.
    pub fn set_block(&mut self, block: Coord, values: &[T]) {
        assert_eq!(values.len(), BLOCK_VOLUME);
        let bi = self.ensure_block(block);
        let blk = &mut self.blocks[bi];
        let before: u32 = blk.active.iter().map(|w| w.count_ones()).sum();
        blk.values.copy_from_slice(values);
        blk.active = [u64::MAX; BLOCK_VOLUME / 64];
        self.active += BLOCK_VOLUME - before as usize;
    }

    /// Inclusive-exclusive bounding box of active voxels.
    pub fn bounds(&self) -> Option<(Coord, Coord)> {
        let mut lo = [i32::MAX; 3];
        let mut hi = [i32::MIN; 3];
        for (c, _) in self.iter() {
            for a in 0..3 {
                lo[a] = lo[a].min(c[a]);
                hi[a] = hi[a].max(c[a] + 1);
            }
        }
        (lo[0] != i32::MAX).then_some((lo, hi))
    }

    pub fn map<U: Copy>(&self, background: U, mut f: impl FnMut(Coord, T) -> U) -> BlockGrid<U> {
        let mut out = BlockGrid::new(background);
        for (c, v) in self.iter() {
            out.set(c, f(c, v));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_get_negative_coords() {
        let mut g = BlockGrid::new(-1.0f64);
        g.set([-9, 3, 17], 2.5);
        g.set([100, -40, 0], 1.0);
        assert_eq!(g.get([-9, 3, 17]), Some(2.5));
        assert_eq!(g.get([-9, 3, 16]), None);
        assert_eq!(g.value([-9, 3, 16]), -1.0);
        assert_eq!(g.value([100, -40, 0]), 1.0);
        assert_eq!(g.active_count(), 2);
        g.deactivate([-9, 3, 17]);
        assert_eq!(g.active_count(), 1);
        assert_eq!(g.value([-9, 3, 17]), -1.0);
    }

    #[test]
    fn iteration_order_ignores_insertion_order() {
        let coords: Vec<Coord> = (0..200)
            .map(|i| [(i * 37) % 50 - 25, (i * 11) % 23 - 7, (i * 5) % 31])
            .collect();
        let mut a = BlockGrid::new(0i32);
        let mut b = BlockGrid::new(0i32);
        for (n, c) in coords.iter().enumerate() {
            a.set(*c, n as i32 % 7);
        }
        for (n, c) in coords.iter().enumerate().rev() {
            b.set(*c, n as i32 % 7);
        }
        // last write wins differently for duplicates; compare key sets only
        let ka: Vec<Coord> = a.coords();
        let kb: Vec<Coord> = b.coords();
        assert_eq!(ka, kb);
    }

    #[test]
    fn bounds_cover_active() {
        let mut g = BlockGrid::new(0u8);
        g.set([3, 4, 5], 1);
        g.set([-2, 10, 0], 1);
        assert_eq!(g.bounds(), Some(([-2, 4, 0], [4, 11, 6])));
    }
}
