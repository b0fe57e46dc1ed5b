//! Sparse block-hashed voxel storage and world/grid coordinate algebra.
//!
//! Space is tiled by cubic voxels of edge `voxel_size_m`. Voxel `g` (a
//! global integer index) covers the half-open cube `[g, g + 1) * voxel_size`
//! on every axis. Voxels are grouped into blocks of `BLOCK_SIDE`³ which are
//! allocated lazily and stored in a hash map.

use std::collections::HashMap;
use std::hash::{Hash, Hasher};

use nalgebra::Point3;

use crate::error::{Error, Result};

/// Voxels per block edge.
pub const BLOCK_SIDE: usize = 8;
/// Voxels per block.
pub const BLOCK_VOXELS: usize = BLOCK_SIDE * BLOCK_SIDE * BLOCK_SIDE;

const BLOCK_SIDE_I64: i64 = BLOCK_SIDE as i64;

/// Resolution and truncation band shared by every layer of a map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    voxel_size_m: f64,
    truncation_voxels: u32,
}

impl GridSpec {
    pub fn new(voxel_size_m: f64, truncation_voxels: u32) -> Result<Self> {
        if !(voxel_size_m.is_finite() && voxel_size_m > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "voxel size must be positive and finite, got {voxel_size_m}"
            )));
        }
        if truncation_voxels == 0 {
            return Err(Error::InvalidConfig("truncation must span at least one voxel".into()));
        }
        Ok(Self {
            voxel_size_m,
            truncation_voxels,
        })
    }

    pub fn voxel_size_m(&self) -> f64 {
        self.voxel_size_m
    }

    pub fn truncation_voxels(&self) -> u32 {
        self.truncation_voxels
    }

    pub fn truncation_distance_m(&self) -> f64 {
        self.truncation_voxels as f64 * self.voxel_size_m
    }

    pub fn block_size_m(&self) -> f64 {
        BLOCK_SIDE as f64 * self.voxel_size_m
    }
}

/// Integer coordinates of a block in block units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct BlockIndex {
    pub x: i64,
    pub y: i64,
    pub z: i64,
}

impl BlockIndex {
    pub const fn new(x: i64, y: i64, z: i64) -> Self {
        Self { x, y, z }
    }

    /// Packs the index into 63 bits, 21 bits per axis. Bijective for
    /// `|i| < 2^20` on every axis.
    pub fn pack(&self) -> u64 {
        const MASK: u64 = (1 << 21) - 1;
        let enc = |v: i64| (v as u64) & MASK;
        (enc(self.x) << 42) | (enc(self.y) << 21) | enc(self.z)
    }

    /// Global index of the block's first voxel.
    pub fn origin_voxel(&self) -> GlobalIndex {
        GlobalIndex([
            self.x * BLOCK_SIDE_I64,
            self.y * BLOCK_SIDE_I64,
            self.z * BLOCK_SIDE_I64,
        ])
    }
}

impl Hash for BlockIndex {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.pack());
    }
}

/// Position of a voxel inside its block, each axis in `0..BLOCK_SIDE`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VoxelIndex {
    pub x: usize,
    pub y: usize,
    pub z: usize,
}

impl VoxelIndex {
    pub fn new(x: usize, y: usize, z: usize) -> Result<Self> {
        if x >= BLOCK_SIDE || y >= BLOCK_SIDE || z >= BLOCK_SIDE {
            return Err(Error::VoxelIndexOutOfRange([x, y, z]));
        }
        Ok(Self { x, y, z })
    }

    /// Storage offset inside a block; lexicographic in (x, y, z).
    pub fn linear(&self) -> usize {
        (self.x * BLOCK_SIDE + self.y) * BLOCK_SIDE + self.z
    }

    pub fn from_linear(i: usize) -> Self {
        debug_assert!(i < BLOCK_VOXELS);
        Self {
            x: i / (BLOCK_SIDE * BLOCK_SIDE),
            y: (i / BLOCK_SIDE) % BLOCK_SIDE,
            z: i % BLOCK_SIDE,
        }
    }
}

/// Voxel index on the unbounded global lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GlobalIndex(pub [i64; 3]);

impl GlobalIndex {
    pub fn split(&self) -> (BlockIndex, VoxelIndex) {
        let [x, y, z] = self.0;
        let block = BlockIndex::new(
            x.div_euclid(BLOCK_SIDE_I64),
            y.div_euclid(BLOCK_SIDE_I64),
            z.div_euclid(BLOCK_SIDE_I64),
        );
        let voxel = VoxelIndex {
            x: x.rem_euclid(BLOCK_SIDE_I64) as usize,
            y: y.rem_euclid(BLOCK_SIDE_I64) as usize,
            z: z.rem_euclid(BLOCK_SIDE_I64) as usize,
        };
        (block, voxel)
    }

    pub fn join(block: BlockIndex, voxel: VoxelIndex) -> Self {
        let o = block.origin_voxel().0;
        GlobalIndex([o[0] + voxel.x as i64, o[1] + voxel.y as i64, o[2] + voxel.z as i64])
    }

    pub fn offset(&self, dx: i64, dy: i64, dz: i64) -> Self {
        let [x, y, z] = self.0;
        GlobalIndex([x + dx, y + dy, z + dz])
    }

    /// World position of the voxel center.
    pub fn center(&self, voxel_size_m: f64) -> Point3<f64> {
        let [x, y, z] = self.0;
        Point3::new(
            (x as f64 + 0.5) * voxel_size_m,
            (y as f64 + 0.5) * voxel_size_m,
            (z as f64 + 0.5) * voxel_size_m,
        )
    }

    pub fn of_point(p: &Point3<f64>, voxel_size_m: f64) -> Self {
        GlobalIndex([
            (p.x / voxel_size_m).floor() as i64,
            (p.y / voxel_size_m).floor() as i64,
            (p.z / voxel_size_m).floor() as i64,
        ])
    }
}

/// Block and intra-block index of the voxel containing `p`.
pub fn world_to_voxel(p: &Point3<f64>, spec: &GridSpec) -> (BlockIndex, VoxelIndex) {
    GlobalIndex::of_point(p, spec.voxel_size_m).split()
}

/// World position of a voxel center.
pub fn voxel_center(block: BlockIndex, voxel: VoxelIndex, spec: &GridSpec) -> Result<Point3<f64>> {
    // Re-validate: fields are public so callers may build an index by hand.
    let voxel = VoxelIndex::new(voxel.x, voxel.y, voxel.z)?;
    Ok(GlobalIndex::join(block, voxel).center(spec.voxel_size_m))
}

/// Dense `BLOCK_SIDE`³ array of voxels.
#[derive(Debug, Clone, PartialEq)]
pub struct Block<V> {
    voxels: Box<[V]>,
}

impl<V: Default + Clone> Block<V> {
    fn new() -> Self {
        Self {
            voxels: vec![V::default(); BLOCK_VOXELS].into_boxed_slice(),
        }
    }
}

impl<V> Block<V> {
    pub fn voxel(&self, index: VoxelIndex) -> &V {
        &self.voxels[index.linear()]
    }

    pub fn voxel_mut(&mut self, index: VoxelIndex) -> &mut V {
        &mut self.voxels[index.linear()]
    }

    /// Voxels in storage order (see [`VoxelIndex::linear`]).
    pub fn voxels(&self) -> &[V] {
        &self.voxels
    }

    pub fn voxels_mut(&mut self) -> &mut [V] {
        &mut self.voxels
    }
}

/// Sparse voxel grid.
///
/// Unallocated space reads as absent; freshly allocated blocks hold
/// `V::default()`, which every voxel type defines as unobserved.
#[derive(Debug, Clone)]
pub struct VoxelLayer<V> {
    spec: GridSpec,
    blocks: HashMap<BlockIndex, Block<V>>,
}

impl<V: Default + Clone> VoxelLayer<V> {
    pub fn new(spec: GridSpec) -> Self {
        Self {
            spec,
            blocks: HashMap::new(),
        }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn get_or_allocate_block(&mut self, index: BlockIndex) -> &mut Block<V> {
        self.blocks.entry(index).or_insert_with(Block::new)
    }

    /// Allocates the block if needed; returns true when it was newly created.
    pub fn allocate_block(&mut self, index: BlockIndex) -> bool {
        let mut created = false;
        self.blocks.entry(index).or_insert_with(|| {
            created = true;
            Block::new()
        });
        created
    }

    pub fn block(&self, index: &BlockIndex) -> Option<&Block<V>> {
        self.blocks.get(index)
    }

    pub fn block_mut(&mut self, index: &BlockIndex) -> Option<&mut Block<V>> {
        self.blocks.get_mut(index)
    }

    pub fn contains_block(&self, index: &BlockIndex) -> bool {
        self.blocks.contains_key(index)
    }

    /// Voxel containing `p`, or `None` if its block is not allocated.
    pub fn lookup_voxel(&self, p: &Point3<f64>) -> Option<&V> {
        self.voxel(GlobalIndex::of_point(p, self.spec.voxel_size_m))
    }

    pub fn voxel(&self, index: GlobalIndex) -> Option<&V> {
        let (b, v) = index.split();
        self.blocks.get(&b).map(|block| block.voxel(v))
    }

    pub fn voxel_mut(&mut self, index: GlobalIndex) -> Option<&mut V> {
        let (b, v) = index.split();
        self.blocks.get_mut(&b).map(|block| block.voxel_mut(v))
    }

    /// Allocated block indices in ascending order.
    pub fn sorted_block_indices(&self) -> Vec<BlockIndex> {
        let mut keys: Vec<_> = self.blocks.keys().copied().collect();
        keys.sort_unstable();
        keys
    }

    /// Every allocated voxel, in sorted block order then storage order.
    pub fn iter_voxels(&self) -> impl Iterator<Item = (GlobalIndex, &V)> + '_ {
        self.sorted_block_indices().into_iter().flat_map(move |b| {
            self.blocks[&b]
                .voxels()
                .iter()
                .enumerate()
                .map(move |(i, v)| (GlobalIndex::join(b, VoxelIndex::from_linear(i)), v))
        })
    }

    pub(crate) fn blocks_mut(&mut self) -> &mut HashMap<BlockIndex, Block<V>> {
        &mut self.blocks
    }
}
