//! The refinable-partition structure and the grouping primitives.
//!
//! A `RefinablePartition` holds the fine partition the engine refines; a
//! `CompoundStructure` groups its blocks into coarser compound blocks and
//! keeps a FIFO worklist of the compound ones (those with at least two
//! member blocks). Elements can be removed from their block in O(1) and
//! looked up in O(1).

use std::collections::VecDeque;

use crate::StateId;

pub type BlockId = u32;
pub type QBlockId = u32;

#[derive(Debug, Clone)]
struct Block {
    elems: Vec<StateId>,
    qblock: QBlockId,
}

/// Partition of `0..n` into nonempty blocks with O(1) removal.
#[derive(Debug, Clone)]
pub struct RefinablePartition {
    blocks: Vec<Block>,
    block_of: Vec<BlockId>,
    /// Position of each element inside its block's element vector.
    pos_of: Vec<u32>,
}

pub const NO_BLOCK: BlockId = u32::MAX;

impl RefinablePartition {
    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn universe(&self) -> usize {
        self.block_of.len()
    }

    pub fn block_of(&self, x: StateId) -> BlockId {
        self.block_of[x as usize]
    }

    pub fn elements(&self, b: BlockId) -> &[StateId] {
        &self.blocks[b as usize].elems
    }

    pub fn size(&self, b: BlockId) -> usize {
        self.blocks[b as usize].elems.len()
    }

    pub fn qblock_of_block(&self, b: BlockId) -> QBlockId {
        self.blocks[b as usize].qblock
    }

    pub(crate) fn set_qblock(&mut self, b: BlockId, q: QBlockId) {
        self.blocks[b as usize].qblock = q;
    }

    /// Remove `x` from its block (the block may become empty). O(1).
    pub fn remove(&mut self, x: StateId) -> BlockId {
        let b = self.block_of[x as usize];
        debug_assert_ne!(b, NO_BLOCK);
        let pos = self.pos_of[x as usize] as usize;
        let elems = &mut self.blocks[b as usize].elems;
        let last = *elems.last().unwrap();
        elems[pos] = last;
        self.pos_of[last as usize] = pos as u32;
        elems.pop();
        self.block_of[x as usize] = NO_BLOCK;
        b
    }

    /// Insert a removed element into an existing block. O(1).
    pub fn insert(&mut self, x: StateId, b: BlockId) {
        debug_assert_eq!(self.block_of[x as usize], NO_BLOCK);
        let elems = &mut self.blocks[b as usize].elems;
        self.pos_of[x as usize] = elems.len() as u32;
        elems.push(x);
        self.block_of[x as usize] = b;
    }

    /// Create a new block from removed elements; returns its id. Block ids
    /// are never reused within a run.
    pub fn add_block(&mut self, elems: Vec<StateId>, qblock: QBlockId) -> BlockId {
        let b = self.blocks.len() as BlockId;
        for (i, x) in elems.iter().enumerate() {
            debug_assert_eq!(self.block_of[*x as usize], NO_BLOCK);
            self.block_of[*x as usize] = b;
            self.pos_of[*x as usize] = i as u32;
        }
        self.blocks.push(Block { elems, qblock });
        b
    }

    /// Move `selected` (a proper nonempty subset of block `b`) into a fresh
    /// block in the same compound block. O(|selected|).
    pub fn split_block(&mut self, b: BlockId, selected: &[StateId]) -> BlockId {
        assert!(
            !selected.is_empty() && selected.len() < self.size(b),
            "selected must be a proper nonempty subset of the block"
        );
        let q = self.blocks[b as usize].qblock;
        for x in selected {
            debug_assert_eq!(self.block_of[*x as usize], b);
            self.remove(*x);
        }
        self.add_block(selected.to_vec(), q)
    }

    /// All blocks as element lists, skipping empty ones.
    pub fn to_blocks(&self) -> Vec<Vec<StateId>> {
        self.blocks
            .iter()
            .filter(|b| !b.elems.is_empty())
            .map(|b| b.elems.clone())
            .collect()
    }

    /// Consistency audit: every element in exactly one block, positions and
    /// sizes in sync. Used by tests and debug runs.
    pub fn audit(&self) -> Result<(), String> {
        let mut seen = vec![false; self.universe()];
        for (bid, block) in self.blocks.iter().enumerate() {
            for (i, x) in block.elems.iter().enumerate() {
                if self.block_of[*x as usize] != bid as BlockId {
                    return Err(format!("element {x} not mapped to its block {bid}"));
                }
                if self.pos_of[*x as usize] != i as u32 {
                    return Err(format!("element {x} has a stale position"));
                }
                if seen[*x as usize] {
                    return Err(format!("element {x} appears twice"));
                }
                seen[*x as usize] = true;
            }
        }
        if let Some(x) = seen.iter().position(|s| !s) {
            if self.block_of[x] != NO_BLOCK {
                return Err(format!("element {x} is mapped but unlisted"));
            }
            return Err(format!("element {x} is in no block"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct QBlock {
    members: Vec<BlockId>,
    /// Total number of elements across the member blocks.
    size: u32,
}

/// The coarse partition: groups of blocks with a FIFO worklist of the
/// compound groups.
#[derive(Debug, Clone)]
pub struct CompoundStructure {
    qblocks: Vec<QBlock>,
    worklist: VecDeque<QBlockId>,
}

impl CompoundStructure {
    pub fn n_qblocks(&self) -> usize {
        self.qblocks.len()
    }

    pub fn members(&self, q: QBlockId) -> &[BlockId] {
        &self.qblocks[q as usize].members
    }

    pub fn size(&self, q: QBlockId) -> usize {
        self.qblocks[q as usize].size as usize
    }

    pub fn worklist_is_empty(&self) -> bool {
        self.worklist.is_empty()
    }

    pub(crate) fn pop_compound(&mut self) -> Option<QBlockId> {
        self.worklist.pop_front()
    }

    pub(crate) fn push_compound(&mut self, q: QBlockId) {
        self.worklist.push_back(q);
    }

    /// Register a freshly created block in a group; enqueues the group when
    /// it becomes compound.
    pub(crate) fn add_member(&mut self, q: QBlockId, b: BlockId) {
        let qb = &mut self.qblocks[q as usize];
        qb.members.push(b);
        if qb.members.len() == 2 {
            self.worklist.push_back(q);
        }
    }

    /// Detach member `b` (element count `count`) from group `q` into a fresh
    /// singleton group; returns the new group's id. The caller re-enqueues
    /// `q` if it stays compound.
    pub(crate) fn detach(&mut self, q: QBlockId, b: BlockId, count: u32) -> QBlockId {
        let qb = &mut self.qblocks[q as usize];
        let pos = qb
            .members
            .iter()
            .position(|m| *m == b)
            .expect("block not in its compound block");
        qb.members.swap_remove(pos);
        qb.size -= count;
        let fresh = self.qblocks.len() as QBlockId;
        self.qblocks.push(QBlock {
            members: vec![b],
            size: count,
        });
        fresh
    }

    /// Drop a group from the worklist wherever it sits (slow path for
    /// manually driven runs).
    pub(crate) fn unqueue(&mut self, q: QBlockId) {
        self.worklist.retain(|m| *m != q);
    }

    /// Audit: member sizes sum to group sizes and the worklist holds exactly
    /// the compound groups.
    pub fn audit(&self, partition: &RefinablePartition) -> Result<(), String> {
        let mut qblock_of = vec![None; partition.n_blocks()];
        for (qid, qb) in self.qblocks.iter().enumerate() {
            let mut total = 0usize;
            for m in &qb.members {
                if partition.qblock_of_block(*m) != qid as QBlockId {
                    return Err(format!("block {m} disagrees about its compound block"));
                }
                if qblock_of[*m as usize].replace(qid).is_some() {
                    return Err(format!("block {m} is in two compound blocks"));
                }
                total += partition.size(*m);
            }
            if total != qb.size as usize {
                return Err(format!("compound block {qid} has a stale size"));
            }
        }
        for (b, q) in qblock_of.iter().enumerate() {
            if q.is_none() && partition.size(b as BlockId) > 0 {
                return Err(format!("block {b} is in no compound block"));
            }
        }
        let mut queued: Vec<QBlockId> = self.worklist.iter().copied().collect();
        queued.sort_unstable();
        if queued.windows(2).any(|w| w[0] == w[1]) {
            return Err("worklist holds a duplicate".into());
        }
        for (qid, qb) in self.qblocks.iter().enumerate() {
            let compound = qb.members.len() >= 2;
            let listed = queued.binary_search(&(qid as QBlockId)).is_ok();
            if compound != listed {
                return Err(format!(
                    "compound block {qid} (members {}) worklist mismatch",
                    qb.members.len()
                ));
            }
        }
        Ok(())
    }
}

/// Create a partition from a total block assignment (`assignment[x]` is the
/// block index of `x`; indices must be dense starting at 0), together with
/// one compound block covering everything.
pub fn new_partition(
    universe: usize,
    assignment: &[BlockId],
) -> (RefinablePartition, CompoundStructure) {
    assert_eq!(assignment.len(), universe);
    let n_blocks = assignment.iter().map(|b| b + 1).max().unwrap_or(0) as usize;
    let mut blocks: Vec<Block> = (0..n_blocks)
        .map(|_| Block {
            elems: Vec::new(),
            qblock: 0,
        })
        .collect();
    let mut block_of = vec![NO_BLOCK; universe];
    let mut pos_of = vec![0u32; universe];
    for (x, b) in assignment.iter().enumerate() {
        let elems = &mut blocks[*b as usize].elems;
        block_of[x] = *b;
        pos_of[x] = elems.len() as u32;
        elems.push(x as StateId);
    }
    assert!(
        blocks.iter().all(|b| !b.elems.is_empty()),
        "block indices must be dense"
    );
    let partition = RefinablePartition {
        blocks,
        block_of,
        pos_of,
    };
    let mut worklist = VecDeque::new();
    let qblocks = if n_blocks == 0 {
        Vec::new()
    } else {
        if n_blocks >= 2 {
            worklist.push_back(0);
        }
        vec![QBlock {
            members: (0..n_blocks as BlockId).collect(),
            size: universe as u32,
        }]
    };
    (partition, CompoundStructure { qblocks, worklist })
}

// --- grouping ------------------------------------------------------------------

/// Single-pass majority-vote candidate over encoded values: when some value
/// occurs at least half the time it is returned, otherwise the vote survivor
/// is (any answer is acceptable then). Empty input gives `None`.
pub fn pmc<'a, I>(values: I) -> Option<&'a [u8]>
where
    I: IntoIterator<Item = &'a [u8]>,
{
    let mut candidate: Option<&[u8]> = None;
    let mut count = 0usize;
    for v in values {
        if count == 0 {
            candidate = Some(v);
            count = 1;
        } else if candidate == Some(v) {
            count += 1;
        } else {
            count -= 1;
        }
    }
    candidate
}

/// Group elements by their encoded value. The group carrying the majority
/// candidate comes first and is never sorted; the remaining elements are
/// sorted by encoding and grouped by equal neighbours, in ascending order.
pub fn group_by_value<T: Copy>(pairs: &[(T, &[u8])]) -> Vec<Vec<T>> {
    let Some(majority) = pmc(pairs.iter().map(|(_, v)| *v)) else {
        return Vec::new();
    };
    let mut first: Vec<T> = Vec::new();
    let mut rest: Vec<(T, &[u8])> = Vec::new();
    for (x, v) in pairs {
        if *v == majority {
            first.push(*x);
        } else {
            rest.push((*x, v));
        }
    }
    rest.sort_by(|a, b| a.1.cmp(b.1));
    let mut groups = vec![first];
    let mut i = 0;
    while i < rest.len() {
        let mut j = i + 1;
        while j < rest.len() && rest[j].1 == rest[i].1 {
            j += 1;
        }
        groups.push(rest[i..j].iter().map(|(x, _)| *x).collect());
        i = j;
    }
    groups
}
