//! The optimized partition-refinement engine.
//!
//! Starting from the by-type partition, the engine repeatedly selects a
//! subblock `S` at most half the size of its compound block `C` and splits
//! every predecessor block of `S` by the three-way membership observation
//! against `S ⊆ C`. Weights are maintained incrementally: every edge points
//! (via `last_w`) at a shared cell holding its source's weight against the
//! compound block currently containing the edge's target, so one split
//! touches only the edges into `S`.
//!
//! Between splits the engine maintains four invariants:
//! 1. `to_sub` is empty everywhere;
//! 2. two edges share their cell iff they have the same source and their
//!    targets share a compound block;
//! 3. each edge's cell holds its source's weight against the compound block
//!    of its target;
//! 4. states in one block are indistinguishable by their weights against
//!    every compound block.

use crate::coalgebra::Encoding;
use crate::error::{Error, Result};
use crate::interface::{encode_h3_into, Interface, Label, Weight};
use crate::partition::{
    group_by_value, new_partition, BlockId, CompoundStructure, QBlockId, RefinablePartition,
};
use crate::{EdgeId, StateId};

/// A selected splitter: subblock `S` inside compound block `C`, with the
/// sizes observed at selection time (`2·|S| <= |C|`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitterChoice {
    pub subblock: BlockId,
    pub compound: QBlockId,
    pub subblock_size: usize,
    pub compound_size: usize,
}

/// Per-run instrumentation.
#[derive(Debug, Clone, Default)]
pub struct RunStats {
    pub iterations: u64,
    pub max_splitter_entries: u32,
    /// (times-in-a-splitter, number of states) pairs, ascending.
    pub entry_histogram: Vec<(u32, usize)>,
}

/// Result of a full refinement run.
#[derive(Debug, Clone)]
pub struct RefineOutcome {
    pub partition: Vec<Vec<StateId>>,
    pub stats: RunStats,
}

pub struct Refiner<'a> {
    enc: &'a Encoding,
    partition: RefinablePartition,
    compounds: CompoundStructure,
    iface_of_sort: Vec<Interface>,
    /// Per state: its edges into the splitter currently being processed.
    to_sub: Vec<Vec<EdgeId>>,
    /// Per edge: the cell holding the source's weight against the compound
    /// block of the edge's target.
    last_w: Vec<u32>,
    cells: Vec<Weight>,
    /// Per cell: number of edges pointing at it; a cell whose edges all move
    /// to the subblock is recycled in place, which keeps live cells O(n+m).
    cell_refs: Vec<u32>,
    /// Per block: the states marked as having edges into the splitter,
    /// each with its old cell.
    marks: Vec<Vec<(StateId, u32)>>,
    splitter_entries: Vec<u32>,
    iterations: u64,
    audit_every_split: bool,
    // scratch, reused across splits
    touched: Vec<(BlockId, Vec<u8>)>,
    splitter_elems: Vec<StateId>,
    key_buf: Vec<u8>,
    leaver_keys: Vec<u8>,
}

impl<'a> Refiner<'a> {
    /// Initialize: one cell per state holding its weight against the whole
    /// carrier, the partition grouped by sort and type, and a single
    /// compound block covering everything.
    pub fn new(enc: &'a Encoding) -> Result<Self> {
        let n = enc.n_states();
        let m = enc.n_edges();
        let iface_of_sort: Vec<Interface> = enc.plan.sorts.iter().map(|s| s.interface()).collect();

        let mut cells = Vec::with_capacity(n);
        let mut cell_refs = Vec::with_capacity(n);
        let mut last_w = vec![0u32; m];
        for x in 0..n {
            let iface = iface_of_sort[enc.sort_of[x] as usize];
            let w = iface.init(
                &enc.types[x],
                enc.out_edges(x as StateId).map(|e| &enc.labels[e]),
            )?;
            let cell = cells.len() as u32;
            cells.push(w);
            cell_refs.push(enc.out_edges(x as StateId).len() as u32);
            for e in enc.out_edges(x as StateId) {
                last_w[e] = cell;
            }
        }

        // Group states by sort and type value.
        let mut keys = Vec::new();
        let mut spans = Vec::with_capacity(n);
        for x in 0..n {
            let start = keys.len();
            enc.type_key(x as StateId, &mut keys);
            spans.push(start..keys.len());
        }
        let pairs: Vec<(StateId, &[u8])> = spans
            .iter()
            .enumerate()
            .map(|(x, r)| (x as StateId, &keys[r.clone()]))
            .collect();
        let groups = group_by_value(&pairs);
        let mut assignment = vec![0 as BlockId; n];
        for (i, group) in groups.iter().enumerate() {
            for x in group {
                assignment[*x as usize] = i as BlockId;
            }
        }
        let (partition, compounds) = new_partition(n, &assignment);

        let n_blocks = partition.n_blocks();
        let refiner = Refiner {
            enc,
            partition,
            compounds,
            iface_of_sort,
            to_sub: vec![Vec::new(); n],
            last_w,
            cells,
            cell_refs,
            marks: vec![Vec::new(); n_blocks],
            splitter_entries: vec![0; n],
            iterations: 0,
            audit_every_split: cfg!(debug_assertions) && n <= 200,
            touched: Vec::new(),
            splitter_elems: Vec::new(),
            key_buf: Vec::new(),
            leaver_keys: Vec::new(),
        };
        if refiner.audit_every_split {
            refiner.audit().map_err(Error::invariant)?;
        }
        Ok(refiner)
    }

    pub fn partition(&self) -> &RefinablePartition {
        &self.partition
    }

    pub fn compounds(&self) -> &CompoundStructure {
        &self.compounds
    }

    pub fn current_blocks(&self) -> Vec<Vec<StateId>> {
        self.partition.to_blocks()
    }

    pub fn splitter_entries(&self, y: StateId) -> u32 {
        self.splitter_entries[y as usize]
    }

    /// Pop the front compound block and detach a subblock at most half its
    /// size (the smaller of its first two members). `None` once no compound
    /// block remains, i.e. the partition is stable.
    pub fn select_splitter(&mut self) -> Option<SplitterChoice> {
        let c = self.compounds.pop_compound()?;
        let members = self.compounds.members(c);
        debug_assert!(members.len() >= 2);
        let (b0, b1) = (members[0], members[1]);
        let s = if self.partition.size(b1) < self.partition.size(b0) {
            b1
        } else {
            b0
        };
        Some(self.detach(c, s))
    }

    /// Use a caller-chosen subblock/compound pair as the next splitter
    /// (step-instrumented runs). Enforces the same half-size constraint the
    /// normal selection guarantees.
    pub fn force_splitter(&mut self, s: BlockId, c: QBlockId) -> Result<SplitterChoice> {
        if self.partition.qblock_of_block(s) != c {
            return Err(Error::invariant("subblock is not in that compound block"));
        }
        if self.compounds.members(c).len() < 2 {
            return Err(Error::invariant("compound block has a single member"));
        }
        if 2 * self.partition.size(s) > self.compounds.size(c) {
            return Err(Error::invariant(
                "subblock is more than half of its compound block",
            ));
        }
        self.compounds.unqueue(c);
        Ok(self.detach(c, s))
    }

    fn detach(&mut self, c: QBlockId, s: BlockId) -> SplitterChoice {
        let compound_size = self.compounds.size(c);
        let subblock_size = self.partition.size(s);
        debug_assert!(2 * subblock_size <= compound_size);
        let fresh = self.compounds.detach(c, s, subblock_size as u32);
        self.partition.set_qblock(s, fresh);
        if self.compounds.members(c).len() >= 2 {
            self.compounds.push_compound(c);
        }
        SplitterChoice {
            subblock: s,
            compound: c,
            subblock_size,
            compound_size,
        }
    }

    /// Refine every predecessor block of the splitter by its three-way
    /// membership observation. Runs in time proportional to the number of
    /// edges into the splitter, plus grouping.
    pub fn split(&mut self, choice: &SplitterChoice) -> Result<()> {
        self.iterations += 1;

        // Phase one: walk the edges into S, marking their sources and
        // recording each touched block with the observation of a state that
        // has no edge into S.
        self.touched.clear();
        self.splitter_elems.clear();
        self.splitter_elems
            .extend_from_slice(self.partition.elements(choice.subblock));
        for i in 0..self.splitter_elems.len() {
            let y = self.splitter_elems[i];
            self.splitter_entries[y as usize] += 1;
            let preds = self.enc.pred(y);
            for &e in preds {
                let x = self.enc.edges[e as usize].0;
                let b = self.partition.block_of(x);
                if self.marks[b as usize].is_empty() {
                    let iface = self.iface_of_sort[self.enc.sort_of[x as usize] as usize];
                    let w_c = &self.cells[self.last_w[e as usize] as usize];
                    let (_, v_empty, _) = iface.update(std::iter::empty::<&Label>(), w_c)?;
                    let mut bytes = Vec::new();
                    encode_h3_into(&v_empty, &mut bytes);
                    self.touched.push((b, bytes));
                }
                if self.to_sub[x as usize].is_empty() {
                    self.marks[b as usize].push((x, self.last_w[e as usize]));
                }
                self.to_sub[x as usize].push(e);
            }
        }

        // Phase two: update every marked state's weights and move the states
        // whose observation differs from the unmarked ones into new blocks,
        // grouped by observation.
        let touched = std::mem::take(&mut self.touched);
        for (b, v_empty) in &touched {
            let mut marks = std::mem::take(&mut self.marks[*b as usize]);
            self.leaver_keys.clear();
            let mut leavers: Vec<(StateId, std::ops::Range<usize>)> = Vec::new();
            for (x, p_c) in &marks {
                let x = *x;
                let p_c = *p_c as usize;
                let mut tsx = std::mem::take(&mut self.to_sub[x as usize]);
                if tsx.is_empty() {
                    return Err(Error::invariant(
                        "marked state has no edges into the splitter",
                    ));
                }
                let iface = self.iface_of_sort[self.enc.sort_of[x as usize] as usize];
                let (w_s, v, w_rest) = iface.update(
                    tsx.iter().map(|e| &self.enc.labels[*e as usize]),
                    &self.cells[p_c],
                )?;
                let k = tsx.len() as u32;
                debug_assert!(self.cell_refs[p_c] >= k);
                if self.cell_refs[p_c] == k {
                    // Everything the cell covered moved into the subblock:
                    // recycle it in place, the edges already point here.
                    self.cells[p_c] = w_s;
                } else {
                    self.cell_refs[p_c] -= k;
                    self.cells[p_c] = w_rest;
                    let p_s = self.cells.len() as u32;
                    self.cells.push(w_s);
                    self.cell_refs.push(k);
                    for e in &tsx {
                        self.last_w[*e as usize] = p_s;
                    }
                }
                tsx.clear();
                self.to_sub[x as usize] = tsx;

                self.key_buf.clear();
                encode_h3_into(&v, &mut self.key_buf);
                if self.key_buf != *v_empty {
                    let start = self.leaver_keys.len();
                    self.leaver_keys.extend_from_slice(&self.key_buf);
                    leavers.push((x, start..self.leaver_keys.len()));
                }
            }
            marks.clear();
            self.marks[*b as usize] = marks;

            if !leavers.is_empty() {
                let pairs: Vec<(StateId, &[u8])> = leavers
                    .iter()
                    .map(|(x, r)| (*x, &self.leaver_keys[r.clone()]))
                    .collect();
                let groups = group_by_value(&pairs);
                let keep = if pairs.len() == self.partition.size(*b) {
                    // Every state leaves; keep the largest group in place so
                    // the block never empties (first group wins ties).
                    let mut keep = 0;
                    for (i, g) in groups.iter().enumerate() {
                        if g.len() > groups[keep].len() {
                            keep = i;
                        }
                    }
                    Some(keep)
                } else {
                    None
                };
                for (i, group) in groups.iter().enumerate() {
                    if Some(i) == keep {
                        continue;
                    }
                    let nb = self.partition.split_block(*b, group);
                    let q = self.partition.qblock_of_block(nb);
                    self.compounds.add_member(q, nb);
                    while self.marks.len() < self.partition.n_blocks() {
                        self.marks.push(Vec::new());
                    }
                }
            }
        }
        self.touched = touched;

        if self.audit_every_split {
            self.audit().map_err(Error::invariant)?;
        }
        Ok(())
    }

    /// Run the main loop to the stable partition.
    pub fn run(&mut self) -> Result<()> {
        while let Some(choice) = self.select_splitter() {
            self.split(&choice)?;
        }
        Ok(())
    }

    pub fn stats(&self) -> RunStats {
        let max = self.splitter_entries.iter().copied().max().unwrap_or(0);
        let mut hist_map = std::collections::BTreeMap::new();
        for c in &self.splitter_entries {
            *hist_map.entry(*c).or_insert(0usize) += 1;
        }
        RunStats {
            iterations: self.iterations,
            max_splitter_entries: max,
            entry_histogram: hist_map.into_iter().collect(),
        }
    }

    /// Recheck the four invariants and the structural consistency of the
    /// partition directly against the encoding. Quadratic-ish; meant for
    /// small systems in tests and debug runs.
    pub fn audit(&self) -> std::result::Result<(), String> {
        self.partition.audit()?;
        self.compounds.audit(&self.partition)?;

        // Invariant 1: to_sub empty between splits.
        if let Some(x) = self.to_sub.iter().position(|t| !t.is_empty()) {
            return Err(format!("state {x} has a non-empty to_sub between splits"));
        }

        // Invariant 2: cells shared exactly by edges with equal source and
        // target compound block.
        let mut cell_of: std::collections::HashMap<(StateId, QBlockId), u32> =
            std::collections::HashMap::new();
        let mut owner_of_cell: std::collections::HashMap<u32, (StateId, QBlockId)> =
            std::collections::HashMap::new();
        for (e, (src, tgt)) in self.enc.edges.iter().enumerate() {
            let q = self
                .partition
                .qblock_of_block(self.partition.block_of(*tgt));
            let cell = self.last_w[e];
            if let Some(prev) = cell_of.insert((*src, q), cell) {
                if prev != cell {
                    return Err(format!(
                        "edges of state {src} into one compound block disagree on their cell"
                    ));
                }
            }
            if let Some(prev) = owner_of_cell.insert(cell, (*src, q)) {
                if prev != (*src, q) {
                    return Err(format!(
                        "cell {cell} is shared across compound blocks or states"
                    ));
                }
            }
        }

        // Invariant 3: each cell holds the weight recomputed from scratch.
        for ((src, q), cell) in &cell_of {
            let want = self.weight_against(*src, |y| {
                self.partition.qblock_of_block(self.partition.block_of(y)) == *q
            });
            if self.cells[*cell as usize] != want {
                return Err(format!(
                    "cell of state {src} against compound block {q} is stale"
                ));
            }
        }

        // Invariant 4: states in one block agree on their observation
        // against every compound block (checked via canonical profiles).
        for blk in 0..self.partition.n_blocks() as BlockId {
            let elems = self.partition.elements(blk);
            if elems.len() < 2 {
                continue;
            }
            let first = self.membership_profile(elems[0]);
            for x in &elems[1..] {
                if self.membership_profile(*x) != first {
                    return Err(format!(
                        "states {} and {} share block {blk} but differ on some compound block",
                        elems[0], x
                    ));
                }
            }
        }
        Ok(())
    }

    /// Brute-force weight of `x` against the set of states selected by
    /// `in_c`, recomputed from the encoding.
    fn weight_against(&self, x: StateId, in_c: impl Fn(StateId) -> bool) -> Weight {
        use num_rational::BigRational;
        use num_traits::Zero;
        let iface = self.iface_of_sort[self.enc.sort_of[x as usize] as usize];
        match iface {
            Interface::Powerset | Interface::Bag => {
                let (mut outside, mut inside) = (0u64, 0u64);
                for e in self.enc.out_edges(x) {
                    let amount = match &self.enc.labels[e] {
                        Label::Unit => 1,
                        Label::Nat(m) => *m,
                        _ => unreachable!("validated at parse time"),
                    };
                    if in_c(self.enc.edges[e].1) {
                        inside += amount;
                    } else {
                        outside += amount;
                    }
                }
                Weight::Counts { outside, inside }
            }
            Interface::Group | Interface::Distribution => {
                let (mut outside, mut inside) = (BigRational::zero(), BigRational::zero());
                for e in self.enc.out_edges(x) {
                    let Label::Rat(w) = &self.enc.labels[e] else {
                        unreachable!("validated at parse time");
                    };
                    if in_c(self.enc.edges[e].1) {
                        inside += w.as_ref();
                    } else {
                        outside += w.as_ref();
                    }
                }
                Weight::rats(outside, inside)
            }
            Interface::Polynomial => {
                let crate::interface::TypeValue::Symbol(sym) = self.enc.types[x as usize] else {
                    unreachable!("validated at parse time");
                };
                let mut bits = smallvec::SmallVec::new();
                for e in self.enc.out_edges(x) {
                    bits.push(in_c(self.enc.edges[e].1) as u8);
                }
                Weight::Term {
                    symbol: sym,
                    in_block: bits,
                }
            }
        }
    }

    /// Canonical summary of how `x` relates to every compound block; equal
    /// profiles mean indistinguishable under every membership observation.
    fn membership_profile(&self, x: StateId) -> Vec<u8> {
        use num_rational::BigRational;
        use num_traits::Zero;
        let mut out = Vec::new();
        self.enc.type_key(x, &mut out);
        let qb = |y: StateId| self.partition.qblock_of_block(self.partition.block_of(y));
        let iface = self.iface_of_sort[self.enc.sort_of[x as usize] as usize];
        match iface {
            Interface::Powerset => {
                let mut qs: Vec<QBlockId> = self
                    .enc
                    .out_edges(x)
                    .map(|e| qb(self.enc.edges[e].1))
                    .collect();
                qs.sort_unstable();
                qs.dedup();
                for q in qs {
                    out.extend_from_slice(&q.to_be_bytes());
                }
            }
            Interface::Bag => {
                let mut sums: Vec<(QBlockId, u64)> = Vec::new();
                for e in self.enc.out_edges(x) {
                    let Label::Nat(m) = &self.enc.labels[e] else {
                        unreachable!()
                    };
                    let q = qb(self.enc.edges[e].1);
                    match sums.iter_mut().find(|(qq, _)| *qq == q) {
                        Some((_, acc)) => *acc += m,
                        None => sums.push((q, *m)),
                    }
                }
                sums.sort_unstable();
                for (q, s) in sums {
                    out.extend_from_slice(&q.to_be_bytes());
                    out.extend_from_slice(&s.to_be_bytes());
                }
            }
            Interface::Group | Interface::Distribution => {
                let mut sums: Vec<(QBlockId, BigRational)> = Vec::new();
                for e in self.enc.out_edges(x) {
                    let Label::Rat(w) = &self.enc.labels[e] else {
                        unreachable!()
                    };
                    let q = qb(self.enc.edges[e].1);
                    match sums.iter_mut().find(|(qq, _)| *qq == q) {
                        Some((_, acc)) => *acc += w.as_ref(),
                        None => sums.push((q, w.as_ref().clone())),
                    }
                }
                sums.retain(|(_, s)| !s.is_zero());
                sums.sort_by_key(|a| a.0);
                for (q, s) in sums {
                    out.extend_from_slice(&q.to_be_bytes());
                    crate::interface::encode_type_into(
                        &crate::interface::TypeValue::total(s),
                        &mut out,
                    );
                }
            }
            Interface::Polynomial => {
                for e in self.enc.out_edges(x) {
                    out.extend_from_slice(&qb(self.enc.edges[e].1).to_be_bytes());
                }
            }
        }
        out
    }
}

/// Compute the behavioural-equivalence partition of an encoded system.
pub fn refine(enc: &Encoding) -> Result<RefineOutcome> {
    let mut refiner = Refiner::new(enc)?;
    refiner.run()?;
    Ok(RefineOutcome {
        partition: refiner.current_blocks(),
        stats: refiner.stats(),
    })
}

/// Canonical set-of-sets form: blocks sorted internally and by least
/// element, for partition comparisons.
pub fn canonical_partition(blocks: &[Vec<StateId>]) -> Vec<Vec<StateId>> {
    let mut out: Vec<Vec<StateId>> = blocks
        .iter()
        .map(|b| {
            let mut b = b.clone();
            b.sort_unstable();
            b
        })
        .collect();
    out.retain(|b| !b.is_empty());
    out.sort();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coalgebra::{parse_coalgebra, root_blocks};

    const SHAPES: &str = "\
functor {tri,sq,circ} x P(X)
state t1 = (tri, {c1,c2,c3})
state t2 = (tri, {c1,c3})
state s1 = (sq, {})
state c1 = (circ, {s1})
state c2 = (circ, {c3})
state c3 = (circ, {})
";

    #[test]
    fn initialize_groups_by_sort_and_type() {
        let enc = parse_coalgebra(SHAPES).unwrap();
        let refiner = Refiner::new(&enc).unwrap();
        let blocks = root_blocks(&enc, &refiner.current_blocks());
        // Root states group by their shape alone; the empty/nonempty
        // distinction lives on the intermediate sort.
        assert_eq!(
            blocks,
            vec![
                vec!["c1".to_string(), "c2".into(), "c3".into()],
                vec!["s1".to_string()],
                vec!["t1".to_string(), "t2".into()],
            ]
        );
        // Intermediates split by emptiness: 2 root blocks of sort one.
        let all = refiner.current_blocks();
        let intermediate_blocks = all.iter().filter(|b| b.iter().all(|x| *x >= 6)).count();
        assert_eq!(intermediate_blocks, 2);
        refiner.audit().unwrap();
    }

    #[test]
    fn empty_system_refines_to_nothing() {
        let enc = parse_coalgebra("functor P(X)\n").unwrap();
        let outcome = refine(&enc).unwrap();
        assert!(outcome.partition.is_empty());
        assert_eq!(outcome.stats.iterations, 0);
    }

    #[test]
    fn splitter_with_no_incoming_edges_changes_nothing() {
        // Two blocks; the one selected first has no predecessors.
        let enc =
            parse_coalgebra("functor P(X)\nstate a = {}\nstate b = {a}\nstate c = {a}\n").unwrap();
        let mut refiner = Refiner::new(&enc).unwrap();
        let before = canonical_partition(&refiner.current_blocks());
        let choice = refiner.select_splitter().unwrap();
        // The selected subblock is {a} (empty type, smaller of first two).
        assert_eq!(choice.subblock_size, 1);
        refiner.split(&choice).unwrap();
        let after = canonical_partition(&refiner.current_blocks());
        // a has a predecessor pair {b,c}, both alike, so nothing splits.
        assert_eq!(before, after);
        refiner.audit().unwrap();
    }

    #[test]
    fn six_state_example_fully_separates() {
        let enc = parse_coalgebra(SHAPES).unwrap();
        let outcome = refine(&enc).unwrap();
        let blocks = root_blocks(&enc, &outcome.partition);
        assert_eq!(blocks.len(), 6, "{blocks:?}");
        assert!(blocks.iter().all(|b| b.len() == 1));
    }

    #[test]
    fn probabilistic_chain_with_no_observations_stays_whole() {
        // No state carries any observable output, so everything is
        // behaviourally equivalent regardless of the branching.
        let enc = parse_coalgebra(
            "functor D(X)\nstate x = {y: 1/2, z: 1/2}\nstate y = {x: 1}\nstate z = {x: 1}\n",
        )
        .unwrap();
        let outcome = refine(&enc).unwrap();
        assert_eq!(outcome.partition.len(), 1);
        assert_eq!(outcome.partition[0].len(), 3);
    }

    #[test]
    fn weighted_states_split_by_exact_weights() {
        let enc = parse_coalgebra(
            "functor {o} x R(X)\n\
             state a = (o, {b: 1/2, c: 1/2})\n\
             state b = (o, {a: 1})\n\
             state c = (o, {a: 2})\n",
        )
        .unwrap();
        let outcome = refine(&enc).unwrap();
        let blocks = root_blocks(&enc, &outcome.partition);
        // b and c have different total mass, which separates them and in
        // turn distinguishes nothing further about a.
        assert!(blocks.contains(&vec!["b".to_string()]));
        assert!(blocks.contains(&vec!["c".to_string()]));
    }

    #[test]
    fn splitter_entry_counter_is_logarithmically_bounded() {
        let enc = parse_coalgebra(SHAPES).unwrap();
        let outcome = refine(&enc).unwrap();
        let n = enc.n_states() as f64;
        let bound = n.log2().floor() as u32;
        assert!(outcome.stats.max_splitter_entries <= bound);
    }

    #[test]
    fn select_takes_the_smaller_of_the_first_two_members() {
        // Five states with no successors, one with successors: blocks of
        // sizes 5 and 1 in one compound block.
        let enc = parse_coalgebra(
            "functor P(X)\nstate a = {}\nstate b = {}\nstate c = {}\nstate d = {}\n\
             state e = {}\nstate f = {a}\n",
        )
        .unwrap();
        let mut refiner = Refiner::new(&enc).unwrap();
        let choice = refiner.select_splitter().unwrap();
        assert_eq!(choice.subblock_size, 1);
        assert_eq!(choice.compound_size, 6);
        assert_eq!(refiner.partition().elements(choice.subblock), &[5]);
    }

    #[test]
    fn selection_never_exceeds_half_the_compound_block() {
        let enc = parse_coalgebra(SHAPES).unwrap();
        let mut refiner = Refiner::new(&enc).unwrap();
        while let Some(choice) = refiner.select_splitter() {
            assert!(2 * choice.subblock_size <= choice.compound_size);
            refiner.split(&choice).unwrap();
        }
        assert!(refiner.compounds().worklist_is_empty());
    }

    #[test]
    fn uniform_leavers_split_a_block_into_exactly_two() {
        // Block {p,q,r}: p and q point into the splitter-to-be, r does not.
        let enc = parse_coalgebra(
            "functor P(X)\nstate p = {t}\nstate q = {t}\nstate r = {u}\n\
             state t = {}\nstate u = {p}\n",
        )
        .unwrap();
        let mut refiner = Refiner::new(&enc).unwrap();
        // Initial blocks: {p,q,r,u} (nonempty) and {t} (empty).
        let nonempty = refiner.partition().block_of(0);
        assert_eq!(refiner.partition().size(nonempty), 4);
        let t_block = refiner.partition().block_of(3);
        let q = refiner.partition().qblock_of_block(t_block);
        let choice = refiner.force_splitter(t_block, q).unwrap();
        refiner.split(&choice).unwrap();
        // p and q left their block together; r and u stayed.
        assert_eq!(
            refiner.partition().block_of(0),
            refiner.partition().block_of(1)
        );
        assert_ne!(
            refiner.partition().block_of(0),
            refiner.partition().block_of(2)
        );
        assert_eq!(
            refiner.partition().block_of(2),
            refiner.partition().block_of(4)
        );
        assert_eq!(refiner.partition().size(refiner.partition().block_of(0)), 2);
        refiner.audit().unwrap();
    }

    #[test]
    fn cells_recycle_when_a_state_points_only_into_the_splitter() {
        // x and b send every edge into the first splitter {a} (their cells
        // recycle in place); y keeps an edge outside it (fresh cell). The
        // per-split audits recompute every cell from scratch.
        let enc = parse_coalgebra(
            "functor P(X)\nstate x = {a}\nstate y = {a, b}\nstate a = {}\nstate b = {a}\n",
        )
        .unwrap();
        let outcome = refine(&enc).unwrap();
        let blocks = root_blocks(&enc, &outcome.partition);
        assert_eq!(
            blocks,
            vec![
                vec!["a".to_string()],
                vec!["b".to_string(), "x".into()],
                vec!["y".to_string()],
            ]
        );
    }

    #[test]
    fn forced_splitters_are_validated() {
        let enc = parse_coalgebra(
            "functor P(X)\nstate a = {}\nstate b = {}\nstate c = {}\nstate d = {a}\n",
        )
        .unwrap();
        let mut refiner = Refiner::new(&enc).unwrap();
        // A block larger than half of its compound block is rejected.
        let big = refiner.partition().block_of(0);
        assert_eq!(refiner.partition().size(big), 3);
        let q = refiner.partition().qblock_of_block(big);
        assert!(refiner.force_splitter(big, q).is_err());
        // After detaching a subblock, pairing it with the compound block it
        // just left is rejected too.
        let choice = refiner.select_splitter().unwrap();
        refiner.split(&choice).unwrap();
        assert!(refiner
            .force_splitter(choice.subblock, choice.compound)
            .is_err());
    }
}
