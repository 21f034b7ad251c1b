//! Naive fixed-point partition refinement, used as an independent
//! correctness oracle.
//!
//! Starting from the by-sort-and-type grouping, every round recomputes each
//! state's one-step signature against the current block assignment from
//! scratch and regroups all states by it, until the block count stops
//! growing. Rounds only ever refine, so count stability is convergence. The
//! oracle deliberately shares no machinery with the optimized engine beyond
//! the encoding itself: signatures are rebuilt per round, grouping is a
//! plain sort.

use num_rational::BigRational;
use num_traits::Zero;

use crate::coalgebra::Encoding;
use crate::interface::{Interface, Label};
use crate::StateId;

/// Canonical byte form of one state's one-step behaviour under a block
/// assignment: the sort and type value followed by the per-interface view of
/// the successor blocks (sets of block ids, accumulated weights per block,
/// or the argument-position block vector).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Signature(pub Vec<u8>);

/// One-step signature of `x` when every state is identified with its block
/// in `assignment`. Weights to merged targets accumulate; accumulated zero
/// weights disappear entirely.
pub fn signature(enc: &Encoding, x: StateId, assignment: &[u32]) -> Signature {
    let mut bytes = Vec::new();
    enc.type_key(x, &mut bytes);
    match enc.plan.interface(enc.sort_of[x as usize]) {
        Interface::Powerset => {
            let mut blocks: Vec<u32> = enc
                .out_edges(x)
                .map(|e| assignment[enc.edges[e].1 as usize])
                .collect();
            blocks.sort_unstable();
            blocks.dedup();
            for b in blocks {
                bytes.extend_from_slice(&b.to_be_bytes());
            }
        }
        Interface::Bag => {
            let mut sums: Vec<(u32, u64)> = Vec::new();
            for e in enc.out_edges(x) {
                let Label::Nat(m) = &enc.labels[e] else {
                    unreachable!("validated at parse time");
                };
                let b = assignment[enc.edges[e].1 as usize];
                match sums.iter_mut().find(|(bb, _)| *bb == b) {
                    Some((_, acc)) => *acc += m,
                    None => sums.push((b, *m)),
                }
            }
            sums.sort_unstable();
            for (b, s) in sums {
                bytes.extend_from_slice(&b.to_be_bytes());
                bytes.extend_from_slice(&s.to_be_bytes());
            }
        }
        Interface::Group | Interface::Distribution => {
            let mut sums: Vec<(u32, BigRational)> = Vec::new();
            for e in enc.out_edges(x) {
                let Label::Rat(w) = &enc.labels[e] else {
                    unreachable!("validated at parse time");
                };
                let b = assignment[enc.edges[e].1 as usize];
                match sums.iter_mut().find(|(bb, _)| *bb == b) {
                    Some((_, acc)) => *acc += w.as_ref(),
                    None => sums.push((b, w.as_ref().clone())),
                }
            }
            sums.retain(|(_, s)| !s.is_zero());
            sums.sort_by_key(|a| a.0);
            for (b, s) in sums {
                bytes.extend_from_slice(&b.to_be_bytes());
                crate::interface::encode_type_into(
                    &crate::interface::TypeValue::total(s),
                    &mut bytes,
                );
            }
        }
        Interface::Polynomial => {
            for e in enc.out_edges(x) {
                bytes.extend_from_slice(&assignment[enc.edges[e].1 as usize].to_be_bytes());
            }
        }
    }
    Signature(bytes)
}

fn group_by_signatures(sigs: &[Signature]) -> (Vec<u32>, usize) {
    let mut order: Vec<StateId> = (0..sigs.len() as StateId).collect();
    order.sort_by(|a, b| sigs[*a as usize].cmp(&sigs[*b as usize]));
    let mut assignment = vec![0u32; sigs.len()];
    let mut next = 0u32;
    for (i, x) in order.iter().enumerate() {
        if i > 0 && sigs[*x as usize] != sigs[order[i - 1] as usize] {
            next += 1;
        }
        assignment[*x as usize] = next;
    }
    let count = if sigs.is_empty() {
        0
    } else {
        next as usize + 1
    };
    (assignment, count)
}

/// Compute the behavioural-equivalence partition by the naive fixed-point
/// method. At most n rounds, each a full signature pass.
pub fn naive_refine(enc: &Encoding) -> Vec<Vec<StateId>> {
    let n = enc.n_states();
    if n == 0 {
        return Vec::new();
    }
    // Round zero: group by sort and type alone.
    let sigs: Vec<Signature> = (0..n as StateId)
        .map(|x| {
            let mut bytes = Vec::new();
            enc.type_key(x, &mut bytes);
            Signature(bytes)
        })
        .collect();
    let (mut assignment, mut count) = group_by_signatures(&sigs);

    loop {
        let sigs: Vec<Signature> = (0..n as StateId)
            .map(|x| signature(enc, x, &assignment))
            .collect();
        let (next_assignment, next_count) = group_by_signatures(&sigs);
        if next_count == count {
            break;
        }
        assignment = next_assignment;
        count = next_count;
    }

    let mut blocks: Vec<Vec<StateId>> = vec![Vec::new(); count];
    for x in 0..n {
        blocks[assignment[x] as usize].push(x as StateId);
    }
    blocks
}
