//! The refinement-interface registry.
//!
//! A refinement interface describes one transition type (powerset, bag,
//! group-weighted, probability distribution, or bounded-arity polynomial)
//! through two operations the engine needs:
//!
//! * `init` computes, from a state's type value and the bag of all its edge
//!   labels, the weight of the whole carrier seen as a single block;
//! * `update` takes the bag of labels of a state's edges into the current
//!   subblock `S` together with the stored weight for the enclosing compound
//!   block `C`, and returns the weight for `S`, the three-way membership
//!   value, and the weight for `C \ S`.
//!
//! Three-way membership values are read as: component 0 counts what lies
//! outside `C`, component 1 what lies in `C` but not `S`, component 2 what
//! lies in `S`.
//!
//! Values compare through their canonical byte encodings, so a comparison
//! costs O(encoded size): constant for flags, counts and bounded-arity
//! terms, O(bit length) for exact rational weights. The engine's complexity
//! bound treats that as constant, which holds as long as weights stay of
//! bounded size.
//!
//! All operations are pure; interfaces carry no state and may be used from
//! any number of threads.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use smallvec::{smallvec, SmallVec};

use crate::error::{Error, Result};

/// Interned polynomial operation symbol.
pub type SymbolId = u32;

/// Symbol used for the designated junk values of the polynomial interface.
pub const JUNK_SYMBOL: SymbolId = u32::MAX;

/// The registered transition types.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Interface {
    Powerset,
    Bag,
    Group,
    Distribution,
    Polynomial,
}

impl Interface {
    pub fn name(&self) -> &'static str {
        match self {
            Interface::Powerset => "powerset",
            Interface::Bag => "bag",
            Interface::Group => "group",
            Interface::Distribution => "distribution",
            Interface::Polynomial => "polynomial",
        }
    }
}

/// Edge label. Which variant is legal depends on the interface of the edge's
/// source sort.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Label {
    /// Powerset edges carry no information.
    Unit,
    /// Argument position of a polynomial edge, 1-based.
    Pos(u32),
    /// Multiplicity of a bag edge.
    Nat(u64),
    /// Weight of a group or distribution edge; always nonzero.
    Rat(Box<BigRational>),
}

impl Label {
    pub fn rat(r: BigRational) -> Label {
        Label::Rat(Box::new(r))
    }
}

/// Canonical one-step observation of a state: its image in `H1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TypeValue {
    /// Powerset: does the state have any successor at all?
    Nonempty(bool),
    /// Bag: total multiplicity.
    Count(u64),
    /// Group: total weight.
    Total(Box<BigRational>),
    /// Distribution: no observable content (totals are always 1).
    Unit,
    /// Polynomial: the operation symbol.
    Symbol(SymbolId),
}

impl TypeValue {
    pub fn total(r: BigRational) -> TypeValue {
        TypeValue::Total(Box::new(r))
    }
}

/// Stored weight of a state against one block: how much of the state's
/// transition structure lies outside versus inside the block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Weight {
    /// Powerset (edge counts) and bag (multiplicity sums).
    Counts { outside: u64, inside: u64 },
    /// Group and distribution: exact rational mass (outside, inside).
    Rats(Box<(BigRational, BigRational)>),
    /// Polynomial: per argument position, 1 when the argument is in the block.
    Term {
        symbol: SymbolId,
        in_block: SmallVec<[u8; 8]>,
    },
}

impl Weight {
    pub fn rats(outside: BigRational, inside: BigRational) -> Weight {
        Weight::Rats(Box::new((outside, inside)))
    }
}

/// Three-way membership value of a state against a subblock `S` inside a
/// compound block `C`; the observation blocks are grouped by.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ThreeValue {
    /// Powerset: is there an edge (outside C, into C\S, into S)?
    Flags(bool, bool, bool),
    /// Bag: multiplicity sums.
    Nats(u64, u64, u64),
    /// Group and distribution: rational mass.
    Rats(Box<(BigRational, BigRational, BigRational)>),
    /// Polynomial: per argument position a value in {0, 1, 2}.
    Term {
        symbol: SymbolId,
        values: SmallVec<[u8; 8]>,
    },
}

impl ThreeValue {
    pub fn rats(out: BigRational, mid: BigRational, sub: BigRational) -> ThreeValue {
        ThreeValue::Rats(Box::new((out, mid, sub)))
    }
}

fn mismatch(iface: Interface, what: &str) -> Error {
    Error::misuse(format!("{} interface got {what}", iface.name()))
}

impl Interface {
    /// Does this interface accept the label kind?
    pub fn accepts_label(&self, label: &Label) -> bool {
        matches!(
            (self, label),
            (Interface::Powerset, Label::Unit)
                | (Interface::Bag, Label::Nat(_))
                | (Interface::Group, Label::Rat(_))
                | (Interface::Distribution, Label::Rat(_))
                | (Interface::Polynomial, Label::Pos(_))
        )
    }

    /// Weight of the whole carrier acting as the single block, computed from
    /// the state's type value and the bag of all its outgoing edge labels.
    pub fn init<'a, I>(&self, ty: &TypeValue, labels: I) -> Result<Weight>
    where
        I: IntoIterator<Item = &'a Label>,
    {
        match self {
            Interface::Powerset => {
                let TypeValue::Nonempty(_) = ty else {
                    return Err(mismatch(*self, "a non-powerset type value"));
                };
                let mut n = 0u64;
                for l in labels {
                    let Label::Unit = l else {
                        return Err(mismatch(*self, "a non-unit label"));
                    };
                    n += 1;
                }
                Ok(Weight::Counts {
                    outside: 0,
                    inside: n,
                })
            }
            Interface::Bag => {
                let TypeValue::Count(_) = ty else {
                    return Err(mismatch(*self, "a non-bag type value"));
                };
                let mut sum = 0u64;
                for l in labels {
                    let Label::Nat(m) = l else {
                        return Err(mismatch(*self, "a non-multiplicity label"));
                    };
                    sum += m;
                }
                Ok(Weight::Counts {
                    outside: 0,
                    inside: sum,
                })
            }
            Interface::Group => {
                let TypeValue::Total(_) = ty else {
                    return Err(mismatch(*self, "a non-group type value"));
                };
                let mut sum = BigRational::zero();
                for l in labels {
                    let Label::Rat(w) = l else {
                        return Err(mismatch(*self, "a non-rational label"));
                    };
                    sum += w.as_ref();
                }
                Ok(Weight::rats(BigRational::zero(), sum))
            }
            Interface::Distribution => {
                let TypeValue::Unit = ty else {
                    return Err(mismatch(*self, "a non-distribution type value"));
                };
                for l in labels {
                    let Label::Rat(_) = l else {
                        return Err(mismatch(*self, "a non-rational label"));
                    };
                }
                // Distributions always have total mass 1.
                Ok(Weight::rats(BigRational::zero(), BigRational::one()))
            }
            Interface::Polynomial => {
                let TypeValue::Symbol(sym) = ty else {
                    return Err(mismatch(*self, "a non-symbol type value"));
                };
                let mut positions: SmallVec<[u32; 8]> = SmallVec::new();
                for l in labels {
                    let Label::Pos(p) = l else {
                        return Err(mismatch(*self, "a non-position label"));
                    };
                    positions.push(*p);
                }
                // Valid encodings label the arguments 1..=arity, each once.
                positions.sort_unstable();
                let consistent = positions
                    .iter()
                    .enumerate()
                    .all(|(i, p)| *p == i as u32 + 1);
                if !consistent {
                    debug_assert!(false, "polynomial argument positions are not 1..=arity");
                    return Ok(Weight::Term {
                        symbol: JUNK_SYMBOL,
                        in_block: smallvec![],
                    });
                }
                Ok(Weight::Term {
                    symbol: *sym,
                    in_block: smallvec![1; positions.len()],
                })
            }
        }
    }

    /// Split the stored weight for the compound block `C` along the subblock
    /// `S`, given the bag of labels of the state's edges into `S`. Returns
    /// the weight for `S`, the three-way membership value, and the weight
    /// for `C \ S` (in that order).
    pub fn update<'a, I>(&self, labels: I, w: &Weight) -> Result<(Weight, ThreeValue, Weight)>
    where
        I: IntoIterator<Item = &'a Label>,
    {
        match self {
            Interface::Powerset => {
                let Weight::Counts { outside, inside } = w else {
                    return Err(mismatch(*self, "a non-count weight"));
                };
                let (r, c) = (*outside, *inside);
                let mut n = 0u64;
                for l in labels {
                    let Label::Unit = l else {
                        return Err(mismatch(*self, "a non-unit label"));
                    };
                    n += 1;
                }
                if n > c {
                    // Designated junk value; unreachable on valid encodings.
                    debug_assert!(false, "more edges into the subblock than into its compound");
                    let zero = Weight::Counts {
                        outside: 0,
                        inside: 0,
                    };
                    return Ok((zero.clone(), ThreeValue::Flags(false, false, false), zero));
                }
                let mid = c - n;
                Ok((
                    Weight::Counts {
                        outside: r + mid,
                        inside: n,
                    },
                    ThreeValue::Flags(r > 0, mid > 0, n > 0),
                    Weight::Counts {
                        outside: r + n,
                        inside: mid,
                    },
                ))
            }
            Interface::Bag => {
                let Weight::Counts { outside, inside } = w else {
                    return Err(mismatch(*self, "a non-count weight"));
                };
                let (r, c) = (*outside, *inside);
                let mut s = 0u64;
                for l in labels {
                    let Label::Nat(m) = l else {
                        return Err(mismatch(*self, "a non-multiplicity label"));
                    };
                    s += m;
                }
                if s > c {
                    debug_assert!(
                        false,
                        "more multiplicity into the subblock than its compound"
                    );
                    let zero = Weight::Counts {
                        outside: 0,
                        inside: 0,
                    };
                    return Ok((zero.clone(), ThreeValue::Nats(0, 0, 0), zero));
                }
                let mid = c - s;
                Ok((
                    Weight::Counts {
                        outside: r + mid,
                        inside: s,
                    },
                    ThreeValue::Nats(r, mid, s),
                    Weight::Counts {
                        outside: r + s,
                        inside: mid,
                    },
                ))
            }
            Interface::Group => {
                let Weight::Rats(rc) = w else {
                    return Err(mismatch(*self, "a non-rational weight"));
                };
                let (r, c) = (&rc.0, &rc.1);
                let mut s = BigRational::zero();
                for l in labels {
                    let Label::Rat(m) = l else {
                        return Err(mismatch(*self, "a non-rational label"));
                    };
                    s += m.as_ref();
                }
                let mid = c - &s;
                Ok((
                    Weight::rats(r + &mid, s.clone()),
                    ThreeValue::rats(r.clone(), mid.clone(), s.clone()),
                    Weight::rats(r + &s, mid),
                ))
            }
            Interface::Distribution => {
                let Weight::Rats(rc) = w else {
                    return Err(mismatch(*self, "a non-rational weight"));
                };
                let (r, c) = (&rc.0, &rc.1);
                let mut s = BigRational::zero();
                for l in labels {
                    let Label::Rat(m) = l else {
                        return Err(mismatch(*self, "a non-rational label"));
                    };
                    s += m.as_ref();
                }
                let mid = c - &s;
                if mid.is_negative() || r.is_negative() || s.is_negative() {
                    // Designated junk distribution; unreachable on valid encodings.
                    debug_assert!(false, "distribution weights left the simplex");
                    let v = ThreeValue::rats(
                        BigRational::zero(),
                        BigRational::zero(),
                        BigRational::one(),
                    );
                    return Ok((
                        Weight::rats(BigRational::zero(), BigRational::one()),
                        v,
                        Weight::rats(BigRational::one(), BigRational::zero()),
                    ));
                }
                Ok((
                    Weight::rats(r + &mid, s.clone()),
                    ThreeValue::rats(r.clone(), mid.clone(), s.clone()),
                    Weight::rats(r + &s, mid),
                ))
            }
            Interface::Polynomial => {
                let Weight::Term { symbol, in_block } = w else {
                    return Err(mismatch(*self, "a non-term weight"));
                };
                let mut values: SmallVec<[u8; 8]> = in_block.clone();
                for l in labels {
                    let Label::Pos(p) = l else {
                        return Err(mismatch(*self, "a non-position label"));
                    };
                    let Some(v) = values.get_mut(*p as usize - 1) else {
                        return Err(mismatch(*self, "an argument position beyond the arity"));
                    };
                    // An argument in the subblock is in particular in the compound.
                    debug_assert_eq!(*v, 1, "subblock argument was not inside the compound");
                    *v += 1;
                }
                let sub: SmallVec<[u8; 8]> = values.iter().map(|v| (*v == 2) as u8).collect();
                let rest: SmallVec<[u8; 8]> = values.iter().map(|v| (*v == 1) as u8).collect();
                Ok((
                    Weight::Term {
                        symbol: *symbol,
                        in_block: sub,
                    },
                    ThreeValue::Term {
                        symbol: *symbol,
                        values,
                    },
                    Weight::Term {
                        symbol: *symbol,
                        in_block: rest,
                    },
                ))
            }
        }
    }
}

fn push_bigint(out: &mut Vec<u8>, n: &BigInt) {
    let bytes = n.to_signed_bytes_be();
    out.extend_from_slice(&(bytes.len() as u32).to_be_bytes());
    out.extend_from_slice(&bytes);
}

fn push_rational(out: &mut Vec<u8>, r: &BigRational) {
    push_bigint(out, r.numer());
    push_bigint(out, r.denom());
}

/// Append the canonical byte encoding of a three-way value. Equal values get
/// identical encodings; distinct values of one interface get distinct ones.
pub fn encode_h3_into(v: &ThreeValue, out: &mut Vec<u8>) {
    match v {
        ThreeValue::Flags(a, b, c) => {
            out.push(*a as u8 | (*b as u8) << 1 | (*c as u8) << 2);
        }
        ThreeValue::Nats(a, b, c) => {
            out.extend_from_slice(&a.to_be_bytes());
            out.extend_from_slice(&b.to_be_bytes());
            out.extend_from_slice(&c.to_be_bytes());
        }
        ThreeValue::Rats(t) => {
            push_rational(out, &t.0);
            push_rational(out, &t.1);
            push_rational(out, &t.2);
        }
        ThreeValue::Term { symbol, values } => {
            out.extend_from_slice(&symbol.to_be_bytes());
            out.extend_from_slice(values);
        }
    }
}

/// Canonical byte encoding of a three-way value.
pub fn encode_h3(v: &ThreeValue) -> Vec<u8> {
    let mut out = Vec::new();
    encode_h3_into(v, &mut out);
    out
}

/// Append the canonical byte encoding of a type value.
pub fn encode_type_into(ty: &TypeValue, out: &mut Vec<u8>) {
    match ty {
        TypeValue::Nonempty(b) => out.push(*b as u8),
        TypeValue::Count(n) => out.extend_from_slice(&n.to_be_bytes()),
        TypeValue::Total(r) => push_rational(out, r),
        TypeValue::Unit => {}
        TypeValue::Symbol(s) => out.extend_from_slice(&s.to_be_bytes()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn rats(pairs: &[(i64, i64)]) -> Vec<Label> {
        pairs.iter().map(|(n, d)| Label::rat(rat(*n, *d))).collect()
    }

    #[test]
    fn group_init_sums_labels() {
        let labels = rats(&[(3, 1), (5, 1)]);
        let w = Interface::Group
            .init(&TypeValue::total(rat(8, 1)), labels.iter())
            .unwrap();
        assert_eq!(w, Weight::rats(rat(0, 1), rat(8, 1)));
    }

    #[test]
    fn group_init_empty_sum() {
        let w = Interface::Group
            .init(&TypeValue::total(rat(0, 1)), [].iter())
            .unwrap();
        assert_eq!(w, Weight::rats(rat(0, 1), rat(0, 1)));
    }

    #[test]
    fn powerset_init_counts_edges() {
        let labels = [Label::Unit, Label::Unit, Label::Unit];
        let w = Interface::Powerset
            .init(&TypeValue::Nonempty(true), labels.iter())
            .unwrap();
        assert_eq!(
            w,
            Weight::Counts {
                outside: 0,
                inside: 3
            }
        );
    }

    #[test]
    fn group_update_redistributes_mass() {
        let labels = rats(&[(2, 1), (3, 1)]);
        let w = Weight::rats(rat(1, 1), rat(12, 1));
        let (ws, v, wr) = Interface::Group.update(labels.iter(), &w).unwrap();
        assert_eq!(ws, Weight::rats(rat(8, 1), rat(5, 1)));
        assert_eq!(v, ThreeValue::rats(rat(1, 1), rat(7, 1), rat(5, 1)));
        assert_eq!(wr, Weight::rats(rat(6, 1), rat(7, 1)));
    }

    #[test]
    fn powerset_update_examples() {
        let labels = [Label::Unit, Label::Unit];
        let w = Weight::Counts {
            outside: 1,
            inside: 3,
        };
        let (ws, v, wr) = Interface::Powerset.update(labels.iter(), &w).unwrap();
        assert_eq!(
            ws,
            Weight::Counts {
                outside: 2,
                inside: 2
            }
        );
        assert_eq!(v, ThreeValue::Flags(true, true, true));
        assert_eq!(
            wr,
            Weight::Counts {
                outside: 3,
                inside: 1
            }
        );
    }

    #[test]
    fn polynomial_update_marks_subblock_positions() {
        let w = Weight::Term {
            symbol: 7,
            in_block: smallvec![1, 1],
        };
        let labels = [Label::Pos(1)];
        let (ws, v, wr) = Interface::Polynomial.update(labels.iter(), &w).unwrap();
        assert_eq!(
            v,
            ThreeValue::Term {
                symbol: 7,
                values: smallvec![2, 1]
            }
        );
        assert_eq!(
            ws,
            Weight::Term {
                symbol: 7,
                in_block: smallvec![1, 0]
            }
        );
        assert_eq!(
            wr,
            Weight::Term {
                symbol: 7,
                in_block: smallvec![0, 1]
            }
        );
    }

    #[test]
    fn update_with_no_labels_keeps_the_compound_weight() {
        let w = Weight::rats(rat(1, 2), rat(1, 2));
        let (ws, v, wr) = Interface::Distribution.update([].iter(), &w).unwrap();
        assert_eq!(ws, Weight::rats(rat(1, 1), rat(0, 1)));
        assert_eq!(v, ThreeValue::rats(rat(1, 2), rat(1, 2), rat(0, 1)));
        assert_eq!(wr, w);
    }

    #[test]
    fn label_kind_mismatch_is_reported() {
        let labels = [Label::Unit];
        let err = Interface::Group
            .init(&TypeValue::total(rat(0, 1)), labels.iter())
            .unwrap_err();
        assert!(matches!(err, crate::error::Error::Misuse(_)));

        let w = Weight::Counts {
            outside: 0,
            inside: 1,
        };
        let err = Interface::Powerset
            .update(rats(&[(1, 2)]).iter(), &w)
            .unwrap_err();
        assert!(matches!(err, crate::error::Error::Misuse(_)));
    }

    #[test]
    fn encode_h3_distinguishes_values() {
        let a = encode_h3(&ThreeValue::Flags(true, false, true));
        let b = encode_h3(&ThreeValue::Flags(true, true, true));
        assert_eq!(a.len(), 1);
        assert_ne!(a, b);

        let zeros = ThreeValue::rats(rat(0, 1), rat(0, 1), rat(0, 1));
        assert_eq!(encode_h3(&zeros), encode_h3(&zeros.clone()));

        let t1 = encode_h3(&ThreeValue::Term {
            symbol: 3,
            values: smallvec![2, 1],
        });
        let t2 = encode_h3(&ThreeValue::Term {
            symbol: 3,
            values: smallvec![1, 2],
        });
        assert_ne!(t1, t2);
    }

    #[test]
    fn group_update_conserves_mass() {
        let labels = rats(&[(1, 3), (-2, 5)]);
        let w = Weight::rats(rat(7, 2), rat(-1, 6));
        let total = rat(7, 2) + rat(-1, 6);
        let (ws, _, wr) = Interface::Group.update(labels.iter(), &w).unwrap();
        for part in [ws, wr] {
            let Weight::Rats(rc) = part else {
                unreachable!()
            };
            assert_eq!(&rc.0 + &rc.1, total);
        }
    }
}
