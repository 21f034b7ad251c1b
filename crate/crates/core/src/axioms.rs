//! Brute-force verification of the refinement-interface contracts.
//!
//! For terms over a small carrier, a direct evaluator computes the type
//! value, the edge-label bag, and the weights and three-way observations
//! from the term itself. `check_interface_axioms` then confirms that `init`
//! and `update` reproduce those values for every term and every nested pair
//! `S ⊆ C` of carrier subsets: `init` must return the weight against the
//! whole carrier, and `update` applied to the labels into `S` and the weight
//! against `C` must return the weight against `S`, the three-way
//! observation, and the weight against `C \ S`.
//!
//! Powerset and polynomial terms are enumerated exhaustively; weighted terms
//! are sampled densely at random (seeded, so reports are reproducible).

use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::error::Result;
use crate::interface::{Interface, Label, SymbolId, ThreeValue, TypeValue, Weight};

/// A term over the carrier `0..k` in the brute-force evaluator's own
/// representation.
#[derive(Debug, Clone, PartialEq)]
pub enum TestTerm {
    /// Powerset: membership per carrier element.
    Set(Vec<bool>),
    /// Bag: multiplicity per carrier element.
    Multi(Vec<u64>),
    /// Group or distribution: weight per carrier element (zero = absent).
    Weighted(Vec<BigRational>),
    /// Polynomial: an operation symbol applied to carrier elements.
    Op { symbol: SymbolId, args: Vec<u32> },
}

impl TestTerm {
    fn type_value(&self, iface: Interface) -> TypeValue {
        match self {
            TestTerm::Set(elems) => TypeValue::Nonempty(elems.iter().any(|b| *b)),
            TestTerm::Multi(mult) => TypeValue::Count(mult.iter().sum()),
            TestTerm::Weighted(ws) => match iface {
                Interface::Distribution => TypeValue::Unit,
                _ => TypeValue::total(ws.iter().sum()),
            },
            TestTerm::Op { symbol, .. } => TypeValue::Symbol(*symbol),
        }
    }

    /// The bag of all edge labels of the term.
    fn labels(&self) -> Vec<Label> {
        self.labels_into(&|_| true)
    }

    /// The bag of labels of the edges into the set selected by `sel`.
    fn labels_into(&self, sel: &dyn Fn(u32) -> bool) -> Vec<Label> {
        match self {
            TestTerm::Set(elems) => elems
                .iter()
                .enumerate()
                .filter(|(y, b)| **b && sel(*y as u32))
                .map(|_| Label::Unit)
                .collect(),
            TestTerm::Multi(mult) => mult
                .iter()
                .enumerate()
                .filter(|(y, m)| **m > 0 && sel(*y as u32))
                .map(|(_, m)| Label::Nat(*m))
                .collect(),
            TestTerm::Weighted(ws) => ws
                .iter()
                .enumerate()
                .filter(|(y, w)| !w.is_zero() && sel(*y as u32))
                .map(|(_, w)| Label::rat(w.clone()))
                .collect(),
            TestTerm::Op { args, .. } => args
                .iter()
                .enumerate()
                .filter(|(_, a)| sel(**a))
                .map(|(i, _)| Label::Pos(i as u32 + 1))
                .collect(),
        }
    }

    /// The weight of the term against the set selected by `sel`, computed
    /// directly.
    fn weight(&self, iface: Interface, sel: &dyn Fn(u32) -> bool) -> Weight {
        match self {
            TestTerm::Set(elems) => {
                let inside = elems
                    .iter()
                    .enumerate()
                    .filter(|(y, b)| **b && sel(*y as u32))
                    .count() as u64;
                let outside = elems.iter().filter(|b| **b).count() as u64 - inside;
                Weight::Counts { outside, inside }
            }
            TestTerm::Multi(mult) => {
                let mut outside = 0u64;
                let mut inside = 0u64;
                for (y, m) in mult.iter().enumerate() {
                    if sel(y as u32) {
                        inside += m;
                    } else {
                        outside += m;
                    }
                }
                Weight::Counts { outside, inside }
            }
            TestTerm::Weighted(ws) => {
                let mut outside = BigRational::zero();
                let mut inside = BigRational::zero();
                for (y, w) in ws.iter().enumerate() {
                    if sel(y as u32) {
                        inside += w;
                    } else {
                        outside += w;
                    }
                }
                let _ = iface;
                Weight::rats(outside, inside)
            }
            TestTerm::Op { symbol, args } => Weight::Term {
                symbol: *symbol,
                in_block: args.iter().map(|a| sel(*a) as u8).collect(),
            },
        }
    }

    /// The three-way observation against `S ⊆ C`, computed directly:
    /// `chi[y] = 2` for `y ∈ S`, `1` for `y ∈ C \ S`, `0` outside `C`.
    fn three(&self, chi: &[u8]) -> ThreeValue {
        match self {
            TestTerm::Set(elems) => {
                let mut any = [false; 3];
                for (y, b) in elems.iter().enumerate() {
                    if *b {
                        any[chi[y] as usize] = true;
                    }
                }
                ThreeValue::Flags(any[0], any[1], any[2])
            }
            TestTerm::Multi(mult) => {
                let mut sums = [0u64; 3];
                for (y, m) in mult.iter().enumerate() {
                    sums[chi[y] as usize] += m;
                }
                ThreeValue::Nats(sums[0], sums[1], sums[2])
            }
            TestTerm::Weighted(ws) => {
                let mut sums = [
                    BigRational::zero(),
                    BigRational::zero(),
                    BigRational::zero(),
                ];
                for (y, w) in ws.iter().enumerate() {
                    sums[chi[y] as usize] += w;
                }
                let [a, b, c] = sums;
                ThreeValue::rats(a, b, c)
            }
            TestTerm::Op { symbol, args } => ThreeValue::Term {
                symbol: *symbol,
                values: args.iter().map(|a| chi[*a as usize]).collect(),
            },
        }
    }
}

/// Outcome of one axiom-checking run.
#[derive(Debug, Clone)]
pub struct AxiomReport {
    pub interface: Interface,
    pub carrier: usize,
    pub terms_checked: u64,
    pub checks: u64,
    pub counterexample: Option<String>,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.counterexample.is_none()
    }
}

fn small_rational(rng: &mut StdRng) -> BigRational {
    let numer = rng.random_range(-2i64..=2);
    let denom = rng.random_range(1i64..=3);
    BigRational::new(numer.into(), denom.into())
}

fn sample_term(iface: Interface, carrier: usize, rng: &mut StdRng) -> TestTerm {
    match iface {
        Interface::Bag => {
            TestTerm::Multi((0..carrier).map(|_| rng.random_range(0..=3u64)).collect())
        }
        Interface::Group => TestTerm::Weighted((0..carrier).map(|_| small_rational(rng)).collect()),
        Interface::Distribution => {
            // Positive weights on a nonempty support, normalized exactly.
            let mut ws: Vec<BigRational> = (0..carrier)
                .map(|_| {
                    if rng.random_range(0..3u8) == 0 {
                        BigRational::zero()
                    } else {
                        BigRational::new(
                            rng.random_range(1i64..=4).into(),
                            rng.random_range(1i64..=4).into(),
                        )
                    }
                })
                .collect();
            if ws.iter().all(|w| w.is_zero()) {
                let y = rng.random_range(0..carrier);
                ws[y] = BigRational::one();
            }
            let total: BigRational = ws.iter().sum();
            for w in &mut ws {
                *w /= total.clone();
            }
            TestTerm::Weighted(ws)
        }
        Interface::Powerset | Interface::Polynomial => {
            unreachable!("enumerated exhaustively")
        }
    }
}

fn enumerate_terms(iface: Interface, carrier: usize) -> Vec<TestTerm> {
    match iface {
        Interface::Powerset => (0..(1u32 << carrier))
            .map(|mask| TestTerm::Set((0..carrier).map(|y| mask & (1 << y) != 0).collect()))
            .collect(),
        Interface::Polynomial => {
            // A fixed test signature with arities 0..=3.
            let mut terms = Vec::new();
            for (symbol, arity) in [(10u32, 0usize), (11, 1), (12, 2), (13, 3)] {
                if carrier == 0 && arity > 0 {
                    continue;
                }
                let combos = (carrier.max(1)).pow(arity as u32);
                for code in 0..combos {
                    let mut c = code;
                    let args: Vec<u32> = (0..arity)
                        .map(|_| {
                            let a = (c % carrier.max(1)) as u32;
                            c /= carrier.max(1);
                            a
                        })
                        .collect();
                    terms.push(TestTerm::Op { symbol, args });
                }
            }
            terms
        }
        _ => unreachable!("sampled instead"),
    }
}

/// Enumerate or sample the nested pairs `S ⊆ C` as per-element classes
/// (0 outside, 1 in `C \ S`, 2 in `S`). Exhaustive up to the limit, which
/// the enumerable interfaces set high enough to cover every chain at
/// carrier 8.
fn chains(carrier: usize, exhaustive_limit: usize, rng: &mut StdRng) -> Vec<Vec<u8>> {
    let total = 3usize.pow(carrier as u32);
    if total <= exhaustive_limit {
        (0..total)
            .map(|code| {
                let mut c = code;
                (0..carrier)
                    .map(|_| {
                        let v = (c % 3) as u8;
                        c /= 3;
                        v
                    })
                    .collect()
            })
            .collect()
    } else {
        let mut out = vec![vec![0u8; carrier], vec![1; carrier], vec![2; carrier]];
        for _ in 0..81 {
            out.push((0..carrier).map(|_| rng.random_range(0..3u8)).collect());
        }
        out
    }
}

type UpdateFn<'f> = &'f dyn Fn(&[Label], &Weight) -> Result<(Weight, ThreeValue, Weight)>;

/// `H(=1)` applied to the middle observation: the induced plain membership
/// weight, used to check that `update(∅)` recovers the block observation.
fn h2_via_middle(v: &ThreeValue) -> Vec<u8> {
    let mut out = Vec::new();
    match v {
        ThreeValue::Flags(a, b, c) => out.extend_from_slice(&[(*a || *c) as u8, *b as u8]),
        ThreeValue::Nats(a, b, c) => {
            out.extend_from_slice(&(a + c).to_be_bytes());
            out.extend_from_slice(&b.to_be_bytes());
        }
        ThreeValue::Rats(t) => {
            let outside = &t.0 + &t.2;
            crate::interface::encode_type_into(&TypeValue::total(outside), &mut out);
            crate::interface::encode_type_into(&TypeValue::total(t.1.clone()), &mut out);
        }
        ThreeValue::Term { symbol, values } => {
            out.extend_from_slice(&symbol.to_be_bytes());
            out.extend(values.iter().map(|v| (*v == 1) as u8));
        }
    }
    out
}

fn h2_of_membership(iface: Interface, t: &TestTerm, in_c: &dyn Fn(u32) -> bool) -> Vec<u8> {
    let mut out = Vec::new();
    match (iface, t) {
        (Interface::Powerset, TestTerm::Set(elems)) => {
            let inside = elems.iter().enumerate().any(|(y, b)| *b && in_c(y as u32));
            let outside = elems.iter().enumerate().any(|(y, b)| *b && !in_c(y as u32));
            out.extend_from_slice(&[outside as u8, inside as u8]);
        }
        _ => match t.weight(iface, in_c) {
            Weight::Counts { outside, inside } => {
                out.extend_from_slice(&outside.to_be_bytes());
                out.extend_from_slice(&inside.to_be_bytes());
            }
            Weight::Rats(oi) => {
                crate::interface::encode_type_into(&TypeValue::total(oi.0.clone()), &mut out);
                crate::interface::encode_type_into(&TypeValue::total(oi.1.clone()), &mut out);
            }
            Weight::Term { symbol, in_block } => {
                out.extend_from_slice(&symbol.to_be_bytes());
                out.extend_from_slice(&in_block);
            }
        },
    }
    out
}

pub(crate) fn check_with(
    iface: Interface,
    carrier: usize,
    samples: usize,
    update: UpdateFn,
) -> AxiomReport {
    let mut report = AxiomReport {
        interface: iface,
        carrier,
        terms_checked: 0,
        checks: 0,
        counterexample: None,
    };
    let mut rng = StdRng::seed_from_u64(0x5eed ^ carrier as u64);
    let (terms, chain_limit) = match iface {
        Interface::Powerset | Interface::Polynomial => (enumerate_terms(iface, carrier), 6561),
        // A distribution needs at least one carrier element to sum to 1.
        Interface::Distribution if carrier == 0 => (Vec::new(), 729),
        _ => (
            (0..samples)
                .map(|_| sample_term(iface, carrier, &mut rng))
                .collect(),
            729,
        ),
    };
    let all_chains = chains(carrier, chain_limit, &mut rng);

    'outer: for t in &terms {
        report.terms_checked += 1;

        // The init contract: weight of the whole carrier as one block.
        let ty = t.type_value(iface);
        let want = t.weight(iface, &|_| true);
        match iface.init(&ty, t.labels().iter()) {
            Ok(got) if got == want => {}
            Ok(got) => {
                report.counterexample = Some(format!(
                    "init on {t:?}: got {got:?}, the carrier weight is {want:?}"
                ));
                break 'outer;
            }
            Err(e) => {
                report.counterexample = Some(format!("init on {t:?} failed: {e}"));
                break 'outer;
            }
        }
        report.checks += 1;

        for chi in &all_chains {
            let in_s = |y: u32| chi[y as usize] == 2;
            let in_c = |y: u32| chi[y as usize] >= 1;
            let in_rest = |y: u32| chi[y as usize] == 1;
            let labels_s = t.labels_into(&in_s);
            let w_c = t.weight(iface, &in_c);
            let want = (
                t.weight(iface, &in_s),
                t.three(chi),
                t.weight(iface, &in_rest),
            );
            match update(&labels_s, &w_c) {
                Ok(got) if got == want => {}
                Ok(got) => {
                    report.counterexample = Some(format!(
                        "update on {t:?} with classes {chi:?}: got {got:?}, want {want:?}"
                    ));
                    break 'outer;
                }
                Err(e) => {
                    report.counterexample =
                        Some(format!("update on {t:?} with classes {chi:?} failed: {e}"));
                    break 'outer;
                }
            }
            report.checks += 1;

            // update(∅) against C recovers the plain membership observation.
            match update(&[], &w_c) {
                Ok((_, middle, _)) => {
                    if h2_via_middle(&middle) != h2_of_membership(iface, t, &in_c) {
                        report.counterexample = Some(format!(
                            "update(∅) on {t:?} does not recover the membership observation \
                             for classes {chi:?}"
                        ));
                        break 'outer;
                    }
                }
                Err(e) => {
                    report.counterexample = Some(format!("update(∅) on {t:?} failed: {e}"));
                    break 'outer;
                }
            }
            report.checks += 1;
        }
    }
    report
}

/// Exhaustively (powerset, polynomial) or by dense seeded sampling
/// (weighted) verify both interface contracts over the carrier `0..carrier`,
/// with `samples` sampled terms for the weighted interfaces. Returns the
/// first counterexample, if any.
pub fn check_interface_axioms(iface: Interface, carrier: usize, samples: usize) -> AxiomReport {
    assert!(carrier <= 8, "brute-force checking wants a small carrier");
    check_with(iface, carrier, samples, &|labels, w| {
        iface.update(labels.iter(), w)
    })
}

/// All registered interfaces, for checkers and test matrices.
pub const ALL_INTERFACES: [Interface; 5] = [
    Interface::Powerset,
    Interface::Bag,
    Interface::Group,
    Interface::Distribution,
    Interface::Polynomial,
];
