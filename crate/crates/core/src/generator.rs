//! Seeded random system generation for any parseable system type.
//!
//! Branching layers draw their width from a binomial with mean `density`
//! (2·density coin flips); weighted layers draw exact rational weights, with
//! distributions normalized to total exactly 1; polynomial layers pick
//! uniform constants, coproduct sides and successor states. The seed fully
//! determines the output text.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt::Write;

use crate::error::{Error, Result};
use crate::functor::parse_functor;
use crate::sorts::{plan_sorts, PolyShape, Sort, SortPlan};

/// Generation parameters; `density` is the average branching width of
/// powerset/bag/weight-map layers.
#[derive(Debug, Clone)]
pub struct GenConfig {
    pub functor: String,
    pub states: usize,
    pub density: usize,
    /// Magnitude bound for random weight numerators and denominators.
    pub weight_range: u64,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            functor: "P({a,b} x X)".into(),
            states: 10,
            density: 3,
            weight_range: 5,
            seed: 0,
        }
    }
}

struct Gen<'a> {
    plan: &'a SortPlan,
    cfg: &'a GenConfig,
    rng: ChaCha8Rng,
}

impl Gen<'_> {
    fn state_name(&mut self) -> String {
        format!("s{}", self.rng.random_range(0..self.cfg.states))
    }

    /// Binomial(2·density, 1/2) branching width.
    fn width(&mut self) -> usize {
        (0..2 * self.cfg.density)
            .filter(|_| self.rng.random::<bool>())
            .count()
    }

    fn weight(&mut self) -> BigRational {
        let hi = self.cfg.weight_range.max(1) as i64;
        let numer = loop {
            let n = self.rng.random_range(-hi..=hi);
            if n != 0 {
                break n;
            }
        };
        let denom = self.rng.random_range(1..=hi);
        BigRational::new(BigInt::from(numer), BigInt::from(denom))
    }

    /// Distinct successor names, at most `states` of them.
    fn distinct_targets(&mut self, want: usize) -> Vec<String> {
        let want = want.min(self.cfg.states);
        let mut picked: Vec<usize> = Vec::with_capacity(want);
        while picked.len() < want {
            let t = self.rng.random_range(0..self.cfg.states);
            if !picked.contains(&t) {
                picked.push(t);
            }
        }
        picked.into_iter().map(|t| format!("s{t}")).collect()
    }

    fn term(&mut self, sort: u32, out: &mut String) {
        match &self.plan.sorts[sort as usize] {
            Sort::Power { succ } => {
                let succ = *succ;
                out.push('{');
                if succ == 0 {
                    let width = self.width();
                    let names = self.distinct_targets(width);
                    out.push_str(&names.join(","));
                } else {
                    let k = self.width();
                    for i in 0..k {
                        if i > 0 {
                            out.push(',');
                        }
                        self.term(succ, out);
                    }
                }
                out.push('}');
            }
            Sort::Bag { succ } => {
                let succ = *succ;
                out.push('[');
                let k = self.width();
                for i in 0..k {
                    if i > 0 {
                        out.push(',');
                    }
                    if succ == 0 {
                        out.push_str(&self.state_name());
                    } else {
                        self.term(succ, out);
                    }
                }
                out.push(']');
            }
            Sort::Group { succ } => {
                let succ = *succ;
                out.push('{');
                // Distinct keys against a flat successor; composite keys are
                // fresh occurrences and never collide.
                let k = self.width();
                let keys: Vec<String> = if succ == 0 {
                    self.distinct_targets(k)
                } else {
                    (0..k)
                        .map(|_| {
                            let mut s = String::new();
                            self.term(succ, &mut s);
                            s
                        })
                        .collect()
                };
                for (i, key) in keys.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    let w = self.weight();
                    let _ = write!(out, "{key}: {w}");
                }
                out.push('}');
            }
            Sort::Dist { succ } => {
                let succ = *succ;
                out.push('{');
                let k = self.width().max(1);
                let keys: Vec<String> = if succ == 0 {
                    self.distinct_targets(k)
                } else {
                    (0..k)
                        .map(|_| {
                            let mut s = String::new();
                            self.term(succ, &mut s);
                            s
                        })
                        .collect()
                };
                // Positive weights, normalized to total exactly 1.
                let hi = self.cfg.weight_range.max(1) as i64;
                let raw: Vec<BigRational> = keys
                    .iter()
                    .map(|_| {
                        BigRational::new(
                            BigInt::from(self.rng.random_range(1..=hi)),
                            BigInt::from(self.rng.random_range(1..=hi)),
                        )
                    })
                    .collect();
                let total: BigRational = raw.iter().sum();
                debug_assert!(!total.is_zero());
                for (i, (key, w)) in keys.iter().zip(&raw).enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    let _ = write!(out, "{key}: {}", w / &total);
                }
                out.push('}');
            }
            Sort::Poly { shape } => {
                let shape = shape.clone();
                self.poly(&shape, out);
            }
        }
    }

    fn poly(&mut self, shape: &PolyShape, out: &mut String) {
        match shape {
            PolyShape::Hole(succ) => {
                if *succ == 0 {
                    out.push_str(&self.state_name());
                } else {
                    self.term(*succ, out);
                }
            }
            PolyShape::Const(ids) => {
                let i = self.rng.random_range(0..ids.len());
                out.push_str(&ids[i]);
            }
            PolyShape::Pair(a, b) => {
                out.push('(');
                self.poly(a, out);
                out.push(',');
                self.poly(b, out);
                out.push(')');
            }
            PolyShape::Sum(a, b) => {
                if self.rng.random::<bool>() {
                    out.push_str("inl ");
                    self.poly(a, out);
                } else {
                    out.push_str("inr ");
                    self.poly(b, out);
                }
            }
            PolyShape::Tuple(sub, k) => {
                out.push('[');
                for i in 0..*k {
                    if i > 0 {
                        out.push(',');
                    }
                    self.poly(sub, out);
                }
                out.push(']');
            }
        }
    }
}

/// Generate a random system file. Deterministic in the seed.
pub fn generate(cfg: &GenConfig) -> Result<String> {
    if cfg.states == 0 {
        return Err(Error::misuse("cannot generate a system with zero states"));
    }
    if cfg.states > u32::MAX as usize / 2 {
        return Err(Error::misuse("too many states"));
    }
    let expr = parse_functor(&cfg.functor)?;
    let plan = plan_sorts(&expr)?;
    let mut g = Gen {
        plan: &plan,
        cfg,
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
    };
    let mut out = format!("functor {}\n", cfg.functor.trim());
    for s in 0..cfg.states {
        let mut term = String::new();
        g.term(0, &mut term);
        let _ = writeln!(out, "state s{s} = {term}");
    }
    Ok(out)
}
