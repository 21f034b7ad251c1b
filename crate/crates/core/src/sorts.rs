//! Multi-sorted decomposition of composite system types.
//!
//! Composite types are cut at every powerset/bag/group/distribution node;
//! each cut node becomes its own sort backed by its registry interface, and
//! each maximal polynomial region (products, coproducts, constants,
//! exponents, `X`) becomes one polynomial sort. Sort 0 is the user-visible
//! root sort; `X` always refers back to it. Minimizing the resulting
//! one-layer-per-sort system and restricting to sort 0 yields the same
//! partition as minimizing the composite system directly.

use std::collections::HashMap;

use crate::error::Result;
use crate::functor::FunctorExpr;
use crate::interface::{Interface, SymbolId};
use crate::SortId;

/// Shape of one polynomial region. Holes are the positions where successor
/// states plug in; they are numbered left to right, 1-based, and each hole
/// knows the sort of the states that fill it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PolyShape {
    Hole(SortId),
    Const(Vec<String>),
    Pair(Box<PolyShape>, Box<PolyShape>),
    Sum(Box<PolyShape>, Box<PolyShape>),
    Tuple(Box<PolyShape>, u32),
}

impl PolyShape {
    /// Number of holes, i.e. the arity of every operation symbol of the
    /// region.
    pub fn arity(&self) -> u32 {
        match self {
            PolyShape::Hole(_) => 1,
            PolyShape::Const(_) => 0,
            PolyShape::Pair(a, b) => a.arity() + b.arity(),
            PolyShape::Sum(a, b) => a.arity().max(b.arity()),
            PolyShape::Tuple(a, k) => a.arity() * k,
        }
    }
}

/// One sort of the decomposed system.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sort {
    Power { succ: SortId },
    Bag { succ: SortId },
    Group { succ: SortId },
    Dist { succ: SortId },
    Poly { shape: PolyShape },
}

impl Sort {
    pub fn interface(&self) -> Interface {
        match self {
            Sort::Power { .. } => Interface::Powerset,
            Sort::Bag { .. } => Interface::Bag,
            Sort::Group { .. } => Interface::Group,
            Sort::Dist { .. } => Interface::Distribution,
            Sort::Poly { .. } => Interface::Polynomial,
        }
    }
}

/// The ordered list of sorts of a system type; sort 0 is the root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SortPlan {
    pub sorts: Vec<Sort>,
}

impl SortPlan {
    pub fn interface(&self, sort: SortId) -> Interface {
        self.sorts[sort as usize].interface()
    }
}

/// Interner for polynomial operation symbols, shared by all sorts of one
/// encoding. Symbols compare as small integers.
#[derive(Debug, Default, Clone)]
pub struct SymbolTable {
    by_key: HashMap<Vec<u8>, SymbolId>,
    arities: Vec<u32>,
}

impl SymbolTable {
    pub fn new() -> Self {
        SymbolTable::default()
    }

    pub fn intern(&mut self, key: Vec<u8>, arity: u32) -> SymbolId {
        if let Some(id) = self.by_key.get(&key) {
            debug_assert_eq!(self.arities[*id as usize], arity);
            return *id;
        }
        let id = self.arities.len() as SymbolId;
        self.arities.push(arity);
        self.by_key.insert(key, id);
        id
    }

    pub fn arity(&self, sym: SymbolId) -> u32 {
        self.arities[sym as usize]
    }

    pub fn len(&self) -> usize {
        self.arities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arities.is_empty()
    }
}

fn build(expr: &FunctorExpr, sorts: &mut Vec<Option<Sort>>) -> SortId {
    let id = sorts.len() as SortId;
    sorts.push(None);
    let sort = match expr {
        FunctorExpr::Power(f) => Sort::Power {
            succ: succ_ref(f, sorts),
        },
        FunctorExpr::Bag(f) => Sort::Bag {
            succ: succ_ref(f, sorts),
        },
        FunctorExpr::Group(f) => Sort::Group {
            succ: succ_ref(f, sorts),
        },
        FunctorExpr::Dist(f) => Sort::Dist {
            succ: succ_ref(f, sorts),
        },
        poly => Sort::Poly {
            shape: poly_shape(poly, sorts),
        },
    };
    sorts[id as usize] = Some(sort);
    id
}

/// Sort filling a successor position: `X` refers to the root, everything
/// else becomes a fresh sort.
fn succ_ref(expr: &FunctorExpr, sorts: &mut Vec<Option<Sort>>) -> SortId {
    match expr {
        FunctorExpr::Var => 0,
        other => build(other, sorts),
    }
}

fn poly_shape(expr: &FunctorExpr, sorts: &mut Vec<Option<Sort>>) -> PolyShape {
    match expr {
        FunctorExpr::Var => PolyShape::Hole(0),
        FunctorExpr::Power(_)
        | FunctorExpr::Bag(_)
        | FunctorExpr::Group(_)
        | FunctorExpr::Dist(_) => PolyShape::Hole(build(expr, sorts)),
        FunctorExpr::Product(a, b) => PolyShape::Pair(
            Box::new(poly_shape(a, sorts)),
            Box::new(poly_shape(b, sorts)),
        ),
        FunctorExpr::Coproduct(a, b) => PolyShape::Sum(
            Box::new(poly_shape(a, sorts)),
            Box::new(poly_shape(b, sorts)),
        ),
        FunctorExpr::Constants(ids) => PolyShape::Const(ids.clone()),
        FunctorExpr::Exponent(a, k) => PolyShape::Tuple(Box::new(poly_shape(a, sorts)), *k),
    }
}

/// Decompose a system type into sorts.
pub fn plan_sorts(expr: &FunctorExpr) -> Result<SortPlan> {
    let mut sorts = Vec::new();
    build(expr, &mut sorts);
    Ok(SortPlan {
        sorts: sorts.into_iter().map(Option::unwrap).collect(),
    })
}
