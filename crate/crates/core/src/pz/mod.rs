//! Polynomial zonotopes over named indeterminates.
//!
//! A polynomial zonotope is the set
//! `{ c + Σ g_i · Π_id x_id^{e_i,id} + Σ h_j · y_j : x, y ∈ [-1, 1] }`.
//! The `g_i` are *dependent* generators (they carry a sparse exponent vector,
//! a [`Monomial`]); the `h_j` are *independent* generators, each with its own
//! anonymous indeterminate. Values are immutable; every operation returns a
//! new set.

mod trig;
mod value;

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;
use core::ops::Mul;

use thiserror::Error;

pub use trig::{cos_sin, trig_remainder_radius, DEFAULT_TRIG_ORDER};
pub use value::PzValue;

/// Generators with magnitude below this are dropped during compaction.
pub const COMPACTION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PzError {
    #[error("interval bound inverted in entry {index}: lower {lower} > upper {upper}")]
    InvertedInterval { index: usize, lower: f64, upper: f64 },
    #[error("slice value {0} outside [-1, 1]")]
    SliceOutOfRange(f64),
    #[error("expected {expected} fresh indeterminates, got {got}")]
    IdCount { expected: usize, got: usize },
    #[error("taylor order must be at least 1")]
    ZeroOrder,
}

/// What an indeterminate stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum IdKind {
    /// Trajectory parameter `k_j`.
    Param,
    /// Time within one time interval.
    Time,
    /// Any other fresh indeterminate (interval conversions, tests).
    Aux,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IndeterminateId {
    pub kind: IdKind,
    pub index: u32,
}

impl IndeterminateId {
    pub const fn param(index: u32) -> Self {
        Self {
            kind: IdKind::Param,
            index,
        }
    }

    pub const fn time(index: u32) -> Self {
        Self {
            kind: IdKind::Time,
            index,
        }
    }

    pub const fn aux(index: u32) -> Self {
        Self {
            kind: IdKind::Aux,
            index,
        }
    }
}

impl fmt::Display for IndeterminateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.kind {
            IdKind::Param => "k",
            IdKind::Time => "t",
            IdKind::Aux => "x",
        };
        write!(f, "{tag}{}", self.index)
    }
}

/// Sparse exponent vector: `(id, exponent)` pairs sorted by id, exponents > 0.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Monomial(Vec<(IndeterminateId, u16)>);

impl Monomial {
    pub fn one() -> Self {
        Self(Vec::new())
    }

    pub fn var(id: IndeterminateId) -> Self {
        Self(alloc::vec![(id, 1)])
    }

    pub fn pow(id: IndeterminateId, exp: u16) -> Self {
        if exp == 0 {
            Self::one()
        } else {
            Self(alloc::vec![(id, exp)])
        }
    }

    /// Builds a monomial from arbitrary pairs; repeated ids multiply.
    pub fn from_pairs(pairs: &[(IndeterminateId, u16)]) -> Self {
        let mut out = Self::one();
        for &(id, e) in pairs {
            out = out.product(&Self::pow(id, e));
        }
        out
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn terms(&self) -> &[(IndeterminateId, u16)] {
        &self.0
    }

    pub fn exponent(&self, id: IndeterminateId) -> u16 {
        self.0
            .binary_search_by(|(i, _)| i.cmp(&id))
            .map(|pos| self.0[pos].1)
            .unwrap_or(0)
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&(_, e)| u32::from(e)).sum()
    }

    pub fn ids(&self) -> impl Iterator<Item = IndeterminateId> + '_ {
        self.0.iter().map(|&(id, _)| id)
    }

    /// Exponents add.
    pub fn product(&self, other: &Self) -> Self {
        let (a, b) = (&self.0, &other.0);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                core::cmp::Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                core::cmp::Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                core::cmp::Ordering::Equal => {
                    out.push((a[i].0, a[i].1 + b[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Self(out)
    }

    /// Removes `id`, returning its exponent (0 if absent).
    pub fn without(&self, id: IndeterminateId) -> (Self, u16) {
        match self.0.binary_search_by(|(i, _)| i.cmp(&id)) {
            Ok(pos) => {
                let mut rest = self.0.clone();
                let (_, e) = rest.remove(pos);
                (Self(rest), e)
            }
            Err(_) => (self.clone(), 0),
        }
    }

    pub fn evaluate(&self, mut value: impl FnMut(IndeterminateId) -> f64) -> f64 {
        self.0
            .iter()
            .map(|&(id, e)| crate::math::powi(value(id), i32::from(e)))
            .product()
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        for (n, (id, e)) in self.0.iter().enumerate() {
            if n > 0 {
                write!(f, "·")?;
            }
            if *e == 1 {
                write!(f, "{id}")?;
            } else {
                write!(f, "{id}^{e}")?;
            }
        }
        Ok(())
    }
}

/// An immutable polynomial zonotope with element type `V`.
///
/// Invariants: dependent generators are sorted by monomial, no monomial
/// repeats, the constant monomial never appears as a generator (it is folded
/// into the center), and no stored generator has magnitude below
/// [`COMPACTION_TOL`].
#[derive(Debug, Clone, PartialEq)]
pub struct PolyZonotope<V: PzValue> {
    center: V,
    dependent: Vec<(Monomial, V)>,
    independent: Vec<V>,
}

impl<V: PzValue> PolyZonotope<V> {
    /// Builds a compacted polynomial zonotope.
    pub fn new(center: V, dependent: Vec<(Monomial, V)>, independent: Vec<V>) -> Self {
        let mut acc: BTreeMap<Monomial, V> = BTreeMap::new();
        let mut center = center;
        for (m, g) in dependent {
            if m.is_one() {
                center += g;
            } else {
                *acc.entry(m).or_insert_with(V::zero) += g;
            }
        }
        let dependent = acc
            .into_iter()
            .filter(|(_, g)| !g.is_zero_within(COMPACTION_TOL))
            .collect();
        let independent = independent
            .into_iter()
            .filter(|g| !g.is_zero_within(COMPACTION_TOL))
            .collect();
        Self {
            center,
            dependent,
            independent,
        }
    }

    pub fn point(center: V) -> Self {
        Self {
            center,
            dependent: Vec::new(),
            independent: Vec::new(),
        }
    }

    /// The interval hull `[lower, upper]` with one fresh degree-1 indeterminate
    /// per entry.
    pub fn from_interval(lower: V, upper: V, fresh: &[IndeterminateId]) -> Result<Self, PzError> {
        let n = V::entry_count();
        if fresh.len() != n {
            return Err(PzError::IdCount {
                expected: n,
                got: fresh.len(),
            });
        }
        for i in 0..n {
            if lower.entry(i) > upper.entry(i) {
                return Err(PzError::InvertedInterval {
                    index: i,
                    lower: lower.entry(i),
                    upper: upper.entry(i),
                });
            }
        }
        let center = (upper + lower) * 0.5;
        let half = (upper - lower) * 0.5;
        let dependent = fresh
            .iter()
            .enumerate()
            .map(|(i, &id)| (Monomial::var(id), half.entry_part(i)))
            .collect();
        Ok(Self::new(center, dependent, Vec::new()))
    }

    pub fn center(&self) -> V {
        self.center
    }

    pub fn dependent(&self) -> &[(Monomial, V)] {
        &self.dependent
    }

    pub fn independent(&self) -> &[V] {
        &self.independent
    }

    pub fn is_point(&self) -> bool {
        self.dependent.is_empty() && self.independent.is_empty()
    }

    /// Every indeterminate appearing in a dependent generator, sorted.
    pub fn ids(&self) -> Vec<IndeterminateId> {
        let mut ids: Vec<_> = self.dependent.iter().flat_map(|(m, _)| m.ids()).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    pub fn minkowski_sum(&self, other: &Self) -> Self {
        let dependent = self.dependent.iter().chain(other.dependent.iter()).cloned().collect();
        let independent = self
            .independent
            .iter()
            .chain(other.independent.iter())
            .copied()
            .collect();
        Self::new(self.center + other.center, dependent, independent)
    }

    pub fn translate(&self, offset: V) -> Self {
        let mut out = self.clone();
        out.center += offset;
        out
    }

    pub fn scale(&self, factor: f64) -> Self {
        self.map_linear(|v| v * factor)
    }

    pub fn negate(&self) -> Self {
        self.map_linear(|v| -v)
    }

    /// Applies a linear map to every value (center included).
    pub fn map_linear<W: PzValue>(&self, f: impl Fn(V) -> W) -> PolyZonotope<W> {
        PolyZonotope::new(
            f(self.center),
            self.dependent.iter().map(|(m, g)| (m.clone(), f(*g))).collect(),
            self.independent.iter().map(|g| f(*g)).collect(),
        )
    }

    /// Set product. Dependent × dependent terms stay dependent with added
    /// exponents; any term involving an independent generator becomes a new
    /// independent generator.
    pub fn mul<B, C>(&self, rhs: &PolyZonotope<B>) -> PolyZonotope<C>
    where
        B: PzValue,
        C: PzValue,
        V: Mul<B, Output = C>,
    {
        let mut dependent = Vec::with_capacity(self.dependent.len() * (rhs.dependent.len() + 1) + rhs.dependent.len());
        let mut independent = Vec::new();
        let center = self.center * rhs.center;
        for (m, g) in &rhs.dependent {
            dependent.push((m.clone(), self.center * *g));
        }
        for (ma, ga) in &self.dependent {
            dependent.push((ma.clone(), *ga * rhs.center));
            for (mb, gb) in &rhs.dependent {
                dependent.push((ma.product(mb), *ga * *gb));
            }
        }
        for h in &rhs.independent {
            independent.push(self.center * *h);
            for (_, ga) in &self.dependent {
                independent.push(*ga * *h);
            }
            for ha in &self.independent {
                independent.push(*ha * *h);
            }
        }
        for ha in &self.independent {
            independent.push(*ha * rhs.center);
            for (_, gb) in &rhs.dependent {
                independent.push(*ha * *gb);
            }
        }
        PolyZonotope::new(center, dependent, independent)
    }

    /// Substitutes `sigma` for indeterminate `id`. The result is a subset.
    pub fn slice(&self, id: IndeterminateId, sigma: f64) -> Result<Self, PzError> {
        if !(-1.0..=1.0).contains(&sigma) {
            return Err(PzError::SliceOutOfRange(sigma));
        }
        Ok(self.slice_unchecked(id, sigma))
    }

    pub fn slice_many(&self, assignment: &[(IndeterminateId, f64)]) -> Result<Self, PzError> {
        if let Some(&(_, s)) = assignment.iter().find(|(_, s)| !(-1.0..=1.0).contains(s)) {
            return Err(PzError::SliceOutOfRange(s));
        }
        let dependent = self
            .dependent
            .iter()
            .map(|(m, g)| {
                let mut rest = m.clone();
                let mut factor = 1.0;
                for &(id, s) in assignment {
                    let (r, e) = rest.without(id);
                    if e > 0 {
                        factor *= crate::math::powi(s, i32::from(e));
                        rest = r;
                    }
                }
                (rest, *g * factor)
            })
            .collect();
        Ok(Self::new(self.center, dependent, self.independent.clone()))
    }

    fn slice_unchecked(&self, id: IndeterminateId, sigma: f64) -> Self {
        let dependent = self
            .dependent
            .iter()
            .map(|(m, g)| {
                let (rest, e) = m.without(id);
                if e == 0 {
                    (rest, *g)
                } else {
                    (rest, *g * crate::math::powi(sigma, i32::from(e)))
                }
            })
            .collect();
        Self::new(self.center, dependent, self.independent.clone())
    }

    /// Componentwise sum of absolute generator values.
    pub fn radius(&self) -> V {
        let mut r = V::zero();
        for (_, g) in &self.dependent {
            r += g.abs();
        }
        for h in &self.independent {
            r += h.abs();
        }
        r
    }

    /// Componentwise upper bound.
    pub fn sup(&self) -> V {
        self.center + self.radius()
    }

    /// Componentwise lower bound.
    pub fn inf(&self) -> V {
        self.center - self.radius()
    }

    /// Splits into `(kept, rest)`: `kept` holds the center and every
    /// dependent generator whose monomial only involves ids accepted by
    /// `keep`; `rest` has a zero center and holds every other generator as an
    /// independent one. `kept ⊕ rest` contains `self`.
    pub fn split_dependent(&self, keep: impl Fn(IndeterminateId) -> bool) -> (Self, Self) {
        let mut kept = Vec::new();
        let mut rest: Vec<V> = Vec::new();
        for (m, g) in &self.dependent {
            if m.ids().all(&keep) {
                kept.push((m.clone(), *g));
            } else {
                rest.push(*g);
            }
        }
        rest.extend(self.independent.iter().copied());
        (
            Self::new(self.center, kept, Vec::new()),
            Self::new(V::zero(), Vec::new(), rest),
        )
    }

    /// Moves every dependent generator whose monomial matches `demote` into
    /// the independent list. The result contains `self`.
    pub fn demote_dependent(&self, demote: impl Fn(&Monomial) -> bool) -> Self {
        let mut dependent = Vec::with_capacity(self.dependent.len());
        let mut independent = self.independent.clone();
        for (m, g) in &self.dependent {
            if demote(m) {
                independent.push(*g);
            } else {
                dependent.push((m.clone(), *g));
            }
        }
        Self {
            center: self.center,
            dependent,
            independent,
        }
    }

    /// Replaces the independent generators by their axis-aligned box, one
    /// generator per entry. The result contains `self`.
    pub fn box_independent(&self) -> Self {
        if self.independent.len() <= V::entry_count() {
            return self.clone();
        }
        let mut r = V::zero();
        for h in &self.independent {
            r += h.abs();
        }
        let independent = (0..V::entry_count())
            .map(|i| r.entry_part(i))
            .filter(|g| !g.is_zero_within(COMPACTION_TOL))
            .collect();
        Self {
            center: self.center,
            dependent: self.dependent.clone(),
            independent,
        }
    }

    /// Evaluates one member of the set: `dep` gives each dependent
    /// indeterminate, `indep[j]` the value of the j-th independent one.
    pub fn realize(&self, mut dep: impl FnMut(IndeterminateId) -> f64, indep: &[f64]) -> V {
        let mut out = self.center;
        for (m, g) in &self.dependent {
            out += *g * m.evaluate(&mut dep);
        }
        for (h, &y) in self.independent.iter().zip(indep) {
            out += *h * y;
        }
        out
    }

    /// Number of generators, dependent plus independent.
    pub fn generator_count(&self) -> usize {
        self.dependent.len() + self.independent.len()
    }
}

impl<V: PzValue + fmt::Display> fmt::Display for PolyZonotope<V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.center)?;
        for (m, g) in &self.dependent {
            write!(f, " + ({g})·{m}")?;
        }
        for (j, h) in self.independent.iter().enumerate() {
            write!(f, " + ({h})·y{j}")?;
        }
        Ok(())
    }
}
