//! Variables, assignments, affine expressions, and the uncertainty set.
//!
//! An uncertainty set here is a bounded polytope: a closed box per variable
//! intersected with finitely many linear coupling constraints. Transition
//! entries are affine in the variables, so range checks and minimization
//! over the set reduce to its finitely many vertices.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::error::Error;
use crate::num::{format_rational, Q};

/// Index of a variable within its owning [`UncertaintySet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VariableId(pub usize);

/// A total variable assignment, one rational per variable.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Assignment {
    values: Vec<Q>,
}

impl Assignment {
    pub fn new(values: Vec<Q>) -> Self {
        Assignment { values }
    }

    pub fn arity(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, v: VariableId) -> &Q {
        &self.values[v.0]
    }

    pub fn values(&self) -> &[Q] {
        &self.values
    }

    /// True iff `self` matches `partial` on every defined variable.
    pub fn agrees(&self, partial: &PartialAssignment) -> bool {
        partial
            .defined()
            .all(|(v, value)| self.values[v.0] == *value)
    }
}

/// A partial variable assignment; undefined entries are `None`.
///
/// The totally undefined assignment plays the role of the empty restriction.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PartialAssignment {
    values: Vec<Option<Q>>,
}

impl PartialAssignment {
    /// The totally undefined assignment over `arity` variables.
    pub fn undefined(arity: usize) -> Self {
        PartialAssignment {
            values: vec![None; arity],
        }
    }

    pub fn arity(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, v: VariableId) -> Option<&Q> {
        self.values[v.0].as_ref()
    }

    pub fn is_defined(&self, v: VariableId) -> bool {
        self.values[v.0].is_some()
    }

    pub fn set(&mut self, v: VariableId, value: Q) {
        self.values[v.0] = Some(value);
    }

    pub fn defined(&self) -> impl Iterator<Item = (VariableId, &Q)> {
        self.values
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.as_ref().map(|q| (VariableId(i), q)))
    }

    pub fn is_totally_undefined(&self) -> bool {
        self.values.iter().all(|v| v.is_none())
    }
}

/// True iff `u` matches `partial` on every defined variable.
pub fn agrees(u: &Assignment, partial: &PartialAssignment) -> bool {
    u.agrees(partial)
}

/// An affine expression `constant + Σ coeff·var` with rational coefficients.
///
/// Zero coefficients are dropped at construction, so structural equality
/// is semantic equality.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AffineExpr {
    constant: Q,
    coeffs: BTreeMap<VariableId, Q>,
}

impl AffineExpr {
    pub fn constant(c: Q) -> Self {
        AffineExpr {
            constant: c,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn zero() -> Self {
        Self::constant(Q::zero())
    }

    pub fn one() -> Self {
        Self::constant(Q::one())
    }

    pub fn var(v: VariableId) -> Self {
        Self::term(Q::one(), v)
    }

    pub fn term(coeff: Q, v: VariableId) -> Self {
        let mut coeffs = BTreeMap::new();
        if !coeff.is_zero() {
            coeffs.insert(v, coeff);
        }
        AffineExpr {
            constant: Q::zero(),
            coeffs,
        }
    }

    pub fn new(constant: Q, coeffs: impl IntoIterator<Item = (VariableId, Q)>) -> Self {
        let mut out = AffineExpr {
            constant,
            coeffs: BTreeMap::new(),
        };
        for (v, c) in coeffs {
            if !c.is_zero() {
                let entry = out.coeffs.entry(v).or_insert_with(Q::zero);
                *entry += c;
                if entry.is_zero() {
                    out.coeffs.remove(&v);
                }
            }
        }
        out
    }

    pub fn constant_part(&self) -> &Q {
        &self.constant
    }

    pub fn coefficients(&self) -> impl Iterator<Item = (VariableId, &Q)> {
        self.coeffs.iter().map(|(v, c)| (*v, c))
    }

    pub fn coefficient(&self, v: VariableId) -> Q {
        self.coeffs.get(&v).cloned().unwrap_or_else(Q::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.constant.is_zero() && self.coeffs.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn depends_on(&self, v: VariableId) -> bool {
        self.coeffs.contains_key(&v)
    }

    /// Exact evaluation at a total assignment.
    pub fn eval(&self, u: &Assignment) -> Q {
        let mut acc = self.constant.clone();
        for (v, c) in &self.coeffs {
            acc += c * u.get(*v);
        }
        acc
    }

    pub fn add(&self, other: &AffineExpr) -> AffineExpr {
        let mut coeffs = self.coeffs.clone();
        for (v, c) in &other.coeffs {
            let entry = coeffs.entry(*v).or_insert_with(Q::zero);
            *entry += c;
            if entry.is_zero() {
                coeffs.remove(v);
            }
        }
        AffineExpr {
            constant: &self.constant + &other.constant,
            coeffs,
        }
    }
}

impl fmt::Display for AffineExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut wrote = false;
        if !self.constant.is_zero() || self.coeffs.is_empty() {
            write!(f, "{}", format_rational(&self.constant))?;
            wrote = true;
        }
        for (v, c) in &self.coeffs {
            if wrote {
                if c.is_negative() {
                    write!(f, " - ")?;
                } else {
                    write!(f, " + ")?;
                }
            } else if c.is_negative() {
                write!(f, "-")?;
            }
            let mag = c.abs();
            if mag.is_one() {
                write!(f, "v{}", v.0)?;
            } else {
                write!(f, "{} v{}", format_rational(&mag), v.0)?;
            }
            wrote = true;
        }
        Ok(())
    }
}

/// Comparison direction of a linear coupling constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Relation {
    Eq,
    Le,
    Ge,
}

/// A linear coupling `Σ coeff·var REL rhs` over the set's variables.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinearConstraint {
    pub terms: BTreeMap<VariableId, Q>,
    pub rel: Relation,
    pub rhs: Q,
}

impl LinearConstraint {
    pub fn new(terms: impl IntoIterator<Item = (VariableId, Q)>, rel: Relation, rhs: Q) -> Self {
        let mut map = BTreeMap::new();
        for (v, c) in terms {
            if !c.is_zero() {
                *map.entry(v).or_insert_with(Q::zero) += c;
            }
        }
        map.retain(|_, c| !c.is_zero());
        LinearConstraint {
            terms: map,
            rel,
            rhs,
        }
    }

    pub fn satisfied_by(&self, u: &Assignment) -> bool {
        let mut lhs = Q::zero();
        for (v, c) in &self.terms {
            lhs += c * u.get(*v);
        }
        match self.rel {
            Relation::Eq => lhs == self.rhs,
            Relation::Le => lhs <= self.rhs,
            Relation::Ge => lhs >= self.rhs,
        }
    }
}

/// The set of admissible variable assignments: a box per variable plus
/// linear couplings. Construction fails if the set is empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UncertaintySet {
    names: Vec<String>,
    boxes: Vec<(Q, Q)>,
    couplings: Vec<LinearConstraint>,
}

impl UncertaintySet {
    pub fn new(
        names: Vec<String>,
        boxes: Vec<(Q, Q)>,
        couplings: Vec<LinearConstraint>,
    ) -> Result<Self, Error> {
        if names.len() != boxes.len() {
            return Err(Error::Shape("one box is required per variable".to_string()));
        }
        let mut seen = BTreeSet::new();
        for name in &names {
            if !seen.insert(name.clone()) {
                return Err(Error::Shape(format!("duplicate variable `{name}`")));
            }
        }
        for (i, (lo, hi)) in boxes.iter().enumerate() {
            if lo > hi {
                return Err(Error::Shape(format!(
                    "empty box [{}, {}] for variable `{}`",
                    format_rational(lo),
                    format_rational(hi),
                    names[i]
                )));
            }
        }
        let set = UncertaintySet {
            names,
            boxes,
            couplings,
        };
        if set.vertices().is_empty() && set.arity() > 0 {
            return Err(Error::InfeasibleSet);
        }
        Ok(set)
    }

    /// A set with no variables; the unique member is the empty assignment.
    pub fn trivial() -> Self {
        UncertaintySet {
            names: Vec::new(),
            boxes: Vec::new(),
            couplings: Vec::new(),
        }
    }

    pub fn arity(&self) -> usize {
        self.names.len()
    }

    pub fn variable_names(&self) -> &[String] {
        &self.names
    }

    pub fn variable_name(&self, v: VariableId) -> &str {
        &self.names[v.0]
    }

    pub fn variable(&self, name: &str) -> Option<VariableId> {
        self.names.iter().position(|n| n == name).map(VariableId)
    }

    pub fn variables(&self) -> impl Iterator<Item = VariableId> {
        (0..self.names.len()).map(VariableId)
    }

    pub fn bounds(&self, v: VariableId) -> (&Q, &Q) {
        (&self.boxes[v.0].0, &self.boxes[v.0].1)
    }

    pub fn couplings(&self) -> &[LinearConstraint] {
        &self.couplings
    }

    pub fn contains(&self, u: &Assignment) -> bool {
        if u.arity() != self.arity() {
            return false;
        }
        for (i, (lo, hi)) in self.boxes.iter().enumerate() {
            let x = u.get(VariableId(i));
            if x < lo || x > hi {
                return false;
            }
        }
        self.couplings.iter().all(|c| c.satisfied_by(u))
    }

    /// All vertices of the polytope, deduplicated and in lexicographic order.
    ///
    /// Every returned assignment is a member, and for affine objectives the
    /// extrema over the whole set are attained on this list.
    pub fn vertices(&self) -> Vec<Assignment> {
        let n = self.arity();
        if n == 0 {
            return vec![Assignment::new(Vec::new())];
        }
        // Row form a·x REL b over all facets.
        let mut eqs: Vec<(Vec<Q>, Q)> = Vec::new();
        let mut ineqs: Vec<(Vec<Q>, Q, Relation)> = Vec::new();
        for (i, (lo, hi)) in self.boxes.iter().enumerate() {
            let mut row = vec![Q::zero(); n];
            row[i] = Q::one();
            if lo == hi {
                eqs.push((row, lo.clone()));
            } else {
                ineqs.push((row.clone(), lo.clone(), Relation::Ge));
                ineqs.push((row, hi.clone(), Relation::Le));
            }
        }
        for c in &self.couplings {
            let mut row = vec![Q::zero(); n];
            for (v, coeff) in &c.terms {
                row[v.0] = coeff.clone();
            }
            match c.rel {
                Relation::Eq => eqs.push((row, c.rhs.clone())),
                rel => ineqs.push((row, c.rhs.clone(), rel)),
            }
        }

        let mut found: BTreeSet<Vec<Q>> = BTreeSet::new();
        let k = ineqs.len();
        let max_active = n.min(k);
        let mut active: Vec<usize> = Vec::new();
        enumerate_subsets(k, max_active, &mut active, &mut |subset| {
            let mut a: Vec<Vec<Q>> = eqs.iter().map(|(r, _)| r.clone()).collect();
            let mut b: Vec<Q> = eqs.iter().map(|(_, v)| v.clone()).collect();
            for &idx in subset {
                a.push(ineqs[idx].0.clone());
                b.push(ineqs[idx].1.clone());
            }
            if let Some(x) = solve_unique(&a, &b) {
                let cand = Assignment::new(x);
                if self.contains(&cand) {
                    found.insert(cand.values().to_vec());
                }
            }
        });
        found.into_iter().map(Assignment::new).collect()
    }

    /// Tightens boxes to point intervals on every variable `partial` defines.
    ///
    /// Membership in the result is membership in `self` plus agreement with
    /// `partial`. Fails if the restricted set is empty, which signals an
    /// assignment that contradicts earlier fixed values.
    pub fn constrain(&self, partial: &PartialAssignment) -> Result<UncertaintySet, Error> {
        if partial.arity() != self.arity() {
            return Err(Error::Shape(
                "partial assignment arity does not match the uncertainty set".to_string(),
            ));
        }
        let mut boxes = self.boxes.clone();
        for (v, value) in partial.defined() {
            let (lo, hi) = &boxes[v.0];
            if value < lo || value > hi {
                return Err(Error::InfeasibleSet);
            }
            boxes[v.0] = (value.clone(), value.clone());
        }
        let out = UncertaintySet {
            names: self.names.clone(),
            boxes,
            couplings: self.couplings.clone(),
        };
        if out.arity() > 0 && out.vertices().is_empty() {
            return Err(Error::InfeasibleSet);
        }
        Ok(out)
    }

    /// The first vertex in enumeration order; the canonical default choice.
    pub fn first_vertex(&self) -> Result<Assignment, Error> {
        self.vertices()
            .into_iter()
            .next()
            .ok_or(Error::InfeasibleSet)
    }

    /// Exact extrema of an affine expression over the set.
    pub fn range_of(&self, expr: &AffineExpr) -> Option<(Q, Q)> {
        let mut lo: Option<Q> = None;
        let mut hi: Option<Q> = None;
        for v in self.vertices() {
            let val = expr.eval(&v);
            match &mut lo {
                Some(cur) if *cur <= val => {}
                _ => lo = Some(val.clone()),
            }
            match &mut hi {
                Some(cur) if *cur >= val => {}
                _ => hi = Some(val),
            }
        }
        lo.zip(hi)
    }
}

fn enumerate_subsets(
    n: usize,
    max_size: usize,
    current: &mut Vec<usize>,
    f: &mut impl FnMut(&[usize]),
) {
    f(current);
    if current.len() == max_size {
        return;
    }
    let start = current.last().map_or(0, |&last| last + 1);
    for i in start..n {
        current.push(i);
        enumerate_subsets(n, max_size, current, f);
        current.pop();
    }
}

/// Solves `a x = b` exactly; returns the solution only when it is unique.
#[allow(clippy::needless_range_loop)] // rows are read and written across each other
fn solve_unique(a: &[Vec<Q>], b: &[Q]) -> Option<Vec<Q>> {
    let rows = a.len();
    if rows == 0 {
        return None;
    }
    let cols = a[0].len();
    let mut m: Vec<Vec<Q>> = a
        .iter()
        .zip(b)
        .map(|(row, rhs)| {
            let mut r = row.clone();
            r.push(rhs.clone());
            r
        })
        .collect();
    let mut pivot_row = 0;
    let mut pivots = Vec::new();
    for col in 0..cols {
        let found = (pivot_row..rows).find(|&r| !m[r][col].is_zero());
        let Some(r) = found else { continue };
        m.swap(pivot_row, r);
        let inv = m[pivot_row][col].clone();
        for v in m[pivot_row][col..=cols].iter_mut() {
            *v /= &inv;
        }
        for r2 in 0..rows {
            if r2 != pivot_row && !m[r2][col].is_zero() {
                let factor = m[r2][col].clone();
                for c in col..=cols {
                    let v = &m[r2][c] - &factor * &m[pivot_row][c];
                    m[r2][c] = v;
                }
            }
        }
        pivots.push(col);
        pivot_row += 1;
        if pivot_row == rows {
            break;
        }
    }
    // Inconsistent system: a zero row with nonzero rhs.
    for r in pivot_row..rows {
        if !m[r][cols].is_zero() {
            return None;
        }
    }
    if pivots.len() != cols {
        return None;
    }
    let mut x = vec![Q::zero(); cols];
    for (i, &col) in pivots.iter().enumerate() {
        x[col] = m[i][cols].clone();
    }
    Some(x)
}
