//! Constraint rows, systems with provenance, assignments, and the operations
//! shared by every solving backend.
//!
//! A system holds rows `a·x ≤ b` with exact rational coefficients and a
//! delta-rational bound (strict constraints carry a `-δ` term). Alongside
//! each row we keep its provenance: the multipliers expressing the row as a
//! linear combination of the rows of the original input system. Provenance
//! rows with nonnegative entries are Farkas combinations, which is what makes
//! unsatisfiability certificates fall out of the search for free.

use crate::error::{Error, Result};
use crate::rational::{rat, DeltaRational, Rational};
use num_traits::{Signed, Zero};
use std::collections::BTreeMap;
use std::fmt;

/// Relation symbols accepted at the input boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Lt,
    Ge,
    Gt,
    Eq,
}

/// One row `coeffs · x ≤ bound`.
#[derive(Clone, PartialEq, Eq)]
pub struct Constraint {
    pub coeffs: Vec<Rational>,
    pub bound: DeltaRational,
}

impl Constraint {
    pub fn new(coeffs: Vec<Rational>, bound: DeltaRational) -> Self {
        Constraint { coeffs, bound }
    }

    /// Row from integer data: `coeffs · x ≤ bound` (weak).
    pub fn from_ints(coeffs: &[i64], bound: i64) -> Self {
        Constraint {
            coeffs: coeffs.iter().map(|&c| rat(c)).collect(),
            bound: DeltaRational::from_int(bound),
        }
    }

    pub fn is_zero_row(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    /// Number of variables with nonzero coefficient.
    pub fn support_len(&self) -> usize {
        self.coeffs.iter().filter(|c| !c.is_zero()).count()
    }

    /// `self + c * other`, componentwise on coefficients and bound.
    pub fn add_scaled(&self, other: &Constraint, c: &Rational) -> Constraint {
        debug_assert_eq!(self.coeffs.len(), other.coeffs.len());
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a + b * c)
            .collect();
        let mut bound = self.bound.clone();
        bound.add_scaled(&other.bound, c);
        Constraint { coeffs, bound }
    }

    pub fn scaled(&self, c: &Rational) -> Constraint {
        Constraint {
            coeffs: self.coeffs.iter().map(|a| a * c).collect(),
            bound: self.bound.scaled(c),
        }
    }
}

impl fmt::Debug for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (j, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if first {
                write!(f, "{}*x{}", c, j)?;
                first = false;
            } else if c.is_negative() {
                write!(f, " - {}*x{}", -c, j)?;
            } else {
                write!(f, " + {}*x{}", c, j)?;
            }
        }
        if first {
            write!(f, "0")?;
        }
        write!(f, " <= {}", self.bound)
    }
}

/// A sparse linear combination of rows, indexed by row number. Used both for
/// provenance vectors and for Farkas certificate multipliers.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct RowCombination(BTreeMap<usize, Rational>);

impl RowCombination {
    pub fn new() -> Self {
        Self::default()
    }

    /// The unit combination `e_i`.
    pub fn unit(i: usize) -> Self {
        let mut m = BTreeMap::new();
        m.insert(i, rat(1));
        RowCombination(m)
    }

    pub fn from_entries(entries: &[(usize, Rational)]) -> Self {
        let mut c = Self::new();
        for (i, v) in entries {
            c.add_entry(*i, v.clone());
        }
        c
    }

    pub fn get(&self, i: usize) -> Rational {
        self.0.get(&i).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn add_entry(&mut self, i: usize, v: Rational) {
        if v.is_zero() {
            return;
        }
        let entry = self.0.entry(i).or_insert_with(Rational::zero);
        *entry += v;
        if entry.is_zero() {
            self.0.remove(&i);
        }
    }

    /// `self += c * other`.
    pub fn add_scaled(&mut self, other: &RowCombination, c: &Rational) {
        if c.is_zero() {
            return;
        }
        for (i, v) in &other.0 {
            self.add_entry(*i, v * c);
        }
    }

    pub fn scaled(&self, c: &Rational) -> RowCombination {
        let mut out = Self::new();
        out.add_scaled(self, c);
        out
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &Rational)> {
        self.0.iter().map(|(i, v)| (*i, v))
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// True when every multiplier is nonnegative (a conical combination).
    pub fn is_nonnegative(&self) -> bool {
        self.0.values().all(|v| !v.is_negative())
    }

    /// Apply the combination to a list of rows: `Σ_i self[i] * rows[i]`.
    pub fn combine_rows(&self, rows: &[Constraint], nvars: usize) -> Constraint {
        let mut acc = Constraint::new(vec![Rational::zero(); nvars], DeltaRational::zero());
        for (i, v) in &self.0 {
            acc = acc.add_scaled(&rows[*i], v);
        }
        acc
    }
}

impl fmt::Debug for RowCombination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.0.iter()).finish()
    }
}

/// Index sets of a column: rows with negative, positive, and zero coefficient
/// on the variable, each in ascending row order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexSets {
    pub lower: Vec<usize>,
    pub upper: Vec<usize>,
    pub zero: Vec<usize>,
}

/// A system of rows `A x ≤ b` along with per-row provenance over the rows of
/// an original system and per-row backtrack levels.
#[derive(Clone)]
pub struct LinearSystem {
    nvars: usize,
    rows: Vec<Constraint>,
    provenance: Vec<RowCombination>,
    btlvl: Vec<usize>,
    origin_count: usize,
}

impl LinearSystem {
    /// A fresh input system: provenance is the identity, all backtrack
    /// levels are 0.
    pub fn new(nvars: usize, rows: Vec<Constraint>) -> Self {
        let provenance = (0..rows.len()).map(RowCombination::unit).collect();
        let btlvl = vec![0; rows.len()];
        let origin_count = rows.len();
        LinearSystem {
            nvars,
            rows,
            provenance,
            btlvl,
            origin_count,
        }
    }

    pub fn from_ints(nvars: usize, rows: &[(&[i64], i64)]) -> Self {
        Self::new(
            nvars,
            rows.iter()
                .map(|(c, b)| Constraint::from_ints(c, *b))
                .collect(),
        )
    }

    /// A derived system whose rows are combinations of `origin_count`
    /// original rows.
    pub fn derived(
        nvars: usize,
        origin_count: usize,
        rows: Vec<Constraint>,
        provenance: Vec<RowCombination>,
        btlvl: Vec<usize>,
    ) -> Self {
        debug_assert_eq!(rows.len(), provenance.len());
        debug_assert_eq!(rows.len(), btlvl.len());
        LinearSystem {
            nvars,
            rows,
            provenance,
            btlvl,
            origin_count,
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn origin_count(&self) -> usize {
        self.origin_count
    }

    pub fn rows(&self) -> &[Constraint] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &Constraint {
        &self.rows[i]
    }

    pub fn provenance(&self, i: usize) -> &RowCombination {
        &self.provenance[i]
    }

    pub fn provenance_rows(&self) -> &[RowCombination] {
        &self.provenance
    }

    pub fn btlvl(&self, i: usize) -> usize {
        self.btlvl[i]
    }

    pub fn btlvls(&self) -> &[usize] {
        &self.btlvl
    }

    /// All coefficients zero (this includes the empty system).
    pub fn matrix_is_zero(&self) -> bool {
        self.rows.iter().all(|r| r.is_zero_row())
    }

    pub fn column_is_zero(&self, j: usize) -> bool {
        self.rows.iter().all(|r| r.coeffs[j].is_zero())
    }

    /// Partition row indices by the sign of their coefficient on `x_j`.
    pub fn index_sets(&self, j: usize) -> IndexSets {
        let mut sets = IndexSets {
            lower: vec![],
            upper: vec![],
            zero: vec![],
        };
        for (i, row) in self.rows.iter().enumerate() {
            let c = &row.coeffs[j];
            if c.is_negative() {
                sets.lower.push(i);
            } else if c.is_positive() {
                sets.upper.push(i);
            } else {
                sets.zero.push(i);
            }
        }
        sets
    }

    /// Verify that every provenance row reproduces its constraint from the
    /// original rows exactly. `original` must be the system the provenance
    /// indices refer to.
    pub fn provenance_consistent(&self, original: &LinearSystem) -> bool {
        debug_assert_eq!(self.origin_count, original.len());
        self.rows.iter().zip(&self.provenance).all(|(row, prov)| {
            let combined = prov.combine_rows(original.rows(), self.nvars);
            combined == *row
        })
    }
}

impl fmt::Debug for LinearSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "LinearSystem({} vars) {{", self.nvars)?;
        for (i, row) in self.rows.iter().enumerate() {
            writeln!(
                f,
                "  [{}] {:?}  btlvl={} prov={:?}",
                i, row, self.btlvl[i], self.provenance[i]
            )?;
        }
        write!(f, "}}")
    }
}

/// The result of rewriting an atom into `≤`-form rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NormalizedAtom {
    /// One row `a·x ≤ b` (possibly strict through the bound's delta part).
    Inequality(Constraint),
    /// An equality `a·x = b`; the bound's delta part is always zero.
    Equality(Constraint),
}

/// Rewrite `coeffs · x rel rhs` into `≤`-form. `≥` and `>` flip signs, `<`
/// and `>` move the bound down by δ, `=` is passed through as an equality row
/// for Gaussian preprocessing. No further scaling is applied.
pub fn normalize(rel: Relation, coeffs: Vec<Rational>, rhs: Rational) -> NormalizedAtom {
    let negated = || coeffs.iter().map(|c| -c).collect::<Vec<_>>();
    match rel {
        Relation::Le => {
            NormalizedAtom::Inequality(Constraint::new(coeffs, DeltaRational::from_real(rhs)))
        }
        Relation::Lt => {
            NormalizedAtom::Inequality(Constraint::new(coeffs, DeltaRational::strict(rhs)))
        }
        Relation::Ge => {
            NormalizedAtom::Inequality(Constraint::new(negated(), DeltaRational::from_real(-rhs)))
        }
        Relation::Gt => {
            NormalizedAtom::Inequality(Constraint::new(negated(), DeltaRational::strict(-rhs)))
        }
        Relation::Eq => {
            NormalizedAtom::Equality(Constraint::new(coeffs, DeltaRational::from_real(rhs)))
        }
    }
}

/// Which side of a variable a row bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    Lower,
    Upper,
}

/// A row `a·x ≤ b` with `a_j ≠ 0`, rewritten as a symbolic bound on `x_j`:
/// `x_j ≤ expr` (upper, `a_j > 0`) or `expr ≤ x_j` (lower, `a_j < 0`) where
/// `expr = Σ_{k≠j} coeffs[k]·x_k + constant`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarBound {
    pub var: usize,
    pub kind: BoundKind,
    pub coeffs: Vec<Rational>,
    pub constant: DeltaRational,
}

impl VarBound {
    /// Evaluate the bound expression, treating unassigned variables as 0.
    pub fn eval(&self, assignment: &Assignment) -> DeltaRational {
        let mut acc = self.constant.clone();
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if let Some(v) = assignment.get(k) {
                acc.add_scaled(v, c);
            }
        }
        acc
    }
}

/// Rewrite row `i` of `system` as a bound on `x_j`: divide by the magnitude
/// of the coefficient and move everything but `x_j` to the other side.
pub fn bound_rewrite(system: &LinearSystem, i: usize, j: usize) -> Result<VarBound> {
    let row = &system.rows[i];
    let a = &row.coeffs[j];
    if a.is_zero() {
        return Err(Error::NotABound { row: i, var: j });
    }
    let kind = if a.is_negative() {
        BoundKind::Lower
    } else {
        BoundKind::Upper
    };
    let coeffs = row
        .coeffs
        .iter()
        .enumerate()
        .map(|(k, c)| if k == j { Rational::zero() } else { -(c / a) })
        .collect();
    let constant = row.bound.scaled(&(rat(1) / a));
    Ok(VarBound {
        var: j,
        kind,
        coeffs,
        constant,
    })
}

/// A (possibly partial) variable assignment over delta-rationals, with the
/// concrete value substituted for δ once one has been chosen.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Assignment {
    values: BTreeMap<usize, DeltaRational>,
    delta_value: Option<Rational>,
}

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_rationals(values: &[(usize, Rational)]) -> Self {
        let mut a = Self::new();
        for (v, r) in values {
            a.set(*v, DeltaRational::from_real(r.clone()));
        }
        a
    }

    pub fn set(&mut self, var: usize, value: DeltaRational) {
        self.values.insert(var, value);
    }

    pub fn get(&self, var: usize) -> Option<&DeltaRational> {
        self.values.get(&var)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &DeltaRational)> {
        self.values.iter().map(|(v, x)| (*v, x))
    }

    pub fn delta_value(&self) -> Option<&Rational> {
        self.delta_value.as_ref()
    }

    pub fn set_delta_value(&mut self, delta: Rational) {
        self.delta_value = Some(delta);
    }

    /// `Σ coeffs[k]·α(x_k)`; fails on the first unassigned variable with a
    /// nonzero coefficient.
    pub fn eval_term(&self, coeffs: &[Rational]) -> Result<DeltaRational> {
        let mut acc = DeltaRational::zero();
        for (k, c) in coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            match self.values.get(&k) {
                Some(v) => acc.add_scaled(v, c),
                None => return Err(Error::IncompleteAssignment { var: k }),
            }
        }
        Ok(acc)
    }
}

/// Does `assignment` satisfy row `i` of `system`? Comparison happens in the
/// delta-rational order, so strict bounds are decided exactly.
pub fn evaluate(assignment: &Assignment, system: &LinearSystem, i: usize) -> Result<bool> {
    let row = &system.rows[i];
    let lhs = assignment.eval_term(&row.coeffs)?;
    Ok(lhs <= row.bound)
}

/// Does `assignment` satisfy every row of `system`?
pub fn evaluate_all(assignment: &Assignment, system: &LinearSystem) -> Result<bool> {
    for i in 0..system.len() {
        if !evaluate(assignment, system, i)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Turn a delta-rational model of `system` into a plain rational one by
/// choosing a concrete positive value for δ small enough that every row stays
/// satisfied, then substituting it.
///
/// For each row the slack `b - a·α` is nonnegative in the delta order; rows
/// with positive real slack and positive δ-coefficient on the left cap the
/// usable δ at `slack / coefficient`. δ is the minimum of 1 and those caps.
pub fn instantiate_delta(model: &Assignment, system: &LinearSystem) -> Result<Assignment> {
    let mut delta = rat(1);
    for row in &system.rows {
        let lhs = model.eval_term(&row.coeffs)?;
        let slack_real = &row.bound.real - &lhs.real;
        let growth = &lhs.delta - &row.bound.delta;
        debug_assert!(
            slack_real.is_positive() || (slack_real.is_zero() && !growth.is_positive()),
            "model does not satisfy the system"
        );
        if slack_real.is_positive() && growth.is_positive() {
            let cap = slack_real / growth;
            if cap < delta {
                delta = cap;
            }
        }
    }
    let mut out = Assignment::new();
    for (var, v) in model.iter() {
        let real = &v.real + &v.delta * &delta;
        out.set(var, DeltaRational::from_real(real));
    }
    out.set_delta_value(delta);
    Ok(out)
}
