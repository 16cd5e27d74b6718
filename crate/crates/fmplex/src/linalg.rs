//! Exact linear algebra: rank, an incremental row-space basis that tracks
//! combinations, solving tight systems, and Gaussian elimination of
//! equality rows.

use crate::rational::{rat, DeltaRational, Rational};
use crate::system::{Constraint, RowCombination};
use num_traits::Zero;
use std::collections::BTreeSet;

/// An incremental basis of a row space. Inserted rows are either accepted as
/// new basis members or reported as a linear combination of the previously
/// accepted ones.
pub struct RowBasis {
    ncols: usize,
    /// Echelon rows, each with the combination over accepted external ids
    /// that produced it.
    echelon: Vec<(Vec<Rational>, RowCombination)>,
    /// Pivot column of each echelon row.
    pivots: Vec<usize>,
    accepted: Vec<usize>,
}

pub enum InsertOutcome {
    Independent,
    /// The row equals this combination of previously accepted rows.
    Dependent(RowCombination),
}

impl RowBasis {
    pub fn new(ncols: usize) -> Self {
        RowBasis {
            ncols,
            echelon: vec![],
            pivots: vec![],
            accepted: vec![],
        }
    }

    pub fn rank(&self) -> usize {
        self.echelon.len()
    }

    pub fn accepted(&self) -> &[usize] {
        &self.accepted
    }

    /// Reduce `row` against the echelon, returning the residual and the
    /// combination of accepted rows subtracted from it.
    fn reduce(&self, row: &[Rational]) -> (Vec<Rational>, RowCombination) {
        let mut residual = row.to_vec();
        let mut combo = RowCombination::new();
        for ((ech, ech_combo), &p) in self.echelon.iter().zip(&self.pivots) {
            if residual[p].is_zero() {
                continue;
            }
            let factor = &residual[p] / &ech[p];
            for c in 0..self.ncols {
                let delta = &factor * &ech[c];
                residual[c] = &residual[c] - &delta;
            }
            combo.add_scaled(ech_combo, &factor);
        }
        (residual, combo)
    }

    /// Insert a row with external id `id`.
    pub fn insert(&mut self, id: usize, row: &[Rational]) -> InsertOutcome {
        debug_assert_eq!(row.len(), self.ncols);
        let (residual, combo) = self.reduce(row);
        match residual.iter().position(|c| !c.is_zero()) {
            None => InsertOutcome::Dependent(combo),
            Some(pivot) => {
                // residual = row - combo·accepted, so expanding the residual
                // over accepted ids keeps every echelon row expressible in
                // the originals.
                let mut expansion = RowCombination::unit(id);
                expansion.add_scaled(&combo, &rat(-1));
                self.echelon.push((residual, expansion));
                self.pivots.push(pivot);
                self.accepted.push(id);
                InsertOutcome::Independent
            }
        }
    }
}

/// Exact rank of a rational matrix.
pub fn rank(rows: &[Vec<Rational>]) -> usize {
    let ncols = rows.first().map_or(0, Vec::len);
    let mut basis = RowBasis::new(ncols);
    for (i, row) in rows.iter().enumerate() {
        basis.insert(i, row);
    }
    basis.rank()
}

/// Rank of the provenance rows of a derived system, laid out as a matrix
/// over the original row indices.
pub fn provenance_rank(provenance: &[RowCombination], origin_count: usize) -> usize {
    let rows: Vec<Vec<Rational>> = provenance
        .iter()
        .map(|p| {
            let mut dense = vec![Rational::zero(); origin_count];
            for (i, v) in p.iter() {
                dense[i] = v.clone();
            }
            dense
        })
        .collect();
    rank(&rows)
}

/// Solve the square-or-underdetermined tight system `rows · x = rhs` exactly,
/// assigning 0 to free variables. The rows must be linearly independent;
/// the right-hand sides may carry delta parts.
pub fn solve_tight(nvars: usize, rows: &[(Vec<Rational>, DeltaRational)]) -> Vec<DeltaRational> {
    let mut mat: Vec<Vec<Rational>> = rows.iter().map(|(r, _)| r.clone()).collect();
    let mut rhs: Vec<DeltaRational> = rows.iter().map(|(_, b)| b.clone()).collect();
    let m = mat.len();
    let mut pivot_col = vec![usize::MAX; m];
    let mut r = 0;
    for c in 0..nvars {
        if r == m {
            break;
        }
        let Some(p) = (r..m).find(|&i| !mat[i][c].is_zero()) else {
            continue;
        };
        mat.swap(r, p);
        rhs.swap(r, p);
        for i in 0..m {
            if i == r || mat[i][c].is_zero() {
                continue;
            }
            let factor = &mat[i][c] / &mat[r][c];
            for k in c..nvars {
                let delta = &factor * &mat[r][k];
                mat[i][k] = &mat[i][k] - &delta;
            }
            let scaled = rhs[r].scaled(&factor);
            rhs[i] -= scaled;
        }
        pivot_col[r] = c;
        r += 1;
    }
    debug_assert_eq!(r, m, "tight rows must be independent");
    let mut solution = vec![DeltaRational::zero(); nvars];
    for i in 0..m {
        let c = pivot_col[i];
        solution[c] = rhs[i].scaled(&(rat(1) / &mat[i][c]));
    }
    solution
}

/// An inequality row tagged with the input atoms it descends from.
#[derive(Debug, Clone)]
pub struct TaggedRow {
    pub constraint: Constraint,
    pub origins: BTreeSet<usize>,
}

impl TaggedRow {
    pub fn new(constraint: Constraint, origin: usize) -> Self {
        TaggedRow {
            constraint,
            origins: BTreeSet::from([origin]),
        }
    }
}

/// One eliminated variable: `var = coeffs · x + constant`, and the atoms the
/// defining equality absorbed.
#[derive(Debug, Clone)]
pub struct Substitution {
    pub var: usize,
    pub coeffs: Vec<Rational>,
    pub constant: Rational,
    pub origins: BTreeSet<usize>,
}

/// The eliminations applied by Gaussian preprocessing, in order. Replaying
/// them backwards extends any model of the reduced system to the full
/// variable set.
#[derive(Debug, Clone, Default)]
pub struct SubstitutionRecord {
    pub steps: Vec<Substitution>,
}

impl SubstitutionRecord {
    /// Assign every eliminated variable from its defining expression.
    /// `model` must already cover the variables of the reduced system that
    /// the expressions mention (missing ones are treated as 0).
    pub fn extend_model(&self, model: &mut crate::system::Assignment) {
        for step in self.steps.iter().rev() {
            let mut value = DeltaRational::from_real(step.constant.clone());
            for (k, c) in step.coeffs.iter().enumerate() {
                if c.is_zero() {
                    continue;
                }
                if let Some(v) = model.get(k) {
                    let scaled = v.scaled(c);
                    value += scaled;
                }
            }
            model.set(step.var, value);
        }
    }
}

#[derive(Debug)]
pub enum GaussOutcome {
    /// Equalities were consistent; the inequalities have the eliminated
    /// variables substituted away.
    Reduced {
        inequalities: Vec<TaggedRow>,
        record: SubstitutionRecord,
    },
    /// A combination of equalities reduced to `0 = c` with `c ≠ 0`; the
    /// origin set of the offending row is an unsatisfiable core.
    Inconsistent { core: BTreeSet<usize> },
}

/// Eliminate one variable per independent equality row by substitution.
/// Equality bounds must have zero delta parts.
pub fn gaussian_eliminate(
    nvars: usize,
    equalities: Vec<TaggedRow>,
    inequalities: Vec<TaggedRow>,
) -> GaussOutcome {
    let mut record = SubstitutionRecord::default();
    for eq in equalities {
        debug_assert!(eq.constraint.bound.delta.is_zero());
        let mut coeffs = eq.constraint.coeffs;
        let mut constant = eq.constraint.bound.real;
        let mut origins = eq.origins;
        // Substitute previously eliminated variables, earliest first; later
        // expressions never mention earlier eliminated variables.
        for step in &record.steps {
            let c = std::mem::replace(&mut coeffs[step.var], Rational::zero());
            if c.is_zero() {
                continue;
            }
            for k in 0..nvars {
                let delta = &c * &step.coeffs[k];
                coeffs[k] = &coeffs[k] + &delta;
            }
            constant -= &c * &step.constant;
            origins.extend(step.origins.iter().copied());
        }
        match coeffs.iter().position(|c| !c.is_zero()) {
            None => {
                if !constant.is_zero() {
                    return GaussOutcome::Inconsistent { core: origins };
                }
                // 0 = 0: redundant.
            }
            Some(var) => {
                // coeffs·x = constant  =>  x_var = (constant - rest) / coeffs[var]
                let lead = std::mem::replace(&mut coeffs[var], Rational::zero());
                let expr: Vec<Rational> = coeffs.iter().map(|c| -(c / &lead)).collect();
                let constant = constant / lead;
                record.steps.push(Substitution {
                    var,
                    coeffs: expr,
                    constant,
                    origins,
                });
            }
        }
    }
    let inequalities = inequalities
        .into_iter()
        .map(|mut row| {
            for step in &record.steps {
                let c = std::mem::replace(&mut row.constraint.coeffs[step.var], Rational::zero());
                if c.is_zero() {
                    continue;
                }
                for k in 0..nvars {
                    let delta = &c * &step.coeffs[k];
                    row.constraint.coeffs[k] = &row.constraint.coeffs[k] + &delta;
                }
                row.constraint.bound.real -= &c * &step.constant;
                row.origins.extend(step.origins.iter().copied());
            }
            row
        })
        .collect();
    GaussOutcome::Reduced {
        inequalities,
        record,
    }
}
