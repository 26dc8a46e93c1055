//! Scalar information measures and a dense simplex solver for the small
//! maximin programs that arise from the capacity bounds.
//!
//! The solver is generic over [`LpScalar`]: `f64` runs with a fixed pivot
//! tolerance, [`BigRational`] runs exactly.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pivot and feasibility tolerance of the floating-point simplex.
pub const PIVOT_TOLERANCE: f64 = 1e-9;

/// Absolute tolerance of [`inverse_binary_entropy`].
pub const INVERSE_ENTROPY_TOLERANCE: f64 = 1e-9;

/// A probability in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Probability(f64);

impl Probability {
    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Self(value))
        } else {
            Err(Error::Domain {
                value,
                domain: "[0, 1]",
            })
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Probability {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Self::new(value)
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

/// Binary entropy in bits, with `0 log 0 = 0`.
pub fn binary_entropy(p: f64) -> Result<f64> {
    let p = Probability::new(p)?.value();
    Ok(plogp(p) + plogp(1.0 - p))
}

fn plogp(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -x * x.log2()
    }
}

/// The unique `p` in `[0, 1/2]` with `binary_entropy(p) = h`, found by
/// bisection on the increasing branch.
pub fn inverse_binary_entropy(h: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&h) {
        return Err(Error::Domain {
            value: h,
            domain: "[0, 1]",
        });
    }
    if h == 0.0 {
        return Ok(0.0);
    }
    if h == 1.0 {
        return Ok(0.5);
    }
    let (mut lo, mut hi) = (0.0_f64, 0.5_f64);
    while hi - lo > INVERSE_ENTROPY_TOLERANCE / 4.0 {
        let mid = 0.5 * (lo + hi);
        if plogp(mid) + plogp(1.0 - mid) < h {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Field operations needed by the simplex solver, plus sign tests that
/// absorb round-off for floating point.
pub trait LpScalar:
    Clone
    + Debug
    + PartialOrd
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn is_positive_tol(&self) -> bool;
    fn is_negative_tol(&self) -> bool;
    fn is_zero_tol(&self) -> bool {
        !self.is_positive_tol() && !self.is_negative_tol()
    }
    fn from_count(n: usize) -> Self;
}

impl LpScalar for f64 {
    fn is_positive_tol(&self) -> bool {
        *self > PIVOT_TOLERANCE
    }
    fn is_negative_tol(&self) -> bool {
        *self < -PIVOT_TOLERANCE
    }
    fn from_count(n: usize) -> Self {
        n as f64
    }
}

impl LpScalar for BigRational {
    fn is_positive_tol(&self) -> bool {
        self.is_positive()
    }
    fn is_negative_tol(&self) -> bool {
        self.is_negative()
    }
    fn from_count(n: usize) -> Self {
        BigRational::from_integer(n.into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    LessEq,
    GreaterEq,
    Equal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint<S> {
    pub coefficients: Vec<S>,
    pub sense: Sense,
    pub bound: S,
}

/// `maximize objective·x` subject to the constraints, `x ≥ 0` and the
/// optional per-variable upper bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram<S> {
    pub objective: Vec<S>,
    pub constraints: Vec<Constraint<S>>,
    pub upper_bounds: Vec<Option<S>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution<S> {
    pub optimum: S,
    pub argument: Vec<S>,
}

impl<S: LpScalar> LinearProgram<S> {
    pub fn new(objective: Vec<S>) -> Self {
        let n = objective.len();
        Self {
            objective,
            constraints: Vec::new(),
            upper_bounds: vec![None; n],
        }
    }

    pub fn dimension(&self) -> usize {
        self.objective.len()
    }

    pub fn add_constraint(&mut self, coefficients: Vec<S>, sense: Sense, bound: S) -> &mut Self {
        self.constraints.push(Constraint {
            coefficients,
            sense,
            bound,
        });
        self
    }

    fn validate(&self) -> Result<()> {
        let n = self.dimension();
        if n == 0 {
            return Err(Error::MalformedProgram("no variables".into()));
        }
        if self.upper_bounds.len() != n {
            return Err(Error::MalformedProgram(format!(
                "{} upper bounds for {} variables",
                self.upper_bounds.len(),
                n
            )));
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if c.coefficients.len() != n {
                return Err(Error::MalformedProgram(format!(
                    "constraint {} has {} coefficients, expected {}",
                    i,
                    c.coefficients.len(),
                    n
                )));
            }
        }
        Ok(())
    }

    fn all_constraints(&self) -> Vec<Constraint<S>> {
        let n = self.dimension();
        let mut rows = self.constraints.clone();
        for (j, ub) in self.upper_bounds.iter().enumerate() {
            if let Some(ub) = ub {
                let mut coefficients = vec![S::zero(); n];
                coefficients[j] = S::one();
                rows.push(Constraint {
                    coefficients,
                    sense: Sense::LessEq,
                    bound: ub.clone(),
                });
            }
        }
        rows
    }
}

/// Solves the program to a vertex optimum. Among optimal points the
/// lexicographically smallest argument is returned.
///
/// Ties are resolved on the optimal tableau itself: after each objective,
/// columns with a strictly worse reduced cost are barred from entering, and
/// the next objective (minimize `x_0`, then `x_1`, …) is optimized over the
/// remaining face.
pub fn solve_lp<S: LpScalar>(lp: &LinearProgram<S>) -> Result<LpSolution<S>> {
    lp.validate()?;
    let n = lp.dimension();
    let rows = lp.all_constraints();
    let mut objectives = vec![lp.objective.clone()];
    for j in 0..n {
        let mut cost = vec![S::zero(); n];
        cost[j] = -S::one();
        objectives.push(cost);
    }
    let argument = simplex(&objectives, &rows)?;
    let optimum = dot(&lp.objective, &argument);
    Ok(LpSolution { optimum, argument })
}

fn dot<S: LpScalar>(a: &[S], b: &[S]) -> S {
    a.iter()
        .zip(b)
        .fold(S::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
}

/// Dense two-phase tableau simplex with Bland's rule. Maximizes the
/// objectives in lexicographic priority over `rows`, `x ≥ 0`.
fn simplex<S: LpScalar>(objectives: &[Vec<S>], rows: &[Constraint<S>]) -> Result<Vec<S>> {
    let n = objectives[0].len();
    let m = rows.len();

    let slack_count = rows.iter().filter(|r| r.sense != Sense::Equal).count();
    let mut artificial_count = 0;
    let mut normalized = Vec::with_capacity(m);
    for r in rows {
        let (coefficients, sense, bound) = if r.bound.is_negative_tol() {
            let sense = match r.sense {
                Sense::LessEq => Sense::GreaterEq,
                Sense::GreaterEq => Sense::LessEq,
                Sense::Equal => Sense::Equal,
            };
            (
                r.coefficients.iter().map(|c| -c.clone()).collect::<Vec<_>>(),
                sense,
                -r.bound.clone(),
            )
        } else {
            (r.coefficients.clone(), r.sense, r.bound.clone())
        };
        if sense != Sense::LessEq {
            artificial_count += 1;
        }
        normalized.push((coefficients, sense, bound));
    }

    let columns = n + slack_count + artificial_count;
    let rhs = columns;
    let mut tableau = vec![vec![S::zero(); columns + 1]; m];
    let mut basis = vec![0usize; m];
    let mut next_slack = n;
    let mut next_artificial = n + slack_count;
    for (i, (coefficients, sense, bound)) in normalized.into_iter().enumerate() {
        tableau[i][..n].clone_from_slice(&coefficients);
        tableau[i][rhs] = bound;
        match sense {
            Sense::LessEq => {
                tableau[i][next_slack] = S::one();
                basis[i] = next_slack;
                next_slack += 1;
            }
            Sense::GreaterEq => {
                tableau[i][next_slack] = -S::one();
                next_slack += 1;
                tableau[i][next_artificial] = S::one();
                basis[i] = next_artificial;
                next_artificial += 1;
            }
            Sense::Equal => {
                tableau[i][next_artificial] = S::one();
                basis[i] = next_artificial;
                next_artificial += 1;
            }
        }
    }
    let first_artificial = n + slack_count;

    if artificial_count > 0 {
        let mut phase_one = vec![S::zero(); columns];
        for c in phase_one.iter_mut().skip(first_artificial) {
            *c = -S::one();
        }
        let allowed = vec![true; columns];
        // Phase one is bounded by construction.
        run_simplex(&mut tableau, &mut basis, &phase_one, &allowed)?;
        let infeasibility = basis
            .iter()
            .enumerate()
            .filter(|(_, &b)| b >= first_artificial)
            .fold(S::zero(), |acc, (i, _)| acc + tableau[i][rhs].clone());
        if infeasibility.is_positive_tol() {
            return Err(Error::Infeasible);
        }
        // Drive remaining artificials out of the basis; drop redundant rows.
        let mut i = 0;
        while i < tableau.len() {
            if basis[i] >= first_artificial {
                match (0..first_artificial).find(|&j| !tableau[i][j].is_zero_tol()) {
                    Some(j) => {
                        pivot(&mut tableau, &mut basis, i, j);
                        i += 1;
                    }
                    None => {
                        tableau.remove(i);
                        basis.remove(i);
                    }
                }
            } else {
                i += 1;
            }
        }
    }

    let mut allowed = vec![true; columns];
    for a in allowed.iter_mut().skip(first_artificial) {
        *a = false;
    }
    for cost in objectives {
        let mut phase_two = vec![S::zero(); columns];
        phase_two[..n].clone_from_slice(cost);
        run_simplex(&mut tableau, &mut basis, &phase_two, &allowed)?;
        for (j, open) in allowed.iter_mut().enumerate() {
            if *open && !basis.contains(&j) && reduced_cost(&tableau, &basis, &phase_two, j).is_negative_tol() {
                *open = false;
            }
        }
    }

    let mut x = vec![S::zero(); n];
    for (i, &b) in basis.iter().enumerate() {
        if b < n {
            let v = tableau[i][rhs].clone();
            x[b] = if v.is_negative_tol() || v.is_zero_tol() && v < S::zero() {
                S::zero()
            } else {
                v
            };
        }
    }
    Ok(x)
}

fn run_simplex<S: LpScalar>(
    tableau: &mut [Vec<S>],
    basis: &mut [usize],
    cost: &[S],
    allowed: &[bool],
) -> Result<()> {
    let columns = cost.len();
    let rhs = columns;
    loop {
        // Bland: lowest-index improving column.
        let entering = (0..columns).find(|&j| {
            if !allowed[j] || basis.contains(&j) {
                return false;
            }
            reduced_cost(tableau, basis, cost, j).is_positive_tol()
        });
        let Some(entering) = entering else {
            return Ok(());
        };
        let mut leaving: Option<(usize, S)> = None;
        for (i, row) in tableau.iter().enumerate() {
            if row[entering].is_positive_tol() {
                let ratio = row[rhs].clone() / row[entering].clone();
                let better = match &leaving {
                    None => true,
                    Some((li, best)) => {
                        let diff = ratio.clone() - best.clone();
                        diff.is_negative_tol() || (diff.is_zero_tol() && basis[i] < basis[*li])
                    }
                };
                if better {
                    leaving = Some((i, ratio));
                }
            }
        }
        let Some((leaving, _)) = leaving else {
            return Err(Error::Unbounded);
        };
        pivot(tableau, basis, leaving, entering);
    }
}

fn reduced_cost<S: LpScalar>(tableau: &[Vec<S>], basis: &[usize], cost: &[S], j: usize) -> S {
    tableau
        .iter()
        .zip(basis.iter())
        .fold(cost[j].clone(), |acc, (row, &b)| acc - cost[b].clone() * row[j].clone())
}

fn pivot<S: LpScalar>(tableau: &mut [Vec<S>], basis: &mut [usize], row: usize, col: usize) {
    let p = tableau[row][col].clone();
    for v in tableau[row].iter_mut() {
        *v = v.clone() / p.clone();
    }
    let pivot_row = tableau[row].clone();
    for (i, r) in tableau.iter_mut().enumerate() {
        if i == row {
            continue;
        }
        let factor = r[col].clone();
        if factor.is_zero() {
            continue;
        }
        for (v, pv) in r.iter_mut().zip(&pivot_row) {
            *v = v.clone() - factor.clone() * pv.clone();
        }
    }
    basis[row] = col;
}

/// Blahut–Arimoto capacity (bits) of a stochastic matrix `p(y|x)`; returns
/// the capacity and a maximizing input distribution.
pub fn blahut_arimoto(transition: &[Vec<f64>], tolerance: f64) -> (f64, Vec<f64>) {
    let nx = transition.len();
    let ny = transition.first().map_or(0, Vec::len);
    let mut input = vec![1.0 / nx as f64; nx];
    let mut capacity = 0.0;
    for _ in 0..100_000 {
        let output: Vec<f64> = (0..ny)
            .map(|y| (0..nx).map(|x| input[x] * transition[x][y]).sum())
            .collect();
        // d[x] = D(p(.|x) || q) in bits
        let d: Vec<f64> = transition
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&output)
                    .filter(|(&p, _)| p > 0.0)
                    .map(|(&p, &q)| p * (p / q).log2())
                    .sum()
            })
            .collect();
        let lower: f64 = input.iter().zip(&d).map(|(r, d)| r * d).sum();
        let upper = d.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        capacity = lower;
        if upper - lower < tolerance {
            break;
        }
        let weights: Vec<f64> = input
            .iter()
            .zip(&d)
            .map(|(r, d)| r * d.exp2())
            .collect();
        let total: f64 = weights.iter().sum();
        input = weights.into_iter().map(|w| w / total).collect();
    }
    (capacity.max(0.0), input)
}
