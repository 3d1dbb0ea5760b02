//! Budgeted search for linear lifts by closing polynomial observables under
//! the Lie derivative.
//!
//! The closure keeps a list of generator functions, starting with the
//! coordinate functions and the constant `1`. Each generator's Lie
//! derivative is reduced against the span of the list by exact echelon
//! elimination over monomials; a nonzero residual becomes a new generator.
//! When every derivative lies in the span, the recorded reduction
//! coefficients are the rows of the lift matrix.

use num_traits::{One, Zero};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{Echelon, Matrix};
use crate::poly::{Monomial, PolyMap, Polynomial, Rational, VectorField};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Budget {
    pub max_generators: usize,
    pub max_degree: usize,
    pub max_iterations: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_generators: 64,
            max_degree: 24,
            max_iterations: 64,
        }
    }
}

impl Budget {
    pub fn new(max_generators: usize, max_degree: usize, max_iterations: usize) -> Result<Self> {
        if max_generators == 0 || max_degree == 0 || max_iterations == 0 {
            return Err(Error::Argument("budget limits must be positive".into()));
        }
        Ok(Budget {
            max_generators,
            max_degree,
            max_iterations,
        })
    }

    pub(crate) fn unlimited() -> Self {
        Budget {
            max_generators: usize::MAX,
            max_degree: usize::MAX,
            max_iterations: usize::MAX,
        }
    }
}

/// A linear lift `ż = A z` of an `n`-dimensional field with observables
/// `p`: the generator stack is `w(x) = (x, p(x))` and `A w = L_f w`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Lift {
    n: usize,
    a: Matrix,
    observables: PolyMap,
    provenance: Vec<String>,
}

impl Lift {
    pub fn new(n: usize, a: Matrix, observables: PolyMap) -> Result<Self> {
        check_dim("observable inputs", n, observables.n_in())?;
        let dim = n + observables.n_out();
        check_dim("lift matrix rows", dim, a.rows())?;
        check_dim("lift matrix cols", dim, a.cols())?;
        Ok(Lift {
            n,
            a,
            observables,
            provenance: Vec::new(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.observables.n_out()
    }

    pub fn dim(&self) -> usize {
        self.n + self.k()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.a
    }

    pub fn observables(&self) -> &PolyMap {
        &self.observables
    }

    pub fn provenance(&self) -> &[String] {
        &self.provenance
    }

    pub fn with_provenance(mut self, note: impl Into<String>) -> Self {
        self.provenance.push(note.into());
        self
    }

    pub(crate) fn with_history(mut self, history: &[String]) -> Self {
        let mut notes = history.to_vec();
        notes.append(&mut self.provenance);
        self.provenance = notes;
        self
    }

    /// `w(x) = (x_1, …, x_n, p_1(x), …, p_k(x))`.
    pub fn generator_functions(&self) -> Vec<Polynomial> {
        let mut gens: Vec<Polynomial> = (0..self.n).map(|i| Polynomial::var(self.n, i)).collect();
        gens.extend(self.observables.components().iter().cloned());
        gens
    }

    /// Generator stack as a map `R^n -> R^{n+k}`.
    pub fn generator_map(&self) -> PolyMap {
        PolyMap::new(self.n, self.generator_functions()).expect("generators share dimension")
    }

    /// The field this lift claims to linearize: `f_i = [A w]_i` for `i ≤ n`.
    pub fn base_field(&self) -> VectorField {
        let w = self.generator_functions();
        let top = self
            .a
            .select(&(0..self.n).collect::<Vec<_>>(), &(0..self.dim()).collect::<Vec<_>>());
        let comps = top.mul_polys(&w).expect("dimensions consistent");
        VectorField::from_components(self.n, comps).expect("square")
    }

    /// Drops observables that are linear combinations of earlier generators,
    /// rewriting `A` so that the lift identity is preserved.
    pub fn compact(&self) -> Lift {
        let gens = self.generator_functions();
        let mut basis: Echelon<Monomial> = Echelon::new();
        // expressions of echelon rows in terms of kept generators
        let mut row_expr: Vec<Vec<Rational>> = Vec::new();
        let mut kept: Vec<usize> = Vec::new();
        let mut gen_expr: Vec<Vec<Rational>> = Vec::new();
        for (j, g) in gens.iter().enumerate() {
            let red = basis.reduce(g.term_map());
            let combine = |coeffs: &[(usize, Rational)], row_expr: &Vec<Vec<Rational>>, width: usize| {
                let mut v = vec![Rational::zero(); width];
                for (r, c) in coeffs {
                    for (slot, e) in row_expr[*r].iter().enumerate() {
                        v[slot] += c * e;
                    }
                }
                v
            };
            if red.residual.is_empty() && j >= self.n {
                gen_expr.push(combine(&red.coeffs, &row_expr, kept.len()));
                continue;
            }
            kept.push(j);
            let width = kept.len();
            for e in row_expr.iter_mut() {
                e.resize(width, Rational::zero());
            }
            for e in gen_expr.iter_mut() {
                e.resize(width, Rational::zero());
            }
            // residual = g_j - Σ c rows; row = s * residual
            let mut expr = combine(&red.coeffs, &row_expr, width);
            for v in expr.iter_mut() {
                *v = -v.clone();
            }
            expr[width - 1] += Rational::one();
            let (_, scale) = basis.push_residual(red.residual);
            for v in expr.iter_mut() {
                *v *= &scale;
            }
            row_expr.push(expr);
            let mut unit = vec![Rational::zero(); width];
            unit[width - 1] = Rational::one();
            gen_expr.push(unit);
        }
        if kept.len() == gens.len() {
            return self.clone();
        }
        let width = kept.len();
        // w = M b with M (N x width); A' = A[kept, :] M
        let mut m = Matrix::zeros(gens.len(), width);
        for (j, e) in gen_expr.iter().enumerate() {
            for (slot, v) in e.iter().enumerate().take(width) {
                m.set(j, slot, v.clone());
            }
        }
        let all: Vec<usize> = (0..gens.len()).collect();
        let a = self.a.select(&kept, &all).mul(&m).expect("dimensions consistent");
        let observables = kept[self.n..].iter().map(|&j| gens[j].clone()).collect();
        let mut out =
            Lift::new(self.n, a, PolyMap::new(self.n, observables).expect("same dim")).expect("consistent dimensions");
        out.provenance = self.provenance.clone();
        out
    }
}

/// Exact check of the lift identity `A w(x) = (f(x), Dp(x) f(x))`.
pub fn check_lift_symbolic(f: &VectorField, lift: &Lift) -> Result<bool> {
    check_dim("lift base dimension", f.dim(), lift.n())?;
    let w = lift.generator_functions();
    let aw = lift.matrix().mul_polys(&w)?;
    for (i, (lhs, wi)) in aw.iter().zip(&w).enumerate() {
        let rhs = if i < lift.n() {
            f.component(i).clone()
        } else {
            f.lie_derivative_scalar(wi)?
        };
        if *lhs != rhs {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Divergence {
    /// Generator count after seeding and after each completed round.
    pub dims: Vec<usize>,
    pub max_degree_seen: i64,
    /// Highest exponent of each state variable across all generators.
    pub leading_degrees: Vec<i64>,
    pub reason: String,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum ClosureOutcome {
    Stabilized(Lift),
    /// Budget exhausted: inconclusive, not a proof of non-linearizability.
    Diverging(Divergence),
}

impl ClosureOutcome {
    pub fn lift(&self) -> Option<&Lift> {
        match self {
            ClosureOutcome::Stabilized(l) => Some(l),
            ClosureOutcome::Diverging(_) => None,
        }
    }

    pub fn is_stabilized(&self) -> bool {
        matches!(self, ClosureOutcome::Stabilized(_))
    }
}

/// Echelon-backed closure of polynomial generators under a field.
pub(crate) struct ClosureEngine<'a> {
    field: &'a VectorField,
    budget: Budget,
    basis: Echelon<Monomial>,
    pub(crate) gens: Vec<Polynomial>,
    pub(crate) rows: Vec<Vec<(usize, Rational)>>,
    next: usize,
    pub(crate) dims: Vec<usize>,
}

pub(crate) struct Exhausted(pub String);

impl<'a> ClosureEngine<'a> {
    pub(crate) fn new(field: &'a VectorField, budget: Budget) -> Self {
        ClosureEngine {
            field,
            budget,
            basis: Echelon::new(),
            gens: Vec::new(),
            rows: Vec::new(),
            next: 0,
            dims: Vec::new(),
        }
    }

    /// Expresses `p` in the generator basis, appending its residual as a new
    /// generator when `p` is outside the current span.
    pub(crate) fn add(&mut self, p: &Polynomial) -> std::result::Result<Vec<(usize, Rational)>, Exhausted> {
        let red = self.basis.reduce(p.term_map());
        let mut coeffs = red.coeffs;
        if !red.residual.is_empty() {
            let degree = red.residual.keys().next_back().map_or(0, Monomial::degree) as usize;
            if degree > self.budget.max_degree {
                return Err(Exhausted(format!(
                    "generator degree {degree} exceeds {}",
                    self.budget.max_degree
                )));
            }
            if self.gens.len() >= self.budget.max_generators {
                return Err(Exhausted(format!(
                    "more than {} generators",
                    self.budget.max_generators
                )));
            }
            let (idx, scale) = self.basis.push_residual(red.residual);
            let row = self.basis.row(idx).clone();
            self.gens.push(Polynomial::from_term_map(self.field.dim(), row));
            coeffs.push((idx, scale.recip()));
        }
        coeffs.sort_by_key(|(i, _)| *i);
        Ok(coeffs)
    }

    /// Processes generators round by round until closed or out of budget.
    pub(crate) fn run(&mut self) -> std::result::Result<(), Exhausted> {
        self.dims.push(self.gens.len());
        let mut rounds = 0;
        while self.next < self.gens.len() {
            rounds += 1;
            if rounds > self.budget.max_iterations {
                return Err(Exhausted(format!("more than {} rounds", self.budget.max_iterations)));
            }
            let end = self.gens.len();
            for i in self.next..end {
                let d = self
                    .field
                    .lie_derivative_scalar(&self.gens[i])
                    .expect("generators live in the field's space");
                let result = self.add(&d);
                match result {
                    Ok(row) => {
                        self.rows.resize(self.gens.len().max(self.rows.len()), Vec::new());
                        self.rows[i] = row;
                    }
                    Err(e) => {
                        self.dims.push(self.gens.len());
                        return Err(e);
                    }
                }
            }
            self.next = end;
            self.dims.push(self.gens.len());
        }
        self.rows.resize(self.gens.len(), Vec::new());
        Ok(())
    }

    pub(crate) fn matrix(&self) -> Matrix {
        let size = self.gens.len();
        let mut a = Matrix::zeros(size, size);
        for (i, row) in self.rows.iter().enumerate() {
            for (j, c) in row {
                a.set(i, *j, c.clone());
            }
        }
        a
    }

    fn divergence(&self, reason: String) -> Divergence {
        let n = self.field.dim();
        Divergence {
            dims: self.dims.clone(),
            max_degree_seen: self.gens.iter().map(Polynomial::degree).max().unwrap_or(-1),
            leading_degrees: (0..n)
                .map(|v| self.gens.iter().map(|g| g.degree_in(v)).max().unwrap_or(-1))
                .collect(),
            reason,
        }
    }
}

/// Budgeted scalar Lie closure. Stabilized outcomes always carry a lift that
/// passes [`check_lift_symbolic`].
pub fn scalar_closure(f: &VectorField, budget: Budget) -> ClosureOutcome {
    let n = f.dim();
    let mut engine = ClosureEngine::new(f, budget);
    for i in 0..n {
        let _ = engine.add(&Polynomial::var(n, i));
    }
    let _ = engine.add(&Polynomial::one(n));
    if let Err(Exhausted(reason)) = engine.run() {
        return ClosureOutcome::Diverging(engine.divergence(reason));
    }
    let full = engine.matrix();
    let size = engine.gens.len();
    // the constant generator sits at index n; keep it only if referenced
    let const_used = (0..size).any(|i| !full.get(i, n).is_zero());
    let keep: Vec<usize> = (0..size).filter(|&i| i != n || const_used).collect();
    let a = full.select(&keep, &keep);
    let observables: Vec<Polynomial> = keep[n..].iter().map(|&i| engine.gens[i].clone()).collect();
    let lift = Lift::new(n, a, PolyMap::new(n, observables).expect("same dimension"))
        .expect("consistent dimensions")
        .with_provenance("scalar closure");
    assert!(
        check_lift_symbolic(f, &lift).unwrap_or(false),
        "scalar closure produced an invalid lift"
    );
    ClosureOutcome::Stabilized(lift)
}

/// `(f, L_f f, …, L_f^kmax f)`.
pub fn vector_closure_sequence(f: &VectorField, kmax: usize) -> Vec<VectorField> {
    let mut seq = Vec::with_capacity(kmax + 1);
    seq.push(f.clone());
    for _ in 0..kmax {
        let next = f
            .lie_derivative_field(seq.last().expect("nonempty"))
            .expect("same dimension");
        seq.push(next);
    }
    seq
}

fn field_key_map(v: &VectorField) -> std::collections::BTreeMap<(usize, Monomial), Rational> {
    v.components()
        .iter()
        .enumerate()
        .flat_map(|(i, c)| c.terms().map(move |(m, r)| ((i, m.clone()), r.clone())))
        .collect()
}

/// `dim span{f, …, L_f^k f}` for each `k ≤ kmax`.
pub fn span_dimensions(seq: &[VectorField]) -> Vec<usize> {
    let mut basis: Echelon<(usize, Monomial)> = Echelon::new();
    seq.iter()
        .map(|v| {
            basis.insert(&field_key_map(v));
            basis.len()
        })
        .collect()
}

/// Whether `v` lies in the span of `family`.
pub fn in_field_span(family: &[VectorField], v: &VectorField) -> bool {
    let mut basis: Echelon<(usize, Monomial)> = Echelon::new();
    for w in family {
        basis.insert(&field_key_map(w));
    }
    basis.contains(&field_key_map(v))
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct ProfileEntry {
    pub k: usize,
    pub dim: usize,
    pub leading_degree: i64,
}

/// Span dimensions of the iterated Lie derivatives of `f`, together with the
/// degree in `watch_var` of component `component` of `L_f^k f`.
pub fn divergence_profile(
    f: &VectorField,
    kmax: usize,
    watch_var: usize,
    component: usize,
) -> Result<Vec<ProfileEntry>> {
    let n = f.dim();
    for idx in [watch_var, component] {
        if idx >= n {
            return Err(Error::IndexOutOfRange { index: idx, n_vars: n });
        }
    }
    let seq = vector_closure_sequence(f, kmax);
    let dims = span_dimensions(&seq);
    Ok(seq
        .iter()
        .zip(dims)
        .enumerate()
        .map(|(k, (v, dim))| ProfileEntry {
            k,
            dim,
            leading_degree: v.component(component).degree_in(watch_var),
        })
        .collect())
}

/// The field `ẋ = A x`.
pub fn linear_field(a: &Matrix) -> VectorField {
    let n = a.rows();
    let x: Vec<Polynomial> = (0..n).map(|i| Polynomial::var(n, i)).collect();
    VectorField::from_components(n, a.mul_polys(&x).expect("square")).expect("square")
}
