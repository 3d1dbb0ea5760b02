//! Sparse multivariate polynomials with exact rational coefficients.
//!
//! Terms are kept in a `BTreeMap` keyed by [`Monomial`], whose ordering is
//! graded: total degree first, then ties broken so that monomials heavier in
//! `x1` come first (`x1^2 < x1*x2 < x2^2` within degree two). With no zero
//! coefficients stored, two polynomials are equal iff their term maps are.
//! The same ordering is the rendering order, e.g. `-2*y1*y2 - 2*y1^3`.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use smallvec::SmallVec;

use crate::error::{check_dim, Error, Result};

/// Exact rational scalar. Always reduced, denominator positive.
pub type Rational = BigRational;

pub fn rat(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn int(value: i64) -> Rational {
    Rational::from_integer(BigInt::from(value))
}

/// Lossy conversion used by the numeric layer only.
pub fn rational_to_f64(value: &Rational) -> f64 {
    value.to_f64().unwrap_or_else(|| {
        // ratio of huge integers: scale both down before dividing
        let n = value.numer().to_f64().unwrap_or(f64::INFINITY);
        let d = value.denom().to_f64().unwrap_or(f64::INFINITY);
        n / d
    })
}

/// Exponent vector of a monomial over a fixed number of variables.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Monomial(SmallVec<[u32; 8]>);

impl Monomial {
    pub fn one(n_vars: usize) -> Self {
        Monomial(SmallVec::from_elem(0, n_vars))
    }

    pub fn var(n_vars: usize, index: usize) -> Self {
        let mut m = Self::one(n_vars);
        m.0[index] = 1;
        m
    }

    pub fn from_exponents(exponents: &[u32]) -> Self {
        Monomial(SmallVec::from_slice(exponents))
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn n_vars(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_one(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(other.0.iter()).map(|(a, b)| a + b).collect())
    }
}

/// Hash-based sum of many terms, sorted once at the end.
#[derive(Default)]
pub(crate) struct Accumulator {
    terms: HashMap<Monomial, Rational>,
}

impl Accumulator {
    pub(crate) fn add(&mut self, m: Monomial, c: Rational) {
        match self.terms.entry(m) {
            std::collections::hash_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::hash_map::Entry::Occupied(mut o) => *o.get_mut() += c,
        }
    }

    pub(crate) fn finish(self, n_vars: usize) -> Polynomial {
        Polynomial {
            n_vars,
            terms: self.terms.into_iter().filter(|(_, c)| !c.is_zero()).collect(),
        }
    }
}

/// Integer numerator, with an `i64` copy when it fits.
struct Num {
    big: BigInt,
    small: Option<i64>,
}

impl Num {
    fn new(big: BigInt) -> Self {
        let small = big.to_i64();
        Num { big, small }
    }

    fn times(&self, k: u32) -> Num {
        match self.small.and_then(|v| v.checked_mul(i64::from(k))) {
            Some(v) => Num {
                big: BigInt::from(v),
                small: Some(v),
            },
            None => Num::new(&self.big * BigInt::from(k)),
        }
    }
}

fn common_denominator<'a>(coeffs: impl Iterator<Item = &'a Rational>) -> BigInt {
    coeffs.fold(BigInt::one(), |acc, c| {
        if c.denom().is_one() {
            acc
        } else {
            num_integer::Integer::lcm(&acc, c.denom())
        }
    })
}

/// Coefficients of `p` scaled by `den` (a multiple of every denominator).
fn scaled_terms<'a>(p: &'a Polynomial, den: &BigInt) -> Vec<(&'a Monomial, Num)> {
    p.terms
        .iter()
        .map(|(m, c)| (m, Num::new(c.numer() * (den / c.denom()))))
        .collect()
}

/// Exact sum of integer products, kept in `i128` until a sum overflows.
#[derive(Default)]
struct IntAccumulator {
    small: HashMap<Monomial, i128>,
    big: HashMap<Monomial, BigInt>,
}

impl IntAccumulator {
    fn add_product(&mut self, m: Monomial, a: &Num, b: &Num) {
        use std::collections::hash_map::Entry;
        if let (Some(x), Some(y)) = (a.small, b.small) {
            let prod = i128::from(x) * i128::from(y);
            match self.small.entry(m) {
                Entry::Vacant(v) => {
                    v.insert(prod);
                }
                Entry::Occupied(mut o) => match o.get().checked_add(prod) {
                    Some(sum) => *o.get_mut() = sum,
                    None => {
                        let (m, old) = o.remove_entry();
                        *self.big.entry(m).or_insert_with(BigInt::zero) += BigInt::from(old) + BigInt::from(prod);
                    }
                },
            }
        } else {
            *self.big.entry(m).or_insert_with(BigInt::zero) += &a.big * &b.big;
        }
    }

    /// The accumulated sum divided by `den`.
    fn finish(mut self, n_vars: usize, den: &BigInt) -> Polynomial {
        for (m, v) in self.small {
            *self.big.entry(m).or_insert_with(BigInt::zero) += BigInt::from(v);
        }
        let terms = self
            .big
            .into_iter()
            .filter(|(_, v)| !v.is_zero())
            .map(|(m, v)| (m, Rational::new(v, den.clone())))
            .collect();
        Polynomial { n_vars, terms }
    }
}

/// Substitution into a fixed map. Single-term components act on monomials
/// directly; the remaining terms are grouped by their exponents in the other
/// components so each group costs one product with cached powers.
struct Substituter<'a> {
    map: &'a PolyMap,
    single: Vec<Option<(Monomial, Rational)>>,
    powers: Vec<Vec<Polynomial>>,
}

impl<'a> Substituter<'a> {
    fn new(map: &'a PolyMap) -> Self {
        let single = map
            .components
            .iter()
            .map(|c| match c.terms.len() {
                1 => c.terms.iter().next().map(|(m, r)| (m.clone(), r.clone())),
                _ => None,
            })
            .collect();
        Substituter {
            map,
            single,
            powers: vec![vec![Polynomial::one(map.n_in)]; map.n_out()],
        }
    }

    fn power(&mut self, i: usize, e: usize) -> &Polynomial {
        while self.powers[i].len() <= e {
            let next = &self.powers[i][self.powers[i].len() - 1] * &self.map.components[i];
            self.powers[i].push(next);
        }
        &self.powers[i][e]
    }

    fn apply(&mut self, p: &Polynomial) -> Polynomial {
        let n_in = self.map.n_in;
        let mut groups: BTreeMap<Vec<u32>, Accumulator> = BTreeMap::new();
        for (m, c) in &p.terms {
            let mut exps = vec![0u32; n_in];
            let mut coeff = c.clone();
            let mut key = vec![0u32; m.0.len()];
            for (i, &e) in m.0.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                match &self.single[i] {
                    Some((mono, r)) => {
                        for (x, &d) in exps.iter_mut().zip(mono.0.iter()) {
                            *x += d * e;
                        }
                        coeff *= num_traits::pow(r.clone(), e as usize);
                    }
                    None => key[i] = e,
                }
            }
            groups
                .entry(key)
                .or_default()
                .add(Monomial::from_exponents(&exps), coeff);
        }
        let mut out = Accumulator::default();
        for (key, acc) in groups {
            let mut q = acc.finish(n_in);
            for (i, &e) in key.iter().enumerate() {
                if e > 0 && !q.is_zero() {
                    q = &q * self.power(i, e as usize);
                }
            }
            for (m, c) in q.terms {
                out.add(m, c);
            }
        }
        out.finish(n_in)
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree().cmp(&other.degree()).then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Polynomial {
    n_vars: usize,
    terms: BTreeMap<Monomial, Rational>,
}

impl Polynomial {
    pub fn zero(n_vars: usize) -> Self {
        Polynomial {
            n_vars,
            terms: BTreeMap::new(),
        }
    }

    pub fn one(n_vars: usize) -> Self {
        Self::constant(n_vars, Rational::one())
    }

    pub fn constant(n_vars: usize, value: Rational) -> Self {
        let mut p = Self::zero(n_vars);
        if !value.is_zero() {
            p.terms.insert(Monomial::one(n_vars), value);
        }
        p
    }

    /// The coordinate function `x_index` (zero-based). Panics when out of range.
    pub fn var(n_vars: usize, index: usize) -> Self {
        assert!(index < n_vars, "variable {index} out of range for {n_vars}");
        Self::term(Monomial::var(n_vars, index), Rational::one())
    }

    pub fn term(monomial: Monomial, coeff: Rational) -> Self {
        let mut p = Self::zero(monomial.n_vars());
        if !coeff.is_zero() {
            p.terms.insert(monomial, coeff);
        }
        p
    }

    /// Builds a polynomial from possibly repeated terms, merging and dropping zeros.
    pub fn from_terms<I>(n_vars: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Monomial, Rational)>,
    {
        let mut p = Self::zero(n_vars);
        for (m, c) in terms {
            check_dim("monomial", n_vars, m.n_vars())?;
            p.add_term(m, c);
        }
        Ok(p)
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &Rational)> + '_ {
        self.terms.iter()
    }

    pub(crate) fn term_map(&self) -> &BTreeMap<Monomial, Rational> {
        &self.terms
    }

    pub(crate) fn from_term_map(n_vars: usize, terms: BTreeMap<Monomial, Rational>) -> Self {
        debug_assert!(terms.values().all(|c| !c.is_zero()));
        Polynomial { n_vars, terms }
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; the zero polynomial has degree -1.
    pub fn degree(&self) -> i64 {
        self.terms.keys().next_back().map_or(-1, |m| i64::from(m.degree()))
    }

    /// Degree ≤ 0, i.e. zero or a nonzero constant.
    pub fn is_constant(&self) -> bool {
        self.degree() <= 0
    }

    /// Highest exponent of `var` over all terms; -1 for the zero polynomial.
    pub fn degree_in(&self, var: usize) -> i64 {
        self.terms.keys().map(|m| i64::from(m.0[var])).max().unwrap_or(-1)
    }

    pub fn depends_on(&self, var: usize) -> bool {
        self.terms.keys().any(|m| m.0[var] > 0)
    }

    pub fn coeff(&self, monomial: &Monomial) -> Rational {
        self.terms.get(monomial).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn constant_term(&self) -> Rational {
        self.coeff(&Monomial::one(self.n_vars))
    }

    pub fn leading_term(&self) -> Option<(&Monomial, &Rational)> {
        self.terms.iter().next_back()
    }

    pub fn add_term(&mut self, monomial: Monomial, coeff: Rational) {
        if coeff.is_zero() {
            return;
        }
        match self.terms.entry(monomial) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(coeff);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += coeff;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    /// `self += factor * other`.
    pub fn add_scaled(&mut self, other: &Polynomial, factor: &Rational) {
        assert_eq!(self.n_vars, other.n_vars, "polynomial dimension mismatch");
        if factor.is_zero() {
            return;
        }
        for (m, c) in &other.terms {
            self.add_term(m.clone(), c * factor);
        }
    }

    pub fn try_add(&self, other: &Polynomial) -> Result<Polynomial> {
        check_dim("polynomial addition", self.n_vars, other.n_vars)?;
        let mut out = self.clone();
        out.add_scaled(other, &Rational::one());
        Ok(out)
    }

    pub fn try_sub(&self, other: &Polynomial) -> Result<Polynomial> {
        check_dim("polynomial subtraction", self.n_vars, other.n_vars)?;
        let mut out = self.clone();
        out.add_scaled(other, &-Rational::one());
        Ok(out)
    }

    pub fn try_mul(&self, other: &Polynomial) -> Result<Polynomial> {
        check_dim("polynomial multiplication", self.n_vars, other.n_vars)?;
        let da = common_denominator(self.terms.values());
        let db = common_denominator(other.terms.values());
        let a = scaled_terms(self, &da);
        let b = scaled_terms(other, &db);
        let mut acc = IntAccumulator::default();
        for (ma, ca) in &a {
            for (mb, cb) in &b {
                acc.add_product(ma.mul(mb), ca, cb);
            }
        }
        Ok(acc.finish(self.n_vars, &(da * db)))
    }

    pub fn scale(&self, factor: &Rational) -> Polynomial {
        if factor.is_zero() {
            return Polynomial::zero(self.n_vars);
        }
        Polynomial {
            n_vars: self.n_vars,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * factor)).collect(),
        }
    }

    pub fn pow(&self, exponent: u32) -> Polynomial {
        let mut result = Polynomial::one(self.n_vars);
        let mut base = self.clone();
        let mut e = exponent;
        while e > 0 {
            if e & 1 == 1 {
                result = &result * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        result
    }

    /// Formal partial derivative with respect to `x_var` (zero-based).
    pub fn partial_derivative(&self, var: usize) -> Result<Polynomial> {
        if var >= self.n_vars {
            return Err(Error::IndexOutOfRange {
                index: var,
                n_vars: self.n_vars,
            });
        }
        let mut out = Polynomial::zero(self.n_vars);
        for (m, c) in &self.terms {
            let e = m.0[var];
            if e == 0 {
                continue;
            }
            let mut dm = m.clone();
            dm.0[var] -= 1;
            out.add_term(dm, c * int(i64::from(e)));
        }
        Ok(out)
    }

    /// Composes with `map`: the result is `self(map_1(y), ..., map_n(y))`.
    pub fn substitute(&self, map: &PolyMap) -> Result<Polynomial> {
        check_dim("substitution", self.n_vars, map.n_out())?;
        Ok(Substituter::new(map).apply(self))
    }

    /// `p(x + c)`, one variable at a time by binomial expansion.
    pub fn shift(&self, c: &[Rational]) -> Result<Polynomial> {
        check_dim("shift vector", self.n_vars, c.len())?;
        let mut current = self.terms.clone();
        for (i, ci) in c.iter().enumerate() {
            if ci.is_zero() {
                continue;
            }
            let mut next: BTreeMap<Monomial, Rational> = BTreeMap::new();
            for (m, coeff) in &current {
                let e = m.0[i];
                // coeff * Σ_j C(e, j) c^(e-j) x_i^j
                let mut binom = Rational::one();
                let mut cpow: Vec<Rational> = Vec::with_capacity(e as usize + 1);
                cpow.push(Rational::one());
                for _ in 0..e {
                    let last = cpow.last().expect("nonempty").clone();
                    cpow.push(last * ci);
                }
                for j in (0..=e).rev() {
                    let mut nm = m.clone();
                    nm.0[i] = j;
                    let term = coeff * &binom * &cpow[(e - j) as usize];
                    let entry = next.entry(nm).or_insert_with(Rational::zero);
                    *entry += term;
                    // C(e, j-1) = C(e, j) * j / (e - j + 1)
                    if j > 0 {
                        binom = binom * Rational::from_integer(j.into()) / Rational::from_integer((e - j + 1).into());
                    }
                }
            }
            next.retain(|_, v| !v.is_zero());
            current = next;
        }
        Ok(Polynomial {
            n_vars: self.n_vars,
            terms: current,
        })
    }

    /// Re-embeds into `new_n` variables, sending `x_i` to `x_{mapping[i]}`.
    pub fn remap_vars(&self, new_n: usize, mapping: &[usize]) -> Result<Polynomial> {
        check_dim("variable remapping", self.n_vars, mapping.len())?;
        if let Some(&bad) = mapping.iter().find(|&&j| j >= new_n) {
            return Err(Error::IndexOutOfRange {
                index: bad,
                n_vars: new_n,
            });
        }
        let mut out = Polynomial::zero(new_n);
        for (m, c) in &self.terms {
            let mut nm = Monomial::one(new_n);
            for (i, &e) in m.0.iter().enumerate() {
                nm.0[mapping[i]] += e;
            }
            out.add_term(nm, c.clone());
        }
        Ok(out)
    }

    /// Same polynomial viewed in `new_n >= n_vars` variables (extra ones unused).
    pub fn extend_vars(&self, new_n: usize) -> Polynomial {
        assert!(new_n >= self.n_vars);
        let mapping: Vec<usize> = (0..self.n_vars).collect();
        self.remap_vars(new_n, &mapping)
            .expect("identity prefix mapping is always valid")
    }

    /// Drops trailing variables the polynomial does not depend on.
    pub fn restrict_vars(&self, new_n: usize) -> Result<Polynomial> {
        if let Some(var) = (new_n..self.n_vars).find(|&v| self.depends_on(v)) {
            return Err(Error::Argument(format!(
                "polynomial depends on variable {} which is being dropped",
                var + 1
            )));
        }
        let terms = self
            .terms
            .iter()
            .map(|(m, c)| (Monomial::from_exponents(&m.0[..new_n.min(m.0.len())]), c.clone()));
        Polynomial::from_terms(new_n, terms)
    }

    pub fn eval_f64(&self, point: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(m, c)| {
                m.0.iter()
                    .zip(point)
                    .fold(rational_to_f64(c), |acc, (&e, &x)| acc * x.powi(e as i32))
            })
            .sum()
    }

    pub fn eval(&self, point: &[Rational]) -> Result<Rational> {
        check_dim("evaluation point", self.n_vars, point.len())?;
        let mut total = Rational::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (&e, x) in m.0.iter().zip(point) {
                for _ in 0..e {
                    t *= x;
                }
            }
            total += t;
        }
        Ok(total)
    }

    /// Renders in the expression grammar with the given variable names.
    pub fn render<S: AsRef<str>>(&self, names: &[S]) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let mut out = String::new();
        for (idx, (m, c)) in self.terms.iter().enumerate() {
            let negative = c.is_negative();
            let magnitude = c.abs();
            if idx == 0 {
                if negative {
                    out.push('-');
                }
            } else {
                out.push_str(if negative { " - " } else { " + " });
            }
            let factors = render_monomial(m, names);
            if factors.is_empty() {
                out.push_str(&format_rational(&magnitude));
            } else if magnitude.is_one() {
                out.push_str(&factors);
            } else {
                out.push_str(&format_rational(&magnitude));
                out.push('*');
                out.push_str(&factors);
            }
        }
        out
    }
}

fn render_monomial<S: AsRef<str>>(m: &Monomial, names: &[S]) -> String {
    let mut parts = Vec::new();
    for (i, &e) in m.0.iter().enumerate() {
        match e {
            0 => {}
            1 => parts.push(names[i].as_ref().to_string()),
            _ => parts.push(format!("{}^{}", names[i].as_ref(), e)),
        }
    }
    parts.join("*")
}

/// `p` or `p/q`.
pub fn format_rational(value: &Rational) -> String {
    value.to_string()
}

/// Always `p/q`, including integers (`3/1`).
pub fn format_rational_pq(value: &Rational) -> String {
    format!("{}/{}", value.numer(), value.denom())
}

pub fn parse_rational(text: &str) -> Result<Rational> {
    let text = text.trim();
    let bad = || Error::Format(format!("invalid rational literal {text:?}"));
    let (num, den) = match text.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (text, "1"),
    };
    let num: BigInt = num.parse().map_err(|_| bad())?;
    let den: BigInt = den.parse().map_err(|_| bad())?;
    if den.is_zero() {
        return Err(Error::Format(format!("zero denominator in {text:?}")));
    }
    Ok(Rational::new(num, den))
}

pub fn default_names(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render(&default_names("x", self.n_vars)))
    }
}

impl<'a> Add<&'a Polynomial> for &'a Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &'a Polynomial) -> Polynomial {
        self.try_add(rhs).expect("polynomial dimension mismatch")
    }
}

impl<'a> Sub<&'a Polynomial> for &'a Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &'a Polynomial) -> Polynomial {
        self.try_sub(rhs).expect("polynomial dimension mismatch")
    }
}

impl<'a> Mul<&'a Polynomial> for &'a Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &'a Polynomial) -> Polynomial {
        self.try_mul(rhs).expect("polynomial dimension mismatch")
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(&-Rational::one())
    }
}

/// A tuple of polynomials sharing one input space: a map R^n_in -> R^n_out.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PolyMap {
    n_in: usize,
    components: Vec<Polynomial>,
}

impl PolyMap {
    pub fn new(n_in: usize, components: Vec<Polynomial>) -> Result<Self> {
        for c in &components {
            check_dim("map component", n_in, c.n_vars())?;
        }
        Ok(PolyMap { n_in, components })
    }

    pub fn identity(n: usize) -> Self {
        PolyMap {
            n_in: n,
            components: (0..n).map(|i| Polynomial::var(n, i)).collect(),
        }
    }

    pub fn n_in(&self) -> usize {
        self.n_in
    }

    pub fn n_out(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Polynomial] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &Polynomial {
        &self.components[i]
    }

    pub fn into_components(self) -> Vec<Polynomial> {
        self.components
    }

    pub fn is_identity(&self) -> bool {
        self.n_in == self.n_out() && *self == PolyMap::identity(self.n_in)
    }

    pub fn degree(&self) -> i64 {
        self.components.iter().map(Polynomial::degree).max().unwrap_or(-1)
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &PolyMap) -> Result<PolyMap> {
        check_dim("map composition", self.n_in, inner.n_out())?;
        let mut sub = Substituter::new(inner);
        let components = self.components.iter().map(|c| sub.apply(c)).collect();
        Ok(PolyMap {
            n_in: inner.n_in,
            components,
        })
    }

    /// Entry `(i, j)` is the partial of component `i` in variable `j`.
    pub fn jacobian(&self) -> Vec<Vec<Polynomial>> {
        self.components
            .iter()
            .map(|c| {
                (0..self.n_in)
                    .map(|j| c.partial_derivative(j).expect("index in range"))
                    .collect()
            })
            .collect()
    }

    /// The first `k` components.
    pub fn project(&self, k: usize) -> PolyMap {
        PolyMap {
            n_in: self.n_in,
            components: self.components[..k].to_vec(),
        }
    }

    /// Components of `self` followed by those of `other`.
    pub fn concat(&self, other: &PolyMap) -> Result<PolyMap> {
        check_dim("map concatenation", self.n_in, other.n_in)?;
        let mut components = self.components.clone();
        components.extend(other.components.iter().cloned());
        Ok(PolyMap {
            n_in: self.n_in,
            components,
        })
    }

    pub fn eval_f64(&self, point: &[f64]) -> Vec<f64> {
        self.components.iter().map(|c| c.eval_f64(point)).collect()
    }

    pub fn render<S: AsRef<str>>(&self, names: &[S]) -> Vec<String> {
        self.components.iter().map(|c| c.render(names)).collect()
    }
}

/// A polynomial vector field: a square [`PolyMap`].
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct VectorField(PolyMap);

impl VectorField {
    pub fn new(map: PolyMap) -> Result<Self> {
        check_dim("vector field", map.n_in(), map.n_out())?;
        Ok(VectorField(map))
    }

    pub fn from_components(n: usize, components: Vec<Polynomial>) -> Result<Self> {
        Self::new(PolyMap::new(n, components)?)
    }

    pub fn zero(n: usize) -> Self {
        VectorField(PolyMap {
            n_in: n,
            components: vec![Polynomial::zero(n); n],
        })
    }

    pub fn dim(&self) -> usize {
        self.0.n_in
    }

    pub fn as_map(&self) -> &PolyMap {
        &self.0
    }

    pub fn into_map(self) -> PolyMap {
        self.0
    }

    pub fn components(&self) -> &[Polynomial] {
        self.0.components()
    }

    pub fn component(&self, i: usize) -> &Polynomial {
        self.0.component(i)
    }

    pub fn degree(&self) -> i64 {
        self.0.degree()
    }

    /// `L_f p = Σ_i (∂p/∂x_i) f_i`.
    pub fn lie_derivative_scalar(&self, p: &Polynomial) -> Result<Polynomial> {
        check_dim("Lie derivative", self.dim(), p.n_vars())?;
        let n = self.dim();
        let dp = common_denominator(p.terms.values());
        let df = common_denominator(self.0.components.iter().flat_map(|c| c.terms.values()));
        let ps = scaled_terms(p, &dp);
        let fs: Vec<Vec<(&Monomial, Num)>> = self.0.components.iter().map(|c| scaled_terms(c, &df)).collect();
        let mut acc = IntAccumulator::default();
        for (m, c) in &ps {
            for (var, fv) in fs.iter().enumerate() {
                let e = m.0[var];
                if e == 0 || fv.is_empty() {
                    continue;
                }
                let mut dm = (*m).clone();
                dm.0[var] -= 1;
                let factor = c.times(e);
                for (fm, fc) in fv {
                    acc.add_product(dm.mul(fm), &factor, fc);
                }
            }
        }
        Ok(acc.finish(n, &(dp * df)))
    }

    /// Componentwise Lie derivative of `g` along `self`.
    pub fn lie_derivative_field(&self, g: &VectorField) -> Result<VectorField> {
        check_dim("Lie derivative of field", self.dim(), g.dim())?;
        let components = g
            .components()
            .iter()
            .map(|c| self.lie_derivative_scalar(c))
            .collect::<Result<Vec<_>>>()?;
        Ok(VectorField(PolyMap {
            n_in: self.dim(),
            components,
        }))
    }

    pub fn eval_f64(&self, point: &[f64]) -> Vec<f64> {
        self.0.eval_f64(point)
    }
}

impl std::ops::Deref for VectorField {
    type Target = PolyMap;
    fn deref(&self) -> &PolyMap {
        &self.0
    }
}
