//! Polynomial automorphisms built from affine and elementary generators,
//! and the pushforward of vector fields through them.
//!
//! A [`TameAutomorphism`] is stored as its generator sequence in application
//! order (`φ = gen_k ∘ … ∘ gen_1`) together with cached flattened forward and
//! inverse maps. Only generator-built maps are accepted as automorphisms.

use num_traits::{One, Zero};

use crate::error::{check_dim, Error, Result};
use crate::linalg::Matrix;
use crate::poly::{PolyMap, Polynomial, Rational, VectorField};

/// `x ↦ A x + b` with `A` exactly invertible.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct AffineGen {
    a: Matrix,
    b: Vec<Rational>,
    a_inv: Matrix,
}

impl AffineGen {
    pub fn new(a: Matrix, b: Vec<Rational>) -> Result<Self> {
        check_dim("affine matrix (square)", a.rows(), a.cols())?;
        check_dim("affine offset", a.rows(), b.len())?;
        let a_inv = a.inverse()?;
        Ok(AffineGen { a, b, a_inv })
    }

    pub fn linear(a: Matrix) -> Result<Self> {
        let n = a.rows();
        Self::new(a, vec![Rational::zero(); n])
    }

    pub fn identity(n: usize) -> Self {
        Self::linear(Matrix::identity(n)).expect("identity is invertible")
    }

    /// Coordinate permutation `(P x)_{perm[j]} = x_j`.
    pub fn permutation(perm: &[usize]) -> Result<Self> {
        let mut seen = vec![false; perm.len()];
        for &p in perm {
            if p >= perm.len() || seen[p] {
                return Err(Error::Argument(format!("{perm:?} is not a permutation")));
            }
            seen[p] = true;
        }
        Self::linear(Matrix::permutation(perm))
    }

    pub fn dim(&self) -> usize {
        self.a.rows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.a
    }

    pub fn offset(&self) -> &[Rational] {
        &self.b
    }

    pub fn matrix_inverse(&self) -> &Matrix {
        &self.a_inv
    }

    pub fn forward_map(&self) -> PolyMap {
        affine_map(&self.a, &self.b)
    }

    pub fn inverse_map(&self) -> PolyMap {
        let shift = self.a_inv.mul_vec(&self.b).expect("dimensions checked");
        let neg: Vec<Rational> = shift.into_iter().map(|v| -v).collect();
        affine_map(&self.a_inv, &neg)
    }

    pub fn inverse(&self) -> AffineGen {
        let shift = self.a_inv.mul_vec(&self.b).expect("dimensions checked");
        AffineGen {
            a: self.a_inv.clone(),
            b: shift.into_iter().map(|v| -v).collect(),
            a_inv: self.a.clone(),
        }
    }
}

fn affine_map(a: &Matrix, b: &[Rational]) -> PolyMap {
    let n = a.cols();
    let components = (0..a.rows())
        .map(|i| {
            let mut p = Polynomial::constant(n, b[i].clone());
            for j in 0..n {
                p.add_scaled(&Polynomial::var(n, j), a.get(i, j));
            }
            p
        })
        .collect();
    PolyMap::new(n, components).expect("affine map components share dimension")
}

/// `x ↦ x + g(x) e_target`, with `g` free of `x_target` and of degree ≥ 2.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ElementaryGen {
    n: usize,
    target: usize,
    g: Polynomial,
}

impl ElementaryGen {
    pub fn new(n: usize, target: usize, g: Polynomial) -> Result<Self> {
        check_dim("elementary perturbation", n, g.n_vars())?;
        if target >= n {
            return Err(Error::IndexOutOfRange {
                index: target,
                n_vars: n,
            });
        }
        if g.depends_on(target) {
            return Err(Error::InvalidElementary(format!(
                "perturbation depends on its own target variable {}",
                target + 1
            )));
        }
        if g.degree() < 2 {
            return Err(Error::ElementaryDegree(g.degree()));
        }
        Ok(ElementaryGen { n, target, g })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn target(&self) -> usize {
        self.target
    }

    pub fn perturbation(&self) -> &Polynomial {
        &self.g
    }

    pub fn forward_map(&self) -> PolyMap {
        self.shifted_identity(&self.g)
    }

    pub fn inverse_map(&self) -> PolyMap {
        self.shifted_identity(&-&self.g)
    }

    pub fn inverse(&self) -> ElementaryGen {
        ElementaryGen {
            n: self.n,
            target: self.target,
            g: -&self.g,
        }
    }

    fn shifted_identity(&self, shift: &Polynomial) -> PolyMap {
        let mut components = PolyMap::identity(self.n).into_components();
        components[self.target] = &components[self.target] + shift;
        PolyMap::new(self.n, components).expect("same dimension")
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Generator {
    Affine(AffineGen),
    Elementary(ElementaryGen),
}

impl Generator {
    pub fn dim(&self) -> usize {
        match self {
            Generator::Affine(a) => a.dim(),
            Generator::Elementary(e) => e.dim(),
        }
    }

    pub fn forward_map(&self) -> PolyMap {
        match self {
            Generator::Affine(a) => a.forward_map(),
            Generator::Elementary(e) => e.forward_map(),
        }
    }

    pub fn inverse_map(&self) -> PolyMap {
        match self {
            Generator::Affine(a) => a.inverse_map(),
            Generator::Elementary(e) => e.inverse_map(),
        }
    }

    pub fn inverse(&self) -> Generator {
        match self {
            Generator::Affine(a) => Generator::Affine(a.inverse()),
            Generator::Elementary(e) => Generator::Elementary(e.inverse()),
        }
    }
}

impl From<AffineGen> for Generator {
    fn from(a: AffineGen) -> Self {
        Generator::Affine(a)
    }
}

impl From<ElementaryGen> for Generator {
    fn from(e: ElementaryGen) -> Self {
        Generator::Elementary(e)
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TameAutomorphism {
    n: usize,
    generators: Vec<Generator>,
    forward: PolyMap,
    inverse: PolyMap,
}

impl TameAutomorphism {
    pub fn identity(n: usize) -> Self {
        TameAutomorphism {
            n,
            generators: Vec::new(),
            forward: PolyMap::identity(n),
            inverse: PolyMap::identity(n),
        }
    }

    /// Builds `gen_k ∘ … ∘ gen_1` from generators listed in application order.
    pub fn from_generators(n: usize, generators: Vec<Generator>) -> Result<Self> {
        let mut forward = PolyMap::identity(n);
        let mut inverse = PolyMap::identity(n);
        for gen in &generators {
            check_dim("generator dimension", n, gen.dim())?;
            forward = gen.forward_map().compose(&forward)?;
            inverse = inverse.compose(&gen.inverse_map())?;
        }
        let phi = TameAutomorphism {
            n,
            generators,
            forward,
            inverse,
        };
        phi.verify_inverse()?;
        Ok(phi)
    }

    pub fn single(gen: impl Into<Generator>) -> Result<Self> {
        let gen = gen.into();
        Self::from_generators(gen.dim(), vec![gen])
    }

    fn verify_inverse(&self) -> Result<()> {
        let id = PolyMap::identity(self.n);
        if self.forward.compose(&self.inverse)? != id || self.inverse.compose(&self.forward)? != id {
            return Err(Error::Premise(
                "cached forward and inverse maps are not mutually inverse".into(),
            ));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    pub fn forward(&self) -> &PolyMap {
        &self.forward
    }

    pub fn inverse_map(&self) -> &PolyMap {
        &self.inverse
    }

    /// The inverse automorphism, with its own generator sequence.
    pub fn inverse(&self) -> TameAutomorphism {
        TameAutomorphism {
            n: self.n,
            generators: self.generators.iter().rev().map(Generator::inverse).collect(),
            forward: self.inverse.clone(),
            inverse: self.forward.clone(),
        }
    }

    /// `outer ∘ inner`: apply `inner` first.
    pub fn compose(outer: &TameAutomorphism, inner: &TameAutomorphism) -> Result<TameAutomorphism> {
        check_dim("automorphism composition", outer.n, inner.n)?;
        let mut generators = inner.generators.clone();
        generators.extend(outer.generators.iter().cloned());
        let phi = TameAutomorphism {
            n: outer.n,
            generators,
            forward: outer.forward.compose(&inner.forward)?,
            inverse: inner.inverse.compose(&outer.inverse)?,
        };
        phi.verify_inverse()?;
        Ok(phi)
    }

    /// Degree of the flattened forward map.
    pub fn degree(&self) -> i64 {
        self.forward.degree()
    }
}

/// `h(y) = Dφ(φ⁻¹(y)) · f(φ⁻¹(y))`, the field `f` in coordinates `y = φ(x)`.
pub fn pushforward(f: &VectorField, phi: &TameAutomorphism) -> Result<VectorField> {
    check_dim("pushforward", phi.dim(), f.dim())?;
    let h = pushforward_through(f, phi.forward(), phi.inverse_map())?;
    if let [Generator::Elementary(e)] = phi.generators() {
        debug_assert_eq!(Ok(&h), elementary_closed_form(f, e).as_ref());
    }
    Ok(h)
}

/// Generic Jacobian route for a forward map with known polynomial inverse.
pub fn pushforward_through(f: &VectorField, forward: &PolyMap, inverse: &PolyMap) -> Result<VectorField> {
    let n = f.dim();
    check_dim("pushforward forward map", n, forward.n_in())?;
    check_dim("pushforward inverse map", n, inverse.n_out())?;
    let f_at = f
        .components()
        .iter()
        .map(|c| c.substitute(inverse))
        .collect::<Result<Vec<_>>>()?;
    let jac = forward.jacobian();
    let mut out = Vec::with_capacity(forward.n_out());
    for row in &jac {
        let mut acc = Polynomial::zero(inverse.n_in());
        for (entry, fj) in row.iter().zip(&f_at) {
            if entry.is_zero() || fj.is_zero() {
                continue;
            }
            if entry.is_constant() {
                acc.add_scaled(fj, &entry.constant_term());
            } else {
                let e = entry.substitute(inverse)?;
                acc.add_scaled(&(&e * fj), &Rational::one());
            }
        }
        out.push(acc);
    }
    VectorField::from_components(inverse.n_in(), out)
}

/// Pushforward through one elementary generator in closed form: the
/// untouched components are `f_i ∘ φ⁻¹`, the target component is
/// `(f_t + Σ_{i≠t} ∂g/∂x_i f_i) ∘ φ⁻¹`.
pub fn elementary_closed_form(f: &VectorField, e: &ElementaryGen) -> Result<VectorField> {
    check_dim("elementary pushforward", e.dim(), f.dim())?;
    let inv = e.inverse_map();
    let t = e.target();
    let mut target = f.component(t).clone();
    for i in 0..f.dim() {
        if i == t {
            continue;
        }
        let dg = e.perturbation().partial_derivative(i)?;
        if !dg.is_zero() {
            target = &target + &(&dg * f.component(i));
        }
    }
    let components = (0..f.dim())
        .map(|i| {
            if i == t {
                target.substitute(&inv)
            } else {
                f.component(i).substitute(&inv)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    VectorField::from_components(f.dim(), components)
}

/// Pushforward applied one generator at a time (functoriality route).
pub fn pushforward_stepwise(f: &VectorField, phi: &TameAutomorphism) -> Result<VectorField> {
    check_dim("pushforward", phi.dim(), f.dim())?;
    let mut h = f.clone();
    for gen in phi.generators() {
        h = match gen {
            Generator::Elementary(e) => elementary_closed_form(&h, e)?,
            Generator::Affine(a) => pushforward_through(&h, &a.forward_map(), &a.inverse_map())?,
        };
    }
    Ok(h)
}

/// Definition-style witness that `psi = Π_n ∘ phi ∘ (id, stabilizer)` is
/// stably tame, optionally carrying a verified polynomial inverse of `psi`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct StablyTameWitness {
    n: usize,
    m: usize,
    phi: TameAutomorphism,
    stabilizer: PolyMap,
    psi: PolyMap,
    psi_inverse: Option<PolyMap>,
}

impl StablyTameWitness {
    pub fn new(phi: TameAutomorphism, stabilizer: PolyMap) -> Result<Self> {
        let n = stabilizer.n_in();
        let m = stabilizer.n_out();
        if m == 0 {
            return Err(Error::Argument(
                "a stably tame witness needs m > 0 stabilizing variables".into(),
            ));
        }
        check_dim("stably tame automorphism dimension", n + m, phi.dim())?;
        let graph = PolyMap::identity(n).concat(&stabilizer)?;
        let psi = phi.forward().compose(&graph)?.project(n);
        let mut witness = StablyTameWitness {
            n,
            m,
            phi,
            stabilizer,
            psi,
            psi_inverse: None,
        };
        witness.psi_inverse = witness.derive_inverse();
        Ok(witness)
    }

    /// Attaches an explicit inverse of `psi`, verified symbolically both ways.
    pub fn with_psi_inverse(mut self, inverse: PolyMap) -> Result<Self> {
        check_dim("psi inverse input", self.n, inverse.n_in())?;
        check_dim("psi inverse output", self.n, inverse.n_out())?;
        if !self.is_inverse(&inverse)? {
            return Err(Error::Premise("supplied map is not the inverse of psi".into()));
        }
        self.psi_inverse = Some(inverse);
        Ok(self)
    }

    fn is_inverse(&self, candidate: &PolyMap) -> Result<bool> {
        let id = PolyMap::identity(self.n);
        Ok(self.psi.compose(candidate)? == id && candidate.compose(&self.psi)? == id)
    }

    fn derive_inverse(&self) -> Option<PolyMap> {
        let n = self.n;
        let zeros = PolyMap::new(n, vec![Polynomial::zero(n); self.m]).ok()?;
        let candidates = [zeros, self.stabilizer.clone()];
        candidates.iter().find_map(|tail| {
            let arg = PolyMap::identity(n).concat(tail).ok()?;
            let cand = self.phi.inverse_map().compose(&arg).ok()?.project(n);
            self.is_inverse(&cand).ok()?.then_some(cand)
        })
    }

    pub fn base_dim(&self) -> usize {
        self.n
    }

    pub fn stabilizer_count(&self) -> usize {
        self.m
    }

    pub fn phi(&self) -> &TameAutomorphism {
        &self.phi
    }

    pub fn stabilizer(&self) -> &PolyMap {
        &self.stabilizer
    }

    pub fn psi(&self) -> &PolyMap {
        &self.psi
    }

    pub fn psi_inverse(&self) -> Option<&PolyMap> {
        self.psi_inverse.as_ref()
    }
}

/// Pushforward through the stably tame map `psi` of a witness.
pub fn pushforward_stably_tame(f: &VectorField, w: &StablyTameWitness) -> Result<VectorField> {
    let inv = w
        .psi_inverse()
        .ok_or_else(|| Error::Premise("psi inverse is not known; supply it explicitly".into()))?;
    pushforward_through(f, w.psi(), inv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::int;

    fn x(n: usize, i: usize) -> Polynomial {
        Polynomial::var(n, i)
    }

    #[test]
    fn affine_identity_and_singular() {
        let id = AffineGen::identity(2);
        assert!(id.forward_map().is_identity());
        let bad = AffineGen::linear(Matrix::from_i64(&[&[1, 1], &[1, 1]]));
        assert_eq!(bad, Err(Error::Singular));
        let swap = AffineGen::permutation(&[1, 0]).unwrap();
        assert_eq!(swap.forward_map().components(), &[x(2, 1), x(2, 0)]);
    }

    #[test]
    fn elementary_examples() {
        let e = ElementaryGen::new(2, 1, -&x(2, 0).pow(2)).unwrap();
        assert_eq!(e.forward_map().components(), &[x(2, 0), &x(2, 1) - &x(2, 0).pow(2)]);
        assert_eq!(e.inverse_map().components(), &[x(2, 0), &x(2, 1) + &x(2, 0).pow(2)]);
        assert!(ElementaryGen::new(2, 1, x(2, 0).pow(2)).is_ok());
        assert!(matches!(
            ElementaryGen::new(2, 0, x(2, 0).pow(2)),
            Err(Error::InvalidElementary(_))
        ));
        assert!(matches!(
            ElementaryGen::new(2, 1, x(2, 0)),
            Err(Error::ElementaryDegree(1))
        ));
        assert!(matches!(
            ElementaryGen::new(2, 1, Polynomial::zero(2)),
            Err(Error::ElementaryDegree(-1))
        ));
    }

    #[test]
    fn compose_with_inverse_is_identity() {
        let e = ElementaryGen::new(3, 0, &x(3, 1) * &x(3, 2)).unwrap();
        let a = AffineGen::new(
            Matrix::from_i64(&[&[1, 2, 0], &[0, 1, 0], &[1, 0, 1]]),
            vec![int(1), int(0), int(-2)],
        )
        .unwrap();
        let phi = TameAutomorphism::from_generators(3, vec![e.into(), a.into()]).unwrap();
        let both = TameAutomorphism::compose(&phi, &phi.inverse()).unwrap();
        assert!(both.forward().is_identity());
        let id = TameAutomorphism::identity(3);
        assert_eq!(TameAutomorphism::compose(&id, &phi).unwrap().forward(), phi.forward());
    }

    #[test]
    fn permutation_conjugation_retargets() {
        // swap ∘ (elementary at slot 2) ∘ swap = elementary at slot 1
        let swap = TameAutomorphism::single(AffineGen::permutation(&[1, 0]).unwrap()).unwrap();
        let e2 = TameAutomorphism::single(ElementaryGen::new(2, 1, x(2, 0).pow(2)).unwrap()).unwrap();
        let conj = TameAutomorphism::compose(&swap, &TameAutomorphism::compose(&e2, &swap).unwrap()).unwrap();
        let e1 = ElementaryGen::new(2, 0, x(2, 1).pow(2)).unwrap();
        assert_eq!(conj.forward(), &e1.forward_map());
    }

    #[test]
    fn counterexample_pushforward() {
        let f = VectorField::from_components(2, vec![x(2, 1), Polynomial::zero(2)]).unwrap();
        let phi = TameAutomorphism::single(ElementaryGen::new(2, 1, -&x(2, 0).pow(2)).unwrap()).unwrap();
        let h = pushforward(&f, &phi).unwrap();
        let y1 = x(2, 0);
        let y2 = x(2, 1);
        let h1 = &y2 + &y1.pow(2);
        assert_eq!(h.component(0), &h1);
        assert_eq!(h.component(1), &(&h1 * &y1.scale(&int(-2))));
    }

    #[test]
    fn identity_pushforward() {
        let f = VectorField::from_components(2, vec![&x(2, 0) * &x(2, 1), x(2, 0)]).unwrap();
        assert_eq!(pushforward(&f, &TameAutomorphism::identity(2)).unwrap(), f);
    }

    #[test]
    fn stably_tame_projection_kills_perturbation() {
        let e = ElementaryGen::new(3, 0, x(3, 2).pow(2)).unwrap();
        let phi = TameAutomorphism::single(e).unwrap();
        let stab = PolyMap::new(2, vec![Polynomial::zero(2)]).unwrap();
        let w = StablyTameWitness::new(phi, stab).unwrap();
        assert!(w.psi().is_identity());
        assert!(w.psi_inverse().unwrap().is_identity());
    }

    #[test]
    fn stably_tame_generic_psi() {
        // phi: slot 1 += x2 * x3, stabilizer x3 = x2^2 → psi = (x1 + x2^3, x2)
        let e = ElementaryGen::new(3, 0, &x(3, 1) * &x(3, 2)).unwrap();
        let phi = TameAutomorphism::single(e).unwrap();
        let stab = PolyMap::new(2, vec![x(2, 1).pow(2)]).unwrap();
        let w = StablyTameWitness::new(phi, stab).unwrap();
        assert_eq!(w.psi().components(), &[&x(2, 0) + &x(2, 1).pow(3), x(2, 1)]);
        let inv = w.psi_inverse().expect("derivable");
        assert_eq!(inv.components(), &[&x(2, 0) - &x(2, 1).pow(3), x(2, 1)]);
        assert!(StablyTameWitness::new(TameAutomorphism::identity(2), PolyMap::identity(2).project(0)).is_err());
    }
}
