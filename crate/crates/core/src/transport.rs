//! Constructive transformations of lifts: projection, extension by extra
//! integrator states, linear conjugation, translation, and transport through
//! elementary, tame and stably tame automorphisms.
//!
//! Every function here maps a valid lift to a valid lift of the transformed
//! field without rerunning the closure engine on it.

use num_traits::Zero;

use crate::automorphism::{
    elementary_closed_form, pushforward, pushforward_stably_tame, AffineGen, ElementaryGen, Generator,
    StablyTameWitness, TameAutomorphism,
};
use crate::error::{check_dim, Error, Result};
use crate::linalg::Matrix;
use crate::linearizer::{check_lift_symbolic, vector_closure_sequence, Budget, ClosureEngine, Exhausted, Lift};
use crate::poly::{PolyMap, Polynomial, Rational, VectorField};

/// Premise of a projection: the graph `y = (x, p(x))` is invariant under
/// `h`, and `h` restricted to it projects onto `f`. Checked through
/// `h_{1..n}(x, p(x)) = f(x)` and `Dp(x) f(x) = h_{n+1..m}(x, p(x))`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ProjectionWitness {
    h: VectorField,
    f: VectorField,
    p: PolyMap,
}

impl ProjectionWitness {
    pub fn new(h: VectorField, f: VectorField, p: PolyMap) -> Result<Self> {
        let m = h.dim();
        let n = f.dim();
        check_dim("projection observables input", n, p.n_in())?;
        check_dim("projection observables output", m - n.min(m), p.n_out())?;
        if n > m {
            return Err(Error::Argument("projection target is larger than the source".into()));
        }
        let graph = PolyMap::identity(n).concat(&p)?;
        let h_on_graph = h.as_map().compose(&graph)?;
        for i in 0..n {
            if h_on_graph.component(i) != f.component(i) {
                return Err(Error::Premise(format!(
                    "component {} of h on the graph of p differs from f",
                    i + 1
                )));
            }
        }
        for (j, pj) in p.components().iter().enumerate() {
            if f.lie_derivative_scalar(pj)? != *h_on_graph.component(n + j) {
                return Err(Error::Premise(format!(
                    "observable {} is not carried along by h",
                    j + 1
                )));
            }
        }
        Ok(ProjectionWitness { h, f, p })
    }

    pub fn source(&self) -> &VectorField {
        &self.h
    }

    pub fn target(&self) -> &VectorField {
        &self.f
    }

    pub fn observables(&self) -> &PolyMap {
        &self.p
    }
}

/// A lift of `h` restricted to the invariant graph of `p` is a lift of `f`:
/// same matrix, observables `x ↦ (p(x), q(x, p(x)))`.
pub fn project_lift(w: &ProjectionWitness, lift_h: &Lift) -> Result<Lift> {
    check_dim("projection lift base", w.h.dim(), lift_h.n())?;
    if !check_lift_symbolic(&w.h, lift_h)? {
        return Err(Error::InvalidLift);
    }
    project_unchecked(w, lift_h)
}

fn project_unchecked(w: &ProjectionWitness, lift_h: &Lift) -> Result<Lift> {
    let n = w.f.dim();
    let graph = PolyMap::identity(n).concat(&w.p)?;
    let q = lift_h.observables().compose(&graph)?;
    let observables = w.p.concat(&q)?;
    Ok(Lift::new(n, lift_h.matrix().clone(), observables)?
        .with_history(lift_h.provenance())
        .with_provenance(format!("project: {} -> {} states", w.h.dim(), n)))
}

/// Lift of `(f, g)` on `R^{n+k}` (`v̇ = g(x)`) from a lift of `f`.
///
/// The components of `g` are closed under `L_f` together with the lift's
/// generators `w(x)`. Since `L_f (q ∘ w) = (L_{Az} q) ∘ w`, this span is the
/// image under `w` of the closure of `q_j(z) = g_j(z_1..z_n)` along `ż = A z`,
/// so it is finite. The new state is `(x, v, c(x))` with `c` the closure
/// basis beyond the coordinates; `v̇_j = g_j` is a combination of it.
pub fn extend_lift(lift_f: &Lift, g: &PolyMap) -> Result<Lift> {
    check_dim("extension input", lift_f.n(), g.n_in())?;
    ensure_valid(lift_f)?;
    extend_unchecked(lift_f, g)
}

fn ensure_valid(lift: &Lift) -> Result<()> {
    if check_lift_symbolic(&lift.base_field(), lift)? {
        Ok(())
    } else {
        Err(Error::InvalidLift)
    }
}

fn extend_unchecked(lift_f: &Lift, g: &PolyMap) -> Result<Lift> {
    let n = lift_f.n();
    let f = lift_f.base_field();
    let k = g.n_out();
    let mut engine = ClosureEngine::new(&f, Budget::unlimited());
    for p in lift_f.generator_functions() {
        engine.add(&p).map_err(exhausted)?;
    }
    let mut integrator_rows = Vec::with_capacity(k);
    for gj in g.components() {
        integrator_rows.push(engine.add(gj).map_err(exhausted)?);
    }
    engine.run().map_err(exhausted)?;
    let extra = engine.gens.len() - n;
    let size = n + k + extra;
    // engine generator e maps to new state index e (if e < n) or e + k
    let slot = |e: usize| if e < n { e } else { e + k };

    let mut a = Matrix::zeros(size, size);
    for (e, row) in engine.rows.iter().enumerate() {
        for (j, c) in row {
            a.set(slot(e), slot(*j), c.clone());
        }
    }
    for (j, row) in integrator_rows.iter().enumerate() {
        for (col, c) in row {
            a.set(n + j, slot(*col), c.clone());
        }
    }

    let new_n = n + k;
    let observables: Vec<Polynomial> = engine.gens[n..].iter().map(|p| p.extend_vars(new_n)).collect();
    Ok(Lift::new(new_n, a, PolyMap::new(new_n, observables)?)?
        .with_history(lift_f.provenance())
        .with_provenance(format!("extend: {k} integrator state(s), {extra} observable(s)")))
}

fn exhausted(e: Exhausted) -> Error {
    Error::Argument(format!("closure did not terminate: {}", e.0))
}

/// Lift of `z ↦ P f(P⁻¹ z)`.
pub fn conjugate_lift(lift_f: &Lift, p: &Matrix) -> Result<Lift> {
    let n = lift_f.n();
    check_dim("conjugating matrix rows", n, p.rows())?;
    check_dim("conjugating matrix cols", n, p.cols())?;
    let p_inv = p.inverse()?;
    let k = lift_f.k();
    let left = p.block_diag(&Matrix::identity(k));
    let right = p_inv.block_diag(&Matrix::identity(k));
    let a = left.mul(lift_f.matrix())?.mul(&right)?;
    let inv_map = AffineGen::linear(p_inv)?.forward_map();
    let observables = lift_f.observables().compose(&inv_map)?;
    Ok(Lift::new(n, a, observables)?
        .with_history(lift_f.provenance())
        .with_provenance("conjugate: linear change of coordinates"))
}

/// Lift of `h(z) = f(z + c)`; the shift is carried by a constant generator.
pub fn translate_lift(lift_f: &Lift, c: &[Rational]) -> Result<Lift> {
    let n = lift_f.n();
    check_dim("translation vector", n, c.len())?;
    if c.iter().all(Zero::is_zero) {
        return Ok(lift_f.clone());
    }
    let one = Polynomial::one(n);
    let existing = lift_f.observables().components().iter().position(|p| *p == one);
    let (a, mut observables, const_idx) = match existing {
        Some(j) => (
            lift_f.matrix().clone(),
            lift_f.observables().components().to_vec(),
            n + j,
        ),
        None => {
            let a = lift_f.matrix().block_diag(&Matrix::zeros(1, 1));
            let mut obs = lift_f.observables().components().to_vec();
            obs.push(one);
            (a, obs, lift_f.dim())
        }
    };
    let size = a.rows();
    // w(z + c) = T W(z) with T = I + c e_const^T on the first n rows
    let mut t = Matrix::identity(size);
    let mut t_inv = Matrix::identity(size);
    for (i, ci) in c.iter().enumerate() {
        t.set(i, const_idx, ci.clone());
        t_inv.set(i, const_idx, -ci.clone());
    }
    let a = t_inv.mul(&a)?.mul(&t)?;
    for p in observables.iter_mut() {
        *p = p.shift(c)?;
    }
    Ok(Lift::new(n, a, PolyMap::new(n, observables)?)?
        .with_history(lift_f.provenance())
        .with_provenance("translate: constant generator absorbs the shift"))
}

fn swap_perm(size: usize, a: usize, b: usize) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..size).collect();
    perm.swap(a, b);
    perm
}

/// Lift of the pushforward of `f` (given through its lift) by an elementary map.
pub fn elementary_transport(lift_f: &Lift, phi: &ElementaryGen) -> Result<Lift> {
    check_dim("elementary map dimension", lift_f.n(), phi.dim())?;
    ensure_valid(lift_f)?;
    elementary_step(lift_f, phi)
}

fn elementary_step(lift_f: &Lift, phi: &ElementaryGen) -> Result<Lift> {
    let n = lift_f.n();
    let last = n - 1;
    if phi.target() != last {
        // conjugate by the transposition (target, last), transport, conjugate back
        let perm = swap_perm(n, phi.target(), last);
        let p = Matrix::permutation(&perm);
        let moved = conjugate_lift(lift_f, &p)?;
        let g = phi.perturbation().remap_vars(n, &perm)?;
        let retargeted = ElementaryGen::new(n, last, g)?;
        let transported = elementary_step(&moved, &retargeted)?;
        return conjugate_lift(&transported, &p);
    }

    let f = lift_f.base_field();
    let g = phi.perturbation();
    // (1) integrator for y_n = x_n + g(x): its derivative f_n + Σ ∂g/∂x_i f_i
    let mut g_tilde = f.component(last).clone();
    for i in 0..last {
        let dg = g.partial_derivative(i)?;
        if !dg.is_zero() {
            g_tilde = &g_tilde + &(&dg * f.component(i));
        }
    }
    let extended = extend_unchecked(lift_f, &PolyMap::new(n, vec![g_tilde.clone()])?)?;

    // (2) reorder u = (z_1..z_{n-1}, z_{n+1}, z_n)
    let perm = swap_perm(n + 1, last, n);
    let p = Matrix::permutation(&perm);
    let reordered = conjugate_lift(&extended, &p)?;

    // (3) project along p(y) = y_n - g(y_1..y_{n-1})
    let big = n + 1;
    let mut h_comps: Vec<Polynomial> = Vec::with_capacity(big);
    for i in 0..big {
        let src = match i {
            i if i < last => f.component(i).clone(),
            i if i == last => g_tilde.clone(),
            _ => f.component(last).clone(),
        };
        h_comps.push(src.remap_vars(big, &perm[..n])?);
    }
    let h = VectorField::from_components(big, h_comps)?;
    let target = elementary_closed_form(&f, phi)?;
    let observable = &Polynomial::var(n, last) - g;
    let witness = ProjectionWitness::new(h, target, PolyMap::new(n, vec![observable])?)?;
    project_unchecked(&witness, &reordered)
}

/// Folds the generators of `phi` in application order.
pub fn tame_transport(lift_f: &Lift, phi: &TameAutomorphism) -> Result<Lift> {
    check_dim("automorphism dimension", lift_f.n(), phi.dim())?;
    ensure_valid(lift_f)?;
    tame_unchecked(lift_f, phi)
}

fn tame_unchecked(lift_f: &Lift, phi: &TameAutomorphism) -> Result<Lift> {
    let mut lift = lift_f.clone();
    for gen in phi.generators() {
        lift = match gen {
            Generator::Affine(a) => {
                let conj = conjugate_lift(&lift, a.matrix())?;
                let neg: Vec<Rational> = a.offset().iter().map(|b| -b.clone()).collect();
                translate_lift(&conj, &neg)?
            }
            Generator::Elementary(e) => elementary_step(&lift, e)?,
        };
    }
    Ok(lift)
}

/// Transport through a stably tame map: extend by the stabilizing
/// observables, transport through the tame map in `n + m` dimensions, then
/// project back onto the first `n` coordinates.
pub fn stably_tame_transport(lift_f: &Lift, w: &StablyTameWitness) -> Result<Lift> {
    let n = w.base_dim();
    check_dim("stably tame base dimension", n, lift_f.n())?;
    let f = lift_f.base_field();
    let stab = w.stabilizer();
    let stab_rates = stab
        .components()
        .iter()
        .map(|s| f.lie_derivative_scalar(s))
        .collect::<Result<Vec<_>>>()?;
    let rates = PolyMap::new(n, stab_rates)?;
    ensure_valid(lift_f)?;
    let extended = extend_unchecked(lift_f, &rates)?;
    let big = n + w.stabilizer_count();
    let f_tilde = {
        let mut comps: Vec<Polynomial> = f.components().iter().map(|c| c.extend_vars(big)).collect();
        comps.extend(rates.components().iter().map(|c| c.extend_vars(big)));
        VectorField::from_components(big, comps)?
    };
    let transported = tame_unchecked(&extended, w.phi())?;
    let h_tilde = pushforward(&f_tilde, w.phi())?;
    let target = pushforward_stably_tame(&f, w)?;
    let psi_inv = w.psi_inverse().expect("checked by pushforward_stably_tame");
    let x_of_y = psi_inv.concat(&stab.compose(psi_inv)?)?;
    let r_of_y = w.phi().forward().compose(&x_of_y)?;
    let tail = PolyMap::new(n, r_of_y.components()[n..].to_vec())?;
    let witness = ProjectionWitness::new(h_tilde, target, tail)?;
    project_unchecked(&witness, &transported)
}

/// Checks `L_{f̃}^k f̃ = P (L_f^k f)(P⁻¹ z)` for `f̃(z) = P f(P⁻¹ z)` and all `k ≤ kmax`.
pub fn conjugation_identity(f: &VectorField, p: &Matrix, kmax: usize) -> Result<bool> {
    check_dim("conjugating matrix", f.dim(), p.rows())?;
    let lin = AffineGen::linear(p.clone())?;
    let phi = TameAutomorphism::single(lin.clone())?;
    let f_tilde = pushforward(f, &phi)?;
    let inv = lin.inverse_map();
    let lhs = vector_closure_sequence(&f_tilde, kmax);
    let rhs = vector_closure_sequence(f, kmax);
    for (l, r) in lhs.iter().zip(&rhs) {
        let r_at = r
            .components()
            .iter()
            .map(|c| c.substitute(&inv))
            .collect::<Result<Vec<_>>>()?;
        let transformed = p.mul_polys(&r_at)?;
        if l.components() != transformed.as_slice() {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automorphism::TameAutomorphism;
    use crate::linearizer::{scalar_closure, Budget};
    use crate::poly::{int, rat};

    fn x(n: usize, i: usize) -> Polynomial {
        Polynomial::var(n, i)
    }

    fn intro() -> VectorField {
        VectorField::from_components(2, vec![x(2, 0), &x(2, 1) + &x(2, 0).pow(2)]).unwrap()
    }

    fn intro_lift() -> Lift {
        scalar_closure(&intro(), Budget::default()).lift().cloned().unwrap()
    }

    #[test]
    fn trivial_projection_is_identity() {
        let lift = intro_lift();
        let w = ProjectionWitness::new(intro(), intro(), PolyMap::new(2, vec![]).unwrap()).unwrap();
        let out = project_lift(&w, &lift).unwrap();
        assert_eq!(out.matrix(), lift.matrix());
        assert_eq!(out.observables(), lift.observables());
    }

    #[test]
    fn projection_rejects_bad_observable() {
        let lift = intro_lift();
        let h = VectorField::from_components(3, vec![x(3, 0), &x(3, 1) + &x(3, 2), x(3, 2).scale(&int(2))]).unwrap();
        let good = PolyMap::new(2, vec![x(2, 0).pow(2)]).unwrap();
        assert!(ProjectionWitness::new(h.clone(), intro(), good).is_ok());
        let bad = PolyMap::new(2, vec![&x(2, 0).pow(2) + &x(2, 1)]).unwrap();
        assert!(matches!(
            ProjectionWitness::new(h, intro(), bad),
            Err(Error::Premise(_))
        ));
        drop(lift);
    }

    #[test]
    fn extend_by_square() {
        let lift = intro_lift();
        let g = PolyMap::new(2, vec![x(2, 0).pow(2)]).unwrap();
        let ext = extend_lift(&lift, &g).unwrap();
        let field = VectorField::from_components(3, vec![x(3, 0), &x(3, 1) + &x(3, 0).pow(2), x(3, 0).pow(2)]).unwrap();
        assert!(check_lift_symbolic(&field, &ext).unwrap());
        assert!(ext.observables().components().contains(&x(3, 0).pow(2)));
    }

    #[test]
    fn extend_by_zero_adds_integrator() {
        let lift = intro_lift();
        let ext = extend_lift(&lift, &PolyMap::new(2, vec![Polynomial::zero(2)]).unwrap()).unwrap();
        assert_eq!(ext.dim(), lift.dim() + 1);
        assert!(ext.matrix().row(2).iter().all(Zero::is_zero));
    }

    #[test]
    fn conjugate_and_translate_identity_cases() {
        let lift = intro_lift();
        let same = conjugate_lift(&lift, &Matrix::identity(2)).unwrap();
        assert_eq!(same.matrix(), lift.matrix());
        assert_eq!(same.observables(), lift.observables());
        assert_eq!(translate_lift(&lift, &[int(0), int(0)]).unwrap(), lift);
        assert!(conjugate_lift(&lift, &Matrix::from_i64(&[&[1, 2], &[2, 4]])).is_err());
    }

    #[test]
    fn translate_intro() {
        let lift = intro_lift();
        let c = [int(1), int(0)];
        let moved = translate_lift(&lift, &c).unwrap();
        let h = VectorField::from_components(
            2,
            vec![
                &x(2, 0) + &Polynomial::one(2),
                &x(2, 1) + &(&x(2, 0) + &Polynomial::one(2)).pow(2),
            ],
        )
        .unwrap();
        assert!(check_lift_symbolic(&h, &moved).unwrap());
    }

    #[test]
    fn counterexample_transport() {
        let f = VectorField::from_components(2, vec![x(2, 1), Polynomial::zero(2)]).unwrap();
        let lift = scalar_closure(&f, Budget::default()).lift().cloned().unwrap();
        let e = ElementaryGen::new(2, 1, -&x(2, 0).pow(2)).unwrap();
        let out = elementary_transport(&lift, &e).unwrap();
        let h = pushforward(&f, &TameAutomorphism::single(e).unwrap()).unwrap();
        assert!(check_lift_symbolic(&h, &out).unwrap());
    }

    #[test]
    fn transport_at_first_slot() {
        let lift = intro_lift();
        let e = ElementaryGen::new(2, 0, x(2, 1).pow(2).scale(&rat(1, 2))).unwrap();
        let out = elementary_transport(&lift, &e).unwrap();
        let h = pushforward(&intro(), &TameAutomorphism::single(e).unwrap()).unwrap();
        assert!(check_lift_symbolic(&h, &out).unwrap());
    }

    #[test]
    fn conjugation_identity_small() {
        let p = Matrix::from_i64(&[&[1, 2], &[0, 1]]);
        assert!(conjugation_identity(&intro(), &p, 4).unwrap());
        assert!(conjugation_identity(&intro(), &Matrix::identity(2), 2).unwrap());
        assert!(conjugation_identity(&intro(), &Matrix::zeros(2, 2), 2).is_err());
    }
}
