//! Seeded random instances: dependency-graph-compliant fields, tame maps,
//! stably tame witnesses and invertible matrices.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::automorphism::{AffineGen, ElementaryGen, Generator, StablyTameWitness, TameAutomorphism};
use crate::linalg::Matrix;
use crate::poly::{int, Monomial, PolyMap, Polynomial, Rational, VectorField};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn nonzero_int<R: Rng>(rng: &mut R, bound: i64) -> Rational {
    let mag = rng.gen_range(1..=bound);
    int(if rng.gen_bool(0.5) { mag } else { -mag })
}

fn small_rational<R: Rng>(rng: &mut R) -> Rational {
    let v = nonzero_int(rng, 3);
    if rng.gen_bool(0.2) {
        v / int(2)
    } else {
        v
    }
}

/// Random monomial of exactly degree `deg` over the variables in `support`.
pub fn random_monomial<R: Rng>(rng: &mut R, n: usize, support: &[usize], deg: u32) -> Monomial {
    let mut exps = vec![0u32; n];
    for _ in 0..deg {
        exps[*support.choose(rng).expect("nonempty support")] += 1;
    }
    Monomial::from_exponents(&exps)
}

/// Random polynomial in `support` with `terms` monomials of degree in `degs`.
pub fn random_poly<R: Rng>(
    rng: &mut R,
    n: usize,
    support: &[usize],
    degs: std::ops::RangeInclusive<u32>,
    terms: usize,
) -> Polynomial {
    let mut p = Polynomial::zero(n);
    for _ in 0..terms {
        let d = rng.gen_range(degs.clone());
        p.add_term(random_monomial(rng, n, support, d), small_rational(rng));
    }
    p
}

/// Random integer matrix with entries in `[-bound, bound]`.
pub fn random_matrix<R: Rng>(rng: &mut R, n: usize, bound: i64, density: f64) -> Matrix {
    let mut a = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if rng.gen_bool(density) {
                a.set(i, j, int(rng.gen_range(-bound..=bound)));
            }
        }
    }
    a
}

/// Random invertible rational matrix (rejection sampling on small entries).
pub fn random_invertible<R: Rng>(rng: &mut R, n: usize) -> Matrix {
    loop {
        let m = random_matrix(rng, n, 3, 0.8);
        if m.is_invertible() {
            return m;
        }
    }
}

/// Random unimodular integer matrix `P · L · U`; its inverse is integral too.
pub fn random_unimodular<R: Rng>(rng: &mut R, n: usize) -> Matrix {
    let mut l = Matrix::identity(n);
    let mut u = Matrix::identity(n);
    for i in 0..n {
        if rng.gen_bool(0.5) {
            u.set(i, i, int(-1));
        }
        for j in 0..i {
            if rng.gen_bool(0.4) {
                l.set(i, j, int(rng.gen_range(-1..=1)));
            }
            if rng.gen_bool(0.4) {
                u.set(j, i, int(rng.gen_range(-1..=1)));
            }
        }
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    Matrix::permutation(&perm)
        .mul(&l)
        .and_then(|m| m.mul(&u))
        .expect("square factors")
}

/// Field with a linear core and DAG-ordered feeds, relabelled by a random
/// permutation. Feeds have a constant self-loop, linear dependence on
/// earlier states and nonlinear terms (degree `2..=max_deg`) in core states,
/// so every cycle lies in the core or is a constant self-loop.
pub fn random_wdg_field<R: Rng>(rng: &mut R, n: usize, max_deg: u32) -> VectorField {
    assert!(n >= 1);
    let core = rng.gen_range(1..=n.min(3));
    let core_vars: Vec<usize> = (0..core).collect();
    let a = random_matrix(rng, core, 2, 0.6);
    let x: Vec<Polynomial> = (0..n).map(|i| Polynomial::var(n, i)).collect();
    let mut comps: Vec<Polynomial> = a.mul_polys(&x[..core]).expect("square").into_iter().collect();
    for i in core..n {
        let mut fi = x[i].scale(&int(rng.gen_range(-2..=2)));
        for xj in x.iter().take(i) {
            if rng.gen_bool(0.3) {
                fi = &fi + &xj.scale(&nonzero_int(rng, 2));
            }
        }
        if max_deg >= 2 {
            let terms = rng.gen_range(1..=2);
            fi = &fi + &random_poly(rng, n, &core_vars, 2..=max_deg, terms);
        }
        comps.push(fi);
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    // variable i becomes perm[i]; component i moves to slot perm[i]
    let mut out = vec![Polynomial::zero(n); n];
    for (i, c) in comps.into_iter().enumerate() {
        out[perm[i]] = c.remap_vars(n, &perm).expect("permutation");
    }
    VectorField::from_components(n, out).expect("square")
}

/// Elementary generator whose perturbation has `1..=2` terms of degree `2..=max_deg`.
pub fn random_elementary<R: Rng>(rng: &mut R, n: usize, target: usize, max_deg: u32) -> ElementaryGen {
    assert!(n >= 2 && max_deg >= 2);
    let others: Vec<usize> = (0..n).filter(|&j| j != target).collect();
    loop {
        let terms = rng.gen_range(1..=2);
        let g = random_poly(rng, n, &others, 2..=max_deg, terms);
        if let Ok(e) = ElementaryGen::new(n, target, g) {
            return e;
        }
    }
}

pub fn random_affine<R: Rng>(rng: &mut R, n: usize) -> AffineGen {
    let a = random_unimodular(rng, n);
    let b = (0..n).map(|_| int(rng.gen_range(-1..=1))).collect();
    AffineGen::new(a, b).expect("unimodular")
}

/// Tame map with `1..=max_gens` generators such that every partial
/// composition, and its inverse, has degree at most `max_deg`.
pub fn random_tame<R: Rng>(rng: &mut R, n: usize, max_gens: usize, max_deg: u32) -> TameAutomorphism {
    let limit = max_deg as i64;
    'retry: loop {
        let count = rng.gen_range(1..=max_gens);
        let mut gens: Vec<Generator> = Vec::with_capacity(count);
        let mut forward = PolyMap::identity(n);
        let mut inverse = PolyMap::identity(n);
        for _ in 0..count {
            let gen: Generator = if n < 2 || rng.gen_bool(0.3) {
                random_affine(rng, n).into()
            } else {
                let target = rng.gen_range(0..n);
                random_elementary(rng, n, target, max_deg).into()
            };
            forward = gen.forward_map().compose(&forward).expect("same dimension");
            inverse = inverse.compose(&gen.inverse_map()).expect("same dimension");
            if forward.degree() > limit || inverse.degree() > limit {
                continue 'retry;
            }
            gens.push(gen);
        }
        return TameAutomorphism::from_generators(n, gens).expect("generators are invertible");
    }
}

/// Stably tame witness with one stabilizing variable. The tame map on
/// `n + 1` states is `τ̂ ∘ E_{n+1} ∘ E_i`: `E_i` perturbs slot `i ≤ n` by a
/// polynomial that uses the stabilizing variable, `E_{n+1}` perturbs the
/// stabilizing slot, and `τ̂` is affine on the first `n` states. The
/// stabilizer avoids `x_i`, so `ψ = τ ∘ Ê` with `Ê` invertible in closed form.
pub fn random_stably_tame<R: Rng>(rng: &mut R, n: usize, max_deg: u32) -> StablyTameWitness {
    assert!(n >= 1 && max_deg >= 2);
    let big = n + 1;
    let i = rng.gen_range(0..n);
    let others: Vec<usize> = (0..n).filter(|&j| j != i).collect();

    let stab = if others.is_empty() {
        Polynomial::constant(n, small_rational(rng))
    } else {
        let terms = rng.gen_range(1..=2);
        random_poly(rng, n, &others, 1..=max_deg, terms)
    };

    // perturbation of slot i: uses the stabilizing variable (index n)
    let w = Polynomial::var(big, n);
    let mut g = if max_deg >= 2 && !others.is_empty() && rng.gen_bool(0.5) {
        let xj = Polynomial::var(big, *others.choose(rng).expect("nonempty"));
        (&w * &xj).scale(&nonzero_int(rng, 2))
    } else {
        w.pow(2).scale(&nonzero_int(rng, 2))
    };
    if !others.is_empty() && rng.gen_bool(0.5) {
        let support: Vec<usize> = others.clone();
        g = &g + &random_poly(rng, big, &support, 2..=max_deg, 1);
    }
    let e_i = ElementaryGen::new(big, i, g.clone()).expect("avoids the target");
    let base: Vec<usize> = (0..n).collect();
    let e_last = random_elementary_on(rng, big, n, &base, max_deg);
    let tau = random_affine(rng, n);
    let tau_hat = AffineGen::new(
        tau.matrix().block_diag(&Matrix::identity(1)),
        tau.offset().iter().cloned().chain(std::iter::once(int(0))).collect(),
    )
    .expect("invertible");
    let phi = TameAutomorphism::from_generators(big, vec![e_i.into(), e_last.into(), tau_hat.into()])
        .expect("valid generators");

    // ψ⁻¹ = Ê⁻¹ ∘ τ⁻¹ with Ê⁻¹(y)_i = y_i - g(y, s(y))
    let mut embed: Vec<Polynomial> = (0..n).map(|j| Polynomial::var(n, j)).collect();
    embed.push(stab.clone());
    let embed = PolyMap::new(n, embed).expect("n inputs");
    let g_on_graph = g.substitute(&embed).expect("dimensions agree");
    let mut e_inv: Vec<Polynomial> = (0..n).map(|j| Polynomial::var(n, j)).collect();
    e_inv[i] = &e_inv[i] - &g_on_graph;
    let e_inv = PolyMap::new(n, e_inv).expect("n inputs");
    let psi_inv = e_inv.compose(&tau.inverse_map()).expect("dimensions agree");

    StablyTameWitness::new(phi, PolyMap::new(n, vec![stab]).expect("n inputs"))
        .and_then(|w| w.with_psi_inverse(psi_inv))
        .expect("closed-form inverse")
}

fn random_elementary_on<R: Rng>(
    rng: &mut R,
    n: usize,
    target: usize,
    support: &[usize],
    max_deg: u32,
) -> ElementaryGen {
    loop {
        let g = random_poly(rng, n, support, 2..=max_deg, 1);
        if let Ok(e) = ElementaryGen::new(n, target, g) {
            return e;
        }
    }
}

/// Random polynomial field with rational coefficients (no structure).
pub fn random_field<R: Rng>(rng: &mut R, n: usize, max_deg: u32, max_terms: usize) -> VectorField {
    let support: Vec<usize> = (0..n).collect();
    let comps = (0..n)
        .map(|_| {
            let terms = rng.gen_range(0..=max_terms);
            random_poly(rng, n, &support, 0..=max_deg, terms)
        })
        .collect();
    VectorField::from_components(n, comps).expect("square")
}
