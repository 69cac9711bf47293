//! Spanning by translates: express an eigenfunction as a finite combination
//! `Σ cᵢ π(gᵢ) f` of translates of the radial eigenfunction, sphere by sphere.
//!
//! Every stage corrects the next sphere (next even sphere on the even lattice)
//! with translates centred there. Coefficients attached to one processed
//! vertex sum to zero, so values already fixed nearer the root are untouched.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::decomposition::{basis_hn, is_degenerate};
use crate::error::{Error, Result};
use crate::group::{act, reach, Automorphism};
use crate::scalar::Scalar;
use crate::spectral::{radial_eigen, EigenFunction};
use crate::tree::{PathAddress, TreeBall, TreeShape};

/// Which spanning procedure produced a combination.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Transitive,
    SemiHomogeneous,
    /// `α = −1/(s−1)`: the cleanup phase is replaced by the assertion `R(v) = 0`.
    Special,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Transitive => "transitive",
            Mode::SemiHomogeneous => "semihomogeneous",
            Mode::Special => "special",
        }
    }
}

/// One translate `c · π(g) f` where `g` sends `o` to `target`.
#[derive(Clone, Debug)]
pub struct Term<F> {
    pub coefficient: F,
    pub target: PathAddress,
    pub word: Automorphism,
}

/// Corrections attached to one processed vertex in one phase.
#[derive(Clone, Debug)]
pub struct CorrectionGroup<F> {
    pub stage: usize,
    pub center: PathAddress,
    pub phase: u8,
    pub size: usize,
    pub coefficient_sum: F,
}

#[derive(Clone, Debug)]
pub struct TranslateCombination<F> {
    pub shape: TreeShape,
    pub alpha: F,
    pub mode: Mode,
    /// Ball on which agreement with the target was checked.
    pub target_depth: usize,
    pub terms: Vec<Term<F>>,
    pub groups: Vec<CorrectionGroup<F>>,
    /// Number of `R(v) = 0` assertions made (special mode only).
    pub residual_assertions: usize,
}

impl<F: Scalar> TranslateCombination<F> {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Whether every correction group has coefficient sum zero.
    pub fn groups_balanced(&self) -> bool {
        self.groups.iter().all(|g| g.coefficient_sum.is_zero())
    }

    /// Upper bound on the number of terms from the staged procedure.
    pub fn term_bound(&self) -> usize {
        1 + self.groups.iter().map(|g| g.size).sum::<usize>()
    }

    /// `Σ cᵢ π(gᵢ) f` via the group action, on at least `B_depth`.
    pub fn evaluate(&self, depth: usize) -> Result<EigenFunction<F>> {
        let f = EigenFunction::radial(self.shape, self.alpha.clone(), 0)?;
        let mut acc = EigenFunction::zero(self.shape, self.alpha.clone(), depth)?;
        for term in &self.terms {
            acc = acc.add_scaled(&term.coefficient, &act(&term.word, &f, depth)?)?;
        }
        acc.extend(depth)
    }

    pub fn to_json(&self) -> Value {
        let terms: Vec<Value> = self
            .terms
            .iter()
            .map(|t| json!({ "coefficient": t.coefficient.to_json(), "target": t.target.to_string(), "word": t.word.to_json() }))
            .collect();
        json!({
            "shape": self.shape.to_string(),
            "alpha": self.alpha.to_json(),
            "mode": self.mode.name(),
            "target_depth": self.target_depth,
            "terms": terms,
            "groups": self.groups.len(),
            "groups_balanced": self.groups_balanced(),
            "residual_assertions": self.residual_assertions,
        })
    }
}

/// Homogeneous trees, `α ≠ ±1`.
pub fn synthesize_transitive<F: Scalar>(h: &EigenFunction<F>, depth: usize) -> Result<TranslateCombination<F>> {
    if !h.shape().is_transitive() {
        return Err(Error::Unsupported("transitive synthesis needs a homogeneous tree".into()));
    }
    let alpha = h.alpha();
    if *alpha == F::one() || *alpha == -F::one() {
        return Err(Error::ExcludedAlpha { alpha: alpha.to_string(), reason: "f(0) = f(2) at α = ±1".into() });
    }
    run(h, depth, Mode::Transitive)
}

/// Semi-homogeneous trees, `((s−1)α + 1)(α − 1) ≠ 0`.
pub fn synthesize_semihomogeneous<F: Scalar>(h: &EigenFunction<F>, depth: usize) -> Result<TranslateCombination<F>> {
    let shape = h.shape();
    if shape.is_transitive() {
        return Err(Error::Unsupported("two-phase synthesis needs a semi-homogeneous tree".into()));
    }
    let alpha = h.alpha();
    if *alpha == F::one() || is_degenerate(shape, alpha) {
        return Err(Error::ExcludedAlpha {
            alpha: alpha.to_string(),
            reason: "((s-1)α+1)(α-1) = 0; at α = -1/(s-1) use synthesize_special".into(),
        });
    }
    run(h, depth, Mode::SemiHomogeneous)
}

/// Semi-homogeneous trees at `α = −1/(s−1)`, for targets summing to zero
/// around every odd vertex.
pub fn synthesize_special<F: Scalar>(h: &EigenFunction<F>, depth: usize) -> Result<TranslateCombination<F>> {
    let shape = h.shape();
    if shape.is_transitive() || !is_degenerate(shape, h.alpha()) {
        return Err(Error::Unsupported("special synthesis needs a semi-homogeneous tree at α = -1/(s-1)".into()));
    }
    let check = check_depth(h, depth);
    let target = h.extend(check)?;
    let ball = TreeBall::shared(shape, check)?;
    for w in ball.ball_range(check - 1) {
        if ball.sphere_of(w) % 2 == 1 {
            let mut sum = target.value(ball.parent(w).unwrap()).clone();
            for c in ball.children(w) {
                sum += target.value(c);
            }
            if !sum.is_zero() {
                return Err(Error::Inadmissible(format!("neighbor sum {sum} at odd vertex {}", ball.address(w))));
            }
        }
    }
    run(h, depth, Mode::Special)
}

/// Dispatch on shape and eigenvalue.
pub fn synthesize<F: Scalar>(h: &EigenFunction<F>, depth: usize) -> Result<TranslateCombination<F>> {
    if h.shape().is_transitive() {
        synthesize_transitive(h, depth)
    } else if is_degenerate(h.shape(), h.alpha()) {
        synthesize_special(h, depth)
    } else {
        synthesize_semihomogeneous(h, depth)
    }
}

/// Requested depth, raised to cover one sphere past the seed ball.
fn check_depth<F: Scalar>(h: &EigenFunction<F>, depth: usize) -> usize {
    let shape = h.shape();
    let step = if shape.is_transitive() { 1 } else { 2 };
    depth.max(shape.seed_depth(h.invariance_depth()) + step)
}

struct Builder<'a, F> {
    ball: &'a TreeBall,
    profile: Vec<F>,
    step: usize,
    current: Vec<F>,
    coefficients: BTreeMap<usize, F>,
}

impl<F: Scalar> Builder<'_, F> {
    fn radial_at(&self, dist: usize) -> &F {
        &self.profile[dist / self.step]
    }

    fn add(&mut self, w: usize, c: F) {
        if c.is_zero() {
            return;
        }
        for x in 0..self.ball.len() {
            if self.ball.sphere_of(x).is_multiple_of(self.step) {
                let delta = c.clone() * self.radial_at(self.ball.distance(w, x));
                self.current[x] += &delta;
            }
        }
        let entry = self.coefficients.entry(w).or_insert_with(F::zero);
        *entry += &c;
    }
}

fn run<F: Scalar>(h: &EigenFunction<F>, depth: usize, mode: Mode) -> Result<TranslateCombination<F>> {
    let shape = h.shape();
    let alpha = h.alpha().clone();
    let step = if shape.is_transitive() { 1 } else { 2 };
    let top = shape.seed_depth(h.invariance_depth());
    let check = check_depth(h, depth);
    let ball = TreeBall::shared(shape, check)?;
    let target = h.extend(check)?;
    let target = &target.values()[..ball.len()];
    let profile = radial_eigen(shape, &alpha, 2 * check);
    let mut b = Builder { ball: &ball, profile, step, current: vec![F::zero(); ball.len()], coefficients: BTreeMap::new() };

    let f0 = b.radial_at(0).clone();
    let f2 = b.radial_at(2).clone();
    let gap = f0.clone() - &f2;
    b.add(0, target[0].clone() / &f0);

    let mut groups = Vec::new();
    let mut residual_assertions = 0;
    let mut level = 0;
    while level < top {
        for u in ball.sphere_range(level) {
            let centre = ball.address(u);
            let mut phase_one: Vec<(usize, F)> = Vec::new();
            let mut phase_two: Vec<(usize, F)> = Vec::new();
            if step == 1 {
                for w in ball.children(u) {
                    phase_one.push((w, (target[w].clone() - &b.current[w]) / &gap));
                }
            } else {
                let f4 = b.radial_at(4).clone();
                let cleanup = f0.clone() + F::from_int(shape.degree_at(1) as i64 - 2) * &f2
                    - F::from_int(shape.degree_at(1) as i64 - 1) * &f4;
                for v in ball.children(u) {
                    let mut residual = F::zero();
                    for w in ball.children(v) {
                        let diff = target[w].clone() - &b.current[w];
                        residual += &diff;
                        phase_one.push((w, diff / &gap));
                    }
                    if mode == Mode::Special {
                        residual_assertions += 1;
                        if !residual.is_zero() {
                            return Err(Error::Inadmissible(format!(
                                "R({}) = {residual}, expected zero",
                                ball.address(v)
                            )));
                        }
                        continue;
                    }
                    let extra = residual * &(f2.clone() - &f4) / &gap;
                    let c = -(extra / &cleanup);
                    for w in ball.children(v) {
                        phase_two.push((w, c.clone()));
                    }
                }
            }
            for (phase, batch) in [(1u8, phase_one), (2u8, phase_two)] {
                if batch.is_empty() {
                    continue;
                }
                let mut sum = F::zero();
                for (_, c) in &batch {
                    sum += c;
                }
                groups.push(CorrectionGroup { stage: level, center: centre.clone(), phase, size: batch.len(), coefficient_sum: sum });
                for (w, c) in batch {
                    b.add(w, c);
                }
            }
        }
        level += step;
    }

    for x in 0..ball.len() {
        if ball.sphere_of(x) % step == 0 && b.current[x] != target[x] {
            return Err(Error::NotEigen(format!(
                "combination differs from the target at {}: {} vs {}",
                ball.address(x),
                b.current[x],
                target[x]
            )));
        }
    }

    let mut terms = Vec::new();
    for (w, coefficient) in b.coefficients {
        if coefficient.is_zero() {
            continue;
        }
        let target = ball.address(w);
        let word = reach(shape, &target)?;
        if word.apply(&PathAddress::root()) != target {
            return Err(Error::InvalidAutomorphism(format!("reach word misses {target}")));
        }
        terms.push(Term { coefficient, target, word });
    }
    Ok(TranslateCombination { shape, alpha, mode, target_depth: check, terms, groups, residual_assertions })
}

/// A reproducible random element of `⊕_{n ≤ max_block} H_n` with small
/// integer coordinates in each block basis.
pub fn random_target<F: Scalar>(shape: TreeShape, alpha: F, max_block: usize, seed: u64) -> Result<EigenFunction<F>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = EigenFunction::zero(shape, alpha.clone(), 0)?;
    for n in 0..=max_block {
        for f in basis_hn(shape, alpha.clone(), n)?.functions {
            let c = F::from_int(rng.gen_range(-3..=3));
            if !c.is_zero() {
                acc = acc.add_scaled(&c, &f)?;
            }
        }
    }
    Ok(acc)
}
