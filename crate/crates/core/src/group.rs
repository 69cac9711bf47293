//! Tree automorphisms as words of atoms acting lazily on path addresses, and
//! the translation action `(π(g)h)(x) = h(g⁻¹x)` on eigenfunctions.
//!
//! A word `[a₁, …, a_k]` denotes `a₁ ∘ ⋯ ∘ a_k`, so `a_k` acts first.

use std::collections::{HashSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::spectral::EigenFunction;
use crate::tree::{PathAddress, TreeBall, TreeShape};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Atom {
    /// Permutes the child slots below `at`; `perm[k]` is the image of slot `k`.
    Perm { at: Vec<usize>, perm: Vec<usize> },
    /// Involution exchanging `o` with `at` (length 1, or length 2 on
    /// semi-homogeneous trees with the midpoint fixed).
    Swap { at: Vec<usize> },
}

impl Atom {
    fn inverse(&self) -> Atom {
        match self {
            Atom::Perm { at, perm } => {
                let mut inv = vec![0; perm.len()];
                for (k, &p) in perm.iter().enumerate() {
                    inv[p] = k;
                }
                Atom::Perm { at: at.clone(), perm: inv }
            }
            Atom::Swap { .. } => self.clone(),
        }
    }

    fn apply(&self, x: &mut Vec<usize>) {
        match self {
            Atom::Perm { at, perm } => {
                if x.len() > at.len() && x.starts_with(at) {
                    let k = at.len();
                    x[k] = perm[x[k]];
                }
            }
            Atom::Swap { at } if at.len() == 1 => swap_one(at[0], x),
            Atom::Swap { at } => swap_two(at[0], at[1], x),
        }
    }

    fn validate(&self, shape: TreeShape) -> Result<()> {
        match self {
            Atom::Perm { at, perm } => {
                PathAddress(at.clone()).validate(&shape)?;
                let slots = shape.child_slots(at.len());
                let mut seen = vec![false; slots];
                if perm.len() != slots || perm.iter().any(|&p| p >= slots || std::mem::replace(&mut seen[p], true)) {
                    return Err(Error::InvalidAutomorphism(format!(
                        "{perm:?} is not a permutation of the {slots} child slots below {}",
                        PathAddress(at.clone())
                    )));
                }
                Ok(())
            }
            Atom::Swap { at } => {
                PathAddress(at.clone()).validate(&shape)?;
                let want = if shape.is_transitive() { 1 } else { 2 };
                if at.len() != want {
                    return Err(Error::InvalidAutomorphism(format!(
                        "swap target {} must have length {want} on {shape}",
                        PathAddress(at.clone())
                    )));
                }
                Ok(())
            }
        }
    }
}

/// Slot of `o`'s neighbour corresponding to child `k` of the swapped vertex,
/// skipping the slot `t` that leads to it.
fn jslot(t: usize, k: usize) -> usize {
    if k < t {
        k
    } else {
        k + 1
    }
}

fn idx(t: usize, j: usize) -> usize {
    if j < t {
        j
    } else {
        j - 1
    }
}

fn swap_one(t: usize, x: &mut Vec<usize>) {
    match x.as_slice() {
        [] => x.push(t),
        [j] if *j == t => x.clear(),
        [j, ..] if *j == t => {
            x.remove(0);
            x[0] = jslot(t, x[0]);
        }
        _ => {
            let j = x[0];
            x[0] = idx(t, j);
            x.insert(0, t);
        }
    }
}

fn swap_two(a: usize, b: usize, x: &mut Vec<usize>) {
    match x.as_slice() {
        [] => x.extend([a, b]),
        [j] if *j == a => {}
        [j, m] if *j == a && *m == b => x.clear(),
        [j, m, ..] if *j == a && *m == b => {
            x.drain(..2);
            x[0] = jslot(a, x[0]);
        }
        [j, ..] if *j == a => {}
        _ => {
            let j = x[0];
            x[0] = idx(a, j);
            x.splice(0..0, [a, b]);
        }
    }
}

/// An automorphism given as a word of atoms.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Automorphism {
    shape: TreeShape,
    word: Vec<Atom>,
}

impl Automorphism {
    pub fn identity(shape: TreeShape) -> Self {
        Self { shape, word: Vec::new() }
    }

    pub fn from_word(shape: TreeShape, word: Vec<Atom>) -> Result<Self> {
        shape.validate()?;
        for atom in &word {
            atom.validate(shape)?;
        }
        Ok(Self { shape, word })
    }

    pub fn shape(&self) -> TreeShape {
        self.shape
    }

    pub fn word(&self) -> &[Atom] {
        &self.word
    }

    pub fn len(&self) -> usize {
        self.word.len()
    }

    pub fn is_empty(&self) -> bool {
        self.word.is_empty()
    }

    pub fn apply(&self, x: &PathAddress) -> PathAddress {
        PathAddress(self.apply_steps(x.steps()))
    }

    pub fn apply_steps(&self, x: &[usize]) -> Vec<usize> {
        let mut out = x.to_vec();
        for atom in self.word.iter().rev() {
            atom.apply(&mut out);
        }
        out
    }

    pub fn inverse(&self) -> Self {
        Self { shape: self.shape, word: self.word.iter().rev().map(Atom::inverse).collect() }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Self {
        let mut word = self.word.clone();
        word.extend(other.word.iter().cloned());
        Self { shape: self.shape, word }
    }

    /// `d(o, g·o)`.
    pub fn displacement(&self) -> usize {
        self.apply_steps(&[]).len()
    }

    pub fn fixes_root(&self) -> bool {
        self.displacement() == 0
    }

    /// For each vertex `x` of `B_depth`, the dense index of `g⁻¹x` in `B_{depth+δ}`.
    pub fn pullback_table(&self, depth: usize) -> Result<Vec<usize>> {
        let delta = self.displacement();
        let target = TreeBall::shared(self.shape, depth)?;
        let source = TreeBall::shared(self.shape, depth + delta)?;
        let inv = self.inverse();
        (0..target.len())
            .map(|x| {
                let pre = inv.apply_steps(target.address(x).steps());
                source.index_of_steps(&pre).ok_or_else(|| {
                    Error::InvalidAutomorphism(format!("preimage {} escapes the ball", PathAddress(pre)))
                })
            })
            .collect()
    }

    /// Whether every edge of `B_depth` maps to an edge.
    pub fn preserves_adjacency(&self, depth: usize) -> Result<bool> {
        let ball = TreeBall::shared(self.shape, depth)?;
        for v in 1..ball.len() {
            let a = self.apply_steps(ball.address(v).steps());
            let b = self.apply_steps(ball.address(ball.parent(v).unwrap()).steps());
            let adjacent = (a.len() == b.len() + 1 && a.starts_with(&b)) || (b.len() == a.len() + 1 && b.starts_with(&a));
            if !adjacent {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Whether `self` and `other` agree on every vertex of `B_depth`.
    pub fn agrees_on(&self, other: &Self, depth: usize) -> Result<bool> {
        let ball = TreeBall::shared(self.shape, depth)?;
        Ok((0..ball.len()).all(|v| {
            let x = ball.address(v);
            self.apply(&x) == other.apply(&x)
        }))
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(&self.word).expect("atoms serialize")
    }

    pub fn from_json(shape: TreeShape, v: &serde_json::Value) -> Result<Self> {
        let word: Vec<Atom> = serde_json::from_value(v.clone()).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_word(shape, word)
    }
}

/// Element of `K` permuting the child slots below `at`.
pub fn rooted_perm(shape: TreeShape, at: PathAddress, perm: Vec<usize>) -> Result<Automorphism> {
    Automorphism::from_word(shape, vec![Atom::Perm { at: at.0, perm }])
}

/// Transposition of child slots `i` and `j` below `at`.
pub fn transposition(shape: TreeShape, at: PathAddress, i: usize, j: usize) -> Result<Automorphism> {
    let slots = shape.child_slots(at.len());
    if i >= slots || j >= slots {
        return Err(Error::InvalidAutomorphism(format!("slots {i},{j} out of range below {at}")));
    }
    let mut perm: Vec<usize> = (0..slots).collect();
    perm.swap(i, j);
    rooted_perm(shape, at, perm)
}

/// The involution exchanging `o` and `target`.
pub fn swap(shape: TreeShape, target: PathAddress) -> Result<Automorphism> {
    Automorphism::from_word(shape, vec![Atom::Swap { at: target.0 }])
}

/// The fixed swap used as the translation generator: `o ↔ (0)` or `o ↔ (0,0)`.
pub fn base_swap(shape: TreeShape) -> Automorphism {
    let at = if shape.is_transitive() { vec![0] } else { vec![0, 0] };
    Automorphism { shape, word: vec![Atom::Swap { at }] }
}

/// A word sending `o` to `target`, built outward one step (two on the even
/// lattice) at a time from the base swap and root-level transpositions.
pub fn reach(shape: TreeShape, target: &PathAddress) -> Result<Automorphism> {
    target.validate(&shape)?;
    let step = if shape.is_transitive() { 1 } else { 2 };
    if !target.len().is_multiple_of(step) {
        return Err(Error::InvalidAddress {
            address: target.to_string(),
            reason: "only even-distance vertices are reachable by type-preserving automorphisms".into(),
        });
    }
    let s = base_swap(shape);
    let mut word = Vec::new();
    let mut x = target.0.clone();
    while !x.is_empty() {
        // σ sends the base swap's target to the first `step` slots of x.
        let mut sigma = Vec::new();
        for (level, &slot) in x.iter().take(step).enumerate() {
            if slot != 0 {
                let slots = shape.child_slots(level);
                let mut perm: Vec<usize> = (0..slots).collect();
                perm.swap(0, slot);
                sigma.push(Atom::Perm { at: vec![0; level], perm });
            }
        }
        let sigma = Automorphism { shape, word: sigma };
        let pulled = sigma.inverse().apply_steps(&x);
        x = s.apply_steps(&pulled);
        word.extend(sigma.word);
        word.extend(s.word.iter().cloned());
    }
    Ok(Automorphism { shape, word })
}

/// All single-site transpositions at vertices of `B_{depth-1}`: the working
/// generator family for `K`.
pub fn k_generators(shape: TreeShape, depth: usize) -> Result<Vec<Automorphism>> {
    let mut out = Vec::new();
    if depth == 0 {
        return Ok(out);
    }
    let ball = TreeBall::shared(shape, depth - 1)?;
    for v in 0..ball.len() {
        let at = ball.address(v);
        let slots = shape.child_slots(at.len());
        for i in 0..slots {
            for j in i + 1..slots {
                out.push(transposition(shape, at.clone(), i, j)?);
            }
        }
    }
    Ok(out)
}

/// Product of `factors` uniformly sampled single-site transpositions at
/// vertices of `B_{depth-1}`.
pub fn random_k_element<R: Rng>(shape: TreeShape, depth: usize, factors: usize, rng: &mut R) -> Result<Automorphism> {
    if depth == 0 {
        return Ok(Automorphism::identity(shape));
    }
    let ball = TreeBall::shared(shape, depth - 1)?;
    let mut word = Vec::with_capacity(factors);
    for _ in 0..factors {
        let v = rng.gen_range(0..ball.len());
        let at = ball.address(v).0;
        let slots = shape.child_slots(at.len());
        let i = rng.gen_range(0..slots);
        let j = (i + rng.gen_range(1..slots)) % slots;
        let mut perm: Vec<usize> = (0..slots).collect();
        perm.swap(i, j);
        word.push(Atom::Perm { at, perm });
    }
    Ok(Automorphism { shape, word })
}

/// `count` reproducible samples of [`random_k_element`].
pub fn sample_k_elements(shape: TreeShape, depth: usize, count: usize, seed: u64) -> Result<Vec<Automorphism>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_k_element(shape, depth, 4, &mut rng)).collect()
}

/// Orbit of vertex `v` of `ball` under the group generated by `generators`.
pub fn orbit(ball: &TreeBall, v: usize, generators: &[Automorphism]) -> Result<Vec<usize>> {
    let mut seen = HashSet::from([v]);
    let mut queue = VecDeque::from([v]);
    while let Some(u) = queue.pop_front() {
        let addr = ball.address(u);
        for g in generators {
            let image = g.apply(&addr);
            let w = ball
                .index_of(&image)
                .ok_or_else(|| Error::InvalidAutomorphism(format!("{image} escapes the ball")))?;
            if seen.insert(w) {
                queue.push_back(w);
            }
        }
    }
    let mut out: Vec<usize> = seen.into_iter().collect();
    out.sort_unstable();
    Ok(out)
}

/// `π(g)h`, materialized on at least `B_depth`. The result has invariance
/// depth `n₀(h) + δ(g)`.
pub fn act<F: Scalar>(g: &Automorphism, h: &EigenFunction<F>, depth: usize) -> Result<EigenFunction<F>> {
    Ok(act_many(g, std::slice::from_ref(h), depth)?.pop().unwrap())
}

/// [`act`] over several functions, sharing one pullback table.
pub fn act_many<F: Scalar>(g: &Automorphism, hs: &[EigenFunction<F>], depth: usize) -> Result<Vec<EigenFunction<F>>> {
    let delta = g.displacement();
    let Some(max_n0) = hs.iter().map(EigenFunction::invariance_depth).max() else {
        return Ok(Vec::new());
    };
    let shape = g.shape();
    let out_depth = depth.max(shape.seed_depth(max_n0 + delta));
    let table = g.pullback_table(out_depth)?;
    let ball = TreeBall::shared(shape, out_depth)?;
    hs.iter()
        .map(|h| {
            if h.shape() != shape {
                return Err(Error::Unsupported(format!("automorphism of {shape} applied to a function on {}", h.shape())));
            }
            let src = h.extend(out_depth + delta)?;
            let values = table.iter().map(|&i| src.value(i).clone()).collect();
            Ok(EigenFunction::from_parts(shape, h.alpha().clone(), h.invariance_depth() + delta, ball.clone(), values))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;
    use proptest::prelude::*;

    fn h(d: usize) -> TreeShape {
        TreeShape::homogeneous(d).unwrap()
    }
    fn sh(r: usize, s: usize) -> TreeShape {
        TreeShape::semi_homogeneous(r, s).unwrap()
    }
    fn a(steps: &[usize]) -> PathAddress {
        PathAddress(steps.to_vec())
    }

    #[test]
    fn rooted_perm_examples() {
        let id = rooted_perm(h(3), a(&[]), vec![0, 1, 2]).unwrap();
        assert!(id.agrees_on(&Automorphism::identity(h(3)), 4).unwrap());
        let t = transposition(h(3), a(&[]), 0, 1).unwrap();
        assert_eq!(t.apply(&a(&[0])), a(&[1]));
        assert_eq!(t.apply(&a(&[0, 1, 0])), a(&[1, 1, 0]));
        assert!(rooted_perm(h(3), a(&[]), vec![0, 0, 1]).is_err());
        assert!(rooted_perm(h(3), a(&[0]), vec![0, 1, 2]).is_err());
    }

    #[test]
    fn swap_properties() {
        for (shape, target) in [(h(3), a(&[1])), (h(4), a(&[3])), (sh(3, 4), a(&[1, 2])), (sh(4, 3), a(&[2, 0]))] {
            let g = swap(shape, target.clone()).unwrap();
            assert_eq!(g.apply(&PathAddress::root()), target);
            assert_eq!(g.apply(&target), PathAddress::root());
            assert!(g.compose(&g).agrees_on(&Automorphism::identity(shape), 5).unwrap());
            assert!(g.preserves_adjacency(5).unwrap());
            let ball = TreeBall::shared(shape, 4).unwrap();
            let t = ball.index_of(&target).unwrap();
            let big = TreeBall::shared(shape, 6).unwrap();
            for x in 0..ball.len() {
                let image = big.index_of(&g.apply(&ball.address(x))).unwrap();
                assert_eq!(big.distance(0, image), ball.distance(t, x));
            }
        }
        assert!(swap(h(3), a(&[0, 1])).is_err());
        assert!(swap(sh(3, 4), a(&[0])).is_err());
    }

    #[test]
    fn semi_swap_fixes_midpoint_and_preserves_degrees() {
        let shape = sh(3, 4);
        let g = swap(shape, a(&[0, 1])).unwrap();
        assert_eq!(g.apply(&a(&[0])), a(&[0]));
        assert_eq!(g.apply(&a(&[0, 2, 1])), a(&[0, 2, 1]));
        let ball = TreeBall::shared(shape, 4).unwrap();
        for x in 0..ball.len() {
            assert_eq!(g.apply(&ball.address(x)).len() % 2, ball.sphere_of(x) % 2);
        }
    }

    #[test]
    fn reach_examples() {
        assert!(reach(h(3), &PathAddress::root()).unwrap().is_empty());
        let g = reach(h(3), &a(&[0])).unwrap();
        assert_eq!(g.len(), 1);
        for shape in [h(3), h(4), sh(3, 4)] {
            let ball = TreeBall::shared(shape, 4).unwrap();
            for x in 0..ball.len() {
                let target = ball.address(x);
                if !shape.is_transitive() && target.len() % 2 == 1 {
                    assert!(reach(shape, &target).is_err());
                    continue;
                }
                let g = reach(shape, &target).unwrap();
                assert_eq!(g.apply(&PathAddress::root()), target);
                assert!(g.len() <= 2 * target.len() + 1);
            }
        }
    }

    #[test]
    fn orbits_fill_spheres() {
        for shape in [h(3), sh(3, 4)] {
            let gens = k_generators(shape, 5).unwrap();
            let ball = TreeBall::shared(shape, 5).unwrap();
            for n in 0..=5 {
                let v = ball.sphere_range(n).end - 1;
                let orb = orbit(&ball, v, &gens).unwrap();
                assert_eq!(orb, ball.sphere_range(n).collect::<Vec<_>>());
            }
        }
    }

    #[test]
    fn act_examples() {
        let shape = h(3);
        let f = EigenFunction::radial(shape, rat(1, 2), 3).unwrap();
        let id = Automorphism::identity(shape);
        assert_eq!(act(&id, &f, 3).unwrap().values(), f.values());
        for g in sample_k_elements(shape, 3, 5, 11).unwrap() {
            assert_eq!(act(&g, &f, 3).unwrap().values(), f.values());
        }
        let g = swap(shape, a(&[0])).unwrap();
        let gf = act(&g, &f, 3).unwrap();
        assert_eq!(gf.invariance_depth(), 1);
        assert!(gf.extend(5).unwrap().check_eigen());
        // π(g)f is the spherical function centred at (0).
        assert_eq!(gf.value(1), &rat(1, 1));
        assert_eq!(gf.value(0), &rat(1, 2));
    }

    #[test]
    fn word_json_round_trip() {
        let shape = sh(3, 4);
        let g = reach(shape, &a(&[2, 1, 1, 2])).unwrap();
        let js = g.to_json();
        assert_eq!(js[0]["kind"], "perm");
        assert_eq!(Automorphism::from_json(shape, &js).unwrap(), g);
    }

    fn random_word(shape: TreeShape, picks: &[(bool, usize)]) -> Automorphism {
        let mut rng = ChaCha8Rng::seed_from_u64(picks.len() as u64);
        let mut g = Automorphism::identity(shape);
        let ball = TreeBall::shared(shape, 1).unwrap();
        for &(is_swap, k) in picks {
            let atom = if is_swap {
                let target = if shape.is_transitive() {
                    ball.address(1 + k % 3)
                } else {
                    a(&[k % 3, k % 3])
                };
                swap(shape, target).unwrap()
            } else {
                random_k_element(shape, 2, 1, &mut rng).unwrap()
            };
            g = g.compose(&atom);
        }
        g
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn representation_property(p1 in proptest::collection::vec((any::<bool>(), 0usize..6), 0..3),
                                   p2 in proptest::collection::vec((any::<bool>(), 0usize..6), 0..3),
                                   semi in any::<bool>()) {
            let (shape, alpha) = if semi { (sh(3, 4), rat(1, 3)) } else { (h(3), rat(1, 2)) };
            let g1 = random_word(shape, &p1);
            let g2 = random_word(shape, &p2);
            let f = EigenFunction::radial(shape, alpha, 0).unwrap();
            let lhs = act(&g1, &act(&g2, &f, 4).unwrap(), 4).unwrap();
            let rhs = act(&g1.compose(&g2), &f, 4).unwrap();
            prop_assert!(lhs.agrees_on(&rhs, 4).unwrap());
            prop_assert!(lhs.extend(lhs.depth() + 2).unwrap().check_eigen());
        }

        #[test]
        fn inverse_undoes(p in proptest::collection::vec((any::<bool>(), 0usize..6), 0..5), semi in any::<bool>()) {
            let shape = if semi { sh(3, 4) } else { h(4) };
            let g = random_word(shape, &p);
            prop_assert!(g.compose(&g.inverse()).agrees_on(&Automorphism::identity(shape), 4).unwrap());
            prop_assert!(g.preserves_adjacency(4).unwrap());
        }
    }
}
