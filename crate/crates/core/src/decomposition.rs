//! The K-invariant block decomposition `H = ⊕ H_n`.
//!
//! Block `n ≥ 1` is coordinatized by values on `S_n`, grouped by parent: the
//! coordinates under each `v ∈ S_{n-1}` sum to zero. A block function vanishes
//! on `B_{n-1}` and is cone-radial beyond its data. On the even lattice an odd
//! block `n = 2k-1` places each coordinate `y(w)` on all of `N(w) ⊂ S_{2k}`.

use std::collections::BTreeMap;
use std::ops::Range;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::SparseEchelon;
use crate::scalar::Scalar;
use crate::spectral::EigenFunction;
use crate::tree::{Lattice, TreeBall, TreeShape};

/// Whether `α = −1/(s−1)` on a semi-homogeneous shape, where odd blocks vanish
/// and only the admissible eigenfunctions belong to the representation.
pub fn is_degenerate<F: Scalar>(shape: TreeShape, alpha: &F) -> bool {
    match shape {
        TreeShape::Homogeneous { .. } => false,
        TreeShape::SemiHomogeneous { s, .. } => (alpha.clone() * &F::from_int(s as i64 - 1) + F::one()).is_zero(),
    }
}

/// Sphere carrying the function values that define block `n`.
pub fn data_sphere(shape: TreeShape, n: usize) -> usize {
    match shape.lattice() {
        Lattice::Full => n,
        Lattice::Even => n + n % 2,
    }
}

/// Closed-form `dim H_n`.
pub fn expected_dim(shape: TreeShape, n: usize, degenerate: bool) -> u128 {
    if n == 0 {
        return 1;
    }
    match shape {
        TreeShape::Homogeneous { d } => {
            let d = d as u128;
            if n == 1 {
                d - 1
            } else {
                d * (d - 2) * (d - 1).pow(n as u32 - 2)
            }
        }
        TreeShape::SemiHomogeneous { r, s } => {
            let (r, s) = (r as u128, s as u128);
            let k = (n as u32).div_ceil(2);
            if n % 2 == 1 {
                if degenerate {
                    0
                } else if k == 1 {
                    r - 1
                } else {
                    r * (r - 2) * (r - 1).pow(k - 2) * (s - 1).pow(k - 1)
                }
            } else {
                r * (r - 1).pow(k - 1) * (s - 2) * (s - 1).pow(k - 1)
            }
        }
    }
}

/// Index ranges on `S_n` whose coordinates must sum to zero: the children of
/// each vertex of `S_{n-1}`.
pub fn block_groups(ball: &TreeBall, n: usize) -> Vec<Range<usize>> {
    assert!(n >= 1 && n <= ball.depth());
    ball.sphere_range(n - 1).map(|v| ball.children(v)).collect()
}

/// Dimension of the α-eigenfunctions with invariance depth at most `n0`,
/// computed as a nullspace dimension on the seed ball. On a degenerate
/// semi-homogeneous shape the admissibility constraints (vanishing neighbour
/// sums around odd vertices) are included.
pub fn eigenspace_dimension<F: Scalar>(shape: TreeShape, alpha: &F, n0: usize) -> Result<usize> {
    let seed = shape.seed_depth(n0);
    let ball = TreeBall::shared(shape, seed)?;
    let col = |x: usize| ball.len() - 1 - x;
    let mut ech = SparseEchelon::<F>::new();
    match shape {
        TreeShape::Homogeneous { .. } => {
            if seed == 0 {
                return Ok(1);
            }
            for v in ball.ball_range(seed - 1) {
                let mut row: Vec<(usize, F)> = ball.neighbors(v).into_iter().map(|w| (col(w), F::one())).collect();
                row.push((col(v), -(F::from_int(ball.degree(v) as i64) * alpha)));
                ech.insert(row);
            }
            Ok(ball.len() - ech.rank())
        }
        TreeShape::SemiHomogeneous { r, s } => {
            let odd = n0 % 2 == 1;
            // With odd invariance depth the seed sphere is one unknown per N(w).
            let var = |x: usize| -> usize {
                if odd && ball.sphere_of(x) == seed {
                    col(ball.parent(x).unwrap())
                } else {
                    col(x)
                }
            };
            let mut unknowns = 0usize;
            for n in 0..=seed {
                if n % 2 == 0 && !(odd && n == seed) {
                    unknowns += ball.sphere_range(n).len();
                }
            }
            if odd {
                unknowns += ball.sphere_range(seed - 1).len();
            }
            let count = F::from_int((r * (s - 1)) as i64);
            if seed >= 2 {
                for m in (0..=seed - 2).step_by(2) {
                    for v in ball.sphere_range(m) {
                        let mut row = vec![(var(v), -(count.clone() * alpha))];
                        row.extend(ball.grandchildren(v).map(|w| (var(w), F::one())));
                        if let Some(p) = ball.parent(v) {
                            row.push((var(ball.parent(p).unwrap()), F::one()));
                            row.extend(ball.children(p).filter(|&x| x != v).map(|x| (var(x), F::one())));
                        }
                        ech.insert(row);
                    }
                }
            }
            if is_degenerate(shape, alpha) {
                for m in (1..seed).step_by(2) {
                    for w in ball.sphere_range(m) {
                        let mut row = vec![(var(ball.parent(w).unwrap()), F::one())];
                        row.extend(ball.children(w).map(|x| (var(x), F::one())));
                        ech.insert(row);
                    }
                }
            }
            Ok(unknowns - ech.rank())
        }
    }
}

/// `dim H_n` computed as a difference of eigenspace dimensions.
pub fn computed_dim<F: Scalar>(shape: TreeShape, alpha: &F, n: usize) -> Result<usize> {
    let upper = eigenspace_dimension(shape, alpha, n)?;
    let lower = if n == 0 { 0 } else { eigenspace_dimension(shape, alpha, n - 1)? };
    Ok(upper - lower)
}

/// A basis of one block `H_n`.
#[derive(Clone, Debug)]
pub struct SubspaceBasis<F> {
    pub n: usize,
    pub shape: TreeShape,
    pub alpha: F,
    /// Coordinates on `S_n` for each basis function (sparse: dense index, value).
    pub data: Vec<Vec<(usize, F)>>,
    pub functions: Vec<EigenFunction<F>>,
}

impl<F: Scalar> SubspaceBasis<F> {
    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn expected_dim(&self) -> u128 {
        expected_dim(self.shape, self.n, is_degenerate(self.shape, &self.alpha))
    }
}

/// Basis of `H_n`: block 0 is the radial function; for `n ≥ 1` each parent
/// group `[c₀, …, c_m]` contributes `e_{c₀} − e_{c_j}` for `j = 1..m`.
pub fn basis_hn<F: Scalar>(shape: TreeShape, alpha: F, n: usize) -> Result<SubspaceBasis<F>> {
    shape.validate()?;
    if n == 0 {
        let f = EigenFunction::radial(shape, alpha.clone(), 0)?;
        return Ok(SubspaceBasis { n, shape, alpha, data: vec![vec![(0, F::one())]], functions: vec![f] });
    }
    let mut out = SubspaceBasis { n, shape, alpha: alpha.clone(), data: Vec::new(), functions: Vec::new() };
    if n % 2 == 1 && is_degenerate(shape, &alpha) {
        return Ok(out);
    }
    let ball = TreeBall::shared(shape, data_sphere(shape, n))?;
    for group in block_groups(&ball, n) {
        let c0 = group.start;
        for cj in group.clone().skip(1) {
            let coords = vec![(c0, F::one()), (cj, -F::one())];
            out.functions.push(block_function(&ball, alpha.clone(), n, &coords)?);
            out.data.push(coords);
        }
    }
    Ok(out)
}

/// The block-`n` function with the given sparse coordinates on `S_n`.
pub fn block_function<F: Scalar>(
    ball: &TreeBall,
    alpha: F,
    n: usize,
    coords: &[(usize, F)],
) -> Result<EigenFunction<F>> {
    let shape = ball.shape();
    let top = data_sphere(shape, n);
    let range = ball.sphere_range(top);
    let mut data = vec![F::zero(); range.len()];
    for (x, value) in coords {
        if top == n {
            data[x - range.start] = value.clone();
        } else {
            for c in ball.children(*x) {
                data[c - range.start] = value.clone();
            }
        }
    }
    EigenFunction::from_sphere_data(shape, alpha, n, data)
}

/// Per-block coordinates of a function: sparse `(rank on S_n, value)` pairs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlockData<F> {
    pub n: usize,
    pub values: Vec<(u32, F)>,
}

/// Result of peeling an eigenfunction into its blocks.
#[derive(Clone, Debug)]
pub struct Decomposition<F> {
    pub shape: TreeShape,
    pub alpha: F,
    /// Depth of the ball on which the round trip was verified.
    pub depth: usize,
    /// Block coordinates, including empty blocks up to the top block.
    pub blocks: Vec<BlockData<F>>,
    /// Block functions, present when requested.
    pub components: BTreeMap<usize, EigenFunction<F>>,
}

impl<F: Scalar> Decomposition<F> {
    pub fn block(&self, n: usize) -> Option<&BlockData<F>> {
        self.blocks.get(n)
    }

    /// Indices of the nonzero blocks.
    pub fn support(&self) -> Vec<usize> {
        self.blocks.iter().filter(|b| !b.values.is_empty()).map(|b| b.n).collect()
    }

    /// Coordinates of block `n` in the [`basis_hn`] basis: `β_j = −x_{c_j}`.
    pub fn basis_coordinates(&self, n: usize) -> Result<Vec<F>> {
        let ball = TreeBall::shared(self.shape, n.max(1))?;
        let mut dense = vec![F::zero(); ball.sphere_range(n).len()];
        if let Some(b) = self.blocks.get(n) {
            for (k, v) in &b.values {
                dense[*k as usize] = v.clone();
            }
        }
        if n == 0 {
            return Ok(dense);
        }
        if n % 2 == 1 && is_degenerate(self.shape, &self.alpha) {
            return Ok(Vec::new());
        }
        let start = ball.sphere_range(n).start;
        let mut out = Vec::new();
        for group in block_groups(&ball, n) {
            for cj in group.skip(1) {
                out.push(-dense[cj - start].clone());
            }
        }
        Ok(out)
    }

    /// Sum of the stored components.
    pub fn reconstruct(&self) -> Result<EigenFunction<F>> {
        let mut acc = EigenFunction::zero(self.shape, self.alpha.clone(), self.depth)?;
        for c in self.components.values() {
            acc = acc.add(c)?;
        }
        Ok(acc)
    }
}

/// Peel `h` into blocks: block 0 is `h(o)·f`, then each block is read off the
/// residual's next coordinate sphere and subtracted. Fails if a sum-zero
/// constraint is violated, if an odd block is nonzero at the degenerate
/// eigenvalue, or if a residual survives.
pub fn peel_decompose<F: Scalar>(h: &EigenFunction<F>) -> Result<Decomposition<F>> {
    peel(h, true)
}

/// [`peel_decompose`] without materializing the block functions.
pub fn peel_blocks<F: Scalar>(h: &EigenFunction<F>) -> Result<Decomposition<F>> {
    peel(h, false)
}

fn peel<F: Scalar>(h: &EigenFunction<F>, keep: bool) -> Result<Decomposition<F>> {
    let shape = h.shape();
    let alpha = h.alpha().clone();
    let top = shape.seed_depth(h.invariance_depth());
    // Without stored components the seed ball suffices: a residual of
    // invariance depth at most n₀ that vanishes there vanishes everywhere.
    let depth = if keep { h.depth() } else { top };
    let ball = TreeBall::shared(shape, depth)?;
    let degenerate = is_degenerate(shape, &alpha);
    let mut residual = h.values()[ball.ball_range(depth)].to_vec();
    let mut blocks = Vec::with_capacity(top + 1);
    let mut components = BTreeMap::new();

    let c0 = h.value(0).clone();
    let f = EigenFunction::radial(shape, alpha.clone(), depth)?;
    let f0 = f.scale(&c0);
    subtract_from(&mut residual, &f0, 0);
    blocks.push(BlockData { n: 0, values: if c0.is_zero() { vec![] } else { vec![(0, c0.clone())] } });
    if keep {
        components.insert(0, f0);
    }

    for n in 1..=top {
        let range = ball.sphere_range(n);
        let coords: Vec<F> = if n == data_sphere(shape, n) {
            residual[range.clone()].to_vec()
        } else {
            let size = F::from_int(shape.child_slots(n) as i64);
            range
                .clone()
                .map(|w| {
                    let mut sum = F::zero();
                    for x in ball.children(w) {
                        sum += &residual[x];
                    }
                    sum / &size
                })
                .collect()
        };
        for v in ball.sphere_range(n - 1) {
            let mut sum = F::zero();
            for c in ball.children(v) {
                sum += &coords[c - range.start];
            }
            if !sum.is_zero() {
                return Err(Error::NotEigen(format!(
                    "block {n}: coordinates under {} sum to {sum}, not zero",
                    ball.address(v)
                )));
            }
        }
        let sparse: Vec<(usize, F)> = coords
            .into_iter()
            .enumerate()
            .filter(|(_, x)| !x.is_zero())
            .map(|(k, x)| (range.start + k, x))
            .collect();
        if n % 2 == 1 && degenerate && !sparse.is_empty() {
            return Err(Error::Inadmissible(format!(
                "nonzero neighbour means on S_{} at α = {alpha}",
                n + 1
            )));
        }
        if !sparse.is_empty() {
            let component = block_function(&ball, alpha.clone(), n, &sparse)?.extend(depth)?;
            subtract_from(&mut residual, &component, ball.sphere_range(n).start);
            if keep {
                components.insert(n, component);
            }
        }
        blocks.push(BlockData {
            n,
            values: sparse.into_iter().map(|(x, v)| ((x - range.start) as u32, v)).collect(),
        });
    }

    if let Some(v) = residual.iter().position(|x| !x.is_zero()) {
        return Err(Error::NotEigen(format!(
            "nonzero residual at {} after peeling {} blocks",
            ball.address(v),
            top + 1
        )));
    }
    Ok(Decomposition { shape, alpha, depth, blocks, components })
}

fn subtract_from<F: Scalar>(residual: &mut [F], component: &EigenFunction<F>, from: usize) {
    for (r, c) in residual[from..].iter_mut().zip(&component.values()[from..]) {
        if !c.is_zero() {
            *r -= c;
        }
    }
}

/// Average over each sphere of the lattice: the K-average of `h`.
pub fn radialize<F: Scalar>(h: &EigenFunction<F>) -> Result<EigenFunction<F>> {
    let ball = h.ball();
    let mut values = vec![F::zero(); ball.len()];
    for n in 0..=ball.depth() {
        if !h.lattice().contains_depth(n) {
            continue;
        }
        let range = ball.sphere_range(n);
        let mut sum = F::zero();
        for v in range.clone() {
            sum += h.value(v);
        }
        let mean = sum / F::from_int(range.len() as i64);
        for v in range {
            values[v] = mean.clone();
        }
    }
    Ok(EigenFunction::from_parts(h.shape(), h.alpha().clone(), 0, ball.clone(), values))
}
