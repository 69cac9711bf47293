//! Laplacian / 2-Laplacian eigenfunctions on tree balls.
//!
//! An [`EigenFunction`] is stored densely on a ball `B_M(o)` together with
//! its invariance depth `n₀`: beyond `S_{n₀}` it is radial inside every cone,
//! so the eigen equation at each vertex `u` with `d(o,u) ≥ n₀` fixes the
//! common value of the children (grandchildren, on the even lattice) of `u`.
//! That rule is what [`EigenFunction::extend`] applies.

use std::sync::Arc;

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tree::{Lattice, PathAddress, TreeBall, TreeShape};

/// `(Lh)(v)` for every `v ∈ B_{M-1}`: the average over the neighbours of `v`.
pub fn laplacian_apply<F: Scalar>(ball: &TreeBall, values: &[F]) -> Result<Vec<F>> {
    check_len(ball, values)?;
    if ball.depth() == 0 {
        return Ok(Vec::new());
    }
    let out = ball
        .ball_range(ball.depth() - 1)
        .map(|v| {
            let mut sum = F::zero();
            for w in ball.neighbors(v) {
                sum += &values[w];
            }
            sum / F::from_int(ball.degree(v) as i64)
        })
        .collect();
    Ok(out)
}

/// `(L₂h)(v)` for every even `v ∈ B_{M-2}`: the average over vertices at
/// distance exactly two. Entries at odd vertices of the output are zero.
pub fn two_laplacian_apply<F: Scalar>(ball: &TreeBall, values: &[F]) -> Result<Vec<F>> {
    check_len(ball, values)?;
    let TreeShape::SemiHomogeneous { r, s } = ball.shape() else {
        return Err(Error::Unsupported("the 2-Laplacian acts on semi-homogeneous trees".into()));
    };
    if ball.depth() < 2 {
        return Ok(Vec::new());
    }
    let count = F::from_int((r * (s - 1)) as i64);
    let mut out = vec![F::zero(); ball.ball_range(ball.depth() - 2).len()];
    for m in (0..=ball.depth() - 2).step_by(2) {
        for v in ball.sphere_range(m) {
            out[v] = distance_two_sum(ball, values, v) / &count;
        }
    }
    Ok(out)
}

fn check_len<F>(ball: &TreeBall, values: &[F]) -> Result<()> {
    if values.len() != ball.len() {
        return Err(Error::MissingValues(format!(
            "expected {} values on B_{}, got {}",
            ball.len(),
            ball.depth(),
            values.len()
        )));
    }
    Ok(())
}

/// Sum of `values` over the distance-2 sphere of an even vertex `v` whose
/// grandchildren lie in the ball.
fn distance_two_sum<F: Scalar>(ball: &TreeBall, values: &[F], v: usize) -> F {
    let mut sum = F::zero();
    for w in ball.grandchildren(v) {
        sum += &values[w];
    }
    if let Some(p) = ball.parent(v) {
        if let Some(gp) = ball.parent(p) {
            sum += &values[gp];
        }
        for sib in ball.children(p) {
            if sib != v {
                sum += &values[sib];
            }
        }
    }
    sum
}

/// Radial eigenprofile normalized by `f(0) = 1`.
///
/// Homogeneous shapes return `f(0), f(1), …, f(depth)`. Semi-homogeneous
/// shapes live on the even lattice and return `f(0), f(2), …, f(2⌊depth/2⌋)`,
/// i.e. entry `k` is the value at distance `2k`.
pub fn radial_eigen<F: Scalar>(shape: TreeShape, alpha: &F, depth: usize) -> Vec<F> {
    match shape {
        TreeShape::Homogeneous { d } => {
            let mut f = vec![F::one()];
            if depth >= 1 {
                f.push(alpha.clone());
            }
            let d_alpha = F::from_int(d as i64) * alpha;
            let denom = F::from_int(d as i64 - 1);
            for n in 1..depth {
                let next = (d_alpha.clone() * &f[n] - &f[n - 1]) / &denom;
                f.push(next);
            }
            f
        }
        TreeShape::SemiHomogeneous { r, s } => {
            let steps = depth / 2;
            let mut f = vec![F::one()];
            if steps >= 1 {
                f.push(alpha.clone());
            }
            let lead = F::from_int((r * (s - 1)) as i64) * alpha - &F::from_int(s as i64 - 2);
            let denom = F::from_int(((r - 1) * (s - 1)) as i64);
            for k in 1..steps {
                let next = (lead.clone() * &f[k] - &f[k - 1]) / &denom;
                f.push(next);
            }
            f
        }
    }
}

/// Whether the eigen equation holds exactly at every checkable vertex of the
/// ball (all of `B_{M-1}`, or the even vertices of `B_{M-2}`).
pub fn is_eigen<F: Scalar>(ball: &TreeBall, values: &[F], alpha: &F) -> bool {
    values.len() == ball.len() && eigen_defects(ball, values, alpha).is_empty()
}

/// Vertices where `Lh ≠ αh` (resp. `L₂h ≠ αh`), with the defect `Lh − αh`.
pub fn eigen_defects<F: Scalar>(ball: &TreeBall, values: &[F], alpha: &F) -> Vec<(usize, F)> {
    let mut out = Vec::new();
    match ball.shape() {
        TreeShape::Homogeneous { .. } => {
            if ball.depth() == 0 {
                return out;
            }
            for v in ball.ball_range(ball.depth() - 1) {
                let mut sum = F::zero();
                for w in ball.neighbors(v) {
                    sum += &values[w];
                }
                let defect = sum / F::from_int(ball.degree(v) as i64) - &(alpha.clone() * &values[v]);
                if !defect.is_zero() {
                    out.push((v, defect));
                }
            }
        }
        TreeShape::SemiHomogeneous { r, s } => {
            if ball.depth() < 2 {
                return out;
            }
            let count = F::from_int((r * (s - 1)) as i64);
            for m in (0..=ball.depth() - 2).step_by(2) {
                for v in ball.sphere_range(m) {
                    let avg = distance_two_sum(ball, values, v) / &count;
                    let defect = avg - &(alpha.clone() * &values[v]);
                    if !defect.is_zero() {
                        out.push((v, defect));
                    }
                }
            }
        }
    }
    out
}

/// A Laplacian (or 2-Laplacian) eigenfunction with a finite description.
#[derive(Clone, Debug)]
pub struct EigenFunction<F> {
    shape: TreeShape,
    alpha: F,
    invariance_depth: usize,
    ball: Arc<TreeBall>,
    values: Vec<F>,
}

impl<F: Scalar> PartialEq for EigenFunction<F> {
    /// Equal as functions: same shape and eigenvalue, same values everywhere
    /// (compared after extending both to a common depth past their
    /// invariance depths).
    fn eq(&self, other: &Self) -> bool {
        if self.shape != other.shape || self.alpha != other.alpha {
            return false;
        }
        let depth = self
            .depth()
            .max(other.depth())
            .max(self.shape.seed_depth(self.invariance_depth.max(other.invariance_depth)) + 2);
        match (self.extend(depth), other.extend(depth)) {
            (Ok(a), Ok(b)) => a.values == b.values,
            _ => false,
        }
    }
}

impl<F: Scalar> EigenFunction<F> {
    /// The radial eigenfunction `f` with `f(0) = 1`, materialized on `B_depth`.
    pub fn radial(shape: TreeShape, alpha: F, depth: usize) -> Result<Self> {
        let ball = TreeBall::shared(shape, depth)?;
        let profile = radial_eigen(shape, &alpha, depth);
        let lattice = shape.lattice();
        let mut values = Vec::with_capacity(ball.len());
        for n in 0..=depth {
            let value = match lattice {
                Lattice::Full => profile[n].clone(),
                Lattice::Even if n % 2 == 0 => profile[n / 2].clone(),
                Lattice::Even => F::zero(),
            };
            values.extend(std::iter::repeat_n(value, ball.sphere_range(n).len()));
        }
        Ok(Self { shape, alpha, invariance_depth: 0, ball, values })
    }

    /// Build from explicit values on `B_seed` where `seed` is the
    /// parity-adjusted invariance depth. Validates the eigen equation on the
    /// seed ball and, for odd invariance depth on the even lattice, constancy
    /// of the seed sphere on each `N(w)`.
    pub fn from_seed(shape: TreeShape, alpha: F, invariance_depth: usize, seed: Vec<F>) -> Result<Self> {
        let depth = shape.seed_depth(invariance_depth);
        let ball = TreeBall::shared(shape, depth)?;
        if seed.len() != ball.len() {
            return Err(Error::MissingValues(format!(
                "seed for invariance depth {invariance_depth} needs {} values, got {}",
                ball.len(),
                seed.len()
            )));
        }
        let mut values = seed;
        if shape.lattice() == Lattice::Even {
            for n in (1..=depth).step_by(2) {
                for v in ball.sphere_range(n) {
                    values[v] = F::zero();
                }
            }
            if invariance_depth % 2 == 1 {
                for w in ball.sphere_range(invariance_depth) {
                    let block = ball.children(w);
                    let first = &values[block.start];
                    if block.clone().any(|x| &values[x] != first) {
                        return Err(Error::NotEigen(format!(
                            "values on N({}) must be constant for invariance depth {invariance_depth}",
                            ball.address(w)
                        )));
                    }
                }
            }
        }
        let defects = eigen_defects(&ball, &values, &alpha);
        if let Some((v, d)) = defects.first() {
            return Err(Error::NotEigen(format!(
                "eigen equation fails at {} (defect {d})",
                ball.address(*v)
            )));
        }
        Ok(Self { shape, alpha, invariance_depth, ball, values })
    }

    /// Function vanishing on `B_{seed-1}` with the given data on `S_seed`.
    /// The caller is responsible for the sum-zero constraints that make it an
    /// eigenfunction.
    pub(crate) fn from_sphere_data(
        shape: TreeShape,
        alpha: F,
        invariance_depth: usize,
        data: Vec<F>,
    ) -> Result<Self> {
        let depth = shape.seed_depth(invariance_depth);
        let ball = TreeBall::shared(shape, depth)?;
        let sphere = ball.sphere_range(depth);
        debug_assert_eq!(sphere.len(), data.len());
        let mut values = vec![F::zero(); sphere.start];
        values.extend(data);
        Ok(Self { shape, alpha, invariance_depth, ball, values })
    }

    pub(crate) fn from_parts(
        shape: TreeShape,
        alpha: F,
        invariance_depth: usize,
        ball: Arc<TreeBall>,
        values: Vec<F>,
    ) -> Self {
        debug_assert_eq!(ball.len(), values.len());
        debug_assert!(ball.depth() >= shape.seed_depth(invariance_depth));
        Self { shape, alpha, invariance_depth, ball, values }
    }

    pub fn zero(shape: TreeShape, alpha: F, depth: usize) -> Result<Self> {
        let ball = TreeBall::shared(shape, depth)?;
        let values = vec![F::zero(); ball.len()];
        Ok(Self { shape, alpha, invariance_depth: 0, ball, values })
    }

    pub fn shape(&self) -> TreeShape {
        self.shape
    }

    pub fn alpha(&self) -> &F {
        &self.alpha
    }

    pub fn lattice(&self) -> Lattice {
        self.shape.lattice()
    }

    pub fn invariance_depth(&self) -> usize {
        self.invariance_depth
    }

    /// Depth of the materialized ball.
    pub fn depth(&self) -> usize {
        self.ball.depth()
    }

    pub fn ball(&self) -> &Arc<TreeBall> {
        &self.ball
    }

    /// Dense values over the materialized ball (zero at odd vertices on the
    /// even lattice).
    pub fn values(&self) -> &[F] {
        &self.values
    }

    pub fn value(&self, v: usize) -> &F {
        &self.values[v]
    }

    pub fn value_at(&self, address: &PathAddress) -> Option<&F> {
        if !self.lattice().contains_depth(address.len()) {
            return None;
        }
        self.ball.index_of(address).map(|v| &self.values[v])
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|x| x.is_zero())
    }

    /// Exact eigen check on the materialized ball.
    pub fn check_eigen(&self) -> bool {
        is_eigen(&self.ball, &self.values, &self.alpha)
    }

    /// Materialize on `B_depth` using the cone-radial rule. A no-op when the
    /// function is already materialized that deep.
    pub fn extend(&self, depth: usize) -> Result<Self> {
        if depth <= self.depth() {
            return Ok(self.clone());
        }
        let ball = TreeBall::shared(self.shape, depth)?;
        let mut values = self.values.clone();
        values.resize(ball.len(), F::zero());
        extend_values(&ball, &self.alpha, self.depth(), &mut values);
        Ok(Self { ball, values, ..self.clone() })
    }

    /// Values restricted to `B_depth` (extending first if needed).
    pub fn values_on(&self, depth: usize) -> Result<Vec<F>> {
        let ext = self.extend(depth)?;
        Ok(ext.values[ext.ball.ball_range(depth)].to_vec())
    }

    /// Whether `self` and `other` agree on `B_depth`.
    pub fn agrees_on(&self, other: &Self, depth: usize) -> Result<bool> {
        Ok(self.values_on(depth)? == other.values_on(depth)?)
    }

    pub fn scale(&self, c: &F) -> Self {
        let values = if c.is_zero() {
            vec![F::zero(); self.values.len()]
        } else {
            self.values
                .iter()
                .map(|x| if x.is_zero() { F::zero() } else { x.clone() * c })
                .collect()
        };
        Self { values, ..self.clone() }
    }

    /// `self + c·other`. Both must share the shape and eigenvalue.
    pub fn add_scaled(&self, c: &F, other: &Self) -> Result<Self> {
        if self.shape != other.shape || self.alpha != other.alpha {
            return Err(Error::Unsupported(
                "linear combinations need a common shape and eigenvalue".into(),
            ));
        }
        let depth = self.depth().max(other.depth());
        let mut out = self.extend(depth)?;
        let other = other.extend(depth)?;
        if !c.is_zero() {
            for (x, y) in out.values.iter_mut().zip(&other.values) {
                if !y.is_zero() {
                    *x += &(y.clone() * c);
                }
            }
        }
        out.invariance_depth = self.invariance_depth.max(other.invariance_depth);
        Ok(out)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.add_scaled(&F::one(), other)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add_scaled(&-F::one(), other)
    }

    /// Serialize as `{shape, alpha, depth, invariance_depth, lattice, values}`
    /// with values listed in address order over the lattice vertices.
    pub fn to_json(&self) -> Value {
        let values: Vec<Value> = self
            .lattice_vertices()
            .map(|v| self.values[v].to_json())
            .collect();
        json!({
            "shape": self.shape.to_string(),
            "alpha": self.alpha.to_json(),
            "depth": self.depth(),
            "invariance_depth": self.invariance_depth,
            "lattice": self.lattice(),
            "values": values,
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let field = |k: &str| v.get(k).ok_or_else(|| Error::Parse(format!("missing field `{k}`")));
        let shape: TreeShape = field("shape")?
            .as_str()
            .ok_or_else(|| Error::Parse("shape must be a string".into()))?
            .parse()?;
        let alpha = F::from_json(field("alpha")?)?;
        let as_usize = |k: &str| -> Result<usize> {
            field(k)?.as_u64().map(|x| x as usize).ok_or_else(|| Error::Parse(format!("`{k}` must be a count")))
        };
        let depth = as_usize("depth")?;
        let invariance_depth = as_usize("invariance_depth")?;
        let raw = field("values")?
            .as_array()
            .ok_or_else(|| Error::Parse("values must be an array".into()))?;
        let ball = TreeBall::shared(shape, depth)?;
        let mut values = vec![F::zero(); ball.len()];
        let slots: Vec<usize> = (0..ball.len())
            .filter(|&u| shape.lattice().contains_depth(ball.sphere_of(u)))
            .collect();
        if slots.len() != raw.len() {
            return Err(Error::MissingValues(format!("expected {} values, got {}", slots.len(), raw.len())));
        }
        for (u, x) in slots.into_iter().zip(raw) {
            values[u] = F::from_json(x)?;
        }
        if depth < shape.seed_depth(invariance_depth) {
            return Err(Error::MissingValues("depth below the invariance depth".into()));
        }
        let out = Self { shape, alpha, invariance_depth, ball, values };
        if !out.check_eigen() {
            return Err(Error::NotEigen("deserialized values violate the eigen equation".into()));
        }
        Ok(out)
    }

    fn lattice_vertices(&self) -> impl Iterator<Item = usize> + '_ {
        let lattice = self.lattice();
        (0..self.ball.len()).filter(move |&u| lattice.contains_depth(self.ball.sphere_of(u)))
    }
}

/// Cone-radial extension in place. `values` already has the target ball's
/// length; entries on spheres deeper than `from_depth` are overwritten.
fn extend_values<F: Scalar>(ball: &TreeBall, alpha: &F, from_depth: usize, values: &mut [F]) {
    match ball.shape() {
        TreeShape::Homogeneous { d } => {
            let d_alpha = F::from_int(d as i64) * alpha;
            let inv = F::from_int(d as i64 - 1).recip();
            for m in from_depth..ball.depth() {
                for u in ball.sphere_range(m) {
                    let hu = &values[u];
                    let child = if m == 0 {
                        alpha.clone() * hu
                    } else {
                        let hp = &values[ball.parent(u).unwrap()];
                        if hu.is_zero() && hp.is_zero() {
                            F::zero()
                        } else {
                            (d_alpha.clone() * hu - hp) * &inv
                        }
                    };
                    for c in ball.children(u) {
                        values[c] = child.clone();
                    }
                }
            }
        }
        TreeShape::SemiHomogeneous { r, s } => {
            let lead = F::from_int((r * (s - 1)) as i64) * alpha;
            let inv = F::from_int(((r - 1) * (s - 1)) as i64).recip();
            let mut m = from_depth - from_depth % 2;
            while m + 2 <= ball.depth() {
                // Sibling sums per parent, reused across the parent's children.
                let mut sib_sums: Vec<(usize, F)> = Vec::new();
                if m >= 2 {
                    for p in ball.sphere_range(m - 1) {
                        let mut acc = F::zero();
                        for c in ball.children(p) {
                            if !values[c].is_zero() {
                                acc += &values[c];
                            }
                        }
                        sib_sums.push((p, acc));
                    }
                }
                let first_parent = if m >= 2 { ball.sphere_range(m - 1).start } else { 0 };
                for u in ball.sphere_range(m) {
                    let hu = values[u].clone();
                    let value = if m == 0 {
                        alpha.clone() * &hu
                    } else {
                        let p = ball.parent(u).unwrap();
                        let gp = ball.parent(p).unwrap();
                        let known = sib_sums[p - first_parent].1.clone() - &hu + &values[gp];
                        if hu.is_zero() && known.is_zero() {
                            F::zero()
                        } else {
                            (lead.clone() * &hu - &known) * &inv
                        }
                    };
                    for w in ball.grandchildren(u) {
                        values[w] = value.clone();
                    }
                }
                m += 2;
            }
        }
    }
}
