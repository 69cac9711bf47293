//! Finite truncations of homogeneous and semi-homogeneous trees.
//!
//! Vertices are addressed by the sequence of child slots taken from the base
//! vertex `o`. A ball `B_N(o)` is indexed breadth-first with each sphere laid
//! out in lexicographic address order, so the dense index of a vertex is a
//! mixed-radix number and balls of increasing depth share index prefixes.

use std::collections::HashMap;
use std::fmt;
use std::ops::Range;
use std::str::FromStr;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Default cap on the number of vertices a single ball may hold.
pub const DEFAULT_VERTEX_BUDGET: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TreeShape {
    /// Every vertex has degree `d`.
    Homogeneous { d: usize },
    /// Even-distance vertices (from `o`) have degree `r`, odd-distance ones `s`.
    SemiHomogeneous { r: usize, s: usize },
}

/// Which vertices carry function values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Lattice {
    /// All of `V`: the vertex-transitive case.
    Full,
    /// Only vertices at even distance from `o`.
    Even,
}

impl Lattice {
    pub fn contains_depth(self, n: usize) -> bool {
        match self {
            Lattice::Full => true,
            Lattice::Even => n.is_multiple_of(2),
        }
    }
}

impl TreeShape {
    pub fn homogeneous(d: usize) -> Result<Self> {
        let shape = TreeShape::Homogeneous { d };
        shape.validate()?;
        Ok(shape)
    }

    pub fn semi_homogeneous(r: usize, s: usize) -> Result<Self> {
        let shape = TreeShape::SemiHomogeneous { r, s };
        shape.validate()?;
        Ok(shape)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            TreeShape::Homogeneous { d } if d < 3 => {
                Err(Error::InvalidShape(format!("degree d = {d} must be at least 3")))
            }
            TreeShape::SemiHomogeneous { r, s } if r < 3 || s < 3 => Err(Error::InvalidShape(
                format!("degrees (r, s) = ({r}, {s}) must both be at least 3"),
            )),
            _ => Ok(()),
        }
    }

    pub fn is_transitive(&self) -> bool {
        matches!(self, TreeShape::Homogeneous { .. })
    }

    pub fn lattice(&self) -> Lattice {
        match self {
            TreeShape::Homogeneous { .. } => Lattice::Full,
            TreeShape::SemiHomogeneous { .. } => Lattice::Even,
        }
    }

    /// Degree of the vertices at distance `n` from `o`.
    pub fn degree_at(&self, n: usize) -> usize {
        match *self {
            TreeShape::Homogeneous { d } => d,
            TreeShape::SemiHomogeneous { r, s } => {
                if n.is_multiple_of(2) {
                    r
                } else {
                    s
                }
            }
        }
    }

    /// Number of child slots of a vertex at distance `n`.
    pub fn child_slots(&self, n: usize) -> usize {
        if n == 0 {
            self.degree_at(0)
        } else {
            self.degree_at(n) - 1
        }
    }

    /// Closed-form sphere size `|S_n|` (saturating on overflow).
    pub fn sphere_size(&self, n: usize) -> u128 {
        if n == 0 {
            return 1;
        }
        match *self {
            TreeShape::Homogeneous { d } => {
                (d as u128).saturating_mul(pow_sat(d as u128 - 1, n as u32 - 1))
            }
            TreeShape::SemiHomogeneous { r, s } => {
                let (r, s) = (r as u128, s as u128);
                let k = (n as u32).div_ceil(2);
                if n % 2 == 1 {
                    r.saturating_mul(pow_sat(r - 1, k - 1)).saturating_mul(pow_sat(s - 1, k - 1))
                } else {
                    r.saturating_mul(pow_sat(r - 1, k - 1)).saturating_mul(pow_sat(s - 1, k))
                }
            }
        }
    }

    /// Closed-form ball size `|B_n|`.
    pub fn ball_size(&self, n: usize) -> u128 {
        (0..=n).fold(0u128, |acc, k| acc.saturating_add(self.sphere_size(k)))
    }

    /// Parity-aware depth at which functions on `B_depth` are materialized:
    /// rounds odd depths up in the even-lattice case.
    pub fn seed_depth(&self, invariance_depth: usize) -> usize {
        match self.lattice() {
            Lattice::Full => invariance_depth,
            Lattice::Even => invariance_depth + invariance_depth % 2,
        }
    }
}

fn pow_sat(base: u128, exp: u32) -> u128 {
    (0..exp).fold(1u128, |acc, _| acc.saturating_mul(base))
}

impl fmt::Display for TreeShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TreeShape::Homogeneous { d } => write!(f, "h{d}"),
            TreeShape::SemiHomogeneous { r, s } => write!(f, "sh{r},{s}"),
        }
    }
}

impl FromStr for TreeShape {
    type Err = Error;

    /// Grammar: `h<d>` or `sh<r>,<s>`.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let bad = || Error::Parse(format!("invalid shape `{s}` (expected h<d> or sh<r>,<s>)"));
        if let Some(rest) = t.strip_prefix("sh") {
            let (r, s2) = rest.split_once(',').ok_or_else(bad)?;
            let r = r.trim().parse().map_err(|_| bad())?;
            let s2 = s2.trim().parse().map_err(|_| bad())?;
            TreeShape::semi_homogeneous(r, s2)
        } else if let Some(rest) = t.strip_prefix('h') {
            let d = rest.trim().parse().map_err(|_| bad())?;
            TreeShape::homogeneous(d)
        } else {
            Err(bad())
        }
    }
}

impl Serialize for TreeShape {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for TreeShape {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Child-slot path from `o`; the empty path is `o` itself.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PathAddress(pub Vec<usize>);

impl PathAddress {
    pub fn root() -> Self {
        PathAddress(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn steps(&self) -> &[usize] {
        &self.0
    }

    pub fn child(&self, slot: usize) -> Self {
        let mut steps = self.0.clone();
        steps.push(slot);
        PathAddress(steps)
    }

    pub fn parent(&self) -> Option<Self> {
        let (_, init) = self.0.split_last()?;
        Some(PathAddress(init.to_vec()))
    }

    /// Checks every step against the slot counts of `shape`.
    pub fn validate(&self, shape: &TreeShape) -> Result<()> {
        for (k, &step) in self.0.iter().enumerate() {
            let slots = shape.child_slots(k);
            if step >= slots {
                return Err(Error::InvalidAddress {
                    address: self.to_string(),
                    reason: format!("step {k} is {step}, but only {slots} child slots exist"),
                });
            }
        }
        Ok(())
    }
}

impl From<Vec<usize>> for PathAddress {
    fn from(v: Vec<usize>) -> Self {
        PathAddress(v)
    }
}

impl fmt::Display for PathAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "o");
        }
        write!(f, "(")?;
        for (k, s) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{s}")?;
        }
        write!(f, ")")
    }
}

/// The ball `B_N(o)` with a breadth-first vertex table.
///
/// Immutable after construction.
#[derive(Debug, Clone)]
pub struct TreeBall {
    shape: TreeShape,
    depth: usize,
    /// `offsets[n]` is the dense index of the first vertex of `S_n`;
    /// `offsets[depth + 1]` is the vertex count.
    offsets: Vec<usize>,
    sphere: Vec<u32>,
    parent: Vec<usize>,
}

impl TreeBall {
    pub fn build(shape: TreeShape, depth: usize) -> Result<Self> {
        Self::build_with_budget(shape, depth, DEFAULT_VERTEX_BUDGET)
    }

    pub fn build_with_budget(shape: TreeShape, depth: usize, budget: usize) -> Result<Self> {
        shape.validate()?;
        let total = shape.ball_size(depth);
        if total > budget as u128 {
            return Err(Error::BudgetExceeded { depth, vertices: total, budget });
        }
        let total = total as usize;
        let mut offsets = Vec::with_capacity(depth + 2);
        let mut sphere = Vec::with_capacity(total);
        let mut parent = Vec::with_capacity(total);
        offsets.push(0);
        sphere.push(0);
        parent.push(usize::MAX);
        // Breadth-first enumeration in birth order: every vertex of S_n spawns
        // its children consecutively, which is lexicographic address order.
        for n in 0..depth {
            let start = offsets[n];
            let end = sphere.len();
            offsets.push(end);
            let slots = shape.child_slots(n);
            for v in start..end {
                for _ in 0..slots {
                    sphere.push(n as u32 + 1);
                    parent.push(v);
                }
            }
        }
        offsets.push(sphere.len());
        debug_assert_eq!(sphere.len(), total);
        Ok(Self { shape, depth, offsets, sphere, parent })
    }

    /// Process-wide cache of balls; balls are immutable so sharing is free.
    pub fn shared(shape: TreeShape, depth: usize) -> Result<Arc<TreeBall>> {
        static CACHE: OnceLock<Mutex<HashMap<(TreeShape, usize), Arc<TreeBall>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(Default::default);
        if let Some(ball) = cache.lock().unwrap().get(&(shape, depth)) {
            return Ok(ball.clone());
        }
        let ball = Arc::new(TreeBall::build(shape, depth)?);
        cache.lock().unwrap().insert((shape, depth), ball.clone());
        Ok(ball)
    }

    pub fn shape(&self) -> TreeShape {
        self.shape
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn len(&self) -> usize {
        self.sphere.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sphere.is_empty()
    }

    /// Dense index range of `S_n`. Empty beyond the ball.
    pub fn sphere_range(&self, n: usize) -> Range<usize> {
        if n > self.depth {
            return self.len()..self.len();
        }
        self.offsets[n]..self.offsets[n + 1]
    }

    /// Indices of `B_n` (a prefix of the vertex table).
    pub fn ball_range(&self, n: usize) -> Range<usize> {
        0..self.offsets[n.min(self.depth) + 1]
    }

    pub fn sphere_of(&self, v: usize) -> usize {
        self.sphere[v] as usize
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        (v != 0).then(|| self.parent[v])
    }

    pub fn degree(&self, v: usize) -> usize {
        self.shape.degree_at(self.sphere_of(v))
    }

    /// Rank of `v` within its sphere.
    pub fn rank(&self, v: usize) -> usize {
        v - self.offsets[self.sphere_of(v)]
    }

    /// Children of `v` inside the ball (empty on the boundary sphere).
    pub fn children(&self, v: usize) -> Range<usize> {
        let n = self.sphere_of(v);
        if n >= self.depth {
            return 0..0;
        }
        let slots = self.shape.child_slots(n);
        let first = self.offsets[n + 1] + self.rank(v) * slots;
        first..first + slots
    }

    /// Grandchildren of `v` inside the ball; contiguous by construction.
    pub fn grandchildren(&self, v: usize) -> Range<usize> {
        let n = self.sphere_of(v);
        if n + 2 > self.depth {
            return 0..0;
        }
        let per = self.shape.child_slots(n) * self.shape.child_slots(n + 1);
        let first = self.offsets[n + 2] + self.rank(v) * per;
        first..first + per
    }

    /// All neighbours of `v` present in the ball.
    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self.parent(v).into_iter().collect();
        out.extend(self.children(v));
        out
    }

    pub fn address(&self, v: usize) -> PathAddress {
        let n = self.sphere_of(v);
        let mut rank = self.rank(v);
        let mut steps = vec![0; n];
        for k in (0..n).rev() {
            let slots = self.shape.child_slots(k);
            steps[k] = rank % slots;
            rank /= slots;
        }
        PathAddress(steps)
    }

    /// Dense index of an address, `None` if it lies outside the ball or is malformed.
    pub fn index_of(&self, address: &PathAddress) -> Option<usize> {
        self.index_of_steps(address.steps())
    }

    pub fn index_of_steps(&self, steps: &[usize]) -> Option<usize> {
        let n = steps.len();
        if n > self.depth {
            return None;
        }
        let mut rank = 0usize;
        for (k, &step) in steps.iter().enumerate() {
            let slots = self.shape.child_slots(k);
            if step >= slots {
                return None;
            }
            rank = rank * slots + step;
        }
        Some(self.offsets[n] + rank)
    }

    /// Whether the `o → w` path passes through `v`.
    pub fn in_cone(&self, v: usize, w: usize) -> bool {
        let nv = self.sphere_of(v);
        let mut w = w;
        while self.sphere_of(w) > nv {
            w = self.parent[w];
        }
        w == v
    }

    /// The cone `C_v`: vertices whose path from `o` passes through `v`.
    pub fn cone_of(&self, v: usize) -> Result<Vec<usize>> {
        if v == 0 {
            return Err(Error::InvalidAddress {
                address: "o".into(),
                reason: "the cone of the base vertex is undefined".into(),
            });
        }
        if v >= self.len() {
            return Err(Error::InvalidAddress {
                address: format!("#{v}"),
                reason: "index outside the ball".into(),
            });
        }
        let mut out = vec![v];
        let mut frontier = v..v + 1;
        loop {
            let next: Vec<usize> = frontier.clone().flat_map(|u| self.children(u)).collect();
            let Some((&lo, &hi)) = next.first().zip(next.last()) else { break };
            out.extend(lo..=hi);
            frontier = lo..hi + 1;
        }
        Ok(out)
    }

    /// The anti-cone `D_v = (V \ C_v) ∪ {v}` restricted to the ball.
    pub fn anti_cone(&self, v: usize) -> Result<Vec<usize>> {
        let cone = self.cone_of(v)?;
        let mut in_cone = vec![false; self.len()];
        for &w in &cone {
            in_cone[w] = true;
        }
        in_cone[v] = false;
        Ok((0..self.len()).filter(|&w| !in_cone[w]).collect())
    }

    /// Tree distance between two vertices of the ball.
    pub fn distance(&self, a: usize, b: usize) -> usize {
        let (mut a, mut b) = (a, b);
        let mut dist = 0;
        while self.sphere_of(a) > self.sphere_of(b) {
            a = self.parent[a];
            dist += 1;
        }
        while self.sphere_of(b) > self.sphere_of(a) {
            b = self.parent[b];
            dist += 1;
        }
        while a != b {
            a = self.parent[a];
            b = self.parent[b];
            dist += 2;
        }
        dist
    }
}

/// Convenience wrapper matching the `build_ball` operation.
pub fn build_ball(shape: TreeShape, depth: usize) -> Result<TreeBall> {
    TreeBall::build(shape, depth)
}

/// Closed-form `|S_n|`.
pub fn sphere_size(shape: TreeShape, n: usize) -> u128 {
    shape.sphere_size(n)
}
