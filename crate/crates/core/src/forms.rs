//! The invariant form `Q`, Gram matrices and their inertia, invariance checks
//! under explicit automorphisms, and the rigidity computations that force the
//! eigenvalue to be real and the form to be unique.

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::decomposition::{basis_hn, expected_dim, is_degenerate, peel_blocks, BlockData, Decomposition};
use crate::error::{Error, Result};
use crate::group::{act_many, base_swap, k_generators, sample_k_elements, Automorphism};
use crate::linalg::{self, Echelon, PivotStrategy, Signature};
use crate::scalar::{Gaussian, Rational, Scalar};
use crate::spectral::EigenFunction;
use crate::tree::{TreeBall, TreeShape};

/// Eigenvalues at which the representation is one-dimensional and no form is
/// assembled: `±1` on homogeneous trees, `1` on semi-homogeneous ones.
pub fn check_alpha<F: Scalar>(shape: TreeShape, alpha: &F) -> Result<()> {
    let one = F::one();
    let excluded = *alpha == one || (shape.is_transitive() && *alpha == -one);
    if excluded {
        return Err(Error::ExcludedAlpha {
            alpha: alpha.to_string(),
            reason: "the eigenspace carries a one-dimensional (trivial or sign) representation".into(),
        });
    }
    Ok(())
}

/// `Q = Σ c_n Q_n` where `Q_n` is the standard product of block data on its
/// data sphere.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockForm<F> {
    pub shape: TreeShape,
    pub alpha: F,
    pub degenerate: bool,
    c0: F,
    c_odd: F,
    c_even: F,
    /// Each odd-block coordinate covers `s − 1` data vertices; 1 elsewhere.
    odd_multiplicity: F,
}

pub fn assemble_q<F: Scalar>(shape: TreeShape, alpha: F) -> Result<BlockForm<F>> {
    shape.validate()?;
    check_alpha(shape, &alpha)?;
    let one = F::one();
    let degenerate = is_degenerate(shape, &alpha);
    Ok(match shape {
        TreeShape::Homogeneous { d } => {
            let d = d as i64;
            BlockForm {
                shape,
                c0: F::from_int(d) / F::from_int(d - 1) * (one.clone() - &(alpha.clone() * &alpha)),
                alpha,
                degenerate,
                c_odd: one.clone(),
                c_even: one.clone(),
                odd_multiplicity: one,
            }
        }
        TreeShape::SemiHomogeneous { r, s } => {
            let c_odd = if degenerate {
                F::zero()
            } else {
                F::from_int(r as i64 - 1)
                    / (F::from_int(r as i64) * (one.clone() + F::from_int(s as i64 - 1) * &alpha))
            };
            BlockForm {
                shape,
                c0: one.clone() - &alpha,
                alpha,
                degenerate,
                c_odd,
                c_even: one,
                odd_multiplicity: F::from_int(s as i64 - 1),
            }
        }
    })
}

impl<F: Scalar> BlockForm<F> {
    /// `c_n`, or `None` for a block that is absent at the degenerate eigenvalue.
    pub fn coefficient(&self, n: usize) -> Option<F> {
        if n == 0 {
            Some(self.c0.clone())
        } else if n % 2 == 1 {
            (!self.degenerate).then(|| self.c_odd.clone())
        } else {
            Some(self.c_even.clone())
        }
    }

    /// `c_n Q_n(x, y)`, antilinear in `x`.
    pub fn block_product(&self, n: usize, x: &BlockData<F>, y: &BlockData<F>) -> F {
        let Some(c) = self.coefficient(n) else { return F::zero() };
        let raw = sparse_dot(&x.values, &y.values);
        if raw.is_zero() {
            return raw;
        }
        let raw = if n % 2 == 1 && !self.shape.is_transitive() { raw * &self.odd_multiplicity } else { raw };
        c * &raw
    }

    pub fn eval(&self, x: &Decomposition<F>, y: &Decomposition<F>) -> F {
        let mut acc = F::zero();
        for (bx, by) in x.blocks.iter().zip(&y.blocks) {
            if !bx.values.is_empty() && !by.values.is_empty() {
                acc += &self.block_product(bx.n, bx, by);
            }
        }
        acc
    }

    pub fn to_json(&self, cutoff: usize) -> Value {
        let blocks: Vec<Value> = (0..=cutoff)
            .map(|n| {
                let dim = expected_dim(self.shape, n, self.degenerate);
                json!({
                    "n": n,
                    "dim": dim as u64,
                    "coefficient": self.coefficient(n).map(|c| c.to_json()),
                })
            })
            .collect();
        json!({ "shape": self.shape.to_string(), "alpha": self.alpha.to_json(), "blocks": blocks })
    }
}

fn sparse_dot<F: Scalar>(x: &[(u32, F)], y: &[(u32, F)]) -> F {
    let (mut i, mut j) = (0, 0);
    let mut acc = F::zero();
    while i < x.len() && j < y.len() {
        match x[i].0.cmp(&y[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                acc += &(x[i].1.conj() * &y[j].1);
                i += 1;
                j += 1;
            }
        }
    }
    acc
}

/// `Q(x, y)` for two eigenfunctions.
pub fn eval_q<F: Scalar>(form: &BlockForm<F>, x: &EigenFunction<F>, y: &EigenFunction<F>) -> Result<F> {
    Ok(form.eval(&peel_blocks(x)?, &peel_blocks(y)?))
}

/// Basis of `⊕_{n ≤ cutoff} H_n`, block by block, tagged with the block index.
pub fn truncated_basis<F: Scalar>(shape: TreeShape, alpha: F, cutoff: usize) -> Result<Vec<(usize, EigenFunction<F>)>> {
    let mut out = Vec::new();
    for n in 0..=cutoff {
        for f in basis_hn(shape, alpha.clone(), n)?.functions {
            out.push((n, f));
        }
    }
    Ok(out)
}

/// A form's matrix on an ordered basis.
#[derive(Clone, Debug, PartialEq)]
pub struct GramMatrix<F> {
    pub labels: Vec<String>,
    pub entries: Vec<Vec<F>>,
}

impl<F: Scalar> GramMatrix<F> {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_hermitian(&self) -> bool {
        let n = self.len();
        (0..n).all(|i| (0..n).all(|j| self.entries[i][j] == self.entries[j][i].conj()))
    }

    /// Exact CSV with a header row of basis labels.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("basis");
        for l in &self.labels {
            out.push(',');
            out.push_str(l);
        }
        out.push('\n');
        for (l, row) in self.labels.iter().zip(&self.entries) {
            out.push_str(l);
            for x in row {
                out.push(',');
                out.push_str(&x.to_string());
            }
            out.push('\n');
        }
        out
    }
}

pub fn gram<F: Scalar>(form: &BlockForm<F>, basis: &[(usize, EigenFunction<F>)]) -> Result<GramMatrix<F>> {
    let decs: Vec<Decomposition<F>> = basis.par_iter().map(|(_, f)| peel_blocks(f)).collect::<Result<_>>()?;
    let entries = decs.par_iter().map(|x| decs.iter().map(|y| form.eval(x, y)).collect()).collect();
    let mut counts = std::collections::BTreeMap::new();
    let labels = basis
        .iter()
        .map(|(n, _)| {
            let k = counts.entry(*n).or_insert(0usize);
            *k += 1;
            format!("H{n}[{}]", *k - 1)
        })
        .collect();
    Ok(GramMatrix { labels, entries })
}

pub fn signature(m: &GramMatrix<Rational>, strategy: PivotStrategy) -> Result<Signature> {
    linalg::signature(&m.entries, strategy)
}

#[derive(Clone, Debug, Serialize)]
pub struct BlockSummary {
    pub n: usize,
    pub dim: usize,
    pub expected_dim: u64,
    pub coefficient: Option<String>,
}

/// Inertia of `Q` on `⊕_{n ≤ cutoff} H_n`.
#[derive(Clone, Debug, Serialize)]
pub struct SignatureReport {
    pub shape: String,
    pub alpha: String,
    pub depth: usize,
    pub blocks: Vec<BlockSummary>,
    pub signature: Signature,
    /// Σ dim H_n over blocks with `c_n < 0`.
    pub predicted_negative: usize,
    /// Whether all pivot strategies agreed.
    pub pivot_independent: bool,
    /// Whether every block with `c_n > 0` has positive leading minors.
    pub blocks_definite: bool,
}

pub fn signature_report(shape: TreeShape, alpha: Rational, cutoff: usize) -> Result<(SignatureReport, GramMatrix<Rational>)> {
    let form = assemble_q(shape, alpha.clone())?;
    let basis = truncated_basis(shape, alpha.clone(), cutoff)?;
    let g = gram(&form, &basis)?;
    let sigs: Vec<Signature> = PivotStrategy::ALL.iter().map(|&s| signature(&g, s)).collect::<Result<_>>()?;
    let mut blocks = Vec::new();
    let mut predicted_negative = 0;
    let mut blocks_definite = true;
    let mut start = 0;
    for n in 0..=cutoff {
        let dim = basis.iter().filter(|(b, _)| *b == n).count();
        let coefficient = form.coefficient(n);
        if let Some(c) = &coefficient {
            if *c < Rational::from_int(0) {
                predicted_negative += dim;
            }
            if *c > Rational::from_int(0) && dim > 0 {
                let sub: Vec<Vec<Rational>> = g.entries[start..start + dim].iter().map(|r| r[start..start + dim].to_vec()).collect();
                blocks_definite &= linalg::leading_principal_minors(&sub).iter().all(|m| *m > Rational::from_int(0));
            }
        }
        blocks.push(BlockSummary {
            n,
            dim,
            expected_dim: expected_dim(shape, n, form.degenerate) as u64,
            coefficient: coefficient.map(|c| c.to_string()),
        });
        start += dim;
    }
    let report = SignatureReport {
        shape: shape.to_string(),
        alpha: alpha.to_string(),
        depth: cutoff,
        blocks,
        signature: sigs[0],
        predicted_negative,
        pivot_independent: sigs.iter().all(|s| *s == sigs[0]),
        blocks_definite,
    };
    Ok((report, g))
}

#[derive(Clone, Debug, Serialize)]
pub struct Violation {
    pub i: usize,
    pub j: usize,
    pub difference: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct GeneratorCheck {
    pub generator: String,
    pub displacement: usize,
    pub pairs_checked: usize,
    pub violations: Vec<Violation>,
}

#[derive(Clone, Debug, Serialize)]
pub struct InvarianceReport {
    pub cutoff: usize,
    pub generators: Vec<GeneratorCheck>,
}

impl InvarianceReport {
    pub fn passed(&self) -> bool {
        self.generators.iter().all(|g| g.violations.is_empty())
    }

    pub fn pairs_checked(&self) -> usize {
        self.generators.iter().map(|g| g.pairs_checked).sum()
    }
}

/// `Q(gx, gy) − Q(x, y)` for all basis pairs of `⊕_{n ≤ cutoff − δ(g)} H_n`.
pub fn invariance_check<F: Scalar>(
    form: &BlockForm<F>,
    generators: &[(String, Automorphism)],
    cutoff: usize,
) -> Result<InvarianceReport> {
    let basis = truncated_basis(form.shape, form.alpha.clone(), cutoff)?;
    let originals: Vec<Decomposition<F>> = basis.par_iter().map(|(_, f)| peel_blocks(f)).collect::<Result<_>>()?;
    let checks = generators
        .par_iter()
        .map(|(label, g)| {
            let delta = g.displacement();
            let count = basis.iter().take_while(|(n, _)| *n + delta <= cutoff).count();
            let functions: Vec<EigenFunction<F>> = basis[..count].iter().map(|(_, f)| f.clone()).collect();
            let images = act_many(g, &functions, 0)?;
            let image_decs: Vec<Decomposition<F>> = images.iter().map(peel_blocks).collect::<Result<_>>()?;
            let mut violations = Vec::new();
            for i in 0..count {
                for j in 0..count {
                    let diff = form.eval(&image_decs[i], &image_decs[j]) - form.eval(&originals[i], &originals[j]);
                    if !diff.is_zero() {
                        violations.push(Violation { i, j, difference: diff.to_string() });
                    }
                }
            }
            Ok(GeneratorCheck { generator: word_label(label, g), displacement: delta, pairs_checked: count * count, violations })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(InvarianceReport { cutoff, generators: checks })
}

fn word_label(label: &str, g: &Automorphism) -> String {
    if label.is_empty() {
        g.to_json().to_string()
    } else {
        label.to_string()
    }
}

/// The base swap together with `samples` seeded elements of `K` acting
/// within `B_cutoff`.
pub fn standard_generators(shape: TreeShape, cutoff: usize, samples: usize, seed: u64) -> Result<Vec<(String, Automorphism)>> {
    let mut out = vec![("swap".to_string(), base_swap(shape))];
    for (k, g) in sample_k_elements(shape, cutoff.max(1), samples, seed)?.into_iter().enumerate() {
        out.push((format!("k{k}"), g));
    }
    Ok(out)
}

/// The vector `h` used alongside `f` in the rigidity argument: on homogeneous
/// trees the `H_1` function with data `(1, −1/(d−1), …)` peaked at `(0)`; on
/// semi-homogeneous trees the `H_1 ⊕ H_2` function peaked at `(0,0)`.
pub fn rigidity_companion<F: Scalar>(shape: TreeShape, alpha: F) -> Result<EigenFunction<F>> {
    match shape {
        TreeShape::Homogeneous { d } => {
            let ball = TreeBall::shared(shape, 1)?;
            let other = -(F::from_int(d as i64 - 1).recip());
            let mut seed = vec![other; ball.len()];
            seed[0] = F::zero();
            seed[1] = F::one();
            EigenFunction::from_seed(shape, alpha, 1, seed)
        }
        TreeShape::SemiHomogeneous { r, s } => {
            let ball = TreeBall::shared(shape, 2)?;
            let off = -((F::one() + F::from_int(s as i64 - 1) * &alpha) / F::from_int(((r - 1) * (s - 1)) as i64));
            let mut seed = vec![F::zero(); ball.len()];
            for x in ball.sphere_range(2) {
                seed[x] = if ball.parent(x) == Some(1) { alpha.clone() } else { off.clone() };
            }
            seed[ball.sphere_range(2).start] = F::one() + &alpha;
            EigenFunction::from_seed(shape, alpha, 2, seed)
        }
    }
}

/// Outcome of the rigidity solve on `span{f, h}`.
#[derive(Clone, Debug, Serialize)]
pub struct RigidityReport {
    pub shape: String,
    pub alpha: String,
    pub unconstrained: bool,
    /// Matrix of the swap on `(f, h)`: column `k` holds the coordinates of `g·e_k`.
    pub swap_matrix: [[String; 2]; 2],
    pub dimension: usize,
    /// Nullspace basis: `[b_f, b_h]`, or `[B(f,f), B(f,h), B(h,f), B(h,h)]`.
    pub solutions: Vec<Vec<String>>,
    /// Whether every solution obeys the expected real-α relation between
    /// `B(f,f)` and `B(h,h)`.
    pub relation_holds: bool,
}

impl RigidityReport {
    /// The expected outcome: a one-parameter family for real α, only zero otherwise.
    pub fn matches_expectation(&self, alpha: &Gaussian) -> bool {
        if alpha.is_real() {
            self.dimension == 1 && self.relation_holds
        } else {
            self.dimension == 0
        }
    }
}

/// Solve `Mᴴ X M = X` for the invariant sesquilinear forms `X` on `span{f, h}`.
/// By default `X` is diagonal (`B(f,h) = 0`); `unconstrained` allows all four entries.
pub fn span_fh_rigidity(shape: TreeShape, alpha: Gaussian, unconstrained: bool) -> Result<RigidityReport> {
    check_alpha(shape, &alpha)?;
    let f = EigenFunction::radial(shape, alpha.clone(), 0)?;
    let h = rigidity_companion(shape, alpha.clone())?;
    let g = base_swap(shape);
    let images = act_many(&g, &[f.clone(), h.clone()], 0)?;
    let m = span_coordinates(&f, &h, &images)?;

    let idx = |k: usize, l: usize| if unconstrained { 2 * k + l } else { k };
    let unknowns = if unconstrained { 4 } else { 2 };
    let mut ech = Echelon::<Gaussian>::new(unknowns);
    for i in 0..2 {
        for j in 0..2 {
            let mut row = vec![Gaussian::zero(); unknowns];
            for k in 0..2 {
                for l in 0..2 {
                    if !unconstrained && k != l {
                        continue;
                    }
                    row[idx(k, l)] += &(m[k][i].conj() * &m[l][j]);
                }
            }
            if unconstrained || i == j {
                row[idx(i, j)] -= &Gaussian::one();
            }
            ech.insert(row);
        }
    }
    let solutions = ech.nullspace();
    let relation_holds = solutions.iter().all(|x| {
        let (bf, bh) = if unconstrained { (&x[0], &x[3]) } else { (&x[0], &x[1]) };
        let one = Gaussian::one();
        match shape {
            TreeShape::Homogeneous { .. } => *bf == (one - alpha.clone() * &alpha) * bh,
            TreeShape::SemiHomogeneous { .. } => {
                let gap = Gaussian::from_rational((one.clone() - &alpha).norm_sqr());
                gap * bh == Gaussian::from_rational(Rational::from_int(1) - alpha.norm_sqr()) * bf
            }
        }
    });
    Ok(RigidityReport {
        shape: shape.to_string(),
        alpha: alpha.to_string(),
        unconstrained,
        swap_matrix: [
            [m[0][0].to_string(), m[0][1].to_string()],
            [m[1][0].to_string(), m[1][1].to_string()],
        ],
        dimension: solutions.len(),
        solutions: solutions.iter().map(|x| x.iter().map(|c| c.to_string()).collect()).collect(),
        relation_holds,
    })
}

/// Coordinates `m[k][i]` with `images[i] = m[0][i]·f + m[1][i]·h`, verified on
/// a ball past both invariance depths.
fn span_coordinates<F: Scalar>(f: &EigenFunction<F>, h: &EigenFunction<F>, images: &[EigenFunction<F>]) -> Result<[[F; 2]; 2]> {
    let depth = images.iter().map(EigenFunction::depth).max().unwrap_or(0) + 2;
    let fe = f.extend(depth)?;
    let he = h.extend(depth)?;
    let p = (1..he.values().len())
        .find(|&v| !he.value(v).is_zero())
        .ok_or_else(|| Error::Unsupported("companion vector vanishes".into()))?;
    let a = vec![vec![fe.value(0).clone(), he.value(0).clone()], vec![fe.value(p).clone(), he.value(p).clone()]];
    let mut m: [[F; 2]; 2] = [[F::zero(), F::zero()], [F::zero(), F::zero()]];
    for (i, img) in images.iter().enumerate() {
        let img = img.extend(depth)?;
        let x = linalg::solve(&a, &[img.value(0).clone(), img.value(p).clone()])
            .ok_or_else(|| Error::Unsupported("singular evaluation system".into()))?;
        let combo = fe.scale(&x[0]).add_scaled(&x[1], &he)?;
        if combo.values() != img.values() {
            return Err(Error::Unsupported(format!("translate {i} leaves span{{f, h}}")));
        }
        m[0][i] = x[0].clone();
        m[1][i] = x[1].clone();
    }
    Ok(m)
}

/// Result of solving for all invariant symmetric forms on a truncation.
#[derive(Clone, Debug, Serialize)]
pub struct TruncatedFormReport {
    pub shape: String,
    pub alpha: String,
    pub cutoff: usize,
    pub basis_size: usize,
    pub unknowns: usize,
    pub equations: usize,
    pub generators: usize,
    /// Dimension of the solution space on `⊕_{n ≤ cutoff}`.
    pub full_dimension: usize,
    /// Blocks kept after restriction: `n ≤ cutoff − δ`.
    pub restricted_cutoff: usize,
    pub restricted_dimension: usize,
    pub proportional_to_q: bool,
    pub cross_blocks_zero: bool,
    /// Solution normalized so that its `(0,0)` entry equals `c₀`.
    pub restricted_solution: Vec<Vec<String>>,
    /// Label: the uniqueness statement concerns the full space; this is a
    /// finite truncation.
    pub scope: &'static str,
}

impl TruncatedFormReport {
    pub fn unique_and_matches(&self) -> bool {
        self.restricted_dimension == 1 && self.proportional_to_q && self.cross_blocks_zero
    }
}

/// Solve `B(gx, gy) = B(x, y)` for a symmetric `B` on `⊕_{n ≤ cutoff} H_n`,
/// over the base swap (pairs in `⊕_{n ≤ cutoff − 1}`), every single-site
/// transposition of `B_{cutoff-1}` and `samples` seeded elements of `K`.
pub fn truncated_form_solver(
    shape: TreeShape,
    alpha: Rational,
    cutoff: usize,
    samples: usize,
    seed: u64,
) -> Result<TruncatedFormReport> {
    let form = assemble_q(shape, alpha.clone())?;
    let basis = truncated_basis(shape, alpha.clone(), cutoff)?;
    let m = basis.len();
    let unknown = |a: usize, b: usize| {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        a * m - a * (a + 1) / 2 + b
    };
    let unknowns = m * (m + 1) / 2;

    let mut generators: Vec<Automorphism> = vec![base_swap(shape)];
    generators.extend(k_generators(shape, cutoff)?);
    generators.extend(sample_k_elements(shape, cutoff.max(1), samples, seed)?);

    let block_offsets: Vec<usize> = (0..=cutoff + 1).map(|n| basis.iter().take_while(|(b, _)| *b < n).count()).collect();
    let rows: Vec<Vec<Vec<Rational>>> = generators
        .par_iter()
        .map(|g| {
            let delta = g.displacement();
            let count = basis.iter().take_while(|(n, _)| *n + delta <= cutoff).count();
            let functions: Vec<EigenFunction<Rational>> = basis[..count].iter().map(|(_, f)| f.clone()).collect();
            let images = act_many(g, &functions, 0)?;
            let coords: Vec<Vec<Rational>> = images
                .iter()
                .map(|img| {
                    let dec = peel_blocks(img)?;
                    let mut v = Vec::with_capacity(m);
                    for n in 0..=cutoff {
                        let c = dec.basis_coordinates(n)?;
                        v.extend(c);
                    }
                    if dec.blocks.len() > cutoff + 1 && dec.blocks[cutoff + 1..].iter().any(|b| !b.values.is_empty()) {
                        return Err(Error::Unsupported("translate leaves the truncation".into()));
                    }
                    Ok(v)
                })
                .collect::<Result<_>>()?;
            let mut out = Vec::new();
            for x in 0..count {
                for y in x..count {
                    let mut row = vec![Rational::from_int(0); unknowns];
                    for (a, ca) in coords[x].iter().enumerate() {
                        if ca.is_zero() {
                            continue;
                        }
                        for (b, cb) in coords[y].iter().enumerate() {
                            if !cb.is_zero() {
                                row[unknown(a, b)] += &(ca.clone() * cb);
                            }
                        }
                    }
                    row[unknown(x, y)] -= &Rational::from_int(1);
                    out.push(row);
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut ech = Echelon::new(unknowns);
    let mut equations = 0;
    for row in rows.into_iter().flatten() {
        equations += 1;
        if !ech.is_full() {
            ech.insert(row);
        }
    }
    let null = ech.nullspace();

    let restricted_cutoff = cutoff.saturating_sub(1);
    let keep = block_offsets[restricted_cutoff + 1];
    let restrict = |x: &Vec<Rational>| -> Vec<Rational> {
        let mut out = Vec::new();
        for a in 0..keep {
            for b in a..keep {
                out.push(x[unknown(a, b)].clone());
            }
        }
        out
    };
    let restricted: Vec<Vec<Rational>> = null.iter().map(restrict).collect();
    let restricted_dimension = linalg::rank(&restricted);

    let q_basis: Vec<(usize, EigenFunction<Rational>)> = basis[..keep].to_vec();
    let q = gram(&form, &q_basis)?;
    let block_of: Vec<usize> = basis.iter().map(|(n, _)| *n).collect();
    let mut proportional_to_q = false;
    let mut cross_blocks_zero = false;
    let mut restricted_solution = Vec::new();
    if restricted_dimension == 1 {
        let sol = restricted.iter().find(|x| x.iter().any(|c| !c.is_zero())).unwrap();
        let at = |a: usize, b: usize| {
            let (a, b) = if a <= b { (a, b) } else { (b, a) };
            sol[a * keep - a * (a + 1) / 2 + b].clone()
        };
        let q00 = q.entries[0][0].clone();
        let scale = if at(0, 0).is_zero() { None } else { Some(q00 / at(0, 0)) };
        if let Some(scale) = scale {
            let matrix: Vec<Vec<Rational>> = (0..keep).map(|a| (0..keep).map(|b| at(a, b) * &scale).collect()).collect();
            proportional_to_q = matrix == q.entries;
            cross_blocks_zero = (0..keep)
                .all(|a| (0..keep).all(|b| block_of[a] == block_of[b] || matrix[a][b].is_zero()));
            restricted_solution = matrix.iter().map(|r| r.iter().map(|c| c.to_string()).collect()).collect();
        }
    }
    Ok(TruncatedFormReport {
        shape: shape.to_string(),
        alpha: alpha.to_string(),
        cutoff,
        basis_size: m,
        unknowns,
        equations,
        generators: generators.len(),
        full_dimension: null.len(),
        restricted_cutoff,
        restricted_dimension,
        proportional_to_q,
        cross_blocks_zero,
        restricted_solution,
        scope: "empirical at truncation",
    })
}

/// The three `G(D)`-invariant test functions around `D = N((0))` on a
/// semi-homogeneous tree, with `w = (0,0)`:
/// `h` takes `a` at `o` and `w` and `b` on the rest of `D`; `j` takes `1` at
/// `o`, `−1` at `w`, `0` elsewhere on `D`; `l` vanishes at `o` and `w` and
/// takes `1, −1` on the next two vertices of `D` (zero when `s = 3`).
/// Values on the rest of `S_2` follow from the eigen equation at `o`.
pub fn hd_functions<F: Scalar>(shape: TreeShape, alpha: F, a: F, b: F) -> Result<[EigenFunction<F>; 3]> {
    let TreeShape::SemiHomogeneous { r, s } = shape else {
        return Err(Error::Unsupported("the D-splitting lives on semi-homogeneous trees".into()));
    };
    let ball = TreeBall::shared(shape, 2)?;
    let n_v = ball.children(1);
    let w = n_v.start;
    let count = F::from_int((r * (s - 1)) as i64);
    let outer = F::from_int(((r - 1) * (s - 1)) as i64);
    let build = |at_o: F, at_w: F, rest: &dyn Fn(usize) -> F| -> Result<EigenFunction<F>> {
        let mut seed = vec![F::zero(); ball.len()];
        seed[0] = at_o.clone();
        seed[w] = at_w;
        let mut inner = seed[w].clone();
        for (k, x) in n_v.clone().enumerate().skip(1) {
            seed[x] = rest(k);
            inner += &seed[x];
        }
        let c = (count.clone() * &alpha * &at_o - &inner) / &outer;
        for x in ball.sphere_range(2) {
            if !n_v.contains(&x) {
                seed[x] = c.clone();
            }
        }
        EigenFunction::from_seed(shape, alpha.clone(), 2, seed)
    };
    let h = build(a.clone(), a, &|_| b.clone())?;
    let j = build(F::one(), -F::one(), &|_| F::zero())?;
    let l = build(F::zero(), F::zero(), &|k| match (k, s) {
        (_, 3) => F::zero(),
        (1, _) => F::one(),
        (2, _) => -F::one(),
        _ => F::zero(),
    })?;
    Ok([h, j, l])
}
