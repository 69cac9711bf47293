//! Exact dense linear algebra over a [`Scalar`] field: reduced row echelon
//! form, nullspaces, determinants, and congruence diagonalization.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{Rational, Scalar};

/// Row space kept in reduced row echelon form, grown one row at a time.
#[derive(Clone, Debug)]
pub struct Echelon<F> {
    ncols: usize,
    /// Sorted by pivot column; each row has a unit pivot and zeros in the
    /// other rows' pivot columns.
    rows: Vec<(usize, Vec<F>)>,
}

impl<F: Scalar> Echelon<F> {
    pub fn new(ncols: usize) -> Self {
        Self { ncols, rows: Vec::new() }
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn is_full(&self) -> bool {
        self.rows.len() == self.ncols
    }

    /// Reduce `row` against the current basis.
    pub fn reduce(&self, row: &mut [F]) {
        for (p, basis) in &self.rows {
            if row[*p].is_zero() {
                continue;
            }
            let c = row[*p].clone();
            for (x, b) in row.iter_mut().zip(basis) {
                if !b.is_zero() {
                    *x -= &(c.clone() * b);
                }
            }
        }
    }

    /// Add a row; returns whether the rank grew.
    pub fn insert(&mut self, mut row: Vec<F>) -> bool {
        assert_eq!(row.len(), self.ncols, "row length mismatch");
        self.reduce(&mut row);
        let Some(p) = row.iter().position(|x| !x.is_zero()) else {
            return false;
        };
        let inv = row[p].recip();
        for x in row.iter_mut() {
            if !x.is_zero() {
                *x *= &inv;
            }
        }
        for (_, basis) in self.rows.iter_mut() {
            if basis[p].is_zero() {
                continue;
            }
            let c = basis[p].clone();
            for (x, b) in basis.iter_mut().zip(&row) {
                if !b.is_zero() {
                    *x -= &(c.clone() * b);
                }
            }
        }
        let at = self.rows.partition_point(|(q, _)| *q < p);
        self.rows.insert(at, (p, row));
        true
    }

    pub fn pivots(&self) -> Vec<usize> {
        self.rows.iter().map(|(p, _)| *p).collect()
    }

    pub fn rows(&self) -> impl Iterator<Item = &[F]> {
        self.rows.iter().map(|(_, r)| r.as_slice())
    }

    /// Basis of `{x : Ax = 0}`, one vector per free column, in column order.
    pub fn nullspace(&self) -> Vec<Vec<F>> {
        let mut is_pivot = vec![false; self.ncols];
        for (p, _) in &self.rows {
            is_pivot[*p] = true;
        }
        (0..self.ncols)
            .filter(|&c| !is_pivot[c])
            .map(|free| {
                let mut x = vec![F::zero(); self.ncols];
                x[free] = F::one();
                for (p, row) in &self.rows {
                    if !row[free].is_zero() {
                        x[*p] = -row[free].clone();
                    }
                }
                x
            })
            .collect()
    }
}

/// Row echelon form (not reduced) over sparse rows, for rank counts of large
/// structured systems. Rows are sorted `(column, value)` lists.
#[derive(Clone, Debug, Default)]
pub struct SparseEchelon<F> {
    /// Leading column → row normalized to a unit lead.
    rows: std::collections::HashMap<usize, Vec<(usize, F)>>,
}

impl<F: Scalar> SparseEchelon<F> {
    pub fn new() -> Self {
        Self { rows: std::collections::HashMap::new() }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Add a row (any order, duplicates summed); returns whether the rank grew.
    pub fn insert(&mut self, entries: Vec<(usize, F)>) -> bool {
        let mut row = normalize_sparse(entries);
        loop {
            let Some((lead, coeff)) = row.first().cloned() else { return false };
            let Some(basis) = self.rows.get(&lead) else {
                let inv = coeff.recip();
                let row = row.into_iter().map(|(c, x)| (c, x * &inv)).collect();
                self.rows.insert(lead, row);
                return true;
            };
            let scaled: Vec<(usize, F)> = basis.iter().map(|(c, x)| (*c, -(x.clone() * &coeff))).collect();
            row.extend(scaled);
            row = normalize_sparse(row);
        }
    }
}

fn normalize_sparse<F: Scalar>(mut entries: Vec<(usize, F)>) -> Vec<(usize, F)> {
    entries.sort_by_key(|(c, _)| *c);
    let mut out: Vec<(usize, F)> = Vec::with_capacity(entries.len());
    for (c, x) in entries {
        match out.last_mut() {
            Some((lc, lx)) if *lc == c => *lx += &x,
            _ => out.push((c, x)),
        }
    }
    out.retain(|(_, x)| !x.is_zero());
    out
}

pub fn rank<F: Scalar>(rows: &[Vec<F>]) -> usize {
    let Some(first) = rows.first() else { return 0 };
    let mut ech = Echelon::new(first.len());
    for r in rows {
        ech.insert(r.clone());
        if ech.is_full() {
            break;
        }
    }
    ech.rank()
}

pub fn nullspace<F: Scalar>(rows: &[Vec<F>], ncols: usize) -> Vec<Vec<F>> {
    let mut ech = Echelon::new(ncols);
    for r in rows {
        ech.insert(r.clone());
    }
    ech.nullspace()
}

/// Solve `Ax = b` for one particular solution, `None` if inconsistent.
pub fn solve<F: Scalar>(a: &[Vec<F>], b: &[F]) -> Option<Vec<F>> {
    let ncols = a.first().map_or(0, Vec::len);
    let mut ech = Echelon::new(ncols + 1);
    for (row, rhs) in a.iter().zip(b) {
        let mut aug = row.clone();
        aug.push(rhs.clone());
        ech.insert(aug);
    }
    if ech.pivots().contains(&ncols) {
        return None;
    }
    let mut x = vec![F::zero(); ncols];
    for (p, row) in &ech.rows {
        x[*p] = row[ncols].clone();
    }
    Some(x)
}

pub fn determinant<F: Scalar>(m: &[Vec<F>]) -> F {
    let n = m.len();
    let mut a: Vec<Vec<F>> = m.to_vec();
    let mut det = F::one();
    for col in 0..n {
        let Some(p) = (col..n).find(|&r| !a[r][col].is_zero()) else {
            return F::zero();
        };
        if p != col {
            a.swap(p, col);
            det = -det;
        }
        let pivot = a[col][col].clone();
        det *= &pivot;
        for r in col + 1..n {
            if a[r][col].is_zero() {
                continue;
            }
            let factor = a[r][col].clone() / &pivot;
            for c in col..n {
                if !a[col][c].is_zero() {
                    let delta = factor.clone() * &a[col][c];
                    a[r][c] -= &delta;
                }
            }
        }
    }
    det
}

/// Leading principal minors `det(A[..k, ..k])` for `k = 1..=n`.
pub fn leading_principal_minors<F: Scalar>(m: &[Vec<F>]) -> Vec<F> {
    let n = m.len();
    let mut a: Vec<Vec<F>> = m.to_vec();
    let mut out = Vec::with_capacity(n);
    let mut running = F::one();
    // Elimination without row exchanges keeps every leading block intact; a
    // zero pivot forces direct determinants from there on.
    for k in 0..n {
        if a[k][k].is_zero() {
            out.extend((k + 1..=n).map(|j| {
                let sub: Vec<Vec<F>> = m[..j].iter().map(|r| r[..j].to_vec()).collect();
                determinant(&sub)
            }));
            return out;
        }
        let pivot = a[k][k].clone();
        running *= &pivot;
        out.push(running.clone());
        for r in k + 1..n {
            if a[r][k].is_zero() {
                continue;
            }
            let factor = a[r][k].clone() / &pivot;
            for c in k..n {
                if !a[k][c].is_zero() {
                    let delta = factor.clone() * &a[k][c];
                    a[r][c] -= &delta;
                }
            }
        }
    }
    out
}

/// Inertia of a real symmetric form.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Signature {
    #[serde(rename = "pos")]
    pub n_plus: usize,
    #[serde(rename = "neg")]
    pub n_minus: usize,
    #[serde(rename = "zero")]
    pub n_zero: usize,
}

impl Signature {
    pub fn total(&self) -> usize {
        self.n_plus + self.n_minus + self.n_zero
    }
}

/// Which nonzero diagonal entry to eliminate next.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PivotStrategy {
    FirstNonzero,
    LastNonzero,
    MaxAbs,
}

impl PivotStrategy {
    pub const ALL: [PivotStrategy; 3] = [Self::FirstNonzero, Self::LastNonzero, Self::MaxAbs];
}

/// Exact inertia by symmetric Gaussian elimination (congruence). When the
/// remaining diagonal vanishes a nonzero off-diagonal pair is eliminated as a
/// hyperbolic plane, contributing one positive and one negative direction.
pub fn signature(m: &[Vec<Rational>], strategy: PivotStrategy) -> Result<Signature> {
    let n = m.len();
    for (i, row) in m.iter().enumerate() {
        if row.len() != n {
            return Err(Error::Unsupported("Gram matrix must be square".into()));
        }
        for j in 0..i {
            if row[j] != m[j][i] {
                return Err(Error::Unsupported(format!("Gram matrix not symmetric at ({i},{j})")));
            }
        }
    }
    let mut a: Vec<Vec<Rational>> = m.to_vec();
    let mut active: Vec<usize> = (0..n).collect();
    let mut sig = Signature { n_plus: 0, n_minus: 0, n_zero: 0 };
    while !active.is_empty() {
        let diag: Vec<usize> = active.iter().copied().filter(|&i| !Scalar::is_zero(&a[i][i])).collect();
        let chosen = match strategy {
            PivotStrategy::FirstNonzero => diag.first().copied(),
            PivotStrategy::LastNonzero => diag.last().copied(),
            PivotStrategy::MaxAbs => diag.iter().copied().max_by(|&x, &y| {
                let (ax, ay) = (abs(&a[x][x]), abs(&a[y][y]));
                ax.cmp(&ay).then(match x.cmp(&y) {
                    Ordering::Less => Ordering::Greater,
                    o => o.reverse(),
                })
            }),
        };
        if let Some(i) = chosen {
            let pivot = a[i][i].clone();
            if pivot > Rational::zero() {
                sig.n_plus += 1;
            } else {
                sig.n_minus += 1;
            }
            active.retain(|&k| k != i);
            let col: Vec<(usize, Rational)> = active
                .iter()
                .filter(|&&k| !Scalar::is_zero(&a[k][i]))
                .map(|&k| (k, a[k][i].clone()))
                .collect();
            for &(k, ref aki) in &col {
                let scaled = aki.clone() / &pivot;
                for &(l, ref ail) in &col {
                    let delta = scaled.clone() * ail;
                    a[k][l] -= &delta;
                }
            }
            continue;
        }
        let pair = active.iter().enumerate().find_map(|(pos, &i)| {
            active[pos + 1..].iter().find(|&&j| !Scalar::is_zero(&a[i][j])).map(|&j| (i, j))
        });
        let Some((i, j)) = pair else {
            sig.n_zero += active.len();
            break;
        };
        let b = a[i][j].clone();
        sig.n_plus += 1;
        sig.n_minus += 1;
        active.retain(|&k| k != i && k != j);
        let cols: Vec<(usize, Rational, Rational)> = active
            .iter()
            .filter(|&&k| !Scalar::is_zero(&a[k][i]) || !Scalar::is_zero(&a[k][j]))
            .map(|&k| (k, a[k][i].clone(), a[k][j].clone()))
            .collect();
        for &(k, ref aki, ref akj) in &cols {
            for &(l, ref ail, ref ajl) in &cols {
                let delta = (aki.clone() * ajl + akj.clone() * ail) / &b;
                a[k][l] -= &delta;
            }
        }
    }
    Ok(sig)
}

fn abs(q: &Rational) -> Rational {
    if *q < Rational::zero() {
        -q.clone()
    } else {
        q.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rat, Gaussian};
    use proptest::prelude::*;

    fn m(rows: &[&[i64]]) -> Vec<Vec<Rational>> {
        rows.iter().map(|r| r.iter().map(|&x| rat(x, 1)).collect()).collect()
    }

    #[test]
    fn echelon_and_nullspace() {
        let a = m(&[&[1, 2, 3], &[2, 4, 6], &[1, 0, 1]]);
        assert_eq!(rank(&a), 2);
        let ns = nullspace(&a, 3);
        assert_eq!(ns.len(), 1);
        for row in &a {
            let dot = row.iter().zip(&ns[0]).fold(rat(0, 1), |acc, (x, y)| acc + x * y);
            assert_eq!(dot, rat(0, 1));
        }
    }

    #[test]
    fn solve_consistent_and_not() {
        let a = m(&[&[1, 1], &[1, -1]]);
        assert_eq!(solve(&a, &[rat(3, 1), rat(1, 1)]), Some(vec![rat(2, 1), rat(1, 1)]));
        let b = m(&[&[1, 1], &[2, 2]]);
        assert_eq!(solve(&b, &[rat(1, 1), rat(3, 1)]), None);
    }

    #[test]
    fn determinants() {
        assert_eq!(determinant(&m(&[&[2, 1], &[1, 3]])), rat(5, 1));
        assert_eq!(determinant(&m(&[&[0, 1], &[1, 0]])), rat(-1, 1));
        assert_eq!(determinant(&m(&[&[1, 2], &[2, 4]])), rat(0, 1));
        let minors = leading_principal_minors(&m(&[&[0, 1, 0], &[1, 0, 0], &[0, 0, 2]]));
        assert_eq!(minors, vec![rat(0, 1), rat(-1, 1), rat(-2, 1)]);
    }

    #[test]
    fn gaussian_nullspace() {
        let i = Gaussian::i();
        let one = Gaussian::one();
        let a = vec![vec![one.clone(), i.clone()], vec![i.clone(), -one.clone()]];
        let ns = nullspace(&a, 2);
        assert_eq!(ns, vec![vec![-i, one]]);
    }

    #[test]
    fn signature_examples() {
        let hyperbolic = m(&[&[0, 1], &[1, 0]]);
        let diag = m(&[&[1, 0, 0], &[0, -2, 0], &[0, 0, 0]]);
        for s in PivotStrategy::ALL {
            assert_eq!(signature(&hyperbolic, s).unwrap(), Signature { n_plus: 1, n_minus: 1, n_zero: 0 });
            assert_eq!(signature(&diag, s).unwrap(), Signature { n_plus: 1, n_minus: 1, n_zero: 1 });
        }
        assert!(signature(&m(&[&[1, 2], &[3, 4]]), PivotStrategy::FirstNonzero).is_err());
    }

    #[test]
    fn sparse_rank_matches_dense() {
        let a = m(&[&[1, 2, 3, 0], &[2, 4, 6, 0], &[0, 0, 1, 1], &[1, 2, 4, 1]]);
        let mut sp = SparseEchelon::new();
        for row in &a {
            sp.insert(row.iter().cloned().enumerate().collect());
        }
        assert_eq!(sp.rank(), rank(&a));
        assert_eq!(sp.rank(), 2);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn sylvester_invariance(entries in proptest::collection::vec(-3i64..4, 36), n in 1usize..7, sparse in any::<bool>()) {
            // Random symmetric matrix, optionally with a zero diagonal to force hyperbolic pivots.
            let mut a = vec![vec![rat(0, 1); n]; n];
            for i in 0..n {
                for j in 0..=i {
                    let v = if sparse && i == j { 0 } else { entries[i * 6 + j] };
                    a[i][j] = rat(v, 1);
                    a[j][i] = rat(v, 1);
                }
            }
            let sigs: Vec<Signature> = PivotStrategy::ALL.iter().map(|&s| signature(&a, s).unwrap()).collect();
            prop_assert_eq!(sigs[0], sigs[1]);
            prop_assert_eq!(sigs[0], sigs[2]);
            prop_assert_eq!(sigs[0].total(), n);
            prop_assert_eq!(sigs[0].n_zero, n - rank(&a));
            // Congruence by a unit lower-triangular change of basis preserves inertia.
            let mut p = vec![vec![rat(0, 1); n]; n];
            for i in 0..n {
                p[i][i] = rat(1, 1);
                for j in 0..i {
                    p[i][j] = rat(entries[(i + 2 * j) % 36] % 2, 1);
                }
            }
            let mut b = vec![vec![rat(0, 1); n]; n];
            for i in 0..n {
                for j in 0..n {
                    let mut acc = rat(0, 1);
                    for k in 0..n {
                        for l in 0..n {
                            acc += p[i][k].clone() * &a[k][l] * &p[j][l];
                        }
                    }
                    b[i][j] = acc;
                }
            }
            prop_assert_eq!(signature(&b, PivotStrategy::MaxAbs).unwrap(), sigs[0]);
        }

        #[test]
        fn nullspace_vectors_are_annihilated(entries in proptest::collection::vec(-3i64..4, 20)) {
            let a: Vec<Vec<Rational>> = entries.chunks(5).map(|r| r.iter().map(|&x| rat(x, 1)).collect()).collect();
            let ns = nullspace(&a, 5);
            prop_assert_eq!(ns.len() + rank(&a), 5);
            for v in &ns {
                for row in &a {
                    let dot = row.iter().zip(v).fold(rat(0, 1), |acc, (x, y)| acc + x * y);
                    prop_assert_eq!(dot, rat(0, 1));
                }
            }
        }
    }
}
