//! Exact integer and rational arithmetic plus the small linear algebra
//! needed by affine candidate generation.
//!
//! All values are arbitrary precision ([`num_bigint::BigInt`] and
//! [`num_rational::BigRational`]); there is no floating point anywhere in
//! this crate. Rationals are kept in lowest terms with a positive
//! denominator, which makes the fractional norm `|a| + |b|` well defined.

use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

pub type Int = BigInt;
pub type Rat = num_rational::BigRational;

/// Fractional norm of a rational `a/b` in lowest terms: `|a| + |b|`.
///
/// Extended to the entry-wise maximum for matrices and vectors. Note that
/// `frac_norm(0) = 1` (`0/1`) and `frac_norm(k) = |k| + 1` for integers.
pub fn frac_norm(r: &Rat) -> Int {
    r.numer().abs() + r.denom().abs()
}

/// Entry-wise maximum of fractional norms; `1` for an empty slice.
pub fn frac_norm_slice(rs: &[Rat]) -> Int {
    rs.iter().map(frac_norm).max().unwrap_or_else(Int::one)
}

pub fn rat_int(k: impl Into<Int>) -> Rat {
    Rat::from_integer(k.into())
}

pub fn rat(num: impl Into<Int>, den: impl Into<Int>) -> Rat {
    Rat::new(num.into(), den.into())
}

/// Rectangular matrix of exact rationals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Rat>,
}

impl QMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<Rat>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{}x{} matrix needs {} entries, got {}",
                rows,
                cols,
                rows * cols,
                entries.len()
            )));
        }
        Ok(QMatrix { rows, cols, entries })
    }

    pub fn from_rows(rows: Vec<Vec<Rat>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map(|x| x.len()).unwrap_or(0);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        QMatrix::new(r, c, rows.into_iter().flatten().collect())
    }

    pub fn from_int_rows(rows: Vec<Vec<Int>>) -> Result<Self> {
        QMatrix::from_rows(
            rows.into_iter()
                .map(|row| row.into_iter().map(Rat::from_integer).collect())
                .collect(),
        )
    }

    pub fn zero(rows: usize, cols: usize) -> Self {
        QMatrix { rows, cols, entries: vec![Rat::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = QMatrix::zero(n, n);
        for i in 0..n {
            *m.at_mut(i, i) = Rat::one();
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn at(&self, r: usize, c: usize) -> &Rat {
        &self.entries[r * self.cols + c]
    }

    pub fn at_mut(&mut self, r: usize, c: usize) -> &mut Rat {
        &mut self.entries[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[Rat] {
        &self.entries[r * self.cols..(r + 1) * self.cols]
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn has_integer_entries(&self) -> bool {
        self.entries.iter().all(|e| e.denom().is_one())
    }

    /// Entry-wise maximum fractional norm.
    pub fn frac_norm(&self) -> Int {
        frac_norm_slice(&self.entries)
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, v: &[Rat]) -> Result<Vec<Rat>> {
        if v.len() != self.cols {
            return Err(Error::Dimension(format!(
                "matrix has {} cols, vector has {}",
                self.cols,
                v.len()
            )));
        }
        Ok((0..self.rows)
            .map(|r| self.row(r).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }
}

/// Exact determinant by rational Gaussian elimination with partial pivoting
/// on nonzero entries. Returns an error for non-square matrices.
pub fn det(a: &QMatrix) -> Result<Rat> {
    if !a.is_square() {
        return Err(Error::Dimension(format!("det of {}x{} matrix", a.rows, a.cols)));
    }
    let n = a.rows;
    let mut m = a.entries.clone();
    let idx = |r: usize, c: usize| r * n + c;
    let mut result = Rat::one();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !m[idx(r, col)].is_zero());
        let pivot = match pivot {
            Some(p) => p,
            None => return Ok(Rat::zero()),
        };
        if pivot != col {
            for c in 0..n {
                m.swap(idx(pivot, c), idx(col, c));
            }
            result = -result;
        }
        let p = m[idx(col, col)].clone();
        result *= &p;
        for r in col + 1..n {
            if m[idx(r, col)].is_zero() {
                continue;
            }
            let factor = &m[idx(r, col)] / &p;
            for c in col..n {
                let sub = &factor * &m[idx(col, c)];
                let e = &mut m[idx(r, c)];
                *e = &*e - sub;
            }
        }
    }
    Ok(result)
}

/// Integer square-root ceiling: smallest `s >= 0` with `s*s >= v`.
fn isqrt_ceil(v: &Int) -> Int {
    if v.is_negative() {
        return Int::zero();
    }
    let s = v.sqrt();
    if &(&s * &s) == v {
        s
    } else {
        s + 1
    }
}

/// An upper bound on the absolute values of all subdeterminants of an
/// integer matrix: the product over rows of `max(1, ceil(||row||_2))`.
///
/// Any square submatrix selects a subset of rows, each of whose Euclidean
/// norms is at most the full row norm, so the Hadamard inequality gives the
/// bound; the `max(1, _)` keeps rows outside the selection from shrinking
/// the product.
pub fn hadamard_bound(a: &QMatrix) -> Result<Int> {
    if !a.has_integer_entries() {
        return Err(Error::Precondition("hadamard_bound needs integer entries".into()));
    }
    let mut bound = Int::one();
    for r in 0..a.rows {
        let sq: Int = a.row(r).iter().map(|e| e.numer() * e.numer()).sum();
        let norm = isqrt_ceil(&sq);
        bound *= norm.max(Int::one());
    }
    Ok(bound)
}

/// Exact solution of `A x = b` by Cramer's rule. Returns `None` when the
/// matrix is singular.
pub fn cramer_solve(a: &QMatrix, b: &[Rat]) -> Result<Option<Vec<Rat>>> {
    if !a.is_square() {
        return Err(Error::Dimension(format!("cramer on {}x{} matrix", a.rows, a.cols)));
    }
    if b.len() != a.rows {
        return Err(Error::Dimension(format!(
            "system has {} rows, rhs has {}",
            a.rows,
            b.len()
        )));
    }
    let d = det(a)?;
    if d.is_zero() {
        return Ok(None);
    }
    let n = a.rows;
    let mut out = Vec::with_capacity(n);
    for col in 0..n {
        let mut ai = a.clone();
        for r in 0..n {
            *ai.at_mut(r, col) = b[r].clone();
        }
        out.push(det(&ai)? / &d);
    }
    Ok(Some(out))
}

/// gcd of a slice of integers (0 for an empty slice).
pub fn gcd_all<'a>(vals: impl IntoIterator<Item = &'a Int>) -> Int {
    let mut g = Int::zero();
    for v in vals {
        g = g.gcd(v);
    }
    g
}

/// lcm of a slice of integers (1 for an empty slice).
pub fn lcm_all<'a>(vals: impl IntoIterator<Item = &'a Int>) -> Int {
    let mut l = Int::one();
    for v in vals {
        if v.is_zero() {
            continue;
        }
        l = l.lcm(v);
    }
    l
}

/// Mathematical (non-negative) remainder of `a` modulo `m > 0`.
pub fn math_mod(a: &Int, m: &Int) -> Int {
    a.mod_floor(m)
}

/// Solve the single-variable congruence `c*y ≡ r (mod m)` for `y`.
///
/// Returns `Some((r', m'))` with the solution set `{y : y ≡ r' (mod m')}`,
/// or `None` when there is no solution.
pub fn solve_congruence(c: &Int, r: &Int, m: &Int) -> Option<(Int, Int)> {
    assert!(m.is_positive());
    let c = math_mod(c, m);
    if c.is_zero() {
        return if math_mod(r, m).is_zero() { Some((Int::zero(), Int::one())) } else { None };
    }
    let g = c.gcd(m);
    if !math_mod(r, &g).is_zero() {
        return None;
    }
    let m2 = m / &g;
    let c2 = &c / &g;
    let r2 = math_mod(r, m) / &g;
    // inverse of c2 mod m2 via extended gcd
    let e = c2.extended_gcd(&m2);
    debug_assert!(e.gcd.is_one());
    let inv = math_mod(&e.x, &m2);
    Some((math_mod(&(r2 * inv), &m2), m2))
}

/// Combine congruences `y ≡ r1 (mod m1)` and `y ≡ r2 (mod m2)` (CRT with
/// non-coprime moduli). Returns `None` when incompatible.
pub fn combine_congruences(r1: &Int, m1: &Int, r2: &Int, m2: &Int) -> Option<(Int, Int)> {
    let g = m1.gcd(m2);
    if !math_mod(&(r1 - r2), &g).is_zero() {
        return None;
    }
    let l = m1.lcm(m2);
    // y = r1 + m1 * t, need m1*t ≡ r2 - r1 (mod m2)
    let (t0, tm) = solve_congruence(m1, &(r2 - r1), m2)?;
    let _ = tm;
    let y = r1 + m1 * t0;
    Some((math_mod(&y, &l), l))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rat {
        rat(n, d)
    }

    #[test]
    fn frac_norm_examples() {
        assert_eq!(frac_norm(&q(3, 2)), Int::from(5));
        assert_eq!(frac_norm(&Rat::zero()), Int::from(1));
        assert_eq!(frac_norm(&q(-7, 1)), Int::from(8));
        // normalization: 6/4 == 3/2
        assert_eq!(frac_norm(&q(6, 4)), Int::from(5));
    }

    #[test]
    fn frac_norm_of_integer_is_abs_plus_one() {
        for k in -20i64..=20 {
            assert_eq!(frac_norm(&rat_int(k)), Int::from(k.abs() + 1));
        }
    }

    #[test]
    fn det_examples() {
        let id = QMatrix::identity(2);
        assert_eq!(det(&id).unwrap(), Rat::one());
        // hand-check oracle: cofactor expansion of [[2,1],[1,1]] = 2*1 - 1*1
        let m = QMatrix::from_int_rows(vec![
            vec![2.into(), 1.into()],
            vec![1.into(), 1.into()],
        ])
        .unwrap();
        assert_eq!(det(&m).unwrap(), rat_int(2 * 1 - 1 * 1));
        let dep = QMatrix::from_int_rows(vec![
            vec![1.into(), 2.into()],
            vec![2.into(), 4.into()],
        ])
        .unwrap();
        assert_eq!(det(&dep).unwrap(), Rat::zero());
        assert!(det(&QMatrix::zero(2, 3)).is_err());
    }

    #[test]
    fn cramer_examples() {
        let a = QMatrix::from_int_rows(vec![
            vec![2.into(), 0.into()],
            vec![0.into(), 2.into()],
        ])
        .unwrap();
        let x = cramer_solve(&a, &[rat_int(4), rat_int(6)]).unwrap().unwrap();
        assert_eq!(x, vec![rat_int(2), rat_int(3)]);

        let a = QMatrix::from_int_rows(vec![
            vec![1.into(), 1.into()],
            vec![1.into(), (-1).into()],
        ])
        .unwrap();
        let x = cramer_solve(&a, &[rat_int(3), rat_int(1)]).unwrap().unwrap();
        // substitute back: x + y = 3, x - y = 1
        assert_eq!(&x[0] + &x[1], rat_int(3));
        assert_eq!(&x[0] - &x[1], rat_int(1));
        assert_eq!(x, vec![rat_int(2), rat_int(1)]);

        let sing = QMatrix::from_int_rows(vec![
            vec![1.into(), 2.into()],
            vec![2.into(), 4.into()],
        ])
        .unwrap();
        assert_eq!(cramer_solve(&sing, &[rat_int(1), rat_int(1)]).unwrap(), None);

        assert!(cramer_solve(&a, &[rat_int(1)]).is_err());
    }

    #[test]
    fn cramer_solution_is_exact() {
        let a = QMatrix::from_rows(vec![
            vec![q(1, 2), q(3, 1)],
            vec![q(-2, 3), q(1, 5)],
        ])
        .unwrap();
        let b = [q(7, 4), q(-1, 6)];
        let x = cramer_solve(&a, &b).unwrap().unwrap();
        let ax = a.mul_vec(&x).unwrap();
        assert_eq!(ax, b.to_vec());
    }

    /// Brute-force maximum |subdeterminant| over all square submatrices.
    fn max_subdet(m: &QMatrix) -> Int {
        fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
            let mut out = vec![];
            let mut cur = vec![];
            fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
                if cur.len() == k {
                    out.push(cur.clone());
                    return;
                }
                for i in start..n {
                    cur.push(i);
                    rec(i + 1, n, k, cur, out);
                    cur.pop();
                }
            }
            rec(0, n, k, &mut cur, &mut out);
            out
        }
        let mut best = Int::zero();
        for k in 1..=m.rows().min(m.cols()) {
            for rs in subsets(m.rows(), k) {
                for cs in subsets(m.cols(), k) {
                    let sub = QMatrix::from_rows(
                        rs.iter()
                            .map(|&r| cs.iter().map(|&c| m.at(r, c).clone()).collect())
                            .collect(),
                    )
                    .unwrap();
                    let d = det(&sub).unwrap();
                    best = best.max(d.numer().abs());
                }
            }
        }
        best
    }

    #[test]
    fn hadamard_examples() {
        let id = QMatrix::identity(2);
        assert!(hadamard_bound(&id).unwrap() >= Int::one());
        let m = QMatrix::from_int_rows(vec![
            vec![2.into(), 1.into()],
            vec![1.into(), 1.into()],
        ])
        .unwrap();
        assert!(hadamard_bound(&m).unwrap() >= Int::from(2));
        let s = QMatrix::from_int_rows(vec![vec![3.into()]]).unwrap();
        assert!(hadamard_bound(&s).unwrap() >= Int::from(3));
    }

    #[test]
    fn hadamard_dominates_all_subdets_exhaustively() {
        // all matrices up to 4x4 would be astronomically many; sample the
        // spec's range [-3,3] with a deterministic sweep over small shapes
        // plus an exhaustive 2x2 check.
        for a in -3i64..=3 {
            for b in -3i64..=3 {
                for c in -3i64..=3 {
                    for d in -3i64..=3 {
                        let m = QMatrix::from_int_rows(vec![
                            vec![a.into(), b.into()],
                            vec![c.into(), d.into()],
                        ])
                        .unwrap();
                        assert!(hadamard_bound(&m).unwrap() >= max_subdet(&m));
                    }
                }
            }
        }
        // deterministic 3x3 and 4x4 sweep
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            ((state % 7) as i64) - 3
        };
        for n in 3..=4usize {
            for _ in 0..200 {
                let rows: Vec<Vec<Int>> =
                    (0..n).map(|_| (0..n).map(|_| Int::from(next())).collect()).collect();
                let m = QMatrix::from_int_rows(rows).unwrap();
                assert!(hadamard_bound(&m).unwrap() >= max_subdet(&m));
            }
        }
    }

    #[test]
    fn congruence_solving() {
        // 2y ≡ 1 (mod 4): no solution
        assert_eq!(solve_congruence(&2.into(), &1.into(), &4.into()), None);
        // 2y ≡ 2 (mod 4): y ≡ 1 (mod 2)
        assert_eq!(
            solve_congruence(&2.into(), &2.into(), &4.into()),
            Some((1.into(), 2.into()))
        );
        // 3y ≡ 2 (mod 7): y ≡ 3 (mod 7) since 3*3=9≡2
        assert_eq!(
            solve_congruence(&3.into(), &2.into(), &7.into()),
            Some((3.into(), 7.into()))
        );
        // CRT: y ≡ 1 (mod 2) ∧ y ≡ 2 (mod 3) → y ≡ 5 (mod 6)
        assert_eq!(
            combine_congruences(&1.into(), &2.into(), &2.into(), &3.into()),
            Some((5.into(), 6.into()))
        );
        // incompatible
        assert_eq!(combine_congruences(&1.into(), &2.into(), &0.into(), &2.into()), None);
    }
}
