//! Exact linear algebra over `Q`, `Z` and the rational function field.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::field::FieldElem;
use super::mpoly::{MPoly, Monomial};
use super::{AlgError, Rat};

#[derive(Clone, PartialEq, Eq)]
pub struct QMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Rat>,
}

impl QMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        QMatrix { rows, cols, entries: vec![Rat::zero(); rows * cols] }
    }

    pub fn from_rows(rows: Vec<Vec<Rat>>) -> Result<Self, AlgError> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(AlgError::DimensionMismatch(format!("ragged rows in a {r}-row matrix")));
        }
        Ok(QMatrix { rows: r, cols: c, entries: rows.into_iter().flatten().collect() })
    }

    pub fn from_int_rows(rows: &[&[i64]]) -> Self {
        Self::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&x| Rat::from_integer(BigInt::from(x))).collect())
                .collect(),
        )
        .expect("rectangular")
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Rat::one());
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &Rat {
        &self.entries[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Rat) {
        self.entries[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[Rat] {
        &self.entries[r * self.cols..(r + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<Rat>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c).clone());
            }
        }
        t
    }

    pub fn mul_vec(&self, v: &[Rat]) -> Result<Vec<Rat>, AlgError> {
        if v.len() != self.cols {
            return Err(AlgError::DimensionMismatch(format!(
                "vector of length {} against {} columns",
                v.len(),
                self.cols
            )));
        }
        Ok((0..self.rows)
            .map(|r| self.row(r).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// Lcm of the denominators of all entries.
    pub fn denominator_lcm(&self) -> BigInt {
        self.entries.iter().fold(BigInt::one(), |l, e| l.lcm(e.denom()))
    }

    /// Each row scaled to integers (row-wise lcm of denominators).
    fn integer_rows(&self) -> Vec<Vec<BigInt>> {
        (0..self.rows)
            .map(|r| {
                let row = self.row(r);
                let l = row.iter().fold(BigInt::one(), |l, e| l.lcm(e.denom()));
                row.iter().map(|e| (e * Rat::from_integer(l.clone())).to_integer()).collect()
            })
            .collect()
    }

    /// Row echelon form by Bareiss elimination over `Z`; returns the pivot columns
    /// and the echelon rows.
    fn bareiss(&self) -> (Vec<usize>, Vec<Vec<BigInt>>) {
        let mut m = self.integer_rows();
        let mut pivots = Vec::new();
        let mut prev = BigInt::one();
        let mut r = 0;
        for c in 0..self.cols {
            if r == m.len() {
                break;
            }
            let Some(p) = (r..m.len()).find(|&i| !m[i][c].is_zero()) else {
                continue;
            };
            m.swap(r, p);
            for i in r + 1..m.len() {
                for j in c + 1..self.cols {
                    let v = &m[r][c] * &m[i][j] - &m[i][c] * &m[r][j];
                    m[i][j] = v / &prev;
                }
                m[i][c] = BigInt::zero();
            }
            prev = m[r][c].clone();
            pivots.push(c);
            r += 1;
        }
        m.truncate(r);
        (pivots, m)
    }

    pub fn rank(&self) -> usize {
        self.bareiss().0.len()
    }

    /// A basis of the right null space, one integer-primitive vector per free column.
    pub fn kernel_basis(&self) -> Vec<Vec<Rat>> {
        let (pivots, ech) = self.bareiss();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut x = vec![Rat::zero(); self.cols];
                x[f] = Rat::one();
                back_substitute(&ech, &pivots, &mut x);
                primitive(x)
            })
            .collect()
    }

    /// Solves `self · x = target`. Free variables are set to zero.
    pub fn solve(&self, target: &[Rat]) -> Result<Option<Vec<Rat>>, AlgError> {
        if target.len() != self.rows {
            return Err(AlgError::DimensionMismatch(format!(
                "target of length {} against {} rows",
                target.len(),
                self.rows
            )));
        }
        let mut aug = Self::zeros(self.rows, self.cols + 1);
        for r in 0..self.rows {
            for c in 0..self.cols {
                aug.set(r, c, self.get(r, c).clone());
            }
            aug.set(r, self.cols, target[r].clone());
        }
        let (pivots, ech) = aug.bareiss();
        if pivots.last() == Some(&self.cols) {
            return Ok(None);
        }
        let mut x = vec![Rat::zero(); self.cols + 1];
        x[self.cols] = -Rat::one();
        back_substitute(&ech, &pivots, &mut x);
        x.pop();
        Ok(Some(x))
    }

    /// A `Z`-basis of the lattice `ker(self) ∩ Z^cols`.
    pub fn integer_kernel_basis(&self) -> Vec<Vec<BigInt>> {
        let m = self.integer_rows();
        let n = self.cols;
        // Column operations on [M; I]; columns with zero M-part span the lattice.
        let mut cols: Vec<(Vec<BigInt>, Vec<BigInt>)> = (0..n)
            .map(|c| {
                let top = m.iter().map(|row| row[c].clone()).collect();
                let mut bottom = vec![BigInt::zero(); n];
                bottom[c] = BigInt::one();
                (top, bottom)
            })
            .collect();
        let mut done = 0;
        for r in 0..m.len() {
            loop {
                let nonzero: Vec<usize> = (done..n).filter(|&c| !cols[c].0[r].is_zero()).collect();
                if nonzero.is_empty() {
                    break;
                }
                let piv = *nonzero
                    .iter()
                    .min_by(|&&a, &&b| cols[a].0[r].abs().cmp(&cols[b].0[r].abs()))
                    .unwrap();
                if nonzero.len() == 1 {
                    cols.swap(done, piv);
                    done += 1;
                    break;
                }
                for &c in &nonzero {
                    if c == piv {
                        continue;
                    }
                    let q = cols[c].0[r].div_floor(&cols[piv].0[r]);
                    let (pt, pb) = cols[piv].clone();
                    let (ct, cb) = &mut cols[c];
                    for (x, y) in ct.iter_mut().zip(&pt) {
                        *x -= &q * y;
                    }
                    for (x, y) in cb.iter_mut().zip(&pb) {
                        *x -= &q * y;
                    }
                }
            }
        }
        cols.into_iter()
            .skip(done)
            .map(|(_, b)| normalize_sign(b))
            .collect()
    }
}

impl fmt::Debug for QMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<Vec<String>> = self.to_rows().iter().map(|r| r.iter().map(|e| e.to_string()).collect()).collect();
        write!(f, "{rows:?}")
    }
}

fn back_substitute(ech: &[Vec<BigInt>], pivots: &[usize], x: &mut [Rat]) {
    for (i, &p) in pivots.iter().enumerate().rev() {
        let row = &ech[i];
        let mut s = Rat::zero();
        for (j, xj) in x.iter().enumerate().take(row.len()).skip(p + 1) {
            if !row[j].is_zero() && !xj.is_zero() {
                s += Rat::from_integer(row[j].clone()) * xj;
            }
        }
        x[p] = -s / Rat::from_integer(row[p].clone());
    }
}

/// Scales a rational vector to a primitive integer vector whose last nonzero
/// entry is positive.
pub fn primitive(x: Vec<Rat>) -> Vec<Rat> {
    let l = x.iter().fold(BigInt::one(), |l, e| l.lcm(e.denom()));
    let ints: Vec<BigInt> = x.iter().map(|e| (e * Rat::from_integer(l.clone())).to_integer()).collect();
    normalize_sign(ints).into_iter().map(Rat::from_integer).collect()
}

/// Divides by the gcd and makes the last nonzero entry positive.
pub fn normalize_sign(mut v: Vec<BigInt>) -> Vec<BigInt> {
    let g = v.iter().fold(BigInt::zero(), |g, e| g.gcd(e));
    if !g.is_zero() && !g.is_one() {
        for e in v.iter_mut() {
            *e = &*e / &g;
        }
    }
    if v.iter().rev().find(|e| !e.is_zero()).is_some_and(|e| e.is_negative()) {
        for e in v.iter_mut() {
            *e = -&*e;
        }
    }
    v
}

pub fn to_integer_vector(v: &[Rat]) -> Option<Vec<BigInt>> {
    v.iter().map(|e| e.is_integer().then(|| e.to_integer())).collect()
}

/// Unimodular row reduction of `m`; returns the transform rows producing the
/// nonzero Hermite rows.
pub fn hermite_combinations(m: Vec<Vec<BigInt>>) -> Vec<Vec<BigInt>> {
    let n = m.len();
    let ncols = m.first().map_or(0, Vec::len);
    let mut rows: Vec<(Vec<BigInt>, Vec<BigInt>)> = m
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            let mut u = vec![BigInt::zero(); n];
            u[i] = BigInt::one();
            (r, u)
        })
        .collect();
    let mut r = 0;
    for c in 0..ncols {
        loop {
            let live: Vec<usize> = (r..n).filter(|&i| !rows[i].0[c].is_zero()).collect();
            let Some(&p) = live.iter().min_by_key(|&&i| rows[i].0[c].abs()) else {
                break;
            };
            rows.swap(r, p);
            let mut done = true;
            for i in r + 1..n {
                if rows[i].0[c].is_zero() {
                    continue;
                }
                let q = rows[i].0[c].div_floor(&rows[r].0[c]);
                let (head, tail) = rows.split_at_mut(i);
                let pivot = &head[r];
                for (x, y) in tail[0].0.iter_mut().zip(&pivot.0) {
                    *x -= &q * y;
                }
                for (x, y) in tail[0].1.iter_mut().zip(&pivot.1) {
                    *x -= &q * y;
                }
                if !tail[0].0[c].is_zero() {
                    done = false;
                }
            }
            if done {
                r += 1;
                break;
            }
        }
    }
    rows.into_iter().take(r).map(|(_, u)| u).collect()
}

/// Coefficient matrix whose right kernel is the space of rational vectors `m`
/// with `Σ_i m_i · columns[i][j] = 0` for every component `j`.
///
/// Each component is brought over a common denominator and its numerator is
/// split into (monomial, cyclotomic coordinate) rows.
pub fn relation_matrix(columns: &[Vec<FieldElem>]) -> QMatrix {
    let ncols = columns.len();
    let ncomp = columns.first().map_or(0, Vec::len);
    let mut rows: Vec<Vec<Rat>> = Vec::new();
    for j in 0..ncomp {
        let elems: Vec<&FieldElem> = columns.iter().map(|c| &c[j]).collect();
        let numerators = common_numerators(&elems);
        let mut index: BTreeMap<(Monomial, usize), usize> = BTreeMap::new();
        let mut block: Vec<Vec<Rat>> = Vec::new();
        for (i, p) in numerators.iter().enumerate() {
            for (m, c) in p.terms() {
                for (k, coord) in c.coords().iter().enumerate() {
                    if coord.is_zero() {
                        continue;
                    }
                    let key = (m.clone(), coord_key(c.order(), k));
                    let r = *index.entry(key).or_insert_with(|| {
                        block.push(vec![Rat::zero(); ncols]);
                        block.len() - 1
                    });
                    block[r][i] += coord;
                }
            }
        }
        rows.extend(block);
    }
    if rows.is_empty() {
        return QMatrix::zeros(0, ncols);
    }
    QMatrix::from_rows(rows).expect("rectangular")
}

// Coordinates of different cyclotomic orders are lifted to a common order
// before reaching here; the key records order and index for safety.
fn coord_key(order: u32, k: usize) -> usize {
    ((order as usize) << 20) | k
}

/// Numerators of the elements over a common denominator.
fn common_numerators(elems: &[&FieldElem]) -> Vec<MPoly> {
    let order = elems.iter().fold(1u32, |l, e| l.lcm(&e.coefficient_order()));
    let lifted: Vec<FieldElem> = elems.iter().map(|e| if order > 1 { e.lift(order) } else { (*e).clone() }).collect();
    // Distinct denominators up to equality; their product is the common denominator.
    let mut dens: Vec<MPoly> = Vec::new();
    for e in &lifted {
        if !e.denom().is_one() && !dens.contains(e.denom()) {
            dens.push(e.denom().clone());
        }
    }
    lifted
        .iter()
        .map(|e| {
            let mut p = e.numer().clone();
            for d in &dens {
                if d != e.denom() {
                    p = p.mul(d);
                }
            }
            if order > 1 {
                p.lift(order)
            } else {
                p
            }
        })
        .collect()
}

/// Rational kernel of `m ↦ Σ m_i e_i` for a list of field elements.
pub fn linear_relations(elems: &[FieldElem]) -> Vec<Vec<Rat>> {
    let columns: Vec<Vec<FieldElem>> = elems.iter().map(|e| vec![e.clone()]).collect();
    relation_matrix(&columns).kernel_basis()
}

/// Expresses `target` as a rational combination of `basis`, if possible.
pub fn express_in_span(basis: &[FieldElem], target: &FieldElem) -> Option<Vec<Rat>> {
    let columns: Vec<Vec<FieldElem>> = basis.iter().map(|e| vec![e.clone()]).collect();
    express_in_column_span(&columns, std::slice::from_ref(target))
}

/// Rational coefficients `q` with `Σ q_i basis[i] = target` componentwise.
pub fn express_in_column_span(basis: &[Vec<FieldElem>], target: &[FieldElem]) -> Option<Vec<Rat>> {
    let mut columns = basis.to_vec();
    columns.push(target.to_vec());
    let full = relation_matrix(&columns);
    let k = basis.len();
    let mut a = QMatrix::zeros(full.rows(), k);
    let mut b = Vec::with_capacity(full.rows());
    for r in 0..full.rows() {
        for c in 0..k {
            a.set(r, c, full.get(r, c).clone());
        }
        b.push(full.get(r, k).clone());
    }
    a.solve(&b).expect("consistent dimensions")
}

/// Rank over the fraction field, by fraction-free elimination on
/// denominator-cleared rows.
pub fn ff_rank(m: &[Vec<FieldElem>]) -> usize {
    let mut rows: Vec<Vec<MPoly>> = m.iter().map(|r| clear_row(r)).filter(|r| r.iter().any(|e| !e.is_zero())).collect();
    if rows.is_empty() {
        return 0;
    }
    let ncols = rows[0].len();
    let mut rank = 0;
    let mut live: Vec<usize> = (0..ncols).collect();
    // Rows with a single nonzero entry pivot on their column immediately.
    loop {
        let Some(pos) = rows
            .iter()
            .position(|r| live.iter().filter(|&&c| !r[c].is_zero()).count() == 1)
        else {
            break;
        };
        let row = rows.swap_remove(pos);
        let c = *live.iter().find(|&&c| !row[c].is_zero()).unwrap();
        live.retain(|&x| x != c);
        rank += 1;
        rows.retain(|r| live.iter().any(|&c| !r[c].is_zero()));
    }
    rank + bareiss_rank(rows, &live)
}

fn bareiss_rank(mut m: Vec<Vec<MPoly>>, cols: &[usize]) -> usize {
    let mut prev = MPoly::one();
    let mut r = 0;
    for (ci, &c) in cols.iter().enumerate() {
        if r == m.len() {
            break;
        }
        let Some(p) = (r..m.len()).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        for i in r + 1..m.len() {
            for &j in &cols[ci + 1..] {
                let v = m[r][c].mul(&m[i][j]).sub(&m[i][c].mul(&m[r][j]));
                m[i][j] = v.div_exact(&prev).expect("Bareiss division is exact");
            }
            m[i][c] = MPoly::zero();
        }
        prev = m[r][c].clone();
        r += 1;
    }
    r
}

fn clear_row(row: &[FieldElem]) -> Vec<MPoly> {
    let refs: Vec<&FieldElem> = row.iter().collect();
    common_numerators(&refs)
}

/// Row space over the function field in reduced echelon form; supports
/// reducing vectors modulo the space (an `F`-linear projection).
pub struct FieldRowSpace {
    pivots: Vec<(usize, Vec<FieldElem>)>,
}

impl FieldRowSpace {
    pub fn new(rows: &[Vec<FieldElem>]) -> Self {
        let mut space = FieldRowSpace { pivots: Vec::new() };
        for r in rows {
            space.insert(r.clone());
        }
        space
    }

    pub fn dim(&self) -> usize {
        self.pivots.len()
    }

    fn insert(&mut self, row: Vec<FieldElem>) {
        let v = self.reduce(&row);
        let Some(p) = v.iter().position(|e| !e.is_zero()) else {
            return;
        };
        let inv = v[p].inv().expect("nonzero pivot");
        let v: Vec<FieldElem> = v.iter().map(|e| if e.is_zero() { e.clone() } else { e.mul(&inv) }).collect();
        for (_, other) in self.pivots.iter_mut() {
            let f = other[p].clone();
            if f.is_zero() {
                continue;
            }
            for (o, x) in other.iter_mut().zip(&v) {
                if !x.is_zero() {
                    *o = o.sub(&f.mul(x));
                }
            }
        }
        self.pivots.push((p, v));
    }

    /// `v` minus its component along the pivots.
    pub fn reduce(&self, v: &[FieldElem]) -> Vec<FieldElem> {
        let mut out = v.to_vec();
        for (p, row) in &self.pivots {
            let f = out[*p].clone();
            if f.is_zero() {
                continue;
            }
            for (o, x) in out.iter_mut().zip(row) {
                if !x.is_zero() {
                    *o = o.sub(&f.mul(x));
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64) -> Rat {
        Rat::from_integer(BigInt::from(n))
    }

    #[test]
    fn kernel_of_single_row() {
        let m = QMatrix::from_int_rows(&[&[1, 2]]);
        assert_eq!(m.kernel_basis(), vec![vec![r(-2), r(1)]]);
    }

    #[test]
    fn identity_solve() {
        let m = QMatrix::identity(2);
        assert_eq!(m.solve(&[r(3), r(4)]).unwrap(), Some(vec![r(3), r(4)]));
        assert!(matches!(m.solve(&[r(1)]), Err(AlgError::DimensionMismatch(_))));
    }

    #[test]
    fn inconsistent_solve() {
        let m = QMatrix::from_int_rows(&[&[1, 1], &[2, 2]]);
        assert_eq!(m.solve(&[r(1), r(3)]).unwrap(), None);
    }

    #[test]
    fn integer_lattice_is_saturated() {
        // Kernel of [2, 4] over Z is spanned by (-2, 1); over Q scaling gives the same.
        let m = QMatrix::from_int_rows(&[&[2, 4]]);
        let k = m.integer_kernel_basis();
        assert_eq!(k, vec![vec![BigInt::from(-2), BigInt::from(1)]]);
        // [1, 1, 1]: rank-2 lattice.
        let m = QMatrix::from_int_rows(&[&[1, 1, 1]]);
        assert_eq!(m.integer_kernel_basis().len(), 2);
    }

    #[test]
    fn function_field_ranks() {
        let t1 = FieldElem::var("t1");
        let t2 = FieldElem::var("t2");
        assert_eq!(ff_rank(&[vec![t1.clone(), t2.clone()], vec![t2.clone(), t1.clone()]]), 2);
        assert_eq!(ff_rank(&[vec![t1.clone()], vec![t1.scale_int(&2.into())]]), 1);
        assert_eq!(ff_rank(&vec![vec![FieldElem::zero(); 3]; 2]), 0);
    }

    #[test]
    fn relations_among_field_elements() {
        let u = FieldElem::var("u");
        let elems = [u.clone(), u.scale_int(&2.into()).add(&FieldElem::from_int(3)), FieldElem::one()];
        let k = linear_relations(&elems);
        assert_eq!(k, vec![vec![r(2), r(-1), r(3)]]);
        let half = u.div(&FieldElem::from_int(2)).unwrap();
        assert_eq!(express_in_span(&[u.clone()], &half), Some(vec![Rat::new(1.into(), 2.into())]));
        assert_eq!(express_in_span(&[u.clone()], &FieldElem::one()), None);
    }
}
