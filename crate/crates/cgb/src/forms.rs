//! Exterior-algebra kernel: sparse alternating forms, wedge products,
//! evaluation on vectors, and the Pfaffian of a skew matrix of 2-forms.
//!
//! Coefficients are stored on strictly increasing multi-indices encoded as
//! bitmasks over the basis {0, .., d-1} (d <= 64). Bitmask disjointness gives
//! an O(1) index merge, and the wedge sign comes from a popcount-based
//! transposition count.

use crate::linalg::det_f64;
use crate::tol;
use crate::{CgbError, Result};
use std::collections::BTreeMap;

/// A grade-`p` antisymmetric multilinear form over a `dim`-dimensional space.
/// Absent multi-indices are zero. A grade-0 form is a single scalar stored at
/// the empty mask; forms of grade above `dim` normalize to an empty map.
#[derive(Debug, Clone, PartialEq)]
pub struct AlternatingForm {
    dim: usize,
    grade: usize,
    coeffs: BTreeMap<u64, f64>,
}

/// Sign of merging two disjoint increasing index sets `a` then `b` into one
/// increasing set: parity of the number of pairs (i in a, j in b) with i > j.
fn shuffle_sign(a: u64, b: u64) -> f64 {
    let mut count = 0u32;
    let mut rest = b;
    while rest != 0 {
        let j = rest.trailing_zeros();
        count += (a >> (j + 1)).count_ones();
        rest &= rest - 1;
    }
    if count % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

impl AlternatingForm {
    pub fn zero(dim: usize, grade: usize) -> Self {
        assert!(dim <= 64, "forms support dim <= 64");
        AlternatingForm {
            dim,
            grade,
            coeffs: BTreeMap::new(),
        }
    }

    /// Grade-0 form holding a scalar.
    pub fn constant(dim: usize, value: f64) -> Self {
        let mut f = Self::zero(dim, 0);
        f.insert_mask(0, value);
        f
    }

    /// The basis 1-form dual to coordinate `i` (0-based).
    pub fn basis_one_form(dim: usize, i: usize) -> Self {
        assert!(i < dim);
        let mut f = Self::zero(dim, 1);
        f.insert_mask(1u64 << i, 1.0);
        f
    }

    /// Build from (increasing multi-index, coefficient) terms.
    pub fn from_terms(dim: usize, grade: usize, terms: &[(&[usize], f64)]) -> Self {
        let mut f = Self::zero(dim, grade);
        for (idx, c) in terms {
            assert_eq!(idx.len(), grade);
            let mut mask = 0u64;
            for w in idx.windows(2) {
                assert!(w[0] < w[1], "multi-index must be strictly increasing");
            }
            for &i in *idx {
                assert!(i < dim);
                mask |= 1 << i;
            }
            f.insert_mask(mask, f.coeff_mask(mask) + c);
        }
        f
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn grade(&self) -> usize {
        self.grade
    }
    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff_mask(&self, mask: u64) -> f64 {
        self.coeffs.get(&mask).copied().unwrap_or(0.0)
    }

    /// Coefficient on a strictly increasing multi-index.
    pub fn coeff(&self, idx: &[usize]) -> f64 {
        let mut mask = 0u64;
        for &i in idx {
            mask |= 1 << i;
        }
        self.coeff_mask(mask)
    }

    pub fn terms(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.coeffs.iter().map(|(&m, &c)| (m, c))
    }

    fn insert_mask(&mut self, mask: u64, value: f64) {
        if value.abs() < tol::COEFF_PRUNE || self.grade > self.dim {
            self.coeffs.remove(&mask);
        } else {
            self.coeffs.insert(mask, value);
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut out = Self::zero(self.dim, self.grade);
        for (m, v) in self.terms() {
            out.insert_mask(m, v * c);
        }
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(CgbError::DimensionMismatch(self.dim, other.dim));
        }
        assert_eq!(self.grade, other.grade, "grade mismatch in add");
        let mut out = self.clone();
        for (m, v) in other.terms() {
            out.insert_mask(m, out.coeff_mask(m) + v);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-1.0))
    }

    pub fn norm_inf(&self) -> f64 {
        self.coeffs.values().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest coefficientwise difference against `other`.
    pub fn max_diff(&self, other: &Self) -> f64 {
        let mut d = 0.0f64;
        for (m, v) in self.terms() {
            d = d.max((v - other.coeff_mask(m)).abs());
        }
        for (m, v) in other.terms() {
            d = d.max((v - self.coeff_mask(m)).abs());
        }
        d
    }

    /// Exterior product. Bilinear, graded-anticommutative, zero when the
    /// combined grade exceeds the dimension.
    pub fn wedge(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(CgbError::DimensionMismatch(self.dim, other.dim));
        }
        let grade = self.grade + other.grade;
        let mut out = Self::zero(self.dim, grade);
        if grade > self.dim {
            return Ok(out);
        }
        for (ma, ca) in self.terms() {
            for (mb, cb) in other.terms() {
                if ma & mb != 0 {
                    continue;
                }
                let m = ma | mb;
                let s = shuffle_sign(ma, mb);
                out.insert_mask(m, out.coeff_mask(m) + s * ca * cb);
            }
        }
        Ok(out)
    }

    /// Evaluate on `grade` vectors of length `dim`. Multilinear and
    /// alternating; on an increasing basis tuple this returns the stored
    /// coefficient.
    pub fn evaluate(&self, vectors: &[Vec<f64>]) -> Result<f64> {
        if vectors.len() != self.grade {
            return Err(CgbError::ArityMismatch {
                grade: self.grade,
                given: vectors.len(),
            });
        }
        for v in vectors {
            if v.len() != self.dim {
                return Err(CgbError::DimensionMismatch(v.len(), self.dim));
            }
        }
        if self.grade == 0 {
            return Ok(self.coeff_mask(0));
        }
        let p = self.grade;
        let mut acc = 0.0;
        let mut minor = vec![0.0; p * p];
        for (mask, c) in self.terms() {
            let mut rows = [0usize; 64];
            let mut nrow = 0;
            let mut m = mask;
            while m != 0 {
                rows[nrow] = m.trailing_zeros() as usize;
                nrow += 1;
                m &= m - 1;
            }
            for (r, &row) in rows[..p].iter().enumerate() {
                for (col, v) in vectors.iter().enumerate() {
                    minor[p * r + col] = v[row];
                }
            }
            acc += c * det_f64(&minor, p);
        }
        Ok(acc)
    }
}

/// Skew-symmetric k x k matrix of grade-2 forms over a common dimension.
#[derive(Debug, Clone)]
pub struct TwoFormMatrix {
    size: usize,
    dim: usize,
    entries: Vec<AlternatingForm>,
}

impl TwoFormMatrix {
    /// Build from the strict upper triangle; the lower triangle and the zero
    /// diagonal are filled in by skew-symmetry.
    pub fn from_upper(size: usize, dim: usize, upper: &[AlternatingForm]) -> Result<Self> {
        assert_eq!(upper.len(), size * (size - 1) / 2);
        let zero = AlternatingForm::zero(dim, 2);
        let mut entries = vec![zero; size * size];
        let mut it = upper.iter();
        for i in 0..size {
            for j in (i + 1)..size {
                let w = it.next().unwrap();
                if w.dim() != dim {
                    return Err(CgbError::DimensionMismatch(w.dim(), dim));
                }
                assert_eq!(w.grade(), 2);
                entries[size * i + j] = w.clone();
                entries[size * j + i] = w.scale(-1.0);
            }
        }
        Ok(TwoFormMatrix {
            size,
            dim,
            entries,
        })
    }

    /// Build from a full matrix, rejecting skew-symmetry defects beyond
    /// `tol::SKEW_DEFECT`.
    pub fn from_full(size: usize, dim: usize, entries: Vec<AlternatingForm>) -> Result<Self> {
        assert_eq!(entries.len(), size * size);
        let mut defect = 0.0f64;
        for i in 0..size {
            defect = defect.max(entries[size * i + i].norm_inf());
            for j in (i + 1)..size {
                defect = defect.max(
                    entries[size * i + j]
                        .max_diff(&entries[size * j + i].scale(-1.0)),
                );
            }
        }
        if defect > tol::SKEW_DEFECT {
            return Err(CgbError::NotSkew(defect));
        }
        Ok(TwoFormMatrix {
            size,
            dim,
            entries,
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn entry(&self, i: usize, j: usize) -> &AlternatingForm {
        &self.entries[self.size * i + j]
    }
}

/// How to evaluate the Pfaffian permutation sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PfaffianMethod {
    /// Literal k!-term sum over the symmetric group. Oracle; k <= 8.
    Naive,
    /// Sum over perfect matchings, weighted so the total equals the naive sum.
    Matching,
    /// Dynamic programming over index subsets; default.
    SubsetDp,
}

pub(crate) fn permutation_sign(perm: &[usize]) -> f64 {
    let mut inv = 0usize;
    for i in 0..perm.len() {
        for j in (i + 1)..perm.len() {
            if perm[i] > perm[j] {
                inv += 1;
            }
        }
    }
    if inv % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn pfaffian_naive(omega: &TwoFormMatrix) -> Result<AlternatingForm> {
    let k = omega.size();
    let d = omega.dim();
    // Neumaier-compensated per-coefficient accumulation; the k! term count
    // makes plain summation lose a few digits.
    let mut sums: BTreeMap<u64, (f64, f64)> = BTreeMap::new();
    let mut perm: Vec<usize> = (0..k).collect();
    // Iterative permutation enumeration in lexicographic order.
    loop {
        let mut term = AlternatingForm::constant(d, permutation_sign(&perm));
        for pair in perm.chunks(2) {
            term = term.wedge(omega.entry(pair[0], pair[1]))?;
            if term.is_zero() {
                break;
            }
        }
        for (mask, v) in term.into_grade(k).coeffs {
            let slot = sums.entry(mask).or_insert((0.0, 0.0));
            let t = slot.0 + v;
            slot.1 += if slot.0.abs() >= v.abs() {
                (slot.0 - t) + v
            } else {
                (v - t) + slot.0
            };
            slot.0 = t;
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    let mut acc = AlternatingForm::zero(d, k);
    for (mask, (s, c)) in sums {
        acc.insert_mask(mask, s + c);
    }
    Ok(acc)
}

pub(crate) fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

impl AlternatingForm {
    /// Reinterpret a form as having the stated grade; used when a wedge chain
    /// collapsed to the zero form but the bookkeeping grade differs.
    pub(crate) fn into_grade(mut self, grade: usize) -> Self {
        self.grade = grade;
        if grade > self.dim {
            self.coeffs.clear();
        }
        self
    }
}

/// Signed sum over perfect matchings of the index set `mask`, recursing on
/// the lowest unmatched index. The sign factor counts elements between the
/// matched pair, matching the parity of the flattened permutation.
fn matching_sum(omega: &TwoFormMatrix, mask: u64, memo: &mut Vec<Option<AlternatingForm>>) -> Result<AlternatingForm> {
    let d = omega.dim();
    if mask == 0 {
        return Ok(AlternatingForm::constant(d, 1.0));
    }
    if let Some(f) = &memo[mask as usize] {
        return Ok(f.clone());
    }
    let i = mask.trailing_zeros() as usize;
    let grade = mask.count_ones() as usize; // 2-forms: grade of result
    let mut acc = AlternatingForm::zero(d, grade);
    let mut rest = mask & (mask - 1); // drop i
    while rest != 0 {
        let j = rest.trailing_zeros() as usize;
        rest &= rest - 1;
        let between = mask & ((1u64 << j) - 1) & !((1u64 << (i + 1)) - 1);
        let sign = if between.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        let sub = matching_sum(omega, mask & !(1 << i) & !(1 << j), memo)?;
        let term = omega.entry(i, j).wedge(&sub)?.scale(sign);
        acc = acc.add(&term.into_grade(grade))?;
    }
    memo[mask as usize] = Some(acc.clone());
    Ok(acc)
}

/// Multiplicity relating the matching sum to the naive permutation sum:
/// each matching arises from 2^(k/2) * (k/2)! permutations, all with the
/// same signed value because 2-forms commute under wedge.
fn matching_multiplicity(k: usize) -> f64 {
    let half = k / 2;
    let mut m = 1.0;
    for i in 1..=half {
        m *= 2.0 * i as f64;
    }
    m
}

fn pfaffian_matching(omega: &TwoFormMatrix, memoize: bool) -> Result<AlternatingForm> {
    let k = omega.size();
    let full = (1u64 << k) - 1;
    let sum = if memoize {
        let mut memo: Vec<Option<AlternatingForm>> = vec![None; 1usize << k];
        matching_sum(omega, full, &mut memo)?
    } else {
        matching_sum_nomemo(omega, full)?
    };
    Ok(sum.scale(matching_multiplicity(k)))
}

fn matching_sum_nomemo(omega: &TwoFormMatrix, mask: u64) -> Result<AlternatingForm> {
    let d = omega.dim();
    if mask == 0 {
        return Ok(AlternatingForm::constant(d, 1.0));
    }
    let i = mask.trailing_zeros() as usize;
    let grade = mask.count_ones() as usize;
    let mut acc = AlternatingForm::zero(d, grade);
    let mut rest = mask & (mask - 1);
    while rest != 0 {
        let j = rest.trailing_zeros() as usize;
        rest &= rest - 1;
        let between = mask & ((1u64 << j) - 1) & !((1u64 << (i + 1)) - 1);
        let sign = if between.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        let sub = matching_sum_nomemo(omega, mask & !(1 << i) & !(1 << j))?;
        let term = omega.entry(i, j).wedge(&sub)?.scale(sign);
        acc = acc.add(&term.into_grade(grade))?;
    }
    Ok(acc)
}

/// The Pfaffian k-form: the signed sum over S_k of wedge chains
/// Omega_{s(1)s(2)} ^ ... ^ Omega_{s(k-1)s(k)}, WITHOUT the 1/k! factor.
/// All three methods agree coefficientwise.
pub fn pfaffian_form(omega: &TwoFormMatrix, method: PfaffianMethod) -> Result<AlternatingForm> {
    let k = omega.size();
    if k % 2 != 0 {
        return Err(CgbError::OddSize(k));
    }
    // Validate skew-symmetry regardless of construction path.
    let mut defect = 0.0f64;
    for i in 0..k {
        defect = defect.max(omega.entry(i, i).norm_inf());
        for j in (i + 1)..k {
            defect = defect.max(omega.entry(i, j).max_diff(&omega.entry(j, i).scale(-1.0)));
        }
    }
    if defect > tol::SKEW_DEFECT {
        return Err(CgbError::NotSkew(defect));
    }
    match method {
        PfaffianMethod::Naive => {
            if k > 8 {
                return Err(CgbError::InvalidArgument(format!(
                    "naive permutation sum is infeasible for k = {k}"
                )));
            }
            pfaffian_naive(omega)
        }
        PfaffianMethod::Matching => pfaffian_matching(omega, false),
        PfaffianMethod::SubsetDp => pfaffian_matching(omega, true),
    }
}
