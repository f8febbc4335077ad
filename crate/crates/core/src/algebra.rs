//! Compact classical Lie algebras as structure-constant objects.
//!
//! Basis conventions (all bases are orthogonal for the Frobenius inner
//! product of their real realizations):
//!
//! * `so(n)`: `E_ij − E_ji` for `i < j` in lexicographic order.
//! * `su(n)`: for each pair `i < j` (lexicographic) the two elements
//!   `E_ij − E_ji` and `i(E_ij + E_ji)`, followed by the diagonal elements
//!   `i·sqrt(2/(k(k+1)))·diag(1,…,1,−k,0,…)` for `k = 1..n−1`.
//! * `sp(n)`: complex `2n×2n` matrices `[[A, −B̄], [B, Ā]]` with `A ∈ u(n)` and
//!   `B` complex symmetric. First the `A` part (pairs `i < j` as for `su`,
//!   then `i√2·E_kk`), then the `B` part (pairs `i ≤ j`, real then imaginary,
//!   with `√2·E_ii` on the diagonal).
//!
//! Complex matrices `A + iB` are realified as `[[A, −B], [B, A]]`, so every
//! realization is a real skew-symmetric matrix and multiplication by `i`
//! becomes `J = [[0, −I], [I, 0]]`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::{Real, Tolerances};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Su,
    So,
    Sp,
}

impl Family {
    pub fn dim(self, n: usize) -> usize {
        match self {
            Family::Su => n * n - 1,
            Family::So => n * (n - 1) / 2,
            Family::Sp => n * (2 * n + 1),
        }
    }

    pub fn min_rank(self) -> usize {
        match self {
            Family::So => 3,
            Family::Su | Family::Sp => 2,
        }
    }

    /// Size of the real defining realization.
    pub fn real_size(self, n: usize) -> usize {
        match self {
            Family::So => n,
            Family::Su => 2 * n,
            Family::Sp => 4 * n,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Su => "su",
            Family::So => "so",
            Family::Sp => "sp",
        })
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "su" => Ok(Family::Su),
            "so" | "spin" => Ok(Family::So),
            "sp" => Ok(Family::Sp),
            other => Err(Error::UnsupportedFamily(other.to_string())),
        }
    }
}

/// Element of an algebra, in coordinates relative to its ordered basis.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraElement<T: Real> {
    pub coords: DVector<T>,
}

impl<T: Real> AlgebraElement<T> {
    pub fn new(coords: DVector<T>) -> Self {
        Self { coords }
    }

    pub fn zero(dim: usize) -> Self {
        Self { coords: DVector::zeros(dim) }
    }

    pub fn basis(dim: usize, i: usize) -> Self {
        let mut coords = DVector::zeros(dim);
        coords[i] = T::one();
        Self { coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

/// Sparse structure tensor stored per ordered pair `(i, j)`:
/// `[e_i, e_j] = Σ_k C_ij^k e_k`.
#[derive(Debug, Clone)]
pub struct StructureConstants<T> {
    dim: usize,
    offsets: Vec<usize>,
    entries: Vec<(usize, T)>,
}

impl<T: Real> StructureConstants<T> {
    fn from_pairs(dim: usize, mut pairs: Vec<(usize, usize, Vec<(usize, T)>)>) -> Self {
        pairs.sort_by_key(|(i, j, _)| i * dim + j);
        let mut offsets = vec![0usize; dim * dim + 1];
        let mut entries = Vec::new();
        let mut cursor = 0usize;
        for (i, j, list) in pairs {
            let slot = i * dim + j;
            while cursor <= slot {
                offsets[cursor] = entries.len();
                cursor += 1;
            }
            entries.extend(list);
        }
        while cursor <= dim * dim {
            offsets[cursor] = entries.len();
            cursor += 1;
        }
        Self { dim, offsets, entries }
    }

    /// Nonzero components of `[e_i, e_j]`.
    #[inline]
    pub fn pair(&self, i: usize, j: usize) -> &[(usize, T)] {
        let slot = i * self.dim + j;
        &self.entries[self.offsets[slot]..self.offsets[slot + 1]]
    }

    /// `C_ij^k` as a dense lookup.
    pub fn get(&self, i: usize, j: usize, k: usize) -> T {
        self.pair(i, j)
            .iter()
            .find(|(kk, _)| *kk == k)
            .map(|(_, v)| *v)
            .unwrap_or_else(T::zero)
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn max_abs(&self) -> T {
        self.entries.iter().fold(T::zero(), |a, (_, v)| a.max(v.abs()))
    }
}

type Sparse<T> = Vec<(usize, usize, T)>;

/// A compact real Lie algebra with a faithful matrix realization.
#[derive(Debug, Clone)]
pub struct LieAlgebra<T: Real> {
    pub family: Family,
    pub n: usize,
    pub dim: usize,
    /// Real skew-symmetric realizations of the basis.
    pub basis_mats: Vec<DMatrix<T>>,
    pub structure: StructureConstants<T>,
    /// Minus Killing form, `K_ij = −tr(ad e_i ∘ ad e_j)`.
    pub killing: DMatrix<T>,
    pub tol: Tolerances<T>,
    sparse_mats: Vec<Sparse<T>>,
    norms2: Vec<T>,
}

impl<T: Real> LieAlgebra<T> {
    pub fn label(&self) -> String {
        format!("{}({})", self.family, self.n)
    }

    /// Size of the real realization matrices.
    pub fn mat_size(&self) -> usize {
        self.family.real_size(self.n)
    }

    pub fn check_dim(&self, v: &DVector<T>) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::DimMismatch { expected: self.dim, got: v.len() });
        }
        Ok(())
    }

    /// Raw bracket on coordinate vectors.
    pub fn bracket_coords(&self, x: &DVector<T>, y: &DVector<T>) -> DVector<T> {
        let mut out = DVector::zeros(self.dim);
        let ys: Vec<(usize, T)> =
            y.iter().enumerate().filter(|(_, v)| **v != T::zero()).map(|(j, v)| (j, *v)).collect();
        for (i, &xi) in x.iter().enumerate() {
            if xi == T::zero() {
                continue;
            }
            for &(j, yj) in &ys {
                let w = xi * yj;
                for &(k, c) in self.structure.pair(i, j) {
                    out[k] += w * c;
                }
            }
        }
        out
    }

    pub fn bracket(&self, x: &AlgebraElement<T>, y: &AlgebraElement<T>) -> Result<AlgebraElement<T>> {
        self.check_dim(&x.coords)?;
        self.check_dim(&y.coords)?;
        Ok(AlgebraElement::new(self.bracket_coords(&x.coords, &y.coords)))
    }

    pub fn minus_killing(&self, x: &AlgebraElement<T>, y: &AlgebraElement<T>) -> Result<T> {
        self.check_dim(&x.coords)?;
        self.check_dim(&y.coords)?;
        Ok(linalg::inner(&self.killing, &x.coords, &y.coords))
    }

    /// B-orthonormal basis of the span of `subspace_basis` (Gram–Schmidt order).
    pub fn orthonormalize(&self, subspace_basis: &[AlgebraElement<T>]) -> Result<Vec<AlgebraElement<T>>> {
        let mut m = DMatrix::zeros(self.dim, subspace_basis.len());
        for (j, v) in subspace_basis.iter().enumerate() {
            self.check_dim(&v.coords)?;
            m.set_column(j, &v.coords);
        }
        let q = linalg::gram_schmidt(&m, Some(&self.killing), self.tol.rank)?;
        Ok((0..q.ncols()).map(|j| AlgebraElement::new(q.column(j).into_owned())).collect())
    }

    /// Matrix of `ad e_i` in the basis: `(ad e_i)_{kl} = C_il^k`.
    pub fn ad_matrix(&self, i: usize) -> DMatrix<T> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for l in 0..self.dim {
            for &(k, c) in self.structure.pair(i, l) {
                m[(k, l)] = c;
            }
        }
        m
    }

    /// Matrix of `ad X`.
    pub fn ad_of(&self, x: &DVector<T>) -> DMatrix<T> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (i, &xi) in x.iter().enumerate() {
            if xi == T::zero() {
                continue;
            }
            for l in 0..self.dim {
                for &(k, c) in self.structure.pair(i, l) {
                    m[(k, l)] += xi * c;
                }
            }
        }
        m
    }

    /// Realization of an element: `Σ x_i · basis_mats[i]`.
    pub fn realize(&self, x: &DVector<T>) -> DMatrix<T> {
        let s = self.mat_size();
        let mut m = DMatrix::zeros(s, s);
        for (i, &xi) in x.iter().enumerate() {
            if xi == T::zero() {
                continue;
            }
            for &(r, c, v) in &self.sparse_mats[i] {
                m[(r, c)] += xi * v;
            }
        }
        m
    }

    /// Coordinates of a matrix in the realization basis, with the relative
    /// residual of the reconstruction (0 when the matrix lies in the algebra).
    pub fn coords_of_matrix(&self, m: &DMatrix<T>) -> (DVector<T>, T) {
        let mut coords = DVector::zeros(self.dim);
        for (k, sparse) in self.sparse_mats.iter().enumerate() {
            let mut acc = T::zero();
            for &(r, c, v) in sparse {
                acc += v * m[(r, c)];
            }
            coords[k] = acc / self.norms2[k];
        }
        let back = self.realize(&coords);
        let scale = m.norm();
        let residual = if scale == T::zero() { (back - m).norm() } else { (back - m).norm() / scale };
        (coords, residual)
    }

    /// Scale used to make identity residuals relative: `max |C|²`.
    fn structure_scale(&self) -> T {
        let s = self.structure.max_abs();
        if s == T::zero() {
            T::one()
        } else {
            s * s
        }
    }

    /// Largest Jacobi defect over basis triples, relative to `max |C|²`.
    pub fn jacobi_residual(&self) -> T {
        let d = self.dim;
        let mut worst = T::zero();
        for i in 0..d {
            let ei = AlgebraElement::<T>::basis(d, i).coords;
            for j in (i + 1)..d {
                let ej = AlgebraElement::<T>::basis(d, j).coords;
                let bij = self.bracket_coords(&ei, &ej);
                for k in (j + 1)..d {
                    let ek = AlgebraElement::<T>::basis(d, k).coords;
                    let bjk = self.bracket_coords(&ej, &ek);
                    let bki = self.bracket_coords(&ek, &ei);
                    let total = self.bracket_coords(&ei, &bjk)
                        + self.bracket_coords(&ej, &bki)
                        + self.bracket_coords(&ek, &bij);
                    worst = worst.max(linalg::max_abs_vec(&total));
                }
            }
        }
        worst / self.structure_scale()
    }

    /// Largest `|C_ij^k + C_ji^k|`, relative.
    pub fn antisymmetry_residual(&self) -> T {
        let d = self.dim;
        let mut worst = T::zero();
        for i in 0..d {
            for j in 0..d {
                for &(k, c) in self.structure.pair(i, j) {
                    worst = worst.max((c + self.structure.get(j, i, k)).abs());
                }
            }
        }
        worst / self.structure.max_abs().max(T::lit(1e-300_f64.max(f32::MIN_POSITIVE as f64)))
    }

    /// `max |K([e_z, e_x], e_y) + K(e_x, [e_z, e_y])|` over basis triples,
    /// relative to `max|K|·max|C|`.
    pub fn ad_invariance_residual(&self) -> T {
        let d = self.dim;
        let mut worst = T::zero();
        for z in 0..d {
            let adz = self.ad_matrix(z);
            // K·ad z + (ad z)ᵀ·K must vanish.
            let m = &self.killing * &adz + adz.transpose() * &self.killing;
            worst = worst.max(linalg::max_abs(&m));
        }
        worst / (linalg::max_abs(&self.killing) * self.structure.max_abs()).max(T::lit(1e-300_f64.max(f32::MIN_POSITIVE as f64)))
    }

    /// Largest mismatch between matrix commutators of realizations and the
    /// structure-tensor expansion, relative to the operands.
    pub fn realization_residual(&self) -> T {
        let d = self.dim;
        let mut worst = T::zero();
        for i in 0..d {
            for j in (i + 1)..d {
                let comm = linalg::commutator(&self.basis_mats[i], &self.basis_mats[j]);
                let mut expanded = DMatrix::zeros(comm.nrows(), comm.ncols());
                for &(k, c) in self.structure.pair(i, j) {
                    expanded += &self.basis_mats[k] * c;
                }
                let scale = linalg::max_abs(&self.basis_mats[i]) * linalg::max_abs(&self.basis_mats[j]);
                worst = worst.max(linalg::max_abs(&(comm - expanded)) / scale);
            }
        }
        worst
    }

    /// Builds the algebra from an orthogonal family of real skew-symmetric
    /// matrices closed under commutators.
    pub fn from_realization(family: Family, n: usize, mats: Vec<DMatrix<T>>, tol: Tolerances<T>) -> Result<Self> {
        let dim = mats.len();
        let size = mats.first().map(|m| m.nrows()).unwrap_or(0);
        let sparse_mats: Vec<Sparse<T>> = mats.iter().map(to_sparse).collect();
        let norms2: Vec<T> = sparse_mats.iter().map(|s| s.iter().fold(T::zero(), |a, &(_, _, v)| a + v * v)).collect();

        // entry (r, c) -> basis elements touching it
        let mut touch: Vec<Vec<(usize, T)>> = vec![Vec::new(); size * size];
        for (k, s) in sparse_mats.iter().enumerate() {
            for &(r, c, v) in s {
                touch[r * size + c].push((k, v / norms2[k]));
            }
        }
        let rows: Vec<Vec<Vec<(usize, T)>>> = sparse_mats
            .iter()
            .map(|s| {
                let mut by_row = vec![Vec::new(); size];
                for &(r, c, v) in s {
                    by_row[r].push((c, v));
                }
                by_row
            })
            .collect();

        let cut = T::epsilon() * T::lit(64.0);
        let mut pairs = Vec::new();
        let mut acc: std::collections::HashMap<usize, T> = std::collections::HashMap::new();
        for i in 0..dim {
            for j in (i + 1)..dim {
                acc.clear();
                // A·B − B·A with A = mats[i], B = mats[j]
                for &(r, c, a) in &sparse_mats[i] {
                    for &(s, b) in &rows[j][c] {
                        *acc.entry(r * size + s).or_insert(T::zero()) += a * b;
                    }
                }
                for &(r, c, b) in &sparse_mats[j] {
                    for &(s, a) in &rows[i][c] {
                        *acc.entry(r * size + s).or_insert(T::zero()) -= b * a;
                    }
                }
                let mut coords: std::collections::BTreeMap<usize, T> = std::collections::BTreeMap::new();
                for (&cell, &v) in acc.iter() {
                    if v == T::zero() {
                        continue;
                    }
                    for &(k, w) in &touch[cell] {
                        *coords.entry(k).or_insert(T::zero()) += v * w;
                    }
                }
                let list: Vec<(usize, T)> = coords.into_iter().filter(|(_, v)| v.abs() > cut).collect();
                if !list.is_empty() {
                    let neg: Vec<(usize, T)> = list.iter().map(|&(k, v)| (k, -v)).collect();
                    pairs.push((i, j, list));
                    pairs.push((j, i, neg));
                }
            }
        }
        let structure = StructureConstants::from_pairs(dim, pairs);
        let killing = killing_from_structure(&structure, dim);
        Ok(Self { family, n, dim, basis_mats: mats, structure, killing, tol, sparse_mats, norms2 })
    }
}

fn to_sparse<T: Real>(m: &DMatrix<T>) -> Sparse<T> {
    let mut out = Vec::new();
    for c in 0..m.ncols() {
        for r in 0..m.nrows() {
            let v = m[(r, c)];
            if v != T::zero() {
                out.push((r, c, v));
            }
        }
    }
    out
}

/// `K_ij = −Σ_{k,l} C_il^k C_jk^l`, i.e. `−tr(ad e_i ∘ ad e_j)`.
fn killing_from_structure<T: Real>(c: &StructureConstants<T>, d: usize) -> DMatrix<T> {
    // index[(k, l)] = list of (j, C_jk^l)
    let mut counts = vec![0usize; d * d + 1];
    for j in 0..d {
        for k in 0..d {
            for &(l, _) in c.pair(j, k) {
                counts[k * d + l + 1] += 1;
            }
        }
    }
    for s in 1..counts.len() {
        counts[s] += counts[s - 1];
    }
    let mut fill = counts.clone();
    let mut index = vec![(0usize, T::zero()); counts[d * d]];
    for j in 0..d {
        for k in 0..d {
            for &(l, v) in c.pair(j, k) {
                let slot = &mut fill[k * d + l];
                index[*slot] = (j, v);
                *slot += 1;
            }
        }
    }
    let mut kil = DMatrix::zeros(d, d);
    for i in 0..d {
        for l in 0..d {
            for &(k, c1) in c.pair(i, l) {
                for &(j, c2) in &index[counts[k * d + l]..counts[k * d + l + 1]] {
                    kil[(i, j)] -= c1 * c2;
                }
            }
        }
    }
    kil
}

/// Realification `A + iB ↦ [[A, −B], [B, A]]`.
pub fn realify<T: Real>(re: &DMatrix<T>, im: &DMatrix<T>) -> DMatrix<T> {
    let p = re.nrows();
    let mut m = DMatrix::zeros(2 * p, 2 * p);
    m.view_mut((0, 0), (p, p)).copy_from(re);
    m.view_mut((p, p), (p, p)).copy_from(re);
    m.view_mut((p, 0), (p, p)).copy_from(im);
    m.view_mut((0, p), (p, p)).copy_from(&(-im));
    m
}

/// Inverse of [`realify`] on matrices that commute with `J`.
pub fn complex_parts<T: Real>(m: &DMatrix<T>) -> (DMatrix<T>, DMatrix<T>) {
    let p = m.nrows() / 2;
    (m.view((0, 0), (p, p)).into_owned(), m.view((p, 0), (p, p)).into_owned())
}

/// The complex structure `J = [[0, −I], [I, 0]]` on `ℝ^{2p}`.
pub fn complex_structure<T: Real>(p: usize) -> DMatrix<T> {
    realify(&DMatrix::zeros(p, p), &DMatrix::identity(p, p))
}

fn unit(n: usize, i: usize, j: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    m[(i, j)] = 1.0;
    m
}

/// Complex `u(n)`-type basis without (`traceless = true`) or with the full
/// diagonal.
fn unitary_basis(n: usize, traceless: bool) -> Vec<(DMatrix<f64>, DMatrix<f64>)> {
    let zero = DMatrix::zeros(n, n);
    let mut out = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            out.push((unit(n, i, j) - unit(n, j, i), zero.clone()));
            out.push((zero.clone(), unit(n, i, j) + unit(n, j, i)));
        }
    }
    if traceless {
        for k in 1..n {
            let kf = k as f64;
            let s = (2.0 / (kf * (kf + 1.0))).sqrt();
            let mut d = DMatrix::zeros(n, n);
            for l in 0..k {
                d[(l, l)] = s;
            }
            d[(k, k)] = -kf * s;
            out.push((zero.clone(), d));
        }
    } else {
        for k in 0..n {
            out.push((zero.clone(), unit(n, k, k) * 2f64.sqrt()));
        }
    }
    out
}

fn classical_mats(family: Family, n: usize) -> Vec<DMatrix<f64>> {
    match family {
        Family::So => {
            let mut out = Vec::new();
            for i in 0..n {
                for j in (i + 1)..n {
                    out.push(unit(n, i, j) - unit(n, j, i));
                }
            }
            out
        }
        Family::Su => unitary_basis(n, true).iter().map(|(re, im)| realify(re, im)).collect(),
        Family::Sp => {
            let zero = DMatrix::<f64>::zeros(n, n);
            let assemble = |a_re: &DMatrix<f64>, a_im: &DMatrix<f64>, b_re: &DMatrix<f64>, b_im: &DMatrix<f64>| {
                let mut re = DMatrix::zeros(2 * n, 2 * n);
                let mut im = DMatrix::zeros(2 * n, 2 * n);
                re.view_mut((0, 0), (n, n)).copy_from(a_re);
                im.view_mut((0, 0), (n, n)).copy_from(a_im);
                re.view_mut((0, n), (n, n)).copy_from(&(-b_re));
                im.view_mut((0, n), (n, n)).copy_from(b_im);
                re.view_mut((n, 0), (n, n)).copy_from(b_re);
                im.view_mut((n, 0), (n, n)).copy_from(b_im);
                re.view_mut((n, n), (n, n)).copy_from(a_re);
                im.view_mut((n, n), (n, n)).copy_from(&(-a_im));
                realify(&re, &im)
            };
            let mut out = Vec::new();
            for (re, im) in unitary_basis(n, false) {
                out.push(assemble(&re, &im, &zero, &zero));
            }
            for i in 0..n {
                for j in i..n {
                    let sym = if i == j { unit(n, i, i) * 2f64.sqrt() } else { unit(n, i, j) + unit(n, j, i) };
                    out.push(assemble(&zero, &zero, &sym, &zero));
                    out.push(assemble(&zero, &zero, &zero, &sym));
                }
            }
            out
        }
    }
}

/// Builds `su(n)`, `so(n)` or `sp(n)` with default tolerances.
pub fn build_classical<T: Real>(family: Family, n: usize) -> Result<LieAlgebra<T>> {
    build_classical_with(family, n, Tolerances::default())
}

pub fn build_classical_with<T: Real>(family: Family, n: usize, tol: Tolerances<T>) -> Result<LieAlgebra<T>> {
    if n < family.min_rank() {
        return Err(Error::RankTooSmall { family: family.to_string(), n, min: family.min_rank() });
    }
    let mats = classical_mats(family, n).into_iter().map(|m| m.map(T::lit)).collect();
    LieAlgebra::from_realization(family, n, mats, tol)
}

/// Parses a family name and builds the algebra; exceptional names are rejected.
pub fn build_named<T: Real>(family: &str, n: usize) -> Result<LieAlgebra<T>> {
    build_classical(family.parse()?, n)
}
