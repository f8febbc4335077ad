//! Homogeneous spaces `(G₁×G₂)/ΔK` at the Lie-algebra level.
//!
//! The ambient algebra is `g = g₁ ⊕ g₂` with `B = B₁ ⊕ B₂`. Coordinates of an
//! element of `g` are the `g₁` coordinates followed by the `g₂` coordinates.
//! The adapted basis is B-orthonormal and ordered `[h | m₀ | m₁ | m₂]`.

use std::ops::Range;
use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::algebra::{complex_parts, realify, AlgebraElement, Family, LieAlgebra};
use crate::error::{Error, Result};
use crate::linalg;
use crate::representations::{RepTree, Representation};
use crate::scalar::Real;

/// Injective homomorphism `k → g`, stored as a `dim g × dim k` matrix.
#[derive(Debug, Clone)]
pub struct Embedding<T: Real> {
    pub source: Arc<LieAlgebra<T>>,
    pub target: Arc<LieAlgebra<T>>,
    pub map: DMatrix<T>,
    pub label: String,
}

impl<T: Real> Embedding<T> {
    /// Validates the homomorphism property and injectivity.
    pub fn new(source: Arc<LieAlgebra<T>>, target: Arc<LieAlgebra<T>>, map: DMatrix<T>, label: String) -> Result<Self> {
        if map.shape() != (target.dim, source.dim) {
            return Err(Error::DimMismatch { expected: target.dim * source.dim, got: map.len() });
        }
        let emb = Self { source, target, map, label };
        let tol = emb.target.tol.rank;
        let r = linalg::rank(&emb.map, tol);
        if r < emb.source.dim {
            return Err(Error::NotAnEmbedding(format!("rank {r} < {}", emb.source.dim)));
        }
        let res = emb.homomorphism_residual();
        if res.as_f64() > 1e-9_f64.max(emb.target.tol.identity.as_f64() * 10.0) {
            return Err(Error::NotAnEmbedding(format!("homomorphism residual {:e}", res.as_f64())));
        }
        Ok(emb)
    }

    pub fn identity(alg: &Arc<LieAlgebra<T>>) -> Self {
        Self {
            source: Arc::clone(alg),
            target: Arc::clone(alg),
            map: DMatrix::identity(alg.dim, alg.dim),
            label: "identity".into(),
        }
    }

    pub fn apply(&self, z: &DVector<T>) -> DVector<T> {
        &self.map * z
    }

    /// `max ‖φ([e_i,e_j]) − [φe_i, φe_j]‖_∞` over basis pairs, relative to the
    /// largest image entry squared.
    pub fn homomorphism_residual(&self) -> T {
        let d = self.source.dim;
        let cols: Vec<DVector<T>> = (0..d).map(|i| self.map.column(i).into_owned()).collect();
        let scale = linalg::max_abs(&self.map).max(T::one());
        let cs = self.source.structure.max_abs().max(T::one());
        let mut worst = T::zero();
        for i in 0..d {
            for j in (i + 1)..d {
                let mut lhs = DVector::zeros(self.target.dim);
                for &(k, c) in self.source.structure.pair(i, j) {
                    lhs.axpy(c, &cols[k], T::one());
                }
                let rhs = self.target.bracket_coords(&cols[i], &cols[j]);
                worst = worst.max(linalg::max_abs_vec(&(lhs - rhs)));
            }
        }
        worst / (scale * scale * cs)
    }
}

fn skew_check<T: Real>(rep: &Representation<T>) -> Result<()> {
    for (index, m) in rep.operators.iter().enumerate() {
        let scale = linalg::max_abs(m).max(T::lit(1e-300));
        let r = linalg::max_abs(&(m + m.transpose())) / scale;
        if r > rep.algebra.tol.identity {
            return Err(Error::NotSkewSymmetric { index, residual: r.as_f64() });
        }
    }
    Ok(())
}

/// Embedding of the acting algebra into `so(module_dim)` through `rep`.
pub fn embedding_from_rep<T: Real>(rep: &Representation<T>) -> Result<Embedding<T>> {
    skew_check(rep)?;
    let target = Arc::new(crate::algebra::build_classical_with(Family::So, rep.module_dim, rep.algebra.tol)?);
    embedding_into(rep, &target)
}

/// Orthonormal basis `[u_1..u_m, Ju_1..Ju_m]` adapted to a complex structure.
fn complex_frame<T: Real>(j: &DMatrix<T>) -> DMatrix<T> {
    let n = j.nrows();
    let m = n / 2;
    let mut us: Vec<DVector<T>> = Vec::new();
    let threshold = T::lit(0.25) / T::from_usize(n).unwrap().sqrt();
    for i in 0..n {
        if us.len() == m {
            break;
        }
        let mut v = DVector::zeros(n);
        v[i] = T::one();
        for _ in 0..2 {
            for u in &us {
                let ju = j * u;
                let a = u.dot(&v);
                let b = ju.dot(&v);
                v.axpy(-a, u, T::one());
                v.axpy(-b, &ju, T::one());
            }
        }
        let norm = v.norm();
        if norm > threshold {
            us.push(v / norm);
        }
    }
    let mut q = DMatrix::zeros(n, n);
    for (k, u) in us.iter().enumerate() {
        q.set_column(k, u);
        q.set_column(m + k, &(j * u));
    }
    q
}

/// Embedding through `rep` into a given `so(N)` or `su(N)` target. A `su`
/// target needs a complex structure on the carrier of real dimension `2N`.
pub fn embedding_into<T: Real>(rep: &Representation<T>, target: &Arc<LieAlgebra<T>>) -> Result<Embedding<T>> {
    skew_check(rep)?;
    let mats: Vec<DMatrix<T>> = match target.family {
        Family::So => {
            if target.n != rep.module_dim {
                return Err(Error::DimMismatch { expected: target.n, got: rep.module_dim });
            }
            rep.operators.clone()
        }
        Family::Su => {
            let j = rep.complex_structure.as_ref().ok_or_else(|| Error::NotComplex(target.label()))?;
            if 2 * target.n != rep.module_dim {
                return Err(Error::DimMismatch { expected: 2 * target.n, got: rep.module_dim });
            }
            let q = complex_frame(j);
            rep.operators.iter().map(|m| q.transpose() * m * &q).collect()
        }
        Family::Sp => {
            return Err(Error::Spec(format!("representation embeddings into {} are not supported", target.label())))
        }
    };
    let mut map = DMatrix::zeros(target.dim, rep.algebra.dim);
    for (i, m) in mats.iter().enumerate() {
        let (coords, res) = target.coords_of_matrix(m);
        if res > target.tol.rank.sqrt() {
            return Err(Error::NotAnEmbedding(format!(
                "image of basis element {i} leaves {} (residual {:e})",
                target.label(),
                res.as_f64()
            )));
        }
        map.set_column(i, &coords);
    }
    Embedding::new(Arc::clone(&rep.algebra), Arc::clone(target), map, format!("rep:{}", rep.label))
}

/// Complex `k×k` form of a basis element of `so`, `su` or `sp`.
fn complex_form<T: Real>(alg: &LieAlgebra<T>, i: usize) -> (DMatrix<T>, DMatrix<T>) {
    let m = &alg.basis_mats[i];
    match alg.family {
        Family::So => (m.clone(), DMatrix::zeros(m.nrows(), m.ncols())),
        Family::Su | Family::Sp => complex_parts(m),
    }
}

fn pad<T: Real>(m: &DMatrix<T>, n: usize, offset: usize) -> DMatrix<T> {
    let mut out = DMatrix::zeros(n, n);
    out.view_mut((offset, offset), m.shape()).copy_from(m);
    out
}

/// Block embedding of the natural realization: `so(k) ⊂ so(N)`, `so/su(k) ⊂
/// su(N)`, `so/su(k) ⊂ sp(N)` via `C ↦ diag(C, C̄)`, `sp(k) ⊂ sp(N)`, and
/// realified `su/sp` into `so`.
pub fn defining_block<T: Real>(source: &Arc<LieAlgebra<T>>, target: &Arc<LieAlgebra<T>>) -> Result<Embedding<T>> {
    let too_big = |need: usize, have: usize| Error::Spec(format!(
        "{} does not fit into {} ({need} > {have})",
        source.label(),
        target.label()
    ));
    let mut mats = Vec::with_capacity(source.dim);
    for i in 0..source.dim {
        let m = match target.family {
            Family::So => {
                let real = &source.basis_mats[i];
                if real.nrows() > target.n {
                    return Err(too_big(real.nrows(), target.n));
                }
                pad(real, target.n, 0)
            }
            Family::Su => {
                let (re, im) = complex_form(source, i);
                if re.nrows() > target.n {
                    return Err(too_big(re.nrows(), target.n));
                }
                realify(&pad(&re, target.n, 0), &pad(&im, target.n, 0))
            }
            Family::Sp => {
                let nn = target.n;
                let (re, im) = complex_form(source, i);
                let mut tre = DMatrix::zeros(2 * nn, 2 * nn);
                let mut tim = DMatrix::zeros(2 * nn, 2 * nn);
                if source.family == Family::Sp {
                    let k = source.n;
                    if k > nn {
                        return Err(too_big(k, nn));
                    }
                    for (r0, c0, tr, tc) in [(0, 0, 0, 0), (0, k, 0, nn), (k, 0, nn, 0), (k, k, nn, nn)] {
                        tre.view_mut((tr, tc), (k, k)).copy_from(&re.view((r0, c0), (k, k)));
                        tim.view_mut((tr, tc), (k, k)).copy_from(&im.view((r0, c0), (k, k)));
                    }
                } else {
                    let k = re.nrows();
                    if k > nn {
                        return Err(too_big(k, nn));
                    }
                    tre.view_mut((0, 0), (k, k)).copy_from(&re);
                    tim.view_mut((0, 0), (k, k)).copy_from(&im);
                    tre.view_mut((nn, nn), (k, k)).copy_from(&re);
                    tim.view_mut((nn, nn), (k, k)).copy_from(&(-&im));
                }
                realify(&tre, &tim)
            }
        };
        mats.push(m);
    }
    let mut map = DMatrix::zeros(target.dim, source.dim);
    for (i, m) in mats.iter().enumerate() {
        let (coords, res) = target.coords_of_matrix(m);
        if res > target.tol.rank.sqrt() {
            return Err(Error::NotAnEmbedding(format!(
                "block image of basis element {i} leaves {} (residual {:e})",
                target.label(),
                res.as_f64()
            )));
        }
        map.set_column(i, &coords);
    }
    Embedding::new(Arc::clone(source), Arc::clone(target), map, "defining-block".into())
}

/// The constant `c` with `B_k = c · B_g|_k`.
pub fn killing_ratio<T: Real>(emb: &Embedding<T>) -> Result<T> {
    let kk = &emb.source.killing;
    let pulled = emb.map.transpose() * &emb.target.killing * &emb.map;
    let d = emb.source.dim;
    let mut ratios = Vec::with_capacity(d);
    for i in 0..d {
        ratios.push(kk[(i, i)] / pulled[(i, i)]);
    }
    let mean = ratios.iter().fold(T::zero(), |a, &r| a + r) / T::from_usize(d).unwrap();
    let mut spread = ratios.iter().fold(T::zero(), |a, &r| a.max((r - mean).abs())) / mean.abs();
    // off-diagonal entries must scale by the same constant
    let off = linalg::max_abs(&(kk - &pulled * mean)) / linalg::max_abs(kk);
    spread = spread.max(off);
    if !(mean > T::zero()) || spread > emb.source.tol.ratio_spread {
        return Err(Error::NonConstantRatio { spread: spread.as_f64() });
    }
    Ok(mean)
}

/// Block of the adapted basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Block {
    H,
    M0,
    M1,
    M2,
}

impl Block {
    pub const ALL: [Block; 4] = [Block::H, Block::M0, Block::M1, Block::M2];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockDims {
    pub h: usize,
    pub m0: usize,
    pub m1: usize,
    pub m2: usize,
}

/// Numerical checks of the splitting.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InvariantReport {
    /// `max |QᵀBQ − I|`.
    pub gram_residual: f64,
    /// `max` projection of `[h, m_j]` outside `m_j`.
    pub bracket_residual: f64,
    /// `max |B_i(k, p_i)|`.
    pub orthocomplement_residual: f64,
    /// `max |B((Z,Z), (W, −(c₂/c₁)W))|` on basis elements.
    pub slope_residual: f64,
}

impl InvariantReport {
    pub fn max(&self) -> f64 {
        self.gram_residual
            .max(self.bracket_residual)
            .max(self.orthocomplement_residual)
            .max(self.slope_residual)
    }
}

#[derive(Debug)]
pub struct ReductiveSpace<T: Real> {
    pub k: Arc<LieAlgebra<T>>,
    pub g1: Arc<LieAlgebra<T>>,
    pub g2: Arc<LieAlgebra<T>>,
    pub emb1: Embedding<T>,
    pub emb2: Embedding<T>,
    pub c1: T,
    pub c2: T,
    pub same_group: bool,
    pub label: String,
    pub dims: BlockDims,
    /// Adapted B-orthonormal basis, columns in `g` coordinates.
    pub basis: DMatrix<T>,
    /// `k` coordinates `Z` of the `h` basis vectors `(Z, Z)`.
    pub h_k: DMatrix<T>,
    /// `k` coordinates `Z` of the `m₀` basis vectors `(Z, −(c₂/c₁)Z)`.
    pub m0_k: DMatrix<T>,
    /// `B₁`-orthonormal basis of `p₁ ⊂ g₁`.
    pub p1: DMatrix<T>,
    /// `B₂`-orthonormal basis of `p₂ ⊂ g₂`.
    pub p2: DMatrix<T>,
    killing: DMatrix<T>,
    adapted_ad: OnceLock<Vec<DMatrix<T>>>,
}

/// `B_g`-orthonormal basis of the orthocomplement of `emb(k)` in `g`.
fn orthocomplement<T: Real>(emb: &Embedding<T>) -> Result<DMatrix<T>> {
    let g = &emb.target;
    let chol = nalgebra::Cholesky::new(g.killing.clone())
        .ok_or(Error::RankDeficient { rank: 0, expected: g.dim })?;
    let lt = chol.l().transpose();
    let image = &lt * &emb.map;
    let q = linalg::gram_schmidt(&image, None, g.tol.rank)?;
    let comp = linalg::complement(&q, g.dim);
    let lt_inv = lt.try_inverse().ok_or(Error::RankDeficient { rank: 0, expected: g.dim })?;
    Ok(lt_inv * comp)
}

impl<T: Real> ReductiveSpace<T> {
    pub fn dim(&self) -> usize {
        self.g1.dim + self.g2.dim
    }

    pub fn dim_m(&self) -> usize {
        self.dim() - self.dims.h
    }

    /// Index range of a block in adapted coordinates.
    pub fn block_range(&self, b: Block) -> Range<usize> {
        let d = self.dims;
        match b {
            Block::H => 0..d.h,
            Block::M0 => d.h..d.h + d.m0,
            Block::M1 => d.h + d.m0..d.h + d.m0 + d.m1,
            Block::M2 => d.h + d.m0 + d.m1..self.dim(),
        }
    }

    /// Range of `m` in adapted coordinates.
    pub fn m_range(&self) -> Range<usize> {
        self.dims.h..self.dim()
    }

    /// Basis vectors of a block as elements of `g`.
    pub fn block_basis(&self, b: Block) -> Vec<AlgebraElement<T>> {
        self.block_range(b).map(|j| AlgebraElement::new(self.basis.column(j).into_owned())).collect()
    }

    pub fn h_basis(&self) -> Vec<AlgebraElement<T>> {
        self.block_basis(Block::H)
    }

    pub fn m0_basis(&self) -> Vec<AlgebraElement<T>> {
        self.block_basis(Block::M0)
    }

    pub fn m1_basis(&self) -> Vec<AlgebraElement<T>> {
        self.block_basis(Block::M1)
    }

    pub fn m2_basis(&self) -> Vec<AlgebraElement<T>> {
        self.block_basis(Block::M2)
    }

    /// The `m₀` slope `c₂/c₁`.
    pub fn slope(&self) -> T {
        self.c2 / self.c1
    }

    /// Minus Killing form of `g` (block diagonal).
    pub fn killing(&self) -> &DMatrix<T> {
        &self.killing
    }

    /// Bracket in `g` coordinates.
    pub fn bracket_g(&self, u: &DVector<T>, v: &DVector<T>) -> DVector<T> {
        let (d1, d2) = (self.g1.dim, self.g2.dim);
        let a = self.g1.bracket_coords(&u.rows(0, d1).into_owned(), &v.rows(0, d1).into_owned());
        let b = self.g2.bracket_coords(&u.rows(d1, d2).into_owned(), &v.rows(d1, d2).into_owned());
        let mut out = DVector::zeros(d1 + d2);
        out.rows_mut(0, d1).copy_from(&a);
        out.rows_mut(d1, d2).copy_from(&b);
        out
    }

    /// Adapted coordinates of an element of `g`.
    pub fn to_adapted(&self, v: &DVector<T>) -> DVector<T> {
        self.basis.transpose() * (&self.killing * v)
    }

    pub fn from_adapted(&self, u: &DVector<T>) -> DVector<T> {
        &self.basis * u
    }

    /// `ad` of each adapted basis vector, in adapted coordinates. These
    /// matrices are skew-symmetric.
    pub fn adapted_ad(&self) -> &[DMatrix<T>] {
        self.adapted_ad.get_or_init(|| {
            let n = self.dim();
            let cols: Vec<DVector<T>> = (0..n).map(|j| self.basis.column(j).into_owned()).collect();
            let mut ads = vec![DMatrix::zeros(n, n); n];
            for a in 0..n {
                for b in (a + 1)..n {
                    let br = self.to_adapted(&self.bracket_g(&cols[a], &cols[b]));
                    ads[a].set_column(b, &br);
                    ads[b].set_column(a, &(-br));
                }
            }
            ads
        })
    }

    /// Bracket in adapted coordinates.
    pub fn bracket_adapted(&self, u: &DVector<T>, v: &DVector<T>) -> DVector<T> {
        let ads = self.adapted_ad();
        let mut out = DVector::zeros(self.dim());
        for (a, &ua) in u.iter().enumerate() {
            if ua != T::zero() {
                out.gemv(ua, &ads[a], v, T::one());
            }
        }
        out
    }

    /// Adapted coordinates of `(Z, Z) ∈ h` for `Z ∈ k`.
    pub fn h_from_k(&self, z: &DVector<T>) -> DVector<T> {
        let w = self.h_k.clone().lu().solve(z).unwrap_or_else(|| DVector::zeros(self.dims.h));
        let mut out = DVector::zeros(self.dim());
        out.rows_mut(0, self.dims.h).copy_from(&w);
        out
    }

    /// `K₀ ∈ k` read from the `m₀` component of `X = (K₀, −(c₂/c₁)K₀) + …`.
    pub fn k0_of(&self, x: &DVector<T>) -> DVector<T> {
        let r = self.block_range(Block::M0);
        &self.m0_k * x.rows(r.start, r.len())
    }

    /// `k` coordinates of an element of `h` given in adapted coordinates.
    pub fn k_of_h(&self, u: &DVector<T>) -> DVector<T> {
        &self.h_k * u.rows(0, self.dims.h)
    }

    pub fn invariant_report(&self) -> InvariantReport {
        let n = self.dim();
        let gram = self.basis.transpose() * &self.killing * &self.basis;
        let gram_residual = linalg::max_abs(&(gram - DMatrix::identity(n, n))).as_f64();
        let ads = self.adapted_ad();
        let mut bracket_residual = T::zero();
        for a in self.block_range(Block::H) {
            for b in [Block::M0, Block::M1, Block::M2] {
                let r = self.block_range(b);
                for j in r.clone() {
                    let col = ads[a].column(j);
                    for (i, v) in col.iter().enumerate() {
                        if !r.contains(&i) {
                            bracket_residual = bracket_residual.max(v.abs());
                        }
                    }
                }
            }
        }
        let oc = |emb: &Embedding<T>, p: &DMatrix<T>| {
            linalg::max_abs(&(emb.map.transpose() * &emb.target.killing * p))
        };
        let orthocomplement_residual = oc(&self.emb1, &self.p1).max(oc(&self.emb2, &self.p2)).as_f64();
        let s = self.slope();
        let dk = self.k.dim;
        let mut slope_residual = T::zero();
        for i in 0..dk {
            for j in 0..dk {
                let zi = AlgebraElement::<T>::basis(dk, i).coords;
                let wj = AlgebraElement::<T>::basis(dk, j).coords;
                let mut h = DVector::zeros(n);
                let mut m = DVector::zeros(n);
                h.rows_mut(0, self.g1.dim).copy_from(&self.emb1.apply(&zi));
                h.rows_mut(self.g1.dim, self.g2.dim).copy_from(&self.emb2.apply(&zi));
                m.rows_mut(0, self.g1.dim).copy_from(&self.emb1.apply(&wj));
                m.rows_mut(self.g1.dim, self.g2.dim).copy_from(&(self.emb2.apply(&wj) * (-s)));
                let v = linalg::inner(&self.killing, &h, &m) / self.k.killing[(i, i)].max(self.k.killing[(j, j)]);
                slope_residual = slope_residual.max(v.abs());
            }
        }
        InvariantReport {
            gram_residual,
            bracket_residual: bracket_residual.as_f64(),
            orthocomplement_residual,
            slope_residual: slope_residual.as_f64(),
        }
    }
}

/// Assembles the B-orthogonal decomposition `g = h ⊕ m₀ ⊕ m₁ ⊕ m₂`.
pub fn build_pair_space<T: Real>(emb1: Embedding<T>, emb2: Embedding<T>, same_group: bool) -> Result<ReductiveSpace<T>> {
    let k = Arc::clone(&emb1.source);
    if !(Arc::ptr_eq(&k, &emb2.source) || (k.family == emb2.source.family && k.n == emb2.source.n)) {
        return Err(Error::AlgebraMismatch(k.label(), emb2.source.label()));
    }
    if same_group {
        let g_same = emb1.target.family == emb2.target.family && emb1.target.n == emb2.target.n;
        if !g_same || linalg::max_abs(&(&emb1.map - &emb2.map)) > k.tol.rank.sqrt() {
            return Err(Error::Spec("same_group requires identical factors and embeddings".into()));
        }
    }
    let c1 = killing_ratio(&emb1)?;
    let c2 = killing_ratio(&emb2)?;
    let g1 = Arc::clone(&emb1.target);
    let g2 = Arc::clone(&emb2.target);
    let (d1, d2, dk) = (g1.dim, g2.dim, k.dim);
    let p1 = orthocomplement(&emb1)?;
    let p2 = if same_group { p1.clone() } else { orthocomplement(&emb2)? };
    let s = c2 / c1;
    let t = linalg::orthonormalizing_transform(&k.killing)?;
    let h_k = &t * (T::one() / (T::one() / c1 + T::one() / c2)).sqrt();
    let m0_k = &t * (c1 / (T::one() + s)).sqrt();
    let n = d1 + d2;
    let (pd1, pd2) = (p1.ncols(), p2.ncols());
    if dk + dk + pd1 + pd2 != n {
        return Err(Error::DimMismatch { expected: n, got: 2 * dk + pd1 + pd2 });
    }
    let mut basis = DMatrix::zeros(n, n);
    let e1h = &emb1.map * &h_k;
    let e2h = &emb2.map * &h_k;
    let e1m = &emb1.map * &m0_k;
    let e2m = &emb2.map * &m0_k * (-s);
    basis.view_mut((0, 0), (d1, dk)).copy_from(&e1h);
    basis.view_mut((d1, 0), (d2, dk)).copy_from(&e2h);
    basis.view_mut((0, dk), (d1, dk)).copy_from(&e1m);
    basis.view_mut((d1, dk), (d2, dk)).copy_from(&e2m);
    basis.view_mut((0, 2 * dk), (d1, pd1)).copy_from(&p1);
    basis.view_mut((d1, 2 * dk + pd1), (d2, pd2)).copy_from(&p2);
    let mut killing = DMatrix::zeros(n, n);
    killing.view_mut((0, 0), (d1, d1)).copy_from(&g1.killing);
    killing.view_mut((d1, d1), (d2, d2)).copy_from(&g2.killing);
    let label = format!("({}x{})/{}", g1.label(), g2.label(), k.label());
    Ok(ReductiveSpace {
        k,
        g1,
        g2,
        emb1,
        emb2,
        c1,
        c2,
        same_group,
        label,
        dims: BlockDims { h: dk, m0: dk, m1: pd1, m2: pd2 },
        basis,
        h_k,
        m0_k,
        p1,
        p2,
        killing,
        adapted_ad: OnceLock::new(),
    })
}

/// Algebra reference in a space specification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FactorSpec {
    Classical { family: String, n: usize },
    FromRep { from_rep: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgebraSpec {
    pub family: String,
    pub n: usize,
}

/// JSON description of a space.
///
/// ```json
/// {"k": {"family": "so", "n": 3},
///  "g1": {"family": "so", "n": 4}, "embedding1": "defining-block",
///  "g2": {"family": "su", "n": 3}, "embedding2": "defining-block",
///  "same_group": false}
/// ```
///
/// A factor may instead be `{"from_rep": "<tree>"}`: the factor is then
/// `so(dim ρ)` and the embedding is `ρ` (`embeddingN` may be omitted).
/// An embedding is either `"defining-block"` or a representation tree, which
/// maps into `so(dim ρ)` or, for complex `ρ`, into `su(dim ρ / 2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceSpec {
    pub k: AlgebraSpec,
    pub g1: FactorSpec,
    #[serde(default)]
    pub embedding1: Option<String>,
    pub g2: FactorSpec,
    #[serde(default)]
    pub embedding2: Option<String>,
    #[serde(default)]
    pub same_group: bool,
}

impl SpaceSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("serializable")
    }

    pub fn build<T: Real>(&self) -> Result<ReductiveSpace<T>> {
        let k = Arc::new(crate::algebra::build_named::<T>(&self.k.family, self.k.n)?);
        let emb1 = build_factor(&k, &self.g1, self.embedding1.as_deref())?;
        let emb2 = if self.same_group && self.g1 == self.g2 && self.embedding1 == self.embedding2 {
            emb1.clone()
        } else {
            build_factor(&k, &self.g2, self.embedding2.as_deref())?
        };
        build_pair_space(emb1, emb2, self.same_group)
    }
}

fn build_factor<T: Real>(k: &Arc<LieAlgebra<T>>, g: &FactorSpec, emb: Option<&str>) -> Result<Embedding<T>> {
    match g {
        FactorSpec::FromRep { from_rep } => {
            let tree: RepTree = from_rep.parse()?;
            if let Some(e) = emb {
                let other: RepTree = e.parse()?;
                if other != tree {
                    return Err(Error::Spec(format!("embedding `{e}` disagrees with from_rep `{from_rep}`")));
                }
            }
            embedding_from_rep(&tree.build(k)?)
        }
        FactorSpec::Classical { family, n } => {
            let target = Arc::new(crate::algebra::build_classical_with::<T>(family.parse()?, *n, k.tol)?);
            match emb.unwrap_or("defining-block") {
                "defining-block" => defining_block(k, &target),
                text => {
                    let tree: RepTree = text.parse()?;
                    embedding_into(&tree.build(k)?, &target)
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::build_classical;
    use crate::representations::{adjoint_rep, alt2_rep, defining_rep};

    fn arc(f: Family, n: usize) -> Arc<LieAlgebra<f64>> {
        Arc::new(build_classical(f, n).unwrap())
    }

    #[test]
    fn identity_ratio_is_one() {
        let k = arc(Family::Su, 3);
        let c = killing_ratio(&Embedding::identity(&k)).unwrap();
        assert!((c - 1.0).abs() < 1e-12);
    }

    #[test]
    fn block_so3_in_so4_matches_two_killing_forms() {
        let k = arc(Family::So, 3);
        let g = arc(Family::So, 4);
        let emb = defining_block(&k, &g).unwrap();
        let c = killing_ratio(&emb).unwrap();
        // shared element E_12 − E_21, coordinate 0 in both bases
        let bk = k.killing[(0, 0)];
        let bg = g.killing[(0, 0)];
        assert!((c - bk / bg).abs() < 1e-12);
        assert!((c - 0.5).abs() < 1e-12);
    }

    #[test]
    fn so3_in_su3_ratio() {
        let k = arc(Family::So, 3);
        let g = arc(Family::Su, 3);
        let emb = defining_block(&k, &g).unwrap();
        assert!((killing_ratio(&emb).unwrap() - 1.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn rep_embeddings() {
        let so3 = arc(Family::So, 3);
        let e = embedding_from_rep(&defining_rep(&so3)).unwrap();
        assert!((&e.map - DMatrix::identity(3, 3)).amax() < 1e-12);
        let so5 = arc(Family::So, 5);
        let e = embedding_from_rep(&alt2_rep(&defining_rep(&so5))).unwrap();
        assert_eq!(e.target.n, 10);
        killing_ratio(&e).unwrap();
        let su3 = arc(Family::Su, 3);
        let e = embedding_from_rep(&adjoint_rep(&su3)).unwrap();
        assert_eq!(e.target.n, 8);
        assert!(e.homomorphism_residual() < 1e-9);
    }

    #[test]
    fn complex_rep_into_su() {
        let su3 = arc(Family::Su, 3);
        let su3b = arc(Family::Su, 3);
        let e = embedding_into(&defining_rep(&su3), &su3b).unwrap();
        assert!((killing_ratio(&e).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn sp_blocks() {
        let su2 = arc(Family::Su, 2);
        let sp2 = arc(Family::Sp, 2);
        defining_block(&su2, &sp2).unwrap();
        let sp3 = arc(Family::Sp, 3);
        let e = defining_block(&sp2, &sp3).unwrap();
        killing_ratio(&e).unwrap();
        assert!(defining_block(&sp3, &sp2).is_err());
        let so3 = arc(Family::So, 3);
        killing_ratio(&defining_block(&so3, &sp3).unwrap()).unwrap();
    }

    #[test]
    fn so4_su3_space() {
        let spec = SpaceSpec::from_json(
            r#"{"k":{"family":"so","n":3},"g1":{"family":"so","n":4},"embedding1":"defining-block",
                "g2":{"family":"su","n":3},"embedding2":"defining-block","same_group":false}"#,
        )
        .unwrap();
        let sp = spec.build::<f64>().unwrap();
        assert_eq!(sp.dims, BlockDims { h: 3, m0: 3, m1: 3, m2: 5 });
        assert_eq!(sp.dim_m(), 11);
        let rep = sp.invariant_report();
        assert!(rep.max() < 1e-9, "{rep:?}");
        assert!((sp.slope() - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn same_group_space() {
        let spec = SpaceSpec::from_json(
            r#"{"k":{"family":"so","n":3},"g1":{"family":"su","n":3},"embedding1":"defining-block",
                "g2":{"family":"su","n":3},"embedding2":"defining-block","same_group":true}"#,
        )
        .unwrap();
        let sp = spec.build::<f64>().unwrap();
        assert!((sp.c1 - sp.c2).abs() < 1e-14);
        assert!(sp.invariant_report().max() < 1e-9);
        // swapping the factors exchanges m1 and m2
        let d = sp.g1.dim;
        let swap = |v: &DVector<f64>| {
            let mut w = v.clone();
            w.rows_mut(0, d).copy_from(&v.rows(d, d));
            w.rows_mut(d, d).copy_from(&v.rows(0, d));
            w
        };
        for (a, b) in sp.m1_basis().iter().zip(sp.m2_basis()) {
            assert!((swap(&a.coords) - &b.coords).amax() < 1e-14);
        }
        for h in sp.h_basis() {
            assert!((swap(&h.coords) - &h.coords).amax() < 1e-14);
        }
        for m in sp.m0_basis() {
            assert!((swap(&m.coords) + &m.coords).amax() < 1e-14);
        }
    }

    #[test]
    fn from_rep_factor() {
        let spec = SpaceSpec::from_json(
            r#"{"k":{"family":"so","n":3},"g1":{"family":"su","n":3},"embedding1":"defining-block",
                "g2":{"from_rep":"traceless(sym2(defining))"}}"#,
        )
        .unwrap();
        let sp = spec.build::<f64>().unwrap();
        assert_eq!(sp.g2.n, 5);
        assert!(sp.invariant_report().max() < 1e-9);
    }

    #[test]
    fn bad_specs() {
        assert!(SpaceSpec::from_json("{").is_err());
        let spec = SpaceSpec::from_json(
            r#"{"k":{"family":"so","n":5},"g1":{"family":"so","n":4},"g2":{"family":"su","n":3}}"#,
        )
        .unwrap();
        assert!(spec.build::<f64>().is_err());
    }
}
