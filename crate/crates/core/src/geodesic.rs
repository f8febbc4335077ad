//! Invariant metrics on `m`, geodesic vectors and the geodesic-orbit test.
//!
//! Vectors of `m` are given in the adapted B-orthonormal coordinates of the
//! space restricted to `m` (length `dim m`, ordered `m₀, m₁, m₂`). Elements of
//! the full algebra use the full adapted coordinates (length `dim g`).
//!
//! The metric endomorphism `A` satisfies `(u, v) = B(Au, v)`. A vector
//! `X ∈ m` admits a geodesic `Z ∈ k` iff `[(Z,Z) + X, AX] = 0`; this is a
//! linear least-squares problem in `Z`, and its residual is normalised by
//! `‖X‖·‖AX‖`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::Real;
use crate::spaces::{Block, ReductiveSpace};

/// Seed of the fixed probe set, independent of the sampling seed.
const PROBE_SEED: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MetricSpec {
    /// `x0·B|m₀ + x·B|m₁ + y·B|m₂`.
    Diagonal { x0: f64, x: f64, y: f64 },
    /// `x0` on `m₀` and `[[a, c], [c, b]] ⊗ 1` on `m₁ ⊕ m₂ ≅ p₁ ⊕ p₁`.
    Coupled { x0: f64, a: f64, b: f64, c: f64 },
}

impl MetricSpec {
    pub fn diagonal(x0: f64, x: f64, y: f64) -> Self {
        MetricSpec::Diagonal { x0, x, y }
    }

    pub fn coupled(x0: f64, a: f64, b: f64, c: f64) -> Self {
        MetricSpec::Coupled { x0, a, b, c }
    }

    pub fn bi_invariant() -> Self {
        Self::diagonal(1.0, 1.0, 1.0)
    }

    pub fn x0(&self) -> f64 {
        match *self {
            MetricSpec::Diagonal { x0, .. } | MetricSpec::Coupled { x0, .. } => x0,
        }
    }

    pub fn is_coupled(&self) -> bool {
        matches!(self, MetricSpec::Coupled { .. })
    }

    /// All parameters multiplied by `lambda`.
    pub fn scaled(&self, lambda: f64) -> Self {
        match *self {
            MetricSpec::Diagonal { x0, x, y } => Self::diagonal(lambda * x0, lambda * x, lambda * y),
            MetricSpec::Coupled { x0, a, b, c } => Self::coupled(lambda * x0, lambda * a, lambda * b, lambda * c),
        }
    }

    /// Positivity of the parameters (and of `ab − c²`).
    pub fn validate(&self) -> Result<()> {
        let finite = |v: f64| v.is_finite();
        match *self {
            MetricSpec::Diagonal { x0, x, y } => {
                if !(finite(x0) && finite(x) && finite(y)) || x0 <= 0.0 || x <= 0.0 || y <= 0.0 {
                    return Err(Error::InvalidMetric(format!("need x0, x, y > 0 (got {x0}, {x}, {y})")));
                }
            }
            MetricSpec::Coupled { x0, a, b, c } => {
                if !(finite(x0) && finite(a) && finite(b) && finite(c)) || x0 <= 0.0 || a <= 0.0 || b <= 0.0 {
                    return Err(Error::InvalidMetric(format!("need x0, a, b > 0 (got {x0}, {a}, {b})")));
                }
                if a * b - c * c <= 0.0 {
                    return Err(Error::InvalidMetric(format!("ab − c² = {} is not positive", a * b - c * c)));
                }
            }
        }
        Ok(())
    }

    /// Parameter distance from the geodesic-orbit locus after normalising
    /// `x0 = 1`: `|(1−x)/x − (c₂/c₁)(y−1)/y|`, or for the coupled family
    /// `|(1−a)/a − (b−1)/b|` (the off-diagonal part is not included).
    pub fn locus_residual(&self, slope: f64) -> f64 {
        let (u, v, s) = match *self {
            MetricSpec::Diagonal { x0, x, y } => (x / x0, y / x0, slope),
            MetricSpec::Coupled { x0, a, b, .. } => (a / x0, b / x0, 1.0),
        };
        ((1.0 - u) / u - s * (v - 1.0) / v).abs()
    }
}

impl fmt::Display for MetricSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricSpec::Diagonal { x0, x, y } => write!(f, "diagonal(x0={x0}, x={x}, y={y})"),
            MetricSpec::Coupled { x0, a, b, c } => write!(f, "coupled(x0={x0}, a={a}, b={b}, c={c})"),
        }
    }
}

/// Matrix of `A` on `m` in adapted coordinates.
pub fn metric_endomorphism<T: Real>(space: &ReductiveSpace<T>, spec: &MetricSpec) -> Result<DMatrix<T>> {
    spec.validate()?;
    let dm = space.dim_m();
    let d = space.dims;
    let mut a = DMatrix::zeros(dm, dm);
    for i in 0..d.m0 {
        a[(i, i)] = T::lit(spec.x0());
    }
    match *spec {
        MetricSpec::Diagonal { x, y, .. } => {
            for i in 0..d.m1 {
                a[(d.m0 + i, d.m0 + i)] = T::lit(x);
            }
            for i in 0..d.m2 {
                a[(d.m0 + d.m1 + i, d.m0 + d.m1 + i)] = T::lit(y);
            }
        }
        MetricSpec::Coupled { a: aa, b, c, .. } => {
            if !space.same_group {
                return Err(Error::CoupledOnPairSpace);
            }
            let (o1, o2) = (d.m0, d.m0 + d.m1);
            for i in 0..d.m1 {
                a[(o1 + i, o1 + i)] = T::lit(aa);
                a[(o2 + i, o2 + i)] = T::lit(b);
                a[(o1 + i, o2 + i)] = T::lit(c);
                a[(o2 + i, o1 + i)] = T::lit(c);
            }
        }
    }
    let res = equivariance_residual(space, &a);
    let scale = linalg::max_abs(&a);
    if res > T::lit(1e-9) * scale {
        return Err(Error::InvalidMetric(format!("not ad(h)-equivariant (residual {:e})", res.as_f64())));
    }
    Ok(a)
}

/// `ad` of the `h` basis vector `a` restricted to `m`.
fn ad_h_on_m<T: Real>(space: &ReductiveSpace<T>, a: usize) -> DMatrix<T> {
    let m = space.m_range();
    space.adapted_ad()[a].view((m.start, m.start), (m.len(), m.len())).into_owned()
}

/// `max_a ‖[ad(h_a)|m, A]‖_∞`.
pub fn equivariance_residual<T: Real>(space: &ReductiveSpace<T>, a: &DMatrix<T>) -> T {
    (0..space.dims.h).fold(T::zero(), |w, i| {
        let r = ad_h_on_m(space, i);
        w.max(linalg::max_abs(&linalg::commutator(&r, a)))
    })
}

fn embed_m<T: Real>(space: &ReductiveSpace<T>, x_m: &DVector<T>) -> DVector<T> {
    let mut v = DVector::zeros(space.dim());
    v.rows_mut(space.dims.h, space.dim_m()).copy_from(x_m);
    v
}

fn m_part<T: Real>(space: &ReductiveSpace<T>, v: &DVector<T>) -> DVector<T> {
    v.rows(space.dims.h, space.dim_m()).into_owned()
}

/// Context shared by repeated evaluations on one `(space, spec)`.
pub struct MetricContext<'a, T: Real> {
    pub space: &'a ReductiveSpace<T>,
    pub spec: MetricSpec,
    pub a: DMatrix<T>,
}

impl<'a, T: Real> MetricContext<'a, T> {
    pub fn new(space: &'a ReductiveSpace<T>, spec: &MetricSpec) -> Result<Self> {
        let a = metric_endomorphism(space, spec)?;
        Ok(Self { space, spec: *spec, a })
    }

    fn norm_scale(&self, x_m: &DVector<T>) -> T {
        x_m.norm() * (&self.a * x_m).norm()
    }

    /// `[(Z,Z) + X, AX]` in full adapted coordinates, with `Z` in `k`
    /// coordinates.
    pub fn go_bracket(&self, x_m: &DVector<T>, z_k: &DVector<T>) -> DVector<T> {
        let w = self.space.h_from_k(z_k) + embed_m(self.space, x_m);
        let ax = embed_m(self.space, &(&self.a * x_m));
        self.space.bracket_adapted(&w, &ax)
    }

    /// Normalised `‖[(Z,Z)+X, AX]‖`.
    pub fn residual_for(&self, x_m: &DVector<T>, z_k: &DVector<T>) -> T {
        let s = self.norm_scale(x_m);
        if s == T::zero() {
            return T::zero();
        }
        self.go_bracket(x_m, z_k).norm() / s
    }

    /// Least-squares witness for one `X`.
    pub fn feasibility(&self, x_m: &DVector<T>) -> Feasibility<T> {
        let sp = self.space;
        let dh = sp.dims.h;
        let s = self.norm_scale(x_m);
        if s == T::zero() {
            return Feasibility { z_k: DVector::zeros(sp.k.dim), residual: T::zero() };
        }
        let x = embed_m(sp, x_m);
        let ax = embed_m(sp, &(&self.a * x_m));
        let ads = sp.adapted_ad();
        let rhs = -sp.bracket_adapted(&x, &ax);
        let mut u = DMatrix::zeros(sp.dim(), dh);
        for a in 0..dh {
            u.set_column(a, &(&ads[a] * &ax));
        }
        let (z_h, res) = linalg::lstsq(&u, &rhs, sp.k.tol.rank);
        let mut zh_full = DVector::zeros(sp.dim());
        zh_full.rows_mut(0, dh).copy_from(&z_h);
        Feasibility { z_k: sp.k_of_h(&zh_full), residual: res / s }
    }

    /// `Z = ((1−x̂)/x̂)·K₀` with `x̂ = x/x0`, read off the `m₀` component.
    pub fn ratio_witness(&self, x_m: &DVector<T>) -> Result<DVector<T>> {
        let t = self.graph_factor()?;
        Ok(self.space.k0_of(&embed_m(self.space, x_m)) * t)
    }

    fn graph_factor(&self) -> Result<T> {
        match self.spec {
            MetricSpec::Diagonal { x0, x, .. } => {
                let u = x / x0;
                Ok(T::lit((1.0 - u) / u))
            }
            MetricSpec::Coupled { .. } => Err(Error::CoupledSpec),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Feasibility<T: Real> {
    /// Witness in `k` coordinates (minimum-norm least-squares solution).
    pub z_k: DVector<T>,
    pub residual: T,
}

/// Least-squares solve of `[(Z,Z) + X, AX] = 0` over `Z ∈ k`.
pub fn go_feasibility<T: Real>(space: &ReductiveSpace<T>, spec: &MetricSpec, x_m: &DVector<T>) -> Result<Feasibility<T>> {
    Ok(MetricContext::new(space, spec)?.feasibility(x_m))
}

/// Geodesic Lemma test of `X ∈ g` (full adapted coordinates):
/// `max_Y |([X,Y]_m, X_m)|` over the `m` basis, normalised by
/// `‖X‖·‖AX_m‖`. Returns `(is_geodesic, residual)`.
pub fn geodesic_vector_test<T: Real>(
    space: &ReductiveSpace<T>,
    spec: &MetricSpec,
    x_full: &DVector<T>,
    tol: T,
) -> Result<(bool, T)> {
    let ctx = MetricContext::new(space, spec)?;
    let xm = m_part(space, x_full);
    let axm = &ctx.a * &xm;
    let s = x_full.norm() * axm.norm();
    if s == T::zero() {
        return Ok((true, T::zero()));
    }
    let ads = space.adapted_ad();
    let mut worst = T::zero();
    for b in space.m_range() {
        let mut br = DVector::zeros(space.dim());
        for (a, &xa) in x_full.iter().enumerate() {
            if xa != T::zero() {
                br.axpy(xa, &ads[a].column(b), T::one());
            }
        }
        worst = worst.max(m_part(space, &br).dot(&axm).abs());
    }
    let r = worst / s;
    Ok((r < tol, r))
}

/// Fixed probes: one generic vector with all three blocks nonzero, the three
/// pure-block vectors and the three two-block vectors. Unit B-norm.
pub fn probe_set<T: Real>(space: &ReductiveSpace<T>) -> Vec<DVector<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(PROBE_SEED);
    let dm = space.dim_m();
    let h = space.dims.h;
    let ranges: Vec<_> = [Block::M0, Block::M1, Block::M2]
        .iter()
        .map(|&b| {
            let r = space.block_range(b);
            (r.start - h)..(r.end - h)
        })
        .collect();
    let masks: [&[usize]; 7] = [&[0, 1, 2], &[0], &[1], &[2], &[0, 1], &[0, 2], &[1, 2]];
    let mut out = Vec::new();
    for mask in masks {
        let mut v = DVector::zeros(dm);
        for &bi in mask {
            for i in ranges[bi].clone() {
                let g: f64 = StandardNormal.sample(&mut rng);
                v[i] = T::lit(g);
            }
        }
        let n = v.norm();
        if n > T::zero() {
            out.push(v / n);
        }
    }
    out
}

/// Uniform samples on the unit sphere of `m`.
pub fn sample_sphere<T: Real>(dim: usize, count: usize, seed: u64) -> Vec<DVector<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            loop {
                let v = DVector::from_fn(dim, |_, _| {
                    let g: f64 = StandardNormal.sample(&mut rng);
                    T::lit(g)
                });
                let n = v.norm();
                if n > T::zero() {
                    break v / n;
                }
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Decision {
    #[serde(rename = "GO")]
    Go,
    #[serde(rename = "NOT_GO")]
    NotGo,
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Decision::Go => "GO",
            Decision::NotGo => "NOT_GO",
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GOReport {
    pub space: String,
    pub spec: MetricSpec,
    pub c1: f64,
    pub c2: f64,
    /// Random samples (the probe set comes on top).
    pub samples: usize,
    pub probes: usize,
    pub seed: u64,
    pub tol: f64,
    pub max_residual: f64,
    /// Adapted `m` coordinates of the worst vector.
    pub worst_x: Vec<f64>,
    /// `k` coordinates of the witness for each probe, then each sample.
    pub witnesses: Vec<Vec<f64>>,
    pub decision: Decision,
    pub ratio_residual: f64,
    /// Dimension of the ad(h)-equivariant endomorphisms of `p₁` (only for
    /// small `p₁`).
    pub commutant_dim: Option<usize>,
}

impl GOReport {
    pub fn is_go(&self) -> bool {
        self.decision == Decision::Go
    }
}

/// Sampled geodesic-orbit decision.
pub fn go_decision<T: Real>(
    space: &ReductiveSpace<T>,
    spec: &MetricSpec,
    n_samples: usize,
    seed: u64,
    tol: f64,
) -> Result<GOReport> {
    if n_samples == 0 {
        return Err(Error::InvalidMetric("need at least one sample".into()));
    }
    let ctx = MetricContext::new(space, spec)?;
    let probes = probe_set(space);
    let samples = sample_sphere::<T>(space.dim_m(), n_samples, seed);
    let mut max_residual = T::zero();
    let mut worst = probes[0].clone();
    let mut witnesses = Vec::with_capacity(probes.len() + samples.len());
    for x in probes.iter().chain(samples.iter()) {
        let f = ctx.feasibility(x);
        if f.residual > max_residual || witnesses.is_empty() {
            max_residual = f.residual.max(max_residual);
            worst = x.clone();
        }
        witnesses.push(f.z_k.iter().map(|v| v.as_f64()).collect());
    }
    let max_residual = max_residual.as_f64();
    Ok(GOReport {
        space: space.label.clone(),
        spec: *spec,
        c1: space.c1.as_f64(),
        c2: space.c2.as_f64(),
        samples: n_samples,
        probes: probes.len(),
        seed,
        tol,
        max_residual,
        worst_x: worst.iter().map(|v| v.as_f64()).collect(),
        witnesses,
        decision: if max_residual < tol { Decision::Go } else { Decision::NotGo },
        ratio_residual: spec.locus_residual(space.slope().as_f64()),
        commutant_dim: commutant_dim(space, 16),
    })
}

/// Dimension of the space of endomorphisms of `m₁ ≅ p₁` commuting with
/// `ad(h)`, or `None` when `dim p₁ > max_dim`.
pub fn commutant_dim<T: Real>(space: &ReductiveSpace<T>, max_dim: usize) -> Option<usize> {
    let p = space.dims.m1;
    if p > max_dim || p == 0 {
        return if p == 0 { Some(0) } else { None };
    }
    let r1 = space.block_range(Block::M1);
    let id = DMatrix::<T>::identity(p, p);
    let mut normal = DMatrix::<T>::zeros(p * p, p * p);
    for a in 0..space.dims.h {
        let r = space.adapted_ad()[a].view((r1.start, r1.start), (p, p)).into_owned();
        // vec(RM − MR) = (I⊗R − Rᵀ⊗I) vec(M)
        let e = id.kronecker(&r) - r.transpose().kronecker(&id);
        normal += e.transpose() * &e;
    }
    let eig = normal.symmetric_eigenvalues();
    let top = eig.iter().fold(T::zero(), |m, &v| m.max(v.abs()));
    let cut = space.k.tol.rank.sqrt() * top.max(T::one());
    Some(eig.iter().filter(|&&v| v.abs() <= cut).count())
}

/// Conditions of the four-way characterisation of `Z + X` being a geodesic
/// vector, each as a normalised ℓ² residual over the B-orthonormal `m` basis.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EquivalenceAudit {
    /// `Z+X` passes the Geodesic Lemma: `([Z+X, Y]_m, X) = 0` via `B(AX, ·)`.
    pub geodesic: bool,
    /// `[Z+X, AX] ∈ h`.
    pub bracket_in_h: bool,
    /// `([Z,X], Y) = (X, [X,Y]_m)` for all `Y`.
    pub bilinear: bool,
    /// `([Z+X, Y]_m, X) = 0` for all `Y`, evaluated as `B(A[Z+X,Y]_m, X)`.
    pub orthogonality: bool,
    pub residuals: [f64; 4],
}

impl EquivalenceAudit {
    pub fn flags(&self) -> [bool; 4] {
        [self.geodesic, self.bracket_in_h, self.bilinear, self.orthogonality]
    }

    pub fn consistent(&self) -> bool {
        let f = self.flags();
        f.iter().all(|&b| b == f[0])
    }
}

pub fn equivalence_audit<T: Real>(
    space: &ReductiveSpace<T>,
    spec: &MetricSpec,
    x_m: &DVector<T>,
    z_k: &DVector<T>,
    tol: T,
) -> Result<EquivalenceAudit> {
    let ctx = MetricContext::new(space, spec)?;
    let s = ctx.norm_scale(x_m);
    if s == T::zero() {
        return Ok(EquivalenceAudit {
            geodesic: true,
            bracket_in_h: true,
            bilinear: true,
            orthogonality: true,
            residuals: [0.0; 4],
        });
    }
    let zbar = space.h_from_k(z_k);
    let x = embed_m(space, x_m);
    let w = &zbar + &x;
    let axm = &ctx.a * x_m;
    let ads = space.adapted_ad();
    let ad_of = |v: &DVector<T>| {
        let mut m = DMatrix::zeros(space.dim(), space.dim());
        for (a, &va) in v.iter().enumerate() {
            if va != T::zero() {
                m += &ads[a] * va;
            }
        }
        m
    };
    let ad_w = ad_of(&w);
    let ad_x = ad_of(&x);
    let zx_m = m_part(space, &(ad_of(&zbar) * &x));
    let mr = space.m_range();
    let (mut r1, mut r3, mut r4) = (T::zero(), T::zero(), T::zero());
    for b in mr.clone() {
        let wy = m_part(space, &ad_w.column(b).into_owned());
        let xy = m_part(space, &ad_x.column(b).into_owned());
        let v1 = axm.dot(&wy);
        let v3 = (&ctx.a * &zx_m)[b - mr.start] - axm.dot(&xy);
        let v4 = (&ctx.a * &wy).dot(x_m);
        r1 += v1 * v1;
        r3 += v3 * v3;
        r4 += v4 * v4;
    }
    let r2 = m_part(space, &(ad_w * embed_m(space, &axm))).norm();
    let res = [r1.sqrt() / s, r2 / s, r3.sqrt() / s, r4.sqrt() / s];
    Ok(EquivalenceAudit {
        geodesic: res[0] < tol,
        bracket_in_h: res[1] < tol,
        bilinear: res[2] < tol,
        orthogonality: res[3] < tol,
        residuals: res.map(|v| v.as_f64()),
    })
}

/// `|(1−x)/x − c₂(y−1)/(c₁y)|` after normalising `x0 = 1`.
pub fn ratio_condition<T: Real>(space: &ReductiveSpace<T>, spec: &MetricSpec) -> Result<T> {
    if spec.is_coupled() {
        return Err(Error::CoupledSpec);
    }
    spec.validate()?;
    Ok(T::lit(spec.locus_residual(space.slope().as_f64())))
}

/// `y` on the geodesic-orbit locus for given `x` (with `x0 = 1`), if positive.
pub fn locus_y<T: Real>(space: &ReductiveSpace<T>, x: f64) -> Option<f64> {
    // (1−x)/x = s(y−1)/y  ⇔  y = s / (s − (1−x)/x)
    let s = space.slope().as_f64();
    let t = (1.0 - x) / x;
    let y = s / (s - t);
    (y.is_finite() && y > 0.0).then_some(y)
}

/// Natural reductivity on the fixed B-orthogonal complement: normalised
/// `max ‖([X, ·]_m, X)‖` over the probe set.
pub fn natural_reductivity_direct<T: Real>(space: &ReductiveSpace<T>, spec: &MetricSpec, tol: T) -> Result<(bool, T)> {
    let ctx = MetricContext::new(space, spec)?;
    let ads = space.adapted_ad();
    let mut worst = T::zero();
    for x_m in probe_set(space) {
        let x = embed_m(space, &x_m);
        let axm = &ctx.a * &x_m;
        let s = ctx.norm_scale(&x_m);
        let mut acc = T::zero();
        for b in space.m_range() {
            let mut br = DVector::zeros(space.dim());
            for (a, &xa) in x.iter().enumerate() {
                if xa != T::zero() {
                    br.axpy(xa, &ads[a].column(b), T::one());
                }
            }
            let v = m_part(space, &br).dot(&axm);
            acc += v * v;
        }
        worst = worst.max(acc.sqrt() / s);
    }
    Ok((worst < tol, worst))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphCheck {
    pub passed: bool,
    /// `max_a ‖ad(h_a)|h ∘ ξ − ξ ∘ ad(h_a)|m‖_∞`.
    pub equivariance_residual: f64,
    /// Normalised `max ‖[ξ(X) + X, AX]‖` over the probes.
    pub max_residual: f64,
    pub probes: usize,
}

/// Matrix of the linear map `ξ(X) = ((1−x̂)/x̂)(K₀, K₀)` from adapted `m`
/// coordinates to adapted `h` coordinates.
pub fn geodesic_graph_matrix<T: Real>(space: &ReductiveSpace<T>, spec: &MetricSpec) -> Result<DMatrix<T>> {
    let ctx = MetricContext::new(space, spec)?;
    let t = ctx.graph_factor()?;
    let h_inv = space.h_k.clone().try_inverse().ok_or(Error::RankDeficient { rank: 0, expected: space.dims.h })?;
    let mut xi = DMatrix::zeros(space.dims.h, space.dim_m());
    xi.view_mut((0, 0), (space.dims.h, space.dims.m0)).copy_from(&(h_inv * &space.m0_k * t));
    Ok(xi)
}

/// Checks that `ξ` is ad(h)-equivariant and solves `[ξ(X)+X, AX] = 0` on the
/// probe set plus `n_random` unit samples.
pub fn geodesic_graph_check<T: Real>(
    space: &ReductiveSpace<T>,
    spec: &MetricSpec,
    n_random: usize,
    seed: u64,
    tol: T,
) -> Result<GraphCheck> {
    let ctx = MetricContext::new(space, spec)?;
    let xi = geodesic_graph_matrix(space, spec)?;
    let dh = space.dims.h;
    let mut eq = T::zero();
    for a in 0..dh {
        let hh = space.adapted_ad()[a].view((0, 0), (dh, dh)).into_owned();
        let mm = ad_h_on_m(space, a);
        eq = eq.max(linalg::max_abs(&(hh * &xi - &xi * mm)));
    }
    let mut xs = probe_set(space);
    xs.extend(sample_sphere::<T>(space.dim_m(), n_random, seed));
    let mut worst = T::zero();
    for x_m in &xs {
        let zh = &xi * x_m;
        let w = {
            let mut v = embed_m(space, x_m);
            v.rows_mut(0, dh).copy_from(&zh);
            v
        };
        let ax = embed_m(space, &(&ctx.a * x_m));
        let s = ctx.norm_scale(x_m);
        if s > T::zero() {
            worst = worst.max(space.bracket_adapted(&w, &ax).norm() / s);
        }
    }
    Ok(GraphCheck {
        passed: eq < tol && worst < tol,
        equivariance_residual: eq.as_f64(),
        max_residual: worst.as_f64(),
        probes: xs.len(),
    })
}

/// Eigenspaces of `A`, clustered with relative gap `gap`. Columns are in
/// adapted `m` coordinates.
pub fn eigenspaces<T: Real>(a: &DMatrix<T>, gap: T) -> Vec<(T, DMatrix<T>)> {
    let (values, vectors) = linalg::symmetric_eigen(a);
    let n = a.nrows();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).unwrap());
    let scale = values.iter().fold(T::zero(), |m, &v| m.max(v.abs())).max(T::one());
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for &i in &idx {
        match groups.last_mut() {
            Some(g) if (values[i] - values[*g.last().unwrap()]).abs() <= gap * scale => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    groups
        .into_iter()
        .map(|g| {
            let mut m = DMatrix::zeros(n, g.len());
            for (c, &i) in g.iter().enumerate() {
                m.set_column(c, &vectors.column(i));
            }
            let mean = g.iter().fold(T::zero(), |s, &i| s + values[i]) / T::from_usize(g.len()).unwrap();
            (mean, m)
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EigenspaceCheck {
    pub passed: bool,
    pub eigenvalues: Vec<f64>,
    pub dims: Vec<usize>,
    /// Largest component of `[b_i, b_j]` on the other eigenspaces.
    pub max_residual: f64,
}

/// For distinct `A`-eigenspaces `b_i`, `b_j`, the component of `[b_i, b_j]`
/// in `m` outside `b_i + b_j`. Only defined for certified metrics.
pub fn eigenspace_bracket_check<T: Real>(
    space: &ReductiveSpace<T>,
    spec: &MetricSpec,
    report: &GOReport,
    tol: T,
) -> Result<EigenspaceCheck> {
    if !report.is_go() || report.spec != *spec {
        return Err(Error::NotCertifiedGO);
    }
    let ctx = MetricContext::new(space, spec)?;
    let spaces = eigenspaces(&ctx.a, T::lit(1e-9));
    let mut worst = T::zero();
    for i in 0..spaces.len() {
        for j in (i + 1)..spaces.len() {
            let others: Vec<&DMatrix<T>> =
                (0..spaces.len()).filter(|&l| l != i && l != j).map(|l| &spaces[l].1).collect();
            for u in spaces[i].1.column_iter() {
                for v in spaces[j].1.column_iter() {
                    let br = m_part(
                        space,
                        &space.bracket_adapted(&embed_m(space, &u.into_owned()), &embed_m(space, &v.into_owned())),
                    );
                    let mut out = T::zero();
                    for q in &others {
                        out += (q.transpose() * &br).norm_squared();
                    }
                    worst = worst.max(out.sqrt());
                }
            }
        }
    }
    Ok(EigenspaceCheck {
        passed: worst < tol,
        eigenvalues: spaces.iter().map(|(l, _)| l.as_f64()).collect(),
        dims: spaces.iter().map(|(_, m)| m.ncols()).collect(),
        max_residual: worst.as_f64(),
    })
}

/// One axis of a scan grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridAxis {
    pub name: String,
    pub values: Vec<f64>,
}

/// Grid of metric parameters, e.g. `x=0.25:3:0.25,y=0.25:3:0.25` or
/// `a=0.5:2:0.25,b=0.5:2:0.25,c=-0.4:0.4:0.2`. Unlisted parameters default
/// to `x0 = x = y = a = b = 1`, `c = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub axes: Vec<GridAxis>,
}

const DIAGONAL_AXES: [&str; 3] = ["x0", "x", "y"];
const COUPLED_AXES: [&str; 4] = ["x0", "a", "b", "c"];

fn snap(v: f64) -> f64 {
    let r = (v * 1e12).round() / 1e12;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

impl GridSpec {
    pub fn is_coupled(&self) -> bool {
        self.axes.iter().any(|a| matches!(a.name.as_str(), "a" | "b" | "c"))
    }

    /// Grid points in order (first axis outermost).
    pub fn points(&self) -> Vec<MetricSpec> {
        let coupled = self.is_coupled();
        let mut combos: Vec<Vec<(String, f64)>> = vec![vec![]];
        for axis in &self.axes {
            let mut next = Vec::with_capacity(combos.len() * axis.values.len());
            for c in &combos {
                for &v in &axis.values {
                    let mut c2 = c.clone();
                    c2.push((axis.name.clone(), v));
                    next.push(c2);
                }
            }
            combos = next;
        }
        combos
            .into_iter()
            .map(|c| {
                let get = |n: &str, d: f64| c.iter().find(|(k, _)| k == n).map(|(_, v)| *v).unwrap_or(d);
                if coupled {
                    MetricSpec::coupled(get("x0", 1.0), get("a", 1.0), get("b", 1.0), get("c", 0.0))
                } else {
                    MetricSpec::diagonal(get("x0", 1.0), get("x", 1.0), get("y", 1.0))
                }
            })
            .collect()
    }
}

impl FromStr for GridSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut axes: Vec<GridAxis> = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (name, range) = part
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("grid axis `{part}` lacks `=`")))?;
            let name = name.trim().to_string();
            if !DIAGONAL_AXES.contains(&name.as_str()) && !COUPLED_AXES.contains(&name.as_str()) {
                return Err(Error::Parse(format!("unknown grid parameter `{name}`")));
            }
            if axes.iter().any(|a| a.name == name) {
                return Err(Error::Parse(format!("grid parameter `{name}` repeated")));
            }
            let nums: Vec<f64> = range
                .split(':')
                .map(|t| t.trim().parse::<f64>().map_err(|e| Error::Parse(format!("`{t}`: {e}"))))
                .collect::<Result<_>>()?;
            let values = match nums.as_slice() {
                [v] => vec![*v],
                [lo, hi, step] => {
                    if !(*step > 0.0) || hi < lo {
                        return Err(Error::Parse(format!("bad range `{range}`")));
                    }
                    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
                    (0..count).map(|i| snap(lo + i as f64 * step)).collect()
                }
                _ => return Err(Error::Parse(format!("range `{range}` must be `v` or `lo:hi:step`"))),
            };
            axes.push(GridAxis { name, values });
        }
        if axes.is_empty() {
            return Err(Error::Parse("empty grid".into()));
        }
        let spec = GridSpec { axes };
        let has_diag = spec.axes.iter().any(|a| a.name == "x" || a.name == "y");
        if spec.is_coupled() && has_diag {
            return Err(Error::Parse("grid mixes diagonal (x, y) and coupled (a, b, c) parameters".into()));
        }
        Ok(spec)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanRow {
    pub spec: MetricSpec,
    pub c1: f64,
    pub c2: f64,
    pub ratio_residual: f64,
    pub max_residual: f64,
    pub decision: Decision,
    pub seed: u64,
    pub samples: usize,
}

pub const CSV_HEADER: &str = "x0,x,y,a,b,c,c1,c2,ratio_residual,max_residual,decision,seed,samples";

impl ScanRow {
    pub fn csv_line(&self) -> String {
        let (x0, x, y, a, b, c) = match self.spec {
            MetricSpec::Diagonal { x0, x, y } => (x0, Some(x), Some(y), None, None, None),
            MetricSpec::Coupled { x0, a, b, c } => (x0, None, None, Some(a), Some(b), Some(c)),
        };
        let o = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{:e},{:e},{},{},{}",
            x0,
            o(x),
            o(y),
            o(a),
            o(b),
            o(c),
            self.c1,
            self.c2,
            self.ratio_residual,
            self.max_residual,
            self.decision,
            self.seed,
            self.samples
        )
    }
}

pub fn scan_csv(rows: &[ScanRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.csv_line());
        out.push('\n');
    }
    out
}

/// Runs `go_decision` on every admissible grid point (non-positive-definite
/// coupled points are skipped). Rows come back in grid order.
pub fn scan_metrics<T: Real>(
    space: &ReductiveSpace<T>,
    grid: &GridSpec,
    samples: usize,
    seed: u64,
    tol: f64,
) -> Result<Vec<ScanRow>> {
    if grid.is_coupled() && !space.same_group {
        return Err(Error::CoupledOnPairSpace);
    }
    let points: Vec<MetricSpec> = grid.points().into_iter().filter(|p| p.validate().is_ok()).collect();
    // build the shared bracket table once before fanning out
    space.adapted_ad();
    points
        .par_iter()
        .map(|spec| {
            let rep = go_decision(space, spec, samples, seed, tol)?;
            Ok(ScanRow {
                spec: *spec,
                c1: rep.c1,
                c2: rep.c2,
                ratio_residual: rep.ratio_residual,
                max_residual: rep.max_residual,
                decision: rep.decision,
                seed,
                samples,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::SpaceSpec;

    fn so4_su3() -> ReductiveSpace<f64> {
        SpaceSpec::from_json(
            r#"{"k":{"family":"so","n":3},"g1":{"family":"so","n":4},"g2":{"family":"su","n":3}}"#,
        )
        .unwrap()
        .build()
        .unwrap()
    }

    fn su3_su3() -> ReductiveSpace<f64> {
        SpaceSpec::from_json(
            r#"{"k":{"family":"so","n":3},"g1":{"family":"su","n":3},"g2":{"family":"su","n":3},"same_group":true}"#,
        )
        .unwrap()
        .build()
        .unwrap()
    }

    #[test]
    fn bi_invariant_metric_is_identity() {
        let sp = so4_su3();
        let a = metric_endomorphism(&sp, &MetricSpec::bi_invariant()).unwrap();
        assert!((a - DMatrix::identity(11, 11)).amax() < 1e-15);
    }

    #[test]
    fn coupled_needs_same_group() {
        let sp = so4_su3();
        assert!(matches!(
            metric_endomorphism(&sp, &MetricSpec::coupled(1.0, 1.0, 1.0, 0.2)),
            Err(Error::CoupledOnPairSpace)
        ));
        assert!(matches!(ratio_condition(&sp, &MetricSpec::coupled(1.0, 1.0, 1.0, 0.0)), Err(Error::CoupledSpec)));
    }

    #[test]
    fn coupled_eigenvalues() {
        let sp = su3_su3();
        let (a, b, c) = (1.3, 0.7, 0.4);
        let m = metric_endomorphism(&sp, &MetricSpec::coupled(1.0, a, b, c)).unwrap();
        let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().cloned().collect();
        ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let disc = ((a - b) * (a - b) + 4.0 * c * c).sqrt();
        let (lo, hi) = ((a + b - disc) / 2.0, (a + b + disc) / 2.0);
        let p = sp.dims.m1;
        let count = |t: f64| ev.iter().filter(|&&v| (v - t).abs() < 1e-12).count();
        assert_eq!(count(lo), p);
        assert_eq!(count(hi), p);
        assert_eq!(count(1.0), sp.dims.m0);
    }

    #[test]
    fn invalid_metrics() {
        assert!(MetricSpec::diagonal(1.0, 0.0, 1.0).validate().is_err());
        assert!(MetricSpec::coupled(1.0, 1.0, 1.0, 1.0).validate().is_err());
        assert!(MetricSpec::coupled(1.0, 1.0, 1.0, 0.5).validate().is_ok());
    }

    #[test]
    fn same_group_ratio_example() {
        let sp = su3_su3();
        let r = ratio_condition(&sp, &MetricSpec::diagonal(1.0, 2.0, 2.0 / 3.0)).unwrap();
        assert!(r < 1e-12);
        assert!((locus_y(&sp, 2.0).unwrap() - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn grid_parsing() {
        let g: GridSpec = "x=0.25:3:0.25,y=0.25:3.0:0.25".parse().unwrap();
        assert_eq!(g.points().len(), 144);
        let g: GridSpec = "a=0.5:2:0.25,b=0.5:2:0.25,c=-0.4:0.4:0.2".parse().unwrap();
        assert!(g.is_coupled());
        assert_eq!(g.axes[2].values, vec![-0.4, -0.2, 0.0, 0.2, 0.4]);
        assert!("x=1:0:1".parse::<GridSpec>().is_err());
        assert!("x=1,a=1".parse::<GridSpec>().is_err());
        assert!("q=1".parse::<GridSpec>().is_err());
        assert_eq!("x=1,y=1".parse::<GridSpec>().unwrap().points(), vec![MetricSpec::bi_invariant()]);
    }

    #[test]
    fn bi_invariant_is_go_with_zero_witness() {
        let sp = so4_su3();
        let rep = go_decision(&sp, &MetricSpec::bi_invariant(), 20, 1, 1e-8).unwrap();
        assert!(rep.is_go());
        assert!(rep.max_residual < 1e-12);
        for w in &rep.witnesses {
            assert!(w.iter().all(|v| v.abs() < 1e-10));
        }
    }

    #[test]
    fn probe_set_shape() {
        let sp = so4_su3();
        let probes = probe_set(&sp);
        assert_eq!(probes.len(), 7);
        let g = &probes[0];
        for b in [Block::M0, Block::M1, Block::M2] {
            let r = sp.block_range(b);
            let part = g.rows(r.start - 3, r.len());
            assert!(part.norm() > 0.0);
        }
    }
}
