//! Principal isotropy subalgebras: stabilizers of points in general position.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::LieAlgebra;
use crate::error::{Error, Result};
use crate::linalg;
use crate::representations::Representation;
use crate::scalar::Real;
use crate::spaces::{Embedding, ReductiveSpace};

/// Abelian threshold on `‖[u, v]‖_B` for B-orthonormal `u`, `v`.
pub const ABELIAN_TOL: f64 = 1e-8;
/// Relative singular-value cut for the kernel of `Z ↦ ρ(Z)v`.
pub const KERNEL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Structure {
    Trivial,
    Abelian,
    Nonabelian,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StabilizerReport {
    pub rep_label: String,
    pub algebra: String,
    pub module_dim: usize,
    pub trials: usize,
    pub seed: u64,
    /// Minimum stabilizer dimension over the trials.
    pub dim: usize,
    /// Stabilizer dimension at every trial point.
    pub trial_dims: Vec<usize>,
    /// Fraction of trials attaining `dim`.
    pub attainment: f64,
    /// B-orthonormal basis (algebra coordinates) at the first minimising point.
    pub basis: Vec<Vec<f64>>,
    pub structure: Structure,
    /// `max ‖[u, v]‖_B` over basis pairs.
    pub abelian_residual: f64,
    /// `max` component of `[u, v]` outside the stabilizer.
    pub closure_residual: f64,
}

/// Unit vector drawn from the standard Gaussian on the carrier.
pub fn random_unit<T: Real>(dim: usize, rng: &mut ChaCha8Rng) -> DVector<T> {
    loop {
        let v = DVector::from_fn(dim, |_, _| {
            let g: f64 = StandardNormal.sample(rng);
            T::lit(g)
        });
        let n = v.norm();
        if n > T::zero() {
            return v / n;
        }
    }
}

/// A linear action of a compact algebra on a real inner-product space.
pub trait LinearAction<T: Real>: Sync {
    fn algebra(&self) -> &Arc<LieAlgebra<T>>;
    fn label(&self) -> String;
    /// Dimension of the carrier.
    fn carrier_dim(&self) -> usize;
    /// Unit vector, uniform on the sphere of the carrier (carrier coordinates).
    fn random_vector(&self, rng: &mut ChaCha8Rng) -> DVector<T> {
        random_unit(self.carrier_dim(), rng)
    }
    /// Matrix with columns `e_i · v`, in any fixed coordinates.
    fn orbit_map(&self, v: &DVector<T>) -> DMatrix<T>;
}

impl<T: Real> LinearAction<T> for Representation<T> {
    fn algebra(&self) -> &Arc<LieAlgebra<T>> {
        &self.algebra
    }

    fn label(&self) -> String {
        self.label.clone()
    }

    fn carrier_dim(&self) -> usize {
        self.module_dim
    }

    fn orbit_map(&self, v: &DVector<T>) -> DMatrix<T> {
        let mut m = DMatrix::zeros(self.module_dim, self.algebra.dim);
        for (i, op) in self.operators.iter().enumerate() {
            m.set_column(i, &(op * v));
        }
        m
    }
}

/// Action of `k` on `p = g ⊖ k` by `Z·v = [φ(Z), v]`, evaluated through the
/// bracket of `g` without forming the isotropy matrices.
pub struct IsotropyAction<'a, T: Real> {
    pub embedding: &'a Embedding<T>,
    /// B-orthonormal basis of `p` in `g` coordinates.
    pub p: &'a DMatrix<T>,
}

impl<'a, T: Real> IsotropyAction<'a, T> {
    pub fn of_space(space: &'a ReductiveSpace<T>, factor: usize) -> Result<Self> {
        match factor {
            1 => Ok(Self { embedding: &space.emb1, p: &space.p1 }),
            2 => Ok(Self { embedding: &space.emb2, p: &space.p2 }),
            _ => Err(Error::Spec(format!("factor must be 1 or 2, got {factor}"))),
        }
    }
}

impl<'a, T: Real> LinearAction<T> for IsotropyAction<'a, T> {
    fn algebra(&self) -> &Arc<LieAlgebra<T>> {
        &self.embedding.source
    }

    fn label(&self) -> String {
        format!("isotropy({}/{})", self.embedding.target.label(), self.embedding.source.label())
    }

    fn carrier_dim(&self) -> usize {
        self.p.ncols()
    }

    fn orbit_map(&self, w: &DVector<T>) -> DMatrix<T> {
        let g = &self.embedding.target;
        let v = self.p * w;
        let d = self.embedding.source.dim;
        let mut m = DMatrix::zeros(g.dim, d);
        for a in 0..d {
            let z = self.embedding.map.column(a).into_owned();
            m.set_column(a, &g.bracket_coords(&z, &v));
        }
        m
    }
}

/// B-orthonormal basis (columns, algebra coordinates) of the kernel of
/// `Z ↦ Z·v`.
pub fn stabilizer_at<T: Real, A: LinearAction<T> + ?Sized>(action: &A, v: &DVector<T>) -> Result<DMatrix<T>> {
    if v.len() != action.carrier_dim() {
        return Err(Error::DimMismatch { expected: action.carrier_dim(), got: v.len() });
    }
    let m = action.orbit_map(v);
    let kernel = linalg::null_space(&m, T::lit(KERNEL_TOL));
    if kernel.ncols() == 0 {
        return Ok(kernel);
    }
    let alg = action.algebra();
    linalg::gram_schmidt(&kernel, Some(&alg.killing), alg.tol.rank)
}

/// `(abelian residual, closure residual)` of a B-orthonormal basis.
pub fn bracket_residuals<T: Real>(rep_alg: &LieAlgebra<T>, basis: &DMatrix<T>) -> (T, T) {
    let k = basis.ncols();
    let mut ab = T::zero();
    let mut cl = T::zero();
    let kil = &rep_alg.killing;
    for i in 0..k {
        for j in (i + 1)..k {
            let br = rep_alg.bracket_coords(&basis.column(i).into_owned(), &basis.column(j).into_owned());
            let norm = linalg::inner(kil, &br, &br).max(T::zero()).sqrt();
            ab = ab.max(norm);
            let coeffs = basis.transpose() * (kil * &br);
            let rest = &br - basis * coeffs;
            cl = cl.max(linalg::inner(kil, &rest, &rest).max(T::zero()).sqrt());
        }
    }
    (ab, cl)
}

pub fn classify_structure(dim: usize, abelian_residual: f64) -> Structure {
    if dim == 0 {
        Structure::Trivial
    } else if abelian_residual < ABELIAN_TOL {
        Structure::Abelian
    } else {
        Structure::Nonabelian
    }
}

/// Generic stabilizer: minimum dimension over `trials` random unit vectors.
pub fn generic_stabilizer<T: Real, A: LinearAction<T> + ?Sized>(
    action: &A,
    trials: usize,
    seed: u64,
) -> Result<StabilizerReport> {
    if trials < 3 {
        return Err(Error::Spec(format!("need at least 3 trials, got {trials}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<DVector<T>> = (0..trials).map(|_| action.random_vector(&mut rng)).collect();
    let stabs: Vec<DMatrix<T>> = points.par_iter().map(|v| stabilizer_at(action, v)).collect::<Result<_>>()?;
    let trial_dims: Vec<usize> = stabs.iter().map(|s| s.ncols()).collect();
    let dim = *trial_dims.iter().min().unwrap();
    let first = trial_dims.iter().position(|&d| d == dim).unwrap();
    let basis = &stabs[first];
    let alg = action.algebra();
    let (ab, cl) = bracket_residuals(alg, basis);
    let abelian_residual = ab.as_f64();
    Ok(StabilizerReport {
        rep_label: action.label(),
        algebra: alg.label(),
        module_dim: action.carrier_dim(),
        trials,
        seed,
        dim,
        attainment: trial_dims.iter().filter(|&&d| d == dim).count() as f64 / trials as f64,
        trial_dims,
        basis: basis.column_iter().map(|c| c.iter().map(|v| v.as_f64()).collect()).collect(),
        structure: classify_structure(dim, abelian_residual),
        abelian_residual,
        closure_residual: cl.as_f64(),
    })
}

/// `exp(t·ρ(Z)) v`.
pub fn move_along<T: Real>(rep: &Representation<T>, v: &DVector<T>, z: &DVector<T>, t: T) -> DVector<T> {
    (rep.operator_of(z) * t).exp() * v
}

/// Isotropy representation of `k` on `p_i` (`factor` 1 or 2), in the
/// B-orthonormal basis of `p_i`.
pub fn isotropy_representation<T: Real>(space: &ReductiveSpace<T>, factor: usize) -> Result<Representation<T>> {
    let (emb, p) = match factor {
        1 => (&space.emb1, &space.p1),
        2 => (&space.emb2, &space.p2),
        _ => return Err(Error::Spec(format!("factor must be 1 or 2, got {factor}"))),
    };
    let g = &emb.target;
    let kp = &g.killing * p;
    let operators = (0..space.k.dim)
        .map(|i| {
            let z = emb.map.column(i).into_owned();
            kp.transpose() * g.ad_of(&z) * p
        })
        .collect();
    Ok(Representation {
        algebra: Arc::clone(&space.k),
        module_dim: p.ncols(),
        operators,
        label: format!("isotropy({}/{})", g.label(), space.k.label()),
        complex_structure: None,
    })
}

/// Alternatives for a pair of principal isotropy subalgebras.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairCase {
    /// Some principal isotropy subalgebra is trivial.
    Case1,
    /// Some principal isotropy subalgebra is a nonzero torus.
    Case2,
    /// Neither: the dichotomy is violated.
    Neither,
}

pub fn classify_pair(a: (usize, Structure), b: (usize, Structure)) -> PairCase {
    let trivial = |(d, _): (usize, Structure)| d == 0;
    let torus = |(d, s): (usize, Structure)| d > 0 && s == Structure::Abelian;
    if trivial(a) || trivial(b) {
        PairCase::Case1
    } else if torus(a) || torus(b) {
        PairCase::Case2
    } else {
        PairCase::Neither
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairClassification {
    pub iso1: StabilizerReport,
    pub iso2: StabilizerReport,
    pub case: PairCase,
}

impl PairClassification {
    pub fn alarm(&self) -> bool {
        self.case == PairCase::Neither
    }
}

pub fn classify_actions<T: Real, A: LinearAction<T> + ?Sized, B: LinearAction<T> + ?Sized>(
    rho1: &A,
    rho2: &B,
    trials: usize,
    seed: u64,
) -> Result<PairClassification> {
    let iso1 = generic_stabilizer(rho1, trials, seed)?;
    let iso2 = generic_stabilizer(rho2, trials, seed)?;
    let case = classify_pair((iso1.dim, iso1.structure), (iso2.dim, iso2.structure));
    Ok(PairClassification { iso1, iso2, case })
}

/// Classification from the isotropy representations of a built space.
pub fn classify_for_space<T: Real>(space: &ReductiveSpace<T>, trials: usize, seed: u64) -> Result<PairClassification> {
    classify_actions(&IsotropyAction::of_space(space, 1)?, &IsotropyAction::of_space(space, 2)?, trials, seed)
}
