//! Real orthogonal representations built compositionally from the defining
//! and adjoint representations.
//!
//! Every carrier space keeps the inner product induced by its construction,
//! so generators stay skew-symmetric. A representation may carry a complex
//! structure `J` (an orthogonal operator with `J² = −1` commuting with every
//! generator); the defining representations of `su(n)` and `sp(n)` do.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::algebra::{complex_structure, Family, LieAlgebra};
use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::Real;

#[derive(Debug, Clone)]
pub struct Representation<T: Real> {
    pub algebra: Arc<LieAlgebra<T>>,
    pub module_dim: usize,
    /// `ρ(e_i)` for each basis element of the algebra.
    pub operators: Vec<DMatrix<T>>,
    /// Construction tree, e.g. `traceless(sym2(defining))`.
    pub label: String,
    pub complex_structure: Option<DMatrix<T>>,
}

impl<T: Real> Representation<T> {
    fn derived(&self, label: String, operators: Vec<DMatrix<T>>, j: Option<DMatrix<T>>) -> Self {
        let module_dim = operators.first().map(|m| m.nrows()).unwrap_or(0);
        Self { algebra: Arc::clone(&self.algebra), module_dim, operators, label, complex_structure: j }
    }

    /// `ρ(X)` for an algebra element given in coordinates.
    pub fn operator_of(&self, x: &nalgebra::DVector<T>) -> DMatrix<T> {
        let mut m = DMatrix::zeros(self.module_dim, self.module_dim);
        for (op, &c) in self.operators.iter().zip(x.iter()) {
            if c != T::zero() {
                m += op * c;
            }
        }
        m
    }

    fn op_scale(&self) -> T {
        self.operators.iter().fold(T::zero(), |a, m| a.max(linalg::max_abs(m))).max(T::lit(1e-300_f64.max(f32::MIN_POSITIVE as f64)))
    }

    /// `max ‖ρ([e_i, e_j]) − [ρ(e_i), ρ(e_j)]‖_∞`, relative to `max|ρ|²`.
    pub fn homomorphism_residual(&self) -> T {
        let d = self.algebra.dim;
        let mut worst = T::zero();
        for i in 0..d {
            for j in (i + 1)..d {
                let mut lhs = DMatrix::zeros(self.module_dim, self.module_dim);
                for &(k, c) in self.algebra.structure.pair(i, j) {
                    lhs += &self.operators[k] * c;
                }
                let rhs = linalg::commutator(&self.operators[i], &self.operators[j]);
                worst = worst.max(linalg::max_abs(&(lhs - rhs)));
            }
        }
        let s = self.op_scale();
        worst / (s * s)
    }

    /// Same check on a sample of basis pairs; cheaper for large carriers.
    pub fn homomorphism_residual_on(&self, pairs: &[(usize, usize)]) -> T {
        let mut worst = T::zero();
        for &(i, j) in pairs {
            let mut lhs = DMatrix::zeros(self.module_dim, self.module_dim);
            for &(k, c) in self.algebra.structure.pair(i, j) {
                lhs += &self.operators[k] * c;
            }
            let rhs = linalg::commutator(&self.operators[i], &self.operators[j]);
            worst = worst.max(linalg::max_abs(&(lhs - rhs)));
        }
        let s = self.op_scale();
        worst / (s * s)
    }

    /// `max ‖ρ(e_i) + ρ(e_i)ᵀ‖_∞`, relative to `max|ρ|`.
    pub fn skew_residual(&self) -> T {
        let worst = self
            .operators
            .iter()
            .fold(T::zero(), |a, m| a.max(linalg::max_abs(&(m + m.transpose()))));
        worst / self.op_scale()
    }

    /// Restriction to the invariant subspace spanned by the orthonormal
    /// columns of `q`.
    pub fn restrict(&self, q: &DMatrix<T>, label: String) -> Self {
        let ops = self.operators.iter().map(|m| q.transpose() * m * q).collect();
        let j = self.complex_structure.as_ref().map(|j| q.transpose() * j * q);
        self.derived(label, ops, j)
    }
}

pub fn defining_rep<T: Real>(alg: &Arc<LieAlgebra<T>>) -> Representation<T> {
    let size = alg.mat_size();
    let j = match alg.family {
        Family::So => None,
        Family::Su | Family::Sp => Some(complex_structure(size / 2)),
    };
    Representation {
        algebra: Arc::clone(alg),
        module_dim: size,
        operators: alg.basis_mats.clone(),
        label: "defining".into(),
        complex_structure: j,
    }
}

/// Adjoint representation written in a B-orthonormal basis, so that the
/// generators are skew-symmetric.
pub fn adjoint_rep<T: Real>(alg: &Arc<LieAlgebra<T>>) -> Representation<T> {
    // K = L Lᵀ; coordinates y = Lᵀ x are orthonormal.
    let chol = nalgebra::Cholesky::new(alg.killing.clone()).expect("minus Killing form is positive definite");
    let l = chol.l();
    let lt = l.transpose();
    let lt_inv = lt.clone().try_inverse().expect("invertible Cholesky factor");
    let ops = (0..alg.dim).map(|i| &lt * alg.ad_matrix(i) * &lt_inv).collect();
    Representation {
        algebra: Arc::clone(alg),
        module_dim: alg.dim,
        operators: ops,
        label: "adjoint".into(),
        complex_structure: None,
    }
}

fn pair_index(d: usize, symmetric: bool) -> (Vec<(usize, usize)>, Vec<Vec<usize>>) {
    let mut pairs = Vec::new();
    let mut index = vec![vec![usize::MAX; d]; d];
    for a in 0..d {
        let start = if symmetric { a } else { a + 1 };
        for b in start..d {
            index[a][b] = pairs.len();
            index[b][a] = pairs.len();
            pairs.push((a, b));
        }
    }
    (pairs, index)
}

/// Matrix of `Σ_t A_t ⊗ B_t` restricted to the symmetric (or alternating)
/// square, in the orthonormal basis `e_a∨e_b`, `e_a∧e_b`.
fn square_operator<T: Real>(terms: &[(&DMatrix<T>, &DMatrix<T>)], d: usize, symmetric: bool) -> DMatrix<T> {
    let (pairs, index) = pair_index(d, symmetric);
    let r2 = T::lit(std::f64::consts::FRAC_1_SQRT_2);
    let mut out = DMatrix::zeros(pairs.len(), pairs.len());
    for (q, &(c, dd)) in pairs.iter().enumerate() {
        // u_q as a list of simple tensors
        let input: Vec<(usize, usize, T)> = if c == dd {
            vec![(c, c, T::one())]
        } else if symmetric {
            vec![(c, dd, r2), (dd, c, r2)]
        } else {
            vec![(c, dd, r2), (dd, c, -r2)]
        };
        for &(a_mat, b_mat) in terms {
            for &(x, y, w) in &input {
                for r in 0..d {
                    let ar = a_mat[(r, x)];
                    if ar == T::zero() {
                        continue;
                    }
                    for s in 0..d {
                        let bs = b_mat[(s, y)];
                        if bs == T::zero() {
                            continue;
                        }
                        let coef = w * ar * bs;
                        if r == s {
                            if symmetric {
                                out[(index[r][r], q)] += coef;
                            }
                        } else {
                            let p = index[r][s];
                            let sign = if symmetric || r < s { T::one() } else { -T::one() };
                            out[(p, q)] += coef * r2 * sign;
                        }
                    }
                }
            }
        }
    }
    out
}

fn square_rep<T: Real>(rep: &Representation<T>, symmetric: bool) -> Vec<DMatrix<T>> {
    let d = rep.module_dim;
    let id = DMatrix::identity(d, d);
    rep.operators
        .iter()
        .map(|x| square_operator(&[(x, &id), (&id, x)], d, symmetric))
        .collect()
}

pub fn sym2_rep<T: Real>(rep: &Representation<T>) -> Representation<T> {
    rep.derived(format!("sym2({})", rep.label), square_rep(rep, true), None)
}

pub fn alt2_rep<T: Real>(rep: &Representation<T>) -> Representation<T> {
    rep.derived(format!("alt2({})", rep.label), square_rep(rep, false), None)
}

/// Complex symmetric (or exterior) square of a representation with a complex
/// structure, realified: the `−1` eigenspace of `J⊗J` inside the real square.
fn complex_square<T: Real>(rep: &Representation<T>, symmetric: bool) -> Result<Representation<T>> {
    let name = if symmetric { "cx_sym2" } else { "cx_alt2" };
    let j = rep.complex_structure.as_ref().ok_or_else(|| Error::NotComplex(name.into()))?;
    let d = rep.module_dim;
    let id = DMatrix::identity(d, d);
    let jj = square_operator(&[(j, j)], d, symmetric);
    let q = linalg::eigenspace(&jj, |l| l < T::zero());
    let real_square = square_rep(rep, symmetric);
    let j_square = square_operator(&[(j, &id), (&id, j)], d, symmetric) * T::lit(0.5);
    let ops = real_square.iter().map(|m| q.transpose() * m * &q).collect();
    let new_j = q.transpose() * j_square * &q;
    Ok(rep.derived(format!("{}({})", name, rep.label), ops, Some(new_j)))
}

pub fn cx_sym2_rep<T: Real>(rep: &Representation<T>) -> Result<Representation<T>> {
    complex_square(rep, true)
}

pub fn cx_alt2_rep<T: Real>(rep: &Representation<T>) -> Result<Representation<T>> {
    complex_square(rep, false)
}

fn kron<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>) -> DMatrix<T> {
    a.kronecker(b)
}

fn same_algebra<T: Real>(a: &Representation<T>, b: &Representation<T>) -> Result<()> {
    if Arc::ptr_eq(&a.algebra, &b.algebra)
        || (a.algebra.family == b.algebra.family && a.algebra.n == b.algebra.n)
    {
        Ok(())
    } else {
        Err(Error::AlgebraMismatch(a.algebra.label(), b.algebra.label()))
    }
}

/// Real tensor product `V ⊗_ℝ W`.
pub fn tensor_rep<T: Real>(a: &Representation<T>, b: &Representation<T>) -> Result<Representation<T>> {
    same_algebra(a, b)?;
    let ia = DMatrix::identity(a.module_dim, a.module_dim);
    let ib = DMatrix::identity(b.module_dim, b.module_dim);
    let ops = a
        .operators
        .iter()
        .zip(&b.operators)
        .map(|(x, y)| kron(x, &ib) + kron(&ia, y))
        .collect();
    let j = match (&a.complex_structure, &b.complex_structure) {
        (Some(ja), _) => Some(kron(ja, &ib)),
        (None, Some(jb)) => Some(kron(&ia, jb)),
        _ => None,
    };
    Ok(a.derived(format!("tensor({},{})", a.label, b.label), ops, j))
}

/// Dual representation. For orthogonal generators `−ρᵀ = ρ`, so only the
/// complex structure changes (the dual of a complex representation is its
/// conjugate).
pub fn dual_rep<T: Real>(rep: &Representation<T>) -> Representation<T> {
    let j = rep.complex_structure.as_ref().map(|j| -j);
    rep.derived(format!("dual({})", rep.label), rep.operators.clone(), j)
}

pub fn direct_sum<T: Real>(a: &Representation<T>, b: &Representation<T>) -> Result<Representation<T>> {
    same_algebra(a, b)?;
    let n = a.module_dim + b.module_dim;
    let block = |x: &DMatrix<T>, y: &DMatrix<T>| {
        let mut m = DMatrix::zeros(n, n);
        m.view_mut((0, 0), (a.module_dim, a.module_dim)).copy_from(x);
        m.view_mut((a.module_dim, a.module_dim), (b.module_dim, b.module_dim)).copy_from(y);
        m
    };
    let ops = a.operators.iter().zip(&b.operators).map(|(x, y)| block(x, y)).collect();
    let j = match (&a.complex_structure, &b.complex_structure) {
        (Some(ja), Some(jb)) => Some(block(ja, jb)),
        _ => None,
    };
    Ok(a.derived(format!("direct_sum({},{})", a.label, b.label), ops, j))
}

/// Removes the trivial summands (vectors fixed by the whole algebra).
pub fn traceless_part<T: Real>(rep: &Representation<T>) -> Representation<T> {
    let d = rep.module_dim;
    let mut casimir = DMatrix::zeros(d, d);
    for m in &rep.operators {
        casimir += m.transpose() * m;
    }
    let scale = linalg::max_abs(&casimir);
    let cut = rep.algebra.tol.rank.sqrt() * scale;
    let q = linalg::eigenspace(&casimir, |l| l > cut);
    rep.restrict(&q, format!("traceless({})", rep.label))
}

/// Forgets the complex structure, keeping the real operators.
pub fn realify_rep<T: Real>(rep: &Representation<T>) -> Result<Representation<T>> {
    if rep.complex_structure.is_none() {
        return Err(Error::NotComplex("realify".into()));
    }
    Ok(rep.derived(format!("realify({})", rep.label), rep.operators.clone(), None))
}

/// Construction tree of a representation, written as nested calls such as
/// `traceless(sym2(defining))` or `direct_sum(defining,dual(defining))`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RepTree {
    Defining,
    Adjoint,
    Sym2(Box<RepTree>),
    Alt2(Box<RepTree>),
    CxSym2(Box<RepTree>),
    CxAlt2(Box<RepTree>),
    Tensor(Box<RepTree>, Box<RepTree>),
    DirectSum(Box<RepTree>, Box<RepTree>),
    Dual(Box<RepTree>),
    Traceless(Box<RepTree>),
    Realify(Box<RepTree>),
}

impl RepTree {
    pub fn build<T: Real>(&self, alg: &Arc<LieAlgebra<T>>) -> Result<Representation<T>> {
        Ok(match self {
            RepTree::Defining => defining_rep(alg),
            RepTree::Adjoint => adjoint_rep(alg),
            RepTree::Sym2(a) => sym2_rep(&a.build(alg)?),
            RepTree::Alt2(a) => alt2_rep(&a.build(alg)?),
            RepTree::CxSym2(a) => cx_sym2_rep(&a.build(alg)?)?,
            RepTree::CxAlt2(a) => cx_alt2_rep(&a.build(alg)?)?,
            RepTree::Tensor(a, b) => tensor_rep(&a.build(alg)?, &b.build(alg)?)?,
            RepTree::DirectSum(a, b) => direct_sum(&a.build(alg)?, &b.build(alg)?)?,
            RepTree::Dual(a) => dual_rep(&a.build(alg)?),
            RepTree::Traceless(a) => traceless_part(&a.build(alg)?),
            RepTree::Realify(a) => realify_rep(&a.build(alg)?)?,
        })
    }
}

impl fmt::Display for RepTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RepTree::Defining => write!(f, "defining"),
            RepTree::Adjoint => write!(f, "adjoint"),
            RepTree::Sym2(a) => write!(f, "sym2({a})"),
            RepTree::Alt2(a) => write!(f, "alt2({a})"),
            RepTree::CxSym2(a) => write!(f, "cx_sym2({a})"),
            RepTree::CxAlt2(a) => write!(f, "cx_alt2({a})"),
            RepTree::Tensor(a, b) => write!(f, "tensor({a},{b})"),
            RepTree::DirectSum(a, b) => write!(f, "direct_sum({a},{b})"),
            RepTree::Dual(a) => write!(f, "dual({a})"),
            RepTree::Traceless(a) => write!(f, "traceless({a})"),
            RepTree::Realify(a) => write!(f, "realify({a})"),
        }
    }
}

impl FromStr for RepTree {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let (tree, rest) = parse_tree(&compact)?;
        if !rest.is_empty() {
            return Err(Error::Parse(format!("trailing input `{rest}` in `{s}`")));
        }
        Ok(tree)
    }
}

fn parse_tree(s: &str) -> Result<(RepTree, &str)> {
    let end = s.find(|c: char| !(c.is_ascii_alphanumeric() || c == '_')).unwrap_or(s.len());
    let (name, mut rest) = s.split_at(end);
    let mut args = Vec::new();
    if let Some(r) = rest.strip_prefix('(') {
        rest = r;
        loop {
            let (arg, r) = parse_tree(rest)?;
            args.push(arg);
            if let Some(r) = r.strip_prefix(',') {
                rest = r;
            } else if let Some(r) = r.strip_prefix(')') {
                rest = r;
                break;
            } else {
                return Err(Error::Parse(format!("expected `,` or `)` before `{r}`")));
            }
        }
    }
    let arity = |n: usize| {
        if args.len() == n {
            Ok(())
        } else {
            Err(Error::Parse(format!("`{name}` takes {n} argument(s), got {}", args.len())))
        }
    };
    let mut it = args.clone().into_iter().map(Box::new);
    let tree = match name {
        "defining" => {
            arity(0)?;
            RepTree::Defining
        }
        "adjoint" => {
            arity(0)?;
            RepTree::Adjoint
        }
        "sym2" | "alt2" | "cx_sym2" | "cx_alt2" | "dual" | "traceless" | "realify" => {
            arity(1)?;
            let a = it.next().unwrap();
            match name {
                "sym2" => RepTree::Sym2(a),
                "alt2" => RepTree::Alt2(a),
                "cx_sym2" => RepTree::CxSym2(a),
                "cx_alt2" => RepTree::CxAlt2(a),
                "dual" => RepTree::Dual(a),
                "traceless" => RepTree::Traceless(a),
                _ => RepTree::Realify(a),
            }
        }
        "tensor" | "direct_sum" => {
            arity(2)?;
            let a = it.next().unwrap();
            let b = it.next().unwrap();
            if name == "tensor" {
                RepTree::Tensor(a, b)
            } else {
                RepTree::DirectSum(a, b)
            }
        }
        "" => return Err(Error::Parse(format!("expected a representation at `{s}`"))),
        other => return Err(Error::Parse(format!("unknown representation `{other}`"))),
    };
    Ok((tree, rest))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::build_classical;

    fn alg(f: Family, n: usize) -> Arc<LieAlgebra<f64>> {
        Arc::new(build_classical(f, n).unwrap())
    }

    #[test]
    fn defining_dims() {
        assert_eq!(defining_rep(&alg(Family::So, 4)).module_dim, 4);
        let su3 = defining_rep(&alg(Family::Su, 3));
        assert_eq!(su3.module_dim, 6);
        assert!(su3.homomorphism_residual() < 1e-9);
        assert!(su3.skew_residual() < 1e-10);
    }

    #[test]
    fn adjoint_is_skew_and_kills_itself() {
        let a = alg(Family::Su, 3);
        let ad = adjoint_rep(&a);
        assert_eq!(ad.module_dim, 8);
        assert!(ad.skew_residual() < 1e-10);
        assert!(ad.homomorphism_residual() < 1e-9);
        // ad X · X = 0 in orthonormal coordinates
        let x = nalgebra::DVector::from_fn(8, |i, _| (0.3 * i as f64).sin() + 0.1);
        let l = nalgebra::Cholesky::new(a.killing.clone()).unwrap().l();
        let y = l.transpose() * &x;
        assert!((ad.operator_of(&x) * y).amax() < 1e-12);
    }

    #[test]
    fn squares_and_traceless() {
        let so5 = alg(Family::So, 5);
        let def = defining_rep(&so5);
        let alt = alt2_rep(&def);
        assert_eq!(alt.module_dim, 10);
        let sym = sym2_rep(&def);
        assert_eq!(sym.module_dim, 15);
        assert!(sym.homomorphism_residual() < 1e-9);
        let s0 = traceless_part(&sym);
        assert_eq!(s0.module_dim, 14);
        assert!(s0.homomorphism_residual() < 1e-9);
        assert!(s0.skew_residual() < 1e-10);
    }

    #[test]
    fn tensor_and_sum_dims() {
        let so4 = alg(Family::So, 4);
        let def = defining_rep(&so4);
        assert_eq!(tensor_rep(&def, &def).unwrap().module_dim, 16);
        assert_eq!(direct_sum(&def, &def).unwrap().module_dim, 8);
        let other = defining_rep(&alg(Family::So, 5));
        assert!(matches!(tensor_rep(&def, &other), Err(Error::AlgebraMismatch(..))));
    }

    #[test]
    fn complex_squares_of_su3() {
        let su3 = alg(Family::Su, 3);
        let def = defining_rep(&su3);
        let s = cx_sym2_rep(&def).unwrap();
        assert_eq!(s.module_dim, 12);
        assert!(s.homomorphism_residual() < 1e-9);
        let j = s.complex_structure.as_ref().unwrap();
        assert!((j * j + DMatrix::identity(12, 12)).amax() < 1e-12);
        for op in &s.operators {
            assert!(linalg::commutator(op, j).amax() < 1e-12);
        }
        let a = cx_alt2_rep(&def).unwrap();
        assert_eq!(a.module_dim, 6);
        assert!(matches!(cx_sym2_rep(&defining_rep(&alg(Family::So, 3))), Err(Error::NotComplex(_))));
    }

    #[test]
    fn tree_round_trip() {
        for text in ["defining", "traceless(sym2(defining))", "direct_sum(defining,dual(defining))", "tensor(adjoint, realify(cx_sym2(defining)))"] {
            let t: RepTree = text.parse().unwrap();
            let again: RepTree = t.to_string().parse().unwrap();
            assert_eq!(t, again);
        }
        for bad in ["", "sym2", "sym2(defining", "tensor(defining)", "foo", "defining)"] {
            assert!(bad.parse::<RepTree>().is_err(), "{bad}");
        }
        let so5 = alg(Family::So, 5);
        let r = "traceless(sym2(defining))".parse::<RepTree>().unwrap().build(&so5).unwrap();
        assert_eq!(r.module_dim, 14);
        assert_eq!(r.label, "traceless(sym2(defining))");
    }
}
