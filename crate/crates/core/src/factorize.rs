//! Eigendecomposition of the grouped interaction matrix and its conversion
//! into parity-pure slices.
//!
//! `M = O diag(w) O^T` is computed with a dense symmetric solver. Because `M`
//! commutes with the pair swap `P: idx(x,y) -> idx(y,x)`, every eigenspace has
//! a basis of `P`-even and `P`-odd vectors; those reshape to symmetric and
//! antisymmetric `N x N` slices respectively, which is what makes the mixed
//! terms of the expansion vanish. Inside degenerate clusters the solver is free
//! to return mixed vectors, so [`resolve_parity`] rotates each cluster onto
//! the parity eigenspaces before slicing.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{herm_eigen, max_abs, max_abs_c, real_to_complex, sym_eigen};
use crate::parallel;
use crate::tensor::{pair_index, pair_swap, GroupedMatrix, TOL_SYM};

/// Slices whose `|weight|` does not exceed this are always dropped.
pub const ZERO_WEIGHT: f64 = 1e-14;

/// Components below this magnitude are ignored when fixing eigenvector signs.
const SIGN_EPS: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorizationOptions {
    /// Eigenvalues closer than `degeneracy_tol * max(1, |M|_F)` are clustered.
    pub degeneracy_tol: f64,
    /// Largest parity leakage accepted when classifying a slice.
    pub parity_tol: f64,
    /// Slices with `|weight| <= max(weight_cutoff, 1e-14)` are dropped.
    pub weight_cutoff: f64,
}

impl Default for FactorizationOptions {
    fn default() -> Self {
        Self {
            degeneracy_tol: 1e-9,
            parity_tol: 1e-9,
            weight_cutoff: 0.0,
        }
    }
}

impl FactorizationOptions {
    pub fn validate(&self) -> Result<()> {
        for (name, x) in [
            ("degeneracy_tol", self.degeneracy_tol),
            ("parity_tol", self.parity_tol),
            ("weight_cutoff", self.weight_cutoff),
        ] {
            if !(x >= 0.0 && x.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite and non-negative, got {x}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Symmetric,
    Antisymmetric,
}

impl Parity {
    /// Sign of the `lambda_a lambda_b n_a n_b` coefficients: `(i)(i) = -1` for
    /// antisymmetric slices.
    pub fn sign(self) -> f64 {
        match self {
            Parity::Symmetric => 1.0,
            Parity::Antisymmetric => -1.0,
        }
    }
}

/// Orthogonal eigendecomposition of the grouped matrix, columns ordered by
/// descending `|weight|`.
#[derive(Debug, Clone, PartialEq)]
pub struct SchurResult {
    pub weights: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl SchurResult {
    pub fn orthogonality_defect(&self) -> f64 {
        let n = self.vectors.ncols();
        max_abs(&(self.vectors.transpose() * &self.vectors - DMatrix::identity(n, n)))
    }

    pub fn reassemble(&self) -> DMatrix<f64> {
        &self.vectors * DMatrix::from_diagonal(&self.weights) * self.vectors.transpose()
    }
}

/// Eigenvector of the grouped matrix with definite pair-swap parity.
#[derive(Debug, Clone, PartialEq)]
pub struct ParityVector {
    pub weight: f64,
    pub parity: Parity,
    pub vector: DVector<f64>,
}

/// A reshaped eigenvector with its weight, before diagonalization.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifiedSlice {
    pub weight: f64,
    pub parity: Parity,
    pub slice: DMatrix<f64>,
}

/// One term `L` of the factorization.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorSlice {
    pub weight: f64,
    pub parity: Parity,
    /// Symmetric or antisymmetric real `N x N` matrix.
    pub slice: DMatrix<f64>,
    /// Unitary `U` diagonalizing `slice`.
    pub rotation: DMatrix<Complex64>,
    /// `slice = U diag(lambdas) U†` for symmetric slices and
    /// `slice = U diag(i lambdas) U†` for antisymmetric ones.
    pub lambdas: DVector<f64>,
}

impl FactorSlice {
    pub fn n_modes(&self) -> usize {
        self.slice.nrows()
    }

    /// Hermitian `K = U diag(lambdas) U†`, the coefficients of the one-body
    /// operator `sum_a lambda_a n_a`.
    pub fn number_coefficients(&self) -> DMatrix<Complex64> {
        let lam = DMatrix::from_diagonal(&self.lambdas.map(|x| Complex64::new(x, 0.0)));
        &self.rotation * lam * self.rotation.adjoint()
    }

    /// `U diag(lambdas or i lambdas) U†`, which should reproduce `slice`.
    pub fn reconstructed_slice(&self) -> DMatrix<Complex64> {
        let unit = match self.parity {
            Parity::Symmetric => Complex64::new(1.0, 0.0),
            Parity::Antisymmetric => Complex64::new(0.0, 1.0),
        };
        let d = DMatrix::from_diagonal(&self.lambdas.map(|x| unit * x));
        &self.rotation * d * self.rotation.adjoint()
    }

    pub fn unitarity_defect(&self) -> f64 {
        let n = self.rotation.ncols();
        max_abs_c(&(self.rotation.adjoint() * &self.rotation - DMatrix::identity(n, n)))
    }

    pub fn reconstruction_defect(&self) -> f64 {
        max_abs_c(&(self.reconstructed_slice() - real_to_complex(&self.slice)))
    }

    /// Row-major flattening `vec(slice)[idx(p,s)] = slice[p,s]`.
    pub fn flattened(&self) -> DVector<f64> {
        flatten(&self.slice)
    }
}

pub(crate) fn flatten(m: &DMatrix<f64>) -> DVector<f64> {
    let n = m.nrows();
    DVector::from_fn(n * n, |k, _| m[(k / n, k % n)])
}

fn sort_desc_abs(weights: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        weights[b]
            .abs()
            .total_cmp(&weights[a].abs())
            .then(weights[b].total_cmp(&weights[a]))
            .then(a.cmp(&b))
    });
    order
}

/// Flips `v` so its first component above `SIGN_EPS` is positive.
fn fix_sign(v: &mut DVector<f64>) {
    if let Some(x) = v.iter().find(|x| x.abs() > SIGN_EPS) {
        if *x < 0.0 {
            v.neg_mut();
        }
    }
}

/// Eigendecomposes the grouped matrix. Weights are signed; columns are sorted
/// by descending `|weight|` and each has its first non-negligible component
/// positive.
pub fn schur_grouped(m: &GroupedMatrix) -> Result<SchurResult> {
    let tol = TOL_SYM * m.max_abs().max(1.0);
    let defect = m.transpose_defect();
    if defect > tol {
        return Err(Error::Symmetry {
            defect,
            tolerance: tol,
        });
    }
    let (vals, vecs) = sym_eigen(m.entries())?;
    let w: Vec<f64> = vals.iter().copied().collect();
    let order = sort_desc_abs(&w);
    let dim = w.len();
    let mut vectors = DMatrix::zeros(dim, dim);
    for (col, &k) in order.iter().enumerate() {
        let mut v = vecs.column(k).into_owned();
        fix_sign(&mut v);
        vectors.set_column(col, &v);
    }
    Ok(SchurResult {
        weights: DVector::from_iterator(dim, order.iter().map(|&k| w[k])),
        vectors,
    })
}

fn permute(v: &DVector<f64>, perm: &[usize]) -> DVector<f64> {
    DVector::from_fn(v.len(), |i, _| v[perm[i]])
}

/// Projects `v` exactly onto the `P`-even (`sign = 1`) or `P`-odd space and
/// normalizes it. The mirrored entries are computed from the same operands,
/// so the result has bit-exact parity.
fn project_parity(v: &DVector<f64>, perm: &[usize], parity: Parity) -> DVector<f64> {
    let pv = permute(v, perm);
    let mut out = match parity {
        Parity::Symmetric => (v + &pv) * 0.5,
        Parity::Antisymmetric => (v - &pv) * 0.5,
    };
    let norm = out.norm();
    if norm > 0.0 {
        out /= norm;
    }
    out
}

/// Orthonormal basis of the column space of `q` (orthonormal columns) that
/// depends only on the subspace: Gram-Schmidt over the columns of the
/// projector `q q^T`, each step taking the lowest-index column whose residual
/// is within a relative `1e-8` of the largest.
fn canonical_basis(q: &DMatrix<f64>) -> Vec<DVector<f64>> {
    let k = q.ncols();
    let mut residuals: Vec<DVector<f64>> = (0..q.nrows())
        .map(|i| q * q.row(i).transpose())
        .collect();
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(k);
    for _ in 0..k {
        let norms: Vec<f64> = residuals.iter().map(|r| r.norm()).collect();
        let max = norms.iter().copied().fold(0.0, f64::max);
        let pick = norms
            .iter()
            .position(|&x| x >= max * (1.0 - 1e-8))
            .expect("non-empty");
        let b = &residuals[pick] / norms[pick];
        for r in residuals.iter_mut() {
            let c = b.dot(r);
            r.axpy(-c, &b, 1.0);
        }
        basis.push(b);
    }
    basis
}

/// Re-expresses every cluster of (near-)degenerate eigenvectors in a basis of
/// pair-swap eigenvectors.
///
/// Each cluster basis `V` is split into `(I+P)V/2` and `(I-P)V/2`; both sets
/// are re-orthonormalized by SVD and must together span the cluster. Each
/// parity subspace then gets the basis from `canonical_basis`, so the result
/// does not depend on how the eigensolver rotated the cluster. The
/// weight attached to a new vector `u` is its Rayleigh quotient within the
/// cluster. Output follows the same ordering and sign rules as
/// [`schur_grouped`] applied per cluster, with symmetric vectors ahead of
/// antisymmetric ones inside a cluster.
pub fn resolve_parity(res: &SchurResult, opts: &FactorizationOptions) -> Result<Vec<ParityVector>> {
    opts.validate()?;
    let dim = res.weights.len();
    let n = (dim as f64).sqrt().round() as usize;
    if n * n != dim || res.vectors.nrows() != dim || res.vectors.ncols() != dim {
        return Err(Error::Shape(format!(
            "eigenbasis of dimension {dim} is not a grouped pair space"
        )));
    }
    let perm = pair_swap(n);
    let scale = res.weights.norm().max(1.0);
    let gap_tol = opts.degeneracy_tol * scale;

    let mut by_value: Vec<usize> = (0..dim).collect();
    by_value.sort_by(|&a, &b| res.weights[a].total_cmp(&res.weights[b]).then(a.cmp(&b)));
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for &k in &by_value {
        match clusters.last_mut() {
            Some(c) if res.weights[k] - res.weights[*c.last().unwrap()] <= gap_tol => c.push(k),
            _ => clusters.push(vec![k]),
        }
    }

    let mut out: Vec<(f64, usize, ParityVector)> = Vec::with_capacity(dim);
    for cluster in &clusters {
        let k = cluster.len();
        let basis = DMatrix::from_columns(
            &cluster
                .iter()
                .map(|&c| res.vectors.column(c).into_owned())
                .collect::<Vec<_>>(),
        );
        let swapped = DMatrix::from_fn(dim, k, |i, j| basis[(perm[i], j)]);
        let even = (&basis + &swapped) * 0.5;
        let odd = (&basis - &swapped) * 0.5;

        let mut found = Vec::with_capacity(k);
        for (parity, proj) in [(Parity::Symmetric, even), (Parity::Antisymmetric, odd)] {
            let svd = proj.svd(true, false);
            let u = svd
                .u
                .ok_or_else(|| Error::Decomposition("parity projection SVD failed".into()))?;
            let mut accepted = Vec::new();
            for (j, &sigma) in svd.singular_values.iter().enumerate() {
                // Singular values of an exact parity split are 0 or 1.
                if sigma > 0.5 {
                    // Weight of the cluster direction lying outside this parity space.
                    let leak = (1.0 - sigma * sigma).max(0.0).sqrt();
                    if leak > opts.parity_tol.sqrt() {
                        return Err(Error::Decomposition(format!(
                            "parity leakage {leak:e} in cluster at weight {:.6e}",
                            res.weights[cluster[0]]
                        )));
                    }
                    accepted.push(u.column(j).into_owned());
                }
            }
            if !accepted.is_empty() {
                for v in canonical_basis(&DMatrix::from_columns(&accepted)) {
                    found.push((parity, project_parity(&v, &perm, parity)));
                }
            }
        }
        if found.len() != k {
            return Err(Error::Decomposition(format!(
                "cluster at weight {:.6e} has {} vectors but its parity projections span {}; \
                 the grouped matrix does not commute with the pair swap",
                res.weights[cluster[0]],
                k,
                found.len()
            )));
        }
        let key = cluster.iter().map(|&c| res.weights[c]).sum::<f64>() / k as f64;
        for (pos, (parity, mut u)) in found.into_iter().enumerate() {
            let weight: f64 = cluster
                .iter()
                .map(|&c| res.weights[c] * res.vectors.column(c).dot(&u).powi(2))
                .sum();
            fix_sign(&mut u);
            out.push((
                key,
                pos,
                ParityVector {
                    weight,
                    parity,
                    vector: u,
                },
            ));
        }
    }

    // Clusters by descending |weight|, positive first; inside a cluster the
    // symmetric vectors (emitted first) keep their canonical order.
    out.sort_by(|(ka, pa, _), (kb, pb, _)| {
        kb.abs()
            .total_cmp(&ka.abs())
            .then(kb.total_cmp(ka))
            .then(pa.cmp(pb))
    });
    Ok(out.into_iter().map(|(_, _, v)| v).collect())
}

/// Reshapes parity-resolved vectors into slices `O_L[p,s] = v[idx(p,s)]`,
/// classifies them, and drops negligible weights.
pub fn slice_and_classify(
    vectors: &[ParityVector],
    opts: &FactorizationOptions,
) -> Result<Vec<ClassifiedSlice>> {
    opts.validate()?;
    let cutoff = opts.weight_cutoff.max(ZERO_WEIGHT);
    let mut out = Vec::new();
    for pv in vectors {
        if pv.weight.abs() <= cutoff {
            continue;
        }
        let dim = pv.vector.len();
        let n = (dim as f64).sqrt().round() as usize;
        if n * n != dim {
            return Err(Error::Shape(format!("vector length {dim} is not a square")));
        }
        let o = DMatrix::from_fn(n, n, |p, s| pv.vector[pair_index(n, p, s)]);
        let ot = o.transpose();
        let sym = (&o + &ot) * 0.5;
        let anti = (&o - &ot) * 0.5;
        let (sn, an) = (sym.norm(), anti.norm());
        if sn > opts.parity_tol && an > opts.parity_tol {
            return Err(Error::Decomposition(format!(
                "slice with weight {:.6e} mixes parities (symmetric part {sn:e}, antisymmetric part {an:e})",
                pv.weight
            )));
        }
        let (parity, slice) = if an <= opts.parity_tol {
            (Parity::Symmetric, sym)
        } else {
            (Parity::Antisymmetric, anti)
        };
        out.push(ClassifiedSlice {
            weight: pv.weight,
            parity,
            slice,
        });
    }
    Ok(out)
}

/// Diagonalizes one slice: a real orthogonal eigendecomposition when
/// symmetric, and the Hermitian matrix `i * slice` when antisymmetric.
/// Eigenpairs are sorted by descending lambda; the largest component of each
/// column of `U` is made real and positive.
pub fn diagonalize_slice(c: &ClassifiedSlice) -> Result<FactorSlice> {
    let n = c.slice.nrows();
    let (lambdas, vectors) = match c.parity {
        Parity::Symmetric => {
            let (vals, vecs) = sym_eigen(&c.slice)?;
            (vals, real_to_complex(&vecs))
        }
        Parity::Antisymmetric => {
            let herm = real_to_complex(&c.slice) * Complex64::new(0.0, 1.0);
            let (mu, vecs) = herm_eigen(&herm)?;
            (-mu, vecs)
        }
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| lambdas[b].total_cmp(&lambdas[a]).then(a.cmp(&b)));

    let mut rotation = DMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        let mut v = vectors.column(k).into_owned();
        let biggest = v.iter().fold(0.0_f64, |a, z| a.max(z.norm()));
        if let Some(z) = v.iter().copied().find(|z| z.norm() >= biggest * (1.0 - 1e-9)) {
            if z.norm() > 0.0 {
                v *= z.conj() / z.norm();
            }
        }
        rotation.set_column(col, &v);
    }
    Ok(FactorSlice {
        weight: c.weight,
        parity: c.parity,
        slice: c.slice.clone(),
        rotation,
        lambdas: DVector::from_iterator(n, order.iter().map(|&k| lambdas[k])),
    })
}

/// [`diagonalize_slice`] over a list, in parallel when enabled; output order
/// matches input order.
pub fn diagonalize_slices(slices: &[ClassifiedSlice]) -> Result<Vec<FactorSlice>> {
    parallel::map(slices, diagonalize_slice).into_iter().collect()
}

/// Runs eigendecomposition, parity resolution, slicing and per-slice
/// diagonalization on a grouped matrix.
pub fn factorize_grouped(m: &GroupedMatrix, opts: &FactorizationOptions) -> Result<Vec<FactorSlice>> {
    let res = schur_grouped(m)?;
    let vectors = resolve_parity(&res, opts)?;
    let classified = slice_and_classify(&vectors, opts)?;
    diagonalize_slices(&classified)
}
