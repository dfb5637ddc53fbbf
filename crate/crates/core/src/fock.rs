//! Dense many-body matrices in the `2^N` occupation basis.
//!
//! Basis state `b` has mode `p` occupied iff bit `p` of `b` is set. Creation
//! and annihilation carry the sign `(-1)^(number of occupied modes q < p)`.
//! Every operator built here conserves particle number, so products and
//! spectra are evaluated block-by-block over fixed-number sectors.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::assemble::FactoredHamiltonian;
use crate::error::{Error, Result};
use crate::factorize::FactorSlice;
use crate::linalg::{herm_eigenvalues, max_abs_c};
use crate::parallel;
use crate::tensor::{HamiltonianInstance, TwoBodyTensor};

/// Largest mode count for which dense Fock matrices are built.
pub const MAX_MODES: usize = 12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

fn check_size(n_modes: usize, max: usize) -> Result<()> {
    if n_modes > max {
        return Err(Error::SizeGuard { n_modes, max });
    }
    Ok(())
}

#[inline]
fn parity_below(state: usize, p: usize) -> f64 {
    if (state & ((1usize << p) - 1)).count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// `c_p |state>` as `(sign, new_state)`, or `None` when mode `p` is empty.
#[inline]
pub fn annihilate(state: usize, p: usize) -> Option<(f64, usize)> {
    (state >> p & 1 == 1).then(|| (parity_below(state, p), state ^ (1 << p)))
}

/// `c†_p |state>` as `(sign, new_state)`, or `None` when mode `p` is full.
#[inline]
pub fn create(state: usize, p: usize) -> Option<(f64, usize)> {
    (state >> p & 1 == 0).then(|| (parity_below(state, p), state | (1 << p)))
}

/// Basis states grouped by particle number, each group in ascending order.
pub fn number_sectors(n_modes: usize) -> Vec<Vec<usize>> {
    let mut sectors = vec![Vec::new(); n_modes + 1];
    for b in 0..1usize << n_modes {
        sectors[b.count_ones() as usize].push(b);
    }
    sectors
}

/// Dense Hermitian operator on the occupation basis of `n_modes` modes.
#[derive(Debug, Clone, PartialEq)]
pub struct FockMatrix {
    n_modes: usize,
    entries: DMatrix<Complex64>,
}

impl FockMatrix {
    pub fn zeros(n_modes: usize) -> Result<Self> {
        check_size(n_modes, MAX_MODES)?;
        let dim = 1 << n_modes;
        Ok(Self {
            n_modes,
            entries: DMatrix::zeros(dim, dim),
        })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn max_abs(&self) -> f64 {
        max_abs_c(&self.entries)
    }

    pub fn max_abs_diff(&self, other: &FockMatrix) -> f64 {
        max_abs_c(&(&self.entries - &other.entries))
    }

    pub fn hermiticity_defect(&self) -> f64 {
        max_abs_c(&(&self.entries - self.entries.adjoint()))
    }

    /// Largest entry connecting states of different particle number.
    pub fn number_block_defect(&self) -> f64 {
        let dim = self.dim();
        let mut d = 0.0_f64;
        for j in 0..dim {
            for i in 0..dim {
                if i.count_ones() != j.count_ones() {
                    d = d.max(self.entries[(i, j)].norm());
                }
            }
        }
        d
    }

    /// `[self, other]` as a plain matrix.
    pub fn commutator(&self, other: &FockMatrix) -> DMatrix<Complex64> {
        &self.entries * &other.entries - &other.entries * &self.entries
    }

    pub fn add_assign(&mut self, other: &FockMatrix) {
        self.entries += &other.entries;
    }

    pub fn scaled(&self, factor: f64) -> FockMatrix {
        FockMatrix {
            n_modes: self.n_modes,
            entries: &self.entries * Complex64::new(factor, 0.0),
        }
    }

    /// Ascending eigenvalues of the Hermitian part. Number-conserving
    /// matrices are diagonalized sector by sector.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        if self.number_block_defect() != 0.0 {
            return herm_eigenvalues(&self.entries);
        }
        let mut all = Vec::with_capacity(self.dim());
        for sector in number_sectors(self.n_modes) {
            let block = self.entries.select_rows(&sector).select_columns(&sector);
            all.extend(herm_eigenvalues(&block)?);
        }
        all.sort_by(f64::total_cmp);
        Ok(all)
    }

    /// Square of a number-conserving operator, computed per sector.
    fn squared(&self) -> FockMatrix {
        let mut out = DMatrix::zeros(self.dim(), self.dim());
        for sector in number_sectors(self.n_modes) {
            let block = self.entries.select_rows(&sector).select_columns(&sector);
            let sq = &block * &block;
            for (a, &i) in sector.iter().enumerate() {
                for (b, &j) in sector.iter().enumerate() {
                    out[(i, j)] = sq[(a, b)];
                }
            }
        }
        FockMatrix {
            n_modes: self.n_modes,
            entries: out,
        }
    }
}

/// `sum_{pq} coeffs[p,q] c†_p c_q`.
pub fn one_body_operator(coeffs: &DMatrix<Complex64>) -> Result<FockMatrix> {
    let n = coeffs.nrows();
    let mut out = FockMatrix::zeros(n)?;
    for b in 0..out.dim() {
        for q in 0..n {
            let Some((s1, b1)) = annihilate(b, q) else { continue };
            for p in 0..n {
                let c = coeffs[(p, q)];
                if c == ZERO {
                    continue;
                }
                if let Some((s2, b2)) = create(b1, p) {
                    out.entries[(b2, b)] += c * (s1 * s2);
                }
            }
        }
    }
    Ok(out)
}

/// `1/2 sum_{pqrs} h[p,q,r,s] c†_p c†_q c_r c_s`.
pub fn two_body_operator(h: &TwoBodyTensor) -> Result<FockMatrix> {
    let n = h.n_modes();
    let mut out = FockMatrix::zeros(n)?;
    for b in 0..out.dim() {
        for s in 0..n {
            let Some((s1, b1)) = annihilate(b, s) else { continue };
            for r in 0..n {
                let Some((s2, b2)) = annihilate(b1, r) else { continue };
                for q in 0..n {
                    let Some((s3, b3)) = create(b2, q) else { continue };
                    for p in 0..n {
                        let x = h.get(p, q, r, s);
                        if x == 0.0 {
                            continue;
                        }
                        if let Some((s4, b4)) = create(b3, p) {
                            out.entries[(b4, b)] += Complex64::new(0.5 * x * s1 * s2 * s3 * s4, 0.0);
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// `c_p` as a Fock matrix.
pub fn annihilation_operator(n_modes: usize, p: usize) -> Result<FockMatrix> {
    let mut out = FockMatrix::zeros(n_modes)?;
    for b in 0..out.dim() {
        if let Some((s, b1)) = annihilate(b, p) {
            out.entries[(b1, b)] = Complex64::new(s, 0.0);
        }
    }
    Ok(out)
}

/// Rotated annihilator `b_a = sum_p conj(U[p,a]) c_p`, the adjoint of
/// `b†_a = sum_p U[p,a] c†_p`.
pub fn rotated_annihilator(rotation: &DMatrix<Complex64>, a: usize) -> Result<FockMatrix> {
    let n = rotation.nrows();
    let mut out = FockMatrix::zeros(n)?;
    for p in 0..n {
        let c = annihilation_operator(n, p)?;
        out.entries += &c.entries * rotation[(p, a)].conj();
    }
    Ok(out)
}

/// `n_a = b†_a b_a = sum_{pq} U[p,a] conj(U[q,a]) c†_p c_q`.
pub fn rotated_number_operator(rotation: &DMatrix<Complex64>, a: usize) -> Result<FockMatrix> {
    let col = rotation.column(a);
    one_body_operator(&(col * col.adjoint()))
}

/// Total particle number `sum_p n_p`.
pub fn total_number_operator(n_modes: usize) -> Result<FockMatrix> {
    one_body_operator(&DMatrix::identity(n_modes, n_modes))
}

/// `H = sum f[p,q] c†_p c_q + 1/2 sum h[p,q,r,s] c†_p c†_q c_r c_s`.
pub fn build_from_tensor(inst: &HamiltonianInstance) -> Result<FockMatrix> {
    let mut h = one_body_operator(inst.one_body.entries())?;
    h.add_assign(&two_body_operator(&inst.two_body)?);
    Ok(h)
}

/// `V_L = ±1/2 w_L sum_{ab} lambda_a lambda_b n_a n_b`, with `-` for
/// antisymmetric slices. The double sum is `X^2` for
/// `X = sum_a lambda_a n_a`, whose one-body coefficients are
/// `sum_a lambda_a U[:,a] U[:,a]†`.
pub fn slice_operator(slice: &FactorSlice) -> Result<FockMatrix> {
    let n = slice.n_modes();
    let mut coeffs = DMatrix::zeros(n, n);
    for a in 0..n {
        let col = slice.rotation.column(a);
        coeffs += (col * col.adjoint()) * Complex64::new(slice.lambdas[a], 0.0);
    }
    let x = one_body_operator(&coeffs)?;
    Ok(x.squared().scaled(0.5 * slice.weight * slice.parity.sign()))
}

/// The `V_L` operators of every slice, in slice order.
pub fn slice_operators(fh: &FactoredHamiltonian) -> Result<Vec<FockMatrix>> {
    check_size(fh.n_modes, MAX_MODES)?;
    parallel::map(&fh.slices, slice_operator).into_iter().collect()
}

/// `F + S`.
pub fn one_body_part(fh: &FactoredHamiltonian) -> Result<FockMatrix> {
    one_body_operator(&(fh.one_body.entries() + fh.correction.entries()))
}

/// `F + S + sum_L V_L` from the factored form.
pub fn build_from_factored(fh: &FactoredHamiltonian) -> Result<FockMatrix> {
    let mut h = one_body_part(fh)?;
    for v in slice_operators(fh)? {
        h.add_assign(&v);
    }
    Ok(h)
}

/// Largest difference among the `k` lowest eigenvalues of two operators.
pub fn compare_spectra(a: &FockMatrix, b: &FockMatrix, k: usize) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::Shape(format!(
            "cannot compare spectra of dimension {} and {}",
            a.dim(),
            b.dim()
        )));
    }
    let ea = a.eigenvalues()?;
    let eb = b.eigenvalues()?;
    Ok(ea
        .iter()
        .zip(&eb)
        .take(k)
        .fold(0.0, |acc, (x, y)| acc.max((x - y).abs())))
}
