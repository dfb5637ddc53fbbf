//! Hamiltonian data model: one-body matrices, antisymmetrized two-body
//! tensors, and the particle-grouped flattening of the latter.
//!
//! Indices are 0-based. Rank-4 tensors are stored row-major with the last
//! index fastest, `data[((p*n + q)*n + r)*n + s] = h[p,q,r,s]`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::max_abs;

/// Default tolerance on symmetry defects of in-memory tensors.
pub const TOL_SYM: f64 = 1e-12;
/// Default tolerance on realness defects of raw interaction integrals and on
/// externally loaded tensors.
pub const TOL_INPUT: f64 = 1e-10;

#[inline]
pub(crate) fn idx4(n: usize, p: usize, q: usize, r: usize, s: usize) -> usize {
    ((p * n + q) * n + r) * n + s
}

/// Row-major flattening of an ordered mode pair.
#[inline]
pub fn pair_index(n_modes: usize, x: usize, y: usize) -> usize {
    x * n_modes + y
}

/// The pair-swap permutation `idx(x,y) -> idx(y,x)` as an index table.
pub fn pair_swap(n_modes: usize) -> Vec<usize> {
    let mut perm = vec![0; n_modes * n_modes];
    for x in 0..n_modes {
        for y in 0..n_modes {
            perm[pair_index(n_modes, x, y)] = pair_index(n_modes, y, x);
        }
    }
    perm
}

fn integer_sqrt(len: usize) -> Option<usize> {
    let r = (len as f64).sqrt().round() as usize;
    (r * r == len).then_some(r)
}

/// Hermitian one-body coefficient matrix `f[p,q]` of `sum f[p,q] c†_p c_q`.
#[derive(Debug, Clone, PartialEq)]
pub struct OneBodyMatrix {
    entries: DMatrix<Complex64>,
}

impl OneBodyMatrix {
    pub fn new(entries: DMatrix<Complex64>) -> Result<Self> {
        Self::with_tolerance(entries, TOL_SYM)
    }

    /// Like [`OneBodyMatrix::new`] with an explicit Hermiticity tolerance,
    /// scaled by `max(1, max|f|)`.
    pub fn with_tolerance(entries: DMatrix<Complex64>, tol: f64) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::Shape(format!(
                "one-body matrix must be square, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        let m = Self { entries };
        let scale = m.entries.iter().fold(1.0_f64, |a, x| a.max(x.norm()));
        let defect = m.hermiticity_defect();
        if defect > tol * scale {
            return Err(Error::Symmetry {
                defect,
                tolerance: tol * scale,
            });
        }
        Ok(m)
    }

    pub fn from_real(entries: &DMatrix<f64>) -> Result<Self> {
        Self::new(entries.map(|x| Complex64::new(x, 0.0)))
    }

    pub fn zeros(n_modes: usize) -> Self {
        Self {
            entries: DMatrix::zeros(n_modes, n_modes),
        }
    }

    pub fn n_modes(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.n_modes();
        let mut d = 0.0_f64;
        for p in 0..n {
            for q in 0..n {
                d = d.max((self.entries[(p, q)] - self.entries[(q, p)].conj()).norm());
            }
        }
        d
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|z| *z == Complex64::new(0.0, 0.0))
    }
}

/// Raw rank-4 interaction integrals `v[p,q,r,s]`, before antisymmetrization.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionTensor {
    shape: [usize; 4],
    data: Vec<Complex64>,
}

impl InteractionTensor {
    pub fn new(shape: [usize; 4], data: Vec<Complex64>) -> Result<Self> {
        let len: usize = shape.iter().product();
        if data.len() != len {
            return Err(Error::Shape(format!(
                "interaction data has {} entries, shape {:?} needs {}",
                data.len(),
                shape,
                len
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn from_fn(n_modes: usize, f: impl Fn(usize, usize, usize, usize) -> Complex64) -> Self {
        let n = n_modes;
        let mut data = Vec::with_capacity(n.pow(4));
        for p in 0..n {
            for q in 0..n {
                for r in 0..n {
                    for s in 0..n {
                        data.push(f(p, q, r, s));
                    }
                }
            }
        }
        Self {
            shape: [n; 4],
            data,
        }
    }

    pub fn shape(&self) -> [usize; 4] {
        self.shape
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }
}

/// Real antisymmetrized two-body tensor `h[p,q,r,s]`.
///
/// A valid tensor satisfies the eight-fold relations
/// `h[p,q,r,s] = -h[q,p,r,s] = -h[p,q,s,r] = h[q,p,s,r]
///             = h[s,r,q,p] = -h[r,s,q,p] = -h[s,r,p,q] = h[r,s,p,q]`.
/// Construction does not enforce them; see [`validate_symmetries`].
#[derive(Debug, Clone, PartialEq)]
pub struct TwoBodyTensor {
    n_modes: usize,
    data: Vec<f64>,
}

impl TwoBodyTensor {
    pub fn zeros(n_modes: usize) -> Self {
        Self {
            n_modes,
            data: vec![0.0; n_modes.pow(4)],
        }
    }

    pub fn from_vec(n_modes: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n_modes.pow(4) {
            return Err(Error::Shape(format!(
                "two-body data has {} entries, {} modes need {}",
                data.len(),
                n_modes,
                n_modes.pow(4)
            )));
        }
        Ok(Self { n_modes, data })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    #[inline]
    pub fn get(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        self.data[idx4(self.n_modes, p, q, r, s)]
    }

    #[inline]
    pub fn set(&mut self, p: usize, q: usize, r: usize, s: usize, value: f64) {
        let n = self.n_modes;
        self.data[idx4(n, p, q, r, s)] = value;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |a, x| a.max(x.abs()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Orthogonal projection onto the eight-fold symmetric subspace. Each
    /// orbit is averaged once and written back with its signs, so the result
    /// satisfies every relation bit-for-bit.
    pub fn symmetrized(&self) -> Self {
        let n = self.n_modes;
        let mut out = Self::zeros(n);
        let mut done = vec![false; self.data.len()];
        for p in 0..n {
            for q in 0..n {
                for r in 0..n {
                    for s in 0..n {
                        if done[idx4(n, p, q, r, s)] {
                            continue;
                        }
                        let images = orbit(p, q, r, s);
                        let avg = images
                            .iter()
                            .map(|&(sign, [a, b, c, d])| sign * self.get(a, b, c, d))
                            .sum::<f64>()
                            / 8.0;
                        // An orbit that contains an index tuple with both signs is forced to 0.
                        let mut forced_zero = false;
                        for &(sign, [a, b, c, d]) in &images {
                            for &(sign2, t2) in &images {
                                if t2 == [a, b, c, d] && sign2 != sign {
                                    forced_zero = true;
                                }
                            }
                        }
                        for &(sign, [a, b, c, d]) in &images {
                            let k = idx4(n, a, b, c, d);
                            out.data[k] = if forced_zero { 0.0 } else { sign * avg };
                            done[k] = true;
                        }
                    }
                }
            }
        }
        out
    }
}

/// The eight signed images of `(p,q,r,s)` under the symmetry group, starting
/// with the identity.
fn orbit(p: usize, q: usize, r: usize, s: usize) -> [(f64, [usize; 4]); 8] {
    [
        (1.0, [p, q, r, s]),
        (-1.0, [q, p, r, s]),
        (-1.0, [p, q, s, r]),
        (1.0, [q, p, s, r]),
        (1.0, [s, r, q, p]),
        (-1.0, [r, s, q, p]),
        (-1.0, [s, r, p, q]),
        (1.0, [r, s, p, q]),
    ]
}

/// One-body and two-body parts of `H = H1 + H2` plus a free-form label.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianInstance {
    pub one_body: OneBodyMatrix,
    pub two_body: TwoBodyTensor,
    pub label: String,
}

impl HamiltonianInstance {
    pub fn new(
        one_body: OneBodyMatrix,
        two_body: TwoBodyTensor,
        label: impl Into<String>,
    ) -> Result<Self> {
        if one_body.n_modes() != two_body.n_modes() {
            return Err(Error::Shape(format!(
                "one-body has {} modes, two-body has {}",
                one_body.n_modes(),
                two_body.n_modes()
            )));
        }
        Ok(Self {
            one_body,
            two_body,
            label: label.into(),
        })
    }

    /// Interaction-only instance with `f = 0`.
    pub fn interaction_only(two_body: TwoBodyTensor, label: impl Into<String>) -> Self {
        Self {
            one_body: OneBodyMatrix::zeros(two_body.n_modes()),
            two_body,
            label: label.into(),
        }
    }

    pub fn n_modes(&self) -> usize {
        self.two_body.n_modes()
    }
}

/// Output of [`antisymmetrize`] with the defects that were removed.
#[derive(Debug, Clone, PartialEq)]
pub struct Antisymmetrized {
    pub tensor: TwoBodyTensor,
    /// Largest discarded imaginary part.
    pub max_imag: f64,
    /// Largest `|h[p,q,r,s] - h[s,r,q,p]|` before mirror symmetrization.
    pub mirror_defect: f64,
}

/// Builds `h = 1/4 (v[p,q,r,s] - v[q,p,r,s] + v[q,p,s,r] - v[p,q,s,r])`,
/// mirror-symmetrizes it and drops the imaginary part.
///
/// Fails when the dropped parts exceed `TOL_INPUT * max(1, max|h|)`, which
/// means the integrals are not real-valued.
pub fn antisymmetrize(v: &InteractionTensor) -> Result<Antisymmetrized> {
    antisymmetrize_with(v, TOL_INPUT)
}

pub fn antisymmetrize_with(v: &InteractionTensor, tol_input: f64) -> Result<Antisymmetrized> {
    let out = antisymmetrize_unchecked(v)?;
    let tol = tol_input * out.tensor.max_abs().max(1.0);
    if out.max_imag > tol || out.mirror_defect > tol {
        return Err(Error::Realness {
            imag: out.max_imag,
            mirror: out.mirror_defect,
            tolerance: tol,
        });
    }
    Ok(out)
}

/// [`antisymmetrize`] without the realness tolerance check; only the shape
/// is validated.
pub fn antisymmetrize_unchecked(v: &InteractionTensor) -> Result<Antisymmetrized> {
    let [a, b, c, d] = v.shape;
    if !(a == b && b == c && c == d) {
        return Err(Error::Shape(format!(
            "interaction tensor must be hypercubic, got {:?}",
            v.shape
        )));
    }
    let n = a;
    let vd = &v.data;
    let quarter = Complex64::new(0.25, 0.0);
    let mut h = vec![Complex64::new(0.0, 0.0); vd.len()];
    for p in 0..n {
        for q in 0..n {
            for r in 0..n {
                for s in 0..n {
                    // Pairing the differences keeps exact antisymmetry in floating point.
                    let x = vd[idx4(n, p, q, r, s)] - vd[idx4(n, q, p, r, s)];
                    let y = vd[idx4(n, q, p, s, r)] - vd[idx4(n, p, q, s, r)];
                    h[idx4(n, p, q, r, s)] = (x + y) * quarter;
                }
            }
        }
    }

    let mut mirror_defect = 0.0_f64;
    let mut max_imag = 0.0_f64;
    let mut data = vec![0.0; h.len()];
    for p in 0..n {
        for q in 0..n {
            for r in 0..n {
                for s in 0..n {
                    let here = h[idx4(n, p, q, r, s)];
                    let mirror = h[idx4(n, s, r, q, p)];
                    mirror_defect = mirror_defect.max((here - mirror).norm());
                    let sym = (here + mirror) * Complex64::new(0.5, 0.0);
                    max_imag = max_imag.max(sym.im.abs());
                    data[idx4(n, p, q, r, s)] = sym.re;
                }
            }
        }
    }
    Ok(Antisymmetrized {
        tensor: TwoBodyTensor { n_modes: n, data },
        max_imag,
        mirror_defect,
    })
}

/// Names of the seven nontrivial relations, in report order.
pub const SYMMETRY_RELATIONS: [&str; 7] = [
    "h[p,q,r,s] = -h[q,p,r,s]",
    "h[p,q,r,s] = -h[p,q,s,r]",
    "h[p,q,r,s] = h[q,p,s,r]",
    "h[p,q,r,s] = h[s,r,q,p]",
    "h[p,q,r,s] = -h[r,s,q,p]",
    "h[p,q,r,s] = -h[s,r,p,q]",
    "h[p,q,r,s] = h[r,s,p,q]",
];

/// Per-relation maximum absolute defects.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetryReport {
    pub defects: [f64; 7],
    pub tolerance: f64,
    pub ok: bool,
}

impl SymmetryReport {
    pub fn max_defect(&self) -> f64 {
        self.defects.iter().fold(0.0, |a, &x| a.max(x))
    }
}

pub fn validate_symmetries(h: &TwoBodyTensor) -> SymmetryReport {
    validate_symmetries_with(h, TOL_SYM)
}

pub fn validate_symmetries_with(h: &TwoBodyTensor, tolerance: f64) -> SymmetryReport {
    let n = h.n_modes;
    let mut defects = [0.0_f64; 7];
    for p in 0..n {
        for q in 0..n {
            for r in 0..n {
                for s in 0..n {
                    let x = h.get(p, q, r, s);
                    for (k, (sign, [a, b, c, d])) in orbit(p, q, r, s).into_iter().skip(1).enumerate() {
                        let defect = (x - sign * h.get(a, b, c, d)).abs();
                        if defect > defects[k] || defect.is_nan() {
                            defects[k] = defect;
                        }
                    }
                }
            }
        }
    }
    let ok = defects.iter().all(|&d| d <= tolerance);
    SymmetryReport {
        defects,
        tolerance,
        ok,
    }
}

/// `N^2 x N^2` flattening `M[idx(p,s), idx(q,r)] = h[p,q,r,s]`, rows indexed
/// by the particle-1 pair and columns by the particle-2 pair.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupedMatrix {
    n_modes: usize,
    entries: DMatrix<f64>,
}

impl GroupedMatrix {
    pub fn from_matrix(entries: DMatrix<f64>) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::Shape(format!(
                "grouped matrix must be square, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        let n_modes = integer_sqrt(entries.nrows()).ok_or_else(|| {
            Error::Shape(format!(
                "grouped dimension {} is not a perfect square",
                entries.nrows()
            ))
        })?;
        Ok(Self { n_modes, entries })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<f64> {
        self.entries
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.entries)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.norm()
    }

    /// `max |M - M^T|`.
    pub fn transpose_defect(&self) -> f64 {
        max_abs(&(&self.entries - self.entries.transpose()))
    }

    /// `max |P M P - M|` for the pair-swap permutation `P`.
    pub fn pair_swap_defect(&self) -> f64 {
        let perm = pair_swap(self.n_modes);
        let dim = perm.len();
        let mut d = 0.0_f64;
        for i in 0..dim {
            for j in 0..dim {
                d = d.max((self.entries[(perm[i], perm[j])] - self.entries[(i, j)]).abs());
            }
        }
        d
    }
}

/// Groups `h` by particle after checking its symmetries at
/// `TOL_SYM * max(1, max|h|)`.
pub fn group(h: &TwoBodyTensor) -> Result<GroupedMatrix> {
    group_with_tolerance(h, TOL_SYM)
}

pub fn group_with_tolerance(h: &TwoBodyTensor, tol: f64) -> Result<GroupedMatrix> {
    let tol = tol * h.max_abs().max(1.0);
    let report = validate_symmetries_with(h, tol);
    if !report.ok {
        return Err(Error::Symmetry {
            defect: report.max_defect(),
            tolerance: tol,
        });
    }
    let n = h.n_modes;
    let dim = n * n;
    let mut m = DMatrix::zeros(dim, dim);
    for p in 0..n {
        for q in 0..n {
            for r in 0..n {
                for s in 0..n {
                    m[(pair_index(n, p, s), pair_index(n, q, r))] = h.get(p, q, r, s);
                }
            }
        }
    }
    Ok(GroupedMatrix {
        n_modes: n,
        entries: m,
    })
}

/// Exact inverse of [`group`].
pub fn ungroup(m: &GroupedMatrix) -> TwoBodyTensor {
    let n = m.n_modes;
    let mut h = TwoBodyTensor::zeros(n);
    for p in 0..n {
        for q in 0..n {
            for r in 0..n {
                for s in 0..n {
                    h.set(p, q, r, s, m.entries[(pair_index(n, p, s), pair_index(n, q, r))]);
                }
            }
        }
    }
    h
}

/// One-body term produced by reordering `c†_p c†_q c_r c_s` into
/// `c†_p c_s c†_q c_r`: `S[p,r] = -1/2 sum_q h[p,q,r,q]`.
pub fn effective_one_body(h: &TwoBodyTensor) -> OneBodyMatrix {
    let n = h.n_modes;
    let s = DMatrix::from_fn(n, n, |p, r| {
        let sum: f64 = (0..n).map(|q| h.get(p, q, r, q)).sum();
        Complex64::new(-0.5 * sum, 0.0)
    });
    OneBodyMatrix { entries: s }
}
