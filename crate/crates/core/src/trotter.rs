//! Single-step error of the first-order product formula
//! `exp(i dt H) ~ exp(i dt (F + S)) prod_L exp(i dt V_L)`.
//!
//! The basis rotations conjugating each `exp(i dt V_L)` are exact identities at
//! the dense-matrix level, so each factor is exponentiated directly. All
//! operators conserve particle number; exponentials, products and the
//! operator 2-norm are evaluated per number sector.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::assemble::FactoredHamiltonian;
use crate::error::{Error, Result};
use crate::fock::{self, number_sectors, FockMatrix};
use crate::linalg::herm_eigen;
use crate::parallel;

/// Largest mode count accepted by the scan.
pub const MAX_MODES: usize = 8;

/// Errors at or below this are treated as exact when fitting the slope.
pub const NOISE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct TrotterScanResult {
    pub dts: Vec<f64>,
    pub errors: Vec<f64>,
    /// Least-squares slope of `ln err` against `ln dt`; NaN when any error is
    /// at the noise floor.
    pub fitted_slope: f64,
}

/// Hermitian block stored as its eigendecomposition.
struct SpectralBlock {
    values: DVector<f64>,
    vectors: DMatrix<Complex64>,
}

impl SpectralBlock {
    fn exp_i(&self, dt: f64) -> DMatrix<Complex64> {
        let phases = self.values.map(|e| Complex64::from_polar(1.0, dt * e));
        let mut scaled = self.vectors.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= phases[j];
        }
        scaled * self.vectors.adjoint()
    }
}

/// Per-sector spectral decompositions of one operator.
struct SectorSpectra(Vec<SpectralBlock>);

impl SectorSpectra {
    fn new(op: &FockMatrix, sectors: &[Vec<usize>]) -> Result<Self> {
        let blocks = sectors
            .iter()
            .map(|idx| {
                let block = op.entries().select_rows(idx).select_columns(idx);
                let herm = (&block + block.adjoint()) * Complex64::new(0.5, 0.0);
                let (values, vectors) = herm_eigen(&herm)?;
                Ok(SpectralBlock { values, vectors })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self(blocks))
    }
}

fn operator_norm(m: &DMatrix<Complex64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().iter().fold(0.0, |a, &x| a.max(x))
}

/// Product-formula error against a given exact Hamiltonian.
pub struct TrotterProblem {
    sectors: Vec<Vec<usize>>,
    exact: SectorSpectra,
    factors: Vec<SectorSpectra>,
}

impl TrotterProblem {
    /// `factors` are exponentiated left to right.
    pub fn new(exact: &FockMatrix, factors: &[FockMatrix]) -> Result<Self> {
        let n = exact.n_modes();
        if n > MAX_MODES {
            return Err(Error::SizeGuard {
                n_modes: n,
                max: MAX_MODES,
            });
        }
        if factors.iter().any(|f| f.dim() != exact.dim()) {
            return Err(Error::Shape("Trotter factors differ in dimension".into()));
        }
        let sectors = number_sectors(n);
        let exact_spec = SectorSpectra::new(exact, &sectors)?;
        let factors = parallel::map(factors, |f| SectorSpectra::new(f, &sectors))
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            sectors,
            exact: exact_spec,
            factors,
        })
    }

    /// `|| exp(i dt H) - prod_k exp(i dt H_k) ||_2`.
    pub fn error(&self, dt: f64) -> f64 {
        (0..self.sectors.len())
            .map(|s| {
                let exact = self.exact.0[s].exp_i(dt);
                let dim = exact.nrows();
                let product = self
                    .factors
                    .iter()
                    .fold(DMatrix::identity(dim, dim), |acc, f| acc * f.0[s].exp_i(dt));
                operator_norm(&(exact - product))
            })
            .fold(0.0, f64::max)
    }

    pub fn scan(&self, dts: &[f64]) -> Result<TrotterScanResult> {
        check_dts(dts)?;
        let errors = parallel::map(dts, |&dt| self.error(dt));
        Ok(TrotterScanResult {
            dts: dts.to_vec(),
            fitted_slope: loglog_slope(dts, &errors),
            errors,
        })
    }
}

fn check_dts(dts: &[f64]) -> Result<()> {
    if dts.is_empty() {
        return Err(Error::InvalidParameter("no time steps given".into()));
    }
    if dts.iter().any(|dt| !(dt.is_finite() && *dt > 0.0)) {
        return Err(Error::InvalidParameter("time steps must be positive".into()));
    }
    Ok(())
}

/// The ordered factor list `F + S, V_1, V_2, ...`.
pub fn product_factors(fh: &FactoredHamiltonian) -> Result<Vec<FockMatrix>> {
    let mut factors = vec![fock::one_body_part(fh)?];
    factors.extend(fock::slice_operators(fh)?);
    Ok(factors)
}

fn guard(fh: &FactoredHamiltonian) -> Result<()> {
    if fh.n_modes > MAX_MODES {
        return Err(Error::SizeGuard {
            n_modes: fh.n_modes,
            max: MAX_MODES,
        });
    }
    Ok(())
}

/// Scan with `H` taken as the sum of the factors, which equals the
/// tensor-built Hamiltonian when nothing was truncated.
pub fn trotter_scan(fh: &FactoredHamiltonian, dts: &[f64]) -> Result<TrotterScanResult> {
    guard(fh)?;
    check_dts(dts)?;
    let factors = product_factors(fh)?;
    let mut exact = factors[0].clone();
    for f in &factors[1..] {
        exact.add_assign(f);
    }
    TrotterProblem::new(&exact, &factors)?.scan(dts)
}

/// Scan against an externally built exact Hamiltonian.
pub fn trotter_scan_against(
    exact: &FockMatrix,
    fh: &FactoredHamiltonian,
    dts: &[f64],
) -> Result<TrotterScanResult> {
    guard(fh)?;
    check_dts(dts)?;
    TrotterProblem::new(exact, &product_factors(fh)?)?.scan(dts)
}

/// Least-squares slope of `ln err` against `ln dt`. NaN when fewer than two
/// points are given or any error is at or below [`NOISE_FLOOR`].
pub fn loglog_slope(dts: &[f64], errors: &[f64]) -> f64 {
    if dts.len() < 2 || dts.len() != errors.len() || errors.iter().any(|&e| e.is_nan() || e <= NOISE_FLOOR) {
        return f64::NAN;
    }
    let xs: Vec<f64> = dts.iter().map(|d| d.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return f64::NAN;
    }
    sxy / sxx
}
