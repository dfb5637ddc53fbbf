//! The factored Hamiltonian `F + S + sum_L V_L`, tensor reconstruction from
//! its slices, and weight-threshold truncation.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::factorize::{factorize_grouped, FactorSlice, FactorizationOptions, Parity};
use crate::fock;
use crate::parallel;
use crate::tensor::{
    effective_one_body, group, ungroup, GroupedMatrix, HamiltonianInstance, OneBodyMatrix,
    TwoBodyTensor,
};

/// Default number of low eigenvalues compared by the spectrum metric.
pub const DEFAULT_SPECTRUM_K: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct FactoredHamiltonian {
    pub n_modes: usize,
    /// `f`, copied from the instance.
    pub one_body: OneBodyMatrix,
    /// `S[p,r] = -1/2 sum_q h[p,q,r,q]` of the untruncated tensor.
    pub correction: OneBodyMatrix,
    /// Ordered by descending `|weight|`.
    pub slices: Vec<FactorSlice>,
    pub options: FactorizationOptions,
}

impl FactoredHamiltonian {
    pub fn count(&self, parity: Parity) -> usize {
        self.slices.iter().filter(|s| s.parity == parity).count()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.slices.iter().map(|s| s.weight).collect()
    }
}

pub fn factorize_hamiltonian(
    inst: &HamiltonianInstance,
    opts: &FactorizationOptions,
) -> Result<FactoredHamiltonian> {
    opts.validate()?;
    let grouped = group(&inst.two_body)?;
    let slices = factorize_grouped(&grouped, opts)?;
    Ok(FactoredHamiltonian {
        n_modes: inst.n_modes(),
        one_body: inst.one_body.clone(),
        correction: effective_one_body(&inst.two_body),
        slices,
        options: *opts,
    })
}

/// Grouped matrix split into its symmetric-slice, antisymmetric-slice and
/// mixed contributions, where each slice `O_L` is decomposed into its
/// symmetric part `S_L` and antisymmetric part `A_L`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitReconstruction {
    /// `sum_L w_L vec(S_L) vec(S_L)^T`
    pub symmetric: DMatrix<f64>,
    /// `sum_L w_L vec(A_L) vec(A_L)^T`
    pub antisymmetric: DMatrix<f64>,
    /// `sum_L w_L [vec(S_L) vec(A_L)^T + vec(A_L) vec(S_L)^T]`
    pub cross: DMatrix<f64>,
}

pub fn split_reconstruction(fh: &FactoredHamiltonian) -> SplitReconstruction {
    let dim = fh.n_modes * fh.n_modes;
    let mut out = SplitReconstruction {
        symmetric: DMatrix::zeros(dim, dim),
        antisymmetric: DMatrix::zeros(dim, dim),
        cross: DMatrix::zeros(dim, dim),
    };
    for s in &fh.slices {
        let t = s.slice.transpose();
        let sym = crate::factorize::flatten(&((&s.slice + &t) * 0.5));
        let anti = crate::factorize::flatten(&((&s.slice - &t) * 0.5));
        out.symmetric += &sym * sym.transpose() * s.weight;
        out.antisymmetric += &anti * anti.transpose() * s.weight;
        out.cross += (&sym * anti.transpose() + &anti * sym.transpose()) * s.weight;
    }
    out
}

/// `sum_L w_L vec(O_L) vec(O_L)^T`.
pub fn reconstruct_grouped(fh: &FactoredHamiltonian) -> GroupedMatrix {
    let dim = fh.n_modes * fh.n_modes;
    let mut m = DMatrix::zeros(dim, dim);
    for s in &fh.slices {
        let v = s.flattened();
        m += &v * v.transpose() * s.weight;
    }
    GroupedMatrix::from_matrix(m).expect("square by construction")
}

pub fn reconstruct_tensor(fh: &FactoredHamiltonian) -> TwoBodyTensor {
    ungroup(&reconstruct_grouped(fh))
}

/// `|a - b|_F / |a|_F`, or the absolute distance when `a` vanishes.
pub fn relative_error(reference: &TwoBodyTensor, approx: &TwoBodyTensor) -> f64 {
    let diff: f64 = reference
        .data()
        .iter()
        .zip(approx.data())
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt();
    let norm = reference.frobenius_norm();
    if norm > 0.0 {
        diff / norm
    } else {
        diff
    }
}

/// Keeps slices with `|weight| > threshold`. The one-body parts are kept as
/// they are.
pub fn truncate(fh: &FactoredHamiltonian, threshold: f64) -> FactoredHamiltonian {
    FactoredHamiltonian {
        slices: fh
            .slices
            .iter()
            .filter(|s| s.weight.abs() > threshold)
            .cloned()
            .collect(),
        ..fh.clone()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruncationReport {
    pub thresholds: Vec<f64>,
    pub kept_slices: Vec<usize>,
    /// Relative Frobenius distance of the reconstructed tensor.
    pub recon_error_frobenius: Vec<f64>,
    /// `sum_dropped w^2 / sum_all w^2`.
    pub dropped_weight_fraction: Vec<f64>,
    /// Max difference over the lowest `k` Fock-space eigenvalues, if requested.
    pub spectrum_error: Option<Vec<f64>>,
}

/// Factorizes once and evaluates each threshold (concurrently when enabled).
/// `spectrum_k` adds the low-spectrum metric against the exact Hamiltonian.
pub fn truncation_scan(
    inst: &HamiltonianInstance,
    thresholds: &[f64],
    opts: &FactorizationOptions,
    spectrum_k: Option<usize>,
) -> Result<TruncationReport> {
    if thresholds.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::InvalidParameter(
            "thresholds must be finite and non-negative".into(),
        ));
    }
    if thresholds.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidParameter("thresholds must be ascending".into()));
    }
    let fh = factorize_hamiltonian(inst, opts)?;
    let exact = match spectrum_k {
        Some(_) => Some(fock::build_from_tensor(inst)?),
        None => None,
    };
    let total = fh.slices.iter().fold(0.0, |acc, s| acc + s.weight * s.weight);

    let rows = parallel::map(thresholds, |&t| -> Result<(usize, f64, f64, Option<f64>)> {
        let cut = truncate(&fh, t);
        let err = relative_error(&inst.two_body, &reconstruct_tensor(&cut));
        let dropped: f64 = fh
            .slices
            .iter()
            .filter(|s| s.weight.abs() <= t)
            .fold(0.0, |acc, s| acc + s.weight * s.weight);
        let fraction = if total > 0.0 { dropped / total } else { 0.0 };
        let spec = match (&exact, spectrum_k) {
            (Some(h), Some(k)) => Some(fock::compare_spectra(h, &fock::build_from_factored(&cut)?, k)?),
            _ => None,
        };
        Ok((cut.slices.len(), err, fraction, spec))
    });

    let mut report = TruncationReport {
        thresholds: thresholds.to_vec(),
        kept_slices: Vec::new(),
        recon_error_frobenius: Vec::new(),
        dropped_weight_fraction: Vec::new(),
        spectrum_error: spectrum_k.map(|_| Vec::new()),
    };
    for row in rows {
        let (kept, err, fraction, spec) = row?;
        report.kept_slices.push(kept);
        report.recon_error_frobenius.push(err);
        report.dropped_weight_fraction.push(fraction);
        if let (Some(list), Some(x)) = (report.spectrum_error.as_mut(), spec) {
            list.push(x);
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{random_valid, two_mode_example};
    use crate::linalg::max_abs;
    use nalgebra::DMatrix;
    use num_complex::Complex64;

    fn example() -> FactoredHamiltonian {
        let inst = HamiltonianInstance::interaction_only(two_mode_example(), "ex");
        factorize_hamiltonian(&inst, &FactorizationOptions::default()).unwrap()
    }

    #[test]
    fn two_mode_example_structure() {
        let fh = example();
        let half = DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.5]).map(|x| Complex64::new(x, 0.0));
        assert_eq!(fh.correction.entries(), &half);
        assert_eq!(fh.slices.len(), 4);
        assert_eq!(fh.count(Parity::Symmetric), 3);
        assert_eq!(fh.count(Parity::Antisymmetric), 1);
    }

    #[test]
    fn ring_antisymmetric_zero_count_follows_mode_parity() {
        // Momentum conservation confines each slice to one transfer; the
        // outermost transfer of the five-mode ring pairs a single couple of
        // modes and leaves three zero lambdas.
        let inst = crate::generators::ring_planewave(&crate::generators::RingModelParams {
            n_modes: 5,
            ring_length: 10.0,
            potential_strength: 1.0,
            potential_width: 1.0,
        })
        .unwrap();
        let fh = factorize_hamiltonian(&inst, &FactorizationOptions::default()).unwrap();
        let zeros: Vec<usize> = fh
            .slices
            .iter()
            .filter(|s| s.parity == Parity::Antisymmetric)
            .map(|s| s.lambdas.iter().filter(|x| x.abs() <= 1e-10).count())
            .collect();
        assert!(zeros.iter().all(|z| z % 2 == 1), "{zeros:?}");
        assert!(zeros.contains(&3));
    }

    #[test]
    fn zero_tensor_factorizes_to_nothing() {
        let inst = HamiltonianInstance::interaction_only(TwoBodyTensor::zeros(2), "zero");
        let fh = factorize_hamiltonian(&inst, &FactorizationOptions::default()).unwrap();
        assert!(fh.slices.is_empty());
        assert!(fh.correction.is_zero());
        assert_eq!(reconstruct_tensor(&fh), TwoBodyTensor::zeros(2));
    }

    #[test]
    fn two_mode_reconstruction() {
        let fh = example();
        let h = two_mode_example();
        assert!(relative_error(&h, &reconstruct_tensor(&fh)) < 1e-13);
    }

    #[test]
    fn keeping_positive_weights_of_two_mode_example() {
        // Dropping the two w = -1 slices removes half of the grouped energy,
        // so the relative error is sqrt(2)/2.
        let mut fh = example();
        fh.slices.retain(|s| s.weight > 0.0);
        let err = relative_error(&two_mode_example(), &reconstruct_tensor(&fh));
        assert!((err - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-13);
    }

    #[test]
    fn truncate_thresholds() {
        let inst = HamiltonianInstance::interaction_only(random_valid(4, 6), "r4");
        let fh = factorize_hamiltonian(&inst, &FactorizationOptions::default()).unwrap();
        assert_eq!(truncate(&fh, 0.0), fh);
        let top = fh.slices[0].weight.abs();
        assert!(truncate(&fh, top).slices.is_empty());
        // Hand count: a threshold between two distinct |weights|.
        let mut abs: Vec<f64> = fh.weights().iter().map(|w| w.abs()).collect();
        abs.sort_by(|a, b| b.total_cmp(a));
        let t = 0.5 * (abs[2] + abs[3]);
        let kept = abs.iter().filter(|&&w| w > t).count();
        assert_eq!(truncate(&fh, t).slices.len(), kept);
        assert_eq!(truncate(&fh, t).correction, fh.correction);
    }

    #[test]
    fn scan_at_zero_is_exact() {
        let inst = HamiltonianInstance::interaction_only(random_valid(4, 2), "r4");
        let rep = truncation_scan(&inst, &[0.0], &FactorizationOptions::default(), None).unwrap();
        let fh = factorize_hamiltonian(&inst, &FactorizationOptions::default()).unwrap();
        assert_eq!(rep.kept_slices, vec![fh.slices.len()]);
        assert!(rep.recon_error_frobenius[0] <= 1e-12);
        assert!(rep.spectrum_error.is_none());
    }

    #[test]
    fn scan_rejects_unsorted_thresholds() {
        let inst = HamiltonianInstance::interaction_only(random_valid(3, 2), "r3");
        let err = truncation_scan(&inst, &[0.5, 0.1], &FactorizationOptions::default(), None);
        assert!(matches!(err, Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn scan_with_spectrum() {
        let inst = HamiltonianInstance::interaction_only(random_valid(4, 3), "r4");
        let rep = truncation_scan(&inst, &[0.0, 0.5, 1.0, 100.0], &FactorizationOptions::default(), Some(4)).unwrap();
        let spec = rep.spectrum_error.unwrap();
        assert_eq!(spec.len(), 4);
        assert!(spec[0] < 1e-9);
        assert!(rep.recon_error_frobenius.windows(2).all(|w| w[0] <= w[1] + 1e-15));
        assert_eq!(*rep.kept_slices.last().unwrap(), 0);
        assert!((rep.recon_error_frobenius[3] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn split_has_no_cross_terms() {
        let inst = HamiltonianInstance::interaction_only(random_valid(5, 4), "r5");
        let fh = factorize_hamiltonian(&inst, &FactorizationOptions::default()).unwrap();
        let split = split_reconstruction(&fh);
        assert_eq!(max_abs(&split.cross), 0.0);
        let m = group(&inst.two_body).unwrap();
        let resid = m.entries() - &split.symmetric - &split.antisymmetric;
        assert!(resid.norm() / m.frobenius_norm() < 1e-12);
    }
}
