//! Instance generators: random symmetric tensors, a real-orbital family, and
//! a plane-wave ring model whose basis functions are genuinely complex.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::tensor::{
    antisymmetrize, antisymmetrize_unchecked, idx4, HamiltonianInstance, InteractionTensor, OneBodyMatrix, TwoBodyTensor,
};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn real_interaction(n: usize, data: Vec<f64>) -> InteractionTensor {
    let data = data.into_iter().map(|x| Complex64::new(x, 0.0)).collect();
    InteractionTensor::new([n; 4], data).expect("hypercubic by construction")
}

/// Random tensor satisfying every index relation exactly; deterministic in
/// `seed`.
pub fn random_valid(n_modes: usize, seed: u64) -> TwoBodyTensor {
    let mut rng = rng(seed);
    let g: Vec<f64> = (0..n_modes.pow(4))
        .map(|_| rng.sample(StandardNormal))
        .collect();
    antisymmetrize_unchecked(&real_interaction(n_modes, g))
        .expect("hypercubic by construction")
        .tensor
}

/// Random real symmetric matrix with standard normal entries.
fn random_symmetric(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let a = DMatrix::<f64>::from_fn(n, n, |_, _| rng.sample(StandardNormal));
    (&a + a.transpose()) * 0.5
}

/// Integrals of the form real orbitals produce,
/// `v[p,q,r,s] = sum_k w_k A^k[p,s] A^k[q,r]` with symmetric `A^k`.
pub fn real_basis_interaction(n_modes: usize, rank: usize, seed: u64) -> InteractionTensor {
    let mut rng = rng(seed);
    let n = n_modes;
    let mut v = vec![0.0; n.pow(4)];
    for _ in 0..rank {
        let w: f64 = rng.sample(StandardNormal);
        let a = random_symmetric(n, &mut rng);
        for p in 0..n {
            for q in 0..n {
                for r in 0..n {
                    for s in 0..n {
                        v[idx4(n, p, q, r, s)] += w * a[(p, s)] * a[(q, r)];
                    }
                }
            }
        }
    }
    real_interaction(n, v)
}

/// Antisymmetrized [`real_basis_interaction`].
pub fn real_basis_instance(n_modes: usize, rank: usize, seed: u64) -> TwoBodyTensor {
    antisymmetrize(&real_basis_interaction(n_modes, rank, seed))
        .expect("real-orbital integrals are mirror symmetric")
        .tensor
}

/// The two-mode tensor generated by the single integral `v[0,1,1,0] = 4`:
/// `h[0,1,1,0] = h[1,0,0,1] = 1`, `h[1,0,1,0] = h[0,1,0,1] = -1`.
pub fn two_mode_example() -> TwoBodyTensor {
    let v = InteractionTensor::from_fn(2, |p, q, r, s| {
        if (p, q, r, s) == (0, 1, 1, 0) {
            Complex64::new(4.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    antisymmetrize(&v).expect("real input").tensor
}

/// Plane waves `e^{i k_j x} / sqrt(L)` on a ring of length `L`, momenta
/// `k_j = 2 pi j / L` for `j in -m..=m`, interacting through a Gaussian
/// potential with Fourier profile `V0 exp(-k^2 sigma^2 / 2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RingModelParams {
    /// `2m + 1`.
    pub n_modes: usize,
    pub ring_length: f64,
    pub potential_strength: f64,
    pub potential_width: f64,
}

impl RingModelParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_modes == 0 || self.n_modes.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "ring model needs an odd number of modes (2m+1), got {}",
                self.n_modes
            )));
        }
        for (name, x) in [
            ("ring length", self.ring_length),
            ("potential strength", self.potential_strength),
            ("potential width", self.potential_width),
        ] {
            if !(x.is_finite() && x > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive and finite, got {x}"
                )));
            }
        }
        Ok(())
    }

    pub fn half_width(&self) -> i64 {
        (self.n_modes as i64 - 1) / 2
    }

    /// Momentum quantum number of array index `i`.
    pub fn momentum_number(&self, i: usize) -> i64 {
        i as i64 - self.half_width()
    }

    pub fn wavenumber(&self, i: usize) -> f64 {
        2.0 * PI * self.momentum_number(i) as f64 / self.ring_length
    }

    pub fn potential_fourier(&self, k: f64) -> f64 {
        let s = self.potential_width;
        self.potential_strength * (-0.5 * k * k * s * s).exp()
    }
}

/// Raw ring integrals `v[p,q,r,s] = V(k_p - k_s) / L` on momentum-conserving
/// quadruples `j_p + j_q = j_r + j_s`, zero elsewhere.
pub fn ring_interaction(params: &RingModelParams) -> Result<InteractionTensor> {
    params.validate()?;
    let j = |i| params.momentum_number(i);
    let l = params.ring_length;
    Ok(InteractionTensor::from_fn(params.n_modes, |p, q, r, s| {
        if j(p) + j(q) == j(r) + j(s) {
            let k = params.wavenumber(p) - params.wavenumber(s);
            Complex64::new(params.potential_fourier(k) / l, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    }))
}

/// Ring Hamiltonian: kinetic one-body term `k^2/2` plus the antisymmetrized
/// Gaussian interaction.
pub fn ring_planewave(params: &RingModelParams) -> Result<HamiltonianInstance> {
    let v = ring_interaction(params)?;
    let h = antisymmetrize(&v)?.tensor;
    let n = params.n_modes;
    let f = DMatrix::from_fn(n, n, |p, q| {
        if p == q {
            let k = params.wavenumber(p);
            Complex64::new(0.5 * k * k, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    HamiltonianInstance::new(
        OneBodyMatrix::new(f)?,
        h,
        format!(
            "ring m={} L={} V0={} sigma={}",
            params.half_width(),
            params.ring_length,
            params.potential_strength,
            params.potential_width
        ),
    )
}
