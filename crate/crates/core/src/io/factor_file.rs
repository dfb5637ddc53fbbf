//! JSON factor file, version 1.
//!
//! Every float is written in scientific notation with 17 significant digits,
//! which is enough for the parser to recover the exact `f64`. Complex
//! matrices are stored row-major as interleaved `re, im` pairs.

use std::io::{self, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::assemble::FactoredHamiltonian;
use crate::error::{Error, Result};
use crate::factorize::{FactorSlice, FactorizationOptions, Parity};
use crate::tensor::{OneBodyMatrix, TOL_INPUT};

pub const FORMAT: &str = "FHF1";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SliceRecord {
    pub weight: f64,
    pub parity: Parity,
    pub lambdas: Vec<f64>,
    /// `2 N^2` values.
    pub rotation: Vec<f64>,
    /// The real slice matrix, `N^2` values row-major.
    pub slice: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorFile {
    pub format: String,
    pub version: u32,
    pub n_modes: usize,
    pub options: FactorizationOptions,
    /// `2 N^2` values.
    pub one_body: Vec<f64>,
    /// `2 N^2` values.
    pub correction: Vec<f64>,
    pub slices: Vec<SliceRecord>,
}

fn flatten_real(m: &DMatrix<f64>) -> Vec<f64> {
    let (r, c) = m.shape();
    (0..r).flat_map(|i| (0..c).map(move |j| m[(i, j)])).collect()
}

fn flatten_complex(m: &DMatrix<Complex64>) -> Vec<f64> {
    let (r, c) = m.shape();
    (0..r)
        .flat_map(|i| (0..c).flat_map(move |j| [m[(i, j)].re, m[(i, j)].im]))
        .collect()
}

fn check_len(what: &str, values: &[f64], expected: usize) -> Result<()> {
    if values.len() != expected {
        return Err(Error::Format(format!(
            "{what} has {} values, expected {expected}",
            values.len()
        )));
    }
    if let Some(x) = values.iter().find(|x| !x.is_finite()) {
        return Err(Error::Format(format!("{what} contains non-finite value {x}")));
    }
    Ok(())
}

fn unflatten_real(what: &str, n: usize, values: &[f64]) -> Result<DMatrix<f64>> {
    check_len(what, values, n * n)?;
    Ok(DMatrix::from_row_slice(n, n, values))
}

fn unflatten_complex(what: &str, n: usize, values: &[f64]) -> Result<DMatrix<Complex64>> {
    check_len(what, values, 2 * n * n)?;
    let entries: Vec<Complex64> = values
        .chunks_exact(2)
        .map(|c| Complex64::new(c[0], c[1]))
        .collect();
    Ok(DMatrix::from_row_slice(n, n, &entries))
}

impl FactorFile {
    pub fn from_factored(fh: &FactoredHamiltonian) -> Self {
        Self {
            format: FORMAT.to_string(),
            version: VERSION,
            n_modes: fh.n_modes,
            options: fh.options,
            one_body: flatten_complex(fh.one_body.entries()),
            correction: flatten_complex(fh.correction.entries()),
            slices: fh
                .slices
                .iter()
                .map(|s| SliceRecord {
                    weight: s.weight,
                    parity: s.parity,
                    lambdas: s.lambdas.iter().copied().collect(),
                    rotation: flatten_complex(&s.rotation),
                    slice: flatten_real(&s.slice),
                })
                .collect(),
        }
    }

    pub fn to_factored(&self) -> Result<FactoredHamiltonian> {
        if self.format != FORMAT || self.version != VERSION {
            return Err(Error::Format(format!(
                "unsupported factor file {} version {}",
                self.format, self.version
            )));
        }
        self.options.validate()?;
        let n = self.n_modes;
        let one_body = OneBodyMatrix::with_tolerance(
            unflatten_complex("one_body", n, &self.one_body)?,
            TOL_INPUT,
        )?;
        let correction = OneBodyMatrix::with_tolerance(
            unflatten_complex("correction", n, &self.correction)?,
            TOL_INPUT,
        )?;
        let slices = self
            .slices
            .iter()
            .enumerate()
            .map(|(i, rec)| {
                check_len(&format!("slice {i} weight"), &[rec.weight], 1)?;
                check_len(&format!("slice {i} lambdas"), &rec.lambdas, n)?;
                Ok(FactorSlice {
                    weight: rec.weight,
                    parity: rec.parity,
                    slice: unflatten_real(&format!("slice {i}"), n, &rec.slice)?,
                    rotation: unflatten_complex(&format!("slice {i} rotation"), n, &rec.rotation)?,
                    lambdas: DVector::from_vec(rec.lambdas.clone()),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(FactoredHamiltonian {
            n_modes: n,
            one_body,
            correction,
            slices,
            options: self.options,
        })
    }

    pub fn to_string_pretty(&self) -> Result<String> {
        let mut out = Vec::new();
        let mut ser = serde_json::Serializer::with_formatter(&mut out, SigFigFormatter::default());
        self.serialize(&mut ser)?;
        out.push(b'\n');
        Ok(String::from_utf8(out).expect("JSON output is UTF-8"))
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_string_pretty()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

pub fn save(fh: &FactoredHamiltonian, path: impl AsRef<Path>) -> Result<()> {
    FactorFile::from_factored(fh).save(path)
}

pub fn load(path: impl AsRef<Path>) -> Result<FactoredHamiltonian> {
    FactorFile::load(path)?.to_factored()
}

/// Pretty JSON with floats as `{:.16e}`.
#[derive(Default)]
pub struct SigFigFormatter(PrettyFormatter<'static>);

impl Formatter for SigFigFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assemble::factorize_hamiltonian;
    use crate::generators::{random_valid, two_mode_example};
    use crate::tensor::HamiltonianInstance;

    fn factored(h: crate::tensor::TwoBodyTensor) -> FactoredHamiltonian {
        factorize_hamiltonian(
            &HamiltonianInstance::interaction_only(h, "t"),
            &FactorizationOptions::default(),
        )
        .unwrap()
    }

    #[test]
    fn floats_keep_seventeen_digits() {
        let mut out = Vec::new();
        let mut ser = serde_json::Serializer::with_formatter(&mut out, SigFigFormatter::default());
        vec![0.1, -0.0, 1.0 / 3.0, 1e-300].serialize(&mut ser).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.contains("1.0000000000000001e-1"), "{text}");
        assert!(text.contains("-0.0000000000000000e0"), "{text}");
        let back: Vec<f64> = serde_json::from_str(&text).unwrap();
        assert_eq!(back[2].to_bits(), (1.0f64 / 3.0).to_bits());
        assert!(back[1].is_sign_negative());
    }

    #[test]
    fn round_trip_is_bit_exact() {
        for h in [two_mode_example(), random_valid(4, 3)] {
            let fh = factored(h);
            let text = FactorFile::from_factored(&fh).to_string_pretty().unwrap();
            let back = FactorFile::parse(&text).unwrap().to_factored().unwrap();
            assert_eq!(back, fh);
            assert_eq!(FactorFile::from_factored(&back).to_string_pretty().unwrap(), text);
        }
    }

    #[test]
    fn rejects_wrong_lengths_and_versions() {
        let fh = factored(two_mode_example());
        let mut file = FactorFile::from_factored(&fh);
        file.slices[0].rotation.pop();
        assert!(matches!(file.to_factored(), Err(Error::Format(_))));
        let mut file = FactorFile::from_factored(&fh);
        file.version = 2;
        assert!(file.to_factored().is_err());
        let text = FactorFile::from_factored(&fh).to_string_pretty().unwrap();
        let extra = text.replacen("\"n_modes\"", "\"bogus\": 1,\n  \"n_modes\"", 1);
        assert!(FactorFile::parse(&extra).is_err());
    }
}
