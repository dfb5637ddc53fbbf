//! Binary tensor file, version 1.
//!
//! ```text
//! offset  size  field
//!      0     4  magic "FHT1"
//!      4     2  format version (u16 LE) = 1
//!      6     2  number of modes N (u16 LE)
//!      8     1  flags: bit0 one-body present, bit1 one-body complex
//!      9     7  reserved, zero
//!     16        one-body, N*N row-major values: f64 LE, or re,im f64 LE pairs
//!               when bit1 is set (only if bit0 is set)
//!      …        two-body, N^4 f64 LE, h[p,q,r,s] row-major with s fastest
//! ```

use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tensor::{
    validate_symmetries_with, HamiltonianInstance, OneBodyMatrix, TwoBodyTensor, TOL_INPUT,
};

pub const MAGIC: [u8; 4] = *b"FHT1";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 16;
pub const FLAG_ONE_BODY: u8 = 0b01;
pub const FLAG_ONE_BODY_COMPLEX: u8 = 0b10;

#[derive(Debug, Clone, PartialEq)]
pub struct TensorFile {
    pub two_body: TwoBodyTensor,
    pub one_body: Option<OneBodyMatrix>,
    /// Store the one-body matrix as complex pairs.
    pub one_body_complex: bool,
}

impl TensorFile {
    pub fn interaction_only(two_body: TwoBodyTensor) -> Self {
        Self {
            two_body,
            one_body: None,
            one_body_complex: false,
        }
    }

    pub fn from_instance(inst: &HamiltonianInstance, one_body_complex: bool) -> Self {
        Self {
            two_body: inst.two_body.clone(),
            one_body: Some(inst.one_body.clone()),
            one_body_complex,
        }
    }

    pub fn n_modes(&self) -> usize {
        self.two_body.n_modes()
    }

    /// The Hamiltonian, with `f = 0` when no one-body block is stored.
    pub fn instance(&self, label: impl Into<String>) -> Result<HamiltonianInstance> {
        let one_body = self
            .one_body
            .clone()
            .unwrap_or_else(|| OneBodyMatrix::zeros(self.n_modes()));
        HamiltonianInstance::new(one_body, self.two_body.clone(), label)
    }

    pub fn flags(&self) -> u8 {
        match (&self.one_body, self.one_body_complex) {
            (None, _) => 0,
            (Some(_), false) => FLAG_ONE_BODY,
            (Some(_), true) => FLAG_ONE_BODY | FLAG_ONE_BODY_COMPLEX,
        }
    }

    /// Exact file size for `n_modes` modes and the given flags.
    pub fn expected_len(n_modes: usize, flags: u8) -> usize {
        let n2 = n_modes * n_modes;
        let one_body = match (flags & FLAG_ONE_BODY != 0, flags & FLAG_ONE_BODY_COMPLEX != 0) {
            (false, _) => 0,
            (true, false) => n2 * 8,
            (true, true) => n2 * 16,
        };
        HEADER_LEN + one_body + n2 * n2 * 8
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let n = self.n_modes();
        let n16 = u16::try_from(n)
            .map_err(|_| Error::Format(format!("{n} modes do not fit the header")))?;
        let flags = self.flags();
        let mut out = Vec::with_capacity(Self::expected_len(n, flags));
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&n16.to_le_bytes());
        out.push(flags);
        out.extend_from_slice(&[0u8; 7]);
        if let Some(f) = &self.one_body {
            if f.n_modes() != n {
                return Err(Error::Shape("one-body and two-body mode counts differ".into()));
            }
            for p in 0..n {
                for q in 0..n {
                    let z = f.entries()[(p, q)];
                    out.extend_from_slice(&z.re.to_le_bytes());
                    if self.one_body_complex {
                        out.extend_from_slice(&z.im.to_le_bytes());
                    } else if z.im != 0.0 {
                        return Err(Error::Format(
                            "complex one-body matrix cannot be stored as real".into(),
                        ));
                    }
                }
            }
        }
        for x in self.two_body.data() {
            out.extend_from_slice(&x.to_le_bytes());
        }
        Ok(out)
    }

    /// Parses a file image. With `validate`, the tensor must satisfy its
    /// index relations to `1e-10 * max(1, max|h|)`.
    pub fn from_bytes(bytes: &[u8], validate: bool) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::Format(format!("file of {} bytes has no header", bytes.len())));
        }
        if bytes[0..4] != MAGIC {
            return Err(Error::Format("bad magic, expected FHT1".into()));
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != VERSION {
            return Err(Error::Format(format!("unsupported format version {version}")));
        }
        let n = u16::from_le_bytes([bytes[6], bytes[7]]) as usize;
        let flags = bytes[8];
        if flags & !(FLAG_ONE_BODY | FLAG_ONE_BODY_COMPLEX) != 0 {
            return Err(Error::Format(format!(
                "unsupported flags {flags:#04b}; two-body data must be real"
            )));
        }
        if flags & FLAG_ONE_BODY == 0 && flags & FLAG_ONE_BODY_COMPLEX != 0 {
            return Err(Error::Format("complex flag set without a one-body block".into()));
        }
        if bytes[9..16].iter().any(|&b| b != 0) {
            return Err(Error::Format("reserved header bytes are not zero".into()));
        }
        let expected = Self::expected_len(n, flags);
        if bytes.len() != expected {
            return Err(Error::Format(format!(
                "file has {} bytes, header implies {expected}",
                bytes.len()
            )));
        }

        let mut values = bytes[HEADER_LEN..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")));
        let complex = flags & FLAG_ONE_BODY_COMPLEX != 0;
        let one_body = if flags & FLAG_ONE_BODY != 0 {
            let mut m = DMatrix::zeros(n, n);
            for p in 0..n {
                for q in 0..n {
                    let re = values.next().expect("length checked");
                    let im = if complex { values.next().expect("length checked") } else { 0.0 };
                    m[(p, q)] = Complex64::new(re, im);
                }
            }
            Some(OneBodyMatrix::with_tolerance(m, TOL_INPUT)?)
        } else {
            None
        };
        let two_body = TwoBodyTensor::from_vec(n, values.collect())?;
        if validate {
            let tol = TOL_INPUT * two_body.max_abs().max(1.0);
            let report = validate_symmetries_with(&two_body, tol);
            if !report.ok {
                return Err(Error::Symmetry {
                    defect: report.max_defect(),
                    tolerance: tol,
                });
            }
        }
        Ok(Self {
            two_body,
            one_body,
            one_body_complex: complex,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>, validate: bool) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?, validate)
    }
}
