//! Spatial correlation matrix and its eigenvalue ratios.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::calibration::CalibratedResponse;
use crate::error::{Error, Result};

/// Eigenvalue ratio in dB, with sentinels for the degenerate cases.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gamma {
    Db(f64),
    /// Denominator eigenvalue is numerically zero.
    Unbounded,
    /// Not enough ports, or a zero matrix.
    Undefined,
}

impl Gamma {
    /// `+inf` for [`Gamma::Unbounded`], NaN for [`Gamma::Undefined`].
    pub fn value(self) -> f64 {
        match self {
            Gamma::Db(v) => v,
            Gamma::Unbounded => f64::INFINITY,
            Gamma::Undefined => f64::NAN,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Gamma::Db(_))
    }
}

impl std::fmt::Display for Gamma {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Gamma::Db(v) => write!(f, "{v}"),
            Gamma::Unbounded => f.write_str("inf"),
            Gamma::Undefined => f.write_str("undefined"),
        }
    }
}

/// Eigenvalues below this fraction of the trace count as zero for the ratios.
pub const ZERO_EIGEN_FRACTION: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct EigenMetrics {
    pub r: DMatrix<Complex64>,
    /// Descending.
    pub eigenvalues: Vec<f64>,
    pub gamma12: Gamma,
    pub gamma14: Gamma,
}

impl EigenMetrics {
    /// `10 log10(E_max / E_min)`; infinite when the smallest is not positive.
    pub fn span_db(&self) -> f64 {
        eigen_span_db(&self.eigenvalues)
    }
}

pub fn eigen_span_db(eigenvalues: &[f64]) -> f64 {
    let (Some(&max), Some(&min)) = (eigenvalues.first(), eigenvalues.last()) else {
        return f64::NAN;
    };
    if min > 0.0 {
        10.0 * (max / min).log10()
    } else {
        f64::INFINITY
    }
}

/// `R = mean_n H(f_n) H(f_n)^H` for a port-major, tones-innermost response.
pub fn correlation_matrix(h_f: &[Complex64], ports: usize, tones: usize) -> Result<DMatrix<Complex64>> {
    if ports == 0 || tones == 0 || h_f.len() != ports * tones {
        return Err(Error::DimensionMismatch(format!(
            "{} values for {ports} ports x {tones} tones",
            h_f.len()
        )));
    }
    // With H = A + jB (ports x tones), H H^H = (A A^T + B B^T) + j(B A^T - A B^T).
    // Stacking M = [A B] and N = [B -A] turns this into two real products.
    let width = 2 * tones;
    let mut m = DMatrix::<f64>::zeros(ports, width);
    let mut n = DMatrix::<f64>::zeros(ports, width);
    for k in 0..ports {
        for (t, v) in h_f[k * tones..(k + 1) * tones].iter().enumerate() {
            m[(k, t)] = v.re;
            m[(k, tones + t)] = v.im;
            n[(k, t)] = v.im;
            n[(k, tones + t)] = -v.re;
        }
    }
    let mt = m.transpose();
    let re = &m * &mt;
    let im = &n * &mt;
    let scale = 1.0 / tones as f64;
    // Fill from the upper triangle so R is exactly conjugate-symmetric.
    Ok(DMatrix::from_fn(ports, ports, |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Equal => Complex64::new(re[(i, i)] * scale, 0.0),
        std::cmp::Ordering::Less => Complex64::new(re[(i, j)], im[(i, j)]) * scale,
        std::cmp::Ordering::Greater => Complex64::new(re[(j, i)], -im[(j, i)]) * scale,
    }))
}

/// Eigenvalues of `(R + R^H) / 2`, sorted descending.
pub fn hermitian_eigenvalues(r: &DMatrix<Complex64>) -> Vec<f64> {
    let sym = (r + r.adjoint()).unscale(2.0);
    let mut e: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    e.sort_by(|a, b| b.total_cmp(a));
    e
}

fn ratio(e1: f64, ek: f64, zero: f64) -> Gamma {
    if ek <= zero {
        Gamma::Unbounded
    } else {
        Gamma::Db(10.0 * (e1 / ek).log10())
    }
}

pub fn gammas(eigenvalues: &[f64]) -> (Gamma, Gamma) {
    let trace: f64 = eigenvalues.iter().sum();
    if eigenvalues.is_empty() || !(eigenvalues[0] > 0.0) {
        return (Gamma::Undefined, Gamma::Undefined);
    }
    let zero = ZERO_EIGEN_FRACTION * trace;
    let g12 = match eigenvalues.get(1) {
        Some(&e2) => ratio(eigenvalues[0], e2, zero),
        None => Gamma::Undefined,
    };
    let g14 = match eigenvalues.get(3) {
        Some(&e4) => ratio(eigenvalues[0], e4, zero),
        None => Gamma::Undefined,
    };
    (g12, g14)
}

pub fn correlation_and_eigen(h: &CalibratedResponse) -> Result<EigenMetrics> {
    let r = correlation_matrix(&h.h_f, h.port_count, h.tone_count)?;
    let eigenvalues = hermitian_eigenvalues(&r);
    let (gamma12, gamma14) = gammas(&eigenvalues);
    Ok(EigenMetrics {
        r,
        eigenvalues,
        gamma12,
        gamma14,
    })
}
