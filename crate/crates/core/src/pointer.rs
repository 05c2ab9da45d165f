//! Gaussian measurement pointer.
//!
//! The pointer starts in the real minimum-uncertainty Gaussian centred at
//! zero with position spread `sigma`. Two representations are provided:
//! closed-form integrals between displaced copies of that Gaussian, and a
//! truncated oscillator (Fock) basis in which the Gaussian is the vacuum and
//! `X = sigma (a + a†)`, `P = (hbar / 2 sigma)(a - a†)/i`.
//!
//! Conventions: `P = -i hbar d/dx`, and `exp(-i K A P / hbar)` moves the
//! pointer by `+K a` on the eigenvalue-`a` branch.

use crate::error::{Error, Result};
use crate::qcore::{c, CMatrix, CVector, C64, ONE, ZERO};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPointer {
    sigma: f64,
    hbar: f64,
}

impl GaussianPointer {
    pub fn new(sigma: f64, hbar: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!("pointer width must be positive, got {sigma}")));
        }
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(Error::InvalidParameter(format!("hbar must be positive, got {hbar}")));
        }
        Ok(Self { sigma, hbar })
    }

    /// Pointer with `hbar = 1`.
    pub fn with_sigma(sigma: f64) -> Result<Self> {
        Self::new(sigma, 1.0)
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    /// Pointer wavefunction displaced to `center`, evaluated at `x`.
    pub fn wavefunction(&self, center: f64, x: f64) -> f64 {
        let s = self.sigma;
        let norm = (1.0 / ((2.0 * std::f64::consts::PI).sqrt() * s)).sqrt();
        norm * (-(x - center).powi(2) / (4.0 * s * s)).exp()
    }
}

/// `∫ g_{d1}(x) g_{d2}(x) dx` for two copies of the pointer Gaussian.
pub fn gaussian_overlap(d1: f64, d2: f64, p: &GaussianPointer) -> f64 {
    let s = p.sigma;
    (-(d1 - d2).powi(2) / (8.0 * s * s)).exp()
}

/// `∫ g_{d1}(x) x g_{d2}(x) dx`.
pub fn moment_x(d1: f64, d2: f64, p: &GaussianPointer) -> f64 {
    0.5 * (d1 + d2) * gaussian_overlap(d1, d2, p)
}

/// `∫ g_{d1}(x) (-i hbar d/dx) g_{d2}(x) dx`, purely imaginary.
pub fn moment_p(d1: f64, d2: f64, p: &GaussianPointer) -> C64 {
    let s = p.sigma;
    c(0.0, p.hbar * (d1 - d2) / (4.0 * s * s) * gaussian_overlap(d1, d2, p))
}

/// Pointer in a truncated oscillator basis `|0⟩ … |n_max⟩`.
#[derive(Debug, Clone)]
pub struct FockPointer {
    base: GaussianPointer,
    n_max: usize,
    x: CMatrix,
    p: CMatrix,
}

pub fn build_fock(p: &GaussianPointer, n_max: usize) -> Result<FockPointer> {
    if n_max < 2 {
        return Err(Error::InvalidTruncation(n_max));
    }
    let dim = n_max + 1;
    let mut lower = CMatrix::zeros(dim, dim);
    for n in 1..dim {
        lower[(n - 1, n)] = c((n as f64).sqrt(), 0.0);
    }
    let raise = lower.adjoint();
    let x = (&lower + &raise).scale(p.sigma);
    // (a - a†)/i = -i (a - a†)
    let p_scale = p.hbar / (2.0 * p.sigma);
    let p_mat = (&lower - &raise).map(|z| c(z.im, -z.re)).scale(p_scale);
    Ok(FockPointer { base: *p, n_max, x, p: p_mat })
}

impl FockPointer {
    pub fn base(&self) -> &GaussianPointer {
        &self.base
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn dim(&self) -> usize {
        self.n_max + 1
    }

    pub fn x(&self) -> &CMatrix {
        &self.x
    }

    pub fn p(&self) -> &CMatrix {
        &self.p
    }

    pub fn vacuum(&self) -> CVector {
        let mut v = CVector::from_element(self.dim(), ZERO);
        v[0] = ONE;
        v
    }

    /// `⟨vac|M|vac⟩`.
    pub fn vacuum_expectation(&self, m: &CMatrix) -> C64 {
        m[(0, 0)]
    }
}
