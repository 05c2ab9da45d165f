//! Weak values: direct evaluation from states, and recovery from pointer moments.

use serde::Serialize;

use crate::engines::{JointCoupling, MeasurementRecord, SingleCoupling, DEFAULT_PS_FLOOR};
use crate::error::{Error, Result};
use crate::pointer::GaussianPointer;
use crate::qcore::{c, Observable, QuantumState, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateKind {
    DirectSingle,
    DirectJointSymmetrized,
    ExtractedSingle,
    ExtractedJoint,
}

/// Where the single weak values fed into a joint extraction came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SinglesSource {
    Direct,
    Extracted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeakValueEstimate {
    pub value: C64,
    pub kind: EstimateKind,
    /// `(Kx, Ky)`; `Ky` is absent for single-pointer estimates.
    pub couplings: Option<(f64, Option<f64>)>,
    pub singles: Option<SinglesSource>,
    /// Free-form tag naming the run or scenario behind the estimate.
    pub inputs_digest: String,
}

impl WeakValueEstimate {
    pub fn direct(value: C64, kind: EstimateKind, inputs_digest: impl Into<String>) -> Self {
        Self { value, kind, couplings: None, singles: None, inputs_digest: inputs_digest.into() }
    }

    pub fn with_digest(mut self, digest: impl Into<String>) -> Self {
        self.inputs_digest = digest.into();
        self
    }
}

fn checked_overlap(i: &QuantumState, f: &QuantumState) -> Result<C64> {
    let overlap = f.inner(i)?;
    let floor = DEFAULT_PS_FLOOR.sqrt();
    if !(overlap.norm() >= floor) {
        return Err(Error::OrthogonalPostselection { prob: overlap.norm_sqr(), floor: DEFAULT_PS_FLOOR });
    }
    Ok(overlap)
}

/// `⟨f|A|i⟩ / ⟨f|i⟩`.
pub fn direct_weak_value(a: &Observable, i: &QuantumState, f: &QuantumState) -> Result<C64> {
    let overlap = checked_overlap(i, f)?;
    Ok(f.sandwich(a.matrix(), i)? / overlap)
}

/// `⟨f|(AB+BA)/2|i⟩ / ⟨f|i⟩`; equals the weak value of `AB` when the two commute.
pub fn direct_joint_weak_value(
    a: &Observable,
    b: &Observable,
    i: &QuantumState,
    f: &QuantumState,
) -> Result<C64> {
    let overlap = checked_overlap(i, f)?;
    let ab = a.product_matrix(b)?;
    let sym = (&ab + ab.adjoint()).unscale(2.0);
    Ok(f.sandwich(&sym, i)? / overlap)
}

fn single_from_moments(x_mean: f64, px_mean: f64, k: f64, pointer: &GaussianPointer) -> Result<C64> {
    if k == 0.0 {
        return Err(Error::ZeroCoupling);
    }
    let s2 = pointer.sigma() * pointer.sigma();
    Ok(c(x_mean / k, 2.0 * s2 / pointer.hbar() * px_mean / k))
}

/// Re from the position shift, Im from the momentum shift.
pub fn extract_single(rec: &MeasurementRecord, c: &SingleCoupling) -> Result<WeakValueEstimate> {
    let value = single_from_moments(rec.x_mean, rec.px_mean, c.k, &c.pointer)?;
    Ok(WeakValueEstimate {
        value,
        kind: EstimateKind::ExtractedSingle,
        couplings: Some((c.k, None)),
        singles: None,
        inputs_digest: String::new(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointerAxis {
    X,
    Y,
}

/// Single weak value of `A` (x axis) or `B` (y axis) read off the marginal
/// moments of a joint run.
pub fn extract_marginal(rec: &MeasurementRecord, c: &JointCoupling, axis: PointerAxis) -> Result<WeakValueEstimate> {
    let (mean, momentum, k, pointer) = match axis {
        PointerAxis::X => (rec.x_mean, rec.px_mean, c.kx, &c.pointer_x),
        PointerAxis::Y => (rec.y_mean, rec.py_mean, c.ky, &c.pointer_y),
    };
    let value = single_from_moments(mean, momentum, k, pointer)?;
    Ok(WeakValueEstimate {
        value,
        kind: EstimateKind::ExtractedSingle,
        couplings: Some((k, None)),
        singles: None,
        inputs_digest: String::new(),
    })
}

/// Joint weak value of `(AB+BA)/2` from the `XY` and `X P_y` correlations,
/// given the single weak values `⟨A⟩_W` and `⟨B⟩_W`.
pub fn extract_joint(
    rec: &MeasurementRecord,
    singles: (C64, C64),
    source: SinglesSource,
    coupling: &JointCoupling,
) -> Result<WeakValueEstimate> {
    let kk = coupling.kx * coupling.ky;
    if kk == 0.0 {
        return Err(Error::ZeroCoupling);
    }
    let (aw, bw) = singles;
    let cross = aw.conj() * bw;
    let sy2 = coupling.pointer_y.sigma() * coupling.pointer_y.sigma();
    let re = 2.0 * rec.xy_mean / kk - cross.re;
    let im = 4.0 * sy2 / coupling.pointer_y.hbar() * rec.x_py_mean / kk - cross.im;
    Ok(WeakValueEstimate {
        value: c(re, im),
        kind: EstimateKind::ExtractedJoint,
        couplings: Some((coupling.kx, Some(coupling.ky))),
        singles: Some(source),
        inputs_digest: String::new(),
    })
}
