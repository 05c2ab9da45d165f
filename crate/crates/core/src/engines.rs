//! Post-selected pointer moments under the von Neumann coupling.
//!
//! Three independent routes:
//!
//! * [`run_single_exact`] / [`run_joint_exact`]: expand `|i⟩` in the
//!   (joint) eigenbasis of the coupled observables; each branch drags a
//!   displaced copy of the pointer Gaussian, and all moments follow from the
//!   closed-form integrals in [`crate::pointer`]. Exact at any coupling.
//! * [`run_fock`]: the pointer lives in a truncated oscillator basis and the
//!   full unitary `exp(-iH/hbar)` is applied. Handles noncommuting pairs.
//! * [`heisenberg_moment`]: the nested-commutator series of the Heisenberg
//!   picture, order by order, without normalization.
//!
//! Interaction time is absorbed into the couplings (`t = 1`, so `K = g`).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::pointer::{build_fock, gaussian_overlap, moment_p, moment_x, FockPointer, GaussianPointer};
use crate::qcore::{
    c, check_dim, eig_unchecked, hermitian_eig, simultaneous_eig, CMatrix, CVector, Observable,
    QuantumState, Tensor, C64, ZERO,
};

pub const DEFAULT_PS_FLOOR: f64 = 1e-12;
pub const DEFAULT_N_MAX: usize = 40;
/// Relative commutator bound for the joint exact engine.
pub const COMMUTING_TOL: f64 = 1e-10;
/// Imaginary residue allowed on a moment that must be real.
pub const IMAG_RESIDUE_TOL: f64 = 1e-10;
/// Population allowed in the top two Fock levels before a warning is raised.
pub const TRUNCATION_POPULATION_TOL: f64 = 1e-8;
pub const MAX_SERIES_ORDER: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineOptions {
    pub ps_floor: f64,
}

impl Default for EngineOptions {
    fn default() -> Self {
        Self { ps_floor: DEFAULT_PS_FLOOR }
    }
}

/// `H = K A P_x` on a one-dimensional pointer.
#[derive(Debug, Clone)]
pub struct SingleCoupling {
    pub observable: Observable,
    pub k: f64,
    pub pointer: GaussianPointer,
}

impl SingleCoupling {
    pub fn new(observable: Observable, k: f64, pointer: GaussianPointer) -> Result<Self> {
        if !k.is_finite() {
            return Err(Error::InvalidParameter(format!("coupling must be finite, got {k}")));
        }
        Ok(Self { observable, k, pointer })
    }

    /// `|K| ρ(A) / σ`; small values mean the measurement is weak.
    pub fn weakness_ratio(&self) -> f64 {
        self.k.abs() * self.observable.spectral_radius() / self.pointer.sigma()
    }

    /// The same coupling viewed as a joint one with nothing on the y axis.
    pub fn as_joint(&self) -> JointCoupling {
        JointCoupling {
            a: self.observable.clone(),
            b: Observable::zeros(self.observable.dim()),
            kx: self.k,
            ky: 0.0,
            pointer_x: self.pointer,
            pointer_y: self.pointer,
        }
    }
}

/// `H = Kx A P_x + Ky B P_y` on a two-dimensional pointer.
#[derive(Debug, Clone)]
pub struct JointCoupling {
    pub a: Observable,
    pub b: Observable,
    pub kx: f64,
    pub ky: f64,
    pub pointer_x: GaussianPointer,
    pub pointer_y: GaussianPointer,
}

impl JointCoupling {
    pub fn new(
        a: Observable,
        b: Observable,
        kx: f64,
        ky: f64,
        pointer_x: GaussianPointer,
        pointer_y: GaussianPointer,
    ) -> Result<Self> {
        check_dim(a.dim(), b.dim())?;
        if !(kx.is_finite() && ky.is_finite()) {
            return Err(Error::InvalidParameter("couplings must be finite".into()));
        }
        if pointer_x.hbar() != pointer_y.hbar() {
            return Err(Error::InvalidParameter("pointer axes must share the same hbar".into()));
        }
        Ok(Self { a, b, kx, ky, pointer_x, pointer_y })
    }

    pub fn weakness_ratio(&self) -> f64 {
        let rx = self.kx.abs() * self.a.spectral_radius() / self.pointer_x.sigma();
        let ry = self.ky.abs() * self.b.spectral_radius() / self.pointer_y.sigma();
        rx.max(ry)
    }

    pub fn hbar(&self) -> f64 {
        self.pointer_x.hbar()
    }
}

#[derive(Debug, Clone)]
pub enum Coupling {
    Single(SingleCoupling),
    Joint(JointCoupling),
}

impl From<SingleCoupling> for Coupling {
    fn from(c: SingleCoupling) -> Self {
        Coupling::Single(c)
    }
}

impl From<JointCoupling> for Coupling {
    fn from(c: JointCoupling) -> Self {
        Coupling::Joint(c)
    }
}

impl Coupling {
    pub fn weakness_ratio(&self) -> f64 {
        match self {
            Coupling::Single(s) => s.weakness_ratio(),
            Coupling::Joint(j) => j.weakness_ratio(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineTag {
    Exact,
    Fock,
}

impl EngineTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            EngineTag::Exact => "exact",
            EngineTag::Fock => "fock",
        }
    }
}

/// Fock-engine health: how much of the evolved state sits near the cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TruncationReport {
    pub n_max: usize,
    /// Population in the top two levels of either pointer axis.
    pub top_population: f64,
    /// Norm of the evolved global state before post-selection.
    pub global_norm: f64,
    pub warning: bool,
}

/// Conditional (post-selected) pointer moments.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasurementRecord {
    pub ps_prob: f64,
    pub x_mean: f64,
    pub y_mean: f64,
    pub px_mean: f64,
    pub py_mean: f64,
    pub xy_mean: f64,
    pub x_py_mean: f64,
    pub weakness_ratio: f64,
    pub engine: EngineTag,
    pub truncation: Option<TruncationReport>,
}

impl MeasurementRecord {
    /// The six conditional moments, in a fixed order.
    pub fn moments(&self) -> [f64; 6] {
        [self.x_mean, self.y_mean, self.px_mean, self.py_mean, self.xy_mean, self.x_py_mean]
    }
}

/// Unnormalized moment sums, still complex.
#[derive(Debug, Default, Clone, Copy)]
struct RawMoments {
    ps: C64,
    x: C64,
    y: C64,
    px: C64,
    py: C64,
    xy: C64,
    xpy: C64,
}

fn real_checked(z: C64, quantity: &'static str) -> Result<f64> {
    if !(z.im.abs() <= IMAG_RESIDUE_TOL * z.re.abs().max(1.0)) {
        return Err(Error::NumericalConsistency { quantity, residue: z.im });
    }
    Ok(z.re)
}

impl RawMoments {
    fn normalize(
        self,
        floor: f64,
        weakness_ratio: f64,
        engine: EngineTag,
        truncation: Option<TruncationReport>,
    ) -> Result<MeasurementRecord> {
        let ps = real_checked(self.ps, "post-selection probability")?;
        if !(ps >= floor) {
            return Err(Error::OrthogonalPostselection { prob: ps, floor });
        }
        if ps > 1.0 + 1e-12 {
            return Err(Error::NumericalConsistency { quantity: "post-selection probability", residue: ps - 1.0 });
        }
        Ok(MeasurementRecord {
            ps_prob: ps.min(1.0),
            x_mean: real_checked(self.x / ps, "<X>_fi")?,
            y_mean: real_checked(self.y / ps, "<Y>_fi")?,
            px_mean: real_checked(self.px / ps, "<Px>_fi")?,
            py_mean: real_checked(self.py / ps, "<Py>_fi")?,
            xy_mean: real_checked(self.xy / ps, "<XY>_fi")?,
            x_py_mean: real_checked(self.xpy / ps, "<X Py>_fi")?,
            weakness_ratio,
            engine,
            truncation,
        })
    }
}

/// A post-selected branch: amplitude `⟨f|k⟩⟨k|i⟩` and pointer displacements.
struct Branch {
    amp: C64,
    dx: f64,
    dy: f64,
}

fn branch_moments(branches: &[Branch], px: &GaussianPointer, py: &GaussianPointer) -> RawMoments {
    let mut m = RawMoments::default();
    for bk in branches {
        for bl in branches {
            let w = bk.amp.conj() * bl.amp;
            let ovx = gaussian_overlap(bk.dx, bl.dx, px);
            let ovy = gaussian_overlap(bk.dy, bl.dy, py);
            let mx = moment_x(bk.dx, bl.dx, px);
            let my = moment_x(bk.dy, bl.dy, py);
            let mpx = moment_p(bk.dx, bl.dx, px);
            let mpy = moment_p(bk.dy, bl.dy, py);
            m.ps += w * (ovx * ovy);
            m.x += w * (mx * ovy);
            m.y += w * (ovx * my);
            m.px += w * mpx * ovy;
            m.py += w * mpy * ovx;
            m.xy += w * (mx * my);
            m.xpy += w * mpy * mx;
        }
    }
    m
}

fn postselected_amplitude(f: &QuantumState, v: &CVector, i: &QuantumState) -> C64 {
    f.amplitudes().dotc(v) * v.dotc(i.amplitudes())
}

pub fn run_single_exact(
    i: &QuantumState,
    f: &QuantumState,
    c: &SingleCoupling,
    opts: &EngineOptions,
) -> Result<MeasurementRecord> {
    check_dim(i.dim(), f.dim())?;
    check_dim(i.dim(), c.observable.dim())?;
    let eig = hermitian_eig(&c.observable);
    let branches: Vec<Branch> = eig
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(k, &a)| Branch {
            amp: postselected_amplitude(f, &eig.eigenvector(k), i),
            dx: c.k * a,
            dy: 0.0,
        })
        .collect();
    branch_moments(&branches, &c.pointer, &c.pointer).normalize(
        opts.ps_floor,
        c.weakness_ratio(),
        EngineTag::Exact,
        None,
    )
}

/// Exact joint engine; refuses noncommuting pairs (use [`run_fock`]).
pub fn run_joint_exact(
    i: &QuantumState,
    f: &QuantumState,
    c: &JointCoupling,
    opts: &EngineOptions,
) -> Result<MeasurementRecord> {
    check_dim(i.dim(), f.dim())?;
    check_dim(i.dim(), c.a.dim())?;
    let joint = simultaneous_eig(&c.a, &c.b, COMMUTING_TOL)?;
    let branches: Vec<Branch> = joint
        .pairs
        .iter()
        .enumerate()
        .map(|(k, &(a, b))| Branch {
            amp: postselected_amplitude(f, &joint.eigenvector(k), i),
            dx: c.kx * a,
            dy: c.ky * b,
        })
        .collect();
    branch_moments(&branches, &c.pointer_x, &c.pointer_y).normalize(
        opts.ps_floor,
        c.weakness_ratio(),
        EngineTag::Exact,
        None,
    )
}

/// One pointer axis expressed in the eigenbasis of its truncated momentum.
struct Axis {
    dim: usize,
    momenta: Vec<f64>,
    /// Columns are momentum eigenvectors in the Fock basis.
    vectors: CMatrix,
    x: CMatrix,
    p: CMatrix,
}

impl Axis {
    fn from_fock(fp: &FockPointer) -> Self {
        let eig = eig_unchecked(fp.p());
        Self {
            dim: fp.dim(),
            momenta: eig.eigenvalues,
            vectors: eig.eigenvectors,
            x: fp.x().clone(),
            p: fp.p().clone(),
        }
    }

    /// A frozen one-level axis used when only one pointer is coupled.
    fn inert() -> Self {
        Self {
            dim: 1,
            momenta: vec![0.0],
            vectors: CMatrix::identity(1, 1),
            x: CMatrix::zeros(1, 1),
            p: CMatrix::zeros(1, 1),
        }
    }

    /// `⟨p_j|vac⟩`.
    fn vacuum_weight(&self, j: usize) -> C64 {
        self.vectors[(0, j)].conj()
    }

    /// Levels counted as "top" for the truncation diagnostic.
    fn is_top(&self, level: usize) -> bool {
        self.dim > 1 && level + 2 >= self.dim
    }
}

/// Frobenius inner product `Σ conj(a) b`.
fn frob(a: &CMatrix, b: &CMatrix) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Exact unitary evolution with Fock-space pointers.
///
/// `H` commutes with `P_x` and `P_y`, so in their joint eigenbasis it splits
/// into system-sized blocks `Kx p_j A + Ky p_m B`; each block is diagonalized
/// and exponentiated on its own.
pub fn run_fock(
    i: &QuantumState,
    f: &QuantumState,
    coupling: &Coupling,
    n_max: usize,
    opts: &EngineOptions,
) -> Result<MeasurementRecord> {
    let (joint, single) = match coupling {
        Coupling::Single(s) => (s.as_joint(), true),
        Coupling::Joint(j) => (j.clone(), false),
    };
    check_dim(i.dim(), f.dim())?;
    check_dim(i.dim(), joint.a.dim())?;
    check_dim(i.dim(), joint.b.dim())?;

    let ax = Axis::from_fock(&build_fock(&joint.pointer_x, n_max)?);
    let ay = if single { Axis::inert() } else { Axis::from_fock(&build_fock(&joint.pointer_y, n_max)?) };
    let hbar = joint.hbar();
    let d = i.dim();

    // coeffs[s] is the system component s of the evolved state, as a matrix
    // over (x momentum index, y momentum index).
    let mut coeffs = vec![CMatrix::zeros(ax.dim, ay.dim); d];
    let ma = joint.a.matrix();
    let mb = joint.b.matrix();
    for j in 0..ax.dim {
        for m in 0..ay.dim {
            let block = ma.scale(joint.kx * ax.momenta[j]) + mb.scale(joint.ky * ay.momenta[m]);
            let eig = eig_unchecked(&block);
            let v = &eig.eigenvectors;
            let mut rotated = v.adjoint() * i.amplitudes();
            for (k, e) in eig.eigenvalues.iter().enumerate() {
                rotated[k] *= C64::from_polar(1.0, -e / hbar);
            }
            let evolved = v * rotated;
            let weight = ax.vacuum_weight(j) * ay.vacuum_weight(m);
            for s in 0..d {
                coeffs[s][(j, m)] = weight * evolved[s];
            }
        }
    }

    let vy_t = ay.vectors.transpose();
    let mut global_norm_sq = 0.0;
    let mut top_population = 0.0;
    let mut psi = CMatrix::zeros(ax.dim, ay.dim);
    for (s, coeff) in coeffs.iter().enumerate() {
        let fock = &ax.vectors * coeff * &vy_t;
        for a in 0..ax.dim {
            for b in 0..ay.dim {
                let pop = fock[(a, b)].norm_sqr();
                global_norm_sq += pop;
                if ax.is_top(a) || ay.is_top(b) {
                    top_population += pop;
                }
            }
        }
        psi += fock * f.amplitudes()[s].conj();
    }

    let warning = !(top_population <= TRUNCATION_POPULATION_TOL);
    if warning {
        log::warn!(
            "Fock truncation n_max = {n_max} holds {top_population:e} population in the top two levels"
        );
    }
    let truncation = TruncationReport { n_max, top_population, global_norm: global_norm_sq.sqrt(), warning };

    let x_psi = &ax.x * &psi;
    let raw = RawMoments {
        ps: frob(&psi, &psi),
        x: frob(&psi, &x_psi),
        y: frob(&psi, &(&psi * ay.x.transpose())),
        px: frob(&psi, &(&ax.p * &psi)),
        py: frob(&psi, &(&psi * ay.p.transpose())),
        xy: frob(&psi, &(&x_psi * ay.x.transpose())),
        xpy: frob(&psi, &(&x_psi * ay.p.transpose())),
    };
    raw.normalize(opts.ps_floor, coupling.weakness_ratio(), EngineTag::Fock, Some(truncation))
}

/// Which post-selected pointer operator the series expands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentTag {
    /// `|f⟩⟨f| X`
    Ox,
    /// `|f⟩⟨f| X Y`
    Oxy,
    /// `|f⟩⟨f| X P_y`
    Oxpy,
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, j| acc * j as f64)
}

/// Per-order terms `(i/hbar)^n / n! ⟨[H,[H,…,O]]⟩` for `n = 0..=order`,
/// taken in the initial state `|i⟩|vac⟩|vac⟩` and not normalized by the
/// post-selection probability.
///
/// Uses `ad_H^n(O) = Σ_k C(n,k) H^k O (-H)^(n-k)`. A truncation of
/// `order + 2` levels per axis reproduces the untruncated vacuum
/// expectations exactly, since no term climbs higher than that.
pub fn heisenberg_moment(
    i: &QuantumState,
    f: &QuantumState,
    coupling: &JointCoupling,
    tag: MomentTag,
    order: usize,
) -> Result<Vec<f64>> {
    if order > MAX_SERIES_ORDER {
        return Err(Error::InvalidParameter(format!(
            "series order {order} exceeds the maximum of {MAX_SERIES_ORDER}"
        )));
    }
    check_dim(i.dim(), f.dim())?;
    check_dim(i.dim(), coupling.a.dim())?;
    check_dim(i.dim(), coupling.b.dim())?;

    let n_max = (order + 2).max(2);
    let fx = build_fock(&coupling.pointer_x, n_max)?;
    let fy = build_fock(&coupling.pointer_y, n_max)?;
    let id_p = Observable::identity(fx.dim());
    let wrap = |m: &CMatrix| Observable::new(m.clone());

    let h_x = coupling.a.tensor(&wrap(fx.p())?).tensor(&id_p);
    let h_y = coupling.b.tensor(&id_p).tensor(&wrap(fy.p())?);
    let h = h_x.matrix().scale(coupling.kx) + h_y.matrix().scale(coupling.ky);

    let proj = Observable::projector(f);
    let x_part = wrap(fx.x())?;
    let y_part = match tag {
        MomentTag::Ox => id_p.clone(),
        MomentTag::Oxy => wrap(fy.x())?,
        MomentTag::Oxpy => wrap(fy.p())?,
    };
    let o = proj.tensor(&x_part).tensor(&y_part);

    let psi0 = i.amplitudes().kronecker(&fx.vacuum()).kronecker(&fy.vacuum());
    let mut powers = vec![psi0];
    for k in 1..=order {
        let next = &h * &powers[k - 1];
        powers.push(next);
    }
    let o_powers: Vec<CVector> = powers.iter().map(|v| o.matrix() * v).collect();

    let hbar = coupling.hbar();
    (0..=order)
        .map(|n| {
            let mut nested = ZERO;
            for k in 0..=n {
                let sign = if (n - k) % 2 == 0 { 1.0 } else { -1.0 };
                nested += powers[k].dotc(&o_powers[n - k]) * (binomial(n, k) * sign);
            }
            let prefactor = c(0.0, 1.0 / hbar).powi(n as i32) / factorial(n);
            real_checked(prefactor * nested, "series contribution")
        })
        .collect()
}

/// `½ Kx Ky Re[⟨i|f⟩⟨f|(AB+BA)/2|i⟩ + ⟨i|A|f⟩⟨f|B|i⟩]`, the closed form of
/// the second-order `O_xy` term.
pub fn second_order_xy_closed_form(i: &QuantumState, f: &QuantumState, c: &JointCoupling) -> Result<f64> {
    let ab = c.a.product_matrix(&c.b)?;
    let sym = (&ab + ab.adjoint()).unscale(2.0);
    let term1 = i.inner(f)? * f.sandwich(&sym, i)?;
    let term2 = i.sandwich(c.a.matrix(), f)? * f.sandwich(c.b.matrix(), i)?;
    Ok(0.5 * c.kx * c.ky * (term1 + term2).re)
}
