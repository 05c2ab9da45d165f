//! Pre-/post-selected scenarios: built-in presets and a JSON file format.
//!
//! File format (unknown fields are rejected):
//!
//! ```json
//! {
//!   "name": "optional label",
//!   "dim": 2,
//!   "i": [[re, im], [re, im]],
//!   "f": [[re, im], [re, im]],
//!   "observables": { "label": [[[re, im], [re, im]], [[re, im], [re, im]]] },
//!   "expected": { "label": [re, im] }
//! }
//! ```

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::engines::DEFAULT_PS_FLOOR;
use crate::error::{Error, Result};
use crate::qcore::{c, CMatrix, CVector, Observable, QuantumState, Tensor, C64, I, ONE};

/// Relative norm deviation of a loaded state that triggers a warning.
pub const NORM_WARNING_TOL: f64 = 1e-6;
pub const DEFAULT_SPIN_ALPHA: f64 = 0.3;

#[derive(Debug, Clone, PartialEq)]
pub struct ExpectedValue {
    pub value: C64,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub i: QuantumState,
    pub f: QuantumState,
    pub observables: BTreeMap<String, Observable>,
    pub expected: BTreeMap<String, ExpectedValue>,
}

impl Scenario {
    pub fn dim(&self) -> usize {
        self.i.dim()
    }

    pub fn observable(&self, label: &str) -> Result<&Observable> {
        self.observables
            .get(label)
            .ok_or_else(|| Error::UnknownObservable(label.to_string()))
    }

    fn expect(&mut self, label: &str, value: C64, note: &str) {
        self.expected.insert(label.to_string(), ExpectedValue { value, note: note.to_string() });
    }
}

fn box_projector(dim: usize, k: usize) -> Observable {
    let mut d = vec![0.0; dim];
    d[k] = 1.0;
    Observable::diagonal(&d)
}

/// Three boxes: `|i⟩ ∝ |1⟩+|2⟩+|3⟩`, `|f⟩ ∝ |1⟩+|2⟩−|3⟩`.
pub fn build_three_box() -> Scenario {
    let i = QuantumState::from_real(&[1.0, 1.0, 1.0]).expect("nonzero");
    let f = QuantumState::from_real(&[1.0, 1.0, -1.0]).expect("nonzero");
    let mut s = Scenario {
        name: "three-box".into(),
        i,
        f,
        observables: BTreeMap::new(),
        expected: BTreeMap::new(),
    };
    for (k, w) in [1.0, 1.0, -1.0].into_iter().enumerate() {
        let label = format!("P{}", k + 1);
        s.observables.insert(label.clone(), box_projector(3, k));
        s.expect(&label, c(w, 0.0), "box occupation, hand-evaluated weak value");
    }
    s
}

/// Two-particle occupation model, basis `|e⟩⊗|p⟩` with `O = 0`, `NO = 1`.
///
/// `|i⟩ ∝ |O,NO⟩ + |NO,O⟩ + |NO,NO⟩`, `|f⟩ = ((|O⟩−|NO⟩)/√2)⊗((|O⟩−|NO⟩)/√2)`.
pub fn build_hardy() -> Scenario {
    let i = QuantumState::from_real(&[0.0, 1.0, 1.0, 1.0]).expect("nonzero");
    let minus = QuantumState::from_real(&[1.0, -1.0]).expect("nonzero");
    let f = minus.tensor(&minus);
    let mut s = Scenario {
        name: "hardy".into(),
        i,
        f,
        observables: BTreeMap::new(),
        expected: BTreeMap::new(),
    };
    let id = Observable::identity(2);
    let occupied = [("O", box_projector(2, 0)), ("NO", box_projector(2, 1))];
    let single_note = "single-particle occupation, hand-evaluated weak value";
    for (tag, proj) in &occupied {
        let w = if *tag == "O" { 1.0 } else { 0.0 };
        s.observables.insert(format!("N_{tag}e"), proj.tensor(&id));
        s.expect(&format!("N_{tag}e"), c(w, 0.0), single_note);
        s.observables.insert(format!("N_{tag}p"), id.tensor(proj));
        s.expect(&format!("N_{tag}p"), c(w, 0.0), single_note);
    }
    let joint = [("O", "O", 0.0), ("O", "NO", 1.0), ("NO", "O", 1.0), ("NO", "NO", -1.0)];
    for (e, p, w) in joint {
        let label = format!("N_{e}e_N_{p}p");
        let pe = &occupied.iter().find(|(t, _)| *t == e).expect("tag").1;
        let pp = &occupied.iter().find(|(t, _)| *t == p).expect("tag").1;
        s.observables.insert(label.clone(), pe.tensor(pp));
        s.expect(&label, c(w, 0.0), "joint occupation, hand-evaluated weak value");
    }
    s
}

/// `|i⟩ = |+x⟩`, `|f⟩ = cos α|↑⟩ + sin α|↓⟩`; σ_z has weak value
/// `(1 − tan α)/(1 + tan α)`, unbounded as α approaches 3π/4.
pub fn build_spin_amplifier(alpha: f64) -> Result<Scenario> {
    if !alpha.is_finite() {
        return Err(Error::InvalidParameter(format!("alpha must be finite, got {alpha}")));
    }
    let i = QuantumState::from_real(&[1.0, 1.0])?;
    let f = QuantumState::from_real(&[alpha.cos(), alpha.sin()])?;
    let overlap = f.inner(&i)?;
    if !(overlap.norm() >= DEFAULT_PS_FLOOR.sqrt()) {
        return Err(Error::OrthogonalPostselection { prob: overlap.norm_sqr(), floor: DEFAULT_PS_FLOOR });
    }
    let (cos, sin) = (alpha.cos(), alpha.sin());
    let mut s = Scenario {
        name: "spin".into(),
        i,
        f,
        observables: BTreeMap::new(),
        expected: BTreeMap::new(),
    };
    s.observables.insert("sigma_z".into(), Observable::pauli_z());
    s.expect("sigma_z", c((cos - sin) / (cos + sin), 0.0), "(1 - tan a)/(1 + tan a)");
    // |+x⟩ is a σ_x eigenstate, so its weak value is 1 for any post-selection.
    s.observables.insert("sigma_x".into(), Observable::pauli_x());
    s.expect("sigma_x", ONE, "eigenvalue of the pre-selected state");
    Ok(s)
}

/// `|i⟩ = |+x⟩`, `|f⟩ = |+y⟩`; σ_z has weak value `i`.
pub fn build_imaginary() -> Scenario {
    let i = QuantumState::from_real(&[1.0, 1.0]).expect("nonzero");
    let f = QuantumState::new(vec![ONE, I]).expect("nonzero");
    let mut s = Scenario {
        name: "imaginary".into(),
        i,
        f,
        observables: BTreeMap::new(),
        expected: BTreeMap::new(),
    };
    s.observables.insert("sigma_z".into(), Observable::pauli_z());
    s.expect("sigma_z", I, "(1+i)/(1-i)");
    s
}

pub const PRESET_NAMES: [&str; 4] = ["three-box", "hardy", "spin", "imaginary"];

/// Resolves a preset by name; `spin:<alpha>` selects a post-selection angle.
pub fn preset(name: &str) -> Result<Scenario> {
    match name {
        "three-box" => Ok(build_three_box()),
        "hardy" => Ok(build_hardy()),
        "spin" => build_spin_amplifier(DEFAULT_SPIN_ALPHA),
        "imaginary" => Ok(build_imaginary()),
        other => match other.strip_prefix("spin:") {
            Some(alpha) => {
                let alpha: f64 = alpha
                    .parse()
                    .map_err(|_| Error::Parse(format!("invalid spin angle `{alpha}`")))?;
                let mut s = build_spin_amplifier(alpha)?;
                s.name = other.to_string();
                Ok(s)
            }
            None => Err(Error::UnknownScenario(other.to_string())),
        },
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    dim: usize,
    i: Vec<[f64; 2]>,
    f: Vec<[f64; 2]>,
    observables: BTreeMap<String, Vec<Vec<[f64; 2]>>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    expected: BTreeMap<String, [f64; 2]>,
}

fn to_pairs(v: &CVector) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

fn load_state(label: &str, pairs: &[[f64; 2]], dim: usize) -> Result<QuantumState> {
    if pairs.len() != dim {
        return Err(Error::Parse(format!("state `{label}` has {} amplitudes, expected {dim}", pairs.len())));
    }
    let v = CVector::from_iterator(dim, pairs.iter().map(|p| c(p[0], p[1])));
    let norm = v.norm();
    if norm == 0.0 {
        return Err(Error::ZeroState);
    }
    if (norm - 1.0).abs() > NORM_WARNING_TOL {
        log::warn!("state `{label}` has norm {norm}; normalizing");
    }
    QuantumState::from_vector(v)
}

/// Parses a scenario document.
pub fn load_scenario(document: &str) -> Result<Scenario> {
    let doc: ScenarioDocument = serde_json::from_str(document).map_err(|e| Error::Parse(e.to_string()))?;
    if doc.dim == 0 {
        return Err(Error::Parse("dim must be at least 1".into()));
    }
    let i = load_state("i", &doc.i, doc.dim)?;
    let f = load_state("f", &doc.f, doc.dim)?;

    let mut observables = BTreeMap::new();
    for (label, rows) in &doc.observables {
        if rows.len() != doc.dim || rows.iter().any(|r| r.len() != doc.dim) {
            return Err(Error::Parse(format!("observable `{label}` is not {0}x{0}", doc.dim)));
        }
        let m = CMatrix::from_fn(doc.dim, doc.dim, |r, col| c(rows[r][col][0], rows[r][col][1]));
        observables.insert(label.clone(), Observable::labelled(m, label)?);
    }

    let mut expected = BTreeMap::new();
    for (label, value) in &doc.expected {
        if !observables.contains_key(label) {
            return Err(Error::Parse(format!("expected value `{label}` has no matching observable")));
        }
        expected.insert(
            label.clone(),
            ExpectedValue { value: c(value[0], value[1]), note: "user-supplied".into() },
        );
    }

    Ok(Scenario { name: doc.name.unwrap_or_else(|| "custom".into()), i, f, observables, expected })
}

/// Serializes a scenario in the format accepted by [`load_scenario`].
pub fn to_document(s: &Scenario) -> String {
    let doc = ScenarioDocument {
        name: Some(s.name.clone()),
        dim: s.dim(),
        i: to_pairs(s.i.amplitudes()),
        f: to_pairs(s.f.amplitudes()),
        observables: s
            .observables
            .iter()
            .map(|(k, o)| {
                let m = o.matrix();
                let rows = (0..m.nrows())
                    .map(|r| (0..m.ncols()).map(|col| [m[(r, col)].re, m[(r, col)].im]).collect())
                    .collect();
                (k.clone(), rows)
            })
            .collect(),
        expected: s.expected.iter().map(|(k, e)| (k.clone(), [e.value.re, e.value.im])).collect(),
    };
    serde_json::to_string_pretty(&doc).expect("scenario serializes")
}
