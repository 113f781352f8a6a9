//! Model parameterization, validation, basis vectors and level projectors.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{re, CMatrix, CVector, C64};

/// Unvalidated model parameters as read from a model file.
///
/// Every field is optional so that a missing entry can be reported by name.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RawModel {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<u32>,
    #[serde(rename = "N")]
    pub n: Option<usize>,
    pub dims: Option<Vec<usize>>,
    pub energies: Option<Vec<f64>>,
    pub gamma_minus: Option<Vec<f64>>,
    pub gamma_plus: Option<Vec<f64>>,
    pub shift_minus: Option<Vec<f64>>,
    pub shift_plus: Option<Vec<f64>>,
}

/// Validated model with all derived constants.
///
/// Level `k` (0 ≤ k ≤ N+1) occupies the contiguous global coordinates
/// `offsets[k] .. offsets[k] + dims[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub n: usize,
    pub dims: Vec<usize>,
    pub energies: Vec<f64>,
    pub gamma_minus: Vec<f64>,
    pub gamma_plus: Vec<f64>,
    pub shift_minus: Vec<f64>,
    pub shift_plus: Vec<f64>,
    /// `ω_k = ε_k − ε_{k+1}`, k = 0..N.
    pub bohr: Vec<f64>,
    /// `β_0 = 0`, `β_k = ln(Γ_{−,k}/Γ_{+,k})` for k = 1..N−1 (length N).
    pub beta: Vec<f64>,
    /// `η_{−,k} = −Γ_{−,k}/2 + iγ_{−,k}`.
    pub eta_minus: Vec<C64>,
    /// `η_{+,k} = −Γ_{+,k}/2 + iγ_{+,k}`; for k = N this is `iγ_{+,N}`.
    pub eta_plus: Vec<C64>,
    pub offsets: Vec<usize>,
    pub d: usize,
}

/// A vector of the total space with an optional descriptive tag.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub entries: CVector,
    pub label: Option<String>,
}

impl StateVector {
    pub fn new(entries: CVector) -> Self {
        Self { entries, label: None }
    }

    pub fn labeled(entries: CVector, label: impl Into<String>) -> Self {
        Self { entries, label: Some(label.into()) }
    }

    pub fn norm(&self) -> f64 {
        self.entries.norm()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn field<T: Clone>(v: &Option<T>, name: &str) -> Result<T> {
    v.clone().ok_or_else(|| Error::MissingField(name.into()))
}

fn check_len<T>(v: &[T], expected: usize, name: &str) -> Result<()> {
    if v.len() != expected {
        return Err(Error::ModelShape(format!(
            "{name} has length {}, expected {expected}",
            v.len()
        )));
    }
    Ok(())
}

fn check_finite(v: &[f64], name: &str) -> Result<()> {
    if let Some(i) = v.iter().position(|x| !x.is_finite()) {
        return Err(Error::ModelShape(format!("{name}[{i}] is not finite")));
    }
    Ok(())
}

impl RawModel {
    /// Parses a model document (JSON).
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn validate(&self) -> Result<ModelSpec> {
        ModelSpec::validate(self)
    }
}

impl ModelSpec {
    /// Checks the model hypotheses and fills in the derived constants.
    pub fn validate(raw: &RawModel) -> Result<Self> {
        let n = field(&raw.n, "N")?;
        let dims = field(&raw.dims, "dims")?;
        let energies = field(&raw.energies, "energies")?;
        let gamma_minus = field(&raw.gamma_minus, "gamma_minus")?;
        let gamma_plus = field(&raw.gamma_plus, "gamma_plus")?;
        let shift_minus = field(&raw.shift_minus, "shift_minus")?;
        let shift_plus = field(&raw.shift_plus, "shift_plus")?;
        if let Some(f) = raw.format {
            if f != 1 {
                return Err(Error::Format(format!("unsupported model format {f}")));
            }
        }

        if n == 0 {
            return Err(Error::ModelShape("N must be at least 1".into()));
        }
        check_len(&dims, n + 2, "dims")?;
        check_len(&energies, n + 2, "energies")?;
        check_len(&gamma_minus, n + 1, "gamma_minus")?;
        check_len(&gamma_plus, n + 1, "gamma_plus")?;
        check_len(&shift_minus, n + 1, "shift_minus")?;
        check_len(&shift_plus, n + 1, "shift_plus")?;
        for (v, name) in [
            (&energies, "energies"),
            (&gamma_minus, "gamma_minus"),
            (&gamma_plus, "gamma_plus"),
            (&shift_minus, "shift_minus"),
            (&shift_plus, "shift_plus"),
        ] {
            check_finite(v, name)?;
        }

        for k in [0, n + 1] {
            if dims[k] != 1 {
                return Err(Error::BoundaryDim { level: k, dim: dims[k] });
            }
        }
        for k in 1..=n {
            if dims[k] < dims[k + 1] {
                return Err(Error::DimensionOrder { level: k, upper: dims[k], lower: dims[k + 1] });
            }
        }
        // dims[k] ≥ dims[N+1] = 1 now holds for every k.

        for k in 0..=n {
            if energies[k] <= energies[k + 1] {
                return Err(Error::EnergyOrder { level: k, upper: energies[k], lower: energies[k + 1] });
            }
        }
        let bohr: Vec<f64> = (0..=n).map(|k| energies[k] - energies[k + 1]).collect();
        for i in 0..=n {
            for j in i + 1..=n {
                let scale = bohr[i].abs().max(bohr[j].abs());
                if (bohr[i] - bohr[j]).abs() <= 1e-12 * scale {
                    return Err(Error::BohrCollision { first: i, second: j, value: bohr[i] });
                }
            }
        }

        for k in 0..=n {
            if gamma_minus[k] <= 0.0 {
                return Err(Error::RateSign(format!("gamma_minus[{k}] = {} must be positive", gamma_minus[k])));
            }
        }
        for k in 0..n {
            if gamma_plus[k] <= 0.0 {
                return Err(Error::RateSign(format!("gamma_plus[{k}] = {} must be positive", gamma_plus[k])));
            }
        }
        if gamma_plus[n] != 0.0 {
            return Err(Error::RateSign(format!("gamma_plus[{n}] = {} must be zero", gamma_plus[n])));
        }

        let mut beta = vec![0.0; n];
        for (k, b) in beta.iter_mut().enumerate().skip(1) {
            *b = (gamma_minus[k] / gamma_plus[k]).ln();
        }
        let eta_minus = (0..=n).map(|k| C64::new(-gamma_minus[k] / 2.0, shift_minus[k])).collect();
        let eta_plus = (0..=n).map(|k| C64::new(-gamma_plus[k] / 2.0, shift_plus[k])).collect();
        let mut offsets = Vec::with_capacity(n + 2);
        let mut acc = 0;
        for &dk in &dims {
            offsets.push(acc);
            acc += dk;
        }

        Ok(Self {
            n,
            dims,
            energies,
            gamma_minus,
            gamma_plus,
            shift_minus,
            shift_plus,
            bohr,
            beta,
            eta_minus,
            eta_plus,
            offsets,
            d: acc,
        })
    }

    /// The primitive inputs, suitable for revalidation or serialization.
    pub fn to_raw(&self) -> RawModel {
        RawModel {
            format: Some(1),
            n: Some(self.n),
            dims: Some(self.dims.clone()),
            energies: Some(self.energies.clone()),
            gamma_minus: Some(self.gamma_minus.clone()),
            gamma_plus: Some(self.gamma_plus.clone()),
            shift_minus: Some(self.shift_minus.clone()),
            shift_plus: Some(self.shift_plus.clone()),
        }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Number of levels, N + 2.
    pub fn levels(&self) -> usize {
        self.n + 2
    }

    /// `e^{β_1 + … + β_m}` (with β_0 = 0), the weight of the m-th transport step.
    pub fn cumulative_weight(&self, m: usize) -> f64 {
        self.beta.iter().take(m + 1).sum::<f64>().exp()
    }

    /// `n_2 = n_3 = … = n_N` (vacuous for N = 1).
    pub fn satisfies_dh(&self) -> bool {
        self.n < 2 || self.dims[2..=self.n].iter().all(|&x| x == self.dims[2])
    }

    pub fn require_dh(&self) -> Result<()> {
        if self.satisfies_dh() {
            Ok(())
        } else {
            Err(Error::DHViolated(self.dims.clone()))
        }
    }

    fn check_level(&self, k: usize) -> Result<()> {
        if k > self.n + 1 {
            return Err(Error::IndexOutOfRange(format!("level {k} outside 0..={}", self.n + 1)));
        }
        Ok(())
    }

    fn check_index(&self, k: usize, a: usize) -> Result<()> {
        self.check_level(k)?;
        if a >= self.dims[k] {
            return Err(Error::IndexOutOfRange(format!(
                "index {a} outside level {k} of dimension {}",
                self.dims[k]
            )));
        }
        Ok(())
    }

    /// Global coordinate of `|a_k⟩`.
    pub fn coord(&self, k: usize, a: usize) -> Result<usize> {
        self.check_index(k, a)?;
        Ok(self.offsets[k] + a)
    }

    /// `|a_k⟩`.
    pub fn canonical_vector(&self, k: usize, a: usize) -> Result<StateVector> {
        let i = self.coord(k, a)?;
        let mut v = CVector::zeros(self.d);
        v[i] = re(1.0);
        Ok(StateVector::labeled(v, format!("canonical {a}_{k}")))
    }

    /// `φ_{a_k} = n_k^{-1/2} Σ_b ζ_k^{-ab} |b_k⟩` with `ζ_k = e^{2πi/n_k}`.
    pub fn entangled_vector(&self, k: usize, a: usize) -> Result<StateVector> {
        self.check_index(k, a)?;
        let nk = self.dims[k];
        let scale = 1.0 / (nk as f64).sqrt();
        let mut v = CVector::zeros(self.d);
        for b in 0..nk {
            v[self.offsets[k] + b] = root_of_unity(nk, -((a * b) as i64)) * scale;
        }
        Ok(StateVector::labeled(v, format!("entangled phi_{a}_{k}")))
    }

    /// Orthogonal projector `P_k` onto level `k`.
    pub fn level_projector(&self, k: usize) -> Result<CMatrix> {
        self.check_level(k)?;
        let mut p = CMatrix::zeros(self.d, self.d);
        for i in self.offsets[k]..self.offsets[k] + self.dims[k] {
            p[(i, i)] = re(1.0);
        }
        Ok(p)
    }

    /// Level index of a global coordinate.
    pub fn level_of(&self, i: usize) -> usize {
        (0..self.levels()).rev().find(|&k| self.offsets[k] <= i).unwrap_or(0)
    }

    pub fn min_rate(&self) -> f64 {
        self.gamma_minus
            .iter()
            .chain(self.gamma_plus.iter())
            .copied()
            .filter(|&g| g > 0.0)
            .fold(f64::INFINITY, f64::min)
    }
}

/// `ζ_n^p = e^{2πip/n}`, with the exponent reduced mod n first.
pub(crate) fn root_of_unity(n: usize, p: i64) -> C64 {
    let r = p.rem_euclid(n as i64);
    C64::from_polar(1.0, 2.0 * PI * r as f64 / n as f64)
}
