//! Tilt measures on `[0, T]`: the deterministic vector measure `theta`
//! parametrizing the path-dependent Esscher transform, its tail function
//! `eta(t) = theta([t, T])`, the path log moment generating integral and the
//! exact log-likelihood ratio on a grid.
//!
//! A measure is either a single Dirac atom at maturity (European tilts) or a
//! finite family of atoms on a grid (discretized absolutely continuous tilts
//! for Asian payoffs). Atoms at `t = 0` are forbidden: `X_0 = 0` makes them
//! ineffective and excluding them keeps representations unique.

use nalgebra::DVector;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::levy_models::CgfModel;
use crate::path::SamplePath;

#[derive(Debug, Clone, PartialEq)]
enum Variant {
    /// Single atom `theta_bar * delta_T`.
    DiracAtT { weight: DVector<f64> },
    /// Atoms `w_j` at strictly increasing times `0 < t_1 < ... < t_m = T`.
    GridAtoms {
        times: Vec<f64>,
        weights: Vec<DVector<f64>>,
    },
}

/// Bounded signed vector measure on `[0, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TiltMeasure {
    horizon: f64,
    variant: Variant,
}

/// One maximal interval `(start, end]` on which the tail function is constant.
#[derive(Debug, Clone)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub tail: DVector<f64>,
}

impl TiltMeasure {
    /// `theta_bar * delta_T`.
    pub fn dirac_at_maturity(horizon: f64, weight: DVector<f64>) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidInput(format!("horizon must be positive, got {horizon}")));
        }
        if weight.is_empty() || weight.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidInput("dirac weight must be a finite nonempty vector".into()));
        }
        Ok(Self {
            horizon,
            variant: Variant::DiracAtT { weight },
        })
    }

    /// Atoms `weights[j]` at `times[j]`; the last time defines the horizon `T`.
    pub fn grid_atoms(times: Vec<f64>, weights: Vec<DVector<f64>>) -> Result<Self> {
        if times.is_empty() || times.len() != weights.len() {
            return Err(Error::InvalidInput(format!(
                "grid measure needs matching nonempty times/weights, got {}/{}",
                times.len(),
                weights.len()
            )));
        }
        if !(times[0] > 0.0) {
            return Err(Error::InvalidInput(format!(
                "atom times must lie in (0, T], first atom at {}",
                times[0]
            )));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidInput("atom times must be finite and strictly increasing".into()));
        }
        let dim = weights[0].len();
        if dim == 0 || weights.iter().any(|w| w.len() != dim || w.iter().any(|x| !x.is_finite())) {
            return Err(Error::InvalidInput("atom weights must be finite vectors of equal dimension".into()));
        }
        let horizon = *times.last().unwrap();
        Ok(Self {
            horizon,
            variant: Variant::GridAtoms { times, weights },
        })
    }

    /// The zero measure (base model, no tilt).
    pub fn zero(horizon: f64, dim: usize) -> Self {
        Self::dirac_at_maturity(horizon, DVector::zeros(dim)).unwrap()
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn dim(&self) -> usize {
        match &self.variant {
            Variant::DiracAtT { weight } => weight.len(),
            Variant::GridAtoms { weights, .. } => weights[0].len(),
        }
    }

    pub fn is_dirac(&self) -> bool {
        matches!(self.variant, Variant::DiracAtT { .. })
    }

    /// Atom weight at maturity for Dirac measures.
    pub fn dirac_weight(&self) -> Option<&DVector<f64>> {
        match &self.variant {
            Variant::DiracAtT { weight } => Some(weight),
            Variant::GridAtoms { .. } => None,
        }
    }

    /// All atoms as `(time, weight)` pairs in increasing time order.
    pub fn atoms(&self) -> Vec<(f64, &DVector<f64>)> {
        match &self.variant {
            Variant::DiracAtT { weight } => vec![(self.horizon, weight)],
            Variant::GridAtoms { times, weights } => {
                times.iter().copied().zip(weights.iter()).collect()
            }
        }
    }

    pub fn total_mass(&self) -> DVector<f64> {
        let mut acc = DVector::zeros(self.dim());
        for (_, w) in self.atoms() {
            acc += w;
        }
        acc
    }

    /// Tail function `theta([t, T])`: sum of atoms at times `>= t`.
    pub fn tail(&self, t: f64) -> Result<DVector<f64>> {
        if !(0.0..=self.horizon).contains(&t) {
            return Err(Error::Range(format!(
                "tail evaluation time {t} outside [0, {}]",
                self.horizon
            )));
        }
        let mut acc = DVector::zeros(self.dim());
        for (tj, w) in self.atoms() {
            if tj >= t {
                acc += w;
            }
        }
        Ok(acc)
    }

    /// Maximal intervals `(start, end]` of constant tail, covering `(0, T]`.
    /// The tail on a segment includes the atom at its right endpoint.
    pub fn segments(&self) -> Vec<Segment> {
        match &self.variant {
            Variant::DiracAtT { weight } => vec![Segment {
                start: 0.0,
                end: self.horizon,
                tail: weight.clone(),
            }],
            Variant::GridAtoms { times, weights } => {
                let m = times.len();
                let mut out = Vec::with_capacity(m);
                let mut suffix = DVector::zeros(self.dim());
                let mut tails = vec![DVector::zeros(self.dim()); m];
                for j in (0..m).rev() {
                    suffix += &weights[j];
                    tails[j] = suffix.clone();
                }
                let mut start = 0.0;
                for j in 0..m {
                    out.push(Segment {
                        start,
                        end: times[j],
                        tail: std::mem::take(&mut tails[j]),
                    });
                    start = times[j];
                }
                out
            }
        }
    }

    /// True iff every tail value lies in the CGF domain of `model`.
    pub fn admissible_for(&self, model: &impl CgfModel) -> bool {
        self.segments()
            .iter()
            .all(|s| model.domain_margin(&s.tail).admissible())
    }

    /// `log E[exp(int X_t theta(dt))] = int_0^T G(theta([t,T])) dt`, evaluated
    /// exactly as a finite sum over the constant-tail segments. Returns `+inf`
    /// if any segment tail is out of domain.
    pub fn log_mgf_path(&self, model: &impl CgfModel) -> f64 {
        let mut acc = 0.0;
        for seg in self.segments() {
            let g = model.cgf(&seg.tail);
            if !g.is_finite() {
                return f64::INFINITY;
            }
            acc += g * (seg.end - seg.start);
        }
        acc
    }

    /// `log dP/dP^theta (X) = log_mgf_path - sum_j <w_j, X_{t_j}>`.
    ///
    /// Every atom time must be a grid point of `path`.
    pub fn log_likelihood_ratio(&self, model: &impl CgfModel, path: &SamplePath<'_>) -> Result<f64> {
        if path.dim() != self.dim() {
            return Err(Error::InvalidInput(format!(
                "path dimension {} does not match measure dimension {}",
                path.dim(),
                self.dim()
            )));
        }
        let log_mgf = self.log_mgf_path(model);
        if !log_mgf.is_finite() {
            return Err(Error::Domain("measure tail leaves the CGF domain".into()));
        }
        let mut pairing = 0.0;
        for (tj, w) in self.atoms() {
            let k = path.index_of_time(tj).ok_or_else(|| {
                Error::GridMismatch(format!("atom time {tj} is not on the path grid"))
            })?;
            let x = path.at(k);
            for i in 0..self.dim() {
                pairing += w[i] * x[i];
            }
        }
        Ok(log_mgf - pairing)
    }
}

#[derive(Serialize, Deserialize)]
struct MeasureRepr {
    #[serde(rename = "type")]
    kind: String,
    times: Vec<f64>,
    weights: Vec<Vec<f64>>,
}

impl Serialize for TiltMeasure {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let (kind, times, weights): (&str, Vec<f64>, Vec<Vec<f64>>) = match &self.variant {
            Variant::DiracAtT { weight } => (
                "dirac",
                vec![self.horizon],
                vec![weight.iter().copied().collect()],
            ),
            Variant::GridAtoms { times, weights } => (
                "grid",
                times.clone(),
                weights.iter().map(|w| w.iter().copied().collect()).collect(),
            ),
        };
        MeasureRepr {
            kind: kind.to_string(),
            times,
            weights,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for TiltMeasure {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = MeasureRepr::deserialize(deserializer)?;
        let weights: Vec<DVector<f64>> = repr
            .weights
            .into_iter()
            .map(DVector::from_vec)
            .collect();
        match repr.kind.as_str() {
            "dirac" => {
                if repr.times.len() != 1 || weights.len() != 1 {
                    return Err(D::Error::custom("dirac measure needs exactly one time and one weight"));
                }
                TiltMeasure::dirac_at_maturity(repr.times[0], weights.into_iter().next().unwrap())
                    .map_err(D::Error::custom)
            }
            "grid" => TiltMeasure::grid_atoms(repr.times, weights).map_err(D::Error::custom),
            other => Err(D::Error::custom(format!("unknown measure type {other:?}"))),
        }
    }
}
