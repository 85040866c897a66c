//! Classical-to-quantum data encodings.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{QdpError, Result};
use crate::linalg::{C64, ONE, ZERO};
use crate::model::{gate_matrix, DensityMatrix, GateKind, GateSpec, PureState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    #[default]
    Y,
    Z,
}

impl Axis {
    fn gate(self) -> GateKind {
        match self {
            Axis::X => GateKind::Rx,
            Axis::Y => GateKind::Ry,
            Axis::Z => GateKind::Rz,
        }
    }

    /// `R_axis(theta) |0>` as two amplitudes.
    fn rotate_zero(self, theta: f64) -> [C64; 2] {
        let u = gate_matrix(&GateSpec::rotation(self.gate(), theta, &[0])).expect("rotation gates take one angle");
        [u.get(0, 0), u.get(1, 0)]
    }
}

/// Feature vector with one rotation axis per element.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalVector {
    values: Vec<f64>,
    axes: Vec<Axis>,
}

impl ClassicalVector {
    pub fn new(values: Vec<f64>, axes: Vec<Axis>) -> Result<Self> {
        if values.is_empty() {
            return Err(QdpError::InvalidInput("empty classical vector".into()));
        }
        if axes.len() != values.len() {
            return Err(QdpError::InvalidInput(format!("{} axes for {} values", axes.len(), values.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(QdpError::InvalidInput("non-finite feature value".into()));
        }
        Ok(Self { values, axes })
    }

    /// Every element rotated about the same axis.
    pub fn uniform(values: Vec<f64>, axis: Axis) -> Result<Self> {
        let axes = vec![axis; values.len()];
        Self::new(values, axes)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }
}

/// Product state `⊗_j R_{axis_j}(v_j)|0>` as a pure density matrix.
pub fn angle_encode(v: &ClassicalVector) -> Result<DensityMatrix> {
    let mut amps = DVector::from_element(1, ONE);
    for (&value, &axis) in v.values.iter().zip(&v.axes) {
        let [a0, a1] = axis.rotate_zero(value);
        let q = DVector::from_vec(vec![a0, a1]);
        amps = amps.kronecker(&q);
    }
    Ok(PureState::new(amps)?.to_density())
}

/// Amplitude encoding together with how the input was padded.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeEncoded {
    pub state: DensityMatrix,
    pub original_len: usize,
    /// True when zeros were appended to reach a power-of-two length.
    pub padded: bool,
}

/// `|v> = sum_i v_i / ||v|| |i>`. Lengths other than a power of two are
/// rejected unless `pad` is set, in which case zeros are appended.
pub fn amplitude_encode(v: &[f64], pad: bool) -> Result<AmplitudeEncoded> {
    if v.is_empty() {
        return Err(QdpError::InvalidInput("empty vector".into()));
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(QdpError::InvalidInput("cannot amplitude-encode a zero or non-finite vector".into()));
    }
    let len = v.len().max(2).next_power_of_two();
    let padded = len != v.len();
    if padded && !pad {
        return Err(QdpError::InvalidInput(format!("length {} is not a power of two (enable padding)", v.len())));
    }
    let amps = DVector::from_fn(len, |i, _| if i < v.len() { C64::new(v[i] / norm, 0.0) } else { ZERO });
    Ok(AmplitudeEncoded { state: PureState::normalized(amps)?.to_density(), original_len: v.len(), padded })
}

/// Trace distance between the angle encodings of two vectors that differ in
/// exactly one element `j`: `sqrt(1 - <0|R(v_j - w_j)|0><0|R(w_j - v_j)|0>)`.
///
/// The product equals `|<0|R(d)|0>|^2` since `R(-d) = R(d)^dag`, so it is real
/// for every axis; for `z` it is 1 and the distance vanishes. By unitarity
/// `1 - |<0|R(d)|0>|^2 = |<1|R(d)|0>|^2`, which avoids cancellation.
pub fn encoded_neighbor_distance(v: &ClassicalVector, w: &ClassicalVector) -> Result<f64> {
    if v.values.len() != w.values.len() {
        return Err(QdpError::InvalidInput(format!("lengths {} and {} differ", v.values.len(), w.values.len())));
    }
    if v.axes != w.axes {
        return Err(QdpError::InvalidInput("encoding axes differ".into()));
    }
    let differing: Vec<usize> = (0..v.values.len()).filter(|&i| v.values[i] != w.values[i]).collect();
    let j = match differing.as_slice() {
        [j] => *j,
        other => {
            return Err(QdpError::NotNeighbors(format!("vectors differ in {} elements", other.len())));
        }
    };
    let d = v.values[j] - w.values[j];
    let axis = v.axes[j];
    Ok(axis.rotate_zero(d)[1].norm())
}
