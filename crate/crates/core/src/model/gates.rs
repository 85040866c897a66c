use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::local::{check_targets, lift_operator};
use crate::error::{QdpError, Result};
use crate::linalg::{ComplexMatrix, C64, ONE, ZERO};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum GateKind {
    X,
    Y,
    Z,
    H,
    S,
    T,
    Rx,
    Ry,
    Rz,
    Cx,
    Cz,
    Crx,
    Cry,
    Crz,
    Sx,
    SqrtIswap,
}

impl GateKind {
    pub const ALL: [GateKind; 16] = [
        GateKind::X,
        GateKind::Y,
        GateKind::Z,
        GateKind::H,
        GateKind::S,
        GateKind::T,
        GateKind::Rx,
        GateKind::Ry,
        GateKind::Rz,
        GateKind::Cx,
        GateKind::Cz,
        GateKind::Crx,
        GateKind::Cry,
        GateKind::Crz,
        GateKind::Sx,
        GateKind::SqrtIswap,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GateKind::X => "X",
            GateKind::Y => "Y",
            GateKind::Z => "Z",
            GateKind::H => "H",
            GateKind::S => "S",
            GateKind::T => "T",
            GateKind::Rx => "RX",
            GateKind::Ry => "RY",
            GateKind::Rz => "RZ",
            GateKind::Cx => "CX",
            GateKind::Cz => "CZ",
            GateKind::Crx => "CRX",
            GateKind::Cry => "CRY",
            GateKind::Crz => "CRZ",
            GateKind::Sx => "SX",
            GateKind::SqrtIswap => "SQRT_ISWAP",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            GateKind::Cx | GateKind::Cz | GateKind::Crx | GateKind::Cry | GateKind::Crz | GateKind::SqrtIswap => 2,
            _ => 1,
        }
    }

    pub fn n_params(self) -> usize {
        match self {
            GateKind::Rx | GateKind::Ry | GateKind::Rz | GateKind::Crx | GateKind::Cry | GateKind::Crz => 1,
            _ => 0,
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GateKind {
    type Err = QdpError;

    fn from_str(s: &str) -> Result<Self> {
        GateKind::ALL
            .iter()
            .copied()
            .find(|g| g.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| QdpError::UnknownGate(s.to_string()))
    }
}

impl TryFrom<String> for GateKind {
    type Error = QdpError;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<GateKind> for String {
    fn from(g: GateKind) -> String {
        g.name().to_string()
    }
}

/// One gate application. For controlled gates the first target is the control.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateSpec {
    pub name: GateKind,
    #[serde(default)]
    pub params: Vec<f64>,
    pub targets: Vec<usize>,
}

impl GateSpec {
    pub fn new(name: GateKind, params: Vec<f64>, targets: Vec<usize>) -> Self {
        Self { name, params, targets }
    }

    pub fn fixed(name: GateKind, targets: &[usize]) -> Self {
        Self::new(name, Vec::new(), targets.to_vec())
    }

    pub fn rotation(name: GateKind, theta: f64, targets: &[usize]) -> Self {
        Self::new(name, vec![theta], targets.to_vec())
    }

    /// Arity and parameter count only; qubit range is checked against a register.
    pub fn check_shape(&self) -> Result<()> {
        if self.params.len() != self.name.n_params() {
            return Err(QdpError::InvalidParams {
                gate: self.name.to_string(),
                reason: format!("expected {} parameter(s), got {}", self.name.n_params(), self.params.len()),
            });
        }
        if let Some(p) = self.params.iter().find(|p| !p.is_finite()) {
            return Err(QdpError::InvalidParams { gate: self.name.to_string(), reason: format!("non-finite angle {p}") });
        }
        if self.targets.len() != self.name.arity() {
            return Err(QdpError::InvalidTarget(format!(
                "{} acts on {} qubit(s), got {} target(s)",
                self.name,
                self.name.arity(),
                self.targets.len()
            )));
        }
        Ok(())
    }

    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        self.check_shape()?;
        check_targets(&self.targets, n_qubits)
    }
}

fn m2(a: C64, b: C64, c: C64, d: C64) -> ComplexMatrix {
    ComplexMatrix::from_rows(&[vec![a, b], vec![c, d]]).expect("2x2")
}

fn r(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn rx(theta: f64) -> ComplexMatrix {
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    m2(r(c), C64::new(0.0, -s), C64::new(0.0, -s), r(c))
}

fn ry(theta: f64) -> ComplexMatrix {
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    m2(r(c), r(-s), r(s), r(c))
}

fn rz(theta: f64) -> ComplexMatrix {
    m2(C64::from_polar(1.0, -theta / 2.0), ZERO, ZERO, C64::from_polar(1.0, theta / 2.0))
}

fn controlled(u: &ComplexMatrix) -> ComplexMatrix {
    let mut rows = vec![vec![ZERO; 4]; 4];
    rows[0][0] = ONE;
    rows[1][1] = ONE;
    for i in 0..2 {
        for j in 0..2 {
            rows[2 + i][2 + j] = u.get(i, j);
        }
    }
    ComplexMatrix::from_rows(&rows).expect("4x4")
}

pub(crate) fn pauli_x() -> ComplexMatrix {
    m2(ZERO, ONE, ONE, ZERO)
}

pub(crate) fn pauli_y() -> ComplexMatrix {
    m2(ZERO, C64::new(0.0, -1.0), C64::new(0.0, 1.0), ZERO)
}

pub(crate) fn pauli_z() -> ComplexMatrix {
    m2(ONE, ZERO, ZERO, r(-1.0))
}

/// The 2x2 or 4x4 unitary of a gate.
pub fn gate_matrix(g: &GateSpec) -> Result<ComplexMatrix> {
    g.check_shape()?;
    let theta = g.params.first().copied().unwrap_or(0.0);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    Ok(match g.name {
        GateKind::X => pauli_x(),
        GateKind::Y => pauli_y(),
        GateKind::Z => pauli_z(),
        GateKind::H => m2(r(h), r(h), r(h), r(-h)),
        GateKind::S => m2(ONE, ZERO, ZERO, C64::new(0.0, 1.0)),
        GateKind::T => m2(ONE, ZERO, ZERO, C64::from_polar(1.0, std::f64::consts::FRAC_PI_4)),
        GateKind::Rx => rx(theta),
        GateKind::Ry => ry(theta),
        GateKind::Rz => rz(theta),
        GateKind::Cx => controlled(&pauli_x()),
        GateKind::Cz => controlled(&pauli_z()),
        GateKind::Crx => controlled(&rx(theta)),
        GateKind::Cry => controlled(&ry(theta)),
        GateKind::Crz => controlled(&rz(theta)),
        // Principal square root of X.
        GateKind::Sx => m2(C64::new(0.5, 0.5), C64::new(0.5, -0.5), C64::new(0.5, -0.5), C64::new(0.5, 0.5)),
        GateKind::SqrtIswap => {
            let mut rows = vec![vec![ZERO; 4]; 4];
            rows[0][0] = ONE;
            rows[3][3] = ONE;
            rows[1][1] = r(h);
            rows[2][2] = r(h);
            rows[1][2] = C64::new(0.0, h);
            rows[2][1] = C64::new(0.0, h);
            ComplexMatrix::from_rows(&rows).expect("4x4")
        }
    })
}

/// Full-register unitary of `g` on an `n`-qubit register.
pub fn lift_gate(g: &GateSpec, n: usize) -> Result<ComplexMatrix> {
    g.validate(n)?;
    lift_operator(&gate_matrix(g)?, &g.targets, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn unitarity_defect(u: &ComplexMatrix) -> f64 {
        u.adjoint().mul(u).max_abs_diff(&ComplexMatrix::identity(u.dim()))
    }

    #[test]
    fn all_gates_are_unitary() {
        for kind in GateKind::ALL {
            let targets: Vec<usize> = (0..kind.arity()).collect();
            let params = vec![0.37; kind.n_params()];
            let u = gate_matrix(&GateSpec::new(kind, params, targets)).unwrap();
            assert!(unitarity_defect(&u) < 1e-12, "{kind}");
        }
    }

    #[test]
    fn ry_pi() {
        let u = gate_matrix(&GateSpec::rotation(GateKind::Ry, PI, &[0])).unwrap();
        let expected = ComplexMatrix::from_real_rows(&[vec![0.0, -1.0], vec![1.0, 0.0]]).unwrap();
        assert!(u.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn cx_swaps_lower_block() {
        let u = gate_matrix(&GateSpec::fixed(GateKind::Cx, &[0, 1])).unwrap();
        let expected = ComplexMatrix::from_real_rows(&[
            vec![1.0, 0.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, 1.0],
            vec![0.0, 0.0, 1.0, 0.0],
        ])
        .unwrap();
        assert_eq!(u, expected);
    }

    #[test]
    fn rz_zero_is_identity() {
        let u = gate_matrix(&GateSpec::rotation(GateKind::Rz, 0.0, &[0])).unwrap();
        assert!(u.max_abs_diff(&ComplexMatrix::identity(2)) < 1e-15);
    }

    #[test]
    fn sx_squares_to_x() {
        let sx = gate_matrix(&GateSpec::fixed(GateKind::Sx, &[0])).unwrap();
        assert!(sx.mul(&sx).max_abs_diff(&pauli_x()) < 1e-15);
        let s = gate_matrix(&GateSpec::fixed(GateKind::SqrtIswap, &[0, 1])).unwrap();
        let iswap = s.mul(&s);
        assert!((iswap.get(1, 2) - C64::new(0.0, 1.0)).norm() < 1e-15);
        assert!(iswap.get(1, 1).norm() < 1e-15);
    }

    #[test]
    fn parse_errors() {
        assert!(matches!("FOO".parse::<GateKind>(), Err(QdpError::UnknownGate(_))));
        assert_eq!("sqrt_iswap".parse::<GateKind>().unwrap(), GateKind::SqrtIswap);
        let bad = GateSpec::new(GateKind::Rx, vec![], vec![0]);
        assert!(matches!(gate_matrix(&bad), Err(QdpError::InvalidParams { .. })));
        let bad = GateSpec::new(GateKind::H, vec![0.1], vec![0]);
        assert!(matches!(gate_matrix(&bad), Err(QdpError::InvalidParams { .. })));
    }

    #[test]
    fn lifted_gates_on_basis_states() {
        // H on qubit 0 of two is H ⊗ I.
        let h = gate_matrix(&GateSpec::fixed(GateKind::H, &[0])).unwrap();
        let lifted = lift_gate(&GateSpec::fixed(GateKind::H, &[0]), 2).unwrap();
        assert!(lifted.max_abs_diff(&h.kron(&ComplexMatrix::identity(2))) < 1e-15);

        // X on qubit 1: |00> -> |01>.
        let x1 = lift_gate(&GateSpec::fixed(GateKind::X, &[1]), 2).unwrap();
        assert_eq!(x1.get(0b01, 0b00), ONE);

        // Reversed CX (control 1, target 0). Brute-force oracle over basis states:
        // output bit0 = in bit0 XOR in bit1, bit1 unchanged (big-endian labels q0q1).
        let cx = lift_gate(&GateSpec::fixed(GateKind::Cx, &[1, 0]), 2).unwrap();
        for input in 0..4usize {
            let (q0, q1) = (input >> 1, input & 1);
            let out = ((q0 ^ q1) << 1) | q1;
            assert_eq!(cx.get(out, input), ONE, "input {input:02b}");
        }
        assert_eq!(cx.get(0b11, 0b01), ONE);
        assert!(matches!(lift_gate(&GateSpec::fixed(GateKind::X, &[2]), 2), Err(QdpError::InvalidTarget(_))));
    }
}
