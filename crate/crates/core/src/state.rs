//! Bell-diagonal two-qubit states, the standard noise-model
//! parameterizations, and permutations of the four Bell components.

use std::fmt;

use crate::error::{Error, Result};
use crate::f2::BellLabel;

/// Tolerance on the normalization of a component vector.
pub const NORM_TOL: f64 = 1e-12;

/// A Bell-diagonal state: probabilities of the |Phi+>, |Psi+>, |Psi->
/// and |Phi-> components, in that order. Fidelity is the |Phi+> weight.
#[derive(Clone, Copy, PartialEq)]
pub struct BellDiagonalState {
    p: [f64; 4],
}

impl BellDiagonalState {
    /// Builds a state from explicit components, validating range and
    /// normalization.
    pub fn new(p_i: f64, p_x: f64, p_y: f64, p_z: f64) -> Result<BellDiagonalState> {
        let p = [p_i, p_x, p_y, p_z];
        for (k, &c) in p.iter().enumerate() {
            if !(0.0..=1.0).contains(&c) || !c.is_finite() {
                return Err(Error::Domain(format!(
                    "component {} = {c} outside [0, 1]",
                    BellLabel::from_index(k).pauli_char()
                )));
            }
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > NORM_TOL {
            return Err(Error::Domain(format!("components sum to {sum}, expected 1")));
        }
        Ok(BellDiagonalState { p })
    }

    /// Internal constructor for components that are normalized by
    /// construction (e.g. renormalized distillation outputs).
    pub(crate) fn from_components_unchecked(p: [f64; 4]) -> BellDiagonalState {
        debug_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        BellDiagonalState { p }
    }

    /// Werner state of fidelity `f`: the three non-target components
    /// share `(1 - f) / 3` each.
    pub fn werner(f: f64) -> Result<BellDiagonalState> {
        if !(0.25..=1.0).contains(&f) {
            return Err(Error::Domain(format!("Werner fidelity {f} outside [1/4, 1]")));
        }
        let e = (1.0 - f) / 3.0;
        Ok(BellDiagonalState { p: [f, e, e, e] })
    }

    /// Pure dephasing noise of strength `p`: mixes |Phi+> with |Phi->.
    pub fn dephasing(p: f64) -> Result<BellDiagonalState> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Domain(format!("dephasing probability {p} outside [0, 1]")));
        }
        Ok(BellDiagonalState { p: [1.0 - p, 0.0, 0.0, p] })
    }

    /// Six-state protocol state at QBER `q`:
    /// `(1 - 3q/2, q/2, q/2, q/2)`.
    pub fn six_state(q: f64) -> Result<BellDiagonalState> {
        if !(0.0..=2.0 / 3.0).contains(&q) {
            return Err(Error::Domain(format!("six-state QBER {q} outside [0, 2/3]")));
        }
        Ok(BellDiagonalState { p: [1.0 - 1.5 * q, 0.5 * q, 0.5 * q, 0.5 * q] })
    }

    /// BB84 state at QBER `q` with free parameter `x`:
    /// `(1 - 2q + x, q - x, x, q - x)`.
    pub fn bb84(q: f64, x: f64) -> Result<BellDiagonalState> {
        if !(0.0..=1.0).contains(&q) || x < 0.0 || x > q || 1.0 - 2.0 * q + x < 0.0 {
            return Err(Error::Domain(format!(
                "BB84 parameters q={q}, x={x} leave a negative component"
            )));
        }
        Ok(BellDiagonalState { p: [1.0 - 2.0 * q + x, q - x, x, q - x] })
    }

    /// BB84 state with the Y and Z error weights permuted:
    /// `(1 - 2q + x, q - x, q - x, x)`.
    pub fn bb84_permuted(q: f64, x: f64) -> Result<BellDiagonalState> {
        let s = BellDiagonalState::bb84(q, x)?;
        Ok(BellDiagonalState { p: [s.p[0], s.p[1], s.p[3], s.p[2]] })
    }

    /// Six-state components after one round of the 2-to-1 closed-form
    /// distillation map:
    /// `p_I = (5q^2 - 6q + 2) / d`, `p_X = p_Y = q^2 / d`,
    /// `p_Z = (2q - 3q^2) / d` with `d = 4q^2 - 4q + 2`.
    pub fn six_state_dejmps(q: f64) -> Result<BellDiagonalState> {
        if !(0.0..=2.0 / 3.0).contains(&q) {
            return Err(Error::Domain(format!("six-state QBER {q} outside [0, 2/3]")));
        }
        let d = 4.0 * q * q - 4.0 * q + 2.0;
        Ok(BellDiagonalState {
            p: [
                (5.0 * q * q - 6.0 * q + 2.0) / d,
                q * q / d,
                q * q / d,
                (2.0 * q - 3.0 * q * q) / d,
            ],
        })
    }

    /// Fidelity with the target Bell state, `F = p_I`.
    pub fn fidelity(&self) -> f64 {
        self.p[0]
    }

    pub fn p_i(&self) -> f64 {
        self.p[0]
    }

    pub fn p_x(&self) -> f64 {
        self.p[1]
    }

    pub fn p_y(&self) -> f64 {
        self.p[2]
    }

    pub fn p_z(&self) -> f64 {
        self.p[3]
    }

    /// Components in (I, X, Y, Z) order.
    pub fn components(&self) -> [f64; 4] {
        self.p
    }

    /// Component by Bell label.
    pub fn component(&self, label: BellLabel) -> f64 {
        self.p[label.index()]
    }
}

impl fmt::Debug for BellDiagonalState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "BellDiagonalState(I={:.6}, X={:.6}, Y={:.6}, Z={:.6})",
            self.p[0], self.p[1], self.p[2], self.p[3]
        )
    }
}

/// A permutation of the four Bell-component slots. `map[k]` is the
/// source slot feeding output slot `k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ComponentPermutation {
    map: [u8; 4],
}

impl ComponentPermutation {
    pub fn identity() -> ComponentPermutation {
        ComponentPermutation { map: [0, 1, 2, 3] }
    }

    /// The permutation induced by a single-sided Pauli operator: labels
    /// compose by XOR of their (v, w) bit pairs, so each Pauli yields a
    /// product of two transpositions (identity for I).
    pub fn from_pauli(p: BellLabel) -> ComponentPermutation {
        let mut map = [0u8; 4];
        for label in BellLabel::ALL {
            let (v, w) = label.bits();
            let (pv, pw) = p.bits();
            let out = BellLabel::from_bits(v ^ pv, w ^ pw);
            // out slot receives the weight of the original label
            map[out.index()] = label.index() as u8;
        }
        ComponentPermutation { map }
    }

    /// Builds a permutation from an explicit source map.
    pub fn from_map(map: [u8; 4]) -> Result<ComponentPermutation> {
        let mut seen = [false; 4];
        for &s in &map {
            if s > 3 || seen[s as usize] {
                return Err(Error::Config(format!("{map:?} is not a permutation of 0..4")));
            }
            seen[s as usize] = true;
        }
        Ok(ComponentPermutation { map })
    }

    pub fn source_map(&self) -> [u8; 4] {
        self.map
    }

    pub fn is_identity(&self) -> bool {
        self.map == [0, 1, 2, 3]
    }

    /// Applies the permutation; normalization is preserved.
    pub fn apply(&self, s: &BellDiagonalState) -> BellDiagonalState {
        let p = s.components();
        BellDiagonalState {
            p: [
                p[self.map[0] as usize],
                p[self.map[1] as usize],
                p[self.map[2] as usize],
                p[self.map[3] as usize],
            ],
        }
    }
}

impl fmt::Display for ComponentPermutation {
    /// Renders the sources feeding the (I, X, Y, Z) output slots, e.g.
    /// the Pauli-X permutation prints as "XIZY".
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &s in &self.map {
            write!(f, "{}", BellLabel::from_index(s as usize).pauli_char())?;
        }
        Ok(())
    }
}

/// The permutation families enumerated between the distillation stages.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PermSet {
    /// The four permutations induced by single-sided Paulis {I, X, Y, Z}.
    Pauli4,
    /// All 24 component permutations (realizable by bilateral local
    /// Cliffords).
    Full24,
}

impl PermSet {
    /// The permutations of the set in their canonical order; `perm_id`
    /// is an index into this list.
    pub fn perms(&self) -> Vec<ComponentPermutation> {
        match self {
            PermSet::Pauli4 => BellLabel::ALL.iter().map(|&p| ComponentPermutation::from_pauli(p)).collect(),
            PermSet::Full24 => {
                let mut out = Vec::with_capacity(24);
                // Lexicographic order over source maps.
                for a in 0..4u8 {
                    for b in 0..4u8 {
                        for c in 0..4u8 {
                            for d in 0..4u8 {
                                if let Ok(p) = ComponentPermutation::from_map([a, b, c, d]) {
                                    out.push(p);
                                }
                            }
                        }
                    }
                }
                out
            }
        }
    }
}
