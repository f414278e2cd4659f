//! Asymptotic BB84 key rates, the secret-key condition for repetition-
//! code advantage distillation, critical-QBER solvers, and finite-round
//! mutual-information envelopes.

use crate::distill::dejmps;
use crate::error::{Error, Result};
use crate::state::{BellDiagonalState, ComponentPermutation, PermSet};

/// Binary entropy H(x) = -x log2 x - (1-x) log2 (1-x), with
/// H(0) = H(1) = 0.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("binary entropy argument {x} outside [0, 1]")));
    }
    Ok(h(x))
}

fn h(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    -x * x.log2() - (1.0 - x) * (1.0 - x).log2()
}

/// Inputs of the BB84 rate formula.
#[derive(Clone, Copy, Debug)]
pub struct KeyRateInputs {
    pub p_bit: f64,
    pub p_phase: f64,
    pub p_ed: f64,
    pub p_ad: f64,
    pub m: u32,
    pub n: u32,
}

impl KeyRateInputs {
    /// Error probabilities of a Bell-diagonal state: the bit flip is
    /// carried by the X and Y components, the phase flip by Z and Y.
    pub fn for_state(
        state: &BellDiagonalState,
        p_ed: f64,
        p_ad: f64,
        m: u32,
        n: u32,
    ) -> KeyRateInputs {
        KeyRateInputs {
            p_bit: state.p_x() + state.p_y(),
            p_phase: state.p_z() + state.p_y(),
            p_ed,
            p_ad,
            m,
            n,
        }
    }
}

/// Asymptotic BB84 key rate
/// `r = max{ (p_ED p_AD)/(m n) (1 - H(p_bit) - H(p_phase)), 0 }`.
/// For an ED-only protocol set `p_ad` and `n` to 1.
pub fn bb84_rate(inputs: &KeyRateInputs) -> f64 {
    let yield_factor = inputs.p_ed * inputs.p_ad / (inputs.m as f64 * inputs.n as f64);
    let secret_fraction = 1.0 - h(inputs.p_bit) - h(inputs.p_phase);
    (yield_factor * secret_fraction).max(0.0)
}

/// The sufficient and necessary condition for key sharing with a large
/// but finite number of advantage-distillation rounds:
/// `(p_I + p_Z)(p_X + p_Y) < (p_I - p_Z)^2`.
pub fn ck_condition(state: &BellDiagonalState) -> bool {
    let p = state.components();
    (p[0] + p[3]) * (p[1] + p[2]) < (p[0] - p[3]) * (p[0] - p[3])
}

/// The QKD configurations whose critical QBER is solved for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SecurityFamily {
    /// Six-state protocol, advantage distillation only.
    SixStateAd,
    /// Six-state protocol, one 2-to-1 distillation round before AD,
    /// with the best component permutation.
    SixStateEdAd,
    /// BB84, advantage distillation only (worst case x = 0).
    Bb84Ad,
    /// BB84 with the Y/Z components permuted (x = 0).
    Bb84Permuted,
}

impl SecurityFamily {
    pub const ALL: [SecurityFamily; 4] = [
        SecurityFamily::SixStateAd,
        SecurityFamily::SixStateEdAd,
        SecurityFamily::Bb84Ad,
        SecurityFamily::Bb84Permuted,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SecurityFamily::SixStateAd => "six_state_ad",
            SecurityFamily::SixStateEdAd => "six_state_ed_ad",
            SecurityFamily::Bb84Ad => "bb84_ad",
            SecurityFamily::Bb84Permuted => "bb84_permuted",
        }
    }

    /// The assumed shared state at QBER `q`, before any distillation.
    fn base_state(&self, q: f64) -> Result<BellDiagonalState> {
        match self {
            SecurityFamily::SixStateAd | SecurityFamily::SixStateEdAd => {
                BellDiagonalState::six_state(q)
            }
            SecurityFamily::Bb84Ad => BellDiagonalState::bb84(q, 0.0),
            SecurityFamily::Bb84Permuted => BellDiagonalState::bb84_permuted(q, 0.0),
        }
    }

    /// Whether keys can be shared at QBER `q`. For the ED+AD family the
    /// condition is maximized over all 24 component permutations of the
    /// distilled state; the satisfying permutation is returned.
    fn condition(&self, q: f64) -> Result<(bool, Option<u32>)> {
        let state = self.base_state(q)?;
        match self {
            SecurityFamily::SixStateEdAd => {
                let distilled = dejmps(&state, &state, false);
                let Some(s) = distilled.state() else {
                    return Ok((false, None));
                };
                for (id, perm) in PermSet::Full24.perms().iter().enumerate() {
                    if ck_condition(&perm.apply(s)) {
                        return Ok((true, Some(id as u32)));
                    }
                }
                Ok((false, None))
            }
            _ => Ok((ck_condition(&state), None)),
        }
    }
}

/// A solved security bound.
#[derive(Clone, Copy, Debug)]
pub struct CriticalQber {
    /// The boundary QBER, within the requested tolerance.
    pub q: f64,
    /// For the ED+AD family, the id (into [`PermSet::Full24`]) and the
    /// permutation that attains the bound.
    pub winning_perm: Option<(u32, ComponentPermutation)>,
}

/// Bisects the key-sharing condition over `q` in `[0, 0.5]`.
pub fn critical_qber(family: SecurityFamily, tol: f64) -> Result<CriticalQber> {
    critical_qber_with_bracket(family, 0.0, 0.5, tol)
}

/// Bisection with an explicit initial bracket: the condition must hold
/// at `lo` and fail at `hi`.
pub fn critical_qber_with_bracket(
    family: SecurityFamily,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<CriticalQber> {
    if tol <= 0.0 {
        return Err(Error::Domain(format!("tolerance {tol} must be positive")));
    }
    let (mut lo, mut hi) = (lo, hi);
    if !family.condition(lo)?.0 {
        return Err(Error::Solver(format!(
            "condition already fails at lower bracket q={lo}"
        )));
    }
    if family.condition(hi)?.0 {
        return Err(Error::Solver(format!(
            "condition still holds at upper bracket q={hi}"
        )));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if family.condition(mid)?.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let winning_perm = family.condition(lo)?.1.map(|id| {
        (id, PermSet::Full24.perms()[id as usize])
    });
    Ok(CriticalQber { q: 0.5 * (lo + hi), winning_perm })
}

/// The mutual-information difference I(A:B) - I(A:E) after N rounds of
/// repetition-code advantage distillation:
///
/// `1 - H(eps_N) - (1 - eps_N) H((1 - Lambda_eq^N)/2)
///  - eps_N H((1 - Lambda_diff^N)/2)`
///
/// with `eps_AB = p_X + p_Y`,
/// `eps_N = eps_AB^N / (eps_AB^N + (1 - eps_AB)^N)`,
/// `Lambda_eq = (p_I - p_Z)/(p_I + p_Z)` and
/// `Lambda_diff = |p_X - p_Y|/(p_X + p_Y)`. Terms whose 0/0 ratio is
/// undefined carry zero weight and are dropped.
pub fn mutual_info_difference(state: &BellDiagonalState, n_rounds: u32) -> f64 {
    assert!(n_rounds >= 1, "at least one AD round required");
    let p = state.components();
    let eps_ab = p[1] + p[2];
    let s0 = p[0] + p[3];
    let n = n_rounds as i32;

    let eps_n = if eps_ab <= 0.0 {
        0.0
    } else {
        let e = eps_ab.powi(n);
        e / (e + (1.0 - eps_ab).powi(n))
    };

    let term_eq = if s0 <= 0.0 {
        0.0
    } else {
        let lambda_eq = (p[0] - p[3]) / s0;
        (1.0 - eps_n) * h((1.0 - lambda_eq.powi(n)) / 2.0)
    };
    let term_diff = if eps_ab <= 0.0 {
        0.0
    } else {
        let lambda_diff = (p[1] - p[2]).abs() / eps_ab;
        eps_n * h((1.0 - lambda_diff.powi(n)) / 2.0)
    };
    1.0 - h(eps_n) - term_eq - term_diff
}

/// QKD protocol of a finite-round envelope.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EnvelopeProtocol {
    SixState,
    Bb84,
}

impl EnvelopeProtocol {
    pub fn name(&self) -> &'static str {
        match self {
            EnvelopeProtocol::SixState => "six_state",
            EnvelopeProtocol::Bb84 => "bb84",
        }
    }
}

/// Entanglement-distillation preprocessing applied before the AD
/// rounds of a finite envelope.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdConfig {
    /// No preprocessing.
    Edx0,
    /// Component permutation only (BB84).
    Edx0Permute,
    /// One 2-to-1 distillation round.
    Edx1,
    /// The 2-to-1 round applied twice, the second acting on two copies
    /// of the first round's output (six-state).
    Edx2,
}

impl EdConfig {
    pub fn name(&self) -> &'static str {
        match self {
            EdConfig::Edx0 => "edx0",
            EdConfig::Edx0Permute => "edx0_permute",
            EdConfig::Edx1 => "edx1",
            EdConfig::Edx2 => "edx2",
        }
    }

    /// The configurations plotted for each protocol.
    pub fn for_protocol(protocol: EnvelopeProtocol) -> [EdConfig; 3] {
        match protocol {
            EnvelopeProtocol::SixState => [EdConfig::Edx0, EdConfig::Edx1, EdConfig::Edx2],
            EnvelopeProtocol::Bb84 => [EdConfig::Edx0, EdConfig::Edx0Permute, EdConfig::Edx1],
        }
    }
}

/// Minimum and maximum of the mutual-information difference over
/// `N = 1..=n_max` AD rounds, after the configured ED preprocessing of
/// the protocol's state at QBER `q`.
pub fn finite_envelope(
    protocol: EnvelopeProtocol,
    config: EdConfig,
    n_max: u32,
    q: f64,
) -> Result<(f64, f64)> {
    if n_max < 1 {
        return Err(Error::Domain("n_max must be >= 1".into()));
    }
    if !EdConfig::for_protocol(protocol).contains(&config) {
        return Err(Error::Config(format!(
            "ED configuration {} is not defined for the {} protocol",
            config.name(),
            protocol.name()
        )));
    }
    let state = match (protocol, config) {
        (EnvelopeProtocol::SixState, EdConfig::Edx0) => BellDiagonalState::six_state(q)?,
        (EnvelopeProtocol::SixState, EdConfig::Edx1) => {
            let s = BellDiagonalState::six_state(q)?;
            *dejmps(&s, &s, false)
                .state()
                .ok_or_else(|| Error::Solver("degenerate distillation stage".into()))?
        }
        (EnvelopeProtocol::SixState, EdConfig::Edx2) => {
            let s = BellDiagonalState::six_state(q)?;
            let once = *dejmps(&s, &s, false)
                .state()
                .ok_or_else(|| Error::Solver("degenerate distillation stage".into()))?;
            *dejmps(&once, &once, false)
                .state()
                .ok_or_else(|| Error::Solver("degenerate distillation stage".into()))?
        }
        (EnvelopeProtocol::Bb84, EdConfig::Edx0) => BellDiagonalState::bb84(q, 0.0)?,
        (EnvelopeProtocol::Bb84, EdConfig::Edx0Permute) => {
            BellDiagonalState::bb84_permuted(q, 0.0)?
        }
        (EnvelopeProtocol::Bb84, EdConfig::Edx1) => {
            let s = BellDiagonalState::bb84(q, 0.0)?;
            *dejmps(&s, &s, false)
                .state()
                .ok_or_else(|| Error::Solver("degenerate distillation stage".into()))?
        }
        _ => unreachable!("combination validated above"),
    };
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for n in 1..=n_max {
        let v = mutual_info_difference(&state, n);
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn entropy_values() {
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert_close(binary_entropy(0.1).unwrap(), 0.46899559358928117, 1e-12);
        for x in [0.05, 0.2, 0.37, 0.49] {
            assert_close(
                binary_entropy(x).unwrap(),
                binary_entropy(1.0 - x).unwrap(),
                1e-15,
            );
        }
        assert!(binary_entropy(-0.1).is_err());
        assert!(binary_entropy(1.5).is_err());
    }

    #[test]
    fn rate_perfect_state() {
        let r = bb84_rate(&KeyRateInputs {
            p_bit: 0.0,
            p_phase: 0.0,
            p_ed: 1.0,
            p_ad: 1.0,
            m: 1,
            n: 1,
        });
        assert_eq!(r, 1.0);
    }

    #[test]
    fn rate_werner_085_undistilled() {
        let w = BellDiagonalState::werner(0.85).unwrap();
        let inputs = KeyRateInputs::for_state(&w, 1.0, 1.0, 1, 1);
        assert_close(inputs.p_bit, 0.1, 1e-15);
        assert_close(inputs.p_phase, 0.1, 1e-15);
        assert_close(bb84_rate(&inputs), 0.06200881282143765, 1e-12);
    }

    #[test]
    fn rate_clamps_to_zero() {
        let w = BellDiagonalState::werner(0.5).unwrap();
        let inputs = KeyRateInputs::for_state(&w, 1.0, 1.0, 1, 1);
        assert_eq!(bb84_rate(&inputs), 0.0);
    }

    #[test]
    fn ck_condition_examples() {
        let perfect = BellDiagonalState::werner(1.0).unwrap();
        assert!(ck_condition(&perfect));
        // Q - Q^2 = 0.21 vs (1 - 2Q)^2 = 0.16 at Q = 0.3.
        assert!(!ck_condition(&BellDiagonalState::six_state(0.3).unwrap()));
        // 0.1875 < 0.25 at Q = 0.25.
        assert!(ck_condition(&BellDiagonalState::six_state(0.25).unwrap()));
    }

    #[test]
    fn critical_qber_values() {
        let tol = 1e-6;
        let six = critical_qber(SecurityFamily::SixStateAd, tol).unwrap();
        assert_close(six.q, (5.0 - 5.0f64.sqrt()) / 10.0, 2.0 * tol);
        assert!(six.winning_perm.is_none());

        let bb84 = critical_qber(SecurityFamily::Bb84Ad, tol).unwrap();
        assert_close(bb84.q, 0.2, 2.0 * tol);

        let permuted = critical_qber(SecurityFamily::Bb84Permuted, tol).unwrap();
        assert_close(permuted.q, 0.25, 2.0 * tol);

        let ed_ad = critical_qber(SecurityFamily::SixStateEdAd, tol).unwrap();
        assert!(ed_ad.q > 0.295 && ed_ad.q < 0.305, "got {}", ed_ad.q);
        assert!(ed_ad.winning_perm.is_some());
    }

    #[test]
    fn critical_qber_bracket_independent() {
        let tol = 1e-6;
        for family in SecurityFamily::ALL {
            let a = critical_qber_with_bracket(family, 0.0, 0.5, tol).unwrap();
            let b = critical_qber_with_bracket(family, 0.01, 0.45, tol).unwrap();
            assert_close(a.q, b.q, 2.0 * tol);
        }
    }

    #[test]
    fn critical_qber_bad_bracket() {
        assert!(matches!(
            critical_qber_with_bracket(SecurityFamily::Bb84Ad, 0.3, 0.5, 1e-6),
            Err(Error::Solver(_))
        ));
    }

    #[test]
    fn mutual_info_perfect_state() {
        let perfect = BellDiagonalState::werner(1.0).unwrap();
        for n in [1, 3, 10] {
            assert_eq!(mutual_info_difference(&perfect, n), 1.0);
        }
    }

    #[test]
    fn mutual_info_maximally_mixed_is_nonpositive() {
        let mixed = BellDiagonalState::new(0.25, 0.25, 0.25, 0.25).unwrap();
        assert!(mutual_info_difference(&mixed, 1) <= 0.0);
    }

    #[test]
    fn mutual_info_sign_tracks_ad_boundary() {
        // The largest QBER with a positive difference at some round
        // count N' <= N sits below the many-round bound and approaches
        // it as N grows. N is kept small enough that the positive tail
        // (of order Lambda_eq^2N) stays resolvable in f64; at N in the
        // hundreds it is lost to cancellation against 1 - H(...).
        let families = [
            (SecurityFamily::SixStateAd, BellDiagonalState::six_state as fn(f64) -> _),
            (SecurityFamily::Bb84Ad, |q| BellDiagonalState::bb84(q, 0.0)),
        ];
        for (family, state_at) in families {
            let q_star = critical_qber(family, 1e-9).unwrap().q;
            let flip = |n_max: u32| -> f64 {
                let best = |q: f64| {
                    let s = state_at(q).unwrap();
                    (1..=n_max)
                        .map(|n| mutual_info_difference(&s, n))
                        .fold(f64::NEG_INFINITY, f64::max)
                };
                let (mut lo, mut hi) = (q_star - 0.05, q_star + 0.05);
                assert!(best(lo) > 0.0 && best(hi) <= 0.0);
                for _ in 0..40 {
                    let mid = 0.5 * (lo + hi);
                    if best(mid) > 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            };
            let mut prev = f64::NEG_INFINITY;
            for n_max in [10, 20, 40] {
                let q_flip = flip(n_max);
                assert!(q_flip <= q_star, "{}: flip above bound", family.name());
                assert!(q_flip >= prev, "{}: flip not monotone in N", family.name());
                prev = q_flip;
            }
            assert!(
                q_star - prev < 0.02,
                "{}: flip at N=40 is {prev}, bound {q_star}",
                family.name()
            );
        }
    }

    #[test]
    fn mutual_info_monotone_in_qber() {
        for n in [1, 5, 10] {
            let mut prev = f64::INFINITY;
            let mut q = 0.0;
            while q <= 0.33 {
                let v = mutual_info_difference(&BellDiagonalState::six_state(q).unwrap(), n);
                assert!(v <= prev + 1e-12, "not monotone at q={q}, n={n}");
                prev = v;
                q += 0.002;
            }
        }
    }

    #[test]
    fn envelope_perfect_input() {
        let (lo, hi) = finite_envelope(EnvelopeProtocol::SixState, EdConfig::Edx0, 10, 0.0).unwrap();
        assert_eq!((lo, hi), (1.0, 1.0));
        let (lo, hi) = finite_envelope(EnvelopeProtocol::Bb84, EdConfig::Edx0, 10, 0.0).unwrap();
        assert_eq!((lo, hi), (1.0, 1.0));
    }

    #[test]
    fn envelope_rejects_invalid_combinations() {
        assert!(matches!(
            finite_envelope(EnvelopeProtocol::SixState, EdConfig::Edx0Permute, 10, 0.1),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            finite_envelope(EnvelopeProtocol::Bb84, EdConfig::Edx2, 10, 0.1),
            Err(Error::Config(_))
        ));
    }
}
