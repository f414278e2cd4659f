//! Distillation statistics: pushforward of Bell-diagonal states through
//! arbitrary bi-local Clifford protocols, the closed-form 2-to-1 and
//! repetition-code maps, ED+AD concatenation, and exhaustive search for
//! the optimal protocol.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::f2::BellLabel;
use crate::keyrate::{bb84_rate, KeyRateInputs};
use crate::protocol::{SymplecticProtocol, Transversal};
use crate::state::{BellDiagonalState, ComponentPermutation, PermSet};

/// Post-selected output of one distillation stage. A zero success
/// probability leaves no output state; such outcomes are flagged rather
/// than fabricated.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DistillationOutcome {
    success_prob: f64,
    state: Option<BellDiagonalState>,
}

impl DistillationOutcome {
    fn from_buckets(buckets: [f64; 4]) -> DistillationOutcome {
        let success: f64 = buckets.iter().sum();
        if success <= 0.0 {
            return DistillationOutcome { success_prob: 0.0, state: None };
        }
        let p = [
            buckets[0] / success,
            buckets[1] / success,
            buckets[2] / success,
            buckets[3] / success,
        ];
        DistillationOutcome {
            success_prob: success,
            state: Some(BellDiagonalState::from_components_unchecked(p)),
        }
    }

    fn degenerate() -> DistillationOutcome {
        DistillationOutcome { success_prob: 0.0, state: None }
    }

    pub fn success_prob(&self) -> f64 {
        self.success_prob
    }

    pub fn state(&self) -> Option<&BellDiagonalState> {
        self.state.as_ref()
    }

    pub fn fidelity(&self) -> Option<f64> {
        self.state.map(|s| s.fidelity())
    }

    pub fn is_degenerate(&self) -> bool {
        self.state.is_none()
    }
}

/// Per-protocol acceptance statistics compressed over label multisets.
///
/// A protocol's statistics on i.i.d. inputs depend on each input label
/// only through its component counts, so every accepted label is folded
/// into a table of (multiset, output label) counts built once per
/// protocol and reused across a whole parameter sweep.
#[derive(Clone, Debug)]
pub struct PushforwardTable {
    m: usize,
    multisets: Vec<[u8; 4]>,
    counts: Vec<[u32; 4]>,
}

/// All component-count vectors of size `m` over 4 slots, lexicographic.
fn multisets_of(m: usize) -> Vec<[u8; 4]> {
    let mut out = Vec::new();
    let m = m as u8;
    for a in 0..=m {
        for b in 0..=m - a {
            for c in 0..=m - a - b {
                out.push([a, b, c, m - a - b - c]);
            }
        }
    }
    out
}

impl PushforwardTable {
    pub fn new(protocol: &SymplecticProtocol) -> PushforwardTable {
        let m = protocol.pairs();
        let matrix = protocol.matrix();
        let multisets = multisets_of(m);
        let index_of = |counts: [u8; 4]| -> usize {
            multisets.iter().position(|&ms| ms == counts).expect("count vector present")
        };
        let mut counts = vec![[0u32; 4]; multisets.len()];

        // Bits 1..m of the image are the X-parts of the measured pairs;
        // acceptance requires them all zero.
        let measured_mask = if m == 1 { 0 } else { (((1u64 << m) - 1) >> 1) << 1 };
        for label in 0..4usize.pow(m as u32) {
            let mut bits = 0u64;
            let mut tally = [0u8; 4];
            for pair in 0..m {
                let comp = (label >> (2 * pair)) & 3;
                tally[comp] += 1;
                let (v, w) = BellLabel::from_index(comp).bits();
                bits |= (v as u64) << pair;
                bits |= (w as u64) << (m + pair);
            }
            let image = matrix.apply(bits);
            if image & measured_mask != 0 {
                continue;
            }
            let out_label = BellLabel::from_bits(image & 1 == 1, (image >> m) & 1 == 1);
            counts[index_of(tally)][out_label.index()] += 1;
        }
        PushforwardTable { m, multisets, counts }
    }

    pub fn pairs(&self) -> usize {
        self.m
    }

    /// Distillation statistics for `m` i.i.d. copies of `input`.
    pub fn evaluate(&self, input: &BellDiagonalState) -> DistillationOutcome {
        let p = input.components();
        // powers[c][k] = p_c^k
        let mut powers = [[1.0f64; 5]; 4];
        for c in 0..4 {
            for k in 1..=self.m {
                powers[c][k] = powers[c][k - 1] * p[c];
            }
        }
        let mut buckets = [0.0f64; 4];
        for (ms, cnt) in self.multisets.iter().zip(&self.counts) {
            let mono = powers[0][ms[0] as usize]
                * powers[1][ms[1] as usize]
                * powers[2][ms[2] as usize]
                * powers[3][ms[3] as usize];
            for k in 0..4 {
                if cnt[k] != 0 {
                    buckets[k] += cnt[k] as f64 * mono;
                }
            }
        }
        DistillationOutcome::from_buckets(buckets)
    }
}

/// Distillation statistics of a protocol on i.i.d. copies of `input`:
/// every length-m label is mapped through the protocol matrix, labels
/// whose measured pairs carry no X-part are accepted, and the kept
/// pair's label is accumulated.
pub fn pushforward_statistics(
    protocol: &SymplecticProtocol,
    input: &BellDiagonalState,
) -> DistillationOutcome {
    PushforwardTable::new(protocol).evaluate(input)
}

/// Generalization of [`pushforward_statistics`] to per-pair inputs.
pub fn pushforward_statistics_multi(
    protocol: &SymplecticProtocol,
    inputs: &[BellDiagonalState],
) -> Result<DistillationOutcome> {
    let m = protocol.pairs();
    if inputs.len() != m {
        return Err(Error::Dimension(format!(
            "protocol consumes {m} pairs, got {} input states",
            inputs.len()
        )));
    }
    let matrix = protocol.matrix();
    let measured_mask = if m == 1 { 0 } else { (((1u64 << m) - 1) >> 1) << 1 };
    let mut buckets = [0.0f64; 4];
    for label in 0..4usize.pow(m as u32) {
        let mut bits = 0u64;
        let mut prob = 1.0;
        for (pair, state) in inputs.iter().enumerate() {
            let comp = (label >> (2 * pair)) & 3;
            prob *= state.components()[comp];
            let (v, w) = BellLabel::from_index(comp).bits();
            bits |= (v as u64) << pair;
            bits |= (w as u64) << (m + pair);
        }
        let image = matrix.apply(bits);
        if image & measured_mask != 0 {
            continue;
        }
        let out_label = BellLabel::from_bits(image & 1 == 1, (image >> m) & 1 == 1);
        buckets[out_label.index()] += prob;
    }
    Ok(DistillationOutcome::from_buckets(buckets))
}

/// Reorders components so that p_I > p_X >= p_Z >= p_Y, the input
/// ordering that maximizes the 2-to-1 output fidelity.
fn dejmps_input_order(s: &BellDiagonalState) -> BellDiagonalState {
    let mut c = s.components();
    c.sort_by(|a, b| b.partial_cmp(a).expect("finite components"));
    // Largest to I, then X, Z, Y.
    BellDiagonalState::from_components_unchecked([c[0], c[1], c[3], c[2]])
}

/// Closed-form 2-to-1 distillation map on two Bell-diagonal inputs.
///
/// With `p_ij = a_i b_j`, the accepted set is {II, XX, ZX, YI, YY, ZZ,
/// XZ, IY} and the output components are `I ~ p_II + p_YY`,
/// `X ~ p_XX + p_ZZ`, `Y ~ p_ZX + p_XZ`, `Z ~ p_YI + p_IY`. When
/// `reorder` is set, each input is first component-permuted into the
/// fidelity-maximizing order.
pub fn dejmps(a: &BellDiagonalState, b: &BellDiagonalState, reorder: bool) -> DistillationOutcome {
    let (a, b) = if reorder {
        (dejmps_input_order(a), dejmps_input_order(b))
    } else {
        (*a, *b)
    };
    let pa = a.components();
    let pb = b.components();
    let buckets = [
        pa[0] * pb[0] + pa[2] * pb[2],
        pa[1] * pb[1] + pa[3] * pb[3],
        pa[3] * pb[1] + pa[1] * pb[3],
        pa[2] * pb[0] + pa[0] * pb[2],
    ];
    DistillationOutcome::from_buckets(buckets)
}

/// Recursive m-to-1 distillation: folds [`dejmps`] left to right m-1
/// times, pairing the previous output with a fresh copy of `input`.
/// The success probability is the product of the stage probabilities,
/// each conditioned on prior success.
pub fn dejmps_recursive(m: usize, input: &BellDiagonalState) -> Result<DistillationOutcome> {
    if !(2..=4).contains(&m) {
        return Err(Error::UnsupportedSize(m, "2..=4"));
    }
    let mut state = *input;
    let mut success = 1.0;
    for _ in 1..m {
        let stage = dejmps(&state, input, false);
        success *= stage.success_prob();
        match stage.state() {
            Some(s) => state = *s,
            None => return Ok(DistillationOutcome::degenerate()),
        }
    }
    Ok(DistillationOutcome { success_prob: success, state: Some(state) })
}

/// Closed-form n-to-1 repetition-code advantage distillation.
///
/// A block is kept iff all n bit-error indicators agree; the kept bit
/// inherits the common value and phase errors accumulate by parity.
/// With `s0 = p_I + p_Z`, `d0 = p_I - p_Z`, `s1 = p_X + p_Y`,
/// `d1 = p_X - p_Y`: success is `s0^n + s1^n` and the output is
/// proportional to `((s0^n + d0^n)/2, (s1^n + d1^n)/2, (s1^n - d1^n)/2,
/// (s0^n - d0^n)/2)`. n = 1 is the identity.
pub fn repetition_ad(n: usize, input: &BellDiagonalState) -> Result<DistillationOutcome> {
    if n == 0 {
        return Err(Error::Domain("repetition code size n must be >= 1".into()));
    }
    let p = input.components();
    let s0 = (p[0] + p[3]).powi(n as i32);
    let d0 = (p[0] - p[3]).powi(n as i32);
    let s1 = (p[1] + p[2]).powi(n as i32);
    let d1 = (p[1] - p[2]).powi(n as i32);
    let buckets = [
        ((s0 + d0) / 2.0).max(0.0),
        ((s1 + d1) / 2.0).max(0.0),
        ((s1 - d1) / 2.0).max(0.0),
        ((s0 - d0) / 2.0).max(0.0),
    ];
    Ok(DistillationOutcome::from_buckets(buckets))
}

/// Outcome of an ED+AD concatenation with the stage success
/// probabilities reported factored.
#[derive(Clone, Copy, Debug)]
pub struct EdAdOutcome {
    pub outcome: DistillationOutcome,
    pub p_ed: f64,
    pub p_ad: f64,
}

fn concatenate_with_table(
    table: &PushforwardTable,
    perm: &ComponentPermutation,
    n: usize,
    input: &BellDiagonalState,
) -> Result<EdAdOutcome> {
    let stage1 = table.evaluate(input);
    let Some(intermediate) = stage1.state() else {
        return Ok(EdAdOutcome { outcome: DistillationOutcome::degenerate(), p_ed: 0.0, p_ad: 0.0 });
    };
    // The same fix-up is applied to each of the n i.i.d. intermediate pairs.
    let fixed = perm.apply(intermediate);
    let stage2 = repetition_ad(n, &fixed)?;
    let p_ed = stage1.success_prob();
    let p_ad = stage2.success_prob();
    Ok(EdAdOutcome {
        outcome: DistillationOutcome { success_prob: p_ed * p_ad, state: stage2.state().copied() },
        p_ed,
        p_ad,
    })
}

/// Runs an m-n-1 ED+AD protocol: the entanglement distillation stage,
/// the intermediate Pauli/permutation fix-up on every pair, then the
/// n-to-1 repetition-code stage.
pub fn concatenate_ed_ad(
    protocol: &SymplecticProtocol,
    perm: &ComponentPermutation,
    n: usize,
    input: &BellDiagonalState,
) -> Result<EdAdOutcome> {
    concatenate_with_table(&PushforwardTable::new(protocol), perm, n, input)
}

/// Search objective for [`ProtocolEvaluator::enumerate_best`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Objective {
    /// Fidelity of the final distilled state.
    Fidelity,
    /// Asymptotic BB84 key rate of the final state, including the
    /// success-probability and pair-consumption prefactor.
    Bb84Rate,
}

/// The optimizer of one exhaustive search.
#[derive(Clone, Copy, Debug)]
pub struct BestProtocol {
    pub protocol_id: u32,
    pub perm_id: u32,
    pub perm: ComponentPermutation,
    pub value: f64,
    pub outcome: DistillationOutcome,
    pub p_ed: f64,
    pub p_ad: f64,
}

fn better(a: BestProtocol, b: BestProtocol) -> BestProtocol {
    if b.value > a.value
        || (b.value == a.value && (b.protocol_id, b.perm_id) < (a.protocol_id, a.perm_id))
    {
        b
    } else {
        a
    }
}

/// Precomputed pushforward tables for every protocol of a transversal,
/// ready for repeated evaluation across a parameter grid.
pub struct ProtocolEvaluator {
    m: usize,
    tables: Vec<PushforwardTable>,
}

impl ProtocolEvaluator {
    pub fn new(transversal: &Transversal) -> ProtocolEvaluator {
        #[cfg(feature = "parallel")]
        let tables = transversal.protocols().par_iter().map(PushforwardTable::new).collect();
        #[cfg(not(feature = "parallel"))]
        let tables = transversal.protocols().iter().map(PushforwardTable::new).collect();
        ProtocolEvaluator { m: transversal.pairs(), tables }
    }

    pub fn pairs(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.tables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tables.is_empty()
    }

    pub fn table(&self, id: u32) -> Option<&PushforwardTable> {
        self.tables.get(id as usize)
    }

    /// Statistics of protocol `id` concatenated with the given fix-up
    /// and n-to-1 repetition stage.
    pub fn concatenate(
        &self,
        id: u32,
        perm: &ComponentPermutation,
        n: usize,
        input: &BellDiagonalState,
    ) -> Result<EdAdOutcome> {
        let table = self
            .tables
            .get(id as usize)
            .ok_or_else(|| Error::Config(format!("protocol id {id} out of range")))?;
        concatenate_with_table(table, perm, n, input)
    }

    fn best_for_table(
        &self,
        id: u32,
        table: &PushforwardTable,
        perms: &[ComponentPermutation],
        n: usize,
        input: &BellDiagonalState,
        objective: Objective,
    ) -> BestProtocol {
        let mut best: Option<BestProtocol> = None;
        for (perm_id, perm) in perms.iter().enumerate() {
            let ed_ad = concatenate_with_table(table, perm, n, input)
                .expect("n >= 1 validated by caller");
            let value = match (objective, ed_ad.outcome.state()) {
                (_, None) => f64::NEG_INFINITY,
                (Objective::Fidelity, Some(s)) => s.fidelity(),
                (Objective::Bb84Rate, Some(s)) => bb84_rate(&KeyRateInputs::for_state(
                    s,
                    ed_ad.p_ed,
                    ed_ad.p_ad,
                    self.m as u32,
                    n as u32,
                )),
            };
            let candidate = BestProtocol {
                protocol_id: id,
                perm_id: perm_id as u32,
                perm: *perm,
                value,
                outcome: ed_ad.outcome,
                p_ed: ed_ad.p_ed,
                p_ad: ed_ad.p_ad,
            };
            best = Some(match best {
                Some(b) => better(b, candidate),
                None => candidate,
            });
        }
        best.expect("perm set is never empty")
    }

    /// Exhaustive maximum of the objective over the transversal and the
    /// permutation set. Ties break to the lowest protocol id, then the
    /// lowest permutation id, so the result is independent of
    /// evaluation order.
    pub fn enumerate_best(
        &self,
        n: usize,
        input: &BellDiagonalState,
        objective: Objective,
        perm_set: PermSet,
    ) -> Result<BestProtocol> {
        self.check_search(n)?;
        let perms = perm_set.perms();
        #[cfg(feature = "parallel")]
        {
            Ok(self
                .tables
                .par_iter()
                .enumerate()
                .map(|(id, t)| self.best_for_table(id as u32, t, &perms, n, input, objective))
                .reduce_with(better)
                .expect("transversal is non-empty"))
        }
        #[cfg(not(feature = "parallel"))]
        {
            Ok(self.enumerate_best_seq_inner(n, input, objective, &perms))
        }
    }

    /// Sequential variant of [`enumerate_best`]; always available, used
    /// as the fallback when the `parallel` feature is off and by the
    /// benchmark suite for comparison.
    pub fn enumerate_best_seq(
        &self,
        n: usize,
        input: &BellDiagonalState,
        objective: Objective,
        perm_set: PermSet,
    ) -> Result<BestProtocol> {
        self.check_search(n)?;
        Ok(self.enumerate_best_seq_inner(n, input, objective, &perm_set.perms()))
    }

    fn enumerate_best_seq_inner(
        &self,
        n: usize,
        input: &BellDiagonalState,
        objective: Objective,
        perms: &[ComponentPermutation],
    ) -> BestProtocol {
        self.tables
            .iter()
            .enumerate()
            .map(|(id, t)| self.best_for_table(id as u32, t, perms, n, input, objective))
            .reduce(better)
            .expect("transversal is non-empty")
    }

    fn check_search(&self, n: usize) -> Result<()> {
        if self.tables.is_empty() {
            return Err(Error::Config("empty transversal".into()));
        }
        if n == 0 {
            return Err(Error::Domain("repetition code size n must be >= 1".into()));
        }
        Ok(())
    }
}

/// The symplectic image of the standard 2-to-1 DEJMPS circuit
/// (bilateral pi/2 rotations followed by a CNOT), in the convention
/// validated against the closed-form map.
pub fn dejmps_protocol() -> SymplecticProtocol {
    let matrix = crate::f2::F2Matrix::from_rows(vec![0b0101, 0b1111, 0b1100, 0b1000], 4);
    SymplecticProtocol::new(0, matrix).expect("constant matrix is symplectic")
}

/// The n-pair bilateral-CNOT protocol equivalent to n-to-1
/// repetition-code advantage distillation: CNOTs from pair 1 onto pairs
/// 2..n, so measured pairs compare bit values and the kept pair
/// accumulates phase parity.
pub fn repetition_protocol(n: usize) -> Result<SymplecticProtocol> {
    if !(1..=4).contains(&n) {
        return Err(Error::UnsupportedSize(n, "1..=4"));
    }
    let mut rows = Vec::with_capacity(2 * n);
    rows.push(1u64);
    for i in 1..n {
        rows.push(1 | (1 << i));
    }
    rows.push(((1u64 << n) - 1) << n);
    for i in 1..n {
        rows.push(1 << (n + i));
    }
    SymplecticProtocol::new(0, crate::f2::F2Matrix::from_rows(rows, 2 * n))
}
