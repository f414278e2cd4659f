//! Self-contained oracle suite: exact counting formulas, the Sp(4, Z_2)
//! brute-force class check, closed-form versus pushforward equivalence,
//! and the critical-QBER bounds. Used by the command-line `verify`
//! subcommand and by the test suites.

use std::path::Path;

use crate::distill::{
    dejmps, dejmps_protocol, pushforward_statistics, repetition_ad, repetition_protocol,
};
use crate::f2::generate_symplectic_group;
use crate::keyrate::{critical_qber, SecurityFamily};
use crate::protocol::{build_transversal, counting_formulas, read_transversal};
use crate::state::BellDiagonalState;
use crate::{F2Matrix, SymplecticProtocol};

/// Outcome of one verification check.
#[derive(Clone, Debug)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn pass(name: &str, detail: String) -> CheckResult {
        CheckResult { name: name.into(), passed: true, detail }
    }

    fn fail(name: &str, detail: String) -> CheckResult {
        CheckResult { name: name.into(), passed: false, detail }
    }
}

/// Exact integer distillation signature of a 2-pair protocol on a
/// generic probe: acceptance and output label sums over integer
/// components, with the three non-identity sums sorted so that every
/// completion of the same isotropic subspace maps to the same value.
///
/// The two probe pairs must differ: on i.i.d. inputs the pair-swap
/// symmetry is symplectic and probability-preserving, so swap-related
/// classes (span{X(x)I} vs span{I(x)X}) have exactly identical
/// statistics and only 9 of the 15 classes separate. Distinct generic
/// pairs separate all 15.
fn integer_signature_m2(matrix: &F2Matrix, pa: [u64; 4], pb: [u64; 4]) -> (u64, u64, [u64; 3]) {
    // (v, w) bit pairs per component index I, X, Y, Z.
    const BITS: [(u64, u64); 4] = [(0, 0), (1, 0), (1, 1), (0, 1)];
    let mut buckets = [0u64; 4];
    for l1 in 0..4usize {
        for l2 in 0..4usize {
            let bits = BITS[l1].0 | (BITS[l2].0 << 1) | (BITS[l1].1 << 2) | (BITS[l2].1 << 3);
            let image = matrix.apply(bits);
            if image & 0b0010 != 0 {
                continue; // measured pair carries a bit flip
            }
            let out = match (image & 1, (image >> 2) & 1) {
                (0, 0) => 0,
                (1, 0) => 1,
                (1, 1) => 2,
                (0, 1) => 3,
                _ => unreachable!(),
            };
            buckets[out] += pa[l1] * pb[l2];
        }
    }
    let success: u64 = buckets.iter().sum();
    let mut rest = [buckets[1], buckets[2], buckets[3]];
    rest.sort_unstable();
    (success, buckets[0], rest)
}

const PROBE_A: [u64; 4] = [55, 23, 13, 9];
const PROBE_B: [u64; 4] = [47, 29, 17, 7];

fn check_counting_formulas() -> CheckResult {
    let name = "counting formulas";
    let expected: [(u128, u128); 4] =
        [(6, 1), (720, 15), (1_451_520, 315), (47_377_612_800, 11475)];
    for (m, want) in (1..=4).zip(expected) {
        let got = counting_formulas(m);
        if got != want {
            return CheckResult::fail(name, format!("m={m}: got {got:?}, expected {want:?}"));
        }
    }
    CheckResult::pass(name, "group orders and subgroup indices match for m=1..4".into())
}

fn check_sp4_classes() -> CheckResult {
    let name = "Sp(4,Z2) distillation classes";
    let group = match generate_symplectic_group(2, 1000) {
        Ok(g) => g,
        Err(e) => return CheckResult::fail(name, format!("group generation failed: {e}")),
    };
    if group.len() != 720 {
        return CheckResult::fail(name, format!("group has {} elements, expected 720", group.len()));
    }
    let mut signatures = std::collections::HashMap::new();
    for g in &group {
        *signatures.entry(integer_signature_m2(g, PROBE_A, PROBE_B)).or_insert(0u32) += 1;
    }
    if signatures.len() != 15 {
        return CheckResult::fail(
            name,
            format!("found {} distinct signatures, expected 15", signatures.len()),
        );
    }
    if signatures.values().any(|&count| count != 48) {
        return CheckResult::fail(name, "class sizes differ from |Sp(4)| / 15 = 48".into());
    }
    let transversal = match build_transversal(2) {
        Ok(t) => t,
        Err(e) => return CheckResult::fail(name, format!("transversal build failed: {e}")),
    };
    let realized: std::collections::HashSet<_> = transversal
        .protocols()
        .iter()
        .map(|p| integer_signature_m2(p.matrix(), PROBE_A, PROBE_B))
        .collect();
    if realized.len() != 15 || !realized.iter().all(|s| signatures.contains_key(s)) {
        return CheckResult::fail(
            name,
            format!("transversal realizes {} of 15 brute-force signatures", realized.len()),
        );
    }
    CheckResult::pass(name, "720 elements collapse to 15 classes of 48, all realized".into())
}

fn max_component_residual(
    a: &crate::distill::DistillationOutcome,
    b: &crate::distill::DistillationOutcome,
) -> f64 {
    let mut r: f64 = (a.success_prob() - b.success_prob()).abs();
    if let (Some(sa), Some(sb)) = (a.state(), b.state()) {
        for (x, y) in sa.components().iter().zip(sb.components()) {
            r = r.max((x - y).abs());
        }
    }
    r
}

/// Werner-state repetition-code components printed in closed form for
/// n = 2, 3, 4, evaluated as rational functions of F.
fn repetition_closed_form_werner(n: usize, f: f64) -> (f64, [f64; 4]) {
    match n {
        2 => {
            let den = 8.0 * f * f - 4.0 * f + 5.0;
            let p_i = (10.0 * f * f - 2.0 * f + 1.0) / den;
            let p_x = 2.0 * (f * f - 2.0 * f + 1.0) / den;
            let p_z = 6.0 * f * (1.0 - f) / den;
            (den / 9.0, [p_i, p_x, p_x, p_z])
        }
        3 => {
            let den = 9.0 * (4.0 * f * f - 2.0 * f + 1.0);
            let p_x = 4.0 * (-f * f * f + 3.0 * f * f - 3.0 * f + 1.0) / den;
            let p_z = (-28.0 * f * f * f + 30.0 * f * f - 3.0 * f + 1.0) / den;
            (den / 27.0, [f, p_x, p_x, p_z])
        }
        4 => {
            let f2 = f * f;
            let f3 = f2 * f;
            let f4 = f2 * f2;
            let den = 32.0 * f4 - 32.0 * f3 + 120.0 * f2 - 56.0 * f + 17.0;
            let p_i = (136.0 * f4 - 112.0 * f3 + 60.0 * f2 - 4.0 * f + 1.0) / den;
            let p_x = 8.0 * (f4 - 4.0 * f3 + 6.0 * f2 - 4.0 * f + 1.0) / den;
            let p_z = 12.0 * f * (-10.0 * f3 + 12.0 * f2 - 3.0 * f + 1.0) / den;
            (den / 81.0, [p_i, p_x, p_x, p_z])
        }
        _ => unreachable!(),
    }
}

fn check_closed_form_equivalence() -> CheckResult {
    let name = "closed-form / pushforward equivalence";
    let fidelities = [0.55, 0.7, 0.85, 1.0];
    let mut residual: f64 = 0.0;

    let dejmps_image = dejmps_protocol();
    for &f in &fidelities {
        let w = BellDiagonalState::werner(f).expect("valid fidelity");
        let closed = dejmps(&w, &w, false);
        let pushed = pushforward_statistics(&dejmps_image, &w);
        residual = residual.max(max_component_residual(&closed, &pushed));
    }

    for n in 2..=4usize {
        let protocol: SymplecticProtocol = match repetition_protocol(n) {
            Ok(p) => p,
            Err(e) => return CheckResult::fail(name, format!("repetition protocol: {e}")),
        };
        for &f in &fidelities {
            let w = BellDiagonalState::werner(f).expect("valid fidelity");
            let closed = repetition_ad(n, &w).expect("n >= 1");
            let pushed = pushforward_statistics(&protocol, &w);
            residual = residual.max(max_component_residual(&closed, &pushed));

            // Printed Werner closed forms.
            let (p_suc, comps) = repetition_closed_form_werner(n, f);
            residual = residual.max((closed.success_prob() - p_suc).abs());
            for (a, b) in closed.state().expect("non-degenerate").components().iter().zip(comps) {
                residual = residual.max((a - b).abs());
            }
        }
    }

    if residual <= 1e-12 {
        CheckResult::pass(name, format!("max residual {residual:.3e}"))
    } else {
        CheckResult::fail(name, format!("max residual {residual:.3e} exceeds 1e-12"))
    }
}

fn check_critical_qber() -> CheckResult {
    let name = "critical QBER bounds";
    let tol = 1e-6;
    let targets: [(SecurityFamily, f64, f64); 4] = [
        (SecurityFamily::SixStateAd, 0.2764, 1e-3),
        (SecurityFamily::Bb84Ad, 0.2, 1e-4),
        (SecurityFamily::Bb84Permuted, 0.25, 1e-4),
        (SecurityFamily::SixStateEdAd, 0.30, 5e-3),
    ];
    let mut detail = String::new();
    for (family, target, margin) in targets {
        match critical_qber(family, tol) {
            Ok(result) => {
                if (result.q - target).abs() > margin {
                    return CheckResult::fail(
                        name,
                        format!("{}: Q*={:.6} outside {target}+-{margin}", family.name(), result.q),
                    );
                }
                if !detail.is_empty() {
                    detail.push_str(", ");
                }
                detail.push_str(&format!("{}={:.4}", family.name(), result.q));
            }
            Err(e) => return CheckResult::fail(name, format!("{}: {e}", family.name())),
        }
    }
    CheckResult::pass(name, detail)
}

/// Runs the full oracle suite.
pub fn run_standard_checks() -> Vec<CheckResult> {
    vec![
        check_counting_formulas(),
        check_sp4_classes(),
        check_closed_form_equivalence(),
        check_critical_qber(),
    ]
}

/// Validates one transversal cache file (any m).
pub fn check_cache_file(path: &Path) -> CheckResult {
    let name = format!("cache {}", path.display());
    let Some(m) = cache_m_hint(path) else {
        return CheckResult::fail(&name, "cannot infer m from file header".into());
    };
    match read_transversal(path, m) {
        Ok(t) => CheckResult::pass(
            &name,
            format!("m={m}, {} protocols, checksum {:#010x}", t.len(), t.checksum()),
        ),
        Err(e) => CheckResult::fail(&name, e.to_string()),
    }
}

fn cache_m_hint(path: &Path) -> Option<usize> {
    let bytes = std::fs::read(path).ok()?;
    if bytes.len() < 7 || &bytes[0..4] != b"BLCT" {
        return None;
    }
    Some(u16::from_le_bytes([bytes[5], bytes[6]]) as usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_checks_pass() {
        for check in run_standard_checks() {
            assert!(check.passed, "{}: {}", check.name, check.detail);
        }
    }

    #[test]
    fn cache_check_detects_tampering() {
        let t = build_transversal(2).unwrap();
        let dir = std::env::temp_dir().join(format!("blct-verify-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("transversal_m2.blct");
        crate::protocol::write_transversal(&path, &t).unwrap();
        assert!(check_cache_file(&path).passed);

        let mut bytes = std::fs::read(&path).unwrap();
        let mid = bytes.len() / 2;
        bytes[mid] ^= 0x10;
        std::fs::write(&path, &bytes).unwrap();
        let result = check_cache_file(&path);
        assert!(!result.passed);
        assert!(result.detail.contains("corrupt cache"));
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
