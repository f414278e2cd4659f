//! Enumeration of m-1 bi-local Clifford distillation protocols: one
//! symplectic representative per distillation-equivalence class, indexed
//! by the (m-1)-dimensional isotropic subspaces of GF(2)^{2m}, plus
//! binary cache persistence.
//!
//! The class invariant is the row space of matrix rows `2..m`: those
//! rows fix the acceptance set of measurement syndromes, and rows `1`
//! and `m+1` fix the output label only up to a relabelling of the three
//! non-identity Bell components. Correctness of the representative-per-
//! subspace construction is enforced by the Sp(4, Z_2) brute-force
//! oracle and by the exact subgroup-index counts.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::f2::{reduce_against, symplectic_product_bits, F2Matrix};

/// Largest supported number of input pairs per distillation stage.
pub const MAX_PAIRS: usize = 4;

const CACHE_MAGIC: &[u8; 4] = b"BLCT";
const CACHE_VERSION: u8 = 1;

/// One m-1 bi-local Clifford protocol, represented by its 2m x 2m
/// symplectic matrix and a stable index within its transversal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymplecticProtocol {
    id: u32,
    m: usize,
    matrix: F2Matrix,
}

impl SymplecticProtocol {
    /// Wraps a symplectic matrix; fails if the matrix is not symplectic
    /// or not of shape 2m x 2m for m in `1..=MAX_PAIRS`.
    pub fn new(id: u32, matrix: F2Matrix) -> Result<SymplecticProtocol> {
        let n = matrix.nrows();
        if !n.is_multiple_of(2) || matrix.ncols() != n {
            return Err(Error::Dimension(format!(
                "protocol matrix must be 2m x 2m, got {}x{}",
                n,
                matrix.ncols()
            )));
        }
        let m = n / 2;
        if !(1..=MAX_PAIRS).contains(&m) {
            return Err(Error::UnsupportedSize(m, "1..=4"));
        }
        if !matrix.is_symplectic()? {
            return Err(Error::InvalidSubspace(
                "protocol matrix is not symplectic".into(),
            ));
        }
        Ok(SymplecticProtocol { id, m, matrix })
    }

    pub fn id(&self) -> u32 {
        self.id
    }

    /// Number of input pairs consumed (one pair is kept).
    pub fn pairs(&self) -> usize {
        self.m
    }

    pub fn matrix(&self) -> &F2Matrix {
        &self.matrix
    }
}

/// One protocol per distillation-equivalence class, in a deterministic
/// order (lexicographic on the canonical subspace bases).
#[derive(Clone, Debug)]
pub struct Transversal {
    m: usize,
    protocols: Vec<SymplecticProtocol>,
    checksum: u32,
}

impl Transversal {
    pub fn pairs(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.protocols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.protocols.is_empty()
    }

    pub fn protocols(&self) -> &[SymplecticProtocol] {
        &self.protocols
    }

    pub fn get(&self, id: u32) -> Option<&SymplecticProtocol> {
        self.protocols.get(id as usize)
    }

    /// CRC-32 of the serialized protocol records.
    pub fn checksum(&self) -> u32 {
        self.checksum
    }
}

/// Exact order of Sp(2m, Z_2) and the number of distillation-equivalence
/// classes (the subgroup index): `2^{m^2} prod_{j=1}^m (4^j - 1)` and
/// `(1/3)(2^m - 1) prod_{j=1}^m (2^j + 1)`.
pub fn counting_formulas(m: usize) -> (u128, u128) {
    assert!(m >= 1);
    let mut order: u128 = 1 << (m * m);
    let mut index: u128 = (1 << m) - 1;
    for j in 1..=m {
        order *= (1u128 << (2 * j)) - 1;
        index *= (1u128 << j) + 1;
    }
    (order, index / 3)
}

/// Enumerates all (m-1)-dimensional isotropic subspaces of GF(2)^{2m},
/// each as its canonical reduced-row-echelon basis, sorted
/// lexicographically. For m = 1 the single empty subspace is returned.
pub fn enumerate_isotropic_subspaces(m: usize) -> Result<Vec<Vec<u64>>> {
    if !(1..=MAX_PAIRS).contains(&m) {
        return Err(Error::UnsupportedSize(m, "1..=4"));
    }
    let dim = 2 * m;
    let total = 1u64 << dim;

    // Grow subspaces one dimension at a time, deduplicating on the
    // canonical RREF basis.
    let mut current: Vec<Vec<u64>> = vec![vec![]];
    for _ in 0..m - 1 {
        let mut seen: HashSet<Vec<u64>> = HashSet::new();
        for basis in &current {
            'candidate: for x in 1..total {
                for &b in basis {
                    if symplectic_product_bits(b, x, m) {
                        continue 'candidate;
                    }
                }
                if reduce_against(basis, x) == 0 {
                    continue; // already in the span
                }
                let mut rows = basis.clone();
                rows.push(x);
                let rref = F2Matrix::from_rows(rows, dim).rref();
                let canonical: Vec<u64> =
                    (0..rref.nrows()).map(|r| rref.row(r)).filter(|&r| r != 0).collect();
                seen.insert(canonical);
            }
        }
        let mut next: Vec<Vec<u64>> = seen.into_iter().collect();
        next.sort();
        current = next;
    }
    Ok(current)
}

/// Solves the linear system `<c_i, x> = b_i` in the symplectic form,
/// returning a deterministic particular solution (free variables zero).
fn solve_symplectic_system(m: usize, constraints: &[(u64, bool)]) -> Option<u64> {
    let dim = 2 * m;
    let low = (1u64 << m) - 1;
    // <c, x> = (Omega c) . x, and Omega swaps the v / w halves.
    let mut rows: Vec<(u64, bool)> = constraints
        .iter()
        .map(|&(c, b)| ((((c >> m) & low) | ((c & low) << m)), b))
        .collect();

    let mut pivots: Vec<(usize, usize)> = Vec::new(); // (row, col)
    let mut rank = 0;
    for col in 0..dim {
        let Some(r) = (rank..rows.len()).find(|&r| (rows[r].0 >> col) & 1 == 1) else {
            continue;
        };
        rows.swap(rank, r);
        for other in 0..rows.len() {
            if other != rank && (rows[other].0 >> col) & 1 == 1 {
                rows[other].0 ^= rows[rank].0;
                rows[other].1 ^= rows[rank].1;
            }
        }
        pivots.push((rank, col));
        rank += 1;
    }
    // Inconsistent system: a zero row with RHS 1.
    if rows[rank..].iter().any(|&(r, b)| r == 0 && b) {
        return None;
    }
    let mut x = 0u64;
    for &(row, col) in &pivots {
        if rows[row].1 {
            x |= 1 << col;
        }
    }
    Some(x)
}

/// Completes an (m-1)-dimensional isotropic basis to a full symplectic
/// matrix whose rows `2..m` are the given basis: row 1 and row m+1 form
/// a hyperbolic pair orthogonal to the subspace, and rows m+2..2m are
/// the symplectic duals of the basis rows.
pub fn complete_to_protocol(basis: &[u64], m: usize) -> Result<F2Matrix> {
    if !(1..=MAX_PAIRS).contains(&m) {
        return Err(Error::UnsupportedSize(m, "1..=4"));
    }
    if basis.len() != m - 1 {
        return Err(Error::InvalidSubspace(format!(
            "expected {} basis vectors for m={}, got {}",
            m - 1,
            m,
            basis.len()
        )));
    }
    let dim = 2 * m;
    for (i, &a) in basis.iter().enumerate() {
        for &b in &basis[i + 1..] {
            if symplectic_product_bits(a, b, m) {
                return Err(Error::InvalidSubspace(
                    "basis vectors are not pairwise symplectically orthogonal".into(),
                ));
            }
        }
    }
    let span = F2Matrix::from_rows(basis.to_vec(), dim).rref();
    let span_rows: Vec<u64> = (0..span.nrows()).map(|r| span.row(r)).filter(|&r| r != 0).collect();
    if span_rows.len() != basis.len() {
        return Err(Error::InvalidSubspace("basis vectors are dependent".into()));
    }

    // Row 1: smallest RREF-kernel vector orthogonal to the subspace and
    // outside it. The kernel of the orthogonality constraints is found
    // by solving the homogeneous system for each free direction.
    let ortho: Vec<(u64, bool)> = basis.iter().map(|&b| (b, false)).collect();
    let r1 = {
        let mut found = None;
        for x in 1..(1u64 << dim) {
            if basis.iter().all(|&b| !symplectic_product_bits(b, x, m))
                && reduce_against(&span_rows, x) != 0
            {
                found = Some(x);
                break;
            }
        }
        found.expect("orthogonal complement strictly contains the subspace")
    };

    // Row m+1: the hyperbolic partner of row 1.
    let mut constraints = ortho.clone();
    constraints.push((r1, true));
    let r_dual = solve_symplectic_system(m, &constraints)
        .expect("hyperbolic partner always exists for an isotropic basis");

    // Rows m+2..2m: duals of the basis rows, orthogonal to everything
    // already placed and to each other.
    let mut duals: Vec<u64> = Vec::with_capacity(m - 1);
    for j in 0..basis.len() {
        let mut cons: Vec<(u64, bool)> = Vec::new();
        for (k, &b) in basis.iter().enumerate() {
            cons.push((b, k == j));
        }
        cons.push((r1, false));
        cons.push((r_dual, false));
        for &d in &duals {
            cons.push((d, false));
        }
        let dj = solve_symplectic_system(m, &cons)
            .expect("symplectic basis extension always solvable");
        duals.push(dj);
    }

    let mut rows = Vec::with_capacity(dim);
    rows.push(r1);
    rows.extend_from_slice(basis);
    rows.push(r_dual);
    rows.extend_from_slice(&duals);
    let matrix = F2Matrix::from_rows(rows, dim);
    debug_assert!(matrix.is_symplectic().unwrap());
    Ok(matrix)
}

/// Builds the full transversal for `m` pairs: one protocol per isotropic
/// subspace, in deterministic order, with length equal to the subgroup
/// index formula.
pub fn build_transversal(m: usize) -> Result<Transversal> {
    let subspaces = enumerate_isotropic_subspaces(m)?;
    let expected = counting_formulas(m).1;
    if subspaces.len() as u128 != expected {
        return Err(Error::CountMismatch(format!(
            "enumerated {} isotropic subspaces for m={}, index formula gives {}",
            subspaces.len(),
            m,
            expected
        )));
    }
    let mut protocols = Vec::with_capacity(subspaces.len());
    for (id, basis) in subspaces.iter().enumerate() {
        let matrix = complete_to_protocol(basis, m)?;
        protocols.push(SymplecticProtocol::new(id as u32, matrix)?);
    }
    let mut t = Transversal { m, protocols, checksum: 0 };
    t.checksum = crc32fast::hash(&encode_records(&t));
    Ok(t)
}

fn row_bytes(m: usize) -> usize {
    (2 * m).div_ceil(8)
}

fn encode_records(t: &Transversal) -> Vec<u8> {
    let rb = row_bytes(t.m);
    let mut out = Vec::with_capacity(t.len() * 2 * t.m * rb);
    for p in &t.protocols {
        for r in 0..2 * t.m {
            out.extend_from_slice(&p.matrix.row(r).to_le_bytes()[..rb]);
        }
    }
    out
}

/// Serializes a transversal in the cache format: magic "BLCT", version
/// byte, little-endian u16 m and u64 count, the row-packed records, and
/// a trailing CRC-32 of all preceding bytes.
pub fn encode_transversal(t: &Transversal) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(CACHE_MAGIC);
    out.push(CACHE_VERSION);
    out.extend_from_slice(&(t.m as u16).to_le_bytes());
    out.extend_from_slice(&(t.len() as u64).to_le_bytes());
    out.extend_from_slice(&encode_records(t));
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

/// Parses and validates a serialized transversal: magic, version, CRC,
/// the count formula, and the symplectic property of every record.
pub fn decode_transversal(bytes: &[u8], expected_m: usize) -> Result<Transversal> {
    if bytes.len() < 19 {
        return Err(Error::CorruptCache("file truncated before header".into()));
    }
    if &bytes[0..4] != CACHE_MAGIC {
        return Err(Error::CorruptCache("bad magic".into()));
    }
    if bytes[4] != CACHE_VERSION {
        return Err(Error::CorruptCache(format!("unsupported version {}", bytes[4])));
    }
    let m = u16::from_le_bytes([bytes[5], bytes[6]]) as usize;
    let count = u64::from_le_bytes(bytes[7..15].try_into().unwrap()) as usize;

    let body_len = bytes.len() - 4;
    let crc_stored = u32::from_le_bytes(bytes[body_len..].try_into().unwrap());
    let crc_actual = crc32fast::hash(&bytes[..body_len]);
    if crc_stored != crc_actual {
        return Err(Error::CorruptCache(format!(
            "checksum mismatch: stored {crc_stored:#010x}, computed {crc_actual:#010x}"
        )));
    }

    if m != expected_m {
        return Err(Error::CountMismatch(format!(
            "cache holds m={m}, requested m={expected_m}"
        )));
    }
    if !(1..=MAX_PAIRS).contains(&m) {
        return Err(Error::CorruptCache(format!("m={m} out of range")));
    }
    if count as u128 != counting_formulas(m).1 {
        return Err(Error::CountMismatch(format!(
            "cache holds {count} protocols for m={m}, index formula gives {}",
            counting_formulas(m).1
        )));
    }
    let rb = row_bytes(m);
    let record_len = 2 * m * rb;
    if body_len != 15 + count * record_len {
        return Err(Error::CorruptCache(format!(
            "expected {} record bytes, found {}",
            count * record_len,
            body_len - 15
        )));
    }

    let mut protocols = Vec::with_capacity(count);
    let mut offset = 15;
    for id in 0..count {
        let mut rows = Vec::with_capacity(2 * m);
        for _ in 0..2 * m {
            let mut word = [0u8; 8];
            word[..rb].copy_from_slice(&bytes[offset..offset + rb]);
            rows.push(u64::from_le_bytes(word));
            offset += rb;
        }
        let matrix = F2Matrix::from_rows(rows, 2 * m);
        let protocol = SymplecticProtocol::new(id as u32, matrix).map_err(|e| {
            Error::CorruptCache(format!("record {id} is not a valid protocol: {e}"))
        })?;
        protocols.push(protocol);
    }
    let checksum = crc32fast::hash(&bytes[15..body_len]);
    Ok(Transversal { m, protocols, checksum })
}

/// Writes a transversal cache file.
pub fn write_transversal(path: &Path, t: &Transversal) -> Result<()> {
    fs::write(path, encode_transversal(t))?;
    Ok(())
}

/// Reads and validates a transversal cache file.
pub fn read_transversal(path: &Path, expected_m: usize) -> Result<Transversal> {
    let bytes = fs::read(path)?;
    decode_transversal(&bytes, expected_m)
}
