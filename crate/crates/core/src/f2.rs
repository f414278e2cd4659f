//! Bit-exact linear algebra over GF(2), the symplectic form, and the
//! binary encoding of Pauli strings and Bell-state labels.
//!
//! A length-2m vector is stored in a single `u64` with the X-part `v` in
//! bits `0..m` and the Z-part `w` in bits `m..2m`. Matrices store one
//! `u64` per row, least-significant bit = column 0, rows padded to a
//! whole machine word. The symplectic form is `<a,b> = v_a.w_b + w_a.v_b`
//! (mod 2), i.e. `Omega = [[0, I], [I, 0]]` in the `[v; w]` layout.

use std::fmt;

use crate::error::{Error, Result};

/// Maximum number of columns a packed matrix row can hold.
pub const MAX_COLS: usize = 64;

/// Labels of the four Bell states, in bijection with single-qubit Pauli
/// operators through the (v, w) bit pairs I=(0,0), X=(1,0), Y=(1,1),
/// Z=(0,1).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BellLabel {
    /// |Phi+> = I |Phi+>
    PhiPlus,
    /// |Psi+> = X |Phi+>
    PsiPlus,
    /// |Psi-> ~ Y |Phi+>
    PsiMinus,
    /// |Phi-> = Z |Phi+>
    PhiMinus,
}

impl BellLabel {
    /// All labels in component order (I, X, Y, Z).
    pub const ALL: [BellLabel; 4] = [
        BellLabel::PhiPlus,
        BellLabel::PsiPlus,
        BellLabel::PsiMinus,
        BellLabel::PhiMinus,
    ];

    /// Component index in the (p_I, p_X, p_Y, p_Z) ordering.
    pub fn index(self) -> usize {
        match self {
            BellLabel::PhiPlus => 0,
            BellLabel::PsiPlus => 1,
            BellLabel::PsiMinus => 2,
            BellLabel::PhiMinus => 3,
        }
    }

    pub fn from_index(idx: usize) -> BellLabel {
        Self::ALL[idx]
    }

    /// The (v, w) bit pair of the corresponding Pauli operator.
    pub fn bits(self) -> (bool, bool) {
        match self {
            BellLabel::PhiPlus => (false, false),
            BellLabel::PsiPlus => (true, false),
            BellLabel::PsiMinus => (true, true),
            BellLabel::PhiMinus => (false, true),
        }
    }

    pub fn from_bits(v: bool, w: bool) -> BellLabel {
        match (v, w) {
            (false, false) => BellLabel::PhiPlus,
            (true, false) => BellLabel::PsiPlus,
            (true, true) => BellLabel::PsiMinus,
            (false, true) => BellLabel::PhiMinus,
        }
    }

    /// Single-qubit Pauli letter of this label.
    pub fn pauli_char(self) -> char {
        match self {
            BellLabel::PhiPlus => 'I',
            BellLabel::PsiPlus => 'X',
            BellLabel::PsiMinus => 'Y',
            BellLabel::PhiMinus => 'Z',
        }
    }
}

/// A length-2m binary vector `a = [v; w]` labelling a Pauli string, or
/// equivalently a tensor product of Bell states (phases discarded).
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct PauliVector {
    bits: u64,
    m: usize,
}

impl PauliVector {
    /// The all-identity string on `m` pairs.
    pub fn zero(m: usize) -> PauliVector {
        assert!(m >= 1 && 2 * m <= MAX_COLS, "m out of range");
        PauliVector { bits: 0, m }
    }

    /// Builds a vector from raw packed bits (`v` in bits `0..m`, `w` in
    /// bits `m..2m`).
    pub fn from_bits(bits: u64, m: usize) -> PauliVector {
        assert!(m >= 1 && 2 * m <= MAX_COLS, "m out of range");
        let mask = mask(2 * m);
        PauliVector { bits: bits & mask, m }
    }

    /// Builds a vector from per-pair Bell labels.
    pub fn from_labels(labels: &[BellLabel]) -> PauliVector {
        let m = labels.len();
        let mut p = PauliVector::zero(m);
        for (i, l) in labels.iter().enumerate() {
            p.set_label(i, *l);
        }
        p
    }

    /// Number of pairs `m`; the vector length is `2m`.
    pub fn pairs(&self) -> usize {
        self.m
    }

    pub fn raw_bits(&self) -> u64 {
        self.bits
    }

    pub fn v_bit(&self, pair: usize) -> bool {
        debug_assert!(pair < self.m);
        (self.bits >> pair) & 1 == 1
    }

    pub fn w_bit(&self, pair: usize) -> bool {
        debug_assert!(pair < self.m);
        (self.bits >> (self.m + pair)) & 1 == 1
    }

    /// The Bell/Pauli label of pair `pair`.
    pub fn label(&self, pair: usize) -> BellLabel {
        BellLabel::from_bits(self.v_bit(pair), self.w_bit(pair))
    }

    pub fn set_label(&mut self, pair: usize, label: BellLabel) {
        assert!(pair < self.m);
        let (v, w) = label.bits();
        self.bits &= !((1 << pair) | (1 << (self.m + pair)));
        self.bits |= (v as u64) << pair;
        self.bits |= (w as u64) << (self.m + pair);
    }

    /// Symplectic product `<a,b> = v_a.w_b + w_a.v_b` over GF(2).
    pub fn symplectic_product(&self, other: &PauliVector) -> Result<bool> {
        if self.m != other.m {
            return Err(Error::Dimension(format!(
                "symplectic product of vectors on {} and {} pairs",
                self.m, other.m
            )));
        }
        Ok(symplectic_product_bits(self.bits, other.bits, self.m))
    }
}

impl fmt::Debug for PauliVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for pair in 0..self.m {
            write!(f, "{}", self.label(pair).pauli_char())?;
        }
        Ok(())
    }
}

fn mask(bits: usize) -> u64 {
    if bits >= 64 {
        u64::MAX
    } else {
        (1u64 << bits) - 1
    }
}

/// Symplectic product of two packed `[v; w]` vectors on `m` pairs.
pub fn symplectic_product_bits(a: u64, b: u64, m: usize) -> bool {
    let low = mask(m);
    let (va, wa) = (a & low, (a >> m) & low);
    let (vb, wb) = (b & low, (b >> m) & low);
    (((va & wb).count_ones() + (wa & vb).count_ones()) & 1) == 1
}

/// A dense matrix over GF(2), bit-packed one `u64` word per row.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct F2Matrix {
    cols: usize,
    rows: Vec<u64>,
}

impl F2Matrix {
    pub fn zeros(rows: usize, cols: usize) -> F2Matrix {
        assert!(cols <= MAX_COLS, "at most {MAX_COLS} columns supported");
        F2Matrix { cols, rows: vec![0; rows] }
    }

    pub fn identity(n: usize) -> F2Matrix {
        let mut m = F2Matrix::zeros(n, n);
        for i in 0..n {
            m.rows[i] = 1 << i;
        }
        m
    }

    /// Builds a matrix from packed rows; bits at or above `cols` are
    /// masked off.
    pub fn from_rows(rows: Vec<u64>, cols: usize) -> F2Matrix {
        assert!(cols <= MAX_COLS);
        let mk = mask(cols);
        F2Matrix { cols, rows: rows.into_iter().map(|r| r & mk).collect() }
    }

    /// The symplectic form matrix `[[0, I_m], [I_m, 0]]` on `2m` columns.
    pub fn omega(m: usize) -> F2Matrix {
        let mut o = F2Matrix::zeros(2 * m, 2 * m);
        for i in 0..m {
            o.rows[i] = 1 << (m + i);
            o.rows[m + i] = 1 << i;
        }
        o
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> u64 {
        self.rows[r]
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        debug_assert!(c < self.cols);
        (self.rows[r] >> c) & 1 == 1
    }

    pub fn set(&mut self, r: usize, c: usize, bit: bool) {
        assert!(c < self.cols);
        if bit {
            self.rows[r] |= 1 << c;
        } else {
            self.rows[r] &= !(1 << c);
        }
    }

    /// Matrix-vector product over GF(2) on a packed vector.
    pub fn apply(&self, v: u64) -> u64 {
        let mut out = 0u64;
        for (i, row) in self.rows.iter().enumerate() {
            out |= (((row & v).count_ones() as u64) & 1) << i;
        }
        out
    }

    pub fn apply_pauli(&self, p: &PauliVector) -> Result<PauliVector> {
        if self.nrows() != 2 * p.pairs() || self.cols != 2 * p.pairs() {
            return Err(Error::Dimension(format!(
                "applying {}x{} matrix to a length-{} vector",
                self.nrows(),
                self.cols,
                2 * p.pairs()
            )));
        }
        Ok(PauliVector::from_bits(self.apply(p.raw_bits()), p.pairs()))
    }

    /// Matrix product over GF(2).
    pub fn mul(&self, other: &F2Matrix) -> Result<F2Matrix> {
        if self.cols != other.nrows() {
            return Err(Error::Dimension(format!(
                "multiplying {}x{} by {}x{}",
                self.nrows(),
                self.cols,
                other.nrows(),
                other.cols
            )));
        }
        let mut out = F2Matrix::zeros(self.nrows(), other.cols);
        for (i, row) in self.rows.iter().enumerate() {
            let mut acc = 0u64;
            let mut bits = *row;
            while bits != 0 {
                let j = bits.trailing_zeros() as usize;
                acc ^= other.rows[j];
                bits &= bits - 1;
            }
            out.rows[i] = acc;
        }
        Ok(out)
    }

    pub fn transpose(&self) -> F2Matrix {
        let mut out = F2Matrix::zeros(self.cols, self.nrows());
        for r in 0..self.nrows() {
            for c in 0..self.cols {
                if self.get(r, c) {
                    out.rows[c] |= 1 << r;
                }
            }
        }
        out
    }

    /// Reduced row-echelon form; pivot columns leftmost, zero rows at
    /// the bottom.
    pub fn rref(&self) -> F2Matrix {
        let mut rows = self.rows.clone();
        rref_in_place(&mut rows, self.cols);
        F2Matrix { cols: self.cols, rows }
    }

    pub fn rank(&self) -> usize {
        let mut rows = self.rows.clone();
        rref_in_place(&mut rows, self.cols);
        rows.iter().filter(|&&r| r != 0).count()
    }

    /// Inverse over GF(2) via Gauss-Jordan elimination.
    pub fn inverse(&self) -> Result<F2Matrix> {
        let n = self.nrows();
        if self.cols != n {
            return Err(Error::Dimension(format!(
                "inverting non-square {}x{} matrix",
                n, self.cols
            )));
        }
        let mut a = self.rows.clone();
        let mut inv: Vec<u64> = (0..n).map(|i| 1u64 << i).collect();
        for col in 0..n {
            let pivot = (col..n).find(|&r| (a[r] >> col) & 1 == 1).ok_or(Error::Singular)?;
            a.swap(col, pivot);
            inv.swap(col, pivot);
            for r in 0..n {
                if r != col && (a[r] >> col) & 1 == 1 {
                    a[r] ^= a[col];
                    inv[r] ^= inv[col];
                }
            }
        }
        Ok(F2Matrix { cols: n, rows: inv })
    }

    /// Whether `M Omega M^T = Omega` holds for the `[v; w]` layout form.
    pub fn is_symplectic(&self) -> Result<bool> {
        let n = self.nrows();
        if self.cols != n || !n.is_multiple_of(2) {
            return Err(Error::Dimension(format!(
                "symplectic test on {}x{} matrix",
                n, self.cols
            )));
        }
        let m = n / 2;
        // (M Omega M^T)_{ij} = <r_i, r_j>; compare against Omega entrywise.
        for i in 0..n {
            for j in i..n {
                let want = (j == i + m) || (i == j + m);
                if symplectic_product_bits(self.rows[i], self.rows[j], m) != want {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Packs the matrix into a single integer key; requires
    /// `rows * cols <= 128`. Row 0 occupies the least-significant bits.
    pub fn pack_key(&self) -> u128 {
        assert!(self.nrows() * self.cols <= 128, "matrix too large to pack");
        let mut key = 0u128;
        for (i, row) in self.rows.iter().enumerate() {
            key |= (*row as u128) << (i * self.cols);
        }
        key
    }
}

impl fmt::Debug for F2Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "F2Matrix {}x{}", self.nrows(), self.cols)?;
        for row in &self.rows {
            for c in 0..self.cols {
                write!(f, "{}", (row >> c) & 1)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

fn rref_in_place(rows: &mut [u64], cols: usize) {
    let mut pivot_row = 0;
    for col in 0..cols {
        if pivot_row >= rows.len() {
            break;
        }
        let Some(r) = (pivot_row..rows.len()).find(|&r| (rows[r] >> col) & 1 == 1) else {
            continue;
        };
        rows.swap(pivot_row, r);
        for other in 0..rows.len() {
            if other != pivot_row && (rows[other] >> col) & 1 == 1 {
                rows[other] ^= rows[pivot_row];
            }
        }
        pivot_row += 1;
    }
}

/// Reduces `v` against a set of RREF rows; returns the residual.
pub(crate) fn reduce_against(rref_rows: &[u64], mut v: u64) -> u64 {
    for &row in rref_rows {
        if row == 0 {
            continue;
        }
        let pivot = row.trailing_zeros();
        if (v >> pivot) & 1 == 1 {
            v ^= row;
        }
    }
    v
}

/// Symplectic image of a Hadamard on pair `i`: swaps `v_i` and `w_i`.
pub fn hadamard_image(m: usize, i: usize) -> F2Matrix {
    assert!(i < m);
    let mut g = F2Matrix::identity(2 * m);
    g.rows.swap(i, m + i);
    g
}

/// Symplectic image of a phase gate on pair `i`: `w_i += v_i`.
pub fn phase_image(m: usize, i: usize) -> F2Matrix {
    assert!(i < m);
    let mut g = F2Matrix::identity(2 * m);
    g.rows[m + i] |= 1 << i;
    g
}

/// Symplectic image of CNOT with control `c` and target `t`:
/// `v_t += v_c`, `w_c += w_t`.
pub fn cnot_image(m: usize, c: usize, t: usize) -> F2Matrix {
    assert!(c < m && t < m && c != t);
    let mut g = F2Matrix::identity(2 * m);
    g.rows[t] |= 1 << c;
    g.rows[m + c] |= 1 << (m + t);
    g
}

/// Breadth-first closure of Sp(2m, Z_2) from the Hadamard, phase and
/// CNOT generator images. Returns the full group sorted by packed key.
///
/// Intended as a brute-force oracle for small m; the group has
/// `2^{m^2} prod_j (4^j - 1)` elements and `limit` caps the closure.
pub fn generate_symplectic_group(m: usize, limit: usize) -> Result<Vec<F2Matrix>> {
    if !(1..=3).contains(&m) {
        return Err(Error::UnsupportedSize(m, "1..=3"));
    }
    let mut generators = Vec::new();
    for i in 0..m {
        generators.push(hadamard_image(m, i));
        generators.push(phase_image(m, i));
    }
    for c in 0..m {
        for t in 0..m {
            if c != t {
                generators.push(cnot_image(m, c, t));
            }
        }
    }

    let identity = F2Matrix::identity(2 * m);
    let mut seen = std::collections::HashSet::new();
    seen.insert(identity.pack_key());
    let mut frontier = vec![identity];
    let mut elements: Vec<F2Matrix> = frontier.clone();
    while let Some(current) = frontier.pop() {
        for g in &generators {
            let next = g.mul(&current).expect("generator dimensions match");
            if seen.insert(next.pack_key()) {
                if elements.len() >= limit {
                    return Err(Error::ResourceLimit(format!(
                        "symplectic group closure for m={m} exceeded limit {limit}"
                    )));
                }
                elements.push(next.clone());
                frontier.push(next);
            }
        }
    }
    elements.sort_by_key(|e| e.pack_key());
    Ok(elements)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pv(labels: &[BellLabel]) -> PauliVector {
        PauliVector::from_labels(labels)
    }

    use BellLabel::{PhiMinus as Z, PhiPlus as I, PsiMinus as Y, PsiPlus as X};

    #[test]
    fn symplectic_product_examples() {
        // X(x)I vs Z(x)I anticommute.
        let a = pv(&[X, I]);
        let b = pv(&[Z, I]);
        assert!(a.symplectic_product(&b).unwrap());
        // Disjoint supports commute.
        let c = pv(&[I, Z]);
        assert!(!a.symplectic_product(&c).unwrap());
        // <a,a> = 0 in characteristic 2.
        let y = pv(&[Y, Y]);
        assert!(!y.symplectic_product(&y).unwrap());
    }

    #[test]
    fn symplectic_product_symmetric() {
        for a in 0..16u64 {
            for b in 0..16u64 {
                let pa = PauliVector::from_bits(a, 2);
                let pb = PauliVector::from_bits(b, 2);
                assert_eq!(
                    pa.symplectic_product(&pb).unwrap(),
                    pb.symplectic_product(&pa).unwrap()
                );
                assert!(!pa.symplectic_product(&pa).unwrap());
            }
        }
    }

    #[test]
    fn symplectic_product_length_mismatch() {
        let a = pv(&[X]);
        let b = pv(&[X, I]);
        assert!(matches!(a.symplectic_product(&b), Err(Error::Dimension(_))));
    }

    #[test]
    fn label_round_trip() {
        for m in 1..=4usize {
            for raw in 0..(1u64 << (2 * m)) {
                let p = PauliVector::from_bits(raw, m);
                let labels: Vec<BellLabel> = (0..m).map(|i| p.label(i)).collect();
                assert_eq!(PauliVector::from_labels(&labels), p);
            }
        }
        for l in BellLabel::ALL {
            assert_eq!(BellLabel::from_index(l.index()), l);
            let (v, w) = l.bits();
            assert_eq!(BellLabel::from_bits(v, w), l);
        }
    }

    #[test]
    fn identity_is_symplectic() {
        for m in 1..=4 {
            assert!(F2Matrix::identity(2 * m).is_symplectic().unwrap());
        }
    }

    #[test]
    fn block_swap_is_symplectic() {
        // Omega itself swaps the v and w blocks (bilateral Hadamard image).
        assert!(F2Matrix::omega(2).is_symplectic().unwrap());
        assert!(hadamard_image(2, 0).is_symplectic().unwrap());
    }

    #[test]
    fn zeroed_row_is_not_symplectic() {
        let mut m = F2Matrix::identity(4);
        m.rows[2] = 0;
        assert!(!m.is_symplectic().unwrap());
    }

    #[test]
    fn is_symplectic_rejects_odd_dimensions() {
        assert!(matches!(
            F2Matrix::identity(3).is_symplectic(),
            Err(Error::Dimension(_))
        ));
        assert!(matches!(
            F2Matrix::zeros(4, 2).is_symplectic(),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn mul_identity_and_rank() {
        let omega = F2Matrix::omega(2);
        let id = F2Matrix::identity(4);
        assert_eq!(omega.mul(&id).unwrap(), omega);
        assert_eq!(omega.rank(), 4);
    }

    #[test]
    fn cnot_image_is_involution() {
        let cnot = cnot_image(2, 0, 1);
        let square = cnot.mul(&cnot).unwrap();
        assert_eq!(square, F2Matrix::identity(4));
        assert_eq!(cnot.inverse().unwrap(), cnot);
    }

    #[test]
    fn inverse_round_trip() {
        let m = F2Matrix::from_rows(vec![0b0101, 0b1111, 0b1100, 0b1000], 4);
        let inv = m.inverse().unwrap();
        assert_eq!(m.mul(&inv).unwrap(), F2Matrix::identity(4));
        assert_eq!(inv.mul(&m).unwrap(), F2Matrix::identity(4));
    }

    #[test]
    fn singular_matrix_inverse_fails() {
        let m = F2Matrix::from_rows(vec![0b11, 0b11], 2);
        assert!(matches!(m.inverse(), Err(Error::Singular)));
    }

    #[test]
    fn rref_is_canonical() {
        let m = F2Matrix::from_rows(vec![0b110, 0b011, 0b101], 3);
        let r = m.rref();
        // Row space has rank 2; third row reduces to zero.
        assert_eq!(m.rank(), 2);
        assert_eq!(r.rows[2], 0);
        // Pivots are leftmost and isolated.
        assert_eq!(r.rows[0].trailing_zeros(), 0);
        assert_eq!(r.rows[1].trailing_zeros(), 1);
    }

    #[test]
    fn group_order_m1() {
        let group = generate_symplectic_group(1, 10).unwrap();
        assert_eq!(group.len(), 6);
        for g in &group {
            assert!(g.is_symplectic().unwrap());
            assert!(g.inverse().is_ok());
        }
    }

    #[test]
    fn group_order_m2() {
        let group = generate_symplectic_group(2, 1000).unwrap();
        assert_eq!(group.len(), 720);
        for g in &group {
            assert!(g.is_symplectic().unwrap());
        }
    }

    #[test]
    fn group_limit_exceeded() {
        assert!(matches!(
            generate_symplectic_group(2, 100),
            Err(Error::ResourceLimit(_))
        ));
    }

    #[test]
    fn group_closure_spot_check() {
        let group = generate_symplectic_group(2, 1000).unwrap();
        let keys: std::collections::HashSet<u128> =
            group.iter().map(|g| g.pack_key()).collect();
        // Deterministic LCG over pair indices.
        let mut state = 0x243f6a8885a308d3u64;
        for _ in 0..1000 {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let i = (state >> 33) as usize % group.len();
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let j = (state >> 33) as usize % group.len();
            let prod = group[i].mul(&group[j]).unwrap();
            assert!(keys.contains(&prod.pack_key()));
        }
    }
}
