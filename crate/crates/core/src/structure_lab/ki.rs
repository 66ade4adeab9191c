//! Koashi–Imoto decomposition of a channel with a full-rank fixed state.
//!
//! The fixed points of the dual channel form a *-algebra
//! `𝒜 = ⊕ₙ M(cₙ) ⊗ 𝟙_{fₙ}`. A random element of its center separates the
//! blocks; a random element of `𝒜` restricted to a block separates the
//! `Cₙ` index, and a random non-Hermitian element aligns the copies of `Fₙ`.
//! In the resulting basis every Kraus operator reads `⊕ₙ 𝟙_{Cₙ} ⊗ A_{k,n}`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::channel::QuantumChannel;
use crate::error::{Error, Result};
use crate::numerics::matrix::{c, dagger, frobenius, hermitian_eigen, identity, max_abs, null_space, zeros, CMatrix};
use crate::numerics::{unvectorize, vectorize, RandomStream};

pub const MAX_DIM: usize = 32;

/// Residual allowed in the Kraus form and the fixed-state check.
pub const KI_TOL: f64 = 1e-10;

/// Eigenvalue gaps below this trigger a fresh random element.
pub const SPLIT_GAP: f64 = 1e-8;

const FIXED_POINT_TOL: f64 = 1e-10;
const CLUSTER_TOL: f64 = 1e-9;
const KI_SEED: u64 = 0x4b49_6465_636f_6d70;
const MAX_ATTEMPTS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct KIBlock {
    pub c_dim: usize,
    pub f_dim: usize,
}

impl KIBlock {
    pub fn dim(&self) -> usize {
        self.c_dim * self.f_dim
    }
}

#[derive(Debug, Clone)]
pub struct KIDecomposition {
    pub blocks: Vec<KIBlock>,
    /// Unitary whose columns are the block basis, ordered block by block
    /// and `C`-major inside a block.
    pub basis: CMatrix,
    pub omegas: Vec<CMatrix>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct KIResiduals {
    pub basis_unitarity: f64,
    pub kraus_form: f64,
    pub omega_fixed: f64,
}

impl KIResiduals {
    pub fn worst(&self) -> f64 {
        self.basis_unitarity.max(self.kraus_form).max(self.omega_fixed)
    }
}

impl KIDecomposition {
    pub fn new(blocks: Vec<KIBlock>, basis: CMatrix, omegas: Vec<CMatrix>) -> Result<Self> {
        let d: usize = blocks.iter().map(KIBlock::dim).sum();
        if basis.shape() != (d, d) {
            return Err(Error::Shape(format!("basis is {:?}, blocks add up to {d}", basis.shape())));
        }
        if omegas.len() != blocks.len() {
            return Err(Error::Shape(format!("{} blocks but {} fixed states", blocks.len(), omegas.len())));
        }
        for (n, (b, w)) in blocks.iter().zip(&omegas).enumerate() {
            if b.c_dim == 0 || b.f_dim == 0 {
                return Err(Error::Shape(format!("block {n} has an empty factor")));
            }
            if w.shape() != (b.f_dim, b.f_dim) {
                return Err(Error::Shape(format!("omega {n} is {:?}, expected {1}x{1}", w.shape(), b.f_dim)));
            }
        }
        Ok(KIDecomposition { blocks, basis, omegas })
    }

    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn offsets(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.blocks.len());
        let mut o = 0;
        for b in &self.blocks {
            out.push(o);
            o += b.dim();
        }
        out
    }

    /// Columns of the basis spanning block `n`.
    pub fn block_basis(&self, n: usize) -> CMatrix {
        let o = self.offsets()[n];
        self.basis.columns(o, self.blocks[n].dim()).into_owned()
    }

    /// Orthogonal projectors onto `Cₙ ⊗ Fₙ` in the original basis.
    pub fn projectors(&self) -> Vec<CMatrix> {
        (0..self.blocks.len())
            .map(|n| {
                let v = self.block_basis(n);
                &v * v.adjoint()
            })
            .collect()
    }

    /// `B (⊕ₙ σₙ ⊗ ωₙ) B†` for `cₙ × cₙ` parts `σₙ`.
    pub fn assemble(&self, parts: &[CMatrix]) -> Result<CMatrix> {
        if parts.len() != self.blocks.len() {
            return Err(Error::Shape(format!("{} parts for {} blocks", parts.len(), self.blocks.len())));
        }
        let d = self.dim();
        let mut inner = zeros(d, d);
        for ((n, b), o) in self.blocks.iter().enumerate().zip(self.offsets()) {
            if parts[n].shape() != (b.c_dim, b.c_dim) {
                return Err(Error::Shape(format!("part {n} is {:?}, expected {1}x{1}", parts[n].shape(), b.c_dim)));
            }
            let k = crate::numerics::matrix::kron(&parts[n], &self.omegas[n]);
            inner.view_mut((o, o), (b.dim(), b.dim())).copy_from(&k);
        }
        Ok(&self.basis * inner * self.basis.adjoint())
    }

    /// `A_{k,n}`: the average of the `cₙ` diagonal `fₙ × fₙ` blocks of
    /// `B† A_k B` restricted to block `n`.
    pub fn kraus_blocks(&self, channel: &QuantumChannel) -> Result<Vec<Vec<CMatrix>>> {
        self.check_channel(channel)?;
        let offsets = self.offsets();
        Ok(channel
            .kraus()
            .iter()
            .map(|a| {
                let rotated = self.basis.adjoint() * a * &self.basis;
                self.blocks
                    .iter()
                    .zip(&offsets)
                    .map(|(b, &o)| {
                        let mut avg = zeros(b.f_dim, b.f_dim);
                        for j in 0..b.c_dim {
                            let s = o + j * b.f_dim;
                            avg += rotated.view((s, s), (b.f_dim, b.f_dim));
                        }
                        avg / c(b.c_dim as f64, 0.0)
                    })
                    .collect()
            })
            .collect())
    }

    fn check_channel(&self, channel: &QuantumChannel) -> Result<()> {
        if channel.dim() != self.dim() {
            return Err(Error::Shape(format!(
                "channel acts on dimension {}, decomposition on {}",
                channel.dim(),
                self.dim()
            )));
        }
        Ok(())
    }
}

/// Checks a decomposition against a channel without discovering anything.
pub fn verify_decomposition(channel: &QuantumChannel, decomp: &KIDecomposition) -> Result<KIResiduals> {
    let kraus_blocks = decomp.kraus_blocks(channel)?;
    let d = decomp.dim();
    let basis_unitarity = max_abs(&(decomp.basis.adjoint() * &decomp.basis - identity(d)));
    let offsets = decomp.offsets();
    let mut kraus_form: f64 = 0.0;
    for (a, parts) in channel.kraus().iter().zip(&kraus_blocks) {
        let mut assembled = zeros(d, d);
        for ((b, &o), part) in decomp.blocks.iter().zip(&offsets).zip(parts) {
            let k = crate::numerics::matrix::kron(&identity(b.c_dim), part);
            assembled.view_mut((o, o), (b.dim(), b.dim())).copy_from(&k);
        }
        let rotated = decomp.basis.adjoint() * a * &decomp.basis;
        kraus_form = kraus_form.max(max_abs(&(rotated - assembled)));
    }
    let mut omega_fixed: f64 = 0.0;
    for (n, w) in decomp.omegas.iter().enumerate() {
        let mut image = zeros(w.nrows(), w.ncols());
        for parts in &kraus_blocks {
            image += &parts[n] * w * parts[n].adjoint();
        }
        omega_fixed = omega_fixed.max(max_abs(&(image - w)));
    }
    Ok(KIResiduals { basis_unitarity, kraus_form, omega_fixed })
}

/// Real coordinates of a Hermitian matrix in which `⟨x, y⟩ = tr(XY)`.
fn herm_to_real(x: &CMatrix) -> DVector<f64> {
    let d = x.nrows();
    let s = std::f64::consts::SQRT_2;
    let mut v = Vec::with_capacity(d * d);
    for i in 0..d {
        v.push(x[(i, i)].re);
        for j in i + 1..d {
            v.push(s * x[(i, j)].re);
            v.push(s * x[(i, j)].im);
        }
    }
    DVector::from_vec(v)
}

fn real_to_herm(v: &DVector<f64>, d: usize) -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut x = zeros(d, d);
    let mut k = 0;
    for i in 0..d {
        x[(i, i)] = c(v[k], 0.0);
        k += 1;
        for j in i + 1..d {
            let z = c(s * v[k], s * v[k + 1]);
            x[(i, j)] = z;
            x[(j, i)] = z.conj();
            k += 2;
        }
    }
    x
}

/// Orthonormal basis (real coordinates, as columns) of the Hermitian part
/// of the span of `elements`.
fn hermitian_basis(elements: &[CMatrix]) -> DMatrix<f64> {
    let half = c(0.5, 0.0);
    let half_i = c(0.0, -0.5);
    let mut basis: Vec<DVector<f64>> = Vec::new();
    for x in elements {
        let xd = dagger(x);
        let scale = frobenius(x);
        for h in [(x + &xd) * half, (x - &xd) * half_i] {
            let mut v = herm_to_real(&h) / scale;
            for _ in 0..2 {
                for b in &basis {
                    let p = b.dot(&v);
                    v.axpy(-p, b, 1.0);
                }
            }
            let norm = v.norm();
            if norm > 1e-8 {
                basis.push(v / norm);
            }
        }
    }
    if basis.is_empty() {
        return DMatrix::zeros(elements.first().map_or(0, |x| x.len()), 0);
    }
    DMatrix::from_columns(&basis)
}

fn random_combination(basis: &DMatrix<f64>, rng: &mut RandomStream) -> DVector<f64> {
    let g = DVector::from_fn(basis.ncols(), |_, _| rng.normal());
    basis * g
}

/// Splits ascending `values` into `groups` clusters at the largest gaps.
/// `None` if the split is not clean.
fn split_into(values: &[f64], groups: usize) -> Option<Vec<std::ops::Range<usize>>> {
    let scale = values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let gaps: Vec<(usize, f64)> = values.windows(2).enumerate().map(|(i, w)| (i, w[1] - w[0])).collect();
    let mut order = gaps.clone();
    order.sort_by(|a, b| b.1.total_cmp(&a.1));
    let mut cuts: Vec<usize> = order.iter().take(groups - 1).map(|g| g.0 + 1).collect();
    let smallest_cut = order.iter().take(groups - 1).map(|g| g.1).fold(f64::INFINITY, f64::min);
    let largest_rest = order.iter().skip(groups - 1).map(|g| g.1).fold(0.0, f64::max);
    if smallest_cut < SPLIT_GAP * scale || largest_rest > CLUSTER_TOL * scale {
        return None;
    }
    cuts.sort_unstable();
    let mut out = Vec::with_capacity(groups);
    let mut start = 0;
    for cut in cuts {
        out.push(start..cut);
        start = cut;
    }
    out.push(start..values.len());
    Some(out)
}

/// Splits ascending `values` wherever a gap is large; `None` if some gap
/// sits between the cluster and split thresholds.
fn cluster(values: &[f64]) -> Option<Vec<std::ops::Range<usize>>> {
    let scale = values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..values.len() {
        let gap = values[i] - values[i - 1];
        if gap > SPLIT_GAP * scale {
            out.push(start..i);
            start = i;
        } else if gap > CLUSTER_TOL * scale {
            return None;
        }
    }
    out.push(start..values.len());
    Some(out)
}

fn columns_of(m: &CMatrix, range: std::ops::Range<usize>) -> CMatrix {
    m.columns(range.start, range.len()).into_owned()
}

fn superop_matrix(kraus: &[CMatrix]) -> CMatrix {
    let d = kraus[0].nrows();
    let mut e = zeros(d * d, d * d);
    for a in kraus {
        e += crate::numerics::matrix::kron(&a.map(|z| z.conj()), a);
    }
    e
}

/// Center of the algebra spanned by `herm` (real coordinates): the common
/// null space of `Z ↦ i[Z, Y]` for two random elements `Y`.
fn center(herm: &DMatrix<f64>, d: usize, rng: &mut RandomStream) -> DMatrix<f64> {
    let n = herm.ncols();
    let elems: Vec<CMatrix> = (0..n).map(|a| real_to_herm(&herm.column(a).into_owned(), d)).collect();
    let mut gram = DMatrix::<f64>::zeros(n, n);
    for _ in 0..2 {
        let y = real_to_herm(&random_combination(herm, rng), d);
        let cols: Vec<DVector<f64>> = elems.iter().map(|h| herm_to_real(&((h * &y - &y * h) * c(0.0, 1.0)))).collect();
        let comm = DMatrix::from_columns(&cols);
        let m = herm.transpose() * comm;
        gram += m.transpose() * m;
    }
    let eig = gram.symmetric_eigen();
    let top = eig.eigenvalues.iter().cloned().fold(1.0, f64::max);
    let kept: Vec<DVector<f64>> =
        (0..n).filter(|&k| eig.eigenvalues[k] <= 1e-12 * top).map(|k| herm * eig.eigenvectors.column(k)).collect();
    if kept.is_empty() {
        DMatrix::zeros(herm.nrows(), 0)
    } else {
        DMatrix::from_columns(&kept)
    }
}

/// Per-block structure before sorting.
struct RawBlock {
    block: KIBlock,
    columns: CMatrix,
    fingerprint: Vec<i64>,
}

fn block_structure(span: &CMatrix, herm: &DMatrix<f64>, d: usize, rng: &mut RandomStream) -> Result<RawBlock> {
    let b = span.ncols();
    let restrict = |rng: &mut RandomStream| span.adjoint() * real_to_herm(&random_combination(herm, rng), d) * span;
    for _ in 0..MAX_ATTEMPTS {
        let y = restrict(rng);
        let (values, vectors) = hermitian_eigen(&y);
        let Some(groups) = cluster(&values) else { continue };
        let c_dim = groups.len();
        if b % c_dim != 0 || groups.iter().any(|g| g.len() != b / c_dim) {
            continue;
        }
        let f_dim = b / c_dim;
        let spaces: Vec<CMatrix> = groups.into_iter().map(|g| columns_of(&vectors, g)).collect();
        let w = restrict(rng) + restrict(rng) * c(0.0, 1.0);
        let mut frames = Vec::with_capacity(c_dim);
        let mut ok = true;
        for e in &spaces {
            let m = e.adjoint() * &w * &spaces[0];
            let norm = frobenius(&m);
            if norm < 1e-6 {
                ok = false;
                break;
            }
            let q = m * c((f_dim as f64).sqrt() / norm, 0.0);
            frames.push(e * q);
        }
        if !ok {
            continue;
        }
        let local = CMatrix::from_columns(
            &frames
                .iter()
                .flat_map(|f| f.column_iter().map(|c| c.into_owned()).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
        );
        let columns = span * local;
        let projector = &columns * columns.adjoint();
        let fingerprint = (0..d).map(|i| (projector[(i, i)].re * 1e6).round() as i64).collect();
        return Ok(RawBlock { block: KIBlock { c_dim, f_dim }, columns, fingerprint });
    }
    Err(Error::NumericalRank(format!("could not split a block of dimension {b} into C and F factors")))
}

fn fixed_state(parts: &[CMatrix]) -> Result<CMatrix> {
    let f = parts[0].nrows();
    if f == 1 {
        return Ok(identity(1));
    }
    let e = superop_matrix(parts) - identity(f * f);
    let null = null_space(&e, FIXED_POINT_TOL);
    if null.ncols() != 1 {
        return Err(Error::NumericalRank(format!("block channel has {} fixed states, expected 1", null.ncols())));
    }
    let w = unvectorize(&null.column(0).into_owned(), f);
    let w = (&w + dagger(&w)) * c(0.5, 0.0);
    let tr = w.trace();
    Ok(w / tr)
}

pub fn ki_decompose(channel: &QuantumChannel) -> Result<KIDecomposition> {
    let d = channel.dim();
    if d > MAX_DIM {
        return Err(Error::Precondition(format!("dimension {d} exceeds {MAX_DIM}")));
    }
    let e = superop_matrix(channel.kraus());
    let one = identity(d * d);
    let right = null_space(&(&e - &one), FIXED_POINT_TOL);
    let left = null_space(&(e.adjoint() - &one), FIXED_POINT_TOL);
    if right.ncols() != left.ncols() || right.ncols() == 0 {
        return Err(Error::NumericalRank(format!(
            "fixed-point spaces of the channel ({}) and its dual ({}) disagree",
            right.ncols(),
            left.ncols()
        )));
    }

    // Riesz projection onto the fixed states, applied to 𝟙/d
    let overlap = left.adjoint() * &right;
    let inv =
        overlap.try_inverse().ok_or_else(|| Error::NumericalRank("fixed-point overlap matrix is singular".into()))?;
    let mixed = vectorize(&(identity(d) / c(d as f64, 0.0)));
    let sigma = unvectorize(&(&right * (inv * (left.adjoint() * mixed))), d);
    let (spectrum, _) = hermitian_eigen(&sigma);
    if spectrum[0] < FIXED_POINT_TOL {
        return Err(Error::Unsupported(format!(
            "channel has no full-rank fixed state (smallest eigenvalue {:e})",
            spectrum[0]
        )));
    }

    let algebra: Vec<CMatrix> = (0..left.ncols()).map(|k| unvectorize(&left.column(k).into_owned(), d)).collect();
    let herm = hermitian_basis(&algebra);
    if herm.ncols() != left.ncols() {
        return Err(Error::NumericalRank(format!(
            "dual fixed points span {} Hermitian directions, expected {}",
            herm.ncols(),
            left.ncols()
        )));
    }

    let mut rng = RandomStream::new(KI_SEED);
    let z = center(&herm, d, &mut rng);
    let k = z.ncols();
    if k == 0 {
        return Err(Error::NumericalRank("fixed-point algebra has a trivial center".into()));
    }
    let mut spans = None;
    for _ in 0..MAX_ATTEMPTS {
        let zc = real_to_herm(&random_combination(&z, &mut rng), d);
        let (values, vectors) = hermitian_eigen(&zc);
        if let Some(groups) = split_into(&values, k) {
            spans = Some(groups.into_iter().map(|g| columns_of(&vectors, g)).collect::<Vec<_>>());
            break;
        }
    }
    let spans =
        spans.ok_or_else(|| Error::NumericalRank(format!("center of dimension {k} does not split the space")))?;

    let mut raw = spans.iter().map(|s| block_structure(s, &herm, d, &mut rng)).collect::<Result<Vec<_>>>()?;
    raw.sort_by(|a, b| a.block.cmp(&b.block).then_with(|| b.fingerprint.cmp(&a.fingerprint)));

    let blocks: Vec<KIBlock> = raw.iter().map(|r| r.block).collect();
    let cols: Vec<CMatrix> = raw.into_iter().map(|r| r.columns).collect();
    let basis = CMatrix::from_columns(
        &cols.iter().flat_map(|m| m.column_iter().map(|c| c.into_owned()).collect::<Vec<_>>()).collect::<Vec<_>>(),
    );
    let placeholder: Vec<CMatrix> = blocks.iter().map(|b| identity(b.f_dim)).collect();
    let mut decomp = KIDecomposition::new(blocks, basis, placeholder)?;
    let parts = decomp.kraus_blocks(channel)?;
    decomp.omegas = (0..decomp.blocks.len())
        .map(|n| fixed_state(&parts.iter().map(|p| p[n].clone()).collect::<Vec<_>>()))
        .collect::<Result<Vec<_>>>()?;

    let residuals = verify_decomposition(channel, &decomp)?;
    if residuals.worst() > KI_TOL {
        return Err(Error::NumericalRank(format!("decomposition residual {:e} exceeds {KI_TOL:e}", residuals.worst())));
    }
    Ok(decomp)
}

/// Multiset of block shapes, sorted.
pub fn block_shapes(decomp: &KIDecomposition) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = decomp.blocks.iter().map(|b| (b.c_dim, b.f_dim)).collect();
    out.sort_unstable();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::matrix::ket_bra;
    use crate::numerics::random_unitary;

    fn shapes(ch: &QuantumChannel) -> Vec<(usize, usize)> {
        block_shapes(&ki_decompose(ch).unwrap())
    }

    #[test]
    fn identity_is_one_block() {
        assert_eq!(shapes(&QuantumChannel::identity(4)), vec![(4, 1)]);
    }

    #[test]
    fn dephasing_splits_into_points() {
        let decomp = ki_decompose(&QuantumChannel::dephasing(3)).unwrap();
        assert_eq!(block_shapes(&decomp), vec![(1, 1); 3]);
        for (n, p) in decomp.projectors().iter().enumerate() {
            assert!(max_abs(&(p - ket_bra(3, n, n))) < 1e-12);
        }
    }

    #[test]
    fn fine_grained_measurement_blocks() {
        assert_eq!(shapes(&QuantumChannel::block_measurement(&[2, 3])), vec![(2, 1), (3, 1)]);
    }

    #[test]
    fn display_factor_with_mixing_channel() {
        // C^2 ⊗ F^2 with a completely depolarizing channel on F
        let paulis = [
            identity(2),
            CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]),
            CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)]),
            CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]),
        ];
        let kraus = paulis.iter().map(|p| crate::numerics::matrix::kron(&identity(2), p) * c(0.5, 0.0)).collect();
        let ch = QuantumChannel::new(kraus).unwrap();
        let decomp = ki_decompose(&ch).unwrap();
        assert_eq!(block_shapes(&decomp), vec![(2, 2)]);
        assert!(max_abs(&(&decomp.omegas[0] - identity(2) * c(0.5, 0.0))) < 1e-10);
    }

    #[test]
    fn amplitude_damping_is_unsupported() {
        let g: f64 = 0.3;
        let a0 = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c((1.0 - g).sqrt(), 0.0)]);
        let a1 = ket_bra(2, 0, 1) * c(g.sqrt(), 0.0);
        let ch = QuantumChannel::new(vec![a0, a1]).unwrap();
        assert!(matches!(ki_decompose(&ch), Err(Error::Unsupported(_))));
    }

    #[test]
    fn rotated_channel_keeps_block_shapes() {
        let mut rng = RandomStream::new(5);
        let base = QuantumChannel::block_measurement(&[1, 2, 2]);
        for _ in 0..3 {
            let v = random_unitary(5, &mut rng);
            let decomp = ki_decompose(&base.conjugated(&v)).unwrap();
            assert_eq!(block_shapes(&decomp), vec![(1, 1), (2, 1), (2, 1)]);
        }
    }

    #[test]
    fn hermitian_coordinates_round_trip() {
        let mut rng = RandomStream::new(1);
        let h = crate::numerics::random_hermitian(3, &mut rng);
        let back = real_to_herm(&herm_to_real(&h), 3);
        assert!(max_abs(&(back - &h)) < 1e-15);
        assert!((herm_to_real(&h).norm_squared() - (&h * &h).trace().re).abs() < 1e-12);
    }
}
