//! Approximate maximum-likelihood decoding by tensor-network contraction.
//!
//! Each coset probability is the contraction of a planar network on the
//! (2d-1) x (2d-1) grid: qubit tensors hold single-qubit channel
//! probabilities with one binary index per adjacent stabilizer generator,
//! and stabilizer sites are copy (delta) tensors joining that generator's
//! subset variable across its qubits. The network is contracted as a
//! boundary matrix product state swept across the lattice, with every bond
//! truncated to at most `chi` singular values after each absorbed column,
//! for O(n chi^3) total kernel work.
//!
//! Two schedules matter for accuracy and cost:
//!
//! - Bonds no wider than `chi` are re-canonicalized exactly by LQ; wider
//!   bonds are truncated through the Gram matrix of the site, keeping the
//!   `chi` dominant directions. Below the truncation threshold the sweep is
//!   therefore exact to rounding.
//! - Columns are swept toward the lattice edge that carries the logical
//!   strings, so the four class networks pair up into sweeps that differ
//!   only in the final column; each direction costs two shared sweeps
//!   instead of four.
//!
//! Per decode the network is contracted both column-wise and row-wise and
//! the two values are averaged per class before the argmax.

mod kernel;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::code::{CodeError, LogicalClass, SurfaceCode, Syndrome};
use crate::exact::CosetProbabilities;
use crate::noise::PauliChannel;
use crate::pauli::PauliOperator;

#[derive(Debug, Error, PartialEq)]
pub enum MpsError {
    #[error("bond dimension must be at least 2, got {0}")]
    InvalidChi(usize),
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error("all four averaged class values are zero or nonfinite")]
    DecoderFailure,
}

/// Sweep orientation of the boundary MPS.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    ColumnWise,
    RowWise,
}

/// How the two directional contraction values combine into one class value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AverageMode {
    /// Arithmetic mean of the two values (the default).
    Arithmetic,
    /// Geometric mean; zero if the signs disagree.
    Geometric,
}

#[derive(Debug, Clone, Copy)]
pub struct MpsOptions {
    pub chi: usize,
    pub average: AverageMode,
}

impl MpsOptions {
    pub fn new(chi: usize) -> Self {
        MpsOptions {
            chi,
            average: AverageMode::Arithmetic,
        }
    }
}

/// A scalar in sign/log-magnitude form; coset probabilities underflow f64
/// at large distances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogValue {
    pub ln_abs: f64,
    pub sign: i8,
}

impl LogValue {
    pub const ZERO: LogValue = LogValue {
        ln_abs: f64::NEG_INFINITY,
        sign: 0,
    };

    pub fn is_zero(&self) -> bool {
        self.sign == 0
    }

    pub fn from_f64(v: f64) -> Self {
        if v == 0.0 {
            LogValue::ZERO
        } else {
            LogValue {
                ln_abs: v.abs().ln(),
                sign: if v > 0.0 { 1 } else { -1 },
            }
        }
    }

    pub fn to_f64(&self) -> f64 {
        f64::from(self.sign) * self.ln_abs.exp()
    }

    fn mean(a: LogValue, b: LogValue, mode: AverageMode) -> LogValue {
        match mode {
            AverageMode::Arithmetic => {
                if a.sign == 0 && b.sign == 0 {
                    return LogValue::ZERO;
                }
                if a.sign == 0 || b.sign == 0 {
                    let v = if a.sign == 0 { b } else { a };
                    return LogValue {
                        ln_abs: v.ln_abs - std::f64::consts::LN_2,
                        sign: v.sign,
                    };
                }
                let (hi, lo) = if a.ln_abs >= b.ln_abs { (a, b) } else { (b, a) };
                let t = (lo.ln_abs - hi.ln_abs).exp();
                let s = 1.0 + f64::from(hi.sign * lo.sign) * t;
                if s == 0.0 {
                    return LogValue::ZERO;
                }
                LogValue {
                    ln_abs: hi.ln_abs + s.ln() - std::f64::consts::LN_2,
                    sign: hi.sign,
                }
            }
            AverageMode::Geometric => {
                if a.sign == 0 || b.sign == 0 || a.sign != b.sign {
                    return LogValue::ZERO;
                }
                LogValue {
                    ln_abs: 0.5 * (a.ln_abs + b.ln_abs),
                    sign: a.sign,
                }
            }
        }
    }
}

/// One node of the planar network: a rank <= 4 tensor with indices toward
/// the four grid neighbors (dimension 1 where the neighbor is off-lattice,
/// 2 otherwise), laid out as `data[u + du (l + dl (r + dr d))]`.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeTensor {
    du: usize,
    dl: usize,
    dr: usize,
    dd: usize,
    data: Vec<f64>,
}

impl NodeTensor {
    #[inline]
    fn idx(&self, u: usize, l: usize, r: usize, d: usize) -> usize {
        u + self.du * (l + self.dl * (r + self.dr * d))
    }

    fn transposed(&self) -> NodeTensor {
        let mut out = NodeTensor {
            du: self.dl,
            dl: self.du,
            dr: self.dd,
            dd: self.dr,
            data: vec![0.0; self.data.len()],
        };
        for u in 0..out.du {
            for l in 0..out.dl {
                for r in 0..out.dr {
                    for d in 0..out.dd {
                        let e = out.idx(u, l, r, d);
                        out.data[e] = self.data[self.idx(l, u, d, r)];
                    }
                }
            }
        }
        out
    }
}

/// The contraction network for one coset representative.
pub struct TensorNetwork {
    span: usize,
    nodes: Vec<NodeTensor>,
}

impl TensorNetwork {
    pub fn span(&self) -> usize {
        self.span
    }

    pub fn node(&self, i: usize, j: usize) -> &NodeTensor {
        &self.nodes[i * self.span + j]
    }

    /// Columns in sweep order for the given direction: the sweep moves
    /// toward column 0 (row 0 for row-wise), where the logical strings
    /// live.
    fn sweep_columns(&self, direction: Direction) -> Vec<Vec<NodeTensor>> {
        (0..self.span)
            .rev()
            .map(|c| self.sweep_column(direction, c))
            .collect()
    }

    /// One grid column (or row) as sweep-oriented node tensors.
    fn sweep_column(&self, direction: Direction, c: usize) -> Vec<NodeTensor> {
        (0..self.span)
            .map(|i| match direction {
                Direction::ColumnWise => self.node(i, c).clone(),
                Direction::RowWise => self.node(c, i).transposed(),
            })
            .collect()
    }
}

/// Builds the network whose exact contraction is the coset probability of
/// `representative`'s class for the syndrome it carries.
pub fn build_network(
    code: &SurfaceCode,
    ch: &PauliChannel,
    representative: &PauliOperator,
) -> Result<TensorNetwork, MpsError> {
    if representative.len() != code.n() {
        return Err(MpsError::Code(CodeError::QubitCountMismatch(
            representative.len(),
            code.n(),
        )));
    }
    let span = code.span();
    let dim = |inside: bool| if inside { 2 } else { 1 };
    let mut nodes = Vec::with_capacity(span * span);
    for i in 0..span {
        for j in 0..span {
            let du = dim(i > 0);
            let dl = dim(j > 0);
            let dr = dim(j + 1 < span);
            let dd = dim(i + 1 < span);
            let mut node = NodeTensor {
                du,
                dl,
                dr,
                dd,
                data: vec![0.0; du * dl * dr * dd],
            };
            match code.cell(i, j) {
                crate::code::Cell::Qubit(q) => {
                    let (x0, z0) = representative.get(q).bits();
                    // A set index bit multiplies in the adjacent
                    // stabilizer's single-qubit factor: X for vertices
                    // (even-row centers), the plaquette Pauli otherwise.
                    let plaq = code.plaquette_pauli_bits();
                    let factor = |ni: usize| -> (bool, bool) {
                        if ni % 2 == 0 {
                            (true, false)
                        } else {
                            plaq
                        }
                    };
                    for u in 0..du {
                        for l in 0..dl {
                            for r in 0..dr {
                                for d in 0..dd {
                                    let mut x = x0;
                                    let mut z = z0;
                                    for (bit, (fx, fz)) in [
                                        (u == 1, factor(i.wrapping_sub(1))),
                                        (l == 1, factor(i)),
                                        (r == 1, factor(i)),
                                        (d == 1, factor(i + 1)),
                                    ] {
                                        if bit {
                                            x ^= fx;
                                            z ^= fz;
                                        }
                                    }
                                    let e = node.idx(u, l, r, d);
                                    node.data[e] = ch.prob_bits(x, z);
                                }
                            }
                        }
                    }
                }
                crate::code::Cell::Stabilizer(_) => {
                    // Copy tensor: 1 where all real (dimension-2) indices
                    // agree.
                    for u in 0..du {
                        for l in 0..dl {
                            for r in 0..dr {
                                for d in 0..dd {
                                    let bits = [(du, u), (dl, l), (dr, r), (dd, d)];
                                    let mut ok = true;
                                    let mut first: Option<usize> = None;
                                    for (dimension, value) in bits {
                                        if dimension == 2 {
                                            match first {
                                                None => first = Some(value),
                                                Some(f) => ok &= f == value,
                                            }
                                        }
                                    }
                                    let e = node.idx(u, l, r, d);
                                    node.data[e] = f64::from(ok);
                                }
                            }
                        }
                    }
                }
            }
            nodes.push(node);
        }
    }
    Ok(TensorNetwork { span, nodes })
}

/// Result of a single network contraction.
#[derive(Debug, Clone, Copy)]
pub struct Contraction {
    pub value: LogValue,
    pub max_bond: usize,
}

/// Contracts the network as a boundary MPS with bond dimension `chi`.
pub fn contract(
    network: &TensorNetwork,
    chi: usize,
    direction: Direction,
) -> Result<Contraction, MpsError> {
    if chi < 2 {
        return Err(MpsError::InvalidChi(chi));
    }
    let cols = network.sweep_columns(direction);
    let (last, shared) = cols.split_last().expect("span >= 3");
    let mut ws = Workspace::default();
    let mut mps = BoundaryMps::init(&shared[0]);
    for col in &shared[1..] {
        mps.absorb(col, &mut ws);
        mps.compress(chi, &mut ws);
    }
    let max_bond = mps.max_bond;
    let value = mps.finish(last, &mut ws);
    Ok(Contraction { value, max_bond })
}


/// Per-class contraction values for one decode.
#[derive(Debug, Clone, Copy)]
pub struct ClassDiagnostics {
    pub column: LogValue,
    pub row: LogValue,
    pub averaged: LogValue,
}

#[derive(Debug, Clone)]
pub struct DecodeDiagnostics {
    pub per_class: [ClassDiagnostics; 4],
    pub max_bond: usize,
}

#[derive(Debug, Clone)]
pub struct MpsDecoded {
    pub class: LogicalClass,
    pub probs: CosetProbabilities,
    pub diagnostics: DecodeDiagnostics,
}

/// Decodes a syndrome: contracts all four class networks in both sweep
/// directions, averages the paired values per class, and returns the
/// arg-max class (ties I < X < Y < Z).
pub fn decode_mps(
    code: &SurfaceCode,
    ch: &PauliChannel,
    s: &Syndrome,
    opts: MpsOptions,
) -> Result<MpsDecoded, MpsError> {
    if opts.chi < 2 {
        return Err(MpsError::InvalidChi(opts.chi));
    }
    let base = code.pure_error(s)?;
    let nets = LogicalClass::ALL.map(|class| {
        let rep = base.multiply(&code.class_representative(class)).unwrap();
        build_network(code, ch, &rep).expect("representative length matches")
    });
    let [net_i, net_x, net_y, net_z] = &nets;

    // Networks differing only by the left-column logical string share every
    // sweep column except the last; same for the top-row string row-wise.
    let mut ws = Workspace::default();
    let mut max_bond = 0;
    let mut run = |a: &TensorNetwork, b: &TensorNetwork, dir: Direction| {
        let (va, vb, bond) = contract_shared(a, b, opts.chi, dir, &mut ws);
        max_bond = max_bond.max(bond);
        (va, vb)
    };
    let (col_i, col_x) = run(net_i, net_x, Direction::ColumnWise);
    let (col_z, col_y) = run(net_z, net_y, Direction::ColumnWise);
    let (row_i, row_z) = run(net_i, net_z, Direction::RowWise);
    let (row_x, row_y) = run(net_x, net_y, Direction::RowWise);

    let dirs = [
        (col_i, row_i),
        (col_x, row_x),
        (col_y, row_y),
        (col_z, row_z),
    ];
    let per_class = dirs.map(|(column, row)| ClassDiagnostics {
        column,
        row,
        averaged: LogValue::mean(column, row, opts.average),
    });

    // Negative averaged values can only arise from truncation noise around
    // zero; they carry no likelihood and are clamped to zero.
    let log_values = per_class.map(|c| {
        if c.averaged.sign > 0 {
            c.averaged.ln_abs
        } else {
            f64::NEG_INFINITY
        }
    });
    let probs = CosetProbabilities::from_log_values(log_values);
    let class = probs.argmax().ok_or(MpsError::DecoderFailure)?;
    Ok(MpsDecoded {
        class,
        probs,
        diagnostics: DecodeDiagnostics {
            per_class,
            max_bond,
        },
    })
}

/// Contracts two networks that differ only in the final sweep column,
/// sharing the boundary-MPS prefix.
fn contract_shared(
    a: &TensorNetwork,
    b: &TensorNetwork,
    chi: usize,
    direction: Direction,
    ws: &mut Workspace,
) -> (LogValue, LogValue, usize) {
    let cols_a = a.sweep_columns(direction);
    let (last_a, shared) = cols_a.split_last().unwrap();
    // The two networks differ only in the last sweep column, where the
    // logical strings live; the boundary-MPS prefix is computed once.
    let last_b = b.sweep_column(direction, 0);
    debug_assert_eq!(last_b.len(), shared.len() + 1);
    let last_b = &last_b;
    let mut mps = BoundaryMps::init(&shared[0]);
    for col in &shared[1..] {
        mps.absorb(col, ws);
        mps.compress(chi, ws);
    }
    let va = mps.clone().finish(last_a, ws);
    let vb = mps.clone().finish(last_b, ws);
    (va, vb, mps.max_bond)
}


/// One site of the boundary MPS: tensor (top bond, physical, bottom bond)
/// stored column-major as `data[a + na (s + np b)]`.
#[derive(Debug, Clone)]
struct Site {
    na: usize,
    np: usize,
    nb: usize,
    data: Vec<f64>,
}

#[derive(Debug, Clone)]
struct BoundaryMps {
    sites: Vec<Site>,
    log_acc: f64,
    zero: bool,
    max_bond: usize,
}

#[derive(Default)]
struct Workspace {
    scratch: kernel::Scratch,
    buf0: Vec<f64>,
    buf1: Vec<f64>,
    eig: Vec<f64>,
}

impl BoundaryMps {
    /// The first sweep column reinterpreted as an MPS: the free index
    /// toward the next column becomes the physical leg.
    fn init(column: &[NodeTensor]) -> Self {
        let sites = column
            .iter()
            .map(|n| {
                debug_assert_eq!(n.dr, 1);
                Site {
                    na: n.du,
                    np: n.dl,
                    nb: n.dd,
                    data: n.data.clone(),
                }
            })
            .collect();
        BoundaryMps {
            sites,
            log_acc: 0.0,
            zero: false,
            max_bond: 2,
        }
    }

    /// Absorbs one column of node tensors, contracting each node's right
    /// leg with the site's physical leg.
    fn absorb(&mut self, column: &[NodeTensor], ws: &mut Workspace) {
        if self.zero {
            return;
        }
        for (site, node) in self.sites.iter_mut().zip(column) {
            debug_assert_eq!(node.dr, site.np);
            let (na, nb) = (site.na, site.nb);
            let new_na = na * node.du;
            let new_np = node.dl;
            let new_nb = nb * node.dd;
            ws.buf0.clear();
            ws.buf0.resize(new_na * new_np * new_nb, 0.0);
            for d in 0..node.dd {
                for s in 0..node.dr {
                    for l in 0..node.dl {
                        for u in 0..node.du {
                            let w = node.data[node.idx(u, l, s, d)];
                            if w == 0.0 {
                                continue;
                            }
                            for b in 0..nb {
                                let src = &site.data[na * (s + site.np * b)..][..na];
                                let dst_base = na * u + new_na * (l + new_np * (b + nb * d));
                                let dst = &mut ws.buf0[dst_base..dst_base + na];
                                for i in 0..na {
                                    dst[i] += w * src[i];
                                }
                            }
                        }
                    }
                }
            }
            site.na = new_na;
            site.np = new_np;
            site.nb = new_nb;
            std::mem::swap(&mut site.data, &mut ws.buf0);
        }
    }

    /// Two-pass compression: a top-to-bottom QR sweep brings the state to
    /// left-canonical form (no truncation), then a bottom-to-top sweep
    /// truncates each bond in the now-whitened gauge -- exact LQ where the
    /// bond already fits in `chi`, Gram-based truncation to the `chi`
    /// dominant directions otherwise. The scale collects at site 0 and
    /// moves into the log accumulator.
    fn compress(&mut self, chi: usize, ws: &mut Workspace) {
        if self.zero {
            return;
        }
        for i in 0..self.sites.len() - 1 {
            let (head, tail) = self.sites.split_at_mut(i + 1);
            let site = head.last_mut().unwrap();
            let next = &mut tail[0];
            let m = site.na * site.np;
            let n = site.nb;
            let k = m.min(n);
            kernel::qr_thin(m, n, &mut site.data, &mut ws.buf0, &mut ws.buf1);
            std::mem::swap(&mut site.data, &mut ws.buf0);
            site.nb = k;
            debug_assert_eq!(next.na, n);
            kernel::matmul(k, n, next.np * next.nb, &ws.buf1, &next.data, &mut ws.buf0);
            std::mem::swap(&mut next.data, &mut ws.buf0);
            next.na = k;
        }
        for i in (1..self.sites.len()).rev() {
            let (head, tail) = self.sites.split_at_mut(i);
            let prev = head.last_mut().unwrap();
            let site = &mut tail[0];
            let rows = site.na;
            let cols = site.np * site.nb;
            let k;
            if rows <= chi {
                // carry (rows x k) stays in ws.buf1, Q (k x cols) replaces
                // the site.
                kernel::lq_thin(rows, cols, &site.data, &mut ws.buf1, &mut ws.buf0, &mut ws.scratch);
                k = rows.min(cols);
                std::mem::swap(&mut site.data, &mut ws.buf0);
            } else {
                kernel::gram(rows, cols, &site.data, &mut ws.buf0);
                kernel::sym_eigen_desc(rows, &mut ws.buf0, &mut ws.eig);
                let lead = ws.eig[0];
                if lead <= 0.0 {
                    self.zero = true;
                    return;
                }
                let cut = lead * 1e-28;
                let rank = ws.eig.iter().take_while(|&&v| v > cut).count().max(1);
                k = rank.min(chi);
                // Project: new site = normalized rows of U_k^T M; carry
                // columns are U_k scaled by those row norms.
                let u = &ws.buf0;
                ws.buf1.clear();
                ws.buf1.resize(k * cols, 0.0);
                for c in 0..cols {
                    let src = &site.data[c * rows..(c + 1) * rows];
                    for kk in 0..k {
                        let ucol = &u[kk * rows..(kk + 1) * rows];
                        ws.buf1[kk + k * c] = kernel::dot(ucol, src);
                    }
                }
                let mut norms = vec![0.0f64; k];
                for c in 0..cols {
                    for kk in 0..k {
                        let v = ws.buf1[kk + k * c];
                        norms[kk] += v * v;
                    }
                }
                for n in norms.iter_mut() {
                    *n = n.sqrt();
                }
                for c in 0..cols {
                    for kk in 0..k {
                        if norms[kk] > 0.0 {
                            ws.buf1[kk + k * c] /= norms[kk];
                        }
                    }
                }
                std::mem::swap(&mut site.data, &mut ws.buf1);
                // carry = U_k diag(norms), built in buf1.
                ws.buf1.clear();
                ws.buf1.resize(rows * k, 0.0);
                for kk in 0..k {
                    let ucol = &u[kk * rows..(kk + 1) * rows];
                    let dst = &mut ws.buf1[kk * rows..(kk + 1) * rows];
                    for r in 0..rows {
                        dst[r] = ucol[r] * norms[kk];
                    }
                }
            }
            site.na = k;
            self.max_bond = self.max_bond.max(k);
            // prev (na x np x nb=rows) times carry (rows x k).
            kernel::matmul(
                prev.na * prev.np,
                rows,
                k,
                &prev.data,
                &ws.buf1,
                &mut ws.buf0,
            );
            std::mem::swap(&mut prev.data, &mut ws.buf0);
            prev.nb = k;
        }
        let top = &mut self.sites[0];
        let norm = top.data.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            self.zero = true;
            return;
        }
        for v in top.data.iter_mut() {
            *v /= norm;
        }
        self.log_acc += norm.ln();
    }

    /// Absorbs the final column (physical legs of dimension 1) and chains
    /// the remaining bond matrices into the scalar value.
    fn finish(mut self, column: &[NodeTensor], ws: &mut Workspace) -> LogValue {
        self.absorb(column, ws);
        if self.zero {
            return LogValue::ZERO;
        }
        // v starts as the top site (1 x nb) and multiplies down the chain.
        let mut v = std::mem::take(&mut self.sites[0].data);
        debug_assert_eq!(self.sites[0].na * self.sites[0].np, 1);
        let mut len = self.sites[0].nb;
        for site in &self.sites[1..] {
            debug_assert_eq!(site.np, 1);
            debug_assert_eq!(site.na, len);
            ws.buf0.clear();
            ws.buf0.resize(site.nb, 0.0);
            for b in 0..site.nb {
                let col = &site.data[b * site.na..(b + 1) * site.na];
                ws.buf0[b] = kernel::dot(&v[..site.na], col);
            }
            std::mem::swap(&mut v, &mut ws.buf0);
            len = site.nb;
            let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            if scale == 0.0 {
                return LogValue::ZERO;
            }
            for x in v.iter_mut() {
                *x /= scale;
            }
            self.log_acc += scale.ln();
        }
        debug_assert_eq!(len, 1);
        let scalar = v[0];
        if scalar == 0.0 {
            return LogValue::ZERO;
        }
        LogValue {
            ln_abs: self.log_acc + scalar.abs().ln(),
            sign: if scalar > 0.0 { 1 } else { -1 },
        }
    }
}
