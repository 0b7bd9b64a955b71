//! Small dense linear algebra for the contraction hot path.
//!
//! The boundary-MPS sweep factors thousands of matrices no larger than
//! (2 chi) x (4 chi) per decode, so everything here is written directly on
//! column-major `Vec<f64>` buffers with slice-based inner loops: Householder
//! QR/LQ for exact re-canonicalization and a tridiagonal symmetric
//! eigensolver (classic Householder reduction plus implicit-shift QL) used
//! to truncate bonds via the Gram matrix.

/// Column-major matrix entry index.
#[inline(always)]
fn at(rows: usize, r: usize, c: usize) -> usize {
    r + rows * c
}


/// Dot product with four accumulators so the reduction vectorizes.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let n = a.len();
    let chunks = n / 4;
    let (mut s0, mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..chunks {
        let j = 4 * i;
        s0 += a[j] * b[j];
        s1 += a[j + 1] * b[j + 1];
        s2 += a[j + 2] * b[j + 2];
        s3 += a[j + 3] * b[j + 3];
    }
    let mut s = (s0 + s1) + (s2 + s3);
    for i in 4 * chunks..n {
        s += a[i] * b[i];
    }
    s
}

/// C = A (m x k) * B (k x n), column-major, C overwritten.
pub fn matmul(m: usize, k: usize, n: usize, a: &[f64], b: &[f64], c: &mut Vec<f64>) {
    c.clear();
    c.resize(m * n, 0.0);
    debug_assert!(a.len() >= m * k && b.len() >= k * n);
    // Four output columns per pass so each A column load feeds four FMAs.
    let mut j = 0;
    while j + 4 <= n {
        let (c0, rest) = c[j * m..].split_at_mut(m);
        let (c1, rest) = rest.split_at_mut(m);
        let (c2, c3) = rest.split_at_mut(m);
        let c3 = &mut c3[..m];
        for l in 0..k {
            let col_a = &a[l * m..(l + 1) * m];
            let b0 = b[at(k, l, j)];
            let b1 = b[at(k, l, j + 1)];
            let b2 = b[at(k, l, j + 2)];
            let b3 = b[at(k, l, j + 3)];
            if b0 == 0.0 && b1 == 0.0 && b2 == 0.0 && b3 == 0.0 {
                continue;
            }
            for i in 0..m {
                let v = col_a[i];
                c0[i] += v * b0;
                c1[i] += v * b1;
                c2[i] += v * b2;
                c3[i] += v * b3;
            }
        }
        j += 4;
    }
    while j < n {
        let col_c = &mut c[j * m..(j + 1) * m];
        for l in 0..k {
            let blj = b[at(k, l, j)];
            if blj == 0.0 {
                continue;
            }
            let col_a = &a[l * m..(l + 1) * m];
            for i in 0..m {
                col_c[i] += col_a[i] * blj;
            }
        }
        j += 1;
    }
}

pub fn transpose(rows: usize, cols: usize, a: &[f64], out: &mut Vec<f64>) {
    out.clear();
    out.resize(rows * cols, 0.0);
    for c in 0..cols {
        for r in 0..rows {
            out[at(cols, c, r)] = a[at(rows, r, c)];
        }
    }
}

/// Thin Householder QR of an m x n matrix: A = Q R with Q m x k
/// column-orthonormal and R k x n upper-trapezoidal, k = min(m, n).
///
/// `a` is consumed as scratch. Outputs are written into `q` and `r`.
pub fn qr_thin(m: usize, n: usize, a: &mut [f64], q: &mut Vec<f64>, r: &mut Vec<f64>) {
    let k = m.min(n);
    let mut tau = [0.0f64; 256];
    debug_assert!(k <= 256);
    for j in 0..k {
        let (head, tail) = a.split_at_mut((j + 1) * m);
        let col_j = &mut head[j * m..];
        // Householder reflector for column j below the diagonal. The norm
        // is computed with the column rescaled by its largest entry: these
        // matrices carry products of channel probabilities whose squares
        // underflow long before the entries do, and an underflown norm
        // produces a non-orthogonal reflector that corrupts O(1) trailing
        // columns.
        let mut amax = 0.0f64;
        for &v in &col_j[j..m] {
            amax = amax.max(v.abs());
        }
        if amax == 0.0 {
            tau[j] = 0.0;
            continue;
        }
        let inv_amax = 1.0 / amax;
        let mut ssq = 0.0;
        for &v in &col_j[j..m] {
            let t = v * inv_amax;
            ssq += t * t;
        }
        let norm = amax * ssq.sqrt();
        let alpha = col_j[j];
        let sign = if alpha >= 0.0 { 1.0 } else { -1.0 };
        let w0 = alpha + sign * norm;
        tau[j] = sign * w0 / norm;
        for v in &mut col_j[j + 1..m] {
            *v /= w0;
        }
        col_j[j] = -sign * norm;
        let v = &col_j[j + 1..m];
        // Apply (I - tau u u^T), u = (1, v), to the trailing columns.
        for col_c in tail.chunks_exact_mut(m) {
            let mut s = col_c[j] + dot(v, &col_c[j + 1..m]);
            s *= tau[j];
            col_c[j] -= s;
            for (vi, ci) in v.iter().zip(&mut col_c[j + 1..m]) {
                *ci -= s * vi;
            }
        }
    }

    r.clear();
    r.resize(k * n, 0.0);
    for c in 0..n {
        for i in 0..=c.min(k - 1) {
            r[at(k, i, c)] = a[at(m, i, c)];
        }
    }

    // Accumulate the thin Q by applying reflectors to the first k columns
    // of the identity, last reflector first.
    q.clear();
    q.resize(m * k, 0.0);
    for j in 0..k {
        q[at(m, j, j)] = 1.0;
    }
    for j in (0..k).rev() {
        if tau[j] == 0.0 {
            continue;
        }
        let (aj, qcols) = (&a[j * m..(j + 1) * m], &mut q[j * m..]);
        let v = &aj[j + 1..m];
        for col_c in qcols.chunks_exact_mut(m) {
            let mut s = col_c[j] + dot(v, &col_c[j + 1..m]);
            s *= tau[j];
            col_c[j] -= s;
            for (vi, ci) in v.iter().zip(&mut col_c[j + 1..m]) {
                *ci -= s * vi;
            }
        }
    }
}

/// Thin LQ of an m x n matrix: A = L Q with L m x k lower-trapezoidal and
/// Q k x n row-orthonormal, k = min(m, n). Computed as the transposed QR of
/// the transpose.
pub fn lq_thin(
    m: usize,
    n: usize,
    a: &[f64],
    l: &mut Vec<f64>,
    q: &mut Vec<f64>,
    scratch: &mut Scratch,
) {
    let k = m.min(n);
    transpose(m, n, a, &mut scratch.t0);
    qr_thin(n, m, &mut scratch.t0, &mut scratch.t1, &mut scratch.t2);
    transpose(n, k, &scratch.t1, q);
    transpose(k, m, &scratch.t2, l);
}

/// Reusable buffers for kernel operations.
#[derive(Default)]
pub struct Scratch {
    pub t0: Vec<f64>,
    pub t1: Vec<f64>,
    pub t2: Vec<f64>,
}

/// Householder reduction of a symmetric matrix to tridiagonal form with
/// accumulation of the transformation; `z` holds the matrix on input and
/// the orthogonal transformation on output.
fn tred2(n: usize, z: &mut [f64], d: &mut [f64], e: &mut [f64]) {
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        if l > 0 {
            let mut scale = 0.0;
            for k in 0..=l {
                scale += z[at(n, i, k)].abs();
            }
            if scale == 0.0 {
                e[i] = z[at(n, i, l)];
            } else {
                for k in 0..=l {
                    z[at(n, i, k)] /= scale;
                    h += z[at(n, i, k)] * z[at(n, i, k)];
                }
                let f = z[at(n, i, l)];
                let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                z[at(n, i, l)] = f - g;
                let mut fsum = 0.0;
                for j in 0..=l {
                    z[at(n, j, i)] = z[at(n, i, j)] / h;
                    let mut g = 0.0;
                    for k in 0..=j {
                        g += z[at(n, j, k)] * z[at(n, i, k)];
                    }
                    for k in (j + 1)..=l {
                        g += z[at(n, k, j)] * z[at(n, i, k)];
                    }
                    e[j] = g / h;
                    fsum += e[j] * z[at(n, i, j)];
                }
                let hh = fsum / (h + h);
                for j in 0..=l {
                    let f = z[at(n, i, j)];
                    let g = e[j] - hh * f;
                    e[j] = g;
                    for k in 0..=j {
                        z[at(n, j, k)] -= f * e[k] + g * z[at(n, i, k)];
                    }
                }
            }
        } else {
            e[i] = z[at(n, i, l)];
        }
        d[i] = h;
    }
    d[0] = 0.0;
    e[0] = 0.0;
    for i in 0..n {
        if d[i] != 0.0 {
            for j in 0..i {
                let mut g = 0.0;
                for k in 0..i {
                    g += z[at(n, i, k)] * z[at(n, k, j)];
                }
                let (cj, ci) = {
                    let (lo, hi) = z.split_at_mut(i * n);
                    (&mut lo[j * n..j * n + n], &hi[..n])
                };
                for k in 0..i {
                    cj[k] -= g * ci[k];
                }
            }
        }
        d[i] = z[at(n, i, i)];
        z[at(n, i, i)] = 1.0;
        for j in 0..i {
            z[at(n, j, i)] = 0.0;
            z[at(n, i, j)] = 0.0;
        }
    }
}

/// Implicit-shift QL iteration on a symmetric tridiagonal matrix with
/// eigenvector accumulation.
fn tql2(n: usize, d: &mut [f64], e: &mut [f64], z: &mut [f64]) {
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            assert!(iter <= 60, "tridiagonal QL failed to converge");
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut underflow = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = i > l;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                // Rotate eigenvector columns i and i+1 (contiguous).
                let (lo, hi) = z.split_at_mut((i + 1) * n);
                let zi = &mut lo[i * n..];
                let zi1 = &mut hi[..n];
                for (a, b) in zi.iter_mut().zip(zi1.iter_mut()) {
                    f = *b;
                    *b = s * *a + c * f;
                    *a = c * *a - s * f;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
}

/// Eigendecomposition of a symmetric matrix, eigenvalues descending with
/// matching eigenvector columns left in `g`.
pub fn sym_eigen_desc(n: usize, g: &mut [f64], eigvals: &mut Vec<f64>) {
    debug_assert_eq!(g.len(), n * n);
    eigvals.clear();
    eigvals.resize(n, 0.0);
    if n == 0 {
        return;
    }
    if n == 1 {
        eigvals[0] = g[0];
        g[0] = 1.0;
        return;
    }
    let mut e = [0.0f64; 256];
    debug_assert!(n <= 256);
    tred2(n, g, eigvals, &mut e);
    tql2(n, eigvals, &mut e, g);
    // Selection sort descending, swapping eigenvector columns alongside.
    for i in 0..n {
        let mut best = i;
        for j in (i + 1)..n {
            if eigvals[j] > eigvals[best] {
                best = j;
            }
        }
        if best != i {
            eigvals.swap(i, best);
            for r in 0..n {
                g.swap(at(n, r, i), at(n, r, best));
            }
        }
    }
}

/// G = M M^T for an m x n matrix (symmetric m x m output).
pub fn gram(m: usize, n: usize, a: &[f64], g: &mut Vec<f64>) {
    g.clear();
    g.resize(m * m, 0.0);
    for c in 0..n {
        let col = &a[c * m..(c + 1) * m];
        for j in 0..m {
            let v = col[j];
            if v == 0.0 {
                continue;
            }
            let gcol = &mut g[j * m..(j + 1) * m];
            for i in j..m {
                gcol[i] += col[i] * v;
            }
        }
    }
    // Mirror the lower triangle.
    for j in 0..m {
        for i in (j + 1)..m {
            g[at(m, j, i)] = g[at(m, i, j)];
        }
    }
}
