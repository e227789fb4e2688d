//! Row-level kernels shared by the graph ops and the streaming session.
//!
//! Batch forward and streaming inference must agree bit for bit, so both
//! paths call these functions and accumulate in the same order.

/// `out = a_row · b` where `b` is `k × n` row-major and `a_row.len() == k`.
pub(crate) fn matmul_row(a_row: &[f64], b: &[f64], n: usize, out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    for (p, &a) in a_row.iter().enumerate() {
        let b_row = &b[p * n..(p + 1) * n];
        for (o, &bv) in out.iter_mut().zip(b_row) {
            *o += a * bv;
        }
    }
}

pub(crate) fn add_in_place(out: &mut [f64], other: &[f64]) {
    for (o, &v) in out.iter_mut().zip(other) {
        *o += v;
    }
}

pub(crate) fn relu_in_place(out: &mut [f64]) {
    for v in out.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}

/// One output frame of a causal dilated convolution.
///
/// Kernel tap `j` reads frame `t - (k - 1 - j) * dilation`; taps that fall
/// before frame 0 read the implicit zero padding and are skipped.
/// `w` is laid out `k × d_in × d_out`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn conv_frame<'a>(
    t: usize,
    kernel: usize,
    dilation: usize,
    d_in: usize,
    d_out: usize,
    w: &[f64],
    row_at: impl Fn(usize) -> &'a [f64],
    out: &mut [f64],
) {
    out.iter_mut().for_each(|v| *v = 0.0);
    for j in 0..kernel {
        let offset = (kernel - 1 - j) * dilation;
        if offset > t {
            continue;
        }
        let x = row_at(t - offset);
        for (i, &xi) in x.iter().enumerate().take(d_in) {
            let w_row = &w[(j * d_in + i) * d_out..(j * d_in + i + 1) * d_out];
            for (o, &wv) in out.iter_mut().zip(w_row) {
                *o += xi * wv;
            }
        }
    }
}

/// Key positions visible to query `t` under hierarchical causal windowing.
///
/// The timeline is split into consecutive windows of length `window`. A
/// query sees the window preceding its own plus its own window up to and
/// including itself. Returns the half-open range `[start, t + 1)`.
pub fn key_range(t: usize, window: usize) -> std::ops::Range<usize> {
    let block_start = (t / window) * window;
    block_start.saturating_sub(window)..t + 1
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        s += x * y;
    }
    s
}

/// Attention for a single query over the keys in `range`.
///
/// Writes the normalised weights into `probs` (one per key, in order) and
/// the weighted value sum into `out`.
pub(crate) fn attend_row<'a, 'b>(
    q: &[f64],
    range: std::ops::Range<usize>,
    scale: f64,
    key_at: impl Fn(usize) -> &'a [f64],
    value_at: impl Fn(usize) -> &'b [f64],
    probs: &mut Vec<f64>,
    out: &mut [f64],
) {
    probs.clear();
    let mut max = f64::NEG_INFINITY;
    for j in range.clone() {
        let s = dot(q, key_at(j)) * scale;
        if s > max {
            max = s;
        }
        probs.push(s);
    }
    let mut z = 0.0;
    for p in probs.iter_mut() {
        *p = (*p - max).exp();
        z += *p;
    }
    for p in probs.iter_mut() {
        *p /= z;
    }
    out.iter_mut().for_each(|v| *v = 0.0);
    for (j, &p) in range.zip(probs.iter()) {
        for (o, &v) in out.iter_mut().zip(value_at(j)) {
            *o += p * v;
        }
    }
}

pub(crate) fn softmax_row(x: &[f64], out: &mut [f64]) {
    let max = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut z = 0.0;
    for (o, &v) in out.iter_mut().zip(x) {
        *o = (v - max).exp();
        z += *o;
    }
    for o in out.iter_mut() {
        *o /= z;
    }
}

pub(crate) fn log_softmax_row(x: &[f64], out: &mut [f64]) {
    let max = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = x.iter().map(|&v| (v - max).exp()).sum();
    let log_z = max + z.ln();
    for (o, &v) in out.iter_mut().zip(x) {
        *o = v - log_z;
    }
}
