//! Loop kernels for same-padded stride-1 convolution and 2x2 max pooling.
//!
//! Convolutions go through im2col and a GEMM; pooling walks row slices.

/// Output rows/cols `y` with `0 <= y + d < n`.
#[inline]
fn valid_range(n: usize, d: isize) -> (usize, usize) {
    let lo = (-d).max(0) as usize;
    let hi = (n as isize - d).clamp(0, n as isize) as usize;
    (lo, hi.max(lo))
}

pub(crate) struct ConvGeom {
    pub in_c: usize,
    pub out_c: usize,
    pub k: usize,
    pub h: usize,
    pub w: usize,
}

impl ConvGeom {
    #[cfg(test)]
    fn w_index(&self, o: usize, i: usize, ky: usize, kx: usize) -> usize {
        ((o * self.in_c + i) * self.k + ky) * self.k + kx
    }

    fn offsets(&self) -> impl Iterator<Item = (usize, usize, isize, isize)> + '_ {
        let p = (self.k / 2) as isize;
        (0..self.k).flat_map(move |ky| {
            (0..self.k).map(move |kx| (ky, kx, ky as isize - p, kx as isize - p))
        })
    }
}

/// Unfolds the input into a `(in_c * k * k) x (h * w)` row-major matrix,
/// zero where the window leaves the image.
fn im2col(g: &ConvGeom, input: &[f64]) -> Vec<f64> {
    let hw = g.h * g.w;
    let kk = g.k * g.k;
    let mut cols = vec![0.0; g.in_c * kk * hw];
    for i in 0..g.in_c {
        let src = &input[i * hw..(i + 1) * hw];
        for (ky, kx, dy, dx) in g.offsets() {
            let row = &mut cols[((i * g.k + ky) * g.k + kx) * hw..][..hw];
            let (y0, y1) = valid_range(g.h, dy);
            let (x0, x1) = valid_range(g.w, dx);
            let span = x1 - x0;
            for y in y0..y1 {
                let sy = (y as isize + dy) as usize;
                let sx = (x0 as isize + dx) as usize;
                row[y * g.w + x0..y * g.w + x1]
                    .copy_from_slice(&src[sy * g.w + sx..sy * g.w + sx + span]);
            }
        }
    }
    cols
}

/// Adds the columns back onto their source pixels.
fn col2im_add(g: &ConvGeom, cols: &[f64], grad_in: &mut [f64]) {
    let hw = g.h * g.w;
    for i in 0..g.in_c {
        let dst = &mut grad_in[i * hw..(i + 1) * hw];
        for (ky, kx, dy, dx) in g.offsets() {
            let row = &cols[((i * g.k + ky) * g.k + kx) * hw..][..hw];
            let (y0, y1) = valid_range(g.h, dy);
            let (x0, x1) = valid_range(g.w, dx);
            let span = x1 - x0;
            for y in y0..y1 {
                let sy = (y as isize + dy) as usize;
                let sx = (x0 as isize + dx) as usize;
                let d = &mut dst[sy * g.w + sx..sy * g.w + sx + span];
                for (a, b) in d.iter_mut().zip(&row[y * g.w + x0..y * g.w + x1]) {
                    *a += b;
                }
            }
        }
    }
}

/// Row-major `c = beta * c + a b` with explicit strides.
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    (rsa, csa): (isize, isize),
    b: &[f64],
    (rsb, csb): (isize, isize),
    beta: f64,
    c: &mut [f64],
) {
    debug_assert!(c.len() >= m * n);
    // SAFETY: every index the strides reach lies inside the slices: a is
    // m x k, b is k x n and c is m x n, as asserted by the callers' sizes.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

pub(crate) fn conv_forward(
    g: &ConvGeom,
    weight: &[f64],
    bias: &[f64],
    input: &[f64],
    out: &mut [f64],
) {
    let hw = g.h * g.w;
    let kdim = g.in_c * g.k * g.k;
    assert!(
        weight.len() == g.out_c * kdim && input.len() == g.in_c * hw && out.len() == g.out_c * hw
    );
    for (plane, &b) in out.chunks_exact_mut(hw).zip(bias) {
        plane.fill(b);
    }
    let cols = im2col(g, input);
    gemm(
        g.out_c,
        kdim,
        hw,
        weight,
        (kdim as isize, 1),
        &cols,
        (hw as isize, 1),
        1.0,
        out,
    );
}

/// Accumulates parameter gradients and, when `grad_in` is given, the input
/// gradient of a convolution.
pub(crate) fn conv_backward(
    g: &ConvGeom,
    weight: &[f64],
    input: &[f64],
    grad_out: &[f64],
    grad_in: Option<&mut [f64]>,
    grad_params: Option<(&mut [f64], &mut [f64])>,
) {
    let hw = g.h * g.w;
    let kdim = g.in_c * g.k * g.k;
    assert!(
        weight.len() == g.out_c * kdim
            && input.len() == g.in_c * hw
            && grad_out.len() == g.out_c * hw
    );
    if let Some((gw, gb)) = grad_params {
        assert!(gw.len() == weight.len() && gb.len() == g.out_c);
        for (b, go) in gb.iter_mut().zip(grad_out.chunks_exact(hw)) {
            *b += go.iter().sum::<f64>();
        }
        let cols = im2col(g, input);
        // dW += dY colsᵀ
        gemm(
            g.out_c,
            hw,
            kdim,
            grad_out,
            (hw as isize, 1),
            &cols,
            (1, hw as isize),
            1.0,
            gw,
        );
    }
    if let Some(gi) = grad_in {
        assert!(gi.len() == g.in_c * hw);
        // dcols = Wᵀ dY
        let mut dcols = vec![0.0; kdim * hw];
        gemm(
            kdim,
            g.out_c,
            hw,
            weight,
            (1, kdim as isize),
            grad_out,
            (hw as isize, 1),
            0.0,
            &mut dcols,
        );
        col2im_add(g, &dcols, gi);
    }
}

/// 2x2 stride-2 max pooling. Returns the flat input index of each maximum
/// (first one in scan order on ties).
pub(crate) fn maxpool_forward(
    c: usize,
    h: usize,
    w: usize,
    input: &[f64],
    out: &mut [f64],
) -> Vec<usize> {
    let (oh, ow) = (h / 2, w / 2);
    let mut arg = vec![0usize; c * oh * ow];
    for ch in 0..c {
        let base = ch * h * w;
        for y in 0..oh {
            for x in 0..ow {
                let cands = [
                    base + 2 * y * w + 2 * x,
                    base + 2 * y * w + 2 * x + 1,
                    base + (2 * y + 1) * w + 2 * x,
                    base + (2 * y + 1) * w + 2 * x + 1,
                ];
                let mut best = cands[0];
                for &ci in &cands[1..] {
                    if input[ci] > input[best] {
                        best = ci;
                    }
                }
                let oi = (ch * oh + y) * ow + x;
                out[oi] = input[best];
                arg[oi] = best;
            }
        }
    }
    arg
}
