//! Scalar reference implementations used as correctness oracles.

use std::f64::consts::PI;

/// Wraparound int16 dot product.
pub fn dot_reference(a: &[i16], b: &[i16]) -> i16 {
    a.iter().zip(b).fold(0i16, |acc, (x, y)| acc.wrapping_add(x.wrapping_mul(*y)))
}

/// `a * x[i] + y[i]` with int16 wraparound.
pub fn axpy_reference(a: i16, x: &[i16], y: &[i16]) -> Vec<i16> {
    x.iter().zip(y).map(|(x, y)| a.wrapping_mul(*x).wrapping_add(*y)).collect()
}

pub fn bit_reverse(i: usize, bits: u32) -> usize {
    if bits == 0 {
        0
    } else {
        i.reverse_bits() >> (usize::BITS - bits)
    }
}

/// Q15 twiddles `W_n^k` for `k < n/2`: `round(cos * 32767)` and
/// `round(-sin * 32767)`.
pub fn twiddles(n: usize) -> (Vec<i32>, Vec<i32>) {
    (0..n / 2)
        .map(|k| {
            let angle = 2.0 * PI * k as f64 / n as f64;
            ((angle.cos() * 32767.0).round() as i32, (-angle.sin() * 32767.0).round() as i32)
        })
        .unzip()
}

/// Q15 complex product rounded back to Q15.
pub fn q15_twiddle_mul(b_re: i32, b_im: i32, w_re: i32, w_im: i32) -> (i32, i32) {
    let re = b_re.wrapping_mul(w_re).wrapping_sub(b_im.wrapping_mul(w_im)).wrapping_add(1 << 14) >> 15;
    let im = b_re.wrapping_mul(w_im).wrapping_add(b_im.wrapping_mul(w_re)).wrapping_add(1 << 14) >> 15;
    (re, im)
}

/// Radix-2 decimation-in-time FFT over Q15 values held in `i32`, halving
/// after every stage so the result is the DFT divided by `n`.
pub fn fft_reference(re: &[i32], im: &[i32]) -> (Vec<i32>, Vec<i32>) {
    let n = re.len();
    assert!(n.is_power_of_two() && im.len() == n, "fft length must be a power of two");
    let bits = n.trailing_zeros();
    let (w_re, w_im) = twiddles(n);
    let mut xr: Vec<i32> = (0..n).map(|i| re[bit_reverse(i, bits)]).collect();
    let mut xi: Vec<i32> = (0..n).map(|i| im[bit_reverse(i, bits)]).collect();
    let mut m = 1;
    while m < n {
        let step = n / (2 * m);
        for block in (0..n).step_by(2 * m) {
            for j in 0..m {
                let (top, bot) = (block + j, block + j + m);
                let (t_re, t_im) = q15_twiddle_mul(xr[bot], xi[bot], w_re[j * step], w_im[j * step]);
                let (a_re, a_im) = (xr[top], xi[top]);
                xr[top] = a_re.wrapping_add(t_re) >> 1;
                xi[top] = a_im.wrapping_add(t_im) >> 1;
                xr[bot] = a_re.wrapping_sub(t_re) >> 1;
                xi[bot] = a_im.wrapping_sub(t_im) >> 1;
            }
        }
        m *= 2;
    }
    (xr, xi)
}

/// Direct O(n²) DFT in double precision.
pub fn dft_f64(re: &[f64], im: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = re.len();
    (0..n)
        .map(|k| {
            (0..n).fold((0.0, 0.0), |(sr, si), t| {
                let a = -2.0 * PI * (k * t % n) as f64 / n as f64;
                let (c, s) = (a.cos(), a.sin());
                (sr + re[t] * c - im[t] * s, si + re[t] * s + im[t] * c)
            })
        })
        .unzip()
}
