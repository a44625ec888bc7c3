//! Multidimensional FFTs on cubic grids and the helpers built on them
//! (wavenumbers, linear convolution, fractional Laplacian multipliers).

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Unnormalized forward / `1/M^d`-normalized inverse FFT over `M^d` samples.
pub struct FftNd {
    dims: usize,
    m: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl FftNd {
    pub fn new(dims: usize, m: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self { dims, m, fwd: planner.plan_fft_forward(m), inv: planner.plan_fft_inverse(m) }
    }

    pub fn len(&self) -> usize {
        self.m.pow(self.dims as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.fwd);
    }

    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inv);
        let scale = 1.0 / self.len() as f64;
        data.iter_mut().for_each(|v| *v *= scale);
    }

    fn transform(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        assert_eq!(data.len(), self.len(), "FFT buffer length mismatch");
        let m = self.m;
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        for axis in 0..self.dims {
            let stride = m.pow((self.dims - 1 - axis) as u32);
            if stride == 1 {
                plan.process_with_scratch(data, &mut scratch);
                continue;
            }
            let outer = data.len() / (m * stride);
            let mut buf = vec![Complex64::default(); m * stride];
            for o in 0..outer {
                let block = &mut data[o * m * stride..(o + 1) * m * stride];
                for j in 0..m {
                    for i in 0..stride {
                        buf[i * m + j] = block[j * stride + i];
                    }
                }
                plan.process_with_scratch(&mut buf, &mut scratch);
                for j in 0..m {
                    for i in 0..stride {
                        block[j * stride + i] = buf[i * m + j];
                    }
                }
            }
        }
    }
}

/// Angular wavenumbers of an `m`-point periodic grid of length `2 * half_width`.
/// The Nyquist index `m/2` is assigned `-π/h`.
pub fn wavenumbers(m: usize, half_width: f64) -> Vec<f64> {
    let base = std::f64::consts::PI / half_width;
    (0..m)
        .map(|j| {
            let s = if j < m / 2 { j as isize } else { j as isize - m as isize };
            base * s as f64
        })
        .collect()
}

pub fn to_complex(values: &[f64]) -> Vec<Complex64> {
    values.iter().map(|&v| Complex64::new(v, 0.0)).collect()
}

pub fn real_parts(values: &[Complex64]) -> Vec<f64> {
    values.iter().map(|c| c.re).collect()
}

fn pad_into(src: &[f64], m_src: usize, dims: usize, dst: &mut [Complex64], m_dst: usize) {
    let mut idx = vec![0usize; dims];
    for (flat, &v) in src.iter().enumerate() {
        let mut rem = flat;
        for a in (0..dims).rev() {
            idx[a] = rem % m_src;
            rem /= m_src;
        }
        let target = idx.iter().fold(0, |acc, &i| acc * m_dst + i);
        dst[target] = Complex64::new(v, 0.0);
    }
}

/// Full linear (non-periodic) convolution of two cubic arrays with `ma^d`
/// and `mb^d` entries. The result has `(ma + mb - 1)^d` entries; entry with
/// multi-index `i + j` collects `a[i] * b[j]`.
pub fn linear_convolution(a: &[f64], ma: usize, b: &[f64], mb: usize, dims: usize) -> (Vec<f64>, usize) {
    let out_m = ma + mb - 1;
    let p = out_m.next_power_of_two();
    let fft = FftNd::new(dims, p);
    let mut fa = vec![Complex64::default(); fft.len()];
    let mut fb = vec![Complex64::default(); fft.len()];
    pad_into(a, ma, dims, &mut fa, p);
    pad_into(b, mb, dims, &mut fb, p);
    fft.forward(&mut fa);
    fft.forward(&mut fb);
    fa.iter_mut().zip(&fb).for_each(|(x, y)| *x *= y);
    fft.inverse(&mut fa);
    let mut out = vec![0.0; out_m.pow(dims as u32)];
    let mut idx = vec![0usize; dims];
    for (flat, o) in out.iter_mut().enumerate() {
        let mut rem = flat;
        for a in (0..dims).rev() {
            idx[a] = rem % out_m;
            rem /= out_m;
        }
        let src = idx.iter().fold(0, |acc, &i| acc * p + i);
        *o = fa[src].re;
    }
    (out, out_m)
}

/// Applies the periodic multiplier `|k|^s` (zero mode mapped to zero) to a
/// real field with `m^d` samples on a box of half width `half_width`.
pub fn fractional_laplacian(values: &[f64], dims: usize, m: usize, half_width: f64, s: f64) -> Vec<f64> {
    let fft = FftNd::new(dims, m);
    let mut data = to_complex(values);
    fft.forward(&mut data);
    let k = wavenumbers(m, half_width);
    let mut idx = vec![0usize; dims];
    for (flat, v) in data.iter_mut().enumerate() {
        let mut rem = flat;
        for a in (0..dims).rev() {
            idx[a] = rem % m;
            rem /= m;
        }
        let k2: f64 = idx.iter().map(|&i| k[i] * k[i]).sum();
        if k2 == 0.0 {
            *v = Complex64::default();
        } else {
            *v *= k2.powf(0.5 * s);
        }
    }
    fft.inverse(&mut data);
    real_parts(&data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_3d() {
        let fft = FftNd::new(3, 8);
        let orig: Vec<Complex64> =
            (0..fft.len()).map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64).cos())).collect();
        let mut data = orig.clone();
        fft.forward(&mut data);
        fft.inverse(&mut data);
        for (a, b) in data.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn linear_convolution_matches_direct_sum() {
        let a = [1.0, 2.0, -1.0];
        let b = [0.5, 3.0];
        let (c, m) = linear_convolution(&a, 3, &b, 2, 1);
        assert_eq!(m, 4);
        let expect = [0.5, 4.0, 5.5, -3.0];
        for (x, y) in c.iter().zip(expect) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn fractional_laplacian_of_single_mode() {
        let m = 32;
        let l = std::f64::consts::PI;
        let xs: Vec<f64> = (0..m).map(|i| -l + (i as f64 + 0.5) * 2.0 * l / m as f64).collect();
        let vals: Vec<f64> = xs.iter().map(|x| (3.0 * x).cos()).collect();
        let out = fractional_laplacian(&vals, 1, m, l, 0.5);
        for (o, x) in out.iter().zip(&xs) {
            assert!((o - 3f64.sqrt() * (3.0 * x).cos()).abs() < 1e-12);
        }
    }
}
