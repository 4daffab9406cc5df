//! Power-of-two complex FFTs.
//!
//! Transforms are unnormalized in both directions: `forward` uses the kernel
//! `e^{-2πi jk/n}`, `inverse` uses `e^{+2πi jk/n}`. Callers apply measures.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

/// Iterative radix-2 Cooley-Tukey plan for one length.
#[derive(Clone, Debug)]
pub struct Radix2 {
    len: usize,
    twiddles: Vec<Complex64>,
    bit_reverse: Vec<usize>,
}

impl Radix2 {
    /// Returns `None` unless `len` is a power of two.
    pub fn new(len: usize) -> Option<Self> {
        if len == 0 || !len.is_power_of_two() {
            return None;
        }
        let bits = len.trailing_zeros();
        let twiddles = (0..len / 2)
            .map(|k| {
                let theta = -2.0 * PI * k as f64 / len as f64;
                Complex64::new(theta.cos(), theta.sin())
            })
            .collect();
        let bit_reverse = (0..len)
            .map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (usize::BITS - bits) })
            .collect();
        Some(Self {
            len,
            twiddles,
            bit_reverse,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn forward(&self, buf: &mut [Complex64]) {
        self.process(buf, false);
    }

    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.process(buf, true);
    }

    fn process(&self, buf: &mut [Complex64], inverse: bool) {
        assert_eq!(buf.len(), self.len, "fft buffer length mismatch");
        for (i, &j) in self.bit_reverse.iter().enumerate() {
            if i < j {
                buf.swap(i, j);
            }
        }
        let mut size = 2;
        while size <= self.len {
            let half = size / 2;
            let stride = self.len / size;
            for start in (0..self.len).step_by(size) {
                for k in 0..half {
                    let w = self.twiddles[k * stride];
                    let w = if inverse { w.conj() } else { w };
                    let a = buf[start + k];
                    let b = buf[start + k + half] * w;
                    buf[start + k] = a + b;
                    buf[start + k + half] = a - b;
                }
            }
            size *= 2;
        }
    }
}

/// Separable transform over a row-major array (axis 0 slowest).
#[derive(Clone, Debug)]
pub struct NdFft {
    shape: Vec<usize>,
    plans: Vec<Radix2>,
}

impl NdFft {
    pub fn new(shape: &[usize]) -> Option<Self> {
        let plans = shape
            .iter()
            .map(|&n| Radix2::new(n))
            .collect::<Option<Vec<_>>>()?;
        Some(Self {
            shape: shape.to_vec(),
            plans,
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn total_len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.apply(data, false);
    }

    /// Unnormalized inverse; divide by [`NdFft::total_len`] to undo `forward`.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.apply(data, true);
    }

    fn apply(&self, data: &mut [Complex64], inverse: bool) {
        assert_eq!(data.len(), self.total_len(), "fft data length mismatch");
        let dims = self.shape.len();
        let mut scratch = Vec::new();
        for axis in 0..dims {
            let n = self.shape[axis];
            let plan = &self.plans[axis];
            let inner: usize = self.shape[axis + 1..].iter().product();
            let outer: usize = self.shape[..axis].iter().product();
            if inner == 1 {
                for line in data.chunks_exact_mut(n) {
                    plan.process(line, inverse);
                }
                continue;
            }
            if scratch.len() != n {
                scratch = vec![Complex64::new(0.0, 0.0); n];
            }
            for o in 0..outer {
                let base = o * n * inner;
                for i in 0..inner {
                    for (j, s) in scratch.iter_mut().enumerate() {
                        *s = data[base + j * inner + i];
                    }
                    plan.process(&mut scratch, inverse);
                    for (j, s) in scratch.iter().enumerate() {
                        data[base + j * inner + i] = *s;
                    }
                }
            }
        }
    }
}
