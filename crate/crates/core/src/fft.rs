//! Mixed-radix decimation-in-time FFT.
//!
//! `N` is split into its prime factors; each stage combines `p` interleaved
//! sub-transforms with a `p`-point DFT. Powers of two run as plain radix-2,
//! prime lengths degrade to direct `O(N^2)` summation.
//!
//! Normalization is fixed: the forward transform is unscaled, the inverse
//! carries the `1/N`.

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::TAU;
use std::rc::Rc;

use num_complex::Complex64;

#[derive(Debug, Clone)]
pub struct FftPlan {
    n: usize,
    factors: Vec<usize>,
    /// `exp(-j*2*pi*e/N)` for `e` in `0..N`.
    twiddles: Vec<Complex64>,
    max_radix: usize,
}

impl FftPlan {
    /// # Panics
    /// If `n == 0`.
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "transform length must be positive");
        let factors = factorize(n);
        let twiddles = (0..n)
            .map(|e| {
                let (s, c) = (-TAU * e as f64 / n as f64).sin_cos();
                Complex64::new(c, s)
            })
            .collect();
        let max_radix = factors.iter().copied().max().unwrap_or(1);
        FftPlan { n, factors, twiddles, max_radix }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn factors(&self) -> &[usize] {
        &self.factors
    }

    /// `output[k] = sum_n input[n] * exp(-j*2*pi*k*n/N)`.
    pub fn forward(&self, input: &[Complex64], output: &mut [Complex64]) {
        assert_eq!(input.len(), self.n);
        assert_eq!(output.len(), self.n);
        let mut scratch = vec![Complex64::new(0.0, 0.0); 2 * self.max_radix];
        self.stage(input, 1, output, &self.factors, &mut scratch);
    }

    /// `output[n] = (1/N) * sum_k input[k] * exp(j*2*pi*k*n/N)`.
    pub fn inverse(&self, input: &[Complex64], output: &mut [Complex64]) {
        let conj: Vec<Complex64> = input.iter().map(|c| c.conj()).collect();
        self.forward(&conj, output);
        let scale = 1.0 / self.n as f64;
        for v in output.iter_mut() {
            *v = v.conj() * scale;
        }
    }

    fn stage(
        &self,
        input: &[Complex64],
        stride: usize,
        out: &mut [Complex64],
        factors: &[usize],
        scratch: &mut [Complex64],
    ) {
        let n = out.len();
        if n == 1 {
            out[0] = input[0];
            return;
        }
        let p = factors[0];
        let m = n / p;
        for q in 0..p {
            self.stage(&input[q * stride..], stride * p, &mut out[q * m..(q + 1) * m], &factors[1..], scratch);
        }
        // exp(-j*2*pi*e/n) is twiddles[e * step] for e < n.
        let step = self.n / n;
        if p == 2 {
            for k in 0..m {
                let a = out[k];
                let b = out[k + m] * self.twiddles[k * step];
                out[k] = a + b;
                out[k + m] = a - b;
            }
            return;
        }
        let (tmp, roots) = scratch.split_at_mut(p);
        let root_step = self.n / p;
        for (j, r) in roots[..p].iter_mut().enumerate() {
            *r = self.twiddles[j * root_step];
        }
        for k in 0..m {
            for (q, t) in tmp.iter_mut().enumerate() {
                *t = out[q * m + k] * self.twiddles[q * k * step];
            }
            for s in 0..p {
                let mut acc = tmp[0];
                let mut e = 0;
                for &t in &tmp[1..] {
                    e += s;
                    if e >= p {
                        e -= p;
                    }
                    acc += t * roots[e];
                }
                out[k + s * m] = acc;
            }
        }
    }
}

/// Prime factors of `n` in ascending order (empty for 1).
fn factorize(mut n: usize) -> Vec<usize> {
    let mut factors = Vec::new();
    let mut d = 2;
    while d * d <= n {
        while n.is_multiple_of(d) {
            factors.push(d);
            n /= d;
        }
        d += 1;
    }
    if n > 1 {
        factors.push(n);
    }
    factors
}

thread_local! {
    static PLANS: RefCell<HashMap<usize, Rc<FftPlan>>> = RefCell::new(HashMap::new());
}

/// Per-thread cached plan for length `n`.
pub fn plan(n: usize) -> Rc<FftPlan> {
    PLANS.with(|plans| {
        plans
            .borrow_mut()
            .entry(n)
            .or_insert_with(|| Rc::new(FftPlan::new(n)))
            .clone()
    })
}
