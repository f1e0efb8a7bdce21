//! Single-threaded throughput of the transform and decode hot paths.

use std::hint::black_box;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::codec::{decode_polar, dft, encode_polar, idft_real, TruncationMode};
use crate::radial::RadialContour;
use crate::{Point, Result};

pub const DEFAULT_SIZES: [usize; 3] = [32, 90, 256];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BenchOp {
    Dft,
    Idft,
    Decode,
}

impl BenchOp {
    pub const ALL: [BenchOp; 3] = [BenchOp::Dft, BenchOp::Idft, BenchOp::Decode];

    pub fn name(&self) -> &'static str {
        match self {
            BenchOp::Dft => "dft",
            BenchOp::Idft => "idft",
            BenchOp::Decode => "decode",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BenchResult {
    pub op: BenchOp,
    pub n: usize,
    pub iterations: u64,
    pub ns_per_op: f64,
    pub ops_per_sec: f64,
}

/// Times `op` at size `n` for at least `budget`, after a short warm-up.
/// `decode` is a full polar decode (inverse DFT, clamping, contour
/// construction) of a descriptor keeping `min(36, N/2 + 1)` coefficients.
pub fn measure(op: BenchOp, n: usize, budget: Duration) -> Result<BenchResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
    let rays: Vec<f64> = (0..n).map(|_| rng.gen_range(10.0..30.0)).collect();
    let spectrum = dft(&rays);
    let kept = TruncationMode::Symmetric.max_kept(n).min(crate::DEFAULT_COEFFS);
    let descriptor = encode_polar(&RadialContour::new(Point::ORIGIN, rays.clone())?, kept, TruncationMode::Symmetric)?;
    let center = Point::new(100.0, 100.0);

    let run = |iters: u64| -> Result<Duration> {
        let start = Instant::now();
        for _ in 0..iters {
            match op {
                BenchOp::Dft => {
                    black_box(dft(black_box(&rays)));
                }
                BenchOp::Idft => {
                    black_box(idft_real(black_box(&spectrum)));
                }
                BenchOp::Decode => {
                    black_box(decode_polar(black_box(&descriptor), center)?);
                }
            }
        }
        Ok(start.elapsed())
    };

    run(64)?;
    let mut iterations = 0u64;
    let mut elapsed = Duration::ZERO;
    let mut batch = 256u64;
    while elapsed < budget {
        elapsed += run(batch)?;
        iterations += batch;
        batch = (batch * 2).min(1 << 20);
    }
    let secs = elapsed.as_secs_f64();
    Ok(BenchResult {
        op,
        n,
        iterations,
        ns_per_op: secs * 1e9 / iterations as f64,
        ops_per_sec: iterations as f64 / secs,
    })
}

pub fn run_suite(sizes: &[usize], budget: Duration) -> Result<Vec<BenchResult>> {
    let mut out = Vec::new();
    for &n in sizes {
        for op in BenchOp::ALL {
            out.push(measure(op, n, budget)?);
        }
    }
    Ok(out)
}
