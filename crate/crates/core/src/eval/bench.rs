use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingVector;
use crate::error::{Error, Result};
use crate::eval::metrics::mean_std;
use crate::protocol::unit_sphere_draw;
use crate::randortho::{KeyStream, UserKey};
use crate::schemes::SchemeConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub scheme: String,
    pub mean_ms: f64,
    pub std_ms: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub dim: usize,
    pub warmup: usize,
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    pub fn row(&self, scheme: &str) -> Option<&BenchRow> {
        self.rows.iter().find(|r| r.scheme == scheme)
    }

    /// `scheme,mean_ms,std_ms,trials` with a header line.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("scheme,mean_ms,std_ms,trials\n");
        for r in &self.rows {
            s.push_str(&format!("{},{:.4},{:.4},{}\n", r.scheme, r.mean_ms, r.std_ms, r.trials));
        }
        s
    }
}

/// Wall-clock cost of one full protection call (key material generation
/// included) per scheme, on the calling thread.
///
/// Each trial uses a fresh unit-norm embedding and a fresh key. The first
/// `n_trials / 10` calls (at least one) per scheme are warm-up and are not
/// recorded.
pub fn timing_benchmark(configs: &[SchemeConfig], n_trials: usize, seed: u64) -> Result<BenchReport> {
    if n_trials < 10 {
        return Err(Error::InvalidParameter(format!("need >= 10 trials, got {n_trials}")));
    }
    let dim = configs.first().map_or(0, SchemeConfig::input_dim);
    if configs.iter().any(|c| c.input_dim() != dim) {
        return Err(Error::InvalidParameter("all schemes must share one input dimension".into()));
    }
    let warmup = (n_trials / 10).max(1);
    let mut rows = Vec::with_capacity(configs.len());
    for (ci, cfg) in configs.iter().enumerate() {
        let mut stream = KeyStream::new(UserKey(seed), ci as u64);
        let mut times = Vec::with_capacity(n_trials);
        for i in 0..warmup + n_trials {
            let u = EmbeddingVector::new(unit_sphere_draw(&mut stream, dim))?;
            let key = UserKey(stream.next_below(u64::MAX));
            let start = Instant::now();
            let out = cfg.protect(&u, key)?;
            let elapsed = start.elapsed();
            std::hint::black_box(out);
            if i >= warmup {
                times.push(elapsed.as_secs_f64() * 1e3);
            }
        }
        let (mean_ms, std_ms) = mean_std(&times);
        rows.push(BenchRow {
            scheme: cfg.name().to_string(),
            mean_ms,
            std_ms,
            trials: n_trials,
        });
    }
    Ok(BenchReport { dim, warmup, rows })
}
