//! Single-threaded reference engines.
//!
//! [`pagerank_sequential`] is the CSR power iteration every parallel engine
//! is measured against. [`oracle_dense`] reaches the same fixed point through
//! an explicit transition matrix and shares no code with it.

use std::time::Instant;

use crate::engine::{kernel, uniform, EngineError, Outcome, RunConfig, RunReport, Variant};
use crate::graph::CsrGraph;
use crate::scalar::Scalar;

/// Largest graph the dense oracle accepts.
pub const DENSE_ORACLE_LIMIT: usize = 5000;

/// Runs power iteration and calls `observe(iteration, ranks, max_error)`
/// after every iteration. Returns the final ranks, iterations and error.
pub fn power_iterations<T: Scalar>(
    g: &CsrGraph,
    cfg: &RunConfig<T>,
    mut observe: impl FnMut(u64, &[T], T),
) -> (Vec<T>, u64, T) {
    let n = g.n();
    let base = cfg.base(n);
    let d = cfg.damping;
    let mut prev = vec![uniform::<T>(n); n];
    let mut curr = vec![T::zero(); n];
    let mut iters = 0;
    let mut err = T::infinity();
    if n == 0 {
        return (curr, 0, T::zero());
    }
    while err > cfg.threshold && iters < cfg.max_iters {
        err = T::zero();
        for u in 0..n {
            let pr = kernel::pull(g, u, base, d, |v| prev[v]);
            curr[u] = pr;
            err = err.max((prev[u] - pr).abs());
        }
        iters += 1;
        observe(iters, &curr, err);
        std::mem::swap(&mut prev, &mut curr);
    }
    (prev, iters, err)
}

pub fn pagerank_sequential<T: Scalar>(
    g: &CsrGraph,
    cfg: &RunConfig<T>,
) -> Result<RunReport<T>, EngineError> {
    cfg.validate()?;
    let start = Instant::now();
    let (ranks, iters, err) = power_iterations(g, cfg, |_, _, _| {});
    let wall_time = start.elapsed();
    Ok(RunReport {
        variant: Variant::Sequential,
        threads: 1,
        identical: false,
        wall_time,
        per_thread_iterations: vec![iters],
        final_error: err,
        ranks,
        l1_vs_oracle: None,
        outcome: if err <= cfg.threshold {
            Outcome::Converged
        } else {
            Outcome::MaxIters
        },
        vertex_updates: iters * g.n() as u64,
        iteration_times: Vec::new(),
        installs_per_iteration: None,
        frozen_vertices: 0,
    })
}

/// Fixed point by dense transition-matrix iteration, `x ← b + M x` with
/// `M[u][v] = d / outdeg(v)` per edge `v → u`.
pub fn oracle_dense<T: Scalar>(g: &CsrGraph, cfg: &RunConfig<T>) -> Result<Vec<T>, EngineError> {
    let n = g.n();
    if n > DENSE_ORACLE_LIMIT {
        return Err(EngineError::TooLarge {
            n,
            limit: DENSE_ORACLE_LIMIT,
        });
    }
    cfg.validate()?;
    if n == 0 {
        return Ok(Vec::new());
    }
    let nf = T::from_usize(n).unwrap();
    let mut matrix = vec![T::zero(); n * n];
    let mut out_count = vec![0usize; n];
    for (src, _) in g.edges() {
        out_count[src as usize] += 1;
    }
    for (src, dst) in g.edges() {
        let (src, dst) = (src as usize, dst as usize);
        matrix[dst * n + src] =
            matrix[dst * n + src] + cfg.damping / T::from_usize(out_count[src]).unwrap();
    }
    let teleport = (T::one() - cfg.damping) / nf;
    let mut x = vec![T::one() / nf; n];
    let mut next = vec![T::zero(); n];
    for _ in 0..cfg.max_iters {
        let mut delta = T::zero();
        for (row, out) in matrix.chunks_exact(n).zip(next.iter_mut()) {
            let dot = row
                .iter()
                .zip(&x)
                .fold(T::zero(), |acc, (&m, &xv)| acc + m * xv);
            *out = teleport + dot;
        }
        for (a, b) in next.iter().zip(&x) {
            delta = delta.max((*a - *b).abs());
        }
        std::mem::swap(&mut x, &mut next);
        if delta <= cfg.threshold {
            break;
        }
    }
    Ok(x)
}
