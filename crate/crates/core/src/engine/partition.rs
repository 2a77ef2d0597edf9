use std::ops::Range;

use super::EngineError;

/// Static contiguous split of the vertex set, one range per thread.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    ranges: Vec<Range<usize>>,
}

impl Partition {
    pub fn ranges(&self) -> &[Range<usize>] {
        &self.ranges
    }

    #[inline]
    pub fn range(&self, t: usize) -> Range<usize> {
        self.ranges[t].clone()
    }

    pub fn parts(&self) -> usize {
        self.ranges.len()
    }

    /// Thread owning vertex `u`.
    pub fn owner(&self, u: usize) -> usize {
        self.ranges.partition_point(|r| r.end <= u)
    }
}

/// The first `n mod p` ranges hold `ceil(n/p)` vertices, the rest `floor(n/p)`.
pub fn partition_static(n: usize, p: usize) -> Result<Partition, EngineError> {
    if p == 0 {
        return Err(EngineError::InvalidConfig(
            "cannot partition over zero threads".into(),
        ));
    }
    let (q, r) = (n / p, n % p);
    let mut start = 0;
    let ranges = (0..p)
        .map(|t| {
            let len = q + usize::from(t < r);
            let range = start..start + len;
            start += len;
            range
        })
        .collect();
    Ok(Partition { ranges })
}
