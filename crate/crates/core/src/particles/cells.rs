//! Uniform cell list for pair sums truncated at a cutoff radius.

use super::ParticleState;
use crate::error::{invalid, Result};

/// Particles bucketed into cubes of side `cutoff` over their bounding box.
/// Pairs farther apart than `cutoff` are skipped; the truncation is
/// symmetric, so antisymmetric kernels still cancel pairwise.
#[derive(Clone, Debug)]
pub struct CellList<'a> {
    state: &'a ParticleState,
    cutoff: f64,
    lo: Vec<f64>,
    counts: Vec<usize>,
    starts: Vec<usize>,
    order: Vec<usize>,
}

const MAX_CELLS: usize = 1 << 24;

impl<'a> CellList<'a> {
    pub fn build(state: &'a ParticleState, cutoff: f64) -> Result<Self> {
        if !(cutoff > 0.0 && cutoff.is_finite()) {
            return Err(invalid("cutoff must be positive"));
        }
        let d = state.dims;
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for i in 0..state.len() {
            for (a, x) in state.position(i).iter().enumerate() {
                lo[a] = lo[a].min(*x);
                hi[a] = hi[a].max(*x);
            }
        }
        let counts: Vec<usize> = (0..d).map(|a| ((hi[a] - lo[a]) / cutoff).floor() as usize + 1).collect();
        let total = counts.iter().try_fold(1usize, |acc, c| acc.checked_mul(*c)).filter(|t| *t <= MAX_CELLS);
        let total = total.ok_or_else(|| invalid("cutoff too small for the particle cloud's extent"))?;
        let mut list = Self { state, cutoff, lo, counts, starts: vec![0; total + 1], order: vec![0; state.len()] };
        let keys: Vec<usize> = (0..state.len()).map(|i| list.key(state.position(i))).collect();
        for &k in &keys {
            list.starts[k + 1] += 1;
        }
        for k in 0..total {
            list.starts[k + 1] += list.starts[k];
        }
        let mut fill = list.starts.clone();
        for (i, &k) in keys.iter().enumerate() {
            list.order[fill[k]] = i;
            fill[k] += 1;
        }
        Ok(list)
    }

    fn cell_coord(&self, a: usize, x: f64) -> isize {
        ((x - self.lo[a]) / self.cutoff).floor() as isize
    }

    fn key(&self, x: &[f64]) -> usize {
        let mut k = 0;
        for a in 0..x.len() {
            let c = self.cell_coord(a, x[a]).clamp(0, self.counts[a] as isize - 1) as usize;
            k = k * self.counts[a] + c;
        }
        k
    }

    /// Calls `visit(j)` for every particle within `cutoff` of `at`.
    pub fn for_each_neighbor<E>(&self, at: &[f64], visit: &mut impl FnMut(usize) -> std::result::Result<(), E>) -> std::result::Result<(), E> {
        let d = at.len();
        let center: Vec<isize> = (0..d).map(|a| self.cell_coord(a, at[a])).collect();
        let r2 = self.cutoff * self.cutoff;
        for off in 0..3usize.pow(d as u32) {
            let mut rem = off;
            let mut key = 0usize;
            let mut inside = true;
            for a in 0..d {
                let c = center[a] + (rem % 3) as isize - 1;
                rem /= 3;
                if c < 0 || c >= self.counts[a] as isize {
                    inside = false;
                    break;
                }
                key = key * self.counts[a] + c as usize;
            }
            if !inside {
                continue;
            }
            for &j in &self.order[self.starts[key]..self.starts[key + 1]] {
                let xj = self.state.position(j);
                let dist2: f64 = at.iter().zip(xj).map(|(p, q)| (p - q) * (p - q)).sum();
                if dist2 <= r2 {
                    visit(j)?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::super::{all_drifts, init_particles, ParticleKernel};
    use crate::measure::MeasureSpec;

    #[test]
    fn cell_list_error_is_bounded_by_the_far_field() {
        let s = init_particles(&MeasureSpec::gaussian(vec![0.0, 0.0], 1.0, 1.0), 2000, 11, 1.0).unwrap();
        let direct = all_drifts(&s, &ParticleKernel::BiotSavartBlob, None).unwrap();
        for cutoff in [0.5, 1.0, 2.0] {
            let fast = all_drifts(&s, &ParticleKernel::BiotSavartBlob, Some(cutoff)).unwrap();
            // Dropped terms satisfy |w K_ε(r)| ≤ |w| / (2π r) with r > cutoff.
            let bound = 1.0 / (2.0 * std::f64::consts::PI * cutoff);
            let err = direct.iter().zip(&fast).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err <= bound, "cutoff {cutoff}: {err} > {bound}");
        }
        let huge = all_drifts(&s, &ParticleKernel::BiotSavartBlob, Some(100.0)).unwrap();
        let err = direct.iter().zip(&huge).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-12);
    }
}
