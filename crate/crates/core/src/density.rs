//! Density estimation from weighted point clouds on a grid.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

use crate::error::{invalid, LabError, Result};
use crate::field::{GridGeometry, SampledField};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case", deny_unknown_fields)]
pub enum DensityMethod {
    Histogram,
    /// Gaussian kernel; `bandwidth = None` selects Silverman's rule.
    Kde {
        #[serde(default)]
        bandwidth: Option<f64>,
    },
}

#[derive(Clone, Debug)]
pub struct DensityEstimate {
    pub field: SampledField,
    pub bandwidth: Option<f64>,
    /// The requested bandwidth was below half a cell and was widened.
    pub widened: bool,
    /// Signed weight that fell outside the grid.
    pub outside_mass: f64,
}

/// Silverman's rule `σ̂ (4/(d+2))^{1/(d+4)} N^{-1/(d+4)}`, with `σ̂` the mean
/// per-axis standard deviation under the weights `|w|`.
pub fn silverman_bandwidth(points: &[f64], weights: &[f64], dims: usize) -> f64 {
    let n = weights.len();
    let wsum: f64 = weights.iter().map(|w| w.abs()).sum();
    let mut sd = 0.0;
    for a in 0..dims {
        let mean = (0..n).map(|i| weights[i].abs() * points[i * dims + a]).sum::<f64>() / wsum;
        let var = (0..n).map(|i| weights[i].abs() * (points[i * dims + a] - mean).powi(2)).sum::<f64>() / wsum;
        sd += var.sqrt();
    }
    sd /= dims as f64;
    let d = dims as f64;
    sd * (4.0 / (d + 2.0)).powf(1.0 / (d + 4.0)) * (n as f64).powf(-1.0 / (d + 4.0))
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + erf(z / std::f64::consts::SQRT_2))
}

/// Deposits weighted points (row-major `n × d`) on `grid`.
///
/// The histogram assigns each weight to its cell. The KDE integrates the
/// Gaussian kernel exactly over each cell (per-axis differences of the
/// normal CDF), so deposited mass equals the weight up to the part beyond
/// the box.
pub fn estimate_density(points: &[f64], weights: &[f64], grid: GridGeometry, method: DensityMethod) -> Result<DensityEstimate> {
    let d = grid.dims;
    if points.len() != weights.len() * d {
        return Err(LabError::GeometryMismatch(format!("{} coordinates for {} weights in d = {d}", points.len(), weights.len())));
    }
    if weights.is_empty() {
        return Err(invalid("no points to estimate a density from"));
    }
    let cell = grid.cell_measure();
    let h = grid.spacing();
    let m = grid.resolution;
    let mut values = vec![0.0; grid.len()];
    let mut outside = 0.0;
    match method {
        DensityMethod::Histogram => {
            for (i, &w) in weights.iter().enumerate() {
                match grid.locate(&points[i * d..(i + 1) * d]) {
                    Some(c) => values[c] += w / cell,
                    None => outside += w,
                }
            }
            Ok(DensityEstimate { field: SampledField::from_values(grid, 1, values)?, bandwidth: None, widened: false, outside_mass: outside })
        }
        DensityMethod::Kde { bandwidth } => {
            let requested = match bandwidth {
                Some(b) if b > 0.0 => b,
                Some(b) => return Err(invalid(format!("bandwidth must be positive, got {b}"))),
                None => silverman_bandwidth(points, weights, d),
            };
            let min_bw = 0.5 * h;
            let widened = !(requested >= min_bw);
            let bw = if widened {
                log::warn!("KDE bandwidth {requested:.3e} below half a cell; widened to {min_bw:.3e}");
                min_bw
            } else {
                requested
            };
            let reach = (8.0 * bw / h).ceil() as isize + 1;
            let span = (2 * reach + 1) as usize;
            let mut axis_w = vec![vec![0.0; span]; d];
            let mut axis_lo = vec![0usize; d];
            let mut axis_n = vec![0usize; d];
            let mut idx = vec![0usize; d];
            for (i, &w) in weights.iter().enumerate() {
                let x = &points[i * d..(i + 1) * d];
                let mut inside = 1.0;
                for a in 0..d {
                    let center = ((x[a] + grid.half_width) / h).floor() as isize;
                    let lo = (center - reach).max(0);
                    let hi = (center + reach).min(m as isize - 1);
                    if hi < lo {
                        axis_n[a] = 0;
                        inside = 0.0;
                        continue;
                    }
                    axis_lo[a] = lo as usize;
                    axis_n[a] = (hi - lo + 1) as usize;
                    let mut prev = normal_cdf((-grid.half_width + lo as f64 * h - x[a]) / bw);
                    let mut s = 0.0;
                    for k in 0..axis_n[a] {
                        let edge = -grid.half_width + (lo as usize + k + 1) as f64 * h;
                        let next = normal_cdf((edge - x[a]) / bw);
                        axis_w[a][k] = next - prev;
                        s += next - prev;
                        prev = next;
                    }
                    inside *= s;
                }
                outside += w * (1.0 - inside);
                if inside == 0.0 {
                    continue;
                }
                let total: usize = axis_n.iter().product();
                let scale = w / cell;
                for k in 0..total {
                    let mut rem = k;
                    let mut wk = scale;
                    for a in (0..d).rev() {
                        let j = rem % axis_n[a];
                        rem /= axis_n[a];
                        idx[a] = axis_lo[a] + j;
                        wk *= axis_w[a][j];
                    }
                    values[grid.flat_index(&idx)] += wk;
                }
            }
            Ok(DensityEstimate { field: SampledField::from_values(grid, 1, values)?, bandwidth: Some(bw), widened, outside_mass: outside })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{fill_normals, stream};

    #[test]
    fn histogram_single_point() {
        let g = GridGeometry::new(2, 1.0, 8).unwrap();
        let pts = vec![0.1, 0.1, 0.1, 0.1, 0.1, 0.1];
        let w = vec![1.0 / 3.0; 3];
        let e = estimate_density(&pts, &w, g, DensityMethod::Histogram).unwrap();
        let nz: Vec<f64> = e.field.values.iter().copied().filter(|v| *v != 0.0).collect();
        assert_eq!(nz.len(), 1);
        assert!((nz[0] - 1.0 / g.cell_measure()).abs() < 1e-12);
    }

    #[test]
    fn signed_dipole_integrates_to_zero() {
        let g = GridGeometry::new(2, 3.0, 64).unwrap();
        let pts = vec![0.5, 0.0, -0.5, 0.0];
        let w = vec![0.5, -0.5];
        for method in [DensityMethod::Histogram, DensityMethod::Kde { bandwidth: Some(0.3) }] {
            let e = estimate_density(&pts, &w, g, method).unwrap();
            assert!(e.field.integral().abs() < 1e-10);
        }
    }

    #[test]
    fn kde_mass_and_gaussian_consistency() {
        let n = 10_000;
        let mut pts = vec![0.0; 2 * n];
        fill_normals(&mut stream(3, 0), &mut pts);
        let w = vec![1.0 / n as f64; n];
        let g = GridGeometry::new(2, 8.0, 128).unwrap();
        let e = estimate_density(&pts, &w, g, DensityMethod::Kde { bandwidth: None }).unwrap();
        assert!((e.field.integral() - 1.0).abs() < 1e-6);
        let exact = SampledField::from_fn(g, |x| (-(x[0] * x[0] + x[1] * x[1]) / 2.0).exp() / (2.0 * std::f64::consts::PI));
        // A single cloud of 10⁴ points sits at the statistical floor of the
        // estimator (≈ 0.057 ± 0.004 across seeds at the best bandwidth).
        let l1 = e.field.l1_distance(&exact).unwrap();
        assert!(l1 < 0.065, "L1 = {l1}");
        let hist = estimate_density(&pts, &w, g, DensityMethod::Histogram).unwrap();
        assert!((hist.field.integral() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pooled_clouds_reach_five_percent() {
        let (n, runs) = (10_000, 8);
        let g = GridGeometry::new(2, 8.0, 128).unwrap();
        let mut pooled = SampledField::zeros(g, 1);
        for run in 0..runs {
            let mut pts = vec![0.0; 2 * n];
            fill_normals(&mut stream(11, run), &mut pts);
            let w = vec![1.0 / n as f64; n];
            let e = estimate_density(&pts, &w, g, DensityMethod::Kde { bandwidth: None }).unwrap();
            pooled.values.iter_mut().zip(&e.field.values).for_each(|(a, b)| *a += b / runs as f64);
        }
        let exact = SampledField::from_fn(g, |x| (-(x[0] * x[0] + x[1] * x[1]) / 2.0).exp() / (2.0 * std::f64::consts::PI));
        let l1 = pooled.l1_distance(&exact).unwrap();
        assert!(l1 < 0.05, "L1 = {l1}");
    }

    #[test]
    fn tiny_bandwidth_is_widened() {
        let g = GridGeometry::new(1, 1.0, 10).unwrap();
        let e = estimate_density(&[0.0], &[1.0], g, DensityMethod::Kde { bandwidth: Some(1e-6) }).unwrap();
        assert!(e.widened);
        assert_eq!(e.bandwidth, Some(0.1));
        assert!((e.field.integral() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_mismatched_input() {
        let g = GridGeometry::new(2, 1.0, 4).unwrap();
        assert!(estimate_density(&[0.0], &[1.0], g, DensityMethod::Histogram).is_err());
        assert!(estimate_density(&[], &[], g, DensityMethod::Histogram).is_err());
    }
}
