use std::io::Write;

use serde::{Deserialize, Serialize};

use super::RadioError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub origin: (f64, f64),
    pub cell_m: f64,
    pub width: usize,
    pub height: usize,
}

impl GridSpec {
    /// Cell containing a position, if inside the grid.
    pub fn cell_of(&self, (x, y): (f64, f64)) -> Option<(usize, usize)> {
        let c = ((x - self.origin.0) / self.cell_m).floor();
        let r = ((y - self.origin.1) / self.cell_m).floor();
        if c < 0.0 || r < 0.0 || c >= self.width as f64 || r >= self.height as f64 {
            return None;
        }
        Some((r as usize, c as usize))
    }

    pub fn cell_center(&self, row: usize, col: usize) -> (f64, f64) {
        (
            self.origin.0 + (col as f64 + 0.5) * self.cell_m,
            self.origin.1 + (row as f64 + 0.5) * self.cell_m,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageGrid {
    pub spec: GridSpec,
    /// Row-major values, `height` rows of `width` cells.
    pub values: Vec<f64>,
    /// True where a cell holds a measured sample.
    pub sample_mask: Vec<bool>,
    pub converged: bool,
    pub iterations: usize,
    pub residual: f64,
}

impl CoverageGrid {
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.spec.width + col]
    }

    pub fn is_sample(&self, row: usize, col: usize) -> bool {
        self.sample_mask[row * self.spec.width + col]
    }

    /// Header line with the grid geometry, then one CSV row per grid row.
    pub fn write_csv(&self, mut w: impl Write) -> Result<(), RadioError> {
        let s = &self.spec;
        writeln!(
            w,
            "# origin_x={},origin_y={},cell_m={},width={},height={}",
            s.origin.0, s.origin.1, s.cell_m, s.width, s.height
        )?;
        let mut wr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
        for r in 0..s.height {
            wr.write_record(self.values[r * s.width..(r + 1) * s.width].iter().map(|v| format!("{v:.3}")))?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Mean of a cell's in-grid 4-neighbours. Edge cells average fewer
/// neighbours, a zero-flux boundary.
#[inline]
fn neighbour_mean(u: &[f64], w: usize, h: usize, r: usize, c: usize) -> f64 {
    let mut sum = 0.0;
    let mut n = 0.0;
    if r > 0 {
        sum += u[(r - 1) * w + c];
        n += 1.0;
    }
    if r + 1 < h {
        sum += u[(r + 1) * w + c];
        n += 1.0;
    }
    if c > 0 {
        sum += u[r * w + c - 1];
        n += 1.0;
    }
    if c + 1 < w {
        sum += u[r * w + c + 1];
        n += 1.0;
    }
    if n == 0.0 {
        u[r * w + c]
    } else {
        sum / n
    }
}

/// Interpolates samples over a grid by solving the discrete Laplace equation
/// with the sample cells held fixed. Successive over-relaxation runs until
/// the largest free-cell residual `|u - mean(neighbours)|` drops below `tol`
/// or `max_iters` sweeps have been made.
pub fn fit_coverage_map(
    samples: &[((f64, f64), f64)],
    spec: GridSpec,
    tol: f64,
    max_iters: usize,
) -> Result<CoverageGrid, RadioError> {
    if spec.width == 0 || spec.height == 0 || !(spec.cell_m > 0.0) {
        return Err(RadioError::Grid("width, height and cell size must be positive".into()));
    }
    if !(tol > 0.0) {
        return Err(RadioError::Grid("tolerance must be positive".into()));
    }
    let (w, h) = (spec.width, spec.height);
    let mut sum = vec![0.0; w * h];
    let mut count = vec![0usize; w * h];
    for &(pos, v) in samples {
        if let Some((r, c)) = spec.cell_of(pos) {
            sum[r * w + c] += v;
            count[r * w + c] += 1;
        }
    }
    let mask: Vec<bool> = count.iter().map(|&n| n > 0).collect();
    let n_samples = count.iter().filter(|&&n| n > 0).count();
    if n_samples == 0 {
        return Err(RadioError::NoSamples);
    }
    let mean_sample = (0..w * h)
        .filter(|&i| mask[i])
        .map(|i| sum[i] / count[i] as f64)
        .sum::<f64>()
        / n_samples as f64;
    let mut u: Vec<f64> = (0..w * h)
        .map(|i| if mask[i] { sum[i] / count[i] as f64 } else { mean_sample })
        .collect();

    let omega = 2.0 / (1.0 + (std::f64::consts::PI / w.max(h) as f64).sin());
    let residual = |u: &[f64]| -> f64 {
        let mut worst = 0.0f64;
        for r in 0..h {
            for c in 0..w {
                if !mask[r * w + c] {
                    worst = worst.max((u[r * w + c] - neighbour_mean(u, w, h, r, c)).abs());
                }
            }
        }
        worst
    };

    let mut res = residual(&u);
    let mut iters = 0;
    while res >= tol && iters < max_iters {
        for r in 0..h {
            for c in 0..w {
                let i = r * w + c;
                if !mask[i] {
                    let m = neighbour_mean(&u, w, h, r, c);
                    u[i] += omega * (m - u[i]);
                }
            }
        }
        iters += 1;
        res = residual(&u);
    }
    Ok(CoverageGrid {
        spec,
        values: u,
        sample_mask: mask,
        converged: res < tol,
        iterations: iters,
        residual: res,
    })
}
