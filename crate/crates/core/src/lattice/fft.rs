use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::Grid;

thread_local! {
    static PLANS: RefCell<(FftPlanner<f64>, HashMap<(usize, bool), Arc<dyn Fft<f64>>>)> =
        RefCell::new((FftPlanner::new(), HashMap::new()));
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANS.with(|cell| {
        let mut guard = cell.borrow_mut();
        let (planner, cache) = &mut *guard;
        cache
            .entry((len, inverse))
            .or_insert_with(|| {
                if inverse {
                    planner.plan_fft_inverse(len)
                } else {
                    planner.plan_fft_forward(len)
                }
            })
            .clone()
    })
}

fn transform(grid: &Grid, data: &mut [Complex64], inverse: bool) {
    let size = grid.size();
    let n = grid.n();
    let fft = plan(size, inverse);
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let mut line = vec![Complex64::new(0.0, 0.0); size];
    let total = data.len();
    for axis in 0..n {
        let stride = size.pow((n - 1 - axis) as u32);
        if stride == 1 {
            for chunk in data.chunks_exact_mut(size) {
                fft.process_with_scratch(chunk, &mut scratch);
            }
            continue;
        }
        let block = stride * size;
        for base in (0..total).step_by(block) {
            for offset in 0..stride {
                let start = base + offset;
                for (i, v) in line.iter_mut().enumerate() {
                    *v = data[start + i * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (i, v) in line.iter().enumerate() {
                    data[start + i * stride] = *v;
                }
            }
        }
    }
}

/// Unnormalized forward DFT `F[m] = Σ_i f[i] e^{-2πi m·i/N}` along every axis.
pub fn forward(grid: &Grid, data: &mut [Complex64]) {
    transform(grid, data, false);
}

/// Inverse DFT including the `1/Nⁿ` normalization.
pub fn inverse(grid: &Grid, data: &mut [Complex64]) {
    transform(grid, data, true);
    let scale = 1.0 / data.len() as f64;
    for v in data.iter_mut() {
        *v *= scale;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_3d() {
        let g = Grid::new(3, 6, 1.0).unwrap();
        let orig: Vec<Complex64> = (0..g.len())
            .map(|i| Complex64::new((i as f64).sin(), (i as f64 * 0.3).cos()))
            .collect();
        let mut d = orig.clone();
        forward(&g, &mut d);
        inverse(&g, &mut d);
        for (a, b) in d.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn matches_direct_dft_2d() {
        let g = Grid::new(2, 4, 1.0).unwrap();
        let f: Vec<Complex64> = (0..16)
            .map(|i| Complex64::new(i as f64, -(i as f64) / 3.0))
            .collect();
        let mut d = f.clone();
        forward(&g, &mut d);
        for m in 0..16 {
            let (m0, m1) = (m / 4, m % 4);
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..16 {
                let (i0, i1) = (i / 4, i % 4);
                let phase = -2.0 * std::f64::consts::PI * ((m0 * i0 + m1 * i1) as f64) / 4.0;
                acc += f[i] * Complex64::from_polar(1.0, phase);
            }
            assert!((acc - d[m]).norm() < 1e-11);
        }
    }
}
