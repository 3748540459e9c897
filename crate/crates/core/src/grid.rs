//! Transforms between the sparse coefficient representation and dense
//! periodic grids, with the convention f(x_j) = Σ_k f_k e^{2πi k·j/n}.

use num_complex::Complex64;
use rustfft::FftPlanner;
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::spectral::{FourierField, Symmetry, Wavevector};

/// Real samples of a periodic field on an n (d = 1) or n×n (d = 2) grid,
/// row-major with index i1*n + i2.
#[derive(Clone, Debug, PartialEq)]
pub struct RealGrid {
    pub dims: u8,
    pub n: usize,
    pub data: Vec<f64>,
}

impl RealGrid {
    pub fn new(dims: u8, n: usize, data: Vec<f64>) -> Result<Self> {
        let expect = if dims == 1 { n } else { n * n };
        if dims != 1 && dims != 2 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: dims,
            });
        }
        if data.len() != expect {
            return Err(Error::ParameterConstraintViolated(format!(
                "grid data length {} does not match {}^{}",
                data.len(),
                n,
                dims
            )));
        }
        Ok(RealGrid { dims, n, data })
    }

    /// Grid-sampled L² norm, (n^{-d} Σ |f(x_j)|²)^{1/2}.
    pub fn l2_norm(&self) -> f64 {
        let cells = self.data.len() as f64;
        (self.data.iter().map(|v| v * v).sum::<f64>() / cells).sqrt()
    }
}

fn is_power_of_two(n: usize) -> bool {
    n != 0 && n & (n - 1) == 0
}

fn check_grid_size(field: &FourierField, n: usize) -> Result<()> {
    if !is_power_of_two(n) {
        return Err(Error::ParameterConstraintViolated(format!(
            "grid size {n} is not a power of two"
        )));
    }
    let kmax = field.max_abs_component();
    let needed = kmax.checked_mul(2).unwrap_or(i128::MAX);
    if (n as i128) < needed {
        return Err(Error::GridTooSmall {
            grid: n,
            needed: needed.min(usize::MAX as i128) as usize,
        });
    }
    Ok(())
}

/// Bin index of wavenumber k on an n-point axis.
fn bin(k: i128, n: usize) -> usize {
    let n = n as i128;
    (((k % n) + n) % n) as usize
}

/// Wavenumber of bin i on an n-point axis: i for i < n/2, i − n otherwise,
/// so the Nyquist bin is labeled −n/2.
fn unbin(i: usize, n: usize) -> i128 {
    if i < n / 2 {
        i as i128
    } else {
        i as i128 - n as i128
    }
}

/// Synthesize the field on a dense complex grid (inverse DFT).
pub(crate) fn synthesize_complex(field: &FourierField, n: usize) -> Result<Vec<Complex64>> {
    check_grid_size(field, n)?;
    let d = field.dims();
    let len = if d == 1 { n } else { n * n };
    let mut spec = vec![Complex64::new(0.0, 0.0); len];
    let one_sided = field.symmetry() == Symmetry::OneSided;
    for (k, v) in field.iter() {
        let [k1, k2] = k.components();
        let idx = if d == 1 {
            bin(k1, n)
        } else {
            bin(k1, n) * n + bin(k2, n)
        };
        spec[idx] += v;
        if one_sided {
            let m = k.negated();
            let [m1, m2] = m.components();
            let midx = if d == 1 {
                bin(m1, n)
            } else {
                bin(m1, n) * n + bin(m2, n)
            };
            spec[midx] += v.conj();
        }
    }
    let mut planner = FftPlanner::new();
    let inv = planner.plan_fft_inverse(n);
    if d == 1 {
        inv.process(&mut spec);
    } else {
        for row in spec.chunks_exact_mut(n) {
            inv.process(row);
        }
        transpose(&mut spec, n);
        for row in spec.chunks_exact_mut(n) {
            inv.process(row);
        }
        transpose(&mut spec, n);
    }
    Ok(spec)
}

/// Evaluate the field on a real grid of n points per axis.
///
/// Requires n a power of two with n ≥ 2 max|k_j|; the imaginary residue of
/// a conjugate-symmetric (real) field is at roundoff level and is dropped.
pub fn to_grid(field: &FourierField, n: usize) -> Result<RealGrid> {
    let values = synthesize_complex(field, n)?;
    RealGrid::new(field.dims(), n, values.iter().map(|z| z.re).collect())
}

/// Forward transform of a real grid to full-lattice coefficients. The mean
/// (k = 0) bin is dropped, as are exactly-zero amplitudes; the Nyquist bin
/// on each axis is labeled −n/2.
pub fn to_spectrum(grid: &RealGrid) -> Result<FourierField> {
    if !is_power_of_two(grid.n) {
        return Err(Error::ParameterConstraintViolated(format!(
            "grid size {} is not a power of two",
            grid.n
        )));
    }
    let n = grid.n;
    let mut spec: Vec<Complex64> = grid.data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let norm = if grid.dims == 1 {
        fwd.process(&mut spec);
        1.0 / n as f64
    } else {
        for row in spec.chunks_exact_mut(n) {
            fwd.process(row);
        }
        transpose(&mut spec, n);
        for row in spec.chunks_exact_mut(n) {
            fwd.process(row);
        }
        transpose(&mut spec, n);
        1.0 / (n * n) as f64
    };
    let mut entries = BTreeMap::new();
    for (idx, z) in spec.iter().enumerate() {
        let v = z * norm;
        if v.re == 0.0 && v.im == 0.0 {
            continue;
        }
        let k = if grid.dims == 1 {
            Wavevector::d1(unbin(idx, n))
        } else {
            Wavevector::d2(unbin(idx / n, n), unbin(idx % n, n))
        };
        if k.is_zero() {
            continue;
        }
        entries.insert(k, v);
    }
    Ok(FourierField::from_map(
        grid.dims,
        Symmetry::FullLattice,
        entries,
    ))
}

pub(crate) fn transpose(data: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            data.swap(i * n + j, j * n + i);
        }
    }
}
