//! Spinor fields on periodic grids, 2D FFTs and the binary checkpoint format.

use crate::algebra::{Mat2, Spinor};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::operator::CVector;
use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use ndarray::Array1;
use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

#[derive(Clone, Debug, PartialEq)]
pub struct SpinorField {
    pub grid: Grid,
    /// Components in row-major cell order.
    pub comp: [Vec<C64>; 2],
}

impl SpinorField {
    pub fn zeros(grid: Grid) -> Self {
        let n = grid.cells();
        SpinorField {
            grid,
            comp: [vec![C64::new(0.0, 0.0); n], vec![C64::new(0.0, 0.0); n]],
        }
    }

    pub fn from_fn<F: Fn([f64; 2]) -> Spinor>(grid: Grid, f: F) -> Self {
        let mut out = Self::zeros(grid);
        for k in 0..grid.cells() {
            let s = f(grid.point(k));
            out.comp[0][k] = s[0];
            out.comp[1][k] = s[1];
        }
        out
    }

    /// Gaussian bump A·exp(−|x − c|²/(2σ²)) times a constant spinor.
    pub fn gaussian(grid: Grid, center: [f64; 2], width: f64, spinor: Spinor) -> Self {
        Self::from_fn(grid, |x| {
            let d2 = (x[0] - center[0]).powi(2) + (x[1] - center[1]).powi(2);
            let g = (-0.5 * d2 / (width * width)).exp();
            [spinor[0] * g, spinor[1] * g]
        })
    }

    pub fn at(&self, k: usize) -> Spinor {
        [self.comp[0][k], self.comp[1][k]]
    }

    pub fn set(&mut self, k: usize, s: Spinor) {
        self.comp[0][k] = s[0];
        self.comp[1][k] = s[1];
    }

    /// |ψ(x)| at every cell.
    pub fn magnitudes(&self) -> Vec<f64> {
        (0..self.grid.cells())
            .map(|k| (self.comp[0][k].norm_sqr() + self.comp[1][k].norm_sqr()).sqrt())
            .collect()
    }

    pub fn norm_l2(&self) -> f64 {
        let s: f64 = self.comp.iter().flatten().map(|z| z.norm_sqr()).sum();
        (s * self.grid.cell_area()).sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        self.magnitudes().into_iter().fold(0.0, f64::max)
    }

    /// ∫ weight(x)|ψ(x)| dx.
    pub fn weighted_l1<W: Fn([f64; 2]) -> f64>(&self, weight: W) -> f64 {
        let mags = self.magnitudes();
        let s: f64 = (0..self.grid.cells())
            .map(|k| weight(self.grid.point(k)) * mags[k])
            .sum();
        s * self.grid.cell_area()
    }

    /// sup |ψ(x)| / weight(x).
    pub fn weighted_sup<W: Fn([f64; 2]) -> f64>(&self, weight: W) -> f64 {
        let mags = self.magnitudes();
        (0..self.grid.cells())
            .map(|k| mags[k] / weight(self.grid.point(k)))
            .fold(0.0, f64::max)
    }

    /// Fraction of the L² mass in the outer band of relative width `band` on each side.
    pub fn boundary_mass_fraction(&self, band: f64) -> f64 {
        let n = self.grid.n();
        let edge = ((band * n as f64).ceil() as usize).max(1);
        let mut total = 0.0;
        let mut outer = 0.0;
        for k in 0..self.grid.cells() {
            let (ix, iy) = self.grid.unravel(k);
            let m = self.comp[0][k].norm_sqr() + self.comp[1][k].norm_sqr();
            total += m;
            if ix < edge || iy < edge || ix >= n - edge || iy >= n - edge {
                outer += m;
            }
        }
        if total == 0.0 {
            0.0
        } else {
            outer / total
        }
    }

    pub fn scale(&mut self, s: C64) {
        for z in self.comp.iter_mut().flatten() {
            *z *= s;
        }
    }

    pub fn sub(&self, o: &SpinorField) -> SpinorField {
        let mut out = self.clone();
        for c in 0..2 {
            for (a, b) in out.comp[c].iter_mut().zip(&o.comp[c]) {
                *a -= b;
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.comp
            .iter()
            .flatten()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn apply_pointwise(&mut self, mats: &[Mat2]) {
        for (k, m) in mats.iter().enumerate() {
            let s = m.apply(self.at(k));
            self.set(k, s);
        }
    }

    /// Interleaved samples (index 2k + c).
    pub fn to_vector(&self) -> CVector {
        let n = self.grid.cells();
        let mut v = Array1::zeros(2 * n);
        for k in 0..n {
            v[2 * k] = self.comp[0][k];
            v[2 * k + 1] = self.comp[1][k];
        }
        v
    }

    pub fn from_vector(grid: Grid, v: &CVector) -> Result<Self> {
        if v.len() != 2 * grid.cells() {
            return Err(Error::Validation(format!(
                "vector of length {} does not fit a {}² grid",
                v.len(),
                grid.n()
            )));
        }
        let mut f = Self::zeros(grid);
        for k in 0..grid.cells() {
            f.comp[0][k] = v[2 * k];
            f.comp[1][k] = v[2 * k + 1];
        }
        Ok(f)
    }

    pub fn write_checkpoint(&self, path: &Path, header: &CheckpointHeader) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let io = |e| Error::io(path, e);
        w.write_u64::<LittleEndian>(self.grid.n() as u64).map_err(io)?;
        for x in [self.grid.half_width(), header.mass, header.t, header.dt] {
            w.write_f64::<LittleEndian>(x).map_err(io)?;
        }
        for k in 0..self.grid.cells() {
            for c in 0..2 {
                w.write_f64::<LittleEndian>(self.comp[c][k].re).map_err(io)?;
                w.write_f64::<LittleEndian>(self.comp[c][k].im).map_err(io)?;
            }
        }
        w.flush().map_err(io)
    }

    pub fn read_checkpoint(path: &Path) -> Result<(SpinorField, CheckpointHeader)> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut r = BufReader::new(file);
        let io = |e| Error::io(path, e);
        let n = r.read_u64::<LittleEndian>().map_err(io)? as usize;
        let mut head = [0.0; 4];
        for h in head.iter_mut() {
            *h = r.read_f64::<LittleEndian>().map_err(io)?;
        }
        let grid = Grid::new(n, head[0])?;
        let mut f = SpinorField::zeros(grid);
        for k in 0..grid.cells() {
            for c in 0..2 {
                let re = r.read_f64::<LittleEndian>().map_err(io)?;
                let im = r.read_f64::<LittleEndian>().map_err(io)?;
                f.comp[c][k] = C64::new(re, im);
            }
        }
        let mut rest = Vec::new();
        r.read_to_end(&mut rest).map_err(io)?;
        if !rest.is_empty() {
            return Err(Error::Validation(format!(
                "checkpoint {} has {} trailing bytes",
                path.display(),
                rest.len()
            )));
        }
        Ok((
            f,
            CheckpointHeader {
                mass: head[1],
                t: head[2],
                dt: head[3],
            },
        ))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CheckpointHeader {
    pub mass: f64,
    pub t: f64,
    pub dt: f64,
}

/// In-place 2D FFT on n×n row-major arrays.
pub struct Fft2 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<C64>,
    buf: Vec<C64>,
}

impl Fft2 {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Fft2 {
            n,
            forward,
            inverse,
            scratch: vec![C64::new(0.0, 0.0); len],
            buf: vec![C64::new(0.0, 0.0); n * n],
        }
    }

    fn transpose_into(src: &[C64], dst: &mut [C64], n: usize) {
        const B: usize = 32;
        for bi in (0..n).step_by(B) {
            for bj in (0..n).step_by(B) {
                for i in bi..(bi + B).min(n) {
                    for j in bj..(bj + B).min(n) {
                        dst[j * n + i] = src[i * n + j];
                    }
                }
            }
        }
    }

    fn run(&mut self, data: &mut [C64], fwd: bool) {
        let n = self.n;
        assert_eq!(data.len(), n * n, "fft buffer size");
        let plan = if fwd { &self.forward } else { &self.inverse };
        plan.process_with_scratch(data, &mut self.scratch);
        Self::transpose_into(data, &mut self.buf, n);
        plan.process_with_scratch(&mut self.buf, &mut self.scratch);
        Self::transpose_into(&self.buf, data, n);
    }

    pub fn forward(&mut self, data: &mut [C64]) {
        self.run(data, true);
    }

    /// Inverse transform including the 1/n² normalisation.
    pub fn inverse(&mut self, data: &mut [C64]) {
        self.run(data, false);
        let s = 1.0 / (self.n * self.n) as f64;
        for z in data.iter_mut() {
            *z *= s;
        }
    }
}

/// Applies a field of 2×2 Fourier multipliers (FFT order) to a spinor field.
pub fn apply_fourier_multiplier(fft: &mut Fft2, field: &mut SpinorField, symbol: &[Mat2]) {
    let [up, down] = &mut field.comp;
    fft.forward(up);
    fft.forward(down);
    for k in 0..symbol.len() {
        let s = symbol[k].apply([up[k], down[k]]);
        up[k] = s[0];
        down[k] = s[1];
    }
    fft.inverse(up);
    fft.inverse(down);
}

/// Scalar Fourier multiplier applied to both components.
pub fn apply_scalar_multiplier(fft: &mut Fft2, field: &mut SpinorField, symbol: &[f64]) {
    for c in field.comp.iter_mut() {
        fft.forward(c);
        for (z, s) in c.iter_mut().zip(symbol) {
            *z *= *s;
        }
        fft.inverse(c);
    }
}

/// ξ at every FFT-ordered lattice point.
pub fn frequency_lattice(grid: &Grid) -> Vec<[f64; 2]> {
    let f = grid.frequencies();
    let n = grid.n();
    (0..n * n).map(|k| [f[k % n], f[k / n]]).collect()
}
