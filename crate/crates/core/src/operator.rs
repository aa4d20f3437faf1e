//! Dense operators on ℂ²-valued samples over a set of grid cells.
//!
//! Matrices are stored as sample-to-sample maps: entry (i, j) of an integral operator is the
//! kernel value times the cell area, so composition is the plain matrix product and, with
//! uniform weights, the adjoint is the conjugate transpose.

use crate::algebra::Mat2;
use crate::error::{Error, Result};
use crate::grid::Grid;
use ndarray::{Array1, Array2, ShapeBuilder};
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64 as C64;

pub type CMatrix = Array2<C64>;
pub type CVector = Array1<C64>;

#[derive(Clone, Debug)]
pub struct DiscreteOperator {
    pub matrix: CMatrix,
    pub grid: Grid,
    /// Cells carrying the samples; component c of cell `cells[k]` sits at index 2k + c.
    pub cells: Vec<usize>,
}

impl DiscreteOperator {
    pub fn new(matrix: CMatrix, grid: Grid, cells: Vec<usize>) -> Result<Self> {
        let n = 2 * cells.len();
        if matrix.dim() != (n, n) {
            return Err(Error::Validation(format!(
                "operator shape {:?} does not match {} cells",
                matrix.dim(),
                cells.len()
            )));
        }
        Ok(DiscreteOperator {
            matrix,
            grid,
            cells,
        })
    }

    pub fn identity(grid: Grid, cells: Vec<usize>) -> Self {
        let n = 2 * cells.len();
        DiscreteOperator {
            matrix: Array2::eye(n),
            grid,
            cells,
        }
    }

    pub fn zeros(grid: Grid, cells: Vec<usize>) -> Self {
        let n = 2 * cells.len();
        DiscreteOperator {
            matrix: Array2::zeros((n, n)),
            grid,
            cells,
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn weight(&self) -> f64 {
        self.grid.cell_area()
    }

    pub fn same_space(&self, other: &DiscreteOperator) -> bool {
        self.grid == other.grid && self.cells == other.cells
    }

    fn check_space(&self, other: &DiscreteOperator) -> Result<()> {
        if self.same_space(other) {
            Ok(())
        } else {
            Err(Error::Validation("operators live on different grids".into()))
        }
    }

    pub fn apply(&self, f: &CVector) -> CVector {
        self.matrix.dot(f)
    }

    pub fn adjoint(&self) -> Self {
        DiscreteOperator {
            matrix: self.matrix.t().mapv(|z| z.conj()),
            grid: self.grid,
            cells: self.cells.clone(),
        }
    }

    pub fn compose(&self, other: &DiscreteOperator) -> Result<Self> {
        self.check_space(other)?;
        Ok(self.with_matrix(self.matrix.dot(&other.matrix)))
    }

    pub fn add(&self, other: &DiscreteOperator) -> Result<Self> {
        self.check_space(other)?;
        Ok(self.with_matrix(&self.matrix + &other.matrix))
    }

    pub fn sub(&self, other: &DiscreteOperator) -> Result<Self> {
        self.check_space(other)?;
        Ok(self.with_matrix(&self.matrix - &other.matrix))
    }

    pub fn scaled(&self, s: C64) -> Self {
        self.with_matrix(self.matrix.mapv(|z| z * s))
    }

    pub fn with_matrix(&self, matrix: CMatrix) -> Self {
        DiscreteOperator {
            matrix,
            grid: self.grid,
            cells: self.cells.clone(),
        }
    }

    /// Hilbert–Schmidt norm of the kernel; equals the Frobenius norm of the sample map.
    pub fn hs_norm(&self) -> f64 {
        frobenius(&self.matrix)
    }

    pub fn hermitian_defect(&self) -> f64 {
        hermitian_defect(&self.matrix)
    }

    /// Weighted inner product ⟨f, g⟩ = Σ conj(f)·g·(cell area).
    pub fn inner(&self, f: &CVector, g: &CVector) -> C64 {
        f.iter().zip(g).map(|(a, b)| a.conj() * b).sum::<C64>() * self.weight()
    }

    pub fn block(&self, i: usize, j: usize) -> Mat2 {
        let m = &self.matrix;
        Mat2::new(
            m[[2 * i, 2 * j]],
            m[[2 * i, 2 * j + 1]],
            m[[2 * i + 1, 2 * j]],
            m[[2 * i + 1, 2 * j + 1]],
        )
    }
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Eigenpairs of a Hermitian matrix, eigenvectors in the columns.
///
/// The LAPACK call runs on a column-major copy: for row-major input the backend returns
/// conjugated eigenvectors.
pub fn eigh_hermitian(m: &CMatrix) -> Result<(Array1<f64>, CMatrix)> {
    let mut f = Array2::zeros(m.raw_dim().f());
    f.assign(m);
    Ok(f.eigh(UPLO::Lower)?)
}

pub fn hermitian_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[[i, j]] - m[[j, i]].conj()).norm());
        }
    }
    worst
}

pub fn set_block(m: &mut CMatrix, i: usize, j: usize, b: &Mat2) {
    m[[2 * i, 2 * j]] = b.0[0][0];
    m[[2 * i, 2 * j + 1]] = b.0[0][1];
    m[[2 * i + 1, 2 * j]] = b.0[1][0];
    m[[2 * i + 1, 2 * j + 1]] = b.0[1][1];
}

/// Sample map of a translation-invariant kernel K(x − y) on `cells`, with `diag` used on
/// coincident cells. Kernel values are tabulated once per lattice offset.
pub fn assemble_translation_invariant<F>(
    grid: &Grid,
    cells: &[usize],
    diag: Mat2,
    kernel: F,
) -> CMatrix
where
    F: Fn([f64; 2]) -> Mat2,
{
    let n = grid.n();
    let h = grid.spacing();
    let w = grid.cell_area();
    let span = 2 * n - 1;
    let (mut xmin, mut xmax, mut ymin, mut ymax) = (n, 0, n, 0);
    for &c in cells {
        let (ix, iy) = grid.unravel(c);
        xmin = xmin.min(ix);
        xmax = xmax.max(ix);
        ymin = ymin.min(iy);
        ymax = ymax.max(iy);
    }
    let mut table = vec![Mat2::zero(); span * span];
    if !cells.is_empty() {
        let dx_max = (xmax - xmin) as i64;
        let dy_max = (ymax - ymin) as i64;
        for dy in -dy_max..=dy_max {
            for dx in -dx_max..=dx_max {
                let k = ((dy + n as i64 - 1) as usize) * span + (dx + n as i64 - 1) as usize;
                table[k] = if dx == 0 && dy == 0 {
                    diag
                } else {
                    kernel([dx as f64 * h, dy as f64 * h])
                }
                .scale_re(w);
            }
        }
    }
    let dim = 2 * cells.len();
    let mut m = Array2::zeros((dim, dim));
    for (i, &ci) in cells.iter().enumerate() {
        let (xi, yi) = grid.unravel(ci);
        for (j, &cj) in cells.iter().enumerate() {
            let (xj, yj) = grid.unravel(cj);
            let k = (yi + n - 1 - yj) * span + (xi + n - 1 - xj);
            set_block(&mut m, i, j, &table[k]);
        }
    }
    m
}

/// blockdiag(v) · K · blockdiag(v)ᴴ.
pub fn sandwich(v: &[Mat2], k: &CMatrix) -> CMatrix {
    let n = v.len();
    let mut out = Array2::zeros((2 * n, 2 * n));
    for i in 0..n {
        let vi = v[i];
        for j in 0..n {
            let vj = v[j].adjoint();
            let kb = Mat2::new(
                k[[2 * i, 2 * j]],
                k[[2 * i, 2 * j + 1]],
                k[[2 * i + 1, 2 * j]],
                k[[2 * i + 1, 2 * j + 1]],
            );
            set_block(&mut out, i, j, &(vi * kb * vj));
        }
    }
    out
}

/// Dense block-diagonal matrix with the given 2×2 blocks.
pub fn block_diagonal(blocks: &[Mat2]) -> CMatrix {
    let mut out = Array2::zeros((2 * blocks.len(), 2 * blocks.len()));
    for (i, b) in blocks.iter().enumerate() {
        set_block(&mut out, i, i, b);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray_linalg::{Inverse, Solve, Factorize};

    fn sample_hermitian(n: usize) -> CMatrix {
        let mut m = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                let x = C64::new((i * 7 + j * 3) as f64 % 5.0 - 2.0, (i as f64 - j as f64) * 0.3);
                m[[i, j]] += x;
                m[[j, i]] += x.conj();
            }
        }
        m
    }

    #[test]
    fn eigh_reconstructs_row_major_input() {
        let m = sample_hermitian(7);
        let (e, u) = eigh_hermitian(&m).unwrap();
        let d = Array2::from_diag(&e.mapv(|x| C64::new(x, 0.0)));
        let back = u.dot(&d).dot(&u.t().mapv(|z| z.conj()));
        assert!(frobenius(&(&back - &m)) < 1e-12);
    }

    #[test]
    fn lu_solves_agree_with_inverse() {
        let mut m = sample_hermitian(6);
        m[[0, 1]] += C64::new(0.4, 1.1);
        m[[3, 2]] += C64::new(-0.2, 0.5);
        let b = Array1::from_iter((0..6).map(|k| C64::new(k as f64, 1.0 - k as f64)));
        let lu = m.factorize().unwrap();
        let x = lu.solve(&b).unwrap();
        let xh = lu.solve_h(&b).unwrap();
        let mi = m.inv().unwrap();
        let mh = m.t().mapv(|z| z.conj()).inv().unwrap();
        let err = |a: &CVector, c: &CVector| (a - c).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(err(&x, &mi.dot(&b)) < 1e-12);
        assert!(err(&xh, &mh.dot(&b)) < 1e-12);
        assert!(frobenius(&(&m.dot(&mi) - &Array2::<C64>::eye(6))) < 1e-12);
    }

    #[test]
    fn translation_invariant_assembly_matches_direct() {
        let g = Grid::new(5, 2.5).unwrap();
        let cells = vec![0, 3, 7, 12, 24];
        let ker = |d: [f64; 2]| Mat2::real_diag(d[0] + 2.0 * d[1], d[0] * d[1]);
        let m = assemble_translation_invariant(&g, &cells, Mat2::identity(), ker);
        for (i, &ci) in cells.iter().enumerate() {
            for (j, &cj) in cells.iter().enumerate() {
                let (pi, pj) = (g.point(ci), g.point(cj));
                let want = if i == j {
                    Mat2::identity()
                } else {
                    ker([pi[0] - pj[0], pi[1] - pj[1]])
                }
                .scale_re(g.cell_area());
                let op = DiscreteOperator::new(m.clone(), g, cells.clone()).unwrap();
                assert!((op.block(i, j) - want).max_abs() < 1e-14);
            }
        }
    }
}
