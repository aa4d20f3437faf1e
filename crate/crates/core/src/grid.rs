//! Uniform cell-centred periodic grids on [−L, L]².

use crate::error::{Error, Result};
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    n: usize,
    half_width: f64,
}

impl Grid {
    pub fn new(n: usize, half_width: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::Validation(format!("grid needs n >= 2, got {n}")));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::Validation(format!(
                "grid half-width must be positive and finite, got {half_width}"
            )));
        }
        Ok(Grid { n, half_width })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.spacing().powi(2)
    }

    pub fn cells(&self) -> usize {
        self.n * self.n
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width + self.spacing() * (i as f64 + 0.5)
    }

    /// Cell index `iy·n + ix` to (ix, iy).
    pub fn unravel(&self, idx: usize) -> (usize, usize) {
        (idx % self.n, idx / self.n)
    }

    pub fn point(&self, idx: usize) -> [f64; 2] {
        let (ix, iy) = self.unravel(idx);
        [self.coord(ix), self.coord(iy)]
    }

    /// Angular frequencies in FFT order.
    pub fn frequencies(&self) -> Vec<f64> {
        let n = self.n as i64;
        let scale = 2.0 * PI / (n as f64 * self.spacing());
        (0..n)
            .map(|k| {
                let kk = if k < (n + 1) / 2 { k } else { k - n };
                kk as f64 * scale
            })
            .collect()
    }

    pub fn max_frequency(&self) -> f64 {
        PI / self.spacing()
    }

    /// Every cell index.
    pub fn all_cells(&self) -> Vec<usize> {
        (0..self.cells()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_degenerate_grids() {
        assert!(Grid::new(1, 1.0).is_err());
        assert!(Grid::new(8, 0.0).is_err());
        assert!(Grid::new(8, f64::NAN).is_err());
    }

    #[test]
    fn cell_centres_are_symmetric() {
        let g = Grid::new(6, 3.0).unwrap();
        assert_eq!(g.spacing(), 1.0);
        assert_eq!(g.coord(0), -2.5);
        assert_eq!(g.coord(5), 2.5);
        assert_eq!(g.point(7), [-1.5, -1.5]);
    }

    #[test]
    fn frequencies_follow_fft_order() {
        let g = Grid::new(4, PI).unwrap();
        let f = g.frequencies();
        let s = 2.0 * PI / (4.0 * g.spacing());
        assert_eq!(f, vec![0.0, s, -2.0 * s, -s]);
    }
}
