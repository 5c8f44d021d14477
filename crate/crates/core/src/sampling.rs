//! Rectangular sample grids in the `(u, u1)` plane.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::JetPoint;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub u: (f64, f64),
    pub u1: (f64, f64),
    pub n_u: usize,
    pub n_u1: usize,
}

fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| {
        if n == 1 {
            lo
        } else {
            lo + (hi - lo) * (i as f64) / ((n - 1) as f64)
        }
    })
}

impl Region {
    pub const fn new(u: (f64, f64), u1: (f64, f64), n_u: usize, n_u1: usize) -> Self {
        Region { u, u1, n_u, n_u1 }
    }

    /// Square `n x n` grid.
    pub const fn square(u: (f64, f64), u1: (f64, f64), n: usize) -> Self {
        Region::new(u, u1, n, n)
    }

    /// Grid points, `u` outer and `u1` inner, endpoints included. Nodes with
    /// `|u1| <= eps_u1` are dropped.
    pub fn points(&self, eps_u1: f64) -> Result<Vec<(f64, f64)>> {
        let finite = [self.u.0, self.u.1, self.u1.0, self.u1.1]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidArgument(
                "region bounds must be finite".into(),
            ));
        }
        let mut out = Vec::with_capacity(self.n_u * self.n_u1);
        for u in linspace(self.u.0, self.u.1, self.n_u) {
            for u1 in linspace(self.u1.0, self.u1.1, self.n_u1) {
                if u1.abs() > eps_u1 {
                    out.push((u, u1));
                }
            }
        }
        if out.is_empty() {
            return Err(Error::EmptyRegion);
        }
        Ok(out)
    }

    /// [`Region::points`] lifted to `x = 0`.
    pub fn jet_points(&self, eps_u1: f64) -> Result<Vec<JetPoint>> {
        Ok(self
            .points(eps_u1)?
            .into_iter()
            .map(|(u, u1)| JetPoint::new(0.0, u, u1))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_layout() {
        let r = Region::new((0.0, 1.0), (1.0, 2.0), 3, 2);
        let p = r.points(1e-9).unwrap();
        assert_eq!(
            p,
            vec![
                (0.0, 1.0),
                (0.0, 2.0),
                (0.5, 1.0),
                (0.5, 2.0),
                (1.0, 1.0),
                (1.0, 2.0)
            ]
        );
    }

    #[test]
    fn singular_row_is_dropped() {
        let r = Region::square((0.0, 1.0), (-1.0, 1.0), 3);
        let p = r.points(1e-9).unwrap();
        assert_eq!(p.len(), 6);
        assert!(p.iter().all(|&(_, v)| v != 0.0));
    }

    #[test]
    fn empty_region() {
        let r = Region::new((0.0, 1.0), (0.0, 0.0), 4, 4);
        assert_eq!(r.points(1e-9), Err(Error::EmptyRegion));
        let r = Region::new((0.0, 1.0), (1.0, 2.0), 0, 4);
        assert_eq!(r.points(1e-9), Err(Error::EmptyRegion));
    }
}
