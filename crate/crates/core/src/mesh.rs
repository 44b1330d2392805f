//! One-dimensional partitions of an interval.
//!
//! Nodes are numbered `0..=J` and cells `0..J`; cell `c` spans
//! `[nodes[c], nodes[c + 1]]`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    nodes: Vec<f64>,
    widths: Vec<f64>,
    h_max: f64,
}

impl Mesh {
    /// Uniform partition of `[a, b]` into `cells` cells.
    pub fn uniform(a: f64, b: f64, cells: usize) -> Result<Self> {
        if cells == 0 {
            return Err(Error::InvalidMesh("cell count must be positive".into()));
        }
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidMesh(format!(
                "left endpoint {a} must be finite and below right endpoint {b}"
            )));
        }
        let len = b - a;
        let nodes = (0..=cells)
            .map(|j| {
                if j == cells {
                    b
                } else {
                    a + len * (j as f64) / (cells as f64)
                }
            })
            .collect();
        Self::from_nodes(nodes)
    }

    /// Arbitrary partition given by strictly increasing nodes.
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::InvalidMesh("need at least two nodes".into()));
        }
        if nodes.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidMesh("nodes must be finite".into()));
        }
        let widths: Vec<f64> = nodes.windows(2).map(|w| w[1] - w[0]).collect();
        if let Some(c) = widths.iter().position(|&h| !(h > 0.0)) {
            return Err(Error::InvalidMesh(format!(
                "nodes must be strictly increasing (cell {c} has width {})",
                widths[c]
            )));
        }
        let h_max = widths.iter().copied().fold(0.0, f64::max);
        Ok(Self {
            nodes,
            widths,
            h_max,
        })
    }

    pub fn a(&self) -> f64 {
        self.nodes[0]
    }

    pub fn b(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    /// Number of cells `J`.
    pub fn cells(&self) -> usize {
        self.widths.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    pub fn width(&self, cell: usize) -> f64 {
        self.widths[cell]
    }

    pub fn h_max(&self) -> f64 {
        self.h_max
    }

    /// Left and right endpoints of a cell.
    pub fn bounds(&self, cell: usize) -> (f64, f64) {
        (self.nodes[cell], self.nodes[cell + 1])
    }

    pub fn midpoint(&self, cell: usize) -> f64 {
        0.5 * (self.nodes[cell] + self.nodes[cell + 1])
    }

    /// Cell containing `x`. A point on an interior node belongs to the cell on its left.
    pub fn locate(&self, x: f64) -> Result<usize> {
        let (a, b) = (self.a(), self.b());
        if !(x >= a && x <= b) {
            return Err(Error::OutOfDomain { x, a, b });
        }
        // first node index with nodes[i] >= x
        let i = self.nodes.partition_point(|&n| n < x);
        Ok(i.saturating_sub(1).min(self.cells() - 1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_nodes() {
        let m = Mesh::uniform(0.0, 1.0, 4).unwrap();
        assert_eq!(m.nodes(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        let m = Mesh::uniform(-1.0, 1.0, 2).unwrap();
        assert_eq!(m.widths(), &[1.0, 1.0]);
        assert_eq!(m.h_max(), 1.0);
    }

    #[test]
    fn test4_mesh_width() {
        let m = Mesh::uniform(1.2, 4.0, 4).unwrap();
        assert!((m.h_max() - 0.7).abs() < 1e-14);
        assert_eq!(m.a(), 1.2);
        assert_eq!(m.b(), 4.0);
        let total: f64 = m.widths().iter().sum();
        assert!((total - 2.8).abs() <= 1e-12 * 2.8);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(Mesh::uniform(0.0, 1.0, 0), Err(Error::InvalidMesh(_))));
        assert!(matches!(Mesh::uniform(1.0, 1.0, 3), Err(Error::InvalidMesh(_))));
        assert!(matches!(Mesh::uniform(2.0, 1.0, 3), Err(Error::InvalidMesh(_))));
        assert!(Mesh::from_nodes(vec![0.0, 0.5, 0.5, 1.0]).is_err());
    }

    #[test]
    fn locate_with_left_tie_break() {
        let m = Mesh::uniform(0.0, 1.0, 4).unwrap();
        // cells are zero-based: I_2 = (0.25, 0.5) is cell 1
        assert_eq!(m.locate(0.3).unwrap(), 1);
        assert_eq!(m.locate(0.25).unwrap(), 0);
        assert_eq!(m.locate(1.0).unwrap(), 3);
        assert_eq!(m.locate(0.0).unwrap(), 0);
        assert!(matches!(m.locate(1.01), Err(Error::OutOfDomain { .. })));
        assert!(m.locate(f64::NAN).is_err());
    }

    #[test]
    fn nonuniform_mesh() {
        let m = Mesh::from_nodes(vec![0.0, 0.1, 0.5, 1.0]).unwrap();
        assert_eq!(m.cells(), 3);
        assert!((m.h_max() - 0.5).abs() < 1e-15);
        assert_eq!(m.locate(0.1).unwrap(), 0);
        assert_eq!(m.locate(0.2).unwrap(), 1);
    }

    proptest::proptest! {
        #[test]
        fn locate_is_monotone(cells in 1usize..40, x in 0.0f64..1.0, y in 0.0f64..1.0) {
            let m = Mesh::uniform(0.0, 1.0, cells).unwrap();
            let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
            proptest::prop_assert!(m.locate(lo).unwrap() <= m.locate(hi).unwrap());
            let c = m.locate(x).unwrap();
            let (l, r) = m.bounds(c);
            proptest::prop_assert!(l <= x && x <= r);
        }

        #[test]
        fn uniform_widths_are_equal(cells in 1usize..200, a in -5.0f64..5.0, len in 0.1f64..10.0) {
            let m = Mesh::uniform(a, a + len, cells).unwrap();
            let h = len / cells as f64;
            for &w in m.widths() {
                proptest::prop_assert!((w - h).abs() <= 1e-12 * len);
            }
            proptest::prop_assert_eq!(m.nodes()[0], a);
            proptest::prop_assert_eq!(m.nodes()[cells], a + len);
        }
    }
}
