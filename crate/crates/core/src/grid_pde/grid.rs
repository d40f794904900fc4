use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// One coordinate axis of a node-centred grid: nodes at `i·extent/(count−1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub extent: f64,
    pub count: usize,
}

impl Axis {
    pub fn new(extent: f64, count: usize) -> Self {
        Self { extent, count }
    }

    pub fn spacing(&self) -> f64 {
        self.extent / (self.count - 1) as f64
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        i as f64 * self.spacing()
    }
}

/// Control sub-box ω, given per axis as fractions of the extent.
///
/// A node belongs to ω when `lo < x/extent < hi` on every axis (open box).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlRegion {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl ControlRegion {
    /// Centred box covering `fraction` of each axis.
    pub fn centered(dimension: usize, fraction: f64) -> Self {
        let lo = 0.5 - 0.5 * fraction;
        let hi = 0.5 + 0.5 * fraction;
        Self {
            lo: vec![lo; dimension],
            hi: vec![hi; dimension],
        }
    }
}

/// Default ω: centred sub-box covering a quarter of each axis.
pub const DEFAULT_OMEGA_FRACTION: f64 = 0.25;

/// Rectangular grid on [0, L₁] (× [0, L₂]) with homogeneous Neumann boundary
/// and a control mask. Nodes are stored row-major: the last axis is fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    axes: Vec<Axis>,
    region: ControlRegion,
    mask: Vec<bool>,
    weights: Vec<f64>,
}

impl Grid {
    pub fn new(axes: Vec<Axis>, region: ControlRegion) -> Result<Self> {
        let n = axes.len();
        if !(1..=2).contains(&n) {
            return Err(domain(format!("grid dimension must be 1 or 2, got {n}")));
        }
        for (k, ax) in axes.iter().enumerate() {
            if ax.count < 3 {
                return Err(domain(format!("axis {k}: need at least 3 nodes, got {}", ax.count)));
            }
            if !(ax.extent.is_finite() && ax.extent > 0.0) {
                return Err(domain(format!("axis {k}: extent must be positive")));
            }
        }
        if region.lo.len() != n || region.hi.len() != n {
            return Err(domain("control region dimension does not match the grid"));
        }
        for k in 0..n {
            let (lo, hi) = (region.lo[k], region.hi[k]);
            if !(0.0 <= lo && lo < hi && hi <= 1.0) {
                return Err(domain(format!("control region axis {k}: need 0 <= lo < hi <= 1")));
            }
        }

        let total: usize = axes.iter().map(|a| a.count).product();
        let mut grid = Self {
            axes,
            region,
            mask: vec![false; total],
            weights: vec![0.0; total],
        };
        for idx in 0..total {
            let mut inside = true;
            let mut w = 1.0;
            for k in 0..n {
                let ax = grid.axes[k];
                let i = grid.axis_index(idx, k);
                let s = i as f64 / (ax.count - 1) as f64;
                let eps = 1e-12;
                inside &= s > grid.region.lo[k] + eps && s < grid.region.hi[k] - eps;
                let edge = i == 0 || i == ax.count - 1;
                w *= ax.spacing() * if edge { 0.5 } else { 1.0 };
            }
            grid.mask[idx] = inside;
            grid.weights[idx] = w;
        }

        let interior_only = (0..total).all(|idx| {
            !grid.mask[idx]
                || (0..n).all(|k| {
                    let i = grid.axis_index(idx, k);
                    i > 0 && i < grid.axes[k].count - 1
                })
        });
        let count = grid.mask.iter().filter(|&&m| m).count();
        let interior: usize = grid.axes.iter().map(|a| a.count - 2).product();
        if count == 0 || !interior_only || count >= interior {
            return Err(domain(
                "control region must be a nonempty strict subset of the interior nodes",
            ));
        }
        Ok(grid)
    }

    /// Uniform 1D grid on [0, extent] with the default centred ω.
    pub fn line(count: usize, extent: f64) -> Result<Self> {
        Self::new(
            vec![Axis::new(extent, count)],
            ControlRegion::centered(1, DEFAULT_OMEGA_FRACTION),
        )
    }

    /// Uniform 2D grid on [0, extent]² with the default centred ω.
    pub fn square(count: usize, extent: f64) -> Result<Self> {
        Self::new(
            vec![Axis::new(extent, count), Axis::new(extent, count)],
            ControlRegion::centered(2, DEFAULT_OMEGA_FRACTION),
        )
    }

    pub fn dimension(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn region(&self) -> &ControlRegion {
        &self.region
    }

    pub fn node_count(&self) -> usize {
        self.mask.len()
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.axes[axis].spacing()
    }

    /// Distance in the flat node array between neighbours along `axis`.
    pub fn stride(&self, axis: usize) -> usize {
        self.axes[axis + 1..].iter().map(|a| a.count).product()
    }

    pub fn axis_index(&self, node: usize, axis: usize) -> usize {
        (node / self.stride(axis)) % self.axes[axis].count
    }

    pub fn coordinate(&self, node: usize, axis: usize) -> f64 {
        self.axes[axis].coordinate(self.axis_index(node, axis))
    }

    /// Coordinates of a node; unused trailing entries are zero.
    pub fn coordinates(&self, node: usize) -> [f64; 2] {
        let mut x = [0.0; 2];
        for (k, xk) in x.iter_mut().enumerate().take(self.dimension()) {
            *xk = self.coordinate(node, k);
        }
        x
    }

    /// First node of every grid line running along `axis`.
    pub fn line_starts(&self, axis: usize) -> Vec<usize> {
        let stride = self.stride(axis);
        let len = self.axes[axis].count;
        (0..self.node_count())
            .filter(|&idx| (idx / stride).is_multiple_of(len))
            .collect()
    }

    /// Characteristic function of ω.
    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn in_omega(&self, node: usize) -> bool {
        self.mask[node]
    }

    /// Trapezoidal quadrature weights; the discrete L² inner product uses them.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// |Ω|.
    pub fn volume(&self) -> f64 {
        self.axes.iter().map(|a| a.extent).product()
    }
}
