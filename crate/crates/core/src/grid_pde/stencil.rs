//! Neumann stencils on the node grid.
//!
//! The boundary is handled by mirror reflection: the ghost node beyond an edge
//! takes the value of the first interior neighbour. This makes the centred
//! difference vanish at boundary nodes and gives the second-order Laplacian
//! `(2u₁ − 2u₀)/Δx²` there.

use crate::grid_pde::{Grid, NodeValue};

#[inline]
fn reflect(i: usize, n: usize, step: isize) -> usize {
    let j = i as isize + step;
    if j < 0 {
        1
    } else if j as usize >= n {
        n - 2
    } else {
        j as usize
    }
}

/// Δ_h u with homogeneous Neumann conditions.
pub fn neumann_laplacian<V: NodeValue>(grid: &Grid, u: &[V]) -> Vec<V> {
    let mut out = vec![V::zero(); u.len()];
    for axis in 0..grid.dimension() {
        let stride = grid.stride(axis);
        let n = grid.axes()[axis].count;
        let inv = 1.0 / (grid.spacing(axis) * grid.spacing(axis));
        for start in grid.line_starts(axis) {
            for i in 0..n {
                let c = u[start + i * stride];
                let l = u[start + reflect(i, n, -1) * stride];
                let r = u[start + reflect(i, n, 1) * stride];
                out[start + i * stride] += (l + r - c * 2.0) * inv;
            }
        }
    }
    out
}

/// Centred first differences ∂_k u per axis; entry `k` is zero beyond the
/// grid dimension and at boundary nodes of axis `k`.
#[allow(clippy::needless_range_loop)]
pub fn gradient<V: NodeValue>(grid: &Grid, u: &[V]) -> Vec<[V; 2]> {
    let mut out = vec![[V::zero(); 2]; u.len()];
    for axis in 0..grid.dimension() {
        let stride = grid.stride(axis);
        let n = grid.axes()[axis].count;
        let inv = 0.5 / grid.spacing(axis);
        for start in grid.line_starts(axis) {
            for i in 0..n {
                let l = u[start + reflect(i, n, -1) * stride];
                let r = u[start + reflect(i, n, 1) * stride];
                out[start + i * stride][axis] = (r - l) * inv;
            }
        }
    }
    out
}

/// Pre-factorized `(I − dt·Δ_axis)` for one axis (Thomas algorithm).
#[derive(Debug, Clone)]
struct LineSolver {
    sub: Vec<f64>,
    sup_mod: Vec<f64>,
    inv_pivot: Vec<f64>,
}

impl LineSolver {
    fn new(n: usize, r: f64) -> Self {
        let mut sub = vec![-r; n];
        let mut sup = vec![-r; n];
        let diag = vec![1.0 + 2.0 * r; n];
        sub[0] = 0.0;
        sup[0] = -2.0 * r;
        sub[n - 1] = -2.0 * r;
        sup[n - 1] = 0.0;

        let mut sup_mod = vec![0.0; n];
        let mut inv_pivot = vec![0.0; n];
        let mut prev = 0.0;
        for i in 0..n {
            let m = diag[i] - sub[i] * prev;
            inv_pivot[i] = 1.0 / m;
            sup_mod[i] = sup[i] / m;
            prev = sup_mod[i];
        }
        Self {
            sub,
            sup_mod,
            inv_pivot,
        }
    }

    fn solve<V: NodeValue>(&self, data: &mut [V], start: usize, stride: usize, scratch: &mut Vec<V>) {
        let n = self.sub.len();
        scratch.clear();
        let mut prev = V::zero();
        for i in 0..n {
            let rhs = data[start + i * stride];
            let y = (rhs - prev * self.sub[i]) * self.inv_pivot[i];
            scratch.push(y);
            prev = y;
        }
        let mut next = scratch[n - 1];
        data[start + (n - 1) * stride] = next;
        for i in (0..n - 1).rev() {
            next = scratch[i] - next * self.sup_mod[i];
            data[start + i * stride] = next;
        }
    }
}

/// Implicit diffusion step `S ≈ (I − dt·Δ_h)⁻¹`, factorized per axis:
/// `S = Π_k (I − dt·Δ_k)⁻¹`.
///
/// Each factor is self-adjoint in the trapezoid-weighted inner product and
/// the factors act on different axes, so `S` is self-adjoint too.
#[derive(Debug, Clone)]
pub struct ImplicitDiffusion {
    dt: f64,
    solvers: Vec<LineSolver>,
    strides: Vec<usize>,
    starts: Vec<Vec<usize>>,
}

impl ImplicitDiffusion {
    pub fn new(grid: &Grid, dt: f64) -> Self {
        let solvers = grid
            .axes()
            .iter()
            .map(|ax| LineSolver::new(ax.count, dt / (ax.spacing() * ax.spacing())))
            .collect();
        Self {
            dt,
            solvers,
            strides: (0..grid.dimension()).map(|k| grid.stride(k)).collect(),
            starts: (0..grid.dimension()).map(|k| grid.line_starts(k)).collect(),
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Applies S in place, axes in increasing order.
    pub fn apply<V: NodeValue>(&self, data: &mut [V]) {
        let mut scratch = Vec::new();
        for k in 0..self.solvers.len() {
            self.sweep(k, data, &mut scratch);
        }
    }

    /// Applies the adjoint of S in place (axes in reverse order).
    pub fn apply_adjoint<V: NodeValue>(&self, data: &mut [V]) {
        let mut scratch = Vec::new();
        for k in (0..self.solvers.len()).rev() {
            self.sweep(k, data, &mut scratch);
        }
    }

    fn sweep<V: NodeValue>(&self, k: usize, data: &mut [V], scratch: &mut Vec<V>) {
        for &start in &self.starts[k] {
            self.solvers[k].solve(data, start, self.strides[k], scratch);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn laplacian_of_constant_vanishes() {
        let g = Grid::square(7, 1.0).unwrap();
        let u = vec![3.5; g.node_count()];
        assert!(neumann_laplacian(&g, &u).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn laplacian_exact_on_quadratics() {
        let g = Grid::line(41, 1.0).unwrap();
        let u: Vec<f64> = (0..41).map(|i| g.coordinate(i, 0).powi(2)).collect();
        let lap = neumann_laplacian(&g, &u);
        for &l in &lap[1..40] {
            assert!((l - 2.0).abs() < 1e-9, "{l}");
        }
    }

    #[test]
    fn laplacian_neumann_eigenmode() {
        let g = Grid::line(201, 1.0).unwrap();
        let u: Vec<f64> = (0..201).map(|i| (PI * g.coordinate(i, 0)).cos()).collect();
        let lap = neumann_laplacian(&g, &u);
        let err = lap
            .iter()
            .zip(&u)
            .map(|(l, c)| (l + PI * PI * c).abs())
            .fold(0.0, f64::max);
        assert!(err <= 1e-3, "{err}");
    }

    #[test]
    fn gradient_centred_and_zero_on_boundary() {
        let g = Grid::line(11, 1.0).unwrap();
        let u: Vec<f64> = (0..11).map(|i| 3.0 * g.coordinate(i, 0)).collect();
        let grad = gradient(&g, &u);
        assert_eq!(grad[0][0], 0.0);
        assert_eq!(grad[10][0], 0.0);
        assert!((grad[5][0] - 3.0).abs() < 1e-12);
        assert_eq!(grad[5][1], 0.0);
    }

    #[test]
    fn implicit_step_inverts_operator() {
        let g = Grid::square(9, 1.0).unwrap();
        let dt = 0.01;
        let u: Vec<f64> = (0..g.node_count()).map(|i| ((i * 37) % 11) as f64).collect();
        let mut x = u.clone();
        let s = ImplicitDiffusion::new(&g, dt);
        s.apply(&mut x);
        // (I − dt Δx)(I − dt Δy) x = u for the factorized solve
        let mut y = x.clone();
        for axis in [1usize, 0] {
            let mut lap = vec![0.0; y.len()];
            let stride = g.stride(axis);
            let n = g.axes()[axis].count;
            let inv = 1.0 / g.spacing(axis).powi(2);
            for start in g.line_starts(axis) {
                for i in 0..n {
                    let c = y[start + i * stride];
                    let l = y[start + reflect(i, n, -1) * stride];
                    let r = y[start + reflect(i, n, 1) * stride];
                    lap[start + i * stride] = (l + r - 2.0 * c) * inv;
                }
            }
            for (yi, li) in y.iter_mut().zip(&lap) {
                *yi -= dt * li;
            }
        }
        let err = y.iter().zip(&u).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn implicit_step_is_weighted_self_adjoint() {
        let g = Grid::square(8, 1.0).unwrap();
        let s = ImplicitDiffusion::new(&g, 0.003);
        let a: Vec<f64> = (0..g.node_count()).map(|i| ((i * 13) % 7) as f64 - 3.0).collect();
        let b: Vec<f64> = (0..g.node_count()).map(|i| ((i * 5) % 9) as f64 * 0.5).collect();
        let (mut sa, mut sb) = (a.clone(), b.clone());
        s.apply(&mut sa);
        s.apply_adjoint(&mut sb);
        let w = g.weights();
        let lhs: f64 = sa.iter().zip(&b).zip(w).map(|((x, y), w)| w * x * y).sum();
        let rhs: f64 = a.iter().zip(&sb).zip(w).map(|((x, y), w)| w * x * y).sum();
        assert!((lhs - rhs).abs() < 1e-13 * lhs.abs().max(1.0));
    }
}
