use std::sync::Arc;

use crate::error::{invalid, Result};
use crate::fields::VectorField;
use crate::solver::convolution::{DirectSources, Grid};
use crate::{Mat3, Vec3};

/// Nodal velocities with finite-difference gradients, evaluated by tensor-product
/// cubic interpolation inside the node hull (linear next to its faces).
///
/// Points in the half-cell rim between the node hull and the cell box are
/// extrapolated linearly. Farther points fall back to a direct quadrature of the
/// sources, when these were kept.
#[derive(Clone, Copy, Debug, Default)]
struct AxisWeights {
    start: usize,
    len: usize,
    w: [f64; 4],
}

#[derive(Clone)]
pub struct GridField {
    grid: Grid,
    values: Vec<Vec3>,
    gradients: Vec<Mat3>,
    sources: Option<Arc<DirectSources>>,
}

impl std::fmt::Debug for GridField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GridField")
            .field("grid", &self.grid)
            .field("direct", &self.sources.is_some())
            .finish()
    }
}

impl GridField {
    pub fn new(grid: Grid, values: Vec<Vec3>) -> Result<Self> {
        if values.len() != grid.len() {
            return invalid(format!(
                "expected {} nodal values, got {}",
                grid.len(),
                values.len()
            ));
        }
        let gradients = nodal_gradients(&grid, &values);
        Ok(Self {
            grid,
            values,
            gradients,
            sources: None,
        })
    }

    pub fn zero(grid: Grid) -> Self {
        let len = grid.len();
        Self {
            grid,
            values: vec![Vec3::zeros(); len],
            gradients: vec![Mat3::zeros(); len],
            sources: None,
        }
    }

    pub fn with_sources(mut self, sources: DirectSources) -> Self {
        self.sources = Some(Arc::new(sources));
        self
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Vec3] {
        &self.values
    }

    pub fn nodal_gradients(&self) -> &[Mat3] {
        &self.gradients
    }

    /// Root-mean-square of the nodal values times `√|box|`.
    pub fn grid_l2(&self) -> f64 {
        grid_l2(&self.grid, &self.values)
    }

    /// Per-axis interpolation weights: cubic Lagrange on four nodes where the
    /// stencil fits inside the grid, linear on two nodes otherwise. `None` for
    /// points beyond the half-cell rim.
    fn stencil(&self, x: &Vec3) -> Option<[AxisWeights; 3]> {
        let mut out = [AxisWeights::default(); 3];
        for (a, w) in out.iter_mut().enumerate() {
            let s = (x[a] - self.grid.origin[a]) / self.grid.spacing - 0.5;
            let n = self.grid.dims[a];
            if !(s >= -0.5 && s <= n as f64 - 0.5) {
                return None;
            }
            let i = (s.floor().max(0.0) as usize).min(n - 2);
            let t = s - i as f64;
            *w = if i >= 1 && i + 2 < n && (0.0..=1.0).contains(&t) {
                AxisWeights {
                    start: i - 1,
                    len: 4,
                    w: [
                        -t * (t - 1.0) * (t - 2.0) / 6.0,
                        (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
                        -(t + 1.0) * t * (t - 2.0) / 2.0,
                        (t + 1.0) * t * (t - 1.0) / 6.0,
                    ],
                }
            } else {
                AxisWeights {
                    start: i,
                    len: 2,
                    w: [1.0 - t, t, 0.0, 0.0],
                }
            };
        }
        Some(out)
    }

    fn interpolate<T>(&self, data: &[T], w: &[AxisWeights; 3]) -> T
    where
        T: Copy + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
    {
        let mut acc: Option<T> = None;
        for dk in 0..w[2].len {
            for dj in 0..w[1].len {
                let wjk = w[1].w[dj] * w[2].w[dk];
                for di in 0..w[0].len {
                    let v =
                        data[self
                            .grid
                            .index(w[0].start + di, w[1].start + dj, w[2].start + dk)]
                            * (w[0].w[di] * wjk);
                    acc = Some(match acc {
                        Some(a) => a + v,
                        None => v,
                    });
                }
            }
        }
        acc.expect("nonempty stencil")
    }

    fn direct_gradient(&self, sources: &DirectSources, x: &Vec3) -> Mat3 {
        let h = 1e-3 * self.grid.spacing;
        let mut g = Mat3::zeros();
        for j in 0..3 {
            let mut e = Vec3::zeros();
            e[j] = 1.0;
            let d = (sources.velocity(&(x + e * h)) - sources.velocity(&(x - e * h))) * 8.0
                - (sources.velocity(&(x + e * (2.0 * h))) - sources.velocity(&(x - e * (2.0 * h))));
            g.set_column(j, &(d / (12.0 * h)));
        }
        g
    }
}

impl VectorField for GridField {
    fn velocity(&self, x: &Vec3) -> Vec3 {
        match (self.stencil(x), &self.sources) {
            (Some(w), _) => self.interpolate(&self.values, &w),
            (None, Some(src)) => src.velocity(x),
            (None, None) => Vec3::zeros(),
        }
    }

    fn gradient(&self, x: &Vec3) -> Mat3 {
        match (self.stencil(x), &self.sources) {
            (Some(w), _) => self.interpolate(&self.gradients, &w),
            (None, Some(src)) => self.direct_gradient(src, x),
            (None, None) => Mat3::zeros(),
        }
    }
}

pub(crate) fn grid_l2(grid: &Grid, values: &[Vec3]) -> f64 {
    (values.iter().map(|v| v.norm_squared()).sum::<f64>() * grid.cell_volume()).sqrt()
}

/// Central differences inside, second-order one-sided differences on the faces.
pub(crate) fn nodal_gradients(grid: &Grid, values: &[Vec3]) -> Vec<Mat3> {
    let [nx, ny, nz] = grid.dims;
    let inv = 1.0 / grid.spacing;
    let mut out = vec![Mat3::zeros(); values.len()];
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let idx = [i, j, k];
                let mut g = Mat3::zeros();
                for axis in 0..3 {
                    let n = grid.dims[axis];
                    let at = |m: usize| {
                        let mut c = idx;
                        c[axis] = m;
                        values[grid.index(c[0], c[1], c[2])]
                    };
                    let m = idx[axis];
                    let d = if m == 0 {
                        (at(0) * -3.0 + at(1) * 4.0 - at(2)) * (0.5 * inv)
                    } else if m == n - 1 {
                        (at(m) * 3.0 - at(m - 1) * 4.0 + at(m - 2)) * (0.5 * inv)
                    } else {
                        (at(m + 1) - at(m - 1)) * (0.5 * inv)
                    };
                    g.set_column(axis, &d);
                }
                out[grid.index(i, j, k)] = g;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Domain;

    fn quadratic(x: &Vec3) -> Vec3 {
        Vec3::new(x[0] * x[1], x[2] * x[2] - x[0], 3.0 * x[1] + x[0] * x[2])
    }

    fn quadratic_gradient(x: &Vec3) -> Mat3 {
        Mat3::new(x[1], x[0], 0.0, -1.0, 0.0, 2.0 * x[2], x[2], 3.0, x[0])
    }

    #[test]
    fn finite_differences_are_exact_for_quadratics() {
        let grid = Grid::cube(&Domain::unit_cube(), 5).unwrap();
        let values: Vec<Vec3> = grid.nodes().iter().map(quadratic).collect();
        let field = GridField::new(grid.clone(), values).unwrap();
        for (x, g) in grid.nodes().iter().zip(field.nodal_gradients()) {
            assert!((g - quadratic_gradient(x)).norm() < 1e-12);
        }
    }

    #[test]
    fn interpolation_reproduces_linear_fields_and_nodes() {
        let grid = Grid::cube(&Domain::unit_cube(), 4).unwrap();
        let a = Mat3::new(1.0, 2.0, 0.0, -1.0, 0.5, 3.0, 0.0, 1.0, -1.5);
        let lin = |x: &Vec3| a * x + Vec3::new(0.1, 0.2, 0.3);
        let field = GridField::new(grid.clone(), grid.nodes().iter().map(lin).collect()).unwrap();
        for x in [
            Vec3::new(0.3, 0.41, 0.77),
            Vec3::new(0.02, 0.5, 0.99),
            grid.node(1, 2, 3),
        ] {
            assert!((field.velocity(&x) - lin(&x)).norm() < 1e-13);
            assert!((field.gradient(&x) - a).norm() < 1e-12);
        }
        assert_eq!(field.velocity(&Vec3::new(2.0, 0.0, 0.0)), Vec3::zeros());
    }

    #[test]
    fn interior_interpolation_is_exact_for_cubics() {
        let grid = Grid::cube(&Domain::unit_cube(), 8).unwrap();
        let cubic = |x: &Vec3| {
            Vec3::new(
                x[0].powi(3) - x[1] * x[2] * x[0],
                x[1].powi(2) * x[2],
                x[2].powi(3) + x[0],
            )
        };
        let field = GridField::new(grid.clone(), grid.nodes().iter().map(cubic).collect()).unwrap();
        for x in [Vec3::new(0.3, 0.41, 0.77), Vec3::new(0.5, 0.2, 0.66)] {
            assert!((field.velocity(&x) - cubic(&x)).norm() < 1e-13);
        }
    }
}
