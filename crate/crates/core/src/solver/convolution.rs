use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::config::{DensityField, Domain};
use crate::error::{invalid, Result};
use crate::Vec3;

/// Cell-centred grid; nodes sit at `origin + (i + ½) h`.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub origin: Vec3,
    pub dims: [usize; 3],
    pub spacing: f64,
}

impl Grid {
    pub fn new(origin: Vec3, dims: [usize; 3], spacing: f64) -> Result<Self> {
        if dims.iter().any(|&d| d < 3) {
            return invalid(format!(
                "grid needs at least 3 nodes per axis, got {dims:?}"
            ));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return invalid("grid spacing must be positive");
        }
        Ok(Self {
            origin,
            dims,
            spacing,
        })
    }

    /// `n³` cells covering a cubic domain.
    pub fn cube(domain: &Domain, n: usize) -> Result<Self> {
        let l = domain.lengths();
        if (l[0] - l[1]).abs() > 1e-12 * l[0] || (l[0] - l[2]).abs() > 1e-12 * l[0] {
            return invalid("cubic domain required");
        }
        Self::new(Vec3::from(domain.min), [n; 3], l[0] / n as f64)
    }

    /// The grid on which `rho` is defined.
    pub fn of_density(rho: &DensityField) -> Result<Self> {
        Self::new(Vec3::from(rho.origin), rho.dims, rho.spacing)
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    pub fn node(&self, i: usize, j: usize, k: usize) -> Vec3 {
        self.origin + Vec3::new(i as f64 + 0.5, j as f64 + 0.5, k as f64 + 0.5) * self.spacing
    }

    /// Node positions in storage order (x fastest).
    pub fn nodes(&self) -> Vec<Vec3> {
        let [nx, ny, nz] = self.dims;
        let mut out = Vec::with_capacity(self.len());
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    out.push(self.node(i, j, k));
                }
            }
        }
        out
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(3)
    }

    /// Box covered by the cells.
    pub fn bounds(&self) -> Domain {
        let max = self.origin
            + Vec3::new(
                self.dims[0] as f64,
                self.dims[1] as f64,
                self.dims[2] as f64,
            ) * self.spacing;
        Domain {
            min: self.origin.into(),
            max: max.into(),
        }
    }

    /// Refined grid with the same bounds and `factor` times as many cells per axis.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        Self::new(
            self.origin,
            self.dims.map(|d| d * factor),
            self.spacing / factor as f64,
        )
    }

    /// Radius of the ball with the volume of one cell.
    pub fn equivalent_radius(&self) -> f64 {
        self.spacing * (3.0 / (4.0 * PI)).cbrt()
    }
}

/// Symmetric pair `(j, k)` to storage slot `[xx, yy, zz, xy, xz, yz]`.
pub(crate) const SYM2: [[usize; 3]; 3] = [[0, 3, 4], [3, 1, 5], [4, 5, 2]];

/// Sorted triple to one of the 10 slots of a fully symmetric 3-tensor.
fn sym3(i: usize, j: usize, k: usize) -> usize {
    let mut t = [i, j, k];
    t.sort_unstable();
    match t {
        [0, 0, 0] => 0,
        [0, 0, 1] => 1,
        [0, 0, 2] => 2,
        [0, 1, 1] => 3,
        [0, 1, 2] => 4,
        [0, 2, 2] => 5,
        [1, 1, 1] => 6,
        [1, 1, 2] => 7,
        [1, 2, 2] => 8,
        _ => 9,
    }
}

const TRIPLES: [[usize; 3]; 10] = [
    [0, 0, 0],
    [0, 0, 1],
    [0, 0, 2],
    [0, 1, 1],
    [0, 1, 2],
    [0, 2, 2],
    [1, 1, 1],
    [1, 1, 2],
    [1, 2, 2],
    [2, 2, 2],
];

/// In-place 3-D FFT over a padded box, optionally skipping lines known to be zero
/// on input (forward) or not needed on output (inverse).
struct Fft3 {
    dims: [usize; 3],
    forward: [Arc<dyn Fft<f64>>; 3],
    inverse: [Arc<dyn Fft<f64>>; 3],
    scratch_len: usize,
}

impl Fft3 {
    fn new(dims: [usize; 3]) -> Self {
        let mut planner = FftPlanner::new();
        let forward = dims.map(|d| planner.plan_fft_forward(d));
        let inverse = dims.map(|d| planner.plan_fft_inverse(d));
        let scratch_len = forward
            .iter()
            .chain(&inverse)
            .map(|p| p.get_inplace_scratch_len())
            .max()
            .unwrap_or(0);
        Self {
            dims,
            forward,
            inverse,
            scratch_len,
        }
    }

    fn len(&self) -> usize {
        self.dims.iter().product()
    }

    /// `support` bounds the nonzero input block.
    fn forward(&self, data: &mut [Complex64], support: [usize; 3]) {
        let mut scratch = vec![Complex64::default(); self.scratch_len];
        self.axis0(data, &self.forward[0], support[1], support[2], &mut scratch);
        self.axis1(data, &self.forward[1], support[2], &mut scratch);
        self.axis2(data, &self.forward[2], &mut scratch);
    }

    /// Only the block `[0, keep)` is valid on return.
    fn inverse(&self, data: &mut [Complex64], keep: [usize; 3]) {
        let mut scratch = vec![Complex64::default(); self.scratch_len];
        self.axis2(data, &self.inverse[2], &mut scratch);
        self.axis1(data, &self.inverse[1], keep[2], &mut scratch);
        self.axis0(data, &self.inverse[0], keep[1], keep[2], &mut scratch);
        let scale = 1.0 / self.len() as f64;
        let [l0, l1, _] = self.dims;
        for k in 0..keep[2] {
            for j in 0..keep[1] {
                let start = l0 * (j + l1 * k);
                data[start..start + keep[0]]
                    .iter_mut()
                    .for_each(|v| *v *= scale);
            }
        }
    }

    fn axis0(
        &self,
        data: &mut [Complex64],
        plan: &Arc<dyn Fft<f64>>,
        ny: usize,
        nz: usize,
        scratch: &mut [Complex64],
    ) {
        let [l0, l1, _] = self.dims;
        for k in 0..nz {
            let start = l0 * l1 * k;
            plan.process_with_scratch(&mut data[start..start + l0 * ny], scratch);
        }
    }

    fn axis1(
        &self,
        data: &mut [Complex64],
        plan: &Arc<dyn Fft<f64>>,
        nz: usize,
        scratch: &mut [Complex64],
    ) {
        let [l0, l1, _] = self.dims;
        let mut buf = vec![Complex64::default(); l0 * l1];
        for k in 0..nz {
            let slab = &mut data[l0 * l1 * k..l0 * l1 * (k + 1)];
            for j in 0..l1 {
                for i in 0..l0 {
                    buf[i * l1 + j] = slab[j * l0 + i];
                }
            }
            plan.process_with_scratch(&mut buf, scratch);
            for j in 0..l1 {
                for i in 0..l0 {
                    slab[j * l0 + i] = buf[i * l1 + j];
                }
            }
        }
    }

    fn axis2(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>, scratch: &mut [Complex64]) {
        let [l0, l1, l2] = self.dims;
        let mut buf = vec![Complex64::default(); l0 * l2];
        for j in 0..l1 {
            for k in 0..l2 {
                let row = l0 * (j + l1 * k);
                for i in 0..l0 {
                    buf[i * l2 + k] = data[row + i];
                }
            }
            plan.process_with_scratch(&mut buf, scratch);
            for k in 0..l2 {
                let row = l0 * (j + l1 * k);
                for i in 0..l0 {
                    data[row + i] = buf[i * l2 + k];
                }
            }
        }
    }
}

/// Discrete convolutions `h³ Σ_b K(x_a − x_b) g_b` with the Oseen tensor and with
/// the divergence kernel `∂_k 𝒰_ij`, evaluated in `O(N log N)` by zero padding.
///
/// The singular cell uses the average of the kernel over the ball with the cell's
/// volume: `I / (4π R_c)` for the Oseen tensor and zero for the odd kernel.
pub struct StokesConvolver {
    grid: Grid,
    fft: Fft3,
    padded: [usize; 3],
    oseen: OnceLock<Vec<Vec<Complex64>>>,
    divergence: OnceLock<Vec<Vec<Complex64>>>,
}

impl StokesConvolver {
    pub fn new(grid: Grid) -> Self {
        let padded = grid.dims.map(|d| 2 * d);
        Self {
            fft: Fft3::new(padded),
            grid,
            padded,
            oseen: OnceLock::new(),
            divergence: OnceLock::new(),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    fn padded_len(&self) -> usize {
        self.padded.iter().product()
    }

    /// Transformed kernel components sampled at every grid offset.
    fn kernel_transforms(
        &self,
        components: usize,
        eval: impl Fn(&Vec3) -> Vec<f64>,
        origin: Vec<f64>,
    ) -> Vec<Vec<Complex64>> {
        let [l0, l1, l2] = self.padded;
        let [n0, n1, n2] = self.grid.dims;
        let h = self.grid.spacing;
        let w = self.grid.cell_volume();
        let offset = |m: usize, l: usize, n: usize| -> Option<f64> {
            if m < n {
                Some(m as f64)
            } else if m > l - n {
                Some(m as f64 - l as f64)
            } else {
                None
            }
        };
        let mut out = vec![vec![Complex64::default(); self.padded_len()]; components];
        for k in 0..l2 {
            let Some(oz) = offset(k, l2, n2) else {
                continue;
            };
            for j in 0..l1 {
                let Some(oy) = offset(j, l1, n1) else {
                    continue;
                };
                for i in 0..l0 {
                    let Some(ox) = offset(i, l0, n0) else {
                        continue;
                    };
                    let idx = i + l0 * (j + l1 * k);
                    let values = if i == 0 && j == 0 && k == 0 {
                        origin.clone()
                    } else {
                        eval(&(Vec3::new(ox, oy, oz) * h))
                    };
                    for (c, v) in values.into_iter().enumerate() {
                        out[c][idx] = Complex64::new(v * w, 0.0);
                    }
                }
            }
        }
        for comp in &mut out {
            self.fft.forward(comp, self.padded);
        }
        out
    }

    fn oseen_hat(&self) -> &[Vec<Complex64>] {
        self.oseen.get_or_init(|| {
            let c = 1.0 / (8.0 * PI);
            let eval = |x: &Vec3| {
                let r = x.norm();
                let r3 = r * r * r;
                (0..6)
                    .map(|s| {
                        let (a, b) = SLOT_PAIRS[s];
                        c * (if a == b { 1.0 / r } else { 0.0 } + x[a] * x[b] / r3)
                    })
                    .collect()
            };
            let diag = 1.0 / (4.0 * PI * self.grid.equivalent_radius());
            self.kernel_transforms(6, eval, vec![diag, diag, diag, 0.0, 0.0, 0.0])
        })
    }

    fn divergence_hat(&self) -> &[Vec<Complex64>] {
        self.divergence.get_or_init(|| {
            let c = -3.0 / (8.0 * PI);
            let eval = |x: &Vec3| {
                let r2 = x.norm_squared();
                let r5 = r2 * r2 * r2.sqrt();
                TRIPLES
                    .iter()
                    .map(|t| c * x[t[0]] * x[t[1]] * x[t[2]] / r5)
                    .collect()
            };
            self.kernel_transforms(10, eval, vec![0.0; 10])
        })
    }

    fn load(&self, values: impl Iterator<Item = f64>) -> Vec<Complex64> {
        let [l0, l1, _] = self.padded;
        let [n0, n1, _] = self.grid.dims;
        let mut out = vec![Complex64::default(); self.padded_len()];
        for (idx, v) in values.enumerate() {
            let i = idx % n0;
            let j = (idx / n0) % n1;
            let k = idx / (n0 * n1);
            out[i + l0 * (j + l1 * k)] = Complex64::new(v, 0.0);
        }
        self.fft.forward(&mut out, self.grid.dims);
        out
    }

    fn unload(&self, mut spectrum: Vec<Complex64>) -> Vec<f64> {
        self.fft.inverse(&mut spectrum, self.grid.dims);
        let [l0, l1, _] = self.padded;
        let [n0, n1, n2] = self.grid.dims;
        let mut out = Vec::with_capacity(self.grid.len());
        for k in 0..n2 {
            for j in 0..n1 {
                for i in 0..n0 {
                    out.push(spectrum[i + l0 * (j + l1 * k)].re);
                }
            }
        }
        out
    }

    /// `∫ 𝒰(x_a − y) f(y) dy` by cellwise midpoint quadrature.
    pub fn oseen_apply(&self, f: &[Vec3]) -> Result<Vec<Vec3>> {
        self.check_len(f.len())?;
        let kernel = self.oseen_hat();
        let inputs: Vec<_> = (0..3).map(|c| self.load(f.iter().map(|v| v[c]))).collect();
        let mut out = vec![Vec3::zeros(); f.len()];
        for i in 0..3 {
            let mut acc = vec![Complex64::default(); self.padded_len()];
            for (j, input) in inputs.iter().enumerate() {
                let k = &kernel[SYM2[i][j]];
                for ((a, kv), iv) in acc.iter_mut().zip(k).zip(input) {
                    *a += kv * iv;
                }
            }
            for (o, v) in out.iter_mut().zip(self.unload(acc)) {
                o[i] = v;
            }
        }
        Ok(out)
    }

    /// `𝒰 ⋆ div T = ∫ ∂_k 𝒰_ij(x_a − y) T_jk(y) dy` for trace-free symmetric `T`
    /// stored as `[xx, yy, zz, xy, xz, yz]`.
    pub fn divergence_apply(&self, t: &[[f64; 6]]) -> Result<Vec<Vec3>> {
        self.check_len(t.len())?;
        let kernel = self.divergence_hat();
        let inputs: Vec<_> = (0..6).map(|c| self.load(t.iter().map(|v| v[c]))).collect();
        let mut out = vec![Vec3::zeros(); t.len()];
        for i in 0..3 {
            let mut acc = vec![Complex64::default(); self.padded_len()];
            for j in 0..3 {
                for k in 0..3 {
                    let kern = &kernel[sym3(i, j, k)];
                    let input = &inputs[SYM2[j][k]];
                    for ((a, kv), iv) in acc.iter_mut().zip(kern).zip(input) {
                        *a += kv * iv;
                    }
                }
            }
            for (o, v) in out.iter_mut().zip(self.unload(acc)) {
                o[i] = v;
            }
        }
        Ok(out)
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.grid.len() {
            return invalid(format!(
                "expected {} nodal values, got {len}",
                self.grid.len()
            ));
        }
        Ok(())
    }
}

pub(crate) fn slots_to_matrix(t: &[f64; 6]) -> crate::Mat3 {
    let [xx, yy, zz, xy, xz, yz] = *t;
    crate::Mat3::new(xx, xy, xz, xy, yy, yz, xz, yz, zz)
}

pub(crate) const SLOT_PAIRS: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)];

/// Direct (quadratic cost) evaluation of the same quadratures at an arbitrary point.
#[derive(Clone, Debug, Default)]
pub struct DirectSources {
    pub nodes: Vec<Vec3>,
    pub weight: f64,
    pub singular_radius: f64,
    /// Force density already divided by the viscosity.
    pub force: Option<Vec<Vec3>>,
    pub stress: Option<Vec<[f64; 6]>>,
}

impl DirectSources {
    pub fn velocity(&self, x: &Vec3) -> Vec3 {
        let c = 1.0 / (8.0 * PI);
        let mut u = Vec3::zeros();
        for (b, y) in self.nodes.iter().enumerate() {
            let d = x - y;
            let r = d.norm();
            if let Some(f) = &self.force {
                let fb = f[b];
                if r < self.singular_radius {
                    u += fb / (4.0 * PI * self.singular_radius);
                } else {
                    u += (fb / r + d * (d.dot(&fb) / (r * r * r))) * c;
                }
            }
            if let Some(t) = &self.stress {
                if r >= self.singular_radius {
                    let m = slots_to_matrix(&t[b]);
                    let q = d.dot(&(m * d));
                    u += d * (-3.0 * c * q / (r * r * r * r * r));
                }
            }
        }
        u * self.weight
    }
}
