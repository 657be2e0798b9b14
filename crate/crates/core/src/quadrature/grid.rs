//! Masked tensor meshes and grid functions.

use std::fmt;
use std::sync::Arc;

use crate::error::{domain, FracError, Result};
use crate::geometry::Domain;

/// A closed-form field x ↦ f(x), shared across threads.
pub type FieldFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

const NONE: u32 = u32::MAX;

/// Cell centers of a uniform tensor grid whose centroids lie in the domain.
#[derive(Clone)]
pub struct Mesh {
    domain: Domain,
    dim: usize,
    lo: [f64; 3],
    hi: [f64; 3],
    h: f64,
    counts: [usize; 3],
    resolution: usize,
    cells: Vec<[u32; 3]>,
    nodes: Vec<[f64; 3]>,
    lookup: Vec<u32>,
}

impl fmt::Debug for Mesh {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Mesh")
            .field("dim", &self.dim)
            .field("h", &self.h)
            .field("counts", &self.counts)
            .field("nodes", &self.nodes.len())
            .finish()
    }
}

impl PartialEq for Mesh {
    fn eq(&self, other: &Self) -> bool {
        self.domain == other.domain
            && self.lo == other.lo
            && self.h == other.h
            && self.counts == other.counts
            && self.cells == other.cells
    }
}

impl Mesh {
    /// Grid over the bounding box of a bounded domain.
    pub fn new(domain: &Domain, resolution: usize) -> Result<Self> {
        let Some((lo, hi)) = domain.bounding_box() else {
            return Err(FracError::Precondition(
                "unbounded domains need an explicit support box (use Mesh::in_box)".into(),
            ));
        };
        Self::in_box(domain, &lo, &hi, resolution)
    }

    /// Grid over an axis-aligned box; only cells with interior centroids are kept.
    /// For a half-space the box must lie in the closed half-space.
    pub fn in_box(domain: &Domain, lo: &[f64], hi: &[f64], resolution: usize) -> Result<Self> {
        domain.validate()?;
        let dim = domain.dim();
        if dim > 3 {
            return Err(FracError::Unsupported(format!("grids in dimension {dim}")));
        }
        if resolution < 2 {
            return crate::error::domain("grid resolution must be at least 2");
        }
        if lo.len() != dim || hi.len() != dim || lo.iter().zip(hi).any(|(a, b)| !(b > a) || !a.is_finite() || !b.is_finite()) {
            return crate::error::domain("support box must be finite with hi > lo in every axis");
        }
        if let Domain::HalfSpace { normal, offset } = domain {
            // every box corner must satisfy n·x >= offset
            for mask in 0..(1usize << dim) {
                let corner: f64 = (0..dim)
                    .map(|k| normal[k] * if mask >> k & 1 == 1 { hi[k] } else { lo[k] })
                    .sum();
                if corner < offset - 1e-12 * (1.0 + offset.abs()) {
                    return crate::error::domain("support box must lie inside the closed half-space");
                }
            }
        }
        let h = (0..dim).map(|k| hi[k] - lo[k]).fold(0.0, f64::max) / resolution as f64;
        let mut counts = [1usize; 3];
        let mut lo3 = [0.0; 3];
        let mut hi3 = [0.0; 3];
        for k in 0..dim {
            counts[k] = (((hi[k] - lo[k]) / h) - 1e-9).ceil().max(1.0) as usize;
            lo3[k] = lo[k];
            hi3[k] = hi[k];
        }
        let total = counts[0] * counts[1] * counts[2];
        let mut lookup = vec![NONE; total];
        let mut cells = Vec::new();
        let mut nodes = Vec::new();
        let mut x = vec![0.0; dim];
        for i0 in 0..counts[0] {
            for i1 in 0..counts[1] {
                for i2 in 0..counts[2] {
                    let idx = [i0, i1, i2];
                    let mut c = [0.0; 3];
                    for k in 0..dim {
                        c[k] = lo[k] + (idx[k] as f64 + 0.5) * h;
                        x[k] = c[k];
                    }
                    if domain.contains(&x) {
                        lookup[(i0 * counts[1] + i1) * counts[2] + i2] = cells.len() as u32;
                        cells.push([i0 as u32, i1 as u32, i2 as u32]);
                        nodes.push(c);
                    }
                }
            }
        }
        if cells.is_empty() {
            return crate::error::domain("grid has no interior nodes; increase resolution");
        }
        Ok(Self {
            domain: domain.clone(),
            dim,
            lo: lo3,
            hi: hi3,
            h,
            counts,
            resolution,
            cells,
            nodes,
            lookup,
        })
    }

    /// Same domain and box at another resolution.
    pub fn with_resolution(&self, resolution: usize) -> Result<Self> {
        Self::in_box(&self.domain, &self.lo[..self.dim], &self.hi[..self.dim], resolution)
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    /// True when the grid box contains the whole (bounded) domain, so the kept
    /// cells stand in for Ω and no exterior tail is needed.
    pub fn covers_domain(&self) -> bool {
        match self.domain.bounding_box() {
            Some((lo, hi)) => (0..self.dim).all(|k| self.lo[k] <= lo[k] + 1e-12 && self.hi[k] + 1e-12 >= hi[k]),
            None => false,
        }
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn h(&self) -> f64 {
        self.h
    }
    pub fn resolution(&self) -> usize {
        self.resolution
    }
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim as i32)
    }
    pub fn len(&self) -> usize {
        self.nodes.len()
    }
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
    pub fn counts(&self) -> [usize; 3] {
        self.counts
    }
    pub fn box_lo(&self) -> &[f64] {
        &self.lo[..self.dim]
    }
    pub fn box_hi(&self) -> &[f64] {
        &self.hi[..self.dim]
    }
    /// Coordinates of node `i` (length N).
    pub fn point(&self, i: usize) -> &[f64] {
        &self.nodes[i][..self.dim]
    }
    pub fn points(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.nodes.iter().map(move |n| &n[..self.dim])
    }
    pub(crate) fn cell(&self, i: usize) -> [u32; 3] {
        self.cells[i]
    }
    pub(crate) fn cells(&self) -> &[[u32; 3]] {
        &self.cells
    }

    /// Node index of the cell with integer coordinates `idx`, if present.
    pub(crate) fn node_at(&self, idx: [i64; 3]) -> Option<usize> {
        for k in 0..3 {
            if idx[k] < 0 || idx[k] >= self.counts[k] as i64 {
                return None;
            }
        }
        let flat = (idx[0] as usize * self.counts[1] + idx[1] as usize) * self.counts[2] + idx[2] as usize;
        let n = self.lookup[flat];
        (n != NONE).then_some(n as usize)
    }
}

/// A function sampled at the nodes of a mesh.
#[derive(Clone)]
pub struct GridFunction {
    mesh: Arc<Mesh>,
    values: Vec<f64>,
    source: Option<FieldFn>,
}

impl fmt::Debug for GridFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GridFunction")
            .field("mesh", &self.mesh)
            .field("has_source", &self.source.is_some())
            .finish()
    }
}

fn check_finite(values: &[f64]) -> Result<()> {
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(FracError::Sampling(format!("non-finite value at node {i}")));
    }
    Ok(())
}

impl GridFunction {
    /// Samples a closed-form field at the cell centers.
    pub fn from_fn(mesh: Arc<Mesh>, f: FieldFn) -> Result<Self> {
        let values: Vec<f64> = mesh.points().map(|x| f(x)).collect();
        check_finite(&values)?;
        Ok(Self {
            mesh,
            values,
            source: Some(f),
        })
    }

    /// Raw node values without a closed form; coarser levels are obtained by
    /// averaging children.
    pub fn from_values(mesh: Arc<Mesh>, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.len() {
            return domain("value count does not match the mesh");
        }
        check_finite(&values)?;
        Ok(Self {
            mesh,
            values,
            source: None,
        })
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn source(&self) -> Option<&FieldFn> {
        self.source.as_ref()
    }
    pub fn domain(&self) -> &Domain {
        self.mesh.domain()
    }
    pub fn resolution(&self) -> usize {
        self.mesh.resolution()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }

    /// True when both functions live on the identical node set.
    pub fn conformable(&self, other: &GridFunction) -> bool {
        Arc::ptr_eq(&self.mesh, &other.mesh) || *self.mesh == *other.mesh
    }

    /// Pointwise map (x, u(x)) ↦ g, applied to the samples and the closed form alike.
    pub fn map<G>(&self, g: G) -> Result<Self>
    where
        G: Fn(&[f64], f64) -> f64 + Send + Sync + 'static,
    {
        let values: Vec<f64> = self.mesh.points().zip(&self.values).map(|(x, &u)| g(x, u)).collect();
        check_finite(&values)?;
        let source = self.source.clone().map(|f| {
            let g = Arc::new(g);
            Arc::new(move |x: &[f64]| g(x, f(x))) as FieldFn
        });
        Ok(Self {
            mesh: self.mesh.clone(),
            values,
            source,
        })
    }

    /// The same function on the mesh at another resolution.
    pub fn at_resolution(&self, resolution: usize) -> Result<Self> {
        if resolution == self.mesh.resolution() {
            return Ok(self.clone());
        }
        let coarse = Arc::new(self.mesh.with_resolution(resolution)?);
        if let Some(f) = &self.source {
            return Self::from_fn(coarse, f.clone());
        }
        if self.mesh.resolution() != 2 * resolution || (coarse.h() - 2.0 * self.mesh.h()).abs() > 1e-12 * coarse.h() {
            return Err(FracError::Precondition(
                "grid function without closed form can only be coarsened by a factor of two".into(),
            ));
        }
        let dim = self.mesh.dim();
        let values = (0..coarse.len())
            .map(|c| {
                let base = coarse.cell(c);
                let mut sum = 0.0;
                let mut n = 0usize;
                for mask in 0..(1usize << dim) {
                    let mut idx = [0i64; 3];
                    for k in 0..3 {
                        let bit = if k < dim { (mask >> k & 1) as i64 } else { 0 };
                        idx[k] = if k < dim { 2 * base[k] as i64 + bit } else { 0 };
                    }
                    if let Some(j) = self.mesh.node_at(idx) {
                        sum += self.values[j];
                        n += 1;
                    }
                }
                if n == 0 {
                    0.0
                } else {
                    sum / n as f64
                }
            })
            .collect();
        Self::from_values(coarse, values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_grid_has_resolution_nodes() {
        let mesh = Mesh::new(&Domain::interval(-1.0, 1.0), 16).unwrap();
        assert_eq!(mesh.len(), 16);
        assert!((mesh.h() - 0.125).abs() < 1e-15);
        assert!((mesh.point(0)[0] + 0.9375).abs() < 1e-15);
    }

    #[test]
    fn ball_mask_keeps_interior_centroids() {
        let mesh = Mesh::new(&Domain::unit_ball(2), 32).unwrap();
        assert!(mesh.points().all(|x| x[0] * x[0] + x[1] * x[1] < 1.0));
        let area = mesh.len() as f64 * mesh.cell_volume();
        assert!((area - std::f64::consts::PI).abs() < 0.1);
    }

    #[test]
    fn halfspace_box_must_be_inside() {
        let d = Domain::upper_half_space(2);
        assert!(Mesh::in_box(&d, &[0.0, -0.1], &[1.0, 1.0], 8).is_err());
        assert!(Mesh::in_box(&d, &[0.0, 0.0], &[1.0, 1.0], 8).is_ok());
        assert!(Mesh::new(&d, 8).is_err());
    }

    #[test]
    fn coarsening_by_averaging() {
        let mesh = Arc::new(Mesh::new(&Domain::interval(0.0, 1.0), 16).unwrap());
        let vals: Vec<f64> = mesh.points().map(|x| x[0]).collect();
        let u = GridFunction::from_values(mesh, vals).unwrap();
        let c = u.at_resolution(8).unwrap();
        for (x, v) in c.mesh().points().zip(c.values()) {
            assert!((x[0] - v).abs() < 1e-15);
        }
        assert!(u.at_resolution(5).is_err());
    }

    #[test]
    fn non_finite_samples_rejected() {
        let mesh = Arc::new(Mesh::new(&Domain::interval(0.0, 1.0), 8).unwrap());
        let f: FieldFn = Arc::new(|x: &[f64]| 1.0 / (x[0] - 0.0625));
        assert!(matches!(GridFunction::from_fn(mesh, f), Err(FracError::Sampling(_))));
    }
}
