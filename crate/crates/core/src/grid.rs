//! Square computational domain with Dirichlet walls, field storage and quadrature.
//!
//! The grid stores interior points only: with `n` points per axis and side `W`
//! the spacing is `W / (n + 1)` and the walls sit exactly on the domain edges,
//! so every field is implicitly zero there.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const MIN_POINTS_PER_AXIS: usize = 8;

/// Magic bytes (and format version) of the binary field format.
pub const FIELD_MAGIC: &[u8; 4] = b"LLF1";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D {
    side_length: f64,
    points_per_axis: usize,
    spacing: f64,
    origin: [f64; 2],
}

impl Grid2D {
    pub fn new(side_length: f64, points_per_axis: usize) -> Result<Self> {
        Self::with_origin(side_length, points_per_axis, [0.0, 0.0])
    }

    pub fn with_origin(side_length: f64, points_per_axis: usize, origin: [f64; 2]) -> Result<Self> {
        if !(side_length.is_finite() && side_length > 0.0) {
            return Err(Error::param(
                "side_length",
                format!("non-positive extent {side_length}"),
            ));
        }
        if points_per_axis < MIN_POINTS_PER_AXIS {
            return Err(Error::param(
                "points_per_axis",
                format!("{points_per_axis} is below the minimum of {MIN_POINTS_PER_AXIS}"),
            ));
        }
        if !(origin[0].is_finite() && origin[1].is_finite()) {
            return Err(Error::param("origin", "non-finite coordinate"));
        }
        Ok(Self {
            side_length,
            points_per_axis,
            spacing: side_length / (points_per_axis as f64 + 1.0),
            origin,
        })
    }

    pub fn side_length(&self) -> f64 {
        self.side_length
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn origin(&self) -> [f64; 2] {
        self.origin
    }

    /// Total number of interior points.
    pub fn len(&self) -> usize {
        self.points_per_axis * self.points_per_axis
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature weight of a single point.
    pub fn cell_area(&self) -> f64 {
        self.spacing * self.spacing
    }

    pub fn area(&self) -> f64 {
        self.side_length * self.side_length
    }

    /// Row-major flat index; `ix` runs along x, `iy` along y.
    #[inline]
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.points_per_axis + ix
    }

    #[inline]
    pub fn coord(&self, ix: usize, iy: usize) -> [f64; 2] {
        [
            self.origin[0] + (ix as f64 + 1.0) * self.spacing,
            self.origin[1] + (iy as f64 + 1.0) * self.spacing,
        ]
    }

    #[inline]
    pub fn coord_of(&self, flat: usize) -> [f64; 2] {
        let n = self.points_per_axis;
        self.coord(flat % n, flat / n)
    }

    /// Iterator over `(flat_index, [x, y])` for every interior point.
    pub fn points(&self) -> impl Iterator<Item = (usize, [f64; 2])> + '_ {
        (0..self.len()).map(move |p| (p, self.coord_of(p)))
    }

    pub fn contains(&self, r: [f64; 2]) -> bool {
        let [x0, y0] = self.origin;
        r[0] > x0 && r[0] < x0 + self.side_length && r[1] > y0 && r[1] < y0 + self.side_length
    }

    pub(crate) fn ensure_same(&self, other: &Grid2D) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{}x{} over {} vs {}x{} over {}",
                self.points_per_axis,
                self.points_per_axis,
                self.side_length,
                other.points_per_axis,
                other.points_per_axis,
                other.side_length
            )))
        }
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len == self.len() {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "field has {len} values, grid has {} points",
                self.len()
            )))
        }
    }
}

/// Convenience alias for [`Grid2D::new`].
pub fn make_grid(side_length: f64, points_per_axis: usize) -> Result<Grid2D> {
    Grid2D::new(side_length, points_per_axis)
}

/// Real-valued sample of a potential on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid2D,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid2D, values: Vec<f64>) -> Result<Self> {
        grid.check_len(values.len())?;
        if let Some(p) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::param("values", format!("non-finite value at point {p}")));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid2D) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn from_fn(grid: Grid2D, f: impl Fn([f64; 2]) -> f64) -> Result<Self> {
        let values = grid.points().map(|(_, r)| f(r)).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Value at the grid point nearest to `r`.
    pub fn sample_nearest(&self, r: [f64; 2]) -> f64 {
        let n = self.grid.points_per_axis;
        let h = self.grid.spacing;
        let to_index = |c: f64, o: f64| (((c - o) / h).round() as i64 - 1).clamp(0, n as i64 - 1) as usize;
        let ix = to_index(r[0], self.grid.origin[0]);
        let iy = to_index(r[1], self.grid.origin[1]);
        self.values[self.grid.index(ix, iy)]
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_field(path, &self.grid, &self.values)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let (grid, values) = read_field(path)?;
        Self::new(grid, values)
    }
}

/// Real eigenfunction sample on a grid (the Hamiltonian is real symmetric).
#[derive(Debug, Clone, PartialEq)]
pub struct Wavefunction {
    grid: Grid2D,
    values: Vec<f64>,
}

impl Wavefunction {
    pub fn new(grid: Grid2D, values: Vec<f64>) -> Result<Self> {
        grid.check_len(values.len())?;
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid2D) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn from_fn(grid: Grid2D, f: impl Fn([f64; 2]) -> f64) -> Self {
        let values = grid.points().map(|(_, r)| f(r)).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// L² norm under grid quadrature.
    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt() * self.grid.spacing
    }

    /// Probability density |ψ|² at every point.
    pub fn density(&self) -> Vec<f64> {
        self.values.iter().map(|v| v * v).collect()
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_field(path, &self.grid, &self.values)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let (grid, values) = read_field(path)?;
        Self::new(grid, values)
    }
}

/// Midpoint-rule inner product `Σ f g h²`.
pub fn inner_product(f: &Wavefunction, g: &Wavefunction) -> Result<f64> {
    f.grid.ensure_same(&g.grid)?;
    Ok(dot(&f.values, &g.values) * f.grid.cell_area())
}

/// Returns `psi` rescaled to unit L² norm.
pub fn normalize(psi: &Wavefunction) -> Result<Wavefunction> {
    let norm = psi.norm();
    if !(norm.is_finite() && norm > 0.0) {
        return Err(Error::ZeroField);
    }
    Ok(Wavefunction {
        grid: psi.grid,
        values: psi.values.iter().map(|v| v / norm).collect(),
    })
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Writes `LLF1 | u32 n | f64 side | n² f64` (all little-endian, row-major).
pub fn write_field(path: &Path, grid: &Grid2D, values: &[f64]) -> Result<()> {
    grid.check_len(values.len())?;
    let n = u32::try_from(grid.points_per_axis).map_err(|_| Error::param("points_per_axis", "does not fit in u32"))?;
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut emit = |bytes: &[u8]| w.write_all(bytes).map_err(|e| Error::io(path, e));
    emit(FIELD_MAGIC)?;
    emit(&n.to_le_bytes())?;
    emit(&grid.side_length.to_le_bytes())?;
    for v in values {
        emit(&v.to_le_bytes())?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_field(path: &Path) -> Result<(Grid2D, Vec<f64>)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    let mut magic = [0u8; 4];
    let mut u32buf = [0u8; 4];
    let mut f64buf = [0u8; 8];
    r.read_exact(&mut magic).map_err(|e| Error::io(path, e))?;
    if &magic != FIELD_MAGIC {
        return Err(Error::format(path, format!("bad magic {magic:?}")));
    }
    r.read_exact(&mut u32buf).map_err(|e| Error::io(path, e))?;
    r.read_exact(&mut f64buf).map_err(|e| Error::io(path, e))?;
    let n = u32::from_le_bytes(u32buf) as usize;
    let side = f64::from_le_bytes(f64buf);
    let grid = Grid2D::new(side, n).map_err(|e| Error::format(path, e.to_string()))?;
    let mut values = Vec::with_capacity(grid.len());
    for _ in 0..grid.len() {
        r.read_exact(&mut f64buf).map_err(|e| Error::io(path, e))?;
        values.push(f64::from_le_bytes(f64buf));
    }
    if r.read(&mut f64buf).map_err(|e| Error::io(path, e))? != 0 {
        return Err(Error::format(path, "trailing bytes after field data"));
    }
    Ok((grid, values))
}
