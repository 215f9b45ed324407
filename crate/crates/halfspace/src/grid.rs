//! Truncated half-space grids and the fields sampled on them.
//!
//! Field layout is `[level][horizontal point, row-major][component]`.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::is_power_of_two;

const COORD_EPS: f64 = 1e-9;

/// Uniform horizontal lattice, a window of the full lattice on [-L, L)^{d}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    pub hdim: usize,
    pub extent: f64,
    pub step: f64,
    pub side: usize,
    pub origin: f64,
}

impl Lattice {
    pub fn full(hdim: usize, extent: f64, step: f64) -> Result<Self> {
        if !(extent > 0.0) || !(step > 0.0) || step > extent {
            return Err(Error::InvalidGrid(format!(
                "need L > 0 and 0 < h <= L, got L = {extent}, h = {step}"
            )));
        }
        let ratio = 2.0 * extent / step;
        let side = ratio.round() as usize;
        if (ratio - side as f64).abs() > 1e-9 * ratio || !is_power_of_two(side) {
            return Err(Error::InvalidGrid(format!(
                "2L/h = {ratio} is not a power of two"
            )));
        }
        Ok(Self {
            hdim,
            extent,
            step,
            side,
            origin: -extent,
        })
    }

    pub fn len(&self) -> usize {
        self.side.pow(self.hdim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn coord(&self, k: usize) -> f64 {
        self.origin + k as f64 * self.step
    }

    pub fn cell_volume(&self) -> f64 {
        self.step.powi(self.hdim as i32)
    }

    pub fn shape(&self) -> Vec<usize> {
        vec![self.side; self.hdim]
    }

    /// Multi-index of a flat horizontal index.
    pub fn unravel(&self, mut idx: usize, out: &mut [usize]) {
        for a in (0..self.hdim).rev() {
            out[a] = idx % self.side;
            idx /= self.side;
        }
    }

    pub fn ravel(&self, ks: &[usize]) -> usize {
        ks.iter().fold(0, |acc, &k| acc * self.side + k)
    }

    pub fn point(&self, idx: usize, out: &mut [f64]) {
        let mut rem = idx;
        for a in (0..self.hdim).rev() {
            out[a] = self.coord(rem % self.side);
            rem /= self.side;
        }
    }

    /// Index of the node closest to coordinate x along one axis.
    pub fn nearest(&self, x: f64) -> Option<usize> {
        let k = ((x - self.origin) / self.step).round();
        if k < 0.0 || k >= self.side as f64 {
            None
        } else {
            Some(k as usize)
        }
    }

    pub fn is_full(&self) -> bool {
        (self.origin + self.extent).abs() < COORD_EPS * self.step
            && self.side as f64 * self.step >= 2.0 * self.extent - COORD_EPS
    }

    /// Lattice dilated by 1/λ: the point x maps to x/λ.
    pub fn shrunk(&self, lambda: f64) -> Self {
        Self {
            hdim: self.hdim,
            extent: self.extent / lambda,
            step: self.step / lambda,
            side: self.side,
            origin: self.origin / lambda,
        }
    }

    fn window(&self, margin: f64) -> (usize, usize) {
        let lo = -self.extent + margin - COORD_EPS * self.step;
        let hi = self.extent - margin + COORD_EPS * self.step;
        let mut first = self.side;
        let mut last = 0;
        for k in 0..self.side {
            let x = self.coord(k);
            if x >= lo && x <= hi {
                first = first.min(k);
                last = k;
            }
        }
        if first > last {
            (0, 0)
        } else {
            (first, last + 1 - first)
        }
    }
}

/// Geometric ladder of vertical levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelSpec {
    pub min: f64,
    pub ratio: f64,
    pub count: usize,
}

impl LevelSpec {
    pub fn new(min: f64, ratio: f64, count: usize) -> Self {
        Self { min, ratio, count }
    }

    /// Ladder from `min` to `max` (inclusive, up to rounding) with the given ratio.
    pub fn spanning(min: f64, max: f64, ratio: f64) -> Self {
        let count = ((max / min).ln() / ratio.ln()).round() as usize + 1;
        Self { min, ratio, count }
    }

    pub fn levels(&self) -> Vec<f64> {
        (0..self.count)
            .map(|k| self.min * self.ratio.powi(k as i32))
            .collect()
    }
}

/// Geometric from `min` with `ratio` until the gap would exceed `max_gap`, then uniform
/// steps of `max_gap` up to `max`.
pub fn capped_levels(min: f64, max: f64, ratio: f64, max_gap: f64) -> Vec<f64> {
    let mut y = vec![min];
    let mut last = min;
    while last < max * (1.0 - 1e-12) {
        let next = (last * ratio).min(last + max_gap).min(max);
        y.push(next);
        last = next;
    }
    y
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfSpaceGrid {
    pub dim: usize,
    pub lattice: Lattice,
    pub levels: Vec<f64>,
}

pub fn make_grid(dim: usize, extent: f64, step: f64, spec: &LevelSpec) -> Result<HalfSpaceGrid> {
    if !(spec.min > 0.0) || !(spec.ratio > 1.0) || spec.count == 0 {
        return Err(Error::InvalidGrid(format!(
            "level ladder needs min > 0, ratio > 1, count >= 1: {spec:?}"
        )));
    }
    HalfSpaceGrid::with_levels(dim, extent, step, spec.levels())
}

impl HalfSpaceGrid {
    pub fn with_levels(dim: usize, extent: f64, step: f64, levels: Vec<f64>) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidGrid(format!("dim must be >= 2, got {dim}")));
        }
        if levels.is_empty() || levels[0] <= 0.0 || levels.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid(
                "levels must be positive and strictly increasing".into(),
            ));
        }
        if levels.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid("non-finite level".into()));
        }
        Ok(Self {
            dim,
            lattice: Lattice::full(dim - 1, extent, step)?,
            levels,
        })
    }

    pub fn hdim(&self) -> usize {
        self.dim - 1
    }

    pub fn step(&self) -> f64 {
        self.lattice.step
    }

    pub fn extent(&self) -> f64 {
        self.lattice.extent
    }

    pub fn nlevels(&self) -> usize {
        self.levels.len()
    }

    pub fn nh(&self) -> usize {
        self.lattice.len()
    }

    pub fn npoints(&self) -> usize {
        self.nh() * self.nlevels()
    }

    /// Full coordinates (x', x_n) of a grid point.
    pub fn point(&self, level: usize, hidx: usize, out: &mut [f64]) {
        self.lattice.point(hidx, &mut out[..self.dim - 1]);
        out[self.dim - 1] = self.levels[level];
    }

    /// Trapezoid weights in x_n with constant extension of the field down to the wall.
    pub fn vertical_weights(&self) -> Vec<f64> {
        vertical_weights(&self.levels)
    }

    /// Dual-cell edges e_0 = 0, e_k = midpoints, e_m = top level.
    pub fn cell_edges(&self) -> Vec<f64> {
        let y = &self.levels;
        let m = y.len();
        let mut e = Vec::with_capacity(m + 1);
        e.push(0.0);
        for k in 1..m {
            e.push(0.5 * (y[k - 1] + y[k]));
        }
        e.push(y[m - 1]);
        e
    }

    /// Grid dilated by 1/λ in every direction.
    pub fn shrunk(&self, lambda: f64) -> Self {
        Self {
            dim: self.dim,
            lattice: self.lattice.shrunk(lambda),
            levels: self.levels.iter().map(|y| y / lambda).collect(),
        }
    }

    pub fn descriptor(&self) -> serde_json::Value {
        serde_json::json!({
            "dim": self.dim,
            "horizontal_extent": self.lattice.extent,
            "horizontal_step": self.lattice.step,
            "side": self.lattice.side,
            "origin": self.lattice.origin,
            "levels": self.levels,
        })
    }
}

pub fn vertical_weights(y: &[f64]) -> Vec<f64> {
    let m = y.len();
    if m == 1 {
        return vec![y[0]];
    }
    (0..m)
        .map(|k| {
            if k == 0 {
                0.5 * (y[0] + y[1])
            } else if k == m - 1 {
                0.5 * (y[m - 1] - y[m - 2])
            } else {
                0.5 * (y[k + 1] - y[k - 1])
            }
        })
        .collect()
}

pub fn components(dim: usize, rank: usize) -> usize {
    dim.pow(rank as u32)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampledField {
    pub grid: HalfSpaceGrid,
    pub rank: usize,
    pub values: Vec<f64>,
}

impl SampledField {
    pub fn zeros(grid: &HalfSpaceGrid, rank: usize) -> Self {
        let n = grid.npoints() * components(grid.dim, rank);
        Self {
            grid: grid.clone(),
            rank,
            values: vec![0.0; n],
        }
    }

    pub fn from_values(grid: &HalfSpaceGrid, rank: usize, values: Vec<f64>) -> Result<Self> {
        let expect = grid.npoints() * components(grid.dim, rank);
        if values.len() != expect {
            return Err(Error::Shape(format!(
                "expected {expect} values, got {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self {
            grid: grid.clone(),
            rank,
            values,
        })
    }

    pub fn ncomp(&self) -> usize {
        components(self.grid.dim, self.rank)
    }

    #[inline]
    pub fn index(&self, level: usize, hidx: usize, comp: usize) -> usize {
        (level * self.grid.nh() + hidx) * self.ncomp() + comp
    }

    #[inline]
    pub fn at(&self, level: usize, hidx: usize, comp: usize) -> f64 {
        self.values[self.index(level, hidx, comp)]
    }

    pub fn level_slice(&self, level: usize) -> &[f64] {
        let w = self.grid.nh() * self.ncomp();
        &self.values[level * w..(level + 1) * w]
    }

    /// One component at one level as a horizontal array.
    pub fn component_plane(&self, level: usize, comp: usize) -> Vec<f64> {
        let nc = self.ncomp();
        self.level_slice(level)
            .iter()
            .skip(comp)
            .step_by(nc)
            .copied()
            .collect()
    }

    pub fn set_component_plane(&mut self, level: usize, comp: usize, plane: &[f64]) {
        let nc = self.ncomp();
        let nh = self.grid.nh();
        for (h, &v) in plane.iter().enumerate().take(nh) {
            let i = (level * nh + h) * nc + comp;
            self.values[i] = v;
        }
    }

    /// Pointwise Euclidean (Frobenius) magnitude as a scalar field.
    pub fn magnitude(&self) -> SampledField {
        let nc = self.ncomp();
        let values = self
            .values
            .chunks(nc)
            .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
            .collect();
        SampledField {
            grid: self.grid.clone(),
            rank: 0,
            values,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, a: f64) -> SampledField {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= a);
        out
    }

    /// self + a * other
    pub fn axpy(&self, a: f64, other: &SampledField) -> SampledField {
        assert_eq!(self.values.len(), other.values.len());
        let mut out = self.clone();
        for (o, b) in out.values.iter_mut().zip(&other.values) {
            *o += a * b;
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// Pointwise product of two scalar fields.
    pub fn mul_scalar_field(&self, other: &SampledField) -> SampledField {
        assert_eq!(self.rank, 0);
        assert_eq!(other.rank, 0);
        let mut out = self.clone();
        for (o, b) in out.values.iter_mut().zip(&other.values) {
            *o *= b;
        }
        out
    }

    /// Field restricted to one component, as a scalar field.
    pub fn component(&self, comp: usize) -> SampledField {
        let nc = self.ncomp();
        SampledField {
            grid: self.grid.clone(),
            rank: 0,
            values: self.values.iter().skip(comp).step_by(nc).copied().collect(),
        }
    }

    /// Pointwise outer product u ⊗ u of a vector field.
    pub fn outer_self(&self) -> SampledField {
        assert_eq!(self.rank, 1);
        let n = self.grid.dim;
        let mut values = Vec::with_capacity(self.values.len() * n);
        for u in self.values.chunks(n) {
            for i in 0..n {
                for j in 0..n {
                    values.push(u[i] * u[j]);
                }
            }
        }
        SampledField {
            grid: self.grid.clone(),
            rank: 2,
            values,
        }
    }
}

/// Sample a closed form at every node; `f` receives the point and writes the components.
pub fn sample<F>(grid: &HalfSpaceGrid, rank: usize, f: F) -> Result<SampledField>
where
    F: Fn(&[f64], &mut [f64]),
{
    let nc = components(grid.dim, rank);
    let mut values = vec![0.0; grid.npoints() * nc];
    let mut x = vec![0.0; grid.dim];
    for level in 0..grid.nlevels() {
        for h in 0..grid.nh() {
            grid.point(level, h, &mut x);
            let base = (level * grid.nh() + h) * nc;
            f(&x, &mut values[base..base + nc]);
        }
    }
    SampledField::from_values(grid, rank, values)
}

pub fn sample_scalar<F: Fn(&[f64]) -> f64>(grid: &HalfSpaceGrid, f: F) -> Result<SampledField> {
    sample(grid, 0, |x, out| out[0] = f(x))
}

/// Restrict to nodes at least `margin` from the lateral truncation boundary and with x_n >= margin.
pub fn interior_restrict(field: &SampledField, margin: f64) -> Result<SampledField> {
    let g = &field.grid;
    if margin < 0.0 || margin >= g.lattice.extent {
        return Err(Error::EmptyRestriction(margin));
    }
    let (first, count) = g.lattice.window(margin);
    let keep: Vec<usize> = (0..g.nlevels())
        .filter(|&k| g.levels[k] >= margin - COORD_EPS * g.step())
        .collect();
    if count == 0 || keep.is_empty() {
        return Err(Error::EmptyRestriction(margin));
    }
    let lattice = Lattice {
        hdim: g.lattice.hdim,
        extent: g.lattice.extent,
        step: g.lattice.step,
        side: count,
        origin: g.lattice.coord(first),
    };
    let grid = HalfSpaceGrid {
        dim: g.dim,
        lattice,
        levels: keep.iter().map(|&k| g.levels[k]).collect(),
    };
    let nc = field.ncomp();
    let d = g.hdim();
    let mut values = Vec::with_capacity(grid.npoints() * nc);
    let mut ks = vec![0usize; d];
    let mut src = vec![0usize; d];
    for &level in &keep {
        for h in 0..grid.nh() {
            grid.lattice.unravel(h, &mut ks);
            for a in 0..d {
                src[a] = ks[a] + first;
            }
            let sh = g.lattice.ravel(&src);
            let base = field.index(level, sh, 0);
            values.extend_from_slice(&field.values[base..base + nc]);
        }
    }
    Ok(SampledField {
        grid,
        rank: field.rank,
        values,
    })
}

/// Field on the horizontal lattice only (boundary data).
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryField {
    pub dim: usize,
    pub lattice: Lattice,
    pub rank: usize,
    pub values: Vec<f64>,
}

impl BoundaryField {
    pub fn zeros(dim: usize, lattice: &Lattice, rank: usize) -> Self {
        Self {
            dim,
            lattice: lattice.clone(),
            rank,
            values: vec![0.0; lattice.len() * components(dim, rank)],
        }
    }

    pub fn ncomp(&self) -> usize {
        components(self.dim, self.rank)
    }

    pub fn sample<F: Fn(&[f64], &mut [f64])>(
        dim: usize,
        lattice: &Lattice,
        rank: usize,
        f: F,
    ) -> Result<Self> {
        let nc = components(dim, rank);
        let mut values = vec![0.0; lattice.len() * nc];
        let mut x = vec![0.0; lattice.hdim];
        for h in 0..lattice.len() {
            lattice.point(h, &mut x);
            f(&x, &mut values[h * nc..(h + 1) * nc]);
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self {
            dim,
            lattice: lattice.clone(),
            rank,
            values,
        })
    }

    pub fn sample_scalar<F: Fn(&[f64]) -> f64>(dim: usize, lattice: &Lattice, f: F) -> Result<Self> {
        Self::sample(dim, lattice, 0, |x, o| o[0] = f(x))
    }

    pub fn component(&self, comp: usize) -> Vec<f64> {
        let nc = self.ncomp();
        self.values.iter().skip(comp).step_by(nc).copied().collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, a: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= a);
        out
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Sidecar {
    dim: usize,
    horizontal_extent: f64,
    horizontal_step: f64,
    side: usize,
    origin: f64,
    levels: Vec<f64>,
    rank: usize,
    components: usize,
    layout: String,
    byte_order: String,
}

/// Write `<stem>.bin` (little-endian f64) and `<stem>.json`.
pub fn write_field(field: &SampledField, stem: &Path) -> Result<()> {
    let g = &field.grid;
    let side = Sidecar {
        dim: g.dim,
        horizontal_extent: g.lattice.extent,
        horizontal_step: g.lattice.step,
        side: g.lattice.side,
        origin: g.lattice.origin,
        levels: g.levels.clone(),
        rank: field.rank,
        components: field.ncomp(),
        layout: "level, horizontal row-major, component".into(),
        byte_order: "little-endian f64".into(),
    };
    let mut bytes = Vec::with_capacity(field.values.len() * 8);
    for v in &field.values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(stem.with_extension("bin"), bytes)?;
    fs::write(
        stem.with_extension("json"),
        serde_json::to_string_pretty(&side)?,
    )?;
    Ok(())
}

pub fn read_field(stem: &Path) -> Result<SampledField> {
    let side: Sidecar = serde_json::from_str(&fs::read_to_string(stem.with_extension("json"))?)?;
    let bytes = fs::read(stem.with_extension("bin"))?;
    if bytes.len() % 8 != 0 {
        return Err(Error::Shape("binary length not a multiple of 8".into()));
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let grid = HalfSpaceGrid {
        dim: side.dim,
        lattice: Lattice {
            hdim: side.dim - 1,
            extent: side.horizontal_extent,
            step: side.horizontal_step,
            side: side.side,
            origin: side.origin,
        },
        levels: side.levels,
    };
    SampledField::from_values(&grid, side.rank, values)
}

/// CSV of one component along the first horizontal axis, other horizontal indices at the center.
pub fn write_slice_csv(field: &SampledField, level: usize, comp: usize, path: &Path) -> Result<()> {
    let g = &field.grid;
    let mut f = fs::File::create(path)?;
    writeln!(f, "x1,x_n,value")?;
    let mut ks = vec![g.lattice.side / 2; g.hdim()];
    for k in 0..g.lattice.side {
        ks[0] = k;
        let h = g.lattice.ravel(&ks);
        writeln!(
            f,
            "{},{},{:.17e}",
            g.lattice.coord(k),
            g.levels[level],
            field.at(level, h, comp)
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid3() -> HalfSpaceGrid {
        make_grid(3, 4.0, 1.0 / 16.0, &LevelSpec::new(1.0 / 64.0, 2.0, 10)).unwrap()
    }

    #[test]
    fn constructor_echo() {
        let g = grid3();
        assert_eq!(g.nh(), 128 * 128);
        assert_eq!(g.nlevels(), 10);
        assert!((g.levels[0] - 1.0 / 64.0).abs() < 1e-15);
        assert!((g.levels[9] - 8.0).abs() < 1e-12);
        let g2 = make_grid(2, 1.0, 0.125, &LevelSpec::new(0.125, 2.0, 3)).unwrap();
        assert_eq!(g2.nh(), 16);
        assert_eq!(g2.levels, vec![0.125, 0.25, 0.5]);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(make_grid(3, 4.0, 3.0 / 17.0, &LevelSpec::new(1.0 / 64.0, 2.0, 10)).is_err());
        assert!(make_grid(1, 4.0, 0.5, &LevelSpec::new(0.1, 2.0, 3)).is_err());
        assert!(make_grid(3, -1.0, 0.5, &LevelSpec::new(0.1, 2.0, 3)).is_err());
        assert!(make_grid(3, 4.0, 0.5, &LevelSpec::new(0.0, 2.0, 3)).is_err());
    }

    #[test]
    fn gaussian_peak_at_lowest_level() {
        let g = grid3();
        let f = sample_scalar(&g, |x| (-x.iter().map(|v| v * v).sum::<f64>()).exp()).unwrap();
        let expect = (-1.0f64 / 4096.0).exp();
        assert!((f.max_abs() - expect).abs() < 1e-15);
        assert!((expect - 0.999756).abs() < 1e-6);
    }

    #[test]
    fn odd_function_is_antisymmetric() {
        let g = make_grid(3, 2.0, 0.25, &LevelSpec::new(0.25, 2.0, 3)).unwrap();
        let f = sample_scalar(&g, |x| x[0] * (-x.iter().map(|v| v * v).sum::<f64>()).exp()).unwrap();
        let n = g.lattice.side;
        for l in 0..3 {
            for a in 1..n {
                for b in 0..n {
                    let i = g.lattice.ravel(&[a, b]);
                    let j = g.lattice.ravel(&[n - a, b]);
                    assert!((f.at(l, i, 0) + f.at(l, j, 0)).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn nonfinite_sample_rejected() {
        let g = make_grid(2, 1.0, 0.125, &LevelSpec::new(0.125, 2.0, 3)).unwrap();
        assert!(matches!(
            sample_scalar(&g, |x| 1.0 / x[0]),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn restriction_examples() {
        let g = grid3();
        let f = sample_scalar(&g, |x| x[0] + 10.0 * x[1] + 100.0 * x[2]).unwrap();
        assert_eq!(interior_restrict(&f, 0.0).unwrap(), f);
        assert!(interior_restrict(&f, 4.0).is_err());
        let r = interior_restrict(&f, 1.0).unwrap();
        assert_eq!(r.grid.lattice.side, 97);
        assert!((r.grid.lattice.coord(0) + 3.0).abs() < 1e-12);
        assert!((r.grid.lattice.coord(96) - 3.0).abs() < 1e-12);
        assert_eq!(r.grid.levels, vec![1.0, 2.0, 4.0, 8.0]);
        let mut x = [0.0; 3];
        for l in 0..r.grid.nlevels() {
            for h in (0..r.grid.nh()).step_by(37) {
                r.grid.point(l, h, &mut x);
                assert!((r.at(l, h, 0) - (x[0] + 10.0 * x[1] + 100.0 * x[2])).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn field_roundtrip_through_disk() {
        let g = make_grid(3, 1.0, 0.25, &LevelSpec::new(0.25, 2.0, 3)).unwrap();
        let f = sample(&g, 1, |x, o| {
            o[0] = x[0];
            o[1] = x[1].sin();
            o[2] = x[2].exp();
        })
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let stem = dir.path().join("u");
        write_field(&f, &stem).unwrap();
        assert_eq!(read_field(&stem).unwrap(), f);
        write_slice_csv(&f, 1, 2, &dir.path().join("s.csv")).unwrap();
    }

    #[test]
    fn vertical_weights_integrate_linear_functions_with_constant_cap() {
        let y = LevelSpec::new(0.1, 1.5, 8).levels();
        let w = vertical_weights(&y);
        let s: f64 = w.iter().sum();
        assert!((s - y[7]).abs() < 1e-14);
        let lin: f64 = w.iter().zip(&y).map(|(w, y)| w * y).sum();
        let exact = 0.1 * 0.1 + (y[7] * y[7] - 0.01) / 2.0;
        assert!((lin - exact).abs() < 1e-12);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]
            #[test]
            fn restriction_composes(a in 0.0f64..1.9, b in 0.0f64..1.9) {
                let g = make_grid(3, 2.0, 0.125, &LevelSpec::new(0.0625, 2.0, 6)).unwrap();
                let f = sample_scalar(&g, |x| x[0] * 3.0 - x[1] + x[2] * x[2]).unwrap();
                let ab = interior_restrict(&interior_restrict(&f, a).unwrap(), b).unwrap();
                let m = interior_restrict(&f, a.max(b)).unwrap();
                prop_assert_eq!(ab, m);
            }

            #[test]
            fn sample_is_identity_at_nodes(c0 in -2.0f64..2.0, c1 in -2.0f64..2.0) {
                let g = make_grid(2, 1.0, 0.125, &LevelSpec::new(0.125, 2.0, 3)).unwrap();
                let f = sample_scalar(&g, |x| c0 * x[0] + c1 * x[1].cos()).unwrap();
                let mut x = [0.0; 2];
                for l in 0..3 {
                    for h in 0..g.nh() {
                        g.point(l, h, &mut x);
                        prop_assert_eq!(f.at(l, h, 0), c0 * x[0] + c1 * x[1].cos());
                    }
                }
            }
        }
    }
}
