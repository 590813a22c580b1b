//! Cell-centered voxel grid over the cube `[-a, a]^3` and the binary field on it.
//!
//! Cells are addressed either by a multi-index `[i, j, k]` with each
//! component in `0..n`, or by the linear index `i + n * (j + n * k)`
//! (x fastest). Cell `[i, j, k]` is centered at `-a + (i + 1/2) h` along x,
//! and likewise along y and z.

use std::collections::VecDeque;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Grid {
    half_width: f64,
    n: usize,
    h: f64,
}

impl Grid {
    pub fn new(half_width: f64, n: usize) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::Config(format!(
                "box half-width must be positive and finite, got {half_width}"
            )));
        }
        if n == 0 {
            return Err(Error::Config("number of intervals n must be at least 1".into()));
        }
        if n > 1600 {
            return Err(Error::Config(format!("n = {n} exceeds the supported maximum of 1600")));
        }
        Ok(Grid {
            half_width,
            n,
            h: 2.0 * half_width / n as f64,
        })
    }

    #[inline]
    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// Intervals (cells) per side.
    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn h(&self) -> f64 {
        self.h
    }

    #[inline]
    pub fn cell_count(&self) -> usize {
        self.n * self.n * self.n
    }

    #[inline]
    pub fn cell_volume(&self) -> f64 {
        self.h * self.h * self.h
    }

    #[inline]
    pub fn linear_index(&self, idx: [usize; 3]) -> usize {
        debug_assert!(idx.iter().all(|&c| c < self.n));
        idx[0] + self.n * (idx[1] + self.n * idx[2])
    }

    #[inline]
    pub fn multi_index(&self, l: usize) -> [usize; 3] {
        debug_assert!(l < self.cell_count());
        let n = self.n;
        [l % n, (l / n) % n, l / (n * n)]
    }

    /// Linear index of a signed multi-index, or `None` if it lies outside the box.
    #[inline]
    pub fn checked_index(&self, idx: [i64; 3]) -> Option<usize> {
        let n = self.n as i64;
        if idx.iter().all(|&c| (0..n).contains(&c)) {
            Some(self.linear_index([idx[0] as usize, idx[1] as usize, idx[2] as usize]))
        } else {
            None
        }
    }

    /// Center of cell `idx`.
    ///
    /// Panics if any component is `>= n`.
    pub fn cell_center(&self, idx: [usize; 3]) -> [f64; 3] {
        assert!(
            idx.iter().all(|&c| c < self.n),
            "cell index {idx:?} out of range for n = {}",
            self.n
        );
        idx.map(|c| self.coordinate(c))
    }

    #[inline]
    pub(crate) fn coordinate(&self, c: usize) -> f64 {
        -self.half_width + (c as f64 + 0.5) * self.h
    }

    #[inline]
    pub fn center_of(&self, l: usize) -> [f64; 3] {
        self.multi_index(l).map(|c| self.coordinate(c))
    }

    /// True if the cell lies on the outermost layer of the box.
    #[inline]
    pub fn on_boundary(&self, idx: [usize; 3]) -> bool {
        idx.iter().any(|&c| c == 0 || c + 1 == self.n)
    }
}

/// Which side of the interface a cell is on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    /// φ = -1
    Solute,
    /// φ = +1
    Solvent,
}

impl Region {
    #[inline]
    pub fn sign(self) -> i8 {
        match self {
            Region::Solute => -1,
            Region::Solvent => 1,
        }
    }

    #[inline]
    pub fn of_sign(sign: i8) -> Region {
        if sign < 0 {
            Region::Solute
        } else {
            Region::Solvent
        }
    }
}

/// Binary level-set function: one sign per cell, -1 solute and +1 solvent.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryField {
    grid: Grid,
    phi: Vec<i8>,
}

impl BinaryField {
    pub fn filled(grid: Grid, region: Region) -> Self {
        BinaryField {
            grid,
            phi: vec![region.sign(); grid.cell_count()],
        }
    }

    /// Builds a field by classifying every cell center.
    pub fn from_fn(grid: Grid, mut classify: impl FnMut([f64; 3]) -> Region) -> Self {
        let phi = (0..grid.cell_count())
            .map(|l| classify(grid.center_of(l)).sign())
            .collect();
        BinaryField { grid, phi }
    }

    pub fn from_signs(grid: Grid, phi: Vec<i8>) -> Result<Self> {
        if phi.len() != grid.cell_count() {
            return Err(Error::Input(format!(
                "expected {} cells, got {}",
                grid.cell_count(),
                phi.len()
            )));
        }
        if let Some(bad) = phi.iter().find(|&&s| s != 1 && s != -1) {
            return Err(Error::Input(format!("field entries must be ±1, found {bad}")));
        }
        Ok(BinaryField { grid, phi })
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    pub fn signs(&self) -> &[i8] {
        &self.phi
    }

    #[inline]
    pub fn sign(&self, l: usize) -> i8 {
        self.phi[l]
    }

    #[inline]
    pub fn region(&self, l: usize) -> Region {
        Region::of_sign(self.phi[l])
    }

    #[inline]
    pub fn is_solute(&self, l: usize) -> bool {
        self.phi[l] < 0
    }

    #[inline]
    pub fn set(&mut self, l: usize, region: Region) {
        self.phi[l] = region.sign();
    }

    #[inline]
    pub fn flip(&mut self, l: usize) {
        self.phi[l] = -self.phi[l];
    }

    /// Sign at a signed multi-index; cells outside the box are solvent.
    #[inline]
    pub fn sign_at(&self, idx: [i64; 3]) -> i8 {
        self.grid.checked_index(idx).map_or(1, |l| self.phi[l])
    }

    pub fn solute_count(&self) -> usize {
        self.phi.iter().filter(|&&s| s < 0).count()
    }

    pub fn solvent_count(&self) -> usize {
        self.phi.len() - self.solute_count()
    }

    /// Field with every sign negated.
    pub fn complement(&self) -> BinaryField {
        BinaryField {
            grid: self.grid,
            phi: self.phi.iter().map(|&s| -s).collect(),
        }
    }

    /// Number of solute cells on the outermost layer of the box.
    pub fn boundary_solute_cells(&self) -> usize {
        (0..self.phi.len())
            .filter(|&l| self.phi[l] < 0 && self.grid.on_boundary(self.grid.multi_index(l)))
            .count()
    }

    /// Logs a warning when the solute region reaches the box boundary.
    pub fn warn_if_touching_boundary(&self) -> bool {
        let touching = self.boundary_solute_cells();
        if touching > 0 {
            log::warn!(
                "{touching} solute cells touch the box boundary; the box is probably too small"
            );
        }
        touching > 0
    }

    /// Solute indicator (1 solute, 0 solvent) per cell.
    pub fn solute_mask(&self) -> Vec<bool> {
        self.phi.iter().map(|&s| s < 0).collect()
    }

    /// Writes the raw mask: an ASCII header line `"n a h"`, then one byte per
    /// cell (0 solute, 1 solvent) in x-fastest order.
    pub fn write_mask<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(
            out,
            "{} {} {}",
            self.grid.n(),
            self.grid.half_width(),
            self.grid.h()
        )?;
        let bytes: Vec<u8> = self.phi.iter().map(|&s| u8::from(s > 0)).collect();
        out.write_all(&bytes)
    }

    pub fn read_mask<R: Read>(mut input: R) -> Result<Self> {
        let mut data = Vec::new();
        input
            .read_to_end(&mut data)
            .map_err(|e| Error::Mask(e.to_string()))?;
        let newline = data
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::Mask("missing header line".into()))?;
        let header = std::str::from_utf8(&data[..newline])
            .map_err(|_| Error::Mask("header is not ASCII".into()))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::Mask(format!("header must be \"n a h\", got {header:?}")));
        }
        let n: usize = fields[0]
            .parse()
            .map_err(|_| Error::Mask(format!("bad n in header: {}", fields[0])))?;
        let a: f64 = fields[1]
            .parse()
            .map_err(|_| Error::Mask(format!("bad a in header: {}", fields[1])))?;
        let h: f64 = fields[2]
            .parse()
            .map_err(|_| Error::Mask(format!("bad h in header: {}", fields[2])))?;
        let grid = Grid::new(a, n).map_err(|e| Error::Mask(e.to_string()))?;
        if (grid.h() - h).abs() > 1e-9 * h.abs().max(1.0) {
            return Err(Error::Mask(format!(
                "header h = {h} inconsistent with 2a/n = {}",
                grid.h()
            )));
        }
        let body = &data[newline + 1..];
        if body.len() != grid.cell_count() {
            return Err(Error::Mask(format!(
                "expected {} cell bytes, found {}",
                grid.cell_count(),
                body.len()
            )));
        }
        let phi = body
            .iter()
            .map(|&b| match b {
                0 => Ok(-1),
                1 => Ok(1),
                other => Err(Error::Mask(format!("cell byte {other} is neither 0 nor 1"))),
            })
            .collect::<Result<Vec<i8>>>()?;
        Ok(BinaryField { grid, phi })
    }

    pub fn save_mask(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = std::io::BufWriter::new(file);
        self.write_mask(&mut out).map_err(|e| Error::io(path, e))?;
        out.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load_mask(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_mask(std::io::BufReader::new(file))
    }
}

/// Face-connected (6-neighbour) components of one region.
#[derive(Debug, Clone)]
pub struct Components {
    pub count: usize,
    labels: Vec<u32>,
}

impl Components {
    const NONE: u32 = u32::MAX;

    /// Component label of a cell, `None` for cells outside the region.
    pub fn label(&self, l: usize) -> Option<u32> {
        match self.labels[l] {
            Self::NONE => None,
            lab => Some(lab),
        }
    }

    /// Cell count of each component, indexed by label.
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.count];
        for &lab in &self.labels {
            if lab != Self::NONE {
                sizes[lab as usize] += 1;
            }
        }
        sizes
    }
}

/// Labels the 6-connected components of `region`, densely from 0 in scan order.
pub fn connected_components(field: &BinaryField, region: Region) -> Components {
    let grid = field.grid();
    let n = grid.n() as i64;
    let target = region.sign();
    let mut labels = vec![Components::NONE; grid.cell_count()];
    let mut count = 0u32;
    let mut queue = VecDeque::new();
    const STEPS: [[i64; 3]; 6] = [
        [1, 0, 0],
        [-1, 0, 0],
        [0, 1, 0],
        [0, -1, 0],
        [0, 0, 1],
        [0, 0, -1],
    ];
    for seed in 0..grid.cell_count() {
        if field.sign(seed) != target || labels[seed] != Components::NONE {
            continue;
        }
        labels[seed] = count;
        queue.push_back(seed);
        while let Some(l) = queue.pop_front() {
            let c = grid.multi_index(l).map(|x| x as i64);
            for s in STEPS {
                let nb = [c[0] + s[0], c[1] + s[1], c[2] + s[2]];
                if nb.iter().any(|&x| x < 0 || x >= n) {
                    continue;
                }
                let m = grid.linear_index(nb.map(|x| x as usize));
                if field.sign(m) == target && labels[m] == Components::NONE {
                    labels[m] = count;
                    queue.push_back(m);
                }
            }
        }
        count += 1;
    }
    Components {
        count: count as usize,
        labels,
    }
}
