//! Uniform Cartesian discretization of the design region `D` and candidate
//! sets `Ω ⊆ D` as node masks.
//!
//! Nodes sit on the lattice `x = k / resolution` (integer `k`), indexed
//! row-major with the x axis fastest: `p = i + nx * (j + ny * k)`. A shape is
//! sampled at node centers; a node belongs to `D` when it lies strictly inside
//! the shape. The outermost layer of the node array never belongs to `D`, so
//! every node of `D` has its full `2N` neighborhood inside the array and the
//! homogeneous Dirichlet condition becomes "neighbor not active ⇒ value 0".

use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Smallest accepted `resolution` for [`build_grid`].
pub const MIN_RESOLUTION: f64 = 8.0;

#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    /// Ball of the given radius centered at the origin.
    Disk { radius: f64 },
    /// `[0, side]^N`.
    Square { side: f64 },
    /// `[0, width] × [0, height]` (in 3D the third extent equals `height`).
    Rectangle { width: f64, height: f64 },
    /// `[0, side]^2` minus the closed upper-right quadrant `[side/2, side]^2`.
    LShape { side: f64 },
    /// `inner < |x| < outer`.
    Annulus { inner: f64, outer: f64 },
    /// ASCII mask file, see [`Grid::read_mask_file`].
    MaskFile(PathBuf),
}

impl Shape {
    fn validate(&self, dim: usize) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::DegenerateShape(format!(
                    "{name} must be positive, got {v}"
                )))
            }
        };
        match *self {
            Shape::Disk { radius } => positive("radius", radius),
            Shape::Square { side } => positive("side", side),
            Shape::Rectangle { width, height } => {
                positive("width", width)?;
                positive("height", height)
            }
            Shape::LShape { side } => {
                if dim != 2 {
                    return Err(Error::DegenerateShape("lshape is two-dimensional".into()));
                }
                positive("side", side)
            }
            Shape::Annulus { inner, outer } => {
                positive("inner radius", inner)?;
                positive("outer radius", outer)?;
                if inner >= outer {
                    return Err(Error::DegenerateShape(format!(
                        "annulus needs inner < outer, got {inner} >= {outer}"
                    )));
                }
                Ok(())
            }
            Shape::MaskFile(_) => Ok(()),
        }
    }

    /// Bounding box `(lo, hi)` along `axis`.
    fn extent(&self, axis: usize) -> (f64, f64) {
        match *self {
            Shape::Disk { radius } => (-radius, radius),
            Shape::Annulus { outer, .. } => (-outer, outer),
            Shape::Square { side } | Shape::LShape { side } => (0.0, side),
            Shape::Rectangle { width, height } => (0.0, if axis == 0 { width } else { height }),
            Shape::MaskFile(_) => unreachable!("mask files carry their own extent"),
        }
    }

    fn contains(&self, x: &[f64]) -> bool {
        let r2 = || x.iter().map(|c| c * c).sum::<f64>();
        match *self {
            Shape::Disk { radius } => r2() < radius * radius,
            Shape::Annulus { inner, outer } => {
                let r2 = r2();
                inner * inner < r2 && r2 < outer * outer
            }
            Shape::Square { side } => x.iter().all(|&c| 0.0 < c && c < side),
            Shape::Rectangle { width, height } => x
                .iter()
                .enumerate()
                .all(|(d, &c)| 0.0 < c && c < if d == 0 { width } else { height }),
            Shape::LShape { side } => {
                let half = 0.5 * side;
                x.iter().all(|&c| 0.0 < c && c < side) && !(x[0] >= half && x[1] >= half)
            }
            Shape::MaskFile(_) => unreachable!("mask files carry their own mask"),
        }
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shape::Disk { radius } => write!(f, "disk({radius})"),
            Shape::Square { side } => write!(f, "square({side})"),
            Shape::Rectangle { width, height } => write!(f, "rectangle({width},{height})"),
            Shape::LShape { side } => write!(f, "lshape({side})"),
            Shape::Annulus { inner, outer } => write!(f, "annulus({inner},{outer})"),
            Shape::MaskFile(path) => write!(f, "mask_file({})", path.display()),
        }
    }
}

impl FromStr for Shape {
    type Err = Error;

    /// Parses `disk(R)`, `square(a)`, `rectangle(a,b)`, `lshape(a)`,
    /// `annulus(R1,R2)` and `mask_file(path)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidParameter(format!("unrecognized domain '{s}'"));
        let open = s.find('(').ok_or_else(bad)?;
        if !s.ends_with(')') {
            return Err(bad());
        }
        let name = s[..open].trim().to_ascii_lowercase();
        let body = &s[open + 1..s.len() - 1];
        if name == "mask_file" {
            return Ok(Shape::MaskFile(PathBuf::from(body.trim())));
        }
        let args = body
            .split(',')
            .map(|a| {
                let a = a.trim();
                let a = a.split_once('=').map_or(a, |(_, v)| v.trim());
                a.parse::<f64>().map_err(|_| bad())
            })
            .collect::<Result<Vec<_>>>()?;
        let arity = |n: usize| if args.len() == n { Ok(()) } else { Err(bad()) };
        match name.as_str() {
            "disk" | "ball" => arity(1).map(|_| Shape::Disk { radius: args[0] }),
            "square" | "cube" => arity(1).map(|_| Shape::Square { side: args[0] }),
            "rectangle" | "box" => arity(2).map(|_| Shape::Rectangle {
                width: args[0],
                height: args[1],
            }),
            "lshape" => arity(1).map(|_| Shape::LShape { side: args[0] }),
            "annulus" | "shell" => arity(2).map(|_| Shape::Annulus {
                inner: args[0],
                outer: args[1],
            }),
            _ => Err(bad()),
        }
    }
}

/// A shape together with the spatial dimension it is sampled in.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainSpec {
    pub shape: Shape,
    pub dim: usize,
}

impl DomainSpec {
    pub fn new(shape: Shape, dim: usize) -> Self {
        DomainSpec { shape, dim }
    }

    pub fn disk(radius: f64) -> Self {
        Self::new(Shape::Disk { radius }, 2)
    }

    pub fn square(side: f64) -> Self {
        Self::new(Shape::Square { side }, 2)
    }

    pub fn rectangle(width: f64, height: f64) -> Self {
        Self::new(Shape::Rectangle { width, height }, 2)
    }

    pub fn lshape(side: f64) -> Self {
        Self::new(Shape::LShape { side }, 2)
    }

    pub fn annulus(inner: f64, outer: f64) -> Self {
        Self::new(Shape::Annulus { inner, outer }, 2)
    }

    pub fn with_dim(mut self, dim: usize) -> Self {
        self.dim = dim;
        self
    }
}

impl fmt::Display for DomainSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} N={}", self.shape, self.dim)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    dim: usize,
    shape: [usize; 3],
    strides: [usize; 3],
    h: f64,
    origin: [f64; 3],
    inside: Vec<bool>,
    inside_nodes: Vec<usize>,
}

impl Grid {
    /// Builds a grid from an explicit `inside_D` mask. `shape` has `dim`
    /// entries; the mask is row-major with x fastest.
    pub fn from_mask(
        dim: usize,
        shape: &[usize],
        h: f64,
        origin: &[f64],
        inside: Vec<bool>,
    ) -> Result<Grid> {
        if !(2..=3).contains(&dim) {
            return Err(Error::InvalidGrid(format!(
                "dimension must be 2 or 3, got {dim}"
            )));
        }
        if shape.len() != dim || origin.len() != dim {
            return Err(Error::InvalidGrid(
                "shape/origin length must equal the dimension".into(),
            ));
        }
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "spacing must be positive, got {h}"
            )));
        }
        if let Some(&n) = shape.iter().find(|&&n| n < 3) {
            return Err(Error::InvalidGrid(format!(
                "every axis needs at least 3 nodes, got {n}"
            )));
        }
        let mut full = [1usize; 3];
        full[..dim].copy_from_slice(shape);
        let len = full.iter().product::<usize>();
        if inside.len() != len {
            return Err(Error::InvalidGrid(format!(
                "mask has {} entries, expected {len}",
                inside.len()
            )));
        }
        let strides = [1, full[0], full[0] * full[1]];
        let mut o = [0.0; 3];
        o[..dim].copy_from_slice(origin);
        let mut grid = Grid {
            dim,
            shape: full,
            strides,
            h,
            origin: o,
            inside,
            inside_nodes: Vec::new(),
        };
        for p in 0..len {
            if grid.inside[p] && grid.on_outer_layer(p) {
                return Err(Error::InvalidGrid(format!(
                    "node {:?} on the outermost layer is marked inside D",
                    &grid.multi_index(p)[..dim]
                )));
            }
        }
        grid.inside_nodes = (0..len).filter(|&p| grid.inside[p]).collect();
        Ok(grid)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Node counts per axis (`dim` entries).
    pub fn shape(&self) -> &[usize] {
        &self.shape[..self.dim]
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides[..self.dim]
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// `h^N`, the measure carried by one node.
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim as i32)
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin[..self.dim]
    }

    /// Total number of nodes in the array.
    pub fn len(&self) -> usize {
        self.inside.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inside.is_empty()
    }

    pub fn inside_mask(&self) -> &[bool] {
        &self.inside
    }

    pub fn is_inside(&self, p: usize) -> bool {
        self.inside[p]
    }

    /// Nodes of `D` in increasing (row-major) order.
    pub fn inside_nodes(&self) -> &[usize] {
        &self.inside_nodes
    }

    pub fn inside_count(&self) -> usize {
        self.inside_nodes.len()
    }

    pub fn multi_index(&self, p: usize) -> [usize; 3] {
        let nx = self.shape[0];
        let ny = self.shape[1];
        [p % nx, (p / nx) % ny, p / (nx * ny)]
    }

    pub fn index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    /// Physical coordinates of node `p` (`dim` entries are meaningful).
    pub fn coords(&self, p: usize) -> [f64; 3] {
        let m = self.multi_index(p);
        let mut x = [0.0; 3];
        for d in 0..self.dim {
            x[d] = self.origin[d] + m[d] as f64 * self.h;
        }
        x
    }

    pub fn on_outer_layer(&self, p: usize) -> bool {
        let m = self.multi_index(p);
        (0..self.dim).any(|d| m[d] == 0 || m[d] + 1 == self.shape[d])
    }

    /// The `2N` lattice neighbors of a node that is not on the outer layer.
    #[inline]
    pub fn neighbors(&self, p: usize) -> impl Iterator<Item = usize> + '_ {
        self.strides[..self.dim]
            .iter()
            .flat_map(move |&s| [p - s, p + s])
    }

    /// Nearest node to a physical point (clamped to the array).
    pub fn nearest_node(&self, x: &[f64]) -> usize {
        let mut idx = [0usize; 3];
        for d in 0..self.dim {
            let k = ((x[d] - self.origin[d]) / self.h).round();
            idx[d] = k.clamp(0.0, (self.shape[d] - 1) as f64) as usize;
        }
        self.index(&idx[..self.dim])
    }

    /// Reads the ASCII mask format: a header `MASK <nx> <ny> [<nz>] <h>`
    /// followed by `ny * nz` rows of `nx` characters from `{0, 1}`, x fastest,
    /// then y, then z.
    pub fn read_mask_file(path: &Path) -> Result<Grid> {
        let text = fs::read_to_string(path).map_err(|e| Error::MaskFile {
            path: path.to_owned(),
            line: 0,
            message: e.to_string(),
        })?;
        Self::parse_mask(&text).map_err(|(line, message)| Error::MaskFile {
            path: path.to_owned(),
            line,
            message,
        })
    }

    fn parse_mask(text: &str) -> std::result::Result<Grid, (usize, String)> {
        let mut lines = text.lines().map(|l| l.strip_suffix('\r').unwrap_or(l));
        let header = lines.next().ok_or((1, "missing header".to_string()))?;
        let tokens: Vec<&str> = header.split_whitespace().collect();
        if tokens.first() != Some(&"MASK") || !(tokens.len() == 4 || tokens.len() == 5) {
            return Err((1, "header must be 'MASK <nx> <ny> [<nz>] <h>'".into()));
        }
        let dim = tokens.len() - 2;
        let shape = tokens[1..=dim]
            .iter()
            .map(|t| {
                t.parse::<usize>()
                    .map_err(|_| (1, format!("bad node count '{t}'")))
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let h = tokens[dim + 1]
            .parse::<f64>()
            .map_err(|_| (1, format!("bad spacing '{}'", tokens[dim + 1])))?;
        let nx = shape[0];
        let rows = shape[1..].iter().product::<usize>();
        let mut inside = Vec::with_capacity(nx * rows);
        for r in 0..rows {
            let line_no = r + 2;
            let row = lines
                .next()
                .ok_or((line_no, format!("expected {rows} rows, found {r}")))?;
            if row.len() != nx {
                return Err((
                    line_no,
                    format!("row has {} characters, expected {nx}", row.len()),
                ));
            }
            for c in row.chars() {
                match c {
                    '0' => inside.push(false),
                    '1' => inside.push(true),
                    other => return Err((line_no, format!("invalid character {other:?}"))),
                }
            }
        }
        if let Some((i, extra)) = lines.enumerate().find(|(_, l)| !l.is_empty()) {
            return Err((
                rows + 2 + i,
                format!("unexpected trailing content {extra:?}"),
            ));
        }
        let origin = vec![0.0; dim];
        Grid::from_mask(dim, &shape, h, &origin, inside).map_err(|e| (1, e.to_string()))
    }

    /// Serializes an arbitrary node mask over this grid in the mask-file format.
    pub fn mask_to_string(&self, mask: &[bool]) -> String {
        let mut out = String::from("MASK");
        for n in self.shape() {
            out.push_str(&format!(" {n}"));
        }
        out.push_str(&format!(" {}\n", self.h));
        for row in mask.chunks(self.shape[0]) {
            out.extend(row.iter().map(|&b| if b { '1' } else { '0' }));
            out.push('\n');
        }
        out
    }

    pub fn write_mask_file(&self, path: &Path, mask: &[bool]) -> Result<()> {
        let mut f = fs::File::create(path)?;
        f.write_all(self.mask_to_string(mask).as_bytes())?;
        Ok(())
    }
}

/// Samples `spec` on the lattice with `resolution` nodes per unit length.
pub fn build_grid(spec: &DomainSpec, resolution: f64) -> Result<Arc<Grid>> {
    let dim = spec.dim;
    if !(2..=3).contains(&dim) {
        return Err(Error::InvalidGrid(format!(
            "dimension must be 2 or 3, got {dim}"
        )));
    }
    spec.shape.validate(dim)?;
    if let Shape::MaskFile(path) = &spec.shape {
        let grid = Grid::read_mask_file(path)?;
        if grid.dim() != dim {
            return Err(Error::InvalidGrid(format!(
                "mask file is {}-dimensional, expected {dim}",
                grid.dim()
            )));
        }
        return Ok(Arc::new(grid));
    }
    if !(resolution.is_finite() && resolution >= MIN_RESOLUTION) {
        return Err(Error::ResolutionTooSmall {
            resolution,
            reason: format!("at least {MIN_RESOLUTION} nodes per unit length required"),
        });
    }

    // Integer lattice range per axis, padded by one node so the outer layer
    // lies outside the shape.
    let mut k_lo = [0i64; 3];
    let mut shape = [1usize; 3];
    for d in 0..dim {
        let (lo, hi) = spec.shape.extent(d);
        let a = (lo * resolution).floor() as i64 - 1;
        let b = (hi * resolution).ceil() as i64 + 1;
        k_lo[d] = a;
        shape[d] = (b - a + 1) as usize;
    }
    let len = shape.iter().product::<usize>();
    let mut inside = vec![false; len];
    let mut x = [0.0; 3];
    for (p, flag) in inside.iter_mut().enumerate() {
        let m = [
            p % shape[0],
            (p / shape[0]) % shape[1],
            p / (shape[0] * shape[1]),
        ];
        let mut outer = false;
        for d in 0..dim {
            x[d] = (k_lo[d] + m[d] as i64) as f64 / resolution;
            outer |= m[d] == 0 || m[d] + 1 == shape[d];
        }
        *flag = !outer && spec.shape.contains(&x[..dim]);
    }

    let origin: Vec<f64> = (0..dim).map(|d| k_lo[d] as f64 / resolution).collect();
    let grid = Grid::from_mask(dim, &shape[..dim], 1.0 / resolution, &origin, inside)?;
    for d in 0..dim {
        let (mut lo, mut hi) = (usize::MAX, 0usize);
        for &p in grid.inside_nodes() {
            let m = grid.multi_index(p)[d];
            lo = lo.min(m);
            hi = hi.max(m);
        }
        if grid.inside_count() == 0 || hi - lo + 1 < 3 {
            return Err(Error::ResolutionTooSmall {
                resolution,
                reason: format!("fewer than 3 interior nodes across axis {d}"),
            });
        }
    }
    Ok(Arc::new(grid))
}

/// Node lists of the two parts of `∂Ω`: the free part inside `D` and the
/// contact part along `∂D`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryClassification {
    /// Active nodes with at least one inactive neighbor inside `D`.
    pub free_boundary_nodes: Vec<usize>,
    /// Active nodes with at least one neighbor outside `D`.
    pub contact_nodes: Vec<usize>,
    pub contact_fraction: f64,
}

/// Discrete stand-in for a quasi-open `Ω ⊆ D`.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSet {
    grid: Arc<Grid>,
    active: Vec<bool>,
}

impl CellSet {
    pub fn new(grid: Arc<Grid>, active: Vec<bool>) -> Result<CellSet> {
        if active.len() != grid.len() {
            return Err(Error::FieldMismatch(format!(
                "mask has {} entries, grid has {}",
                active.len(),
                grid.len()
            )));
        }
        if let Some(p) = (0..active.len()).find(|&p| active[p] && !grid.is_inside(p)) {
            return Err(Error::InvalidParameter(format!(
                "active node {p} lies outside D"
            )));
        }
        Ok(CellSet { grid, active })
    }

    pub fn full(grid: &Arc<Grid>) -> CellSet {
        CellSet {
            active: grid.inside_mask().to_vec(),
            grid: Arc::clone(grid),
        }
    }

    pub fn empty(grid: &Arc<Grid>) -> CellSet {
        CellSet {
            active: vec![false; grid.len()],
            grid: Arc::clone(grid),
        }
    }

    /// Nodes of `D` whose coordinates satisfy `pred`.
    pub fn from_predicate(grid: &Arc<Grid>, pred: impl Fn(&[f64]) -> bool) -> CellSet {
        let dim = grid.dim();
        let active = (0..grid.len())
            .map(|p| grid.is_inside(p) && pred(&grid.coords(p)[..dim]))
            .collect();
        CellSet {
            grid: Arc::clone(grid),
            active,
        }
    }

    /// Nodes of `D` within the open ball `|x - center| < radius`.
    pub fn ball(grid: &Arc<Grid>, center: &[f64], radius: f64) -> CellSet {
        Self::from_predicate(grid, |x| {
            x.iter()
                .zip(center)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                < radius * radius
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn mask(&self) -> &[bool] {
        &self.active
    }

    #[inline]
    pub fn is_active(&self, p: usize) -> bool {
        self.active[p]
    }

    pub fn set_active(&mut self, p: usize, on: bool) -> Result<()> {
        if on && !self.grid.is_inside(p) {
            return Err(Error::InvalidParameter(format!("node {p} lies outside D")));
        }
        self.active[p] = on;
        Ok(())
    }

    /// Active nodes in row-major order.
    pub fn active_nodes(&self) -> Vec<usize> {
        self.grid
            .inside_nodes()
            .iter()
            .copied()
            .filter(|&p| self.active[p])
            .collect()
    }

    pub fn count(&self) -> usize {
        self.grid
            .inside_nodes()
            .iter()
            .filter(|&&p| self.active[p])
            .count()
    }

    pub fn is_empty(&self) -> bool {
        !self.grid.inside_nodes().iter().any(|&p| self.active[p])
    }

    pub fn is_subset_of(&self, other: &CellSet) -> bool {
        self.active
            .iter()
            .zip(&other.active)
            .all(|(&a, &b)| !a || b)
    }

    /// `h^N` times the number of active nodes.
    pub fn measure(&self) -> f64 {
        self.grid.cell_volume() * self.count() as f64
    }

    /// Anisotropic (ℓ¹) perimeter: `h^{N-1}` times the number of lattice
    /// faces separating an active node from a non-active one. Exact for
    /// axis-aligned boxes; overestimates smooth boundaries by up to `4/π` in 2D.
    pub fn perimeter(&self) -> f64 {
        let g = &self.grid;
        let faces = g
            .inside_nodes()
            .iter()
            .filter(|&&p| self.active[p])
            .map(|&p| g.neighbors(p).filter(|&q| !self.active[q]).count())
            .sum::<usize>();
        g.h().powi(g.dim() as i32 - 1) * faces as f64
    }

    pub fn classify_boundary(&self) -> BoundaryClassification {
        let g = &self.grid;
        let mut free_boundary_nodes = Vec::new();
        let mut contact_nodes = Vec::new();
        for &p in g.inside_nodes() {
            if !self.active[p] {
                continue;
            }
            let (mut free, mut contact) = (false, false);
            for q in g.neighbors(p) {
                if !g.is_inside(q) {
                    contact = true;
                } else if !self.active[q] {
                    free = true;
                }
            }
            if free {
                free_boundary_nodes.push(p);
            }
            if contact {
                contact_nodes.push(p);
            }
        }
        let total = free_boundary_nodes.len() + contact_nodes.len();
        let contact_fraction = if total == 0 {
            0.0
        } else {
            contact_nodes.len() as f64 / total as f64
        };
        BoundaryClassification {
            free_boundary_nodes,
            contact_nodes,
            contact_fraction,
        }
    }

    /// Mirror image along `axis` (node index `i ↦ n - 1 - i`). Fails when the
    /// image leaves `D`.
    pub fn reflect(&self, axis: usize) -> Result<CellSet> {
        let g = &self.grid;
        let n = g.shape()[axis];
        let mut active = vec![false; g.len()];
        for p in 0..g.len() {
            if self.active[p] {
                let mut m = g.multi_index(p);
                m[axis] = n - 1 - m[axis];
                active[g.index(&m[..g.dim()])] = true;
            }
        }
        CellSet::new(Arc::clone(g), active)
    }
}

/// `Ω = D`.
pub fn full_set(grid: &Arc<Grid>) -> CellSet {
    CellSet::full(grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn square_resolution_10_has_9x9_interior_nodes() {
        let g = build_grid(&DomainSpec::square(1.0), 10.0).unwrap();
        assert_eq!(g.inside_count(), 81);
    }

    #[test]
    fn square_measure_at_resolution_100() {
        let g = build_grid(&DomainSpec::square(1.0), 100.0).unwrap();
        let m = full_set(&g).measure();
        assert!((m - 0.9801).abs() < 1e-12, "{m}");
    }

    #[test]
    fn disk_node_count_matches_enumeration() {
        let res = 64.0;
        let g = build_grid(&DomainSpec::disk(1.0), res).unwrap();
        // Independent enumeration of lattice points k/res with |x| < 1.
        let mut count = 0;
        for i in -70i64..=70 {
            for j in -70i64..=70 {
                let (x, y) = (i as f64 / res, j as f64 / res);
                if x * x + y * y < 1.0 {
                    count += 1;
                }
            }
        }
        assert_eq!(g.inside_count(), count);
        let expected = PI * res * res;
        assert!((count as f64 - expected).abs() / expected < 0.02);
    }

    #[test]
    fn disk_measure_close_to_pi() {
        let g = build_grid(&DomainSpec::disk(1.0), 256.0).unwrap();
        let m = full_set(&g).measure();
        assert!((m - PI).abs() / PI < 0.01, "{m}");
    }

    #[test]
    fn degenerate_shapes_are_rejected() {
        assert!(matches!(
            build_grid(&DomainSpec::annulus(1.0, 0.5), 32.0),
            Err(Error::DegenerateShape(_))
        ));
        assert!(matches!(
            build_grid(&DomainSpec::disk(0.0), 32.0),
            Err(Error::DegenerateShape(_))
        ));
        assert!(matches!(
            build_grid(&DomainSpec::disk(1.0), 4.0),
            Err(Error::ResolutionTooSmall { .. })
        ));
        assert!(matches!(
            build_grid(&DomainSpec::square(0.2), 10.0),
            Err(Error::ResolutionTooSmall { .. })
        ));
    }

    #[test]
    fn outer_layer_is_never_inside() {
        for spec in [
            DomainSpec::disk(1.0),
            DomainSpec::square(1.0),
            DomainSpec::lshape(1.0),
            DomainSpec::annulus(0.3, 1.0),
            DomainSpec::rectangle(2.0, 0.5),
            DomainSpec::disk(0.5).with_dim(3),
        ] {
            let g = build_grid(&spec, 16.0).unwrap();
            for p in 0..g.len() {
                if g.on_outer_layer(p) {
                    assert!(!g.is_inside(p), "{spec}");
                }
            }
        }
    }

    #[test]
    fn lshape_excludes_quadrant() {
        let g = build_grid(&DomainSpec::lshape(1.0), 10.0).unwrap();
        // 9x9 interior minus the closed quadrant x, y >= 0.5 (5x5 nodes).
        assert_eq!(g.inside_count(), 81 - 25);
    }

    #[test]
    fn full_set_properties() {
        let g = build_grid(&DomainSpec::disk(1.0), 32.0).unwrap();
        let s = full_set(&g);
        assert_eq!(s.count(), g.inside_count());
        let b = s.classify_boundary();
        assert!(b.free_boundary_nodes.is_empty());
        assert_eq!(b.contact_fraction, 1.0);
    }

    #[test]
    fn empty_set_measure_and_perimeter() {
        let g = build_grid(&DomainSpec::square(1.0), 16.0).unwrap();
        let s = CellSet::empty(&g);
        assert_eq!(s.measure(), 0.0);
        assert_eq!(s.perimeter(), 0.0);
    }

    #[test]
    fn perimeter_of_axis_aligned_box() {
        let g = build_grid(&DomainSpec::square(1.0), 100.0).unwrap();
        let s = CellSet::from_predicate(&g, |x| x.iter().all(|&c| (0.25..0.75).contains(&c)));
        let h = g.h();
        assert!((s.perimeter() - 2.0).abs() <= 2.0 * h, "{}", s.perimeter());
    }

    #[test]
    fn perimeter_of_disk_shows_l1_bias() {
        // ℓ¹ perimeter of a disk of radius R is 8R.
        let g = build_grid(&DomainSpec::square(2.0), 128.0).unwrap();
        let s = CellSet::ball(&g, &[1.0, 1.0], 0.5);
        let per = s.perimeter();
        assert!((per - 4.0).abs() / 4.0 < 0.03, "{per}");
    }

    #[test]
    fn boundary_classification_cases() {
        let g = build_grid(&DomainSpec::square(1.0), 32.0).unwrap();
        let disk = CellSet::ball(&g, &[0.5, 0.5], 0.25);
        let b = disk.classify_boundary();
        assert_eq!(b.contact_fraction, 0.0);
        assert!(!b.free_boundary_nodes.is_empty());

        let half = CellSet::from_predicate(&g, |x| x[0] < 0.5);
        let b = half.classify_boundary();
        assert!(!b.free_boundary_nodes.is_empty());
        assert!(!b.contact_nodes.is_empty());
        for &p in b.free_boundary_nodes.iter().chain(&b.contact_nodes) {
            assert!(half.is_active(p));
        }
        assert!(b.free_boundary_nodes.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn mask_round_trip_and_errors() {
        let g = build_grid(&DomainSpec::lshape(1.0), 10.0).unwrap();
        let text = g.mask_to_string(g.inside_mask());
        let back = Grid::parse_mask(&text).unwrap();
        assert_eq!(back.inside_mask(), g.inside_mask());
        assert_eq!(back.shape(), g.shape());

        assert!(Grid::parse_mask("MASK 3 3 0.1\n000\n0x0\n000\n").is_err());
        assert!(Grid::parse_mask("MASK 3 3 0.1\n000\n010\n").is_err());
        assert!(Grid::parse_mask("MASK 3 3 0.1\n100\n010\n000\n").is_err());
        assert!(Grid::parse_mask("GRID 3 3 0.1\n000\n010\n000\n").is_err());
        let ok = Grid::parse_mask("MASK 3 3 0.1\n000\n010\n000\n").unwrap();
        assert_eq!(ok.inside_count(), 1);
        let three =
            Grid::parse_mask("MASK 3 3 3 0.5\n000\n000\n000\n000\n010\n000\n000\n000\n000\n")
                .unwrap();
        assert_eq!(three.dim(), 3);
        assert_eq!(three.inside_count(), 1);
    }

    #[test]
    fn shape_parsing() {
        assert_eq!(
            "disk(1)".parse::<Shape>().unwrap(),
            Shape::Disk { radius: 1.0 }
        );
        assert_eq!(
            "annulus(R1=0.5, R2=1)".parse::<Shape>().unwrap(),
            Shape::Annulus {
                inner: 0.5,
                outer: 1.0
            }
        );
        assert_eq!(
            "rectangle(2,1)".parse::<Shape>().unwrap(),
            Shape::Rectangle {
                width: 2.0,
                height: 1.0
            }
        );
        assert!("hexagon(1)".parse::<Shape>().is_err());
        assert!("disk(1,2)".parse::<Shape>().is_err());
    }
}
