//! Regular-grid fields and their text file format.
//!
//! A file is one JSON header line followed by one CSV row per cell in row-major order
//! (axis 0 slowest). Rows hold the `d` representative coordinates written with 17
//! significant digits, plus a trailing `0`/`1` column when the mask is inline.

use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{BvError, Result};
use crate::geometry::{canonical_sign, norm, ProjPoint, UnitVector};

/// Norm tolerance for stored unit values.
pub const FIELD_UNIT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueKind {
    /// Lines `[n]`, stored by canonical representative.
    Proj,
    /// Unit vectors.
    Unit,
    /// Unconstrained vectors of ℝ^d with norm ≤ 1 (regularized liftings).
    Vector,
}

impl ValueKind {
    pub fn name(self) -> &'static str {
        match self {
            ValueKind::Proj => "proj",
            ValueKind::Unit => "unit",
            ValueKind::Vector => "vector",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Geodesic,
    EuclideanSphere,
    EuclideanTensor,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Geodesic => "geodesic",
            Metric::EuclideanSphere => "euclidean_sphere",
            Metric::EuclideanTensor => "euclidean_tensor",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = BvError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "geodesic" => Ok(Metric::Geodesic),
            "euclidean_sphere" => Ok(Metric::EuclideanSphere),
            "euclidean_tensor" => Ok(Metric::EuclideanTensor),
            other => Err(BvError::InvalidArgument(format!("unknown metric '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    dims: Vec<usize>,
    spacing: f64,
    origin: Vec<f64>,
    d: usize,
    kind: ValueKind,
    values: Vec<f64>,
    mask: Option<Vec<bool>>,
}

impl GridField {
    /// Validates shapes and norms. `Proj` values are replaced by their canonical
    /// representatives (an exact sign flip).
    pub fn new(
        dims: Vec<usize>,
        spacing: f64,
        origin: Vec<f64>,
        d: usize,
        kind: ValueKind,
        mut values: Vec<f64>,
        mask: Option<Vec<bool>>,
    ) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(BvError::InvalidArgument(format!("bad grid shape {dims:?}")));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(BvError::InvalidArgument(format!(
                "spacing must be positive, got {spacing}"
            )));
        }
        if origin.len() != dims.len() {
            return Err(BvError::DimensionMismatch {
                expected: dims.len(),
                got: origin.len(),
            });
        }
        if d < 2 {
            return Err(BvError::InvalidArgument(format!(
                "value dimension must be >= 2, got {d}"
            )));
        }
        let cells: usize = dims.iter().product();
        if values.len() != cells * d {
            return Err(BvError::DimensionMismatch {
                expected: cells * d,
                got: values.len(),
            });
        }
        if let Some(m) = &mask {
            if m.len() != cells {
                return Err(BvError::DimensionMismatch {
                    expected: cells,
                    got: m.len(),
                });
            }
        }
        for v in values.chunks_mut(d) {
            let n = norm(v);
            if !n.is_finite() {
                return Err(BvError::NotUnit { norm: n });
            }
            match kind {
                ValueKind::Proj | ValueKind::Unit => {
                    if (n - 1.0).abs() > FIELD_UNIT_TOL {
                        return Err(BvError::NotUnit { norm: n });
                    }
                    if kind == ValueKind::Proj && canonical_sign(v) < 0.0 {
                        v.iter_mut().for_each(|x| *x = -*x);
                    }
                }
                ValueKind::Vector => {
                    if n > 1.0 + FIELD_UNIT_TOL {
                        return Err(BvError::NotUnit { norm: n });
                    }
                }
            }
        }
        Ok(Self {
            dims,
            spacing,
            origin,
            d,
            kind,
            values,
            mask,
        })
    }

    /// Builds a field by evaluating `f` at every cell center. `mask_fn` decides
    /// membership in Ω; values outside the mask are still evaluated and stored.
    pub fn from_fn<F>(
        dims: Vec<usize>,
        spacing: f64,
        origin: Vec<f64>,
        d: usize,
        kind: ValueKind,
        mask_fn: Option<&dyn Fn(&[f64]) -> bool>,
        f: F,
    ) -> Result<Self>
    where
        F: Fn(&[f64]) -> Vec<f64>,
    {
        let cells: usize = dims.iter().product();
        let mut values = Vec::with_capacity(cells * d);
        let mut mask = mask_fn.map(|_| Vec::with_capacity(cells));
        let mut x = vec![0.0; dims.len()];
        let strides = strides_of(&dims);
        for i in 0..cells {
            for (a, s) in strides.iter().enumerate() {
                let k = (i / s) % dims[a];
                x[a] = origin[a] + (k as f64 + 0.5) * spacing;
            }
            let v = f(&x);
            if v.len() != d {
                return Err(BvError::DimensionMismatch {
                    expected: d,
                    got: v.len(),
                });
            }
            values.extend(v);
            if let (Some(m), Some(mf)) = (mask.as_mut(), mask_fn) {
                m.push(mf(&x));
            }
        }
        Self::new(dims, spacing, origin, d, kind, values, mask)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Number of spatial axes `N`.
    pub fn axes(&self) -> usize {
        self.dims.len()
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    /// Value dimension `d`.
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn kind(&self) -> ValueKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.d
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, cell: usize) -> &[f64] {
        &self.values[cell * self.d..(cell + 1) * self.d]
    }

    pub fn mask(&self) -> Option<&[bool]> {
        self.mask.as_deref()
    }

    #[inline]
    pub fn in_mask(&self, cell: usize) -> bool {
        self.mask.as_ref().is_none_or(|m| m[cell])
    }

    pub fn masked_cells(&self) -> usize {
        self.mask
            .as_ref()
            .map_or(self.len(), |m| m.iter().filter(|&&b| b).count())
    }

    /// Row-major strides (axis 0 slowest).
    pub fn strides(&self) -> Vec<usize> {
        strides_of(&self.dims)
    }

    pub fn unravel(&self, cell: usize) -> Vec<usize> {
        let strides = self.strides();
        strides
            .iter()
            .zip(&self.dims)
            .map(|(s, n)| (cell / s) % n)
            .collect()
    }

    pub fn cell_center(&self, cell: usize) -> Vec<f64> {
        self.unravel(cell)
            .iter()
            .zip(&self.origin)
            .map(|(&k, o)| o + (k as f64 + 0.5) * self.spacing)
            .collect()
    }

    /// Same geometry and mask, new values.
    pub fn with_values(&self, kind: ValueKind, d: usize, values: Vec<f64>) -> Result<Self> {
        Self::new(
            self.dims.clone(),
            self.spacing,
            self.origin.clone(),
            d,
            kind,
            values,
            self.mask.clone(),
        )
    }

    pub fn with_mask(mut self, mask: Option<Vec<bool>>) -> Result<Self> {
        if let Some(m) = &mask {
            if m.len() != self.len() {
                return Err(BvError::DimensionMismatch {
                    expected: self.len(),
                    got: m.len(),
                });
            }
        }
        self.mask = mask;
        Ok(self)
    }

    /// The line field `[n]` of a unit-vector field.
    pub fn project(&self) -> Result<Self> {
        if self.kind == ValueKind::Vector {
            return Err(BvError::InvalidArgument(
                "cannot project an unconstrained vector field".into(),
            ));
        }
        self.with_values(ValueKind::Proj, self.d, self.values.clone())
    }

    /// Reinterprets stored representatives as unit vectors.
    pub fn as_unit(&self) -> Result<Self> {
        if self.kind == ValueKind::Vector {
            return Err(BvError::InvalidArgument("vector values are not unit".into()));
        }
        self.with_values(ValueKind::Unit, self.d, self.values.clone())
    }

    pub fn proj_point(&self, cell: usize) -> ProjPoint {
        ProjPoint::new(UnitVector::from_raw(self.value(cell).to_vec()))
    }

    /// Same field on the dilated domain `λΩ` (spacing and origin scaled).
    pub fn dilated(&self, lambda: f64) -> Result<Self> {
        Self::new(
            self.dims.clone(),
            self.spacing * lambda,
            self.origin.iter().map(|o| o * lambda).collect(),
            self.d,
            self.kind,
            self.values.clone(),
            self.mask.clone(),
        )
    }

    pub(crate) fn require_nonempty_mask(&self) -> Result<()> {
        if self.masked_cells() == 0 {
            Err(BvError::EmptyMask)
        } else {
            Ok(())
        }
    }
}

pub(crate) fn strides_of(dims: &[usize]) -> Vec<usize> {
    let mut strides = vec![1; dims.len()];
    for a in (0..dims.len().saturating_sub(1)).rev() {
        strides[a] = strides[a + 1] * dims[a + 1];
    }
    strides
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    version: u32,
    dims: Vec<usize>,
    spacing: f64,
    origin: Vec<f64>,
    d: usize,
    kind: String,
    mask: String,
}

pub fn write_field<W: Write>(field: &GridField, mut out: W) -> Result<()> {
    let kind = match field.kind {
        ValueKind::Proj => "proj",
        ValueKind::Unit => "unit",
        ValueKind::Vector => {
            return Err(BvError::InvalidArgument(
                "vector-valued fields have no file representation".into(),
            ))
        }
    };
    let header = Header {
        version: 1,
        dims: field.dims.clone(),
        spacing: field.spacing,
        origin: field.origin.clone(),
        d: field.d,
        kind: kind.into(),
        mask: if field.mask.is_some() { "inline" } else { "none" }.into(),
    };
    serde_json::to_writer(&mut out, &header)?;
    out.write_all(b"\n")?;
    let mut line = String::new();
    for cell in 0..field.len() {
        line.clear();
        for (j, x) in field.value(cell).iter().enumerate() {
            if j > 0 {
                line.push(',');
            }
            line.push_str(&format!("{x:.16e}"));
        }
        if let Some(m) = &field.mask {
            line.push_str(if m[cell] { ",1" } else { ",0" });
        }
        line.push('\n');
        out.write_all(line.as_bytes())?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_field<R: BufRead>(input: R) -> Result<GridField> {
    let mut lines = input.lines();
    let header_line = lines
        .next()
        .ok_or_else(|| BvError::Format("empty file".into()))??;
    let header: Header =
        serde_json::from_str(&header_line).map_err(|e| BvError::Format(format!("bad header: {e}")))?;
    if header.version != 1 {
        return Err(BvError::Format(format!("unsupported version {}", header.version)));
    }
    let kind = match header.kind.as_str() {
        "proj" => ValueKind::Proj,
        "unit" => ValueKind::Unit,
        other => return Err(BvError::Format(format!("unknown kind '{other}'"))),
    };
    let inline_mask = match header.mask.as_str() {
        "none" => false,
        "inline" => true,
        other => return Err(BvError::Format(format!("unknown mask mode '{other}'"))),
    };
    let cells: usize = header.dims.iter().product();
    let d = header.d;
    let mut values = Vec::with_capacity(cells * d);
    let mut mask = inline_mask.then(|| Vec::with_capacity(cells));
    let columns = d + usize::from(inline_mask);
    let mut rows = 0usize;
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        rows += 1;
        if rows > cells {
            return Err(BvError::Format(format!("more than {cells} rows")));
        }
        let mut count = 0;
        for (j, tok) in trimmed.split(',').enumerate() {
            count += 1;
            if j >= columns {
                break;
            }
            let tok = tok.trim();
            if j < d {
                let x: f64 = tok
                    .parse()
                    .map_err(|_| BvError::Format(format!("row {}: bad number '{tok}'", lineno + 2)))?;
                values.push(x);
            } else {
                let flag = match tok {
                    "0" => false,
                    "1" => true,
                    _ => {
                        return Err(BvError::Format(format!(
                            "row {}: mask entry must be 0 or 1, got '{tok}'",
                            lineno + 2
                        )))
                    }
                };
                mask.as_mut().expect("inline mask").push(flag);
            }
        }
        if count != columns {
            return Err(BvError::Format(format!(
                "row {}: expected {columns} columns, got {count}",
                lineno + 2
            )));
        }
    }
    if rows != cells {
        return Err(BvError::Format(format!("expected {cells} rows, got {rows}")));
    }
    GridField::new(header.dims, header.spacing, header.origin, d, kind, values, mask).map_err(|e| match e {
        BvError::NotUnit { norm } => BvError::Format(format!("value with norm {norm} is not unit")),
        other => other,
    })
}

pub fn load_field(path: &Path) -> Result<GridField> {
    let file = std::fs::File::open(path)?;
    read_field(std::io::BufReader::new(file))
}

pub fn save_field(field: &GridField, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_field(field, std::io::BufWriter::new(file))
}
