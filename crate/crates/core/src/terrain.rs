//! Elevation rasters: Esri ASCII grid I/O, synthetic test terrains, bilinear
//! lookup and the local metric frame used by every other module.
//!
//! Cell values are treated as node samples at cell centres, so for a grid
//! with lower-left corner `(xll, yll)` the node in row `r` (row 0 = north)
//! and column `c` sits at
//!
//! ```text
//! lon = xll + (c + 0.5) * cellsize
//! lat = yll + (nrows - 1 - r + 0.5) * cellsize
//! ```
//!
//! Queries are only answered inside the hull spanned by those nodes.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Mean Earth radius (IUGG), metres.
pub const EARTH_RADIUS_M: f64 = 6_371_008.8;

/// Largest offset from the frame origin, in degrees, for which the
/// equirectangular approximation is accepted.
pub const FRAME_VALIDITY_DEG: f64 = 2.0;

const HULL_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TerrainError {
    #[error("line {line}: missing header key `{key}`")]
    MissingHeader { key: &'static str, line: usize },
    #[error("line {line}: duplicate header key `{key}`")]
    DuplicateHeader { key: String, line: usize },
    #[error("line {line}: unknown header key `{key}`")]
    UnknownHeader { key: String, line: usize },
    #[error("line {line}: non-numeric token `{token}`")]
    NonNumeric { token: String, line: usize },
    #[error("line {line}: non-finite elevation `{token}`")]
    NonFinite { token: String, line: usize },
    #[error(
        "expected {expected} values (nrows x ncols), found {found}; \
         data ends at line {line}, missing rows {first_missing_row}..{nrows}"
    )]
    MissingValues {
        expected: usize,
        found: usize,
        line: usize,
        first_missing_row: usize,
        nrows: usize,
    },
    #[error("line {line}: unexpected extra token `{token}` after {expected} values")]
    ExtraValues {
        expected: usize,
        token: String,
        line: usize,
    },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("query ({x:.3}, {y:.3}) m is outside the grid hull")]
    OutOfBounds { x: f64, y: f64 },
    #[error("query ({x:.3}, {y:.3}) m touches a nodata cell")]
    NoData { x: f64, y: f64 },
    #[error(
        "point ({lat}, {lon}) is more than {FRAME_VALIDITY_DEG} degrees from the frame origin"
    )]
    OutsideFrame { lat: f64, lon: f64 },
    #[error("invalid synthetic terrain: {0}")]
    InvalidSynthetic(String),
}

/// Uniform elevation raster in geographic coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct DemGrid {
    ncols: usize,
    nrows: usize,
    xll: f64,
    yll: f64,
    cellsize: f64,
    nodata: f64,
    values: Vec<f64>,
}

impl DemGrid {
    /// Builds a grid from row-major values, northernmost row first.
    pub fn new(
        ncols: usize,
        nrows: usize,
        xll: f64,
        yll: f64,
        cellsize: f64,
        nodata: f64,
        values: Vec<f64>,
    ) -> Result<Self, TerrainError> {
        if ncols < 2 || nrows < 2 {
            return Err(TerrainError::InvalidGrid(format!(
                "ncols and nrows must be at least 2 (got {ncols} x {nrows})"
            )));
        }
        if !(cellsize > 0.0 && cellsize.is_finite()) {
            return Err(TerrainError::InvalidGrid(format!(
                "cellsize must be positive (got {cellsize})"
            )));
        }
        if !xll.is_finite() || !yll.is_finite() {
            return Err(TerrainError::InvalidGrid("non-finite corner".into()));
        }
        if values.len() != ncols * nrows {
            return Err(TerrainError::InvalidGrid(format!(
                "expected {} values, got {}",
                ncols * nrows,
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|&v| v != nodata && !v.is_finite()) {
            return Err(TerrainError::InvalidGrid(format!(
                "non-finite value at row {}, col {}",
                i / ncols,
                i % ncols
            )));
        }
        Ok(Self {
            ncols,
            nrows,
            xll,
            yll,
            cellsize,
            nodata,
            values,
        })
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn xll(&self) -> f64 {
        self.xll
    }

    pub fn yll(&self) -> f64 {
        self.yll
    }

    pub fn cellsize(&self) -> f64 {
        self.cellsize
    }

    pub fn nodata(&self) -> f64 {
        self.nodata
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Raw cell value, including the nodata sentinel.
    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.ncols + col]
    }

    pub fn is_nodata(&self, row: usize, col: usize) -> bool {
        self.value(row, col) == self.nodata
    }

    pub fn nodata_count(&self) -> usize {
        self.values.iter().filter(|&&v| v == self.nodata).count()
    }

    /// Minimum and maximum of the valid cells, `None` when every cell is nodata.
    pub fn elevation_range(&self) -> Option<(f64, f64)> {
        self.values
            .iter()
            .copied()
            .filter(|&v| v != self.nodata)
            .fold(None, |acc, v| match acc {
                None => Some((v, v)),
                Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
            })
    }

    /// Geographic position (lat, lon) of a node.
    pub fn node_latlon(&self, row: usize, col: usize) -> (f64, f64) {
        let lat = self.yll + ((self.nrows - 1 - row) as f64 + 0.5) * self.cellsize;
        let lon = self.xll + (col as f64 + 0.5) * self.cellsize;
        (lat, lon)
    }

    /// Bounding box of the node hull as (min_lat, min_lon, max_lat, max_lon).
    pub fn hull_latlon(&self) -> (f64, f64, f64, f64) {
        let (min_lat, min_lon) = self.node_latlon(self.nrows - 1, 0);
        let (max_lat, max_lon) = self.node_latlon(0, self.ncols - 1);
        (min_lat, min_lon, max_lat, max_lon)
    }

    /// Node hull in local metres as (x_min, y_min, x_max, y_max).
    pub fn hull_local(&self, frame: &LocalFrame) -> (f64, f64, f64, f64) {
        let (min_lat, min_lon, max_lat, max_lon) = self.hull_latlon();
        let (x0, y0) = frame.project_unchecked(min_lat, min_lon);
        let (x1, y1) = frame.project_unchecked(max_lat, max_lon);
        (x0, y0, x1, y1)
    }

    /// Bilinear elevation at a geographic position.
    pub fn elevation_at_latlon(&self, lat: f64, lon: f64) -> Result<f64, LookupError> {
        let fc = (lon - self.xll) / self.cellsize - 0.5;
        let fs = (lat - self.yll) / self.cellsize - 0.5;
        let max_c = (self.ncols - 1) as f64;
        let max_s = (self.nrows - 1) as f64;
        if !(fc >= -HULL_EPS && fc <= max_c + HULL_EPS && fs >= -HULL_EPS && fs <= max_s + HULL_EPS)
        {
            return Err(LookupError::OutOfBounds);
        }
        let fc = fc.clamp(0.0, max_c);
        let fs = fs.clamp(0.0, max_s);
        let c0 = (fc.floor() as usize).min(self.ncols - 2);
        let s0 = (fs.floor() as usize).min(self.nrows - 2);
        let tx = fc - c0 as f64;
        let ty = fs - s0 as f64;
        // southern row of the pair has the larger row index
        let r_south = self.nrows - 1 - s0;
        let r_north = r_south - 1;
        let sw = self.value(r_south, c0);
        let se = self.value(r_south, c0 + 1);
        let nw = self.value(r_north, c0);
        let ne = self.value(r_north, c0 + 1);
        if [sw, se, nw, ne].contains(&self.nodata) {
            return Err(LookupError::NoData);
        }
        let south = sw + (se - sw) * tx;
        let north = nw + (ne - nw) * tx;
        Ok(south + (north - south) * ty)
    }
}

/// Failure kinds of a point lookup, without the query coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LookupError {
    OutOfBounds,
    NoData,
}

/// Bilinear ground elevation at local coordinates `(x, y)`.
pub fn elevation_at(
    grid: &DemGrid,
    x: f64,
    y: f64,
    frame: &LocalFrame,
) -> Result<f64, TerrainError> {
    let (lat, lon) = frame.unproject(x, y);
    grid.elevation_at_latlon(lat, lon).map_err(|e| match e {
        LookupError::OutOfBounds => TerrainError::OutOfBounds { x, y },
        LookupError::NoData => TerrainError::NoData { x, y },
    })
}

/// Equirectangular tangent frame: x metres east, y metres north of an origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalFrame {
    pub origin_lat: f64,
    pub origin_lon: f64,
    pub meters_per_deg_lat: f64,
    pub meters_per_deg_lon: f64,
}

impl LocalFrame {
    pub fn new(origin_lat: f64, origin_lon: f64) -> Self {
        let meters_per_deg_lat = EARTH_RADIUS_M * std::f64::consts::PI / 180.0;
        Self {
            origin_lat,
            origin_lon,
            meters_per_deg_lat,
            meters_per_deg_lon: meters_per_deg_lat * origin_lat.to_radians().cos(),
        }
    }

    /// Frame centred on the midpoint of two geographic points.
    pub fn midpoint(a: (f64, f64), b: (f64, f64)) -> Self {
        Self::new(0.5 * (a.0 + b.0), 0.5 * (a.1 + b.1))
    }

    pub fn project(&self, lat: f64, lon: f64) -> Result<(f64, f64), TerrainError> {
        if !((lat - self.origin_lat).abs() < FRAME_VALIDITY_DEG
            && (lon - self.origin_lon).abs() < FRAME_VALIDITY_DEG)
        {
            return Err(TerrainError::OutsideFrame { lat, lon });
        }
        Ok(self.project_unchecked(lat, lon))
    }

    pub(crate) fn project_unchecked(&self, lat: f64, lon: f64) -> (f64, f64) {
        (
            (lon - self.origin_lon) * self.meters_per_deg_lon,
            (lat - self.origin_lat) * self.meters_per_deg_lat,
        )
    }

    /// Inverse of [`LocalFrame::project`], returning (lat, lon).
    pub fn unproject(&self, x: f64, y: f64) -> (f64, f64) {
        (
            self.origin_lat + y / self.meters_per_deg_lat,
            self.origin_lon + x / self.meters_per_deg_lon,
        )
    }
}

/// Free-function form of [`LocalFrame::project`].
pub fn project(lat: f64, lon: f64, frame: &LocalFrame) -> Result<(f64, f64), TerrainError> {
    frame.project(lat, lon)
}

/// Free-function form of [`LocalFrame::unproject`].
pub fn unproject(x: f64, y: f64, frame: &LocalFrame) -> (f64, f64) {
    frame.unproject(x, y)
}

const HEADER_KEYS: [&str; 6] = [
    "ncols",
    "nrows",
    "xllcorner",
    "yllcorner",
    "cellsize",
    "nodata_value",
];

/// Parses an Esri ASCII grid.
pub fn parse_arcgrid(text: &str) -> Result<DemGrid, TerrainError> {
    let mut tokens = text
        .lines()
        .enumerate()
        .flat_map(|(i, line)| line.split_whitespace().map(move |t| (i + 1, t)))
        .peekable();

    let mut header: [Option<(f64, usize)>; 6] = [None; 6];
    let mut last_line = 0;
    while let Some(&(line, tok)) = tokens.peek() {
        if !tok.starts_with(|c: char| c.is_ascii_alphabetic()) {
            break;
        }
        // "nan"/"inf" would look like keys but are data tokens
        let key = tok.to_ascii_lowercase();
        if matches!(key.as_str(), "nan" | "inf" | "infinity") {
            break;
        }
        tokens.next();
        let idx = HEADER_KEYS.iter().position(|k| *k == key).ok_or_else(|| {
            TerrainError::UnknownHeader {
                key: tok.to_string(),
                line,
            }
        })?;
        if header[idx].is_some() {
            return Err(TerrainError::DuplicateHeader {
                key: tok.to_string(),
                line,
            });
        }
        let (vline, vtok) = tokens.next().ok_or(TerrainError::NonNumeric {
            token: String::new(),
            line,
        })?;
        let value: f64 = vtok.parse().map_err(|_| TerrainError::NonNumeric {
            token: vtok.to_string(),
            line: vline,
        })?;
        header[idx] = Some((value, vline));
        last_line = vline;
    }
    let get = |i: usize| {
        header[i]
            .map(|(v, _)| v)
            .ok_or(TerrainError::MissingHeader {
                key: HEADER_KEYS[i],
                line: last_line + 1,
            })
    };
    let ncols_f = get(0)?;
    let nrows_f = get(1)?;
    let xll = get(2)?;
    let yll = get(3)?;
    let cellsize = get(4)?;
    let nodata = get(5)?;
    let as_count = |v: f64, key: &str, line: usize| -> Result<usize, TerrainError> {
        if v.fract() != 0.0 || v < 2.0 {
            return Err(TerrainError::InvalidGrid(format!(
                "line {line}: {key} must be an integer >= 2 (got {v})"
            )));
        }
        Ok(v as usize)
    };
    let ncols = as_count(ncols_f, "ncols", header[0].unwrap().1)?;
    let nrows = as_count(nrows_f, "nrows", header[1].unwrap().1)?;
    let expected = ncols * nrows;

    let mut values = Vec::with_capacity(expected);
    let mut data_line = last_line;
    for (line, tok) in tokens {
        if values.len() == expected {
            return Err(TerrainError::ExtraValues {
                expected,
                token: tok.to_string(),
                line,
            });
        }
        let v: f64 = tok.parse().map_err(|_| TerrainError::NonNumeric {
            token: tok.to_string(),
            line,
        })?;
        if v != nodata && !v.is_finite() {
            return Err(TerrainError::NonFinite {
                token: tok.to_string(),
                line,
            });
        }
        values.push(v);
        data_line = line;
    }
    if values.len() < expected {
        return Err(TerrainError::MissingValues {
            expected,
            found: values.len(),
            line: data_line,
            first_missing_row: values.len() / ncols,
            nrows,
        });
    }
    DemGrid::new(ncols, nrows, xll, yll, cellsize, nodata, values)
}

/// Writes an Esri ASCII grid; numbers use the shortest exact representation.
pub fn serialize_arcgrid(grid: &DemGrid) -> String {
    let mut out = String::with_capacity(grid.values.len() * 8 + 128);
    let _ = writeln!(out, "ncols {}", grid.ncols);
    let _ = writeln!(out, "nrows {}", grid.nrows);
    let _ = writeln!(out, "xllcorner {}", grid.xll);
    let _ = writeln!(out, "yllcorner {}", grid.yll);
    let _ = writeln!(out, "cellsize {}", grid.cellsize);
    let _ = writeln!(out, "NODATA_value {}", grid.nodata);
    for row in grid.values.chunks(grid.ncols) {
        let mut first = true;
        for v in row {
            if !first {
                out.push(' ');
            }
            first = false;
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    out
}

/// Analytic test terrains, expressed in the local metric frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TerrainKind {
    Flat {
        elevation: f64,
    },
    /// `base + slope_x * x + slope_y * y`.
    Incline {
        base: f64,
        slope_x: f64,
        #[serde(default)]
        slope_y: f64,
    },
    /// Gaussian ridge along a line through the origin at `angle_deg`
    /// (counter-clockwise from east).
    GaussianRidge {
        #[serde(default)]
        base: f64,
        amplitude: f64,
        sigma: f64,
        #[serde(default)]
        angle_deg: f64,
    },
    /// Inverted Gaussian: floor at `base` along the valley line, rising to
    /// `base + wall_height` away from it.
    Valley {
        #[serde(default)]
        base: f64,
        wall_height: f64,
        sigma: f64,
        #[serde(default)]
        angle_deg: f64,
    },
}

impl TerrainKind {
    fn validate(&self) -> Result<(), TerrainError> {
        let bad = |msg: &str| Err(TerrainError::InvalidSynthetic(msg.to_string()));
        match *self {
            TerrainKind::Flat { elevation } if !elevation.is_finite() => {
                bad("elevation must be finite")
            }
            TerrainKind::Incline {
                base,
                slope_x,
                slope_y,
            } if !(base.is_finite() && slope_x.is_finite() && slope_y.is_finite()) => {
                bad("incline parameters must be finite")
            }
            TerrainKind::GaussianRidge { amplitude, .. } if !(amplitude > 0.0) => {
                bad("ridge amplitude must be positive")
            }
            TerrainKind::GaussianRidge { sigma, .. } if !(sigma > 0.0) => {
                bad("ridge sigma must be positive")
            }
            TerrainKind::Valley { wall_height, .. } if !(wall_height > 0.0) => {
                bad("valley wall_height must be positive")
            }
            TerrainKind::Valley { sigma, .. } if !(sigma > 0.0) => {
                bad("valley sigma must be positive")
            }
            _ => Ok(()),
        }
    }

    /// Analytic elevation at local coordinates.
    pub fn elevation(&self, x: f64, y: f64) -> f64 {
        // signed distance from a line through the origin at angle `a`
        let line_dist = |a: f64| {
            let (s, c) = a.to_radians().sin_cos();
            -s * x + c * y
        };
        match *self {
            TerrainKind::Flat { elevation } => elevation,
            TerrainKind::Incline {
                base,
                slope_x,
                slope_y,
            } => base + slope_x * x + slope_y * y,
            TerrainKind::GaussianRidge {
                base,
                amplitude,
                sigma,
                angle_deg,
            } => {
                let d = line_dist(angle_deg);
                base + amplitude * (-d * d / (2.0 * sigma * sigma)).exp()
            }
            TerrainKind::Valley {
                base,
                wall_height,
                sigma,
                angle_deg,
            } => {
                let d = line_dist(angle_deg);
                base + wall_height * (1.0 - (-d * d / (2.0 * sigma * sigma)).exp())
            }
        }
    }
}

/// Samples an analytic terrain onto a grid covering at least `extent` metres
/// square, centred on the frame origin, with `resolution` nodes north-south.
pub fn synth_terrain(
    kind: &TerrainKind,
    extent: f64,
    resolution: usize,
    frame: &LocalFrame,
) -> Result<DemGrid, TerrainError> {
    if !(extent > 0.0 && extent.is_finite()) {
        return Err(TerrainError::InvalidSynthetic(format!(
            "extent must be positive (got {extent})"
        )));
    }
    if resolution < 2 {
        return Err(TerrainError::InvalidSynthetic(format!(
            "resolution must be at least 2 (got {resolution})"
        )));
    }
    kind.validate()?;
    let nrows = resolution;
    let cellsize = extent / (resolution - 1) as f64 / frame.meters_per_deg_lat;
    let dx = cellsize * frame.meters_per_deg_lon;
    let ncols = ((extent / dx) - 1e-9).ceil() as usize + 1;
    let half_lat = 0.5 * (nrows - 1) as f64 * cellsize;
    let half_lon = 0.5 * (ncols - 1) as f64 * cellsize;
    let yll = frame.origin_lat - half_lat - 0.5 * cellsize;
    let xll = frame.origin_lon - half_lon - 0.5 * cellsize;
    let mut values = Vec::with_capacity(nrows * ncols);
    let mut grid = DemGrid {
        ncols,
        nrows,
        xll,
        yll,
        cellsize,
        nodata: -9999.0,
        values: Vec::new(),
    };
    for r in 0..nrows {
        for c in 0..ncols {
            let (lat, lon) = grid.node_latlon(r, c);
            let (x, y) = frame.project_unchecked(lat, lon);
            values.push(kind.elevation(x, y));
        }
    }
    grid.values = values;
    Ok(grid)
}
