//! Heatmaps (binary PGM) and CSV dumps of indicator maps.

use crate::error::{Error, Result};
use crate::geometry::BoundaryCurve;
use crate::inversion::IndicatorMap;
use std::io::Write;
use std::path::Path;

/// Gray level used for the boundary overlay.
pub const OVERLAY_LEVEL: u8 = 128;

#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    pub width: usize,
    pub height: usize,
    /// Row-major, top row first.
    pub pixels: Vec<u8>,
}

impl Heatmap {
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }

    pub fn pixel(&self, ix: usize, iy_top: usize) -> u8 {
        self.pixels[iy_top * self.width + ix]
    }
}

/// One pixel per grid point: `round(255 · I / max I)` inside the sampling disk,
/// 0 outside. The top image row is the largest `y`.
pub fn heatmap(map: &IndicatorMap, overlay: Option<&[BoundaryCurve]>) -> Heatmap {
    let g = &map.grid;
    let scale = if map.max > 0.0 && map.max.is_finite() { 255.0 / map.max } else { 0.0 };
    let mut pixels = vec![0u8; g.nx * g.ny];
    for iy in 0..g.ny {
        let row = g.ny - 1 - iy;
        for ix in 0..g.nx {
            let i = iy * g.nx + ix;
            if g.mask[i] {
                pixels[row * g.nx + ix] = (map.values[i] * scale).round().clamp(0.0, 255.0) as u8;
            }
        }
    }
    if let Some(curves) = overlay {
        for c in curves {
            let samples = 8 * (g.nx + g.ny).max(64);
            for p in c.polygon(samples) {
                let fx = ((p.x - g.origin.x) / g.spacing).round();
                let fy = ((p.y - g.origin.y) / g.spacing).round();
                if fx < 0.0 || fy < 0.0 || fx >= g.nx as f64 || fy >= g.ny as f64 {
                    continue;
                }
                let row = g.ny - 1 - fy as usize;
                pixels[row * g.nx + fx as usize] = OVERLAY_LEVEL;
            }
        }
    }
    Heatmap {
        width: g.nx,
        height: g.ny,
        pixels,
    }
}

pub fn write_pgm(path: &Path, image: &Heatmap) -> Result<()> {
    std::fs::write(path, image.to_pgm()).map_err(|e| Error::io(path, e))
}

/// Parse a binary PGM written by [`write_pgm`].
pub fn read_pgm(bytes: &[u8]) -> Result<Heatmap> {
    let bad = |m: &str| Error::InvalidParameter(format!("not a P5 image: {m}"));
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header"));
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("header"))?.to_owned());
    }
    if fields[0] != "P5" || fields[3] != "255" {
        return Err(bad("magic or depth"));
    }
    let width: usize = fields[1].parse().map_err(|_| bad("width"))?;
    let height: usize = fields[2].parse().map_err(|_| bad("height"))?;
    let pixels = bytes.get(pos + 1..).ok_or_else(|| bad("missing raster"))?.to_vec();
    if pixels.len() != width * height {
        return Err(bad("raster size"));
    }
    Ok(Heatmap { width, height, pixels })
}

/// `x,y,value` per unmasked grid point, values normalized by the map maximum.
pub fn write_csv(path: &Path, map: &IndicatorMap) -> Result<()> {
    let io = |e| Error::io(path, e);
    let file = std::fs::File::create(path).map_err(io)?;
    let mut w = std::io::BufWriter::new(file);
    writeln!(w, "x,y,value").map_err(io)?;
    let norm = map.normalized();
    for i in map.grid.active_indices() {
        let p = map.grid.point(i);
        writeln!(w, "{},{},{}", p.x, p.y, norm[i]).map_err(io)?;
    }
    w.flush().map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Point, SamplingGrid};
    use crate::operators::OperatorKind;

    fn ramp() -> IndicatorMap {
        let grid = SamplingGrid::new(Point::new(0.0, 0.0), 1.0, 0.25);
        let values: Vec<f64> = (0..grid.len())
            .map(|i| if grid.mask[i] { grid.point(i).y + 2.0 } else { 0.0 })
            .collect();
        let max = values.iter().cloned().fold(0.0, f64::max);
        IndicatorMap {
            grid,
            kind: OperatorKind::N,
            values,
            max,
            degenerate: vec![],
        }
    }

    #[test]
    fn pixels_follow_the_normalized_map() {
        let map = ramp();
        let img = heatmap(&map, None);
        let g = &map.grid;
        assert_eq!((img.width, img.height), (g.nx, g.ny));
        for iy in 0..g.ny {
            for ix in 0..g.nx {
                let i = iy * g.nx + ix;
                let want = if g.mask[i] { (255.0 * map.values[i] / map.max).round() as u8 } else { 0 };
                assert_eq!(img.pixel(ix, g.ny - 1 - iy), want);
            }
        }
        assert_eq!(img.pixels.iter().max(), Some(&255));
    }

    #[test]
    fn pgm_round_trip() {
        let img = heatmap(&ramp(), None);
        let bytes = img.to_pgm();
        assert!(bytes.starts_with(b"P5\n"));
        assert_eq!(read_pgm(&bytes).unwrap(), img);
        assert!(read_pgm(b"P2\n1 1\n255\n\0").is_err());
    }

    #[test]
    fn overlay_marks_boundary() {
        let map = ramp();
        let disk = BoundaryCurve::Disk {
            center: [0.0, 0.0],
            radius: 0.5,
        };
        let img = heatmap(&map, Some(std::slice::from_ref(&disk)));
        assert!(img.pixels.iter().any(|&p| p == OVERLAY_LEVEL));
    }

    #[test]
    fn csv_lists_active_points() {
        let map = ramp();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        write_csv(&path, &map).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "x,y,value");
        assert_eq!(lines.len() - 1, map.grid.active_indices().len());
        let top: f64 = lines.iter().skip(1).map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap()).fold(0.0, f64::max);
        assert!((top - 1.0).abs() < 1e-15);
    }
}
