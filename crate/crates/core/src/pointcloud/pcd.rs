//! ASCII PCD subset: `FIELDS x y z [rgb]`, `POINTS <m>`, `DATA ascii`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{Point3, PointCloud};
use crate::error::{Error, Result};

pub fn load_pcd(path: impl AsRef<Path>) -> Result<PointCloud> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_pcd(BufReader::new(file))
}

pub fn save_pcd(path: impl AsRef<Path>, cloud: &PointCloud) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_pcd(&mut w, cloud).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Clone, Copy, PartialEq)]
enum RgbEncoding {
    /// PCL convention: packed 0x00RRGGBB reinterpreted as an f32.
    Float,
    Unsigned,
}

struct Header {
    rgb: Option<RgbEncoding>,
    points: usize,
}

/// Parses an ASCII PCD stream. Rows with a NaN coordinate are dropped.
pub fn read_pcd<R: BufRead>(reader: R) -> Result<PointCloud> {
    let mut fields: Option<Vec<String>> = None;
    let mut types: Option<Vec<String>> = None;
    let mut points: Option<usize> = None;
    let mut header: Option<Header> = None;
    let mut rows_seen = 0usize;
    let mut out_points = Vec::new();
    let mut out_colors = Vec::new();

    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::io("<pcd stream>", e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let Some(h) = header.as_ref() else {
            let mut parts = trimmed.split_whitespace();
            let key = parts.next().unwrap_or_default().to_ascii_uppercase();
            let rest: Vec<String> = parts.map(str::to_string).collect();
            match key.as_str() {
                "FIELDS" => fields = Some(rest),
                "TYPE" => types = Some(rest),
                "POINTS" => {
                    let n = rest
                        .first()
                        .and_then(|v| v.parse::<usize>().ok())
                        .ok_or_else(|| Error::Parse {
                            line: lineno,
                            message: format!("bad POINTS value in '{trimmed}'"),
                        })?;
                    points = Some(n);
                }
                "DATA" => {
                    if rest.first().map(|s| s.as_str()) != Some("ascii") {
                        return Err(Error::Header(format!(
                            "only DATA ascii is supported (line {lineno})"
                        )));
                    }
                    header = Some(finish_header(fields.take(), types.take(), points)?);
                }
                "VERSION" | "SIZE" | "COUNT" | "WIDTH" | "HEIGHT" | "VIEWPOINT" => {}
                other => {
                    return Err(Error::Header(format!(
                        "unknown header key '{other}' at line {lineno}"
                    )))
                }
            }
            continue;
        };

        rows_seen += 1;
        if rows_seen > h.points {
            return Err(Error::Parse {
                line: lineno,
                message: format!("more data rows than POINTS {}", h.points),
            });
        }
        let cols: Vec<&str> = trimmed.split_whitespace().collect();
        let expected = 3 + usize::from(h.rgb.is_some());
        if cols.len() != expected {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected {expected} values, found {}", cols.len()),
            });
        }
        let mut xyz = [0.0f64; 3];
        for (v, s) in xyz.iter_mut().zip(&cols) {
            *v = parse_number(s, lineno)?;
        }
        let color = match h.rgb {
            None => None,
            Some(enc) => Some(parse_rgb(cols[3], enc, lineno)?),
        };
        if xyz.iter().any(|v| v.is_nan()) {
            continue;
        }
        out_points.push(Point3::new(xyz[0], xyz[1], xyz[2]));
        if let Some(c) = color {
            out_colors.push(c);
        }
    }

    let h = header.ok_or_else(|| Error::Header("missing DATA line".into()))?;
    if rows_seen != h.points {
        return Err(Error::Parse {
            line: 0,
            message: format!("header declares {} points, found {rows_seen} rows", h.points),
        });
    }
    if h.rgb.is_some() {
        PointCloud::with_colors(out_points, out_colors)
    } else {
        Ok(PointCloud::new(out_points))
    }
}

fn finish_header(
    fields: Option<Vec<String>>,
    types: Option<Vec<String>>,
    points: Option<usize>,
) -> Result<Header> {
    let fields = fields.ok_or_else(|| Error::Header("missing FIELDS".into()))?;
    let points = points.ok_or_else(|| Error::Header("missing POINTS".into()))?;
    let names: Vec<&str> = fields.iter().map(String::as_str).collect();
    let rgb = match names.as_slice() {
        ["x", "y", "z"] => None,
        ["x", "y", "z", "rgb"] | ["x", "y", "z", "rgba"] => {
            let ty = types.as_ref().and_then(|t| t.get(3)).map(String::as_str);
            Some(match ty {
                Some("U") | Some("I") => RgbEncoding::Unsigned,
                _ => RgbEncoding::Float,
            })
        }
        _ => {
            return Err(Error::Header(format!(
                "unsupported FIELDS '{}'",
                fields.join(" ")
            )))
        }
    };
    Ok(Header { rgb, points })
}

fn parse_number(s: &str, line: usize) -> Result<f64> {
    if s.eq_ignore_ascii_case("nan") {
        return Ok(f64::NAN);
    }
    s.parse::<f64>().map_err(|_| Error::Parse {
        line,
        message: format!("non-numeric value '{s}'"),
    })
}

fn parse_rgb(s: &str, enc: RgbEncoding, line: usize) -> Result<[u8; 3]> {
    let packed = match enc {
        RgbEncoding::Unsigned => s.parse::<u32>().map_err(|_| Error::Parse {
            line,
            message: format!("non-integer rgb value '{s}'"),
        })?,
        RgbEncoding::Float => (parse_number(s, line)? as f32).to_bits(),
    };
    Ok([(packed >> 16) as u8, (packed >> 8) as u8, packed as u8])
}

/// Writes the cloud as ASCII PCD; coordinates carry six decimals, colors are
/// written as packed unsigned integers.
pub fn write_pcd<W: Write>(w: &mut W, cloud: &PointCloud) -> std::io::Result<()> {
    let m = cloud.len();
    writeln!(w, "# .PCD v0.7 - Point Cloud Data file format")?;
    writeln!(w, "VERSION 0.7")?;
    if cloud.colors().is_some() {
        writeln!(w, "FIELDS x y z rgb")?;
        writeln!(w, "SIZE 4 4 4 4")?;
        writeln!(w, "TYPE F F F U")?;
        writeln!(w, "COUNT 1 1 1 1")?;
    } else {
        writeln!(w, "FIELDS x y z")?;
        writeln!(w, "SIZE 4 4 4")?;
        writeln!(w, "TYPE F F F")?;
        writeln!(w, "COUNT 1 1 1")?;
    }
    writeln!(w, "WIDTH {m}")?;
    writeln!(w, "HEIGHT 1")?;
    writeln!(w, "VIEWPOINT 0 0 0 1 0 0 0")?;
    writeln!(w, "POINTS {m}")?;
    writeln!(w, "DATA ascii")?;
    for (i, p) in cloud.points().iter().enumerate() {
        write!(w, "{} {} {}", fmt_coord(p.x), fmt_coord(p.y), fmt_coord(p.z))?;
        if let Some(colors) = cloud.colors() {
            let [r, g, b] = colors[i];
            write!(w, " {}", (r as u32) << 16 | (g as u32) << 8 | b as u32)?;
        }
        writeln!(w)?;
    }
    Ok(())
}

fn fmt_coord(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    let s = format!("{v:.6}");
    // avoid "-0.000000"
    if s.starts_with('-') && s[1..].bytes().all(|b| b == b'0' || b == b'.') {
        s[1..].to_string()
    } else {
        s
    }
}
