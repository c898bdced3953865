//! Plain-text and binary file formats for [`GraphFunction`].
//!
//! CSV layout:
//!
//! ```text
//! n,center,half_width,spacing,extension
//! 2,0;0,1,0.25,affine:1;-0.5:2
//! value
//! <one sample per line, row-major, last axis fastest>
//! ```
//!
//! Vector fields use `;` as separator. Extension descriptors:
//! `affine:<p1;..;pn>:<c>`, `homogeneous:<trace>`, `degree0:<trace>`,
//! `lipschitz:<M>`, where `<trace>` is `line:<pos>;<neg>` (slopes for `x > 0`
//! and `x < 0`), `circle:<v0;..;v_{m-1}>` (values at angles `2πk/m`) or
//! `sphere:<x/y/z=v;...>`. Floats are written in shortest round-trip form, so
//! a write/read cycle is exact.
//!
//! Binary layout (little endian): the 12-byte magic `FRACMINGRAPH`, `u32`
//! version, `u32` n, `n` × `f64` center, `f64` half-width, `f64` spacing,
//! `u32` descriptor length and the UTF-8 descriptor, `u64` sample count, then
//! the samples as `f64`.

use std::io::{BufRead, Read, Write};
use std::path::Path;

use super::{ConeTrace, Extension, GraphFunction};
use crate::{Error, Result};

pub const MAGIC: &[u8; 12] = b"FRACMINGRAPH";
pub const VERSION: u32 = 1;

fn join(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v}")).collect::<Vec<_>>().join(";")
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|e| Error::Parse(format!("bad number {s:?}: {e}")))
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    if s.trim().is_empty() {
        return Ok(vec![]);
    }
    s.split(';').map(parse_f64).collect()
}

fn trace_descriptor(t: &ConeTrace) -> String {
    match t {
        ConeTrace::Line { pos, neg } => format!("line:{pos};{neg}"),
        ConeTrace::Circle { values } => format!("circle:{}", join(values)),
        ConeTrace::Sphere { points, values } => {
            let items: Vec<String> = points
                .iter()
                .zip(values)
                .map(|(p, v)| {
                    let coords: Vec<String> = p.iter().map(|c| format!("{c}")).collect();
                    format!("{}={v}", coords.join("/"))
                })
                .collect();
            format!("sphere:{}", items.join(";"))
        }
    }
}

fn parse_trace(s: &str) -> Result<ConeTrace> {
    let (kind, body) = s.split_once(':').ok_or_else(|| Error::Parse(format!("bad cone trace {s:?}")))?;
    match kind {
        "line" => {
            let v = parse_list(body)?;
            if v.len() != 2 {
                return Err(Error::Parse("line trace needs exactly two slopes".into()));
            }
            Ok(ConeTrace::line(v[0], v[1]))
        }
        "circle" => Ok(ConeTrace::Circle { values: parse_list(body)? }),
        "sphere" => {
            let mut points = vec![];
            let mut values = vec![];
            for item in body.split(';') {
                let (p, v) = item.split_once('=').ok_or_else(|| Error::Parse(format!("bad sphere sample {item:?}")))?;
                points.push(p.split('/').map(parse_f64).collect::<Result<Vec<_>>>()?);
                values.push(parse_f64(v)?);
            }
            Ok(ConeTrace::Sphere { points, values })
        }
        other => Err(Error::Parse(format!("unknown cone trace kind {other:?}"))),
    }
}

pub fn extension_descriptor(e: &Extension) -> String {
    match e {
        Extension::Affine { slope, offset } => format!("affine:{}:{offset}", join(slope)),
        Extension::Homogeneous(t) => format!("homogeneous:{}", trace_descriptor(t)),
        Extension::DegreeZero(t) => format!("degree0:{}", trace_descriptor(t)),
        Extension::LinearGrowth { m } => format!("lipschitz:{m}"),
    }
}

pub fn parse_extension(s: &str) -> Result<Extension> {
    let s = s.trim();
    let (kind, body) = s.split_once(':').ok_or_else(|| Error::Parse(format!("bad extension descriptor {s:?}")))?;
    match kind {
        "affine" => {
            let (slope, offset) =
                body.rsplit_once(':').ok_or_else(|| Error::Parse("affine descriptor needs slope:offset".into()))?;
            Ok(Extension::Affine { slope: parse_list(slope)?, offset: parse_f64(offset)? })
        }
        "homogeneous" => Ok(Extension::Homogeneous(parse_trace(body)?)),
        "degree0" => Ok(Extension::DegreeZero(parse_trace(body)?)),
        "lipschitz" => Ok(Extension::LinearGrowth { m: parse_f64(body)? }),
        other => Err(Error::Parse(format!("unknown extension kind {other:?}"))),
    }
}

pub fn write_csv(u: &GraphFunction, mut w: impl Write) -> Result<()> {
    writeln!(w, "n,center,half_width,spacing,extension")?;
    writeln!(
        w,
        "{},{},{},{},{}",
        u.dim(),
        join(u.center()),
        u.half_width(),
        u.spacing(),
        extension_descriptor(u.extension())
    )?;
    writeln!(w, "value")?;
    for v in u.samples() {
        writeln!(w, "{v}")?;
    }
    Ok(())
}

pub fn read_csv(r: impl BufRead) -> Result<GraphFunction> {
    let mut lines = r.lines();
    let mut next = |what: &str| -> Result<String> {
        lines.next().ok_or_else(|| Error::Parse(format!("missing {what} line")))?.map_err(Error::from)
    };
    let header = next("header")?;
    if header.trim() != "n,center,half_width,spacing,extension" {
        return Err(Error::Parse(format!("unexpected header {header:?}")));
    }
    let meta = next("metadata")?;
    let fields: Vec<&str> = meta.splitn(5, ',').collect();
    if fields.len() != 5 {
        return Err(Error::Parse("metadata line needs five fields".into()));
    }
    let n: usize = fields[0].trim().parse().map_err(|e| Error::Parse(format!("bad dimension: {e}")))?;
    let center = parse_list(fields[1])?;
    if center.len() != n {
        return Err(Error::Parse(format!("center has {} components, expected {n}", center.len())));
    }
    let half_width = parse_f64(fields[2])?;
    let spacing = parse_f64(fields[3])?;
    let extension = parse_extension(fields[4])?;
    if next("column")?.trim() != "value" {
        return Err(Error::Parse("expected the 'value' column header".into()));
    }
    let mut samples = vec![];
    for line in lines {
        let line = line?;
        if !line.trim().is_empty() {
            samples.push(parse_f64(&line)?);
        }
    }
    GraphFunction::new(center, half_width, spacing, samples, extension)
}

pub fn write_binary(u: &GraphFunction, mut w: impl Write) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(u.dim() as u32).to_le_bytes())?;
    for c in u.center() {
        w.write_all(&c.to_le_bytes())?;
    }
    w.write_all(&u.half_width().to_le_bytes())?;
    w.write_all(&u.spacing().to_le_bytes())?;
    let desc = extension_descriptor(u.extension());
    w.write_all(&(desc.len() as u32).to_le_bytes())?;
    w.write_all(desc.as_bytes())?;
    w.write_all(&(u.len() as u64).to_le_bytes())?;
    for v in u.samples() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_exact<const K: usize>(r: &mut impl Read) -> Result<[u8; K]> {
    let mut buf = [0u8; K];
    r.read_exact(&mut buf).map_err(|e| Error::Parse(format!("truncated binary grid: {e}")))?;
    Ok(buf)
}

pub fn read_binary(mut r: impl Read) -> Result<GraphFunction> {
    let magic: [u8; 12] = read_exact(&mut r)?;
    if &magic != MAGIC {
        return Err(Error::Parse("not a binary graph file (bad magic)".into()));
    }
    let version = u32::from_le_bytes(read_exact(&mut r)?);
    if version != VERSION {
        return Err(Error::Parse(format!("unsupported binary version {version}")));
    }
    let n = u32::from_le_bytes(read_exact(&mut r)?) as usize;
    if n == 0 || n > super::MAX_DIM {
        return Err(Error::Parse(format!("bad dimension {n}")));
    }
    let center = (0..n).map(|_| Ok(f64::from_le_bytes(read_exact(&mut r)?))).collect::<Result<Vec<_>>>()?;
    let half_width = f64::from_le_bytes(read_exact(&mut r)?);
    let spacing = f64::from_le_bytes(read_exact(&mut r)?);
    let len = u32::from_le_bytes(read_exact(&mut r)?) as usize;
    let mut desc = vec![0u8; len];
    r.read_exact(&mut desc).map_err(|e| Error::Parse(format!("truncated descriptor: {e}")))?;
    let desc = String::from_utf8(desc).map_err(|e| Error::Parse(format!("descriptor is not UTF-8: {e}")))?;
    let count = u64::from_le_bytes(read_exact(&mut r)?) as usize;
    let mut samples = Vec::with_capacity(count.min(1 << 26));
    for _ in 0..count {
        samples.push(f64::from_le_bytes(read_exact(&mut r)?));
    }
    GraphFunction::new(center, half_width, spacing, samples, parse_extension(&desc)?)
}

/// Writes CSV for `.csv` paths and the binary format otherwise.
pub fn save(u: &GraphFunction, path: &Path) -> Result<()> {
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    if is_csv(path) {
        write_csv(u, file)
    } else {
        write_binary(u, file)
    }
}

pub fn load(path: &Path) -> Result<GraphFunction> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    let reader = std::io::BufReader::new(file);
    if is_csv(path) {
        read_csv(reader)
    } else {
        read_binary(reader)
    }
}

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> GraphFunction {
        GraphFunction::from_fn(
            vec![0.0, 0.5],
            1.0,
            0.25,
            Extension::Affine { slope: vec![0.1, -1.0 / 3.0], offset: std::f64::consts::PI },
            |x| 0.1 * x[0] - x[1] / 3.0 + std::f64::consts::PI + (x[0] * 7.0).sin() * 1e-3,
        )
        .unwrap()
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let u = fixture();
        let mut buf = vec![];
        write_csv(&u, &mut buf).unwrap();
        assert_eq!(read_csv(buf.as_slice()).unwrap(), u);
    }

    #[test]
    fn binary_round_trip_is_exact() {
        let u = fixture();
        let mut buf = vec![];
        write_binary(&u, &mut buf).unwrap();
        assert_eq!(&buf[..12], MAGIC);
        assert_eq!(read_binary(buf.as_slice()).unwrap(), u);
        assert!(read_binary(&buf[..buf.len() - 3]).is_err());
    }

    #[test]
    fn descriptors_round_trip() {
        for e in [
            Extension::Homogeneous(ConeTrace::line(1.0, -1.0)),
            Extension::DegreeZero(ConeTrace::Circle { values: vec![1.0, 2.0, 0.5] }),
            Extension::LinearGrowth { m: 2.5 },
            Extension::Homogeneous(ConeTrace::Sphere {
                points: vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]],
                values: vec![0.1, 0.2, 0.3],
            }),
        ] {
            assert_eq!(parse_extension(&extension_descriptor(&e)).unwrap(), e);
        }
        assert!(parse_extension("weird:1").is_err());
    }
}
