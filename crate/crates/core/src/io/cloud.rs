use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::scaffold::PointCloud;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CloudFormat {
    PcdAscii,
    Ply,
    Xyz,
}

impl CloudFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .unwrap_or_default();
        match ext.as_str() {
            "pcd" => Ok(CloudFormat::PcdAscii),
            "ply" => Ok(CloudFormat::Ply),
            "xyz" | "txt" => Ok(CloudFormat::Xyz),
            _ => Err(Error::UnsupportedFormat(format!(
                "cannot infer a point-cloud format from {}",
                path.display()
            ))),
        }
    }
}

impl FromStr for CloudFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pcd" | "pcd-ascii" | "pcd_ascii" => Ok(CloudFormat::PcdAscii),
            "ply" => Ok(CloudFormat::Ply),
            "xyz" => Ok(CloudFormat::Xyz),
            other => Err(Error::UnsupportedFormat(format!("unknown cloud format {other:?}"))),
        }
    }
}

/// A parsed cloud plus how many rows were dropped for non-finite values.
#[derive(Debug, Clone, PartialEq)]
pub struct CloudLoad {
    pub cloud: PointCloud,
    pub dropped: usize,
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn number<T: FromStr>(tok: &str, line: usize) -> Result<T> {
    tok.parse()
        .map_err(|_| parse_err(line, format!("cannot parse {tok:?} as a number")))
}

/// Collects rows, dropping any whose coordinates are not all finite.
#[derive(Default)]
struct Collector {
    points: Vec<Vec3>,
    colors: Vec<[u8; 3]>,
    has_color: bool,
    dropped: usize,
}

impl Collector {
    fn push(&mut self, p: Vec3, color: Option<[u8; 3]>) {
        if p.iter().all(|c| c.is_finite()) {
            self.points.push(p);
            self.colors.push(color.unwrap_or([0, 0, 0]));
        } else {
            self.dropped += 1;
        }
    }

    fn finish(self) -> CloudLoad {
        CloudLoad {
            cloud: PointCloud {
                points: self.points,
                colors: self.has_color.then_some(self.colors),
                name: None,
            },
            dropped: self.dropped,
        }
    }
}

/// Whitespace-separated `x y z` rows, optionally followed by `r g b`
/// integers. Blank lines and `#` comments are skipped.
pub fn parse_xyz(text: &str) -> Result<CloudLoad> {
    let mut c = Collector::default();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let s = raw.trim();
        if s.is_empty() || s.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = s.split(|ch: char| ch.is_whitespace() || ch == ',').filter(|t| !t.is_empty()).collect();
        if toks.len() < 3 {
            return Err(parse_err(line, format!("expected 3 coordinates, found {}", toks.len())));
        }
        let p = Vec3::new(number(toks[0], line)?, number(toks[1], line)?, number(toks[2], line)?);
        let color = if toks.len() >= 6 {
            c.has_color = true;
            Some([number(toks[3], line)?, number(toks[4], line)?, number(toks[5], line)?])
        } else {
            None
        };
        c.push(p, color);
    }
    Ok(c.finish())
}

/// ASCII PCD. Binary variants are rejected.
pub fn parse_pcd(text: &str) -> Result<CloudLoad> {
    let mut fields: Vec<String> = Vec::new();
    let mut counts: Vec<usize> = Vec::new();
    let mut declared: Option<usize> = None;
    let mut lines = text.lines().enumerate();
    let mut data_line = None;
    for (i, raw) in lines.by_ref() {
        let line = i + 1;
        let s = raw.trim();
        if s.is_empty() || s.starts_with('#') {
            continue;
        }
        let mut toks = s.split_whitespace();
        let key = toks.next().unwrap_or_default().to_ascii_uppercase();
        let rest: Vec<&str> = toks.collect();
        match key.as_str() {
            "FIELDS" => fields = rest.iter().map(|t| t.to_ascii_lowercase()).collect(),
            "COUNT" => counts = rest.iter().map(|t| number(t, line)).collect::<Result<_>>()?,
            "POINTS" => declared = Some(number(rest.first().copied().unwrap_or(""), line)?),
            "DATA" => {
                match rest.first().map(|t| t.to_ascii_lowercase()).as_deref() {
                    Some("ascii") => {}
                    Some(other) => {
                        return Err(Error::UnsupportedFormat(format!(
                            "PCD DATA {other} is not supported; convert to ascii"
                        )))
                    }
                    None => return Err(parse_err(line, "DATA needs a storage type")),
                }
                data_line = Some(line);
                break;
            }
            "VERSION" | "SIZE" | "TYPE" | "WIDTH" | "HEIGHT" | "VIEWPOINT" => {}
            other => return Err(parse_err(line, format!("unknown PCD header key {other:?}"))),
        }
    }
    let header_end = text.lines().count();
    let Some(_) = data_line else {
        return Err(parse_err(header_end, "PCD header ended before DATA"));
    };
    if counts.is_empty() {
        counts = vec![1; fields.len()];
    }
    if counts.len() != fields.len() {
        return Err(parse_err(header_end, "COUNT and FIELDS lengths differ"));
    }
    let column = |name: &str| {
        let k = fields.iter().position(|f| f == name)?;
        Some(counts[..k].iter().sum::<usize>())
    };
    let (Some(cx), Some(cy), Some(cz)) = (column("x"), column("y"), column("z")) else {
        return Err(parse_err(1, "PCD FIELDS must include x, y and z"));
    };
    let crgb = column("rgb").or_else(|| column("rgba"));
    let width: usize = counts.iter().sum();
    let mut c = Collector {
        has_color: crgb.is_some(),
        ..Collector::default()
    };
    let mut rows = 0;
    let mut last = 0;
    for (i, raw) in lines {
        let line = i + 1;
        last = line;
        let s = raw.trim();
        if s.is_empty() {
            continue;
        }
        let toks: Vec<&str> = s.split_whitespace().collect();
        if toks.len() != width {
            return Err(parse_err(line, format!("expected {width} values, found {}", toks.len())));
        }
        let p = Vec3::new(number(toks[cx], line)?, number(toks[cy], line)?, number(toks[cz], line)?);
        let color = match crgb {
            Some(k) => {
                // packed integer, or the same bits stored as a float
                let bits = toks[k]
                    .parse::<u32>()
                    .or_else(|_| toks[k].parse::<f32>().map(f32::to_bits))
                    .map_err(|_| parse_err(line, "bad rgb value"))?;
                Some([(bits >> 16) as u8, (bits >> 8) as u8, bits as u8])
            }
            None => None,
        };
        c.push(p, color);
        rows += 1;
    }
    if let Some(n) = declared {
        if rows != n {
            return Err(parse_err(last.max(1), format!("POINTS declares {n} rows, found {rows}")));
        }
    }
    Ok(c.finish())
}

/// Parsed ASCII PLY: vertex positions, optional colors, polygon faces.
#[derive(Debug, Clone, Default, PartialEq)]
pub(crate) struct PlyData {
    pub vertices: Vec<Vec3>,
    pub colors: Option<Vec<[u8; 3]>>,
    pub faces: Vec<Vec<u32>>,
}

struct PlyElement {
    name: String,
    count: usize,
    /// Property names; list properties are recorded as `None`.
    props: Vec<Option<String>>,
}

pub(crate) fn parse_ply_data(text: &str) -> Result<PlyData> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, l)) if l.trim() == "ply" => {}
        _ => return Err(parse_err(1, "missing ply magic")),
    }
    let mut elements: Vec<PlyElement> = Vec::new();
    let mut ended = false;
    let mut line_no = 1;
    for (i, raw) in lines.by_ref() {
        line_no = i + 1;
        let toks: Vec<&str> = raw.split_whitespace().collect();
        match toks.as_slice() {
            [] => {}
            ["format", "ascii", ..] => {}
            ["format", other, ..] => {
                return Err(Error::UnsupportedFormat(format!("PLY format {other} is not supported; use ascii")))
            }
            ["comment", ..] | ["obj_info", ..] => {}
            ["element", name, count] => elements.push(PlyElement {
                name: name.to_string(),
                count: number(count, line_no)?,
                props: Vec::new(),
            }),
            ["property", "list", _, _, _] => elements
                .last_mut()
                .ok_or_else(|| parse_err(line_no, "property before element"))?
                .props
                .push(None),
            ["property", _, name] => elements
                .last_mut()
                .ok_or_else(|| parse_err(line_no, "property before element"))?
                .props
                .push(Some(name.to_string())),
            ["end_header"] => {
                ended = true;
                break;
            }
            _ => return Err(parse_err(line_no, format!("unexpected PLY header line {raw:?}"))),
        }
    }
    if !ended {
        return Err(parse_err(line_no, "PLY header ended before end_header"));
    }
    let mut body = lines.filter(|(_, l)| !l.trim().is_empty());
    let mut out = PlyData::default();
    for el in &elements {
        let find = |n: &str| el.props.iter().position(|p| p.as_deref() == Some(n));
        for _ in 0..el.count {
            let (i, raw) = body
                .next()
                .ok_or_else(|| parse_err(line_no, format!("PLY body ended inside element {}", el.name)))?;
            let line = i + 1;
            line_no = line;
            let toks: Vec<&str> = raw.split_whitespace().collect();
            match el.name.as_str() {
                "vertex" => {
                    let (Some(x), Some(y), Some(z)) = (find("x"), find("y"), find("z")) else {
                        return Err(parse_err(line, "vertex element lacks x, y or z"));
                    };
                    if el.props.iter().any(Option::is_none) || toks.len() != el.props.len() {
                        return Err(parse_err(line, format!("expected {} vertex values", el.props.len())));
                    }
                    out.vertices
                        .push(Vec3::new(number(toks[x], line)?, number(toks[y], line)?, number(toks[z], line)?));
                    if let (Some(r), Some(g), Some(b)) = (find("red"), find("green"), find("blue")) {
                        out.colors.get_or_insert_with(Vec::new).push([
                            number(toks[r], line)?,
                            number(toks[g], line)?,
                            number(toks[b], line)?,
                        ]);
                    }
                }
                "face" => {
                    let n: usize = number(toks.first().copied().unwrap_or(""), line)?;
                    if toks.len() < n + 1 || n < 3 {
                        return Err(parse_err(line, "malformed face"));
                    }
                    out.faces
                        .push(toks[1..=n].iter().map(|t| number(t, line)).collect::<Result<_>>()?);
                }
                _ => {}
            }
        }
    }
    Ok(out)
}

/// ASCII PLY vertices as a cloud; faces, if any, are ignored.
pub fn parse_ply_cloud(text: &str) -> Result<CloudLoad> {
    let data = parse_ply_data(text)?;
    let has_color = data.colors.is_some();
    let mut c = Collector {
        has_color,
        ..Collector::default()
    };
    for (i, p) in data.vertices.iter().enumerate() {
        c.push(*p, data.colors.as_ref().map(|cs| cs[i]));
    }
    Ok(c.finish())
}

pub fn parse_cloud(text: &str, format: CloudFormat) -> Result<CloudLoad> {
    match format {
        CloudFormat::PcdAscii => parse_pcd(text),
        CloudFormat::Ply => parse_ply_cloud(text),
        CloudFormat::Xyz => parse_xyz(text),
    }
}

/// Reads a cloud file. The format is taken from the extension unless given;
/// the cloud is named after the file stem.
pub fn load_cloud(path: &Path, format: Option<CloudFormat>) -> Result<CloudLoad> {
    let format = match format {
        Some(f) => f,
        None => CloudFormat::from_path(path)?,
    };
    let bytes = std::fs::read(path)?;
    let text = String::from_utf8(bytes)
        .map_err(|_| Error::UnsupportedFormat(format!("{} is not a text file", path.display())))?;
    let mut load = parse_cloud(&text, format)?;
    load.cloud.name = path.file_stem().and_then(|s| s.to_str()).map(str::to_owned);
    Ok(load)
}

/// `x y z` rows (plus `r g b` when the cloud has colors), shortest
/// round-trip decimal form.
pub fn write_xyz(cloud: &PointCloud) -> String {
    let mut s = String::new();
    for (i, p) in cloud.points.iter().enumerate() {
        let _ = write!(s, "{:?} {:?} {:?}", p.x, p.y, p.z);
        if let Some(c) = cloud.colors.as_ref().and_then(|c| c.get(i)) {
            let _ = write!(s, " {} {} {}", c[0], c[1], c[2]);
        }
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const PCD_HEAD: &str = "# .PCD v0.7\nVERSION 0.7\nFIELDS x y z\nSIZE 4 4 4\nTYPE F F F\nCOUNT 1 1 1\nWIDTH 10\nHEIGHT 1\nVIEWPOINT 0 0 0 1 0 0 0\nPOINTS 10\nDATA ascii\n";

    #[test]
    fn xyz_three_lines() {
        let l = parse_xyz("0 0 0\n1 2 3\n# note\n\n4.5,5,6\n").unwrap();
        assert_eq!(l.cloud.len(), 3);
        assert_eq!(l.cloud.points[2], Vec3::new(4.5, 5.0, 6.0));
        assert_eq!(l.dropped, 0);
        assert!(l.cloud.colors.is_none());
        let e = parse_xyz("1 2\n").unwrap_err();
        assert_eq!(e, Error::Parse { line: 1, message: "expected 3 coordinates, found 2".into() });
    }

    #[test]
    fn pcd_drops_nan_rows() {
        let mut text = PCD_HEAD.to_string();
        for i in 0..10 {
            if i == 3 || i == 7 {
                text.push_str("nan nan nan\n");
            } else {
                text.push_str(&format!("{i} 0.5 -1\n"));
            }
        }
        let l = parse_pcd(&text).unwrap();
        assert_eq!((l.cloud.len(), l.dropped), (8, 2));
        assert_eq!(l.cloud.points[3], Vec3::new(4.0, 0.5, -1.0));
    }

    #[test]
    fn pcd_errors() {
        let truncated = "VERSION 0.7\nFIELDS x y z\nPOINTS 3\n";
        assert_eq!(parse_pcd(truncated).unwrap_err().kind(), "ParseError");
        let binary = PCD_HEAD.replace("DATA ascii", "DATA binary");
        assert_eq!(parse_pcd(&binary).unwrap_err().kind(), "UnsupportedFormat");
        let short = format!("{PCD_HEAD}1 2 3\n");
        assert_eq!(parse_pcd(&short).unwrap_err().kind(), "ParseError");
    }

    #[test]
    fn pcd_packed_rgb() {
        let packed = f32::from_bits(0x00FF_8001);
        let text = format!(
            "FIELDS x y z rgb\nCOUNT 1 1 1 1\nPOINTS 1\nDATA ascii\n1 2 3 {packed:e}\n"
        );
        let l = parse_pcd(&text).unwrap();
        assert_eq!(l.cloud.colors.unwrap()[0], [255, 128, 1]);
    }

    #[test]
    fn ply_cloud_with_colors() {
        let text = "ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\nproperty float y\nproperty float z\nproperty uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n0 0 0 255 0 0\n1 1 NaN 0 0 255\n";
        let l = parse_ply_cloud(text).unwrap();
        assert_eq!((l.cloud.len(), l.dropped), (1, 1));
        assert_eq!(l.cloud.colors.unwrap(), vec![[255, 0, 0]]);
        let bin = text.replace("ascii", "binary_little_endian");
        assert_eq!(parse_ply_cloud(&bin).unwrap_err().kind(), "UnsupportedFormat");
        assert_eq!(parse_ply_cloud("ply\nformat ascii 1.0\n").unwrap_err().kind(), "ParseError");
    }

    #[test]
    fn xyz_round_trip_is_exact() {
        let cloud = PointCloud::new(vec![Vec3::new(0.1, 1.0 / 3.0, -2e-17), Vec3::new(1e300, -0.0, 7.25)]);
        let back = parse_xyz(&write_xyz(&cloud)).unwrap().cloud;
        assert_eq!(back.points, cloud.points);
    }

    #[test]
    fn file_loading_names_cloud() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("mug.xyz");
        std::fs::write(&p, "0 0 0\n1 1 1\n").unwrap();
        let l = load_cloud(&p, None).unwrap();
        assert_eq!(l.cloud.name.as_deref(), Some("mug"));
        assert_eq!(load_cloud(&dir.path().join("x.las"), None).unwrap_err().kind(), "UnsupportedFormat");
        assert_eq!(load_cloud(&dir.path().join("none.xyz"), None).unwrap_err().kind(), "IoError");
    }
}
