//! JSON descriptors for bodies and fields, the voxel sidecar format, CSV
//! tables and content hashes.

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::bodies::{Ball, ConvexBody, Ellipsoid, HalfSpace, Polytope, RadialTable};
use crate::error::{Error, Result};
use crate::fields::{RadialProfile, ScalarField, VoxelGrid};
use crate::quadrature::SphereQuadrature;

/// Body descriptor, tagged by `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BodyDescriptor {
    Ball {
        dim: usize,
        radius: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
    },
    /// Either `semi_axes` (axis aligned) or `shape` (the matrix A of
    /// (x-c)^T A (x-c) <= 1).
    Ellipsoid {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        semi_axes: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        shape: Option<Vec<Vec<f64>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
    },
    Box {
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
    Polytope {
        vertices: Vec<Vec<f64>>,
    },
    HPolytope {
        halfspaces: Vec<HalfSpace>,
    },
    RegularPolygon {
        sides: usize,
        radius: f64,
    },
}

/// Field descriptor. A bare body descriptor is also accepted wherever a
/// field is expected and stands for its indicator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldDescriptor {
    Indicator {
        body: BodyDescriptor,
        #[serde(default = "one")]
        height: f64,
    },
    Radial {
        dim: usize,
        knots: Vec<(f64, f64)>,
    },
    /// Values either inline (row-major, last axis fastest) or in a binary
    /// sidecar file relative to the descriptor.
    Voxel {
        lower: Vec<f64>,
        upper: Vec<f64>,
        counts: Vec<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        values: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sidecar: Option<String>,
        #[serde(default)]
        signed: bool,
    },
}

fn one() -> f64 {
    1.0
}

const BODY_KINDS: [&str; 6] = ["ball", "ellipsoid", "box", "polytope", "h_polytope", "regular_polygon"];

fn matrix(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Parse("shape must be a square matrix".into()));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

impl BodyDescriptor {
    pub fn build(&self) -> Result<ConvexBody> {
        Ok(match self {
            BodyDescriptor::Ball { dim, radius, center } => match center {
                Some(c) => {
                    if c.len() != *dim {
                        return Err(Error::Parse("ball center does not match dim".into()));
                    }
                    Ball::new(c.clone(), *radius)?.into()
                }
                None => Ball::centered(*dim, *radius)?.into(),
            },
            BodyDescriptor::Ellipsoid { semi_axes, shape, center } => {
                let e = match (semi_axes, shape) {
                    (Some(a), None) => {
                        let e = Ellipsoid::axis_aligned(a)?;
                        match center {
                            Some(c) => Ellipsoid::new(e.shape().clone(), c.clone())?,
                            None => e,
                        }
                    }
                    (None, Some(m)) => {
                        let a = matrix(m)?;
                        let c = center.clone().unwrap_or_else(|| vec![0.0; a.nrows()]);
                        Ellipsoid::new(a, c)?
                    }
                    _ => {
                        return Err(Error::Parse(
                            "ellipsoid needs exactly one of semi_axes and shape".into(),
                        ))
                    }
                };
                e.into()
            }
            BodyDescriptor::Box { lower, upper } => Polytope::axis_box(lower, upper)?.into(),
            BodyDescriptor::Polytope { vertices } => Polytope::from_vertices(vertices.clone())?.into(),
            BodyDescriptor::HPolytope { halfspaces } => Polytope::from_halfspaces(halfspaces.clone())?.into(),
            BodyDescriptor::RegularPolygon { sides, radius } => Polytope::regular_polygon(*sides, *radius)?.into(),
        })
    }

    /// Descriptor that rebuilds `body`.
    pub fn describe(body: &ConvexBody) -> Self {
        match body {
            ConvexBody::Ball(b) => BodyDescriptor::Ball {
                dim: b.dim(),
                radius: b.radius(),
                center: Some(b.center().to_vec()),
            },
            ConvexBody::Ellipsoid(e) => {
                let a = e.shape();
                BodyDescriptor::Ellipsoid {
                    semi_axes: None,
                    shape: Some((0..a.nrows()).map(|i| a.row(i).iter().copied().collect()).collect()),
                    center: Some(e.center().to_vec()),
                }
            }
            ConvexBody::Polytope(p) => match p.as_axis_box() {
                Some((lo, hi)) => BodyDescriptor::Box {
                    lower: lo.to_vec(),
                    upper: hi.to_vec(),
                },
                None => BodyDescriptor::Polytope {
                    vertices: p.vertices().to_vec(),
                },
            },
        }
    }
}

impl FieldDescriptor {
    /// Build the field; `base` resolves sidecar paths.
    pub fn build(&self, base: Option<&Path>) -> Result<ScalarField> {
        match self {
            FieldDescriptor::Indicator { body, height } => ScalarField::indicator(body.build()?, *height),
            FieldDescriptor::Radial { dim, knots } => Ok(ScalarField::Radial(RadialProfile::new(*dim, knots.clone())?)),
            FieldDescriptor::Voxel {
                lower,
                upper,
                counts,
                values,
                sidecar,
                signed,
            } => {
                let vals = match (values, sidecar) {
                    (Some(v), None) => v.clone(),
                    (None, Some(p)) => {
                        let path = base.map_or_else(|| Path::new(p).to_path_buf(), |b| b.join(p));
                        let g = read_voxel(&path)?;
                        if g.lower() != lower.as_slice() || g.upper() != upper.as_slice() || g.counts() != counts.as_slice() {
                            return Err(Error::Parse(format!(
                                "sidecar {} does not match the descriptor geometry",
                                path.display()
                            )));
                        }
                        g.values().to_vec()
                    }
                    _ => return Err(Error::Parse("voxel field needs exactly one of values and sidecar".into())),
                };
                let g = if *signed {
                    VoxelGrid::new_signed(lower.clone(), upper.clone(), counts.clone(), vals)?
                } else {
                    VoxelGrid::new(lower.clone(), upper.clone(), counts.clone(), vals)?
                };
                Ok(ScalarField::Voxel(g))
            }
        }
    }
}

fn parse_error(what: &str, text: &str, e: serde_json::Error) -> Error {
    let msg = e.to_string();
    if e.line() > 0 {
        return Error::Parse(format!("{what}: {msg}"));
    }
    // tagged content is buffered and loses its position; locate the
    // offending field in the source instead
    let line = msg
        .split('`')
        .nth(1)
        .and_then(|name| text.find(&format!("\"{name}\"")))
        .map(|pos| text[..pos].matches('\n').count() + 1);
    match line {
        Some(l) => Error::Parse(format!("{what}: line {l}: {msg}")),
        None => Error::Parse(format!("{what}: {msg}")),
    }
}

pub fn parse_body(text: &str) -> Result<ConvexBody> {
    let d: BodyDescriptor = serde_json::from_str(text).map_err(|e| parse_error("body descriptor", text, e))?;
    d.build()
}

/// Parse a field descriptor, or a body descriptor standing for its
/// indicator.
pub fn parse_field(text: &str, base: Option<&Path>) -> Result<ScalarField> {
    let v: Value = serde_json::from_str(text).map_err(|e| parse_error("field descriptor", text, e))?;
    let kind = v.get("kind").and_then(Value::as_str).unwrap_or("");
    if BODY_KINDS.contains(&kind) {
        return ScalarField::indicator(parse_body(text)?, 1.0);
    }
    let d: FieldDescriptor = serde_json::from_str(text).map_err(|e| parse_error("field descriptor", text, e))?;
    d.build(base)
}

pub fn load_field(path: &Path) -> Result<ScalarField> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_field(&text, path.parent()).map_err(|e| match e {
        Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn load_body(path: &Path) -> Result<ConvexBody> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_body(&text).map_err(|e| match e {
        Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn voxel_bytes(g: &VoxelGrid) -> Vec<u8> {
    let n = g.dim();
    let mut out = Vec::with_capacity(8 * (1 + 3 * n + g.values().len()));
    out.extend((n as u64).to_le_bytes());
    for x in g.lower().iter().chain(g.upper()) {
        out.extend(x.to_le_bytes());
    }
    for c in g.counts() {
        out.extend((*c as u64).to_le_bytes());
    }
    for v in g.values() {
        out.extend(v.to_le_bytes());
    }
    out
}

/// Binary voxel layout, little endian: u64 n, n f64 lower corner, n f64
/// upper corner, n u64 counts, then the f64 cell values.
pub fn write_voxel(path: &Path, g: &VoxelGrid) -> Result<()> {
    fs::write(path, voxel_bytes(g)).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn read_voxel(path: &Path) -> Result<VoxelGrid> {
    let bytes = fs::read(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let bad = || Error::Parse(format!("{}: truncated voxel file", path.display()));
    if bytes.len() % 8 != 0 || bytes.is_empty() {
        return Err(bad());
    }
    let words: Vec<[u8; 8]> = bytes.chunks_exact(8).map(|c| c.try_into().unwrap()).collect();
    let n = u64::from_le_bytes(words[0]) as usize;
    if !(1..=3).contains(&n) {
        return Err(Error::Parse(format!("{}: voxel dimension {n}", path.display())));
    }
    if words.len() < 1 + 3 * n {
        return Err(bad());
    }
    let float = |w: &[u8; 8]| f64::from_le_bytes(*w);
    let lower: Vec<f64> = words[1..1 + n].iter().map(float).collect();
    let upper: Vec<f64> = words[1 + n..1 + 2 * n].iter().map(float).collect();
    let counts: Vec<usize> = words[1 + 2 * n..1 + 3 * n]
        .iter()
        .map(|w| u64::from_le_bytes(*w) as usize)
        .collect();
    let total = counts.iter().try_fold(1usize, |a, c| a.checked_mul(*c)).ok_or_else(bad)?;
    let rest = &words[1 + 3 * n..];
    if rest.len() != total {
        return Err(Error::Parse(format!(
            "{}: expected {total} cell values, found {}",
            path.display(),
            rest.len()
        )));
    }
    let values = rest.iter().map(float).collect();
    VoxelGrid::new_signed(lower, upper, counts, values)
}

/// JSON summary of a field; voxel payloads are replaced by their hash.
pub fn describe_field(f: &ScalarField) -> Value {
    match f {
        ScalarField::Indicator { body, height } => json!({
            "kind": "indicator",
            "body": BodyDescriptor::describe(body),
            "height": height,
        }),
        ScalarField::Radial(p) => json!({
            "kind": "radial",
            "dim": p.dim(),
            "knots": p.knots(),
        }),
        ScalarField::Voxel(g) => json!({
            "kind": "voxel",
            "lower": g.lower(),
            "upper": g.upper(),
            "counts": g.counts(),
            "payload_sha256": sha256_hex(&voxel_bytes(g)),
        }),
    }
}

pub fn field_hash(f: &ScalarField) -> String {
    sha256_hex(describe_field(f).to_string().as_bytes())
}

/// Float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// CSV of a radial table: node coordinates, weight and radius.
pub fn radial_table_csv(t: &RadialTable) -> String {
    node_table_csv(t.quadrature(), &[("radius", t.radii())])
}

/// CSV with one row per sphere node: index, coordinates, weight, then the
/// given columns.
pub fn node_table_csv(q: &SphereQuadrature, columns: &[(&str, &[f64])]) -> String {
    let axes = ["x", "y", "z"];
    let mut out = String::from("index,");
    for a in axes.iter().take(q.dim()) {
        out.push_str(a);
        out.push(',');
    }
    out.push_str("weight");
    for (name, _) in columns {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for (i, u) in q.nodes().iter().enumerate() {
        out.push_str(&i.to_string());
        for c in u.coords() {
            out.push(',');
            out.push_str(&fmt_f64(*c));
        }
        out.push(',');
        out.push_str(&fmt_f64(q.weights()[i]));
        for (_, v) in columns {
            out.push(',');
            out.push_str(&fmt_f64(v[i]));
        }
        out.push('\n');
    }
    out
}

/// Write a file, creating parent directories.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    }
    let mut f = fs::File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    f.write_all(text.as_bytes())
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::sphere_grid;

    #[test]
    fn body_descriptors_round_trip() {
        let texts = [
            r#"{"kind": "ball", "dim": 2, "radius": 1.5}"#,
            r#"{"kind": "ellipsoid", "semi_axes": [2.0, 0.5]}"#,
            r#"{"kind": "ellipsoid", "shape": [[0.25, 0.0], [0.0, 4.0]], "center": [1.0, 1.0]}"#,
            r#"{"kind": "box", "lower": [0, 0], "upper": [1, 1]}"#,
            r#"{"kind": "polytope", "vertices": [[0, 0], [1, 0], [0, 1]]}"#,
            r#"{"kind": "regular_polygon", "sides": 6, "radius": 1}"#,
        ];
        for t in texts {
            let b = parse_body(t).unwrap();
            let again = BodyDescriptor::describe(&b).build().unwrap();
            assert!((b.volume() - again.volume()).abs() < 1e-12 * b.volume());
        }
    }

    #[test]
    fn parse_errors_carry_context() {
        let e = parse_body("{\"kind\": \"ball\",\n \"dim\": 2, \"radus\": 1}").unwrap_err();
        match e {
            Error::Parse(m) => assert!(m.contains("line 2") && m.contains("radus"), "{m}"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_body("{\"kind\": \"torus\"}"), Err(Error::Parse(_))));
        assert!(parse_body(r#"{"kind": "ellipsoid"}"#).is_err());
    }

    #[test]
    fn fields_and_sidecar() {
        let f = parse_field(r#"{"kind": "box", "lower": [0], "upper": [1]}"#, None).unwrap();
        assert!(matches!(f, ScalarField::Indicator { .. }));
        let f = parse_field(r#"{"kind": "radial", "dim": 2, "knots": [[0.5, 2.0], [1.0, 1.0]]}"#, None).unwrap();
        assert_eq!(f.max_value(), 2.0);
        let dir = std::env::temp_dir().join(format!("fracgeom-io-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let g = VoxelGrid::from_fn(vec![0.0, 0.0], vec![1.0, 2.0], vec![3, 4], |x| x[0] + x[1]).unwrap();
        write_voxel(&dir.join("g.bin"), &g).unwrap();
        let desc = r#"{"kind": "voxel", "lower": [0, 0], "upper": [1, 2], "counts": [3, 4], "sidecar": "g.bin"}"#;
        fs::write(dir.join("g.json"), desc).unwrap();
        let back = load_field(&dir.join("g.json")).unwrap();
        match back {
            ScalarField::Voxel(h) => assert_eq!(h.values(), g.values()),
            _ => panic!(),
        }
        fs::write(dir.join("short.bin"), [1u8; 12]).unwrap();
        assert!(read_voxel(&dir.join("short.bin")).is_err());
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn csv_has_header_and_rows() {
        let q = sphere_grid(2, 8).unwrap();
        let t = RadialTable::new(&q, vec![1.0; 8], true).unwrap();
        let csv = radial_table_csv(&t);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "index,x,y,weight,radius");
        assert_eq!(lines.len(), 9);
        assert!(lines[1].ends_with("1.0000000000000000e0"));
    }

    #[test]
    fn hashes_are_stable() {
        let a = parse_field(r#"{"kind": "ball", "dim": 2, "radius": 1}"#, None).unwrap();
        let b = parse_field(r#"{"kind": "indicator", "body": {"kind": "ball", "dim": 2, "radius": 1.0}}"#, None).unwrap();
        assert_eq!(field_hash(&a), field_hash(&b));
        assert_eq!(sha256_hex(b"abc").len(), 64);
    }
}
