use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ScenePoint;

#[derive(Debug, Clone, PartialEq)]
enum ObjLine {
    Vertex {
        index: usize,
        original: ScenePoint,
        raw: String,
        /// Tokens after x y z (w or vertex colours), re-emitted verbatim.
        extra: String,
    },
    Other(String),
}

/// Triangle mesh with enough of its OBJ source retained to write it back
/// unchanged apart from vertex positions.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshModel {
    vertices: Vec<ScenePoint>,
    faces: Vec<[usize; 3]>,
    provenance: Option<String>,
    lines: Vec<ObjLine>,
    normal_count: usize,
}

/// Summary written next to transformed meshes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshReport {
    pub provenance: Option<String>,
    pub vertex_count: usize,
    pub face_count: usize,
    pub normal_count: usize,
    /// Normals are passed through untouched, so they no longer match the
    /// moved surface whenever any vertex moved.
    pub stale_normals: bool,
    pub moved_vertices: usize,
}

impl MeshModel {
    pub fn new(vertices: Vec<ScenePoint>, faces: Vec<[usize; 3]>) -> Result<Self> {
        let mesh = Self {
            vertices,
            faces,
            provenance: None,
            lines: Vec::new(),
            normal_count: 0,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    fn validate(&self) -> Result<()> {
        if self.vertices.is_empty() {
            return Err(Error::invalid("mesh", "needs at least one vertex"));
        }
        let n = self.vertices.len();
        if let Some(f) = self.faces.iter().find(|f| f.iter().any(|&i| i >= n)) {
            return Err(Error::invalid(
                "mesh",
                format!("face {f:?} references a vertex beyond {n}"),
            ));
        }
        Ok(())
    }

    pub fn vertices(&self) -> &[ScenePoint] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn provenance(&self) -> Option<&str> {
        self.provenance.as_deref()
    }

    pub fn normal_count(&self) -> usize {
        self.normal_count
    }

    pub(crate) fn with_vertices(&self, vertices: Vec<ScenePoint>) -> Self {
        debug_assert_eq!(vertices.len(), self.vertices.len());
        Self {
            vertices,
            ..self.clone()
        }
    }

    /// Report for `self` as a transformed version of `original`.
    pub fn report_against(&self, original: &MeshModel) -> MeshReport {
        let moved = self
            .vertices
            .iter()
            .zip(&original.vertices)
            .filter(|(a, b)| a != b)
            .count();
        MeshReport {
            provenance: original.provenance.clone(),
            vertex_count: self.vertices.len(),
            face_count: self.faces.len(),
            normal_count: self.normal_count,
            stale_normals: self.normal_count > 0 && moved > 0,
            moved_vertices: moved,
        }
    }

    /// Parses ASCII OBJ. Polygons are fan-triangulated into `faces`;
    /// everything that is not a `v` line is kept verbatim for writing.
    pub fn parse_obj(text: &str, source_name: &str) -> Result<Self> {
        let mut vertices = Vec::new();
        let mut faces = Vec::new();
        let mut lines = Vec::new();
        let mut normal_count = 0;
        let parse_err = |line: usize, message: String| Error::Parse {
            source_name: source_name.to_string(),
            line,
            message,
        };

        for (lineno, raw) in text.lines().enumerate() {
            let lineno = lineno + 1;
            let mut tokens = raw.split_whitespace();
            match tokens.next() {
                Some("v") => {
                    let mut xyz = [0.0; 3];
                    for c in &mut xyz {
                        let tok = tokens
                            .next()
                            .ok_or_else(|| parse_err(lineno, "vertex needs x y z".into()))?;
                        *c = tok
                            .parse()
                            .map_err(|_| parse_err(lineno, format!("bad coordinate {tok:?}")))?;
                    }
                    let extra: String = tokens.fold(String::new(), |mut s, t| {
                        let _ = write!(s, " {t}");
                        s
                    });
                    let original = ScenePoint::from(xyz);
                    lines.push(ObjLine::Vertex {
                        index: vertices.len(),
                        original,
                        raw: raw.to_string(),
                        extra,
                    });
                    vertices.push(original);
                }
                Some("f") => {
                    let idx = tokens
                        .map(|t| {
                            let first = t.split('/').next().unwrap_or("");
                            let i: i64 = first
                                .parse()
                                .map_err(|_| parse_err(lineno, format!("bad face index {t:?}")))?;
                            let n = vertices.len() as i64;
                            let resolved = if i < 0 { n + i } else { i - 1 };
                            if i == 0 || resolved < 0 || resolved >= n {
                                return Err(parse_err(
                                    lineno,
                                    format!("face index {i} out of range (have {n} vertices)"),
                                ));
                            }
                            Ok(resolved as usize)
                        })
                        .collect::<Result<Vec<_>>>()?;
                    if idx.len() < 3 {
                        return Err(parse_err(lineno, "face needs at least 3 vertices".into()));
                    }
                    for k in 1..idx.len() - 1 {
                        faces.push([idx[0], idx[k], idx[k + 1]]);
                    }
                    lines.push(ObjLine::Other(raw.to_string()));
                }
                Some("vn") => {
                    normal_count += 1;
                    lines.push(ObjLine::Other(raw.to_string()));
                }
                _ => lines.push(ObjLine::Other(raw.to_string())),
            }
        }

        let mesh = Self {
            vertices,
            faces,
            provenance: Some(source_name.to_string()),
            lines,
            normal_count,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn read_obj(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse_obj(&text, &path.display().to_string())
    }

    /// Serializes to OBJ. Unmoved vertices keep their original text.
    pub fn to_obj_string(&self) -> String {
        let mut out = String::new();
        if self.lines.is_empty() {
            for v in &self.vertices {
                let _ = writeln!(out, "v {} {} {}", v.x, v.y, v.z);
            }
            for f in &self.faces {
                let _ = writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
            }
            return out;
        }
        for line in &self.lines {
            match line {
                ObjLine::Vertex {
                    index,
                    original,
                    raw,
                    extra,
                } => {
                    let v = self.vertices[*index];
                    if same_bits(&v, original) {
                        out.push_str(raw);
                    } else {
                        let _ = write!(out, "v {} {} {}{}", v.x, v.y, v.z, extra);
                    }
                }
                ObjLine::Other(raw) => out.push_str(raw),
            }
            out.push('\n');
        }
        out
    }

    pub fn write_obj(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_obj_string())?;
        Ok(())
    }
}

fn same_bits(a: &ScenePoint, b: &ScenePoint) -> bool {
    a.x.to_bits() == b.x.to_bits()
        && a.y.to_bits() == b.y.to_bits()
        && a.z.to_bits() == b.z.to_bits()
}

/// Reads a `x,y,z` CSV point list (metres).
pub fn read_points_csv<R: Read>(input: R, source_name: &str) -> Result<Vec<ScenePoint>> {
    let mut rdr = csv::Reader::from_reader(input);
    let mut points = Vec::new();
    for (i, rec) in rdr.deserialize::<ScenePoint>().enumerate() {
        let p = rec.map_err(|e| Error::Parse {
            source_name: source_name.to_string(),
            line: e.position().map_or(i + 2, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        points.push(p);
    }
    Ok(points)
}

pub fn write_points_csv<W: Write>(points: &[ScenePoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for p in points {
        w.serialize(p).map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correction::{transform_mesh, DepthRemap};
    use crate::geometry::EyeGeometry;
    use crate::perception::PerturbationParams;
    use crate::pose::RigidTransform;

    const QUAD: &str = "# quad\no quad\nv -0.1 -0.1 0.5\nv 0.1 -0.1 0.5\nv 0.1 0.1 0.5 1.0\nv -0.1 0.1 0.5\nvn 0 0 -1\nf 1//1 2//1 3//1 4//1\n";

    #[test]
    fn parse_quad() {
        let m = MeshModel::parse_obj(QUAD, "quad.obj").unwrap();
        assert_eq!(m.vertices().len(), 4);
        assert_eq!(m.faces(), &[[0, 1, 2], [0, 2, 3]]);
        assert_eq!(m.normal_count(), 1);
        assert_eq!(m.provenance(), Some("quad.obj"));
        assert_eq!(m.to_obj_string(), QUAD);
    }

    #[test]
    fn negative_indices_and_errors() {
        let m = MeshModel::parse_obj("v 0 0 1\nv 1 0 1\nv 0 1 1\nf -3 -2 -1\n", "t").unwrap();
        assert_eq!(m.faces(), &[[0, 1, 2]]);
        let e = MeshModel::parse_obj("v 0 0 1\nf 1 2 3\n", "bad.obj").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }), "{e}");
        let e = MeshModel::parse_obj("v 0 zero 1\n", "bad.obj").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 1, .. }));
        assert!(MeshModel::parse_obj("# empty\n", "e").is_err());
        assert!(MeshModel::new(vec![ScenePoint::on_axis(1.0)], vec![[0, 0, 1]]).is_err());
    }

    #[test]
    fn zero_offset_is_bitwise_identity() {
        let m = MeshModel::parse_obj(QUAD, "quad.obj").unwrap();
        let e = EyeGeometry::new(0.064).unwrap();
        let out = transform_mesh(&m, &e, &PerturbationParams::zero()).unwrap();
        assert_eq!(out.to_obj_string(), QUAD);
        let report = out.report_against(&m);
        assert_eq!(report.moved_vertices, 0);
        assert!(!report.stale_normals);
    }

    #[test]
    fn quad_vertices_follow_pointwise_transform() {
        let m = MeshModel::parse_obj(QUAD, "quad.obj").unwrap();
        let e = EyeGeometry::new(0.064).unwrap();
        let p = PerturbationParams::from_degrees(0.22).unwrap();
        let out = transform_mesh(&m, &e, &p).unwrap();
        let remap = DepthRemap::new(e, p);
        // all four corners share the same cyclopean distance, so the same z̃
        let z0 = out.vertices()[0].z;
        for (a, b) in out.vertices().iter().zip(m.vertices()) {
            assert_eq!(*a, remap.transform_point(b).unwrap());
            assert_eq!(a.z, z0);
            assert!(a.z > b.z);
        }
        // the on-axis remap of 0.5 differs from the off-axis corner depth
        assert!(remap.remap_depth(0.5).unwrap() != z0);
        assert_eq!(out.faces(), m.faces());
        let text = out.to_obj_string();
        assert!(text.contains("vn 0 0 -1"));
        assert!(text.lines().nth(4).unwrap().ends_with(" 1.0"));
        assert!(out.report_against(&m).stale_normals);
    }

    #[test]
    fn view_transform_round_trip() {
        let m = MeshModel::parse_obj(QUAD, "quad.obj").unwrap();
        let e = EyeGeometry::new(0.064).unwrap();
        let p = PerturbationParams::from_degrees(0.22).unwrap();
        let shift = RigidTransform {
            translation: [0.0, 0.0, -1.0],
            ..RigidTransform::identity()
        };
        // world-space mesh 1 m further out; view space puts it back at 0.5 m
        let world = MeshModel::new(
            m.vertices()
                .iter()
                .map(|v| ScenePoint::new(v.x, v.y, v.z + 1.0))
                .collect(),
            m.faces().to_vec(),
        )
        .unwrap();
        let out = DepthRemap::new(e, p)
            .transform_mesh(&world, &shift)
            .unwrap();
        let direct = transform_mesh(&m, &e, &p).unwrap();
        for (a, b) in out.vertices().iter().zip(direct.vertices()) {
            assert!((a.z - 1.0 - b.z).abs() < 1e-12);
        }
    }

    #[test]
    fn failing_vertex_is_identified() {
        let m = MeshModel::new(
            vec![ScenePoint::on_axis(0.5), ScenePoint::new(0.0, 0.0, -0.2)],
            vec![],
        )
        .unwrap();
        let e = EyeGeometry::new(0.064).unwrap();
        let err =
            transform_mesh(&m, &e, &PerturbationParams::from_degrees(0.22).unwrap()).unwrap_err();
        assert!(matches!(err, Error::Vertex { index: 1, .. }), "{err}");
    }

    #[test]
    fn points_csv() {
        let pts = read_points_csv("x,y,z\n0,0,0.5\n0.1,-0.05,0.7\n".as_bytes(), "p.csv").unwrap();
        assert_eq!(pts[1], ScenePoint::new(0.1, -0.05, 0.7));
        let mut buf = Vec::new();
        write_points_csv(&pts, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "x,y,z\n0.0,0.0,0.5\n0.1,-0.05,0.7\n"
        );
        let e = read_points_csv("x,y,z\n0,0,0.5\n0,zz,1\n".as_bytes(), "p.csv").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }), "{e}");
    }
}
