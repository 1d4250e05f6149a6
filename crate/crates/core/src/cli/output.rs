use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use crate::assembly::DiscreteSpace;
use crate::error::{Error, Result};

/// Fixed CSV header shared by every command.
pub const CSV_HEADER: &str =
    "geometry,j,p,beta,kappa,K,Khat,variant,iterations,l2_error,wall_seconds,seed";

/// One CSV record; absent values print as empty fields.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Row {
    pub geometry: String,
    pub j: usize,
    pub p: usize,
    pub beta: Option<f64>,
    pub kappa: Option<f64>,
    pub k: Option<usize>,
    pub khat: Option<usize>,
    pub variant: String,
    pub iterations: Option<usize>,
    pub l2_error: Option<f64>,
    pub wall_seconds: f64,
    pub seed: Option<u64>,
}

fn opt<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map_or(String::new(), |x| x.to_string())
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl Row {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            quote(&self.geometry),
            self.j,
            self.p,
            opt(&self.beta),
            opt(&self.kappa),
            opt(&self.k),
            opt(&self.khat),
            quote(&self.variant),
            opt(&self.iterations),
            self.l2_error.map_or(String::new(), |e| format!("{e:e}")),
            format!("{:.6}", self.wall_seconds),
            opt(&self.seed),
        )
    }
}

pub fn format_csv(rows: &[Row]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&r.to_csv());
        s.push('\n');
    }
    s
}

/// Legacy ASCII VTK unstructured grid. Every knot span of every patch is
/// split into `2^r × 2^r` quads; the field is sampled at the quad corners.
pub fn format_vtk(space: &DiscreteSpace, coeffs: &[f64], r: u32, title: &str) -> Result<String> {
    let surface = space.surface();
    let per_dir = space.knots().num_spans() << r;
    let np = per_dir + 1;
    let npatch = surface.num_patches();
    let mut s = String::new();
    let title: String = title.chars().filter(|c| *c != '\n').take(255).collect();
    writeln!(s, "# vtk DataFile Version 3.0\n{title}\nASCII\nDATASET UNSTRUCTURED_GRID").unwrap();
    writeln!(s, "POINTS {} double", npatch * np * np).unwrap();
    let mut values = Vec::with_capacity(npatch * np * np);
    for m in 0..npatch {
        for a in 0..np {
            for b in 0..np {
                let (x, y) = (a as f64 / per_dir as f64, b as f64 / per_dir as f64);
                let p = surface.eval_patch(m, x, y)?;
                writeln!(s, "{:?} {:?} {:?}", p[0], p[1], p[2]).unwrap();
                values.push(space.eval(coeffs, m, x, y)?);
            }
        }
    }
    let ncells = npatch * per_dir * per_dir;
    writeln!(s, "CELLS {} {}", ncells, 5 * ncells).unwrap();
    for m in 0..npatch {
        let base = m * np * np;
        for a in 0..per_dir {
            for b in 0..per_dir {
                let i = base + a * np + b;
                writeln!(s, "4 {} {} {} {}", i, i + np, i + np + 1, i + 1).unwrap();
            }
        }
    }
    writeln!(s, "CELL_TYPES {ncells}").unwrap();
    for _ in 0..ncells {
        s.push_str("9\n");
    }
    writeln!(s, "POINT_DATA {}\nSCALARS u double 1\nLOOKUP_TABLE default", values.len()).unwrap();
    for v in values {
        writeln!(s, "{v:?}").unwrap();
    }
    Ok(s)
}

/// Writes through a temporary file in the target directory and renames,
/// so a failure never leaves a partial file behind.
pub fn write_atomic(path: &Path, content: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| Error::Config(format!("output path {} has no file name", path.display())))?
        .to_string_lossy();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    let res = (|| {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(content.as_bytes())?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    })();
    if res.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    Ok(res?)
}
