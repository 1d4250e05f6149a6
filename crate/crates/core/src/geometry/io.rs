//! Plain-text multipatch files.
//!
//! ```text
//! multipatch <n>
//! patch <p1> <p2> <k1> <k2>
//! <k1 + p1 + 1 knots>
//! <k2 + p2 + 1 knots>
//! <k1 * k2 lines "x y z w", second index fastest>
//! ```
//!
//! Blank lines and lines starting with `#` are ignored.

use std::fmt::Write as _;
use std::path::Path;

use super::patch::{NurbsPatch, Patch};
use super::surface::MultipatchSurface;
use crate::error::{Error, Result};
use crate::splines::KnotVector;

struct Lines<'a> {
    inner: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
}

impl<'a> Lines<'a> {
    fn new(s: &'a str) -> Self {
        Self {
            inner: s.lines().enumerate().peekable(),
        }
    }

    fn next_content(&mut self) -> Option<(usize, &'a str)> {
        for (i, l) in self.inner.by_ref() {
            let t = l.trim();
            if !t.is_empty() && !t.starts_with('#') {
                return Some((i + 1, t));
            }
        }
        None
    }

    fn expect(&mut self, what: &str) -> Result<(usize, &'a str)> {
        self.next_content().ok_or_else(|| Error::Parse {
            line: 0,
            msg: format!("unexpected end of file, expected {what}"),
        })
    }
}

fn numbers<T: std::str::FromStr>(line: usize, s: &str, count: usize, what: &str) -> Result<Vec<T>> {
    let v: Vec<T> = s
        .split_whitespace()
        .map(|t| {
            t.parse::<T>().map_err(|_| Error::Parse {
                line,
                msg: format!("cannot parse '{t}' in {what}"),
            })
        })
        .collect::<Result<_>>()?;
    if v.len() != count {
        return Err(Error::Parse {
            line,
            msg: format!("{what}: expected {count} values, found {}", v.len()),
        });
    }
    Ok(v)
}

/// Parses a multipatch description and builds the surface.
pub fn parse_geometry(text: &str) -> Result<MultipatchSurface> {
    let mut lines = Lines::new(text);
    let (ln, head) = lines.expect("header")?;
    let mut it = head.split_whitespace();
    if it.next() != Some("multipatch") {
        return Err(Error::Parse {
            line: ln,
            msg: "expected 'multipatch <n>'".into(),
        });
    }
    let n: usize = numbers(ln, &it.collect::<Vec<_>>().join(" "), 1, "header")?[0];
    let mut patches = Vec::with_capacity(n);
    for m in 0..n {
        let (ln, ph) = lines.expect("patch header")?;
        let rest = ph.strip_prefix("patch").ok_or_else(|| Error::Parse {
            line: ln,
            msg: format!("expected 'patch p1 p2 k1 k2' for patch {m}"),
        })?;
        let d: Vec<usize> = numbers(ln, rest, 4, "patch header")?;
        let (p1, p2, k1, k2) = (d[0], d[1], d[2], d[3]);
        let mut knots = Vec::with_capacity(2);
        for (p, k) in [(p1, k1), (p2, k2)] {
            let (ln, kl) = lines.expect("knot vector")?;
            let ks: Vec<f64> = numbers(ln, kl, k + p + 1, "knot vector")?;
            knots.push(KnotVector::new(p, ks).map_err(|e| Error::Parse {
                line: ln,
                msg: e.to_string(),
            })?);
        }
        let mut cp = Vec::with_capacity(k1 * k2);
        let mut w = Vec::with_capacity(k1 * k2);
        for _ in 0..k1 * k2 {
            let (ln, cl) = lines.expect("control point")?;
            let v: Vec<f64> = numbers(ln, cl, 4, "control point")?;
            cp.push([v[0], v[1], v[2]]);
            w.push(v[3]);
        }
        let ky = knots.pop().expect("two knot vectors");
        let kx = knots.pop().expect("two knot vectors");
        patches.push(NurbsPatch::new([kx, ky], cp, w)?.into());
    }
    if let Some((ln, _)) = lines.next_content() {
        return Err(Error::Parse {
            line: ln,
            msg: "trailing content after last patch".into(),
        });
    }
    MultipatchSurface::new(patches)
}

/// Serializes a surface made of NURBS patches. Analytic patches have no
/// control net and cannot be written.
pub fn format_geometry(surface: &MultipatchSurface) -> Result<String> {
    let mut s = String::new();
    writeln!(s, "multipatch {}", surface.num_patches()).unwrap();
    for (m, p) in surface.patches().iter().enumerate() {
        let Patch::Nurbs(p) = p else {
            return Err(Error::Config(format!(
                "patch {m} is analytic and has no file representation"
            )));
        };
        let [kx, ky] = p.knots();
        writeln!(
            s,
            "patch {} {} {} {}",
            kx.degree(),
            ky.degree(),
            kx.num_basis(),
            ky.num_basis()
        )
        .unwrap();
        for k in [kx, ky] {
            let v: Vec<String> = k.knots().iter().map(|t| format!("{t:?}")).collect();
            writeln!(s, "{}", v.join(" ")).unwrap();
        }
        for (c, w) in p.control_points().iter().zip(p.weights()) {
            writeln!(s, "{:?} {:?} {:?} {:?}", c[0], c[1], c[2], w).unwrap();
        }
    }
    Ok(s)
}

pub fn load_geometry(path: impl AsRef<Path>) -> Result<MultipatchSurface> {
    parse_geometry(&std::fs::read_to_string(path)?)
}

pub fn save_geometry(surface: &MultipatchSurface, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, format_geometry(surface)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_round_trip_is_exact() {
        let s = MultipatchSurface::builtin("cube").unwrap();
        let text = format_geometry(&s).unwrap();
        let back = parse_geometry(&text).unwrap();
        assert_eq!(back.patches(), s.patches());
        assert_eq!(format_geometry(&back).unwrap(), text);
    }

    #[test]
    fn analytic_patches_cannot_be_saved() {
        let s = MultipatchSurface::builtin("sphere").unwrap();
        assert!(format_geometry(&s).is_err());
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let bad = "multipatch 1\npatch 1 1 2 2\n0 0 1 1\n0 0 1 x\n";
        match parse_geometry(bad) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse_geometry("surface 1"), Err(Error::Parse { .. })));
        assert!(matches!(
            parse_geometry("multipatch 1\npatch 1 1 2 2\n0 0 1 1\n0 0 1 1\n0 0 0 1\n"),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn comments_and_blank_lines_ignored() {
        let s = MultipatchSurface::builtin("cube").unwrap();
        let text = format_geometry(&s).unwrap();
        let commented = format!("# unit cube\n\n{}", text.replace("\npatch ", "\n\n# face\npatch "));
        let back = parse_geometry(&commented).unwrap();
        assert_eq!(back.patches(), s.patches());
    }
}
