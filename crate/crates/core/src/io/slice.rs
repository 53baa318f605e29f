//! Plain-text 2D exports of `|v|` for plotting.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::fields::VectorField;
use crate::scalar::{norm_sq3, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn index(self) -> usize {
        self as usize
    }

    fn name(self) -> &'static str {
        ["x", "y", "z"][self as usize]
    }
}

impl std::str::FromStr for Axis {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "x" | "0" => Ok(Self::X),
            "y" | "1" => Ok(Self::Y),
            "z" | "2" => Ok(Self::Z),
            other => Err(format!("unknown axis `{other}` (x|y|z)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SliceSelector {
    /// The plane at one index along the axis.
    At(usize),
    /// `sqrt(h Σ |v|^2)` over the half-open index range along the axis.
    Range(usize, usize),
}

/// Paths written by [`export_slice`]: `|v|`, `log10|v|` and the coordinate sidecar.
fn outputs(path: &Path) -> [PathBuf; 3] {
    let stem = path.with_extension("");
    let with = |suffix: &str| {
        let mut s = stem.clone().into_os_string();
        s.push(suffix);
        PathBuf::from(s)
    };
    [path.to_path_buf(), with(".log10.csv"), with(".coords.txt")]
}

/// Writes the `|v|` matrix over the two remaining axes (rows: first remaining
/// axis, columns: second), its `log10`, and a coordinate sidecar. Returns the
/// written paths.
pub fn export_slice<T: Scalar>(
    v: &VectorField<T>,
    axis: Axis,
    selector: SliceSelector,
    path: impl AsRef<Path>,
) -> Result<Vec<PathBuf>> {
    let g = v.grid();
    let dims = g.dims();
    let a = axis.index();
    let n_axis = dims[a];
    let (lo, hi) = match selector {
        SliceSelector::At(i) if i < n_axis => (i, i + 1),
        SliceSelector::Range(lo, hi) if lo < hi && hi <= n_axis => (lo, hi),
        other => return Err(Error::BadSelector(format!("{other:?} on axis {} with {n_axis} points", axis.name()))),
    };
    let rest: Vec<usize> = (0..3).filter(|&x| x != a).collect();
    let (ra, ca) = (rest[0], rest[1]);

    let mut mat = vec![vec![T::zero(); dims[ca]]; dims[ra]];
    for (r, row) in mat.iter_mut().enumerate() {
        for (c, cell) in row.iter_mut().enumerate() {
            let mut acc = T::zero();
            for s in lo..hi {
                let mut idx = [0usize; 3];
                idx[a] = s;
                idx[ra] = r;
                idx[ca] = c;
                acc = acc + norm_sq3(v.get(g.flat(idx[0], idx[1], idx[2])));
            }
            *cell = match selector {
                SliceSelector::At(_) => acc.sqrt(),
                SliceSelector::Range(..) => (acc * g.h).sqrt(),
            };
        }
    }

    let render = |f: &dyn Fn(T) -> T| {
        let mut s = String::new();
        for row in &mat {
            let cells: Vec<String> = row.iter().map(|&x| f(x).to_string()).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    };
    let coords = |axis: usize| g.axis_coords(axis).iter().map(ToString::to_string).collect::<Vec<_>>().join(",");
    let names = ["x", "y", "z"];
    let mut side = String::new();
    let _ = writeln!(side, "axis={}", axis.name());
    match selector {
        SliceSelector::At(i) => {
            let _ = writeln!(side, "at={} ({}={})", i, axis.name(), g.coord(a, i));
        }
        SliceSelector::Range(..) => {
            let _ = writeln!(
                side,
                "range={}..{} ({} in [{}, {}]); value = sqrt(h * sum |v|^2)",
                lo,
                hi,
                axis.name(),
                g.coord(a, lo),
                g.coord(a, hi - 1)
            );
        }
    }
    let _ = writeln!(side, "rows={}", names[ra]);
    let _ = writeln!(side, "row_coords={}", coords(ra));
    let _ = writeln!(side, "cols={}", names[ca]);
    let _ = writeln!(side, "col_coords={}", coords(ca));

    let paths = outputs(path.as_ref());
    fs::write(&paths[0], render(&|x| x))?;
    fs::write(&paths[1], render(&|x: T| x.log10()))?;
    fs::write(&paths[2], side)?;
    Ok(paths.to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    fn read_matrix(p: &Path) -> Vec<Vec<f64>> {
        fs::read_to_string(p).unwrap().lines().map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect()
    }

    #[test]
    fn zero_field_slice_is_zero_and_shaped() {
        let dir = tempfile::tempdir().unwrap();
        let g = GridSpec::new([3, 4, 5], 1.0, [0.0; 3]).unwrap();
        let v = VectorField::zeros(g);
        for (axis, shape) in [(Axis::X, (4, 5)), (Axis::Y, (3, 5)), (Axis::Z, (3, 4))] {
            let paths = export_slice(&v, axis, SliceSelector::At(1), dir.path().join("s.csv")).unwrap();
            let m = read_matrix(&paths[0]);
            assert_eq!((m.len(), m[0].len()), shape);
            assert!(m.iter().flatten().all(|&x| x == 0.0));
            assert!(read_matrix(&paths[1]).iter().flatten().all(|&x| x == f64::NEG_INFINITY));
        }
    }

    #[test]
    fn range_aggregation_and_values() {
        let dir = tempfile::tempdir().unwrap();
        let g = GridSpec::new([2, 2, 4], 0.5, [0.0; 3]).unwrap();
        let mut v = VectorField::zeros(g);
        v.set(g.flat(1, 0, 2), [3.0, 4.0, 0.0]);
        let p = dir.path().join("z.csv");
        let paths = export_slice(&v, Axis::Z, SliceSelector::At(2), &p).unwrap();
        assert_eq!(read_matrix(&paths[0]), vec![vec![0.0, 0.0], vec![5.0, 0.0]]);
        let paths = export_slice(&v, Axis::Z, SliceSelector::Range(0, 4), &p).unwrap();
        assert_eq!(read_matrix(&paths[0])[1][0], (25.0f64 * 0.5).sqrt());
        let side = fs::read_to_string(&paths[2]).unwrap();
        assert!(side.contains("rows=x") && side.contains("cols=y"));
    }

    #[test]
    fn bad_selectors() {
        let dir = tempfile::tempdir().unwrap();
        let g = GridSpec::new([2, 2, 4], 0.5, [0.0; 3]).unwrap();
        let v = VectorField::zeros(g);
        let p = dir.path().join("b.csv");
        assert!(matches!(export_slice(&v, Axis::Z, SliceSelector::At(4), &p), Err(Error::BadSelector(_))));
        assert!(export_slice(&v, Axis::X, SliceSelector::Range(1, 1), &p).is_err());
        assert!(export_slice(&v, Axis::X, SliceSelector::Range(0, 3), &p).is_err());
    }
}
