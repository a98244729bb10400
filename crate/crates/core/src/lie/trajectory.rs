//! CSV export of discrete trajectories.

use std::io::{self, Write};

use super::DiscreteState;

pub fn header() -> String {
    let mut cols = vec!["k".to_string(), "t".to_string()];
    for m in ["R", "F"] {
        if m == "F" {
            cols.extend(["p0", "p1", "p2"].map(String::from));
        }
        for i in 0..3 {
            for j in 0..3 {
                cols.push(format!("{m}{i}{j}"));
            }
        }
    }
    cols.extend(["v0", "v1", "v2", "E"].map(String::from));
    cols.join(",")
}

/// Writes one row per state: `k, t, R00..R22, p0..p2, F00..F22, v0..v2, E` (rotations row-major).
pub fn write_csv<W: Write>(
    mut w: W,
    states: &[DiscreteState],
    energies: &[f64],
    h: f64,
) -> io::Result<()> {
    writeln!(w, "{}", header())?;
    for (k, (s, e)) in states.iter().zip(energies).enumerate() {
        let mut row = vec![k.to_string(), format!("{:?}", k as f64 * h)];
        let mat = |m: &nalgebra::Matrix3<f64>, row: &mut Vec<String>| {
            for i in 0..3 {
                for j in 0..3 {
                    row.push(format!("{:?}", m[(i, j)]));
                }
            }
        };
        mat(&s.r, &mut row);
        row.extend(s.p.iter().map(|x| format!("{x:?}")));
        mat(&s.f, &mut row);
        row.extend(s.v.iter().map(|x| format!("{x:?}")));
        row.push(format!("{e:?}"));
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_columns() {
        let h = header();
        let cols: Vec<&str> = h.split(',').collect();
        assert_eq!(cols.len(), 2 + 9 + 3 + 9 + 3 + 1);
        assert_eq!(cols[2], "R00");
        assert_eq!(cols[11], "p0");
        assert_eq!(cols[14], "F00");
        assert_eq!(*cols.last().unwrap(), "E");
    }
}
