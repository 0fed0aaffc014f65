//! Plain CSV output with a fixed number format.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::Result;

/// Shortest decimal form of `v` rounded to 12 significant digits; scientific
/// notation for very small or very large magnitudes.
pub fn fmt_num(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{v:.11e}");
    let rounded: f64 = sci.parse().unwrap_or(v);
    let plain = format!("{rounded}");
    if plain.len() <= 20 {
        plain
    } else {
        sci
    }
}

/// Renders a header and numeric rows.
pub fn render_csv<I, R>(header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: AsRef<[f64]>,
{
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        for (k, v) in row.as_ref().iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            let _ = write!(out, "{}", fmt_num(*v));
        }
        out.push('\n');
    }
    out
}

pub fn write_csv<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: AsRef<[f64]>,
{
    std::fs::write(path, render_csv(header, rows))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt_num(0.25), "0.25");
        assert_eq!(fmt_num(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_num(2.0 / 3.0), "0.666666666667");
        assert_eq!(fmt_num(-1.5), "-1.5");
        assert_eq!(fmt_num(0.0), "0");
        assert_eq!(fmt_num(1e-20 / 3.0), "3.33333333333e-21");
    }

    #[test]
    fn renders_rows() {
        let text = render_csv(&["a", "b"], [[1.0, 0.5], [2.0, 1.0 / 3.0]]);
        assert_eq!(text, "a,b\n1,0.5\n2,0.333333333333\n");
    }
}
