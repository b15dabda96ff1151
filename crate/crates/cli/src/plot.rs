// Copyright 2026 The qgm Developers
//
// Licensed under the Apache License, Version 2.0 (the "License"); you may not use this file except
// in compliance with the License. You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software distributed under the License
// is distributed on an "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express
// or implied. See the License for the specific language governing permissions and limitations under
// the License.

//! Minimal SVG line chart: axes, one polyline of per-x means, tick labels.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Read;

#[derive(Debug, PartialEq, Eq)]
pub enum PlotError {
    NoRows,
    MissingColumn(String),
    NonNumeric { column: String, row: usize, value: String },
    Csv(String),
}

impl std::fmt::Display for PlotError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PlotError::NoRows => write!(f, "no rows"),
            PlotError::MissingColumn(c) => write!(f, "column {c:?} not found"),
            PlotError::NonNumeric { column, row, value } => {
                write!(f, "column {column:?} is not numeric (row {row}: {value:?})")
            }
            PlotError::Csv(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for PlotError {}

/// `(x, mean y)` pairs sorted by x; rows with an empty y are skipped.
pub fn read_series<R: Read>(input: R, x: &str, y: &str) -> Result<Vec<(f64, f64)>, PlotError> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers = rdr.headers().map_err(|e| PlotError::Csv(e.to_string()))?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name).ok_or_else(|| PlotError::MissingColumn(name.into()));
    let (xi, yi) = (col(x)?, col(y)?);
    let mut groups: BTreeMap<u64, (f64, f64, usize)> = BTreeMap::new();
    let mut rows = 0;
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| PlotError::Csv(e.to_string()))?;
        rows += 1;
        let parse = |i: usize, name: &str| -> Result<Option<f64>, PlotError> {
            let v = rec.get(i).unwrap_or("").trim();
            if v.is_empty() {
                return Ok(None);
            }
            v.parse::<f64>()
                .ok()
                .filter(|f| f.is_finite())
                .map(Some)
                .ok_or_else(|| PlotError::NonNumeric { column: name.into(), row: r + 1, value: v.into() })
        };
        let (Some(xv), Some(yv)) = (parse(xi, x)?, parse(yi, y)?) else {
            continue;
        };
        // total order on finite floats via the sign-flipped bit pattern
        let key = if xv.is_sign_negative() { !xv.to_bits() } else { xv.to_bits() | (1 << 63) };
        let e = groups.entry(key).or_insert((xv, 0.0, 0));
        e.1 += yv;
        e.2 += 1;
    }
    if rows == 0 || groups.is_empty() {
        return Err(PlotError::NoRows);
    }
    Ok(groups.into_values().map(|(xv, sum, c)| (xv, sum / c as f64)).collect())
}

fn fmt_tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e5 || v.abs() < 1e-3) {
        format!("{v:.2e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

pub fn render_svg(points: &[(f64, f64)], x_label: &str, y_label: &str) -> String {
    const W: f64 = 640.0;
    const H: f64 = 420.0;
    const M: f64 = 60.0;
    let span = |vals: Vec<f64>| {
        let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if hi > lo {
            (lo, hi)
        } else {
            (lo - 0.5, hi + 0.5)
        }
    };
    let (x0, x1) = span(points.iter().map(|p| p.0).collect());
    let (y0, y1) = span(points.iter().map(|p| p.1).collect());
    let sx = |x: f64| M + (x - x0) / (x1 - x0) * (W - 2.0 * M);
    let sy = |y: f64| H - M - (y - y0) / (y1 - y0) * (H - 2.0 * M);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<path d="M{M} {top} V{bottom} H{right}" fill="none" stroke="black"/>"#,
        top = M,
        bottom = H - M,
        right = W - M
    );
    for k in 0..=4 {
        let t = k as f64 / 4.0;
        let (xv, yv) = (x0 + t * (x1 - x0), y0 + t * (y1 - y0));
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="middle">{}</text>"#,
            sx(xv),
            H - M + 16.0,
            fmt_tick(xv)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">{}</text>"#,
            M - 6.0,
            sy(yv) + 4.0,
            fmt_tick(yv)
        );
    }
    let pts: Vec<String> = points.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
    let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-width="2"/>"#, pts.join(" "));
    for &(x, y) in points {
        let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="steelblue"/>"#, sx(x), sy(y));
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" font-size="13" text-anchor="middle">{}</text>"#,
        W / 2.0,
        H - 16.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.2}" font-size="13" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(y_label)
    );
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn means_per_x() {
        let csv = "n,y\n8,1\n8,3\n4,10\n";
        assert_eq!(read_series(csv.as_bytes(), "n", "y").unwrap(), vec![(4.0, 10.0), (8.0, 2.0)]);
    }

    #[test]
    fn errors() {
        assert_eq!(read_series("n,y\n".as_bytes(), "n", "y"), Err(PlotError::NoRows));
        assert_eq!(read_series("".as_bytes(), "n", "y"), Err(PlotError::MissingColumn("n".into())));
        assert!(matches!(read_series("n,y\n1,abc\n".as_bytes(), "n", "y"), Err(PlotError::NonNumeric { .. })));
        assert_eq!(read_series("n,y\n1,\n".as_bytes(), "n", "y"), Err(PlotError::NoRows));
    }

    #[test]
    fn negative_x_sorted() {
        let pts = read_series("x,y\n1,1\n-2,2\n0,3\n".as_bytes(), "x", "y").unwrap();
        assert_eq!(pts.iter().map(|p| p.0).collect::<Vec<_>>(), vec![-2.0, 0.0, 1.0]);
    }

    #[test]
    fn svg_has_polyline() {
        let svg = render_svg(&[(1.0, 1.0), (2.0, 4.0)], "n", "a<b");
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("<polyline points=\"60.00,360.00 580.00,60.00\""));
        assert!(svg.contains("a&lt;b"));
    }
}
