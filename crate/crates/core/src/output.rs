//! CSV/SVG emission helpers shared by the CLI and the library dumps.

use std::fs;
use std::io::Write;
use std::path::Path;

/// Formats `x` like C's `printf("%.12e")`.
pub fn fmt_e12(x: f64) -> String {
    fmt_exp(x, 12)
}

fn fmt_exp(x: f64, precision: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    // Rust renders `1.5e-7`; C wants `1.5e-07`.
    let s = format!("{:.*e}", precision, x);
    let (mantissa, exp) = s.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

/// Writes `bytes` to `path` via a temporary sibling and a rename.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let file_name = path
        .file_name()
        .ok_or_else(|| std::io::Error::new(std::io::ErrorKind::InvalidInput, "path has no file name"))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(file_name);
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

/// Accumulates a CSV table in memory. Floats are written as `%.12e`.
#[derive(Debug, Clone)]
pub struct CsvTable {
    buf: String,
    columns: usize,
}

/// A single CSV cell.
pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<i32> for Cell {
    fn from(x: i32) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        let mut buf = header.join(",");
        buf.push('\n');
        Self { buf, columns: header.len() }
    }

    pub fn row(&mut self, cells: Vec<Cell>) {
        debug_assert_eq!(cells.len(), self.columns);
        let mut first = true;
        for c in cells {
            if !first {
                self.buf.push(',');
            }
            first = false;
            match c {
                Cell::Float(x) => self.buf.push_str(&fmt_e12(x)),
                Cell::Int(i) => self.buf.push_str(&i.to_string()),
                Cell::Text(t) => self.buf.push_str(&t),
            }
        }
        self.buf.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.buf
    }

    pub fn write_to(&self, path: &Path) -> std::io::Result<()> {
        atomic_write(path, self.buf.as_bytes())
    }
}

/// Axis annotation for an SVG heatmap.
#[derive(Debug, Clone)]
pub struct PlotAxis {
    pub label: String,
    pub min: f64,
    pub max: f64,
}

// Sampled viridis stops.
const VIRIDIS: [[f64; 3]; 5] = [
    [68.0, 1.0, 84.0],
    [59.0, 82.0, 139.0],
    [33.0, 145.0, 140.0],
    [94.0, 201.0, 98.0],
    [253.0, 231.0, 37.0],
];

fn colormap(t: f64) -> String {
    if !t.is_finite() {
        return "#bbbbbb".into();
    }
    let t = t.clamp(0.0, 1.0) * (VIRIDIS.len() - 1) as f64;
    let i = (t.floor() as usize).min(VIRIDIS.len() - 2);
    let f = t - i as f64;
    let c: Vec<u8> = (0..3)
        .map(|ch| (VIRIDIS[i][ch] + f * (VIRIDIS[i + 1][ch] - VIRIDIS[i][ch])).round() as u8)
        .collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

/// Renders a heatmap of `values[ix * ny + iy]` with a linear color map.
/// Non-finite entries are drawn grey.
pub fn svg_heatmap(title: &str, x: &PlotAxis, y: &PlotAxis, nx: usize, ny: usize, values: &[f64]) -> String {
    let (w, h, margin) = (480.0, 400.0, 60.0);
    let finite = values.iter().copied().filter(|v| v.is_finite());
    let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let span = if hi > lo { hi - lo } else { 1.0 };
    let cw = w / nx as f64;
    let ch = h / ny as f64;

    let mut s = String::new();
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" font-family=\"sans-serif\" font-size=\"12\">\n",
        w + 2.0 * margin + 60.0,
        h + 2.0 * margin
    ));
    s.push_str(&format!("<text x=\"{}\" y=\"20\" text-anchor=\"middle\">{}</text>\n", margin + w / 2.0, title));
    for ix in 0..nx {
        for iy in 0..ny {
            let v = values[ix * ny + iy];
            let fill = colormap((v - lo) / span);
            s.push_str(&format!(
                "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{}\"/>\n",
                margin + ix as f64 * cw,
                margin + h - (iy + 1) as f64 * ch,
                cw + 0.05,
                ch + 0.05,
                fill
            ));
        }
    }
    s.push_str(&format!(
        "<rect x=\"{margin}\" y=\"{margin}\" width=\"{w}\" height=\"{h}\" fill=\"none\" stroke=\"black\"/>\n"
    ));
    s.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
        margin + w / 2.0,
        h + margin + 40.0,
        x.label
    ));
    s.push_str(&format!(
        "<text x=\"15\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 15 {})\">{}</text>\n",
        margin + h / 2.0,
        margin + h / 2.0,
        y.label
    ));
    s.push_str(&format!("<text x=\"{margin}\" y=\"{}\">{:.3}</text>\n", h + margin + 16.0, x.min));
    s.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{:.3}</text>\n",
        margin + w,
        h + margin + 16.0,
        x.max
    ));
    s.push_str(&format!("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{:.3}</text>\n", margin - 4.0, margin + h, y.min));
    s.push_str(&format!("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{:.3}</text>\n", margin - 4.0, margin + 10.0, y.max));
    // Color bar.
    let bx = margin + w + 20.0;
    for i in 0..50 {
        let t = i as f64 / 49.0;
        s.push_str(&format!(
            "<rect x=\"{bx}\" y=\"{:.2}\" width=\"15\" height=\"{:.2}\" fill=\"{}\"/>\n",
            margin + h - (i + 1) as f64 * h / 50.0,
            h / 50.0 + 0.05,
            colormap(t)
        ));
    }
    s.push_str(&format!("<text x=\"{}\" y=\"{}\">{:.3}</text>\n", bx + 18.0, margin + h, lo));
    s.push_str(&format!("<text x=\"{}\" y=\"{}\">{:.3}</text>\n", bx + 18.0, margin + 10.0, hi));
    s.push_str("</svg>\n");
    s
}

/// Renders points `(x, y, value)` colored by `value`.
pub fn svg_scatter(title: &str, x: &PlotAxis, y: &PlotAxis, points: &[(f64, f64, f64)]) -> String {
    let (w, h, margin) = (480.0, 400.0, 60.0);
    let (lo, hi) = points
        .iter()
        .map(|p| p.2)
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let span = if hi > lo { hi - lo } else { 1.0 };
    let sx = |v: f64| margin + (v - x.min) / (x.max - x.min) * w;
    let sy = |v: f64| margin + h - (v - y.min) / (y.max - y.min) * h;

    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" font-family=\"sans-serif\" font-size=\"12\">\n",
        w + 2.0 * margin,
        h + 2.0 * margin
    );
    s.push_str(&format!("<text x=\"{}\" y=\"20\" text-anchor=\"middle\">{}</text>\n", margin + w / 2.0, title));
    for &(px, py, v) in points {
        if px < x.min || px > x.max || py < y.min || py > y.max {
            continue;
        }
        s.push_str(&format!(
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"1.5\" fill=\"{}\"/>\n",
            sx(px),
            sy(py),
            colormap((v - lo) / span)
        ));
    }
    s.push_str(&format!(
        "<rect x=\"{margin}\" y=\"{margin}\" width=\"{w}\" height=\"{h}\" fill=\"none\" stroke=\"black\"/>\n"
    ));
    s.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
        margin + w / 2.0,
        h + margin + 40.0,
        x.label
    ));
    s.push_str(&format!(
        "<text x=\"15\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 15 {})\">{}</text>\n",
        margin + h / 2.0,
        margin + h / 2.0,
        y.label
    ));
    s.push_str(&format!("<text x=\"{margin}\" y=\"{}\">{:.3}</text>\n", h + margin + 16.0, x.min));
    s.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{:.3}</text>\n",
        margin + w,
        h + margin + 16.0,
        x.max
    ));
    s.push_str(&format!("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{:.3}</text>\n", margin - 4.0, margin + h, y.min));
    s.push_str(&format!("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{:.3}</text>\n", margin - 4.0, margin + 10.0, y.max));
    s.push_str("</svg>\n");
    s
}
