//! CSV, SVG and JSON artifacts.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::CliError;

/// Shortest round-trip form, so reruns are byte-identical.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x}")
    }
}

/// `x` rounded to `digits` significant digits, in plain decimal notation
/// without trailing zeros.
pub fn sig(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { num(x) };
    }
    let e = format!("{:.*e}", digits - 1, x);
    let (mant, exp) = e.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let (neg, mant) = match mant.strip_prefix('-') {
        Some(m) => (true, m),
        None => (false, mant),
    };
    let digits_str: String = mant.chars().filter(|c| *c != '.').collect();
    let point = exp + 1; // position of the decimal point in digits_str
    let mut out = String::new();
    if neg {
        out.push('-');
    }
    if point <= 0 {
        out.push_str("0.");
        out.extend(std::iter::repeat('0').take((-point) as usize));
        out.push_str(&digits_str);
    } else if point as usize >= digits_str.len() {
        out.push_str(&digits_str);
        out.extend(std::iter::repeat('0').take(point as usize - digits_str.len()));
    } else {
        out.push_str(&digits_str[..point as usize]);
        out.push('.');
        out.push_str(&digits_str[point as usize..]);
    }
    if out.contains('.') {
        while out.ends_with('0') {
            out.pop();
        }
        if out.ends_with('.') {
            out.pop();
        }
    }
    if out == "-0" {
        out = "0".into();
    }
    out
}

/// A CSV table closed by a `# config-hash=<hex>` line.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &[String]) -> Csv {
        let mut text = header.join(",");
        text.push('\n');
        Csv { text }
    }

    pub fn row(&mut self, cells: &[String]) {
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn finish(mut self, hash: &str) -> String {
        writeln!(self.text, "# config-hash={hash}").expect("write to string");
        self.text
    }
}

pub fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))
}

/// One polyline through `points` (y flipped so the picture is upright), in
/// a viewBox fitted to their bounding box plus 5% on every side.
pub fn svg(points: &[[f64; 2]]) -> String {
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in points {
        x0 = x0.min(p[0]);
        x1 = x1.max(p[0]);
        y0 = y0.min(-p[1]);
        y1 = y1.max(-p[1]);
    }
    let (mut w, mut h) = (x1 - x0, y1 - y0);
    // a degenerate box still needs some extent
    let span = w.max(h).max(1e-12);
    if w <= 0.0 {
        w = span;
        x0 -= 0.5 * span;
    }
    if h <= 0.0 {
        h = span;
        y0 -= 0.5 * span;
    }
    let (px, py) = (0.05 * w, 0.05 * h);
    let stroke = 0.002 * (w + 2.0 * px).max(h + 2.0 * py);
    let mut s = String::new();
    s.push_str("<svg xmlns=\"http://www.w3.org/2000/svg\" ");
    let _ = writeln!(
        s,
        "viewBox=\"{} {} {} {}\">",
        sig(x0 - px, 9),
        sig(y0 - py, 9),
        sig(w + 2.0 * px, 9),
        sig(h + 2.0 * py, 9)
    );
    let _ = write!(
        s,
        "<polyline fill=\"none\" stroke=\"black\" stroke-width=\"{}\" points=\"",
        sig(stroke, 9)
    );
    for (k, p) in points.iter().enumerate() {
        if k > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{},{}", sig(p[0], 9), sig(-p[1], 9));
    }
    s.push_str("\"/>\n</svg>\n");
    s
}
