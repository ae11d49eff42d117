//! Minimal SVG line plots.

use std::fmt::Write;

use super::metrics::rescaled_indices;

const W: f64 = 480.0;
const H: f64 = 320.0;
const MARGIN: f64 = 48.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64, y: f64) -> (f64, f64) {
        let sx = if self.x.1 > self.x.0 { (x - self.x.0) / (self.x.1 - self.x.0) } else { 0.5 };
        let sy = if self.y.1 > self.y.0 { (y - self.y.0) / (self.y.1 - self.y.0) } else { 0.5 };
        (MARGIN + sx * (W - 2.0 * MARGIN), H - MARGIN - sy * (H - 2.0 * MARGIN))
    }

    fn polyline(&self, out: &mut String, xs: &[f64], ys: &[f64], colour: &str) {
        let pts: Vec<String> = xs
            .iter()
            .zip(ys)
            .map(|(&x, &y)| {
                let (a, b) = self.px(x, y);
                format!("{a:.2},{b:.2}")
            })
            .collect();
        let _ =
            writeln!(out, r#"<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{}"/>"#, pts.join(" "));
    }
}

fn document(title: &str, frame: &Frame, x_label: &str, y_label: &str, body: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title));
    let (x0, y0) = frame.px(frame.x.0, frame.y.0);
    let (x1, y1) = frame.px(frame.x.1, frame.y.1);
    let _ = writeln!(s, r#"<path d="M{x0},{y1} L{x0},{y0} L{x1},{y0}" fill="none" stroke="gray"/>"#);
    let _ = writeln!(s, r#"<text x="{x0}" y="{}" font-size="10">{}</text>"#, y0 + 14.0, fmt_tick(frame.x.0));
    let _ = writeln!(
        s,
        r#"<text x="{x1}" y="{}" font-size="10" text-anchor="end">{}</text>"#,
        y0 + 14.0,
        fmt_tick(frame.x.1)
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{y0}" font-size="10" text-anchor="end">{}</text>"#,
        x0 - 4.0,
        fmt_tick(frame.y.0)
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="10" text-anchor="end">{}</text>"#,
        x0 - 4.0,
        y1 + 4.0,
        fmt_tick(frame.y.1)
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="11" text-anchor="middle">{}</text>"#,
        W / 2.0,
        H - 12.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{}" font-size="11" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(y_label)
    );
    s.push_str(body);
    s.push_str("</svg>\n");
    s
}

fn fmt_tick(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-2 || v.abs() >= 1e4) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

/// Normalised Laplacian spectra before (black) and after (blue) pooling,
/// each against indices rescaled to `[0, 1]`.
pub fn spectra_svg(before: &[f64], after: &[f64], title: &str) -> String {
    let top = before.iter().chain(after).copied().fold(2.0, f64::max);
    let frame = Frame { x: (0.0, 1.0), y: (0.0, top) };
    let mut body = String::new();
    frame.polyline(&mut body, &rescaled_indices(before.len()), before, "black");
    frame.polyline(&mut body, &rescaled_indices(after.len()), after, "blue");
    document(title, &frame, "rescaled index", "eigenvalue", &body)
}

/// Training loss per epoch.
pub fn loss_curve_svg(curve: &[f64], title: &str) -> String {
    let finite = curve.iter().copied().filter(|v| v.is_finite());
    let lo = finite.clone().fold(f64::INFINITY, f64::min);
    let hi = finite.fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if lo.is_finite() { (lo.min(0.0), hi) } else { (0.0, 1.0) };
    let frame = Frame { x: (0.0, curve.len().saturating_sub(1) as f64), y: (lo, hi) };
    let xs: Vec<f64> = (0..curve.len()).map(|e| e as f64).collect();
    let mut body = String::new();
    frame.polyline(&mut body, &xs, curve, "black");
    document(title, &frame, "epoch", "loss", &body)
}
