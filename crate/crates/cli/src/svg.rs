//! Minimal static SVG charts: impulses for momentum combs, a polyline for
//! spectra.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 360.0;
const MARGIN: f64 = 48.0;
const COLORS: [&str; 3] = ["#1f4e9c", "#b5462a", "#3f7f3f"];

pub struct Series<'a> {
    pub label: &'a str,
    pub points: Vec<(f64, f64)>,
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn fit(series: &[Series<'_>]) -> Self {
        let pts = series.iter().flat_map(|s| s.points.iter().copied());
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64, 0.0f64);
        for (x, y) in pts {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if !x0.is_finite() {
            (x0, x1) = (0.0, 1.0);
        }
        if x1 <= x0 {
            x1 = x0 + 1.0;
        }
        if y1 <= y0 {
            y1 = y0 + 1.0;
        }
        Frame { x: (x0, x1), y: (y0, y1) }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - 2.0 * MARGIN)
    }
}

fn open(title: &str, frame: &Frame, x_label: &str, y_label: &str) -> String {
    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#).unwrap();
    writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="13">{}</text>"#, WIDTH / 2.0, escape(title)).unwrap();
    let (l, r, b, t) = (MARGIN, WIDTH - MARGIN, HEIGHT - MARGIN, MARGIN);
    writeln!(s, r#"<path d="M{l} {t}V{b}H{r}" fill="none" stroke="black"/>"#).unwrap();
    let ticks = [
        (l, b + 14.0, "start", frame.x.0),
        (r, b + 14.0, "end", frame.x.1),
    ];
    for (x, y, anchor, v) in ticks {
        writeln!(s, r#"<text x="{x}" y="{y}" text-anchor="{anchor}">{}</text>"#, tick(v)).unwrap();
    }
    writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, l - 4.0, b, tick(frame.y.0)).unwrap();
    writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, l - 4.0, t + 4.0, tick(frame.y.1)).unwrap();
    writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, WIDTH / 2.0, HEIGHT - 12.0, escape(x_label)).unwrap();
    writeln!(
        s,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(y_label)
    )
    .unwrap();
    s
}

fn legend(s: &mut String, series: &[Series<'_>]) {
    for (i, ser) in series.iter().enumerate() {
        let y = MARGIN + 14.0 * i as f64;
        let color = COLORS[i % COLORS.len()];
        writeln!(
            s,
            r#"<text x="{}" y="{y}" text-anchor="end" fill="{color}">{}</text>"#,
            WIDTH - MARGIN - 4.0,
            escape(ser.label)
        )
        .unwrap();
    }
}

/// Vertical bars from zero, one colour per series.
pub fn impulses(title: &str, x_label: &str, y_label: &str, series: &[Series<'_>]) -> String {
    let frame = Frame::fit(series);
    let mut s = open(title, &frame, x_label, y_label);
    let base = frame.py(0.0);
    for (i, ser) in series.iter().enumerate() {
        let mut d = String::new();
        for &(x, y) in &ser.points {
            write!(d, "M{:.2} {:.2}V{:.2}", frame.px(x), base, frame.py(y)).unwrap();
        }
        writeln!(s, r#"<path d="{d}" stroke="{}" stroke-width="2" fill="none"/>"#, COLORS[i % COLORS.len()]).unwrap();
    }
    legend(&mut s, series);
    s.push_str("</svg>\n");
    s
}

pub fn lines(title: &str, x_label: &str, y_label: &str, series: &[Series<'_>]) -> String {
    let frame = Frame::fit(series);
    let mut s = open(title, &frame, x_label, y_label);
    for (i, ser) in series.iter().enumerate() {
        let mut pts = String::new();
        for &(x, y) in &ser.points {
            write!(pts, "{:.2},{:.2} ", frame.px(x), frame.py(y)).unwrap();
        }
        writeln!(
            s,
            r#"<polyline points="{}" stroke="{}" stroke-width="1" fill="none"/>"#,
            pts.trim_end(),
            COLORS[i % COLORS.len()]
        )
        .unwrap();
    }
    legend(&mut s, series);
    s.push_str("</svg>\n");
    s
}

fn tick(v: f64) -> String {
    if v == 0.0 || (1e-3..1e4).contains(&v.abs()) {
        format!("{v:.3}")
    } else {
        format!("{v:.2e}")
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
