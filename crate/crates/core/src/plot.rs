//! Minimal static SVG plots.

use std::fmt::Write;

use crate::binarize::Partition;
use crate::graph::DataSet;
use crate::ltm::QRecord;
use crate::spectra::EigenSystem;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

fn color(c: usize) -> &'static str {
    PALETTE[c % PALETTE.len()]
}

struct Frame {
    x0: f64,
    y0: f64,
    w: f64,
    h: f64,
    lo: (f64, f64),
    hi: (f64, f64),
}

impl Frame {
    fn new(
        x0: f64,
        y0: f64,
        w: f64,
        h: f64,
        xs: impl Iterator<Item = f64> + Clone,
        ys: impl Iterator<Item = f64> + Clone,
    ) -> Self {
        let span = |it: &mut dyn Iterator<Item = f64>| {
            let (lo, hi) = it
                .filter(|v| v.is_finite())
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| {
                    (l.min(v), h.max(v))
                });
            if lo > hi {
                (0.0, 1.0)
            } else if hi - lo < 1e-12 {
                (lo - 0.5, hi + 0.5)
            } else {
                (lo, hi)
            }
        };
        let (xl, xh) = span(&mut xs.clone());
        let (yl, yh) = span(&mut ys.clone());
        Frame {
            x0,
            y0,
            w,
            h,
            lo: (xl, yl),
            hi: (xh, yh),
        }
    }

    fn px(&self, x: f64) -> f64 {
        self.x0 + (x - self.lo.0) / (self.hi.0 - self.lo.0) * self.w
    }

    fn py(&self, y: f64) -> f64 {
        self.y0 + self.h - (y - self.lo.1) / (self.hi.1 - self.lo.1) * self.h
    }

    fn border(&self, out: &mut String) {
        let _ = writeln!(
            out,
            r##"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="#999"/>"##,
            self.x0, self.y0, self.w, self.h
        );
    }
}

fn open(w: f64, h: f64) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\" font-family=\"sans-serif\" font-size=\"11\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    )
}

fn text(out: &mut String, x: f64, y: f64, s: &str) {
    let _ = writeln!(out, r#"<text x="{x:.1}" y="{y:.1}">{s}</text>"#);
}

/// 2-D scatter of the first two coordinates colored by cluster.
pub fn scatter_svg(data: &DataSet, partition: &Partition, title: &str) -> String {
    let p = data.points();
    let ys: Vec<f64> = if data.d() > 1 {
        p.column(1).iter().copied().collect()
    } else {
        vec![0.0; data.n()]
    };
    let xs: Vec<f64> = p.column(0).iter().copied().collect();
    let f = Frame::new(
        40.0,
        30.0,
        520.0,
        520.0,
        xs.iter().copied(),
        ys.iter().copied(),
    );
    let mut out = open(600.0, 590.0);
    text(&mut out, 40.0, 20.0, title);
    f.border(&mut out);
    for i in 0..data.n() {
        let _ = writeln!(
            out,
            r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{}"/>"#,
            f.px(xs[i]),
            f.py(ys[i]),
            color(partition.label(i))
        );
    }
    out.push_str("</svg>\n");
    out
}

/// One panel per eigenvector showing its value at every point, points
/// ordered by cluster, dots colored by cluster.
pub fn eigenvectors_svg(eigs: &EigenSystem, partition: &Partition, max_panels: usize) -> String {
    let panels = eigs.k().min(max_panels).max(1);
    let mut order: Vec<usize> = (0..eigs.n()).collect();
    order.sort_by_key(|&i| (partition.label(i), i));
    let (pw, ph, gap) = (600.0, 90.0, 30.0);
    let mut out = open(pw + 80.0, panels as f64 * (ph + gap) + 20.0);
    for j in 0..panels.min(eigs.k()) {
        let v = eigs.vector(j);
        let y0 = 25.0 + j as f64 * (ph + gap);
        let f = Frame::new(
            60.0,
            y0,
            pw,
            ph,
            (0..order.len()).map(|i| i as f64),
            v.iter().copied(),
        );
        text(
            &mut out,
            60.0,
            y0 - 6.0,
            &format!("eigenvector {} (eigenvalue {:.3e})", j + 1, eigs.value(j)),
        );
        f.border(&mut out);
        let zero = f.py(0.0);
        if zero >= y0 && zero <= y0 + ph {
            let _ = writeln!(
                out,
                r##"<line x1="60" y1="{zero:.1}" x2="{:.1}" y2="{zero:.1}" stroke="#ccc"/>"##,
                60.0 + pw
            );
        }
        for (pos, &i) in order.iter().enumerate() {
            let _ = writeln!(
                out,
                r#"<circle cx="{:.2}" cy="{:.2}" r="1.5" fill="{}"/>"#,
                f.px(pos as f64),
                f.py(v[i]),
                color(partition.label(i))
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

/// LCM and LTM BIC against q.
pub fn bic_svg(trace: &[QRecord]) -> String {
    let finite = |v: f64| v.is_finite();
    let qs = trace.iter().map(|r| r.q as f64);
    let vals = trace
        .iter()
        .flat_map(|r| [r.lcm_bic, r.ltm_bic])
        .filter(|v| finite(*v));
    let f = Frame::new(70.0, 30.0, 500.0, 300.0, qs, vals);
    let mut out = open(620.0, 380.0);
    text(&mut out, 70.0, 20.0, "BIC by q (blue: LTM, orange: LCM)");
    f.border(&mut out);
    for (series, col) in [(0, color(0)), (1, color(1))] {
        let pts: Vec<String> = trace
            .iter()
            .filter_map(|r| {
                let v = if series == 0 { r.ltm_bic } else { r.lcm_bic };
                finite(v).then(|| format!("{:.2},{:.2}", f.px(r.q as f64), f.py(v)))
            })
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{col}" stroke-width="1.5"/>"#,
            pts.join(" ")
        );
    }
    for r in trace {
        text(&mut out, f.px(r.q as f64) - 4.0, 345.0, &r.q.to_string());
    }
    text(&mut out, 300.0, 370.0, "q");
    out.push_str("</svg>\n");
    out
}
