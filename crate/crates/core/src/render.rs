//! SVG 1.1 frames of a projected sample and the projected reference ellipse.

use std::fmt::Write as _;
use std::io::Write;

use crate::error::{Error, Result};
use crate::numerics::Matrix;
use crate::reference::ProjectedEllipse;
use crate::tour::ProjectionBasis;

/// Corner for the axis widget.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AxesPosition {
    BottomLeft,
    Off,
}

impl std::str::FromStr for AxesPosition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bottomleft" => Ok(Self::BottomLeft),
            "off" => Ok(Self::Off),
            other => Err(Error::InvalidArgument(format!(
                "axes must be 'bottomleft' or 'off', got '{other}'"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RenderSpec {
    pub width: u32,
    pub height: u32,
    pub point_radius: f64,
    pub cluster_colors: Vec<String>,
    pub axes: AxesPosition,
    /// Data units from the view centre to the plot edge; `None` fits the data.
    pub half_range: Option<f64>,
    /// Centre the view on the projected reference mean instead of the origin.
    pub center: bool,
    pub ellipse_points: usize,
}

impl Default for RenderSpec {
    fn default() -> Self {
        Self {
            width: 400,
            height: 400,
            point_radius: 3.0,
            cluster_colors: [
                "#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d",
                "#666666",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect(),
            axes: AxesPosition::BottomLeft,
            half_range: None,
            center: false,
            ellipse_points: crate::reference::DEFAULT_BOUNDARY_POINTS,
        }
    }
}

impl RenderSpec {
    pub fn validate(&self) -> Result<()> {
        if self.width < 50 || self.height < 50 {
            return Err(Error::InvalidArgument("frame must be at least 50×50 pixels".into()));
        }
        if let Some(h) = self.half_range {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::InvalidArgument(format!("half range must be positive, got {h}")));
            }
        }
        if self.ellipse_points < 8 {
            return Err(Error::InvalidArgument("ellipse needs at least 8 vertices".into()));
        }
        Ok(())
    }
}

const POINT_COLOR: &str = "#4d4d4d";
const FLAG_COLOR: &str = "#d7191c";
const ELLIPSE_COLOR: &str = "#2c7bb6";
const MARGIN: f64 = 10.0;

/// Everything drawn in one frame.
pub struct FrameContent<'a> {
    pub basis: &'a ProjectionBasis,
    pub data: &'a Matrix,
    pub flagged: &'a [bool],
    /// Optional cluster id per row, used for point colour.
    pub clusters: Option<&'a [Option<usize>]>,
    pub ellipse: Option<&'a ProjectedEllipse>,
    /// Vertices of `ellipse`, as written to the sidecar.
    pub ellipse_vertices: &'a [[f64; 2]],
    pub variable_names: &'a [String],
    pub title: String,
}

/// View centre in projected coordinates.
pub fn view_center(spec: &RenderSpec, ellipse: Option<&ProjectedEllipse>) -> [f64; 2] {
    match (spec.center, ellipse) {
        (true, Some(e)) => e.center,
        _ => [0.0, 0.0],
    }
}

/// Largest distance of a projected point or ellipse vertex from `center`.
pub fn fit_half_range(points: &[[f64; 2]], vertices: &[[f64; 2]], center: [f64; 2]) -> f64 {
    let r = points
        .iter()
        .chain(vertices)
        .map(|q| (q[0] - center[0]).hypot(q[1] - center[1]))
        .fold(0.0, f64::max);
    if r > 0.0 {
        r
    } else {
        1.0
    }
}

fn px(v: f64) -> String {
    format!("{:.3}", v)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Renders one frame. `half_range` must already be resolved.
pub fn render_frame(spec: &RenderSpec, content: &FrameContent, half_range: f64, center: [f64; 2]) -> Result<String> {
    let (w, h) = (spec.width as f64, spec.height as f64);
    let scale = (0.5 * w.min(h) - MARGIN) / half_range;
    let to_px = |q: [f64; 2]| -> (f64, f64) {
        (0.5 * w + (q[0] - center[0]) * scale, 0.5 * h - (q[1] - center[1]) * scale)
    };

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{}" height="{}" viewBox="0 0 {} {}">"#,
        spec.width, spec.height, spec.width, spec.height
    );
    let _ = writeln!(s, "<title>{}</title>", escape(&content.title));
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{}" height="{}" fill="white"/>"#, spec.width, spec.height);

    if !content.ellipse_vertices.is_empty() {
        let pts: Vec<String> = content
            .ellipse_vertices
            .iter()
            .map(|&v| {
                let (x, y) = to_px(v);
                format!("{},{}", px(x), px(y))
            })
            .collect();
        let _ = writeln!(
            s,
            r#"<polygon class="ellipse" points="{}" fill="none" stroke="{ELLIPSE_COLOR}" stroke-width="1.5"/>"#,
            pts.join(" ")
        );
    }
    if let Some(e) = content.ellipse {
        let (x, y) = to_px(e.center);
        let _ = writeln!(
            s,
            r#"<circle class="center" cx="{}" cy="{}" r="1.5" fill="{ELLIPSE_COLOR}"/>"#,
            px(x),
            px(y)
        );
    }

    let r = spec.point_radius;
    for i in 0..content.data.rows() {
        let q = content.basis.project(content.data.row(i))?;
        let (x, y) = to_px(q);
        let color = content
            .clusters
            .and_then(|c| c[i])
            .map(|c| spec.cluster_colors[c % spec.cluster_colors.len().max(1)].as_str())
            .unwrap_or(POINT_COLOR);
        if content.flagged[i] {
            let c = if content.clusters.is_some_and(|c| c[i].is_some()) { color } else { FLAG_COLOR };
            let _ = writeln!(
                s,
                r#"<path class="flagged" d="M{} {}L{} {}M{} {}L{} {}" stroke="{c}" stroke-width="1.5"/>"#,
                px(x - r),
                px(y - r),
                px(x + r),
                px(y + r),
                px(x - r),
                px(y + r),
                px(x + r),
                px(y - r)
            );
        } else {
            let _ = writeln!(
                s,
                r#"<circle class="point" cx="{}" cy="{}" r="{}" fill="{color}" fill-opacity="0.7"/>"#,
                px(x),
                px(y),
                px(r)
            );
        }
    }

    if spec.axes == AxesPosition::BottomLeft {
        let radius = 0.12 * w.min(h);
        let (cx, cy) = (MARGIN + radius, h - MARGIN - radius);
        let _ = writeln!(
            s,
            r##"<g class="axes"><circle cx="{}" cy="{}" r="{}" fill="none" stroke="#999999" stroke-width="0.5"/>"##,
            px(cx),
            px(cy),
            px(radius)
        );
        let m = content.basis.matrix();
        for j in 0..m.rows() {
            let (ex, ey) = (cx + radius * m[(j, 0)], cy - radius * m[(j, 1)]);
            let _ = writeln!(
                s,
                r##"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#333333" stroke-width="1"/>"##,
                px(cx),
                px(cy),
                px(ex),
                px(ey)
            );
            let label = content.variable_names.get(j).cloned().unwrap_or_else(|| format!("x{}", j + 1));
            let _ = writeln!(
                s,
                r##"<text x="{}" y="{}" font-family="sans-serif" font-size="9" fill="#333333">{}</text>"##,
                px(ex + 2.0),
                px(ey - 2.0),
                escape(&label)
            );
        }
        let _ = writeln!(s, "</g>");
    }
    let _ = writeln!(s, "</svg>");
    Ok(s)
}

/// Sidecar CSV of ellipse vertices per frame, at full precision.
pub struct EllipseSidecar<W: Write> {
    out: W,
}

impl<W: Write> EllipseSidecar<W> {
    pub fn new(mut out: W) -> Result<Self> {
        out.write_all(b"frame_id,vertex,y1,y2\n").map_err(|e| Error::io("<ellipse>", e))?;
        Ok(Self { out })
    }

    pub fn write_frame(&mut self, frame_id: usize, vertices: &[[f64; 2]]) -> Result<()> {
        let mut buf = String::new();
        for (k, v) in vertices.iter().enumerate() {
            let _ = writeln!(buf, "{frame_id},{k},{},{}", v[0], v[1]);
        }
        self.out
            .write_all(buf.as_bytes())
            .and_then(|_| self.out.flush())
            .map_err(|e| Error::io("<ellipse>", e))
    }
}
