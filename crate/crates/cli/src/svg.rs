//! SVG 1.1 rendering of a cheese.
//!
//! The outer disc is drawn filled and every deleted disc on top of it in
//! the background color. Rings of a unit can hold millions of discs, so they
//! are enumerated only over the angular window the viewport sees, discs
//! smaller than `min_radius` are skipped and drawing stops after
//! `max_discs` circles.

use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;

use fromage_core::{Cheese, Disc, DiscRing, Point};

pub const CANVAS_PX: f64 = 800.0;
const BACKGROUND: &str = "#ffffff";
const FILL: &str = "#f2c94c";

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Viewport {
    pub center: Point,
    /// Side length of the square window.
    pub width: f64,
}

impl Viewport {
    pub fn new(cx: f64, cy: f64, width: f64) -> Self {
        Viewport {
            center: Point::new(cx, cy),
            width,
        }
    }

    fn half(&self) -> f64 {
        0.5 * self.width
    }

    pub fn pixel(&self) -> f64 {
        self.width / CANVAS_PX
    }

    /// Whether a disc meets the window.
    fn meets(&self, c: Point, r: f64) -> bool {
        let h = self.half();
        let dx = ((c.re - self.center.re).abs() - h).max(0.0);
        let dy = ((c.im - self.center.im).abs() - h).max(0.0);
        dx * dx + dy * dy < r * r || (dx == 0.0 && dy == 0.0)
    }

    fn map(&self, p: Point) -> (f64, f64) {
        let s = CANVAS_PX / self.width;
        (
            (p.re - self.center.re + self.half()) * s,
            (self.center.im + self.half() - p.im) * s,
        )
    }

    /// Angular window `[lo, hi]` (lo may be negative) under which the
    /// square is seen from `c`, widened by `pad`; `None` if it surrounds `c`.
    fn angles_from(&self, c: Point, pad: f64) -> Option<(f64, f64)> {
        let h = self.half() + pad;
        let rel = self.center - c;
        if rel.re.abs() <= h && rel.im.abs() <= h {
            return None;
        }
        let mid = rel.im.atan2(rel.re);
        let mut lo = 0.0f64;
        let mut hi = 0.0f64;
        for (sx, sy) in [(-1.0, -1.0), (-1.0, 1.0), (1.0, -1.0), (1.0, 1.0)] {
            let corner = rel + Point::new(sx * h, sy * h);
            let mut d = corner.im.atan2(corner.re) - mid;
            if d > PI {
                d -= TAU;
            } else if d < -PI {
                d += TAU;
            }
            lo = lo.min(d);
            hi = hi.max(d);
        }
        Some((mid + lo, mid + hi))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RenderOptions {
    pub viewport: Viewport,
    pub min_radius: f64,
    pub max_discs: u64,
}

impl RenderOptions {
    /// Whole-cheese view with a half-pixel radius floor.
    pub fn new(viewport: Viewport) -> Self {
        RenderOptions {
            viewport,
            min_radius: 0.5 * viewport.pixel(),
            max_discs: 20_000,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RenderStats {
    pub drawn: u64,
    pub below_min_radius: u128,
    pub truncated: bool,
}

struct Canvas<'a> {
    out: String,
    opts: &'a RenderOptions,
    stats: RenderStats,
}

impl Canvas<'_> {
    /// Returns false once the cap is reached.
    fn disc(&mut self, c: Point, r: f64) -> bool {
        if self.stats.drawn >= self.opts.max_discs {
            self.stats.truncated = true;
            return false;
        }
        let (x, y) = self.opts.viewport.map(c);
        let rr = r * CANVAS_PX / self.opts.viewport.width;
        let _ = writeln!(
            self.out,
            r#"<circle cx="{x}" cy="{y}" r="{rr}" fill="{BACKGROUND}"/>"#
        );
        self.stats.drawn += 1;
        true
    }

    fn ring(&mut self, ring: &DiscRing) -> bool {
        let vp = self.opts.viewport;
        if ring.rho < self.opts.min_radius {
            self.stats.below_min_radius += u128::from(ring.count);
            return true;
        }
        let (inner, outer) = ring.shell();
        // the annulus holding the ring must meet the window
        if !vp.meets(ring.center, outer) {
            return true;
        }
        let h = vp.half();
        let far = (vp.center - ring.center).norm() + h * std::f64::consts::SQRT_2;
        if far < inner {
            return true;
        }
        let n = ring.count as f64;
        let (k_lo, k_hi) = match vp.angles_from(ring.center, ring.rho) {
            None => (0i128, ring.count as i128 - 1),
            Some((lo, hi)) => {
                let lo = (lo / TAU * n).floor() as i128 - 1;
                let hi = (hi / TAU * n).ceil() as i128 + 1;
                if hi - lo + 1 >= ring.count as i128 {
                    (0, ring.count as i128 - 1)
                } else {
                    (lo, hi)
                }
            }
        };
        for k in k_lo..=k_hi {
            let idx = k.rem_euclid(ring.count as i128) as u64;
            let d = ring.disc(idx);
            if vp.meets(d.center, d.radius) && !self.disc(d.center, d.radius) {
                return false;
            }
        }
        true
    }

    fn plain(&mut self, d: &Disc) -> bool {
        if !self.opts.viewport.meets(d.center, d.radius) {
            return true;
        }
        if d.radius < self.opts.min_radius {
            self.stats.below_min_radius += 1;
            return true;
        }
        self.disc(d.center, d.radius)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace("--", "- -")
}

/// Render `cheese`; `header` is echoed into a leading XML comment.
pub fn render(cheese: &Cheese, opts: &RenderOptions, header: &str) -> (String, RenderStats) {
    let vp = opts.viewport;
    let mut canvas = Canvas {
        out: String::new(),
        opts,
        stats: RenderStats::default(),
    };
    let outer = cheese.outer();
    let (ox, oy) = vp.map(outer.center);
    let or = outer.radius * CANVAS_PX / vp.width;
    let mut body = String::new();
    let _ = writeln!(
        body,
        r#"<rect x="0" y="0" width="{CANVAS_PX}" height="{CANVAS_PX}" fill="{BACKGROUND}"/>"#
    );
    let _ = writeln!(
        body,
        r#"<circle cx="{ox}" cy="{oy}" r="{or}" fill="{FILL}"/>"#
    );

    'draw: {
        for d in cheese.extra_discs() {
            if !canvas.plain(d) {
                break 'draw;
            }
        }
        for u in cheese.units() {
            let (_, reach) = u.unit.shell();
            if !vp.meets(u.unit.center(), reach) {
                continue;
            }
            for ring in u.unit.rings() {
                if !canvas.ring(ring) {
                    break 'draw;
                }
            }
        }
    }
    let stats = canvas.stats;
    let mut note = format!("{} deleted discs drawn", stats.drawn);
    if stats.below_min_radius > 0 {
        let _ = write!(
            note,
            "; {} below min radius {:e}",
            stats.below_min_radius, opts.min_radius
        );
    }
    if stats.truncated {
        let _ = write!(note, "; truncated at max-discs {}", opts.max_discs);
    }
    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(svg, "<!-- {} -->", escape(header));
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{CANVAS_PX}" height="{CANVAS_PX}" viewBox="0 0 {CANVAS_PX} {CANVAS_PX}">"#
    );
    svg.push_str(&body);
    svg.push_str(&canvas.out);
    let _ = writeln!(
        svg,
        r##"<text x="8" y="{}" font-family="monospace" font-size="12" fill="#333333">{}</text>"##,
        CANVAS_PX - 8.0,
        escape(&note)
    );
    svg.push_str("</svg>\n");
    (svg, stats)
}
