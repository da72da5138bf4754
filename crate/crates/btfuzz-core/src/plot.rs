//! Minimal deterministic chart rendering.
//!
//! Draws straight into RGB buffers (saved as PNG) with an embedded 5x7
//! bitmap font, so identical inputs always produce byte-identical files:
//! no system fonts, no timestamps, no randomness.

use image::{Rgb, RgbImage};
use std::path::Path;

pub const WHITE: [u8; 3] = [255, 255, 255];
pub const BLACK: [u8; 3] = [20, 20, 20];
pub const GREY: [u8; 3] = [150, 150, 150];
pub const LIGHT_GREY: [u8; 3] = [225, 225, 225];
pub const RED: [u8; 3] = [204, 36, 36];
pub const BLUE: [u8; 3] = [47, 94, 171];
pub const GREEN: [u8; 3] = [46, 139, 60];
pub const ORANGE: [u8; 3] = [230, 145, 20];
pub const PURPLE: [u8; 3] = [130, 60, 160];
pub const TEAL: [u8; 3] = [0, 140, 140];
pub const BROWN: [u8; 3] = [139, 94, 52];
pub const MAGENTA: [u8; 3] = [190, 40, 120];

/// Distinct fill colors cycled by cluster / series index.
pub const PALETTE: [[u8; 3]; 8] = [RED, BLUE, GREEN, ORANGE, PURPLE, TEAL, BROWN, MAGENTA];

/// Classic 5x7 dot-matrix glyphs for ASCII 0x20..=0x7E, column-major with
/// the least significant bit at the top row.
const FONT: [[u8; 5]; 95] = [
    [0x00, 0x00, 0x00, 0x00, 0x00], // ' '
    [0x00, 0x00, 0x5F, 0x00, 0x00], // '!'
    [0x00, 0x07, 0x00, 0x07, 0x00], // '"'
    [0x14, 0x7F, 0x14, 0x7F, 0x14], // '#'
    [0x24, 0x2A, 0x7F, 0x2A, 0x12], // '$'
    [0x23, 0x13, 0x08, 0x64, 0x62], // '%'
    [0x36, 0x49, 0x55, 0x22, 0x50], // '&'
    [0x00, 0x05, 0x03, 0x00, 0x00], // '\''
    [0x00, 0x1C, 0x22, 0x41, 0x00], // '('
    [0x00, 0x41, 0x22, 0x1C, 0x00], // ')'
    [0x08, 0x2A, 0x1C, 0x2A, 0x08], // '*'
    [0x08, 0x08, 0x3E, 0x08, 0x08], // '+'
    [0x00, 0x50, 0x30, 0x00, 0x00], // ','
    [0x08, 0x08, 0x08, 0x08, 0x08], // '-'
    [0x00, 0x60, 0x60, 0x00, 0x00], // '.'
    [0x20, 0x10, 0x08, 0x04, 0x02], // '/'
    [0x3E, 0x51, 0x49, 0x45, 0x3E], // '0'
    [0x00, 0x42, 0x7F, 0x40, 0x00], // '1'
    [0x42, 0x61, 0x51, 0x49, 0x46], // '2'
    [0x21, 0x41, 0x45, 0x4B, 0x31], // '3'
    [0x18, 0x14, 0x12, 0x7F, 0x10], // '4'
    [0x27, 0x45, 0x45, 0x45, 0x39], // '5'
    [0x3C, 0x4A, 0x49, 0x49, 0x30], // '6'
    [0x01, 0x71, 0x09, 0x05, 0x03], // '7'
    [0x36, 0x49, 0x49, 0x49, 0x36], // '8'
    [0x06, 0x49, 0x49, 0x29, 0x1E], // '9'
    [0x00, 0x36, 0x36, 0x00, 0x00], // ':'
    [0x00, 0x56, 0x36, 0x00, 0x00], // ';'
    [0x00, 0x08, 0x14, 0x22, 0x41], // '<'
    [0x14, 0x14, 0x14, 0x14, 0x14], // '='
    [0x41, 0x22, 0x14, 0x08, 0x00], // '>'
    [0x02, 0x01, 0x51, 0x09, 0x06], // '?'
    [0x32, 0x49, 0x79, 0x41, 0x3E], // '@'
    [0x7E, 0x11, 0x11, 0x11, 0x7E], // 'A'
    [0x7F, 0x49, 0x49, 0x49, 0x36], // 'B'
    [0x3E, 0x41, 0x41, 0x41, 0x22], // 'C'
    [0x7F, 0x41, 0x41, 0x22, 0x1C], // 'D'
    [0x7F, 0x49, 0x49, 0x49, 0x41], // 'E'
    [0x7F, 0x09, 0x09, 0x09, 0x01], // 'F'
    [0x3E, 0x41, 0x49, 0x49, 0x7A], // 'G'
    [0x7F, 0x08, 0x08, 0x08, 0x7F], // 'H'
    [0x00, 0x41, 0x7F, 0x41, 0x00], // 'I'
    [0x20, 0x40, 0x41, 0x3F, 0x01], // 'J'
    [0x7F, 0x08, 0x14, 0x22, 0x41], // 'K'
    [0x7F, 0x40, 0x40, 0x40, 0x40], // 'L'
    [0x7F, 0x02, 0x0C, 0x02, 0x7F], // 'M'
    [0x7F, 0x04, 0x08, 0x10, 0x7F], // 'N'
    [0x3E, 0x41, 0x41, 0x41, 0x3E], // 'O'
    [0x7F, 0x09, 0x09, 0x09, 0x06], // 'P'
    [0x3E, 0x41, 0x51, 0x21, 0x5E], // 'Q'
    [0x7F, 0x09, 0x19, 0x29, 0x46], // 'R'
    [0x46, 0x49, 0x49, 0x49, 0x31], // 'S'
    [0x01, 0x01, 0x7F, 0x01, 0x01], // 'T'
    [0x3F, 0x40, 0x40, 0x40, 0x3F], // 'U'
    [0x1F, 0x20, 0x40, 0x20, 0x1F], // 'V'
    [0x3F, 0x40, 0x38, 0x40, 0x3F], // 'W'
    [0x63, 0x14, 0x08, 0x14, 0x63], // 'X'
    [0x07, 0x08, 0x70, 0x08, 0x07], // 'Y'
    [0x61, 0x51, 0x49, 0x45, 0x43], // 'Z'
    [0x00, 0x7F, 0x41, 0x41, 0x00], // '['
    [0x02, 0x04, 0x08, 0x10, 0x20], // '\\'
    [0x00, 0x41, 0x41, 0x7F, 0x00], // ']'
    [0x04, 0x02, 0x01, 0x02, 0x04], // '^'
    [0x40, 0x40, 0x40, 0x40, 0x40], // '_'
    [0x00, 0x01, 0x02, 0x04, 0x00], // '`'
    [0x20, 0x54, 0x54, 0x54, 0x78], // 'a'
    [0x7F, 0x48, 0x44, 0x44, 0x38], // 'b'
    [0x38, 0x44, 0x44, 0x44, 0x20], // 'c'
    [0x38, 0x44, 0x44, 0x48, 0x7F], // 'd'
    [0x38, 0x54, 0x54, 0x54, 0x18], // 'e'
    [0x08, 0x7E, 0x09, 0x01, 0x02], // 'f'
    [0x0C, 0x52, 0x52, 0x52, 0x3E], // 'g'
    [0x7F, 0x08, 0x04, 0x04, 0x78], // 'h'
    [0x00, 0x44, 0x7D, 0x40, 0x00], // 'i'
    [0x20, 0x40, 0x44, 0x3D, 0x00], // 'j'
    [0x7F, 0x10, 0x28, 0x44, 0x00], // 'k'
    [0x00, 0x41, 0x7F, 0x40, 0x00], // 'l'
    [0x7C, 0x04, 0x18, 0x04, 0x78], // 'm'
    [0x7C, 0x08, 0x04, 0x04, 0x78], // 'n'
    [0x38, 0x44, 0x44, 0x44, 0x38], // 'o'
    [0x7C, 0x14, 0x14, 0x14, 0x08], // 'p'
    [0x08, 0x14, 0x14, 0x18, 0x7C], // 'q'
    [0x7C, 0x08, 0x04, 0x04, 0x08], // 'r'
    [0x48, 0x54, 0x54, 0x54, 0x20], // 's'
    [0x04, 0x3F, 0x44, 0x40, 0x20], // 't'
    [0x3C, 0x40, 0x40, 0x20, 0x7C], // 'u'
    [0x1C, 0x20, 0x40, 0x20, 0x1C], // 'v'
    [0x3C, 0x40, 0x30, 0x40, 0x3C], // 'w'
    [0x44, 0x28, 0x10, 0x28, 0x44], // 'x'
    [0x0C, 0x50, 0x50, 0x50, 0x3C], // 'y'
    [0x44, 0x64, 0x54, 0x4C, 0x44], // 'z'
    [0x00, 0x08, 0x36, 0x41, 0x00], // '{'
    [0x00, 0x00, 0x7F, 0x00, 0x00], // '|'
    [0x00, 0x41, 0x36, 0x08, 0x00], // '}'
    [0x08, 0x04, 0x08, 0x10, 0x08], // '~'
];

const GLYPH_W: i32 = 6; // 5 columns + 1 space
const GLYPH_H: i32 = 8; // 7 rows + 1 space

/// RGB raster with integer-pixel drawing primitives.
pub struct Canvas {
    img: RgbImage,
}

impl Canvas {
    pub fn new(width: u32, height: u32) -> Self {
        let mut img = RgbImage::new(width, height);
        for p in img.pixels_mut() {
            *p = Rgb(WHITE);
        }
        Self { img }
    }

    pub fn width(&self) -> i32 {
        self.img.width() as i32
    }

    pub fn height(&self) -> i32 {
        self.img.height() as i32
    }

    pub fn put(&mut self, x: i32, y: i32, color: [u8; 3]) {
        if x >= 0 && y >= 0 && (x as u32) < self.img.width() && (y as u32) < self.img.height() {
            self.img.put_pixel(x as u32, y as u32, Rgb(color));
        }
    }

    pub fn fill_rect(&mut self, x: i32, y: i32, w: i32, h: i32, color: [u8; 3]) {
        for yy in y..y + h {
            for xx in x..x + w {
                self.put(xx, yy, color);
            }
        }
    }

    pub fn rect(&mut self, x: i32, y: i32, w: i32, h: i32, color: [u8; 3]) {
        self.line(x, y, x + w - 1, y, color);
        self.line(x, y + h - 1, x + w - 1, y + h - 1, color);
        self.line(x, y, x, y + h - 1, color);
        self.line(x + w - 1, y, x + w - 1, y + h - 1, color);
    }

    pub fn line(&mut self, x0: i32, y0: i32, x1: i32, y1: i32, color: [u8; 3]) {
        let (mut x, mut y) = (x0, y0);
        let dx = (x1 - x0).abs();
        let dy = -(y1 - y0).abs();
        let sx = if x0 < x1 { 1 } else { -1 };
        let sy = if y0 < y1 { 1 } else { -1 };
        let mut err = dx + dy;
        loop {
            self.put(x, y, color);
            if x == x1 && y == y1 {
                break;
            }
            let e2 = 2 * err;
            if e2 >= dy {
                err += dy;
                x += sx;
            }
            if e2 <= dx {
                err += dx;
                y += sy;
            }
        }
    }

    pub fn disc(&mut self, cx: i32, cy: i32, r: i32, color: [u8; 3]) {
        for dy in -r..=r {
            for dx in -r..=r {
                if dx * dx + dy * dy <= r * r {
                    self.put(cx + dx, cy + dy, color);
                }
            }
        }
    }

    /// Draws `text` with its top-left corner at (x, y); unknown characters
    /// render as spaces.
    pub fn text(&mut self, x: i32, y: i32, text: &str, color: [u8; 3], scale: i32) {
        let mut cx = x;
        for ch in text.chars() {
            let idx = (ch as usize).wrapping_sub(0x20);
            if idx < FONT.len() {
                let glyph = &FONT[idx];
                for (col, bits) in glyph.iter().enumerate() {
                    for row in 0..7 {
                        if bits >> row & 1 == 1 {
                            let px = cx + col as i32 * scale;
                            let py = y + row * scale;
                            self.fill_rect(px, py, scale, scale, color);
                        }
                    }
                }
            }
            cx += GLYPH_W * scale;
        }
    }

    pub fn text_width(text: &str, scale: i32) -> i32 {
        text.chars().count() as i32 * GLYPH_W * scale
    }

    pub fn text_height(scale: i32) -> i32 {
        GLYPH_H * scale
    }

    pub fn into_image(self) -> RgbImage {
        self.img
    }

    pub fn save(&self, path: &Path) -> Result<(), image::ImageError> {
        self.img.save(path)
    }
}

/// Short human tick label: fixed decimals by magnitude, trailing zeros cut.
pub fn format_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    let s = if a >= 1000.0 {
        format!("{v:.0}")
    } else if a >= 1.0 {
        format!("{v:.2}")
    } else if a >= 0.01 {
        format!("{v:.3}")
    } else {
        return format!("{v:.1e}");
    };
    let trimmed = s.trim_end_matches('0').trim_end_matches('.');
    trimmed.to_string()
}

/// A framed data region mapping data coordinates onto canvas pixels.
#[derive(Debug, Clone, Copy)]
pub struct Axes {
    pub left: i32,
    pub top: i32,
    pub right: i32,
    pub bottom: i32,
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Axes {
    /// Frame inside the pixel box, with degenerate data ranges padded so
    /// everything stays drawable.
    pub fn new(
        (left, top, right, bottom): (i32, i32, i32, i32),
        (x_min, x_max): (f64, f64),
        (y_min, y_max): (f64, f64),
    ) -> Self {
        let (x_min, x_max) = pad_range(x_min, x_max);
        let (y_min, y_max) = pad_range(y_min, y_max);
        Self { left, top, right, bottom, x_min, x_max, y_min, y_max }
    }

    pub fn map(&self, x: f64, y: f64) -> (i32, i32) {
        let fx = (x - self.x_min) / (self.x_max - self.x_min);
        let fy = (y - self.y_min) / (self.y_max - self.y_min);
        let px = self.left as f64 + fx * (self.right - self.left) as f64;
        let py = self.bottom as f64 - fy * (self.bottom - self.top) as f64;
        (px.round() as i32, py.round() as i32)
    }

    /// Frame, tick marks with labels, and optional axis titles.
    pub fn draw(&self, canvas: &mut Canvas, x_label: &str, y_label: &str) {
        canvas.rect(
            self.left,
            self.top,
            self.right - self.left + 1,
            self.bottom - self.top + 1,
            BLACK,
        );
        let ticks = 5;
        for i in 0..=ticks {
            let f = i as f64 / ticks as f64;
            let xv = self.x_min + f * (self.x_max - self.x_min);
            let yv = self.y_min + f * (self.y_max - self.y_min);
            let (px, _) = self.map(xv, self.y_min);
            let (_, py) = self.map(self.x_min, yv);
            canvas.line(px, self.bottom, px, self.bottom + 4, BLACK);
            canvas.line(self.left - 4, py, self.left, py, BLACK);
            let xl = format_tick(xv);
            canvas.text(px - Canvas::text_width(&xl, 1) / 2, self.bottom + 7, &xl, BLACK, 1);
            let yl = format_tick(yv);
            canvas.text(self.left - 6 - Canvas::text_width(&yl, 1), py - 3, &yl, BLACK, 1);
        }
        if !x_label.is_empty() {
            let w = Canvas::text_width(x_label, 1);
            canvas.text((self.left + self.right) / 2 - w / 2, self.bottom + 18, x_label, BLACK, 1);
        }
        if !y_label.is_empty() {
            canvas.text(self.left, self.top - 12, y_label, BLACK, 1);
        }
    }
}

fn pad_range(min: f64, max: f64) -> (f64, f64) {
    if !min.is_finite() || !max.is_finite() {
        return (0.0, 1.0);
    }
    if max > min {
        (min, max)
    } else {
        let pad = if min == 0.0 { 0.5 } else { min.abs() * 0.1 + 0.5 };
        (min - pad, max + pad)
    }
}

/// One scatter panel of a multi-panel figure.
pub struct Panel {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    /// (x, y, color) triples.
    pub points: Vec<(f64, f64, [u8; 3])>,
}

fn panel_bounds(points: &[(f64, f64, [u8; 3])]) -> ((f64, f64), (f64, f64)) {
    let mut xs = (f64::INFINITY, f64::NEG_INFINITY);
    let mut ys = (f64::INFINITY, f64::NEG_INFINITY);
    for (x, y, _) in points {
        xs = (xs.0.min(*x), xs.1.max(*x));
        ys = (ys.0.min(*y), ys.1.max(*y));
    }
    if points.is_empty() {
        ((0.0, 1.0), (0.0, 1.0))
    } else {
        (xs, ys)
    }
}

/// Grid of scatter panels, filled row by row, two per row.
pub fn scatter_grid(panels: &[Panel], title: &str) -> RgbImage {
    let cols = 2.min(panels.len().max(1));
    let rows = panels.len().div_ceil(cols).max(1);
    let (pw, ph) = (360, 240);
    let (mx, my) = (55, 45);
    let width = (cols as i32 * (pw + mx) + 25) as u32;
    let height = (rows as i32 * (ph + my) + 55) as u32;
    let mut canvas = Canvas::new(width, height);
    canvas.text(15, 10, title, BLACK, 2);

    for (i, panel) in panels.iter().enumerate() {
        let (row, col) = (i / cols, i % cols);
        let left = 25 + mx + col as i32 * (pw + mx);
        let top = 40 + my + row as i32 * (ph + my);
        let (xr, yr) = panel_bounds(&panel.points);
        let axes = Axes::new((left, top, left + pw - mx, top + ph - my), xr, yr);
        canvas.text(left, top - 22, &panel.title, BLACK, 1);
        axes.draw(&mut canvas, &panel.x_label, &panel.y_label);
        for (x, y, color) in &panel.points {
            let (px, py) = axes.map(*x, *y);
            canvas.disc(px, py, 2, *color);
        }
    }
    canvas.into_image()
}

/// Cabinet-projected 3D scatter: the depth axis shrinks and slants the
/// point positions; points are drawn far-to-near.
pub fn scatter_3d(
    points: &[(f64, f64, f64, [u8; 3])],
    labels: (&str, &str, &str),
    title: &str,
    legend: &[(String, [u8; 3])],
) -> RgbImage {
    let mut canvas = Canvas::new(640, 520);
    canvas.text(15, 10, title, BLACK, 2);

    let mut bounds = [(f64::INFINITY, f64::NEG_INFINITY); 3];
    for (x, y, z, _) in points {
        for (b, v) in bounds.iter_mut().zip([*x, *y, *z]) {
            *b = (b.0.min(v), b.1.max(v));
        }
    }
    let norm = |v: f64, (lo, hi): (f64, f64)| -> f64 {
        let (lo, hi) = pad_range(lo, hi);
        (v - lo) / (hi - lo)
    };

    // Screen placement of the unit cube under a cabinet projection.
    let origin = (120.0, 440.0);
    let ex = (380.0, 0.0);
    let ey = (0.0, -300.0);
    let ez = (130.0, -90.0);
    let project = |u: f64, v: f64, w: f64| -> (i32, i32) {
        let px = origin.0 + u * ex.0 + v * ey.0 + w * ez.0;
        let py = origin.1 + u * ex.1 + v * ey.1 + w * ez.1;
        (px.round() as i32, py.round() as i32)
    };

    // Axis tripod with labels at the far ends.
    let o = project(0.0, 0.0, 0.0);
    for (end, label) in [
        (project(1.05, 0.0, 0.0), labels.0),
        (project(0.0, 1.05, 0.0), labels.1),
        (project(0.0, 0.0, 1.05), labels.2),
    ] {
        canvas.line(o.0, o.1, end.0, end.1, BLACK);
        canvas.text(end.0 + 4, end.1 - 4, label, BLACK, 1);
    }
    // Light cube edges for depth reference.
    for (a, b) in [
        ((1.0, 0.0, 0.0), (1.0, 1.0, 0.0)),
        ((0.0, 1.0, 0.0), (1.0, 1.0, 0.0)),
        ((0.0, 0.0, 1.0), (1.0, 0.0, 1.0)),
        ((0.0, 0.0, 1.0), (0.0, 1.0, 1.0)),
        ((1.0, 0.0, 1.0), (1.0, 1.0, 1.0)),
        ((0.0, 1.0, 1.0), (1.0, 1.0, 1.0)),
        ((1.0, 0.0, 0.0), (1.0, 0.0, 1.0)),
        ((0.0, 1.0, 0.0), (0.0, 1.0, 1.0)),
    ] {
        let pa = project(a.0, a.1, a.2);
        let pb = project(b.0, b.1, b.2);
        canvas.line(pa.0, pa.1, pb.0, pb.1, LIGHT_GREY);
    }

    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|a, b| points[*a].2.partial_cmp(&points[*b].2).unwrap().reverse());
    for i in order {
        let (x, y, z, color) = points[i];
        let (px, py) =
            project(norm(x, bounds[0]), norm(y, bounds[1]), norm(z, bounds[2]));
        canvas.disc(px, py, 3, color);
    }

    for (i, (name, color)) in legend.iter().enumerate() {
        let y = 40 + i as i32 * 14;
        canvas.disc(550, y + 3, 3, *color);
        canvas.text(560, y, name, BLACK, 1);
    }
    canvas.into_image()
}

/// Diverging color scale: -1 blue, 0 white, +1 red.
pub fn diverging_color(v: f64) -> [u8; 3] {
    let v = v.clamp(-1.0, 1.0);
    let lerp = |a: u8, b: u8, f: f64| (a as f64 + (b as f64 - a as f64) * f).round() as u8;
    if v >= 0.0 {
        [lerp(255, RED[0], v), lerp(255, RED[1], v), lerp(255, RED[2], v)]
    } else {
        let f = -v;
        [lerp(255, BLUE[0], f), lerp(255, BLUE[1], f), lerp(255, BLUE[2], f)]
    }
}

/// Square heatmap of a labeled matrix with cell values printed.
pub fn heatmap(matrix: &[Vec<f64>], labels: &[String], title: &str) -> RgbImage {
    let n = matrix.len().max(1);
    let cell = 64i32;
    let left = 110i32;
    let top = 70i32;
    let width = (left + n as i32 * cell + 30) as u32;
    let height = (top + n as i32 * cell + 30) as u32;
    let mut canvas = Canvas::new(width, height);
    canvas.text(15, 10, title, BLACK, 2);

    for (i, row) in matrix.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let x = left + j as i32 * cell;
            let y = top + i as i32 * cell;
            canvas.fill_rect(x, y, cell, cell, diverging_color(*v));
            canvas.rect(x, y, cell, cell, GREY);
            let label = format!("{v:.2}");
            let tw = Canvas::text_width(&label, 1);
            canvas.text(x + cell / 2 - tw / 2, y + cell / 2 - 3, &label, BLACK, 1);
        }
    }
    for (i, name) in labels.iter().enumerate() {
        let short: String = name.chars().take(14).collect();
        canvas.text(
            left - 6 - Canvas::text_width(&short, 1),
            top + i as i32 * cell + cell / 2 - 3,
            &short,
            BLACK,
            1,
        );
        canvas.text(left + i as i32 * cell + 4, top - 12, &short, BLACK, 1);
    }
    canvas.into_image()
}

/// Polyline chart; each series is (points, color, legend label).
pub fn line_chart(
    series: &[(Vec<(f64, f64)>, [u8; 3], String)],
    title: &str,
    x_label: &str,
    y_label: &str,
) -> RgbImage {
    let mut canvas = Canvas::new(720, 420);
    canvas.text(15, 10, title, BLACK, 2);

    let mut xr = (f64::INFINITY, f64::NEG_INFINITY);
    let mut yr = (f64::INFINITY, f64::NEG_INFINITY);
    for (pts, _, _) in series {
        for (x, y) in pts {
            xr = (xr.0.min(*x), xr.1.max(*x));
            yr = (yr.0.min(*y), yr.1.max(*y));
        }
    }
    if !xr.0.is_finite() {
        xr = (0.0, 1.0);
        yr = (0.0, 1.0);
    }
    let axes = Axes::new((80, 60, 690, 370), xr, yr);
    axes.draw(&mut canvas, x_label, y_label);
    for (pts, color, _) in series {
        let mut last: Option<(i32, i32)> = None;
        for (x, y) in pts {
            let p = axes.map(*x, *y);
            if let Some(l) = last {
                canvas.line(l.0, l.1, p.0, p.1, *color);
            }
            last = Some(p);
        }
    }
    for (i, (_, color, label)) in series.iter().enumerate() {
        let y = 40 + i as i32 * 14;
        canvas.fill_rect(560, y + 2, 10, 3, *color);
        canvas.text(575, y, label, BLACK, 1);
    }
    canvas.into_image()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_marks_pixels_and_stays_in_bounds() {
        let mut canvas = Canvas::new(120, 30);
        canvas.text(2, 2, "Hello 42", BLACK, 1);
        // Off-canvas drawing must not panic.
        canvas.text(-50, 100, "clip", RED, 2);
        let img = canvas.into_image();
        let dark = img.pixels().filter(|p| p.0 == BLACK).count();
        assert!(dark > 50, "only {dark} glyph pixels");
    }

    #[test]
    fn axes_map_corners() {
        let axes = Axes::new((10, 10, 110, 210), (0.0, 10.0), (-1.0, 1.0));
        assert_eq!(axes.map(0.0, -1.0), (10, 210));
        assert_eq!(axes.map(10.0, 1.0), (110, 10));
        assert_eq!(axes.map(5.0, 0.0), (60, 110));
    }

    #[test]
    fn degenerate_ranges_are_padded() {
        let axes = Axes::new((0, 0, 100, 100), (3.0, 3.0), (0.0, 0.0));
        assert!(axes.x_max > axes.x_min);
        assert!(axes.y_max > axes.y_min);
        let (px, py) = axes.map(3.0, 0.0);
        assert!((0..=100).contains(&px) && (0..=100).contains(&py));
    }

    #[test]
    fn diverging_scale_hits_anchor_colors() {
        assert_eq!(diverging_color(0.0), [255, 255, 255]);
        assert_eq!(diverging_color(1.0), RED);
        assert_eq!(diverging_color(-1.0), BLUE);
        assert_eq!(diverging_color(5.0), RED);
    }

    #[test]
    fn charts_render_deterministic_bytes() {
        let panels = vec![Panel {
            title: "var".into(),
            x_label: "iteration".into(),
            y_label: "value".into(),
            points: vec![(0.0, 1.0, RED), (1.0, 2.0, BLUE), (2.0, 0.5, GREY)],
        }];
        let a = scatter_grid(&panels, "panels");
        let b = scatter_grid(&panels, "panels");
        assert_eq!(a.as_raw(), b.as_raw());

        let m = vec![vec![1.0, -0.5], vec![-0.5, 1.0]];
        let h1 = heatmap(&m, &["a".into(), "b".into()], "corr");
        let h2 = heatmap(&m, &["a".into(), "b".into()], "corr");
        assert_eq!(h1.as_raw(), h2.as_raw());

        let pts = vec![(0.1, 0.2, 0.3, RED), (0.9, 0.8, 0.7, BLUE)];
        let s1 = scatter_3d(&pts, ("x", "y", "z"), "cube", &[("one".into(), RED)]);
        let s2 = scatter_3d(&pts, ("x", "y", "z"), "cube", &[("one".into(), RED)]);
        assert_eq!(s1.as_raw(), s2.as_raw());
    }

    #[test]
    fn line_chart_draws_series() {
        let series = vec![(
            vec![(0.0, 0.0), (1.0, 1.0), (2.0, 0.5)],
            GREEN,
            "best".to_string(),
        )];
        let img = line_chart(&series, "progress", "iteration", "fitness");
        let green = img.pixels().filter(|p| p.0 == GREEN).count();
        assert!(green > 100, "only {green} series pixels");
    }
}
