//! Minimal PNG charts: line series and grouped bars on shared axes. No text;
//! series colours follow `PALETTE` in order.

use std::path::Path;

use image::{Rgb, RgbImage};

use crate::Error;

pub const PALETTE: [[u8; 3]; 6] = [
    [31, 119, 180],
    [214, 39, 40],
    [44, 160, 44],
    [255, 127, 14],
    [148, 103, 189],
    [23, 190, 207],
];

const W: u32 = 640;
const H: u32 = 400;
const MARGIN: u32 = 30;

struct Canvas {
    img: RgbImage,
    y_lo: f64,
    y_hi: f64,
}

impl Canvas {
    fn new(y_lo: f64, y_hi: f64) -> Self {
        let mut img = RgbImage::from_pixel(W, H, Rgb([255, 255, 255]));
        let axis = Rgb([0, 0, 0]);
        for x in MARGIN..W - MARGIN {
            img.put_pixel(x, H - MARGIN, axis);
        }
        for y in MARGIN..=H - MARGIN {
            img.put_pixel(MARGIN, y, axis);
        }
        let (y_lo, y_hi) = if y_hi > y_lo { (y_lo, y_hi) } else { (y_lo - 1.0, y_lo + 1.0) };
        Canvas { img, y_lo, y_hi }
    }

    fn py(&self, v: f64) -> f64 {
        let span = (H - 2 * MARGIN) as f64;
        (H - MARGIN) as f64 - (v - self.y_lo) / (self.y_hi - self.y_lo) * span
    }

    fn dot(&mut self, x: f64, y: f64, c: Rgb<u8>) {
        for dx in -1..=1 {
            for dy in -1..=1 {
                let (px, py) = (x.round() as i64 + dx, y.round() as i64 + dy);
                if px >= 0 && py >= 0 && (px as u32) < W && (py as u32) < H {
                    self.img.put_pixel(px as u32, py as u32, c);
                }
            }
        }
    }

    fn segment(&mut self, (x0, y0): (f64, f64), (x1, y1): (f64, f64), c: Rgb<u8>) {
        let steps = ((x1 - x0).abs().max((y1 - y0).abs()).ceil() as usize).max(1);
        for k in 0..=steps {
            let t = k as f64 / steps as f64;
            self.dot(x0 + t * (x1 - x0), y0 + t * (y1 - y0), c);
        }
    }

    fn save(self, path: &Path) -> Result<(), Error> {
        self.img
            .save(path)
            .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))
    }
}

fn bounds<'a>(values: impl Iterator<Item = &'a f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if lo.is_finite() {
        (lo.min(0.0), hi)
    } else {
        (0.0, 1.0)
    }
}

/// Each series is drawn against its index; all share one y range that includes 0.
pub fn line_plot(series: &[Vec<f64>], path: &Path) -> Result<(), Error> {
    let (lo, hi) = bounds(series.iter().flatten());
    let mut c = Canvas::new(lo, hi);
    let len = series.iter().map(Vec::len).max().unwrap_or(0);
    let span = (W - 2 * MARGIN) as f64;
    let px = |i: usize| MARGIN as f64 + if len > 1 { i as f64 / (len - 1) as f64 * span } else { span / 2.0 };
    for (k, s) in series.iter().enumerate() {
        let col = Rgb(PALETTE[k % PALETTE.len()]);
        let pts: Vec<(f64, f64)> = s
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_finite())
            .map(|(i, &v)| (px(i), c.py(v)))
            .collect();
        for w in pts.windows(2) {
            c.segment(w[0], w[1], col);
        }
        if let [p] = pts.as_slice() {
            c.dot(p.0, p.1, col);
        }
    }
    c.save(path)
}

/// `groups[g][k]` is the height of bar `k` in group `g`.
pub fn bar_plot(groups: &[Vec<f64>], path: &Path) -> Result<(), Error> {
    let (lo, hi) = bounds(groups.iter().flatten());
    let mut c = Canvas::new(lo, hi);
    let n = groups.len().max(1) as f64;
    let group_w = (W - 2 * MARGIN) as f64 / n;
    let zero = c.py(0.0);
    for (g, bars) in groups.iter().enumerate() {
        let bar_w = group_w * 0.8 / bars.len().max(1) as f64;
        for (k, &v) in bars.iter().enumerate() {
            if !v.is_finite() {
                continue;
            }
            let x0 = MARGIN as f64 + g as f64 * group_w + group_w * 0.1 + k as f64 * bar_w;
            let (top, bottom) = (c.py(v).min(zero), c.py(v).max(zero));
            let col = Rgb(PALETTE[k % PALETTE.len()]);
            for x in x0.round() as u32 + 1..(x0 + bar_w).round() as u32 {
                for y in top.round() as u32..=bottom.round() as u32 {
                    if x < W && y < H {
                        c.img.put_pixel(x, y, col);
                    }
                }
            }
        }
    }
    c.save(path)
}
