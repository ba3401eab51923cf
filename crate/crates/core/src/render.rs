//! Pictures of configurations: one filled disc per vertex, colored by chip
//! count. Binary PPM (P6) or SVG, both byte-deterministic.

use std::fmt::Write as _;
use std::path::Path;

use crate::gasket::{side_length, GasketGraph};
use crate::sandpile::Configuration;
use crate::{Error, Result};

pub type Rgb = [u8; 3];

/// Colors for 0, 1, 2, 3 chips and for 4 or more.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Palette {
    pub by_count: [Rgb; 4],
    pub unstable: Rgb,
}

impl Default for Palette {
    fn default() -> Self {
        Self {
            by_count: [[200, 200, 200], [0, 160, 0], [220, 0, 0], [0, 0, 220]],
            unstable: [0, 0, 0],
        }
    }
}

impl Palette {
    pub fn color(&self, chips: u64) -> Rgb {
        self.by_count.get(chips as usize).copied().unwrap_or(self.unstable)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageFormat {
    Ppm,
    Svg,
}

impl ImageFormat {
    /// From a file extension; anything but `.svg` is a pixmap.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("svg") => ImageFormat::Svg,
            _ => ImageFormat::Ppm,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RenderSpec {
    pub format: ImageFormat,
    /// Pixels per lattice edge.
    pub scale: u32,
    pub palette: Palette,
}

impl Default for RenderSpec {
    fn default() -> Self {
        Self {
            format: ImageFormat::Ppm,
            scale: 16,
            palette: Palette::default(),
        }
    }
}

const BACKGROUND: Rgb = [255, 255, 255];

struct Layout {
    width: u32,
    height: u32,
    radius: f64,
    /// Disc centers in pixels, y downwards.
    centers: Vec<(f64, f64)>,
}

fn layout(graph: &GasketGraph, scale: u32) -> Layout {
    let s = scale.max(2) as f64;
    let margin = s;
    let side = side_length(graph.level()) as f64;
    let width = (side * s + 2.0 * margin).ceil() as u32;
    let height = (side * 3f64.sqrt() / 2.0 * s + 2.0 * margin).ceil() as u32;
    let centers = graph
        .vertices()
        .iter()
        .map(|c| {
            let (x, y) = c.position();
            (margin + x * s, height as f64 - margin - y * s)
        })
        .collect();
    Layout {
        width,
        height,
        radius: 0.35 * s,
        centers,
    }
}

pub fn render(graph: &GasketGraph, config: &Configuration, spec: &RenderSpec) -> Result<Vec<u8>> {
    config.check_graph(graph)?;
    if spec.scale == 0 {
        return Err(Error::Precondition("render scale must be positive".into()));
    }
    let l = layout(graph, spec.scale);
    Ok(match spec.format {
        ImageFormat::Ppm => ppm(&l, config, &spec.palette),
        ImageFormat::Svg => svg(&l, config, &spec.palette).into_bytes(),
    })
}

fn ppm(l: &Layout, config: &Configuration, palette: &Palette) -> Vec<u8> {
    let (w, h) = (l.width as usize, l.height as usize);
    let mut pixels: Vec<Rgb> = vec![BACKGROUND; w * h];
    let r2 = l.radius * l.radius;
    for (&(cx, cy), &chips) in l.centers.iter().zip(config.chips()) {
        let color = palette.color(chips);
        let x0 = (cx - l.radius).floor().max(0.0) as usize;
        let x1 = ((cx + l.radius).ceil() as usize).min(w - 1);
        let y0 = (cy - l.radius).floor().max(0.0) as usize;
        let y1 = ((cy + l.radius).ceil() as usize).min(h - 1);
        for y in y0..=y1 {
            for x in x0..=x1 {
                let (dx, dy) = (x as f64 + 0.5 - cx, y as f64 + 0.5 - cy);
                if dx * dx + dy * dy <= r2 {
                    pixels[y * w + x] = color;
                }
            }
        }
    }
    let mut out = format!("P6\n{w} {h}\n255\n").into_bytes();
    out.extend(pixels.iter().flatten());
    out
}

fn svg(l: &Layout, config: &Configuration, palette: &Palette) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}">"#,
        l.width, l.height, l.width, l.height
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (&(cx, cy), &chips) in l.centers.iter().zip(config.chips()) {
        let [r, g, b] = palette.color(chips);
        let _ = writeln!(
            out,
            r##"<circle cx="{cx:.2}" cy="{cy:.2}" r="{:.2}" fill="#{r:02x}{g:02x}{b:02x}"/>"##,
            l.radius
        );
    }
    out.push_str("</svg>\n");
    out
}

pub fn write_render(
    path: &Path,
    graph: &GasketGraph,
    config: &Configuration,
    scale: u32,
) -> Result<()> {
    let spec = RenderSpec {
        format: ImageFormat::from_path(path),
        scale,
        ..RenderSpec::default()
    };
    std::fs::write(path, render(graph, config, &spec)?)?;
    Ok(())
}

/// Colors present in a P6 image, background excluded.
pub fn ppm_colors(bytes: &[u8]) -> Result<Vec<Rgb>> {
    let mut fields = 0;
    let mut i = 0;
    // Header: magic, width, height, maxval, each followed by whitespace.
    while fields < 4 {
        while i < bytes.len() && bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        while i < bytes.len() && !bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        fields += 1;
    }
    if i >= bytes.len() || &bytes[..2] != b"P6" {
        return Err(Error::Parse("not a P6 image".into()));
    }
    let mut colors: Vec<Rgb> = bytes[i + 1..]
        .chunks_exact(3)
        .map(|p| [p[0], p[1], p[2]])
        .filter(|&p| p != BACKGROUND)
        .collect();
    colors.sort_unstable();
    colors.dedup();
    Ok(colors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sandpile::identity;

    #[test]
    fn identity_uses_red_and_blue() {
        let g = GasketGraph::normal(2);
        let id = identity(&g).unwrap();
        let bytes = render(&g, &id, &RenderSpec::default()).unwrap();
        let p = Palette::default();
        assert_eq!(ppm_colors(&bytes).unwrap(), vec![p.by_count[3], p.by_count[2]]);
    }

    #[test]
    fn max_stable_is_blue() {
        let g = GasketGraph::normal(1);
        let bytes = render(&g, &Configuration::max_stable(&g), &RenderSpec::default()).unwrap();
        assert_eq!(ppm_colors(&bytes).unwrap(), vec![Palette::default().by_count[3]]);
    }

    #[test]
    fn deterministic_and_well_formed() {
        let g = GasketGraph::normal(2);
        let c = Configuration::new(&g, (0..g.len() as u64).collect()).unwrap();
        let spec = RenderSpec::default();
        let a = render(&g, &c, &spec).unwrap();
        assert_eq!(a, render(&g, &c, &spec).unwrap());
        assert!(a.starts_with(b"P6\n"));
        let svg_spec = RenderSpec {
            format: ImageFormat::Svg,
            ..spec
        };
        let s = String::from_utf8(render(&g, &c, &svg_spec).unwrap()).unwrap();
        assert_eq!(s.matches("<circle").count(), g.len());
        assert!(s.contains("#000000"));
    }

    #[test]
    fn format_from_extension() {
        assert_eq!(ImageFormat::from_path(Path::new("a.SVG")), ImageFormat::Svg);
        assert_eq!(ImageFormat::from_path(Path::new("a.ppm")), ImageFormat::Ppm);
    }
}
