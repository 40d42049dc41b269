use std::fmt::Write;

use brandmarket::{Cell, Dimension, MarketPartition, Point, Scenario};

const VIEW: f64 = 1000.0;
/// Height of the strip used to draw a 1D market.
const STRIP: f64 = 120.0;

struct Frame {
    origin: Point,
    top: f64,
    scale: f64,
    width: f64,
    height: f64,
    dimension: Dimension,
}

impl Frame {
    fn new(scn: &Scenario) -> Self {
        let w = &scn.window;
        let edge = w.width().max(w.height());
        let scale = VIEW / edge;
        let height = match scn.dimension {
            Dimension::One => STRIP,
            Dimension::Two => w.height() * scale,
        };
        Frame {
            origin: w.min,
            top: w.max.y,
            scale,
            width: w.width() * scale,
            height,
            dimension: scn.dimension,
        }
    }

    /// Window coordinates to screen coordinates, y pointing down.
    fn map(&self, p: Point) -> (f64, f64) {
        let x = (p.x - self.origin.x) * self.scale;
        match self.dimension {
            Dimension::One => (x, STRIP / 2.0),
            Dimension::Two => (x, (self.top - p.y) * self.scale),
        }
    }

    fn outline(&self, cell: &Cell) -> Option<Vec<(f64, f64)>> {
        match cell {
            Cell::Empty => None,
            Cell::Interval(iv) => {
                let (a, b) = (
                    (iv.lo - self.origin.x) * self.scale,
                    (iv.hi - self.origin.x) * self.scale,
                );
                Some(vec![(a, 0.0), (b, 0.0), (b, STRIP), (a, STRIP)])
            }
            Cell::Polygon(poly) => Some(poly.vertices.iter().map(|&v| self.map(v)).collect()),
        }
    }
}

fn fill(id: usize) -> String {
    // golden-angle hue steps keep adjacent ids apart
    format!("hsl({:.0},55%,75%)", (id as f64 * 137.508) % 360.0)
}

/// One `<polygon>` per surviving cell and one marker per company; companies
/// without market area get a red cross instead of a dot.
pub fn render(scn: &Scenario, part: &MarketPartition) -> String {
    let frame = Frame::new(scn);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {:.3} {:.3}" width="{:.0}" height="{:.0}">"#,
        frame.width, frame.height, frame.width, frame.height
    );
    let _ = writeln!(
        out,
        r##"<rect class="window" x="0" y="0" width="{:.3}" height="{:.3}" fill="#f4f4f4" stroke="#333" stroke-width="1"/>"##,
        frame.width, frame.height
    );
    for &id in &part.survivors {
        let Some(pts) = frame.outline(&part.cells[id]) else {
            continue;
        };
        let mut points: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.3},{y:.3}")).collect();
        points.dedup();
        if points.len() > 1 && points.first() == points.last() {
            points.pop();
        }
        let _ = writeln!(
            out,
            r##"<polygon class="cell" data-company="{id}" points="{}" fill="{}" stroke="#222" stroke-width="1"><title>company {id}: area {:.6}, price {:.6}</title></polygon>"##,
            points.join(" "),
            fill(id),
            part.areas[id],
            scn.companies[id].price
        );
    }
    for c in &scn.companies {
        let (x, y) = frame.map(c.position);
        if part.is_survivor(c.id) {
            if c.frozen {
                let _ = writeln!(
                    out,
                    r##"<rect class="company frozen" data-company="{}" x="{:.3}" y="{:.3}" width="10" height="10" fill="#555"/>"##,
                    c.id,
                    x - 5.0,
                    y - 5.0
                );
            } else {
                let _ = writeln!(
                    out,
                    r##"<circle class="company" data-company="{}" cx="{x:.3}" cy="{y:.3}" r="5" fill="#000"/>"##,
                    c.id
                );
            }
        } else {
            let _ = writeln!(
                out,
                r##"<path class="company wiped-out" data-company="{}" d="M{:.3},{:.3} l12,12 m0,-12 l-12,12" stroke="#c00" stroke-width="3"/>"##,
                c.id,
                x - 6.0,
                y - 6.0
            );
        }
    }
    out.push_str("</svg>\n");
    out
}
