//! Level-set lengths by marching squares.

use crate::grid::ScalarField;

/// Total length of the polyline approximating `{v = t}`.
///
/// Each grid cell contributes the segments joining the linearly interpolated
/// crossings on its edges. Saddle cells (all four edges crossed) are
/// resolved with the cell-centre average.
pub fn level_set_length(v: &ScalarField, t: f64) -> f64 {
    let grid = v.grid();
    if t < v.min() || t > v.max() {
        return 0.0;
    }
    let n = grid.n();
    let h = grid.h();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            // corners counter-clockwise from lower-left
            let c = [
                (v.get(i, j), (0.0, 0.0)),
                (v.get(i + 1, j), (h, 0.0)),
                (v.get(i + 1, j + 1), (h, h)),
                (v.get(i, j + 1), (0.0, h)),
            ];
            let mut pts: Vec<(f64, f64)> = Vec::with_capacity(4);
            for e in 0..4 {
                let (va, pa) = c[e];
                let (vb, pb) = c[(e + 1) % 4];
                if let Some(s) = crossing(va, vb, t) {
                    pts.push((pa.0 + s * (pb.0 - pa.0), pa.1 + s * (pb.1 - pa.1)));
                }
            }
            total += match pts.len() {
                2 => dist(pts[0], pts[1]),
                4 => {
                    let centre = 0.25 * c.iter().map(|(v, _)| v).sum::<f64>();
                    // corner 0 above t joins edges (3,0) and (0,1) iff the
                    // centre falls on the other side
                    let above0 = c[0].0 >= t;
                    if (centre >= t) == above0 {
                        dist(pts[0], pts[1]) + dist(pts[2], pts[3])
                    } else {
                        dist(pts[3], pts[0]) + dist(pts[1], pts[2])
                    }
                }
                _ => 0.0,
            };
        }
    }
    total
}

/// Fraction along the edge where it crosses `t`, counting a crossing when
/// exactly one endpoint is `>= t`.
fn crossing(a: f64, b: f64, t: f64) -> Option<f64> {
    if (a >= t) == (b >= t) {
        return None;
    }
    Some((t - a) / (b - a))
}

fn dist(p: (f64, f64), q: (f64, f64)) -> f64 {
    (p.0 - q.0).hypot(p.1 - q.1)
}

/// Empirical `K = sup_t length{v = t}` over `samples` levels evenly spaced
/// strictly inside `(min v, max v)`.
pub fn max_level_set_length(v: &ScalarField, samples: usize) -> (f64, Vec<(f64, f64)>) {
    let (lo, hi) = (v.min(), v.max());
    let table: Vec<(f64, f64)> = (1..=samples)
        .map(|k| {
            let t = lo + (hi - lo) * k as f64 / (samples + 1) as f64;
            (t, level_set_length(v, t))
        })
        .collect();
    let sup = table.iter().fold(0.0f64, |m, (_, l)| m.max(*l));
    (sup, table)
}
