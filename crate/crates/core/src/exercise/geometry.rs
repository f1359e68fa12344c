//! Planar polygon checks for sector boundaries.

use crate::sim::Position;

fn orient(a: &Position, b: &Position, c: &Position) -> f64 {
    (b.x_nm - a.x_nm) * (c.y_nm - a.y_nm) - (b.y_nm - a.y_nm) * (c.x_nm - a.x_nm)
}

fn on_segment(a: &Position, b: &Position, p: &Position) -> bool {
    p.x_nm >= a.x_nm.min(b.x_nm) && p.x_nm <= a.x_nm.max(b.x_nm) && p.y_nm >= a.y_nm.min(b.y_nm) && p.y_nm <= a.y_nm.max(b.y_nm)
}

/// Closed-segment intersection, touching and collinear overlap included.
pub fn segments_intersect(p1: &Position, p2: &Position, q1: &Position, q2: &Position) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(q1, q2, p1))
        || (d2 == 0.0 && on_segment(q1, q2, p2))
        || (d3 == 0.0 && on_segment(p1, p2, q1))
        || (d4 == 0.0 && on_segment(p1, p2, q2))
}

/// True when the closed ring has a repeated vertex, a fold-back between
/// neighbouring edges, or any two non-adjacent edges touching.
pub fn is_self_intersecting(ring: &[Position]) -> bool {
    let n = ring.len();
    if n < 3 {
        return false;
    }
    let edge = |i: usize| (&ring[i], &ring[(i + 1) % n]);
    for i in 0..n {
        let (a, b) = edge(i);
        if a.x_nm == b.x_nm && a.y_nm == b.y_nm {
            return true;
        }
        // neighbouring edges share only their common vertex unless they fold back
        let c = &ring[(i + 2) % n];
        if orient(a, b, c) == 0.0 {
            let dot = (b.x_nm - a.x_nm) * (c.x_nm - b.x_nm) + (b.y_nm - a.y_nm) * (c.y_nm - b.y_nm);
            if dot < 0.0 {
                return true;
            }
        }
    }
    for i in 0..n {
        for j in i + 2..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            let (a, b) = edge(i);
            let (c, d) = edge(j);
            if segments_intersect(a, b, c, d) {
                return true;
            }
        }
    }
    false
}

/// Even-odd ray cast.
pub fn point_in_polygon(p: &Position, ring: &[Position]) -> bool {
    let n = ring.len();
    let mut inside = false;
    let mut j = n.wrapping_sub(1);
    for i in 0..n {
        let (a, b) = (&ring[i], &ring[j]);
        if (a.y_nm > p.y_nm) != (b.y_nm > p.y_nm) {
            let x = (b.x_nm - a.x_nm) * (p.y_nm - a.y_nm) / (b.y_nm - a.y_nm) + a.x_nm;
            if p.x_nm < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring(pts: &[(f64, f64)]) -> Vec<Position> {
        pts.iter().map(|&(x, y)| Position::new(x, y, 0.0)).collect()
    }

    #[test]
    fn square_is_simple() {
        assert!(!is_self_intersecting(&ring(&[(0., 0.), (1., 0.), (1., 1.), (0., 1.)])));
    }

    #[test]
    fn bowtie_intersects() {
        assert!(is_self_intersecting(&ring(&[(0., 0.), (1., 1.), (1., 0.), (0., 1.)])));
    }

    #[test]
    fn repeated_vertex_and_spike() {
        assert!(is_self_intersecting(&ring(&[(0., 0.), (0., 0.), (1., 0.), (0., 1.)])));
        assert!(is_self_intersecting(&ring(&[(0., 0.), (2., 0.), (1., 0.), (0., 1.)])));
    }

    #[test]
    fn collinear_straight_vertex_allowed() {
        assert!(!is_self_intersecting(&ring(&[(0., 0.), (1., 0.), (2., 0.), (2., 2.), (0., 2.)])));
    }

    #[test]
    fn containment() {
        let sq = ring(&[(0., 0.), (10., 0.), (10., 10.), (0., 10.)]);
        assert!(point_in_polygon(&Position::new(5.0, 5.0, 0.0), &sq));
        assert!(!point_in_polygon(&Position::new(15.0, 5.0, 0.0), &sq));
    }
}
