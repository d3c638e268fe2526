//! Convex hull membership for small vertex sets.
//!
//! Two and three dimensions use half-space tests on the hull's edges or
//! facets. Any dimension can use the linear feasibility route, which solves
//! for convex weights with a phase-one simplex.

use crate::error::{Error, Result};

/// Slack allowed on every half-space test and on the feasibility residual.
pub const HULL_TOL: f64 = 1e-9;

/// Whether `point` is a convex combination of `vertices`.
pub fn hull_contains(vertices: &[Vec<f64>], point: &[f64]) -> Result<bool> {
    check_dims(vertices, point)?;
    match point.len() {
        2 => Ok(contains_2d(vertices, point)),
        3 => Ok(contains_3d(vertices, point).unwrap_or_else(|| contains_lp(vertices, point))),
        _ => Ok(contains_lp(vertices, point)),
    }
}

/// Membership by solving for convex weights, in any dimension.
pub fn hull_contains_lp(vertices: &[Vec<f64>], point: &[f64]) -> Result<bool> {
    check_dims(vertices, point)?;
    Ok(contains_lp(vertices, point))
}

fn check_dims(vertices: &[Vec<f64>], point: &[f64]) -> Result<()> {
    if vertices.is_empty() {
        return Err(Error::Precondition("hull of an empty vertex set".into()));
    }
    for v in vertices {
        if v.len() != point.len() {
            return Err(Error::Dimension { expected: point.len(), got: v.len() });
        }
    }
    Ok(())
}

fn cross(o: &[f64], a: &[f64], b: &[f64]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Counter-clockwise hull by monotone chain, without collinear points.
fn hull_2d(vertices: &[Vec<f64>]) -> Vec<[f64; 2]> {
    let mut pts: Vec<[f64; 2]> = vertices.iter().map(|v| [v[0], v[1]]).collect();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<[f64; 2]> = Vec::new();
    for p in &pts {
        while lower.len() >= 2 && cross(&lower[lower.len() - 2], &lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(*p);
    }
    let mut upper: Vec<[f64; 2]> = Vec::new();
    for p in pts.iter().rev() {
        while upper.len() >= 2 && cross(&upper[upper.len() - 2], &upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(*p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

fn on_segment(a: &[f64; 2], b: &[f64; 2], p: &[f64]) -> bool {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len2 == 0.0 { 0.0 } else { (((p[0] - a[0]) * ab[0] + (p[1] - a[1]) * ab[1]) / len2).clamp(0.0, 1.0) };
    let q = [a[0] + t * ab[0], a[1] + t * ab[1]];
    ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt() <= HULL_TOL
}

fn contains_2d(vertices: &[Vec<f64>], point: &[f64]) -> bool {
    let h = hull_2d(vertices);
    match h.len() {
        1 => on_segment(&h[0], &h[0], point),
        2 => on_segment(&h[0], &h[1], point),
        k => (0..k).all(|i| {
            let (a, b) = (&h[i], &h[(i + 1) % k]);
            let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
            cross(a, b, point) / len >= -HULL_TOL
        }),
    }
}

fn sub3(a: &[f64], b: &[f64]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Facet enumeration over vertex triples. `None` when the vertices do not
/// span three dimensions.
fn contains_3d(vertices: &[Vec<f64>], point: &[f64]) -> Option<bool> {
    let k = vertices.len();
    let mut facets = 0;
    for i in 0..k {
        for j in i + 1..k {
            for l in j + 1..k {
                let n = cross3(sub3(&vertices[j], &vertices[i]), sub3(&vertices[l], &vertices[i]));
                let norm = dot3(n, n).sqrt();
                if norm < 1e-12 {
                    continue;
                }
                let n = [n[0] / norm, n[1] / norm, n[2] / norm];
                let side: Vec<f64> = vertices.iter().map(|v| dot3(n, sub3(v, &vertices[i]))).collect();
                let above = side.iter().any(|s| *s > HULL_TOL);
                let below = side.iter().any(|s| *s < -HULL_TOL);
                if above && below {
                    continue;
                }
                if !above && !below {
                    // All coplanar: the vertex set is flat.
                    return None;
                }
                facets += 1;
                let s = dot3(n, sub3(point, &vertices[i]));
                let outside = if above { s < -HULL_TOL } else { s > HULL_TOL };
                if outside {
                    return Some(false);
                }
            }
        }
    }
    (facets > 0).then_some(true)
}

/// Phase-one simplex for `sum_i b_i v_i = x, sum_i b_i = 1, b >= 0`.
fn contains_lp(vertices: &[Vec<f64>], point: &[f64]) -> bool {
    let dim = point.len();
    let k = vertices.len();
    let rows = dim + 1;
    let cols = k + rows + 1;
    let rhs = cols - 1;
    let mut tab = vec![vec![0.0; cols]; rows + 1];
    for r in 0..rows {
        let (coef, b): (Vec<f64>, f64) =
            if r < dim { (vertices.iter().map(|v| v[r]).collect(), point[r]) } else { (vec![1.0; k], 1.0) };
        let sign = if b < 0.0 { -1.0 } else { 1.0 };
        for (c, a) in coef.iter().enumerate() {
            tab[r][c] = sign * a;
        }
        tab[r][k + r] = 1.0;
        tab[r][rhs] = sign * b;
    }
    // Objective row: minimize the sum of artificials, priced out.
    for c in 0..cols {
        if (k..k + rows).contains(&c) {
            continue;
        }
        tab[rows][c] = -(0..rows).map(|r| tab[r][c]).sum::<f64>();
    }
    let mut basis: Vec<usize> = (k..k + rows).collect();

    for _ in 0..10_000 {
        // Bland's rule: first column with negative reduced cost.
        let Some(enter) = (0..rhs).find(|&c| tab[rows][c] < -1e-12) else { break };
        let mut leave: Option<(usize, f64)> = None;
        for r in 0..rows {
            let a = tab[r][enter];
            if a > 1e-12 {
                let ratio = tab[r][rhs] / a;
                let better = match leave {
                    None => true,
                    Some((lr, best)) => ratio < best - 1e-15 || (ratio <= best + 1e-15 && basis[r] < basis[lr]),
                };
                if better {
                    leave = Some((r, ratio));
                }
            }
        }
        let Some((pr, _)) = leave else { break };
        let piv = tab[pr][enter];
        for c in 0..cols {
            tab[pr][c] /= piv;
        }
        for r in 0..=rows {
            if r != pr {
                let f = tab[r][enter];
                if f != 0.0 {
                    for c in 0..cols {
                        tab[r][c] -= f * tab[pr][c];
                    }
                }
            }
        }
        basis[pr] = enter;
    }
    -tab[rows][rhs] <= HULL_TOL
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Vec<Vec<f64>> {
        vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0], vec![0.5, 0.5]]
    }

    #[test]
    fn vertices_and_centroid_inside() {
        let v = square();
        for p in &v {
            assert!(hull_contains(&v, p).unwrap());
            assert!(hull_contains_lp(&v, p).unwrap());
        }
        assert!(hull_contains(&v, &[0.5, 0.25]).unwrap());
        assert!(!hull_contains(&v, &[1.01, 0.5]).unwrap());
        assert!(!hull_contains_lp(&v, &[1.01, 0.5]).unwrap());
    }

    #[test]
    fn degenerate_2d() {
        let seg = vec![vec![0.0, 0.0], vec![1.0, 1.0]];
        assert!(hull_contains(&seg, &[0.3, 0.3]).unwrap());
        assert!(!hull_contains(&seg, &[0.3, 0.4]).unwrap());
        assert!(hull_contains_lp(&seg, &[0.3, 0.3]).unwrap());
        assert!(!hull_contains_lp(&seg, &[0.3, 0.4]).unwrap());
    }

    #[test]
    fn simplex_3d() {
        let v = vec![vec![0.0; 3], vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]];
        assert!(hull_contains(&v, &[0.2, 0.2, 0.2]).unwrap());
        assert!(!hull_contains(&v, &[0.4, 0.4, 0.4]).unwrap());
        assert!(!hull_contains(&v, &[-0.01, 0.2, 0.2]).unwrap());
        // Flat set falls back to the feasibility route.
        let flat = vec![vec![0.0; 3], vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]];
        assert!(hull_contains(&flat, &[0.2, 0.2, 0.0]).unwrap());
        assert!(!hull_contains(&flat, &[0.2, 0.2, 0.1]).unwrap());
    }

    #[test]
    fn dimension_mismatch() {
        assert!(matches!(hull_contains(&square(), &[0.1, 0.1, 0.1]), Err(Error::Dimension { .. })));
        assert!(hull_contains(&[], &[0.1]).is_err());
    }

    #[test]
    fn higher_dimensions() {
        let mut v = vec![vec![0.0; 5]];
        for i in 0..5 {
            let mut e = vec![0.0; 5];
            e[i] = 1.0;
            v.push(e);
        }
        assert!(hull_contains(&v, &[0.19; 5]).unwrap());
        assert!(!hull_contains(&v, &[0.21; 5]).unwrap());
    }
}
