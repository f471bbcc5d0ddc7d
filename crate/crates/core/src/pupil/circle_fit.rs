use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::imgcore::Point;

use super::CircleHypothesis;

/// Normal-equation condition number above which the point set counts as degenerate.
pub const FIT_CONDITION_LIMIT: f64 = 1e10;

/// Algebraic (Kåsa) least-squares circle: minimizes
/// Σ (x² + y² + D·x + E·y + F)² over D, E, F.
///
/// Points are centered and scaled to unit RMS radius before solving, which
/// keeps the normal matrix well conditioned for pixel-scale data.
/// The score is the negated RMS radial residual.
pub fn fit_circle_least_squares(points: &[Point]) -> Result<CircleHypothesis> {
    if points.len() < 3 {
        return Err(Error::InvalidParameter(format!("circle fit needs at least 3 points, got {}", points.len())));
    }
    if points.iter().any(|p| !p.is_finite()) {
        return Err(Error::InvalidParameter("circle fit got a non-finite point".into()));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.x).sum::<f64>() / n;
    let my = points.iter().map(|p| p.y).sum::<f64>() / n;
    let spread = (points.iter().map(|p| (p.x - mx).powi(2) + (p.y - my).powi(2)).sum::<f64>() / n).sqrt();
    if spread == 0.0 {
        return Err(Error::Degenerate("all points coincide".into()));
    }

    let mut ata = Matrix3::<f64>::zeros();
    let mut atb = Vector3::<f64>::zeros();
    for p in points {
        let x = (p.x - mx) / spread;
        let y = (p.y - my) / spread;
        let row = Vector3::new(x, y, 1.0);
        ata += row * row.transpose();
        atb += row * -(x * x + y * y);
    }
    let eig = ata.symmetric_eigen();
    let lmax = eig.eigenvalues.max();
    let lmin = eig.eigenvalues.min();
    if !(lmin > 0.0) || lmax / lmin > FIT_CONDITION_LIMIT {
        return Err(Error::Degenerate(format!(
            "points are (nearly) collinear: condition {:.3e}",
            lmax / lmin.max(0.0)
        )));
    }
    let sol =
        ata.cholesky().ok_or_else(|| Error::Degenerate("normal matrix not positive definite".into()))?.solve(&atb);
    let (d, e, f) = (sol[0], sol[1], sol[2]);
    let r2 = (d * d + e * e) / 4.0 - f;
    if !(r2 > 0.0) {
        return Err(Error::Degenerate("fitted radius is imaginary".into()));
    }
    let cx = mx - d / 2.0 * spread;
    let cy = my - e / 2.0 * spread;
    let r = r2.sqrt() * spread;
    let c = Point::new(cx, cy);
    let rms = (points.iter().map(|p| (p.distance(c) - r).powi(2)).sum::<f64>() / n).sqrt();
    Ok(CircleHypothesis { cx, cy, r, score: -rms })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn on_circle(cx: f64, cy: f64, r: f64, n: usize, phase: f64) -> Vec<Point> {
        (0..n)
            .map(|i| {
                let t = phase + i as f64 * std::f64::consts::TAU / n as f64;
                Point::new(cx + r * t.cos(), cy + r * t.sin())
            })
            .collect()
    }

    #[test]
    fn three_point_circumcircle() {
        let c = fit_circle_least_squares(&[Point::new(1.0, 0.0), Point::new(0.0, 1.0), Point::new(-1.0, 0.0)]).unwrap();
        assert!(c.cx.abs() < 1e-9 && c.cy.abs() < 1e-9 && (c.r - 1.0).abs() < 1e-9);
        assert!(c.score.abs() < 1e-9);
    }

    #[test]
    fn exact_samples() {
        let c = fit_circle_least_squares(&on_circle(5.0, 7.0, 3.0, 100, 0.3)).unwrap();
        assert!((c.cx - 5.0).abs() < 1e-9 && (c.cy - 7.0).abs() < 1e-9 && (c.r - 3.0).abs() < 1e-9);
    }

    #[test]
    fn partial_arc_is_exact_too() {
        let pts: Vec<Point> = (0..12)
            .map(|i| {
                let t = 0.2 + i as f64 * 0.1;
                Point::new(40.0 + 12.0 * t.cos(), -3.0 + 12.0 * t.sin())
            })
            .collect();
        let c = fit_circle_least_squares(&pts).unwrap();
        assert!((c.cx - 40.0).abs() < 1e-7 && (c.cy + 3.0).abs() < 1e-7 && (c.r - 12.0).abs() < 1e-7);
    }

    #[test]
    fn degenerate_inputs() {
        let line = [Point::new(0.0, 0.0), Point::new(1.0, 1.0), Point::new(2.0, 2.0)];
        assert!(matches!(fit_circle_least_squares(&line), Err(Error::Degenerate(_))));
        assert!(fit_circle_least_squares(&line[..2]).is_err());
        let same = [Point::new(3.0, 3.0); 4];
        assert!(fit_circle_least_squares(&same).is_err());
    }

    #[test]
    fn random_exact_circles() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let (cx, cy, r) =
                (rng.random_range(-200.0..200.0), rng.random_range(-200.0..200.0), rng.random_range(0.5..80.0));
            let n = rng.random_range(8..60);
            let c = fit_circle_least_squares(&on_circle(cx, cy, r, n, rng.random_range(0.0..6.0))).unwrap();
            assert!((c.cx - cx).abs() < 1e-9 && (c.cy - cy).abs() < 1e-9 && (c.r - r).abs() < 1e-9);
        }
    }
}
