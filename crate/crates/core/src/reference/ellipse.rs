use std::f64::consts::TAU;

use super::ReferenceModel;
use crate::error::{Error, Result};
use crate::numerics::{sym_eigen_2x2, Matrix, SpdMatrix};
use crate::tour::ProjectionBasis;

pub const DEFAULT_BOUNDARY_POINTS: usize = 128;

/// The 2-D ellipse `(y - μP)(PᵀΣP)⁻¹(y - μP)ᵀ = c²` onto which the reference
/// ellipsoid projects.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectedEllipse {
    pub center: [f64; 2],
    pub shape: SpdMatrix,
    pub level_c2: f64,
}

/// `Pᵀ Σ P` for a `p x 2` basis, symmetrised exactly.
pub(crate) fn projected_shape(sigma: &Matrix, basis: &ProjectionBasis) -> Result<Matrix> {
    let p = basis.matrix();
    let sp = sigma.matmul(p)?;
    let mut s = p.t_matmul(&sp)?;
    let off = 0.5 * (s[(0, 1)] + s[(1, 0)]);
    s[(0, 1)] = off;
    s[(1, 0)] = off;
    Ok(s)
}

/// Projects the reference ellipsoid onto the plane of `basis`.
pub fn project_model(model: &ReferenceModel, basis: &ProjectionBasis) -> Result<ProjectedEllipse> {
    if basis.p() != model.dim() {
        return Err(Error::dims(
            format!("{} x 2 basis", model.dim()),
            format!("{} x 2", basis.p()),
        ));
    }
    let center = basis.project(model.mean())?;
    let shape = SpdMatrix::new(projected_shape(model.covariance().matrix(), basis)?)?;
    Ok(ProjectedEllipse {
        center,
        shape,
        level_c2: model.level_c2(),
    })
}

impl ProjectedEllipse {
    /// `(y - center) shape⁻¹ (y - center)ᵀ`.
    pub fn quad_form(&self, y: [f64; 2]) -> f64 {
        self.shape
            .quad_form(&[y[0] - self.center[0], y[1] - self.center[1]])
            .expect("2-vector against 2x2 shape")
    }

    /// Semi-axis lengths (major first) and their unit directions.
    pub fn axes(&self) -> ([f64; 2], [[f64; 2]; 2]) {
        let eig = sym_eigen_2x2(self.shape.matrix()).expect("shape is symmetric 2x2");
        let c = self.level_c2.sqrt();
        (
            [c * eig.values[0].sqrt(), c * eig.values[1].sqrt()],
            eig.vectors,
        )
    }

    /// Closed polyline of `n_points` vertices at equally spaced parameter
    /// angles `θ_j = 2πj / n`, starting on the major axis.
    pub fn boundary(&self, n_points: usize) -> Result<Vec<[f64; 2]>> {
        if n_points < 8 {
            return Err(Error::InvalidArgument(format!(
                "ellipse boundary needs at least 8 points, got {n_points}"
            )));
        }
        Ok(self.boundary_unchecked(n_points))
    }

    pub(crate) fn boundary_unchecked(&self, n_points: usize) -> Vec<[f64; 2]> {
        let ([a, b], [v1, v2]) = self.axes();
        (0..n_points)
            .map(|j| {
                let theta = TAU * j as f64 / n_points as f64;
                let (s, c) = theta.sin_cos();
                [
                    self.center[0] + a * c * v1[0] + b * s * v2[0],
                    self.center[1] + a * c * v1[1] + b * s * v2[1],
                ]
            })
            .collect()
    }
}

/// Free-function form of [`ProjectedEllipse::boundary`].
pub fn ellipse_boundary(e: &ProjectedEllipse, n_points: usize) -> Result<Vec<[f64; 2]>> {
    e.boundary(n_points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference::Level;
    use crate::tour::ProjectionBasis;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_spd(rng: &mut ChaCha8Rng, p: usize) -> Matrix {
        let a = Matrix::new(p, p, (0..p * p).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let mut s = a.matmul(&a.transpose()).unwrap();
        for i in 0..p {
            s[(i, i)] += 0.1;
        }
        s
    }

    fn circle(center: [f64; 2], shape: Matrix, c2: f64) -> ProjectedEllipse {
        ProjectedEllipse {
            center,
            shape: SpdMatrix::new(shape).unwrap(),
            level_c2: c2,
        }
    }

    #[test]
    fn identity_covariance_projects_to_identity() {
        let model = ReferenceModel::standard(5, Level::C2(3.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let b = ProjectionBasis::random(5, &mut rng).unwrap();
        let e = project_model(&model, &b).unwrap();
        assert!(e.shape.matrix().max_abs_diff(&Matrix::identity(2)) < 1e-14);
        assert_eq!(e.level_c2, 3.0);
    }

    #[test]
    fn coordinate_plane_selects_entries() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let sigma = random_spd(&mut rng, 4);
        let mean = vec![1.0, 2.0, 3.0, 4.0];
        let model = ReferenceModel::new(mean, sigma.clone(), Level::C2(1.0)).unwrap();
        let b = ProjectionBasis::coordinate_plane(4, 0, 2).unwrap();
        let e = project_model(&model, &b).unwrap();
        assert_eq!(e.center, [1.0, 3.0]);
        let s = e.shape.matrix();
        assert_eq!(s[(0, 0)], sigma[(0, 0)]);
        assert_eq!(s[(1, 1)], sigma[(2, 2)]);
        assert_eq!(s[(0, 1)], sigma[(0, 2)]);
    }

    #[test]
    fn random_projection_matches_triple_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let sigma = random_spd(&mut rng, 6);
        let model = ReferenceModel::new(vec![0.0; 6], sigma.clone(), Level::C2(2.0)).unwrap();
        let b = ProjectionBasis::random(6, &mut rng).unwrap();
        let e = project_model(&model, &b).unwrap();
        // independent dense triple product (Pᵀ)(Σ)(P), with the transpose formed explicitly
        let pt = b.matrix().transpose();
        let direct = pt.matmul(&sigma).unwrap().matmul(b.matrix()).unwrap();
        assert!(e.shape.matrix().max_abs_diff(&direct) < 1e-12);
    }

    #[test]
    fn dimension_mismatch() {
        let model = ReferenceModel::standard(3, Level::C2(1.0)).unwrap();
        let b = ProjectionBasis::coordinate_plane(4, 0, 1).unwrap();
        assert!(matches!(
            project_model(&model, &b),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn unit_circle_vertices() {
        let e = circle([0.0, 0.0], Matrix::identity(2), 1.0);
        assert!(e.boundary(4).is_err());
        let pts = e.boundary(8).unwrap();
        let expect = [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]];
        for (k, want) in expect.iter().enumerate() {
            let got = pts[2 * k];
            assert!((got[0] - want[0]).abs() < 1e-15 && (got[1] - want[1]).abs() < 1e-15);
        }
        // n = 4 through the unchecked path reproduces the four axis points
        let four = e.boundary_unchecked(4);
        for (got, want) in four.iter().zip(expect) {
            assert!((got[0] - want[0]).abs() < 1e-15 && (got[1] - want[1]).abs() < 1e-15);
        }
    }

    #[test]
    fn axis_aligned_semi_axes() {
        let e = circle([0.0, 0.0], Matrix::diag(&[4.0, 1.0]), 1.0);
        let (axes, dirs) = e.axes();
        assert_eq!(axes, [2.0, 1.0]);
        assert_eq!(dirs, [[1.0, 0.0], [0.0, 1.0]]);
        let pts = e.boundary(16).unwrap();
        assert_eq!(pts[0], [2.0, 0.0]);
        assert!((pts[4][1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn random_ellipse_vertices_on_curve() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let shape = random_spd(&mut rng, 2);
            let c2 = rng.random_range(0.5..20.0);
            let e = circle([rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)], shape, c2);
            let worst = e
                .boundary(256)
                .unwrap()
                .iter()
                .map(|&y| (e.quad_form(y) - c2).abs() / c2)
                .fold(0.0, f64::max);
            assert!(worst < 1e-10, "{worst}");
        }
    }

    #[test]
    fn in_plane_rotation_gives_rotated_curve() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let sigma = random_spd(&mut rng, 5);
        let model = ReferenceModel::new(vec![0.5; 5], sigma, Level::C2(4.0)).unwrap();
        let b = ProjectionBasis::random(5, &mut rng).unwrap();
        let angle = 0.7;
        let br = b.rotated_in_plane(angle);
        let e = project_model(&model, &b).unwrap();
        let er = project_model(&model, &br).unwrap();
        let (s, c) = angle.sin_cos();
        // y' = y R, so y = y' Rᵀ
        for y in er.boundary(64).unwrap() {
            let back = [c * y[0] - s * y[1], s * y[0] + c * y[1]];
            assert!((e.quad_form(back) - 4.0).abs() < 1e-10);
        }
        assert!((e.axes().0[0] - er.axes().0[0]).abs() < 1e-10);
        assert!((e.axes().0[1] - er.axes().0[1]).abs() < 1e-10);
    }
}
