use super::matrix::{dot, norm, Matrix};
use super::tol;
use crate::error::{Error, Result};

/// Orthonormalises the columns of `a` by modified Gram-Schmidt with one
/// re-orthogonalisation pass. The span of the columns is preserved.
pub fn orthonormalize(a: &Matrix) -> Result<Matrix> {
    let (p, d) = a.shape();
    if d > p {
        return Err(Error::RankDeficient { column: p });
    }
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(d);
    for j in 0..d {
        let mut v = a.col(j);
        let original = norm(&v);
        for _pass in 0..2 {
            for qk in &q {
                let c = dot(qk, &v);
                for (vi, qi) in v.iter_mut().zip(qk) {
                    *vi -= c * qi;
                }
            }
        }
        let n = norm(&v);
        if original == 0.0 || n < tol::RANK * original {
            return Err(Error::RankDeficient { column: j });
        }
        v.iter_mut().for_each(|x| *x /= n);
        q.push(v);
    }
    Matrix::from_cols(&q)
}

fn check_symmetric(s: &Matrix) -> Result<()> {
    if !s.is_square() {
        return Err(Error::dims(
            "square matrix",
            format!("{}x{}", s.rows(), s.cols()),
        ));
    }
    let scale = s.max_abs().max(f64::MIN_POSITIVE);
    let n = s.rows();
    for i in 0..n {
        for j in (i + 1)..n {
            if (s[(i, j)] - s[(j, i)]).abs() > tol::SYMMETRY * scale {
                return Err(Error::NotSymmetric { row: i, col: j });
            }
        }
    }
    Ok(())
}

/// Lower-triangular `L` with `L·Lᵀ = s`. Only the lower triangle of `s` is
/// read once symmetry has been checked.
pub fn cholesky(s: &Matrix) -> Result<Matrix> {
    check_symmetric(s)?;
    let n = s.rows();
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut diag = s[(j, j)];
        for k in 0..j {
            diag -= l[(j, k)] * l[(j, k)];
        }
        if !(diag > 0.0) {
            return Err(Error::NotPositiveDefinite {
                pivot: j,
                value: diag,
            });
        }
        let ljj = diag.sqrt();
        l[(j, j)] = ljj;
        for i in (j + 1)..n {
            let mut v = s[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = v / ljj;
        }
    }
    Ok(l)
}

/// Symmetric positive definite matrix with its Cholesky factor cached.
#[derive(Clone, Debug, PartialEq)]
pub struct SpdMatrix {
    base: Matrix,
    chol: Matrix,
}

impl SpdMatrix {
    pub fn new(base: Matrix) -> Result<Self> {
        let chol = cholesky(&base)?;
        Ok(Self { base, chol })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            base: Matrix::identity(n),
            chol: Matrix::identity(n),
        }
    }

    pub fn dim(&self) -> usize {
        self.base.rows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.base
    }

    pub fn chol(&self) -> &Matrix {
        &self.chol
    }

    /// Solves `L·y = b` in place.
    fn forward(&self, b: &mut [f64]) {
        let l = &self.chol;
        for i in 0..b.len() {
            let mut v = b[i];
            for k in 0..i {
                v -= l[(i, k)] * b[k];
            }
            b[i] = v / l[(i, i)];
        }
    }

    /// Solves `Lᵀ·x = y` in place.
    fn backward(&self, b: &mut [f64]) {
        let l = &self.chol;
        let n = b.len();
        for i in (0..n).rev() {
            let mut v = b[i];
            for k in (i + 1)..n {
                v -= l[(k, i)] * b[k];
            }
            b[i] = v / l[(i, i)];
        }
    }

    pub fn solve_vec(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.dim() {
            return Err(Error::dims(self.dim(), b.len()));
        }
        let mut x = b.to_vec();
        self.forward(&mut x);
        self.backward(&mut x);
        Ok(x)
    }

    /// `v · S⁻¹ · vᵀ`, evaluated as `‖L⁻¹v‖²`.
    pub fn quad_form(&self, v: &[f64]) -> Result<f64> {
        if v.len() != self.dim() {
            return Err(Error::dims(self.dim(), v.len()));
        }
        let mut y = v.to_vec();
        self.forward(&mut y);
        Ok(dot(&y, &y))
    }

    pub fn log_det(&self) -> f64 {
        (0..self.dim())
            .map(|i| self.chol[(i, i)].ln())
            .sum::<f64>()
            * 2.0
    }

    pub fn det(&self) -> f64 {
        self.log_det().exp()
    }

    /// Explicit inverse; only used where a dense inverse is genuinely needed.
    pub fn inverse(&self) -> Matrix {
        let n = self.dim();
        let mut inv = Matrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            self.forward(&mut e);
            self.backward(&mut e);
            inv.set_col(j, &e);
        }
        inv
    }
}

/// Solves `S·X = B` column by column on the cached Cholesky factor.
pub fn solve_spd(s: &SpdMatrix, b: &Matrix) -> Result<Matrix> {
    if b.rows() != s.dim() {
        return Err(Error::dims(
            format!("{} rows", s.dim()),
            format!("{}x{}", b.rows(), b.cols()),
        ));
    }
    let mut x = Matrix::zeros(b.rows(), b.cols());
    for j in 0..b.cols() {
        let col = s.solve_vec(&b.col(j))?;
        x.set_col(j, &col);
    }
    Ok(x)
}

/// Eigen-decomposition of a symmetric 2x2 matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Eigen2 {
    /// Descending.
    pub values: [f64; 2],
    /// Unit eigenvectors, `vectors[i]` belongs to `values[i]`.
    pub vectors: [[f64; 2]; 2],
}

fn sign_fix(v: [f64; 2]) -> [f64; 2] {
    let lead = if v[0] != 0.0 { v[0] } else { v[1] };
    if lead < 0.0 {
        [-v[0], -v[1]]
    } else {
        v
    }
}

/// Closed-form eigen-decomposition of a symmetric 2x2 matrix.
///
/// Eigenvectors are normalised so that their first nonzero component is
/// positive. When both eigenvalues coincide the coordinate axes are returned.
pub fn sym_eigen_2x2(s: &Matrix) -> Result<Eigen2> {
    if s.shape() != (2, 2) {
        return Err(Error::dims("2x2", format!("{}x{}", s.rows(), s.cols())));
    }
    check_symmetric(s)?;
    let (a, b, c) = (s[(0, 0)], 0.5 * (s[(0, 1)] + s[(1, 0)]), s[(1, 1)]);
    let mean = 0.5 * (a + c);
    let half_diff = 0.5 * (a - c);
    let disc = half_diff.hypot(b);
    if b == 0.0 {
        let (values, vectors) = if a >= c {
            ([a, c], [[1.0, 0.0], [0.0, 1.0]])
        } else {
            ([c, a], [[0.0, 1.0], [1.0, 0.0]])
        };
        return Ok(Eigen2 { values, vectors });
    }
    let (l1, l2) = (mean + disc, mean - disc);
    let raw = if a >= c {
        [half_diff + disc, b]
    } else {
        [b, -half_diff + disc]
    };
    let n = raw[0].hypot(raw[1]);
    let v1 = sign_fix([raw[0] / n, raw[1] / n]);
    let v2 = sign_fix([-v1[1], v1[0]]);
    Ok(Eigen2 {
        values: [l1, l2],
        vectors: [v1, v2],
    })
}

/// Singular value decomposition `m = U·diag(s)·Vᵀ` of a 2x2 matrix, with
/// `s[0] ≥ s[1] ≥ 0`. `U` and `V` are returned column-major as `[col0, col1]`.
pub(crate) fn svd_2x2(m: &Matrix) -> ([[f64; 2]; 2], [f64; 2], [[f64; 2]; 2]) {
    let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    let e = 0.5 * (a + d);
    let f = 0.5 * (a - d);
    let g = 0.5 * (c + b);
    let h = 0.5 * (c - b);
    let q = e.hypot(h);
    let r = f.hypot(g);
    let sx = q + r;
    let mut sy = q - r;
    let a1 = g.atan2(f);
    let a2 = h.atan2(e);
    let theta = 0.5 * (a2 - a1);
    let phi = 0.5 * (a2 + a1);
    let (sp, cp) = phi.sin_cos();
    let (st, ct) = theta.sin_cos();
    // m = Rot(phi) · diag(sx, sy) · Rot(theta), Rot(x) = [[cos, -sin], [sin, cos]]
    let mut u = [[cp, sp], [-sp, cp]];
    let v = [[ct, -st], [st, ct]];
    if sy < 0.0 {
        sy = -sy;
        u[1] = [-u[1][0], -u[1][1]];
    }
    (u, [sx, sy], v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix {
        Matrix::new(r, c, (0..r * c).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
    }

    fn inverse_2x2(m: &Matrix) -> Matrix {
        let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
        Matrix::from_rows(&[
            [m[(1, 1)] / det, -m[(0, 1)] / det],
            [-m[(1, 0)] / det, m[(0, 0)] / det],
        ])
        .unwrap()
    }

    #[test]
    fn orthonormalize_examples() {
        let i3 = Matrix::from_cols(&[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]).unwrap();
        assert_eq!(orthonormalize(&i3).unwrap(), i3);

        let a = Matrix::from_rows(&[[2.0, 0.0], [0.0, 3.0], [0.0, 0.0]]).unwrap();
        let expect = Matrix::from_rows(&[[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]]).unwrap();
        assert_eq!(orthonormalize(&a).unwrap(), expect);
    }

    #[test]
    fn orthonormalize_random_preserves_span() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random_matrix(&mut rng, 6, 2);
        let q = orthonormalize(&a).unwrap();
        let qtq = q.t_matmul(&q).unwrap();
        assert!(qtq.max_abs_diff(&Matrix::identity(2)) < 1e-12);
        // projector oracle: A (AᵀA)⁻¹ Aᵀ by explicit 2x2 inverse
        let ata_inv = inverse_2x2(&a.t_matmul(&a).unwrap());
        let proj_a = a.matmul(&ata_inv).unwrap().matmul(&a.transpose()).unwrap();
        let proj_q = q.matmul(&q.transpose()).unwrap();
        assert!(proj_a.max_abs_diff(&proj_q) < 1e-12);
    }

    #[test]
    fn orthonormalize_rank_deficient() {
        let a = Matrix::from_cols(&[[1.0, 2.0, 3.0], [2.0, 4.0, 6.0]]).unwrap();
        assert!(matches!(
            orthonormalize(&a),
            Err(Error::RankDeficient { column: 1 })
        ));
        let z = Matrix::from_cols(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]).unwrap();
        assert!(matches!(
            orthonormalize(&z),
            Err(Error::RankDeficient { column: 0 })
        ));
    }

    #[test]
    fn orthonormalize_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let q = orthonormalize(&random_matrix(&mut rng, 8, 2)).unwrap();
        assert!(orthonormalize(&q).unwrap().max_abs_diff(&q) < 1e-12);
    }

    #[test]
    fn cholesky_examples() {
        assert_eq!(cholesky(&Matrix::identity(4)).unwrap(), Matrix::identity(4));

        let s = Matrix::from_rows(&[[4.0, 2.0], [2.0, 3.0]]).unwrap();
        let l = cholesky(&s).unwrap();
        assert_eq!(l[(0, 0)], 2.0);
        assert_eq!(l[(1, 0)], 1.0);
        assert_eq!(l[(0, 1)], 0.0);
        assert!((l[(1, 1)] - 2f64.sqrt()).abs() < 1e-15);
        // by hand: [[2,0],[1,√2]]·[[2,1],[0,√2]] = [[4,2],[2,3]]
        assert!(l.matmul(&l.transpose()).unwrap().max_abs_diff(&s) < 1e-14);

        let bad = Matrix::from_rows(&[[1.0, 2.0], [2.0, 1.0]]).unwrap();
        assert!(matches!(
            cholesky(&bad),
            Err(Error::NotPositiveDefinite { pivot: 1, .. })
        ));
        let asym = Matrix::from_rows(&[[1.0, 0.5], [0.4, 1.0]]).unwrap();
        assert!(matches!(cholesky(&asym), Err(Error::NotSymmetric { .. })));
    }

    #[test]
    fn cholesky_round_trip_random_lower() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for p in 1..=10 {
            let mut l = Matrix::zeros(p, p);
            for i in 0..p {
                for j in 0..i {
                    l[(i, j)] = rng.random_range(-1.0..1.0);
                }
                l[(i, i)] = rng.random_range(0.5..2.0);
            }
            let s = l.matmul(&l.transpose()).unwrap();
            let back = cholesky(&s).unwrap();
            assert!(back.max_abs_diff(&l) < 1e-10, "p = {p}");
        }
    }

    #[test]
    fn solve_spd_examples() {
        let b = Matrix::from_rows(&[[1.5, -2.0], [0.25, 3.0]]).unwrap();
        assert_eq!(solve_spd(&SpdMatrix::identity(2), &b).unwrap(), b);

        let d = SpdMatrix::new(Matrix::diag(&[4.0, 1.0])).unwrap();
        let x = solve_spd(&d, &Matrix::column_vector(&[2.0, 1.0]).unwrap()).unwrap();
        assert_eq!(x.as_slice(), &[0.5, 1.0]);

        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let a = random_matrix(&mut rng, 5, 5);
        let s = a
            .matmul(&a.transpose())
            .unwrap()
            .sub(&Matrix::identity(5).scaled(-0.5))
            .unwrap();
        let spd = SpdMatrix::new(s.clone()).unwrap();
        let x0 = random_matrix(&mut rng, 5, 3);
        let b = s.matmul(&x0).unwrap();
        let x = solve_spd(&spd, &b).unwrap();
        assert!(x.max_abs_diff(&x0) < 1e-8);

        assert!(matches!(
            solve_spd(&spd, &Matrix::zeros(4, 1)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn spd_inverse_and_det() {
        let s = SpdMatrix::new(Matrix::from_rows(&[[4.0, 2.0], [2.0, 3.0]]).unwrap()).unwrap();
        assert!((s.det() - 8.0).abs() < 1e-12);
        let inv = s.inverse();
        let prod = s.matrix().matmul(&inv).unwrap();
        assert!(prod.max_abs_diff(&Matrix::identity(2)) < 1e-14);
    }

    fn eigen_residual(s: &Matrix, e: &Eigen2) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..2 {
            let v = e.vectors[i];
            let sv = [
                s[(0, 0)] * v[0] + s[(0, 1)] * v[1],
                s[(1, 0)] * v[0] + s[(1, 1)] * v[1],
            ];
            worst = worst
                .max((sv[0] - e.values[i] * v[0]).abs())
                .max((sv[1] - e.values[i] * v[1]).abs());
        }
        worst
    }

    #[test]
    fn sym_eigen_examples() {
        let e = sym_eigen_2x2(&Matrix::diag(&[4.0, 1.0])).unwrap();
        assert_eq!(e.values, [4.0, 1.0]);
        assert_eq!(e.vectors, [[1.0, 0.0], [0.0, 1.0]]);

        let e = sym_eigen_2x2(&Matrix::diag(&[1.0, 4.0])).unwrap();
        assert_eq!(e.values, [4.0, 1.0]);
        assert_eq!(e.vectors, [[0.0, 1.0], [1.0, 0.0]]);

        let s = Matrix::from_rows(&[[2.0, 1.0], [1.0, 2.0]]).unwrap();
        let e = sym_eigen_2x2(&s).unwrap();
        assert!((e.values[0] - 3.0).abs() < 1e-15 && (e.values[1] - 1.0).abs() < 1e-15);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((e.vectors[0][0] - r).abs() < 1e-15 && (e.vectors[0][1] - r).abs() < 1e-15);
        assert!(eigen_residual(&s, &e) < 1e-10);

        // degenerate: identity axes
        let e = sym_eigen_2x2(&Matrix::identity(2)).unwrap();
        assert_eq!(e.values, [1.0, 1.0]);
        assert_eq!(e.vectors, [[1.0, 0.0], [0.0, 1.0]]);
    }

    #[test]
    fn sym_eigen_random_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..500 {
            let a = rng.random_range(-5.0..5.0);
            let b = rng.random_range(-5.0..5.0);
            let c = rng.random_range(-5.0..5.0);
            let s = Matrix::from_rows(&[[a, b], [b, c]]).unwrap();
            let e = sym_eigen_2x2(&s).unwrap();
            assert!(eigen_residual(&s, &e) < 1e-10);
            assert!(e.values[0] >= e.values[1]);
            // V Λ Vᵀ with eigenvectors as columns
            let v = Matrix::from_cols(&e.vectors).unwrap();
            let rebuilt = v
                .matmul(&Matrix::diag(&e.values))
                .unwrap()
                .matmul(&v.transpose())
                .unwrap();
            assert!(rebuilt.max_abs_diff(&s) < 1e-10);
            for vec in e.vectors {
                let lead = if vec[0] != 0.0 { vec[0] } else { vec[1] };
                assert!(lead > 0.0);
                assert!((vec[0].hypot(vec[1]) - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn svd_2x2_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..500 {
            let m = random_matrix(&mut rng, 2, 2);
            let (u, s, v) = svd_2x2(&m);
            let um = Matrix::from_cols(&u).unwrap();
            let vm = Matrix::from_cols(&v).unwrap();
            let rebuilt = um
                .matmul(&Matrix::diag(&s))
                .unwrap()
                .matmul(&vm.transpose())
                .unwrap();
            assert!(rebuilt.max_abs_diff(&m) < 1e-13);
            assert!(s[0] >= s[1] && s[1] >= 0.0);
            assert!(um.t_matmul(&um).unwrap().max_abs_diff(&Matrix::identity(2)) < 1e-14);
            assert!(vm.t_matmul(&vm).unwrap().max_abs_diff(&Matrix::identity(2)) < 1e-14);
        }
    }
}
