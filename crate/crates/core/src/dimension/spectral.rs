//! Finite algebraic certificates for the constant-rate matrices
//! `C_1, C_2, C_3`: proximality of the semigroup and strong irreducibility,
//! with the planar maps on `V = {x : x_1 + x_2 + x_3 = 0}` at `p = 1/5`.

use nalgebra::{Matrix2, Matrix3x2, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SingularTriple;
use crate::charts::c_matrix_from_rates;
use crate::{Error, Mat3, Result, Vec3};

const EIG_TOL: f64 = 1e-10;
const ANGLE_TOL: f64 = 1e-6;
const BRANCH_EPS: f64 = 1e-12;

/// `C_i` for constant rate `p`: `1 - 2p` at `(i, i)`, `-p` elsewhere in
/// row `i`, `p` on the remaining diagonal.
pub fn constant_rate_matrices(p: f64) -> [Mat3; 3] {
    [0, 1, 2].map(|i| c_matrix_from_rates(i, p, p, [p; 3]))
}

fn check_range(p: f64) -> Result<()> {
    if p > 0.0 && p < 0.5 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("rate {p} outside (0, 1/2)")))
    }
}

/// Real eigenvalues in ascending order with the worst relative residual
/// `min_v ‖(M - λ)v‖ / ‖M‖`, or an error if the spectrum is not real.
fn real_spectrum(m: &Mat3) -> Result<([f64; 3], f64)> {
    let ev = m.complex_eigenvalues();
    let scale = SingularTriple::of(m).a1.max(f64::MIN_POSITIVE);
    let mut out = [0.0; 3];
    for (k, z) in ev.iter().enumerate() {
        if z.im.abs() > EIG_TOL * scale {
            return Err(Error::Inconsistent(format!("complex eigenvalue {z}")));
        }
        out[k] = z.re;
    }
    out.sort_by(f64::total_cmp);
    let residual = out
        .iter()
        .map(|&l| SingularTriple::of(&(m - Mat3::identity() * l)).a3 / scale)
        .fold(0.0, f64::max);
    Ok((out, residual))
}

fn max_diff(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProximalityReport {
    pub p: f64,
    /// Ascending spectrum of `C_1`, computed when `p < 1/3`.
    pub c1_spectrum: Option<[f64; 3]>,
    pub c1_top_simple: Option<bool>,
    /// Ascending spectrum of `C_1 C_2`.
    pub product_spectrum: [f64; 3],
    pub closed_form: [f64; 3],
    pub closed_form_deviation: f64,
    pub strictly_ordered: bool,
    /// Whether `p²` is the middle eigenvalue of the product (true for `p > 1/4`).
    pub p_squared_is_middle: bool,
    /// Gap between the spectra of `C_2 C_1` and `C_1 C_2`.
    pub reversed_deviation: f64,
    pub max_residual: f64,
    pub passed: bool,
}

/// Spectral facts behind proximality of `{C_1, C_2, C_3}` at rate `p`.
pub fn proximality_check(p: f64) -> Result<ProximalityReport> {
    check_range(p)?;
    let [c1, c2, _] = constant_rate_matrices(p);
    let mut residual = 0.0f64;
    let (mut c1_spectrum, mut c1_top_simple) = (None, None);
    let mut c1_ok = true;
    if p < 1.0 / 3.0 {
        let (s, r) = real_spectrum(&c1)?;
        residual = residual.max(r);
        let want = [p, p, 1.0 - 2.0 * p];
        c1_ok = max_diff(&s, &want) <= EIG_TOL;
        c1_top_simple = Some(s[2] - s[1] > EIG_TOL);
        c1_ok &= c1_top_simple == Some(true);
        c1_spectrum = Some(s);
    }
    let (prod, r) = real_spectrum(&(c1 * c2))?;
    residual = residual.max(r);
    let root = ((4.0 - 7.0 * p) * p).sqrt();
    let mut closed = [p * (2.0 - 3.0 * p - root) / 2.0, p * p, p * (2.0 - 3.0 * p + root) / 2.0];
    closed.sort_by(f64::total_cmp);
    let dev = max_diff(&prod, &closed);
    let (rev, r) = real_spectrum(&(c2 * c1))?;
    residual = residual.max(r);
    let rev_dev = max_diff(&rev, &prod);
    let ordered = prod[0] > 0.0 && prod[0] < prod[1] - EIG_TOL && prod[1] < prod[2] - EIG_TOL;
    let middle = (prod[1] - p * p).abs() <= EIG_TOL;
    Ok(ProximalityReport {
        p,
        c1_spectrum,
        c1_top_simple,
        product_spectrum: prod,
        closed_form: closed,
        closed_form_deviation: dev,
        strictly_ordered: ordered,
        p_squared_is_middle: middle,
        reversed_deviation: rev_dev,
        max_residual: residual,
        passed: c1_ok
            && prod[0] > 0.0
            && prod[2] - prod[1] > EIG_TOL
            && dev <= EIG_TOL
            && rev_dev <= EIG_TOL
            && residual <= EIG_TOL,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IrreducibilityBranch {
    Generic,
    /// `p = 1/5`: `(1, 1, 1)` is a common eigenvector; checks move to `V`.
    PlaneMaps,
    /// `p = 1/3`: every `C_i` has the single eigenvalue `1/3`.
    SingleEigenvalue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DMapReport {
    /// Worst `|D_j proj v - proj C_j v|` over the sampled vectors, relative to `|v|`.
    pub intertwining_error: f64,
    /// Residual of `(1, 1, 1)` as an eigenvector of each `C_j` with eigenvalue `1/5`.
    pub common_eigenvector_residual: f64,
    /// Worst residual of the eigenline candidates under `D_1`.
    pub eigenline_residual: f64,
    /// Smallest angle between a `D_1` eigenline and its image under `D_2`.
    pub eigenline_min_angle: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrreducibilityReport {
    pub p: f64,
    pub branch: IrreducibilityBranch,
    /// Determinant of the matrix of normalised eigenplane normals.
    pub normals_determinant: Option<f64>,
    pub normals_vanish: Option<bool>,
    /// Worst `|C_i x - p x|` over unit vectors `x` of the `p`-eigenplane of `C_i`.
    pub eigenplane_residual: f64,
    /// Smallest angle between `e_i` and `C_j e_i`, `j ≠ i`.
    pub top_eigenline_min_angle: Option<f64>,
    /// Smallest angle between the eigenplane of `C_i` and its image under `C_j`.
    pub eigenplane_min_angle: Option<f64>,
    pub d_maps: Option<DMapReport>,
    pub note: String,
    pub passed: bool,
}

fn line_angle3(line: &Vec3, w: &Vec3) -> f64 {
    line.cross(w).norm().atan2(line.dot(w).abs())
}

fn line_angle2(line: &Vector2<f64>, w: &Vector2<f64>) -> f64 {
    (line.x * w.y - line.y * w.x).abs().atan2(line.dot(w).abs())
}

/// Two orthonormal vectors spanning the plane orthogonal to `n`.
fn plane_basis(n: &Vec3) -> [Vec3; 2] {
    let n = n.normalize();
    let seed = if n.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let a = n.cross(&seed).normalize();
    [a, n.cross(&a)]
}

/// Orthonormal basis of `V` as the columns of a 3×2 matrix; `Uᵀ` is the
/// projection along `(1, 1, 1)` in these coordinates.
fn v_basis() -> Matrix3x2<f64> {
    let s2 = std::f64::consts::SQRT_2;
    let s6 = 6f64.sqrt();
    Matrix3x2::new(1.0 / s2, 1.0 / s6, -1.0 / s2, 1.0 / s6, 0.0, -2.0 / s6)
}

fn d_map_checks(cs: &[Mat3; 3]) -> DMapReport {
    let u = v_basis();
    let ut = u.transpose();
    let d: Vec<Matrix2<f64>> = cs.iter().map(|c| ut * c * u).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut inter = 0.0f64;
    for _ in 0..100 {
        let v = Vec3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        for (dj, cj) in d.iter().zip(cs) {
            let err = (dj * (ut * v) - ut * (cj * v)).norm() / v.norm();
            inter = inter.max(err);
        }
    }
    let ones = Vec3::new(1.0, 1.0, 1.0);
    let common = cs.iter().map(|c| (c * ones - ones * 0.2).norm()).fold(0.0, f64::max);
    let lines = [Vec3::new(0.0, 1.0, -1.0), Vec3::new(2.0, -1.0, -1.0)].map(|w| ut * w);
    let mut res = 0.0f64;
    let mut angle = f64::INFINITY;
    for l in &lines {
        let img = d[0] * l;
        let lambda = img.dot(l) / l.norm_squared();
        res = res.max((img - l * lambda).norm() / l.norm());
        angle = angle.min(line_angle2(l, &(d[1] * l)));
    }
    DMapReport {
        intertwining_error: inter,
        common_eigenvector_residual: common,
        eigenline_residual: res,
        eigenline_min_angle: angle,
        passed: inter <= 1e-12 && common <= 1e-12 && res <= 1e-12 && angle > ANGLE_TOL,
    }
}

/// Certificates for strong irreducibility of `{C_1, C_2, C_3}` at rate `p`.
pub fn irreducibility_probe(p: f64) -> Result<IrreducibilityReport> {
    check_range(p)?;
    let cs = constant_rate_matrices(p);
    let third = (p - 1.0 / 3.0).abs() < BRANCH_EPS;
    let fifth = (p - 0.2).abs() < BRANCH_EPS;
    let branch = if third {
        IrreducibilityBranch::SingleEigenvalue
    } else if fifth {
        IrreducibilityBranch::PlaneMaps
    } else {
        IrreducibilityBranch::Generic
    };

    // Eigenplane of C_i for eigenvalue p: row i of C_i - p I is its normal.
    let normals: Vec<Vec3> = (0..3)
        .map(|i| {
            let mut n = Vec3::new(-p, -p, -p);
            n[i] = 1.0 - 3.0 * p;
            n
        })
        .collect();
    let mut plane_res = 0.0f64;
    for (c, n) in cs.iter().zip(&normals) {
        for x in plane_basis(n) {
            plane_res = plane_res.max((c * x - x * p).norm());
        }
    }

    let (mut det, mut vanish) = (None, None);
    if !third {
        let off = -p / (1.0 - 3.0 * p);
        let m = Mat3::from_fn(|i, j| if i == j { 1.0 } else { off });
        let d = m.determinant();
        det = Some(d);
        vanish = Some(d.abs() <= 1e-12);
    }

    let mut top_angle = None;
    let mut plane_angle = None;
    if third {
        let mut worst = f64::INFINITY;
        for (i, n) in normals.iter().enumerate() {
            let nn = n.normalize();
            for (_, c) in cs.iter().enumerate().filter(|&(k, _)| k != i) {
                let off_plane = plane_basis(n)
                    .iter()
                    .map(|x| {
                        let y = c * x;
                        nn.dot(&y).abs().atan2((y - nn * nn.dot(&y)).norm())
                    })
                    .fold(0.0, f64::max);
                worst = worst.min(off_plane);
            }
        }
        plane_angle = Some(worst);
    } else {
        let mut worst = f64::INFINITY;
        for i in 0..3 {
            let mut e = Vec3::zeros();
            e[i] = 1.0;
            for (j, c) in cs.iter().enumerate() {
                if j != i {
                    worst = worst.min(line_angle3(&e, &(c * e)));
                }
            }
        }
        top_angle = Some(worst);
    }

    let d_maps = fifth.then(|| d_map_checks(&cs));
    let planes_ok = plane_res <= EIG_TOL;
    let (passed, note) = match branch {
        IrreducibilityBranch::Generic => (
            planes_ok && vanish == Some(false) && top_angle.is_some_and(|a| a > ANGLE_TOL),
            "eigenplane normals independent and top eigenlines moved".to_string(),
        ),
        IrreducibilityBranch::PlaneMaps => (
            planes_ok
                && vanish == Some(true)
                && top_angle.is_some_and(|a| a > ANGLE_TOL)
                && d_maps.as_ref().is_some_and(|d| d.passed),
            "normals dependent; irreducibility checked for the induced maps on V".to_string(),
        ),
        IrreducibilityBranch::SingleEigenvalue => (
            planes_ok && plane_angle.is_some_and(|a| a > ANGLE_TOL),
            "verified per the separate branch argument: the only eigenspaces are the three planes".to_string(),
        ),
    };
    Ok(IrreducibilityReport {
        p,
        branch,
        normals_determinant: det,
        normals_vanish: vanish,
        eigenplane_residual: plane_res,
        top_eigenline_min_angle: top_angle,
        eigenplane_min_angle: plane_angle,
        d_maps,
        note,
        passed,
    })
}
