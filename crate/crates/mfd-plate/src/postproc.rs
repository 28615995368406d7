//! Error norms, convergence rates, extrapolation and non-dimensional
//! output quantities, plus the closed-form benchmark solution of the clamped
//! source problem.

use crate::error::{Error, Result};
use crate::local_forms::{self, MaterialParams};
use crate::mesh::PolygonalMesh;
use crate::spaces::{DeflectionField, RotationField};
use crate::{Point, Vec2};

/// Closed-form solution of the clamped source problem on the unit square.
///
/// The load is a polynomial chosen so that deflection and rotations vanish on
/// the whole boundary; the deflection carries an explicit thickness
/// correction. Valid for shear correction factor 5/6, any Poisson ratio in
/// (0, 1/2) and any thickness.
#[derive(Debug, Clone, Copy)]
pub struct ManufacturedSolution {
    young: f64,
    poisson: f64,
    thickness: f64,
}

impl ManufacturedSolution {
    pub fn new(mat: &MaterialParams) -> Self {
        ManufacturedSolution {
            young: mat.young,
            poisson: mat.poisson,
            thickness: mat.thickness,
        }
    }

    pub fn deflection(&self, p: Point) -> f64 {
        let (x, y) = (p.x, p.y);
        let t = self.thickness;
        let nu = self.poisson;
        let x3 = x.powi(3) * (x - 1.0).powi(3);
        let y3 = y.powi(3) * (y - 1.0).powi(3);
        let qx = x * (x - 1.0) * (5.0 * x * x - 5.0 * x + 1.0);
        let qy = y * (y - 1.0) * (5.0 * y * y - 5.0 * y + 1.0);
        x3 * y3 / 3.0 - 2.0 * t * t / (5.0 * (1.0 - nu)) * (y3 * qx + x3 * qy)
    }

    pub fn rotation(&self, p: Point) -> Vec2 {
        let (x, y) = (p.x, p.y);
        let b1 = y.powi(3) * (y - 1.0).powi(3) * x * x * (x - 1.0).powi(2) * (2.0 * x - 1.0);
        let b2 = x.powi(3) * (x - 1.0).powi(3) * y * y * (y - 1.0).powi(2) * (2.0 * y - 1.0);
        Vec2::new(b1, b2)
    }

    pub fn load(&self, p: Point) -> f64 {
        let (x, y) = (p.x, p.y);
        let nu = self.poisson;
        let scale = self.young / (12.0 * (1.0 - nu * nu));
        let px = 5.0 * x * x - 5.0 * x + 1.0;
        let py = 5.0 * y * y - 5.0 * y + 1.0;
        scale
            * (12.0 * y * (y - 1.0) * px
                * (2.0 * y * y * (y - 1.0) * (y - 1.0) + x * (x - 1.0) * py)
                + 12.0 * x * (x - 1.0) * py
                    * (2.0 * x * x * (x - 1.0) * (x - 1.0) + y * (y - 1.0) * px))
    }
}

/// Relative discrete errors of a source solve against interpolated reference
/// fields.
#[derive(Debug, Clone, Copy)]
pub struct SourceErrors {
    /// max-norm rotation error over vertices and components.
    pub rot_inf: f64,
    /// max-norm deflection error over vertices.
    pub w_inf: f64,
    /// bending-energy rotation error.
    pub rot_energy: f64,
    /// shear-product energy error of the discrete gradient.
    pub w_energy: f64,
}

/// Computes the four relative errors between a discrete solution and the
/// interpolant of a reference solution. The energy quotients use exactly the
/// assembled local forms.
pub fn errors(
    rot_h: &RotationField,
    w_h: &DeflectionField,
    rot_ref: &RotationField,
    w_ref: &DeflectionField,
    mesh: &PolygonalMesh,
    mat: &MaterialParams,
) -> Result<SourceErrors> {
    let nv = mesh.num_vertices();
    let mut rot_diff_max = 0.0f64;
    let mut rot_ref_max = 0.0f64;
    let mut w_diff_max = 0.0f64;
    let mut w_ref_max = 0.0f64;
    for v in 0..nv {
        let d = rot_ref.0[v] - rot_h.0[v];
        rot_diff_max = rot_diff_max.max(d.x.abs()).max(d.y.abs());
        rot_ref_max = rot_ref_max
            .max(rot_ref.0[v].x.abs())
            .max(rot_ref.0[v].y.abs());
        w_diff_max = w_diff_max.max((w_ref.0[v] - w_h.0[v]).abs());
        w_ref_max = w_ref_max.max(w_ref.0[v].abs());
    }
    if rot_ref_max == 0.0 || w_ref_max == 0.0 {
        return Err(Error::ZeroDenominator);
    }

    let rot_diff = RotationField(
        (0..nv).map(|v| rot_ref.0[v] - rot_h.0[v]).collect(),
    );
    let w_diff = DeflectionField((0..nv).map(|v| w_ref.0[v] - w_h.0[v]).collect());

    let rot_energy_num = bending_energy(&rot_diff, mesh, mat)?;
    let rot_energy_den = bending_energy(rot_ref, mesh, mat)?;
    let w_energy_num = gradient_energy(&w_diff, mesh)?;
    let w_energy_den = gradient_energy(w_ref, mesh)?;
    if rot_energy_den == 0.0 || w_energy_den == 0.0 {
        return Err(Error::ZeroDenominator);
    }

    Ok(SourceErrors {
        rot_inf: rot_diff_max / rot_ref_max,
        w_inf: w_diff_max / w_ref_max,
        rot_energy: (rot_energy_num / rot_energy_den).sqrt(),
        w_energy: (w_energy_num / w_energy_den).sqrt(),
    })
}

/// Global bending form applied to one rotation field (sum of local
/// quadratic forms over all cells, eliminated vertices included).
pub fn bending_energy(
    rot: &RotationField,
    mesh: &PolygonalMesh,
    mat: &MaterialParams,
) -> Result<f64> {
    let mut total = 0.0;
    for c in 0..mesh.num_cells() {
        let geom = mesh.cell_geometry(c)?;
        let bend = local_forms::bending_matrix(&geom, mat)?;
        let vs = &mesh.cell(c).vertices;
        let m = vs.len();
        let mut local = nalgebra::DVector::<f64>::zeros(2 * m);
        for (i, &v) in vs.iter().enumerate() {
            local[2 * i] = rot.0[v].x;
            local[2 * i + 1] = rot.0[v].y;
        }
        total += local.dot(&(&bend.matrix * &local));
    }
    Ok(total.max(0.0))
}

/// Shear scalar product applied to the discrete gradient of a deflection
/// field (material-free).
pub fn gradient_energy(w: &DeflectionField, mesh: &PolygonalMesh) -> Result<f64> {
    let mut total = 0.0;
    for c in 0..mesh.num_cells() {
        let geom = mesh.cell_geometry(c)?;
        let shear = local_forms::shear_product_matrix(&geom)?;
        let vs = &mesh.cell(c).vertices;
        let m = vs.len();
        let mut grad = nalgebra::DVector::<f64>::zeros(m);
        for i in 0..m {
            let a = vs[i];
            let b = vs[(i + 1) % m];
            grad[i] = (w.0[b] - w.0[a]) / geom.edge_len[i];
        }
        total += grad.dot(&(&shear.matrix * &grad));
    }
    Ok(total.max(0.0))
}

/// Experimental rate of convergence between two consecutive refinements.
pub fn convergence_rate(e: f64, e_next: f64, h: f64, h_next: f64) -> Result<f64> {
    if !(e > 0.0 && e_next > 0.0 && h > 0.0 && h_next > 0.0) {
        return Err(Error::InvalidInput(
            "convergence rate needs positive errors and mesh sizes".into(),
        ));
    }
    if h == h_next {
        return Err(Error::InvalidInput(
            "convergence rate needs distinct mesh sizes".into(),
        ));
    }
    Ok((e / e_next).ln() / (h / h_next).ln())
}

#[derive(Debug, Clone, Copy)]
pub struct Extrapolation {
    pub order: f64,
    pub limit: f64,
    /// Root-mean-square misfit of the model v* + C h^p.
    pub residual: f64,
    /// Set when the fit could not determine the order (constant data or a
    /// residual above threshold).
    pub flagged: bool,
}

/// Least-squares fit of `v(h) = v* + C h^p` over (p, v*, C); the order is
/// located by golden-section search, the two linear parameters by normal
/// equations.
pub fn extrapolate(values: &[f64], hs: &[f64]) -> Result<Extrapolation> {
    if values.len() != hs.len() || values.len() < 3 {
        return Err(Error::InvalidInput(
            "extrapolation needs at least three (h, value) samples".into(),
        ));
    }
    if hs.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidInput(
            "mesh sizes must be strictly decreasing".into(),
        ));
    }

    let misfit = |p: f64| -> (f64, f64, f64) {
        // linear least squares for (v*, C) at fixed p
        let n = values.len() as f64;
        let mut s_h = 0.0;
        let mut s_hh = 0.0;
        let mut s_v = 0.0;
        let mut s_hv = 0.0;
        for (&v, &h) in values.iter().zip(hs) {
            let hp = h.powf(p);
            s_h += hp;
            s_hh += hp * hp;
            s_v += v;
            s_hv += hp * v;
        }
        let det = n * s_hh - s_h * s_h;
        if det.abs() < 1e-300 {
            return (f64::INFINITY, 0.0, 0.0);
        }
        let v_star = (s_hh * s_v - s_h * s_hv) / det;
        let c = (n * s_hv - s_h * s_v) / det;
        let mut res = 0.0;
        for (&v, &h) in values.iter().zip(hs) {
            let d = v_star + c * h.powf(p) - v;
            res += d * d;
        }
        ((res / n).sqrt(), v_star, c)
    };

    // golden-section search on the order
    let (mut lo, mut hi) = (0.05f64, 8.0f64);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut p1 = hi - phi * (hi - lo);
    let mut p2 = lo + phi * (hi - lo);
    let mut f1 = misfit(p1).0;
    let mut f2 = misfit(p2).0;
    for _ in 0..200 {
        if f1 <= f2 {
            hi = p2;
            p2 = p1;
            f2 = f1;
            p1 = hi - phi * (hi - lo);
            f1 = misfit(p1).0;
        } else {
            lo = p1;
            p1 = p2;
            f1 = f2;
            p2 = lo + phi * (hi - lo);
            f2 = misfit(p2).0;
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    let p = 0.5 * (lo + hi);
    let (residual, limit, c) = misfit(p);

    let scale = values.iter().fold(0.0f64, |a, &b| a.max(b.abs())).max(1e-300);
    let undetermined = c.abs() * hs[0].powf(p) <= 1e-12 * scale;
    let flagged = undetermined || residual > 1e-6 * scale;
    Ok(Extrapolation {
        order: p,
        limit,
        residual,
        flagged,
    })
}

/// Log-log least-squares order for error sequences with known zero limit.
pub fn fit_order(errors: &[f64], hs: &[f64]) -> Result<f64> {
    if errors.len() != hs.len() || errors.len() < 2 {
        return Err(Error::InvalidInput(
            "order fit needs at least two (h, error) samples".into(),
        ));
    }
    if errors.iter().chain(hs).any(|&v| !(v > 0.0)) {
        return Err(Error::InvalidInput(
            "order fit needs positive errors and mesh sizes".into(),
        ));
    }
    let n = errors.len() as f64;
    let mut sx = 0.0;
    let mut sy = 0.0;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&e, &h) in errors.iter().zip(hs) {
        let x = h.ln();
        let y = e.ln();
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    Ok((n * sxy - sx * sy) / (n * sxx - sx * sx))
}

/// Non-dimensional frequency for one computed eigenvalue: the angular
/// frequency t sqrt(lambda / rho), scaled by L sqrt(2 (1 + nu) rho / E).
pub fn nondim_frequency(lambda: f64, mat: &MaterialParams, length: f64) -> Result<f64> {
    if lambda < 0.0 {
        return Err(Error::InvalidInput(format!(
            "vibration eigenvalue must be non-negative, got {lambda}"
        )));
    }
    let omega = mat.thickness * (lambda / mat.density).sqrt();
    Ok(omega * length * (2.0 * (1.0 + mat.poisson) * mat.density / mat.young).sqrt())
}

/// Non-dimensional buckling intensity for one computed eigenvalue:
/// K = 12 (1 - nu^2) L^2 lambda / (pi^2 E), equivalently
/// lambda^{bc} t L^2 / (pi^2 D) with lambda^{bc} = lambda t^2 and D the
/// flexural rigidity. This is the scaling under which the classical
/// thin-plate intensities (2, 5, 8 for the simply supported uniformly
/// compressed square) are recovered as t -> 0.
pub fn nondim_buckling(lambda_bp: f64, mat: &MaterialParams, length: f64) -> Result<f64> {
    if !(lambda_bp > 0.0) {
        return Err(Error::InvalidInput(format!(
            "buckling eigenvalue must be positive, got {lambda_bp}"
        )));
    }
    let lambda_bc = lambda_bp * mat.thickness * mat.thickness;
    Ok(lambda_bc * mat.thickness * length * length
        / (std::f64::consts::PI.powi(2) * mat.flexural_rigidity()))
}

/// One row of a study campaign.
#[derive(Debug, Clone)]
pub struct StudyRecord {
    pub family: crate::mesh::MeshFamily,
    pub n: usize,
    /// Largest cell diameter of the generated mesh.
    pub h: f64,
    pub thickness: f64,
    pub values: Vec<f64>,
}
