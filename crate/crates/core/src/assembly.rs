//! Matrices of the bilinear forms over the interior nodal basis.
//!
//! Every local block comes from a closed-form expression in the triangle
//! area and the barycentric gradients; no quadrature is involved, so the
//! algebraic identities between the forms hold to rounding. Symmetric local
//! blocks are filled from their upper triangle and mirrored, which together
//! with the insertion-ordered summation in [`CsrMatrix::from_triplets`] makes
//! the assembled matrices exactly symmetric.

use std::fmt;
use std::sync::Arc;

use crate::error::{FvemError, Result};
use crate::field::NodalField;
use crate::geometry::{self, mat2_apply, Mat2, Point, IDENTITY};
use crate::mesh::Mesh;
use crate::quadrature::QuadratureRule;
use crate::sparse::CsrMatrix;

pub type Local = [[f64; 3]; 3];

type AlphaFn = dyn Fn(Point) -> Mat2 + Send + Sync;
type BetaFn = dyn Fn(Point) -> f64 + Send + Sync;

/// Diffusion tensor `alpha` and reaction coefficient `beta` of the operator
/// `A u = -div(alpha grad u) + beta u`. Both are sampled at triangle
/// barycenters when assembled.
#[derive(Clone)]
pub struct CoefficientField {
    name: String,
    alpha: Arc<AlphaFn>,
    beta: Arc<BetaFn>,
}

impl fmt::Debug for CoefficientField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoefficientField").field("name", &self.name).finish()
    }
}

impl CoefficientField {
    pub fn new(
        name: impl Into<String>,
        alpha: impl Fn(Point) -> Mat2 + Send + Sync + 'static,
        beta: impl Fn(Point) -> f64 + Send + Sync + 'static,
    ) -> CoefficientField {
        CoefficientField {
            name: name.into(),
            alpha: Arc::new(alpha),
            beta: Arc::new(beta),
        }
    }

    /// `alpha = I`, `beta = 0`.
    pub fn laplacian() -> CoefficientField {
        CoefficientField::new("laplacian", |_| IDENTITY, |_| 0.0)
    }

    pub fn constant(alpha: Mat2, beta: f64) -> CoefficientField {
        CoefficientField::new("constant", move |_| alpha, move |_| beta)
    }

    /// `alpha = diag(1 + x^2/2, 1 + y^2/2)`, `beta = 1 + xy`.
    pub fn smooth_variable() -> CoefficientField {
        CoefficientField::new(
            "smooth",
            |p| [[1.0 + 0.5 * p.x * p.x, 0.0], [0.0, 1.0 + 0.5 * p.y * p.y]],
            |p| 1.0 + p.x * p.y,
        )
    }

    /// `alpha = diag((1+x)^2, (1+y)^2)`, constant `beta`. The operator
    /// separates into Euler-type equations with closed-form eigenfunctions.
    pub fn euler(beta: f64) -> CoefficientField {
        CoefficientField::new(
            "euler",
            |p| [[(1.0 + p.x) * (1.0 + p.x), 0.0], [0.0, (1.0 + p.y) * (1.0 + p.y)]],
            move |_| beta,
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn alpha(&self, p: Point) -> Mat2 {
        (self.alpha)(p)
    }

    pub fn beta(&self, p: Point) -> f64 {
        (self.beta)(p)
    }

    /// `alpha(z_tau)`, checked to be symmetric positive definite.
    pub fn sampled_alpha(&self, mesh: &Mesh, t: usize) -> Result<Mat2> {
        let a = self.alpha(mesh.barycenter(t));
        let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        let finite = a.iter().flatten().all(|v| v.is_finite());
        let symmetric = (a[0][1] - a[1][0]).abs() <= 1e-12 * scale;
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        if !(finite && symmetric && a[0][0] > 0.0 && det > 0.0) {
            return Err(FvemError::Assembly {
                triangle: t,
                message: format!("alpha sample {a:?} is not symmetric positive definite"),
            });
        }
        Ok(a)
    }

    /// `beta(z_tau)`, checked to be finite and nonnegative.
    pub fn sampled_beta(&self, mesh: &Mesh, t: usize) -> Result<f64> {
        let b = self.beta(mesh.barycenter(t));
        if !(b >= 0.0 && b.is_finite()) {
            return Err(FvemError::Assembly {
                triangle: t,
                message: format!("beta sample {b} is negative or not finite"),
            });
        }
        Ok(b)
    }
}

/// Which vertices index the rows and columns.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DofSet {
    /// Interior vertices only (homogeneous Dirichlet data).
    Interior,
    /// All vertices in mesh order.
    AllVertices,
}

impl DofSet {
    fn map(self, mesh: &Mesh) -> Vec<Option<usize>> {
        match self {
            DofSet::Interior => (0..mesh.num_vertices()).map(|v| mesh.interior_index(v)).collect(),
            DofSet::AllVertices => (0..mesh.num_vertices()).map(Some).collect(),
        }
    }

    fn dim(self, mesh: &Mesh) -> usize {
        match self {
            DofSet::Interior => mesh.num_interior(),
            DofSet::AllVertices => mesh.num_vertices(),
        }
    }
}

/// A bilinear form with a per-triangle local block.
#[derive(Clone, Debug)]
pub enum Form<'a> {
    /// `(chi, psi)`.
    Mass,
    /// `<chi, psi> = (chi, J_h psi)`.
    FvMass,
    /// `<chi, psi> - (chi, psi)`.
    MassDifference,
    /// `(alpha~ grad chi, grad psi)`; identity when no field is given.
    Stiffness(Option<&'a CoefficientField>),
    /// `(beta~ chi, J_h psi)`.
    Beta(&'a CoefficientField),
    /// Vertex-quadrature mass `(chi, psi)_h`.
    Lumped,
}

fn symmetric_block(d: f64, o: f64) -> Local {
    [[d, o, o], [o, d, o], [o, o, d]]
}

/// `(|tau|/12) (2, 1)` pattern.
pub fn local_mass(area: f64) -> Local {
    symmetric_block(area * 2.0 / 12.0, area / 12.0)
}

/// `(|tau|/108) (22, 7)` pattern.
pub fn local_fv_mass(area: f64) -> Local {
    symmetric_block(area * 22.0 / 108.0, area * 7.0 / 108.0)
}

/// `local_fv_mass - local_mass = (|tau|/54) (2, -1)`.
pub fn local_mass_difference(area: f64) -> Local {
    symmetric_block(area * 2.0 / 54.0, -area / 54.0)
}

/// `|tau| (alpha g_b) . g_a` with `g` the barycentric gradients.
pub fn local_stiffness(p: &[Point; 3], alpha: &Mat2) -> Local {
    let g = geometry::barycentric_gradients(p);
    let area = geometry::signed_area(p[0], p[1], p[2]);
    let mut k = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in a..3 {
            let v = area * mat2_apply(alpha, g[b]).dot(g[a]);
            k[a][b] = v;
            k[b][a] = v;
        }
    }
    k
}

fn local_block(mesh: &Mesh, form: &Form, t: usize) -> Result<Local> {
    let area = mesh.triangle_area(t);
    Ok(match form {
        Form::Mass => local_mass(area),
        Form::FvMass => local_fv_mass(area),
        Form::MassDifference => local_mass_difference(area),
        Form::Stiffness(coeff) => {
            let alpha = match coeff {
                Some(c) => c.sampled_alpha(mesh, t)?,
                None => IDENTITY,
            };
            local_stiffness(&mesh.triangle_points(t), &alpha)
        }
        Form::Beta(c) => {
            let b = c.sampled_beta(mesh, t)?;
            let m = local_fv_mass(area);
            m.map(|row| row.map(|v| b * v))
        }
        Form::Lumped => {
            let mut m = [[0.0; 3]; 3];
            for (a, row) in m.iter_mut().enumerate() {
                row[a] = area / 3.0;
            }
            m
        }
    })
}

/// Assembles `form` over the chosen degrees of freedom.
pub fn assemble_form(mesh: &Mesh, form: &Form, dofs: DofSet) -> Result<CsrMatrix> {
    let map = dofs.map(mesh);
    let mut triplets = Vec::with_capacity(9 * mesh.num_triangles());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let k = local_block(mesh, form, t)?;
        for a in 0..3 {
            let Some(i) = map[tri[a]] else { continue };
            for b in 0..3 {
                if let Some(j) = map[tri[b]] {
                    triplets.push((i, j, k[a][b]));
                }
            }
        }
    }
    Ok(CsrMatrix::from_triplets(dofs.dim(mesh), &triplets))
}

fn infallible(mesh: &Mesh, form: Form) -> CsrMatrix {
    assemble_form(mesh, &form, DofSet::Interior).expect("form without coefficients cannot fail")
}

pub fn mass_matrix(mesh: &Mesh) -> CsrMatrix {
    infallible(mesh, Form::Mass)
}

pub fn fv_mass_matrix(mesh: &Mesh) -> CsrMatrix {
    infallible(mesh, Form::FvMass)
}

/// Matrix of `epsilon_h` restricted to S_h: `fv_mass - mass`, assembled from its own local block.
pub fn mass_difference_matrix(mesh: &Mesh) -> CsrMatrix {
    infallible(mesh, Form::MassDifference)
}

pub fn lumped_mass_matrix(mesh: &Mesh) -> CsrMatrix {
    infallible(mesh, Form::Lumped)
}

pub fn stiffness_matrix(mesh: &Mesh, alpha: Option<&CoefficientField>) -> Result<CsrMatrix> {
    assemble_form(mesh, &Form::Stiffness(alpha), DofSet::Interior)
}

pub fn fv_beta_matrix(mesh: &Mesh, coeff: &CoefficientField) -> Result<CsrMatrix> {
    assemble_form(mesh, &Form::Beta(coeff), DofSet::Interior)
}

/// Flux form `-int_{dV_i} (alpha~ grad Phi_j) . n`, integrated exactly
/// segment by segment over the dual control volumes.
pub fn fv_flux_stiffness_matrix(mesh: &Mesh, alpha: Option<&CoefficientField>) -> Result<CsrMatrix> {
    fv_flux_stiffness_on(mesh, alpha, DofSet::Interior)
}

pub fn fv_flux_stiffness_on(mesh: &Mesh, alpha: Option<&CoefficientField>, dofs: DofSet) -> Result<CsrMatrix> {
    let map = dofs.map(mesh);
    let alphas = (0..mesh.num_triangles())
        .map(|t| match alpha {
            Some(c) => c.sampled_alpha(mesh, t),
            None => Ok(IDENTITY),
        })
        .collect::<Result<Vec<_>>>()?;
    let grads: Vec<[Point; 3]> = (0..mesh.num_triangles())
        .map(|t| geometry::barycentric_gradients(&mesh.triangle_points(t)))
        .collect();
    let mut triplets = Vec::new();
    for cv in mesh.control_volumes() {
        let Some(i) = map[cv.vertex] else { continue };
        for seg in &cv.boundary_segments {
            let t = seg.triangle;
            let tri = mesh.triangles()[t];
            for b in 0..3 {
                if let Some(j) = map[tri[b]] {
                    let flux = mat2_apply(&alphas[t], grads[t][b]).dot(seg.normal) * seg.length;
                    triplets.push((i, j, -flux));
                }
            }
        }
    }
    Ok(CsrMatrix::from_triplets(dofs.dim(mesh), &triplets))
}

/// Nodal representation of `epsilon_h`: at each interior vertex z,
/// `-(1/54) sum_{tau in patch(z)} |tau| (chi(z+) - 2 chi(z) + chi(z-))`.
pub fn mh_apply(mesh: &Mesh, chi: &NodalField) -> Result<Vec<f64>> {
    chi.check_mesh(mesh)?;
    let full = chi.vertex_values(mesh);
    Ok(mesh
        .interior_vertices()
        .iter()
        .map(|&z| {
            let s: f64 = mesh
                .triangles_of_vertex(z)
                .iter()
                .map(|&t| {
                    let tri = mesh.triangles()[t];
                    let others: f64 = tri.iter().filter(|&&v| v != z).map(|&v| full[v]).sum();
                    mesh.triangle_area(t) * (others - 2.0 * full[z])
                })
                .sum();
            -s / 54.0
        })
        .collect())
}

/// First argument of `epsilon_h`.
#[derive(Clone, Copy)]
pub enum Integrand<'a> {
    Nodal(&'a NodalField),
    Function(&'a (dyn Fn(Point) -> f64 + Sync)),
}

/// `epsilon_h(f, chi) = (f, J_h chi) - (f, chi)`.
///
/// Both terms are integrated geometrically: `(f, J_h chi)` over the
/// quadrilateral pieces of the control volumes (each split into two
/// triangles), `(f, chi)` over the triangles. For nodal `f` a degree-2 rule
/// is used at least, which is exact.
pub fn eps_h(mesh: &Mesh, f: Integrand, chi: &NodalField, rule: &QuadratureRule) -> Result<f64> {
    chi.check_mesh(mesh)?;
    let chi_full = chi.vertex_values(mesh);
    let nodal_rule;
    let (rule, f_full) = match f {
        Integrand::Nodal(psi) => {
            psi.check_mesh(mesh)?;
            nodal_rule = if rule.degree() >= 2 { rule.clone() } else { QuadratureRule::of_degree(2)? };
            (&nodal_rule, Some(psi.vertex_values(mesh)))
        }
        Integrand::Function(_) => (rule, None),
    };
    let mut total = 0.0;
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let p = mesh.triangle_points(t);
        let eval = |lam: [f64; 3]| -> f64 {
            match (&f, &f_full) {
                (_, Some(vals)) => (0..3).map(|a| lam[a] * vals[tri[a]]).sum(),
                (Integrand::Function(g), None) => g(p[0] * lam[0] + p[1] * lam[1] + p[2] * lam[2]),
                _ => unreachable!(),
            }
        };
        let area = mesh.triangle_area(t);
        // (f, chi) on tau.
        let mut galerkin = 0.0;
        for (lam, w) in rule.barycentric().iter().zip(rule.weights()) {
            let chi_val: f64 = (0..3).map(|a| lam[a] * chi_full[tri[a]]).sum();
            galerkin += w * area * eval(*lam) * chi_val;
        }
        // (f, J_h chi) on tau: piece a is z_a, mid(a, a+1), barycenter, mid(a, a+2).
        let third = [1.0 / 3.0; 3];
        let mut fv = 0.0;
        for a in 0..3 {
            let (b, c) = ((a + 1) % 3, (a + 2) % 3);
            let mut za = [0.0; 3];
            za[a] = 1.0;
            let mut mab = [0.0; 3];
            mab[a] = 0.5;
            mab[b] = 0.5;
            let mut mac = [0.0; 3];
            mac[a] = 0.5;
            mac[c] = 0.5;
            let mut piece = 0.0;
            for sub in [[za, mab, third], [za, third, mac]] {
                let sub_area = area / 6.0;
                for (mu, w) in rule.barycentric().iter().zip(rule.weights()) {
                    let lam: [f64; 3] = std::array::from_fn(|k| mu[0] * sub[0][k] + mu[1] * sub[1][k] + mu[2] * sub[2][k]);
                    piece += w * sub_area * eval(lam);
                }
            }
            fv += chi_full[tri[a]] * piece;
        }
        total += fv - galerkin;
    }
    Ok(total)
}

/// `b_i = (f, Phi_i)` over interior vertices.
pub fn load_vector(mesh: &Mesh, f: &(dyn Fn(Point) -> f64 + Sync), rule: &QuadratureRule) -> Vec<f64> {
    let mut b = vec![0.0; mesh.num_interior()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let p = mesh.triangle_points(t);
        for (x, lam, w) in rule.nodes_on(&p) {
            let fx = f(x);
            for a in 0..3 {
                if let Some(i) = mesh.interior_index(tri[a]) {
                    b[i] += w * fx * lam[a];
                }
            }
        }
    }
    b
}

/// `b_i = (grad v, grad Phi_i)` over interior vertices.
pub fn gradient_load_vector(mesh: &Mesh, grad: &(dyn Fn(Point) -> Point + Sync), rule: &QuadratureRule) -> Vec<f64> {
    let mut b = vec![0.0; mesh.num_interior()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let p = mesh.triangle_points(t);
        let g = geometry::barycentric_gradients(&p);
        for (x, _, w) in rule.nodes_on(&p) {
            let gv = grad(x);
            for a in 0..3 {
                if let Some(i) = mesh.interior_index(tri[a]) {
                    b[i] += w * gv.dot(g[a]);
                }
            }
        }
    }
    b
}
