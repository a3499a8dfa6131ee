//! Discrete operators on S_h: projections, the quadrature-error operator
//! `Q_h`, the FV discrete elliptic operator and its eigen-decomposition.
//!
//! A [`Discretization`] bundles a mesh with the assembled matrices for one
//! elliptic operator. With [`OperatorKind::Laplacian`] the stiffness matrix is
//! `S`; with [`OperatorKind::General`] it is `S_alpha + B_beta`, the matrix of
//! the modified form `a~_h(psi, J_h chi)`. All other operations are shared.

use crate::assembly::{self, CoefficientField};
use crate::eigen::{self, EigenCount, EigenDecomposition, DENSE_EIGEN_LIMIT};
use crate::error::{FvemError, Result};
use crate::field::NodalField;
use crate::geometry::Point;
use crate::mesh::Mesh;
use crate::quadrature::QuadratureRule;
use crate::sparse::{dot, solve_pcg, CgOptions, CsrMatrix};

/// Relative residual for systems with `M` or `M~`.
pub const MASS_SOLVE_TOL: f64 = 1e-14;

#[derive(Clone, Debug)]
pub enum OperatorKind {
    /// `-Delta`.
    Laplacian,
    /// `-div(alpha grad) + beta` with coefficients sampled at barycenters.
    General(CoefficientField),
}

impl OperatorKind {
    pub fn is_general(&self) -> bool {
        matches!(self, OperatorKind::General(_))
    }
}

/// Right-hand side data for the elliptic projection.
#[derive(Clone, Copy)]
pub enum RitzSource<'a> {
    /// `grad w`; the projection solves `(grad R_h w, grad chi) = (grad w, grad chi)`.
    /// Only meaningful for the Laplacian.
    Gradient(&'a (dyn Fn(Point) -> Point + Sync)),
    /// `A w`; the projection solves `K x = ((A w), Phi_i)`.
    OperatorImage(&'a (dyn Fn(Point) -> f64 + Sync)),
}

#[derive(Clone, Debug)]
pub struct Discretization<'m> {
    mesh: &'m Mesh,
    kind: OperatorKind,
    mass: CsrMatrix,
    fv_mass: CsrMatrix,
    difference: CsrMatrix,
    laplacian: CsrMatrix,
    stiffness: CsrMatrix,
    cg: CgOptions,
    rule: QuadratureRule,
}

impl<'m> Discretization<'m> {
    pub fn new(mesh: &'m Mesh, kind: OperatorKind) -> Result<Discretization<'m>> {
        // The Laplacian goes through the coefficient path with an explicit identity.
        let laplacian = assembly::stiffness_matrix(mesh, Some(&CoefficientField::laplacian()))?;
        let stiffness = match &kind {
            OperatorKind::Laplacian => laplacian.clone(),
            OperatorKind::General(c) => {
                let s = assembly::stiffness_matrix(mesh, Some(c))?;
                s.add_scaled(1.0, &assembly::fv_beta_matrix(mesh, c)?)
            }
        };
        Ok(Discretization {
            mesh,
            kind,
            mass: assembly::mass_matrix(mesh),
            fv_mass: assembly::fv_mass_matrix(mesh),
            difference: assembly::mass_difference_matrix(mesh),
            laplacian,
            stiffness,
            cg: CgOptions::default(),
            rule: QuadratureRule::of_degree(4)?,
        })
    }

    pub fn laplacian(mesh: &'m Mesh) -> Result<Discretization<'m>> {
        Discretization::new(mesh, OperatorKind::Laplacian)
    }

    pub fn general(mesh: &'m Mesh, coeff: CoefficientField) -> Result<Discretization<'m>> {
        Discretization::new(mesh, OperatorKind::General(coeff))
    }

    pub fn with_cg(mut self, cg: CgOptions) -> Self {
        self.cg = cg;
        self
    }

    pub fn with_rule(mut self, rule: QuadratureRule) -> Self {
        self.rule = rule;
        self
    }

    pub fn mesh(&self) -> &'m Mesh {
        self.mesh
    }

    pub fn kind(&self) -> &OperatorKind {
        &self.kind
    }

    pub fn cg_options(&self) -> &CgOptions {
        &self.cg
    }

    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }

    pub fn dim(&self) -> usize {
        self.mesh.num_interior()
    }

    /// Standard mass matrix `M`.
    pub fn mass(&self) -> &CsrMatrix {
        &self.mass
    }

    /// FV mass matrix `M~`.
    pub fn fv_mass(&self) -> &CsrMatrix {
        &self.fv_mass
    }

    /// `M~ - M`, the matrix of `epsilon_h` on S_h.
    pub fn difference(&self) -> &CsrMatrix {
        &self.difference
    }

    /// Laplacian stiffness `S`, whatever the operator kind.
    pub fn laplacian_stiffness(&self) -> &CsrMatrix {
        &self.laplacian
    }

    /// Operator stiffness `K`: `S` or `S_alpha + B_beta`.
    pub fn stiffness(&self) -> &CsrMatrix {
        &self.stiffness
    }

    pub fn field(&self, values: Vec<f64>) -> Result<NodalField> {
        NodalField::new(self.mesh, values)
    }

    fn wrap(&self, values: Vec<f64>) -> NodalField {
        NodalField::from_raw(self.mesh.id(), values)
    }

    pub(crate) fn solve(&self, a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
        let mut x = vec![0.0; b.len()];
        solve_pcg(a, b, &mut x, &self.cg)?;
        Ok(x)
    }

    /// Mass-matrix solves: the mass matrices are well conditioned uniformly
    /// in h, so they are solved to a tighter tolerance than the stiffness.
    pub(crate) fn solve_mass(&self, a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
        let opts = CgOptions {
            rel_tol: self.cg.rel_tol.min(MASS_SOLVE_TOL),
            ..self.cg
        };
        let mut x = vec![0.0; b.len()];
        solve_pcg(a, b, &mut x, &opts)?;
        Ok(x)
    }

    /// `I_h v`: nodal values at interior vertices.
    pub fn interpolate(&self, v: &dyn Fn(Point) -> f64) -> NodalField {
        let values = self.mesh.interior_vertices().iter().map(|&z| v(self.mesh.vertex(z))).collect();
        self.wrap(values)
    }

    /// `P_h v`: solves `M x = ((v, Phi_i))`.
    pub fn l2_project(&self, v: &(dyn Fn(Point) -> f64 + Sync)) -> Result<NodalField> {
        let b = assembly::load_vector(self.mesh, v, &self.rule);
        Ok(self.wrap(self.solve_mass(&self.mass, &b)?))
    }

    /// `P_h` of a field already in S_h (identity up to solver tolerance).
    pub fn l2_project_field(&self, v: &NodalField) -> Result<NodalField> {
        v.check_mesh(self.mesh)?;
        let b = self.mass.mul_vec(v.values());
        Ok(self.wrap(self.solve_mass(&self.mass, &b)?))
    }

    /// `R_h v`, the elliptic projection for the operator of this discretization.
    pub fn ritz_project(&self, source: RitzSource) -> Result<NodalField> {
        let b = match source {
            RitzSource::Gradient(g) => {
                if self.kind.is_general() {
                    return Err(FvemError::invalid(
                        "gradient data defines the Ritz projection only for the Laplacian; use the operator image",
                    ));
                }
                assembly::gradient_load_vector(self.mesh, g, &self.rule)
            }
            RitzSource::OperatorImage(f) => assembly::load_vector(self.mesh, f, &self.rule),
        };
        Ok(self.wrap(self.solve(&self.stiffness, &b)?))
    }

    /// `R_h` of a field already in S_h.
    pub fn ritz_project_field(&self, v: &NodalField) -> Result<NodalField> {
        v.check_mesh(self.mesh)?;
        let b = self.stiffness.mul_vec(v.values());
        Ok(self.wrap(self.solve(&self.stiffness, &b)?))
    }

    /// `Q_h psi`: solves `K x = (M~ - M) psi`.
    pub fn qh_apply(&self, psi: &NodalField) -> Result<NodalField> {
        psi.check_mesh(self.mesh)?;
        let b = self.difference.mul_vec(psi.values());
        Ok(self.wrap(self.solve(&self.stiffness, &b)?))
    }

    /// `Delta~_h w = -M~^-1 K w` (for the general kind, `-A~_h w`).
    pub fn discrete_operator_apply(&self, w: &NodalField) -> Result<NodalField> {
        w.check_mesh(self.mesh)?;
        let b: Vec<f64> = self.stiffness.mul_vec(w.values()).iter().map(|x| -x).collect();
        Ok(self.wrap(self.solve_mass(&self.fv_mass, &b)?))
    }

    /// `||v||`, from the mass quadratic form.
    pub fn l2_norm(&self, v: &NodalField) -> f64 {
        self.mass.quad_form(v.values()).max(0.0).sqrt()
    }

    /// `|||v||| = <v, v>^(1/2)`.
    pub fn fv_norm(&self, v: &NodalField) -> f64 {
        self.fv_mass.quad_form(v.values()).max(0.0).sqrt()
    }

    /// `||grad v||`, from the Laplacian stiffness quadratic form.
    pub fn h1_seminorm(&self, v: &NodalField) -> f64 {
        self.laplacian.quad_form(v.values()).max(0.0).sqrt()
    }

    /// `<u, w> = (u, J_h w)`.
    pub fn fv_inner(&self, u: &NodalField, w: &NodalField) -> f64 {
        self.fv_mass.bilinear(u.values(), w.values())
    }

    pub fn l2_inner(&self, u: &NodalField, w: &NodalField) -> f64 {
        dot(u.values(), &self.mass.mul_vec(w.values()))
    }

    /// Generalized eigenpairs of `(K, M~)`. The dense method is used for all
    /// pairs up to [`DENSE_EIGEN_LIMIT`] unknowns; partial requests above it
    /// use block inverse iteration.
    pub fn eigendecompose(&self, count: EigenCount) -> Result<EigenDecomposition> {
        let n = self.dim();
        match count {
            EigenCount::All => eigen::dense_generalized_eigen(self.mesh.id(), &self.stiffness, &self.fv_mass),
            EigenCount::Smallest(k) if n <= DENSE_EIGEN_LIMIT => {
                let mut all = eigen::dense_generalized_eigen(self.mesh.id(), &self.stiffness, &self.fv_mass)?;
                all.truncate(k);
                Ok(all)
            }
            EigenCount::Smallest(k) => {
                eigen::smallest_eigenpairs(self.mesh.id(), &self.stiffness, &self.fv_mass, k, &self.cg, 1e-10)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_almost_symmetric, generate_counterexample_stripes, generate_uniform_symmetric};
    use std::f64::consts::PI;

    fn phi11(p: Point) -> f64 {
        2.0 * (PI * p.x).sin() * (PI * p.y).sin()
    }

    fn random_field(d: &Discretization, seed: u64) -> NodalField {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        d.field((0..d.dim()).map(|_| rng.random::<f64>() - 0.5).collect()).unwrap()
    }

    #[test]
    fn projections_are_identity_on_sh() {
        let mesh = generate_almost_symmetric(8, 1.0, 3).unwrap();
        let d = Discretization::laplacian(&mesh).unwrap();
        let v = random_field(&d, 1);
        for w in [d.l2_project_field(&v).unwrap(), d.ritz_project_field(&v).unwrap()] {
            let diff = w.sub(&v).unwrap().max_abs();
            assert!(diff < 1e-10, "{diff}");
        }
    }

    #[test]
    fn interpolation_reproduces_linears() {
        let mesh = generate_counterexample_stripes(8).unwrap();
        let d = Discretization::laplacian(&mesh).unwrap();
        let lin = |p: Point| 2.0 * p.x - 0.5 * p.y + 0.25;
        let v = d.interpolate(&lin);
        for (&z, &val) in mesh.interior_vertices().iter().zip(v.values()) {
            assert_eq!(val, lin(mesh.vertex(z)));
        }
    }

    #[test]
    fn l2_projection_is_orthogonal() {
        let mesh = generate_uniform_symmetric(8).unwrap();
        let d = Discretization::laplacian(&mesh).unwrap();
        let p = d.l2_project(&phi11).unwrap();
        let rule = QuadratureRule::of_degree(4).unwrap();
        let b = assembly::load_vector(&mesh, &phi11, &rule);
        let chi = random_field(&d, 7);
        let lhs = d.l2_inner(&p, &chi);
        assert!((lhs - dot(&b, chi.values())).abs() < 1e-12);
    }

    #[test]
    fn ritz_sources_agree() {
        let mesh = generate_uniform_symmetric(16).unwrap();
        let d = Discretization::laplacian(&mesh).unwrap();
        let grad = |p: Point| {
            Point::new(
                2.0 * PI * (PI * p.x).cos() * (PI * p.y).sin(),
                2.0 * PI * (PI * p.x).sin() * (PI * p.y).cos(),
            )
        };
        let image = |p: Point| 2.0 * PI * PI * phi11(p);
        let a = d.ritz_project(RitzSource::Gradient(&grad)).unwrap();
        let b = d.ritz_project(RitzSource::OperatorImage(&image)).unwrap();
        assert!(a.sub(&b).unwrap().max_abs() < 1e-6);
        let general = Discretization::general(&mesh, CoefficientField::smooth_variable()).unwrap();
        assert!(general.ritz_project(RitzSource::Gradient(&grad)).is_err());
    }

    #[test]
    fn qh_residual_and_zero() {
        let mesh = generate_counterexample_stripes(8).unwrap();
        let d = Discretization::laplacian(&mesh).unwrap();
        assert_eq!(d.qh_apply(&NodalField::zeros(&mesh)).unwrap().max_abs(), 0.0);
        let psi = random_field(&d, 2);
        let q = d.qh_apply(&psi).unwrap();
        for s in 0..5 {
            let chi = random_field(&d, 100 + s);
            let lhs = d.stiffness().bilinear(chi.values(), q.values());
            let rhs = d.difference().bilinear(chi.values(), psi.values());
            assert!((lhs - rhs).abs() < 1e-10);
        }
    }

    #[test]
    fn discrete_operator_identities() {
        let mesh = generate_almost_symmetric(8, 1.0, 11).unwrap();
        let d = Discretization::laplacian(&mesh).unwrap();
        let w = random_field(&d, 5);
        let u = random_field(&d, 6);
        let lw = d.discrete_operator_apply(&w).unwrap();
        let lu = d.discrete_operator_apply(&u).unwrap();
        let h1 = d.h1_seminorm(&w);
        assert!((d.fv_inner(&lw, &w) + h1 * h1).abs() < 1e-10 * h1 * h1);
        let sa = (d.fv_inner(&lu, &w) - d.fv_inner(&u, &lw)).abs();
        assert!(sa <= 1e-10 * d.l2_norm(&u) * d.l2_norm(&w), "{sa}");
    }

    #[test]
    fn eigenvectors_are_eigenfunctions_of_discrete_operator() {
        let mesh = generate_uniform_symmetric(8).unwrap();
        let d = Discretization::laplacian(&mesh).unwrap();
        let e = d.eigendecompose(EigenCount::Smallest(3)).unwrap();
        assert_eq!(e.len(), 3);
        for j in 0..3 {
            let phi = e.vector(j);
            let lphi = d.discrete_operator_apply(&phi).unwrap();
            let expected = phi.scaled(-e.values()[j]);
            let err = lphi.sub(&expected).unwrap().max_abs() / expected.max_abs();
            assert!(err < 1e-9, "{err}");
        }
    }

    #[test]
    fn identity_coefficients_reduce_to_laplacian() {
        let mesh = generate_almost_symmetric(8, 1.0, 2).unwrap();
        let lap = Discretization::laplacian(&mesh).unwrap();
        let gen = Discretization::general(&mesh, CoefficientField::laplacian()).unwrap();
        assert_eq!(lap.stiffness(), gen.stiffness());
        let w = random_field(&lap, 9);
        assert_eq!(
            lap.discrete_operator_apply(&w).unwrap(),
            gen.discrete_operator_apply(&w).unwrap()
        );
    }
}
