use serde::{Deserialize, Serialize};

use crate::error::{FvemError, Result};
use crate::mesh::Mesh;

/// Coefficients of a function in S_h with respect to the interior nodal
/// basis; boundary values are implicitly zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodalField {
    mesh_id: u64,
    values: Vec<f64>,
}

impl NodalField {
    pub fn new(mesh: &Mesh, values: Vec<f64>) -> Result<NodalField> {
        if values.len() != mesh.num_interior() {
            return Err(FvemError::invalid(format!(
                "field has {} values but the mesh has {} interior vertices",
                values.len(),
                mesh.num_interior()
            )));
        }
        Ok(NodalField {
            mesh_id: mesh.id(),
            values,
        })
    }

    pub fn zeros(mesh: &Mesh) -> NodalField {
        NodalField {
            mesh_id: mesh.id(),
            values: vec![0.0; mesh.num_interior()],
        }
    }

    /// Wraps raw values for a mesh with the given fingerprint.
    pub fn from_raw(mesh_id: u64, values: Vec<f64>) -> NodalField {
        NodalField { mesh_id, values }
    }

    pub fn mesh_id(&self) -> u64 {
        self.mesh_id
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn check_mesh(&self, mesh: &Mesh) -> Result<()> {
        if self.mesh_id == mesh.id() && self.values.len() == mesh.num_interior() {
            Ok(())
        } else {
            Err(FvemError::MeshMismatch)
        }
    }

    fn check_same(&self, other: &NodalField) -> Result<()> {
        if self.mesh_id == other.mesh_id && self.values.len() == other.values.len() {
            Ok(())
        } else {
            Err(FvemError::MeshMismatch)
        }
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, s: f64, other: &NodalField) -> Result<NodalField> {
        self.check_same(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + s * b).collect();
        Ok(NodalField::from_raw(self.mesh_id, values))
    }

    pub fn sub(&self, other: &NodalField) -> Result<NodalField> {
        self.add_scaled(-1.0, other)
    }

    pub fn scaled(&self, s: f64) -> NodalField {
        NodalField::from_raw(self.mesh_id, self.values.iter().map(|v| s * v).collect())
    }

    /// Values at every mesh vertex, zero on the boundary.
    pub fn vertex_values(&self, mesh: &Mesh) -> Vec<f64> {
        let mut full = vec![0.0; mesh.num_vertices()];
        for (&v, &x) in mesh.interior_vertices().iter().zip(&self.values) {
            full[v] = x;
        }
        full
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}
