//! Finite-element assembly and SPDE-derived GMRF precision matrices.
//!
//! Solutions of `(κ² − Δ)^{α/2} β(s) = W(s)` have Matérn covariance; on a
//! triangular mesh with piecewise-linear bases `ψ_l` the weights get a sparse
//! precision built from the mass matrix `C_ij = ⟨ψ_i ψ_j⟩` and stiffness
//! matrix `G_ij = ⟨∇ψ_i · ∇ψ_j⟩`:
//!
//! ```text
//! K = κ²C + G,     Q₁ = K,   Q₂ = K C̃⁻¹ K,   Q_α = K C̃⁻¹ Q_{α−2} C̃⁻¹ K
//! ```
//!
//! with C replaced by its lumped diagonal `C̃` to keep the Markov sparsity.
//! Non-stationarity enters through a diagonal scaling `T = diag(τ(s_v))`:
//! the precision becomes `T Q_α T`, with `log σ(s)` driven by a local
//! variability score and `log ρ(s)` by a global offset.

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::mesh::TriangularMesh;
use crate::sparse::SymmetricSparse;

/// Spatial dimension of the domain; meshes here are 2-D.
pub const DOMAIN_DIM: f64 = 2.0;

/// Mass and stiffness matrices of the linear finite-element basis.
#[derive(Debug, Clone)]
pub struct FemMatrices {
    /// Consistent mass matrix `C_ij = ⟨ψ_i ψ_j⟩`.
    pub c: SymmetricSparse,
    /// Lumped mass `C̃_ii = ⟨ψ_i, 1⟩` (row sums of C), strictly positive.
    pub c_lumped: Vec<f64>,
    /// Stiffness `G_ij = ⟨∇ψ_i · ∇ψ_j⟩`; `G·1 = 0`.
    pub g: SymmetricSparse,
}

/// Standard linear-element assembly over the mesh triangles.
pub fn assemble_fem(mesh: &TriangularMesh) -> Result<FemMatrices> {
    let n = mesh.n_vertices();
    let mut c_triplets = Vec::with_capacity(9 * mesh.triangles.len());
    let mut g_triplets = Vec::with_capacity(9 * mesh.triangles.len());

    for (t, tri) in mesh.triangles.iter().enumerate() {
        let area = mesh.triangle_area(t);
        if !(area > 1e-14) {
            return Err(Error::Mesh(format!("triangle {t} is degenerate")));
        }
        let p: Vec<[f64; 2]> = tri.iter().map(|&v| mesh.vertices[v]).collect();
        // Barycentric gradients: ∇ψ_i = (b_i, c_i) / (2A) with
        // b_i = y_j − y_k, c_i = x_k − x_j (cyclic).
        let mut b = [0.0; 3];
        let mut c = [0.0; 3];
        for i in 0..3 {
            let j = (i + 1) % 3;
            let k = (i + 2) % 3;
            b[i] = p[j][1] - p[k][1];
            c[i] = p[k][0] - p[j][0];
        }
        for i in 0..3 {
            for j in 0..3 {
                let mass = area / 12.0 * if i == j { 2.0 } else { 1.0 };
                c_triplets.push((tri[i], tri[j], mass));
                let stiff = (b[i] * b[j] + c[i] * c[j]) / (4.0 * area);
                g_triplets.push((tri[i], tri[j], stiff));
            }
        }
    }

    let c = SymmetricSparse::from_triplets(n, &c_triplets)?;
    let g = SymmetricSparse::from_triplets(n, &g_triplets)?;
    let c_lumped: Vec<f64> = (0..n)
        .map(|i| {
            let (_, vals) = c.row(i);
            vals.iter().sum()
        })
        .collect();
    if c_lumped.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::Mesh("lumped mass has a non-positive entry".into()));
    }
    Ok(FemMatrices { c, c_lumped, g })
}

/// Closed-form stationary Matérn marginal variance
/// `σ² = Γ(ν) / (Γ(ν + d/2) (4π)^{d/2} κ^{2ν})` in d = 2.
pub fn matern_marginal_variance(kappa: f64, nu: f64) -> f64 {
    let d = DOMAIN_DIM;
    (ln_gamma(nu) - ln_gamma(nu + d / 2.0) - (d / 2.0) * (4.0 * std::f64::consts::PI).ln()
        - 2.0 * nu * kappa.ln())
    .exp()
}

/// Stationary GMRF precision `Q_α(κ)`.
///
/// With `lumped`, the recursion uses the diagonal `C̃` throughout and stays
/// sparse (the inference path). Without it, the consistent mass matrix is
/// used and the inverse in the recursion is computed densely; that variant
/// exists to quantify the lumping approximation on small meshes.
pub fn precision_stationary(
    fem: &FemMatrices,
    kappa: f64,
    alpha: usize,
    lumped: bool,
) -> Result<SymmetricSparse> {
    if !(kappa > 0.0) {
        return Err(Error::invalid(format!("kappa must be positive, got {kappa}")));
    }
    if !(1..=4).contains(&alpha) {
        return Err(Error::invalid(format!("alpha must be in 1..=4, got {alpha}")));
    }

    // The recursion Q₁ = K, Q₂ = K C⁻¹ K, Q_α = K C⁻¹ Q_{α−2} C⁻¹ K unrolls
    // to Q_α = K (C⁻¹ K)^{α−1}.
    if lumped {
        let scaled: Vec<f64> = fem.c_lumped.iter().map(|&m| kappa * kappa * m).collect();
        let k = fem.g.add_diagonal(&scaled)?;
        let minv: Vec<f64> = fem.c_lumped.iter().map(|&m| 1.0 / m).collect();
        let mut q = k.clone();
        for _ in 1..alpha {
            q = q.product_diag(&minv, &k);
        }
        return Ok(q);
    }

    // Consistent-mass variant (dense inverse, validation only).
    let kd = fem.c.to_dense() * (kappa * kappa) + fem.g.to_dense();
    let mut q = kd.clone();
    if alpha > 1 {
        let c_inv = fem
            .c
            .to_dense()
            .try_inverse()
            .ok_or_else(|| Error::NotPositiveDefinite("consistent mass matrix".into()))?;
        for _ in 1..alpha {
            q = q * &c_inv * &kd;
        }
    }
    let mut triplets = Vec::new();
    for i in 0..q.nrows() {
        for j in 0..q.ncols() {
            let v = 0.5 * (q[(i, j)] + q[(j, i)]);
            if v != 0.0 {
                triplets.push((i, j, v));
            }
        }
    }
    SymmetricSparse::from_triplets(q.nrows(), &triplets)
}

/// Location-dependent SPDE parameters: `log σ(s) = log σ₀ + θ₁ δ(s)` and
/// `log ρ(s) = log ρ₀ + θ₂`, translated to `κ` and the per-vertex scaling
/// `τ(s)`.
#[derive(Debug, Clone)]
pub struct NonstatField {
    pub theta1: f64,
    pub theta2: f64,
    /// Standardized local variability score per vertex.
    pub delta: Vec<f64>,
    pub sigma0: f64,
    pub rho0: f64,
    /// Smoothness; fixed (not estimated). `α = ν + d/2`.
    pub nu: f64,
}

impl NonstatField {
    pub fn new(theta1: f64, theta2: f64, delta: Vec<f64>, sigma0: f64, rho0: f64, nu: f64) -> Result<Self> {
        if !(sigma0 > 0.0 && rho0 > 0.0 && nu > 0.0) {
            return Err(Error::invalid("sigma0, rho0, nu must be positive"));
        }
        if delta.iter().any(|d| !d.is_finite()) {
            return Err(Error::invalid("local variability scores must be finite"));
        }
        Ok(NonstatField { theta1, theta2, delta, sigma0, rho0, nu })
    }

    /// `log κ₀ = log√(8ν) − log ρ₀`.
    pub fn log_kappa0(&self) -> f64 {
        0.5 * (8.0 * self.nu).ln() - self.rho0.ln()
    }

    /// `κ = exp(log κ₀ − θ₂)`; doubling `exp(θ₂)` halves κ.
    pub fn kappa(&self) -> f64 {
        (self.log_kappa0() - self.theta2).exp()
    }

    /// `log τ₀ = ½ log(Γ(ν)/(Γ(ν+d/2)(4π)^{d/2})) − log σ₀ − ν log κ₀`.
    pub fn log_tau0(&self) -> f64 {
        let d = DOMAIN_DIM;
        0.5 * (ln_gamma(self.nu) - ln_gamma(self.nu + d / 2.0)
            - (d / 2.0) * (4.0 * std::f64::consts::PI).ln())
            - self.sigma0.ln()
            - self.nu * self.log_kappa0()
    }

    /// `log τ(s_v) = log τ₀ − θ₁ δ_v + θ₂ ν`.
    pub fn tau(&self) -> Result<Vec<f64>> {
        let t0 = self.log_tau0();
        self.delta
            .iter()
            .map(|&d| {
                let lt = t0 - self.theta1 * d + self.theta2 * self.nu;
                if lt.abs() > 250.0 {
                    return Err(Error::Numerical(format!(
                        "log tau overflow ({lt}); extreme theta/delta combination"
                    )));
                }
                Ok(lt.exp())
            })
            .collect()
    }

    /// Marginal standard deviation implied at vertex `v` when the field
    /// varies slowly: `σ(s_v) = σ₀ exp(θ₁ δ_v)`.
    pub fn local_sd(&self, v: usize) -> f64 {
        self.sigma0 * (self.theta1 * self.delta[v]).exp()
    }
}

/// Non-stationary precision `T Q_α(κ) T` on the lumped-mass path.
pub fn precision_nonstationary(
    fem: &FemMatrices,
    field: &NonstatField,
    alpha: usize,
) -> Result<SymmetricSparse> {
    if field.delta.len() != fem.c_lumped.len() {
        return Err(Error::dims(format!(
            "variability score length {} != mesh size {}",
            field.delta.len(),
            fem.c_lumped.len()
        )));
    }
    let tau = field.tau()?;
    let q = precision_stationary(fem, field.kappa(), alpha, true)?;
    Ok(q.diag_scale(&tau))
}

/// Local variability score per vertex, with its standardization.
#[derive(Debug, Clone)]
pub struct LocalVariability {
    /// Sample standard deviation of `β̂` over `{v} ∪ neighbors(v)`.
    pub raw: Vec<f64>,
    /// Raw score centered and scaled to mean 0, sd 1 across vertices
    /// (all zeros when degenerate).
    pub standardized: Vec<f64>,
    /// Set when the raw score is constant (e.g. a constant `β̂` field), in
    /// which case standardization is impossible.
    pub degenerate: bool,
}

/// Step from fitted coefficients to the smoothness driver `δ`.
pub fn local_variability(beta_hat: &[f64], mesh: &TriangularMesh) -> Result<LocalVariability> {
    if beta_hat.len() != mesh.n_vertices() {
        return Err(Error::dims(format!(
            "beta length {} != mesh size {}",
            beta_hat.len(),
            mesh.n_vertices()
        )));
    }
    let adj = mesh.neighbor_lists();
    let mut raw = Vec::with_capacity(beta_hat.len());
    for v in 0..beta_hat.len() {
        if adj[v].is_empty() {
            return Err(Error::Mesh(format!("vertex {v} is isolated")));
        }
        let mut vals: Vec<f64> = vec![beta_hat[v]];
        vals.extend(adj[v].iter().map(|&u| beta_hat[u]));
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let var = vals.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        raw.push(var.sqrt());
    }
    let n = raw.len() as f64;
    let mean = raw.iter().sum::<f64>() / n;
    let sd = (raw.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    if sd <= 1e-300 {
        return Ok(LocalVariability {
            standardized: vec![0.0; raw.len()],
            raw,
            degenerate: true,
        });
    }
    let standardized = raw.iter().map(|x| (x - mean) / sd).collect();
    Ok(LocalVariability { raw, standardized, degenerate: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::{LdlFactor, Ordering};
    use approx::assert_abs_diff_eq;

    fn right_triangle() -> TriangularMesh {
        TriangularMesh::new(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[0, 1, 2]]).unwrap()
    }

    #[test]
    fn single_triangle_mass_and_stiffness() {
        let fem = assemble_fem(&right_triangle()).unwrap();
        // Total mass = area.
        let total: f64 = fem.c_lumped.iter().sum();
        assert_abs_diff_eq!(total, 0.5, epsilon = 1e-12);
        // Constant in the null space of G.
        let ones = vec![1.0; 3];
        for v in fem.g.mat_vec(&ones) {
            assert_abs_diff_eq!(v, 0.0, epsilon = 1e-10);
        }
        // Symmetry.
        for i in 0..3 {
            for j in 0..3 {
                assert_abs_diff_eq!(fem.c.get(i, j), fem.c.get(j, i), epsilon = 1e-15);
                assert_abs_diff_eq!(fem.g.get(i, j), fem.g.get(j, i), epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn unit_square_mass_totals_domain_area() {
        let mesh = TriangularMesh::unit_square(10).unwrap();
        let fem = assemble_fem(&mesh).unwrap();
        let n = mesh.n_vertices();
        let total: f64 = (0..n).map(|i| fem.c.row(i).1.iter().sum::<f64>()).sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-10);
        let lumped_total: f64 = fem.c_lumped.iter().sum();
        assert_abs_diff_eq!(lumped_total, 1.0, epsilon = 1e-10);
        let ones = vec![1.0; n];
        for v in fem.g.mat_vec(&ones) {
            assert_abs_diff_eq!(v, 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn stiffness_quadratic_form_is_dirichlet_energy() {
        // For f(x,y) = 2x + 3y, ∫|∇f|² over the unit square is 13,
        // independent of refinement (linear functions are reproduced
        // exactly by P1 elements).
        for n in [4, 8, 16] {
            let mesh = TriangularMesh::unit_square(n).unwrap();
            let fem = assemble_fem(&mesh).unwrap();
            let f: Vec<f64> = mesh.vertices.iter().map(|p| 2.0 * p[0] + 3.0 * p[1]).collect();
            let energy = fem.g.quadratic_form(&f);
            assert_abs_diff_eq!(energy, 13.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn alpha_one_is_exactly_kappa2_mass_plus_stiffness() {
        let mesh = TriangularMesh::unit_square(6).unwrap();
        let fem = assemble_fem(&mesh).unwrap();
        let kappa = 3.0;
        let q = precision_stationary(&fem, kappa, 1, true).unwrap();
        for i in 0..mesh.n_vertices() {
            let (cols, _) = q.row(i);
            for &j in cols {
                let expect = fem.g.get(i, j)
                    + if i == j { kappa * kappa * fem.c_lumped[i] } else { 0.0 };
                assert_abs_diff_eq!(q.get(i, j), expect, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn marginal_sd_matches_matern_closed_form_in_interior() {
        // ν = 1 (α = 2): σ² = 1/(4πκ²). Checked on interior nodes of a
        // 900-node unit square; the full-size version is an acceptance
        // criterion.
        let mesh = TriangularMesh::unit_square(20).unwrap();
        let fem = assemble_fem(&mesh).unwrap();
        let rho = 0.25;
        let kappa = 8f64.sqrt() / rho;
        let q = precision_stationary(&fem, kappa, 2, true).unwrap();
        let cov = q.to_dense().try_inverse().unwrap();
        let target = matern_marginal_variance(kappa, 1.0).sqrt();
        let mut worst: f64 = 0.0;
        for (v, p) in mesh.vertices.iter().enumerate() {
            if p[0] > 0.3 && p[0] < 0.7 && p[1] > 0.3 && p[1] < 0.7 {
                let sd = cov[(v, v)].sqrt();
                worst = worst.max((sd - target).abs() / target);
            }
        }
        assert!(worst < 0.10, "interior sd off by {worst:.3}");
    }

    #[test]
    fn correlation_at_range_distance_is_near_013() {
        let mesh = TriangularMesh::unit_square(20).unwrap();
        let fem = assemble_fem(&mesh).unwrap();
        let rho = 0.3;
        let kappa = 8f64.sqrt() / rho;
        let q = precision_stationary(&fem, kappa, 2, true).unwrap();
        let cov = q.to_dense().try_inverse().unwrap();
        // Pick interior vertex pairs at distance ≈ ρ.
        let mut checked = 0;
        for i in 0..mesh.n_vertices() {
            let p = mesh.vertices[i];
            if !(p[0] > 0.3 && p[0] < 0.45 && p[1] > 0.3 && p[1] < 0.7) {
                continue;
            }
            for j in 0..mesh.n_vertices() {
                let d = mesh.distance(i, j);
                if (d - rho).abs() < 0.01 {
                    let corr = cov[(i, j)] / (cov[(i, i)] * cov[(j, j)]).sqrt();
                    assert!(
                        (0.05..=0.25).contains(&corr),
                        "corr {corr} at distance {d} outside [0.05, 0.25]"
                    );
                    checked += 1;
                }
            }
        }
        assert!(checked > 10, "too few pairs at the range distance");
    }

    #[test]
    fn lumped_and_consistent_variances_agree_to_15_percent() {
        let mesh = TriangularMesh::unit_square(16).unwrap();
        let fem = assemble_fem(&mesh).unwrap();
        let kappa = 8f64.sqrt() / 0.3;
        let ql = precision_stationary(&fem, kappa, 2, true).unwrap();
        let qc = precision_stationary(&fem, kappa, 2, false).unwrap();
        let covl = ql.to_dense().try_inverse().unwrap();
        let covc = qc.to_dense().try_inverse().unwrap();
        for (v, p) in mesh.vertices.iter().enumerate() {
            if p[0] > 0.3 && p[0] < 0.7 && p[1] > 0.3 && p[1] < 0.7 {
                let rel = (covl[(v, v)].sqrt() - covc[(v, v)].sqrt()).abs() / covc[(v, v)].sqrt();
                assert!(rel < 0.15, "lumped vs consistent sd differ by {rel:.3}");
            }
        }
    }

    #[test]
    fn q2_sparsity_within_two_ring_adjacency() {
        let mesh = TriangularMesh::unit_square(8).unwrap();
        let fem = assemble_fem(&mesh).unwrap();
        let q = precision_stationary(&fem, 5.0, 2, true).unwrap();
        let adj = mesh.neighbor_lists();
        for i in 0..mesh.n_vertices() {
            let mut two_ring: std::collections::HashSet<usize> = std::collections::HashSet::new();
            two_ring.insert(i);
            for &j in &adj[i] {
                two_ring.insert(j);
                for &k in &adj[j] {
                    two_ring.insert(k);
                }
            }
            for &j in q.row(i).0 {
                assert!(two_ring.contains(&j), "Q2 entry ({i},{j}) outside two-ring");
            }
        }
    }

    #[test]
    fn gmrf_samples_reproduce_marginal_sd() {
        let mesh = TriangularMesh::unit_square(10).unwrap();
        let fem = assemble_fem(&mesh).unwrap();
        let kappa = 8f64.sqrt() / 0.4;
        let q = precision_stationary(&fem, kappa, 2, true).unwrap();
        let f = LdlFactor::new(&q, Ordering::ReverseCuthillMcKee).unwrap();
        let truth = f.selected_inverse_diag();
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(17);
        let reps = 500;
        let mut acc = vec![0.0; q.n()];
        for _ in 0..reps {
            let z = f.sample_zero_mean(&mut rng);
            for (a, &v) in acc.iter_mut().zip(&z) {
                *a += v * v;
            }
        }
        for v in 0..q.n() {
            let mc_sd = (acc[v] / reps as f64).sqrt();
            let sd = truth[v].sqrt();
            // 500 samples: sd of the sd estimate is about sd/√(2·500) ≈ 3%.
            assert!(
                (mc_sd - sd).abs() < 4.0 * sd / (2.0 * reps as f64).sqrt(),
                "vertex {v}: Monte Carlo sd {mc_sd} vs exact {sd}"
            );
        }
    }

    #[test]
    fn nonstationary_reduces_to_scaled_stationary_at_zero_thetas() {
        let mesh = TriangularMesh::unit_square(9).unwrap();
        let fem = assemble_fem(&mesh).unwrap();
        let n = mesh.n_vertices();
        let delta: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let field = NonstatField::new(0.0, 0.0, delta, 1.0, 0.4, 1.0).unwrap();
        let qn = precision_nonstationary(&fem, &field, 2).unwrap();
        let qs = precision_stationary(&fem, field.kappa(), 2, true).unwrap();
        let tau0sq = (2.0 * field.log_tau0()).exp();
        for i in 0..n {
            let (cols, vals) = qn.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                let expect = tau0sq * qs.get(i, j);
                assert!(
                    (v - expect).abs() <= 1e-10 * expect.abs().max(1.0),
                    "entry ({i},{j}): {v} vs {expect}"
                );
            }
        }
    }

    #[test]
    fn doubling_exp_theta2_halves_kappa() {
        let field1 = NonstatField::new(0.3, 0.2, vec![0.0; 4], 1.0, 0.5, 1.0).unwrap();
        let field2 = NonstatField::new(0.3, 0.2 + std::f64::consts::LN_2, vec![0.0; 4], 1.0, 0.5, 1.0).unwrap();
        assert_abs_diff_eq!(field2.kappa(), field1.kappa() / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn higher_delta_region_gets_higher_marginal_sd() {
        // Smooth ramp in δ: the right half of the square should come out
        // with larger marginal sd when θ₁ > 0.
        let mesh = TriangularMesh::unit_square(12).unwrap();
        let fem = assemble_fem(&mesh).unwrap();
        let delta: Vec<f64> = mesh.vertices.iter().map(|p| 2.0 * (p[0] - 0.5)).collect();
        let field = NonstatField::new(0.8, 0.0, delta, 1.0, 0.3, 1.0).unwrap();
        let q = precision_nonstationary(&fem, &field, 2).unwrap();
        let cov = q.to_dense().try_inverse().unwrap();
        let mut left = Vec::new();
        let mut right = Vec::new();
        for (v, p) in mesh.vertices.iter().enumerate() {
            if p[1] < 0.3 || p[1] > 0.7 {
                continue;
            }
            if p[0] > 0.15 && p[0] < 0.35 {
                left.push(cov[(v, v)].sqrt());
            }
            if p[0] > 0.65 && p[0] < 0.85 {
                right.push(cov[(v, v)].sqrt());
            }
        }
        let ml = left.iter().sum::<f64>() / left.len() as f64;
        let mr = right.iter().sum::<f64>() / right.len() as f64;
        assert!(mr > 1.3 * ml, "right (high δ) sd {mr} not larger than left {ml}");
    }

    #[test]
    fn tau_overflow_is_reported() {
        let field = NonstatField::new(300.0, 0.0, vec![5.0; 4], 1.0, 0.5, 1.0).unwrap();
        assert!(matches!(field.tau(), Err(Error::Numerical(_))));
    }

    #[test]
    fn local_variability_cases() {
        let mesh = TriangularMesh::unit_square(29).unwrap(); // 30x30 nodes
        // Constant field: degenerate, raw all zero.
        let lv = local_variability(&vec![2.5; mesh.n_vertices()], &mesh).unwrap();
        assert!(lv.degenerate);
        assert!(lv.raw.iter().all(|&r| r == 0.0));
        assert!(lv.standardized.iter().all(|&s| s == 0.0));

        // Single spike: maximal raw score in the spike's neighborhood.
        let mut beta = vec![0.0; mesh.n_vertices()];
        let spike = 15 * 30 + 15;
        beta[spike] = 10.0;
        let lv = local_variability(&beta, &mesh).unwrap();
        let max_idx = lv
            .raw
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        let adj = mesh.neighbor_lists();
        assert!(max_idx == spike || adj[spike].contains(&max_idx));

        // Smooth linear field on the grid: near-constant raw score away from
        // the boundary (coefficient of variation < 0.2).
        let beta: Vec<f64> = mesh.vertices.iter().map(|p| 3.0 * p[0] + 1.0 * p[1]).collect();
        let lv = local_variability(&beta, &mesh).unwrap();
        let interior: Vec<f64> = mesh
            .vertices
            .iter()
            .enumerate()
            .filter(|(_, p)| p[0] > 0.1 && p[0] < 0.9 && p[1] > 0.1 && p[1] < 0.9)
            .map(|(v, _)| lv.raw[v])
            .collect();
        let mean = interior.iter().sum::<f64>() / interior.len() as f64;
        let sd = (interior.iter().map(|x| (x - mean).powi(2)).sum::<f64>()
            / (interior.len() - 1) as f64)
            .sqrt();
        assert!(sd / mean < 0.2, "CoV = {}", sd / mean);

        // Standardized scores have mean 0, sd 1.
        let m: f64 = lv.standardized.iter().sum::<f64>() / lv.standardized.len() as f64;
        assert!(m.abs() < 1e-10);
    }
}
