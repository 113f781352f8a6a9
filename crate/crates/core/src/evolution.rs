//! Time evolution `T_t = e^{tL}`, analytic long-time limits on hereditary
//! subalgebras, attraction domains, level occupations and energy transfer.

use crate::error::{Error, Result};
use crate::invariants::{check_dim, support_leakage, transport_sum, Structure, SUPPORT_TOL};
use crate::lindblad::{DensityMatrix, Generator};
use crate::model::ModelSpec;
use crate::numerics::{
    devec, hermitian_eigvals, hermitian_part, matrix_exp, psd_range, re, subspace_equal, trace_norm, vec_op,
    CMatrix, CVector, SubspaceBasis, RANK_TOL,
};
use crate::spectrum::c_beta;
use crate::transport::TransportOps;

/// Membership tolerance for the hereditary subalgebra `A_{U_Z}`.
pub const HEREDITARY_TOL: f64 = 1e-10;
/// Generator residual required of an analytic limit.
pub const LIMIT_INVARIANCE_TOL: f64 = 1e-10;
/// Principal-angle tolerance for range conditions.
pub const RANGE_ANGLE_TOL: f64 = 1e-7;
/// Eigenvalue threshold used when taking ranges of states.
pub const RANGE_EIG_TOL: f64 = 1e-10;
/// Default trace-norm step tolerance of [`limit_state_numeric`].
pub const CONVERGENCE_TOL: f64 = 1e-9;
/// Frobenius tolerance for the η-condition of the attraction domain.
pub const ETA_TOL: f64 = 1e-9;
/// Tolerance accepted when turning propagated matrices back into states.
pub const PROPAGATED_STATE_TOL: f64 = 1e-8;

fn check_time(t: f64) -> Result<()> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::InvalidArgument(format!("time must be finite and >= 0, got {t}")));
    }
    Ok(())
}

/// Dense propagator built on the `d² × d²` Liouvillian.
#[derive(Debug, Clone)]
pub struct Propagator {
    gen: Generator,
    liouvillian: CMatrix,
}

impl Propagator {
    pub fn new(spec: &ModelSpec) -> Self {
        let gen = Generator::new(spec);
        let liouvillian = gen.liouvillian().matrix;
        Self { gen, liouvillian }
    }

    pub fn generator(&self) -> &Generator {
        &self.gen
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.gen.spec
    }

    /// `e^{tŁ}` on vectorized matrices.
    pub fn step(&self, t: f64) -> Result<CMatrix> {
        check_time(t)?;
        matrix_exp(&self.liouvillian, t)
    }

    /// Applies a precomputed step and re-Hermitizes.
    pub fn apply(&self, step: &CMatrix, rho: &CMatrix) -> CMatrix {
        hermitian_part(&devec(&(step * vec_op(rho)), self.gen.spec.d))
    }

    pub fn evolve(&self, rho0: &DensityMatrix, t: f64) -> Result<DensityMatrix> {
        check_dim(self.spec(), rho0.matrix())?;
        check_time(t)?;
        if t == 0.0 {
            return Ok(rho0.clone());
        }
        let step = self.step(t)?;
        to_state(self.apply(&step, rho0.matrix()))
    }

    /// Step-doubling search for `lim T_t(ρ_0)`: stops once
    /// `‖ρ_{2t} − ρ_t‖_tr ≤ tol` and returns `(ρ_{2t}, 2t)`.
    pub fn limit(&self, rho0: &DensityMatrix, t_max: f64, tol: f64) -> Result<(DensityMatrix, f64)> {
        check_dim(self.spec(), rho0.matrix())?;
        if !(t_max > 0.0) {
            return Err(Error::InvalidArgument(format!("t_max must be positive, got {t_max}")));
        }
        let max_rate = self
            .spec()
            .gamma_minus
            .iter()
            .chain(self.spec().gamma_plus.iter())
            .copied()
            .fold(0.0, f64::max);
        let mut t = if max_rate > 0.0 { (1.0 / max_rate).min(t_max) } else { t_max };
        let mut step = self.step(t)?;
        let mut rho = self.apply(&step, rho0.matrix());
        loop {
            let next = self.apply(&step, &rho);
            let diff = trace_norm(&(&next - &rho));
            t *= 2.0;
            if diff <= tol {
                return Ok((to_state(next)?, t));
            }
            if t >= t_max {
                return Err(Error::NoConvergence(format!(
                    "trace-norm step {diff:.3e} > {tol:.1e} at t = {t}"
                )));
            }
            step = &step * &step;
            rho = next;
        }
    }

    /// Sampled trajectory on the uniform grid `t_i = i·t_max/steps`.
    pub fn trajectory(
        &self,
        rho0: &DensityMatrix,
        t_max: f64,
        steps: usize,
        limit: Option<&DensityMatrix>,
    ) -> Result<EvolutionTrace> {
        check_dim(self.spec(), rho0.matrix())?;
        check_time(t_max)?;
        if steps == 0 {
            return Err(Error::InvalidArgument("grid needs at least one step".into()));
        }
        let dt = t_max / steps as f64;
        let step = self.step(dt)?;
        let mut rows = Vec::with_capacity(steps + 1);
        let mut rho = rho0.matrix().clone();
        for i in 0..=steps {
            if i > 0 {
                rho = self.apply(&step, &rho);
            }
            rows.push(TraceRow {
                t: i as f64 * dt,
                occupations: occupations(self.spec(), &rho),
                trace: rho.trace().re,
                min_eig: hermitian_eigvals(&rho)?.first().copied().unwrap_or(0.0),
                dist_to_limit: limit.map(|l| trace_norm(&(&rho - l.matrix()))),
            });
        }
        Ok(EvolutionTrace { levels: self.spec().levels(), rows })
    }
}

fn to_state(m: CMatrix) -> Result<DensityMatrix> {
    DensityMatrix::with_tolerance(m, PROPAGATED_STATE_TOL)
}

/// `T_t(ρ_0)`.
pub fn propagate(spec: &ModelSpec, rho0: &DensityMatrix, t: f64) -> Result<DensityMatrix> {
    Propagator::new(spec).evolve(rho0, t)
}

/// `T_t*(x)` in the Heisenberg picture.
pub fn propagate_dual(spec: &ModelSpec, x: &CMatrix, t: f64) -> Result<CMatrix> {
    check_dim(spec, x)?;
    check_time(t)?;
    let dual = Generator::new(spec).dual_liouvillian().matrix;
    Ok(devec(&(matrix_exp(&dual, t)? * vec_op(x)), spec.d))
}

/// `10⁴ / min positive rate`.
pub fn default_t_max(spec: &ModelSpec) -> f64 {
    1e4 / spec.min_rate()
}

/// Numerical `lim_{t→∞} T_t(ρ_0)` on a doubling grid.
pub fn limit_state_numeric(spec: &ModelSpec, rho0: &DensityMatrix, t_max: f64, tol: f64) -> Result<(DensityMatrix, f64)> {
    Propagator::new(spec).limit(rho0, t_max, tol)
}

fn u_z_with(spec: &ModelSpec, ops: &TransportOps, s: &Structure, u: &SubspaceBasis) -> Result<SubspaceBasis> {
    if u.ambient_dim() != spec.d {
        return Err(Error::AmbientMismatch(u.ambient_dim(), spec.d));
    }
    if u.is_empty() {
        return Err(Error::ZeroVector);
    }
    let vs = u.vectors();
    let leak = vs.iter().map(|v| s.v1_minus_w.leakage(v)).fold(0.0, f64::max);
    if leak > SUPPORT_TOL {
        return Err(Error::SupportViolation(leak));
    }
    let chain: Vec<CVector> = (0..spec.n).flat_map(|n| vs.iter().map(move |v| &ops.powers[n] * v)).collect();
    Ok(SubspaceBasis::from_vectors(spec.d, &chain, RANK_TOL))
}

/// `U_Z = ⨁_{n=0}^{N−1} Z^n U` for `U ⊆ V_1 ⊖ W`.
pub fn u_z_subspace(spec: &ModelSpec, u: &SubspaceBasis) -> Result<SubspaceBasis> {
    let ops = TransportOps::new(spec);
    let s = Structure::with_ops(spec, &ops);
    u_z_with(spec, &ops, &s, u)
}

/// Whether `ρ ∈ A_{U_Z}`, i.e. `‖ρ − P ρ P‖_F ≤ 1e-10` for `P = P_{U_Z}`.
/// An invalid `U` gives `false`.
pub fn hereditary_member(spec: &ModelSpec, rho: &CMatrix, u: &SubspaceBasis) -> bool {
    if rho.nrows() != spec.d || rho.ncols() != spec.d {
        return false;
    }
    match u_z_subspace(spec, u) {
        Ok(uz) => support_leakage(rho, &uz.projector()) <= HEREDITARY_TOL,
        Err(_) => false,
    }
}

/// `η = Σ_{k=0}^{N−1} Z†^k P_{k+1} ρ P_{k+1} Z^k`.
pub fn collapse_to_first_level(spec: &ModelSpec, ops: &TransportOps, rho: &CMatrix) -> CMatrix {
    (0..spec.n).fold(CMatrix::zeros(spec.d, spec.d), |acc, k| acc + level_pullback(ops, rho, k))
}

/// `Z†^k P_{k+1} ρ P_{k+1} Z^k`.
fn level_pullback(ops: &TransportOps, rho: &CMatrix, k: usize) -> CMatrix {
    let zk = &ops.powers[k];
    let p = &ops.projectors[k + 1];
    zk.adjoint() * p * rho * p * zk
}

struct LimitContext {
    gen: Generator,
    s: Structure,
    uz: SubspaceBasis,
    c_beta: f64,
}

impl LimitContext {
    fn new(spec: &ModelSpec, u: &SubspaceBasis) -> Result<Self> {
        let cb = c_beta(spec)?;
        let gen = Generator::new(spec);
        let s = Structure::with_ops(spec, &gen.ops);
        let uz = u_z_with(spec, &gen.ops, &s, u)?;
        Ok(Self { gen, s, uz, c_beta: cb })
    }

    fn leakage(&self, rho: &CMatrix) -> f64 {
        support_leakage(rho, &self.uz.projector())
    }

    fn require_member(&self, rho: &CMatrix) -> Result<()> {
        let leak = self.leakage(rho);
        if leak > HEREDITARY_TOL {
            return Err(Error::NotInSubalgebra(leak));
        }
        Ok(())
    }

    fn transported(&self, eta: &CMatrix) -> CMatrix {
        transport_sum(&self.gen.spec, &self.gen.ops, eta) * re(self.c_beta)
    }

    /// `⨁_n Z^n ran(x)` for a PSD `x` supported in `U`.
    fn chain_range(&self, x: &CMatrix) -> Result<SubspaceBasis> {
        let r = psd_range(x, RANGE_EIG_TOL)?;
        if r.is_empty() {
            return Ok(SubspaceBasis::empty(self.gen.spec.d));
        }
        u_z_with(&self.gen.spec, &self.gen.ops, &self.s, &r)
    }
}

/// Analytic `lim_{t→∞} T_t(ρ_0)` for `ρ_0 ∈ A_{U_Z}` under the dimension
/// hypothesis: `c_β Σ_n e^{Σβ} Z^n η Z†^n` with `η` from
/// [`collapse_to_first_level`]. The result is checked for invariance and
/// for `ran ρ_∞ = ⨁ Z^n ran η`.
pub fn limit_state(spec: &ModelSpec, rho0: &DensityMatrix, u: &SubspaceBasis) -> Result<DensityMatrix> {
    check_dim(spec, rho0.matrix())?;
    let ctx = LimitContext::new(spec, u)?;
    ctx.require_member(rho0.matrix())?;
    let eta = collapse_to_first_level(spec, &ctx.gen.ops, rho0.matrix());
    let rho_inf = ctx.transported(&eta);
    let residual = ctx.gen.residual(&rho_inf)?;
    if residual > LIMIT_INVARIANCE_TOL {
        return Err(Error::ClosedFormMismatch { what: "generator residual of the limit state".into(), residual });
    }
    let threshold = RANGE_EIG_TOL * ctx.c_beta;
    let (same, angle) = subspace_equal(&psd_range(&rho_inf, threshold)?, &ctx.chain_range(&eta)?, RANGE_ANGLE_TOL)?;
    if !same {
        return Err(Error::ClosedFormMismatch { what: "range of the limit state".into(), residual: angle });
    }
    DensityMatrix::new(rho_inf)
}

/// Outcome of [`attraction_domain_check`].
#[derive(Debug, Clone)]
pub struct AttractionVerdict {
    pub in_domain: bool,
    /// `‖Σ Z†^k P_{k+1} ρ_0 P_{k+1} Z^k − η‖_F`.
    pub eta_residual: f64,
    /// Largest principal angle between the two sides of the range condition
    /// (`π/2` when the dimensions differ).
    pub range_angle: f64,
    /// `‖ρ_0 − P ρ_0 P‖_F` for `P = P_{U_Z}`.
    pub leakage: f64,
    pub diagnostic: Option<String>,
}

/// Whether `ρ_0` is attracted to `target = c_β Σ e^{Σβ} Z^n η Z†^n`.
///
/// Both the η-condition and the range condition are evaluated; the union of
/// ranges is taken as their linear span. Initial states outside `A_{U_Z}`
/// are reported as not in the domain.
pub fn attraction_domain_check(
    spec: &ModelSpec,
    rho0: &DensityMatrix,
    target: &DensityMatrix,
    u: &SubspaceBasis,
) -> Result<AttractionVerdict> {
    check_dim(spec, rho0.matrix())?;
    check_dim(spec, target.matrix())?;
    let ctx = LimitContext::new(spec, u)?;
    ctx.require_member(target.matrix())?;
    let ops = &ctx.gen.ops;
    let eta = collapse_to_first_level(spec, ops, target.matrix());
    let form = (ctx.transported(&eta) - target.matrix()).norm();
    if form > ETA_TOL {
        return Err(Error::ClosedFormMismatch { what: "target is not a transported invariant state".into(), residual: form });
    }

    let leakage = ctx.leakage(rho0.matrix());
    if leakage > HEREDITARY_TOL {
        return Ok(AttractionVerdict {
            in_domain: false,
            eta_residual: f64::NAN,
            range_angle: f64::NAN,
            leakage,
            diagnostic: Some("outside hereditary subalgebra".into()),
        });
    }
    let eta0 = collapse_to_first_level(spec, ops, rho0.matrix());
    let eta_residual = (&eta0 - &eta).norm();

    let lhs = ctx.chain_range(&eta)?;
    let mut rhs = SubspaceBasis::empty(spec.d);
    for k in 0..spec.n {
        rhs = rhs.join(&ctx.chain_range(&level_pullback(ops, rho0.matrix(), k))?)?;
    }
    let (_, range_angle) = subspace_equal(&lhs, &rhs, RANGE_ANGLE_TOL)?;

    let eta_ok = eta_residual <= ETA_TOL;
    let range_ok = range_angle <= RANGE_ANGLE_TOL;
    let diagnostic = match (eta_ok, range_ok) {
        (true, true) => None,
        (false, true) => Some("eta mismatch".into()),
        (true, false) => Some("range deficit".into()),
        (false, false) => Some("eta mismatch; range deficit".into()),
    };
    Ok(AttractionVerdict { in_domain: eta_ok && range_ok, eta_residual, range_angle, leakage, diagnostic })
}

/// `tr(ρ P_k)` for k = 0..N+1.
pub fn occupations(spec: &ModelSpec, rho: &CMatrix) -> Vec<f64> {
    (0..spec.levels())
        .map(|k| (spec.offsets[k]..spec.offsets[k] + spec.dims[k]).map(|i| rho[(i, i)].re).sum())
        .collect()
}

/// `tr(ρ_∞ P_k) = c_β e^{β_0+…+β_{k−1}}` for k = 1..N, independent of the
/// initial state in `A_{U_Z}`.
pub fn limit_occupations(spec: &ModelSpec) -> Result<Vec<f64>> {
    let cb = c_beta(spec)?;
    Ok((1..=spec.n).map(|k| cb * spec.cumulative_weight(k - 1)).collect())
}

/// `tr((ρ_∞ − ρ_0) H_eff)` for `ρ_0 ∈ A_{U_Z}`.
pub fn energy_transfer(spec: &ModelSpec, rho0: &DensityMatrix, u: &SubspaceBasis) -> Result<f64> {
    let rho_inf = limit_state(spec, rho0, u)?;
    let h = crate::lindblad::effective_hamiltonian(spec);
    Ok(((rho_inf.matrix() - rho0.matrix()) * h).trace().re)
}

/// Energy transferred from a state on level k (1 ≤ k ≤ N) of `U_Z`:
/// `γ_{+,k−1} − γ_{−,k} + c_β Σ_{j=1}^{N−1} e^{β_0+…+β_{j−1}}(γ_{−,j} − γ_{+,j}e^{β_j})`
/// with `γ_{+,0} = γ_{−,N} = 0`.
pub fn energy_transfer_closed_form(spec: &ModelSpec, k: usize) -> Result<f64> {
    let cb = c_beta(spec)?;
    if k == 0 || k > spec.n {
        return Err(Error::IndexOutOfRange(format!("level {k} outside 1..={}", spec.n)));
    }
    let gp = |j: usize| if j == 0 { 0.0 } else { spec.shift_plus[j] };
    let gm = |j: usize| if j == spec.n { 0.0 } else { spec.shift_minus[j] };
    let sum: f64 = (1..spec.n)
        .map(|j| spec.cumulative_weight(j - 1) * (gm(j) - gp(j) * spec.beta[j].exp()))
        .sum();
    Ok(gp(k - 1) - gm(k) + cb * sum)
}

/// One sampled point of a trajectory.
#[derive(Debug, Clone)]
pub struct TraceRow {
    pub t: f64,
    /// `tr(ρ_t P_k)` for k = 0..N+1.
    pub occupations: Vec<f64>,
    pub trace: f64,
    pub min_eig: f64,
    /// `‖ρ_t − ρ_∞‖_tr` when a limit was supplied.
    pub dist_to_limit: Option<f64>,
}

/// Sampled trajectory with a CSV view.
#[derive(Debug, Clone)]
pub struct EvolutionTrace {
    pub levels: usize,
    pub rows: Vec<TraceRow>,
}

impl EvolutionTrace {
    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.t).collect()
    }

    pub fn header(&self) -> String {
        let mut cols = vec!["t".to_string()];
        cols.extend((0..self.levels).map(|k| format!("occ_{k}")));
        cols.extend(["trace", "min_eig", "dist_to_limit"].map(String::from));
        cols.join(",")
    }

    /// Header plus one row per grid point, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = self.header();
        out.push('\n');
        for r in &self.rows {
            let mut cells = vec![fmt17(r.t)];
            cells.extend(r.occupations.iter().map(|&x| fmt17(x)));
            cells.push(fmt17(r.trace));
            cells.push(fmt17(r.min_eig));
            cells.push(r.dist_to_limit.map_or_else(|| "nan".into(), fmt17));
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Scientific notation with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}
