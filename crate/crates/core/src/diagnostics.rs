//! Certified bounds next to Monte Carlo measurements, evaluated at recorded
//! optimizer snapshots.
//!
//! A batch row compares the full-data estimator with the single-target
//! bounds (scalar, matrix, friendly) anchored at the MAP. A subsampled row
//! uses the per-component bounds under that row's sampler, recomputed at
//! each snapshot.

use nalgebra::DVector;

use crate::base::StandardizedBase;
use crate::error::Result;
use crate::estimators::{
    empirical_esn, esn_bound_friendly, esn_bound_matrix, esn_bound_scalar, esn_bound_subsampled,
    esn_bound_subsampled_friendly, variance_lower_bound, variance_lower_bound_single, Estimator,
    Mode, SamplerDist,
};
use crate::io::{fmt_f64, Table};
use crate::locscale::Params;
use crate::optimizer::{GradMode, TraceRecord};
use crate::rng::{derive_seed, tags};
use crate::smoothness::SmoothnessSpec;
use crate::targets::Target;

pub const DIAGNOSTIC_COLUMNS: [&str; 8] = [
    "iteration",
    "sampler",
    "esn_empirical",
    "esn_se",
    "bound_scalar",
    "bound_matrix",
    "bound_friendly",
    "var_lower_bound",
];

pub const COMPARE_COLUMNS: [&str; 5] =
    ["sampler", "esn_empirical", "esn_se", "bound_scalar", "bound_matrix"];

#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticRow {
    pub iteration: usize,
    pub sampler: GradMode,
    pub esn_empirical: f64,
    pub esn_se: f64,
    pub bound_scalar: f64,
    pub bound_matrix: f64,
    pub bound_friendly: f64,
    pub var_lower_bound: f64,
    /// Plug-in `tr V[g]` from the same draws.
    pub trace_var: f64,
}

/// Everything about a target that the bounds need, computed once.
pub struct Diagnoser<'a> {
    target: &'a Target,
    base: &'a StandardizedBase,
    spec: SmoothnessSpec,
    map: DVector<f64>,
    zbars: Option<Vec<DVector<f64>>>,
}

impl<'a> Diagnoser<'a> {
    /// Component stationary points are only solved for when `subsampled`.
    pub fn new(target: &'a Target, base: &'a StandardizedBase, subsampled: bool) -> Result<Self> {
        let tol = target.default_tol();
        Ok(Self {
            target,
            base,
            spec: SmoothnessSpec::derive(target)?,
            map: target.find_map(tol)?,
            zbars: if subsampled {
                Some(target.component_stationary_points(tol)?)
            } else {
                None
            },
        })
    }

    pub fn spec(&self) -> &SmoothnessSpec {
        &self.spec
    }

    pub fn map(&self) -> &DVector<f64> {
        &self.map
    }

    fn zbars(&self) -> &[DVector<f64>] {
        self.zbars
            .as_deref()
            .expect("Diagnoser built without component stationary points")
    }

    pub fn sampler(&self, label: crate::estimators::SamplerLabel, w: &Params) -> Result<SamplerDist> {
        SamplerDist::by_label(label, &self.spec, self.zbars(), w, self.base.kurtosis())
    }

    pub fn row(
        &self,
        iteration: usize,
        w: &Params,
        mode: GradMode,
        mc_samples: usize,
        seed: u64,
    ) -> Result<DiagnosticRow> {
        let kappa = self.base.kurtosis();
        let spec = &self.spec;
        let (pi, bound_scalar, bound_matrix, bound_friendly, var_lower_bound) = match mode {
            GradMode::Batch => (
                None,
                esn_bound_scalar(spec.full_scalar, w, &self.map, kappa)?,
                esn_bound_matrix(&spec.full_matrix, w, &self.map, kappa)?,
                esn_bound_friendly(spec.full_scalar, w, &self.map, kappa)?,
                variance_lower_bound_single(&spec.full_matrix, w, &self.map, kappa)?,
            ),
            GradMode::Subsampled(label) => {
                let zbars = self.zbars();
                let pi = self.sampler(label, w)?;
                let scalar = esn_bound_subsampled(spec, zbars, &pi, w, kappa, Mode::Scalar)?;
                let matrix = esn_bound_subsampled(spec, zbars, &pi, w, kappa, Mode::Matrix)?;
                let friendly = esn_bound_subsampled_friendly(spec, zbars, &pi, w, kappa)?;
                let floor = variance_lower_bound(spec, zbars, &pi, w, kappa)?;
                (Some(pi), scalar, matrix, friendly, floor)
            }
        };
        let estimator = pi.as_ref().map_or(Estimator::Batch, Estimator::Subsampled);
        let est = empirical_esn(self.target, w, self.base, estimator, mc_samples, seed)?;
        Ok(DiagnosticRow {
            iteration,
            sampler: mode,
            esn_empirical: est.esn_mean,
            esn_se: est.esn_se,
            bound_scalar,
            bound_matrix,
            bound_friendly,
            var_lower_bound,
            trace_var: est.trace_var,
        })
    }
}

fn needs_components(modes: &[GradMode]) -> bool {
    modes.iter().any(|m| matches!(m, GradMode::Subsampled(_)))
}

/// One row per `(snapshot, sampler)`. All samplers at a snapshot share the
/// same random stream.
pub fn diagnose(
    target: &Target,
    base: &StandardizedBase,
    records: &[TraceRecord],
    modes: &[GradMode],
    mc_samples: usize,
    seed: u64,
) -> Result<Vec<DiagnosticRow>> {
    let diag = Diagnoser::new(target, base, needs_components(modes))?;
    let mut rows = Vec::with_capacity(records.len() * modes.len());
    for r in records {
        let s = derive_seed(seed, tags::DIAGNOSE, r.iteration as u64);
        for &mode in modes {
            rows.push(diag.row(r.iteration, &r.w, mode, mc_samples, s)?);
        }
    }
    Ok(rows)
}

/// Diagnostic rows for the last snapshot only.
pub fn compare_samplers(
    target: &Target,
    base: &StandardizedBase,
    records: &[TraceRecord],
    modes: &[GradMode],
    mc_samples: usize,
    seed: u64,
) -> Result<Vec<DiagnosticRow>> {
    diagnose(target, base, records.last().map(std::slice::from_ref).unwrap_or(&[]), modes, mc_samples, seed)
}

pub fn diagnostics_table(rows: &[DiagnosticRow]) -> Table {
    Table {
        columns: DIAGNOSTIC_COLUMNS.iter().map(|c| c.to_string()).collect(),
        rows: rows
            .iter()
            .map(|r| {
                let mut row = vec![r.iteration.to_string(), r.sampler.to_string()];
                row.extend(
                    [
                        r.esn_empirical,
                        r.esn_se,
                        r.bound_scalar,
                        r.bound_matrix,
                        r.bound_friendly,
                        r.var_lower_bound,
                    ]
                    .map(fmt_f64),
                );
                row
            })
            .collect(),
    }
}

pub fn compare_table(rows: &[DiagnosticRow]) -> Table {
    Table {
        columns: COMPARE_COLUMNS.iter().map(|c| c.to_string()).collect(),
        rows: rows
            .iter()
            .map(|r| {
                let mut row = vec![r.sampler.to_string()];
                row.extend([r.esn_empirical, r.esn_se, r.bound_scalar, r.bound_matrix].map(fmt_f64));
                row
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::SamplerLabel;
    use crate::targets::{QuadComponent, QuadraticTarget};
    use nalgebra::DMatrix;

    fn two_component_quadratic() -> Target {
        let a = QuadComponent::new(DMatrix::identity(2, 2), DVector::from_vec(vec![1.0, 0.0])).unwrap();
        let b = QuadComponent::new(DMatrix::identity(2, 2) * 3.0, DVector::from_vec(vec![0.0, 2.0]))
            .unwrap();
        QuadraticTarget::from_components(vec![a, b]).unwrap().into()
    }

    fn record(iteration: usize, w: Params) -> TraceRecord {
        TraceRecord {
            iteration,
            w,
            elbo_mean: 0.0,
            elbo_se: 0.0,
        }
    }

    #[test]
    fn rows_cover_every_snapshot_and_sampler() {
        let t = two_component_quadratic();
        let base = StandardizedBase::gaussian();
        let w = Params::new(DVector::from_vec(vec![0.3, 0.4]), DMatrix::identity(2, 2) * 0.5).unwrap();
        let records = vec![record(0, w.clone()), record(20, w)];
        let modes = [
            GradMode::Batch,
            GradMode::Subsampled(SamplerLabel::Uniform),
            GradMode::Subsampled(SamplerLabel::OptMatrix),
        ];
        let rows = diagnose(&t, &base, &records, &modes, 4000, 1).unwrap();
        assert_eq!(rows.len(), 6);
        for r in &rows {
            assert!(r.bound_matrix <= r.bound_scalar * (1.0 + 1e-12));
            assert!(r.bound_scalar <= r.bound_friendly * (1.0 + 1e-12));
            assert!(r.var_lower_bound <= r.bound_matrix);
            assert!(r.esn_empirical <= r.bound_matrix + 4.0 * r.esn_se);
        }
        let table = diagnostics_table(&rows);
        assert_eq!(table.columns, DIAGNOSTIC_COLUMNS);
        assert_eq!(table.rows[1][1], "uniform");
        let cmp = compare_samplers(&t, &base, &records, &modes, 4000, 1).unwrap();
        assert_eq!(cmp.len(), 3);
        assert!(cmp.iter().all(|r| r.iteration == 20));
        assert_eq!(compare_table(&cmp).columns, COMPARE_COLUMNS);
    }
}
