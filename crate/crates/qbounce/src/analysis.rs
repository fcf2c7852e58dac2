//! Throughput curves, mixed-state densities, slit-width scans, and fits of
//! model parameters to measured count data.

use rayon::prelude::*;

use crate::constants::PhysicalConstants;
use crate::eigensolver::{gravity_eigenvalue_analytic, solve_spectrum, Spectrum};
use crate::error::{Error, Result};
use crate::potential::{Grid, PotentialSpec, WoodSaxonParams};
use crate::transmission::{absorber_overlap, k_from_overlap, transmitted_count, AbsorberModel};

/// Number of level populations carried through the analysis.
pub const POPULATION_COUNT: usize = 4;

/// Default absorber-ceiling barrier height, peV.
pub const DEFAULT_CEILING_V0_PEV: f64 = 1.6;

/// Default absorber-ceiling edge softness, m.
pub const DEFAULT_CEILING_DIFFUSENESS: f64 = 0.2e-6;

/// Convex level populations C₁..C₄: each non-negative, summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationWeights {
    c: [f64; POPULATION_COUNT],
}

impl PopulationWeights {
    /// Strict constructor: weights must already sum to 1 within 1e-12.
    pub fn new(c: [f64; POPULATION_COUNT]) -> Result<Self> {
        for (i, &w) in c.iter().enumerate() {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::invalid(
                    "PopulationWeights",
                    format!("C{} must be finite and >= 0, got {w:e}", i + 1),
                ));
            }
        }
        let sum: f64 = c.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(
                "PopulationWeights",
                format!("weights must sum to 1 within 1e-12, got {sum}"),
            ));
        }
        Ok(PopulationWeights { c })
    }

    /// Rescale non-negative raw weights onto the simplex.
    pub fn normalized(raw: [f64; POPULATION_COUNT]) -> Result<Self> {
        for (i, &w) in raw.iter().enumerate() {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::invalid(
                    "PopulationWeights",
                    format!("C{} must be finite and >= 0, got {w:e}", i + 1),
                ));
            }
        }
        let sum: f64 = raw.iter().sum();
        if sum <= 0.0 {
            return Err(Error::invalid(
                "PopulationWeights",
                "weights sum to zero".to_string(),
            ));
        }
        let mut c = raw;
        for w in c.iter_mut() {
            *w /= sum;
        }
        Ok(PopulationWeights { c })
    }

    /// All population in state `n` (1-based).
    pub fn single(n: usize) -> Self {
        assert!((1..=POPULATION_COUNT).contains(&n));
        let mut c = [0.0; POPULATION_COUNT];
        c[n - 1] = 1.0;
        PopulationWeights { c }
    }

    pub fn uniform() -> Self {
        PopulationWeights {
            c: [1.0 / POPULATION_COUNT as f64; POPULATION_COUNT],
        }
    }

    pub fn values(&self) -> &[f64; POPULATION_COUNT] {
        &self.c
    }
}

/// One measured point: slit width in µm, relative count, optional
/// uncertainty.
#[derive(Debug, Clone, PartialEq)]
pub struct DataRow {
    pub z_um: f64,
    pub n_out: f64,
    pub sigma: Option<f64>,
}

impl DataRow {
    /// Uncertainty used in weighted least squares; absent values mean 1.
    pub fn effective_sigma(&self) -> f64 {
        self.sigma.unwrap_or(1.0)
    }
}

/// Measured counts versus slit width, sorted strictly increasing in z.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentalDataset {
    rows: Vec<DataRow>,
}

impl ExperimentalDataset {
    /// Sorts rows by slit width (stable) and validates: counts must be
    /// non-negative and finite, z values distinct, sigmas (when given)
    /// positive.
    pub fn new(mut rows: Vec<DataRow>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::invalid("ExperimentalDataset", "no rows"));
        }
        for r in &rows {
            if !r.z_um.is_finite() || !r.n_out.is_finite() {
                return Err(Error::NonFinite { what: "data row" });
            }
            if r.n_out < 0.0 {
                return Err(Error::invalid(
                    "ExperimentalDataset",
                    format!("count at z = {} µm is negative", r.z_um),
                ));
            }
            if let Some(s) = r.sigma {
                if !s.is_finite() || s <= 0.0 {
                    return Err(Error::invalid(
                        "ExperimentalDataset",
                        format!("sigma at z = {} µm must be finite and > 0", r.z_um),
                    ));
                }
            }
        }
        rows.sort_by(|a, b| a.z_um.partial_cmp(&b.z_um).unwrap());
        for w in rows.windows(2) {
            if w[0].z_um == w[1].z_um {
                return Err(Error::invalid(
                    "ExperimentalDataset",
                    format!("duplicate slit width z = {} µm", w[0].z_um),
                ));
            }
        }
        Ok(ExperimentalDataset { rows })
    }

    pub fn rows(&self) -> &[DataRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Reference curve parameters: amplitude, and the threshold height below
/// which the slit is opaque.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveParams {
    pub scale: f64,
    pub z0: f64,
}

/// Classical throughput: scale·z^1.5.
pub fn classical_curve(z: f64, scale: f64) -> f64 {
    debug_assert!(z >= 0.0);
    scale * z.powf(1.5)
}

/// Thresholded throughput: scale·(z − z0)^1.5 above z0, exactly 0 at or
/// below it.
pub fn thresholded_curve(z: f64, z0: f64, scale: f64) -> f64 {
    debug_assert!(z >= 0.0 && z0 >= 0.0);
    if z > z0 {
        scale * (z - z0).powf(1.5)
    } else {
        0.0
    }
}

/// Pointwise mixed density Σ Cᵢ|ψᵢ|² on the spectrum's grid; integrates to
/// one for valid weights.
pub fn mixed_density(spectrum: &Spectrum, weights: &PopulationWeights) -> Result<Vec<f64>> {
    if spectrum.states.len() < POPULATION_COUNT {
        return Err(Error::MissingStates {
            needed: POPULATION_COUNT,
            available: spectrum.states.len(),
        });
    }
    let n = spectrum.grid.n_points();
    let mut density = vec![0.0; n];
    for (state, &c) in spectrum.states.iter().zip(weights.values().iter()) {
        for (d, &p) in density.iter_mut().zip(state.psi.iter()) {
            *d += c * p * p;
        }
    }
    Ok(density)
}

/// Absorber-ceiling family for slit scans: the Wood-Saxon wall midpoint
/// tracks the slit width.
#[derive(Debug, Clone, PartialEq)]
pub struct CeilingFamily {
    /// Barrier height, J.
    pub v0: f64,
    /// Edge softness, m.
    pub diffuseness: f64,
}

impl CeilingFamily {
    pub fn new(v0: f64, diffuseness: f64) -> Result<Self> {
        // delegate the positivity checks
        WoodSaxonParams::new(v0, 1.0, diffuseness)?;
        Ok(CeilingFamily { v0, diffuseness })
    }

    /// Library default ceiling (1.6 peV barrier, 0.2 µm edge).
    pub fn default_for(consts: &PhysicalConstants) -> Self {
        CeilingFamily {
            v0: consts.from_pev(DEFAULT_CEILING_V0_PEV),
            diffuseness: DEFAULT_CEILING_DIFFUSENESS,
        }
    }

    /// Potential with the ceiling midpoint at the slit width.
    pub fn potential_at_slit(&self, slit: f64) -> Result<PotentialSpec> {
        let ws = WoodSaxonParams::new(self.v0, slit, self.diffuseness)?;
        PotentialSpec::gravity_with_absorber(slit, ws)
    }
}

/// Grid construction policy for scan solves: fixed point count, z_max a
/// multiple of the larger of the analytic turning point of the highest
/// requested state and the slit width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPolicy {
    pub n_points: usize,
    pub z_max_factor: f64,
}

impl Default for GridPolicy {
    fn default() -> Self {
        GridPolicy {
            n_points: 4000,
            z_max_factor: 4.0,
        }
    }
}

impl GridPolicy {
    pub fn grid_for(
        &self,
        consts: &PhysicalConstants,
        n_states: usize,
        slit: f64,
    ) -> Result<Grid> {
        if !self.z_max_factor.is_finite() || self.z_max_factor <= 1.0 {
            return Err(Error::invalid(
                "GridPolicy",
                format!("z_max_factor must be finite and > 1, got {}", self.z_max_factor),
            ));
        }
        let table_n = n_states.clamp(1, 10);
        let turning = consts.turning_height(gravity_eigenvalue_analytic(table_n, consts)?);
        let z_max = self.z_max_factor * turning.max(slit);
        Grid::new(0.0, z_max, self.n_points)
    }
}

/// One predicted scan row, SI units: slit width, the four lowest energies,
/// per-state absorber overlaps, per-state attenuation coefficients, and
/// the population-weighted transmitted count.
#[derive(Debug, Clone)]
pub struct ScanRow {
    pub slit: f64,
    pub energies: [f64; POPULATION_COUNT],
    pub areas: [f64; POPULATION_COUNT],
    pub attenuations: [f64; POPULATION_COUNT],
    pub n_out: f64,
}

/// Scan rows plus the indices (into `rows`) where the transmitted count
/// decreased relative to the previous slit.
#[derive(Debug, Clone)]
pub struct ScanOutcome {
    pub rows: Vec<ScanRow>,
    pub monotonicity_violations: Vec<usize>,
}

/// Predict the count-versus-slit-width curve: for each slit, solve the
/// four lowest states under the tracking ceiling, integrate each state's
/// density beyond the slit, convert the areas to attenuation coefficients,
/// and attenuate the entrance density along the cavity.
///
/// Rows are independent and evaluated in parallel; results are
/// deterministic for fixed inputs.
pub fn predict_scan(
    family: &CeilingFamily,
    consts: &PhysicalConstants,
    policy: &GridPolicy,
    absorber: &AbsorberModel,
    weights: &PopulationWeights,
    slits: &[f64],
) -> Result<ScanOutcome> {
    if slits.is_empty() {
        return Err(Error::invalid("slits", "empty slit list"));
    }
    for w in slits.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::invalid(
                "slits",
                format!("slit widths must be strictly increasing ({:e} then {:e})", w[0], w[1]),
            ));
        }
    }
    if slits.iter().any(|&s| !s.is_finite() || s <= 0.0) {
        return Err(Error::invalid("slits", "slit widths must be positive"));
    }

    let rows: Vec<ScanRow> = slits
        .par_iter()
        .map(|&slit| {
            scan_row(family, consts, policy, absorber, weights, slit).map_err(|e| {
                Error::AtSlit {
                    slit_m: slit,
                    source: Box::new(e),
                }
            })
        })
        .collect::<Result<_>>()?;

    let mut violations = Vec::new();
    for i in 1..rows.len() {
        if rows[i].n_out < rows[i - 1].n_out {
            violations.push(i);
        }
    }
    Ok(ScanOutcome {
        rows,
        monotonicity_violations: violations,
    })
}

fn scan_row(
    family: &CeilingFamily,
    consts: &PhysicalConstants,
    policy: &GridPolicy,
    absorber: &AbsorberModel,
    weights: &PopulationWeights,
    slit: f64,
) -> Result<ScanRow> {
    let potential = family.potential_at_slit(slit)?;
    let grid = policy.grid_for(consts, POPULATION_COUNT, slit)?;
    let spectrum = solve_spectrum(&potential, consts, &grid, POPULATION_COUNT)?;

    let mut energies = [0.0; POPULATION_COUNT];
    let mut areas = [0.0; POPULATION_COUNT];
    let mut ks = [0.0; POPULATION_COUNT];
    for i in 0..POPULATION_COUNT {
        energies[i] = spectrum.states[i].energy;
        areas[i] = absorber_overlap(&spectrum.states[i], &grid, slit)?;
        ks[i] = k_from_overlap(areas[i], absorber.delta_x)?;
    }

    let n_max = absorber.n_max.eval(slit);
    let n_out = weights
        .values()
        .iter()
        .zip(ks.iter())
        .map(|(&c, &k)| c * transmitted_count(n_max, k, absorber.cavity_length))
        .sum();

    Ok(ScanRow {
        slit,
        energies,
        areas,
        attenuations: ks,
        n_out,
    })
}

/// Cached linear model: per-slit, per-state transmitted counts, so fit
/// iterations cost a dot product instead of an eigensolve.
#[derive(Debug, Clone)]
pub struct LinearScanPredictor {
    basis: Vec<[f64; POPULATION_COUNT]>,
}

impl LinearScanPredictor {
    /// Build from already-computed scan rows.
    pub fn from_rows(rows: &[ScanRow], absorber: &AbsorberModel) -> Self {
        let basis = rows
            .iter()
            .map(|r| {
                let n_max = absorber.n_max.eval(r.slit);
                let mut b = [0.0; POPULATION_COUNT];
                for i in 0..POPULATION_COUNT {
                    b[i] = transmitted_count(n_max, r.attenuations[i], absorber.cavity_length);
                }
                b
            })
            .collect();
        LinearScanPredictor { basis }
    }

    /// Build directly from per-row, per-state transmissions.
    pub fn from_basis(basis: Vec<[f64; POPULATION_COUNT]>) -> Self {
        LinearScanPredictor { basis }
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn predict(&self, weights: &PopulationWeights) -> Vec<f64> {
        let c = weights.values();
        self.basis
            .iter()
            .map(|b| b.iter().zip(c.iter()).map(|(bi, ci)| bi * ci).sum())
            .collect()
    }
}

/// Fitted populations and the weighted sum of squared residuals at the
/// optimum.
#[derive(Debug, Clone)]
pub struct PopulationFit {
    pub weights: PopulationWeights,
    pub residual: f64,
}

/// Fit level populations to measured counts by weighted least squares over
/// the simplex {Cᵢ ≥ 0, ΣCᵢ = 1}.
///
/// Coordinate descent over the six pairwise mass-transfer directions with
/// an exact quadratic line search, restarted from eight deterministic
/// points; feasibility is maintained by construction, never by penalty.
pub fn fit_populations(
    data: &ExperimentalDataset,
    predict: impl Fn(&PopulationWeights) -> Vec<f64>,
) -> Result<PopulationFit> {
    if data.len() < POPULATION_COUNT {
        return Err(Error::UnfittableData(format!(
            "need at least {POPULATION_COUNT} rows, got {}",
            data.len()
        )));
    }
    if data.rows().iter().all(|r| r.n_out == 0.0) {
        return Err(Error::UnfittableData("all counts are zero".to_string()));
    }

    let objective = |c: &[f64; POPULATION_COUNT]| -> Result<f64> {
        let w = PopulationWeights::normalized(*c)?;
        let model = predict(&w);
        if model.len() != data.len() {
            return Err(Error::invalid(
                "predictor",
                format!("returned {} values for {} rows", model.len(), data.len()),
            ));
        }
        Ok(model
            .iter()
            .zip(data.rows().iter())
            .map(|(m, r)| {
                let resid = (m - r.n_out) / r.effective_sigma();
                resid * resid
            })
            .sum())
    };

    let starts: [[f64; POPULATION_COUNT]; 8] = [
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
        [0.25, 0.25, 0.25, 0.25],
        [0.5, 0.5, 0.0, 0.0],
        [0.0, 0.5, 0.5, 0.0],
        [0.0, 0.0, 0.5, 0.5],
    ];

    let mut best: Option<([f64; POPULATION_COUNT], f64)> = None;
    for start in starts {
        let (c, f) = descend(start, &objective)?;
        match &best {
            Some((_, fb)) if *fb <= f => {}
            _ => best = Some((c, f)),
        }
    }
    let (c, residual) = best.expect("at least one start ran");
    Ok(PopulationFit {
        weights: PopulationWeights::normalized(c)?,
        residual,
    })
}

const MAX_SWEEPS: usize = 400;

fn descend(
    mut c: [f64; POPULATION_COUNT],
    objective: &impl Fn(&[f64; POPULATION_COUNT]) -> Result<f64>,
) -> Result<([f64; POPULATION_COUNT], f64)> {
    let mut f = objective(&c)?;
    for _ in 0..MAX_SWEEPS {
        let f_before = f;
        for i in 0..POPULATION_COUNT {
            for j in (i + 1)..POPULATION_COUNT {
                // move mass t from j to i: c[i] += t, c[j] -= t
                let lo = -c[i];
                let hi = c[j];
                if hi - lo <= 0.0 {
                    continue;
                }
                let eval = |t: f64| -> Result<f64> {
                    let mut trial = c;
                    trial[i] = (c[i] + t).max(0.0);
                    trial[j] = (c[j] - t).max(0.0);
                    objective(&trial)
                };
                let t = quadratic_argmin(lo, hi, &eval)?;
                if t != 0.0 {
                    let f_new = eval(t)?;
                    if f_new < f {
                        c[i] = (c[i] + t).max(0.0);
                        c[j] = (c[j] - t).max(0.0);
                        f = f_new;
                    }
                }
            }
        }
        // keep the simplex sum from drifting over long descents
        let sum: f64 = c.iter().sum();
        for w in c.iter_mut() {
            *w /= sum;
        }
        if f_before - f <= 1e-15 * (1.0 + f_before.abs()) {
            break;
        }
    }
    Ok((c, f))
}

/// Argmin over [lo, hi] of a function that is quadratic along the segment
/// (exact for linear models): three-point parabola fit, clipped to the
/// interval, compared against both endpoints.
fn quadratic_argmin(lo: f64, hi: f64, eval: &impl Fn(f64) -> Result<f64>) -> Result<f64> {
    let mid = 0.5 * (lo + hi);
    let (f_lo, f_mid, f_hi) = (eval(lo)?, eval(mid)?, eval(hi)?);

    // parabola through (lo, f_lo), (mid, f_mid), (hi, f_hi)
    let d1 = (f_mid - f_lo) / (mid - lo);
    let d2 = (f_hi - f_mid) / (hi - mid);
    let curvature = (d2 - d1) / (hi - lo);

    let mut candidates = vec![(lo, f_lo), (mid, f_mid), (hi, f_hi)];
    if curvature > 0.0 {
        let vertex = 0.5 * (lo + mid) - d1 / (2.0 * curvature);
        let v = vertex.clamp(lo, hi);
        candidates.push((v, eval(v)?));
    }
    let best = candidates
        .into_iter()
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .unwrap();
    Ok(best.0)
}

/// Fitted threshold-curve parameters and the residual at the optimum.
#[derive(Debug, Clone)]
pub struct ThresholdFit {
    pub params: CurveParams,
    pub residual: f64,
}

/// Default z0 scan step for threshold fits, in dataset units (µm).
pub const DEFAULT_Z0_STEP_UM: f64 = 0.02;

/// Least-squares (scale, z0) for the thresholded curve: scan z0 over
/// [0, max z] at `z0_step` resolution with the closed-form optimal scale at
/// each candidate; the first minimum wins, so results are deterministic.
///
/// Units follow the dataset: z0 in µm, scale in counts/µm^1.5.
pub fn fit_threshold_curve(data: &ExperimentalDataset, z0_step: f64) -> Result<ThresholdFit> {
    if data.len() < 3 {
        return Err(Error::UnfittableData(format!(
            "need at least 3 rows, got {}",
            data.len()
        )));
    }
    if data.rows().iter().all(|r| r.n_out == 0.0) {
        return Err(Error::UnfittableData("all counts are zero".to_string()));
    }
    if !z0_step.is_finite() || z0_step <= 0.0 {
        return Err(Error::invalid(
            "z0_step",
            format!("must be finite and > 0, got {z0_step:e}"),
        ));
    }

    let z_max = data.rows().last().unwrap().z_um;
    let steps = (z_max / z0_step).floor() as usize;

    let mut best: Option<(CurveParams, f64)> = None;
    for i in 0..=steps {
        let z0 = i as f64 * z0_step;
        let mut num = 0.0;
        let mut den = 0.0;
        for r in data.rows() {
            let phi = if r.z_um > z0 {
                (r.z_um - z0).powf(1.5)
            } else {
                0.0
            };
            let w = 1.0 / (r.effective_sigma() * r.effective_sigma());
            num += w * r.n_out * phi;
            den += w * phi * phi;
        }
        let scale = if den > 0.0 { num / den } else { 0.0 };
        let residual: f64 = data
            .rows()
            .iter()
            .map(|r| {
                let model = thresholded_curve(r.z_um, z0, scale);
                let resid = (model - r.n_out) / r.effective_sigma();
                resid * resid
            })
            .sum();
        match &best {
            Some((_, rb)) if *rb <= residual => {}
            _ => best = Some((CurveParams { scale, z0 }, residual)),
        }
    }
    let (params, residual) = best.expect("scan visits at least z0 = 0");
    Ok(ThresholdFit { params, residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transmission::EntranceDensity;
    use approx::assert_relative_eq;

    fn consts() -> PhysicalConstants {
        PhysicalConstants::neutron()
    }

    #[test]
    fn weights_validation() {
        assert!(PopulationWeights::new([0.25; 4]).is_ok());
        assert!(PopulationWeights::new([1.0, 0.0, 0.0, 0.0]).is_ok());
        assert!(PopulationWeights::new([0.5, 0.5, 0.1, 0.0]).is_err());
        assert!(PopulationWeights::new([-0.1, 0.6, 0.3, 0.2]).is_err());
        let w = PopulationWeights::normalized([1.0, 1.0, 1.0, 1.0]).unwrap();
        assert_relative_eq!(w.values().iter().sum::<f64>(), 1.0, epsilon = 1e-14);
        assert!(PopulationWeights::normalized([0.0; 4]).is_err());
    }

    #[test]
    fn dataset_sorts_and_validates() {
        let rows = vec![
            DataRow { z_um: 20.0, n_out: 2.0, sigma: None },
            DataRow { z_um: 10.0, n_out: 1.0, sigma: Some(0.1) },
        ];
        let d = ExperimentalDataset::new(rows).unwrap();
        assert_eq!(d.rows()[0].z_um, 10.0);
        assert_eq!(d.rows()[1].z_um, 20.0);

        let dup = vec![
            DataRow { z_um: 10.0, n_out: 1.0, sigma: None },
            DataRow { z_um: 10.0, n_out: 2.0, sigma: None },
        ];
        assert!(ExperimentalDataset::new(dup).is_err());

        let neg = vec![DataRow { z_um: 10.0, n_out: -1.0, sigma: None }];
        assert!(ExperimentalDataset::new(neg).is_err());
    }

    #[test]
    fn classical_curve_shape() {
        assert_eq!(classical_curve(0.0, 3.0), 0.0);
        let ratio = classical_curve(2.0, 1.7) / classical_curve(1.0, 1.7);
        assert_relative_eq!(ratio, 2.0f64.powf(1.5), max_relative = 1e-12);
        let mut prev = 0.0;
        for i in 1..50 {
            let v = classical_curve(i as f64 * 0.5, 1.0);
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn thresholded_curve_clips_exactly() {
        assert_eq!(thresholded_curve(15.0, 15.0, 2.0), 0.0);
        assert_eq!(thresholded_curve(10.0, 15.0, 2.0), 0.0);
        assert_eq!(thresholded_curve(0.0, 0.0, 2.0), 0.0);
        // z0 = 15 µm, z = 20 µm: scale·5^1.5
        let s = 0.37;
        assert_relative_eq!(
            thresholded_curve(20.0, 15.0, s),
            s * 5.0f64.powf(1.5),
            max_relative = 1e-13
        );
    }

    fn gravity_spectrum(n_points: usize) -> Spectrum {
        let c = consts();
        let grid = Grid::new(0.0, 160e-6, n_points).unwrap();
        solve_spectrum(&PotentialSpec::gravity_floor(), &c, &grid, 4).unwrap()
    }

    #[test]
    fn mixed_density_pure_state_and_normalization() {
        let spectrum = gravity_spectrum(1600);
        let single = PopulationWeights::single(1);
        let d = mixed_density(&spectrum, &single).unwrap();
        for (di, p) in d.iter().zip(spectrum.states[0].psi.iter()) {
            assert_eq!(*di, p * p);
        }
        let uniform = PopulationWeights::uniform();
        let d = mixed_density(&spectrum, &uniform).unwrap();
        assert!((spectrum.grid.trapezoid(&d) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn mixed_density_arity_error() {
        let c = consts();
        let grid = Grid::new(0.0, 160e-6, 800).unwrap();
        let two = solve_spectrum(&PotentialSpec::gravity_floor(), &c, &grid, 2).unwrap();
        assert!(matches!(
            mixed_density(&two, &PopulationWeights::uniform()),
            Err(Error::MissingStates { .. })
        ));
    }

    fn test_absorber() -> AbsorberModel {
        AbsorberModel::new(3.20259e-4, 0.1, EntranceDensity::Constant(0.3)).unwrap()
    }

    #[test]
    fn predict_scan_open_slit_limit() {
        // slit far above every occupied turning point: overlaps vanish and
        // the full entrance density comes through
        let c = consts();
        let family = CeilingFamily::default_for(&c);
        let policy = GridPolicy { n_points: 2000, z_max_factor: 4.0 };
        let absorber = test_absorber();
        let out = predict_scan(
            &family,
            &c,
            &policy,
            &absorber,
            &PopulationWeights::single(1),
            &[60e-6],
        )
        .unwrap();
        assert!(out.rows[0].n_out > 0.99 * 0.3);
        assert!(out.monotonicity_violations.is_empty());
    }

    #[test]
    fn predict_scan_row_self_consistency() {
        let c = consts();
        let family = CeilingFamily::default_for(&c);
        let policy = GridPolicy { n_points: 2000, z_max_factor: 4.0 };
        let absorber = test_absorber();
        let out = predict_scan(
            &family,
            &c,
            &policy,
            &absorber,
            &PopulationWeights::single(1),
            &[15e-6],
        )
        .unwrap();
        let row = &out.rows[0];
        // N_out must be exactly the chain applied to the row's own k₁
        let expect = transmitted_count(0.3, row.attenuations[0], absorber.cavity_length);
        assert_relative_eq!(row.n_out, expect, max_relative = 1e-14);
        // and k₁ must invert the row's own area
        assert_relative_eq!(
            row.attenuations[0],
            k_from_overlap(row.areas[0], absorber.delta_x).unwrap(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn predict_scan_log_ratio_linear_in_cavity_length() {
        let c = consts();
        let family = CeilingFamily::default_for(&c);
        let policy = GridPolicy { n_points: 1200, z_max_factor: 4.0 };
        let w = PopulationWeights::single(1);
        let a1 = AbsorberModel::new(3.20259e-4, 0.1, EntranceDensity::Constant(0.3)).unwrap();
        let a2 = AbsorberModel::new(3.20259e-4, 0.2, EntranceDensity::Constant(0.3)).unwrap();
        let r1 = predict_scan(&family, &c, &policy, &a1, &w, &[15e-6]).unwrap();
        let r2 = predict_scan(&family, &c, &policy, &a2, &w, &[15e-6]).unwrap();
        let log1 = (r1.rows[0].n_out / 0.3).ln();
        let log2 = (r2.rows[0].n_out / 0.3).ln();
        assert_relative_eq!(log2 / log1, 2.0, max_relative = 1e-9);
    }

    #[test]
    fn predict_scan_rejects_bad_slits() {
        let c = consts();
        let family = CeilingFamily::default_for(&c);
        let policy = GridPolicy::default();
        let absorber = test_absorber();
        let w = PopulationWeights::single(1);
        assert!(predict_scan(&family, &c, &policy, &absorber, &w, &[]).is_err());
        assert!(
            predict_scan(&family, &c, &policy, &absorber, &w, &[2e-5, 1e-5]).is_err()
        );
        assert!(predict_scan(&family, &c, &policy, &absorber, &w, &[-1e-5]).is_err());
    }

    fn synthetic_basis() -> LinearScanPredictor {
        // per-state transmissions with the pipeline's character: the
        // attenuation exponent k·L decays exponentially in slit width, each
        // state switching on over its own slit range
        let slits: [f64; 13] = [
            14.0, 16.0, 18.0, 21.0, 24.0, 27.0, 30.0, 34.0, 38.0, 43.0, 48.0, 54.0, 60.0,
        ];
        let amp: [f64; 4] = [11.6, 143.0, 517.0, 609.0];
        let width: [f64; 4] = [2.6, 3.3, 4.4, 6.4];
        let rows: Vec<[f64; 4]> = slits
            .iter()
            .map(|&z| {
                let mut b = [0.0; 4];
                for i in 0..4 {
                    let k_l = amp[i] * (-(z - 14.0) / width[i]).exp();
                    b[i] = 0.3 * (-k_l).exp();
                }
                b
            })
            .collect();
        LinearScanPredictor::from_basis(rows)
    }

    fn dataset_from(model: &[f64]) -> ExperimentalDataset {
        let rows = model
            .iter()
            .enumerate()
            .map(|(i, &v)| DataRow {
                z_um: 10.0 + i as f64,
                n_out: v,
                sigma: None,
            })
            .collect();
        ExperimentalDataset::new(rows).unwrap()
    }

    #[test]
    fn fit_populations_recovers_known_weights() {
        let predictor = synthetic_basis();
        let truth = PopulationWeights::new([0.4, 0.3, 0.2, 0.1]).unwrap();
        let data = dataset_from(&predictor.predict(&truth));
        let fit = fit_populations(&data, |w| predictor.predict(w)).unwrap();
        for (got, want) in fit.weights.values().iter().zip(truth.values().iter()) {
            assert!(
                (got - want).abs() < 1e-3,
                "weights {:?} vs {:?}",
                fit.weights.values(),
                truth.values()
            );
        }
        assert!(fit.residual < 1e-12);
    }

    #[test]
    fn fit_populations_corner_of_simplex() {
        let predictor = synthetic_basis();
        let truth = PopulationWeights::single(1);
        let data = dataset_from(&predictor.predict(&truth));
        let fit = fit_populations(&data, |w| predictor.predict(w)).unwrap();
        assert!(fit.weights.values()[0] >= 0.99);
    }

    #[test]
    fn fit_populations_row_order_invariant() {
        // the dataset constructor sorts, so a shuffled copy fits the same
        let predictor = synthetic_basis();
        let truth = PopulationWeights::new([0.1, 0.2, 0.3, 0.4]).unwrap();
        let model = predictor.predict(&truth);
        let mut rows: Vec<DataRow> = model
            .iter()
            .enumerate()
            .map(|(i, &v)| DataRow {
                z_um: 10.0 + i as f64,
                n_out: v,
                sigma: None,
            })
            .collect();
        rows.reverse();
        rows.swap(0, 3);
        let data = ExperimentalDataset::new(rows).unwrap();
        let fit = fit_populations(&data, |w| predictor.predict(w)).unwrap();
        for (got, want) in fit.weights.values().iter().zip(truth.values().iter()) {
            assert!((got - want).abs() < 1e-3);
        }
    }

    #[test]
    fn fit_populations_degenerate_data() {
        let data = dataset_from(&[0.0, 0.0, 0.0, 0.0, 0.0]);
        let predictor = synthetic_basis();
        assert!(matches!(
            fit_populations(&data, |w| predictor.predict(w)),
            Err(Error::UnfittableData(_))
        ));
        let too_short = dataset_from(&[1.0, 2.0, 3.0]);
        assert!(fit_populations(&too_short, |w| predictor.predict(w)).is_err());
    }

    #[test]
    fn fit_populations_output_on_simplex() {
        let predictor = synthetic_basis();
        // noisy-ish data that fits no C exactly
        let data = dataset_from(&[
            0.01, 0.05, 0.02, 0.11, 0.13, 0.18, 0.19, 0.22, 0.24, 0.25, 0.24, 0.27, 0.29,
        ]);
        let fit = fit_populations(&data, |w| predictor.predict(w)).unwrap();
        let sum: f64 = fit.weights.values().iter().sum();
        assert!((sum - 1.0).abs() <= 1e-12);
        assert!(fit.weights.values().iter().all(|&c| c >= 0.0));
    }

    #[test]
    fn threshold_fit_recovers_z0() {
        let rows: Vec<DataRow> = (0..40)
            .map(|i| {
                let z = 5.0 + i as f64 * 0.75;
                DataRow {
                    z_um: z,
                    n_out: thresholded_curve(z, 15.0, 0.8),
                    sigma: None,
                }
            })
            .collect();
        let data = ExperimentalDataset::new(rows).unwrap();
        let fit = fit_threshold_curve(&data, 0.02).unwrap();
        assert!(
            (fit.params.z0 - 15.0).abs() <= 0.02 + 1e-12,
            "z0 = {}",
            fit.params.z0
        );
        assert_relative_eq!(fit.params.scale, 0.8, max_relative = 1e-6);
        assert!(fit.residual < 1e-12);
    }

    #[test]
    fn threshold_fit_respects_zero_region() {
        // counts zero through z = 15: fitted z0 may not undercut the
        // largest opaque slit
        let mut rows: Vec<DataRow> = vec![5.0, 10.0, 15.0]
            .into_iter()
            .map(|z| DataRow { z_um: z, n_out: 0.0, sigma: None })
            .collect();
        for i in 1..=10 {
            let z = 15.0 + i as f64;
            rows.push(DataRow {
                z_um: z,
                n_out: thresholded_curve(z, 15.0, 1.0),
                sigma: None,
            });
        }
        let data = ExperimentalDataset::new(rows).unwrap();
        let fit = fit_threshold_curve(&data, 0.1).unwrap();
        assert!(fit.params.z0 >= 15.0 - 1e-9, "z0 = {}", fit.params.z0);
    }

    #[test]
    fn threshold_fit_degenerates_to_classical() {
        let rows: Vec<DataRow> = (1..30)
            .map(|i| {
                let z = i as f64;
                DataRow {
                    z_um: z,
                    n_out: classical_curve(z, 0.37),
                    sigma: None,
                }
            })
            .collect();
        let data = ExperimentalDataset::new(rows).unwrap();
        let fit = fit_threshold_curve(&data, 0.05).unwrap();
        assert_eq!(fit.params.z0, 0.0);
        assert_relative_eq!(fit.params.scale, 0.37, max_relative = 1e-9);
    }

    #[test]
    fn threshold_fit_guards() {
        let short = dataset_from(&[1.0, 2.0]);
        assert!(fit_threshold_curve(&short, 0.1).is_err());
        let zeros = dataset_from(&[0.0, 0.0, 0.0, 0.0]);
        assert!(fit_threshold_curve(&zeros, 0.1).is_err());
        let ok = dataset_from(&[1.0, 2.0, 3.0, 4.0]);
        assert!(fit_threshold_curve(&ok, 0.0).is_err());
    }
}
