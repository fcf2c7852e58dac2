//! Bound states of the 1D stationary Schrödinger equation on a grid.
//!
//! The Hamiltonian H = −(ħ²/2m)·d²/dz² + V(z) is discretized with the
//! standard 3-point second difference. Hard-wall samples become Dirichlet
//! rows rather than large finite numbers. The lowest eigenvalues come from
//! Sturm-sequence bisection, eigenvectors from inverse iteration; both are
//! deterministic (fixed-seed start vectors), so repeated solves are
//! bit-identical.

mod tridiag;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::potential::{Grid, PotentialSpec, PotentialValue};

/// First ten zeros of the Airy function Ai, by absolute value
/// (Abramowitz & Stegun table, 16 significant digits).
pub const AIRY_AI_ZEROS: [f64; 10] = [
    2.338_107_410_459_767,
    4.087_949_444_130_971,
    5.520_559_828_095_551,
    6.786_708_090_071_759,
    7.944_133_587_120_853,
    9.022_650_853_340_98,
    10.040_174_341_558_086,
    11.008_524_303_733_263,
    11.936_015_563_236_263,
    12.828_776_752_865_757,
];

/// One bound state: 1-based index, energy in joules, and the wavefunction
/// sampled on the grid (units 1/√m, trapezoid-normalized to ∫|ψ|²dz = 1).
#[derive(Debug, Clone)]
pub struct EigenState {
    pub n: usize,
    pub energy: f64,
    pub psi: Vec<f64>,
}

/// The lowest bound states of one configuration, energies strictly
/// increasing, indices consecutive from 1.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub states: Vec<EigenState>,
    pub grid: Grid,
    pub spec: PotentialSpec,
}

impl Spectrum {
    pub fn energies(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.energy).collect()
    }
}

/// Number of strict sign changes between consecutive samples, ignoring
/// samples with |ψ| < 1e-12·max|ψ|.
pub fn count_nodes(psi: &[f64]) -> usize {
    let max = psi.iter().fold(0.0_f64, |m, &x| m.max(x.abs()));
    if max == 0.0 {
        return 0;
    }
    let threshold = 1e-12 * max;
    let mut nodes = 0;
    let mut prev_sign = 0i8;
    for &x in psi {
        if x.abs() < threshold {
            continue;
        }
        let sign = if x > 0.0 { 1 } else { -1 };
        if prev_sign != 0 && sign != prev_sign {
            nodes += 1;
        }
        prev_sign = sign;
    }
    nodes
}

/// Particle-in-a-box eigenvalue ħ²π²n²/(2·m·width²), J.
pub fn box_eigenvalue_analytic(n: usize, width: f64, consts: &PhysicalConstants) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("index", "state index must be >= 1"));
    }
    if !width.is_finite() || width <= 0.0 {
        return Err(Error::invalid(
            "width",
            format!("box width must be finite and > 0, got {width:e}"),
        ));
    }
    let nf = n as f64;
    Ok(consts.hbar * consts.hbar * std::f64::consts::PI.powi(2) * nf * nf
        / (2.0 * consts.mass * width * width))
}

/// Gravity-above-a-mirror eigenvalue eps0·|aₙ|, J, from the tabulated Airy
/// zeros. Supports n = 1..=10.
pub fn gravity_eigenvalue_analytic(n: usize, consts: &PhysicalConstants) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("index", "state index must be >= 1"));
    }
    if n > AIRY_AI_ZEROS.len() {
        return Err(Error::UnsupportedIndex {
            n,
            max: AIRY_AI_ZEROS.len(),
        });
    }
    Ok(consts.eps0() * AIRY_AI_ZEROS[n - 1])
}

/// The `n_states` lowest eigenpairs of the discretized Hamiltonian.
///
/// Errors if the potential splits the grid interior into disconnected
/// finite regions, if a computed eigenvector fails its node-count
/// self-check, or if (for the unbounded gravity-type potentials) the
/// classical turning point of the highest state lies within 20% of z_max.
pub fn solve_spectrum(
    spec: &PotentialSpec,
    consts: &PhysicalConstants,
    grid: &Grid,
    n_states: usize,
) -> Result<Spectrum> {
    if n_states == 0 {
        return Err(Error::invalid("n_states", "must request at least 1 state"));
    }

    let n = grid.n_points();
    let mut samples = Vec::with_capacity(n);
    for z in grid.points() {
        samples.push(spec.evaluate(consts, z)?);
    }

    // Interior points carrying finite potential; walls become Dirichlet
    // rows, so they are simply excluded from the matrix.
    let run = finite_interior_run(&samples)?;
    let m = run.end - run.start;
    if m < n_states + 2 {
        return Err(Error::invalid(
            "grid",
            format!("{m} interior points cannot resolve {n_states} states"),
        ));
    }

    let h = grid.spacing();
    let kinetic = consts.hbar * consts.hbar / (2.0 * consts.mass * h * h);

    // Assemble in units of the kinetic coefficient so matrix entries are
    // O(1) regardless of grid spacing.
    let mut diag = Vec::with_capacity(m);
    for i in run.clone() {
        let v = samples[i].finite().expect("run holds only finite samples");
        diag.push(2.0 + v / kinetic);
    }
    let off = vec![-1.0; m - 1];

    let scaled = tridiag::lowest_eigenvalues(&diag, &off, n_states);
    let energies: Vec<f64> = scaled.iter().map(|&l| l * kinetic).collect();
    for w in energies.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::invalid(
                "spectrum",
                "eigenvalues are not strictly increasing",
            ));
        }
    }

    check_domain_truncation(spec, grid, &samples, *energies.last().unwrap())?;

    let mut states = Vec::with_capacity(n_states);
    let mut previous: Vec<Vec<f64>> = Vec::with_capacity(n_states);
    for (idx, &lambda) in scaled.iter().enumerate() {
        let v = eigenvector(&diag, &off, lambda, idx, &previous)?;

        let mut psi = vec![0.0; n];
        let inv_sqrt_h = 1.0 / h.sqrt();
        for (j, &vj) in v.iter().enumerate() {
            psi[run.start + j] = vj * inv_sqrt_h;
        }
        fix_sign(&mut psi);

        let found = count_nodes(&psi);
        if found != idx {
            return Err(Error::NodeCount {
                index: idx + 1,
                expected: idx,
                found,
            });
        }

        previous.push(v);
        states.push(EigenState {
            n: idx + 1,
            energy: energies[idx],
            psi,
        });
    }

    Ok(Spectrum {
        states,
        grid: grid.clone(),
        spec: spec.clone(),
    })
}

fn finite_interior_run(samples: &[PotentialValue]) -> Result<std::ops::Range<usize>> {
    let n = samples.len();
    let mut runs: Vec<std::ops::Range<usize>> = Vec::new();
    let mut start = None;
    for (i, sample) in samples.iter().enumerate().take(n - 1).skip(1) {
        match (sample.is_wall(), start) {
            (false, None) => start = Some(i),
            (true, Some(s)) => {
                runs.push(s..i);
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        runs.push(s..n - 1);
    }
    match runs.len() {
        0 => Err(Error::invalid(
            "potential",
            "no finite interior samples on the grid",
        )),
        1 => Ok(runs.pop().unwrap()),
        _ => Err(Error::DisconnectedDomain),
    }
}

/// Inverse iteration with a deterministic random start, reusing one LU
/// factorization of (T − λ). Two passes push the forbidden-region tail of
/// the vector below the node-count threshold; a third adds margin.
fn eigenvector(
    diag: &[f64],
    off: &[f64],
    lambda: f64,
    index: usize,
    previous: &[Vec<f64>],
) -> Result<Vec<f64>> {
    let m = diag.len();
    let shifted: Vec<f64> = diag.iter().map(|&d| d - lambda).collect();
    let lu = tridiag::TridiagLu::factor(off, &shifted, off);

    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED_BA5E + index as u64);
    let mut v: Vec<f64> = (0..m).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
    normalize(&mut v);

    let mut residual = f64::MAX;
    for pass in 0..6 {
        lu.solve_in_place(&mut v);
        normalize(&mut v);
        if pass >= 2 {
            residual = shifted_residual(diag, off, lambda, &v);
            if residual < 1e-10 {
                break;
            }
        }
    }
    if residual > 1e-8 {
        return Err(Error::invalid(
            "eigenvector",
            format!("inverse iteration stalled at residual {residual:e}"),
        ));
    }

    for w in previous {
        let dot: f64 = v.iter().zip(w.iter()).map(|(a, b)| a * b).sum();
        for (vi, wi) in v.iter_mut().zip(w.iter()) {
            *vi -= dot * wi;
        }
    }
    normalize(&mut v);
    Ok(v)
}

fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in v.iter_mut() {
            *x /= norm;
        }
    }
}

fn shifted_residual(diag: &[f64], off: &[f64], lambda: f64, v: &[f64]) -> f64 {
    let mut y = vec![0.0; v.len()];
    tridiag::shifted_mul(diag, off, lambda, v, &mut y);
    y.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// First lobe positive: flip the whole vector if the first sample above
/// 1e-3 of the maximum is negative.
fn fix_sign(psi: &mut [f64]) {
    let max = psi.iter().fold(0.0_f64, |m, &x| m.max(x.abs()));
    if max == 0.0 {
        return;
    }
    let threshold = 1e-3 * max;
    if let Some(&first) = psi.iter().find(|x| x.abs() >= threshold) {
        if first < 0.0 {
            for x in psi.iter_mut() {
                *x = -*x;
            }
        }
    }
}

/// For unbounded (gravity-type) potentials, the classically allowed region
/// of the highest state must end well inside the grid: the last grid point
/// with V(z) ≤ E may not lie within 20% of z_max.
fn check_domain_truncation(
    spec: &PotentialSpec,
    grid: &Grid,
    samples: &[PotentialValue],
    e_top: f64,
) -> Result<()> {
    let unbounded = matches!(
        spec,
        PotentialSpec::GravityFloor | PotentialSpec::GravityWithAbsorber { .. }
    );
    if !unbounded {
        return Ok(());
    }
    let mut turning_point = grid.z_min();
    for (i, s) in samples.iter().enumerate() {
        if let Some(v) = s.finite() {
            if v <= e_top {
                turning_point = grid.z(i);
            }
        }
    }
    if turning_point > 0.8 * grid.z_max() {
        return Err(Error::DomainTruncation {
            turning_point,
            z_max: grid.z_max(),
        });
    }
    Ok(())
}
