//! Fitting a block of samples with a tensor-product B-spline.
//!
//! Samples get uniform parameters on `[0, 1]` per axis. Because the data is a
//! full tensor grid, the 3-D least-squares problem factors into 1-D curve
//! fits: every x line is fitted, then every y line of the intermediate
//! coefficients, then every z line.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::field::ScalarGrid3D;
use crate::mfa::linalg::{Collocation, NormalSolver};
use crate::mfa::{KnotVector, MfaModel};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub enum CtrlSpec {
    /// Fixed control-point counts per axis.
    Fixed([usize; 3]),
    /// One control point per input sample (square, interpolating system).
    Match,
    /// Start from `degree + 1` per axis and refine until every sample's
    /// relative error is at most `e_max`, or `cap` is reached.
    Adaptive { e_max: f64, cap: Option<[usize; 3]> },
}

/// Interior knot placement for fixed control-point counts.
///
/// With uniform knots and as many control points as samples, the samples of
/// a quadratic fit land on knots, where the collocation matrix nearly loses
/// the alternating mode; high-frequency data then rings badly. `Fitted` is
/// therefore the default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KnotPlacement {
    /// Equally spaced interior knots.
    Uniform,
    /// Placed from the sample parameters, see [`KnotVector::fitted`].
    #[default]
    Fitted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncodeConfig {
    pub degree: usize,
    pub ctrl: CtrlSpec,
    pub knots: KnotPlacement,
}

impl Default for EncodeConfig {
    fn default() -> Self {
        Self {
            degree: 2,
            ctrl: CtrlSpec::Match,
            knots: KnotPlacement::default(),
        }
    }
}

impl EncodeConfig {
    pub fn fixed(degree: usize, ctrl: [usize; 3]) -> Self {
        Self {
            degree,
            ctrl: CtrlSpec::Fixed(ctrl),
            knots: KnotPlacement::default(),
        }
    }

    pub fn adaptive(degree: usize, e_max: f64) -> Self {
        Self {
            degree,
            ctrl: CtrlSpec::Adaptive { e_max, cap: None },
            knots: KnotPlacement::default(),
        }
    }

    pub fn with_knots(mut self, knots: KnotPlacement) -> Self {
        self.knots = knots;
        self
    }

    fn check_degree(&self) -> Result<()> {
        if self.degree < 1 || self.degree > super::MAX_DEGREE {
            return Err(Error::Parameter(format!(
                "degree must be in 1..={}, got {}",
                super::MAX_DEGREE,
                self.degree
            )));
        }
        Ok(())
    }
}

/// Per-round record of the adaptive loop.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundStats {
    pub n_ctrl: [usize; 3],
    pub max_rel_error: f64,
    /// Root-mean-square relative error; the quantity the fit minimizes.
    pub rms_rel_error: f64,
}

#[derive(Debug, Clone)]
pub struct AdaptiveOutcome<T> {
    pub model: MfaModel<T>,
    /// Set when the tolerance was not met before the control-point cap.
    pub capped: bool,
    pub rounds: Vec<RoundStats>,
}

fn uniform_params<T: Real>(n: usize) -> Vec<T> {
    (0..n)
        .map(|i| {
            if i + 1 == n {
                T::one()
            } else {
                T::of_usize(i) / T::of_usize(n - 1)
            }
        })
        .collect()
}

/// Least-squares control points for the given knot vectors.
fn fit<T: Real>(grid: &ScalarGrid3D<T>, knots: &[KnotVector<T>; 3]) -> Result<Vec<T>> {
    let [nx, ny, nz] = grid.dims();
    let [cx, cy, cz] = [knots[0].n_ctrl(), knots[1].n_ctrl(), knots[2].n_ctrl()];
    let solvers = [0, 1, 2]
        .into_iter()
        .map(|a| NormalSolver::new(Collocation::new(&knots[a], &uniform_params(grid.dims()[a]))))
        .collect::<Result<Vec<_>>>()?;
    let values = grid.values();

    let mut scratch = vec![T::zero(); cx.max(cy).max(cz)];

    let mut along_x = vec![T::zero(); cx * ny * nz];
    for k in 0..nz {
        for j in 0..ny {
            let src = nx * (j + ny * k);
            let dst = cx * (j + ny * k);
            solvers[0].solve_strided(
                &values[src..],
                1,
                &mut along_x[dst..],
                1,
                &mut scratch[..cx],
            );
        }
    }

    let mut along_y = vec![T::zero(); cx * cy * nz];
    for k in 0..nz {
        for i in 0..cx {
            let src = i + cx * ny * k;
            let dst = i + cx * cy * k;
            solvers[1].solve_strided(
                &along_x[src..],
                cx,
                &mut along_y[dst..],
                cx,
                &mut scratch[..cy],
            );
        }
    }

    let mut ctrl = vec![T::zero(); cx * cy * cz];
    for j in 0..cy {
        for i in 0..cx {
            let off = i + cx * j;
            solvers[2].solve_strided(
                &along_y[off..],
                cx * cy,
                &mut ctrl[off..],
                cx * cy,
                &mut scratch[..cz],
            );
        }
    }
    Ok(ctrl)
}

/// Spline values at every input sample, x-fastest, by applying the
/// collocation matrices axis by axis.
fn evaluate_on_samples<T: Real>(model: &MfaModel<T>, dims: [usize; 3]) -> Vec<T> {
    let [nx, ny, nz] = dims;
    let [cx, cy, _] = model.n_ctrl();
    let cols: Vec<Collocation<T>> = (0..3)
        .map(|a| Collocation::new(&model.knots[a], &uniform_params(dims[a])))
        .collect();

    let mut along_z = vec![T::zero(); cx * cy * nz];
    let mut line = vec![T::zero(); nx.max(ny).max(nz)];
    for j in 0..cy {
        for i in 0..cx {
            let off = i + cx * j;
            cols[2].apply_strided(&model.ctrl[off..], cx * cy, &mut line[..nz]);
            for (k, &v) in line[..nz].iter().enumerate() {
                along_z[off + cx * cy * k] = v;
            }
        }
    }
    let mut along_y = vec![T::zero(); cx * ny * nz];
    for k in 0..nz {
        for i in 0..cx {
            cols[1].apply_strided(&along_z[i + cx * cy * k..], cx, &mut line[..ny]);
            for (j, &v) in line[..ny].iter().enumerate() {
                along_y[i + cx * (j + ny * k)] = v;
            }
        }
    }
    let mut out = vec![T::zero(); nx * ny * nz];
    for k in 0..nz {
        for j in 0..ny {
            let src = cx * (j + ny * k);
            let dst = nx * (j + ny * k);
            cols[0].apply_strided(&along_y[src..], 1, &mut out[dst..dst + nx]);
        }
    }
    out
}

/// Relative errors at every input sample; a constant block uses absolute error.
fn relative_errors<T: Real>(grid: &ScalarGrid3D<T>, fitted: &[T]) -> Vec<T> {
    let range = grid.value_range();
    let norm = if range > T::zero() { range } else { T::one() };
    grid.values()
        .iter()
        .zip(fitted)
        .map(|(&f, &g)| (g - f).abs() / norm)
        .collect()
}

fn max_of<T: Real>(v: &[T]) -> T {
    v.iter().copied().fold(T::zero(), T::max)
}

fn rms_of<T: Real>(v: &[T]) -> f64 {
    let sum: f64 = v.iter().map(|e| e.to_f64_lossy().powi(2)).sum();
    (sum / v.len() as f64).sqrt()
}

fn build_model<T: Real>(
    grid: &ScalarGrid3D<T>,
    knots: [KnotVector<T>; 3],
) -> Result<(MfaModel<T>, Vec<T>)> {
    let ctrl = fit(grid, &knots)?;
    let mut model = MfaModel::new(
        knots,
        ctrl,
        grid.domain_min(),
        grid.domain_max(),
        grid.dims(),
        T::zero(),
    )?;
    let errors = relative_errors(grid, &evaluate_on_samples(&model, grid.dims()));
    model.e_max_achieved = max_of(&errors);
    Ok((model, errors))
}

/// Fits with a fixed control-point count; knots follow `cfg.knots`.
pub fn encode_fixed<T: Real>(grid: &ScalarGrid3D<T>, cfg: &EncodeConfig) -> Result<MfaModel<T>> {
    Ok(build_model(grid, fixed_knots(grid, cfg)?)?.0)
}

fn fixed_knots<T: Real>(grid: &ScalarGrid3D<T>, cfg: &EncodeConfig) -> Result<[KnotVector<T>; 3]> {
    cfg.check_degree()?;
    let dims = grid.dims();
    let ctrl = match &cfg.ctrl {
        CtrlSpec::Fixed(c) => *c,
        CtrlSpec::Match => dims,
        CtrlSpec::Adaptive { .. } => {
            return Err(Error::Parameter(
                "encode_fixed needs a fixed control-point count".into(),
            ))
        }
    };
    for a in 0..3 {
        if ctrl[a] < cfg.degree + 1 || ctrl[a] > dims[a] {
            return Err(Error::Parameter(format!(
                "axis {a}: need degree+1 = {} <= ctrl {} <= samples {}",
                cfg.degree + 1,
                ctrl[a],
                dims[a]
            )));
        }
    }
    let knots = [0, 1, 2].map(|a| match cfg.knots {
        KnotPlacement::Uniform => KnotVector::clamped_uniform(cfg.degree, ctrl[a]),
        KnotPlacement::Fitted => KnotVector::fitted(cfg.degree, ctrl[a], &uniform_params(dims[a])),
    });
    let [kx, ky, kz] = knots;
    Ok([kx?, ky?, kz?])
}

/// Adaptive refinement: fit, find samples above tolerance, split the knot
/// span containing each such sample (per axis) at its midpoint, refit.
pub fn encode_adaptive<T: Real>(
    grid: &ScalarGrid3D<T>,
    cfg: &EncodeConfig,
) -> Result<AdaptiveOutcome<T>> {
    cfg.check_degree()?;
    let CtrlSpec::Adaptive { e_max, cap } = cfg.ctrl.clone() else {
        return Err(Error::Parameter(
            "encode_adaptive needs an adaptive config".into(),
        ));
    };
    if !(e_max > 0.0 && e_max < 1.0) {
        return Err(Error::Parameter(format!(
            "e_max must be in (0, 1), got {e_max}"
        )));
    }
    let dims = grid.dims();
    let p = cfg.degree;
    if let Some(a) = (0..3).find(|&a| dims[a] < p + 1) {
        return Err(Error::Parameter(format!(
            "axis {a} has {} samples, fewer than degree+1 = {}",
            dims[a],
            p + 1
        )));
    }
    let cap = cap.unwrap_or(dims);
    if let Some(a) = (0..3).find(|&a| cap[a] < p + 1) {
        return Err(Error::Parameter(format!(
            "ctrl cap on axis {a} is below degree+1"
        )));
    }
    let params: [Vec<T>; 3] = [0, 1, 2].map(|a| uniform_params(dims[a]));
    let tol = T::of(e_max);

    let mut knots = [
        KnotVector::clamped_uniform(p, p + 1)?,
        KnotVector::clamped_uniform(p, p + 1)?,
        KnotVector::clamped_uniform(p, p + 1)?,
    ];
    let mut rounds = Vec::new();
    loop {
        let (model, errors) = build_model(grid, knots.clone())?;
        rounds.push(RoundStats {
            n_ctrl: model.n_ctrl(),
            max_rel_error: model.e_max_achieved.to_f64_lossy(),
            rms_rel_error: rms_of(&errors),
        });
        if model.e_max_achieved <= tol {
            return Ok(AdaptiveOutcome {
                model,
                capped: false,
                rounds,
            });
        }

        let mut marked: [BTreeSet<usize>; 3] = Default::default();
        for k in 0..dims[2] {
            for j in 0..dims[1] {
                for i in 0..dims[0] {
                    if errors[i + dims[0] * (j + dims[1] * k)] > tol {
                        for (a, idx) in [i, j, k].into_iter().enumerate() {
                            marked[a].insert(knots[a].span_unchecked(params[a][idx]));
                        }
                    }
                }
            }
        }

        let mut inserted = 0usize;
        for a in 0..3 {
            let midpoints: Vec<T> = marked[a]
                .iter()
                .map(|&s| (knots[a].knots()[s] + knots[a].knots()[s + 1]) * T::of(0.5))
                .collect();
            for mid in midpoints {
                if knots[a].n_ctrl() >= cap[a] {
                    break;
                }
                let mut trial = knots[a].clone();
                if trial.insert(mid).is_ok() && trial.fits_parameters(&params[a]) {
                    knots[a] = trial;
                    inserted += 1;
                }
            }
        }
        if inserted == 0 {
            return Ok(AdaptiveOutcome {
                model,
                capped: true,
                rounds,
            });
        }
    }
}

/// Dispatches on the control-point spec. Fixed fits report a single round.
pub fn encode<T: Real>(grid: &ScalarGrid3D<T>, cfg: &EncodeConfig) -> Result<AdaptiveOutcome<T>> {
    match cfg.ctrl {
        CtrlSpec::Adaptive { .. } => encode_adaptive(grid, cfg),
        _ => {
            let knots = fixed_knots(grid, cfg)?;
            let (model, errors) = build_model(grid, knots)?;
            let rounds = vec![RoundStats {
                n_ctrl: model.n_ctrl(),
                max_rel_error: model.e_max_achieved.to_f64_lossy(),
                rms_rel_error: rms_of(&errors),
            }];
            Ok(AdaptiveOutcome {
                model,
                capped: false,
                rounds,
            })
        }
    }
}
