use std::cmp::Ordering;
use std::f64::consts::SQRT_2;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::NoiseConfig;
use crate::counts::{chsh_value, ChshAngles};
use crate::protocol::{EprResource, InputStatePrep, Protocol, BELL_INPUTS, STATE_BATCH_INPUTS};
use crate::quantum::linalg::{CMatrix, CVector, ONE};
use crate::tomography::apply_choi;
use crate::{Error, Result};

/// Largest accepted fidelity residual.
pub const INFEASIBLE_RESIDUAL: f64 = 0.02;
/// Truth-table standard error the pair rate is tuned to.
pub const TARGET_TRUTH_TABLE_SIGMA: f64 = 0.003;
/// Counting window the pair rate is tuned for, in seconds.
pub const CALIBRATION_WINDOW_S: f64 = 10.0;

const TSIRELSON: f64 = 2.0 * SQRT_2;

/// Figures the search is fitted to. The four fidelities define the residual;
/// `chsh` (accidental-subtracted S) and `hom_visibility` only steer the search.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationTargets {
    pub truth_table: f64,
    pub state: f64,
    pub bell: f64,
    pub process: f64,
    #[serde(default)]
    pub chsh: Option<f64>,
    #[serde(default)]
    pub hom_visibility: Option<f64>,
}

impl CalibrationTargets {
    /// Headline figures of the teleported chip gate.
    pub const HEADLINE: CalibrationTargets = CalibrationTargets {
        truth_table: 0.931,
        state: 0.870,
        bell: 0.862,
        process: 0.831,
        chsh: Some(2.686),
        hom_visibility: Some(0.974),
    };

    pub fn uniform(f: f64) -> Self {
        Self {
            truth_table: f,
            state: f,
            bell: f,
            process: f,
            chsh: None,
            hom_visibility: None,
        }
    }

    pub fn fidelities(&self) -> [f64; 4] {
        [self.truth_table, self.state, self.bell, self.process]
    }

    pub fn validate(&self) -> Result<()> {
        for (name, f) in ["truth_table", "state", "bell", "process"].into_iter().zip(self.fidelities()) {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::OutOfRange {
                    name,
                    value: f,
                    range: "(0, 1]",
                });
            }
        }
        if let Some(s) = self.chsh {
            if !(0.0..=TSIRELSON).contains(&s) {
                return Err(Error::OutOfRange {
                    name: "chsh",
                    value: s,
                    range: "[0, 2√2]",
                });
            }
        }
        if let Some(v) = self.hom_visibility {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::OutOfRange {
                    name: "hom_visibility",
                    value: v,
                    range: "[0, 1]",
                });
            }
        }
        Ok(())
    }
}

/// Noiseless-statistics figures of a configuration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Predictions {
    pub truth_table: f64,
    pub state: f64,
    pub bell: f64,
    pub process: f64,
    pub chsh: f64,
    pub hom_visibility: f64,
}

impl Predictions {
    pub fn fidelities(&self) -> [f64; 4] {
        [self.truth_table, self.state, self.bell, self.process]
    }

    /// Euclidean distance of the four fidelities from their targets.
    pub fn residual(&self, targets: &CalibrationTargets) -> f64 {
        self.fidelities()
            .iter()
            .zip(targets.fidelities())
            .map(|(f, t)| (f - t).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    fn objective(&self, targets: &CalibrationTargets) -> f64 {
        let mut sum = self.residual(targets).powi(2);
        if let Some(s) = targets.chsh {
            sum += ((self.chsh - s) / TSIRELSON).powi(2);
        }
        if let Some(v) = targets.hom_visibility {
            sum += (self.hom_visibility - v).powi(2);
        }
        sum
    }
}

/// Figures of the teleported channel before accidentals are mixed in.
#[derive(Clone, Copy, Debug)]
struct ChannelFigures {
    truth_table: f64,
    state: f64,
    bell: f64,
    process: f64,
    chsh: f64,
}

impl ChannelFigures {
    fn compute(cfg: &NoiseConfig) -> Result<Self> {
        let epr = EprResource::from_noise(cfg)?;
        let j = Protocol::from_noise(cfg).teleported_choi(&epr)?;
        let overlap = |token: &str| -> f64 {
            let prep: InputStatePrep = token.parse().expect("fixed token");
            let rho = prep.state().to_density();
            let out = apply_choi(&j, rho.matrix());
            let psi = prep.ideal_output();
            (psi.amplitudes().adjoint() * out * psi.amplitudes())[(0, 0)].re
        };
        let mean = |tokens: &[&str]| tokens.iter().map(|t| overlap(t)).sum::<f64>() / tokens.len() as f64;
        // |Φ_U> = Σ_i |i> ⊗ CNOT|i>
        let cnot = [0usize, 1, 3, 2];
        let mut phi = CVector::zeros(16);
        for (i, &k) in cnot.iter().enumerate() {
            phi[4 * i + k] = ONE;
        }
        let process = (phi.adjoint() * &j * &phi)[(0, 0)].re / 16.0;
        let truth_table = cnot
            .iter()
            .enumerate()
            .map(|(i, &k)| {
                let mut e = CMatrix::zeros(4, 4);
                e[(i, i)] = ONE;
                apply_choi(&j, &e)[(k, k)].re
            })
            .sum::<f64>()
            / 4.0;
        Ok(Self {
            truth_table,
            state: mean(&STATE_BATCH_INPUTS),
            bell: mean(&BELL_INPUTS),
            process,
            chsh: chsh_value(epr.state(), &ChshAngles::OPTIMAL)?,
        })
    }

    /// Accidentals add white noise of weight `w` to every raw distribution.
    fn with_accidentals(&self, cfg: &NoiseConfig) -> Predictions {
        let w = cfg.accidental_weight();
        let mix = |f: f64, floor: f64| (1.0 - w) * f + w * floor;
        Predictions {
            truth_table: mix(self.truth_table, 0.25),
            state: mix(self.state, 0.25),
            bell: mix(self.bell, 0.25),
            process: mix(self.process, 1.0 / 16.0),
            chsh: self.chsh,
            hom_visibility: cfg.visibility_v,
        }
    }
}

/// Exact-statistics figures of `cfg`: truth-table fidelity, mean state
/// fidelity over the 14-state batch and the Bell inputs, process fidelity,
/// accidental-subtracted CHSH value and subtracted HOM visibility.
pub fn predict(cfg: &NoiseConfig) -> Result<Predictions> {
    cfg.validate()?;
    Ok(ChannelFigures::compute(cfg)?.with_accidentals(cfg))
}

/// Evenly spaced search values `min..=max`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Axis {
    pub fn new(min: f64, max: f64, points: usize) -> Self {
        Self { min, max, points }
    }

    pub fn values(&self) -> Vec<f64> {
        if self.points <= 1 {
            return vec![self.min];
        }
        let step = self.spacing();
        (0..self.points)
            .map(|i| if i + 1 == self.points { self.max } else { self.min + step * i as f64 })
            .collect()
    }

    fn spacing(&self) -> f64 {
        if self.points <= 1 {
            0.0
        } else {
            (self.max - self.min) / (self.points - 1) as f64
        }
    }

    fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.min, self.max)
    }
}

/// Coarse grid followed by a compass search from the best grid point.
/// Axis order is `(werner_p, extinction_eps, visibility_v, accidental_ratio,
/// gate_dephasing)`, which is also the tie-breaking order.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationGrid {
    pub werner_p: Axis,
    pub extinction_eps: Axis,
    pub visibility_v: Axis,
    pub accidental_ratio: Axis,
    pub gate_dephasing: Axis,
    /// Compass search stops once every step is below this fraction of its axis span.
    pub min_relative_step: f64,
    pub max_refine_evaluations: usize,
}

impl Default for CalibrationGrid {
    fn default() -> Self {
        Self {
            werner_p: Axis::new(0.9, 1.0, 6),
            extinction_eps: Axis::new(0.0, 0.05, 6),
            visibility_v: Axis::new(0.9, 1.0, 6),
            accidental_ratio: Axis::new(0.0, 0.2, 6),
            gate_dephasing: Axis::new(0.0, 0.15, 6),
            min_relative_step: 1e-4,
            max_refine_evaluations: 2000,
        }
    }
}

impl CalibrationGrid {
    fn axes(&self) -> [Axis; 5] {
        [
            self.werner_p,
            self.extinction_eps,
            self.visibility_v,
            self.accidental_ratio,
            self.gate_dephasing,
        ]
    }

    fn validate(&self) -> Result<()> {
        let names = ["werner_p", "extinction_eps", "visibility_v", "accidental_ratio", "gate_dephasing"];
        for (name, axis) in names.into_iter().zip(self.axes()) {
            if axis.points == 0 || !(axis.min <= axis.max) {
                return Err(Error::Config(format!("axis {name} is empty")));
            }
            let mut lo = [1.0, 0.0, 1.0, 0.0, 0.0];
            let mut hi = lo;
            let k = names.iter().position(|n| *n == name).expect("listed");
            lo[k] = axis.min;
            hi[k] = axis.max;
            config_of(lo, 1.0).validate()?;
            config_of(hi, 1.0).validate()?;
        }
        Ok(())
    }
}

fn config_of(x: [f64; 5], pair_rate_hz: f64) -> NoiseConfig {
    NoiseConfig {
        werner_p: x[0],
        extinction_eps: x[1],
        visibility_v: x[2],
        accidental_ratio: x[3],
        pair_rate_hz,
        gate_dephasing: x[4],
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub config: NoiseConfig,
    pub targets: CalibrationTargets,
    pub predictions: Predictions,
    /// Euclidean distance of the four predicted fidelities from the targets.
    pub residual: f64,
    pub evaluations: usize,
}

/// Pair rate at which the truth-table fidelity `tt` carries standard error
/// `sigma` over windows of `window_s`: each input row collects
/// `rate·T·(1+a)` coincidences and the table averages four rows.
pub fn pair_rate_for(tt: f64, accidental_ratio: f64, sigma: f64, window_s: f64) -> Result<f64> {
    let rate = tt * (1.0 - tt) / (4.0 * sigma * sigma * window_s * (1.0 + accidental_ratio));
    if rate.is_finite() && rate > 0.0 {
        Ok(rate)
    } else {
        Err(Error::OutOfRange {
            name: "truth_table",
            value: tt,
            range: "(0, 1)",
        })
    }
}

#[derive(Clone, Copy, Debug)]
struct Candidate {
    objective: f64,
    x: [f64; 5],
}

impl Candidate {
    /// Lowest objective first, then lexicographic parameter order.
    fn cmp(&self, other: &Self) -> Ordering {
        self.objective.total_cmp(&other.objective).then_with(|| {
            self.x
                .iter()
                .zip(&other.x)
                .map(|(a, b)| a.total_cmp(b))
                .find(|o| o.is_ne())
                .unwrap_or(Ordering::Equal)
        })
    }

    fn better(self, other: Self) -> Self {
        if other.cmp(&self).is_lt() {
            other
        } else {
            self
        }
    }
}

fn evaluate(x: [f64; 5], targets: &CalibrationTargets) -> Result<Candidate> {
    let p = predict(&config_of(x, 1.0))?;
    Ok(Candidate {
        objective: p.objective(targets),
        x,
    })
}

/// Fits the noise knobs to `targets` with exact statistics. The grid stage
/// runs in parallel; the reduction and the compass search are deterministic,
/// so the result depends only on `targets` and `grid`. The pair rate is then
/// set from the fitted truth-table fidelity. Residuals above
/// [`INFEASIBLE_RESIDUAL`] are reported as [`Error::Infeasible`].
pub fn calibrate(targets: &CalibrationTargets, grid: &CalibrationGrid) -> Result<Calibration> {
    targets.validate()?;
    grid.validate()?;
    let axes = grid.axes();
    let values: Vec<Vec<f64>> = axes.iter().map(Axis::values).collect();
    // The Choi matrix depends on four knobs; accidentals are mixed in analytically.
    let channel_points: Vec<[f64; 4]> = values[0]
        .iter()
        .flat_map(|&p| {
            let values = &values;
            values[1].iter().flat_map(move |&e| {
                values[2]
                    .iter()
                    .flat_map(move |&v| values[4].iter().map(move |&g| [p, e, v, g]))
            })
        })
        .collect();
    let mut best = channel_points
        .par_iter()
        .map(|&[p, e, v, g]| {
            let figures = ChannelFigures::compute(&config_of([p, e, v, 0.0, g], 1.0))?;
            let mut best: Option<Candidate> = None;
            for &a in &values[3] {
                let x = [p, e, v, a, g];
                let c = Candidate {
                    objective: figures.with_accidentals(&config_of(x, 1.0)).objective(targets),
                    x,
                };
                best = Some(best.map_or(c, |b| b.better(c)));
            }
            Ok::<_, Error>(best.expect("axes are non-empty"))
        })
        .try_reduce_with(|a, b| Ok(a.better(b)))
        .expect("grid is non-empty")?;
    let mut evaluations = channel_points.len() * values[3].len();
    let refine_budget = evaluations + grid.max_refine_evaluations;

    let mut step: Vec<f64> = axes.iter().map(|a| a.spacing() / 2.0).collect();
    let span: Vec<f64> = axes.iter().map(|a| a.max - a.min).collect();
    while evaluations < refine_budget {
        if (0..5).all(|k| step[k] <= grid.min_relative_step * span[k]) {
            break;
        }
        let mut moved = false;
        for k in 0..5 {
            if step[k] <= grid.min_relative_step * span[k] {
                continue;
            }
            for dir in [1.0, -1.0] {
                let mut x = best.x;
                x[k] = axes[k].clamp(x[k] + dir * step[k]);
                if x[k] == best.x[k] {
                    continue;
                }
                let c = evaluate(x, targets)?;
                evaluations += 1;
                if c.cmp(&best).is_lt() {
                    best = c;
                    moved = true;
                    break;
                }
            }
        }
        if !moved {
            step.iter_mut().for_each(|s| *s /= 2.0);
        }
    }

    let predictions = predict(&config_of(best.x, 1.0))?;
    let residual = predictions.residual(targets);
    if residual > INFEASIBLE_RESIDUAL {
        return Err(Error::Infeasible {
            residual,
            threshold: INFEASIBLE_RESIDUAL,
        });
    }
    let rate = if predictions.truth_table < 1.0 {
        pair_rate_for(
            predictions.truth_table,
            best.x[3],
            TARGET_TRUTH_TABLE_SIGMA,
            CALIBRATION_WINDOW_S,
        )?
    } else {
        super::DEFAULT_PAIR_RATE_HZ
    };
    Ok(Calibration {
        config: config_of(best.x, rate),
        targets: *targets,
        predictions,
        residual,
        evaluations,
    })
}
