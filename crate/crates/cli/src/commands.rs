//! Stages of the pipeline. Each `build_*` computes in memory; each `emit_*`
//! writes the stage's files and records its checks.

use std::collections::BTreeMap;
use std::time::Instant;

use qtransport::fit::{fit_kernel, DampedOscFit};
use qtransport::kernel::{sample_kernel, windowed_transform};
use qtransport::optimizer::{
    el_residual, lagrange_selfcheck, lambda_grid, lambda_sweep, solve_trajectory, KernelSource, PoleClassification,
};
use qtransport::scalar::linspace;
use qtransport::survival::{adiabaticity_report, Velocity};
use qtransport::{
    Complex64, Error, KernelFit, KernelSamples, LeakageSpectrum, Morse, PhononModeTable, PoleExpansion, SurvivalModel,
    Trajectory,
};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{Horizon, RunConfig};
use crate::error::CliError;
use crate::output::{col, num, Writer, PROBABILITY, REDUCED};
use crate::svg::Series;

/// Frequencies at which the spectrum is compared with the windowed kernel
/// transform.
const FOURIER_PROBES: [f64; 4] = [0.5, 1.0, 2.0, 4.0];
const EL_GRID_POINTS: usize = 101;

pub struct Run {
    pub config: RunConfig,
    pub modes: PhononModeTable,
    pub out: Writer,
    pub checks: BTreeMap<String, f64>,
}

impl Run {
    /// Loads everything the configuration refers to; any failure here is a
    /// configuration error and happens before numerical work starts.
    pub fn new(config: RunConfig) -> Result<Self, CliError> {
        let modes = match &config.survival.mode_table {
            Some(path) => PhononModeTable::from_path(path)
                .map_err(|e| CliError::Config(format!("survival.mode_table: {e}")))?,
            None => PhononModeTable::default(),
        };
        if let Some(k0) = config.survival.k0 {
            if k0 >= modes.len() {
                return Err(CliError::Config(format!(
                    "survival.k0 = {k0} but the mode table has {} modes",
                    modes.len()
                )));
            }
        }
        let out = Writer::new(&config.output.directory, config.output.svg)?;
        Ok(Self {
            config,
            modes,
            out,
            checks: BTreeMap::new(),
        })
    }

    fn check(&mut self, name: &str, value: f64) {
        self.checks.insert(name.to_string(), value);
    }

    // ---- morse ----

    pub fn build_model(&self) -> Result<Morse, CliError> {
        let c = &self.config.morse;
        Ok(Morse::new(c.depth, c.width, c.mass)?)
    }

    pub fn emit_morse(&mut self, model: &Morse) -> Result<(), CliError> {
        let c = &self.config.morse;
        let kappa = linspace(0.0, c.kappa_max, c.kappa_points);
        let a = kappa
            .iter()
            .map(|&k| model.a_coefficient(k))
            .collect::<qtransport::Result<Vec<_>>>()?;
        self.out.numeric_csv(
            "a_kappa.csv",
            "continuum weight a_kappa",
            &[col("kappa", REDUCED), col("a_kappa", REDUCED)],
            &[&kappa, &a],
        )?;
        println!(
            "morse: N = {}, omega0 = {}, m* = {}",
            model.n_param(),
            model.omega0(),
            model.m_star()
        );
        Ok(())
    }

    // ---- kernel and spectrum ----

    pub fn build_samples(&self, model: &Morse) -> Result<KernelSamples, CliError> {
        Ok(sample_kernel(model, self.config.kernel.t_max, self.config.kernel.n)?)
    }

    pub fn emit_kernel(&mut self, samples: &KernelSamples) -> Result<(), CliError> {
        self.out.numeric_csv(
            "kernel.csv",
            "memory kernel K(t)",
            &[col("t", REDUCED), col("kernel", REDUCED)],
            &[&samples.times, &samples.values],
        )?;
        println!("kernel: {} samples on [0, {}]", samples.len(), self.config.kernel.t_max);
        Ok(())
    }

    pub fn emit_spectrum(&mut self, model: &Morse, samples: &KernelSamples) -> Result<(), CliError> {
        let spec = LeakageSpectrum::new(model);
        let c = &self.config.kernel;
        let omega = linspace(-c.omega_max, c.omega_max, c.spectrum_points);
        let value = omega.iter().map(|&w| spec.value(w)).collect::<qtransport::Result<Vec<_>>>()?;
        let density = omega.iter().map(|&w| spec.density(w)).collect::<qtransport::Result<Vec<_>>>()?;
        self.out.numeric_csv(
            "spectrum.csv",
            "leakage spectrum G(omega)",
            &[col("omega", REDUCED), col("G", REDUCED), col("G_over_2pi", REDUCED)],
            &[&omega, &value, &density],
        )?;
        println!("spectrum: gap |omega| <= {}", spec.gap());
        let mut worst: f64 = 0.0;
        for w in FOURIER_PROBES {
            let g = spec.value(w)?;
            let ft = windowed_transform(samples, w);
            let rel = (ft - g).abs() / g.abs();
            worst = worst.max(rel);
            println!("  omega = {w}: G = {g:.6}, transformed kernel = {ft:.6}, relative difference {rel:.2e}");
        }
        self.check("spectrum_fourier_max_relative_difference", worst);
        Ok(())
    }

    // ---- fit ----

    pub fn build_fit(&self, samples: &KernelSamples) -> Result<KernelFit, CliError> {
        let [w0, w1] = self.config.fit.window;
        Ok(fit_kernel(samples, (w0, w1), self.config.fit.init)?)
    }

    pub fn emit_fit(&mut self, samples: &KernelSamples, fit: &KernelFit) -> Result<(), CliError> {
        #[derive(Serialize)]
        struct FitReport {
            a1: f64,
            b1: f64,
            c1: f64,
            d1: f64,
            w1: f64,
            w2: f64,
            residual_norm: f64,
            window: (f64, f64),
            reference_residual_norm: f64,
        }
        let reference = DampedOscFit::reference().residual_on(samples, fit.fit_window);
        let report = FitReport {
            a1: fit.a1,
            b1: fit.b1,
            c1: fit.c1,
            d1: fit.d1,
            w1: fit.w1,
            w2: fit.w2,
            residual_norm: fit.residual_norm,
            window: fit.fit_window,
            reference_residual_norm: reference,
        };
        self.out.json("fit.json", &report, &self.config)?;
        let data = samples.window(fit.fit_window.0, fit.fit_window.1);
        let model: Vec<f64> = data.times.iter().map(|&t| fit.eval(t)).collect();
        self.out.numeric_csv(
            "fit_overlay.csv",
            "kernel and damped-oscillator fit",
            &[col("t", REDUCED), col("data", REDUCED), col("model", REDUCED)],
            &[&data.times, &data.values, &model],
        )?;
        println!(
            "fit: a1 = {:.4}, b1 = {:.4}, c1 = {:.4}, d1 = {:.4}, w1 = {:.4}, w2 = {:.4}; residual {:.5} (reference parameters {:.5})",
            fit.a1, fit.b1, fit.c1, fit.d1, fit.w1, fit.w2, fit.residual_norm, reference
        );
        self.check("fit_residual_over_reference", fit.residual_norm / reference);
        Ok(())
    }

    // ---- optimize ----

    pub fn build_trajectory(&self, fit: &KernelFit) -> Result<Trajectory, CliError> {
        let c = &self.config.optimize;
        Ok(match c.horizon {
            Horizon::Fixed(t) => solve_trajectory(fit, c.lambda, c.p_dot0, t)?,
            Horizon::Named(_) => {
                let traj = solve_trajectory(fit, c.lambda, c.p_dot0, c.horizon_cap)?;
                let t = traj.expansion.fluence_horizon(c.fluence_target, c.horizon_cap)?;
                traj.with_horizon(t)?
            }
        })
    }

    pub fn emit_trajectory(&mut self, fit: &KernelFit, traj: &Trajectory) -> Result<(), CliError> {
        #[derive(Serialize)]
        struct TrajectoryReport<'a> {
            lambda: f64,
            p_dot0: f64,
            horizon: f64,
            horizon_rule: &'a str,
            fluence: f64,
            fluence_target: f64,
            poles: &'a [Complex64],
            residues: &'a [Complex64],
            classification: PoleClassification,
            euler_lagrange_residual: f64,
            lagrange_ratio: f64,
        }
        let c = self.config.optimize.clone();
        let kernel = KernelSource::Fitted(fit);
        let el = el_residual(traj, &kernel, &linspace(0.0, traj.horizon, EL_GRID_POINTS))?;
        let ratio = lagrange_selfcheck(traj, &kernel)?;
        let fluence = traj.fluence()?;
        let classification = qtransport::optimizer::classify_poles(traj.poles());
        let report = TrajectoryReport {
            lambda: traj.lambda,
            p_dot0: c.p_dot0,
            horizon: traj.horizon,
            horizon_rule: match c.horizon {
                Horizon::Fixed(_) => "fixed",
                Horizon::Named(_) => "fluence-matched",
            },
            fluence,
            fluence_target: c.fluence_target,
            poles: traj.poles(),
            residues: traj.residues(),
            classification,
            euler_lagrange_residual: el,
            lagrange_ratio: ratio,
        };
        self.out.json("trajectory.json", &report, &self.config)?;
        let t = linspace(0.0, traj.horizon, c.trajectory_points);
        let v = t.iter().map(|&x| traj.velocity(x)).collect::<qtransport::Result<Vec<_>>>()?;
        let p = t.iter().map(|&x| traj.position(x)).collect::<qtransport::Result<Vec<_>>>()?;
        self.out.numeric_csv(
            "trajectory.csv",
            "optimal trajectory",
            &[col("t", REDUCED), col("velocity", REDUCED), col("position", REDUCED)],
            &[&t, &v, &p],
        )?;
        println!(
            "optimize: lambda = {}, horizon T = {:.6}, fluence E(T) = {:.6}, classification {}",
            traj.lambda, traj.horizon, fluence, classification.verdict
        );
        println!("  Euler-Lagrange residual {el:.2e}, recovered |lambda| / |lambda| = {ratio:.4}");
        self.check("euler_lagrange_residual", el);
        self.check("lagrange_ratio", ratio);
        self.check("fluence_over_target", fluence / c.fluence_target);
        self.check("horizon", traj.horizon);
        if let Some([lo, hi]) = c.lambda_sweep {
            self.emit_sweep(fit, lo, hi)?;
        }
        Ok(())
    }

    fn emit_sweep(&mut self, fit: &KernelFit, lo: f64, hi: f64) -> Result<(), CliError> {
        let c = &self.config.optimize;
        let lambdas = lambda_grid(lo, hi, c.sweep_points)?;
        let entries = lambda_sweep(fit, &lambdas, c.p_dot0, c.fluence_target, c.horizon_cap)?;
        let headers = [
            col("lambda", REDUCED),
            "verdict".to_string(),
            "real_positive".to_string(),
            "real_negative".to_string(),
            "complex_rhp_pairs".to_string(),
            "complex_lhp_pairs".to_string(),
            col("growth_rate", REDUCED),
            col("fluence_horizon", REDUCED),
        ];
        let rows: Vec<Vec<String>> = entries
            .iter()
            .map(|e| {
                vec![
                    num(e.lambda),
                    e.classification.verdict.to_string(),
                    e.classification.real_positive.to_string(),
                    e.classification.real_negative.to_string(),
                    e.classification.complex_rhp_pairs.to_string(),
                    e.classification.complex_lhp_pairs.to_string(),
                    num(e.growth_rate),
                    e.fluence_horizon.map(num).unwrap_or_default(),
                ]
            })
            .collect();
        self.out.csv("sweep.csv", &headers, &rows)?;
        #[derive(Serialize)]
        struct SweepReport<'a> {
            entries: &'a [qtransport::optimizer::SweepEntry<f64>],
        }
        self.out.json("sweep.json", &SweepReport { entries: &entries }, &self.config)?;
        let log_lambda: Vec<f64> = lambdas.iter().map(|l| l.abs().log10()).collect();
        let growth: Vec<f64> = entries.iter().map(|e| e.growth_rate).collect();
        let horizon: Vec<f64> = entries.iter().map(|e| e.fluence_horizon.unwrap_or(f64::NAN)).collect();
        self.out.plot(
            "sweep.csv",
            "lambda sweep",
            "log10 |lambda|",
            &log_lambda,
            &[
                Series { name: "growth_rate", values: &growth },
                Series { name: "fluence_horizon", values: &horizon },
            ],
        )?;
        for e in &entries {
            println!(
                "  sweep lambda = {:.4e}: {}, growth rate {:.4}, fluence horizon {}",
                e.lambda,
                e.classification.verdict,
                e.growth_rate,
                e.fluence_horizon.map_or("not reached".to_string(), |t| format!("{t:.4}"))
            );
        }
        Ok(())
    }

    // ---- survival and adiabaticity ----

    fn transported(&self, traj: &Trajectory) -> PoleExpansion {
        if self.config.survival.zero_trajectory {
            PoleExpansion::zero()
        } else {
            traj.expansion.clone()
        }
    }

    pub fn emit_survival(&mut self, model: &Morse, traj: &Trajectory) -> Result<(), CliError> {
        let c = &self.config.survival;
        let p = self.transported(traj);
        let sm = SurvivalModel::new(model, traj.horizon, c.dkappa, self.modes.clone())?;
        let with_modes = !self.modes.is_empty();
        let k0 = c.k0;
        let mut headers = vec![
            col("t", REDUCED),
            col("p_free", PROBABILITY),
            col("p_free_spectral", PROBABILITY),
        ];
        if with_modes {
            headers.push(col("p_total", PROBABILITY));
        }
        if k0.is_some() {
            headers.push(col("p_one_phonon", PROBABILITY));
            if c.superposition {
                headers.push(col("p_superposition", PROBABILITY));
            }
        }
        for h in ["non_adiabatic", "phonon", "cross", "interference"] {
            headers.push(col(h, PROBABILITY));
        }

        let times = linspace(0.0, traj.horizon, c.points);
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(times.len());
        let mut failure = None;
        for &t in &times {
            match sm.series(&p, &[t], k0) {
                Ok(s) => {
                    let mut row = vec![t, s.p_free[0], s.p_free_spectral[0]];
                    if let Some(v) = &s.p_total {
                        row.push(v[0]);
                    }
                    if let Some(v) = &s.p_one_phonon {
                        row.push(v[0]);
                    }
                    if c.superposition {
                        if let Some(v) = &s.p_superposition {
                            row.push(v[0]);
                        }
                    }
                    let terms = s.terms[0];
                    row.extend([terms.non_adiabatic, terms.phonon, terms.cross, terms.interference]);
                    rows.push(row);
                }
                Err(e @ Error::RegimeBreakdown { .. }) => {
                    failure = Some(e);
                    break;
                }
                Err(e) => return Err(e.into()),
            }
        }
        let columns: Vec<Vec<f64>> = (0..headers.len()).map(|j| rows.iter().map(|r| r[j]).collect()).collect();
        let column_refs: Vec<&[f64]> = columns.iter().map(|c| c.as_slice()).collect();
        let n_prob = headers.len() - 4;
        let text_rows: Vec<Vec<String>> = rows.iter().map(|r| r.iter().map(|&x| num(x)).collect()).collect();
        self.out.csv("survival.csv", &headers, &text_rows)?;
        let series: Vec<Series> = headers[1..n_prob]
            .iter()
            .zip(&column_refs[1..n_prob])
            .map(|(h, c)| Series { name: h, values: c })
            .collect();
        self.out
            .plot("survival.csv", "survival probability", &headers[0], column_refs[0], &series)?;

        if let Some(e) = failure {
            self.out.text(
                "survival.partial",
                &format!("survival.csv is partial: {} of {} rows written\n{e}\n", rows.len(), times.len()),
            )?;
            return Err(e.into());
        }
        let stale = self.out.path("survival.partial");
        if stale.exists() {
            std::fs::remove_file(stale)?;
        }
        let gap = rows.iter().map(|r| (r[1] - r[2]).abs()).fold(0.0, f64::max);
        let min_free = rows.iter().map(|r| r[1]).fold(f64::INFINITY, f64::min);
        let end = rows.last().expect("at least two survival points");
        println!(
            "survival: P_free(T) = {:.6}, min P_free = {:.6}, max |time-domain - spectral| = {:.2e}",
            end[1], min_free, gap
        );
        if with_modes {
            println!("  P_total(T) = {:.6} with {} phonon modes", end[3], self.modes.len());
        }
        self.check("survival_time_vs_spectral", gap);
        self.check("survival_min_p_free", min_free);
        Ok(())
    }

    pub fn emit_adiabaticity(&mut self, model: &Morse, traj: &Trajectory) -> Result<(), CliError> {
        let c = &self.config.adiabaticity;
        let p = self.transported(traj);
        let kappas: Vec<f64> = (1..=c.kappa_points)
            .map(|i| c.kappa_max * i as f64 / c.kappa_points as f64)
            .collect();
        let times = linspace(0.0, traj.horizon, c.time_points);
        let report = adiabaticity_report(&p as &dyn Velocity<f64>, model, &kappas, &times, c.margin)?;
        let rows: Vec<Vec<String>> = report
            .cells
            .iter()
            .map(|cell| {
                vec![
                    num(cell.tau),
                    num(cell.kappa),
                    num(cell.lhs),
                    num(cell.rhs),
                    u8::from(cell.violated).to_string(),
                ]
            })
            .collect();
        self.out.csv(
            "adiabaticity.csv",
            &[
                col("tau", REDUCED),
                col("kappa", REDUCED),
                col("lhs", REDUCED),
                col("rhs", REDUCED),
                "violated".to_string(),
            ],
            &rows,
        )?;
        let worst: Vec<f64> = report
            .cells
            .chunks(kappas.len())
            .map(|row| row.iter().map(|cell| cell.lhs / cell.rhs).fold(0.0, f64::max))
            .collect();
        let margin = vec![c.margin; times.len()];
        self.out.plot(
            "adiabaticity.csv",
            "adiabaticity: max over kappa of lhs / rhs",
            &col("tau", REDUCED),
            &times,
            &[
                Series { name: "max lhs/rhs", values: &worst },
                Series { name: "margin", values: &margin },
            ],
        )?;
        let summary = match report.violated_band {
            Some((lo, hi)) => format!(
                "violated kappa band [{lo}, {hi}] ({} of {} cells, margin {})",
                report.violation_count(),
                report.cells.len(),
                c.margin
            ),
            None => format!("no violations ({} cells, margin {})", report.cells.len(), c.margin),
        };
        println!("adiabaticity: {summary}");
        #[derive(Serialize)]
        struct AdiabaticityReport {
            margin: f64,
            violated_band: Option<(f64, f64)>,
            violations: usize,
            cells: usize,
            summary: String,
        }
        self.out.json(
            "adiabaticity.json",
            &AdiabaticityReport {
                margin: c.margin,
                violated_band: report.violated_band,
                violations: report.violation_count(),
                cells: report.cells.len(),
                summary,
            },
            &self.config,
        )?;
        self.check("adiabaticity_violations", report.violation_count() as f64);
        Ok(())
    }
}

/// SHA-256 of the canonical configuration, ignoring where output goes.
pub fn config_hash(config: &RunConfig) -> String {
    let mut c = config.clone();
    c.output.directory = Default::default();
    Sha256::digest(c.canonical().as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[derive(Serialize)]
struct StageRecord {
    stage: &'static str,
    seconds: f64,
}

#[derive(Serialize)]
struct Failure {
    stage: &'static str,
    error: String,
}

#[derive(Serialize)]
struct Manifest {
    version: &'static str,
    cli_version: &'static str,
    config_sha256: String,
    completed_stages: Vec<&'static str>,
    timings: Vec<StageRecord>,
    failure: Option<Failure>,
    fluence_matched_horizon: Option<f64>,
    checks: BTreeMap<String, f64>,
    outputs: Vec<String>,
}

fn timed<R>(stage: &'static str, timings: &mut Vec<StageRecord>, f: impl FnOnce() -> Result<R, CliError>) -> Result<R, (&'static str, CliError)> {
    let start = Instant::now();
    let r = f().map_err(|e| (stage, e))?;
    timings.push(StageRecord {
        stage,
        seconds: start.elapsed().as_secs_f64(),
    });
    Ok(r)
}

/// All stages in order; the manifest is written whether or not they succeed.
pub fn pipeline(run: &mut Run) -> Result<(), CliError> {
    let mut timings = Vec::new();
    let mut horizon = None;
    let result = (|| {
        let model = timed("morse", &mut timings, || {
            let m = run.build_model()?;
            run.emit_morse(&m)?;
            Ok(m)
        })?;
        let samples = timed("kernel", &mut timings, || {
            let s = run.build_samples(&model)?;
            run.emit_kernel(&s)?;
            Ok(s)
        })?;
        timed("spectrum", &mut timings, || run.emit_spectrum(&model, &samples))?;
        let fit = timed("fit", &mut timings, || {
            let f = run.build_fit(&samples)?;
            run.emit_fit(&samples, &f)?;
            Ok(f)
        })?;
        let traj = timed("optimize", &mut timings, || {
            let t = run.build_trajectory(&fit)?;
            run.emit_trajectory(&fit, &t)?;
            Ok(t)
        })?;
        if matches!(run.config.optimize.horizon, Horizon::Named(_)) {
            horizon = Some(traj.horizon);
        }
        timed("survival", &mut timings, || run.emit_survival(&model, &traj))?;
        timed("adiabaticity", &mut timings, || run.emit_adiabaticity(&model, &traj))?;
        Ok(())
    })();
    let (failure, error) = match result {
        Ok(()) => (None, None),
        Err((stage, e)) => (
            Some(Failure {
                stage,
                error: e.to_string(),
            }),
            Some(e),
        ),
    };
    let outputs = run
        .out
        .written()
        .iter()
        .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .collect();
    let manifest = Manifest {
        version: qtransport::VERSION,
        cli_version: env!("CARGO_PKG_VERSION"),
        config_sha256: config_hash(&run.config),
        completed_stages: timings.iter().map(|t| t.stage).collect(),
        timings,
        failure,
        fluence_matched_horizon: horizon,
        checks: run.checks.clone(),
        outputs,
    };
    let config = run.config.clone();
    run.out.json("manifest.json", &manifest, &config)?;
    match error {
        Some(e) => Err(e),
        None => Ok(()),
    }
}
