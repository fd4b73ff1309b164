use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;

use realrate::altmodels::{alpha0_sweep, sweep_zero_crossing, write_sweep_csv, ExtOuParams, SweepConvention};
use realrate::estimation::{fit_ou, propagate, FellerParams, OuFit};
use realrate::montecarlo::{
    mc_discount, simulate_ext_ou, simulate_feller, simulate_lognormal, simulate_ou, PathEnsemble, SimConfig,
};
use realrate::ou::{
    classify_regime, dimensionless, discount_rate_curve, discount_rate_envelope, long_run_rate, neg_prob,
    Regime,
};
use realrate::rates::{build_real_rates, cpi_levels_to_rates, negative_stats};
use realrate::report::{
    build_report, emit, feller_section, fmt_num, lognormal_section, load_manifest, render_pretty, EmitFormat,
    ReportOptions,
};
use realrate::timeseries::{fill_gaps, load_csv};
use realrate::verify::{all_passed, verify_suite, write_checks_csv, VerifyConfig};
use realrate::{DerivedQuantities, Dimensionless, Error, OuParams, RealRateSeries, TimeGrid};

use crate::args::{Command, Convention, FitModel, Format, OuSource, SeriesInput, SimModel};
use crate::output::{default_out_dir, Target};

/// Long-run US fit; used by `verify` when no parameters are given.
pub const REFERENCE_PARAMS: OuParams = OuParams {
    level: 0.0319,
    reversion: 0.0603,
    noise_sq: 10.03e-5,
};

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Error::InvalidParameter(msg.into()).into()
}

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Rates { input, out } => {
            let real = input.load()?;
            Target::resolve(out.out.as_deref(), "real_rates.csv")
                .write_with(|w| Ok(real.series.write_csv(w)?))
        }
        Command::Negstats { input, out } => {
            let stats = negative_stats(&input.load()?)?;
            Target::resolve(out.out.as_deref(), "negstats.json").write_json(&stats)
        }
        Command::Fit { input, model, out } => {
            let real = input.load()?;
            match model {
                FitModel::Ou => {
                    let fit = fit_ou(&real)?;
                    Target::resolve(out.out.as_deref(), "fit.json").write_json(&fit)
                }
                FitModel::Feller => {
                    let section = feller_section(&real)?;
                    Target::resolve(out.out.as_deref(), "fit_feller.json").write_json(&section.fit)
                }
                FitModel::Lognormal => {
                    let section = lognormal_section(&real)?;
                    Target::resolve(out.out.as_deref(), "fit_lognormal.json").write_json(&section.fit)
                }
            }
        }
        Command::Discount {
            model,
            r0,
            grid,
            envelope,
            out,
        } => {
            let grid: TimeGrid = grid.parse()?;
            let (params, fit) = model.resolve(None)?;
            let curve = if envelope {
                let fit = fit.ok_or_else(|| usage("--envelope needs --fit with standard errors"))?;
                discount_rate_envelope(&fit, r0, &grid)?
            } else {
                discount_rate_curve(&params, r0, &grid)?
            };
            Target::resolve(out.out.as_deref(), "discount_curve.csv").write_with(|w| Ok(curve.write_csv(w)?))
        }
        Command::Classify { model, out } => {
            let (params, fit) = model.resolve(None)?;
            let summary = Classification::new(params, fit.as_ref());
            Target::resolve(out.out.as_deref(), "classify.json").write_json(&summary)
        }
        Command::Feller { input, out } => {
            let section = feller_section(&input.load()?)?;
            if !section.fit.params.satisfies_feller_condition() {
                eprintln!("warning: fitted parameters violate 2αm ≥ k²");
            }
            Target::resolve(out.out.as_deref(), "feller.json").write_json(&section)
        }
        Command::Lognormal { input, out } => {
            let section = lognormal_section(&input.load()?)?;
            Target::resolve(out.out.as_deref(), "lognormal.json").write_json(&section)
        }
        Command::ExtouSweep {
            model,
            variance,
            ratios,
            convention,
            out,
        } => {
            let (params, _) = model.resolve(None)?;
            let ratios: TimeGrid = ratios.parse()?;
            let grid: Vec<f64> = ratios.points().iter().map(|q| q * params.reversion).collect();
            let convention = match convention {
                Convention::Published => SweepConvention::Published,
                Convention::Consistent => SweepConvention::Consistent,
            };
            let points = alpha0_sweep(&params, variance, &grid, convention)?;
            match sweep_zero_crossing(&points) {
                Some(a0) => eprintln!(
                    "zero crossing at alpha0 = {} (alpha0/alpha = {})",
                    fmt_num(a0),
                    fmt_num(a0 / params.reversion)
                ),
                None => eprintln!("no zero crossing on this grid"),
            }
            Target::resolve(out.out.as_deref(), "extou_sweep.csv").write_with(|w| Ok(write_sweep_csv(&points, w)?))
        }
        Command::Simulate {
            model,
            fit,
            params,
            r0,
            r_min,
            paths,
            horizon,
            dt,
            every,
            discount,
            seed,
            out,
        } => {
            let seed = resolve_seed(seed);
            let cfg = SimConfig::new(paths, horizon, dt, seed, r0)?.recording_interval(every);
            let (ensemble, shift) = simulate_model(model, fit.as_deref(), params.as_deref(), r_min, &cfg)?;
            let target = Target::resolve(out.out.as_deref(), "simulation.csv");
            if discount {
                let est = mc_discount(&ensemble, shift)?;
                target.write_with(|w| {
                    let mut wtr = csv::Writer::from_writer(w);
                    wtr.write_record(["t", "discount", "stderr"])?;
                    for d in est {
                        wtr.write_record([fmt_num(d.t), fmt_num(d.discount), fmt_num(d.stderr)])?;
                    }
                    wtr.flush()?;
                    Ok(())
                })
            } else {
                target.write_with(|w| Ok(ensemble.write_csv(w)?))
            }
        }
        Command::Verify {
            model,
            paths,
            dt,
            r0,
            sigmas,
            seed,
            out,
        } => {
            let seed = resolve_seed(seed);
            let (params, _) = model.resolve(Some(REFERENCE_PARAMS))?;
            let cfg = VerifyConfig {
                n_paths: paths,
                seed,
                dt,
                r0,
                sigmas,
                ..VerifyConfig::default()
            };
            let checks = verify_suite(&params, &cfg)?;
            Target::resolve(out.out.as_deref(), "verify.csv").write_with(|w| Ok(write_checks_csv(&checks, w)?))?;
            let failed = checks.iter().filter(|c| !c.passed).count();
            if !all_passed(&checks) {
                return Err(Error::Numerical(format!("{failed} of {} checks failed", checks.len())).into());
            }
            eprintln!("all {} checks passed", checks.len());
            Ok(())
        }
        Command::Report {
            manifest,
            out,
            format,
            pretty,
            grid,
            r0,
            no_envelope,
            no_alt_models,
            full_covariance,
            window,
        } => {
            let entries = load_manifest(&manifest)?;
            let opts = ReportOptions {
                window_years: window,
                r0,
                grid: Some(grid.parse()?),
                envelope: !no_envelope,
                alt_models: !no_alt_models,
                delta_method: if full_covariance {
                    realrate::estimation::DeltaMethod::FullCovariance
                } else {
                    realrate::estimation::DeltaMethod::Independent
                },
            };
            let report = build_report(&entries, &opts);
            for f in &report.failures {
                eprintln!("{}: {} error: {}", f.label, f.class, f.message);
            }
            if pretty {
                eprint!("{}", render_pretty(&report));
            }
            match out.as_deref() {
                Some("-") => Target::Stdout.write_json(&report)?,
                other => {
                    let dir = other.map(PathBuf::from).unwrap_or_else(default_out_dir);
                    let format = match format {
                        Format::Json => EmitFormat::Json,
                        Format::Csv => EmitFormat::Csv,
                        Format::Both => EmitFormat::Both,
                    };
                    let files = emit(&report, format, &dir)?;
                    eprintln!("wrote {} files to {}", files.len(), dir.display());
                }
            }
            if report.countries.is_empty() && !report.failures.is_empty() {
                bail!(Error::Domain("every country failed".into()));
            }
            Ok(())
        }
    }
}

impl SeriesInput {
    pub fn load(&self) -> Result<RealRateSeries> {
        if let Some(path) = &self.input {
            let ts = fill_gaps(&load_csv(path, &label_of(path))?)?;
            return Ok(RealRateSeries::from_series(ts)?);
        }
        let (Some(yields), Some(cpi)) = (&self.yields, &self.cpi) else {
            return Err(usage("give --input, or both --yields and --cpi"));
        };
        let y = load_csv(yields, &label_of(yields))?;
        let mut c = load_csv(cpi, &label_of(cpi))?;
        if self.cpi_levels {
            c = cpi_levels_to_rates(&fill_gaps(&c)?)?;
        }
        Ok(build_real_rates(&y, &c, self.window)?)
    }
}

fn label_of(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

impl OuSource {
    /// Parameters and, when read from a fit file, the fit itself.
    pub fn resolve(&self, fallback: Option<OuParams>) -> Result<(OuParams, Option<OuFit>)> {
        if let Some(path) = &self.fit {
            let fit = read_fit(path)?;
            fit.params.validate()?;
            return Ok((fit.params, Some(fit)));
        }
        if let Some(values) = &self.params {
            return Ok((ou_params(values)?, None));
        }
        fallback
            .map(|p| (p, None))
            .ok_or_else(|| usage("give --fit or --params m,alpha,k2"))
    }
}

fn read_fit(path: &Path) -> Result<OuFit> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let fit: OuFit = serde_json::from_str(&text)
        .map_err(Error::from)
        .with_context(|| format!("reading OU fit from {}", path.display()))?;
    Ok(fit)
}

fn ou_params(values: &[f64]) -> Result<OuParams> {
    match values {
        [m, a, k2] => Ok(OuParams::new(*m, *a, *k2)?),
        _ => Err(usage(format!("expected 3 parameters m,alpha,k2, got {}", values.len()))),
    }
}

fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let s = rand::random::<u64>();
        eprintln!("seed: {s}");
        s
    })
}

/// Returns the ensemble and the constant shift to add back to the
/// simulated state when discounting.
fn simulate_model(
    model: SimModel,
    fit: Option<&Path>,
    params: Option<&[f64]>,
    r_min: f64,
    cfg: &SimConfig,
) -> Result<(PathEnsemble, f64)> {
    if fit.is_some() && model != SimModel::Ou {
        return Err(usage("--fit only applies to --model ou"));
    }
    let needs = |n: usize| -> Result<&[f64]> {
        match params {
            Some(v) if v.len() == n => Ok(v),
            Some(v) => Err(usage(format!("--model needs {n} parameters, got {}", v.len()))),
            None => Err(usage("--params is required for this model")),
        }
    };
    let y0 = cfg.r0 - r_min;
    match model {
        SimModel::Ou => {
            let p = match fit {
                Some(path) => read_fit(path)?.params,
                None => ou_params(needs(3)?)?,
            };
            Ok((simulate_ou(&p, cfg)?, 0.0))
        }
        SimModel::ExtOu => {
            let v = needs(5)?;
            let p = ExtOuParams::new(v[0], v[1], v[2], v[3], v[4])?;
            Ok((simulate_ext_ou(&p, cfg)?, 0.0))
        }
        SimModel::Feller => {
            let v = needs(3)?;
            let p = FellerParams::new(v[0], v[1], v[2])?;
            Ok((simulate_feller(&p, y0, cfg)?, r_min))
        }
        SimModel::Lognormal => {
            let v = needs(3)?;
            Ok((simulate_lognormal(v[0], v[2], y0, cfg)?, r_min))
        }
    }
}

#[derive(Serialize)]
struct Classification {
    params: OuParams,
    dimensionless: Dimensionless,
    neg_prob: f64,
    long_run_rate: f64,
    regime: Regime,
    /// Present when the input carried standard errors.
    derived: Option<DerivedQuantities>,
}

impl Classification {
    fn new(params: OuParams, fit: Option<&OuFit>) -> Self {
        let d = dimensionless(&params);
        Self {
            params,
            neg_prob: neg_prob(&d),
            long_run_rate: long_run_rate(&params),
            regime: classify_regime(&d),
            dimensionless: d,
            derived: fit.map(propagate),
        }
    }
}

