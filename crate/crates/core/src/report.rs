//! Batch pipeline over many countries and the table-shaped outputs.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::altmodels::{
    feller_long_run, lognormal_long_run, lognormal_regime, shift_series, FellerLongRun,
    LognormalRegime,
};
use crate::error::{Error, ErrorClass, Result};
use crate::estimation::{
    fit_feller, fit_lognormal, fit_ou, propagate_with, DeltaMethod, DerivedQuantities, FellerFit,
    LognormalFit, OuFit,
};
use crate::grid::TimeGrid;
use crate::ou::{
    classify_regime, dimensionless, discount_rate_curve, discount_rate_envelope, neg_prob,
    DiscountCurve, Regime, DEFAULT_R0,
};
use crate::rates::{build_real_rates, negative_stats, NegativeRateStats, RealRateSeries, DEFAULT_WINDOW_YEARS};
use crate::timeseries::{load_csv, step_durations};

pub const SCHEMA_VERSION: u32 = 1;

/// Full-precision rendering used in every CSV (17 significant digits).
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub label: String,
    pub yields_path: PathBuf,
    pub cpi_path: PathBuf,
}

/// Reads a manifest: a JSON array of entries, a single entry, or one entry
/// per line. Relative paths are resolved against the manifest's directory.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestEntry>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new(""));
    let mut entries = parse_manifest(&text, &path.display().to_string())?;
    for e in &mut entries {
        if e.yields_path.is_relative() {
            e.yields_path = base.join(&e.yields_path);
        }
        if e.cpi_path.is_relative() {
            e.cpi_path = base.join(&e.cpi_path);
        }
    }
    Ok(entries)
}

pub fn parse_manifest(text: &str, context: &str) -> Result<Vec<ManifestEntry>> {
    let trimmed = text.trim_start();
    if trimmed.starts_with('[') {
        return Ok(serde_json::from_str(text)?);
    }
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let entry = serde_json::from_str(line).map_err(|e| Error::Parse {
            context: context.to_string(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(entry);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportOptions {
    pub window_years: u32,
    pub r0: f64,
    /// Discount-rate curves are computed when a grid is given.
    pub grid: Option<TimeGrid>,
    pub envelope: bool,
    /// Also fit the shifted square-root and lognormal models.
    pub alt_models: bool,
    pub delta_method: DeltaMethod,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            window_years: DEFAULT_WINDOW_YEARS,
            r0: DEFAULT_R0,
            grid: Some(TimeGrid::default()),
            envelope: true,
            alt_models: true,
            delta_method: DeltaMethod::Independent,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FellerSection {
    pub fit: FellerFit,
    pub long_run: FellerLongRun,
    pub nudged_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LognormalSection {
    pub fit: LognormalFit,
    pub regime: Option<LognormalRegime>,
    /// y^L∞, only in the exponential regime.
    pub long_run_shifted: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountryReport {
    pub label: String,
    pub negative_stats: NegativeRateStats,
    pub filled_gaps: usize,
    pub truncated_windows: usize,
    pub ou_fit: OuFit,
    pub derived: DerivedQuantities,
    pub neg_prob: f64,
    pub regime: Regime,
    pub feller: Option<FellerSection>,
    pub lognormal: Option<LognormalSection>,
    pub curve: Option<DiscountCurve>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountryFailure {
    pub label: String,
    pub class: String,
    pub message: String,
}

impl CountryFailure {
    fn new(label: &str, err: &Error) -> Self {
        let class = match err.class() {
            ErrorClass::Data => "data",
            ErrorClass::Numerical => "numerical",
            ErrorClass::Usage => "usage",
        };
        Self {
            label: label.to_string(),
            class: class.to_string(),
            message: err.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Group {
    All,
    Stable,
    Unstable,
}

impl Group {
    pub fn name(self) -> &'static str {
        match self {
            Group::All => "all",
            Group::Stable => "stable",
            Group::Unstable => "unstable",
        }
    }
}

/// Cross-country means; `None` for an empty group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub group: Group,
    pub n_countries: usize,
    pub mean_level: Option<f64>,
    pub mean_reversion: Option<f64>,
    pub mean_noise_sq: Option<f64>,
    pub mean_long_run_rate: Option<f64>,
    /// Sample standard deviation (n − 1) of the per-country r∞.
    pub dispersion: Option<f64>,
    /// Mean of the per-country r∞ standard errors.
    pub mean_long_run_se: Option<f64>,
    pub mean_scaled_mean: Option<f64>,
    pub mean_scaled_noise: Option<f64>,
    pub mean_fraction_negative: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub countries: Vec<CountryReport>,
    pub failures: Vec<CountryFailure>,
    pub aggregates: Vec<Aggregate>,
}

/// Everything after the real-rate series is built: fit, derived values,
/// classification, optional alternative models and curves.
pub fn analyze_country(label: &str, real: &RealRateSeries, opts: &ReportOptions) -> Result<CountryReport> {
    let stats = negative_stats(real)?;
    let fit = fit_ou(real)?;
    let derived = propagate_with(&fit, opts.delta_method);
    let d = dimensionless(&fit.params);
    let mut notes = Vec::new();
    if fit.n_obs < crate::estimation::WARN_OBSERVATIONS {
        notes.push(format!("only {} observations; standard errors are rough", fit.n_obs));
    }

    let (feller, lognormal) = if opts.alt_models {
        alt_sections(real, &mut notes)
    } else {
        (None, None)
    };

    let curve = match &opts.grid {
        Some(grid) if opts.envelope => Some(discount_rate_envelope(&fit, opts.r0, grid)?),
        Some(grid) => Some(discount_rate_curve(&fit.params, opts.r0, grid)?),
        None => None,
    };

    Ok(CountryReport {
        label: label.to_string(),
        negative_stats: stats,
        filled_gaps: real.series.filled_gaps(),
        truncated_windows: real.truncated_windows.len(),
        neg_prob: neg_prob(&d),
        regime: classify_regime(&d),
        ou_fit: fit,
        derived,
        feller,
        lognormal,
        curve,
        notes,
    })
}

fn alt_sections(
    real: &RealRateSeries,
    notes: &mut Vec<String>,
) -> (Option<FellerSection>, Option<LognormalSection>) {
    let shifted = match shifted_values(real) {
        Ok(s) => s,
        Err(e) => {
            notes.push(format!("shifted models skipped: {e}"));
            return (None, None);
        }
    };
    if shifted.nudged > 0 {
        notes.push(format!(
            "{} shifted point(s) at the series minimum raised to {:e}",
            shifted.nudged,
            crate::altmodels::SHIFT_NUDGE
        ));
    }

    let feller = match feller_from_shifted(&shifted) {
        Ok(section) => {
            if !section.fit.params.satisfies_feller_condition() {
                notes.push("square-root fit violates 2αm ≥ k²".into());
            }
            Some(section)
        }
        Err(e) => {
            notes.push(format!("square-root model failed: {e}"));
            None
        }
    };
    let lognormal = match lognormal_from_shifted(&shifted) {
        Ok(section) => Some(section),
        Err(e) => {
            notes.push(format!("lognormal fit failed: {e}"));
            None
        }
    };
    (feller, lognormal)
}

struct ShiftedValues {
    y: Vec<f64>,
    deltas: Vec<f64>,
    r_min: f64,
    nudged: usize,
}

fn shifted_values(real: &RealRateSeries) -> Result<ShiftedValues> {
    let shifted = shift_series(real)?;
    Ok(ShiftedValues {
        y: shifted.y.values()?,
        deltas: step_durations(&shifted.y)?.deltas,
        r_min: shifted.r_min,
        nudged: shifted.nudged.len(),
    })
}

fn feller_from_shifted(s: &ShiftedValues) -> Result<FellerSection> {
    let fit = fit_feller(&s.y, &s.deltas)?.with_shift(s.r_min);
    let long_run = feller_long_run(&fit)?;
    Ok(FellerSection {
        fit,
        long_run,
        nudged_points: s.nudged,
    })
}

fn lognormal_from_shifted(s: &ShiftedValues) -> Result<LognormalSection> {
    let fit = fit_lognormal(&s.y, &s.deltas)?.with_shift(s.r_min);
    let regime = lognormal_regime(fit.level, fit.noise_sq).ok();
    let long_run_shifted = match regime {
        Some(LognormalRegime::Exponential) => lognormal_long_run(fit.level, fit.noise_sq).ok(),
        _ => None,
    };
    Ok(LognormalSection {
        fit,
        regime,
        long_run_shifted,
    })
}

/// Shifted square-root fit on y = r − r_min and its long-run rate.
pub fn feller_section(real: &RealRateSeries) -> Result<FellerSection> {
    feller_from_shifted(&shifted_values(real)?)
}

/// Shifted lognormal fit on y = r − r_min, its regime and, when the
/// regime is exponential, y^L∞.
pub fn lognormal_section(real: &RealRateSeries) -> Result<LognormalSection> {
    lognormal_from_shifted(&shifted_values(real)?)
}

fn run_entry(entry: &ManifestEntry, opts: &ReportOptions) -> Result<CountryReport> {
    let yields = load_csv(&entry.yields_path, &format!("{} yields", entry.label))?;
    let cpi = load_csv(&entry.cpi_path, &format!("{} cpi", entry.label))?;
    let real = build_real_rates(&yields, &cpi, opts.window_years)?;
    analyze_country(&entry.label, &real, opts)
}

/// Runs every manifest entry concurrently. A failing country is recorded
/// and does not stop the others.
pub fn build_report(entries: &[ManifestEntry], opts: &ReportOptions) -> Report {
    let outcomes: Vec<Result<CountryReport>> = entries.par_iter().map(|e| run_entry(e, opts)).collect();
    let mut countries = Vec::new();
    let mut failures = Vec::new();
    for (entry, outcome) in entries.iter().zip(outcomes) {
        match outcome {
            Ok(r) => countries.push(r),
            Err(e) => failures.push(CountryFailure::new(&entry.label, &e)),
        }
    }
    assemble(countries, failures)
}

/// Sorts by r∞ (ties by label) and computes the group aggregates.
pub fn assemble(mut countries: Vec<CountryReport>, failures: Vec<CountryFailure>) -> Report {
    countries.sort_by(|a, b| {
        a.derived
            .long_run_rate
            .value
            .total_cmp(&b.derived.long_run_rate.value)
            .then_with(|| a.label.cmp(&b.label))
    });
    let aggregates = [Group::All, Group::Stable, Group::Unstable]
        .into_iter()
        .map(|g| aggregate(&countries, g))
        .collect();
    Report {
        countries,
        failures,
        aggregates,
    }
}

fn mean(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        None
    } else {
        Some(xs.iter().sum::<f64>() / xs.len() as f64)
    }
}

pub fn aggregate(countries: &[CountryReport], group: Group) -> Aggregate {
    let members: Vec<&CountryReport> = countries
        .iter()
        .filter(|c| {
            let r = c.derived.long_run_rate.value;
            match group {
                Group::All => true,
                Group::Stable => r > 0.0,
                Group::Unstable => r <= 0.0,
            }
        })
        .collect();
    let pick = |f: &dyn Fn(&CountryReport) -> f64| -> Vec<f64> { members.iter().map(|c| f(c)).collect() };
    let r_inf = pick(&|c| c.derived.long_run_rate.value);
    let dispersion = if r_inf.len() >= 2 {
        let m = mean(&r_inf).unwrap();
        let ss: f64 = r_inf.iter().map(|r| (r - m) * (r - m)).sum();
        Some((ss / (r_inf.len() - 1) as f64).sqrt())
    } else {
        None
    };
    Aggregate {
        group,
        n_countries: members.len(),
        mean_level: mean(&pick(&|c| c.ou_fit.params.level)),
        mean_reversion: mean(&pick(&|c| c.ou_fit.params.reversion)),
        mean_noise_sq: mean(&pick(&|c| c.ou_fit.params.noise_sq)),
        mean_long_run_rate: mean(&r_inf),
        dispersion,
        mean_long_run_se: mean(&pick(&|c| c.derived.long_run_rate.se)),
        mean_scaled_mean: mean(&pick(&|c| c.derived.scaled_mean.value)),
        mean_scaled_noise: mean(&pick(&|c| c.derived.scaled_noise.value)),
        mean_fraction_negative: mean(&pick(&|c| c.negative_stats.fraction_negative)),
    }
}

/// Label reduced to a portable file stem.
pub fn file_stem(label: &str) -> String {
    let s: String = label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect();
    if s.is_empty() {
        "unnamed".into()
    } else {
        s
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

fn regime_name(r: &Regime) -> String {
    format!("{:?}", r.label)
}

fn sign_name(r: &Regime) -> &'static str {
    match r.r_inf_sign {
        crate::ou::Sign::Positive => "positive",
        crate::ou::Sign::Zero => "zero",
        crate::ou::Sign::Negative => "negative",
    }
}

fn lognormal_regime_name(r: Option<LognormalRegime>) -> &'static str {
    match r {
        Some(LognormalRegime::Constant) => "constant",
        Some(LognormalRegime::Exponential) => "exponential",
        Some(LognormalRegime::PowerLaw) => "power_law",
        None => "",
    }
}

fn table_writer(buf: &mut Vec<u8>) -> csv::Writer<&mut Vec<u8>> {
    writeln!(buf, "# schema_version={SCHEMA_VERSION}").expect("write to memory");
    csv::Writer::from_writer(buf)
}

pub fn table2_csv(report: &Report) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    let mut w = table_writer(&mut buf);
    w.write_record(["label", "fraction_negative", "years_negative", "span_years", "n_obs", "filled_gaps"])?;
    for c in &report.countries {
        let s = &c.negative_stats;
        w.write_record([
            c.label.clone(),
            fmt_num(s.fraction_negative),
            fmt_num(s.years_negative),
            fmt_num(s.span_years),
            c.ou_fit.n_obs.to_string(),
            c.filled_gaps.to_string(),
        ])?;
    }
    drop(w);
    Ok(buf)
}

pub fn table3_csv(report: &Report) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    let mut w = table_writer(&mut buf);
    w.write_record([
        "label", "m", "se_m", "alpha", "se_alpha", "k2", "se_k2", "r_inf", "se_r_inf", "n_obs", "loglik",
        "method", "flags",
    ])?;
    for c in &report.countries {
        let f = &c.ou_fit;
        let flags: Vec<String> = f
            .flags
            .iter()
            .map(|fl| serde_json::to_value(fl).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default())
            .collect();
        let method = serde_json::to_value(f.method)?.as_str().unwrap_or_default().to_string();
        w.write_record([
            c.label.clone(),
            fmt_num(f.params.level),
            fmt_num(f.se_level),
            fmt_num(f.params.reversion),
            fmt_num(f.se_reversion),
            fmt_num(f.params.noise_sq),
            fmt_num(f.se_noise_sq),
            fmt_num(c.derived.long_run_rate.value),
            fmt_num(c.derived.long_run_rate.se),
            f.n_obs.to_string(),
            fmt_num(f.loglik),
            method,
            flags.join(";"),
        ])?;
    }
    drop(w);
    Ok(buf)
}

pub fn aggregates_csv(report: &Report) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    let mut w = table_writer(&mut buf);
    w.write_record([
        "group", "n", "mean_m", "mean_alpha", "mean_k2", "mean_r_inf", "sd_r_inf", "mean_se_r_inf",
        "mean_mu", "mean_kappa", "mean_fraction_negative",
    ])?;
    for a in &report.aggregates {
        w.write_record([
            a.group.name().to_string(),
            a.n_countries.to_string(),
            opt(a.mean_level),
            opt(a.mean_reversion),
            opt(a.mean_noise_sq),
            opt(a.mean_long_run_rate),
            opt(a.dispersion),
            opt(a.mean_long_run_se),
            opt(a.mean_scaled_mean),
            opt(a.mean_scaled_noise),
            opt(a.mean_fraction_negative),
        ])?;
    }
    drop(w);
    Ok(buf)
}

pub fn table4_csv(report: &Report) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    let mut w = table_writer(&mut buf);
    w.write_record(["label", "mu", "se_mu", "kappa", "se_kappa", "neg_prob", "regime", "r_inf_sign"])?;
    for c in &report.countries {
        let d = &c.derived;
        w.write_record([
            c.label.clone(),
            fmt_num(d.scaled_mean.value),
            fmt_num(d.scaled_mean.se),
            fmt_num(d.scaled_noise.value),
            fmt_num(d.scaled_noise.se),
            fmt_num(c.neg_prob),
            regime_name(&c.regime),
            sign_name(&c.regime).to_string(),
        ])?;
    }
    drop(w);
    Ok(buf)
}

pub fn table5_csv(report: &Report) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    let mut w = table_writer(&mut buf);
    w.write_record([
        "label", "model", "m", "se_m", "alpha", "se_alpha", "k2", "se_k2", "r_min", "r_inf", "se_r_inf",
        "asymptotic",
    ])?;
    for c in &report.countries {
        let f = &c.ou_fit;
        w.write_record([
            c.label.clone(),
            "ou".into(),
            fmt_num(f.params.level),
            fmt_num(f.se_level),
            fmt_num(f.params.reversion),
            fmt_num(f.se_reversion),
            fmt_num(f.params.noise_sq),
            fmt_num(f.se_noise_sq),
            String::new(),
            fmt_num(c.derived.long_run_rate.value),
            fmt_num(c.derived.long_run_rate.se),
            "exponential".into(),
        ])?;
        if let Some(s) = &c.feller {
            let p = &s.fit;
            w.write_record([
                c.label.clone(),
                "feller".into(),
                fmt_num(p.params.level),
                fmt_num(p.se_level),
                fmt_num(p.params.reversion),
                fmt_num(p.se_reversion),
                fmt_num(p.params.noise_sq),
                fmt_num(p.se_noise_sq),
                fmt_num(p.r_min),
                fmt_num(s.long_run.rate.value),
                fmt_num(s.long_run.rate.se),
                "exponential".into(),
            ])?;
        }
        if let Some(s) = &c.lognormal {
            let p = &s.fit;
            let r_inf = s.long_run_shifted.map(|y| y + p.r_min);
            w.write_record([
                c.label.clone(),
                "lognormal".into(),
                fmt_num(p.level),
                fmt_num(p.se_level),
                String::new(),
                String::new(),
                fmt_num(p.noise_sq),
                fmt_num(p.se_noise_sq),
                fmt_num(p.r_min),
                opt(r_inf),
                String::new(),
                lognormal_regime_name(s.regime).into(),
            ])?;
        }
    }
    drop(w);
    Ok(buf)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::write(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmitFormat {
    Json,
    Csv,
    #[default]
    Both,
}

/// Writes the report into `out_dir` and returns the files written, in a
/// fixed order. Output bytes depend only on the report.
pub fn emit(report: &Report, format: EmitFormat, out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| Error::write(out_dir, e))?;
    let mut written = Vec::new();
    let mut put = |name: String, bytes: Vec<u8>| -> Result<()> {
        let path = out_dir.join(name);
        write_file(&path, &bytes)?;
        written.push(path);
        Ok(())
    };
    if matches!(format, EmitFormat::Json | EmitFormat::Both) {
        for c in &report.countries {
            let mut bytes = serde_json::to_vec_pretty(c)?;
            bytes.push(b'\n');
            put(format!("{}.json", file_stem(&c.label)), bytes)?;
        }
        if !report.failures.is_empty() {
            let mut bytes = serde_json::to_vec_pretty(&report.failures)?;
            bytes.push(b'\n');
            put("failures.json".into(), bytes)?;
        }
    }
    if matches!(format, EmitFormat::Csv | EmitFormat::Both) {
        put("table2_negative_rates.csv".into(), table2_csv(report)?)?;
        put("table3_ou_fits.csv".into(), table3_csv(report)?)?;
        put("table3_aggregates.csv".into(), aggregates_csv(report)?)?;
        put("table4_dimensionless.csv".into(), table4_csv(report)?)?;
        put("table5_models.csv".into(), table5_csv(report)?)?;
    }
    for c in &report.countries {
        if let Some(curve) = &c.curve {
            let mut bytes = Vec::new();
            curve.write_csv(&mut bytes)?;
            put(format!("{}_discount_curve.csv", file_stem(&c.label)), bytes)?;
        }
    }
    Ok(written)
}

fn pct(x: f64) -> String {
    format!("{:7.2}%", 100.0 * x)
}

/// Rounded, human-oriented rendering of the tables.
pub fn render_pretty(report: &Report) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "Negative real rates");
    let _ = writeln!(s, "{:<16} {:>9} {:>9}", "country", "fraction", "years");
    for c in &report.countries {
        let n = &c.negative_stats;
        let _ = writeln!(s, "{:<16} {:>9.2} {:>9.1}", c.label, n.fraction_negative, n.years_negative);
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "Ornstein-Uhlenbeck fits (sorted by long-run rate)");
    let _ = writeln!(
        s,
        "{:<16} {:>8} {:>8} {:>8} {:>8} {:>10} {:>10} {:>8} {:>8}",
        "country", "m", "±", "alpha", "±", "k2 (e-5)", "±", "r_inf", "±"
    );
    for c in &report.countries {
        let f = &c.ou_fit;
        let d = &c.derived;
        let _ = writeln!(
            s,
            "{:<16} {:>8.4} {:>8.4} {:>8.4} {:>8.4} {:>10.2} {:>10.2} {:>8.4} {:>8.4}",
            c.label,
            f.params.level,
            f.se_level,
            f.params.reversion,
            f.se_reversion,
            f.params.noise_sq * 1e5,
            f.se_noise_sq * 1e5,
            d.long_run_rate.value,
            d.long_run_rate.se
        );
    }
    for a in &report.aggregates {
        let _ = writeln!(
            s,
            "{:<16} n={:<3} mean r_inf {} sd {} mean se {}",
            a.group.name(),
            a.n_countries,
            a.mean_long_run_rate.map(pct).unwrap_or_else(|| "-".into()),
            a.dispersion.map(pct).unwrap_or_else(|| "-".into()),
            a.mean_long_run_se.map(pct).unwrap_or_else(|| "-".into()),
        );
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "Dimensionless parameters");
    let _ = writeln!(s, "{:<16} {:>7} {:>7} {:>7} {:>7} {:>8} {:>6}", "country", "mu", "±", "kappa", "±", "P(r<0)", "region");
    for c in &report.countries {
        let d = &c.derived;
        let _ = writeln!(
            s,
            "{:<16} {:>7.2} {:>7.2} {:>7.2} {:>7.2} {:>8.3} {:>6}",
            c.label,
            d.scaled_mean.value,
            d.scaled_mean.se,
            d.scaled_noise.value,
            d.scaled_noise.se,
            c.neg_prob,
            regime_name(&c.regime)
        );
    }
    for f in &report.failures {
        let _ = writeln!(s, "\n{} failed ({}): {}", f.label, f.class, f.message);
    }
    for c in &report.countries {
        for n in &c.notes {
            let _ = writeln!(s, "note [{}]: {n}", c.label);
        }
    }
    s
}
