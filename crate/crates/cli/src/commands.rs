use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use rayon::prelude::*;
use spinterface::dynamics::{ExecOptions, Execution, Executor, PulseModel};
use spinterface::fitting::{
    fit_damped_cosine, fit_exponential, fit_lorentzian_sum, fit_power_law, ExpKind, FitModel, FitResult,
};
use spinterface::io::{columns_to_csv, parse_csv, Metadata};
use spinterface::seqlang::parse_str;
use spinterface::spectra::{
    cw_esr_spectrum, odmr_map, zeeman_pl_spectrum, LineKind, LineShape, OdmrSettings, Orientation,
};
use spinterface::spin::{build_hamiltonian, eigensystem, transitions_from, FieldPoint, MU_B_OVER_H};

use crate::config::Config;
use crate::{svg, CliError};

/// Files produced by a subcommand, plus extra manifest sections and a console summary.
#[derive(Default)]
pub struct Report {
    pub files: Vec<(String, String)>,
    pub manifest: Vec<(String, Vec<String>)>,
    pub summary: String,
}

impl Report {
    fn file(&mut self, name: impl Into<String>, contents: String) {
        self.files.push((name.into(), contents));
    }
}

pub fn grid(lo: f64, hi: f64, n: usize, what: &str) -> Result<Vec<f64>, CliError> {
    if n < 2 || !(lo.is_finite() && hi.is_finite()) || hi <= lo {
        return Err(CliError::Domain(format!("{what} grid needs min < max and at least 2 steps")));
    }
    Ok((0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect())
}

pub fn parse_direction(text: &str) -> Result<Vector3<f64>, CliError> {
    let parts: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Config(format!("direction '{text}' must be three comma-separated numbers")))?;
    let [x, y, z]: [f64; 3] =
        parts.try_into().map_err(|_| CliError::Config(format!("direction '{text}' must have three components")))?;
    let v = Vector3::new(x, y, z);
    if !(v.norm() > 0.0 && v.norm().is_finite()) {
        return Err(CliError::Config(format!("direction '{text}' has zero length")));
    }
    Ok(v.normalize())
}

/// A unit drive direction perpendicular to `axis`.
fn transverse(axis: &Vector3<f64>) -> Vector3<f64> {
    let helper = if axis.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    (helper - axis * axis.dot(&helper)).normalize()
}

fn domain(e: spinterface::Error) -> CliError {
    CliError::from(e)
}

pub fn levels(config: &Config, field_mt: f64, axis: &str) -> Result<Report, CliError> {
    let dir = parse_direction(axis)?;
    let field = FieldPoint::new(dir * field_mt * 1e-3, transverse(&dir)).map_err(domain)?;
    let eig = eigensystem(&build_hamiltonian(&config.sys, &field)).map_err(domain)?;
    let drives = [Vector3::x(), Vector3::y(), Vector3::z()];
    let table = transitions_from(config.sys.spin(), &eig, &drives, config.temperature_k).map_err(domain)?;

    let meta = Metadata::new()
        .with("kind", "levels")
        .with("d_ghz", config.sys.d())
        .with("e_ghz", config.sys.e())
        .with("g", config.sys.g())
        .with("field_mt", field_mt)
        .with("axis", format!("{} {} {}", dir.x, dir.y, dir.z));
    let index: Vec<f64> = (0..eig.energies.len()).map(|i| i as f64).collect();
    let mut report = Report::default();
    report.file("levels.csv", columns_to_csv(&meta, &["level", "energy_ghz"], &[&index, &eig.energies]));

    let col = |f: fn(&spinterface::spin::Transition) -> f64| table.iter().map(f).collect::<Vec<f64>>();
    let (lo, up, freq, inten, pop) = (
        col(|t| t.lower as f64),
        col(|t| t.upper as f64),
        col(|t| t.frequency),
        col(|t| t.intensity),
        col(|t| t.population_weight),
    );
    let tmeta = meta.with("kind", "transitions").with("temperature_k", config.temperature_k);
    report.file(
        "transitions.csv",
        columns_to_csv(
            &tmeta,
            &["lower", "upper", "frequency_ghz", "intensity", "population_weight"],
            &[&lo, &up, &freq, &inten, &pop],
        ),
    );
    let _ = writeln!(report.summary, "levels (GHz): {:?}", eig.energies);
    for t in &table {
        let _ = writeln!(report.summary, "  {} -> {}: {:.6} GHz, intensity {:.4}", t.lower, t.upper, t.frequency, t.intensity);
    }
    Ok(report)
}

pub struct OdmrArgs {
    pub fields: Vec<f64>,
    pub freqs: Vec<f64>,
    pub linewidth_mhz: f64,
    pub svg: bool,
}

pub fn odmr(config: &Config, a: &OdmrArgs) -> Result<Report, CliError> {
    let line = LineShape::lorentzian(a.linewidth_mhz * 1e-3).map_err(domain)?;
    let map = odmr_map(&config.sys, &a.fields, &a.freqs, &OdmrSettings::new(line, config.temperature_k)).map_err(domain)?;
    let mut report = Report::default();
    report.file("odmr.csv", map.to_csv());
    if a.svg {
        report.file("odmr.svg", svg::heatmap("ODMR contrast", "frequency (GHz)", "field (mT)", &map.freq_axis, &map.field_axis, &map.contrast));
    }
    let ridges = map.ridges(2);
    let _ = writeln!(
        report.summary,
        "ODMR map: {} fields x {} frequencies; ridges at {} mT: {:?} GHz",
        map.field_axis.len(),
        map.freq_axis.len(),
        map.field_axis[map.field_axis.len() - 1],
        ridges[ridges.len() - 1]
    );
    Ok(report)
}

pub struct EsrArgs {
    pub freq_ghz: f64,
    pub fields: Vec<f64>,
    pub linewidth_mt: f64,
    pub lorentzian: bool,
    pub derivative: bool,
    pub powder: usize,
    pub direction: String,
    pub svg: bool,
}

pub fn esr(config: &Config, a: &EsrArgs) -> Result<Report, CliError> {
    let kind = if a.lorentzian { LineKind::Lorentzian } else { LineKind::Gaussian };
    let mut line = LineShape::new(kind, a.linewidth_mt).map_err(domain)?;
    if a.derivative {
        line = line.derivative();
    }
    let orientation =
        if a.powder > 0 { Orientation::Powder(a.powder) } else { Orientation::Single(parse_direction(&a.direction)?) };
    let spec = cw_esr_spectrum(&config.sys, a.freq_ghz, &a.fields, &line, config.temperature_k, &orientation)
        .map_err(domain)?;
    let mut report = Report::default();
    report.file("esr.csv", spec.to_csv());
    if a.svg {
        report.file("esr.svg", svg::line_plot("cw-ESR", "field (mT)", "signal", spec.axis(), &[spec.values()]));
    }
    let peak = spec.axis()[spec.argmax()];
    let _ = writeln!(report.summary, "cw-ESR at {} GHz: strongest point at {peak} mT", a.freq_ghz);
    Ok(report)
}

pub struct ZeemanArgs {
    pub field_t: f64,
    pub wavelengths: Vec<f64>,
    pub linewidth_ghz: f64,
    pub svg: bool,
}

pub fn zeeman_pl(config: &Config, a: &ZeemanArgs) -> Result<Report, CliError> {
    let line = LineShape::lorentzian(a.linewidth_ghz).map_err(domain)?;
    let pl = zeeman_pl_spectrum(&config.sys, &config.optical, a.field_t, &a.wavelengths, &line).map_err(domain)?;
    let mut report = Report::default();
    report.file("zeeman_pl.csv", pl.at_field.to_csv());
    report.file("zeeman_pl_differential.csv", pl.differential.to_csv());
    if a.svg {
        report.file(
            "zeeman_pl.svg",
            svg::line_plot(
                &format!("PL at {} T and difference from 0 T", a.field_t),
                "wavelength (nm)",
                "PL",
                pl.at_field.axis(),
                &[pl.at_field.values(), pl.differential.values()],
            ),
        );
    }
    if let Some(w) = pl.at_field.metadata.get("warning") {
        let _ = writeln!(report.summary, "warning: {w}");
    }
    let _ = writeln!(report.summary, "Zeeman PL at {} T over {} wavelengths", a.field_t, a.wavelengths.len());
    Ok(report)
}

fn thread_pool() -> Result<rayon::ThreadPool, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("SPINTERFACE_THREADS") {
        let n = v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::Config(format!("SPINTERFACE_THREADS must be a positive integer, got '{v}'")))?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| CliError::Domain(format!("cannot start worker threads: {e}")))
}

pub struct RunArgs {
    pub sequence: PathBuf,
    pub record_pl: bool,
    pub svg: bool,
}

pub fn run(config: &Config, a: &RunArgs) -> Result<Report, CliError> {
    let display = a.sequence.display().to_string();
    let text = std::fs::read_to_string(&a.sequence)
        .map_err(|e| CliError::Config(format!("cannot read sequence {display}: {e}")))?;
    let seq = parse_str(&text).map_err(|e| CliError::Sequence(e.with_file(&display)))?;
    let model = config.pump_model()?;
    let params = config.coherent_params()?;
    let pulse_model = config.pulse_model;
    let options = ExecOptions { angle_pulses: pulse_model, record_pl: a.record_pl };
    let executor = Executor::new(&model, &params, options).map_err(domain)?;
    let points = executor.prepare(&seq).map_err(|e| match e {
        spinterface::Error::Sequence(s) => CliError::Sequence(s.with_file(&display)),
        other => domain(other),
    })?;
    let results = thread_pool()?.install(|| points.par_iter().map(|p| executor.run_point(p)).collect::<Result<Vec<_>, _>>());
    let exec = Execution { points: results.map_err(domain)? };

    let noise_fraction = config.noise_fraction;
    let stem = a.sequence.file_stem().map_or("run".to_string(), |s| s.to_string_lossy().into_owned());
    let file_name = a.sequence.file_name().map_or(display.clone(), |s| s.to_string_lossy().into_owned());
    let base = model
        .metadata()
        .with("kind", "run")
        .with("sequence", &file_name)
        .with("rabi_mhz", params.rabi_frequency_mhz)
        .with("detuning_mhz", params.detuning_mhz)
        .with("t2_ns", params.t2_ns)
        .with("pulse_model", if pulse_model == PulseModel::Finite { "finite" } else { "ideal" })
        .with("seed", config.seed);

    let mut report = Report::default();
    let n_readouts = exec.points.iter().map(|p| p.readouts.len()).min().unwrap_or(0);
    for k in 0..n_readouts {
        let mut trace = exec.readout_trace(k).map_err(domain)?;
        trace.metadata = base.clone().with("readout", k);
        if noise_fraction > 0.0 {
            let scale = trace.signal.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            trace = trace.with_noise(noise_fraction * scale, config.seed + k as u64).map_err(domain)?;
            trace.metadata.set("noise_fraction", noise_fraction);
        }
        if a.svg {
            report.file(
                format!("{stem}_readout{k}.svg"),
                svg::line_plot(&format!("{file_name} readout {k}"), &trace.x_label, "PL (photons)", &trace.time, &[&trace.signal]),
            );
        }
        report.file(format!("{stem}_readout{k}.csv"), trace.to_csv());
    }
    if a.record_pl {
        for (i, p) in exec.points.iter().enumerate() {
            for (j, t) in p.pl_traces.iter().enumerate() {
                let mut t = t.clone();
                t.metadata = base.clone().with("kind", "run_pl").with("point", i).with("window", j);
                report.file(format!("{stem}_pl_point{i}_window{j}.csv"), t.to_csv());
            }
        }
    }

    let grid: Vec<String> = exec
        .points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let vals: Vec<String> = p.values.iter().map(|(n, v)| format!("{n}={v}")).collect();
            format!("point{i}={}", vals.join(" "))
        })
        .collect();
    report.manifest.push(("sweep".into(), grid));
    let physical = exec.report();
    report.manifest.push((
        "physicality".into(),
        vec![
            format!("checks={}", physical.checks),
            format!("max_trace_error={:e}", physical.max_trace_error),
            format!("min_eigenvalue={:e}", physical.min_eigenvalue),
        ],
    ));
    let _ = writeln!(
        report.summary,
        "{display}: {} sweep point(s), {n_readouts} readout(s) per point, {} file(s)",
        exec.points.len(),
        report.files.len()
    );
    if n_readouts == 0 && !a.record_pl {
        let _ = writeln!(report.summary, "note: the sequence has no measurement; nothing to write");
    }
    Ok(report)
}

pub struct FitArgs {
    pub data: PathBuf,
    pub model: String,
    pub x: Option<String>,
    pub y: Option<String>,
}

pub fn fit(a: &FitArgs) -> Result<Report, CliError> {
    let model = FitModel::from_tag(&a.model).ok_or_else(|| {
        CliError::Config(format!(
            "unknown model '{}'; expected exp_decay, exp_recovery, lorentzian_sum(k), damped_cosine or power_law",
            a.model
        ))
    })?;
    let display = a.data.display().to_string();
    let text =
        std::fs::read_to_string(&a.data).map_err(|e| CliError::Config(format!("cannot read data {display}: {e}")))?;
    let table = parse_csv(&text).map_err(|e| CliError::Config(format!("{display}: {e}")))?;
    let pick = |name: &Option<String>, default: usize| -> Result<&[f64], CliError> {
        match name {
            Some(n) => table.column(n).ok_or_else(|| CliError::Config(format!("{display}: no column '{n}'"))),
            None => table
                .columns
                .get(default)
                .map(Vec::as_slice)
                .ok_or_else(|| CliError::Config(format!("{display}: needs at least two columns"))),
        }
    };
    let (x, y) = (pick(&a.x, 0)?, pick(&a.y, 1)?);
    let result: FitResult = match model {
        FitModel::ExpDecay => fit_exponential(x, y, ExpKind::Decay),
        FitModel::ExpRecovery => fit_exponential(x, y, ExpKind::Recovery),
        FitModel::LorentzianSum(k) => fit_lorentzian_sum(x, y, k),
        FitModel::DampedCosine => fit_damped_cosine(x, y),
        FitModel::PowerLaw => fit_power_law(x, y),
    }
    .map_err(domain)?;
    let mut report = Report::default();
    let text = result.to_report();
    report.summary = text.clone();
    if !result.converged {
        report.summary.push_str("warning: the fit did not converge\n");
    }
    report.file("fit_report.txt", text);
    report.file("fit_residuals.csv", result.residuals_csv());
    report.manifest.push(("input".into(), vec![format!("data={display}"), format!("model={}", model.tag())]));
    Ok(report)
}

/// Writes the report's files and a manifest into `dir`; returns the manifest path.
pub fn emit(
    dir: &Path,
    subcommand: &str,
    config: Option<&Config>,
    report: &Report,
    wall_time_s: f64,
) -> Result<PathBuf, CliError> {
    let io = |e: std::io::Error, p: &Path| CliError::Config(format!("cannot write {}: {e}", p.display()));
    std::fs::create_dir_all(dir).map_err(|e| io(e, dir))?;
    for (name, contents) in &report.files {
        let path = dir.join(name);
        std::fs::write(&path, contents).map_err(|e| io(e, &path))?;
    }
    let mut m = String::new();
    let _ = writeln!(m, "subcommand={subcommand}");
    let _ = writeln!(m, "wall_time_s={wall_time_s:.6}");
    m.push_str("[outputs]\n");
    for (name, _) in &report.files {
        let _ = writeln!(m, "{name}");
    }
    m.push_str("[config]\n");
    if let Some(c) = config {
        for (k, v) in c.snapshot() {
            let _ = writeln!(m, "{k}={v}");
        }
    }
    for (section, lines) in &report.manifest {
        let _ = writeln!(m, "[{section}]");
        for l in lines {
            let _ = writeln!(m, "{l}");
        }
    }
    let path = dir.join(format!("{subcommand}_manifest.txt"));
    std::fs::write(&path, m).map_err(|e| io(e, &path))?;
    Ok(path)
}

/// Zeeman shift per unit field of an axial `g`, for default grid choices.
pub fn zeeman_ghz_per_t(g: f64) -> f64 {
    g * MU_B_OVER_H
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transverse_is_perpendicular() {
        for v in [Vector3::x(), Vector3::z(), Vector3::new(1.0, 1.0, 1.0).normalize()] {
            let t = transverse(&v);
            assert!(t.dot(&v).abs() < 1e-12);
            assert!((t.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn directions_parse_and_normalize() {
        let v = parse_direction("0, 0, 2").unwrap();
        assert_eq!(v, Vector3::z());
        assert!(parse_direction("1,2").is_err());
        assert!(parse_direction("0,0,0").is_err());
        assert!(parse_direction("a,b,c").is_err());
    }

    #[test]
    fn grids_reject_bad_ranges() {
        assert_eq!(grid(0.0, 1.0, 3, "x").unwrap(), vec![0.0, 0.5, 1.0]);
        assert!(grid(1.0, 0.0, 3, "x").is_err());
        assert!(grid(0.0, 1.0, 1, "x").is_err());
    }
}
