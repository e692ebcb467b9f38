//! Flat `key = value` configuration with `[section]` headers.
//!
//! Keys before the first header belong to the top level. `#` starts a comment line.
//! Unknown sections or keys, duplicates and unparsable values are errors.

use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use spinterface::dynamics::{CoherentParams, GroundRelaxation, PulseModel, PumpModel};
use spinterface::spectra::OpticalModel;
use spinterface::spin::{SpinSystem, Sublevel};

use crate::CliError;

const KEYS: &[(&str, &[&str])] = &[
    ("", &["seed", "output_dir"]),
    ("spin", &["d_ghz", "e_ghz", "g", "zfs_axis"]),
    (
        "optical",
        &["zpl_nm", "t_opt_us", "inhomogeneous_fwhm_ghz", "homogeneous_fwhm_ghz", "debye_waller", "branching"],
    ),
    (
        "dynamics",
        &[
            "t1_ms",
            "t2_ns",
            "rabi_mhz",
            "detuning_mhz",
            "field_mt",
            "pump_rate_per_s",
            "bright",
            "relaxation",
            "temperature_k",
            "noise_fraction",
            "pulse_model",
        ],
    ),
];

#[derive(Clone, Debug)]
pub struct Config {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub sys: SpinSystem,
    pub optical: OpticalModel,
    pub t1_ms: f64,
    pub t2_ns: f64,
    pub rabi_mhz: f64,
    pub detuning_mhz: f64,
    pub field_mt: f64,
    pub pump_rate_per_s: f64,
    pub bright: Sublevel,
    pub relaxation: GroundRelaxation,
    pub temperature_k: f64,
    /// Gaussian noise added to `run` traces, as a fraction of the largest |signal|.
    pub noise_fraction: f64,
    pub pulse_model: PulseModel,
}

struct Entries {
    items: Vec<(String, String, usize)>,
}

impl Entries {
    fn take(&self, key: &str) -> Option<(&str, usize)> {
        self.items.iter().find(|(k, _, _)| k == key).map(|(_, v, l)| (v.as_str(), *l))
    }

    fn num(&self, key: &str) -> Result<Option<f64>, CliError> {
        match self.take(key) {
            None => Ok(None),
            Some((v, line)) => v
                .parse::<f64>()
                .map(Some)
                .map_err(|_| CliError::Config(format!("line {line}: {key} = '{v}' is not a number"))),
        }
    }

    fn required(&self, key: &str) -> Result<f64, CliError> {
        self.num(key)?.ok_or_else(|| CliError::Config(format!("missing required key {key}")))
    }

    fn vector<const N: usize>(&self, key: &str) -> Result<Option<[f64; N]>, CliError> {
        let Some((v, line)) = self.take(key) else { return Ok(None) };
        let parts: Vec<f64> = v
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|_| CliError::Config(format!("line {line}: {key} = '{v}' is not a list of numbers")))?;
        let arr: [f64; N] = parts
            .try_into()
            .map_err(|_| CliError::Config(format!("line {line}: {key} needs {N} numbers")))?;
        Ok(Some(arr))
    }
}

fn parse_entries(text: &str) -> Result<Entries, CliError> {
    let mut section = String::new();
    let mut items: Vec<(String, String, usize)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let n = i + 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| CliError::Config(format!("line {n}: unterminated section header")))?
                .trim();
            if !KEYS.iter().any(|(s, _)| *s == name) || name.is_empty() {
                return Err(CliError::Config(format!("line {n}: unknown section [{name}]")));
            }
            section = name.to_string();
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("line {n}: expected key = value, found '{line}'")))?;
        let (k, v) = (k.trim(), v.trim());
        let allowed = KEYS.iter().find(|(s, _)| *s == section).map(|(_, keys)| *keys).unwrap_or(&[]);
        if !allowed.contains(&k) {
            let place = if section.is_empty() { "top level".to_string() } else { format!("[{section}]") };
            return Err(CliError::Config(format!("line {n}: unknown key '{k}' in {place}")));
        }
        let full = if section.is_empty() { k.to_string() } else { format!("{section}.{k}") };
        if items.iter().any(|(f, _, _)| *f == full) {
            return Err(CliError::Config(format!("line {n}: duplicate key {full}")));
        }
        items.push((full, v.to_string(), n));
    }
    Ok(Entries { items })
}

fn bad(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

impl Config {
    pub fn load(path: &Path) -> Result<Config, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Config::parse(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Config, CliError> {
        let e = parse_entries(text)?;
        let seed = match e.take("seed") {
            None => 0,
            Some((v, line)) => {
                v.parse().map_err(|_| CliError::Config(format!("line {line}: seed must be a non-negative integer")))?
            }
        };
        let output_dir = PathBuf::from(e.take("output_dir").map_or("out", |(v, _)| v));

        let mut sys = SpinSystem::triplet(
            e.required("spin.d_ghz")?,
            e.num("spin.e_ghz")?.unwrap_or(0.0),
            e.num("spin.g")?.unwrap_or(2.0),
        )
        .map_err(bad)?;
        if let Some([x, y, z]) = e.vector::<3>("spin.zfs_axis")? {
            sys = sys.with_zfs_axis(Vector3::new(x, y, z)).map_err(bad)?;
        }

        let mut optical = OpticalModel::new(e.required("optical.zpl_nm")?, e.required("optical.t_opt_us")?).map_err(bad)?;
        if let Some(v) = e.num("optical.inhomogeneous_fwhm_ghz")? {
            optical.inhomogeneous_fwhm_ghz = v;
        }
        if let Some(v) = e.num("optical.homogeneous_fwhm_ghz")? {
            optical.homogeneous_fwhm_ghz = v;
        }
        if let Some(v) = e.num("optical.debye_waller")? {
            optical.debye_waller = v;
        }
        if let Some(b) = e.vector::<3>("optical.branching")? {
            optical.branching = b;
        }
        let optical = optical.validated().map_err(bad)?;

        let bright = match e.take("dynamics.bright").map(|(v, _)| v) {
            None | Some("0") => Sublevel::Zero,
            Some("-") => Sublevel::Minus,
            Some("+") => Sublevel::Plus,
            Some(other) => return Err(CliError::Config(format!("dynamics.bright must be 0, - or +, got '{other}'"))),
        };
        let temperature_k = e.num("dynamics.temperature_k")?.unwrap_or(4.0);
        let relaxation = match e.take("dynamics.relaxation").map(|(v, _)| v) {
            None | Some("symmetric") => GroundRelaxation::Symmetric,
            Some("boltzmann") => GroundRelaxation::Boltzmann { temperature_k },
            Some(other) => {
                return Err(CliError::Config(format!("dynamics.relaxation must be symmetric or boltzmann, got '{other}'")))
            }
        };
        let pulse_model = match e.take("dynamics.pulse_model").map(|(v, _)| v) {
            None | Some("ideal") => PulseModel::Ideal,
            Some("finite") => PulseModel::Finite,
            Some(other) => return Err(CliError::Config(format!("dynamics.pulse_model must be ideal or finite, got '{other}'"))),
        };
        let noise_fraction = e.num("dynamics.noise_fraction")?.unwrap_or(0.0);
        if !(noise_fraction >= 0.0 && noise_fraction.is_finite()) {
            return Err(CliError::Config("dynamics.noise_fraction must be non-negative".into()));
        }
        let config = Config {
            seed,
            output_dir,
            pump_rate_per_s: e.num("dynamics.pump_rate_per_s")?.unwrap_or(1.0 / optical.t_opt_s()),
            sys,
            optical,
            t1_ms: e.required("dynamics.t1_ms")?,
            t2_ns: e.num("dynamics.t2_ns")?.unwrap_or(f64::INFINITY),
            rabi_mhz: e.num("dynamics.rabi_mhz")?.unwrap_or(0.0),
            detuning_mhz: e.num("dynamics.detuning_mhz")?.unwrap_or(0.0),
            field_mt: e.num("dynamics.field_mt")?.unwrap_or(0.0),
            bright,
            relaxation,
            temperature_k,
            noise_fraction,
            pulse_model,
        };
        config.pump_model()?;
        config.coherent_params()?;
        Ok(config)
    }

    pub fn pump_model(&self) -> Result<PumpModel, CliError> {
        let mut m = PumpModel::new(self.sys.clone(), self.optical.clone(), self.pump_rate_per_s, self.t1_ms)
            .map_err(bad)?
            .with_field_mt(self.field_mt);
        m.bright = self.bright;
        m.relaxation = self.relaxation;
        m.validated().map_err(bad)
    }

    pub fn coherent_params(&self) -> Result<CoherentParams, CliError> {
        CoherentParams::new(self.rabi_mhz, self.detuning_mhz, self.t2_ns).map_err(bad)
    }

    /// Every setting after defaults are applied, as `key=value` lines.
    pub fn snapshot(&self) -> Vec<(String, String)> {
        let axis = self.sys.zfs_axis();
        let b = self.optical.branching;
        let relaxation = match self.relaxation {
            GroundRelaxation::Symmetric => "symmetric",
            GroundRelaxation::Boltzmann { .. } => "boltzmann",
        };
        let pulse_model = match self.pulse_model {
            PulseModel::Ideal => "ideal",
            PulseModel::Finite => "finite",
        };
        let kv = |k: &str, v: String| (k.to_string(), v);
        vec![
            kv("seed", self.seed.to_string()),
            kv("output_dir", self.output_dir.display().to_string()),
            kv("spin.d_ghz", self.sys.d().to_string()),
            kv("spin.e_ghz", self.sys.e().to_string()),
            kv("spin.g", self.sys.g().to_string()),
            kv("spin.zfs_axis", format!("{} {} {}", axis.x, axis.y, axis.z)),
            kv("optical.zpl_nm", self.optical.zpl_wavelength_nm.to_string()),
            kv("optical.t_opt_us", self.optical.t_opt_us.to_string()),
            kv("optical.inhomogeneous_fwhm_ghz", self.optical.inhomogeneous_fwhm_ghz.to_string()),
            kv("optical.homogeneous_fwhm_ghz", self.optical.homogeneous_fwhm_ghz.to_string()),
            kv("optical.debye_waller", self.optical.debye_waller.to_string()),
            kv("optical.branching", format!("{} {} {}", b[0], b[1], b[2])),
            kv("dynamics.t1_ms", self.t1_ms.to_string()),
            kv("dynamics.t2_ns", self.t2_ns.to_string()),
            kv("dynamics.rabi_mhz", self.rabi_mhz.to_string()),
            kv("dynamics.detuning_mhz", self.detuning_mhz.to_string()),
            kv("dynamics.field_mt", self.field_mt.to_string()),
            kv("dynamics.pump_rate_per_s", self.pump_rate_per_s.to_string()),
            kv("dynamics.bright", self.bright.symbol().to_string()),
            kv("dynamics.relaxation", relaxation.to_string()),
            kv("dynamics.temperature_k", self.temperature_k.to_string()),
            kv("dynamics.noise_fraction", self.noise_fraction.to_string()),
            kv("dynamics.pulse_model", pulse_model.to_string()),
        ]
    }
}
