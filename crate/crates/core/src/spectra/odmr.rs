use nalgebra::{Unit, Vector3};

use super::lineshape::LineShape;
use super::spectrum::{check_axis, OdmrMap};
use crate::error::Result;
use crate::io::Metadata;
use crate::spin::{transition_table, FieldPoint, SpinSystem};

/// Geometry and broadening for continuous-wave ODMR maps.
#[derive(Clone, Debug)]
pub struct OdmrSettings {
    pub field_axis: Unit<Vector3<f64>>,
    pub b1_dir: Vector3<f64>,
    /// Line width in GHz.
    pub line: LineShape,
    pub temperature_k: f64,
}

impl OdmrSettings {
    pub fn new(line: LineShape, temperature_k: f64) -> Self {
        OdmrSettings { field_axis: Vector3::z_axis(), b1_dir: Vector3::x(), line, temperature_k }
    }
}

pub(crate) fn system_metadata(sys: &SpinSystem) -> Metadata {
    let axis = sys.zfs_axis();
    Metadata::new()
        .with("spin", sys.spin().value())
        .with("d_ghz", sys.d())
        .with("e_ghz", sys.e())
        .with("g", sys.g())
        .with("zfs_axis", format!("{} {} {}", axis.x, axis.y, axis.z))
}

/// Continuous-wave ODMR contrast over a field/frequency grid.
///
/// The contrast of a grid point is `sum_t intensity_t * population_weight_t *
/// line(f - f_t(B))`: a proxy for the mixing of bright and dark sublevels that
/// reproduces line positions and relative strengths.
pub fn odmr_map(sys: &SpinSystem, fields_mt: &[f64], freqs_ghz: &[f64], settings: &OdmrSettings) -> Result<OdmrMap> {
    check_axis(fields_mt, "field")?;
    check_axis(freqs_ghz, "frequency")?;
    let mut contrast = Vec::with_capacity(fields_mt.len());
    for &b in fields_mt {
        let field = FieldPoint::new(settings.field_axis.into_inner() * (b * 1e-3), settings.b1_dir)?;
        let lines: Vec<(f64, f64)> = transition_table(sys, &field, settings.temperature_k)?
            .into_iter()
            .map(|t| (t.frequency, t.intensity * t.population_weight))
            .filter(|&(_, w)| w > 0.0)
            .collect();
        let row = freqs_ghz
            .iter()
            .map(|&f| lines.iter().map(|&(f0, w)| w * settings.line.eval(f - f0)).sum())
            .collect();
        contrast.push(row);
    }
    let axis = settings.field_axis;
    let metadata = system_metadata(sys)
        .with("kind", "odmr_map")
        .with("field_axis", format!("{} {} {}", axis.x, axis.y, axis.z))
        .with("line_fwhm_ghz", settings.line.fwhm())
        .with("temperature_k", settings.temperature_k);
    Ok(OdmrMap { field_axis: fields_mt.to_vec(), freq_axis: freqs_ghz.to_vec(), contrast, metadata })
}
