use nalgebra::{DMatrix, Vector3};
use num_complex::Complex64;

use super::lineshape::LineShape;
use super::odmr::system_metadata;
use super::spectrum::{check_axis, AxisUnit, Spectrum};
use crate::error::{domain, Result};
use crate::spin::{build_hamiltonian, eigensystem, spin_operators, transitions_from, FieldPoint, SpinSystem};

/// Default X-band microwave frequency, GHz.
pub const X_BAND_GHZ: f64 = 9.4;

const SCAN_POINTS: usize = 240;
const ROOT_TOL_MT: f64 = 1e-9;
const MERGE_TOL_MT: f64 = 1e-6;
const MIN_INTENSITY: f64 = 1e-10;

/// A field at which some transition matches the microwave quantum.
#[derive(Clone, Debug, PartialEq)]
pub struct Resonance {
    pub field_mt: f64,
    /// Transverse-drive intensity, averaged over the drive azimuth.
    pub intensity: f64,
    pub population_weight: f64,
    pub lower: usize,
    pub upper: usize,
}

/// Orientation sampling for cw-ESR.
#[derive(Clone, Debug, PartialEq)]
pub enum Orientation {
    /// Field along one lab direction (normalized internally).
    Single(Vector3<f64>),
    /// Average over `n` directions of a Fibonacci grid on the upper hemisphere.
    Powder(usize),
}

/// Two unit vectors spanning the plane perpendicular to `n`.
pub(crate) fn transverse_pair(n: &Vector3<f64>) -> [Vector3<f64>; 2] {
    let helper = if n.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let u = n.cross(&helper).normalize();
    let v = n.cross(&u);
    [u, v]
}

/// Deterministic quasi-uniform directions on the hemisphere `z >= 0`.
pub fn fibonacci_hemisphere(n: usize) -> Vec<Vector3<f64>> {
    let golden = std::f64::consts::PI * (3.0 - 5.0_f64.sqrt());
    (0..n)
        .map(|k| {
            let z = 1.0 - (k as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * k as f64;
            Vector3::new(r * phi.cos(), r * phi.sin(), z)
        })
        .collect()
}

/// `H(B) = H_zfs + gamma B (n.S)` along a fixed direction.
struct FieldLine {
    zfs: DMatrix<Complex64>,
    zeeman_per_mt: DMatrix<Complex64>,
}

impl FieldLine {
    fn new(sys: &SpinSystem, dir: &Vector3<f64>) -> Self {
        let zfs = build_hamiltonian(sys, &FieldPoint::zero());
        let ops = spin_operators(sys.spin());
        let zeeman_per_mt = ops.project(dir) * Complex64::from(sys.gyromagnetic_ghz_per_t() * 1e-3);
        FieldLine { zfs, zeeman_per_mt }
    }

    fn hamiltonian(&self, b_mt: f64) -> DMatrix<Complex64> {
        &self.zfs + &self.zeeman_per_mt * Complex64::from(b_mt)
    }

    fn levels(&self, b_mt: f64) -> Vec<f64> {
        let mut e: Vec<f64> = self.hamiltonian(b_mt).symmetric_eigenvalues().iter().copied().collect();
        e.sort_by(f64::total_cmp);
        e
    }
}

/// Fields in `[0, b_max_mt]` along `axis` where an allowed transition equals `f_mw_ghz`.
///
/// Every level-pair branch is scanned on a uniform grid; sign changes are bracketed and
/// refined by Illinois false position. Coincident roots from different pairs merge into
/// one resonance; forbidden lines (vanishing transverse intensity) are dropped.
pub fn resonance_fields(
    sys: &SpinSystem,
    f_mw_ghz: f64,
    axis: &Vector3<f64>,
    b_max_mt: f64,
    temperature_k: f64,
) -> Result<Vec<Resonance>> {
    if !(f_mw_ghz > 0.0) {
        return domain(format!("microwave frequency must be positive, got {f_mw_ghz}"));
    }
    if !(b_max_mt > 0.0 && b_max_mt.is_finite()) {
        return domain(format!("field range must be positive, got {b_max_mt} mT"));
    }
    if !(temperature_k > 0.0) {
        return domain(format!("temperature must be positive, got {temperature_k} K"));
    }
    let norm = axis.norm();
    if !(norm > 0.0 && norm.is_finite()) {
        return domain("field axis must be a non-zero vector");
    }
    let dir = axis / norm;
    let line = FieldLine::new(sys, &dir);
    let n = sys.spin().dim();

    let scan: Vec<(f64, Vec<f64>)> = (0..=SCAN_POINTS)
        .map(|k| {
            let b = b_max_mt * k as f64 / SCAN_POINTS as f64;
            (b, line.levels(b))
        })
        .collect();

    let mut roots: Vec<(f64, usize, usize)> = Vec::new();
    for lower in 0..n {
        for upper in lower + 1..n {
            let branch = |levels: &[f64]| levels[upper] - levels[lower] - f_mw_ghz;
            for w in scan.windows(2) {
                let (b0, g0) = (w[0].0, branch(&w[0].1));
                let (b1, g1) = (w[1].0, branch(&w[1].1));
                if g0 == 0.0 {
                    roots.push((b0, lower, upper));
                } else if g0 * g1 < 0.0 {
                    let f = |b: f64| branch(&line.levels(b));
                    roots.push((illinois(f, b0, g0, b1, g1), lower, upper));
                }
            }
            if let Some(last) = scan.last() {
                if branch(&last.1) == 0.0 {
                    roots.push((last.0, lower, upper));
                }
            }
        }
    }
    roots.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut out: Vec<Resonance> = Vec::new();
    let drives = transverse_pair(&dir);
    for (b, lower, upper) in roots {
        let eig = eigensystem(&line.hamiltonian(b))?;
        let table = transitions_from(sys.spin(), &eig, &drives, temperature_k)?;
        let t = table
            .iter()
            .find(|t| t.lower == lower && t.upper == upper)
            .expect("pair present in table");
        if t.intensity < MIN_INTENSITY {
            continue;
        }
        match out.last_mut() {
            Some(prev) if (b - prev.field_mt).abs() < MERGE_TOL_MT => {
                let strength = prev.intensity * prev.population_weight + t.intensity * t.population_weight;
                prev.intensity += t.intensity;
                prev.population_weight = strength / prev.intensity;
            }
            _ => out.push(Resonance {
                field_mt: b,
                intensity: t.intensity,
                population_weight: t.population_weight,
                lower,
                upper,
            }),
        }
    }
    Ok(out)
}

fn illinois(f: impl Fn(f64) -> f64, mut a: f64, mut fa: f64, mut b: f64, mut fb: f64) -> f64 {
    let mut side = 0;
    for _ in 0..200 {
        let c = (a * fb - b * fa) / (fb - fa);
        let fc = f(c);
        if fc == 0.0 || (b - a).abs() < ROOT_TOL_MT {
            return c;
        }
        if fc * fb < 0.0 {
            a = b;
            fa = fb;
            side = 0;
        } else {
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        }
        b = c;
        fb = fc;
        if fb.abs() < 1e-13 {
            return b;
        }
    }
    b
}

/// Field-swept cw-ESR spectrum at fixed microwave frequency.
///
/// Each resonance contributes `intensity * population_weight * line(B - B_res)`; the
/// line width is in mT. Powder spectra are the mean over the orientation grid.
pub fn cw_esr_spectrum(
    sys: &SpinSystem,
    f_mw_ghz: f64,
    fields_mt: &[f64],
    line: &LineShape,
    temperature_k: f64,
    orientation: &Orientation,
) -> Result<Spectrum> {
    check_axis(fields_mt, "field")?;
    let directions = match orientation {
        Orientation::Single(axis) => vec![*axis],
        Orientation::Powder(0) => return domain("powder average needs at least one orientation"),
        Orientation::Powder(n) => fibonacci_hemisphere(*n),
    };
    let b_max = fields_mt[fields_mt.len() - 1] + line.reach();
    let mut values = vec![0.0; fields_mt.len()];
    for dir in &directions {
        for r in resonance_fields(sys, f_mw_ghz, dir, b_max, temperature_k)? {
            let weight = r.intensity * r.population_weight;
            for (v, &b) in values.iter_mut().zip(fields_mt) {
                *v += weight * line.eval(b - r.field_mt);
            }
        }
    }
    let scale = 1.0 / directions.len() as f64;
    values.iter_mut().for_each(|v| *v *= scale);

    let mut metadata = system_metadata(sys)
        .with("kind", "cw_esr")
        .with("f_mw_ghz", f_mw_ghz)
        .with("line_fwhm_mt", line.fwhm())
        .with("derivative", line.is_derivative())
        .with("temperature_k", temperature_k);
    match orientation {
        Orientation::Single(a) => metadata.set("orientation", format!("single {} {} {}", a.x, a.y, a.z)),
        Orientation::Powder(n) => metadata.set("orientation", format!("powder {n}")),
    }
    Spectrum::new(fields_mt.to_vec(), values, AxisUnit::Millitesla, metadata)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::transition_table;

    #[test]
    fn free_spin_single_resonance() {
        let sys = SpinSystem::triplet(0.0, 0.0, 2.0).unwrap();
        let res = resonance_fields(&sys, 9.4, &Vector3::z(), 600.0, 77.0).unwrap();
        assert_eq!(res.len(), 1);
        assert!((res[0].field_mt - 335.804354774547).abs() < 1e-6);
    }

    #[test]
    fn axial_branches() {
        let sys = SpinSystem::triplet(3.63, 0.0, 2.0).unwrap();
        let res = resonance_fields(&sys, 9.4, &Vector3::z(), 600.0, 77.0).unwrap();
        let fields: Vec<f64> = res.iter().map(|r| r.field_mt).collect();
        assert_eq!(fields.len(), 2, "{fields:?}");
        assert!((fields[0] - 206.126715643525).abs() < 1e-6);
        assert!((fields[1] - 465.481993905569).abs() < 1e-6);
    }

    #[test]
    fn below_gap_gives_nothing() {
        let sys = SpinSystem::triplet(3.63, 0.0, 2.0).unwrap();
        // 1 GHz is below D and the double-quantum branch is forbidden for B || z
        let res = resonance_fields(&sys, 1.0, &Vector3::z(), 10.0, 77.0).unwrap();
        assert!(res.is_empty());
    }

    #[test]
    fn roots_reproduce_microwave_frequency() {
        let sys = SpinSystem::triplet(3.63, 0.4, 2.0).unwrap();
        let dir = Vector3::new(0.2, 0.5, 0.7).normalize();
        for r in resonance_fields(&sys, 9.4, &dir, 700.0, 77.0).unwrap() {
            let field = FieldPoint::new(dir * r.field_mt * 1e-3, transverse_pair(&dir)[0]).unwrap();
            let table = transition_table(&sys, &field, 77.0).unwrap();
            let t = table.iter().find(|t| t.lower == r.lower && t.upper == r.upper).unwrap();
            assert!((t.frequency - 9.4).abs() < 1e-6);
        }
    }

    #[test]
    fn powder_of_isotropic_spin_matches_single() {
        let sys = SpinSystem::triplet(0.0, 0.0, 2.0).unwrap();
        let fields: Vec<f64> = (0..201).map(|i| 320.0 + 0.16 * i as f64).collect();
        let line = LineShape::lorentzian(0.5).unwrap();
        let single = cw_esr_spectrum(&sys, 9.4, &fields, &line, 77.0, &Orientation::Single(Vector3::z())).unwrap();
        let powder = cw_esr_spectrum(&sys, 9.4, &fields, &line, 77.0, &Orientation::Powder(50)).unwrap();
        for (a, b) in single.values().iter().zip(powder.values()) {
            assert!((a - b).abs() < 1e-9 * single.values()[single.argmax()]);
        }
        assert!(cw_esr_spectrum(&sys, 9.4, &fields, &line, 77.0, &Orientation::Powder(0)).is_err());
    }

    #[test]
    fn hemisphere_grid_is_unit_and_upper() {
        for v in fibonacci_hemisphere(100) {
            assert!((v.norm() - 1.0).abs() < 1e-12);
            assert!(v.z > 0.0);
        }
    }
}
