use crate::error::{domain, Result};
use crate::io::{columns_to_csv, Metadata};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AxisUnit {
    Gigahertz,
    Millitesla,
    Nanometer,
}

impl AxisUnit {
    pub fn column_name(self) -> &'static str {
        match self {
            AxisUnit::Gigahertz => "frequency_ghz",
            AxisUnit::Millitesla => "field_mt",
            AxisUnit::Nanometer => "wavelength_nm",
        }
    }
}

pub(crate) fn check_axis(axis: &[f64], what: &str) -> Result<()> {
    if axis.is_empty() {
        return domain(format!("{what} grid is empty"));
    }
    if axis.iter().any(|v| !v.is_finite()) {
        return domain(format!("{what} grid has non-finite entries"));
    }
    if axis.windows(2).any(|w| w[1] <= w[0]) {
        return domain(format!("{what} grid must be strictly increasing"));
    }
    Ok(())
}

/// Sampled one-dimensional spectrum.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    axis: Vec<f64>,
    values: Vec<f64>,
    unit: AxisUnit,
    pub metadata: Metadata,
}

impl Spectrum {
    pub fn new(axis: Vec<f64>, values: Vec<f64>, unit: AxisUnit, metadata: Metadata) -> Result<Self> {
        check_axis(&axis, unit.column_name())?;
        if axis.len() != values.len() {
            return domain(format!("axis has {} points but values has {}", axis.len(), values.len()));
        }
        Ok(Spectrum { axis, values, unit, metadata })
    }

    pub fn axis(&self) -> &[f64] {
        &self.axis
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn unit(&self) -> AxisUnit {
        self.unit
    }
    pub fn len(&self) -> usize {
        self.axis.len()
    }
    pub fn is_empty(&self) -> bool {
        self.axis.is_empty()
    }

    pub fn argmax(&self) -> usize {
        (0..self.values.len())
            .max_by(|&a, &b| self.values[a].total_cmp(&self.values[b]).then(b.cmp(&a)))
            .unwrap_or(0)
    }

    pub fn argmin(&self) -> usize {
        (0..self.values.len())
            .min_by(|&a, &b| self.values[a].total_cmp(&self.values[b]).then(a.cmp(&b)))
            .unwrap_or(0)
    }

    /// Axis position of the maximum refined by a parabola through its neighbours.
    pub fn refined_peak(&self, index: usize) -> f64 {
        refine_extremum(&self.axis, &self.values, index)
    }

    /// Indices of strict local maxima, strongest first.
    pub fn local_maxima(&self) -> Vec<usize> {
        local_maxima(&self.values)
    }

    /// Full width at half maximum of the tallest feature, linearly interpolated.
    pub fn fwhm(&self) -> Option<f64> {
        let peak = self.argmax();
        let half = self.values[peak] / 2.0;
        if !(half > 0.0) {
            return None;
        }
        let crossing = |range: &mut dyn Iterator<Item = usize>, step: isize| -> Option<f64> {
            for i in range {
                let j = (i as isize + step) as usize;
                if self.values[j] < half {
                    let (x0, y0, x1, y1) = (self.axis[i], self.values[i], self.axis[j], self.values[j]);
                    return Some(x0 + (half - y0) * (x1 - x0) / (y1 - y0));
                }
            }
            None
        };
        let right = crossing(&mut (peak..self.len() - 1), 1)?;
        let left = crossing(&mut (1..=peak).rev(), -1)?;
        Some(right - left)
    }

    pub fn to_csv(&self) -> String {
        columns_to_csv(&self.metadata, &[self.unit.column_name(), "value"], &[&self.axis, &self.values])
    }
}

pub(crate) fn local_maxima(values: &[f64]) -> Vec<usize> {
    let n = values.len();
    let mut idx: Vec<usize> = (0..n)
        .filter(|&i| {
            let left = if i == 0 { f64::NEG_INFINITY } else { values[i - 1] };
            let right = if i + 1 == n { f64::NEG_INFINITY } else { values[i + 1] };
            // plateaus count once, at their left edge
            values[i] > left && values[i] >= right && n > 1
        })
        .collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    idx
}

pub(crate) fn refine_extremum(axis: &[f64], values: &[f64], i: usize) -> f64 {
    if i == 0 || i + 1 >= axis.len() {
        return axis[i];
    }
    let (x0, x1, x2) = (axis[i - 1], axis[i], axis[i + 1]);
    let (y0, y1, y2) = (values[i - 1], values[i], values[i + 1]);
    let denom = (x0 - x1) * (x0 - x2) * (x1 - x2);
    let a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom;
    let b = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / denom;
    if a == 0.0 || !a.is_finite() {
        return x1;
    }
    let x = -b / (2.0 * a);
    x.clamp(x0, x2)
}

/// ODMR contrast sampled on a (field, frequency) grid; `contrast[i][j]` belongs to
/// `field_axis[i]`, `freq_axis[j]`.
#[derive(Clone, Debug, PartialEq)]
pub struct OdmrMap {
    pub field_axis: Vec<f64>,
    pub freq_axis: Vec<f64>,
    pub contrast: Vec<Vec<f64>>,
    pub metadata: Metadata,
}

impl OdmrMap {
    pub fn column(&self, field_index: usize) -> Spectrum {
        Spectrum {
            axis: self.freq_axis.clone(),
            values: self.contrast[field_index].clone(),
            unit: AxisUnit::Gigahertz,
            metadata: self.metadata.clone().with("field_mt", self.field_axis[field_index]),
        }
    }

    /// The `k` strongest interior local maxima (grid frequencies) of each field column,
    /// in ascending frequency. A line outside the frequency window gives no ridge.
    pub fn ridges(&self, k: usize) -> Vec<Vec<f64>> {
        self.contrast
            .iter()
            .map(|col| {
                let mut peaks: Vec<f64> = local_maxima(col)
                    .into_iter()
                    .filter(|&i| i > 0 && i + 1 < col.len())
                    .take(k)
                    .map(|i| self.freq_axis[i])
                    .collect();
                peaks.sort_by(f64::total_cmp);
                peaks
            })
            .collect()
    }

    /// Matrix CSV: first row is `field_mt\freq_ghz` followed by the frequency axis,
    /// each further row starts with its field value.
    pub fn to_csv(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::new();
        self.metadata.write_header(&mut out);
        out.push_str("field_mt\\freq_ghz");
        for f in &self.freq_axis {
            let _ = write!(out, ",{f}");
        }
        out.push('\n');
        for (b, row) in self.field_axis.iter().zip(&self.contrast) {
            let _ = write!(out, "{b}");
            for v in row {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_axes() {
        assert!(Spectrum::new(vec![], vec![], AxisUnit::Gigahertz, Metadata::new()).is_err());
        assert!(Spectrum::new(vec![1.0, 1.0], vec![0.0, 0.0], AxisUnit::Gigahertz, Metadata::new()).is_err());
        assert!(Spectrum::new(vec![1.0, 2.0], vec![0.0], AxisUnit::Gigahertz, Metadata::new()).is_err());
    }

    #[test]
    fn fwhm_of_sampled_triangle() {
        let axis: Vec<f64> = (0..=20).map(f64::from).collect();
        let values: Vec<f64> = axis.iter().map(|x| (1.0 - (x - 10.0).abs() / 10.0).max(0.0)).collect();
        let s = Spectrum::new(axis, values, AxisUnit::Millitesla, Metadata::new()).unwrap();
        assert!((s.fwhm().unwrap() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn parabolic_refinement_is_exact_for_parabola() {
        let axis: Vec<f64> = (0..10).map(|i| i as f64 * 0.5).collect();
        let values: Vec<f64> = axis.iter().map(|x| -(x - 2.2) * (x - 2.2)).collect();
        let s = Spectrum::new(axis, values, AxisUnit::Gigahertz, Metadata::new()).unwrap();
        assert!((s.refined_peak(s.argmax()) - 2.2).abs() < 1e-12);
    }
}
