//! Text serializations of distributions and spectra.
//!
//! Floats are written with 17 significant digits so they read back exactly.

use std::fmt::Write;

use kapitza_core::momentum::{Level, MomentumDistribution};
use kapitza_core::spectroscopy::{AbsorptionSpectrum, SpectrumMetadata};
use serde::Serialize;
use serde_json::json;

use crate::config::Format;

pub const SPECTRUM_COLUMNS: [&str; 5] = ["detuning", "re_ratio", "im_ratio", "abs_ratio", "absorbance"];

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn level_name(level: Level) -> &'static str {
    match level {
        Level::G1 => "g1",
        Level::G2 => "g2",
        Level::E => "e",
    }
}

pub fn spectrum_rows(s: &AbsorptionSpectrum) -> Vec<[f64; 5]> {
    s.points
        .iter()
        .map(|p| [p.detuning, p.amplitude_ratio.re, p.amplitude_ratio.im, p.abs_ratio(), p.absorbance])
        .collect()
}

pub fn spectrum_csv(s: &AbsorptionSpectrum) -> String {
    let mut out = SPECTRUM_COLUMNS.join(",");
    out.push('\n');
    for row in spectrum_rows(s) {
        let cells: Vec<String> = row.iter().map(|&x| num(x)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

#[derive(Serialize)]
struct SpectrumJson<'a> {
    columns: [&'static str; 5],
    rows: Vec<[f64; 5]>,
    metadata: &'a SpectrumMetadata,
}

pub fn spectrum_json(s: &AbsorptionSpectrum) -> String {
    let doc = SpectrumJson {
        columns: SPECTRUM_COLUMNS,
        rows: spectrum_rows(s),
        metadata: &s.metadata,
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("spectrum serializes");
    text.push('\n');
    text
}

pub fn spectrum_text(s: &AbsorptionSpectrum, format: Format) -> String {
    match format {
        Format::Csv => spectrum_csv(s),
        Format::Json => spectrum_json(s),
    }
}

/// Entries below this weight are FFT round-off and are not written.
pub const PRINT_FLOOR: f64 = 1e-12;

fn printable(d: &MomentumDistribution) -> impl Iterator<Item = (Level, i64, f64)> {
    d.support().into_iter().filter(|e| e.2 >= PRINT_FLOOR)
}

pub fn distribution_csv(d: &MomentumDistribution) -> String {
    let mut out = String::from("level,m,probability\n");
    for (level, m, w) in printable(d) {
        writeln!(out, "{},{m},{}", level_name(level), num(w)).unwrap();
    }
    out
}

pub fn distribution_json(d: &MomentumDistribution) -> String {
    let entries: Vec<_> = printable(d)
        .map(|(level, m, w)| json!({ "level": level_name(level), "m": m, "probability": w }))
        .collect();
    let doc = json!({ "m_max": d.m_max, "entries": entries });
    pretty(&doc)
}

pub fn distribution_text(d: &MomentumDistribution, format: Format) -> String {
    match format {
        Format::Csv => distribution_csv(d),
        Format::Json => distribution_json(d),
    }
}

pub fn pretty<T: Serialize + ?Sized>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("value serializes");
    text.push('\n');
    text
}

pub fn extension(format: Format) -> &'static str {
    match format {
        Format::Csv => "csv",
        Format::Json => "json",
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use kapitza_core::params::{MediumSpec, ProbeFieldSpec};
    use kapitza_core::spectroscopy::{scan_spectrum, SpectrumSource};

    fn spectrum() -> AbsorptionSpectrum {
        let mut d = MomentumDistribution::zeros(8);
        d.add(Level::G1, 0, 0.5).unwrap();
        d.add(Level::G1, 2, 0.5).unwrap();
        let mut p = ProbeFieldSpec::default();
        p.detuning_scan = p.aligned_scan(-1, 3, 10);
        scan_spectrum(SpectrumSource::Diagonal(&d), &MediumSpec::default(), &p).unwrap()
    }

    #[test]
    fn csv_round_trips_exactly() {
        let s = spectrum();
        let text = spectrum_csv(&s);
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "detuning,re_ratio,im_ratio,abs_ratio,absorbance");
        let mut last = f64::NEG_INFINITY;
        for (line, p) in lines.zip(&s.points) {
            let v: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
            assert_eq!(v[0], p.detuning);
            assert_eq!(v[4], p.absorbance);
            assert!(v[0] > last);
            last = v[0];
        }
    }

    #[test]
    fn json_mirrors_columns() {
        let s = spectrum();
        let doc: serde_json::Value = serde_json::from_str(&spectrum_json(&s)).unwrap();
        assert_eq!(doc["columns"][4], "absorbance");
        assert_eq!(doc["rows"].as_array().unwrap().len(), s.points.len());
        assert_eq!(doc["rows"][3][4].as_f64().unwrap(), s.points[3].absorbance);
        assert_eq!(doc["metadata"]["formula"], "diagonal");
    }

    #[test]
    fn distribution_lists_support() {
        let mut d = MomentumDistribution::zeros(4);
        d.add(Level::G2, -1, 0.25).unwrap();
        d.add(Level::E, 3, 0.75).unwrap();
        d.add(Level::E, 1, 1e-30).unwrap();
        let text = distribution_csv(&d);
        assert_eq!(text.lines().count(), 3);
        assert!(text.contains("\ng2,-1,2.5000000000000000e-1\n"));
    }
}
