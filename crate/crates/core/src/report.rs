//! Sampled residual statistics and their JSON form.

use std::collections::BTreeMap;
use std::io;

use serde::ser::Serialize;
use serde::{Deserialize, Serialize as SerializeDerive};
use serde_json::ser::{Formatter, PrettyFormatter};

#[derive(Debug, Clone, PartialEq, SerializeDerive, Deserialize)]
pub struct SampleRecord {
    pub point: Vec<f64>,
    pub values: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, SerializeDerive, Deserialize)]
pub struct FamilySummary {
    pub max: f64,
    pub mean: f64,
    pub count: usize,
    pub pass: bool,
    /// Whether this family contributes to the report's pass flag.
    pub gated: bool,
}

#[derive(Debug, Clone, PartialEq, SerializeDerive, Deserialize)]
pub struct ResidualReport {
    pub check: String,
    pub tol: f64,
    pub seed: u64,
    pub max: f64,
    pub mean: f64,
    pub pass: bool,
    pub samples: Vec<SampleRecord>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub families: BTreeMap<String, FamilySummary>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(default)]
    pub skipped: usize,
}

impl ResidualReport {
    pub fn family(&self, name: &str) -> Option<&FamilySummary> {
        self.families.get(name)
    }

    /// Max of one named family, or 0 when it never appeared.
    pub fn family_max(&self, name: &str) -> f64 {
        self.families.get(name).map_or(0.0, |f| f.max)
    }

    /// Values of a family in sample order.
    pub fn values_of<'a>(&'a self, name: &'a str) -> impl Iterator<Item = f64> + 'a {
        self.samples.iter().filter_map(move |s| s.values.get(name).copied())
    }

    /// Pretty JSON with every float written to 17 significant digits.
    pub fn to_json(&self) -> String {
        to_json_17(self)
    }
}

fn clamp_nan(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v.abs()
    }
}

/// Accumulates sample records and computes the summary on `finish`.
#[derive(Debug)]
pub struct ReportBuilder {
    check: String,
    tol: f64,
    seed: u64,
    gated: Vec<String>,
    samples: Vec<SampleRecord>,
    notes: Vec<String>,
    skipped: usize,
}

impl ReportBuilder {
    /// All families are gated unless `gate` narrows the set.
    pub fn new(check: impl Into<String>, tol: f64, seed: u64) -> Self {
        Self {
            check: check.into(),
            tol,
            seed,
            gated: Vec::new(),
            samples: Vec::new(),
            notes: Vec::new(),
            skipped: 0,
        }
    }

    pub fn gate(mut self, families: &[&str]) -> Self {
        self.gated = families.iter().map(|s| s.to_string()).collect();
        self
    }

    fn is_gated(&self, family: &str) -> bool {
        self.gated.is_empty() || self.gated.iter().any(|g| g == family)
    }

    pub fn record<'a, I>(&mut self, point: Vec<f64>, values: I)
    where
        I: IntoIterator<Item = (&'a str, f64)>,
    {
        let values = values.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
        self.samples.push(SampleRecord { point, values });
    }

    pub fn skip(&mut self, note: impl Into<String>) {
        self.skipped += 1;
        self.notes.push(note.into());
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    pub fn finish(self) -> ResidualReport {
        let mut per_family: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        let mut per_record = Vec::new();
        for s in &self.samples {
            let mut worst: Option<f64> = None;
            for (k, v) in &s.values {
                let v = clamp_nan(*v);
                per_family.entry(k.clone()).or_default().push(v);
                if self.is_gated(k) {
                    worst = Some(worst.map_or(v, |w: f64| w.max(v)));
                }
            }
            if let Some(w) = worst {
                per_record.push(w);
            }
        }
        let (max, mean) = summarize(&per_record);
        let families = per_family
            .into_iter()
            .map(|(k, vs)| {
                let (max, mean) = summarize(&vs);
                let gated = self.is_gated(&k);
                (
                    k,
                    FamilySummary {
                        max,
                        mean,
                        count: vs.len(),
                        pass: max <= self.tol,
                        gated,
                    },
                )
            })
            .collect();
        ResidualReport {
            check: self.check,
            tol: self.tol,
            seed: self.seed,
            max,
            mean,
            pass: max <= self.tol,
            samples: self.samples,
            families,
            notes: self.notes,
            skipped: self.skipped,
        }
    }
}

fn summarize(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        // Nothing measured is not a pass.
        return (f64::INFINITY, f64::INFINITY);
    }
    let max = values.iter().copied().fold(0.0, f64::max);
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    (max, mean.min(max))
}

/// Pretty-printing formatter that writes floats as `{:.16e}`.
struct SigFigs<'a>(PrettyFormatter<'a>);

impl Formatter for SigFigs<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{}", format_f64(value))
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        write!(writer, "{}", format_f64(value as f64))
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// 17 significant digits in scientific notation.
pub fn format_f64(value: f64) -> String {
    format!("{value:.16e}")
}

/// Serialize any value as pretty JSON with 17-significant-digit floats.
/// Non-finite floats become `null`.
pub fn to_json_17<T: Serialize + ?Sized>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SigFigs(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("report serialization is infallible");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_invariants() {
        let mut b = ReportBuilder::new("demo", 0.5, 3).gate(&["a"]);
        b.record(vec![0.0], [("a", 0.25), ("info", 9.0)]);
        b.record(vec![1.0], [("a", -0.75)]);
        let r = b.finish();
        assert_eq!(r.max, 0.75);
        assert_eq!(r.mean, 0.5);
        assert!(!r.pass);
        assert!(r.max >= r.mean && r.mean >= 0.0);
        assert!(!r.family("info").unwrap().gated);
        assert_eq!(r.family_max("info"), 9.0);
    }

    #[test]
    fn nan_counts_as_failure() {
        let mut b = ReportBuilder::new("demo", 1.0, 0);
        b.record(vec![], [("a", f64::NAN)]);
        let r = b.finish();
        assert!(!r.pass);
        assert!(r.to_json().contains("\"max\": null"));
    }

    #[test]
    fn empty_report_fails() {
        let r = ReportBuilder::new("demo", 1.0, 0).finish();
        assert!(!r.pass);
    }

    #[test]
    fn floats_have_seventeen_digits() {
        assert_eq!(format_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(format_f64(2.0), "2.0000000000000000e0");
        let mut b = ReportBuilder::new("demo", 1e-8, 42);
        b.record(vec![0.5], [("a", 0.0)]);
        let json = b.finish().to_json();
        assert!(json.contains("\"tol\": 1.0000000000000000e-8"));
        let back: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(back["seed"], 42);
        assert_eq!(back["samples"][0]["point"][0], 0.5);
    }
}
