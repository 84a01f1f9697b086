//! JSON reports with a fixed float format, so that equal inputs give equal bytes.

use std::io;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::psl2core::{ToleranceConfig, C_METRIC};

/// Pretty JSON, floats as `{:.16e}` (17 significant digits).
pub struct FixedFloatFormatter<'a>(PrettyFormatter<'a>);

impl Default for FixedFloatFormatter<'_> {
    fn default() -> Self {
        FixedFloatFormatter(PrettyFormatter::with_indent(b"  "))
    }
}

impl Formatter for FixedFloatFormatter<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        write!(w, "{v:.16e}")
    }
    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        self.write_f64(w, v as f64)
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

pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> serde_json::Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedFloatFormatter::default());
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(buf).expect("serde_json writes utf-8"))
}

#[derive(Clone, Debug, Serialize)]
pub struct ReportConfig {
    pub tolerances: ToleranceConfig,
    pub c_metric: f64,
    pub group: String,
}

/// Envelope around every command's output.
#[derive(Clone, Debug, Serialize)]
pub struct RunReport<T: Serialize> {
    pub command: String,
    pub version: String,
    pub config: ReportConfig,
    pub seed: u64,
    pub results: T,
    /// Left out unless timing is requested, to keep output reproducible.
    pub wall_time_ms: Option<u64>,
}

impl<T: Serialize> RunReport<T> {
    pub fn new(command: &str, group: &str, tolerances: ToleranceConfig, seed: u64, results: T) -> Self {
        RunReport {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: ReportConfig { tolerances, c_metric: C_METRIC, group: group.to_string() },
            seed,
            results,
            wall_time_ms: None,
        }
    }

    pub fn to_json(&self) -> String {
        to_json_string(self).expect("report types serialize")
    }
}
