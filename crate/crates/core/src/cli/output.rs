//! Result files: a manifest plus records, as JSON or CSV.
//!
//! CSV files start with a single `# manifest: {json}` line, then a header
//! row. Infinite values are written as `inf` / `-inf` in both formats.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::spec::ChannelSpecFile;
use super::CliError;
use crate::exponents::{Branch, Mode, SweepAxis};
use crate::sim::{CodebookPolicy, EmpiricalExponent, MessagePolicy, SimStats};
use crate::types::JointSystem;

pub const TOOL: &str = "sideinfo";
const CSV_PREFIX: &str = "# manifest: ";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub axis: SweepAxis,
    pub grid: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentParams {
    pub mode: Mode,
    pub rate: f64,
    pub threshold: f64,
    pub alpha: f64,
    pub lattice: u32,
    pub sweep: Option<Sweep>,
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateParams {
    pub mode: Mode,
    pub rate: f64,
    pub threshold: f64,
    pub alpha: f64,
    pub blocklength: usize,
    pub epsilon: f64,
    pub trials: u64,
    pub batch_size: u64,
    pub seed: u64,
    pub message_policy: MessagePolicy,
    pub codebook_policy: CodebookPolicy,
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", content = "params", rename_all = "lowercase")]
pub enum Invocation {
    Exponent(ExponentParams),
    Simulate(SimulateParams),
}

impl Invocation {
    pub fn format(&self) -> Format {
        match self {
            Invocation::Exponent(p) => p.format,
            Invocation::Simulate(p) => p.format,
        }
    }
}

/// Everything needed to regenerate a result file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub invocation: Invocation,
    pub seed: Option<u64>,
    pub lattice: Option<u32>,
    pub instance_hash: String,
    pub spec: ChannelSpecFile,
}

impl Manifest {
    pub fn new(invocation: Invocation, spec: ChannelSpecFile) -> Self {
        let (seed, lattice) = match &invocation {
            Invocation::Exponent(p) => (None, Some(p.lattice)),
            Invocation::Simulate(p) => (Some(p.seed), None),
        };
        Manifest {
            tool: TOOL.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            instance_hash: spec.instance_hash(),
            invocation,
            seed,
            lattice,
            spec,
        }
    }
}

/// An `f64` that may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Real(pub f64);

impl Real {
    pub fn text(self) -> String {
        if self.0 == f64::INFINITY {
            "inf".into()
        } else if self.0 == f64::NEG_INFINITY {
            "-inf".into()
        } else if self.0.is_nan() {
            "nan".into()
        } else {
            // Shortest representation that parses back to the same bits.
            serde_json::to_string(&self.0).expect("finite float serializes")
        }
    }

    pub fn parse(s: &str) -> Option<Real> {
        match s {
            "inf" => Some(Real(f64::INFINITY)),
            "-inf" => Some(Real(f64::NEG_INFINITY)),
            "nan" => Some(Real(f64::NAN)),
            _ => s.parse().ok().map(Real),
        }
    }
}

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(self.0)
        } else {
            s.serialize_str(&self.text())
        }
    }
}

impl<'de> Deserialize<'de> for Real {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Real(v)),
            Raw::Text(t) => Real::parse(&t).ok_or_else(|| serde::de::Error::custom(format!("not a number: {t}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub p_s: Vec<f64>,
    /// Rows per state, `u`-major over `(u, x)`.
    pub p_ux_given_s: Vec<Vec<f64>>,
    /// Rows per `s * |X| + x`.
    pub p_y_given_xs: Vec<Vec<f64>>,
}

impl From<&JointSystem> for Witness {
    fn from(j: &JointSystem) -> Self {
        Witness {
            p_s: j.p_s.probs().to_vec(),
            p_ux_given_s: j.p_ux_given_s.rows().iter().map(|r| r.probs().to_vec()).collect(),
            p_y_given_xs: j.p_y_given_xs.rows().iter().map(|r| r.probs().to_vec()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundRecord {
    pub value: Real,
    pub branch: Option<Branch>,
    pub witness: Witness,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentRecord {
    pub axis: Option<SweepAxis>,
    pub axis_value: Option<f64>,
    pub rate: f64,
    pub threshold: f64,
    pub alpha: f64,
    pub lattice: u32,
    pub e1: Option<BoundRecord>,
    pub e2: Option<BoundRecord>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentFile {
    pub manifest: Manifest,
    pub records: Vec<ExponentRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantityRecord {
    pub quantity: String,
    pub count: u64,
    pub trials: u64,
    pub point: Option<Real>,
    pub lower_conf: Real,
    pub censored: bool,
}

impl QuantityRecord {
    pub fn new(quantity: &str, count: u64, trials: u64, e: EmpiricalExponent) -> Self {
        QuantityRecord {
            quantity: quantity.into(),
            count,
            trials,
            point: e.point.map(Real),
            lower_conf: Real(e.lower_conf),
            censored: e.censored,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationFile {
    pub manifest: Manifest,
    pub messages: usize,
    pub stats: SimStats,
    pub mean_incorrect_list: f64,
    pub quantities: Vec<QuantityRecord>,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| Real(x).text()).unwrap_or_default()
}

const EXPONENT_HEADER: [&str; 12] = [
    "axis",
    "axis_value",
    "rate",
    "threshold",
    "alpha",
    "lattice",
    "e1",
    "e1_branch",
    "e2",
    "error",
    "e1_witness",
    "e2_witness",
];

const SIMULATION_HEADER: [&str; 6] = ["quantity", "count", "trials", "point", "lower_conf", "censored"];

fn csv_text(manifest: &Manifest, header: &[&str], rows: Vec<Vec<String>>) -> String {
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    let body = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields");
    format!(
        "{CSV_PREFIX}{}\n{body}",
        serde_json::to_string(manifest).expect("manifest serializes")
    )
}

fn json_text<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("records serialize");
    s.push('\n');
    s
}

fn axis_name(a: SweepAxis) -> &'static str {
    match a {
        SweepAxis::Rate => "rate",
        SweepAxis::Threshold => "threshold",
        SweepAxis::Alpha => "alpha",
    }
}

fn branch_name(b: Option<Branch>) -> &'static str {
    match b {
        Some(Branch::Constrained) => "constrained",
        Some(Branch::Penalized) => "penalized",
        None => "",
    }
}

impl ExponentFile {
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => json_text(self),
            Format::Csv => {
                let rows = self
                    .records
                    .iter()
                    .map(|r| {
                        let wit = |b: &Option<BoundRecord>| {
                            b.as_ref()
                                .map(|b| serde_json::to_string(&b.witness).expect("witness"))
                                .unwrap_or_default()
                        };
                        vec![
                            r.axis.map(axis_name).unwrap_or_default().to_string(),
                            fmt_opt(r.axis_value),
                            Real(r.rate).text(),
                            Real(r.threshold).text(),
                            Real(r.alpha).text(),
                            r.lattice.to_string(),
                            r.e1.as_ref().map(|b| b.value.text()).unwrap_or_default(),
                            branch_name(r.e1.as_ref().and_then(|b| b.branch)).to_string(),
                            r.e2.as_ref().map(|b| b.value.text()).unwrap_or_default(),
                            r.error.clone().unwrap_or_default(),
                            wit(&r.e1),
                            wit(&r.e2),
                        ]
                    })
                    .collect();
                csv_text(&self.manifest, &EXPONENT_HEADER, rows)
            }
        }
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        if !text.starts_with(CSV_PREFIX) {
            return serde_json::from_str(text).map_err(|e| CliError::Validation(format!("exponent file: {e}")));
        }
        let (manifest, rows) = split_csv(text)?;
        let mut records = Vec::new();
        for row in rows {
            let get = |name: &str| field(&row, &EXPONENT_HEADER, name);
            let real = |name: &str| -> Result<f64, CliError> {
                Real::parse(get(name)).map(|r| r.0).ok_or_else(|| bad_field(name))
            };
            let bound = |value: &str, branch: &str, witness: &str| -> Result<Option<BoundRecord>, CliError> {
                if get(value).is_empty() {
                    return Ok(None);
                }
                Ok(Some(BoundRecord {
                    value: Real::parse(get(value)).ok_or_else(|| bad_field(value))?,
                    branch: match get(branch) {
                        "constrained" => Some(Branch::Constrained),
                        "penalized" => Some(Branch::Penalized),
                        _ => None,
                    },
                    witness: serde_json::from_str(get(witness)).map_err(|_| bad_field(witness))?,
                }))
            };
            records.push(ExponentRecord {
                axis: match get("axis") {
                    "" => None,
                    "rate" => Some(SweepAxis::Rate),
                    "threshold" => Some(SweepAxis::Threshold),
                    "alpha" => Some(SweepAxis::Alpha),
                    _ => return Err(bad_field("axis")),
                },
                axis_value: if get("axis_value").is_empty() {
                    None
                } else {
                    Some(real("axis_value")?)
                },
                rate: real("rate")?,
                threshold: real("threshold")?,
                alpha: real("alpha")?,
                lattice: get("lattice").parse().map_err(|_| bad_field("lattice"))?,
                e1: bound("e1", "e1_branch", "e1_witness")?,
                e2: bound("e2", "", "e2_witness")?,
                error: Some(get("error").to_string()).filter(|s| !s.is_empty()),
            });
        }
        Ok(ExponentFile { manifest, records })
    }
}

impl SimulationFile {
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => json_text(self),
            Format::Csv => {
                let rows = self
                    .quantities
                    .iter()
                    .map(|q| {
                        vec![
                            q.quantity.clone(),
                            q.count.to_string(),
                            q.trials.to_string(),
                            q.point.map(Real::text).unwrap_or_default(),
                            q.lower_conf.text(),
                            q.censored.to_string(),
                        ]
                    })
                    .collect();
                csv_text(&self.manifest, &SIMULATION_HEADER, rows)
            }
        }
    }

    /// Manifest and per-quantity counts; the remaining fields are only
    /// present in JSON files and are rebuilt from the counts for CSV.
    pub fn parse(text: &str) -> Result<(Manifest, Vec<QuantityRecord>), CliError> {
        if !text.starts_with(CSV_PREFIX) {
            let f: SimulationFile =
                serde_json::from_str(text).map_err(|e| CliError::Validation(format!("simulation file: {e}")))?;
            return Ok((f.manifest, f.quantities));
        }
        let (manifest, rows) = split_csv(text)?;
        let mut out = Vec::new();
        for row in rows {
            let get = |name: &str| field(&row, &SIMULATION_HEADER, name);
            out.push(QuantityRecord {
                quantity: get("quantity").to_string(),
                count: get("count").parse().map_err(|_| bad_field("count"))?,
                trials: get("trials").parse().map_err(|_| bad_field("trials"))?,
                point: if get("point").is_empty() {
                    None
                } else {
                    Some(Real::parse(get("point")).ok_or_else(|| bad_field("point"))?)
                },
                lower_conf: Real::parse(get("lower_conf")).ok_or_else(|| bad_field("lower_conf"))?,
                censored: get("censored") == "true",
            });
        }
        Ok((manifest, out))
    }
}

/// Reads the manifest of any result file.
pub fn read_manifest(text: &str) -> Result<Manifest, CliError> {
    if text.starts_with(CSV_PREFIX) {
        return Ok(split_csv(text)?.0);
    }
    #[derive(Deserialize)]
    struct Head {
        manifest: Manifest,
    }
    serde_json::from_str::<Head>(text)
        .map(|h| h.manifest)
        .map_err(|e| CliError::Validation(format!("result file manifest: {e}")))
}

fn split_csv(text: &str) -> Result<(Manifest, Vec<csv::StringRecord>), CliError> {
    let (first, rest) = text.split_once('\n').unwrap_or((text, ""));
    let manifest: Manifest = serde_json::from_str(&first[CSV_PREFIX.len()..])
        .map_err(|e| CliError::Validation(format!("csv manifest line: {e}")))?;
    let mut rdr = csv::ReaderBuilder::new().from_reader(rest.as_bytes());
    let rows = rdr
        .records()
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::Validation(format!("csv body: {e}")))?;
    Ok((manifest, rows))
}

fn field<'a>(row: &'a csv::StringRecord, header: &[&str], name: &str) -> &'a str {
    header
        .iter()
        .position(|h| *h == name)
        .and_then(|i| row.get(i))
        .unwrap_or("")
}

fn bad_field(name: &str) -> CliError {
    CliError::Validation(format!("malformed csv field `{name}`"))
}
