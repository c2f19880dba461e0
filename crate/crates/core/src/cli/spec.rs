//! Channel specification files.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::CliError;
use crate::channel::Channel;
use crate::types::{ConditionalDistribution, Distribution};

/// Sums may miss one by this much; they are then rescaled.
pub const SUM_TOLERANCE: f64 = 1e-9;

/// Rescaling by more than this is reported.
const WARN_TOLERANCE: f64 = 1e-12;

/// Default value of the `_comment` field in generated files.
pub const INDEX_ORDER_NOTE: &str =
    "p_s[s]; w[x][s][y] = W(y|x,s); design_p_ux_given_s[s][u][x] = P(u,x|s); u_size defaults to |X||S|+1";

/// JSON channel description. Stored exactly as written; probabilities are
/// normalized when the spec is resolved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpecFile {
    #[serde(rename = "_comment", default, skip_serializing_if = "Option::is_none")]
    pub comment: Option<String>,
    pub s_size: usize,
    pub x_size: usize,
    pub y_size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_size: Option<usize>,
    pub p_s: Vec<f64>,
    /// Indexed `[x][s][y]`.
    pub w: Vec<Vec<Vec<f64>>>,
    /// Indexed `[s][u][x]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub design_p_ux_given_s: Option<Vec<Vec<Vec<f64>>>>,
}

/// A validated spec.
#[derive(Debug, Clone)]
pub struct ResolvedSpec {
    pub channel: Channel,
    pub u_size: usize,
    /// `P(u, x | s)`, one row per state, `u`-major.
    pub design: ConditionalDistribution,
    pub warnings: Vec<String>,
}

#[derive(Serialize)]
struct Instance<'a> {
    s_size: usize,
    x_size: usize,
    y_size: usize,
    u_size: usize,
    p_s: &'a [f64],
    w: &'a [Vec<Vec<f64>>],
}

impl ChannelSpecFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Validation(format!("channel spec: {e}")))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plain data serializes");
        s.push('\n');
        s
    }

    pub fn default_u_size(&self) -> usize {
        self.x_size * self.s_size + 1
    }

    pub fn u_size(&self) -> usize {
        self.u_size.unwrap_or_else(|| self.default_u_size())
    }

    /// SHA-256 of the channel, alphabet sizes and `|U|`; the design is
    /// not part of the instance.
    pub fn instance_hash(&self) -> String {
        let inst = Instance {
            s_size: self.s_size,
            x_size: self.x_size,
            y_size: self.y_size,
            u_size: self.u_size(),
            p_s: &self.p_s,
            w: &self.w,
        };
        let bytes = serde_json::to_vec(&inst).expect("plain data serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn resolve(&self) -> Result<ResolvedSpec, CliError> {
        let mut warnings = Vec::new();
        let (ns, nx, ny) = (self.s_size, self.x_size, self.y_size);
        for (name, v) in [("s_size", ns), ("x_size", nx), ("y_size", ny)] {
            if v == 0 || v > 256 {
                return Err(invalid(format!("{name} must lie in 1..=256, got {v}")));
            }
        }
        let nu = self.u_size();
        let default_u = self.default_u_size();
        if nu == 0 || nu > default_u || nu > 256 {
            return Err(invalid(format!(
                "u_size must lie in 1..=|X||S|+1 = {default_u}, got {nu}"
            )));
        }
        if nu < default_u {
            warnings.push(format!(
                "u_size = {nu} is below the default |X||S|+1 = {default_u}; exponents are restricted accordingly"
            ));
        }
        let p_s = normalize("p_s", self.p_s.clone(), ns, &mut warnings)?;

        if self.w.len() != nx {
            return Err(invalid(format!(
                "w must have x_size = {nx} entries, got {}",
                self.w.len()
            )));
        }
        let mut rows = vec![None; ns * nx];
        for (x, per_s) in self.w.iter().enumerate() {
            if per_s.len() != ns {
                return Err(invalid(format!(
                    "w[{x}] must have s_size = {ns} entries, got {}",
                    per_s.len()
                )));
            }
            for (s, row) in per_s.iter().enumerate() {
                rows[s * nx + x] = Some(normalize(&format!("w[{x}][{s}]"), row.clone(), ny, &mut warnings)?);
            }
        }
        let w = ConditionalDistribution::new(rows.into_iter().map(|r| r.expect("all cells filled")).collect())
            .map_err(|e| invalid(e.to_string()))?;
        let channel = Channel::new(p_s, w, nx).map_err(|e| invalid(e.to_string()))?;

        let design = match &self.design_p_ux_given_s {
            Some(d) => {
                if d.len() != ns {
                    return Err(invalid(format!(
                        "design_p_ux_given_s must have s_size = {ns} entries, got {}",
                        d.len()
                    )));
                }
                let mut out = Vec::with_capacity(ns);
                for (s, per_u) in d.iter().enumerate() {
                    if per_u.len() != nu || per_u.iter().any(|r| r.len() != nx) {
                        return Err(invalid(format!("design_p_ux_given_s[{s}] must be a {nu} x {nx} array")));
                    }
                    let flat: Vec<f64> = per_u.iter().flatten().copied().collect();
                    out.push(normalize(
                        &format!("design_p_ux_given_s[{s}]"),
                        flat,
                        nu * nx,
                        &mut warnings,
                    )?);
                }
                ConditionalDistribution::new(out).map_err(|e| invalid(e.to_string()))?
            }
            None => default_design(ns, nu, nx),
        };
        Ok(ResolvedSpec {
            channel,
            u_size: nu,
            design,
            warnings,
        })
    }
}

/// `U` uniform and independent of `S`, with `x = u mod |X|`.
pub fn default_design(ns: usize, nu: usize, nx: usize) -> ConditionalDistribution {
    let mut row = vec![0.0; nu * nx];
    for u in 0..nu {
        row[u * nx + u % nx] = 1.0 / nu as f64;
    }
    let row = Distribution::renormalized(row, SUM_TOLERANCE).expect("uniform row").0;
    ConditionalDistribution::new(vec![row; ns]).expect("equal rows")
}

fn invalid(msg: String) -> CliError {
    CliError::Validation(format!("channel spec: {msg}"))
}

fn normalize(field: &str, v: Vec<f64>, len: usize, warnings: &mut Vec<String>) -> Result<Distribution, CliError> {
    if v.len() != len {
        return Err(invalid(format!("{field} must have {len} entries, got {}", v.len())));
    }
    let total: f64 = v.iter().sum();
    let (d, _) = Distribution::renormalized(v, SUM_TOLERANCE).map_err(|e| invalid(format!("{field}: {e}")))?;
    if (total - 1.0).abs() > WARN_TOLERANCE {
        warnings.push(format!("{field} summed to {total}; renormalized"));
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"{
        "_comment": "binary",
        "s_size": 2, "x_size": 2, "y_size": 2, "u_size": 3,
        "p_s": [0.5, 0.5],
        "w": [[[0.9, 0.1], [0.8, 0.2]], [[0.1, 0.9], [0.15, 0.85]]]
    }"#;

    #[test]
    fn w_is_reindexed_to_state_major_rows() {
        let r = ChannelSpecFile::parse(SAMPLE).unwrap().resolve().unwrap();
        assert_eq!(r.channel.row(1, 0).probs(), &[0.1, 0.9]);
        assert_eq!(r.channel.row(0, 1).probs(), &[0.8, 0.2]);
        assert_eq!(r.u_size, 3);
        assert_eq!(r.warnings.len(), 1);
    }

    #[test]
    fn round_trip_is_identity() {
        let a = ChannelSpecFile::parse(SAMPLE).unwrap();
        let b = ChannelSpecFile::parse(&a.to_json()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_json(), b.to_json());
    }

    #[test]
    fn near_normalized_rows_are_rescaled_with_warning() {
        let text = SAMPLE.replace("[0.5, 0.5]", "[0.5, 0.5000000001]");
        let r = ChannelSpecFile::parse(&text).unwrap().resolve().unwrap();
        assert!(r.warnings.iter().any(|w| w.contains("p_s")));
        let text = SAMPLE.replace("[0.5, 0.5]", "[0.5, 0.6]");
        assert!(ChannelSpecFile::parse(&text).unwrap().resolve().is_err());
    }

    #[test]
    fn oversized_u_is_rejected() {
        let text = SAMPLE.replace("\"u_size\": 3", "\"u_size\": 6");
        assert!(ChannelSpecFile::parse(&text).unwrap().resolve().is_err());
    }

    #[test]
    fn malformed_json_reports_position() {
        let err = ChannelSpecFile::parse("{\"s_size\": 2,\n \"x_size\": }").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        let err = ChannelSpecFile::parse(&SAMPLE.replace("\"p_s\"", "\"ps\"")).unwrap_err();
        assert!(err.to_string().contains("ps"), "{err}");
    }

    #[test]
    fn default_design_is_uniform_and_state_blind() {
        let d = default_design(2, 5, 2);
        assert_eq!(d.row(0), d.row(1));
        assert_eq!(d.row(0).probs()[4 * 2], 0.2);
    }
}
