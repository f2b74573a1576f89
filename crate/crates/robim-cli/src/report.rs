//! Structured check reports, rendered as human-readable text or JSON.
//! Certificates carry enough data to revalidate a verdict without rerunning
//! the tool.

use serde::Serialize;
use serde_json::Value;

use robim::superiority::{FailureReason, Witness};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    Text,
    Json,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    pub file: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    pub verdict: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub criterion: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<FailureReason>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<Value>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub notes: Vec<String>,
}

impl Report {
    pub fn new(command: &str, file: &str, verdict: &str) -> Self {
        Report {
            command: command.to_string(),
            kind: None,
            file: file.to_string(),
            epsilon: None,
            verdict: verdict.to_string(),
            criterion: None,
            reason: None,
            certificate: None,
            witness: None,
            diagnostics: None,
            notes: Vec::new(),
        }
    }

    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Json => serde_json::to_string_pretty(self).expect("report serializes"),
            OutputFormat::Text => self.render_text(),
        }
    }

    fn render_text(&self) -> String {
        let mut out = String::new();
        let kind = self.kind.as_deref().unwrap_or("");
        out.push_str(&format!(
            "{} {} on {}: {}\n",
            self.command,
            kind,
            self.file,
            self.verdict.to_uppercase()
        ));
        if let Some(c) = &self.criterion {
            out.push_str(&format!("  criterion: {c}\n"));
        }
        if let Some(eps) = self.epsilon {
            out.push_str(&format!("  epsilon: {eps:e}\n"));
        }
        if let Some(r) = &self.reason {
            out.push_str(&format!("  reason: {r}\n"));
        }
        if let Some(cert) = &self.certificate {
            out.push_str(&format!(
                "  certificate: {}\n",
                serde_json::to_string(cert).expect("certificate serializes")
            ));
        }
        if let Some(w) = &self.witness {
            out.push_str(&format!(
                "  witness: belief {:?}, eu(incumbent) = {:.9}, eu(best rival) = {:.9}, \
                 eu(candidate) = {:.9}\n",
                w.belief.probs(),
                w.eu_a,
                w.eu_b,
                w.eu_ahat
            ));
            out.push_str(&format!(
                "  witness utility: knots {:?}, slopes {:?}\n",
                w.utility.knots(),
                w.utility.segment_slopes()
            ));
        }
        if let Some(d) = &self.diagnostics {
            out.push_str(&format!(
                "  diagnostics: {}\n",
                serde_json::to_string(d).expect("diagnostics serialize")
            ));
        }
        for n in &self.notes {
            out.push_str(&format!("  note: {n}\n"));
        }
        out
    }
}
