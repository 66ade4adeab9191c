use serde_json::json;

/// A failure reported as `{"error_kind", "detail"}` on standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub kind: String,
    pub detail: String,
}

impl CliError {
    pub fn new(kind: &str, detail: impl Into<String>) -> Self {
        CliError { kind: kind.to_string(), detail: detail.into() }
    }

    pub fn usage(detail: impl Into<String>) -> Self {
        CliError::new("usage", detail)
    }

    pub fn to_json(&self) -> String {
        json!({ "error_kind": self.kind, "detail": self.detail }).to_string()
    }
}

impl From<tickwork::Error> for CliError {
    fn from(e: tickwork::Error) -> Self {
        CliError::new(e.kind(), e.to_string())
    }
}
