use thiserror::Error;

/// Offending constraint reported when no feasible point can be reached.
#[derive(Debug, Clone, PartialEq)]
pub struct ViolatedConstraint {
    pub index: usize,
    pub label: String,
    pub violation: f64,
}

impl std::fmt::Display for ViolatedConstraint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "#{} {} (violation {:.3e})", self.index, self.label, self.violation)
    }
}

#[derive(Debug, Error)]
pub enum DfrcError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("infeasible: {context}; worst constraints: {}", format_worst(.worst))]
    Infeasible {
        context: String,
        worst: Vec<ViolatedConstraint>,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl DfrcError {
    pub fn is_infeasible(&self) -> bool {
        matches!(self, DfrcError::Infeasible { .. })
    }
}

fn format_worst(worst: &[ViolatedConstraint]) -> String {
    if worst.is_empty() {
        return "none".to_string();
    }
    worst
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(", ")
}

pub type Result<T> = std::result::Result<T, DfrcError>;
