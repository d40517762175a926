use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("infeasible configuration: 1 - tau >= 1/M_h violated (1 - {tau} = {slack} < 1/{pilot_period} = {bound})")]
    Infeasible {
        tau: f64,
        pilot_period: usize,
        slack: f64,
        bound: f64,
    },
    #[error("pilot band limit violated: omega_h = {omega} > pi/(M*M_h) = {limit}")]
    PilotBandLimit { omega: f64, limit: f64 },
    #[error("pilot coverage: gcd(M = {sub_adcs}, M_h = {pilot_period}) must be 1 so every sub-ADC observes the pilot")]
    PilotCoverage { sub_adcs: usize, pilot_period: usize },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("numerical degeneracy: innovation variance S = {s} is not positive")]
    NumericalDegeneracy { s: f64 },
    #[error("gain degeneracy at sample {sample}: |1 + beta_hat| = {gain} < 1e-6")]
    GainDegeneracy { sample: usize, gain: f64 },
    #[error("singular row {row}: center tap {center} below 1e-9 in magnitude")]
    SingularRow { row: usize, center: f64 },
    #[error("undefined NMSE: reference energy is zero")]
    UndefinedNmse,
    #[error("length mismatch: {context} ({left} vs {right})")]
    LengthMismatch {
        context: &'static str,
        left: usize,
        right: usize,
    },
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
