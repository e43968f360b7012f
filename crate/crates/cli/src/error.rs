use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] qtransport::Error),
    #[error("output error: {0}")]
    Output(String),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

pub const EXIT_OTHER: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;
pub const EXIT_REGIME: u8 = 4;

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use qtransport::Error as E;
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Core(E::RegimeBreakdown { .. }) => EXIT_REGIME,
            CliError::Core(e) if e.is_numerical() => EXIT_NUMERICAL,
            // parameter choices the physics rejects are configuration problems
            CliError::Core(
                E::MultiBoundState { .. }
                | E::NoBoundState { .. }
                | E::ZeroLambda
                | E::ZeroAcceleration
                | E::DegenerateInput(_)
                | E::Domain(_)
                | E::InvalidInput(_),
            ) => EXIT_CONFIG,
            _ => EXIT_OTHER,
        }
    }
}
