use std::fmt;
use std::path::Path;

/// Process exit status classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitClass {
    Runtime = 1,
    Config = 2,
    Data = 3,
}

#[derive(Debug)]
pub struct CliError {
    pub class: ExitClass,
    pub error: anyhow::Error,
}

impl CliError {
    pub fn new(class: ExitClass, error: impl Into<anyhow::Error>) -> CliError {
        CliError { class, error: error.into() }
    }

    pub fn config(msg: impl fmt::Display) -> CliError {
        CliError::new(ExitClass::Config, anyhow::anyhow!("{msg}"))
    }

    pub fn data(msg: impl fmt::Display) -> CliError {
        CliError::new(ExitClass::Data, anyhow::anyhow!("{msg}"))
    }

    pub fn code(&self) -> i32 {
        self.class as i32
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

pub fn classify(e: &vlbias::Error) -> ExitClass {
    use vlbias::Error as E;
    if e.is_config() {
        return ExitClass::Config;
    }
    match e {
        E::Data(_)
        | E::PoolExhausted { .. }
        | E::Unscored(_)
        | E::UndefinedKappa
        | E::Join(_)
        | E::EmptyDistribution(_)
        | E::Coverage(_)
        | E::Insufficient(_)
        | E::Json(_)
        | E::Csv(_) => ExitClass::Data,
        _ => ExitClass::Runtime,
    }
}

impl From<vlbias::Error> for CliError {
    fn from(e: vlbias::Error) -> CliError {
        CliError::new(classify(&e), e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> CliError {
        CliError::new(ExitClass::Runtime, e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> CliError {
        CliError::new(ExitClass::Data, e)
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> CliError {
        CliError::new(ExitClass::Data, e)
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub trait Context<T> {
    fn context(self, msg: impl fmt::Display) -> CliResult<T>;
}

impl<T, E: Into<CliError>> Context<T> for Result<T, E> {
    fn context(self, msg: impl fmt::Display) -> CliResult<T> {
        self.map_err(|e| {
            let e: CliError = e.into();
            CliError { class: e.class, error: e.error.context(msg.to_string()) }
        })
    }
}

/// Read an input file; a missing or unreadable file is reported with `class`.
pub fn read_input(path: &Path, class: ExitClass) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::new(class, anyhow::anyhow!("cannot read {}: {e}", path.display())))
}
