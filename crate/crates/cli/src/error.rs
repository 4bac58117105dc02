use std::path::Path;

/// Process exit codes: 1 for invalid input or configuration, 2 for I/O.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Io(_) => 2,
        }
    }
}

/// Library errors with an `Io` variant count as I/O failures, all others as
/// validation failures. The path is prefixed to the message.
pub trait Classify<T> {
    fn at(self, path: &Path) -> Result<T, CliError>;
}

macro_rules! classify {
    ($($ty:ty),* $(,)?) => {$(
        impl<T> Classify<T> for Result<T, $ty> {
            fn at(self, path: &Path) -> Result<T, CliError> {
                type E = $ty;
                self.map_err(|e| match e {
                    E::Io(_) => CliError::io(path, e),
                    other => CliError::Validation(format!("{}: {other}", path.display())),
                })
            }
        }
    )*};
}

classify!(
    rovervision::imageproc::ImageError,
    rovervision::synthgen::SynthError,
    rovervision::tinynet::WeightsError,
    rovervision::features::FeatureError,
    rovervision::objpipe::ObjError,
    rovervision::recon::ReconError,
    rovervision::camgeo::rigfile::RigFileError,
);

impl<T> Classify<T> for std::io::Result<T> {
    fn at(self, path: &Path) -> Result<T, CliError> {
        self.map_err(|e| CliError::io(path, e))
    }
}
