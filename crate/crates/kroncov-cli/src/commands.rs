pub mod diagnose;
pub mod estimate;
pub mod simulate_risk;

use crate::Failure;

/// Classifies library errors into the data/numerical exit-code split.
pub fn lib_failure(e: kroncov::Error) -> Failure {
    use kroncov::Error as E;
    match e {
        E::DimMismatch(_) | E::ModeOutOfRange { .. } | E::InvalidArgument(_) | E::NotPsd { .. } => {
            Failure::Data(anyhow::anyhow!(e))
        }
        _ => Failure::Numerical(anyhow::anyhow!(e)),
    }
}
