//! Reference oracles and the acceptance suite shared by the test targets and
//! the `validate` command.

pub mod criteria;
pub mod oracles;

pub use criteria::{run_all, CriterionReport, GOLDEN_CONFIG};
