//! Bias-aware experimental design: moment matrices and MSE criteria for
//! misspecified linear models, the design/bias game between two players,
//! backdoor adjustment on causal DAGs, and two-group covariate balance.

pub mod balance;
pub mod causal;
pub mod criteria;
pub mod design;
pub mod error;
pub mod game;
pub mod numerics;

pub use error::{Error, Result};
pub use numerics::Matrix;
