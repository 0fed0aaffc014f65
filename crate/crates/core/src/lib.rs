pub mod cli;
pub mod delegation;
pub mod distributions;
pub mod error;
pub mod experiments;
pub mod ic_verification;
pub mod mic;
pub mod numeric;
pub mod oracle;
pub mod persuasion;
pub mod table;
