pub mod backends;
pub mod corpus;
pub mod segmenter;
pub mod text;
pub mod metrics;
pub mod verifier;
