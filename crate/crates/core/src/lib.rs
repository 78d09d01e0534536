pub mod corpus;
pub mod error;
pub mod featurizer;
pub mod linear;
