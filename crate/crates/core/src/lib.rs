pub mod absa;
pub mod cli;
pub mod clustering;
pub mod eval;
pub mod ingest;
pub mod io;
pub mod keypoints;
pub mod llm;
pub mod model;
