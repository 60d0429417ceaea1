//! Breaking-news detection from concurrent multi-language Wikipedia and
//! Wikidata edits, illustrated with deduplicated, ranked social media laid
//! out as justified-row and square-mosaic galleries.

pub mod concept_graph;
pub mod dedup_rank;
pub mod edit_stream;
pub mod error;
pub mod layout;
pub mod media_ingest;
pub mod metrics;
pub mod pipeline;
pub mod render;
pub mod spike_detector;
pub mod text;
pub mod union_find;

pub use error::{Error, Result};
