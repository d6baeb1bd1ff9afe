//! Cross-module properties and end-to-end pipelines.

mod properties;
