//! Factoid question answering built around deep entity recognition.
//!
//! Entities found in text are linked to synsets of a wordnet-style taxonomy,
//! which lets an answer candidate be checked against the general type the
//! question asks for ("which bird ...") rather than only against a coarse
//! named-entity label.

pub mod answering;
pub mod corpus;
pub mod entity_library;
pub mod entity_matcher;
pub mod evalkit;
pub mod ner_adapter;
pub mod phrases;
pub mod question;
pub mod resources;
pub mod retrieval;
pub mod tagger;
pub mod taxonomy;
