//! Structure-grounded supervision corpora and evaluation metrics for
//! protein complexes and antibody CDR design.

pub mod anchor;
pub mod cli;
pub mod design;
pub mod fixtures;
pub mod geom;
pub mod grade;
pub mod labels;
pub mod structure;
pub mod tasks;
