//! Multi-relational molecular graphs: the data model, MOL/SDF ingestion,
//! atom and bond featurization, ring detection and synthetic datasets.

mod featurize;
mod graph;
mod labels;
mod molfile;
mod rings;
mod synthetic;

pub use featurize::{atom_slots, featurize, Vocabulary, COUNT_SLOTS};
pub use graph::{AtomNode, Edge, GraphError, MolecularGraph};
pub use labels::{parse_labels_csv, write_labels_csv, LabelError, LabelRow, LabeledExample};
pub use molfile::{parse_molfile, parse_sdf, write_molfile, ParseError, SdfRecord, BOND_TYPES};
pub use rings::detect_ring_edges;
pub use synthetic::{contains_motif, generate_synthetic, Motif, SyntheticError, SyntheticSpec, SYNTHETIC_ALPHABET};
