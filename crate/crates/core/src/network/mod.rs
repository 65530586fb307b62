//! Color networks, conditioned color trees and the glued metric network.

mod color;
mod contour;
mod export;
mod glued;
mod sample;
mod tree;

pub use color::{decorate, Attachment, ColorNetwork, EndKind, Lineage};
pub use contour::{contour, Contour};
pub use export::{edge_list_csv, to_newick};
pub use glued::{distance, glue, uniform_point, GlueRef, GluedNetwork, PointRef};
pub use sample::{sample_network, DecorationPool, NetworkMethod, NetworkSampler};
pub use tree::{sample_genealogy_tree, GenealogyTree, TreeMethod};
