pub const SLLIST: &str = include_str!("../../corpus/sllist.imp");
pub const BSTREE: &str = include_str!("../../corpus/bstree.imp");
pub const SET: &str = include_str!("../../corpus/set.imp");
