//! The bundled example programs.

pub const PERMUTE_LOOPS: &str = include_str!("../corpus/permute_loops.pl");
pub const PERMUTE: &str = include_str!("../corpus/permute.pl");
pub const DELETE_SPECIFIC: &str = include_str!("../corpus/delete_specific.pl");
pub const QSORT: &str = include_str!("../corpus/qsort.pl");
pub const TREE_LIST: &str = include_str!("../corpus/tree_list.pl");
pub const IS_LIST: &str = include_str!("../corpus/is_list.pl");
pub const LENGTH: &str = include_str!("../corpus/length.pl");
pub const NQUEENS: &str = include_str!("../corpus/nqueens.pl");
pub const NQUEENS_SEQUENCE_LAST: &str = include_str!("../corpus/nqueens_sequence_last.pl");
pub const WAKE: &str = include_str!("../corpus/wake.pl");

/// File stem and source of every bundled program.
pub const ALL: &[(&str, &str)] = &[
    ("permute_loops", PERMUTE_LOOPS),
    ("permute", PERMUTE),
    ("delete_specific", DELETE_SPECIFIC),
    ("qsort", QSORT),
    ("tree_list", TREE_LIST),
    ("is_list", IS_LIST),
    ("length", LENGTH),
    ("nqueens", NQUEENS),
    ("nqueens_sequence_last", NQUEENS_SEQUENCE_LAST),
    ("wake", WAKE),
];

pub fn get(name: &str) -> Option<&'static str> {
    ALL.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}
