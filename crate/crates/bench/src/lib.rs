//! Shared fixtures for the criterion benches.

use blockcheck::{corpus, parse_program, Atom, Program, Term};

pub fn program(name: &str) -> Program {
    parse_program(corpus::get(name).expect("bundled program")).expect("bundled program parses")
}

/// Two unifiable atoms whose arguments are lists of `n` nested pairs, one
/// side ground and the other full of fresh variables.
pub fn list_pair(n: usize) -> (Atom, Atom) {
    let ground: Vec<Term> = (0..n as i64).map(|i| Term::app("p", vec![Term::Int(i), Term::int_list(&[i, i + 1])])).collect();
    let open: Vec<Term> = (0..n).map(|i| Term::app("p", vec![Term::var(&format!("X{i}")), Term::var(&format!("Y{i}"))])).collect();
    (Atom::new("q", vec![Term::list(ground, Term::nil())]), Atom::new("q", vec![Term::list(open, Term::var("T"))]))
}
