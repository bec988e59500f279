use super::*;
use crate::modes::Kind;
use crate::{corpus, parse_program, parse_query, parse_term};

fn prog(src: &str) -> Program {
    parse_program(src).unwrap()
}

fn q(s: &str) -> Vec<Atom> {
    parse_query(s).unwrap()
}

fn left_based(policy: WakePolicy) -> RunOptions {
    RunOptions { trace: true, ..RunOptions::with_rule(SelectionRule::LeftBased(policy)) }
}

fn selected(o: &Outcome) -> Vec<String> {
    o.trace.as_ref().unwrap().iter().map(|s| s.atom.to_string()).collect()
}

fn answer(o: &Outcome, i: usize, var: &str) -> String {
    o.solutions[i].get(&Var::new(var)).map(|t| t.to_string()).unwrap_or_else(|| var.to_string())
}

#[test]
fn blocked_examples() {
    let decl = prog(":- block append(-,?,-), append(?,-,-).\nappend([],Y,Y).\n").block(&Pred::new("append", 3));
    let a = |s: &str| q(s).remove(0);
    assert!(is_blocked(&a("append(X,[2|Y],Z)"), &decl));
    assert!(!is_blocked(&a("append(X,[2|Y],[1|Z])"), &decl));
    assert!(!is_blocked(&a("append(X,Y,Z)"), &BlockDecl::empty()));
}

#[test]
fn woken_atoms_run_before_the_rest() {
    let p = prog(corpus::WAKE);
    let o = run(&p, &q("a(X), b(X), c(X), d"), &left_based(WakePolicy::LatestSuspendedFirst));
    assert_eq!(o.status, Status::Success);
    assert_eq!(selected(&o), ["c(X)", "b(1)", "b2(1)", "a(1)", "d"]);
    let t = o.trace.unwrap();
    // a and b wait from the start; b2 inherits
    assert_eq!(t[0].waiting, [1, 2]);
    assert_eq!(t[2].waiting, [1, 2]);
    assert_eq!(t[4].waiting, Vec::<usize>::new());

    let fifo = run(&p, &q("a(X), b(X), c(X), d"), &left_based(WakePolicy::NewlyWokenFirst));
    assert_eq!(selected(&fifo), ["c(X)", "a(1)", "b(1)", "b2(1)", "d"]);
    let leftmost = run(&p, &q("a(X), b(X), c(X), d"), &left_based(WakePolicy::LeftmostWaitingFirst));
    assert_eq!(selected(&leftmost), ["c(X)", "a(1)", "b(1)", "b2(1)", "d"]);
}

#[test]
fn ld_ignores_blocks() {
    let p = prog(corpus::WAKE);
    let o = run(&p, &q("a(X), b(X), c(X), d"), &RunOptions { trace: true, ..RunOptions::with_rule(SelectionRule::Ld) });
    assert_eq!(o.status, Status::Success);
    assert_eq!(selected(&o), ["a(X)", "b(1)", "b2(1)", "c(1)", "d"]);
}

#[test]
fn permute_with_sufficient_input() {
    let p = prog(corpus::PERMUTE);
    let o = run(&p, &q("permute(A,[1,2])"), &RunOptions::default());
    assert_eq!(o.status, Status::Success);
    let mut got: Vec<String> = (0..o.solutions.len()).map(|i| answer(&o, i, "A")).collect();
    got.sort();
    assert_eq!(got, ["[1,2]", "[2,1]"]);
    let fwd = run(&p, &q("permute([1,2,3],Y)"), &RunOptions::default());
    assert_eq!(fwd.solutions.len(), 6);
}

#[test]
fn insufficient_input_loops() {
    let p = prog(corpus::PERMUTE);
    let o = run(&p, &q("permute(A,[1|B])"), &RunOptions::default());
    assert_eq!(o.status, Status::LimitExceeded);
    assert_eq!(o.steps, DEFAULT_STEP_LIMIT);
}

#[test]
fn recursive_call_first_loops() {
    let p = prog(corpus::PERMUTE_LOOPS);
    let o = run(&p, &q("permute(V,[1])"), &RunOptions::default());
    assert_eq!(o.status, Status::LimitExceeded);
    // the same program terminates in the other direction
    let fwd = run(&p, &q("permute([1,2,3],Y)"), &RunOptions::default());
    assert_eq!(fwd.status, Status::Success);
    assert_eq!(fwd.solutions.len(), 6);
}

fn is_queens(t: &Term, n: usize) -> bool {
    let mut cols = Vec::new();
    let mut cur = t.clone();
    while let Term::App(f, args) = &cur {
        match (&**f, args.len()) {
            (".", 2) => match &args[0] {
                Term::Int(i) => {
                    cols.push(*i);
                    cur = args[1].clone();
                }
                _ => return false,
            },
            ("[]", 0) => break,
            _ => return false,
        }
    }
    cols.len() == n
        && cols.iter().all(|&c| c >= 1 && c <= n as i64)
        && (0..n).all(|i| (i + 1..n).all(|j| cols[i] != cols[j] && (cols[i] - cols[j]).abs() != (j - i) as i64))
}

#[test]
fn four_queens() {
    let p = prog(corpus::NQUEENS);
    let o = run(&p, &q("nqueens(4,Sol)"), &RunOptions::default());
    assert_eq!(o.status, Status::Success);
    assert_eq!(o.solutions.len(), 2);
    for s in &o.solutions {
        assert!(is_queens(s.get(&Var::new("Sol")).unwrap(), 4));
    }
}

#[test]
fn generator_last_loops() {
    let p = prog(corpus::NQUEENS_SEQUENCE_LAST);
    let o = run(&p, &q("nqueens(4,Sol)"), &RunOptions::default());
    assert_eq!(o.status, Status::LimitExceeded);
}

#[test]
fn ld_matches_left_based_when_leftmost_is_always_selectable() {
    let p = prog(corpus::PERMUTE);
    let mut ld = RunOptions::with_rule(SelectionRule::Ld);
    ld.trace = true;
    let a = run(&p, &q("permute(A,[1,2,3])"), &ld);
    let b = run(&p, &q("permute(A,[1,2,3])"), &left_based(WakePolicy::default()));
    assert_eq!(a.trace, b.trace);
    assert_eq!(a.solutions, b.solutions);
}

#[test]
fn random_rule_replays() {
    let p = prog(corpus::NQUEENS);
    let opts = RunOptions { trace: true, ..RunOptions::with_rule(SelectionRule::Random(7)) };
    let a = run(&p, &q("nqueens(4,Sol)"), &opts);
    let b = run(&p, &q("nqueens(4,Sol)"), &opts);
    assert_eq!(a.trace, b.trace);
    assert_eq!(a.solutions.len(), 2);
    let c = run(&p, &q("nqueens(4,Sol)"), &RunOptions { trace: true, ..RunOptions::with_rule(SelectionRule::Random(8)) });
    assert_eq!(c.solutions.len(), 2);
}

#[test]
fn empty_query_succeeds_once() {
    let p = prog(corpus::PERMUTE);
    let o = run(&p, &[], &RunOptions::default());
    assert_eq!(o.status, Status::Success);
    assert_eq!(o.solutions, vec![Subst::new()]);
    assert_eq!(o.steps, 0);
}

#[test]
fn flounder_is_counted() {
    let p = prog(corpus::PERMUTE);
    let o = run(&p, &q("permute(A,B)"), &RunOptions::default());
    assert_eq!(o.status, Status::Floundered);
    assert_eq!(o.flounders, 1);
}

#[test]
fn builtin_errors() {
    let p = prog("p(X,Y) :- Y is X + 1.\n");
    let o = run(&p, &q("p(A,B)"), &RunOptions::default());
    assert_eq!(o.status, Status::InstantiationError);
    let o = run(&p, &q("p(a,B)"), &RunOptions::default());
    assert_eq!(o.status, Status::TypeError);
    let o = run(&p, &q("p(2,B)"), &RunOptions::default());
    assert_eq!(answer(&o, 0, "B"), "3");
    let o = run(&p, &q("p(2,4)"), &RunOptions::default());
    assert_eq!(o.status, Status::Failure);
}

#[test]
fn occur_check_fails_cyclic_unification() {
    let p = prog("eq(X,X).\n");
    assert_eq!(run(&p, &q("eq(Y,f(Y))"), &RunOptions::default()).status, Status::Failure);
}

#[test]
fn solution_limit() {
    let p = prog(corpus::PERMUTE);
    let opts = RunOptions { limits: Limits { steps: 1000, solutions: Some(1) }, ..Default::default() };
    let o = run(&p, &q("permute([1,2,3],Y)"), &opts);
    assert_eq!(o.status, Status::Success);
    assert_eq!(o.solutions.len(), 1);
}

#[test]
fn answers_are_resolved() {
    let p = prog(corpus::QSORT);
    let o = run(&p, &q("qsort([3,1,2],Ys)"), &RunOptions::default());
    assert_eq!(o.solutions.len(), 1);
    assert_eq!(o.solutions[0].get(&Var::new("Ys")), Some(&parse_term("[1,2,3]").unwrap()));
    let o = run(&p, &q("qsort(L,[1,2,3])"), &RunOptions::default());
    assert_eq!(o.status, Status::Success);
    assert_eq!(o.solutions.len(), 6);
}

#[test]
fn pi_tracking_follows_clause_orders() {
    // permute([1],Y) in M1 with the recursive call placed first by ρ
    let p = prog(corpus::PERMUTE);
    let mut opts = left_based(WakePolicy::default());
    opts.clause_orders.insert(1, Permutation::new(vec![2, 1]).unwrap());
    let o = run(&p, &q("permute([1],Y)"), &opts);
    let t = o.trace.unwrap();
    // delete(1,Y,Z) is blocked, so step 2 takes permute([],Z): textually
    // second, first under ρ
    assert_eq!((t[1].index, t[1].pi_position), (2, 1));
    assert_eq!((t[2].index, t[2].pi_position), (1, 1));
}

fn monitor_clean(src: &str, query: &str, mode: &str, kind: Kind) -> MonitorReport {
    let p = prog(src);
    let cfg = MonitorConfig { kind, mode: mode.into(), waivers: Vec::new() };
    let o = monitor(&p, &q(query), &cfg, &RunOptions::default()).unwrap();
    assert_ne!(o.status, Status::LimitExceeded);
    o.monitor.unwrap()
}

#[test]
fn monitor_qsort_reverse_mode() {
    let r = monitor_clean(corpus::QSORT, "qsort(L,[1,2,3])", "M2", Kind::Robustly);
    assert!(r.is_clean(), "{:?}", r.violations);
    assert!(r.checked_steps > 50);
    assert_eq!(r.unchecked_steps, 0);
}

#[test]
fn monitor_on_corpus_queries() {
    for (src, query, mode, kind) in [
        (corpus::PERMUTE, "permute(A,[1,2,3])", "M2", Kind::Nicely),
        (corpus::PERMUTE, "permute([1,2,3],Y)", "M1", Kind::Simply),
        (corpus::QSORT, "qsort([3,1,2],Ys)", "M1", Kind::Simply),
        (corpus::TREE_LIST, "treeList(T,[a,b,c])", "M2", Kind::Robustly),
        (corpus::NQUEENS, "nqueens(4,Sol)", "M1", Kind::Well),
    ] {
        let r = monitor_clean(src, query, mode, kind);
        assert!(r.is_clean(), "{query}: {:?}", r.violations);
        assert!(r.checked_steps > 0);
    }
}

#[test]
fn monitor_reports_break_outside_preconditions() {
    let p = prog(corpus::PERMUTE_LOOPS);
    let cfg = MonitorConfig { kind: Kind::Nicely, mode: "test".into(), waivers: Vec::new() };
    // delete(X,[X|Z],Z) repeats X among its inputs, so those steps are not
    // covered; the resolvents stay nicely moded regardless
    let o = monitor(&p, &q("permute([1,2],[2,1])"), &cfg, &RunOptions::default()).unwrap();
    let r = o.monitor.unwrap();
    assert!(r.is_clean());
    assert!(r.unchecked_steps > 0);
    assert!(r.breaks.is_empty());
}

#[test]
fn monitor_refuses_unchecked_programs() {
    let p = prog(corpus::QSORT);
    let cfg = MonitorConfig { kind: Kind::Simply, mode: "M2".into(), waivers: Vec::new() };
    assert!(monitor(&p, &q("qsort(L,[1,2,3])"), &cfg, &RunOptions::default()).is_err());
}

#[test]
fn monitor_empty_query() {
    let p = prog(corpus::PERMUTE);
    let cfg = MonitorConfig { kind: Kind::Nicely, mode: "M1".into(), waivers: Vec::new() };
    let o = monitor(&p, &[], &cfg, &RunOptions::default()).unwrap();
    let r = o.monitor.unwrap();
    assert!(r.is_clean());
    assert_eq!(r.checked_steps, 0);
}
