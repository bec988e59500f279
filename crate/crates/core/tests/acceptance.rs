//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on failure.

mod support;

use std::collections::BTreeSet;
use std::time::Instant;

use blockcheck::builtins::{check_bground, default_bset, head_linearity_waivers, omit_blocks_by_safety, waiver_pairs};
use blockcheck::engine::{monitor, run, MonitorConfig, Limits, RunOptions, SelectionRule, Status, WakePolicy};
use blockcheck::gen::QueryGen;
use blockcheck::modes::{Checker, Kind};
use blockcheck::termination::{termination_verdict, Approach, TerminationOptions};
use blockcheck::term::{unify_terms, Permutation};
use blockcheck::{corpus, parse_program, parse_query, BlockDecl, Pred, Program, Term, Var};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Check = Result<(), String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Check {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn prog(src: &str) -> Program {
    parse_program(src).expect("corpus parses")
}

fn perm(v: &[usize]) -> Permutation {
    Permutation::new(v.to_vec()).unwrap()
}

fn classification() -> Check {
    let p = prog(corpus::PERMUTE_LOOPS);
    let m1 = Checker::new(&p, "M1");
    ensure(m1.check_program(Kind::Nicely).holds, || "delete-last permute M1 not nicely moded".into())?;
    ensure(m1.input_linear(&[]).holds, || "delete-last permute M1 not input-linear".into())?;
    let m2 = Checker::new(&p, "M2").check_program(Kind::Nicely);
    ensure(m2.holds, || "delete-last permute M2 not permutation nicely moded".into())?;
    ensure(m2.witness_for(1) == Some(&perm(&[2, 1])), || format!("clause 2 witness {:?}", m2.witness_for(1)))?;
    ensure(!Checker::new(&p, "test").input_linear(&[]).holds, || "test mode reported input-linear".into())?;

    let q = prog(corpus::QSORT);
    ensure(Checker::new(&q, "M1").check_program(Kind::Simply).holds, || "qsort M1 not simply typed".into())?;
    let m2 = Checker::new(&q, "M2");
    ensure(!m2.check_program(Kind::Simply).holds, || "qsort M2 reported simply typed".into())?;
    ensure(m2.check_program(Kind::Robustly).holds, || "qsort M2 not robustly typed".into())?;
    let bound = m2.bf.bound_outputs(&q, "M2");
    ensure(bound == vec![(Pred::new("append", 3), 1)], || format!("qsort M2 bound outputs {bound:?}"))?;

    let t = prog(corpus::TREE_LIST);
    for m in ["M1", "M2"] {
        ensure(Checker::new(&t, m).check_program(Kind::Robustly).holds, || format!("tree_list {m} not robustly typed"))?;
    }
    Ok(())
}

fn derived_permutation() -> Check {
    let got = Permutation::derived(&perm(&[4, 3, 1, 2]), &perm(&[2, 1]), 2).map_err(|e| e.to_string())?;
    ensure(got == perm(&[5, 4, 3, 1, 2]), || format!("worked example gave {got}"))?;
    let mut cases = 0;
    for n in 1..=4 {
        for m in 0..=4 {
            for pi in Permutation::all(n) {
                for rho in Permutation::all(m) {
                    for k in 1..=n {
                        let d = Permutation::derived(&pi, &rho, k).map_err(|e| format!("{pi} {rho} {k}: {e}"))?;
                        let want = support::derived_by_order(pi.image(), rho.image(), k);
                        ensure(d.image() == want.as_slice(), || format!("{pi} {rho} k={k}: {d} vs {want:?}"))?;
                        cases += 1;
                    }
                }
            }
        }
    }
    ensure(cases > 4000, || format!("only {cases} cases"))
}

fn termination() -> Check {
    use Approach::*;
    let opts = TerminationOptions::default();
    let cert = |src: &str, mode: &str| termination_verdict(&prog(src), mode, None, &opts).certifying();
    let expect = |name: &str, src: &str, mode: &str, want: &[Approach], exact: bool| -> Check {
        let got = cert(src, mode);
        let ok = if exact { got == want } else { want.iter().all(|a| got.contains(a)) && !got.is_empty() };
        ensure(ok, || format!("{name} {mode}: certified by {got:?}, expected {want:?}"))
    };
    expect("permute", corpus::PERMUTE, "M1", &[NonSpeculative], false)?;
    expect("permute", corpus::PERMUTE, "M2", &[LeftEqLd], false)?;
    expect("delete_specific", corpus::DELETE_SPECIFIC, "M2", &[LeftEqLd], false)?;
    expect("is_list", corpus::IS_LIST, "default", &[NonSpeculative], true)?;
    expect("qsort", corpus::QSORT, "M1", &[WellFed], true)?;
    expect("qsort", corpus::QSORT, "M2", &[WellFed], true)?;
    expect("nqueens", corpus::NQUEENS, "M1", &[WellFed], true)?;
    expect("nqueens", corpus::NQUEENS, "M2", &[], true)
}

fn engine_behaviour() -> Check {
    let lb = RunOptions::default();
    let q = |s: &str| parse_query(s).unwrap();
    let o = run(&prog(corpus::PERMUTE_LOOPS), &q("permute(V,[1])"), &lb);
    ensure(o.status == Status::LimitExceeded, || format!("permute(V,[1]) on delete-last permute: {}", o.status))?;
    let p = prog(corpus::PERMUTE);
    let o = run(&p, &q("permute(A,[1,2])"), &lb);
    let answers: BTreeSet<String> = o.solutions.iter().map(|s| s.get(&Var::new("A")).unwrap().to_string()).collect();
    ensure(o.status == Status::Success && o.solutions.len() == 2, || format!("permute(A,[1,2]): {} with {}", o.status, o.solutions.len()))?;
    ensure(answers == ["[1,2]", "[2,1]"].map(String::from).into(), || format!("answers {answers:?}"))?;
    let o = run(&p, &q("permute(A,[1|B])"), &lb);
    ensure(o.status == Status::LimitExceeded, || format!("permute(A,[1|B]): {}", o.status))?;
    let o = run(&prog(corpus::NQUEENS), &q("nqueens(4,Sol)"), &lb);
    ensure(o.status == Status::Success, || format!("nqueens(4,Sol): {}", o.status))?;
    ensure(o.steps < lb.limits.steps, || "nqueens(4,Sol) search did not finish".into())?;
    for s in &o.solutions {
        let sol = s.get(&Var::new("Sol")).ok_or("Sol unbound")?;
        ensure(support::is_queens(sol, 4), || format!("invalid placement {sol}"))?;
    }
    let o = run(&prog(corpus::NQUEENS_SEQUENCE_LAST), &q("nqueens(4,Sol)"), &lb);
    ensure(o.status == Status::LimitExceeded, || format!("nqueens with sequence last: {}", o.status))
}

fn builtin_safety() -> Check {
    let qs = prog(corpus::QSORT);
    let v = blockcheck::builtins::builtin_safety(&qs, "M1", &[], None);
    ensure(v.holds, || format!("qsort M1 built-ins not certified: {v}"))?;
    let checker = Checker::new(&qs, "M1");
    let mut g = QueryGen::new(&qs, "M1", 0x5eed);
    let queries = g.queries(100);
    ensure(queries.len() == 100, || "generator produced too few queries".into())?;
    for (i, query) in queries.iter().enumerate() {
        ensure(checker.check_query(Kind::Simply, query).is_ok(), || format!("{} not simply typed", query[0]))?;
        for rule in [SelectionRule::default(), SelectionRule::Random(i as u64)] {
            let o = run(&qs, query, &RunOptions::with_rule(rule));
            ensure(!matches!(o.status, Status::InstantiationError | Status::TypeError), || {
                format!("{} under {rule:?}: {} {}", query[0], o.status, o.error.unwrap_or_default())
            })?;
        }
    }

    let nq = prog(corpus::NQUEENS);
    let bset = default_bset(&nq);
    let names: BTreeSet<String> = bset.iter().map(|p| p.to_string()).collect();
    let want: BTreeSet<String> = ["</2", "is/2", "=\\=/2"].map(String::from).into();
    ensure(names == want, || format!("default B-set {names:?}"))?;
    let query = parse_query("nqueens(4,Sol)").unwrap();
    let v = check_bground(&nq, "M1", &bset, &[], Some(&query));
    ensure(v.holds, || format!("nqueens not B-ground: {v}"))?;
    for seed in 0..50 {
        let opts = RunOptions {
            trace: true,
            limits: Limits { steps: 5_000, solutions: None },
            ..RunOptions::with_rule(SelectionRule::Random(seed))
        };
        let o = run(&nq, &query, &opts);
        ensure(!matches!(o.status, Status::InstantiationError | Status::TypeError), || format!("seed {seed}: {}", o.status))?;
        for s in o.trace.unwrap_or_default() {
            let p = s.atom.pred();
            if !bset.contains(&p) {
                continue;
            }
            let mode = nq.mode_of("M1", &p).map_err(|e| e.to_string())?;
            ensure(mode.inputs().all(|i| s.atom.args[i].is_ground()), || format!("seed {seed} step {}: {} selected with non-ground input", s.step, s.atom))?;
        }
    }
    Ok(())
}

fn block_simplification() -> Check {
    let nq = prog(corpus::NQUEENS);
    let query = parse_query("nqueens(4,Sol)").unwrap();
    let seq = Pred::new("sequence", 2);
    let omit = omit_blocks_by_safety(&nq, "M1", &[&query])?;
    ensure(omit.iter().any(|(p, _)| *p == seq), || format!("sequence not omittable: {omit:?}"))?;
    let simpler = nq.with_block(&seq, BlockDecl::empty());
    for policy in [WakePolicy::NewlyWokenFirst, WakePolicy::LatestSuspendedFirst, WakePolicy::LeftmostWaitingFirst] {
        let opts = RunOptions { trace: true, ..RunOptions::with_rule(SelectionRule::LeftBased(policy)) };
        let before = run(&nq, &query, &opts);
        let after = run(&simpler, &query, &opts);
        let (a, b) = (before.trace.unwrap(), after.trace.unwrap());
        if let Some(i) = (0..a.len().min(b.len())).find(|&i| a[i] != b[i]) {
            return Err(format!("{policy:?}: traces differ at step {}: `{}` vs `{}`", i + 1, a[i], b[i]));
        }
        ensure(a.len() == b.len() && before.status == after.status, || format!("{policy:?}: {} vs {} steps", a.len(), b.len()))?;
        ensure(!a.is_empty() && before.status == Status::Success, || "no derivation to compare".into())?;
    }
    Ok(())
}

/// Monitored runs stop after this many steps; the monitor rechecks the whole
/// resolvent every step, so looping queries grow quadratically in cost.
const MONITOR_STEPS: u64 = 200;

fn persistence_monitor() -> Check {
    let mut combos = 0;
    let mut checked = 0;
    for (name, src) in corpus::ALL {
        let p = prog(src);
        let modes: Vec<String> = p.mode_names().cloned().collect();
        for mode in &modes {
            let ch = Checker::new(&p, mode);
            let waivers = waiver_pairs(&head_linearity_waivers(&p, mode, &[]));
            let queries = QueryGen::new(&p, mode, 7).queries(100);
            for kind in Kind::ALL {
                if !ch.check_program(kind).holds {
                    continue;
                }
                combos += 1;
                let cfg = MonitorConfig { kind, mode: mode.clone(), waivers: waivers.clone() };
                let opts = RunOptions { limits: Limits { steps: MONITOR_STEPS, solutions: None }, ..RunOptions::default() };
                for q in &queries {
                    let o = monitor(&p, q, &cfg, &opts).map_err(|e| format!("{name} {mode} {kind}: {} refused: {e}", q[0]))?;
                    let r = o.monitor.expect("monitored run has a report");
                    if let Some(v) = r.violations.first() {
                        return Err(format!("{name} {mode} {kind}: {} step {}: {} {}", q[0], v.step, v.check, v.detail));
                    }
                    checked += r.checked_steps;
                }
            }
        }
    }
    ensure(combos > 0 && checked > 0, || "nothing monitored".into())
}

fn oracles() -> Check {
    // witness existence against all n! orders, for every body as written and reordered
    for (name, src) in corpus::ALL {
        let p = prog(src);
        let modes: Vec<String> = p.mode_names().cloned().collect();
        for mode in &modes {
            let ch = Checker::new(&p, mode);
            let mut bodies: Vec<(Option<blockcheck::Atom>, Vec<blockcheck::Atom>)> =
                p.clauses.iter().map(|c| (Some(c.head.clone()), c.body.clone())).collect();
            bodies.extend(p.queries_for(mode).map(|q| (None, q.to_vec())));
            for (head, body) in bodies {
                for order in Permutation::all(body.len()) {
                    let body = order.apply(&body);
                    for kind in Kind::ALL {
                        let fast = ch.find_permutation(kind, head.as_ref(), &body);
                        let slow = support::witness_exists(&ch, kind, head.as_ref(), &body);
                        ensure(fast.is_ok() == slow, || format!("{name} {mode} {kind}: body {body:?}: search {fast:?}, brute force {slow}"))?;
                        if let Ok(pi) = fast {
                            ensure(ch.check_with(kind, head.as_ref(), &body, &pi).is_ok(), || format!("{name}: witness {pi} rejected"))?;
                        }
                    }
                }
            }
        }
    }

    // unification against the naive algorithm
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut unifiable = 0;
    for _ in 0..200 {
        let a = support::random_term(&mut rng, 3);
        let b = support::perturb(&mut rng, &a, 3);
        let got = unify_terms(std::slice::from_ref(&a), std::slice::from_ref(&b), true);
        let want = support::naive_mgu(&a, &b);
        match (got, want) {
            (Ok(s), Some(w)) => {
                unifiable += 1;
                let (sa, sb) = (s.apply(&a), s.apply(&b));
                ensure(sa == sb, || format!("{a} = {b}: {sa} vs {sb}"))?;
                ensure(s.is_idempotent(), || format!("{a} = {b}: non-idempotent"))?;
                let wa = support::apply(&w, &a);
                ensure(support::is_variant(&sa, &wa), || format!("{a} = {b}: {sa} is not a variant of {wa}"))?;
            }
            (Err(_), None) => {}
            (g, w) => return Err(format!("{a} = {b}: unifier {g:?}, oracle {w:?}")),
        }
    }
    ensure((20..=180).contains(&unifiable), || format!("unbalanced sample: {unifiable} unifiable"))?;

    // type membership against enumerated derivations
    let (tt, names, ints) = support::type_fixture();
    let en = support::enumerate_types(&tt, &names, &ints, 4);
    let mut probes: BTreeSet<Term> = en.sets.values().flatten().cloned().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    while probes.len() < en.sets.values().map(|s| s.len()).sum::<usize>() + 2000 {
        probes.insert(support::type_probe(&mut rng, 4));
    }
    for t in &probes {
        for ty in &names {
            let got = tt.member(t, ty).map_err(|e| e.to_string())?;
            ensure(got == en.sets[*ty].contains(t), || format!("{t} : {ty} gave {got}"))?;
        }
    }
    Ok(())
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("classification table", classification),
        ("derived permutation", derived_permutation),
        ("termination verdicts", termination),
        ("engine loop and termination behaviour", engine_behaviour),
        ("built-in safety", builtin_safety),
        ("block simplification", block_simplification),
        ("persistence monitor", persistence_monitor),
        ("oracle equivalences", oracles),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        match f() {
            Ok(()) => println!("PASS {} {name} ({:.1?})", i + 1, t.elapsed()),
            Err(e) => {
                failed += 1;
                println!("FAIL {} {name}: {e}", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
