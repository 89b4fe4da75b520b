use proptest::prelude::*;

use rlz::driver::*;
use rlz::extract::{beta_normalize, match_inputs};
use rlz::intersect::*;
use rlz::reduction::{default_ctx, Reducer, Strategy as Red};
use rlz::syntax::*;

const LEVELS: [Level; 3] = [Level::ST, Level::F, Level::FOmega];

fn level() -> impl Strategy<Value = Level> {
    prop::sample::select(LEVELS.to_vec())
}

fn metaterm(level: Level, seed: u64, depth: usize) -> Tm {
    gen_metaterm(&GenConfig::new(level, seed).with_depth(depth))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn printing_then_parsing_is_the_identity(level in level(), seed: u64, depth in 0usize..6) {
        let m = metaterm(level, seed, depth);
        let text = print_term(&m);
        prop_assert_eq!(parse_term(&text, level).unwrap(), m, "{}", text);
    }

    #[test]
    fn types_round_trip(level in level(), seed: u64) {
        let (_, a) = gen_closed_type(&GenConfig::new(level, seed));
        let text = print_type(&a);
        prop_assert_eq!(parse_type(&text, level).unwrap(), a, "{}", text);
    }

    #[test]
    fn typed_judgments_round_trip(level in level(), seed: u64) {
        if let Ok(j) = gen_typed_term(&GenConfig::new(level, seed)) {
            let t = print_term(&j.term);
            prop_assert_eq!(parse_term(&t, level).unwrap(), j.term.clone(), "{}", t);
            prop_assert!(rlz::typecheck::check(level, &j.ctx, &j.env, &j.term, &j.ty).is_ok());
        }
    }

    #[test]
    fn closing_then_instantiating_substitutes(seed: u64, depth in 0usize..5) {
        let m = metaterm(Level::F, seed, depth);
        let n = metaterm(Level::F, seed.wrapping_add(1), 2);
        prop_assume!(is_locally_closed(&n));
        for x in FreeNames::of_term(&m).terms {
            let direct = subst_term_var(&m, &x, &n);
            prop_assert_eq!(instantiate(&close(&m, &x), &n), direct.clone());
            prop_assert_eq!(close(&open(&close(&m, &x), &x), &x), close(&m, &x));
        }
    }

    #[test]
    fn substitutions_compose(seed: u64) {
        // m[x := n][y := p] = m[y := p][x := n[y := p]] when x is not free in p
        let m = metaterm(Level::ST, seed, 4);
        let n = metaterm(Level::ST, seed ^ 1, 2);
        let p = metaterm(Level::ST, seed ^ 2, 2);
        let (x, y) = (name("x"), name("y"));
        prop_assume!(is_locally_closed(&n) && is_locally_closed(&p) && !term_has_free(&p, &x));
        let left = subst_term_var(&subst_term_var(&m, &x, &n), &y, &p);
        let right = subst_term_var(&subst_term_var(&m, &y, &p), &x, &subst_term_var(&n, &y, &p));
        prop_assert_eq!(left, right);
    }

    #[test]
    fn spine_machine_takes_the_engine_steps(level in level(), seed: u64, fuel in 0u64..60) {
        let m = metaterm(level, seed, 5);
        let r = Reducer::new(level, default_ctx(&m));
        let slow = r.clone().recording(true).reduce(&m, Red::WeakHead, fuel);
        let fast = r.clone().reduce(&m, Red::WeakHead, fuel);
        prop_assert_eq!(fast.step_count, slow.step_count);
        prop_assert_eq!(fast.outcome, slow.outcome);
        prop_assert_eq!(fast.final_term, slow.final_term);
    }

    #[test]
    fn recorded_traces_chain_and_revalidate(level in level(), seed: u64) {
        let m = metaterm(level, seed, 5);
        let mut r = Reducer::new(level, default_ctx(&m));
        let tr = r.clone().recording(true).reduce(&m, Red::Random(seed), 200);
        prop_assert!(tr.is_chained());
        for s in &tr.steps {
            prop_assert!(r.revalidate(s));
        }
    }

    #[test]
    fn generators_are_deterministic(level in level(), seed: u64) {
        let cfg = GenConfig::new(level, seed);
        prop_assert_eq!(gen_metaterm(&cfg), gen_metaterm(&cfg));
        let (a, b) = (gen_typed_term(&cfg), gen_typed_term(&cfg));
        prop_assert_eq!(a.map(|j| (j.term, j.ty)), b.map(|j| (j.term, j.ty)));
    }

    #[test]
    fn weighted_size_identity(seed: u64) {
        let r = weighted_identity_case(&GenConfig::new(Level::F, seed));
        prop_assert!(!matches!(r, CaseResult::Fail { .. }), "{:?}", r);
    }

    #[test]
    fn expansion_undoes_weak_head_steps(seed: u64) {
        let Some(tr) = star_candidate(&GenConfig { fuel: 10_000, ..GenConfig::new(Level::F, seed) }) else {
            return Ok(());
        };
        let mut d = derive_from_trace(&tr).unwrap();
        let mut red = Reducer::new(Level::F, default_ctx(&tr.initial));
        for _ in 0..50 {
            let Some(step) = red.wh_step(&d.term) else { break };
            let next = wh_step_lderiv(&d, &step).unwrap();
            prop_assert!(validate_lderiv(&next).is_ok());
            prop_assert!(next.size() < d.size());
            let back = expand_lderiv(&next, &step).unwrap();
            prop_assert!(validate_lderiv(&back).is_ok());
            prop_assert_eq!((&back.term, &back.env, &back.concl), (&d.term, &d.env, &d.concl));
            d = next;
        }
    }

    #[test]
    fn input_matching_is_deterministic(seed: u64) {
        let (_, a) = gen_closed_type(&GenConfig::new(Level::F, seed));
        let mut inputs = Vec::new();
        let mut t = a.clone();
        loop {
            match &*t.clone() {
                Type::Arrow(b, c) => {
                    inputs.push(Input::TermInput(Term::gen(b.clone())));
                    t = c.clone();
                }
                Type::ForAll(_, _, body) => {
                    let e = Type::eig("a");
                    inputs.push(Input::TypeInput(e.clone()));
                    t = ty_instantiate(body, &e);
                }
                _ => break,
            }
        }
        let first = match_inputs(Level::F, &a, &inputs);
        prop_assert!(first.is_some());
        prop_assert_eq!(first, match_inputs(Level::F, &a, &inputs));
    }

    #[test]
    fn normal_forms_are_fixed_points(seed: u64) {
        let m = metaterm(Level::ST, seed, 4);
        if let Ok(nf) = beta_normalize(&m, 10_000) {
            prop_assert_eq!(beta_normalize(&nf, 10_000).unwrap(), nf);
        }
    }
}
