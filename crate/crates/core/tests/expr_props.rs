use proptest::prelude::*;
use slantcheck::expr::{BinOp, Func};
use slantcheck::{parse, Ast, Jet2};

const NAMES: [&str; 3] = ["a", "b", "c"];

fn names() -> Vec<String> {
    NAMES.iter().map(|s| s.to_string()).collect()
}

fn bin(op: BinOp, l: Ast, r: Ast) -> Ast {
    Ast::Binary { op, lhs: Box::new(l), rhs: Box::new(r) }
}

fn call(func: Func, a: Ast) -> Ast {
    Ast::Call { func, arg: Box::new(a) }
}

/// Expressions that are smooth everywhere, so any point is a valid probe.
/// Constants are non-negative like the ones the parser produces.
fn smooth() -> impl Strategy<Value = Ast> {
    let leaf = prop_oneof![(0.0f64..2.0).prop_map(Ast::Const), (0..3usize).prop_map(|i| Ast::Var(NAMES[i].into()))];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(l, r)| bin(BinOp::Add, l, r)),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| bin(BinOp::Sub, l, r)),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| bin(BinOp::Mul, l, r)),
            // l / (2 + sin r)
            (inner.clone(), inner.clone()).prop_map(|(l, r)| bin(BinOp::Div, l, bin(BinOp::Add, Ast::Const(2.0), call(Func::Sin, r)))),
            (inner.clone(), 2..4u32).prop_map(|(l, k)| bin(BinOp::Pow, l, Ast::Const(k as f64))),
            inner.clone().prop_map(|a| Ast::Neg(Box::new(a))),
            inner.clone().prop_map(|a| call(Func::Sin, a)),
            inner.clone().prop_map(|a| call(Func::Cos, a)),
            inner.clone().prop_map(|a| call(Func::Atan, a)),
            // sqrt(1 + a^2)
            inner.clone().prop_map(|a| call(Func::Sqrt, bin(BinOp::Add, Ast::Const(1.0), bin(BinOp::Mul, a.clone(), a)))),
            inner.prop_map(|a| call(Func::Exp, call(Func::Sin, a))),
        ]
    })
}

/// `f` with each variable replaced by the matching expression of `gs`.
fn substitute(f: &Ast, gs: &[Ast; 3]) -> Ast {
    match f {
        Ast::Const(c) => Ast::Const(*c),
        Ast::Var(v) => gs[NAMES.iter().position(|n| n == v).unwrap()].clone(),
        Ast::Neg(a) => Ast::Neg(Box::new(substitute(a, gs))),
        Ast::Binary { op, lhs, rhs } => Ast::Binary { op: *op, lhs: Box::new(substitute(lhs, gs)), rhs: Box::new(substitute(rhs, gs)) },
        Ast::Call { func, arg } => Ast::Call { func: *func, arg: Box::new(substitute(arg, gs)) },
    }
}

fn eval(ast: &Ast, p: &[f64]) -> f64 {
    ast.evaluate_indexed::<f64>(&names(), p).unwrap()
}

fn richardson(g: impl Fn(f64) -> f64, h: f64) -> f64 {
    (-g(2.0 * h) + 8.0 * g(h) - 8.0 * g(-h) + g(-2.0 * h)) / (12.0 * h)
}

fn shifted(p: &[f64], i: usize, t: f64) -> Vec<f64> {
    let mut q = p.to_vec();
    q[i] += t;
    q
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn printed_expressions_reparse_to_the_same_tree(ast in smooth()) {
        let text = ast.to_string();
        let back = parse(&text).unwrap();
        prop_assert_eq!(&back, &ast, "{}", text);
    }

    #[test]
    fn printing_is_a_fixed_point(ast in smooth()) {
        let once = parse(&ast.to_string()).unwrap().to_string();
        prop_assert_eq!(parse(&once).unwrap().to_string(), once);
    }

    #[test]
    fn jet_value_matches_plain_evaluation(ast in smooth(), p in prop::array::uniform3(-1.5f64..1.5)) {
        let jet: Jet2 = ast.evaluate_indexed(&names(), &Jet2::seed_all(&p)).unwrap();
        let v = eval(&ast, &p);
        prop_assert!((jet.value() - v).abs() <= 1e-12 * v.abs().max(1.0));
    }

    #[test]
    fn jets_agree_with_finite_differences(ast in smooth(), p in prop::array::uniform3(-1.5f64..1.5)) {
        let jet: Jet2 = ast.evaluate_indexed(&names(), &Jet2::seed_all(&p)).unwrap();
        let h = 1e-3;
        let scale = jet.value().abs().max(1.0);
        for i in 0..3 {
            let g = richardson(|t| eval(&ast, &shifted(&p, i, t)), h);
            prop_assert!((g - jet.grad_at(i)).abs() <= 1e-6 * scale.max(jet.grad_at(i).abs()), "d{} of {}: {} vs {}", i, ast, g, jet.grad_at(i));
            for j in 0..3 {
                let hij = richardson(|t| richardson(|s| eval(&ast, &shifted(&shifted(&p, j, s), i, t)), h), h);
                prop_assert!((hij - jet.hess(i, j)).abs() <= 1e-5 * scale.max(jet.hess(i, j).abs()), "d{}d{} of {}: {} vs {}", i, j, ast, hij, jet.hess(i, j));
            }
        }
    }

    /// Jets of f(g(x)) evaluated in one pass equal jets of f evaluated on the
    /// jets of g.
    #[test]
    fn chain_rule_composes(f in smooth(), g in [smooth(), smooth(), smooth()], p in prop::array::uniform3(-1.0f64..1.0)) {
        let seeds = Jet2::seed_all(&p);
        let inner: Vec<Jet2> = g.iter().map(|gi| gi.evaluate_indexed(&names(), &seeds).unwrap()).collect();
        let staged: Jet2 = f.evaluate_indexed(&names(), &inner).unwrap();
        let direct: Jet2 = substitute(&f, &g).evaluate_indexed(&names(), &seeds).unwrap();
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0);
        prop_assert!(close(staged.value(), direct.value()));
        for i in 0..3 {
            prop_assert!(close(staged.grad_at(i), direct.grad_at(i)), "{} vs {}", staged.grad_at(i), direct.grad_at(i));
            for j in 0..3 {
                prop_assert!(close(staged.hess(i, j), direct.hess(i, j)), "{} vs {}", staged.hess(i, j), direct.hess(i, j));
            }
        }
    }

    #[test]
    fn hessian_is_symmetric(ast in smooth(), p in prop::array::uniform3(-1.5f64..1.5)) {
        let jet: Jet2 = ast.evaluate_indexed(&names(), &Jet2::seed_all(&p)).unwrap();
        for i in 0..3 {
            for j in 0..i {
                prop_assert_eq!(jet.hess(i, j), jet.hess(j, i));
            }
        }
    }

    #[test]
    fn parser_never_panics(s in "[a-c0-9+*/^().,\\- ]{0,24}") {
        let _ = parse(&s);
    }

    #[test]
    fn parse_errors_point_inside_the_input(s in "[a-c0-9+*/^()\\- ]{0,24}") {
        if let Err(e) = parse(&s) {
            prop_assert!(e.offset <= s.len());
        }
    }
}

#[test]
fn constants_of_the_fixtures_parse() {
    let ast = parse("u*cos(acos(1/3))").unwrap();
    let v = ast.evaluate_indexed::<f64>(&["u".to_string()], &[3.0]).unwrap();
    assert!((v - 1.0).abs() < 1e-15);
}

#[test]
fn domain_errors_are_reported() {
    let ast = parse("sqrt(a - 2)").unwrap();
    assert!(ast.evaluate_indexed::<f64>(&names(), &[0.0, 0.0, 0.0]).is_err());
    assert!(parse("log(a)").unwrap().evaluate_indexed::<Jet2>(&names(), &Jet2::seed_all(&[-1.0, 0.0, 0.0])).is_err());
}
