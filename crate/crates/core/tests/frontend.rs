use std::collections::BTreeSet;
use std::path::PathBuf;

use proptest::prelude::*;
use uclid_core::ast::*;
use uclid_core::diag::DiagKind;
use uclid_core::frontend::lexer::{lex, KEYWORDS};
use uclid_core::frontend::parser::CONTROL_COMMANDS;
use uclid_core::frontend::{parse, parse_expr, pretty_print};

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn corpus() -> Vec<(String, SourceFile)> {
    let mut files: Vec<_> = std::fs::read_dir(root().join("corpus"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "ucl"))
        .collect();
    files.sort();
    files
        .into_iter()
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), SourceFile::read(&p).unwrap()))
        .collect()
}

fn src(text: &str) -> SourceFile {
    SourceFile::new("test.ucl", text)
}

#[test]
fn fib_has_main_with_invariant_and_synth_fun() {
    let f = SourceFile::read(&root().join("corpus/fib.ucl")).unwrap();
    let ms = parse(&f).unwrap();
    assert_eq!(ms.len(), 1);
    assert_eq!(ms[0].name, "main");
    let inv = ms[0]
        .decls
        .iter()
        .find(|d| matches!(&d.kind, DeclKind::Invariant { name, .. } if name == "a_le_b"))
        .expect("a_le_b");
    assert_eq!(inv.span.line, 13);
    assert!(ms[0].decls.iter().any(|d| matches!(&d.kind, DeclKind::SynthFun { name, .. } if name == "h")));
}

#[test]
fn empty_module() {
    let ms = parse(&src("module m { }")).unwrap();
    assert_eq!(ms.len(), 1);
    assert!(ms[0].decls.is_empty());
    assert!(ms[0].control.is_none());
}

#[test]
fn missing_expression_points_at_semicolon() {
    let text = "module m { var x: integer; init { x = ; } }";
    let errs = parse(&src(text)).unwrap_err();
    assert_eq!(errs.len(), 1);
    let e = &errs[0];
    assert_eq!(e.span.line, 1);
    assert_eq!(e.span.col as usize, text.find("= ;").unwrap() + 3);
    match &e.kind {
        DiagKind::ParseError { expected } => assert!(expected.iter().any(|x| x == "expression")),
        k => panic!("unexpected {k:?}"),
    }
}

#[test]
fn duplicate_control_block_rejected() {
    assert!(parse(&src("module m { control { check; } control { check; } }")).is_err());
}

#[test]
fn corpus_round_trips() {
    for (name, f) in corpus() {
        let ast = parse(&f).unwrap_or_else(|e| panic!("{name}: {}", e[0]));
        for m in &ast {
            let printed = pretty_print(m);
            let re = parse(&src(&printed)).unwrap_or_else(|e| panic!("{name}: {}\n{printed}", e[0]));
            assert_eq!(re.len(), 1);
            assert_eq!(&re[0], m, "{name}: round trip changed the tree");
            assert_eq!(pretty_print(&re[0]), printed, "{name}: printing is not idempotent");
        }
    }
}

#[test]
fn case_guards_keep_source_order() {
    let text = "module m { var x : integer; next { case x == 2 : { x' = 0; } x == 1 : { x' = 5; } true : { } esac } }";
    let ms = parse(&src(text)).unwrap();
    let printed = pretty_print(&ms[0]);
    let a = printed.find("x == 2").unwrap();
    let b = printed.find("x == 1").unwrap();
    let c = printed.find("true :").unwrap();
    assert!(a < b && b < c);
}

#[test]
fn array_element_assignment_desugars_to_store() {
    let ms = parse(&src("module m { var a : [integer]integer; next { a'[1] = 2; } }")).unwrap();
    let DeclKind::Next(body) = &ms[0].decls[1].kind else { panic!() };
    let StmtKind::Assign { lhs, rhs } = &body[0].kind else { panic!() };
    assert!(lhs.primed);
    assert!(matches!(rhs.kind, ExprKind::Store(..)));
}

#[test]
fn precedence_and_associativity() {
    let e = parse_expr("a ==> b ==> c").unwrap();
    let ExprKind::Binary(BinOp::Implies, _, r) = &e.kind else { panic!() };
    assert!(matches!(r.kind, ExprKind::Binary(BinOp::Implies, ..)));

    let e = parse_expr("a - b - c").unwrap();
    let ExprKind::Binary(BinOp::Sub, l, _) = &e.kind else { panic!() };
    assert!(matches!(l.kind, ExprKind::Binary(BinOp::Sub, ..)));

    let e = parse_expr("x + y * 2 < 3 && p").unwrap();
    assert!(matches!(e.kind, ExprKind::Binary(BinOp::And, ..)));
    assert_eq!(parse_expr("a mod 3 == 0").unwrap(), parse_expr("(a mod 3) == 0").unwrap());
}

#[test]
fn postfix_forms() {
    assert!(matches!(parse_expr("v[7:4]").unwrap().kind, ExprKind::Extract { hi: 7, lo: 4, .. }));
    assert!(matches!(parse_expr("a[i -> 3]").unwrap().kind, ExprKind::Store(..)));
    assert!(matches!(parse_expr("y.2").unwrap().kind, ExprKind::TraceIndexed(_, 2)));
    assert!(matches!(parse_expr("c1.x").unwrap().kind, ExprKind::Ident(ref n) if n == "c1.x"));
    assert!(matches!(parse_expr("f()").unwrap().kind, ExprKind::Apply(_, ref a) if a.is_empty()));
}

// Every expression node's span text reparses to that node. Store nodes
// produced by `a[i] = e` sugar cover the whole assignment and are exempt.
#[test]
fn expression_spans_cover_their_text() {
    for (name, f) in corpus() {
        let chars: Vec<char> = f.contents.chars().collect();
        let ast = parse(&f).unwrap();
        let mut check = |e: &Expr| {
            let text: String = chars[e.span.offset as usize..(e.span.offset + e.span.len) as usize].iter().collect();
            let re = parse_expr(&text).unwrap_or_else(|d| panic!("{name}: span text {text:?}: {d}"));
            assert_eq!(&re, e, "{name}: span text {text:?}");
        };
        for m in &ast {
            for d in &m.decls {
                visit_decl_exprs(d, &mut check);
            }
        }
    }
}

fn visit_decl_exprs(d: &Decl, f: &mut dyn FnMut(&Expr)) {
    let stmts = |ss: &[Stmt], f: &mut dyn FnMut(&Expr)| {
        for s in ss {
            s.walk(&mut |s| {
                for e in s.exprs() {
                    e.walk(f);
                }
            });
        }
    };
    match &d.kind {
        DeclKind::Define { body, .. } => body.walk(f),
        DeclKind::Invariant { expr, .. }
        | DeclKind::Axiom { expr, .. }
        | DeclKind::HyperInvariant { expr, .. }
        | DeclKind::HyperAxiom { expr, .. } => expr.walk(f),
        DeclKind::Init(b) | DeclKind::Next(b) => stmts(b, f),
        DeclKind::Procedure(p) => {
            p.requires.iter().chain(&p.ensures).for_each(|e| e.walk(f));
            if let Some(b) = &p.body {
                stmts(b, f);
            }
        }
        DeclKind::Group { elems, .. } => elems.iter().for_each(|e| e.walk(f)),
        _ => {}
    }
}

fn quoted_words(section: &str) -> BTreeSet<String> {
    section.split('"').skip(1).step_by(2).map(str::to_string).collect()
}

fn ebnf_rule<'a>(text: &'a str, name: &str) -> &'a str {
    let start = text.find(&format!("\n{name} ")).unwrap_or_else(|| panic!("rule {name}"));
    let rest = &text[start + 1..];
    &rest[..rest.find(" ;").unwrap()]
}

#[test]
fn grammar_document_matches_parser() {
    let text = std::fs::read_to_string(root().join("docs/grammar.ebnf")).unwrap();
    let kws = quoted_words(ebnf_rule(&text, "keywords"));
    let lexer_kws: BTreeSet<String> = KEYWORDS.iter().map(|s| s.to_string()).collect();
    assert_eq!(kws, lexer_kws);

    let cmds = quoted_words(ebnf_rule(&text, "command"));
    for c in CONTROL_COMMANDS {
        assert!(cmds.contains(*c), "command {c} missing from grammar");
    }

    // Level eN lists exactly the operators whose precedence is N.
    let ops = [
        BinOp::Implies,
        BinOp::Iff,
        BinOp::Or,
        BinOp::And,
        BinOp::BvOr,
        BinOp::BvXor,
        BinOp::BvAnd,
        BinOp::Eq,
        BinOp::Ne,
        BinOp::Lt,
        BinOp::Le,
        BinOp::Gt,
        BinOp::Ge,
        BinOp::Concat,
        BinOp::Add,
        BinOp::Sub,
        BinOp::Mul,
        BinOp::Div,
        BinOp::IntDiv,
        BinOp::Mod,
    ];
    for level in 1..=11u8 {
        let listed = quoted_words(ebnf_rule(&text, &format!("e{level}")));
        let expected: BTreeSet<String> =
            ops.iter().filter(|o| o.precedence() == level).map(|o| o.symbol().to_string()).collect();
        assert_eq!(listed, expected, "precedence level {level}");
    }
}

#[test]
fn crlf_is_normalized() {
    let f = SourceFile::new("t.ucl", "module m {\r\n  var x : integer;\r\n}\r\n");
    let ms = parse(&f).unwrap();
    assert_eq!(ms[0].decls[0].span.line, 2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // Replacing one token of a valid model with a stray `)` yields a
    // diagnostic on that token's line.
    #[test]
    fn injected_error_is_reported_on_its_line(file_idx in 0usize..64, tok_idx in 0usize..10_000) {
        let files = corpus();
        let (_, f) = &files[file_idx % files.len()];
        let toks = lex(&"t".into(), &f.contents).unwrap();
        let real: Vec<_> = toks.iter().filter(|t| !matches!(t.tok, uclid_core::frontend::lexer::Tok::Eof)).collect();
        let t = real[tok_idx % real.len()];
        let chars: Vec<char> = f.contents.chars().collect();
        let mut mutated: String = chars[..t.span.offset as usize].iter().collect();
        mutated.push_str(" ) ) ");
        mutated.extend(chars[(t.span.offset + t.span.len) as usize..].iter());
        let errs = parse(&src(&mutated)).expect_err("mutated model must not parse");
        prop_assert!(errs.iter().any(|d| d.span.line == t.span.line),
            "token at line {} but errors at {:?}", t.span.line, errs.iter().map(|d| d.span.line).collect::<Vec<_>>());
    }
}
