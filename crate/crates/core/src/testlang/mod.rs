//! Text format for test sequences and test assessments.
//!
//! ```text
//! sequence Pacer {
//!   outputs { MODE: int; DETECT: bool; }
//!   step Run {
//!     MODE = 3;
//!     step Off { DETECT = false; }
//!     step On { DETECT = true; }
//!     trans Off -> On when et >= 2;
//!     trans On -> Off when et >= 0.05;
//!   }
//!   step End {}
//!   trans Run -> End when after(40, sec);
//! }
//! ```

use std::fmt;

pub mod ast;
pub mod lexer;
pub mod parser;
pub mod print;
pub mod validate;

pub use ast::*;
pub use parser::{parse_expr, parse_syntax};
pub use validate::{type_of, validate, Diagnostic, DiagnosticKind, SymbolTable, Ty, PARAM_PREFIX};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{pos}: {msg}")]
pub struct SyntaxError {
    pub pos: Pos,
    pub msg: String,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at {0}")]
    Syntax(#[from] SyntaxError),
    #[error("{0}")]
    DuplicateStepName(String),
    #[error("{0}")]
    UndeclaredIdentifier(String),
    #[error("{0}")]
    TypeError(String),
}

/// Parses a block and rejects it on the errors that make it unusable:
/// duplicate step names, undeclared identifiers and type errors. Other rule
/// violations are left to [`validate`].
pub fn parse_block(src: &str) -> Result<TestBlock, ParseError> {
    let block = parse_syntax(src)?;
    for d in validate(&block) {
        match d.kind {
            DiagnosticKind::DuplicateStepName => return Err(ParseError::DuplicateStepName(d.message)),
            DiagnosticKind::UndeclaredIdentifier => {
                return Err(ParseError::UndeclaredIdentifier(d.message))
            }
            DiagnosticKind::TypeError => return Err(ParseError::TypeError(d.message)),
            _ => {}
        }
    }
    Ok(block)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{SignalKind, Value};
    use proptest::prelude::*;

    pub(crate) const PACER: &str = r#"
sequence Pacer {
  outputs { MODE: int; ATR_CMP_DETECT: bool; }
  step AAI_Mode_3 {
    MODE = 3;
    step AAI_Mode_3_OFF { ATR_CMP_DETECT = false; }
    step AAI_Mode_3_ON { ATR_CMP_DETECT = true; }
    trans AAI_Mode_3_OFF -> AAI_Mode_3_ON when after(2, sec);
    trans AAI_Mode_3_ON -> AAI_Mode_3_OFF when after(0.05, sec);
  }
  step END {}
  trans AAI_Mode_3 -> END when after(40, sec);
}
"#;

    pub(crate) const MODE_CHECK: &str = r#"
assessment PacerCheck {
  inputs { MODE: int; ATR_CMP_DETECT: bool; ATR_PACE_CTRL: bool; }
  consts { LRL: real = 60; }
  step Mode_selection {
    step Mode_3 when MODE == 3 {
      step Sensing { verify(et < 60 / LRL) as SENSING; }
      step Heartbeat { verify(not ATR_PACE_CTRL) as HRTBT; }
      step No_heartbeat { verify(et < 60 / LRL) as NOHRTBT; }
      trans Sensing -> Heartbeat when ATR_CMP_DETECT;
      trans Sensing -> No_heartbeat when ATR_PACE_CTRL;
      trans No_heartbeat -> Heartbeat when ATR_CMP_DETECT;
      trans Heartbeat -> Sensing when not ATR_CMP_DETECT;
    }
    step Else otherwise { verify(not ATR_PACE_CTRL) as MODE; }
  }
}
"#;

    fn kinds(src: &str) -> Vec<DiagnosticKind> {
        validate(&parse_syntax(src).unwrap())
            .into_iter()
            .map(|d| d.kind)
            .collect()
    }

    #[test]
    fn pacing_sequence_structure() {
        let b = parse_block(PACER).unwrap();
        assert_eq!(b.kind, BlockKind::Sequence);
        assert_eq!(b.step_count(), 4);
        assert_eq!(b.all_transitions().len(), 3);
        assert_eq!(
            b.transitions[0].guard,
            Expr::After(Box::new(Expr::Lit(Value::Int(40))))
        );
        assert!(validate(&b).is_empty());
    }

    #[test]
    fn mode_assessment_validates_clean() {
        let b = parse_block(MODE_CHECK).unwrap();
        assert!(validate(&b).is_empty(), "{:?}", validate(&b));
        let names: Vec<&str> = {
            let mut v = Vec::new();
            b.walk_steps(|s| v.push(s.name.as_str()));
            v
        };
        assert_eq!(
            names,
            ["Mode_selection", "Mode_3", "Sensing", "Heartbeat", "No_heartbeat", "Else"]
        );
        let ids: Vec<&str> = b.statements().iter().map(|(_, v)| v.id.as_str()).collect();
        assert_eq!(ids, ["SENSING", "HRTBT", "NOHRTBT", "MODE"]);
    }

    #[test]
    fn duplicate_step_rejected() {
        let src = "sequence S { outputs { u: real; } step A {} step A {} }";
        assert!(matches!(parse_block(src), Err(ParseError::DuplicateStepName(_))));
    }

    #[test]
    fn undeclared_identifier_rejected() {
        let src = "sequence S { outputs { u: real; } step A {} step B {} trans A -> B when FOO > 1; }";
        let err = parse_block(src).unwrap_err();
        assert!(matches!(err, ParseError::UndeclaredIdentifier(ref m) if m.contains("FOO")));
    }

    #[test]
    fn type_errors_rejected() {
        let src = "sequence S { outputs { u: real; b: bool; } step A { u = b + 1; } }";
        assert!(matches!(parse_block(src), Err(ParseError::TypeError(_))));
        let src = "sequence S { outputs { u: real; } step A {} step B {} trans A -> B when u + 1; }";
        assert!(matches!(parse_block(src), Err(ParseError::TypeError(_))));
    }

    #[test]
    fn syntax_error_has_position() {
        let err = parse_block("sequence S {\n  step A { u = ; }\n}").unwrap_err();
        match err {
            ParseError::Syntax(e) => assert_eq!(e.pos, Pos { line: 2, col: 16 }),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn inverted_bounds_reported() {
        let src = "sequence S { outputs { u: real; } params { Hecate_X: real in [5, 2]; } step A { u = Hecate_X; } }";
        let d = validate(&parse_syntax(src).unwrap());
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].kind, DiagnosticKind::InvertedBounds);
        assert!(d[0].message.contains("lower > upper"));
    }

    #[test]
    fn otherwise_must_come_last() {
        let src = "assessment A { inputs { x: real; } step P { step B otherwise {} step C when x > 0 {} } }";
        assert_eq!(kinds(src), [DiagnosticKind::OtherwiseNotLast]);
    }

    #[test]
    fn parameter_prefix_enforced() {
        let src = "sequence S { outputs { u: real; } params { X: real in [0, 1]; } step A { u = X; } }";
        assert_eq!(kinds(src), [DiagnosticKind::BadParameterName]);
    }

    #[test]
    fn transitions_must_join_siblings() {
        let src = "sequence S { outputs { u: real; } step A { step A1 {} step A2 {} } step B {} trans A1 -> B when true; }";
        assert!(kinds(src).contains(&DiagnosticKind::NonSiblingTransition));
        let src = "sequence S { outputs { u: real; } step A {} trans A -> Z when true; }";
        assert!(kinds(src).contains(&DiagnosticKind::UnknownStep));
    }

    #[test]
    fn when_children_cannot_have_transitions() {
        let src = "assessment A { inputs { x: real; } step P { step B when x > 0 {} step C otherwise {} trans B -> C when x < 0; } }";
        assert!(kinds(src).contains(&DiagnosticKind::TransitionInWhenDecomposition));
    }

    #[test]
    fn block_kind_content_rules() {
        let src = "assessment A { inputs { x: real; } params { Hecate_P: real in [0,1]; } step S { verify(x > 0); } }";
        assert!(kinds(src).contains(&DiagnosticKind::ParametersInAssessment));
        let src = "sequence S { outputs { u: real; } step A { verify(u > 0); } }";
        assert!(kinds(src).contains(&DiagnosticKind::ContentKindMismatch));
        let src = "assessment A { inputs { x: real; } step S { x = 1; } }";
        let k = kinds(src);
        assert!(k.contains(&DiagnosticKind::ContentKindMismatch));
    }

    #[test]
    fn after_argument_restricted() {
        let src = "sequence S { outputs { u: real; } step A {} step B {} trans A -> B when after(u, sec); }";
        assert!(kinds(src).contains(&DiagnosticKind::TypeError));
        let src = "sequence S { outputs { u: real; } params { Hecate_T: real in [1, 2]; } step A { u = 1; } step B {} trans A -> B when after(Hecate_T, sec); }";
        assert!(kinds(src).is_empty());
    }

    #[test]
    fn default_statement_ids() {
        let src = "assessment A { inputs { x: real; } step S { verify(x > 0); assert(x < 9); } }";
        let b = parse_block(src).unwrap();
        let ids: Vec<_> = b.statements().iter().map(|(_, v)| v.id.clone()).collect();
        assert_eq!(ids, ["S_1", "S_2"]);
    }

    #[test]
    fn print_round_trip_of_shipped_examples() {
        for src in [PACER, MODE_CHECK] {
            let b = parse_block(src).unwrap();
            let printed = print::block(&b);
            assert_eq!(parse_block(&printed).unwrap(), b, "{printed}");
        }
    }

    #[test]
    fn expression_precedence() {
        let e = parse_expr("not a < 1 and b or c").unwrap();
        assert_eq!(print::expr(&e), "not a < 1 and b or c");
        let e = parse_expr("-(x + 1) * 2 - -3").unwrap();
        assert_eq!(print::expr(&e), "-(x + 1) * 2 - -3");
        assert!(parse_expr("a < b < c").is_err());
    }

    // ---- generators for property tests ----

    const NUMS: &[&str] = &["x", "y", "n"];
    const BOOLS: &[&str] = &["p", "q"];

    fn arith_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (-50i64..50).prop_map(|v| Expr::Lit(Value::Int(v))),
            (-1e3f64..1e3).prop_map(|v| Expr::Lit(Value::Real(v))),
            prop::sample::select(NUMS).prop_map(Expr::ident),
            Just(Expr::Et),
        ];
        leaf.prop_recursive(3, 12, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|e| Expr::Unary(UnOp::Neg, Box::new(e))),
                (
                    prop::sample::select(vec![BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div]),
                    inner.clone(),
                    inner
                )
                    .prop_map(|(op, a, b)| Expr::binary(op, a, b)),
            ]
        })
    }

    fn bool_expr() -> impl Strategy<Value = Expr> {
        let rel = (
            prop::sample::select(vec![
                BinOp::Lt,
                BinOp::Le,
                BinOp::Gt,
                BinOp::Ge,
                BinOp::Eq,
                BinOp::Ne,
            ]),
            arith_expr(),
            arith_expr(),
        )
            .prop_map(|(op, a, b)| Expr::binary(op, a, b));
        let leaf = prop_oneof![
            rel,
            prop::sample::select(BOOLS).prop_map(Expr::ident),
            any::<bool>().prop_map(|b| Expr::Lit(Value::Bool(b))),
            prop::sample::select(NUMS).prop_map(|n| Expr::HasChanged(n.to_string())),
            (0u32..100).prop_map(|v| Expr::After(Box::new(Expr::real(v as f64 / 4.0)))),
        ];
        leaf.prop_recursive(3, 16, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(Expr::not),
                (
                    prop::sample::select(vec![BinOp::And, BinOp::Or]),
                    inner.clone(),
                    inner
                )
                    .prop_map(|(op, a, b)| Expr::binary(op, a, b)),
            ]
        })
    }

    fn assessment_block() -> impl Strategy<Value = TestBlock> {
        (
            prop::collection::vec(bool_expr(), 1..4),
            prop::collection::vec(bool_expr(), 1..3),
            any::<bool>(),
        )
            .prop_map(|(bodies, guards, when)| {
                let mut b = TestBlock::new(BlockKind::Assessment, "Gen");
                for n in NUMS {
                    b.inputs.push(Decl::new(n, SignalKind::Real));
                }
                for n in BOOLS {
                    b.inputs.push(Decl::new(n, SignalKind::Bool));
                }
                let mut parent = TestStep::new("P");
                let count = guards.len() + 1;
                for i in 0..count {
                    let mut c = TestStep::new(&format!("C{i}"));
                    if when {
                        c.when = Some(if i + 1 == count {
                            WhenGuard::Otherwise
                        } else {
                            WhenGuard::Guard(guards[i].clone())
                        });
                    }
                    for (j, body) in bodies.iter().enumerate() {
                        c.statements.push(VerificationStatement {
                            id: format!("S{i}_{j}"),
                            kind: if j % 2 == 0 {
                                VerifyKind::Verify
                            } else {
                                VerifyKind::Assert
                            },
                            body: body.clone(),
                        });
                    }
                    parent.children.push(c);
                }
                if !when {
                    for (i, g) in guards.iter().enumerate() {
                        parent.transitions.push(Transition {
                            source: format!("C{i}"),
                            destination: format!("C{}", i + 1),
                            guard: g.clone(),
                        });
                    }
                }
                b.steps.push(parent);
                b
            })
    }

    proptest! {
        #[test]
        fn printed_expressions_reparse(e in bool_expr()) {
            let printed = print::expr(&e);
            prop_assert_eq!(parse_expr(&printed).unwrap(), e, "{}", printed);
        }

        #[test]
        fn printed_blocks_reparse(b in assessment_block()) {
            prop_assert!(validate(&b).is_empty(), "{:?}", validate(&b));
            let printed = print::block(&b);
            prop_assert_eq!(parse_block(&printed).unwrap(), b);
        }

        #[test]
        fn parser_is_total_on_arbitrary_text(s in "\\PC{0,200}") {
            let _ = parse_block(&s);
        }

        #[test]
        fn parser_is_total_on_token_soup(
            words in prop::collection::vec(
                prop::sample::select(vec![
                    "sequence", "assessment", "step", "trans", "when", "otherwise", "{", "}",
                    "(", ")", ";", ":", "=", "->", "verify", "assert", "x", "1", "2.5", "<",
                    "and", "not", "after", "sec", ",", "et", "inputs", "real", "[", "]", "-",
                ]),
                0..60,
            )
        ) {
            let _ = parse_block(&words.join(" "));
        }
    }
}
