//! Parses a test sequence, prints it back, and shows the diagnostics that
//! validation produces for a broken one.
//!
//! cargo run --example parse_and_validate

use testblocks::testlang::{parse_syntax, print, validate};

const GOOD: &str = r#"
sequence Pacer {
  outputs { MODE: int; ATR_CMP_DETECT: bool; }
  params { Hecate_HEARTFAIL: real in [20, 60]; }
  step AAI_Mode_3 {
    MODE = 3;
    step AAI_Mode_3_OFF { ATR_CMP_DETECT = false; }
    step AAI_Mode_3_ON { ATR_CMP_DETECT = true; }
    trans AAI_Mode_3_OFF -> AAI_Mode_3_ON when after(Hecate_HEARTFAIL, sec);
  }
  step END {}
  trans AAI_Mode_3 -> END when after(40, sec);
}
"#;

const BROKEN: &str = r#"
sequence Broken {
  outputs { x: real; }
  params { LEVEL: real in [3, 1]; }
  step A { x = LEVEL + missing; }
  step A { x = 1; }
  trans A -> Nowhere when x > 0;
}
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let block = parse_syntax(GOOD)?;
    println!("{}", print::block(&block));
    println!("diagnostics: {}", validate(&block).len());

    let broken = parse_syntax(BROKEN)?;
    for d in validate(&broken) {
        println!("{:?}: {}", d.kind, d.message);
    }

    match parse_syntax("sequence S { step A { x = ; } }") {
        Ok(_) => unreachable!(),
        Err(e) => println!("syntax error at {}: {}", e.pos, e.msg),
    }
    Ok(())
}
