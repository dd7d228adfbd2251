//! Parse and evaluate `Order` complexity expressions.
//!
//! cargo run --example evaluate_order -- "pow(N, 2) - ln(N)" 1000

use forage::order::EvalError;
use forage::OrderExpr;

fn main() {
    let mut args = std::env::args().skip(1);
    if let (Some(src), Some(n)) = (args.next(), args.next()) {
        let n: f64 = n.parse().expect("N must be a number");
        match OrderExpr::parse(&src) {
            Ok(expr) => println!("{expr} at N = {n}: {:?}", expr.eval(n)),
            Err(e) => println!("{e}"),
        }
        return;
    }

    let nth_prime = OrderExpr::parse("(N*ln(N)+(N*ln(ln(N)))) * (pow(N*ln(N)+(N*ln(ln(N))),0.5))").unwrap();
    for n in [10.0, 1e3, 1e4, 1e5] {
        println!("nth-prime order at {n:>8}: {:.1}", nth_prime.eval(n).unwrap());
    }

    let fact = OrderExpr::parse("N!").unwrap();
    for n in [5.0, 10.0, 20.0, 170.0] {
        println!("{n}! = {:e}", fact.eval(n).unwrap());
    }
    assert!(matches!(fact.eval(200.0), Err(EvalError::Overflow)));
    println!("200! overflows");

    for bad in ["N +", "N ^ 2", "ln(N"] {
        println!("{bad:?}: {}", OrderExpr::parse(bad).unwrap_err());
    }
}
