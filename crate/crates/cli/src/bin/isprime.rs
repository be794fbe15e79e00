//! Oracle: `isprime <int>` prints whether the argument is prime.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::One;
use uclid_core::smt::model::{parse_value, SortEnv};
use uclid_core::term::Sort;
use uclid_core::value::Value;

fn is_prime(n: &BigInt) -> bool {
    if n <= &BigInt::one() {
        return false;
    }
    let mut d = BigInt::from(2);
    while &d * &d <= *n {
        if n.is_multiple_of(&d) {
            return false;
        }
        d += 1;
    }
    true
}

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let [arg] = args.as_slice() else {
        eprintln!("usage: isprime <integer literal>");
        std::process::exit(2);
    };
    match parse_value(arg, &Sort::Int, &SortEnv::default()) {
        Ok(Value::Int(n)) => println!("{}", is_prime(&n)),
        _ => {
            eprintln!("isprime: not an integer literal: {arg}");
            std::process::exit(2);
        }
    }
}
