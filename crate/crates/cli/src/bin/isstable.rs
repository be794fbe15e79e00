//! Oracle: `isstable <real>` prints whether a discrete-time pole lies
//! strictly inside the unit circle.

use num_rational::BigRational;
use num_traits::{One, Signed};
use uclid_core::smt::model::{parse_value, SortEnv};
use uclid_core::term::Sort;
use uclid_core::value::Value;

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let [arg] = args.as_slice() else {
        eprintln!("usage: isstable <real literal>");
        std::process::exit(2);
    };
    match parse_value(arg, &Sort::Real, &SortEnv::default()) {
        Ok(Value::Real(p)) => println!("{}", p.abs() < BigRational::one()),
        _ => {
            eprintln!("isstable: not a real literal: {arg}");
            std::process::exit(2);
        }
    }
}
