// Lookup tables of `k* = sup{k : Bin(k; n, eps) <= delta}` and of the
// smallest `eps` a marginal calibrator certifies.

use conformal_kit::data::{render_table1, render_table2, table1, table2, Rounding};
use conformal_kit::dists::{binom_inf_p, binom_sup_k};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let ns = [100, 1000];
    print!("{}", render_table1(&table1(&ns)?));
    println!();
    print!("{}", render_table2(&table2(&ns)?, Rounding::Truncate));

    println!();
    println!("k*(n=100000, eps=1%, delta=5%) = {:?}", binom_sup_k(100_000, 0.01, 0.05)?);
    println!("inf{{p : Bin(0; 100, p) <= 0.1}} = {:.6}", binom_inf_p(0, 100, 0.1)?);
    Ok(())
}

fn main() {
    run_example().expect("lookup_tables example failed");
}
