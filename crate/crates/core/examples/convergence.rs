//! How often the search ends with the best benchmark entry at the top of the
//! sampling distribution, over a range of seeds.
//!
//! cargo run --release --example convergence -- [first_seed] [count] [k]

use acnf::evaluators::oracle::{bundled_space, TableOracle};
use acnf::{run_search, SearchConfig, SearchOutcome};

fn main() {
    let args: Vec<u64> = std::env::args().skip(1).map(|a| a.parse().expect("numeric argument")).collect();
    let first = args.first().copied().unwrap_or(10_000);
    let count = args.get(1).copied().unwrap_or(200);
    let k = args.get(2).copied().unwrap_or(60);

    let space = bundled_space();
    let target = space
        .encode(&space.combination_of(&["LRASPP-MobileNetV3-Small", "Apache TVM", "none"]).unwrap())
        .unwrap();
    let mut hits = 0;
    let mut excluded = 0;
    for seed in first..first + count {
        let config = SearchConfig { k, seed, ..Default::default() };
        let out: SearchOutcome = run_search(&space, &mut TableOracle::bundled(513), &config).unwrap();
        hits += usize::from(out.state.argmax() == Some(target));
        excluded += usize::from(out.state.is_excluded(target));
    }
    println!("argmax on target: {hits}/{count}");
    println!("target excluded:  {excluded}/{count}");
}
