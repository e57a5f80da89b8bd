//! Builds the synthetic benchmark, saves it and reloads it.
//!
//! cargo run --example generate_dataset -- [factors] [samples] [seed]

use factorgcn::graph_data::{generate_synthetic, load_dataset, save_dataset, Split, CATALOG};

fn main() -> factorgcn::Result<()> {
    let args: Vec<usize> = std::env::args().skip(1).filter_map(|s| s.parse().ok()).collect();
    let factors = args.first().copied().unwrap_or(4);
    let samples = args.get(1).copied().unwrap_or(1000);
    let seed = args.get(2).copied().unwrap_or(0) as u64;

    println!("catalog:");
    for kind in &CATALOG[..factors] {
        let g = kind.build()?;
        println!("  {kind:<20} {:>2} nodes {:>2} edges", g.num_nodes, g.edges.len());
    }

    let data = generate_synthetic(factors, samples, seed)?;
    let first = &data.samples[0];
    println!(
        "sample 0: label {:?}, {} edges, factors {:?}",
        first.label,
        first.graph.num_edges(),
        first.factors.iter().map(|f| f.kind.to_string()).collect::<Vec<_>>()
    );
    for split in [Split::Train, Split::Val, Split::Test] {
        println!("{split:<5} {}", data.split(split).len());
    }

    let path = std::env::temp_dir().join(format!("factorgcn_{factors}_{seed}.json"));
    save_dataset(&data, &path)?;
    assert_eq!(load_dataset(&path)?, data);
    println!("saved and reloaded {}", path.display());
    Ok(())
}
