//! Binarizes two factor graphs, scores them against ground truths and
//! matches them.

use factorgcn::metrics::{binarize_to_count, gede_pair, hungarian, CostMatrix};

fn main() -> factorgcn::Result<()> {
    let factor_a = [((0, 1), 0.9), ((1, 2), 0.8), ((2, 3), 0.1), ((0, 3), 0.2)];
    let factor_b = [((0, 1), 0.1), ((1, 2), 0.3), ((2, 3), 0.9), ((0, 3), 0.7)];
    let path = vec![(0, 1), (1, 2)];
    let other = vec![(0, 3), (2, 3)];

    println!("A top-2: {:?}", binarize_to_count(factor_a, 2)?);
    println!("B top-2: {:?}", binarize_to_count(factor_b, 2)?);

    let mut costs = Vec::new();
    for f in [&factor_a, &factor_b] {
        let row: Vec<i64> = [&path, &other]
            .iter()
            .map(|gt| gede_pair(f.iter().copied(), gt).map(|c| c as i64))
            .collect::<factorgcn::Result<_>>()?;
        println!("costs {row:?}");
        costs.push(row);
    }
    let matching = hungarian(&CostMatrix::from_rows(&costs)?)?;
    println!("ground truth -> factor {:?}, total {}", matching.col_to_row, matching.total);
    Ok(())
}
