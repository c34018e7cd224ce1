/// 0/1 knapsack table for every capacity `0..=cap`, with enough state to
/// recover an optimal item set for any of them.
#[derive(Clone, Debug)]
pub struct KnapsackTable {
    pub best: Vec<f64>,
    items: Vec<(u64, f64)>,
    // take[i][w]: item i is taken in the optimum over items 0..=i at capacity w
    take: Vec<Vec<bool>>,
}

impl KnapsackTable {
    pub fn new(items: &[(u64, f64)], cap: u64) -> Self {
        let w_max = cap as usize;
        let mut best = vec![0.0; w_max + 1];
        let mut take = Vec::with_capacity(items.len());
        for &(w, v) in items {
            let mut row = vec![false; w_max + 1];
            if (w as usize) <= w_max {
                let w = w as usize;
                for c in (w..=w_max).rev() {
                    let alt = best[c - w] + v;
                    if alt > best[c] {
                        best[c] = alt;
                        row[c] = true;
                    }
                }
            }
            take.push(row);
        }
        Self {
            best,
            items: items.to_vec(),
            take,
        }
    }

    /// Item indices of an optimal solution at capacity `cap`.
    pub fn choose(&self, cap: u64) -> Vec<usize> {
        let mut c = cap as usize;
        let mut out = Vec::new();
        for i in (0..self.items.len()).rev() {
            if self.take[i][c] {
                out.push(i);
                c -= self.items[i].0 as usize;
            }
        }
        out.reverse();
        out
    }
}

/// Best total value with total weight at most `cap`, and the chosen items.
pub fn knapsack_max(items: &[(u64, f64)], cap: u64) -> (f64, Vec<usize>) {
    let t = KnapsackTable::new(items, cap);
    (t.best[cap as usize], t.choose(cap))
}
