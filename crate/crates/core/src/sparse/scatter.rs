use crate::dense::DenseMatrix;

/// True when `idx` is strictly increasing.
pub fn is_index_list(idx: &[usize]) -> bool {
    idx.windows(2).all(|w| w[0] < w[1])
}

/// Positions of the entries of `sub` inside `sup`, or `None` if `sub ⊄ sup`.
/// Both lists must be sorted.
pub fn positions_in(sub: &[usize], sup: &[usize]) -> Option<Vec<usize>> {
    let mut out = Vec::with_capacity(sub.len());
    let mut k = 0;
    for &s in sub {
        while k < sup.len() && sup[k] < s {
            k += 1;
        }
        if k == sup.len() || sup[k] != s {
            return None;
        }
        out.push(k);
        k += 1;
    }
    Some(out)
}

/// Embeds the rows of `g` (indexed by `sub`) into a zero matrix indexed by `sup`.
///
/// # Panics
/// If `g.nrows() != sub.len()` or `sub` is not contained in `sup`.
pub fn scatter_rows(g: &DenseMatrix, sub: &[usize], sup: &[usize]) -> DenseMatrix {
    assert_eq!(g.nrows(), sub.len(), "row count does not match the subset");
    let pos = positions_in(sub, sup).expect("scatter_rows: subset not contained in superset");
    let mut out = DenseMatrix::zeros(sup.len(), g.ncols());
    for j in 0..g.ncols() {
        let src = g.col(j);
        let dst = out.col_mut(j);
        for (i, &p) in pos.iter().enumerate() {
            dst[p] = src[i];
        }
    }
    out
}

/// Extracts the rows of `g` (indexed by `sup`) that belong to `sub`.
///
/// # Panics
/// If `g.nrows() != sup.len()` or `sub` is not contained in `sup`.
pub fn gather_rows(g: &DenseMatrix, sup: &[usize], sub: &[usize]) -> DenseMatrix {
    assert_eq!(g.nrows(), sup.len(), "row count does not match the superset");
    let pos = positions_in(sub, sup).expect("gather_rows: subset not contained in superset");
    g.select_rows(&pos)
}

/// Offsets of the indices in `s1` relative to the first index of `s2`, the local
/// coordinates of `s1` inside a block whose rows start at `min(s2)`.
pub fn align_set(s1: &[usize], s2: &[usize]) -> Vec<usize> {
    let base = s2.first().copied().unwrap_or(0);
    s1.iter()
        .map(|&i| {
            assert!(i >= base, "align_set: index {i} precedes the reference set");
            i - base
        })
        .collect()
}
