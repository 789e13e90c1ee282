/// Sparse matrix in coordinate form. Entries are kept in row-major order so
/// every product accumulates in the same sequence on every run.
#[derive(Debug, Clone, PartialEq)]
pub struct CooMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl CooMatrix {
    /// Sorts the triplets row-major. Duplicate coordinates are kept and add up.
    pub fn new(rows: usize, cols: usize, mut entries: Vec<(usize, usize, f64)>) -> Self {
        assert!(
            entries.iter().all(|&(i, j, _)| i < rows && j < cols),
            "triplet out of bounds"
        );
        entries.sort_by_key(|&(i, j, _)| (i, j));
        CooMatrix { rows, cols, entries }
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let entries = rows
            .iter()
            .enumerate()
            .flat_map(|(i, r)| {
                r.iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(move |(j, v)| (i, j, *v))
            })
            .collect();
        CooMatrix::new(rows.len(), cols, entries)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    /// `A x`
    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        let mut out = vec![0.0; self.rows];
        for &(i, j, v) in &self.entries {
            out[i] += v * x[j];
        }
        out
    }

    /// `A^T y`
    pub fn mul_t(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for &(i, j, v) in &self.entries {
            out[j] += v * y[i];
        }
        out
    }

    pub fn row_norms(&self) -> Vec<f64> {
        let mut sq = vec![0.0; self.rows];
        for &(i, _, v) in &self.entries {
            sq[i] += v * v;
        }
        sq.into_iter().map(f64::sqrt).collect()
    }

    pub fn col_norms(&self) -> Vec<f64> {
        let mut sq = vec![0.0; self.cols];
        for &(_, j, v) in &self.entries {
            sq[j] += v * v;
        }
        sq.into_iter().map(f64::sqrt).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn products_match_dense() {
        let a = CooMatrix::from_dense(&[vec![1.0, 0.0, 2.0], vec![0.0, -3.0, 0.5]]);
        assert_eq!(a.nnz(), 4);
        assert_eq!(a.mul(&[1.0, 2.0, 3.0]), vec![7.0, -4.5]);
        assert_eq!(a.mul_t(&[1.0, -1.0]), vec![1.0, 3.0, 1.5]);
        assert_eq!(a.row_norms()[0], 5f64.sqrt());
        assert_eq!(a.col_norms()[1], 3.0);
    }

    #[test]
    fn insertion_order_is_irrelevant() {
        let a = CooMatrix::new(2, 2, vec![(1, 0, 2.0), (0, 1, 1.0)]);
        let b = CooMatrix::new(2, 2, vec![(0, 1, 1.0), (1, 0, 2.0)]);
        assert_eq!(a, b);
    }
}
