//! Zero-sum matrix games solved by linear programming.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Payoff matrix; the row player maximises, the column player minimises.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixGame<T> {
    rows: usize,
    cols: usize,
    entries: Vec<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatrixSolution<T> {
    pub value: T,
    pub row: Vec<T>,
    pub col: Vec<T>,
}

impl<T: Scalar> MatrixGame<T> {
    pub fn new(rows: Vec<Vec<T>>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || cols == 0 {
            return Err(Error::Invalid("matrix game needs at least one entry".into()));
        }
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Invalid("matrix game rows differ in length".into()));
        }
        if rows.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::Invalid("matrix game has a non-finite entry".into()));
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            entries: rows.into_iter().flatten().collect(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.entries[i * self.cols + j]
    }

    /// The same game with the roles of maximiser and minimiser swapped on the
    /// payoff, i.e. every entry negated.
    pub fn negated(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|&x| -x).collect(),
        }
    }

    /// Guaranteed payoff of mixed row strategy `p` against every column.
    pub fn row_guarantee(&self, p: &[T]) -> T {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| p[i] * self.get(i, j)).sum::<T>())
            .fold(T::infinity(), T::min)
    }

    /// Worst payoff conceded by mixed column strategy `q` over every row.
    pub fn col_guarantee(&self, q: &[T]) -> T {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| q[j] * self.get(i, j)).sum::<T>())
            .fold(T::neg_infinity(), T::max)
    }

    /// Distance between what the two strategies guarantee; zero at equilibrium.
    pub fn gap(&self, sol: &MatrixSolution<T>) -> T {
        self.col_guarantee(&sol.col) - self.row_guarantee(&sol.row)
    }

    fn min_entry(&self) -> T {
        self.entries.iter().copied().fold(T::infinity(), T::min)
    }

    fn max_entry(&self) -> T {
        self.entries.iter().copied().fold(T::neg_infinity(), T::max)
    }
}

/// Value and optimal mixed strategies of a matrix game.
///
/// Pure saddle points are returned directly (first maximin row, first
/// minimax column). Otherwise the column player's LP
/// `max Σy  s.t.  M'y ≤ 1, y ≥ 0` over the positively shifted matrix is
/// solved with Bland's rule and the row strategy is read from the duals.
pub fn matrix_game_value<T: Scalar>(game: &MatrixGame<T>) -> MatrixSolution<T> {
    if let Some(sol) = pure_saddle(game) {
        return sol;
    }
    let (m, n) = (game.rows, game.cols);
    let shift = game.min_entry() - T::one();
    let width = n + m + 1;
    let mut tab = vec![T::zero(); (m + 1) * width];
    for i in 0..m {
        for j in 0..n {
            tab[i * width + j] = game.get(i, j) - shift;
        }
        tab[i * width + n + i] = T::one();
        tab[i * width + width - 1] = T::one();
    }
    for j in 0..n {
        tab[m * width + j] = -T::one();
    }
    let mut basis: Vec<usize> = (n..n + m).collect();
    let eps = T::epsilon() * T::from_f64_lossy(1e3);

    loop {
        let entering = (0..n + m).find(|&j| tab[m * width + j] < -eps);
        let Some(e) = entering else { break };
        let mut leave: Option<(usize, T)> = None;
        for i in 0..m {
            let a = tab[i * width + e];
            if a > eps {
                let ratio = tab[i * width + width - 1] / a;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((l, r)) => {
                        if ratio < r - eps || (ratio <= r + eps && basis[i] < basis[l]) {
                            Some((i, ratio))
                        } else {
                            Some((l, r))
                        }
                    }
                };
            }
        }
        // The shifted matrix is positive, so the LP is bounded.
        let Some((l, _)) = leave else { break };
        pivot(&mut tab, width, m, l, e);
        basis[l] = e;
    }

    let z = tab[m * width + width - 1];
    let mut col = vec![T::zero(); n];
    for (i, &b) in basis.iter().enumerate() {
        if b < n {
            col[b] = tab[i * width + width - 1];
        }
    }
    let mut row: Vec<T> = (0..m).map(|i| tab[m * width + n + i].max(T::zero())).collect();
    normalise(&mut col);
    normalise(&mut row);
    let value = (T::one() / z + shift).max(game.min_entry()).min(game.max_entry());
    MatrixSolution { value, row, col }
}

fn pivot<T: Scalar>(tab: &mut [T], width: usize, m: usize, l: usize, e: usize) {
    let p = tab[l * width + e];
    for k in 0..width {
        tab[l * width + k] = tab[l * width + k] / p;
    }
    for i in 0..=m {
        if i == l {
            continue;
        }
        let f = tab[i * width + e];
        if f == T::zero() {
            continue;
        }
        for k in 0..width {
            let v = tab[l * width + k];
            tab[i * width + k] = tab[i * width + k] - f * v;
        }
    }
}

fn normalise<T: Scalar>(v: &mut [T]) {
    let total: T = v.iter().copied().sum();
    if total > T::zero() {
        v.iter_mut().for_each(|x| *x = *x / total);
    } else {
        let u = T::one() / T::from_usize_lossy(v.len());
        v.iter_mut().for_each(|x| *x = u);
    }
}

fn pure_saddle<T: Scalar>(game: &MatrixGame<T>) -> Option<MatrixSolution<T>> {
    let (m, n) = (game.rows, game.cols);
    let mut best_row = (0, T::neg_infinity());
    for i in 0..m {
        let worst = (0..n).map(|j| game.get(i, j)).fold(T::infinity(), T::min);
        if worst > best_row.1 {
            best_row = (i, worst);
        }
    }
    let mut best_col = (0, T::infinity());
    for j in 0..n {
        let worst = (0..m).map(|i| game.get(i, j)).fold(T::neg_infinity(), T::max);
        if worst < best_col.1 {
            best_col = (j, worst);
        }
    }
    if best_row.1 != best_col.1 {
        return None;
    }
    let mut row = vec![T::zero(); m];
    let mut col = vec![T::zero(); n];
    row[best_row.0] = T::one();
    col[best_col.0] = T::one();
    Some(MatrixSolution {
        value: best_row.1,
        row,
        col,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solve(rows: Vec<Vec<f64>>) -> (MatrixGame<f64>, MatrixSolution<f64>) {
        let g = MatrixGame::new(rows).unwrap();
        let s = matrix_game_value(&g);
        (g, s)
    }

    #[test]
    fn single_entry() {
        let (_, s) = solve(vec![vec![3.5]]);
        assert_eq!(s.value, 3.5);
    }

    #[test]
    fn matching_pennies() {
        let (g, s) = solve(vec![vec![1.0, -1.0], vec![-1.0, 1.0]]);
        assert!(s.value.abs() < 1e-12);
        for x in s.row.iter().chain(&s.col) {
            assert!((x - 0.5).abs() < 1e-12);
        }
        assert!(g.gap(&s).abs() < 1e-12);
    }

    #[test]
    fn junction_step_game_with_minimising_rows() {
        // Rows minimise crash probability, so the matrix is negated.
        let (_, s) = solve(vec![vec![-0.12, -0.2], vec![-0.6, -1.0]]);
        assert!((-s.value - 0.2).abs() < 1e-12);
        assert_eq!(s.row, vec![1.0, 0.0]);
        assert_eq!(s.col, vec![0.0, 1.0]);
        // Without an opposing column player the minimum entry is reached.
        let (_, s) = solve(vec![vec![-0.12], vec![-0.2], vec![-0.6], vec![-1.0]]);
        assert!((-s.value - 0.12).abs() < 1e-12);
        assert_eq!(s.row, vec![1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn mixed_three_by_three() {
        // Rock-paper-scissors with a bonus on one diagonal entry.
        let (g, s) = solve(vec![vec![0.5, -1.0, 1.0], vec![1.0, 0.0, -1.0], vec![-1.0, 1.0, 0.0]]);
        assert!(g.gap(&s).abs() < 1e-9);
        assert!((g.row_guarantee(&s.row) - s.value).abs() < 1e-9);
    }

    #[test]
    fn generic_over_f32() {
        let g = MatrixGame::<f32>::new(vec![vec![2.0, -1.0], vec![-1.0, 1.0]]).unwrap();
        let s = matrix_game_value(&g);
        assert!((s.value - 0.2).abs() < 1e-5);
    }

    #[test]
    fn rejects_ragged_and_empty() {
        assert!(MatrixGame::<f64>::new(vec![]).is_err());
        assert!(MatrixGame::new(vec![vec![1.0], vec![1.0, 2.0]]).is_err());
        assert!(MatrixGame::new(vec![vec![f64::NAN]]).is_err());
    }
}
