//! Equal-weight artificial index built from a panel of stock prices.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::series::{validate_prices, PriceSeries};
use crate::{Error, Result};

fn all_but<T: Clone>(items: &[T], skip: usize) -> Vec<T> {
    items
        .iter()
        .enumerate()
        .filter(|&(m, _)| m != skip)
        .map(|(_, x)| x.clone())
        .collect()
}

/// `N` stocks observed on a shared grid of `T + 1` days.
#[derive(Debug, Clone, PartialEq)]
pub struct PricePanel {
    names: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl PricePanel {
    pub fn new(names: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.len() < 2 || names.len() != rows.len() {
            return Err(Error::TooFewStocks(rows.len().min(names.len())));
        }
        let expected = rows[0].len();
        for (row, (name, values)) in names.iter().zip(&rows).enumerate() {
            if values.len() != expected {
                return Err(Error::RaggedPanel {
                    row,
                    name: name.clone(),
                    len: values.len(),
                    expected,
                });
            }
            validate_prices(values).map_err(|source| Error::Stock {
                name: name.clone(),
                source: Box::new(source),
            })?;
        }
        Ok(Self { names, rows })
    }

    pub fn from_series(series: Vec<PriceSeries>) -> Result<Self> {
        let names = series.iter().map(|s| String::from(s.label())).collect();
        let rows = series.into_iter().map(|s| s.values().to_vec()).collect();
        Self::new(names, rows)
    }

    pub fn stocks(&self) -> usize {
        self.rows.len()
    }

    /// Number of return days `T`.
    pub fn days(&self) -> usize {
        self.rows[0].len() - 1
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn row(&self, n: usize) -> &[f64] {
        &self.rows[n]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn series(&self, n: usize) -> Result<PriceSeries> {
        self.check_stock(n)?;
        PriceSeries::new(self.names[n].as_str(), self.rows[n].clone())
    }

    /// Panel without stock `n`.
    pub fn without(&self, n: usize) -> Result<PricePanel> {
        self.check_stock(n)?;
        PricePanel::new(all_but(&self.names, n), all_but(&self.rows, n))
    }

    fn check_stock(&self, n: usize) -> Result<()> {
        if n >= self.rows.len() {
            return Err(Error::StockOutOfRange {
                index: n,
                count: self.rows.len(),
            });
        }
        Ok(())
    }

    /// Average of `S_{m,t} / S_{m,0}` over the stocks `m` that pass `include`.
    fn normalized_mean(&self, include: impl Fn(usize) -> bool) -> Vec<f64> {
        let members: Vec<&Vec<f64>> = self
            .rows
            .iter()
            .enumerate()
            .filter(|&(m, _)| include(m))
            .map(|(_, r)| r)
            .collect();
        let count = members.len() as f64;
        (0..self.rows[0].len())
            .map(|t| members.iter().map(|r| r[t] / r[0]).sum::<f64>() / count)
            .collect()
    }
}

/// `I_t = (1/N) Σ_n S_{n,t} / S_{n,0}`; `I_0 = 1` exactly.
pub fn build_index(panel: &PricePanel) -> PriceSeries {
    PriceSeries::new("index", panel.normalized_mean(|_| true))
        .expect("mean of positive prices is a valid series")
}

/// The equal-weight index of every stock except `n`.
pub fn leave_one_out_index(panel: &PricePanel, n: usize) -> Result<PriceSeries> {
    panel.check_stock(n)?;
    let label = format!("index without {}", panel.names[n]);
    PriceSeries::new(label, panel.normalized_mean(|m| m != n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn panel(rows: Vec<Vec<f64>>) -> PricePanel {
        let names = (0..rows.len()).map(|i| format!("s{i}")).collect();
        PricePanel::new(names, rows).unwrap()
    }

    #[test]
    fn validation() {
        assert_eq!(
            PricePanel::new(vec!["a".into()], vec![vec![1.0, 2.0]]),
            Err(Error::TooFewStocks(1))
        );
        assert!(matches!(
            PricePanel::new(
                vec!["a".into(), "b".into()],
                vec![vec![1.0, 2.0], vec![1.0]]
            ),
            Err(Error::RaggedPanel { row: 1, .. })
        ));
        assert!(matches!(
            PricePanel::new(
                vec!["a".into(), "b".into()],
                vec![vec![1.0, 2.0], vec![1.0, -1.0]]
            ),
            Err(Error::Stock { ref source, .. }) if **source == Error::NonPositivePrice { index: 1, value: -1.0 }
        ));
    }

    #[test]
    fn doubling_stocks() {
        let p = panel(vec![vec![2.0, 4.0], vec![7.0, 14.0], vec![0.5, 1.0]]);
        let i = build_index(&p);
        assert_eq!(i.values(), &[1.0, 2.0]);
    }

    #[test]
    fn two_stock_leave_one_out() {
        let p = panel(vec![vec![2.0, 3.0, 1.0], vec![4.0, 5.0, 8.0]]);
        let i1 = leave_one_out_index(&p, 0).unwrap();
        assert_eq!(i1.values(), &[1.0, 1.25, 2.0]);
        assert_eq!(
            leave_one_out_index(&p, 2),
            Err(Error::StockOutOfRange { index: 2, count: 2 })
        );
    }

    #[test]
    fn identical_stocks() {
        let row = vec![3.0, 3.3, 2.9, 4.1];
        let p = panel(vec![row.clone(), row.clone(), row]);
        let full = build_index(&p);
        for n in 0..3 {
            let loo = leave_one_out_index(&p, n).unwrap();
            for (a, b) in loo.values().iter().zip(full.values()) {
                assert!((a - b).abs() <= 1e-15 * b);
            }
        }
    }

    #[test]
    fn without_drops_one_row() {
        let p = panel(vec![vec![1.0, 2.0], vec![1.0, 3.0], vec![1.0, 4.0]]);
        let q = p.without(1).unwrap();
        assert_eq!(q.names(), &[String::from("s0"), String::from("s2")]);
        assert_eq!(build_index(&q).values(), &[1.0, 3.0]);
    }

    fn arb_panel() -> impl Strategy<Value = Vec<Vec<f64>>> {
        (2usize..8, 2usize..60).prop_flat_map(|(n, len)| {
            prop::collection::vec(prop::collection::vec(0.1f64..100.0, len), n)
        })
    }

    proptest! {
        #[test]
        fn index_starts_at_one(rows in arb_panel()) {
            prop_assert_eq!(build_index(&panel(rows)).first(), 1.0);
        }

        #[test]
        fn reconstitution_identity(rows in arb_panel()) {
            let p = panel(rows.clone());
            let n_stocks = rows.len() as f64;
            let full = build_index(&p);
            for n in 0..rows.len() {
                let loo = leave_one_out_index(&p, n).unwrap();
                for t in 0..full.values().len() {
                    let lhs = n_stocks * full.values()[t];
                    let rhs = (n_stocks - 1.0) * loo.values()[t] + rows[n][t] / rows[n][0];
                    prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
                }
            }
        }

        #[test]
        fn row_order_does_not_matter(rows in arb_panel(), rotate in 0usize..8) {
            let mut shuffled = rows.clone();
            let k = rotate % rows.len();
            shuffled.rotate_left(k);
            shuffled.reverse();
            let a = build_index(&panel(rows));
            let b = build_index(&panel(shuffled));
            for (x, y) in a.values().iter().zip(b.values()) {
                prop_assert!((x - y).abs() <= 1e-14 * x.abs());
            }
        }
    }
}
