//! Compensated accumulation.

/// Neumaier's improved Kahan–Babuška summation.
#[derive(Clone, Copy, Debug, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = NeumaierSum::new();
        for v in iter {
            s.add(v);
        }
        s
    }
}

/// Compensated sum of a slice in index order.
pub fn neumaier(values: &[f64]) -> f64 {
    values.iter().copied().collect::<NeumaierSum>().total()
}

/// Componentwise compensated sum of fixed-width rows, in row order.
pub fn neumaier_rows<const K: usize>(rows: &[[f64; K]]) -> [f64; K] {
    let mut acc = [NeumaierSum::new(); K];
    for row in rows {
        for (a, v) in acc.iter_mut().zip(row) {
            a.add(*v);
        }
    }
    let mut out = [0.0; K];
    for (o, a) in out.iter_mut().zip(&acc) {
        *o = a.total();
    }
    out
}
