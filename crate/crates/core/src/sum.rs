//! Compensated (Neumaier) summation so that reductions are order-stable to
//! well below 1e-12 relative.

#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct Accumulator {
    sum: f64,
    compensation: f64,
}

impl Accumulator {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn total(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Mean accumulated as offsets from the first sample, so a run of identical
/// values averages to exactly that value.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct MeanAccumulator {
    origin: Option<f64>,
    offsets: Accumulator,
    count: usize,
}

impl MeanAccumulator {
    pub(crate) fn add(&mut self, x: f64) {
        let origin = *self.origin.get_or_insert(x);
        self.offsets.add(x - origin);
        self.count += 1;
    }

    /// `None` before the first sample.
    pub(crate) fn mean(&self) -> Option<f64> {
        let origin = self.origin?;
        Some(origin + self.offsets.total() / self.count as f64)
    }
}

pub(crate) fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = Accumulator::default();
    for x in values {
        acc.add(x);
    }
    acc.total()
}
