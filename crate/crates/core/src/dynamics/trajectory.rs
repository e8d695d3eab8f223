use std::io::Write;
use std::path::Path;

use nalgebra::DVector;

use crate::error::{Error, Result};

/// Sampled scalar trajectory `x(t)` of the consensus system.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
}

impl Trajectory {
    pub fn n(&self) -> usize {
        self.states.first().map_or(0, |s| s.len())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<(f64, &DVector<f64>)> {
        Some((*self.times.last()?, self.states.last()?))
    }

    /// State at the latest sample time `<= t`.
    pub fn state_at(&self, t: f64) -> Option<&DVector<f64>> {
        let k = self.times.partition_point(|&s| s <= t);
        k.checked_sub(1).map(|k| &self.states[k])
    }

    /// Values of agent `i` across all samples.
    pub fn agent(&self, i: usize) -> impl Iterator<Item = f64> + '_ {
        self.states.iter().map(move |s| s[i])
    }

    /// Largest increase of `max_i x_i` or decrease of `min_i x_i` between
    /// consecutive samples (0 for a hull-invariant trajectory).
    pub fn hull_violation(&self) -> f64 {
        self.states
            .windows(2)
            .map(|w| {
                let up = w[1].max() - w[0].max();
                let down = w[0].min() - w[1].min();
                up.max(down).max(0.0)
            })
            .fold(0.0, f64::max)
    }

    /// CSV with header `t,x1,...,xn`, 17 significant digits per value.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string()];
        header.extend((1..=self.n()).map(|i| format!("x{i}")));
        w.write_record(&header)?;
        for (t, s) in self.times.iter().zip(&self.states) {
            let mut row = vec![format!("{t:.16e}")];
            row.extend(s.iter().map(|x| format!("{x:.16e}")));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn read_csv<R: std::io::Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let mut times = Vec::new();
        let mut states = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let vals = rec
                .iter()
                .map(|f| f.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::InvalidArgument(format!("bad trajectory value: {e}")))?;
            let (t, rest) = vals.split_first().ok_or_else(|| Error::InvalidArgument("empty row".into()))?;
            times.push(*t);
            states.push(DVector::from_column_slice(rest));
        }
        Ok(Trajectory { times, states })
    }
}
