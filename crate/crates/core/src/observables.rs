//! Time series recorded by both propagators.

use crate::error::{Error, Result};
use crate::state::{inner, Domain, WaveFunction};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ObservableSeries {
    pub times: Vec<f64>,
    pub norm: Vec<f64>,
    pub energy: Vec<f64>,
    pub overlap: Option<Vec<f64>>,
    pub arrival_prob: Option<Vec<f64>>,
}

impl ObservableSeries {
    pub fn new(with_overlap: bool, with_arrival: bool) -> Self {
        Self {
            overlap: with_overlap.then(Vec::new),
            arrival_prob: with_arrival.then(Vec::new),
            ..Self::default()
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Appends one row. Optional columns must be supplied exactly when the
    /// series was created with them.
    ///
    /// # Panics
    /// If a column's presence does not match, or `t` does not increase.
    pub fn push(&mut self, t: f64, norm: f64, energy: f64, overlap: Option<f64>, arrival: Option<f64>) {
        if let Some(&last) = self.times.last() {
            assert!(t > last, "series times must increase: {t} after {last}");
        }
        self.times.push(t);
        self.norm.push(norm);
        self.energy.push(energy);
        match (&mut self.overlap, overlap) {
            (Some(col), Some(v)) => col.push(v),
            (None, None) => {}
            _ => panic!("overlap column presence mismatch"),
        }
        match (&mut self.arrival_prob, arrival) {
            (Some(col), Some(v)) => col.push(v),
            (None, None) => {}
            _ => panic!("arrival column presence mismatch"),
        }
    }

    pub fn last_time(&self) -> Option<f64> {
        self.times.last().copied()
    }

    /// Largest single-record energy increase, `max(E[k] - E[k-1])`.
    /// Negative when the sequence strictly decreases.
    pub fn max_energy_increase(&self) -> f64 {
        self.energy
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `|⟨reference|ψ⟩|²`.
pub fn vacuum_overlap(psi: &WaveFunction, reference: &WaveFunction) -> Result<f64> {
    Ok(inner(reference, psi)?.norm_sqr())
}

/// Probability in the `delta` rightmost sites `s - delta + 1 ..= s`.
pub fn arrival_probability(psi: &WaveFunction, delta: usize) -> Result<f64> {
    let s = match psi.domain() {
        Domain::Lattice(l) => l.sites(),
        Domain::Grid(_) => {
            return Err(Error::DomainMismatch(
                "arrival probability is defined on a lattice".into(),
            ))
        }
    };
    if delta == 0 || delta > s {
        return Err(Error::param(
            "lattice.delta",
            format!("need 1 <= delta <= s = {s}, got {delta}"),
        ));
    }
    Ok(psi.amplitudes()[s - delta..].iter().map(|a| a.norm_sqr()).sum())
}
