//! Wall-clock phase accounting for decompositions.
//!
//! A [`RunTimer`] splits elapsed time into consecutive laps. Each lap is
//! charged to one [`Phase`], so the phase totals always add up to the total
//! elapsed time.

use std::time::{Duration, Instant};

use crate::serial::AtomStats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Phase {
    Load,
    Setup,
    VUpdate,
    UUpdate,
    Deflate,
    Write,
}

impl Phase {
    pub const ALL: [Phase; 6] = [
        Phase::Load,
        Phase::Setup,
        Phase::VUpdate,
        Phase::UUpdate,
        Phase::Deflate,
        Phase::Write,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Phase::Load => "load",
            Phase::Setup => "setup",
            Phase::VUpdate => "v_update",
            Phase::UUpdate => "u_update",
            Phase::Deflate => "deflate",
            Phase::Write => "write",
        }
    }

    pub fn from_name(name: &str) -> Option<Phase> {
        Phase::ALL.into_iter().find(|p| p.name() == name)
    }

    fn slot(self) -> usize {
        self as usize
    }
}

/// Per-atom progress event.
#[derive(Debug, Clone)]
pub struct AtomProgress {
    pub index: usize,
    pub iterations: usize,
    pub converged: bool,
    pub residual_norm: f64,
    pub seconds: f64,
}

type ProgressFn<'a> = Box<dyn FnMut(&AtomProgress) + 'a>;

pub struct RunTimer<'a> {
    start: Instant,
    last: Instant,
    atom_start: Instant,
    phases: [Duration; Phase::ALL.len()],
    atoms: Vec<AtomProgress>,
    progress: Option<ProgressFn<'a>>,
}

impl<'a> Default for RunTimer<'a> {
    fn default() -> Self {
        Self::new()
    }
}

impl<'a> RunTimer<'a> {
    pub fn new() -> Self {
        let now = Instant::now();
        Self {
            start: now,
            last: now,
            atom_start: now,
            phases: [Duration::ZERO; Phase::ALL.len()],
            atoms: Vec::new(),
            progress: None,
        }
    }

    /// Calls `f` once per accepted atom.
    pub fn with_progress(mut self, f: impl FnMut(&AtomProgress) + 'a) -> Self {
        self.progress = Some(Box::new(f));
        self
    }

    /// Charges the time since the previous lap to `phase`.
    pub fn lap(&mut self, phase: Phase) {
        let now = Instant::now();
        self.phases[phase.slot()] += now - self.last;
        self.last = now;
    }

    pub(crate) fn start_atom(&mut self) {
        self.atom_start = self.last;
    }

    pub(crate) fn finish_atom(&mut self, index: usize, stats: &AtomStats) {
        let event = AtomProgress {
            index,
            iterations: stats.iterations,
            converged: stats.converged,
            residual_norm: stats.residual_norm,
            seconds: (self.last - self.atom_start).as_secs_f64(),
        };
        if let Some(f) = self.progress.as_mut() {
            f(&event);
        }
        self.atoms.push(event);
    }

    pub fn phase(&self, phase: Phase) -> Duration {
        self.phases[phase.slot()]
    }

    /// Phase totals in declaration order.
    pub fn phases(&self) -> impl Iterator<Item = (Phase, Duration)> + '_ {
        Phase::ALL.into_iter().map(|p| (p, self.phase(p)))
    }

    /// Time from construction to the last lap.
    pub fn total(&self) -> Duration {
        self.last - self.start
    }

    pub fn atoms(&self) -> &[AtomProgress] {
        &self.atoms
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laps_tile_total() {
        let mut t = RunTimer::new();
        t.lap(Phase::Load);
        std::thread::sleep(Duration::from_millis(2));
        t.lap(Phase::VUpdate);
        t.lap(Phase::Write);
        let sum: Duration = t.phases().map(|(_, d)| d).sum();
        assert_eq!(sum, t.total());
        assert!(t.phase(Phase::VUpdate) >= Duration::from_millis(2));
    }

    #[test]
    fn phase_names_round_trip() {
        for p in Phase::ALL {
            assert_eq!(Phase::from_name(p.name()), Some(p));
        }
    }
}
