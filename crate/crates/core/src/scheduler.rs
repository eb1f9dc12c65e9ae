//! Exchangeable policies choosing the next pending activation.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// One runnable task as seen by a scheduler.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PoolEntry {
    /// Creation sequence number; lower means older.
    pub seq: u64,
    /// Number of activations registered as dependers of the task's property.
    pub dependers: usize,
}

/// Read access to the pool of runnable tasks. Never empty when handed to a
/// scheduler.
pub trait Pool {
    fn len(&self) -> usize;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
    fn first_seq(&self) -> u64;
    fn last_seq(&self) -> u64;
    fn nth_seq(&self, index: usize) -> u64;
    fn entries(&self) -> Box<dyn Iterator<Item = PoolEntry> + '_>;
}

pub trait Scheduler: Send {
    fn name(&self) -> &'static str;
    /// Returns the sequence number of a pool member.
    fn pick(&mut self, pool: &dyn Pool) -> u64;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum SchedulerPolicy {
    #[default]
    Fifo,
    Lifo,
    DependersFirst,
    /// Uniformly random choice; seeded for reproducibility.
    Random,
}

impl SchedulerPolicy {
    pub const ALL: [SchedulerPolicy; 4] = [
        SchedulerPolicy::Fifo,
        SchedulerPolicy::Lifo,
        SchedulerPolicy::DependersFirst,
        SchedulerPolicy::Random,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchedulerPolicy::Fifo => "fifo",
            SchedulerPolicy::Lifo => "lifo",
            SchedulerPolicy::DependersFirst => "dependers-first",
            SchedulerPolicy::Random => "random",
        }
    }

    pub fn build(self, seed: u64) -> Box<dyn Scheduler> {
        match self {
            SchedulerPolicy::Fifo => Box::new(Fifo),
            SchedulerPolicy::Lifo => Box::new(Lifo),
            SchedulerPolicy::DependersFirst => Box::new(DependersFirst),
            SchedulerPolicy::Random => Box::new(RandomPick(ChaCha8Rng::seed_from_u64(seed))),
        }
    }
}

impl fmt::Display for SchedulerPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchedulerPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown scheduler {s:?} (expected fifo, lifo, dependers-first or random)"))
    }
}

pub struct Fifo;

impl Scheduler for Fifo {
    fn name(&self) -> &'static str {
        "fifo"
    }

    fn pick(&mut self, pool: &dyn Pool) -> u64 {
        pool.first_seq()
    }
}

pub struct Lifo;

impl Scheduler for Lifo {
    fn name(&self) -> &'static str {
        "lifo"
    }

    fn pick(&mut self, pool: &dyn Pool) -> u64 {
        pool.last_seq()
    }
}

/// Prefers the task whose property has the most registered dependers; ties
/// go to the oldest task.
pub struct DependersFirst;

impl Scheduler for DependersFirst {
    fn name(&self) -> &'static str {
        "dependers-first"
    }

    fn pick(&mut self, pool: &dyn Pool) -> u64 {
        let mut best: Option<PoolEntry> = None;
        for e in pool.entries() {
            best = match best {
                Some(b) if b.dependers > e.dependers => Some(b),
                Some(b) if b.dependers == e.dependers && b.seq < e.seq => Some(b),
                _ => Some(e),
            };
        }
        best.expect("pool is never empty").seq
    }
}

pub struct RandomPick(ChaCha8Rng);

impl Scheduler for RandomPick {
    fn name(&self) -> &'static str {
        "random"
    }

    fn pick(&mut self, pool: &dyn Pool) -> u64 {
        let i = self.0.gen_range(0..pool.len());
        pool.nth_seq(i)
    }
}
