use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Fixed-capacity circular array of the most recent values of a series.
///
/// Once `capacity` values have been pushed the length stays at `capacity`
/// and every push overwrites the oldest value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RingBuffer {
    capacity: usize,
    slots: Vec<f64>,
    /// Next slot to overwrite.
    head: usize,
    written: u64,
}

impl RingBuffer {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(invalid("ring buffer capacity must be at least 1"));
        }
        Ok(Self {
            capacity,
            slots: Vec::with_capacity(capacity),
            head: 0,
            written: 0,
        })
    }

    /// Buffer of the given capacity pre-filled by pushing `values` in order.
    pub fn from_values(capacity: usize, values: &[f64]) -> Result<Self> {
        let mut ring = Self::new(capacity)?;
        for &v in values {
            ring.push(v);
        }
        Ok(ring)
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.slots.len() == self.capacity
    }

    /// Total number of values ever pushed.
    pub fn written(&self) -> u64 {
        self.written
    }

    /// Appends `value`, replacing the oldest element when full.
    #[inline]
    pub fn push(&mut self, value: f64) {
        if self.slots.len() < self.capacity {
            self.slots.push(value);
            self.head = self.slots.len() % self.capacity;
        } else {
            self.slots[self.head] = value;
            self.head += 1;
            if self.head == self.slots.len() {
                self.head = 0;
            }
        }
        self.written += 1;
    }

    /// Most recently pushed value.
    pub fn last(&self) -> Option<f64> {
        if self.slots.is_empty() {
            None
        } else {
            let idx = if self.head == 0 {
                self.slots.len() - 1
            } else {
                self.head - 1
            };
            Some(self.slots[idx])
        }
    }

    /// The latest `n` values, oldest first, as up to two contiguous runs.
    ///
    /// Panics if `n > self.len()`.
    #[inline]
    pub fn latest(&self, n: usize) -> (&[f64], &[f64]) {
        assert!(
            n <= self.slots.len(),
            "requested {n} values from a ring of {}",
            self.slots.len()
        );
        if !self.is_full() || self.head == 0 {
            let len = self.slots.len();
            return (&self.slots[len - n..], &[]);
        }
        let older_len = self.slots.len() - self.head;
        if n <= self.head {
            (&self.slots[self.head - n..self.head], &[])
        } else {
            let from_older = n - self.head;
            (
                &self.slots[self.head + (older_len - from_older)..],
                &self.slots[..self.head],
            )
        }
    }

    /// Checks the internal layout of a buffer that came from outside
    /// (e.g. a deserialized snapshot).
    pub(crate) fn validate(&self, capacity: usize) -> Result<()> {
        let consistent = self.capacity == capacity
            && self.slots.len() <= capacity
            && self.head < capacity
            && (self.is_full() || self.head == self.slots.len() % capacity)
            && self.written >= self.slots.len() as u64;
        if consistent {
            Ok(())
        } else {
            Err(invalid(format!(
                "ring buffer layout inconsistent with capacity {capacity}"
            )))
        }
    }

    /// All held values, oldest first.
    pub fn to_vec(&self) -> Vec<f64> {
        let (a, b) = self.latest(self.slots.len());
        let mut v = a.to_vec();
        v.extend_from_slice(b);
        v
    }
}
