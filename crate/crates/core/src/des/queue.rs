use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// An event popped from the queue.
#[derive(Debug, Clone, PartialEq)]
pub struct Scheduled<E> {
    pub time: f64,
    pub seq: u64,
    pub event: E,
}

struct Entry<E>(Scheduled<E>);

impl<E> PartialEq for Entry<E> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<E> Eq for Entry<E> {}

impl<E> PartialOrd for Entry<E> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<E> Ord for Entry<E> {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .0
            .time
            .total_cmp(&self.0.time)
            .then_with(|| other.0.seq.cmp(&self.0.seq))
    }
}

/// Future event list. Pops in non-decreasing time; equal times pop in
/// insertion order.
pub struct EventQueue<E> {
    heap: BinaryHeap<Entry<E>>,
    next_seq: u64,
    now: f64,
}

impl<E> Default for EventQueue<E> {
    fn default() -> Self {
        Self::new()
    }
}

impl<E> EventQueue<E> {
    pub fn new() -> Self {
        Self {
            heap: BinaryHeap::new(),
            next_seq: 0,
            now: 0.0,
        }
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn peek_time(&self) -> Option<f64> {
        self.heap.peek().map(|e| e.0.time)
    }

    /// Schedules `event` at absolute `time`.
    ///
    /// # Panics
    /// If `time` is NaN or earlier than the current clock.
    pub fn schedule(&mut self, time: f64, event: E) -> u64 {
        assert!(!time.is_nan(), "event time is NaN");
        assert!(time >= self.now, "cannot schedule at {time} before now {}", self.now);
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Entry(Scheduled { time, seq, event }));
        seq
    }

    pub fn pop(&mut self) -> Option<Scheduled<E>> {
        let e = self.heap.pop()?.0;
        self.now = e.time;
        Some(e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ties_pop_in_insertion_order() {
        let mut q = EventQueue::new();
        q.schedule(1.0, "b");
        q.schedule(0.5, "a");
        q.schedule(1.0, "c");
        q.schedule(1.0, "d");
        let order: Vec<_> = std::iter::from_fn(|| q.pop()).map(|e| e.event).collect();
        assert_eq!(order, vec!["a", "b", "c", "d"]);
    }

    #[test]
    #[should_panic]
    fn rejects_past_events() {
        let mut q = EventQueue::new();
        q.schedule(2.0, ());
        q.pop();
        q.schedule(1.0, ());
    }

    proptest! {
        #[test]
        fn pops_sorted_by_time_then_seq(times in prop::collection::vec(0u8..20, 1..200)) {
            let mut q = EventQueue::new();
            for (i, t) in times.iter().enumerate() {
                q.schedule(f64::from(*t) / 4.0, i);
            }
            let mut last = (f64::NEG_INFINITY, 0u64);
            while let Some(e) = q.pop() {
                prop_assert!(e.time > last.0 || (e.time == last.0 && e.seq > last.1));
                prop_assert_eq!(e.seq as usize, e.event);
                last = (e.time, e.seq);
            }
        }
    }
}
