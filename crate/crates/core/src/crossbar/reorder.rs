use std::collections::VecDeque;

/// Restores issue order of request lines whose lanes return out of order.
#[derive(Debug, Clone)]
pub struct ReorderBuffer<L> {
    lanes: usize,
    data: Vec<Vec<Option<L>>>,
    received: Vec<u64>,
    /// Valid masks of open lines in issue order.
    fifo: VecDeque<u64>,
    /// Slot of the oldest open line.
    head: usize,
    /// Slot the next opened line receives.
    tail: usize,
}

impl<L: Copy> ReorderBuffer<L> {
    pub fn new(slots: usize, lanes: usize) -> Self {
        assert!(slots > 0, "at least one reorder slot is required");
        assert!(lanes <= 64, "lane masks are 64 bits wide");
        Self {
            lanes,
            data: vec![vec![None; lanes]; slots],
            received: vec![0; slots],
            fifo: VecDeque::with_capacity(slots),
            head: 0,
            tail: 0,
        }
    }

    pub fn slots(&self) -> usize {
        self.data.len()
    }

    pub fn occupancy(&self) -> usize {
        self.fifo.len()
    }

    /// Deasserted while every slot holds an open line.
    pub fn ready(&self) -> bool {
        self.fifo.len() < self.data.len()
    }

    /// Opens a line and returns its slot tag (issue sequence mod slots).
    pub fn open(&mut self, valid_mask: u64) -> usize {
        assert!(self.ready(), "line opened while reorder stage is full");
        let slot = self.tail;
        self.fifo.push_back(valid_mask);
        self.tail = (self.tail + 1) % self.data.len();
        slot
    }

    pub fn deliver(&mut self, slot: usize, lane: usize, label: L) {
        let bit = 1u64 << lane;
        assert_eq!(self.received[slot] & bit, 0, "duplicate response for slot {slot} lane {lane}");
        self.received[slot] |= bit;
        self.data[slot][lane] = Some(label);
    }

    /// Emits the oldest line once all its valid lanes have arrived.
    pub fn try_emit(&mut self) -> Option<Vec<Option<L>>> {
        let &mask = self.fifo.front()?;
        if self.received[self.head] != mask {
            return None;
        }
        self.fifo.pop_front();
        let line = std::mem::replace(&mut self.data[self.head], vec![None; self.lanes]);
        self.received[self.head] = 0;
        self.head = (self.head + 1) % self.data.len();
        Some(line)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_buffer_deasserts_ready() {
        let mut r = ReorderBuffer::<u32>::new(4, 2);
        for _ in 0..4 {
            r.open(0b11);
        }
        assert!(!r.ready());
        r.deliver(0, 0, 1);
        r.deliver(0, 1, 2);
        assert_eq!(r.try_emit(), Some(vec![Some(1), Some(2)]));
        assert!(r.ready());
    }

    #[test]
    fn head_waits_for_late_lane() {
        let mut r = ReorderBuffer::<u32>::new(4, 2);
        let tags: Vec<_> = (0..3).map(|_| r.open(0b11)).collect();
        assert_eq!(tags, vec![0, 1, 2]);
        for &t in &tags[1..] {
            r.deliver(t, 0, t as u32 * 10);
            r.deliver(t, 1, t as u32 * 10 + 1);
        }
        r.deliver(0, 1, 1);
        assert_eq!(r.try_emit(), None);
        r.deliver(0, 0, 0);
        let order: Vec<_> = std::iter::from_fn(|| r.try_emit()).map(|l| l[0].unwrap()).collect();
        assert_eq!(order, vec![0, 10, 20]);
    }

    #[test]
    fn empty_mask_emits_immediately() {
        let mut r = ReorderBuffer::<u32>::new(2, 4);
        r.open(0);
        assert_eq!(r.try_emit(), Some(vec![None; 4]));
    }

    #[test]
    fn pointer_wraps() {
        let mut r = ReorderBuffer::<u32>::new(2, 1);
        for k in 0..5u32 {
            let t = r.open(1);
            assert_eq!(t, k as usize % 2);
            r.deliver(t, 0, k);
            assert_eq!(r.try_emit(), Some(vec![Some(k)]));
        }
    }
}
