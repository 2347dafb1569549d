/// Banked label store: local offset `x` lives in bank `x % e`, row `x / e`.
#[derive(Debug, Clone, PartialEq)]
pub struct Scratchpad<L> {
    banks: Vec<Vec<L>>,
    len: usize,
    capacity: usize,
}

impl<L: Copy> Scratchpad<L> {
    pub fn new(lanes: usize, capacity: usize) -> Self {
        assert!(lanes > 0 && capacity.is_multiple_of(lanes), "capacity must be a multiple of the bank count");
        Self { banks: vec![Vec::with_capacity(capacity / lanes); lanes], len: 0, capacity }
    }

    pub fn lanes(&self) -> usize {
        self.banks.len()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Number of resident labels.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Replaces the resident window with `labels`, striped across banks.
    pub fn load(&mut self, labels: &[L]) {
        assert!(labels.len() <= self.capacity, "window of {} labels exceeds capacity {}", labels.len(), self.capacity);
        let e = self.banks.len();
        for bank in &mut self.banks {
            bank.clear();
        }
        for (x, &l) in labels.iter().enumerate() {
            self.banks[x % e].push(l);
        }
        self.len = labels.len();
    }

    pub fn read(&self, local: u32) -> L {
        let x = local as usize;
        assert!(x < self.len, "scratch read at {x} outside resident window of {}", self.len);
        let e = self.banks.len();
        self.banks[x % e][x / e]
    }

    pub fn write(&mut self, local: u32, label: L) {
        let x = local as usize;
        assert!(x < self.len, "scratch write at {x} outside resident window of {}", self.len);
        let e = self.banks.len();
        self.banks[x % e][x / e] = label;
    }

    /// Resident window in offset order.
    pub fn contents(&self) -> Vec<L> {
        (0..self.len as u32).map(|x| self.read(x)).collect()
    }
}
