use std::collections::VecDeque;

/// Collects updates per label line and writes a line back when an update
/// to a different line arrives. One line write per cycle.
#[derive(Debug, Clone)]
pub struct BufferedWriter {
    labels_per_line: u32,
    pending: Option<u32>,
    queue: VecDeque<u32>,
    lines_written: u64,
}

impl BufferedWriter {
    pub fn new(labels_per_line: u32) -> Self {
        assert!(labels_per_line > 0);
        Self { labels_per_line, pending: None, queue: VecDeque::new(), lines_written: 0 }
    }

    /// Queues an update to local vertex `id`.
    pub fn push(&mut self, id: u32) {
        self.queue.push_back(id);
    }

    pub fn queued(&self) -> usize {
        self.queue.len()
    }

    pub fn pending_line(&self) -> Option<u32> {
        self.pending
    }

    pub fn lines_written(&self) -> u64 {
        self.lines_written
    }

    /// One cycle: merges queued updates until a second line write would be
    /// needed. Returns whether the write port was used.
    pub fn step(&mut self) -> bool {
        let mut port_used = false;
        while let Some(&id) = self.queue.front() {
            let line = id / self.labels_per_line;
            match self.pending {
                Some(p) if p == line => {}
                Some(_) if port_used => break,
                Some(_) => {
                    self.lines_written += 1;
                    port_used = true;
                    self.pending = Some(line);
                }
                None => self.pending = Some(line),
            }
            self.queue.pop_front();
        }
        port_used
    }

    /// Writes the pending line; returns whether a write happened.
    pub fn flush(&mut self) -> bool {
        debug_assert!(self.queue.is_empty(), "flush with queued updates");
        if self.pending.take().is_some() {
            self.lines_written += 1;
            true
        } else {
            false
        }
    }

    pub fn is_idle(&self) -> bool {
        self.queue.is_empty() && self.pending.is_none()
    }
}
