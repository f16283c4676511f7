use std::collections::VecDeque;

/// Bounded FIFO of outbound packets. Enqueuing into a full buffer drops the
/// newcomer.
#[derive(Debug, Clone, PartialEq)]
pub struct PacketBuffer<T> {
    queue: VecDeque<T>,
    capacity: usize,
    dropped: u64,
}

impl<T> PacketBuffer<T> {
    pub const DEFAULT_CAPACITY: usize = 64;

    pub fn new(capacity: usize) -> Self {
        PacketBuffer {
            queue: VecDeque::with_capacity(capacity.min(1024)),
            capacity,
            dropped: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn occupancy(&self) -> usize {
        self.queue.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }

    pub fn dropped(&self) -> u64 {
        self.dropped
    }

    /// Returns the packet back if the buffer was full.
    pub fn enqueue(&mut self, packet: T) -> Result<(), T> {
        if self.queue.len() >= self.capacity {
            self.dropped += 1;
            return Err(packet);
        }
        self.queue.push_back(packet);
        Ok(())
    }

    pub fn dequeue(&mut self) -> Option<T> {
        self.queue.pop_front()
    }

    /// Removes the oldest packet satisfying `pred`.
    pub fn take_first(&mut self, mut pred: impl FnMut(&T) -> bool) -> Option<T> {
        let idx = self.queue.iter().position(&mut pred)?;
        self.queue.remove(idx)
    }

    /// Removes every packet satisfying `pred`, oldest first.
    pub fn drain_matching(&mut self, mut pred: impl FnMut(&T) -> bool) -> Vec<T> {
        let (taken, kept): (VecDeque<T>, VecDeque<T>) = self.queue.drain(..).partition(|p| pred(p));
        self.queue = kept;
        taken.into()
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.queue.iter()
    }
}
