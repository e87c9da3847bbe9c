//! Event sources that drive a run, one timestamp at a time.

use std::collections::VecDeque;

use crate::graph::GraphEvent;

/// Yields the graph events of successive timestamps. `None` means the source
/// is exhausted and the network stays frozen from then on.
pub trait EventSource {
    fn next_stamp(&mut self) -> Option<Vec<GraphEvent>>;
}

/// A source with no events: the initial network never changes.
#[derive(Debug, Clone, Copy, Default)]
pub struct Frozen;

impl EventSource for Frozen {
    fn next_stamp(&mut self) -> Option<Vec<GraphEvent>> {
        None
    }
}

/// A finite, pre-materialized sequence of timestamps.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventStream {
    stamps: VecDeque<Vec<GraphEvent>>,
}

impl EventStream {
    /// One event per timestamp, in order.
    pub fn per_event(events: impl IntoIterator<Item = GraphEvent>) -> Self {
        EventStream {
            stamps: events.into_iter().map(|e| vec![e]).collect(),
        }
    }

    pub fn from_stamps(stamps: impl IntoIterator<Item = Vec<GraphEvent>>) -> Self {
        EventStream {
            stamps: stamps.into_iter().collect(),
        }
    }

    /// Remaining timestamps.
    pub fn len(&self) -> usize {
        self.stamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stamps.is_empty()
    }

    pub fn event_count(&self) -> usize {
        self.stamps.iter().map(Vec::len).sum()
    }

    pub fn events(&self) -> impl Iterator<Item = &GraphEvent> {
        self.stamps.iter().flatten()
    }
}

impl EventSource for EventStream {
    fn next_stamp(&mut self) -> Option<Vec<GraphEvent>> {
        self.stamps.pop_front()
    }
}

impl<S: EventSource + ?Sized> EventSource for &mut S {
    fn next_stamp(&mut self) -> Option<Vec<GraphEvent>> {
        (**self).next_stamp()
    }
}

impl<S: EventSource + ?Sized> EventSource for Box<S> {
    fn next_stamp(&mut self) -> Option<Vec<GraphEvent>> {
        (**self).next_stamp()
    }
}
