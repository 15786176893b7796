//! Instrumentation hooks for counting node visits during scoring.

use std::collections::BTreeSet;

use crate::graph::NodeId;

/// Receives one call per node touched by a scoring routine.
pub trait VisitProbe {
    fn visit(&mut self, node: NodeId);
}

/// Discards visits.
impl VisitProbe for () {
    #[inline(always)]
    fn visit(&mut self, _node: NodeId) {}
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct VisitCounter {
    pub visits: u64,
}

impl VisitProbe for VisitCounter {
    #[inline]
    fn visit(&mut self, _node: NodeId) {
        self.visits += 1;
    }
}

/// Counts visits and remembers which distinct nodes were touched.
#[derive(Debug, Clone, Default)]
pub struct VisitLog {
    pub visits: u64,
    pub nodes: BTreeSet<NodeId>,
}

impl VisitProbe for VisitLog {
    fn visit(&mut self, node: NodeId) {
        self.visits += 1;
        self.nodes.insert(node);
    }
}

impl<P: VisitProbe + ?Sized> VisitProbe for &mut P {
    #[inline]
    fn visit(&mut self, node: NodeId) {
        (**self).visit(node);
    }
}
