pub mod balancer;
pub mod coverage_graph;
pub mod error;
pub mod example1;
pub mod geometry;
pub mod link_budget;
pub mod metrics;
pub mod scenario;
