//! Packet-level interface shared by the simulator and the live network.
//!
//! The scanner and the traceroute engine are written against [`Endpoint`] so
//! the same code runs unchanged against [`crate::netsim`] and real sockets.

use std::net::Ipv4Addr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[cfg(unix)]
pub mod live;

/// Default IP TTL for application sends.
pub const DEFAULT_TTL: u8 = 64;

#[derive(Debug, Error)]
pub enum NetError {
    #[error("socket error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Unsupported(&'static str),
}

/// A UDP datagram to put on the wire.
#[derive(Debug, Clone)]
pub struct Outgoing {
    pub dst: Ipv4Addr,
    pub dst_port: u16,
    pub src_port: u16,
    pub ttl: u8,
    pub payload: Vec<u8>,
}

/// Header snippet quoted inside a TTL-exceeded notice; enough to attribute
/// the notice to the probe that triggered it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeQuote {
    pub src: Ipv4Addr,
    pub dst: Ipv4Addr,
    pub src_port: u16,
    pub dst_port: u16,
    /// DNS transaction id, when the quote reaches into the UDP payload.
    pub dns_id: Option<u16>,
}

/// Something the network handed back to an endpoint.
#[derive(Debug, Clone)]
pub enum NetEvent {
    /// A UDP datagram, presumed to carry DNS.
    Dns {
        from: Ipv4Addr,
        from_port: u16,
        /// Local port the datagram arrived on.
        local_port: u16,
        at_ms: u64,
        payload: Vec<u8>,
    },
    /// An ICMP time-exceeded notice for one of our probes.
    TtlExceeded {
        hop: Ipv4Addr,
        at_ms: u64,
        quote: ProbeQuote,
    },
}

impl NetEvent {
    pub fn at_ms(&self) -> u64 {
        match self {
            NetEvent::Dns { at_ms, .. } | NetEvent::TtlExceeded { at_ms, .. } => *at_ms,
        }
    }
}

/// One endpoint's view of a network: paced sends, timed receives, a clock.
///
/// Clocks are in milliseconds from an arbitrary per-run origin. Simulated
/// endpoints advance the simulation when asked to wait; live endpoints sleep.
pub trait Endpoint {
    fn local_addr(&self) -> Ipv4Addr;
    fn now_ms(&self) -> u64;
    fn send(&mut self, out: Outgoing) -> Result<(), NetError>;
    /// Next event arriving at or before `deadline_ms`, or `None` once the
    /// deadline passes. The clock never runs past the returned event.
    fn recv_until(&mut self, deadline_ms: u64) -> Option<NetEvent>;
    /// Let time pass until `t_ms` without taking events off the queue.
    fn wait_until(&mut self, t_ms: u64);
}
