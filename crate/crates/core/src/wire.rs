//! Minimal DNS wire codec (RFC 1035) for DNS over UDP.
//!
//! Covers exactly what the toolkit needs: the 12-byte header, a single
//! question, and `A` records in the answer section. Unknown record types in
//! the answer section are skipped on decode; authority and additional
//! sections are ignored. Name compression is accepted on decode and never
//! emitted on encode.

use std::fmt;
use std::net::Ipv4Addr;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// UDP port DNS speaks on.
pub const DNS_PORT: u16 = 53;
/// Fixed DNS header size.
pub const HEADER_LEN: usize = 12;
/// RFC 1035: a label is at most 63 octets.
pub const MAX_LABEL_LEN: usize = 63;
/// RFC 1035: a name is at most 255 octets on the wire.
pub const MAX_NAME_LEN: usize = 255;
/// Compression pointer hops tolerated before declaring a loop.
const MAX_POINTER_HOPS: usize = 16;

/// QTYPE value for an IPv4 host address record.
pub const QTYPE_A: u16 = 1;
/// QCLASS value for the Internet class.
pub const QCLASS_IN: u16 = 1;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WireError {
    #[error("message truncated: need {need} bytes, have {have}")]
    Truncated { need: usize, have: usize },
    #[error("label exceeds {MAX_LABEL_LEN} octets")]
    LabelTooLong,
    #[error("name exceeds {MAX_NAME_LEN} octets")]
    NameTooLong,
    #[error("empty label in name")]
    EmptyLabel,
    #[error("byte {0:#04x} not allowed in a label")]
    BadLabelByte(u8),
    #[error("compression pointer loop")]
    PointerLoop,
    #[error("unsupported question count {0}")]
    QuestionCount(u16),
}

fn label_byte_ok(b: u8) -> bool {
    b.is_ascii_graphic() && b != b'.'
}

/// A domain name held as dot-separated labels.
///
/// Comparison and hashing are case-insensitive, matching DNS semantics; the
/// original spelling is preserved for encoding. A trailing root dot is
/// stripped on construction.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Name(String);

impl Name {
    pub fn new(s: &str) -> Result<Self, WireError> {
        let trimmed = s.strip_suffix('.').unwrap_or(s);
        if trimmed.is_empty() {
            return Err(WireError::EmptyLabel);
        }
        let mut wire_len = 1usize; // trailing root byte
        for label in trimmed.split('.') {
            if label.is_empty() {
                return Err(WireError::EmptyLabel);
            }
            if label.len() > MAX_LABEL_LEN {
                return Err(WireError::LabelTooLong);
            }
            if let Some(b) = label.bytes().find(|&b| !label_byte_ok(b)) {
                return Err(WireError::BadLabelByte(b));
            }
            wire_len += 1 + label.len();
        }
        if wire_len > MAX_NAME_LEN {
            return Err(WireError::NameTooLong);
        }
        Ok(Name(trimmed.to_string()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.0.split('.')
    }

    /// Octets this name occupies on the wire (labels, length bytes, root).
    pub fn wire_len(&self) -> usize {
        self.0.len() + 2
    }

    /// True if `self` equals `zone` or lies underneath it.
    pub fn is_within(&self, zone: &Name) -> bool {
        if self == zone {
            return true;
        }
        let name = self.0.as_bytes();
        let suffix = zone.0.as_bytes();
        if name.len() <= suffix.len() {
            return false;
        }
        let tail = &name[name.len() - suffix.len()..];
        tail.eq_ignore_ascii_case(suffix) && name[name.len() - suffix.len() - 1] == b'.'
    }
}

impl PartialEq for Name {
    fn eq(&self, other: &Self) -> bool {
        self.0.eq_ignore_ascii_case(&other.0)
    }
}

impl Eq for Name {}

impl std::hash::Hash for Name {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        for b in self.0.bytes() {
            state.write_u8(b.to_ascii_lowercase());
        }
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for Name {
    type Err = WireError;
    fn from_str(s: &str) -> Result<Self, WireError> {
        Name::new(s)
    }
}

impl TryFrom<String> for Name {
    type Error = WireError;
    fn try_from(s: String) -> Result<Self, WireError> {
        Name::new(&s)
    }
}

impl From<Name> for String {
    fn from(n: Name) -> String {
        n.0
    }
}

/// Response code, 4 bits on the wire.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rcode {
    NoError,
    FormErr,
    ServFail,
    NxDomain,
    NotImp,
    Refused,
    Other(u8),
}

impl Default for Rcode {
    fn default() -> Self {
        Rcode::NoError
    }
}

impl Rcode {
    pub fn from_u8(v: u8) -> Self {
        match v & 0x0f {
            0 => Rcode::NoError,
            1 => Rcode::FormErr,
            2 => Rcode::ServFail,
            3 => Rcode::NxDomain,
            4 => Rcode::NotImp,
            5 => Rcode::Refused,
            other => Rcode::Other(other),
        }
    }

    pub fn to_u8(self) -> u8 {
        match self {
            Rcode::NoError => 0,
            Rcode::FormErr => 1,
            Rcode::ServFail => 2,
            Rcode::NxDomain => 3,
            Rcode::NotImp => 4,
            Rcode::Refused => 5,
            Rcode::Other(v) => v & 0x0f,
        }
    }
}

/// Header flags reduced to the bits this toolkit inspects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Flags {
    pub response: bool,
    pub recursion_desired: bool,
    pub recursion_available: bool,
    pub rcode: Rcode,
}

impl Flags {
    fn to_u16(self) -> u16 {
        let mut v = 0u16;
        if self.response {
            v |= 1 << 15;
        }
        if self.recursion_desired {
            v |= 1 << 8;
        }
        if self.recursion_available {
            v |= 1 << 7;
        }
        v | u16::from(self.rcode.to_u8())
    }

    fn from_u16(v: u16) -> Self {
        Flags {
            response: v & (1 << 15) != 0,
            recursion_desired: v & (1 << 8) != 0,
            recursion_available: v & (1 << 7) != 0,
            rcode: Rcode::from_u8((v & 0x0f) as u8),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Question {
    pub qname: Name,
    pub qtype: u16,
    pub qclass: u16,
}

/// An IPv4 address record from the answer section.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ARecord {
    pub name: Name,
    pub ttl: u32,
    pub addr: Ipv4Addr,
}

/// A DNS message restricted to one question plus A-record answers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DnsMessage {
    pub id: u16,
    pub flags: Flags,
    pub question: Question,
    pub answers: Vec<ARecord>,
}

impl DnsMessage {
    /// A recursion-desired A query for `qname`.
    pub fn query(id: u16, qname: &str) -> Result<Self, WireError> {
        Ok(DnsMessage {
            id,
            flags: Flags {
                recursion_desired: true,
                ..Flags::default()
            },
            question: Question {
                qname: Name::new(qname)?,
                qtype: QTYPE_A,
                qclass: QCLASS_IN,
            },
            answers: Vec::new(),
        })
    }

    /// A response echoing `query`'s id and question.
    pub fn response_to(query: &DnsMessage, rcode: Rcode, answers: Vec<ARecord>) -> Self {
        DnsMessage {
            id: query.id,
            flags: Flags {
                response: true,
                recursion_desired: query.flags.recursion_desired,
                recursion_available: query.flags.recursion_available,
                rcode,
            },
            question: query.question.clone(),
            answers,
        }
    }

    pub fn is_query(&self) -> bool {
        !self.flags.response
    }
}

fn put_name(out: &mut Vec<u8>, name: &Name) {
    for label in name.labels() {
        out.push(label.len() as u8);
        out.extend_from_slice(label.as_bytes());
    }
    out.push(0);
}

/// Encode a message; the `Name` invariants make this total.
pub fn encode(msg: &DnsMessage) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + msg.question.qname.wire_len() + 4 + msg.answers.len() * 20);
    out.extend_from_slice(&msg.id.to_be_bytes());
    out.extend_from_slice(&msg.flags.to_u16().to_be_bytes());
    out.extend_from_slice(&1u16.to_be_bytes()); // qdcount
    out.extend_from_slice(&(msg.answers.len() as u16).to_be_bytes());
    out.extend_from_slice(&0u16.to_be_bytes()); // nscount
    out.extend_from_slice(&0u16.to_be_bytes()); // arcount
    put_name(&mut out, &msg.question.qname);
    out.extend_from_slice(&msg.question.qtype.to_be_bytes());
    out.extend_from_slice(&msg.question.qclass.to_be_bytes());
    for rec in &msg.answers {
        put_name(&mut out, &rec.name);
        out.extend_from_slice(&QTYPE_A.to_be_bytes());
        out.extend_from_slice(&QCLASS_IN.to_be_bytes());
        out.extend_from_slice(&rec.ttl.to_be_bytes());
        out.extend_from_slice(&4u16.to_be_bytes());
        out.extend_from_slice(&rec.addr.octets());
    }
    out
}

struct Reader<'a> {
    raw: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn need(&self, n: usize) -> Result<(), WireError> {
        if self.pos + n > self.raw.len() {
            return Err(WireError::Truncated {
                need: self.pos + n,
                have: self.raw.len(),
            });
        }
        Ok(())
    }

    fn u8(&mut self) -> Result<u8, WireError> {
        self.need(1)?;
        let v = self.raw[self.pos];
        self.pos += 1;
        Ok(v)
    }

    fn u16(&mut self) -> Result<u16, WireError> {
        self.need(2)?;
        let v = u16::from_be_bytes([self.raw[self.pos], self.raw[self.pos + 1]]);
        self.pos += 2;
        Ok(v)
    }

    fn u32(&mut self) -> Result<u32, WireError> {
        self.need(4)?;
        let v = u32::from_be_bytes([
            self.raw[self.pos],
            self.raw[self.pos + 1],
            self.raw[self.pos + 2],
            self.raw[self.pos + 3],
        ]);
        self.pos += 4;
        Ok(v)
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], WireError> {
        self.need(n)?;
        let s = &self.raw[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    /// Read a possibly-compressed name. The cursor ends just past the name's
    /// first pointer (or its terminating root byte when uncompressed).
    fn name(&mut self) -> Result<Name, WireError> {
        let mut labels: Vec<String> = Vec::new();
        let mut wire_len = 1usize;
        let mut hops = 0usize;
        let mut cursor = self.pos;
        let mut after: Option<usize> = None;
        loop {
            if cursor >= self.raw.len() {
                return Err(WireError::Truncated {
                    need: cursor + 1,
                    have: self.raw.len(),
                });
            }
            let len = self.raw[cursor];
            match len {
                0 => {
                    if after.is_none() {
                        after = Some(cursor + 1);
                    }
                    break;
                }
                l if l & 0xc0 == 0xc0 => {
                    if cursor + 1 >= self.raw.len() {
                        return Err(WireError::Truncated {
                            need: cursor + 2,
                            have: self.raw.len(),
                        });
                    }
                    hops += 1;
                    if hops > MAX_POINTER_HOPS {
                        return Err(WireError::PointerLoop);
                    }
                    let target = usize::from(u16::from_be_bytes([l & 0x3f, self.raw[cursor + 1]]));
                    if after.is_none() {
                        after = Some(cursor + 2);
                    }
                    cursor = target;
                }
                l if l & 0xc0 != 0 => {
                    // 0x40/0x80 prefixes are unassigned label types
                    return Err(WireError::BadLabelByte(l));
                }
                l => {
                    let l = usize::from(l);
                    if cursor + 1 + l > self.raw.len() {
                        return Err(WireError::Truncated {
                            need: cursor + 1 + l,
                            have: self.raw.len(),
                        });
                    }
                    wire_len += 1 + l;
                    if wire_len > MAX_NAME_LEN {
                        return Err(WireError::NameTooLong);
                    }
                    let bytes = &self.raw[cursor + 1..cursor + 1 + l];
                    if let Some(&b) = bytes.iter().find(|b| !label_byte_ok(**b)) {
                        return Err(WireError::BadLabelByte(b));
                    }
                    labels.push(String::from_utf8(bytes.to_vec()).expect("ascii checked"));
                    cursor += 1 + l;
                }
            }
        }
        self.pos = after.expect("set on every exit path");
        if labels.is_empty() {
            return Err(WireError::EmptyLabel);
        }
        Ok(Name(labels.join(".")))
    }
}

/// Decode a UDP payload. Never panics: malformed input yields a `WireError`.
pub fn decode(raw: &[u8]) -> Result<DnsMessage, WireError> {
    let mut r = Reader { raw, pos: 0 };
    let id = r.u16()?;
    let flags = Flags::from_u16(r.u16()?);
    let qdcount = r.u16()?;
    let ancount = r.u16()?;
    let _nscount = r.u16()?;
    let _arcount = r.u16()?;
    if qdcount != 1 {
        return Err(WireError::QuestionCount(qdcount));
    }
    let qname = r.name()?;
    let qtype = r.u16()?;
    let qclass = r.u16()?;
    let mut answers = Vec::new();
    for _ in 0..ancount {
        let name = r.name()?;
        let rtype = r.u16()?;
        let rclass = r.u16()?;
        let ttl = r.u32()?;
        let rdlen = usize::from(r.u16()?);
        let rdata = r.take(rdlen)?;
        if rtype == QTYPE_A && rclass == QCLASS_IN && rdlen == 4 {
            answers.push(ARecord {
                name,
                ttl,
                addr: Ipv4Addr::new(rdata[0], rdata[1], rdata[2], rdata[3]),
            });
        }
        // other record types are skipped, the authority and additional
        // sections that follow are not inspected at all
    }
    Ok(DnsMessage {
        id,
        flags,
        question: Question {
            qname,
            qtype,
            qclass,
        },
        answers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(name: &str, addr: [u8; 4]) -> ARecord {
        ARecord {
            name: Name::new(name).unwrap(),
            ttl: 60,
            addr: Ipv4Addr::from(addr),
        }
    }

    #[test]
    fn query_header_layout() {
        let q = DnsMessage::query(0x1234, "odns.example.net").unwrap();
        let bytes = encode(&q);
        assert_eq!(&bytes[..2], &[0x12, 0x34]);
        // QR bit clear, RD set
        assert_eq!(bytes[2] & 0x80, 0);
        assert_eq!(bytes[2] & 0x01, 1);
        assert_eq!(&bytes[4..6], &[0, 1]);
        // question name: 4 o d n s 7 e x a m p l e 3 n e t 0
        assert_eq!(bytes[12], 4);
        assert_eq!(&bytes[13..17], b"odns");
    }

    #[test]
    fn round_trip_response_with_two_records() {
        let q = DnsMessage::query(7, "odns.example.net").unwrap();
        let resp = DnsMessage::response_to(
            &q,
            Rcode::NoError,
            vec![
                a("odns.example.net", [203, 0, 113, 53]),
                a("odns.example.net", [198, 51, 100, 1]),
            ],
        );
        let decoded = decode(&encode(&resp)).unwrap();
        assert_eq!(decoded, resp);
        // encode∘decode∘encode is byte-identical
        assert_eq!(encode(&decoded), encode(&resp));
    }

    #[test]
    fn oversized_name_is_rejected() {
        let label = "a".repeat(63);
        let name = [label.as_str(); 4].join("."); // 4*64 + 1 = 257 wire octets
        assert_eq!(Name::new(&name), Err(WireError::NameTooLong));
        assert!(DnsMessage::query(1, &name).is_err());
    }

    #[test]
    fn label_longer_than_63_is_rejected() {
        let name = format!("{}.example", "b".repeat(64));
        assert_eq!(Name::new(&name), Err(WireError::LabelTooLong));
    }

    #[test]
    fn short_payload_is_a_parse_error() {
        assert!(matches!(
            decode(&[0u8; 11]),
            Err(WireError::Truncated { .. })
        ));
    }

    #[test]
    fn two_a_records_are_extracted() {
        let q = DnsMessage::query(9, "x.example.org").unwrap();
        let resp = DnsMessage::response_to(
            &q,
            Rcode::NoError,
            vec![
                a("x.example.org", [192, 0, 2, 10]),
                a("x.example.org", [203, 0, 113, 53]),
            ],
        );
        let m = decode(&encode(&resp)).unwrap();
        let addrs: Vec<_> = m.answers.iter().map(|r| r.addr).collect();
        assert_eq!(
            addrs,
            vec![
                Ipv4Addr::new(192, 0, 2, 10),
                Ipv4Addr::new(203, 0, 113, 53)
            ]
        );
    }

    /// Reference fixture built by hand from the RFC 1035 layout: one AAAA
    /// record followed by one A record for `x.ex`.
    #[test]
    fn aaaa_record_is_skipped_a_record_kept() {
        let mut raw = Vec::new();
        raw.extend_from_slice(&[0x00, 0x2a]); // id 42
        raw.extend_from_slice(&[0x81, 0x80]); // QR, RD, RA
        raw.extend_from_slice(&[0, 1, 0, 2, 0, 0, 0, 0]);
        let name = [1, b'x', 2, b'e', b'x', 0];
        raw.extend_from_slice(&name);
        raw.extend_from_slice(&[0, 1, 0, 1]); // A IN
        // answer 1: AAAA
        raw.extend_from_slice(&name);
        raw.extend_from_slice(&[0, 28, 0, 1]); // AAAA IN
        raw.extend_from_slice(&[0, 0, 0, 60]);
        raw.extend_from_slice(&[0, 16]);
        raw.extend_from_slice(&[0x20, 0x01, 0x0d, 0xb8, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1]);
        // answer 2: A 198.51.100.7, name compressed to offset 12
        raw.extend_from_slice(&[0xc0, 0x0c]);
        raw.extend_from_slice(&[0, 1, 0, 1]);
        raw.extend_from_slice(&[0, 0, 0, 60]);
        raw.extend_from_slice(&[0, 4]);
        raw.extend_from_slice(&[198, 51, 100, 7]);

        let m = decode(&raw).unwrap();
        assert_eq!(m.id, 42);
        assert_eq!(m.answers.len(), 1);
        assert_eq!(m.answers[0].addr, Ipv4Addr::new(198, 51, 100, 7));
        assert_eq!(m.answers[0].name.as_str(), "x.ex");
    }

    #[test]
    fn pointer_loop_terminates_with_error() {
        let mut raw = Vec::new();
        raw.extend_from_slice(&[0, 1, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0]);
        raw.extend_from_slice(&[0xc0, 12]); // question name points at itself
        raw.extend_from_slice(&[0, 1, 0, 1]);
        assert_eq!(decode(&raw), Err(WireError::PointerLoop));
    }

    #[test]
    fn name_comparison_ignores_case() {
        let a = Name::new("ODNS.Example.NET").unwrap();
        let b = Name::new("odns.example.net").unwrap();
        assert_eq!(a, b);
        assert!(a.is_within(&Name::new("EXAMPLE.net").unwrap()));
        assert!(!a.is_within(&Name::new("ample.net").unwrap()));
        assert!(Name::new("example.net")
            .unwrap()
            .is_within(&Name::new("example.net").unwrap()));
    }

    #[test]
    fn trailing_dot_is_normalized() {
        assert_eq!(
            Name::new("example.net.").unwrap(),
            Name::new("example.net").unwrap()
        );
        assert!(Name::new("").is_err());
        assert!(Name::new("a..b").is_err());
    }
}
