//! Byte-exact message envelope shared by every clustering module.
//!
//! Layout (big-endian):
//!
//! ```text
//! byte 0      msg_type
//! bytes 1..5  sender
//! bytes 5..9  cluster_id
//! byte 9      hops
//! byte 10     payload length L (<= 64)
//! bytes 11..  payload
//! ```

use std::fmt;

use thiserror::Error;

use crate::{ClusterId, NodeId};

/// Size of the fixed envelope header.
pub const HEADER_LEN: usize = 11;
/// Largest payload a single frame can carry.
pub const MAX_PAYLOAD: usize = 64;
/// Cluster ids that fit in one CONVERGECAST or JOIN_ACCEPT id list.
pub const MAX_LISTED_IDS: usize = 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum MsgType {
    NeighborHello = 0x01,
    JoinRequest = 0x02,
    JoinAccept = 0x03,
    JoinDeny = 0x04,
    Attribute = 0x05,
    Resume = 0x06,
    Convergecast = 0x07,
    Route = 0x08,
}

impl MsgType {
    pub const ALL: [MsgType; 8] = [
        MsgType::NeighborHello,
        MsgType::JoinRequest,
        MsgType::JoinAccept,
        MsgType::JoinDeny,
        MsgType::Attribute,
        MsgType::Resume,
        MsgType::Convergecast,
        MsgType::Route,
    ];

    pub fn from_tag(tag: u8) -> Option<MsgType> {
        MsgType::ALL.into_iter().find(|t| *t as u8 == tag)
    }

    pub fn tag(self) -> u8 {
        self as u8
    }

    pub fn name(self) -> &'static str {
        match self {
            MsgType::NeighborHello => "NEIGHBOR_HELLO",
            MsgType::JoinRequest => "JOIN_REQUEST",
            MsgType::JoinAccept => "JOIN_ACCEPT",
            MsgType::JoinDeny => "JOIN_DENY",
            MsgType::Attribute => "ATTRIBUTE",
            MsgType::Resume => "RESUME",
            MsgType::Convergecast => "CONVERGECAST",
            MsgType::Route => "ROUTE",
        }
    }
}

impl fmt::Display for MsgType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("frame truncated: {len} bytes, header needs {HEADER_LEN}")]
    Truncated { len: usize },
    #[error("unknown message type tag 0x{0:02x}")]
    UnknownType(u8),
    #[error("declared payload length {0} exceeds {MAX_PAYLOAD}")]
    PayloadTooLong(usize),
    #[error("length mismatch: header declares {declared} payload bytes, frame carries {actual}")]
    LengthMismatch { declared: usize, actual: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodeError {
    #[error("payload of {0} bytes exceeds {MAX_PAYLOAD}")]
    PayloadTooLong(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed {what} payload: {reason}")]
pub struct PayloadError {
    pub what: &'static str,
    pub reason: String,
}

impl PayloadError {
    fn new(what: &'static str, reason: impl Into<String>) -> Self {
        PayloadError { what, reason: reason.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WireMessage {
    pub msg_type: MsgType,
    pub sender: NodeId,
    pub cluster_id: ClusterId,
    pub hops: u8,
    pub payload: Vec<u8>,
}

impl WireMessage {
    pub fn new(msg_type: MsgType, sender: NodeId, cluster_id: ClusterId, hops: u8) -> Self {
        WireMessage { msg_type, sender, cluster_id, hops, payload: Vec::new() }
    }

    pub fn with_payload(mut self, payload: Vec<u8>) -> Self {
        self.payload = payload;
        self
    }

    pub fn encode(&self) -> Result<Vec<u8>, EncodeError> {
        encode_message(self)
    }
}

pub fn encode_message(m: &WireMessage) -> Result<Vec<u8>, EncodeError> {
    if m.payload.len() > MAX_PAYLOAD {
        return Err(EncodeError::PayloadTooLong(m.payload.len()));
    }
    let mut out = Vec::with_capacity(HEADER_LEN + m.payload.len());
    out.push(m.msg_type.tag());
    out.extend_from_slice(&m.sender.to_be_bytes());
    out.extend_from_slice(&m.cluster_id.to_be_bytes());
    out.push(m.hops);
    out.push(m.payload.len() as u8);
    out.extend_from_slice(&m.payload);
    Ok(out)
}

pub fn decode_message(bytes: &[u8]) -> Result<WireMessage, DecodeError> {
    if bytes.len() < HEADER_LEN {
        return Err(DecodeError::Truncated { len: bytes.len() });
    }
    let msg_type = MsgType::from_tag(bytes[0]).ok_or(DecodeError::UnknownType(bytes[0]))?;
    let declared = bytes[10] as usize;
    if declared > MAX_PAYLOAD {
        return Err(DecodeError::PayloadTooLong(declared));
    }
    let actual = bytes.len() - HEADER_LEN;
    if actual != declared {
        return Err(DecodeError::LengthMismatch { declared, actual });
    }
    Ok(WireMessage {
        msg_type,
        sender: read_u32(&bytes[1..5]),
        cluster_id: read_u32(&bytes[5..9]),
        hops: bytes[9],
        payload: bytes[HEADER_LEN..].to_vec(),
    })
}

fn read_u32(b: &[u8]) -> u32 {
    u32::from_be_bytes([b[0], b[1], b[2], b[3]])
}

fn expect_len(what: &'static str, p: &[u8], len: usize) -> Result<(), PayloadError> {
    if p.len() != len {
        return Err(PayloadError::new(what, format!("expected {len} bytes, got {}", p.len())));
    }
    Ok(())
}

fn decode_id_list(what: &'static str, p: &[u8]) -> Result<Vec<u32>, PayloadError> {
    let Some((&count, rest)) = p.split_first() else {
        return Err(PayloadError::new(what, "missing id count"));
    };
    let count = count as usize;
    if count > MAX_LISTED_IDS {
        return Err(PayloadError::new(what, format!("{count} ids exceeds {MAX_LISTED_IDS}")));
    }
    if rest.len() != count * 4 {
        return Err(PayloadError::new(what, format!("{count} ids need {} bytes, got {}", count * 4, rest.len())));
    }
    Ok(rest.chunks_exact(4).map(read_u32).collect())
}

fn encode_id_list(out: &mut Vec<u8>, ids: &[u32]) {
    assert!(ids.len() <= MAX_LISTED_IDS, "id list overflow: {}", ids.len());
    out.push(ids.len() as u8);
    for id in ids {
        out.extend_from_slice(&id.to_be_bytes());
    }
}

/// JOIN_REQUEST payload: origin head, remaining ttl, algorithm metric, epoch tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JoinRequestPayload {
    pub origin_head: NodeId,
    pub ttl: u8,
    pub metric: u32,
    pub epoch: u8,
}

impl JoinRequestPayload {
    pub const LEN: usize = 10;

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(Self::LEN);
        out.extend_from_slice(&self.origin_head.to_be_bytes());
        out.push(self.ttl);
        out.extend_from_slice(&self.metric.to_be_bytes());
        out.push(self.epoch);
        out
    }

    pub fn decode(p: &[u8]) -> Result<Self, PayloadError> {
        expect_len("JOIN_REQUEST", p, Self::LEN)?;
        Ok(JoinRequestPayload {
            origin_head: read_u32(&p[0..4]),
            ttl: p[4],
            metric: read_u32(&p[5..9]),
            epoch: p[9],
        })
    }
}

/// JOIN_ACCEPT payload: the joining node, epoch tag, and (overlapping clustering
/// only) the other heads the joiner belongs to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AcceptPayload {
    pub joiner: NodeId,
    pub epoch: u8,
    pub other_heads: Vec<ClusterId>,
}

impl AcceptPayload {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(6 + 4 * self.other_heads.len());
        out.extend_from_slice(&self.joiner.to_be_bytes());
        out.push(self.epoch);
        encode_id_list(&mut out, &self.other_heads);
        out
    }

    pub fn decode(p: &[u8]) -> Result<Self, PayloadError> {
        if p.len() < 6 {
            return Err(PayloadError::new("JOIN_ACCEPT", format!("need at least 6 bytes, got {}", p.len())));
        }
        Ok(AcceptPayload {
            joiner: read_u32(&p[0..4]),
            epoch: p[4],
            other_heads: decode_id_list("JOIN_ACCEPT", &p[5..])?,
        })
    }
}

/// ATTRIBUTE payload used by attribute-based election: value plus remaining TTL.
/// The candidate owning the value travels in the envelope's cluster_id field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AttributePayload {
    pub value: u32,
    pub ttl: u8,
}

impl AttributePayload {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = self.value.to_be_bytes().to_vec();
        out.push(self.ttl);
        out
    }

    pub fn decode(p: &[u8]) -> Result<Self, PayloadError> {
        expect_len("ATTRIBUTE", p, 5)?;
        Ok(AttributePayload { value: read_u32(&p[0..4]), ttl: p[4] })
    }
}

/// Flood value for max-min election rounds: a single node id.
pub fn encode_flood_id(id: NodeId) -> Vec<u8> {
    id.to_be_bytes().to_vec()
}

pub fn decode_flood_id(p: &[u8]) -> Result<NodeId, PayloadError> {
    expect_len("flood", p, 4)?;
    Ok(read_u32(p))
}

/// Payload carrying only the epoch tag (JOIN_DENY, RESUME).
pub fn encode_epoch(epoch: u8) -> Vec<u8> {
    vec![epoch]
}

pub fn decode_epoch(what: &'static str, p: &[u8]) -> Result<u8, PayloadError> {
    expect_len(what, p, 1)?;
    Ok(p[0])
}

/// NEIGHBOR_HELLO payload: epoch tag and sender role code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HelloPayload {
    pub epoch: u8,
    pub role: u8,
}

impl HelloPayload {
    pub fn encode(&self) -> Vec<u8> {
        vec![self.epoch, self.role]
    }

    pub fn decode(p: &[u8]) -> Result<Self, PayloadError> {
        expect_len("NEIGHBOR_HELLO", p, 2)?;
        Ok(HelloPayload { epoch: p[0], role: p[1] })
    }
}

/// CONVERGECAST payload: count byte followed by that many cluster ids.
pub fn encode_cluster_list(ids: &[ClusterId]) -> Vec<u8> {
    let mut out = Vec::with_capacity(1 + 4 * ids.len());
    encode_id_list(&mut out, ids);
    out
}

pub fn decode_cluster_list(p: &[u8]) -> Result<Vec<ClusterId>, PayloadError> {
    decode_id_list("CONVERGECAST", p)
}

/// ROUTE payload: target cluster and a 16-bit sequence number.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoutePayload {
    pub target: ClusterId,
    pub seq: u16,
}

impl RoutePayload {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = self.target.to_be_bytes().to_vec();
        out.extend_from_slice(&self.seq.to_be_bytes());
        out
    }

    pub fn decode(p: &[u8]) -> Result<Self, PayloadError> {
        expect_len("ROUTE", p, 6)?;
        Ok(RoutePayload { target: read_u32(&p[0..4]), seq: u16::from_be_bytes([p[4], p[5]]) })
    }
}
