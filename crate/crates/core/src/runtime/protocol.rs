//! Wire framing between the mobile client and a surrogate daemon.
//!
//! ```text
//! +--------+---------+----------+-----------------+-----------+
//! | "CFOR" | version | msg_type | payload_len u32 | payload   |
//! | 4 B    | 1 B     | 1 B      | 4 B big-endian  | len bytes |
//! +--------+---------+----------+-----------------+-----------+
//! ```
//!
//! A `TaskRequest` payload is a big-endian `u32` name length, the UTF-8 task
//! name, then the raw task input. `TaskResult` is a `0x00` status byte then
//! the task output. `Error` is a nonzero status byte then a UTF-8 message.

use std::io::{self, Read, Write};

use thiserror::Error;

pub const MAGIC: [u8; 4] = *b"CFOR";
pub const VERSION: u8 = 0x01;
pub const HEADER_LEN: usize = 10;
/// Frames above this size are rejected before the payload is read.
pub const MAX_PAYLOAD: u32 = 64 * 1024 * 1024;

pub const STATUS_OK: u8 = 0x00;
pub const STATUS_MALFORMED: u8 = 0x01;
pub const STATUS_UNKNOWN_TASK: u8 = 0x02;
pub const STATUS_TASK_FAILED: u8 = 0x03;

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("connection closed by peer")]
    ConnectionClosed,
    #[error("bad magic {0:02x?}")]
    BadMagic([u8; 4]),
    #[error("unsupported protocol version {0:#04x}")]
    BadVersion(u8),
    #[error("unknown message type {0:#04x}")]
    UnknownType(u8),
    #[error("frame payload of {0} bytes exceeds the limit")]
    TooLarge(u32),
    #[error("malformed payload: {0}")]
    BadPayload(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum MsgType {
    TaskRequest = 0x01,
    TaskResult = 0x02,
    Error = 0x03,
    Ping = 0x04,
    Pong = 0x05,
}

impl TryFrom<u8> for MsgType {
    type Error = ProtocolError;

    fn try_from(b: u8) -> Result<Self, ProtocolError> {
        Ok(match b {
            0x01 => MsgType::TaskRequest,
            0x02 => MsgType::TaskResult,
            0x03 => MsgType::Error,
            0x04 => MsgType::Ping,
            0x05 => MsgType::Pong,
            other => return Err(ProtocolError::UnknownType(other)),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub msg_type: MsgType,
    pub payload: Vec<u8>,
}

impl Frame {
    pub fn new(msg_type: MsgType, payload: Vec<u8>) -> Self {
        Self { msg_type, payload }
    }

    pub fn task_request(task: &str, input: &[u8]) -> Self {
        let mut payload = Vec::with_capacity(4 + task.len() + input.len());
        payload.extend_from_slice(&(task.len() as u32).to_be_bytes());
        payload.extend_from_slice(task.as_bytes());
        payload.extend_from_slice(input);
        Self::new(MsgType::TaskRequest, payload)
    }

    pub fn task_result(output: &[u8]) -> Self {
        let mut payload = Vec::with_capacity(1 + output.len());
        payload.push(STATUS_OK);
        payload.extend_from_slice(output);
        Self::new(MsgType::TaskResult, payload)
    }

    pub fn error(status: u8, message: &str) -> Self {
        let mut payload = Vec::with_capacity(1 + message.len());
        payload.push(status);
        payload.extend_from_slice(message.as_bytes());
        Self::new(MsgType::Error, payload)
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.payload.len());
        out.extend_from_slice(&MAGIC);
        out.push(VERSION);
        out.push(self.msg_type as u8);
        out.extend_from_slice(&(self.payload.len() as u32).to_be_bytes());
        out.extend_from_slice(&self.payload);
        out
    }

    /// Decodes one frame from the front of `bytes`, returning it and the
    /// number of bytes consumed.
    pub fn decode(bytes: &[u8]) -> Result<(Self, usize), ProtocolError> {
        let mut cursor = io::Cursor::new(bytes);
        let frame = read_frame(&mut cursor)?;
        Ok((frame, cursor.position() as usize))
    }

    /// Splits a `TaskRequest` payload into task name and input.
    pub fn parse_task_request(&self) -> Result<(&str, &[u8]), ProtocolError> {
        let bad = |m: &str| ProtocolError::BadPayload(m.to_string());
        let (len, rest) = self
            .payload
            .split_first_chunk::<4>()
            .ok_or_else(|| bad("task name length truncated"))?;
        let len = u32::from_be_bytes(*len) as usize;
        if rest.len() < len {
            return Err(bad("task name truncated"));
        }
        let (name, input) = rest.split_at(len);
        let name = std::str::from_utf8(name).map_err(|_| bad("task name is not UTF-8"))?;
        Ok((name, input))
    }

    /// Status byte and the remainder of a `TaskResult` or `Error` payload.
    pub fn status(&self) -> Result<(u8, &[u8]), ProtocolError> {
        self.payload
            .split_first()
            .map(|(s, rest)| (*s, rest))
            .ok_or_else(|| ProtocolError::BadPayload("missing status byte".into()))
    }
}

pub fn write_frame(w: &mut impl Write, frame: &Frame) -> Result<(), ProtocolError> {
    w.write_all(&frame.encode())?;
    w.flush()?;
    Ok(())
}

/// Reads one frame. A clean end of stream before the first header byte is
/// reported as `ConnectionClosed`.
pub fn read_frame(r: &mut impl Read) -> Result<Frame, ProtocolError> {
    let mut header = [0u8; HEADER_LEN];
    let mut filled = 0;
    while filled < HEADER_LEN {
        match r.read(&mut header[filled..]) {
            Ok(0) if filled == 0 => return Err(ProtocolError::ConnectionClosed),
            Ok(0) => return Err(io::Error::from(io::ErrorKind::UnexpectedEof).into()),
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    let magic: [u8; 4] = header[..4].try_into().expect("4 bytes");
    if magic != MAGIC {
        return Err(ProtocolError::BadMagic(magic));
    }
    if header[4] != VERSION {
        return Err(ProtocolError::BadVersion(header[4]));
    }
    let msg_type = MsgType::try_from(header[5])?;
    let len = u32::from_be_bytes(header[6..10].try_into().expect("4 bytes"));
    if len > MAX_PAYLOAD {
        return Err(ProtocolError::TooLarge(len));
    }
    // Grow with the data actually received rather than trusting the header.
    let mut payload = Vec::new();
    r.take(u64::from(len)).read_to_end(&mut payload)?;
    if payload.len() != len as usize {
        return Err(io::Error::from(io::ErrorKind::UnexpectedEof).into());
    }
    Ok(Frame { msg_type, payload })
}
