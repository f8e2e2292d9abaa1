//! OSC 1.0 binary codec.
//!
//! Strings are NUL-terminated and padded to 4 bytes, numerics are
//! big-endian, blobs carry a 4-byte length prefix and are padded. Bundles
//! (`#bundle`, 8-byte time tag, length-prefixed elements) nest arbitrarily
//! and are flattened on decode.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq)]
pub enum OscArg {
    Int(i32),
    Float(f32),
    Str(String),
    Blob(Vec<u8>),
    Long(i64),
    Double(f64),
    /// NTP-format time tag.
    Time(u64),
    True,
    False,
    Nil,
    Impulse,
}

impl OscArg {
    pub fn tag(&self) -> char {
        match self {
            Self::Int(_) => 'i',
            Self::Float(_) => 'f',
            Self::Str(_) => 's',
            Self::Blob(_) => 'b',
            Self::Long(_) => 'h',
            Self::Double(_) => 'd',
            Self::Time(_) => 't',
            Self::True => 'T',
            Self::False => 'F',
            Self::Nil => 'N',
            Self::Impulse => 'I',
        }
    }

    /// Numeric arguments as f64; NaN passes through.
    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Self::Int(v) => Some(v as f64),
            Self::Float(v) => Some(v as f64),
            Self::Long(v) => Some(v as f64),
            Self::Double(v) => Some(v),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OscMessage {
    pub address: String,
    pub args: Vec<OscArg>,
}

impl OscMessage {
    pub fn new(address: impl Into<String>, args: Vec<OscArg>) -> Self {
        Self { address: address.into(), args }
    }

    /// Type tag string including the leading comma, e.g. `",ffff"`.
    pub fn type_tags(&self) -> String {
        std::iter::once(',').chain(self.args.iter().map(OscArg::tag)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OscPacket {
    Message(OscMessage),
    Bundle { time_tag: u64, content: Vec<OscPacket> },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed OSC packet at byte {offset}: {reason}")]
pub struct MalformedPacket {
    pub offset: usize,
    pub reason: &'static str,
}

const BUNDLE_TAG: &[u8; 8] = b"#bundle\0";
const MAX_BUNDLE_DEPTH: usize = 16;

fn pad4(n: usize) -> usize {
    (n + 3) & !3
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(s.as_bytes());
    out.resize(pad4(out.len() + 1), 0);
}

pub fn encode_message(msg: &OscMessage) -> Vec<u8> {
    let mut out = Vec::new();
    write_message(&mut out, msg);
    out
}

pub fn encode_packet(packet: &OscPacket) -> Vec<u8> {
    let mut out = Vec::new();
    write_packet(&mut out, packet);
    out
}

fn write_message(out: &mut Vec<u8>, msg: &OscMessage) {
    put_str(out, &msg.address);
    put_str(out, &msg.type_tags());
    for arg in &msg.args {
        match arg {
            OscArg::Int(v) => out.extend_from_slice(&v.to_be_bytes()),
            OscArg::Float(v) => out.extend_from_slice(&v.to_be_bytes()),
            OscArg::Str(s) => put_str(out, s),
            OscArg::Blob(b) => {
                out.extend_from_slice(&(b.len() as u32).to_be_bytes());
                out.extend_from_slice(b);
                out.resize(pad4(out.len()), 0);
            }
            OscArg::Long(v) => out.extend_from_slice(&v.to_be_bytes()),
            OscArg::Double(v) => out.extend_from_slice(&v.to_be_bytes()),
            OscArg::Time(v) => out.extend_from_slice(&v.to_be_bytes()),
            OscArg::True | OscArg::False | OscArg::Nil | OscArg::Impulse => {}
        }
    }
}

fn write_packet(out: &mut Vec<u8>, packet: &OscPacket) {
    match packet {
        OscPacket::Message(m) => write_message(out, m),
        OscPacket::Bundle { time_tag, content } => {
            out.extend_from_slice(BUNDLE_TAG);
            out.extend_from_slice(&time_tag.to_be_bytes());
            for element in content {
                let len_at = out.len();
                out.extend_from_slice(&[0; 4]);
                write_packet(out, element);
                let len = (out.len() - len_at - 4) as u32;
                out[len_at..len_at + 4].copy_from_slice(&len.to_be_bytes());
            }
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
    /// Offset of `buf` within the datagram, for error reporting.
    base: usize,
}

impl<'a> Reader<'a> {
    fn err(&self, reason: &'static str) -> MalformedPacket {
        MalformedPacket { offset: self.base + self.pos, reason }
    }

    fn take(&mut self, n: usize, reason: &'static str) -> Result<&'a [u8], MalformedPacket> {
        if self.buf.len() - self.pos < n {
            return Err(self.err(reason));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn array<const N: usize>(&mut self, reason: &'static str) -> Result<[u8; N], MalformedPacket> {
        Ok(self.take(N, reason)?.try_into().expect("length checked"))
    }

    fn string(&mut self) -> Result<&'a str, MalformedPacket> {
        let rest = &self.buf[self.pos..];
        let nul = rest.iter().position(|&b| b == 0).ok_or_else(|| self.err("unterminated string"))?;
        let padded = pad4(nul + 1);
        if padded > rest.len() {
            return Err(self.err("string padding runs past the end"));
        }
        if rest[nul..padded].iter().any(|&b| b != 0) {
            return Err(self.err("non-zero string padding"));
        }
        let s = std::str::from_utf8(&rest[..nul]).map_err(|_| self.err("string is not UTF-8"))?;
        self.pos += padded;
        Ok(s)
    }

    fn is_done(&self) -> bool {
        self.pos == self.buf.len()
    }
}

/// Decodes a datagram into its messages, flattening bundles in order.
pub fn parse_osc_packet(bytes: &[u8]) -> Result<Vec<OscMessage>, MalformedPacket> {
    let mut out = Vec::new();
    flatten(parse_packet(bytes)?, &mut out);
    Ok(out)
}

/// Decodes a datagram keeping bundle structure.
pub fn parse_packet(bytes: &[u8]) -> Result<OscPacket, MalformedPacket> {
    if bytes.len() < 8 {
        return Err(MalformedPacket { offset: 0, reason: "datagram shorter than 8 bytes" });
    }
    parse_packet_at(bytes, 0, 0)
}

fn flatten(packet: OscPacket, out: &mut Vec<OscMessage>) {
    match packet {
        OscPacket::Message(m) => out.push(m),
        OscPacket::Bundle { content, .. } => content.into_iter().for_each(|p| flatten(p, out)),
    }
}

fn parse_packet_at(bytes: &[u8], base: usize, depth: usize) -> Result<OscPacket, MalformedPacket> {
    if depth > MAX_BUNDLE_DEPTH {
        return Err(MalformedPacket { offset: base, reason: "bundles nested too deeply" });
    }
    if bytes.len() % 4 != 0 {
        return Err(MalformedPacket { offset: base, reason: "length is not a multiple of 4" });
    }
    if bytes.starts_with(BUNDLE_TAG) {
        parse_bundle(bytes, base, depth)
    } else if bytes.first() == Some(&b'/') {
        parse_message(bytes, base).map(OscPacket::Message)
    } else {
        Err(MalformedPacket { offset: base, reason: "neither a message nor a bundle" })
    }
}

fn parse_bundle(bytes: &[u8], base: usize, depth: usize) -> Result<OscPacket, MalformedPacket> {
    let mut r = Reader { buf: bytes, pos: BUNDLE_TAG.len(), base };
    let time_tag = u64::from_be_bytes(r.array("truncated bundle time tag")?);
    let mut content = Vec::new();
    while !r.is_done() {
        let len = u32::from_be_bytes(r.array("truncated bundle element size")?) as usize;
        let at = r.pos;
        let element = r.take(len, "bundle element runs past the end")?;
        content.push(parse_packet_at(element, base + at, depth + 1)?);
    }
    Ok(OscPacket::Bundle { time_tag, content })
}

fn parse_message(bytes: &[u8], base: usize) -> Result<OscMessage, MalformedPacket> {
    let mut r = Reader { buf: bytes, pos: 0, base };
    let address = r.string()?.to_string();
    let tags = r.string()?;
    let Some(tags) = tags.strip_prefix(',') else {
        return Err(r.err("type tag string lacks leading comma"));
    };
    let mut args = Vec::with_capacity(tags.len());
    for tag in tags.chars() {
        let arg = match tag {
            'i' => OscArg::Int(i32::from_be_bytes(r.array("truncated int32")?)),
            'f' => OscArg::Float(f32::from_be_bytes(r.array("truncated float32")?)),
            's' => OscArg::Str(r.string()?.to_string()),
            'b' => {
                let len = u32::from_be_bytes(r.array("truncated blob size")?) as usize;
                let data = r.take(len, "truncated blob")?.to_vec();
                let pad = pad4(len) - len;
                if r.take(pad, "truncated blob padding")?.iter().any(|&b| b != 0) {
                    return Err(r.err("non-zero blob padding"));
                }
                OscArg::Blob(data)
            }
            'h' => OscArg::Long(i64::from_be_bytes(r.array("truncated int64")?)),
            'd' => OscArg::Double(f64::from_be_bytes(r.array("truncated float64")?)),
            't' => OscArg::Time(u64::from_be_bytes(r.array("truncated time tag")?)),
            'T' => OscArg::True,
            'F' => OscArg::False,
            'N' => OscArg::Nil,
            'I' => OscArg::Impulse,
            _ => return Err(r.err("unsupported type tag")),
        };
        args.push(arg);
    }
    if !r.is_done() {
        return Err(r.err("trailing bytes after arguments"));
    }
    Ok(OscMessage { address, args })
}
