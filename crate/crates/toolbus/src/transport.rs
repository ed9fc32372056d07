//! Wire transports for the JSON-RPC surface.
//!
//! - stdio: one JSON message per line (newline-delimited).
//! - TCP: each message is preceded by its length as a 4-byte big-endian integer.
//!
//! A frame that is not valid JSON gets a parse-error response and the
//! connection keeps going. A TCP frame longer than [`MAX_FRAME_LEN`] cannot be
//! skipped safely, so the server answers with an error and closes that one
//! connection; the listener keeps serving others.

use std::io::{self, BufRead, BufReader, Read, Write};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

use serde_json::{json, Value};
use thiserror::Error;

use crate::bus::{ExecutedCall, ToolBus};
use crate::client::{ClientError, ToolClient};
use crate::registry::ListDetail;
use crate::rpc::{self, Request, Response};
use crate::spec::ToolSpec;
use crate::JsonMap;

pub const MAX_FRAME_LEN: u32 = 16 * 1024 * 1024;

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("address {0} is already in use")]
    PortInUse(String),
    #[error("transport unavailable: {0}")]
    Unavailable(#[from] io::Error),
}

/// Serves newline-delimited JSON-RPC until the reader hits EOF.
pub fn serve_lines<R: BufRead, W: Write>(bus: &ToolBus, reader: R, mut writer: W) -> io::Result<()> {
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        if let Some(resp) = rpc::handle_frame(bus, line.as_bytes()) {
            writer.write_all(&resp)?;
            writer.write_all(b"\n")?;
            writer.flush()?;
        }
    }
    Ok(())
}

pub fn write_frame<W: Write>(w: &mut W, payload: &[u8]) -> io::Result<()> {
    let len =
        u32::try_from(payload.len()).map_err(|_| io::Error::new(io::ErrorKind::InvalidInput, "frame too large"))?;
    w.write_all(&len.to_be_bytes())?;
    w.write_all(payload)?;
    w.flush()
}

#[derive(Debug)]
pub enum Frame {
    Data(Vec<u8>),
    TooLarge(u32),
}

/// Reads one length-prefixed frame; `Ok(None)` on clean EOF.
pub fn read_frame<R: Read>(r: &mut R) -> io::Result<Option<Frame>> {
    let mut len_buf = [0u8; 4];
    match r.read_exact(&mut len_buf) {
        Ok(()) => {}
        Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => return Ok(None),
        Err(e) => return Err(e),
    }
    let len = u32::from_be_bytes(len_buf);
    if len > MAX_FRAME_LEN {
        return Ok(Some(Frame::TooLarge(len)));
    }
    let mut buf = vec![0u8; len as usize];
    r.read_exact(&mut buf)?;
    Ok(Some(Frame::Data(buf)))
}

fn serve_connection(bus: &ToolBus, stream: TcpStream) -> io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut writer = stream;
    while let Some(frame) = read_frame(&mut reader)? {
        match frame {
            Frame::Data(bytes) => {
                if let Some(resp) = rpc::handle_frame(bus, &bytes) {
                    write_frame(&mut writer, &resp)?;
                }
            }
            Frame::TooLarge(len) => {
                let resp = Response::error(
                    Value::Null,
                    rpc::FRAME_TOO_LARGE,
                    format!("frame of {len} bytes exceeds limit of {MAX_FRAME_LEN}"),
                );
                write_frame(&mut writer, &serde_json::to_vec(&resp).expect("serializes"))?;
                let _ = writer.shutdown(Shutdown::Both);
                return Ok(());
            }
        }
    }
    Ok(())
}

/// A bound (not yet serving) TCP listener.
pub struct TcpToolServer {
    bus: Arc<ToolBus>,
    listener: TcpListener,
}

impl TcpToolServer {
    pub fn bind(bus: Arc<ToolBus>, addr: impl ToSocketAddrs + std::fmt::Debug) -> Result<Self, TransportError> {
        let listener = TcpListener::bind(&addr).map_err(|e| {
            if e.kind() == io::ErrorKind::AddrInUse {
                TransportError::PortInUse(format!("{addr:?}"))
            } else {
                TransportError::Unavailable(e)
            }
        })?;
        Ok(Self { bus, listener })
    }

    pub fn local_addr(&self) -> io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    /// Serves on the current thread until the stop flag is set.
    fn accept_loop(self, stop: Arc<AtomicBool>) {
        for conn in self.listener.incoming() {
            if stop.load(Ordering::SeqCst) {
                break;
            }
            match conn {
                Ok(stream) => {
                    let bus = Arc::clone(&self.bus);
                    std::thread::spawn(move || {
                        if let Err(e) = serve_connection(&bus, stream) {
                            log::debug!("connection closed: {e}");
                        }
                    });
                }
                Err(e) => log::warn!("accept failed: {e}"),
            }
        }
    }

    /// Blocks forever serving connections.
    pub fn run(self) {
        self.accept_loop(Arc::new(AtomicBool::new(false)));
    }

    pub fn spawn(self) -> io::Result<ServerHandle> {
        let addr = self.local_addr()?;
        let stop = Arc::new(AtomicBool::new(false));
        let flag = Arc::clone(&stop);
        let join = std::thread::spawn(move || self.accept_loop(flag));
        Ok(ServerHandle { addr, stop, join: Some(join) })
    }
}

/// Background TCP server; stops on [`ServerHandle::shutdown`] or drop.
pub struct ServerHandle {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    join: Option<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn shutdown(mut self) {
        self.stop_now();
    }

    fn stop_now(&mut self) {
        if let Some(join) = self.join.take() {
            self.stop.store(true, Ordering::SeqCst);
            // wake the blocking accept
            let _ = TcpStream::connect(self.addr);
            let _ = join.join();
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        self.stop_now();
    }
}

/// A request/response channel carrying raw JSON-RPC messages.
pub trait Channel: Send {
    fn roundtrip(&mut self, request: &[u8]) -> io::Result<Vec<u8>>;
}

pub struct TcpChannel {
    reader: BufReader<TcpStream>,
    writer: TcpStream,
}

impl TcpChannel {
    pub fn connect(addr: impl ToSocketAddrs) -> io::Result<Self> {
        let stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        Ok(Self { reader: BufReader::new(stream.try_clone()?), writer: stream })
    }

    /// Sends raw bytes as one frame without any JSON handling.
    pub fn send_raw(&mut self, payload: &[u8]) -> io::Result<Option<Frame>> {
        write_frame(&mut self.writer, payload)?;
        read_frame(&mut self.reader)
    }
}

impl Channel for TcpChannel {
    fn roundtrip(&mut self, request: &[u8]) -> io::Result<Vec<u8>> {
        match self.send_raw(request)? {
            Some(Frame::Data(bytes)) => Ok(bytes),
            Some(Frame::TooLarge(n)) => {
                Err(io::Error::new(io::ErrorKind::InvalidData, format!("response frame of {n} bytes exceeds limit")))
            }
            None => Err(io::Error::new(io::ErrorKind::UnexpectedEof, "server closed connection")),
        }
    }
}

pub struct LineChannel<R, W> {
    reader: R,
    writer: W,
}

impl<R: BufRead + Send, W: Write + Send> LineChannel<R, W> {
    pub fn new(reader: R, writer: W) -> Self {
        Self { reader, writer }
    }

    /// Writes one line verbatim and reads one response line.
    pub fn send_raw_line(&mut self, line: &[u8]) -> io::Result<Vec<u8>> {
        self.writer.write_all(line)?;
        self.writer.write_all(b"\n")?;
        self.writer.flush()?;
        let mut buf = String::new();
        if self.reader.read_line(&mut buf)? == 0 {
            return Err(io::Error::new(io::ErrorKind::UnexpectedEof, "server closed stream"));
        }
        Ok(buf.trim_end().as_bytes().to_vec())
    }
}

impl<R: BufRead + Send, W: Write + Send> Channel for LineChannel<R, W> {
    fn roundtrip(&mut self, request: &[u8]) -> io::Result<Vec<u8>> {
        self.send_raw_line(request)
    }
}

/// [`ToolClient`] speaking JSON-RPC over any [`Channel`].
pub struct RemoteClient<C> {
    channel: Mutex<C>,
    next_id: AtomicU64,
}

impl RemoteClient<TcpChannel> {
    pub fn connect_tcp(addr: impl ToSocketAddrs) -> Result<Self, ClientError> {
        Ok(Self::new(TcpChannel::connect(addr)?))
    }
}

impl<C: Channel> RemoteClient<C> {
    pub fn new(channel: C) -> Self {
        Self { channel: Mutex::new(channel), next_id: AtomicU64::new(1) }
    }

    /// Sends one request and returns its `result` member.
    pub fn request(&self, method: &str, params: Value) -> Result<Value, ClientError> {
        let id = self.next_id.fetch_add(1, Ordering::SeqCst);
        let req = Request::new(id, method, params);
        let bytes = serde_json::to_vec(&req).map_err(|e| ClientError::Decode(e.to_string()))?;
        let raw = self.channel.lock().unwrap_or_else(|e| e.into_inner()).roundtrip(&bytes)?;
        let resp: Response = serde_json::from_slice(&raw).map_err(|e| ClientError::Decode(e.to_string()))?;
        if resp.id != id {
            return Err(ClientError::Decode(format!("response id {} does not match request id {id}", resp.id)));
        }
        match (resp.result, resp.error) {
            (_, Some(err)) if err.code == rpc::UNKNOWN_TOOL => Err(ClientError::UnknownTool(err.message)),
            (_, Some(err)) => Err(ClientError::Protocol { code: err.code, message: err.message }),
            (Some(result), None) => Ok(result),
            (None, None) => Err(ClientError::Decode("response has neither result nor error".into())),
        }
    }

    pub fn with_channel<T>(&self, f: impl FnOnce(&mut C) -> T) -> T {
        f(&mut self.channel.lock().unwrap_or_else(|e| e.into_inner()))
    }
}

fn decode<T: serde::de::DeserializeOwned>(v: Value) -> Result<T, ClientError> {
    serde_json::from_value(v).map_err(|e| ClientError::Decode(e.to_string()))
}

impl<C: Channel> ToolClient for RemoteClient<C> {
    fn list_tools(&self, detail: ListDetail) -> Result<Vec<ToolSpec>, ClientError> {
        let detail = match detail {
            ListDetail::NamesOnly => "names_only",
            ListDetail::Full => "full",
        };
        let mut result = self.request("tools/list", json!({ "detail": detail }))?;
        decode(result["tools"].take())
    }

    fn describe_tool(&self, name: &str) -> Result<ToolSpec, ClientError> {
        let mut result = self.request("tools/describe", json!({ "name": name }))?;
        decode(result["tool"].take())
    }

    fn invoke(&self, caller: &str, tool: &str, arguments: JsonMap) -> Result<ExecutedCall, ClientError> {
        let result = self.request("tools/call", json!({ "name": tool, "arguments": arguments, "caller": caller }))?;
        decode(result)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_roundtrip_and_eof() {
        let mut buf = Vec::new();
        write_frame(&mut buf, b"hello").unwrap();
        assert_eq!(&buf[..4], &[0, 0, 0, 5]);
        let mut cursor = io::Cursor::new(buf);
        match read_frame(&mut cursor).unwrap() {
            Some(Frame::Data(d)) => assert_eq!(d, b"hello"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(read_frame(&mut cursor).unwrap().is_none());
    }

    #[test]
    fn oversized_length_is_flagged() {
        let mut cursor = io::Cursor::new((MAX_FRAME_LEN + 1).to_be_bytes().to_vec());
        assert!(matches!(read_frame(&mut cursor).unwrap(), Some(Frame::TooLarge(_))));
    }
}
