//! Surrogate daemon: accepts connections, runs one task per connection and
//! replies with its output.

use std::io::{self, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::Duration;

use tracing::{debug, info, warn};

use super::protocol::{
    read_frame, write_frame, Frame, MsgType, ProtocolError, STATUS_MALFORMED, STATUS_TASK_FAILED,
    STATUS_UNKNOWN_TASK,
};
use crate::context::SurrogateContext;
use crate::workloads::{TaskError, TaskRegistry};

/// How a connection ended.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConnectionOutcome {
    /// A task ran and its result was sent.
    Completed,
    /// An ERROR frame was sent before closing.
    Rejected(String),
    /// The peer went away (or stalled) without a complete request.
    Disconnected,
}

/// Serves one connection: any number of PINGs, then a single task request.
/// Never panics on malformed input.
pub fn handle_connection<S: Read + Write>(stream: &mut S, registry: &TaskRegistry) -> ConnectionOutcome {
    loop {
        let frame = match read_frame(stream) {
            Ok(frame) => frame,
            Err(ProtocolError::ConnectionClosed) | Err(ProtocolError::Io(_)) => {
                return ConnectionOutcome::Disconnected
            }
            Err(err) => return reject(stream, STATUS_MALFORMED, &err.to_string()),
        };
        match frame.msg_type {
            MsgType::Ping => {
                if write_frame(stream, &Frame::new(MsgType::Pong, frame.payload)).is_err() {
                    return ConnectionOutcome::Disconnected;
                }
            }
            MsgType::TaskRequest => return run_request(stream, registry, &frame),
            other => {
                return reject(
                    stream,
                    STATUS_MALFORMED,
                    &format!("unexpected message type {other:?}"),
                )
            }
        }
    }
}

fn run_request<S: Write>(stream: &mut S, registry: &TaskRegistry, frame: &Frame) -> ConnectionOutcome {
    let (task, input) = match frame.parse_task_request() {
        Ok(parts) => parts,
        Err(err) => return reject(stream, STATUS_MALFORMED, &err.to_string()),
    };
    match registry.execute(task, input) {
        Ok(output) => match write_frame(stream, &Frame::task_result(&output)) {
            Ok(()) => ConnectionOutcome::Completed,
            Err(_) => ConnectionOutcome::Disconnected,
        },
        Err(TaskError::UnknownTask(_)) => reject(stream, STATUS_UNKNOWN_TASK, "unknown task"),
        Err(err) => reject(stream, STATUS_TASK_FAILED, &err.to_string()),
    }
}

fn reject<S: Write>(stream: &mut S, status: u8, message: &str) -> ConnectionOutcome {
    // The peer may already be gone; the connection closes either way.
    let _ = write_frame(stream, &Frame::error(status, message));
    ConnectionOutcome::Rejected(message.to_string())
}

#[derive(Debug, Clone)]
pub struct ServerConfig {
    /// Idle limit per connection read.
    pub read_timeout: Duration,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            read_timeout: Duration::from_secs(30),
        }
    }
}

/// A bound, not yet running daemon.
pub struct Server {
    listener: TcpListener,
    context: SurrogateContext,
    registry: TaskRegistry,
    config: ServerConfig,
    shutdown: Arc<AtomicBool>,
}

impl Server {
    pub fn bind(
        addr: impl ToSocketAddrs,
        context: SurrogateContext,
        registry: TaskRegistry,
    ) -> io::Result<Self> {
        Ok(Self {
            listener: TcpListener::bind(addr)?,
            context,
            registry,
            config: ServerConfig::default(),
            shutdown: Arc::new(AtomicBool::new(false)),
        })
    }

    pub fn with_config(mut self, config: ServerConfig) -> Self {
        self.config = config;
        self
    }

    pub fn local_addr(&self) -> io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    pub fn context(&self) -> &SurrogateContext {
        &self.context
    }

    /// Accepts connections until shut down, one thread per connection.
    pub fn run(self) -> io::Result<()> {
        let addr = self.local_addr()?;
        info!(surrogate = %self.context.name, %addr, tasks = ?self.registry, "serving");
        for stream in self.listener.incoming() {
            if self.shutdown.load(Ordering::SeqCst) {
                break;
            }
            let stream = match stream {
                Ok(s) => s,
                Err(err) => {
                    warn!(%err, "accept failed");
                    continue;
                }
            };
            let registry = self.registry.clone();
            let timeout = self.config.read_timeout;
            thread::spawn(move || serve_stream(stream, &registry, timeout));
        }
        info!(%addr, "stopped");
        Ok(())
    }

    /// Runs the daemon on a background thread.
    pub fn spawn(self) -> io::Result<RunningServer> {
        let addr = self.local_addr()?;
        let shutdown = Arc::clone(&self.shutdown);
        let thread = thread::spawn(move || self.run());
        Ok(RunningServer {
            addr,
            shutdown,
            thread: Some(thread),
        })
    }
}

fn serve_stream(mut stream: TcpStream, registry: &TaskRegistry, timeout: Duration) {
    let peer = stream.peer_addr().ok();
    let _ = stream.set_read_timeout(Some(timeout));
    let _ = stream.set_write_timeout(Some(timeout));
    let _ = stream.set_nodelay(true);
    let outcome = handle_connection(&mut stream, registry);
    debug!(?peer, ?outcome, "connection finished");
}

/// Handle to a daemon running on a background thread. Dropping it shuts
/// the daemon down.
pub struct RunningServer {
    addr: SocketAddr,
    shutdown: Arc<AtomicBool>,
    thread: Option<JoinHandle<io::Result<()>>>,
}

impl RunningServer {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn is_running(&self) -> bool {
        self.thread.as_ref().is_some_and(|t| !t.is_finished())
    }

    pub fn shutdown(mut self) -> io::Result<()> {
        self.stop()
    }

    fn stop(&mut self) -> io::Result<()> {
        let Some(thread) = self.thread.take() else {
            return Ok(());
        };
        self.shutdown.store(true, Ordering::SeqCst);
        // Wake the blocking accept.
        let _ = TcpStream::connect(self.addr);
        thread
            .join()
            .map_err(|_| io::Error::other("server thread panicked"))?
    }
}

impl Drop for RunningServer {
    fn drop(&mut self) {
        let _ = self.stop();
    }
}

/// Binds `bind` and serves until the process exits.
pub fn serve(bind: &str, context: SurrogateContext, registry: TaskRegistry) -> io::Result<()> {
    Server::bind(bind, context, registry)?.run()
}
