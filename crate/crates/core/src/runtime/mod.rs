//! Remote execution: wire protocol, surrogate daemon, mobile-side client
//! and the virtual clock used for simulated links.

mod client;
mod clock;
pub mod protocol;
mod server;

pub use client::{
    execute_local, execute_local_simulated, execute_remote, Execution, LinkMode, RemoteClient,
    RuntimeError, SimulatedSurrogate, Timing, DEFAULT_TIMEOUT,
};
pub use clock::VirtualClock;
pub use protocol::{Frame, MsgType, ProtocolError};
pub use server::{handle_connection, serve, ConnectionOutcome, RunningServer, Server, ServerConfig};
