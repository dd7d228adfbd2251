//! Mobile-side execution: locally, on a surrogate over TCP, or against a
//! simulated surrogate whose link and compute times run on a virtual clock.

use std::io;
use std::net::{TcpStream, ToSocketAddrs};
use std::time::{Duration, Instant};

use thiserror::Error;

use super::clock::VirtualClock;
use super::protocol::{read_frame, write_frame, Frame, MsgType, ProtocolError, STATUS_OK};
use crate::context::{ApplicationContext, MobileContext, NetworkLink, SurrogateContext};
use crate::estimator::{estimate_execution_time, plan_transfer, EstimateError};
use crate::workloads::{TaskError, TaskRegistry};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);

#[derive(Debug, Error)]
pub enum RuntimeError {
    #[error("connection to {endpoint} failed: {source}")]
    ConnectionFailed {
        endpoint: String,
        #[source]
        source: io::Error,
    },
    #[error("surrogate reported error (status {status:#04x}): {message}")]
    Remote { status: u8, message: String },
    #[error("timed out waiting for the surrogate")]
    Timeout,
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Task(#[from] TaskError),
    #[error(transparent)]
    Estimate(#[from] EstimateError),
}

/// Seconds spent in each phase of one execution. Local runs only have
/// `t_exec`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Timing {
    pub t_send: f64,
    pub t_exec: f64,
    pub t_recv: f64,
}

impl Timing {
    pub fn total(&self) -> f64 {
        self.t_send + self.t_exec + self.t_recv
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Execution {
    pub output: Vec<u8>,
    pub timing: Timing,
}

/// Runs the task in-process and measures wall time.
pub fn execute_local(registry: &TaskRegistry, task: &str, input: &[u8]) -> Result<Execution, RuntimeError> {
    let started = Instant::now();
    let output = registry.execute(task, input)?;
    Ok(Execution {
        output,
        timing: Timing {
            t_exec: started.elapsed().as_secs_f64(),
            ..Timing::default()
        },
    })
}

/// Runs the task in-process but charges the modeled execution time of the
/// mobile device to `clock`.
pub fn execute_local_simulated(
    registry: &TaskRegistry,
    app: &ApplicationContext,
    mobile: &MobileContext,
    input: &[u8],
    clock: &mut VirtualClock,
) -> Result<Execution, RuntimeError> {
    let task = registry.get(&app.name)?;
    let input_value = task.input_value(input)?;
    let output = task.execute(input)?;
    let t_exec = clock.advance(estimate_execution_time(
        app,
        input_value,
        mobile.instructions_per_second,
    )?);
    Ok(Execution {
        output,
        timing: Timing {
            t_exec,
            ..Timing::default()
        },
    })
}

/// TCP client for a surrogate daemon.
#[derive(Debug, Clone)]
pub struct RemoteClient {
    endpoint: String,
    timeout: Duration,
}

impl RemoteClient {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            timeout: DEFAULT_TIMEOUT,
        }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    fn connect(&self) -> Result<TcpStream, RuntimeError> {
        let failed = |source: io::Error| RuntimeError::ConnectionFailed {
            endpoint: self.endpoint.clone(),
            source,
        };
        let addrs: Vec<_> = self.endpoint.to_socket_addrs().map_err(failed)?.collect();
        let mut last_err = io::Error::new(io::ErrorKind::NotFound, "no addresses resolved");
        for addr in addrs {
            match TcpStream::connect_timeout(&addr, self.timeout) {
                Ok(stream) => {
                    stream.set_read_timeout(Some(self.timeout)).map_err(failed)?;
                    stream.set_write_timeout(Some(self.timeout)).map_err(failed)?;
                    let _ = stream.set_nodelay(true);
                    return Ok(stream);
                }
                Err(err) => last_err = err,
            }
        }
        Err(failed(last_err))
    }

    /// Round-trips a PING.
    pub fn ping(&self) -> Result<Duration, RuntimeError> {
        let mut stream = self.connect()?;
        let started = Instant::now();
        write_frame(&mut stream, &Frame::new(MsgType::Ping, Vec::new())).map_err(timeout_aware)?;
        let reply = read_frame(&mut stream).map_err(timeout_aware)?;
        if reply.msg_type != MsgType::Pong {
            return Err(ProtocolError::BadPayload(format!("expected PONG, got {:?}", reply.msg_type)).into());
        }
        Ok(started.elapsed())
    }

    /// Sends one task request. `t_exec` is measured from the end of the
    /// upload to the first byte of the reply.
    pub fn execute(&self, task: &str, input: &[u8]) -> Result<Execution, RuntimeError> {
        let mut stream = self.connect()?;
        let request = Frame::task_request(task, input);

        let started = Instant::now();
        write_frame(&mut stream, &request).map_err(timeout_aware)?;
        let sent = Instant::now();
        let mut probe = [0u8; 1];
        stream.peek(&mut probe).map_err(|e| timeout_aware(e.into()))?;
        let first_byte = Instant::now();
        let reply = read_frame(&mut stream).map_err(timeout_aware)?;
        let done = Instant::now();

        let timing = Timing {
            t_send: (sent - started).as_secs_f64(),
            t_exec: (first_byte - sent).as_secs_f64(),
            t_recv: (done - first_byte).as_secs_f64(),
        };
        let (status, body) = reply.status()?;
        match reply.msg_type {
            MsgType::TaskResult if status == STATUS_OK => Ok(Execution {
                output: body.to_vec(),
                timing,
            }),
            MsgType::TaskResult | MsgType::Error => Err(RuntimeError::Remote {
                status,
                message: String::from_utf8_lossy(body).into_owned(),
            }),
            other => Err(ProtocolError::BadPayload(format!("unexpected reply {other:?}")).into()),
        }
    }
}

fn timeout_aware(err: ProtocolError) -> RuntimeError {
    match err {
        ProtocolError::Io(e)
            if matches!(e.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut) =>
        {
            RuntimeError::Timeout
        }
        other => RuntimeError::Protocol(other),
    }
}

/// A surrogate modeled in-process: the task really runs, but the transfer
/// and execution phases advance a virtual clock by their modeled durations.
#[derive(Debug, Clone)]
pub struct SimulatedSurrogate {
    pub surrogate: SurrogateContext,
    pub link: NetworkLink,
    pub registry: TaskRegistry,
}

impl SimulatedSurrogate {
    pub fn new(surrogate: SurrogateContext, link: NetworkLink, registry: TaskRegistry) -> Self {
        Self {
            surrogate,
            link,
            registry,
        }
    }

    pub fn execute(
        &self,
        app: &ApplicationContext,
        input: &[u8],
        clock: &mut VirtualClock,
    ) -> Result<Execution, RuntimeError> {
        let task = self.registry.get(&app.name)?;
        let input_value = task.input_value(input)?;
        let plan = plan_transfer(app, task.input_bytes(input)?, &self.link);

        let t_send = clock.advance(plan.send_time()?);
        let output = task.execute(input)?;
        let t_exec = clock.advance(estimate_execution_time(
            app,
            input_value,
            self.surrogate.instructions_per_second,
        )?);
        let t_recv = clock.advance(plan.receive_time()?);
        Ok(Execution {
            output,
            timing: Timing {
                t_send,
                t_exec,
                t_recv,
            },
        })
    }
}

/// How the mobile reaches a surrogate.
#[derive(Debug, Clone)]
pub enum LinkMode {
    Real(RemoteClient),
    Simulated(SimulatedSurrogate),
}

/// Executes `input` for `app` on the surrogate behind `mode`. Simulated runs
/// advance `clock`; real runs leave it untouched.
pub fn execute_remote(
    mode: &LinkMode,
    app: &ApplicationContext,
    input: &[u8],
    clock: &mut VirtualClock,
) -> Result<Execution, RuntimeError> {
    match mode {
        LinkMode::Real(client) => client.execute(&app.name, input),
        LinkMode::Simulated(sim) => sim.execute(app, input, clock),
    }
}
