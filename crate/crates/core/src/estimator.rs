//! Time and energy estimates for running a task on the mobile device or on a
//! surrogate.
//!
//! Execution time is the `Order` instruction count divided by the location's
//! `InstructionPSecond`. An offloaded task additionally pays for sending code
//! and input and for receiving the output over the link; while the surrogate
//! computes, the mobile idles at its standby power.

use std::fmt;

use thiserror::Error;

use crate::context::{ApplicationContext, MobileContext, NetworkLink, SurrogateContext};
use crate::order::EvalError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimateError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("zero capacity: {0} must be positive")]
    ZeroCapacity(&'static str),
}

/// Where a task runs.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Location {
    Local,
    Surrogate(String),
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Local => f.write_str("mobile"),
            Location::Surrogate(name) => f.write_str(name),
        }
    }
}

/// Bytes moved for one offloaded execution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferPlan {
    /// Code plus input.
    pub uplink_bytes: f64,
    /// Output.
    pub downlink_bytes: f64,
    /// Bytes per second in either direction.
    pub rate: f64,
}

impl TransferPlan {
    pub fn send_time(&self) -> Result<f64, EstimateError> {
        transfer_time(self.uplink_bytes, self.rate)
    }

    pub fn receive_time(&self) -> Result<f64, EstimateError> {
        transfer_time(self.downlink_bytes, self.rate)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateEstimate {
    pub location: Location,
    /// Seconds, always `t_send + t_exec + t_recv`.
    pub time: f64,
    /// Joules drawn from the mobile battery.
    pub energy: f64,
    /// Load-adjusted instruction rate of the location.
    pub processing_power: f64,
    /// Bytes of memory free at the location.
    pub available_memory: f64,
    pub t_send: f64,
    pub t_exec: f64,
    pub t_recv: f64,
}

/// `Order(input_value) / ips`.
pub fn estimate_execution_time(
    app: &ApplicationContext,
    input_value: f64,
    ips: f64,
) -> Result<f64, EstimateError> {
    if ips <= 0.0 || ips.is_nan() {
        return Err(EstimateError::ZeroCapacity("instructions per second"));
    }
    Ok(app.order.eval(input_value)? / ips)
}

/// Uplink carries code and input (the larger of the declared base size and
/// the actual payload), downlink carries the declared output size.
pub fn plan_transfer(
    app: &ApplicationContext,
    input_payload_bytes: f64,
    link: &NetworkLink,
) -> TransferPlan {
    TransferPlan {
        uplink_bytes: app.code_size + app.base_input_size.max(input_payload_bytes),
        downlink_bytes: app.base_output_size,
        rate: link.data_transmission_rate,
    }
}

pub fn transfer_time(bytes: f64, rate: f64) -> Result<f64, EstimateError> {
    if rate <= 0.0 || rate.is_nan() {
        return Err(EstimateError::ZeroCapacity("data transmission rate"));
    }
    Ok(bytes / rate)
}

pub fn estimate_local(
    app: &ApplicationContext,
    input_value: f64,
    mobile: &MobileContext,
) -> Result<CandidateEstimate, EstimateError> {
    let t_exec = estimate_execution_time(app, input_value, mobile.instructions_per_second)?;
    Ok(CandidateEstimate {
        location: Location::Local,
        time: t_exec,
        energy: t_exec * mobile.power_comp,
        processing_power: mobile.processing_power(),
        available_memory: mobile.available_memory,
        t_send: 0.0,
        t_exec,
        t_recv: 0.0,
    })
}

pub fn estimate_offload(
    app: &ApplicationContext,
    input_value: f64,
    input_bytes: f64,
    mobile: &MobileContext,
    surrogate: &SurrogateContext,
    link: &NetworkLink,
) -> Result<CandidateEstimate, EstimateError> {
    let plan = plan_transfer(app, input_bytes, link);
    let t_send = plan.send_time()?;
    let t_exec = estimate_execution_time(app, input_value, surrogate.instructions_per_second)?;
    let t_recv = plan.receive_time()?;
    Ok(CandidateEstimate {
        location: Location::Surrogate(surrogate.name.clone()),
        time: t_send + t_exec + t_recv,
        energy: t_send * mobile.power_send
            + t_exec * mobile.power_standby
            + t_recv * mobile.power_receive,
        processing_power: surrogate.processing_power(),
        available_memory: surrogate.available_memory,
        t_send,
        t_exec,
        t_recv,
    })
}
