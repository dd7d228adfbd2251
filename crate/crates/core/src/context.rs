//! Context descriptors for the mobile device, surrogates, network link and
//! application, read from small XML documents.
//!
//! Each descriptor is a flat element whose children carry one value each.
//! Tag order does not matter and unknown tags are ignored. Sizes accept the
//! suffixes `B`, `KB`, `MB` and `GB` (binary multiples, bare number = bytes).
//! Transmission rates accept `Bps`, `KBps` and `MBps` (bare number = bytes/s).
//! `CpuUsage` is a fraction in `[0, 1]`, never a percentage.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::order::{OrderExpr, OrderSyntaxError};

pub const KIB: f64 = 1024.0;
pub const MIB: f64 = 1024.0 * 1024.0;
pub const GIB: f64 = 1024.0 * 1024.0 * 1024.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ContextError {
    #[error("malformed document: {0}")]
    MalformedDocument(String),
    #[error("expected root element <{expected}>, found <{found}>")]
    WrongRoot { expected: String, found: String },
    #[error("missing field <{0}>")]
    MissingField(String),
    #[error("bad unit in <{field}>: {value:?}")]
    BadUnit { field: String, value: String },
    #[error("value out of range in <{field}>: {message}")]
    Range { field: String, message: String },
    #[error(transparent)]
    OrderSyntax(#[from] OrderSyntaxError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MobileContext {
    pub name: String,
    pub instructions_per_second: f64,
    /// Fraction of the processor already in use.
    pub cpu_usage: f64,
    /// Bytes.
    pub available_memory: f64,
    /// Joules.
    pub available_energy: f64,
    /// Watts drawn while computing locally.
    pub power_comp: f64,
    /// Watts drawn while sending.
    pub power_send: f64,
    /// Watts drawn while receiving.
    pub power_receive: f64,
    /// Watts drawn while idling during remote execution.
    pub power_standby: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateContext {
    pub name: String,
    pub instructions_per_second: f64,
    pub cpu_usage: f64,
    /// Bytes.
    pub available_memory: f64,
    /// `host:port` of the surrogate daemon.
    pub address: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkLink {
    pub network_type: String,
    /// Bytes per second, used in both directions.
    pub data_transmission_rate: f64,
    /// Carried for reference only.
    pub signal_strength: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AppClass {
    #[default]
    CpuIntensive,
    MemoryIntensive,
    IoIntensive,
}

impl AppClass {
    pub fn as_str(self) -> &'static str {
        match self {
            AppClass::CpuIntensive => "CpuIntensive",
            AppClass::MemoryIntensive => "MemoryIntensive",
            AppClass::IoIntensive => "IoIntensive",
        }
    }

    fn parse(field: &str, text: &str) -> Result<Self, ContextError> {
        let normalized: String = text
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        match normalized.as_str() {
            "cpuintensive" | "cpu" => Ok(AppClass::CpuIntensive),
            "memoryintensive" | "memory" => Ok(AppClass::MemoryIntensive),
            "iointensive" | "io" => Ok(AppClass::IoIntensive),
            _ => Err(ContextError::Range {
                field: field.into(),
                message: format!("unknown application class {text:?}"),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApplicationContext {
    pub name: String,
    pub app_class: AppClass,
    /// All sizes in bytes.
    pub required_memory: f64,
    pub code_size: f64,
    pub base_input_size: f64,
    pub base_output_size: f64,
    /// The `Order` text exactly as written in the descriptor.
    pub order_source: String,
    pub order: OrderExpr,
}

/// Load-adjusted instruction rate, `(1 - cpu_usage) * instructions_per_second`.
pub fn current_processing_power(
    cpu_usage: f64,
    instructions_per_second: f64,
) -> Result<f64, ContextError> {
    if !(0.0..=1.0).contains(&cpu_usage) {
        return Err(ContextError::Range {
            field: "CpuUsage".into(),
            message: format!("{cpu_usage} is outside [0, 1]"),
        });
    }
    Ok((1.0 - cpu_usage) * instructions_per_second)
}

impl MobileContext {
    pub fn parse(text: &str) -> Result<Self, ContextError> {
        let fields = Fields::from_document(text, "MobileContext")?;
        let ctx = MobileContext {
            name: fields.text("Name")?,
            instructions_per_second: fields.number("InstructionPSecond")?,
            cpu_usage: fields.number("CpuUsage")?,
            available_memory: fields.size_with_default_unit("AvailableMemoryMB", MIB)?,
            available_energy: fields.number("AvailableEnergyJ")?,
            power_comp: fields.number("PowerCompW")?,
            power_send: fields.number("PowerSendW")?,
            power_receive: fields.number("PowerReceiveW")?,
            power_standby: fields.number("PowerStandbyW")?,
        };
        ctx.validate()?;
        Ok(ctx)
    }

    pub fn validate(&self) -> Result<(), ContextError> {
        check_rate("InstructionPSecond", self.instructions_per_second)?;
        check_fraction("CpuUsage", self.cpu_usage)?;
        check_nonnegative("AvailableMemoryMB", self.available_memory)?;
        check_nonnegative("AvailableEnergyJ", self.available_energy)?;
        check_nonnegative("PowerCompW", self.power_comp)?;
        check_nonnegative("PowerSendW", self.power_send)?;
        check_nonnegative("PowerReceiveW", self.power_receive)?;
        check_nonnegative("PowerStandbyW", self.power_standby)
    }

    pub fn processing_power(&self) -> f64 {
        (1.0 - self.cpu_usage) * self.instructions_per_second
    }

    pub fn to_xml(&self) -> String {
        let mut out = String::from("<MobileContext>\n");
        push_tag(&mut out, "Name", &escape(&self.name));
        push_tag(&mut out, "InstructionPSecond", &self.instructions_per_second.to_string());
        push_tag(&mut out, "CpuUsage", &self.cpu_usage.to_string());
        push_tag(&mut out, "AvailableMemoryMB", &format!("{}B", self.available_memory));
        push_tag(&mut out, "AvailableEnergyJ", &self.available_energy.to_string());
        push_tag(&mut out, "PowerCompW", &self.power_comp.to_string());
        push_tag(&mut out, "PowerSendW", &self.power_send.to_string());
        push_tag(&mut out, "PowerReceiveW", &self.power_receive.to_string());
        push_tag(&mut out, "PowerStandbyW", &self.power_standby.to_string());
        out.push_str("</MobileContext>\n");
        out
    }
}

impl SurrogateContext {
    pub fn parse(text: &str) -> Result<Self, ContextError> {
        let fields = Fields::from_document(text, "SurrogateContext")?;
        let ctx = SurrogateContext {
            name: fields.text("Name")?,
            instructions_per_second: fields.number("InstructionPSecond")?,
            cpu_usage: fields.number("CpuUsage")?,
            available_memory: fields.size_with_default_unit("AvailableMemoryMB", MIB)?,
            address: fields.text("Address")?,
        };
        ctx.validate()?;
        Ok(ctx)
    }

    pub fn validate(&self) -> Result<(), ContextError> {
        check_rate("InstructionPSecond", self.instructions_per_second)?;
        check_fraction("CpuUsage", self.cpu_usage)?;
        check_nonnegative("AvailableMemoryMB", self.available_memory)?;
        check_address(&self.address)
    }

    pub fn processing_power(&self) -> f64 {
        (1.0 - self.cpu_usage) * self.instructions_per_second
    }

    pub fn to_xml(&self) -> String {
        let mut out = String::from("<SurrogateContext>\n");
        push_tag(&mut out, "Name", &escape(&self.name));
        push_tag(&mut out, "InstructionPSecond", &self.instructions_per_second.to_string());
        push_tag(&mut out, "CpuUsage", &self.cpu_usage.to_string());
        push_tag(&mut out, "AvailableMemoryMB", &format!("{}B", self.available_memory));
        push_tag(&mut out, "Address", &escape(&self.address));
        out.push_str("</SurrogateContext>\n");
        out
    }
}

impl NetworkLink {
    pub fn parse(text: &str) -> Result<Self, ContextError> {
        let fields = Fields::from_document(text, "NetworkContext")?;
        let rate_text = fields.required("DataTransmissionRate")?;
        let link = NetworkLink {
            network_type: fields.text("Type")?,
            data_transmission_rate: parse_rate("DataTransmissionRate", rate_text)?,
            signal_strength: fields
                .optional("SignalStrength")
                .map(|v| parse_number("SignalStrength", v))
                .transpose()?,
        };
        link.validate()?;
        Ok(link)
    }

    pub fn validate(&self) -> Result<(), ContextError> {
        check_rate("DataTransmissionRate", self.data_transmission_rate)
    }

    pub fn to_xml(&self) -> String {
        let mut out = String::from("<NetworkContext>\n");
        push_tag(&mut out, "Type", &escape(&self.network_type));
        push_tag(
            &mut out,
            "DataTransmissionRate",
            &format!("{}Bps", self.data_transmission_rate),
        );
        if let Some(s) = self.signal_strength {
            push_tag(&mut out, "SignalStrength", &s.to_string());
        }
        out.push_str("</NetworkContext>\n");
        out
    }
}

impl ApplicationContext {
    pub fn parse(text: &str) -> Result<Self, ContextError> {
        let fields = Fields::from_document(text, "ApplicationContext")?;
        let order_source = fields.required("Order")?.to_string();
        let order = OrderExpr::parse(&order_source)?;
        let app_class = match fields.optional("Class") {
            Some(v) => AppClass::parse("Class", v)?,
            None => AppClass::default(),
        };
        let ctx = ApplicationContext {
            name: fields.text("Name")?,
            app_class,
            required_memory: fields.size("RequiredMemory")?,
            code_size: fields.size("CodeSize")?,
            base_input_size: fields.size("BaseInputSize")?,
            base_output_size: fields.size("BaseOutputSize")?,
            order_source,
            order,
        };
        ctx.validate()?;
        Ok(ctx)
    }

    pub fn validate(&self) -> Result<(), ContextError> {
        check_nonnegative("RequiredMemory", self.required_memory)?;
        check_nonnegative("CodeSize", self.code_size)?;
        check_nonnegative("BaseInputSize", self.base_input_size)?;
        check_nonnegative("BaseOutputSize", self.base_output_size)
    }

    pub fn to_xml(&self) -> String {
        let mut out = String::from("<ApplicationContext>\n");
        push_tag(&mut out, "Name", &escape(&self.name));
        push_tag(&mut out, "Class", self.app_class.as_str());
        push_tag(&mut out, "RequiredMemory", &format!("{}B", self.required_memory));
        push_tag(&mut out, "CodeSize", &format!("{}B", self.code_size));
        push_tag(&mut out, "BaseInputSize", &format!("{}B", self.base_input_size));
        push_tag(&mut out, "BaseOutputSize", &format!("{}B", self.base_output_size));
        push_tag(&mut out, "Order", &escape(&self.order_source));
        out.push_str("</ApplicationContext>\n");
        out
    }
}

/// Parses a size such as `0.6MB`, `1 KB` or `512` (bytes).
pub fn parse_size(field: &str, text: &str) -> Result<f64, ContextError> {
    let (number, suffix) = split_magnitude(text);
    let scale = match suffix {
        "" | "B" => 1.0,
        "KB" => KIB,
        "MB" => MIB,
        "GB" => GIB,
        _ => return Err(bad_unit(field, text)),
    };
    let value = number.parse::<f64>().map_err(|_| bad_unit(field, text))?;
    finite(field, text, value * scale)
}

/// Parses a transmission rate such as `1MBps` or `675840` (bytes/s).
pub fn parse_rate(field: &str, text: &str) -> Result<f64, ContextError> {
    let (number, suffix) = split_magnitude(text);
    let scale = match suffix {
        "" | "Bps" => 1.0,
        "KBps" => KIB,
        "MBps" => MIB,
        _ => return Err(bad_unit(field, text)),
    };
    let value = number.parse::<f64>().map_err(|_| bad_unit(field, text))?;
    finite(field, text, value * scale)
}

fn parse_number(field: &str, text: &str) -> Result<f64, ContextError> {
    let value = text.trim().parse::<f64>().map_err(|_| bad_unit(field, text))?;
    finite(field, text, value)
}

fn finite(field: &str, text: &str, value: f64) -> Result<f64, ContextError> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(bad_unit(field, text))
    }
}

fn bad_unit(field: &str, text: &str) -> ContextError {
    ContextError::BadUnit {
        field: field.into(),
        value: text.into(),
    }
}

// Splits "0.6 MB" into ("0.6", "MB"). The suffix is the trailing run of
// ASCII letters; an exponent such as "528e6" stays with the number.
fn split_magnitude(text: &str) -> (&str, &str) {
    let text = text.trim();
    let split = text
        .char_indices()
        .rev()
        .take_while(|(_, c)| c.is_ascii_alphabetic())
        .last()
        .map_or(text.len(), |(i, _)| i);
    let (number, suffix) = text.split_at(split);
    let number = number.trim_end();
    // "5e" style leftovers mean the letters belonged to a malformed number.
    if number.ends_with(['e', 'E']) {
        return (text, "");
    }
    (number, suffix)
}

fn check_fraction(field: &str, value: f64) -> Result<(), ContextError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(ContextError::Range {
            field: field.into(),
            message: format!("{value} is outside [0, 1]"),
        })
    }
}

fn check_nonnegative(field: &str, value: f64) -> Result<(), ContextError> {
    if value >= 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(ContextError::Range {
            field: field.into(),
            message: format!("{value} must be a nonnegative finite number"),
        })
    }
}

fn check_rate(field: &str, value: f64) -> Result<(), ContextError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(ContextError::Range {
            field: field.into(),
            message: format!("{value} must be positive"),
        })
    }
}

fn check_address(address: &str) -> Result<(), ContextError> {
    let malformed = || ContextError::Range {
        field: "Address".into(),
        message: format!("{address:?} is not host:port"),
    };
    let (host, port) = address.rsplit_once(':').ok_or_else(malformed)?;
    let host = host.trim_start_matches('[').trim_end_matches(']');
    if host.is_empty() || host.contains(char::is_whitespace) {
        return Err(malformed());
    }
    port.parse::<u16>().map_err(|_| malformed())?;
    Ok(())
}

fn push_tag(out: &mut String, tag: &str, value: &str) {
    let _ = writeln!(out, "  <{tag}>{value}</{tag}>");
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Child-element text of a flat descriptor, keyed by tag name.
pub(crate) struct Fields {
    values: HashMap<String, Vec<String>>,
}

impl Fields {
    pub(crate) fn from_document(text: &str, root: &str) -> Result<Self, ContextError> {
        let doc = roxmltree::Document::parse(text)
            .map_err(|e| ContextError::MalformedDocument(e.to_string()))?;
        let root_el = doc.root_element();
        if root_el.tag_name().name() != root {
            return Err(ContextError::WrongRoot {
                expected: root.into(),
                found: root_el.tag_name().name().into(),
            });
        }
        let mut values: HashMap<String, Vec<String>> = HashMap::new();
        for child in root_el.children().filter(|n| n.is_element()) {
            let text: String = child
                .descendants()
                .filter(|n| n.is_text())
                .filter_map(|n| n.text())
                .collect();
            values
                .entry(child.tag_name().name().to_string())
                .or_default()
                .push(text.trim().to_string());
        }
        Ok(Self { values })
    }

    pub(crate) fn optional(&self, tag: &str) -> Option<&str> {
        self.values
            .get(tag)
            .and_then(|v| v.first())
            .map(String::as_str)
    }

    pub(crate) fn all(&self, tag: &str) -> &[String] {
        self.values.get(tag).map_or(&[], Vec::as_slice)
    }

    pub(crate) fn required(&self, tag: &str) -> Result<&str, ContextError> {
        self.optional(tag)
            .ok_or_else(|| ContextError::MissingField(tag.into()))
    }

    pub(crate) fn text(&self, tag: &str) -> Result<String, ContextError> {
        self.required(tag).map(str::to_string)
    }

    fn number(&self, tag: &str) -> Result<f64, ContextError> {
        parse_number(tag, self.required(tag)?)
    }

    fn size(&self, tag: &str) -> Result<f64, ContextError> {
        parse_size(tag, self.required(tag)?)
    }

    // A bare number is read in `default_scale` units; an explicit suffix wins.
    fn size_with_default_unit(&self, tag: &str, default_scale: f64) -> Result<f64, ContextError> {
        let text = self.required(tag)?;
        let (_, suffix) = split_magnitude(text);
        if suffix.is_empty() {
            Ok(parse_number(tag, text)? * default_scale)
        } else {
            parse_size(tag, text)
        }
    }
}
