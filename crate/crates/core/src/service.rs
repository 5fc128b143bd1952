//! Line-oriented trigger service over TCP.
//!
//! Requests, one per line:
//!
//! ```text
//! TRIGGER dev=<id> b=<float> amp=<float> [count=<int>] [interval_ms=<int>]
//! PING
//! ```
//!
//! Replies are `OK <path>`, `PONG` or `ERR <code> <reason>`.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::thread;

use crate::device::DeviceSpec;
use crate::error::{Error, Result};
use crate::waveform::{apply_rounding, export_pcm, pulse_train, DEFAULT_SAMPLE_RATE};

pub const DEFAULT_PULSE_LENGTH_S: f64 = 0.05;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub out_dir: PathBuf,
    pub sample_rate: u32,
    pub pulse_length_s: f64,
}

impl ServiceConfig {
    pub fn new(out_dir: impl Into<PathBuf>) -> Self {
        Self {
            out_dir: out_dir.into(),
            sample_rate: DEFAULT_SAMPLE_RATE,
            pulse_length_s: DEFAULT_PULSE_LENGTH_S,
        }
    }
}

/// Devices by id, read from a JSON object of device configs.
pub fn load_registry(path: impl AsRef<Path>) -> Result<BTreeMap<String, DeviceSpec>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
    let registry: BTreeMap<String, DeviceSpec> = serde_json::from_str(&text)?;
    for (id, spec) in &registry {
        valid_id(id).map_err(|m| Error::invalid(format!("device id {id:?}: {m}")))?;
        spec.validate()?;
    }
    Ok(registry)
}

fn valid_id(id: &str) -> std::result::Result<(), &'static str> {
    if id.is_empty() {
        return Err("empty");
    }
    if !id
        .chars()
        .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
    {
        return Err("only letters, digits, '-' and '_' are allowed");
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriggerCommand<'a> {
    pub device: &'a str,
    pub b: f64,
    pub amplitude: f64,
    pub count: u32,
    pub interval_ms: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Command<'a> {
    Ping,
    Trigger(TriggerCommand<'a>),
}

/// A reply-ready rejection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reject {
    pub code: u16,
    pub reason: String,
}

impl Reject {
    fn bad(reason: impl Into<String>) -> Self {
        Self {
            code: 400,
            reason: reason.into(),
        }
    }
}

impl std::fmt::Display for Reject {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ERR {} {}", self.code, self.reason)
    }
}

pub fn parse_command(line: &str) -> std::result::Result<Command<'_>, Reject> {
    let mut words = line.split_whitespace();
    let verb = words.next().ok_or_else(|| Reject::bad("empty command"))?;
    match verb {
        "PING" => match words.next() {
            None => Ok(Command::Ping),
            Some(_) => Err(Reject::bad("PING takes no arguments")),
        },
        "TRIGGER" => parse_trigger(words).map(Command::Trigger),
        other => Err(Reject::bad(format!("unknown command {other}"))),
    }
}

fn parse_trigger<'a>(
    words: impl Iterator<Item = &'a str>,
) -> std::result::Result<TriggerCommand<'a>, Reject> {
    let mut fields: HashMap<&str, &str> = HashMap::new();
    for word in words {
        let (k, v) = word
            .split_once('=')
            .ok_or_else(|| Reject::bad(format!("expected key=value, got {word}")))?;
        if !matches!(k, "dev" | "b" | "amp" | "count" | "interval_ms") {
            return Err(Reject::bad(format!("unknown field {k}")));
        }
        if fields.insert(k, v).is_some() {
            return Err(Reject::bad(format!("duplicate field {k}")));
        }
    }
    let need = |k: &str| {
        fields
            .get(k)
            .copied()
            .ok_or_else(|| Reject::bad(format!("missing {k}")))
    };
    let float = |k: &str| -> std::result::Result<f64, Reject> {
        need(k)?
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| Reject::bad(format!("{k} is not a number")))
    };

    let device = need("dev")?;
    let b = float("b")?;
    if !(b > 0.0 && b <= 1.0) {
        return Err(Reject::bad("roundness out of range"));
    }
    let amplitude = float("amp")?;
    if amplitude < 0.0 {
        return Err(Reject::bad("amplitude out of range"));
    }
    let count = match fields.get("count") {
        None => 1,
        Some(v) => v
            .parse::<u32>()
            .ok()
            .filter(|&c| c >= 1)
            .ok_or_else(|| Reject::bad("count must be a positive integer"))?,
    };
    let interval_ms = match fields.get("interval_ms") {
        None => 1000,
        Some(v) => v
            .parse::<u64>()
            .ok()
            .filter(|&i| i >= 1)
            .ok_or_else(|| Reject::bad("interval_ms must be a positive integer"))?,
    };
    Ok(TriggerCommand {
        device,
        b,
        amplitude,
        count,
        interval_ms,
    })
}

/// Shared state behind every connection. Triggers for one device are
/// handled one at a time.
pub struct Service {
    config: ServiceConfig,
    devices: BTreeMap<String, Mutex<u64>>,
}

impl Service {
    pub fn new(config: ServiceConfig, registry: &BTreeMap<String, DeviceSpec>) -> Result<Self> {
        std::fs::create_dir_all(&config.out_dir).map_err(|e| Error::file(&config.out_dir, e))?;
        for id in registry.keys() {
            valid_id(id).map_err(|m| Error::invalid(format!("device id {id:?}: {m}")))?;
        }
        Ok(Self {
            config,
            devices: registry
                .keys()
                .map(|k| (k.clone(), Mutex::new(0)))
                .collect(),
        })
    }

    /// Reply to one request line, without the trailing newline.
    pub fn handle_line(&self, line: &str) -> String {
        match parse_command(line.trim()) {
            Ok(Command::Ping) => "PONG".into(),
            Ok(Command::Trigger(cmd)) => match self.trigger(&cmd) {
                Ok(path) => format!("OK {}", path.display()),
                Err(reject) => reject.to_string(),
            },
            Err(reject) => reject.to_string(),
        }
    }

    fn trigger(&self, cmd: &TriggerCommand) -> std::result::Result<PathBuf, Reject> {
        let slot = self.devices.get(cmd.device).ok_or(Reject {
            code: 404,
            reason: "unknown device".into(),
        })?;
        let mut counter = slot.lock().unwrap_or_else(|p| p.into_inner());
        let wave = pulse_train(
            cmd.amplitude,
            self.config.pulse_length_s,
            self.config.sample_rate,
            cmd.count,
            cmd.interval_ms as f64 / 1000.0,
        )
        .and_then(|w| apply_rounding(&w, cmd.b))
        .map_err(|e| Reject::bad(e.to_string()))?;
        let path = self
            .config
            .out_dir
            .join(format!("{}-{:06}.wav", cmd.device, *counter));
        export_pcm(&wave, &path).map_err(|e| Reject {
            code: 500,
            reason: e.to_string(),
        })?;
        *counter += 1;
        Ok(path)
    }

    fn handle_connection(&self, stream: TcpStream) -> std::io::Result<()> {
        let mut writer = stream.try_clone()?;
        for line in BufReader::new(stream).lines() {
            let reply = self.handle_line(&line?);
            writer.write_all(reply.as_bytes())?;
            writer.write_all(b"\n")?;
            writer.flush()?;
        }
        Ok(())
    }
}

/// Accepts connections forever, one thread each.
pub fn serve(listener: TcpListener, service: Arc<Service>) -> Result<()> {
    for stream in listener.incoming() {
        let stream = stream?;
        let service = Arc::clone(&service);
        thread::spawn(move || {
            let _ = service.handle_connection(stream);
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::waveform::encode_wav;

    fn service(dir: &Path) -> Service {
        let registry = BTreeMap::from([("a".to_string(), DeviceSpec::default())]);
        Service::new(ServiceConfig::new(dir), &registry).unwrap()
    }

    #[test]
    fn ping() {
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(service(dir.path()).handle_line("PING"), "PONG");
    }

    #[test]
    fn trigger_writes_three_pulses() {
        let dir = tempfile::tempdir().unwrap();
        let s = service(dir.path());
        let reply = s.handle_line("TRIGGER dev=a b=1 amp=10 count=3 interval_ms=1000");
        let path = reply.strip_prefix("OK ").expect(&reply);
        let bytes = std::fs::read(path).unwrap();
        let expected =
            pulse_train(10.0, DEFAULT_PULSE_LENGTH_S, DEFAULT_SAMPLE_RATE, 3, 1.0).unwrap();
        assert_eq!(bytes, encode_wav(&expected).unwrap());
        let second = s.handle_line("TRIGGER dev=a b=1 amp=10");
        assert_ne!(second, reply);
    }

    #[test]
    fn rejections() {
        let dir = tempfile::tempdir().unwrap();
        let s = service(dir.path());
        assert_eq!(
            s.handle_line("TRIGGER dev=a b=2 amp=10 count=1 interval_ms=1000"),
            "ERR 400 roundness out of range"
        );
        assert_eq!(
            s.handle_line("TRIGGER dev=a b=0 amp=10"),
            "ERR 400 roundness out of range"
        );
        assert_eq!(
            s.handle_line("TRIGGER dev=zz b=1 amp=10"),
            "ERR 404 unknown device"
        );
        for bad in [
            "",
            "HELLO",
            "TRIGGER dev=a",
            "TRIGGER dev=a b=x amp=1",
            "TRIGGER dev=a b=1 amp=1 amp=2",
            "TRIGGER dev=a b=1 amp=1 count=0",
            "TRIGGER dev=a b=1 amp=1 colour=red",
            "PING now",
        ] {
            assert!(s.handle_line(bad).starts_with("ERR 400 "), "{bad}");
        }
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
    }

    #[test]
    fn ids_must_be_file_safe() {
        let dir = tempfile::tempdir().unwrap();
        let registry = BTreeMap::from([("../x".to_string(), DeviceSpec::default())]);
        assert!(Service::new(ServiceConfig::new(dir.path()), &registry).is_err());
    }
}
