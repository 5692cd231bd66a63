//! Live trials over WebSocket, one trial per connection.
//!
//! The server greets with `hello`, waits briefly for the console to speak,
//! then steps the trial one tick at a time. Inbound `activation` messages go
//! to a mailbox that the next tick consumes. After the trial a
//! `trial_summary` is sent and the connection is closed.

use std::fs::{self, File};
use std::io::{BufWriter, ErrorKind, Write};
use std::net::{TcpListener, TcpStream};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use anyhow::{anyhow, Context};
use hapgrip_core::harness::{TrialConfig, TrialRunner};
use hapgrip_core::sim::ObjectSpec;
use hapgrip_core::wire::{decode, Decoded, Envelope, Message, Sequencer, PROTOCOL_VERSION};
use tungstenite::{Message as WsMessage, WebSocket};

use crate::Failure;

const GREETING_WAIT: Duration = Duration::from_secs(2);

pub struct ServeOptions {
    pub port: u16,
    pub trial: TrialConfig,
    pub out: Option<PathBuf>,
    pub max_sessions: Option<usize>,
    pub fast: bool,
}

pub fn serve(opts: &ServeOptions, library: &[ObjectSpec]) -> Result<(), Failure> {
    // Surface configuration problems before opening the port.
    TrialRunner::new(opts.trial.clone(), library)?;
    let listener = TcpListener::bind(("127.0.0.1", opts.port))
        .with_context(|| format!("binding port {}", opts.port))
        .map_err(Failure::Runtime)?;
    let addr = listener
        .local_addr()
        .map_err(|e| Failure::Runtime(e.into()))?;
    println!("listening on ws://{addr}");
    std::io::stdout().flush().ok();

    let mut sessions = 0usize;
    for stream in listener.incoming() {
        let stream = stream.map_err(|e| Failure::Runtime(e.into()))?;
        sessions += 1;
        match run_session(stream, opts, library, sessions) {
            Ok(summary) => log::info!("session {sessions} finished: {summary}"),
            Err(e) => log::warn!("session {sessions} ended early: {e:#}"),
        }
        if opts.max_sessions.is_some_and(|m| sessions >= m) {
            break;
        }
    }
    Ok(())
}

struct SessionLog {
    tx: Option<BufWriter<File>>,
    rx: Option<BufWriter<File>>,
}

impl SessionLog {
    fn open(out: Option<&PathBuf>, session: usize) -> anyhow::Result<Self> {
        let Some(out) = out else {
            return Ok(Self { tx: None, rx: None });
        };
        let dir = out.join(format!("session-{session:03}"));
        fs::create_dir_all(&dir)?;
        Ok(Self {
            tx: Some(BufWriter::new(File::create(dir.join("sent.jsonl"))?)),
            rx: Some(BufWriter::new(File::create(dir.join("received.jsonl"))?)),
        })
    }

    fn line(w: &mut Option<BufWriter<File>>, text: &str) -> anyhow::Result<()> {
        if let Some(w) = w {
            w.write_all(text.as_bytes())?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    fn flush(&mut self) -> anyhow::Result<()> {
        for w in [self.tx.as_mut(), self.rx.as_mut()].into_iter().flatten() {
            w.flush()?;
        }
        Ok(())
    }
}

struct Session {
    ws: WebSocket<TcpStream>,
    seq: Sequencer,
    last_rx_seq: u64,
    mailbox: Option<f64>,
    heard_from_client: bool,
    closed: bool,
    log: SessionLog,
}

impl Session {
    fn send(&mut self, message: Message) -> anyhow::Result<()> {
        let text = self.seq.stamp(message).to_json();
        SessionLog::line(&mut self.log.tx, &text)?;
        self.ws.send(WsMessage::text(text))?;
        Ok(())
    }

    /// Read whatever has arrived without blocking.
    fn drain(&mut self) -> anyhow::Result<()> {
        self.ws.get_mut().set_nonblocking(true)?;
        let outcome = loop {
            match self.ws.read() {
                Ok(WsMessage::Text(text)) => self.handle(text.as_str())?,
                Ok(WsMessage::Close(_)) => {
                    self.closed = true;
                    break Ok(());
                }
                Ok(_) => {}
                Err(tungstenite::Error::Io(e)) if e.kind() == ErrorKind::WouldBlock => break Ok(()),
                Err(tungstenite::Error::ConnectionClosed | tungstenite::Error::AlreadyClosed) => {
                    self.closed = true;
                    break Ok(());
                }
                Err(e) => break Err(anyhow::Error::from(e)),
            }
        };
        self.ws.get_mut().set_nonblocking(false)?;
        outcome
    }

    fn handle(&mut self, text: &str) -> anyhow::Result<()> {
        SessionLog::line(&mut self.log.rx, text)?;
        self.heard_from_client = true;
        match decode(text) {
            Decoded::Message(Envelope { seq, message }) => {
                if seq <= self.last_rx_seq {
                    log::warn!("dropping message with stale sequence number {seq}");
                    return Ok(());
                }
                self.last_rx_seq = seq;
                match message {
                    Message::Activation { value, .. } if value.is_finite() => {
                        self.mailbox = Some(value.clamp(0.0, 1.0));
                    }
                    Message::Activation { value, .. } => log::warn!("ignoring activation {value}"),
                    Message::Hello { .. } => {}
                    other => log::debug!("ignoring inbound {} message", other.type_name()),
                }
            }
            Decoded::Unknown { type_name, .. } => {
                log::warn!("ignoring unknown message type '{type_name}'")
            }
            Decoded::Malformed(err) => log::warn!("dropping malformed message: {err}"),
        }
        Ok(())
    }
}

fn run_session(
    stream: TcpStream,
    opts: &ServeOptions,
    library: &[ObjectSpec],
    index: usize,
) -> anyhow::Result<String> {
    stream.set_nodelay(true).ok();
    let ws = tungstenite::accept(stream).map_err(|e| anyhow!("handshake failed: {e}"))?;
    let mut session = Session {
        ws,
        seq: Sequencer::new(),
        last_rx_seq: 0,
        mailbox: None,
        heard_from_client: false,
        closed: false,
        log: SessionLog::open(opts.out.as_ref(), index)?,
    };
    let trial = &opts.trial;
    session.send(Message::Hello {
        t: 0.0,
        protocol: PROTOCOL_VERSION,
        object: Some(trial.object.clone()),
        condition: Some(trial.condition),
        seed: Some(trial.seed),
        dt: Some(trial.sim.dt),
    })?;

    let waited = Instant::now();
    while !session.heard_from_client && !session.closed && waited.elapsed() < GREETING_WAIT {
        session.drain()?;
        std::thread::sleep(Duration::from_millis(1));
    }

    let mut runner = TrialRunner::new(trial.clone(), library)?;
    let dt = Duration::from_secs_f64(trial.sim.dt);
    let start = Instant::now();
    while !runner.is_finished() && !session.closed {
        session.drain()?;
        let manual = session.mailbox.take();
        let mut outgoing = Vec::new();
        runner.step(manual, |tick| {
            outgoing = Message::from_tick(tick);
            Ok(())
        })?;
        for m in outgoing {
            session.send(m)?;
        }
        if !opts.fast {
            let deadline = start + dt * runner.tick() as u32;
            if let Some(wait) = deadline.checked_duration_since(Instant::now()) {
                std::thread::sleep(wait);
            }
        }
    }

    let t = runner.tick() as f64 * trial.sim.dt;
    let result = runner.into_result();
    if !session.closed {
        session.send(Message::summary(t, &result))?;
        session.ws.close(None).ok();
        // Give the client a moment to acknowledge the close.
        session
            .ws
            .get_mut()
            .set_read_timeout(Some(Duration::from_millis(500)))?;
        while session.ws.read().is_ok() {}
    }
    session.log.flush()?;
    Ok(format!(
        "{} in {:.2} s, {} slips, {} deformations",
        if result.success { "success" } else { "failure" },
        result.completion_time,
        result.slip_count,
        result.deformation_count
    ))
}
