//! The `serve` subcommand: one pipeline per connection over stdio, TCP or
//! WebSocket. Upstream `gaze` messages drive the pipeline and `end` flushes
//! it; other message types are ignored. Malformed lines are reported on
//! stderr and skipped. Closing the input also flushes, except over
//! WebSocket where nothing can be sent once the peer has closed.

use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::Arc;
use std::thread;

use tungstenite::Message;

use super::{data, pipeline_config, CliError, ServeArgs};
use crate::geometry::ScreenGeometry;
use crate::pipeline::{Pipeline, PipelineConfig};
use crate::wire::{WireBody, WireMessage};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ServeSummary {
    pub received: usize,
    pub emitted: usize,
    pub rejected: usize,
}

struct Session {
    pipeline: Pipeline,
    summary: ServeSummary,
}

impl Session {
    fn new(config: PipelineConfig) -> Result<Self, CliError> {
        Ok(Self {
            pipeline: Pipeline::new(config).map_err(data)?,
            summary: ServeSummary::default(),
        })
    }

    fn handle_line(&mut self, line: &str) -> Vec<WireMessage> {
        let line = line.trim();
        if line.is_empty() {
            return Vec::new();
        }
        self.summary.received += 1;
        let msg = match WireMessage::parse(line) {
            Ok(m) => m,
            Err(e) => {
                eprintln!("warning: skipping message: {e}");
                self.summary.rejected += 1;
                return Vec::new();
            }
        };
        if matches!(msg.body, WireBody::End {}) {
            return self.finish();
        }
        let Some(sample) = msg.as_gaze_sample() else {
            return Vec::new();
        };
        match self.pipeline.push_sample(sample) {
            Ok(out) => {
                self.summary.emitted += out.len();
                out
            }
            Err(e) => {
                eprintln!("warning: skipping sample at t={}: {e}", sample.t_ms);
                self.summary.rejected += 1;
                Vec::new()
            }
        }
    }

    fn finish(&mut self) -> Vec<WireMessage> {
        let out = self.pipeline.flush();
        self.summary.emitted += out.len();
        out
    }
}

/// Runs one session over newline-delimited messages until `reader` ends.
pub fn serve_lines<R: BufRead, W: Write>(reader: R, mut writer: W, config: PipelineConfig) -> io::Result<ServeSummary> {
    let mut session = Session::new(config).map_err(|e| io::Error::new(io::ErrorKind::InvalidInput, e.to_string()))?;
    for line in reader.lines() {
        for m in session.handle_line(&line?) {
            writeln!(writer, "{}", m.to_line())?;
        }
        writer.flush()?;
    }
    for m in session.finish() {
        writeln!(writer, "{}", m.to_line())?;
    }
    writer.flush()?;
    Ok(session.summary)
}

fn tcp_session(stream: TcpStream, config: PipelineConfig) -> io::Result<ServeSummary> {
    let reader = BufReader::new(stream.try_clone()?);
    serve_lines(reader, BufWriter::new(stream), config)
}

fn ws_session(stream: TcpStream, config: PipelineConfig) -> Result<ServeSummary, String> {
    let mut ws = tungstenite::accept(stream).map_err(|e| e.to_string())?;
    let mut session = Session::new(config).map_err(|e| e.to_string())?;
    let send_all = |ws: &mut tungstenite::WebSocket<TcpStream>, msgs: Vec<WireMessage>| {
        for m in msgs {
            ws.send(Message::Text(m.to_line())).map_err(|e| e.to_string())?;
        }
        Ok::<_, String>(())
    };
    loop {
        match ws.read() {
            Ok(Message::Text(text)) => {
                for line in text.lines() {
                    let out = session.handle_line(line);
                    send_all(&mut ws, out)?;
                }
            }
            Ok(Message::Close(_)) => {
                session.finish();
                let _ = ws.flush();
                break;
            }
            Ok(_) => {}
            Err(tungstenite::Error::ConnectionClosed | tungstenite::Error::AlreadyClosed) => break,
            Err(e) => return Err(e.to_string()),
        }
    }
    Ok(session.summary)
}

fn accept_loop<F>(addr: &str, once: bool, label: &str, handle: F) -> Result<(), CliError>
where
    F: Fn(TcpStream) -> Result<ServeSummary, String> + Send + Sync + 'static,
{
    let handle = Arc::new(handle);
    let listener = TcpListener::bind(addr).map_err(|e| data(format!("{addr}: {e}")))?;
    let local = listener.local_addr().map_err(data)?;
    eprintln!("listening on {label}://{local}");
    let mut workers = Vec::new();
    for stream in listener.incoming() {
        let stream = match stream {
            Ok(s) => s,
            Err(e) => {
                eprintln!("warning: accept failed: {e}");
                continue;
            }
        };
        let peer = stream.peer_addr().map(|a| a.to_string()).unwrap_or_default();
        let handle = Arc::clone(&handle);
        let worker = thread::spawn(move || match handle(stream) {
            Ok(s) => eprintln!(
                "{peer}: {} received, {} emitted, {} rejected",
                s.received, s.emitted, s.rejected
            ),
            Err(e) => eprintln!("{peer}: {e}"),
        });
        if once {
            let _ = worker.join();
            return Ok(());
        }
        workers.retain(|w: &thread::JoinHandle<()>| !w.is_finished());
        workers.push(worker);
    }
    Ok(())
}

pub(super) fn serve(args: ServeArgs, geometry: ScreenGeometry) -> Result<(), CliError> {
    let config = pipeline_config(&args, geometry)?;
    // fail before binding when the parameters are unusable
    Pipeline::new(config.clone()).map_err(data)?;

    if let Some(addr) = &args.listen {
        return accept_loop(addr, args.once, "tcp", move |s| {
            tcp_session(s, config.clone()).map_err(|e| e.to_string())
        });
    }
    if let Some(addr) = &args.ws {
        return accept_loop(addr, args.once, "ws", move |s| ws_session(s, config.clone()));
    }
    let stdin = io::stdin();
    let stdout = io::stdout();
    serve_lines(stdin.lock(), stdout.lock(), config).map_err(data)?;
    Ok(())
}
