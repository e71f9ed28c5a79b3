//! Stand-in external scorer for protocol tests and demos.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::net::TcpListener;
use std::path::PathBuf;

use clap::Parser;
use serde_json::Value;

use certainty::lexicon::Lexicon;
use certainty::scoring::stub::respond;

#[derive(Parser, Debug)]
#[command(name = "certainty-stub-scorer", version, about = "Line-delimited JSON scorer stub")]
struct Args {
    /// Listen on this address instead of serving stdin/stdout. The bound
    /// address is printed to stdout as `listening <addr>`.
    #[arg(long)]
    tcp: Option<String>,
    /// Serve this many connections, then exit (tcp mode).
    #[arg(long, default_value_t = 1)]
    connections: usize,
    /// Buffer this many requests and answer each batch in reverse order. A
    /// trailing partial batch is answered only at end of input.
    #[arg(long, default_value_t = 1)]
    reverse_window: usize,
    /// Append every request line received to this file.
    #[arg(long)]
    record: Option<PathBuf>,
    /// Report this sentence certainty for every request.
    #[arg(long)]
    fixed_certainty: Option<f64>,
    /// Remove this aspect key from every response.
    #[arg(long)]
    drop_aspect: Option<String>,
    /// Prefix every response id with `x-`.
    #[arg(long)]
    wrong_id: bool,
    /// Stop answering (but keep reading) after this many responses.
    #[arg(long)]
    stall_after: Option<usize>,
    /// Hedge lexicon file; defaults to the shipped list.
    #[arg(long)]
    hedge_lexicon: Option<PathBuf>,
}

struct Server {
    args: Args,
    hedges: Lexicon,
    answered: usize,
    record: Option<std::fs::File>,
}

impl Server {
    fn answer(&mut self, line: &str) -> Option<String> {
        if self.args.stall_after.is_some_and(|n| self.answered >= n) {
            return None;
        }
        self.answered += 1;
        let out = respond(line, &self.hedges);
        let needs_edit = self.args.fixed_certainty.is_some() || self.args.drop_aspect.is_some() || self.args.wrong_id;
        if !needs_edit {
            return Some(out);
        }
        let mut v: Value = serde_json::from_str(&out).expect("stub output is json");
        if v.get("error").is_none() {
            if let Some(c) = self.args.fixed_certainty {
                v["sentence_certainty"] = c.into();
            }
            if let Some(key) = &self.args.drop_aspect {
                v["aspects"].as_object_mut().map(|m| m.remove(key));
            }
            if self.args.wrong_id {
                v["id"] = format!("x-{}", v["id"].as_str().unwrap_or_default()).into();
            }
        }
        Some(v.to_string())
    }

    fn serve(&mut self, reader: impl BufRead, mut writer: impl Write) -> std::io::Result<()> {
        let window = self.args.reverse_window.max(1);
        let mut pending: Vec<String> = Vec::new();
        for line in reader.lines() {
            let line = line?;
            if let Some(f) = self.record.as_mut() {
                writeln!(f, "{line}")?;
            }
            if line.trim().is_empty() {
                continue;
            }
            pending.push(line);
            if pending.len() >= window {
                self.flush(&mut pending, &mut writer)?;
            }
        }
        self.flush(&mut pending, &mut writer)
    }

    fn flush(&mut self, pending: &mut Vec<String>, writer: &mut impl Write) -> std::io::Result<()> {
        for line in pending.drain(..).rev().collect::<Vec<_>>() {
            if let Some(out) = self.answer(&line) {
                writeln!(writer, "{out}")?;
            }
        }
        writer.flush()
    }
}

fn main() {
    let args = Args::parse();
    let hedges = match &args.hedge_lexicon {
        Some(p) => Lexicon::from_file(p, Default::default()).unwrap_or_else(|e| {
            eprintln!("{e}");
            std::process::exit(2);
        }),
        None => Lexicon::default_hedges(),
    };
    let record = args.record.as_ref().map(|p| {
        std::fs::OpenOptions::new().create(true).append(true).open(p).unwrap_or_else(|e| {
            eprintln!("cannot open {}: {e}", p.display());
            std::process::exit(2);
        })
    });
    let tcp = args.tcp.clone();
    let connections = args.connections;
    let mut server = Server { args, hedges, answered: 0, record };

    let result = match tcp {
        None => {
            let stdin = std::io::stdin();
            server.serve(stdin.lock(), BufWriter::new(std::io::stdout().lock()))
        }
        Some(addr) => (|| {
            let listener = TcpListener::bind(&addr)?;
            println!("listening {}", listener.local_addr()?);
            std::io::stdout().flush()?;
            for stream in listener.incoming().take(connections) {
                let stream = stream?;
                let reader = BufReader::new(stream.try_clone()?);
                server.serve(reader, BufWriter::new(stream))?;
            }
            Ok(())
        })(),
    };
    if let Err(e) = result {
        if e.kind() != std::io::ErrorKind::BrokenPipe {
            eprintln!("stub scorer: {e}");
            std::process::exit(1);
        }
    }
}
